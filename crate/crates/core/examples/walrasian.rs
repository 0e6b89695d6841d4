//! Least Walrasian prices with per-agent demand certificates.

use capvcg::walrasian::{compute_walrasian_prices, verify_walrasian};
use capvcg::{Instance, Rat};

fn main() -> capvcg::Result<()> {
    let r = Rat::from_int;
    let inst = Instance::new(
        vec![2, 1, 3],
        vec![1, 2, 1],
        vec![vec![r(5), r(3), r(1)], vec![r(4), r(4), r(2)], vec![r(1), r(2), r(6)]],
    )?;
    let cert = compute_walrasian_prices(&inst)?;
    println!("prices {:?}", cert.prices.0);
    println!("allocation {:?}", cert.allocation.units);
    for a in &cert.per_agent {
        println!("agent {}: bundle utility {}, demand utility {}", a.agent, a.bundle_utility, a.demand_utility);
    }
    let check = verify_walrasian(&inst, &cert.prices.0, &cert.allocation)?;
    println!("re-verified: {}", check.is_ok());
    Ok(())
}
