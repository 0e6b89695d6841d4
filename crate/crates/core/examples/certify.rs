//! No-envy flow certificates for every pair with c_hi >= c_lo.

use capvcg::flowcert::build_d_minus2;
use capvcg::{Instance, Rat};

fn main() -> capvcg::Result<()> {
    let r = Rat::from_int;
    let inst = Instance::unit(
        vec![2, 1, 1],
        vec![vec![r(4), r(3), Rat::new(5, 2)], vec![r(5), r(1), r(2)], vec![r(1), r(4), r(3)]],
    )?;
    for hi in 0..inst.n_agents() {
        for lo in 0..inst.n_agents() {
            if hi == lo || inst.capacities[hi] < inst.capacities[lo] {
                continue;
            }
            let cert = build_d_minus2(&inst, hi, lo)?;
            println!(
                "({hi}, {lo}): v(M^-lo) = {} >= v(D) = {} >= {}",
                cert.without_lo, cert.value, cert.bound
            );
        }
    }
    Ok(())
}
