//! Two markets that no single pivot value can price consistently.

use capvcg::walrasian::{compute_walrasian_prices, prop31_chain, prop31_instances};
use capvcg::Rat;

fn main() -> capvcg::Result<()> {
    let eps = Rat::new(1, 5);
    println!("{}", prop31_chain(&eps, None)?);
    let (v, vp) = prop31_instances(&eps)?;
    println!("prices at v  {:?}", compute_walrasian_prices(&v)?.prices.0);
    println!("prices at v' {:?}", compute_walrasian_prices(&vp)?.prices.0);
    Ok(())
}
