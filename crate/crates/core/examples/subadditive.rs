//! Envy-free VCG for two agents and two goods with subadditive values.

use capvcg::mechanisms::subadditive_2x2;
use capvcg::{Rat, Subadditive2x2Valuation};

fn main() -> capvcg::Result<()> {
    let r = Rat::from_int;
    let v1 = Subadditive2x2Valuation::new(r(2), r(2), r(2))?;
    let v2 = Subadditive2x2Valuation::new(r(1), r(2), r(3))?;
    let out = subadditive_2x2(&v1, &v2);
    println!("allocation {:?}", out.allocation.units);
    println!("pivots {:?}, payments {:?}", out.pivot_values, out.payments);
    Ok(())
}
