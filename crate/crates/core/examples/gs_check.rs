//! Gross-substitutes check on a capacitated valuation and on a complements valuation.

use capvcg::audit::gross_substitutes_check;
use capvcg::{CapacitatedValuation, Rat, SetFunction};

fn main() -> capvcg::Result<()> {
    let r = Rat::new;
    let pairs = vec![
        (vec![r(1, 4), r(1, 4)], vec![r(1, 4), r(2, 1)]),
        (vec![r(0, 1), r(1, 2)], vec![r(1, 1), r(1, 2)]),
    ];
    let capped = CapacitatedValuation::new(1, vec![r(1, 1), r(3, 4)]);
    println!("capacitated: {:?}", gross_substitutes_check(&capped, &pairs)?);
    let complements = SetFunction::new(2, vec![r(0, 1), r(0, 1), r(0, 1), r(1, 1)])?;
    println!("complements: {:?}", gross_substitutes_check(&complements, &pairs)?);
    Ok(())
}
