//! Payments under each built-in pivot rule on the same instance.

use capvcg::audit::envy_check;
use capvcg::{load, vcg_outcome, Mechanism};

fn main() -> capvcg::Result<()> {
    let inst = load(include_bytes!("../fixtures/example1.json"))?;
    for mech in [Mechanism::Clarke, Mechanism::TopC, Mechanism::Sub2x2] {
        let out = vcg_outcome(&inst, mech.rule())?;
        let payments: Vec<String> = out.payments.iter().map(ToString::to_string).collect();
        println!("{:>7}: payments [{}], envy pairs {}", mech.id(), payments.join(", "), envy_check(&inst, &out).len());
    }
    Ok(())
}
