//! Efficient allocation of the two-agent fixture, checked against brute force.

use capvcg::{brute_force_optimum, load, social_optimum};

fn main() -> capvcg::Result<()> {
    let inst = load(include_bytes!("../fixtures/example1.json"))?;
    let opt = social_optimum(&inst)?;
    println!("allocation {:?}", opt.allocation.units);
    println!("welfare {} (brute force {})", opt.welfare, brute_force_optimum(&inst)?.welfare);
    Ok(())
}
