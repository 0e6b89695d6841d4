//! Impossibility chain for two agents with capacities (c, c + 1).
//!
//! Usage: `cargo run --example impossibility -- [c] [x] [eps]`

use capvcg::flowcert::thm41_chain;
use capvcg::Rat;

fn main() -> capvcg::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let c = args.first().map_or(Ok(1), |s| s.parse()).expect("c is an integer");
    let x: Rat = args.get(1).map_or("1", String::as_str).parse().expect("x and eps are rationals such as 1/10");
    let eps: Rat = args.get(2).map_or("1/10", String::as_str).parse().expect("x and eps are rationals such as 1/10");
    let chain = thm41_chain(c, &x, &eps)?;
    println!("{chain}");
    Ok(())
}
