//! Envy, IR, NPT and a seeded incentive probe for the Clarke outcome.

use capvcg::audit::{audit, ic_probe};
use capvcg::fuzz::{case_rng, random_row};
use capvcg::mechanisms::Clarke;
use capvcg::{load, vcg_outcome, Rat};

fn main() -> capvcg::Result<()> {
    let inst = load(include_bytes!("../fixtures/example1.json"))?;
    let out = vcg_outcome(&inst, &Clarke)?;
    let mut report = audit(&inst, &out)?;
    for agent in 0..inst.n_agents() {
        let mut rng = case_rng(0, agent as u64);
        let rows: Vec<Vec<Rat>> = (0..20).map(|_| random_row(&mut rng, inst.n_goods())).collect();
        report.ic_witnesses.extend(ic_probe(&inst, &Clarke, agent, &rows)?);
    }
    for p in &report.envy_pairs {
        println!("agent {} envies agent {} by {}", p.envier, p.envied, p.margin);
    }
    println!("IR violations {}, NPT violations {}", report.ir_violations.len(), report.npt_violations.len());
    println!("IC witnesses {}", report.ic_witnesses.len());
    Ok(())
}
