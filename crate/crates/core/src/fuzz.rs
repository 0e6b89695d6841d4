//! Seeded random inputs and property campaigns.
//!
//! Every case draws from its own ChaCha stream keyed by `(seed, index)`, so
//! a case reproduces on its own and parallel runs match sequential ones.

use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::audit::{envy_check, envy_pairs, ir_check, ir_violations, npt_check, EnvyPair, IrViolation, NptViolation};
use crate::error::{Error, Result};
use crate::flowcert::build_d_minus2_with;
use crate::instance::Instance;
use crate::matching::social_optimum;
use crate::mechanisms::{subadditive_2x2, vcg_outcome_for, Mechanism, MechanismOutcome};
use crate::rational::Rat;
use crate::valuation::{CapacitatedValuation, Subadditive2x2Valuation};

pub fn case_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `num / den` with `num` in `0..=100` and `den` in `1..=10`.
pub fn random_value<R: Rng>(rng: &mut R) -> Rat {
    Rat::new(rng.gen_range(0..=100), rng.gen_range(1..=10))
}

pub fn random_row<R: Rng>(rng: &mut R, m: usize) -> Vec<Rat> {
    (0..m).map(|_| random_value(rng)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CapacityMode {
    /// One capacity in `1..=3` shared by every agent.
    Homo,
    /// Independent capacities in `0..=3`.
    Hetero,
}

impl FromStr for CapacityMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "homo" => Ok(CapacityMode::Homo),
            "hetero" => Ok(CapacityMode::Hetero),
            other => Err(format!("unknown capacity mode `{other}` (expected homo|hetero)")),
        }
    }
}

/// `2..=max_agents` agents (one if the bound is 1), `1..=max_goods` goods
/// with supplies in `1..=2`.
pub fn random_instance<R: Rng>(rng: &mut R, max_agents: usize, max_goods: usize, mode: CapacityMode) -> Instance {
    let n = if max_agents <= 1 { max_agents } else { rng.gen_range(2..=max_agents) };
    let m = rng.gen_range(1..=max_goods.max(1));
    let capacities = match mode {
        CapacityMode::Homo => vec![rng.gen_range(1..=3); n],
        CapacityMode::Hetero => (0..n).map(|_| rng.gen_range(0..=3)).collect(),
    };
    let supplies = (0..m).map(|_| rng.gen_range(1..=2)).collect();
    let values = (0..n).map(|_| random_row(rng, m)).collect();
    Instance::new(capacities, supplies, values).expect("generated instance is valid")
}

/// Two agents, unit supplies, `1..=max_goods` goods and capacities in
/// `0..=m + 1`.
pub fn random_two_agent<R: Rng>(rng: &mut R, max_goods: usize) -> Instance {
    let m = rng.gen_range(1..=max_goods.max(1));
    let caps = vec![rng.gen_range(0..=m as u32 + 1), rng.gen_range(0..=m as u32 + 1)];
    Instance::unit(caps, vec![random_row(rng, m), random_row(rng, m)]).expect("valid")
}

/// A subadditive, monotone two-good valuation: `v12 = max + t * min` with
/// `t` on a tenth grid.
pub fn random_subadditive<R: Rng>(rng: &mut R) -> Subadditive2x2Valuation {
    let a = random_value(rng);
    let b = random_value(rng);
    let t = Rat::new(rng.gen_range(0..=10), 10);
    let v12 = &a.clone().max(b.clone()) + &(&t * &a.clone().min(b.clone()));
    Subadditive2x2Valuation::new(a, b, v12).expect("subadditive by construction")
}

/// A two-agent, two-good capacitated instance with capacities in `0..=2`.
pub fn random_capacitated_2x2<R: Rng>(rng: &mut R) -> Instance {
    let caps = vec![rng.gen_range(0..=2), rng.gen_range(0..=2)];
    Instance::unit(caps, vec![random_row(rng, 2), random_row(rng, 2)]).expect("valid")
}

pub fn random_capacitated<R: Rng>(rng: &mut R, max_goods: usize) -> CapacitatedValuation {
    let m = rng.gen_range(1..=max_goods.max(1));
    CapacitatedValuation::new(rng.gen_range(0..=m as u32), random_row(rng, m))
}

/// `(p, q)` with `q >= p`; each good keeps its price with probability 1/2.
pub fn random_price_pair<R: Rng>(rng: &mut R, m: usize) -> (Vec<Rat>, Vec<Rat>) {
    let p = random_row(rng, m);
    let q = p
        .iter()
        .map(|pj| if rng.gen_bool(0.5) { pj.clone() } else { pj + &random_value(rng) })
        .collect();
    (p, q)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FuzzConfig {
    pub max_agents: usize,
    pub max_goods: usize,
    pub mode: CapacityMode,
    pub mechanism: Mechanism,
    pub seed: u64,
    pub count: u64,
}

/// One fuzz case. The input is recorded only when the case fails.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FuzzRecord {
    pub index: u64,
    pub pass: bool,
    pub property: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<serde_json::Value>,
    pub payments: Vec<Rat>,
    pub envy_pairs: Vec<EnvyPair>,
    pub ir_violations: Vec<IrViolation>,
    pub npt_violations: Vec<NptViolation>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub certificate_errors: Vec<String>,
}

fn record(
    index: u64,
    property: &'static str,
    outcome: &MechanismOutcome,
    envy: Vec<EnvyPair>,
    ir: Vec<IrViolation>,
    npt: Vec<NptViolation>,
    certificate_errors: Vec<String>,
    input: impl FnOnce() -> serde_json::Value,
) -> FuzzRecord {
    let pass = envy.is_empty() && ir.is_empty() && npt.is_empty() && certificate_errors.is_empty();
    FuzzRecord {
        index,
        pass,
        property,
        input: (!pass).then(input),
        payments: outcome.payments.clone(),
        envy_pairs: envy,
        ir_violations: ir,
        npt_violations: npt,
        certificate_errors,
    }
}

/// Runs case `index` of the campaign.
///
/// * clarke, homo: no envy, IR, NPT.
/// * clarke, hetero: no envy toward agents of no larger capacity, IR, NPT,
///   and a valid no-envy certificate for every such pair.
/// * topc: no envy and IR on two-agent instances.
/// * sub2x2: no envy and IR on random subadditive pairs.
pub fn run_case(config: &FuzzConfig, index: u64) -> Result<FuzzRecord> {
    let mut rng = case_rng(config.seed, index);
    match config.mechanism {
        Mechanism::Clarke => {
            let inst = random_instance(&mut rng, config.max_agents, config.max_goods, config.mode);
            let opt = social_optimum(&inst)?;
            let out = vcg_outcome_for(&inst, Mechanism::Clarke.rule(), &opt)?;
            let caps = &inst.capacities;
            let mut certs = Vec::new();
            let (envy, property) = match config.mode {
                CapacityMode::Homo => (envy_check(&inst, &out), "clarke: envy-free, IR, NPT"),
                CapacityMode::Hetero => {
                    for hi in 0..inst.n_agents() {
                        for lo in 0..inst.n_agents() {
                            if hi != lo && caps[hi] >= caps[lo] {
                                if let Err(e) = build_d_minus2_with(&inst, hi, lo, &opt) {
                                    certs.push(format!("({hi}, {lo}): {e}"));
                                }
                            }
                        }
                    }
                    let envy = envy_check(&inst, &out)
                        .into_iter()
                        .filter(|p| caps[p.envier] >= caps[p.envied])
                        .collect();
                    (envy, "clarke: no envy of lower capacity, IR, NPT, certificates")
                }
            };
            let ir = ir_check(&inst, &out);
            let npt = npt_check(&out);
            Ok(record(index, property, &out, envy, ir, npt, certs, || {
                serde_json::to_value(&inst).expect("serializable")
            }))
        }
        Mechanism::TopC => {
            let inst = random_two_agent(&mut rng, config.max_goods);
            let out = vcg_outcome_for(&inst, Mechanism::TopC.rule(), &social_optimum(&inst)?)?;
            let envy = envy_check(&inst, &out);
            let ir = ir_check(&inst, &out);
            Ok(record(index, "topc: envy-free, IR", &out, envy, ir, Vec::new(), Vec::new(), || {
                serde_json::to_value(&inst).expect("serializable")
            }))
        }
        Mechanism::Sub2x2 => {
            let vals = [random_subadditive(&mut rng), random_subadditive(&mut rng)];
            let out = subadditive_2x2(&vals[0], &vals[1]);
            let envy = envy_pairs(&vals, &out.allocation, &out.payments);
            let ir = ir_violations(&vals, &out.allocation, &out.payments);
            Ok(record(index, "sub2x2: envy-free, IR", &out, envy, ir, Vec::new(), Vec::new(), || {
                let triple = |v: &Subadditive2x2Valuation| {
                    serde_json::json!([v.single(0), v.single(1), v.pair()])
                };
                serde_json::json!({"agent1": triple(&vals[0]), "agent2": triple(&vals[1])})
            }))
        }
    }
}

/// Runs the whole campaign in parallel; records come back in index order.
pub fn run_fuzz(config: &FuzzConfig) -> Result<Vec<FuzzRecord>> {
    if config.max_agents == 0 && config.mechanism == Mechanism::Clarke {
        return Err(Error::Parameter("fuzzing needs at least one agent".into()));
    }
    (0..config.count)
        .into_par_iter()
        .map(|i| run_case(config, i))
        .collect()
}
