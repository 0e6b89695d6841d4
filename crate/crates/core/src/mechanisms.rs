//! VCG payments under pluggable pivot rules.
//!
//! Every mechanism here allocates efficiently and charges agent `i`
//!
//! ```text
//! p_i = h_i(v_-i) - sum_{j != i} v_j(Opt_j)
//! ```
//!
//! where the pivot `h_i` is supplied by a [`PivotRule`] and must not read
//! agent `i`'s own valuation row.

use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{top_sum, Allocation, Instance};
use crate::matching::{opt_excluding, social_optimum, OptResult};
use crate::rational::Rat;
use crate::valuation::{Subadditive2x2Valuation, Valuation};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MechanismOutcome {
    pub allocation: Allocation,
    pub payments: Vec<Rat>,
    pub pivot_rule_id: String,
    pub pivot_values: Vec<Rat>,
}

impl MechanismOutcome {
    /// Truthful quasi-linear utilities `v_i(a_i) - p_i`.
    pub fn utilities<V: Valuation>(&self, valuations: &[V]) -> Vec<Rat> {
        valuations
            .iter()
            .enumerate()
            .map(|(i, v)| v.value(self.allocation.bundle(i)) - &self.payments[i])
            .collect()
    }
}

/// The pivot family `{h_i}` of a VCG mechanism.
pub trait PivotRule: Sync {
    fn id(&self) -> &str;

    /// Rejects instances the rule is not defined on.
    fn check_shape(&self, instance: &Instance) -> Result<()>;

    /// `h_i(v_-i)`. Implementations must ignore `instance.values[agent]`.
    fn pivot(&self, instance: &Instance, agent: usize) -> Result<Rat>;
}

/// `h_i` = optimal welfare without agent `i`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Clarke;

/// Two agents: with `c_1 <= c_2`, `h_1` sums the top `c_1` entries of
/// `v_2` and `h_2` sums the top `c_1` entries of `v_1`.
#[derive(Debug, Clone, Copy, Default)]
pub struct TwoAgentTopC;

/// Two agents and two goods: `h_i` is the other agent's best single good
/// (zero when the other agent has capacity zero).
#[derive(Debug, Clone, Copy, Default)]
pub struct MaxSingleton2x2;

impl PivotRule for Clarke {
    fn id(&self) -> &str {
        "clarke"
    }

    fn check_shape(&self, _instance: &Instance) -> Result<()> {
        Ok(())
    }

    fn pivot(&self, instance: &Instance, agent: usize) -> Result<Rat> {
        clarke_pivot(instance, agent)
    }
}

fn shape_error(rule: &str, reason: impl Into<String>) -> Error {
    Error::RuleShape {
        rule: rule.to_string(),
        reason: reason.into(),
    }
}

fn require_unit_supply(rule: &str, instance: &Instance) -> Result<()> {
    if instance.supplies.iter().any(|&q| q != 1) {
        return Err(shape_error(rule, "requires unit supplies"));
    }
    Ok(())
}

/// The agent playing the smaller-capacity role; ties go to agent 0.
fn small_agent(instance: &Instance) -> usize {
    if instance.capacities[0] <= instance.capacities[1] {
        0
    } else {
        1
    }
}

impl PivotRule for TwoAgentTopC {
    fn id(&self) -> &str {
        "topc"
    }

    fn check_shape(&self, instance: &Instance) -> Result<()> {
        if instance.n_agents() != 2 {
            return Err(shape_error(
                self.id(),
                format!("requires 2 agents, got {}", instance.n_agents()),
            ));
        }
        require_unit_supply(self.id(), instance)
    }

    fn pivot(&self, instance: &Instance, agent: usize) -> Result<Rat> {
        self.check_shape(instance)?;
        instance.check_agent(agent)?;
        let small = small_agent(instance);
        let b = instance.capacities[small] as usize;
        let other = 1 - agent;
        // h_small reads v_large and h_large reads v_small: always the other row
        Ok(top_sum(&instance.values[other], b))
    }
}

impl PivotRule for MaxSingleton2x2 {
    fn id(&self) -> &str {
        "sub2x2"
    }

    fn check_shape(&self, instance: &Instance) -> Result<()> {
        if instance.n_agents() != 2 || instance.n_goods() != 2 {
            return Err(shape_error(
                self.id(),
                format!(
                    "requires 2 agents and 2 goods, got {}x{}",
                    instance.n_agents(),
                    instance.n_goods()
                ),
            ));
        }
        require_unit_supply(self.id(), instance)
    }

    fn pivot(&self, instance: &Instance, agent: usize) -> Result<Rat> {
        self.check_shape(instance)?;
        instance.check_agent(agent)?;
        let other = 1 - agent;
        Ok(capacitated_2x2_pivot(
            instance.capacities[other],
            &instance.values[other],
        ))
    }
}

/// `max(v_o1, v_o2)` for a positive-capacity opponent, else zero.
pub fn capacitated_2x2_pivot(other_capacity: u32, other_values: &[Rat]) -> Rat {
    if other_capacity == 0 {
        Rat::zero()
    } else {
        other_values[0].clone().max(other_values[1].clone())
    }
}

/// Built-in pivot rules by their command-line identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mechanism {
    Clarke,
    TopC,
    Sub2x2,
}

impl Mechanism {
    pub fn rule(self) -> &'static dyn PivotRule {
        match self {
            Mechanism::Clarke => &Clarke,
            Mechanism::TopC => &TwoAgentTopC,
            Mechanism::Sub2x2 => &MaxSingleton2x2,
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            Mechanism::Clarke => "clarke",
            Mechanism::TopC => "topc",
            Mechanism::Sub2x2 => "sub2x2",
        }
    }
}

impl FromStr for Mechanism {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "clarke" => Ok(Mechanism::Clarke),
            "topc" | "two_agent_topc" => Ok(Mechanism::TopC),
            "sub2x2" | "subadditive_2x2" => Ok(Mechanism::Sub2x2),
            other => Err(format!("unknown mechanism `{other}` (expected clarke|topc|sub2x2)")),
        }
    }
}

/// Efficient allocation plus VCG payments for `rule`.
pub fn vcg_outcome(instance: &Instance, rule: &dyn PivotRule) -> Result<MechanismOutcome> {
    instance.validate()?;
    rule.check_shape(instance)?;
    let opt = social_optimum(instance)?;
    vcg_outcome_for(instance, rule, &opt)
}

/// As [`vcg_outcome`], reusing an already computed optimum.
pub fn vcg_outcome_for(
    instance: &Instance,
    rule: &dyn PivotRule,
    opt: &OptResult,
) -> Result<MechanismOutcome> {
    let n = instance.n_agents();
    let own: Vec<Rat> = (0..n)
        .map(|i| instance.valuation(i).value(opt.allocation.bundle(i)))
        .collect();
    let total: Rat = own.iter().sum();
    let mut payments = Vec::with_capacity(n);
    let mut pivot_values = Vec::with_capacity(n);
    for i in 0..n {
        let h = rule.pivot(instance, i)?;
        let others = &total - &own[i];
        payments.push(&h - &others);
        pivot_values.push(h);
    }
    Ok(MechanismOutcome {
        allocation: opt.allocation.clone(),
        payments,
        pivot_rule_id: rule.id().to_string(),
        pivot_values,
    })
}

/// `h_i = v(Opt^{-i})`, the best welfare the other agents reach alone.
pub fn clarke_pivot(instance: &Instance, agent: usize) -> Result<Rat> {
    Ok(opt_excluding(instance, agent)?.welfare)
}

pub fn two_agent_topc(instance: &Instance) -> Result<MechanismOutcome> {
    vcg_outcome(instance, &TwoAgentTopC)
}

/// VCG with max-singleton pivots for two agents with arbitrary subadditive
/// valuations over two goods.
///
/// The allocation maximizes total value over the nine assignments of the
/// goods to {nobody, agent 1, agent 2}; among equal-welfare assignments the
/// first in that enumeration order wins, so unneeded goods stay unallocated
/// and lower agent indices are preferred.
pub fn subadditive_2x2(
    agent1: &Subadditive2x2Valuation,
    agent2: &Subadditive2x2Valuation,
) -> MechanismOutcome {
    let vals = [agent1, agent2];
    let mut best: Option<(Rat, Allocation)> = None;
    for owner_a in 0..3usize {
        for owner_b in 0..3usize {
            let mut alloc = Allocation::empty(2, 2);
            if owner_a > 0 {
                alloc.units[owner_a - 1][0] = 1;
            }
            if owner_b > 0 {
                alloc.units[owner_b - 1][1] = 1;
            }
            let w: Rat = (0..2).map(|i| vals[i].value(alloc.bundle(i))).sum();
            if best.as_ref().is_none_or(|(b, _)| w > *b) {
                best = Some((w, alloc));
            }
        }
    }
    let (_, allocation) = best.expect("nine candidates");
    let pivot_values = vec![agent2.max_single(), agent1.max_single()];
    let payments = (0..2)
        .map(|i| &pivot_values[i] - &vals[1 - i].value(allocation.bundle(1 - i)))
        .collect();
    MechanismOutcome {
        allocation,
        payments,
        pivot_rule_id: "sub2x2".into(),
        pivot_values,
    }
}
