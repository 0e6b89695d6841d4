//! Exact property checks over mechanism outcomes.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{Allocation, Instance};
use crate::mechanisms::{vcg_outcome, MechanismOutcome, PivotRule};
use crate::rational::Rat;
use crate::valuation::Valuation;

/// Largest good count the demand oracle enumerates.
pub const DEMAND_LIMIT: usize = 15;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EnvyPair {
    pub envier: usize,
    pub envied: usize,
    pub margin: Rat,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IrViolation {
    pub agent: usize,
    pub deficit: Rat,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NptViolation {
    pub agent: usize,
    pub payment: Rat,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IcWitness {
    pub agent: usize,
    pub deviation: Vec<Rat>,
    pub gain: Rat,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct AuditReport {
    pub envy_pairs: Vec<EnvyPair>,
    pub ir_violations: Vec<IrViolation>,
    pub npt_violations: Vec<NptViolation>,
    pub ic_witnesses: Vec<IcWitness>,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.envy_pairs.is_empty()
            && self.ir_violations.is_empty()
            && self.npt_violations.is_empty()
            && self.ic_witnesses.is_empty()
    }
}

fn check_outcome(instance: &Instance, outcome: &MechanismOutcome) -> Result<()> {
    outcome.allocation.check_shape(instance)?;
    if outcome.payments.len() != instance.n_agents() {
        return Err(Error::Dimension(format!(
            "{} payments for {} agents",
            outcome.payments.len(),
            instance.n_agents()
        )));
    }
    Ok(())
}

/// Envy, IR and NPT in one pass. IC needs deviations; see [`ic_probe`].
pub fn audit(instance: &Instance, outcome: &MechanismOutcome) -> Result<AuditReport> {
    check_outcome(instance, outcome)?;
    Ok(AuditReport {
        envy_pairs: envy_check(instance, outcome),
        ir_violations: ir_check(instance, outcome),
        npt_violations: npt_check(outcome),
        ic_witnesses: Vec::new(),
    })
}

/// Pairs `(i, j)` with `v_i(a_j) - p_j > v_i(a_i) - p_i`.
pub fn envy_check(instance: &Instance, outcome: &MechanismOutcome) -> Vec<EnvyPair> {
    envy_pairs(&instance.valuations(), &outcome.allocation, &outcome.payments)
}

pub fn envy_pairs<V: Valuation>(
    valuations: &[V],
    allocation: &Allocation,
    payments: &[Rat],
) -> Vec<EnvyPair> {
    let mut pairs = Vec::new();
    for (i, v) in valuations.iter().enumerate() {
        let own = v.value(allocation.bundle(i)) - &payments[i];
        for j in 0..valuations.len() {
            if i == j {
                continue;
            }
            let other = v.value(allocation.bundle(j)) - &payments[j];
            if other > own {
                pairs.push(EnvyPair {
                    envier: i,
                    envied: j,
                    margin: other - &own,
                });
            }
        }
    }
    pairs
}

pub fn ir_check(instance: &Instance, outcome: &MechanismOutcome) -> Vec<IrViolation> {
    ir_violations(&instance.valuations(), &outcome.allocation, &outcome.payments)
}

pub fn ir_violations<V: Valuation>(
    valuations: &[V],
    allocation: &Allocation,
    payments: &[Rat],
) -> Vec<IrViolation> {
    valuations
        .iter()
        .enumerate()
        .filter_map(|(i, v)| {
            let u = v.value(allocation.bundle(i)) - &payments[i];
            u.is_negative().then(|| IrViolation {
                agent: i,
                deficit: -u,
            })
        })
        .collect()
}

pub fn npt_check(outcome: &MechanismOutcome) -> Vec<NptViolation> {
    outcome
        .payments
        .iter()
        .enumerate()
        .filter(|(_, p)| p.is_negative())
        .map(|(agent, p)| NptViolation {
            agent,
            payment: p.clone(),
        })
        .collect()
}

/// Runs `rule` with row `agent` replaced by each deviation and reports
/// every deviation that beats truthful reporting under the true valuation.
pub fn ic_probe(
    instance: &Instance,
    rule: &dyn PivotRule,
    agent: usize,
    deviations: &[Vec<Rat>],
) -> Result<Vec<IcWitness>> {
    instance.check_agent(agent)?;
    let truth = instance.valuation(agent);
    let truthful = vcg_outcome(instance, rule)?;
    let base = truth.value(truthful.allocation.bundle(agent)) - &truthful.payments[agent];
    let mut witnesses = Vec::new();
    for row in deviations {
        if row.len() != instance.n_goods() {
            return Err(Error::Dimension(format!(
                "deviation row has {} entries, instance has {} goods",
                row.len(),
                instance.n_goods()
            )));
        }
        let lied = vcg_outcome(&instance.with_row(agent, row.clone()), rule)?;
        let u = truth.value(lied.allocation.bundle(agent)) - &lied.payments[agent];
        if u > base {
            witnesses.push(IcWitness {
                agent,
                deviation: row.clone(),
                gain: u - &base,
            });
        }
    }
    Ok(witnesses)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DemandSet {
    pub prices: Vec<Rat>,
    /// Optimal bundles as sorted good lists, in increasing bitmask order.
    pub optimal_bundles: Vec<Vec<usize>>,
    pub utility: Rat,
}

impl DemandSet {
    pub fn contains(&self, goods: &[usize]) -> bool {
        let mut g = goods.to_vec();
        g.sort_unstable();
        self.optimal_bundles.contains(&g)
    }
}

/// `D(p) = argmax_S v(S) - sum_{j in S} p_j` by enumerating every subset.
pub fn demand_set<V: Valuation + ?Sized>(valuation: &V, prices: &[Rat]) -> Result<DemandSet> {
    let m = valuation.num_goods();
    if prices.len() != m {
        return Err(Error::Dimension(format!(
            "{} prices for {m} goods",
            prices.len()
        )));
    }
    if m > DEMAND_LIMIT {
        return Err(Error::TooLarge(format!(
            "demand enumeration over {m} goods (limit {DEMAND_LIMIT})"
        )));
    }
    let mut best: Option<Rat> = None;
    let mut bundles = Vec::new();
    let mut counts = vec![0u32; m];
    for mask in 0usize..1 << m {
        let mut cost = Rat::zero();
        for (j, c) in counts.iter_mut().enumerate() {
            *c = ((mask >> j) & 1) as u32;
            if *c == 1 {
                cost += &prices[j];
            }
        }
        let u = valuation.value(&counts) - cost;
        match &best {
            Some(b) if u < *b => {}
            Some(b) if u == *b => bundles.push(mask),
            _ => {
                best = Some(u);
                bundles.clear();
                bundles.push(mask);
            }
        }
    }
    Ok(DemandSet {
        prices: prices.to_vec(),
        optimal_bundles: bundles
            .into_iter()
            .map(|mask| (0..m).filter(|j| mask >> j & 1 == 1).collect())
            .collect(),
        utility: best.expect("the empty bundle is always enumerated"),
    })
}

/// A failure of the gross substitutes condition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GsCounterexample {
    pub pair_index: usize,
    pub p: Vec<Rat>,
    pub q: Vec<Rat>,
    /// The bundle in `D(p)` no bundle of `D(q)` covers on `E(p, q)`.
    pub bundle: Vec<usize>,
    pub unchanged: Vec<usize>,
    pub demand_q: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum GsVerdict {
    Ok,
    Counterexample(GsCounterexample),
}

/// For each `(p, q)` with `q >= p`, every `S in D(p)` must have some
/// `T in D(q)` with `S ∩ E ⊆ T ∩ E`, where `E = {j : p_j = q_j}`.
pub fn gross_substitutes_check<V: Valuation + ?Sized>(
    valuation: &V,
    price_pairs: &[(Vec<Rat>, Vec<Rat>)],
) -> Result<GsVerdict> {
    let m = valuation.num_goods();
    for (index, (p, q)) in price_pairs.iter().enumerate() {
        if p.len() != m || q.len() != m {
            return Err(Error::MalformedPricePair {
                index,
                reason: format!("expected {m} prices, got {} and {}", p.len(), q.len()),
            });
        }
        if let Some(j) = (0..m).find(|&j| q[j] < p[j]) {
            return Err(Error::MalformedPricePair {
                index,
                reason: format!("q[{j}] = {} is below p[{j}] = {}", q[j], p[j]),
            });
        }
    }
    for (index, (p, q)) in price_pairs.iter().enumerate() {
        let dp = demand_set(valuation, p)?;
        let dq = demand_set(valuation, q)?;
        let unchanged: Vec<usize> = (0..m).filter(|&j| p[j] == q[j]).collect();
        for s in &dp.optimal_bundles {
            let kept: Vec<usize> = s.iter().copied().filter(|j| unchanged.contains(j)).collect();
            let covered = dq
                .optimal_bundles
                .iter()
                .any(|t| kept.iter().all(|j| t.contains(j)));
            if !covered {
                return Ok(GsVerdict::Counterexample(GsCounterexample {
                    pair_index: index,
                    p: p.clone(),
                    q: q.clone(),
                    bundle: s.clone(),
                    unchanged,
                    demand_q: dq.optimal_bundles,
                }));
            }
        }
    }
    Ok(GsVerdict::Ok)
}

/// Vertex of the envy-free payment constraint graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PaymentNode {
    Agent(usize),
    /// The reference point for the absolute IR/NPT bounds.
    Zero,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum EfFeasibility {
    Feasible {
        payments: Vec<Rat>,
    },
    /// Constraints along the cycle add up to `weight < 0`.
    Infeasible {
        cycle: Vec<PaymentNode>,
        weight: Rat,
    },
}

/// Decides whether some payment vector makes `allocation` envy-free,
/// optionally also individually rational and without positive transfers.
///
/// Each constraint `x_a - x_b <= w` becomes an arc `b -> a` of weight `w`;
/// Bellman-Ford from a virtual root either yields a solution or a negative
/// cycle.
pub fn ef_payment_feasible(
    instance: &Instance,
    allocation: &Allocation,
    require_ir: bool,
    require_npt: bool,
) -> Result<EfFeasibility> {
    allocation.check_shape(instance)?;
    let n = instance.n_agents();
    let z = n;
    let vals = instance.valuations();
    let own: Vec<Rat> = (0..n).map(|i| vals[i].value(allocation.bundle(i))).collect();
    let mut arcs: Vec<(usize, usize, Rat)> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                // p_i - p_j <= v_i(a_i) - v_i(a_j)
                arcs.push((j, i, &own[i] - &vals[i].value(allocation.bundle(j))));
            }
        }
        if require_ir {
            arcs.push((z, i, own[i].clone()));
        }
        if require_npt {
            arcs.push((i, z, Rat::zero()));
        }
    }
    let nodes = n + 1;
    let mut dist = vec![Rat::zero(); nodes];
    let mut pred: Vec<Option<usize>> = vec![None; nodes];
    let mut changed_at = None;
    for _ in 0..nodes {
        changed_at = None;
        for (from, to, w) in &arcs {
            let cand = &dist[*from] + w;
            if cand < dist[*to] {
                dist[*to] = cand;
                pred[*to] = Some(*from);
                changed_at = Some(*to);
            }
        }
        if changed_at.is_none() {
            break;
        }
    }
    let node = |k: usize| {
        if k == z {
            PaymentNode::Zero
        } else {
            PaymentNode::Agent(k)
        }
    };
    match changed_at {
        None => Ok(EfFeasibility::Feasible {
            payments: (0..n).map(|i| &dist[i] - &dist[z]).collect(),
        }),
        Some(mut v) => {
            for _ in 0..nodes {
                v = pred[v].expect("relaxed vertex has a predecessor");
            }
            let mut cycle = vec![v];
            let mut u = pred[v].expect("cycle vertex has a predecessor");
            while u != v {
                cycle.push(u);
                u = pred[u].expect("cycle vertex has a predecessor");
            }
            cycle.reverse();
            let weight = (0..cycle.len())
                .map(|k| {
                    let (a, b) = (cycle[k], cycle[(k + 1) % cycle.len()]);
                    arcs.iter()
                        .filter(|(f, t, _)| *f == a && *t == b)
                        .map(|(_, _, w)| w.clone())
                        .min()
                        .expect("cycle arc exists")
                })
                .sum();
            Ok(EfFeasibility::Infeasible {
                cycle: cycle.into_iter().map(node).collect(),
                weight,
            })
        }
    }
}
