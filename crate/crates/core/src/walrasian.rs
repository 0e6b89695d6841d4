//! Walrasian item prices for capacitated markets.
//!
//! Given an efficient allocation, equilibrium prices are the solutions of a
//! system of difference constraints over the good prices `p_j` and one
//! utility threshold `t_i` per agent:
//!
//! * every held unit satisfies `v_ij - p_j >= t_i`,
//! * every unit the agent could still buy satisfies `v_ij - p_j <= t_i`,
//! * `t_i >= 0`, with `t_i = 0` when the agent is below capacity,
//! * `p_j >= 0`, with `p_j = 0` when some unit of `j` is unsold.
//!
//! Shortest paths from the zero vertex give the least such prices.

use serde::Serialize;

use crate::audit::{demand_set, DEMAND_LIMIT};
use crate::chain::{ChainReport, Relation};
use crate::error::{Error, Result};
use crate::instance::{Allocation, Instance};
use crate::matching::social_optimum;
use crate::rational::Rat;
use crate::valuation::{CapacitatedValuation, Valuation};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct PriceVector(pub Vec<Rat>);

impl PriceVector {
    pub fn get(&self, good: usize) -> &Rat {
        &self.0[good]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `a_i` attains the best utility available at the prices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AgentDemand {
    pub agent: usize,
    pub bundle_utility: Rat,
    pub demand_utility: Rat,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EquilibriumCertificate {
    pub prices: PriceVector,
    pub allocation: Allocation,
    pub per_agent: Vec<AgentDemand>,
    /// Goods with unsold supply; each is priced at zero.
    pub clearing: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WalrasianViolation {
    NegativePrice {
        good: usize,
        price: Rat,
    },
    NotDemanded {
        agent: usize,
        bundle_utility: Rat,
        demand_utility: Rat,
        /// Demand at the prices, goods listed with multiplicity.
        demand: Vec<Vec<usize>>,
    },
    UnclearedGood {
        good: usize,
        price: Rat,
    },
}

/// Agent `agent`'s problem with every unit of supply as its own good.
struct UnitView {
    valuation: CapacitatedValuation,
    prices: Vec<Rat>,
    good_of: Vec<usize>,
    held: Vec<usize>,
}

fn unit_view(instance: &Instance, agent: usize, prices: &[Rat], bundle: &[u32]) -> Result<UnitView> {
    let units: usize = instance.supplies.iter().map(|&q| q as usize).sum();
    if units > DEMAND_LIMIT {
        return Err(Error::TooLarge(format!(
            "demand verification over {units} units (limit {DEMAND_LIMIT})"
        )));
    }
    let mut view = UnitView {
        valuation: CapacitatedValuation::new(instance.capacities[agent], Vec::new()),
        prices: Vec::new(),
        good_of: Vec::new(),
        held: Vec::new(),
    };
    for (j, &q) in instance.supplies.iter().enumerate() {
        for k in 0..q {
            if k < bundle[j] {
                view.held.push(view.good_of.len());
            }
            view.good_of.push(j);
            view.valuation.values.push(instance.values[agent][j].clone());
            view.prices.push(prices[j].clone());
        }
    }
    Ok(view)
}

/// Checks that every agent demands its bundle and unsold goods are free.
pub fn verify_walrasian(
    instance: &Instance,
    prices: &[Rat],
    allocation: &Allocation,
) -> Result<Result<Vec<AgentDemand>, WalrasianViolation>> {
    instance.validate()?;
    allocation.check_feasible(instance)?;
    if prices.len() != instance.n_goods() {
        return Err(Error::Dimension(format!(
            "{} prices for {} goods",
            prices.len(),
            instance.n_goods()
        )));
    }
    if let Some(j) = prices.iter().position(Rat::is_negative) {
        return Ok(Err(WalrasianViolation::NegativePrice {
            good: j,
            price: prices[j].clone(),
        }));
    }
    for (j, &q) in instance.supplies.iter().enumerate() {
        if allocation.good_total(j) < q && !prices[j].is_zero() {
            return Ok(Err(WalrasianViolation::UnclearedGood {
                good: j,
                price: prices[j].clone(),
            }));
        }
    }
    let mut per_agent = Vec::with_capacity(instance.n_agents());
    for i in 0..instance.n_agents() {
        let view = unit_view(instance, i, prices, allocation.bundle(i))?;
        let demand = demand_set(&view.valuation, &view.prices)?;
        let mut counts = vec![0u32; view.good_of.len()];
        for &u in &view.held {
            counts[u] = 1;
        }
        let cost: Rat = view.held.iter().map(|&u| &view.prices[u]).sum();
        let bundle_utility = view.valuation.value(&counts) - cost;
        if bundle_utility != demand.utility {
            return Ok(Err(WalrasianViolation::NotDemanded {
                agent: i,
                bundle_utility,
                demand_utility: demand.utility,
                demand: demand
                    .optimal_bundles
                    .iter()
                    .map(|b| b.iter().map(|&u| view.good_of[u]).collect())
                    .collect(),
            }));
        }
        per_agent.push(AgentDemand {
            agent: i,
            bundle_utility,
            demand_utility: demand.utility,
        });
    }
    Ok(Ok(per_agent))
}

/// Least Walrasian prices supporting the efficient allocation.
pub fn compute_walrasian_prices(instance: &Instance) -> Result<EquilibriumCertificate> {
    let opt = social_optimum(instance)?;
    let prices = supporting_prices(instance, &opt.allocation)?;
    match verify_walrasian(instance, &prices, &opt.allocation)? {
        Ok(per_agent) => Ok(EquilibriumCertificate {
            clearing: (0..instance.n_goods())
                .filter(|&j| opt.allocation.good_total(j) < instance.supplies[j])
                .collect(),
            prices: PriceVector(prices),
            allocation: opt.allocation,
            per_agent,
        }),
        Err(v) => Err(Error::Walrasian(format!("computed prices fail verification: {v:?}"))),
    }
}

/// Least prices under which `allocation` is an equilibrium, if any exist.
pub fn supporting_prices(instance: &Instance, allocation: &Allocation) -> Result<Vec<Rat>> {
    allocation.check_feasible(instance)?;
    let n = instance.n_agents();
    let m = instance.n_goods();
    // vertices: thresholds 0..n, negated prices n..n+m, zero n+m
    let z = n + m;
    let price = |j: usize| n + j;
    let mut arcs: Vec<(usize, usize, Rat)> = Vec::new();
    for j in 0..m {
        arcs.push((z, price(j), Rat::zero()));
        if allocation.good_total(j) < instance.supplies[j] {
            arcs.push((price(j), z, Rat::zero()));
        }
    }
    for i in 0..n {
        if instance.capacities[i] == 0 {
            continue;
        }
        arcs.push((i, z, Rat::zero()));
        if allocation.agent_total(i) < instance.capacities[i] {
            arcs.push((z, i, Rat::zero()));
        }
        for j in 0..m {
            let v = &instance.values[i][j];
            let held = allocation.units[i][j];
            if held > 0 {
                arcs.push((price(j), i, v.clone()));
            }
            if held < instance.supplies[j] {
                arcs.push((i, price(j), -v));
            }
        }
    }
    let nodes = n + m + 1;
    let mut dist: Vec<Option<Rat>> = vec![None; nodes];
    dist[z] = Some(Rat::zero());
    for round in 0..=nodes {
        let mut changed = false;
        for (from, to, w) in &arcs {
            let Some(df) = &dist[*from] else { continue };
            let cand = df + w;
            if dist[*to].as_ref().is_none_or(|d| cand < *d) {
                dist[*to] = Some(cand);
                changed = true;
            }
        }
        if !changed {
            break;
        }
        if round == nodes {
            return Err(Error::Walrasian(
                "price constraints contain a negative cycle; the allocation is not efficient".into(),
            ));
        }
    }
    Ok((0..m)
        .map(|j| -dist[price(j)].clone().expect("every price vertex is reachable from zero"))
        .collect())
}

/// The two-agent, three-good market of the Walrasian impossibility argument
/// and its variant with agent 1 reduced to `(1 - eps, 0, 0)`.
pub fn prop31_instances(epsilon: &Rat) -> Result<(Instance, Instance)> {
    if !epsilon.is_positive() || *epsilon >= Rat::one() {
        return Err(Error::Parameter(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let one = Rat::one();
    let half = epsilon * &Rat::new(1, 2);
    let row2 = vec![&one - &half, one.clone(), &one + epsilon];
    let v = Instance::unit(
        vec![2, 2],
        vec![vec![&one + epsilon, &one + epsilon, &one - epsilon], row2.clone()],
    )?;
    let v_prime = Instance::unit(
        vec![2, 2],
        vec![vec![&one - epsilon, Rat::zero(), Rat::zero()], row2],
    )?;
    Ok((v, v_prime))
}

fn mismatch(found: &Allocation, expected: &[Vec<u32>]) -> Rat {
    let diff: u32 = found
        .units
        .iter()
        .flatten()
        .zip(expected.iter().flatten())
        .map(|(a, b)| a.abs_diff(*b))
        .sum();
    Rat::from_int(diff as i64)
}

/// Replays the argument that no efficient IC mechanism can charge
/// Walrasian prices, with exact values at `epsilon`.
///
/// `x_probe`, when given, is a candidate value for `h_1(v_2)`; the report
/// records which requirement that candidate breaks.
pub fn prop31_chain(epsilon: &Rat, x_probe: Option<&Rat>) -> Result<ChainReport> {
    let (v, vp) = prop31_instances(epsilon)?;
    let eps = epsilon.clone();
    let half = &eps * &Rat::new(1, 2);
    let one = Rat::one();
    let two = Rat::from_int(2);
    let three = Rat::from_int(3);
    let mut chain = ChainReport::new();

    let opt = social_optimum(&v)?;
    chain.step(
        "Opt(v) = ({a,b},{c}): differing units",
        mismatch(&opt.allocation, &[vec![1, 1, 0], vec![0, 0, 1]]),
        Relation::Eq,
        Rat::zero(),
        "efficient allocation under v",
    );
    chain.step(
        "v(Opt(v))",
        opt.welfare.clone(),
        Relation::Eq,
        &three + &(&three * &eps),
        "welfare 3 + 3eps",
    );
    let v2_opt2 = v.valuation(1).value(opt.allocation.bundle(1));
    chain.step(
        "v_2(Opt_2(v))",
        v2_opt2.clone(),
        Relation::Eq,
        &one + &eps,
        "agent 2 keeps c",
    );
    // agent 2 has spare capacity, so a good it values above its price would be bought
    let pa_bound = v.values[1][0].clone();
    let pb_bound = v.values[1][1].clone();
    chain.step("p_a(v) lower bound", pa_bound.clone(), Relation::Eq, &one - &half, "agent 2 declines a");
    chain.step("p_b(v) lower bound", pb_bound.clone(), Relation::Eq, one.clone(), "agent 2 declines b");
    let h1_bound = &(&pa_bound + &pb_bound) + &v2_opt2;
    chain.step(
        "h_1(v_2) lower bound",
        h1_bound.clone(),
        Relation::Eq,
        &three + &half,
        "p_a + p_b = h_1(v_2) - v_2(Opt_2(v))",
    );

    let cert = compute_walrasian_prices(&v)?;
    let pa = cert.prices.get(0).clone();
    let pb = cert.prices.get(1).clone();
    chain.step("computed p_a(v)", pa.clone(), Relation::Ge, pa_bound, "least equilibrium prices");
    chain.step("computed p_b(v)", pb.clone(), Relation::Ge, pb_bound, "least equilibrium prices");
    let h1_at_v = &(&pa + &pb) + &v.valuation(1).value(cert.allocation.bundle(1));
    chain.step(
        "h_1(v_2) implied by computed prices at v",
        h1_at_v.clone(),
        Relation::Ge,
        h1_bound.clone(),
        "consistent with the bound",
    );

    let opt_p = social_optimum(&vp)?;
    chain.step(
        "Opt(v') = ({a},{b,c}): differing units",
        mismatch(&opt_p.allocation, &[vec![1, 0, 0], vec![0, 1, 1]]),
        Relation::Eq,
        Rat::zero(),
        "efficient allocation under v'",
    );
    chain.step(
        "v'_2 differs from v_2 in entries",
        Rat::from_int(v.values[1].iter().zip(&vp.values[1]).filter(|(a, b)| a != b).count() as i64),
        Relation::Eq,
        Rat::zero(),
        "h_1 sees the same report",
    );
    let v2p_opt2 = vp.valuation(1).value(opt_p.allocation.bundle(1));
    chain.step("v'_2(Opt_2(v'))", v2p_opt2.clone(), Relation::Eq, &two + &eps, "agent 2 keeps b and c");
    let p1_bound = &h1_bound - &v2p_opt2;
    chain.step(
        "p_1(v') lower bound",
        p1_bound.clone(),
        Relation::Eq,
        &one - &half,
        "p_1(v') = h_1(v_2) - v'_2(Opt_2(v'))",
    );
    let value_a = vp.values[0][0].clone();
    chain.step(
        "p_a(v') = p_1(v') exceeds v'_1(a)",
        p1_bound.clone(),
        Relation::Gt,
        value_a.clone(),
        "individual rationality fails",
    );
    chain.step(
        "contradiction margin",
        &p1_bound - &value_a,
        Relation::Eq,
        half.clone(),
        "margin eps/2",
    );

    let cert_p = compute_walrasian_prices(&vp)?;
    let h1_at_vp = cert_p.prices.get(0) + &v2p_opt2;
    chain.step(
        "h_1(v_2) implied by computed prices at v'",
        h1_at_vp,
        Relation::Lt,
        h1_at_v,
        "no single h_1(v_2) fits both markets",
    );

    if let Some(x) = x_probe {
        let need_v = &three + &half;
        if *x >= need_v {
            chain.step(
                "probe: p_1(v') = x - v'_2(Opt_2(v'))",
                x - &v2p_opt2,
                Relation::Gt,
                value_a,
                "probe breaks individual rationality at v'",
            );
        } else {
            chain.step(
                "probe: x",
                x.clone(),
                Relation::Lt,
                need_v,
                "probe breaks Walrasian prices at v",
            );
        }
    }
    Ok(chain)
}
