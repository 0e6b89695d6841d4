//! Winner determination as maximum-weight b-matching.
//!
//! The solver runs successive shortest augmenting paths on the network
//! `source -> agent (cap c_i) -> good (weight v_ij) -> sink (cap q_j)` and
//! stops as soon as the best augmenting path has non-positive marginal
//! value. Costs are the instance values rescaled to a common denominator, so
//! the search runs on integers; `i128` when the magnitudes allow it and
//! `BigInt` otherwise.

use std::ops::{Add, Neg};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{Allocation, Instance};
use crate::rational::Rat;

/// An optimal allocation, for the full instance or with one agent removed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OptResult {
    pub allocation: Allocation,
    pub welfare: Rat,
    pub excluded_agent: Option<usize>,
}

/// Values of the instance as integers over a common denominator.
pub(crate) struct Scaled {
    pub numerators: Vec<Vec<BigInt>>,
}

pub(crate) fn scale(instance: &Instance) -> Scaled {
    let mut lcm = BigInt::one();
    for v in instance.values.iter().flatten() {
        lcm = lcm.lcm(v.denom());
    }
    let numerators = instance
        .values
        .iter()
        .map(|row| {
            row.iter()
                .map(|v| v.numer() * (&lcm / v.denom()))
                .collect()
        })
        .collect();
    Scaled { numerators }
}

pub fn social_optimum(instance: &Instance) -> Result<OptResult> {
    instance.validate()?;
    let allocation = solve(instance);
    Ok(OptResult {
        welfare: allocation.welfare(instance),
        allocation,
        excluded_agent: None,
    })
}

/// Optimum with `agent` removed; its row of the allocation is all zeros.
pub fn opt_excluding(instance: &Instance, agent: usize) -> Result<OptResult> {
    instance.validate()?;
    instance.check_agent(agent)?;
    let reduced = instance.without_agent(agent);
    let allocation = solve(&reduced);
    Ok(OptResult {
        welfare: allocation.welfare(instance),
        allocation,
        excluded_agent: Some(agent),
    })
}

fn solve(instance: &Instance) -> Allocation {
    let scaled = scale(instance);
    let bound = (i64::MAX >> 8) as i128;
    let small: Option<Vec<Vec<i128>>> = scaled
        .numerators
        .iter()
        .map(|row| {
            row.iter()
                .map(|x| x.to_i128().filter(|v| v.abs() <= bound))
                .collect()
        })
        .collect();
    match small {
        Some(w) => FlowNetwork::build(instance, &w).run(),
        None => FlowNetwork::build(instance, &scaled.numerators).run(),
    }
}

trait Cost: Clone + Ord + Zero + Add<Output = Self> + Neg<Output = Self> {}
impl<T: Clone + Ord + Zero + Add<Output = T> + Neg<Output = T>> Cost for T {}

struct Edge<T> {
    to: usize,
    rev: usize,
    cap: u32,
    cost: T,
}

struct FlowNetwork<T> {
    n_agents: usize,
    n_goods: usize,
    graph: Vec<Vec<Edge<T>>>,
    // (agent, good, node, edge index, original capacity)
    assignment_edges: Vec<(usize, usize, usize, usize, u32)>,
}

impl<T: Cost> FlowNetwork<T> {
    fn build(instance: &Instance, weights: &[Vec<T>]) -> Self {
        let n = instance.n_agents();
        let m = instance.n_goods();
        let mut net = FlowNetwork {
            n_agents: n,
            n_goods: m,
            graph: (0..n + m + 2).map(|_| Vec::new()).collect(),
            assignment_edges: Vec::new(),
        };
        let source = 0;
        let sink = n + m + 1;
        for (i, &c) in instance.capacities.iter().enumerate() {
            if c > 0 {
                net.add_edge(source, 1 + i, c, T::zero());
            }
        }
        for i in 0..n {
            let c = instance.capacities[i];
            if c == 0 {
                continue;
            }
            for j in 0..m {
                // zero-value edges never carry flow
                if weights[i][j] > T::zero() {
                    let cap = c.min(instance.supplies[j]);
                    let idx = net.add_edge(1 + i, 1 + n + j, cap, -weights[i][j].clone());
                    net.assignment_edges.push((i, j, 1 + i, idx, cap));
                }
            }
        }
        for (j, &q) in instance.supplies.iter().enumerate() {
            net.add_edge(1 + n + j, sink, q, T::zero());
        }
        net
    }

    fn add_edge(&mut self, from: usize, to: usize, cap: u32, cost: T) -> usize {
        let fwd = self.graph[from].len();
        let bwd = self.graph[to].len() + usize::from(from == to);
        self.graph[from].push(Edge {
            to,
            rev: bwd,
            cap,
            cost: cost.clone(),
        });
        self.graph[to].push(Edge {
            to: from,
            rev: fwd,
            cap: 0,
            cost: -cost,
        });
        fwd
    }

    /// Bellman-Ford from the source. Relaxation order is node index then
    /// edge insertion order, and only strict improvements replace a label.
    fn shortest_paths(&self) -> (Vec<Option<T>>, Vec<Option<(usize, usize)>>) {
        let v = self.graph.len();
        let mut dist: Vec<Option<T>> = vec![None; v];
        let mut prev = vec![None; v];
        dist[0] = Some(T::zero());
        for _ in 0..v {
            let mut changed = false;
            for u in 0..v {
                let Some(du) = dist[u].clone() else { continue };
                for (k, e) in self.graph[u].iter().enumerate() {
                    if e.cap == 0 {
                        continue;
                    }
                    let nd = du.clone() + e.cost.clone();
                    if dist[e.to].as_ref().is_none_or(|d| nd < *d) {
                        dist[e.to] = Some(nd);
                        prev[e.to] = Some((u, k));
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        (dist, prev)
    }

    fn run(mut self) -> Allocation {
        let sink = self.n_agents + self.n_goods + 1;
        loop {
            let (dist, prev) = self.shortest_paths();
            match &dist[sink] {
                Some(d) if *d < T::zero() => {}
                _ => break,
            }
            let mut path = Vec::new();
            let mut node = sink;
            while node != 0 {
                let (u, k) = prev[node].expect("reachable");
                path.push((u, k));
                node = u;
            }
            let push = path
                .iter()
                .map(|&(u, k)| self.graph[u][k].cap)
                .min()
                .expect("non-empty path");
            for (u, k) in path {
                self.graph[u][k].cap -= push;
                let (to, rev) = (self.graph[u][k].to, self.graph[u][k].rev);
                self.graph[to][rev].cap += push;
            }
        }
        let mut alloc = Allocation::empty(self.n_agents, self.n_goods);
        for &(i, j, node, idx, cap) in &self.assignment_edges {
            alloc.units[i][j] = cap - self.graph[node][idx].cap;
        }
        alloc
    }
}

/// Enumeration bound for [`brute_force_optimum`].
pub const BRUTE_FORCE_LIMIT: f64 = 1e7;

/// Exhaustive search over every feasible integral allocation. Test oracle.
pub fn brute_force_optimum(instance: &Instance) -> Result<OptResult> {
    instance.validate()?;
    let n = instance.n_agents();
    let m = instance.n_goods();
    let states: f64 = instance
        .supplies
        .iter()
        .map(|&q| ((n + 1) as f64).powi(q as i32))
        .product();
    if states > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge(format!(
            "{states:.0} enumeration states exceed {BRUTE_FORCE_LIMIT:.0}"
        )));
    }

    // Independent rescaling: multiply through by the product of all denominators.
    let mut common = BigInt::one();
    for v in instance.values.iter().flatten() {
        if !(&common % v.denom()).is_zero() {
            common *= v.denom();
        }
    }
    let weights: Vec<Vec<i128>> = instance
        .values
        .iter()
        .map(|row| {
            row.iter()
                .map(|v| {
                    (v.numer() * &common / v.denom())
                        .to_i128()
                        .filter(|x| x.abs() < (1i128 << 100))
                        .ok_or_else(|| Error::TooLarge("values too large for the oracle".into()))
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    // All ways to split the units of each good among the agents.
    let splits: Vec<Vec<Vec<u32>>> = instance
        .supplies
        .iter()
        .map(|&q| {
            let mut out = Vec::new();
            let mut cur = vec![0u32; n];
            distribute(0, q, &mut cur, &mut out);
            out
        })
        .collect();

    struct Search<'a> {
        splits: &'a [Vec<Vec<u32>>],
        weights: &'a [Vec<i128>],
        remaining: Vec<u32>,
        current: Allocation,
        best: Option<(i128, Allocation)>,
    }

    fn go(s: &mut Search<'_>, good: usize, acc: i128) {
        if good == s.splits.len() {
            if s.best.as_ref().is_none_or(|(b, _)| acc > *b) {
                s.best = Some((acc, s.current.clone()));
            }
            return;
        }
        for k in 0..s.splits[good].len() {
            let split = &s.splits[good][k];
            if split.iter().zip(&s.remaining).any(|(&a, &r)| a > r) {
                continue;
            }
            let mut gain = 0i128;
            for (i, &a) in split.iter().enumerate() {
                s.remaining[i] -= a;
                s.current.units[i][good] = a;
                gain += s.weights[i][good] * a as i128;
            }
            go(s, good + 1, acc + gain);
            for (i, &a) in s.splits[good][k].iter().enumerate() {
                s.remaining[i] += a;
                s.current.units[i][good] = 0;
            }
        }
    }

    let mut search = Search {
        splits: &splits,
        weights: &weights,
        remaining: instance.capacities.clone(),
        current: Allocation::empty(n, m),
        best: None,
    };
    go(&mut search, 0, 0);
    let (_, allocation) = search.best.expect("the empty allocation is feasible");
    Ok(OptResult {
        welfare: allocation.welfare(instance),
        allocation,
        excluded_agent: None,
    })
}

fn distribute(agent: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if agent == cur.len() {
        out.push(cur.clone());
        return;
    }
    for k in 0..=left {
        cur[agent] = k;
        distribute(agent + 1, left - k, cur, out);
    }
    cur[agent] = 0;
}
