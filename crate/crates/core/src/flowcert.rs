//! Flow certificates for the Clarke no-envy guarantee, and the
//! positive-transfer chain for two agents with unequal capacities.
//!
//! For an efficient allocation `M` and an efficient allocation `M^-h`
//! without agent `h`, the flow-difference graph has an arc `i -> j` carrying
//! `M_ij - M^-h_ij` when positive and an arc `j -> i` carrying the negation
//! otherwise. Its path decomposition drives the construction of an
//! allocation `D` without agent `l` (for `c_h >= c_l`) whose value proves
//! that `h` does not envy `l` under Clarke payments.

use std::fmt;

use serde::Serialize;

use crate::chain::{ChainReport, Relation};
use crate::error::{Error, Result};
use crate::instance::{Allocation, Instance};
use crate::matching::{opt_excluding, social_optimum, OptResult};
use crate::rational::Rat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Vertex {
    Agent(usize),
    Good(usize),
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Vertex::Agent(i) => write!(f, "agent{i}"),
            Vertex::Good(j) => write!(f, "good{j}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FlowArc {
    pub from: Vertex,
    pub to: Vertex,
    pub flow: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FlowDiffGraph {
    pub n_agents: usize,
    pub n_goods: usize,
    pub excluded: usize,
    /// Agent-to-good arcs first (row-major), then good-to-agent arcs.
    pub arcs: Vec<FlowArc>,
    /// Net outflow, agents first and then goods.
    pub excess: Vec<i64>,
    #[serde(skip)]
    diff: Vec<Vec<i64>>,
}

impl FlowDiffGraph {
    fn index(&self, v: Vertex) -> usize {
        match v {
            Vertex::Agent(i) => i,
            Vertex::Good(j) => self.n_agents + j,
        }
    }

    pub fn excess_of(&self, v: Vertex) -> i64 {
        self.excess[self.index(v)]
    }

    /// Flow on `from -> to`, zero when the arc is absent.
    pub fn flow(&self, from: Vertex, to: Vertex) -> u32 {
        match (from, to) {
            (Vertex::Agent(i), Vertex::Good(j)) => self.diff[i][j].max(0) as u32,
            (Vertex::Good(j), Vertex::Agent(i)) => (-self.diff[i][j]).max(0) as u32,
            _ => 0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    /// Some directed cycle of the graph, if there is one.
    pub fn find_cycle(&self) -> Option<Vec<Vertex>> {
        let total = self.n_agents + self.n_goods;
        // 0 unvisited, 1 on stack, 2 done
        let mut state = vec![0u8; total];
        for root in 0..total {
            if state[root] != 0 {
                continue;
            }
            let mut stack: Vec<(Vertex, usize)> = vec![(self.vertex(root), 0)];
            state[root] = 1;
            while let Some(&mut (u, ref mut next)) = stack.last_mut() {
                let succ = self.successors(u);
                if *next >= succ.len() {
                    state[self.index(u)] = 2;
                    stack.pop();
                    continue;
                }
                let w = succ[*next];
                *next += 1;
                match state[self.index(w)] {
                    0 => {
                        state[self.index(w)] = 1;
                        stack.push((w, 0));
                    }
                    1 => {
                        let start = stack.iter().position(|(x, _)| *x == w).expect("on stack");
                        return Some(stack[start..].iter().map(|(x, _)| *x).collect());
                    }
                    _ => {}
                }
            }
        }
        None
    }

    fn vertex(&self, idx: usize) -> Vertex {
        if idx < self.n_agents {
            Vertex::Agent(idx)
        } else {
            Vertex::Good(idx - self.n_agents)
        }
    }

    fn successors(&self, u: Vertex) -> Vec<Vertex> {
        match u {
            Vertex::Agent(i) => (0..self.n_goods)
                .filter(|&j| self.diff[i][j] > 0)
                .map(Vertex::Good)
                .collect(),
            Vertex::Good(j) => (0..self.n_agents)
                .filter(|&i| self.diff[i][j] < 0)
                .map(Vertex::Agent)
                .collect(),
        }
    }
}

fn cert_err(msg: impl Into<String>) -> Error {
    Error::Certificate(msg.into())
}

/// Builds the flow-difference graph of `m` against `m_excl`, an allocation
/// that gives nothing to `excluded`.
pub fn build_flow_graph(
    instance: &Instance,
    m: &Allocation,
    m_excl: &Allocation,
    excluded: usize,
) -> Result<FlowDiffGraph> {
    instance.check_agent(excluded)?;
    m.check_feasible(instance)?;
    m_excl.check_feasible(instance)?;
    if m_excl.agent_total(excluded) != 0 {
        return Err(cert_err(format!(
            "the allocation without agent {excluded} gives it {} units",
            m_excl.agent_total(excluded)
        )));
    }
    let (n, k) = (instance.n_agents(), instance.n_goods());
    let diff: Vec<Vec<i64>> = (0..n)
        .map(|i| (0..k).map(|j| m.units[i][j] as i64 - m_excl.units[i][j] as i64).collect())
        .collect();
    let mut arcs = Vec::new();
    for (i, row) in diff.iter().enumerate() {
        for (j, &d) in row.iter().enumerate() {
            if d > 0 {
                arcs.push(FlowArc {
                    from: Vertex::Agent(i),
                    to: Vertex::Good(j),
                    flow: d as u32,
                });
            }
        }
    }
    for j in 0..k {
        for (i, row) in diff.iter().enumerate() {
            if row[j] < 0 {
                arcs.push(FlowArc {
                    from: Vertex::Good(j),
                    to: Vertex::Agent(i),
                    flow: (-row[j]) as u32,
                });
            }
        }
    }
    let mut excess: Vec<i64> = diff.iter().map(|row| row.iter().sum()).collect();
    excess.extend((0..k).map(|j| -diff.iter().map(|row| row[j]).sum::<i64>()));

    if excess.iter().sum::<i64>() != 0 {
        return Err(cert_err("excesses do not sum to zero"));
    }
    // Observation bounds: the larger side of each vertex stays within its capacity
    for i in 0..n {
        let (with, without) = (m.agent_total(i) as i64, m_excl.agent_total(i) as i64);
        let chi = excess[i];
        let (small, large) = if chi >= 0 { (without, with) } else { (with, without) };
        if small + chi.abs() != large || large > instance.capacities[i] as i64 {
            return Err(cert_err(format!("excess bound fails at agent {i}")));
        }
    }
    for j in 0..k {
        let (with, without) = (m.good_total(j) as i64, m_excl.good_total(j) as i64);
        let chi = excess[n + j];
        let (small, large) = if chi >= 0 { (with, without) } else { (without, with) };
        if small + chi.abs() != large || large > instance.supplies[j] as i64 {
            return Err(cert_err(format!("excess bound fails at good {j}")));
        }
    }
    Ok(FlowDiffGraph {
        n_agents: n,
        n_goods: k,
        excluded,
        arcs,
        excess,
        diff,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FlowPath {
    /// Visited vertices; for a cycle the first vertex is not repeated.
    pub vertices: Vec<Vertex>,
    pub flow: u32,
    pub value: Rat,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FlowDecomposition {
    pub paths: Vec<FlowPath>,
    pub cycles: Vec<FlowPath>,
}

impl FlowDecomposition {
    /// `sum_T f(T) v(T)` over paths and cycles.
    pub fn weighted_value(&self) -> Rat {
        self.paths
            .iter()
            .chain(&self.cycles)
            .map(|t| t.value.times(t.flow))
            .sum()
    }

    /// Per-arc totals of the decomposed flow.
    pub fn arc_totals(&self) -> Vec<((Vertex, Vertex), u32)> {
        let mut totals: std::collections::BTreeMap<(Vertex, Vertex), u32> = Default::default();
        for p in &self.paths {
            for w in p.vertices.windows(2) {
                *totals.entry((w[0], w[1])).or_default() += p.flow;
            }
        }
        for c in &self.cycles {
            for k in 0..c.vertices.len() {
                let arc = (c.vertices[k], c.vertices[(k + 1) % c.vertices.len()]);
                *totals.entry(arc).or_default() += c.flow;
            }
        }
        totals.into_iter().collect()
    }
}

/// Value of a walk: agent-to-good arcs add, good-to-agent arcs subtract.
fn walk_value(instance: &Instance, arcs: impl Iterator<Item = (Vertex, Vertex)>) -> Rat {
    arcs.map(|(a, b)| match (a, b) {
        (Vertex::Agent(i), Vertex::Good(j)) => instance.values[i][j].clone(),
        (Vertex::Good(j), Vertex::Agent(i)) => -&instance.values[i][j],
        _ => unreachable!("bipartite arc"),
    })
    .sum()
}

fn path_arcs(vertices: &[Vertex]) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
    vertices.windows(2).map(|w| (w[0], w[1]))
}

fn cycle_arcs(vertices: &[Vertex]) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
    (0..vertices.len()).map(move |k| (vertices[k], vertices[(k + 1) % vertices.len()]))
}

/// Deterministic path/cycle decomposition with no structural assertions.
///
/// Paths are peeled from the lowest-index source by depth-first search over
/// lowest-index neighbours, stopping at the first target reached; the
/// remaining circulation is peeled into cycles the same way.
pub fn decompose_raw(instance: &Instance, g: &FlowDiffGraph) -> Result<FlowDecomposition> {
    let mut rest = g.clone();
    let mut out = FlowDecomposition::default();
    let total = g.n_agents + g.n_goods;
    while let Some(s) = (0..total).find(|&u| rest.excess[u] > 0) {
        let source = rest.vertex(s);
        let mut parent: Vec<Option<Vertex>> = vec![None; total];
        let mut seen = vec![false; total];
        seen[s] = true;
        let mut stack = vec![source];
        let mut target = None;
        while let Some(u) = stack.pop() {
            if u != source && rest.excess_of(u) < 0 {
                target = Some(u);
                break;
            }
            // reversed so the lowest neighbour is explored first
            for w in rest.successors(u).into_iter().rev() {
                let wi = rest.index(w);
                if !seen[wi] {
                    seen[wi] = true;
                    parent[wi] = Some(u);
                    stack.push(w);
                }
            }
        }
        let t = target.ok_or_else(|| cert_err(format!("no target reachable from source {source}")))?;
        let mut vertices = vec![t];
        while let Some(p) = parent[rest.index(*vertices.last().unwrap())] {
            vertices.push(p);
        }
        vertices.reverse();
        let flow = path_arcs(&vertices)
            .map(|(a, b)| rest.flow(a, b) as i64)
            .chain([rest.excess[s], -rest.excess_of(t)])
            .min()
            .expect("nonempty") as u32;
        rest.cancel(&vertices, false, flow);
        out.paths.push(FlowPath {
            value: walk_value(instance, path_arcs(&vertices)),
            vertices,
            flow,
        });
    }
    while let Some(start) = (0..total).map(|u| rest.vertex(u)).find(|&u| !rest.successors(u).is_empty()) {
        let mut walk = vec![start];
        let cycle = loop {
            let u = *walk.last().unwrap();
            let next = *rest
                .successors(u)
                .first()
                .ok_or_else(|| cert_err(format!("flow is not conserved at {u}")))?;
            if let Some(pos) = walk.iter().position(|&x| x == next) {
                break walk.split_off(pos);
            }
            walk.push(next);
        };
        let flow = cycle_arcs(&cycle).map(|(a, b)| rest.flow(a, b)).min().expect("nonempty");
        rest.cancel(&cycle, true, flow);
        out.cycles.push(FlowPath {
            value: walk_value(instance, cycle_arcs(&cycle)),
            vertices: cycle,
            flow,
        });
    }
    Ok(out)
}

impl FlowDiffGraph {
    /// Removes `flow` along the walk from the residual graph.
    fn cancel(&mut self, vertices: &[Vertex], closed: bool, flow: u32) {
        let f = flow as i64;
        let arcs: Vec<(Vertex, Vertex)> = if closed {
            cycle_arcs(vertices).collect()
        } else {
            path_arcs(vertices).collect()
        };
        for (a, b) in arcs {
            match (a, b) {
                (Vertex::Agent(i), Vertex::Good(j)) => self.diff[i][j] -= f,
                (Vertex::Good(j), Vertex::Agent(i)) => self.diff[i][j] += f,
                _ => unreachable!("bipartite arc"),
            }
        }
        if !closed {
            let s = self.index(vertices[0]);
            let t = self.index(*vertices.last().unwrap());
            self.excess[s] -= f;
            self.excess[t] += f;
        }
    }
}

/// Decomposition of a normalized graph: no cycles, and every path starts at
/// the excluded agent.
pub fn decompose(instance: &Instance, g: &FlowDiffGraph) -> Result<FlowDecomposition> {
    let d = decompose_raw(instance, g)?;
    if let Some(c) = d.cycles.first() {
        return Err(cert_err(format!(
            "decomposition has a cycle {} of value {}",
            show(&c.vertices),
            c.value
        )));
    }
    if let Some(p) = d.paths.iter().find(|p| p.vertices[0] != Vertex::Agent(g.excluded)) {
        return Err(cert_err(format!(
            "path {} starts away from excluded agent {}",
            show(&p.vertices),
            g.excluded
        )));
    }
    Ok(d)
}

fn show(vertices: &[Vertex]) -> String {
    vertices.iter().map(ToString::to_string).collect::<Vec<_>>().join(" -> ")
}

/// Moves `m_excl` along `vertices` by `eps`: agent-to-good arcs gain and
/// good-to-agent arcs lose.
fn shift_excluded(m_excl: &mut Allocation, vertices: &[Vertex], closed: bool, eps: u32) {
    let arcs: Vec<(Vertex, Vertex)> = if closed {
        cycle_arcs(vertices).collect()
    } else {
        path_arcs(vertices).collect()
    };
    for (a, b) in arcs {
        match (a, b) {
            (Vertex::Agent(i), Vertex::Good(j)) => m_excl.units[i][j] += eps,
            (Vertex::Good(j), Vertex::Agent(i)) => m_excl.units[i][j] -= eps,
            _ => unreachable!("bipartite arc"),
        }
    }
}

/// Rewrites `m_excl` into an equally valuable allocation whose difference
/// graph has no zero-value cycles and no zero-value paths from sources other
/// than the excluded agent.
///
/// Non-zero cycles or such paths mean one of the inputs is not optimal and
/// are reported as errors.
pub fn normalize_excluded(
    instance: &Instance,
    m: &Allocation,
    m_excl: &Allocation,
    excluded: usize,
) -> Result<Allocation> {
    let mut cur = m_excl.clone();
    let start_welfare = cur.welfare(instance);
    loop {
        let g = build_flow_graph(instance, m, &cur, excluded)?;
        if let Some(cycle) = g.find_cycle() {
            let value = walk_value(instance, cycle_arcs(&cycle));
            if !value.is_zero() {
                return Err(cert_err(format!(
                    "difference graph has cycle {} of value {value}; an input is not optimal",
                    show(&cycle)
                )));
            }
            let eps = cycle_arcs(&cycle).map(|(a, b)| g.flow(a, b)).min().expect("nonempty");
            shift_excluded(&mut cur, &cycle, true, eps);
        } else {
            let d = decompose_raw(instance, &g)?;
            let Some(p) = d.paths.iter().find(|p| p.vertices[0] != Vertex::Agent(excluded)) else {
                break;
            };
            if !p.value.is_zero() {
                return Err(cert_err(format!(
                    "path {} of value {} leaves a source other than agent {excluded}; an input is not optimal",
                    show(&p.vertices),
                    p.value
                )));
            }
            shift_excluded(&mut cur, &p.vertices, false, p.flow);
        }
        cur.check_feasible(instance)?;
    }
    if cur.welfare(instance) != start_welfare {
        return Err(cert_err("normalization changed the welfare"));
    }
    Ok(cur)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DMinus2Certificate {
    pub agent_hi: usize,
    pub agent_lo: usize,
    pub allocation: Allocation,
    /// `v(D)`.
    pub value: Rat,
    /// `v(M^-hi)`.
    pub without_hi: Rat,
    /// `v_hi(M_lo) - v_lo(M_lo)`.
    pub swap_gain: Rat,
    /// `v(M^-hi) + v_hi(M_lo) - v_lo(M_lo)`, the value `D` must reach.
    pub bound: Rat,
    /// `v(M^-lo)`, which must dominate `v(D)`.
    pub without_lo: Rat,
}

/// Builds `D` for the pair `c_hi >= c_lo` and checks it exactly.
pub fn build_d_minus2(instance: &Instance, agent_hi: usize, agent_lo: usize) -> Result<DMinus2Certificate> {
    let m = social_optimum(instance)?;
    build_d_minus2_with(instance, agent_hi, agent_lo, &m)
}

/// As [`build_d_minus2`], reusing the efficient allocation `m`.
pub fn build_d_minus2_with(
    instance: &Instance,
    agent_hi: usize,
    agent_lo: usize,
    m: &OptResult,
) -> Result<DMinus2Certificate> {
    instance.check_agent(agent_hi)?;
    instance.check_agent(agent_lo)?;
    let (hi, lo) = (agent_hi, agent_lo);
    if hi == lo || instance.capacities[hi] < instance.capacities[lo] {
        return Err(Error::Parameter(format!(
            "need distinct agents with c_hi >= c_lo, got agents {hi} (c={}) and {lo} (c={})",
            instance.capacities[hi], instance.capacities[lo]
        )));
    }
    let m_alloc = &m.allocation;
    let raw_excl = opt_excluding(instance, hi)?;
    let m_excl = normalize_excluded(instance, m_alloc, &raw_excl.allocation, hi)?;
    let g = build_flow_graph(instance, m_alloc, &m_excl, hi)?;
    let dec = decompose(instance, &g)?;

    let k = instance.n_goods();
    // Stage I
    let mut d: Vec<Vec<i64>> = m_excl
        .units
        .iter()
        .map(|row| row.iter().map(|&u| u as i64).collect())
        .collect();
    // Stage II
    for j in 0..k {
        let x = m_alloc.units[lo][j].min(m_excl.units[lo][j]) as i64;
        d[lo][j] = m_excl.units[lo][j] as i64 - x;
        d[hi][j] = x;
    }
    // Stage III
    for p in &dec.paths {
        let Some(pos) = p.vertices.iter().position(|&v| v == Vertex::Agent(lo)) else {
            continue;
        };
        let f = p.flow as i64;
        for (a, b) in path_arcs(&p.vertices[..=pos]) {
            match (a, b) {
                (Vertex::Agent(i), Vertex::Good(j)) => d[i][j] += f,
                (Vertex::Good(j), Vertex::Agent(i)) => d[i][j] -= f,
                _ => unreachable!("bipartite arc"),
            }
        }
    }

    if let Some((i, j)) = (0..d.len())
        .flat_map(|i| (0..k).map(move |j| (i, j)))
        .find(|&(i, j)| d[i][j] < 0)
    {
        return Err(cert_err(format!("constructed allocation has {} units at ({i}, {j})", d[i][j])));
    }
    let allocation = Allocation {
        units: d.iter().map(|row| row.iter().map(|&u| u as u32).collect()).collect(),
    };
    if allocation.agent_total(lo) != 0 {
        return Err(cert_err(format!("constructed allocation still serves agent {lo}")));
    }
    allocation.check_feasible(instance)?;

    let value = allocation.welfare(instance);
    let without_hi = m_excl.welfare(instance);
    let swap_gain = m_alloc.linear_value(instance, hi, lo) - m_alloc.linear_value(instance, lo, lo);
    let bound = &without_hi + &swap_gain;
    if value < bound {
        return Err(cert_err(format!(
            "v(D) = {value} falls short of v(M^-{hi}) + v_{hi}(M_{lo}) - v_{lo}(M_{lo}) = {bound}"
        )));
    }
    let without_lo = opt_excluding(instance, lo)?.welfare;
    if without_lo < value {
        return Err(cert_err(format!(
            "v(D) = {value} exceeds the optimum without agent {lo}, {without_lo}"
        )));
    }
    Ok(DMinus2Certificate {
        agent_hi: hi,
        agent_lo: lo,
        allocation,
        value,
        without_hi,
        swap_gain,
        bound,
        without_lo,
    })
}

/// Optimal-allocation class of a two-agent profile with the unequal
/// capacity shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TwoAgentClass {
    A,
    B1,
    B1plus,
    B2,
    Tie,
}

impl fmt::Display for TwoAgentClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TwoAgentClass::A => "A",
            TwoAgentClass::B1 => "B1",
            TwoAgentClass::B1plus => "B1+",
            TwoAgentClass::B2 => "B2",
            TwoAgentClass::Tie => "tie",
        })
    }
}

/// Checks the profile shape and returns the smaller capacity `c`.
///
/// Agent 0 has capacity `c >= 1`, agent 1 a larger one; only goods
/// `0..=c` carry value for them, goods `1..=c` are valued equally, and
/// every other agent values nothing.
fn check_two_agent_shape(instance: &Instance) -> Result<u32> {
    let shape = |msg: String| Err(Error::Shape(msg));
    if instance.n_agents() < 2 {
        return shape(format!("need two agents, got {}", instance.n_agents()));
    }
    let c = instance.capacities[0];
    if c == 0 || instance.capacities[1] <= c {
        return shape(format!(
            "need 1 <= c_1 < c_2, got capacities {} and {}",
            c, instance.capacities[1]
        ));
    }
    let c_us = c as usize;
    if instance.n_goods() < c_us + 1 {
        return shape(format!("need at least {} goods, got {}", c_us + 1, instance.n_goods()));
    }
    for (i, row) in instance.values.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if (i >= 2 || j > c_us) && !v.is_zero() {
                return shape(format!("value at agent {i}, good {j} must be zero"));
            }
        }
        if i < 2 && row[1..=c_us].iter().any(|v| *v != row[1]) {
            return shape(format!("agent {i} must value goods 1..={c_us} equally"));
        }
    }
    Ok(c)
}

/// Strict case analysis on `d1 = v11 - v21` and `d2 = v12 - v22`; any
/// equality among `d1`, `d2` and zero is a tie.
pub fn classify_two_agent(instance: &Instance) -> Result<TwoAgentClass> {
    let c = check_two_agent_shape(instance)?;
    let v = &instance.values;
    let d1 = &v[0][0] - &v[1][0];
    let d2 = &v[0][1] - &v[1][1];
    let zero = Rat::zero();
    if d1.is_zero() || d2.is_zero() || d1 == d2 {
        return Ok(TwoAgentClass::Tie);
    }
    if d1.is_negative() && d2.is_negative() {
        return Ok(TwoAgentClass::A);
    }
    let class = if c == 1 {
        if d1 > d2.clone().max(zero) {
            TwoAgentClass::B1
        } else {
            TwoAgentClass::B2
        }
    } else if d1.is_positive() && d2.is_negative() {
        TwoAgentClass::B1
    } else if d1 > d2 && d2.is_positive() {
        TwoAgentClass::B1plus
    } else {
        TwoAgentClass::B2
    };
    Ok(class)
}

/// The efficient allocation a class prescribes on goods `0..=c`.
pub fn class_allocation(class: TwoAgentClass, instance: &Instance) -> Option<Allocation> {
    let c = instance.capacities[0] as usize;
    let mut a = Allocation::empty(instance.n_agents(), instance.n_goods());
    let give = |a: &mut Allocation, i: usize, goods: std::ops::RangeInclusive<usize>| {
        for j in goods {
            a.units[i][j] = 1;
        }
    };
    match class {
        TwoAgentClass::A => give(&mut a, 1, 0..=c),
        TwoAgentClass::B1 if c == 1 => {
            give(&mut a, 0, 0..=0);
            give(&mut a, 1, 1..=1);
        }
        TwoAgentClass::B1 => {
            give(&mut a, 0, 0..=0);
            give(&mut a, 1, 1..=c);
        }
        TwoAgentClass::B1plus => {
            give(&mut a, 0, 0..=c - 1);
            give(&mut a, 1, c..=c);
        }
        TwoAgentClass::B2 => {
            give(&mut a, 1, 0..=0);
            give(&mut a, 0, 1..=c);
        }
        TwoAgentClass::Tie => return None,
    }
    Some(a)
}

/// The three profiles of the positive-transfer argument, capacities
/// `(c, c + 1)` over `c + 1` goods:
///
/// * (a) agent 1 values `(x + 3eps, x + eps, ...)`, agent 2 nothing;
/// * (b) agent 1 as in (a), agent 2 values `(x + eps, x, ...)`;
/// * (c) agent 1 nothing, agent 2 as in (b).
pub fn thm41_profiles(c: u32, x: &Rat, epsilon: &Rat) -> Result<[Instance; 3]> {
    if c == 0 {
        return Err(Error::Parameter("capacity c must be at least 1".into()));
    }
    if !x.is_positive() {
        return Err(Error::Parameter(format!("x must be positive, got {x}")));
    }
    if !epsilon.is_positive() {
        return Err(Error::Parameter(format!("epsilon must be positive, got {epsilon}")));
    }
    let k = c as usize + 1;
    let row = |first: Rat, rest: Rat| {
        let mut r = vec![rest; k];
        r[0] = first;
        r
    };
    let one = row(x + &epsilon.times(3), x + epsilon);
    let two = row(x + epsilon, x.clone());
    let zero = vec![Rat::zero(); k];
    let caps = vec![c, c + 1];
    Ok([
        Instance::unit(caps.clone(), vec![one.clone(), zero.clone()])?,
        Instance::unit(caps.clone(), vec![one, two.clone()])?,
        Instance::unit(caps, vec![zero, two])?,
    ])
}

fn opt_matches_class(
    chain: &mut ChainReport,
    name: &str,
    instance: &Instance,
    expected: TwoAgentClass,
) -> Result<OptResult> {
    let class = classify_two_agent(instance)?;
    let opt = social_optimum(instance)?;
    // zero-value units are never allocated, so only valued entries are compared
    let differing = class_allocation(class, instance)
        .map(|a| {
            let mut count = 0;
            for (i, row) in instance.values.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    if v.is_positive() && a.units[i][j] != opt.allocation.units[i][j] {
                        count += 1;
                    }
                }
            }
            count
        })
        .unwrap_or(-1);
    let holds = chain.step(
        format!("Opt({name}) follows class {expected}: differing valued units"),
        Rat::from_int(differing),
        Relation::Eq,
        Rat::zero(),
        format!("profile ({name}) classified {class}"),
    );
    if holds && class != expected {
        chain.step(
            format!("class of ({name})"),
            Rat::one(),
            Relation::Eq,
            Rat::zero(),
            format!("expected {expected}, got {class}"),
        );
    }
    Ok(opt)
}

/// Replays the argument that efficient, IC and envy-free mechanisms must
/// sometimes pay an agent: any such mechanism has `h_1(0,...,0) >= x - c eps`
/// for every `x`.
pub fn thm41_chain(c: u32, x: &Rat, epsilon: &Rat) -> Result<ChainReport> {
    let [pa, pb, pc] = thm41_profiles(c, x, epsilon)?;
    let cr = Rat::from_int(c as i64);
    let eps = epsilon.clone();
    let split = if c == 1 { TwoAgentClass::B1 } else { TwoAgentClass::B1plus };
    let mut chain = ChainReport::new();

    let opt_a = opt_matches_class(&mut chain, "a", &pa, split)?;
    // agent 2 does not envy agent 1: h_2(v_1) - h_1(0) <= v_1(Opt_1) - v_2(Opt_1)
    let k_a = opt_a.allocation.linear_value(&pa, 0, 0) - opt_a.allocation.linear_value(&pa, 1, 0);
    chain.step(
        "no envy by agent 2 on (a): h_2(v_1) - h_1(0) <= K_a",
        k_a.clone(),
        Relation::Eq,
        &(&cr * x) + &(&(&cr + &Rat::from_int(2)) * &eps),
        "K_a = v_1(Opt_1) - v_2(Opt_1) = cx + (c+2)eps",
    );

    let opt_b = opt_matches_class(&mut chain, "b", &pb, split)?;
    // agent 1 does not envy agent 2: h_1(v_2) - h_2(v_1) <= v_2(Opt_2) - v_1(Opt_2)
    let k_b = opt_b.allocation.linear_value(&pb, 1, 1) - opt_b.allocation.linear_value(&pb, 0, 1);
    chain.step(
        "no envy by agent 1 on (b): h_1(v_2) - h_2(v_1) <= K_b",
        k_b.clone(),
        Relation::Eq,
        -&eps,
        "K_b = v_2(Opt_2) - v_1(Opt_2) = -eps",
    );
    chain.step(
        "agent 1 reports the same row in (a) and (b)",
        Rat::from_int(pa.values[0].iter().zip(&pb.values[0]).filter(|(a, b)| a != b).count() as i64),
        Relation::Eq,
        Rat::zero(),
        "h_2(v_1) is shared",
    );
    let k = &k_a + &k_b;
    chain.step(
        "combined: h_1(v_2) - h_1(0) <= K_a + K_b",
        k.clone(),
        Relation::Eq,
        &(&cr * x) + &(&(&cr + &Rat::one()) * &eps),
        "sum of both no-envy bounds",
    );

    let opt_c = opt_matches_class(&mut chain, "c", &pc, TwoAgentClass::A)?;
    chain.step(
        "agent 2 reports the same row in (b) and (c)",
        Rat::from_int(pb.values[1].iter().zip(&pc.values[1]).filter(|(a, b)| a != b).count() as i64),
        Relation::Eq,
        Rat::zero(),
        "h_1(v_2) is shared",
    );
    let n_bound = opt_c.allocation.linear_value(&pc, 1, 1);
    chain.step(
        "no positive transfer to agent 1 on (c): h_1(v_2) >= v_2(Opt_2)",
        n_bound.clone(),
        Relation::Eq,
        &(&(&cr + &Rat::one()) * x) + &eps,
        "v_2(Opt_2) = (c+1)x + eps",
    );
    let conclusion = &n_bound - &k;
    chain.step(
        "conclusion: h_1(0) >= v_2(Opt_2) - K_a - K_b",
        conclusion,
        Relation::Eq,
        x - &(&cr * &eps),
        "bound x - c eps grows with x",
    );
    Ok(chain)
}
