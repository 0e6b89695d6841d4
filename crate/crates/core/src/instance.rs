//! Auction instances, allocations and the JSON instance format.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::Rat;
use crate::valuation::{CapacitatedValuation, Valuation};

/// Agents with unit capacities, goods with unit supplies, and a per-unit
/// valuation matrix `values[agent][good]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub capacities: Vec<u32>,
    pub supplies: Vec<u32>,
    pub values: Vec<Vec<Rat>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    RowCount { rows: usize, agents: usize },
    RaggedRow { agent: usize, len: usize, goods: usize },
    NegativeValue { agent: usize, good: usize },
    NegativeCapacity { agent: usize },
    NegativeSupply { good: usize },
    ZeroSupply { good: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::RowCount { rows, agents } => {
                write!(f, "{rows} value rows for {agents} agents")
            }
            Violation::RaggedRow { agent, len, goods } => {
                write!(f, "agent {agent} has {len} values for {goods} goods")
            }
            Violation::NegativeValue { agent, good } => {
                write!(f, "negative value for agent {agent}, good {good}")
            }
            Violation::NegativeCapacity { agent } => write!(f, "negative capacity for agent {agent}"),
            Violation::NegativeSupply { good } => write!(f, "negative supply for good {good}"),
            Violation::ZeroSupply { good } => write!(f, "good {good} has zero supply"),
        }
    }
}

impl Instance {
    pub fn new(capacities: Vec<u32>, supplies: Vec<u32>, values: Vec<Vec<Rat>>) -> Result<Self> {
        let inst = Self {
            capacities,
            supplies,
            values,
        };
        inst.validate()?;
        Ok(inst)
    }

    /// Unit supplies for every good.
    pub fn unit(capacities: Vec<u32>, values: Vec<Vec<Rat>>) -> Result<Self> {
        let m = values.first().map_or(0, Vec::len);
        Self::new(capacities, vec![1; m], values)
    }

    pub fn n_agents(&self) -> usize {
        self.capacities.len()
    }

    pub fn n_goods(&self) -> usize {
        self.supplies.len()
    }

    pub fn violations(&self) -> Vec<Violation> {
        let n = self.n_agents();
        let m = self.n_goods();
        let mut out = Vec::new();
        if self.values.len() != n {
            out.push(Violation::RowCount {
                rows: self.values.len(),
                agents: n,
            });
        }
        for (i, row) in self.values.iter().enumerate() {
            if row.len() != m {
                out.push(Violation::RaggedRow {
                    agent: i,
                    len: row.len(),
                    goods: m,
                });
            }
            for (j, v) in row.iter().enumerate() {
                if v.is_negative() {
                    out.push(Violation::NegativeValue { agent: i, good: j });
                }
            }
        }
        for (j, &q) in self.supplies.iter().enumerate() {
            if q == 0 {
                out.push(Violation::ZeroSupply { good: j });
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidInstance(v))
        }
    }

    pub fn check_agent(&self, agent: usize) -> Result<()> {
        if agent < self.n_agents() {
            Ok(())
        } else {
            Err(Error::AgentOutOfRange {
                agent,
                n_agents: self.n_agents(),
            })
        }
    }

    pub fn valuation(&self, agent: usize) -> CapacitatedValuation {
        CapacitatedValuation::new(self.capacities[agent], self.values[agent].clone())
    }

    pub fn valuations(&self) -> Vec<CapacitatedValuation> {
        (0..self.n_agents()).map(|i| self.valuation(i)).collect()
    }

    /// The same instance with one agent's row replaced.
    pub fn with_row(&self, agent: usize, row: Vec<Rat>) -> Instance {
        let mut out = self.clone();
        out.values[agent] = row;
        out
    }

    /// The same instance with the agent present but unable to receive anything.
    pub fn without_agent(&self, agent: usize) -> Instance {
        let mut out = self.clone();
        out.capacities[agent] = 0;
        out
    }

    pub fn is_homogeneous(&self) -> bool {
        self.capacities.windows(2).all(|w| w[0] == w[1])
    }
}

/// Value of a unit multiset of goods to `agent`: the sum of its
/// `capacity` most valuable units.
pub fn bundle_value(instance: &Instance, agent: usize, bundle: &[u32]) -> Result<Rat> {
    instance.check_agent(agent)?;
    if bundle.len() != instance.n_goods() {
        return Err(Error::BundleShape {
            got: bundle.len(),
            expected: instance.n_goods(),
        });
    }
    for (j, (&k, &q)) in bundle.iter().zip(&instance.supplies).enumerate() {
        if k > q {
            return Err(Error::SupplyExceeded {
                good: j,
                requested: k,
                supply: q,
            });
        }
    }
    Ok(instance.valuation(agent).value(bundle))
}

/// Indices of the `b` largest entries, ties broken towards the smaller
/// index. Returned in ascending index order.
pub fn top_b(values: &[Rat], b: usize) -> Result<Vec<usize>> {
    if b > values.len() {
        return Err(Error::TopTooLarge {
            b,
            len: values.len(),
        });
    }
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&x, &y| values[y].cmp(&values[x]).then(x.cmp(&y)));
    idx.truncate(b);
    idx.sort_unstable();
    Ok(idx)
}

/// Sum of the `b` largest entries; `b` is clamped to the vector length.
pub fn top_sum(values: &[Rat], b: usize) -> Rat {
    let b = b.min(values.len());
    top_b(values, b)
        .expect("clamped")
        .into_iter()
        .map(|j| &values[j])
        .sum()
}

/// Integral assignment `units[agent][good]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Allocation {
    pub units: Vec<Vec<u32>>,
}

impl Allocation {
    pub fn empty(n_agents: usize, n_goods: usize) -> Self {
        Self {
            units: vec![vec![0; n_goods]; n_agents],
        }
    }

    pub fn n_agents(&self) -> usize {
        self.units.len()
    }

    pub fn n_goods(&self) -> usize {
        self.units.first().map_or(0, Vec::len)
    }

    pub fn bundle(&self, agent: usize) -> &[u32] {
        &self.units[agent]
    }

    pub fn agent_total(&self, agent: usize) -> u32 {
        self.units[agent].iter().sum()
    }

    pub fn good_total(&self, good: usize) -> u32 {
        self.units.iter().map(|r| r[good]).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.units.iter().flatten().all(|&k| k == 0)
    }

    /// Goods held by `agent`, one entry per unit.
    pub fn goods_of(&self, agent: usize) -> Vec<usize> {
        self.units[agent]
            .iter()
            .enumerate()
            .flat_map(|(j, &k)| std::iter::repeat_n(j, k as usize))
            .collect()
    }

    pub fn check_shape(&self, instance: &Instance) -> Result<()> {
        let n = instance.n_agents();
        let m = instance.n_goods();
        if self.units.len() != n || self.units.iter().any(|r| r.len() != m) {
            return Err(Error::Dimension(format!(
                "allocation is not {n}x{m}"
            )));
        }
        Ok(())
    }

    /// Both capacity sides respected.
    pub fn check_feasible(&self, instance: &Instance) -> Result<()> {
        self.check_shape(instance)?;
        for i in 0..instance.n_agents() {
            let t = self.agent_total(i);
            if t > instance.capacities[i] {
                return Err(Error::Certificate(format!(
                    "agent {i} receives {t} units, capacity {}",
                    instance.capacities[i]
                )));
            }
        }
        for j in 0..instance.n_goods() {
            let t = self.good_total(j);
            if t > instance.supplies[j] {
                return Err(Error::Certificate(format!(
                    "good {j} allocated {t} units, supply {}",
                    instance.supplies[j]
                )));
            }
        }
        Ok(())
    }

    /// `sum_ij units[i][j] * value[i][j]`.
    pub fn welfare(&self, instance: &Instance) -> Rat {
        self.units
            .iter()
            .zip(&instance.values)
            .flat_map(|(r, v)| r.iter().zip(v).map(|(&k, x)| x.times(k)))
            .sum()
    }

    /// Linear value of `holder`'s bundle to `viewer`, ignoring the viewer's capacity.
    pub fn linear_value(&self, instance: &Instance, viewer: usize, holder: usize) -> Rat {
        self.units[holder]
            .iter()
            .zip(&instance.values[viewer])
            .map(|(&k, v)| v.times(k))
            .sum()
    }
}

#[derive(Serialize, Deserialize)]
struct AgentDoc {
    capacity: i64,
}

#[derive(Serialize, Deserialize)]
struct GoodDoc {
    supply: i64,
}

#[derive(Serialize, Deserialize)]
struct InstanceDoc {
    agents: Vec<AgentDoc>,
    goods: Vec<GoodDoc>,
    values: Vec<Vec<Rat>>,
}

/// Parses the JSON instance format and validates the result.
pub fn load(bytes: &[u8]) -> Result<Instance> {
    let doc: InstanceDoc =
        serde_json::from_slice(bytes).map_err(|e| Error::Malformed(e.to_string()))?;
    let mut bad = Vec::new();
    let capacities = doc
        .agents
        .iter()
        .enumerate()
        .map(|(i, a)| {
            u32::try_from(a.capacity).unwrap_or_else(|_| {
                bad.push(Violation::NegativeCapacity { agent: i });
                0
            })
        })
        .collect();
    let supplies = doc
        .goods
        .iter()
        .enumerate()
        .map(|(j, g)| {
            u32::try_from(g.supply).unwrap_or_else(|_| {
                bad.push(Violation::NegativeSupply { good: j });
                1
            })
        })
        .collect();
    let inst = Instance {
        capacities,
        supplies,
        values: doc.values,
    };
    bad.extend(inst.violations());
    if bad.is_empty() {
        Ok(inst)
    } else {
        Err(Error::InvalidInstance(bad))
    }
}

fn to_doc(instance: &Instance) -> InstanceDoc {
    InstanceDoc {
        agents: instance
            .capacities
            .iter()
            .map(|&c| AgentDoc { capacity: c.into() })
            .collect(),
        goods: instance
            .supplies
            .iter()
            .map(|&q| GoodDoc { supply: q.into() })
            .collect(),
        values: instance.values.clone(),
    }
}

/// Compact canonical JSON.
pub fn save(instance: &Instance) -> Vec<u8> {
    serde_json::to_vec(&to_doc(instance)).expect("instance values fit the wire format")
}

impl Serialize for Instance {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        to_doc(self).serialize(serializer)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn r(n: i64) -> Rat {
        Rat::from_int(n)
    }

    #[test]
    fn bundle_value_examples() {
        let ex1 = Instance::unit(vec![1, 2], vec![vec![r(2), r(2)], vec![r(1), r(2)]]).unwrap();
        assert_eq!(bundle_value(&ex1, 1, &[1, 1]).unwrap(), r(3));
        assert_eq!(bundle_value(&ex1, 0, &[0, 0]).unwrap(), r(0));

        let three = Instance::unit(vec![2], vec![vec![r(4), r(3), r(2)]]).unwrap();
        // every subset of size <= 2, best is 4 + 3
        let mut best = Rat::zero();
        for mask in 0u32..8 {
            if mask.count_ones() <= 2 {
                let s: Rat = (0..3).filter(|j| mask >> j & 1 == 1).map(|j| &three.values[0][j]).sum();
                best = best.max(s);
            }
        }
        assert_eq!(bundle_value(&three, 0, &[1, 1, 1]).unwrap(), best);
        assert_eq!(best, r(7));
    }

    #[test]
    fn bundle_value_errors() {
        let inst = Instance::unit(vec![1], vec![vec![r(1), r(1)]]).unwrap();
        assert!(matches!(bundle_value(&inst, 3, &[0, 0]), Err(Error::AgentOutOfRange { .. })));
        assert!(matches!(bundle_value(&inst, 0, &[0]), Err(Error::BundleShape { .. })));
        assert!(matches!(bundle_value(&inst, 0, &[2, 0]), Err(Error::SupplyExceeded { .. })));
    }

    #[test]
    fn top_b_examples() {
        assert_eq!(top_b(&[r(2), r(2)], 1).unwrap(), vec![0]);
        assert_eq!(top_b(&[rat(11, 10), r(1)], 1).unwrap(), vec![0]);
        assert_eq!(top_b(&[r(4), r(3), r(2)], 2).unwrap(), vec![0, 1]);
        assert_eq!(top_b(&[r(1), r(5), r(5)], 1).unwrap(), vec![1]);
        assert!(matches!(top_b(&[r(1)], 2), Err(Error::TopTooLarge { b: 2, len: 1 })));
        assert_eq!(top_sum(&[r(1), r(5)], 7), r(6));
    }

    #[test]
    fn load_example1() {
        let doc = br#"{"agents":[{"capacity":1},{"capacity":2}],"goods":[{"supply":1},{"supply":1}],
                       "values":[[2,2],[1,{"num":2,"den":1}]]}"#;
        let inst = load(doc).unwrap();
        assert_eq!(inst.capacities, vec![1, 2]);
        assert_eq!(inst.values, vec![vec![r(2), r(2)], vec![r(1), r(2)]]);
        let back = load(&save(&inst)).unwrap();
        assert_eq!(back, inst);
        assert_eq!(save(&back), save(&inst));
    }

    #[test]
    fn load_errors() {
        let zero_den = br#"{"agents":[{"capacity":1}],"goods":[{"supply":1}],"values":[[{"num":1,"den":0}]]}"#;
        assert!(matches!(load(zero_den), Err(Error::Malformed(_))));
        let neg = br#"{"agents":[{"capacity":1}],"goods":[{"supply":1}],"values":[[-1]]}"#;
        assert!(matches!(load(neg), Err(Error::InvalidInstance(v)) if v == vec![Violation::NegativeValue{agent:0, good:0}]));
        let frac_cap = br#"{"agents":[{"capacity":1.5}],"goods":[],"values":[[]]}"#;
        assert!(matches!(load(frac_cap), Err(Error::Malformed(_))));
        let neg_cap = br#"{"agents":[{"capacity":-2}],"goods":[],"values":[[]]}"#;
        assert!(matches!(load(neg_cap), Err(Error::InvalidInstance(_))));
        assert!(matches!(load(b"{not json"), Err(Error::Malformed(_))));
        let ragged = br#"{"agents":[{"capacity":1}],"goods":[{"supply":1}],"values":[[1,2]]}"#;
        assert!(matches!(load(ragged), Err(Error::InvalidInstance(_))));
    }

    #[test]
    fn empty_goods_is_valid() {
        let inst = load(br#"{"agents":[{"capacity":2}],"goods":[],"values":[[]]}"#).unwrap();
        assert_eq!(inst.n_goods(), 0);
        assert_eq!(bundle_value(&inst, 0, &[]).unwrap(), Rat::zero());
        assert_eq!(Allocation::empty(1, 0).welfare(&inst), Rat::zero());
    }
}
