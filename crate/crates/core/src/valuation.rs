//! Bundle valuations.
//!
//! Bundles are unit multisets written as a count per good. Valuations that
//! are defined on sets (subadditive 2x2, explicit set functions) read any
//! positive count as membership.

use crate::error::{Error, Result};
use crate::rational::Rat;

pub trait Valuation {
    fn num_goods(&self) -> usize;

    /// Value of the bundle `counts` (one entry per good).
    fn value(&self, counts: &[u32]) -> Rat;

    fn value_of_set(&self, goods: &[usize]) -> Rat {
        let mut counts = vec![0u32; self.num_goods()];
        for &g in goods {
            counts[g] += 1;
        }
        self.value(&counts)
    }
}

/// Additive per-unit values truncated at `capacity` units.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CapacitatedValuation {
    pub capacity: u32,
    pub values: Vec<Rat>,
}

impl CapacitatedValuation {
    pub fn new(capacity: u32, values: Vec<Rat>) -> Self {
        Self { capacity, values }
    }
}

impl Valuation for CapacitatedValuation {
    fn num_goods(&self) -> usize {
        self.values.len()
    }

    fn value(&self, counts: &[u32]) -> Rat {
        let mut units: Vec<(&Rat, u32)> = self
            .values
            .iter()
            .zip(counts)
            .filter(|(_, &k)| k > 0)
            .map(|(v, &k)| (v, k))
            .collect();
        units.sort_by(|a, b| b.0.cmp(a.0));
        let mut left = self.capacity;
        let mut total = Rat::zero();
        for (v, k) in units {
            if left == 0 {
                break;
            }
            let take = k.min(left);
            total += v.times(take);
            left -= take;
        }
        total
    }
}

/// A two-good valuation given by `v({1})`, `v({2})`, `v({1,2})`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subadditive2x2Valuation {
    v1: Rat,
    v2: Rat,
    v12: Rat,
}

impl Subadditive2x2Valuation {
    /// Requires non-negativity, monotonicity (`v12 >= max(v1, v2)`) and
    /// subadditivity (`v12 <= v1 + v2`).
    pub fn new(v1: Rat, v2: Rat, v12: Rat) -> Result<Self> {
        if v1.is_negative() || v2.is_negative() || v12.is_negative() {
            return Err(Error::InvalidValuation("negative value".into()));
        }
        if v12 > &v1 + &v2 {
            return Err(Error::InvalidValuation(format!(
                "not subadditive: v(12)={v12} > v(1)+v(2)={}",
                &v1 + &v2
            )));
        }
        if v12 < v1.clone().max(v2.clone()) {
            return Err(Error::InvalidValuation(format!(
                "not monotone: v(12)={v12} < max(v(1), v(2))"
            )));
        }
        Ok(Self { v1, v2, v12 })
    }

    /// The capacitated valuation `(capacity, [a, b])` seen as a set function.
    pub fn from_capacitated(capacity: u32, a: &Rat, b: &Rat) -> Self {
        let cv = CapacitatedValuation::new(capacity, vec![a.clone(), b.clone()]);
        Self {
            v1: cv.value(&[1, 0]),
            v2: cv.value(&[0, 1]),
            v12: cv.value(&[1, 1]),
        }
    }

    pub fn single(&self, good: usize) -> &Rat {
        if good == 0 {
            &self.v1
        } else {
            &self.v2
        }
    }

    pub fn pair(&self) -> &Rat {
        &self.v12
    }

    pub fn max_single(&self) -> Rat {
        self.v1.clone().max(self.v2.clone())
    }
}

impl Valuation for Subadditive2x2Valuation {
    fn num_goods(&self) -> usize {
        2
    }

    fn value(&self, counts: &[u32]) -> Rat {
        match (counts[0] > 0, counts[1] > 0) {
            (false, false) => Rat::zero(),
            (true, false) => self.v1.clone(),
            (false, true) => self.v2.clone(),
            (true, true) => self.v12.clone(),
        }
    }
}

/// An arbitrary set function over up to 15 goods, indexed by bitmask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetFunction {
    n_goods: usize,
    table: Vec<Rat>,
}

impl SetFunction {
    pub fn new(n_goods: usize, table: Vec<Rat>) -> Result<Self> {
        if n_goods > 15 {
            return Err(Error::TooLarge(format!("set function over {n_goods} goods")));
        }
        if table.len() != 1 << n_goods {
            return Err(Error::Dimension(format!(
                "set function table has {} entries, expected {}",
                table.len(),
                1usize << n_goods
            )));
        }
        Ok(Self { n_goods, table })
    }
}

impl Valuation for SetFunction {
    fn num_goods(&self) -> usize {
        self.n_goods
    }

    fn value(&self, counts: &[u32]) -> Rat {
        let mask = counts
            .iter()
            .enumerate()
            .filter(|(_, &k)| k > 0)
            .fold(0usize, |m, (j, _)| m | (1 << j));
        self.table[mask].clone()
    }
}
