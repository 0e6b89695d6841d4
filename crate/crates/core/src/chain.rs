//! Step-by-step inequality chains with exact checks.

use std::fmt;

use serde::Serialize;

use crate::rational::Rat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = ">")]
    Gt,
}

impl Relation {
    pub fn holds(self, lhs: &Rat, rhs: &Rat) -> bool {
        match self {
            Relation::Eq => lhs == rhs,
            Relation::Le => lhs <= rhs,
            Relation::Ge => lhs >= rhs,
            Relation::Lt => lhs < rhs,
            Relation::Gt => lhs > rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Eq => "=",
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Lt => "<",
            Relation::Gt => ">",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChainStep {
    pub label: String,
    pub lhs: Rat,
    pub relation: Relation,
    pub rhs: Rat,
    /// Short description of what the step uses.
    pub anchor: String,
    pub holds: bool,
}

impl fmt::Display for ChainStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {}: {} {} {} ({})",
            if self.holds { "ok" } else { "FAIL" },
            self.label,
            self.lhs,
            self.relation.symbol(),
            self.rhs,
            self.anchor
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ChainReport {
    pub steps: Vec<ChainStep>,
    pub verdict: bool,
}

impl ChainReport {
    pub fn new() -> Self {
        Self {
            steps: Vec::new(),
            verdict: true,
        }
    }

    /// Records a step and folds its outcome into the verdict.
    pub fn step(
        &mut self,
        label: impl Into<String>,
        lhs: Rat,
        relation: Relation,
        rhs: Rat,
        anchor: impl Into<String>,
    ) -> bool {
        let holds = relation.holds(&lhs, &rhs);
        self.verdict &= holds;
        self.steps.push(ChainStep {
            label: label.into(),
            lhs,
            relation,
            rhs,
            anchor: anchor.into(),
            holds,
        });
        holds
    }

    pub fn get(&self, label: &str) -> Option<&ChainStep> {
        self.steps.iter().find(|s| s.label == label)
    }
}

impl fmt::Display for ChainReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.steps {
            writeln!(f, "{s}")?;
        }
        write!(f, "verdict: {}", if self.verdict { "holds" } else { "fails" })
    }
}
