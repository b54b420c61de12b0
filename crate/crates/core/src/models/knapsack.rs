//! Multi-knapsack instances: parsing and the two benchmark encodings.
//!
//! Instance files are whitespace-separated integers:
//!
//! ```text
//! n m
//! p_1 .. p_n                 profits
//! w_11 .. w_1n               m rows of weights
//! ...
//! c_1 .. c_m                 capacities
//! [optimum]                  optional known optimum
//! ```

use std::path::{Path, PathBuf};

use thiserror::Error;

use super::{Direction, Model, ModelError};
use crate::domain::VarId;
use crate::propagation::{BinaryKnapsack, LinearEq, LinearLeq};

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("token {index} ({token:?}) is not an integer")]
    NotAnInteger { index: usize, token: String },
    #[error("invalid {what} count {value}")]
    InvalidCount { what: &'static str, value: i64 },
    #[error("file ends inside the {section} section")]
    Truncated { section: &'static str },
    #[error("negative weight {value} for item {item} in constraint {constraint}")]
    NegativeWeight {
        constraint: usize,
        item: usize,
        value: i64,
    },
    #[error("negative capacity {value} for constraint {constraint}")]
    NegativeCapacity { constraint: usize, value: i64 },
    #[error("{count} unexpected trailing token(s)")]
    TrailingData { count: usize },
}

/// A 0/1 multi-dimensional knapsack instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KnapsackInstance {
    pub name: String,
    pub profits: Vec<i64>,
    /// One row per constraint, one column per item.
    pub weights: Vec<Vec<i64>>,
    pub capacities: Vec<i64>,
    pub optimum: Option<i64>,
}

impl KnapsackInstance {
    pub fn n_items(&self) -> usize {
        self.profits.len()
    }

    pub fn n_constraints(&self) -> usize {
        self.capacities.len()
    }

    /// Profit of a 0/1 selection, or `None` if it violates a capacity.
    pub fn evaluate(&self, take: &[bool]) -> Option<i64> {
        let fits = self
            .weights
            .iter()
            .zip(&self.capacities)
            .all(|(row, &cap)| {
                row.iter()
                    .zip(take)
                    .filter(|(_, &t)| t)
                    .map(|(w, _)| w)
                    .sum::<i64>()
                    <= cap
            });
        fits.then(|| {
            self.profits
                .iter()
                .zip(take)
                .filter(|(_, &t)| t)
                .map(|(p, _)| p)
                .sum()
        })
    }
}

struct Tokens<'a> {
    iter: std::iter::Enumerate<std::str::SplitWhitespace<'a>>,
}

impl Tokens<'_> {
    fn next(&mut self, section: &'static str) -> Result<i64, ParseError> {
        self.try_next()?.ok_or(ParseError::Truncated { section })
    }

    fn try_next(&mut self) -> Result<Option<i64>, ParseError> {
        match self.iter.next() {
            None => Ok(None),
            Some((index, tok)) => tok.parse().map(Some).map_err(|_| ParseError::NotAnInteger {
                index,
                token: tok.to_string(),
            }),
        }
    }

    fn count(&mut self, what: &'static str) -> Result<usize, ParseError> {
        let value = self.next("header")?;
        usize::try_from(value).map_err(|_| ParseError::InvalidCount { what, value })
    }
}

/// Parses an instance from text.
pub fn parse_knapsack(name: &str, text: &str) -> Result<KnapsackInstance, ParseError> {
    let mut t = Tokens {
        iter: text.split_whitespace().enumerate(),
    };
    let n = t.count("item")?;
    let m = t.count("constraint")?;
    let profits = (0..n)
        .map(|_| t.next("profits"))
        .collect::<Result<Vec<_>, _>>()?;
    let mut weights = Vec::with_capacity(m);
    for constraint in 0..m {
        let mut row = Vec::with_capacity(n);
        for item in 0..n {
            let value = t.next("weights")?;
            if value < 0 {
                return Err(ParseError::NegativeWeight {
                    constraint,
                    item,
                    value,
                });
            }
            row.push(value);
        }
        weights.push(row);
    }
    let mut capacities = Vec::with_capacity(m);
    for constraint in 0..m {
        let value = t.next("capacities")?;
        if value < 0 {
            return Err(ParseError::NegativeCapacity { constraint, value });
        }
        capacities.push(value);
    }
    let optimum = t.try_next()?;
    let rest = t.iter.count();
    if rest > 0 {
        return Err(ParseError::TrailingData { count: rest });
    }
    Ok(KnapsackInstance {
        name: name.to_string(),
        profits,
        weights,
        capacities,
        optimum,
    })
}

/// Reads and parses an instance file; the file stem becomes the name.
pub fn parse_knapsack_file(path: impl AsRef<Path>) -> Result<KnapsackInstance, ParseError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ParseError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_knapsack(&name, &text)
}

fn item_vars(m: &mut Model, n: usize) -> Vec<VarId> {
    (0..n).map(|_| m.add_var(0, 1)).collect()
}

/// Posts `sum terms == rhs`, with a fixed zero variable standing in for an
/// empty left-hand side.
fn post_sum_eq(m: &mut Model, terms: Vec<(i64, VarId)>, rhs: i64) -> Result<(), ModelError> {
    let eq = LinearEq::new(terms, rhs);
    if eq.terms().is_empty() {
        let zero = m.add_var(0, 0);
        m.post(LinearEq::new(vec![(1, zero)], rhs))?;
    } else {
        m.post(eq)?;
    }
    Ok(())
}

/// Satisfaction encoding: linear capacity constraints plus an equality fixing
/// the total profit to the known optimum.
///
/// Without a recorded optimum the model only asks for a feasible selection.
pub fn build_knapsack_csp(inst: &KnapsackInstance) -> Result<Model, ModelError> {
    let mut m = Model::new(format!("{}-csp", inst.name));
    let xs = item_vars(&mut m, inst.n_items());
    for (row, &cap) in inst.weights.iter().zip(&inst.capacities) {
        let leq = LinearLeq::new(row.iter().copied().zip(xs.iter().copied()).collect(), cap);
        if !leq.terms().is_empty() {
            m.post(leq)?;
        }
    }
    if let Some(opt) = inst.optimum {
        let terms = inst
            .profits
            .iter()
            .copied()
            .zip(xs.iter().copied())
            .collect();
        post_sum_eq(&mut m, terms, opt)?;
    }
    m.set_decision_vars(xs);
    Ok(m)
}

/// Optimization encoding: one binary knapsack global per capacity row and a
/// profit variable to maximize.
pub fn build_knapsack_cop(inst: &KnapsackInstance) -> Result<Model, ModelError> {
    let mut m = Model::new(format!("{}-cop", inst.name));
    let xs = item_vars(&mut m, inst.n_items());
    for (row, &cap) in inst.weights.iter().zip(&inst.capacities) {
        if !xs.is_empty() {
            m.post(BinaryKnapsack::at_most(xs.clone(), row.clone(), cap))?;
        }
    }
    let upper: i64 = inst.profits.iter().filter(|&&p| p > 0).sum();
    let lower: i64 = inst.profits.iter().filter(|&&p| p < 0).sum();
    let obj = m.add_var(lower, upper);
    let mut terms: Vec<(i64, VarId)> = inst
        .profits
        .iter()
        .copied()
        .zip(xs.iter().copied())
        .collect();
    terms.push((-1, obj));
    m.post(LinearEq::new(terms, 0))?;
    m.set_objective(obj, Direction::Maximize);
    m.set_decision_vars(xs);
    Ok(m)
}
