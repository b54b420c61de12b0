//! Models and the benchmark model builders.

mod knapsack;
mod magic_square;

use std::fmt;

use thiserror::Error;

use crate::domain::{DomainStore, FiniteDomain, Value, VarId};
use crate::propagation::{Propagator, PropagatorId};

pub use knapsack::{
    build_knapsack_cop, build_knapsack_csp, parse_knapsack, parse_knapsack_file, KnapsackInstance,
    ParseError,
};
pub use magic_square::{build_magic_square, check_magic_square, magic_constant};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("propagator {0} has an empty scope")]
    EmptyScope(&'static str),
    #[error("propagator {name} refers to undeclared variable {var}")]
    UnknownVariable { name: &'static str, var: VarId },
    #[error("propagator {name} lists variable {var} twice")]
    DuplicateVariable { name: &'static str, var: VarId },
    #[error("variable domain is empty")]
    EmptyDomain,
    #[error("magic square side must be at least 3, got {0}")]
    SquareTooSmall(usize),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Direction {
    Minimize,
    Maximize,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Objective {
    pub var: VarId,
    pub direction: Direction,
}

impl Objective {
    /// Whether `candidate` strictly improves on `incumbent`.
    pub fn improves(&self, candidate: Value, incumbent: Value) -> bool {
        match self.direction {
            Direction::Maximize => candidate > incumbent,
            Direction::Minimize => candidate < incumbent,
        }
    }
}

/// Variables with initial domains, propagators and an optional objective.
///
/// Models are immutable once built; every solve copies the initial domains
/// into its own [`DomainStore`].
pub struct Model {
    name: String,
    domains: Vec<FiniteDomain>,
    propagators: Vec<Box<dyn Propagator>>,
    objective: Option<Objective>,
    decision_vars: Vec<VarId>,
    explicit_decisions: bool,
}

impl fmt::Debug for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Model")
            .field("name", &self.name)
            .field("vars", &self.domains.len())
            .field("propagators", &self.propagators.len())
            .field("objective", &self.objective)
            .finish()
    }
}

impl Model {
    pub fn new(name: impl Into<String>) -> Self {
        Model {
            name: name.into(),
            domains: Vec::new(),
            propagators: Vec::new(),
            objective: None,
            decision_vars: Vec::new(),
            explicit_decisions: false,
        }
    }

    pub fn add_var(&mut self, lo: Value, hi: Value) -> VarId {
        self.add_domain(FiniteDomain::interval(lo, hi))
    }

    pub fn add_var_with_values<I>(&mut self, values: I) -> Result<VarId, ModelError>
    where
        I: IntoIterator<Item = Value>,
    {
        FiniteDomain::from_values(values)
            .map(|d| self.add_domain(d))
            .ok_or(ModelError::EmptyDomain)
    }

    fn add_domain(&mut self, d: FiniteDomain) -> VarId {
        let x = VarId::new(self.domains.len());
        self.domains.push(d);
        if !self.explicit_decisions {
            self.decision_vars.push(x);
        }
        x
    }

    /// Posts a propagator after validating its scope.
    pub fn post<P: Propagator + 'static>(&mut self, p: P) -> Result<PropagatorId, ModelError> {
        let name = p.name();
        let scope = p.scope();
        if scope.is_empty() {
            return Err(ModelError::EmptyScope(name));
        }
        let mut seen = vec![false; self.domains.len()];
        for &var in scope {
            let slot = seen
                .get_mut(var.index())
                .ok_or(ModelError::UnknownVariable { name, var })?;
            if std::mem::replace(slot, true) {
                return Err(ModelError::DuplicateVariable { name, var });
            }
        }
        self.propagators.push(Box::new(p));
        Ok(PropagatorId::new(self.propagators.len() - 1))
    }

    pub fn set_objective(&mut self, var: VarId, direction: Direction) {
        assert!(
            var.index() < self.domains.len(),
            "undeclared objective {var}"
        );
        self.objective = Some(Objective { var, direction });
    }

    /// Restricts branching to `vars`. Defaults to every variable.
    pub fn set_decision_vars(&mut self, vars: Vec<VarId>) {
        assert!(vars.iter().all(|x| x.index() < self.domains.len()));
        self.decision_vars = vars;
        self.explicit_decisions = true;
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_vars(&self) -> usize {
        self.domains.len()
    }

    pub fn num_propagators(&self) -> usize {
        self.propagators.len()
    }

    pub fn domains(&self) -> &[FiniteDomain] {
        &self.domains
    }

    pub fn propagators(&self) -> &[Box<dyn Propagator>] {
        &self.propagators
    }

    pub fn objective(&self) -> Option<Objective> {
        self.objective
    }

    pub fn decision_vars(&self) -> &[VarId] {
        &self.decision_vars
    }

    pub fn initial_store(&self) -> DomainStore {
        DomainStore::new(self.domains.clone())
    }

    /// Re-checks the structural invariants: non-empty duplicate-free scopes
    /// over declared variables, and a declared objective.
    pub fn audit(&self) -> Result<(), ModelError> {
        for p in &self.propagators {
            let name = p.name();
            if p.scope().is_empty() {
                return Err(ModelError::EmptyScope(name));
            }
            let mut seen = vec![false; self.domains.len()];
            for &var in p.scope() {
                let slot = seen
                    .get_mut(var.index())
                    .ok_or(ModelError::UnknownVariable { name, var })?;
                if std::mem::replace(slot, true) {
                    return Err(ModelError::DuplicateVariable { name, var });
                }
            }
        }
        if let Some(obj) = self.objective {
            if obj.var.index() >= self.domains.len() {
                return Err(ModelError::UnknownVariable {
                    name: "objective",
                    var: obj.var,
                });
            }
        }
        Ok(())
    }

    /// Checks a full assignment against the initial domains and every
    /// constraint, without running any filtering.
    pub fn is_solution(&self, assignment: &[Value]) -> bool {
        assignment.len() == self.domains.len()
            && self
                .domains
                .iter()
                .zip(assignment)
                .all(|(d, &v)| d.contains(v))
            && self.propagators.iter().all(|p| p.is_satisfied(assignment))
    }
}
