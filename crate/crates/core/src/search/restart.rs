use crate::models::Model;

#[derive(Copy, Clone, Debug, PartialEq)]
pub enum RestartMode {
    NoRestart,
    /// Failure limit grows by this factor (> 1) after every round.
    Geometric(f64),
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct RestartPolicy {
    pub mode: RestartMode,
    pub initial_limit: u64,
}

impl RestartPolicy {
    pub fn none() -> Self {
        RestartPolicy {
            mode: RestartMode::NoRestart,
            initial_limit: 1,
        }
    }

    pub fn geometric(rho: f64, initial_limit: u64) -> Self {
        assert!(rho > 1.0, "growth factor must exceed 1, got {rho}");
        assert!(initial_limit >= 1, "initial failure limit must be positive");
        RestartPolicy {
            mode: RestartMode::Geometric(rho),
            initial_limit,
        }
    }

    /// Geometric restarts starting from three failures per variable.
    pub fn geometric_for(rho: f64, model: &Model) -> Self {
        Self::geometric(rho, (3 * model.num_vars() as u64).max(1))
    }

    /// Failure limits of successive rounds; empty without restarts.
    pub fn limits(&self) -> impl Iterator<Item = u64> {
        let rho = match self.mode {
            RestartMode::Geometric(rho) => Some(rho),
            RestartMode::NoRestart => None,
        };
        let first = rho.map(|_| self.initial_limit);
        std::iter::successors(first, move |&l| Some(next_limit(l, rho.unwrap())))
    }
}

/// `ceil(rho * l)`, with a little slack so that e.g. 1.1 * 30 stays 33.
pub fn next_limit(limit: u64, rho: f64) -> u64 {
    (rho * limit as f64 - 1e-9).ceil() as u64
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum RestartDecision {
    Continue,
    RestartNow,
}

/// Tracks failures within the current round.
#[derive(Clone, Debug)]
pub struct RestartController {
    policy: RestartPolicy,
    limit: u64,
    failures: u64,
    round: u64,
}

impl RestartController {
    pub fn new(policy: RestartPolicy) -> Self {
        RestartController {
            policy,
            limit: policy.initial_limit,
            failures: 0,
            round: 0,
        }
    }

    pub fn on_failure(&mut self) -> RestartDecision {
        self.failures += 1;
        match self.policy.mode {
            RestartMode::Geometric(_) if self.failures >= self.limit => RestartDecision::RestartNow,
            _ => RestartDecision::Continue,
        }
    }

    pub fn start_next_round(&mut self) {
        if let RestartMode::Geometric(rho) = self.policy.mode {
            self.limit = next_limit(self.limit, rho);
        }
        self.failures = 0;
        self.round += 1;
    }

    pub fn current_limit(&self) -> u64 {
        self.limit
    }

    pub fn round(&self) -> u64 {
        self.round
    }
}
