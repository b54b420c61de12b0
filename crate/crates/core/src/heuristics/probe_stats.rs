//! Running statistics over probe activity vectors and the confidence-interval
//! stopping rule used to decide when enough probes have been drawn.

/// Two-sided 95% Student-t critical values for 1..=30 degrees of freedom.
const T_TABLE: [f64; 30] = [
    12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228, 2.201, 2.179, 2.160,
    2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064, 2.060, 2.056,
    2.052, 2.048, 2.045, 2.042,
];

/// Two-sided 95% critical value of Student's t with `df` degrees of freedom;
/// the normal quantile 1.960 beyond 30.
pub fn t_critical(df: usize) -> f64 {
    assert!(
        df >= 1,
        "t distribution needs at least one degree of freedom"
    );
    T_TABLE.get(df - 1).copied().unwrap_or(1.960)
}

/// Welford accumulator of per-variable probe activity, plus running means of
/// assignment activity per `(variable, value)`.
#[derive(Clone, Debug)]
pub struct ProbeAccumulator {
    count: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl ProbeAccumulator {
    pub fn new(num_vars: usize) -> Self {
        ProbeAccumulator {
            count: 0,
            mean: vec![0.0; num_vars],
            m2: vec![0.0; num_vars],
        }
    }

    /// Folds in the activity vector of one completed probe.
    pub fn fold(&mut self, activity: &[f64]) {
        assert_eq!(activity.len(), self.mean.len());
        self.count += 1;
        let n = self.count as f64;
        for ((mean, m2), &a) in self.mean.iter_mut().zip(&mut self.m2).zip(activity) {
            let delta = a - *mean;
            *mean += delta / n;
            *m2 += delta * (a - *mean);
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn means(&self) -> &[f64] {
        &self.mean
    }

    pub fn mean(&self, x: usize) -> f64 {
        self.mean[x]
    }

    /// Sample variance (n - 1 denominator); 0 for fewer than two probes.
    pub fn variance(&self, x: usize) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2[x] / (self.count - 1) as f64
        }
    }

    pub fn std_dev(&self, x: usize) -> f64 {
        self.variance(x).sqrt()
    }

    /// `max_x t(n-1) * sd(x) / (sqrt(n) * mean(x))` over variables whose mean
    /// exceeds `epsilon`; 0 when none qualifies. Infinite below two probes.
    pub fn max_relative_half_width(&self, epsilon: f64) -> f64 {
        if self.count < 2 {
            return f64::INFINITY;
        }
        let t = t_critical(self.count - 1);
        let root_n = (self.count as f64).sqrt();
        (0..self.mean.len())
            .filter(|&x| self.mean[x] > epsilon)
            .map(|x| t * self.std_dev(x) / (root_n * self.mean[x]))
            .fold(0.0, f64::max)
    }
}

/// When to stop drawing probes.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct StoppingRule {
    /// Relative half-width target of the 95% interval.
    pub delta: f64,
    pub min_probes: usize,
    pub max_probes: usize,
    /// Means at or below this are exempt from the relative test.
    pub epsilon: f64,
}

impl StoppingRule {
    pub fn new(delta: f64) -> Self {
        StoppingRule {
            delta,
            min_probes: 10,
            max_probes: 1000,
            epsilon: 1e-6,
        }
    }

    /// Whether the interval is tight enough for every variable.
    pub fn converged(&self, acc: &ProbeAccumulator) -> bool {
        acc.count() >= self.min_probes.max(2)
            && acc.max_relative_half_width(self.epsilon) <= self.delta
    }

    pub fn should_stop(&self, acc: &ProbeAccumulator) -> bool {
        acc.count() >= self.max_probes || self.converged(acc)
    }
}
