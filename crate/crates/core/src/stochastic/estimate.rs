/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: u64,
    /// Deterministic bias bound (absorption shell, truncation), if any.
    pub bias_bound: f64,
    /// Samples cut off by the step limit.
    pub truncated: u64,
}

impl McEstimate {
    /// `|mean − target| ≤ k·stderr + slack`.
    pub fn agrees_with(&self, target: f64, k: f64, slack: f64) -> bool {
        (self.mean - target).abs() <= k * self.stderr + slack
    }
}

/// Streaming mean and variance (Welford), mergeable in a fixed order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct McAccumulator {
    n: u64,
    mean: f64,
    m2: f64,
    pub truncated: u64,
}

impl McAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    /// Combine with another accumulator (Chan et al. pairwise update).
    pub fn merge(&mut self, other: &Self) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        self.mean += d * other.n as f64 / n as f64;
        self.m2 += other.m2 + d * d * (self.n as f64) * (other.n as f64) / n as f64;
        self.n = n;
        self.truncated += other.truncated;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n > 1 {
            self.m2 / (self.n - 1) as f64
        } else {
            0.0
        }
    }

    pub fn finish(&self, bias_bound: f64) -> McEstimate {
        let stderr = if self.n > 1 {
            libm::sqrt(self.variance() / self.n as f64)
        } else {
            f64::INFINITY
        };
        McEstimate {
            mean: self.mean,
            stderr,
            n: self.n,
            bias_bound,
            truncated: self.truncated,
        }
    }
}
