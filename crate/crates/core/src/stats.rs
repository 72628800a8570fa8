//! Order-stable Monte Carlo reductions and the path-runner abstraction.
//!
//! Per-path results are always collected in path-index order and reduced by
//! pairwise summation, so estimates do not depend on how paths were
//! scheduled across workers.

use alloc::vec::Vec;

/// Runs `n` independent path computations and returns their results in
/// index order.
pub trait PathRunner {
    fn map_paths<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs paths one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl PathRunner for Sequential {
    fn map_paths<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}

/// Pairwise (cascade) summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        let mut s = 0.0;
        for x in xs {
            s += x;
        }
        s
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

/// Sample mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

impl MeanEstimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self { mean: f64::NAN, stderr: f64::NAN, count: 0 };
        }
        let mean = pairwise_sum(xs) / n as f64;
        if n == 1 {
            return Self { mean, stderr: 0.0, count: 1 };
        }
        let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
        let var = pairwise_sum(&dev) / (n as f64 - 1.0);
        Self { mean, stderr: libm::sqrt(var / n as f64), count: n }
    }

    /// `(mean - target) / stderr`, 0 when both the gap and the error vanish.
    pub fn z_score(&self, target: f64) -> f64 {
        let gap = self.mean - target;
        if gap == 0.0 {
            0.0
        } else {
            gap / self.stderr
        }
    }
}

/// Unbiased sample variance with the large-sample standard error
/// `sqrt((m4 - s⁴)/n)`, `m4` the central fourth moment.
pub fn variance_estimate(xs: &[f64]) -> MeanEstimate {
    let n = xs.len();
    if n < 2 {
        return MeanEstimate { mean: f64::NAN, stderr: f64::NAN, count: n };
    }
    let mean = pairwise_sum(xs) / n as f64;
    let sq: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&sq) / (n as f64 - 1.0);
    let q: Vec<f64> = sq.iter().map(|d| d * d).collect();
    let m4 = pairwise_sum(&q) / n as f64;
    MeanEstimate { mean: var, stderr: libm::sqrt(((m4 - var * var) / n as f64).max(0.0)), count: n }
}

/// Mergeable count / sum / sum-of-squares accumulator.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Accumulator {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Accumulator {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(self, other: Self) -> Self {
        Self { count: self.count + other.count, sum: self.sum + other.sum, sum_sq: self.sum_sq + other.sum_sq }
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.count as f64
    }

    pub fn variance(&self) -> f64 {
        let n = self.count as f64;
        ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0)
    }

    /// Merges per-path accumulators pairwise in index order.
    pub fn merge_all(parts: &[Accumulator]) -> Accumulator {
        match parts.len() {
            0 => Accumulator::default(),
            1 => parts[0],
            n => {
                let mid = n / 2;
                Self::merge_all(&parts[..mid]).merge(Self::merge_all(&parts[mid..]))
            }
        }
    }
}

/// Ordinary least squares `y = intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Some(LinearFit { slope, intercept, r_squared })
}
