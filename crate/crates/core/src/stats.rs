//! Monte Carlo estimates, tail diagnostics and the two-sample
//! Kolmogorov–Smirnov test.

use serde::{Deserialize, Serialize};

/// Diagnostic flags carried alongside numerical results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Warning {
    /// Time step coarser than ε²/4: the kernel is not resolved along paths.
    UnderResolved,
    /// Lattice spacing coarser than ε/3.
    LatticeUnderResolved,
    /// The top 1% of weights carry more than half of the total weight.
    HeavyTail,
    /// The mean is not representable as f64; see `log_mean`.
    Overflow,
}

impl Warning {
    pub fn as_str(&self) -> &'static str {
        match self {
            Warning::UnderResolved => "under_resolved",
            Warning::LatticeUnderResolved => "lattice_under_resolved",
            Warning::HeavyTail => "heavy_tail",
            Warning::Overflow => "overflow",
        }
    }
}

/// Joins warnings as `a|b` for CSV cells.
pub fn join_warnings(w: &[Warning]) -> String {
    w.iter().map(Warning::as_str).collect::<Vec<_>>().join("|")
}

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    /// Sample standard deviation over √n_samples.
    pub stderr: f64,
    pub n_samples: usize,
    pub master_seed: u64,
    pub warnings: Vec<Warning>,
    /// log|mean|, meaningful even when `mean` overflows.
    pub log_mean: f64,
}

/// Share of total weight above which [`Warning::HeavyTail`] is raised.
pub const HEAVY_TAIL_SHARE: f64 = 0.5;

impl Estimate {
    /// Estimate from plain samples.
    pub fn from_samples(samples: &[f64], master_seed: u64) -> Self {
        let weights: Vec<LogWeight> = samples.iter().map(|&x| LogWeight::from_value(x)).collect();
        Self::from_log_weights(&weights, master_seed)
    }

    /// Estimate of E[s·e^l] from samples stored as (l, s). Accumulation is
    /// shifted by the largest l so large exponents do not overflow before
    /// the final rescaling.
    pub fn from_log_weights(samples: &[LogWeight], master_seed: u64) -> Self {
        let n = samples.len();
        let shift = samples
            .iter()
            .filter(|w| w.sign != 0.0)
            .map(|w| w.log_abs)
            .fold(f64::NEG_INFINITY, f64::max);
        if n == 0 || shift == f64::NEG_INFINITY {
            return Estimate {
                mean: 0.0,
                stderr: 0.0,
                n_samples: n,
                master_seed,
                warnings: Vec::new(),
                log_mean: f64::NEG_INFINITY,
            };
        }
        let scaled: Vec<f64> = samples.iter().map(|w| w.sign * (w.log_abs - shift).exp()).collect();
        let (m, se) = mean_and_stderr(&scaled);
        let mut warnings = Vec::new();
        if heavy_tail_share(&scaled) > HEAVY_TAIL_SHARE {
            warnings.push(Warning::HeavyTail);
        }
        let scale = shift.exp();
        let mean = m * scale;
        let stderr = se * scale;
        if !mean.is_finite() || !stderr.is_finite() {
            warnings.push(Warning::Overflow);
        }
        Estimate {
            mean,
            stderr,
            n_samples: n,
            master_seed,
            warnings,
            log_mean: m.abs().ln() + shift,
        }
    }

    pub fn has(&self, w: Warning) -> bool {
        self.warnings.contains(&w)
    }

    pub(crate) fn add_warning(&mut self, w: Warning) {
        if !self.warnings.contains(&w) {
            self.warnings.push(w);
            self.warnings.sort();
        }
    }
}

/// A sample `sign·exp(log_abs)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogWeight {
    pub log_abs: f64,
    pub sign: f64,
}

impl LogWeight {
    pub fn from_value(x: f64) -> Self {
        if x == 0.0 {
            LogWeight {
                log_abs: f64::NEG_INFINITY,
                sign: 0.0,
            }
        } else {
            LogWeight {
                log_abs: x.abs().ln(),
                sign: x.signum(),
            }
        }
    }
}

/// Sample mean and standard error (sample sd / √n), summed in index order.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - 1) as f64 / n as f64).sqrt())
}

/// Fraction of Σ|w| carried by the largest 1% (at least one) of |w|.
pub fn heavy_tail_share(weights: &[f64]) -> f64 {
    if weights.is_empty() {
        return 0.0;
    }
    let mut abs: Vec<f64> = weights.iter().map(|w| w.abs()).collect();
    abs.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = abs.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    let top = weights.len().div_ceil(100);
    abs[..top].iter().sum::<f64>() / total
}

/// Pearson sample correlation.
pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic p-value
/// Q(λ), λ = (√nₑ + 0.12 + 0.11/√nₑ)·D, nₑ = n₁n₂/(n₁ + n₂).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    assert!(!a.is_empty() && !b.is_empty(), "KS test needs nonempty samples");
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n1 - j as f64 / n2).abs());
    }
    let ne = (n1 * n2 / (n1 + n2)).sqrt();
    let lambda = (ne + 0.12 + 0.11 / ne) * d;
    KsResult {
        statistic: d,
        p_value: kolmogorov_q(lambda),
    }
}

/// Q(λ) = 2 Σ_{k≥1} (−1)^{k−1} exp(−2k²λ²).
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = sign * (-2.0 * k * k * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
