//! The finite part of ν_ε(t) − C_ε·t as ε → 0.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{Family, MollifierKernel, RenormSpec};
use crate::error::{Error, Result};

/// Fitted regression residual above which extraction is reported as failed.
pub const MAX_FIT_RESIDUAL: f64 = 1e-4;

/// Time grid for the regression: 20 equispaced points on [0.1, 2].
const FIT_TIMES: (f64, f64, usize) = (0.1, 2.0, 20);

/// Mollification scales used for the ε → 0 extrapolation.
const EXTRAPOLATION_EPS: [f64; 3] = [0.02, 0.01, 0.005];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitConstants {
    pub mu1: f64,
    pub mu2: f64,
    /// Max abs deviation of the extrapolated values from t(μ₁ + μ₂ log t);
    /// zero for closed forms.
    pub residual: f64,
}

/// (μ₁, μ₂) with ν_ε(t) − C_ε·t → t(μ₁ + μ₂ log t), d = 2 only.
///
/// Gaussian kernels use the closed form μ₂ = 1/(2π),
/// μ₁ = −(1 + log 2σ²)/(2π); other families go through
/// [`limit_constants_numeric`].
pub fn limit_constants(k: &MollifierKernel) -> Result<LimitConstants> {
    if k.dim() != 2 {
        return Err(Error::input("limit constants are defined for d = 2 only"));
    }
    match k.family() {
        Family::Gaussian { sigma2 } => Ok(LimitConstants {
            mu1: -(1.0 + (2.0 * sigma2).ln()) / (2.0 * PI),
            mu2: 1.0 / (2.0 * PI),
            residual: 0.0,
        }),
        Family::Bump { .. } => limit_constants_numeric(k),
    }
}

/// Extraction by extrapolation and regression, for any kernel.
///
/// For each t on the fit grid, f_ε(t) = ν_ε(t) − C_ε·t is evaluated at three
/// small ε and extrapolated to ε = 0 assuming f_ε = f₀ + A·ε² log ε + B·ε².
/// The limits are then regressed on the basis {t, t log t}.
pub fn limit_constants_numeric(k: &MollifierKernel) -> Result<LimitConstants> {
    if k.dim() != 2 {
        return Err(Error::input("limit constants are defined for d = 2 only"));
    }
    let renorm = RenormSpec {
        d: 2,
        c1: 0.0,
        c2: 0.0,
        mu1: 0.0,
        mu2: 0.0,
    };
    let (t_lo, t_hi, n_t) = FIT_TIMES;
    let mut samples = Vec::with_capacity(n_t);
    for i in 0..n_t {
        let t = t_lo + (t_hi - t_lo) * i as f64 / (n_t - 1) as f64;
        let mut rows = [[0.0; 3]; 3];
        let mut rhs = [0.0; 3];
        for (j, &eps) in EXTRAPOLATION_EPS.iter().enumerate() {
            let e2 = eps * eps;
            rows[j] = [1.0, e2 * eps.ln(), e2];
            rhs[j] = k.nu(eps, t)? - renorm.constant(eps)? * t;
        }
        samples.push((t, solve3(rows, rhs)[0]));
    }

    // Least squares on {t, t log t}, no intercept.
    let (mut s11, mut s12, mut s22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(t, f) in &samples {
        let (x1, x2) = (t, t * t.ln());
        s11 += x1 * x1;
        s12 += x1 * x2;
        s22 += x2 * x2;
        b1 += x1 * f;
        b2 += x2 * f;
    }
    let det = s11 * s22 - s12 * s12;
    let mu1 = (s22 * b1 - s12 * b2) / det;
    let mu2 = (s11 * b2 - s12 * b1) / det;
    let residual = samples
        .iter()
        .map(|&(t, f)| (f - t * (mu1 + mu2 * t.ln())).abs())
        .fold(0.0, f64::max);
    if !(residual <= MAX_FIT_RESIDUAL) {
        return Err(Error::numerical(format!(
            "limit-constant regression residual {residual:e} exceeds {MAX_FIT_RESIDUAL:e}"
        )));
    }
    Ok(LimitConstants { mu1, mu2, residual })
}

/// Gaussian elimination with partial pivoting for a 3×3 system.
#[allow(clippy::needless_range_loop)]
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let m = a[row][col] / a[col][col];
            for c in col..3 {
                a[row][c] -= m * a[col][c];
            }
            b[row] -= m * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let tail: f64 = (row + 1..3).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_closed_form() {
        let k = MollifierKernel::gaussian(0.5, 2).unwrap();
        let lc = limit_constants(&k).unwrap();
        assert!((lc.mu1 + 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert!((lc.mu2 - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert!((lc.mu1 + 0.159155).abs() < 1e-6);
    }

    #[test]
    fn numeric_route_recovers_gaussian_closed_form() {
        for sigma2 in [0.5, 0.2, 1.3] {
            let k = MollifierKernel::gaussian(sigma2, 2).unwrap();
            let closed = limit_constants(&k).unwrap();
            let numeric = limit_constants_numeric(&k).unwrap();
            assert!((closed.mu1 - numeric.mu1).abs() < 1e-5, "{closed:?} {numeric:?}");
            assert!((closed.mu2 - numeric.mu2).abs() < 1e-5, "{closed:?} {numeric:?}");
            assert!(numeric.residual < MAX_FIT_RESIDUAL);
        }
    }

    #[test]
    fn plug_in_check_at_small_eps() {
        // f(1) = μ₁ versus ν_ε(1) − C_ε at ε = 0.01.
        let k = MollifierKernel::gaussian(0.5, 2).unwrap();
        let eps = 0.01;
        let f1 = k.nu(eps, 1.0).unwrap() - (1.0 / eps).ln() / PI;
        assert!((f1 - limit_constants(&k).unwrap().mu1).abs() < 1e-3);
    }

    #[test]
    fn other_dimensions_rejected() {
        let k = MollifierKernel::gaussian(0.5, 3).unwrap();
        assert!(matches!(limit_constants(&k), Err(Error::Input(_))));
    }

    #[test]
    fn solve3_identity() {
        let x = solve3([[0.0, 2.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 4.0]], [2.0, 3.0, 8.0]);
        assert_eq!(x, [3.0, 1.0, 2.0]);
    }
}
