//! Mollifiers, the covariance kernel `R = ρ⋆ρ`, its heat-smoothed values,
//! the exact self-intersection mean `ν_ε(t)` and renormalization constants.

mod bump;
mod limit;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;

pub use limit::{limit_constants, limit_constants_numeric, LimitConstants, MAX_FIT_RESIDUAL};

/// Relative tolerance used by every quadrature path in this module.
pub const QUAD_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Family {
    /// ρ = N(0, σ²·I), so R = N(0, 2σ²·I).
    Gaussian { sigma2: f64 },
    /// ρ(x) ∝ exp(−1/(1 − |x|²/r²)) on |x| < r.
    Bump { support_radius: f64 },
}

/// A radial mollifier ρ in dimension `d` together with R = ρ⋆ρ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MollifierKernel {
    family: Family,
    d: usize,
}

impl MollifierKernel {
    pub fn new(family: Family, d: usize) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(Error::input(format!("dimension must be 1, 2 or 3, got {d}")));
        }
        match family {
            Family::Gaussian { sigma2 } if !(sigma2 > 0.0 && sigma2.is_finite()) => {
                return Err(Error::input(format!("gaussian sigma2 must be positive, got {sigma2}")))
            }
            Family::Bump { support_radius } if !(support_radius > 0.0 && support_radius.is_finite()) => {
                return Err(Error::input(format!(
                    "bump support_radius must be positive, got {support_radius}"
                )))
            }
            _ => {}
        }
        Ok(Self { family, d })
    }

    pub fn gaussian(sigma2: f64, d: usize) -> Result<Self> {
        Self::new(Family::Gaussian { sigma2 }, d)
    }

    pub fn bump(support_radius: f64, d: usize) -> Result<Self> {
        Self::new(Family::Bump { support_radius }, d)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self.family, Family::Gaussian { .. })
    }

    /// Radius beyond which R vanishes, if compactly supported.
    pub fn support(&self) -> Option<f64> {
        match self.family {
            Family::Gaussian { .. } => None,
            Family::Bump { support_radius } => Some(2.0 * support_radius),
        }
    }

    /// Per-coordinate variance of R for the Gaussian family.
    pub(crate) fn gaussian_cov_variance(&self) -> Option<f64> {
        match self.family {
            Family::Gaussian { sigma2 } => Some(2.0 * sigma2),
            Family::Bump { .. } => None,
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.d {
            return Err(Error::input(format!(
                "point has {} coordinates but the kernel is {}-dimensional",
                x.len(),
                self.d
            )));
        }
        Ok(x.iter().map(|v| v * v).sum::<f64>().sqrt())
    }

    /// ρ at radius `r`.
    pub fn mollifier_radial(&self, r: f64) -> f64 {
        let d = self.d as i32;
        match self.family {
            Family::Gaussian { sigma2 } => (2.0 * PI * sigma2).powf(-0.5 * d as f64) * (-r * r / (2.0 * sigma2)).exp(),
            Family::Bump { support_radius } => {
                bump::UnitBump::get(self.d).profile(r / support_radius) / support_radius.powi(d)
            }
        }
    }

    /// ρ(x).
    pub fn mollifier(&self, x: &[f64]) -> Result<f64> {
        let r = self.check_point(x)?;
        Ok(self.mollifier_radial(r))
    }

    /// R at radius `r`.
    pub fn radial(&self, r: f64) -> f64 {
        let d = self.d as i32;
        match self.family {
            Family::Gaussian { sigma2 } => {
                let var = 2.0 * sigma2;
                (2.0 * PI * var).powf(-0.5 * d as f64) * (-r * r / (2.0 * var)).exp()
            }
            Family::Bump { support_radius } => {
                bump::UnitBump::get(self.d).covariance(r / support_radius) / support_radius.powi(d)
            }
        }
    }

    /// R(x).
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        let r = self.check_point(x)?;
        Ok(self.radial(r))
    }

    /// R_ε at radius `r`: ε^{-d}·R(r/ε). No validation, for inner loops.
    #[inline]
    pub fn scaled_radial(&self, eps: f64, r: f64) -> f64 {
        self.radial(r / eps) / eps.powi(self.d as i32)
    }

    /// R_ε(x) = ε^{-d}·R(x/ε).
    pub fn scaled(&self, eps: f64, x: &[f64]) -> Result<f64> {
        check_eps(eps)?;
        let r = self.check_point(x)?;
        Ok(self.scaled_radial(eps, r))
    }

    /// g_ε(v) = E[R_ε(B_v)] = ∫ R_ε(x) p_v(x) dx.
    pub fn heat_smoothed(&self, eps: f64, v: f64) -> Result<f64> {
        check_eps(eps)?;
        if !(v >= 0.0) {
            return Err(Error::input(format!("time lag must be nonnegative, got {v}")));
        }
        let d = self.d as f64;
        match self.family {
            Family::Gaussian { sigma2 } => Ok((2.0 * PI * (v + 2.0 * sigma2 * eps * eps)).powf(-0.5 * d)),
            Family::Bump { support_radius } => {
                if v == 0.0 {
                    return Ok(self.scaled_radial(eps, 0.0));
                }
                let outer = 2.0 * support_radius * eps;
                let area = bump::sphere_area(self.d);
                let norm = (2.0 * PI * v).powf(-0.5 * d);
                let integrand = |rho: f64| {
                    area * rho.powi(self.d as i32 - 1)
                        * self.scaled_radial(eps, rho)
                        * norm
                        * (-rho * rho / (2.0 * v)).exp()
                };
                // Beyond 40 standard deviations the heat kernel is below e^-800.
                let cut = outer.min(40.0 * v.sqrt());
                let knee = cut.min(6.0 * v.sqrt());
                let head = quad::adaptive(integrand, 0.0, knee, QUAD_REL_TOL, 0.0)?;
                let tail = quad::adaptive(integrand, knee, cut, QUAD_REL_TOL, head.abs() * 1e-14)?;
                Ok(head + tail)
            }
        }
    }

    /// Length scale on which g_ε varies near lag 0 (the variance of R_ε).
    fn lag_scale(&self, eps: f64) -> f64 {
        match self.family {
            Family::Gaussian { sigma2 } => 2.0 * sigma2 * eps * eps,
            Family::Bump { support_radius } => (support_radius * eps).powi(2),
        }
    }

    /// ν_ε(t) = ∫_0^t (t − v) g_ε(v) dv, the mean of the strict-simplex
    /// self-intersection functional. Closed form for Gaussian kernels.
    pub fn nu(&self, eps: f64, t: f64) -> Result<f64> {
        check_eps(eps)?;
        check_time(t)?;
        if t == 0.0 {
            return Ok(0.0);
        }
        match self.family {
            Family::Gaussian { sigma2 } => Ok(gaussian_nu(self.d, 2.0 * sigma2 * eps * eps, t)),
            Family::Bump { .. } => self.nu_quadrature(eps, t),
        }
    }

    /// ν_ε(t) through Gauss–Legendre quadrature on log-spaced panels,
    /// regardless of family.
    pub fn nu_quadrature(&self, eps: f64, t: f64) -> Result<f64> {
        check_eps(eps)?;
        check_time(t)?;
        if t == 0.0 {
            return Ok(0.0);
        }
        let scale = self.lag_scale(eps);
        quad::log_panels(
            |v| (t - v) * self.heat_smoothed(eps, v).unwrap_or(f64::NAN),
            0.0,
            t,
            scale,
            QUAD_REL_TOL,
        )
    }

    /// E[α_ε([0,t]²)] = ∫∫_{[0,t]²} g_ε(s + u) ds du for two independent
    /// paths started at the same point.
    pub fn mutual_mean(&self, eps: f64, t: f64) -> Result<f64> {
        check_eps(eps)?;
        check_time(t)?;
        if t == 0.0 {
            return Ok(0.0);
        }
        if let (Family::Gaussian { sigma2 }, 2) = (self.family, self.d) {
            let a = 2.0 * sigma2 * eps * eps;
            let xlogx = |x: f64| x * x.ln();
            return Ok((xlogx(2.0 * t + a) - 2.0 * xlogx(t + a) + xlogx(a)) / (2.0 * PI));
        }
        let scale = self.lag_scale(eps);
        let g = |w: f64| self.heat_smoothed(eps, w).unwrap_or(f64::NAN);
        let rising = quad::log_panels(|w| w * g(w), 0.0, t, scale, QUAD_REL_TOL)?;
        let falling = quad::adaptive(|w| (2.0 * t - w) * g(w), t, 2.0 * t, QUAD_REL_TOL, 0.0)?;
        Ok(rising + falling)
    }

    /// min of R over the closed ball of the given radius.
    pub fn min_on_ball(&self, radius: f64) -> f64 {
        if self.is_gaussian() {
            return self.radial(radius);
        }
        (0..=4000)
            .map(|i| self.radial(radius * i as f64 / 4000.0))
            .fold(f64::INFINITY, f64::min)
    }

    /// ∫ R(x)·G(x) dx with G(x) = 1/(2π|x|) the Green's function of ½Δ in
    /// three dimensions: the coefficient of the 1/ε divergence of ν_ε(t)/t.
    pub fn green_coefficient_3d(&self) -> Result<f64> {
        if self.d != 3 {
            return Err(Error::input("the 1/ε coefficient is defined for d = 3 only"));
        }
        match self.family {
            Family::Gaussian { sigma2 } => Ok((2.0 / PI).sqrt() / (2.0 * PI * (2.0 * sigma2).sqrt())),
            Family::Bump { support_radius } => {
                let outer = 2.0 * support_radius;
                Ok(2.0 * quad::adaptive(|r| self.radial(r) * r, 0.0, outer, QUAD_REL_TOL, 0.0)?)
            }
        }
    }
}

/// Closed-form ν_ε(t) for a Gaussian kernel with R_ε variance `a`.
fn gaussian_nu(d: usize, a: f64, t: f64) -> f64 {
    let ta = t + a;
    match d {
        1 => (2.0 / (2.0 * PI).sqrt()) * (ta * (ta.sqrt() - a.sqrt()) - (ta.powf(1.5) - a.powf(1.5)) / 3.0),
        2 => (ta * (t / a).ln_1p() - t) / (2.0 * PI),
        3 => (2.0 * PI).powf(-1.5) * (2.0 * ta * (1.0 / a.sqrt() - 1.0 / ta.sqrt()) - 2.0 * (ta.sqrt() - a.sqrt())),
        _ => unreachable!(),
    }
}

pub(crate) fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::input(format!("eps must be positive and finite, got {eps}")))
    }
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::input(format!("time must be nonnegative and finite, got {t}")))
    }
}

/// Renormalization data for one dimension.
///
/// `mu1`, `mu2` are the constants with ν_ε(t) − C_ε·t → t(μ₁ + μ₂ log t) in
/// d = 2 and are zero otherwise. `c1`, `c2` parametrize C_ε = c₁/ε + c₂·log(1/ε)
/// in d = 3 and are unused otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenormSpec {
    pub d: usize,
    pub c1: f64,
    pub c2: f64,
    pub mu1: f64,
    pub mu2: f64,
}

impl RenormSpec {
    /// Defaults for a kernel: μ's from [`limit_constants`] in d = 2, and in
    /// d = 3 c₁ = ∫R(x)/(2π|x|)dx with c₂ = 0.
    pub fn for_kernel(k: &MollifierKernel) -> Result<Self> {
        let mut spec = RenormSpec {
            d: k.dim(),
            c1: 0.0,
            c2: 0.0,
            mu1: 0.0,
            mu2: 0.0,
        };
        match k.dim() {
            2 => {
                let lc = limit_constants(k)?;
                spec.mu1 = lc.mu1;
                spec.mu2 = lc.mu2;
            }
            3 => spec.c1 = k.green_coefficient_3d()?,
            _ => {}
        }
        Ok(spec)
    }

    /// C_ε: 0 in d = 1, log(1/ε)/π in d = 2, c₁/ε + c₂·log(1/ε) in d = 3.
    pub fn constant(&self, eps: f64) -> Result<f64> {
        check_eps(eps)?;
        Ok(match self.d {
            1 => 0.0,
            2 => (1.0 / eps).ln() / PI,
            _ => self.c1 / eps + self.c2 * (1.0 / eps).ln(),
        })
    }

    /// t(μ₁ + μ₂ log t), the finite limit of ν_ε(t) − C_ε·t.
    pub fn limit_shift(&self, t: f64) -> f64 {
        if t == 0.0 {
            0.0
        } else {
            t * (self.mu1 + self.mu2 * t.ln())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g2() -> MollifierKernel {
        MollifierKernel::gaussian(0.5, 2).unwrap()
    }

    #[test]
    fn gaussian_kernel_values() {
        let k = g2();
        assert!((k.value(&[0.0, 0.0]).unwrap() - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert!((k.value(&[1.0, 0.0]).unwrap() - (-0.5f64).exp() / (2.0 * PI)).abs() < 1e-15);
        assert!((k.value(&[1.0, 0.0]).unwrap() - 0.096532).abs() < 1e-6);
        assert_eq!(k.value(&[0.3, -0.7]).unwrap(), k.value(&[-0.3, 0.7]).unwrap());
    }

    #[test]
    fn dimension_mismatch_is_an_input_error() {
        assert!(matches!(g2().value(&[1.0]), Err(Error::Input(_))));
        assert!(matches!(g2().scaled(0.1, &[1.0, 2.0, 3.0]), Err(Error::Input(_))));
        assert!(MollifierKernel::gaussian(0.5, 4).is_err());
        assert!(MollifierKernel::bump(-1.0, 2).is_err());
    }

    #[test]
    fn scaled_kernel() {
        let k = g2();
        let x = [0.4, -0.2];
        assert_eq!(k.scaled(1.0, &x).unwrap(), k.value(&x).unwrap());
        assert!((k.scaled(0.1, &[0.0, 0.0]).unwrap() - 100.0 / (2.0 * PI)).abs() < 1e-12);
        assert!(k.scaled(0.0, &x).is_err());
        assert!(k.scaled(-0.1, &x).is_err());
    }

    #[test]
    fn heat_smoothed_gaussian() {
        let k = g2();
        let g0 = k.heat_smoothed(0.1, 0.0).unwrap();
        assert!((g0 - 1.0 / (2.0 * PI * 0.01)).abs() < 1e-10);
        assert!((g0 - 15.9155).abs() < 1e-4);
        let g1 = k.heat_smoothed(0.1, 1.0).unwrap();
        assert!((g1 - 1.0 / (2.0 * PI * 1.01)).abs() < 1e-14);
        assert!((g1 - 0.157579).abs() < 1e-6);
        let mut prev = f64::INFINITY;
        for v in [0.0, 0.1, 1.0, 10.0, 100.0, 1e4] {
            let g = k.heat_smoothed(0.1, v).unwrap();
            assert!(g < prev);
            prev = g;
        }
        assert!(prev < 1e-4);
    }

    #[test]
    fn heat_smoothed_bump_decays_monotonically() {
        let k = MollifierKernel::bump(1.0, 2).unwrap();
        let mut prev = f64::INFINITY;
        for v in [0.0, 1e-4, 1e-2, 0.1, 1.0, 10.0] {
            let g = k.heat_smoothed(0.1, v).unwrap();
            assert!(g < prev, "v={v}: {g} !< {prev}");
            prev = g;
        }
        // Far out the kernel looks like a point mass.
        let g = k.heat_smoothed(0.1, 10.0).unwrap();
        assert!((g - 1.0 / (2.0 * PI * 10.0)).abs() < 1e-3 * g);
    }

    #[test]
    fn nu_gaussian_closed_form() {
        let k = g2();
        assert_eq!(k.nu(0.1, 0.0).unwrap(), 0.0);
        let expected = (1.01 * 101f64.ln() - 1.0) / (2.0 * PI);
        let nu = k.nu(0.1, 1.0).unwrap();
        assert!((nu - expected).abs() < 1e-14);
        assert!((nu - 0.58271).abs() < 1e-5);
        assert!(k.nu(0.0, 1.0).is_err());
    }

    #[test]
    fn nu_closed_form_matches_quadrature_in_every_dimension() {
        for d in 1..=3 {
            let k = MollifierKernel::gaussian(0.5, d).unwrap();
            for &eps in &[0.3, 0.1, 0.02] {
                for &t in &[0.05, 0.5, 2.0] {
                    let closed = k.nu(eps, t).unwrap();
                    let numeric = k.nu_quadrature(eps, t).unwrap();
                    assert!(
                        ((closed - numeric) / closed).abs() < 1e-8,
                        "d={d} eps={eps} t={t}: {closed} vs {numeric}"
                    );
                }
            }
        }
    }

    #[test]
    fn mutual_mean_gaussian() {
        let k = g2();
        // a = 2σ²ε² = 0.04
        let m = k.mutual_mean(0.2, 1.0).unwrap();
        let oracle = 0.198_002_037_318_774; // independent 2D adaptive quadrature
        assert!((m - oracle).abs() < 1e-12, "{m}");
        // Generic route agrees with the closed form.
        let k3 = MollifierKernel::gaussian(0.5, 3).unwrap();
        assert!(k3.mutual_mean(0.2, 1.0).unwrap() > 0.0);
    }

    #[test]
    fn renorm_constants() {
        let spec2 = RenormSpec {
            d: 2,
            c1: 0.0,
            c2: 0.0,
            mu1: 0.0,
            mu2: 0.0,
        };
        assert_eq!(spec2.constant(1.0).unwrap(), 0.0);
        assert!((spec2.constant(0.1).unwrap() - 10f64.ln() / PI).abs() < 1e-15);
        assert!((spec2.constant(0.1).unwrap() - 0.732936).abs() < 1e-6);
        let spec1 = RenormSpec { d: 1, ..spec2 };
        assert_eq!(spec1.constant(0.01).unwrap(), 0.0);
        let spec3 = RenormSpec {
            d: 3,
            c1: 0.5,
            c2: 2.0,
            ..spec2
        };
        assert!((spec3.constant(0.1).unwrap() - (5.0 + 2.0 * 10f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn green_coefficient_gaussian_matches_quadrature() {
        let k = MollifierKernel::gaussian(0.7, 3).unwrap();
        let closed = k.green_coefficient_3d().unwrap();
        let numeric = 2.0 * quad::adaptive(|r| k.radial(r) * r, 0.0, 40.0, 1e-12, 0.0).unwrap();
        assert!((closed - numeric).abs() < 1e-10);
    }
}
