//! Feynman–Kac Monte Carlo for E[u_ε(t, x)^n] and related functionals.
//!
//! For the equation ∂_t u = ½Δu + (ξ_ε − C_ε)u,
//!
//! ```text
//! E[u_ε(t, x)^n] = E_B[ exp(I_n^ε(t) − n·C_ε·t) · Π_k u₀(x + B^k_t) ]
//! ```
//!
//! Sample m of an estimate uses the paths with stream indices
//! `m·n + k`, k = 0..n, under the request's master seed, so results never
//! depend on the number of worker threads. Weights are kept in log space.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ilt::{self, is_resolved};
use crate::kernel::{MollifierKernel, RenormSpec};
use crate::paths::{derive_seed, sample_path, BrownianPath, SeedSpec};
use crate::stats::{Estimate, LogWeight, Warning};

/// Default ratio Δt/ε² used when the step count follows ε.
pub const DEFAULT_DT_OVER_EPS2: f64 = 1.0 / 16.0;
/// Default Hölder exponent for the admissibility bound.
pub const DEFAULT_THETA: f64 = 2.0;
/// Default exponential-moment rate: the largest λ of the standard sweep
/// (0.1, 0.25, 0.5, 1) that passes the uniformity check at M = 10⁴.
pub const DEFAULT_LAMBDA_HAT: f64 = 0.5;
/// Largest max/min ratio over an ε-sweep still counted as uniform.
pub const UNIFORMITY_RATIO: f64 = 1.5;

/// Tabulated values on a regular grid, multilinearly interpolated and zero
/// outside the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tabulated {
    /// Coordinates of the grid point with index (0, …, 0).
    pub origin: Vec<f64>,
    pub spacing: f64,
    /// Points per axis.
    pub shape: Vec<usize>,
    /// Row-major; the last axis varies fastest.
    pub values: Vec<f64>,
}

impl Tabulated {
    fn validate(&self) -> Result<()> {
        let d = self.origin.len();
        if d == 0 || self.shape.len() != d {
            return Err(Error::input(
                "tabulated u0: origin and shape must have the same, nonzero length",
            ));
        }
        if !(self.spacing > 0.0) {
            return Err(Error::input("tabulated u0: spacing must be positive"));
        }
        if self.shape.iter().any(|&s| s < 2) || self.shape.iter().product::<usize>() != self.values.len() {
            return Err(Error::input(
                "tabulated u0: values do not match shape (need ≥ 2 points per axis)",
            ));
        }
        Ok(())
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let d = self.origin.len();
        let mut base = vec![0usize; d];
        let mut frac = vec![0.0; d];
        for a in 0..d {
            let s = (x[a] - self.origin[a]) / self.spacing;
            let last = (self.shape[a] - 1) as f64;
            if !(0.0..=last).contains(&s) {
                return 0.0;
            }
            let i = (s.floor() as usize).min(self.shape[a] - 2);
            base[a] = i;
            frac[a] = s - i as f64;
        }
        let mut total = 0.0;
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            let mut idx = 0;
            for a in 0..d {
                let bit = (corner >> a) & 1;
                w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
                idx = idx * self.shape[a] + base[a] + bit;
            }
            if w != 0.0 {
                total += w * self.values[idx];
            }
        }
        total
    }
}

/// Initial datum u₀ with ‖u₀‖_∞ ≤ 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum InitialCondition {
    Constant {
        c: f64,
    },
    /// exp(−|x − center|²/(2·width²)).
    GaussianBump {
        center: Vec<f64>,
        width: f64,
    },
    Custom(Tabulated),
}

impl InitialCondition {
    pub fn one() -> Self {
        InitialCondition::Constant { c: 1.0 }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            InitialCondition::Constant { c } => {
                if !(c.abs() <= 1.0) {
                    return Err(Error::input(format!("u0 must satisfy |u0| ≤ 1, got constant {c}")));
                }
            }
            InitialCondition::GaussianBump { center, width } => {
                if center.len() != d {
                    return Err(Error::input("u0 bump center has the wrong dimension"));
                }
                if !(*width > 0.0 && width.is_finite()) {
                    return Err(Error::input("u0 bump width must be positive"));
                }
            }
            InitialCondition::Custom(tab) => {
                tab.validate()?;
                if tab.origin.len() != d {
                    return Err(Error::input("tabulated u0 has the wrong dimension"));
                }
                if let Some(v) = tab.values.iter().find(|v| !(v.abs() <= 1.0)) {
                    return Err(Error::input(format!("u0 must satisfy |u0| ≤ 1, table holds {v}")));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            InitialCondition::Constant { c } => *c,
            InitialCondition::GaussianBump { center, width } => {
                let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                (-r2 / (2.0 * width * width)).exp()
            }
            InitialCondition::Custom(tab) => tab.eval(x),
        }
    }

    /// True when u₀ ≡ 0 is known without evaluation.
    pub fn is_zero(&self) -> bool {
        match self {
            InitialCondition::Constant { c } => *c == 0.0,
            InitialCondition::Custom(tab) => tab.values.iter().all(|&v| v == 0.0),
            InitialCondition::GaussianBump { .. } => false,
        }
    }
}

/// Monte Carlo budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_paths: usize,
    /// Steps on [0, t]. Along ε-ladders this is a floor; see [`McConfig::steps_for`].
    pub n_steps: usize,
    /// Target Δt/ε² along ε-ladders.
    #[serde(default = "default_dt_over_eps2")]
    pub dt_over_eps2: f64,
}

fn default_dt_over_eps2() -> f64 {
    DEFAULT_DT_OVER_EPS2
}

impl McConfig {
    pub fn new(n_paths: usize, n_steps: usize) -> Self {
        Self {
            n_paths,
            n_steps,
            dt_over_eps2: DEFAULT_DT_OVER_EPS2,
        }
    }

    /// Step count for a rung of an ε-ladder: at least `n_steps`, and fine
    /// enough that Δt ≤ dt_over_eps2·ε². A fixed Δt/ε² keeps the Riemann
    /// bias of the self-intersection terms the same on every rung.
    pub fn steps_for(&self, t: f64, eps: f64) -> usize {
        let needed = (t / (self.dt_over_eps2 * eps * eps)).ceil();
        self.n_steps.max(needed as usize).max(1)
    }

    fn validate(&self) -> Result<()> {
        if self.n_steps == 0 {
            return Err(Error::input("mc.n_steps must be at least 1"));
        }
        if !(self.dt_over_eps2 > 0.0) {
            return Err(Error::input("mc.dt_over_eps2 must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRequest {
    pub kernel: MollifierKernel,
    pub renorm: RenormSpec,
    pub n: usize,
    pub t: f64,
    pub x: Vec<f64>,
    pub eps: f64,
    pub u0: InitialCondition,
    pub mc: McConfig,
    pub theta: f64,
    pub lambda_hat: f64,
    pub master_seed: u64,
}

impl MomentRequest {
    /// A request with u₀ ≡ 1 at the origin and default θ, λ̂ and C_ε.
    pub fn new(kernel: MollifierKernel, n: usize, t: f64, eps: f64, mc: McConfig, master_seed: u64) -> Result<Self> {
        Ok(Self {
            renorm: RenormSpec::for_kernel(&kernel)?,
            x: vec![0.0; kernel.dim()],
            kernel,
            n,
            t,
            eps,
            u0: InitialCondition::one(),
            mc,
            theta: DEFAULT_THETA,
            lambda_hat: DEFAULT_LAMBDA_HAT,
            master_seed,
        })
    }

    fn validate(&self) -> Result<()> {
        let d = self.kernel.dim();
        if self.n == 0 {
            return Err(Error::input("moment order n must be at least 1"));
        }
        if !(self.t >= 0.0 && self.t.is_finite()) {
            return Err(Error::input(format!(
                "t must be finite and nonnegative, got {}",
                self.t
            )));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::input(format!("eps must be positive, got {}", self.eps)));
        }
        if self.x.len() != d || self.renorm.d != d {
            return Err(Error::input("x, renorm and kernel dimensions disagree"));
        }
        self.u0.validate(d)?;
        self.mc.validate()
    }
}

/// Per-sample pieces: the intersection exponent I and log|Πu₀|, sign.
#[derive(Debug, Clone, Copy)]
struct Draw {
    i_n: f64,
    log_u: f64,
    sign: f64,
}

struct Draws {
    draws: Vec<Draw>,
    under_resolved: bool,
}

impl Draws {
    fn weights(&self, shift: f64) -> Vec<LogWeight> {
        self.draws
            .iter()
            .map(|d| LogWeight {
                log_abs: d.i_n + shift + d.log_u,
                sign: d.sign,
            })
            .collect()
    }

    fn estimate(&self, shift: f64, seed: u64) -> Estimate {
        let mut est = Estimate::from_log_weights(&self.weights(shift), seed);
        if self.under_resolved {
            est.add_warning(Warning::UnderResolved);
        }
        est
    }
}

fn sample_paths(
    d: usize,
    t: f64,
    n_steps: usize,
    seed: u64,
    first_stream: u64,
    count: usize,
) -> Result<Vec<BrownianPath>> {
    (0..count as u64)
        .map(|k| sample_path(d, t, n_steps, SeedSpec::new(seed, first_stream + k)))
        .collect()
}

fn draw_fk(req: &MomentRequest, eps: f64, n_steps: usize, seed: u64) -> Result<Draws> {
    let n = req.n;
    let d = req.kernel.dim();
    let draws = (0..req.mc.n_paths)
        .into_par_iter()
        .map(|m| {
            let paths = sample_paths(d, req.t, n_steps, seed, (m * n) as u64, n)?;
            let i_n = ilt::i_n_epsilon(&paths, &req.kernel, eps)?.value;
            let mut log_u = 0.0;
            let mut sign = 1.0;
            for p in &paths {
                let y: Vec<f64> = req.x.iter().zip(p.endpoint()).map(|(a, b)| a + b).collect();
                let u = req.u0.eval(&y);
                log_u += u.abs().ln();
                sign *= u.signum();
                if u == 0.0 {
                    sign = 0.0;
                }
            }
            Ok(Draw { i_n, log_u, sign })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Draws {
        draws,
        under_resolved: !is_resolved(req.t / n_steps as f64, eps),
    })
}

fn degenerate(value: f64, n_samples: usize, seed: u64) -> Estimate {
    Estimate {
        mean: value,
        stderr: 0.0,
        n_samples,
        master_seed: seed,
        warnings: Vec::new(),
        log_mean: value.abs().ln(),
    }
}

/// E[u_ε(t, x)^n] by Feynman–Kac with exponent I_n^ε − n·C_ε·t.
pub fn fk_moment(req: &MomentRequest) -> Result<Estimate> {
    req.validate()?;
    if req.t == 0.0 {
        return Ok(degenerate(req.u0.eval(&req.x).powi(req.n as i32), 0, req.master_seed));
    }
    if req.u0.is_zero() {
        return Ok(degenerate(0.0, req.mc.n_paths, req.master_seed));
    }
    if req.mc.n_paths == 0 {
        return Err(Error::input("mc.n_paths must be at least 1"));
    }
    let c = req.renorm.constant(req.eps)?;
    let draws = draw_fk(req, req.eps, req.mc.n_steps, req.master_seed)?;
    Ok(draws.estimate(-(req.n as f64) * c * req.t, req.master_seed))
}

/// One rung of an ε-ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitRung {
    pub eps: f64,
    pub n_steps: usize,
    /// Estimate with exponent I − nν_ε(t) + nt(μ₁ + μ₂ log t).
    pub renormalized: Estimate,
    /// The same draws with exponent I − nC_ε t.
    pub constant_form: Estimate,
    /// exp(n(ν_ε − C_ε t − t(μ₁ + μ₂ log t))).
    pub exact_factor: f64,
    /// constant_form.mean / renormalized.mean.
    pub observed_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    pub rungs: Vec<LimitRung>,
    /// z-scores of successive differences of the renormalized estimates.
    pub successive_z: Vec<f64>,
    /// Every successive difference within 3 combined standard errors.
    pub cauchy_pass: bool,
    pub time_bound: f64,
}

/// Pairwise z-scores (a_i − a_{i+1})/√(s_i² + s_{i+1}²).
pub fn successive_z(estimates: &[&Estimate]) -> Vec<f64> {
    estimates
        .windows(2)
        .map(|w| {
            let diff = w[0].mean - w[1].mean;
            let se = (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt();
            if se == 0.0 {
                if diff == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                diff / se
            }
        })
        .collect()
}

/// Runs the renormalized estimator along a decreasing ε-ladder. Each rung
/// uses its own seed, `derive_seed(master_seed, rung)`, so successive rungs
/// are independent and the combined standard error is the right yardstick.
pub fn limit_moment(req: &MomentRequest, eps_ladder: &[f64]) -> Result<LimitReport> {
    req.validate()?;
    if eps_ladder.is_empty() {
        return Err(Error::input("eps ladder is empty"));
    }
    if eps_ladder.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::input("eps ladder must be strictly decreasing"));
    }
    let time_bound = small_time_bound(req.n, req.lambda_hat, req.theta)?;
    if req.t > time_bound {
        return Err(Error::Refused(format!(
            "t = {} exceeds the admissibility bound λ̂/(θN) = {} (n = {}, λ̂ = {}, θ = {})",
            req.t, time_bound, req.n, req.lambda_hat, req.theta
        )));
    }
    let n = req.n as f64;
    let mut rungs = Vec::with_capacity(eps_ladder.len());
    for (r, &eps) in eps_ladder.iter().enumerate() {
        let seed = derive_seed(req.master_seed, r as u64);
        let rung = if req.t == 0.0 || req.u0.is_zero() {
            let sub = MomentRequest {
                eps,
                master_seed: seed,
                ..req.clone()
            };
            let est = fk_moment(&sub)?;
            LimitRung {
                eps,
                n_steps: 0,
                renormalized: est.clone(),
                constant_form: est,
                exact_factor: 1.0,
                observed_ratio: 1.0,
            }
        } else {
            if req.mc.n_paths == 0 {
                return Err(Error::input("mc.n_paths must be at least 1"));
            }
            let n_steps = req.mc.steps_for(req.t, eps);
            let draws = draw_fk(req, eps, n_steps, seed)?;
            let c_shift = -n * req.renorm.constant(eps)? * req.t;
            let nu_shift = -n * req.kernel.nu(eps, req.t)? + n * req.renorm.limit_shift(req.t);
            let renormalized = draws.estimate(nu_shift, seed);
            let constant_form = draws.estimate(c_shift, seed);
            LimitRung {
                eps,
                n_steps,
                exact_factor: (c_shift - nu_shift).exp(),
                observed_ratio: constant_form.mean / renormalized.mean,
                renormalized,
                constant_form,
            }
        };
        rungs.push(rung);
    }
    let ests: Vec<&Estimate> = rungs.iter().map(|r| &r.renormalized).collect();
    let successive_z = successive_z(&ests);
    let cauchy_pass = successive_z.iter().all(|z| z.abs() <= 3.0);
    Ok(LimitReport {
        rungs,
        successive_z,
        cauchy_pass,
        time_bound,
    })
}

/// The two exponential functionals on [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Functional {
    /// X_ε = β_ε − E β_ε, one path.
    X,
    /// Y_ε = α_ε, two independent paths.
    Y,
}

/// E[exp(λ·X_ε)] or E[exp(λ·Y_ε)] on the unit time window. The step count
/// is `mc.steps_for(1, eps)`.
pub fn exp_moment(
    which: Functional,
    lambda: f64,
    k: &MollifierKernel,
    eps: f64,
    mc: &McConfig,
    master_seed: u64,
) -> Result<Estimate> {
    if !lambda.is_finite() {
        return Err(Error::input("lambda must be finite"));
    }
    mc.validate()?;
    if mc.n_paths == 0 {
        return Err(Error::input("mc.n_paths must be at least 1"));
    }
    let d = k.dim();
    let n_steps = mc.steps_for(1.0, eps);
    let values = (0..mc.n_paths)
        .into_par_iter()
        .map(|m| match which {
            Functional::X => {
                let p = sample_path(d, 1.0, n_steps, SeedSpec::new(master_seed, m as u64))?;
                ilt::renormalized_self(&p, k, eps)
            }
            Functional::Y => {
                let ps = sample_paths(d, 1.0, n_steps, master_seed, 2 * m as u64, 2)?;
                ilt::alpha_mutual(&ps[0], &ps[1], k, eps)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let weights: Vec<LogWeight> = values
        .iter()
        .map(|v| LogWeight {
            log_abs: lambda * v.value,
            sign: 1.0,
        })
        .collect();
    let mut est = Estimate::from_log_weights(&weights, master_seed);
    if values.iter().any(|v| v.under_resolved) {
        est.add_warning(Warning::UnderResolved);
    }
    Ok(est)
}

/// λ̂/(θ·N) with N = n(n+1)/2: times below this keep the n-th moment
/// uniformly bounded in ε, given exponential moments at rate λ̂.
pub fn small_time_bound(n: usize, lambda_hat: f64, theta: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::input("n must be at least 1"));
    }
    if !(lambda_hat > 0.0) {
        return Err(Error::input(format!("lambda_hat must be positive, got {lambda_hat}")));
    }
    if !(theta >= 1.0) {
        return Err(Error::input(format!("theta must be at least 1, got {theta}")));
    }
    let big_n = (n * (n + 1) / 2) as f64;
    Ok(lambda_hat / (theta * big_n))
}

/// One λ of a uniformity sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub which: Functional,
    pub estimates: Vec<Estimate>,
    /// max/min of the estimates over the ε-sweep.
    pub spread: f64,
    pub uniform: bool,
}

/// max/min of the means; ∞ if any mean is nonpositive.
pub fn spread(estimates: &[Estimate]) -> f64 {
    let max = estimates.iter().map(|e| e.mean).fold(f64::NEG_INFINITY, f64::max);
    let min = estimates.iter().map(|e| e.mean).fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

/// Sweeps `exp_moment` over `eps_list` for one functional.
pub fn uniformity_sweep(
    which: Functional,
    lambda: f64,
    k: &MollifierKernel,
    eps_list: &[f64],
    mc: &McConfig,
    master_seed: u64,
) -> Result<SweepRow> {
    let estimates = eps_list
        .iter()
        .enumerate()
        .map(|(i, &eps)| exp_moment(which, lambda, k, eps, mc, derive_seed(master_seed, i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let spread = spread(&estimates);
    let uniform = spread <= UNIFORMITY_RATIO && !estimates.iter().any(|e| e.has(Warning::HeavyTail));
    Ok(SweepRow {
        lambda,
        which,
        estimates,
        spread,
        uniform,
    })
}

/// Largest λ of an increasing grid such that it and every smaller λ pass
/// the uniformity sweep for both X and Y. `None` if the first one fails.
pub fn estimate_lambda_hat(
    k: &MollifierKernel,
    eps_list: &[f64],
    lambda_grid: &[f64],
    mc: &McConfig,
    master_seed: u64,
) -> Result<(Option<f64>, Vec<SweepRow>)> {
    if lambda_grid.windows(2).any(|w| !(w[1] > w[0])) || lambda_grid.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::input("lambda grid must be positive and increasing"));
    }
    let mut rows = Vec::new();
    let mut best = None;
    for (j, &lambda) in lambda_grid.iter().enumerate() {
        let seed = derive_seed(master_seed, j as u64);
        let x = uniformity_sweep(Functional::X, lambda, k, eps_list, mc, derive_seed(seed, 0))?;
        let y = uniformity_sweep(Functional::Y, lambda, k, eps_list, mc, derive_seed(seed, 1))?;
        let ok = x.uniform && y.uniform;
        rows.push(x);
        rows.push(y);
        if !ok {
            break;
        }
        best = Some(lambda);
    }
    Ok((best, rows))
}

/// Principal Dirichlet eigenvalue of −½Δ on the unit ball: the rate in
/// P(sup_{s≤t}|B_s| ≤ 1) ≈ e^{−c′t}.
pub fn small_ball_constant(d: usize) -> Result<f64> {
    const J01: f64 = 2.404_825_557_695_773;
    use std::f64::consts::PI;
    match d {
        1 => Ok(PI * PI / 8.0),
        2 => Ok(J01 * J01 / 2.0),
        3 => Ok(PI * PI / 2.0),
        _ => Err(Error::input(format!("dimension must be 1, 2 or 3, got {d}"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplosionRow {
    pub eps: f64,
    pub c_eps: f64,
    /// log of exp(δ̂t²/(2ε^d) − c′t/ε² − C_ε t).
    pub log_lower_bound: f64,
    /// Ratio to the previous row's lower bound, as a log.
    pub log_growth: Option<f64>,
    /// e^{−C_ε t}E[exp(β_ε)], when Monte Carlo was requested.
    pub mc: Option<Estimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplosionReport {
    pub d: usize,
    pub t: f64,
    pub delta_hat: f64,
    pub c_prime: f64,
    pub rows: Vec<ExplosionRow>,
    /// The lower bound increases strictly at every step down the ε list.
    pub lower_bound_increasing: bool,
    /// Successive MC estimates within 3 combined stderr (None without MC).
    pub mc_stable: Option<bool>,
    pub mc_successive_z: Vec<f64>,
}

/// The first moment with u₀ ≡ 1 against its small-ball lower bound.
///
/// Confining the path to the ball of radius ε keeps all pairwise
/// distances ≤ 2ε, so β_ε ≥ δ̂t²/(2ε^d) with δ̂ = min_{|x|≤2} R(x), on an
/// event of probability ≈ e^{−c′t/ε²} after Brownian scaling.
#[allow(clippy::too_many_arguments)]
pub fn explosion_probe(
    d: usize,
    t: f64,
    eps_list: &[f64],
    k: &MollifierKernel,
    mc: &McConfig,
    renorm: &RenormSpec,
    c_prime: f64,
    master_seed: u64,
) -> Result<ExplosionReport> {
    if !(d == 2 || d == 3) {
        return Err(Error::input(format!("explosion probe needs d = 2 or 3, got {d}")));
    }
    if k.dim() != d || renorm.d != d {
        return Err(Error::input("kernel, renormalization and d disagree"));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::input("t must be positive"));
    }
    if eps_list.is_empty() || eps_list.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::input("eps list must be nonempty and positive"));
    }
    if !(c_prime >= 0.0) {
        return Err(Error::input("c' must be nonnegative"));
    }
    let delta_hat = k.min_on_ball(2.0);
    let mut rows: Vec<ExplosionRow> = Vec::with_capacity(eps_list.len());
    for (i, &eps) in eps_list.iter().enumerate() {
        let c_eps = renorm.constant(eps)?;
        let log_lower_bound = delta_hat * t * t / (2.0 * eps.powi(d as i32)) - c_prime * t / (eps * eps) - c_eps * t;
        let mc_est = if mc.n_paths > 0 {
            let mut req = MomentRequest::new(*k, 1, t, eps, *mc, derive_seed(master_seed, i as u64))?;
            req.renorm = *renorm;
            req.mc.n_steps = mc.steps_for(t, eps);
            Some(fk_moment(&req)?)
        } else {
            None
        };
        rows.push(ExplosionRow {
            eps,
            c_eps,
            log_lower_bound,
            log_growth: rows.last().map(|p| log_lower_bound - p.log_lower_bound),
            mc: mc_est,
        });
    }
    let lower_bound_increasing = rows.iter().skip(1).all(|r| r.log_growth.is_some_and(|g| g > 0.0));
    let (mc_stable, mc_successive_z) = if mc.n_paths > 0 {
        let ests: Vec<&Estimate> = rows.iter().filter_map(|r| r.mc.as_ref()).collect();
        let z = successive_z(&ests);
        (Some(z.iter().all(|z| z.abs() <= 3.0)), z)
    } else {
        (None, Vec::new())
    };
    Ok(ExplosionReport {
        d,
        t,
        delta_hat,
        c_prime,
        rows,
        lower_bound_increasing,
        mc_stable,
        mc_successive_z,
    })
}
