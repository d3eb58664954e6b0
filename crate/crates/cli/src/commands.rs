//! The experiment subcommands. Each returns a [`Report`]; independent cells
//! get the seed `derive_seed(master_seed, cell)` with cells numbered in
//! table order.

use std::f64::consts::PI;

use serde_json::json;

use pamfk::ilt::{self, DyadicBox};
use pamfk::kernel::{limit_constants, limit_constants_numeric, Family, MAX_FIT_RESIDUAL};
use pamfk::moments::{self, Functional, MomentRequest};
use pamfk::oracle::{self, NoiseMomentRequest, PdeParams};
use pamfk::paths::sample_path;
use pamfk::stats::{correlation, ks_two_sample, mean_and_stderr};
use pamfk::{derive_seed, Error, SeedSpec};

use crate::config::{ExperimentConfig, IltCheck, Which};
use crate::output::{num, opt, warn_cell, Report};

/// Subcommand failures, split by exit code.
#[derive(Debug)]
pub enum RunError {
    /// Bad or unsupported configuration (exit 2).
    Config(String),
    /// A numerical routine failed (exit 3).
    Numerical(String),
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::Numerical(_) => RunError::Numerical(e.to_string()),
            Error::Input(_) | Error::Refused(_) => RunError::Config(e.to_string()),
        }
    }
}

impl From<crate::config::ConfigError> for RunError {
    fn from(e: crate::config::ConfigError) -> Self {
        RunError::Config(e.0)
    }
}

type Result<T> = std::result::Result<T, RunError>;

fn need_dim(cfg: &ExperimentConfig, allowed: &[usize], what: &str) -> Result<()> {
    if allowed.contains(&cfg.dimension) {
        Ok(())
    } else {
        Err(RunError::Config(format!(
            "{what} supports dimension {allowed:?}, got {}",
            cfg.dimension
        )))
    }
}

/// `lemma-check`: ν_ε(t) − C_ε t against its limit t(μ₁ + μ₂ log t).
pub fn lemma_check(cfg: &ExperimentConfig) -> Result<Report> {
    need_dim(cfg, &[2], "lemma-check")?;
    let k = cfg.kernel()?;
    let spec = cfg.renorm()?;
    let eps_list = cfg.eps_list_or(&[0.1, 0.05, 0.02, 0.01]);
    let t_list = cfg.t_list_or(&[0.25, 0.5, 1.0]);
    let lc = limit_constants(&k)?;
    let fit = limit_constants_numeric(&k)?;
    // For Gaussian ρ the residual has the explicit form
    // ((t+a)log(t+a) − t log t − a log a)/(2π) with a = 2σ²ε².
    let explicit = |eps: f64, t: f64| -> Option<f64> {
        match k.family() {
            Family::Gaussian { sigma2 } => {
                let a = 2.0 * sigma2 * eps * eps;
                Some(((t + a) * (t + a).ln() - t * t.ln() - a * a.ln()) / (2.0 * PI))
            }
            Family::Bump { .. } => None,
        }
    };
    let mut r = Report::new(&[
        "t",
        "eps",
        "nu",
        "c_eps_t",
        "limit_shift",
        "residual",
        "explicit_residual",
    ]);
    let mut max_formula_err: f64 = 0.0;
    for &t in &t_list {
        let mut prev = f64::INFINITY;
        let mut monotone = true;
        let mut last = f64::NAN;
        for &eps in &eps_list {
            let nu = k.nu(eps, t)?;
            let ct = spec.constant(eps)? * t;
            let shift = spec.limit_shift(t);
            let residual = nu - ct - shift;
            let exact = explicit(eps, t);
            if let Some(e) = exact {
                max_formula_err = max_formula_err.max((residual - e).abs());
            }
            monotone &= residual.abs() < prev;
            prev = residual.abs();
            last = residual.abs();
            r.table.push(vec![
                num(t),
                num(eps),
                num(nu),
                num(ct),
                num(shift),
                num(residual),
                opt(exact),
            ]);
        }
        r.verdict(format!("monotone_t{t}"), monotone);
        r.verdict(format!("small_at_smallest_eps_t{t}"), last < 0.01);
    }
    if k.is_gaussian() {
        r.verdict("explicit_formula", max_formula_err <= 1e-10);
        r.detail("max_explicit_formula_error", max_formula_err);
    }
    r.verdict("fit_residual", fit.residual < MAX_FIT_RESIDUAL);
    r.detail("mu1", lc.mu1);
    r.detail("mu2", lc.mu2);
    r.detail("residual", fit.residual);
    r.detail("fit_mu1", fit.mu1);
    r.detail("fit_mu2", fit.mu2);
    Ok(r)
}

fn moment_request(cfg: &ExperimentConfig, n: usize, t: f64, eps: f64, seed: u64) -> Result<MomentRequest> {
    let k = cfg.kernel()?;
    let mut req = MomentRequest::new(k, n, t, eps, cfg.mc(), seed)?;
    req.renorm = cfg.renorm()?;
    req.x = cfg.point();
    req.u0 = cfg.initial_condition()?;
    req.theta = cfg.theta;
    req.lambda_hat = cfg.lambda_hat;
    Ok(req)
}

/// `fk-moment`: E[u_ε(t, x)^n] on the (t, ε, n) grid.
pub fn fk_moment(cfg: &ExperimentConfig) -> Result<Report> {
    let mut r = Report::new(&[
        "t",
        "eps",
        "n",
        "n_steps",
        "mean",
        "stderr",
        "n_samples",
        "log_mean",
        "warnings",
    ]);
    let mut cell = 0u64;
    for &t in &cfg.t_list_or(&[0.1]) {
        for &eps in &cfg.eps_list_or(&[0.2]) {
            for n in cfg.n.list() {
                let mut req = moment_request(cfg, n, t, eps, derive_seed(cfg.master_seed, cell))?;
                req.mc.n_steps = req.mc.steps_for(t, eps);
                let e = moments::fk_moment(&req)?;
                r.warn(&e.warnings);
                r.table.push(vec![
                    num(t),
                    num(eps),
                    n.to_string(),
                    req.mc.n_steps.to_string(),
                    num(e.mean),
                    num(e.stderr),
                    e.n_samples.to_string(),
                    num(e.log_mean),
                    warn_cell(&e.warnings),
                ]);
                cell += 1;
            }
        }
    }
    Ok(r)
}

/// `limit-moment`: the renormalized estimator along the ε ladder, with the
/// Cauchy verdict and the exponent-form identity.
pub fn limit_moment(cfg: &ExperimentConfig) -> Result<Report> {
    let mut r = Report::new(&[
        "t",
        "n",
        "eps",
        "n_steps",
        "mean",
        "stderr",
        "n_samples",
        "constant_form_mean",
        "exact_factor",
        "factor_rel_error",
        "z_prev",
        "warnings",
    ]);
    let ladder = cfg.eps_list_or(&[0.2, 0.1, 0.05]);
    let mut worst_factor: f64 = 0.0;
    let mut cell = 0u64;
    for &t in &cfg.t_list_or(&[0.05]) {
        for n in cfg.n.list() {
            let req = moment_request(cfg, n, t, ladder[0], derive_seed(cfg.master_seed, cell))?;
            let rep = moments::limit_moment(&req, &ladder)?;
            for (i, rung) in rep.rungs.iter().enumerate() {
                let rel = (rung.observed_ratio / rung.exact_factor - 1.0).abs();
                if rung.n_steps > 0 {
                    worst_factor = worst_factor.max(rel);
                }
                let z_prev = if i == 0 { None } else { Some(rep.successive_z[i - 1]) };
                r.warn(&rung.renormalized.warnings);
                r.table.push(vec![
                    num(t),
                    n.to_string(),
                    num(rung.eps),
                    rung.n_steps.to_string(),
                    num(rung.renormalized.mean),
                    num(rung.renormalized.stderr),
                    rung.renormalized.n_samples.to_string(),
                    num(rung.constant_form.mean),
                    num(rung.exact_factor),
                    num(rel),
                    opt(z_prev),
                    warn_cell(&rung.renormalized.warnings),
                ]);
            }
            for (i, z) in rep.successive_z.iter().enumerate() {
                r.z(format!("cauchy_t{t}_n{n}_step{i}"), *z);
            }
            r.verdict(format!("cauchy_t{t}_n{n}"), rep.cauchy_pass);
            r.detail(&format!("time_bound_n{n}"), rep.time_bound);
            cell += 1;
        }
    }
    r.verdict("exponent_form_identity", worst_factor <= 1e-12);
    r.detail("max_factor_rel_error", worst_factor);
    Ok(r)
}

/// `exp-moment`: E[e^{λX_ε}] and E[e^{λY_ε}] over the ε sweep for each λ.
pub fn exp_moment(cfg: &ExperimentConfig) -> Result<Report> {
    let k = cfg.kernel()?;
    let mc = cfg.mc();
    let eps_list = cfg.eps_list_or(&[0.3, 0.2, 0.1, 0.05]);
    let mut lambdas = cfg.exp.lambda_list.clone();
    if lambdas.is_empty() || lambdas.windows(2).any(|w| w[1] <= w[0] || w[1].is_nan()) {
        return Err(RunError::Config(
            "exp.lambda_list must be nonempty and increasing".into(),
        ));
    }
    lambdas.dedup();
    let mut r = Report::new(&[
        "which",
        "lambda",
        "eps",
        "n_steps",
        "mean",
        "stderr",
        "n_samples",
        "warnings",
    ]);
    let mut lambda_hat = None;
    let mut prefix_ok = true;
    let mut cell = 0u64;
    for &lambda in &lambdas {
        let mut all = true;
        for which in &cfg.exp.which {
            let (f, name) = match which {
                Which::X => (Functional::X, "x"),
                Which::Y => (Functional::Y, "y"),
            };
            let row = moments::uniformity_sweep(f, lambda, &k, &eps_list, &mc, derive_seed(cfg.master_seed, cell))?;
            cell += 1;
            for (e, &eps) in row.estimates.iter().zip(&eps_list) {
                r.warn(&e.warnings);
                r.table.push(vec![
                    name.into(),
                    num(lambda),
                    num(eps),
                    mc.steps_for(1.0, eps).to_string(),
                    num(e.mean),
                    num(e.stderr),
                    e.n_samples.to_string(),
                    warn_cell(&e.warnings),
                ]);
            }
            r.verdict(format!("uniform_{name}_lambda{lambda}"), row.uniform);
            r.detail(&format!("spread_{name}_lambda{lambda}"), row.spread);
            all &= row.uniform;
        }
        prefix_ok &= all;
        if prefix_ok {
            lambda_hat = Some(lambda);
        }
    }
    r.detail("lambda_hat_estimate", lambda_hat);
    r.detail("uniformity_ratio", moments::UNIFORMITY_RATIO);
    Ok(r)
}

fn ks_row(r: &mut Report, name: &str, a: &[f64], b: &[f64]) {
    let ks = ks_two_sample(a, b);
    r.table.push(vec![
        name.into(),
        num(ks.statistic),
        num(ks.p_value),
        String::new(),
        (ks.p_value > 0.01).to_string(),
    ]);
    r.verdict(name, ks.p_value > 0.01);
    r.detail(&format!("{name}_p"), ks.p_value);
}

/// `ilt-props`: exact means, Brownian scaling and the dyadic box suite.
pub fn ilt_props(cfg: &ExperimentConfig) -> Result<Report> {
    need_dim(cfg, &[1, 2, 3], "ilt-props")?;
    let k = cfg.kernel()?;
    let d = cfg.dimension;
    let eps = cfg.eps_list_or(&[0.2])[0];
    let p = &cfg.ilt;
    let seed = |stream: u64| derive_seed(cfg.master_seed, stream);
    let mut r = Report::new(&["check", "value", "reference", "stderr_or_bound", "pass"]);
    let under = |dt: f64| !ilt::is_resolved(dt, eps);

    if p.checks.contains(&IltCheck::Means) {
        // Exact means on [0, 1].
        let ms = seed(0);
        let pairs: Vec<(f64, f64)> = collect_par(p.mean_samples, |i| {
            let a = sample_path(d, 1.0, p.mean_steps, SeedSpec::new(ms, 2 * i))?;
            let b = sample_path(d, 1.0, p.mean_steps, SeedSpec::new(ms, 2 * i + 1))?;
            let (beta, _, alpha) = ilt::pair_functionals(&a, &b, &k, eps)?;
            Ok((beta.value, alpha.value))
        })?;
        let (betas, alphas): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        for (name, xs, target) in [
            ("beta_mean", &betas, k.nu(eps, 1.0)?),
            ("alpha_mean", &alphas, k.mutual_mean(eps, 1.0)?),
        ] {
            let (m, se) = mean_and_stderr(xs);
            let z = (m - target) / se;
            r.table.push(vec![
                name.into(),
                num(m),
                num(target),
                num(se),
                (z.abs() <= 3.0).to_string(),
            ]);
            r.verdict(name, z.abs() <= 3.0);
            r.z(name, z);
        }
        if under(1.0 / p.mean_steps as f64) {
            r.warn(&[pamfk::Warning::UnderResolved]);
        }
    }

    if p.checks.contains(&IltCheck::Scaling) {
        // β_ε on [0, t] against t·β_{ε/√t} on [0, 1], same for α.
        let t = p.scaling_t;
        let (s1, s2) = (seed(1), seed(2));
        let functionals = |t_max: f64, e: f64, scale: f64, s: u64| -> Result<(Vec<f64>, Vec<f64>)> {
            let v: Vec<(f64, f64)> = collect_par(p.scaling_samples, |i| {
                let a = sample_path(d, t_max, p.scaling_steps, SeedSpec::new(s, 2 * i))?;
                let b = sample_path(d, t_max, p.scaling_steps, SeedSpec::new(s, 2 * i + 1))?;
                let (beta, _, alpha) = ilt::pair_functionals(&a, &b, &k, e)?;
                Ok((scale * beta.value, scale * alpha.value))
            })?;
            Ok(v.into_iter().unzip())
        };
        let (bt, at) = functionals(t, eps, 1.0, s1)?;
        let (b1, a1) = functionals(1.0, eps / t.sqrt(), t, s2)?;
        ks_row(&mut r, "scaling_beta_ks", &bt, &b1);
        ks_row(&mut r, "scaling_alpha_ks", &at, &a1);
    }

    if p.checks.contains(&IltCheck::Dyadic) {
        // Dyadic boxes at one level: pairwise correlations and the law of
        // 2^{k+1}β(A_0^k) against α at ε·2^{(k+1)/2}.
        let level = p.dyadic_level;
        let boxes: Vec<DyadicBox> = (0..1u64 << level)
            .map(|l| DyadicBox::new(level, l))
            .collect::<pamfk::Result<_>>()?;
        let ds = seed(3);
        let cols: Vec<Vec<f64>> = collect_par(p.dyadic_samples, |i| {
            let path = sample_path(d, 1.0, p.dyadic_steps, SeedSpec::new(ds, i))?;
            boxes
                .iter()
                .map(|b| Ok(ilt::beta_on_box(&path, b, &k, eps)?.value))
                .collect()
        })?;
        let bound = 4.0 / (p.dyadic_samples as f64).sqrt();
        let mut worst: f64 = 0.0;
        for a in 0..boxes.len() {
            for b in a + 1..boxes.len() {
                let xa: Vec<f64> = cols.iter().map(|c| c[a]).collect();
                let xb: Vec<f64> = cols.iter().map(|c| c[b]).collect();
                let rho = correlation(&xa, &xb);
                worst = worst.max(rho.abs());
                r.table.push(vec![
                    format!("box_corr_k{level}_l{a}_l{b}"),
                    num(rho),
                    "0".into(),
                    num(bound),
                    (rho.abs() < bound).to_string(),
                ]);
            }
        }
        r.verdict("box_correlation", worst < bound);
        let scale = 2f64.powi(level as i32 + 1);
        let box0: Vec<f64> = cols.iter().map(|c| scale * c[0]).collect();
        // The box spans 1/scale of the unit interval on each side; the α
        // comparison uses the same number of steps per side.
        let sub_steps = ((p.dyadic_steps as f64) / scale).round().max(1.0) as usize;
        let e2 = eps * scale.sqrt();
        let as_ = seed(4);
        let alpha_law: Vec<f64> = collect_par(p.dyadic_samples, |i| {
            let a = sample_path(d, 1.0, sub_steps, SeedSpec::new(as_, 2 * i))?;
            let b = sample_path(d, 1.0, sub_steps, SeedSpec::new(as_, 2 * i + 1))?;
            Ok(ilt::alpha_mutual(&a, &b, &k, e2)?.value)
        })?;
        ks_row(&mut r, "box_law_ks", &box0, &alpha_law);
    }

    if p.checks.contains(&IltCheck::Area) {
        let area: f64 = ilt::triangle_boxes(p.area_level).iter().map(DyadicBox::area).sum();
        let target = 0.5 * (1.0 - 2f64.powi(-(p.area_level as i32) - 1));
        let err = (area - target).abs();
        r.table.push(vec![
            format!("covered_area_L{}", p.area_level),
            num(area),
            num(target),
            num(1e-12),
            (err <= 1e-12).to_string(),
        ]);
        r.verdict("covered_area", err <= 1e-12);
    }
    r.detail("eps", eps);
    Ok(r)
}

fn collect_par<T: Send>(count: usize, f: impl Fn(u64) -> pamfk::Result<T> + Sync + Send) -> Result<Vec<T>> {
    use rayon::prelude::*;
    Ok((0..count as u64)
        .into_par_iter()
        .map(f)
        .collect::<pamfk::Result<Vec<T>>>()?)
}

/// Smallest multiple of h at or above `reach`.
fn lattice_extent(reach: f64, h: f64) -> f64 {
    (reach / h - 1e-9).ceil() * h
}

/// `xval`: Feynman–Kac against the lattice PDE oracle at fixed ε.
pub fn xval(cfg: &ExperimentConfig) -> Result<Report> {
    need_dim(cfg, &[1, 2], "xval")?;
    let k = cfg.kernel()?;
    let default_t = if cfg.dimension == 1 { 0.25 } else { 0.1 };
    let orders = cfg.n.list();
    let x = cfg.point();
    let h = cfg.xval.h;
    let mut r = Report::new(&[
        "t",
        "eps",
        "n",
        "fk_mean",
        "fk_stderr",
        "fk_n_samples",
        "pde_mean",
        "pde_stderr",
        "pde_n_samples",
        "z",
        "pass",
        "warnings",
    ]);
    let mut cell = 0u64;
    for &t in &cfg.t_list_or(&[default_t]) {
        for &eps in &cfg.eps_list_or(&[0.3]) {
            let reach = x.iter().map(|c| c.abs()).fold(0.0, f64::max) + 4.0 * t.sqrt() + 4.0 * eps;
            let extent = cfg.xval.extent.unwrap_or_else(|| lattice_extent(reach, h));
            let req = NoiseMomentRequest {
                kernel: k,
                renorm: cfg.renorm()?,
                orders: orders.clone(),
                t,
                x: x.clone(),
                eps,
                u0: cfg.initial_condition()?,
                n_draws: cfg.xval.n_draws.unwrap_or(cfg.mc.n_paths),
                pde: PdeParams {
                    h,
                    extent,
                    dt: cfg.xval.dt.unwrap_or(h * h / 4.0),
                },
                master_seed: derive_seed(cfg.master_seed, 2 * cell),
            };
            let pde = oracle::noise_mc_moments(&req)?;
            for (&n, p) in orders.iter().zip(&pde) {
                let mut fk_req = moment_request(cfg, n, t, eps, derive_seed(cfg.master_seed, 2 * cell + 1))?;
                fk_req.mc.n_steps = fk_req.mc.steps_for(t, eps);
                let fk = moments::fk_moment(&fk_req)?;
                let cv = oracle::cross_validate(&fk, p)?;
                let mut w = fk.warnings.clone();
                w.extend(p.warnings.iter().copied());
                w.sort();
                w.dedup();
                r.warn(&w);
                r.table.push(vec![
                    num(t),
                    num(eps),
                    n.to_string(),
                    num(fk.mean),
                    num(fk.stderr),
                    fk.n_samples.to_string(),
                    num(p.mean),
                    num(p.stderr),
                    p.n_samples.to_string(),
                    num(cv.z),
                    cv.pass.to_string(),
                    warn_cell(&w),
                ]);
                let name = format!("xval_t{t}_eps{eps}_n{n}");
                r.z(name.clone(), cv.z);
                r.verdict(name, cv.pass);
            }
            r.detail(&format!("extent_t{t}_eps{eps}"), json!(extent));
            cell += 1;
        }
    }
    Ok(r)
}

/// `explosion`: the small-ball lower bound and, if mc.n_paths > 0, the
/// first moment along the ε list.
pub fn explosion(cfg: &ExperimentConfig) -> Result<Report> {
    need_dim(cfg, &[2, 3], "explosion")?;
    let d = cfg.dimension;
    let k = cfg.kernel()?;
    let spec = cfg.renorm()?;
    let c_prime = match cfg.explosion.c_prime {
        Some(c) => c,
        None => moments::small_ball_constant(d)?,
    };
    let (t_default, eps_default): (&[f64], &[f64]) = if d == 3 {
        (&[1.0], &[0.4, 0.2, 0.1])
    } else {
        (&[0.05], &[0.02, 0.01, 0.005])
    };
    let mc = cfg.mc();
    let mut r = Report::new(&[
        "t",
        "eps",
        "c_eps",
        "log_lower_bound",
        "log_growth",
        "mc_mean",
        "mc_stderr",
        "mc_n_samples",
        "warnings",
    ]);
    for (cell, &t) in cfg.t_list_or(t_default).iter().enumerate() {
        let eps_list = cfg.eps_list_or(eps_default);
        let rep = moments::explosion_probe(
            d,
            t,
            &eps_list,
            &k,
            &mc,
            &spec,
            c_prime,
            derive_seed(cfg.master_seed, cell as u64),
        )?;
        for row in &rep.rows {
            let (m, se, ns, w) = match &row.mc {
                Some(e) => (
                    num(e.mean),
                    num(e.stderr),
                    e.n_samples.to_string(),
                    warn_cell(&e.warnings),
                ),
                None => Default::default(),
            };
            if let Some(e) = &row.mc {
                r.warn(&e.warnings);
            }
            r.table.push(vec![
                num(t),
                num(row.eps),
                num(row.c_eps),
                num(row.log_lower_bound),
                opt(row.log_growth),
                m,
                se,
                ns,
                w,
            ]);
        }
        r.verdict(format!("lower_bound_increasing_t{t}"), rep.lower_bound_increasing);
        if let Some(stable) = rep.mc_stable {
            r.verdict(format!("mc_stable_t{t}"), stable);
            for (i, z) in rep.mc_successive_z.iter().enumerate() {
                r.z(format!("mc_t{t}_step{i}"), *z);
            }
        }
        if d == 3 {
            // Below this ε the t²/ε³ term outgrows the small-ball cost.
            r.detail(&format!("eps_crossover_t{t}"), rep.delta_hat * t / (2.0 * c_prime));
        }
        r.detail("delta_hat", rep.delta_hat);
        r.detail("c_prime", c_prime);
    }
    if d == 2 {
        // In d = 2 both leading terms scale as 1/ε²; growth needs t above this.
        r.detail("growth_threshold_t", 2.0 * c_prime / k.min_on_ball(2.0));
    }
    Ok(r)
}
