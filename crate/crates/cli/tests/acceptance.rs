//! Acceptance suite. Each test prints one `criterion N: PASS|FAIL` line to
//! stdout, bypassing the test harness capture so the lines always show up.
//!
//! Two criteria are known to fail for reasons of substance (see the README);
//! their tests print FAIL and assert the behaviour that explains it instead.

use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use pamfk::kernel::MollifierKernel;
use pamfk::moments::InitialCondition;
use pamfk::oracle::{diffusion_step, max_stable_dt, solve_pde, GridField};
use pamfk::Warning;
use pamfk_cli::commands;
use pamfk_cli::output::Report;
use pamfk_cli::ExperimentConfig;

fn say(line: String) {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{line}").unwrap();
    out.flush().unwrap();
}

fn verdict(n: u32, pass: bool, what: &str, detail: String) {
    say(format!(
        "criterion {n}: {} {what} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    ));
}

fn config(text: &str) -> ExperimentConfig {
    ExperimentConfig::parse(text).unwrap()
}

fn v(r: &Report, key: &str) -> bool {
    *r.verdicts
        .get(key)
        .unwrap_or_else(|| panic!("no verdict {key}: {:?}", r.verdicts))
}

fn detail(r: &Report, key: &str) -> f64 {
    r.details[key].as_f64().unwrap()
}

fn col(r: &Report, name: &str) -> usize {
    r.table.header.iter().position(|h| *h == name).unwrap()
}

fn cell(r: &Report, row: usize, name: &str) -> f64 {
    r.table.rows[row][col(r, name)].parse().unwrap()
}

#[test]
fn criterion_01_renormalization_residual() {
    let start = Instant::now();
    let r = commands::lemma_check(&config(
        "dimension = 2\nkernel.family = \"gaussian\"\nkernel.sigma2 = 0.5\n\
         t_list = [0.25, 0.5, 1]\neps_list = [0.1, 0.05, 0.02, 0.01]\n",
    ))
    .unwrap();
    let elapsed = start.elapsed();
    let pass = r.passed() && elapsed < Duration::from_secs(1);
    verdict(
        1,
        pass,
        "residual identity, monotone decay, < 0.01 at eps = 0.01",
        format!(
            "max formula error {:.1e}, {} verdicts, {:.0} ms",
            detail(&r, "max_explicit_formula_error"),
            r.verdicts.len(),
            elapsed.as_secs_f64() * 1e3
        ),
    );
    assert!(pass, "{:?}", r.verdicts);
}

fn ilt_run(checks: &str) -> (Report, Duration) {
    let start = Instant::now();
    let r = commands::ilt_props(&config(&format!(
        "dimension = 2\nmaster_seed = 2024\neps_list = [0.2]\nilt.checks = [{checks}]\n\
         ilt.mean_samples = 10000\nilt.mean_steps = 4000\n\
         ilt.scaling_t = 0.5\nilt.scaling_samples = 2000\n\
         ilt.dyadic_samples = 10000\nilt.dyadic_level = 2\nilt.area_level = 10\n"
    )))
    .unwrap();
    (r, start.elapsed())
}

fn row_of(r: &Report, check: &str) -> usize {
    r.table.rows.iter().position(|row| row[0] == check).unwrap()
}

#[test]
fn criterion_02_exact_means() {
    let (r, elapsed) = &ilt_run("\"means\"");
    // The reference is the closed-form double integral of R_ε(x)p_{u+s}(x),
    // checked here against an independent midpoint rule.
    let k = MollifierKernel::gaussian(0.5, 2).unwrap();
    let a = 0.04;
    let m = 4000;
    let h = 1.0 / m as f64;
    let mut quad = 0.0;
    for i in 0..m {
        for j in 0..m {
            let (u, s) = ((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
            quad += 1.0 / (2.0 * std::f64::consts::PI * (u + s + a));
        }
    }
    quad *= h * h;
    let closed = k.mutual_mean(0.2, 1.0).unwrap();
    let reference_ok = (quad - closed).abs() < 1e-6;
    let (b, al) = (row_of(r, "beta_mean"), row_of(r, "alpha_mean"));
    let z = |row: usize| (cell(r, row, "value") - cell(r, row, "reference")) / cell(r, row, "stderr_or_bound");
    let pass = v(r, "beta_mean") && v(r, "alpha_mean") && reference_ok && *elapsed < Duration::from_secs(120);
    verdict(
        2,
        pass,
        "MC means of beta and alpha vs closed forms",
        format!(
            "z_beta {:+.2}, z_alpha {:+.2}, E[alpha] = {closed:.6} (quadrature {quad:.6}), {:.0} s",
            z(b),
            z(al),
            elapsed.as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_03_scaling_laws() {
    let (r, _) = &ilt_run("\"scaling\"");
    let p = |name: &str| detail(r, &format!("{name}_p"));
    let pass = v(r, "scaling_beta_ks") && v(r, "scaling_alpha_ks");
    verdict(
        3,
        pass,
        "Brownian scaling KS tests at t = 0.5",
        format!(
            "p_beta {:.3}, p_alpha {:.3}",
            p("scaling_beta_ks"),
            p("scaling_alpha_ks")
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_04_dyadic_decomposition() {
    let (r, _) = &ilt_run("\"dyadic\", \"area\"");
    let worst = r
        .table
        .rows
        .iter()
        .filter(|row| row[0].starts_with("box_corr"))
        .map(|row| row[1].parse::<f64>().unwrap().abs())
        .fold(0.0, f64::max);
    let pass = v(r, "box_correlation") && v(r, "box_law_ks") && v(r, "covered_area");
    verdict(
        4,
        pass,
        "box correlations, box-law KS, covered area",
        format!(
            "max |rho| {worst:.4} (bound 0.04), KS p {:.3}, area {}",
            detail(r, "box_law_ks_p"),
            r.table.rows[row_of(r, "covered_area_L10")][1]
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_05_cross_validation() {
    let start = Instant::now();
    let d1 = commands::xval(&config(
        "dimension = 1\nmaster_seed = 11\nn = 1\neps_list = [0.3]\nt_list = [0.25]\n\
         mc.n_paths = 20000\nmc.n_steps = 200\nxval.h = 0.1\n",
    ))
    .unwrap();
    let d2 = commands::xval(&config(
        "dimension = 2\nmaster_seed = 12\nn = [1, 2]\neps_list = [0.3]\nt_list = [0.1]\n\
         mc.n_paths = 20000\nmc.n_steps = 200\nxval.h = 0.1\n",
    ))
    .unwrap();
    let elapsed = start.elapsed();
    let zs: Vec<String> = d1
        .z_scores
        .iter()
        .map(|(k, z)| format!("d1 {k}: {z:+.2}"))
        .chain(d2.z_scores.iter().map(|(k, z)| format!("d2 {k}: {z:+.2}")))
        .collect();
    let samples_ok = [&d1, &d2].iter().all(|r| {
        (0..r.table.rows.len()).all(|i| cell(r, i, "fk_n_samples") >= 2e4 && cell(r, i, "pde_n_samples") >= 2e4)
    });
    let pass = d1.passed() && d2.passed() && d2.verdicts.len() == 2 && samples_ok && elapsed < Duration::from_secs(900);
    verdict(
        5,
        pass,
        "FK vs lattice PDE at fixed eps",
        format!("{}; {:.0} s", zs.join(", "), elapsed.as_secs_f64()),
    );
    assert!(pass, "{:?} {:?}", d1.table.rows, d2.table.rows);
}

#[test]
fn criterion_06_small_time_stability() {
    let r = commands::limit_moment(&config(
        "dimension = 2\nmaster_seed = 6\nn = 2\nt_list = [0.05]\neps_list = [0.2, 0.1, 0.05]\nmc.n_paths = 1000\n",
    ))
    .unwrap();
    let cauchy = v(&r, "cauchy_t0.05_n2");
    let identity = v(&r, "exponent_form_identity");
    let zs: Vec<f64> = (0..2)
        .map(|i| r.z_scores[&format!("cauchy_t0.05_n2_step{i}")])
        .collect();

    // The renormalized second moment still carries the ε-dependence of
    // E[α_ε] = E∫∫R_ε(B_u − B'_s), an O(ε² log ε) drift that is not small
    // while ε² is comparable to t. Successive log-ratios match it.
    let k = MollifierKernel::gaussian(0.5, 2).unwrap();
    let mean = |i: usize| cell(&r, i, "mean");
    let se = |i: usize| cell(&r, i, "stderr");
    let mut explained = true;
    let mut notes = Vec::new();
    for i in 0..2 {
        let (e0, e1) = (cell(&r, i, "eps"), cell(&r, i + 1, "eps"));
        let predicted = k.mutual_mean(e1, 0.05).unwrap() - k.mutual_mean(e0, 0.05).unwrap();
        let observed = (mean(i + 1) / mean(i)).ln();
        let sd = (se(i) / mean(i)).hypot(se(i + 1) / mean(i + 1));
        explained &= (observed - predicted).abs() <= 4.0 * sd + 0.2 * predicted.abs();
        notes.push(format!("log-ratio {observed:.5} vs predicted {predicted:.5}"));
    }
    let shrinking = (mean(2) - mean(1)).abs() < (mean(1) - mean(0)).abs();
    let pass = cauchy && identity;
    verdict(
        6,
        pass,
        "Cauchy verdict on the eps ladder and exponent-form identity",
        format!(
            "identity {}, max rel error {:.1e}; Cauchy z {:+.1}, {:+.1}: {}; drift {} the mutual-intersection mean, differences shrinking: {shrinking}",
            if identity { "holds" } else { "violated" },
            detail(&r, "max_factor_rel_error"),
            zs[0],
            zs[1],
            notes.join(", "),
            if explained { "matches" } else { "does not match" },
        ),
    );
    assert!(identity);
    if !cauchy {
        assert!(explained && shrinking, "unexplained Cauchy failure: {notes:?}");
    }
}

#[test]
fn criterion_07_uniform_exponential_moments() {
    let start = Instant::now();
    let r = commands::exp_moment(&config(
        "dimension = 2\nmaster_seed = 7\neps_list = [0.3, 0.2, 0.1, 0.05]\nmc.n_paths = 1000\n\
         exp.which = [\"x\", \"y\"]\nexp.lambda_list = [0.5]\n",
    ))
    .unwrap();
    let heavy = r.warnings.contains(Warning::HeavyTail.as_str());
    let pass = v(&r, "uniform_x_lambda0.5") && v(&r, "uniform_y_lambda0.5") && !heavy;
    verdict(
        7,
        pass,
        "exp moments of X and Y uniform in eps at lambda = 0.5",
        format!(
            "max/min X {:.4}, Y {:.4}, heavy-tail flags: {heavy}, {:.0} s",
            detail(&r, "spread_x_lambda0.5"),
            detail(&r, "spread_y_lambda0.5"),
            start.elapsed().as_secs_f64()
        ),
    );
    assert!(pass, "{:?}", r.table.rows);
}

#[test]
fn criterion_08_explosion_probe() {
    // d = 3: the stated window.
    let d3 = commands::explosion(&config(
        "dimension = 3\nt_list = [1]\neps_list = [0.4, 0.2, 0.1]\nmc.n_paths = 0\n",
    ))
    .unwrap();
    let d3_pass = v(&d3, "lower_bound_increasing_t1");
    let lbs: Vec<f64> = (0..3).map(|i| cell(&d3, i, "log_lower_bound")).collect();
    let crossover = detail(&d3, "eps_crossover_t1");
    // The t²/ε³ gain overtakes the c′t/ε² small-ball cost only below the
    // crossover; there the bound does increase.
    let below = commands::explosion(&config(
        "dimension = 3\nt_list = [1]\neps_list = [0.0004, 0.0002, 0.0001]\nmc.n_paths = 0\n",
    ))
    .unwrap();
    let d3_explained = !d3_pass && crossover < 0.1 && v(&below, "lower_bound_increasing_t1");

    // d = 2: the analytic column above the growth threshold, the Monte
    // Carlo column at t = 0.05.
    let d2a = commands::explosion(&config(
        "dimension = 2\nt_list = [300]\neps_list = [0.4, 0.2, 0.1]\nmc.n_paths = 0\n",
    ))
    .unwrap();
    let threshold = detail(&d2a, "growth_threshold_t");
    let d2_mc = commands::explosion(&config(
        "dimension = 2\nmaster_seed = 8\nt_list = [0.05]\neps_list = [0.02, 0.01, 0.005]\nmc.n_paths = 1000\n",
    ))
    .unwrap();
    let d2_pass = threshold < 300.0 && v(&d2a, "lower_bound_increasing_t300") && v(&d2_mc, "mc_stable_t0.05");
    let mc_z: Vec<String> = d2_mc.z_scores.values().map(|z| format!("{z:+.2}")).collect();

    verdict(
        8,
        d3_pass && d2_pass,
        "explosion lower bound (d = 3) and d = 2 growth + MC stability",
        format!(
            "d=3 {}: log bound at eps 0.4/0.2/0.1: {:.1}/{:.1}/{:.1}, increases only for eps < {crossover:.2e}; \
             d=2 {}: threshold t = {threshold:.1}, increasing at t = 300: {}, MC z {}",
            if d3_pass { "pass" } else { "FAIL" },
            lbs[0],
            lbs[1],
            lbs[2],
            if d2_pass { "pass" } else { "FAIL" },
            v(&d2a, "lower_bound_increasing_t300"),
            mc_z.join(", ")
        ),
    );
    assert!(d2_pass);
    if !d3_pass {
        assert!(d3_explained, "{lbs:?}, crossover {crossover}");
    }
}

fn run_binary(sub: &str, text: &str, threads: &str, dir: &Path, tag: &str) -> Vec<u8> {
    let cfg = dir.join(format!("{sub}.toml"));
    std::fs::write(&cfg, text).unwrap();
    let out = dir.join(format!("{sub}-{tag}"));
    let status = Command::new(env!("CARGO_BIN_EXE_pamfk"))
        .args([
            sub,
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--threads",
            threads,
        ])
        .env_remove("PAMFK_THREADS")
        .output()
        .unwrap()
        .status;
    assert!(matches!(status.code(), Some(0 | 4)), "{sub}: {status}");
    std::fs::read(out.join("results.csv")).unwrap()
}

#[test]
fn criterion_09_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let runs = [
        (
            "fk-moment",
            "dimension = 2\nn = [1, 2, 3]\nt_list = [0.04]\neps_list = [0.3, 0.2]\nmc.n_paths = 400\n",
        ),
        ("limit-moment", "dimension = 2\nn = 2\nmc.n_paths = 200\n"),
        ("exp-moment", "dimension = 2\neps_list = [0.3, 0.2]\nmc.n_paths = 200\n"),
        (
            "ilt-props",
            "dimension = 2\nilt.mean_samples = 200\nilt.mean_steps = 400\nilt.scaling_samples = 200\n\
             ilt.dyadic_samples = 200\nilt.dyadic_steps = 256\n",
        ),
        ("xval", "dimension = 1\nmc.n_paths = 500\n"),
        ("explosion", "dimension = 2\nmc.n_paths = 100\n"),
        ("lemma-check", "dimension = 2\n"),
    ];
    let mut identical = Vec::new();
    for (sub, text) in runs {
        let outs: Vec<Vec<u8>> = [("1", "a"), ("1", "b"), ("8", "c"), ("8", "d")]
            .iter()
            .map(|(k, tag)| run_binary(sub, text, k, tmp.path(), tag))
            .collect();
        identical.push((sub, outs.iter().all(|o| *o == outs[0]) && !outs[0].is_empty()));
    }
    let pass = identical.iter().all(|(_, ok)| *ok);
    let list: Vec<String> = identical
        .iter()
        .map(|(s, ok)| format!("{s} {}", if *ok { "ok" } else { "DIFFERS" }))
        .collect();
    verdict(
        9,
        pass,
        "byte-identical results.csv at 1 and 8 workers, run twice",
        list.join(", "),
    );
    assert!(pass);
}

#[test]
fn criterion_10_pde_oracle_self_tests() {
    // Heat kernel on the fine lattice.
    let (w, t, h) = (0.25f64, 0.1, 1.0 / 128.0);
    let mut heat_err: f64 = 0.0;
    for d in [1usize, 2] {
        let xi = GridField::zeros(d, h, 2.0).unwrap();
        let u0 = InitialCondition::GaussianBump {
            center: vec![0.0; d],
            width: w,
        };
        let u = solve_pde(&xi, t, max_stable_dt(d, h), 0.0, &u0).unwrap();
        let s2 = w * w + t;
        let exact = GridField::from_fn(d, h, 2.0, |x| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            (w * w / s2).powf(d as f64 / 2.0) * (-r2 / (2.0 * s2)).exp()
        })
        .unwrap();
        heat_err = heat_err.max(u.max_abs_diff(&exact));
    }

    // A constant potential V only multiplies by e^{(V−C)t}.
    let (pot, c, t2, h2) = (0.7, 0.2, 0.3, 0.1);
    let mut const_err: f64 = 0.0;
    for d in [1usize, 2] {
        let xi = GridField::from_fn(d, h2, 1.5, |_| pot).unwrap();
        let dt = max_stable_dt(d, h2);
        let flat = solve_pde(&xi, t2, dt, c, &InitialCondition::one()).unwrap();
        let factor = ((pot - c) * t2).exp();
        const_err = const_err.max(flat.values.iter().map(|u| (u / factor - 1.0).abs()).fold(0.0, f64::max));
        let bump = InitialCondition::GaussianBump {
            center: vec![0.1; d],
            width: 0.3,
        };
        let with = solve_pde(&xi, t2, dt, c, &bump).unwrap();
        let without = solve_pde(&GridField::zeros(d, h2, 1.5).unwrap(), t2, dt, 0.0, &bump).unwrap();
        for (a, b) in with.values.iter().zip(&without.values) {
            if *b > 1e-300 {
                const_err = const_err.max((a / (b * factor) - 1.0).abs());
            }
        }
    }

    // Periodic explicit diffusion conserves mass.
    let mut mass_err: f64 = 0.0;
    for d in [1usize, 2] {
        let mut u = GridField::from_fn(d, 0.05, 1.0, |x| {
            (-(x.iter().map(|v| (v - 0.6) * (v - 0.6)).sum::<f64>()) * 20.0).exp()
        })
        .unwrap();
        let m0 = u.integral();
        for _ in 0..200 {
            u = diffusion_step(&u, max_stable_dt(d, 0.05));
        }
        mass_err = mass_err.max((u.integral() / m0 - 1.0).abs());
    }
    let pass = heat_err <= 1e-3 && const_err <= 1e-12 && mass_err <= 1e-12;
    verdict(
        10,
        pass,
        "heat kernel, constant potential, mass conservation",
        format!(
            "heat max error {heat_err:.2e}, constant-potential rel error {const_err:.1e}, mass drift {mass_err:.1e}"
        ),
    );
    assert!(pass);
}
