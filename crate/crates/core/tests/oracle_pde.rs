use pamfk::kernel::MollifierKernel;
use pamfk::moments::InitialCondition;
use pamfk::oracle::{max_stable_dt, mollify_grid, sample_noise_grid, solve_pde, GridField};
use pamfk::stats::mean_and_stderr;
use pamfk::SeedSpec;

#[test]
fn heat_kernel_evolution_matches_the_exact_solution() {
    let (w, t, h) = (0.25f64, 0.1, 1.0 / 128.0);
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
        let err = u.max_abs_diff(&exact);
        assert!(err <= 1e-3, "d={d}: max error {err}");
    }
}

fn mollified(d: usize, seed: u64) -> GridField {
    let k = MollifierKernel::gaussian(0.5, d).unwrap();
    let noise = sample_noise_grid(d, 0.1, 2.0, SeedSpec::new(seed, 0)).unwrap();
    mollify_grid(&noise, &k, 0.3).unwrap().0
}

#[test]
fn splitting_error_is_first_order_in_dt() {
    let xi = mollified(2, 4);
    let u0 = InitialCondition::GaussianBump {
        center: vec![0.0, 0.0],
        width: 0.5,
    };
    let dt0 = max_stable_dt(2, 0.1);
    let reference = solve_pde(&xi, 0.2, dt0 / 64.0, 1.0, &u0).unwrap();
    let errs: Vec<f64> = [1.0, 2.0, 4.0]
        .iter()
        .map(|f| solve_pde(&xi, 0.2, dt0 / f, 1.0, &u0).unwrap().max_abs_diff(&reference))
        .collect();
    for pair in errs.windows(2) {
        let ratio = pair[0] / pair[1];
        assert!((1.7..2.4).contains(&ratio), "errors {errs:?}");
    }
}

#[test]
fn solutions_stay_positive() {
    for d in [1, 2] {
        let xi = mollified(d, 8);
        let u0 = InitialCondition::GaussianBump {
            center: vec![0.3; d],
            width: 0.4,
        };
        let u = solve_pde(&xi, 0.5, max_stable_dt(d, 0.1), 2.0, &u0).unwrap();
        assert!(u.values.iter().all(|&v| v >= 0.0 && v.is_finite()));
    }
}

/// R_ε(x) summed over the periodic images of the box.
fn periodic_covariance(k: &MollifierKernel, eps: f64, x: &[f64], period: f64) -> f64 {
    let shifts = [-1.0, 0.0, 1.0];
    let mut total = 0.0;
    if x.len() == 1 {
        for m in shifts {
            total += k.scaled(eps, &[x[0] + m * period]).unwrap();
        }
    } else {
        for m in shifts {
            for l in shifts {
                total += k.scaled(eps, &[x[0] + m * period, x[1] + l * period]).unwrap();
            }
        }
    }
    total
}

/// h^{−d}·Σ_y W(y)W(y + o), the covariance the lattice noise should
/// reproduce exactly, with W the normalized stencil (recovered by
/// mollifying a unit spike).
fn lattice_covariance(k: &MollifierKernel, d: usize, h: f64, ext: f64, eps: f64, o: &[isize]) -> f64 {
    let mut spike = GridField::zeros(d, h, ext).unwrap();
    spike.values[0] = 1.0;
    let w = mollify_grid(&spike, k, eps).unwrap().0.values;
    let side = (2.0 * ext / h).round() as isize;
    let mut acc = 0.0;
    for (idx, v) in w.iter().enumerate() {
        acc += v * w[shift(idx, o, d, side)];
    }
    acc / h.powi(d as i32)
}

fn shift(idx: usize, o: &[isize], d: usize, side: isize) -> usize {
    let idx = idx as isize;
    let out = if d == 1 {
        (idx + o[0]).rem_euclid(side)
    } else {
        let (i, j) = (idx / side, idx % side);
        (i + o[0]).rem_euclid(side) * side + (j + o[1]).rem_euclid(side)
    };
    out as usize
}

#[test]
fn mollified_noise_has_the_kernel_covariance() {
    let (h, ext, eps) = (0.1, 1.0, 0.3);
    for d in [1usize, 2] {
        for k in [
            MollifierKernel::gaussian(0.5, d).unwrap(),
            MollifierKernel::bump(1.0, d).unwrap(),
        ] {
            let offsets: Vec<Vec<isize>> = if d == 1 {
                vec![vec![0], vec![1], vec![3], vec![6]]
            } else {
                vec![vec![0, 0], vec![1, 0], vec![2, 1], vec![4, 0]]
            };
            let side = (2.0 * ext / h) as isize;
            // Per draw, average ξ_ε(y)ξ_ε(y + o) over all sites y.
            let per_draw: Vec<Vec<f64>> = (0..1000u64)
                .map(|j| {
                    let noise = sample_noise_grid(d, h, ext, SeedSpec::new(77, j)).unwrap();
                    let f = mollify_grid(&noise, &k, eps).unwrap().0;
                    offsets
                        .iter()
                        .map(|o| {
                            let acc: f64 = f
                                .values
                                .iter()
                                .enumerate()
                                .map(|(i, v)| v * f.values[shift(i, o, d, side)])
                                .sum();
                            acc / f.values.len() as f64
                        })
                        .collect()
                })
                .collect();
            for (a, o) in offsets.iter().enumerate() {
                let samples: Vec<f64> = per_draw.iter().map(|r| r[a]).collect();
                let (m, se) = mean_and_stderr(&samples);
                let lattice = lattice_covariance(&k, d, h, ext, eps, o);
                assert!(
                    (m - lattice).abs() <= 3.0 * se,
                    "d={d} {k:?} offset {o:?}: {m} ± {se} vs {lattice}"
                );

                let x: Vec<f64> = o.iter().map(|&i| i as f64 * h).collect();
                let continuum = periodic_covariance(&k, eps, &x, 2.0 * ext);
                // A sampled Gaussian at h ≈ σε/2 is exact to far below MC
                // error; the bump stencil at ε = 3h is only a few cells wide.
                let tol = if k.is_gaussian() { 1e-8 } else { 0.06 };
                let rel = (lattice - continuum).abs() / k.scaled(eps, &vec![0.0; d]).unwrap();
                assert!(rel <= tol, "d={d} {k:?} offset {o:?}: lattice {lattice} vs {continuum}");
            }
        }
    }
}
