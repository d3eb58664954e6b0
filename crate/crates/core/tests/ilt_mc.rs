use pamfk::ilt::{alpha_mutual, beta_on_box, beta_simplex, triangle_boxes, DyadicBox, DyadicDecomposition};
use pamfk::paths::sample_path;
use pamfk::stats::{correlation, ks_two_sample, mean_and_stderr};
use pamfk::{MollifierKernel, SeedSpec};

fn gauss2() -> MollifierKernel {
    MollifierKernel::gaussian(0.5, 2).unwrap()
}

#[test]
fn riemann_means_match_the_exact_integrals() {
    let (k, eps, m, steps) = (gauss2(), 0.3, 2000u64, 1000);
    let mut betas = Vec::new();
    let mut alphas = Vec::new();
    for i in 0..m {
        let p = sample_path(2, 1.0, steps, SeedSpec::new(31, 2 * i)).unwrap();
        let q = sample_path(2, 1.0, steps, SeedSpec::new(31, 2 * i + 1)).unwrap();
        betas.push(beta_simplex(&p, &k, eps).unwrap().value);
        alphas.push(alpha_mutual(&p, &q, &k, eps).unwrap().value);
    }
    let (mb, sb) = mean_and_stderr(&betas);
    let (ma, sa) = mean_and_stderr(&alphas);
    let nu = k.nu(eps, 1.0).unwrap();
    let mu = k.mutual_mean(eps, 1.0).unwrap();
    assert!((mb - nu).abs() <= 3.0 * sb, "β: {mb} ± {sb} vs {nu}");
    assert!((ma - mu).abs() <= 3.0 * sa, "α: {ma} ± {sa} vs {mu}");
}

#[test]
fn brownian_scaling_of_the_intersection_functionals() {
    // β_ε on [0, t] has the law of t·β_{ε/√t} on [0, 1]; same for α.
    let (k, eps, t, steps, m) = (gauss2(), 0.3, 0.5, 200, 1000u64);
    let sample = |t_max: f64, e: f64, scale: f64, seed: u64| -> (Vec<f64>, Vec<f64>) {
        (0..m)
            .map(|i| {
                let p = sample_path(2, t_max, steps, SeedSpec::new(seed, 2 * i)).unwrap();
                let q = sample_path(2, t_max, steps, SeedSpec::new(seed, 2 * i + 1)).unwrap();
                (
                    scale * beta_simplex(&p, &k, e).unwrap().value,
                    scale * alpha_mutual(&p, &q, &k, e).unwrap().value,
                )
            })
            .unzip()
    };
    let (b_t, a_t) = sample(t, eps, 1.0, 1);
    let (b_1, a_1) = sample(1.0, eps / t.sqrt(), t, 2);
    assert!(ks_two_sample(&b_t, &b_1).p_value > 0.01);
    assert!(ks_two_sample(&a_t, &a_1).p_value > 0.01);
    // The laws really do differ without the rescaling.
    let (b_wrong, _) = sample(1.0, eps, t, 3);
    assert!(ks_two_sample(&b_t, &b_wrong).p_value < 1e-6);
}

#[test]
fn same_level_boxes_are_uncorrelated_and_identically_distributed() {
    let (k, eps, m) = (gauss2(), 0.2, 2000u64);
    let boxes: Vec<DyadicBox> = (0..4).map(|l| DyadicBox::new(2, l).unwrap()).collect();
    let mut cols = vec![Vec::new(); 4];
    for i in 0..m {
        let p = sample_path(2, 1.0, 512, SeedSpec::new(55, i)).unwrap();
        for (c, b) in cols.iter_mut().zip(&boxes) {
            c.push(beta_on_box(&p, b, &k, eps).unwrap().value);
        }
    }
    let bound = 4.0 / (m as f64).sqrt();
    for a in 0..4 {
        for b in a + 1..4 {
            let r = correlation(&cols[a], &cols[b]);
            assert!(r.abs() < bound, "boxes {a},{b}: r = {r}");
        }
    }
    assert!(ks_two_sample(&cols[0], &cols[3]).p_value > 0.01);
}

#[test]
fn covered_area_and_reassembly() {
    for level in [0u32, 3, 10] {
        let area: f64 = triangle_boxes(level).iter().map(DyadicBox::area).sum();
        assert!((area - 0.5 * (1.0 - 2f64.powi(-(level as i32) - 1))).abs() < 1e-12);
    }
    let k = gauss2();
    let p = sample_path(2, 1.0, 1000, SeedSpec::new(8, 0)).unwrap();
    let full = beta_simplex(&p, &k, 0.2).unwrap().value;
    let dec = DyadicDecomposition::compute(&p, &k, 0.2, 5).unwrap();
    assert!((dec.box_sum + dec.strip - full).abs() < 1e-10 * full);
    assert!(dec.strip <= dec.strip_bound);
}
