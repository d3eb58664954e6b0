//! Gauss–Legendre quadrature: fixed rules, adaptive bisection, and a
//! geometric panelling for integrands concentrated at the left endpoint.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// An n-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on P_n from the Chebyshev-like initial guess.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped onto [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Shared 20-point rule used by the adaptive integrators.
pub fn gl20() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(20))
}

/// Composite rule: `panels` equal panels of `rule` on [a, b].
pub fn composite<F: FnMut(f64) -> f64>(rule: &GaussLegendre, mut f: F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|p| {
            let lo = a + p as f64 * h;
            let hi = if p + 1 == panels { b } else { lo + h };
            rule.integrate(&mut f, lo, hi)
        })
        .sum()
}

const MAX_DEPTH: u32 = 48;

/// Adaptive bisection with the 20-point rule. A panel is accepted when the
/// whole-panel value and the sum over its halves agree to its share of the
/// global tolerance `rel_tol·|I| + abs_tol`.
pub fn adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let rule = gl20();
    let rough = composite(rule, &f, a, b, 8);
    let tol = rel_tol * rough.abs() + abs_tol;
    let whole = rule.integrate(&f, a, b);
    refine(&f, rule, a, b, whole, tol / (b - a), 0)
}

fn refine<F: Fn(f64) -> f64>(
    f: &F,
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    whole: f64,
    tol_density: f64,
    depth: u32,
) -> Result<f64> {
    let mid = 0.5 * (a + b);
    let left = rule.integrate(f, a, mid);
    let right = rule.integrate(f, mid, b);
    let halves = left + right;
    if (halves - whole).abs() <= tol_density * (b - a) {
        return Ok(halves);
    }
    if depth >= MAX_DEPTH || !halves.is_finite() {
        return Err(Error::numerical(format!(
            "adaptive quadrature did not converge on [{a:e}, {b:e}]"
        )));
    }
    Ok(
        refine(f, rule, a, mid, left, tol_density, depth + 1)?
            + refine(f, rule, mid, b, right, tol_density, depth + 1)?,
    )
}

/// Integral over [a, b] for integrands that vary on a length `scale` near
/// `a` and slowly further out. Breakpoints are `a + scale·2^k` from
/// `scale·2^-20` upwards; each panel is integrated adaptively.
pub fn log_panels<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, scale: f64, rel_tol: f64) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    let mut edges = vec![a];
    let mut w = scale * 2f64.powi(-20);
    while a + w < b {
        edges.push(a + w);
        w *= 2.0;
    }
    edges.push(b);
    let rule = gl20();
    let rough: f64 = edges.windows(2).map(|e| composite(rule, &f, e[0], e[1], 2)).sum();
    let abs_tol = rel_tol * rough.abs();
    let mut total = 0.0;
    for e in edges.windows(2) {
        let share = abs_tol * (e[1] - e[0]) / (b - a);
        let whole = rule.integrate(&f, e[0], e[1]);
        // Panels near `a` are tiny; give each at least a floor so they do not
        // force pointless refinement.
        let floor = abs_tol * 1e-3 / edges.len() as f64;
        total += refine(&f, rule, e[0], e[1], whole, (share + floor) / (e[1] - e[0]), 0)?;
    }
    Ok(total)
}

/// Plain trapezoid rule with `n` intervals.
pub fn trapezoid<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|i| f(a + i as f64 * h)).sum();
    h * (0.5 * (f(a) + f(b)) + inner)
}
