//! Riemann-sum intersection functionals of Brownian paths.
//!
//! On the grid t_i = iΔt, with left points i = 0, …, n−1:
//!
//! * `β_ε([0,t]²_<) ≈ Δt² Σ_{i<j} R_ε(B_{t_j} − B_{t_i})` on the strict
//!   simplex (the diagonal is excluded, not half-weighted),
//! * `α_ε([0,t]²) ≈ Δt² Σ_{i,j} R_ε(B¹_{t_i} − B²_{t_j})` on the full square,
//! * `I_n^ε = Σ_k β_ε(B^k) + Σ_{i<j} α_ε(B^i, B^j)`.
//!
//! Results are flagged [`Warning::UnderResolved`] when Δt > ε²/4.

pub mod pairsum;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{check_eps, MollifierKernel};
use crate::paths::BrownianPath;
use crate::stats::Warning;
use pairsum::{Cloud, SumMethod};

/// Δt must not exceed this multiple of ε² for the kernel to count as resolved.
pub const RESOLUTION_RATIO: f64 = 0.25;

/// A functional value with its resolution flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IltValue {
    pub value: f64,
    pub under_resolved: bool,
}

impl IltValue {
    pub fn warnings(&self) -> Vec<Warning> {
        if self.under_resolved {
            vec![Warning::UnderResolved]
        } else {
            Vec::new()
        }
    }
}

/// Whether a grid with step `dt` resolves R_ε.
pub fn is_resolved(dt: f64, eps: f64) -> bool {
    dt <= RESOLUTION_RATIO * eps * eps
}

fn check_path(path: &BrownianPath, k: &MollifierKernel) -> Result<()> {
    if path.dim() != k.dim() {
        return Err(Error::input(format!(
            "path dimension {} does not match kernel dimension {}",
            path.dim(),
            k.dim()
        )));
    }
    Ok(())
}

/// β_ε over the strict simplex of the path's time window.
pub fn beta_simplex(path: &BrownianPath, k: &MollifierKernel, eps: f64) -> Result<IltValue> {
    beta_simplex_with(path, k, eps, SumMethod::Auto)
}

pub fn beta_simplex_with(path: &BrownianPath, k: &MollifierKernel, eps: f64, method: SumMethod) -> Result<IltValue> {
    check_eps(eps)?;
    check_path(path, k)?;
    let dt = path.dt();
    let sum = pairsum::self_sum(Cloud::new(path.dim(), path.left_points()), k, eps, method);
    Ok(IltValue {
        value: sum * dt * dt,
        under_resolved: !is_resolved(dt, eps),
    })
}

/// α_ε over the full square [0,t]² for two paths on the same grid.
pub fn alpha_mutual(path1: &BrownianPath, path2: &BrownianPath, k: &MollifierKernel, eps: f64) -> Result<IltValue> {
    alpha_mutual_with(path1, path2, k, eps, SumMethod::Auto)
}

pub fn alpha_mutual_with(
    path1: &BrownianPath,
    path2: &BrownianPath,
    k: &MollifierKernel,
    eps: f64,
    method: SumMethod,
) -> Result<IltValue> {
    check_eps(eps)?;
    check_path(path1, k)?;
    if !path1.same_grid(path2) {
        return Err(Error::input("paths must share dimension, t_max and n_steps"));
    }
    let dt = path1.dt();
    let sum = pairsum::cross_sum(
        Cloud::new(path1.dim(), path1.left_points()),
        Cloud::new(path2.dim(), path2.left_points()),
        k,
        eps,
        method,
    );
    Ok(IltValue {
        value: sum * dt * dt,
        under_resolved: !is_resolved(dt, eps),
    })
}

/// `(β_ε(path1), β_ε(path2), α_ε(path1, path2))` in one pass.
pub fn pair_functionals(
    path1: &BrownianPath,
    path2: &BrownianPath,
    k: &MollifierKernel,
    eps: f64,
) -> Result<(IltValue, IltValue, IltValue)> {
    check_eps(eps)?;
    check_path(path1, k)?;
    if !path1.same_grid(path2) {
        return Err(Error::input("paths must share dimension, t_max and n_steps"));
    }
    let dt = path1.dt();
    let d = path1.dim();
    let (s1, s2, c) = pairsum::pair_sums(
        Cloud::new(d, path1.left_points()),
        Cloud::new(d, path2.left_points()),
        k,
        eps,
        SumMethod::Auto,
    );
    let under_resolved = !is_resolved(dt, eps);
    let v = |sum: f64| IltValue {
        value: sum * dt * dt,
        under_resolved,
    };
    Ok((v(s1), v(s2), v(c)))
}

/// X_ε = β_ε − ν_ε(t_max), centred with the exact mean.
pub fn renormalized_self(path: &BrownianPath, k: &MollifierKernel, eps: f64) -> Result<IltValue> {
    let beta = beta_simplex(path, k, eps)?;
    Ok(IltValue {
        value: beta.value - k.nu(eps, path.t_max())?,
        ..beta
    })
}

fn check_group(paths: &[BrownianPath], k: &MollifierKernel) -> Result<()> {
    let first = paths
        .first()
        .ok_or_else(|| Error::input("I_n needs at least one path"))?;
    check_path(first, k)?;
    if paths.iter().any(|p| !p.same_grid(first)) {
        return Err(Error::input("all paths must share dimension, t_max and n_steps"));
    }
    Ok(())
}

/// I_n^ε: n self terms on the simplex plus n(n−1)/2 mutual terms on the
/// square, with no ½ in front of the self terms.
pub fn i_n_epsilon(paths: &[BrownianPath], k: &MollifierKernel, eps: f64) -> Result<IltValue> {
    i_n_epsilon_with(paths, k, eps, SumMethod::Auto)
}

pub fn i_n_epsilon_with(paths: &[BrownianPath], k: &MollifierKernel, eps: f64, method: SumMethod) -> Result<IltValue> {
    check_eps(eps)?;
    check_group(paths, k)?;
    let dt = paths[0].dt();
    let clouds: Vec<Cloud<'_>> = paths.iter().map(|p| Cloud::new(p.dim(), p.left_points())).collect();
    Ok(IltValue {
        value: pairsum::group_sum(&clouds, k, eps, method) * dt * dt,
        under_resolved: !is_resolved(dt, eps),
    })
}

/// I_n^ε split into its self and mutual parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntersectionTerms {
    pub self_terms: Vec<f64>,
    /// ((i, j), α_ε(B^i, B^j)) for i < j.
    pub mutual_terms: Vec<((usize, usize), f64)>,
}

impl IntersectionTerms {
    pub fn compute(paths: &[BrownianPath], k: &MollifierKernel, eps: f64) -> Result<Self> {
        check_eps(eps)?;
        check_group(paths, k)?;
        let self_terms = paths
            .iter()
            .map(|p| beta_simplex(p, k, eps).map(|v| v.value))
            .collect::<Result<Vec<_>>>()?;
        let mut mutual_terms = Vec::new();
        for i in 0..paths.len() {
            for j in i + 1..paths.len() {
                mutual_terms.push(((i, j), alpha_mutual(&paths[i], &paths[j], k, eps)?.value));
            }
        }
        Ok(Self {
            self_terms,
            mutual_terms,
        })
    }

    pub fn total(&self) -> f64 {
        self.self_terms.iter().sum::<f64>() + self.mutual_terms.iter().map(|(_, v)| v).sum::<f64>()
    }
}

/// The functionals of a pair of paths on [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IltSample {
    /// β_ε([0,1]²_<) of the first path.
    pub beta: f64,
    /// α_ε([0,1]²) of the pair.
    pub alpha: f64,
    /// X_ε of the first path.
    pub x_renorm: f64,
    /// Y_ε = α_ε([0,1]²).
    pub y_mutual: f64,
    /// I_2^ε of the pair.
    pub i_n: f64,
}

impl IltSample {
    pub fn from_pair(path1: &BrownianPath, path2: &BrownianPath, k: &MollifierKernel, eps: f64) -> Result<Self> {
        let (beta, beta2, alpha) = pair_functionals(path1, path2, k, eps)?;
        let (beta, beta2, alpha) = (beta.value, beta2.value, alpha.value);
        Ok(Self {
            beta,
            alpha,
            x_renorm: beta - k.nu(eps, path1.t_max())?,
            y_mutual: alpha,
            i_n: beta + beta2 + alpha,
        })
    }
}

/// The dyadic box A_l^k = [2l/2^{k+1}, (2l+1)/2^{k+1}) × [(2l+1)/2^{k+1}, (2l+2)/2^{k+1})
/// in (u, s) coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicBox {
    pub k: u32,
    pub l: u64,
}

impl DyadicBox {
    pub fn new(k: u32, l: u64) -> Result<Self> {
        if k >= 62 || l >= 1u64 << k {
            return Err(Error::input(format!("no dyadic box with k = {k}, l = {l}")));
        }
        Ok(Self { k, l })
    }

    fn denom(&self) -> f64 {
        2f64.powi(self.k as i32 + 1)
    }

    pub fn u_interval(&self) -> (f64, f64) {
        let m = self.denom();
        (2.0 * self.l as f64 / m, (2 * self.l + 1) as f64 / m)
    }

    pub fn s_interval(&self) -> (f64, f64) {
        let m = self.denom();
        ((2 * self.l + 1) as f64 / m, (2 * self.l + 2) as f64 / m)
    }

    pub fn area(&self) -> f64 {
        self.denom().powi(-2)
    }

    /// Left-point indices i with i/n in [2l, 2l+1)/2^{k+1}, and j with j/n
    /// in [2l+1, 2l+2)/2^{k+1}, for a grid of n steps on [0, 1].
    pub fn index_ranges(&self, n: usize) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        let m = 1u128 << (self.k + 1);
        let n = n as u128;
        // First index with i/n ≥ q/m is ⌈q·n/m⌉.
        let first = |q: u128| -> usize { (q * n).div_ceil(m) as usize };
        let l = self.l as u128;
        (first(2 * l)..first(2 * l + 1), first(2 * l + 1)..first(2 * l + 2))
    }
}

/// All boxes A_l^k with k ≤ max_level, ordered by (k, l).
pub fn triangle_boxes(max_level: u32) -> Vec<DyadicBox> {
    (0..=max_level)
        .flat_map(|k| (0..1u64 << k).map(move |l| DyadicBox { k, l }))
        .collect()
}

fn check_unit_window(path: &BrownianPath) -> Result<()> {
    if path.t_max() != 1.0 {
        return Err(Error::input(format!(
            "dyadic boxes live in [0,1]²; path covers [0, {}]",
            path.t_max()
        )));
    }
    Ok(())
}

/// β_ε(A_l^k): Δt² Σ R_ε(B_{s_j} − B_{u_i}) over grid pairs in the box.
pub fn beta_on_box(path: &BrownianPath, b: &DyadicBox, k: &MollifierKernel, eps: f64) -> Result<IltValue> {
    check_eps(eps)?;
    check_path(path, k)?;
    check_unit_window(path)?;
    let d = path.dim();
    let (us, ss) = b.index_ranges(path.n_steps());
    let pts = path.positions();
    let sum = pairsum::cross_sum(
        Cloud::new(d, &pts[us.start * d..us.end * d]),
        Cloud::new(d, &pts[ss.start * d..ss.end * d]),
        k,
        eps,
        SumMethod::Auto,
    );
    let dt = path.dt();
    Ok(IltValue {
        value: sum * dt * dt,
        under_resolved: !is_resolved(dt, eps),
    })
}

/// β_ε([0,1]²_<) split into the boxes up to `max_level` and the
/// near-diagonal strip they leave uncovered.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DyadicDecomposition {
    pub max_level: u32,
    pub box_sum: f64,
    /// Contribution of grid pairs not covered by any box.
    pub strip: f64,
    pub strip_pairs: u64,
    /// sup R_ε · Δt² · strip_pairs.
    pub strip_bound: f64,
}

impl DyadicDecomposition {
    pub fn compute(path: &BrownianPath, k: &MollifierKernel, eps: f64, max_level: u32) -> Result<Self> {
        check_eps(eps)?;
        check_path(path, k)?;
        check_unit_window(path)?;
        let mut box_sum = 0.0;
        for b in triangle_boxes(max_level) {
            box_sum += beta_on_box(path, &b, k, eps)?.value;
        }
        // Pairs i < j in the same block of the level max_level + 1 partition
        // belong to no box.
        let n = path.n_steps();
        let d = path.dim();
        let blocks = 1u128 << (max_level + 1);
        let mut strip = 0.0;
        let mut strip_pairs = 0u64;
        let pts = path.positions();
        for q in 0..blocks {
            let lo = (q * n as u128).div_ceil(blocks) as usize;
            let hi = ((q + 1) * n as u128).div_ceil(blocks) as usize;
            if hi > lo {
                strip += pairsum::self_sum(Cloud::new(d, &pts[lo * d..hi * d]), k, eps, SumMethod::Auto);
                let m = (hi - lo) as u64;
                strip_pairs += m * (m - 1) / 2;
            }
        }
        let dt = path.dt();
        Ok(Self {
            max_level,
            box_sum,
            strip: strip * dt * dt,
            strip_pairs,
            strip_bound: k.scaled_radial(eps, 0.0) * dt * dt * strip_pairs as f64,
        })
    }
}
