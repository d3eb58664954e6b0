//! Pair sums Σ R_ε(x_i − y_j) over point clouds.
//!
//! Two routes compute the same number:
//!
//! * `Direct`: every pair, O(n·m) kernel evaluations.
//! * `Grid`: uses R = ρ⋆ρ. With F_x(y) = Σ_i ρ_ε(y − x_i),
//!   Σ_{i,j} R_ε(x_i − y_j) = ∫ F_x F_y. Each point is splatted onto a
//!   lattice of spacing s/2 (s the per-coordinate std of ρ_ε) with a
//!   truncation radius of 8s, and the integral is the lattice sum. For
//!   Gaussian ρ both the truncation and the trapezoid error sit near
//!   1e-14 relative, and the cost is O(n) splats instead of O(n²) pairs.
//!
//! Only Gaussian kernels in d ≤ 2 take the grid route.

use crate::kernel::MollifierKernel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SumMethod {
    /// Grid when it applies and the pair count is large.
    #[default]
    Auto,
    Direct,
    Grid,
}

/// Pair count above which `Auto` prefers the grid route.
const GRID_MIN_PAIRS: f64 = 2.0e5;
/// Largest lattice `Auto` will allocate.
const GRID_MAX_CELLS: usize = 1 << 24;
/// Truncation radius in units of the ρ_ε standard deviation.
const SPLAT_RADIUS_SD: f64 = 8.0;
/// Gaussian R_ε is treated as zero beyond this many of its own std's.
const DIRECT_CUTOFF_SD: f64 = 8.5;

/// Point cloud: `n` points of dimension `d`, row-major.
#[derive(Debug, Clone, Copy)]
pub struct Cloud<'a> {
    pub d: usize,
    pub coords: &'a [f64],
}

impl<'a> Cloud<'a> {
    pub fn new(d: usize, coords: &'a [f64]) -> Self {
        debug_assert_eq!(coords.len() % d, 0);
        Self { d, coords }
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }
}

/// Σ_{i<j} R_ε(x_j − x_i).
pub fn self_sum(cloud: Cloud<'_>, k: &MollifierKernel, eps: f64, method: SumMethod) -> f64 {
    let n = cloud.len() as f64;
    match resolve(method, k, eps, &[cloud], n * n / 2.0) {
        Some(grid) => grid.self_sum(cloud),
        None => direct_self(cloud, k, eps),
    }
}

/// Σ_{i,j} R_ε(x_i − y_j).
pub fn cross_sum(a: Cloud<'_>, b: Cloud<'_>, k: &MollifierKernel, eps: f64, method: SumMethod) -> f64 {
    let pairs = a.len() as f64 * b.len() as f64;
    match resolve(method, k, eps, &[a, b], pairs) {
        Some(grid) => grid.cross_sum(a, b),
        None => direct_cross(a, b, k, eps),
    }
}

/// `(self_sum(a), self_sum(b), cross_sum(a, b))`, splatting each cloud once
/// on the grid route.
pub fn pair_sums(a: Cloud<'_>, b: Cloud<'_>, k: &MollifierKernel, eps: f64, method: SumMethod) -> (f64, f64, f64) {
    let total = (a.len() + b.len()) as f64;
    match resolve(method, k, eps, &[a, b], total * total / 2.0) {
        Some(grid) => grid.pair_sums(a, b),
        None => (
            direct_self(a, k, eps),
            direct_self(b, k, eps),
            direct_cross(a, b, k, eps),
        ),
    }
}

/// Σ_k self_sum(c_k) + Σ_{k<l} cross_sum(c_k, c_l).
pub fn group_sum(clouds: &[Cloud<'_>], k: &MollifierKernel, eps: f64, method: SumMethod) -> f64 {
    let total: f64 = clouds.iter().map(|c| c.len() as f64).sum();
    match resolve(method, k, eps, clouds, total * total / 2.0) {
        Some(grid) => grid.group_sum(clouds),
        None => {
            let mut sum = 0.0;
            for (i, a) in clouds.iter().enumerate() {
                sum += direct_self(*a, k, eps);
                for b in &clouds[i + 1..] {
                    sum += direct_cross(*a, *b, k, eps);
                }
            }
            sum
        }
    }
}

fn resolve(method: SumMethod, k: &MollifierKernel, eps: f64, clouds: &[Cloud<'_>], pairs: f64) -> Option<Grid> {
    let var = k.gaussian_cov_variance()?;
    let d = k.dim();
    if d > 2 {
        return None;
    }
    // ρ_ε has half the variance of R_ε.
    let sd = (0.5 * var).sqrt() * eps;
    match method {
        SumMethod::Direct => None,
        SumMethod::Grid => Grid::new(d, sd, clouds, usize::MAX),
        SumMethod::Auto if pairs >= GRID_MIN_PAIRS => Grid::new(d, sd, clouds, GRID_MAX_CELLS),
        SumMethod::Auto => None,
    }
}

fn direct_self(c: Cloud<'_>, k: &MollifierKernel, eps: f64) -> f64 {
    let n = c.len();
    let mut sum = 0.0;
    match gaussian_params(k, eps) {
        Some((norm, inv2var, cut2)) => {
            for i in 0..n {
                let xi = c.point(i);
                let mut row = 0.0;
                for j in i + 1..n {
                    let r2 = dist2(xi, c.point(j));
                    if r2 < cut2 {
                        row += (-r2 * inv2var).exp();
                    }
                }
                sum += row;
            }
            sum * norm
        }
        None => {
            let support = k.support().map_or(f64::INFINITY, |s| s * eps);
            let cut2 = support * support;
            for i in 0..n {
                let xi = c.point(i);
                for j in i + 1..n {
                    let r2 = dist2(xi, c.point(j));
                    if r2 < cut2 {
                        sum += k.scaled_radial(eps, r2.sqrt());
                    }
                }
            }
            sum
        }
    }
}

fn direct_cross(a: Cloud<'_>, b: Cloud<'_>, k: &MollifierKernel, eps: f64) -> f64 {
    let mut sum = 0.0;
    match gaussian_params(k, eps) {
        Some((norm, inv2var, cut2)) => {
            for i in 0..a.len() {
                let xi = a.point(i);
                let mut row = 0.0;
                for j in 0..b.len() {
                    let r2 = dist2(xi, b.point(j));
                    if r2 < cut2 {
                        row += (-r2 * inv2var).exp();
                    }
                }
                sum += row;
            }
            sum * norm
        }
        None => {
            let support = k.support().map_or(f64::INFINITY, |s| s * eps);
            let cut2 = support * support;
            for i in 0..a.len() {
                let xi = a.point(i);
                for j in 0..b.len() {
                    let r2 = dist2(xi, b.point(j));
                    if r2 < cut2 {
                        sum += k.scaled_radial(eps, r2.sqrt());
                    }
                }
            }
            sum
        }
    }
}

/// (normalization, 1/(2·var_ε), squared cutoff) for Gaussian R_ε.
fn gaussian_params(k: &MollifierKernel, eps: f64) -> Option<(f64, f64, f64)> {
    let var = k.gaussian_cov_variance()? * eps * eps;
    let norm = (2.0 * std::f64::consts::PI * var).powf(-0.5 * k.dim() as f64);
    Some((norm, 0.5 / var, DIRECT_CUTOFF_SD * DIRECT_CUTOFF_SD * var))
}

#[inline]
fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lattice covering every cloud plus the splat radius.
struct Grid {
    d: usize,
    sd: f64,
    h: f64,
    half_width: usize,
    origin: [f64; 2],
    shape: [usize; 2],
}

impl Grid {
    fn new(d: usize, sd: f64, clouds: &[Cloud<'_>], max_cells: usize) -> Option<Self> {
        let h = 0.5 * sd;
        let half_width = (SPLAT_RADIUS_SD * sd / h).ceil() as usize;
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for c in clouds {
            for p in c.coords.chunks(d) {
                for a in 0..d {
                    lo[a] = lo[a].min(p[a]);
                    hi[a] = hi[a].max(p[a]);
                }
            }
        }
        if !lo[0].is_finite() {
            return None;
        }
        let mut origin = [0.0; 2];
        let mut shape = [1usize; 2];
        let pad = (half_width + 2) as f64 * h;
        for a in 0..d {
            origin[a] = lo[a] - pad;
            let span = (hi[a] - lo[a] + 2.0 * pad) / h;
            if !(span < 1e9) {
                return None;
            }
            shape[a] = span.ceil() as usize + 1;
        }
        let cells = shape[0].checked_mul(shape[1])?;
        if cells > max_cells {
            return None;
        }
        Some(Self {
            d,
            sd,
            h,
            half_width,
            origin,
            shape,
        })
    }

    fn cells(&self) -> usize {
        self.shape[0] * self.shape[1]
    }

    /// 1D weights ρ-marginal at lattice nodes near `x` along axis `a`.
    /// Returns the first node index; `w` receives 2·half_width + 2 values.
    fn weights(&self, a: usize, x: f64, w: &mut [f64]) -> usize {
        let norm = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * self.sd);
        let inv2v = 0.5 / (self.sd * self.sd);
        let centre = ((x - self.origin[a]) / self.h).floor() as usize;
        let first = centre - self.half_width;
        for (m, wm) in w.iter_mut().enumerate() {
            let y = self.origin[a] + (first + m) as f64 * self.h;
            let dx = y - x;
            *wm = norm * (-dx * dx * inv2v).exp();
        }
        first
    }

    /// Adds F_cloud onto `field`; returns Σ_i ∫ρ_ε(y − x_i)² on the lattice.
    fn splat(&self, cloud: Cloud<'_>, field: &mut [f64]) -> f64 {
        let width = 2 * self.half_width + 2;
        let mut wx = vec![0.0; width];
        let mut wy = vec![0.0; width];
        let mut diag = 0.0;
        let cell = self.h.powi(self.d as i32);
        for p in cloud.coords.chunks(self.d) {
            let fx = self.weights(0, p[0], &mut wx);
            let sx: f64 = wx.iter().map(|w| w * w).sum();
            if self.d == 1 {
                for (f, w) in field[fx..fx + width].iter_mut().zip(&wx) {
                    *f += w;
                }
                diag += sx * cell;
            } else {
                let fy = self.weights(1, p[1], &mut wy);
                let sy: f64 = wy.iter().map(|w| w * w).sum();
                let nx = self.shape[0];
                for (b, &wyb) in wy.iter().enumerate() {
                    let row = (fy + b) * nx + fx;
                    for (f, w) in field[row..row + width].iter_mut().zip(&wx) {
                        *f += wyb * w;
                    }
                }
                diag += sx * sy * cell;
            }
        }
        diag
    }

    fn integral(&self, a: &[f64], b: &[f64]) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        dot * self.h.powi(self.d as i32)
    }

    fn self_sum(&self, c: Cloud<'_>) -> f64 {
        let mut f = vec![0.0; self.cells()];
        let diag = self.splat(c, &mut f);
        0.5 * (self.integral(&f, &f) - diag)
    }

    fn cross_sum(&self, a: Cloud<'_>, b: Cloud<'_>) -> f64 {
        let mut fa = vec![0.0; self.cells()];
        let mut fb = vec![0.0; self.cells()];
        self.splat(a, &mut fa);
        self.splat(b, &mut fb);
        self.integral(&fa, &fb)
    }

    fn pair_sums(&self, a: Cloud<'_>, b: Cloud<'_>) -> (f64, f64, f64) {
        let mut fa = vec![0.0; self.cells()];
        let mut fb = vec![0.0; self.cells()];
        let da = self.splat(a, &mut fa);
        let db = self.splat(b, &mut fb);
        (
            0.5 * (self.integral(&fa, &fa) - da),
            0.5 * (self.integral(&fb, &fb) - db),
            self.integral(&fa, &fb),
        )
    }

    fn group_sum(&self, clouds: &[Cloud<'_>]) -> f64 {
        let mut f = vec![0.0; self.cells()];
        let diag: f64 = clouds.iter().map(|c| self.splat(*c, &mut f)).sum();
        0.5 * (self.integral(&f, &f) - diag)
    }
}
