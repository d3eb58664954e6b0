//! Lattice oracle: white noise on a periodic grid, mollified and fed to a
//! finite-difference solver for ∂_t u = ½Δu + (ξ_ε − C_ε)u in d = 1, 2.
//!
//! The lattice is x_i = −L + i·h, i = 0..side with side = 2L/h, wrapped
//! periodically. Values are row-major with the last axis fastest.

mod pamf;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{Family, MollifierKernel, RenormSpec};
use crate::moments::InitialCondition;
use crate::paths::{stream_rng, SeedSpec};
use crate::stats::{Estimate, Warning};

pub use pamf::{read_pamf, write_pamf, PAMF_MAGIC};

/// Mollification needs ε ≥ this many lattice spacings.
pub const MIN_EPS_OVER_H: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    pub d: usize,
    pub h: f64,
    /// Half-width L of the periodic box [−L, L)^d.
    pub extent: f64,
    pub values: Vec<f64>,
}

fn lattice_side(h: f64, extent: f64) -> Result<usize> {
    if !(h > 0.0 && h.is_finite()) || !(extent > 0.0 && extent.is_finite()) {
        return Err(Error::input("h and L must be positive"));
    }
    let r = extent / h;
    let n = r.round();
    if (r - n).abs() > 1e-9 * r.max(1.0) || n < 1.0 {
        return Err(Error::input(format!("L/h must be an integer, got {r}")));
    }
    Ok(2 * n as usize)
}

fn check_dim(d: usize) -> Result<()> {
    if d == 1 || d == 2 {
        Ok(())
    } else {
        Err(Error::input(format!("the lattice oracle supports d = 1, 2, got {d}")))
    }
}

impl GridField {
    pub fn zeros(d: usize, h: f64, extent: f64) -> Result<Self> {
        check_dim(d)?;
        let side = lattice_side(h, extent)?;
        Ok(Self {
            d,
            h,
            extent,
            values: vec![0.0; side.pow(d as u32)],
        })
    }

    /// Samples `f` at the lattice points.
    pub fn from_fn(d: usize, h: f64, extent: f64, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let mut g = Self::zeros(d, h, extent)?;
        let side = g.side();
        let mut x = vec![0.0; d];
        for (idx, v) in g.values.iter_mut().enumerate() {
            let mut rest = idx;
            for a in (0..d).rev() {
                x[a] = -extent + (rest % side) as f64 * h;
                rest /= side;
            }
            *v = f(&x);
        }
        Ok(g)
    }

    pub fn side(&self) -> usize {
        (2.0 * self.extent / self.h).round() as usize
    }

    /// Flat index of the lattice point at `x`, if `x` is one.
    pub fn index_of(&self, x: &[f64]) -> Option<usize> {
        if x.len() != self.d {
            return None;
        }
        let side = self.side();
        let mut idx = 0;
        for &c in x {
            let r = (c + self.extent) / self.h;
            let i = r.round();
            if (r - i).abs() > 1e-9 || i < 0.0 || i >= side as f64 {
                return None;
            }
            idx = idx * side + i as usize;
        }
        Some(idx)
    }

    pub fn value_at(&self, x: &[f64]) -> Option<f64> {
        self.index_of(x).map(|i| self.values[i])
    }

    /// Σ values · h^d.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.h.powi(self.d as i32)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// I.i.d. N(0, h^{−d}) entries, so that Σ f(x_i)ξ_i h^d has variance ≈ ∫f².
pub fn sample_noise_grid(d: usize, h: f64, extent: f64, seed: SeedSpec) -> Result<GridField> {
    let mut g = GridField::zeros(d, h, extent)?;
    let scale = h.powf(-(d as f64) / 2.0);
    let mut rng = stream_rng(seed);
    for v in g.values.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *v = scale * z;
    }
    Ok(g)
}

/// 1-D periodic convolution of every line along `axis` with a symmetric
/// stencil `w[0..=r]` (w[j] is the weight at offset ±j).
fn convolve_axis(values: &[f64], d: usize, side: usize, axis: usize, w: &[f64]) -> Vec<f64> {
    let stride = side.pow((d - 1 - axis) as u32);
    let n = side as isize;
    let mut out = vec![0.0; values.len()];
    let mut line = vec![0.0; side];
    for start in 0..values.len() {
        if !(start / stride).is_multiple_of(side) {
            continue;
        }
        for (i, l) in line.iter_mut().enumerate() {
            *l = values[start + i * stride];
        }
        for i in 0..n {
            let mut acc = w[0] * line[i as usize];
            for (j, &wj) in w.iter().enumerate().skip(1) {
                let j = j as isize;
                acc += wj * (line[(i + j).rem_euclid(n) as usize] + line[(i - j).rem_euclid(n) as usize]);
            }
            out[start + i as usize * stride] = acc;
        }
    }
    out
}

/// ξ_ε = ξ ⋆ ρ_ε with a sampled stencil normalized to Σ·h^d = 1. Warns
/// when ε < 3h.
pub fn mollify_grid(noise: &GridField, k: &MollifierKernel, eps: f64) -> Result<(GridField, Vec<Warning>)> {
    check_dim(noise.d)?;
    if k.dim() != noise.d {
        return Err(Error::input("kernel and grid dimensions disagree"));
    }
    if !(eps > 0.0) {
        return Err(Error::input("eps must be positive"));
    }
    let mut warnings = Vec::new();
    if eps < MIN_EPS_OVER_H * noise.h * (1.0 - 1e-12) {
        warnings.push(Warning::LatticeUnderResolved);
    }
    let (d, h, side) = (noise.d, noise.h, noise.side());
    let values = match k.family() {
        Family::Gaussian { sigma2 } => {
            // ρ_ε factorizes into 1-D Gaussians of variance σ²ε².
            let sd = (sigma2).sqrt() * eps;
            let r = ((8.0 * sd / h).ceil() as usize).max(1);
            let mut w: Vec<f64> = (0..=r)
                .map(|j| (-(j as f64 * h).powi(2) / (2.0 * sd * sd)).exp())
                .collect();
            let total = w[0] + 2.0 * w[1..].iter().sum::<f64>();
            for x in w.iter_mut() {
                *x /= total;
            }
            let mut v = noise.values.clone();
            for axis in 0..d {
                v = convolve_axis(&v, d, side, axis, &w);
            }
            v
        }
        Family::Bump { support_radius } => {
            let r = (support_radius * eps / h).ceil() as isize;
            let offsets: Vec<Vec<isize>> = if d == 1 {
                (-r..=r).map(|i| vec![i]).collect()
            } else {
                (-r..=r).flat_map(|i| (-r..=r).map(move |j| vec![i, j])).collect()
            };
            let mut stencil: Vec<(Vec<isize>, f64)> = offsets
                .into_iter()
                .map(|o| {
                    let x: Vec<f64> = o.iter().map(|&i| i as f64 * h).collect();
                    let scaled: Vec<f64> = x.iter().map(|c| c / eps).collect();
                    let w = k.mollifier(&scaled).unwrap_or(0.0);
                    (o, w)
                })
                .filter(|(_, w)| *w > 0.0)
                .collect();
            let total: f64 = stencil.iter().map(|(_, w)| w).sum();
            if total == 0.0 {
                return Err(Error::input("mollifier stencil is empty at this lattice spacing"));
            }
            for s in stencil.iter_mut() {
                s.1 /= total;
            }
            let n = side as isize;
            let mut out = vec![0.0; noise.values.len()];
            for (idx, o) in out.iter_mut().enumerate() {
                let (i0, j0) = if d == 1 {
                    (0, idx as isize)
                } else {
                    ((idx / side) as isize, (idx % side) as isize)
                };
                let mut acc = 0.0;
                for (off, w) in &stencil {
                    let src = if d == 1 {
                        (j0 + off[0]).rem_euclid(n) as usize
                    } else {
                        ((i0 + off[0]).rem_euclid(n) * n + (j0 + off[1]).rem_euclid(n)) as usize
                    };
                    acc += w * noise.values[src];
                }
                *o = acc;
            }
            out
        }
    };
    // The normalized weights are ρ̃·h^d with Σ ρ̃·h^d = 1.
    Ok((
        GridField {
            values,
            ..noise.clone()
        },
        warnings,
    ))
}

/// Largest stable explicit step for the diffusion part.
pub fn max_stable_dt(d: usize, h: f64) -> f64 {
    h * h / (2.0 * d as f64)
}

/// One explicit step u ← u + dt·½Δ_h u with the periodic (2d+1)-point
/// Laplacian.
pub fn diffusion_step(u: &GridField, dt: f64) -> GridField {
    let side = u.side();
    let c = 0.5 * dt / (u.h * u.h);
    let v = &u.values;
    let mut out = v.clone();
    match u.d {
        1 => {
            for i in 0..side {
                let l = v[(i + side - 1) % side];
                let r = v[(i + 1) % side];
                out[i] = v[i] + c * (l + r - 2.0 * v[i]);
            }
        }
        _ => {
            for i in 0..side {
                let up = ((i + side - 1) % side) * side;
                let dn = ((i + 1) % side) * side;
                let row = i * side;
                for j in 0..side {
                    let lt = row + (j + side - 1) % side;
                    let rt = row + (j + 1) % side;
                    let here = v[row + j];
                    out[row + j] = here + c * (v[up + j] + v[dn + j] + v[lt] + v[rt] - 4.0 * here);
                }
            }
        }
    }
    GridField {
        values: out,
        ..u.clone()
    }
}

/// u(t) for ∂_t u = ½Δu + (ξ_ε − C_ε)u, periodic. Each step is a half
/// step of exact potential exponentiation, an explicit diffusion step, and
/// another half potential step. The step actually used is t/⌈t/dt⌉.
pub fn solve_pde(xi_eps: &GridField, t: f64, dt: f64, c_eps: f64, u0: &InitialCondition) -> Result<GridField> {
    check_dim(xi_eps.d)?;
    if !(t >= 0.0 && t.is_finite()) || !(dt > 0.0) {
        return Err(Error::input("t must be nonnegative and dt positive"));
    }
    let limit = max_stable_dt(xi_eps.d, xi_eps.h);
    if dt > limit {
        return Err(Error::Refused(format!(
            "dt = {dt} violates the explicit stability bound; need dt ≤ h²/(2d) = {limit}"
        )));
    }
    u0.validate(xi_eps.d)?;
    let mut u = GridField::from_fn(xi_eps.d, xi_eps.h, xi_eps.extent, |x| u0.eval(x))?;
    if t == 0.0 {
        return Ok(u);
    }
    let steps = (t / dt).ceil() as usize;
    let dt = t / steps as f64;
    let half: Vec<f64> = xi_eps.values.iter().map(|&v| ((v - c_eps) * 0.5 * dt).exp()).collect();
    for _ in 0..steps {
        for (a, e) in u.values.iter_mut().zip(&half) {
            *a *= e;
        }
        u = diffusion_step(&u, dt);
        for (a, e) in u.values.iter_mut().zip(&half) {
            *a *= e;
        }
    }
    if u.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("PDE solution is not finite"));
    }
    Ok(u)
}

/// Lattice parameters for the noise Monte Carlo.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdeParams {
    pub h: f64,
    pub extent: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseMomentRequest {
    pub kernel: MollifierKernel,
    pub renorm: RenormSpec,
    /// Moment orders estimated from the same draws.
    pub orders: Vec<usize>,
    pub t: f64,
    pub x: Vec<f64>,
    pub eps: f64,
    pub u0: InitialCondition,
    pub n_draws: usize,
    pub pde: PdeParams,
    pub master_seed: u64,
}

/// E[u_ε(t, x)^n] over independent noise draws for each requested n. Draw
/// j uses noise stream j of the master seed.
pub fn noise_mc_moments(req: &NoiseMomentRequest) -> Result<Vec<Estimate>> {
    let d = req.kernel.dim();
    check_dim(d)?;
    if req.orders.is_empty() || req.orders.contains(&0) {
        return Err(Error::input("moment orders must be at least 1"));
    }
    if req.x.len() != d || req.renorm.d != d {
        return Err(Error::input("x, renorm and kernel dimensions disagree"));
    }
    if req.n_draws == 0 {
        return Err(Error::input("need at least one noise draw"));
    }
    let reach = req.x.iter().map(|c| c.abs()).fold(0.0, f64::max) + 4.0 * req.t.sqrt() + 4.0 * req.eps;
    if req.pde.extent < reach {
        return Err(Error::input(format!(
            "domain half-width {} is below |x| + 4√t + 4ε = {reach}",
            req.pde.extent
        )));
    }
    let probe = GridField::zeros(d, req.pde.h, req.pde.extent)?;
    let idx = probe
        .index_of(&req.x)
        .ok_or_else(|| Error::input("x must be a lattice point"))?;
    let c_eps = req.renorm.constant(req.eps)?;
    if req.u0.is_zero() {
        return Ok(req
            .orders
            .iter()
            .map(|_| Estimate::from_samples(&vec![0.0; req.n_draws], req.master_seed))
            .collect());
    }
    let values = (0..req.n_draws)
        .into_par_iter()
        .map(|j| {
            let noise = sample_noise_grid(d, req.pde.h, req.pde.extent, SeedSpec::new(req.master_seed, j as u64))?;
            let (xi, w) = mollify_grid(&noise, &req.kernel, req.eps)?;
            let u = solve_pde(&xi, req.t, req.pde.dt, c_eps, &req.u0)?;
            Ok((u.values[idx], !w.is_empty()))
        })
        .collect::<Result<Vec<_>>>()?;
    let lattice_warning = values.iter().any(|v| v.1);
    Ok(req
        .orders
        .iter()
        .map(|&n| {
            let s: Vec<f64> = values.iter().map(|v| v.0.powi(n as i32)).collect();
            let mut e = Estimate::from_samples(&s, req.master_seed);
            if lattice_warning && !e.warnings.contains(&Warning::LatticeUnderResolved) {
                e.warnings.push(Warning::LatticeUnderResolved);
                e.warnings.sort();
            }
            e
        })
        .collect())
}

/// Single-order convenience wrapper around [`noise_mc_moments`].
pub fn noise_mc_moment(req: &NoiseMomentRequest) -> Result<Estimate> {
    if req.orders.len() != 1 {
        return Err(Error::input("noise_mc_moment takes exactly one order"));
    }
    Ok(noise_mc_moments(req)?.remove(0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub z: f64,
    pub pass: bool,
}

/// z = (a − b)/√(s_a² + s_b²); PASS iff |z| ≤ 3.
pub fn cross_validate(a: &Estimate, b: &Estimate) -> Result<CrossValidation> {
    if ![a.mean, a.stderr, b.mean, b.stderr].iter().all(|v| v.is_finite()) {
        return Err(Error::numerical("cannot compare non-finite estimates"));
    }
    let se = (a.stderr * a.stderr + b.stderr * b.stderr).sqrt();
    let diff = a.mean - b.mean;
    let z = if se == 0.0 {
        if diff != 0.0 {
            return Err(Error::numerical(
                "degenerate comparison: zero standard error with unequal means",
            ));
        }
        0.0
    } else {
        diff / se
    };
    Ok(CrossValidation {
        z,
        pass: z.abs() <= 3.0,
    })
}
