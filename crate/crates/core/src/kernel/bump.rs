//! The compactly supported bump `φ(s) ∝ exp(−1/(1 − s²))` on the unit ball
//! and a tabulated radial profile of its self-convolution.
//!
//! A bump of radius `r` is the unit bump rescaled, so one table per
//! dimension serves every radius.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::quad::{self, GaussLegendre};

/// Table nodes on [0, 2] (the support of the unit self-convolution).
const TABLE_INTERVALS: usize = 1024;
const TABLE_SPACING: f64 = 2.0 / TABLE_INTERVALS as f64;

pub(crate) fn sphere_area(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => unreachable!("dimension checked by the kernel constructor"),
    }
}

fn raw_profile(s: f64) -> f64 {
    if s >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

/// Normalized unit-bump radial profile in dimension `d`.
#[derive(Debug)]
pub(crate) struct UnitBump {
    d: usize,
    inv_mass: f64,
    table: Vec<f64>,
}

impl UnitBump {
    pub(crate) fn get(d: usize) -> &'static UnitBump {
        static TABLES: [OnceLock<UnitBump>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
        TABLES[d - 1].get_or_init(|| UnitBump::build(d))
    }

    fn build(d: usize) -> Self {
        let mass = sphere_area(d)
            * quad::adaptive(|s| raw_profile(s) * s.powi(d as i32 - 1), 0.0, 1.0, 1e-14, 0.0)
                .expect("bump normalization converges");
        let mut bump = UnitBump {
            d,
            inv_mass: 1.0 / mass,
            table: Vec::new(),
        };
        bump.table = (0..=TABLE_INTERVALS)
            .map(|i| bump.self_convolution(i as f64 * TABLE_SPACING))
            .collect();
        bump
    }

    /// ρ at radius `s` for the unit bump.
    pub(crate) fn profile(&self, s: f64) -> f64 {
        raw_profile(s) * self.inv_mass
    }

    /// R = ρ⋆ρ at radius `z`, computed by quadrature.
    fn self_convolution(&self, z: f64) -> f64 {
        let rule = GaussLegendre::new(20);
        match self.d {
            1 => {
                let lo = (z - 1.0).max(-1.0);
                let hi = (z + 1.0).min(1.0);
                if hi <= lo {
                    return 0.0;
                }
                quad::composite(
                    &rule,
                    |y| self.profile(y.abs()) * self.profile((z - y).abs()),
                    lo,
                    hi,
                    24,
                )
            }
            2 => {
                // Angular integrand is smooth and periodic: trapezoid on the
                // half circle with mirrored endpoints.
                const M: usize = 256;
                let dtheta = PI / M as f64;
                let cosines: Vec<(f64, f64)> = (0..=M)
                    .map(|j| {
                        let w = if j == 0 || j == M { 0.5 } else { 1.0 };
                        ((j as f64 * dtheta).cos(), w)
                    })
                    .collect();
                quad::composite(
                    &rule,
                    |s| {
                        let ps = self.profile(s);
                        if ps == 0.0 {
                            return 0.0;
                        }
                        let ring: f64 = cosines
                            .iter()
                            .map(|&(c, w)| w * self.profile((s * s + z * z - 2.0 * s * z * c).max(0.0).sqrt()))
                            .sum();
                        ps * s * 2.0 * ring * dtheta
                    },
                    0.0,
                    1.0,
                    16,
                )
            }
            3 => {
                if z < 1e-12 {
                    return 4.0 * PI * quad::composite(&rule, |s| (self.profile(s) * s).powi(2), 0.0, 1.0, 16);
                }
                // The polar integral collapses onto Φ(w) = ∫_0^w φ(r) r dr.
                let cumulative = |w: f64| -> f64 {
                    let w = w.min(1.0);
                    if w <= 0.0 {
                        return 0.0;
                    }
                    quad::composite(&rule, |r| self.profile(r) * r, 0.0, w, 8)
                };
                2.0 * PI / z
                    * quad::composite(
                        &rule,
                        |s| {
                            let ps = self.profile(s);
                            if ps == 0.0 {
                                return 0.0;
                            }
                            ps * s * (cumulative(s + z) - cumulative((s - z).abs()))
                        },
                        0.0,
                        1.0,
                        16,
                    )
            }
            _ => unreachable!(),
        }
    }

    /// Interpolated R at radius `z` (four-point Lagrange, mirrored at 0).
    pub(crate) fn covariance(&self, z: f64) -> f64 {
        if z >= 2.0 {
            return 0.0;
        }
        let x = z / TABLE_SPACING;
        let i = (x.floor() as isize).min(TABLE_INTERVALS as isize - 1);
        let f = x - i as f64;
        let node = |k: isize| -> f64 {
            let k = k.unsigned_abs();
            self.table.get(k).copied().unwrap_or(0.0)
        };
        let (p0, p1, p2, p3) = (node(i - 1), node(i), node(i + 1), node(i + 2));
        // Lagrange basis on nodes -1, 0, 1, 2.
        let w0 = -f * (f - 1.0) * (f - 2.0) / 6.0;
        let w1 = (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0;
        let w2 = -(f + 1.0) * f * (f - 2.0) / 2.0;
        let w3 = (f + 1.0) * f * (f - 1.0) / 6.0;
        // R ≥ 0; the cubic can dip a hair below zero next to the support edge.
        (w0 * p0 + w1 * p1 + w2 * p2 + w3 * p3).max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_reproduces_nodes() {
        let b = UnitBump::get(1);
        for i in [0usize, 1, 17, 500, 1023] {
            let z = i as f64 * TABLE_SPACING;
            assert!((b.covariance(z) - b.table[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn interpolation_matches_direct_quadrature_off_grid() {
        for d in 1..=3 {
            let b = UnitBump::get(d);
            for z in [0.0123, 0.4567, 1.2345, 1.8765] {
                let direct = b.self_convolution(z);
                let interp = b.covariance(z);
                assert!(
                    (direct - interp).abs() < 1e-9 * b.table[0],
                    "d={d} z={z}: {direct} vs {interp}"
                );
            }
        }
    }
}
