//! Co-area slicing of the model ends.
//!
//! Each end of a warped model is parameterized by the exact radial
//! coordinate `r = direction · t`, which has unit gradient, so the level
//! sets `{r = const}` are round circles (or 2-spheres) of volume
//! `level_factor(w(t))` and the co-area formula holds with equality.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::ModelManifold;
use crate::quadrature::gauss_legendre;

/// Radial resolution of [`find_small_slice`].
pub const SLICE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelComponent {
    pub end_id: u32,
    pub volume: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndSlice {
    pub r: f64,
    pub components: Vec<LevelComponent>,
    pub total_volume: f64,
}

fn require_ends(m: &ModelManifold) -> Result<()> {
    if m.ends().is_empty() {
        return Err(Error::Precondition(format!("{} has no ends to slice", m.kind().name())));
    }
    Ok(())
}

/// Volumes of the level sets at radial parameter `r` in every end.
pub fn level_volume(m: &ModelManifold, r: f64) -> Result<EndSlice> {
    require_ends(m)?;
    let warp = m.warp().expect("models with ends are warped");
    let mut components = Vec::with_capacity(m.ends().len());
    for end in m.ends() {
        if !(r >= end.threshold) {
            return Err(Error::Domain {
                chart: 0,
                coords: [end.direction * r, 0.0],
            });
        }
        components.push(LevelComponent {
            end_id: end.end_id,
            volume: m.level_factor(warp.w(end.direction * r)),
        });
    }
    Ok(EndSlice {
        r,
        total_volume: components.iter().map(|c| c.volume).sum(),
        components,
    })
}

/// Smallest radius beyond the core threshold (to [`SLICE_TOL`]) whose level
/// sets have total volume at most `eps`. The returned slice always satisfies
/// the bound.
pub fn find_small_slice(m: &ModelManifold, eps: f64) -> Result<EndSlice> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    require_ends(m)?;
    let lo0 = m.ends().iter().map(|e| e.threshold).fold(f64::NEG_INFINITY, f64::max);
    let at_threshold = level_volume(m, lo0)?;
    if at_threshold.total_volume <= eps {
        return Ok(at_threshold);
    }
    let total = |r: f64| level_volume(m, r).map(|s| s.total_volume);
    let (mut lo, mut hi, mut step) = (lo0, lo0 + 1.0, 1.0);
    while total(hi)? > eps {
        lo = hi;
        step *= 2.0;
        hi += step;
        if !hi.is_finite() {
            return Err(Error::Degenerate("level volume does not decay".into()));
        }
    }
    while hi - lo > SLICE_TOL {
        let mid = 0.5 * (lo + hi);
        if total(mid)? <= eps {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    level_volume(m, hi)
}

/// Analytic volume of the part of every end with radial parameter beyond `r`.
pub fn end_volume_beyond(m: &ModelManifold, r: f64) -> Result<f64> {
    require_ends(m)?;
    Ok(m.ends().iter().map(|e| swept_volume(m, e.direction, r, f64::INFINITY)).sum())
}

fn swept_volume(m: &ModelManifold, direction: f64, r0: f64, r1: f64) -> f64 {
    let warp = m.warp().expect("models with ends are warped");
    let (a, b) = if direction > 0.0 { (r0, r1) } else { (-r1, -r0) };
    if m.dimension() == 3 {
        4.0 * std::f64::consts::PI * warp.integral_pow(2, a, b)
    } else {
        std::f64::consts::TAU * warp.integral_pow(1, a, b)
    }
}

/// `∫_a^b level(r) dr` by composite Gauss-Legendre.
pub fn coarea_lhs<F: Fn(f64) -> f64>(level: F, a: f64, b: f64, quad_steps: usize) -> f64 {
    gauss_legendre(level, a, b, quad_steps)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoareaCheck {
    /// Integral of the level volumes over `r ∈ [0, r_max]`, by quadrature.
    pub lhs: f64,
    /// `(1 + slack)` times the analytic volume of the swept region.
    pub rhs: f64,
    pub slack: f64,
}

impl CoareaCheck {
    pub fn holds(&self, tol: f64) -> bool {
        self.lhs <= self.rhs + tol
    }
}

/// Compares the integrated level volumes over `0 ≤ r ≤ r_max` in every end
/// with the analytic volume of that region. Models without ends return 0/0.
pub fn coarea_check(m: &ModelManifold, r_max: f64, quad_steps: usize) -> Result<CoareaCheck> {
    coarea_check_with_slack(m, r_max, quad_steps, 0.0)
}

pub fn coarea_check_with_slack(m: &ModelManifold, r_max: f64, quad_steps: usize, slack: f64) -> Result<CoareaCheck> {
    if quad_steps < 100 {
        return Err(Error::InvalidArgument(format!("quad_steps must be at least 100, got {quad_steps}")));
    }
    if !(r_max >= 0.0) || !(slack >= 0.0) {
        return Err(Error::InvalidArgument("r_max and slack must be nonnegative".into()));
    }
    let Some(warp) = m.warp() else {
        return Ok(CoareaCheck {
            lhs: 0.0,
            rhs: 0.0,
            slack,
        });
    };
    let mut lhs = 0.0;
    let mut swept = 0.0;
    for end in m.ends() {
        let d = end.direction;
        lhs += coarea_lhs(|r| m.level_factor(warp.w(d * r)), 0.0, r_max, quad_steps);
        swept += swept_volume(m, d, 0.0, r_max);
    }
    Ok(CoareaCheck {
        lhs,
        rhs: (1.0 + slack) * swept,
        slack,
    })
}
