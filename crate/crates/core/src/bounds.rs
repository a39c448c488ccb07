//! The quantitative constants of the length bound for geodesic flowers,
//! and certification of computed flowers against them.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::ModelManifold;
use crate::nets::{Flower, StationarityCertificate};

/// Relative tolerance of the bookkeeping identity.
pub const IDENTITY_TOL: f64 = 1e-12;

/// `(n+2)(n+1)(n/2)·vol^{1/n}`, for `n ≥ 2` and `vol > 0`.
pub fn main_length_bound(n: usize, vol: f64) -> f64 {
    let nf = n as f64;
    (nf + 2.0) * (nf + 1.0) * (nf / 2.0) * vol.powf(1.0 / nf)
}

/// `(n+2)(n+1)/2`.
pub fn edge_budget(n: usize) -> usize {
    (n + 2) * (n + 1) / 2
}

/// Number of edges of a `k`-cage, `binom(k+1, 2)`.
pub fn cage_edge_count(k: usize) -> usize {
    (k + 1) * k / 2
}

/// Right-hand side of the filling radius inequality, `(m/2)·vol^{1/m}`.
pub fn fillrad_rhs(m_dim: usize, vol: f64) -> f64 {
    let m = m_dim as f64;
    m / 2.0 * vol.powf(1.0 / m)
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Right-hand side of the filling volume inequality,
/// `m!·sqrt((m+1)!)·vol^{(m+1)/m}`.
pub fn fillvol_rhs(m_dim: usize, vol: f64) -> f64 {
    let m = m_dim as f64;
    factorial(m_dim) * factorial(m_dim + 1).sqrt() * vol.powf((m + 1.0) / m)
}

/// Slack bookkeeping: a per-edge budget `δ₁` such that `binom(n+2, 2)`
/// edges of length at most `L_E` fit in the total budget `L_δ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaBookkeeping {
    pub n: usize,
    pub delta: f64,
    pub delta1: f64,
}

impl DeltaBookkeeping {
    /// `L_E(vol) = 2δ₁ + n·vol^{1/n}`.
    pub fn l_e(&self, vol: f64) -> f64 {
        2.0 * self.delta1 + self.n as f64 * vol.powf(1.0 / self.n as f64)
    }

    /// `L_δ(vol)`: the main bound plus `δ`.
    pub fn l_delta(&self, vol: f64) -> f64 {
        main_length_bound(self.n, vol) + self.delta
    }

    /// Relative residual of `binom(n+2, 2)·L_E = L_δ`.
    pub fn identity_residual(&self, vol: f64) -> f64 {
        let lhs = cage_edge_count(self.n + 1) as f64 * self.l_e(vol);
        let rhs = self.l_delta(vol);
        (lhs - rhs).abs() / rhs.abs().max(f64::MIN_POSITIVE)
    }

    pub fn identity_holds(&self, vol: f64) -> bool {
        self.identity_residual(vol) <= IDENTITY_TOL
    }
}

/// `δ₁ = δ/((n+2)(n+1))` together with the derived budgets.
pub fn delta_bookkeeping(n: usize, delta: f64) -> DeltaBookkeeping {
    DeltaBookkeeping {
        n,
        delta,
        delta1: delta / ((n + 2) * (n + 1)) as f64,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub n: usize,
    pub vol: f64,
    pub edge_budget: usize,
    pub length_budget: f64,
    pub flower_length: f64,
    pub flower_edges: usize,
    pub satisfied: bool,
}

impl BoundReport {
    pub fn new(n: usize, vol: f64, flower_length: f64, flower_edges: usize) -> Self {
        let edge_budget = edge_budget(n);
        let length_budget = main_length_bound(n, vol);
        BoundReport {
            n,
            vol,
            edge_budget,
            length_budget,
            flower_length,
            flower_edges,
            satisfied: flower_length <= length_budget && flower_edges <= edge_budget,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bound reports serialize")
    }
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<16}{:>16}{:>16}", "quantity", "flower", "budget")?;
        writeln!(f, "{:<16}{:>16.6}{:>16.6}", "length", self.flower_length, self.length_budget)?;
        writeln!(f, "{:<16}{:>16}{:>16}", "edges", self.flower_edges, self.edge_budget)?;
        writeln!(f, "{:<16}{:>16}{:>16.6}", "n / vol", self.n, self.vol)?;
        write!(f, "{:<16}{:>16}", "satisfied", self.satisfied)
    }
}

/// Compares a stationary flower with the edge and length budgets of its
/// model. A certificate that is not stationary is refused.
pub fn certify(m: &ModelManifold, f: &Flower, cert: &StationarityCertificate) -> Result<BoundReport> {
    if !cert.is_stationary() {
        return Err(Error::NotCertified {
            defect_norm: cert.defect_norm,
            edge_residual: cert.max_edge_residual,
        });
    }
    Ok(BoundReport::new(m.dimension(), m.total_volume(), f.total_length(), f.edge_count()))
}
