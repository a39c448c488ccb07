//! Warp profiles `w(t)` for surfaces of revolution `dt² + w(t)² dθ²`.
//!
//! Both profiles are exactly `e^{-a|t|}` on their ends and are glued to the
//! core by a polynomial that matches value and the first three derivatives,
//! so the metric is C³ and the Christoffel symbols are C².
//!
//! - `CappedExp`: a flat disk around a pole at `t = POLE`, a polynomial bulb on
//!   `[POLE + FLAT_CAP, 0]` and one cusp `w = e^{-at}` for `t ≥ 0`.
//! - `DoubleExp`: an even polynomial on `[-1, 1]` and two cusps
//!   `w = e^{-a|t|}` for `|t| ≥ 1`.
//!
//! On every end piece `w' < 0` in the outward direction, so level circles
//! shrink outward and the end beyond the threshold is locally convex.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Radial threshold `|t| ≥ 1` beyond which a point lies in an end.
pub const END_THRESHOLD: f64 = 1.0;
/// Location of the pole of the capped profile.
pub const POLE: f64 = -2.0;
/// Width of the flat disk around the pole: `w(t) = t - POLE` there.
pub const FLAT_CAP: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WarpKind {
    CappedExp,
    DoubleExp,
}

#[derive(Clone, Debug, PartialEq)]
enum Piece {
    /// `w = t - POLE`.
    Linear { lo: f64, hi: f64 },
    /// `w = Σ c_k t^k`.
    Poly { lo: f64, hi: f64, coeffs: Vec<f64> },
    /// `w = e^{-rate·sign·t}`.
    Exp { lo: f64, hi: f64, sign: f64 },
}

impl Piece {
    fn bounds(&self) -> (f64, f64) {
        match *self {
            Piece::Linear { lo, hi } | Piece::Exp { lo, hi, .. } => (lo, hi),
            Piece::Poly { lo, hi, .. } => (lo, hi),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WarpProfile {
    kind: WarpKind,
    rate: f64,
    pieces: Vec<Piece>,
}

fn horner(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ck| acc * t + ck)
}

fn derivative(c: &[f64]) -> Vec<f64> {
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(k, &ck)| k as f64 * ck)
        .collect()
}

fn antiderivative(c: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0];
    out.extend(c.iter().enumerate().map(|(k, &ck)| ck / (k + 1) as f64));
    out
}

fn poly_pow(c: &[f64], p: u32) -> Vec<f64> {
    let mut out = vec![1.0];
    for _ in 0..p {
        let mut next = vec![0.0; out.len() + c.len() - 1];
        for (i, a) in out.iter().enumerate() {
            for (j, b) in c.iter().enumerate() {
                next[i + j] += a * b;
            }
        }
        out = next;
    }
    out
}

fn falling(k: usize, d: usize) -> f64 {
    (0..d).map(|i| (k - i) as f64).product()
}

/// Polynomial of degree 7 matching value and three derivatives at both ends.
fn hermite7(t0: f64, left: [f64; 4], t1: f64, right: [f64; 4]) -> Result<Vec<f64>> {
    let mut a = DMatrix::<f64>::zeros(8, 8);
    let mut b = DVector::<f64>::zeros(8);
    for (row0, (t, vals)) in [(t0, left), (t1, right)].into_iter().enumerate() {
        for d in 0..4 {
            let row = row0 * 4 + d;
            for k in d..8 {
                a[(row, k)] = falling(k, d) * t.powi((k - d) as i32);
            }
            b[row] = vals[d];
        }
    }
    a.lu()
        .solve(&b)
        .map(|x| x.iter().copied().collect())
        .ok_or_else(|| Error::InvalidArgument("singular Hermite system".into()))
}

/// Even polynomial `c0 + c2 t² + c4 t⁴ + c6 t⁶` matching three derivatives at `t1`.
fn even_hermite(t1: f64, right: [f64; 4]) -> Result<Vec<f64>> {
    let powers = [0usize, 2, 4, 6];
    let mut a = DMatrix::<f64>::zeros(4, 4);
    let mut b = DVector::<f64>::zeros(4);
    for d in 0..4 {
        for (col, &k) in powers.iter().enumerate() {
            if k >= d {
                a[(d, col)] = falling(k, d) * t1.powi((k - d) as i32);
            }
        }
        b[d] = right[d];
    }
    let x = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::InvalidArgument("singular Hermite system".into()))?;
    let mut coeffs = vec![0.0; 7];
    for (col, &k) in powers.iter().enumerate() {
        coeffs[k] = x[col];
    }
    Ok(coeffs)
}

impl WarpProfile {
    pub fn new(kind: WarpKind, rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "warp rate must be positive, got {rate}"
            )));
        }
        let a = rate;
        let pieces = match kind {
            WarpKind::CappedExp => {
                let lo = POLE + FLAT_CAP;
                let coeffs = hermite7(lo, [FLAT_CAP, 1.0, 0.0, 0.0], 0.0, [1.0, -a, a * a, -a * a * a])?;
                vec![
                    Piece::Linear { lo: POLE, hi: lo },
                    Piece::Poly { lo, hi: 0.0, coeffs },
                    Piece::Exp { lo: 0.0, hi: f64::INFINITY, sign: 1.0 },
                ]
            }
            WarpKind::DoubleExp => {
                let t1 = END_THRESHOLD;
                let e = (-a * t1).exp();
                let coeffs = even_hermite(t1, [e, -a * e, a * a * e, -a * a * a * e])?;
                vec![
                    Piece::Exp { lo: f64::NEG_INFINITY, hi: -t1, sign: -1.0 },
                    Piece::Poly { lo: -t1, hi: t1, coeffs },
                    Piece::Exp { lo: t1, hi: f64::INFINITY, sign: 1.0 },
                ]
            }
        };
        let profile = WarpProfile { kind, rate, pieces };
        profile.check_shape()?;
        Ok(profile)
    }

    /// The glued core must stay positive with a single maximum (the neck).
    fn check_shape(&self) -> Result<()> {
        for piece in &self.pieces {
            if let Piece::Poly { lo, hi, coeffs } = piece {
                let dc = derivative(coeffs);
                let n = 2000;
                let mut sign_changes = 0;
                let mut prev = None;
                for i in 0..=n {
                    let t = lo + (hi - lo) * i as f64 / n as f64;
                    if horner(coeffs, t) <= 0.0 {
                        return Err(Error::InvalidArgument(format!(
                            "warp rate {} gives a non-positive profile",
                            self.rate
                        )));
                    }
                    let s = horner(&dc, t).signum();
                    if let Some(p) = prev {
                        if p != s && s != 0.0 {
                            sign_changes += 1;
                        }
                    }
                    if s != 0.0 {
                        prev = Some(s);
                    }
                }
                if sign_changes > 1 {
                    return Err(Error::InvalidArgument(format!(
                        "warp rate {} gives a profile with several necks",
                        self.rate
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> WarpKind {
        self.kind
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Smallest admissible `t` (the pole for capped profiles).
    pub fn domain_min(&self) -> f64 {
        match self.kind {
            WarpKind::CappedExp => POLE,
            WarpKind::DoubleExp => f64::NEG_INFINITY,
        }
    }

    fn piece(&self, t: f64) -> &Piece {
        self.pieces
            .iter()
            .find(|p| {
                let (lo, hi) = p.bounds();
                t >= lo && t <= hi
            })
            .unwrap_or_else(|| {
                if t < self.pieces[0].bounds().0 {
                    &self.pieces[0]
                } else {
                    &self.pieces[self.pieces.len() - 1]
                }
            })
    }

    pub fn w(&self, t: f64) -> f64 {
        match self.piece(t) {
            Piece::Linear { .. } => t - POLE,
            Piece::Poly { coeffs, .. } => horner(coeffs, t),
            Piece::Exp { sign, .. } => (-self.rate * sign * t).exp(),
        }
    }

    pub fn dw(&self, t: f64) -> f64 {
        match self.piece(t) {
            Piece::Linear { .. } => 1.0,
            Piece::Poly { coeffs, .. } => horner(&derivative(coeffs), t),
            Piece::Exp { sign, .. } => -self.rate * sign * (-self.rate * sign * t).exp(),
        }
    }

    /// `∫_a^b w(t)^p dt`, evaluated piecewise in closed form. Infinite limits
    /// are allowed on the exponential ends.
    pub fn integral_pow(&self, p: u32, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let mut total = 0.0;
        for piece in &self.pieces {
            let (lo, hi) = piece.bounds();
            let x0 = a.max(lo);
            let x1 = b.min(hi);
            if x1 <= x0 {
                continue;
            }
            total += match piece {
                Piece::Linear { .. } => {
                    let k = p as i32 + 1;
                    ((x1 - POLE).powi(k) - (x0 - POLE).powi(k)) / k as f64
                }
                Piece::Poly { coeffs, .. } => {
                    let anti = antiderivative(&poly_pow(coeffs, p));
                    horner(&anti, x1) - horner(&anti, x0)
                }
                Piece::Exp { sign, .. } => {
                    let k = -(p as f64) * self.rate * sign;
                    let f = |x: f64| if x.is_infinite() { 0.0 } else { (k * x).exp() / k };
                    f(x1) - f(x0)
                }
            };
        }
        total
    }

    /// Location of the maximum of `w`; the level circle there is a closed geodesic.
    pub fn neck(&self) -> f64 {
        match self.kind {
            WarpKind::DoubleExp => 0.0,
            WarpKind::CappedExp => {
                let (mut lo, mut hi) = (POLE + FLAT_CAP, 0.0);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.dw(mid) > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c3_match(p: &WarpProfile, t: f64) {
        let h = 1e-6;
        let (l, r) = (t - 1e-12, t + 1e-12);
        assert!((p.w(l) - p.w(r)).abs() < 1e-9);
        assert!((p.dw(l) - p.dw(r)).abs() < 1e-8);
        // second derivative via differences on each side
        let d2 = |x: f64, s: f64| (p.dw(x + s * h) - p.dw(x)) / (s * h);
        assert!((d2(t, -1.0) - d2(t, 1.0)).abs() < 1e-4);
    }

    #[test]
    fn capped_profile_is_glued_smoothly() {
        let p = WarpProfile::new(WarpKind::CappedExp, 1.0).unwrap();
        c3_match(&p, POLE + FLAT_CAP);
        c3_match(&p, 0.0);
        assert_eq!(p.w(2.0), (-2.0f64).exp());
        assert!((p.w(POLE + 0.25) - 0.25).abs() < 1e-15);
        let neck = p.neck();
        assert!(p.dw(neck).abs() < 1e-10);
        assert!(p.w(neck) > 1.0);
    }

    #[test]
    fn double_profile_is_even() {
        let p = WarpProfile::new(WarpKind::DoubleExp, 1.0).unwrap();
        c3_match(&p, 1.0);
        c3_match(&p, -1.0);
        for t in [0.1, 0.5, 0.9, 1.5, 3.0] {
            assert!((p.w(t) - p.w(-t)).abs() < 1e-14);
            assert!(p.dw(t) < 0.0);
        }
    }

    #[test]
    fn closed_form_integrals_match_quadrature() {
        for kind in [WarpKind::CappedExp, WarpKind::DoubleExp] {
            let p = WarpProfile::new(kind, 1.3).unwrap();
            let lo = p.domain_min().max(-40.0);
            for pow in [1, 2] {
                let exact = p.integral_pow(pow, lo, 40.0);
                let quad = crate::quadrature::gauss_legendre(|t| p.w(t).powi(pow as i32), lo, 40.0, 8000);
                assert!((exact - quad).abs() < 1e-10 * exact, "{kind:?} p={pow}");
            }
        }
    }

    #[test]
    fn rejects_nonpositive_rate() {
        assert!(WarpProfile::new(WarpKind::CappedExp, 0.0).is_err());
        assert!(WarpProfile::new(WarpKind::DoubleExp, -1.0).is_err());
    }
}
