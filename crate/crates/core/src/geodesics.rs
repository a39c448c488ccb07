//! Geodesic integration, the exponential map and two-point shooting.
//!
//! The geodesic equation `ẍ^k + Γ^k_ij ẋ^i ẋ^j = 0` is integrated with a
//! fixed-step sixth-order Runge-Kutta method. Between steps the state is handed over to the
//! preferred chart, so integrations may cross chart boundaries freely.
//! Step counts follow `max(16, ceil(length / h))` with `h = r_conv / 48`.

use crate::error::{Error, Result};
use crate::manifold::{ChartPoint, ModelManifold, TangentVec, Vec2};

const MIN_STEPS: usize = 16;
const MAX_NEWTON: usize = 100;
/// Endpoint error (chart norm) a converged shot must reach.
pub const ENDPOINT_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicPath {
    pub samples: Vec<ChartPoint>,
    pub initial_velocity: TangentVec,
    pub final_velocity: TangentVec,
    pub length: f64,
}

/// A shot geodesic between two points, without intermediate samples.
///
/// `start_velocity` is expressed in the chart of `start`, `end_velocity`
/// (the arrival velocity) in the chart of `end`. The geodesic is
/// parameterized on `[0, 1]`, so `length = |start_velocity|_g`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeodesicSegment {
    pub start: ChartPoint,
    pub end: ChartPoint,
    pub start_velocity: Vec2,
    pub end_velocity: Vec2,
    pub length: f64,
}

pub fn step_size(m: &ModelManifold) -> f64 {
    m.convexity_radius_hint() / 48.0
}

pub fn default_steps(m: &ModelManifold, length: f64) -> usize {
    let n = (length / step_size(m)).ceil();
    if n.is_finite() && n > MIN_STEPS as f64 {
        n as usize
    } else {
        MIN_STEPS
    }
}

fn accel(m: &ModelManifold, p: &ChartPoint, v: &Vec2) -> Result<Vec2> {
    let g = m.christoffel_at(p)?;
    let mut a = Vec2::zeros();
    for (k, gk) in g.iter().enumerate() {
        let mut s = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                s += gk[i][j] * v[i] * v[j];
            }
        }
        a[k] = -s;
    }
    Ok(a)
}

fn shifted(p: &ChartPoint, dx: Vec2) -> ChartPoint {
    ChartPoint {
        chart: p.chart,
        coords: p.coords + dx,
    }
}

// Butcher's seven-stage explicit method of order six (the equation is
// autonomous, so the nodes are not needed).
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 3.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.0, 2.0 / 3.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 12.0, 1.0 / 3.0, -1.0 / 12.0, 0.0, 0.0, 0.0],
    [-1.0 / 16.0, 9.0 / 8.0, -3.0 / 16.0, -3.0 / 8.0, 0.0, 0.0],
    [0.0, 9.0 / 8.0, -3.0 / 8.0, -3.0 / 4.0, 0.5, 0.0],
    [9.0 / 44.0, -9.0 / 11.0, 63.0 / 44.0, 18.0 / 11.0, 0.0, -16.0 / 11.0],
];
const B: [f64; 7] = [11.0 / 120.0, 0.0, 27.0 / 40.0, 27.0 / 40.0, -4.0 / 15.0, -4.0 / 15.0, 11.0 / 120.0];

fn rk_step(m: &ModelManifold, p: &ChartPoint, v: &Vec2, dt: f64) -> Result<(ChartPoint, Vec2)> {
    let mut kx = [Vec2::zeros(); 7];
    let mut kv = [Vec2::zeros(); 7];
    for s in 0..7 {
        let (mut dx, mut dv) = (Vec2::zeros(), Vec2::zeros());
        for j in 0..s {
            dx += A[s][j] * kx[j];
            dv += A[s][j] * kv[j];
        }
        kx[s] = v + dt * dv;
        kv[s] = accel(m, &shifted(p, dt * dx), &kx[s])?;
    }
    let (mut dx, mut dv) = (Vec2::zeros(), Vec2::zeros());
    for s in 0..7 {
        dx += B[s] * kx[s];
        dv += B[s] * kv[s];
    }
    m.canonical_state(&shifted(p, dt * dx), &(v + dt * dv))
}

/// Integrates from `(p, v)` for `time` in `steps` equal steps. Returns the
/// end state (canonical chart) and, if requested, every intermediate point.
fn integrate(
    m: &ModelManifold,
    p: &ChartPoint,
    v: &Vec2,
    time: f64,
    steps: usize,
    mut samples: Option<&mut Vec<ChartPoint>>,
) -> Result<(ChartPoint, Vec2)> {
    let dt = time / steps as f64;
    let (mut x, mut w) = m.canonical_state(p, v)?;
    if let Some(s) = samples.as_deref_mut() {
        s.push(x);
    }
    for step in 0..steps {
        let (nx, nw) = rk_step(m, &x, &w, dt).map_err(|_| Error::Integration { step })?;
        x = nx;
        w = nw;
        if let Some(s) = samples.as_deref_mut() {
            s.push(x);
        }
    }
    Ok((x, w))
}

/// Solves the geodesic equation from `v0` for the given time.
pub fn integrate_geodesic(m: &ModelManifold, v0: &TangentVec, time: f64, steps: usize) -> Result<GeodesicPath> {
    if steps < 8 {
        return Err(Error::InvalidArgument(format!("need at least 8 steps, got {steps}")));
    }
    if !(time > 0.0) {
        return Err(Error::InvalidArgument(format!("integration time must be positive, got {time}")));
    }
    let speed = m.norm(&v0.base, &v0.components)?;
    if speed == 0.0 {
        return Err(Error::InvalidArgument("initial velocity is zero".into()));
    }
    let mut samples = Vec::with_capacity(steps + 1);
    let (end, w) = integrate(m, &v0.base, &v0.components, time, steps, Some(&mut samples))?;
    Ok(GeodesicPath {
        samples,
        initial_velocity: *v0,
        final_velocity: TangentVec::new(end, w),
        length: speed * time,
    })
}

/// `exp_p(v)` together with the arrival velocity (both in the canonical chart).
pub fn exp_with_velocity(m: &ModelManifold, p: &ChartPoint, v: &Vec2) -> Result<(ChartPoint, Vec2)> {
    let len = m.norm(p, v)?;
    if len == 0.0 {
        return Ok((m.canonical(p)?, *v));
    }
    integrate(m, p, v, 1.0, default_steps(m, len), None)
}

pub fn exp_map(m: &ModelManifold, p: &ChartPoint, v: &Vec2) -> Result<ChartPoint> {
    exp_with_velocity(m, p, v).map(|(q, _)| q)
}

/// Endpoint residual of shooting from `p` with `v`, measured in the chart of `q`.
fn residual(m: &ModelManifold, p: &ChartPoint, v: &Vec2, q: &ChartPoint) -> Result<(Vec2, ChartPoint, Vec2)> {
    let (e, w) = exp_with_velocity(m, p, v)?;
    let r = m.coord_delta(q, &e)?;
    Ok((r, e, w))
}

/// Shoots a geodesic from `p` to `q` by Newton iteration on the initial
/// velocity. Without a hint, Newton starts from the chart straight line
/// (periodic coordinates unwrapped to the nearest copy); with a hint it starts
/// from the hint and keeps whatever solution that continuation reaches. A
/// hint whose endpoint misses `q` by more than half the gap is discarded.
pub fn shoot(m: &ModelManifold, p: &ChartPoint, q: &ChartPoint, hint: Option<Vec2>) -> Result<GeodesicSegment> {
    let delta = m.coord_delta(p, q)?;
    let scale = delta.norm();
    let q_chart = m.to_chart(q, q.chart)?;
    if scale <= 1e-15 * (1.0 + p.coords.norm()) {
        return Ok(GeodesicSegment {
            start: *p,
            end: q_chart,
            start_velocity: Vec2::zeros(),
            end_velocity: Vec2::zeros(),
            length: 0.0,
        });
    }
    let tol = (1e-12 * scale).max(4e-16 * (1.0 + q_chart.coords.norm()));
    let hinted = match hint {
        Some(h) if h.iter().all(|x| x.is_finite()) && h.norm() > 0.0 => residual(m, p, &h, &q_chart)
            .ok()
            .filter(|(r, _, _)| r.norm() <= 0.5 * scale)
            .map(|state| (h, state)),
        _ => None,
    };
    // a hint that misses by more than half the gap is worse than the chart line
    let (mut v, (mut r, mut e, mut w)) = match hinted {
        Some(found) => found,
        None => {
            let g = m.guess_velocity(p, q)?;
            (g, residual(m, p, &g, &q_chart)?)
        }
    };
    let mut best = r.norm();
    let mut stalls = 0;
    let mut iterations = 0;
    while best > tol && iterations < MAX_NEWTON {
        iterations += 1;
        let h = (1e-7 * v.amax().max(scale)).max(1e-10);
        let mut jac = nalgebra::Matrix2::<f64>::zeros();
        for j in 0..2 {
            let mut dv = Vec2::zeros();
            dv[j] = h;
            let (rp, _, _) = residual(m, p, &(v + dv), &q_chart)?;
            let (rm, _, _) = residual(m, p, &(v - dv), &q_chart)?;
            jac.set_column(j, &((rp - rm) / (2.0 * h)));
        }
        let Some(step) = jac.lu().solve(&(-r)) else {
            break;
        };
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..12 {
            let cand = v + lambda * step;
            if let Ok((rc, ec, wc)) = residual(m, p, &cand, &q_chart) {
                if rc.norm() < best {
                    v = cand;
                    r = rc;
                    e = ec;
                    w = wc;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
        let now = r.norm();
        if now > 0.5 * best {
            stalls += 1;
            if stalls >= 3 {
                best = now;
                break;
            }
        }
        best = now;
    }
    if best > ENDPOINT_TOL.min(1e-3 * scale.max(1e-5)) {
        return Err(Error::NoConvergence {
            iterations,
            residual: best,
        });
    }
    let (_, end_velocity) = m.push_forward(&e, &w, q_chart.chart)?;
    Ok(GeodesicSegment {
        start: *p,
        end: q_chart,
        start_velocity: v,
        end_velocity,
        length: m.norm(p, &v)?,
    })
}

/// Minimizing geodesic between nearby points, sampled at every integration step.
pub fn minimizing_geodesic(
    m: &ModelManifold,
    p: &ChartPoint,
    q: &ChartPoint,
    hint: Option<&TangentVec>,
) -> Result<GeodesicPath> {
    let hint = match hint {
        Some(h) => Some(m.push_forward(&h.base, &h.components, p.chart)?.1),
        None => None,
    };
    let seg = shoot(m, p, q, hint)?;
    if seg.length == 0.0 {
        return Ok(GeodesicPath {
            samples: vec![*p, seg.end],
            initial_velocity: TangentVec::new(*p, Vec2::zeros()),
            final_velocity: TangentVec::new(seg.end, Vec2::zeros()),
            length: 0.0,
        });
    }
    let steps = default_steps(m, seg.length);
    let mut samples = Vec::with_capacity(steps + 1);
    integrate(m, p, &seg.start_velocity, 1.0, steps, Some(&mut samples))?;
    if let Some(last) = samples.last_mut() {
        *last = seg.end;
    }
    Ok(GeodesicPath {
        samples,
        initial_velocity: TangentVec::new(*p, seg.start_velocity),
        final_velocity: TangentVec::new(seg.end, seg.end_velocity),
        length: seg.length,
    })
}

pub fn distance(m: &ModelManifold, p: &ChartPoint, q: &ChartPoint) -> Result<f64> {
    shoot(m, p, q, None).map(|s| s.length)
}

/// Unit tangent at one end of the path, pointing from that end into the path.
pub fn endpoint_unit_tangent(m: &ModelManifold, path: &GeodesicPath, at_start: bool) -> Result<TangentVec> {
    if !(path.length > 0.0) {
        return Err(Error::Degenerate("zero-length geodesic has no tangent".into()));
    }
    let (base, v, sign) = if at_start {
        (path.initial_velocity.base, path.initial_velocity.components, 1.0)
    } else {
        (path.final_velocity.base, path.final_velocity.components, -1.0)
    };
    let n = m.norm(&base, &v)?;
    if n == 0.0 {
        return Err(Error::Degenerate("zero velocity".into()));
    }
    Ok(TangentVec::new(base, sign * v / n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{ModelKind, WarpKind};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn torus() -> ModelManifold {
        ModelManifold::new(ModelKind::FlatTorus { sides: [1.0, 1.0] }).unwrap()
    }
    fn sphere() -> ModelManifold {
        ModelManifold::new(ModelKind::RoundSphere { radius: 1.0 }).unwrap()
    }

    #[test]
    fn torus_unit_flight_wraps_to_origin() {
        let m = torus();
        let v0 = TangentVec::new(ChartPoint::new(0, 0.0, 0.0), Vec2::new(1.0, 0.0));
        let path = integrate_geodesic(&m, &v0, 1.0, 64).unwrap();
        let end = path.samples.last().unwrap();
        assert!(m.coord_delta(&ChartPoint::new(0, 0.0, 0.0), end).unwrap().norm() < 1e-12);
        assert!((path.length - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sphere_half_great_circle_reaches_antipode() {
        let m = sphere();
        let p = ChartPoint::new(0, FRAC_PI_2, 0.0);
        let v0 = TangentVec::new(p, Vec2::new(0.0, 1.0));
        let path = integrate_geodesic(&m, &v0, PI, default_steps(&m, PI)).unwrap();
        let end = m.embed(path.samples.last().unwrap()).unwrap();
        assert!((end - nalgebra::Vector3::new(-1.0, 0.0, 0.0)).norm() < 1e-6);
        assert!((path.length - PI).abs() < 1e-12);
    }

    #[test]
    fn integrator_is_sixth_order() {
        let m = sphere();
        let p = ChartPoint::new(0, 1.0, 0.3);
        let v = Vec2::new(0.6, -0.9);
        let x = m.embed(&p).unwrap();
        // the same velocity pushed into R³, then the exact great circle
        let (th, ph) = (p.coords[0], p.coords[1]);
        let d_th = nalgebra::Vector3::new(th.cos() * ph.cos(), th.cos() * ph.sin(), -th.sin());
        let d_ph = nalgebra::Vector3::new(-th.sin() * ph.sin(), th.sin() * ph.cos(), 0.0);
        let u = d_th * v[0] + d_ph * v[1];
        let speed = u.norm();
        let t = 1.3;
        let exact = x * (speed * t).cos() + u / speed * (speed * t).sin();
        let err = |steps| {
            let path = integrate_geodesic(&m, &TangentVec::new(p, v), t, steps).unwrap();
            (m.embed(path.samples.last().unwrap()).unwrap() - exact).norm()
        };
        let (coarse, fine) = (err(10), err(20));
        assert!(coarse / fine > 40.0, "observed ratio {}", coarse / fine);
    }

    #[test]
    fn cusp_meridians_are_geodesics() {
        let m = ModelManifold::new(ModelKind::CuspSurface { warp: WarpKind::CappedExp, rate: 1.0 }).unwrap();
        let v0 = TangentVec::new(ChartPoint::new(0, 0.0, 1.0), Vec2::new(1.0, 0.0));
        let path = integrate_geodesic(&m, &v0, 3.0, 64).unwrap();
        for (i, s) in path.samples.iter().enumerate() {
            assert!((s.coords[1] - 1.0).abs() < 1e-14);
            assert!((s.coords[0] - 3.0 * i as f64 / 64.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let m = torus();
        let v0 = TangentVec::new(ChartPoint::new(0, 0.0, 0.0), Vec2::zeros());
        assert!(integrate_geodesic(&m, &v0, 1.0, 16).is_err());
        let v1 = TangentVec::new(ChartPoint::new(0, 0.0, 0.0), Vec2::new(1.0, 0.0));
        assert!(integrate_geodesic(&m, &v1, 1.0, 4).is_err());
    }

    #[test]
    fn torus_shooting_examples() {
        let m = torus();
        let g = minimizing_geodesic(&m, &ChartPoint::new(0, 0.1, 0.1), &ChartPoint::new(0, 0.3, 0.1), None).unwrap();
        assert!((g.length - 0.2).abs() < 1e-12);
        let g = minimizing_geodesic(&m, &ChartPoint::new(0, 0.05, 0.0), &ChartPoint::new(0, 0.95, 0.0), None).unwrap();
        assert!((g.length - 0.1).abs() < 1e-12);
        assert!(g.initial_velocity.components[0] < 0.0);
    }

    #[test]
    fn hint_selects_the_continued_solution() {
        let m = torus();
        let p = ChartPoint::new(0, 0.05, 0.0);
        let q = ChartPoint::new(0, 0.95, 0.0);
        let hint = TangentVec::new(p, Vec2::new(0.9, 0.0));
        let g = minimizing_geodesic(&m, &p, &q, Some(&hint)).unwrap();
        assert!((g.length - 0.9).abs() < 1e-12);
    }

    #[test]
    fn sphere_distance_matches_arccos() {
        let m = sphere();
        let p = ChartPoint::new(0, 1.2, 0.3);
        let q = ChartPoint::new(0, 1.6, 0.8);
        let d = distance(&m, &p, &q).unwrap();
        let (a, b) = (m.embed(&p).unwrap(), m.embed(&q).unwrap());
        assert!((d - a.dot(&b).clamp(-1.0, 1.0).acos()).abs() < 1e-6);
    }

    #[test]
    fn endpoint_tangents() {
        let m = torus();
        let g = minimizing_geodesic(&m, &ChartPoint::new(0, 0.0, 0.0), &ChartPoint::new(0, 0.3, 0.0), None).unwrap();
        let s = endpoint_unit_tangent(&m, &g, true).unwrap();
        let e = endpoint_unit_tangent(&m, &g, false).unwrap();
        assert!((s.components - Vec2::new(1.0, 0.0)).norm() < 1e-12);
        assert!((e.components - Vec2::new(-1.0, 0.0)).norm() < 1e-12);

        let zero = minimizing_geodesic(&m, &ChartPoint::new(0, 0.2, 0.2), &ChartPoint::new(0, 0.2, 0.2), None).unwrap();
        assert!(matches!(endpoint_unit_tangent(&m, &zero, true), Err(Error::Degenerate(_))));
    }

    #[test]
    fn sphere_tangent_is_orthogonal_to_position() {
        let m = sphere();
        let p = ChartPoint::new(0, 1.0, 0.2);
        let q = ChartPoint::new(0, 1.5, 0.9);
        let g = minimizing_geodesic(&m, &p, &q, None).unwrap();
        for at_start in [true, false] {
            let t = endpoint_unit_tangent(&m, &g, at_start).unwrap();
            let base = m.embed(&t.base).unwrap();
            // push the chart vector to R³ by differencing the embedding
            let h = 1e-7;
            let ahead = m.embed(&ChartPoint { chart: t.base.chart, coords: t.base.coords + h * t.components }).unwrap();
            let tangent = (ahead - base) / h;
            assert!(tangent.dot(&base).abs() < 1e-5);
            assert!((tangent.norm() - 1.0).abs() < 1e-5);
        }
    }
}
