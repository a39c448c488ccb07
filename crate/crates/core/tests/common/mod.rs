//! Test-side oracles, written independently of the library's geometry code.
#![allow(dead_code)]

use flowerbed::nets::DEGENERATE_LENGTH;
use flowerbed::{ChartPoint, Flower, ModelKind, ModelManifold, PolyCurve, Vec2};
use rand::Rng;
use std::f64::consts::{FRAC_PI_2, TAU};

pub fn sphere(radius: f64) -> ModelManifold {
    ModelManifold::new(ModelKind::RoundSphere { radius }).unwrap()
}

pub fn torus(a: f64, b: f64) -> ModelManifold {
    ModelManifold::new(ModelKind::FlatTorus { sides: [a, b] }).unwrap()
}

pub fn model(name: &str) -> ModelManifold {
    ModelManifold::new(ModelKind::from_name(name, None).unwrap()).unwrap()
}

pub const CATALOG: [&str; 5] = ["sphere", "torus", "cusp", "double-cusp", "warped3"];

/// Unit vector of colatitude `theta`, longitude `phi`.
pub fn unit(theta: f64, phi: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

/// Great-circle distance on the sphere of radius `r`.
pub fn arccos_distance(r: f64, a: (f64, f64), b: (f64, f64)) -> f64 {
    let (u, v) = (unit(a.0, a.1), unit(b.0, b.1));
    let dot: f64 = (0..3).map(|i| u[i] * v[i]).sum();
    r * dot.clamp(-1.0, 1.0).acos()
}

/// Flat torus distance: the shortest lattice translate.
pub fn lattice_distance(sides: [f64; 2], p: [f64; 2], q: [f64; 2]) -> f64 {
    let mut best = f64::INFINITY;
    for i in -2..=2 {
        for j in -2..=2 {
            let dx = q[0] - p[0] + i as f64 * sides[0];
            let dy = q[1] - p[1] + j as f64 * sides[1];
            best = best.min(dx.hypot(dy));
        }
    }
    best
}

/// A pair of chart-0 sphere points at great-circle angle below `max_angle`.
pub fn sphere_pair<R: Rng>(rng: &mut R, max_angle: f64) -> ((f64, f64), (f64, f64)) {
    loop {
        let a = ((rng.gen_range(-1.0f64..1.0)).acos(), rng.gen_range(0.0..TAU));
        let b = ((rng.gen_range(-1.0f64..1.0)).acos(), rng.gen_range(0.0..TAU));
        let ang = arccos_distance(1.0, a, b);
        // keep away from the chart-0 poles so the inputs are well defined
        let ok = |p: (f64, f64)| p.0 > 1e-3 && p.0 < std::f64::consts::PI - 1e-3;
        if ang < max_angle && ok(a) && ok(b) {
            return (a, b);
        }
    }
}

/// Chart-coordinate samples of a curve, each segment integrated from its
/// lexicographically smaller endpoint so that a segment and its reversal
/// sample identically.
pub fn canonical_samples(m: &ModelManifold, c: &PolyCurve, per_segment: usize) -> Vec<ChartPoint> {
    let key = |p: &ChartPoint| (p.chart, p.coords[0].to_bits(), p.coords[1].to_bits());
    let mut out = Vec::new();
    for (i, s) in c.segments().iter().enumerate() {
        let (p, q) = (c.points()[i], c.points()[i + 1]);
        let (from, v) = if key(&p) <= key(&q) { (p, s.start_velocity) } else { (q, -s.end_velocity) };
        out.push(p);
        out.push(q);
        if s.length <= DEGENERATE_LENGTH {
            continue;
        }
        for k in 1..per_segment {
            let tau = k as f64 / per_segment as f64;
            out.push(flowerbed::geodesics::exp_with_velocity(m, &from, &(tau * v)).unwrap().0);
        }
    }
    out
}

/// Symmetric Hausdorff distance between point sets, in chart coordinates.
pub fn hausdorff(m: &ModelManifold, a: &[ChartPoint], b: &[ChartPoint]) -> f64 {
    let one_way = |x: &[ChartPoint], y: &[ChartPoint]| {
        x.iter()
            .map(|p| {
                y.iter()
                    .map(|q| m.coord_delta(p, q).map(|d| d.norm()).unwrap_or(f64::INFINITY))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

/// The near-great-circle seed: equator with an antipodally symmetric bump.
pub fn bumped_equator(m: &ModelManifold, eps: f64, points: usize) -> Flower {
    let pts: Vec<_> = (1..points)
        .map(|i| {
            let phi = TAU * i as f64 / points as f64;
            ChartPoint::new(0, FRAC_PI_2 + eps * (3.0 * phi).sin(), phi)
        })
        .collect();
    Flower::from_loops(m, ChartPoint::new(0, FRAC_PI_2, 0.0), &[pts]).unwrap()
}

/// Latitude circle at colatitude `theta`.
pub fn latitude(m: &ModelManifold, theta: f64, points: usize) -> Flower {
    let pts: Vec<_> = (1..points)
        .map(|i| ChartPoint::new(0, theta, TAU * i as f64 / points as f64))
        .collect();
    Flower::from_loops(m, ChartPoint::new(0, theta, 0.0), &[pts]).unwrap()
}

/// The (1,0) + (0,1) wedge on the torus at `v`, with uniform noise.
pub fn noisy_wedge<R: Rng>(m: &ModelManifold, rng: &mut R, v: [f64; 2], noise: f64, points: usize) -> Flower {
    let mut loops = Vec::new();
    for d in [[1.0, 0.0], [0.0, 1.0]] {
        loops.push(
            (1..points)
                .map(|i| {
                    let s = i as f64 / points as f64;
                    ChartPoint::new(
                        0,
                        v[0] + d[0] * s + rng.gen_range(-noise..=noise),
                        v[1] + d[1] * s + rng.gen_range(-noise..=noise),
                    )
                })
                .collect::<Vec<_>>(),
        );
    }
    Flower::from_loops(m, ChartPoint::new(0, v[0], v[1]), &loops).unwrap()
}

/// A flower of `loops` random loops inside the geodesic cap of radius
/// `cap` around the sphere point `(theta, phi)`, built in the tangent plane.
pub fn cap_flower<R: Rng>(m: &ModelManifold, rng: &mut R, center: (f64, f64), cap: f64, loops: usize) -> Flower {
    let c = ChartPoint::new(0, center.0, center.1);
    let to_point = |x: f64, y: f64| {
        // x along colatitude, y along the parallel (scaled)
        ChartPoint::new(0, center.0 + x, center.1 + y / center.0.sin())
    };
    let v = c;
    let ls: Vec<Vec<ChartPoint>> = (0..loops)
        .map(|_| {
            let a: f64 = rng.gen_range(0.0..TAU);
            let r = 0.45 * cap * rng.gen_range(0.3..1.0);
            (1..10)
                .map(|j| {
                    let t = TAU * j as f64 / 10.0;
                    // circle through the center of radius r in direction a
                    let x = r * (a.cos() * (1.0 - t.cos()) - a.sin() * t.sin());
                    let y = r * (a.sin() * (1.0 - t.cos()) + a.cos() * t.sin());
                    to_point(x, y)
                })
                .collect()
        })
        .collect();
    Flower::from_loops(m, v, &ls).unwrap()
}

pub fn planar_length(points: &[Vec2]) -> f64 {
    points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}

/// Adaptive Simpson, independent of the library's quadrature.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 50)
}
