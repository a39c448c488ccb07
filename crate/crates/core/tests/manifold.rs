mod common;

use std::f64::consts::{PI, TAU};

use common::*;
use flowerbed::manifold::{Mat2, END_THRESHOLD};
use flowerbed::{ChartPoint, ModelKind, ModelManifold, Vec2, WarpKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn metric_is_spd_everywhere_sampled() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for name in CATALOG {
        let m = model(name);
        for _ in 0..10_000 {
            let p = m.sample_point(&mut rng);
            let g = m.metric_at(&p).unwrap();
            assert_eq!(g[(0, 1)], g[(1, 0)], "{name} at {p:?}");
            assert!(g.cholesky().is_some(), "{name}: metric not positive definite at {p:?}");
        }
    }
}

/// Levi-Civita symbols from centered differences of the metric.
fn christoffel_fd(m: &ModelManifold, p: &ChartPoint) -> Option<[[[f64; 2]; 2]; 2]> {
    let h = 1e-5;
    let mut dg = [Mat2::zeros(); 2];
    for (l, d) in dg.iter_mut().enumerate() {
        let mut e = Vec2::zeros();
        e[l] = h;
        let plus = m.metric_at(&ChartPoint { chart: p.chart, coords: p.coords + e }).ok()?;
        let minus = m.metric_at(&ChartPoint { chart: p.chart, coords: p.coords - e }).ok()?;
        *d = (plus - minus) / (2.0 * h);
    }
    let ginv = m.metric_at(p).ok()?.try_inverse()?;
    let mut out = [[[0.0; 2]; 2]; 2];
    for k in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                out[k][i][j] = (0..2)
                    .map(|l| 0.5 * ginv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]))
                    .sum();
            }
        }
    }
    Some(out)
}

#[test]
fn christoffel_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for name in CATALOG {
        let m = model(name);
        let mut checked = 0;
        for _ in 0..2_000 {
            let p = m.sample_point(&mut rng);
            let Some(fd) = christoffel_fd(&m, &p) else { continue };
            let an = m.christoffel_at(&p).unwrap();
            for k in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        assert!(
                            (an[k][i][j] - fd[k][i][j]).abs() <= 1e-5,
                            "{name} Γ^{k}_{i}{j} at {p:?}: {} vs {}",
                            an[k][i][j],
                            fd[k][i][j]
                        );
                        assert_eq!(an[k][i][j], an[k][j][i]);
                    }
                }
            }
            checked += 1;
        }
        assert!(checked > 1_900, "{name}: only {checked} interior samples");
    }
}

#[test]
fn sphere_volume_is_exact() {
    for r in [0.3, 1.0, 2.5, 7.0] {
        let v = sphere(r).total_volume();
        assert!((v - 4.0 * PI * r * r).abs() <= 1e-12 * v);
    }
}

#[test]
fn warped_volumes_match_quadrature() {
    for name in ["cusp", "double-cusp", "warped3"] {
        let m = model(name);
        let p = m.warp().unwrap();
        let lo = p.domain_min().max(-60.0);
        let f = |t: f64| m.level_factor(p.w(t));
        // split at the profile joints so each piece is smooth
        let mut cuts = vec![lo];
        cuts.extend([-1.5, -1.0, 0.0, 1.0].into_iter().filter(|&c| c > lo));
        cuts.push(60.0);
        let oracle: f64 = cuts.windows(2).map(|w| simpson(&f, w[0], w[1], 1e-14)).sum();
        let v = m.total_volume();
        assert!(((v - oracle) / oracle).abs() <= 1e-9, "{name}: {v} vs {oracle}");
    }
}

#[test]
fn level_lengths_shrink_outward() {
    for kind in [WarpKind::CappedExp, WarpKind::DoubleExp] {
        for rate in [0.5, 1.0, 2.0] {
            let m = ModelManifold::new(ModelKind::CuspSurface { warp: kind, rate }).unwrap();
            let p = m.warp().unwrap();
            for end in m.ends() {
                let mut prev = f64::INFINITY;
                for i in 0..1000 {
                    let r = end.threshold + 20.0 * i as f64 / 999.0;
                    let len = TAU * p.w(end.direction * r);
                    assert!(len <= prev, "{kind:?} rate {rate}: length grows at r = {r}");
                    prev = len;
                }
            }
        }
    }
    assert_eq!(model("cusp").ends()[0].threshold, END_THRESHOLD);
}

#[test]
fn torus_has_no_ends() {
    let m = torus(1.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..100 {
        assert_eq!(m.end_of(&m.sample_point(&mut rng)), flowerbed::Region::Core);
    }
}
