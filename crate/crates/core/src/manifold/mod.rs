//! Model Riemannian manifolds described by analytic charts.
//!
//! Every model is two-dimensional at the chart level. The round sphere uses
//! two polar charts whose poles are orthogonal; the capped cusp profile adds a
//! Cartesian chart on the flat disk around its pole. Points are handed over to
//! the better-conditioned chart by [`ModelManifold::canonical`].
//!
//! The warped product `dt² + w(t)² g_{S²}` is three-dimensional; its charts
//! describe the totally geodesic slice `dt² + w(t)² dθ²` through a great
//! circle of the `S²` factor, while [`ModelManifold::dimension`] and
//! [`ModelManifold::total_volume`] refer to the full manifold.

mod warp;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

use nalgebra::{Matrix2, Vector2, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use warp::{WarpKind, WarpProfile, END_THRESHOLD, FLAT_CAP, POLE};

pub type Vec2 = Vector2<f64>;
pub type Mat2 = Matrix2<f64>;
/// `gamma[k][i][j]` holds `Γ^k_{ij}`.
pub type Christoffel = [[[f64; 2]; 2]; 2];

/// Handoff from the polar to the Cartesian chart of the cap below this radius.
const CAP_ENTER: f64 = 0.2;
/// Handoff back to the polar chart above this radius.
const CAP_LEAVE: f64 = 0.35;
/// Sphere charts stay within this distance of their equator.
const SPHERE_BAND: f64 = FRAC_PI_4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub chart: u8,
    pub coords: Vec2,
}

impl ChartPoint {
    pub fn new(chart: u8, x0: f64, x1: f64) -> Self {
        ChartPoint {
            chart,
            coords: Vec2::new(x0, x1),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TangentVec {
    pub base: ChartPoint,
    pub components: Vec2,
}

impl TangentVec {
    pub fn new(base: ChartPoint, components: Vec2) -> Self {
        TangentVec { base, components }
    }
}

fn default_radius() -> f64 {
    1.0
}
fn default_sides() -> [f64; 2] {
    [1.0, 1.0]
}
fn default_rate() -> f64 {
    1.0
}
fn default_warp() -> WarpKind {
    WarpKind::CappedExp
}
fn default_dimension() -> usize {
    3
}

/// Catalog entry, as addressed from configs and the command line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelKind {
    RoundSphere {
        #[serde(default = "default_radius")]
        radius: f64,
    },
    FlatTorus {
        #[serde(default = "default_sides")]
        sides: [f64; 2],
    },
    CuspSurface {
        #[serde(default = "default_warp")]
        warp: WarpKind,
        #[serde(default = "default_rate")]
        rate: f64,
    },
    WarpedProduct {
        #[serde(default = "default_dimension")]
        dimension: usize,
        #[serde(default = "default_warp")]
        warp: WarpKind,
        #[serde(default = "default_rate")]
        rate: f64,
    },
}

impl ModelKind {
    /// Catalog name, the inverse of [`ModelKind::from_name`].
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::RoundSphere { .. } => "sphere",
            ModelKind::FlatTorus { .. } => "torus",
            ModelKind::CuspSurface {
                warp: WarpKind::CappedExp,
                ..
            } => "cusp",
            ModelKind::CuspSurface { .. } => "double-cusp",
            ModelKind::WarpedProduct { .. } => "warped3",
        }
    }

    /// Short catalog names used by the command line:
    /// `sphere`, `torus`, `cusp`, `double-cusp`, `warped3`.
    pub fn from_name(name: &str, param: Option<f64>) -> Result<Self> {
        Ok(match name {
            "sphere" | "round-sphere" => ModelKind::RoundSphere {
                radius: param.unwrap_or(1.0),
            },
            "torus" | "flat-torus" => {
                let s = param.unwrap_or(1.0);
                ModelKind::FlatTorus { sides: [s, s] }
            }
            "cusp" | "cusp-surface" => ModelKind::CuspSurface {
                warp: WarpKind::CappedExp,
                rate: param.unwrap_or(1.0),
            },
            "double-cusp" => ModelKind::CuspSurface {
                warp: WarpKind::DoubleExp,
                rate: param.unwrap_or(1.0),
            },
            "warped3" | "warped-product" => ModelKind::WarpedProduct {
                dimension: 3,
                warp: WarpKind::CappedExp,
                rate: param.unwrap_or(1.0),
            },
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown model `{other}` (expected sphere, torus, cusp, double-cusp or warped3)"
                )))
            }
        })
    }
}

/// Where a point sits relative to the end decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    Core,
    End(u32),
}

/// One end `{ direction · t ≥ threshold }`; its radial coordinate is `direction · t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EndDescriptor {
    pub end_id: u32,
    pub threshold: f64,
    pub direction: f64,
}

#[derive(Clone, Debug, PartialEq)]
enum Geometry {
    Sphere { radius: f64 },
    Torus { sides: [f64; 2] },
    Warped { profile: WarpProfile, dimension: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelManifold {
    kind: ModelKind,
    geometry: Geometry,
    convexity_radius_hint: f64,
    contraction_radius: f64,
    ends: Vec<EndDescriptor>,
}

fn positive(name: &str, x: f64) -> Result<f64> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive, got {x}")))
    }
}

fn wrap_signed(x: f64, period: f64) -> f64 {
    let mut r = x.rem_euclid(period);
    if r > 0.5 * period {
        r -= period;
    }
    r
}

fn wrap_unsigned(x: f64, period: f64) -> f64 {
    let r = x.rem_euclid(period);
    if r >= period {
        0.0
    } else {
        r
    }
}

impl ModelManifold {
    pub fn new(kind: ModelKind) -> Result<Self> {
        let (geometry, conv, contraction, ends) = match &kind {
            ModelKind::RoundSphere { radius } => {
                let r = positive("radius", *radius)?;
                (Geometry::Sphere { radius: r }, FRAC_PI_2 * r, 0.9 * FRAC_PI_2 * r, vec![])
            }
            ModelKind::FlatTorus { sides } => {
                let a = positive("torus side", sides[0])?;
                let b = positive("torus side", sides[1])?;
                let m = a.min(b);
                (Geometry::Torus { sides: [a, b] }, 0.5 * m, 0.45 * m, vec![])
            }
            ModelKind::CuspSurface { warp, rate } | ModelKind::WarpedProduct { warp, rate, .. } => {
                let dimension = match &kind {
                    ModelKind::WarpedProduct { dimension, .. } => {
                        if *dimension != 3 {
                            return Err(Error::InvalidArgument(format!(
                                "warped products are provided for dimension 3 only, got {dimension}"
                            )));
                        }
                        3
                    }
                    _ => 2,
                };
                let profile = WarpProfile::new(*warp, *rate)?;
                let mut ends = vec![EndDescriptor {
                    end_id: 1,
                    threshold: END_THRESHOLD,
                    direction: 1.0,
                }];
                if *warp == WarpKind::DoubleExp {
                    ends.push(EndDescriptor {
                        end_id: 2,
                        threshold: END_THRESHOLD,
                        direction: -1.0,
                    });
                }
                (Geometry::Warped { profile, dimension }, 0.25, 0.225, ends)
            }
        };
        Ok(ModelManifold {
            kind,
            geometry,
            convexity_radius_hint: conv,
            contraction_radius: contraction,
            ends,
        })
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    /// Dimension `n` of the manifold (not of the chart slice).
    pub fn dimension(&self) -> usize {
        match &self.geometry {
            Geometry::Warped { dimension, .. } => *dimension,
            _ => 2,
        }
    }

    pub fn convexity_radius_hint(&self) -> f64 {
        self.convexity_radius_hint
    }

    /// Global injectivity-radius surrogate used to detect small flowers.
    pub fn contraction_radius(&self) -> f64 {
        self.contraction_radius
    }

    pub fn ends(&self) -> &[EndDescriptor] {
        &self.ends
    }

    pub fn warp(&self) -> Option<&WarpProfile> {
        match &self.geometry {
            Geometry::Warped { profile, .. } => Some(profile),
            _ => None,
        }
    }

    pub fn chart_count(&self) -> u8 {
        match &self.geometry {
            Geometry::Sphere { .. } => 2,
            Geometry::Torus { .. } => 1,
            Geometry::Warped { profile, .. } => match profile.kind() {
                WarpKind::CappedExp => 2,
                WarpKind::DoubleExp => 1,
            },
        }
    }

    fn check_chart(&self, p: &ChartPoint) -> Result<()> {
        if p.chart < self.chart_count() && p.coords.iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(self.domain_error(p))
        }
    }

    fn domain_error(&self, p: &ChartPoint) -> Error {
        Error::Domain {
            chart: p.chart,
            coords: [p.coords[0], p.coords[1]],
        }
    }

    /// Periods of the chart coordinates (`None` for non-periodic ones).
    pub fn periods(&self, chart: u8) -> [Option<f64>; 2] {
        match &self.geometry {
            Geometry::Sphere { .. } => [None, Some(TAU)],
            Geometry::Torus { sides } => [Some(sides[0]), Some(sides[1])],
            Geometry::Warped { .. } => {
                if chart == 0 {
                    [None, Some(TAU)]
                } else {
                    [None, None]
                }
            }
        }
    }

    /// Wraps periodic coordinates into `[0, period)`.
    pub fn normalize(&self, p: ChartPoint) -> ChartPoint {
        let periods = self.periods(p.chart);
        let mut q = p;
        for (i, per) in periods.iter().enumerate() {
            if let Some(per) = per {
                q.coords[i] = wrap_unsigned(q.coords[i], *per);
            }
        }
        q
    }

    pub fn metric_at(&self, p: &ChartPoint) -> Result<Mat2> {
        self.check_chart(p)?;
        match &self.geometry {
            Geometry::Sphere { radius } => {
                let s = p.coords[0].sin();
                if p.coords[0] <= 0.0 || p.coords[0] >= PI || s < 1e-8 {
                    return Err(self.domain_error(p));
                }
                let r2 = radius * radius;
                Ok(Mat2::new(r2, 0.0, 0.0, r2 * s * s))
            }
            Geometry::Torus { .. } => Ok(Mat2::identity()),
            Geometry::Warped { profile, .. } => {
                if p.chart == 0 {
                    let t = p.coords[0];
                    if t <= profile.domain_min() + 1e-12 {
                        return Err(self.domain_error(p));
                    }
                    let w = profile.w(t);
                    Ok(Mat2::new(1.0, 0.0, 0.0, w * w))
                } else if p.coords.norm() < FLAT_CAP {
                    Ok(Mat2::identity())
                } else {
                    Err(self.domain_error(p))
                }
            }
        }
    }

    pub fn christoffel_at(&self, p: &ChartPoint) -> Result<Christoffel> {
        self.metric_at(p)?;
        let mut g = [[[0.0; 2]; 2]; 2];
        match &self.geometry {
            Geometry::Sphere { .. } => {
                let (s, c) = p.coords[0].sin_cos();
                g[0][1][1] = -s * c;
                g[1][0][1] = c / s;
                g[1][1][0] = c / s;
            }
            Geometry::Torus { .. } => {}
            Geometry::Warped { profile, .. } => {
                if p.chart == 0 {
                    let t = p.coords[0];
                    let (w, dw) = (profile.w(t), profile.dw(t));
                    g[0][1][1] = -w * dw;
                    g[1][0][1] = dw / w;
                    g[1][1][0] = dw / w;
                }
            }
        }
        Ok(g)
    }

    pub fn inner(&self, p: &ChartPoint, u: &Vec2, v: &Vec2) -> Result<f64> {
        let g = self.metric_at(p)?;
        Ok(u.dot(&(g * v)))
    }

    pub fn norm(&self, p: &ChartPoint, v: &Vec2) -> Result<f64> {
        Ok(self.inner(p, v, v)?.max(0.0).sqrt())
    }

    /// Total n-volume of the manifold.
    pub fn total_volume(&self) -> f64 {
        match &self.geometry {
            Geometry::Sphere { radius } => 4.0 * PI * radius * radius,
            Geometry::Torus { sides } => sides[0] * sides[1],
            Geometry::Warped { profile, dimension } => {
                let lo = profile.domain_min();
                match dimension {
                    2 => TAU * profile.integral_pow(1, lo, f64::INFINITY),
                    _ => 4.0 * PI * profile.integral_pow(2, lo, f64::INFINITY),
                }
            }
        }
    }

    /// Area of the unit `(n-1)`-sphere times `w^{n-1}`: the volume of the
    /// level set `{t = const}` in the full manifold.
    pub fn level_factor(&self, w: f64) -> f64 {
        match &self.geometry {
            Geometry::Warped { dimension: 3, .. } => 4.0 * PI * w * w,
            _ => TAU * w,
        }
    }

    /// The `t` coordinate of a point on a warped model.
    pub fn radial_t(&self, p: &ChartPoint) -> Option<f64> {
        match &self.geometry {
            Geometry::Warped { .. } => Some(if p.chart == 0 {
                p.coords[0]
            } else {
                POLE + p.coords.norm()
            }),
            _ => None,
        }
    }

    pub fn end_of(&self, p: &ChartPoint) -> Region {
        if let Some(t) = self.radial_t(p) {
            for end in &self.ends {
                if end.direction * t >= end.threshold {
                    return Region::End(end.end_id);
                }
            }
        }
        Region::Core
    }

    /// Embedding into R³ (sphere only).
    pub fn embed(&self, p: &ChartPoint) -> Option<Vector3<f64>> {
        match &self.geometry {
            Geometry::Sphere { radius } => {
                let (st, ct) = p.coords[0].sin_cos();
                let (sp, cp) = p.coords[1].sin_cos();
                Some(
                    *radius
                        * if p.chart == 0 {
                            Vector3::new(st * cp, st * sp, ct)
                        } else {
                            Vector3::new(ct, st * cp, st * sp)
                        },
                )
            }
            _ => None,
        }
    }

    fn sphere_frame(radius: f64, p: &ChartPoint) -> (Vector3<f64>, Vector3<f64>) {
        let (st, ct) = p.coords[0].sin_cos();
        let (sp, cp) = p.coords[1].sin_cos();
        if p.chart == 0 {
            (
                radius * Vector3::new(ct * cp, ct * sp, -st),
                radius * Vector3::new(-st * sp, st * cp, 0.0),
            )
        } else {
            (
                radius * Vector3::new(-st, ct * cp, ct * sp),
                radius * Vector3::new(0.0, -st * sp, st * cp),
            )
        }
    }

    fn sphere_from_embedding(radius: f64, x: &Vector3<f64>, chart: u8) -> ChartPoint {
        let u = x / radius;
        let (a, b, c) = if chart == 0 { (u.z, u.x, u.y) } else { (u.x, u.y, u.z) };
        let theta = a.clamp(-1.0, 1.0).acos();
        let phi = wrap_unsigned(c.atan2(b), TAU);
        ChartPoint::new(chart, theta, phi)
    }

    /// Re-expresses `p` in `chart`.
    pub fn to_chart(&self, p: &ChartPoint, chart: u8) -> Result<ChartPoint> {
        self.check_chart(p)?;
        if chart >= self.chart_count() {
            return Err(Error::InvalidArgument(format!("no chart {chart}")));
        }
        if p.chart == chart {
            return Ok(self.normalize(*p));
        }
        match &self.geometry {
            Geometry::Sphere { radius } => {
                let x = self.embed(p).expect("sphere embeds");
                Ok(Self::sphere_from_embedding(*radius, &x, chart))
            }
            Geometry::Warped { .. } => {
                if chart == 1 {
                    let rho = p.coords[0] - POLE;
                    let (s, c) = p.coords[1].sin_cos();
                    Ok(ChartPoint::new(1, rho * c, rho * s))
                } else {
                    let rho = p.coords.norm();
                    let theta = wrap_unsigned(p.coords[1].atan2(p.coords[0]), TAU);
                    Ok(ChartPoint::new(0, POLE + rho, theta))
                }
            }
            Geometry::Torus { .. } => unreachable!("torus has one chart"),
        }
    }

    /// Re-expresses the tangent vector `v` at `p` in `chart`.
    pub fn push_forward(&self, p: &ChartPoint, v: &Vec2, chart: u8) -> Result<(ChartPoint, Vec2)> {
        let q = self.to_chart(p, chart)?;
        if p.chart == chart {
            return Ok((q, *v));
        }
        match &self.geometry {
            Geometry::Sphere { radius } => {
                let (e0, e1) = Self::sphere_frame(*radius, p);
                let ambient = e0 * v[0] + e1 * v[1];
                let (f0, f1) = Self::sphere_frame(*radius, &q);
                let out = Vec2::new(ambient.dot(&f0) / f0.norm_squared(), ambient.dot(&f1) / f1.norm_squared());
                if !out.iter().all(|x| x.is_finite()) {
                    return Err(self.domain_error(&q));
                }
                Ok((q, out))
            }
            Geometry::Warped { .. } => {
                if chart == 1 {
                    let rho = p.coords[0] - POLE;
                    let (s, c) = p.coords[1].sin_cos();
                    let out = Vec2::new(v[0] * c - rho * s * v[1], v[0] * s + rho * c * v[1]);
                    Ok((q, out))
                } else {
                    let (x, y) = (p.coords[0], p.coords[1]);
                    let rho2 = x * x + y * y;
                    if rho2 == 0.0 {
                        return Err(self.domain_error(p));
                    }
                    let rho = rho2.sqrt();
                    let out = Vec2::new((x * v[0] + y * v[1]) / rho, (x * v[1] - y * v[0]) / rho2);
                    Ok((q, out))
                }
            }
            Geometry::Torus { .. } => unreachable!("torus has one chart"),
        }
    }

    /// The chart a point should live in, if different from its current one.
    fn preferred_chart(&self, p: &ChartPoint) -> u8 {
        match &self.geometry {
            Geometry::Sphere { .. } => {
                if (p.coords[0] - FRAC_PI_2).abs() > SPHERE_BAND {
                    1 - p.chart
                } else {
                    p.chart
                }
            }
            Geometry::Torus { .. } => 0,
            Geometry::Warped { profile, .. } => {
                if profile.kind() != WarpKind::CappedExp {
                    return 0;
                }
                if p.chart == 0 && p.coords[0] - POLE < CAP_ENTER {
                    1
                } else if p.chart == 1 && p.coords.norm() > CAP_LEAVE {
                    0
                } else {
                    p.chart
                }
            }
        }
    }

    /// Normalizes periodic coordinates and hands the point over to the
    /// preferred chart.
    pub fn canonical(&self, p: &ChartPoint) -> Result<ChartPoint> {
        let c = self.preferred_chart(p);
        self.to_chart(p, c)
    }

    pub fn canonical_state(&self, p: &ChartPoint, v: &Vec2) -> Result<(ChartPoint, Vec2)> {
        let c = self.preferred_chart(p);
        self.push_forward(p, v, c)
    }

    /// Coordinates of `to` in the chart of `from`, minus those of `from`,
    /// with periodic differences wrapped into `(-period/2, period/2]`.
    pub fn coord_delta(&self, from: &ChartPoint, to: &ChartPoint) -> Result<Vec2> {
        let q = self.to_chart(to, from.chart)?;
        let mut d = q.coords - from.coords;
        for (i, per) in self.periods(from.chart).iter().enumerate() {
            if let Some(per) = per {
                d[i] = wrap_signed(d[i], *per);
            }
        }
        Ok(d)
    }

    /// True if `p` and `q` are the same point up to `tol` in chart coordinates.
    pub fn same_point(&self, p: &ChartPoint, q: &ChartPoint, tol: f64) -> bool {
        self.coord_delta(p, q).map(|d| d.norm() <= tol).unwrap_or(false)
    }

    /// Straight-line initial velocity at `p` aimed at `q`, computed in the
    /// chart where both points are best conditioned.
    pub fn guess_velocity(&self, p: &ChartPoint, q: &ChartPoint) -> Result<Vec2> {
        let chart = match &self.geometry {
            Geometry::Sphere { .. } => {
                let score = |c: u8| -> Result<f64> {
                    let a = self.to_chart(p, c)?;
                    let b = self.to_chart(q, c)?;
                    Ok(a.coords[0].sin().min(b.coords[0].sin()))
                };
                if score(0)? >= score(1)? {
                    0
                } else {
                    1
                }
            }
            Geometry::Warped { profile, .. } if profile.kind() == WarpKind::CappedExp => {
                let rho = |x: &ChartPoint| self.radial_t(x).unwrap() - POLE;
                if rho(p) < 0.95 * FLAT_CAP && rho(q) < 0.95 * FLAT_CAP {
                    1
                } else {
                    0
                }
            }
            _ => p.chart,
        };
        let a = self.to_chart(p, chart)?;
        let d = self.coord_delta(&a, q)?;
        let (_, v) = self.push_forward(&a, &d, p.chart)?;
        Ok(v)
    }

    /// Local injectivity-radius surrogate: the global value, lowered in the
    /// cusps to `0.9·π·w(t)` (half the length of the level circle through `p`).
    pub fn contraction_radius_at(&self, p: &ChartPoint) -> f64 {
        match &self.geometry {
            Geometry::Warped { profile, .. } => {
                let t = self.radial_t(p).unwrap();
                let outward = match profile.kind() {
                    WarpKind::CappedExp => t >= profile.neck(),
                    WarpKind::DoubleExp => true,
                };
                if outward {
                    self.contraction_radius.min(0.9 * PI * profile.w(t))
                } else {
                    self.contraction_radius
                }
            }
            _ => self.contraction_radius,
        }
    }

    /// Chart-0 coordinates, used for plotting.
    pub fn display_coords(&self, p: &ChartPoint) -> Vec2 {
        self.to_chart(p, 0).map(|q| q.coords).unwrap_or(p.coords)
    }

    /// A random canonical point. Warped models sample `t` in `[-3, 4]`
    /// (clipped away from the pole), spheres sample uniformly by area.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> ChartPoint {
        let p = match &self.geometry {
            Geometry::Sphere { .. } => {
                let z: f64 = rng.gen_range(-1.0..1.0);
                let phi: f64 = rng.gen_range(0.0..TAU);
                ChartPoint::new(0, z.acos(), phi)
            }
            Geometry::Torus { sides } => {
                ChartPoint::new(0, rng.gen_range(0.0..sides[0]), rng.gen_range(0.0..sides[1]))
            }
            Geometry::Warped { profile, .. } => {
                let lo = (-3.0f64).max(profile.domain_min() + 0.01);
                ChartPoint::new(0, rng.gen_range(lo..4.0), rng.gen_range(0.0..TAU))
            }
        };
        self.canonical(&p).expect("sampled point is in the atlas")
    }
}
