//! Piecewise-geodesic curves, flowers and cages.
//!
//! A [`PolyCurve`] stores its corner points together with the shot geodesic
//! of every segment (initial and arrival velocity, length), so tangents,
//! turning angles and resampling never need to re-solve a boundary value
//! problem. Flower edges are loops whose first and last points are copies of
//! the vertex.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesics::{exp_with_velocity, shoot, GeodesicSegment};
use crate::manifold::{ChartPoint, ModelManifold, Vec2};

/// Edges (and segments) shorter than this count as degenerate.
pub const DEGENERATE_LENGTH: f64 = 1e-12;
/// Chart-norm tolerance for "this point is the vertex".
pub const CLOSURE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub length: f64,
    /// Initial velocity, in the chart of the segment's start point.
    pub start_velocity: Vec2,
    /// Arrival velocity, in the chart of the segment's end point.
    pub end_velocity: Vec2,
}

impl From<&GeodesicSegment> for Segment {
    fn from(g: &GeodesicSegment) -> Self {
        Segment {
            length: g.length,
            start_velocity: g.start_velocity,
            end_velocity: g.end_velocity,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolyCurve {
    points: Vec<ChartPoint>,
    segments: Vec<Segment>,
}

impl PolyCurve {
    pub fn from_parts(points: Vec<ChartPoint>, segments: Vec<Segment>) -> Result<Self> {
        if points.len() < 2 || segments.len() + 1 != points.len() {
            return Err(Error::InvalidArgument(format!(
                "a polycurve needs n >= 2 points and n - 1 segments, got {} and {}",
                points.len(),
                segments.len()
            )));
        }
        Ok(PolyCurve { points, segments })
    }

    /// Joins consecutive points by shot geodesics (no continuation hints).
    pub fn through(m: &ModelManifold, points: &[ChartPoint]) -> Result<Self> {
        let hints = vec![None; points.len().saturating_sub(1)];
        Self::through_hinted(m, points, &hints)
    }

    pub fn through_hinted(m: &ModelManifold, points: &[ChartPoint], hints: &[Option<Vec2>]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidArgument("a polycurve needs at least two points".into()));
        }
        let pts: Vec<ChartPoint> = points.iter().map(|p| m.canonical(p)).collect::<Result<_>>()?;
        let mut segments = Vec::with_capacity(pts.len() - 1);
        for (i, pair) in pts.windows(2).enumerate() {
            let g = shoot(m, &pair[0], &pair[1], hints.get(i).copied().flatten())?;
            segments.push(Segment::from(&g));
        }
        Ok(PolyCurve { points: pts, segments })
    }

    /// The constant curve at `p`.
    pub fn constant(p: ChartPoint) -> Self {
        PolyCurve {
            points: vec![p, p],
            segments: vec![Segment {
                length: 0.0,
                start_velocity: Vec2::zeros(),
                end_velocity: Vec2::zeros(),
            }],
        }
    }

    pub fn points(&self) -> &[ChartPoint] {
        &self.points
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn first(&self) -> &ChartPoint {
        &self.points[0]
    }

    pub fn last(&self) -> &ChartPoint {
        &self.points[self.points.len() - 1]
    }

    pub fn length(&self) -> f64 {
        sorted_sum(self.segments.iter().map(|s| s.length).collect())
    }

    pub fn is_degenerate(&self) -> bool {
        self.length() <= DEGENERATE_LENGTH
    }

    pub fn reversed(&self) -> Self {
        let points = self.points.iter().rev().copied().collect();
        let segments = self
            .segments
            .iter()
            .rev()
            .map(|s| Segment {
                length: s.length,
                start_velocity: -s.end_velocity,
                end_velocity: -s.start_velocity,
            })
            .collect();
        PolyCurve { points, segments }
    }

    /// Concatenation; `other` must start where `self` ends.
    pub fn concat(&self, other: &PolyCurve) -> Result<Self> {
        if self.last() != other.first() {
            return Err(Error::InvalidArgument("concatenated curves do not share an endpoint".into()));
        }
        let mut points = self.points.clone();
        points.extend_from_slice(&other.points[1..]);
        let mut segments = self.segments.clone();
        segments.extend_from_slice(&other.segments);
        Ok(PolyCurve { points, segments })
    }

    /// Replaces one segment's endpoint data in place (used by vertex moves).
    pub(crate) fn with_ends(
        &self,
        first: Option<(ChartPoint, Segment)>,
        last: Option<(ChartPoint, Segment)>,
    ) -> Self {
        let mut c = self.clone();
        if let Some((p, s)) = first {
            c.points[0] = p;
            c.segments[0] = s;
        }
        if let Some((p, s)) = last {
            let n = c.points.len();
            c.points[n - 1] = p;
            c.segments[n - 2] = s;
        }
        c
    }

    /// Unit tangent at the start, pointing into the curve (chart of the first point).
    pub fn start_tangent(&self, m: &ModelManifold) -> Result<Option<Vec2>> {
        for (i, s) in self.segments.iter().enumerate() {
            if s.length > DEGENERATE_LENGTH {
                if i == 0 {
                    let n = m.norm(self.first(), &s.start_velocity)?;
                    return Ok(Some(s.start_velocity / n));
                }
                // leading zero-length segments: the tangent lives at points[i],
                // which coincides with the first point
                let (_, v) = m.push_forward(&self.points[i], &s.start_velocity, self.first().chart)?;
                let n = m.norm(self.first(), &v)?;
                return Ok(Some(v / n));
            }
        }
        Ok(None)
    }

    /// Unit tangent at the end, pointing back into the curve (chart of the last point).
    pub fn end_tangent(&self, m: &ModelManifold) -> Result<Option<Vec2>> {
        self.reversed().start_tangent(m)
    }

    /// Turning angles between consecutive non-degenerate segments, in radians.
    pub fn turning_angles(&self, m: &ModelManifold) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        let mut incoming: Option<(usize, Vec2)> = None;
        for (i, s) in self.segments.iter().enumerate() {
            if s.length <= DEGENERATE_LENGTH {
                continue;
            }
            let here = &self.points[i];
            if let Some((j, vin)) = incoming {
                let at = &self.points[j + 1];
                let vin = if at.chart == here.chart {
                    vin
                } else {
                    m.push_forward(at, &vin, here.chart)?.1
                };
                let a = m.inner(here, &vin, &s.start_velocity)?;
                let na = m.norm(here, &vin)?;
                let nb = m.norm(here, &s.start_velocity)?;
                out.push((a / (na * nb)).clamp(-1.0, 1.0).acos());
            }
            incoming = Some((i, s.end_velocity));
        }
        Ok(out)
    }

    pub fn max_turning(&self, m: &ModelManifold) -> Result<f64> {
        Ok(self.turning_angles(m)?.into_iter().fold(0.0, f64::max))
    }

    /// Segment index and local parameter `τ ∈ [0, 1]` at arclength `s`.
    pub fn locate(&self, s: f64) -> (usize, f64) {
        let mut acc = 0.0;
        for (i, seg) in self.segments.iter().enumerate() {
            if s <= acc + seg.length || i + 1 == self.segments.len() {
                let tau = if seg.length > 0.0 { ((s - acc) / seg.length).clamp(0.0, 1.0) } else { 0.0 };
                return (i, tau);
            }
            acc += seg.length;
        }
        (self.segments.len() - 1, 1.0)
    }

    /// Point and velocity (scaled to the segment's parameterization) at
    /// arclength `s`. Corner points are returned exactly.
    pub fn point_at(&self, m: &ModelManifold, s: f64) -> Result<(ChartPoint, Vec2)> {
        let (i, tau) = self.locate(s);
        let seg = &self.segments[i];
        if tau <= 0.0 {
            return Ok((self.points[i], seg.start_velocity));
        }
        if tau >= 1.0 {
            return Ok((self.points[i + 1], seg.end_velocity));
        }
        exp_with_velocity(m, &self.points[i], &(tau * seg.start_velocity))
    }

    /// `per_segment + 1` samples along every segment (shared corners repeated).
    pub fn sample(&self, m: &ModelManifold, per_segment: usize) -> Result<Vec<ChartPoint>> {
        let mut out = Vec::new();
        for (i, seg) in self.segments.iter().enumerate() {
            out.push(self.points[i]);
            for k in 1..per_segment {
                let tau = k as f64 / per_segment as f64;
                out.push(exp_with_velocity(m, &self.points[i], &(tau * seg.start_velocity))?.0);
            }
        }
        out.push(*self.last());
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Flower {
    vertex: ChartPoint,
    edges: Vec<PolyCurve>,
}

impl Flower {
    /// Assembles a flower without checking closure; see [`validate`].
    pub fn new(vertex: ChartPoint, edges: Vec<PolyCurve>) -> Self {
        Flower { vertex, edges }
    }

    /// Builds loops `vertex → interior points → vertex` joined by geodesics.
    pub fn from_loops(m: &ModelManifold, vertex: ChartPoint, loops: &[Vec<ChartPoint>]) -> Result<Self> {
        let v = m.canonical(&vertex)?;
        let edges = loops
            .iter()
            .map(|interior| {
                let mut pts = Vec::with_capacity(interior.len() + 2);
                pts.push(v);
                pts.extend_from_slice(interior);
                pts.push(v);
                PolyCurve::through(m, &pts)
            })
            .collect::<Result<_>>()?;
        Ok(Flower { vertex: v, edges })
    }

    /// A flower whose `edge_count` edges are all constant at `vertex`.
    pub fn point(vertex: ChartPoint, edge_count: usize) -> Self {
        Flower {
            vertex,
            edges: vec![PolyCurve::constant(vertex); edge_count],
        }
    }

    pub fn vertex(&self) -> &ChartPoint {
        &self.vertex
    }

    pub fn edges(&self) -> &[PolyCurve] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn total_length(&self) -> f64 {
        total_length(self)
    }

    pub fn into_parts(self) -> (ChartPoint, Vec<PolyCurve>) {
        (self.vertex, self.edges)
    }
}

/// Sum of all edge lengths. Segment lengths are added in ascending order, so
/// the result depends only on their multiset: reversing or permuting loops
/// leaves it bit-for-bit unchanged.
pub fn total_length(f: &Flower) -> f64 {
    sorted_sum(f.edges.iter().flat_map(|e| e.segments.iter().map(|s| s.length)).collect())
}

fn sorted_sum(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs.into_iter().sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationarityCertificate {
    /// `|Σ outward unit tangents|_g` at the vertex.
    pub defect_norm: f64,
    /// Largest turning angle at an interior corner of any edge (radians).
    pub max_edge_residual: f64,
    pub total_length: f64,
    pub tol_v: f64,
    pub tol_e: f64,
}

impl StationarityCertificate {
    pub const DEFAULT_TOL: f64 = 1e-4;

    pub fn is_stationary(&self) -> bool {
        self.defect_norm <= self.tol_v && self.max_edge_residual <= self.tol_e
    }

    pub fn with_tolerances(mut self, tol_v: f64, tol_e: f64) -> Self {
        self.tol_v = tol_v;
        self.tol_e = tol_e;
        self
    }
}

/// Sum of the outward unit tangents of all non-degenerate edges, in the
/// chart of the vertex. Each loop contributes its start and end tangent.
pub fn tangent_sum(m: &ModelManifold, f: &Flower) -> Result<Vec2> {
    let mut sum = Vec2::zeros();
    for e in &f.edges {
        for (tangent, at) in [(e.start_tangent(m)?, e.first()), (e.end_tangent(m)?, e.last())] {
            if let Some(t) = tangent {
                let t = if at.chart == f.vertex.chart {
                    t
                } else {
                    m.push_forward(at, &t, f.vertex.chart)?.1
                };
                sum += t;
            }
        }
    }
    Ok(sum)
}

/// Stationarity measurement; degenerate edges are an error.
pub fn stationarity_defect(m: &ModelManifold, f: &Flower) -> Result<StationarityCertificate> {
    if let Some(i) = f.edges.iter().position(PolyCurve::is_degenerate) {
        return Err(Error::Degenerate(format!("edge {i} has zero length")));
    }
    measure_stationarity(m, f)
}

/// Stationarity measurement that ignores collapsed edges (a constant loop
/// has no tangent and contributes nothing to the first variation).
pub fn measure_stationarity(m: &ModelManifold, f: &Flower) -> Result<StationarityCertificate> {
    let sum = tangent_sum(m, f)?;
    let mut residual: f64 = 0.0;
    for e in &f.edges {
        residual = residual.max(e.max_turning(m)?);
    }
    Ok(StationarityCertificate {
        defect_norm: m.norm(&f.vertex, &sum)?,
        max_edge_residual: residual,
        total_length: f.total_length(),
        tol_v: StationarityCertificate::DEFAULT_TOL,
        tol_e: StationarityCertificate::DEFAULT_TOL,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "violation", rename_all = "kebab-case")]
pub enum Violation {
    TooFewPoints { edge: usize },
    OpenLoop { edge: usize, gap: f64 },
    OutsideAtlas { edge: usize, point: usize },
    SegmentTooLong { edge: usize, segment: usize, length: f64, limit: f64 },
    LengthMismatch { edge: usize, segment: usize, stored: f64, recomputed: f64 },
}

/// Checks closure, chart validity, segment scale and stored lengths.
pub fn validate(m: &ModelManifold, f: &Flower) -> Vec<Violation> {
    let mut out = Vec::new();
    if m.metric_at(&f.vertex).is_err() {
        out.push(Violation::OutsideAtlas { edge: usize::MAX, point: 0 });
        return out;
    }
    let limit = m.convexity_radius_hint();
    for (ei, e) in f.edges.iter().enumerate() {
        if e.points.len() < 2 || e.segments.len() + 1 != e.points.len() {
            out.push(Violation::TooFewPoints { edge: ei });
            continue;
        }
        let gap = [e.first(), e.last()]
            .iter()
            .map(|p| m.coord_delta(&f.vertex, p).map(|d| d.norm()).unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max);
        if gap > CLOSURE_TOL {
            out.push(Violation::OpenLoop { edge: ei, gap });
        }
        if let Some(pi) = e.points.iter().position(|p| m.metric_at(p).is_err()) {
            out.push(Violation::OutsideAtlas { edge: ei, point: pi });
            continue;
        }
        for (si, s) in e.segments.iter().enumerate() {
            if s.length >= limit {
                out.push(Violation::SegmentTooLong {
                    edge: ei,
                    segment: si,
                    length: s.length,
                    limit,
                });
                continue;
            }
            let hint = (s.length > 0.0).then_some(s.start_velocity);
            match shoot(m, &e.points[si], &e.points[si + 1], hint) {
                Ok(g) if (g.length - s.length).abs() <= 1e-8 => {}
                Ok(g) => out.push(Violation::LengthMismatch {
                    edge: ei,
                    segment: si,
                    stored: s.length,
                    recomputed: g.length,
                }),
                Err(_) => out.push(Violation::LengthMismatch {
                    edge: ei,
                    segment: si,
                    stored: s.length,
                    recomputed: f64::NAN,
                }),
            }
        }
    }
    out
}

/// Image of the 1-skeleton of a simplex: one curve per vertex pair `(u, w)`,
/// `u < w`, running from vertex `u` to vertex `w`.
#[derive(Clone, Debug, PartialEq)]
pub struct Cage {
    vertices: Vec<ChartPoint>,
    edges: BTreeMap<(usize, usize), PolyCurve>,
}

impl Cage {
    /// A complete cage; every pair of vertices must be joined.
    pub fn new(vertices: Vec<ChartPoint>, edges: BTreeMap<(usize, usize), PolyCurve>) -> Result<Self> {
        let cage = Self::new_partial(vertices, edges)?;
        let k = cage.vertices.len();
        let expected = k * (k - 1) / 2;
        if cage.edges.len() != expected {
            return Err(Error::InvalidCage(format!(
                "a {}-cage has {expected} edges, got {}",
                k - 1,
                cage.edges.len()
            )));
        }
        Ok(cage)
    }

    /// A cage that may be missing edges (rejected later by [`cage_to_flower`]).
    pub fn new_partial(vertices: Vec<ChartPoint>, edges: BTreeMap<(usize, usize), PolyCurve>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::InvalidCage("a cage needs at least two vertices".into()));
        }
        for (&(u, w), e) in &edges {
            if u >= w || w >= vertices.len() {
                return Err(Error::InvalidCage(format!("bad edge label ({u}, {w})")));
            }
            if e.first() != &vertices[u] || e.last() != &vertices[w] {
                return Err(Error::InvalidCage(format!("edge ({u}, {w}) does not join its vertices")));
            }
        }
        Ok(Cage { vertices, edges })
    }

    /// Joins every vertex pair by a minimizing geodesic cut into
    /// `segments_per_edge` equal pieces.
    pub fn from_vertices(m: &ModelManifold, vertices: &[ChartPoint], segments_per_edge: usize) -> Result<Self> {
        let verts: Vec<ChartPoint> = vertices.iter().map(|p| m.canonical(p)).collect::<Result<_>>()?;
        let n = segments_per_edge.max(1);
        let mut edges = BTreeMap::new();
        for u in 0..verts.len() {
            for w in u + 1..verts.len() {
                let g = shoot(m, &verts[u], &verts[w], None)?;
                let mut pts = vec![verts[u]];
                for k in 1..n {
                    let tau = k as f64 / n as f64;
                    pts.push(exp_with_velocity(m, &verts[u], &(tau * g.start_velocity))?.0);
                }
                pts.push(verts[w]);
                let mut curve = PolyCurve::through(m, &pts)?;
                curve.points[0] = verts[u];
                let last = curve.points.len() - 1;
                curve.points[last] = verts[w];
                edges.insert((u, w), curve);
            }
        }
        Cage::new(verts, edges)
    }

    pub fn simplex_dim(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn vertices(&self) -> &[ChartPoint] {
        &self.vertices
    }

    pub fn edges(&self) -> &BTreeMap<(usize, usize), PolyCurve> {
        &self.edges
    }

    /// The edge from `u` to `w`, oriented that way.
    pub fn edge(&self, u: usize, w: usize) -> Option<PolyCurve> {
        if u < w {
            self.edges.get(&(u, w)).cloned()
        } else {
            self.edges.get(&(w, u)).map(PolyCurve::reversed)
        }
    }

    pub fn total_length(&self) -> f64 {
        self.edges.values().map(PolyCurve::length).sum()
    }
}

/// Collapses a cage onto its `base` vertex. Edges at the base become
/// out-and-back loops; every other edge `(u, w)` becomes the loop
/// `base → u → w → base` along cage edges, so the image is unchanged.
pub fn cage_to_flower(_m: &ModelManifold, c: &Cage, base: usize) -> Result<Flower> {
    let k = c.vertices.len();
    if base >= k {
        return Err(Error::InvalidCage(format!("base vertex {base} out of range")));
    }
    let edge = |u: usize, w: usize| {
        c.edge(u, w)
            .ok_or_else(|| Error::InvalidCage(format!("missing edge between vertices {u} and {w}")))
    };
    let mut loops = Vec::with_capacity(k * (k - 1) / 2);
    for u in 0..k {
        for w in u + 1..k {
            let curve = if u == base || w == base {
                let other = if u == base { w } else { u };
                edge(base, other)?.concat(&edge(other, base)?)?
            } else {
                edge(base, u)?.concat(&edge(u, w)?)?.concat(&edge(w, base)?)?
            };
            loops.push(curve);
        }
    }
    Ok(Flower::new(c.vertices[base], loops))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::ModelKind;
    use std::f64::consts::{FRAC_PI_2, PI, TAU};

    fn torus() -> ModelManifold {
        ModelManifold::new(ModelKind::FlatTorus { sides: [1.0, 1.0] }).unwrap()
    }

    fn straight_loop(dir: Vec2, n: usize, v: ChartPoint) -> Vec<ChartPoint> {
        (1..n).map(|i| ChartPoint { chart: 0, coords: v.coords + dir * (i as f64 / n as f64) }).collect()
    }

    #[test]
    fn wedge_length_and_defect() {
        let m = torus();
        let v = ChartPoint::new(0, 0.2, 0.3);
        let f = Flower::from_loops(
            &m,
            v,
            &[straight_loop(Vec2::new(1.0, 0.0), 8, v), straight_loop(Vec2::new(0.0, 1.0), 8, v)],
        )
        .unwrap();
        assert!((total_length(&f) - 2.0).abs() < 1e-12);
        let cert = stationarity_defect(&m, &f).unwrap();
        assert!(cert.defect_norm < 1e-12);
        assert!(cert.max_edge_residual < 1e-7);
        assert!(cert.is_stationary());
        assert!(validate(&m, &f).is_empty());
    }

    #[test]
    fn single_loop_is_balanced() {
        let m = torus();
        let v = ChartPoint::new(0, 0.5, 0.5);
        let f = Flower::from_loops(&m, v, &[straight_loop(Vec2::new(0.0, 1.0), 5, v)]).unwrap();
        let cert = stationarity_defect(&m, &f).unwrap();
        assert!(cert.defect_norm < 1e-12 && cert.max_edge_residual < 1e-7);
    }

    #[test]
    fn bent_loop_defect_is_two_cos_half_angle() {
        // a (1,0) loop leaving the vertex at +β and returning at -β
        let m = torus();
        let v = ChartPoint::new(0, 0.0, 0.0);
        for beta in [0.1f64, 0.3, 0.6] {
            let h = 0.5 * beta.tan();
            let f = Flower::from_loops(&m, v, &[vec![ChartPoint::new(0, 0.5, h)]]).unwrap();
            let cert = stationarity_defect(&m, &f).unwrap();
            let alpha = PI - 2.0 * beta;
            assert!((cert.defect_norm - 2.0 * (alpha / 2.0).cos()).abs() < 1e-9);
        }
    }

    #[test]
    fn point_flower() {
        let f = Flower::point(ChartPoint::new(0, 0.1, 0.1), 3);
        assert_eq!(total_length(&f), 0.0);
        assert!(matches!(stationarity_defect(&torus(), &f), Err(Error::Degenerate(_))));
    }

    #[test]
    fn sphere_great_circle_length() {
        let m = ModelManifold::new(ModelKind::RoundSphere { radius: 1.0 }).unwrap();
        let v = ChartPoint::new(0, FRAC_PI_2, 0.0);
        let pts: Vec<_> = (1..16).map(|i| ChartPoint::new(0, FRAC_PI_2, TAU * i as f64 / 16.0)).collect();
        let f = Flower::from_loops(&m, v, &[pts]).unwrap();
        assert!((total_length(&f) - TAU).abs() < 1e-6);
        assert!(stationarity_defect(&m, &f).unwrap().defect_norm < 1e-6);
    }

    #[test]
    fn validate_flags_open_and_long() {
        let m = torus();
        let v = ChartPoint::new(0, 0.0, 0.0);
        let open = PolyCurve::through(&m, &[v, ChartPoint::new(0, 0.2, 0.0), ChartPoint::new(0, 0.3, 0.1)]).unwrap();
        let f = Flower::new(v, vec![open]);
        let bad = validate(&m, &f);
        assert_eq!(bad.len(), 1);
        assert!(matches!(bad[0], Violation::OpenLoop { .. }));

        let long = PolyCurve::through(&m, &[v, ChartPoint::new(0, 0.45, 0.4), v]).unwrap();
        let bad = validate(&m, &Flower::new(v, vec![long]));
        assert_eq!(bad.len(), 2);
        assert!(bad.iter().all(|b| matches!(b, Violation::SegmentTooLong { .. })));
    }

    #[test]
    fn validate_flags_tampered_length() {
        let m = torus();
        let v = ChartPoint::new(0, 0.0, 0.0);
        let mut c = PolyCurve::through(&m, &[v, ChartPoint::new(0, 0.2, 0.0), v]).unwrap();
        c.segments[0].length += 1e-6;
        let bad = validate(&m, &Flower::new(v, vec![c]));
        assert!(matches!(bad.as_slice(), [Violation::LengthMismatch { .. }]));
    }

    #[test]
    fn triangle_cage_collapse() {
        let m = torus();
        let verts = [ChartPoint::new(0, 0.1, 0.1), ChartPoint::new(0, 0.3, 0.1), ChartPoint::new(0, 0.2, 0.3)];
        let cage = Cage::from_vertices(&m, &verts, 3).unwrap();
        assert_eq!(cage.edges().len(), 3);
        let f = cage_to_flower(&m, &cage, 0).unwrap();
        assert_eq!(f.edge_count(), 3);
        let ab = cage.edge(0, 1).unwrap().length();
        let ac = cage.edge(0, 2).unwrap().length();
        let bc = cage.edge(1, 2).unwrap().length();
        assert!((f.edges()[0].length() - 2.0 * ab).abs() < 1e-14);
        assert!((f.edges()[1].length() - 2.0 * ac).abs() < 1e-14);
        assert!((f.edges()[2].length() - (ab + bc + ac)).abs() < 1e-14);
        assert!(validate(&m, &f).is_empty());
    }

    #[test]
    fn one_cage_collapse() {
        let m = torus();
        let cage = Cage::from_vertices(&m, &[ChartPoint::new(0, 0.1, 0.1), ChartPoint::new(0, 0.4, 0.2)], 2).unwrap();
        let f = cage_to_flower(&m, &cage, 0).unwrap();
        assert_eq!(f.edge_count(), 1);
        assert!((f.total_length() - 2.0 * cage.total_length()).abs() < 1e-14);
    }

    #[test]
    fn missing_edge_is_rejected() {
        let m = torus();
        let full = Cage::from_vertices(&m, &[ChartPoint::new(0, 0.1, 0.1), ChartPoint::new(0, 0.3, 0.1), ChartPoint::new(0, 0.2, 0.3)], 1).unwrap();
        let mut edges = full.edges().clone();
        edges.remove(&(1, 2));
        assert!(Cage::new(full.vertices().to_vec(), edges.clone()).is_err());
        let partial = Cage::new_partial(full.vertices().to_vec(), edges).unwrap();
        assert!(matches!(cage_to_flower(&m, &partial, 0), Err(Error::InvalidCage(_))));
    }

    #[test]
    fn reversal_and_permutation_keep_length() {
        let m = torus();
        let v = ChartPoint::new(0, 0.0, 0.0);
        let a = PolyCurve::through(&m, &[v, ChartPoint::new(0, 0.2, 0.05), ChartPoint::new(0, 0.1, 0.2), v]).unwrap();
        let b = PolyCurve::through(&m, &[v, ChartPoint::new(0, 0.9, 0.1), v]).unwrap();
        let f1 = Flower::new(v, vec![a.clone(), b.clone()]);
        let f2 = Flower::new(v, vec![b.reversed(), a.reversed()]);
        assert_eq!(total_length(&f1), total_length(&f2));
    }
}
