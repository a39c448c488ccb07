//! The length-shortening flow on flowers.
//!
//! One iteration runs a Birkhoff step on every edge with the vertex held
//! fixed, then moves the vertex along the sum of the outward unit tangents.
//! Both steps are guarded so the total length never increases. A flower
//! whose loops all fit inside the local contraction radius is handed to
//! [`contract_small_flower`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geodesics::{exp_with_velocity, shoot};
use crate::manifold::{ChartPoint, ModelManifold, Vec2};
use crate::nets::{
    measure_stationarity, tangent_sum, Flower, PolyCurve, Segment, StationarityCertificate, DEGENERATE_LENGTH,
};

/// Total length at which a flower counts as a point.
pub const POINT_LENGTH: f64 = 1e-8;
/// Length decrease below which an iteration counts as stalled.
pub const STALL_DECREASE: f64 = 1e-12;
const MAX_HALVINGS: usize = 60;
const SUBDIVISION_RETRIES: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    /// Points per edge (endpoints included); `None` picks
    /// `ceil(4·length / r_conv) + 2` per edge at every iteration.
    pub k_subdiv: Option<usize>,
    pub vertex_step0: f64,
    pub backtrack_factor: f64,
    pub max_iters: usize,
    pub tol_v: f64,
    pub tol_e: f64,
    pub contraction_radius: f64,
    #[serde(skip)]
    pub exec: Exec,
}

impl FlowConfig {
    pub fn for_model(m: &ModelManifold) -> Self {
        let r = m.contraction_radius();
        FlowConfig {
            k_subdiv: None,
            vertex_step0: r / 16.0,
            backtrack_factor: 0.5,
            max_iters: 2000,
            tol_v: StationarityCertificate::DEFAULT_TOL,
            tol_e: StationarityCertificate::DEFAULT_TOL,
            contraction_radius: r,
            exec: Exec::default(),
        }
    }

    pub fn check(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("flow config: {what}")));
        if matches!(self.k_subdiv, Some(k) if k < 2) {
            return bad("k_subdiv must be at least 2");
        }
        if !(self.vertex_step0 > 0.0) {
            return bad("vertex_step0 must be positive");
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return bad("backtrack_factor must lie in (0, 1)");
        }
        if !(self.tol_v > 0.0 && self.tol_e > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(self.contraction_radius > 0.0) {
            return bad("contraction_radius must be positive");
        }
        Ok(())
    }

    /// Points used on an edge of the given length.
    pub fn points_for(&self, m: &ModelManifold, length: f64) -> usize {
        self.k_subdiv
            .unwrap_or_else(|| auto_points(m, length))
    }
}

fn auto_points(m: &ModelManifold, length: f64) -> usize {
    (4.0 * length / m.convexity_radius_hint()).ceil() as usize + 2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome")]
pub enum FlowOutcome {
    ContractedToPoint,
    GeodesicFlower(StationarityCertificate),
    IterationLimit,
}

impl FlowOutcome {
    pub fn name(&self) -> &'static str {
        match self {
            FlowOutcome::ContractedToPoint => "ContractedToPoint",
            FlowOutcome::GeodesicFlower(_) => "GeodesicFlower",
            FlowOutcome::IterationLimit => "IterationLimit",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub total_length: f64,
    pub defect_norm: f64,
    pub vertex: ChartPoint,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowTrace {
    pub records: Vec<TraceRecord>,
    pub outcome: FlowOutcome,
    pub flower: Flower,
}

impl FlowTrace {
    pub fn lengths(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.total_length)
    }

    /// Largest increase between consecutive records (0 for a monotone trace).
    pub fn max_increase(&self) -> f64 {
        self.records
            .windows(2)
            .map(|w| w[1].total_length - w[0].total_length)
            .fold(0.0, f64::max)
    }

    pub fn final_length(&self) -> f64 {
        self.flower.total_length()
    }
}

/// Arclength samples with a continuation hint (unit direction) at each.
fn resample(m: &ModelManifold, e: &PolyCurve, params: &[f64]) -> Result<Vec<(ChartPoint, Vec2)>> {
    let last = params.len() - 1;
    params
        .iter()
        .enumerate()
        .map(|(j, &s)| {
            let (p, v) = if j == 0 {
                (*e.first(), e.segments()[0].start_velocity)
            } else if j == last {
                (*e.last(), e.segments()[e.segments().len() - 1].end_velocity)
            } else {
                e.point_at(m, s)?
            };
            let n = m.norm(&p, &v)?;
            Ok((p, if n > 0.0 { v / n } else { Vec2::zeros() }))
        })
        .collect()
}

/// Replaces `e` by geodesics through the points at arclength `params`.
fn rebuild(m: &ModelManifold, e: &PolyCurve, params: &[f64], edge: usize) -> Result<PolyCurve> {
    let samples = resample(m, e, params)?;
    let mut points = Vec::with_capacity(samples.len());
    let mut segments = Vec::with_capacity(samples.len() - 1);
    points.push(samples[0].0);
    for (gap, pair) in samples.windows(2).enumerate() {
        let (p, dir) = pair[0];
        let q = pair[1].0;
        let estimate = params[gap + 1] - params[gap];
        let hint = (dir.norm() > 0.0).then(|| dir * estimate);
        let g = shoot(m, &p, &q, hint).map_err(|source| Error::Subdivision {
            edge,
            gap,
            source: Box::new(source),
        })?;
        points.push(q);
        segments.push(Segment::from(&g));
    }
    PolyCurve::from_parts(points, segments)
}

fn even_params(length: f64, k: usize) -> Vec<f64> {
    let n = (k - 1) as f64;
    (0..k).map(|j| length * j as f64 / n).collect()
}

fn staggered_params(length: f64, k: usize) -> Vec<f64> {
    let n = (k - 1) as f64;
    let mut out = Vec::with_capacity(k + 1);
    out.push(0.0);
    out.extend((0..k - 1).map(|j| length * (j as f64 + 0.5) / n));
    out.push(length);
    out
}

fn birkhoff_with_points(m: &ModelManifold, e: &PolyCurve, k: usize, edge: usize) -> Result<PolyCurve> {
    let k = k.max(2);
    let length = e.length();
    if length <= DEGENERATE_LENGTH {
        return Ok(e.clone());
    }
    let spacing = length / (k - 1) as f64;
    if spacing >= m.convexity_radius_hint() {
        return Err(Error::Precondition(format!(
            "edge {edge}: spacing {spacing:.4} with k = {k} is not below the convexity radius {:.4}",
            m.convexity_radius_hint()
        )));
    }
    // A Birkhoff pass that samples the same k parameters as the corners it
    // replaces is a fixed point on any equilateral polygon, so the step
    // alternates a staggered grid (midpoints) with the aligned grid.
    let mut cur = e.clone();
    for staggered in [true, false] {
        let l = cur.length();
        let params = if staggered { staggered_params(l, k) } else { even_params(l, k) };
        let next = rebuild(m, &cur, &params, edge)?;
        if next.length() <= l {
            cur = next;
        }
    }
    Ok(cur)
}

/// One Birkhoff step on an edge with both endpoints fixed. The output is
/// never longer than the input.
pub fn birkhoff_edge_step(m: &ModelManifold, e: &PolyCurve, cfg: &FlowConfig) -> Result<PolyCurve> {
    birkhoff_with_points(m, e, cfg.points_for(m, e.length()), 0)
}

/// Re-attaches the first and last segment of every edge to a new vertex.
fn reattach(m: &ModelManifold, f: &Flower, v: &ChartPoint) -> Result<Flower> {
    let edges = f
        .edges()
        .iter()
        .map(|e| {
            if e.is_degenerate() {
                return Ok(PolyCurve::constant(*v));
            }
            let pts = e.points();
            let n = pts.len();
            let segs = e.segments();
            if n == 2 {
                // single segment loop from the vertex to itself: keep it degenerate-free
                let g = shoot(m, v, v, None)?;
                return Ok(PolyCurve::from_parts(vec![*v, *v], vec![Segment::from(&g)])?);
            }
            let head = shoot(m, v, &pts[1], Some(segs[0].start_velocity))?;
            let tail = shoot(m, &pts[n - 2], v, Some(segs[n - 2].start_velocity))?;
            Ok(e.with_ends(Some((*v, Segment::from(&head))), Some((*v, Segment::from(&tail)))))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Flower::new(*v, edges))
}

/// Result of a vertex step: the new flower and whether backtracking stalled.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexStep {
    pub flower: Flower,
    pub stalled: bool,
}

/// Moves the vertex along `exp_v(s·T)`, `T` the tangent sum, halving `s`
/// from `vertex_step0` until the total length strictly decreases.
pub fn vertex_balance_step(m: &ModelManifold, f: &Flower, cfg: &FlowConfig) -> Result<VertexStep> {
    let unchanged = |stalled| VertexStep {
        flower: f.clone(),
        stalled,
    };
    let cert = measure_stationarity(m, f)?;
    if cert.defect_norm <= cfg.tol_v {
        return Ok(unchanged(false));
    }
    let t = tangent_sum(m, f)?;
    let base = f.total_length();
    let mut s = cfg.vertex_step0;
    for _ in 0..MAX_HALVINGS {
        let moved = exp_with_velocity(m, f.vertex(), &(s * t))
            .and_then(|(v, _)| m.canonical(&v))
            .and_then(|v| reattach(m, f, &v));
        if let Ok(g) = moved {
            if g.total_length() < base {
                return Ok(VertexStep {
                    flower: g,
                    stalled: false,
                });
            }
        }
        s *= cfg.backtrack_factor;
    }
    Ok(unchanged(true))
}

/// True when every loop is shorter than twice the local contraction radius
/// at each of its corners, so the whole image lies in a contractible ball
/// around the vertex.
pub fn is_small(m: &ModelManifold, f: &Flower, cfg: &FlowConfig) -> bool {
    f.edges().iter().all(|e| {
        let r = e
            .points()
            .iter()
            .map(|p| m.contraction_radius_at(p))
            .fold(cfg.contraction_radius, f64::min);
        e.length() < 2.0 * r
    })
}

fn record(m: &ModelManifold, f: &Flower, iteration: usize) -> Result<TraceRecord> {
    Ok(TraceRecord {
        iteration,
        total_length: f.total_length(),
        defect_norm: measure_stationarity(m, f)?.defect_norm,
        vertex: *f.vertex(),
    })
}

fn birkhoff_all(m: &ModelManifold, f: &Flower, cfg: &FlowConfig, k_scale: usize) -> Result<Flower> {
    let edges = cfg.exec.map_indexed(f.edge_count(), |i| {
        let e = &f.edges()[i];
        let mut k = cfg.points_for(m, e.length()).max(2);
        k = (k - 1) * k_scale + 1;
        let mut attempt = 0;
        loop {
            match birkhoff_with_points(m, e, k, i) {
                Err(Error::Subdivision { .. }) if attempt < SUBDIVISION_RETRIES => {
                    attempt += 1;
                    k = 2 * k - 1;
                }
                other => break other,
            }
        }
    });
    let edges = edges.into_iter().collect::<Result<Vec<_>>>()?;
    let edges = edges
        .into_iter()
        .map(|e| if e.is_degenerate() { PolyCurve::constant(*f.vertex()) } else { e })
        .collect();
    Ok(Flower::new(*f.vertex(), edges))
}

fn contract_from(
    m: &ModelManifold,
    mut f: Flower,
    cfg: &FlowConfig,
    mut records: Vec<TraceRecord>,
    start: usize,
) -> Result<FlowTrace> {
    let mut it = start;
    while f.total_length() > POINT_LENGTH {
        if it >= start + cfg.max_iters {
            return Ok(FlowTrace {
                records,
                outcome: FlowOutcome::IterationLimit,
                flower: f,
            });
        }
        it += 1;
        f = birkhoff_all(m, &f, cfg, 1).map_err(|e| Error::Flow {
            iteration: it,
            source: Box::new(e),
        })?;
        records.push(record(m, &f, it)?);
    }
    let v = *f.vertex();
    Ok(FlowTrace {
        records,
        outcome: FlowOutcome::ContractedToPoint,
        flower: Flower::point(v, f.edge_count()),
    })
}

/// Shrinks a flower that lies inside the contraction radius to its vertex.
pub fn contract_small_flower(m: &ModelManifold, f: &Flower, cfg: &FlowConfig) -> Result<FlowTrace> {
    cfg.check()?;
    if !is_small(m, f, cfg) {
        return Err(Error::Precondition("flower is not within the contraction radius of its vertex".into()));
    }
    contract_from(m, f.clone(), cfg, vec![record(m, f, 0)?], 0)
}

pub fn flow(m: &ModelManifold, f: &Flower, cfg: &FlowConfig) -> Result<FlowTrace> {
    flow_observed(m, f, cfg, |_, _| {})
}

/// [`flow`] with a callback invoked on the flower after every iteration
/// (and once on the seed, with iteration 0).
pub fn flow_observed<F>(m: &ModelManifold, f: &Flower, cfg: &FlowConfig, mut observe: F) -> Result<FlowTrace>
where
    F: FnMut(usize, &Flower),
{
    cfg.check()?;
    let mut cur = f.clone();
    let mut records = vec![record(m, &cur, 0)?];
    observe(0, &cur);
    let mut k_scale = 1;
    let mut stalls = 0;
    let mut it = 0;
    loop {
        if cur.total_length() <= POINT_LENGTH {
            let v = *cur.vertex();
            return Ok(FlowTrace {
                records,
                outcome: FlowOutcome::ContractedToPoint,
                flower: Flower::point(v, cur.edge_count()),
            });
        }
        if is_small(m, &cur, cfg) {
            return contract_from(m, cur, cfg, records, it);
        }
        let cert = measure_stationarity(m, &cur)?.with_tolerances(cfg.tol_v, cfg.tol_e);
        if cert.is_stationary() {
            return Ok(FlowTrace {
                records,
                outcome: FlowOutcome::GeodesicFlower(cert),
                flower: cur,
            });
        }
        if it >= cfg.max_iters {
            return Ok(FlowTrace {
                records,
                outcome: FlowOutcome::IterationLimit,
                flower: cur,
            });
        }
        it += 1;
        let wrap = |e| Error::Flow {
            iteration: it,
            source: Box::new(e),
        };
        let before = cur.total_length();
        let shortened = birkhoff_all(m, &cur, cfg, k_scale).map_err(wrap)?;
        let step = vertex_balance_step(m, &shortened, cfg).map_err(wrap)?;
        cur = step.flower;
        records.push(record(m, &cur, it)?);
        observe(it, &cur);
        if before - cur.total_length() < STALL_DECREASE {
            let cert = measure_stationarity(m, &cur)?.with_tolerances(cfg.tol_v, cfg.tol_e);
            if !cert.is_stationary() {
                stalls += 1;
                if stalls >= 2 {
                    return Ok(FlowTrace {
                        records,
                        outcome: FlowOutcome::IterationLimit,
                        flower: cur,
                    });
                }
                k_scale = 2;
            }
        }
    }
}
