//! Artifact formats: flower and cage JSON, trace/slice CSV, SVG figures.
//!
//! JSON documents carry a `schema` tag and list keys in a fixed order.
//! Every CSV starts with one `#` comment line (the RNG seed, or the slice
//! parameters), then a header row.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{ChartPoint, ModelKind, ModelManifold, Vec2};
use crate::nets::{Cage, Flower, PolyCurve, Segment, StationarityCertificate};
use crate::shortening::FlowTrace;
use crate::slicing::EndSlice;

pub const FLOWER_SCHEMA: &str = "flowerbed.flower/1";
pub const CAGE_SCHEMA: &str = "flowerbed.cage/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveDoc {
    pub length: f64,
    pub points: Vec<ChartPoint>,
    pub segments: Vec<Segment>,
}

impl CurveDoc {
    pub fn from_curve(c: &PolyCurve) -> Self {
        CurveDoc {
            length: c.length(),
            points: c.points().to_vec(),
            segments: c.segments().to_vec(),
        }
    }

    pub fn to_curve(&self) -> Result<PolyCurve> {
        PolyCurve::from_parts(self.points.clone(), self.segments.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowerDoc {
    pub schema: String,
    pub rng_seed: Option<u64>,
    pub model: ModelKind,
    pub vertex: ChartPoint,
    pub edge_count: usize,
    pub total_length: f64,
    pub certificate: Option<StationarityCertificate>,
    pub edges: Vec<CurveDoc>,
}

impl FlowerDoc {
    pub fn new(m: &ModelManifold, f: &Flower, rng_seed: Option<u64>, certificate: Option<StationarityCertificate>) -> Self {
        FlowerDoc {
            schema: FLOWER_SCHEMA.into(),
            rng_seed,
            model: m.kind().clone(),
            vertex: *f.vertex(),
            edge_count: f.edge_count(),
            total_length: f.total_length(),
            certificate,
            edges: f.edges().iter().map(CurveDoc::from_curve).collect(),
        }
    }

    pub fn to_flower(&self) -> Result<Flower> {
        if self.schema != FLOWER_SCHEMA {
            return Err(Error::InvalidFlower(format!("unknown schema `{}`", self.schema)));
        }
        let edges = self.edges.iter().map(CurveDoc::to_curve).collect::<Result<Vec<_>>>()?;
        if edges.len() != self.edge_count {
            return Err(Error::InvalidFlower("edge_count does not match the edge list".into()));
        }
        Ok(Flower::new(self.vertex, edges))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("flower documents serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidFlower(e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CageEdgeDoc {
    pub u: usize,
    pub w: usize,
    #[serde(flatten)]
    pub curve: CurveDoc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CageDoc {
    pub schema: String,
    pub rng_seed: Option<u64>,
    pub model: ModelKind,
    pub simplex_dim: usize,
    pub vertices: Vec<ChartPoint>,
    pub edges: Vec<CageEdgeDoc>,
}

impl CageDoc {
    pub fn new(m: &ModelManifold, c: &Cage, rng_seed: Option<u64>) -> Self {
        CageDoc {
            schema: CAGE_SCHEMA.into(),
            rng_seed,
            model: m.kind().clone(),
            simplex_dim: c.simplex_dim(),
            vertices: c.vertices().to_vec(),
            edges: c
                .edges()
                .iter()
                .map(|(&(u, w), e)| CageEdgeDoc {
                    u,
                    w,
                    curve: CurveDoc::from_curve(e),
                })
                .collect(),
        }
    }

    pub fn to_cage(&self) -> Result<Cage> {
        if self.schema != CAGE_SCHEMA {
            return Err(Error::InvalidCage(format!("unknown schema `{}`", self.schema)));
        }
        let edges = self
            .edges
            .iter()
            .map(|e| Ok(((e.u, e.w), e.curve.to_curve()?)))
            .collect::<Result<_>>()?;
        Cage::new(self.vertices.clone(), edges)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("cage documents serialize")
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Trace CSV: `iteration,total_length,defect_norm,vertex_chart,vertex_x0,vertex_x1`.
pub fn write_trace_csv<W: Write>(mut out: W, trace: &FlowTrace, rng_seed: u64) -> Result<()> {
    writeln!(out, "# rng_seed={rng_seed}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "total_length", "defect_norm", "vertex_chart", "vertex_x0", "vertex_x1"])
        .map_err(csv_err)?;
    for r in &trace.records {
        w.write_record([
            r.iteration.to_string(),
            r.total_length.to_string(),
            r.defect_norm.to_string(),
            r.vertex.chart.to_string(),
            r.vertex.coords[0].to_string(),
            r.vertex.coords[1].to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Slice CSV: one row per end, `r,end_id,volume,total_volume`.
pub fn write_slice_csv<W: Write>(mut out: W, slice: &EndSlice, model: &str, eps: f64) -> Result<()> {
    writeln!(out, "# model={model} eps={eps}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["r", "end_id", "volume", "total_volume"]).map_err(csv_err)?;
    for c in &slice.components {
        w.write_record([
            slice.r.to_string(),
            c.end_id.to_string(),
            c.volume.to_string(),
            slice.total_volume.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a CSV written by this module, skipping the comment line.
pub fn read_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = r.headers().map_err(csv_err)?.iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(String::from).collect()).map_err(csv_err))
        .collect::<Result<_>>()?;
    Ok((header, rows))
}

const SVG_W: f64 = 640.0;
const SVG_H: f64 = 400.0;
const MARGIN: f64 = 20.0;

/// Plot window in chart-0 coordinates: `(x0 range, x1 range)`.
fn plot_window(m: &ModelManifold) -> ([f64; 2], [f64; 2]) {
    match m.kind() {
        ModelKind::RoundSphere { .. } => ([0.0, std::f64::consts::PI], [0.0, TAU]),
        ModelKind::FlatTorus { sides } => ([0.0, sides[0]], [0.0, sides[1]]),
        _ => {
            let lo = m.warp().map(|w| w.domain_min()).unwrap_or(-4.0).max(-4.0);
            ([lo, 5.0], [0.0, TAU])
        }
    }
}

/// Figure of the flower in chart 0: horizontal axis `x1`, vertical `x0`.
/// Curves are broken where they wrap around a periodic coordinate; the
/// ends of warped models are shaded.
pub fn flower_svg(m: &ModelManifold, f: &Flower) -> Result<String> {
    let (r0, r1) = plot_window(m);
    let sx = (SVG_W - 2.0 * MARGIN) / (r1[1] - r1[0]);
    let sy = (SVG_H - 2.0 * MARGIN) / (r0[1] - r0[0]);
    let px = |c: Vec2| (MARGIN + (c[1] - r1[0]) * sx, MARGIN + (c[0] - r0[0]) * sy);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" viewBox="0 0 {SVG_W} {SVG_H}">"#
    );
    let _ = writeln!(
        s,
        r##"<rect x="{MARGIN}" y="{MARGIN}" width="{:.2}" height="{:.2}" fill="#ffffff" stroke="#999999"/>"##,
        SVG_W - 2.0 * MARGIN,
        SVG_H - 2.0 * MARGIN
    );
    for end in m.ends() {
        let (a, b) = if end.direction > 0.0 {
            (end.threshold, r0[1])
        } else {
            (r0[0], -end.threshold)
        };
        if b > a {
            let (_, y0) = px(Vec2::new(a.max(r0[0]), r1[0]));
            let (_, y1) = px(Vec2::new(b.min(r0[1]), r1[0]));
            let _ = writeln!(
                s,
                r##"<rect x="{MARGIN}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="#dde6f0"/>"##,
                SVG_W - 2.0 * MARGIN,
                y1 - y0
            );
        }
    }
    let periods = m.periods(0);
    let colors = ["#c0392b", "#2471a3", "#229954", "#b9770e", "#7d3c98", "#17a589", "#566573", "#a04000", "#1f618d", "#7b241c"];
    for (i, e) in f.edges().iter().enumerate() {
        let pts: Vec<Vec2> = e.sample(m, 4)?.iter().map(|p| m.display_coords(p)).collect();
        let mut runs: Vec<Vec<Vec2>> = vec![vec![]];
        for (j, p) in pts.iter().enumerate() {
            if j > 0 {
                let q = pts[j - 1];
                let wrapped = (0..2).any(|k| periods[k].is_some_and(|per| (p[k] - q[k]).abs() > 0.5 * per));
                if wrapped {
                    runs.push(vec![]);
                }
            }
            runs.last_mut().expect("nonempty").push(*p);
        }
        for run in runs.iter().filter(|r| r.len() > 1) {
            let path: Vec<String> = run
                .iter()
                .map(|p| {
                    let (x, y) = px(*p);
                    format!("{x:.2},{y:.2}")
                })
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
                path.join(" "),
                colors[i % colors.len()]
            );
        }
    }
    let (vx, vy) = px(m.display_coords(f.vertex()));
    let _ = writeln!(s, r##"<circle cx="{vx:.2}" cy="{vy:.2}" r="3" fill="#000000"/>"##);
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shortening::{flow, FlowConfig};

    fn wedge(m: &ModelManifold) -> Flower {
        let v = ChartPoint::new(0, 0.9, 0.9);
        let line = |dx: f64, dy: f64| {
            (1..5)
                .map(|i| ChartPoint::new(0, 0.9 + dx * i as f64 / 5.0, 0.9 + dy * i as f64 / 5.0))
                .collect::<Vec<_>>()
        };
        Flower::from_loops(m, v, &[line(1.0, 0.0), line(0.0, 1.0)]).unwrap()
    }

    #[test]
    fn flower_json_round_trip() {
        let m = ModelManifold::new(ModelKind::FlatTorus { sides: [1.0, 1.0] }).unwrap();
        let f = wedge(&m);
        let doc = FlowerDoc::new(&m, &f, Some(7), None);
        let text = doc.to_json();
        assert!(text.starts_with("{\n  \"schema\": \"flowerbed.flower/1\""));
        let back = FlowerDoc::from_json(&text).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.to_flower().unwrap(), f);
    }

    #[test]
    fn cage_json_round_trip() {
        let m = ModelManifold::new(ModelKind::FlatTorus { sides: [1.0, 1.0] }).unwrap();
        let c = Cage::from_vertices(&m, &[ChartPoint::new(0, 0.1, 0.1), ChartPoint::new(0, 0.3, 0.2), ChartPoint::new(0, 0.2, 0.4)], 2).unwrap();
        let doc = CageDoc::new(&m, &c, None);
        let back: CageDoc = serde_json::from_str(&doc.to_json()).unwrap();
        assert_eq!(back.to_cage().unwrap(), c);
    }

    #[test]
    fn trace_csv_layout() {
        let m = ModelManifold::new(ModelKind::FlatTorus { sides: [1.0, 1.0] }).unwrap();
        let tr = flow(&m, &wedge(&m), &FlowConfig::for_model(&m)).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &tr, 42).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# rng_seed=42\niteration,total_length,defect_norm,vertex_chart,vertex_x0,vertex_x1\n"));
        let (header, rows) = read_csv(&text).unwrap();
        assert_eq!(header.len(), 6);
        assert_eq!(rows.len(), tr.records.len());
    }

    #[test]
    fn svg_breaks_at_wraps() {
        let m = ModelManifold::new(ModelKind::FlatTorus { sides: [1.0, 1.0] }).unwrap();
        let svg = flower_svg(&m, &wedge(&m)).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        // each loop crosses the fundamental domain once
        assert_eq!(svg.matches("<polyline").count(), 4);
        let cusp = ModelManifold::new(ModelKind::from_name("double-cusp", None).unwrap()).unwrap();
        let f = Flower::point(ChartPoint::new(0, 0.0, 1.0), 1);
        let svg = flower_svg(&cusp, &f).unwrap();
        assert_eq!(svg.matches("fill=\"#dde6f0\"").count(), 2);
    }
}
