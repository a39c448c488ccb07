//! Config-driven experiments: seed flowers (explicitly, from cages, by
//! winding class or at random), flow them, certify the results and write
//! the artifacts.
//!
//! A config is TOML with a fixed schema; unknown keys are errors. Runs are
//! dispatched to a worker pool and written by one collector in run order,
//! so artifacts are byte-identical across runs and worker counts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{certify, BoundReport};
use crate::geodesics::exp_map;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::manifold::{ChartPoint, ModelKind, ModelManifold, Vec2};
use crate::nets::{cage_to_flower, measure_stationarity, Cage, Flower};
use crate::report::{flower_svg, write_trace_csv, FlowerDoc};
use crate::shortening::{flow, FlowConfig, FlowOutcome};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Emit {
    #[serde(default = "yes")]
    pub csv: bool,
    #[serde(default = "yes")]
    pub json: bool,
    #[serde(default = "yes")]
    pub svg: bool,
}

fn yes() -> bool {
    true
}

impl Default for Emit {
    fn default() -> Self {
        Emit {
            csv: true,
            json: true,
            svg: true,
        }
    }
}

/// Optional overrides of the model's default [`FlowConfig`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_subdiv: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertex_step0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backtrack_factor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_v: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_e: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contraction_radius: Option<f64>,
}

impl FlowOverrides {
    pub fn is_empty(&self) -> bool {
        *self == FlowOverrides::default()
    }

    pub fn apply(&self, mut cfg: FlowConfig) -> FlowConfig {
        if self.k_subdiv.is_some() {
            cfg.k_subdiv = self.k_subdiv;
        }
        cfg.vertex_step0 = self.vertex_step0.unwrap_or(cfg.vertex_step0);
        cfg.backtrack_factor = self.backtrack_factor.unwrap_or(cfg.backtrack_factor);
        cfg.max_iters = self.max_iters.unwrap_or(cfg.max_iters);
        cfg.tol_v = self.tol_v.unwrap_or(cfg.tol_v);
        cfg.tol_e = self.tol_e.unwrap_or(cfg.tol_e);
        cfg.contraction_radius = self.contraction_radius.unwrap_or(cfg.contraction_radius);
        cfg
    }
}

/// One loop of a `winding` seed: it leaves the vertex, runs once along
/// `winding` (in units of the chart periods), displaced sideways by
/// `bump · sin(2π · harmonic · s)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindingLoop {
    pub winding: [i32; 2],
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default)]
    pub bump: f64,
    #[serde(default = "default_harmonic")]
    pub harmonic: u32,
}

fn default_points() -> usize {
    16
}

fn default_harmonic() -> u32 {
    1
}

fn default_cage_points() -> usize {
    4
}

fn default_loops() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SeedSpec {
    /// Explicit loops: interior points of each loop, in chart `chart`.
    Flower {
        #[serde(default)]
        chart: u8,
        vertex: [f64; 2],
        loops: Vec<Vec<[f64; 2]>>,
        #[serde(default)]
        noise: f64,
    },
    /// A cage on the given vertices, collapsed onto `base`.
    Cage {
        #[serde(default)]
        chart: u8,
        vertices: Vec<[f64; 2]>,
        #[serde(default)]
        base: usize,
        #[serde(default = "default_cage_points")]
        points_per_edge: usize,
        #[serde(default)]
        noise: f64,
    },
    /// Loops in prescribed winding classes of the periodic chart coordinates.
    Winding {
        #[serde(default)]
        chart: u8,
        vertex: [f64; 2],
        loops: Vec<WindingLoop>,
        #[serde(default)]
        noise: f64,
    },
    /// `count` random small flowers at random vertices.
    Random {
        count: usize,
        #[serde(default = "default_loops")]
        loops: usize,
        radius: f64,
        #[serde(default = "default_points")]
        points: usize,
    },
}

impl SeedSpec {
    pub fn label(&self) -> &'static str {
        match self {
            SeedSpec::Flower { .. } => "flower",
            SeedSpec::Cage { .. } => "cage",
            SeedSpec::Winding { .. } => "winding",
            SeedSpec::Random { .. } => "random",
        }
    }

    fn runs(&self) -> usize {
        match self {
            SeedSpec::Random { count, .. } => *count,
            _ => 1,
        }
    }

    fn check(&self, m: &ModelManifold) -> std::result::Result<(), String> {
        let chart_ok = |c: u8| {
            if c < m.chart_count() {
                Ok(())
            } else {
                Err(format!("chart {c} does not exist (model has {})", m.chart_count()))
            }
        };
        let nonneg = |x: f64, what: &str| {
            if x >= 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(format!("{what} must be a nonnegative number"))
            }
        };
        match self {
            SeedSpec::Flower { chart, loops, noise, .. } => {
                chart_ok(*chart)?;
                nonneg(*noise, "noise")?;
                if loops.is_empty() || loops.iter().any(|l| l.is_empty()) {
                    return Err("every flower needs at least one loop with at least one interior point".into());
                }
            }
            SeedSpec::Cage {
                chart,
                vertices,
                base,
                points_per_edge,
                noise,
            } => {
                chart_ok(*chart)?;
                nonneg(*noise, "noise")?;
                if vertices.len() < 2 {
                    return Err("a cage needs at least two vertices".into());
                }
                if *base >= vertices.len() {
                    return Err(format!("base {base} is not a vertex index"));
                }
                if *points_per_edge == 0 {
                    return Err("points_per_edge must be positive".into());
                }
            }
            SeedSpec::Winding {
                chart, loops, noise, ..
            } => {
                chart_ok(*chart)?;
                nonneg(*noise, "noise")?;
                if loops.is_empty() {
                    return Err("a winding seed needs at least one loop".into());
                }
                let periods = m.periods(*chart);
                for l in loops {
                    if l.points < 2 {
                        return Err("a winding loop needs at least two points".into());
                    }
                    if l.winding == [0, 0] {
                        return Err("winding [0, 0] is not a loop class".into());
                    }
                    for k in 0..2 {
                        if l.winding[k] != 0 && periods[k].is_none() {
                            return Err(format!("coordinate {k} of chart {chart} is not periodic"));
                        }
                    }
                }
            }
            SeedSpec::Random {
                count,
                loops,
                radius,
                points,
            } => {
                if *count == 0 {
                    return Err("count must be at least 1".into());
                }
                if *loops == 0 || *points < 2 {
                    return Err("random seeds need loops >= 1 and points >= 2".into());
                }
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err("radius must be positive".into());
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub rng_seed: u64,
    /// Relative paths are resolved against the config file's directory.
    pub output_dir: PathBuf,
    /// Worker threads; 0 uses every available processor.
    #[serde(default)]
    pub workers: usize,
    pub model: ModelKind,
    #[serde(default)]
    pub emit: Emit,
    #[serde(default, skip_serializing_if = "FlowOverrides::is_empty")]
    pub flow: FlowOverrides,
    pub seeds: Vec<SeedSpec>,
}

/// Line (1-based) of the `index`-th `[[seeds]]` header, if present.
fn seed_line(source: &str, index: usize) -> Option<usize> {
    source
        .lines()
        .enumerate()
        .filter(|(_, l)| l.trim_start().starts_with("[[seeds]]"))
        .nth(index)
        .map(|(i, _)| i + 1)
}

impl ExperimentConfig {
    /// Parses and validates a config. Errors name the offending line.
    pub fn parse(source: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(source).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
        cfg.validate_with_source(Some(source))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        if cfg.output_dir.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.output_dir = dir.join(&cfg.output_dir);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs serialize")
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_with_source(None)
    }

    fn validate_with_source(&self, source: Option<&str>) -> Result<()> {
        let m = ModelManifold::new(self.model.clone()).map_err(|e| Error::Config(format!("model: {e}")))?;
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one [[seeds]] entry is required".into()));
        }
        FlowOverrides::apply(&self.flow, FlowConfig::for_model(&m))
            .check()
            .map_err(|e| Error::Config(format!("[flow]: {e}")))?;
        for (i, s) in self.seeds.iter().enumerate() {
            if let Err(msg) = s.check(&m) {
                let at = source
                    .and_then(|src| seed_line(src, i))
                    .map(|l| format!("line {l}: "))
                    .unwrap_or_default();
                return Err(Error::Config(format!("{at}seeds[{i}] ({}): {msg}", s.label())));
            }
        }
        Ok(())
    }

    pub fn flow_config(&self, m: &ModelManifold) -> FlowConfig {
        self.flow.apply(FlowConfig::for_model(m))
    }
}

fn jitter<R: Rng>(rng: &mut R, p: [f64; 2], noise: f64) -> Vec2 {
    if noise > 0.0 {
        Vec2::new(p[0] + rng.gen_range(-noise..=noise), p[1] + rng.gen_range(-noise..=noise))
    } else {
        Vec2::new(p[0], p[1])
    }
}

/// A random loop through `v`: a closed ellipse-like polygon of size up to
/// `radius` in `v`'s tangent plane (chart components), mapped by `exp_v` so
/// that it stays on the manifold whichever chart `v` lives in.
fn random_loop<R: Rng>(m: &ModelManifold, rng: &mut R, v: &ChartPoint, radius: f64, points: usize) -> Result<Vec<ChartPoint>> {
    let rho = radius * rng.gen_range(0.3..1.0);
    let aspect = rng.gen_range(0.4..1.0);
    let alpha: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let (s, c) = alpha.sin_cos();
    (1..points)
        .map(|j| {
            let th = std::f64::consts::TAU * j as f64 / points as f64;
            let local = Vec2::new(rho * (th.cos() - 1.0), aspect * rho * th.sin());
            let d = Vec2::new(c * local[0] - s * local[1], s * local[0] + c * local[1]);
            let wobble = Vec2::new(rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1)) * rho;
            exp_map(m, v, &(d + wobble))
        })
        .collect()
}

/// A random flower with `loops` loops of size up to `radius` at a random vertex.
pub fn random_flower<R: Rng>(m: &ModelManifold, rng: &mut R, loops: usize, radius: f64, points: usize) -> Result<Flower> {
    let v = m.sample_point(rng);
    let ls = (0..loops).map(|_| random_loop(m, rng, &v, radius, points)).collect::<Result<Vec<_>>>()?;
    Flower::from_loops(m, v, &ls)
}

/// What a run starts from: a flower, or a cage that collapses to one.
#[derive(Clone, Debug)]
pub enum Seed {
    Flower(Flower),
    Cage { cage: Cage, base: usize },
}

/// Builds the seed geometry of run `k` of a spec.
pub fn build_seed<R: Rng>(m: &ModelManifold, spec: &SeedSpec, rng: &mut R) -> Result<Seed> {
    match spec {
        SeedSpec::Flower {
            chart,
            vertex,
            loops,
            noise,
        } => {
            let v = ChartPoint {
                chart: *chart,
                coords: Vec2::new(vertex[0], vertex[1]),
            };
            let ls: Vec<Vec<ChartPoint>> = loops
                .iter()
                .map(|l| {
                    l.iter()
                        .map(|p| ChartPoint {
                            chart: *chart,
                            coords: jitter(rng, *p, *noise),
                        })
                        .collect()
                })
                .collect();
            Ok(Seed::Flower(Flower::from_loops(m, v, &ls)?))
        }
        SeedSpec::Cage {
            chart,
            vertices,
            base,
            points_per_edge,
            noise,
        } => {
            let vs: Vec<ChartPoint> = vertices
                .iter()
                .map(|p| ChartPoint {
                    chart: *chart,
                    coords: jitter(rng, *p, *noise),
                })
                .collect();
            Ok(Seed::Cage {
                cage: Cage::from_vertices(m, &vs, *points_per_edge)?,
                base: *base,
            })
        }
        SeedSpec::Winding {
            chart,
            vertex,
            loops,
            noise,
        } => {
            let v = ChartPoint {
                chart: *chart,
                coords: Vec2::new(vertex[0], vertex[1]),
            };
            let periods = m.periods(*chart);
            let ls: Vec<Vec<ChartPoint>> = loops
                .iter()
                .map(|l| {
                    let span = Vec2::new(
                        l.winding[0] as f64 * periods[0].unwrap_or(0.0),
                        l.winding[1] as f64 * periods[1].unwrap_or(0.0),
                    );
                    let normal = Vec2::new(-span[1], span[0]).normalize();
                    (1..l.points)
                        .map(|j| {
                            let s = j as f64 / l.points as f64;
                            let bump = l.bump * (std::f64::consts::TAU * l.harmonic as f64 * s).sin();
                            let base = v.coords + span * s + normal * bump;
                            ChartPoint {
                                chart: *chart,
                                coords: jitter(rng, [base[0], base[1]], *noise),
                            }
                        })
                        .collect()
                })
                .collect();
            Ok(Seed::Flower(Flower::from_loops(m, v, &ls)?))
        }
        SeedSpec::Random {
            loops, radius, points, ..
        } => Ok(Seed::Flower(random_flower(m, rng, *loops, *radius, *points)?)),
    }
}

impl Seed {
    pub fn into_flower(self, m: &ModelManifold) -> Result<Flower> {
        match self {
            Seed::Flower(f) => Ok(f),
            Seed::Cage { cage, base } => cage_to_flower(m, &cage, base),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: usize,
    pub kind: String,
    pub rng_seed: u64,
    pub outcome: String,
    pub iterations: usize,
    pub total_length: f64,
    pub defect_norm: f64,
    pub edge_residual: f64,
    pub edges: usize,
    /// `None` when the flower is not a certified geodesic flower.
    pub satisfied: Option<bool>,
    pub error: Option<String>,
}

/// Everything one run produced, before it is written out.
struct RunArtifacts {
    record: RunRecord,
    trace_csv: Option<Vec<u8>>,
    flower_json: Option<String>,
    svg: Option<String>,
    bounds_json: Option<String>,
}

struct Job {
    run: usize,
    seed: usize,
    rng_seed: u64,
}

fn execute(cfg: &ExperimentConfig, m: &ModelManifold, fc: &FlowConfig, job: &Job) -> RunArtifacts {
    let spec = &cfg.seeds[job.seed];
    let mut record = RunRecord {
        run: job.run,
        seed: job.seed,
        kind: spec.label().into(),
        rng_seed: job.rng_seed,
        outcome: "Error".into(),
        iterations: 0,
        total_length: f64::NAN,
        defect_norm: f64::NAN,
        edge_residual: f64::NAN,
        edges: 0,
        satisfied: None,
        error: None,
    };
    let mut out = RunArtifacts {
        record: record.clone(),
        trace_csv: None,
        flower_json: None,
        svg: None,
        bounds_json: None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(job.rng_seed);
    let result = build_seed(m, spec, &mut rng)
        .and_then(|s| s.into_flower(m))
        .and_then(|f| flow(m, &f, fc));
    let trace = match result {
        Ok(t) => t,
        Err(e) => {
            record.error = Some(e.to_string());
            out.record = record;
            return out;
        }
    };
    let measured = measure_stationarity(m, &trace.flower).ok();
    let cert = match &trace.outcome {
        FlowOutcome::GeodesicFlower(c) => Some(*c),
        _ => None,
    };
    record.outcome = trace.outcome.name().into();
    record.iterations = trace.records.len() - 1;
    record.total_length = trace.final_length();
    record.defect_norm = measured.map_or(f64::NAN, |c| c.defect_norm);
    record.edge_residual = measured.map_or(f64::NAN, |c| c.max_edge_residual);
    record.edges = trace.flower.edge_count();
    let report: Option<BoundReport> = cert.and_then(|c| certify(m, &trace.flower, &c).ok());
    record.satisfied = report.as_ref().map(|r| r.satisfied);
    if cfg.emit.csv {
        let mut buf = Vec::new();
        if write_trace_csv(&mut buf, &trace, job.rng_seed).is_ok() {
            out.trace_csv = Some(buf);
        }
    }
    if cfg.emit.json {
        out.flower_json = Some(FlowerDoc::new(m, &trace.flower, Some(job.rng_seed), cert).to_json());
        out.bounds_json = report.as_ref().map(BoundReport::to_json);
    }
    if cfg.emit.svg && m.dimension() == 2 {
        out.svg = flower_svg(m, &trace.flower).ok();
    }
    out.record = record;
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub records: Vec<RunRecord>,
}

impl RunSummary {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| r.error.is_some()).count()
    }
}

fn fmt_opt_bool(b: Option<bool>) -> String {
    b.map_or_else(|| "n/a".into(), |b| b.to_string())
}

fn summary_csv(cfg: &ExperimentConfig, records: &[RunRecord]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    std::io::Write::write_all(&mut buf, format!("# rng_seed={}\n", cfg.rng_seed).as_bytes())?;
    let mut w = csv::Writer::from_writer(buf);
    let err = |e: csv::Error| Error::Io(e.to_string());
    w.write_record([
        "run", "seed", "kind", "rng_seed", "outcome", "iterations", "total_length", "defect_norm", "edge_residual", "edges",
        "satisfied", "error",
    ])
    .map_err(err)?;
    for r in records {
        w.write_record([
            r.run.to_string(),
            r.seed.to_string(),
            r.kind.clone(),
            r.rng_seed.to_string(),
            r.outcome.clone(),
            r.iterations.to_string(),
            r.total_length.to_string(),
            r.defect_norm.to_string(),
            r.edge_residual.to_string(),
            r.edges.to_string(),
            fmt_opt_bool(r.satisfied),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(err)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

fn summary_table(cfg: &ExperimentConfig, records: &[RunRecord]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "model: {}  rng_seed: {}", cfg.model.name(), cfg.rng_seed);
    let _ = writeln!(
        s,
        "{:>4} {:<8} {:<18} {:>6} {:>14} {:>11} {:>6} {:>10}",
        "run", "kind", "outcome", "iters", "length", "defect", "edges", "satisfied"
    );
    for r in records {
        let _ = writeln!(
            s,
            "{:>4} {:<8} {:<18} {:>6} {:>14.6} {:>11.3e} {:>6} {:>10}",
            r.run,
            r.kind,
            r.outcome,
            r.iterations,
            r.total_length,
            r.defect_norm,
            r.edges,
            fmt_opt_bool(r.satisfied)
        );
        if let Some(e) = &r.error {
            let _ = writeln!(s, "     error: {e}");
        }
    }
    s
}

fn io_at(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::Io(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(io_at(path))
}

fn jobs(cfg: &ExperimentConfig) -> Vec<Job> {
    let mut master = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut out = Vec::new();
    for (seed, spec) in cfg.seeds.iter().enumerate() {
        for _ in 0..spec.runs() {
            out.push(Job {
                run: out.len(),
                seed,
                rng_seed: master.next_u64(),
            });
        }
    }
    out
}

/// Runs every seed of the experiment and writes its artifacts.
pub fn run(cfg: &ExperimentConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let m = ModelManifold::new(cfg.model.clone())?;
    let fc = cfg.flow_config(&m);
    let jobs = jobs(cfg);
    let artifacts = in_pool(cfg.workers, || Exec::Parallel.map(&jobs, |j| execute(cfg, &m, &fc, j)))?;

    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(io_at(dir))?;
    for a in &artifacts {
        let stem = format!("run_{:03}", a.record.run);
        if let Some(b) = &a.trace_csv {
            write_file(&dir.join(format!("{stem}_trace.csv")), b)?;
        }
        if let Some(j) = &a.flower_json {
            write_file(&dir.join(format!("{stem}_flower.json")), j.as_bytes())?;
        }
        if let Some(j) = &a.bounds_json {
            write_file(&dir.join(format!("{stem}_bounds.json")), j.as_bytes())?;
        }
        if let Some(svg) = &a.svg {
            write_file(&dir.join(format!("{stem}.svg")), svg.as_bytes())?;
        }
    }
    let records: Vec<RunRecord> = artifacts.into_iter().map(|a| a.record).collect();
    if cfg.emit.csv {
        write_file(&dir.join("summary.csv"), &summary_csv(cfg, &records)?)?;
    }
    write_file(&dir.join("summary.txt"), summary_table(cfg, &records).as_bytes())?;
    Ok(RunSummary {
        output_dir: dir.clone(),
        records,
    })
}

#[cfg(feature = "parallel")]
fn in_pool<R: Send, F: FnOnce() -> R + Send>(workers: usize, f: F) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    Ok(pool.install(f))
}

#[cfg(not(feature = "parallel"))]
fn in_pool<R: Send, F: FnOnce() -> R + Send>(_workers: usize, f: F) -> Result<R> {
    Ok(f())
}
