//! Parameter sweeps: per-sector solves with checkpoints, observables on a
//! target state, and the results table plus run manifest.
//!
//! Output directory layout:
//!
//! ```text
//! results.csv           one row per (point, sector, level, observable)
//! manifest.json         spec, cluster, solver settings, versions, totals
//! checkpoints/<point>/  one JSON record per finished task
//! maps/<point>_*.json   per-bond correlation maps
//! ```

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::{Observable, ResolvedSpec, SweepSpec, TargetState};
use crate::coverings::{enumerate_valid_coverings, CoveringProblem};
use crate::eigensolver::SolverOptions;
use crate::error::{Error, Result};
use crate::hamiltonian::{HamiltonianOperator, ModelParams};
use crate::hilbert::SectorBasis;
use crate::lattice::{Cluster, Vec2};
use crate::observables::{
    bond_map, dimer_correlations, fss_extrapolate, structure_factor_report, CorrelationPath, DimerCorrelationReport,
    Measurement,
};
use crate::spectrum::{energy_differences, ModelContext, PointGroupLabel, Sector, SpectrumResult};
use crate::vbs::{ground_space_overlap, ss_states, winding_patterns_16, DimerClass, VbsState};

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;
pub const CSV_SCHEMA: &str = "plaqed-results/1";
pub const CSV_COLUMNS: [&str; 10] = [
    "cluster",
    "j",
    "gamma",
    "delta",
    "sz",
    "k",
    "level",
    "observable",
    "value",
    "status",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    /// Computed from the sectors that succeeded while others failed.
    Partial,
    Failed,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Partial => "partial",
            Status::Failed => "failed",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub cluster: String,
    pub j: Option<f64>,
    pub gamma: Option<f64>,
    pub delta: Option<f64>,
    pub sz: Option<f64>,
    pub k: Option<String>,
    pub level: Option<usize>,
    pub observable: String,
    pub value: f64,
    pub status: Status,
}

impl Row {
    fn fields(&self) -> [String; 10] {
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        [
            self.cluster.clone(),
            opt(self.j),
            opt(self.gamma),
            opt(self.delta),
            opt(self.sz),
            self.k.clone().unwrap_or_default(),
            self.level.map(|l| l.to_string()).unwrap_or_default(),
            self.observable.clone(),
            format_value(self.value),
            self.status.as_str().into(),
        ]
    }
}

/// Twelve significant digits.
pub fn format_value(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.11e}")
    } else {
        "nan".into()
    }
}

/// One `(gamma, delta)` point.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Point {
    j: f64,
    gamma: f64,
    delta: f64,
}

impl Point {
    fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.j, self.gamma, self.delta)
    }

    fn key(&self) -> String {
        format!("g{}_d{}", self.gamma, self.delta)
    }

    fn row(&self, cluster: &str, observable: impl Into<String>, value: f64, status: Status) -> Row {
        Row {
            cluster: cluster.into(),
            j: Some(self.j),
            gamma: Some(self.gamma),
            delta: Some(self.delta),
            sz: None,
            k: None,
            level: None,
            observable: observable.into(),
            value,
            status,
        }
    }
}

/// Everything a checkpoint must agree on to be reused.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct TaskKey {
    version: String,
    spanning_vectors: [Vec2; 2],
    j: f64,
    gamma: f64,
    delta: f64,
    task: String,
    levels: usize,
    tol: f64,
    degeneracy_tol: f64,
    seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct Checkpoint<T> {
    key: TaskKey,
    data: T,
}

/// Levels of one sector as stored in a checkpoint (no vectors).
#[derive(Clone, Debug, Serialize, Deserialize)]
struct SectorRecord {
    twice_sz: i64,
    k: [i64; 2],
    eigenvalues: Vec<f64>,
    residuals: Vec<f64>,
    labels: Vec<Option<String>>,
    matvecs: usize,
    error: Option<String>,
}

struct Store {
    dir: PathBuf,
}

impl Store {
    fn path(&self, point: &Point, task: &str) -> PathBuf {
        self.dir.join("checkpoints").join(point.key()).join(format!("{task}.json"))
    }

    fn load<T: DeserializeOwned>(&self, point: &Point, key: &TaskKey) -> Option<T> {
        let text = fs::read_to_string(self.path(point, &key.task)).ok()?;
        let c: Checkpoint<T> = serde_json::from_str(&text).ok()?;
        (c.key == *key).then_some(c.data)
    }

    fn save<T: Serialize>(&self, point: &Point, key: &TaskKey, data: T) -> Result<()> {
        let path = self.path(point, &key.task);
        fs::create_dir_all(path.parent().expect("checkpoint directory"))?;
        let tmp = path.with_extension("json.tmp");
        let text = serde_json::to_string(&Checkpoint { key: key.clone(), data }).map_err(io_error)?;
        fs::write(&tmp, text)?;
        fs::rename(&tmp, &path)?;
        Ok(())
    }
}

fn io_error(e: impl std::fmt::Display) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

/// What a finished sweep reports back.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub points: usize,
    pub rows: usize,
    pub failed_rows: usize,
    pub reused_checkpoints: usize,
}

impl SweepSummary {
    pub fn complete(&self) -> bool {
        self.failed_rows == 0
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    schema_version: u32,
    csv_schema: &'a str,
    columns: [&'a str; 10],
    tool: &'a str,
    version: &'a str,
    cluster: ClusterInfo,
    spec: &'a SweepSpec,
    solver: SolverInfo,
    workers: usize,
    summary: Option<&'a SweepSummary>,
}

#[derive(Serialize)]
struct ClusterInfo {
    name: String,
    n_sites: usize,
    spanning_vectors: [Vec2; 2],
}

#[derive(Serialize)]
struct SolverInfo {
    tol: f64,
    degeneracy_tol: f64,
    seed: u64,
    max_basis: usize,
    matvecs_per_pair: usize,
    dense_threshold: usize,
}

/// Cluster contexts live for the whole sweep so cached bases and matrices are
/// reused across parameter points.
struct Engine<'a> {
    r: &'a ResolvedSpec,
    opts: SolverOptions,
    ctx: Arc<ModelContext>,
    fss: Vec<(String, Arc<ModelContext>)>,
    store: Store,
    reused: std::sync::atomic::AtomicUsize,
}

/// Run a sweep into `out`, using `workers` threads (0 = rayon default).
pub fn run_sweep(spec: &SweepSpec, out: &Path, workers: usize) -> Result<SweepSummary> {
    let r = spec.resolve()?;
    fs::create_dir_all(out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(io_error)?;
    let workers = pool.current_num_threads();
    write_manifest(&r, out, workers, None)?;
    let summary = pool.install(|| sweep_inner(&r, out))?;
    write_manifest(&r, out, workers, Some(&summary))?;
    Ok(summary)
}

fn write_manifest(r: &ResolvedSpec, out: &Path, workers: usize, summary: Option<&SweepSummary>) -> Result<()> {
    let opts = r.spec.solver_options();
    let m = Manifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        csv_schema: CSV_SCHEMA,
        columns: CSV_COLUMNS,
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        cluster: ClusterInfo {
            name: r.spec.cluster.clone(),
            n_sites: r.cluster.n_sites(),
            spanning_vectors: r.cluster.spanning_vectors(),
        },
        spec: &r.spec,
        solver: SolverInfo {
            tol: opts.tol,
            degeneracy_tol: opts.degeneracy_tol,
            seed: opts.seed,
            max_basis: opts.max_basis,
            matvecs_per_pair: opts.matvecs_per_pair,
            dense_threshold: opts.dense_threshold,
        },
        workers,
        summary,
    };
    let text = serde_json::to_string_pretty(&m).map_err(io_error)?;
    fs::write(out.join("manifest.json"), text + "\n")?;
    Ok(())
}

fn sweep_inner(r: &ResolvedSpec, out: &Path) -> Result<SweepSummary> {
    let engine = Engine {
        r,
        opts: r.spec.solver_options(),
        ctx: Arc::new(ModelContext::new(r.cluster.clone())),
        fss: r
            .fss_clusters
            .iter()
            .skip(1)
            .map(|(name, c)| (name.clone(), Arc::new(ModelContext::new(c.clone()))))
            .collect(),
        store: Store { dir: out.to_path_buf() },
        reused: Default::default(),
    };
    let mut writer = csv::Writer::from_path(out.join("results.csv")).map_err(io_error)?;
    writer.write_record(CSV_COLUMNS).map_err(io_error)?;
    let mut rows_total = 0;
    let mut failed = 0;
    let mut emit = |rows: Vec<Row>, writer: &mut csv::Writer<fs::File>| -> Result<()> {
        for row in rows {
            if row.status == Status::Failed {
                failed += 1;
            }
            rows_total += 1;
            writer.write_record(row.fields()).map_err(io_error)?;
        }
        writer.flush()?;
        Ok(())
    };
    if r.spec.has(Observable::Coverings) {
        emit(engine.coverings_rows()?, &mut writer)?;
    }
    let mut points = 0;
    for &gamma in &r.gammas {
        for &delta in &r.deltas {
            let p = Point {
                j: r.spec.j,
                gamma,
                delta,
            };
            emit(engine.point_rows(&p)?, &mut writer)?;
            points += 1;
        }
    }
    Ok(SweepSummary {
        points,
        rows: rows_total,
        failed_rows: failed,
        reused_checkpoints: engine.reused.load(std::sync::atomic::Ordering::Relaxed),
    })
}

/// Lowest level whose characters are all one (the identity representation).
pub fn symmetric_level(r: &SpectrumResult) -> Option<usize> {
    r.point_group_labels.iter().position(|l| {
        l.as_ref().is_some_and(|l| {
            l.characters
                .iter()
                .all(|(_, c)| (c[0] - 1.0).abs() < 1e-6 && c[1].abs() < 1e-6)
        })
    })
}

/// Reference product states compared with the ground space: the four
/// Shastry-Sutherland states, plus the two axial coverings on the 4 x 4 torus.
pub fn reference_states(cluster: &Cluster) -> Result<Vec<VbsState>> {
    if !cluster.has_even_periods() {
        return Ok(Vec::new());
    }
    let mut states = ss_states(cluster)?;
    if let Ok(extra) = winding_patterns_16(cluster) {
        states.extend(extra.into_iter().map(|p| VbsState::new(cluster, p)));
    }
    Ok(states)
}

impl Engine<'_> {
    fn name(&self) -> &str {
        &self.r.spec.cluster
    }

    fn key(&self, p: &Point, task: String) -> TaskKey {
        TaskKey {
            version: env!("CARGO_PKG_VERSION").into(),
            spanning_vectors: self.r.cluster.spanning_vectors(),
            j: p.j,
            gamma: p.gamma,
            delta: p.delta,
            task,
            levels: self.r.spec.levels,
            tol: self.opts.tol,
            degeneracy_tol: self.opts.degeneracy_tol,
            seed: self.opts.seed,
        }
    }

    /// Load a checkpointed task or compute and store it.
    fn cached<T, F>(&self, p: &Point, task: String, f: F) -> Result<T>
    where
        T: Serialize + DeserializeOwned,
        F: FnOnce() -> Result<T>,
    {
        let key = self.key(p, task);
        if let Some(t) = self.store.load(p, &key) {
            self.reused.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
            return Ok(t);
        }
        let t = f()?;
        self.store.save(p, &key, &t)?;
        Ok(t)
    }

    fn coverings_rows(&self) -> Result<Vec<Row>> {
        let c = &self.r.cluster;
        let found = enumerate_valid_coverings(&CoveringProblem::new(c));
        let h0 = HamiltonianOperator::build_operator(c, &ModelParams::new(1.0, 0.0, 1.0)?)?;
        let worst = found
            .iter()
            .map(|p| VbsState::new(c, p.clone()).residual(&h0))
            .fold(0.0, f64::max);
        let diagonal = found
            .iter()
            .filter(|p| p.classes.iter().all(|&k| k == DimerClass::Diagonal))
            .count();
        let row = |observable: &str, value: f64| Row {
            cluster: self.name().into(),
            j: None,
            gamma: None,
            delta: None,
            sz: None,
            k: None,
            level: None,
            observable: observable.into(),
            value,
            status: Status::Ok,
        };
        Ok(vec![
            row("valid_coverings", found.len() as f64),
            row("valid_coverings_diagonal", diagonal as f64),
            row("valid_coverings_other", (found.len() - diagonal) as f64),
            row("covering_residual_max", worst),
        ])
    }

    fn sector_record(&self, p: &Point, sector: Sector) -> Result<SectorRecord> {
        let k = sector.momentum.expect("momentum sector").numerators();
        let task = format!("sz{}_k{}_{}", sector.twice_sz, k[0], k[1]);
        self.cached(p, task, || {
            let params = p.params()?;
            Ok(match self.ctx.solve(&params, sector, self.r.spec.levels, &self.opts) {
                Ok(res) => SectorRecord {
                    twice_sz: sector.twice_sz,
                    k,
                    labels: res
                        .point_group_labels
                        .iter()
                        .map(|l| l.as_ref().map(|l| l.name.clone()))
                        .collect(),
                    eigenvalues: res.eigenvalues,
                    residuals: res.residual_norms,
                    matvecs: res.matvecs,
                    error: None,
                },
                Err(e) => SectorRecord {
                    twice_sz: sector.twice_sz,
                    k,
                    eigenvalues: Vec::new(),
                    residuals: Vec::new(),
                    labels: Vec::new(),
                    matvecs: 0,
                    error: Some(e.to_string()),
                },
            })
        })
    }

    fn point_rows(&self, p: &Point) -> Result<Vec<Row>> {
        let spec = &self.r.spec;
        let mut rows = Vec::new();
        if let Err(e) = p.params() {
            return Err(Error::InvalidSpec(e.to_string()));
        }
        let need_levels = spec.has(Observable::Energies) || spec.has(Observable::Gaps);
        let mut records: Vec<(Sector, SectorRecord)> = Vec::new();
        if need_levels {
            let sectors: Vec<Sector> = spec
                .sz
                .iter()
                .flat_map(|&sz| self.r.momenta.iter().map(move |&k| Sector::new(sz, Some(k))))
                .collect();
            let done: Vec<Result<SectorRecord>> = sectors.par_iter().map(|&s| self.sector_record(p, s)).collect();
            for (s, rec) in sectors.into_iter().zip(done) {
                records.push((s, rec?));
            }
        }
        if spec.has(Observable::Energies) {
            for (s, rec) in &records {
                rows.extend(self.level_rows(p, *s, rec));
            }
        }
        if spec.has(Observable::Gaps) {
            rows.extend(self.gap_rows(p, &records, &self.opts));
        }
        let wants_target = spec.has(Observable::StructureFactor)
            || spec.has(Observable::DimerCorrelations)
            || spec.has(Observable::Fss);
        if wants_target {
            rows.extend(self.target_rows(p)?);
        }
        if spec.has(Observable::VbsOverlap) {
            rows.extend(self.overlap_rows(p)?);
        }
        Ok(rows)
    }

    fn level_rows(&self, p: &Point, s: Sector, rec: &SectorRecord) -> Vec<Row> {
        let base = Row {
            sz: Some(s.sz()),
            k: Some(s.momentum_label()),
            ..p.row(self.name(), "energy", f64::NAN, Status::Failed)
        };
        if rec.error.is_some() {
            return vec![base];
        }
        let mut rows = Vec::new();
        for (level, &e) in rec.eigenvalues.iter().enumerate() {
            rows.push(Row {
                level: Some(level),
                value: e,
                status: Status::Ok,
                ..base.clone()
            });
            let first_of_multiplet = level == 0 || !self.opts.degenerate(rec.eigenvalues[level - 1], e);
            if let (true, Some(Some(name))) = (first_of_multiplet, rec.labels.get(level)) {
                let dim = rec.eigenvalues[level..]
                    .iter()
                    .take_while(|&&x| self.opts.degenerate(x, e))
                    .count();
                rows.push(Row {
                    level: Some(level),
                    observable: format!("irrep={name}"),
                    value: dim as f64,
                    status: Status::Ok,
                    ..base.clone()
                });
            }
        }
        rows
    }

    fn gap_rows(&self, p: &Point, records: &[(Sector, SectorRecord)], opts: &SolverOptions) -> Vec<Row> {
        let as_result = |s: &Sector, rec: &SectorRecord| SpectrumResult {
            sector: *s,
            eigenvalues: rec.eigenvalues.clone(),
            eigenvectors: Vec::new(),
            residual_norms: rec.residuals.clone(),
            point_group_labels: rec
                .labels
                .iter()
                .map(|l| {
                    l.as_ref().map(|n| PointGroupLabel {
                        name: n.clone(),
                        characters: Vec::new(),
                    })
                })
                .collect(),
            matvecs: rec.matvecs,
            method: crate::eigensolver::Method::Lanczos,
            seed: opts.seed,
        };
        let any_failed = records.iter().any(|(_, r)| r.error.is_some());
        let status = if any_failed { Status::Partial } else { Status::Ok };
        let pick = |twice: i64| -> Vec<SpectrumResult> {
            records
                .iter()
                .filter(|(s, r)| s.twice_sz == twice && r.error.is_none())
                .map(|(s, r)| as_result(s, r))
                .collect()
        };
        let (sz0, sz1) = (pick(0), pick(2));
        let min = |v: &[SpectrumResult]| {
            v.iter()
                .filter_map(|r| r.ground_energy())
                .fold(f64::INFINITY, f64::min)
        };
        let (e0, e1) = (min(&sz0), min(&sz1));
        let mut rows = Vec::new();
        if !(e0.is_finite() && e1.is_finite()) {
            rows.push(p.row(self.name(), "spin_gap", f64::NAN, Status::Failed));
            return rows;
        }
        rows.push(p.row(self.name(), "spin_gap", e1 - e0, status));
        for entry in energy_differences(&sz0, &sz1, opts) {
            rows.push(Row {
                sz: Some(0.0),
                k: Some(entry.momentum.clone()),
                level: Some(entry.level),
                ..p.row(self.name(), format!("excitation_{}", entry.spin), entry.excitation, status)
            });
        }
        rows
    }

    /// Ground multiplet vectors of the target sector and the chosen level.
    fn target_state(&self, ctx: &ModelContext, p: &Point) -> Result<(SpectrumResult, Arc<SectorBasis>, usize)> {
        let cluster = ctx.cluster();
        let k = if cluster.n_sites() == self.r.cluster.n_sites() {
            self.r.target_sector
        } else {
            cluster.momentum(&self.r.spec.target_sector)?
        };
        let sector = Sector::new(0.0, Some(k));
        let res = ctx.solve(&p.params()?, sector, self.r.spec.levels, &self.opts)?;
        let basis = ctx.basis(sector)?;
        let level = match self.r.spec.target_state {
            TargetState::Lowest => 0,
            TargetState::Symmetric => symmetric_level(&res).unwrap_or(0),
        };
        Ok((res, basis, level))
    }

    fn target_rows(&self, p: &Point) -> Result<Vec<Row>> {
        let spec = &self.r.spec;
        #[derive(Serialize, Deserialize)]
        struct TargetData {
            k: String,
            level: usize,
            energy: f64,
            m2: Vec<(String, f64)>,
            dimer: Option<DimerCorrelationReport>,
            bonds: Vec<(usize, usize, f64)>,
            fss: Vec<(String, usize, Vec<(String, f64)>)>,
            error: Option<String>,
        }
        let compute = || -> Result<TargetData> {
            let measure = |ctx: &ModelContext, dimers: bool| -> Result<(String, usize, f64, Vec<(String, f64)>, Option<DimerCorrelationReport>, Vec<(usize, usize, f64)>)> {
                let (res, basis, level) = self.target_state(ctx, p)?;
                let cluster = ctx.cluster();
                let m = Measurement::new(cluster, &basis, &res.eigenvectors[level], CorrelationPath::Auto)?;
                let qs = spec.q_momenta(cluster)?;
                let sf = structure_factor_report(&m, &qs)?;
                let (dimer, bonds) = if dimers {
                    let d = dimer_correlations(&m, self.r.dimer_class, None)?;
                    let b = bond_map(&m, self.r.dimer_class)?
                        .into_iter()
                        .map(|(b, v)| (b.i, b.j, v))
                        .collect();
                    (Some(d), b)
                } else {
                    (None, Vec::new())
                };
                Ok((res.sector.momentum_label(), level, res.eigenvalues[level], sf.values, dimer, bonds))
            };
            let (k, level, energy, m2, dimer, bonds) = measure(&self.ctx, spec.has(Observable::DimerCorrelations))?;
            let mut fss = Vec::new();
            if spec.has(Observable::Fss) {
                fss.push((self.name().to_string(), self.r.cluster.n_sites(), m2.clone()));
                for (name, ctx) in &self.fss {
                    let (_, _, _, v, _, _) = measure(ctx, false)?;
                    fss.push((name.clone(), ctx.cluster().n_sites(), v));
                }
            }
            Ok(TargetData {
                k,
                level,
                energy,
                m2,
                dimer,
                bonds,
                fss,
                error: None,
            })
        };
        let data: TargetData = self.cached(p, "target".into(), || {
            Ok(compute().unwrap_or_else(|e| TargetData {
                k: self.r.target_sector.to_string(),
                level: 0,
                energy: f64::NAN,
                m2: Vec::new(),
                dimer: None,
                bonds: Vec::new(),
                fss: Vec::new(),
                error: Some(e.to_string()),
            }))
        })?;
        let base = Row {
            sz: Some(0.0),
            k: Some(data.k.clone()),
            level: Some(data.level),
            ..p.row(self.name(), "target_energy", data.energy, Status::Ok)
        };
        if data.error.is_some() {
            return Ok(vec![Row {
                status: Status::Failed,
                value: f64::NAN,
                ..base
            }]);
        }
        let mut rows = vec![base.clone()];
        if spec.has(Observable::StructureFactor) {
            for (q, v) in &data.m2 {
                rows.push(Row {
                    observable: format!("m2{q}"),
                    value: *v,
                    ..base.clone()
                });
            }
        }
        if let Some(d) = &data.dimer {
            let class = match self.r.dimer_class {
                crate::observables::BondClass::First => "first",
                crate::observables::BondClass::Second => "second",
            };
            rows.push(Row {
                observable: format!("dimer_rm_{class}"),
                value: d.farthest_value().unwrap_or(f64::NAN),
                status: if d.farthest.is_some() { Status::Ok } else { Status::Failed },
                ..base.clone()
            });
            self.write_map(p, class, &data.k, data.level, d, &data.bonds)?;
        }
        if spec.has(Observable::Fss) {
            let names: Vec<&str> = data.fss.iter().map(|f| f.0.as_str()).collect();
            let joined = names.join("+");
            for (name, _, values) in data.fss.iter().skip(1) {
                for (q, v) in values {
                    rows.push(Row {
                        cluster: name.clone(),
                        observable: format!("m2{q}"),
                        value: *v,
                        ..base.clone()
                    });
                }
            }
            for qi in 0..data.fss[0].2.len() {
                let points: Vec<(usize, f64)> = data.fss.iter().map(|(_, n, v)| (*n, v[qi].1)).collect();
                let label = data.fss[0].2[qi].0.clone();
                let fit = fss_extrapolate(&points);
                let (m0, c, status) = match fit {
                    Ok(f) => (f.m0_squared, f.constant, Status::Ok),
                    Err(_) => (f64::NAN, f64::NAN, Status::Failed),
                };
                for (obs, v) in [("m0sq", m0), ("fss_const", c)] {
                    rows.push(Row {
                        cluster: joined.clone(),
                        observable: format!("{obs}{label}"),
                        value: v,
                        status,
                        ..base.clone()
                    });
                }
            }
        }
        Ok(rows)
    }

    fn write_map(
        &self,
        p: &Point,
        class: &str,
        k: &str,
        level: usize,
        report: &DimerCorrelationReport,
        bonds: &[(usize, usize, f64)],
    ) -> Result<()> {
        #[derive(Serialize)]
        struct MapFile<'a> {
            cluster: &'a str,
            spanning_vectors: [Vec2; 2],
            site_coords: &'a [Vec2],
            j: f64,
            gamma: f64,
            delta: f64,
            k: &'a str,
            level: usize,
            bond_spin_correlations: &'a [(usize, usize, f64)],
            dimer_correlations: &'a DimerCorrelationReport,
        }
        let dir = self.store.dir.join("maps");
        fs::create_dir_all(&dir)?;
        let m = MapFile {
            cluster: self.name(),
            spanning_vectors: self.r.cluster.spanning_vectors(),
            site_coords: self.r.cluster.site_coords(),
            j: p.j,
            gamma: p.gamma,
            delta: p.delta,
            k,
            level,
            bond_spin_correlations: bonds,
            dimer_correlations: report,
        };
        let text = serde_json::to_string_pretty(&m).map_err(io_error)?;
        fs::write(dir.join(format!("{}_dimer_{class}.json", p.key())), text + "\n")?;
        Ok(())
    }

    fn overlap_rows(&self, p: &Point) -> Result<Vec<Row>> {
        #[derive(Serialize, Deserialize)]
        struct OverlapData {
            ground_energy: f64,
            multiplicity: usize,
            reference_dimension: usize,
            overlap: f64,
            residual_max: f64,
            per_sector: Vec<(String, usize)>,
            error: Option<String>,
        }
        let compute = || -> Result<OverlapData> {
            let params = p.params()?;
            let spectra: Vec<(SpectrumResult, Arc<SectorBasis>)> = self
                .r
                .momenta
                .iter()
                .map(|&k| {
                    let s = Sector::new(0.0, Some(k));
                    Ok((self.ctx.solve(&params, s, 1, &self.opts)?, self.ctx.basis(s)?))
                })
                .collect::<Result<_>>()?;
            let states = reference_states(&self.r.cluster)?;
            let pairs: Vec<(&SpectrumResult, &SectorBasis)> = spectra.iter().map(|(r, b)| (r, &**b)).collect();
            let o = ground_space_overlap(&pairs, &states, self.opts.degeneracy_tol)?;
            let op = HamiltonianOperator::build_operator(&self.r.cluster, &params)?;
            let residual_max = states
                .iter()
                .map(|s| s.eigen_residual(&op).0)
                .fold(0.0, f64::max);
            Ok(OverlapData {
                ground_energy: o.ground_energy,
                multiplicity: o.ground_dimension,
                reference_dimension: o.reference_dimension,
                overlap: o.overlap,
                residual_max,
                per_sector: o
                    .sectors
                    .iter()
                    .filter(|s| s.ground_vectors > 0)
                    .map(|s| (s.momentum.clone(), s.ground_vectors))
                    .collect(),
                error: None,
            })
        };
        let data: OverlapData = self.cached(p, "vbs_overlap".into(), || {
            Ok(compute().unwrap_or_else(|e| OverlapData {
                ground_energy: f64::NAN,
                multiplicity: 0,
                reference_dimension: 0,
                overlap: f64::NAN,
                residual_max: f64::NAN,
                per_sector: Vec::new(),
                error: Some(e.to_string()),
            }))
        })?;
        let name = self.name();
        if data.error.is_some() {
            return Ok(vec![p.row(name, "ground_multiplicity", f64::NAN, Status::Failed)]);
        }
        let mut rows = vec![
            p.row(name, "ground_energy", data.ground_energy, Status::Ok),
            p.row(name, "ground_multiplicity", data.multiplicity as f64, Status::Ok),
            p.row(name, "vbs_reference_dimension", data.reference_dimension as f64, Status::Ok),
            p.row(name, "vbs_overlap", data.overlap, Status::Ok),
            p.row(name, "vbs_residual_max", data.residual_max, Status::Ok),
        ];
        for (k, n) in &data.per_sector {
            rows.push(Row {
                sz: Some(0.0),
                k: Some(k.clone()),
                ..p.row(name, "ground_vectors", *n as f64, Status::Ok)
            });
        }
        Ok(rows)
    }
}

/// Read a results table back (used by tests and the figure recipes).
pub fn read_rows(path: &Path) -> Result<Vec<Row>> {
    let mut rd = csv::Reader::from_path(path).map_err(io_error)?;
    let header: Vec<String> = rd.headers().map_err(io_error)?.iter().map(String::from).collect();
    if header != CSV_COLUMNS {
        return Err(Error::InvalidInput(format!("unexpected header {header:?}")));
    }
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(io_error)?;
        let f = |i: usize| rec.get(i).unwrap_or("").to_string();
        let num = |i: usize| -> Option<f64> { rec.get(i).filter(|s| !s.is_empty()).and_then(|s| s.parse().ok()) };
        out.push(Row {
            cluster: f(0),
            j: num(1),
            gamma: num(2),
            delta: num(3),
            sz: num(4),
            k: Some(f(5)).filter(|s| !s.is_empty()),
            level: rec.get(6).and_then(|s| s.parse().ok()),
            observable: f(7),
            value: num(8).unwrap_or(f64::NAN),
            status: match rec.get(9) {
                Some("ok") => Status::Ok,
                Some("partial") => Status::Partial,
                _ => Status::Failed,
            },
        });
    }
    Ok(out)
}
