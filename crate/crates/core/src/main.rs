use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use plaqed::config::{Grid, SweepSpec};
use plaqed::coverings::{check_counting_identities, enumerate_valid_coverings, CoveringProblem};
use plaqed::figures::{recipe, run_figure, RECIPES};
use plaqed::spectrum::{ModelContext, Sector};
use plaqed::sweep::{reference_states, run_sweep};
use plaqed::vbs::{ground_space_overlap, ss_states, VbsState};
use plaqed::{Error, HamiltonianOperator, ModelParams, SectorBasis};

/// `println!` that stops quietly once stdout is closed (e.g. `| head`).
macro_rules! out {
    ($($t:tt)*) => {
        if writeln!(std::io::stdout(), $($t)*).is_err() {
            std::process::exit(0);
        }
    };
}

#[derive(Parser)]
#[command(name = "plaqed", version, about = "Exact diagonalization of the plaquette-projector square-lattice model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a parameter sweep from a config file and/or flags (flags win).
    Sweep(SweepArgs),
    /// Reproduce the data series of a named figure.
    Figure(FigureArgs),
    /// Print the site, bond and plaquette tables of a cluster.
    DumpCluster {
        cluster: String,
        /// Also draw the cluster.
        #[arg(long)]
        diagram: bool,
    },
    /// Enumerate the valid dimer coverings of a cluster.
    Coverings {
        cluster: String,
        /// Draw each covering.
        #[arg(long)]
        show: bool,
        #[arg(long)]
        json: bool,
    },
    /// Check the Shastry-Sutherland product states against the Hamiltonian.
    VbsCheck(VbsArgs),
}

#[derive(Args)]
struct Common {
    /// Worker threads (0 = all cores).
    #[arg(long, env = "PLAQED_WORKERS", default_value_t = 0)]
    workers: usize,
    /// Allow clusters above 20 sites.
    #[arg(long)]
    long_run: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// TOML spec, or the manifest.json of an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long)]
    cluster: Option<String>,
    #[arg(long)]
    j: Option<f64>,
    /// `0.5`, `0.1,0.2` or `start:stop:step`
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<String>,
    /// Comma separated, e.g. `0,1`
    #[arg(long, value_delimiter = ',')]
    sz: Option<Vec<f64>>,
    /// `all` or momenta separated by `;`, e.g. `0,0;pi,0`
    #[arg(long)]
    sectors: Option<String>,
    #[arg(long)]
    levels: Option<usize>,
    /// Comma separated observable names.
    #[arg(long, value_delimiter = ',')]
    observables: Option<Vec<String>>,
    /// Momenta separated by `;`, or `all`
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    dimer_class: Option<String>,
    /// Clusters separated by `/`
    #[arg(long)]
    fss_clusters: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    degeneracy_tol: Option<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct FigureArgs {
    /// Recipe name; omit with --list.
    name: Option<String>,
    #[arg(short, long, default_value = "figures")]
    output: PathBuf,
    /// Run a single part of the recipe.
    #[arg(long)]
    part: Option<String>,
    /// List recipes and their parts.
    #[arg(long)]
    list: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct VbsArgs {
    #[arg(long, default_value = "20")]
    cluster: String,
    #[arg(long, default_value = "0")]
    gamma: f64,
    #[arg(long, default_value = "0.1,0.35,0.7,1", allow_hyphen_values = true)]
    delta: String,
    /// Also diagonalize every Sz = 0 momentum sector and compare the ground
    /// space with the span of the product states.
    #[arg(long)]
    ground: bool,
    #[command(flatten)]
    common: Common,
}

fn sweep_spec(a: &SweepArgs) -> plaqed::Result<SweepSpec> {
    let invalid = |e: &dyn std::fmt::Display| Error::InvalidSpec(e.to_string());
    let mut table = match &a.config {
        Some(path) => toml::Table::try_from(SweepSpec::load(path)?).map_err(|e| invalid(&e))?,
        None => toml::Table::new(),
    };
    let mut set = |key: &str, v: toml::Value| {
        table.insert(key.into(), v);
    };
    let list = |s: &str, sep: char| toml::Value::Array(s.split(sep).map(|x| toml::Value::String(x.trim().into())).collect());
    let grid = |s: &str| -> plaqed::Result<toml::Value> {
        let g: Grid = s.parse()?;
        toml::Value::try_from(g).map_err(|e| invalid(&e))
    };
    if let Some(c) = &a.cluster {
        set("cluster", c.clone().into());
    }
    if let Some(j) = a.j {
        set("j", j.into());
    }
    if let Some(g) = &a.gamma {
        set("gamma", grid(g)?);
    }
    if let Some(d) = &a.delta {
        set("delta", grid(d)?);
    }
    if let Some(sz) = &a.sz {
        set("sz", toml::Value::Array(sz.iter().map(|&x| x.into()).collect()));
    }
    if let Some(s) = &a.sectors {
        set("sectors", if s.trim() == "all" { "all".into() } else { list(s, ';') });
    }
    if let Some(l) = a.levels {
        set("levels", (l as i64).into());
    }
    if let Some(o) = &a.observables {
        set("observables", toml::Value::Array(o.iter().map(|x| x.trim().into()).collect()));
    }
    if let Some(q) = &a.q {
        set("q", list(q, ';'));
    }
    if let Some(c) = &a.dimer_class {
        set("dimer_class", c.clone().into());
    }
    if let Some(f) = &a.fss_clusters {
        set("fss_clusters", list(f, '/'));
    }
    if let Some(s) = a.seed {
        set("seed", (s as i64).into());
    }
    if let Some(t) = a.tol {
        set("tol", t.into());
    }
    if let Some(t) = a.degeneracy_tol {
        set("degeneracy_tol", t.into());
    }
    if a.common.long_run {
        set("long_run", true.into());
    }
    table.try_into().map_err(|e| invalid(&e))
}

enum Failure {
    Partial(String),
    Invalid(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::NoConvergence { .. } => Failure::Partial(e.to_string()),
            _ => Failure::Invalid(e.to_string()),
        }
    }
}

fn sweep(a: &SweepArgs) -> Result<(), Failure> {
    let spec = sweep_spec(a)?;
    let s = run_sweep(&spec, &a.output, a.common.workers)?;
    out!(
        "{} points, {} rows ({} failed, {} checkpoints reused) -> {}",
        s.points,
        s.rows,
        s.failed_rows,
        s.reused_checkpoints,
        a.output.display()
    );
    if s.complete() {
        Ok(())
    } else {
        Err(Failure::Partial(format!("{} rows failed", s.failed_rows)))
    }
}

fn figure(a: &FigureArgs) -> Result<(), Failure> {
    if a.list {
        for name in RECIPES {
            out!("{name}");
            for p in recipe(name)?.parts {
                let tag = if p.extended { " [extended]" } else { "" };
                out!("  {:<10} {}{tag}", p.name, p.description);
            }
        }
        return Ok(());
    }
    let name = a
        .name
        .as_deref()
        .ok_or_else(|| Failure::Invalid("figure name required (see --list)".into()))?;
    let out = a.output.join(name);
    let outcomes = run_figure(name, a.part.as_deref(), a.common.long_run, &out, a.common.workers)?;
    let mut failed = 0;
    for o in &outcomes {
        match &o.summary {
            Some(s) => {
                failed += s.failed_rows;
                out!("{name}/{}: {} rows, {} failed", o.name, s.rows, s.failed_rows);
            }
            None if o.extended && !a.common.long_run => out!("{name}/{}: skipped (extended, needs --long-run)", o.name),
            None => out!("{name}/{}: skipped", o.name),
        }
    }
    out!("-> {}", out.display());
    if failed > 0 {
        return Err(Failure::Partial(format!("{failed} rows failed")));
    }
    Ok(())
}

fn coverings(name: &str, show: bool, json: bool) -> Result<(), Failure> {
    let cluster = plaqed::config::parse_cluster(name)?;
    let found = enumerate_valid_coverings(&CoveringProblem::new(&cluster));
    let report = check_counting_identities(&cluster);
    if json {
        let v = serde_json::json!({ "cluster": name, "n_sites": cluster.n_sites(), "count": found.len(), "coverings": found, "identities": report });
        out!("{}", serde_json::to_string_pretty(&v).expect("serializable"));
        return Ok(());
    }
    out!("cluster {name}: {} sites, {} valid coverings", cluster.n_sites(), found.len());
    for (k, p) in found.iter().enumerate() {
        let offset = p.offset.map(|o| format!(" (offset {},{})", o[0], o[1])).unwrap_or_default();
        out!("covering {k}{offset}: {:?}", p.dimers);
        if show {
            out!("{}", p.diagram(&cluster));
        }
    }
    out!(
        "plaquettes = 4 x dimers: {}; diagonal pairs in 4 plaquettes: {}; axial pairs in 2 (4 when wrapping): {}",
        report.plaquettes_equal_four_times_dimers, report.diagonal_in_four, report.axial_in_two_or_four_when_wrapping
    );
    Ok(())
}

fn vbs_check(a: &VbsArgs) -> Result<(), Failure> {
    let cluster = plaqed::config::parse_cluster(&a.cluster)?;
    if cluster.n_sites() > plaqed::config::DESK_SCALE_MAX_SITES && a.ground && !a.common.long_run {
        return Err(Failure::Invalid("--ground on clusters above 20 sites needs --long-run".into()));
    }
    let deltas = a.delta.parse::<Grid>()?.values()?;
    let states = ss_states(&cluster)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.common.workers)
        .build()
        .map_err(|e| Failure::Partial(e.to_string()))?;
    let ctx = Arc::new(ModelContext::new(cluster.clone()));
    let opts = plaqed::eigensolver::SolverOptions::default();
    pool.install(|| -> Result<(), Failure> {
        for &delta in &deltas {
            let params = ModelParams::new(1.0, a.gamma, delta)?;
            let op = HamiltonianOperator::build_operator(&cluster, &params)?;
            for s in &states {
                let (res, e) = s.eigen_residual(&op);
                let o = s.pattern.offset.unwrap_or([0, 0]);
                out!(
                    "gamma={} delta={delta} offset=({},{}) energy={e:.12} residual={res:.3e}",
                    a.gamma, o[0], o[1]
                );
            }
            if a.ground {
                let spectra: Vec<_> = cluster
                    .allowed_momenta()
                    .into_iter()
                    .map(|k| {
                        let s = Sector::new(0.0, Some(k));
                        Ok((ctx.solve(&params, s, 1, &opts)?, ctx.basis(s)?))
                    })
                    .collect::<plaqed::Result<_>>()?;
                let pairs: Vec<(&_, &SectorBasis)> = spectra.iter().map(|(r, b)| (r, &**b)).collect();
                let refs: Vec<VbsState> = reference_states(&cluster)?;
                let g = ground_space_overlap(&pairs, &refs, opts.degeneracy_tol)?;
                out!(
                    "gamma={} delta={delta} ground_energy={:.12} multiplicity={} reference_dim={} overlap={:.12}",
                    a.gamma, g.ground_energy, g.ground_dimension, g.reference_dimension, g.overlap
                );
                for s in g.sectors.iter().filter(|s| s.ground_vectors > 0) {
                    out!("  k={} ground_vectors={} captured={:.12}", s.momentum, s.ground_vectors, s.captured);
                }
            }
        }
        Ok(())
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Sweep(a) => sweep(a),
        Command::Figure(a) => figure(a),
        Command::DumpCluster { cluster, diagram } => plaqed::config::parse_cluster(cluster)
            .map(|c| {
                out!("{}", c.dump().trim_end());
                if *diagram {
                    out!("{}", c.diagram().trim_end());
                }
            })
            .map_err(Failure::from),
        Command::Coverings { cluster, show, json } => coverings(cluster, *show, *json),
        Command::VbsCheck(a) => vbs_check(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Partial(m)) => {
            eprintln!("plaqed: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Invalid(m)) => {
            eprintln!("plaqed: {m}");
            ExitCode::from(2)
        }
    }
}
