//! Named sweep recipes for the data series behind each figure.
//!
//! A recipe is a list of parts. Parts that diagonalize clusters above
//! [`DESK_SCALE_MAX_SITES`](crate::config::DESK_SCALE_MAX_SITES) sites are
//! extended: they only run when asked for with the long-run flag.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::config::{Grid, Observable, SectorSelection, SweepSpec, TargetState, DESK_SCALE_MAX_SITES};
use crate::eigensolver::{DEFAULT_DEGENERACY_TOL, DEFAULT_SEED, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::sweep::{run_sweep, SweepSummary};

pub const RECIPES: [&str; 8] = [
    "fig3-check",
    "fig4",
    "fig5",
    "fig6",
    "fig7",
    "fig8",
    "fig9",
    "appendix-count",
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Part {
    /// Output subdirectory.
    pub name: String,
    pub description: String,
    pub spec: SweepSpec,
    pub extended: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Recipe {
    pub name: String,
    pub parts: Vec<Part>,
}

fn base(cluster: &str, gamma: Grid, delta: Grid, observables: &[Observable]) -> SweepSpec {
    SweepSpec {
        cluster: cluster.into(),
        j: 1.0,
        gamma,
        delta,
        sz: vec![0.0],
        sectors: SectorSelection::default(),
        levels: 4,
        observables: observables.to_vec(),
        q: vec!["pi,0".into()],
        dimer_class: "second".into(),
        target_sector: "0,0".into(),
        target_state: TargetState::Lowest,
        fss_clusters: Vec::new(),
        seed: DEFAULT_SEED,
        tol: DEFAULT_TOL,
        degeneracy_tol: DEFAULT_DEGENERACY_TOL,
        long_run: false,
    }
}

fn range(start: f64, stop: f64, step: f64) -> Grid {
    Grid::Range { start, stop, step }
}

fn part(name: &str, description: &str, mut spec: SweepSpec) -> Part {
    let sizes = std::iter::once(&spec.cluster)
        .chain(&spec.fss_clusters)
        .filter_map(|c| crate::config::parse_cluster(c).ok())
        .map(|c| c.n_sites())
        .max()
        .unwrap_or(0);
    let extended = sizes > DESK_SCALE_MAX_SITES && spec.needs_spectra();
    spec.long_run = extended;
    Part {
        name: name.into(),
        description: description.into(),
        spec,
        extended,
    }
}

/// Look up a recipe by name.
pub fn recipe(name: &str) -> Result<Recipe> {
    use Observable::*;
    let parts = match name {
        "fig3-check" => {
            let mut s16 = base("16", Grid::Value(0.0), Grid::Value(1.0), &[Energies, Gaps, VbsOverlap, Coverings]);
            s16.sz = vec![0.0, 1.0];
            s16.levels = 3;
            let mut s20 = s16.clone();
            s20.cluster = "20".into();
            vec![
                part("n16", "zero-energy multiplet at delta = 1 against the valid coverings", s16),
                part("n20", "zero-energy multiplet at delta = 1 against the valid coverings", s20),
            ]
        }
        "fig4" => {
            let mut s = base("20", Grid::Value(1.0), range(0.5, 1.0, 0.05), &[Energies, Gaps]);
            s.sz = vec![0.0, 1.0];
            let mut l = s.clone();
            l.cluster = "32".into();
            l.levels = 2;
            vec![
                part("n20", "low levels and spin gap along gamma = 1", s),
                part("n32", "low levels and spin gap along gamma = 1", l),
            ]
        }
        "fig5" => {
            let mut s = base(
                "20",
                Grid::Value(1.0),
                range(0.5, 1.0, 0.05),
                &[StructureFactor, DimerCorrelations, Fss],
            );
            s.fss_clusters = vec!["16".into()];
            let mut l = s.clone();
            l.fss_clusters = vec!["32".into()];
            vec![
                part("n16_n20", "M^2(pi,0), D(r_m) and the 1/sqrt(N) fit along gamma = 1", s),
                part("n20_n32", "M^2(pi,0), D(r_m) and the 1/sqrt(N) fit along gamma = 1", l),
            ]
        }
        "fig6" => {
            let mut s = base("20", Grid::Value(0.0), Grid::Value(0.15), &[Energies, DimerCorrelations]);
            s.dimer_class = "first".into();
            let mut l = s.clone();
            l.cluster = "32".into();
            vec![
                part("n20", "nearest-neighbor dimer correlation map at gamma = 0, delta = 0.15", s),
                part("n32", "nearest-neighbor dimer correlation map at gamma = 0, delta = 0.15", l),
            ]
        }
        "fig7" => {
            let mut s = base("16", Grid::Value(0.0), range(0.0, 0.6, 0.025), &[Energies, StructureFactor]);
            s.q = vec!["all".into()];
            s.levels = 2;
            let mut m = s.clone();
            m.cluster = "20".into();
            let mut l = s.clone();
            l.cluster = "32".into();
            vec![
                part("n16", "M^2(Q) at every momentum along gamma = 0", s),
                part("n20", "M^2(Q) at every momentum along gamma = 0", m),
                part("n32", "M^2(Q) at every momentum along gamma = 0", l),
            ]
        }
        "fig8" => {
            let mut s = base("20", range(0.0, 0.3, 0.025), Grid::Value(0.35), &[StructureFactor, Fss]);
            s.fss_clusters = vec!["16".into()];
            let mut l = s.clone();
            l.fss_clusters = vec!["32".into()];
            vec![
                part("n16_n20", "M^2(pi,0) and its fit against gamma at delta = 0.35", s),
                part("n20_n32", "M^2(pi,0) and its fit against gamma at delta = 0.35", l),
            ]
        }
        "fig9" => {
            let s = base("20", Grid::Value(0.0), Grid::List(vec![0.375, 0.45]), &[Energies, DimerCorrelations]);
            let mut l = s.clone();
            l.cluster = "32".into();
            vec![
                part("n20", "second-neighbor dimer correlation maps at gamma = 0", s),
                part("n32", "second-neighbor dimer correlation maps at gamma = 0", l),
            ]
        }
        "appendix-count" => ["16", "20", "32"]
            .iter()
            .map(|c| {
                let s = base(c, Grid::Value(0.0), Grid::Value(1.0), &[Coverings]);
                part(&format!("n{c}"), "valid dimer coverings", s)
            })
            .collect(),
        other => {
            return Err(Error::InvalidSpec(format!(
                "unknown figure `{other}` (known: {})",
                RECIPES.join(", ")
            )))
        }
    };
    Ok(Recipe {
        name: name.into(),
        parts,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PartOutcome {
    pub name: String,
    pub description: String,
    pub extended: bool,
    /// `None` when the part was skipped.
    pub summary: Option<SweepSummary>,
}

/// Run the desk-scale parts of a recipe, plus the extended ones when
/// `long_run` is set. Asking for an extended part by name without `long_run`
/// is an invalid request.
pub fn run_figure(name: &str, only: Option<&str>, long_run: bool, out: &Path, workers: usize) -> Result<Vec<PartOutcome>> {
    let r = recipe(name)?;
    if let Some(p) = only {
        let part = r
            .parts
            .iter()
            .find(|q| q.name == p)
            .ok_or_else(|| Error::InvalidSpec(format!("figure {name} has no part `{p}`")))?;
        if part.extended && !long_run {
            return Err(Error::InvalidSpec(format!(
                "{name}/{p} is an extended run; pass --long-run"
            )));
        }
    }
    fs::create_dir_all(out)?;
    let mut outcomes = Vec::new();
    for part in &r.parts {
        let selected = only.is_none_or(|p| p == part.name);
        let run = selected && (!part.extended || long_run);
        let summary = if run {
            Some(run_sweep(&part.spec, &out.join(&part.name), workers)?)
        } else {
            None
        };
        outcomes.push(PartOutcome {
            name: part.name.clone(),
            description: part.description.clone(),
            extended: part.extended,
            summary,
        });
    }
    #[derive(Serialize)]
    struct Index<'a> {
        figure: &'a str,
        parts: &'a [PartOutcome],
    }
    let text = serde_json::to_string_pretty(&Index {
        figure: name,
        parts: &outcomes,
    })
    .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    fs::write(out.join("figure.json"), text + "\n")?;
    Ok(outcomes)
}
