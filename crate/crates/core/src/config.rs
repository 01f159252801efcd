//! Sweep specifications: a TOML file plus command-line overrides.

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::eigensolver::{SolverOptions, DEFAULT_DEGENERACY_TOL, DEFAULT_SEED, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::lattice::{Cluster, Momentum};
use crate::observables::BondClass;
use crate::spectrum::CACHED_MATRIX_MAX_SITES;

/// Clusters above this size need `long_run = true`.
pub const DESK_SCALE_MAX_SITES: usize = CACHED_MATRIX_MAX_SITES;

/// A parameter axis: one value, an explicit list, or an inclusive range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Value(f64),
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl Grid {
    pub fn values(&self) -> Result<Vec<f64>> {
        let v = match self {
            Grid::Value(x) => vec![*x],
            Grid::List(xs) => xs.clone(),
            Grid::Range { start, stop, step } => {
                if !(*step > 0.0) || stop < start {
                    return Err(Error::InvalidSpec(format!("bad range {start}:{stop}:{step}")));
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize;
                // rounding keeps 0.1 + 2 * 0.05 from printing as 0.20000000000000004
                (0..=n).map(|i| round12(start + i as f64 * step)).collect()
            }
        };
        if v.is_empty() {
            return Err(Error::InvalidSpec("empty parameter grid".into()));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidSpec("parameter grid holds a non-finite value".into()));
        }
        if v.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSpec("parameter grid must be strictly increasing".into()));
        }
        Ok(v)
    }
}

fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

/// `0.5`, `0.1,0.2,0.4` or `start:stop:step`.
impl FromStr for Grid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidSpec(format!("`{t}` is not a number")))
        };
        if s.contains(':') {
            let p: Vec<&str> = s.split(':').collect();
            if p.len() != 3 {
                return Err(Error::InvalidSpec(format!("range `{s}` must be start:stop:step")));
            }
            Ok(Grid::Range {
                start: num(p[0])?,
                stop: num(p[1])?,
                step: num(p[2])?,
            })
        } else if s.contains(',') {
            Ok(Grid::List(s.split(',').map(num).collect::<Result<_>>()?))
        } else {
            Ok(Grid::Value(num(s)?))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SectorSelection {
    /// The string `"all"`.
    All(String),
    List(Vec<String>),
}

impl Default for SectorSelection {
    fn default() -> Self {
        SectorSelection::All("all".into())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    Energies,
    Gaps,
    StructureFactor,
    DimerCorrelations,
    Fss,
    Coverings,
    VbsOverlap,
}

impl FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "energies" => Observable::Energies,
            "gaps" => Observable::Gaps,
            "structure_factor" => Observable::StructureFactor,
            "dimer_correlations" => Observable::DimerCorrelations,
            "fss" => Observable::Fss,
            "coverings" => Observable::Coverings,
            "vbs_overlap" => Observable::VbsOverlap,
            other => return Err(Error::InvalidSpec(format!("unknown observable `{other}`"))),
        })
    }
}

/// Which `k = (0,0)` level observables are measured on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetState {
    /// Sector ground state.
    #[default]
    Lowest,
    /// Lowest level carrying the identity representation, else the lowest.
    /// The N = 20 torus is chiral, and near the plaquette point its sector
    /// ground state is not in that representation.
    Symmetric,
}

fn default_j() -> f64 {
    1.0
}
fn default_sz() -> Vec<f64> {
    vec![0.0]
}
fn default_levels() -> usize {
    4
}
fn default_observables() -> Vec<Observable> {
    vec![Observable::Energies]
}
fn default_q() -> Vec<String> {
    vec!["pi,0".into()]
}
fn default_class() -> String {
    "second".into()
}
fn default_target_sector() -> String {
    "0,0".into()
}
fn default_seed() -> u64 {
    DEFAULT_SEED
}
fn default_tol() -> f64 {
    DEFAULT_TOL
}
fn default_degeneracy_tol() -> f64 {
    DEFAULT_DEGENERACY_TOL
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// `16`, `20`, `32` or explicit spanning vectors `x1,y1;x2,y2`.
    pub cluster: String,
    #[serde(default = "default_j")]
    pub j: f64,
    pub gamma: Grid,
    pub delta: Grid,
    /// `Sz` blocks solved for energies.
    #[serde(default = "default_sz")]
    pub sz: Vec<f64>,
    #[serde(default)]
    pub sectors: SectorSelection,
    /// Levels per sector (whole multiplets are always kept).
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default = "default_observables")]
    pub observables: Vec<Observable>,
    /// Momenta for the structure factor and the finite-size fit.
    #[serde(default = "default_q")]
    pub q: Vec<String>,
    #[serde(default = "default_class")]
    pub dimer_class: String,
    /// Momentum sector of the state observables are measured on.
    #[serde(default = "default_target_sector")]
    pub target_sector: String,
    #[serde(default)]
    pub target_state: TargetState,
    /// Further clusters entering the finite-size fit.
    #[serde(default)]
    pub fss_clusters: Vec<String>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_degeneracy_tol")]
    pub degeneracy_tol: f64,
    #[serde(default)]
    pub long_run: bool,
}

/// A spec after validation, with everything parsed.
#[derive(Clone, Debug)]
pub struct ResolvedSpec {
    pub spec: SweepSpec,
    pub cluster: Cluster,
    pub gammas: Vec<f64>,
    pub deltas: Vec<f64>,
    pub momenta: Vec<Momentum>,
    pub q: Vec<Momentum>,
    pub dimer_class: BondClass,
    pub target_sector: Momentum,
    pub fss_clusters: Vec<(String, Cluster)>,
}

impl SweepSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e == "json") {
            // a run manifest carries the resolved spec under "spec"
            let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::InvalidSpec(e.to_string()))?;
            let spec = v.get("spec").cloned().unwrap_or(v);
            return serde_json::from_value(spec).map_err(|e| Error::InvalidSpec(e.to_string()));
        }
        Self::from_toml(&text)
    }

    /// The `q` list on `cluster`; `["all"]` selects every allowed momentum.
    pub fn q_momenta(&self, cluster: &Cluster) -> Result<Vec<Momentum>> {
        if self.q.is_empty() {
            return Err(Error::InvalidSpec("q list is empty".into()));
        }
        if self.q.len() == 1 && self.q[0].trim() == "all" {
            return Ok(cluster.allowed_momenta());
        }
        self.q.iter().map(|k| cluster.momentum(k)).collect()
    }

    /// Anything beyond covering enumeration requires diagonalization.
    pub fn needs_spectra(&self) -> bool {
        self.observables.iter().any(|&o| o != Observable::Coverings)
    }

    pub fn has(&self, o: Observable) -> bool {
        self.observables.contains(&o)
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            degeneracy_tol: self.degeneracy_tol,
            seed: self.seed,
            ..SolverOptions::default()
        }
    }

    pub fn resolve(&self) -> Result<ResolvedSpec> {
        let cluster = parse_cluster(&self.cluster)?;
        let gammas = self.gamma.values()?;
        let deltas = self.delta.values()?;
        for (name, v) in [("gamma", &gammas), ("delta", &deltas)] {
            if v.iter().any(|x| !(0.0..=1.0).contains(x)) {
                return Err(Error::InvalidSpec(format!("{name} values must lie in [0, 1]")));
            }
        }
        if !(self.j > 0.0) || !self.j.is_finite() {
            return Err(Error::InvalidSpec("j must be positive".into()));
        }
        if self.levels == 0 {
            return Err(Error::InvalidSpec("levels must be at least 1".into()));
        }
        if self.sz.is_empty() {
            return Err(Error::InvalidSpec("sz list is empty".into()));
        }
        for &sz in &self.sz {
            crate::hilbert::up_count(cluster.n_sites(), sz).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        }
        self.solver_options()
            .validate()
            .map_err(|e| Error::InvalidSpec(e.to_string()))?;
        if self.observables.is_empty() {
            return Err(Error::InvalidSpec("no observables requested".into()));
        }
        if self.has(Observable::Gaps) && !(self.sz.contains(&0.0) && self.sz.contains(&1.0)) {
            return Err(Error::InvalidSpec("gaps need sz = [0, 1]".into()));
        }
        let momenta = match &self.sectors {
            SectorSelection::All(s) if s == "all" => cluster.allowed_momenta(),
            SectorSelection::All(s) => return Err(Error::InvalidSpec(format!("sectors must be \"all\" or a list, got `{s}`"))),
            SectorSelection::List(ks) => {
                let mut v = ks
                    .iter()
                    .map(|k| cluster.momentum(k).map_err(|e| Error::InvalidSpec(e.to_string())))
                    .collect::<Result<Vec<_>>>()?;
                v.sort();
                v.dedup();
                if v.is_empty() {
                    return Err(Error::InvalidSpec("empty sector list".into()));
                }
                v
            }
        };
        let q = self.q_momenta(&cluster).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        let dimer_class: BondClass = self.dimer_class.parse().map_err(|e: Error| Error::InvalidSpec(e.to_string()))?;
        let target_sector = cluster
            .momentum(&self.target_sector)
            .map_err(|e| Error::InvalidSpec(e.to_string()))?;
        let mut fss_clusters = Vec::new();
        if self.has(Observable::Fss) {
            let mut names = vec![self.cluster.clone()];
            names.extend(self.fss_clusters.iter().cloned());
            names.dedup();
            for name in names {
                let c = parse_cluster(&name)?;
                if fss_clusters.iter().any(|(_, d): &(String, Cluster)| d.n_sites() == c.n_sites()) {
                    return Err(Error::InvalidSpec(format!("two fss clusters with {} sites", c.n_sites())));
                }
                if self.q.iter().any(|k| k == "all") {
                    return Err(Error::InvalidSpec("fss needs an explicit q list".into()));
                }
                self.q_momenta(&c)
                    .map_err(|e| Error::InvalidSpec(format!("fss cluster {name}: {e}")))?;
                fss_clusters.push((name, c));
            }
            if fss_clusters.len() < 2 {
                return Err(Error::InvalidSpec("fss needs at least one entry in fss_clusters".into()));
            }
        }
        let largest = fss_clusters
            .iter()
            .map(|(_, c)| c.n_sites())
            .chain([cluster.n_sites()])
            .max()
            .unwrap_or(0);
        if largest > DESK_SCALE_MAX_SITES && self.needs_spectra() && !self.long_run {
            return Err(Error::InvalidSpec(format!(
                "clusters above {DESK_SCALE_MAX_SITES} sites are long runs; set long_run = true (or pass --long-run)"
            )));
        }
        Ok(ResolvedSpec {
            spec: self.clone(),
            cluster,
            gammas,
            deltas,
            momenta,
            q,
            dimer_class,
            target_sector,
            fss_clusters,
        })
    }
}

/// A catalog name or `x1,y1;x2,y2`.
pub fn parse_cluster(s: &str) -> Result<Cluster> {
    Cluster::named(s.trim()).map_err(|e| Error::InvalidSpec(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        let g: Grid = "0.5:1.0:0.05".parse().unwrap();
        let v = g.values().unwrap();
        assert_eq!(v.len(), 11);
        assert_eq!(v[2], 0.6);
        assert_eq!(v[10], 1.0);
        assert_eq!("0.1,0.3".parse::<Grid>().unwrap().values().unwrap(), vec![0.1, 0.3]);
        assert!("0.3,0.1".parse::<Grid>().unwrap().values().is_err());
        assert!("1:0:0.1".parse::<Grid>().unwrap().values().is_err());
        assert!("a".parse::<Grid>().is_err());
    }

    #[test]
    fn toml_roundtrip_and_validation() {
        let s = SweepSpec::from_toml(
            r#"
            cluster = "20"
            gamma = 1.0
            delta = { start = 0.5, stop = 1.0, step = 0.25 }
            sz = [0, 1]
            observables = ["energies", "gaps"]
            "#,
        )
        .unwrap();
        let r = s.resolve().unwrap();
        assert_eq!(r.deltas, vec![0.5, 0.75, 1.0]);
        assert_eq!(r.momenta.len(), 20);
        let mut bad = s.clone();
        bad.cluster = "32".into();
        assert!(matches!(bad.resolve(), Err(Error::InvalidSpec(_))));
        bad.long_run = true;
        assert!(bad.resolve().is_ok());
        let mut bad = s.clone();
        bad.q = vec!["pi,pi/2".into()];
        assert!(bad.resolve().is_err());
        assert!(SweepSpec::from_toml("cluster = \"20\"\ngamma = 1\ndelta = 1\nbogus = 3").is_err());
    }
}
