//! Sector-resolved spectra: basis and matrix caching per cluster, point-group
//! characters of eigenvectors, spin gaps and level tables.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::eigensolver::{lowest_eigenpairs, Method, SolverOptions};
use crate::error::{Error, Result};
use crate::hamiltonian::{FamilyMatrices, HamiltonianOperator, ModelParams};
use crate::hilbert::{permute_plain, SectorBasis, StateVector, TranslationGroup};
use crate::lattice::{Cluster, Momentum, PointGroupOp};
use crate::linalg::dot;

/// Clusters up to this size keep sector matrices in memory.
pub const CACHED_MATRIX_MAX_SITES: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Sector {
    /// `2 Sz`
    pub twice_sz: i64,
    /// `None` for a plain `Sz` basis.
    pub momentum: Option<Momentum>,
}

impl Sector {
    pub fn new(sz: f64, momentum: Option<Momentum>) -> Self {
        Sector {
            twice_sz: (2.0 * sz).round() as i64,
            momentum,
        }
    }

    pub fn sz(&self) -> f64 {
        self.twice_sz as f64 / 2.0
    }

    pub fn momentum_label(&self) -> String {
        match &self.momentum {
            Some(k) => k.to_string(),
            None => "none".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointGroupLabel {
    /// Irrep name when the characters identify one, otherwise `"mixed"`.
    pub name: String,
    /// `(operation, character)` over the little group.
    pub characters: Vec<(String, [f64; 2])>,
}

impl PointGroupLabel {
    pub fn character(&self, op: &str) -> Option<Complex64> {
        self.characters
            .iter()
            .find(|(n, _)| n == op)
            .map(|(_, c)| Complex64::new(c[0], c[1]))
    }
}

#[derive(Clone, Debug)]
pub struct SpectrumResult {
    pub sector: Sector,
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<StateVector>,
    pub residual_norms: Vec<f64>,
    /// One entry per eigenvalue; degenerate levels share the multiplet label.
    pub point_group_labels: Vec<Option<PointGroupLabel>>,
    pub matvecs: usize,
    pub method: Method,
    pub seed: u64,
}

impl SpectrumResult {
    pub fn ground_energy(&self) -> Option<f64> {
        self.eigenvalues.first().copied()
    }
}

/// Basis and matrix cache for one cluster.
pub struct ModelContext {
    cluster: Cluster,
    group: Arc<TranslationGroup>,
    bases: Mutex<HashMap<Sector, Arc<SectorBasis>>>,
    families: Mutex<HashMap<Sector, Arc<FamilyMatrices>>>,
    cache_matrices: bool,
    cache_bases: bool,
}

impl ModelContext {
    pub fn new(cluster: Cluster) -> Self {
        let cache_matrices = cluster.n_sites() <= CACHED_MATRIX_MAX_SITES;
        ModelContext {
            group: Arc::new(TranslationGroup::new(&cluster)),
            cluster,
            bases: Mutex::new(HashMap::new()),
            families: Mutex::new(HashMap::new()),
            cache_matrices,
            // large sector bases are rebuilt rather than held for every sector
            cache_bases: cache_matrices,
        }
    }

    /// Force the matrix-free path (or re-enable caching).
    pub fn with_matrix_cache(mut self, on: bool) -> Self {
        self.cache_matrices = on;
        self
    }

    pub fn with_basis_cache(mut self, on: bool) -> Self {
        self.cache_bases = on;
        self
    }

    pub fn cluster(&self) -> &Cluster {
        &self.cluster
    }

    pub fn basis(&self, sector: Sector) -> Result<Arc<SectorBasis>> {
        if let Some(b) = self.bases.lock().unwrap().get(&sector) {
            return Ok(b.clone());
        }
        let b = Arc::new(match sector.momentum {
            Some(k) => SectorBasis::momentum_with_group(&self.cluster, self.group.clone(), sector.sz(), k)?,
            None => SectorBasis::build_sz_basis(&self.cluster, sector.sz())?,
        });
        if !self.cache_bases {
            return Ok(b);
        }
        Ok(self.bases.lock().unwrap().entry(sector).or_insert(b).clone())
    }

    fn families(&self, sector: Sector, basis: &SectorBasis) -> Arc<FamilyMatrices> {
        if let Some(f) = self.families.lock().unwrap().get(&sector) {
            return f.clone();
        }
        let f = Arc::new(FamilyMatrices::build(&HamiltonianOperator::families(&self.cluster), basis));
        self.families.lock().unwrap().entry(sector).or_insert(f).clone()
    }

    /// Lowest `m` levels (whole multiplets) of `H(params)` in `sector`.
    pub fn solve(&self, params: &ModelParams, sector: Sector, m: usize, opts: &SolverOptions) -> Result<SpectrumResult> {
        params.validate()?;
        let basis = self.basis(sector)?;
        let pairs = if self.cache_matrices {
            let mat = self.families(sector, &basis).for_params(params);
            lowest_eigenpairs(&mat, m, opts)?
        } else {
            let op = HamiltonianOperator::build_operator(&self.cluster, params)?;
            lowest_eigenpairs(&op.on(&basis), m, opts)?
        };
        let point_group_labels = if pairs.vectors.is_empty() {
            vec![None; pairs.values.len()]
        } else {
            multiplet_labels(&self.cluster, &basis, &pairs.values, &pairs.vectors, opts)?
        };
        Ok(SpectrumResult {
            sector,
            eigenvalues: pairs.values,
            eigenvectors: pairs.vectors,
            residual_norms: pairs.residuals,
            point_group_labels,
            matvecs: pairs.matvecs,
            method: pairs.method,
            seed: opts.seed,
        })
    }

    /// Solve every momentum sector at the given `Sz`.
    pub fn solve_all_momenta(
        &self,
        params: &ModelParams,
        sz: f64,
        m: usize,
        opts: &SolverOptions,
    ) -> Result<Vec<SpectrumResult>> {
        self.cluster
            .allowed_momenta()
            .into_iter()
            .map(|k| self.solve(params, Sector::new(sz, Some(k)), m, opts))
            .collect()
    }

    /// Spectra over `momenta` (all when empty) that together contain the
    /// `count` lowest levels of the `Sz` block. Sectors start with one level
    /// and are re-solved with more while their highest computed level does
    /// not yet clear the running `count`-th level.
    pub fn lowest_levels(
        &self,
        params: &ModelParams,
        sz: f64,
        count: usize,
        momenta: &[Momentum],
        opts: &SolverOptions,
    ) -> Result<Vec<SpectrumResult>> {
        let ks = if momenta.is_empty() {
            self.cluster.allowed_momenta()
        } else {
            momenta.to_vec()
        };
        let mut results = ks
            .iter()
            .map(|&k| self.solve(params, Sector::new(sz, Some(k)), 1, opts))
            .collect::<Result<Vec<_>>>()?;
        loop {
            let mut all: Vec<f64> = results.iter().flat_map(|r| r.eigenvalues.iter().copied()).collect();
            all.sort_by(f64::total_cmp);
            let edge = if all.len() >= count { all[count - 1] } else { f64::INFINITY };
            let mut refined = false;
            for r in &mut results {
                let dim = self.basis(r.sector)?.dim();
                let top = r.eigenvalues.last().copied().unwrap_or(f64::NEG_INFINITY);
                if r.eigenvalues.len() < dim && (top <= edge || opts.degenerate(top, edge)) {
                    *r = self.solve(params, r.sector, r.eigenvalues.len() + 1, opts)?;
                    refined = true;
                }
            }
            if !refined {
                return Ok(results);
            }
        }
    }

    /// Lowest `Sz = 1` energy minus the lowest `Sz = 0` energy, both minimized
    /// over `momenta` (all allowed momenta when empty).
    pub fn spin_gap(&self, params: &ModelParams, momenta: &[Momentum], opts: &SolverOptions) -> Result<f64> {
        let ks = if momenta.is_empty() {
            self.cluster.allowed_momenta()
        } else {
            momenta.to_vec()
        };
        let opts = SolverOptions {
            want_vectors: false,
            ..opts.clone()
        };
        let min_over = |sz: f64| -> Result<f64> {
            let mut best = f64::INFINITY;
            for k in &ks {
                let r = self.solve(params, Sector::new(sz, Some(*k)), 1, &opts)?;
                if let Some(e) = r.ground_energy() {
                    best = best.min(e);
                }
            }
            Ok(best)
        };
        Ok(min_over(1.0)? - min_over(0.0)?)
    }
}

/// `g v` for a point-group operation `g` in the little group of the sector.
pub fn apply_point_group(g: &PointGroupOp, basis: &SectorBasis, v: &[Complex64]) -> Result<StateVector> {
    basis.check_len(v)?;
    if basis.is_plain() {
        return permute_plain(basis, v, &g.permutation);
    }
    let k = basis.momentum().expect("momentum sector");
    if k.transformed(g.matrix) != k {
        return Err(Error::InvalidInput(format!("{} does not leave {k} invariant", g.name)));
    }
    let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
    for (i, &r) in basis.states().iter().enumerate() {
        let mut c = 0u64;
        for s in 0..basis.n_sites() {
            if (r >> s) & 1 == 1 {
                c |= 1 << g.permutation[s];
            }
        }
        let (j, p) = basis.lookup(c).expect("point group preserves compatibility");
        out[j] += p * (basis.norm(j) / basis.norm(i)) * v[i];
    }
    Ok(out)
}

/// Character signature of a single vector (treated as a one-dimensional
/// multiplet).
pub fn label_point_group(cluster: &Cluster, basis: &SectorBasis, v: &[Complex64]) -> Result<PointGroupLabel> {
    label_multiplet(cluster, basis, &[v.to_vec()])
}

/// Characters `sum_a <v_a| g |v_a>` over the little group for an orthonormal
/// set spanning an invariant subspace.
pub fn label_multiplet(cluster: &Cluster, basis: &SectorBasis, vecs: &[StateVector]) -> Result<PointGroupLabel> {
    let ops: Vec<&PointGroupOp> = match basis.momentum() {
        Some(k) => cluster.little_group(&k),
        None => cluster.point_group().iter().collect(),
    };
    let mut characters = Vec::with_capacity(ops.len());
    for g in &ops {
        let mut chi = Complex64::new(0.0, 0.0);
        for v in vecs {
            chi += dot(v, &apply_point_group(g, basis, v)?);
        }
        characters.push((g.name.to_string(), [clean(chi.re), clean(chi.im)]));
    }
    let name = irrep_name(&characters);
    Ok(PointGroupLabel { name, characters })
}

fn clean(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() < 1e-8 {
        r + 0.0
    } else {
        x
    }
}

fn irrep_name(chars: &[(String, [f64; 2])]) -> String {
    let get = |n: &str| chars.iter().find(|(m, _)| m == n).map(|(_, c)| *c);
    let is = |c: Option<[f64; 2]>, v: f64| c.is_some_and(|c| (c[0] - v).abs() < 1e-6 && c[1].abs() < 1e-6);
    let dim = get("E").map(|c| c[0]).unwrap_or(1.0);
    if (dim - 1.0).abs() > 1e-6 {
        return if (dim - 2.0).abs() < 1e-6 && chars.len() == 8 && is(get("C2"), -2.0) && is(get("Mx"), 0.0) {
            "E".into()
        } else {
            "mixed".into()
        };
    }
    if chars.iter().any(|(_, c)| (c[0].powi(2) + c[1].powi(2) - 1.0).abs() > 1e-6) {
        return "mixed".into();
    }
    let letter = if let Some(c4) = get("C4") {
        if is(Some(c4), 1.0) {
            "A"
        } else if is(Some(c4), -1.0) {
            "B"
        } else if c4[1] > 0.0 {
            return "E(+i)".into();
        } else {
            return "E(-i)".into();
        }
    } else if let Some(c2) = get("C2") {
        if is(Some(c2), 1.0) {
            "A"
        } else {
            "B"
        }
    } else {
        "A"
    };
    let mirror = get("Mx").or(get("My")).or(get("Md")).or(get("Md'"));
    match mirror {
        Some(m) if is(Some(m), 1.0) => format!("{letter}1"),
        Some(_) => format!("{letter}2"),
        None => letter.to_string(),
    }
}

/// Labels per eigenvalue, computed on each degenerate group as a whole.
pub fn multiplet_labels(
    cluster: &Cluster,
    basis: &SectorBasis,
    values: &[f64],
    vectors: &[StateVector],
    opts: &SolverOptions,
) -> Result<Vec<Option<PointGroupLabel>>> {
    let mut out = Vec::with_capacity(values.len());
    let mut start = 0;
    while start < values.len() {
        let mut end = start + 1;
        while end < values.len() && opts.degenerate(values[end], values[start]) {
            end += 1;
        }
        let label = label_multiplet(cluster, basis, &vectors[start..end])?;
        out.extend(std::iter::repeat_n(Some(label), end - start));
        start = end;
    }
    Ok(out)
}

/// One row of a level table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelEntry {
    pub momentum: String,
    pub level: usize,
    pub energy: f64,
    /// Energy above the global `Sz = 0` minimum.
    pub excitation: f64,
    /// `"triplet"` when the level reappears at `Sz = 1` in the same sector,
    /// `"singlet"` otherwise, `"unknown"` without `Sz = 1` data.
    pub spin: String,
    pub label: Option<String>,
}

/// Levels of every `Sz = 0` sector relative to the global minimum, tagged by
/// comparison with the `Sz = 1` levels of the same momentum.
pub fn energy_differences(sz0: &[SpectrumResult], sz1: &[SpectrumResult], opts: &SolverOptions) -> Vec<LevelEntry> {
    let e0 = sz0
        .iter()
        .filter_map(|r| r.ground_energy())
        .fold(f64::INFINITY, f64::min);
    let mut out = Vec::new();
    for r in sz0 {
        let partner = sz1.iter().find(|s| s.sector.momentum == r.sector.momentum);
        for (level, &e) in r.eigenvalues.iter().enumerate() {
            let spin = match partner {
                None => "unknown",
                Some(p) => {
                    let top = p.eigenvalues.last().copied().unwrap_or(f64::NEG_INFINITY);
                    if p.eigenvalues.iter().any(|&x| (x - e).abs() <= 1e3 * opts.tol.max(opts.degeneracy_tol)) {
                        "triplet"
                    } else if e < top || p.eigenvalues.is_empty() {
                        "singlet"
                    } else {
                        "unknown"
                    }
                }
            };
            out.push(LevelEntry {
                momentum: r.sector.momentum_label(),
                level,
                energy: e,
                excitation: e - e0,
                spin: spin.into(),
                label: r.point_group_labels.get(level).cloned().flatten().map(|l| l.name),
            });
        }
    }
    out.sort_by(|a, b| a.excitation.total_cmp(&b.excitation));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_site_like_gap_on_small_cluster() {
        let ctx = ModelContext::new(Cluster::named("8").unwrap());
        let p = ModelParams::new(1.0, 0.0, 0.0).unwrap();
        let gap = ctx.spin_gap(&p, &[], &SolverOptions::default()).unwrap();
        assert!(gap > 0.0);
    }

    #[test]
    fn uniform_state_is_a1() {
        let cl = Cluster::named("16").unwrap();
        let ctx = ModelContext::new(cl.clone());
        let b = ctx.basis(Sector::new(0.0, Some(Momentum::zero(16)))).unwrap();
        // the uniform superposition has components proportional to 1/norm
        let mut v: Vec<Complex64> = b.norms().iter().map(|&n| Complex64::new(1.0 / n, 0.0)).collect();
        let nv = crate::linalg::norm(&v);
        crate::linalg::scale(&mut v, 1.0 / nv);
        let l = label_point_group(&cl, &b, &v).unwrap();
        assert_eq!(l.name, "A1");
        assert_eq!(l.characters.len(), 8);
    }

    #[test]
    fn point_group_action_is_unitary() {
        let cl = Cluster::named("16").unwrap();
        let ctx = ModelContext::new(cl.clone());
        let b = ctx.basis(Sector::new(0.0, Some(cl.momentum("pi,0").unwrap()))).unwrap();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(5);
        let v = crate::linalg::random_vector(b.dim(), &mut rng);
        for g in cl.little_group(&cl.momentum("pi,0").unwrap()) {
            let gv = apply_point_group(g, &b, &v).unwrap();
            assert!((crate::linalg::norm(&gv) - crate::linalg::norm(&v)).abs() < 1e-10);
        }
    }
}
