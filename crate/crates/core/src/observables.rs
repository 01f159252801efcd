//! Measurements on eigenvectors: spin correlations and the Q-dependent
//! susceptibility, connected dimer-dimer correlations, and the finite-size
//! extrapolation of the susceptibility.
//!
//! Two evaluation paths exist. The plain path expands a momentum eigenvector
//! into the `Sz` basis and measures every operator directly. The sector path
//! stays in the momentum basis and measures translation averages, which have
//! the same expectation values on momentum eigenstates. The plain path is the
//! default wherever the expanded vector is affordable.

use std::borrow::Cow;
use std::sync::atomic::{AtomicU64, Ordering};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{SectorBasis, StateVector};
use crate::lattice::{Bond, Cluster, Momentum, Vec2};
use crate::swap::{require_normalized, SwapOperator};
use crate::vbs::{ss_pattern, SS_OFFSETS};

/// Largest plain-basis dimension the automatic path choice will expand into.
pub const PLAIN_EXPANSION_MAX_DIM: usize = 3_000_000;

/// Imaginary parts larger than this make a measurement fail.
const IMAG_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CorrelationPath {
    /// Expand into the plain basis when it has at most
    /// [`PLAIN_EXPANSION_MAX_DIM`] states, otherwise stay in the sector.
    Auto,
    Plain,
    Sector,
}

/// A state together with the basis it lives in, checked for normalization.
/// Holds the plain-basis expansion when the chosen path asks for it.
pub struct Measurement<'a> {
    cluster: &'a Cluster,
    basis: Cow<'a, SectorBasis>,
    state: Cow<'a, [Complex64]>,
    /// Bits of the largest imaginary part seen so far.
    max_imag: AtomicU64,
}

impl<'a> Measurement<'a> {
    pub fn new(cluster: &'a Cluster, basis: &'a SectorBasis, state: &'a [Complex64], path: CorrelationPath) -> Result<Self> {
        basis.check_len(state)?;
        if basis.n_sites() != cluster.n_sites() {
            return Err(Error::InvalidInput("basis and cluster sizes differ".into()));
        }
        require_normalized(state)?;
        let expand = match path {
            CorrelationPath::Plain => !basis.is_plain(),
            CorrelationPath::Sector => false,
            CorrelationPath::Auto => {
                !basis.is_plain() && binomial(basis.n_sites(), basis.n_up() as usize) <= PLAIN_EXPANSION_MAX_DIM
            }
        };
        let (basis, state) = if expand {
            let (plain, v) = basis.expand(state)?;
            (Cow::Owned(plain), Cow::Owned(v))
        } else {
            (Cow::Borrowed(basis), Cow::Borrowed(state))
        };
        Ok(Measurement {
            cluster,
            basis,
            state,
            max_imag: AtomicU64::new(0),
        })
    }

    pub fn is_plain(&self) -> bool {
        self.basis.is_plain()
    }

    pub fn max_imag(&self) -> f64 {
        f64::from_bits(self.max_imag.load(Ordering::Relaxed))
    }

    /// Real expectation value of `op`. On the sector path the operator is
    /// translation averaged, so this is only meaningful for momentum
    /// eigenstates.
    pub fn expect(&self, op: &SwapOperator) -> Result<f64> {
        let z = if self.is_plain() {
            plain_expectation(op, &self.basis, &self.state)
        } else {
            op.expectation(&self.basis, &self.state)?
        };
        // non-negative floats order like their bit patterns
        self.max_imag.fetch_max(z.im.abs().to_bits(), Ordering::Relaxed);
        if z.im.abs() > IMAG_TOL {
            return Err(Error::InvalidInput(format!("expectation value has imaginary part {:.3e}", z.im)));
        }
        Ok(z.re)
    }

    /// Full matrix `<S_i . S_j>`.
    pub fn spin_correlations(&self) -> Result<SpinCorrelations> {
        let n = self.cluster.n_sites();
        let mut m = vec![vec![0.0; n]; n];
        if self.is_plain() {
            let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
            let vals: Vec<Result<f64>> = pairs
                .par_iter()
                .map(|&(i, j)| self.expect(&SwapOperator::spin_dot(i, j)))
                .collect();
            for (&(i, j), v) in pairs.iter().zip(vals) {
                let v = v?;
                m[i][j] = v;
                m[j][i] = v;
            }
        } else {
            // translation invariant: <S_i . S_j> depends on r_j - r_i only
            let from_origin: Vec<f64> = (0..n)
                .map(|d| self.expect(&SwapOperator::spin_dot(0, d)))
                .collect::<Result<_>>()?;
            let o = self.cluster.coords(0);
            for (i, row) in m.iter_mut().enumerate() {
                let ri = self.cluster.coords(i);
                for (j, x) in row.iter_mut().enumerate() {
                    let rj = self.cluster.coords(j);
                    let d = self.cluster.site_at([o[0] + rj[0] - ri[0], o[1] + rj[1] - ri[1]]);
                    *x = from_origin[d];
                }
            }
        }
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 0.75;
        }
        Ok(SpinCorrelations { values: m })
    }
}

fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// `<v|O|v>` on a plain basis without building `O v`. Partial sums over fixed
/// chunks keep the result independent of the thread count.
fn plain_expectation(op: &SwapOperator, basis: &SectorBasis, v: &[Complex64]) -> Complex64 {
    const CHUNK: usize = 1 << 14;
    let states = basis.states();
    let partial: Vec<Complex64> = (0..states.len().div_ceil(CHUNK))
        .into_par_iter()
        .map(|k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in k * CHUNK..((k + 1) * CHUNK).min(states.len()) {
                if v[i] == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let c = states[i];
                let mut row = Complex64::new(0.0, 0.0);
                for t in &op.terms {
                    let d = t.act(c);
                    let j = if d == c { i } else { basis.index_of(d).expect("swaps preserve Sz") };
                    row += v[j].conj() * t.coefficient;
                }
                acc += row * v[i];
            }
            acc
        })
        .collect();
    partial.into_iter().sum()
}

/// `<S_i . S_j>` for all site pairs (diagonal entries are 3/4).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinCorrelations {
    pub values: Vec<Vec<f64>>,
}

impl SpinCorrelations {
    /// `(1/(N(N+2))) sum_ij <S_i.S_j> e^{iQ.(r_j - r_i)}`.
    pub fn structure_factor(&self, cluster: &Cluster, q: &Momentum) -> Result<f64> {
        if !cluster.is_allowed(q) {
            return Err(Error::MomentumNotAllowed {
                momentum: q.to_string(),
                n_sites: cluster.n_sites(),
            });
        }
        let n = cluster.n_sites();
        let [qx, qy] = q.radians();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            let ri = cluster.coords(i);
            for j in 0..n {
                let rj = cluster.coords(j);
                let phase = qx * (rj[0] - ri[0]) as f64 + qy * (rj[1] - ri[1]) as f64;
                acc += Complex64::from_polar(self.values[i][j], phase);
            }
        }
        Ok(acc.re / (n * (n + 2)) as f64)
    }
}

/// `M_N^2(Q)` for each requested momentum, measured on one state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureFactorReport {
    pub n_sites: usize,
    pub values: Vec<(String, f64)>,
}

impl StructureFactorReport {
    pub fn get(&self, label: &str) -> Option<f64> {
        self.values.iter().find(|(k, _)| k == label).map(|e| e.1)
    }
}

pub fn structure_factor(
    cluster: &Cluster,
    basis: &SectorBasis,
    state: &[Complex64],
    q: &Momentum,
) -> Result<f64> {
    let m = Measurement::new(cluster, basis, state, CorrelationPath::Auto)?;
    m.spin_correlations()?.structure_factor(cluster, q)
}

/// `M_N^2` at every momentum in `qs` (all allowed momenta when empty).
pub fn structure_factor_report(m: &Measurement, qs: &[Momentum]) -> Result<StructureFactorReport> {
    let corr = m.spin_correlations()?;
    let all;
    let qs = if qs.is_empty() {
        all = m.cluster.allowed_momenta();
        &all
    } else {
        qs
    };
    let values = qs
        .iter()
        .map(|q| Ok((q.to_string(), corr.structure_factor(m.cluster, q)?)))
        .collect::<Result<_>>()?;
    Ok(StructureFactorReport {
        n_sites: m.cluster.n_sites(),
        values,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BondClass {
    /// Nearest neighbours.
    First,
    /// Diagonal next-nearest neighbours.
    Second,
}

impl BondClass {
    pub fn bonds<'c>(&self, cluster: &'c Cluster) -> &'c [Bond] {
        match self {
            BondClass::First => cluster.bonds1(),
            BondClass::Second => cluster.bonds2(),
        }
    }

    pub fn default_direction(&self) -> Vec2 {
        match self {
            BondClass::First => [1, 0],
            BondClass::Second => [1, 1],
        }
    }

    fn admits(&self, d: Vec2) -> bool {
        match self {
            BondClass::First => d[0].abs() + d[1].abs() == 1,
            BondClass::Second => d[0].abs() == 1 && d[1].abs() == 1,
        }
    }
}

impl std::str::FromStr for BondClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" | "first" | "nn" => Ok(BondClass::First),
            "2" | "second" | "nnn" => Ok(BondClass::Second),
            _ => Err(Error::InvalidInput(format!("unknown bond class `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimerCorrelationEntry {
    pub i: usize,
    pub j: usize,
    /// Displacement from site `i` to site `j`.
    pub direction: Vec2,
    /// Minimal-image separation of the bond midpoints, doubled coordinates.
    pub midpoint_separation: Vec2,
    /// Shares a site with the reference bond; the joint term is then the
    /// symmetrized product.
    pub overlaps_reference: bool,
    pub connected: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimerCorrelationReport {
    pub class: BondClass,
    pub reference: (usize, usize),
    pub reference_direction: Vec2,
    /// `<S_0 . S_{r1}>`
    pub reference_energy: f64,
    pub entries: Vec<DimerCorrelationEntry>,
    /// The farthest-bond search was limited to the Shastry-Sutherland
    /// pattern containing the reference bond.
    pub pattern_restricted: bool,
    /// Index into `entries` of the farthest non-overlapping bond.
    pub farthest: Option<usize>,
}

impl DimerCorrelationReport {
    /// `D_N(r_m)`
    pub fn farthest_value(&self) -> Option<f64> {
        self.farthest.map(|k| self.entries[k].connected)
    }
}

/// Connected correlations `<(S_0.S_r1)(S_i.S_j)> - <S_0.S_r1><S_i.S_j>` between
/// the reference bond at site 0 along `r1` and every bond of the class.
pub fn dimer_correlations(m: &Measurement, class: BondClass, r1: Option<Vec2>) -> Result<DimerCorrelationReport> {
    let c = m.cluster;
    let r1 = r1.unwrap_or(class.default_direction());
    if !class.admits(r1) {
        return Err(Error::InvalidInput(format!("direction {r1:?} does not belong to bond class {class:?}")));
    }
    let o = c.coords(0);
    let s1 = c.site_at([o[0] + r1[0], o[1] + r1[1]]);
    let reference = SwapOperator::spin_dot(0, s1);
    let e_ref = m.expect(&reference)?;
    let mid_ref = [2 * o[0] + r1[0], 2 * o[1] + r1[1]];
    let targets = class.bonds(c);
    let mut entries = Vec::with_capacity(targets.len());
    for b in targets {
        let target = SwapOperator::spin_dot(b.i, b.j);
        let overlaps = [b.i, b.j].iter().any(|&s| s == 0 || s == s1);
        // bonds sharing a site do not commute; their symmetrized product is
        // the Hermitian one
        let product = if overlaps {
            reference.times(&target).plus(&target.times(&reference)).scaled(0.5)
        } else {
            reference.times(&target)
        };
        let joint = m.expect(&product)?;
        let e_t = m.expect(&target)?;
        let ri = c.coords(b.i);
        let mid = [2 * ri[0] + b.displacement[0], 2 * ri[1] + b.displacement[1]];
        let sep = c.min_image([mid[0] - mid_ref[0], mid[1] - mid_ref[1]], 2);
        entries.push(DimerCorrelationEntry {
            i: b.i,
            j: b.j,
            direction: b.displacement,
            midpoint_separation: sep,
            overlaps_reference: overlaps,
            connected: joint - e_ref * e_t,
        });
    }
    // For diagonal bonds D(r_m) pairs two dimers of one Shastry-Sutherland
    // pattern; other classes (or odd tori) search every bond.
    let key = (0.min(s1), 0.max(s1));
    let pattern: Option<Vec<(usize, usize)>> = match class {
        BondClass::Second => SS_OFFSETS
            .iter()
            .filter_map(|&o| ss_pattern(c, o).ok())
            .find(|p| p.dimers.contains(&key))
            .map(|p| p.dimers),
        BondClass::First => None,
    };
    // farthest midpoint, ties to the lexicographically smallest site pair
    let farthest = entries
        .iter()
        .enumerate()
        .filter(|(_, e)| !e.overlaps_reference)
        .filter(|(_, e)| {
            pattern
                .as_ref()
                .is_none_or(|p| p.contains(&(e.i.min(e.j), e.i.max(e.j))))
        })
        .min_by_key(|(_, e)| {
            let d2 = e.midpoint_separation[0].pow(2) + e.midpoint_separation[1].pow(2);
            (std::cmp::Reverse(d2), e.i.min(e.j), e.i.max(e.j))
        })
        .map(|(k, _)| k);
    Ok(DimerCorrelationReport {
        class,
        reference: (0, s1),
        reference_direction: r1,
        reference_energy: e_ref,
        entries,
        pattern_restricted: pattern.is_some(),
        farthest,
    })
}

/// Least-squares line `M^2 = m0^2/8 + const/sqrt(N)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FssFit {
    pub points: Vec<(usize, f64)>,
    pub m0_squared: f64,
    pub constant: f64,
}

impl FssFit {
    /// A non-positive extrapolation means no long-range order.
    pub fn order_present(&self) -> bool {
        self.m0_squared > 0.0
    }
}

pub fn fss_extrapolate(points: &[(usize, f64)]) -> Result<FssFit> {
    if points.len() < 2 {
        return Err(Error::InvalidInput("finite-size fit needs at least two sizes".into()));
    }
    let mut sizes: Vec<usize> = points.iter().map(|p| p.0).collect();
    sizes.sort_unstable();
    if sizes.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidInput("duplicate cluster size in finite-size fit".into()));
    }
    if sizes[0] == 0 {
        return Err(Error::InvalidInput("cluster size must be positive".into()));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| 1.0 / (p.0 as f64).sqrt()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(points).map(|(x, p)| (x - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    Ok(FssFit {
        points: points.to_vec(),
        m0_squared: 8.0 * intercept,
        constant: slope,
    })
}

/// `<S_i . S_j>` on every bond of a class, for correlation maps.
pub fn bond_map(m: &Measurement, class: BondClass) -> Result<Vec<(Bond, f64)>> {
    class
        .bonds(m.cluster)
        .iter()
        .map(|b| Ok((*b, m.expect(&SwapOperator::spin_dot(b.i, b.j))?)))
        .collect()
}

/// Expand and measure a single operator; convenience for one-off checks.
pub fn expectation(
    cluster: &Cluster,
    basis: &SectorBasis,
    state: &[Complex64],
    op: &SwapOperator,
    path: CorrelationPath,
) -> Result<f64> {
    Measurement::new(cluster, basis, state, path)?.expect(op)
}

/// Normalized copy of a state vector.
pub fn normalized(v: &[Complex64]) -> StateVector {
    let n = crate::linalg::norm(v);
    v.iter().map(|x| x / n).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::SectorBasis;

    #[test]
    fn polarized_state() {
        let c = Cluster::named("8").unwrap();
        let b = SectorBasis::build_sz_basis(&c, 4.0).unwrap();
        let v = vec![Complex64::new(1.0, 0.0)];
        let q = c.momentum("0,0").unwrap();
        assert!((structure_factor(&c, &b, &v, &q).unwrap() - 0.25).abs() < 1e-14);
    }

    #[test]
    fn fss_examples() {
        let f = fss_extrapolate(&[(20, 0.1), (32, 0.1)]).unwrap();
        assert!((f.m0_squared - 0.8).abs() < 1e-12 && f.constant.abs() < 1e-12);
        let f = fss_extrapolate(&[(16, 0.25), (64, 0.125)]).unwrap();
        assert!(f.m0_squared.abs() < 1e-12 && !f.order_present());
        assert!(fss_extrapolate(&[(20, 0.1), (20, 0.2)]).is_err());
        assert!(fss_extrapolate(&[(20, 0.1)]).is_err());
    }

    #[test]
    fn rejects_bad_input() {
        let c = Cluster::named("20").unwrap();
        let b = SectorBasis::build_sz_basis(&Cluster::named("8").unwrap(), 0.0).unwrap();
        let v = vec![Complex64::new(0.5, 0.0); b.dim()];
        assert!(Measurement::new(&c, &b, &v, CorrelationPath::Auto).is_err());
        let c8 = Cluster::named("8").unwrap();
        assert!(matches!(
            Measurement::new(&c8, &b, &v, CorrelationPath::Auto),
            Err(Error::NotNormalized(_))
        ));
        let v = normalized(&v);
        let m = Measurement::new(&c8, &b, &v, CorrelationPath::Auto).unwrap();
        assert!(dimer_correlations(&m, BondClass::First, Some([1, 1])).is_err());
        let corr = m.spin_correlations().unwrap();
        let q = Momentum::parse("pi/2,0", 8).unwrap();
        assert!(matches!(corr.structure_factor(&c8, &q), Err(Error::MomentumNotAllowed { .. })));
    }
}
