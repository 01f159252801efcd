//! Dimer product states: the four Shastry-Sutherland patterns, arbitrary
//! coverings, overlaps and the comparison with computed ground spaces.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianOperator;
use crate::hilbert::{SectorBasis, StateVector};
use crate::lattice::{Cluster, Vec2};
use crate::linalg::{axpy, dot, norm, scale};
use crate::spectrum::SpectrumResult;

pub const SS_OFFSETS: [Vec2; 4] = [[0, 0], [1, 0], [0, 1], [1, 1]];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DimerClass {
    /// Nearest neighbors.
    Nearest,
    /// Second neighbors, displacement `(±1, ±1)`.
    Diagonal,
    /// Third neighbors, displacement `(±2, 0)` or `(0, ±2)`.
    Axial,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimerPattern {
    /// `(i, j)` with `i < j`, sorted.
    pub dimers: Vec<(usize, usize)>,
    pub classes: Vec<DimerClass>,
    /// Translation label of Shastry-Sutherland patterns.
    pub offset: Option<Vec2>,
}

impl DimerPattern {
    /// Pattern from explicit pairs; checks that it is a perfect matching and
    /// classifies each dimer.
    pub fn from_pairs(cluster: &Cluster, pairs: &[(usize, usize)]) -> Result<Self> {
        let n = cluster.n_sites();
        let mut seen = vec![false; n];
        let mut dimers = Vec::with_capacity(pairs.len());
        for &(a, b) in pairs {
            if a >= n || b >= n || a == b || seen[a] || seen[b] {
                return Err(Error::InvalidPattern(format!("pair ({a},{b}) breaks the matching")));
            }
            seen[a] = true;
            seen[b] = true;
            dimers.push((a.min(b), a.max(b)));
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidPattern("not every site is covered".into()));
        }
        dimers.sort_unstable();
        let classes = dimers
            .iter()
            .map(|&(a, b)| classify(cluster, a, b))
            .collect::<Result<Vec<_>>>()?;
        Ok(DimerPattern {
            dimers,
            classes,
            offset: None,
        })
    }

    pub fn partner(&self, site: usize) -> Option<usize> {
        self.dimers.iter().find_map(|&(a, b)| {
            if a == site {
                Some(b)
            } else if b == site {
                Some(a)
            } else {
                None
            }
        })
    }

    /// Image under a site permutation.
    pub fn permuted(&self, cluster: &Cluster, perm: &[usize]) -> Result<Self> {
        let pairs: Vec<(usize, usize)> = self.dimers.iter().map(|&(a, b)| (perm[a], perm[b])).collect();
        Self::from_pairs(cluster, &pairs)
    }

    /// Grid of site indices followed by the dimer list; partners share a letter.
    pub fn diagram(&self, cluster: &Cluster) -> String {
        let mut letter = vec![' '; cluster.n_sites()];
        let alphabet: Vec<char> = ('a'..='z').chain('A'..='Z').collect();
        for (k, &(a, b)) in self.dimers.iter().enumerate() {
            letter[a] = alphabet[k % alphabet.len()];
            letter[b] = alphabet[k % alphabet.len()];
        }
        let (xmin, xmax, ymin, ymax) = cluster.bounds();
        let mut s = String::new();
        for y in (ymin..=ymax).rev() {
            for x in xmin..=xmax {
                let p = [x, y];
                if cluster.canonical(p) == p {
                    let i = cluster.site_at(p);
                    let _ = write!(s, " {:>2}{}", i, letter[i]);
                } else {
                    s.push_str("    .");
                }
            }
            s.push('\n');
        }
        for (&(a, b), c) in self.dimers.iter().zip(&self.classes) {
            let _ = writeln!(s, "{a}-{b} {c:?}");
        }
        s
    }
}

fn classify(cluster: &Cluster, a: usize, b: usize) -> Result<DimerClass> {
    let pa = cluster.coords(a);
    let pb = cluster.coords(b);
    let same = |v: Vec2| cluster.canonical([pa[0] + v[0], pa[1] + v[1]]) == pb;
    if [[1, 0], [-1, 0], [0, 1], [0, -1]].into_iter().any(same) {
        Ok(DimerClass::Nearest)
    } else if [[1, 1], [1, -1], [-1, 1], [-1, -1]].into_iter().any(same) {
        Ok(DimerClass::Diagonal)
    } else if [[2, 0], [-2, 0], [0, 2], [0, -2]].into_iter().any(same) {
        Ok(DimerClass::Axial)
    } else {
        Err(Error::InvalidPattern(format!("sites {a} and {b} are not first, second or third neighbors")))
    }
}

/// Shastry-Sutherland pattern shifted by `offset`: diagonal dimers whose
/// orientation alternates between the two sublattices.
pub fn ss_pattern(cluster: &Cluster, offset: Vec2) -> Result<DimerPattern> {
    if !SS_OFFSETS.contains(&offset) {
        return Err(Error::InvalidPattern(format!("offset {offset:?} is not one of {SS_OFFSETS:?}")));
    }
    if !cluster.has_even_periods() {
        return Err(Error::InvalidCluster(
            "the period-2 dimer patterns need even spanning coordinates".into(),
        ));
    }
    let mut pairs = Vec::new();
    for (i, &[x, y]) in cluster.site_coords().iter().enumerate() {
        let u = (x - offset[0]).rem_euclid(2);
        let v = (y - offset[1]).rem_euclid(2);
        let d = match (u, v) {
            (0, 0) => [1, 1],
            (1, 1) => [-1, -1],
            (0, 1) => [-1, 1],
            _ => [1, -1],
        };
        let j = cluster.site_at([x + d[0], y + d[1]]);
        if i < j {
            pairs.push((i, j));
        }
    }
    let mut p = DimerPattern::from_pairs(cluster, &pairs)?;
    p.offset = Some(offset);
    Ok(p)
}

/// The two valid coverings of the 4 x 4 torus built only from axial
/// (distance-2) dimers. On larger tori axial dimers sit in too few plaquettes
/// for such coverings to exist.
pub fn winding_patterns_16(cluster: &Cluster) -> Result<Vec<DimerPattern>> {
    if cluster.spanning_vectors() != [[4, 0], [0, 4]] {
        return Err(Error::InvalidCluster("winding patterns are defined on the 4 x 4 torus".into()));
    }
    WINDING_16
        .iter()
        .map(|pairs| {
            let sites: Vec<(usize, usize)> = pairs
                .iter()
                .map(|&(a, b)| (cluster.site_at(a), cluster.site_at(b)))
                .collect();
            DimerPattern::from_pairs(cluster, &sites)
        })
        .collect()
}

/// Dimer endpoints (coordinates) of the two all-axial valid coverings of the
/// 4 x 4 torus. Each mixes horizontal and vertical dimers; the two are
/// related by a reflection through the diagonal.
const WINDING_16: [[(Vec2, Vec2); 8]; 2] = [
    [
        ([-1, -1], [1, -1]),
        ([0, -1], [0, 1]),
        ([2, -1], [2, 1]),
        ([-1, 0], [-1, 2]),
        ([0, 0], [2, 0]),
        ([1, 0], [1, 2]),
        ([-1, 1], [1, 1]),
        ([0, 2], [2, 2]),
    ],
    [
        ([-1, -1], [-1, 1]),
        ([0, -1], [2, -1]),
        ([1, -1], [1, 1]),
        ([-1, 0], [1, 0]),
        ([0, 0], [0, 2]),
        ([2, 0], [2, 2]),
        ([0, 1], [2, 1]),
        ([-1, 2], [1, 2]),
    ],
];

/// Normalized dimer product state as sparse real amplitudes over spin
/// configurations (sorted by configuration).
#[derive(Clone, Debug, PartialEq)]
pub struct VbsState {
    pub pattern: DimerPattern,
    pub n_sites: usize,
    pub amplitudes: Vec<(u64, f64)>,
}

impl VbsState {
    /// Product of singlets `(|up_i dn_j> - |dn_i up_j>)/sqrt 2` with `i < j`.
    pub fn new(cluster: &Cluster, pattern: DimerPattern) -> Self {
        let n = cluster.n_sites();
        let m = pattern.dimers.len();
        let amp = 0.5f64.powf(m as f64 / 2.0);
        let mut amplitudes = Vec::with_capacity(1 << m);
        for choice in 0u64..(1u64 << m) {
            let mut c = 0u64;
            let mut sign = 1.0;
            for (k, &(i, j)) in pattern.dimers.iter().enumerate() {
                if (choice >> k) & 1 == 0 {
                    c |= 1 << i;
                } else {
                    c |= 1 << j;
                    sign = -sign;
                }
            }
            amplitudes.push((c, sign * amp));
        }
        amplitudes.sort_unstable_by_key(|e| e.0);
        VbsState {
            pattern,
            n_sites: n,
            amplitudes,
        }
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt()
    }

    pub fn overlap(&self, other: &VbsState) -> f64 {
        sparse_dot(&self.amplitudes, &other.amplitudes)
    }

    /// Dense amplitudes on the plain `Sz = 0` basis.
    pub fn to_plain(&self, plain: &SectorBasis) -> Result<StateVector> {
        if !plain.is_plain() || plain.n_sites() != self.n_sites || plain.n_up() as usize * 2 != self.n_sites {
            return Err(Error::InvalidInput("expected the plain Sz = 0 basis of the cluster".into()));
        }
        let mut v = vec![Complex64::new(0.0, 0.0); plain.dim()];
        for &(c, a) in &self.amplitudes {
            let i = plain.index_of(c).expect("Sz = 0 configuration");
            v[i] = Complex64::new(a, 0.0);
        }
        Ok(v)
    }

    /// Components in a momentum (or plain) sector; not normalized.
    pub fn project(&self, basis: &SectorBasis) -> StateVector {
        basis.project_sparse(&self.amplitudes)
    }

    /// Site permutation acting on the amplitudes.
    pub fn permuted(&self, perm: &[usize]) -> Vec<(u64, f64)> {
        let mut out: Vec<(u64, f64)> = self
            .amplitudes
            .iter()
            .map(|&(c, a)| {
                let mut d = 0u64;
                for (s, &t) in perm.iter().enumerate() {
                    if (c >> s) & 1 == 1 {
                        d |= 1 << t;
                    }
                }
                (d, a)
            })
            .collect();
        out.sort_unstable_by_key(|e| e.0);
        out
    }

    /// `|| H psi ||` computed on the sparse amplitudes.
    pub fn residual(&self, op: &HamiltonianOperator) -> f64 {
        let hv = apply_sparse(op, &self.amplitudes);
        hv.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt()
    }

    /// `|| H psi - E psi ||` with `E = <psi|H|psi>`, and `E`.
    pub fn eigen_residual(&self, op: &HamiltonianOperator) -> (f64, f64) {
        let hv = apply_sparse(op, &self.amplitudes);
        let e = sparse_dot(&self.amplitudes, &hv);
        let mut r = hv;
        let mut map: BTreeMap<u64, f64> = r.drain(..).collect();
        for &(c, a) in &self.amplitudes {
            *map.entry(c).or_insert(0.0) -= e * a;
        }
        (map.values().map(|x| x * x).sum::<f64>().sqrt(), e)
    }
}

/// `H psi` for a real sparse plain-basis vector; entries sorted.
pub fn apply_sparse(op: &HamiltonianOperator, v: &[(u64, f64)]) -> Vec<(u64, f64)> {
    let mut acc: HashMap<u64, f64> = HashMap::with_capacity(v.len() * 4);
    for &(c, a) in v {
        op.for_each_element(c, |d, amp| {
            *acc.entry(d).or_insert(0.0) += amp * a;
        });
    }
    let mut out: Vec<(u64, f64)> = acc.into_iter().collect();
    out.sort_unstable_by_key(|e| e.0);
    out
}

pub fn sparse_dot(a: &[(u64, f64)], b: &[(u64, f64)]) -> f64 {
    let (mut i, mut j, mut s) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                s += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    s
}

/// The four Shastry-Sutherland product states, offsets in [`SS_OFFSETS`] order.
pub fn ss_states(cluster: &Cluster) -> Result<Vec<VbsState>> {
    SS_OFFSETS
        .iter()
        .map(|&o| Ok(VbsState::new(cluster, ss_pattern(cluster, o)?)))
        .collect()
}

pub fn build_ss_state(cluster: &Cluster, offset: Vec2) -> Result<VbsState> {
    Ok(VbsState::new(cluster, ss_pattern(cluster, offset)?))
}

/// Overlap matrix `<psi_a|psi_b>`.
pub fn gram_matrix(states: &[VbsState]) -> DMatrix<f64> {
    let n = states.len();
    DMatrix::from_fn(n, n, |a, b| states[a].overlap(&states[b]))
}

/// Numerical rank of a symmetric positive semidefinite matrix.
pub fn psd_rank(m: &DMatrix<f64>, tol: f64) -> usize {
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    eig.eigenvalues.iter().filter(|&&x| x > tol).count()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectorOverlap {
    pub momentum: String,
    pub ground_vectors: usize,
    /// Dimension of the span of the reference states in this sector.
    pub reference_rank: usize,
    /// `sum_g || P_ref g ||^2` over the sector's ground vectors.
    pub captured: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundSpaceOverlap {
    pub ground_energy: f64,
    pub ground_dimension: usize,
    pub reference_dimension: usize,
    /// Mean squared projection of the ground vectors onto the reference span;
    /// 1 when the computed ground space lies inside that span.
    pub overlap: f64,
    pub sectors: Vec<SectorOverlap>,
}

/// Compare the lowest multiplet across the given sector spectra with the span
/// of `states`. Each spectrum must come with eigenvectors and the basis it was
/// computed in. Levels within `degeneracy_tol` of the global minimum count as
/// ground states.
pub fn ground_space_overlap(
    spectra: &[(&SpectrumResult, &SectorBasis)],
    states: &[VbsState],
    degeneracy_tol: f64,
) -> Result<GroundSpaceOverlap> {
    let e0 = spectra
        .iter()
        .filter_map(|(r, _)| r.ground_energy())
        .fold(f64::INFINITY, f64::min);
    if !e0.is_finite() {
        return Err(Error::InvalidInput("no eigenvalues supplied".into()));
    }
    let thr = degeneracy_tol * e0.abs().max(1.0);
    let mut sectors = Vec::new();
    let mut total = 0.0;
    let mut count = 0;
    let mut ref_dim = 0;
    for (r, basis) in spectra {
        let ground: Vec<usize> = (0..r.eigenvalues.len())
            .filter(|&i| r.eigenvalues[i] - e0 <= thr)
            .collect();
        if !ground.is_empty() && r.eigenvectors.len() != r.eigenvalues.len() {
            return Err(Error::InvalidInput("spectrum lacks eigenvectors".into()));
        }
        // orthonormal basis of the reference span in this sector
        let mut q: Vec<StateVector> = Vec::new();
        for s in states {
            let mut x = s.project(basis);
            for _ in 0..2 {
                for y in &q {
                    let c = dot(y, &x);
                    axpy(-c, y, &mut x);
                }
            }
            let nx = norm(&x);
            if nx > 1e-8 {
                scale(&mut x, 1.0 / nx);
                q.push(x);
            }
        }
        let mut captured = 0.0;
        for &i in &ground {
            let g = &r.eigenvectors[i];
            captured += q.iter().map(|y| dot(y, g).norm_sqr()).sum::<f64>();
        }
        total += captured;
        count += ground.len();
        ref_dim += q.len();
        sectors.push(SectorOverlap {
            momentum: r.sector.momentum_label(),
            ground_vectors: ground.len(),
            reference_rank: q.len(),
            captured,
        });
    }
    Ok(GroundSpaceOverlap {
        ground_energy: e0,
        ground_dimension: count,
        reference_dimension: ref_dim,
        overlap: if count > 0 { total / count as f64 } else { 0.0 },
        sectors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::ModelParams;
    use crate::swap::SwapOperator;

    #[test]
    fn ss_patterns_are_diagonal_matchings() {
        for name in ["16", "20", "32", "8"] {
            let c = Cluster::named(name).unwrap();
            for o in SS_OFFSETS {
                let p = ss_pattern(&c, o).unwrap();
                assert_eq!(p.dimers.len(), c.n_sites() / 2);
                assert!(p.classes.iter().all(|&k| k == DimerClass::Diagonal));
            }
        }
        assert!(ss_pattern(&Cluster::named("10").unwrap(), [0, 0]).is_err());
        assert!(ss_pattern(&Cluster::named("16").unwrap(), [2, 0]).is_err());
    }

    #[test]
    fn product_state_structure() {
        let c = Cluster::named("16").unwrap();
        let s = build_ss_state(&c, [1, 0]).unwrap();
        assert_eq!(s.amplitudes.len(), 256);
        assert!(s.amplitudes.iter().all(|e| (e.1.abs() - 0.0625).abs() < 1e-15));
        assert!((s.norm() - 1.0).abs() < 1e-14);
        let plain = SectorBasis::build_sz_basis(&c, 0.0).unwrap();
        let v = s.to_plain(&plain).unwrap();
        for i in 0..16 {
            for j in (i + 1)..16 {
                let e = SwapOperator::spin_dot(i, j).expectation(&plain, &v).unwrap().re;
                let want = if s.pattern.partner(i) == Some(j) { -0.75 } else { 0.0 };
                assert!((e - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn annihilated_at_delta_one_and_gamma_zero() {
        let c = Cluster::named("20").unwrap();
        for s in ss_states(&c).unwrap() {
            for (g, d) in [(0.3, 1.0), (0.0, 0.0), (0.0, 0.6)] {
                let op = HamiltonianOperator::build_operator(&c, &ModelParams::new(1.0, g, d).unwrap()).unwrap();
                assert!(s.residual(&op) < 1e-12);
            }
        }
    }

    #[test]
    fn gram_is_full_rank() {
        let c = Cluster::named("20").unwrap();
        let g = gram_matrix(&ss_states(&c).unwrap());
        for i in 0..4 {
            assert!((g[(i, i)] - 1.0).abs() < 1e-14);
        }
        assert_eq!(psd_rank(&g, 1e-10), 4);
    }

    #[test]
    fn winding_patterns() {
        let c = Cluster::named("16").unwrap();
        let op = HamiltonianOperator::build_operator(&c, &ModelParams::new(1.0, 0.5, 1.0).unwrap()).unwrap();
        for p in winding_patterns_16(&c).unwrap() {
            assert!(p.classes.iter().all(|&k| k == DimerClass::Axial));
            assert!(VbsState::new(&c, p).residual(&op) < 1e-12);
        }
        assert!(winding_patterns_16(&Cluster::named("20").unwrap()).is_err());
    }
}
