//! The model Hamiltonian
//!
//! ```text
//! H = J(1-γ)(1-δ) Σ_<ij> S_i.S_j + Jγ(1-δ) Σ_<<ij>> S_i.S_j + Jδ H0,
//! H0 = Σ_plaquettes (1/4) P^A P^B,   P = |S_i+S_j+S_k|^2 - 3/4,
//! ```
//!
//! applied matrix-free on a [`SectorBasis`]. Every term is evaluated through
//! spin exchanges: `S_i.S_j = T_ij/2 - 1/4` and `P = T_ij + T_ik + T_jk`,
//! so a plaquette term is nine double swaps.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{swap_bits, SectorBasis, StateVector};
use crate::lattice::{triple_pairs, Cluster, Sublattice};
use crate::linalg::{CsrMatrix, LinearOperator};
use crate::swap::{require_normalized, SwapOperator};

/// Terms with a smaller coefficient are dropped.
pub const COEFFICIENT_CUTOFF: f64 = 1e-15;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub j: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl ModelParams {
    pub fn new(j: f64, gamma: f64, delta: f64) -> Result<Self> {
        let p = ModelParams { j, gamma, delta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.j.is_finite() && self.j > 0.0) {
            return Err(Error::InvalidParams(format!("J must be positive, got {}", self.j)));
        }
        for (name, v) in [("gamma", self.gamma), ("delta", self.delta)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParams(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        Ok(())
    }

    /// Coupling of nearest-neighbor bonds, `J(1-γ)(1-δ)`.
    pub fn j1(&self) -> f64 {
        self.j * (1.0 - self.gamma) * (1.0 - self.delta)
    }

    /// Coupling of diagonal bonds, `Jγ(1-δ)`.
    pub fn j2(&self) -> f64 {
        self.j * self.gamma * (1.0 - self.delta)
    }

    /// Prefactor of `H0`, `Jδ`.
    pub fn jp(&self) -> f64 {
        self.j * self.delta
    }
}

/// `coefficient * S_i . S_j`
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BondTerm {
    pub i: usize,
    pub j: usize,
    pub coefficient: f64,
}

/// `coefficient * (T_a1 + T_a2 + T_a3)(T_b1 + T_b2 + T_b3)`, which equals
/// `coefficient * P^A P^B` on the plaquette.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlaquetteTerm {
    pub a_transpositions: [(usize, usize); 3],
    pub b_transpositions: [(usize, usize); 3],
    pub coefficient: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianOperator {
    n_sites: usize,
    bonds: Vec<BondTerm>,
    plaquettes: Vec<PlaquetteTerm>,
}

impl HamiltonianOperator {
    pub fn build_operator(cluster: &Cluster, params: &ModelParams) -> Result<Self> {
        params.validate()?;
        let mut bonds = Vec::new();
        for (list, coef) in [(cluster.bonds1(), params.j1()), (cluster.bonds2(), params.j2())] {
            if coef.abs() >= COEFFICIENT_CUTOFF {
                bonds.extend(list.iter().map(|b| BondTerm {
                    i: b.i,
                    j: b.j,
                    coefficient: coef,
                }));
            }
        }
        let coef = params.jp() / 4.0;
        let plaquettes = if coef.abs() >= COEFFICIENT_CUTOFF {
            cluster
                .plaquettes()
                .iter()
                .map(|p| PlaquetteTerm {
                    a_transpositions: triple_pairs(p.a_triple()),
                    b_transpositions: triple_pairs(p.b_triple()),
                    coefficient: coef,
                })
                .collect()
        } else {
            Vec::new()
        };
        Ok(HamiltonianOperator {
            n_sites: cluster.n_sites(),
            bonds,
            plaquettes,
        })
    }

    /// Operator from explicit terms on `n_sites` spins.
    pub fn from_terms(n_sites: usize, bonds: Vec<BondTerm>, plaquettes: Vec<PlaquetteTerm>) -> Self {
        let bonds = bonds
            .into_iter()
            .filter(|b| b.coefficient.abs() >= COEFFICIENT_CUTOFF)
            .collect();
        let plaquettes = plaquettes
            .into_iter()
            .filter(|p| p.coefficient.abs() >= COEFFICIENT_CUTOFF)
            .collect();
        HamiltonianOperator {
            n_sites,
            bonds,
            plaquettes,
        }
    }

    /// The three unit-coupling pieces: nearest-neighbor bonds, diagonal
    /// bonds and `H0`, so that `H = j1*F[0] + j2*F[1] + jp*F[2]`.
    pub fn families(cluster: &Cluster) -> [HamiltonianOperator; 3] {
        let one = |g: f64, d: f64| ModelParams { j: 1.0, gamma: g, delta: d };
        let nn = Self::build_operator(cluster, &one(0.0, 0.0)).expect("valid");
        let nnn = Self::build_operator(cluster, &one(1.0, 0.0)).expect("valid");
        let h0 = Self::build_operator(cluster, &one(0.0, 1.0)).expect("valid");
        [nn, nnn, h0]
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn bonds(&self) -> &[BondTerm] {
        &self.bonds
    }

    pub fn plaquettes(&self) -> &[PlaquetteTerm] {
        &self.plaquettes
    }

    /// Emit `H|c> = diag |c> + Σ amp |d>`; the diagonal part is reported once
    /// with `d == c`, off-diagonal contributions may repeat a configuration.
    #[inline]
    pub fn for_each_element(&self, c: u64, mut emit: impl FnMut(u64, f64)) {
        let mut diag = 0.0;
        for b in &self.bonds {
            let differ = ((c >> b.i) ^ (c >> b.j)) & 1 == 1;
            if differ {
                diag -= 0.25 * b.coefficient;
                emit(swap_bits(c, b.i, b.j), 0.5 * b.coefficient);
            } else {
                diag += 0.25 * b.coefficient;
            }
        }
        for p in &self.plaquettes {
            for &(bi, bj) in &p.b_transpositions {
                let cb = swap_bits(c, bi, bj);
                for &(ai, aj) in &p.a_transpositions {
                    let d = swap_bits(cb, ai, aj);
                    if d == c {
                        diag += p.coefficient;
                    } else {
                        emit(d, p.coefficient);
                    }
                }
            }
        }
        emit(c, diag);
    }

    /// Matrix-free view on a sector, usable by the eigensolver.
    pub fn on<'a>(&'a self, basis: &'a SectorBasis) -> SectorOperator<'a> {
        SectorOperator { op: self, basis }
    }

    /// `H v` in the sector.
    pub fn apply(&self, basis: &SectorBasis, v: &[Complex64]) -> Result<StateVector> {
        basis.check_len(v)?;
        let mut y = vec![Complex64::new(0.0, 0.0); v.len()];
        self.on(basis).apply(v, &mut y);
        Ok(y)
    }

    /// One row of the sector matrix as (column, value) pairs, merged by column.
    fn row(&self, basis: &SectorBasis, i: usize, out: &mut Vec<(u32, Complex64)>) {
        out.clear();
        let c = basis.state(i);
        let ni = basis.norm(i);
        self.for_each_element(c, |d, amp| {
            if d == c {
                out.push((i as u32, Complex64::new(amp, 0.0)));
            } else if let Some((j, p)) = basis.lookup(d) {
                out.push((j as u32, p.conj() * (amp * basis.norm(j) / ni)));
            }
        });
        out.sort_unstable_by_key(|e| e.0);
        let mut w = 0;
        for r in 0..out.len() {
            if w > 0 && out[w - 1].0 == out[r].0 {
                let add = out[r].1;
                out[w - 1].1 += add;
            } else {
                out[w] = out[r];
                w += 1;
            }
        }
        out.truncate(w);
    }

    /// Sector matrix in CSR form.
    pub fn build_matrix(&self, basis: &SectorBasis) -> CsrMatrix {
        FamilyMatrices::build(std::slice::from_ref(self), basis).combine(&[1.0])
    }
}

/// Matrix-free `H` restricted to a sector. Rows are computed independently
/// ("gather" form), which keeps the product deterministic under parallelism.
pub struct SectorOperator<'a> {
    op: &'a HamiltonianOperator,
    basis: &'a SectorBasis,
}

impl LinearOperator for SectorOperator<'_> {
    fn dim(&self) -> usize {
        self.basis.dim()
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let basis = self.basis;
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            let c = basis.state(i);
            let ni = basis.norm(i);
            let mut acc = Complex64::new(0.0, 0.0);
            self.op.for_each_element(c, |d, amp| {
                if d == c {
                    acc += amp * x[i];
                } else if let Some((j, p)) = basis.lookup(d) {
                    acc += p.conj() * (amp * basis.norm(j) / ni) * x[j];
                }
            });
            *yi = acc;
        });
    }
}

/// Sector matrices of several operators on a shared sparsity pattern, so a
/// parameter sweep rebuilds only the linear combination.
#[derive(Clone, Debug)]
pub struct FamilyMatrices {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    values: Vec<Vec<Complex64>>,
}

impl FamilyMatrices {
    pub fn build(families: &[HamiltonianOperator], basis: &SectorBasis) -> Self {
        let nf = families.len();
        let rows: Vec<(Vec<u32>, Vec<Vec<Complex64>>)> = (0..basis.dim())
            .into_par_iter()
            .map_init(
                || (Vec::new(), Vec::new()),
                |(scratch, merged): &mut (Vec<(u32, Complex64)>, Vec<(u32, usize, Complex64)>), i| {
                    merged.clear();
                    for (f, op) in families.iter().enumerate() {
                        op.row(basis, i, scratch);
                        merged.extend(scratch.iter().map(|&(c, v)| (c, f, v)));
                    }
                    merged.sort_unstable_by_key(|e| (e.0, e.1));
                    let mut cols = Vec::new();
                    let mut vals: Vec<Vec<Complex64>> = vec![Vec::new(); nf];
                    for &(c, f, v) in merged.iter() {
                        if cols.last() != Some(&c) {
                            cols.push(c);
                            for fam in vals.iter_mut() {
                                fam.push(Complex64::new(0.0, 0.0));
                            }
                        }
                        let last = cols.len() - 1;
                        vals[f][last] += v;
                    }
                    (cols, vals)
                },
            )
            .collect();
        let nnz: usize = rows.iter().map(|r| r.0.len()).sum();
        let mut row_ptr = Vec::with_capacity(basis.dim() + 1);
        let mut cols = Vec::with_capacity(nnz);
        let mut values: Vec<Vec<Complex64>> = (0..nf).map(|_| Vec::with_capacity(nnz)).collect();
        row_ptr.push(0);
        for (c, v) in rows {
            cols.extend_from_slice(&c);
            for (dst, src) in values.iter_mut().zip(v) {
                dst.extend_from_slice(&src);
            }
            row_ptr.push(cols.len());
        }
        FamilyMatrices {
            dim: basis.dim(),
            row_ptr,
            cols,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    /// `Σ_f weights[f] * M_f`
    pub fn combine(&self, weights: &[f64]) -> CsrMatrix {
        assert_eq!(weights.len(), self.values.len());
        let values = (0..self.cols.len())
            .map(|k| {
                weights
                    .iter()
                    .zip(&self.values)
                    .map(|(w, v)| *w * v[k])
                    .sum()
            })
            .collect();
        CsrMatrix {
            dim: self.dim,
            row_ptr: self.row_ptr.clone(),
            cols: self.cols.clone(),
            values,
        }
    }

    /// Matrix of `H(params)` from the three families of [`HamiltonianOperator::families`].
    pub fn for_params(&self, params: &ModelParams) -> CsrMatrix {
        self.combine(&[params.j1(), params.j2(), params.jp()])
    }
}

/// Quartet projector `P = T_ij + T_ik + T_jk` on a triple, plain basis.
pub fn apply_projector(triple: [usize; 3], basis: &SectorBasis, v: &[Complex64]) -> Result<StateVector> {
    if !basis.is_plain() {
        return Err(Error::InvalidInput("projector acts on plain Sz bases".into()));
    }
    SwapOperator::quartet_projector(triple).apply(basis, v)
}

/// Cross-check form `P = 2(S_i.S_j + S_i.S_k + S_j.S_k) + 3/2` built from
/// `S^z S^z` and spin-flip matrix elements.
pub fn apply_projector_exchange_form(
    triple: [usize; 3],
    basis: &SectorBasis,
    v: &[Complex64],
) -> Result<StateVector> {
    basis.check_len(v)?;
    if !basis.is_plain() {
        return Err(Error::InvalidInput("projector acts on plain Sz bases".into()));
    }
    let sz = |c: u64, s: usize| if (c >> s) & 1 == 1 { 0.5 } else { -0.5 };
    let pairs = triple_pairs(triple);
    let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
    for (idx, &c) in basis.states().iter().enumerate() {
        let mut diag = 1.5;
        for &(a, b) in &pairs {
            diag += 2.0 * sz(c, a) * sz(c, b);
            // (S+_a S-_b + S-_a S+_b)/2 has matrix element 1/2 between flipped pairs
            if sz(c, a) != sz(c, b) {
                let flipped = c ^ (1 << a) ^ (1 << b);
                let j = basis.index_of(flipped).expect("flip preserves Sz");
                out[j] += 2.0 * 0.5 * v[idx];
            }
        }
        out[idx] += diag * v[idx];
    }
    Ok(out)
}

/// `<P>` on the chosen triple of every plaquette, in plaquette order. On a
/// momentum sector the values are translation averages within each
/// orientation class.
pub fn plaquette_expectation(
    cluster: &Cluster,
    kind: Sublattice,
    state: &[Complex64],
    basis: &SectorBasis,
) -> Result<Vec<f64>> {
    basis.check_len(state)?;
    require_normalized(state)?;
    cluster
        .plaquettes()
        .iter()
        .map(|p| {
            SwapOperator::quartet_projector(p.triple(kind))
                .expectation(basis, state)
                .map(|e| e.re)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dot, norm, random_vector, DenseMatrix};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn coefficients() {
        let cl = Cluster::named("16").unwrap();
        let h = HamiltonianOperator::build_operator(&cl, &ModelParams::new(1.0, 0.0, 0.0).unwrap()).unwrap();
        assert_eq!(h.bonds().len(), 32);
        assert!(h.bonds().iter().all(|b| b.coefficient == 1.0));
        assert!(h.plaquettes().is_empty());

        let h = HamiltonianOperator::build_operator(&cl, &ModelParams::new(1.0, 0.3, 1.0).unwrap()).unwrap();
        assert!(h.bonds().is_empty());
        assert_eq!(h.plaquettes().len(), 32);
        assert!(h.plaquettes().iter().all(|p| p.coefficient == 0.25));

        let p = ModelParams::new(1.0, 0.5, 0.0).unwrap();
        assert_eq!((p.j1(), p.j2()), (0.5, 0.5));
        let h = HamiltonianOperator::build_operator(&cl, &ModelParams::new(1.0, 0.4, 0.5).unwrap()).unwrap();
        assert_eq!(h.bonds().len(), 64);
        assert_eq!(h.plaquettes().len(), 32);

        assert!(ModelParams::new(1.0, 1.5, 0.0).is_err());
        assert!(ModelParams::new(0.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn single_bond_action() {
        let h = HamiltonianOperator::from_terms(
            2,
            vec![BondTerm {
                i: 0,
                j: 1,
                coefficient: 1.0,
            }],
            vec![],
        );
        let b = SectorBasis::plain(2, 0.0).unwrap();
        // |up_0 down_1> is config 0b01 = index 0
        let y = h.apply(&b, &[c(1.0), c(0.0)]).unwrap();
        assert_eq!(y, vec![c(-0.25), c(0.5)]);
        assert!(h.apply(&b, &[c(1.0)]).is_err());
    }

    #[test]
    fn projector_values() {
        let b = SectorBasis::plain(3, 1.5).unwrap();
        let y = apply_projector([0, 1, 2], &b, &[c(1.0)]).unwrap();
        assert!((y[0] - 3.0).norm() < 1e-15);

        // singlet on (0,1) times up spin on 2
        let b = SectorBasis::plain(3, 0.5).unwrap();
        let mut v = vec![c(0.0); b.dim()];
        v[b.index_of(0b101).unwrap()] = c(1.0);
        v[b.index_of(0b110).unwrap()] = c(-1.0);
        let y = apply_projector([0, 1, 2], &b, &v).unwrap();
        assert!(norm(&y) < 1e-15);
    }

    #[test]
    fn projector_forms_agree_and_square() {
        let b = SectorBasis::plain(8, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v = random_vector(b.dim(), &mut rng);
        let p1 = apply_projector([1, 4, 6], &b, &v).unwrap();
        let p2 = apply_projector_exchange_form([1, 4, 6], &b, &v).unwrap();
        for (a, bb) in p1.iter().zip(&p2) {
            assert!((a - bb).norm() < 1e-12);
        }
        let pp = apply_projector([1, 4, 6], &b, &p1).unwrap();
        for (a, bb) in pp.iter().zip(&p1) {
            assert!((a - 3.0 * bb).norm() < 1e-12);
        }
    }

    #[test]
    fn matrix_free_matches_csr() {
        let cl = Cluster::named("10").unwrap();
        let h = HamiltonianOperator::build_operator(&cl, &ModelParams::new(1.0, 0.3, 0.6).unwrap()).unwrap();
        for k in cl.allowed_momenta().into_iter().take(4) {
            let b = SectorBasis::build_momentum_basis(&cl, 0.0, k).unwrap();
            let m = h.build_matrix(&b);
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            let v = random_vector(b.dim(), &mut rng);
            let y1 = h.apply(&b, &v).unwrap();
            let mut y2 = vec![c(0.0); b.dim()];
            m.apply(&v, &mut y2);
            for (a, bb) in y1.iter().zip(&y2) {
                assert!((a - bb).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn families_recombine() {
        let cl = Cluster::named("10").unwrap();
        let params = ModelParams::new(1.3, 0.3, 0.45).unwrap();
        let h = HamiltonianOperator::build_operator(&cl, &params).unwrap();
        let b = SectorBasis::build_momentum_basis(&cl, 0.0, cl.momentum("0,0").unwrap()).unwrap();
        let fam = FamilyMatrices::build(&HamiltonianOperator::families(&cl), &b);
        let a = DenseMatrix::from_operator(&fam.for_params(&params));
        let d = DenseMatrix::from_operator(&h.on(&b));
        for (x, y) in a.data.iter().zip(&d.data) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn hermitian_in_every_sector() {
        let cl = Cluster::named("10").unwrap();
        let h = HamiltonianOperator::build_operator(&cl, &ModelParams::new(1.0, 0.7, 0.4).unwrap()).unwrap();
        for k in cl.allowed_momenta() {
            let b = SectorBasis::build_momentum_basis(&cl, 0.0, k).unwrap();
            let d = DenseMatrix::from_operator(&h.on(&b));
            let n = d.dim;
            for i in 0..n {
                for j in 0..n {
                    assert!((d.data[i * n + j] - d.data[j * n + i].conj()).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn sector_spectra_union_matches_plain_spectrum() {
        let cl = Cluster::named("8").unwrap();
        let h = HamiltonianOperator::build_operator(&cl, &ModelParams::new(1.0, 0.25, 0.5).unwrap()).unwrap();
        let plain = SectorBasis::build_sz_basis(&cl, 0.0).unwrap();
        let (mut full, _) = DenseMatrix::from_operator(&h.on(&plain)).eigh();
        let mut union = Vec::new();
        for k in cl.allowed_momenta() {
            let b = SectorBasis::build_momentum_basis(&cl, 0.0, k).unwrap();
            union.extend(DenseMatrix::from_operator(&h.on(&b)).eigh().0);
        }
        union.sort_by(f64::total_cmp);
        full.sort_by(f64::total_cmp);
        assert_eq!(union.len(), full.len());
        for (a, b) in union.iter().zip(&full) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn h0_is_positive_semidefinite() {
        let cl = Cluster::named("10").unwrap();
        let h = HamiltonianOperator::build_operator(&cl, &ModelParams::new(1.0, 0.0, 1.0).unwrap()).unwrap();
        let b = SectorBasis::build_sz_basis(&cl, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..5 {
            let v = random_vector(b.dim(), &mut rng);
            let hv = h.apply(&b, &v).unwrap();
            assert!(dot(&v, &hv).re >= -1e-10);
        }
    }

    #[test]
    fn plaquette_expectation_polarized() {
        let cl = Cluster::named("16").unwrap();
        let b = SectorBasis::build_sz_basis(&cl, 8.0).unwrap();
        let v = vec![c(1.0)];
        let vals = plaquette_expectation(&cl, Sublattice::B, &v, &b).unwrap();
        assert_eq!(vals.len(), 32);
        assert!(vals.iter().all(|&x| (x - 3.0).abs() < 1e-12));
        assert!(matches!(
            plaquette_expectation(&cl, Sublattice::A, &[c(2.0)], &b),
            Err(Error::NotNormalized(_))
        ));
    }
}
