//! Operators written as real combinations of products of site transpositions.
//!
//! For spin 1/2 the transposition `T_ij` (exchange of the two spins) satisfies
//! `S_i . S_j = T_ij / 2 - 1/4`, so every rotation-invariant two- and four-spin
//! observable used here is a short sum of transposition words.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::{swap_bits, SectorBasis, StateVector};
use crate::linalg::{dot, norm};

/// `coefficient * T_{w_n} ... T_{w_1}`; `swaps[0]` acts first.
#[derive(Clone, Debug, PartialEq)]
pub struct SwapTerm {
    pub coefficient: f64,
    pub swaps: Vec<(usize, usize)>,
}

impl SwapTerm {
    #[inline]
    pub fn act(&self, c: u64) -> u64 {
        self.swaps.iter().fold(c, |acc, &(i, j)| swap_bits(acc, i, j))
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SwapOperator {
    pub terms: Vec<SwapTerm>,
}

impl SwapOperator {
    pub fn identity(coefficient: f64) -> Self {
        SwapOperator {
            terms: vec![SwapTerm {
                coefficient,
                swaps: Vec::new(),
            }],
        }
    }

    pub fn transposition(i: usize, j: usize) -> Self {
        SwapOperator {
            terms: vec![SwapTerm {
                coefficient: 1.0,
                swaps: vec![(i, j)],
            }],
        }
    }

    /// `S_i . S_j`
    pub fn spin_dot(i: usize, j: usize) -> Self {
        if i == j {
            return Self::identity(0.75);
        }
        Self::transposition(i, j).scaled(0.5).plus(&Self::identity(-0.25))
    }

    /// `|sum_{s in sites} S_s|^2`
    pub fn total_spin_squared(sites: &[usize]) -> Self {
        let n = sites.len() as f64;
        let mut op = Self::identity(0.75 * n - n * (n - 1.0) / 4.0);
        for (a, &i) in sites.iter().enumerate() {
            for &j in &sites[a + 1..] {
                op = op.plus(&Self::transposition(i, j));
            }
        }
        op
    }

    /// Quartet projector `|S_i + S_j + S_k|^2 - 3/4 = T_ij + T_ik + T_jk`.
    pub fn quartet_projector(triple: [usize; 3]) -> Self {
        let [i, j, k] = triple;
        Self::transposition(i, j)
            .plus(&Self::transposition(i, k))
            .plus(&Self::transposition(j, k))
    }

    pub fn scaled(mut self, s: f64) -> Self {
        for t in &mut self.terms {
            t.coefficient *= s;
        }
        self
    }

    pub fn plus(&self, other: &SwapOperator) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        SwapOperator { terms }
    }

    /// Operator product `self * other` (`other` acts first).
    pub fn times(&self, other: &SwapOperator) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let mut swaps = b.swaps.clone();
                swaps.extend_from_slice(&a.swaps);
                terms.push(SwapTerm {
                    coefficient: a.coefficient * b.coefficient,
                    swaps,
                });
            }
        }
        SwapOperator { terms }
    }

    /// Conjugate by a site permutation: `g O g^{-1}`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        SwapOperator {
            terms: self
                .terms
                .iter()
                .map(|t| SwapTerm {
                    coefficient: t.coefficient,
                    swaps: t.swaps.iter().map(|&(i, j)| (perm[i], perm[j])).collect(),
                })
                .collect(),
        }
    }

    /// Apply in a sector. On a plain basis this is the operator itself; on a
    /// momentum sector it is the translation average `(1/N) sum_t T_t O T_t^-1`,
    /// which has the same matrix elements between momentum eigenstates.
    pub fn apply(&self, basis: &SectorBasis, v: &[Complex64]) -> Result<StateVector> {
        basis.check_len(v)?;
        let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
        match basis.group() {
            None => {
                for (i, &c) in basis.states().iter().enumerate() {
                    if v[i] == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    for t in &self.terms {
                        let d = t.act(c);
                        if let Some(j) = basis.index_of(d) {
                            out[j] += t.coefficient * v[i];
                        }
                    }
                }
            }
            Some(group) => {
                let order = group.order();
                let translated: Vec<SwapTerm> = (0..order)
                    .flat_map(|t| {
                        let shift: Vec<usize> = (0..basis.n_sites())
                            .map(|s| group.apply(t, 1u64 << s).trailing_zeros() as usize)
                            .collect();
                        self.permuted(&shift).terms.into_iter().map(move |mut term| {
                            term.coefficient /= order as f64;
                            term
                        })
                    })
                    .collect();
                for (i, &c) in basis.states().iter().enumerate() {
                    if v[i] == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    let ni = basis.norm(i);
                    for t in &translated {
                        let d = t.act(c);
                        if let Some((j, p)) = basis.lookup(d) {
                            out[j] += p * (t.coefficient * basis.norm(j) / ni) * v[i];
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// `<v| O |v>` (translation-averaged on momentum sectors).
    pub fn expectation(&self, basis: &SectorBasis, v: &[Complex64]) -> Result<Complex64> {
        let ov = self.apply(basis, v)?;
        Ok(dot(v, &ov))
    }
}

/// Reject states whose norm deviates from one by more than `1e-8`.
pub fn require_normalized(v: &[Complex64]) -> Result<()> {
    let n2 = norm(v).powi(2);
    if (n2 - 1.0).abs() > 1e-8 {
        return Err(Error::NotNormalized(n2));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spin_dot_on_two_sites() {
        let b = SectorBasis::plain(2, 0.0).unwrap();
        // states: 01 (site0 up) , 10 (site1 up)
        let op = SwapOperator::spin_dot(0, 1);
        let singlet = vec![
            Complex64::new(1.0 / 2f64.sqrt(), 0.0),
            Complex64::new(-1.0 / 2f64.sqrt(), 0.0),
        ];
        let e = op.expectation(&b, &singlet).unwrap();
        assert!((e.re + 0.75).abs() < 1e-15);
        let triplet = vec![Complex64::new(1.0 / 2f64.sqrt(), 0.0); 2];
        assert!((op.expectation(&b, &triplet).unwrap().re - 0.25).abs() < 1e-15);
    }

    #[test]
    fn total_spin_of_polarized_state() {
        let b = SectorBasis::plain(5, 2.5).unwrap();
        let v = vec![Complex64::new(1.0, 0.0)];
        let s2 = SwapOperator::total_spin_squared(&[0, 1, 2, 3, 4]);
        assert!((s2.expectation(&b, &v).unwrap().re - 2.5 * 3.5).abs() < 1e-12);
    }

    #[test]
    fn product_order() {
        // T01 T12 acting on |site0 up> : T12 first leaves it, T01 moves it to site1
        let op = SwapOperator::transposition(0, 1).times(&SwapOperator::transposition(1, 2));
        assert_eq!(op.terms[0].act(0b001), 0b010);
        let op = SwapOperator::transposition(1, 2).times(&SwapOperator::transposition(0, 1));
        assert_eq!(op.terms[0].act(0b001), 0b100);
    }

    #[test]
    fn normalization_check() {
        assert!(require_normalized(&[Complex64::new(1.0, 0.0)]).is_ok());
        assert!(matches!(
            require_normalized(&[Complex64::new(2.0, 0.0)]),
            Err(Error::NotNormalized(_))
        ));
    }
}
