//! Lowest eigenpairs of a Hermitian operator.
//!
//! Thick-restart (Krylov-Schur) Lanczos with full reorthogonalization.
//! A single Krylov sequence cannot see more than one copy of an exactly
//! degenerate level, so after each run the converged vectors are locked and
//! a fresh random start, orthogonal to them, is iterated again. The search
//! stops once the lowest level of the deflated operator lies above the
//! requested window, which guarantees complete multiplets.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::StateVector;
use crate::linalg::{axpy, dot, hermitian_eigh, norm, orthogonalize, random_vector, scale, DenseMatrix, LinearOperator};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-8;
pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Residual bound `||Av - lv||` for every returned pair.
    pub tol: f64,
    /// Relative spacing below which two levels count as degenerate.
    pub degeneracy_tol: f64,
    /// Largest Krylov basis kept in memory.
    pub max_basis: usize,
    /// Matrix-vector products allowed per requested pair and run.
    pub matvecs_per_pair: usize,
    pub seed: u64,
    /// Sectors up to this dimension are diagonalized densely.
    pub dense_threshold: usize,
    pub want_vectors: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: DEFAULT_TOL,
            degeneracy_tol: DEFAULT_DEGENERACY_TOL,
            max_basis: 48,
            matvecs_per_pair: 500,
            seed: DEFAULT_SEED,
            dense_threshold: 400,
            want_vectors: true,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !(self.degeneracy_tol > 0.0) {
            return Err(Error::InvalidParams("tolerances must be positive".into()));
        }
        if self.max_basis < 4 {
            return Err(Error::InvalidParams("max_basis must be at least 4".into()));
        }
        if self.matvecs_per_pair == 0 {
            return Err(Error::InvalidParams("matvecs_per_pair must be positive".into()));
        }
        Ok(())
    }

    pub fn degenerate(&self, a: f64, b: f64) -> bool {
        (a - b).abs() <= self.degeneracy_tol * a.abs().max(b.abs()).max(1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Dense,
    Lanczos,
}

#[derive(Clone, Debug)]
pub struct Eigenpairs {
    /// Ascending. Holds at least the requested count (when the space allows)
    /// and always whole multiplets at the upper edge.
    pub values: Vec<f64>,
    /// Empty unless vectors were requested.
    pub vectors: Vec<StateVector>,
    pub residuals: Vec<f64>,
    pub matvecs: usize,
    pub method: Method,
}

/// Counts matrix-vector products.
struct Counted<'a> {
    op: &'a dyn LinearOperator,
    count: usize,
}

impl Counted<'_> {
    fn apply(&mut self, x: &[Complex64]) -> StateVector {
        let mut y = vec![Complex64::new(0.0, 0.0); x.len()];
        self.op.apply(x, &mut y);
        self.count += 1;
        y
    }
}

/// The `m` lowest eigenpairs of `op`, extended to complete the multiplet at
/// the upper edge.
pub fn lowest_eigenpairs(op: &dyn LinearOperator, m: usize, opts: &SolverOptions) -> Result<Eigenpairs> {
    opts.validate()?;
    if m == 0 {
        return Err(Error::InvalidParams("at least one eigenpair must be requested".into()));
    }
    let n = op.dim();
    if n == 0 {
        return Ok(Eigenpairs {
            values: Vec::new(),
            vectors: Vec::new(),
            residuals: Vec::new(),
            matvecs: 0,
            method: Method::Dense,
        });
    }
    if n <= opts.dense_threshold {
        return dense(op, m, opts);
    }
    lanczos(op, m, opts)
}

fn dense(op: &dyn LinearOperator, m: usize, opts: &SolverOptions) -> Result<Eigenpairs> {
    let d = DenseMatrix::from_operator(op);
    let (vals, vecs) = d.eigh();
    let keep = window(&vals, m, opts);
    let mut residuals = Vec::with_capacity(keep);
    for i in 0..keep {
        let mut y = vec![Complex64::new(0.0, 0.0); d.dim];
        op.apply(&vecs[i], &mut y);
        axpy(Complex64::new(-vals[i], 0.0), &vecs[i], &mut y);
        residuals.push(norm(&y));
    }
    Ok(Eigenpairs {
        values: vals[..keep].to_vec(),
        vectors: if opts.want_vectors { vecs[..keep].to_vec() } else { Vec::new() },
        residuals,
        matvecs: d.dim,
        method: Method::Dense,
    })
}

/// Number of leading entries of the ascending list `vals` covering the
/// first `m` levels and every level degenerate with the `m`-th.
fn window(vals: &[f64], m: usize, opts: &SolverOptions) -> usize {
    if vals.len() <= m {
        return vals.len();
    }
    let edge = vals[m - 1];
    m + vals[m..].iter().take_while(|&&v| opts.degenerate(v, edge)).count()
}

fn lanczos(op: &dyn LinearOperator, m: usize, opts: &SolverOptions) -> Result<Eigenpairs> {
    let n = op.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut counted = Counted { op, count: 0 };
    let mut locked_vals: Vec<f64> = Vec::new();
    let mut locked: Vec<StateVector> = Vec::new();

    loop {
        let free = n - locked.len();
        if free == 0 {
            break;
        }
        let wanted = if locked.len() < m { m - locked.len() } else { 1 };
        let budget = opts.matvecs_per_pair * wanted.max(1);
        let (vals, vecs) = krylov_schur(&mut counted, &locked, wanted, budget, opts, &mut rng)?;
        let mut sorted = locked_vals.clone();
        sorted.sort_by(f64::total_cmp);
        if locked.len() >= m {
            // boundary probe: stop once the deflated minimum lies above the window
            let edge = sorted[window(&sorted, m, opts) - 1];
            if vals[0] > edge && !opts.degenerate(vals[0], edge) {
                break;
            }
        }
        for (v, x) in vals.into_iter().zip(vecs) {
            locked_vals.push(v);
            locked.push(x);
        }
    }

    // sort, verify, truncate to the window
    let mut order: Vec<usize> = (0..locked.len()).collect();
    order.sort_by(|&a, &b| locked_vals[a].total_cmp(&locked_vals[b]));
    let values: Vec<f64> = order.iter().map(|&i| locked_vals[i]).collect();
    let keep = window(&values, m, opts);
    let mut vectors = Vec::with_capacity(keep);
    let mut residuals = Vec::with_capacity(keep);
    for &i in &order[..keep] {
        let x = &locked[i];
        let mut y = counted.apply(x);
        axpy(Complex64::new(-locked_vals[i], 0.0), x, &mut y);
        residuals.push(norm(&y));
        if opts.want_vectors {
            vectors.push(x.clone());
        }
    }
    let worst = residuals.iter().copied().fold(0.0, f64::max);
    if worst > opts.tol {
        return Err(Error::NoConvergence {
            matvecs: counted.count,
            converged: residuals.iter().filter(|&&r| r <= opts.tol).count(),
            requested: m,
            worst_residual: worst,
        });
    }
    Ok(Eigenpairs {
        values: values[..keep].to_vec(),
        vectors,
        residuals,
        matvecs: counted.count,
        method: Method::Lanczos,
    })
}

/// Lowest `nev` eigenpairs of `op` restricted to the orthogonal complement
/// of `locked`.
fn krylov_schur(
    op: &mut Counted,
    locked: &[StateVector],
    nev: usize,
    budget: usize,
    opts: &SolverOptions,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<f64>, Vec<StateVector>)> {
    let n = op.op.dim();
    let free = n - locked.len();
    let nev = nev.min(free);
    let p = opts.max_basis.max(nev + 3).min(free);
    let start = op.count;

    let mut v: Vec<StateVector> = Vec::with_capacity(p + 1);
    let mut h = DMatrix::<Complex64>::zeros(p, p);
    let mut k = 0usize;
    v.push(fresh_vector(n, locked, &[], rng)?);

    loop {
        // expand from column k to p
        let mut beta = 0.0;
        let mut next: Option<StateVector> = None;
        for j in k..p {
            let mut w = op.apply(&v[j]);
            // two Gram-Schmidt passes; the locked vectors are removed in
            // every pass, otherwise their null space in the deflated
            // operator attracts the lowest Ritz value. The sum of both
            // coefficient sets against the Krylov basis is the projected column.
            let mut coeff = vec![Complex64::new(0.0, 0.0); j + 1];
            for _ in 0..2 {
                for q in locked {
                    let c = dot(q, &w);
                    axpy(-c, q, &mut w);
                }
                for (i, q) in v.iter().enumerate().take(j + 1) {
                    let c = dot(q, &w);
                    axpy(-c, q, &mut w);
                    coeff[i] += c;
                }
            }
            for i in 0..j {
                h[(i, j)] = coeff[i];
                h[(j, i)] = coeff[i].conj();
            }
            h[(j, j)] = Complex64::new(coeff[j].re, 0.0);
            beta = norm(&w);
            let scale_ref = h[(j, j)].norm().max(1.0);
            if j + 1 < p {
                if beta <= 1e-12 * scale_ref {
                    // invariant subspace: continue with an unrelated direction
                    v.push(fresh_vector(n, locked, &v, rng)?);
                    h[(j + 1, j)] = Complex64::new(0.0, 0.0);
                    h[(j, j + 1)] = Complex64::new(0.0, 0.0);
                } else {
                    scale(&mut w, 1.0 / beta);
                    h[(j + 1, j)] = Complex64::new(beta, 0.0);
                    h[(j, j + 1)] = Complex64::new(beta, 0.0);
                    v.push(w);
                }
            } else {
                if beta > 1e-12 * scale_ref {
                    scale(&mut w, 1.0 / beta);
                    next = Some(w);
                } else {
                    beta = 0.0;
                }
            }
        }

        let (theta, s) = hermitian_eigh(h.clone());
        let conv = |i: usize| beta * s[i][p - 1].norm();
        // converged leading Ritz pairs are handed back for locking; the
        // caller restarts for the rest, which also catches hidden copies
        let ready = if p == free {
            nev
        } else {
            (0..nev).take_while(|&i| conv(i) <= 0.1 * opts.tol).count()
        };
        if ready > 0 {
            let vecs = (0..ready).map(|i| combine(&v, &s[i])).collect();
            return Ok((theta[..ready].to_vec(), vecs));
        }
        if op.count - start >= budget {
            let worst = (0..nev).map(conv).fold(0.0, f64::max);
            return Err(Error::NoConvergence {
                matvecs: op.count,
                converged: (0..nev).filter(|&i| conv(i) <= 0.1 * opts.tol).count(),
                requested: nev,
                worst_residual: worst,
            });
        }

        // thick restart with the k lowest Ritz vectors
        k = ((nev + p) / 2).max(nev + 1).min(p - 1);
        let mut nv: Vec<StateVector> = (0..k).map(|i| combine(&v, &s[i])).collect();
        let mut nh = DMatrix::<Complex64>::zeros(p, p);
        for i in 0..k {
            nh[(i, i)] = Complex64::new(theta[i], 0.0);
            let b = s[i][p - 1] * beta;
            nh[(k, i)] = b;
            nh[(i, k)] = b.conj();
        }
        match next {
            Some(f) => nv.push(f),
            None => {
                for i in 0..k {
                    nh[(k, i)] = Complex64::new(0.0, 0.0);
                    nh[(i, k)] = Complex64::new(0.0, 0.0);
                }
                nv.push(fresh_vector(n, locked, &nv, rng)?);
            }
        }
        // Ritz vectors lose orthogonality slowly; restore it
        for i in 0..nv.len() {
            let (done_part, rest) = nv.split_at_mut(i);
            let x = &mut rest[0];
            orthogonalize(x, locked);
            orthogonalize(x, done_part);
            let nx = norm(x);
            scale(x, 1.0 / nx);
        }
        v = nv;
        h = nh;
    }
}

fn combine(v: &[StateVector], coeffs: &[Complex64]) -> StateVector {
    let mut out = vec![Complex64::new(0.0, 0.0); v[0].len()];
    for (q, c) in v.iter().zip(coeffs) {
        axpy(*c, q, &mut out);
    }
    out
}

fn fresh_vector(
    n: usize,
    locked: &[StateVector],
    basis: &[StateVector],
    rng: &mut ChaCha8Rng,
) -> Result<StateVector> {
    for _ in 0..8 {
        let mut x = random_vector(n, rng);
        orthogonalize(&mut x, locked);
        orthogonalize(&mut x, basis);
        let nx = norm(&x);
        if nx > 1e-6 {
            scale(&mut x, 1.0 / nx);
            return Ok(x);
        }
    }
    Err(Error::InvalidInput("no direction left outside the converged subspace".into()))
}
