//! Independent J1-J2 reference on the 4 x 4 torus.

/// Lowest eigenvalue of the J1-J2 model on the 4 x 4 torus, Sz = 0, by a
/// real Lanczos run with full reorthogonalization on the plain basis.
pub fn j1j2_4x4_oracle(j1: f64, j2: f64) -> f64 {
    let l = 4usize;
    let site = |x: usize, y: usize| (x % l) + l * (y % l);
    let mut bonds = Vec::new();
    for y in 0..l {
        for x in 0..l {
            let s = site(x, y);
            bonds.push((s, site(x + 1, y), j1));
            bonds.push((s, site(x, y + 1), j1));
            bonds.push((s, site(x + 1, y + 1), j2));
            bonds.push((s, site(x + l - 1, y + 1), j2));
        }
    }
    let states: Vec<u32> = (0u32..1 << 16).filter(|c| c.count_ones() == 8).collect();
    let index: std::collections::HashMap<u32, usize> = states.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let matvec = |v: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for (i, &c) in states.iter().enumerate() {
            for &(a, b, j) in &bonds {
                let same = ((c >> a) & 1) == ((c >> b) & 1);
                if same {
                    out[i] += 0.25 * j * v[i];
                } else {
                    out[i] -= 0.25 * j * v[i];
                    let f = c ^ (1 << a) ^ (1 << b);
                    out[index[&f]] += 0.5 * j * v[i];
                }
            }
        }
        out
    };
    let dim = states.len();
    // deterministic start vector with weight in every symmetry sector
    let mut q: Vec<f64> = (0..dim).map(|i| ((i as f64 * 0.618034).fract() - 0.5) + 1e-3 * i as f64 / dim as f64).collect();
    let nq = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    q.iter_mut().for_each(|x| *x /= nq);
    let mut basis: Vec<Vec<f64>> = vec![q];
    let (mut alpha, mut beta) = (Vec::new(), Vec::new());
    let mut last = f64::INFINITY;
    for step in 0..300 {
        let mut w = matvec(&basis[step]);
        let a: f64 = w.iter().zip(&basis[step]).map(|(x, y)| x * y).sum();
        alpha.push(a);
        for _ in 0..2 {
            for b in &basis {
                let p: f64 = w.iter().zip(b).map(|(x, y)| x * y).sum();
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
            }
        }
        let nb = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        let t = nalgebra::DMatrix::from_fn(alpha.len(), alpha.len(), |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j {
                beta[i]
            } else if j + 1 == i {
                beta[j]
            } else {
                0.0
            }
        });
        let e0 = nalgebra::SymmetricEigen::new(t).eigenvalues.min();
        if (e0 - last).abs() < 1e-13 || nb < 1e-12 {
            return e0;
        }
        last = e0;
        beta.push(nb);
        w.iter_mut().for_each(|x| *x /= nb);
        basis.push(w);
    }
    last
}

/// `(gamma, E0)` at delta = 0 on N = 16, output of [`j1j2_4x4_oracle`].
pub const J1J2_16: [(f64, f64); 3] = [
    (0.0, -11.228483208428859),
    (0.33, -5.679614126365157),
    (0.5, -6.147745108051230),
];

