//! Spin-1/2 configuration bases.
//!
//! A configuration is a bit word with bit `s` set when site `s` carries an up
//! spin. A [`SectorBasis`] is either the plain basis of one total-`Sz` sector
//! or its translation-symmetrized momentum sector, where each basis vector is
//!
//! ```text
//! |r~> = (1/||psi_r||) sum_t e^{-i k.t} T_t |r>,   ||psi_r||^2 = N * |stab(r)|
//! ```
//!
//! and `r` is the numerically smallest configuration of its translation orbit.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{Cluster, Momentum, Vec2};

pub type StateVector = Vec<Complex64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinConfig(pub u64);

impl SpinConfig {
    #[inline]
    pub fn is_up(self, site: usize) -> bool {
        (self.0 >> site) & 1 == 1
    }

    #[inline]
    pub fn n_up(self) -> u32 {
        self.0.count_ones()
    }

    /// Exchange the spins on sites `i` and `j`.
    #[inline]
    pub fn swapped(self, i: usize, j: usize) -> SpinConfig {
        SpinConfig(swap_bits(self.0, i, j))
    }
}

#[inline(always)]
pub(crate) fn swap_bits(c: u64, i: usize, j: usize) -> u64 {
    let x = ((c >> i) ^ (c >> j)) & 1;
    c ^ ((x << i) | (x << j))
}

/// Site permutation acting on bit words through byte lookup tables.
#[derive(Clone, Debug)]
pub struct PermTable {
    chunks: usize,
    table: Vec<u64>,
}

impl PermTable {
    /// `perm[s]` is the image of site `s`.
    pub fn new(perm: &[usize]) -> Self {
        let chunks = perm.len().div_ceil(8).max(1);
        let mut table = vec![0u64; chunks * 256];
        for chunk in 0..chunks {
            for byte in 0..256usize {
                let mut out = 0u64;
                for bit in 0..8 {
                    let s = chunk * 8 + bit;
                    if s < perm.len() && (byte >> bit) & 1 == 1 {
                        out |= 1u64 << perm[s];
                    }
                }
                table[chunk * 256 + byte] = out;
            }
        }
        PermTable { chunks, table }
    }

    #[inline(always)]
    pub fn apply(&self, c: u64) -> u64 {
        let mut out = 0;
        for chunk in 0..self.chunks {
            out |= self.table[chunk * 256 + ((c >> (8 * chunk)) & 0xff) as usize];
        }
        out
    }
}

/// Translation group data shared by all momentum sectors of one cluster.
#[derive(Debug)]
pub struct TranslationGroup {
    tables: Vec<PermTable>,
    vectors: Vec<Vec2>,
}

impl TranslationGroup {
    pub fn new(cluster: &Cluster) -> Self {
        TranslationGroup {
            tables: cluster.translations().iter().map(|p| PermTable::new(p)).collect(),
            vectors: (0..cluster.n_sites()).map(|t| cluster.translation_vector(t)).collect(),
        }
    }

    pub fn order(&self) -> usize {
        self.tables.len()
    }

    #[inline]
    pub fn apply(&self, t: usize, c: u64) -> u64 {
        self.tables[t].apply(c)
    }

    pub fn vector(&self, t: usize) -> Vec2 {
        self.vectors[t]
    }

    /// Smallest configuration in the orbit of `c` and the first translation
    /// reaching it.
    #[inline]
    pub fn representative(&self, c: u64) -> (u64, usize) {
        let mut best = c;
        let mut best_t = 0;
        for (t, table) in self.tables.iter().enumerate().skip(1) {
            let d = table.apply(c);
            if d < best {
                best = d;
                best_t = t;
            }
        }
        (best, best_t)
    }
}

/// Iterator over all `n`-bit words with exactly `k` bits set, ascending.
pub fn combinations(n: usize, k: u32) -> impl Iterator<Item = u64> {
    let limit: u128 = 1u128 << n;
    let mut next: Option<u128> = if k as usize > n {
        None
    } else {
        Some((1u128 << k) - 1)
    };
    std::iter::from_fn(move || {
        let cur = next?;
        if cur >= limit {
            next = None;
            return None;
        }
        next = if cur == 0 {
            None
        } else {
            // Gosper's hack
            let c = cur & cur.wrapping_neg();
            let r = cur + c;
            let nxt = (((r ^ cur) >> 2) / c) | r;
            Some(nxt)
        };
        Some(cur as u64)
    })
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

/// Converts a total `Sz` into the number of up spins, validating it.
pub fn up_count(n_sites: usize, sz: f64) -> Result<u32> {
    let twice = (2.0 * sz).round();
    let invalid = Error::InvalidSz {
        twice_sz: twice as i64,
        n_sites,
    };
    if (2.0 * sz - twice).abs() > 1e-9 {
        return Err(invalid);
    }
    let twice = twice as i64;
    let n = n_sites as i64;
    if twice.abs() > n || (n + twice) % 2 != 0 {
        return Err(invalid);
    }
    Ok(((n + twice) / 2) as u32)
}

#[derive(Clone, Debug)]
pub struct SectorBasis {
    n_sites: usize,
    n_up: u32,
    momentum: Option<Momentum>,
    states: Vec<u64>,
    norms: Vec<f64>,
    group: Option<Arc<TranslationGroup>>,
    // e^{-i k.t} for every translation t
    inv_phases: Vec<Complex64>,
}

impl SectorBasis {
    /// Plain basis of the `Sz` sector on `n_sites` spins; needs no cluster.
    pub fn plain(n_sites: usize, sz: f64) -> Result<Self> {
        if n_sites > 64 {
            return Err(Error::InvalidInput(format!("{n_sites} sites exceed 64")));
        }
        let n_up = up_count(n_sites, sz)?;
        let states: Vec<u64> = combinations(n_sites, n_up).collect();
        debug_assert_eq!(states.len(), binomial(n_sites, n_up as usize));
        let norms = vec![1.0; states.len()];
        Ok(SectorBasis {
            n_sites,
            n_up,
            momentum: None,
            states,
            norms,
            group: None,
            inv_phases: vec![Complex64::new(1.0, 0.0)],
        })
    }

    /// Plain total-`Sz` basis of a cluster.
    pub fn build_sz_basis(cluster: &Cluster, sz: f64) -> Result<Self> {
        Self::plain(cluster.n_sites(), sz)
    }

    /// Momentum sector `k` of the total-`Sz` sector.
    pub fn build_momentum_basis(cluster: &Cluster, sz: f64, k: Momentum) -> Result<Self> {
        Self::momentum_with_group(cluster, Arc::new(TranslationGroup::new(cluster)), sz, k)
    }

    /// As [`SectorBasis::build_momentum_basis`] with a shared translation group.
    pub fn momentum_with_group(
        cluster: &Cluster,
        group: Arc<TranslationGroup>,
        sz: f64,
        k: Momentum,
    ) -> Result<Self> {
        if !cluster.is_allowed(&k) {
            return Err(Error::MomentumNotAllowed {
                momentum: k.to_string(),
                n_sites: cluster.n_sites(),
            });
        }
        let n = cluster.n_sites();
        let n_up = up_count(n, sz)?;
        let exps: Vec<usize> = (0..group.order()).map(|t| k.phase_exponent(group.vector(t))).collect();
        let mut states = Vec::new();
        let mut norms = Vec::new();
        'configs: for c in combinations(n, n_up) {
            let mut stab = 1usize;
            let mut compatible = true;
            for t in 1..group.order() {
                let d = group.apply(t, c);
                if d < c {
                    continue 'configs;
                }
                if d == c {
                    stab += 1;
                    if exps[t] != 0 {
                        compatible = false;
                    }
                }
            }
            if compatible {
                states.push(c);
                norms.push(((group.order() * stab) as f64).sqrt());
            }
        }
        let inv_phases = exps.iter().map(|&e| root_of_unity(n, -(e as i64))).collect();
        Ok(SectorBasis {
            n_sites: n,
            n_up,
            momentum: Some(k),
            states,
            norms,
            group: Some(group),
            inv_phases,
        })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_up(&self) -> u32 {
        self.n_up
    }

    pub fn sz(&self) -> f64 {
        self.n_up as f64 - self.n_sites as f64 / 2.0
    }

    pub fn momentum(&self) -> Option<Momentum> {
        self.momentum
    }

    pub fn is_plain(&self) -> bool {
        self.group.is_none()
    }

    pub fn states(&self) -> &[u64] {
        &self.states
    }

    #[inline]
    pub fn state(&self, i: usize) -> u64 {
        self.states[i]
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    #[inline]
    pub fn norm(&self, i: usize) -> f64 {
        self.norms[i]
    }

    /// Number of translations summed over in a basis vector (1 for plain bases).
    pub fn group_order(&self) -> usize {
        self.group.as_ref().map_or(1, |g| g.order())
    }

    pub fn group(&self) -> Option<&Arc<TranslationGroup>> {
        self.group.as_ref()
    }

    #[inline]
    pub fn index_of(&self, c: u64) -> Option<usize> {
        self.states.binary_search(&c).ok()
    }

    /// `e^{-i k.t}` for translation `t`.
    pub fn inv_phase(&self, t: usize) -> Complex64 {
        self.inv_phases[t]
    }

    /// Index of the representative of `config` and the phase `e^{-i k.t}`
    /// of the translation `t` carrying `config` onto it. `Ok(None)` when the
    /// orbit is incompatible with the momentum.
    pub fn find_representative(&self, config: SpinConfig) -> Result<Option<(usize, Complex64)>> {
        if config.n_up() != self.n_up || (self.n_sites < 64 && config.0 >> self.n_sites != 0) {
            return Err(Error::WrongSector {
                config: config.0,
                found: config.n_up(),
                expected: self.n_up,
            });
        }
        Ok(self.lookup(config.0))
    }

    /// Unchecked form of [`SectorBasis::find_representative`].
    #[inline]
    pub fn lookup(&self, c: u64) -> Option<(usize, Complex64)> {
        match &self.group {
            None => self.index_of(c).map(|i| (i, Complex64::new(1.0, 0.0))),
            Some(g) => {
                let (r, t) = g.representative(c);
                self.index_of(r).map(|i| (i, self.inv_phases[t]))
            }
        }
    }

    /// Amplitudes of a sector vector in the plain basis of the same `Sz`.
    pub fn expand(&self, v: &[Complex64]) -> Result<(SectorBasis, StateVector)> {
        self.check_len(v)?;
        let plain = SectorBasis::plain(self.n_sites, self.sz())?;
        let mut out = vec![Complex64::new(0.0, 0.0); plain.dim()];
        match &self.group {
            None => out.copy_from_slice(v),
            Some(g) => {
                for (i, &r) in self.states.iter().enumerate() {
                    let a = v[i] / self.norms[i];
                    for t in 0..g.order() {
                        let c = g.apply(t, r);
                        let j = plain.index_of(c).expect("translation preserves Sz");
                        out[j] += a * self.inv_phases[t];
                    }
                }
            }
        }
        Ok((plain, out))
    }

    /// Components `<r~|phi>` of a plain-basis vector in this sector.
    pub fn project(&self, plain: &SectorBasis, phi: &[Complex64]) -> Result<StateVector> {
        plain.check_len(phi)?;
        if !plain.is_plain() || plain.n_up != self.n_up || plain.n_sites != self.n_sites {
            return Err(Error::InvalidInput("projection source must be the plain basis of the same sector".into()));
        }
        let out = match &self.group {
            None => phi.to_vec(),
            Some(g) => self
                .states
                .iter()
                .zip(&self.norms)
                .map(|(&r, &nrm)| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for t in 0..g.order() {
                        let j = plain.index_of(g.apply(t, r)).expect("translation preserves Sz");
                        acc += self.inv_phases[t].conj() * phi[j];
                    }
                    acc / nrm
                })
                .collect(),
        };
        Ok(out)
    }

    /// Components in this sector of a sparse plain-basis vector.
    pub fn project_sparse(&self, amplitudes: &[(u64, f64)]) -> StateVector {
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim()];
        let order = self.group_order() as f64;
        for &(c, a) in amplitudes {
            if c.count_ones() != self.n_up {
                continue;
            }
            if let Some((i, p)) = self.lookup(c) {
                out[i] += p * (a * self.norms[i] / order);
            }
        }
        out
    }

    pub(crate) fn check_len(&self, v: &[Complex64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: v.len(),
            });
        }
        Ok(())
    }

    /// Write the representative list with a versioned text header.
    pub fn write_cache<W: Write>(&self, cluster: &Cluster, mut w: W) -> Result<()> {
        let [t1, t2] = cluster.spanning_vectors();
        let k = self.momentum.map_or("none".to_string(), |k| {
            let n = k.numerators();
            format!("{},{}", n[0], n[1])
        });
        writeln!(
            w,
            "{CACHE_MAGIC} n={} t1={},{} t2={},{} n_up={} k={} dim={}",
            self.n_sites,
            t1[0],
            t1[1],
            t2[0],
            t2[1],
            self.n_up,
            k,
            self.dim()
        )?;
        for &s in &self.states {
            w.write_all(&s.to_le_bytes())?;
        }
        Ok(())
    }

    /// Read a representative cache written by [`SectorBasis::write_cache`],
    /// checking that its header matches the requested sector.
    pub fn read_cache<R: Read>(cluster: &Cluster, sz: f64, k: Option<Momentum>, r: R) -> Result<Self> {
        let mut reader = BufReader::new(r);
        let mut header = String::new();
        reader.read_line(&mut header)?;
        let mut probe = match k {
            Some(k) => SectorBasis {
                states: Vec::new(),
                norms: Vec::new(),
                ..SectorBasis::momentum_shell(cluster, sz, k)?
            },
            None => SectorBasis {
                states: Vec::new(),
                norms: Vec::new(),
                ..SectorBasis::plain(0, 0.0)?
            },
        };
        if k.is_none() {
            probe.n_sites = cluster.n_sites();
            probe.n_up = up_count(cluster.n_sites(), sz)?;
        }
        let mut expected = Vec::new();
        probe.write_cache(cluster, &mut expected)?;
        let expected = String::from_utf8_lossy(&expected);
        let expected_prefix = expected.trim_end().rsplit_once(" dim=").unwrap().0;
        let (prefix, dim) = header
            .trim_end()
            .rsplit_once(" dim=")
            .ok_or_else(|| Error::InvalidInput("malformed basis cache header".into()))?;
        if prefix != expected_prefix {
            return Err(Error::InvalidInput(format!(
                "basis cache header `{prefix}` does not match `{expected_prefix}`"
            )));
        }
        let dim: usize = dim
            .parse()
            .map_err(|_| Error::InvalidInput("malformed basis cache dimension".into()))?;
        let mut states = Vec::with_capacity(dim);
        let mut buf = [0u8; 8];
        for _ in 0..dim {
            reader.read_exact(&mut buf)?;
            states.push(u64::from_le_bytes(buf));
        }
        if states.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("basis cache is not strictly ascending".into()));
        }
        probe.norms = match &probe.group {
            None => vec![1.0; dim],
            Some(g) => states
                .iter()
                .map(|&c| {
                    let stab = (0..g.order()).filter(|&t| g.apply(t, c) == c).count();
                    ((g.order() * stab) as f64).sqrt()
                })
                .collect(),
        };
        probe.states = states;
        Ok(probe)
    }

    /// Momentum sector metadata without enumerating states.
    fn momentum_shell(cluster: &Cluster, sz: f64, k: Momentum) -> Result<Self> {
        if !cluster.is_allowed(&k) {
            return Err(Error::MomentumNotAllowed {
                momentum: k.to_string(),
                n_sites: cluster.n_sites(),
            });
        }
        let n = cluster.n_sites();
        let group = Arc::new(TranslationGroup::new(cluster));
        let inv_phases = (0..group.order())
            .map(|t| root_of_unity(n, -(k.phase_exponent(group.vector(t)) as i64)))
            .collect();
        Ok(SectorBasis {
            n_sites: n,
            n_up: up_count(n, sz)?,
            momentum: Some(k),
            states: Vec::new(),
            norms: Vec::new(),
            group: Some(group),
            inv_phases,
        })
    }

    pub fn save_cache(&self, cluster: &Cluster, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_cache(cluster, std::io::BufWriter::new(f))
    }

    pub fn load_cache(cluster: &Cluster, sz: f64, k: Option<Momentum>, path: &Path) -> Result<Self> {
        Self::read_cache(cluster, sz, k, std::fs::File::open(path)?)
    }
}

const CACHE_MAGIC: &str = "plaqed-basis-v1";

/// `e^{2 pi i m / n}`, exact for the quarter turns.
pub fn root_of_unity(n: usize, m: i64) -> Complex64 {
    let n = n as i64;
    let m = m.rem_euclid(n);
    if 4 * m % n == 0 {
        return match 4 * m / n {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
    }
    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * m as f64 / n as f64)
}

/// Apply a site permutation to a plain-basis vector.
pub fn permute_plain(basis: &SectorBasis, v: &[Complex64], perm: &[usize]) -> Result<StateVector> {
    basis.check_len(v)?;
    if !basis.is_plain() {
        return Err(Error::InvalidInput("site permutations act on plain bases only".into()));
    }
    let table = PermTable::new(perm);
    let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
    for (i, &c) in basis.states().iter().enumerate() {
        let j = basis.index_of(table.apply(c)).expect("permutation preserves Sz");
        out[j] = v[i];
    }
    Ok(out)
}
