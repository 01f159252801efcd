//! Periodic square-lattice clusters.
//!
//! A cluster is the quotient of the square lattice by the sublattice spanned
//! by two integer vectors. Both spanning vectors must have an even coordinate
//! sum so that the A/B (checkerboard) bipartition survives the periodic
//! identification. Sites are stored as canonical representatives in a compact
//! domain around the origin and indexed in row-major `(y, x)` order.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec2 = [i64; 2];

/// Largest cluster whose spin configurations fit in a `u64`.
pub const MAX_SITES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sublattice {
    A,
    B,
}

impl Sublattice {
    fn of(p: Vec2) -> Self {
        if (p[0] + p[1]).rem_euclid(2) == 0 {
            Sublattice::A
        } else {
            Sublattice::B
        }
    }
}

/// An oriented bond `i -> j = i + displacement` on the torus.
///
/// On clusters with a period of 4 along an axis the two third-neighbor bonds
/// `(i, i + 2x)` and `(i + 2x, i + 4x)` join the same pair of sites; both are
/// kept, so every bond list has exactly `2N` entries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bond {
    pub i: usize,
    pub j: usize,
    pub displacement: Vec2,
}

impl Bond {
    pub fn pair(&self) -> (usize, usize) {
        (self.i, self.j)
    }

    /// Unordered site pair, smaller index first.
    pub fn key(&self) -> (usize, usize) {
        (self.i.min(self.j), self.i.max(self.j))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orientation {
    /// 3 sites wide, 2 high.
    Horizontal,
    /// 2 sites wide, 3 high.
    Vertical,
}

/// Six-site rectangular plaquette.
///
/// `sites` lists the A-sublattice triple followed by the B-sublattice triple,
/// each in reading order of the rectangle (row by row from the anchor).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Plaquette {
    pub sites: [usize; 6],
    pub anchor: usize,
    pub orientation: Orientation,
}

impl Plaquette {
    pub fn a_triple(&self) -> [usize; 3] {
        [self.sites[0], self.sites[1], self.sites[2]]
    }

    pub fn b_triple(&self) -> [usize; 3] {
        [self.sites[3], self.sites[4], self.sites[5]]
    }

    pub fn triple(&self, kind: Sublattice) -> [usize; 3] {
        match kind {
            Sublattice::A => self.a_triple(),
            Sublattice::B => self.b_triple(),
        }
    }

    /// True when both sites lie in the same triple of this plaquette.
    pub fn contains_intra_triple_pair(&self, a: usize, b: usize) -> bool {
        let a_t = self.a_triple();
        let b_t = self.b_triple();
        (a_t.contains(&a) && a_t.contains(&b)) || (b_t.contains(&a) && b_t.contains(&b))
    }
}

/// The three site pairs inside a triple.
pub fn triple_pairs(t: [usize; 3]) -> [(usize, usize); 3] {
    [(t[0], t[1]), (t[0], t[2]), (t[1], t[2])]
}

/// Crystal momentum `k = 2π (p, q) / N`, stored exactly as integers modulo `N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Momentum {
    num: [i64; 2],
    modulus: i64,
}

impl Momentum {
    pub fn new(p: i64, q: i64, modulus: usize) -> Self {
        let m = modulus as i64;
        Momentum {
            num: [p.rem_euclid(m), q.rem_euclid(m)],
            modulus: m,
        }
    }

    pub fn zero(modulus: usize) -> Self {
        Self::new(0, 0, modulus)
    }

    pub fn numerators(&self) -> [i64; 2] {
        self.num
    }

    pub fn modulus(&self) -> usize {
        self.modulus as usize
    }

    /// `k . t / 2π * N` reduced modulo `N`; the phase `e^{i k.t}` is the
    /// `N`-th root of unity with this exponent.
    pub fn phase_exponent(&self, t: Vec2) -> usize {
        (self.num[0] * t[0] + self.num[1] * t[1]).rem_euclid(self.modulus) as usize
    }

    /// Components in radians, folded into `(-π, π]`.
    pub fn radians(&self) -> [f64; 2] {
        let fold = |n: i64| {
            let mut v = 2.0 * n as f64 / self.modulus as f64;
            if v > 1.0 {
                v -= 2.0;
            }
            v * std::f64::consts::PI
        };
        [fold(self.num[0]), fold(self.num[1])]
    }

    /// Image under an integer point-group matrix (acting on column vectors).
    pub fn transformed(&self, m: [[i64; 2]; 2]) -> Self {
        let p = m[0][0] * self.num[0] + m[0][1] * self.num[1];
        let q = m[1][0] * self.num[0] + m[1][1] * self.num[1];
        Momentum::new(p, q, self.modulus as usize)
    }

    pub fn is_zero(&self) -> bool {
        self.num == [0, 0]
    }

    /// Parse `"pi,0"`, `"(pi, pi/2)"`, `"-pi/2,3pi/5"` or `"0,0"` for a cluster
    /// of `modulus` sites. The value must be a multiple of `2π/N`.
    pub fn parse(s: &str, modulus: usize) -> Result<Self> {
        let trimmed = s.trim().trim_start_matches('(').trim_end_matches(')');
        let parts: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if parts.len() != 2 {
            return Err(Error::InvalidMomentum(format!("`{s}`: expected two components")));
        }
        let mut num = [0i64; 2];
        for (slot, part) in num.iter_mut().zip(&parts) {
            let (a, b) = parse_pi_fraction(part)
                .ok_or_else(|| Error::InvalidMomentum(format!("`{part}` in `{s}`")))?;
            // a/b * π = 2π p / N  =>  p = a N / (2 b)
            let top = a * modulus as i64;
            let bottom = 2 * b;
            if top % bottom != 0 {
                return Err(Error::InvalidMomentum(format!(
                    "`{part}` is not a multiple of 2π/{modulus}"
                )));
            }
            *slot = top / bottom;
        }
        Ok(Momentum::new(num[0], num[1], modulus))
    }
}

/// Parse `0`, `pi`, `-pi`, `pi/2`, `3pi/4`, `-3*pi/4` into `(a, b)` meaning `a/b π`.
fn parse_pi_fraction(s: &str) -> Option<(i64, i64)> {
    let s = s.replace(' ', "").replace('π', "pi").replace('*', "");
    if s == "0" || s == "-0" {
        return Some((0, 1));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest.to_string()),
        None => (false, s.trim_start_matches('+').to_string()),
    };
    let (head, den) = match body.split_once('/') {
        Some((h, d)) => (h.to_string(), d.parse::<i64>().ok()?),
        None => (body.clone(), 1),
    };
    let coef = head.strip_suffix("pi")?;
    let a = if coef.is_empty() { 1 } else { coef.parse::<i64>().ok()? };
    if den <= 0 {
        return None;
    }
    Some((if neg { -a } else { a }, den))
}

fn fmt_pi(n: i64, modulus: i64) -> String {
    // component = 2n/modulus π folded to (-1, 1]
    let mut a = 2 * n;
    let mut b = modulus;
    if a > b {
        a -= 2 * b;
    }
    let g = gcd(a.abs(), b);
    if g != 0 {
        a /= g;
        b /= g;
    }
    match (a, b) {
        (0, _) => "0".to_string(),
        (1, 1) => "pi".to_string(),
        (-1, 1) => "-pi".to_string(),
        (1, b) => format!("pi/{b}"),
        (-1, b) => format!("-pi/{b}"),
        (a, 1) => format!("{a}pi"),
        (a, b) => format!("{a}pi/{b}"),
    }
}

impl fmt::Display for Momentum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({},{})",
            fmt_pi(self.num[0], self.modulus),
            fmt_pi(self.num[1], self.modulus)
        )
    }
}

/// A lattice rotation or reflection about the origin site that maps the
/// cluster onto itself.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointGroupOp {
    pub name: &'static str,
    pub matrix: [[i64; 2]; 2],
    pub permutation: Vec<usize>,
}

impl PointGroupOp {
    pub fn is_rotation(&self) -> bool {
        let m = self.matrix;
        m[0][0] * m[1][1] - m[0][1] * m[1][0] == 1
    }
}

const D4: [(&str, [[i64; 2]; 2]); 8] = [
    ("E", [[1, 0], [0, 1]]),
    ("C4", [[0, -1], [1, 0]]),
    ("C2", [[-1, 0], [0, -1]]),
    ("C4^3", [[0, 1], [-1, 0]]),
    ("Mx", [[-1, 0], [0, 1]]),
    ("My", [[1, 0], [0, -1]]),
    ("Md", [[0, 1], [1, 0]]),
    ("Md'", [[0, -1], [-1, 0]]),
];

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Returns `(g, u, v)` with `u a + v b = g = gcd(a, b) >= 0`.
fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        if a < 0 {
            (-a, -1, 0)
        } else {
            (a, 1, 0)
        }
    } else {
        let (g, u, v) = ext_gcd(b, a.rem_euclid(b));
        (g, v, u - (a.div_euclid(b)) * v)
    }
}

#[derive(Clone, Debug)]
pub struct Cluster {
    spanning: [Vec2; 2],
    n_sites: usize,
    coords: Vec<Vec2>,
    sublattice: Vec<Sublattice>,
    index: HashMap<Vec2, usize>,
    bonds1: Vec<Bond>,
    bonds2: Vec<Bond>,
    bonds3: Vec<Bond>,
    translations: Vec<Vec<usize>>,
    point_group: Vec<PointGroupOp>,
    plaquettes: Vec<Plaquette>,
    // Hermite normal form of the period lattice: rows (a, 0) and (b, c).
    hnf_a: i64,
    hnf_b: i64,
    hnf_c: i64,
}

impl Cluster {
    /// Build the cluster spanned by `t1` and `t2`.
    pub fn new(t1: Vec2, t2: Vec2) -> Result<Self> {
        let det = t1[0] * t2[1] - t1[1] * t2[0];
        if det == 0 {
            return Err(Error::InvalidCluster(format!(
                "spanning vectors {t1:?} and {t2:?} are linearly dependent"
            )));
        }
        for t in [t1, t2] {
            if (t[0] + t[1]).rem_euclid(2) != 0 {
                return Err(Error::InvalidCluster(format!(
                    "spanning vector {t:?} has an odd coordinate sum, which breaks the A/B bipartition"
                )));
            }
        }
        let n = det.unsigned_abs() as usize;
        if n > MAX_SITES {
            return Err(Error::InvalidCluster(format!(
                "{n} sites exceed the {MAX_SITES}-site limit of the bit-word representation"
            )));
        }

        let (c, u, v) = ext_gcd(t1[1], t2[1]);
        let (hnf_a, hnf_b, hnf_c) = if c == 0 {
            // both vectors on the x axis: impossible with det != 0
            unreachable!("nonzero determinant implies a nonzero y component")
        } else {
            let a = det.abs() / c;
            let b = (u * t1[0] + v * t2[0]).rem_euclid(a);
            (a, b, c)
        };

        let mut cluster = Cluster {
            spanning: [t1, t2],
            n_sites: n,
            coords: Vec::new(),
            sublattice: Vec::new(),
            index: HashMap::new(),
            bonds1: Vec::new(),
            bonds2: Vec::new(),
            bonds3: Vec::new(),
            translations: Vec::new(),
            point_group: Vec::new(),
            plaquettes: Vec::new(),
            hnf_a,
            hnf_b,
            hnf_c,
        };

        let mut coords: Vec<Vec2> = Vec::with_capacity(n);
        for y in 0..hnf_c {
            for x in 0..hnf_a {
                coords.push(cluster.canonical([x, y]));
            }
        }
        coords.sort_by_key(|p| (p[1], p[0]));
        debug_assert_eq!(coords.len(), n);
        cluster.index = coords.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        cluster.sublattice = coords.iter().map(|&p| Sublattice::of(p)).collect();
        cluster.coords = coords;

        let make = |dirs: [Vec2; 2], cl: &Cluster| -> Vec<Bond> {
            let mut out = Vec::with_capacity(2 * n);
            for i in 0..n {
                for d in dirs {
                    let p = cl.coords[i];
                    out.push(Bond {
                        i,
                        j: cl.site_at([p[0] + d[0], p[1] + d[1]]),
                        displacement: d,
                    });
                }
            }
            out
        };
        cluster.bonds1 = make([[1, 0], [0, 1]], &cluster);
        cluster.bonds2 = make([[1, 1], [1, -1]], &cluster);
        cluster.bonds3 = make([[2, 0], [0, 2]], &cluster);
        if cluster.bonds1.iter().any(|b| b.i == b.j) {
            return Err(Error::InvalidCluster(
                "cluster too small: a nearest-neighbor bond closes on itself".into(),
            ));
        }

        cluster.translations = (0..n)
            .map(|t| {
                let d = cluster.translation_vector(t);
                (0..n)
                    .map(|s| {
                        let p = cluster.coords[s];
                        cluster.site_at([p[0] + d[0], p[1] + d[1]])
                    })
                    .collect()
            })
            .collect();

        for (name, m) in D4 {
            let maps_lattice = [t1, t2].iter().all(|t| {
                let img = [m[0][0] * t[0] + m[0][1] * t[1], m[1][0] * t[0] + m[1][1] * t[1]];
                cluster.canonical(img) == [0, 0]
            });
            if maps_lattice {
                let permutation = cluster
                    .coords
                    .iter()
                    .map(|p| {
                        cluster.site_at([m[0][0] * p[0] + m[0][1] * p[1], m[1][0] * p[0] + m[1][1] * p[1]])
                    })
                    .collect();
                cluster.point_group.push(PointGroupOp {
                    name,
                    matrix: m,
                    permutation,
                });
            }
        }

        cluster.plaquettes = cluster.build_plaquettes()?;
        Ok(cluster)
    }

    /// Standard clusters: `"16"` = (4,0),(0,4); `"20"` = (4,2),(-2,4);
    /// `"32"` = (4,4),(-4,4); plus the small `"8"` = (2,2),(-2,2) and
    /// `"10"` = (3,1),(-1,3) used for dense cross-checks.
    pub fn named(name: &str) -> Result<Self> {
        let (t1, t2) = match name.trim() {
            "8" => ([2, 2], [-2, 2]),
            "10" => ([3, 1], [-1, 3]),
            "16" => ([4, 0], [0, 4]),
            "20" => ([4, 2], [-2, 4]),
            "32" => ([4, 4], [-4, 4]),
            other => return other.parse::<ClusterSpec>()?.build(),
        };
        Cluster::new(t1, t2)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn spanning_vectors(&self) -> [Vec2; 2] {
        self.spanning
    }

    pub fn coords(&self, site: usize) -> Vec2 {
        self.coords[site]
    }

    pub fn site_coords(&self) -> &[Vec2] {
        &self.coords
    }

    pub fn sublattice(&self, site: usize) -> Sublattice {
        self.sublattice[site]
    }

    pub fn sublattice_sites(&self, kind: Sublattice) -> Vec<usize> {
        (0..self.n_sites).filter(|&s| self.sublattice[s] == kind).collect()
    }

    pub fn bonds1(&self) -> &[Bond] {
        &self.bonds1
    }

    pub fn bonds2(&self) -> &[Bond] {
        &self.bonds2
    }

    pub fn bonds3(&self) -> &[Bond] {
        &self.bonds3
    }

    /// Site permutations of all `N` translations; entry `t` carries site 0
    /// onto site `t`, so entry 0 is the identity.
    pub fn translations(&self) -> &[Vec<usize>] {
        &self.translations
    }

    /// Displacement of translation `t`: `coords(t) - coords(0)`.
    pub fn translation_vector(&self, t: usize) -> Vec2 {
        let (a, o) = (self.coords[t], self.coords[0]);
        [a[0] - o[0], a[1] - o[1]]
    }

    pub fn point_group(&self) -> &[PointGroupOp] {
        &self.point_group
    }

    pub fn plaquettes(&self) -> &[Plaquette] {
        &self.plaquettes
    }

    /// Canonical representative of `p` modulo the period lattice.
    pub fn canonical(&self, p: Vec2) -> Vec2 {
        let q = p[1].div_euclid(self.hnf_c);
        let x0 = (p[0] - q * self.hnf_b).rem_euclid(self.hnf_a);
        let y0 = p[1] - q * self.hnf_c;
        let [t1, t2] = self.spanning;
        let mut best = [x0, y0];
        let mut best_key = (i64::MAX, i64::MAX, i64::MAX);
        for m in -2..=2 {
            for n in -2..=2 {
                let c = [x0 + m * t1[0] + n * t2[0], y0 + m * t1[1] + n * t2[1]];
                let key = ((2 * c[0] - 1).pow(2) + (2 * c[1] - 1).pow(2), c[1], c[0]);
                if key < best_key {
                    best_key = key;
                    best = c;
                }
            }
        }
        best
    }

    /// Index of the site at (any representative of) `p`.
    pub fn site_at(&self, p: Vec2) -> usize {
        self.index[&self.canonical(p)]
    }

    /// Shortest representative of `d` modulo `scale` times the period lattice.
    /// With `scale = 2` this measures separations in doubled coordinates.
    pub fn min_image(&self, d: Vec2, scale: i64) -> Vec2 {
        let [t1, t2] = self.spanning;
        let det = (t1[0] * t2[1] - t1[1] * t2[0]) as f64;
        // real coefficients of d in the (scaled) basis
        let alpha = (d[0] as f64 * t2[1] as f64 - d[1] as f64 * t2[0] as f64) / det / scale as f64;
        let beta = (t1[0] as f64 * d[1] as f64 - t1[1] as f64 * d[0] as f64) / det / scale as f64;
        let (m0, n0) = (alpha.round() as i64, beta.round() as i64);
        let mut best = d;
        let mut best_key = (i64::MAX, i64::MAX, i64::MAX);
        for m in m0 - 2..=m0 + 2 {
            for n in n0 - 2..=n0 + 2 {
                let c = [
                    d[0] - scale * (m * t1[0] + n * t2[0]),
                    d[1] - scale * (m * t1[1] + n * t2[1]),
                ];
                let key = (c[0] * c[0] + c[1] * c[1], c[1], c[0]);
                if key < best_key {
                    best_key = key;
                    best = c;
                }
            }
        }
        best
    }

    fn build_plaquettes(&self) -> Result<Vec<Plaquette>> {
        let mut out = Vec::with_capacity(2 * self.n_sites);
        let shapes: [(Orientation, [Vec2; 6]); 2] = [
            (
                Orientation::Horizontal,
                [[0, 0], [1, 0], [2, 0], [0, 1], [1, 1], [2, 1]],
            ),
            (
                Orientation::Vertical,
                [[0, 0], [1, 0], [0, 1], [1, 1], [0, 2], [1, 2]],
            ),
        ];
        for (orientation, offsets) in shapes {
            for anchor in 0..self.n_sites {
                let p = self.coords[anchor];
                let mut a = Vec::with_capacity(3);
                let mut b = Vec::with_capacity(3);
                for o in offsets {
                    let q = [p[0] + o[0], p[1] + o[1]];
                    let s = self.site_at(q);
                    match Sublattice::of(q) {
                        Sublattice::A => a.push(s),
                        Sublattice::B => b.push(s),
                    }
                }
                let sites = [a[0], a[1], a[2], b[0], b[1], b[2]];
                let mut sorted = sites;
                sorted.sort_unstable();
                if sorted.windows(2).any(|w| w[0] == w[1]) {
                    return Err(Error::InvalidCluster(format!(
                        "cluster too small: the {orientation:?} plaquette at site {anchor} wraps onto itself"
                    )));
                }
                out.push(Plaquette {
                    sites,
                    anchor,
                    orientation,
                });
            }
        }
        Ok(out)
    }

    /// Same as [`Cluster::plaquettes`], cloned.
    pub fn enumerate_plaquettes(&self) -> Vec<Plaquette> {
        self.plaquettes.clone()
    }

    /// All `N` momenta compatible with the periodic boundary conditions.
    pub fn allowed_momenta(&self) -> Vec<Momentum> {
        let n = self.n_sites as i64;
        let [t1, t2] = self.spanning;
        let mut out = Vec::with_capacity(self.n_sites);
        for p in 0..n {
            for q in 0..n {
                let ok = [t1, t2]
                    .iter()
                    .all(|t| (p * t[0] + q * t[1]).rem_euclid(n) == 0);
                if ok {
                    out.push(Momentum::new(p, q, self.n_sites));
                }
            }
        }
        out
    }

    pub fn is_allowed(&self, k: &Momentum) -> bool {
        k.modulus() == self.n_sites && self.allowed_momenta().contains(k)
    }

    pub fn momentum(&self, s: &str) -> Result<Momentum> {
        let k = Momentum::parse(s, self.n_sites)?;
        if !self.is_allowed(&k) {
            return Err(Error::MomentumNotAllowed {
                momentum: s.to_string(),
                n_sites: self.n_sites,
            });
        }
        Ok(k)
    }

    /// Point-group operations that leave `k` invariant (its little group).
    pub fn little_group(&self, k: &Momentum) -> Vec<&PointGroupOp> {
        self.point_group
            .iter()
            .filter(|g| k.transformed(g.matrix) == *k)
            .collect()
    }

    /// True when the period-2 dimer patterns are compatible with the torus.
    pub fn has_even_periods(&self) -> bool {
        self.spanning
            .iter()
            .all(|t| t[0].rem_euclid(2) == 0 && t[1].rem_euclid(2) == 0)
    }

    /// Human-readable dump of sites, bonds, plaquettes, momenta and symmetry.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let [t1, t2] = self.spanning;
        let _ = writeln!(s, "# cluster N={} spanning=({},{}),({},{})", self.n_sites, t1[0], t1[1], t2[0], t2[1]);
        let _ = writeln!(s, "[sites] index x y sublattice");
        for (i, p) in self.coords.iter().enumerate() {
            let _ = writeln!(s, "{i} {} {} {:?}", p[0], p[1], self.sublattice[i]);
        }
        for (name, list) in [("bonds1", &self.bonds1), ("bonds2", &self.bonds2), ("bonds3", &self.bonds3)] {
            let _ = writeln!(s, "[{name}] i j dx dy");
            for b in list.iter() {
                let _ = writeln!(s, "{} {} {} {}", b.i, b.j, b.displacement[0], b.displacement[1]);
            }
        }
        let _ = writeln!(s, "[plaquettes] orientation anchor a_triple b_triple");
        for p in &self.plaquettes {
            let a = p.a_triple();
            let b = p.b_triple();
            let _ = writeln!(
                s,
                "{:?} {} {},{},{} {},{},{}",
                p.orientation, p.anchor, a[0], a[1], a[2], b[0], b[1], b[2]
            );
        }
        let _ = writeln!(s, "[momenta]");
        for k in self.allowed_momenta() {
            let _ = writeln!(s, "{k}");
        }
        let _ = writeln!(s, "[point_group]");
        for g in &self.point_group {
            let _ = writeln!(s, "{} {:?}", g.name, g.matrix);
        }
        s
    }

    /// Character grid of site indices at their canonical coordinates.
    pub fn diagram(&self) -> String {
        let (xmin, xmax, ymin, ymax) = self.bounds();
        let mut s = String::new();
        for y in (ymin..=ymax).rev() {
            for x in xmin..=xmax {
                match self.index.get(&[x, y]) {
                    Some(i) => {
                        let _ = write!(s, "{i:>4}");
                    }
                    None => s.push_str("   ."),
                }
            }
            s.push('\n');
        }
        s
    }

    pub(crate) fn bounds(&self) -> (i64, i64, i64, i64) {
        let xs = self.coords.iter().map(|p| p[0]);
        let ys = self.coords.iter().map(|p| p[1]);
        (
            xs.clone().min().unwrap(),
            xs.max().unwrap(),
            ys.clone().min().unwrap(),
            ys.max().unwrap(),
        )
    }
}

/// Cluster selector parsed from text: a catalog name or `"a,b;c,d"`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterSpec {
    pub t1: Vec2,
    pub t2: Vec2,
}

impl ClusterSpec {
    pub fn build(&self) -> Result<Cluster> {
        Cluster::new(self.t1, self.t2)
    }
}

impl FromStr for ClusterSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let nums: Vec<i64> = s
            .split(|c: char| c == ',' || c == ';' || c == ' ' || c == '(' || c == ')')
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<i64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::UnknownCluster(s.to_string()))?;
        if nums.len() != 4 {
            return Err(Error::UnknownCluster(s.to_string()));
        }
        Ok(ClusterSpec {
            t1: [nums[0], nums[1]],
            t2: [nums[2], nums[3]],
        })
    }
}
