//! Dimer coverings that put at least one dimer inside a sublattice triple of
//! every plaquette. Such coverings are zero-energy product states of `H0`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::lattice::{Cluster, Plaquette};
use crate::vbs::{DimerClass, DimerPattern};

/// Search setup: which bond classes may carry dimers.
#[derive(Clone, Debug)]
pub struct CoveringProblem<'a> {
    pub cluster: &'a Cluster,
    /// Also admit nearest-neighbor dimers.
    pub allow_nearest: bool,
}

impl<'a> CoveringProblem<'a> {
    pub fn new(cluster: &'a Cluster) -> Self {
        CoveringProblem {
            cluster,
            allow_nearest: false,
        }
    }

    /// Unordered allowed site pairs, each with its class, sorted.
    pub fn allowed_pairs(&self) -> Vec<(usize, usize, DimerClass)> {
        let c = self.cluster;
        let mut pairs = BTreeMap::new();
        let mut add = |bonds: &[crate::lattice::Bond], class| {
            for b in bonds {
                let (i, j) = b.key();
                pairs.entry((i, j)).or_insert(class);
            }
        };
        if self.allow_nearest {
            add(c.bonds1(), DimerClass::Nearest);
        }
        add(c.bonds2(), DimerClass::Diagonal);
        add(c.bonds3(), DimerClass::Axial);
        pairs.into_iter().map(|((i, j), k)| (i, j, k)).collect()
    }
}

struct Search<'a> {
    n: usize,
    adjacency: Vec<Vec<(usize, DimerClass)>>,
    plaquettes: &'a [Plaquette],
    by_site: Vec<Vec<usize>>,
}

impl Search<'_> {
    fn satisfiable(&self, partner: &[Option<usize>], p: &Plaquette) -> bool {
        [p.a_triple(), p.b_triple()].iter().any(|t| {
            [(t[0], t[1]), (t[0], t[2]), (t[1], t[2])]
                .iter()
                .any(|&(a, b)| partner[a] == Some(b) || (partner[a].is_none() && partner[b].is_none()))
        })
    }

    fn consistent(&self, partner: &[Option<usize>], s: usize, t: usize) -> bool {
        self.by_site[s]
            .iter()
            .chain(&self.by_site[t])
            .all(|&q| self.satisfiable(partner, &self.plaquettes[q]))
    }

    fn run(&self, partner: &mut Vec<Option<usize>>, out: &mut Vec<Vec<(usize, usize)>>) {
        let Some(s) = (0..self.n).find(|&s| partner[s].is_none()) else {
            let mut dimers: Vec<(usize, usize)> = (0..self.n)
                .filter_map(|i| partner[i].filter(|&j| j > i).map(|j| (i, j)))
                .collect();
            dimers.sort_unstable();
            out.push(dimers);
            return;
        };
        for &(t, _) in &self.adjacency[s] {
            if partner[t].is_some() {
                continue;
            }
            partner[s] = Some(t);
            partner[t] = Some(s);
            if self.consistent(partner, s, t) {
                self.run(partner, out);
            }
            partner[s] = None;
            partner[t] = None;
        }
    }
}

/// Every valid covering, ordered by the sorted dimer lists.
pub fn enumerate_valid_coverings(problem: &CoveringProblem) -> Vec<DimerPattern> {
    let c = problem.cluster;
    let n = c.n_sites();
    let mut adjacency = vec![Vec::new(); n];
    let mut classes = BTreeMap::new();
    for (i, j, k) in problem.allowed_pairs() {
        adjacency[i].push((j, k));
        adjacency[j].push((i, k));
        classes.insert((i, j), k);
    }
    for a in &mut adjacency {
        a.sort_unstable_by_key(|e| e.0);
    }
    let mut by_site = vec![Vec::new(); n];
    for (q, p) in c.plaquettes().iter().enumerate() {
        for &s in &p.sites {
            if !by_site[s].contains(&q) {
                by_site[s].push(q);
            }
        }
    }
    let search = Search {
        n,
        adjacency,
        plaquettes: c.plaquettes(),
        by_site,
    };
    if n == 0 {
        return Vec::new();
    }
    // branch on the partner of site 0 in parallel
    let mut found: Vec<Vec<(usize, usize)>> = search.adjacency[0]
        .par_iter()
        .map(|&(t, _)| {
            let mut partner = vec![None; n];
            partner[0] = Some(t);
            partner[t] = Some(0);
            let mut out = Vec::new();
            if search.consistent(&partner, 0, t) {
                search.run(&mut partner, &mut out);
            }
            out
        })
        .flatten()
        .collect();
    found.sort();
    found
        .into_iter()
        .map(|dimers| {
            let cls = dimers.iter().map(|d| classes[d]).collect();
            DimerPattern {
                dimers,
                classes: cls,
                offset: None,
            }
        })
        .collect()
}

/// True when every plaquette has a dimer inside one of its triples.
pub fn satisfies_rule(cluster: &Cluster, pattern: &DimerPattern) -> bool {
    cluster.plaquettes().iter().all(|p| {
        pattern
            .dimers
            .iter()
            .any(|&(a, b)| p.contains_intra_triple_pair(a, b))
    })
}

/// Number of plaquettes with the pair inside one of their triples.
pub fn containment(cluster: &Cluster, a: usize, b: usize) -> usize {
    cluster
        .plaquettes()
        .iter()
        .filter(|p| p.contains_intra_triple_pair(a, b))
        .count()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountingReport {
    pub n_sites: usize,
    pub n_plaquettes: usize,
    pub dimers_per_covering: usize,
    /// Plaquette counts per unordered diagonal pair (distinct values, sorted).
    pub diagonal_containment: Vec<usize>,
    /// Plaquette counts per unordered axial pair (distinct values, sorted).
    pub axial_containment: Vec<usize>,
    /// Axial pairs whose doubled displacement is a period of the torus.
    pub wrapping_axial_pairs: usize,
    pub plaquettes_equal_four_times_dimers: bool,
    pub diagonal_in_four: bool,
    pub axial_in_two_or_four_when_wrapping: bool,
}

/// Counting facts behind the covering argument.
pub fn check_counting_identities(cluster: &Cluster) -> CountingReport {
    let n = cluster.n_sites();
    let problem = CoveringProblem::new(cluster);
    let mut diag = Vec::new();
    let mut axial = Vec::new();
    let mut wrapping = 0;
    let mut axial_ok = true;
    for (i, j, class) in problem.allowed_pairs() {
        let count = containment(cluster, i, j);
        match class {
            DimerClass::Diagonal => diag.push(count),
            DimerClass::Axial => {
                let pi = cluster.coords(i);
                let pj = cluster.coords(j);
                let d = cluster.min_image([pj[0] - pi[0], pj[1] - pi[1]], 1);
                let wraps = cluster.canonical([2 * d[0], 2 * d[1]]) == cluster.canonical([0, 0]);
                if wraps {
                    wrapping += 1;
                }
                axial_ok &= count == if wraps { 4 } else { 2 };
                axial.push(count);
            }
            DimerClass::Nearest => {}
        }
    }
    let diagonal_in_four = diag.iter().all(|&c| c == 4);
    diag.sort_unstable();
    diag.dedup();
    axial.sort_unstable();
    axial.dedup();
    let n_plaquettes = cluster.plaquettes().len();
    CountingReport {
        n_sites: n,
        n_plaquettes,
        dimers_per_covering: n / 2,
        diagonal_containment: diag,
        axial_containment: axial,
        wrapping_axial_pairs: wrapping,
        plaquettes_equal_four_times_dimers: n_plaquettes == 4 * (n / 2),
        diagonal_in_four,
        axial_in_two_or_four_when_wrapping: axial_ok,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_on_catalog() {
        for (name, want) in [("16", 6), ("20", 4)] {
            let c = Cluster::named(name).unwrap();
            let found = enumerate_valid_coverings(&CoveringProblem::new(&c));
            assert_eq!(found.len(), want, "cluster {name}");
            assert!(found.iter().all(|p| satisfies_rule(&c, p)));
        }
    }

    #[test]
    fn identities() {
        let r = check_counting_identities(&Cluster::named("20").unwrap());
        assert!(r.plaquettes_equal_four_times_dimers);
        assert_eq!(r.diagonal_containment, vec![4]);
        assert_eq!(r.axial_containment, vec![2]);
        let r = check_counting_identities(&Cluster::named("16").unwrap());
        assert_eq!(r.axial_containment, vec![4]);
        assert!(r.axial_in_two_or_four_when_wrapping);
    }
}
