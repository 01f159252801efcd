mod common;

use common::*;
use num_complex::Complex64;
use proptest::prelude::*;

use plaqed::hamiltonian::{apply_projector, apply_projector_exchange_form};
use plaqed::observables::{dimer_correlations, structure_factor_report, BondClass, CorrelationPath, Measurement};
use plaqed::swap::SwapOperator;
use plaqed::vbs::{build_ss_state, SS_OFFSETS};
use plaqed::{Cluster, HamiltonianOperator, ModelParams, SectorBasis, Sublattice};

fn triple_on(n: usize) -> impl Strategy<Value = [usize; 3]> {
    proptest::sample::subsequence((0..n).collect::<Vec<_>>(), 3).prop_shuffle().prop_map(|v| [v[0], v[1], v[2]])
}

fn params() -> impl Strategy<Value = ModelParams> {
    (0.1f64..2.0, 0.0f64..=1.0, 0.0f64..=1.0).prop_map(|(j, g, d)| ModelParams::new(j, g, d).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn projector_squares_to_three_times_itself(t in triple_on(10), twice_sz in prop::sample::select(vec![0i64, 2, 4]), seed in any::<u64>()) {
        let basis = SectorBasis::plain(10, twice_sz as f64 / 2.0).unwrap();
        let v = random_state(basis.dim(), seed);
        let pv = apply_projector(t, &basis, &v).unwrap();
        let ppv = apply_projector(t, &basis, &pv).unwrap();
        let three: Vec<Complex64> = pv.iter().map(|z| 3.0 * z).collect();
        prop_assert!(dist(&ppv, &three) <= 1e-12 * norm(&three).max(1.0));
        // spectrum in {0, 3}: P is 3 times an orthogonal projector
        let e = dot(&v, &pv);
        prop_assert!(e.im.abs() < 1e-12);
        prop_assert!(e.re > -1e-12 && e.re < 3.0 + 1e-12);
    }

    #[test]
    fn projector_forms_agree(t in triple_on(10), twice_sz in prop::sample::select(vec![-2i64, 0, 2]), seed in any::<u64>()) {
        let basis = SectorBasis::plain(10, twice_sz as f64 / 2.0).unwrap();
        let v = random_state(basis.dim(), seed);
        let a = apply_projector(t, &basis, &v).unwrap();
        let b = apply_projector_exchange_form(t, &basis, &v).unwrap();
        prop_assert!(dist(&a, &b) <= 1e-12);
    }

    #[test]
    fn hamiltonian_is_hermitian(name in prop::sample::select(SMALL.to_vec()), p in params(), k in any::<prop::sample::Index>(), seeds in (any::<u64>(), any::<u64>())) {
        let cluster = Cluster::named(name).unwrap();
        let momenta = cluster.allowed_momenta();
        let basis = SectorBasis::build_momentum_basis(&cluster, 0.0, momenta[k.index(momenta.len())]).unwrap();
        prop_assume!(basis.dim() > 0);
        let h = HamiltonianOperator::build_operator(&cluster, &p).unwrap();
        let u = random_state(basis.dim(), seeds.0);
        let v = random_state(basis.dim(), seeds.1);
        let a = dot(&u, &h.apply(&basis, &v).unwrap());
        let b = dot(&v, &h.apply(&basis, &u).unwrap()).conj();
        prop_assert!((a - b).norm() <= 1e-10, "{a} vs {b}");
    }

    #[test]
    fn sublattice_spin_conserved_without_nearest_neighbors(name in prop::sample::select(vec!["8", "16"]), delta in 0.0f64..=1.0, seed in any::<u64>()) {
        let cluster = Cluster::named(name).unwrap();
        let n = cluster.n_sites();
        let h = HamiltonianOperator::build_operator(&cluster, &ModelParams::new(1.0, 1.0, delta).unwrap()).unwrap();
        let basis = SectorBasis::plain(n, 0.0).unwrap();
        let v = random_state(basis.dim(), seed);
        for kind in [Sublattice::A, Sublattice::B] {
            let s2 = SwapOperator::total_spin_squared(&cluster.sublattice_sites(kind));
            let a = h.apply(&basis, &s2.apply(&basis, &v).unwrap()).unwrap();
            let b = s2.apply(&basis, &h.apply(&basis, &v).unwrap()).unwrap();
            prop_assert!(dist(&a, &b) <= 1e-10, "{kind:?}");
        }
    }

    #[test]
    fn structure_factor_sum_rule(name in prop::sample::select(SMALL.to_vec()), k in any::<prop::sample::Index>(), seed in any::<u64>()) {
        let cluster = Cluster::named(name).unwrap();
        let n = cluster.n_sites() as f64;
        let momenta = cluster.allowed_momenta();
        let basis = SectorBasis::build_momentum_basis(&cluster, 0.0, momenta[k.index(momenta.len())]).unwrap();
        prop_assume!(basis.dim() > 0);
        let v = random_state(basis.dim(), seed);
        let m = Measurement::new(&cluster, &basis, &v, CorrelationPath::Auto).unwrap();
        let total: f64 = structure_factor_report(&m, &[]).unwrap().values.iter().map(|e| e.1).sum();
        prop_assert!((total - 3.0 * n / (4.0 * (n + 2.0))).abs() <= 1e-10);
    }

    #[test]
    fn product_states_have_no_connected_dimer_correlations(name in prop::sample::select(vec!["8", "10"]), seed in any::<u64>(), class in prop::sample::select(vec![BondClass::First, BondClass::Second])) {
        // a single configuration of the plain Sz = 0 basis is a product state
        let cluster = Cluster::named(name).unwrap();
        let basis = SectorBasis::plain(cluster.n_sites(), 0.0).unwrap();
        let mut v = vec![Complex64::new(0.0, 0.0); basis.dim()];
        v[(seed % basis.dim() as u64) as usize] = Complex64::new(1.0, 0.0);
        let m = Measurement::new(&cluster, &basis, &v, CorrelationPath::Plain).unwrap();
        let r = dimer_correlations(&m, class, None).unwrap();
        for e in r.entries.iter().filter(|e| !e.overlaps_reference) {
            prop_assert!(e.connected.abs() <= 1e-12, "{e:?}");
        }
    }
}

#[test]
fn momentum_dimensions_complete() {
    for name in ["8", "10", "16", "20"] {
        let cluster = Cluster::named(name).unwrap();
        let n = cluster.n_sites();
        for twice_sz in (0..=n as i64).step_by(2).map(|x| x - (n as i64 % 2)) {
            let sz = twice_sz as f64 / 2.0;
            let total: usize = cluster
                .allowed_momenta()
                .into_iter()
                .map(|k| SectorBasis::build_momentum_basis(&cluster, sz, k).unwrap().dim())
                .sum();
            assert_eq!(total, SectorBasis::plain(n, sz).unwrap().dim(), "N={n} 2Sz={twice_sz}");
        }
    }
}

#[test]
fn ss_product_states_structure_factor() {
    for name in ["16", "20"] {
        let cluster = Cluster::named(name).unwrap();
        let n = cluster.n_sites() as f64;
        let basis = SectorBasis::plain(cluster.n_sites(), 0.0).unwrap();
        let q = cluster.momentum("pi,0").unwrap();
        for offset in SS_OFFSETS {
            let s = build_ss_state(&cluster, offset).unwrap();
            let v = s.to_plain(&basis).unwrap();
            let m = Measurement::new(&cluster, &basis, &v, CorrelationPath::Plain).unwrap();
            let got = structure_factor_report(&m, &[q]).unwrap().values[0].1;
            assert!((got - 3.0 / (2.0 * (n + 2.0))).abs() <= 1e-12, "N={n} offset={offset:?}: {got}");
            // the dimer pattern containing the reference bond factorizes too
            let d = dimer_correlations(&m, BondClass::Second, None).unwrap();
            if s.pattern.dimers.contains(&d.reference) {
                for e in d.entries.iter().filter(|e| !e.overlaps_reference) {
                    assert!(e.connected.abs() <= 1e-12);
                }
            }
        }
    }
}
