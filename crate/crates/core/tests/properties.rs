use proptest::prelude::*;

use spectra_lab::atoms::{make_complete, make_single_edge, make_sort4, Atom};
use spectra_lab::ihara::{ihara_bass_residual, t_bound};
use spectra_lab::lifts::{random_instance, random_lift, NegationKind, NegationModel};
use spectra_lab::nomadic::{instance_polynomial_exact, nomadic_walk_weight_oracle};
use spectra_lab::sdp::build_witness;

fn atom_strategy() -> impl Strategy<Value = (Atom, usize)> {
    prop_oneof![
        (2usize..=3).prop_map(|c| (make_single_edge(), c)),
        (2usize..=3).prop_map(|c| (make_sort4(), c)),
        Just((make_complete(3).unwrap(), 3)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn lifts_are_biregular(r in 2usize..6, c in 2usize..5, n in 1usize..9, seed in any::<u64>()) {
        let g = random_lift(r, c, n, seed).unwrap();
        for j in 0..c {
            let mut seen = vec![0usize; g.num_variables()];
            for b in 0..n {
                let m = g.members(j, b);
                prop_assert_eq!(m.len(), r);
                for (i, &v) in m.iter().enumerate() {
                    prop_assert_eq!(v / n, i);
                    prop_assert_eq!(g.constraint_of(i, v % n, j), b);
                    seen[v] += 1;
                }
            }
            // Each variable lies in exactly one copy of every group.
            prop_assert!(seen.iter().all(|&k| k == 1));
        }
        for node in 0..g.node_count() {
            let want = if node < g.num_variables() { c } else { r };
            prop_assert_eq!(g.node_neighbors(node).len(), want);
        }
    }

    #[test]
    fn same_seed_same_instance((atom, c) in atom_strategy(), n in 1usize..6, seed in any::<u64>()) {
        let atoms = vec![atom; c];
        let a = random_instance(&atoms, n, seed, NegationModel::variable(seed)).unwrap();
        let b = random_instance(&atoms, n, seed, NegationModel::variable(seed)).unwrap();
        prop_assert_eq!(a.edges(), b.edges());
        prop_assert_eq!(random_lift(4, c, n, seed).unwrap(), random_lift(4, c, n, seed).unwrap());
    }

    #[test]
    fn polynomials_match_walk_oracle((atom, c) in atom_strategy(), n in 1usize..3, seed in 0u64..1000, k in 0usize..5) {
        let atoms = vec![atom.clone(); c];
        let inst = random_instance(&atoms, n, seed, NegationModel::variable(seed ^ 0x55)).unwrap();
        let p = instance_polynomial_exact(&inst, k).unwrap();
        let nv = inst.num_vertices();
        for u in 0..nv {
            for v in 0..nv {
                prop_assert_eq!(p.get(u, v), nomadic_walk_weight_oracle(&inst, u, v, k).unwrap(), "({}, {}) k={}", u, v, k);
            }
        }
    }

    #[test]
    fn identity_residual_is_roundoff(
        (atom, c) in atom_strategy(),
        n in 1usize..5,
        seed in any::<u64>(),
        frac in -0.95f64..0.95,
        neg in any::<prop::sample::Index>(),
    ) {
        let kinds = [NegationKind::None, NegationKind::Constraint, NegationKind::Variable];
        let mut kind = kinds[neg.index(3)];
        if !atom.is_bipartite() && kind == NegationKind::Constraint {
            kind = NegationKind::Variable;
        }
        let atoms = vec![atom.clone(); c];
        let inst = random_instance(&atoms, n, seed, NegationModel { kind, seed }).unwrap();
        let t = frac * t_bound(atom.lambda1(), atom.lambda2(), c);
        match ihara_bass_residual(&inst, t) {
            Ok(res) => prop_assert!(res <= 1e-8, "residual {} at t={}", res, t),
            Err(spectra_lab::Error::NearPole(_)) => {}
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }

    #[test]
    fn witness_is_psd_with_unit_diagonal((atom, c) in atom_strategy(), n in 2usize..12, seed in any::<u64>(), l in 0usize..3, s in prop_oneof![Just(1i8), Just(-1i8)]) {
        let atoms = vec![atom; c];
        let inst = random_instance(&atoms, n, seed, NegationModel::variable(seed)).unwrap();
        let w = build_witness(&inst, s, 0.1, l).unwrap();
        prop_assert!(w.max_diagonal_error() <= 1e-12);
        prop_assert!(w.min_eigenvalue().unwrap() >= -1e-9);
    }

    #[test]
    fn instance_degrees((atom, c) in atom_strategy(), n in 1usize..8, seed in any::<u64>()) {
        let deg = atom.degree(0);
        let atoms = vec![atom; c];
        let inst = random_instance(&atoms, n, seed, NegationModel::none()).unwrap();
        let mut count = vec![0usize; inst.num_vertices()];
        for e in inst.edges() {
            count[e.u] += 1;
            count[e.v] += 1;
        }
        prop_assert!(count.iter().all(|&d| d == c * deg));
    }
}
