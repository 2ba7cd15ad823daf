use spectra_lab::atoms::make_sort4;
use spectra_lab::lifts::{random_instance, single_atom_instance, NegationModel};
use spectra_lab::sdp::*;

const S2: f64 = std::f64::consts::SQRT_2;

#[test]
fn chsh_sandwich_is_tight() {
    let chsh = single_atom_instance(&make_sort4());
    let rep = sandwich_with(&chsh, &spectral_witness(&chsh).unwrap(), 0.0).unwrap();
    assert_eq!(rep.opt, Some(0.5));
    assert!((rep.sdp_upper - 1.0 / S2).abs() < 1e-9);
    assert!((rep.sdp_lower - 1.0 / S2).abs() < 1e-9);
    assert!(rep.witness_valid() && rep.chain_holds());
}

/// Witness objective per vertex on a large SORT4 lift, through the sparse
/// route: `⟨A, M⟩/|V| ≥ λ₁+λ₂+r_X − 0.5`, i.e. a lower bound of at least
/// `(2√2 − 0.5)/4` on the normalized SDP value.
#[test]
fn large_lift_witness_beats_band_edge_minus_half() {
    let inst = random_instance(&[make_sort4(), make_sort4()], 10_000, 1, NegationModel::variable(1)).unwrap();
    let (objective, bad) = witness_objective_sparse(&inst, 1, 0.05, 3).unwrap();
    let per_vertex = objective / inst.num_vertices() as f64;
    assert!(per_vertex >= 2.0 * S2 - 0.5, "{per_vertex} ({bad} bad vertices)");
    assert!(per_vertex / 4.0 >= (2.0 * S2 - 0.5) / 4.0);
    assert!(per_vertex <= 2.0 * S2 + 1e-9);
}

/// Across 20 seeds the gap between the eigenvalue bound and the witness
/// bound shrinks on average as the lift grows.
#[test]
fn gap_narrows_with_lift_size() {
    let mut means = Vec::new();
    for n in [50usize, 100, 200] {
        let mut total = 0.0;
        for seed in 0..20u64 {
            let inst = random_instance(&[make_sort4(), make_sort4()], n, seed, NegationModel::variable(seed)).unwrap();
            let (obj, _) = witness_objective_sparse(&inst, 1, 0.23, 3).unwrap();
            let lower = obj / (2 * inst.edges().len()) as f64;
            let upper = eig_upper_bound(&inst).unwrap();
            assert!(lower <= upper + 1e-9);
            total += upper - lower;
        }
        means.push(total / 20.0);
    }
    assert!(means[0] > means[1] && means[1] > means[2], "{means:?}");
}

#[test]
fn eig_bound_on_large_lift() {
    let inst = random_instance(&[make_sort4(), make_sort4()], 1000, 3, NegationModel::variable(3)).unwrap();
    let eig = eig_upper_bound(&inst).unwrap();
    assert!(eig <= 1.0 / S2 + 0.05, "{eig}");
}
