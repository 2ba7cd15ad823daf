//! Exit criteria. Each test writes one `PASS`/`FAIL` line to stderr, outside
//! the harness capture, then asserts.

use std::io::Write;
use std::time::{Duration, Instant};

use spectra_lab::atoms::{make_complete, make_forrelation, make_single_edge, make_sort4, Atom};
use spectra_lab::experiment::{self, data_section, ExperimentKind, ExperimentSpec};
use spectra_lab::ihara::{identity_sample, sample_t_values, spectrum_report};
use spectra_lab::lifts::{random_instance, single_atom_instance, InstanceGraph, NegationKind, NegationModel};
use spectra_lab::nomadic::{build_nomadic, instance_polynomial_exact, nomadic_walk_weight_oracle};
use spectra_lab::sdp::{eig_upper_bound, opt_bruteforce, sdp_lower_bound, sdp_value_formula, spectral_witness};
use spectra_lab::waves::{
    build_product_ball, build_product_ball_with, degree_law_violations, growth_rate_check, norm_squared_closed_form,
    norm_squared_exact, rayleigh_quotient, tail_norm_squared, truncate_normalize, witness_vector, BallOptions,
    ProductBall, WitnessConfig,
};

const S2: f64 = std::f64::consts::SQRT_2;

fn verdict(id: &str, pass: bool, detail: String) {
    let line = format!("{} criterion {id}: {detail}\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
}

/// SORT4 with c ∈ {2,3}, n ∈ {2,4,8} under both negation models, plus K3
/// with c = 3 under variable negation.
fn identity_instances() -> Vec<(String, InstanceGraph)> {
    let mut out = Vec::new();
    for c in [2, 3] {
        for n in [2, 4, 8] {
            for kind in [NegationKind::Constraint, NegationKind::Variable] {
                let seed = (c * 100 + n * 10) as u64 + kind as u64;
                let inst = random_instance(&vec![make_sort4(); c], n, seed, NegationModel { kind, seed }).unwrap();
                out.push((format!("sort4 c={c} n={n} {kind:?}"), inst));
            }
        }
    }
    for n in [2, 4, 8] {
        let seed = 900 + n as u64;
        let inst = random_instance(&vec![make_complete(3).unwrap(); 3], n, seed, NegationModel::variable(seed)).unwrap();
        out.push((format!("K3 c=3 n={n} Variable"), inst));
    }
    out
}

#[test]
fn criterion_1_identity_residuals() {
    let start = Instant::now();
    let instances = identity_instances();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (k, (_, inst)) in instances.iter().enumerate() {
        let a = inst.adjacency_f64();
        let b = build_nomadic(inst).to_dense();
        for t in sample_t_values(inst.lambda1(), inst.lambda2(), inst.c(), k as u64, 20) {
            worst = worst.max(identity_sample(inst, &a, &b, t).unwrap().residual);
            count += 1;
        }
    }
    let elapsed = start.elapsed();
    let pass = instances.len() >= 12 && count == 20 * instances.len() && worst <= 1e-8 && elapsed <= Duration::from_secs(60);
    verdict(
        "1 (determinant identity)",
        pass,
        format!("{} instances, {count} points, max residual {worst:.2e}, {:.1}s", instances.len(), elapsed.as_secs_f64()),
    );
    assert!(pass);
}

#[test]
fn criterion_2_spectrum_decomposition() {
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for (name, inst) in identity_instances() {
        let rep = spectrum_report(&inst, 1e-6).unwrap();
        worst = worst.max(rep.max_residual);
        if !rep.pass || !rep.multiplicities.iter().all(|m| m.ok()) {
            failures.push(name);
        }
    }
    let pass = failures.is_empty() && worst <= 1e-6;
    verdict("2 (spectrum of B)", pass, format!("max matched distance {worst:.2e}, multiplicity failures {failures:?}"));
    assert!(pass);
}

#[test]
fn criterion_3_polynomial_oracle() {
    let cases: Vec<(Vec<Atom>, usize, u64)> = vec![
        (vec![make_sort4(); 2], 1, 1),
        (vec![make_sort4(); 2], 3, 2),
        (vec![make_sort4(); 3], 2, 3),
        (vec![make_complete(3).unwrap(); 3], 2, 4),
        (vec![make_single_edge(); 3], 4, 5),
        (vec![make_forrelation(2).unwrap(); 2], 1, 6),
    ];
    let mut entries = 0usize;
    let mut mismatches = 0usize;
    let mut max_directed = 0;
    for (atoms, n, seed) in &cases {
        let inst = random_instance(atoms, *n, *seed, NegationModel::variable(*seed)).unwrap();
        max_directed = max_directed.max(2 * inst.edges().len());
        assert!(2 * inst.edges().len() <= 120);
        for k in 0..=6 {
            let p = instance_polynomial_exact(&inst, k).unwrap();
            for u in 0..inst.num_vertices() {
                for v in 0..inst.num_vertices() {
                    entries += 1;
                    if p.get(u, v) != nomadic_walk_weight_oracle(&inst, u, v, k).unwrap() {
                        mismatches += 1;
                    }
                }
            }
        }
    }
    let pass = mismatches == 0;
    verdict(
        "3 (walk polynomials)",
        pass,
        format!("{} instances, 2|E| ≤ {max_directed}, {entries} entries for k ≤ 6, {mismatches} mismatches", cases.len()),
    );
    assert!(pass);
}

#[test]
fn criterion_4_growth_and_degree_laws() {
    let mut report = Vec::new();
    let mut pass = true;
    for (atom, c) in [(make_sort4(), 2), (make_sort4(), 3), (make_complete(3).unwrap(), 3)] {
        let ball = build_product_ball(&vec![atom.clone(); c], c, 5).unwrap();
        for t in 1..=5 {
            let (lhs, rhs) = growth_rate_check(&ball, t).unwrap();
            pass &= lhs == rhs;
        }
        let bad = degree_law_violations(&ball).unwrap();
        pass &= bad.is_empty();
        report.push(format!("{} c={c}: {} vertices, {} interior", atom.name(), ball.len(), ball.interior().count()));
    }
    verdict("4 (growth and degree laws)", pass, report.join("; "));
    assert!(pass);
}

fn deep_sort4_ball() -> ProductBall {
    // Radius 17 is the deepest pruned SORT4 ball under the vertex cap.
    build_product_ball_with(&[make_sort4()], 2, 17, BallOptions { prune_zero: true, ..Default::default() }).unwrap()
}

#[test]
fn criterion_5a_witness_rayleigh_quotients() {
    let ball = deep_sort4_ball();
    let (delta, l) = (0.05, ball.radius - 1);
    let q = |s: i8| {
        let f = witness_vector(&ball, &WitnessConfig::new(s, delta, l).unwrap());
        rayleigh_quotient(&ball, &truncate_normalize(&ball, &f, l).unwrap()).unwrap()
    };
    let (plus, minus) = (q(1), q(-1));
    let edge = 2.0 * S2;
    let pass = plus >= edge - 0.25 && minus <= -edge + 0.25;
    verdict(
        "5a (witness quotients)",
        pass,
        format!("L={l}, +1 → {plus:.6} (≥ {:.6}), −1 → {minus:.6} (≤ {:.6})", edge - 0.25, -edge + 0.25),
    );
    assert!(pass);
}

/// Literal comparison of the finite-ball squared norm with
/// `c/((c−1)δ(2−δ))`. The depth-0 term is 1, not `c/(c−1)`, so the closed
/// form overshoots by `1/(c−1)` at every depth and this check is red.
#[test]
fn criterion_5b_witness_norm_closed_form() {
    let ball = deep_sort4_ball();
    let (c, delta, l) = (2, 0.05, ball.radius - 1);
    let f = witness_vector(&ball, &WitnessConfig::new(1, delta, l).unwrap());
    let finite: f64 = f.iter().zip(&ball.vertices).filter(|(_, v)| v.depth <= l).map(|(x, _)| x * x).sum();
    let closed = norm_squared_closed_form(c, delta);
    let tail = tail_norm_squared(c, delta, l);
    let exact_gap = (norm_squared_exact(c, delta) - finite - tail).abs();
    let pass = (closed - finite).abs() <= tail;
    verdict(
        "5b (witness norm)",
        pass,
        format!(
            "finite ‖f‖² {finite:.6}, closed form {closed:.6}, tail {tail:.6}, gap {:.6}; exact series matches to {exact_gap:.1e}",
            closed - finite
        ),
    );
    assert!(pass, "closed form exceeds the finite norm by {} > tail {tail}", closed - finite);
}

#[test]
fn criterion_6_chsh_sandwich() {
    let chsh = single_atom_instance(&make_sort4());
    let opt = opt_bruteforce(&chsh).unwrap();
    let eig = eig_upper_bound(&chsh).unwrap();
    let w = spectral_witness(&chsh).unwrap();
    let lower = sdp_lower_bound(&chsh, &w);
    let target = 1.0 / S2;
    let valid = w.min_eigenvalue().unwrap() >= -1e-12 && w.max_diagonal_error() <= 1e-12;
    let pass = opt == 0.5 && (eig - target).abs() <= 1e-9 && (lower - target).abs() <= 1e-9 && valid;
    verdict("6 (CHSH)", pass, format!("OPT {opt}, EIG {eig:.12}, witness {lower:.12}, witness PSD with unit diagonal {valid}"));
    assert!(pass);
}

#[test]
fn criterion_7_radius_boxplot() {
    let start = Instant::now();
    let mut spec = ExperimentSpec::new(ExperimentKind::Boxplot);
    spec.atoms = "sort4".into();
    spec.c = (2..=8).collect();
    spec.n = vec![15];
    spec.seeds = 100;
    spec.base_seed = 2024;
    let run = experiment::run_boxplot(&spec).unwrap();
    let t = &run.summary;
    let col = |name: &str| t.column(name).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for row in &t.rows {
        let get = |name: &str| row[col(name)].as_f64().unwrap();
        let (c, med_b, sqrt_gr, med_a, bound) = (get("c"), get("rho_b_median"), get("sqrt_gr"), get("rho_a_median"), get("a_bound"));
        let ok = med_b >= 0.85 * sqrt_gr && med_b <= 1.15 * sqrt_gr && med_a <= bound + 0.5;
        pass &= ok;
        parts.push(format!("c={c}: ρ(B)/√gr {:.3}, ρ(A) {med_a:.3} vs {:.3}", med_b / sqrt_gr, bound + 0.5));
    }
    let elapsed = start.elapsed();
    pass &= t.rows.len() == 7 && elapsed <= Duration::from_secs(15 * 60);
    verdict("7 (radius box plot)", pass, format!("{}; {:.0}s", parts.join(", "), elapsed.as_secs_f64()));
    assert!(pass);
}

#[test]
fn criterion_8_threshold_table() {
    let value = |c: usize| 0.5 + sdp_value_formula(S2, -S2, c).unwrap();
    let crossing = value(6) > 1.0 && value(7) < 1.0;
    let root = experiment::sort4_threshold();
    let root_err = (root - (4.0 + 2.0 * S2)).abs();
    let mut forr_err: f64 = 0.0;
    for k in 0..=4u32 {
        let atom = make_forrelation(k).unwrap();
        for c in 2..=10usize {
            let want = 2.0 * ((c - 1) as f64).sqrt() / (c as f64 * 2f64.powf(k as f64 / 2.0));
            forr_err = forr_err.max((sdp_value_formula(atom.lambda1(), atom.lambda2(), c).unwrap() - want).abs());
        }
    }
    let pass = crossing && root_err <= 1e-12 && forr_err <= 1e-12;
    verdict(
        "8 (threshold table)",
        pass,
        format!("½+value: c=6 {:.6}, c=7 {:.6}; root {root:.15} (err {root_err:.1e}); Forrelation max err {forr_err:.1e}", value(6), value(7)),
    );
    assert!(pass);
}

#[test]
fn criterion_9_determinism() {
    let mut specs = Vec::new();
    let mut s = ExperimentSpec::new(ExperimentKind::SpectrumB);
    s.c = vec![2, 3];
    s.n = vec![3];
    s.seeds = 3;
    s.base_seed = 77;
    specs.push(s);
    let mut b = ExperimentSpec::new(ExperimentKind::Boxplot);
    b.c = vec![2, 3, 4];
    b.n = vec![6];
    b.seeds = 5;
    specs.push(b);
    let mut w = ExperimentSpec::new(ExperimentKind::SandwichSweep);
    w.n = vec![4, 8];
    w.seeds = 3;
    w.l = 1;
    w.negation = NegationKind::Constraint;
    specs.push(w);
    specs.push(ExperimentSpec::new(ExperimentKind::ThresholdTable));

    let render = |spec: &ExperimentSpec, threads: usize| -> String {
        experiment::with_threads(threads, || {
            let tables = match spec.kind {
                ExperimentKind::SpectrumB => vec![experiment::run_spectrum_b(spec).unwrap().table],
                ExperimentKind::Boxplot => {
                    let r = experiment::run_boxplot(spec).unwrap();
                    vec![r.summary, r.samples]
                }
                ExperimentKind::SandwichSweep => vec![experiment::run_sandwich_sweep(spec).unwrap()],
                ExperimentKind::ThresholdTable => vec![experiment::run_threshold_table(4, 10).unwrap()],
            };
            tables.iter().map(|t| data_section(&t.to_csv(spec.kind.name())).to_string() + &t.to_json(spec.kind.name()).unwrap()).collect()
        })
        .unwrap()
    };
    let mut identical = 0;
    for spec in &specs {
        let first = render(spec, 1);
        if first == render(spec, 1) && first == render(spec, 2) {
            identical += 1;
        }
    }
    let pass = identical == specs.len();
    verdict("9 (determinism)", pass, format!("{identical}/{} experiment kinds byte-identical across runs and pool sizes", specs.len()));
    assert!(pass);
}
