//! Explicit SDP witnesses, the brute-force and eigenvalue bounds that
//! sandwich them, and the closed-form SDP value of random additive lifts.

use std::collections::HashMap;

use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lifts::{detect_bad_vertices, InstanceGraph};
use crate::spectra::{eig_symmetric, DENSE_LIMIT};
use crate::waves::tail_mass;

pub const BRUTE_FORCE_LIMIT: usize = 24;

/// `(index, value)` pairs with distinct indices.
pub type SparseVector = Vec<(usize, f64)>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WitnessMeta {
    pub s: i8,
    pub delta: f64,
    pub l: usize,
    pub bad_vertex_count: usize,
}

/// PSD matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessMatrix {
    pub m: Mat<f64>,
    pub meta: WitnessMeta,
}

impl WitnessMatrix {
    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(eig_symmetric(&self.m)?.first().copied().unwrap_or(0.0))
    }

    pub fn max_diagonal_error(&self) -> f64 {
        (0..self.dim()).map(|i| (self.m[(i, i)] - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Sparse transported witness `g_v` for a vertex whose radius-`2L`
/// constraint ball is a tree: `ρ^{depth}·(product of signed weights)` along
/// the unique hop path, normalized to unit length.
pub fn transported_witness(instance: &InstanceGraph, v: usize, rho: f64, l: usize) -> SparseVector {
    let g = instance.congraph();
    let (n, c) = (instance.n(), instance.c());
    let copies_of = |u: usize| -> Vec<usize> {
        let (i, a) = instance.vertex(u);
        (0..c).map(|j| j * n + g.constraint_of(i, a, j)).collect()
    };
    let mut out: Vec<(usize, f64)> = vec![(v, 1.0)];
    let mut seen: HashMap<usize, ()> = HashMap::from([(v, ())]);
    let mut frontier = vec![(v, 1.0f64, usize::MAX)];
    for _ in 0..l {
        let mut next = Vec::new();
        for &(u, value, parent_copy) in &frontier {
            for f in copies_of(u) {
                if f == parent_copy {
                    continue;
                }
                for e in instance.copy_edges(f) {
                    let edge = instance.edges()[e];
                    let x = if edge.u == u {
                        edge.v
                    } else if edge.v == u {
                        edge.u
                    } else {
                        continue;
                    };
                    let child = value * rho * edge.w as f64;
                    debug_assert!(seen.insert(x, ()).is_none(), "ball around {v} is not a tree");
                    out.push((x, child));
                    next.push((x, child, f));
                }
            }
        }
        frontier = next;
    }
    let norm = out.iter().map(|(_, x)| x * x).sum::<f64>().sqrt();
    out.iter_mut().for_each(|(_, x)| *x /= norm);
    out
}

/// The sparse vectors `g̃_v` (transported witness, or `e_v` at `L`-bad
/// vertices) and the number of bad vertices.
pub fn witness_vectors(instance: &InstanceGraph, s: i8, delta: f64, l: usize) -> Result<(Vec<SparseVector>, usize)> {
    let nv = instance.num_vertices();
    let cfg = crate::waves::WitnessConfig::new(s, delta, l)?;
    let gr = (instance.c() as f64 - 1.0) * (-instance.lambda1() * instance.lambda2());
    let rho = cfg.rho(gr);
    let bad = detect_bad_vertices(instance.congraph(), l);
    let mut is_bad = vec![false; nv];
    for &b in &bad {
        is_bad[b] = true;
    }
    let vectors = (0..nv)
        .into_par_iter()
        .map(|v| if is_bad[v] { vec![(v, 1.0)] } else { transported_witness(instance, v, rho, l) })
        .collect();
    Ok((vectors, bad.len()))
}

/// Gram witness `Σ_v g̃_v g̃_vᵀ`, rescaled by its diagonal to have unit
/// diagonal.
pub fn build_witness(instance: &InstanceGraph, s: i8, delta: f64, l: usize) -> Result<WitnessMatrix> {
    let nv = instance.num_vertices();
    if nv > DENSE_LIMIT {
        return Err(Error::TooLarge(nv));
    }
    let (vectors, bad) = witness_vectors(instance, s, delta, l)?;
    let mut m = Mat::<f64>::zeros(nv, nv);
    for g in &vectors {
        for &(a, x) in g {
            for &(b, y) in g {
                m[(a, b)] += x * y;
            }
        }
    }
    let scale: Vec<f64> = (0..nv).map(|i| 1.0 / m[(i, i)].sqrt()).collect();
    for i in 0..nv {
        for j in 0..nv {
            m[(i, j)] *= scale[i] * scale[j];
        }
        m[(i, i)] = 1.0;
    }
    Ok(WitnessMatrix { m, meta: WitnessMeta { s, delta, l, bad_vertex_count: bad } })
}

/// `⟨A, M⟩` of the rescaled Gram witness without forming `M`:
/// `Σ_v ⟨h_v, A h_v⟩` with `h_v(u) = g̃_v(u)/√M_uu`.
pub fn witness_objective_sparse(instance: &InstanceGraph, s: i8, delta: f64, l: usize) -> Result<(f64, usize)> {
    let nv = instance.num_vertices();
    let (vectors, bad) = witness_vectors(instance, s, delta, l)?;
    let mut diag = vec![0.0; nv];
    for g in &vectors {
        for &(u, x) in g {
            diag[u] += x * x;
        }
    }
    let nbrs = instance.neighbor_lists();
    let mut h = vec![0.0; nv];
    let mut total = 0.0;
    for g in &vectors {
        for &(u, x) in g {
            h[u] = x / diag[u].sqrt();
        }
        for &(u, _) in g {
            total += h[u] * nbrs[u].iter().map(|&(w, wt)| wt * h[w]).sum::<f64>();
        }
        for &(u, _) in g {
            h[u] = 0.0;
        }
    }
    Ok((total, bad))
}

/// `I − A/λ_min(A)`: PSD with unit diagonal for any zero-diagonal `A`. For
/// a single two-eigenvalue atom this is a multiple of the projector onto
/// the `λ₁`-eigenspace.
pub fn spectral_witness(instance: &InstanceGraph) -> Result<WitnessMatrix> {
    let a = instance.adjacency_f64();
    let lmin = *eig_symmetric(&a)?.first().ok_or(Error::ZeroVector)?;
    if lmin >= 0.0 {
        return Err(Error::Invalid("adjacency has no negative eigenvalue".into()));
    }
    let nv = a.nrows();
    let m = Mat::from_fn(nv, nv, |i, j| if i == j { 1.0 } else { 0.0 } - a[(i, j)] / lmin);
    Ok(WitnessMatrix { m, meta: WitnessMeta { s: 1, delta: 0.0, l: 0, bad_vertex_count: 0 } })
}

/// Exact `max_x (1/|E|) Σ_e w_e x_u x_v` over `x ∈ {±1}^V`, by Gray code.
pub fn opt_bruteforce_edges(num_vertices: usize, edges: &[(usize, usize, i64)]) -> Result<f64> {
    if num_vertices > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge(num_vertices));
    }
    if edges.is_empty() {
        return Err(Error::Invalid("no edges".into()));
    }
    let mut adj = vec![vec![0i64; num_vertices]; num_vertices];
    for &(u, v, w) in edges {
        adj[u][v] += w;
        adj[v][u] += w;
    }
    let mut x = vec![1i64; num_vertices];
    let mut value: i64 = edges.iter().map(|e| e.2).sum();
    let mut best = value;
    // x₀ stays +1: the objective is invariant under a global flip.
    if num_vertices > 1 {
        for step in 1u64..(1u64 << (num_vertices - 1)) {
            let k = step.trailing_zeros() as usize + 1;
            let field: i64 = (0..num_vertices).map(|j| adj[k][j] * x[j]).sum();
            value -= 2 * x[k] * field;
            x[k] = -x[k];
            best = best.max(value);
        }
    }
    Ok(best as f64 / edges.len() as f64)
}

pub fn opt_bruteforce(instance: &InstanceGraph) -> Result<f64> {
    let edges: Vec<(usize, usize, i64)> = instance.edges().iter().map(|e| (e.u, e.v, e.w as i64)).collect();
    opt_bruteforce_edges(instance.num_vertices(), &edges)
}

/// `(|V|/2|E|)·λ_max(A)`.
pub fn eig_upper_bound(instance: &InstanceGraph) -> Result<f64> {
    let eigs = eig_symmetric(&instance.adjacency_f64())?;
    let lmax = *eigs.last().ok_or(Error::ZeroVector)?;
    Ok(instance.num_vertices() as f64 / (2.0 * instance.edges().len() as f64) * lmax)
}

/// `⟨A, M⟩` summed over the edge list.
pub fn witness_objective(instance: &InstanceGraph, witness: &WitnessMatrix) -> f64 {
    instance.edges().iter().map(|e| 2.0 * e.w as f64 * witness.m[(e.u, e.v)]).sum()
}

/// `⟨A, M⟩/(2|E|)`.
pub fn sdp_lower_bound(instance: &InstanceGraph, witness: &WitnessMatrix) -> f64 {
    witness_objective(instance, witness) / (2.0 * instance.edges().len() as f64)
}

/// `(λ₁+λ₂+2√((c−1)(−λ₁λ₂)))/(c(−λ₁λ₂))`.
pub fn sdp_value_formula(lambda1: f64, lambda2: f64, c: usize) -> Result<f64> {
    if c < 2 {
        return Err(Error::OutOfModel(format!("c = {c}; the formula needs c ≥ 2")));
    }
    let neg_prod = -lambda1 * lambda2;
    Ok((lambda1 + lambda2 + 2.0 * ((c as f64 - 1.0) * neg_prod).sqrt()) / (c as f64 * neg_prod))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub opt: Option<f64>,
    pub sdp_lower: f64,
    pub sdp_upper: f64,
    pub formula: Option<f64>,
    pub bad_vertex_count: usize,
    pub tail_mass: f64,
    /// `(λ₁+λ₂+r_X) − ⟨A,M⟩/|V|`.
    pub slack: f64,
    pub witness_min_eigenvalue: f64,
    pub witness_diagonal_error: f64,
    pub s: i8,
    pub delta: f64,
    pub l: usize,
}

impl SandwichReport {
    /// `sdp_lower ≤ sdp_upper` and `opt ≤ sdp_upper`, each up to 1e−9.
    pub fn chain_holds(&self) -> bool {
        self.sdp_lower <= self.sdp_upper + 1e-9 && self.opt.is_none_or(|o| o <= self.sdp_upper + 1e-9)
    }

    pub fn witness_valid(&self) -> bool {
        self.witness_min_eigenvalue >= -1e-8 && self.witness_diagonal_error <= 1e-12
    }
}

pub fn sandwich_with(instance: &InstanceGraph, witness: &WitnessMatrix, tail: f64) -> Result<SandwichReport> {
    let nv = instance.num_vertices();
    let opt = if nv <= BRUTE_FORCE_LIMIT { Some(opt_bruteforce(instance)?) } else { None };
    let (l1, l2) = (instance.lambda1(), instance.lambda2());
    let gr = (instance.c() as f64 - 1.0) * (-l1 * l2);
    Ok(SandwichReport {
        opt,
        sdp_lower: sdp_lower_bound(instance, witness),
        sdp_upper: eig_upper_bound(instance)?,
        formula: sdp_value_formula(l1, l2, instance.c()).ok(),
        bad_vertex_count: witness.meta.bad_vertex_count,
        tail_mass: tail,
        slack: l1 + l2 + 2.0 * gr.sqrt() - witness_objective(instance, witness) / nv as f64,
        witness_min_eigenvalue: witness.min_eigenvalue()?,
        witness_diagonal_error: witness.max_diagonal_error(),
        s: witness.meta.s,
        delta: witness.meta.delta,
        l: witness.meta.l,
    })
}

/// Builds the transported witness and reports all bounds.
pub fn sandwich(instance: &InstanceGraph, s: i8, delta: f64, l: usize) -> Result<SandwichReport> {
    let w = build_witness(instance, s, delta, l)?;
    sandwich_with(instance, &w, tail_mass(instance.c(), delta, l))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atoms::{make_forrelation, make_single_edge, make_sort4};
    use crate::lifts::{random_instance, single_atom_instance, NegationModel};

    #[test]
    fn chsh_values() {
        let chsh = single_atom_instance(&make_sort4());
        assert_eq!(opt_bruteforce(&chsh).unwrap(), 0.5);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((eig_upper_bound(&chsh).unwrap() - r).abs() < 1e-12);
        let w = spectral_witness(&chsh).unwrap();
        let m = &w.m;
        let a = chsh.adjacency_f64();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 } + a[(i, j)] * r;
                assert!((m[(i, j)] - want).abs() < 1e-12);
            }
        }
        assert!((sdp_lower_bound(&chsh, &w) - r).abs() < 1e-12);
        assert!(w.min_eigenvalue().unwrap() >= -1e-12);
    }

    #[test]
    fn small_opts() {
        let e = single_atom_instance(&make_single_edge());
        assert_eq!(opt_bruteforce(&e).unwrap(), 1.0);
        assert_eq!(eig_upper_bound(&e).unwrap(), 1.0);
        let c5: Vec<(usize, usize, i64)> = (0..5).map(|i| (i, (i + 1) % 5, -1)).collect();
        assert_eq!(opt_bruteforce_edges(5, &c5).unwrap(), 0.6);
        assert!(matches!(opt_bruteforce_edges(25, &c5), Err(Error::TooLarge(25))));
    }

    #[test]
    fn identity_witness_when_everything_is_bad() {
        let inst = random_instance(&[make_sort4(), make_sort4()], 2, 3, NegationModel::variable(1)).unwrap();
        let w = build_witness(&inst, 1, 0.05, 3).unwrap();
        assert_eq!(w.meta.bad_vertex_count, inst.num_vertices());
        assert_eq!(w.m, Mat::<f64>::identity(8, 8));
        assert_eq!(sdp_lower_bound(&inst, &w), 0.0);
    }

    #[test]
    fn witness_is_valid_with_mixed_badness() {
        let inst = random_instance(&[make_sort4(), make_sort4()], 40, 8, NegationModel::variable(2)).unwrap();
        for s in [1, -1] {
            let rep = sandwich(&inst, s, 0.1, 2).unwrap();
            assert!(rep.witness_valid(), "{rep:?}");
            assert!(rep.chain_holds());
            assert!(rep.bad_vertex_count < inst.num_vertices());
        }
    }

    #[test]
    fn sparse_objective_matches_dense() {
        let inst = random_instance(&[make_sort4(), make_sort4()], 60, 2, NegationModel::constraint(2)).unwrap();
        for (s, l) in [(1, 1), (1, 2), (-1, 2)] {
            let w = build_witness(&inst, s, 0.2, l).unwrap();
            let (sparse, bad) = witness_objective_sparse(&inst, s, 0.2, l).unwrap();
            assert_eq!(bad, w.meta.bad_vertex_count);
            assert!((sparse - witness_objective(&inst, &w)).abs() < 1e-9);
        }
    }

    #[test]
    fn formula_cases() {
        let s2 = 2f64.sqrt();
        assert!((sdp_value_formula(s2, -s2, 7).unwrap() + 0.5 - 0.994_871_659_305_393_5).abs() < 1e-12);
        assert!((sdp_value_formula(s2, -s2, 6).unwrap() + 0.5 - 1.027_046_276_694_729_7).abs() < 1e-12);
        assert!(sdp_value_formula(s2, -s2, 6).unwrap() + 0.5 > 1.0);
        assert!(matches!(sdp_value_formula(s2, -s2, 1), Err(Error::OutOfModel(_))));
        // Forrelation_1 is SORT4 up to relabeling.
        let f1 = make_forrelation(1).unwrap();
        let c = 5;
        let want = 2.0 * ((c - 1) as f64).sqrt() / (c as f64 * s2);
        assert!((sdp_value_formula(f1.lambda1(), f1.lambda2(), c).unwrap() - want).abs() < 1e-12);
    }
}
