//! The nomadic walk operator `B` on directed edges and the polynomials
//! `p_k` whose values at `A` count nomadic walks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lifts::InstanceGraph;
use crate::matrix::{CsrMatrix, IntMatrix};

/// Oracle limits: walk length and number of directed edges.
pub const ORACLE_MAX_K: usize = 8;
pub const ORACLE_MAX_DIRECTED: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectedEdge {
    pub tail: usize,
    pub head: usize,
    pub weight: i8,
    pub atom_id: usize,
}

/// Directed edge `2e` is `u→v` for instance edge `e = {u, v}`; `2e+1` is
/// its reverse.
#[derive(Debug, Clone, PartialEq)]
pub struct NomadicOperator {
    pub directed_edges: Vec<DirectedEdge>,
    pub matrix: CsrMatrix,
}

pub fn reverse(e: usize) -> usize {
    e ^ 1
}

pub fn build_nomadic(instance: &InstanceGraph) -> NomadicOperator {
    let mut directed_edges = Vec::with_capacity(2 * instance.edges().len());
    for e in instance.edges() {
        directed_edges.push(DirectedEdge { tail: e.u, head: e.v, weight: e.w, atom_id: e.atom_id });
        directed_edges.push(DirectedEdge { tail: e.v, head: e.u, weight: e.w, atom_id: e.atom_id });
    }
    let out = out_edges(instance.num_vertices(), &directed_edges);
    let m = directed_edges.len();
    let mut indptr = Vec::with_capacity(m + 1);
    let mut indices = Vec::new();
    let mut values = Vec::new();
    indptr.push(0);
    for e in &directed_edges {
        for &f in &out[e.head] {
            let next = &directed_edges[f];
            if next.atom_id != e.atom_id {
                indices.push(f);
                values.push(next.weight as f64);
            }
        }
        indptr.push(indices.len());
    }
    NomadicOperator { directed_edges, matrix: CsrMatrix { nrows: m, ncols: m, indptr, indices, values } }
}

fn out_edges(nv: usize, directed: &[DirectedEdge]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); nv];
    for (k, e) in directed.iter().enumerate() {
        out[e.tail].push(k);
    }
    out
}

impl NomadicOperator {
    pub fn dim(&self) -> usize {
        self.directed_edges.len()
    }

    pub fn to_dense(&self) -> faer::Mat<f64> {
        self.matrix.to_dense()
    }

    pub fn to_matrix_market(&self) -> String {
        self.matrix.to_matrix_market()
    }
}

/// The `|V|·c` square matrix `QP` for the factorization `B = PQ`.
///
/// A row of `B` depends only on the head of the edge and the group of its
/// atom copy, so `P` sends edge `e` to the class `(head(e), group(e))` and
/// `Q[(v, j), e'] = w(e')` when `e'` leaves `v` from a group other than `j`.
/// `QP` has the nonzero spectrum of `B`; the remaining `2|E| − |V|·c`
/// eigenvalues of `B` are zero.
pub fn compressed_nomadic(instance: &InstanceGraph) -> faer::Mat<f64> {
    let c = instance.c();
    let n = instance.n();
    let k = instance.num_vertices() * c;
    let mut m = faer::Mat::zeros(k, k);
    for e in instance.edges() {
        let g = e.atom_id / n;
        for (tail, head) in [(e.u, e.v), (e.v, e.u)] {
            for j in (0..c).filter(|&j| j != g) {
                m[(tail * c + j, head * c + g)] += e.w as f64;
            }
        }
    }
    m
}

/// `ρ(B)` from the eigenvalues of [`compressed_nomadic`].
pub fn nomadic_spectral_radius(instance: &InstanceGraph) -> Result<f64> {
    let eigs = crate::spectra::eig_general(&compressed_nomadic(instance))?;
    Ok(eigs.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

fn check_budget(directed: usize, k: usize) -> Result<()> {
    if k > ORACLE_MAX_K {
        return Err(Error::BudgetExceeded(format!("walk length {k} exceeds {ORACLE_MAX_K}")));
    }
    if directed > ORACLE_MAX_DIRECTED {
        return Err(Error::BudgetExceeded(format!("{directed} directed edges exceed {ORACLE_MAX_DIRECTED}")));
    }
    Ok(())
}

/// Total weight of length-`k` nomadic walks from `u` to `v`, by depth-first
/// enumeration.
pub fn nomadic_walk_weight_oracle(instance: &InstanceGraph, u: usize, v: usize, k: usize) -> Result<i64> {
    let nv = instance.num_vertices();
    if u >= nv || v >= nv {
        return Err(Error::Invalid(format!("vertex out of range (|V| = {nv})")));
    }
    let directed = directed_list(instance);
    check_budget(directed.len(), k)?;
    if k == 0 {
        return Ok((u == v) as i64);
    }
    let out = out_edges(nv, &directed);
    let mut total = 0;
    for &e in &out[u] {
        total += walk_from(&directed, &out, e, k - 1, Some(v)) * directed[e].weight as i64;
    }
    Ok(total)
}

/// Weight of all nomadic continuations of length `k` after the fixed
/// directed edge `first` (the first edge's own weight excluded). This is
/// the row sum of `Bᵏ` at `first`.
pub fn nomadic_edge_walk_oracle(instance: &InstanceGraph, first: usize, k: usize) -> Result<i64> {
    let directed = directed_list(instance);
    check_budget(directed.len(), k)?;
    if first >= directed.len() {
        return Err(Error::Invalid(format!("directed edge {first} out of range")));
    }
    let out = out_edges(instance.num_vertices(), &directed);
    Ok(walk_from(&directed, &out, first, k, None))
}

fn directed_list(instance: &InstanceGraph) -> Vec<DirectedEdge> {
    instance
        .edges()
        .iter()
        .flat_map(|e| {
            [
                DirectedEdge { tail: e.u, head: e.v, weight: e.w, atom_id: e.atom_id },
                DirectedEdge { tail: e.v, head: e.u, weight: e.w, atom_id: e.atom_id },
            ]
        })
        .collect()
}

fn walk_from(directed: &[DirectedEdge], out: &[Vec<usize>], at: usize, steps: usize, target: Option<usize>) -> i64 {
    let e = &directed[at];
    if steps == 0 {
        return match target {
            Some(t) => (e.head == t) as i64,
            None => 1,
        };
    }
    let mut total = 0;
    for &f in &out[e.head] {
        if directed[f].atom_id != e.atom_id {
            total += directed[f].weight as i64 * walk_from(directed, out, f, steps - 1, target);
        }
    }
    total
}

/// `p_k(A)` in exact integers. `sum = λ₁+λ₂`, `neg_prod = −λ₁λ₂`.
pub fn nomadic_polynomial_exact(a: &IntMatrix, sum: i64, neg_prod: i64, c: i64, k: usize) -> IntMatrix {
    let n = a.rows();
    let id = IntMatrix::identity(n);
    if k == 0 {
        return id;
    }
    let gr = (c - 1) * neg_prod;
    // p₂ = A² − (λ₁+λ₂)A − c(−λ₁λ₂)I
    let mut prev = a.clone();
    let mut cur = a.matmul(a).axpby(1, a, -sum).axpby(1, &id, -c * neg_prod);
    if k == 1 {
        return prev;
    }
    for _ in 3..=k {
        let next = a.matmul(&cur).axpby(1, &cur, -sum).axpby(1, &prev, -gr);
        prev = std::mem::replace(&mut cur, next);
    }
    cur
}

/// `p_k(A)` in floating point.
pub fn nomadic_polynomial(a: &faer::Mat<f64>, lambda1: f64, lambda2: f64, c: usize, k: usize) -> faer::Mat<f64> {
    let n = a.nrows();
    let id = faer::Mat::<f64>::identity(n, n);
    if k == 0 {
        return id;
    }
    if k == 1 {
        return a.clone();
    }
    let sum = lambda1 + lambda2;
    let neg_prod = -lambda1 * lambda2;
    let gr = (c as f64 - 1.0) * neg_prod;
    let mut prev = a.clone();
    let mut cur = a * a - a * sum - &id * (c as f64 * neg_prod);
    for _ in 3..=k {
        let next = a * &cur - &cur * sum - &prev * gr;
        prev = std::mem::replace(&mut cur, next);
    }
    cur
}

/// `p_k(A)` for an instance; exact whenever the atom's eigenvalue sum and
/// product are integers.
pub fn instance_polynomial_exact(instance: &InstanceGraph, k: usize) -> Option<IntMatrix> {
    let atom = &instance.atoms()[0];
    let (sum, prod) = (atom.exact_sum()?, atom.exact_product()?);
    Some(nomadic_polynomial_exact(&instance.adjacency(), sum, -prod, instance.c() as i64, k))
}
