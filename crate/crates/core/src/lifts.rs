//! Constraint graphs (n-lifts of `K_{r,c}`), negation models and the signed
//! instance multigraphs obtained by stamping one atom copy per constraint
//! vertex.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::atoms::{Atom, EIGEN_TOL};
use crate::error::{Error, Result};
use crate::matrix::IntMatrix;
use crate::rng::{Stream, TAG_NEGATION, TAG_PERMUTATION};

/// An `n`-fold lift of `K_{r,c}`.
///
/// `perms[i * c + j][a] = b` means variable `(i, a)` is matched with
/// constraint `(j, b)`. Variable `(i, a)` has id `i * n + a`; constraint
/// `(j, b)` has atom id `j * n + b`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ConstraintGraphRecord", into = "ConstraintGraphRecord")]
pub struct ConstraintGraph {
    r: usize,
    c: usize,
    n: usize,
    perms: Vec<Vec<usize>>,
    inverse: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct ConstraintGraphRecord {
    r: usize,
    c: usize,
    n: usize,
    perms: Vec<Vec<usize>>,
}

impl TryFrom<ConstraintGraphRecord> for ConstraintGraph {
    type Error = Error;
    fn try_from(rec: ConstraintGraphRecord) -> Result<Self> {
        ConstraintGraph::from_perms(rec.r, rec.c, rec.n, rec.perms)
    }
}

impl From<ConstraintGraph> for ConstraintGraphRecord {
    fn from(g: ConstraintGraph) -> Self {
        ConstraintGraphRecord { r: g.r, c: g.c, n: g.n, perms: g.perms }
    }
}

impl ConstraintGraph {
    /// Validates that every entry of `perms` is a permutation of `0..n`.
    pub fn from_perms(r: usize, c: usize, n: usize, perms: Vec<Vec<usize>>) -> Result<Self> {
        if r < 1 || c < 1 {
            return Err(Error::InvalidArity(r.min(c)));
        }
        if n == 0 {
            return Err(Error::Invalid("lift size n must be at least 1".into()));
        }
        if perms.len() != r * c {
            return Err(Error::Invalid(format!("expected {} permutations, got {}", r * c, perms.len())));
        }
        let mut inverse = Vec::with_capacity(perms.len());
        for p in &perms {
            if p.len() != n {
                return Err(Error::Invalid("permutation has wrong length".into()));
            }
            let mut inv = vec![usize::MAX; n];
            for (a, &b) in p.iter().enumerate() {
                if b >= n || inv[b] != usize::MAX {
                    return Err(Error::Invalid("entry is not a permutation".into()));
                }
                inv[b] = a;
            }
            inverse.push(inv);
        }
        Ok(Self { r, c, n, perms, inverse })
    }

    fn identity(r: usize, c: usize, n: usize) -> Self {
        Self::from_perms(r, c, n, vec![(0..n).collect(); r * c]).expect("identity lift is valid")
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn c(&self) -> usize {
        self.c
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn perms(&self) -> &[Vec<usize>] {
        &self.perms
    }

    pub fn num_variables(&self) -> usize {
        self.r * self.n
    }

    pub fn num_constraints(&self) -> usize {
        self.c * self.n
    }

    /// Constraint copy `b` of group `j` matched to variable `(i, a)`.
    pub fn constraint_of(&self, i: usize, a: usize, j: usize) -> usize {
        self.perms[i * self.c + j][a]
    }

    /// Variable ids of constraint `(j, b)`, ordered by variable group.
    pub fn members(&self, j: usize, b: usize) -> Vec<usize> {
        (0..self.r).map(|i| i * self.n + self.inverse[i * self.c + j][b]).collect()
    }

    /// Node ids of the bipartite graph: variables `0..r·n`, then
    /// constraints `r·n + atom_id`.
    pub fn node_count(&self) -> usize {
        self.num_variables() + self.num_constraints()
    }

    pub fn node_neighbors(&self, node: usize) -> Vec<usize> {
        let nv = self.num_variables();
        if node < nv {
            let (i, a) = (node / self.n, node % self.n);
            (0..self.c).map(|j| nv + j * self.n + self.constraint_of(i, a, j)).collect()
        } else {
            let f = node - nv;
            self.members(f / self.n, f % self.n)
        }
    }

    /// `edges − vertices + components` of the radius-`radius` ball around
    /// `node` (the ball is connected, so components = 1).
    pub fn ball_cycle_rank(&self, node: usize, radius: usize) -> usize {
        let mut dist = vec![usize::MAX; self.node_count()];
        let mut order = vec![node];
        dist[node] = 0;
        let mut queue = VecDeque::from([node]);
        while let Some(x) = queue.pop_front() {
            if dist[x] == radius {
                continue;
            }
            for y in self.node_neighbors(x) {
                if dist[y] == usize::MAX {
                    dist[y] = dist[x] + 1;
                    order.push(y);
                    queue.push_back(y);
                }
            }
        }
        let mut twice_edges = 0usize;
        for &x in &order {
            twice_edges += self.node_neighbors(x).into_iter().filter(|&y| dist[y] != usize::MAX).count();
        }
        twice_edges / 2 + 1 - order.len()
    }
}

/// Base constraint graph `K_{r,c}` (n = 1).
pub fn base_constraint_graph(r: usize, c: usize) -> Result<ConstraintGraph> {
    if r < 2 {
        return Err(Error::InvalidArity(r));
    }
    if c < 2 {
        return Err(Error::InvalidArity(c));
    }
    Ok(ConstraintGraph::identity(r, c, 1))
}

/// Uniform random `n`-lift: one Fisher-Yates permutation per base edge
/// `(i, j)`, each from its own substream of `seed`.
pub fn random_lift(r: usize, c: usize, n: usize, seed: u64) -> Result<ConstraintGraph> {
    base_constraint_graph(r, c)?;
    if n == 0 {
        return Err(Error::Invalid("lift size n must be at least 1".into()));
    }
    let perms = (0..r * c)
        .map(|p| Stream::tagged(seed, TAG_PERMUTATION, p as u64).permutation(n))
        .collect();
    ConstraintGraph::from_perms(r, c, n, perms)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NegationKind {
    None,
    /// Every edge of a placed copy is multiplied by one random sign.
    Constraint,
    /// Edge `{i,i'}` of a placed copy is multiplied by `ξᵢξᵢ'` with
    /// independent uniform literal signs.
    Variable,
}

impl std::str::FromStr for NegationKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "constraint" => Ok(Self::Constraint),
            "variable" => Ok(Self::Variable),
            _ => Err(Error::Invalid(format!("unknown negation model `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NegationModel {
    pub kind: NegationKind,
    pub seed: u64,
}

impl NegationModel {
    pub fn none() -> Self {
        Self { kind: NegationKind::None, seed: 0 }
    }

    pub fn constraint(seed: u64) -> Self {
        Self { kind: NegationKind::Constraint, seed }
    }

    pub fn variable(seed: u64) -> Self {
        Self { kind: NegationKind::Variable, seed }
    }

    /// Edge multipliers for the copy at `atom_id`, as an `r×r` sign table.
    fn copy_signs(&self, atom_id: usize, r: usize) -> Vec<i8> {
        match self.kind {
            NegationKind::None => vec![1; r * r],
            NegationKind::Constraint => {
                let s = Stream::tagged(self.seed, TAG_NEGATION, atom_id as u64).sign();
                vec![s; r * r]
            }
            NegationKind::Variable => {
                let mut stream = Stream::tagged(self.seed, TAG_NEGATION, atom_id as u64);
                let xi: Vec<i8> = (0..r).map(|_| stream.sign()).collect();
                (0..r * r).map(|k| xi[k / r] * xi[k % r]).collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceEdge {
    pub u: usize,
    pub v: usize,
    pub w: i8,
    pub atom_id: usize,
}

/// Signed multigraph on the variable vertices of a constraint graph.
///
/// Serializes as an instance record; deserialization rebuilds the graph from
/// the constraint graph, atoms and negation model and rejects records whose
/// stored edge list disagrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceRecord", into = "InstanceRecord")]
pub struct InstanceGraph {
    congraph: ConstraintGraph,
    atoms: Vec<Atom>,
    negation: NegationModel,
    lift_seed: Option<u64>,
    edges: Vec<InstanceEdge>,
    /// Positions `(i, i')` inside the atom for each edge.
    local: Vec<(u16, u16)>,
    /// `copy_start[f]..copy_start[f+1]` are the edges of copy `f`.
    copy_start: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct InstanceRecord {
    r: usize,
    c: usize,
    n: usize,
    seed: Option<u64>,
    negation: NegationModel,
    lambda1: f64,
    lambda2: f64,
    atoms: Vec<Atom>,
    congraph: ConstraintGraph,
    vertices: Vec<(usize, usize)>,
    edges: Vec<InstanceEdge>,
}

impl From<InstanceGraph> for InstanceRecord {
    fn from(g: InstanceGraph) -> Self {
        InstanceRecord {
            r: g.r(),
            c: g.c(),
            n: g.n(),
            seed: g.lift_seed,
            negation: g.negation,
            lambda1: g.lambda1(),
            lambda2: g.lambda2(),
            vertices: (0..g.num_vertices()).map(|v| g.vertex(v)).collect(),
            atoms: g.atoms,
            congraph: g.congraph,
            edges: g.edges,
        }
    }
}

impl TryFrom<InstanceRecord> for InstanceGraph {
    type Error = Error;
    fn try_from(rec: InstanceRecord) -> Result<Self> {
        let g = &rec.congraph;
        if (g.r(), g.c(), g.n()) != (rec.r, rec.c, rec.n) {
            return Err(Error::Invalid("shape fields disagree with the constraint graph".into()));
        }
        let mut inst = if rec.c == 1 && rec.n == 1 && rec.atoms.len() == 1 {
            single_atom_instance(&rec.atoms[0])
        } else {
            make_instance(g, &rec.atoms, rec.negation)?
        };
        inst.negation = rec.negation;
        if inst.edges != rec.edges {
            return Err(Error::Invalid("edge list does not match the constraint graph and atoms".into()));
        }
        let vertices: Vec<(usize, usize)> = (0..inst.num_vertices()).map(|v| inst.vertex(v)).collect();
        if vertices != rec.vertices {
            return Err(Error::Invalid("vertex list does not match the lift".into()));
        }
        inst.lift_seed = rec.seed;
        Ok(inst)
    }
}

/// Places the atom copies on `congraph`.
///
/// All atoms must have arity `r` and share `(λ₁, λ₂)`. Constraint negation
/// is only spectrum-preserving for bipartite atoms and is rejected otherwise.
pub fn make_instance(congraph: &ConstraintGraph, atoms: &[Atom], negation: NegationModel) -> Result<InstanceGraph> {
    if atoms.len() != congraph.c() {
        return Err(Error::Invalid(format!("{} atoms for {} constraint groups", atoms.len(), congraph.c())));
    }
    for a in atoms {
        if a.r() != congraph.r() {
            return Err(Error::ArityMismatch { expected: congraph.r(), got: a.r() });
        }
    }
    let (l1, l2) = (atoms[0].lambda1(), atoms[0].lambda2());
    let scale = l1.abs().max(l2.abs()).max(1.0);
    if atoms.iter().any(|a| (a.lambda1() - l1).abs() > EIGEN_TOL * scale || (a.lambda2() - l2).abs() > EIGEN_TOL * scale) {
        return Err(Error::MixedEigenvalues);
    }
    if negation.kind == NegationKind::Constraint {
        if let Some(a) = atoms.iter().find(|a| !a.is_bipartite()) {
            return Err(Error::UnbalancedNegation(a.name().to_string()));
        }
    }
    Ok(assemble(congraph, atoms, negation))
}

fn assemble(congraph: &ConstraintGraph, atoms: &[Atom], negation: NegationModel) -> InstanceGraph {
    let (r, n) = (congraph.r(), congraph.n());
    let mut edges = Vec::new();
    let mut local = Vec::new();
    let mut copy_start = Vec::with_capacity(congraph.num_constraints() + 1);
    for (j, atom) in atoms.iter().enumerate() {
        for b in 0..n {
            let atom_id = j * n + b;
            copy_start.push(edges.len());
            let members = congraph.members(j, b);
            let signs = negation.copy_signs(atom_id, r);
            for i in 0..r {
                for k in (i + 1)..r {
                    let base = atom.weight(i, k);
                    if base == 0 {
                        continue;
                    }
                    let w = base * signs[i * r + k];
                    let (u, v) = (members[i], members[k]);
                    edges.push(InstanceEdge { u, v, w, atom_id });
                    local.push((i as u16, k as u16));
                }
            }
        }
    }
    copy_start.push(edges.len());
    InstanceGraph {
        congraph: congraph.clone(),
        atoms: atoms.to_vec(),
        negation,
        lift_seed: None,
        edges,
        local,
        copy_start,
    }
}

/// A single atom as a stand-alone instance (one constraint, one copy).
pub fn single_atom_instance(atom: &Atom) -> InstanceGraph {
    let congraph = ConstraintGraph::identity(atom.r(), 1, 1);
    assemble(&congraph, std::slice::from_ref(atom), NegationModel::none())
}

/// Random lift plus instance in one step; records the lift seed.
pub fn random_instance(atoms: &[Atom], n: usize, seed: u64, negation: NegationModel) -> Result<InstanceGraph> {
    let r = atoms.first().ok_or_else(|| Error::Invalid("no atoms".into()))?.r();
    let congraph = random_lift(r, atoms.len(), n, seed)?;
    let mut inst = make_instance(&congraph, atoms, negation)?;
    inst.lift_seed = Some(seed);
    Ok(inst)
}

impl InstanceGraph {
    pub fn congraph(&self) -> &ConstraintGraph {
        &self.congraph
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn negation(&self) -> NegationModel {
        self.negation
    }

    pub fn lift_seed(&self) -> Option<u64> {
        self.lift_seed
    }

    pub fn r(&self) -> usize {
        self.congraph.r()
    }

    pub fn c(&self) -> usize {
        self.congraph.c()
    }

    pub fn n(&self) -> usize {
        self.congraph.n()
    }

    pub fn lambda1(&self) -> f64 {
        self.atoms[0].lambda1()
    }

    pub fn lambda2(&self) -> f64 {
        self.atoms[0].lambda2()
    }

    pub fn num_vertices(&self) -> usize {
        self.congraph.num_variables()
    }

    /// `(variable group, copy)` of vertex `v`.
    pub fn vertex(&self, v: usize) -> (usize, usize) {
        (v / self.n(), v % self.n())
    }

    pub fn edges(&self) -> &[InstanceEdge] {
        &self.edges
    }

    pub fn num_copies(&self) -> usize {
        self.copy_start.len() - 1
    }

    /// Edge indices belonging to atom copy `atom_id`.
    pub fn copy_edges(&self, atom_id: usize) -> std::ops::Range<usize> {
        self.copy_start[atom_id]..self.copy_start[atom_id + 1]
    }

    /// Atom positions `(i, i')` of edge `e`.
    pub fn local_positions(&self, e: usize) -> (usize, usize) {
        let (i, k) = self.local[e];
        (i as usize, k as usize)
    }

    /// Adjacency matrix with parallel edges summed.
    /// Dense adjacency matrix with parallel edges summed.
    pub fn adjacency(&self) -> IntMatrix {
        let nv = self.num_vertices();
        let mut a = IntMatrix::zeros(nv, nv);
        for e in &self.edges {
            a.add_to(e.u, e.v, e.w as i64);
            a.add_to(e.v, e.u, e.w as i64);
        }
        a
    }

    pub fn adjacency_f64(&self) -> faer::Mat<f64> {
        let nv = self.num_vertices();
        let mut a = faer::Mat::zeros(nv, nv);
        for e in &self.edges {
            a[(e.u, e.v)] += e.w as f64;
            a[(e.v, e.u)] += e.w as f64;
        }
        a
    }

    /// Per-vertex list of `(neighbor, weight)` with parallel edges kept.
    pub fn neighbor_lists(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.num_vertices()];
        for e in &self.edges {
            adj[e.u].push((e.v, e.w as f64));
            adj[e.v].push((e.u, e.w as f64));
        }
        adj
    }

    /// Signed `r×r` adjacency of one placed copy in atom-position order.
    pub fn copy_matrix(&self, atom_id: usize) -> faer::Mat<f64> {
        let r = self.r();
        let mut m = faer::Mat::zeros(r, r);
        for e in self.copy_edges(atom_id) {
            let (i, k) = self.local_positions(e);
            let w = self.edges[e].w as f64;
            m[(i, k)] = w;
            m[(k, i)] = w;
        }
        m
    }

    /// Same structure with all signs set to +1 (atom signs and negations removed).
    pub fn unsigned(&self) -> InstanceGraph {
        let mut out = self.clone();
        for e in &mut out.edges {
            e.w = 1;
        }
        out
    }
}

/// Variables whose radius-`2L` constraint-graph ball contains a cycle.
pub fn detect_bad_vertices(congraph: &ConstraintGraph, l: usize) -> Vec<usize> {
    (0..congraph.num_variables()).filter(|&v| congraph.ball_cycle_rank(v, 2 * l) > 0).collect()
}

/// True iff the radius-`4ℓ` ball around variable `v` holds at most one cycle.
pub fn tangle_free(congraph: &ConstraintGraph, v: usize, ell: usize) -> bool {
    congraph.ball_cycle_rank(v, 4 * ell) <= 1
}

/// Diagonal `D` with `D·A_ref·D = A_instance`, found along a BFS spanning
/// forest of the sign ratios (each tree root gets `+1`).
pub fn balanced_signing_diagonal(instance: &InstanceGraph, reference: &InstanceGraph) -> Result<Vec<i8>> {
    if instance.num_vertices() != reference.num_vertices() || instance.edges.len() != reference.edges.len() {
        return Err(Error::Invalid("instances have different underlying graphs".into()));
    }
    let mut ratios = Vec::with_capacity(instance.edges.len());
    for (a, b) in instance.edges.iter().zip(&reference.edges) {
        if (a.u, a.v, a.atom_id) != (b.u, b.v, b.atom_id) {
            return Err(Error::Invalid("instances have different underlying graphs".into()));
        }
        ratios.push((a.u, a.v, a.w * b.w));
    }
    signing_diagonal(instance.num_vertices(), &ratios)
}

/// Switching diagonal for a signing given as `(u, v, sign)` edges; fails
/// with the index of the first edge whose cycle product is −1.
pub fn signing_diagonal(num_vertices: usize, signing: &[(usize, usize, i8)]) -> Result<Vec<i8>> {
    let mut adj = vec![Vec::new(); num_vertices];
    for &(u, v, s) in signing {
        adj[u].push((v, s));
        adj[v].push((u, s));
    }
    let mut d = vec![0i8; num_vertices];
    for root in 0..num_vertices {
        if d[root] != 0 {
            continue;
        }
        d[root] = 1;
        let mut queue = VecDeque::from([root]);
        while let Some(x) = queue.pop_front() {
            for &(y, s) in &adj[x] {
                if d[y] == 0 {
                    d[y] = d[x] * s;
                    queue.push_back(y);
                }
            }
        }
    }
    for (k, &(u, v, s)) in signing.iter().enumerate() {
        if d[u] * d[v] != s {
            return Err(Error::NotBalanced(k));
        }
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atoms::{make_complete, make_single_edge, make_sort4};
    use crate::spectra::eig_symmetric;

    fn sort4s(c: usize) -> Vec<Atom> {
        vec![make_sort4(); c]
    }

    #[test]
    fn base_graph_shapes() {
        let g = base_constraint_graph(4, 3).unwrap();
        assert_eq!((g.r(), g.c(), g.n()), (4, 3, 1));
        assert!(g.perms().iter().all(|p| p == &vec![0]));
        // K_{2,2} is a 4-cycle.
        let k22 = base_constraint_graph(2, 2).unwrap();
        assert_eq!(k22.ball_cycle_rank(0, 10), 1);
        assert_eq!(base_constraint_graph(1, 3), Err(Error::InvalidArity(1)));
        assert_eq!(base_constraint_graph(3, 1), Err(Error::InvalidArity(1)));
    }

    #[test]
    fn single_edge_base_instance_is_c_regular_multigraph() {
        let g = base_constraint_graph(2, 3).unwrap();
        let inst = make_instance(&g, &vec![make_single_edge(); 3], NegationModel::none()).unwrap();
        assert_eq!(inst.num_vertices(), 2);
        assert_eq!(inst.edges().len(), 3);
        assert_eq!(inst.adjacency().get(0, 1), 3);
    }

    #[test]
    fn lift_biregularity_and_determinism() {
        let g = random_lift(4, 2, 3, 99).unwrap();
        assert_eq!(g.num_variables(), 12);
        assert_eq!(g.num_constraints(), 6);
        for v in 0..g.num_variables() {
            assert_eq!(g.node_neighbors(v).len(), 2);
        }
        let nv = g.num_variables();
        let mut hits = vec![0usize; nv];
        for f in 0..g.num_constraints() {
            let m = g.node_neighbors(nv + f);
            assert_eq!(m.len(), 4);
            for (i, &v) in m.iter().enumerate() {
                assert_eq!(v / 3, i, "one neighbor per variable group");
                hits[v] += 1;
            }
        }
        assert!(hits.iter().all(|&h| h == 2));
        assert_eq!(g, random_lift(4, 2, 3, 99).unwrap());
        assert_eq!(random_lift(4, 2, 1, 12345).unwrap(), base_constraint_graph(4, 2).unwrap());
    }

    #[test]
    fn sort4_base_instance_degrees() {
        let g = base_constraint_graph(4, 3).unwrap();
        let inst = make_instance(&g, &sort4s(3), NegationModel::none()).unwrap();
        assert_eq!(inst.num_vertices(), 4);
        let nl = inst.neighbor_lists();
        assert!(nl.iter().all(|l| l.len() == 6));
    }

    #[test]
    fn c4_illustration_instance() {
        // Two 4-cycle atoms on a 3-fold lift: structure only.
        #[rustfmt::skip]
        let c4 = Atom::unchecked_for_tests("c4", 4, vec![
            0, 1, 0, 1,
            1, 0, 1, 0,
            0, 1, 0, 1,
            1, 0, 1, 0,
        ]);
        let g = random_lift(4, 2, 3, 5).unwrap();
        let inst = assemble(&g, &[c4.clone(), c4], NegationModel::none());
        assert_eq!(inst.num_vertices(), 12);
        assert_eq!(inst.edges().len(), 2 * 3 * 4);
        for nl in inst.neighbor_lists() {
            assert_eq!(nl.len(), 4);
        }
    }

    #[test]
    fn constraint_negation_flips_whole_copies() {
        let g = random_lift(4, 2, 5, 1).unwrap();
        let base = make_instance(&g, &sort4s(2), NegationModel::none()).unwrap();
        let neg = make_instance(&g, &sort4s(2), NegationModel::constraint(8)).unwrap();
        let mut saw_flip = false;
        for f in 0..neg.num_copies() {
            let ratios: Vec<i8> = neg.copy_edges(f).map(|e| neg.edges()[e].w * base.edges()[e].w).collect();
            assert!(ratios.iter().all(|&s| s == ratios[0]));
            saw_flip |= ratios[0] == -1;
        }
        assert!(saw_flip);
    }

    #[test]
    fn constraint_negation_rejected_for_odd_cycles() {
        let g = random_lift(3, 3, 2, 1).unwrap();
        let k3 = vec![make_complete(3).unwrap(); 3];
        assert_eq!(
            make_instance(&g, &k3, NegationModel::constraint(1)),
            Err(Error::UnbalancedNegation("complete:3".into()))
        );
        assert!(make_instance(&g, &k3, NegationModel::variable(1)).is_ok());
    }

    #[test]
    fn mixed_atoms_rejected() {
        let g = base_constraint_graph(4, 2).unwrap();
        let k4 = make_complete(4).unwrap();
        assert_eq!(make_instance(&g, &[make_sort4(), k4], NegationModel::none()), Err(Error::MixedEigenvalues));
        let g3 = base_constraint_graph(3, 2).unwrap();
        assert!(matches!(
            make_instance(&g3, &sort4s(2), NegationModel::none()),
            Err(Error::ArityMismatch { expected: 3, got: 4 })
        ));
    }

    #[test]
    fn copies_keep_atom_spectrum() {
        for (atoms, model) in [
            (sort4s(3), NegationModel::constraint(3)),
            (sort4s(3), NegationModel::variable(3)),
            (vec![make_complete(3).unwrap(); 3], NegationModel::variable(4)),
        ] {
            let g = random_lift(atoms[0].r(), atoms.len(), 4, 17).unwrap();
            let inst = make_instance(&g, &atoms, model).unwrap();
            let want = eig_symmetric(&atoms[0].adjacency()).unwrap();
            for f in 0..inst.num_copies() {
                let got = eig_symmetric(&inst.copy_matrix(f)).unwrap();
                for (a, b) in got.iter().zip(&want) {
                    assert!((a - b).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn instance_json_round_trip() {
        let inst = random_instance(&sort4s(2), 3, 42, NegationModel::variable(42)).unwrap();
        let text = serde_json::to_string(&inst).unwrap();
        let back: InstanceGraph = serde_json::from_str(&text).unwrap();
        assert_eq!(back, inst);
        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v["edges"][0]["w"] = serde_json::json!(-v["edges"][0]["w"].as_i64().unwrap());
        assert!(serde_json::from_value::<InstanceGraph>(v).is_err());
        let chsh = single_atom_instance(&make_sort4());
        let back: InstanceGraph = serde_json::from_str(&serde_json::to_string(&chsh).unwrap()).unwrap();
        assert_eq!(back, chsh);
    }

    #[test]
    fn bad_vertices() {
        let k22 = base_constraint_graph(2, 2).unwrap();
        assert_eq!(detect_bad_vertices(&k22, 1), vec![0, 1]);
        let g = random_lift(4, 2, 6, 2).unwrap();
        assert!(detect_bad_vertices(&g, 0).is_empty());
    }

    /// Girth of the bipartite constraint graph by BFS from every node.
    fn girth(g: &ConstraintGraph) -> usize {
        let mut best = usize::MAX;
        for s in 0..g.node_count() {
            let mut dist = vec![usize::MAX; g.node_count()];
            let mut parent = vec![usize::MAX; g.node_count()];
            dist[s] = 0;
            let mut q = VecDeque::from([s]);
            while let Some(x) = q.pop_front() {
                for y in g.node_neighbors(x) {
                    if dist[y] == usize::MAX {
                        dist[y] = dist[x] + 1;
                        parent[y] = x;
                        q.push_back(y);
                    } else if parent[x] != y {
                        best = best.min(dist[x] + dist[y] + 1);
                    }
                }
            }
        }
        best
    }

    #[test]
    fn large_girth_lift_has_no_bad_vertices() {
        // Seed search for a single-edge 2-lift-of-K_{2,3} family member with girth > 4.
        let l = 1;
        let found = (0..200u64)
            .map(|s| random_lift(2, 3, 12, s).unwrap())
            .find(|g| girth(g) > 4 * l)
            .expect("some seed has girth > 4");
        assert!(detect_bad_vertices(&found, l).is_empty());
        // And a lift with a short cycle flags the vertices on it.
        let short = (0..200u64).map(|s| random_lift(2, 3, 12, s).unwrap()).find(|g| girth(g) <= 4).unwrap();
        assert!(!detect_bad_vertices(&short, l).is_empty());
    }

    #[test]
    fn tangles() {
        let k33 = base_constraint_graph(3, 3).unwrap();
        assert!(!tangle_free(&k33, 0, 1));
        let k22 = base_constraint_graph(2, 2).unwrap();
        assert!(tangle_free(&k22, 0, 1));
        let g = random_lift(2, 2, 30, 4).unwrap();
        // (2,2)-biregular lifts are disjoint cycles: at most one cycle per ball.
        assert!((0..g.num_variables()).all(|v| tangle_free(&g, v, 3)));
        assert!(tangle_free(&random_lift(3, 3, 50, 1).unwrap(), 0, 0));
    }

    #[test]
    fn switching_diagonal() {
        let g = random_lift(4, 2, 4, 3).unwrap();
        let a = make_instance(&g, &sort4s(2), NegationModel::none()).unwrap();
        assert_eq!(balanced_signing_diagonal(&a, &a).unwrap(), vec![1; a.num_vertices()]);

        // Flip every edge at vertex 5.
        let mut b = a.clone();
        for e in &mut b.edges {
            if e.u == 5 || e.v == 5 {
                e.w = -e.w;
            }
        }
        let d = balanced_signing_diagonal(&b, &a).unwrap();
        let flipped: Vec<usize> = d.iter().enumerate().filter(|(_, &s)| s == -1).map(|(i, _)| i).collect();
        let comp_pos: Vec<usize> = d.iter().enumerate().filter(|(_, &s)| s == 1).map(|(i, _)| i).collect();
        // D is unique up to a global sign per component.
        assert!(flipped == vec![5] || comp_pos == vec![5]);

        // One odd flip on a cycle is not balanced.
        let mut c = a.clone();
        c.edges[0].w = -c.edges[0].w;
        assert!(matches!(balanced_signing_diagonal(&c, &a), Err(Error::NotBalanced(_))));
    }

    /// Every simple cycle of a small graph, as edge-index lists.
    fn simple_cycles(nv: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
        fn dfs(start: usize, at: usize, edges: &[(usize, usize)], used_v: &mut Vec<bool>, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            for (k, &(a, b)) in edges.iter().enumerate() {
                let next = if a == at { b } else if b == at { a } else { continue };
                if path.contains(&k) {
                    continue;
                }
                if next == start && path.len() >= 2 {
                    out.push(path.iter().copied().chain([k]).collect());
                } else if next > start && !used_v[next] {
                    used_v[next] = true;
                    path.push(k);
                    dfs(start, next, edges, used_v, path, out);
                    path.pop();
                    used_v[next] = false;
                }
            }
        }
        let mut out = Vec::new();
        for s in 0..nv {
            let mut used = vec![false; nv];
            used[s] = true;
            dfs(s, s, edges, &mut used, &mut Vec::new(), &mut out);
        }
        out
    }

    #[test]
    fn per_copy_switching_agrees_with_cycle_enumeration() {
        for (atoms, model) in [
            (sort4s(2), NegationModel::constraint(21)),
            (sort4s(2), NegationModel::variable(21)),
            (vec![make_complete(3).unwrap(); 3], NegationModel::variable(5)),
            (vec![make_complete(4).unwrap(); 2], NegationModel::variable(6)),
        ] {
            let g = random_lift(atoms[0].r(), atoms.len(), 3, 9).unwrap();
            let base = make_instance(&g, &atoms, NegationModel::none()).unwrap();
            let inst = make_instance(&g, &atoms, model).unwrap();
            for f in 0..inst.num_copies() {
                let idx: Vec<usize> = inst.copy_edges(f).collect();
                let local: Vec<(usize, usize)> = idx.iter().map(|&e| inst.local_positions(e)).collect();
                let signs: Vec<i8> = idx.iter().map(|&e| inst.edges()[e].w * base.edges()[e].w).collect();
                let brute_balanced = simple_cycles(inst.r(), &local)
                    .iter()
                    .all(|cyc| cyc.iter().map(|&k| signs[k]).product::<i8>() == 1);
                let signing: Vec<(usize, usize, i8)> =
                    local.iter().zip(&signs).map(|(&(i, k), &s)| (i, k, s)).collect();
                let d = signing_diagonal(inst.r(), &signing);
                assert_eq!(brute_balanced, d.is_ok());
                assert!(brute_balanced);
            }
        }
        // Whole-copy negation of a triangle is caught by both routes.
        let tri = [(0, 1), (1, 2), (0, 2)];
        assert_eq!(simple_cycles(3, &tri).len(), 2);
        assert!(signing_diagonal(3, &[(0, 1, -1), (1, 2, -1), (0, 2, -1)]).is_err());
    }
}
