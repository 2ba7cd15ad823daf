//! Finite balls of the additive product (the instance graph of the infinite
//! biregular constraint tree) and the geometric witness vectors living on
//! them.

use serde::{Deserialize, Serialize};

use crate::atoms::Atom;
use crate::error::{Error, Result};

pub const MAX_BALL_VERTICES: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BallVertex {
    /// Number of atom hops from the root.
    pub depth: usize,
    /// Position inside every atom copy the vertex belongs to.
    pub position: usize,
    pub parent: Option<usize>,
    pub parent_copy: Option<usize>,
    /// Product of atom weights along the unique hop path from the root.
    pub product: i64,
    /// All `c` atom copies at this vertex are materialized.
    pub expanded: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BallCopy {
    pub group: usize,
    pub owner: usize,
    /// Vertex ids by atom position.
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BallEdge {
    pub u: usize,
    pub v: usize,
    pub w: i8,
    pub copy: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BallOptions {
    pub root_position: usize,
    /// Do not expand vertices whose path product is zero. Everything below
    /// such a vertex has product zero as well.
    pub prune_zero: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductBall {
    pub atoms: Vec<Atom>,
    pub c: usize,
    pub radius: usize,
    pub pruned: bool,
    pub vertices: Vec<BallVertex>,
    pub copies: Vec<BallCopy>,
    pub edges: Vec<BallEdge>,
}

/// Vertex count of an unpruned ball.
pub fn full_ball_size(r: usize, c: usize, radius: usize) -> u128 {
    let (r, c) = (r as u128, c as u128);
    let branch = (c - 1) * (r - 1);
    let mut total: u128 = 1;
    let mut layer: u128 = c * (r - 1);
    for _ in 0..radius {
        total = total.saturating_add(layer);
        layer = layer.saturating_mul(branch);
    }
    total
}

pub fn build_product_ball(atoms: &[Atom], c: usize, radius: usize) -> Result<ProductBall> {
    build_product_ball_with(atoms, c, radius, BallOptions::default())
}

/// Breadth-first materialization of the radius-`radius` ball. `atoms` holds
/// either one atom per group or a single atom used for all `c` groups.
pub fn build_product_ball_with(atoms: &[Atom], c: usize, radius: usize, opts: BallOptions) -> Result<ProductBall> {
    if c < 2 {
        return Err(Error::InvalidArity(c));
    }
    let atoms: Vec<Atom> = match atoms.len() {
        1 => vec![atoms[0].clone(); c],
        k if k == c => atoms.to_vec(),
        k => return Err(Error::Invalid(format!("{k} atoms for {c} groups"))),
    };
    let r = atoms[0].r();
    if let Some(a) = atoms.iter().find(|a| a.r() != r) {
        return Err(Error::ArityMismatch { expected: r, got: a.r() });
    }
    if opts.root_position >= r {
        return Err(Error::Invalid(format!("root position {} out of range", opts.root_position)));
    }
    let predicted = full_ball_size(r, c, radius);
    if !opts.prune_zero && predicted > MAX_BALL_VERTICES as u128 {
        return Err(Error::BallTooLarge(predicted.min(usize::MAX as u128) as usize));
    }

    let mut vertices = vec![BallVertex {
        depth: 0,
        position: opts.root_position,
        parent: None,
        parent_copy: None,
        product: 1,
        expanded: false,
    }];
    let mut copies = Vec::new();
    let mut edges = Vec::new();
    let mut head = 0;
    while head < vertices.len() {
        let u = head;
        head += 1;
        let vu = vertices[u];
        if vu.depth == radius || (opts.prune_zero && vu.product == 0) {
            continue;
        }
        vertices[u].expanded = true;
        for (j, atom) in atoms.iter().enumerate() {
            if vu.parent_copy.map(|p| copies_group(&copies, p)) == Some(j) {
                continue;
            }
            let copy = copies.len();
            let mut members = Vec::with_capacity(r);
            for pos in 0..r {
                if pos == vu.position {
                    members.push(u);
                    continue;
                }
                if vertices.len() >= MAX_BALL_VERTICES {
                    return Err(Error::BallTooLarge(vertices.len() + 1));
                }
                members.push(vertices.len());
                vertices.push(BallVertex {
                    depth: vu.depth + 1,
                    position: pos,
                    parent: Some(u),
                    parent_copy: Some(copy),
                    product: vu.product * atom.weight(vu.position, pos) as i64,
                    expanded: false,
                });
            }
            for a in 0..r {
                for b in (a + 1)..r {
                    let w = atom.weight(a, b);
                    if w != 0 {
                        edges.push(BallEdge { u: members[a], v: members[b], w, copy });
                    }
                }
            }
            copies.push(BallCopy { group: j, owner: u, members });
        }
    }
    Ok(ProductBall { atoms, c, radius, pruned: opts.prune_zero, vertices, copies, edges })
}

fn copies_group(copies: &[BallCopy], id: usize) -> usize {
    copies[id].group
}

impl ProductBall {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn neg_product(&self) -> f64 {
        -self.atoms[0].lambda1() * self.atoms[0].lambda2()
    }

    pub fn growth(&self) -> f64 {
        (self.c as f64 - 1.0) * self.neg_product()
    }

    /// Count of nonzero edges at each vertex.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.len()];
        for e in &self.edges {
            deg[e.u] += 1;
            deg[e.v] += 1;
        }
        deg
    }

    /// Vertices whose atom copies are all present.
    pub fn interior(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&u| self.vertices[u].expanded)
    }

    /// Dense adjacency restricted to `keep` (in the given order).
    pub fn restricted_adjacency(&self, keep: &[usize]) -> faer::Mat<f64> {
        let mut index = vec![usize::MAX; self.len()];
        for (k, &u) in keep.iter().enumerate() {
            index[u] = k;
        }
        let mut m = faer::Mat::zeros(keep.len(), keep.len());
        for e in &self.edges {
            let (a, b) = (index[e.u], index[e.v]);
            if a != usize::MAX && b != usize::MAX {
                m[(a, b)] += e.w as f64;
                m[(b, a)] += e.w as f64;
            }
        }
        m
    }
}

/// `(Σ_{depth t} product², c(c−1)^{t−1}(−λ₁λ₂)^t)` in exact integers.
pub fn growth_rate_check(ball: &ProductBall, t: usize) -> Result<(i128, i128)> {
    if t == 0 || t > ball.radius {
        return Err(Error::Invalid(format!("growth law is stated for 1 ≤ t ≤ {}", ball.radius)));
    }
    let neg_prod = -ball.atoms[0].exact_product().ok_or(Error::NonIntegral)? as i128;
    let lhs = ball
        .vertices
        .iter()
        .filter(|v| v.depth == t)
        .map(|v| (v.product as i128) * (v.product as i128))
        .sum();
    let c = ball.c as i128;
    let rhs = c * (c - 1).pow(t as u32 - 1) * neg_prod.pow(t as u32);
    Ok((lhs, rhs))
}

/// Interior vertices whose degree differs from `c(−λ₁λ₂)`.
pub fn degree_law_violations(ball: &ProductBall) -> Result<Vec<usize>> {
    let neg_prod = -ball.atoms[0].exact_product().ok_or(Error::NonIntegral)?;
    let want = ball.c * neg_prod as usize;
    let deg = ball.degrees();
    Ok(ball.interior().filter(|&u| deg[u] != want).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WitnessConfig {
    pub s: i8,
    pub delta: f64,
    pub l: usize,
}

impl WitnessConfig {
    pub fn new(s: i8, delta: f64, l: usize) -> Result<Self> {
        if s != 1 && s != -1 {
            return Err(Error::Invalid(format!("sign must be ±1, got {s}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Invalid(format!("delta must lie in (0, 1), got {delta}")));
        }
        Ok(Self { s, delta, l })
    }

    /// Decay per hop, `s(1−δ)/√gr`.
    pub fn rho(&self, gr: f64) -> f64 {
        self.s as f64 * (1.0 - self.delta) / gr.sqrt()
    }
}

/// `f(u) = ρ^{depth(u)}·product(u)` on the whole ball.
pub fn witness_vector(ball: &ProductBall, config: &WitnessConfig) -> Vec<f64> {
    let rho = config.rho(ball.growth());
    let mut powers = vec![1.0; ball.radius + 1];
    for t in 1..=ball.radius {
        powers[t] = powers[t - 1] * rho;
    }
    ball.vertices.iter().map(|v| powers[v.depth] * v.product as f64).collect()
}

pub fn norm_squared(f: &[f64]) -> f64 {
    f.iter().map(|x| x * x).sum()
}

/// `⟨f, A f⟩ / ⟨f, f⟩` with the ball adjacency.
pub fn rayleigh_quotient(ball: &ProductBall, f: &[f64]) -> Result<f64> {
    if let Some(v) = f.iter().zip(&ball.vertices).find(|(x, v)| **x != 0.0 && v.depth >= ball.radius) {
        return Err(Error::SupportTouchesBoundary { depth: v.1.depth, radius: ball.radius });
    }
    let nn = norm_squared(f);
    if nn == 0.0 {
        return Err(Error::ZeroVector);
    }
    let quad: f64 = ball.edges.iter().map(|e| 2.0 * e.w as f64 * f[e.u] * f[e.v]).sum();
    Ok(quad / nn)
}

/// Zeroes entries deeper than `l` and rescales to unit norm.
pub fn truncate_normalize(ball: &ProductBall, f: &[f64], l: usize) -> Result<Vec<f64>> {
    let mut g: Vec<f64> = f.iter().zip(&ball.vertices).map(|(&x, v)| if v.depth <= l { x } else { 0.0 }).collect();
    let n = norm_squared(&g).sqrt();
    if n == 0.0 {
        return Err(Error::ZeroVector);
    }
    g.iter_mut().for_each(|x| *x /= n);
    Ok(g)
}

/// `c/((c−1)δ(2−δ))`: the depth sum of squared entries with the growth
/// formula applied at every depth including the root.
pub fn norm_squared_closed_form(c: usize, delta: f64) -> f64 {
    let c = c as f64;
    c / ((c - 1.0) * delta * (2.0 - delta))
}

/// Exact squared norm of the untruncated vector: the root contributes 1
/// and depth `t ≥ 1` contributes `c/(c−1)·(1−δ)^{2t}`.
pub fn norm_squared_exact(c: usize, delta: f64) -> f64 {
    let q = (1.0 - delta) * (1.0 - delta);
    1.0 + c as f64 / (c as f64 - 1.0) * q / (1.0 - q)
}

/// Squared norm of the untruncated vector beyond depth `l`.
pub fn tail_norm_squared(c: usize, delta: f64, l: usize) -> f64 {
    let q = (1.0 - delta) * (1.0 - delta);
    c as f64 / (c as f64 - 1.0) * q.powi(l as i32 + 1) / (1.0 - q)
}

/// Fraction of the squared norm of `f/‖f‖` beyond depth `l`.
pub fn tail_mass(c: usize, delta: f64, l: usize) -> f64 {
    tail_norm_squared(c, delta, l) / norm_squared_exact(c, delta)
}

/// Smallest `L` with `((1−δ)²)^L ≤ ε`.
pub fn truncation_radius(eps: f64, delta: f64) -> usize {
    (eps.ln() / (2.0 * (1.0 - delta).ln())).ceil().max(0.0) as usize
}

/// Rayleigh quotient of the untruncated witness on the infinite product:
/// `c(−λ₁λ₂)ρ/N + (1 − 1/N)((1+(1−δ)²)/ρ + λ₁+λ₂)` with `N = ‖f‖²`.
pub fn infinite_rayleigh(lambda1: f64, lambda2: f64, c: usize, delta: f64, s: i8) -> f64 {
    let neg_prod = -lambda1 * lambda2;
    let gr = (c as f64 - 1.0) * neg_prod;
    let rho = s as f64 * (1.0 - delta) / gr.sqrt();
    let n = norm_squared_exact(c, delta);
    let q = (1.0 - delta) * (1.0 - delta);
    c as f64 * neg_prod * rho / n + (1.0 - 1.0 / n) * ((1.0 + q) / rho + lambda1 + lambda2)
}

/// Excess of the spectrum of `m` over the band `[lo, hi]`.
pub fn band_excess(eigs: &[f64], lo: f64, hi: f64) -> f64 {
    eigs.iter().map(|&x| (x - hi).max(lo - x).max(0.0)).fold(0.0, f64::max)
}

/// Band excess `η(R)` of the interior-restricted adjacency of a full ball.
pub fn finite_section_excess(ball: &ProductBall) -> Result<f64> {
    let keep: Vec<usize> = (0..ball.len()).filter(|&u| ball.vertices[u].depth < ball.radius).collect();
    let m = ball.restricted_adjacency(&keep);
    let eigs = crate::spectra::eig_symmetric(&m)?;
    let center = ball.atoms[0].lambda1() + ball.atoms[0].lambda2();
    let half = 2.0 * ball.growth().sqrt();
    Ok(band_excess(&eigs, center - half, center + half))
}
