//! Two-eigenvalue atoms: small ±1-signed graphs whose adjacency matrix has
//! exactly two distinct eigenvalues `λ₁ > 0 > λ₂`.
//!
//! Such a matrix satisfies `A² = (λ₁+λ₂)A − λ₁λ₂·I`, so every column has
//! squared norm `−λ₁λ₂` and two-step walks between distinct vertices sum to
//! `(λ₁+λ₂)A[u,v]`. The rest of the crate leans on these identities.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectra;

/// Largest supported atom arity (Forrelation with k = 8).
pub const MAX_ARITY: usize = 512;

/// Relative tolerance for eigenvalue clustering and identity checks.
pub const EIGEN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AtomRecord", into = "AtomRecord")]
pub struct Atom {
    name: String,
    r: usize,
    weights: Vec<i8>,
    lambda1: f64,
    lambda2: f64,
}

/// Wire form of an [`Atom`]; deserialization re-validates the spectrum.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct AtomRecord {
    name: String,
    r: usize,
    weights: Vec<i8>,
    lambda1: f64,
    lambda2: f64,
}

impl TryFrom<AtomRecord> for Atom {
    type Error = Error;

    fn try_from(rec: AtomRecord) -> Result<Self> {
        let atom = Atom::new(rec.name, rec.r, rec.weights)?;
        let scale = atom.lambda1.abs().max(atom.lambda2.abs()).max(1.0);
        if (atom.lambda1 - rec.lambda1).abs() > EIGEN_TOL * scale || (atom.lambda2 - rec.lambda2).abs() > EIGEN_TOL * scale {
            return Err(Error::InvalidAtom(format!(
                "stored eigenvalues ({}, {}) disagree with computed ({}, {})",
                rec.lambda1, rec.lambda2, atom.lambda1, atom.lambda2
            )));
        }
        // Keep the stored values; library atoms carry exact closed forms.
        Ok(Atom { lambda1: rec.lambda1, lambda2: rec.lambda2, ..atom })
    }
}

impl From<Atom> for AtomRecord {
    fn from(a: Atom) -> Self {
        AtomRecord { name: a.name, r: a.r, weights: a.weights, lambda1: a.lambda1, lambda2: a.lambda2 }
    }
}

/// Derived constants of `c` atoms sharing `(λ₁, λ₂)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoEigenvalueProfile {
    pub c: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    /// Growth rate `(c−1)(−λ₁λ₂)`.
    pub gr: f64,
    /// Band half-width `2√gr`.
    pub r_x: f64,
    /// Vertex degree of the additive product, `c(−λ₁λ₂)`.
    pub d_x: f64,
    pub band: (f64, f64),
}

impl TwoEigenvalueProfile {
    pub fn new(lambda1: f64, lambda2: f64, c: usize) -> Result<Self> {
        if c < 2 {
            return Err(Error::InvalidArity(c));
        }
        let neg_prod = -lambda1 * lambda2;
        let gr = (c as f64 - 1.0) * neg_prod;
        if gr <= 0.0 {
            return Err(Error::OutOfModel(format!("growth rate {gr} is not positive")));
        }
        let r_x = 2.0 * gr.sqrt();
        let center = lambda1 + lambda2;
        Ok(Self { c, lambda1, lambda2, gr, r_x, d_x: c as f64 * neg_prod, band: (center - r_x, center + r_x) })
    }

    pub fn center(&self) -> f64 {
        self.lambda1 + self.lambda2
    }
}

impl Atom {
    /// Builds an atom from a row-major `r×r` weight array, computing and
    /// validating its eigenvalue pair.
    pub fn new(name: impl Into<String>, r: usize, weights: Vec<i8>) -> Result<Self> {
        check_shape(r, &weights)?;
        let (lambda1, lambda2) = validate_two_eigenvalue(r, &weights, EIGEN_TOL)?;
        Ok(Self { name: name.into(), r, weights, lambda1, lambda2 })
    }

    /// Same as [`Atom::new`] but replaces the computed eigenvalues by known
    /// closed forms after checking they agree.
    fn with_exact(name: &str, r: usize, weights: Vec<i8>, lambda1: f64, lambda2: f64) -> Result<Self> {
        let mut atom = Self::new(name, r, weights)?;
        let scale = lambda1.abs().max(lambda2.abs()).max(1.0);
        assert!(
            (atom.lambda1 - lambda1).abs() <= 1e-9 * scale && (atom.lambda2 - lambda2).abs() <= 1e-9 * scale,
            "closed-form eigenvalues disagree for {name}"
        );
        atom.lambda1 = lambda1;
        atom.lambda2 = lambda2;
        Ok(atom)
    }

    /// Structure-only atom that skips spectral validation. Only for
    /// reproducing illustrations built on atoms outside the model.
    #[cfg(test)]
    pub(crate) fn unchecked_for_tests(name: &str, r: usize, weights: Vec<i8>) -> Self {
        check_shape(r, &weights).expect("bad shape");
        Self { name: name.into(), r, weights, lambda1: f64::NAN, lambda2: f64::NAN }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    pub fn lambda2(&self) -> f64 {
        self.lambda2
    }

    pub fn weights(&self) -> &[i8] {
        &self.weights
    }

    pub fn weight(&self, i: usize, j: usize) -> i8 {
        self.weights[i * self.r + j]
    }

    /// Number of nonzero entries per row; `−λ₁λ₂` for ±1 atoms.
    pub fn degree(&self, i: usize) -> usize {
        (0..self.r).filter(|&j| self.weight(i, j) != 0).count()
    }

    pub fn edge_count(&self) -> usize {
        self.weights.iter().filter(|&&w| w != 0).count() / 2
    }

    pub fn adjacency(&self) -> Mat<f64> {
        Mat::from_fn(self.r, self.r, |i, j| self.weight(i, j) as f64)
    }

    pub fn profile(&self, c: usize) -> Result<TwoEigenvalueProfile> {
        TwoEigenvalueProfile::new(self.lambda1, self.lambda2, c)
    }

    /// `λ₁+λ₂` when it is an integer (within tolerance).
    pub fn exact_sum(&self) -> Option<i64> {
        as_integer(self.lambda1 + self.lambda2)
    }

    /// `λ₁λ₂` when it is an integer (within tolerance).
    pub fn exact_product(&self) -> Option<i64> {
        as_integer(self.lambda1 * self.lambda2)
    }

    /// True when the support graph is bipartite.
    pub fn is_bipartite(&self) -> bool {
        let mut side = vec![None::<bool>; self.r];
        for start in 0..self.r {
            if side[start].is_some() {
                continue;
            }
            side[start] = Some(false);
            let mut stack = vec![start];
            while let Some(u) = stack.pop() {
                let su = side[u].unwrap();
                for v in (0..self.r).filter(|&v| self.weight(u, v) != 0) {
                    match side[v] {
                        None => {
                            side[v] = Some(!su);
                            stack.push(v);
                        }
                        Some(sv) if sv == su => return false,
                        _ => {}
                    }
                }
            }
        }
        true
    }

    /// One side of a 2-coloring of the support (true = second side).
    /// Only meaningful for bipartite atoms.
    pub fn bipartition(&self) -> Vec<bool> {
        let mut side = vec![None::<bool>; self.r];
        for start in 0..self.r {
            if side[start].is_some() {
                continue;
            }
            side[start] = Some(false);
            let mut stack = vec![start];
            while let Some(u) = stack.pop() {
                for v in 0..self.r {
                    if self.weight(u, v) != 0 && side[v].is_none() {
                        side[v] = Some(!side[u].unwrap());
                        stack.push(v);
                    }
                }
            }
        }
        side.into_iter().map(|s| s.unwrap_or(false)).collect()
    }

    /// Sorted multiset of sorted rows; invariant under vertex relabeling.
    pub fn row_patterns(&self) -> Vec<Vec<i8>> {
        let mut rows: Vec<Vec<i8>> = self
            .weights
            .chunks(self.r)
            .map(|row| {
                let mut r = row.to_vec();
                r.sort_unstable();
                r
            })
            .collect();
        rows.sort();
        rows
    }

    /// Parses one token of the CLI atom grammar:
    /// `edge`, `complete:R`, `sort4`, `forrelation:K`.
    pub fn from_token(token: &str) -> Result<Self> {
        let token = token.trim();
        let (head, arg) = match token.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (token, None),
        };
        let parse = |a: Option<&str>| -> Result<usize> {
            a.ok_or_else(|| Error::Invalid(format!("`{head}` needs an argument")))?
                .parse()
                .map_err(|_| Error::Invalid(format!("bad argument in `{token}`")))
        };
        match head {
            "edge" => Ok(make_single_edge()),
            "sort4" | "chsh" => Ok(make_sort4()),
            "complete" => make_complete(parse(arg)?),
            "forrelation" => make_forrelation(parse(arg)? as u32),
            _ => Err(Error::Invalid(format!("unknown atom `{token}`"))),
        }
    }
}

fn as_integer(x: f64) -> Option<i64> {
    let r = x.round();
    ((x - r).abs() <= 1e-9 * x.abs().max(1.0)).then_some(r as i64)
}

fn check_shape(r: usize, weights: &[i8]) -> Result<()> {
    if r < 2 {
        return Err(Error::InvalidArity(r));
    }
    if r > MAX_ARITY {
        return Err(Error::ArityTooLarge(r, MAX_ARITY));
    }
    if weights.len() != r * r {
        return Err(Error::InvalidAtom(format!("expected {} weights, got {}", r * r, weights.len())));
    }
    for i in 0..r {
        if weights[i * r + i] != 0 {
            return Err(Error::InvalidAtom(format!("nonzero diagonal at {i}")));
        }
        for j in 0..r {
            let w = weights[i * r + j];
            if !(-1..=1).contains(&w) {
                return Err(Error::InvalidAtom(format!("weight {w} outside {{-1,0,1}}")));
            }
            if w != weights[j * r + i] {
                return Err(Error::NotSymmetric(1.0));
            }
        }
    }
    Ok(())
}

/// Checks that a symmetric zero-diagonal ±1/0 matrix has exactly two
/// eigenvalues and returns them as `(λ₁, λ₂)` with `λ₁ > 0 > λ₂`.
///
/// Clusters the sorted spectrum with gaps above `tol · max(1, max|λ|)`, then
/// cross-checks the minimal polynomial and the two square identities.
pub fn validate_two_eigenvalue(r: usize, weights: &[i8], tol: f64) -> Result<(f64, f64)> {
    check_shape(r, weights)?;
    let a = Mat::from_fn(r, r, |i, j| weights[i * r + j] as f64);
    let eig = spectra::eig_symmetric(&a)?;
    let scale = eig.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let gap = tol * scale;

    let mut clusters: Vec<Vec<f64>> = vec![vec![eig[0]]];
    for w in eig.windows(2) {
        if w[1] - w[0] > gap {
            clusters.push(Vec::new());
        }
        clusters.last_mut().unwrap().push(w[1]);
    }
    match clusters.len() {
        1 => return Err(Error::Degenerate),
        2 => {}
        k => return Err(Error::NotTwoEigenvalue(k)),
    }
    let mean = |c: &[f64]| c.iter().sum::<f64>() / c.len() as f64;
    let (l2, l1) = (mean(&clusters[0]), mean(&clusters[1]));
    if !(l1 > 0.0 && l2 < 0.0) {
        return Err(Error::InvalidAtom(format!("eigenvalues ({l1}, {l2}) do not straddle zero")));
    }

    // A² = (λ₁+λ₂)A − λ₁λ₂·I, entrywise. Covers the minimal polynomial,
    // the diagonal-square and the off-diagonal-square identities.
    let check_tol = tol * scale * scale;
    for u in 0..r {
        for v in 0..r {
            let sq: f64 = (0..r).map(|w| a[(u, w)] * a[(w, v)]).sum();
            let expect = if u == v { -l1 * l2 } else { (l1 + l2) * a[(u, v)] };
            if (sq - expect).abs() > check_tol {
                return Err(Error::InvalidAtom(format!(
                    "A²[{u},{v}] = {sq} but the two-eigenvalue identity requires {expect}"
                )));
            }
        }
    }
    Ok((l1, l2))
}

/// One positive edge on two vertices.
pub fn make_single_edge() -> Atom {
    Atom::with_exact("edge", 2, vec![0, 1, 1, 0], 1.0, -1.0).expect("single edge is valid")
}

/// Complete graph `K_r` with all weights +1; eigenvalues `r−1` and `−1`.
pub fn make_complete(r: usize) -> Result<Atom> {
    if r < 2 {
        return Err(Error::InvalidArity(r));
    }
    if r > MAX_ARITY {
        return Err(Error::ArityTooLarge(r, MAX_ARITY));
    }
    let weights = (0..r * r).map(|k| if k / r == k % r { 0 } else { 1 }).collect();
    let name = if r == 2 { "edge".to_string() } else { format!("complete:{r}") };
    Atom::with_exact(&name, r, weights, r as f64 - 1.0, -1.0)
}

/// The signed 4-cycle of the SORT₄/CHSH constraint; eigenvalues `±√2`.
pub fn make_sort4() -> Atom {
    #[rustfmt::skip]
    let weights = vec![
        0, 0, 1, 1,
        0, 0, 1, -1,
        1, 1, 0, 0,
        1, -1, 0, 0,
    ];
    Atom::with_exact("sort4", 4, weights, 2f64.sqrt(), -(2f64.sqrt())).expect("sort4 is valid")
}

/// Bipartite atom on `2·2^k` vertices whose off-diagonal block is the
/// Walsh-Hadamard matrix `H_k`; eigenvalues `±2^{k/2}`.
pub fn make_forrelation(k: u32) -> Result<Atom> {
    if k > 8 {
        return Err(Error::ArityTooLarge(2usize.saturating_pow(k + 1), MAX_ARITY));
    }
    let half = 1usize << k;
    let r = 2 * half;
    let mut weights = vec![0i8; r * r];
    for x in 0..half {
        for y in 0..half {
            let h = if (x & y).count_ones() % 2 == 0 { 1 } else { -1 };
            weights[x * r + half + y] = h;
            weights[(half + y) * r + x] = h;
        }
    }
    let lam = 2f64.powf(k as f64 / 2.0);
    Atom::with_exact(&format!("forrelation:{k}"), r, weights, lam, -lam)
}

/// Parses a comma-separated atom list, e.g. `sort4,sort4` or `complete:3,complete:3,complete:3`.
pub fn parse_atom_list(spec: &str) -> Result<Vec<Atom>> {
    spec.split(',').filter(|t| !t.trim().is_empty()).map(Atom::from_token).collect()
}
