//! Eigensolver layer shared by the spectral checks.
//!
//! Dense decompositions are delegated to `faer` (Householder tridiagonal /
//! Hessenberg reduction followed by implicit QR). Dimensions above
//! [`DENSE_LIMIT`] only get a spectral-radius estimate.

use faer::{c64, Mat, Side};

use crate::error::{Error, Result};
use crate::matrix::CsrMatrix;

/// Largest dimension for which a full dense decomposition is attempted.
pub const DENSE_LIMIT: usize = 6000;

const SYMMETRY_TOL: f64 = 1e-12;

fn max_abs(m: &Mat<f64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            best = best.max(m[(i, j)].abs());
        }
    }
    best
}

fn asymmetry(m: &Mat<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in (j + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub fn is_symmetric(m: &Mat<f64>) -> bool {
    m.nrows() == m.ncols() && asymmetry(m) <= SYMMETRY_TOL * max_abs(m).max(1.0)
}

/// Full real spectrum of a symmetric matrix, ascending.
pub fn eig_symmetric(a: &Mat<f64>) -> Result<Vec<f64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::Invalid(format!("matrix is {}x{}", a.nrows(), a.ncols())));
    }
    if a.nrows() > DENSE_LIMIT {
        return Err(Error::TooLarge(a.nrows()));
    }
    if !is_symmetric(a) {
        return Err(Error::NotSymmetric(asymmetry(a)));
    }
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let mut vals = a
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::NoConvergence(format!("{e:?}")))?;
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// Full complex spectrum of a general square matrix, in solver order.
pub fn eig_general(b: &Mat<f64>) -> Result<Vec<c64>> {
    if b.nrows() != b.ncols() {
        return Err(Error::Invalid(format!("matrix is {}x{}", b.nrows(), b.ncols())));
    }
    if b.nrows() > DENSE_LIMIT {
        return Err(Error::TooLarge(b.nrows()));
    }
    if b.nrows() == 0 {
        return Ok(Vec::new());
    }
    b.eigenvalues().map_err(|e| Error::NoConvergence(format!("{e:?}")))
}

/// Largest residual `‖Mv − λv‖ / (‖M‖ + |λ|)` over up to `samples` eigenpairs
/// spread evenly through the decomposition.
pub fn residual_spot_check(m: &Mat<f64>, samples: usize) -> Result<f64> {
    let n = m.nrows();
    if n == 0 {
        return Ok(0.0);
    }
    let norm = frobenius(m);
    let step = (n / samples.max(1)).max(1);
    let mut worst = 0.0f64;
    if is_symmetric(m) {
        let evd = m
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::NoConvergence(format!("{e:?}")))?;
        let (u, s) = (evd.U(), evd.S().column_vector());
        for k in (0..n).step_by(step).take(samples) {
            let lam = s[k];
            let mut r2 = 0.0;
            for i in 0..n {
                let mut acc = -lam * u[(i, k)];
                for j in 0..n {
                    acc += m[(i, j)] * u[(j, k)];
                }
                r2 += acc * acc;
            }
            worst = worst.max(r2.sqrt() / (norm + lam.abs()));
        }
    } else {
        let evd = m.eigen().map_err(|e| Error::NoConvergence(format!("{e:?}")))?;
        let (u, s) = (evd.U(), evd.S().column_vector());
        for k in (0..n).step_by(step).take(samples) {
            let lam = s[k];
            let mut r2 = 0.0;
            let mut v2 = 0.0;
            for i in 0..n {
                let mut acc = -(lam * u[(i, k)]);
                for j in 0..n {
                    acc += u[(j, k)] * m[(i, j)];
                }
                r2 += acc.norm_sqr();
                v2 += u[(i, k)].norm_sqr();
            }
            worst = worst.max((r2 / v2).sqrt() / (norm + lam.norm()));
        }
    }
    Ok(worst)
}

pub fn frobenius(m: &Mat<f64>) -> f64 {
    let mut s = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            s += m[(i, j)] * m[(i, j)];
        }
    }
    s.sqrt()
}

/// `(sign, ln|det|)` by LU with partial pivoting. A singular matrix gives
/// `(0.0, -inf)`.
pub fn log_det(m: &Mat<f64>) -> (f64, f64) {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "log_det of a non-square matrix");
    let mut a: Vec<f64> = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            a.push(m[(i, j)]);
        }
    }
    let mut sign = 1.0;
    let mut log_abs = 0.0;
    for k in 0..n {
        let (piv, piv_abs) = (k..n)
            .map(|i| (i, a[i * n + k].abs()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if piv_abs == 0.0 {
            return (0.0, f64::NEG_INFINITY);
        }
        if piv != k {
            for j in 0..n {
                a.swap(k * n + j, piv * n + j);
            }
            sign = -sign;
        }
        let d = a[k * n + k];
        if d < 0.0 {
            sign = -sign;
        }
        log_abs += d.abs().ln();
        let (upper, lower) = a.split_at_mut((k + 1) * n);
        let pivot_row = &upper[k * n..(k + 1) * n];
        for row in lower.chunks_mut(n) {
            let f = row[k] / d;
            if f != 0.0 {
                for j in (k + 1)..n {
                    row[j] -= f * pivot_row[j];
                }
            }
        }
    }
    (sign, log_abs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusMethod {
    /// max |λ| from a full decomposition.
    Exact,
    /// Operator norm from power iteration; an upper estimate of ρ.
    NormUpperEstimate,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RadiusEstimate {
    pub value: f64,
    pub method: RadiusMethod,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Want {
    FullSpectrum,
    RadiusOnly,
}

/// What to compute for a given matrix.
#[derive(Debug, Clone, Copy)]
pub struct EigenRequest {
    pub symmetric: bool,
    pub want: Want,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EigenRequest {
    fn default() -> Self {
        Self { symmetric: false, want: Want::RadiusOnly, tol: 1e-8, max_iter: 10_000 }
    }
}

#[derive(Debug, Clone)]
pub struct EigenOutcome {
    pub spectrum: Option<Vec<c64>>,
    pub radius: RadiusEstimate,
}

impl EigenRequest {
    pub fn run(&self, m: &Mat<f64>) -> Result<EigenOutcome> {
        let n = m.nrows();
        if self.want == Want::FullSpectrum && n > DENSE_LIMIT {
            return Err(Error::TooLarge(n));
        }
        if n > DENSE_LIMIT {
            let radius = power_norm_dense(m, self.tol, self.max_iter)?;
            return Ok(EigenOutcome { spectrum: None, radius });
        }
        let spectrum: Vec<c64> = if self.symmetric {
            eig_symmetric(m)?.into_iter().map(|x| c64::new(x, 0.0)).collect()
        } else {
            eig_general(m)?
        };
        let value = spectrum.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let radius = RadiusEstimate { value, method: RadiusMethod::Exact, iterations: 0 };
        let spectrum = (self.want == Want::FullSpectrum).then_some(spectrum);
        Ok(EigenOutcome { spectrum, radius })
    }
}

/// Spectral radius of a dense matrix: exact below [`DENSE_LIMIT`], otherwise a
/// norm-based upper estimate.
pub fn spectral_radius(m: &Mat<f64>, tol: f64, cap: usize) -> Result<RadiusEstimate> {
    let req = EigenRequest { symmetric: is_symmetric(m), want: Want::RadiusOnly, tol, max_iter: cap };
    Ok(req.run(m)?.radius)
}

/// Spectral radius of a sparse matrix; densifies when small enough.
pub fn spectral_radius_sparse(m: &CsrMatrix, tol: f64, cap: usize) -> Result<RadiusEstimate> {
    if m.nrows <= DENSE_LIMIT {
        return spectral_radius(&m.to_dense(), tol, cap);
    }
    power_norm(|x| m.matvec(x), |x| m.matvec_transpose(x), m.nrows, tol, cap)
}

fn power_norm_dense(m: &Mat<f64>, tol: f64, cap: usize) -> Result<RadiusEstimate> {
    let n = m.nrows();
    let apply = |x: &[f64]| (0..n).map(|i| (0..n).map(|j| m[(i, j)] * x[j]).sum()).collect::<Vec<f64>>();
    let apply_t = |x: &[f64]| (0..n).map(|j| (0..n).map(|i| m[(i, j)] * x[i]).sum()).collect::<Vec<f64>>();
    power_norm(apply, apply_t, n, tol, cap)
}

/// Power iteration on `MᵀM`; returns `‖M‖_op`.
fn power_norm(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    apply_t: impl Fn(&[f64]) -> Vec<f64>,
    n: usize,
    tol: f64,
    cap: usize,
) -> Result<RadiusEstimate> {
    if n == 0 {
        return Ok(RadiusEstimate { value: 0.0, method: RadiusMethod::NormUpperEstimate, iterations: 0 });
    }
    // Deterministic, non-degenerate start vector.
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919) % 101) as f64 / 101.0).collect();
    normalize(&mut x);
    let mut prev = 0.0;
    for it in 1..=cap {
        let mut y = apply_t(&apply(&x));
        let lam = dot(&x, &y);
        let norm = normalize(&mut y);
        if norm == 0.0 {
            return Ok(RadiusEstimate { value: 0.0, method: RadiusMethod::NormUpperEstimate, iterations: it });
        }
        x = y;
        if it > 1 && (lam - prev).abs() <= tol * lam.abs() {
            return Ok(RadiusEstimate {
                value: lam.max(0.0).sqrt(),
                method: RadiusMethod::NormUpperEstimate,
                iterations: it,
            });
        }
        prev = lam;
    }
    Err(Error::NoConvergence(format!("power iteration did not settle within {cap} steps")))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(x: &mut [f64]) -> f64 {
    let n = dot(x, x).sqrt();
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
    n
}
