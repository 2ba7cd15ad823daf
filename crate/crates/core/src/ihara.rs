//! The generalized Ihara-Bass determinant identity and the induced
//! correspondence between the spectra of `A` and `B`.

use faer::c64;
use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lifts::InstanceGraph;
use crate::nomadic::build_nomadic;
use crate::rng::{Stream, TAG_T_SAMPLES};
use crate::spectra::{eig_general, eig_symmetric, log_det};

/// Closest admissible distance of `1 + λt` from zero.
pub const POLE_GUARD: f64 = 1e-6;

/// `L(t) = I − tA + (λ₁+λ₂)t·I + gr·t²·I`.
pub fn deformed_laplacian(a: &Mat<f64>, lambda1: f64, lambda2: f64, c: usize, t: f64) -> Mat<f64> {
    let gr = growth(lambda1, lambda2, c);
    let diag = 1.0 + (lambda1 + lambda2) * t + gr * t * t;
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| if i == j { diag } else { 0.0 } - t * a[(i, j)])
}

fn growth(lambda1: f64, lambda2: f64, c: usize) -> f64 {
    (c as f64 - 1.0) * (-lambda1 * lambda2)
}

/// Raw exponents `(a, b)` of `(1+λ₁t)` and `(1+λ₂t)`.
pub fn ihara_exponents(num_vertices: usize, lambda1: f64, lambda2: f64, c: usize) -> (f64, f64) {
    let nv = num_vertices as f64;
    let c = c as f64;
    (nv * (c * lambda2 / (lambda2 - lambda1) - 1.0), nv * (c * lambda1 / (lambda1 - lambda2) - 1.0))
}

fn as_integer(x: f64) -> Result<i64> {
    let r = x.round();
    if (x - r).abs() > 1e-6 * x.abs().max(1.0) {
        return Err(Error::NonIntegerMultiplicity(x));
    }
    Ok(r as i64)
}

/// Integer exponents; negative values are allowed (the identity still holds).
pub fn integer_exponents(instance: &InstanceGraph) -> Result<(i64, i64)> {
    let (a, b) = ihara_exponents(instance.num_vertices(), instance.lambda1(), instance.lambda2(), instance.c());
    Ok((as_integer(a)?, as_integer(b)?))
}

/// Largest admissible `|t|`.
pub fn t_bound(lambda1: f64, lambda2: f64, c: usize) -> f64 {
    0.9 / lambda1.abs().max(lambda2.abs()).max(growth(lambda1, lambda2, c).sqrt())
}

/// One side of the identity as `(sign, ln|value|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignedLog {
    pub sign: f64,
    pub log_abs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentitySample {
    pub t: f64,
    pub lhs: SignedLog,
    pub rhs: SignedLog,
    pub residual: f64,
}

/// Relative residual `|LHS − RHS| / (|RHS| + 1e−300)` of the identity at `t`.
pub fn ihara_bass_residual(instance: &InstanceGraph, t: f64) -> Result<f64> {
    let b = build_nomadic(instance).to_dense();
    Ok(identity_sample(instance, &instance.adjacency_f64(), &b, t)?.residual)
}

/// Residual with `A` and dense `B` supplied by the caller.
pub fn identity_sample(instance: &InstanceGraph, a: &Mat<f64>, b: &Mat<f64>, t: f64) -> Result<IdentitySample> {
    let (l1, l2, c) = (instance.lambda1(), instance.lambda2(), instance.c());
    let bound = t_bound(l1, l2, c);
    if t.abs() >= bound {
        return Err(Error::Invalid(format!("|t| = {} is outside the admissible radius {bound}", t.abs())));
    }
    let f1 = 1.0 + l1 * t;
    let f2 = 1.0 + l2 * t;
    if f1.abs() <= POLE_GUARD || f2.abs() <= POLE_GUARD {
        return Err(Error::NearPole(t));
    }
    let (ea, eb) = integer_exponents(instance)?;

    let (s_l, l_l) = log_det(&deformed_laplacian(a, l1, l2, c, t));
    let mut sign = s_l;
    if f1 < 0.0 && ea % 2 != 0 {
        sign = -sign;
    }
    if f2 < 0.0 && eb % 2 != 0 {
        sign = -sign;
    }
    let lhs = SignedLog { sign, log_abs: l_l + ea as f64 * f1.abs().ln() + eb as f64 * f2.abs().ln() };

    let m = b.nrows();
    let ib = Mat::from_fn(m, m, |i, j| if i == j { 1.0 } else { 0.0 } - t * b[(i, j)]);
    let (s_r, l_r) = log_det(&ib);
    let rhs = SignedLog { sign: s_r, log_abs: l_r };

    let residual = if rhs.sign == 0.0 {
        if lhs.sign == 0.0 { 0.0 } else { lhs.log_abs.exp() / 1e-300 }
    } else {
        (lhs.sign * (lhs.log_abs - rhs.log_abs).exp() - rhs.sign).abs()
    };
    Ok(IdentitySample { t, lhs, rhs, residual })
}

/// `count` admissible sample points drawn uniformly from
/// `±0.8 / max(|λ₁|, |λ₂|, √gr)`.
pub fn sample_t_values(lambda1: f64, lambda2: f64, c: usize, seed: u64, count: usize) -> Vec<f64> {
    let scale = 0.8 / lambda1.abs().max(lambda2.abs()).max(growth(lambda1, lambda2, c).sqrt());
    let mut stream = Stream::tagged(seed, TAG_T_SAMPLES, 0);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let t = (2.0 * stream.unit_f64() - 1.0) * scale;
        if (1.0 + lambda1 * t).abs() > POLE_GUARD && (1.0 + lambda2 * t).abs() > POLE_GUARD {
            out.push(t);
        }
    }
    out
}

/// Roots `(μ₊, μ₋)` of `μ² − (ν−λ₁−λ₂)μ + gr = 0`; `μ₊` has the larger real
/// part (or positive imaginary part for a conjugate pair).
pub fn map_a_to_b_eigs(nu: f64, lambda1: f64, lambda2: f64, c: usize) -> (c64, c64) {
    let gr = growth(lambda1, lambda2, c);
    let b = nu - lambda1 - lambda2;
    let disc = b * b - 4.0 * gr;
    if disc >= 0.0 {
        let s = disc.sqrt();
        // Stable pair: the large root directly, the small one via the product.
        let q = if b >= 0.0 { (b + s) / 2.0 } else { (b - s) / 2.0 };
        let other = if q != 0.0 { gr / q } else { 0.0 };
        let (hi, lo) = if q >= other { (q, other) } else { (other, q) };
        (c64::new(hi, 0.0), c64::new(lo, 0.0))
    } else {
        let im = (-disc).sqrt() / 2.0;
        (c64::new(b / 2.0, im), c64::new(b / 2.0, -im))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictedSource {
    Lambda1,
    Lambda2,
    Zero,
    Quadratic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictedEig {
    pub re: f64,
    pub im: f64,
    pub source: PredictedSource,
}

impl PredictedEig {
    pub fn value(&self) -> c64 {
        c64::new(self.re, self.im)
    }
}

/// Closed-form multiplicities of `−λ₁`, `−λ₂` and `0` in the spectrum of `B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Multiplicities {
    pub lambda1: usize,
    pub lambda2: usize,
    pub zero: usize,
}

pub fn closed_form_multiplicities(instance: &InstanceGraph) -> Result<Multiplicities> {
    let (a, b) = ihara_exponents(instance.num_vertices(), instance.lambda1(), instance.lambda2(), instance.c());
    let nonneg = |x: f64| -> Result<usize> {
        let k = as_integer(x)?;
        usize::try_from(k).map_err(|_| Error::NonIntegerMultiplicity(x))
    };
    let zero = 2 * instance.edges().len() as i64 - (instance.num_vertices() * instance.c()) as i64;
    Ok(Multiplicities { lambda1: nonneg(a)?, lambda2: nonneg(b)?, zero: nonneg(zero as f64)? })
}

/// The four-part multiset predicted for `eig(B)` from `eig(A)`.
pub fn predicted_b_spectrum(instance: &InstanceGraph, eig_a: &[f64]) -> Result<Vec<PredictedEig>> {
    let m = closed_form_multiplicities(instance)?;
    let (l1, l2, c) = (instance.lambda1(), instance.lambda2(), instance.c());
    let mut out = Vec::with_capacity(2 * instance.edges().len());
    let push = |out: &mut Vec<PredictedEig>, z: c64, source| out.push(PredictedEig { re: z.re, im: z.im, source });
    for _ in 0..m.lambda1 {
        push(&mut out, c64::new(-l1, 0.0), PredictedSource::Lambda1);
    }
    for _ in 0..m.lambda2 {
        push(&mut out, c64::new(-l2, 0.0), PredictedSource::Lambda2);
    }
    for &nu in eig_a {
        let (p, q) = map_a_to_b_eigs(nu, l1, l2, c);
        push(&mut out, p, PredictedSource::Quadratic);
        push(&mut out, q, PredictedSource::Quadratic);
    }
    for _ in 0..m.zero {
        push(&mut out, c64::new(0.0, 0.0), PredictedSource::Zero);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub re: f64,
    pub im: f64,
    pub predicted_re: f64,
    pub predicted_im: f64,
    pub predicted_source: PredictedSource,
    pub distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplicityCheck {
    pub source: PredictedSource,
    pub value: f64,
    pub closed_form: usize,
    /// Closed form plus quadratic roots within the counting radius of the value.
    pub expected: usize,
    /// Computed eigenvalues of `B` within the counting radius.
    pub counted: usize,
}

impl MultiplicityCheck {
    pub fn ok(&self) -> bool {
        self.expected == self.counted
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub eig_a: Vec<f64>,
    pub eig_b_computed: Vec<(f64, f64)>,
    pub eig_b_predicted: Vec<PredictedEig>,
    /// Matching distance per predicted eigenvalue.
    pub residuals: Vec<f64>,
    pub table: Vec<MatchedPair>,
    pub max_residual: f64,
    pub tol: f64,
    pub pass: bool,
    pub rho_a: f64,
    pub rho_b: f64,
    pub multiplicities: Vec<MultiplicityCheck>,
}

/// Greedy minimum-distance matching: candidate pairs are visited in order of
/// increasing distance and accepted when both ends are free. Returns, for
/// each predicted index, the matched computed index.
pub fn greedy_match(computed: &[c64], predicted: &[c64]) -> Result<Vec<usize>> {
    let n = computed.len();
    if n != predicted.len() {
        return Err(Error::CardinalityMismatch(n, predicted.len()));
    }
    let k = n.min(24);
    let mut cand: Vec<(f64, usize, usize)> = Vec::with_capacity(n * k);
    for (p, z) in predicted.iter().enumerate() {
        let mut near: Vec<(f64, usize)> = computed.iter().enumerate().map(|(q, w)| ((z - w).norm(), q)).collect();
        if k < n {
            near.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0));
            near.truncate(k);
        }
        cand.extend(near.into_iter().map(|(d, q)| (d, p, q)));
    }
    let mut assign = vec![usize::MAX; n];
    let mut taken = vec![false; n];
    let run = |cand: &mut Vec<(f64, usize, usize)>, assign: &mut Vec<usize>, taken: &mut Vec<bool>| {
        cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        for &(_, p, q) in cand.iter() {
            if assign[p] == usize::MAX && !taken[q] {
                assign[p] = q;
                taken[q] = true;
            }
        }
    };
    run(&mut cand, &mut assign, &mut taken);
    // Candidates exhausted for some rows: finish on the leftovers exactly.
    let free_p: Vec<usize> = (0..n).filter(|&p| assign[p] == usize::MAX).collect();
    if !free_p.is_empty() {
        let free_q: Vec<usize> = (0..n).filter(|&q| !taken[q]).collect();
        let mut rest: Vec<(f64, usize, usize)> = free_p
            .iter()
            .flat_map(|&p| free_q.iter().map(move |&q| ((predicted[p] - computed[q]).norm(), p, q)))
            .collect();
        run(&mut rest, &mut assign, &mut taken);
    }
    Ok(assign)
}

/// Matches computed against predicted eigenvalues of `B`.
pub fn match_spectra(computed: &[c64], predicted: &[PredictedEig], tol: f64) -> Result<SpectrumReport> {
    let pred: Vec<c64> = predicted.iter().map(|p| p.value()).collect();
    let assign = greedy_match(computed, &pred)?;
    let mut table = Vec::with_capacity(pred.len());
    let mut residuals = Vec::with_capacity(pred.len());
    for (p, &q) in assign.iter().enumerate() {
        let d = (pred[p] - computed[q]).norm();
        residuals.push(d);
        table.push(MatchedPair {
            re: computed[q].re,
            im: computed[q].im,
            predicted_re: pred[p].re,
            predicted_im: pred[p].im,
            predicted_source: predicted[p].source,
            distance: d,
        });
    }
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    Ok(SpectrumReport {
        eig_a: Vec::new(),
        eig_b_computed: computed.iter().map(|z| (z.re, z.im)).collect(),
        eig_b_predicted: predicted.to_vec(),
        residuals,
        table,
        max_residual,
        tol,
        pass: max_residual <= tol,
        rho_a: 0.0,
        rho_b: computed.iter().map(|z| z.norm()).fold(0.0, f64::max),
        multiplicities: Vec::new(),
    })
}

/// Counting radius for eigenvalue multiplicities: defective eigenvalues
/// (for instance Jordan blocks at 0) scatter by roughly `ε^{1/k}`.
pub const COUNT_RADIUS: f64 = 1e-4;

/// Full pipeline on one instance: `eig(A)`, `eig(B)`, prediction, matching
/// and multiplicity counts.
pub fn spectrum_report(instance: &InstanceGraph, tol: f64) -> Result<SpectrumReport> {
    let a = instance.adjacency_f64();
    let eig_a = eig_symmetric(&a)?;
    let b = build_nomadic(instance).to_dense();
    let computed = eig_general(&b)?;
    let predicted = predicted_b_spectrum(instance, &eig_a)?;
    let mut report = match_spectra(&computed, &predicted, tol)?;
    report.rho_a = eig_a.iter().map(|x| x.abs()).fold(0.0, f64::max);
    report.eig_a = eig_a;

    let closed = closed_form_multiplicities(instance)?;
    let scale = instance.lambda1().abs().max(instance.lambda2().abs()).max(1.0);
    for (source, value, closed_form) in [
        (PredictedSource::Lambda1, -instance.lambda1(), closed.lambda1),
        (PredictedSource::Lambda2, -instance.lambda2(), closed.lambda2),
        (PredictedSource::Zero, 0.0, closed.zero),
    ] {
        let target = c64::new(value, 0.0);
        let extra = predicted
            .iter()
            .filter(|p| p.source == PredictedSource::Quadratic && (p.value() - target).norm() <= COUNT_RADIUS * scale)
            .count();
        let counted = computed.iter().filter(|z| (**z - target).norm() <= COUNT_RADIUS * scale).count();
        report.multiplicities.push(MultiplicityCheck { source, value, closed_form, expected: closed_form + extra, counted });
    }
    Ok(report)
}

/// Identity residuals at `samples` seeded sample points, plus the matched
/// spectrum, as written by `ihara check`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IharaCheck {
    pub exponents: (i64, i64),
    pub samples: Vec<IdentitySample>,
    pub max_identity_residual: f64,
    pub identity_tol: f64,
    pub identity_pass: bool,
    pub spectrum: SpectrumReport,
}

pub fn ihara_check(instance: &InstanceGraph, seed: u64, samples: usize, tol: f64, spectrum_tol: f64) -> Result<IharaCheck> {
    let a = instance.adjacency_f64();
    let b = build_nomadic(instance).to_dense();
    let ts = sample_t_values(instance.lambda1(), instance.lambda2(), instance.c(), seed, samples);
    let samples: Vec<IdentitySample> = ts.iter().map(|&t| identity_sample(instance, &a, &b, t)).collect::<Result<_>>()?;
    let max_identity_residual = samples.iter().map(|s| s.residual).fold(0.0, f64::max);
    Ok(IharaCheck {
        exponents: integer_exponents(instance)?,
        samples,
        max_identity_residual,
        identity_tol: tol,
        identity_pass: max_identity_residual <= tol,
        spectrum: spectrum_report(instance, spectrum_tol)?,
    })
}
