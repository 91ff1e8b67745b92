//! Dense complex linear algebra shared by every module.
//!
//! Thin wrappers over `faer`: hermitian eigendecomposition, functions of
//! hermitian matrices, a Padé matrix exponential and a few vector helpers.

use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::{Mat, Side};

use crate::error::{Error, Result};

pub use num_complex::Complex64 as C64;

/// Dense complex matrix.
pub type CMat = Mat<C64>;

pub(crate) const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub(crate) fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Runs every dense kernel on the calling thread, so results do not depend on
/// the machine's core count. Callers that parallelize over independent
/// problems should set this once at startup.
pub fn use_sequential_kernels() {
    faer::set_global_parallelism(faer::Par::Seq);
}

pub fn zeros(n: usize) -> CMat {
    CMat::zeros(n, n)
}

pub fn identity(n: usize) -> CMat {
    CMat::from_fn(n, n, |i, j| if i == j { re(1.0) } else { re(0.0) })
}

pub fn diag_real(d: &[f64]) -> CMat {
    let n = d.len();
    CMat::from_fn(n, n, |i, j| if i == j { re(d[i]) } else { re(0.0) })
}

pub fn dagger(m: &CMat) -> CMat {
    CMat::from_fn(m.ncols(), m.nrows(), |i, j| m[(j, i)].conj())
}

pub fn scale(m: &CMat, s: C64) -> CMat {
    CMat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * s)
}

/// Linear combination `sum_k c_k M_k` of equally shaped matrices.
pub fn combine(terms: &[(C64, &CMat)]) -> CMat {
    let (r, c) = (terms[0].1.nrows(), terms[0].1.ncols());
    CMat::from_fn(r, c, |i, j| terms.iter().map(|(s, m)| *s * m[(i, j)]).sum())
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    let ab = a * b;
    let ba = b * a;
    &ab - &ba
}

pub fn trace(m: &CMat) -> C64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

pub fn max_abs(m: &CMat) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            best = best.max(m[(i, j)].norm());
        }
    }
    best
}

/// Largest entry of `|A - A^dagger|`.
pub fn hermiticity_defect(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut best = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            best = best.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    best
}

/// Induced 1-norm (largest column sum).
pub fn norm_one(m: &CMat) -> f64 {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn frobenius(m: &CMat) -> f64 {
    let mut s = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            s += m[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac, br, bc) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
    CMat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

pub fn mat_vec(m: &CMat, v: &[C64]) -> Vec<C64> {
    let mut out = vec![re(0.0); m.nrows()];
    for (j, &vj) in v.iter().enumerate() {
        if vj == re(0.0) {
            continue;
        }
        for (i, o) in out.iter_mut().enumerate() {
            *o += m[(i, j)] * vj;
        }
    }
    out
}

/// `<a|b>` with the first argument conjugated.
pub fn vdot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// `<a|M|b>`.
pub fn sandwich(a: &[C64], m: &CMat, b: &[C64]) -> C64 {
    vdot(a, &mat_vec(m, b))
}

pub fn column(m: &CMat, j: usize) -> Vec<C64> {
    (0..m.nrows()).map(|i| m[(i, j)]).collect()
}

/// Hermitian eigendecomposition with ascending eigenvalues.
pub fn eigh(m: &CMat) -> Result<(Vec<f64>, CMat)> {
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Linalg(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let values = (0..s.nrows()).map(|i| s[i].re).collect();
    Ok((values, evd.U().to_owned()))
}

pub fn eigvalsh(m: &CMat) -> Result<Vec<f64>> {
    let s = m
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Linalg(format!("{e:?}")))?;
    Ok(s)
}

/// `f(M)` for hermitian `M`, through its spectral decomposition.
pub fn hermitian_function(m: &CMat, f: impl Fn(f64) -> C64) -> Result<CMat> {
    let (w, v) = eigh(m)?;
    let n = w.len();
    let fw: Vec<C64> = w.iter().map(|&x| f(x)).collect();
    let vf = CMat::from_fn(n, n, |i, j| v[(i, j)] * fw[j]);
    Ok(&vf * v.adjoint())
}

/// Real-valued `f(M)`; the result is hermitian, so it is symmetrised.
pub fn hermitian_function_real(m: &CMat, f: impl Fn(f64) -> f64) -> Result<CMat> {
    Ok(hermitize(&hermitian_function(m, |x| re(f(x)))?))
}

pub fn hermitize(m: &CMat) -> CMat {
    let n = m.nrows();
    CMat::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5)
}

/// `exp(G)` for anti-hermitian `G`: exactly unitary up to rounding.
pub fn expm_antihermitian(g: &CMat) -> Result<CMat> {
    // K = iG is hermitian and exp(G) = exp(-iK).
    let k = scale(g, I);
    hermitian_function(&k, |x| (-I * x).exp())
}

/// General matrix exponential, Padé(13) with scaling and squaring.
pub fn expm(a: &CMat) -> Result<CMat> {
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    const THETA13: f64 = 5.371920351148152;
    let n = a.nrows();
    let nrm = norm_one(a);
    if !nrm.is_finite() {
        return Err(Error::Linalg("non-finite matrix in expm".into()));
    }
    let s = if nrm > THETA13 { (nrm / THETA13).log2().ceil() as i32 } else { 0 };
    let a = scale(a, re(0.5f64.powi(s)));
    let id = identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = |k: usize| re(B[k]);
    let u_in = combine(&[(b(13), &a6), (b(11), &a4), (b(9), &a2)]);
    let u_in = &a6 * &u_in;
    let u_in = &u_in + &combine(&[(b(7), &a6), (b(5), &a4), (b(3), &a2), (b(1), &id)]);
    let u = &a * &u_in;
    let v_in = combine(&[(b(12), &a6), (b(10), &a4), (b(8), &a2)]);
    let v_in = &a6 * &v_in;
    let v = &v_in + &combine(&[(b(6), &a6), (b(4), &a4), (b(2), &a2), (b(0), &id)]);
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.partial_piv_lu().solve(&p);
    for _ in 0..s {
        r = &r * &r;
    }
    if r.as_ref().is_all_finite() {
        Ok(r)
    } else {
        Err(Error::Linalg("expm produced non-finite entries".into()))
    }
}

/// Inverse through a partial-pivot LU factorisation.
pub fn inverse(a: &CMat) -> CMat {
    a.partial_piv_lu().inverse()
}

/// Complex eigendecomposition of a general matrix: (values, right vectors).
pub fn eig(a: &CMat) -> Result<(Vec<C64>, CMat)> {
    let evd = a.eigen().map_err(|e| Error::Linalg(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let values = (0..s.nrows()).map(|i| s[i]).collect();
    Ok((values, evd.U().to_owned()))
}

pub fn eigvals(a: &CMat) -> Result<Vec<C64>> {
    a.eigenvalues().map_err(|e| Error::Linalg(format!("{e:?}")))
}
