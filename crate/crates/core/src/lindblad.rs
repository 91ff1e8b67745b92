//! Universal Lindblad model in the system eigenbasis.
//!
//! One jump operator per bath,
//! `L = x sum_ij sqrt(S(e_i - e_j)) <j|O|i> |j><i|`, with the Johnson-Nyquist
//! density `S(E) = E / (1 - exp(-E / k_BT))`. Superoperators act on
//! column-stacked density matrices and carry the factor `1/hbar = 2 pi`, so
//! eigenvalues are rates in 1/ns.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::circuits::EigenSystem;
use crate::error::{invalid, Error, Result};
use crate::linalg::{self, re, CMat, C64, I};
use crate::operators::OperatorMatrix;

/// `E / (1 - e^{-E/k_BT})` for a transition energy `E = hbar omega` in h·GHz.
pub fn spectral_density(energy: f64, k_bt: f64) -> f64 {
    let x = energy / k_bt;
    if x.abs() < 1e-6 {
        k_bt * (1.0 + 0.5 * x)
    } else if x < -700.0 {
        0.0
    } else {
        energy / -(-x).exp_m1()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Flux,
    Charge,
    CosTheta,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathSpec {
    pub k_bt: f64,
    pub x: f64,
    pub channel: Channel,
}

impl BathSpec {
    pub fn new(k_bt: f64, x: f64, channel: Channel) -> Result<Self> {
        let b = Self { k_bt, x, channel };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k_bt > 0.0 && self.k_bt.is_finite()) {
            return Err(invalid("k_bt", format!("must be positive, got {}", self.k_bt)));
        }
        if !(self.x >= 0.0 && self.x.is_finite()) {
            return Err(invalid("x", format!("must be non-negative, got {}", self.x)));
        }
        Ok(())
    }
}

/// Jump operator `L_ji = x sqrt(S(e_i - e_j)) <j|op|i>` on the retained levels.
pub fn build_dissipator(op: &OperatorMatrix, eig: &EigenSystem, bath: &BathSpec) -> Result<CMat> {
    bath.validate()?;
    if eig.k() < 2 {
        return Err(invalid("k", "need at least two retained levels"));
    }
    let m = eig.project(op)?;
    let e = &eig.energies;
    Ok(dissipator_from_elements(&m, e, bath))
}

fn dissipator_from_elements(m: &CMat, e: &[f64], bath: &BathSpec) -> CMat {
    let k = e.len();
    CMat::from_fn(k, k, |j, i| m[(j, i)] * (bath.x * spectral_density(e[i] - e[j], bath.k_bt).sqrt()))
}

/// Energies of the retained levels plus one jump operator per bath.
#[derive(Debug, Clone)]
pub struct LindbladModel {
    pub energies: Vec<f64>,
    pub dissipators: Vec<CMat>,
    pub k_bt: f64,
}

impl LindbladModel {
    pub fn new(energies: Vec<f64>, dissipators: Vec<CMat>, k_bt: f64) -> Result<Self> {
        let k = energies.len();
        if k == 0 {
            return Err(invalid("energies", "empty spectrum"));
        }
        for l in &dissipators {
            if l.nrows() != k || l.ncols() != k {
                return Err(Error::DimensionMismatch { expected: k, got: l.nrows() });
            }
            if !l.as_ref().is_all_finite() {
                return Err(invalid("dissipators", "non-finite entries"));
            }
        }
        if !(k_bt > 0.0) {
            return Err(invalid("k_bt", "must be positive"));
        }
        Ok(Self { energies, dissipators, k_bt })
    }

    /// Builds the model on the retained levels of `eig`, one dissipator per
    /// `(operator, bath)` pair. All baths must share one temperature.
    pub fn from_eigensystem(eig: &EigenSystem, channels: &[(&OperatorMatrix, BathSpec)]) -> Result<Self> {
        let k_bt = channels.first().map(|c| c.1.k_bt).ok_or_else(|| invalid("channels", "no baths"))?;
        if channels.iter().any(|c| (c.1.k_bt - k_bt).abs() > 1e-15 * k_bt) {
            return Err(invalid("k_bt", "all baths must share one temperature"));
        }
        let ls = channels.iter().map(|(op, b)| build_dissipator(op, eig, b)).collect::<Result<Vec<_>>>()?;
        Self::new(eig.energies.clone(), ls, k_bt)
    }

    pub fn k(&self) -> usize {
        self.energies.len()
    }

    /// The same model with every coupling multiplied by `s`.
    pub fn scaled_couplings(&self, s: f64) -> Self {
        Self {
            energies: self.energies.clone(),
            dissipators: self.dissipators.iter().map(|l| linalg::scale(l, re(s))).collect(),
            k_bt: self.k_bt,
        }
    }

    pub fn gibbs_state(&self) -> DensityMatrix {
        let e0 = self.energies[0];
        let w: Vec<f64> = self.energies.iter().map(|e| (-(e - e0) / self.k_bt).exp()).collect();
        let z: f64 = w.iter().sum();
        let p: Vec<f64> = w.iter().map(|x| x / z).collect();
        DensityMatrix { m: linalg::diag_real(&p) }
    }
}

/// Column-stacked Liouvillian in 1/ns: `vec(A rho B) = (B^T ⊗ A) vec(rho)`.
pub fn liouvillian(model: &LindbladModel) -> CMat {
    let k = model.k();
    let n = k * k;
    let mut sup = CMat::zeros(n, n);
    for j in 0..k {
        for i in 0..k {
            let r = i + k * j;
            sup[(r, r)] = -I * (model.energies[i] - model.energies[j]);
        }
    }
    for l in &model.dissipators {
        let kk = l.adjoint() * l;
        for j in 0..k {
            for i in 0..k {
                let r = i + k * j;
                for nn in 0..k {
                    let lc = l[(j, nn)].conj();
                    if lc != re(0.0) {
                        for m in 0..k {
                            sup[(r, m + k * nn)] += l[(i, m)] * lc;
                        }
                    }
                }
                for m in 0..k {
                    sup[(r, m + k * j)] -= kk[(i, m)] * 0.5;
                    sup[(r, i + k * m)] -= kk[(m, j)] * 0.5;
                }
            }
        }
    }
    linalg::scale(&sup, re(2.0 * PI))
}

/// Largest column sum of `vec(I)^T L`; zero for a trace-preserving map.
pub fn trace_defect(sup: &CMat, k: usize) -> f64 {
    (0..sup.ncols())
        .map(|c| (0..k).map(|i| sup[(i + k * i, c)]).sum::<C64>().norm())
        .fold(0.0, f64::max)
}

/// `||L(rho_G)|| / (||L|| ||rho_G||)` in Frobenius norms.
pub fn gibbs_residual(model: &LindbladModel) -> f64 {
    let sup = liouvillian(model);
    let g = model.gibbs_state();
    let v = vectorize(&g.m);
    let lv = linalg::mat_vec(&sup, &v);
    linalg::norm(&lv) / (linalg::frobenius(&sup) * linalg::norm(&v))
}

/// Density matrix with validated invariants.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    m: CMat,
}

impl DensityMatrix {
    /// Hermitian within 1e-10, unit trace within 1e-8, eigenvalues >= -1e-8.
    pub fn new(m: CMat) -> Result<Self> {
        Self::checked(m, 1e-8)
    }

    fn checked(m: CMat, positivity_tol: f64) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), got: m.ncols() });
        }
        let h = linalg::hermiticity_defect(&m);
        if h > 1e-10 {
            return Err(Error::InvalidState(format!("hermiticity defect {h:.2e}")));
        }
        let tr = linalg::trace(&m);
        if (tr - re(1.0)).norm() > 1e-8 {
            return Err(Error::InvalidState(format!("trace {tr}")));
        }
        let m = linalg::hermitize(&m);
        let low = linalg::eigvalsh(&m)?[0];
        if low < -positivity_tol {
            return Err(Error::InvalidState(format!("negative eigenvalue {low:.2e}")));
        }
        Ok(Self { m })
    }

    pub fn pure(v: &[C64]) -> Result<Self> {
        let n = linalg::norm(v);
        if !(n > 0.0) {
            return Err(invalid("state", "zero vector"));
        }
        let k = v.len();
        Self::new(CMat::from_fn(k, k, |i, j| v[i] * v[j].conj() / (n * n)))
    }

    pub fn from_populations(p: &[f64]) -> Result<Self> {
        Self::new(linalg::diag_real(p))
    }

    pub fn matrix(&self) -> &CMat {
        &self.m
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn trace(&self) -> C64 {
        linalg::trace(&self.m)
    }

    /// `Re Tr[rho O]`.
    pub fn expectation(&self, o: &CMat) -> f64 {
        let k = self.dim();
        let mut s = re(0.0);
        for i in 0..k {
            for j in 0..k {
                s += self.m[(i, j)] * o[(j, i)];
            }
        }
        s.re
    }

    /// `||rho - sigma||_1 / 2`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        let d = &self.m - &other.m;
        Ok(0.5 * linalg::eigvalsh(&linalg::hermitize(&d))?.iter().map(|x| x.abs()).sum::<f64>())
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(linalg::eigvalsh(&self.m)?[0])
    }
}

pub(crate) fn vectorize(m: &CMat) -> Vec<C64> {
    let k = m.nrows();
    (0..k * k).map(|r| m[(r % k, r / k)]).collect()
}

pub(crate) fn unvectorize(v: &[C64], k: usize) -> CMat {
    CMat::from_fn(k, k, |i, j| v[i + k * j])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropagationMethod {
    Eigendecomposition,
    Pade,
}

/// Time evolution `exp(L t)` of a fixed model.
///
/// Uses `L = R diag(lambda) R^{-1}` when the eigenvector matrix is well
/// conditioned, otherwise a Padé exponential per requested time.
#[derive(Debug, Clone)]
pub struct Propagator {
    k: usize,
    pub method: PropagationMethod,
    sup: CMat,
    eigenvalues: Vec<C64>,
    right: CMat,
    left: CMat,
}

impl Propagator {
    pub fn new(model: &LindbladModel) -> Result<Self> {
        let k = model.k();
        let sup = liouvillian(model);
        let n = k * k;
        let (mut vals, mut r) = linalg::eig(&sup)?;
        // Rounding noise on either axis would otherwise grow linearly in t.
        let tol = 1e-13 * vals.iter().map(|l| l.norm()).fold(1.0, f64::max);
        for l in vals.iter_mut() {
            if l.re.abs() <= tol {
                l.re = 0.0;
            }
            if l.im.abs() <= tol {
                l.im = 0.0;
            }
        }
        restore_adjoint_symmetry(&mut vals, &mut r, k);
        remove_trace_leak(&vals, &mut r, k);
        let l = linalg::inverse(&r);
        let check = &l * &r;
        let defect = linalg::max_abs(&(&check - &linalg::identity(n)));
        let method = if defect.is_finite() && defect < 1e-8 {
            PropagationMethod::Eigendecomposition
        } else {
            log::warn!("Liouvillian eigenvectors ill-conditioned (defect {defect:.2e}); using Padé exponentials");
            PropagationMethod::Pade
        };
        Ok(Self { k, method, sup, eigenvalues: vals, right: r, left: l })
    }

    pub fn eigenvalues(&self) -> &[C64] {
        &self.eigenvalues
    }

    pub fn superoperator(&self) -> &CMat {
        &self.sup
    }

    /// Mode amplitudes `R^{-1} vec(rho0)`.
    fn modes(&self, rho0: &CMat) -> Vec<C64> {
        linalg::mat_vec(&self.left, &vectorize(rho0))
    }

    fn raw_at(&self, rho0: &CMat, c: &[C64], t: f64) -> Result<CMat> {
        match self.method {
            PropagationMethod::Eigendecomposition => {
                let w: Vec<C64> = c.iter().zip(&self.eigenvalues).map(|(ci, l)| ci * (l * t).exp()).collect();
                Ok(unvectorize(&linalg::mat_vec(&self.right, &w), self.k))
            }
            PropagationMethod::Pade => {
                let e = linalg::expm(&linalg::scale(&self.sup, re(t)))?;
                Ok(unvectorize(&linalg::mat_vec(&e, &vectorize(rho0)), self.k))
            }
        }
    }

    /// `rho(t)` for every requested time, with invariants checked.
    pub fn evolve(&self, rho0: &DensityMatrix, times: &[f64]) -> Result<Vec<DensityMatrix>> {
        self.evolve_raw(rho0, times)?
            .into_iter()
            .zip(times)
            .map(|(m, &t)| {
                let h = linalg::hermiticity_defect(&m);
                if h > 1e-8 {
                    return Err(Error::Integration(format!("hermiticity defect {h:.2e} at t = {t}")));
                }
                let tr = linalg::trace(&m);
                if (tr - re(1.0)).norm() > 1e-8 {
                    return Err(Error::Integration(format!("trace drift {:.2e} at t = {t}", (tr - re(1.0)).norm())));
                }
                let m = linalg::hermitize(&m);
                let low = linalg::eigvalsh(&m)?[0];
                if low < -1e-6 {
                    return Err(Error::Integration(format!("positivity defect {:.2e} at t = {t}", -low)));
                }
                Ok(DensityMatrix { m })
            })
            .collect()
    }

    /// `rho(t)` without invariant checks, for cheap observable traces.
    pub fn evolve_raw(&self, rho0: &DensityMatrix, times: &[f64]) -> Result<Vec<CMat>> {
        if rho0.dim() != self.k {
            return Err(Error::DimensionMismatch { expected: self.k, got: rho0.dim() });
        }
        if times.iter().any(|&t| !(t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0]) {
            return Err(invalid("times", "must be non-negative and ascending"));
        }
        let c = self.modes(rho0.matrix());
        times
            .iter()
            .map(|&t| if t == 0.0 { Ok(rho0.matrix().clone()) } else { self.raw_at(rho0.matrix(), &c, t) })
            .collect()
    }

    /// Long-time limit: the projection of `rho0` onto the zero modes.
    ///
    /// Always contains the stationary state; with degenerate dissipation-free
    /// populations (for example `x = 0`) it keeps them all.
    pub fn stationary_limit(&self, rho0: &DensityMatrix) -> Result<CMat> {
        let c = self.modes(rho0.matrix());
        let w: Vec<C64> = c
            .iter()
            .zip(&self.eigenvalues)
            .map(|(ci, l)| if *l == re(0.0) { *ci } else { re(0.0) })
            .collect();
        Ok(unvectorize(&linalg::mat_vec(&self.right, &w), self.k))
    }
}

/// `L(X^dagger) = L(X)^dagger`, so real modes are hermitian and complex modes
/// come in conjugate pairs `(lambda, X)`, `(conj lambda, X^dagger)`. Imposing
/// this keeps `rho(t)` hermitian at times where rounding in the eigenvalues
/// would otherwise accumulate.
fn restore_adjoint_symmetry(vals: &mut [C64], r: &mut CMat, k: usize) {
    let n = r.nrows();
    let adj = |r: &CMat, j: usize| -> Vec<C64> { (0..n).map(|x| r[((x / k) + k * (x % k), j)].conj()).collect() };
    let mut paired = vec![false; vals.len()];
    for j in 0..vals.len() {
        if paired[j] {
            continue;
        }
        if vals[j].im == 0.0 {
            let a = adj(r, j);
            let col: Vec<C64> = (0..n).map(|x| r[(x, j)]).collect();
            let herm: Vec<C64> = col.iter().zip(&a).map(|(u, v)| u + v).collect();
            let anti: Vec<C64> = col.iter().zip(&a).map(|(u, v)| (u - v) * I).collect();
            let pick = if linalg::norm(&herm) >= linalg::norm(&anti) { herm } else { anti };
            let nn = linalg::norm(&pick);
            for x in 0..n {
                r[(x, j)] = pick[x] / nn;
            }
            paired[j] = true;
        } else if vals[j].im > 0.0 {
            let target = vals[j].conj();
            let partner = (0..vals.len())
                .filter(|&m| !paired[m] && m != j && vals[m].im < 0.0)
                .min_by(|&a, &b| (vals[a] - target).norm().total_cmp(&(vals[b] - target).norm()));
            if let Some(m) = partner {
                let a = adj(r, j);
                vals[m] = target;
                for x in 0..n {
                    r[(x, m)] = a[x];
                }
                paired[j] = true;
                paired[m] = true;
            }
        }
    }
}

/// Every decaying or oscillating mode is traceless because `vec(I)` is a left
/// zero mode. Near-degenerate slow modes mix with the stationary state in
/// floating point, so the exact property is restored by subtracting the
/// stationary component along the trace.
fn remove_trace_leak(vals: &[C64], r: &mut CMat, k: usize) {
    let n = r.nrows();
    let tr = |r: &CMat, j: usize| (0..k).map(|i| r[(i + k * i, j)]).sum::<C64>();
    let Some(z) = (0..vals.len())
        .filter(|&j| vals[j] == re(0.0))
        .max_by(|&a, &b| tr(r, a).norm().total_cmp(&tr(r, b).norm()))
    else {
        return;
    };
    let tz = tr(r, z);
    if tz.norm() == 0.0 {
        return;
    }
    for j in 0..vals.len() {
        if vals[j] != re(0.0) {
            let f = tr(r, j) / tz;
            for i in 0..n {
                let v = r[(i, z)];
                r[(i, j)] -= f * v;
            }
        }
    }
}

/// Evolves `rho0` to each of `times`.
pub fn evolve(model: &LindbladModel, rho0: &DensityMatrix, times: &[f64]) -> Result<Vec<DensityMatrix>> {
    Propagator::new(model)?.evolve(rho0, times)
}

fn sort_by_real_magnitude(v: &mut [C64]) {
    v.sort_by(|a, b| a.re.abs().total_cmp(&b.re.abs()).then(a.im.total_cmp(&b.im)));
}

/// The `m` Liouvillian eigenvalues of smallest `|Re|`.
pub fn lindblad_spectrum(model: &LindbladModel, m: usize) -> Result<Vec<C64>> {
    let mut v = linalg::eigvals(&liouvillian(model))?;
    sort_by_real_magnitude(&mut v);
    v.truncate(m);
    Ok(v)
}

/// Eigenvalues with `|Im| <= tol * |Re|`: the population relaxation modes.
pub fn real_eigenvalues(values: &[C64], tol: f64) -> Vec<f64> {
    let mut out: Vec<f64> = values.iter().filter(|l| l.im.abs() <= tol * l.re.abs().max(1e-300)).map(|l| l.re).collect();
    out.sort_by(|a, b| b.total_cmp(a));
    out
}
