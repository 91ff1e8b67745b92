//! Bosonic and rotor operator algebra.
//!
//! Every operator is a dense [`OperatorMatrix`] on one of three
//! representations described by [`BasisSpec`]: truncated Fock space, a
//! uniform flux grid, or the integer-charge basis of a rotor.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::circuits::CircuitParams;
use crate::error::{invalid, Error, Result};
use crate::linalg::{self, re, CMat, C64, I};

const HERMITIAN_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BasisSpec {
    Fock { dim: usize },
    FluxGrid { phi_min: f64, phi_max: f64, n_points: usize },
    Rotor { n_max: usize },
}

impl BasisSpec {
    pub fn fock(dim: usize) -> Result<Self> {
        let b = BasisSpec::Fock { dim };
        b.validate()?;
        Ok(b)
    }

    /// Symmetric grid on `[-phi_max, phi_max]`.
    pub fn flux_grid(phi_max: f64, n_points: usize) -> Result<Self> {
        let b = BasisSpec::FluxGrid { phi_min: -phi_max, phi_max, n_points };
        b.validate()?;
        Ok(b)
    }

    pub fn rotor(n_max: usize) -> Self {
        BasisSpec::Rotor { n_max }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            BasisSpec::Fock { dim } if dim < 2 => {
                Err(Error::InvalidBasis(format!("Fock dim must be >= 2, got {dim}")))
            }
            BasisSpec::FluxGrid { phi_min, phi_max, n_points } => {
                if n_points < 3 || n_points % 2 == 0 {
                    return Err(Error::InvalidBasis(format!(
                        "flux grid needs an odd number of points >= 3, got {n_points}"
                    )));
                }
                if !(phi_max > 0.0) || !phi_max.is_finite() {
                    return Err(Error::InvalidBasis(format!("phi_max must be positive, got {phi_max}")));
                }
                if (phi_min + phi_max).abs() > 1e-12 * phi_max {
                    return Err(Error::InvalidBasis(format!(
                        "flux grid must be symmetric, got [{phi_min}, {phi_max}]"
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            BasisSpec::Fock { dim } => dim,
            BasisSpec::FluxGrid { n_points, .. } => n_points,
            BasisSpec::Rotor { n_max } => 2 * n_max + 1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BasisSpec::Fock { .. } => "fock",
            BasisSpec::FluxGrid { .. } => "flux_grid",
            BasisSpec::Rotor { .. } => "rotor",
        }
    }

    /// Grid points of a flux grid.
    pub fn grid(&self) -> Option<Vec<f64>> {
        match *self {
            BasisSpec::FluxGrid { phi_max, n_points, .. } => {
                let half = (n_points / 2) as f64;
                let h = phi_max / half;
                Some((0..n_points).map(|i| (i as f64 - half) * h).collect())
            }
            _ => None,
        }
    }

    pub fn grid_spacing(&self) -> Option<f64> {
        match *self {
            BasisSpec::FluxGrid { phi_max, n_points, .. } => Some(phi_max / (n_points / 2) as f64),
            _ => None,
        }
    }

    /// Charge labels `-n_max..=n_max` of a rotor basis.
    pub fn charges(&self) -> Option<Vec<i64>> {
        match *self {
            BasisSpec::Rotor { n_max } => {
                let n = n_max as i64;
                Some((-n..=n).collect())
            }
            _ => None,
        }
    }

    fn unsupported(&self, op: &'static str) -> Error {
        Error::UnsupportedBasis { op, basis: self.name().to_string() }
    }
}

/// Dense square matrix with a hermiticity flag.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    entries: CMat,
    is_hermitian: bool,
}

impl OperatorMatrix {
    pub fn new(entries: CMat) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(Error::DimensionMismatch { expected: entries.nrows(), got: entries.ncols() });
        }
        Ok(Self { entries, is_hermitian: false })
    }

    /// Wraps `entries` and checks it is hermitian to relative precision 1e-12.
    pub fn hermitian(entries: CMat) -> Result<Self> {
        let mut op = Self::new(entries)?;
        let defect = op.hermiticity_defect();
        if defect > HERMITIAN_RTOL * linalg::max_abs(&op.entries).max(f64::MIN_POSITIVE) {
            return Err(Error::NotHermitian { defect });
        }
        op.is_hermitian = true;
        Ok(op)
    }

    pub(crate) fn hermitian_unchecked(entries: CMat) -> Self {
        Self { entries, is_hermitian: true }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMat {
        &self.entries
    }

    pub fn into_entries(self) -> CMat {
        self.entries
    }

    pub fn is_hermitian(&self) -> bool {
        self.is_hermitian
    }

    pub fn hermiticity_defect(&self) -> f64 {
        linalg::hermiticity_defect(&self.entries)
    }

    /// Re-checks the hermiticity invariant against the stored flag.
    pub fn verify_hermitian(&self) -> bool {
        self.hermiticity_defect() <= HERMITIAN_RTOL * linalg::max_abs(&self.entries).max(f64::MIN_POSITIVE)
    }

    pub fn adjoint(&self) -> Self {
        Self { entries: linalg::dagger(&self.entries), is_hermitian: self.is_hermitian }
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other.dim())?;
        Self::new(&self.entries * &other.entries)
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.check_dim(other.dim())?;
        Self::new(linalg::commutator(&self.entries, &other.entries))
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        linalg::mat_vec(&self.entries, v)
    }

    /// `<a|O|b>` for raw amplitude vectors.
    pub fn matrix_element(&self, a: &[C64], b: &[C64]) -> C64 {
        linalg::sandwich(a, &self.entries, b)
    }

    pub fn expectation(&self, state: &StateVector) -> Result<C64> {
        self.check_dim(state.dim())?;
        Ok(self.matrix_element(&state.amplitudes, &state.amplitudes))
    }

    /// Variance `<O^2> - <O>^2` of a hermitian operator.
    pub fn variance(&self, state: &StateVector) -> Result<f64> {
        self.check_dim(state.dim())?;
        let ov = self.apply(&state.amplitudes);
        let mean = linalg::vdot(&state.amplitudes, &ov).re;
        Ok(linalg::vdot(&ov, &ov).re - mean * mean)
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got });
        }
        Ok(())
    }
}

/// Normalized state in a given basis.
#[derive(Debug, Clone)]
pub struct StateVector {
    basis: BasisSpec,
    amplitudes: Vec<C64>,
}

impl StateVector {
    /// Normalizes `amplitudes`; fails on a zero vector or wrong length.
    pub fn new(basis: BasisSpec, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::DimensionMismatch { expected: basis.dim(), got: amplitudes.len() });
        }
        let n = linalg::norm(&amplitudes);
        if !(n > 0.0) || !n.is_finite() {
            return Err(invalid("amplitudes", "state vector has zero or non-finite norm"));
        }
        let amplitudes = amplitudes.into_iter().map(|a| a / n).collect();
        Ok(Self { basis, amplitudes })
    }

    pub fn basis_state(basis: BasisSpec, index: usize) -> Result<Self> {
        let mut v = vec![re(0.0); basis.dim()];
        *v.get_mut(index).ok_or(Error::DimensionMismatch { expected: basis.dim(), got: index })? = re(1.0);
        Self::new(basis, v)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn basis(&self) -> BasisSpec {
        self.basis
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn overlap(&self, other: &StateVector) -> C64 {
        linalg::vdot(&self.amplitudes, &other.amplitudes)
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.amplitudes)
    }
}

/// Real squeezed-coherent parameters `|alpha, theta> = D(alpha) S(theta) |vac>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezedAnsatz {
    pub alpha: f64,
    pub theta: f64,
}

impl SqueezedAnsatz {
    pub fn new(alpha: f64, theta: f64) -> Self {
        Self { alpha, theta }
    }

    /// `alpha * e^theta`, the codeword separation parameter.
    pub fn alpha_prime(&self) -> f64 {
        self.alpha * self.theta.exp()
    }
}

fn fock_dim(basis: &BasisSpec, op: &'static str) -> Result<usize> {
    basis.validate()?;
    match *basis {
        BasisSpec::Fock { dim } => Ok(dim),
        _ => Err(basis.unsupported(op)),
    }
}

fn lowering(dim: usize) -> CMat {
    CMat::from_fn(dim, dim, |i, j| if j == i + 1 { re((j as f64).sqrt()) } else { re(0.0) })
}

pub fn annihilation(basis: &BasisSpec) -> Result<OperatorMatrix> {
    OperatorMatrix::new(lowering(fock_dim(basis, "annihilation")?))
}

pub fn creation(basis: &BasisSpec) -> Result<OperatorMatrix> {
    Ok(annihilation(basis)?.adjoint())
}

pub fn number(basis: &BasisSpec) -> Result<OperatorMatrix> {
    let dim = fock_dim(basis, "number")?;
    let n: Vec<f64> = (0..dim).map(|k| k as f64).collect();
    Ok(OperatorMatrix::hermitian_unchecked(linalg::diag_real(&n)))
}

/// `D(alpha) = exp(alpha a^dag - alpha^* a)`.
pub fn displacement(alpha: C64, basis: &BasisSpec) -> Result<OperatorMatrix> {
    let dim = fock_dim(basis, "displacement")?;
    if alpha.norm_sqr() > dim as f64 / 4.0 {
        return Err(Error::Truncation {
            op: "displacement",
            suggested_dim: (4.0 * alpha.norm_sqr()).ceil() as usize,
        });
    }
    let a = lowering(dim);
    let ad = linalg::dagger(&a);
    let g = linalg::combine(&[(alpha, &ad), (-alpha.conj(), &a)]);
    OperatorMatrix::new(linalg::expm_antihermitian(&g)?)
}

/// `S(theta) = exp((theta^* a^2 - theta a^dag^2) / 2)`.
pub fn squeeze(theta: C64, basis: &BasisSpec) -> Result<OperatorMatrix> {
    let dim = fock_dim(basis, "squeeze")?;
    let guard = (2.0 * theta.norm()).exp();
    if guard > dim as f64 / 8.0 {
        return Err(Error::Truncation { op: "squeeze", suggested_dim: (8.0 * guard).ceil() as usize });
    }
    let a = lowering(dim);
    let a2 = &a * &a;
    let ad2 = linalg::dagger(&a2);
    let g = linalg::combine(&[(theta.conj() * 0.5, &a2), (-theta * 0.5, &ad2)]);
    OperatorMatrix::new(linalg::expm_antihermitian(&g)?)
}

/// `D(alpha) S(theta) |vac>` for complex parameters.
pub fn squeezed_coherent_state_complex(alpha: C64, theta: C64, basis: &BasisSpec) -> Result<StateVector> {
    let d = displacement(alpha, basis)?;
    let s = squeeze(theta, basis)?;
    let vac = linalg::column(s.entries(), 0);
    StateVector::new(*basis, d.apply(&vac))
}

pub fn squeezed_coherent_state(ansatz: &SqueezedAnsatz, basis: &BasisSpec) -> Result<StateVector> {
    squeezed_coherent_state_complex(re(ansatz.alpha), re(ansatz.theta), basis)
}

/// Flux and charge operators `(phi, n)`.
///
/// Fock: `phi = phi0 (a + a^dag)`, `n = i/(2 phi0) (a^dag - a)`.
/// Flux grid: `phi` diagonal, `n = -i d/dphi` by central differences.
pub fn flux_charge_ops(params: &CircuitParams, basis: &BasisSpec) -> Result<(OperatorMatrix, OperatorMatrix)> {
    basis.validate()?;
    match *basis {
        BasisSpec::Fock { dim } => {
            let phi0 = params.phi0();
            let a = lowering(dim);
            let ad = linalg::dagger(&a);
            let phi = linalg::combine(&[(re(phi0), &a), (re(phi0), &ad)]);
            let n0 = I / (2.0 * phi0);
            let n = linalg::combine(&[(n0, &ad), (-n0, &a)]);
            Ok((OperatorMatrix::hermitian(phi)?, OperatorMatrix::hermitian(n)?))
        }
        BasisSpec::FluxGrid { .. } => Ok((grid_flux(basis)?, grid_charge(basis)?)),
        _ => Err(basis.unsupported("flux_charge_ops")),
    }
}

pub(crate) fn grid_flux(basis: &BasisSpec) -> Result<OperatorMatrix> {
    let x = basis.grid().ok_or_else(|| basis.unsupported("grid_flux"))?;
    Ok(OperatorMatrix::hermitian_unchecked(linalg::diag_real(&x)))
}

pub(crate) fn grid_charge(basis: &BasisSpec) -> Result<OperatorMatrix> {
    let h = basis.grid_spacing().ok_or_else(|| basis.unsupported("grid_charge"))?;
    let n = basis.dim();
    let c = 1.0 / (2.0 * h);
    Ok(OperatorMatrix::hermitian_unchecked(CMat::from_fn(n, n, |i, j| {
        if j == i + 1 {
            -I * c
        } else if i == j + 1 {
            I * c
        } else {
            re(0.0)
        }
    })))
}

/// Photon-number parity in Fock space, reflection on a flux grid, Cooper-pair
/// parity on a rotor.
pub fn parity(basis: &BasisSpec) -> Result<OperatorMatrix> {
    basis.validate()?;
    let n = basis.dim();
    let m = match *basis {
        BasisSpec::Fock { .. } => {
            let d: Vec<f64> = (0..n).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 }).collect();
            linalg::diag_real(&d)
        }
        BasisSpec::FluxGrid { .. } => CMat::from_fn(n, n, |i, j| if i + j == n - 1 { re(1.0) } else { re(0.0) }),
        BasisSpec::Rotor { .. } => {
            let d: Vec<f64> = basis.charges().unwrap().iter().map(|&q| if q % 2 == 0 { 1.0 } else { -1.0 }).collect();
            linalg::diag_real(&d)
        }
    };
    Ok(OperatorMatrix::hermitian_unchecked(m))
}

/// Trigonometric functions of the rotor phase together with its charge.
#[derive(Debug, Clone)]
pub struct RotorOps {
    pub cos_theta: OperatorMatrix,
    pub sin_theta: OperatorMatrix,
    pub cos_2theta: OperatorMatrix,
    pub sin_2theta: OperatorMatrix,
    pub n_op: OperatorMatrix,
}

/// `e^{i k theta}` raises the charge by `k`; shifts past the cutoff are dropped.
fn charge_shift(dim: usize, k: usize, c: C64) -> CMat {
    CMat::from_fn(dim, dim, |i, j| if i == j + k { c } else { re(0.0) })
}

fn cos_sin_k(dim: usize, k: usize) -> (CMat, CMat) {
    let up = charge_shift(dim, k, re(1.0));
    let down = linalg::dagger(&up);
    let cos = linalg::combine(&[(re(0.5), &up), (re(0.5), &down)]);
    let sin = linalg::combine(&[(-I * 0.5, &up), (I * 0.5, &down)]);
    (cos, sin)
}

pub fn rotor_trig_ops(basis: &BasisSpec) -> Result<RotorOps> {
    let charges = basis.charges().ok_or_else(|| basis.unsupported("rotor_trig_ops"))?;
    let dim = charges.len();
    let (c1, s1) = cos_sin_k(dim, 1);
    let (c2, s2) = cos_sin_k(dim, 2);
    let n: Vec<f64> = charges.iter().map(|&q| q as f64).collect();
    Ok(RotorOps {
        cos_theta: OperatorMatrix::hermitian_unchecked(c1),
        sin_theta: OperatorMatrix::hermitian_unchecked(s1),
        cos_2theta: OperatorMatrix::hermitian_unchecked(c2),
        sin_2theta: OperatorMatrix::hermitian_unchecked(s2),
        n_op: OperatorMatrix::hermitian_unchecked(linalg::diag_real(&n)),
    })
}

/// Interval `[lo, hi)` of flux or phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub lo: f64,
    pub hi: f64,
}

impl Region {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(invalid("region", format!("empty or non-finite interval [{lo}, {hi})")));
        }
        Ok(Self { lo, hi })
    }
}

/// Projector onto a flux (grid) or phase (rotor) interval.
///
/// On a grid a point belongs to `[lo, hi)`; the top grid point is included
/// when `hi` reaches the grid edge, so complementary regions sum to identity.
/// On a rotor `Pi_nm = (1/2pi) int e^{-i(n-m)theta} dtheta` with the
/// convention `<theta|n> = e^{i n theta}/sqrt(2pi)`.
pub fn well_projector(basis: &BasisSpec, region: &Region) -> Result<OperatorMatrix> {
    let region = Region::new(region.lo, region.hi)?;
    basis.validate()?;
    match *basis {
        BasisSpec::FluxGrid { phi_max, .. } => {
            if region.lo > phi_max || region.hi < -phi_max {
                return Err(invalid("region", "interval lies outside the flux grid"));
            }
            let x = basis.grid().unwrap();
            let tol = 1e-12 * phi_max;
            let d: Vec<f64> = x
                .iter()
                .map(|&p| {
                    let inside = p >= region.lo - tol && (p < region.hi - tol || region.hi >= phi_max - tol);
                    if inside {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect();
            if d.iter().all(|&v| v == 0.0) {
                return Err(invalid("region", "no grid points inside the interval"));
            }
            Ok(OperatorMatrix::hermitian_unchecked(linalg::diag_real(&d)))
        }
        BasisSpec::Rotor { .. } => {
            let q = basis.charges().unwrap();
            let dim = q.len();
            let (a, b) = (region.lo, region.hi);
            let m = CMat::from_fn(dim, dim, |i, j| {
                let dq = (q[i] - q[j]) as f64;
                if dq == 0.0 {
                    re((b - a) / (2.0 * PI))
                } else {
                    ((-I * dq * b).exp() - (-I * dq * a).exp()) / (-I * dq * 2.0 * PI)
                }
            });
            Ok(OperatorMatrix::hermitian_unchecked(linalg::hermitize(&m)))
        }
        _ => Err(basis.unsupported("well_projector")),
    }
}

/// Spectral projector of a hermitian operator onto eigenvalues in `[lo, hi)`.
///
/// Used for flux regions in Fock space, where `phi` is not diagonal.
pub fn spectral_projector(op: &OperatorMatrix, region: &Region) -> Result<OperatorMatrix> {
    let region = Region::new(region.lo, region.hi)?;
    let m = linalg::hermitian_function_real(op.entries(), |x| {
        if x >= region.lo && x < region.hi {
            1.0
        } else {
            0.0
        }
    })?;
    Ok(OperatorMatrix::hermitian_unchecked(m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fock(d: usize) -> BasisSpec {
        BasisSpec::fock(d).unwrap()
    }

    fn block_max(m: &CMat, n: usize, f: impl Fn(usize, usize) -> C64) -> f64 {
        let mut e = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                e = e.max((m[(i, j)] - f(i, j)).norm());
            }
        }
        e
    }

    fn unitarity_defect(u: &CMat) -> f64 {
        let p = u.adjoint() * u;
        linalg::max_abs(&(&p - &linalg::identity(u.nrows())))
    }

    #[test]
    fn basis_validation() {
        assert!(BasisSpec::fock(1).is_err());
        assert!(BasisSpec::flux_grid(6.0, 4).is_err());
        assert!(BasisSpec::flux_grid(6.0, 1).is_err());
        assert!(BasisSpec::FluxGrid { phi_min: -1.0, phi_max: 2.0, n_points: 5 }.validate().is_err());
        assert_eq!(BasisSpec::rotor(3).dim(), 7);
        let g = BasisSpec::flux_grid(2.0, 5).unwrap().grid().unwrap();
        assert_eq!(g, vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
    }

    #[test]
    fn annihilation_two_level() {
        let a = annihilation(&fock(2)).unwrap();
        let m = a.entries();
        assert_eq!(m[(0, 1)], re(1.0));
        assert_eq!(m[(0, 0)], re(0.0));
        assert_eq!(m[(1, 0)], re(0.0));
        assert_eq!(m[(1, 1)], re(0.0));
        assert!(!a.is_hermitian());
    }

    #[test]
    fn number_operator_diagonal() {
        let a = annihilation(&fock(4)).unwrap();
        let n = a.adjoint().matmul(&a).unwrap();
        for k in 0..4 {
            assert!((n.entries()[(k, k)] - re(k as f64)).norm() < 1e-15);
        }
    }

    #[test]
    fn canonical_commutator_block() {
        let a = annihilation(&fock(50)).unwrap();
        let c = a.commutator(&a.adjoint()).unwrap();
        let e = block_max(c.entries(), 49, |i, j| if i == j { re(1.0) } else { re(0.0) });
        assert!(e <= 1e-12);
    }

    #[test]
    fn non_fock_annihilation_rejected() {
        let r = annihilation(&BasisSpec::rotor(2));
        assert!(matches!(r, Err(Error::UnsupportedBasis { .. })));
    }

    #[test]
    fn displacement_examples() {
        let d0 = displacement(re(0.0), &fock(10)).unwrap();
        assert!(linalg::max_abs(&(d0.entries() - linalg::identity(10))) < 1e-14);

        let b = fock(40);
        let d = displacement(re(1.0), &b).unwrap();
        let a = annihilation(&b).unwrap();
        let st = StateVector::new(b, linalg::column(d.entries(), 0)).unwrap();
        assert!((a.expectation(&st).unwrap() - re(1.0)).norm() < 1e-8);
        assert!(unitarity_defect(d.entries()) < 1e-9);

        let b = fock(60);
        let d = displacement(C64::new(0.0, 2.0), &b).unwrap();
        let p = d.entries()[(0, 0)].norm_sqr();
        assert!((p - (-4.0f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn displacement_guard() {
        match displacement(re(4.0), &fock(40)) {
            Err(Error::Truncation { suggested_dim, .. }) => assert_eq!(suggested_dim, 64),
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn squeeze_examples() {
        let s0 = squeeze(re(0.0), &fock(10)).unwrap();
        assert!(linalg::max_abs(&(s0.entries() - linalg::identity(10))) < 1e-14);

        let b = fock(60);
        let s = squeeze(re(0.5), &b).unwrap();
        assert!(unitarity_defect(s.entries()) < 1e-9);
        let st = StateVector::new(b, linalg::column(s.entries(), 0)).unwrap();
        let a = annihilation(&b).unwrap().into_entries();
        let ad = linalg::dagger(&a);
        let x = OperatorMatrix::hermitian(linalg::combine(&[(re(1.0), &a), (re(1.0), &ad)])).unwrap();
        let p = OperatorMatrix::hermitian(linalg::combine(&[(I, &ad), (-I, &a)])).unwrap();
        assert!((x.variance(&st).unwrap() - (-1.0f64).exp()).abs() < 1e-6);
        assert!((p.variance(&st).unwrap() - 1.0f64.exp()).abs() < 1e-6);
        assert!(squeeze(re(2.0), &fock(60)).is_err());
    }

    #[test]
    fn squeezed_coherent_examples() {
        let b = fock(80);
        let vac = squeezed_coherent_state(&SqueezedAnsatz::new(0.0, 0.0), &b).unwrap();
        assert!((vac.amplitudes()[0] - re(1.0)).norm() < 1e-14);

        let st = squeezed_coherent_state(&SqueezedAnsatz::new(1.3207, 1.151), &b).unwrap();
        let a = annihilation(&b).unwrap().into_entries();
        let x = OperatorMatrix::hermitian(&a + &linalg::dagger(&a)).unwrap();
        assert!((x.expectation(&st).unwrap().re - 2.0 * 1.3207).abs() < 1e-6);

        let (al, th) = (0.5, 0.3);
        let p = squeezed_coherent_state(&SqueezedAnsatz::new(al, th), &b).unwrap();
        let m = squeezed_coherent_state(&SqueezedAnsatz::new(-al, th), &b).unwrap();
        let expect = (-2.0 * (al * f64::exp(th)).powi(2)).exp();
        assert!((m.overlap(&p).norm() - expect).abs() < 1e-6);
    }

    #[test]
    fn flux_charge_examples() {
        let params = CircuitParams::new(1.0, 1.0, 1.0, PI).unwrap();
        assert!((params.phi0() - 2f64.powf(0.25)).abs() < 1e-12);
        let (phi, _) = flux_charge_ops(&params, &fock(2)).unwrap();
        let m = phi.entries();
        assert!((m[(0, 1)] - re(params.phi0())).norm() < 1e-15);
        assert!((m[(1, 0)] - re(params.phi0())).norm() < 1e-15);
        assert_eq!(m[(0, 0)], re(0.0));

        let b = fock(80);
        let (phi, n) = flux_charge_ops(&params, &b).unwrap();
        let c = phi.commutator(&n).unwrap();
        let e = block_max(c.entries(), 79, |i, j| if i == j { I } else { re(0.0) });
        assert!(e < 1e-10);

        let st = squeezed_coherent_state(&SqueezedAnsatz::new(1.0, 0.4), &b).unwrap();
        assert!((phi.expectation(&st).unwrap().re - 2.0 * params.phi0()).abs() < 1e-6);
    }

    #[test]
    fn parity_examples() {
        let p = parity(&fock(3)).unwrap();
        let d: Vec<f64> = (0..3).map(|k| p.entries()[(k, k)].re).collect();
        assert_eq!(d, vec![1.0, -1.0, 1.0]);

        let g = BasisSpec::flux_grid(1.0, 5).unwrap();
        let p = parity(&g).unwrap();
        for i in 0..5 {
            assert_eq!(p.entries()[(i, 4 - i)], re(1.0));
        }
        for b in [fock(7), g, BasisSpec::rotor(3)] {
            let p = parity(&b).unwrap();
            let pp = p.matmul(&p).unwrap();
            assert_eq!(linalg::max_abs(&(pp.entries() - linalg::identity(b.dim()))), 0.0);
        }
    }

    #[test]
    fn parity_conjugation_is_exact() {
        let b = fock(12);
        let p = parity(&b).unwrap();
        let a = annihilation(&b).unwrap();
        let pap = p.matmul(&a).unwrap().matmul(&p).unwrap();
        assert_eq!(linalg::max_abs(&(pap.entries() + a.entries())), 0.0);

        let g = BasisSpec::flux_grid(4.0 * PI, 41).unwrap();
        let p = parity(&g).unwrap();
        let phi = grid_flux(&g).unwrap();
        let pfp = p.matmul(&phi).unwrap().matmul(&p).unwrap();
        assert!(linalg::max_abs(&(pfp.entries() + phi.entries())) < 1e-14);
    }

    #[test]
    fn rotor_examples() {
        let ops = rotor_trig_ops(&BasisSpec::rotor(1)).unwrap();
        let c = ops.cos_theta.entries();
        assert_eq!(c[(0, 1)], re(0.5));
        assert_eq!(c[(1, 2)], re(0.5));
        assert_eq!(c[(1, 0)], re(0.5));
        assert_eq!(c[(0, 2)], re(0.0));

        let ops = rotor_trig_ops(&BasisSpec::rotor(4)).unwrap();
        let comm = ops.n_op.commutator(&ops.cos_theta).unwrap();
        let target = linalg::scale(ops.sin_theta.entries(), I);
        assert!(linalg::max_abs(&(comm.entries() - &target)) < 1e-12);

        let q = BasisSpec::rotor(4).charges().unwrap();
        let c2 = ops.cos_2theta.entries();
        for i in 0..q.len() {
            for j in 0..q.len() {
                if c2[(i, j)] != re(0.0) {
                    assert_eq!((q[i] - q[j]).rem_euclid(2), 0);
                }
            }
        }
    }

    #[test]
    fn projector_examples() {
        let g = BasisSpec::flux_grid(2.0 * PI, 21).unwrap();
        let full = well_projector(&g, &Region::new(-2.0 * PI, 2.0 * PI).unwrap()).unwrap();
        assert_eq!(linalg::max_abs(&(full.entries() - linalg::identity(21))), 0.0);

        let p0 = well_projector(&BasisSpec::rotor(0), &Region::new(-PI / 2.0, PI / 2.0).unwrap()).unwrap();
        assert!((p0.entries()[(0, 0)] - re(0.5)).norm() < 1e-15);

        let b = BasisSpec::rotor(6);
        let p = well_projector(&b, &Region::new(PI / 2.0, 1.5 * PI).unwrap()).unwrap();
        assert!((linalg::trace(p.entries()).re - b.dim() as f64 / 2.0).abs() < 1e-10);
        assert!(Region::new(1.0, 1.0).is_err());
    }

    #[test]
    fn projector_complementarity_on_grid() {
        let g = BasisSpec::flux_grid(2.0 * PI, 41).unwrap();
        let r = well_projector(&g, &Region::new(0.0, 2.0 * PI).unwrap()).unwrap();
        let l = well_projector(&g, &Region::new(-2.0 * PI, 0.0).unwrap()).unwrap();
        let sum = r.entries() + l.entries();
        assert_eq!(linalg::max_abs(&(&sum - &linalg::identity(41))), 0.0);
        let rr = r.matmul(&r).unwrap();
        assert_eq!(linalg::max_abs(&(rr.entries() - r.entries())), 0.0);
    }

    #[test]
    fn rotor_projector_idempotent_in_the_limit() {
        // Truncated rotor projectors are idempotent only up to edge effects;
        // the defect shrinks as the cutoff grows.
        let region = Region::new(-PI / 2.0, PI / 2.0).unwrap();
        let defect = |n: usize| {
            let p = well_projector(&BasisSpec::rotor(n), &region).unwrap();
            let pp = p.matmul(&p).unwrap();
            let mid = n;
            (pp.entries()[(mid, mid)] - p.entries()[(mid, mid)]).norm()
        };
        assert!(defect(200) < defect(20));
        assert!(defect(200) < 2e-3);
        let b = BasisSpec::rotor(10);
        let p = well_projector(&b, &region).unwrap();
        let q = well_projector(&b, &Region::new(PI / 2.0, 1.5 * PI).unwrap()).unwrap();
        let s = p.entries() + q.entries();
        assert!(linalg::max_abs(&(&s - &linalg::identity(b.dim()))) < 1e-12);
    }

    #[test]
    fn spectral_projector_splits_fock_space() {
        let params = CircuitParams::new(0.5, 0.5, 1.0, PI).unwrap();
        let b = fock(30);
        let (phi, _) = flux_charge_ops(&params, &b).unwrap();
        let r = spectral_projector(&phi, &Region::new(0.0, 1e300).unwrap()).unwrap();
        let l = spectral_projector(&phi, &Region::new(-1e300, 0.0).unwrap()).unwrap();
        let s = r.entries() + l.entries();
        assert!(linalg::max_abs(&(&s - &linalg::identity(30))) < 1e-12);
        assert!((linalg::trace(r.entries()).re - 15.0).abs() < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn overlap_law(alpha in 0.0f64..1.6, theta in -0.4f64..0.6) {
            prop_assume!(alpha * theta.exp() <= 2.0);
            let b = fock(80);
            let p = squeezed_coherent_state(&SqueezedAnsatz::new(alpha, theta), &b).unwrap();
            let m = squeezed_coherent_state(&SqueezedAnsatz::new(-alpha, theta), &b).unwrap();
            let expect = (-2.0 * (alpha * theta.exp()).powi(2)).exp();
            prop_assert!((m.overlap(&p).re - expect).abs() <= 1e-5);
        }

        #[test]
        fn displacement_and_squeeze_unitary(ar in -2.0f64..2.0, ai in -2.0f64..2.0, t in -0.4f64..0.4) {
            let b = fock(40);
            let d = displacement(C64::new(ar, ai), &b).unwrap();
            prop_assert!(unitarity_defect(d.entries()) <= 1e-9);
            let s = squeeze(C64::new(t, 0.3 * t), &b).unwrap();
            prop_assert!(unitarity_defect(s.entries()) <= 1e-9);
        }

        #[test]
        fn state_vectors_are_normalized(v in proptest::collection::vec(-5.0f64..5.0, 6)) {
            prop_assume!(v.iter().any(|x| x.abs() > 1e-3));
            let amps = v.iter().map(|&x| C64::new(x, 0.5 * x)).collect();
            let st = StateVector::new(fock(6), amps).unwrap();
            prop_assert!((st.norm() - 1.0).abs() <= 1e-10);
        }
    }
}
