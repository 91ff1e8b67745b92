//! Circuit Hamiltonians and their diagonalization.
//!
//! Energies are in h·GHz throughout. Fluxonium comes in two representations
//! that must agree: Fock space around the harmonic part, and a flux grid.
//! The flux-grid form keeps the zero-point energy `hbar_omega / 2` that the
//! Fock form drops.

use std::f64::consts::PI;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, re, CMat, C64};
use crate::operators::{self, BasisSpec, OperatorMatrix, Region};

/// Fluxonium energies (h·GHz) and external flux (rad).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    pub e_c: f64,
    pub e_l: f64,
    pub e_j: f64,
    pub phi_e: f64,
}

impl CircuitParams {
    /// `e_c` and `e_l` must be positive; `e_j` may be zero (harmonic limit).
    pub fn new(e_c: f64, e_l: f64, e_j: f64, phi_e: f64) -> Result<Self> {
        let p = Self { e_c, e_l, e_j, phi_e };
        p.validate()?;
        Ok(p)
    }

    /// Parameters at the sweet spot `phi_e = pi`.
    pub fn sweet_spot(e_c: f64, e_l: f64, e_j: f64) -> Result<Self> {
        Self::new(e_c, e_l, e_j, PI)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.e_c > 0.0 && self.e_c.is_finite()) {
            return Err(invalid("e_c", format!("must be positive, got {}", self.e_c)));
        }
        if !(self.e_l > 0.0 && self.e_l.is_finite()) {
            return Err(invalid("e_l", format!("must be positive, got {}", self.e_l)));
        }
        if !(self.e_j >= 0.0 && self.e_j.is_finite()) {
            return Err(invalid("e_j", format!("must be non-negative, got {}", self.e_j)));
        }
        if !self.phi_e.is_finite() {
            return Err(invalid("phi_e", "must be finite"));
        }
        Ok(())
    }

    pub fn phi0(&self) -> f64 {
        (2.0 * self.e_c / self.e_l).powf(0.25)
    }

    pub fn hbar_omega(&self) -> f64 {
        (8.0 * self.e_l * self.e_c).sqrt()
    }

    /// Angular frequency of the harmonic part in rad/ns.
    pub fn omega(&self) -> f64 {
        2.0 * PI * self.hbar_omega()
    }

    /// Deviation from the sweet spot.
    pub fn delta_phi_e(&self) -> f64 {
        self.phi_e - PI
    }

    pub fn with_e_j(self, e_j: f64) -> Self {
        Self { e_j, ..self }
    }

    pub fn with_phi_e(self, phi_e: f64) -> Self {
        Self { phi_e, ..self }
    }
}

/// Parameters of the cos(2θ) rotor qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cos2ThetaParams {
    pub e_j2: f64,
    pub e_j1: f64,
    pub e_c: f64,
    pub phi_e: f64,
    pub n_e: f64,
}

impl Cos2ThetaParams {
    pub fn new(e_j2: f64, e_j1: f64, e_c: f64, phi_e: f64, n_e: f64) -> Result<Self> {
        let p = Self { e_j2, e_j1, e_c, phi_e, n_e };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.e_j2 > 0.0 && self.e_j2.is_finite()) {
            return Err(invalid("e_j2", format!("must be positive, got {}", self.e_j2)));
        }
        if !(self.e_j1 >= 0.0 && self.e_j1.is_finite()) {
            return Err(invalid("e_j1", format!("must be non-negative, got {}", self.e_j1)));
        }
        if !(self.e_c > 0.0 && self.e_c.is_finite()) {
            return Err(invalid("e_c", format!("must be positive, got {}", self.e_c)));
        }
        if !self.phi_e.is_finite() || !self.n_e.is_finite() {
            return Err(invalid("phi_e", "phi_e and n_e must be finite"));
        }
        Ok(())
    }
}

/// Lowest `k` eigenpairs of a hermitian matrix.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub energies: Vec<f64>,
    /// Eigenvectors as columns, `dim x k`.
    pub states: CMat,
    pub basis: Option<BasisSpec>,
}

impl EigenSystem {
    pub fn k(&self) -> usize {
        self.energies.len()
    }

    pub fn dim(&self) -> usize {
        self.states.nrows()
    }

    pub fn state(&self, j: usize) -> Vec<C64> {
        linalg::column(&self.states, j)
    }

    /// `E_j - E_0`.
    pub fn gap(&self, j: usize) -> f64 {
        self.energies[j] - self.energies[0]
    }

    /// Matrix `<i|O|j>` of an operator in the retained eigenbasis.
    pub fn project(&self, op: &OperatorMatrix) -> Result<CMat> {
        if op.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: op.dim() });
        }
        let ov = op.entries() * &self.states;
        Ok(self.states.adjoint() * &ov)
    }

    /// Diagonal expectations `<j|O|j>`.
    pub fn expectations(&self, op: &OperatorMatrix) -> Result<Vec<f64>> {
        let m = self.project(op)?;
        Ok((0..self.k()).map(|j| m[(j, j)].re).collect())
    }

    pub fn with_basis(mut self, basis: BasisSpec) -> Self {
        self.basis = Some(basis);
        self
    }

    /// Largest `||H v - e v||` over the retained pairs.
    pub fn residual(&self, h: &OperatorMatrix) -> f64 {
        (0..self.k())
            .map(|j| {
                let v = self.state(j);
                let hv = h.apply(&v);
                let r: Vec<C64> = hv.iter().zip(&v).map(|(a, b)| a - b * self.energies[j]).collect();
                linalg::norm(&r)
            })
            .fold(0.0, f64::max)
    }
}

/// Lowest `k` eigenpairs, with the largest-magnitude entry of each vector
/// made real and positive (first such entry on ties).
pub fn eigensystem(h: &OperatorMatrix, k: usize) -> Result<EigenSystem> {
    let scale = linalg::max_abs(h.entries()).max(f64::MIN_POSITIVE);
    let defect = h.hermiticity_defect();
    if defect > 1e-10 * scale {
        return Err(Error::NotHermitian { defect });
    }
    if k == 0 || k > h.dim() {
        return Err(invalid("k", format!("need 1 <= k <= {}, got {k}", h.dim())));
    }
    let (w, v) = linalg::eigh(h.entries())?;
    let dim = h.dim();
    let mut states = CMat::zeros(dim, k);
    for j in 0..k {
        let mut best = 0;
        let mut best_abs = -1.0;
        for i in 0..dim {
            let a = v[(i, j)].norm();
            if a > best_abs * (1.0 + 1e-10) {
                best = i;
                best_abs = a;
            }
        }
        let phase = v[(best, j)].conj() / best_abs;
        for i in 0..dim {
            states[(i, j)] = v[(i, j)] * phase;
        }
    }
    Ok(EigenSystem { energies: w[..k].to_vec(), states, basis: None })
}

/// Fluxonium in Fock space: `hbar_omega a^dag a + E_j cos(phi0 (a + a^dag) + delta)`
/// with `delta = phi_e - pi`; the cosine is built by functional calculus.
pub fn fluxonium_fock(params: &CircuitParams, basis: &BasisSpec) -> Result<OperatorMatrix> {
    params.validate()?;
    let dim = match *basis {
        BasisSpec::Fock { dim } => dim,
        _ => return Err(Error::UnsupportedBasis { op: "fluxonium_fock", basis: basis.name().into() }),
    };
    basis.validate()?;
    let (phi, _) = operators::flux_charge_ops(params, basis)?;
    let d = params.delta_phi_e();
    let cos = linalg::hermitian_function_real(phi.entries(), |x| (x + d).cos())?;
    let hw = params.hbar_omega();
    let ej = params.e_j;
    let h = CMat::from_fn(dim, dim, |i, j| {
        let diag = if i == j { re(hw * i as f64) } else { re(0.0) };
        diag + cos[(i, j)] * ej
    });
    Ok(OperatorMatrix::hermitian_unchecked(h))
}

/// Fluxonium on a flux grid:
/// `-4 E_c d^2/dphi^2 + E_l (phi - delta)^2 / 2 + E_j cos(phi)`,
/// three-point Laplacian with Dirichlet boundaries.
pub fn fluxonium_flux(params: &CircuitParams, basis: &BasisSpec) -> Result<OperatorMatrix> {
    params.validate()?;
    basis.validate()?;
    let (x, h) = match (basis.grid(), basis.grid_spacing()) {
        (Some(x), Some(h)) => (x, h),
        _ => return Err(Error::UnsupportedBasis { op: "fluxonium_flux", basis: basis.name().into() }),
    };
    if x[x.len() - 1] < 2.0 * PI - 1e-9 {
        return Err(Error::InvalidBasis(format!(
            "flux grid must cover [-2pi, 2pi], got half-width {}",
            x[x.len() - 1]
        )));
    }
    let n = x.len();
    let kin = 4.0 * params.e_c / (h * h);
    let d = params.delta_phi_e();
    let m = CMat::from_fn(n, n, |i, j| {
        if i == j {
            let p = x[i];
            re(2.0 * kin + 0.5 * params.e_l * (p - d) * (p - d) + params.e_j * p.cos())
        } else if i + 1 == j || j + 1 == i {
            re(-kin)
        } else {
            re(0.0)
        }
    });
    Ok(OperatorMatrix::hermitian_unchecked(m))
}

/// Fluxonium in whichever of the two supported representations `basis` names.
pub fn fluxonium_hamiltonian(params: &CircuitParams, basis: &BasisSpec) -> Result<OperatorMatrix> {
    match basis {
        BasisSpec::Fock { .. } => fluxonium_fock(params, basis),
        BasisSpec::FluxGrid { .. } => fluxonium_flux(params, basis),
        _ => Err(Error::UnsupportedBasis { op: "fluxonium_hamiltonian", basis: basis.name().into() }),
    }
}

/// Ground-state weight on the top 10% of Fock levels.
pub fn fock_tail_weight(eig: &EigenSystem) -> f64 {
    let dim = eig.dim();
    let start = dim - (dim / 10).max(1);
    (start..dim).map(|i| eig.states[(i, 0)].norm_sqr()).sum()
}

/// Ground-state weight on the two outermost charge states of a rotor.
pub fn rotor_edge_weight(eig: &EigenSystem) -> f64 {
    let dim = eig.dim();
    eig.states[(0, 0)].norm_sqr() + eig.states[(dim - 1, 0)].norm_sqr()
}

fn check_truncation(eig: &EigenSystem, basis: &BasisSpec) {
    match basis {
        BasisSpec::Fock { dim } => {
            let tail = fock_tail_weight(eig);
            if tail > 1e-8 {
                warn!("Fock truncation: ground-state weight {tail:.2e} on the top levels of dim {dim}");
            }
        }
        BasisSpec::Rotor { n_max } => {
            let edge = rotor_edge_weight(eig);
            if edge > 1e-8 {
                warn!("rotor cutoff: ground-state weight {edge:.2e} at |n| = {n_max}");
            }
        }
        _ => {}
    }
}

/// Diagonalizes fluxonium, logging a warning when the basis is too small.
pub fn fluxonium_eigensystem(params: &CircuitParams, basis: &BasisSpec, k: usize) -> Result<EigenSystem> {
    let h = fluxonium_hamiltonian(params, basis)?;
    let eig = eigensystem(&h, k)?.with_basis(*basis);
    check_truncation(&eig, basis);
    Ok(eig)
}

/// `eps_{0j} = E_j - E_0`.
pub fn splitting(params: &CircuitParams, basis: &BasisSpec, j: usize) -> Result<f64> {
    let eig = fluxonium_eigensystem(params, basis, j + 1)?;
    Ok(eig.gap(j))
}

/// Relative change of `eps_01` when the grid or Fock dimension is doubled.
pub fn convergence_shift(params: &CircuitParams, basis: &BasisSpec) -> Result<f64> {
    let finer = match *basis {
        BasisSpec::Fock { dim } => BasisSpec::Fock { dim: 2 * dim },
        BasisSpec::FluxGrid { phi_min, phi_max, n_points } => {
            BasisSpec::FluxGrid { phi_min, phi_max, n_points: 2 * n_points - 1 }
        }
        BasisSpec::Rotor { .. } => {
            return Err(Error::UnsupportedBasis { op: "convergence_shift", basis: basis.name().into() })
        }
    };
    let a = splitting(params, basis, 1)?;
    let b = splitting(params, &finer, 1)?;
    Ok((a - b).abs() / b.abs().max(f64::MIN_POSITIVE))
}

/// `-E_j2 cos 2θ - E_j1 cos(θ - φ_e) + 4 E_c (n - n_e)^2` in the charge basis.
pub fn cos2theta_hamiltonian(params: &Cos2ThetaParams, basis: &BasisSpec) -> Result<OperatorMatrix> {
    params.validate()?;
    let ops = operators::rotor_trig_ops(basis)?;
    let q = basis.charges().unwrap();
    let dim = q.len();
    let (c1, s1, c2) = (ops.cos_theta.entries(), ops.sin_theta.entries(), ops.cos_2theta.entries());
    let (cp, sp) = (params.phi_e.cos(), params.phi_e.sin());
    let m = CMat::from_fn(dim, dim, |i, j| {
        let mut v = c2[(i, j)] * (-params.e_j2) - (c1[(i, j)] * cp + s1[(i, j)] * sp) * params.e_j1;
        if i == j {
            let dn = q[i] as f64 - params.n_e;
            v += re(4.0 * params.e_c * dn * dn);
        }
        v
    });
    Ok(OperatorMatrix::hermitian_unchecked(linalg::hermitize(&m)))
}

pub fn cos2theta_eigensystem(params: &Cos2ThetaParams, basis: &BasisSpec, k: usize) -> Result<EigenSystem> {
    let h = cos2theta_hamiltonian(params, basis)?;
    let eig = eigensystem(&h, k)?.with_basis(*basis);
    check_truncation(&eig, basis);
    Ok(eig)
}

/// Root of Kepler's equation `-Q/2 = x + r sin(2 pi x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeplerRoot {
    pub x: f64,
    pub residual: f64,
    /// More than one root exists for this input.
    pub multiple_roots: bool,
}

fn kepler_f(x: f64, q: f64, r: f64) -> f64 {
    x + r * (2.0 * PI * x).sin() + 0.5 * q
}

fn kepler_df(x: f64, r: f64) -> f64 {
    1.0 + 2.0 * PI * r * (2.0 * PI * x).cos()
}

/// Root in a sign-changing bracket: bisection with Newton steps when they stay inside.
fn kepler_bracketed(mut lo: f64, mut hi: f64, q: f64, r: f64) -> f64 {
    let mut flo = kepler_f(lo, q, r);
    if flo == 0.0 {
        return lo;
    }
    if kepler_f(hi, q, r) == 0.0 {
        return hi;
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = kepler_f(x, q, r);
        if fx == 0.0 {
            return x;
        }
        if (fx < 0.0) == (flo < 0.0) {
            lo = x;
            flo = fx;
        } else {
            hi = x;
        }
        let d = kepler_df(x, r);
        let newton = x - fx / d;
        x = if d != 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
            break;
        }
    }
    x
}

/// All roots in the window `[-Q/2 - r, -Q/2 + r]`, which contains every root.
fn kepler_roots(q: f64, r: f64) -> Vec<f64> {
    let (lo, hi) = (-0.5 * q - r, -0.5 * q + r);
    if r == 0.0 {
        return vec![-0.5 * q];
    }
    let n = 64 + (400.0 * r).ceil() as usize;
    let step = (hi - lo) / n as f64;
    let mut roots: Vec<f64> = Vec::new();
    let mut a = lo;
    let mut fa = kepler_f(a, q, r);
    for i in 1..=n {
        let b = if i == n { hi } else { lo + i as f64 * step };
        let fb = kepler_f(b, q, r);
        if fa == 0.0 || (fa < 0.0) != (fb < 0.0) {
            let x = kepler_bracketed(a, b, q, r);
            if roots.last().is_none_or(|&p| (x - p).abs() > 1e-12) {
                roots.push(x);
            }
        }
        a = b;
        fa = fb;
    }
    roots
}

/// Solves Kepler's equation for `x = q_{e,2} / 2e`.
///
/// With `2 pi r < 1` the root is unique. Otherwise the branch is followed by
/// continuation in `Q` from `Q = 0`, where `x = 0`, keeping the root nearest
/// the previous one. The result is exactly odd in `q_sum`.
pub fn kepler_solve(q_sum: f64, ratio: f64) -> Result<KeplerRoot> {
    if !(ratio >= 0.0) || !ratio.is_finite() {
        return Err(invalid("ratio", format!("must be non-negative, got {ratio}")));
    }
    if !q_sum.is_finite() {
        return Err(invalid("q_sum", "must be finite"));
    }
    let q = q_sum.abs();
    let sign = if q_sum < 0.0 { -1.0 } else { 1.0 };
    let r = ratio;
    let (x, multiple) = if q == 0.0 {
        (0.0, 2.0 * PI * r > 1.0)
    } else if 2.0 * PI * r <= 1.0 {
        (kepler_bracketed(-0.5 * q - r, -0.5 * q + r, q, r), false)
    } else {
        let steps = 64;
        let mut x = 0.0;
        let mut count = 1;
        for s in 1..=steps {
            let qs = q * s as f64 / steps as f64;
            let roots = kepler_roots(qs, r);
            count = roots.len();
            if let Some(&best) = roots
                .iter()
                .min_by(|a, b| (*a - x).abs().partial_cmp(&(*b - x).abs()).unwrap())
            {
                x = best;
            }
        }
        (x, count > 1)
    };
    let x = sign * x;
    Ok(KeplerRoot { x, residual: kepler_f(x, q_sum, r).abs(), multiple_roots: multiple })
}

/// Two cos(2θ) qubits coupled through a phase-slip junction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QpsPairParams {
    /// `(2e)^2 / 2C`.
    pub e_c_node: f64,
    pub e_q: f64,
    pub e_j: f64,
}

impl QpsPairParams {
    /// `e_q = 0` is accepted as the decoupled limit.
    pub fn new(e_c_node: f64, e_q: f64, e_j: f64) -> Result<Self> {
        let p = Self { e_c_node, e_q, e_j };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.e_c_node > 0.0 && self.e_c_node.is_finite()) {
            return Err(invalid("e_c_node", format!("must be positive, got {}", self.e_c_node)));
        }
        if !(self.e_q >= 0.0 && self.e_q.is_finite()) {
            return Err(invalid("e_q", format!("must be non-negative, got {}", self.e_q)));
        }
        if !(self.e_j > 0.0 && self.e_j.is_finite()) {
            return Err(invalid("e_j", format!("must be positive, got {}", self.e_j)));
        }
        Ok(())
    }

    /// Kepler ratio `pi E_q / (8 E_c)` with `E_c = e_c_node / 4`.
    pub fn kepler_ratio(&self) -> f64 {
        PI * self.e_q / (8.0 * 0.25 * self.e_c_node)
    }
}

fn rotor_n_max(basis: &BasisSpec) -> Result<usize> {
    match *basis {
        BasisSpec::Rotor { n_max } => Ok(n_max),
        _ => Err(Error::UnsupportedBasis { op: "qps_pair", basis: basis.name().into() }),
    }
}

/// `-E_q cos(pi (n1 + n3))`, diagonal in the product charge basis and equal
/// to `-E_q P1 P3`. Index of `|n1, n3>` is `i1 * d + i3`.
pub fn qps_phase_slip_term(params: &QpsPairParams, basis: &BasisSpec) -> Result<OperatorMatrix> {
    params.validate()?;
    let n_max = rotor_n_max(basis)? as i64;
    let d = (2 * n_max + 1) as usize;
    let diag: Vec<f64> = (0..d * d)
        .map(|idx| {
            let s = (idx / d) as i64 + (idx % d) as i64 - 2 * n_max;
            -params.e_q * if s.rem_euclid(2) == 0 { 1.0 } else { -1.0 }
        })
        .collect();
    Ok(OperatorMatrix::hermitian_unchecked(linalg::diag_real(&diag)))
}

/// Linearized-constraint Hamiltonian of the pair on `Rotor ⊗ Rotor`.
///
/// Charging energy `E_c_node (n1 - n3)^2 / 2`, which is what eliminating
/// `q_{e,2} = -(Q1 + Q3)/2` gives; the phase-slip term as in
/// [`qps_phase_slip_term`]; and `-E_j (cos 2φ1 + cos 2φ3)`.
pub fn qps_pair_hamiltonian(params: &QpsPairParams, basis: &BasisSpec) -> Result<OperatorMatrix> {
    let n_max = rotor_n_max(basis)?;
    let slip = qps_phase_slip_term(params, basis)?;
    let ops = operators::rotor_trig_ops(basis)?;
    let d = 2 * n_max + 1;
    let id = linalg::identity(d);
    let c2 = ops.cos_2theta.entries();
    let j1 = linalg::kron(c2, &id);
    let j3 = linalg::kron(&id, c2);
    let q = basis.charges().unwrap();
    let m = CMat::from_fn(d * d, d * d, |i, j| {
        let mut v = (j1[(i, j)] + j3[(i, j)]) * (-params.e_j) + slip.entries()[(i, j)];
        if i == j {
            let dn = (q[i / d] - q[i % d]) as f64;
            v += re(0.5 * params.e_c_node * dn * dn);
        }
        v
    });
    Ok(OperatorMatrix::hermitian_unchecked(m))
}

/// Logical states of one qubit of the pair.
#[derive(Debug, Clone)]
pub struct QpsLogical {
    /// Localized at φ = 0.
    pub zero: Vec<C64>,
    /// Localized at φ = π; equals `P |zero>`.
    pub one: Vec<C64>,
}

impl QpsLogical {
    /// Product state `|a b>` for logical labels `a, b ∈ {0, 1}`.
    pub fn pair(&self, a: u8, b: u8) -> Vec<C64> {
        let pick = |s: u8| if s == 0 { &self.zero } else { &self.one };
        let (u, v) = (pick(a), pick(b));
        u.iter().flat_map(|x| v.iter().map(move |y| x * y)).collect()
    }
}

fn parity_sector_ground(h: &CMat, indices: &[usize]) -> Result<(f64, Vec<C64>)> {
    let n = indices.len();
    let sub = CMat::from_fn(n, n, |i, j| h[(indices[i], indices[j])]);
    let (w, v) = linalg::eigh(&sub)?;
    Ok((w[0], linalg::column(&v, 0)))
}

/// `|0>, |1> = (|e> ± |o>)/√2` built from the lowest even- and odd-charge
/// states of `E_c_node n^2 / 2 - E_j cos 2φ`.
pub fn qps_logical_states(params: &QpsPairParams, basis: &BasisSpec) -> Result<QpsLogical> {
    params.validate()?;
    rotor_n_max(basis)?;
    let q = basis.charges().unwrap();
    let d = q.len();
    let ops = operators::rotor_trig_ops(basis)?;
    let c2 = ops.cos_2theta.entries();
    let h = CMat::from_fn(d, d, |i, j| {
        let mut v = c2[(i, j)] * (-params.e_j);
        if i == j {
            v += re(0.5 * params.e_c_node * (q[i] * q[i]) as f64);
        }
        v
    });
    let even: Vec<usize> = (0..d).filter(|&i| q[i].rem_euclid(2) == 0).collect();
    let odd: Vec<usize> = (0..d).filter(|&i| q[i].rem_euclid(2) == 1).collect();
    let embed = |idx: &[usize], v: Vec<C64>| {
        let mut out = vec![re(0.0); d];
        for (k, &i) in idx.iter().enumerate() {
            out[i] = v[k];
        }
        // Fix the global phase on the n = 0 or n = 1 component.
        let anchor = idx.iter().position(|&i| q[i] == 0 || q[i] == 1).unwrap_or(0);
        let a = out[idx[anchor]];
        if a.norm() > 0.0 {
            let ph = a.conj() / a.norm();
            out.iter_mut().for_each(|z| *z *= ph);
        }
        out
    };
    let (_, ve) = parity_sector_ground(&h, &even)?;
    let (_, vo) = parity_sector_ground(&h, &odd)?;
    let e = embed(&even, ve);
    let o = embed(&odd, vo);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let plus: Vec<C64> = e.iter().zip(&o).map(|(a, b)| (a + b) * s).collect();
    let minus: Vec<C64> = e.iter().zip(&o).map(|(a, b)| (a - b) * s).collect();
    let well = operators::well_projector(basis, &Region::new(-PI / 2.0, PI / 2.0)?)?;
    let wp = well.matrix_element(&plus, &plus).re;
    let wm = well.matrix_element(&minus, &minus).re;
    Ok(if wp >= wm { QpsLogical { zero: plus, one: minus } } else { QpsLogical { zero: minus, one: plus } })
}

/// Effective `-g X1 X3` coupling of the pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct XxCoupling {
    pub g: f64,
    /// Sector ground energies for parities `(++), (+-), (-+), (--)`.
    pub sector_energies: [f64; 4],
    /// RMS residual of `c - g p1 p3 - h (p1 + p3)` against the four sector energies.
    pub fit_residual: f64,
    /// Whether the four sector ground states are the four lowest levels overall.
    pub lowest_are_logical: bool,
}

/// Extracts `g` from the parity-sector ground energies of the pair.
///
/// `P1` and `P3` commute with the Hamiltonian and `P` acts as logical `X`,
/// so `g = [E(+-) + E(-+) - E(++) - E(--)] / 4`.
pub fn xx_coupling(params: &QpsPairParams, basis: &BasisSpec) -> Result<XxCoupling> {
    let h = qps_pair_hamiltonian(params, basis)?;
    let q = basis.charges().unwrap();
    let d = q.len();
    let par = |n: i64| if n.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let mut energies = [0.0; 4];
    let signs = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)];
    for (s, &(p1, p3)) in signs.iter().enumerate() {
        let idx: Vec<usize> = (0..d * d).filter(|&i| par(q[i / d]) == p1 && par(q[i % d]) == p3).collect();
        energies[s] = parity_sector_ground(h.entries(), &idx)?.0;
    }
    let g = (energies[1] + energies[2] - energies[0] - energies[3]) / 4.0;
    let c = energies.iter().sum::<f64>() / 4.0;
    let h1 = (energies[3] - energies[0]) / 4.0;
    let resid = signs
        .iter()
        .zip(&energies)
        .map(|(&(p1, p3), &e)| (e - (c - g * p1 * p3 - h1 * (p1 + p3))).powi(2))
        .sum::<f64>();
    let all = linalg::eigvalsh(h.entries())?;
    let mut sorted = energies;
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let tol = 1e-9 * all[0].abs().max(1.0);
    let lowest = sorted.iter().zip(&all[..4]).all(|(a, b)| (a - b).abs() <= tol);
    Ok(XxCoupling { g, sector_energies: energies, fit_residual: (resid / 4.0).sqrt(), lowest_are_logical: lowest })
}
