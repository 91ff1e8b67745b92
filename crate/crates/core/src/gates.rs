//! Diabatic X gate on tunable-`E_j` fluxonium.
//!
//! The junction is quenched from `E_j_max` to `E_j_min`, the codewords rotate
//! half a period in the remaining near-harmonic potential and swap wells, and
//! the junction is restored.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::circuits::{self, eigensystem, CircuitParams};
use crate::error::{invalid, Error, Result};
use crate::linalg::{self, re, CMat, C64, I};
use crate::operators::{self, BasisSpec, OperatorMatrix, Region, SqueezedAnsatz, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RampShape {
    #[default]
    Linear,
    Cosine,
}

/// Piecewise `E_j(t)`: ramp down over `t_rise`, hold, ramp back up.
///
/// `hold` runs between the midpoints of the two ramps, so the flat segment
/// lasts `hold - t_rise` and the gate takes `hold + t_rise`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateSchedule {
    pub e_j_max: f64,
    pub e_j_min: f64,
    pub t_rise: f64,
    /// Defaults to half an oscillator period, `pi / omega`.
    pub hold: Option<f64>,
    pub ramp: RampShape,
}

impl GateSchedule {
    pub fn new(e_j_max: f64, e_j_min: f64, t_rise: f64) -> Result<Self> {
        let s = Self { e_j_max, e_j_min, t_rise, hold: None, ramp: RampShape::Linear };
        s.validate()?;
        Ok(s)
    }

    pub fn with_hold(mut self, hold: f64) -> Self {
        self.hold = Some(hold);
        self
    }

    pub fn with_ramp(mut self, ramp: RampShape) -> Self {
        self.ramp = ramp;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.e_j_min >= 0.0 && self.e_j_min <= self.e_j_max && self.e_j_max.is_finite()) {
            return Err(invalid("e_j_min", format!("need 0 <= e_j_min <= e_j_max, got {} and {}", self.e_j_min, self.e_j_max)));
        }
        if !(self.t_rise >= 0.0 && self.t_rise.is_finite()) {
            return Err(invalid("t_rise", format!("must be non-negative, got {}", self.t_rise)));
        }
        if let Some(h) = self.hold {
            if !(h >= self.t_rise && h.is_finite()) {
                return Err(invalid("hold", format!("must be at least t_rise, got {h}")));
            }
        }
        Ok(())
    }

    pub fn hold_time(&self, omega: f64) -> f64 {
        self.hold.unwrap_or(PI / omega)
    }

    pub fn gate_time(&self, omega: f64) -> f64 {
        self.hold_time(omega) + self.t_rise
    }

    /// `E_j` at time `t`.
    pub fn e_j(&self, t: f64, omega: f64) -> f64 {
        let flat = self.hold_time(omega) - self.t_rise;
        let (hi, lo) = (self.e_j_max, self.e_j_min);
        let down = |s: f64| match self.ramp {
            RampShape::Linear => hi + (lo - hi) * s,
            RampShape::Cosine => lo + (hi - lo) * 0.5 * (1.0 + (PI * s).cos()),
        };
        if t <= 0.0 {
            hi
        } else if t < self.t_rise {
            down(t / self.t_rise)
        } else if t <= self.t_rise + flat {
            lo
        } else if t < 2.0 * self.t_rise + flat {
            down(1.0 - (t - self.t_rise - flat) / self.t_rise)
        } else {
            hi
        }
    }

    /// Segment boundaries: ramp down, flat, ramp up.
    fn segments(&self, omega: f64) -> [(f64, f64); 3] {
        let flat = self.hold_time(omega) - self.t_rise;
        let a = self.t_rise;
        let b = a + flat;
        [(0.0, a), (a, b), (b, b + self.t_rise)]
    }
}

#[derive(Debug, Clone)]
pub struct GateResult {
    pub final_state: StateVector,
    /// `1 - <Pi_r>`: probability of not ending in the opposite well.
    pub error: f64,
    /// `|<target|psi_f>|^2` with the ideal right-well codeword.
    pub fidelity: f64,
    pub gate_time: f64,
    pub norm_drift: f64,
    /// Minimum over the gate of `|<a>_L - <a>_R|`, relative to its start value.
    pub separation_ratio: f64,
    pub steps: usize,
}

/// Time steps per `1/omega`; the step never exceeds `(1/omega)/50`.
pub const DEFAULT_STEPS_PER_INVERSE_OMEGA: usize = 50;

/// The two codewords of `H(E_j_max)`: `(g0 ± g1)/sqrt 2`, left one first.
pub fn codewords(params: &CircuitParams, basis: &BasisSpec, e_j: f64) -> Result<(Vec<C64>, Vec<C64>)> {
    let h = circuits::fluxonium_hamiltonian(&params.with_e_j(e_j), basis)?;
    let eig = eigensystem(&h, 2)?;
    let pr = right_well(params, basis)?;
    let (g0, g1) = (eig.state(0), eig.state(1));
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let plus: Vec<C64> = g0.iter().zip(&g1).map(|(a, b)| (a + b) * s).collect();
    let minus: Vec<C64> = g0.iter().zip(&g1).map(|(a, b)| (a - b) * s).collect();
    if pr.matrix_element(&plus, &plus).re <= pr.matrix_element(&minus, &minus).re {
        Ok((plus, minus))
    } else {
        Ok((minus, plus))
    }
}

/// Projector onto `phi >= 0`.
fn right_well(params: &CircuitParams, basis: &BasisSpec) -> Result<OperatorMatrix> {
    let (phi, _) = operators::flux_charge_ops(params, basis)?;
    operators::spectral_projector(&phi, &Region::new(0.0, f64::MAX)?)
}

pub fn x_gate_simulate(params: &CircuitParams, schedule: &GateSchedule, basis: &BasisSpec) -> Result<GateResult> {
    x_gate_simulate_with(params, schedule, basis, DEFAULT_STEPS_PER_INVERSE_OMEGA)
}

/// Closed-system propagation with midpoint Hamiltonians on each step.
pub fn x_gate_simulate_with(
    params: &CircuitParams,
    schedule: &GateSchedule,
    basis: &BasisSpec,
    steps_per_inverse_omega: usize,
) -> Result<GateResult> {
    schedule.validate()?;
    params.with_e_j(schedule.e_j_max).validate()?;
    if steps_per_inverse_omega < 50 {
        return Err(invalid("steps_per_inverse_omega", "must be at least 50"));
    }
    let omega = params.omega();
    let dt_max = 1.0 / omega / steps_per_inverse_omega as f64;
    let pr = right_well(params, basis)?;
    let (left, right) = codewords(params, basis, schedule.e_j_max)?;
    let h0 = circuits::fluxonium_hamiltonian(&params.with_e_j(0.0), basis)?;
    let hj = circuits::fluxonium_hamiltonian(&params.with_e_j(1.0), basis)?;
    // H(E_j) = H0 + E_j (H(1) - H0).
    let cos_term = hj.entries() - h0.entries();
    let a = operators::annihilation(basis).ok();

    let mut psi = left.clone();
    let mut other = right.clone();
    let sep = |x: &[C64], y: &[C64]| -> f64 {
        match &a {
            Some(a) => (a.matrix_element(x, x) - a.matrix_element(y, y)).norm(),
            None => 0.0,
        }
    };
    let sep0 = sep(&psi, &other);
    let mut min_sep = sep0;
    let mut steps = 0;
    for (t0, t1) in schedule.segments(omega) {
        if t1 <= t0 {
            continue;
        }
        let n = ((t1 - t0) / dt_max).ceil().max(1.0) as usize;
        let dt = (t1 - t0) / n as f64;
        let mut cached: Option<(f64, CMat)> = None;
        for i in 0..n {
            let ej = schedule.e_j(t0 + (i as f64 + 0.5) * dt, omega);
            if cached.as_ref().is_none_or(|c| c.0 != ej) {
                let h = linalg::combine(&[(re(1.0), h0.entries()), (re(ej), &cos_term)]);
                cached = Some((ej, linalg::expm_antihermitian(&linalg::scale(&h, -I * (2.0 * PI * dt)))?));
            }
            let u = &cached.as_ref().unwrap().1;
            psi = linalg::mat_vec(u, &psi);
            other = linalg::mat_vec(u, &other);
            min_sep = min_sep.min(sep(&psi, &other));
            steps += 1;
        }
    }
    let norm_drift = (linalg::norm(&psi) - 1.0).abs();
    if norm_drift > 1e-8 {
        return Err(Error::Integration(format!("norm drift {norm_drift:.2e}")));
    }
    let error = 1.0 - pr.matrix_element(&psi, &psi).re;
    let fidelity = linalg::vdot(&right, &psi).norm_sqr();
    Ok(GateResult {
        final_state: StateVector::new(*basis, psi)?,
        error,
        fidelity,
        gate_time: schedule.gate_time(omega),
        norm_drift,
        separation_ratio: if sep0 > 0.0 { min_sep / sep0 } else { f64::NAN },
        steps,
    })
}

/// Squeezed-state parameters in complex form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexAnsatz {
    pub alpha: C64,
    pub theta: C64,
}

/// Free harmonic evolution `(alpha, theta) -> (alpha e^{-i w t}, theta e^{-2 i w t})`.
pub fn free_rotation_map(ansatz: &SqueezedAnsatz, t: f64, omega: f64) -> ComplexAnsatz {
    let ph = (-I * (omega * t)).exp();
    ComplexAnsatz { alpha: re(ansatz.alpha) * ph, theta: re(ansatz.theta) * ph * ph }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper() -> (CircuitParams, BasisSpec) {
        (CircuitParams::sweet_spot(0.5, 0.5, 10.0).unwrap(), BasisSpec::fock(100).unwrap())
    }

    #[test]
    fn schedule_shape() {
        let s = GateSchedule::new(10.0, 0.1, 0.05).unwrap();
        let w = 2.0 * PI * 2f64.sqrt();
        assert_eq!(s.e_j(0.0, w), 10.0);
        assert!((s.e_j(0.025, w) - 5.05).abs() < 1e-12);
        assert_eq!(s.e_j(0.1, w), 0.1);
        assert_eq!(s.e_j(s.gate_time(w) + 1.0, w), 10.0);
        let c = s.with_ramp(RampShape::Cosine);
        assert!((c.e_j(0.025, w) - 5.05).abs() < 1e-12);
        assert!(GateSchedule::new(1.0, 2.0, 0.1).is_err());
        assert!(GateSchedule::new(1.0, 0.0, -0.1).is_err());
    }

    #[test]
    fn paper_parameters() {
        let (p, b) = paper();
        let r = x_gate_simulate(&p, &GateSchedule::new(10.0, 0.1, 0.05).unwrap(), &b).unwrap();
        assert!(r.gate_time < 1.0);
        assert!(r.error <= 1e-3, "{}", r.error);
        assert!(r.norm_drift <= 1e-8);
        assert!(r.separation_ratio >= 0.8, "{}", r.separation_ratio);
    }

    #[test]
    fn harmonic_half_period_flips_flux() {
        let (p, b) = paper();
        let s = GateSchedule::new(10.0, 0.0, 0.0).unwrap();
        let r = x_gate_simulate(&p, &s, &b).unwrap();
        let (phi, _) = operators::flux_charge_ops(&p, &b).unwrap();
        let (l, _) = codewords(&p, &b, 10.0).unwrap();
        let before = phi.matrix_element(&l, &l).re;
        let after = phi.matrix_element(r.final_state.amplitudes(), r.final_state.amplitudes()).re;
        assert!((after + before).abs() < 1e-9, "{before} {after}");
    }

    #[test]
    fn full_period_is_identity() {
        let (p, b) = paper();
        let s = GateSchedule::new(10.0, 0.0, 0.05).unwrap().with_hold(2.0 * PI / p.omega());
        let r = x_gate_simulate(&p, &s, &b).unwrap();
        assert!(1.0 - r.error <= 1e-3, "{}", 1.0 - r.error);
    }

    #[test]
    fn error_grows_with_residual_junction() {
        let (p, b) = paper();
        let e: Vec<f64> = [0.0, 0.05, 0.1, 0.3]
            .iter()
            .map(|&m| x_gate_simulate(&p, &GateSchedule::new(10.0, m, 0.05).unwrap(), &b).unwrap().error)
            .collect();
        assert!(e.windows(2).all(|w| w[1] >= w[0]), "{e:?}");
        let slow = x_gate_simulate(&p, &GateSchedule::new(10.0, 0.1, 0.4).unwrap(), &b).unwrap().error;
        assert!(slow > e[2]);
    }

    #[test]
    fn rotation_map_examples() {
        let a = SqueezedAnsatz::new(1.2, 0.3);
        let z = free_rotation_map(&a, 0.0, 3.0);
        assert_eq!((z.alpha, z.theta), (re(1.2), re(0.3)));
        let h = free_rotation_map(&a, PI / 3.0, 3.0);
        assert!((h.alpha + 1.2).norm() < 1e-12 && (h.theta - 0.3).norm() < 1e-12);
    }

    #[test]
    fn rotation_map_matches_unitary_evolution() {
        let b = BasisSpec::fock(100).unwrap();
        let a = SqueezedAnsatz::new(1.5, 0.4);
        let omega = 2.0;
        let t = PI / (2.0 * omega);
        let psi = operators::squeezed_coherent_state(&a, &b).unwrap();
        let evolved: Vec<C64> = psi
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(n, c)| c * (-I * (omega * t * n as f64)).exp())
            .collect();
        let m = free_rotation_map(&a, t, omega);
        let want = operators::squeezed_coherent_state_complex(m.alpha, m.theta, &b).unwrap();
        assert!(linalg::vdot(want.amplitudes(), &evolved).norm_sqr() >= 1.0 - 1e-8);
    }
}
