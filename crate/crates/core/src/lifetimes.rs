//! Bit- and phase-flip times from Lindblad traces, exponential fits and
//! closed-form 1/f estimates.
//!
//! Both protocols start from states built on the retained eigenlevels, evolve
//! them with one [`Propagator`], and fit the normalized deviation
//! `(p(t) - p_inf) / (p(0) - p_inf)` to `exp(-t/T)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::circuits::{self, eigensystem, CircuitParams, Cos2ThetaParams, EigenSystem};
use crate::error::{invalid, Error, Result};
use crate::lindblad::{BathSpec, Channel, DensityMatrix, LindbladModel, Propagator};
use crate::linalg::{self, re, CMat, C64, I};
use crate::meanfield;
use crate::operators::{self, BasisSpec, OperatorMatrix, Region};

/// Result of an exponential fit. `timescale` is infinite for a censored trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub timescale: f64,
    pub amplitude: f64,
    pub r_squared: f64,
    pub n_points: usize,
    /// No decay was observed within the time window.
    pub censored: bool,
    /// The fitted window spans fewer than three decay constants.
    pub extrapolated: bool,
    /// Refit on the second half of the window; NaN when not computed.
    pub late_timescale: f64,
}

impl DecayFit {
    fn censored(n_points: usize, amplitude: f64) -> Self {
        Self {
            timescale: f64::INFINITY,
            amplitude,
            r_squared: 1.0,
            n_points,
            censored: true,
            extrapolated: false,
            late_timescale: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayModel {
    /// `y = A exp(-t/T)`.
    #[default]
    Exponential,
    /// `y = (1 - exp(-t/T)) / 2`, fitted through `1 - 2y`.
    HalfComplement,
}

/// Log-linear least squares.
pub fn fit_exponential(t: &[f64], y: &[f64], model: DecayModel) -> Result<DecayFit> {
    if t.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: t.len(), got: y.len() });
    }
    let n = t.len();
    if n < 8 {
        return Err(Error::Fit(format!("need at least 8 points, got {n}")));
    }
    let z: Vec<f64> = match model {
        DecayModel::Exponential => y.to_vec(),
        DecayModel::HalfComplement => y.iter().map(|v| 1.0 - 2.0 * v).collect(),
    };
    let spread = z.iter().map(|v| (v - z[0]).abs()).fold(0.0, f64::max);
    if spread <= 1e-12 * z[0].abs() {
        return Ok(DecayFit::censored(n, z[0]));
    }
    if let Some(bad) = z.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::Fit(format!("non-positive value {} at t = {}", z[bad], t[bad])));
    }
    let ly: Vec<f64> = z.iter().map(|v| v.ln()).collect();
    let (slope, intercept, r2) = linear_fit(t, &ly);
    if !(slope < 0.0) {
        return Err(Error::Fit(format!("trace does not decay (slope {slope:.3e})")));
    }
    let timescale = -1.0 / slope;
    let extrapolated = t[n - 1] - t[0] < 3.0 * timescale;
    Ok(DecayFit {
        timescale,
        amplitude: intercept.exp(),
        r_squared: r2,
        n_points: n,
        censored: false,
        extrapolated,
        late_timescale: f64::NAN,
    })
}

/// Ordinary least squares `y = a x + b`; returns `(a, b, r^2)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let a = sxy / sxx;
    let b = my - a * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    (a, b, r2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LifetimeProtocolConfig {
    /// Offset from the sweet spot, radians.
    pub delta_phi_e: f64,
    pub k_bt: f64,
    pub x_flux: f64,
    pub x_charge: f64,
    /// Lower bound on the retained levels.
    pub k_min: usize,
    /// Retain levels until this many have support in both wells.
    pub n_delocalized: usize,
    pub grid_points: usize,
    pub phi_max: f64,
    /// Rotor charge cutoff for cos(2θ).
    pub n_max: usize,
    pub points_per_decade: usize,
    pub min_r_squared: f64,
    /// Right-well region; defaults to `[0, phi_max]` or `[pi/2, 3pi/2)`.
    pub right_well: Option<Region>,
}

impl Default for LifetimeProtocolConfig {
    fn default() -> Self {
        let x = 1e-5f64.sqrt();
        Self {
            delta_phi_e: 0.03 * PI,
            k_bt: 1.0,
            x_flux: x,
            x_charge: x,
            k_min: 14,
            n_delocalized: 5,
            grid_points: 801,
            phi_max: 2.0 * PI,
            n_max: 30,
            points_per_decade: 16,
            min_r_squared: 0.98,
            right_well: None,
        }
    }
}

impl LifetimeProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        BathSpec::new(self.k_bt, self.x_flux, Channel::Flux)?;
        BathSpec::new(self.k_bt, self.x_charge, Channel::Charge)?;
        if self.k_min < 2 {
            return Err(invalid("k_min", "need at least two levels"));
        }
        if self.points_per_decade < 4 {
            return Err(invalid("points_per_decade", "need at least 4"));
        }
        if !(0.0..=1.0).contains(&self.min_r_squared) {
            return Err(invalid("min_r_squared", "must lie in [0, 1]"));
        }
        if !self.delta_phi_e.is_finite() {
            return Err(invalid("delta_phi_e", "must be finite"));
        }
        Ok(())
    }

    /// `x^2`, the factor that makes `x^2 T` independent of the coupling.
    pub fn x_squared(&self) -> f64 {
        self.x_flux * self.x_flux
    }
}

/// A double-well system truncated to its retained levels, with its Lindblad
/// propagator and the observables of both protocols.
#[derive(Debug, Clone)]
pub struct WellSystem {
    pub eig: EigenSystem,
    /// `<Pi_r>` of each retained level.
    pub right_weight: Vec<f64>,
    pub model: LindbladModel,
    pi_r: CMat,
    parity: CMat,
    propagator: Propagator,
}

impl WellSystem {
    /// Fluxonium on a flux grid at `phi_e = pi + delta_phi_e`.
    pub fn fluxonium(params: &CircuitParams, cfg: &LifetimeProtocolConfig) -> Result<Self> {
        cfg.validate()?;
        let params = params.with_phi_e(PI + cfg.delta_phi_e);
        params.validate()?;
        let basis = BasisSpec::flux_grid(cfg.phi_max, cfg.grid_points)?;
        let h = circuits::fluxonium_flux(&params, &basis)?;
        let (phi, n) = operators::flux_charge_ops(&params, &basis)?;
        let region = match cfg.right_well {
            Some(r) => r,
            None => Region::new(0.0, cfg.phi_max)?,
        };
        let pi_r = operators::well_projector(&basis, &region)?;
        let parity = operators::parity(&basis)?;
        let channels = [(phi, Channel::Flux, cfg.x_flux), (n, Channel::Charge, cfg.x_charge)];
        Self::build(&h, basis, &channels, &pi_r, &parity, cfg)
    }

    /// cos(2θ) rotor; its wells sit at θ = 0 and θ = π.
    pub fn cos2theta(params: &Cos2ThetaParams, cfg: &LifetimeProtocolConfig) -> Result<Self> {
        cfg.validate()?;
        let basis = BasisSpec::rotor(cfg.n_max);
        let h = circuits::cos2theta_hamiltonian(params, &basis)?;
        let ops = operators::rotor_trig_ops(&basis)?;
        let region = match cfg.right_well {
            Some(r) => r,
            None => Region::new(0.5 * PI, 1.5 * PI)?,
        };
        let pi_r = operators::well_projector(&basis, &region)?;
        let parity = operators::parity(&basis)?;
        let channels = [(ops.cos_theta, Channel::CosTheta, cfg.x_flux), (ops.n_op, Channel::Charge, cfg.x_charge)];
        Self::build(&h, basis, &channels, &pi_r, &parity, cfg)
    }

    fn build(
        h: &OperatorMatrix,
        basis: BasisSpec,
        channels: &[(OperatorMatrix, Channel, f64)],
        pi_r: &OperatorMatrix,
        parity: &OperatorMatrix,
        cfg: &LifetimeProtocolConfig,
    ) -> Result<Self> {
        let full = eigensystem(h, h.dim())?.with_basis(basis);
        let weights = full.expectations(pi_r)?;
        let k = retained_levels(&weights, cfg.k_min, cfg.n_delocalized).min(h.dim());
        let eig = truncate(&full, k);
        let right_weight = weights[..k].to_vec();
        let pairs: Vec<(&OperatorMatrix, BathSpec)> = channels
            .iter()
            .map(|(op, ch, x)| Ok((op, BathSpec::new(cfg.k_bt, *x, *ch)?)))
            .collect::<Result<_>>()?;
        let model = LindbladModel::from_eigensystem(&eig, &pairs)?;
        let propagator = Propagator::new(&model)?;
        Ok(Self {
            pi_r: eig.project(pi_r)?,
            parity: eig.project(parity)?,
            eig,
            right_weight,
            model,
            propagator,
        })
    }

    pub fn k(&self) -> usize {
        self.eig.k()
    }

    pub fn propagator(&self) -> &Propagator {
        &self.propagator
    }

    /// `1 / |Re lambda_1|`, the slowest nonzero relaxation time (ns).
    ///
    /// Real parts below `1e-11 max|lambda|` count as zero.
    pub fn relaxation_time(&self) -> f64 {
        let ev = self.propagator.eigenvalues();
        let tol = 1e-11 * ev.iter().map(|l| l.norm()).fold(1.0, f64::max);
        let slowest = ev
            .iter()
            .filter(|l| l.re < -tol)
            .map(|l| -l.re)
            .fold(f64::INFINITY, f64::min);
        if slowest.is_finite() {
            1.0 / slowest
        } else {
            f64::INFINITY
        }
    }

    /// Initial state of the bit-flip protocol and its `<Pi_r>`.
    pub fn left_well_state(&self) -> Result<(Vec<C64>, f64)> {
        let k = self.k();
        if let Some(i) = self.right_weight.iter().position(|&w| w < 0.05) {
            return Ok((unit(k, i), self.right_weight[i]));
        }
        // Hybridized doublet: take the combination leaning left.
        let mut best: Option<(Vec<C64>, f64)> = None;
        for s in [1.0, -1.0] {
            let mut v = vec![re(0.0); k];
            v[0] = re(FRAC_1_SQRT_2);
            v[1] = re(s * FRAC_1_SQRT_2);
            let w = linalg::sandwich(&v, &self.pi_r, &v).re;
            if best.as_ref().is_none_or(|b| w < b.1) {
                best = Some((v, w));
            }
        }
        let (v, w) = best.unwrap();
        if w >= 0.05 {
            return Err(Error::Protocol(format!("no left-localized initial state (<Pi_r> = {w:.3})")));
        }
        Ok((v, w))
    }

    /// Initial state of the phase-flip protocol: the sum of the two well
    /// ground states with the sign that makes `<P>` positive, or the ground
    /// state when no level is localized.
    pub fn cat_state(&self) -> Vec<C64> {
        let k = self.k();
        let l = self.right_weight.iter().position(|&w| w < 0.05);
        let r = self.right_weight.iter().position(|&w| w > 0.95);
        match (l, r) {
            (Some(l), Some(r)) => {
                let s = if self.parity[(l, r)].re < 0.0 { -1.0 } else { 1.0 };
                let mut v = vec![re(0.0); k];
                v[l] = re(FRAC_1_SQRT_2);
                v[r] = re(s * FRAC_1_SQRT_2);
                v
            }
            _ => unit(k, 0),
        }
    }

    /// `Tr[rho(t) Pi_r]` starting from `rho0`.
    pub fn tunneling_trace(&self, rho0: &DensityMatrix, times: &[f64]) -> Result<Vec<f64>> {
        let rhos = self.propagator.evolve(rho0, times)?;
        Ok(rhos.iter().map(|r| r.expectation(&self.pi_r)).collect())
    }

    /// `Tr[rho~(t) P]` in the frame rotating with the retained energies.
    pub fn parity_trace(&self, rho0: &DensityMatrix, times: &[f64]) -> Result<Vec<f64>> {
        let rhos = self.propagator.evolve(rho0, times)?;
        let e = &self.eig.energies;
        let k = self.k();
        Ok(rhos
            .iter()
            .zip(times)
            .map(|(r, &t)| {
                let m = r.matrix();
                let mut s = re(0.0);
                for a in 0..k {
                    for b in 0..k {
                        let phase = (I * (2.0 * PI * (e[a] - e[b]) * t)).exp();
                        s += m[(a, b)] * phase * self.parity[(b, a)];
                    }
                }
                s.re
            })
            .collect())
    }
}

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn unit(k: usize, i: usize) -> Vec<C64> {
    let mut v = vec![re(0.0); k];
    v[i] = re(1.0);
    v
}

/// Smallest `k >= k_min` that includes `n_deloc` levels with
/// `min(w, 1 - w) > 0.1`.
fn retained_levels(weights: &[f64], k_min: usize, n_deloc: usize) -> usize {
    let mut seen = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w.min(1.0 - w) > 0.1 {
            seen += 1;
            if seen == n_deloc {
                return k_min.max(i + 1);
            }
        }
    }
    log::warn!("only {seen} delocalized levels found; keeping k = {k_min}");
    k_min
}

fn truncate(eig: &EigenSystem, k: usize) -> EigenSystem {
    EigenSystem {
        energies: eig.energies[..k].to_vec(),
        states: CMat::from_fn(eig.dim(), k, |i, j| eig.states[(i, j)]),
        basis: eig.basis,
    }
}

/// Geometric grid from `lo` to `hi` with `per_decade` points per decade.
fn geometric(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let n = ((decades * per_decade as f64).ceil() as usize).max(1);
    (0..=n).map(|i| lo * 10f64.powf(decades * i as f64 / n as f64)).collect()
}

/// Coarse scan for the `1/e` crossing, then a fine fit over `[T/20, 4T]`,
/// refined once around the fitted value.
fn measure_decay(y: impl Fn(&[f64]) -> Result<Vec<f64>>, cfg: &LifetimeProtocolConfig) -> Result<DecayFit> {
    let coarse = geometric(1e-3, 1e14, 4);
    let yc = y(&coarse)?;
    let target = (-1.0f64).exp();
    let Some(i) = yc.iter().position(|&v| v <= target) else {
        return Ok(DecayFit::censored(coarse.len(), 1.0));
    };
    let mut estimate = if i == 0 {
        coarse[0]
    } else {
        // Log-log interpolation of the crossing.
        let (t0, t1) = (coarse[i - 1].ln(), coarse[i].ln());
        let (a, b) = (yc[i - 1].max(1e-300).ln(), yc[i].max(1e-300).ln());
        (t0 + (target.ln() - a) / (b - a) * (t1 - t0)).exp()
    };
    let mut fit = None;
    for _ in 0..2 {
        let t = geometric(estimate / 20.0, 4.0 * estimate, cfg.points_per_decade);
        let v = y(&t)?;
        let mut f = fit_exponential(&t, &v, DecayModel::Exponential)?;
        let half = t.len() / 2;
        f.late_timescale = fit_exponential(&t[half..], &v[half..], DecayModel::Exponential)
            .map(|g| g.timescale)
            .unwrap_or(f64::NAN);
        estimate = f.timescale;
        fit = Some(f);
    }
    let fit = fit.unwrap();
    if fit.r_squared < cfg.min_r_squared {
        return Err(Error::Fit(format!("r^2 = {:.4} below {}", fit.r_squared, cfg.min_r_squared)));
    }
    Ok(fit)
}

fn normalized(p: Vec<f64>, p0: f64, p_inf: f64) -> Vec<f64> {
    p.into_iter().map(|v| (v - p_inf) / (p0 - p_inf)).collect()
}

/// Bit-flip time: start in the left well, follow `Tr[rho Pi_r]`.
pub fn bitflip_time(sys: &WellSystem, cfg: &LifetimeProtocolConfig) -> Result<DecayFit> {
    let (v, _) = sys.left_well_state()?;
    let rho0 = DensityMatrix::pure(&v)?;
    let p0 = sys.tunneling_trace(&rho0, &[0.0])?[0];
    let stat = sys.propagator.stationary_limit(&rho0)?;
    let p_inf = (0..sys.k())
        .flat_map(|a| (0..sys.k()).map(move |b| (a, b)))
        .map(|(a, b)| stat[(a, b)] * sys.pi_r[(b, a)])
        .sum::<C64>()
        .re;
    if (p0 - p_inf).abs() < 1e-12 {
        return Ok(DecayFit::censored(1, 1.0));
    }
    measure_decay(|t| Ok(normalized(sys.tunneling_trace(&rho0, t)?, p0, p_inf)), cfg)
}

/// Phase-flip time: start in the cat state, follow the rotating-frame parity.
pub fn phaseflip_time(sys: &WellSystem, cfg: &LifetimeProtocolConfig) -> Result<DecayFit> {
    let rho0 = DensityMatrix::pure(&sys.cat_state())?;
    let p0 = sys.parity_trace(&rho0, &[0.0])?[0];
    let stat = sys.propagator.stationary_limit(&rho0)?;
    let p_inf: f64 = (0..sys.k()).map(|a| stat[(a, a)].re * sys.parity[(a, a)].re).sum();
    if (p0 - p_inf).abs() < 1e-12 {
        return Ok(DecayFit::censored(1, 1.0));
    }
    measure_decay(|t| Ok(normalized(sys.parity_trace(&rho0, t)?, p0, p_inf)), cfg)
}

/// `d epsilon_01 / d phi_e` by central differences with `h = 1e-4`,
/// cross-checked against step `2h`.
pub fn flux_derivative_e01(params: &CircuitParams, basis: &BasisSpec) -> Result<f64> {
    let e01 = |phi_e: f64| circuits::splitting(&params.with_phi_e(phi_e), basis, 1);
    let h = 1e-4;
    let x = params.phi_e;
    let d1 = (e01(x + h)? - e01(x - h)?) / (2.0 * h);
    let d2 = (e01(x + 2.0 * h)? - e01(x - 2.0 * h)?) / (4.0 * h);
    // Richardson: the O(h^2) error of d1 is (d2 - d1)/3.
    let err = (d2 - d1).abs() / 3.0;
    if !d1.is_finite() || err > 1e-3 * d1.abs() + 1e-9 {
        return Err(Error::Domain(format!("ill-conditioned derivative {d1:.6e} (error {err:.2e})")));
    }
    Ok(d1)
}

/// `1/T = sqrt(2) A |d epsilon_01/d phi_e| sqrt(|ln(omega_low t_exp)|) / hbar`, in 1/ns.
pub fn one_over_f_dephasing(
    params: &CircuitParams,
    basis: &BasisSpec,
    a_phi_e: f64,
    omega_low: f64,
    t_exp: f64,
) -> Result<f64> {
    if !(a_phi_e >= 0.0) {
        return Err(invalid("a_phi_e", "must be non-negative"));
    }
    if !(omega_low > 0.0 && t_exp > 0.0) {
        return Err(invalid("omega_low", "omega_low and t_exp must be positive"));
    }
    if a_phi_e == 0.0 {
        return Ok(0.0);
    }
    let d = flux_derivative_e01(params, basis)?;
    Ok(2.0 * PI * 2f64.sqrt() * a_phi_e * d.abs() * (omega_low * t_exp).ln().abs().sqrt())
}

/// `|<0|phi|1>|^2 / epsilon_01` between the two lowest levels off the sweet spot.
pub fn one_over_f_bitflip_proxy(params: &CircuitParams, basis: &BasisSpec) -> Result<f64> {
    if params.delta_phi_e().abs() < 1e-9 {
        return Err(Error::Protocol("the proxy needs a flux offset from the sweet spot".into()));
    }
    let eig = circuits::fluxonium_eigensystem(params, basis, 2)?;
    let (phi, _) = operators::flux_charge_ops(params, basis)?;
    let m = phi.matrix_element(&eig.state(0), &eig.state(1)).norm_sqr();
    Ok(m / eig.gap(1))
}

/// Squared two-level matrix elements between codewords `|±alpha, theta>`
/// and between the cats `C_±`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoldenRuleElements {
    pub flux_codeword: f64,
    pub charge_codeword: f64,
    pub flux_cat: f64,
    pub charge_cat: f64,
}

/// Heavy-regime closed forms with `alpha` from the `E_c -> 0` limit and the
/// asymptotic squeezing, so that `alpha e^theta` equals [`meanfield::alpha_prime`].
pub fn twolevel_golden_rule_elements(params: &CircuitParams) -> GoldenRuleElements {
    let theta = meanfield::analytic_theta_asymptotic(params);
    let ap = meanfield::analytic_alpha(params) * theta.exp();
    let n0_sq = 1.0 / (4.0 * params.phi0().powi(2));
    let charge = 4.0 * n0_sq * (ap * theta.exp()).powi(2) * (-4.0 * ap * ap).exp();
    let r = params.e_j / (params.e_j + params.e_l);
    GoldenRuleElements { flux_codeword: 0.0, charge_codeword: charge, flux_cat: PI * PI * r * r, charge_cat: charge }
}
