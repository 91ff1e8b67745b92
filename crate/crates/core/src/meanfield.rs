//! Squeezed-coherent mean-field picture of fluxonium at the sweet spot.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::circuits::{fluxonium_eigensystem, CircuitParams};
use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::operators::{squeezed_coherent_state, BasisSpec, SqueezedAnsatz, StateVector};

/// `alpha_opt` above this counts as symmetry broken.
pub const SYMMETRY_BROKEN_ALPHA: f64 = 1e-3;

/// `E_mf(alpha, theta) = hbar_omega (alpha^2 + sinh^2 theta)
///   + E_j exp(-phi0^2 e^{-2 theta} / 2) cos(2 alpha phi0)`.
pub fn mean_field_energy(alpha: f64, theta: f64, params: &CircuitParams) -> f64 {
    let (hw, p0) = (params.hbar_omega(), params.phi0());
    let sh = theta.sinh();
    hw * (alpha * alpha + sh * sh) + params.e_j * (-0.5 * p0 * p0 * (-2.0 * theta).exp()).exp() * (2.0 * alpha * p0).cos()
}

/// Gradient and Hessian of [`mean_field_energy`].
fn derivatives(alpha: f64, theta: f64, params: &CircuitParams) -> ([f64; 2], [[f64; 2]; 2]) {
    let (hw, p0, ej) = (params.hbar_omega(), params.phi0(), params.e_j);
    let u = p0 * p0 * (-2.0 * theta).exp();
    let g = (-0.5 * u).exp();
    let (s, c) = (2.0 * alpha * p0).sin_cos();
    let da = 2.0 * hw * alpha - 2.0 * p0 * ej * g * s;
    let dt = hw * (2.0 * theta).sinh() + ej * c * g * u;
    let daa = 2.0 * hw - 4.0 * p0 * p0 * ej * g * c;
    let dat = -2.0 * p0 * ej * s * g * u;
    let dtt = 2.0 * hw * (2.0 * theta).cosh() + ej * c * g * (u * u - 2.0 * u);
    ([da, dt], [[daa, dat], [dat, dtt]])
}

/// Quartic expansion of `E_mf` in `alpha` at `theta = 0`.
pub fn mean_field_quartic(alpha: f64, params: &CircuitParams) -> f64 {
    let (hw, p0, ej) = (params.hbar_omega(), params.phi0(), params.e_j);
    let c0 = ej * (-0.5 * p0 * p0).exp();
    c0 + (hw - 2.0 * p0 * p0 * c0) * alpha.powi(2) + c0 * (2.0 * p0).powi(4) / 24.0 * alpha.powi(4)
}

/// Domain of the squeezing parameter searched by the optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ThetaDomain {
    /// `theta >= 0`: squeezing of the flux quadrature only.
    #[default]
    NonNegative,
    Unrestricted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldOptions {
    pub theta_domain: ThetaDomain,
    pub max_iter: usize,
    /// Projected-gradient tolerance relative to `hbar_omega + E_j`.
    pub gtol: f64,
}

impl Default for MeanFieldOptions {
    fn default() -> Self {
        Self { theta_domain: ThetaDomain::NonNegative, max_iter: 4000, gtol: 1e-8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldResult {
    pub alpha_opt: f64,
    pub theta_opt: f64,
    pub energy: f64,
    pub symmetry_broken: bool,
    pub iterations: usize,
    pub gradient_norm: f64,
}

/// Two-dimensional Nelder-Mead; returns (point, value, iterations).
fn nelder_mead(f: &dyn Fn([f64; 2]) -> f64, x0: [f64; 2], step: f64, max_iter: usize) -> ([f64; 2], f64, usize) {
    let mut pts = [x0, [x0[0] + step, x0[1]], [x0[0], x0[1] + step]];
    let mut val = pts.map(f);
    let mut it = 0;
    while it < max_iter {
        it += 1;
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&a, &b| val[a].total_cmp(&val[b]));
        pts = idx.map(|i| pts[i]);
        val = idx.map(|i| val[i]);
        let spread = (val[2] - val[0]).abs();
        let size = (0..2).map(|d| (pts[1][d] - pts[0][d]).abs().max((pts[2][d] - pts[0][d]).abs())).fold(0.0, f64::max);
        if spread <= 1e-15 * val[0].abs().max(1e-300) && size < 1e-10 {
            break;
        }
        let c = [(pts[0][0] + pts[1][0]) / 2.0, (pts[0][1] + pts[1][1]) / 2.0];
        let along = |t: f64| [c[0] + t * (pts[2][0] - c[0]), c[1] + t * (pts[2][1] - c[1])];
        let xr = along(-1.0);
        let fr = f(xr);
        if fr < val[0] {
            let xe = along(-2.0);
            let fe = f(xe);
            if fe < fr {
                pts[2] = xe;
                val[2] = fe;
            } else {
                pts[2] = xr;
                val[2] = fr;
            }
        } else if fr < val[1] {
            pts[2] = xr;
            val[2] = fr;
        } else {
            let (xc, fc) = if fr < val[2] {
                let x = along(-0.5);
                (x, f(x))
            } else {
                let x = along(0.5);
                (x, f(x))
            };
            if fc < val[2].min(fr) {
                pts[2] = xc;
                val[2] = fc;
            } else {
                for k in 1..3 {
                    pts[k] = [(pts[0][0] + pts[k][0]) / 2.0, (pts[0][1] + pts[k][1]) / 2.0];
                    val[k] = f(pts[k]);
                }
            }
        }
    }
    let best = (0..3).min_by(|&a, &b| val[a].total_cmp(&val[b])).unwrap();
    (pts[best], val[best], it)
}

/// Projected gradient: components pushing against an active bound vanish.
fn projected_gradient(a: f64, t: f64, g: [f64; 2], domain: ThetaDomain) -> [f64; 2] {
    let ga = if a == 0.0 && g[0] >= 0.0 { 0.0 } else { g[0] };
    let gt = if domain == ThetaDomain::NonNegative && t == 0.0 && g[1] >= 0.0 { 0.0 } else { g[1] };
    [ga, gt]
}

/// Projected Newton with backtracking, from a point already near a minimum.
fn newton_polish(params: &CircuitParams, mut x: [f64; 2], domain: ThetaDomain, tol: f64, max_iter: usize) -> ([f64; 2], f64, usize) {
    let project = |p: [f64; 2]| {
        let t = if domain == ThetaDomain::NonNegative { p[1].max(0.0) } else { p[1] };
        [p[0].abs(), t]
    };
    x = project(x);
    let f = |p: [f64; 2]| mean_field_energy(p[0], p[1], params);
    let mut fx = f(x);
    for it in 0..max_iter {
        let (g, h) = derivatives(x[0], x[1], params);
        let pg = projected_gradient(x[0], x[1], g, domain);
        let gn = pg[0].hypot(pg[1]);
        if gn <= tol {
            return (x, gn, it);
        }
        let free = [pg[0] != 0.0 || x[0] > 0.0, pg[1] != 0.0];
        let mut d = [0.0; 2];
        if free[0] && free[1] {
            let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
            if h[0][0] > 0.0 && det > 0.0 {
                d = [-(h[1][1] * g[0] - h[0][1] * g[1]) / det, -(h[0][0] * g[1] - h[1][0] * g[0]) / det];
            }
        } else {
            for k in 0..2 {
                if free[k] && h[k][k] > 0.0 {
                    d[k] = -g[k] / h[k][k];
                }
            }
        }
        if d[0] * pg[0] + d[1] * pg[1] >= 0.0 {
            let s = 1.0 / (h[0][0].abs() + h[1][1].abs() + 1e-300);
            d = [-pg[0] * s, -pg[1] * s];
        }
        let mut step = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let y = project([x[0] + step * d[0], x[1] + step * d[1]]);
            let fy = f(y);
            if fy <= fx {
                moved = fy < fx || y != x;
                x = y;
                fx = fy;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            return (x, gn, it);
        }
    }
    let (g, _) = derivatives(x[0], x[1], params);
    let pg = projected_gradient(x[0], x[1], g, domain);
    (x, pg[0].hypot(pg[1]), max_iter)
}

/// Minimizes `E_mf` over `alpha >= 0` and the chosen `theta` domain.
///
/// Nelder-Mead from the trivial point, the analytic guess and the guess with
/// zero squeezing, each polished by projected Newton; the lowest wins.
pub fn optimize_mean_field(params: &CircuitParams) -> Result<MeanFieldResult> {
    optimize_mean_field_with(params, &MeanFieldOptions::default())
}

pub fn optimize_mean_field_with(params: &CircuitParams, opts: &MeanFieldOptions) -> Result<MeanFieldResult> {
    params.validate()?;
    let domain = opts.theta_domain;
    let scale = params.hbar_omega() + params.e_j;
    let tol = opts.gtol * scale;
    let map = |p: [f64; 2]| {
        let t = if domain == ThetaDomain::NonNegative { p[1].abs() } else { p[1] };
        [p[0].abs(), t]
    };
    let obj = |p: [f64; 2]| {
        let q = map(p);
        mean_field_energy(q[0], q[1], params)
    };
    let a_guess = analytic_alpha(params);
    let t_guess = analytic_theta_asymptotic(params);
    let t_guess = if domain == ThetaDomain::NonNegative { t_guess.max(0.0) } else { t_guess };
    let starts = [[0.0, 0.0], [a_guess, t_guess], [a_guess, 0.0], [0.5 * a_guess, 0.5 * t_guess]];
    let trivial = mean_field_energy(0.0, 0.0, params);
    let mut best: Option<(MeanFieldResult, bool)> = None;
    let mut total_iter = 0;
    for s in starts {
        let (x, _, it_nm) = nelder_mead(&obj, s, 0.1, opts.max_iter);
        let (x, gn, it_n) = newton_polish(params, map(x), domain, tol, 200);
        total_iter += it_nm + it_n;
        let e = mean_field_energy(x[0], x[1], params);
        let candidate = MeanFieldResult {
            alpha_opt: x[0],
            theta_opt: x[1],
            energy: e,
            symmetry_broken: x[0] > SYMMETRY_BROKEN_ALPHA,
            iterations: total_iter,
            gradient_norm: gn,
        };
        let converged = gn <= tol;
        let better = match &best {
            None => true,
            Some((b, bc)) => (converged && !bc) || (converged == *bc && e < b.energy - 1e-14 * scale),
        };
        if better {
            best = Some((candidate, converged));
        }
    }
    let (mut res, converged) = best.unwrap();
    res.iterations = total_iter;
    if !converged {
        return Err(Error::NotConverged {
            iterations: total_iter,
            alpha: res.alpha_opt,
            theta: res.theta_opt,
            gradient_norm: res.gradient_norm,
        });
    }
    if res.energy > trivial + 1e-12 * scale {
        res = MeanFieldResult {
            alpha_opt: 0.0,
            theta_opt: 0.0,
            energy: trivial,
            symmetry_broken: false,
            ..res
        };
    }
    Ok(res)
}

/// Closed-form onset `E_j / E_l = exp(sqrt(2 E_c / E_l) / 2)`.
pub fn phase_boundary(ec_over_el: f64) -> f64 {
    (0.5 * (2.0 * ec_over_el).sqrt()).exp()
}

/// `alpha = (pi/2) (E_l / 2E_c)^{1/4} E_j / (E_j + E_l)`, the `E_c -> 0` limit.
pub fn analytic_alpha(params: &CircuitParams) -> f64 {
    0.5 * PI * (params.e_l / (2.0 * params.e_c)).powf(0.25) * params.e_j / (params.e_j + params.e_l)
}

/// Finite-`E_c` optimum `alpha = (pi / 2 phi0)(1 - hw / (hw + 2 E_j phi0^2 e^{-phi0^2/2}))`.
pub fn analytic_alpha_finite_ec(params: &CircuitParams) -> f64 {
    let (hw, p0) = (params.hbar_omega(), params.phi0());
    let k = 2.0 * params.e_j * p0 * p0 * (-0.5 * p0 * p0).exp();
    PI / (2.0 * p0) * (1.0 - hw / (hw + k))
}

/// `theta = ln(E_j/E_l - pi^2 E_j E_l / (2 (E_j + E_l)^2) + 1) / 4`.
pub fn analytic_theta(params: &CircuitParams) -> Result<f64> {
    let (ej, el) = (params.e_j, params.e_l);
    let arg = ej / el - PI * PI * ej * el / (2.0 * (ej + el).powi(2)) + 1.0;
    if !(arg > 0.0) {
        return Err(Error::Domain(format!("squeezing formula argument {arg} is not positive")));
    }
    Ok(0.25 * arg.ln())
}

/// `theta = ln(E_j / E_l) / 4`, valid for `E_j >> E_l`.
pub fn analytic_theta_asymptotic(params: &CircuitParams) -> f64 {
    0.25 * (params.e_j / params.e_l).ln()
}

/// `alpha' = (pi/2) (E_j / 2E_c)^{1/4} E_j / (E_j + E_l)`.
pub fn alpha_prime(params: &CircuitParams) -> f64 {
    0.5 * PI * (params.e_j / (2.0 * params.e_c)).powf(0.25) * params.e_j / (params.e_j + params.e_l)
}

/// Analytic ansatz built from the full squeezing formula.
pub fn analytic_ansatz(params: &CircuitParams) -> Result<SqueezedAnsatz> {
    Ok(SqueezedAnsatz::new(analytic_alpha(params), analytic_theta(params)?))
}

/// Normalized even cat `|alpha, theta> + |-alpha, theta>`.
pub fn even_cat(ansatz: &SqueezedAnsatz, basis: &BasisSpec) -> Result<StateVector> {
    let p = squeezed_coherent_state(ansatz, basis)?;
    let m = squeezed_coherent_state(&SqueezedAnsatz::new(-ansatz.alpha, ansatz.theta), basis)?;
    let sum: Vec<C64> = p.amplitudes().iter().zip(m.amplitudes()).map(|(a, b)| a + b).collect();
    StateVector::new(*basis, sum)
}

/// `|<gnd|psi_sq>|^2` for an arbitrary ansatz.
pub fn cat_overlap(params: &CircuitParams, basis: &BasisSpec, ansatz: &SqueezedAnsatz) -> Result<f64> {
    let eig = fluxonium_eigensystem(params, basis, 1)?;
    let cat = even_cat(ansatz, basis)?;
    Ok(linalg::vdot(&eig.state(0), cat.amplitudes()).norm_sqr())
}

/// Overlap of the exact sweet-spot ground state with the even cat built from
/// the `E_c -> 0` displacement and the asymptotic squeezing, clamped at
/// `theta >= 0` so the trivial phase reduces to the vacuum.
pub fn ground_overlap(params: &CircuitParams, basis: &BasisSpec) -> Result<f64> {
    let ansatz = SqueezedAnsatz::new(analytic_alpha(params), analytic_theta_asymptotic(params).max(0.0));
    cat_overlap(&params.with_phi_e(PI), basis, &ansatz)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxStatistics {
    /// `pi E_j / (E_j + E_l)`; the two codewords sit at `±` this value.
    pub mean_flux: f64,
    /// `sqrt(2 E_c / E_j)`.
    pub flux_variance: f64,
    /// Persistent current `I / I_0 = sin(mean_flux)`.
    pub current_ratio: f64,
}

pub fn flux_statistics(params: &CircuitParams) -> FluxStatistics {
    let mean = PI * params.e_j / (params.e_j + params.e_l);
    FluxStatistics {
        mean_flux: mean,
        flux_variance: (2.0 * params.e_c / params.e_j).sqrt(),
        current_ratio: mean.sin(),
    }
}
