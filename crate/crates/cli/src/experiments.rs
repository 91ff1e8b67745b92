//! Per-point evaluation of each experiment.

use std::collections::BTreeMap;
use std::fmt;

use anyhow::{anyhow, Result};
use fluxcat::circuits::{self, CircuitParams, Cos2ThetaParams, QpsPairParams};
use fluxcat::gates::{self, GateSchedule, RampShape};
use fluxcat::lifetimes::{self, LifetimeProtocolConfig, WellSystem};
use fluxcat::lindblad;
use fluxcat::meanfield;
use fluxcat::operators::BasisSpec;

use crate::config::{BasisKind, Experiment, Numerics, Ramp};

/// One output value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(usize),
    Bool(bool),
}

impl Cell {
    pub fn as_f64(self) -> f64 {
        match self {
            Cell::Float(v) => v,
            Cell::Int(v) => v as f64,
            Cell::Bool(b) => b as u8 as f64,
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Float(v) => write!(f, "{v}"),
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Bool(v) => write!(f, "{v}"),
        }
    }
}

/// Output column names, in CSV order.
pub fn output_columns(e: Experiment, n: &Numerics) -> Vec<String> {
    let fixed: &[&str] = match e {
        Experiment::PhaseDiagram => {
            &["alpha_opt", "theta_opt", "energy", "symmetry_broken", "boundary_ej_over_el", "iterations"]
        }
        Experiment::Overlap => &["overlap", "alpha", "theta", "alpha_prime"],
        Experiment::Splitting => &["e01", "e02", "alpha_prime_sq", "ln_e01"],
        Experiment::Bitflip => {
            &["t_bf", "x2_t_bf", "r_squared", "late_timescale", "censored", "k_levels", "relaxation_time"]
        }
        Experiment::Phaseflip => &["t_pf", "x2_t_pf", "r_squared", "censored", "k_levels"],
        Experiment::LindbladSpectrum => {
            let mut cols = Vec::new();
            for i in 0..n.spectrum_count {
                cols.push(format!("lambda{i}_re"));
                cols.push(format!("lambda{i}_im"));
            }
            cols.push("k_levels".into());
            return cols;
        }
        Experiment::Xgate => &["error", "fidelity", "gate_time", "separation_ratio", "steps"],
        Experiment::Cos2thetaLifetimes => {
            &["t_bf", "x2_t_bf", "bf_r_squared", "t_pf", "x2_t_pf", "pf_r_squared", "k_levels"]
        }
        Experiment::QpsPair => {
            &["g", "fit_residual", "lowest_are_logical", "kepler_ratio", "e_pp", "e_pm", "e_mp", "e_mm"]
        }
    };
    fixed.iter().map(|s| s.to_string()).collect()
}

fn get(p: &BTreeMap<String, f64>, k: &str) -> Result<f64> {
    p.get(k).copied().ok_or_else(|| anyhow!("missing parameter `{k}`"))
}

fn basis(n: &Numerics, e: Experiment) -> Result<BasisSpec> {
    Ok(match n.basis_for(e) {
        BasisKind::Fock => BasisSpec::fock(n.fock_dim_for(e))?,
        BasisKind::Grid => BasisSpec::flux_grid(n.phi_max, n.grid_points)?,
    })
}

fn protocol(p: &BTreeMap<String, f64>, n: &Numerics, e: Experiment) -> Result<LifetimeProtocolConfig> {
    let x = get(p, "x")?;
    let cfg = LifetimeProtocolConfig {
        delta_phi_e: p.get("delta_phi_e").copied().unwrap_or(0.0),
        k_bt: get(p, "k_bt")?,
        x_flux: x,
        x_charge: x,
        k_min: n.k_levels,
        n_delocalized: n.n_delocalized,
        grid_points: n.grid_points,
        phi_max: n.phi_max,
        n_max: n.n_max_for(e),
        points_per_decade: n.points_per_decade,
        min_r_squared: n.min_r_squared,
        right_well: None,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn fluxonium(p: &BTreeMap<String, f64>) -> Result<CircuitParams> {
    Ok(CircuitParams::sweet_spot(get(p, "e_c")?, get(p, "e_l")?, get(p, "e_j")?)?)
}

/// Evaluates one sweep point. Values are in the order of [`output_columns`].
pub fn run_point(e: Experiment, p: &BTreeMap<String, f64>, n: &Numerics) -> Result<Vec<Cell>> {
    use Cell::*;
    Ok(match e {
        Experiment::PhaseDiagram => {
            let ec = get(p, "ec_over_el")?;
            let ej = get(p, "ej_over_el")?;
            let r = meanfield::optimize_mean_field(&CircuitParams::sweet_spot(ec, 1.0, ej)?)?;
            vec![
                Float(r.alpha_opt),
                Float(r.theta_opt),
                Float(r.energy),
                Bool(r.symmetry_broken),
                Float(meanfield::phase_boundary(ec)),
                Int(r.iterations),
            ]
        }
        Experiment::Overlap => {
            let c = fluxonium(p)?;
            let b = BasisSpec::fock(n.fock_dim_for(e))?;
            vec![
                Float(meanfield::ground_overlap(&c, &b)?),
                Float(meanfield::analytic_alpha(&c)),
                Float(meanfield::analytic_theta_asymptotic(&c).max(0.0)),
                Float(meanfield::alpha_prime(&c)),
            ]
        }
        Experiment::Splitting => {
            let c = CircuitParams::new(get(p, "e_c")?, get(p, "e_l")?, get(p, "e_j")?, get(p, "phi_e")?)?;
            let eig = circuits::fluxonium_eigensystem(&c, &basis(n, e)?, 3)?;
            let (e01, e02) = (eig.gap(1), eig.gap(2));
            vec![Float(e01), Float(e02), Float(meanfield::alpha_prime(&c).powi(2)), Float(e01.ln())]
        }
        Experiment::Bitflip => {
            let cfg = protocol(p, n, e)?;
            let sys = WellSystem::fluxonium(&fluxonium(p)?, &cfg)?;
            let fit = lifetimes::bitflip_time(&sys, &cfg)?;
            vec![
                Float(fit.timescale),
                Float(cfg.x_squared() * fit.timescale),
                Float(fit.r_squared),
                Float(fit.late_timescale),
                Bool(fit.censored),
                Int(sys.k()),
                Float(sys.relaxation_time()),
            ]
        }
        Experiment::Phaseflip => {
            let cfg = protocol(p, n, e)?;
            let sys = WellSystem::fluxonium(&fluxonium(p)?, &cfg)?;
            let fit = lifetimes::phaseflip_time(&sys, &cfg)?;
            vec![
                Float(fit.timescale),
                Float(cfg.x_squared() * fit.timescale),
                Float(fit.r_squared),
                Bool(fit.censored),
                Int(sys.k()),
            ]
        }
        Experiment::LindbladSpectrum => {
            let cfg = protocol(p, n, e)?;
            let sys = WellSystem::fluxonium(&fluxonium(p)?, &cfg)?;
            let lams = lindblad::lindblad_spectrum(&sys.model, n.spectrum_count)?;
            let mut out = Vec::with_capacity(2 * n.spectrum_count + 1);
            for i in 0..n.spectrum_count {
                let l = lams.get(i).copied();
                out.push(Float(l.map_or(f64::NAN, |l| l.re)));
                out.push(Float(l.map_or(f64::NAN, |l| l.im)));
            }
            out.push(Int(sys.k()));
            out
        }
        Experiment::Xgate => {
            let c = CircuitParams::sweet_spot(get(p, "e_c")?, get(p, "e_l")?, get(p, "e_j_max")?)?;
            let ramp = match n.ramp {
                Ramp::Linear => RampShape::Linear,
                Ramp::Cosine => RampShape::Cosine,
            };
            let mut s = GateSchedule::new(get(p, "e_j_max")?, get(p, "e_j_min")?, get(p, "t_rise")?)?.with_ramp(ramp);
            if let Some(&h) = p.get("hold") {
                s = s.with_hold(h);
            }
            let r = gates::x_gate_simulate_with(&c, &s, &basis(n, e)?, n.steps_per_inverse_omega)?;
            vec![Float(r.error), Float(r.fidelity), Float(r.gate_time), Float(r.separation_ratio), Int(r.steps)]
        }
        Experiment::Cos2thetaLifetimes => {
            let e_j2 = get(p, "e_j2")?;
            let e_j1 = p.get("e_j1").copied().unwrap_or(0.03 * e_j2);
            let c = Cos2ThetaParams::new(e_j2, e_j1, get(p, "e_c")?, 0.0, 0.0)?;
            let cfg = protocol(p, n, e)?;
            let sys = WellSystem::cos2theta(&c, &cfg)?;
            let bf = lifetimes::bitflip_time(&sys, &cfg)?;
            let pf = lifetimes::phaseflip_time(&sys, &cfg)?;
            let x2 = cfg.x_squared();
            vec![
                Float(bf.timescale),
                Float(x2 * bf.timescale),
                Float(bf.r_squared),
                Float(pf.timescale),
                Float(x2 * pf.timescale),
                Float(pf.r_squared),
                Int(sys.k()),
            ]
        }
        Experiment::QpsPair => {
            let q = QpsPairParams::new(get(p, "e_c_node")?, get(p, "e_q")?, get(p, "e_j")?)?;
            let xx = circuits::xx_coupling(&q, &BasisSpec::rotor(n.n_max_for(e)))?;
            let [pp, pm, mp, mm] = xx.sector_energies;
            vec![
                Float(xx.g),
                Float(xx.fit_residual),
                Bool(xx.lowest_are_logical),
                Float(q.kepler_ratio()),
                Float(pp),
                Float(pm),
                Float(mp),
                Float(mm),
            ]
        }
    })
}
