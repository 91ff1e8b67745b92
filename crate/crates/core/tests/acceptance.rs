//! Acceptance criteria. Runs without the libtest harness so every criterion
//! prints its PASS/FAIL line; exits nonzero if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use fluxcat::circuits::{self, CircuitParams, Cos2ThetaParams, QpsPairParams};
use fluxcat::gates::{x_gate_simulate, GateSchedule};
use fluxcat::lifetimes::{self, linear_fit, LifetimeProtocolConfig, WellSystem};
use fluxcat::lindblad::{lindblad_spectrum, liouvillian, spectral_density, trace_defect};
use fluxcat::linalg::{self, C64};
use fluxcat::meanfield;
use fluxcat::operators::BasisSpec;
use rand::{rngs::StdRng, Rng, SeedableRng};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    linspace(a.ln(), b.ln(), n).into_iter().map(f64::exp).collect()
}

fn spread(v: &[f64]) -> f64 {
    let max = v.iter().cloned().fold(f64::MIN, f64::max);
    let min = v.iter().cloned().fold(f64::MAX, f64::min);
    max / min
}

fn c1_phase_boundary() -> Outcome {
    // E_c/E_l = 0 is singular for the optimizer; the first column sits at 1e-3.
    let ec = linspace(0.0, 3.0, 20).into_iter().map(|x| x.max(1e-3)).collect::<Vec<_>>();
    let ej = linspace(0.5, 4.0, 20);
    let broken = |c: f64, j: f64| {
        meanfield::optimize_mean_field(&CircuitParams::sweet_spot(c, 1.0, j).unwrap()).unwrap().symmetry_broken
    };
    let mut worst = 0.0f64;
    let mut ok = true;
    for &c in &ec {
        let flags: Vec<bool> = ej.iter().map(|&j| broken(c, j)).collect();
        let Some(first) = flags.iter().position(|&b| b) else {
            ok = false;
            continue;
        };
        if first == 0 || flags[first..].iter().any(|&b| !b) {
            ok = false;
            continue;
        }
        // Resolve the onset inside the grid cell.
        let (mut lo, mut hi) = (ej[first - 1], ej[first]);
        for _ in 0..30 {
            let m = 0.5 * (lo + hi);
            if broken(c, m) {
                hi = m
            } else {
                lo = m
            }
        }
        let dev = (0.5 * (lo + hi) / meanfield::phase_boundary(c) - 1.0).abs();
        worst = worst.max(dev);
    }
    outcome(ok && worst <= 0.1, format!("max relative onset deviation {worst:.2e} (limit 0.1) over 20x20 grid"))
}

fn c2_ansatz_fidelity() -> Outcome {
    let b = BasisSpec::fock(150).unwrap();
    let ratios = [15.0, 30.0, 45.0, 60.0];
    let ec_el = [0.05, 0.1, 0.2, 0.35, 0.5];
    let mut min = (f64::MAX, 0.0, 0.0);
    let mut monotone = true;
    for &c in &ec_el {
        let ov: Vec<f64> = ratios
            .iter()
            .map(|&r| meanfield::ground_overlap(&CircuitParams::sweet_spot(c, 1.0, r * c).unwrap(), &b).unwrap())
            .collect();
        for (&o, &r) in ov.iter().zip(&ratios) {
            if o < min.0 {
                min = (o, r, c);
            }
        }
        monotone &= ov[3] > ov[0];
    }
    outcome(
        min.0 >= 0.99 && monotone,
        format!(
            "min overlap {:.4} at E_j/E_c={}, E_c/E_l={} (limit 0.99); overlap(60) > overlap(15) for every E_c/E_l: {monotone}",
            min.0, min.1, min.2
        ),
    )
}

fn c3_splitting() -> Outcome {
    let b = BasisSpec::fock(150).unwrap();
    let sweeps: [(&str, Vec<CircuitParams>); 3] = [
        ("a", linspace(1.0, 10.0, 8).into_iter().map(|r| CircuitParams::sweet_spot(0.1, 1.0, 0.1 * r).unwrap()).collect()),
        ("b", linspace(0.1, 3.0, 8).into_iter().map(|c| CircuitParams::sweet_spot(c, 1.0, 10.0).unwrap()).collect()),
        ("c", linspace(10.0, 30.0, 8).into_iter().map(|l| CircuitParams::sweet_spot(1.0, l, 60.0).unwrap()).collect()),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, ps) in sweeps {
        let n: Vec<f64> = ps.iter().map(|p| meanfield::alpha_prime(p).powi(2)).collect();
        let y: Vec<f64> = ps.iter().map(|p| circuits::splitting(p, &b, 1).unwrap().ln()).collect();
        let (slope, _, r2) = linear_fit(&n, &y);
        ok &= slope < 0.0 && r2 >= 0.9;
        parts.push(format!("({name}) slope {slope:.3} r2 {r2:.4}"));
    }
    outcome(ok, parts.join(", "))
}

fn c4_gap_closing() -> Outcome {
    let b = BasisSpec::fock(150).unwrap();
    let ej = linspace(0.5, 2.0, 31);
    let mut mins = Vec::new();
    let mut ok = true;
    for c in [0.1, 0.02] {
        let e01: Vec<f64> =
            ej.iter().map(|&j| circuits::splitting(&CircuitParams::sweet_spot(c, 1.0, j).unwrap(), &b, 1).unwrap()).collect();
        let (i, &m) = e01.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        ok &= (ej[i] - 1.0).abs() <= 0.1;
        mins.push((c, ej[i], m));
    }
    ok &= mins[1].2 < mins[0].2;
    let detail = mins
        .iter()
        .map(|(c, at, m)| format!("E_c/E_l={c}: min eps01 {m:.3e} at E_j/E_l={at:.3}"))
        .collect::<Vec<_>>()
        .join("; ");
    outcome(ok, format!("{detail} (sweep E_j/E_l in [0.5, 2])"))
}

fn fig5_cfg() -> LifetimeProtocolConfig {
    LifetimeProtocolConfig::default()
}

fn c5_lindblad_structure() -> Outcome {
    let cfg = fig5_cfg();
    let sys = WellSystem::fluxonium(&CircuitParams::sweet_spot(0.1, 0.1, 3.0).unwrap(), &cfg).unwrap();
    let k = sys.k();
    let sup = liouvillian(&sys.model);
    let td = trace_defect(&sup, k);
    let spec = lindblad_spectrum(&sys.model, k * k).unwrap();
    let l0 = spec[0].norm();
    let max_re = spec[1..].iter().map(|l| l.re).fold(f64::MIN, f64::max);
    let db = [0.1, 0.5, 1.0, 3.0, 10.0]
        .iter()
        .map(|&w: &f64| (spectral_density(w, 1.0) / spectral_density(-w, 1.0) / w.exp() - 1.0).abs())
        .fold(0.0, f64::max);
    let s = 2.0;
    let scaled = lindblad_spectrum(&sys.model.scaled_couplings(s), k * k).unwrap();
    // Pair each mode with its counterpart at coupling s x by frequency and rescaled rate.
    let dist = |a: &C64, b: &C64| (b.re / (s * s) - a.re).abs() + (b.im - a.im).abs();
    let devs: Vec<f64> = spec[1..]
        .iter()
        .map(|a| {
            let b = scaled.iter().min_by(|p, q| dist(a, p).total_cmp(&dist(a, q))).unwrap();
            (b.re - s * s * a.re).abs() / (s * s * a.re.abs())
        })
        .collect();
    let scale_dev = devs.iter().cloned().fold(0.0, f64::max);
    let within = devs.iter().filter(|&&d| d <= 1e-8).count();
    let ok = td <= 1e-8 && l0 <= 1e-8 && max_re <= 1e-8 && db <= 1e-12 && scale_dev <= 1e-8;
    outcome(
        ok,
        format!(
            "trace defect {td:.2e}, |lambda0| {l0:.2e}, max Re lambda_i (i>0) {max_re:.2e}, detailed balance {db:.2e}, s^2 scaling worst rel dev {scale_dev:.2e}, lambda1 {:.2e}, {within}/{} modes within 1e-8 (k={k})",
            devs[0],
            devs.len()
        ),
    )
}

struct Fig5 {
    e_j: Vec<f64>,
    x2_bf_a: Vec<f64>,
    x2_pf_a: Vec<f64>,
    relax_a: Vec<f64>,
    tbf_a: Vec<f64>,
    x2_bf_b: Vec<f64>,
    x2_pf_b: Vec<f64>,
    elapsed: Duration,
}

fn fig5() -> Fig5 {
    let start = Instant::now();
    let cfg = fig5_cfg();
    let x2 = cfg.x_squared();
    let e_j = linspace(2.0, 6.0, 5);
    let mut f = Fig5 {
        e_j: e_j.clone(),
        x2_bf_a: vec![],
        x2_pf_a: vec![],
        relax_a: vec![],
        tbf_a: vec![],
        x2_bf_b: vec![],
        x2_pf_b: vec![],
        elapsed: Duration::ZERO,
    };
    for &j in &e_j {
        let sys = WellSystem::fluxonium(&CircuitParams::sweet_spot(0.1, 0.1, j).unwrap(), &cfg).unwrap();
        let bf = lifetimes::bitflip_time(&sys, &cfg).unwrap();
        let pf = lifetimes::phaseflip_time(&sys, &cfg).unwrap();
        f.tbf_a.push(bf.timescale);
        f.x2_bf_a.push(x2 * bf.timescale);
        f.x2_pf_a.push(x2 * pf.timescale);
        f.relax_a.push(sys.relaxation_time());
    }
    for c in logspace(0.2, 0.01, 7) {
        let p = CircuitParams::sweet_spot(c, 0.1, 3.6).unwrap();
        let sys = WellSystem::fluxonium(&p, &cfg).unwrap();
        f.x2_bf_b.push(x2 * lifetimes::bitflip_time(&sys, &cfg).unwrap().timescale);
        f.x2_pf_b.push(x2 * lifetimes::phaseflip_time(&sys, &cfg).unwrap().timescale);
    }
    f.elapsed = start.elapsed();
    f
}

/// Points in the upper half of the swept range, middle point included.
fn top_half(v: &[f64]) -> &[f64] {
    &v[v.len() / 2..]
}

fn c6_noise_bias(f: &Fig5) -> Outcome {
    let ln: Vec<f64> = f.x2_bf_a.iter().map(|v| v.ln()).collect();
    let (slope, _, r2) = linear_fit(&f.e_j, &ln);
    let sat_bf = spread(top_half(&f.x2_bf_b));
    let sat_pf_c = spread(top_half(&f.x2_pf_a));
    let sat_pf_d = spread(top_half(&f.x2_pf_b));
    let bias = f.e_j.iter().zip(f.x2_bf_a.iter().zip(&f.x2_pf_a)).filter(|(j, _)| **j >= 4.0).all(|(_, (b, p))| b > p);
    let ok = slope > 0.0
        && r2 >= 0.95
        && sat_bf <= 2.0
        && sat_pf_c <= 1.5
        && sat_pf_d <= 1.5
        && bias
        && f.elapsed < Duration::from_secs(30 * 60);
    outcome(
        ok,
        format!(
            "(a) slope {slope:.3} r2 {r2:.4}; (b) T_bf top-half ratio {sat_bf:.3}; (c) T_pf ratio {sat_pf_c:.3}; (d) T_pf ratio {sat_pf_d:.3}; T_bf > T_pf at E_j>=4: {bias}; x2*T_bf {:?}; {:.0} s",
            f.x2_bf_a.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>(),
            f.elapsed.as_secs_f64()
        ),
    )
}

fn c7_spectrum_trace(f: &Fig5) -> Outcome {
    let ratios: Vec<f64> = f.tbf_a.iter().zip(&f.relax_a).map(|(t, r)| r / t).collect();
    let ok = ratios.iter().all(|r| (0.5..=2.0).contains(r));
    outcome(ok, format!("(1/|Re lambda1|) / T_bf = {:?}", ratios.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>()))
}

fn c8_cos2theta() -> Outcome {
    let start = Instant::now();
    let cfg = LifetimeProtocolConfig { n_max: 30, ..fig5_cfg() };
    let x2 = cfg.x_squared();
    let e = linspace(2.0, 6.0, 5);
    let (mut bf, mut pf) = (vec![], vec![]);
    for &j in &e {
        let p = Cos2ThetaParams::new(j, 0.03 * j, 0.1, 0.0, 0.0).unwrap();
        let sys = WellSystem::cos2theta(&p, &cfg).unwrap();
        bf.push(x2 * lifetimes::bitflip_time(&sys, &cfg).unwrap().timescale);
        pf.push(x2 * lifetimes::phaseflip_time(&sys, &cfg).unwrap().timescale);
    }
    let ln: Vec<f64> = bf.iter().map(|v| v.ln()).collect();
    let (slope, _, r2) = linear_fit(&e, &ln);
    let sat = spread(top_half(&pf));
    let el = start.elapsed();
    outcome(
        slope > 0.0 && r2 >= 0.95 && sat <= 1.5 && el < Duration::from_secs(15 * 60),
        format!("bit-flip slope {slope:.3} r2 {r2:.4}; phase-flip top-half ratio {sat:.3}; {:.0} s", el.as_secs_f64()),
    )
}

fn c9_xgate() -> Outcome {
    let p = CircuitParams::sweet_spot(0.5, 0.5, 10.0).unwrap();
    let r = x_gate_simulate(&p, &GateSchedule::new(10.0, 0.1, 0.05).unwrap(), &BasisSpec::fock(100).unwrap()).unwrap();
    outcome(
        r.gate_time < 1.0 && r.error <= 1e-3,
        format!("gate time {:.4} ns, well-miss error {:.3e} (limit 1e-3)", r.gate_time, r.error),
    )
}

fn c10_one_over_f() -> Outcome {
    let p = CircuitParams::new(0.1, 0.1, 6.0, PI + 0.03 * PI).unwrap();
    let d = lifetimes::flux_derivative_e01(&p, &BasisSpec::flux_grid(2.0 * PI, 801).unwrap()).unwrap();
    let target = PI * p.e_l;
    let rel = (d.abs() / target - 1.0).abs();
    outcome(rel <= 0.05, format!("d eps01/d phi_e = {d:.5}, pi*E_l = {target:.5}, relative deviation {rel:.3}"))
}

fn c11_kepler_qps() -> Outcome {
    let mut rng = StdRng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let q = rng.random_range(-6.0..6.0);
        let r = rng.random_range(0.0..1.0);
        worst = worst.max(circuits::kepler_solve(q, r).unwrap().residual);
    }
    let linear = [-3.3, -0.4, 0.0, 1.7, 5.9].iter().all(|&q| circuits::kepler_solve(q, 0.0).unwrap().x == -q / 2.0);

    let b = BasisSpec::rotor(12);
    let p = QpsPairParams::new(0.05, 0.2, 8.0).unwrap();
    let slip = circuits::qps_phase_slip_term(&p, &b).unwrap();
    let l = circuits::qps_logical_states(&p, &b).unwrap();
    let m11 = slip.matrix_element(&l.pair(1, 1), &l.pair(0, 0)).norm();
    let m01 = slip.matrix_element(&l.pair(0, 1), &l.pair(0, 0)).norm();

    let eq = [0.05, 0.1, 0.2];
    let g: Vec<f64> =
        eq.iter().map(|&q| circuits::xx_coupling(&QpsPairParams::new(0.05, q, 8.0).unwrap(), &b).unwrap().g).collect();
    let per: Vec<f64> = g.iter().zip(&eq).map(|(g, q)| g / q).collect();
    let lin = spread(&per) - 1.0;
    let ok = worst <= 1e-12 && linear && m11 > 1e-10 && m01 <= 1e-10 && g.iter().all(|&x| x > 0.0) && lin <= 0.15;
    outcome(
        ok,
        format!(
            "max residual {worst:.2e}; linear limit exact: {linear}; |<11|V|00>| {m11:.3e}, |<01|V|00>| {m01:.2e}; g {g:?}, g/E_q spread {lin:.4}"
        ),
    )
}

fn c12_cross_basis() -> Outcome {
    let p = CircuitParams::new(0.3, 0.5, 14.0, 0.99 * PI).unwrap();
    let f = circuits::fluxonium_eigensystem(&p, &BasisSpec::fock(150).unwrap(), 4).unwrap();
    let g = circuits::fluxonium_eigensystem(&p, &BasisSpec::flux_grid(3.0 * PI, 2401).unwrap(), 4).unwrap();
    // The Fock Hamiltonian omits the zero-point energy.
    let zp = 0.5 * p.hbar_omega();
    let worst = f
        .energies
        .iter()
        .zip(&g.energies)
        .map(|(a, b)| ((a + zp) - b).abs() / b.abs())
        .fold(0.0, f64::max);
    outcome(worst <= 1e-4, format!("max relative deviation {worst:.2e} over 4 levels"))
}

fn main() -> ExitCode {
    linalg::use_sequential_kernels();
    let mut failed = 0;
    let mut report = |n: usize, limit: Option<Duration>, f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let mut o = f();
        let el = t.elapsed();
        if let Some(l) = limit {
            if el > l {
                o.pass = false;
                o.detail.push_str(&format!("; runtime {:.1} s over {} s", el.as_secs_f64(), l.as_secs()));
            }
        }
        if !o.pass {
            failed += 1;
        }
        println!("criterion {n:>2}: {} : {} [{:.1} s]", if o.pass { "PASS" } else { "FAIL" }, o.detail, el.as_secs_f64());
    };
    let min = |m: u64| Some(Duration::from_secs(60 * m));
    report(1, min(1), &c1_phase_boundary);
    report(2, min(2), &c2_ansatz_fidelity);
    report(3, min(2), &c3_splitting);
    report(4, min(1), &c4_gap_closing);
    report(5, min(1), &c5_lindblad_structure);
    let f = fig5();
    report(6, None, &|| c6_noise_bias(&f));
    report(7, None, &|| c7_spectrum_trace(&f));
    report(8, None, &c8_cos2theta);
    report(9, min(1), &c9_xgate);
    report(10, min(1), &c10_one_over_f);
    report(11, min(5), &c11_kepler_qps);
    report(12, min(1), &c12_cross_basis);
    println!("{} of 12 criteria passed", 12 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
