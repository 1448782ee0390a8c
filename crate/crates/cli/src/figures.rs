//! Data behind each reproducible figure: a table plus a JSON summary of
//! the scalars worth checking.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use clap::ValueEnum;
use clockmag::ac::{filter_response, model_first_order, simulate_ac, AcSignal};
use clockmag::dc::{fringe_phase, phase_grid, ramsey_scan, DcProtocolSpec, ScanMode};
use clockmag::diabatic::{epsilon_d_dyson, epsilon_d_linear_gamma, ramp_integrator, scan_plane, simulate_ramp, PhaseModel, RampProfile, RampSpec};
use clockmag::hyperfine::{beta, rabi_probability, PolarizationEllipse};
use clockmag::sensitivity::{geometric_limit, measurement_count, numeric_optimize, OptimizeOptions};
use clockmag::two_spin::{calibrated_area, prob_s_closed, sequence_prob_s_lab};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::table::ResultTable;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    TwoSpinFringe,
    RabiScan,
    DcFringe,
    FringePhase,
    AcFilter,
    DiabaticRamp,
    DiabaticPlane,
    SensitivityPlane,
}

impl Figure {
    pub fn id(&self) -> &'static str {
        match self {
            Self::TwoSpinFringe => "two-spin-fringe",
            Self::RabiScan => "rabi-scan",
            Self::DcFringe => "dc-fringe",
            Self::FringePhase => "fringe-phase",
            Self::AcFilter => "ac-filter",
            Self::DiabaticRamp => "diabatic-ramp",
            Self::DiabaticPlane => "diabatic-plane",
            Self::SensitivityPlane => "sensitivity-plane",
        }
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

pub fn reproduce(fig: Figure, cfg: &RunConfig) -> Result<(ResultTable, Value), CliError> {
    match fig {
        Figure::TwoSpinFringe => two_spin_fringe(cfg),
        Figure::RabiScan => rabi_scan(cfg),
        Figure::DcFringe => dc_fringe(cfg),
        Figure::FringePhase => fringe_phase_curves(cfg),
        Figure::AcFilter => ac_filter(cfg),
        Figure::DiabaticRamp => diabatic_ramp(cfg),
        Figure::DiabaticPlane => diabatic_plane(cfg),
        Figure::SensitivityPlane => sensitivity_plane(cfg),
    }
}

fn two_spin_fringe(cfg: &RunConfig) -> Result<(ResultTable, Value), CliError> {
    let mut t = ResultTable::new(&[("chi", "rad"), ("phi", "rad"), ("prob_s_lab", "1"), ("prob_s_closed", "1")]);
    let mut at_zero = Vec::new();
    let mut worst = 0.0f64;
    for &chi in &cfg.two_spin.chi {
        let area = calibrated_area(chi)?;
        for phi in linspace(-PI, PI, cfg.two_spin.phi_points) {
            let (lab, closed) = (sequence_prob_s_lab(chi, phi, area)?, prob_s_closed(chi, phi)?);
            worst = worst.max((lab - closed).abs());
            t.push(vec![chi, phi, lab, closed]);
        }
        at_zero.push(json!({ "chi": chi, "prob_s": prob_s_closed(chi, 0.0)? }));
    }
    Ok((t, json!({ "value_at_phi_zero": at_zero, "max_lab_closed_difference": worst })))
}

fn first_maximum(f: impl Fn(f64) -> f64, step: f64, limit: f64) -> Option<f64> {
    let mut x = step;
    while x < limit {
        let (a, b, c) = (f(x - step), f(x), f(x + step));
        if b >= a && b > c {
            return Some(x + 0.5 * step * (a - c) / (a - 2.0 * b + c));
        }
        x += step;
    }
    None
}

fn rabi_scan(cfg: &RunConfig) -> Result<(ResultTable, Value), CliError> {
    let b = &cfg.rabi_scan;
    let mut t = ResultTable::new(&[("phi", "rad"), ("pulse_area", "rad"), ("transfer", "1")]);
    for phi in linspace(-FRAC_PI_2, FRAC_PI_2, b.phi_points) {
        for area in linspace(0.0, b.area_max, b.area_points) {
            t.push(vec![phi, area, rabi_probability(1.0, area, phi, b.ratio)?]);
        }
    }
    let limit = b.area_max.max(4.0 * PI / b.ratio.max(1e-3));
    let m0 = first_maximum(|x| rabi_probability(1.0, x, 0.0, b.ratio).unwrap_or(f64::NAN), 1e-3, limit);
    let m90 = first_maximum(|x| rabi_probability(1.0, x, FRAC_PI_2, b.ratio).unwrap_or(f64::NAN), 1e-3, limit);
    Ok((
        t,
        json!({
            "first_maximum_phi_0": m0,
            "first_maximum_phi_pi_2": m90,
            "fitted_ratio": m90.map(|x| PI / x),
        }),
    ))
}

fn dc_fringe(cfg: &RunConfig) -> Result<(ResultTable, Value), CliError> {
    let b = &cfg.dc_ramsey;
    let e = PolarizationEllipse::in_xz_plane(1.0, b.ratio, 0.0)?;
    let grid = phase_grid(b.theta_points);
    let mut t = ResultTable::new(&[("phi", "rad"), ("theta", "rad"), ("p2", "1")]);
    let mut fringes = Vec::new();
    for &phi in &b.phi {
        let mode = if b.simulate { ScanMode::Simulation(cfg.integrator.config(cfg.integrator.steps_per_period)) } else { ScanMode::ClosedForm };
        let scan = ramsey_scan(&DcProtocolSpec::new(e, phi, 0.0), &grid, mode)?;
        for (th, p) in scan.theta_grid.iter().zip(&scan.p2_values) {
            t.push(vec![phi, *th, *p]);
        }
        fringes.push(json!({
            "phi": phi,
            "theta_f_scan": scan.theta_f,
            "theta_f_formula": fringe_phase(phi, b.ratio)?,
            "visibility": scan.visibility,
        }));
    }
    Ok((t, json!({ "ratio": b.ratio, "fringes": fringes })))
}

fn fringe_phase_curves(cfg: &RunConfig) -> Result<(ResultTable, Value), CliError> {
    let b = &cfg.dc_ramsey;
    let mut t = ResultTable::new(&[("ratio", "1"), ("phi", "rad"), ("theta_f", "rad")]);
    let mut jumps = Vec::new();
    for &r in &b.ratios {
        let phis = linspace(-PI, PI, b.phi_points);
        let vals: Vec<f64> = phis.iter().map(|&p| fringe_phase(p, r).unwrap_or(f64::NAN)).collect();
        let mut biggest = (0.0f64, f64::NAN);
        for i in 1..vals.len() {
            let d = ((vals[i] - vals[i - 1] + PI).rem_euclid(TAU) - PI).abs();
            if d > biggest.0 {
                biggest = (d, 0.5 * (phis[i] + phis[i - 1]));
            }
        }
        for (p, v) in phis.iter().zip(&vals) {
            t.push(vec![r, *p, *v]);
        }
        jumps.push(json!({ "ratio": r, "largest_step": biggest.0, "at_phi": biggest.1 }));
    }
    Ok((t, json!({ "jumps": jumps })))
}

fn ac_filter(cfg: &RunConfig) -> Result<(ResultTable, Value), CliError> {
    let b = &cfg.ac_filter;
    let drive = b.drive();
    let fastest = b.omega0_max.max(b.omega_m).max(drive.omega1 * beta(b.phi0, b.ratio).max(1.0));
    let steps = (cfg.integrator.steps_per_period as f64 * fastest / b.omega_m).ceil() as usize;
    let icfg = cfg.integrator.config(steps);
    let omegas = linspace(b.omega0_min, b.omega0_max, b.points);
    let rows: Vec<Result<Vec<f64>, CliError>> = omegas
        .par_iter()
        .map(|&w| {
            let s = AcSignal::locked(b.phi0, w);
            let sim = if b.simulate { *simulate_ac(&s, &drive, &icfg)?.last().unwrap_or(&f64::NAN) } else { f64::NAN };
            Ok(vec![w, sim, model_first_order(&s, &drive)?, filter_response(&s, &drive)?.value])
        })
        .collect();
    let mut t = ResultTable::new(&[("omega0", "rad/s"), ("p2_simulated", "1"), ("p2_model", "1"), ("p2_filter", "1")]);
    for r in rows {
        t.push(r?);
    }
    let col = if b.simulate { 1 } else { 2 };
    let peak = t.rows.iter().max_by(|x, y| x[col].total_cmp(&y[col])).map(|r| (r[0], r[col]));
    Ok((
        t,
        json!({
            "omega1": drive.omega1,
            "steps_per_modulation_period": steps,
            "peak_omega0": peak.map(|p| p.0),
            "peak_p2": peak.map(|p| p.1),
            "linear_filter_peak": 0.5 + TAU * b.n as f64 * b.phi0 * drive.omega2() / b.omega_m,
        }),
    ))
}

fn diabatic_ramp(cfg: &RunConfig) -> Result<(ResultTable, Value), CliError> {
    let b = &cfg.diabatic;
    let spp = cfg.integrator.steps_per_period;
    let times = b.ramp_time.points();
    let rows: Vec<Result<Vec<f64>, CliError>> = times
        .par_iter()
        .map(|&t| {
            let lg = RampSpec::new(b.b_initial, b.b_final, 1.0, t, RampProfile::LinearGamma)?;
            let lb = RampSpec { profile: RampProfile::LinearB, ..lg.clone() };
            let est = epsilon_d_linear_gamma(&lg)?;
            Ok(vec![
                t,
                simulate_ramp(&lg, &ramp_integrator(&lg, spp))?,
                simulate_ramp(&lb, &ramp_integrator(&lb, spp))?,
                est.closed_form,
                epsilon_d_dyson(&lg, 20_000, PhaseModel::Exact)?,
                est.bound,
            ])
        })
        .collect();
    let mut t = ResultTable::new(&[
        ("ramp_time", "1/delta"),
        ("eps_sim_linear_gamma", "1"),
        ("eps_sim_linear_b", "1"),
        ("eps_closed_form", "1"),
        ("eps_dyson", "1"),
        ("eps_bound", "1"),
    ]);
    for r in rows {
        t.push(r?);
    }
    let stringent = t.rows.iter().all(|r| r[5] >= r[1]);
    Ok((t, json!({ "b_initial": b.b_initial, "b_final": b.b_final, "bound_above_simulation": stringent })))
}

fn diabatic_plane(cfg: &RunConfig) -> Result<(ResultTable, Value), CliError> {
    let b = &cfg.diabatic;
    let pts = scan_plane(&b.bi_over_bf.points(), &b.bf_over_delta.points(), b.plane_ramp_time, cfg.integrator.steps_per_period)?;
    let mut t = ResultTable::new(&[
        ("bi_over_bf", "1"),
        ("bf_over_delta", "1"),
        ("eps_simulated", "1"),
        ("eps_bound", "1"),
        ("eps_closed_form", "1"),
        ("bound_excess", "1"),
    ]);
    for p in &pts {
        t.push(vec![p.bi_over_bf, p.bf_over_delta, p.simulated, p.bound, p.closed_form, (p.bound - p.simulated) / p.simulated]);
    }
    let max = pts.iter().max_by(|x, y| x.simulated.total_cmp(&y.simulated));
    Ok((
        t,
        json!({
            "max_epsilon_d": max.map(|p| p.simulated),
            "max_at": max.map(|p| [p.bi_over_bf, p.bf_over_delta]),
            "min_bound_excess": pts.iter().map(|p| (p.bound - p.simulated) / p.simulated).fold(f64::INFINITY, f64::min),
            "bound_violations": pts.iter().filter(|p| p.bound < p.simulated).count(),
        }),
    ))
}

fn sensitivity_plane(cfg: &RunConfig) -> Result<(ResultTable, Value), CliError> {
    let b = &cfg.sensitivity;
    let n = match (b.density, b.volume, b.t_total) {
        (Some(d), Some(v), Some(tt)) => measurement_count(d, v, tt, 1.0),
        _ => b.n,
    };
    if n == 0 {
        return Err(CliError::Config("sensitivity.n must be positive".into()));
    }
    let opts = OptimizeOptions { t_max: b.t_max, mask_threshold: b.mask_threshold, ..Default::default() };
    let bs = b.b_tilde.points();
    let ws = b.omega_ratio.points();
    let cells = numeric_optimize(&bs, &ws, n, &opts);
    let mut t = ResultTable::new(&[("b_tilde", "1"), ("omega_ratio", "1"), ("delta_tilde", "1"), ("t_tilde", "1"), ("masked", "1")]);
    for c in &cells {
        match c.best {
            Some((v, tt)) => t.push(vec![c.b_tilde, c.omega_ratio, v, tt, 0.0]),
            None => t.push(vec![c.b_tilde, c.omega_ratio, f64::NAN, f64::NAN, 1.0]),
        }
    }
    let mut ridge = Vec::new();
    for (i, &bt) in bs.iter().enumerate() {
        let row = &cells[i * ws.len()..(i + 1) * ws.len()];
        if let Some(c) = row.iter().filter(|c| c.best.is_some()).min_by(|x, y| x.best.unwrap().0.total_cmp(&y.best.unwrap().0)) {
            let (v, tt) = c.best.unwrap();
            ridge.push(json!({ "b_tilde": bt, "omega_ratio": c.omega_ratio, "delta_tilde": v, "t_tilde": tt }));
        }
    }
    let best = cells.iter().filter_map(|c| c.best.map(|v| (c, v))).min_by(|x, y| x.1 .0.total_cmp(&y.1 .0));
    Ok((
        t,
        json!({
            "n": n,
            "min_delta_tilde": best.map(|b| b.1 .0),
            "min_at": best.map(|b| [b.0.b_tilde, b.0.omega_ratio, b.1 .1]),
            "ideal_limit": geometric_limit(n),
            "ridge": ridge,
        }),
    ))
}
