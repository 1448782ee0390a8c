//! Regime and resolution checks that run without evaluating anything.

use clockmag::hyperfine::beta;

use crate::config::RunConfig;
use crate::sweep;

/// Fewest steps per period of the fastest frequency.
pub const MIN_STEPS_PER_PERIOD: usize = 50;
/// "Much larger than" is taken as at least this ratio.
pub const SEPARATION: f64 = 2.0;
/// Largest signal angle for which the ac model is linear in the signal.
pub const SMALL_ANGLE: f64 = 0.1;

pub fn findings(cfg: &RunConfig) -> Vec<String> {
    let mut out = Vec::new();
    let spp = cfg.integrator.steps_per_period;
    if spp < MIN_STEPS_PER_PERIOD {
        out.push(format!("integrator: {spp} steps per period is under-resolved; use at least {MIN_STEPS_PER_PERIOD}"));
    }

    for &chi in &cfg.two_spin.chi {
        if chi.cos().abs() < 1e-9 {
            out.push(format!("two_spin: chi = {chi} leaves no field component along the drive"));
        }
    }
    if !(cfg.rabi_scan.ratio > 0.0) {
        out.push("rabi_scan: ratio must be positive".into());
    }

    let dc = &cfg.dc_ramsey;
    if !(dc.ratio > 0.0) {
        out.push("dc_ramsey: ratio must be positive".into());
    }
    if dc.theta_points < 8 {
        out.push(format!("dc_ramsey: {} phase points cannot locate a fringe; use at least 8", dc.theta_points));
    }
    for &phi in &dc.phi {
        if beta(phi, dc.ratio) >= 2.0 {
            out.push(format!("dc_ramsey: beta({phi}) >= 2, the fringe maximum turns into a minimum"));
        }
    }

    let ac = &cfg.ac_filter;
    if ac.phi0.abs() > SMALL_ANGLE {
        out.push(format!("linearity: ac signal angle {} rad exceeds the small-angle limit {SMALL_ANGLE}", ac.phi0));
    }
    if ac.n == 0 || !(ac.omega_m > 0.0) {
        out.push("ac_filter: need n >= 1 and omega_m > 0".into());
    }
    if !(ac.omega0_max >= ac.omega0_min) {
        out.push("ac_filter: omega0_max < omega0_min".into());
    }

    let d = &cfg.diabatic;
    if d.b_final < SEPARATION {
        out.push(format!("regime: B_f \u{226b} \u{3b4} violated (B_f/\u{3b4} = {})", d.b_final));
    }
    if d.b_initial < SEPARATION * d.b_final {
        out.push(format!("regime: B_i \u{226b} B_f violated (B_i/B_f = {})", d.b_initial / d.b_final));
    }
    if d.bf_over_delta.points().iter().any(|&x| x < SEPARATION) {
        out.push("regime: B_f \u{226b} \u{3b4} violated somewhere on the diabatic plane".into());
    }
    if d.bi_over_bf.points().iter().any(|&x| x < SEPARATION) {
        out.push("regime: B_i \u{226b} B_f violated somewhere on the diabatic plane".into());
    }

    let s = &cfg.sensitivity;
    if s.n == 0 {
        out.push("sensitivity: n must be positive".into());
    }
    if !(0.0..1.0).contains(&s.t_max) {
        out.push("sensitivity: t_max must lie in [0, 1)".into());
    }
    if s.b_tilde.points().iter().chain(s.omega_ratio.points().iter()).any(|&x| !(x > 0.0)) {
        out.push("sensitivity: grid values must be positive".into());
    }

    if let Some(sw) = &cfg.sweep {
        out.extend(sweep::check(sw));
    }
    out
}
