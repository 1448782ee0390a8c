//! Cartesian-product evaluation of named library operations.

use std::collections::BTreeMap;

use clockmag::ac::{filter_response, model_first_order, AcDriveSpec, AcSignal};
use clockmag::dc::{fringe_phase, p2_exact};
use clockmag::diabatic::{epsilon_d_linear_gamma, ramp_integrator, simulate_ramp, RampProfile, RampSpec};
use clockmag::hyperfine::{beta, rabi_probability};
use clockmag::sensitivity::{
    analytic_optimum, full_sensitivity, mle_monte_carlo, self_consistent_sensitivity, zeeman_ramsey_population, DimensionlessPoint, MleSetup,
};
use clockmag::two_spin::prob_s_closed;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::SweepBlock;
use crate::table::ResultTable;
use crate::CliError;

type Eval = fn(&[f64], u64) -> clockmag::Result<Vec<f64>>;

pub struct Operation {
    pub name: &'static str,
    pub params: &'static [&'static str],
    pub outputs: &'static [(&'static str, &'static str)],
    pub stochastic: bool,
    eval: Eval,
}

fn count(x: f64) -> u64 {
    x.round().max(0.0) as u64
}

pub const OPERATIONS: &[Operation] = &[
    Operation { name: "fringe_phase", params: &["phi", "ratio"], outputs: &[("theta_f", "rad")], stochastic: false, eval: |a, _| Ok(vec![fringe_phase(a[0], a[1])?]) },
    Operation { name: "p2_exact", params: &["phi", "theta", "ratio"], outputs: &[("p2", "1")], stochastic: false, eval: |a, _| Ok(vec![p2_exact(a[0], a[1], a[2])]) },
    Operation { name: "beta", params: &["phi", "ratio"], outputs: &[("beta", "1")], stochastic: false, eval: |a, _| Ok(vec![beta(a[0], a[1])]) },
    Operation {
        name: "rabi_probability",
        params: &["omega1", "duration", "phi", "ratio"],
        outputs: &[("transfer", "1")],
        stochastic: false,
        eval: |a, _| Ok(vec![rabi_probability(a[0], a[1], a[2], a[3])?]),
    },
    Operation { name: "prob_s_closed", params: &["chi", "phi"], outputs: &[("prob_s", "1")], stochastic: false, eval: |a, _| Ok(vec![prob_s_closed(a[0], a[1])?]) },
    Operation {
        name: "filter_response",
        params: &["phi0", "omega0", "omega1", "ratio", "omega_m", "n"],
        outputs: &[("p2_filter", "1"), ("p2_model", "1")],
        stochastic: false,
        eval: |a, _| {
            let s = AcSignal::locked(a[0], a[1]);
            let d = AcDriveSpec { omega1: a[2], ratio: a[3], omega_m: a[4], n: count(a[5]) as u32 };
            Ok(vec![filter_response(&s, &d)?.value, model_first_order(&s, &d)?])
        },
    },
    Operation {
        name: "epsilon_d_linear_gamma",
        params: &["b_initial", "b_final", "delta", "duration"],
        outputs: &[("closed_form", "1"), ("bound", "1")],
        stochastic: false,
        eval: |a, _| {
            let e = epsilon_d_linear_gamma(&RampSpec::new(a[0], a[1], a[2], a[3], RampProfile::LinearGamma)?)?;
            Ok(vec![e.closed_form, e.bound])
        },
    },
    Operation {
        name: "simulate_ramp",
        params: &["b_initial", "b_final", "delta", "duration", "steps_per_period"],
        outputs: &[("eps_simulated", "1")],
        stochastic: false,
        eval: |a, _| {
            let r = RampSpec::new(a[0], a[1], a[2], a[3], RampProfile::LinearGamma)?;
            Ok(vec![simulate_ramp(&r, &ramp_integrator(&r, count(a[4]) as usize))?])
        },
    },
    Operation {
        name: "full_sensitivity",
        params: &["b_tilde", "omega_ratio", "t_tilde", "n"],
        outputs: &[("delta_tilde", "1"), ("eps_pb", "1"), ("eps_d", "1")],
        stochastic: false,
        eval: |a, _| {
            let r = full_sensitivity(&DimensionlessPoint::new(a[0], a[1], a[2], count(a[3]))?)?;
            Ok(vec![r.delta_tilde, r.eps_pb, r.eps_d])
        },
    },
    Operation {
        name: "self_consistent_sensitivity",
        params: &["b_tilde", "t_tilde", "n"],
        outputs: &[("delta_tilde", "1")],
        stochastic: false,
        eval: |a, _| Ok(vec![self_consistent_sensitivity(a[0], a[1], count(a[2]))?.delta_tilde]),
    },
    Operation {
        name: "analytic_optimum",
        params: &["b_tilde", "t_tilde", "n"],
        outputs: &[("delta_tilde", "1")],
        stochastic: false,
        eval: |a, _| Ok(vec![analytic_optimum(a[0], a[1], count(a[2]))?.delta_tilde]),
    },
    Operation {
        name: "zeeman_ramsey_population",
        params: &["delta", "t"],
        outputs: &[("p", "1")],
        stochastic: false,
        eval: |a, _| Ok(vec![zeeman_ramsey_population(a[0], a[1])]),
    },
    Operation {
        name: "mle_monte_carlo",
        params: &["b_final", "omega_ratio", "delta", "shots", "trials"],
        outputs: &[("mean", "rad/s"), ("std_dev", "rad/s"), ("cramer_rao", "rad/s")],
        stochastic: true,
        eval: |a, seed| {
            let m = mle_monte_carlo(&MleSetup { b_final: a[0], omega_ratio: a[1], delta: a[2], shots: count(a[3]), trials: count(a[4]) as usize, seed })?;
            Ok(vec![m.mean, m.std_dev, m.cramer_rao])
        },
    },
];

pub fn find(name: &str) -> Option<&'static Operation> {
    OPERATIONS.iter().find(|o| o.name == name)
}

pub fn unit_of(param: &str) -> &'static str {
    match param {
        "phi" | "theta" | "chi" | "phi0" => "rad",
        "omega1" | "omega0" | "omega_m" | "b_initial" | "b_final" | "delta" => "rad/s",
        "duration" | "t" => "s",
        _ => "1",
    }
}

/// Problems that make the sweep impossible to run: unknown operation,
/// unbound or unknown parameters.
pub fn check(block: &SweepBlock) -> Vec<String> {
    let Some(op) = find(&block.operation) else {
        let known: Vec<&str> = OPERATIONS.iter().map(|o| o.name).collect();
        return vec![format!("sweep: unknown operation '{}' (known: {})", block.operation, known.join(", "))];
    };
    let mut out = Vec::new();
    for p in op.params {
        let n = block.axes.iter().filter(|a| a.name == *p).count() + usize::from(block.fixed.contains_key(*p));
        if n == 0 {
            out.push(format!("sweep: parameter '{p}' of {} is neither an axis nor fixed", op.name));
        } else if n > 1 {
            out.push(format!("sweep: parameter '{p}' bound more than once"));
        }
    }
    for name in block.axes.iter().map(|a| &a.name).chain(block.fixed.keys()) {
        if !op.params.contains(&name.as_str()) {
            out.push(format!("sweep: '{name}' is not a parameter of {}", op.name));
        }
    }
    out
}

fn mix_seed(seed: u64, row: usize) -> u64 {
    seed ^ (row as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Evaluates the sweep. Points where the operation rejects its input are
/// written as NaN and listed in the summary.
pub fn run(block: &SweepBlock, seed: u64) -> Result<(ResultTable, Value, bool), CliError> {
    let problems = check(block);
    if !problems.is_empty() {
        return Err(CliError::Usage(problems.join("; ")));
    }
    let op = find(&block.operation).expect("checked");
    let axes: Vec<Vec<f64>> = block.axes.iter().map(|a| a.points()).collect();
    let total: usize = if axes.is_empty() { 1 } else { axes.iter().map(Vec::len).product() };
    let points: Vec<BTreeMap<&str, f64>> = (0..total)
        .map(|mut k| {
            let mut m: BTreeMap<&str, f64> = block.fixed.iter().map(|(n, v)| (n.as_str(), *v)).collect();
            for (ax, vals) in block.axes.iter().zip(&axes).rev() {
                m.insert(ax.name.as_str(), vals[k % vals.len()]);
                k /= vals.len();
            }
            m
        })
        .collect();
    let results: Vec<clockmag::Result<Vec<f64>>> = points
        .par_iter()
        .enumerate()
        .map(|(row, m)| {
            let args: Vec<f64> = op.params.iter().map(|p| m[p]).collect();
            (op.eval)(&args, mix_seed(seed, row))
        })
        .collect();
    let mut spec: Vec<(&str, &str)> = block.axes.iter().map(|a| (a.name.as_str(), unit_of(&a.name))).collect();
    spec.extend_from_slice(op.outputs);
    let mut t = ResultTable::new(&spec);
    let mut failures = Vec::new();
    for (row, (m, r)) in points.iter().zip(results).enumerate() {
        let mut line: Vec<f64> = block.axes.iter().map(|a| m[a.name.as_str()]).collect();
        match r {
            Ok(v) => line.extend(v),
            Err(e @ clockmag::Error::Convergence(_)) => return Err(CliError::Numeric(e)),
            Err(e) => {
                failures.push(json!({ "row": row, "error": e.to_string() }));
                line.extend(std::iter::repeat_n(f64::NAN, op.outputs.len()));
            }
        }
        t.push(line);
    }
    Ok((t, json!({ "operation": op.name, "rows": total, "failed_points": failures }), op.stochastic))
}
