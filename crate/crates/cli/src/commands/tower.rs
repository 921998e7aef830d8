use super::flow::{summarize, FlowSummary};
use super::{grid, json};
use crate::config::Settings;
use crate::error::CliError;
use crate::Output;
use serde::Serialize;
use ymbubble::ansatz::{cstar, log_mu02_integrated, TowerParams};
use ymbubble::flow::{extract_scales, run as run_flow, tower_ansatz, tower_crossings_closed, FlowConfig};
use ymbubble::numfmt::row;

const CROSSING_TOLERANCE: f64 = 0.05;
const SLOPE_TOLERANCE: f64 = 1e-10;
const LOG_ERROR_TOLERANCE: f64 = 1e-6;

#[derive(Serialize)]
struct TowerReport {
    c1: f64,
    c_star: f64,
    crossings: Vec<f64>,
    closed_crossings: Vec<f64>,
    worst_crossing_error: f64,
    expected_slope: f64,
    worst_slope_error: f64,
    worst_log_error: f64,
    passed: bool,
    flow: Option<FlowDrift>,
}

#[derive(Serialize)]
struct FlowDrift {
    t_end: f64,
    /// Relative change of each crossing between the first and last rows.
    scale_drift: Vec<f64>,
    summary: FlowSummary,
}

pub fn run(s: &Settings, out: &Output) -> Result<(), CliError> {
    let c1 = s.positive("c1", 0.5)?;
    let c_star = match s.get_opt::<f64>("c_star")? {
        Some(c) => c,
        None => cstar()?,
    };
    let t_end = s.positive("t_end", 2.0)?;
    let samples = s.get("samples", 21usize)?.max(2);
    let ode_steps = s.get("ode_steps", 4000usize)?;
    let mu1 = s.positive("mu1", 0.1)?;
    let mu2 = s.positive("mu2", 1e-4)?;
    let g = grid(s)?;
    let flow_t_end = s.get("flow_t_end", 0.0)?;
    let flow = FlowConfig {
        dt: s.positive("flow_dt", 1e-7)?,
        t_end: flow_t_end,
        output_every: flow_t_end.max(1e-12) / 10.0,
        ..FlowConfig::default()
    };
    s.finish()?;
    let tower = TowerParams::new(c1, c_star, 0.0)?;

    // The inner scale law and its integrated counterpart.
    let mut table = String::from("t,mu01,mu02,log_mu02,exp_2c1t,log_mu02_integrated,rel_log_error\n");
    let mut worst_log_error: f64 = 0.0;
    let mut points = Vec::with_capacity(samples);
    for k in 0..samples {
        let t = t_end * k as f64 / (samples - 1) as f64;
        let closed = tower.log_mu02(t);
        let steps = ((ode_steps as f64 * t / t_end).ceil() as usize).max(1);
        let integrated = log_mu02_integrated(0.0, t, steps, c1, c_star);
        let err = (integrated - closed).abs() / closed.abs();
        worst_log_error = worst_log_error.max(err);
        let x = (2.0 * c1 * t).exp();
        points.push((x, closed));
        table.push_str(&row(&[t, (-c1 * t).exp(), closed.exp(), closed, x, integrated, err]));
        table.push('\n');
    }
    let expected_slope = -c_star / (2.0 * c1);
    let worst_slope_error = points
        .windows(2)
        .map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0) - expected_slope).abs() / expected_slope.abs())
        .fold(0.0, f64::max);

    // The plateau structure of the profile.
    let state = tower_ansatz(mu1, mu2, &g)?;
    let crossings = extract_scales(&state, 0.5)?.crossings;
    let closed_crossings = tower_crossings_closed(mu1, mu2, g.r_min(), g.r_max());
    let worst_crossing_error = if crossings.len() == closed_crossings.len() {
        crossings.iter().zip(&closed_crossings).map(|(a, b)| (a / b - 1.0).abs()).fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    let mut profile = String::from("r,psi\n");
    for (r, p) in g.nodes().iter().zip(&state.psi) {
        profile.push_str(&row(&[*r, *p]));
        profile.push('\n');
    }

    let drift = if flow_t_end > 0.0 {
        let series = run_flow(&state, &flow)?;
        let first = &series.rows[0].scales;
        let last = &series.rows[series.rows.len() - 1].scales;
        let scale_drift = first.iter().zip(last).map(|(a, b)| b / a - 1.0).collect();
        out.write("tower_series.csv", &series.to_csv())?;
        Some(FlowDrift { t_end: flow_t_end, scale_drift, summary: summarize(&series, 3) })
    } else {
        None
    };

    let structure_ok = crossings.len() == 3 && worst_crossing_error <= CROSSING_TOLERANCE;
    let passed = structure_ok && worst_slope_error <= SLOPE_TOLERANCE && worst_log_error <= LOG_ERROR_TOLERANCE;
    let report = TowerReport {
        c1,
        c_star,
        crossings,
        closed_crossings,
        worst_crossing_error,
        expected_slope,
        worst_slope_error,
        worst_log_error,
        passed,
        flow: drift,
    };
    out.write("mu02.csv", &table)?;
    out.write("ansatz.csv", &profile)?;
    out.write("tower.json", &json(&report))?;
    println!("crossings: {:?} (closed form {:?})", report.crossings, report.closed_crossings);
    println!("worst crossing error {:e} (tolerance {CROSSING_TOLERANCE})", report.worst_crossing_error);
    println!("log mu02 slope in exp(2 c1 t): expected {expected_slope}, worst relative error {worst_slope_error:e}");
    println!("integrated vs closed log mu02: worst relative error {worst_log_error:e}");
    if let Some(d) = &report.flow {
        println!("scale drift over t = {}: {:?}", d.t_end, d.scale_drift);
    }
    if passed {
        Ok(())
    } else {
        let failed = usize::from(!structure_ok)
            + usize::from(worst_slope_error > SLOPE_TOLERANCE)
            + usize::from(worst_log_error > LOG_ERROR_TOLERANCE);
        Err(CliError::ChecksFailed(failed))
    }
}
