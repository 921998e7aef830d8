use super::{flow_config, grid, json};
use crate::config::Settings;
use crate::error::CliError;
use crate::Output;
use serde::Serialize;
use std::path::PathBuf;
use ymbubble::flow::{
    log_scale_slopes, one_bubble_ansatz, resume, run as run_flow, steady_profile, tower_ansatz, Checkpoint, FlowConfig,
    ProfileState, TimeSeries,
};

/// Where the run starts.
enum Start {
    Fresh(ProfileState),
    Resume(Checkpoint),
}

#[derive(Serialize)]
pub(crate) struct FlowSummary {
    pub stop: &'static str,
    pub rows: usize,
    pub final_time: f64,
    pub steps: u64,
    pub rejected_steps: u64,
    pub first_scale_monotone_decreasing: bool,
    pub max_step_energy_increase: f64,
    /// Least-squares slopes of `ln(first scale)` on consecutive windows.
    pub log_scale_slopes: Vec<f64>,
    /// Sample standard deviation of the slopes over the absolute value of their mean.
    pub slope_relative_spread: Option<f64>,
}

pub(crate) fn summarize(series: &TimeSeries, windows: usize) -> FlowSummary {
    let slopes = log_scale_slopes(series, windows);
    let spread = (slopes.len() >= 2).then(|| {
        let n = slopes.len() as f64;
        let mean = slopes.iter().sum::<f64>() / n;
        let var = slopes.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
        var.sqrt() / mean.abs()
    });
    FlowSummary {
        stop: series.stop.name(),
        rows: series.rows.len(),
        final_time: series.last.state.time,
        steps: series.last.steps,
        rejected_steps: series.rejected_steps,
        first_scale_monotone_decreasing: series.first_scale_monotone_decreasing(),
        max_step_energy_increase: series.max_step_energy_increase,
        log_scale_slopes: slopes,
        slope_relative_spread: spread,
    }
}

fn start(s: &Settings) -> Result<Start, CliError> {
    if let Some(path) = s.get_opt::<PathBuf>("resume")? {
        let text = std::fs::read_to_string(&path).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
        return Ok(Start::Resume(Checkpoint::parse(&text)?));
    }
    let g = grid(s)?;
    let initial = s.get("initial", "one-bubble".to_string())?;
    let state = match initial.as_str() {
        "one-bubble" => one_bubble_ansatz(s.positive("mu1", 0.1)?, &g)?,
        "steady" => steady_profile(s.positive("lambda", 0.1)?, &g)?,
        "tower" => tower_ansatz(s.positive("mu1", 0.1)?, s.positive("mu2", 1e-4)?, &g)?,
        other => return Err(CliError::Config(format!("initial must be one-bubble, steady or tower, got '{other}'"))),
    };
    Ok(Start::Fresh(state))
}

pub fn run(s: &Settings, out: &Output) -> Result<(), CliError> {
    let begin = start(s)?;
    let config = flow_config(s, FlowConfig::default())?;
    let windows = s.get("slope_windows", 3usize)?;
    s.finish()?;

    let series = match &begin {
        Start::Fresh(state) => run_flow(state, &config)?,
        Start::Resume(c) => resume(c, &config)?,
    };
    let summary = summarize(&series, windows);
    out.write("series.csv", &series.to_csv())?;
    out.write("final.ckpt", &series.last.emit())?;
    out.write("flow.json", &json(&summary))?;
    println!("stop: {} at t = {} after {} steps", summary.stop, summary.final_time, summary.steps);
    println!("first scale monotone decreasing: {}", summary.first_scale_monotone_decreasing);
    println!("max per-step energy increase: {:e}", summary.max_step_energy_increase);
    match summary.log_scale_slopes.as_slice() {
        [] => println!("log-scale slope: not enough rows"),
        slopes => {
            let mean = slopes.iter().sum::<f64>() / slopes.len() as f64;
            println!("log-scale slope: {mean} (windows {slopes:?})");
        }
    }
    Ok(())
}
