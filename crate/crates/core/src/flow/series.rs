//! Driving the stepper over time with adaptive steps and periodic diagnostics.

use super::checkpoint::Checkpoint;
use super::profile::ProfileState;
use super::scales::extract_scales;
use super::stepper::{FlowConfig, Stepper};
use crate::error::{Error, Result};
use crate::numfmt::num;
use serde::{Deserialize, Serialize};

/// Newton iteration counts that shrink or grow the adaptive step.
const SHRINK_ABOVE: usize = 5;
const GROW_AT_MOST: usize = 2;
const GROWTH: f64 = 1.25;

/// Diagnostics at one output time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub time: f64,
    /// Crossings of `psi = 1`, ascending, truncated to `max_scales`.
    pub scales: Vec<f64>,
    pub lambda_fit: Option<f64>,
    pub energy: f64,
    /// Largest final Newton residual since the previous row.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    Completed,
    /// The first scale fell below `stop_factor * r_min`.
    UnderResolved,
    /// The profile no longer crosses `psi = 1`.
    NoCrossing,
}

impl StopReason {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Completed => "completed",
            Self::UnderResolved => "under-resolved",
            Self::NoCrossing => "no-crossing",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub rows: Vec<SeriesRow>,
    pub max_scales: usize,
    pub stop: StopReason,
    /// Largest single-step energy increase (negative when every step dissipated).
    pub max_step_energy_increase: f64,
    pub rejected_steps: u64,
    /// State to continue from with [`resume`].
    pub last: Checkpoint,
}

impl TimeSeries {
    pub fn csv_header(max_scales: usize) -> String {
        let mut cols = vec!["t".to_string()];
        cols.extend((1..=max_scales).map(|k| format!("scale_{k}")));
        cols.extend(["lambda_fit", "energy", "residual"].map(String::from));
        cols.join(",")
    }

    /// One CSV line per row, without header. Missing scales are left empty.
    pub fn csv_rows(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            let mut cells = vec![num(row.time)];
            cells.extend((0..self.max_scales).map(|k| row.scales.get(k).map_or_else(String::new, |s| num(*s))));
            cells.push(row.lambda_fit.map_or_else(String::new, num));
            cells.push(num(row.energy));
            cells.push(num(row.residual));
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> String {
        format!("{}\n{}", Self::csv_header(self.max_scales), self.csv_rows())
    }

    /// `(t, first scale)` for rows that have a crossing.
    pub fn first_scale(&self) -> Vec<(f64, f64)> {
        self.rows.iter().filter_map(|r| r.scales.first().map(|s| (r.time, *s))).collect()
    }

    /// Whether the first scale never increases from row to row.
    pub fn first_scale_monotone_decreasing(&self) -> bool {
        self.first_scale().windows(2).all(|w| w[1].1 <= w[0].1)
    }
}

/// Least-squares slope of `ln(first scale)` against `t` on `windows` consecutive,
/// equally long stretches of the series.
pub fn log_scale_slopes(series: &TimeSeries, windows: usize) -> Vec<f64> {
    let pts: Vec<(f64, f64)> = series.first_scale().into_iter().map(|(t, s)| (t, s.ln())).collect();
    if windows == 0 || pts.len() < 2 * windows {
        return Vec::new();
    }
    let len = pts.len() / windows;
    pts.chunks_exact(len).take(windows).map(linear_slope).collect()
}

fn linear_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let (mt, my) = pts.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + t / n, b + y / n));
    let (sty, stt) = pts.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + (t - mt) * (y - my), b + (t - mt) * (t - mt)));
    sty / stt
}

struct Diagnostics<'a> {
    stepper: &'a Stepper,
}

impl Diagnostics<'_> {
    fn row(&self, state: &ProfileState, residual: f64) -> (SeriesRow, Option<StopReason>) {
        let config = self.stepper.config();
        let energy = self.stepper.model().energy(&state.psi, state.inner_vacuum);
        let (scales, lambda_fit, stop) = match extract_scales(state, config.fit_window) {
            Ok(s) => {
                let stop = (s.first() < config.stop_factor * state.grid.r_min()).then_some(StopReason::UnderResolved);
                (s.crossings.into_iter().take(config.max_scales).collect(), s.fit, stop)
            }
            Err(_) => (Vec::new(), None, Some(StopReason::NoCrossing)),
        };
        (SeriesRow { time: state.time, scales, lambda_fit, energy, residual }, stop)
    }
}

/// Runs from `initial`, recording a row at the start and every `output_every`.
pub fn run(initial: &ProfileState, config: &FlowConfig) -> Result<TimeSeries> {
    config.validate()?;
    let start = Checkpoint { state: initial.clone(), dt: config.dt, steps: 0, next_output: initial.time + config.output_every };
    let stepper = Stepper::new(initial, *config)?;
    let (row, stop) = Diagnostics { stepper: &stepper }.row(initial, 0.0);
    integrate(&stepper, start, vec![row], stop)
}

/// Continues a run from a checkpoint; the rows produced match those an unbroken run
/// would have written after the checkpoint time.
pub fn resume(checkpoint: &Checkpoint, config: &FlowConfig) -> Result<TimeSeries> {
    config.validate()?;
    let stepper = Stepper::new(&checkpoint.state, *config)?;
    integrate(&stepper, checkpoint.clone(), Vec::new(), None)
}

fn integrate(stepper: &Stepper, start: Checkpoint, mut rows: Vec<SeriesRow>, stop: Option<StopReason>) -> Result<TimeSeries> {
    let config = *stepper.config();
    let diagnostics = Diagnostics { stepper };
    let model = stepper.model();
    let Checkpoint { mut state, mut dt, mut steps, mut next_output } = start;
    let mut energy = model.energy(&state.psi, state.inner_vacuum);
    let mut max_increase = f64::NEG_INFINITY;
    let mut rejected = 0;
    let mut residual: f64 = 0.0;
    let mut stop_reason = stop.unwrap_or(StopReason::Completed);
    let tolerance = 1e-12 * config.output_every;
    let finished = |next: f64| next > config.t_end + tolerance;

    while stop.is_none() && !finished(next_output) {
        let remaining = next_output - state.time;
        let clipped = dt >= remaining;
        let trial = if clipped { remaining } else { dt };
        match stepper.advance(&state, trial) {
            Ok(outcome) => {
                if config.adaptive && !clipped {
                    if outcome.iterations > SHRINK_ABOVE {
                        dt *= 0.5;
                    } else if outcome.iterations <= GROW_AT_MOST {
                        dt = (dt * GROWTH).min(config.dt_max);
                    }
                }
                state = outcome.state;
                steps += 1;
                residual = residual.max(outcome.residual);
                let e = model.energy(&state.psi, state.inner_vacuum);
                max_increase = max_increase.max(e - energy);
                energy = e;
                if clipped {
                    state.time = next_output;
                    let (row, row_stop) = diagnostics.row(&state, residual);
                    rows.push(row);
                    residual = 0.0;
                    next_output += config.output_every;
                    if let Some(reason) = row_stop {
                        stop_reason = reason;
                        break;
                    }
                }
            }
            Err(err @ Error::NewtonFailed { .. }) => {
                if !config.adaptive {
                    return Err(err);
                }
                rejected += 1;
                dt *= 0.5;
                if dt < config.dt_min {
                    return Err(Error::StepUnderflow(dt));
                }
            }
            Err(err) => return Err(err),
        }
    }
    Ok(TimeSeries {
        rows,
        max_scales: config.max_scales,
        stop: stop_reason,
        max_step_energy_increase: max_increase,
        rejected_steps: rejected,
        last: Checkpoint { state, dt, steps, next_output },
    })
}

#[cfg(test)]
mod tests {
    use super::super::grid::RadialGrid;
    use super::super::profile::{one_bubble_ansatz, steady_profile};
    use super::*;

    fn grid() -> RadialGrid {
        RadialGrid::log_uniform(1e-4, 50.0, 400).unwrap()
    }

    #[test]
    fn steady_run_is_constant() {
        let s = steady_profile(0.1, &grid()).unwrap();
        let config = FlowConfig { t_end: 0.2, output_every: 0.05, dt: 0.01, ..Default::default() };
        let series = run(&s, &config).unwrap();
        assert_eq!(series.rows.len(), 5);
        assert_eq!(series.stop, StopReason::Completed);
        let first = &series.rows[0];
        for row in &series.rows {
            assert!((row.scales[0] - first.scales[0]).abs() < 1e-8);
            assert!((row.energy - first.energy).abs() < 1e-8);
        }
        assert!(log_scale_slopes(&series, 1)[0].abs() < 1e-6);
    }

    #[test]
    fn energy_dissipates_and_restart_matches() {
        let s = one_bubble_ansatz(0.1, &grid()).unwrap();
        let full = FlowConfig { t_end: 0.04, output_every: 0.01, dt: 1e-3, ..Default::default() };
        let whole = run(&s, &full).unwrap();
        assert!(whole.max_step_energy_increase <= 1e-8);
        let half = run(&s, &FlowConfig { t_end: 0.02, ..full }).unwrap();
        let text = half.last.emit();
        let rest = resume(&Checkpoint::parse(&text).unwrap(), &full).unwrap();
        let mut joined = half.rows.clone();
        joined.extend(rest.rows.clone());
        assert_eq!(joined, whole.rows);
        assert_eq!(rest.last.emit(), whole.last.emit());
    }

    #[test]
    fn csv_has_fixed_columns() {
        let s = one_bubble_ansatz(0.1, &grid()).unwrap();
        let series = run(&s, &FlowConfig { t_end: 0.01, output_every: 0.01, dt: 1e-3, ..Default::default() }).unwrap();
        let csv = series.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,scale_1,scale_2,scale_3,lambda_fit,energy,residual");
        assert!(lines.all(|l| l.split(',').count() == 7));
    }

    #[test]
    fn slopes_of_exponential_series() {
        let rows = (0..30)
            .map(|k| {
                let t = k as f64 * 0.1;
                SeriesRow { time: t, scales: vec![(-0.7 * t).exp()], lambda_fit: None, energy: 0.0, residual: 0.0 }
            })
            .collect();
        let g = RadialGrid::log_uniform(1e-3, 1.0, 64).unwrap();
        let state = steady_profile(0.1, &g).unwrap();
        let series = TimeSeries {
            rows,
            max_scales: 1,
            stop: StopReason::Completed,
            max_step_energy_increase: 0.0,
            rejected_steps: 0,
            last: Checkpoint { state, dt: 0.1, steps: 0, next_output: 0.0 },
        };
        let slopes = log_scale_slopes(&series, 3);
        assert_eq!(slopes.len(), 3);
        assert!(slopes.iter().all(|s| (s + 0.7).abs() < 1e-12));
        assert!(series.first_scale_monotone_decreasing());
    }
}
