pub mod constants;
pub mod flow;
pub mod project;
pub mod tower;
pub mod verify;

use crate::config::Settings;
use crate::error::CliError;
use serde::Serialize;
use ymbubble::flow::{FlowConfig, RadialGrid};

/// Pretty JSON with a trailing newline.
pub(crate) fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

/// `r_min`, `r_max` and `nodes`, defaulting to the standard log-uniform grid.
pub(crate) fn grid(s: &Settings) -> Result<RadialGrid, CliError> {
    let d = RadialGrid::default();
    let r_min = s.positive("r_min", d.r_min())?;
    let r_max = s.positive("r_max", d.r_max())?;
    let nodes = s.get("nodes", d.len())?;
    Ok(RadialGrid::log_uniform(r_min, r_max, nodes)?)
}

/// Every [`FlowConfig`] field under its own name.
pub(crate) fn flow_config(s: &Settings, base: FlowConfig) -> Result<FlowConfig, CliError> {
    let c = FlowConfig {
        dt: s.get("dt", base.dt)?,
        adaptive: s.get("adaptive", base.adaptive)?,
        dt_min: s.get("dt_min", base.dt_min)?,
        dt_max: s.get("dt_max", base.dt_max)?,
        scheme: s.get("scheme", base.scheme)?,
        potential: s.get("potential", base.potential)?,
        t_end: s.get("t_end", base.t_end)?,
        output_every: s.get("output_every", base.output_every)?,
        newton_tol: s.get("newton_tol", base.newton_tol)?,
        max_newton: s.get("max_newton", base.max_newton)?,
        fit_window: s.get("fit_window", base.fit_window)?,
        stop_factor: s.get("stop_factor", base.stop_factor)?,
        max_scales: s.get("max_scales", base.max_scales)?,
    };
    c.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(c)
}
