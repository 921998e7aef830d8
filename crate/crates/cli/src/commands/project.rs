use super::json;
use crate::config::Settings;
use crate::error::CliError;
use crate::Output;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use ymbubble::ansatz::{frozen_scale_projection, projection_identity_check, ProjectionCheck};
use ymbubble::ball::BallSpec;
use ymbubble::trajectory::ScaleTrajectory;

#[derive(Serialize)]
struct Entry {
    eps_cut: f64,
    check: ProjectionCheck,
    /// `direct_refined / (-24 pi^2 / mu) - 1`.
    relative_to_claimed: f64,
}

#[derive(Serialize)]
struct Doubling {
    from: f64,
    to: f64,
    change: f64,
    tail_estimate: f64,
    within_tail: bool,
}

#[derive(Serialize)]
struct ProjectReport {
    path: String,
    t0: f64,
    t: f64,
    mu: f64,
    claimed: f64,
    /// The frozen-scale value integrated over all of space, when the path is constant.
    frozen_exact: Option<f64>,
    entries: Vec<Entry>,
    radius_doubling: Vec<Doubling>,
}

pub fn run(s: &Settings, out: &Output) -> Result<(), CliError> {
    let kind = s.get("path", "constant".to_string())?;
    let path = match kind.as_str() {
        "constant" => ScaleTrajectory::constant(s.positive("mu", 1.0)?)?,
        "exponential" => ScaleTrajectory::exponential(s.positive("kappa", 0.5)?),
        other => return Err(CliError::Config(format!("path must be constant or exponential, got '{other}'"))),
    };
    let t0 = s.get("t0", 0.0)?;
    let t = s.get("t", 1.0)?;
    if !(t > t0) {
        return Err(CliError::Config(format!("need t > t0, got t0 = {t0}, t = {t}")));
    }
    let mut radii = s.list("radii", &[25.0, 50.0, 100.0])?;
    radii.sort_by(f64::total_cmp);
    let eps_cuts = s.list("eps_cuts", &[1e-3 * (t - t0), 5e-4 * (t - t0)])?;
    let d = BallSpec::default();
    let base = BallSpec {
        radial_per_panel: s.get("radial_per_panel", d.radial_per_panel)?,
        n_chi: s.get("n_chi", d.n_chi)?,
        n_theta: s.get("n_theta", d.n_theta)?,
        n_phi: s.get("n_phi", d.n_phi)?,
        ..d
    };
    s.finish()?;

    let mu = path.mu(t)?;
    let ladder: Vec<(f64, f64)> = radii.iter().flat_map(|&r| eps_cuts.iter().map(move |&e| (r, e))).collect();
    let claimed = -24.0 * PI * PI / mu;
    let entries = ladder
        .par_iter()
        .map(|&(radius, eps_cut)| {
            let check = projection_identity_check(&path, t0, t, &BallSpec { radius, ..base }, eps_cut)?;
            let relative_to_claimed = check.direct_refined / claimed - 1.0;
            Ok(Entry { eps_cut, check, relative_to_claimed })
        })
        .collect::<Result<Vec<_>, ymbubble::Error>>()?;
    let first_eps: Vec<&Entry> = entries.iter().step_by(eps_cuts.len().max(1)).collect();
    let radius_doubling = first_eps
        .windows(2)
        .map(|w| {
            let change = w[1].check.direct_refined - w[0].check.direct_refined;
            let tail = w[0].check.tail_estimate;
            Doubling { from: w[0].check.radius, to: w[1].check.radius, change, tail_estimate: tail, within_tail: change.abs() <= tail.abs() }
        })
        .collect();
    let frozen_exact = match path {
        ScaleTrajectory::Constant { .. } => Some(frozen_scale_projection(mu)?),
        _ => None,
    };
    let report = ProjectReport { path: kind, t0, t, mu, claimed, frozen_exact, entries, radius_doubling };
    out.write("project.json", &json(&report))?;
    println!("claimed value -24 pi^2 / mu = {claimed}");
    if let Some(v) = frozen_exact {
        println!("frozen-scale value over all space = {v} ({:+.4} relative)", v / claimed - 1.0);
    }
    for e in &report.entries {
        println!(
            "R = {}, eps_cut = {:e}: direct = {}, refined = {}, reduced = {}, closed = {}, tail = {:e}",
            e.check.radius, e.eps_cut, e.check.direct, e.check.direct_refined, e.check.reduced, e.check.closed.value, e.check.tail_estimate
        );
    }
    Ok(())
}
