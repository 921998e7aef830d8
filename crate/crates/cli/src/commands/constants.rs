use super::json;
use crate::config::Settings;
use crate::error::CliError;
use crate::Output;
use serde::Serialize;
use ymbubble::ansatz::cstar;
use ymbubble::rates::{Kappa0, RateTable, XiValue, OMEGA_INFINITY};

#[derive(Serialize)]
struct Summary {
    c_star: f64,
    omega_at_zero: f64,
    omega_limit: f64,
    omega_at_tau_max: f64,
    xi_ladder: Vec<XiValue>,
    xi_ladder_monotone: bool,
    /// The cut-off integrals are positive and grow like `M / 60`, so the candidates
    /// carry the sign of a positive `Xi` and shrink as the cutoff grows.
    kappa0_candidates: Vec<Kappa0>,
    kappa0_candidate: f64,
}

/// `0` followed by `points` log-spaced values up to `tau_max`.
fn tau_grid(tau_max: f64, points: usize) -> Vec<f64> {
    let lo = (tau_max * 1e-8).ln();
    let hi = tau_max.ln();
    let n = points.max(2);
    std::iter::once(0.0).chain((0..n).map(|k| (lo + (hi - lo) * k as f64 / (n - 1) as f64).exp())).collect()
}

pub fn run(s: &Settings, out: &Output) -> Result<(), CliError> {
    let tau_max = s.positive("tau_max", 1e4)?;
    let points = s.get("tau_points", 41usize)?;
    let cutoffs = s.list("xi_cutoffs", &[1.0, 10.0, 100.0, 1000.0])?;
    if cutoffs.iter().any(|m| !(*m > 0.0)) {
        return Err(CliError::Config("xi_cutoffs must be positive".into()));
    }
    s.finish()?;

    let table = RateTable::build(&tau_grid(tau_max, points), &cutoffs)?;
    let c_star = cstar()?;
    let monotone = table.xi_reg.windows(2).all(|w| w[1].value > w[0].value);
    let summary = Summary {
        c_star,
        omega_at_zero: table.omega_values[0],
        omega_limit: OMEGA_INFINITY,
        omega_at_tau_max: *table.omega_values.last().expect("grid is nonempty"),
        xi_ladder: table.xi_reg.clone(),
        xi_ladder_monotone: monotone,
        kappa0_candidates: table.kappa0_candidates.clone(),
        kappa0_candidate: table.kappa0_candidate,
    };
    out.write("omega.csv", &table.to_csv())?;
    out.write("constants.json", &json(&summary))?;
    println!("c_star = {c_star}");
    println!("omega(0) = {}, omega({tau_max}) = {}", summary.omega_at_zero, summary.omega_at_tau_max);
    for x in &table.xi_reg {
        println!("xi_regularized({}) = {}", x.cutoff, x.value);
    }
    println!("xi ladder monotone: {monotone}");
    Ok(())
}
