use crate::config::Settings;
use crate::error::CliError;
use crate::Output;
use rayon::prelude::*;
use ymbubble::report::VerificationReport;
use ymbubble::suite::{criterion, SuiteConfig, CRITERIA};

/// The identity and oracle criteria; the simulation criteria belong to `flow` and
/// `tower` but can be selected here too.
const DEFAULT_CRITERIA: &str = "1,2,3,4,5,6,7,8,9";

fn criteria(spec: &str) -> Result<Vec<u8>, CliError> {
    if spec == "all" {
        return Ok((1..=CRITERIA).collect());
    }
    let mut v = spec
        .split(',')
        .map(|x| match x.trim().parse::<u8>() {
            Ok(n) if (1..=CRITERIA).contains(&n) => Ok(n),
            _ => Err(CliError::Config(format!("criteria: '{x}' is not in 1..={CRITERIA}"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    v.sort_unstable();
    v.dedup();
    Ok(v)
}

pub fn run(s: &Settings, out: &Output) -> Result<(), CliError> {
    let d = SuiteConfig::default();
    let cfg = SuiteConfig {
        seed: s.get("seed", d.seed)?,
        points: s.get("points", d.points)?,
        radius: s.positive("radius", d.radius)?,
        fd_step: s.positive("fd_step", d.fd_step)?,
        appendix_points: s.get("appendix_points", d.appendix_points)?,
        projection_radius: s.positive("projection_radius", d.projection_radius)?,
        projection_mu: s.positive("projection_mu", d.projection_mu)?,
        mutate_instanton: s.get("mutate_instanton", d.mutate_instanton)?,
        c1: s.positive("c1", d.c1)?,
        flow_t_end: s.positive("flow_t_end", d.flow_t_end)?,
    };
    let selected = criteria(&s.get("criteria", DEFAULT_CRITERIA.to_string())?)?;
    s.finish()?;

    let checks: Vec<_> = selected
        .par_iter()
        .map(|&n| criterion(n, &cfg))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .flatten()
        .collect();
    let report = VerificationReport::new(checks)?;
    out.write("report.json", &(report.to_json() + "\n"))?;
    print!("{}", report.summary());
    let failed = report.failures().count();
    println!("{} checks, {failed} failed", report.checks.len());
    if failed > 0 {
        return Err(CliError::ChecksFailed(failed));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn criteria_lists() {
        assert_eq!(criteria("3, 1,3").unwrap(), vec![1, 3]);
        assert_eq!(criteria("all").unwrap().len(), CRITERIA as usize);
        assert!(criteria("0").is_err());
        assert!(criteria("14").is_err());
    }
}
