//! Versioned plaintext checkpoints that round-trip bit-exactly.

use super::grid::{GridLaw, RadialGrid};
use super::profile::ProfileState;
use crate::error::{Error, Result};
use crate::numfmt::num;

pub const CHECKPOINT_HEADER: &str = "# ymbubble-checkpoint v1";

/// A profile together with the integrator state needed to continue a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub state: ProfileState,
    /// Step size the adaptive controller would try next.
    pub dt: f64,
    pub steps: u64,
    pub next_output: f64,
}

impl Checkpoint {
    pub fn emit(&self) -> String {
        let s = &self.state;
        let (r_min, r_max) = match s.grid.law() {
            GridLaw::LogUniform { r_min, r_max } => (r_min, r_max),
            GridLaw::Tabulated => (s.grid.r_min(), s.grid.r_max()),
        };
        let mut out = String::new();
        out.push_str(CHECKPOINT_HEADER);
        out.push('\n');
        let fields = [
            ("law", s.grid.law().name().to_string()),
            ("nodes", s.grid.len().to_string()),
            ("r_min", num(r_min)),
            ("r_max", num(r_max)),
            ("time", num(s.time)),
            ("dt", num(self.dt)),
            ("inner_vacuum", num(s.inner_vacuum)),
            ("outer_value", num(s.outer_value())),
            ("steps", self.steps.to_string()),
            ("next_output", num(self.next_output)),
        ];
        for (k, v) in fields {
            out.push_str(&format!("{k} {v}\n"));
        }
        out.push_str("# r psi\n");
        for (r, p) in s.grid.nodes().iter().zip(&s.psi) {
            out.push_str(&format!("{},{}\n", num(*r), num(*p)));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let bad = |m: String| Error::Checkpoint(m);
        let mut lines = text.lines();
        if lines.next() != Some(CHECKPOINT_HEADER) {
            return Err(bad("missing or unsupported header".into()));
        }
        let mut header = std::collections::BTreeMap::new();
        for line in lines.by_ref() {
            if line == "# r psi" {
                break;
            }
            let (k, v) = line.split_once(' ').ok_or_else(|| bad(format!("malformed header line '{line}'")))?;
            header.insert(k.to_string(), v.to_string());
        }
        let get = |k: &str| header.get(k).ok_or_else(|| bad(format!("missing field '{k}'")));
        let float = |k: &str| -> Result<f64> { get(k)?.parse::<f64>().map_err(|e| bad(format!("field '{k}': {e}"))) };
        let n: usize = get("nodes")?.parse().map_err(|e| bad(format!("field 'nodes': {e}")))?;
        let mut nodes = Vec::with_capacity(n);
        let mut psi = Vec::with_capacity(n);
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let (a, b) = line.split_once(',').ok_or_else(|| bad(format!("malformed row '{line}'")))?;
            nodes.push(a.parse::<f64>().map_err(|e| bad(format!("row '{line}': {e}")))?);
            psi.push(b.parse::<f64>().map_err(|e| bad(format!("row '{line}': {e}")))?);
        }
        if nodes.len() != n {
            return Err(bad(format!("expected {n} rows, found {}", nodes.len())));
        }
        let law = match get("law")?.as_str() {
            "log-uniform" => GridLaw::LogUniform { r_min: float("r_min")?, r_max: float("r_max")? },
            "tabulated" => GridLaw::Tabulated,
            other => return Err(bad(format!("unknown grid law '{other}'"))),
        };
        let grid = RadialGrid::from_parts(nodes, law)?;
        let state = ProfileState::with_vacuum(grid, psi, float("time")?, float("inner_vacuum")?)?;
        if state.outer_value().to_bits() != float("outer_value")?.to_bits() {
            return Err(bad("outer value does not match the last row".into()));
        }
        let steps = get("steps")?.parse().map_err(|e| bad(format!("field 'steps': {e}")))?;
        Ok(Self { state, dt: float("dt")?, steps, next_output: float("next_output")? })
    }
}
