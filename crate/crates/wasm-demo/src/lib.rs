//! WebAssembly bindings for the static page in `www/`.
//!
//! Three operations: sample a bubble or tower profile, step a flow session and read
//! back its scales, and tabulate `Omega`. Arrays cross the boundary as `Vec<f64>`,
//! which wasm-bindgen hands to JavaScript as `Float64Array`.

use wasm_bindgen::prelude::*;
use ymbubble::flow::{
    energy, extract_scales, one_bubble_ansatz, steady_profile, tower_ansatz, FlowConfig, ProfileState, RadialGrid,
    Stepper,
};
use ymbubble::rates::omega;

fn js_err(e: ymbubble::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn demo_grid(nodes: usize) -> Result<RadialGrid, JsError> {
    RadialGrid::log_uniform(1e-5, 50.0, nodes).map_err(js_err)
}

fn initial(kind: &str, mu1: f64, mu2: f64, grid: &RadialGrid) -> Result<ProfileState, JsError> {
    match kind {
        "steady" => steady_profile(mu1, grid),
        "one-bubble" => one_bubble_ansatz(mu1, grid),
        "tower" => tower_ansatz(mu1, mu2, grid),
        other => return Err(JsError::new(&format!("unknown profile '{other}'"))),
    }
    .map_err(js_err)
}

/// Node radii of the demo grid.
#[wasm_bindgen]
pub fn radii(nodes: usize) -> Result<Vec<f64>, JsError> {
    Ok(demo_grid(nodes)?.nodes().to_vec())
}

/// `psi` at the grid nodes for `steady` (scale `mu1`), `one-bubble` or `tower`.
#[wasm_bindgen]
pub fn profile(kind: &str, mu1: f64, mu2: f64, nodes: usize) -> Result<Vec<f64>, JsError> {
    Ok(initial(kind, mu1, mu2, &demo_grid(nodes)?)?.psi)
}

/// `Omega(tau)` on `points` log-spaced values in `[tau_min, tau_max]`, as
/// interleaved `(tau, omega)` pairs.
#[wasm_bindgen]
pub fn omega_curve(tau_min: f64, tau_max: f64, points: usize) -> Result<Vec<f64>, JsError> {
    if !(tau_min > 0.0 && tau_max > tau_min) || points < 2 {
        return Err(JsError::new("need 0 < tau_min < tau_max and at least two points"));
    }
    let (a, b) = (tau_min.ln(), tau_max.ln());
    let mut out = Vec::with_capacity(2 * points);
    for k in 0..points {
        let tau = (a + (b - a) * k as f64 / (points - 1) as f64).exp();
        out.push(tau);
        out.push(omega(tau).map_err(js_err)?);
    }
    Ok(out)
}

/// A running flow that the page advances frame by frame.
#[wasm_bindgen]
pub struct FlowSession {
    stepper: Stepper,
    state: ProfileState,
    dt: f64,
}

#[wasm_bindgen]
impl FlowSession {
    #[wasm_bindgen(constructor)]
    pub fn new(kind: &str, mu1: f64, mu2: f64, nodes: usize, dt: f64) -> Result<FlowSession, JsError> {
        let state = initial(kind, mu1, mu2, &demo_grid(nodes)?)?;
        let stepper = Stepper::new(&state, FlowConfig { dt, ..FlowConfig::default() }).map_err(js_err)?;
        Ok(Self { stepper, state, dt })
    }

    /// Takes `steps` implicit steps, halving `dt` when Newton fails.
    pub fn advance(&mut self, steps: usize) -> Result<(), JsError> {
        for _ in 0..steps {
            loop {
                match self.stepper.advance(&self.state, self.dt) {
                    Ok(o) => {
                        self.state = o.state;
                        break;
                    }
                    Err(ymbubble::Error::NewtonFailed { .. }) if self.dt > 1e-12 => self.dt *= 0.5,
                    Err(e) => return Err(js_err(e)),
                }
            }
        }
        Ok(())
    }

    pub fn time(&self) -> f64 {
        self.state.time
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn psi(&self) -> Vec<f64> {
        self.state.psi.clone()
    }

    pub fn energy(&self) -> f64 {
        energy(&self.state).unwrap_or(f64::NAN)
    }

    /// Crossings of `psi = 1`, ascending; empty once the profile no longer crosses.
    pub fn scales(&self) -> Vec<f64> {
        extract_scales(&self.state, 0.5).map(|s| s.crossings).unwrap_or_default()
    }
}
