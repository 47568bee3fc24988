//! Browser bindings: closed-form phase curves, the invariant's path on the
//! hyperboloid and a small truncated numeric run for one parameter set.

use geophase::oscillator::{closed_form_phases, hyperbolic_coords, simplified_geometric_phase, OscillatorParams};
use geophase::scenario::oscillator_phases;
use wasm_bindgen::prelude::*;

/// Largest truncation accepted from the page, to keep a run interactive.
pub const MAX_DIM: usize = 96;

#[wasm_bindgen]
pub struct Demo {
    params: OscillatorParams,
}

#[wasm_bindgen]
impl Demo {
    /// Derives the model from `(M, Ω, m, ω)`; fails when `m ≤ M` or a
    /// frequency is not positive.
    #[wasm_bindgen(constructor)]
    #[allow(non_snake_case)]
    pub fn new(M: f64, Omega: f64, m: f64, omega: f64) -> Result<Demo, JsError> {
        Ok(Demo { params: OscillatorParams::derive(M, Omega, m, omega)? })
    }

    #[wasm_bindgen(getter)]
    pub fn mu(&self) -> f64 {
        self.params.mu
    }

    #[wasm_bindgen(getter)]
    pub fn nu(&self) -> f64 {
        self.params.nu
    }

    #[wasm_bindgen(getter)]
    pub fn period(&self) -> f64 {
        self.params.period
    }

    #[wasm_bindgen(getter)]
    pub fn degenerate(&self) -> bool {
        self.params.is_degenerate()
    }

    /// `[t, δₙ(t), γₙ(t)]` triples on `points + 1` times over one period.
    pub fn phase_curves(&self, n: usize, points: usize) -> Result<Vec<f64>, JsError> {
        let points = points.max(1);
        let mut out = Vec::with_capacity(3 * (points + 1));
        for k in 0..=points {
            let t = self.params.period * k as f64 / points as f64;
            let (d, g) = closed_form_phases(&self.params, n, t)?;
            out.extend([t, d, g]);
        }
        Ok(out)
    }

    /// The one-line simplified geometric phase at the period, for comparison.
    pub fn simplified_gamma(&self, n: usize) -> Result<f64, JsError> {
        Ok(simplified_geometric_phase(&self.params, n)?)
    }

    /// `(x, y)` pairs: the invariant's direction on the hyperboloid mapped
    /// to the Poincaré disk, `(R¹, R²)/(1 + R³)`, over one period.
    pub fn disk_path(&self, points: usize) -> Result<Vec<f64>, JsError> {
        let points = points.max(1);
        let mut out = Vec::with_capacity(2 * (points + 1));
        for k in 0..=points {
            let t = self.params.period * k as f64 / points as f64;
            let r = hyperbolic_coords(&self.params, t)?.r;
            out.extend([r[0] / (1.0 + r[2]), r[1] / (1.0 + r[2])]);
        }
        Ok(out)
    }

    /// Truncated numeric phases at the period for levels `0..=n_max`, five
    /// numbers per level: fidelity, total, dynamical, geometric from the
    /// total, geometric from the frame integral.
    pub fn numeric_phases(&self, dim: usize, n_max: usize, steps: usize) -> Result<Vec<f64>, JsError> {
        if dim > MAX_DIM {
            return Err(JsError::new(&format!("truncation {dim} exceeds the page limit {MAX_DIM}")));
        }
        let run = oscillator_phases(&self.params, dim, n_max, steps)?;
        Ok(run.levels.iter().flat_map(|l| [l.fidelity, l.total, l.dynamical, l.geometric, l.geometric_frame]).collect())
    }
}
