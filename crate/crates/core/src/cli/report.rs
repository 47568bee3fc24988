//! Validation report and CSV writers.

use std::fmt::Write as _;

use serde::Serialize;

use crate::grid::angle_distance;
use crate::scenario::PhaseRow;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

/// Where the expected value of a check comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reference {
    /// Analytic formula of the model.
    ClosedForm,
    /// An independent numerical computation.
    IndependentNumeric,
    /// A value fixed by construction (unit fidelity, zero residual).
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub measured: f64,
    pub expected: f64,
    pub error: f64,
    pub tolerance: f64,
    pub reference: Reference,
}

impl Check {
    pub fn absolute(
        name: impl Into<String>,
        measured: f64,
        expected: f64,
        tolerance: f64,
        reference: Reference,
    ) -> Self {
        Self::with_error(name, measured, expected, (measured - expected).abs(), tolerance, reference)
    }

    /// Compares two angles modulo `2π`.
    pub fn angle(name: impl Into<String>, measured: f64, expected: f64, tolerance: f64, reference: Reference) -> Self {
        Self::with_error(name, measured, expected, angle_distance(measured, expected), tolerance, reference)
    }

    /// Passes when `measured ≤ bound`.
    pub fn at_most(name: impl Into<String>, measured: f64, bound: f64, reference: Reference) -> Self {
        Self::with_error(name, measured, 0.0, measured, bound, reference)
    }

    /// A check that could not be evaluated.
    pub fn failed(name: impl Into<String>, tolerance: f64, reference: Reference) -> Self {
        Self::with_error(name, f64::NAN, f64::NAN, f64::INFINITY, tolerance, reference)
    }

    fn with_error(
        name: impl Into<String>,
        measured: f64,
        expected: f64,
        error: f64,
        tolerance: f64,
        reference: Reference,
    ) -> Self {
        let status = if error <= tolerance { Status::Pass } else { Status::Fail };
        Check { name: name.into(), status, measured, expected, error, tolerance, reference }
    }
}

/// Error of a truncation-sensitive quantity against its closed form.
#[allow(non_snake_case)]
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub N: usize,
    pub level: usize,
    pub total_phase_error: f64,
    pub fidelity_defect: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LoopRow {
    pub t: f64,
    /// `arg c` when `U(t) = c·1`.
    pub phase: Option<f64>,
}

#[allow(non_snake_case)]
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub M: f64,
    pub Omega: f64,
    pub m: f64,
    pub omega: f64,
    pub mu: f64,
    pub nu: f64,
    pub delta0_closed: f64,
    pub gamma0_closed: f64,
    pub delta0_numeric: f64,
    pub gamma0_numeric: f64,
    pub status: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RunReport {
    pub system: String,
    pub truncation: Option<usize>,
    pub steps: usize,
    pub tasks: Vec<String>,
    pub checks: Vec<Check>,
    pub convergence: Vec<ConvergenceRow>,
    pub loops: Vec<LoopRow>,
    pub all_pass: bool,
}

impl RunReport {
    pub fn finish(&mut self) {
        self.all_pass = self.checks.iter().all(|c| c.status == Status::Pass);
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// `{:.16e}` keeps 17 significant digits, enough to round-trip an `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn phase_csv(rows: &[PhaseRow]) -> String {
    let mut out = String::from("t,n,delta_unwrapped,gamma_unwrapped,total_mod_2pi,fidelity\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_f64(r.t),
            r.n,
            fmt_f64(r.delta_unwrapped),
            fmt_f64(r.gamma_unwrapped),
            fmt_f64(r.total_mod_2pi),
            fmt_f64(r.fidelity)
        );
    }
    out
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out =
        String::from("M,Omega,m,omega,mu,nu,delta0_closed,gamma0_closed,delta0_numeric,gamma0_numeric,status\n");
    for r in rows {
        let cells: Vec<String> = [
            r.M,
            r.Omega,
            r.m,
            r.omega,
            r.mu,
            r.nu,
            r.delta0_closed,
            r.gamma0_closed,
            r.delta0_numeric,
            r.gamma0_numeric,
        ]
        .iter()
        .map(|&x| fmt_f64(x))
        .collect();
        let _ = writeln!(out, "{},{}", cells.join(","), r.status);
    }
    out
}
