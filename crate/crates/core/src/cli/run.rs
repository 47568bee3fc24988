//! Scenario pipelines behind the `run` and `sweep` subcommands.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use super::config::{ConfigError, CrankedSpec, ScenarioConfig, ScheduleSpec, SweepSpec, System, Task};
use super::report::{phase_csv, sweep_csv, Check, ConvergenceRow, LoopRow, Reference, RunReport, SweepRow};
use crate::cranked::CrankedSystem;
use crate::grid::{wrap, TimeGrid};
use crate::invariant::{eigenframe_with, lvn_residual, transport, FrameOptions, InvariantPath};
use crate::linalg::{Op, C64};
use crate::oscillator::{closed_form_phases, OscillatorParams};
use crate::phases::{abelian_phases, project};
use crate::propagator::{evolve, evolve_with, EvolveOptions, HamiltonianSchedule, UnitaryPath};
use crate::scenario::{cyclic_series, oscillator_phases_with, PhaseRow};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{stage} failed: {source}")]
    Compute { stage: &'static str, source: crate::error::Error },
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

fn at(stage: &'static str) -> impl FnOnce(crate::error::Error) -> RunError {
    move |source| RunError::Compute { stage, source }
}

/// Command-line overrides of config values.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub steps: Option<usize>,
    pub truncation: Option<usize>,
    pub tol: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ScenarioConfig) -> Result<(), ConfigError> {
        if let Some(s) = self.steps {
            cfg.grid.steps = Some(s);
        }
        if let Some(n) = self.truncation {
            cfg.truncation.N = Some(n);
        }
        if let Some(t) = self.tol {
            cfg.tol = t;
        }
        cfg.check()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Every task in the config.
    Run,
    /// Only the sweep task.
    Sweep,
}

#[derive(Clone, Debug, Serialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

/// Report plus the text of every output file, keyed by file name.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub report: RunReport,
    pub files: Vec<(String, String)>,
    pub timings: Vec<Timing>,
}

impl Outcome {
    /// Writes the artifacts, the report and `timings.json` into `dir`.
    pub fn write(&self, dir: &Path, report_name: &str) -> Result<(), RunError> {
        let io = |path: &Path| {
            let p = path.display().to_string();
            move |source| RunError::Io { path: p, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        for (name, text) in &self.files {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(io(&path))?;
        }
        let path = dir.join(report_name);
        std::fs::write(&path, self.report.to_json()).map_err(io(&path))?;
        let path = dir.join("timings.json");
        let mut t = serde_json::to_string_pretty(&self.timings).expect("timings serialize");
        t.push('\n');
        std::fs::write(&path, t).map_err(io(&path))?;
        Ok(())
    }
}

struct Recorder {
    timings: Vec<Timing>,
    start: Instant,
}

impl Recorder {
    fn new() -> Self {
        Recorder { timings: Vec::new(), start: Instant::now() }
    }

    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.timings.push(Timing { stage: stage.into(), seconds: (now - self.start).as_secs_f64() });
        self.start = now;
    }
}

pub fn execute(cfg: &ScenarioConfig, mode: Mode) -> Result<Outcome, RunError> {
    cfg.check()?;
    let tasks: Vec<Task> = match mode {
        Mode::Run => cfg.tasks.clone(),
        Mode::Sweep => {
            if cfg.sweep.is_none() || !matches!(cfg.system, System::Oscillator(_)) {
                return Err(ConfigError::Invalid("sweep needs an oscillator system and a [sweep] table".into()).into());
            }
            vec![Task::Sweep]
        }
    };
    let mut report = RunReport {
        system: match &cfg.system {
            System::Oscillator(_) => "oscillator",
            System::Cranked(_) => "cranked",
            System::Schedule(_) => "schedule",
        }
        .into(),
        truncation: matches!(cfg.system, System::Oscillator(_)).then(|| cfg.truncation()),
        steps: cfg.steps(),
        tasks: tasks.iter().map(|t| task_name(*t).to_string()).collect(),
        ..RunReport::default()
    };
    let mut files = Vec::new();
    let mut rec = Recorder::new();
    match &cfg.system {
        System::Oscillator(spec) => {
            let params = spec.params().map_err(|e| ConfigError::Invalid(e.to_string()))?;
            run_oscillator(cfg, &params, &tasks, &mut report, &mut files, &mut rec)?;
        }
        System::Cranked(spec) => run_cranked(cfg, spec, &tasks, &mut report, &mut files, &mut rec)?,
        System::Schedule(spec) => run_schedule(cfg, spec, &tasks, &mut report, &mut files, &mut rec)?,
    }
    report.finish();
    Ok(Outcome { report, files, timings: rec.timings })
}

pub fn task_name(t: Task) -> &'static str {
    match t {
        Task::Phases => "phases",
        Task::Validate => "validate",
        Task::Sweep => "sweep",
        Task::LoopCheck => "loop-check",
    }
}

const PHASE_TOL: f64 = 1e-6;
const DYNAMICAL_TOL: f64 = 1e-7;
const FIDELITY_TOL: f64 = 1e-8;
const RATIO_TOL: f64 = 1e-8;
const DEGENERATE_TOL: f64 = 1e-7;
const LOOP_TOL: f64 = 1e-12;
const RESIDUAL_TOL: f64 = 1e-6;

fn run_oscillator(
    cfg: &ScenarioConfig,
    params: &OscillatorParams,
    tasks: &[Task],
    report: &mut RunReport,
    files: &mut Vec<(String, String)>,
    rec: &mut Recorder,
) -> Result<(), RunError> {
    let n = cfg.truncation();
    if tasks.contains(&Task::Phases) {
        let run =
            oscillator_phases_with(params, n, cfg.truncation.N_int, cfg.levels, cfg.steps()).map_err(at("phases"))?;
        files.push((cfg.output.csv_path.clone(), phase_csv(&run.rows)));
        rec.lap("phases");
        if tasks.contains(&Task::Validate) {
            let g0 = run.levels[0].geometric_frame;
            for l in &run.levels {
                let k = l.n;
                report.checks.push(Check::absolute(
                    format!("fidelity_n{k}"),
                    l.fidelity,
                    1.0,
                    FIDELITY_TOL,
                    Reference::Exact,
                ));
                match (l.closed_dynamical, l.closed_geometric) {
                    (Some(cd), Some(cg)) => {
                        let c = &mut report.checks;
                        c.push(Check::angle(
                            format!("total_phase_n{k}"),
                            l.total,
                            cd + cg,
                            PHASE_TOL,
                            Reference::ClosedForm,
                        ));
                        c.push(Check::absolute(
                            format!("dynamical_phase_n{k}"),
                            l.dynamical,
                            cd,
                            DYNAMICAL_TOL,
                            Reference::ClosedForm,
                        ));
                        c.push(Check::angle(
                            format!("geometric_phase_n{k}"),
                            l.geometric,
                            cg,
                            PHASE_TOL,
                            Reference::ClosedForm,
                        ));
                        c.push(Check::absolute(
                            format!("geometric_frame_n{k}"),
                            l.geometric_frame,
                            cg,
                            PHASE_TOL,
                            Reference::ClosedForm,
                        ));
                        if k > 0 {
                            let ratio = l.geometric_frame / g0;
                            c.push(Check::absolute(
                                format!("geometric_ratio_n{k}"),
                                ratio,
                                (2 * k + 1) as f64,
                                RATIO_TOL,
                                Reference::ClosedForm,
                            ));
                        }
                    }
                    _ => {
                        let c = &mut report.checks;
                        c.push(Check::absolute(
                            format!("geometric_phase_n{k}"),
                            l.geometric,
                            0.0,
                            DEGENERATE_TOL,
                            Reference::Exact,
                        ));
                        c.push(Check::absolute(
                            format!("geometric_frame_n{k}"),
                            l.geometric_frame,
                            0.0,
                            DEGENERATE_TOL,
                            Reference::Exact,
                        ));
                    }
                }
            }
            report.convergence = convergence_table(params, n, cfg.levels)?;
            rec.lap("validate");
        }
    }
    if tasks.contains(&Task::LoopCheck) {
        oscillator_loops(params, n, report)?;
        rec.lap("loop-check");
    }
    if tasks.contains(&Task::Sweep) {
        let rows = sweep(params, cfg.sweep.as_ref().expect("checked"), n, cfg.truncation.N_int)?;
        for (i, r) in rows.iter().enumerate() {
            if r.status == "ok" {
                let c = &mut report.checks;
                c.push(Check::angle(
                    format!("sweep_row{i}_gamma0"),
                    r.gamma0_numeric,
                    r.gamma0_closed,
                    PHASE_TOL,
                    Reference::ClosedForm,
                ));
                c.push(Check::absolute(
                    format!("sweep_row{i}_delta0"),
                    r.delta0_numeric,
                    r.delta0_closed,
                    DYNAMICAL_TOL,
                    Reference::ClosedForm,
                ));
            }
        }
        files.push((cfg.output.sweep_path.clone(), sweep_csv(&rows)));
        rec.lap("sweep");
    }
    Ok(())
}

/// Closed-form error of the total phase of the top level at three truncations.
fn convergence_table(params: &OscillatorParams, n: usize, level: usize) -> Result<Vec<ConvergenceRow>, RunError> {
    let grid = TimeGrid::new(params.period, 2).map_err(at("convergence"))?;
    let Ok((cd, cg)) = closed_form_phases(params, level, params.period) else {
        return Ok(Vec::new());
    };
    let mut sizes = vec![n / 2, 3 * n / 4, n];
    sizes.retain(|&s| s >= crate::oscillator::MIN_DIM);
    sizes.dedup();
    let mut rows = Vec::new();
    for size in sizes {
        match cyclic_series(params, size, None, level, &grid) {
            Ok((totals, _)) => {
                let z = totals[level][2];
                rows.push(ConvergenceRow {
                    N: size,
                    level,
                    total_phase_error: crate::grid::angle_distance(z.arg(), cd + cg),
                    fidelity_defect: 1.0 - z.norm(),
                });
            }
            Err(crate::error::Error::TruncationTooSmall { .. }) => continue,
            Err(e) => return Err(at("convergence")(e)),
        }
    }
    Ok(rows)
}

/// `U(t) = e^{−iKt}` in the `K` basis at `τ` and `2τ`.
fn oscillator_loops(params: &OscillatorParams, n: usize, report: &mut RunReport) -> Result<(), RunError> {
    let grid = TimeGrid::new(2.0 * params.tau, 2).map_err(at("loop-check"))?;
    let samples = grid
        .points()
        .iter()
        .map(|&t| {
            let d: Vec<C64> = (0..n).map(|j| C64::from_polar(1.0, -params.omega * (j as f64 + 0.5) * t)).collect();
            Op::diagonal(&d)
        })
        .collect();
    let u = UnitaryPath::from_samples(grid, samples).map_err(at("loop-check"))?;
    for (k, name, expected) in [(1, "loop_tau", std::f64::consts::PI), (2, "loop_2tau", 0.0)] {
        loop_check_row(&u, grid.t(k), name, Some(expected), LOOP_TOL, report);
    }
    Ok(())
}

/// Records whether `U(t)` is a multiple of the identity. With `expected`,
/// the phase of the multiple is also compared.
fn loop_check_row(u: &UnitaryPath, t: f64, name: &str, expected: Option<f64>, tol: f64, report: &mut RunReport) {
    let ut = u.at(t).expect("grid point");
    let dim = ut.dim();
    let tr = ut.trace() / dim as f64;
    let (phase, defect) = if tr.norm() > 0.0 {
        let c = tr / tr.norm();
        (Some(c.arg()), ut.distance(&Op::identity(dim).scale(c), None) / dim as f64)
    } else {
        (None, f64::INFINITY)
    };
    let is_loop = defect <= tol;
    report.loops.push(LoopRow { t, phase: phase.filter(|_| is_loop) });
    let check = match (expected, phase) {
        (Some(e), Some(p)) if is_loop => Check::angle(name, p, e, tol, Reference::ClosedForm),
        (None, Some(_)) => Check::at_most(name, defect, tol, Reference::Exact),
        _ => Check::failed(name, tol, Reference::Exact),
    };
    report.checks.push(check);
}

fn axis(a: &Option<super::config::Axis>, base: f64) -> Result<Vec<f64>, ConfigError> {
    a.as_ref().map_or(Ok(vec![base]), |a| a.values())
}

/// One row per parameter tuple, in `M`, `Ω`, `m`, `ω` nesting order.
pub fn sweep(
    base: &OscillatorParams,
    spec: &SweepSpec,
    n: usize,
    n_int: Option<usize>,
) -> Result<Vec<SweepRow>, RunError> {
    let ms = axis(&spec.M, base.mass)?;
    let omegas_big = axis(&spec.Omega, base.omega_big)?;
    let cms = axis(&spec.m, base.crank_mass)?;
    let omegas = axis(&spec.omega, base.omega)?;
    let mut tuples = Vec::new();
    for &a in &ms {
        for &b in &omegas_big {
            for &c in &cms {
                for &d in &omegas {
                    tuples.push((a, b, c, d));
                }
            }
        }
    }
    tuples.par_iter().map(|&(a, b, c, d)| sweep_row(a, b, c, d, n, n_int)).collect()
}

#[allow(non_snake_case)]
fn sweep_row(M: f64, Omega: f64, m: f64, omega: f64, n: usize, n_int: Option<usize>) -> Result<SweepRow, RunError> {
    let nan = f64::NAN;
    let mut row = SweepRow {
        M,
        Omega,
        m,
        omega,
        mu: nan,
        nu: nan,
        delta0_closed: nan,
        gamma0_closed: nan,
        delta0_numeric: nan,
        gamma0_numeric: nan,
        status: "invalid".into(),
    };
    let Ok(p) = OscillatorParams::derive(M, Omega, m, omega) else {
        return Ok(row);
    };
    row.mu = p.mu;
    row.nu = p.nu;
    let grid = TimeGrid::new(p.period, 2).map_err(at("sweep"))?;
    let (totals, dynamical) = cyclic_series(&p, n, n_int, 0, &grid).map_err(at("sweep"))?;
    row.delta0_numeric = dynamical[0][2];
    row.gamma0_numeric = wrap(totals[0][2].arg() - dynamical[0][2]);
    match closed_form_phases(&p, 0, p.period) {
        Ok((d, g)) => {
            row.delta0_closed = d;
            row.gamma0_closed = g;
            row.status = "ok".into();
        }
        Err(_) => row.status = "skipped".into(),
    }
    Ok(row)
}

/// Phase rows and validation for a system with a known invariant path.
#[allow(clippy::too_many_arguments)]
fn generic_pipeline(
    cfg: &ScenarioConfig,
    tasks: &[Task],
    h: &HamiltonianSchedule,
    u: &UnitaryPath,
    inv: &InvariantPath,
    report: &mut RunReport,
    files: &mut Vec<(String, String)>,
    rec: &mut Recorder,
) -> Result<(), RunError> {
    let grid = *inv.grid();
    if tasks.contains(&Task::Phases) {
        let last = grid.len() - 1;
        let (s0, s1) = (inv.sample(0), inv.sample(last));
        let periodic = s0.distance(&s1, None) <= 1e-8 * s0.frobenius_norm().max(1e-300);
        let opts = FrameOptions::new(periodic).max_levels(cfg.levels + 1);
        let frame = eigenframe_with(inv, &opts).map_err(at("frames"))?;
        let record = abelian_phases(&project(&frame, h).map_err(at("phases"))?).map_err(at("phases"))?;
        rec.lap("frames");
        let mut rows = Vec::new();
        let mut cyclic = Vec::new();
        for k in 0..grid.len() {
            for (n, lvl) in record.levels.iter().enumerate() {
                let Ok((d, g)) = lvl.abelian() else { continue };
                let v = frame.vector(0, frame.offset(n));
                let z = u.samples()[k].expectation(&v, &v);
                rows.push(PhaseRow {
                    t: grid.t(k),
                    n,
                    delta_unwrapped: d[k],
                    gamma_unwrapped: g[k],
                    total_mod_2pi: z.arg(),
                    fidelity: z.norm(),
                });
                if k == last {
                    cyclic.push((n, z, d[k], g[k]));
                }
            }
        }
        files.push((cfg.output.csv_path.clone(), phase_csv(&rows)));
        if tasks.contains(&Task::Validate) {
            let res = lvn_residual(inv, h).map_err(at("validate"))?.into_iter().fold(0.0, f64::max);
            report.checks.push(Check::at_most("invariant_residual", res, RESIDUAL_TOL, Reference::Exact));
            for (n, z, d, g) in cyclic {
                let c = &mut report.checks;
                c.push(Check::absolute(format!("cyclic_n{n}"), z.norm(), 1.0, PHASE_TOL, Reference::Exact));
                if periodic {
                    c.push(Check::angle(
                        format!("geometric_estimators_n{n}"),
                        wrap(z.arg() - d),
                        g,
                        PHASE_TOL,
                        Reference::IndependentNumeric,
                    ));
                } else {
                    c.push(Check::failed(
                        format!("geometric_estimators_n{n}"),
                        PHASE_TOL,
                        Reference::IndependentNumeric,
                    ));
                }
            }
            rec.lap("validate");
        }
    }
    if tasks.contains(&Task::LoopCheck) {
        loop_check_row(u, grid.t_max(), "loop_t_max", None, 1e-8, report);
        rec.lap("loop-check");
    }
    Ok(())
}

fn run_cranked(
    cfg: &ScenarioConfig,
    spec: &CrankedSpec,
    tasks: &[Task],
    report: &mut RunReport,
    files: &mut Vec<(String, String)>,
    rec: &mut Recorder,
) -> Result<(), RunError> {
    let sys = CrankedSystem::new(spec.h0.to_op("system.cranked.h0")?, spec.k.to_op("system.cranked.k")?)
        .map_err(at("setup"))?;
    let grid = TimeGrid::new(cfg.grid.t_max.expect("checked"), cfg.steps()).map_err(at("setup"))?;
    let u = sys.propagator_path(grid).map_err(at("propagator"))?;
    let h = sys.schedule();
    let s = sys.clone();
    let inv = InvariantPath::analytic(grid, sys.dim(), move |t| s.invariant(t));
    rec.lap("setup");
    if tasks.contains(&Task::Validate) {
        let ode = evolve(&h, grid.t_max(), grid.steps(), cfg.tol).map_err(at("validate"))?;
        let gap = ode.last().distance(u.last(), None);
        report.checks.push(Check::at_most("closed_form_propagator", gap, DYNAMICAL_TOL, Reference::IndependentNumeric));
        rec.lap("integrate");
    }
    generic_pipeline(cfg, tasks, &h, &u, &inv, report, files, rec)
}

fn run_schedule(
    cfg: &ScenarioConfig,
    spec: &ScheduleSpec,
    tasks: &[Task],
    report: &mut RunReport,
    files: &mut Vec<(String, String)>,
    rec: &mut Recorder,
) -> Result<(), RunError> {
    let mats = spec
        .terms
        .iter()
        .enumerate()
        .map(|(j, t)| t.matrix.to_op(&format!("system.schedule.terms[{j}].matrix")))
        .collect::<Result<Vec<Op>, _>>()?;
    let terms = spec.terms.clone();
    let dim = mats[0].dim();
    let h = HamiltonianSchedule::analytic(dim, "schedule", move |t| {
        let mut acc = Op::zeros(dim);
        for (m, term) in mats.iter().zip(&terms) {
            acc = &acc + &m.scale_real(term.coefficient(t));
        }
        acc.hermitize()
    });
    let t_max = cfg.grid.t_max.expect("checked");
    let u = evolve_with(&h, t_max, cfg.steps(), &EvolveOptions::new(cfg.tol)).map_err(at("evolve"))?;
    rec.lap("evolve");
    let i0 = match &spec.invariant0 {
        Some(m) => m.to_op("system.schedule.invariant0")?,
        None => Op::identity(dim),
    };
    let inv = transport(&u, &i0).map_err(at("invariant"))?;
    generic_pipeline(cfg, tasks, &h, &u, &inv, report, files, rec)
}
