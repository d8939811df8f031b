//! First-order IMEX integration of
//! `∂_t u = μ(1 - K[u])u + Δu` with homogeneous Neumann conditions.
//!
//! Each step solves `(I - dt L) u_new = u + dt R(u)`. Steps that would push a
//! node below the positivity floor are rejected and retried with half the
//! step; after an accepted step the step size doubles back towards the
//! configured one.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    dissipation_parts, Dissipation, Snapshot, Trace, TraceMetadata, TraceRow,
};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::kernel::Kernel;
use crate::linalg::{conjugate_gradient, solve_tridiagonal};

/// Implicit solver used on 2D grids. 1D grids always use the Thomas algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImplicitSolver {
    /// `(I - dt L_0)(I - dt L_1)` factored solve, one tridiagonal sweep per axis.
    #[default]
    Adi,
    /// Conjugate gradients on `I - dt L` in the weighted inner product.
    Iterative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub mu: f64,
    pub dt: f64,
    pub t_end: f64,
    /// Steps between field snapshots; 0 disables snapshots.
    pub snapshot_every: usize,
    /// Replace `K[u]` by `u` (classical Fisher-KPP).
    pub local_mode: bool,
    pub positivity_floor: f64,
    pub max_dt_halvings: u32,
    pub implicit_solver: ImplicitSolver,
    /// Relative residual for [`ImplicitSolver::Iterative`].
    pub solver_tol: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            mu: 1.0,
            dt: 1e-3,
            t_end: 1.0,
            snapshot_every: 100,
            local_mode: false,
            positivity_floor: 1e-14,
            max_dt_halvings: 40,
            implicit_solver: ImplicitSolver::Adi,
            solver_tol: 1e-10,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu.is_finite() && self.mu >= 0.0) {
            return Err(Error::validation(
                "mu",
                format!("must be finite and >= 0, got {}", self.mu),
            ));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::validation(
                "dt",
                format!("must be finite and > 0, got {}", self.dt),
            ));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::validation(
                "t_end",
                format!("must be finite and >= 0, got {}", self.t_end),
            ));
        }
        if !(self.positivity_floor.is_finite() && self.positivity_floor > 0.0) {
            return Err(Error::validation(
                "positivity_floor",
                format!("must be finite and > 0, got {}", self.positivity_floor),
            ));
        }
        if !(self.solver_tol > 0.0) {
            return Err(Error::validation("solver_tol", "must be > 0"));
        }
        Ok(())
    }

    fn implicit_solver_name(&self, grid: &Grid) -> &'static str {
        match (grid.dim(), self.implicit_solver) {
            (1, _) => "thomas",
            (_, ImplicitSolver::Adi) => "adi",
            (_, ImplicitSolver::Iterative) => "cg",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub u: Field,
    pub step: usize,
    /// Step size the next attempt starts from.
    pub dt_next: f64,
}

impl SimState {
    pub fn new(u: Field, config: &SimConfig) -> Self {
        SimState {
            t: 0.0,
            u,
            step: 0,
            dt_next: config.dt,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: SimState,
    pub dt_used: f64,
    pub halvings: u32,
}

/// Called once for the initial state and once per accepted step.
pub trait Observer {
    fn observe(&mut self, state: &SimState, row: &TraceRow);
}

impl<F: FnMut(&SimState, &TraceRow)> Observer for F {
    fn observe(&mut self, state: &SimState, row: &TraceRow) {
        self(state, row)
    }
}

/// `μ(1 - K[u])u`, or `μ(1 - u)u` in local mode.
pub fn reaction_term(u: &Field, kernel: &Kernel, mu: f64, local_mode: bool) -> Result<Field> {
    if local_mode {
        return Ok(u.map(|v| mu * (1.0 - v) * v));
    }
    if !kernel.is_normalized() {
        return Err(Error::UnnormalizedKernel);
    }
    let ku = kernel.apply(u)?;
    let values = u
        .values()
        .iter()
        .zip(ku.values())
        .map(|(v, k)| mu * (1.0 - k) * v)
        .collect();
    Field::new(u.grid(), values)
}

fn check_model(grid: &Grid, kernel: &Kernel, config: &SimConfig) -> Result<()> {
    config.validate()?;
    if kernel.grid() != grid {
        return Err(Error::GridMismatch);
    }
    if !config.local_mode && !kernel.is_normalized() {
        return Err(Error::UnnormalizedKernel);
    }
    Ok(())
}

/// Solves `(I - dt L) x = rhs` in place.
struct ImplicitStep<'a> {
    grid: &'a Grid,
    solver: ImplicitSolver,
    tol: f64,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    line: Vec<f64>,
    scratch: Vec<f64>,
}

impl<'a> ImplicitStep<'a> {
    fn new(grid: &'a Grid, config: &SimConfig) -> Self {
        ImplicitStep {
            grid,
            solver: config.implicit_solver,
            tol: config.solver_tol,
            lower: Vec::new(),
            diag: Vec::new(),
            upper: Vec::new(),
            line: Vec::new(),
            scratch: Vec::new(),
        }
    }

    fn assemble_axis(&mut self, axis: usize, dt: f64) {
        let n = self.grid.counts()[axis];
        let h = self.grid.spacing()[axis];
        let r = dt / (h * h);
        self.lower.clear();
        self.diag.clear();
        self.upper.clear();
        self.lower.resize(n, -r);
        self.diag.resize(n, 1.0 + 2.0 * r);
        self.upper.resize(n, -r);
        self.upper[0] = -2.0 * r;
        self.lower[n - 1] = -2.0 * r;
    }

    fn solve_axis(&mut self, x: &mut [f64], axis: usize, dt: f64) {
        self.assemble_axis(axis, dt);
        let grid = self.grid;
        let n = grid.counts()[axis];
        if grid.dim() == 1 {
            solve_tridiagonal(&self.lower, &self.diag, &self.upper, x, &mut self.scratch);
            return;
        }
        let stride = grid.stride(axis);
        let lines = grid.len() / n;
        self.line.resize(n, 0.0);
        for l in 0..lines {
            let start = if axis == 1 { l * n } else { l };
            for k in 0..n {
                self.line[k] = x[start + k * stride];
            }
            solve_tridiagonal(
                &self.lower,
                &self.diag,
                &self.upper,
                &mut self.line,
                &mut self.scratch,
            );
            for k in 0..n {
                x[start + k * stride] = self.line[k];
            }
        }
    }

    fn solve(&mut self, x: &mut [f64], dt: f64) -> Result<()> {
        match (self.grid.dim(), self.solver) {
            (1, _) => {
                self.solve_axis(x, 0, dt);
                Ok(())
            }
            (_, ImplicitSolver::Adi) => {
                self.solve_axis(x, 1, dt);
                self.solve_axis(x, 0, dt);
                Ok(())
            }
            (_, ImplicitSolver::Iterative) => {
                let grid = self.grid;
                let rhs = x.to_vec();
                let apply = |v: &[f64], out: &mut [f64]| {
                    grid.laplacian_into(v, out);
                    for (o, vi) in out.iter_mut().zip(v) {
                        *o = vi - dt * *o;
                    }
                };
                conjugate_gradient(apply, grid.weights(), &rhs, x, self.tol, 10 * x.len() + 100)?;
                Ok(())
            }
        }
    }
}

/// Attempts one step from `u` with cached `ku = K[u]` (or `u` in local mode),
/// halving on positivity violations.
fn advance(
    implicit: &mut ImplicitStep<'_>,
    t: f64,
    u: &[f64],
    ku: &[f64],
    dt_try: f64,
    config: &SimConfig,
) -> Result<(Vec<f64>, f64, u32)> {
    let reaction: Vec<f64> = u
        .iter()
        .zip(ku)
        .map(|(v, k)| config.mu * (1.0 - k) * v)
        .collect();
    let mut dt = dt_try;
    let mut halvings = 0;
    loop {
        let mut next: Vec<f64> = u.iter().zip(&reaction).map(|(v, r)| v + dt * r).collect();
        implicit.solve(&mut next, dt)?;
        let (node, low) =
            next.iter()
                .copied()
                .enumerate()
                .fold(
                    (0, f64::INFINITY),
                    |acc, (i, v)| {
                        if !(v >= acc.1) {
                            (i, v)
                        } else {
                            acc
                        }
                    },
                );
        if low >= config.positivity_floor && low.is_finite() {
            return Ok((next, dt, halvings));
        }
        if halvings >= config.max_dt_halvings {
            return Err(Error::StepFailure {
                time: t,
                node,
                value: low,
                halvings,
            });
        }
        halvings += 1;
        dt *= 0.5;
    }
}

fn interaction(kernel: &Kernel, local_mode: bool, u: &[f64]) -> Vec<f64> {
    if local_mode {
        u.to_vec()
    } else {
        let mut out = vec![0.0; u.len()];
        kernel.apply_into(u, &mut out);
        out
    }
}

/// One accepted IMEX step from `state`, of size at most `state.dt_next`.
pub fn step_imex(
    state: &SimState,
    grid: &Grid,
    kernel: &Kernel,
    config: &SimConfig,
) -> Result<StepOutcome> {
    check_model(grid, kernel, config)?;
    grid.check_len(state.u.values())?;
    if let Some((node, &value)) = state
        .u
        .values()
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v > 0.0))
    {
        return Err(Error::NonPositive { node, value });
    }
    let ku = interaction(kernel, config.local_mode, state.u.values());
    let mut implicit = ImplicitStep::new(grid, config);
    let dt_try = state.dt_next.min(config.dt);
    let (next, dt_used, halvings) = advance(
        &mut implicit,
        state.t,
        state.u.values(),
        &ku,
        dt_try,
        config,
    )?;
    Ok(StepOutcome {
        state: SimState {
            t: state.t + dt_used,
            u: Field::from_parts(grid.clone(), next),
            step: state.step + 1,
            dt_next: (2.0 * dt_used).min(config.dt),
        },
        dt_used,
        halvings,
    })
}

/// Lifts an initial datum to the positivity floor after checking it is
/// non-negative and not identically zero.
pub fn prepare_initial_datum(u0: &Field, floor: f64) -> Result<Field> {
    if let Some((i, v)) = u0
        .values()
        .iter()
        .enumerate()
        .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
    {
        return Err(Error::InvalidInitialDatum(format!(
            "node {i} has value {v}; the initial datum must be finite and non-negative"
        )));
    }
    if u0.values().iter().all(|&v| v == 0.0) {
        return Err(Error::InvalidInitialDatum(
            "the initial datum is identically zero".into(),
        ));
    }
    Ok(u0.map(|v| v.max(floor)))
}

/// Integrates from `u0` to `config.t_end`, recording one trace row per
/// accepted step.
pub fn run(
    u0: &Field,
    grid: &Grid,
    kernel: &Kernel,
    config: &SimConfig,
    observers: &mut [&mut dyn Observer],
) -> Result<(SimState, Trace)> {
    check_model(grid, kernel, config)?;
    if u0.grid() != grid {
        return Err(Error::GridMismatch);
    }
    let u = prepare_initial_datum(u0, config.positivity_floor)?;
    let local = config.local_mode;
    let mu = config.mu;
    let k_one: Vec<f64> = if local {
        vec![1.0; grid.len()]
    } else {
        kernel.row_sums()
    };
    let deficit = |ku: &[f64]| -> Vec<f64> { k_one.iter().zip(ku).map(|(a, b)| a - b).collect() };
    let diss =
        |u: &[f64], ku: &[f64]| -> Dissipation { dissipation_parts(grid, u, &deficit(ku), mu) };

    let mut trace = Trace::new();
    trace.metadata = TraceMetadata {
        scheme: "imex-euler: implicit diffusion, explicit reaction".into(),
        implicit_solver: config.implicit_solver_name(grid).into(),
        local_mode: local,
        mu,
        kernel_family: kernel.family().to_string(),
        kernel_normalization: format!("{:?}", kernel.normalization()).to_lowercase(),
        ..TraceMetadata::default()
    };

    let mut state = SimState::new(u, config);
    let mut ku = interaction(kernel, local, state.u.values());
    let row = TraceRow::measure(
        grid,
        0.0,
        state.u.values(),
        diss(state.u.values(), &ku),
        0.0,
        None,
    );
    trace.push(row)?;
    if config.snapshot_every > 0 {
        trace.snapshots.push(Snapshot {
            step: 0,
            t: 0.0,
            field: state.u.clone(),
        });
    }
    for obs in observers.iter_mut() {
        obs.observe(&state, &row);
    }

    let mut implicit = ImplicitStep::new(grid, config);
    let t_end = config.t_end;
    let slack = 1e-12 * t_end.max(1.0);
    while state.t < t_end - slack {
        let remaining = t_end - state.t;
        let dt_try = state.dt_next.min(remaining);
        let (next, dt_used, halvings) = advance(
            &mut implicit,
            state.t,
            state.u.values(),
            &ku,
            dt_try,
            config,
        )?;
        trace.metadata.rejected_steps += halvings as usize;
        let t_next = if dt_used == remaining {
            t_end
        } else {
            state.t + dt_used
        };
        let ku_next = interaction(kernel, local, &next);

        let u_mid: Vec<f64> = state
            .u
            .values()
            .iter()
            .zip(&next)
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        let ku_mid: Vec<f64> = ku
            .iter()
            .zip(&ku_next)
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        let d_mid = diss(&u_mid, &ku_mid).total;
        let row = TraceRow::measure(
            grid,
            t_next,
            &next,
            diss(&next, &ku_next),
            dt_used,
            Some(d_mid),
        );

        state = SimState {
            t: t_next,
            u: Field::from_parts(grid.clone(), next),
            step: state.step + 1,
            dt_next: (2.0 * dt_used).min(config.dt),
        };
        ku = ku_next;
        trace.push(row)?;
        if config.snapshot_every > 0 && state.step.is_multiple_of(config.snapshot_every) {
            trace.snapshots.push(Snapshot {
                step: state.step,
                t: state.t,
                field: state.u.clone(),
            });
        }
        for obs in observers.iter_mut() {
            obs.observe(&state, &row);
        }
    }
    trace.metadata.accepted_steps = state.step;
    Ok((state, trace))
}
