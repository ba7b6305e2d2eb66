//! Time integration: the lifted linear evolution, the linearised and
//! nonlinear homogeneous solvers, the split and monolithic drivers for the
//! full boundary-driven problem, pressure recovery and energy diagnostics.
//!
//! Every solver is implicit Euler in the diffusion and buoyancy with
//! explicit advection, and returns a [`Trajectory`] carrying the states,
//! pressures, wall data and per-step diagnostics.

mod helmholtz;
mod io;
mod lifted;
mod nonlinear;
mod pressure;
mod stepper;

pub use io::{
    read_checkpoint, write_checkpoint, Checkpoint, CheckpointStep, CHECKPOINT_MAGIC,
    CHECKPOINT_VERSION,
};
pub use lifted::{solve_linear_lifted, step_linear_lifted, LiftedStep, LiftedStepper};
pub use nonlinear::{
    solve_full_monolithic, solve_full_split, solve_linearized_instationary,
    solve_nonlinear_homogeneous, LinearizedOutcome, MonolithicOptions, MonolithicVariant,
    SplitOutcome,
};
pub use pressure::{
    compatibility_check, recover_pressure, CompatibilityReport, PressureMethod, PressureSeries,
};
pub use stepper::LinearStepper;

use crate::error::{Error, Result};
use crate::mesh::{
    dirichlet_energy, inner_scalar, inner_vector, neumann_energy, BoundaryTrace, CoupledField,
    Grid, PhysicalParams, ScalarField, VectorField,
};
use crate::steady::relative_divergence;
use serde::{Deserialize, Serialize};

/// Relative divergence allowed in any stored state.
pub const DIVERGENCE_TOL: f64 = 1e-9;
/// Explicit advection bound `max|u| dt / h`.
pub const CFL_LIMIT: f64 = 0.5;
/// Energy growth factor treated as blow-up.
pub const BLOW_UP_FACTOR: f64 = 1e6;

/// Uniform time grid `t_k = k dt`, `k = 0..=steps`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub dt: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, steps: usize) -> Result<Self> {
        let t = Self { dt, steps };
        t.validate()?;
        Ok(t)
    }

    /// Grid with `steps = round(t_end / dt)`.
    pub fn until(t_end: f64, dt: f64) -> Result<Self> {
        if !(t_end >= 0.0 && t_end.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "final time must be nonnegative, got {t_end}"
            )));
        }
        Self::new(dt, (t_end / dt).round() as usize)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "time step must be positive, got {}",
                self.dt
            )));
        }
        Ok(())
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn final_time(&self) -> f64 {
        self.time(self.steps)
    }
}

/// Optional time-dependent sources `f1(t)` (momentum) and `f2(t)` (heat).
#[derive(Clone, Copy, Default)]
pub struct Sources<'a> {
    pub momentum: Option<&'a dyn Fn(f64) -> VectorField>,
    pub heat: Option<&'a dyn Fn(f64) -> ScalarField>,
}

impl std::fmt::Debug for Sources<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Sources")
            .field("momentum", &self.momentum.is_some())
            .field("heat", &self.heat.is_some())
            .finish()
    }
}

impl<'a> Sources<'a> {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn new(
        momentum: &'a dyn Fn(f64) -> VectorField,
        heat: &'a dyn Fn(f64) -> ScalarField,
    ) -> Self {
        Self {
            momentum: Some(momentum),
            heat: Some(heat),
        }
    }

    pub(crate) fn momentum_at(&self, grid: &Grid, t: f64) -> Result<VectorField> {
        match self.momentum {
            Some(f) => {
                let mut v = f(t);
                grid.check_vector(&v)?;
                v.clear_normal_trace();
                Ok(v)
            }
            None => Ok(VectorField::zeros(grid)),
        }
    }

    pub(crate) fn heat_at(&self, grid: &Grid, t: f64) -> Result<ScalarField> {
        match self.heat {
            Some(f) => {
                let s = f(t);
                grid.check_scalar(&s)?;
                Ok(s)
            }
            None => Ok(ScalarField::zeros(grid)),
        }
    }
}

/// Time-dependent wall data.
pub type BoundarySource<'a> = &'a dyn Fn(f64) -> BoundaryTrace;

/// Which integrator produced a trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    LinearLifted,
    LinearizedInstationary,
    NonlinearHomogeneous,
    FullSplit,
    MonolithicProjection,
    MonolithicCoupled,
    /// Exact convolution of the assembled semigroup, sampled at the steps.
    SemigroupDuhamel,
}

impl Scheme {
    /// Whether each step satisfies the implicit Euler momentum identity
    /// exactly (all but the projection scheme, whose splitting error is
    /// part of the method, and the exact-in-time convolution).
    pub fn exact_momentum_identity(self) -> bool {
        !matches!(
            self,
            Scheme::MonolithicProjection | Scheme::SemigroupDuhamel
        )
    }
}

/// One row of the diagnostics CSV.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub step: usize,
    pub t: f64,
    /// `(|u|^2 + |theta|^2) / 2`.
    pub energy: f64,
    /// `|div u| h / |u|`.
    pub div_norm: f64,
    pub grad_y_sq: f64,
    pub grad_tau_sq: f64,
    pub residual: f64,
}

pub const CSV_HEADER: &str = "step,t,E,div_norm,grad_y_sq,grad_tau_sq,residual";

impl StepDiagnostics {
    pub fn measure(
        grid: &Grid,
        step: usize,
        t: f64,
        x: &CoupledField,
        trace: &BoundaryTrace,
        residual: f64,
    ) -> Self {
        Self {
            step,
            t,
            energy: energy_of(grid, x),
            div_norm: relative_divergence(grid, &x.vel),
            grad_y_sq: dirichlet_energy(grid, &x.vel, Some(trace)),
            grad_tau_sq: neumann_energy(grid, &x.temp),
            residual,
        }
    }

    fn csv_row(&self) -> String {
        format!(
            "{},{:e},{:e},{:e},{:e},{:e},{:e}",
            self.step,
            self.t,
            self.energy,
            self.div_norm,
            self.grad_y_sq,
            self.grad_tau_sq,
            self.residual
        )
    }
}

/// Serialises diagnostics with [`CSV_HEADER`]; floats round-trip exactly.
pub fn diagnostics_to_csv(rows: &[StepDiagnostics]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}

pub fn diagnostics_from_csv(text: &str) -> Result<Vec<StepDiagnostics>> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => {
            return Err(Error::Config {
                line: 1,
                msg: format!("expected header `{CSV_HEADER}`"),
            })
        }
    }
    let mut out = Vec::new();
    for (n, line) in lines {
        let bad = |msg: String| Error::Config { line: n + 1, msg };
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != 7 {
            return Err(bad(format!("expected 7 columns, found {}", cells.len())));
        }
        let step = cells[0]
            .parse::<usize>()
            .map_err(|e| bad(format!("step: {e}")))?;
        let mut v = [0.0; 6];
        for (k, c) in cells[1..].iter().enumerate() {
            v[k] = c
                .parse::<f64>()
                .map_err(|e| bad(format!("column {}: {e}", k + 2)))?;
        }
        out.push(StepDiagnostics {
            step,
            t: v[0],
            energy: v[1],
            div_norm: v[2],
            grad_y_sq: v[3],
            grad_tau_sq: v[4],
            residual: v[5],
        });
    }
    Ok(out)
}

/// States, pressures and wall data on a uniform time grid.
///
/// `forcing[k]` is the explicit momentum right-hand side used to reach
/// state `k` (sources minus advection and any lagged terms), so that
/// `(u_k - u_{k-1}) / dt - nu lap(u_k; g_k) - B theta_k + grad p_k = forcing[k]`
/// for every scheme with an exact momentum identity.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trajectory {
    pub grid: Grid,
    pub params: PhysicalParams,
    pub dt: f64,
    pub scheme: Scheme,
    pub times: Vec<f64>,
    pub states: Vec<CoupledField>,
    pub pressures: Vec<ScalarField>,
    pub traces: Vec<BoundaryTrace>,
    pub forcing: Vec<VectorField>,
    pub diagnostics: Vec<StepDiagnostics>,
}

impl Trajectory {
    pub fn start(
        grid: &Grid,
        params: &PhysicalParams,
        dt: f64,
        scheme: Scheme,
        x0: CoupledField,
        trace0: BoundaryTrace,
    ) -> Self {
        let d = StepDiagnostics::measure(grid, 0, 0.0, &x0, &trace0, 0.0);
        Self {
            grid: *grid,
            params: *params,
            dt,
            scheme,
            times: vec![0.0],
            states: vec![x0],
            pressures: vec![ScalarField::zeros(grid)],
            traces: vec![trace0],
            forcing: vec![VectorField::zeros(grid)],
            diagnostics: vec![d],
        }
    }

    pub(crate) fn push(
        &mut self,
        x: CoupledField,
        mut p: ScalarField,
        trace: BoundaryTrace,
        forcing: VectorField,
        residual: f64,
    ) {
        let k = self.states.len();
        let t = k as f64 * self.dt;
        p.remove_mean();
        self.diagnostics.push(StepDiagnostics::measure(
            &self.grid, k, t, &x, &trace, residual,
        ));
        self.times.push(t);
        self.states.push(x);
        self.pressures.push(p);
        self.traces.push(trace);
        self.forcing.push(forcing);
    }

    /// Number of steps taken.
    pub fn steps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn last(&self) -> &CoupledField {
        self.states
            .last()
            .expect("trajectory holds the initial state")
    }

    /// Divergence of every state and uniformity of the time grid.
    pub fn check_invariants(&self) -> Result<()> {
        for d in &self.diagnostics {
            if !(d.div_norm <= DIVERGENCE_TOL) {
                return Err(Error::NotSolenoidal { norm: d.div_norm });
            }
        }
        for (k, t) in self.times.iter().enumerate() {
            if (t - k as f64 * self.dt).abs() > 1e-14 * (1.0 + t.abs()) {
                return Err(Error::Inconsistent(format!(
                    "time {k} is {t}, expected {}",
                    k as f64 * self.dt
                )));
            }
        }
        Ok(())
    }

    pub fn max_div_norm(&self) -> f64 {
        self.diagnostics
            .iter()
            .map(|d| d.div_norm)
            .fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        diagnostics_to_csv(&self.diagnostics)
    }

    /// `sqrt(sum_k dt |x_k - y_k|^2)` over steps `1..=M`, velocity and
    /// temperature together.
    pub fn l2_time_distance(&self, other: &Trajectory) -> Result<f64> {
        if self.states.len() != other.states.len() || self.grid != other.grid {
            return Err(Error::ShapeMismatch(
                "trajectories differ in length or grid".into(),
            ));
        }
        let g = &self.grid;
        let mut s = 0.0;
        for (a, b) in self.states.iter().zip(&other.states).skip(1) {
            let mut d = a.clone();
            d.axpy(-1.0, b);
            s += self.dt * (inner_vector(g, &d.vel, &d.vel) + inner_scalar(g, &d.temp, &d.temp));
        }
        Ok(s.sqrt())
    }

    /// `sqrt(sum_k dt |x_k|^2)` over steps `1..=M`.
    pub fn l2_time_norm(&self) -> f64 {
        let g = &self.grid;
        self.states
            .iter()
            .skip(1)
            .map(|x| {
                self.dt * (inner_vector(g, &x.vel, &x.vel) + inner_scalar(g, &x.temp, &x.temp))
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// Energy series with integrated dissipation and boundedness flags, all
/// computable from the diagnostics rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub energy: Vec<f64>,
    /// `sum_k (t_k - t_{k-1}) |grad u_k|^2`.
    pub velocity_dissipation: f64,
    pub temperature_dissipation: f64,
    pub sup_energy: f64,
    pub finite: bool,
    /// `E_k <= E_{k-1} (1 + 1e-13)` for every step.
    pub nonincreasing: bool,
    /// `sup E <= 1e6 max(E_0, tiny)`.
    pub bounded: bool,
}

impl EnergyReport {
    pub fn from_diagnostics(rows: &[StepDiagnostics]) -> Self {
        let energy: Vec<f64> = rows.iter().map(|r| r.energy).collect();
        let (mut vd, mut td) = (0.0, 0.0);
        for w in rows.windows(2) {
            let dt = w[1].t - w[0].t;
            vd += dt * w[1].grad_y_sq;
            td += dt * w[1].grad_tau_sq;
        }
        let sup_energy = energy.iter().copied().fold(0.0, f64::max);
        let finite = rows.iter().all(|r| {
            [
                r.t,
                r.energy,
                r.div_norm,
                r.grad_y_sq,
                r.grad_tau_sq,
                r.residual,
            ]
            .iter()
            .all(|v| v.is_finite())
        });
        let nonincreasing = energy.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-13));
        let e0 = energy.first().copied().unwrap_or(0.0);
        let bounded = finite && sup_energy <= BLOW_UP_FACTOR * e0.max(f64::MIN_POSITIVE);
        Self {
            energy,
            velocity_dissipation: vd,
            temperature_dissipation: td,
            sup_energy,
            finite,
            nonincreasing,
            bounded: bounded || sup_energy == 0.0,
        }
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        Ok(Self::from_diagnostics(&diagnostics_from_csv(text)?))
    }
}

pub fn energy_report(traj: &Trajectory) -> EnergyReport {
    EnergyReport::from_diagnostics(&traj.diagnostics)
}

/// Rejects `max|u| dt / h > CFL_LIMIT`.
pub(crate) fn cfl_guard(grid: &Grid, carrier: &VectorField, dt: f64) -> Result<()> {
    let speed = carrier.max_abs();
    let cfl = speed * dt / grid.h();
    if cfl > CFL_LIMIT || !cfl.is_finite() {
        let suggested = if speed > 0.0 && speed.is_finite() {
            CFL_LIMIT * grid.h() / speed
        } else {
            0.0
        };
        return Err(Error::Cfl { cfl, suggested });
    }
    Ok(())
}

pub(crate) fn energy_of(grid: &Grid, x: &CoupledField) -> f64 {
    0.5 * (inner_vector(grid, &x.vel, &x.vel) + inner_scalar(grid, &x.temp, &x.temp))
}

/// Energy above `BLOW_UP_FACTOR max(E_0, 1)` counts as divergence.
pub(crate) fn blow_up_guard(step: usize, energy: f64, e0: f64) -> Result<()> {
    if !energy.is_finite() || energy > BLOW_UP_FACTOR * e0.max(1.0) {
        return Err(Error::Method(format!(
            "solution diverged at step {step}: energy {energy:e} exceeds {BLOW_UP_FACTOR:e} times the initial {e0:e}"
        )));
    }
    Ok(())
}

pub(crate) fn check_data_flux(grid: &Grid, trace: &BoundaryTrace) -> Result<()> {
    grid.check_trace(trace)?;
    let flux = trace.net_flux(grid);
    let scale = trace.max_abs().max(1.0) * BoundaryTrace::perimeter(grid);
    if flux.abs() > 1e-12 * scale {
        return Err(Error::Incompatible { flux });
    }
    Ok(())
}
