//! Implicit Euler step of the linear Stokes-heat system around rest.

use crate::error::Result;
use crate::mesh::{BoundaryTrace, CoupledField, Grid, PhysicalParams, ScalarField, VectorField};
use crate::steady::{LinearizedOperator, Residuals, SaddleSolution, SaddleSystem};

/// One factorisation of `(1/dt + shift) x - diffusion + grad p - beta phi`,
/// reused for every step.
pub struct LinearStepper {
    grid: Grid,
    dt: f64,
    sys: SaddleSystem<LinearizedOperator>,
}

impl std::fmt::Debug for LinearStepper {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LinearStepper")
            .field("dt", &self.dt)
            .finish()
    }
}

impl LinearStepper {
    /// `shift` adds a zeroth-order term to both equations (zero for the
    /// plain evolution).
    pub fn new(grid: &Grid, params: &PhysicalParams, dt: f64, shift: f64) -> Result<Self> {
        params.validate()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(crate::Error::InvalidParameter(format!(
                "time step must be positive, got {dt}"
            )));
        }
        let op = LinearizedOperator {
            grid: *grid,
            params: *params,
            mass: 1.0 / dt + shift,
            point: None,
            temperature: true,
            buoyancy: true,
            coupling: false,
        };
        Ok(Self {
            grid: *grid,
            dt,
            sys: SaddleSystem::new(op)?,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn system(&self) -> &SaddleSystem<LinearizedOperator> {
        &self.sys
    }

    /// Advances `prev` by one step with sources `(f1, f2)` and wall data
    /// `trace`, all taken at the new time level.
    pub fn step(
        &self,
        prev: &CoupledField,
        f1: Option<&VectorField>,
        f2: Option<&ScalarField>,
        trace: &BoundaryTrace,
    ) -> Result<SaddleSolution> {
        let mut src = Residuals::zeros(&self.grid);
        src.momentum = prev.vel.scaled(1.0 / self.dt);
        src.temperature = prev.temp.scaled(1.0 / self.dt);
        if let Some(f) = f1 {
            src.momentum.axpy(1.0, f);
        }
        if let Some(f) = f2 {
            src.temperature.axpy(1.0, f);
        }
        src.momentum.clear_normal_trace();
        self.sys.solve(&src, trace)
    }
}
