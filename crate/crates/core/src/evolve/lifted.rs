//! Linear evolution driven by wall data, split into a projected part that
//! evolves under the shifted Stokes-heat generator and a gradient part that
//! follows the data quasi-statically.

use super::{check_data_flux, BoundarySource, LinearStepper, Scheme, TimeGrid, Trajectory};
use crate::error::{Error, Result};
use crate::leray::Projector;
use crate::mesh::{
    laplacian_neumann, BoundaryTrace, CoupledField, Grid, PhysicalParams, ScalarField, VectorField,
};
use crate::steady::{lift_l0, BlockOperator, LinearizedOperator, Residuals};

/// Projected lift `(P w, psi)`, its gradient complement and the pieces
/// needed to reconstruct the pressure.
#[derive(Clone, Debug)]
pub struct LiftParts {
    pub projected: CoupledField,
    /// Harmonic extension of the wall data: `w - P w`.
    pub complement: VectorField,
    /// Potential of `complement`.
    pub potential: ScalarField,
    /// Pressure of the lift.
    pub pressure: ScalarField,
    /// Heat-flux mean removed by the lift (restored as a source).
    pub removed_heat_flux_mean: f64,
}

/// Result of one lifted step.
#[derive(Clone, Debug)]
pub struct LiftedStep {
    /// `projected + (0, complement)`.
    pub state: CoupledField,
    pub projected: CoupledField,
    pub complement: VectorField,
    /// Pressure of the full velocity (mean zero).
    pub pressure: ScalarField,
    /// Momentum right-hand side of the full implicit Euler identity: the
    /// shift term `-lambda0 (P u - P w)`.
    pub forcing: VectorField,
    pub residual: f64,
}

/// Cached factorisations for the lifted evolution with shift
/// `params.lambda0`.
pub struct LiftedStepper {
    grid: Grid,
    params: PhysicalParams,
    dt: f64,
    stepper: LinearStepper,
    projector: Projector,
    shifted: LinearizedOperator,
}

impl std::fmt::Debug for LiftedStepper {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LiftedStepper")
            .field("dt", &self.dt)
            .field("lambda0", &self.params.lambda0)
            .finish()
    }
}

impl LiftedStepper {
    pub fn new(grid: &Grid, params: &PhysicalParams, dt: f64) -> Result<Self> {
        let stepper = LinearStepper::new(grid, params, dt, params.lambda0)?;
        let shifted = LinearizedOperator {
            grid: *grid,
            params: *params,
            mass: params.lambda0,
            point: None,
            temperature: true,
            buoyancy: true,
            coupling: false,
        };
        Ok(Self {
            grid: *grid,
            params: *params,
            dt,
            stepper,
            projector: Projector::new(grid)?,
            shifted,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn projector(&self) -> &Projector {
        &self.projector
    }

    pub fn lift(&self, data: &BoundaryTrace) -> Result<LiftParts> {
        check_data_flux(&self.grid, data)?;
        let l = lift_l0(&self.grid, &self.params, data)?;
        let (potential, complement) = self.projector.harmonic_potential(data)?;
        let mut b = l.w.clone();
        b.axpy(-1.0, &complement);
        b.clear_normal_trace();
        Ok(LiftParts {
            projected: CoupledField {
                vel: b,
                temp: l.temperature,
            },
            complement,
            potential,
            pressure: l.pi,
            removed_heat_flux_mean: l.removed_heat_flux_mean,
        })
    }

    /// The lift itself, `L0(g, h)`: the natural initial state.
    pub fn lifted_state(&self, data: &BoundaryTrace) -> Result<CoupledField> {
        let parts = self.lift(data)?;
        let mut vel = parts.projected.vel;
        vel.axpy(1.0, &parts.complement);
        Ok(CoupledField {
            vel,
            temp: parts.projected.temp,
        })
    }

    /// `(P u, phi)`.
    pub fn projected_part(&self, x: &CoupledField) -> Result<CoupledField> {
        self.projector.project_coupled(x)
    }

    /// Advances `x` (at data `now`) to the data `next`.
    pub fn step(
        &self,
        x: &CoupledField,
        now: &BoundaryTrace,
        next: &BoundaryTrace,
    ) -> Result<LiftedStep> {
        let g = &self.grid;
        g.check_vector(&x.vel)?;
        g.check_scalar(&x.temp)?;
        let lift = self.lift(next)?;
        let (q_now, _) = self.projector.harmonic_potential(now)?;
        let px = self.projected_part(x)?;

        // (1/dt + l0 - A) y = P x / dt + (l0 - A) b, with A acting on zero
        // wall data; the heat-flux mean dropped by the lift enters as a
        // boundary source
        let zero = BoundaryTrace::zeros(g);
        let b = &lift.projected;
        let shifted_b = self
            .shifted
            .eval(&b.vel, &ScalarField::zeros(g), &b.temp, &zero);
        let mut src = Residuals::zeros(g);
        src.momentum = px.vel.scaled(1.0 / self.dt);
        src.momentum.axpy(1.0, &shifted_b.momentum);
        src.momentum.clear_normal_trace();
        src.temperature = px.temp.scaled(1.0 / self.dt);
        src.temperature.axpy(1.0, &shifted_b.temperature);
        if lift.removed_heat_flux_mean != 0.0 {
            let mut mean = zero.clone();
            for w in mean.flux.iter_mut() {
                w.iter_mut().for_each(|v| *v = lift.removed_heat_flux_mean);
            }
            src.temperature.axpy(
                self.params.mu,
                &laplacian_neumann(g, &ScalarField::zeros(g), Some(&mean)),
            );
        }
        let sol = self.stepper.system().solve(&src, &zero)?;
        if !sol.residual.is_finite() {
            return Err(Error::Singular(
                "lifted step produced a non-finite solution".into(),
            ));
        }

        let projected = CoupledField {
            vel: sol.u,
            temp: sol.phi,
        };
        let mut vel = projected.vel.clone();
        vel.axpy(1.0, &lift.complement);

        // full pressure: step + lift + time derivative of the harmonic potential
        let mut pressure = sol.p;
        pressure.axpy(1.0, &lift.pressure);
        pressure.axpy(1.0 / self.dt, &lift.potential);
        pressure.axpy(-1.0 / self.dt, &q_now);
        pressure.remove_mean();

        let mut forcing = projected.vel.clone();
        forcing.axpy(-1.0, &b.vel);
        forcing.scale(-self.params.lambda0);
        forcing.clear_normal_trace();

        Ok(LiftedStep {
            state: CoupledField {
                vel,
                temp: projected.temp.clone(),
            },
            projected,
            complement: lift.complement,
            pressure,
            forcing,
            residual: sol.residual,
        })
    }
}

/// One lifted step with freshly built factorisations.
pub fn step_linear_lifted(
    grid: &Grid,
    params: &PhysicalParams,
    x: &CoupledField,
    now: &BoundaryTrace,
    next: &BoundaryTrace,
    dt: f64,
) -> Result<LiftedStep> {
    LiftedStepper::new(grid, params, dt)?.step(x, now, next)
}

/// Lifted evolution on `time`, starting from `x0` or, when absent, from the
/// lift of the initial data.
pub fn solve_linear_lifted(
    grid: &Grid,
    params: &PhysicalParams,
    data: BoundarySource<'_>,
    x0: Option<&CoupledField>,
    time: TimeGrid,
) -> Result<Trajectory> {
    time.validate()?;
    let st = LiftedStepper::new(grid, params, time.dt)?;
    let mut now = data(0.0);
    let start = match x0 {
        Some(x) => {
            // keep the projected part and attach the harmonic extension of the data
            let mut x = st.projected_part(x)?;
            x.vel.axpy(1.0, &st.projector.harmonic_extension(&now)?);
            x
        }
        None => st.lifted_state(&now)?,
    };
    let mut traj = Trajectory::start(
        grid,
        params,
        time.dt,
        Scheme::LinearLifted,
        start,
        now.clone(),
    );
    for k in 1..=time.steps {
        let next = data(time.time(k));
        let s = st.step(traj.last(), &now, &next)?;
        traj.push(s.state, s.pressure, next.clone(), s.forcing, s.residual);
        now = next;
    }
    Ok(traj)
}
