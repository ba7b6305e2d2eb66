//! IMEX solvers: frozen-coefficient linearisation, the homogeneous
//! nonlinear problem, and the split and monolithic drivers for the full
//! boundary-driven system.

use super::helmholtz::{ScalarHelmholtz, VectorHelmholtz};
use super::lifted::LiftedStepper;
use super::pressure::{compatibility_check, CompatibilityReport};
use super::{
    blow_up_guard, cfl_guard, check_data_flux, energy_of, BoundarySource, LinearStepper, Scheme,
    Sources, TimeGrid, Trajectory,
};
use crate::error::{Error, Result};
use crate::leray::Projector;
use crate::mesh::{
    advect_scalar, advect_vector, buoyancy, dirichlet_energy, divergence, gradient, inner_scalar,
    inner_vector, neumann_energy, norm_scalar, norm_vector, transport_scalar, transport_velocity,
    BoundaryTrace, CoupledField, Grid, LinearizationPoint, PhysicalParams, ScalarField,
    VectorField,
};
use crate::steady::relative_divergence;
use serde::{Deserialize, Serialize};

fn check_homogeneous_start(grid: &Grid, x: &CoupledField) -> Result<()> {
    grid.check_vector(&x.vel)?;
    grid.check_scalar(&x.temp)?;
    let rel = relative_divergence(grid, &x.vel);
    if rel > super::DIVERGENCE_TOL {
        return Err(Error::NotSolenoidal { norm: rel });
    }
    if x.vel.normal_trace_max() > 1e-12 * x.vel.max_abs().max(1.0) {
        return Err(Error::InvalidParameter(
            "initial velocity must have zero normal trace".into(),
        ));
    }
    Ok(())
}

fn check_point(grid: &Grid, pt: &LinearizationPoint) -> Result<()> {
    grid.check_vector(&pt.z)?;
    grid.check_scalar(&pt.theta)?;
    grid.check_trace(&pt.trace)?;
    let norm = divergence(grid, &pt.z).max_abs();
    if norm > 1e-9 * pt.z.max_abs().max(1.0) / grid.h() {
        return Err(Error::NotSolenoidal { norm });
    }
    Ok(())
}

/// Trajectory of the linearised problem with the per-step energy slack.
#[derive(Clone, Debug)]
pub struct LinearizedOutcome {
    pub trajectory: Trajectory,
    /// `E_n + dt (pairings) - E_{n+1} - dt (dissipation + shift)`, which
    /// equals `|x_{n+1} - x_n|^2 / 2` and must be nonnegative.
    pub energy_slack: Vec<f64>,
}

/// Linearisation around the time-dependent state `point_at(t)`: implicit
/// diffusion, buoyancy and shift `params.lambda0`; the transport terms are
/// lagged.
pub fn solve_linearized_instationary(
    grid: &Grid,
    params: &PhysicalParams,
    point_at: &dyn Fn(f64) -> LinearizationPoint,
    sources: Sources<'_>,
    x0: &CoupledField,
    time: TimeGrid,
) -> Result<LinearizedOutcome> {
    time.validate()?;
    check_homogeneous_start(grid, x0)?;
    let l0 = params.lambda0;
    let stepper = LinearStepper::new(grid, params, time.dt, l0)?;
    let zero = BoundaryTrace::zeros(grid);
    let mut traj = Trajectory::start(
        grid,
        params,
        time.dt,
        Scheme::LinearizedInstationary,
        x0.clone(),
        zero.clone(),
    );
    let mut slack = Vec::with_capacity(time.steps);
    let dt = time.dt;
    for k in 1..=time.steps {
        let x = traj.last().clone();
        let pt = point_at(time.time(k - 1));
        check_point(grid, &pt)?;
        cfl_guard(grid, &pt.z, dt)?;
        let mut f = sources.momentum_at(grid, time.time(k))?;
        f.axpy(-1.0, &advect_vector(grid, &pt.z, &x.vel, None));
        f.axpy(
            -1.0,
            &transport_velocity(grid, &x.vel, &pt.z, Some(&pt.trace)),
        );
        f.clear_normal_trace();
        let mut h = sources.heat_at(grid, time.time(k))?;
        h.axpy(-1.0, &advect_scalar(grid, &pt.z, &x.temp, None));
        h.axpy(
            -1.0,
            &transport_scalar(grid, &x.vel, &pt.theta, Some(&pt.trace)),
        );
        let sol = stepper.step(&x, Some(&f), Some(&h), &zero)?;
        let next = CoupledField {
            vel: sol.u,
            temp: sol.phi,
        };

        let pairing = inner_vector(grid, &f, &next.vel)
            + inner_scalar(grid, &h, &next.temp)
            + inner_vector(grid, &buoyancy(grid, params.beta, &next.temp), &next.vel);
        let loss = params.nu * dirichlet_energy(grid, &next.vel, None)
            + params.mu * neumann_energy(grid, &next.temp)
            + l0 * 2.0 * energy_of(grid, &next);
        slack.push(energy_of(grid, &x) + dt * pairing - energy_of(grid, &next) - dt * loss);

        let mut forcing = f;
        forcing.axpy(-l0, &next.vel);
        forcing.clear_normal_trace();
        traj.push(next, sol.p, zero.clone(), forcing, sol.residual);
    }
    Ok(LinearizedOutcome {
        trajectory: traj,
        energy_slack: slack,
    })
}

/// Homogeneous nonlinear problem: explicit skew-symmetric advection,
/// implicit diffusion and buoyancy, zero wall data, no shift.
pub fn solve_nonlinear_homogeneous(
    grid: &Grid,
    params: &PhysicalParams,
    sources: Sources<'_>,
    x0: &CoupledField,
    time: TimeGrid,
) -> Result<Trajectory> {
    time.validate()?;
    check_homogeneous_start(grid, x0)?;
    let stepper = LinearStepper::new(grid, params, time.dt, 0.0)?;
    let projector = Projector::new(grid)?;
    let zero = BoundaryTrace::zeros(grid);
    let mut traj = Trajectory::start(
        grid,
        params,
        time.dt,
        Scheme::NonlinearHomogeneous,
        x0.clone(),
        zero.clone(),
    );
    let e0 = energy_of(grid, x0);
    for k in 1..=time.steps {
        let x = traj.last().clone();
        cfl_guard(grid, &x.vel, time.dt)?;
        let mut f = sources.momentum_at(grid, time.time(k))?;
        f.axpy(-1.0, &advect_vector(grid, &x.vel, &x.vel, None));
        f.clear_normal_trace();
        let mut h = sources.heat_at(grid, time.time(k))?;
        h.axpy(-1.0, &advect_scalar(grid, &x.vel, &x.temp, None));
        let sol = stepper.step(&x, Some(&f), Some(&h), &zero)?;
        let next = CoupledField {
            vel: projector.project(&sol.u)?,
            temp: sol.phi,
        };
        blow_up_guard(k, energy_of(grid, &next), e0)?;
        traj.push(next, sol.p, zero.clone(), f, sol.residual);
    }
    Ok(traj)
}

/// Explicit advection of the full state `z = u + y`, `theta = phi + tau`,
/// written as the sum of its lifted, cross and homogeneous pieces. `u`
/// carries the wall data `g` (normal entries and tangential ghosts), `phi`
/// the heat flux; `y` and `tau` have zero data.
fn split_advection(
    grid: &Grid,
    lifted: &CoupledField,
    hom: &CoupledField,
    data: &BoundaryTrace,
) -> (VectorField, ScalarField, [f64; 2]) {
    let (u, phi) = (&lifted.vel, &lifted.temp);
    let (y, tau) = (&hom.vel, &hom.temp);
    let uu = advect_vector(grid, u, u, Some(data));
    let uphi = advect_scalar(grid, u, phi, Some(data));
    let logged = [norm_vector(grid, &uu), norm_scalar(grid, &uphi)];
    let mut n = uu;
    n.axpy(1.0, &advect_vector(grid, u, y, None));
    n.axpy(1.0, &advect_vector(grid, y, u, Some(data)));
    n.axpy(1.0, &advect_vector(grid, y, y, None));
    n.clear_normal_trace();
    let mut t = uphi;
    t.axpy(1.0, &advect_scalar(grid, u, tau, None));
    t.axpy(1.0, &advect_scalar(grid, y, phi, Some(data)));
    t.axpy(1.0, &advect_scalar(grid, y, tau, None));
    (n, t, logged)
}

/// The full trajectory of a split run together with its two parts.
#[derive(Clone, Debug)]
pub struct SplitOutcome {
    /// `(z, theta) = (u + y, phi + tau)`.
    pub total: Trajectory,
    /// `(u, phi)`: the lifted linear evolution.
    pub lifted: Trajectory,
    /// `(y, tau)`: the homogeneous part with cross terms.
    pub homogeneous: Trajectory,
    /// `|(u.grad)u|` and `|(u.grad)phi|` per step (the forcing generated by
    /// the lifted part alone).
    pub lifted_forcing: Vec<[f64; 2]>,
    /// Boundary residual of the initial data; reported, not repaired.
    pub compatibility: CompatibilityReport,
}

/// Initial state shared by the split and monolithic drivers: the projected
/// initial data plus the harmonic extension of `g(0)`.
fn admissible_start(
    projector: &Projector,
    x0: &CoupledField,
    data0: &BoundaryTrace,
) -> Result<CoupledField> {
    let mut x = projector.project_coupled(x0)?;
    x.vel.axpy(1.0, &projector.harmonic_extension(data0)?);
    Ok(x)
}

/// Splitting `z = u + y`: `u` from the unshifted lifted evolution, `y` from
/// the homogeneous problem carrying every advection term that involves the
/// lifted part. `y(0) = P(z0, theta0) - P L0(g(0), h(0))`.
pub fn solve_full_split(
    grid: &Grid,
    params: &PhysicalParams,
    data: BoundarySource<'_>,
    x0: &CoupledField,
    sources: Sources<'_>,
    time: TimeGrid,
    advection: bool,
) -> Result<SplitOutcome> {
    time.validate()?;
    grid.check_vector(&x0.vel)?;
    grid.check_scalar(&x0.temp)?;
    let prm = params.with_lambda0(0.0);
    let dt = time.dt;
    let lifted_st = LiftedStepper::new(grid, &prm, dt)?;
    let stepper = LinearStepper::new(grid, &prm, dt, 0.0)?;
    let projector = lifted_st.projector();
    let zero = BoundaryTrace::zeros(grid);

    let mut now = data(0.0);
    check_data_flux(grid, &now)?;
    let compatibility = compatibility_check(grid, &prm, x0, &now)?;
    let parts0 = lifted_st.lift(&now)?;
    let u0 = {
        let mut v = parts0.projected.vel.clone();
        v.axpy(1.0, &parts0.complement);
        CoupledField {
            vel: v,
            temp: parts0.projected.temp.clone(),
        }
    };
    let mut y0 = projector.project_coupled(x0)?;
    y0.axpy(-1.0, &parts0.projected);

    let mut total0 = u0.clone();
    total0.axpy(1.0, &y0);
    let mut lifted = Trajectory::start(grid, &prm, dt, Scheme::LinearLifted, u0, now.clone());
    let mut hom = Trajectory::start(
        grid,
        &prm,
        dt,
        Scheme::NonlinearHomogeneous,
        y0,
        zero.clone(),
    );
    let mut total = Trajectory::start(grid, &prm, dt, Scheme::FullSplit, total0, now.clone());
    let mut logged = Vec::with_capacity(time.steps);
    let e0 = energy_of(grid, total.last());

    for k in 1..=time.steps {
        let next = data(time.time(k));
        let (u, y) = (lifted.last().clone(), hom.last().clone());
        let mut f = sources.momentum_at(grid, time.time(k))?;
        let mut h = sources.heat_at(grid, time.time(k))?;
        if advection {
            let mut carrier = u.vel.clone();
            carrier.axpy(1.0, &y.vel);
            cfl_guard(grid, &carrier, dt)?;
            let (n, t, norms) = split_advection(grid, &u, &y, &now);
            f.axpy(-1.0, &n);
            h.axpy(-1.0, &t);
            logged.push(norms);
        } else {
            logged.push([0.0, 0.0]);
        }
        f.clear_normal_trace();

        let ls = lifted_st.step(&u, &now, &next)?;
        let sol = stepper.step(&y, Some(&f), Some(&h), &zero)?;
        let y_next = CoupledField {
            vel: projector.project(&sol.u)?,
            temp: sol.phi,
        };

        let mut z = ls.state.clone();
        z.axpy(1.0, &y_next);
        let mut p = ls.pressure.clone();
        p.axpy(1.0, &sol.p);
        let mut forcing = f.clone();
        forcing.axpy(1.0, &ls.forcing);
        blow_up_guard(k, energy_of(grid, &z), e0)?;

        let residual = ls.residual.max(sol.residual);
        total.push(z, p, next.clone(), forcing, residual);
        lifted.push(ls.state, ls.pressure, next.clone(), ls.forcing, ls.residual);
        hom.push(y_next, sol.p, zero.clone(), f, sol.residual);
        now = next;
    }
    Ok(SplitOutcome {
        total,
        lifted,
        homogeneous: hom,
        lifted_forcing: logged,
        compatibility,
    })
}

/// Time discretisation of the monolithic driver.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MonolithicVariant {
    /// Incremental pressure projection: temperature solve, velocity
    /// predictor with the lagged pressure, Neumann correction.
    #[default]
    Projection,
    /// One coupled saddle-point solve per step.
    Coupled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonolithicOptions {
    pub variant: MonolithicVariant,
    pub advection: bool,
}

impl Default for MonolithicOptions {
    fn default() -> Self {
        Self {
            variant: MonolithicVariant::Projection,
            advection: true,
        }
    }
}

/// Direct discretisation of the full problem with wall data.
pub fn solve_full_monolithic(
    grid: &Grid,
    params: &PhysicalParams,
    data: BoundarySource<'_>,
    x0: &CoupledField,
    sources: Sources<'_>,
    time: TimeGrid,
    opts: MonolithicOptions,
) -> Result<Trajectory> {
    time.validate()?;
    grid.check_vector(&x0.vel)?;
    grid.check_scalar(&x0.temp)?;
    let prm = params.with_lambda0(0.0);
    let dt = time.dt;
    let projector = Projector::new(grid)?;
    let mut now = data(0.0);
    check_data_flux(grid, &now)?;
    let start = admissible_start(&projector, x0, &now)?;
    let e0 = energy_of(grid, &start);
    let scheme = match opts.variant {
        MonolithicVariant::Projection => Scheme::MonolithicProjection,
        MonolithicVariant::Coupled => Scheme::MonolithicCoupled,
    };
    let mut traj = Trajectory::start(grid, &prm, dt, scheme, start, now.clone());

    enum Solvers {
        Projection(VectorHelmholtz, ScalarHelmholtz),
        Coupled(LinearStepper),
    }
    let solvers = match opts.variant {
        MonolithicVariant::Projection => Solvers::Projection(
            VectorHelmholtz::new(grid, 1.0 / dt, prm.nu)?,
            ScalarHelmholtz::new(grid, 1.0 / dt, prm.mu)?,
        ),
        MonolithicVariant::Coupled => Solvers::Coupled(LinearStepper::new(grid, &prm, dt, 0.0)?),
    };

    for k in 1..=time.steps {
        let next = data(time.time(k));
        check_data_flux(grid, &next)?;
        let x = traj.last().clone();
        let mut f = sources.momentum_at(grid, time.time(k))?;
        let mut h = sources.heat_at(grid, time.time(k))?;
        if opts.advection {
            cfl_guard(grid, &x.vel, dt)?;
            f.axpy(-1.0, &advect_vector(grid, &x.vel, &x.vel, Some(&now)));
            h.axpy(-1.0, &advect_scalar(grid, &x.vel, &x.temp, Some(&now)));
        }
        f.clear_normal_trace();

        let (state, p, residual) = match &solvers {
            Solvers::Coupled(st) => {
                let sol = st.step(&x, Some(&f), Some(&h), &next)?;
                (
                    CoupledField {
                        vel: sol.u,
                        temp: sol.phi,
                    },
                    sol.p,
                    sol.residual,
                )
            }
            Solvers::Projection(vh, sh) => {
                let p_prev = traj
                    .pressures
                    .last()
                    .expect("pressure series is never empty");
                let mut rt = x.temp.scaled(1.0 / dt);
                rt.axpy(1.0, &h);
                let theta = sh.solve(&rt, &next);
                let mut rv = x.vel.scaled(1.0 / dt);
                rv.axpy(1.0, &f);
                rv.axpy(1.0, &buoyancy(grid, prm.beta, &theta));
                rv.axpy(-1.0, &gradient(grid, p_prev));
                rv.clear_normal_trace();
                let predicted = vh.solve(&rv, &next);
                let (q, defect) = projector
                    .neumann()
                    .solve_homogeneous(&divergence(grid, &predicted));
                let mut vel = predicted;
                vel.axpy(-1.0, &gradient(grid, &q));
                let mut p = p_prev.clone();
                p.axpy(1.0 / dt, &q);
                (CoupledField { vel, temp: theta }, p, defect.abs())
            }
        };
        blow_up_guard(k, energy_of(grid, &state), e0)?;
        traj.push(state, p, next.clone(), f, residual);
        now = next;
    }
    Ok(traj)
}
