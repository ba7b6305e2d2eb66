//! Pressure recovery from a velocity history and the boundary check of
//! initial data against the wall data.

use super::Trajectory;
use crate::error::{Error, Result};
use crate::leray::Projector;
use crate::mesh::{
    buoyancy, laplacian_dirichlet, norm_vector, BoundaryTrace, CoupledField, Grid, PhysicalParams,
    ScalarField, VectorField, Wall,
};
use crate::steady::lift_l0;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PressureMethod {
    /// Potential of the time-integrated momentum balance, differentiated in
    /// time.
    Primitive,
    /// The pressure stored by the integrator at each step.
    Poisson,
}

/// Instantaneous pressures and their primitive in time.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PressureSeries {
    pub method: PressureMethod,
    /// Mean-zero pressure per step.
    pub pressure: Vec<ScalarField>,
    /// `P_m` with `grad P_m = u_m - u_0 - dt sum_{k<=m} (nu lap u_k + B theta_k + F_k)`,
    /// so that `P = -int p`.
    pub primitive: Vec<ScalarField>,
    /// `|grad P_m - (u_m - u_0 - ...)|` per step.
    pub residuals: Vec<f64>,
}

impl PressureSeries {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    /// `sqrt(sum_k dt |p_k - q_k|^2)` over steps `1..=M`.
    pub fn l2_time_distance(&self, other: &PressureSeries, grid: &Grid, dt: f64) -> f64 {
        self.pressure
            .iter()
            .zip(&other.pressure)
            .skip(1)
            .map(|(a, b)| {
                let mut d = a.clone();
                d.axpy(-1.0, b);
                dt * crate::mesh::inner_scalar(grid, &d, &d)
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// Recovers the pressure of `traj`.
///
/// Both methods build the primitive from the right-endpoint sums of the
/// momentum balance (the quadrature implicit Euler integrates exactly) and
/// report its defining residual. The primitive method differentiates `-P`
/// by central differences (one-sided at the ends); the Poisson method
/// returns the per-step pressures of the integrator.
pub fn recover_pressure(traj: &Trajectory, method: PressureMethod) -> Result<PressureSeries> {
    let g = &traj.grid;
    let m = traj.steps();
    if method == PressureMethod::Primitive && m < 3 {
        return Err(Error::Method(format!(
            "primitive pressure recovery needs at least 3 steps, got {m}"
        )));
    }
    let projector = Projector::new(g)?;
    let prm = &traj.params;
    let dt = traj.dt;
    let u0 = &traj.states[0].vel;
    let mut acc = VectorField::zeros(g);
    let mut primitive = Vec::with_capacity(m + 1);
    let mut residuals = Vec::with_capacity(m + 1);
    for k in 0..=m {
        if k > 0 {
            let x = &traj.states[k];
            let mut rate = laplacian_dirichlet(g, &x.vel, Some(&traj.traces[k]));
            rate.scale(prm.nu);
            rate.axpy(1.0, &buoyancy(g, prm.beta, &x.temp));
            rate.axpy(1.0, &traj.forcing[k]);
            acc.axpy(dt, &rate);
        }
        let mut r = traj.states[k].vel.clone();
        r.axpy(-1.0, u0);
        r.axpy(-1.0, &acc);
        r.clear_normal_trace();
        let dec = projector.decompose(&r)?;
        residuals.push(norm_vector(g, &dec.solenoidal));
        primitive.push(dec.potential);
    }
    let pressure = match method {
        PressureMethod::Poisson => traj.pressures.clone(),
        PressureMethod::Primitive => {
            let mut out = Vec::with_capacity(m + 1);
            for k in 0..=m {
                let (lo, hi) = if k == 0 {
                    (0, 1)
                } else if k == m {
                    (m - 1, m)
                } else {
                    (k - 1, k + 1)
                };
                let mut p = primitive[lo].clone();
                p.axpy(-1.0, &primitive[hi]);
                p.scale(1.0 / ((hi - lo) as f64 * dt));
                p.remove_mean();
                out.push(p);
            }
            out
        }
    };
    Ok(PressureSeries {
        method,
        pressure,
        primitive,
        residuals,
    })
}

/// Boundary residual of `P[(z0, theta0) - L0(g0, h0)]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityReport {
    /// Tangential wall trace of the projected velocity difference.
    pub velocity: f64,
    /// Wall trace of the temperature difference.
    pub temperature: f64,
    pub total: f64,
}

/// Traces are extrapolated linearly from the first two interior rows: the
/// tangential velocity to the interior wall nodes, the temperature to the
/// face midpoints.
pub fn compatibility_check(
    grid: &Grid,
    params: &PhysicalParams,
    x0: &CoupledField,
    data0: &BoundaryTrace,
) -> Result<CompatibilityReport> {
    grid.check_vector(&x0.vel)?;
    grid.check_scalar(&x0.temp)?;
    let lift = lift_l0(grid, params, data0)?;
    let projector = Projector::new(grid)?;
    let mut d = projector.project(&x0.vel)?;
    d.axpy(-1.0, &projector.project(&lift.w)?);
    let mut tau = x0.temp.clone();
    tau.axpy(-1.0, &lift.temperature);

    let (nx, ny) = (grid.nx, grid.ny);
    let ext = |a: f64, b: f64| 1.5 * a - 0.5 * b;
    let mut vel = 0.0;
    for i in 1..nx {
        vel += grid.hx()
            * (ext(d.u_at(i, 0), d.u_at(i, 1)).powi(2)
                + ext(d.u_at(i, ny - 1), d.u_at(i, ny - 2)).powi(2));
    }
    for j in 1..ny {
        vel += grid.hy()
            * (ext(d.v_at(0, j), d.v_at(1, j)).powi(2)
                + ext(d.v_at(nx - 1, j), d.v_at(nx - 2, j)).powi(2));
    }
    let mut temp = 0.0;
    for i in 0..nx {
        let w = BoundaryTrace::face_length(grid, Wall::Bottom);
        temp += w
            * (ext(tau.at(i, 0), tau.at(i, 1)).powi(2)
                + ext(tau.at(i, ny - 1), tau.at(i, ny - 2)).powi(2));
    }
    for j in 0..ny {
        let w = BoundaryTrace::face_length(grid, Wall::Left);
        temp += w
            * (ext(tau.at(0, j), tau.at(1, j)).powi(2)
                + ext(tau.at(nx - 1, j), tau.at(nx - 2, j)).powi(2));
    }
    Ok(CompatibilityReport {
        velocity: vel.sqrt(),
        temperature: temp.sqrt(),
        total: (vel + temp).sqrt(),
    })
}
