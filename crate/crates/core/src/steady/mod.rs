//! Steady linearised Boussinesq problems: the weak form, its coercivity
//! shift, homogeneous and boundary-driven solves, and the lifting operators.

mod embedding;
pub mod system;

pub use embedding::{estimate_embedding_constants, EmbeddingConstants, DEFAULT_RESTARTS};
pub use system::{
    AdjointOperator, BlockOperator, Layout, LinearizedOperator, Residuals, SaddleSolution,
    SaddleSystem,
};

use crate::error::{Error, Result};
use crate::leray::NeumannSolver;
use crate::mesh::{
    advect_scalar, advect_vector, buoyancy, dirichlet_form, divergence, h1_norm_scalar,
    h1_norm_vector, inner_scalar, inner_vector, neumann_form, norm_vector, transport_scalar,
    transport_velocity, BoundaryTrace, Grid, LinearizationPoint, PhysicalParams, ScalarField,
    VectorField,
};
use crate::rng::Seeded;
use serde::{Deserialize, Serialize};

/// Seed used when embedding constants are estimated implicitly.
pub const EMBEDDING_SEED: u64 = 0x5eed;

/// The coupled bilinear form evaluated on zero-trace velocities `(u, phi)`
/// and test functions `(test_u, test_phi)`.
pub fn bilinear_form_a(
    grid: &Grid,
    pt: &LinearizationPoint,
    params: &PhysicalParams,
    (u, phi): (&VectorField, &ScalarField),
    (test_u, test_phi): (&VectorField, &ScalarField),
) -> Result<f64> {
    for w in [u, test_u, &pt.z] {
        grid.check_vector(w)?;
    }
    for s in [phi, test_phi, &pt.theta] {
        grid.check_scalar(s)?;
    }
    let l0 = params.lambda0;
    let mut a = l0 * inner_vector(grid, u, test_u)
        + params.nu * dirichlet_form(grid, u, None, test_u, None);
    a += inner_vector(
        grid,
        &transport_velocity(grid, u, &pt.z, Some(&pt.trace)),
        test_u,
    );
    a += inner_vector(grid, &advect_vector(grid, &pt.z, u, None), test_u);
    a -= inner_vector(grid, &buoyancy(grid, params.beta, phi), test_u);
    a += l0 * inner_scalar(grid, phi, test_phi) + params.mu * neumann_form(grid, phi, test_phi);
    a += inner_scalar(grid, &advect_scalar(grid, &pt.z, phi, None), test_phi);
    a += inner_scalar(
        grid,
        &transport_scalar(grid, u, &pt.theta, Some(&pt.trace)),
        test_phi,
    );
    Ok(a)
}

/// Shift from the explicit coercivity condition with constants `2C`, `2C1`
/// (each at least one).
pub fn lambda0_from_constants(
    grid: &Grid,
    pt: &LinearizationPoint,
    beta: [f64; 2],
    k: &EmbeddingConstants,
) -> f64 {
    let c = (2.0 * k.c).max(1.0);
    let c1 = (2.0 * k.c1).max(1.0);
    let factor = 7f64.powi(7) / 1024.0;
    let zn = h1_norm_vector(grid, &pt.z, Some(&pt.trace));
    let tn = h1_norm_scalar(grid, &pt.theta);
    let b = beta[0].hypot(beta[1]) / 2.0;
    let vel = 1.0 + factor * c.powi(8) * zn.powi(8) + b;
    let temp = 1.0 + factor * c1.powi(8) * tn.powi(16) + b;
    vel.max(temp)
}

/// Shift with embedding constants estimated on `grid`. A zero state skips
/// the estimation (the constants drop out).
pub fn lambda0_estimate(grid: &Grid, pt: &LinearizationPoint, beta: [f64; 2]) -> f64 {
    let k = if pt.z.max_abs() == 0.0 && pt.theta.max_abs() == 0.0 {
        EmbeddingConstants { c: 0.5, c1: 0.5 }
    } else {
        estimate_embedding_constants(grid, DEFAULT_RESTARTS, EMBEDDING_SEED)
    };
    lambda0_from_constants(grid, pt, beta, &k)
}

/// Outcome of a random coercivity experiment.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoercivityReport {
    pub lambda0: f64,
    pub trials: usize,
    /// Smallest `a(x, x) / (|x|_H1^2 / 2)`; `+inf` when no trial ran.
    pub min_ratio: f64,
    /// Constants after the safety factor.
    pub embedding_constants: EmbeddingConstants,
    /// `(trial, ratio)` for every ratio below one.
    pub violations: Vec<(usize, f64)>,
}

/// Samples random divergence-free zero-trace velocities and temperatures
/// normalised in H1 and records the coercivity ratio at `params.lambda0`.
pub fn coercivity_probe(
    grid: &Grid,
    pt: &LinearizationPoint,
    params: &PhysicalParams,
    trials: usize,
    seed: u64,
) -> Result<CoercivityReport> {
    params.validate()?;
    let k = estimate_embedding_constants(
        grid,
        if trials == 0 { 0 } else { DEFAULT_RESTARTS },
        EMBEDDING_SEED,
    );
    let embedding_constants = EmbeddingConstants {
        c: (2.0 * k.c).max(1.0),
        c1: (2.0 * k.c1).max(1.0),
    };
    let proj = crate::leray::Projector::new(grid)?;
    let mut rng = Seeded::new(seed);
    let mut min_ratio = f64::INFINITY;
    let mut violations = Vec::new();
    for t in 0..trials {
        let (mut u, phi) = if t % 2 == 0 {
            (rng.vector_noise(grid), rng.scalar_noise(grid))
        } else {
            (rng.smooth_vector(grid, 4), rng.smooth_scalar(grid, 4))
        };
        u.clear_normal_trace();
        let mut u = proj.project(&u)?;
        let mut phi = phi;
        let nu = h1_norm_vector(grid, &u, None);
        let nt = h1_norm_scalar(grid, &phi);
        let mix = rng.uniform();
        u.scale(mix / nu.max(f64::MIN_POSITIVE));
        phi.scale((1.0 - mix * mix).sqrt() / nt.max(f64::MIN_POSITIVE));
        let norm2 = h1_norm_vector(grid, &u, None).powi(2) + h1_norm_scalar(grid, &phi).powi(2);
        let a = bilinear_form_a(grid, pt, params, (&u, &phi), (&u, &phi))?;
        let ratio = a / (0.5 * norm2);
        min_ratio = min_ratio.min(ratio);
        if ratio < 1.0 {
            violations.push((t, ratio));
        }
    }
    Ok(CoercivityReport {
        lambda0: params.lambda0,
        trials,
        min_ratio,
        embedding_constants,
        violations,
    })
}

/// Steady solution with diagnostics.
#[derive(Clone, Debug)]
pub struct SteadySolution {
    pub u: VectorField,
    pub p: ScalarField,
    pub phi: ScalarField,
    /// Relative algebraic residual.
    pub residual: f64,
    /// Mean heat flux removed before a pure-Neumann temperature solve.
    pub removed_heat_flux_mean: f64,
    /// Difference between the direct and split computations, when both ran.
    pub split_discrepancy: Option<f64>,
}

fn sources(grid: &Grid, f1: Option<&VectorField>, f2: Option<&ScalarField>) -> Result<Residuals> {
    let mut r = Residuals::zeros(grid);
    if let Some(f) = f1 {
        grid.check_vector(f)?;
        r.momentum = f.clone();
        r.momentum.clear_normal_trace();
    }
    if let Some(f) = f2 {
        grid.check_scalar(f)?;
        r.temperature = f.clone();
    }
    Ok(r)
}

fn check_point(grid: &Grid, pt: &LinearizationPoint, params: &PhysicalParams) -> Result<()> {
    params.validate()?;
    grid.check_vector(&pt.z)?;
    grid.check_scalar(&pt.theta)?;
    grid.check_trace(&pt.trace)
}

const RESIDUAL_TOL: f64 = 1e-10;

fn checked(sol: SaddleSolution) -> Result<SaddleSolution> {
    if !(sol.residual <= RESIDUAL_TOL) {
        return Err(Error::Singular(format!(
            "relative residual {:e} after refinement",
            sol.residual
        )));
    }
    Ok(sol)
}

/// Homogeneous-boundary steady solve with shift `params.lambda0`.
pub fn solve_steady_homogeneous(
    grid: &Grid,
    pt: &LinearizationPoint,
    params: &PhysicalParams,
    f1: &VectorField,
    f2: &ScalarField,
) -> Result<SteadySolution> {
    check_point(grid, pt, params)?;
    let sys = SaddleSystem::new(LinearizedOperator::steady(grid, params, pt))?;
    let sol = checked(sys.solve(
        &sources(grid, Some(f1), Some(f2))?,
        &BoundaryTrace::zeros(grid),
    )?)?;
    Ok(SteadySolution {
        u: sol.u,
        p: sol.p,
        phi: sol.phi,
        residual: sol.residual,
        removed_heat_flux_mean: 0.0,
        split_discrepancy: None,
    })
}

/// Dirichlet operator: the shifted linearised Stokes solution `(w, pi)` with
/// `w = g` on the walls.
pub fn dirichlet_operator_dz(
    grid: &Grid,
    pt: &LinearizationPoint,
    params: &PhysicalParams,
    g: &BoundaryTrace,
) -> Result<(VectorField, ScalarField)> {
    check_point(grid, pt, params)?;
    let sys = SaddleSystem::new(LinearizedOperator::steady(grid, params, pt).velocity_only())?;
    let sol = checked(sys.solve(&Residuals::zeros(grid), &g.velocity_part())?)?;
    Ok((sol.u, sol.p))
}

/// Lifting of boundary data into the interior.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LiftResult {
    pub w: VectorField,
    /// Mean-zero pressure.
    pub pi: ScalarField,
    /// Temperature part of the lift.
    pub temperature: ScalarField,
    pub removed_heat_flux_mean: f64,
    /// Shift used by the lift (zero for the unshifted lift).
    pub lambda0: f64,
}

/// Unshifted lift: harmonic mean-zero temperature with the (mean-removed)
/// heat flux, then Stokes driven by its buoyancy with wall velocity `g`.
pub fn lift_l0(grid: &Grid, params: &PhysicalParams, data: &BoundaryTrace) -> Result<LiftResult> {
    params.validate()?;
    grid.check_trace(data)?;
    let mut tr = data.clone();
    let removed = tr.remove_heat_flux_mean(grid);
    let psi = NeumannSolver::new(grid)?.solve(&ScalarField::zeros(grid), &tr)?;
    let op = LinearizedOperator {
        grid: *grid,
        params: *params,
        mass: 0.0,
        point: None,
        temperature: false,
        buoyancy: false,
        coupling: false,
    };
    let sys = SaddleSystem::new(op)?;
    let mut src = Residuals::zeros(grid);
    src.momentum = buoyancy(grid, params.beta, &psi);
    let sol = checked(sys.solve(&src, &tr)?)?;
    Ok(LiftResult {
        w: sol.u,
        pi: sol.p,
        temperature: psi,
        removed_heat_flux_mean: removed,
        lambda0: 0.0,
    })
}

/// Shifted lift around `pt`: the coupled steady system with zero sources
/// and boundary data `data`.
pub fn lift_lz(
    grid: &Grid,
    pt: &LinearizationPoint,
    params: &PhysicalParams,
    data: &BoundaryTrace,
) -> Result<LiftResult> {
    check_point(grid, pt, params)?;
    grid.check_trace(data)?;
    let mut tr = data.clone();
    let removed = if params.lambda0 == 0.0 {
        tr.remove_heat_flux_mean(grid)
    } else {
        0.0
    };
    let sys = SaddleSystem::new(LinearizedOperator::steady(grid, params, pt))?;
    let sol = checked(sys.solve(&Residuals::zeros(grid), &tr)?)?;
    Ok(LiftResult {
        w: sol.u,
        pi: sol.p,
        temperature: sol.phi,
        removed_heat_flux_mean: removed,
        lambda0: params.lambda0,
    })
}

/// Boundary-driven steady solve, computed directly and through the
/// Dirichlet-operator split; the two must agree to `1e-9` relative.
pub fn solve_steady_nonhomogeneous(
    grid: &Grid,
    pt: &LinearizationPoint,
    params: &PhysicalParams,
    f1: &VectorField,
    f2: &ScalarField,
    data: &BoundaryTrace,
) -> Result<SteadySolution> {
    check_point(grid, pt, params)?;
    grid.check_trace(data)?;
    let mut tr = data.clone();
    let removed = if params.lambda0 == 0.0 {
        tr.remove_heat_flux_mean(grid)
    } else {
        0.0
    };
    let sys = SaddleSystem::new(LinearizedOperator::steady(grid, params, pt))?;
    let src = sources(grid, Some(f1), Some(f2))?;
    let direct = checked(sys.solve(&src, &tr)?)?;

    // split: u = D_z g + w~, where w~ has zero wall velocity and sees the
    // coupling of D_z g with the background temperature as a source
    let (w, pi) = dirichlet_operator_dz(grid, pt, params, &tr)?;
    let mut src2 = src.clone();
    if pt.theta.max_abs() > 0.0 || pt.trace.max_abs() > 0.0 {
        src2.temperature.axpy(
            -1.0,
            &transport_scalar(grid, &w, &pt.theta, Some(&pt.trace)),
        );
    }
    let rest = checked(sys.solve(&src2, &tr.flux_part())?)?;
    let mut u = rest.u;
    u.axpy(1.0, &w);
    let mut p = rest.p;
    p.axpy(1.0, &pi);
    let mut du = u.clone();
    du.axpy(-1.0, &direct.u);
    let mut dphi = rest.phi.clone();
    dphi.axpy(-1.0, &direct.phi);
    let scale = norm_vector(grid, &direct.u) + inner_scalar(grid, &direct.phi, &direct.phi).sqrt();
    let disc =
        (norm_vector(grid, &du) + inner_scalar(grid, &dphi, &dphi).sqrt()) / scale.max(1e-300);
    let disc = if scale == 0.0 { 0.0 } else { disc };
    if disc > 1e-9 {
        return Err(Error::Inconsistent(format!(
            "direct and split steady solves differ by {disc:e}"
        )));
    }
    Ok(SteadySolution {
        u: direct.u,
        p: direct.p,
        phi: direct.phi,
        residual: direct.residual,
        removed_heat_flux_mean: removed,
        split_discrepancy: Some(disc),
    })
}

/// Largest cell divergence relative to the field size.
pub fn relative_divergence(grid: &Grid, w: &VectorField) -> f64 {
    let d = divergence(grid, w);
    let n = norm_vector(grid, w);
    if n == 0.0 {
        d.max_abs()
    } else {
        (inner_scalar(grid, &d, &d).sqrt() * grid.h()) / n
    }
}
