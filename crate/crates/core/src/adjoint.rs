//! Adjoint systems and the transposition identities.
//!
//! Two adjoint backends are available. The discrete one solves with the
//! transpose of the factorised primal matrix, so the duality identity holds
//! to round-off. The continuous one discretises the adjoint equations
//! directly and reads the boundary functional off with one-sided stencils;
//! its duality defect is a discretisation error.

use crate::error::{Error, Result};
use crate::evolve::LinearStepper;
use crate::linalg::dot;
use crate::mesh::{
    inner_scalar, inner_vector, BoundaryTrace, CoupledField, Grid, LinearizationPoint,
    PhysicalParams, ScalarField, VectorField, Wall,
};
use crate::rng::Seeded;
use crate::steady::{AdjointOperator, BlockOperator, LinearizedOperator, Residuals, SaddleSystem};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdjointBackend {
    DiscreteTranspose,
    ContinuousDiscretized,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DualityMode {
    Steady,
    Unsteady,
}

/// Adjoint velocity (zero on the walls), pressure and temperature.
#[derive(Clone, Debug)]
pub struct AdjointState {
    pub r: VectorField,
    pub pi_tilde: ScalarField,
    pub s: ScalarField,
    /// Boundary mean of the adjoint pressure.
    pub c_pi: f64,
    pub backend: AdjointBackend,
    /// Exact contribution of the wall-normal source entries to the volume
    /// pairing (half-weighted wall edges); zero for the continuous backend.
    pub wall_term: BoundaryTrace,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DualityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub abs_residual: f64,
    pub rel_residual: f64,
    pub mode: DualityMode,
    pub adjoint_kind: AdjointBackend,
    pub trials: usize,
}

const REL_FLOOR: f64 = 1e-300;

impl DualityReport {
    fn new(lhs: f64, rhs: f64, mode: DualityMode, adjoint_kind: AdjointBackend) -> Self {
        let abs_residual = (lhs - rhs).abs();
        let rel_residual = abs_residual / lhs.abs().max(rhs.abs()).max(REL_FLOOR);
        let rel_residual = if abs_residual == 0.0 {
            0.0
        } else {
            rel_residual
        };
        Self {
            lhs,
            rhs,
            abs_residual,
            rel_residual,
            mode,
            adjoint_kind,
            trials: 1,
        }
    }

    /// Keeps the worse of two reports and counts trials.
    fn worst(self, other: Self) -> Self {
        let trials = self.trials + other.trials;
        let mut w = if other.rel_residual > self.rel_residual {
            other
        } else {
            self
        };
        w.trials = trials;
        w
    }
}

/// Sparse columns of the map from boundary samples to primal rows.
struct BoundaryColumns(Vec<Vec<(usize, f64)>>);

impl BoundaryColumns {
    fn new<O: BlockOperator>(grid: &Grid, sys: &SaddleSystem<O>) -> Self {
        let n = BoundaryTrace::zeros(grid).len();
        let mut e = vec![0.0; n];
        let cols = (0..n)
            .map(|k| {
                e[k] = 1.0;
                let rows = sys.boundary_rows(&BoundaryTrace::from_vec(grid, &e));
                e[k] = 0.0;
                rows.into_iter()
                    .enumerate()
                    .filter(|(_, v)| *v != 0.0)
                    .collect()
            })
            .collect();
        Self(cols)
    }

    /// Riesz representer (in the boundary quadrature) of `d -> -xi . B d`.
    fn functional(&self, grid: &Grid, xi: &[f64]) -> BoundaryTrace {
        let w = BoundaryTrace::quadrature_weights(grid);
        let v: Vec<f64> = self
            .0
            .iter()
            .zip(&w)
            .map(|(col, wk)| -col.iter().map(|&(r, b)| b * xi[r]).sum::<f64>() / wk)
            .collect();
        BoundaryTrace::from_vec(grid, &v)
    }
}

/// `d -> <u_wall(d), f3>` over the half-weighted wall edges, as normal
/// samples: `(h/2) f3 . n` on each face.
fn wall_term(grid: &Grid, f3: &VectorField) -> BoundaryTrace {
    let (nx, ny) = (grid.nx, grid.ny);
    let (hx, hy) = (grid.hx(), grid.hy());
    let mut t = BoundaryTrace::zeros(grid);
    for j in 0..ny {
        t.normal[Wall::Left as usize][j] = -0.5 * hx * f3.u_at(0, j);
        t.normal[Wall::Right as usize][j] = 0.5 * hx * f3.u_at(nx, j);
    }
    for i in 0..nx {
        t.normal[Wall::Bottom as usize][i] = -0.5 * hy * f3.v_at(i, 0);
        t.normal[Wall::Top as usize][i] = 0.5 * hy * f3.v_at(i, ny);
    }
    t
}

fn interior(f3: &VectorField) -> VectorField {
    let mut f = f3.clone();
    f.clear_normal_trace();
    f
}

/// Extrapolated wall value from the first two interior samples.
fn wall_value(a0: f64, a1: f64) -> f64 {
    1.5 * a0 - 0.5 * a1
}

/// Boundary mean of a cell scalar extrapolated to the wall faces.
pub fn boundary_mean(grid: &Grid, q: &ScalarField) -> f64 {
    let t = scalar_on_walls(grid, q, wall_value);
    let mut s = 0.0;
    for w in Wall::ALL {
        s += BoundaryTrace::face_length(grid, w) * t[w as usize].iter().sum::<f64>();
    }
    s / BoundaryTrace::perimeter(grid)
}

fn scalar_on_walls(grid: &Grid, q: &ScalarField, ext: impl Fn(f64, f64) -> f64) -> [Vec<f64>; 4] {
    let (nx, ny) = (grid.nx, grid.ny);
    [
        (0..ny).map(|j| ext(q.at(0, j), q.at(1, j))).collect(),
        (0..ny)
            .map(|j| ext(q.at(nx - 1, j), q.at(nx - 2, j)))
            .collect(),
        (0..nx).map(|i| ext(q.at(i, 0), q.at(i, 1))).collect(),
        (0..nx)
            .map(|i| ext(q.at(i, ny - 1), q.at(i, ny - 2)))
            .collect(),
    ]
}

/// Boundary functional `(-nu dr/dn + (pi - c) n, mu s)` of an adjoint state,
/// as boundary samples (normal, tangential, flux slots).
///
/// The normal derivative of the tangential adjoint velocity uses the
/// one-sided second-order stencil `(9 r_1 - r_2) / (3h)` through the first
/// two interior samples (at h/2 and 3h/2 from the wall). The normal
/// component of `dr/dn` vanishes on the wall for a solenoidal field with zero
/// trace and is taken as zero. The pressure is extrapolated linearly to the
/// faces; the temperature with the zero-slope quadratic `(9 s_0 - s_1)/8`.
pub fn transposition_functional(
    grid: &Grid,
    params: &PhysicalParams,
    state: &AdjointState,
) -> BoundaryTrace {
    let (nx, ny) = (grid.nx, grid.ny);
    let (hx, hy) = (grid.hx(), grid.hy());
    let r = &state.r;
    let mut t = BoundaryTrace::zeros(grid);
    let p = scalar_on_walls(grid, &state.pi_tilde, wall_value);
    let c = boundary_mean(grid, &state.pi_tilde);
    let s = scalar_on_walls(grid, &state.s, |a0, a1| (9.0 * a0 - a1) / 8.0);
    for w in Wall::ALL {
        let k = w as usize;
        for (m, v) in t.normal[k].iter_mut().enumerate() {
            *v = p[k][m] - c;
        }
        for (m, v) in t.flux[k].iter_mut().enumerate() {
            *v = params.mu * s[k][m];
        }
    }
    let d = |a1: f64, a2: f64, h: f64| (9.0 * a1 - a2) / (3.0 * h);
    let nu = params.nu;
    for i in 1..nx {
        t.tangential[Wall::Bottom as usize][i] = nu * d(r.u_at(i, 0), r.u_at(i, 1), hy);
        t.tangential[Wall::Top as usize][i] = nu * d(r.u_at(i, ny - 1), r.u_at(i, ny - 2), hy);
    }
    for j in 1..ny {
        t.tangential[Wall::Left as usize][j] = nu * d(r.v_at(0, j), r.v_at(1, j), hx);
        t.tangential[Wall::Right as usize][j] = nu * d(r.v_at(nx - 1, j), r.v_at(nx - 2, j), hx);
    }
    t
}

/// Steady adjoint solver with both backends sharing one primal
/// factorisation.
pub struct SteadyAdjoint {
    grid: Grid,
    params: PhysicalParams,
    primal: SaddleSystem<LinearizedOperator>,
    continuous: SaddleSystem<AdjointOperator>,
    columns: BoundaryColumns,
}

impl std::fmt::Debug for SteadyAdjoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SteadyAdjoint")
            .field("grid", &self.grid)
            .finish()
    }
}

impl SteadyAdjoint {
    pub fn new(grid: &Grid, pt: &LinearizationPoint, params: &PhysicalParams) -> Result<Self> {
        params.validate()?;
        let primal = SaddleSystem::new(LinearizedOperator::steady(grid, params, pt))?;
        let continuous = SaddleSystem::new(AdjointOperator {
            grid: *grid,
            params: *params,
            mass: params.lambda0,
            point: (!pt.is_zero()).then(|| pt.clone()),
        })?;
        let columns = BoundaryColumns::new(grid, &primal);
        Ok(Self {
            grid: *grid,
            params: *params,
            primal,
            continuous,
            columns,
        })
    }

    pub fn primal(&self) -> &SaddleSystem<LinearizedOperator> {
        &self.primal
    }

    /// Adjoint state for sources `(f3, f4)`; wall entries of `f3` are
    /// ignored.
    pub fn solve(
        &self,
        f3: &VectorField,
        f4: &ScalarField,
        backend: AdjointBackend,
    ) -> Result<AdjointState> {
        let g = &self.grid;
        g.check_vector(f3)?;
        g.check_scalar(f4)?;
        let src = Residuals {
            momentum: interior(f3),
            continuity: ScalarField::zeros(g),
            temperature: f4.clone(),
        };
        match backend {
            AdjointBackend::DiscreteTranspose => {
                let mut st = self.transpose_solve(&self.primal.layout().pack(&src));
                st.wall_term = wall_term(g, f3);
                Ok(st)
            }
            AdjointBackend::ContinuousDiscretized => {
                let sol = self.continuous.solve(&src, &BoundaryTrace::zeros(g))?;
                let c_pi = boundary_mean(g, &sol.p);
                Ok(AdjointState {
                    r: sol.u,
                    pi_tilde: sol.p,
                    s: sol.phi,
                    c_pi,
                    backend,
                    wall_term: BoundaryTrace::zeros(g),
                })
            }
        }
    }

    fn transpose_solve(&self, rows: &[f64]) -> AdjointState {
        let xi = self.primal.solve_transpose(rows);
        let (r, pi_tilde, s) = self.primal.layout().unpack(&xi);
        let c_pi = boundary_mean(&self.grid, &pi_tilde);
        AdjointState {
            r,
            pi_tilde,
            s,
            c_pi,
            backend: AdjointBackend::DiscreteTranspose,
            wall_term: BoundaryTrace::zeros(&self.grid),
        }
    }

    /// Boundary functional of an adjoint state computed by this solver.
    pub fn functional(&self, state: &AdjointState) -> BoundaryTrace {
        match state.backend {
            AdjointBackend::DiscreteTranspose => {
                let lay = self.primal.layout();
                let xi = lay.pack_unknowns(&state.r, &state.pi_tilde, &state.s);
                let mut t = self.columns.functional(&self.grid, &xi);
                t.axpy(1.0, &state.wall_term);
                t
            }
            AdjointBackend::ContinuousDiscretized => {
                transposition_functional(&self.grid, &self.params, state)
            }
        }
    }

    /// Adjoint with prescribed divergence `k` (mean zero) and no sources.
    /// Discrete backend only.
    pub fn solve_div(&self, k: &ScalarField) -> Result<AdjointState> {
        let g = &self.grid;
        g.check_scalar(k)?;
        let mean = k.mean();
        if mean.abs() > 1e-12 * k.max_abs().max(1.0) {
            return Err(Error::Incompatible {
                flux: mean * g.lx * g.ly,
            });
        }
        let mut src = Residuals::zeros(g);
        src.continuity = k.scaled(-1.0);
        // the transposed pressure column is -div, so the source -k yields div r1 = k
        Ok(self.transpose_solve(&self.primal.layout().pack(&src)))
    }

    /// `<p, k>` through the adjoint with divergence `k`:
    /// `-pairing(functional(r1, pi1, s1), data)`.
    pub fn pressure_pairing(&self, k: &ScalarField, data: &BoundaryTrace) -> Result<f64> {
        let st = self.solve_div(k)?;
        Ok(-self.functional(&st).pairing(&self.grid, data))
    }

    /// One duality evaluation against the primal solution for `data`. The
    /// volume pairing includes the wall-normal edges at half weight.
    pub fn duality(
        &self,
        primal: (&VectorField, &ScalarField),
        data: &BoundaryTrace,
        f3: &VectorField,
        f4: &ScalarField,
        backend: AdjointBackend,
    ) -> Result<DualityReport> {
        let g = &self.grid;
        let lhs = inner_vector(g, primal.0, f3) + inner_scalar(g, primal.1, f4);
        let st = self.solve(f3, f4, backend)?;
        let rhs = self.functional(&st).pairing(g, data);
        Ok(DualityReport::new(lhs, rhs, DualityMode::Steady, backend))
    }
}

/// One-shot steady adjoint solve.
pub fn solve_steady_adjoint(
    grid: &Grid,
    pt: &LinearizationPoint,
    params: &PhysicalParams,
    f3: &VectorField,
    f4: &ScalarField,
    backend: AdjointBackend,
) -> Result<AdjointState> {
    SteadyAdjoint::new(grid, pt, params)?.solve(f3, f4, backend)
}

/// Worst duality defect over `trials` smooth random sources for fixed
/// boundary data (zero primal sources).
pub fn duality_check_steady(
    grid: &Grid,
    pt: &LinearizationPoint,
    params: &PhysicalParams,
    data: &BoundaryTrace,
    trials: usize,
    backend: AdjointBackend,
    seed: u64,
) -> Result<DualityReport> {
    let adj = SteadyAdjoint::new(grid, pt, params)?;
    let sol = adj.primal.solve(&Residuals::zeros(grid), data)?;
    let mut rng = Seeded::new(seed);
    let mut worst: Option<DualityReport> = None;
    for _ in 0..trials {
        let f3 = rng.smooth_vector(grid, 4);
        let f4 = rng.smooth_scalar(grid, 4);
        let r = adj.duality((&sol.u, &sol.phi), data, &f3, &f4, backend)?;
        worst = Some(match worst {
            None => r,
            Some(w) => w.worst(r),
        });
    }
    Ok(worst.unwrap_or_else(|| DualityReport::new(0.0, 0.0, DualityMode::Steady, backend)))
}

/// Grid refinement of the duality residual at zero linearization. Each
/// trial draws a fresh compatible trace and fresh smooth sources from the
/// same seed on every grid, so the continuum problem is shared across
/// resolutions; the recorded residual per grid is the worst over trials.
pub fn duality_refinement(
    sizes: &[usize],
    params: &PhysicalParams,
    trials: usize,
    backend: AdjointBackend,
    seed: u64,
) -> Result<Vec<(usize, f64)>> {
    let mut out = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let grid = Grid::unit(n)?;
        let adj = SteadyAdjoint::new(&grid, &LinearizationPoint::zero(&grid), params)?;
        let mut worst: f64 = 0.0;
        for t in 0..trials as u64 {
            let data = Seeded::new(seed ^ (2 * t)).compatible_trace(&grid, 3);
            let sol = adj.primal.solve(&Residuals::zeros(&grid), &data)?;
            let mut rng = Seeded::new(seed ^ (2 * t + 1));
            let f3 = rng.smooth_vector(&grid, 4);
            let f4 = rng.smooth_scalar(&grid, 4);
            worst = worst.max(
                adj.duality((&sol.u, &sol.phi), &data, &f3, &f4, backend)?
                    .abs_residual,
            );
        }
        out.push((n, worst));
    }
    Ok(out)
}

/// `|<M x, y> - <x, M^T y>|` relative, for random `x, y`.
pub fn transpose_identity_defect(
    grid: &Grid,
    pt: &LinearizationPoint,
    params: &PhysicalParams,
    seed: u64,
) -> Result<f64> {
    let sys = SaddleSystem::new(LinearizedOperator::steady(grid, params, pt))?;
    let n = sys.layout().n();
    let mut rng = Seeded::new(seed);
    let x: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
    let y: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
    let a = dot(&sys.matrix().matvec(&x), &y);
    let b = dot(&x, &sys.matrix().matvec_transpose(&y));
    Ok((a - b).abs() / a.abs().max(b.abs()).max(REL_FLOOR))
}

/// Time-level data of an unsteady run: sources and boundary data at
/// `t_1, ..., t_N`.
#[derive(Clone, Debug)]
pub struct SpaceTimeData {
    pub f1: Vec<VectorField>,
    pub f2: Vec<ScalarField>,
    pub traces: Vec<BoundaryTrace>,
}

/// Forward implicit Euler trajectory of the linear system around rest,
/// `x^1, ..., x^N`.
pub fn forward_linear(
    stepper: &LinearStepper,
    x0: &CoupledField,
    data: &SpaceTimeData,
) -> Result<Vec<CoupledField>> {
    let mut out = Vec::with_capacity(data.traces.len());
    let mut prev = x0.clone();
    for n in 0..data.traces.len() {
        let s = stepper.step(&prev, data.f1.get(n), data.f2.get(n), &data.traces[n])?;
        prev = CoupledField {
            vel: s.u,
            temp: s.phi,
        };
        out.push(prev.clone());
    }
    Ok(out)
}

/// Backward adjoint sweep `r^N, ..., r^1` for sources `(f3^n, f4^n)`
/// (returned in forward order). Each step solves with the transpose of the
/// forward matrix, so the pair is an exact space-time transpose.
pub fn solve_unsteady_adjoint(
    stepper: &LinearStepper,
    f3: &[VectorField],
    f4: &[ScalarField],
) -> Result<Vec<AdjointState>> {
    if f3.len() != f4.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} velocity vs {} temperature sources",
            f3.len(),
            f4.len()
        )));
    }
    let g = *stepper.grid();
    let sys = stepper.system();
    let dt = stepper.dt();
    let mut out: Vec<AdjointState> = Vec::with_capacity(f3.len());
    let mut next = CoupledField::zeros(&g);
    for n in (0..f3.len()).rev() {
        g.check_vector(&f3[n])?;
        g.check_scalar(&f4[n])?;
        let mut m = interior(&f3[n]);
        m.axpy(1.0 / dt, &next.vel);
        let mut t = f4[n].clone();
        t.axpy(1.0 / dt, &next.temp);
        let src = Residuals {
            momentum: m,
            continuity: ScalarField::zeros(&g),
            temperature: t,
        };
        let xi = sys.solve_transpose(&sys.layout().pack(&src));
        let (r, pi_tilde, s) = sys.layout().unpack(&xi);
        next = CoupledField {
            vel: r.clone(),
            temp: s.clone(),
        };
        let c_pi = boundary_mean(&g, &pi_tilde);
        out.push(AdjointState {
            r,
            pi_tilde,
            s,
            c_pi,
            backend: AdjointBackend::DiscreteTranspose,
            wall_term: wall_term(&g, &f3[n]),
        });
    }
    out.reverse();
    Ok(out)
}

/// Unsteady transposition identity
/// `sum dt <x^n, f^n> = sum dt <Lambda^n, d^n> + <x^0, (r^1, s^1)>`
/// for one set of adjoint sources.
pub fn unsteady_duality(
    stepper: &LinearStepper,
    x0: &CoupledField,
    data: &SpaceTimeData,
    f3: &[VectorField],
    f4: &[ScalarField],
) -> Result<DualityReport> {
    let g = *stepper.grid();
    let dt = stepper.dt();
    let traj = forward_linear(stepper, x0, data)?;
    let adj = solve_unsteady_adjoint(stepper, f3, f4)?;
    let cols = BoundaryColumns::new(&g, stepper.system());
    let lay = stepper.system().layout();
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for (n, x) in traj.iter().enumerate() {
        lhs += dt * (inner_vector(&g, &x.vel, &f3[n]) + inner_scalar(&g, &x.temp, &f4[n]));
        let st = &adj[n];
        let xi = lay.pack_unknowns(&st.r, &st.pi_tilde, &st.s);
        let mut lam = cols.functional(&g, &xi);
        lam.axpy(1.0, &st.wall_term);
        rhs += dt * lam.pairing(&g, &data.traces[n]);
    }
    if let Some(first) = adj.first() {
        rhs +=
            inner_vector(&g, &interior(&x0.vel), &first.r) + inner_scalar(&g, &x0.temp, &first.s);
    }
    Ok(DualityReport::new(
        lhs,
        rhs,
        DualityMode::Unsteady,
        AdjointBackend::DiscreteTranspose,
    ))
}

/// Worst unsteady duality defect over `trials` random adjoint sources.
pub fn duality_check_unsteady(
    stepper: &LinearStepper,
    x0: &CoupledField,
    data: &SpaceTimeData,
    trials: usize,
    seed: u64,
) -> Result<DualityReport> {
    let g = *stepper.grid();
    let mut rng = Seeded::new(seed);
    let steps = data.traces.len();
    let mut worst: Option<DualityReport> = None;
    for _ in 0..trials {
        let f3: Vec<VectorField> = (0..steps).map(|_| rng.vector_noise(&g)).collect();
        let f4: Vec<ScalarField> = (0..steps).map(|_| rng.scalar_noise(&g)).collect();
        let r = unsteady_duality(stepper, x0, data, &f3, &f4)?;
        worst = Some(match worst {
            None => r,
            Some(w) => w.worst(r),
        });
    }
    Ok(worst.unwrap_or_else(|| {
        DualityReport::new(
            0.0,
            0.0,
            DualityMode::Unsteady,
            AdjointBackend::DiscreteTranspose,
        )
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn params() -> PhysicalParams {
        PhysicalParams {
            nu: 0.7,
            mu: 1.2,
            beta: [0.2, 1.0],
            lambda0: 1.0,
        }
    }

    #[test]
    fn zero_sources_give_zero_adjoint() {
        let g = Grid::unit(8).unwrap();
        let adj = SteadyAdjoint::new(&g, &LinearizationPoint::zero(&g), &params()).unwrap();
        for b in [
            AdjointBackend::DiscreteTranspose,
            AdjointBackend::ContinuousDiscretized,
        ] {
            let st = adj
                .solve(&VectorField::zeros(&g), &ScalarField::zeros(&g), b)
                .unwrap();
            assert_eq!(st.r.max_abs() + st.s.max_abs() + st.pi_tilde.max_abs(), 0.0);
            assert_eq!(adj.functional(&st).max_abs(), 0.0);
        }
    }

    #[test]
    fn constant_pressure_drops_out_of_the_functional() {
        let g = Grid::unit(8).unwrap();
        let st = AdjointState {
            r: VectorField::zeros(&g),
            pi_tilde: ScalarField::constant(&g, 3.5),
            s: ScalarField::zeros(&g),
            c_pi: 3.5,
            backend: AdjointBackend::ContinuousDiscretized,
            wall_term: BoundaryTrace::zeros(&g),
        };
        assert!(transposition_functional(&g, &params(), &st).max_abs() < 1e-14);
    }

    #[test]
    fn normal_derivative_of_a_bump_is_second_order() {
        // r = (x(1-x) sin(pi y), 0); -dr/dn on the bottom wall is pi x(1-x)
        let errs: Vec<f64> = [16, 32]
            .iter()
            .map(|&n| {
                let g = Grid::unit(n).unwrap();
                let r = VectorField::from_fn(&g, |x, y| [x * (1.0 - x) * (PI * y).sin(), 0.0]);
                let st = AdjointState {
                    r,
                    pi_tilde: ScalarField::zeros(&g),
                    s: ScalarField::zeros(&g),
                    c_pi: 0.0,
                    backend: AdjointBackend::ContinuousDiscretized,
                    wall_term: BoundaryTrace::zeros(&g),
                };
                let p = PhysicalParams::default();
                let t = transposition_functional(&g, &p, &st);
                (1..n)
                    .map(|i| {
                        let x = i as f64 / n as f64;
                        (t.tangential[Wall::Bottom as usize][i] - PI * x * (1.0 - x)).abs()
                    })
                    .fold(0.0, f64::max)
            })
            .collect();
        assert!(errs[0] / errs[1] > 3.5, "{errs:?}");
    }

    #[test]
    fn discrete_duality_holds_to_round_off() {
        let g = Grid::unit(8).unwrap();
        let data = Seeded::new(2).compatible_trace(&g, 3);
        let rep = duality_check_steady(
            &g,
            &LinearizationPoint::zero(&g),
            &params(),
            &data,
            5,
            AdjointBackend::DiscreteTranspose,
            1,
        )
        .unwrap();
        assert!(rep.rel_residual < 1e-10, "{rep:?}");
        assert_eq!(rep.trials, 5);
    }

    #[test]
    fn pressure_pairing_matches_primal_pressure() {
        let g = Grid::unit(8).unwrap();
        let p = params();
        let adj = SteadyAdjoint::new(&g, &LinearizationPoint::zero(&g), &p).unwrap();
        let data = Seeded::new(3).compatible_trace(&g, 3);
        let sol = adj.primal().solve(&Residuals::zeros(&g), &data).unwrap();
        let mut k = Seeded::new(4).scalar_noise(&g);
        k.remove_mean();
        let direct = inner_scalar(&g, &sol.p, &k);
        let dual = adj.pressure_pairing(&k, &data).unwrap();
        assert!(
            (direct - dual).abs() < 1e-9 * direct.abs().max(1e-3),
            "{direct} vs {dual}"
        );
        let st = adj.solve_div(&k).unwrap();
        let mut d = crate::mesh::divergence(&g, &st.r);
        d.axpy(-1.0, &k);
        assert!(d.max_abs() < 1e-10 * k.max_abs());
    }

    #[test]
    fn unsteady_identity_is_exact() {
        let g = Grid::unit(4).unwrap();
        let p = params();
        let st = LinearStepper::new(&g, &p, 0.1, 0.0).unwrap();
        let mut rng = Seeded::new(7);
        let traces: Vec<BoundaryTrace> = (0..4).map(|_| rng.compatible_trace(&g, 2)).collect();
        let data = SpaceTimeData {
            f1: vec![],
            f2: vec![],
            traces,
        };
        let x0 = rng.coupled_noise(&g);
        let rep = duality_check_unsteady(&st, &x0, &data, 3, 9).unwrap();
        assert!(rep.rel_residual < 1e-12, "{rep:?}");
    }
}
