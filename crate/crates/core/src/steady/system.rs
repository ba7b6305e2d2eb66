//! Block saddle-point systems assembled from matrix-free residual maps.
//!
//! An operator supplies the strong-form residuals of the momentum,
//! continuity and (optionally) temperature equations for full fields with
//! boundary data. The linear part is recovered by stencil probing, the
//! boundary contribution by one evaluation on zero interior data, so the
//! factorised matrix and the matrix-free operator agree by construction.

use crate::error::{Error, Result};
use crate::linalg::{probe_matrix, DofTag, Factorized};
use crate::mesh::{
    advect_scalar, advect_vector, buoyancy, buoyancy_dual, divergence, gradient,
    laplacian_dirichlet, laplacian_neumann, scalar_times_gradient, transport_scalar,
    transport_velocity, transport_velocity_dual, BoundaryTrace, Grid, LinearizationPoint,
    PhysicalParams, ScalarField, VectorField,
};

/// Strong-form residuals: momentum on interior edges, continuity and
/// temperature at cells.
#[derive(Clone, Debug)]
pub struct Residuals {
    pub momentum: VectorField,
    pub continuity: ScalarField,
    pub temperature: ScalarField,
}

impl Residuals {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            momentum: VectorField::zeros(grid),
            continuity: ScalarField::zeros(grid),
            temperature: ScalarField::zeros(grid),
        }
    }
}

/// Affine residual map of a velocity-pressure(-temperature) system.
pub trait BlockOperator {
    fn grid(&self) -> &Grid;
    fn has_temperature(&self) -> bool;
    /// The temperature block annihilates constants (no zeroth-order term).
    fn temperature_singular(&self) -> bool;
    fn eval(
        &self,
        u: &VectorField,
        p: &ScalarField,
        phi: &ScalarField,
        trace: &BoundaryTrace,
    ) -> Residuals;
}

/// Terms of the linearised steady (or implicit time-step) operator
///
/// ```text
/// mass u - nu lap u + (u.grad) z + (z.grad) u + grad p - beta phi
/// -div u
/// mass phi - mu lap phi + z.grad phi + u.grad theta
/// ```
///
/// where each group can be switched off.
#[derive(Clone, Debug)]
pub struct LinearizedOperator {
    pub grid: Grid,
    pub params: PhysicalParams,
    pub mass: f64,
    pub point: Option<LinearizationPoint>,
    pub temperature: bool,
    pub buoyancy: bool,
    pub coupling: bool,
}

impl LinearizedOperator {
    /// Coupled steady operator with shift `params.lambda0` around `pt`.
    pub fn steady(grid: &Grid, params: &PhysicalParams, pt: &LinearizationPoint) -> Self {
        Self {
            grid: *grid,
            params: *params,
            mass: params.lambda0,
            point: (!pt.is_zero()).then(|| pt.clone()),
            temperature: true,
            buoyancy: true,
            coupling: true,
        }
    }

    /// Velocity-pressure part only.
    pub fn velocity_only(mut self) -> Self {
        self.temperature = false;
        self.buoyancy = false;
        self.coupling = false;
        self
    }
}

impl BlockOperator for LinearizedOperator {
    fn grid(&self) -> &Grid {
        &self.grid
    }

    fn has_temperature(&self) -> bool {
        self.temperature
    }

    fn temperature_singular(&self) -> bool {
        self.temperature && self.mass == 0.0
    }

    fn eval(
        &self,
        u: &VectorField,
        p: &ScalarField,
        phi: &ScalarField,
        trace: &BoundaryTrace,
    ) -> Residuals {
        let g = &self.grid;
        let prm = &self.params;
        let mut mom = u.scaled(self.mass);
        mom.axpy(-prm.nu, &laplacian_dirichlet(g, u, Some(trace)));
        if let Some(pt) = &self.point {
            mom.axpy(1.0, &advect_vector(g, &pt.z, u, Some(trace)));
            mom.axpy(1.0, &transport_velocity(g, u, &pt.z, Some(&pt.trace)));
        }
        mom.axpy(1.0, &gradient(g, p));
        if self.temperature && self.buoyancy {
            mom.axpy(-1.0, &buoyancy(g, prm.beta, phi));
        }
        mom.clear_normal_trace();
        let mut cont = divergence(g, u);
        cont.scale(-1.0);
        let temp = if self.temperature {
            let mut t = phi.scaled(self.mass);
            t.axpy(-prm.mu, &laplacian_neumann(g, phi, Some(trace)));
            if let Some(pt) = &self.point {
                t.axpy(1.0, &advect_scalar(g, &pt.z, phi, Some(trace)));
                if self.coupling {
                    t.axpy(1.0, &transport_scalar(g, u, &pt.theta, Some(&pt.trace)));
                }
            }
            t
        } else {
            ScalarField::zeros(g)
        };
        Residuals {
            momentum: mom,
            continuity: cont,
            temperature: temp,
        }
    }
}

/// Adjoint operator discretised from its own strong form
///
/// ```text
/// mass r - nu lap r + (grad z)^T r - (z.grad) r + grad pi + s grad theta
/// -div r
/// mass s - mu lap s - z.grad s - beta . r
/// ```
///
/// with homogeneous Dirichlet data for `r` and Neumann data for `s`. The
/// wall closure of the viscous term extrapolates the tangential ghost
/// quadratically (`ghost = -2 r_1 + r_2 / 3`), so one-sided wall derivatives
/// of `r` are second-order accurate.
#[derive(Clone, Debug)]
pub struct AdjointOperator {
    pub grid: Grid,
    pub params: PhysicalParams,
    pub mass: f64,
    pub point: Option<LinearizationPoint>,
}

impl BlockOperator for AdjointOperator {
    fn grid(&self) -> &Grid {
        &self.grid
    }

    fn has_temperature(&self) -> bool {
        true
    }

    fn temperature_singular(&self) -> bool {
        self.mass == 0.0
    }

    fn eval(
        &self,
        r: &VectorField,
        pi: &ScalarField,
        s: &ScalarField,
        trace: &BoundaryTrace,
    ) -> Residuals {
        let g = &self.grid;
        let prm = &self.params;
        let mut mom = r.scaled(self.mass);
        mom.axpy(-prm.nu, &laplacian_dirichlet(g, r, Some(trace)));
        quadratic_wall_closure(g, prm.nu, r, &mut mom);
        if let Some(pt) = &self.point {
            mom.axpy(1.0, &transport_velocity_dual(g, r, &pt.z));
            mom.axpy(-1.0, &advect_vector(g, &pt.z, r, Some(trace)));
            mom.axpy(1.0, &scalar_times_gradient(g, s, &pt.theta));
        }
        mom.axpy(1.0, &gradient(g, pi));
        mom.clear_normal_trace();
        let mut cont = divergence(g, r);
        cont.scale(-1.0);
        let mut t = s.scaled(self.mass);
        t.axpy(-prm.mu, &laplacian_neumann(g, s, Some(trace)));
        if let Some(pt) = &self.point {
            t.axpy(-1.0, &advect_scalar(g, &pt.z, s, Some(trace)));
        }
        t.axpy(-1.0, &buoyancy_dual(g, prm.beta, r));
        Residuals {
            momentum: mom,
            continuity: cont,
            temperature: t,
        }
    }
}

/// Replaces the linear tangential ghost `-r_1` of the homogeneous Dirichlet
/// Laplacian by the quadratic one `-2 r_1 + r_2 / 3` in `-nu lap r`.
fn quadratic_wall_closure(g: &Grid, nu: f64, r: &VectorField, mom: &mut VectorField) {
    let (nx, ny) = (g.nx, g.ny);
    let (cx, cy) = (nu / (g.hx() * g.hx()), nu / (g.hy() * g.hy()));
    for i in 1..nx {
        *mom.u_mut(i, 0) -= cy * (r.u_at(i, 1) / 3.0 - r.u_at(i, 0));
        *mom.u_mut(i, ny - 1) -= cy * (r.u_at(i, ny - 2) / 3.0 - r.u_at(i, ny - 1));
    }
    for j in 1..ny {
        *mom.v_mut(0, j) -= cx * (r.v_at(1, j) / 3.0 - r.v_at(0, j));
        *mom.v_mut(nx - 1, j) -= cx * (r.v_at(nx - 2, j) / 3.0 - r.v_at(nx - 1, j));
    }
}

const KIND_U: u8 = 0;
const KIND_V: u8 = 1;
const KIND_P: u8 = 2;
const KIND_T: u8 = 3;

/// Unknown ordering: interior x-velocity, interior y-velocity, pressure,
/// temperature (optional), then the pressure-mean and temperature-mean
/// multipliers.
#[derive(Clone, Debug)]
pub struct Layout {
    pub grid: Grid,
    pub temperature: bool,
    pub temp_multiplier: bool,
    tags: Vec<DofTag>,
}

impl Layout {
    pub fn new(grid: &Grid, temperature: bool, temp_multiplier: bool) -> Self {
        let (nx, ny) = (grid.nx, grid.ny);
        let mut tags = Vec::new();
        for j in 0..ny {
            for i in 1..nx {
                tags.push(DofTag { kind: KIND_U, i, j });
            }
        }
        for j in 1..ny {
            for i in 0..nx {
                tags.push(DofTag { kind: KIND_V, i, j });
            }
        }
        for j in 0..ny {
            for i in 0..nx {
                tags.push(DofTag { kind: KIND_P, i, j });
            }
        }
        if temperature {
            for j in 0..ny {
                for i in 0..nx {
                    tags.push(DofTag { kind: KIND_T, i, j });
                }
            }
        }
        Self {
            grid: *grid,
            temperature,
            temp_multiplier,
            tags,
        }
    }

    pub fn n_local(&self) -> usize {
        self.tags.len()
    }

    pub fn n(&self) -> usize {
        self.n_local() + 1 + usize::from(self.temp_multiplier)
    }

    fn n_vel(&self) -> usize {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        (nx - 1) * ny + nx * (ny - 1)
    }

    fn p_offset(&self) -> usize {
        self.n_vel()
    }

    fn t_offset(&self) -> usize {
        self.n_vel() + self.grid.n_cells()
    }

    pub fn p_multiplier(&self) -> usize {
        self.n_local()
    }

    pub fn t_multiplier(&self) -> Option<usize> {
        self.temp_multiplier.then(|| self.n_local() + 1)
    }

    /// Splits an unknown vector into fields; wall-normal velocity is zero.
    pub fn unpack(&self, x: &[f64]) -> (VectorField, ScalarField, ScalarField) {
        let g = &self.grid;
        let (nx, ny) = (g.nx, g.ny);
        let mut u = VectorField::zeros(g);
        let mut k = 0;
        for j in 0..ny {
            for i in 1..nx {
                *u.u_mut(i, j) = x[k];
                k += 1;
            }
        }
        for j in 1..ny {
            for i in 0..nx {
                *u.v_mut(i, j) = x[k];
                k += 1;
            }
        }
        let nc = g.n_cells();
        let p = ScalarField {
            nx,
            ny,
            data: x[k..k + nc].to_vec(),
        };
        let t = if self.temperature {
            ScalarField {
                nx,
                ny,
                data: x[k + nc..k + 2 * nc].to_vec(),
            }
        } else {
            ScalarField::zeros(g)
        };
        (u, p, t)
    }

    /// Flattens residual fields into rows weighted by the cell area.
    pub fn pack(&self, r: &Residuals) -> Vec<f64> {
        let g = &self.grid;
        let a = g.cell_area();
        let (nx, ny) = (g.nx, g.ny);
        let mut out = Vec::with_capacity(self.n());
        for j in 0..ny {
            for i in 1..nx {
                out.push(a * r.momentum.u_at(i, j));
            }
        }
        for j in 1..ny {
            for i in 0..nx {
                out.push(a * r.momentum.v_at(i, j));
            }
        }
        out.extend(r.continuity.data.iter().map(|v| a * v));
        if self.temperature {
            out.extend(r.temperature.data.iter().map(|v| a * v));
        }
        out.resize(self.n(), 0.0);
        out
    }

    /// Inverse of [`Self::pack`] (drops the area weight).
    pub fn unpack_rows(&self, b: &[f64]) -> Residuals {
        let a = self.grid.cell_area();
        let scaled: Vec<f64> = b.iter().map(|v| v / a).collect();
        let (m, c, t) = self.unpack(&scaled);
        Residuals {
            momentum: m,
            continuity: c,
            temperature: t,
        }
    }

    /// Packs fields as unknowns (interior velocity only).
    pub fn pack_unknowns(&self, u: &VectorField, p: &ScalarField, t: &ScalarField) -> Vec<f64> {
        let a = self.grid.cell_area();
        let r = Residuals {
            momentum: u.clone(),
            continuity: p.clone(),
            temperature: t.clone(),
        };
        self.pack(&r).into_iter().map(|v| v / a).collect()
    }
}

/// Solution of a saddle system with full boundary data restored.
#[derive(Clone, Debug)]
pub struct SaddleSolution {
    pub u: VectorField,
    pub p: ScalarField,
    pub phi: ScalarField,
    pub pressure_multiplier: f64,
    pub temperature_multiplier: f64,
    /// Relative residual of the affine system at the returned solution.
    pub residual: f64,
}

/// Factorised block system for one operator.
pub struct SaddleSystem<O: BlockOperator> {
    op: O,
    layout: Layout,
    fact: Factorized,
}

impl<O: BlockOperator> std::fmt::Debug for SaddleSystem<O> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SaddleSystem")
            .field("n", &self.layout.n())
            .finish()
    }
}

impl<O: BlockOperator> SaddleSystem<O> {
    pub fn new(op: O) -> Result<Self> {
        let grid = *op.grid();
        let layout = Layout::new(&grid, op.has_temperature(), op.temperature_singular());
        let zero_trace = BoundaryTrace::zeros(&grid);
        let n_local = layout.n_local();
        let mut trip = probe_matrix(&layout.tags, |x| {
            let (u, p, t) = layout.unpack(x);
            let mut rows = layout.pack(&op.eval(&u, &p, &t, &zero_trace));
            rows.truncate(n_local);
            rows
        });
        let a = grid.cell_area();
        let nc = grid.n_cells();
        let pm = layout.p_multiplier();
        for k in 0..nc {
            trip.push((layout.p_offset() + k, pm, a));
            trip.push((pm, layout.p_offset() + k, a));
        }
        if let Some(tm) = layout.t_multiplier() {
            for k in 0..nc {
                trip.push((layout.t_offset() + k, tm, a));
                trip.push((tm, layout.t_offset() + k, a));
            }
        }
        let fact = Factorized::new(layout.n(), &trip)?;
        Ok(Self { op, layout, fact })
    }

    pub fn operator(&self) -> &O {
        &self.op
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn matrix(&self) -> &Factorized {
        &self.fact
    }

    /// Rows produced by the boundary data alone (interior unknowns zero).
    pub fn boundary_rows(&self, trace: &BoundaryTrace) -> Vec<f64> {
        let g = self.op.grid();
        let mut u = VectorField::zeros(g);
        u.set_normal_trace(trace);
        let z = ScalarField::zeros(g);
        self.layout.pack(&self.op.eval(&u, &z, &z, trace))
    }

    /// Solves `operator(u, p, phi; trace) = sources`. The velocity data must
    /// carry zero net flux.
    pub fn solve(&self, sources: &Residuals, trace: &BoundaryTrace) -> Result<SaddleSolution> {
        let g = *self.op.grid();
        g.check_trace(trace)?;
        let flux = trace.net_flux(&g);
        if flux.abs() > 1e-12 * (1.0 + trace.max_abs()) * BoundaryTrace::perimeter(&g) {
            return Err(Error::Incompatible { flux });
        }
        let mut b = self.layout.pack(sources);
        let off = self.boundary_rows(trace);
        b.iter_mut().zip(&off).for_each(|(b, o)| *b -= o);
        let x = self.fact.solve(&b);
        let ax = self.fact.matvec(&x);
        let bn = crate::linalg::norm2(&b).max(f64::MIN_POSITIVE);
        let residual = ax
            .iter()
            .zip(&b)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
            / bn;
        let (mut u, p, phi) = self.layout.unpack(&x);
        u.set_normal_trace(trace);
        Ok(SaddleSolution {
            u,
            p,
            phi,
            pressure_multiplier: x[self.layout.p_multiplier()],
            temperature_multiplier: self.layout.t_multiplier().map_or(0.0, |k| x[k]),
            residual,
        })
    }

    /// Solves with the transposed matrix; input and output are raw vectors
    /// in the layout ordering.
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        self.fact.solve_transpose(b)
    }

    /// Strong-form residual of a candidate solution, for verification.
    pub fn evaluate(
        &self,
        u: &VectorField,
        p: &ScalarField,
        phi: &ScalarField,
        trace: &BoundaryTrace,
    ) -> Residuals {
        self.op.eval(u, p, phi, trace)
    }
}
