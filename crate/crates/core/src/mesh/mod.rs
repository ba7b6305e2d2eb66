//! Staggered (MAC) grid on a rectangle, the fields that live on it, and
//! boundary data.
//!
//! Layout, with `i` running along x and `j` along y:
//!
//! * scalars (pressure, temperature) sit at cell centres, `nx * ny` values;
//! * the x-velocity sits on vertical edges, `(nx + 1) * ny` values, so the
//!   entries with `i == 0` and `i == nx` are wall-normal boundary values;
//! * the y-velocity sits on horizontal edges, `nx * (ny + 1)` values, with
//!   `j == 0` and `j == ny` on the walls.
//!
//! All storage is row-major with `j` as the row index.

mod ops;

pub use ops::*;

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Uniform tensor-product grid on `[0, lx] x [0, ly]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx < 4 || ny < 4 {
            return Err(Error::GridTooSmall { nx, ny });
        }
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(Error::InvalidParameter(format!("domain size {lx} x {ly}")));
        }
        Ok(Self { nx, ny, lx, ly })
    }

    /// `n x n` grid on the unit square.
    pub fn unit(n: usize) -> Result<Self> {
        Self::new(n, n, 1.0, 1.0)
    }

    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn h(&self) -> f64 {
        self.hx().min(self.hy())
    }

    pub fn cell_area(&self) -> f64 {
        self.hx() * self.hy()
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn n_u(&self) -> usize {
        (self.nx + 1) * self.ny
    }

    pub fn n_v(&self) -> usize {
        self.nx * (self.ny + 1)
    }

    pub fn cell_center(&self, i: usize, j: usize) -> (f64, f64) {
        ((i as f64 + 0.5) * self.hx(), (j as f64 + 0.5) * self.hy())
    }

    pub fn u_point(&self, i: usize, j: usize) -> (f64, f64) {
        (i as f64 * self.hx(), (j as f64 + 0.5) * self.hy())
    }

    pub fn v_point(&self, i: usize, j: usize) -> (f64, f64) {
        ((i as f64 + 0.5) * self.hx(), j as f64 * self.hy())
    }

    /// Grid with the same domain and each direction refined by `factor`.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            nx: self.nx * factor,
            ny: self.ny * factor,
            ..*self
        }
    }

    pub(crate) fn check_scalar(&self, f: &ScalarField) -> Result<()> {
        if f.nx != self.nx || f.ny != self.ny {
            return Err(Error::ShapeMismatch(format!(
                "scalar field {}x{} on grid {}x{}",
                f.nx, f.ny, self.nx, self.ny
            )));
        }
        Ok(())
    }

    pub(crate) fn check_vector(&self, f: &VectorField) -> Result<()> {
        if f.nx != self.nx || f.ny != self.ny {
            return Err(Error::ShapeMismatch(format!(
                "vector field {}x{} on grid {}x{}",
                f.nx, f.ny, self.nx, self.ny
            )));
        }
        Ok(())
    }

    pub(crate) fn check_trace(&self, t: &BoundaryTrace) -> Result<()> {
        if t.nx != self.nx || t.ny != self.ny {
            return Err(Error::ShapeMismatch(format!(
                "boundary trace {}x{} on grid {}x{}",
                t.nx, t.ny, self.nx, self.ny
            )));
        }
        Ok(())
    }
}

/// Cell-centred scalar.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    pub nx: usize,
    pub ny: usize,
    pub data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            nx: grid.nx,
            ny: grid.ny,
            data: vec![0.0; grid.n_cells()],
        }
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        Self {
            nx: grid.nx,
            ny: grid.ny,
            data: vec![c; grid.n_cells()],
        }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut out = Self::zeros(grid);
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (x, y) = grid.cell_center(i, j);
                out.data[j * grid.nx + i] = f(x, y);
            }
        }
        out
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.nx + i]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.data[j * self.nx + i]
    }

    /// Plain average over the cells.
    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn remove_mean(&mut self) -> f64 {
        let m = self.mean();
        self.data.iter_mut().for_each(|x| *x -= m);
        m
    }

    pub fn scale(&mut self, a: f64) {
        self.data.iter_mut().for_each(|x| *x *= a);
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &ScalarField) {
        debug_assert_eq!(self.data.len(), other.data.len());
        self.data
            .iter_mut()
            .zip(&other.data)
            .for_each(|(x, y)| *x += a * y);
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

/// Staggered velocity: x-component on vertical edges, y-component on
/// horizontal edges, wall-normal boundary values included.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VectorField {
    pub nx: usize,
    pub ny: usize,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl VectorField {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            nx: grid.nx,
            ny: grid.ny,
            u: vec![0.0; grid.n_u()],
            v: vec![0.0; grid.n_v()],
        }
    }

    /// Samples `f` at the edge midpoints, boundary edges included.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> [f64; 2]) -> Self {
        let mut out = Self::zeros(grid);
        for j in 0..grid.ny {
            for i in 0..=grid.nx {
                let (x, y) = grid.u_point(i, j);
                out.u[j * (grid.nx + 1) + i] = f(x, y)[0];
            }
        }
        for j in 0..=grid.ny {
            for i in 0..grid.nx {
                let (x, y) = grid.v_point(i, j);
                out.v[j * grid.nx + i] = f(x, y)[1];
            }
        }
        out
    }

    #[inline]
    pub fn u_at(&self, i: usize, j: usize) -> f64 {
        self.u[j * (self.nx + 1) + i]
    }

    #[inline]
    pub fn v_at(&self, i: usize, j: usize) -> f64 {
        self.v[j * self.nx + i]
    }

    #[inline]
    pub fn u_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.u[j * (self.nx + 1) + i]
    }

    #[inline]
    pub fn v_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.v[j * self.nx + i]
    }

    pub fn scale(&mut self, a: f64) {
        self.u
            .iter_mut()
            .chain(self.v.iter_mut())
            .for_each(|x| *x *= a);
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &VectorField) {
        debug_assert_eq!(self.u.len(), other.u.len());
        self.u
            .iter_mut()
            .zip(&other.u)
            .for_each(|(x, y)| *x += a * y);
        self.v
            .iter_mut()
            .zip(&other.v)
            .for_each(|(x, y)| *x += a * y);
    }

    pub fn max_abs(&self) -> f64 {
        self.u
            .iter()
            .chain(&self.v)
            .fold(0.0f64, |m, x| m.max(x.abs()))
    }

    /// Overwrites the wall-normal entries with the normal data of `trace`.
    pub fn set_normal_trace(&mut self, trace: &BoundaryTrace) {
        let (nx, ny) = (self.nx, self.ny);
        for j in 0..ny {
            *self.u_mut(0, j) = -trace.normal[Wall::Left as usize][j];
            *self.u_mut(nx, j) = trace.normal[Wall::Right as usize][j];
        }
        for i in 0..nx {
            *self.v_mut(i, 0) = -trace.normal[Wall::Bottom as usize][i];
            *self.v_mut(i, ny) = trace.normal[Wall::Top as usize][i];
        }
    }

    /// Sets the wall-normal entries to zero.
    pub fn clear_normal_trace(&mut self) {
        let (nx, ny) = (self.nx, self.ny);
        for j in 0..ny {
            *self.u_mut(0, j) = 0.0;
            *self.u_mut(nx, j) = 0.0;
        }
        for i in 0..nx {
            *self.v_mut(i, 0) = 0.0;
            *self.v_mut(i, ny) = 0.0;
        }
    }

    /// Largest wall-normal entry in magnitude.
    pub fn normal_trace_max(&self) -> f64 {
        let (nx, ny) = (self.nx, self.ny);
        let mut m = 0.0f64;
        for j in 0..ny {
            m = m.max(self.u_at(0, j).abs()).max(self.u_at(nx, j).abs());
        }
        for i in 0..nx {
            m = m.max(self.v_at(i, 0).abs()).max(self.v_at(i, ny).abs());
        }
        m
    }
}

/// A velocity paired with a temperature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoupledField {
    pub vel: VectorField,
    pub temp: ScalarField,
}

impl CoupledField {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            vel: VectorField::zeros(grid),
            temp: ScalarField::zeros(grid),
        }
    }

    pub fn axpy(&mut self, a: f64, other: &CoupledField) {
        self.vel.axpy(a, &other.vel);
        self.temp.axpy(a, &other.temp);
    }

    pub fn scale(&mut self, a: f64) {
        self.vel.scale(a);
        self.temp.scale(a);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Wall {
    Left = 0,
    Right = 1,
    Bottom = 2,
    Top = 3,
}

impl Wall {
    pub const ALL: [Wall; 4] = [Wall::Left, Wall::Right, Wall::Bottom, Wall::Top];

    pub fn outward_normal(self) -> [f64; 2] {
        match self {
            Wall::Left => [-1.0, 0.0],
            Wall::Right => [1.0, 0.0],
            Wall::Bottom => [0.0, -1.0],
            Wall::Top => [0.0, 1.0],
        }
    }

    fn is_vertical(self) -> bool {
        matches!(self, Wall::Left | Wall::Right)
    }
}

/// Boundary data for one instant.
///
/// Each quantity is sampled where the staggering consumes it:
/// `normal` (g . n) and `flux` (dphi/dn) at face midpoints, one per boundary
/// cell face; `tangential` (the Cartesian component of g along the wall) at
/// the wall nodes, corners included, which is where the ghost values of the
/// tangential velocity are needed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryTrace {
    pub nx: usize,
    pub ny: usize,
    pub time: f64,
    pub normal: [Vec<f64>; 4],
    pub tangential: [Vec<f64>; 4],
    pub flux: [Vec<f64>; 4],
}

impl BoundaryTrace {
    pub fn zeros(grid: &Grid) -> Self {
        let faces = |w: Wall| if w.is_vertical() { grid.ny } else { grid.nx };
        let mk = |extra: usize| Wall::ALL.map(|w| vec![0.0; faces(w) + extra]);
        Self {
            nx: grid.nx,
            ny: grid.ny,
            time: 0.0,
            normal: mk(0),
            tangential: mk(1),
            flux: mk(0),
        }
    }

    /// Samples a velocity `g(x, y)` and a normal heat flux `h(x, y)`.
    pub fn from_fns(
        grid: &Grid,
        g: impl Fn(f64, f64) -> [f64; 2],
        h: impl Fn(f64, f64) -> f64,
    ) -> Self {
        let mut t = Self::zeros(grid);
        for w in Wall::ALL {
            let n = w.outward_normal();
            let k = w as usize;
            for (m, slot) in t.normal[k].iter_mut().enumerate() {
                let (x, y) = Self::face_point(grid, w, m);
                let gv = g(x, y);
                *slot = gv[0] * n[0] + gv[1] * n[1];
                t.flux[k][m] = h(x, y);
            }
            for (m, slot) in t.tangential[k].iter_mut().enumerate() {
                let (x, y) = Self::node_point(grid, w, m);
                let gv = g(x, y);
                *slot = if w.is_vertical() { gv[1] } else { gv[0] };
            }
        }
        t
    }

    pub fn velocity_only(grid: &Grid, g: impl Fn(f64, f64) -> [f64; 2]) -> Self {
        Self::from_fns(grid, g, |_, _| 0.0)
    }

    pub fn flux_only(grid: &Grid, h: impl Fn(f64, f64) -> f64) -> Self {
        Self::from_fns(grid, |_, _| [0.0, 0.0], h)
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.time = t;
        self
    }

    /// Midpoint of face `m` on wall `w`.
    pub fn face_point(grid: &Grid, w: Wall, m: usize) -> (f64, f64) {
        let s = m as f64 + 0.5;
        match w {
            Wall::Left => (0.0, s * grid.hy()),
            Wall::Right => (grid.lx, s * grid.hy()),
            Wall::Bottom => (s * grid.hx(), 0.0),
            Wall::Top => (s * grid.hx(), grid.ly),
        }
    }

    /// Node `m` on wall `w`, counted from the lower/left corner.
    pub fn node_point(grid: &Grid, w: Wall, m: usize) -> (f64, f64) {
        let s = m as f64;
        match w {
            Wall::Left => (0.0, s * grid.hy()),
            Wall::Right => (grid.lx, s * grid.hy()),
            Wall::Bottom => (s * grid.hx(), 0.0),
            Wall::Top => (s * grid.hx(), grid.ly),
        }
    }

    /// Length of one boundary face on wall `w`.
    pub fn face_length(grid: &Grid, w: Wall) -> f64 {
        if w.is_vertical() {
            grid.hy()
        } else {
            grid.hx()
        }
    }

    /// Discrete net flux of g through the boundary.
    pub fn net_flux(&self, grid: &Grid) -> f64 {
        Wall::ALL
            .iter()
            .map(|&w| Self::face_length(grid, w) * self.normal[w as usize].iter().sum::<f64>())
            .sum()
    }

    /// Discrete integral of the heat flux over the boundary.
    pub fn net_heat_flux(&self, grid: &Grid) -> f64 {
        Wall::ALL
            .iter()
            .map(|&w| Self::face_length(grid, w) * self.flux[w as usize].iter().sum::<f64>())
            .sum()
    }

    pub fn perimeter(grid: &Grid) -> f64 {
        2.0 * (grid.lx + grid.ly)
    }

    /// Subtracts the boundary average of the heat flux and returns it.
    pub fn remove_heat_flux_mean(&mut self, grid: &Grid) -> f64 {
        let m = self.net_heat_flux(grid) / Self::perimeter(grid);
        self.flux.iter_mut().flatten().for_each(|x| *x -= m);
        m
    }

    /// Boundary L2 pairing of the normal and tangential velocity data with
    /// `other`, plus the flux pairing.
    pub fn pairing(&self, grid: &Grid, other: &BoundaryTrace) -> f64 {
        let mut s = 0.0;
        for w in Wall::ALL {
            let k = w as usize;
            let len = Self::face_length(grid, w);
            s += len * dot(&self.normal[k], &other.normal[k]);
            s += len * dot(&self.flux[k], &other.flux[k]);
            // trapezoid over nodes for the tangential samples
            let t = &self.tangential[k];
            let o = &other.tangential[k];
            let last = t.len() - 1;
            for m in 0..=last {
                let wgt = if m == 0 || m == last { 0.5 } else { 1.0 };
                s += len * wgt * t[m] * o[m];
            }
        }
        s
    }

    /// Quadrature weight of every sample, in [`Self::to_vec`] order, so that
    /// `pairing(a, b) = sum w_k a_k b_k`.
    pub fn quadrature_weights(grid: &Grid) -> Vec<f64> {
        let mut t = Self::zeros(grid);
        for w in Wall::ALL {
            let k = w as usize;
            let len = Self::face_length(grid, w);
            t.normal[k]
                .iter_mut()
                .chain(t.flux[k].iter_mut())
                .for_each(|x| *x = len);
            let last = t.tangential[k].len() - 1;
            for (m, x) in t.tangential[k].iter_mut().enumerate() {
                *x = if m == 0 || m == last { 0.5 * len } else { len };
            }
        }
        t.to_vec()
    }

    pub fn scale(&mut self, a: f64) {
        self.normal
            .iter_mut()
            .chain(self.tangential.iter_mut())
            .chain(self.flux.iter_mut())
            .flatten()
            .for_each(|x| *x *= a);
    }

    pub fn axpy(&mut self, a: f64, other: &BoundaryTrace) {
        for k in 0..4 {
            for (x, y) in self.normal[k].iter_mut().zip(&other.normal[k]) {
                *x += a * y;
            }
            for (x, y) in self.tangential[k].iter_mut().zip(&other.tangential[k]) {
                *x += a * y;
            }
            for (x, y) in self.flux[k].iter_mut().zip(&other.flux[k]) {
                *x += a * y;
            }
        }
    }

    /// Copy with the heat flux zeroed.
    pub fn velocity_part(&self) -> Self {
        let mut t = self.clone();
        t.flux.iter_mut().flatten().for_each(|x| *x = 0.0);
        t
    }

    /// Copy with the velocity data zeroed.
    pub fn flux_part(&self) -> Self {
        let mut t = self.clone();
        t.normal
            .iter_mut()
            .chain(t.tangential.iter_mut())
            .flatten()
            .for_each(|x| *x = 0.0);
        t
    }

    /// Number of scalar samples, in the order used by [`Self::to_vec`].
    pub fn len(&self) -> usize {
        self.normal
            .iter()
            .chain(&self.tangential)
            .chain(&self.flux)
            .map(Vec::len)
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.normal
            .iter()
            .chain(&self.tangential)
            .chain(&self.flux)
            .flatten()
            .copied()
            .collect()
    }

    pub fn from_vec(grid: &Grid, data: &[f64]) -> Self {
        let mut t = Self::zeros(grid);
        let mut it = data.iter().copied();
        for x in t
            .normal
            .iter_mut()
            .chain(t.tangential.iter_mut())
            .chain(t.flux.iter_mut())
            .flatten()
        {
            *x = it.next().unwrap_or(0.0);
        }
        t
    }

    pub fn max_abs(&self) -> f64 {
        self.to_vec().iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    /// Boundary L2 norm of all samples.
    pub fn boundary_norm(&self, grid: &Grid) -> f64 {
        self.pairing(grid, self).sqrt()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Viscosity, diffusivity, the buoyancy vector and the steady shift.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub nu: f64,
    pub mu: f64,
    pub beta: [f64; 2],
    pub lambda0: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            nu: 1.0,
            mu: 1.0,
            beta: [0.0, 1.0],
            lambda0: 0.0,
        }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.mu > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "viscosity and diffusivity must be positive (nu = {}, mu = {})",
                self.nu, self.mu
            )));
        }
        if !(self.lambda0 >= 0.0 && self.lambda0.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "shift must be nonnegative, got {}",
                self.lambda0
            )));
        }
        if !self.beta.iter().all(|b| b.is_finite()) {
            return Err(Error::InvalidParameter(
                "buoyancy vector is not finite".into(),
            ));
        }
        Ok(())
    }

    /// Pointwise magnitude of the (constant) buoyancy vector.
    pub fn beta_sup(&self) -> f64 {
        self.beta[0].hypot(self.beta[1])
    }

    pub fn with_lambda0(mut self, lambda0: f64) -> Self {
        self.lambda0 = lambda0;
        self
    }

    pub fn with_beta(mut self, beta: [f64; 2]) -> Self {
        self.beta = beta;
        self
    }
}

/// Stationary state `(z, theta)` around which the equations are linearised.
/// `trace` carries the wall data of `z` (tangential ghosts) and the heat flux
/// of `theta`; it is zero for the usual homogeneous state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearizationPoint {
    pub z: VectorField,
    pub theta: ScalarField,
    pub trace: BoundaryTrace,
}

impl LinearizationPoint {
    pub fn zero(grid: &Grid) -> Self {
        Self {
            z: VectorField::zeros(grid),
            theta: ScalarField::zeros(grid),
            trace: BoundaryTrace::zeros(grid),
        }
    }

    /// Wraps `(z, theta)` after checking the discrete divergence of `z`.
    pub fn new(
        grid: &Grid,
        z: VectorField,
        theta: ScalarField,
        trace: BoundaryTrace,
    ) -> Result<Self> {
        grid.check_vector(&z)?;
        grid.check_scalar(&theta)?;
        grid.check_trace(&trace)?;
        let d = divergence(grid, &z);
        let scale = z.max_abs().max(1.0) / grid.h();
        let norm = d.max_abs();
        if norm > 1e-9 * scale {
            return Err(Error::NotSolenoidal { norm });
        }
        Ok(Self { z, theta, trace })
    }

    pub fn is_zero(&self) -> bool {
        self.z.max_abs() == 0.0 && self.theta.max_abs() == 0.0 && self.trace.max_abs() == 0.0
    }
}
