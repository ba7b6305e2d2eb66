//! Dense coupled generators on the discretely solenoidal subspace.
//!
//! The state space is spanned by an L²-orthonormal basis of zero-trace,
//! discretely divergence-free velocities (curls of nodal stream functions,
//! orthonormalised by QR) followed by scaled cell indicators for the
//! temperature. In these coordinates the L² inner product is the Euclidean
//! one, so adjoints are transposes and operator norms are spectral norms.
//!
//! Every exponential and fractional power acts on the shifted generator
//! `G = A - lambda0 I`, whose spectrum lies in the open left half-plane.

use crate::error::{Error, Result};
use crate::mesh::{
    h1_norm_scalar, h1_norm_vector, BoundaryTrace, CoupledField, Grid, LinearizationPoint,
    PhysicalParams, ScalarField, VectorField,
};
use crate::rng::Seeded;
use crate::steady::{BlockOperator, LinearizedOperator};
use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::{c64, Mat};
use serde::{Deserialize, Serialize};
use std::ops::Range;

/// Largest grid (cells per direction) accepted for dense assembly.
pub const MAX_DENSE_CELLS: usize = 12;
/// Eigenvector-matrix condition number above which the eigen path is
/// abandoned.
pub const CONDITION_LIMIT: f64 = 1e8;
/// Quadrature nodes of the resolvent integral for fractional powers.
pub const BALAKRISHNAN_NODES: usize = 64;

/// How a matrix function was evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Eigen,
    ScalingSquaring,
    Integer,
    Balakrishnan,
}

/// Coefficients over the coupled basis.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector(pub Vec<f64>);

impl StateVector {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &StateVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn axpy(&mut self, a: f64, other: &StateVector) {
        for (x, y) in self.0.iter_mut().zip(&other.0) {
            *x += a * y;
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self(self.0.iter().map(|v| a * v).collect())
    }

    pub fn distance(&self, other: &StateVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Clone, Debug)]
struct EigenCache {
    /// Eigenvalues of the shifted generator.
    values: Vec<c64>,
    vectors: Mat<c64>,
    inverse: Mat<c64>,
    condition: f64,
}

/// Dense matrix of `A` in the coupled basis plus cached spectral data.
#[derive(Clone, Debug)]
pub struct CoupledOperator {
    grid: Grid,
    lambda0: f64,
    matrix: Mat<f64>,
    /// Velocity basis, one column per mode, rows ordered `u` then `v`.
    basis: Mat<f64>,
    n_vel: usize,
    n_temp: usize,
    eigen: Option<EigenCache>,
}

/// Builds `A` (around rest when `pt` is `None` or zero) with the shift
/// `params.lambda0`.
pub fn assemble_coupled_operator(
    grid: &Grid,
    pt: Option<&LinearizationPoint>,
    params: &PhysicalParams,
) -> Result<CoupledOperator> {
    params.validate()?;
    if grid.nx > MAX_DENSE_CELLS || grid.ny > MAX_DENSE_CELLS {
        return Err(Error::TooLarge(format!(
            "grid {}x{} exceeds the {MAX_DENSE_CELLS}x{MAX_DENSE_CELLS} cap",
            grid.nx, grid.ny
        )));
    }
    let point = pt.filter(|p| !p.is_zero()).cloned();
    if let Some(p) = &point {
        grid.check_vector(&p.z)?;
        grid.check_scalar(&p.theta)?;
    }
    let basis = solenoidal_basis(grid)?;
    let n_vel = basis.ncols();
    let n_temp = grid.n_cells();
    let n = n_vel + n_temp;
    let coupling = point.is_some();
    let op = LinearizedOperator {
        grid: *grid,
        params: *params,
        mass: 0.0,
        point,
        temperature: true,
        buoyancy: true,
        coupling,
    };
    let mut this = CoupledOperator {
        grid: *grid,
        lambda0: params.lambda0,
        matrix: Mat::zeros(n, n),
        basis,
        n_vel,
        n_temp,
        eigen: None,
    };
    let zero_p = ScalarField::zeros(grid);
    let zero_t = BoundaryTrace::zeros(grid);
    for k in 0..n {
        let mut e = StateVector::zeros(n);
        e.0[k] = 1.0;
        let x = this.decode(&e);
        let r = op.eval(&x.vel, &zero_p, &x.temp, &zero_t);
        let col = this.encode(&CoupledField {
            vel: r.momentum,
            temp: r.temperature,
        });
        for (i, v) in col.0.iter().enumerate() {
            this.matrix[(i, k)] = -v;
        }
    }
    this.eigen = this.eigendecompose();
    let spectral_abscissa = match &this.eigen {
        Some(c) => c
            .values
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max),
        None => this
            .generator()
            .eigenvalues()
            .map_err(|e| Error::Singular(format!("eigenvalues: {e:?}")))?
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max),
    };
    if spectral_abscissa >= 0.0 {
        return Err(Error::NotAnalytic(format!(
            "shift {} leaves an eigenvalue with real part {spectral_abscissa:e} >= 0",
            params.lambda0
        )));
    }
    Ok(this)
}

/// Orthonormal (in the L² pairing) basis of zero-trace discretely solenoidal
/// velocities, as curls of hat stream functions at interior nodes.
fn solenoidal_basis(grid: &Grid) -> Result<Mat<f64>> {
    let (nx, ny) = (grid.nx, grid.ny);
    let (hx, hy) = (grid.hx(), grid.hy());
    let nu = grid.n_u();
    let rows = nu + grid.n_v();
    let k = (nx - 1) * (ny - 1);
    let sa = grid.cell_area().sqrt();
    let mut raw = Mat::<f64>::zeros(rows, k);
    for b in 1..ny {
        for a in 1..nx {
            let c = (b - 1) * (nx - 1) + (a - 1);
            // u = d psi / dy on x-faces, v = -d psi / dx on y-faces
            raw[(b * (nx + 1) + a, c)] = -sa / hy;
            raw[((b - 1) * (nx + 1) + a, c)] = sa / hy;
            raw[(nu + b * nx + a, c)] = sa / hx;
            raw[(nu + b * nx + a - 1, c)] = -sa / hx;
        }
    }
    let qr = raw.qr();
    let r = qr.thin_R();
    let diag_max = (0..k).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    let diag_min = (0..k)
        .map(|i| r[(i, i)].abs())
        .fold(f64::INFINITY, f64::min);
    if !(diag_min > 1e-12 * diag_max) {
        return Err(Error::Singular(
            "stream-function basis is rank deficient".into(),
        ));
    }
    let mut q = qr.compute_thin_Q();
    for j in 0..k {
        for i in 0..rows {
            // wall-normal rows are zero in exact arithmetic
            let wall = i < nu && (i % (nx + 1) == 0 || i % (nx + 1) == nx)
                || i >= nu && ((i - nu) < nx || (i - nu) >= nx * ny);
            q[(i, j)] = if wall { 0.0 } else { q[(i, j)] / sa };
        }
    }
    Ok(q)
}

impl CoupledOperator {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    pub fn dim(&self) -> usize {
        self.n_vel + self.n_temp
    }

    /// Index ranges of the velocity and temperature coefficients.
    pub fn blocks(&self) -> (Range<usize>, Range<usize>) {
        (0..self.n_vel, self.n_vel..self.dim())
    }

    /// The unshifted matrix `A`.
    pub fn matrix(&self) -> &Mat<f64> {
        &self.matrix
    }

    /// `A - lambda0 I`.
    pub fn generator(&self) -> Mat<f64> {
        let mut g = self.matrix.clone();
        for i in 0..self.dim() {
            g[(i, i)] -= self.lambda0;
        }
        g
    }

    /// Condition number of the eigenvector matrix, when the eigen path is
    /// available.
    pub fn eigen_condition(&self) -> Option<f64> {
        self.eigen.as_ref().map(|c| c.condition)
    }

    /// Eigenvalues of `A - lambda0 I` (eigen path only).
    pub fn shifted_eigenvalues(&self) -> Option<&[c64]> {
        self.eigen.as_ref().map(|c| c.values.as_slice())
    }

    /// Coordinates of the L² projection of `x` onto the state space.
    pub fn encode(&self, x: &CoupledField) -> StateVector {
        let a = self.grid.cell_area();
        let mut c = vec![0.0; self.dim()];
        // basis columns vanish on wall-normal entries, so those are ignored
        for (k, ck) in c.iter_mut().enumerate().take(self.n_vel) {
            let col = self.basis.col(k);
            let s: f64 = x
                .vel
                .u
                .iter()
                .chain(&x.vel.v)
                .enumerate()
                .map(|(i, w)| col[i] * w)
                .sum();
            *ck = a * s;
        }
        let sa = a.sqrt();
        for (k, t) in x.temp.data.iter().enumerate() {
            c[self.n_vel + k] = sa * t;
        }
        StateVector(c)
    }

    pub fn decode(&self, x: &StateVector) -> CoupledField {
        let g = &self.grid;
        let nu = g.n_u();
        let mut vel = VectorField::zeros(g);
        for k in 0..self.n_vel {
            let ck = x.0[k];
            if ck == 0.0 {
                continue;
            }
            let col = self.basis.col(k);
            for i in 0..nu {
                vel.u[i] += ck * col[i];
            }
            for i in 0..g.n_v() {
                vel.v[i] += ck * col[nu + i];
            }
        }
        let sa = g.cell_area().sqrt();
        let temp = ScalarField {
            nx: g.nx,
            ny: g.ny,
            data: x.0[self.n_vel..].iter().map(|c| c / sa).collect(),
        };
        CoupledField { vel, temp }
    }

    /// `A x`.
    pub fn apply(&self, x: &StateVector) -> StateVector {
        StateVector(matvec(&self.matrix, &x.0))
    }

    /// `(lambda0 I - A) x`.
    pub fn apply_shifted(&self, x: &StateVector) -> StateVector {
        let ax = self.apply(x);
        StateVector(
            x.0.iter()
                .zip(&ax.0)
                .map(|(a, b)| self.lambda0 * a - b)
                .collect(),
        )
    }

    fn eigendecompose(&self) -> Option<EigenCache> {
        let evd = self.matrix.eigen().ok()?;
        let vectors = evd.U().to_owned();
        let s = evd.S().column_vector();
        let values: Vec<c64> = (0..self.dim())
            .map(|i| s[i] - c64::new(self.lambda0, 0.0))
            .collect();
        let sv = vectors.singular_values().ok()?;
        let condition = sv.first().copied().unwrap_or(0.0) / sv.last().copied().unwrap_or(0.0);
        if !(condition.is_finite() && condition <= CONDITION_LIMIT) {
            return None;
        }
        let inverse = vectors.partial_piv_lu().inverse();
        Some(EigenCache {
            values,
            vectors,
            inverse,
            condition,
        })
    }

    /// `Re(V f(Lambda) V^-1 x)` over the eigenvalues of the shifted generator.
    fn spectral_apply(&self, cache: &EigenCache, f: impl Fn(c64) -> c64, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut y = vec![c64::new(0.0, 0.0); n];
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = c64::new(0.0, 0.0);
            for (j, xj) in x.iter().enumerate() {
                s += cache.inverse[(i, j)] * xj;
            }
            *yi = s * f(cache.values[i]);
        }
        (0..n)
            .map(|i| {
                let mut s = c64::new(0.0, 0.0);
                for (j, yj) in y.iter().enumerate() {
                    s += cache.vectors[(i, j)] * yj;
                }
                s.re
            })
            .collect()
    }

    fn spectral_matrix(&self, cache: &EigenCache, f: impl Fn(c64) -> c64) -> Mat<f64> {
        let n = self.dim();
        let mut scaled = cache.vectors.clone();
        for j in 0..n {
            let fj = f(cache.values[j]);
            for i in 0..n {
                scaled[(i, j)] *= fj;
            }
        }
        let prod = &scaled * &cache.inverse;
        Mat::from_fn(n, n, |i, j| prod[(i, j)].re)
    }

    /// `exp(t G)` as a dense matrix.
    pub fn exp_matrix(&self, t: f64, method: Method) -> Result<Mat<f64>> {
        check_time(t)?;
        match method {
            Method::Eigen => {
                let c = self.eigen.as_ref().ok_or_else(|| no_eigen("exponential"))?;
                Ok(self.spectral_matrix(c, |z| (z * t).exp()))
            }
            Method::ScalingSquaring => Ok(expm(&(self.generator() * faer::Scale(t)))),
            m => Err(Error::Method(format!(
                "{m:?} does not evaluate exponentials"
            ))),
        }
    }

    /// `exp(t G) x`, through the eigenbasis when it is well conditioned.
    pub fn semigroup_apply(&self, t: f64, x: &StateVector) -> Result<StateVector> {
        let m = if self.eigen.is_some() {
            Method::Eigen
        } else {
            Method::ScalingSquaring
        };
        self.semigroup_apply_with(t, x, m)
    }

    pub fn semigroup_apply_with(
        &self,
        t: f64,
        x: &StateVector,
        method: Method,
    ) -> Result<StateVector> {
        check_time(t)?;
        self.check_state(x)?;
        if t == 0.0 {
            return Ok(x.clone());
        }
        match (method, &self.eigen) {
            (Method::Eigen, Some(c)) => {
                Ok(StateVector(self.spectral_apply(c, |z| (z * t).exp(), &x.0)))
            }
            _ => Ok(StateVector(matvec(&self.exp_matrix(t, method)?, &x.0))),
        }
    }

    /// `(lambda0 I - A)^alpha x` for `alpha` in `[0, 2]`.
    pub fn fractional_power_apply(
        &self,
        alpha: f64,
        x: &StateVector,
    ) -> Result<(StateVector, Method)> {
        let m = if alpha.fract() == 0.0 {
            Method::Integer
        } else if self.eigen.is_some() {
            Method::Eigen
        } else {
            Method::Balakrishnan
        };
        Ok((self.fractional_power_with(alpha, x, m)?, m))
    }

    pub fn fractional_power_with(
        &self,
        alpha: f64,
        x: &StateVector,
        method: Method,
    ) -> Result<StateVector> {
        check_alpha(alpha)?;
        self.check_state(x)?;
        match method {
            Method::Integer => {
                if alpha.fract() != 0.0 {
                    return Err(Error::Method(format!("power {alpha} is not an integer")));
                }
                let mut y = x.clone();
                for _ in 0..alpha as usize {
                    y = self.apply_shifted(&y);
                }
                Ok(y)
            }
            Method::Eigen => {
                let c = self
                    .eigen
                    .as_ref()
                    .ok_or_else(|| no_eigen("fractional power"))?;
                Ok(StateVector(self.spectral_apply(
                    c,
                    |z| (-z).powf(alpha),
                    &x.0,
                )))
            }
            Method::Balakrishnan => {
                if alpha == 0.0 {
                    return Ok(x.clone());
                }
                if alpha >= 1.0 {
                    let y = self.apply_shifted(x);
                    return if alpha == 1.0 {
                        Ok(y)
                    } else {
                        Ok(self.balakrishnan(alpha - 1.0, &y))
                    };
                }
                Ok(self.balakrishnan(alpha, x))
            }
            Method::ScalingSquaring => Err(Error::Method(
                "scaling and squaring evaluates exponentials only".into(),
            )),
        }
    }

    /// `B^alpha x = sin(pi alpha)/pi * int_0^inf s^(alpha-1) (s + B)^-1 B x ds`
    /// for `B = lambda0 I - A` and `0 < alpha < 1`, with the double
    /// exponential substitution `s = exp(c + sinh tau)` centred between
    /// spectral bounds of `B` and the trapezoid rule in `tau`.
    fn balakrishnan(&self, alpha: f64, x: &StateVector) -> StateVector {
        let n = self.dim();
        let b = self.generator() * faer::Scale(-1.0);
        let bx = matvec(&b, &x.0);
        let lo = self.lambda0.min(1.0);
        let hi = norm_one(&b).max(lo);
        let centre = 0.5 * (lo.ln() + hi.ln());
        // both tails decay like exp(-min(alpha, 1 - alpha) e^tau / 2)
        let tau_max = (70.0 / alpha.min(1.0 - alpha)).ln().clamp(5.0, 6.5);
        let h = 2.0 * tau_max / (BALAKRISHNAN_NODES - 1) as f64;
        let mut acc = vec![0.0; n];
        for k in 0..BALAKRISHNAN_NODES {
            let tau = -tau_max + k as f64 * h;
            let s = (centre + tau.sinh()).exp();
            let w = h * tau.cosh() * s.powf(alpha);
            let mut m = b.clone();
            for i in 0..n {
                m[(i, i)] += s;
            }
            let mut rhs = Mat::from_fn(n, 1, |i, _| bx[i]);
            m.partial_piv_lu().solve_in_place(rhs.as_mut());
            for i in 0..n {
                acc[i] += w * rhs[(i, 0)];
            }
        }
        let c = (std::f64::consts::PI * alpha).sin() / std::f64::consts::PI;
        StateVector(acc.into_iter().map(|v| c * v).collect())
    }

    /// `(lambda0 I - A)^alpha exp(t G)` as a dense matrix.
    pub fn smoothing_matrix(&self, alpha: f64, t: f64) -> Result<Mat<f64>> {
        check_alpha(alpha)?;
        check_time(t)?;
        if let Some(c) = &self.eigen {
            return Ok(self.spectral_matrix(c, |z| (-z).powf(alpha) * (z * t).exp()));
        }
        let e = self.exp_matrix(t, Method::ScalingSquaring)?;
        let n = self.dim();
        let mut out = Mat::zeros(n, n);
        for j in 0..n {
            let col = StateVector((0..n).map(|i| e[(i, j)]).collect());
            let y = self.fractional_power_apply(alpha, &col)?.0;
            for i in 0..n {
                out[(i, j)] = y.0[i];
            }
        }
        Ok(out)
    }

    /// `t^alpha |(lambda0 I - A)^alpha exp(t G)|` over `t_grid`.
    pub fn smoothing_probe(&self, alpha: f64, t_grid: &[f64]) -> Result<SmoothingTable> {
        if t_grid.iter().any(|t| !(*t > 0.0)) || t_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "probe times must be positive and increasing".into(),
            ));
        }
        let mut rows = Vec::with_capacity(t_grid.len());
        for &t in t_grid {
            let m = self.smoothing_matrix(alpha, t)?;
            let norm = spectral_norm(&m)?;
            rows.push(SmoothingRow {
                t,
                alpha,
                value: t.powf(alpha) * norm,
            });
        }
        Ok(SmoothingTable::from_rows(rows))
    }

    /// Smallest `<(lambda0 I - A) x, x> / (|u|_H1^2 + |phi|_H1^2)` over
    /// random states.
    pub fn analyticity_probe(&self, trials: usize, seed: u64) -> Result<AnalyticityReport> {
        let mut rng = Seeded::new(seed);
        let mut min_ratio = f64::INFINITY;
        let mut worst = None;
        for k in 0..trials {
            let x = StateVector((0..self.dim()).map(|_| rng.normal()).collect());
            let r = self.analyticity_ratio(&x);
            if r < min_ratio {
                min_ratio = r;
                worst = Some(k);
            }
        }
        Ok(AnalyticityReport {
            lambda0: self.lambda0,
            trials,
            omega0: min_ratio,
            worst_trial: worst,
        })
    }

    /// The quotient sampled by [`Self::analyticity_probe`] for one state.
    pub fn analyticity_ratio(&self, x: &StateVector) -> f64 {
        let num = self.apply_shifted(x).dot(x);
        let f = self.decode(x);
        let den = h1_norm_vector(&self.grid, &f.vel, None).powi(2)
            + h1_norm_scalar(&self.grid, &f.temp).powi(2);
        num / den
    }

    fn check_state(&self, x: &StateVector) -> Result<()> {
        if x.0.len() != self.dim() {
            return Err(Error::ShapeMismatch(format!(
                "state of length {} for dimension {}",
                x.0.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// Per-step propagators `(Phi, I - Phi, I - G^-1 (Phi - I)/dt)` of the
    /// convolution with piecewise linear data.
    fn duhamel_propagators(&self, dt: f64) -> Result<[Mat<f64>; 3]> {
        let n = self.dim();
        if let Some(c) = &self.eigen {
            return Ok([
                self.spectral_matrix(c, |z| (z * dt).exp()),
                self.spectral_matrix(c, |z| c64::new(1.0, 0.0) - (z * dt).exp()),
                self.spectral_matrix(c, |z| c64::new(1.0, 0.0) - phi1(z * dt)),
            ]);
        }
        let g = self.generator();
        let phi = expm(&(g.clone() * faer::Scale(dt)));
        let id = Mat::<f64>::identity(n, n);
        let mut rhs = (&phi - &id) * faer::Scale(1.0 / dt);
        g.partial_piv_lu().solve_in_place(rhs.as_mut());
        Ok([phi.clone(), &id - &phi, &id - &rhs])
    }
}

/// `(e^z - 1) / z`, accurate near zero.
fn phi1(z: c64) -> c64 {
    if z.norm() < 1e-5 {
        c64::new(1.0, 0.0) + z / 2.0 + z * z / 6.0
    } else {
        (z.exp() - c64::new(1.0, 0.0)) / z
    }
}

/// Mild solution `x(t) = exp(tG) x0 + int_0^t (-G) exp((t-s)G) b(s) ds` at
/// `t_k = k dt`, with `b` the lift series sampled at the same points and
/// interpolated linearly in time; the convolution is integrated exactly for
/// that interpolant. The orbit part is computed by [`CoupledOperator::semigroup_apply`],
/// so zero data reproduce the orbit exactly.
pub fn duhamel_solve(
    op: &CoupledOperator,
    lift: &[StateVector],
    x0: &StateVector,
    dt: f64,
) -> Result<Vec<StateVector>> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "time step must be positive, got {dt}"
        )));
    }
    op.check_state(x0)?;
    for b in lift {
        op.check_state(b)?;
    }
    let steps = lift.len().saturating_sub(1);
    let mut out = Vec::with_capacity(steps + 1);
    out.push(x0.clone());
    if steps == 0 {
        return Ok(out);
    }
    let [phi, one_minus, slope] = op.duhamel_propagators(dt)?;
    let n = op.dim();
    let mut conv = vec![0.0; n];
    for k in 0..steps {
        let db: Vec<f64> = lift[k + 1]
            .0
            .iter()
            .zip(&lift[k].0)
            .map(|(a, b)| a - b)
            .collect();
        let a = matvec(&phi, &conv);
        let b = matvec(&one_minus, &lift[k].0);
        let c = matvec(&slope, &db);
        for i in 0..n {
            conv[i] = a[i] + b[i] + c[i];
        }
        let mut x = op.semigroup_apply((k + 1) as f64 * dt, x0)?;
        for (xi, ci) in x.0.iter_mut().zip(&conv) {
            *xi += ci;
        }
        out.push(x);
    }
    Ok(out)
}

/// One entry of a smoothing measurement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingRow {
    pub t: f64,
    pub alpha: f64,
    pub value: f64,
}

/// Measured `t^alpha |(lambda0 I - A)^alpha e^{tG}|` values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingTable {
    pub rows: Vec<SmoothingRow>,
    /// Supremum over the rows: the measured smoothing constant.
    pub constant: f64,
    pub median: f64,
    /// No value exceeds three times the median.
    pub bounded: bool,
}

impl SmoothingTable {
    pub fn from_rows(rows: Vec<SmoothingRow>) -> Self {
        let mut vals: Vec<f64> = rows.iter().map(|r| r.value).collect();
        vals.sort_by(f64::total_cmp);
        let median = if vals.is_empty() {
            0.0
        } else if vals.len() % 2 == 1 {
            vals[vals.len() / 2]
        } else {
            0.5 * (vals[vals.len() / 2 - 1] + vals[vals.len() / 2])
        };
        let constant = vals.last().copied().unwrap_or(0.0);
        Self {
            rows,
            constant,
            median,
            bounded: constant <= 3.0 * median,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,alpha,value\n");
        for r in &self.rows {
            s.push_str(&format!("{:e},{},{:e}\n", r.t, r.alpha, r.value));
        }
        s
    }
}

/// Result of [`CoupledOperator::analyticity_probe`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticityReport {
    pub lambda0: f64,
    pub trials: usize,
    /// Smallest sampled ratio, `+inf` for zero trials.
    pub omega0: f64,
    pub worst_trial: Option<usize>,
}

/// Log-spaced probe times between `lo` and `hi`.
pub fn log_times(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
        .collect()
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "time must be nonnegative, got {t}"
        )));
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=2.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!(
            "power must lie in [0, 2], got {alpha}"
        )));
    }
    Ok(())
}

fn no_eigen(what: &str) -> Error {
    Error::Method(format!(
        "eigen path unavailable for the {what} (eigenvectors too ill-conditioned)"
    ))
}

fn matvec(m: &Mat<f64>, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; m.nrows()];
    for (j, xj) in x.iter().enumerate() {
        if *xj == 0.0 {
            continue;
        }
        let col = m.col(j);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += col[i] * xj;
        }
    }
    y
}

fn norm_one(m: &Mat<f64>) -> f64 {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Largest singular value.
pub fn spectral_norm(m: &Mat<f64>) -> Result<f64> {
    let s = m
        .singular_values()
        .map_err(|e| Error::Singular(format!("svd: {e:?}")))?;
    Ok(s.first().copied().unwrap_or(0.0))
}

/// Matrix exponential by scaling and squaring with the degree-13 Padé
/// approximant.
pub fn expm(a: &Mat<f64>) -> Mat<f64> {
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    const THETA13: f64 = 5.371920351148152;
    let n = a.nrows();
    let norm = norm_one(a);
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = a * faer::Scale(0.5f64.powi(s));
    let id = Mat::<f64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u =
        &a6 * (&a6 * faer::Scale(B[13]) + &a4 * faer::Scale(B[11]) + &a2 * faer::Scale(B[9]));
    let u_poly = inner_u
        + &a6 * faer::Scale(B[7])
        + &a4 * faer::Scale(B[5])
        + &a2 * faer::Scale(B[3])
        + &id * faer::Scale(B[1]);
    let u = &a * &u_poly;
    let inner_v =
        &a6 * (&a6 * faer::Scale(B[12]) + &a4 * faer::Scale(B[10]) + &a2 * faer::Scale(B[8]));
    let v = inner_v
        + &a6 * faer::Scale(B[6])
        + &a4 * faer::Scale(B[4])
        + &a2 * faer::Scale(B[2])
        + &id * faer::Scale(B[0]);
    let p = &v - &u;
    let mut r = &v + &u;
    p.partial_piv_lu().solve_in_place(r.as_mut());
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::leray::Projector;

    fn params(beta: [f64; 2]) -> PhysicalParams {
        PhysicalParams {
            nu: 1.0,
            mu: 1.0,
            beta,
            lambda0: 1.0,
        }
    }

    fn random_state(op: &CoupledOperator, seed: u64) -> StateVector {
        let mut rng = Seeded::new(seed);
        StateVector((0..op.dim()).map(|_| rng.normal()).collect())
    }

    #[test]
    fn basis_is_orthonormal_and_solenoidal() {
        let g = Grid::unit(5).unwrap();
        let op = assemble_coupled_operator(&g, None, &params([0.0, 0.0])).unwrap();
        let x = random_state(&op, 3);
        let f = op.decode(&x);
        let div = crate::mesh::divergence(&g, &f.vel);
        assert!(div.max_abs() < 1e-11 * f.vel.max_abs());
        assert_eq!(f.vel.normal_trace_max(), 0.0);
        assert!(op.encode(&f).distance(&x) < 1e-14 * x.norm() * 10.0);
        let l2 = crate::mesh::inner_vector(&g, &f.vel, &f.vel)
            + crate::mesh::inner_scalar(&g, &f.temp, &f.temp);
        assert!((l2 - x.norm().powi(2)).abs() < 1e-12 * l2);
    }

    #[test]
    fn rest_operator_blocks() {
        let g = Grid::unit(4).unwrap();
        let op = assemble_coupled_operator(&g, None, &params([0.0, 0.0])).unwrap();
        let (v, t) = op.blocks();
        let m = op.matrix();
        let mut off = 0.0f64;
        let mut asym = 0.0f64;
        let mut scale = 0.0f64;
        for i in 0..op.dim() {
            for j in 0..op.dim() {
                scale = scale.max(m[(i, j)].abs());
                if v.contains(&i) != v.contains(&j) {
                    off = off.max(m[(i, j)].abs());
                }
                if v.contains(&i) && v.contains(&j) {
                    asym = asym.max((m[(i, j)] - m[(j, i)]).abs());
                }
            }
        }
        assert_eq!(off, 0.0);
        assert!(asym < 1e-10 * scale);
        let vb = Mat::from_fn(v.len(), v.len(), |i, j| -m[(i, j)]);
        assert!(vb.self_adjoint_eigenvalues(faer::Side::Lower).unwrap()[0] > 0.0);

        let op = assemble_coupled_operator(&g, None, &params([0.0, 1.0])).unwrap();
        let m = op.matrix();
        let lower = t
            .clone()
            .flat_map(|i| v.clone().map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)].abs())
            .fold(0.0, f64::max);
        let upper = v
            .clone()
            .flat_map(|i| t.clone().map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)].abs())
            .fold(0.0, f64::max);
        assert_eq!(lower, 0.0);
        assert!(upper > 0.0);
    }

    #[test]
    fn matrix_matches_matrix_free_action() {
        let g = Grid::unit(5).unwrap();
        let mut rng = Seeded::new(8);
        let z = crate::leray::project(&g, &rng.smooth_vector(&g, 3))
            .unwrap()
            .solenoidal;
        let pt = LinearizationPoint::new(&g, z, rng.smooth_scalar(&g, 3), BoundaryTrace::zeros(&g))
            .unwrap();
        let prm = params([0.3, 1.0]).with_lambda0(30.0);
        let op = assemble_coupled_operator(&g, Some(&pt), &prm).unwrap();
        let x = random_state(&op, 5);
        let f = op.decode(&x);
        let lin = LinearizedOperator::steady(&g, &prm.with_lambda0(0.0), &pt);
        let r = lin.eval(
            &f.vel,
            &ScalarField::zeros(&g),
            &f.temp,
            &BoundaryTrace::zeros(&g),
        );
        let pv = Projector::new(&g).unwrap().project(&r.momentum).unwrap();
        let got = op.decode(&op.apply(&x));
        let mut dv = got.vel.clone();
        dv.axpy(1.0, &pv);
        let mut dt = got.temp.clone();
        dt.axpy(1.0, &r.temperature);
        let scale = pv.max_abs().max(r.temperature.max_abs());
        assert!(dv.max_abs() < 1e-12 * scale, "{}", dv.max_abs() / scale);
        assert!(dt.max_abs() < 1e-12 * scale);
    }

    #[test]
    fn semigroup_identities() {
        let g = Grid::unit(6).unwrap();
        let op = assemble_coupled_operator(&g, None, &params([0.0, 1.0])).unwrap();
        assert!(op.eigen_condition().is_some());
        let x = random_state(&op, 1);
        assert_eq!(op.semigroup_apply(0.0, &x).unwrap(), x);
        let (s, t) = (0.37, 0.61);
        let a = op.semigroup_apply(s + t, &x).unwrap();
        let b = op
            .semigroup_apply(s, &op.semigroup_apply(t, &x).unwrap())
            .unwrap();
        assert!(a.distance(&b) <= 1e-9 * x.norm());
        for t in [1e-3, 0.05, 0.8] {
            let e = op.semigroup_apply_with(t, &x, Method::Eigen).unwrap();
            let p = op
                .semigroup_apply_with(t, &x, Method::ScalingSquaring)
                .unwrap();
            assert!(
                e.distance(&p) <= 1e-9 * p.norm(),
                "t={t}: {}",
                e.distance(&p) / p.norm()
            );
        }
        assert!(op.semigroup_apply(-1.0, &x).is_err());
    }

    #[test]
    fn expm_of_rotation() {
        let a = Mat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) => -3.0,
            (1, 0) => 3.0,
            _ => 0.0,
        });
        let e = expm(&a);
        assert!((e[(0, 0)] - 3f64.cos()).abs() < 1e-14);
        assert!((e[(1, 0)] - 3f64.sin()).abs() < 1e-14);
    }

    #[test]
    fn fractional_powers() {
        let g = Grid::unit(4).unwrap();
        let op = assemble_coupled_operator(&g, None, &params([0.0, 1.0])).unwrap();
        let x = random_state(&op, 2);
        assert_eq!(op.fractional_power_apply(0.0, &x).unwrap().0, x);
        let direct = op.apply_shifted(&x);
        let one = op.fractional_power_with(1.0, &x, Method::Eigen).unwrap();
        assert!(one.distance(&direct) <= 1e-9 * direct.norm());
        let (h, m) = op.fractional_power_apply(0.5, &x).unwrap();
        assert_eq!(m, Method::Eigen);
        let hh = op.fractional_power_apply(0.5, &h).unwrap().0;
        assert!(hh.distance(&direct) <= 1e-8 * direct.norm());
        for alpha in [0.25, 0.5, 1.3] {
            let e = op.fractional_power_with(alpha, &x, Method::Eigen).unwrap();
            let b = op
                .fractional_power_with(alpha, &x, Method::Balakrishnan)
                .unwrap();
            assert!(
                e.distance(&b) <= 1e-6 * e.norm(),
                "alpha={alpha}: {}",
                e.distance(&b) / e.norm()
            );
        }
        assert!(op.fractional_power_apply(2.5, &x).is_err());
    }

    #[test]
    fn duhamel_constant_lift_closed_form() {
        let g = Grid::unit(4).unwrap();
        let op = assemble_coupled_operator(&g, None, &params([0.0, 1.0])).unwrap();
        let x0 = random_state(&op, 4);
        let b = random_state(&op, 5);
        let dt = 0.05;
        let out = duhamel_solve(&op, &vec![b.clone(); 11], &x0, dt).unwrap();
        for (k, x) in out.iter().enumerate() {
            let mut d = x0.clone();
            d.axpy(-1.0, &b);
            let mut want = op.semigroup_apply(k as f64 * dt, &d).unwrap();
            want.axpy(1.0, &b);
            assert!(x.distance(&want) <= 1e-8 * want.norm());
        }
        let zero = duhamel_solve(&op, &vec![StateVector::zeros(op.dim()); 5], &x0, dt).unwrap();
        for (k, x) in zero.iter().enumerate() {
            assert_eq!(*x, op.semigroup_apply(k as f64 * dt, &x0).unwrap());
        }
    }

    #[test]
    fn contraction_and_smoothing() {
        let g = Grid::unit(4).unwrap();
        let op =
            assemble_coupled_operator(&g, None, &params([0.0, 1.0]).with_lambda0(1.5)).unwrap();
        let ts = log_times(1e-4, 1.0, 9);
        let t0 = op.smoothing_probe(0.0, &ts).unwrap();
        assert!(t0.rows.iter().all(|r| r.value <= 1.0 + 1e-9));
        let t1 = op.smoothing_probe(0.25, &ts).unwrap();
        assert!(t1.constant.is_finite() && t1.constant > 0.0);
        assert!(t1.to_csv().starts_with("t,alpha,value\n"));
        assert!(op.smoothing_probe(0.25, &[0.1, 0.05]).is_err());
    }

    #[test]
    fn analyticity_ratio_is_scale_invariant_and_positive() {
        let g = Grid::unit(4).unwrap();
        let op = assemble_coupled_operator(&g, None, &params([0.0, 0.0])).unwrap();
        let x = random_state(&op, 6);
        let r = op.analyticity_ratio(&x);
        assert!((op.analyticity_ratio(&x.scaled(2.0)) - r).abs() <= 1e-12 * r);
        let rep = op.analyticity_probe(50, 1).unwrap();
        assert!(rep.omega0 >= 1.0 - 1e-12, "{}", rep.omega0);
        assert_eq!(op.analyticity_probe(0, 1).unwrap().omega0, f64::INFINITY);
    }

    #[test]
    fn assembly_cap() {
        let g = Grid::unit(13).unwrap();
        assert!(matches!(
            assemble_coupled_operator(&g, None, &params([0.0, 1.0])),
            Err(Error::TooLarge(_))
        ));
    }
}
