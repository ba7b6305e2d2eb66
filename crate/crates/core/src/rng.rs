//! Seeded random sampling shared by probes, studies and tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::mesh::{BoundaryTrace, CoupledField, Grid, ScalarField, VectorField};

/// Deterministic generator; the same seed always yields the same stream.
#[derive(Clone, Debug)]
pub struct Seeded(ChaCha8Rng);

impl Seeded {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn uniform(&mut self) -> f64 {
        self.0.random::<f64>()
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn normal(&mut self) -> f64 {
        self.0.sample(StandardNormal)
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.0.random_range(0..n)
    }

    /// Grid noise on every velocity entry, walls included.
    pub fn vector_noise(&mut self, grid: &Grid) -> VectorField {
        let mut w = VectorField::zeros(grid);
        w.u.iter_mut()
            .chain(w.v.iter_mut())
            .for_each(|x| *x = self.normal());
        w
    }

    pub fn scalar_noise(&mut self, grid: &Grid) -> ScalarField {
        let mut s = ScalarField::zeros(grid);
        s.data.iter_mut().for_each(|x| *x = self.normal());
        s
    }

    /// Random low-mode trigonometric velocity, identical in shape on every
    /// grid for the same seed (grid refinement preserves its character).
    pub fn smooth_vector(&mut self, grid: &Grid, modes: usize) -> VectorField {
        let c = self.coeffs(2 * modes * modes);
        let (lx, ly) = (grid.lx, grid.ly);
        VectorField::from_fn(grid, move |x, y| smooth_eval(&c, modes, x / lx, y / ly))
    }

    pub fn smooth_scalar(&mut self, grid: &Grid, modes: usize) -> ScalarField {
        let c = self.coeffs(2 * modes * modes);
        let (lx, ly) = (grid.lx, grid.ly);
        ScalarField::from_fn(grid, move |x, y| smooth_eval(&c, modes, x / lx, y / ly)[0])
    }

    pub fn coupled_noise(&mut self, grid: &Grid) -> CoupledField {
        CoupledField {
            vel: self.vector_noise(grid),
            temp: self.scalar_noise(grid),
        }
    }

    /// Smooth boundary data with zero net velocity flux: the velocity is
    /// the curl of a random low-mode stream function (flux-free in the
    /// continuum), with the O(h^2) discrete flux defect removed from the
    /// right wall.
    pub fn compatible_trace(&mut self, grid: &Grid, modes: usize) -> BoundaryTrace {
        let cv = self.coeffs(2 * modes * modes);
        let ch = self.coeffs(2 * modes * modes);
        let (lx, ly) = (grid.lx, grid.ly);
        let mut t = BoundaryTrace::from_fns(
            grid,
            |x, y| stream_curl(&cv, modes, x / lx, y / ly, lx, ly),
            |x, y| smooth_eval(&ch, modes, x / lx, y / ly)[1],
        );
        balance_normal_flux(grid, &mut t);
        t
    }

    fn coeffs(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.normal()).collect()
    }
}

/// Curl `(d/dy, -d/dx)` of the first component of [`smooth_eval`].
fn stream_curl(c: &[f64], modes: usize, x: f64, y: f64, lx: f64, ly: f64) -> [f64; 2] {
    use std::f64::consts::PI;
    let mut out = [0.0; 2];
    let mut k = 0;
    for a in 0..modes {
        for b in 0..modes {
            let decay = 1.0 / (1.0 + (a * a + b * b) as f64);
            let (ax, by) = (
                PI * a as f64 * x + 0.3 * b as f64,
                PI * b as f64 * y + 0.7 * a as f64,
            );
            out[0] -= decay * c[k] * ax.cos() * by.sin() * PI * b as f64 / ly;
            out[1] += decay * c[k] * ax.sin() * by.cos() * PI * a as f64 / lx;
            k += 2;
        }
    }
    out
}

fn smooth_eval(c: &[f64], modes: usize, x: f64, y: f64) -> [f64; 2] {
    let mut out = [0.0; 2];
    let mut k = 0;
    for a in 0..modes {
        for b in 0..modes {
            let decay = 1.0 / (1.0 + (a * a + b * b) as f64);
            let basis = (std::f64::consts::PI * a as f64 * x + 0.3 * b as f64).cos()
                * (std::f64::consts::PI * b as f64 * y + 0.7 * a as f64).cos();
            out[0] += decay * c[k] * basis;
            out[1] += decay * c[k + 1] * basis;
            k += 2;
        }
    }
    out
}

/// Removes the net normal flux of `t` by a uniform correction on the right
/// wall.
pub fn balance_normal_flux(grid: &Grid, t: &mut BoundaryTrace) {
    let net = t.net_flux(grid);
    let right = crate::mesh::Wall::Right as usize;
    t.normal[right].iter_mut().for_each(|v| *v -= net / grid.ly);
}
