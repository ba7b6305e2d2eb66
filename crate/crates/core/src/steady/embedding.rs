//! Empirical discrete Sobolev embedding constants `|u|_L4 <= C |u|_H1`.
//!
//! The ratio is maximised over zero-trace velocities (without the
//! divergence constraint, which only enlarges the admissible set) and over
//! all cell scalars, by random starts followed by normalised gradient ascent
//! on the log-ratio with backtracking.

use crate::mesh::{
    dirichlet_energy, inner_scalar, inner_vector, l4_norm_scalar, l4_norm_vector,
    laplacian_dirichlet, laplacian_neumann, neumann_energy, Grid, ScalarField, VectorField,
};
use crate::rng::Seeded;
use serde::{Deserialize, Serialize};

/// Estimated constants before any safety factor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingConstants {
    /// Velocity constant.
    pub c: f64,
    /// Scalar constant.
    pub c1: f64,
}

pub const DEFAULT_RESTARTS: usize = 200;
const ASCENT_STEPS: usize = 25;

/// Best ratios found from `restarts` starts each.
pub fn estimate_embedding_constants(grid: &Grid, restarts: usize, seed: u64) -> EmbeddingConstants {
    let mut rng = Seeded::new(seed);
    let mut c: f64 = 0.0;
    let mut c1: f64 = 0.0;
    for k in 0..restarts {
        let u0 = vector_start(grid, &mut rng, k);
        c = c.max(ascend(
            u0,
            |u| vector_ratio(grid, u),
            |u| vector_log_gradient(grid, u),
        ));
        let t0 = scalar_start(grid, &mut rng, k);
        c1 = c1.max(ascend(
            t0,
            |t| scalar_ratio(grid, t),
            |t| scalar_log_gradient(grid, t),
        ));
    }
    EmbeddingConstants { c, c1 }
}

trait Flat: Clone {
    fn flat(&self) -> Vec<f64>;
    fn set_flat(&mut self, x: &[f64]);
}

impl Flat for VectorField {
    fn flat(&self) -> Vec<f64> {
        self.u.iter().chain(&self.v).copied().collect()
    }
    fn set_flat(&mut self, x: &[f64]) {
        let n = self.u.len();
        self.u.copy_from_slice(&x[..n]);
        self.v.copy_from_slice(&x[n..]);
    }
}

impl Flat for ScalarField {
    fn flat(&self) -> Vec<f64> {
        self.data.clone()
    }
    fn set_flat(&mut self, x: &[f64]) {
        self.data.copy_from_slice(x);
    }
}

fn ascend<F: Flat>(mut x: F, ratio: impl Fn(&F) -> f64, grad: impl Fn(&F) -> F) -> f64 {
    let mut best = ratio(&x);
    if !best.is_finite() {
        return 0.0;
    }
    let mut step = 0.3;
    for _ in 0..ASCENT_STEPS {
        let g = grad(&x).flat();
        let xv = x.flat();
        let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        let xn = xv.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gn == 0.0 || xn == 0.0 {
            break;
        }
        let mut improved = false;
        while step > 1e-4 {
            let cand: Vec<f64> = xv
                .iter()
                .zip(&g)
                .map(|(a, b)| a + step * xn * b / gn)
                .collect();
            let mut y = x.clone();
            y.set_flat(&cand);
            let r = ratio(&y);
            if r > best {
                best = r;
                x = y;
                step *= 1.5;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    best
}

fn vector_ratio(grid: &Grid, u: &VectorField) -> f64 {
    let h1 = (inner_vector(grid, u, u) + dirichlet_energy(grid, u, None)).sqrt();
    l4_norm_vector(grid, u) / h1
}

fn scalar_ratio(grid: &Grid, t: &ScalarField) -> f64 {
    let h1 = (inner_scalar(grid, t, t) + neumann_energy(grid, t)).sqrt();
    l4_norm_scalar(grid, t) / h1
}

/// Gradient of `log |u|_L4 - log |u|_H1` with respect to the interior
/// edge values.
fn vector_log_gradient(grid: &Grid, u: &VectorField) -> VectorField {
    let a = grid.cell_area();
    let (nx, ny) = (grid.nx, grid.ny);
    let mut g4 = VectorField::zeros(grid);
    let mut n4 = 0.0;
    for j in 0..ny {
        for i in 0..nx {
            let ux = 0.5 * (u.u_at(i, j) + u.u_at(i + 1, j));
            let uy = 0.5 * (u.v_at(i, j) + u.v_at(i, j + 1));
            let m = ux * ux + uy * uy;
            n4 += a * m * m;
            *g4.u_mut(i, j) += 2.0 * a * m * ux;
            *g4.u_mut(i + 1, j) += 2.0 * a * m * ux;
            *g4.v_mut(i, j) += 2.0 * a * m * uy;
            *g4.v_mut(i, j + 1) += 2.0 * a * m * uy;
        }
    }
    let h = inner_vector(grid, u, u) + dirichlet_energy(grid, u, None);
    let mut gh = u.scaled(2.0 * a);
    gh.axpy(-2.0 * a, &laplacian_dirichlet(grid, u, None));
    let mut out = g4.scaled(1.0 / (4.0 * n4));
    out.axpy(-1.0 / (2.0 * h), &gh);
    out.clear_normal_trace();
    out
}

fn scalar_log_gradient(grid: &Grid, t: &ScalarField) -> ScalarField {
    let a = grid.cell_area();
    let n4: f64 = t.data.iter().map(|v| a * v.powi(4)).sum();
    let h = inner_scalar(grid, t, t) + neumann_energy(grid, t);
    let lap = laplacian_neumann(grid, t, None);
    let data = t
        .data
        .iter()
        .zip(&lap.data)
        .map(|(v, l)| 4.0 * a * v.powi(3) / (4.0 * n4) - (2.0 * a * (v - l)) / (2.0 * h))
        .collect();
    ScalarField {
        nx: t.nx,
        ny: t.ny,
        data,
    }
}

fn bump(grid: &Grid, rng: &mut Seeded) -> impl Fn(f64, f64) -> f64 {
    let (cx, cy) = (rng.range(0.0, grid.lx), rng.range(0.0, grid.ly));
    let w = rng.range(1.0, 4.0) * grid.h();
    move |x, y| (-((x - cx).powi(2) + (y - cy).powi(2)) / (w * w)).exp()
}

fn vector_start(grid: &Grid, rng: &mut Seeded, k: usize) -> VectorField {
    let mut u = match k % 3 {
        0 => rng.vector_noise(grid),
        1 => rng.smooth_vector(grid, 3),
        _ => {
            let b = bump(grid, rng);
            let ang = rng.range(0.0, std::f64::consts::TAU);
            VectorField::from_fn(grid, |x, y| [ang.cos() * b(x, y), ang.sin() * b(x, y)])
        }
    };
    u.clear_normal_trace();
    u
}

fn scalar_start(grid: &Grid, rng: &mut Seeded, k: usize) -> ScalarField {
    match k % 3 {
        0 => rng.scalar_noise(grid),
        1 => rng.smooth_scalar(grid, 3),
        _ => ScalarField::from_fn(grid, bump(grid, rng)),
    }
}
