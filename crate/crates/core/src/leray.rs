//! Discrete Helmholtz (Leray) projection onto solenoidal fields with zero
//! normal trace, its gradient complement, and harmonic extensions of normal
//! boundary data.

use crate::error::{Error, Result};
use crate::linalg::{probe_matrix, DofTag, Factorized};
use crate::mesh::{
    divergence, gradient, gradient_with_flux, inner_vector, laplacian_neumann, norm_vector,
    BoundaryTrace, CoupledField, Grid, ScalarField, VectorField,
};

/// Result of splitting a velocity into solenoidal and gradient parts.
#[derive(Clone, Debug)]
pub struct LerayDecomposition {
    pub solenoidal: VectorField,
    pub potential: ScalarField,
    pub gradient_part: VectorField,
}

/// Factorised pure-Neumann Laplacian with the mean pinned by a bordering
/// row. Immutable after construction, so it can be shared across threads.
#[derive(Debug)]
pub struct NeumannSolver {
    grid: Grid,
    fact: Factorized,
}

impl NeumannSolver {
    pub fn new(grid: &Grid) -> Result<Self> {
        let n = grid.n_cells();
        let tags: Vec<DofTag> = (0..n)
            .map(|k| DofTag {
                kind: 0,
                i: k % grid.nx,
                j: k / grid.nx,
            })
            .collect();
        let area = grid.cell_area();
        let mut trip = probe_matrix(&tags, |x| {
            let q = ScalarField {
                nx: grid.nx,
                ny: grid.ny,
                data: x.to_vec(),
            };
            laplacian_neumann(grid, &q, None)
                .data
                .iter()
                .map(|v| v * area)
                .collect()
        });
        for k in 0..n {
            trip.push((k, n, area));
            trip.push((n, k, area));
        }
        Ok(Self {
            grid: *grid,
            fact: Factorized::new(n + 1, &trip)?,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Mean-zero `q` with `lap q = rhs` and homogeneous flux. Any
    /// incompatibility of `rhs` is absorbed by the bordering multiplier,
    /// which is returned alongside.
    pub fn solve_homogeneous(&self, rhs: &ScalarField) -> (ScalarField, f64) {
        let n = self.grid.n_cells();
        let area = self.grid.cell_area();
        let mut b: Vec<f64> = rhs.data.iter().map(|v| v * area).collect();
        b.push(0.0);
        let x = self.fact.solve(&b);
        let q = ScalarField {
            nx: self.grid.nx,
            ny: self.grid.ny,
            data: x[..n].to_vec(),
        };
        (q, x[n])
    }

    /// Mean-zero solution of `lap q = rhs`, `dq/dn = flux` on the walls.
    pub fn solve(&self, rhs: &ScalarField, flux: &BoundaryTrace) -> Result<ScalarField> {
        let g = &self.grid;
        g.check_scalar(rhs)?;
        g.check_trace(flux)?;
        let total = rhs.data.iter().sum::<f64>() * g.cell_area();
        let net = flux.net_heat_flux(g);
        let scale = rhs.max_abs() * g.lx * g.ly + flux.max_abs() * BoundaryTrace::perimeter(g);
        let defect = total - net;
        if defect.abs() > 1e-10 * scale.max(1.0) {
            return Err(Error::Incompatible { flux: defect });
        }
        // move the boundary flux to the right-hand side
        let zero = ScalarField::zeros(g);
        let mut r = rhs.clone();
        r.axpy(-1.0, &laplacian_neumann(g, &zero, Some(flux)));
        Ok(self.solve_homogeneous(&r).0)
    }
}

/// Leray projector with a cached Neumann factorisation.
#[derive(Debug)]
pub struct Projector {
    neumann: NeumannSolver,
}

impl Projector {
    pub fn new(grid: &Grid) -> Result<Self> {
        Ok(Self {
            neumann: NeumannSolver::new(grid)?,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.neumann.grid
    }

    pub fn neumann(&self) -> &NeumannSolver {
        &self.neumann
    }

    /// Splits `w` as `solenoidal + grad q` with `dq/dn = w . n`.
    pub fn decompose(&self, w: &VectorField) -> Result<LerayDecomposition> {
        let g = self.grid();
        g.check_vector(w)?;
        let mut interior = w.clone();
        interior.clear_normal_trace();
        let (q, _) = self.neumann.solve_homogeneous(&divergence(g, &interior));
        let mut gradient_part = gradient(g, &q);
        // the gradient part carries the wall-normal data exactly
        copy_normal_entries(w, &mut gradient_part);
        let mut solenoidal = interior;
        solenoidal.axpy(-1.0, &gradient(g, &q));
        Ok(LerayDecomposition {
            solenoidal,
            potential: q,
            gradient_part,
        })
    }

    pub fn project(&self, w: &VectorField) -> Result<VectorField> {
        Ok(self.decompose(w)?.solenoidal)
    }

    /// Gradient of the discrete harmonic function with normal derivative
    /// `g . n`. A nonzero net flux is absorbed by the mean multiplier.
    pub fn harmonic_extension(&self, trace: &BoundaryTrace) -> Result<VectorField> {
        Ok(self.harmonic_potential(trace)?.1)
    }

    /// Potential and its flux-carrying gradient.
    pub fn harmonic_potential(&self, trace: &BoundaryTrace) -> Result<(ScalarField, VectorField)> {
        let g = self.grid();
        g.check_trace(trace)?;
        let mut b = VectorField::zeros(g);
        b.set_normal_trace(trace);
        let mut rhs = divergence(g, &b);
        rhs.scale(-1.0);
        let (q, _) = self.neumann.solve_homogeneous(&rhs);
        let mut grad = gradient(g, &q);
        grad.set_normal_trace(trace);
        Ok((q, grad))
    }

    /// Applies the projection to the velocity and leaves the temperature.
    pub fn project_coupled(&self, x: &CoupledField) -> Result<CoupledField> {
        Ok(CoupledField {
            vel: self.project(&x.vel)?,
            temp: x.temp.clone(),
        })
    }
}

fn copy_normal_entries(from: &VectorField, to: &mut VectorField) {
    let (nx, ny) = (from.nx, from.ny);
    for j in 0..ny {
        *to.u_mut(0, j) = from.u_at(0, j);
        *to.u_mut(nx, j) = from.u_at(nx, j);
    }
    for i in 0..nx {
        *to.v_mut(i, 0) = from.v_at(i, 0);
        *to.v_mut(i, ny) = from.v_at(i, ny);
    }
}

/// One-shot projection; builds a fresh factorisation.
pub fn project(grid: &Grid, w: &VectorField) -> Result<LerayDecomposition> {
    Projector::new(grid)?.decompose(w)
}

/// One-shot harmonic extension.
pub fn harmonic_extension(grid: &Grid, trace: &BoundaryTrace) -> Result<VectorField> {
    Projector::new(grid)?.harmonic_extension(trace)
}

/// One-shot Neumann solve with compatibility check.
pub fn solve_neumann_poisson(
    grid: &Grid,
    rhs: &ScalarField,
    flux: &BoundaryTrace,
) -> Result<ScalarField> {
    NeumannSolver::new(grid)?.solve(rhs, flux)
}

/// Maximum cell divergence is at most `tol`.
pub fn is_solenoidal(grid: &Grid, w: &VectorField, tol: f64) -> bool {
    divergence(grid, w).max_abs() <= tol
}

/// Relative orthogonality defect `<Pw, w - Pw> / |w|^2`.
pub fn orthogonality_defect(grid: &Grid, d: &LerayDecomposition, w: &VectorField) -> f64 {
    let n2 = inner_vector(grid, w, w).max(f64::MIN_POSITIVE);
    inner_vector(grid, &d.solenoidal, &d.gradient_part).abs() / n2
}

/// Flux-carrying gradient helper re-exported for lifting code.
pub fn flux_gradient(grid: &Grid, q: &ScalarField, trace: &BoundaryTrace) -> VectorField {
    gradient_with_flux(grid, q, Some(trace))
}

/// Relative size of the part of `w` removed by the projection.
pub fn gradient_fraction(grid: &Grid, d: &LerayDecomposition, w: &VectorField) -> f64 {
    norm_vector(grid, &d.gradient_part) / norm_vector(grid, w).max(f64::MIN_POSITIVE)
}
