//! Factorised `mass - coeff * lap` solves for the velocity (Dirichlet) and
//! the temperature (Neumann), used by the projection scheme.

use crate::error::Result;
use crate::linalg::{probe_matrix, DofTag, Factorized};
use crate::mesh::{
    laplacian_dirichlet, laplacian_neumann, BoundaryTrace, Grid, ScalarField, VectorField,
};

pub(crate) struct VectorHelmholtz {
    grid: Grid,
    mass: f64,
    nu: f64,
    tags: Vec<DofTag>,
    fact: Factorized,
}

impl VectorHelmholtz {
    pub fn new(grid: &Grid, mass: f64, nu: f64) -> Result<Self> {
        let (nx, ny) = (grid.nx, grid.ny);
        let mut tags = Vec::with_capacity((nx - 1) * ny + nx * (ny - 1));
        for j in 0..ny {
            for i in 1..nx {
                tags.push(DofTag { kind: 0, i, j });
            }
        }
        for j in 1..ny {
            for i in 0..nx {
                tags.push(DofTag { kind: 1, i, j });
            }
        }
        let mut me = Self {
            grid: *grid,
            mass,
            nu,
            tags,
            fact: Factorized::new(1, &[(0, 0, 1.0)])?,
        };
        let trip = probe_matrix(&me.tags, |x| {
            let w = me.unpack(x);
            me.pack(&me.apply(&w, None))
        });
        me.fact = Factorized::new(me.tags.len(), &trip)?;
        Ok(me)
    }

    fn apply(&self, w: &VectorField, trace: Option<&BoundaryTrace>) -> VectorField {
        let mut out = w.scaled(self.mass);
        out.axpy(-self.nu, &laplacian_dirichlet(&self.grid, w, trace));
        out.clear_normal_trace();
        out
    }

    fn unpack(&self, x: &[f64]) -> VectorField {
        let mut w = VectorField::zeros(&self.grid);
        for (t, &v) in self.tags.iter().zip(x) {
            if t.kind == 0 {
                *w.u_mut(t.i, t.j) = v;
            } else {
                *w.v_mut(t.i, t.j) = v;
            }
        }
        w
    }

    fn pack(&self, w: &VectorField) -> Vec<f64> {
        self.tags
            .iter()
            .map(|t| {
                if t.kind == 0 {
                    w.u_at(t.i, t.j)
                } else {
                    w.v_at(t.i, t.j)
                }
            })
            .collect()
    }

    /// `w` with `mass w - nu lap(w; trace) = rhs` on interior edges and the
    /// wall-normal entries of `trace`.
    pub fn solve(&self, rhs: &VectorField, trace: &BoundaryTrace) -> VectorField {
        let mut lifted = VectorField::zeros(&self.grid);
        lifted.set_normal_trace(trace);
        let mut b = rhs.clone();
        b.axpy(-1.0, &self.apply(&lifted, Some(trace)));
        let mut w = self.unpack(&self.fact.solve(&self.pack(&b)));
        w.set_normal_trace(trace);
        w
    }
}

pub(crate) struct ScalarHelmholtz {
    grid: Grid,
    mu: f64,
    fact: Factorized,
}

impl ScalarHelmholtz {
    pub fn new(grid: &Grid, mass: f64, mu: f64) -> Result<Self> {
        let n = grid.n_cells();
        let tags: Vec<DofTag> = (0..n)
            .map(|k| DofTag {
                kind: 0,
                i: k % grid.nx,
                j: k / grid.nx,
            })
            .collect();
        let trip = probe_matrix(&tags, |x| {
            let q = ScalarField {
                nx: grid.nx,
                ny: grid.ny,
                data: x.to_vec(),
            };
            let l = laplacian_neumann(grid, &q, None);
            q.data
                .iter()
                .zip(&l.data)
                .map(|(a, b)| mass * a - mu * b)
                .collect()
        });
        Ok(Self {
            grid: *grid,
            mu,
            fact: Factorized::new(n, &trip)?,
        })
    }

    /// `phi` with `mass phi - mu lap(phi; flux) = rhs`.
    pub fn solve(&self, rhs: &ScalarField, flux: &BoundaryTrace) -> ScalarField {
        let mut b = rhs.clone();
        b.axpy(
            self.mu,
            &laplacian_neumann(&self.grid, &ScalarField::zeros(&self.grid), Some(flux)),
        );
        ScalarField {
            nx: self.grid.nx,
            ny: self.grid.ny,
            data: self.fact.solve(&b.data),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Seeded;

    #[test]
    fn vector_solve_inverts_the_operator() {
        let g = Grid::unit(8).unwrap();
        let mut rng = Seeded::new(3);
        let tr = rng.compatible_trace(&g, 3);
        let h = VectorHelmholtz::new(&g, 50.0, 0.7).unwrap();
        let rhs = {
            let mut r = rng.vector_noise(&g);
            r.clear_normal_trace();
            r
        };
        let w = h.solve(&rhs, &tr);
        let mut res = h.apply(&w, Some(&tr));
        res.axpy(-1.0, &rhs);
        assert!(res.max_abs() < 1e-10, "{}", res.max_abs());
    }

    #[test]
    fn scalar_solve_inverts_the_operator() {
        let g = Grid::unit(8).unwrap();
        let mut rng = Seeded::new(4);
        let tr = rng.compatible_trace(&g, 3);
        let h = ScalarHelmholtz::new(&g, 20.0, 1.3).unwrap();
        let rhs = rng.scalar_noise(&g);
        let phi = h.solve(&rhs, &tr);
        let mut res = phi.scaled(20.0);
        res.axpy(-1.3, &laplacian_neumann(&g, &phi, Some(&tr)));
        res.axpy(-1.0, &rhs);
        assert!(res.max_abs() < 1e-10, "{}", res.max_abs());
    }
}
