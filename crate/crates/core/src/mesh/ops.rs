//! Discrete differential operators on the staggered grid.
//!
//! Every operator reads the wall-normal velocity entries stored in the field
//! and takes tangential wall values and heat fluxes from an optional
//! [`BoundaryTrace`] (`None` means homogeneous data). Tangential ghosts use
//! linear extrapolation, `ghost = 2 g - interior`.

use super::{BoundaryTrace, Grid, ScalarField, VectorField, Wall};

const L: usize = Wall::Left as usize;
const R: usize = Wall::Right as usize;
const B: usize = Wall::Bottom as usize;
const T: usize = Wall::Top as usize;

#[inline]
fn tang(trace: Option<&BoundaryTrace>, wall: usize, m: usize) -> f64 {
    trace.map_or(0.0, |t| t.tangential[wall][m])
}

#[inline]
fn flux(trace: Option<&BoundaryTrace>, wall: usize, m: usize) -> f64 {
    trace.map_or(0.0, |t| t.flux[wall][m])
}

/// Weighted L2 inner product of cell scalars.
pub fn inner_scalar(grid: &Grid, a: &ScalarField, b: &ScalarField) -> f64 {
    grid.cell_area() * super::dot(&a.data, &b.data)
}

/// Weighted L2 inner product of staggered vectors; wall-normal entries carry
/// half weight.
pub fn inner_vector(grid: &Grid, a: &VectorField, b: &VectorField) -> f64 {
    let (nx, ny) = (grid.nx, grid.ny);
    let mut s = 0.0;
    for j in 0..ny {
        for i in 0..=nx {
            let w = if i == 0 || i == nx { 0.5 } else { 1.0 };
            s += w * a.u_at(i, j) * b.u_at(i, j);
        }
    }
    for j in 0..=ny {
        for i in 0..nx {
            let w = if j == 0 || j == ny { 0.5 } else { 1.0 };
            s += w * a.v_at(i, j) * b.v_at(i, j);
        }
    }
    s * grid.cell_area()
}

pub fn norm_scalar(grid: &Grid, a: &ScalarField) -> f64 {
    inner_scalar(grid, a, a).sqrt()
}

pub fn norm_vector(grid: &Grid, a: &VectorField) -> f64 {
    inner_vector(grid, a, a).sqrt()
}

/// Cell-centred divergence.
pub fn divergence(grid: &Grid, w: &VectorField) -> ScalarField {
    let (hx, hy) = (grid.hx(), grid.hy());
    let mut out = ScalarField::zeros(grid);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            *out.at_mut(i, j) =
                (w.u_at(i + 1, j) - w.u_at(i, j)) / hx + (w.v_at(i, j + 1) - w.v_at(i, j)) / hy;
        }
    }
    out
}

/// Gradient on interior edges; wall-normal entries are zero.
pub fn gradient(grid: &Grid, q: &ScalarField) -> VectorField {
    let (hx, hy) = (grid.hx(), grid.hy());
    let mut out = VectorField::zeros(grid);
    for j in 0..grid.ny {
        for i in 1..grid.nx {
            *out.u_mut(i, j) = (q.at(i, j) - q.at(i - 1, j)) / hx;
        }
    }
    for j in 1..grid.ny {
        for i in 0..grid.nx {
            *out.v_mut(i, j) = (q.at(i, j) - q.at(i, j - 1)) / hy;
        }
    }
    out
}

/// Gradient whose wall-normal entries carry the prescribed normal derivative.
pub fn gradient_with_flux(
    grid: &Grid,
    q: &ScalarField,
    trace: Option<&BoundaryTrace>,
) -> VectorField {
    let mut out = gradient(grid, q);
    let (nx, ny) = (grid.nx, grid.ny);
    for j in 0..ny {
        *out.u_mut(0, j) = -flux(trace, L, j);
        *out.u_mut(nx, j) = flux(trace, R, j);
    }
    for i in 0..nx {
        *out.v_mut(i, 0) = -flux(trace, B, i);
        *out.v_mut(i, ny) = flux(trace, T, i);
    }
    out
}

/// Neumann Laplacian: divergence of the flux-carrying gradient.
pub fn laplacian_neumann(
    grid: &Grid,
    q: &ScalarField,
    trace: Option<&BoundaryTrace>,
) -> ScalarField {
    divergence(grid, &gradient_with_flux(grid, q, trace))
}

/// Componentwise Dirichlet Laplacian, evaluated on interior edges (the
/// wall-normal output entries are zero).
pub fn laplacian_dirichlet(
    grid: &Grid,
    w: &VectorField,
    trace: Option<&BoundaryTrace>,
) -> VectorField {
    let (nx, ny) = (grid.nx, grid.ny);
    let (ax, ay) = (1.0 / (grid.hx() * grid.hx()), 1.0 / (grid.hy() * grid.hy()));
    let mut out = VectorField::zeros(grid);
    for j in 0..ny {
        for i in 1..nx {
            let p = w.u_at(i, j);
            let s = if j > 0 {
                w.u_at(i, j - 1)
            } else {
                2.0 * tang(trace, B, i) - p
            };
            let n = if j + 1 < ny {
                w.u_at(i, j + 1)
            } else {
                2.0 * tang(trace, T, i) - p
            };
            *out.u_mut(i, j) =
                ax * (w.u_at(i + 1, j) - 2.0 * p + w.u_at(i - 1, j)) + ay * (n - 2.0 * p + s);
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            let p = w.v_at(i, j);
            let wv = if i > 0 {
                w.v_at(i - 1, j)
            } else {
                2.0 * tang(trace, L, j) - p
            };
            let ev = if i + 1 < nx {
                w.v_at(i + 1, j)
            } else {
                2.0 * tang(trace, R, j) - p
            };
            *out.v_mut(i, j) =
                ax * (ev - 2.0 * p + wv) + ay * (w.v_at(i, j + 1) - 2.0 * p + w.v_at(i, j - 1));
        }
    }
    out
}

/// Gradient pairing of two velocities consistent with [`laplacian_dirichlet`]:
/// for fields with zero wall data, `dirichlet_form(a, b) = -<lap a, b>`.
/// Wall links use the half-cell distance to the tangential data.
pub fn dirichlet_form(
    grid: &Grid,
    a: &VectorField,
    ta: Option<&BoundaryTrace>,
    b: &VectorField,
    tb: Option<&BoundaryTrace>,
) -> f64 {
    let (nx, ny) = (grid.nx, grid.ny);
    let (hx, hy) = (grid.hx(), grid.hy());
    let (wx, wy) = (hy / hx, hx / hy);
    let mut s = 0.0;
    // x-velocity rows
    for j in 0..ny {
        for i in 0..nx {
            s += wx * (a.u_at(i + 1, j) - a.u_at(i, j)) * (b.u_at(i + 1, j) - b.u_at(i, j));
        }
        for i in 1..nx {
            if j + 1 < ny {
                s += wy * (a.u_at(i, j + 1) - a.u_at(i, j)) * (b.u_at(i, j + 1) - b.u_at(i, j));
            }
        }
    }
    for i in 1..nx {
        let da = a.u_at(i, 0) - tang(ta, B, i);
        let db = b.u_at(i, 0) - tang(tb, B, i);
        s += 2.0 * wy * da * db;
        let da = a.u_at(i, ny - 1) - tang(ta, T, i);
        let db = b.u_at(i, ny - 1) - tang(tb, T, i);
        s += 2.0 * wy * da * db;
    }
    // y-velocity rows
    for j in 0..ny {
        for i in 0..nx {
            s += wy * (a.v_at(i, j + 1) - a.v_at(i, j)) * (b.v_at(i, j + 1) - b.v_at(i, j));
        }
    }
    for j in 1..ny {
        for i in 0..nx - 1 {
            s += wx * (a.v_at(i + 1, j) - a.v_at(i, j)) * (b.v_at(i + 1, j) - b.v_at(i, j));
        }
        let da = a.v_at(0, j) - tang(ta, L, j);
        let db = b.v_at(0, j) - tang(tb, L, j);
        s += 2.0 * wx * da * db;
        let da = a.v_at(nx - 1, j) - tang(ta, R, j);
        let db = b.v_at(nx - 1, j) - tang(tb, R, j);
        s += 2.0 * wx * da * db;
    }
    s
}

/// Squared gradient seminorm of a velocity with wall data `trace`.
pub fn dirichlet_energy(grid: &Grid, w: &VectorField, trace: Option<&BoundaryTrace>) -> f64 {
    dirichlet_form(grid, w, trace, w, trace)
}

/// Gradient pairing of two cell scalars over interior faces.
pub fn neumann_form(grid: &Grid, a: &ScalarField, b: &ScalarField) -> f64 {
    let (nx, ny) = (grid.nx, grid.ny);
    let (wx, wy) = (grid.hy() / grid.hx(), grid.hx() / grid.hy());
    let mut s = 0.0;
    for j in 0..ny {
        for i in 0..nx {
            if i + 1 < nx {
                s += wx * (a.at(i + 1, j) - a.at(i, j)) * (b.at(i + 1, j) - b.at(i, j));
            }
            if j + 1 < ny {
                s += wy * (a.at(i, j + 1) - a.at(i, j)) * (b.at(i, j + 1) - b.at(i, j));
            }
        }
    }
    s
}

pub fn neumann_energy(grid: &Grid, q: &ScalarField) -> f64 {
    neumann_form(grid, q, q)
}

/// Full H1 norm of a velocity (L2 plus gradient).
pub fn h1_norm_vector(grid: &Grid, w: &VectorField, trace: Option<&BoundaryTrace>) -> f64 {
    (inner_vector(grid, w, w) + dirichlet_energy(grid, w, trace)).sqrt()
}

pub fn h1_norm_scalar(grid: &Grid, q: &ScalarField) -> f64 {
    (inner_scalar(grid, q, q) + neumann_energy(grid, q)).sqrt()
}

/// L4 norm of a velocity from cell-centre interpolated values.
pub fn l4_norm_vector(grid: &Grid, w: &VectorField) -> f64 {
    let mut s = 0.0;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let ux = 0.5 * (w.u_at(i, j) + w.u_at(i + 1, j));
            let uy = 0.5 * (w.v_at(i, j) + w.v_at(i, j + 1));
            let m = ux * ux + uy * uy;
            s += m * m;
        }
    }
    (s * grid.cell_area()).powf(0.25)
}

pub fn l4_norm_scalar(grid: &Grid, q: &ScalarField) -> f64 {
    let s: f64 = q.data.iter().map(|x| x.powi(4)).sum();
    (s * grid.cell_area()).powf(0.25)
}

/// Skew-symmetric advection of a cell scalar by `carrier`: the average of the
/// advective and conservative forms. Boundary faces use the Neumann ghost
/// `tau + h * dtau/dn`.
pub fn advect_scalar(
    grid: &Grid,
    carrier: &VectorField,
    tau: &ScalarField,
    trace: Option<&BoundaryTrace>,
) -> ScalarField {
    let (nx, ny) = (grid.nx, grid.ny);
    let (hx, hy) = (grid.hx(), grid.hy());
    let mut out = ScalarField::zeros(grid);
    for j in 0..ny {
        for i in 0..nx {
            let p = tau.at(i, j);
            let e = if i + 1 < nx {
                tau.at(i + 1, j)
            } else {
                p + hx * flux(trace, R, j)
            };
            let w = if i > 0 {
                tau.at(i - 1, j)
            } else {
                p + hx * flux(trace, L, j)
            };
            let n = if j + 1 < ny {
                tau.at(i, j + 1)
            } else {
                p + hy * flux(trace, T, i)
            };
            let s = if j > 0 {
                tau.at(i, j - 1)
            } else {
                p + hy * flux(trace, B, i)
            };
            *out.at_mut(i, j) = (carrier.u_at(i + 1, j) * e - carrier.u_at(i, j) * w) / (2.0 * hx)
                + (carrier.v_at(i, j + 1) * n - carrier.v_at(i, j) * s) / (2.0 * hy);
        }
    }
    out
}

/// Skew-symmetric advection `(carrier . grad) w` on interior edges. Wall
/// neighbours of the tangential component are ghosts built from `trace`.
pub fn advect_vector(
    grid: &Grid,
    carrier: &VectorField,
    w: &VectorField,
    trace: Option<&BoundaryTrace>,
) -> VectorField {
    let (nx, ny) = (grid.nx, grid.ny);
    let (hx, hy) = (grid.hx(), grid.hy());
    let z = carrier;
    let mut out = VectorField::zeros(grid);
    for j in 0..ny {
        for i in 1..nx {
            let fe = 0.5 * (z.u_at(i, j) + z.u_at(i + 1, j));
            let fw = 0.5 * (z.u_at(i - 1, j) + z.u_at(i, j));
            let fn_ = 0.5 * (z.v_at(i - 1, j + 1) + z.v_at(i, j + 1));
            let fs = 0.5 * (z.v_at(i - 1, j) + z.v_at(i, j));
            let p = w.u_at(i, j);
            let n = if j + 1 < ny {
                w.u_at(i, j + 1)
            } else {
                2.0 * tang(trace, T, i) - p
            };
            let s = if j > 0 {
                w.u_at(i, j - 1)
            } else {
                2.0 * tang(trace, B, i) - p
            };
            *out.u_mut(i, j) = (fe * w.u_at(i + 1, j) - fw * w.u_at(i - 1, j)) / (2.0 * hx)
                + (fn_ * n - fs * s) / (2.0 * hy);
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            let fn_ = 0.5 * (z.v_at(i, j) + z.v_at(i, j + 1));
            let fs = 0.5 * (z.v_at(i, j - 1) + z.v_at(i, j));
            let fe = 0.5 * (z.u_at(i + 1, j - 1) + z.u_at(i + 1, j));
            let fw = 0.5 * (z.u_at(i, j - 1) + z.u_at(i, j));
            let p = w.v_at(i, j);
            let e = if i + 1 < nx {
                w.v_at(i + 1, j)
            } else {
                2.0 * tang(trace, R, j) - p
            };
            let wv = if i > 0 {
                w.v_at(i - 1, j)
            } else {
                2.0 * tang(trace, L, j) - p
            };
            *out.v_mut(i, j) = (fe * e - fw * wv) / (2.0 * hx)
                + (fn_ * w.v_at(i, j + 1) - fs * w.v_at(i, j - 1)) / (2.0 * hy);
        }
    }
    out
}

/// `(w . grad) z` on interior edges, centred differences of `z` with ghosts
/// from `z_trace`.
pub fn transport_velocity(
    grid: &Grid,
    w: &VectorField,
    z: &VectorField,
    z_trace: Option<&BoundaryTrace>,
) -> VectorField {
    let (nx, ny) = (grid.nx, grid.ny);
    let (hx, hy) = (grid.hx(), grid.hy());
    let mut out = VectorField::zeros(grid);
    for j in 0..ny {
        for i in 1..nx {
            let p = z.u_at(i, j);
            let dx = (z.u_at(i + 1, j) - z.u_at(i - 1, j)) / (2.0 * hx);
            let n = if j + 1 < ny {
                z.u_at(i, j + 1)
            } else {
                2.0 * tang(z_trace, T, i) - p
            };
            let s = if j > 0 {
                z.u_at(i, j - 1)
            } else {
                2.0 * tang(z_trace, B, i) - p
            };
            let dy = (n - s) / (2.0 * hy);
            let wy =
                0.25 * (w.v_at(i - 1, j) + w.v_at(i, j) + w.v_at(i - 1, j + 1) + w.v_at(i, j + 1));
            *out.u_mut(i, j) = w.u_at(i, j) * dx + wy * dy;
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            let p = z.v_at(i, j);
            let dy = (z.v_at(i, j + 1) - z.v_at(i, j - 1)) / (2.0 * hy);
            let e = if i + 1 < nx {
                z.v_at(i + 1, j)
            } else {
                2.0 * tang(z_trace, R, j) - p
            };
            let wv = if i > 0 {
                z.v_at(i - 1, j)
            } else {
                2.0 * tang(z_trace, L, j) - p
            };
            let dx = (e - wv) / (2.0 * hx);
            let wx =
                0.25 * (w.u_at(i, j - 1) + w.u_at(i + 1, j - 1) + w.u_at(i, j) + w.u_at(i + 1, j));
            *out.v_mut(i, j) = wx * dx + w.v_at(i, j) * dy;
        }
    }
    out
}

/// `(grad z)^T r` on interior edges; cross derivatives are taken at grid
/// nodes and averaged onto the edge.
pub fn transport_velocity_dual(grid: &Grid, r: &VectorField, z: &VectorField) -> VectorField {
    let (nx, ny) = (grid.nx, grid.ny);
    let (hx, hy) = (grid.hx(), grid.hy());
    let mut out = VectorField::zeros(grid);
    for j in 0..ny {
        for i in 1..nx {
            let dzx_dx = (z.u_at(i + 1, j) - z.u_at(i - 1, j)) / (2.0 * hx);
            let node = |k: usize| (z.v_at(i, k) - z.v_at(i - 1, k)) / hx;
            let dzy_dx = 0.5 * (node(j) + node(j + 1));
            let ry =
                0.25 * (r.v_at(i - 1, j) + r.v_at(i, j) + r.v_at(i - 1, j + 1) + r.v_at(i, j + 1));
            *out.u_mut(i, j) = r.u_at(i, j) * dzx_dx + ry * dzy_dx;
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            let dzy_dy = (z.v_at(i, j + 1) - z.v_at(i, j - 1)) / (2.0 * hy);
            let node = |k: usize| (z.u_at(k, j) - z.u_at(k, j - 1)) / hy;
            let dzx_dy = 0.5 * (node(i) + node(i + 1));
            let rx =
                0.25 * (r.u_at(i, j - 1) + r.u_at(i + 1, j - 1) + r.u_at(i, j) + r.u_at(i + 1, j));
            *out.v_mut(i, j) = rx * dzx_dy + r.v_at(i, j) * dzy_dy;
        }
    }
    out
}

/// `w . grad theta` at cell centres, using face gradients (with the heat
/// flux of `trace` on walls) averaged to the centre.
pub fn transport_scalar(
    grid: &Grid,
    w: &VectorField,
    theta: &ScalarField,
    trace: Option<&BoundaryTrace>,
) -> ScalarField {
    let g = gradient_with_flux(grid, theta, trace);
    let mut out = ScalarField::zeros(grid);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let tx = 0.5 * (g.u_at(i, j) + g.u_at(i + 1, j));
            let ty = 0.5 * (g.v_at(i, j) + g.v_at(i, j + 1));
            let wx = 0.5 * (w.u_at(i, j) + w.u_at(i + 1, j));
            let wy = 0.5 * (w.v_at(i, j) + w.v_at(i, j + 1));
            *out.at_mut(i, j) = wx * tx + wy * ty;
        }
    }
    out
}

/// `s grad theta` on interior edges.
pub fn scalar_times_gradient(grid: &Grid, s: &ScalarField, theta: &ScalarField) -> VectorField {
    let g = gradient(grid, theta);
    let mut out = VectorField::zeros(grid);
    for j in 0..grid.ny {
        for i in 1..grid.nx {
            *out.u_mut(i, j) = 0.5 * (s.at(i - 1, j) + s.at(i, j)) * g.u_at(i, j);
        }
    }
    for j in 1..grid.ny {
        for i in 0..grid.nx {
            *out.v_mut(i, j) = 0.5 * (s.at(i, j - 1) + s.at(i, j)) * g.v_at(i, j);
        }
    }
    out
}

/// Buoyancy force `beta * phi` on interior edges.
pub fn buoyancy(grid: &Grid, beta: [f64; 2], phi: &ScalarField) -> VectorField {
    let mut out = VectorField::zeros(grid);
    for j in 0..grid.ny {
        for i in 1..grid.nx {
            *out.u_mut(i, j) = beta[0] * 0.5 * (phi.at(i - 1, j) + phi.at(i, j));
        }
    }
    for j in 1..grid.ny {
        for i in 0..grid.nx {
            *out.v_mut(i, j) = beta[1] * 0.5 * (phi.at(i, j - 1) + phi.at(i, j));
        }
    }
    out
}

/// `beta . r` at cell centres.
pub fn buoyancy_dual(grid: &Grid, beta: [f64; 2], r: &VectorField) -> ScalarField {
    let mut out = ScalarField::zeros(grid);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            *out.at_mut(i, j) = beta[0] * 0.5 * (r.u_at(i, j) + r.u_at(i + 1, j))
                + beta[1] * 0.5 * (r.v_at(i, j) + r.v_at(i, j + 1));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{BoundaryTrace, Grid};
    use std::f64::consts::PI;

    fn unit(n: usize) -> Grid {
        Grid::unit(n).unwrap()
    }

    #[test]
    fn divergence_of_affine_field_is_its_trace() {
        let g = unit(8);
        let w = VectorField::from_fn(&g, |x, y| [2.0 * x + y, 3.0 * y - x]);
        let d = divergence(&g, &w);
        assert!(d.data.iter().all(|v| (v - 5.0).abs() < 1e-12));
    }

    #[test]
    fn gradient_of_linear_scalar_is_constant_inside() {
        let g = unit(8);
        let q = ScalarField::from_fn(&g, |x, y| 3.0 * x - 2.0 * y);
        let gr = gradient(&g, &q);
        for j in 0..8 {
            for i in 1..8 {
                assert!((gr.u_at(i, j) - 3.0).abs() < 1e-12);
            }
            assert_eq!(gr.u_at(0, j), 0.0);
        }
    }

    #[test]
    fn dirichlet_laplacian_kills_linear_fields_with_matching_trace() {
        let g = unit(8);
        let f = |x: f64, y: f64| [1.0 + 2.0 * x - y, 0.5 * x + 3.0 * y];
        let mut w = VectorField::from_fn(&g, f);
        let tr = BoundaryTrace::velocity_only(&g, f);
        w.set_normal_trace(&tr);
        let l = laplacian_dirichlet(&g, &w, Some(&tr));
        assert!(l.max_abs() < 1e-10);
    }

    #[test]
    fn dirichlet_laplacian_of_sine_mode_converges_at_second_order() {
        let err = |n: usize| {
            let g = unit(n);
            let f = |x: f64, y: f64| (PI * x).sin() * (PI * y).sin();
            let w = VectorField::from_fn(&g, |x, y| [f(x, y), f(x, y)]);
            let l = laplacian_dirichlet(&g, &w, None);
            let mut e = VectorField::from_fn(&g, |x, y| [-2.0 * PI * PI * f(x, y); 2]);
            e.clear_normal_trace();
            e.axpy(-1.0, &l);
            norm_vector(&g, &e)
        };
        let (e1, e2, e3) = (err(16), err(32), err(64));
        assert!((e1 / e2).log2() > 1.4, "{e1} {e2}");
        assert!((e2 / e3).log2() > 1.4, "{e2} {e3}");
    }

    #[test]
    fn neumann_cosine_mode_matches_discrete_eigenvalue() {
        let n = 16;
        let g = unit(n);
        let q = ScalarField::from_fn(&g, |x, _| (PI * x).cos());
        let l = laplacian_neumann(&g, &q, None);
        // discrete symbol of the 3-point stencil for cos(pi x)
        let h = g.hx();
        let lam = -4.0 / (h * h) * (PI * h / 2.0).sin().powi(2);
        for (a, b) in l.data.iter().zip(&q.data) {
            assert!((a - lam * b).abs() < 1e-10);
        }
    }

    #[test]
    fn neumann_laplacian_integrates_to_boundary_flux() {
        let g = Grid::new(6, 9, 1.3, 0.7).unwrap();
        let q = ScalarField::from_fn(&g, |x, y| (x * y).sin() + x * x);
        let tr = BoundaryTrace::flux_only(&g, |x, y| 1.0 + x - 2.0 * y);
        let l = laplacian_neumann(&g, &q, Some(&tr));
        let total: f64 = l.data.iter().sum::<f64>() * g.cell_area();
        assert!((total - tr.net_heat_flux(&g)).abs() < 1e-11);
    }

    #[test]
    fn summation_by_parts_holds_for_zero_normal_fields() {
        let g = Grid::new(7, 5, 1.0, 2.0).unwrap();
        let mut w = VectorField::from_fn(&g, |x, y| [(3.0 * x).sin() * y, x * (2.0 * y).cos()]);
        w.clear_normal_trace();
        let q = ScalarField::from_fn(&g, |x, y| x * x - y + x * y);
        let lhs = inner_scalar(&g, &divergence(&g, &w), &q);
        let rhs = -inner_vector(&g, &w, &gradient(&g, &q));
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn dirichlet_form_matches_laplacian_pairing() {
        let g = Grid::new(6, 8, 1.0, 1.5).unwrap();
        let mut a = VectorField::from_fn(&g, |x, y| [(x * 5.0).sin() + y, (y * 3.0).cos() * x]);
        let mut b = VectorField::from_fn(&g, |x, y| [x * y * y, (x + y).sin()]);
        a.clear_normal_trace();
        b.clear_normal_trace();
        let lhs = dirichlet_form(&g, &a, None, &b, None);
        let rhs = -inner_vector(&g, &laplacian_dirichlet(&g, &a, None), &b);
        assert!((lhs - rhs).abs() < 1e-11 * lhs.abs().max(1.0));
        let nl = neumann_form(&g, &a_scalar(&g), &b_scalar(&g));
        let nr = -inner_scalar(
            &g,
            &laplacian_neumann(&g, &a_scalar(&g), None),
            &b_scalar(&g),
        );
        assert!((nl - nr).abs() < 1e-11);
    }

    fn a_scalar(g: &Grid) -> ScalarField {
        ScalarField::from_fn(g, |x, y| (2.0 * x).sin() * y)
    }

    fn b_scalar(g: &Grid) -> ScalarField {
        ScalarField::from_fn(g, |x, y| x + y * y)
    }

    #[test]
    fn uniform_carrier_advects_linear_scalar_to_one() {
        let g = unit(8);
        let z = VectorField::from_fn(&g, |_, _| [1.0, 0.0]);
        let q = ScalarField::from_fn(&g, |x, _| x);
        let a = advect_scalar(&g, &z, &q, None);
        for j in 0..8 {
            for i in 1..7 {
                assert!((a.at(i, j) - 1.0).abs() < 1e-12);
            }
        }
        let w = VectorField::from_fn(&g, |x, _| [x, x]);
        let av = advect_vector(&g, &z, &w, None);
        for j in 1..7 {
            for i in 1..7 {
                assert!((av.u_at(i, j) - 1.0).abs() < 1e-12);
                assert!((av.v_at(i, j) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn transport_of_linear_field_is_exact() {
        let g = unit(8);
        // z = (y, -x) is divergence free and linear
        let zf = |x: f64, y: f64| [y, -x];
        let mut z = VectorField::from_fn(&g, zf);
        let tr = BoundaryTrace::velocity_only(&g, zf);
        z.set_normal_trace(&tr);
        let w = VectorField::from_fn(&g, |_, _| [2.0, 3.0]);
        let t = transport_velocity(&g, &w, &z, Some(&tr));
        // (w . grad) z = (w_y, -w_x) = (3, -2)
        for j in 0..8 {
            for i in 1..8 {
                assert!((t.u_at(i, j) - 3.0).abs() < 1e-12);
            }
        }
        for j in 1..8 {
            for i in 0..8 {
                assert!((t.v_at(i, j) + 2.0).abs() < 1e-12);
            }
        }
        let d = transport_velocity_dual(&g, &w, &z);
        // (grad z)^T w = (-w_y, w_x) = (-3, 2)
        assert!((d.u_at(3, 3) + 3.0).abs() < 1e-12);
        assert!((d.v_at(3, 3) - 2.0).abs() < 1e-12);
    }
}
