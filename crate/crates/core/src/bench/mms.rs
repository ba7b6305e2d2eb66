//! Manufactured solutions with closed-form sources.
//!
//! Each family is a stream-function velocity, a pressure and a temperature,
//! all scaled by a time modulation `m(t)` (identically one for the
//! stationary families). Sources are the exact residuals of the equations
//! evaluated at the staggered sample points.

use crate::error::{Error, Result};
use crate::mesh::{
    BoundaryTrace, CoupledField, Grid, PhysicalParams, ScalarField, VectorField, Wall,
};
use crate::rng::balance_normal_flux;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

/// Angular frequency of the time-modulated family.
pub const MODULATION_FREQUENCY: f64 = 20.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MmsFamily {
    Trig,
    PolynomialBump,
    TimeModulatedTrig,
}

impl MmsFamily {
    pub const ALL: [MmsFamily; 3] = [
        MmsFamily::Trig,
        MmsFamily::PolynomialBump,
        MmsFamily::TimeModulatedTrig,
    ];

    pub fn id(self) -> &'static str {
        match self {
            MmsFamily::Trig => "trig",
            MmsFamily::PolynomialBump => "polynomial-bump",
            MmsFamily::TimeModulatedTrig => "time-modulated-trig",
        }
    }

    pub fn is_stationary(self) -> bool {
        self != MmsFamily::TimeModulatedTrig
    }
}

impl fmt::Display for MmsFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for MmsFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MmsFamily::ALL
            .into_iter()
            .find(|f| f.id() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown manufactured family '{s}'")))
    }
}

/// Unmodulated fields and their derivatives at one point.
#[derive(Clone, Copy, Debug, Default)]
pub struct PointValues {
    pub vel: [f64; 2],
    /// `grad_vel[c][d] = d vel_c / d x_d`.
    pub grad_vel: [[f64; 2]; 2],
    pub lap_vel: [f64; 2],
    pub pressure: f64,
    pub grad_pressure: [f64; 2],
    pub temp: f64,
    pub grad_temp: [f64; 2],
    pub lap_temp: f64,
}

fn trig(x: f64, y: f64) -> PointValues {
    let (sx, cx) = (PI * x).sin_cos();
    let (sy, cy) = (PI * y).sin_cos();
    let u = -cx * sy;
    let v = sx * cy;
    PointValues {
        vel: [u, v],
        grad_vel: [[PI * sx * sy, -PI * cx * cy], [PI * cx * cy, -PI * sx * sy]],
        lap_vel: [-2.0 * PI * PI * u, -2.0 * PI * PI * v],
        pressure: cx * cy,
        grad_pressure: [-PI * sx * cy, -PI * cx * sy],
        temp: sx * sy,
        grad_temp: [PI * cx * sy, PI * sx * cy],
        lap_temp: -2.0 * PI * PI * sx * sy,
    }
}

// a(s) = s^2 (1 - s)^2 and its derivatives
fn bump(s: f64) -> [f64; 4] {
    [
        s * s * (1.0 - s) * (1.0 - s),
        2.0 * s * (1.0 - s) * (1.0 - 2.0 * s),
        2.0 * (1.0 - 6.0 * s + 6.0 * s * s),
        12.0 * (2.0 * s - 1.0),
    ]
}

fn polynomial(x: f64, y: f64) -> PointValues {
    let [a, a1, a2, a3] = bump(x);
    let [b, b1, b2, b3] = bump(y);
    let k = 16.0;
    PointValues {
        vel: [k * a * b1, -k * a1 * b],
        grad_vel: [[k * a1 * b1, k * a * b2], [-k * a2 * b, -k * a1 * b1]],
        lap_vel: [k * (a2 * b1 + a * b3), -k * (a3 * b + a1 * b2)],
        pressure: (x - 0.5) * (y - 0.5),
        grad_pressure: [y - 0.5, x - 0.5],
        temp: x * x * y,
        grad_temp: [2.0 * x * y, x * x],
        lap_temp: 2.0 * y,
    }
}

/// A manufactured solution together with the physics it is fitted to.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manufactured {
    pub family: MmsFamily,
    pub params: PhysicalParams,
    /// Include the advection terms in the unsteady sources.
    pub advection: bool,
}

/// Exact fields, fitted sources and traces on one grid at one instant.
#[derive(Clone, Debug)]
pub struct MmsFields {
    pub state: CoupledField,
    /// Mean-zero exact pressure at the cell centres.
    pub pressure: ScalarField,
    pub momentum_source: VectorField,
    pub heat_source: ScalarField,
    pub trace: BoundaryTrace,
}

impl Manufactured {
    pub fn new(family: MmsFamily, params: PhysicalParams, advection: bool) -> Self {
        Self {
            family,
            params,
            advection,
        }
    }

    /// `(m(t), m'(t))`.
    pub fn modulation(&self, t: f64) -> (f64, f64) {
        match self.family {
            MmsFamily::TimeModulatedTrig => {
                let w = MODULATION_FREQUENCY;
                (1.0 + 0.5 * (w * t).sin(), 0.5 * w * (w * t).cos())
            }
            _ => (1.0, 0.0),
        }
    }

    pub fn point(&self, x: f64, y: f64) -> PointValues {
        match self.family {
            MmsFamily::Trig | MmsFamily::TimeModulatedTrig => trig(x, y),
            MmsFamily::PolynomialBump => polynomial(x, y),
        }
    }

    pub fn velocity(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        let m = self.modulation(t).0;
        self.point(x, y).vel.map(|c| m * c)
    }

    /// Closed-form divergence of the exact velocity.
    pub fn divergence(&self, x: f64, y: f64, t: f64) -> f64 {
        let g = self.point(x, y).grad_vel;
        self.modulation(t).0 * (g[0][0] + g[1][1])
    }

    pub fn temperature(&self, x: f64, y: f64, t: f64) -> f64 {
        self.modulation(t).0 * self.point(x, y).temp
    }

    pub fn pressure(&self, x: f64, y: f64, t: f64) -> f64 {
        self.modulation(t).0 * self.point(x, y).pressure
    }

    /// Momentum residual of the exact fields. `shift` multiplies the
    /// velocity in the stationary form; `unsteady` selects the time
    /// derivative (and advection, when enabled) instead.
    fn momentum(&self, x: f64, y: f64, t: f64, shift: f64, unsteady: bool) -> [f64; 2] {
        let pv = self.point(x, y);
        let (m, dm) = self.modulation(t);
        let prm = &self.params;
        let mut f = [0.0; 2];
        for c in 0..2 {
            let adv = pv.vel[0] * pv.grad_vel[c][0] + pv.vel[1] * pv.grad_vel[c][1];
            f[c] = m * (-prm.nu * pv.lap_vel[c] + pv.grad_pressure[c] - prm.beta[c] * pv.temp);
            if unsteady {
                f[c] += dm * pv.vel[c];
                if self.advection {
                    f[c] += m * m * adv;
                }
            } else {
                f[c] += shift * m * pv.vel[c];
            }
        }
        f
    }

    fn heat(&self, x: f64, y: f64, t: f64, shift: f64, unsteady: bool) -> f64 {
        let pv = self.point(x, y);
        let (m, dm) = self.modulation(t);
        let mut f = -m * self.params.mu * pv.lap_temp;
        if unsteady {
            f += dm * pv.temp;
            if self.advection {
                f += m * m * (pv.vel[0] * pv.grad_temp[0] + pv.vel[1] * pv.grad_temp[1]);
            }
        } else {
            f += shift * m * pv.temp;
        }
        f
    }

    pub fn state(&self, grid: &Grid, t: f64) -> CoupledField {
        CoupledField {
            vel: VectorField::from_fn(grid, |x, y| self.velocity(x, y, t)),
            temp: ScalarField::from_fn(grid, |x, y| self.temperature(x, y, t)),
        }
    }

    pub fn pressure_field(&self, grid: &Grid, t: f64) -> ScalarField {
        let mut p = ScalarField::from_fn(grid, |x, y| self.pressure(x, y, t));
        p.remove_mean();
        p
    }

    /// Wall data sampled from the exact fields: velocity at the nodes and
    /// face midpoints, `d theta / dn` with the outward normal of each wall.
    /// The O(h^2) quadrature defect of the net normal flux is removed.
    pub fn trace(&self, grid: &Grid, t: f64) -> BoundaryTrace {
        self.trace_with(grid, t, |x, y| self.velocity(x, y, t))
    }

    fn trace_with(&self, grid: &Grid, t: f64, g: impl Fn(f64, f64) -> [f64; 2]) -> BoundaryTrace {
        let mut tr = BoundaryTrace::from_fns(grid, g, |_, _| 0.0).with_time(t);
        let m = self.modulation(t).0;
        for w in Wall::ALL {
            let n = w.outward_normal();
            for (k, slot) in tr.flux[w as usize].iter_mut().enumerate() {
                let (x, y) = BoundaryTrace::face_point(grid, w, k);
                let gt = self.point(x, y).grad_temp;
                *slot = m * (gt[0] * n[0] + gt[1] * n[1]);
            }
        }
        balance_normal_flux(grid, &mut tr);
        tr
    }

    /// Trace whose tangential velocity is taken half a cell inside the
    /// wall: an O(h) boundary closure used as a negative control.
    pub fn first_order_trace(&self, grid: &Grid, t: f64) -> BoundaryTrace {
        let (dx, dy) = (0.5 * grid.hx(), 0.5 * grid.hy());
        let (lx, ly) = (grid.lx, grid.ly);
        let mut tr = self.trace(grid, t);
        let shifted = |x: f64, y: f64| {
            let xi = if x <= 0.0 {
                dx
            } else if x >= lx {
                lx - dx
            } else {
                x
            };
            let yi = if y <= 0.0 {
                dy
            } else if y >= ly {
                ly - dy
            } else {
                y
            };
            self.velocity(xi, yi, t)
        };
        for w in Wall::ALL {
            let vertical = matches!(w, Wall::Left | Wall::Right);
            for (k, slot) in tr.tangential[w as usize].iter_mut().enumerate() {
                let (x, y) = BoundaryTrace::node_point(grid, w, k);
                let v = shifted(x, y);
                *slot = if vertical { v[1] } else { v[0] };
            }
        }
        tr
    }

    /// Sources of the shifted stationary system
    /// `l0 u - nu lap u + grad p - beta theta`, `l0 theta - mu lap theta`
    /// with `l0 = params.lambda0`.
    pub fn steady_sources(&self, grid: &Grid, t: f64) -> (VectorField, ScalarField) {
        let l0 = self.params.lambda0;
        let mut f1 = VectorField::from_fn(grid, |x, y| self.momentum(x, y, t, l0, false));
        f1.clear_normal_trace();
        (
            f1,
            ScalarField::from_fn(grid, |x, y| self.heat(x, y, t, l0, false)),
        )
    }

    /// Sources of the evolution equations, time derivative included.
    pub fn unsteady_sources(&self, grid: &Grid, t: f64) -> (VectorField, ScalarField) {
        let mut f1 = VectorField::from_fn(grid, |x, y| self.momentum(x, y, t, 0.0, true));
        f1.clear_normal_trace();
        (
            f1,
            ScalarField::from_fn(grid, |x, y| self.heat(x, y, t, 0.0, true)),
        )
    }

    /// Everything at time `t`, with unsteady sources.
    pub fn fields(&self, grid: &Grid, t: f64) -> MmsFields {
        let (momentum_source, heat_source) = self.unsteady_sources(grid, t);
        MmsFields {
            state: self.state(grid, t),
            pressure: self.pressure_field(grid, t),
            momentum_source,
            heat_source,
            trace: self.trace(grid, t),
        }
    }
}

/// Exact fields, sources and traces of `family` at `t = 0` on the unit
/// square, with default physics and advection enabled.
pub fn mms_generate(family: &str, grid: &Grid) -> Result<MmsFields> {
    let family: MmsFamily = family.parse()?;
    if grid.lx != 1.0 || grid.ly != 1.0 {
        return Err(Error::InvalidParameter(
            "manufactured solutions live on the unit square".into(),
        ));
    }
    Ok(Manufactured::new(family, PhysicalParams::default(), true).fields(grid, 0.0))
}
