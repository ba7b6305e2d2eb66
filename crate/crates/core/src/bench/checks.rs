//! Named pass/fail outcomes and the semigroup measurements behind the
//! `semigroup` command.

use crate::error::{Error, Result};
use crate::evolve::{solve_linear_lifted, BoundarySource, LiftedStepper, TimeGrid};
use crate::mesh::{CoupledField, PhysicalParams};
use crate::rng::Seeded;
use crate::semigroup::{duhamel_solve, CoupledOperator, StateVector};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    /// `value <= tolerance`
    Le,
    /// `value >= tolerance`
    Ge,
    /// `value > tolerance`
    Gt,
}

impl Relation {
    pub fn holds(self, value: f64, tolerance: f64) -> bool {
        match self {
            Relation::Le => value <= tolerance,
            Relation::Ge => value >= tolerance,
            Relation::Gt => value > tolerance,
        }
    }
}

/// One entry of a report's `checks` array.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
    pub relation: Relation,
}

impl CheckOutcome {
    pub fn new(name: impl Into<String>, value: f64, relation: Relation, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            passed: relation.holds(value, tolerance),
            value,
            tolerance,
            relation,
        }
    }

    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self::new(name, value, Relation::Le, tolerance)
    }

    /// Pass flag from `value`, `relation` and `tolerance` alone.
    pub fn recompute(&self) -> bool {
        self.relation.holds(self.value, self.tolerance)
    }
}

/// Defects of the semigroup calculus for one random state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalculusDefects {
    /// `|T(s + t) x - T(s) T(t) x| / |x|`.
    pub semigroup_law: f64,
    /// `|L^(1/2) L^(1/2) x - L x| / |L x|` with `L = lambda0 I - A`.
    pub half_power: f64,
    /// `|L^a T(t) x - T(t) L^a x| / |L^a T(t) x|`.
    pub commutation: f64,
}

pub fn calculus_defects(op: &CoupledOperator, seed: u64) -> Result<CalculusDefects> {
    let mut rng = Seeded::new(seed);
    let x = StateVector((0..op.dim()).map(|_| rng.normal()).collect());
    let (s, t) = (0.37, 0.61);
    let a = op.semigroup_apply(s + t, &x)?;
    let b = op.semigroup_apply(s, &op.semigroup_apply(t, &x)?)?;
    let semigroup_law = a.distance(&b) / x.norm();

    let half = op.fractional_power_apply(0.5, &x)?.0;
    let twice = op.fractional_power_apply(0.5, &half)?.0;
    let lx = op.apply_shifted(&x);
    let half_power = twice.distance(&lx) / lx.norm();

    let alpha = 0.5;
    let tau = 0.1;
    let left = op
        .fractional_power_apply(alpha, &op.semigroup_apply(tau, &x)?)?
        .0;
    let right = op.semigroup_apply(tau, &op.fractional_power_apply(alpha, &x)?.0)?;
    let commutation = left.distance(&right) / left.norm();
    Ok(CalculusDefects {
        semigroup_law,
        half_power,
        commutation,
    })
}

/// `L2(0, T)` distance between the lifted implicit Euler stepper and the
/// exact convolution, one value per time step in `dts`. Both start from
/// the projected part of `x0` (or of the lift when `x0` is absent).
/// `params` must be the physics `op` was assembled with.
pub fn duhamel_discrepancies(
    op: &CoupledOperator,
    params: &PhysicalParams,
    data: BoundarySource<'_>,
    x0: Option<&CoupledField>,
    dts: &[f64],
    t_end: f64,
) -> Result<Vec<f64>> {
    if params.lambda0 != op.lambda0() {
        return Err(Error::InvalidParameter(format!(
            "shift {} differs from the operator's {}",
            params.lambda0,
            op.lambda0()
        )));
    }
    let grid = *op.grid();
    let mut out = Vec::with_capacity(dts.len());
    for &dt in dts {
        let time = TimeGrid::until(t_end, dt)?;
        let st = LiftedStepper::new(&grid, params, dt)?;
        let traj = solve_linear_lifted(&grid, params, data, x0, time)?;
        let lift: Vec<StateVector> = (0..=time.steps)
            .map(|k| Ok(op.encode(&st.lift(&data(time.time(k)))?.projected)))
            .collect::<Result<_>>()?;
        let start = op.encode(&st.projected_part(&traj.states[0])?);
        let exact = duhamel_solve(op, &lift, &start, dt)?;
        let mut s = 0.0;
        for (k, e) in exact.iter().enumerate().skip(1) {
            let y = op.encode(&st.projected_part(&traj.states[k])?);
            s += dt * y.distance(e).powi(2);
        }
        out.push(s.sqrt());
    }
    Ok(out)
}
