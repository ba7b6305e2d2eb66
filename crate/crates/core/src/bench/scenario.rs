//! Scenario execution and report emission.

use super::checks::{calculus_defects, duhamel_discrepancies, CheckOutcome, Relation};
use super::config::{
    BoundaryGenerator, CheckKind, ForcingGenerator, InitialGenerator, ScenarioConfig, Shift,
    SolverKind, StudyKind,
};
use super::mms::Manufactured;
use super::study::{
    monolithic_space_study, monolithic_time_study, steady_study, ConvergenceTable, ORDER_SLACK,
};
use crate::adjoint::{
    duality_check_steady, duality_check_unsteady, duality_refinement, AdjointBackend,
    DualityReport, SpaceTimeData,
};
use crate::error::{Error, Result};
use crate::evolve::{
    compatibility_check, energy_report, recover_pressure, solve_full_monolithic, solve_full_split,
    solve_linear_lifted, write_checkpoint, LiftedStepper, MonolithicOptions, MonolithicVariant,
    PressureMethod, Scheme, Sources, TimeGrid, Trajectory, BLOW_UP_FACTOR,
};
use crate::leray::Projector;
use crate::mesh::{
    BoundaryTrace, CoupledField, Grid, LinearizationPoint, PhysicalParams, ScalarField, VectorField,
};
use crate::rng::Seeded;
use crate::semigroup::{assemble_coupled_operator, duhamel_solve, AnalyticityReport};
use crate::steady::lambda0_estimate;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

pub const CSV_FILE: &str = "diagnostics.csv";
pub const CHECKPOINT_FILE: &str = "trajectory.bspl";
pub const REPORT_FILE: &str = "report.json";

/// JSON report: the config used, named checks, scalar norms and wall-clock
/// timings in seconds, plus the structured result of the command when it
/// has one.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveReport {
    pub config: ScenarioConfig,
    pub checks: Vec<CheckOutcome>,
    pub norms: BTreeMap<String, f64>,
    pub timings: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duality: Option<Vec<DualityReport>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceTable>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analyticity: Option<AnalyticityReport>,
}

impl SolveReport {
    pub fn new(cfg: &ScenarioConfig) -> Self {
        Self {
            config: cfg.clone(),
            checks: Vec::new(),
            norms: BTreeMap::new(),
            timings: BTreeMap::new(),
            duality: None,
            convergence: None,
            analyticity: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports hold finite numbers and plain data")
    }

    /// Writes the report as `name` inside the configured output directory.
    pub fn write(&self, name: &str) -> Result<()> {
        std::fs::create_dir_all(&self.config.output)?;
        std::fs::write(self.config.output.join(name), self.to_json())?;
        Ok(())
    }

    fn norm(&mut self, key: &str, v: f64) {
        // JSON has no NaN or infinity
        self.norms.insert(
            key.to_string(),
            if v.is_finite() {
                v
            } else {
                f64::MAX.copysign(v)
            },
        );
    }
}

/// Grid, resolved physics and the data generators of a scenario.
pub struct ScenarioSetup {
    pub grid: Grid,
    pub params: PhysicalParams,
    base: Option<BoundaryTrace>,
    mms: Option<Manufactured>,
    cfg: ScenarioConfig,
}

impl ScenarioSetup {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self> {
        let grid = Grid::new(cfg.grid.nx, cfg.grid.ny, cfg.grid.lx, cfg.grid.ly)?;
        let mut params = PhysicalParams {
            nu: cfg.physics.nu,
            mu: cfg.physics.mu,
            beta: cfg.physics.beta,
            lambda0: 0.0,
        };
        params.lambda0 = match cfg.physics.lambda0 {
            Shift::Auto => lambda0_estimate(&grid, &LinearizationPoint::zero(&grid), params.beta),
            Shift::Value(v) => v,
        };
        params.validate()?;
        let uses_mms = cfg.boundary.generator == BoundaryGenerator::Mms
            || cfg.initial.generator == InitialGenerator::Mms
            || cfg.forcing == ForcingGenerator::Mms;
        if uses_mms && (grid.lx != 1.0 || grid.ly != 1.0) {
            return Err(Error::InvalidParameter(
                "manufactured data need the unit square".into(),
            ));
        }
        let advection = cfg.solver.advection
            && matches!(cfg.solver.kind, SolverKind::Split | SolverKind::Monolithic);
        let mms =
            uses_mms.then(|| Manufactured::new(cfg.family, params.with_lambda0(0.0), advection));
        let base = (cfg.boundary.generator == BoundaryGenerator::Smooth).then(|| {
            let mut b = Seeded::new(cfg.seed).compatible_trace(&grid, cfg.boundary.modes);
            b.remove_heat_flux_mean(&grid);
            b.scale(cfg.boundary.amplitude);
            b
        });
        Ok(Self {
            grid,
            params,
            base,
            mms,
            cfg: cfg.clone(),
        })
    }

    pub fn trace(&self, t: f64) -> BoundaryTrace {
        match (self.cfg.boundary.generator, &self.base, &self.mms) {
            (BoundaryGenerator::Smooth, Some(b), _) => {
                let mut b = b.clone();
                b.scale(1.0 + 0.5 * (self.cfg.boundary.frequency * t).sin());
                b.with_time(t)
            }
            (BoundaryGenerator::Mms, _, Some(m)) => m.trace(&self.grid, t),
            _ => BoundaryTrace::zeros(&self.grid).with_time(t),
        }
    }

    pub fn sources_at(&self, t: f64) -> Option<(VectorField, ScalarField)> {
        match (self.cfg.forcing, &self.mms) {
            (ForcingGenerator::Mms, Some(m)) => Some(m.unsteady_sources(&self.grid, t)),
            _ => None,
        }
    }

    /// Initial state; `None` asks the linear solvers to start from the lift.
    pub fn initial(&self) -> Result<Option<CoupledField>> {
        let g = &self.grid;
        let amp = self.cfg.initial.amplitude;
        Ok(match self.cfg.initial.generator {
            InitialGenerator::Zero => Some(CoupledField::zeros(g)),
            InitialGenerator::Lift => None,
            InitialGenerator::Random => {
                let mut rng = Seeded::new(self.cfg.seed.wrapping_add(1));
                let mut w = rng.smooth_vector(g, self.cfg.boundary.modes);
                w.clear_normal_trace();
                let vel = Projector::new(g)?.project(&w)?.scaled(amp);
                Some(CoupledField {
                    vel,
                    temp: rng.smooth_scalar(g, self.cfg.boundary.modes).scaled(amp),
                })
            }
            InitialGenerator::Mms => Some(
                self.mms
                    .as_ref()
                    .expect("mms generator resolved")
                    .state(g, 0.0),
            ),
        })
    }

    fn initial_or_lift(&self) -> Result<CoupledField> {
        match self.initial()? {
            Some(x) => Ok(x),
            None => LiftedStepper::new(&self.grid, &self.params, self.cfg.time.dt)?
                .lifted_state(&self.trace(0.0)),
        }
    }
}

fn duhamel_trajectory(
    setup: &ScenarioSetup,
    x0: Option<&CoupledField>,
    time: TimeGrid,
) -> Result<Trajectory> {
    let (g, prm) = (&setup.grid, &setup.params);
    let op = assemble_coupled_operator(g, None, prm)?;
    let st = LiftedStepper::new(g, prm, time.dt)?;
    let data0 = setup.trace(0.0);
    let start = match x0 {
        Some(x) => {
            let mut x = st.projected_part(x)?;
            x.vel.axpy(1.0, &st.projector().harmonic_extension(&data0)?);
            x
        }
        None => st.lifted_state(&data0)?,
    };
    let lift = (0..=time.steps)
        .map(|k| Ok(op.encode(&st.lift(&setup.trace(time.time(k)))?.projected)))
        .collect::<Result<Vec<_>>>()?;
    let ys = duhamel_solve(&op, &lift, &op.encode(&st.projected_part(&start)?), time.dt)?;
    let mut traj = Trajectory::start(g, prm, time.dt, Scheme::SemigroupDuhamel, start, data0);
    for (k, y) in ys.iter().enumerate().skip(1) {
        let tr = setup.trace(time.time(k));
        let mut x = op.decode(y);
        x.vel.axpy(1.0, &st.projector().harmonic_extension(&tr)?);
        traj.push(x, ScalarField::zeros(g), tr, VectorField::zeros(g), 0.0);
    }
    Ok(traj)
}

fn solve(
    setup: &ScenarioSetup,
    kind: SolverKind,
    variant: MonolithicVariant,
) -> Result<Trajectory> {
    let cfg = &setup.cfg;
    let g = &setup.grid;
    let time = TimeGrid::new(cfg.time.dt, cfg.steps())?;
    let data = |t: f64| setup.trace(t);
    let momentum = |t: f64| {
        setup
            .sources_at(t)
            .map(|s| s.0)
            .unwrap_or_else(|| VectorField::zeros(g))
    };
    let heat = |t: f64| {
        setup
            .sources_at(t)
            .map(|s| s.1)
            .unwrap_or_else(|| ScalarField::zeros(g))
    };
    let sources = if cfg.forcing == ForcingGenerator::None {
        Sources::none()
    } else {
        Sources::new(&momentum, &heat)
    };
    let x0 = setup.initial()?;
    match kind {
        SolverKind::Split => Ok(solve_full_split(
            g,
            &setup.params,
            &data,
            &setup.initial_or_lift()?,
            sources,
            time,
            cfg.solver.advection,
        )?
        .total),
        SolverKind::Monolithic => {
            let opts = MonolithicOptions {
                variant,
                advection: cfg.solver.advection,
            };
            solve_full_monolithic(
                g,
                &setup.params,
                &data,
                &setup.initial_or_lift()?,
                sources,
                time,
                opts,
            )
        }
        SolverKind::Linear => solve_linear_lifted(g, &setup.params, &data, x0.as_ref(), time),
        SolverKind::SemigroupDuhamel => duhamel_trajectory(setup, x0.as_ref(), time),
    }
}

fn validate_run(cfg: &ScenarioConfig) -> Result<()> {
    let linear = matches!(
        cfg.solver.kind,
        SolverKind::Linear | SolverKind::SemigroupDuhamel
    );
    if linear && cfg.forcing != ForcingGenerator::None {
        return Err(Error::InvalidParameter(format!(
            "solver '{}' takes no volume sources",
            cfg.solver.kind.id()
        )));
    }
    if linear && cfg.checks.contains(&CheckKind::Splitting) {
        return Err(Error::InvalidParameter(
            "the splitting check compares the split and monolithic solvers".into(),
        ));
    }
    Ok(())
}

/// Relative per-step energy growth, `max_k (E_k - E_{k-1}) / E_{k-1}`.
fn energy_growth(energy: &[f64]) -> f64 {
    energy
        .windows(2)
        .map(|w| {
            let d = w[1] - w[0];
            if w[0] > 0.0 {
                d / w[0]
            } else if d > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

/// Runs the configured solver, evaluates the selected checks and writes
/// the diagnostics CSV, the checkpoint and the report into the output
/// directory.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<SolveReport> {
    let clock = Instant::now();
    validate_run(cfg)?;
    let setup = ScenarioSetup::new(cfg)?;
    let g = setup.grid;
    let mut rep = SolveReport::new(cfg);

    let t = Instant::now();
    let traj = solve(&setup, cfg.solver.kind, cfg.solver.variant)?;
    rep.timings
        .insert("solve".into(), t.elapsed().as_secs_f64());

    let t = Instant::now();
    let energy = energy_report(&traj);
    let x0 = setup.initial_or_lift()?;
    let compat = compatibility_check(&g, &setup.params, &x0, &setup.trace(0.0))?;
    rep.norm("final_energy", energy.energy.last().copied().unwrap_or(0.0));
    rep.norm("sup_energy", energy.sup_energy);
    rep.norm("velocity_dissipation", energy.velocity_dissipation);
    rep.norm("temperature_dissipation", energy.temperature_dissipation);
    rep.norm("l2_time_norm", traj.l2_time_norm());
    rep.norm("max_div_norm", traj.max_div_norm());
    rep.norm("compatibility", compat.total);
    if let Some(m) = &setup.mms {
        if cfg.boundary.generator == BoundaryGenerator::Mms && cfg.forcing == ForcingGenerator::Mms
        {
            let exact = m.state(&g, traj.times[traj.steps()]);
            rep.norm(
                "mms_error",
                super::study::state_error(&g, traj.last(), &exact),
            );
        }
    }
    let homogeneous = match cfg.boundary.generator {
        BoundaryGenerator::Zero => true,
        BoundaryGenerator::Smooth => cfg.boundary.amplitude == 0.0,
        BoundaryGenerator::Mms => false,
    } && cfg.forcing == ForcingGenerator::None;
    let tol = &cfg.tolerances;
    for &c in &cfg.checks {
        let outcome = match c {
            CheckKind::Finite => {
                let bad = traj
                    .states
                    .iter()
                    .flat_map(|x| x.vel.u.iter().chain(&x.vel.v).chain(&x.temp.data))
                    .filter(|v| !v.is_finite())
                    .count();
                CheckOutcome::at_most("finite", bad as f64, 0.0)
            }
            CheckKind::Divergence => {
                CheckOutcome::at_most("divergence", traj.max_div_norm(), tol.divergence)
            }
            // decay holds only without data; driven runs get the blow-up guard
            CheckKind::Energy if homogeneous => CheckOutcome::at_most(
                "energy-nonincreasing",
                energy_growth(&energy.energy),
                tol.energy,
            ),
            CheckKind::Energy => {
                let e0 = energy.energy.first().copied().unwrap_or(0.0).max(1.0);
                CheckOutcome::at_most("energy-bounded", energy.sup_energy / e0, BLOW_UP_FACTOR)
            }
            CheckKind::Pressure => {
                let p = recover_pressure(&traj, PressureMethod::Primitive)?;
                CheckOutcome::at_most(
                    "pressure-primitive-residual",
                    p.max_residual(),
                    tol.pressure,
                )
            }
            CheckKind::Compatibility => {
                CheckOutcome::at_most("compatibility", compat.total, tol.compatibility)
            }
            CheckKind::Splitting => {
                let other = match cfg.solver.kind {
                    SolverKind::Split => {
                        solve(&setup, SolverKind::Monolithic, MonolithicVariant::Coupled)?
                    }
                    _ => solve(&setup, SolverKind::Split, cfg.solver.variant)?,
                };
                let scale = traj.l2_time_norm().max(other.l2_time_norm());
                let d = traj.l2_time_distance(&other)?;
                let rel = if d == 0.0 { 0.0 } else { d / scale };
                rep.norm("splitting_distance", rel);
                CheckOutcome::at_most("splitting", rel, tol.splitting)
            }
        };
        rep.checks.push(outcome);
    }
    rep.timings
        .insert("checks".into(), t.elapsed().as_secs_f64());

    let t = Instant::now();
    std::fs::create_dir_all(&cfg.output)?;
    std::fs::write(cfg.output.join(CSV_FILE), traj.to_csv())?;
    let file = std::fs::File::create(cfg.output.join(CHECKPOINT_FILE))?;
    write_checkpoint(std::io::BufWriter::new(file), &traj)?;
    rep.timings
        .insert("output".into(), t.elapsed().as_secs_f64());
    rep.timings
        .insert("total".into(), clock.elapsed().as_secs_f64());
    rep.write(REPORT_FILE)?;
    Ok(rep)
}

/// Steady duality with the discrete transpose on the configured grid, the
/// refinement factor of the continuous backend from `n` to `2n`, and the
/// unsteady duality over `unsteady_steps` steps.
pub fn run_duality(cfg: &ScenarioConfig) -> Result<SolveReport> {
    let clock = Instant::now();
    let setup = ScenarioSetup::new(cfg)?;
    let (g, prm) = (setup.grid, setup.params);
    let tol = &cfg.tolerances;
    let mut rep = SolveReport::new(cfg);
    let mut embedded = Vec::new();

    let t = Instant::now();
    let data = setup.trace(0.0);
    let steady = duality_check_steady(
        &g,
        &LinearizationPoint::zero(&g),
        &prm,
        &data,
        cfg.duality.trials,
        AdjointBackend::DiscreteTranspose,
        cfg.seed,
    )?;
    rep.checks.push(CheckOutcome::at_most(
        "duality-steady",
        steady.rel_residual,
        tol.duality,
    ));
    embedded.push(steady);
    rep.timings
        .insert("steady".into(), t.elapsed().as_secs_f64());

    let t = Instant::now();
    if g.lx == 1.0 && g.ly == 1.0 && g.nx == g.ny {
        let r = duality_refinement(
            &[g.nx, 2 * g.nx],
            &prm,
            cfg.duality.trials,
            AdjointBackend::ContinuousDiscretized,
            cfg.seed,
        )?;
        let ratio = r[0].1 / r[1].1;
        rep.norm("continuous_residual_coarse", r[0].1);
        rep.norm("continuous_residual_fine", r[1].1);
        rep.norm("continuous_refinement_factor", ratio);
        // factor within [3.2, 4.8]
        rep.checks.push(CheckOutcome::at_most(
            "duality-continuous-refinement",
            (ratio - 4.0).abs(),
            0.8,
        ));
    }
    rep.timings
        .insert("continuous".into(), t.elapsed().as_secs_f64());

    let t = Instant::now();
    let steps = cfg.duality.unsteady_steps;
    let stepper = crate::evolve::LinearStepper::new(&g, &prm, cfg.time.dt, 0.0)?;
    let traces = (1..=steps)
        .map(|k| setup.trace(k as f64 * cfg.time.dt))
        .collect();
    let st = SpaceTimeData {
        f1: vec![],
        f2: vec![],
        traces,
    };
    let x0 = setup.initial_or_lift()?;
    let unsteady =
        duality_check_unsteady(&stepper, &x0, &st, cfg.duality.unsteady_trials, cfg.seed)?;
    rep.checks.push(CheckOutcome::at_most(
        "duality-unsteady",
        unsteady.rel_residual,
        tol.duality_unsteady,
    ));
    embedded.push(unsteady);
    rep.timings
        .insert("unsteady".into(), t.elapsed().as_secs_f64());

    rep.duality = Some(embedded);
    rep.timings
        .insert("total".into(), clock.elapsed().as_secs_f64());
    Ok(rep)
}

/// Semigroup calculus identities, the analyticity constant and the
/// Duhamel-vs-stepper refinement on the assembled operator (grids up to
/// the dense cap).
pub fn run_semigroup(cfg: &ScenarioConfig) -> Result<SolveReport> {
    let clock = Instant::now();
    let setup = ScenarioSetup::new(cfg)?;
    let (g, prm) = (setup.grid, setup.params);
    let tol = &cfg.tolerances;
    let mut rep = SolveReport::new(cfg);
    rep.norm("lambda0", prm.lambda0);

    let t = Instant::now();
    let op = assemble_coupled_operator(&g, None, &prm)?;
    rep.timings
        .insert("assemble".into(), t.elapsed().as_secs_f64());

    let t = Instant::now();
    let d = calculus_defects(&op, cfg.seed)?;
    rep.checks.push(CheckOutcome::at_most(
        "semigroup-law",
        d.semigroup_law,
        tol.semigroup_law,
    ));
    rep.checks.push(CheckOutcome::at_most(
        "half-power-composition",
        d.half_power,
        tol.half_power,
    ));
    rep.checks.push(CheckOutcome::at_most(
        "power-semigroup-commutation",
        d.commutation,
        tol.commutation,
    ));
    let a = op.analyticity_probe(cfg.semigroup.samples, cfg.seed)?;
    rep.norm("omega0", a.omega0);
    rep.checks.push(CheckOutcome::new(
        "analyticity-omega0",
        a.omega0,
        Relation::Gt,
        0.0,
    ));
    rep.analyticity = Some(a);
    rep.timings
        .insert("calculus".into(), t.elapsed().as_secs_f64());

    let t = Instant::now();
    let dts: Vec<f64> = (0..=cfg.semigroup.refinements)
        .map(|k| cfg.time.dt / (1u64 << k) as f64)
        .collect();
    let x0 = setup.initial()?;
    let data = |t: f64| setup.trace(t);
    let errs = duhamel_discrepancies(&op, &prm, &data, x0.as_ref(), &dts, cfg.time.t_end)?;
    for (k, w) in errs.windows(2).enumerate() {
        let ratio = w[0] / w[1];
        rep.norm(&format!("duhamel_discrepancy_{k}"), w[0]);
        rep.norm(&format!("duhamel_ratio_{}", k + 1), ratio);
        // ratio within [1.7, 2.3]
        rep.checks.push(CheckOutcome::at_most(
            format!("duhamel-halving-{}", k + 1),
            (ratio - 2.0).abs(),
            0.3,
        ));
    }
    if let Some(last) = errs.last() {
        rep.norm(&format!("duhamel_discrepancy_{}", errs.len() - 1), *last);
    }
    rep.timings
        .insert("duhamel".into(), t.elapsed().as_secs_f64());
    rep.timings
        .insert("total".into(), clock.elapsed().as_secs_f64());
    Ok(rep)
}

/// Convergence study of the configured kind; `levels` overrides the
/// configured ones.
pub fn run_study(cfg: &ScenarioConfig, levels: Option<&[usize]>) -> Result<SolveReport> {
    let clock = Instant::now();
    let setup = ScenarioSetup::new(cfg)?;
    if setup.grid.lx != 1.0 || setup.grid.ly != 1.0 {
        return Err(Error::InvalidParameter(
            "convergence studies run on the unit square".into(),
        ));
    }
    let levels = levels.unwrap_or(&cfg.study.levels);
    let mut rep = SolveReport::new(cfg);
    let table = match cfg.study.kind {
        StudyKind::Steady => {
            if setup.params.lambda0 <= 0.0 {
                return Err(Error::InvalidParameter(
                    "the steady study needs a positive shift".into(),
                ));
            }
            steady_study(
                &Manufactured::new(cfg.family, setup.params, false),
                levels,
                cfg.study.closure,
            )?
        }
        StudyKind::MonolithicSpace => {
            let m = Manufactured::new(
                cfg.family,
                setup.params.with_lambda0(0.0),
                cfg.solver.advection,
            );
            monolithic_space_study(&m, levels, cfg.time.dt, cfg.time.t_end)?
        }
        StudyKind::MonolithicTime => {
            let m = Manufactured::new(
                cfg.family,
                setup.params.with_lambda0(0.0),
                cfg.solver.advection,
            );
            monolithic_time_study(&m, cfg.grid.nx, levels, cfg.time.t_end)?
        }
    };
    for r in &table.rows {
        let key = match table.axis {
            super::study::RefinementAxis::Space => format!("error_n{}", r.resolution),
            super::study::RefinementAxis::Time => format!("error_dt{:e}", r.dt),
        };
        rep.norm(&key, r.error);
    }
    rep.norm("final_order", table.final_order());
    rep.checks.push(CheckOutcome::new(
        "observed-order",
        table.final_order(),
        Relation::Ge,
        table.target - ORDER_SLACK,
    ));
    rep.convergence = Some(table);
    rep.timings
        .insert("total".into(), clock.elapsed().as_secs_f64());
    Ok(rep)
}

/// Finite values and divergence of every level of a stored trajectory.
pub fn check_checkpoint(path: &Path, divergence_tol: f64) -> Result<Vec<CheckOutcome>> {
    let ck = crate::evolve::read_checkpoint(std::io::BufReader::new(std::fs::File::open(path)?))?;
    Ok(vec![
        CheckOutcome::at_most("finite", if ck.all_finite() { 0.0 } else { 1.0 }, 0.0),
        CheckOutcome::at_most("divergence", ck.max_relative_divergence()?, divergence_tol),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::config::parse_config;

    fn cfg(dir: &Path, extra: &str) -> ScenarioConfig {
        let text = format!(
            "[grid]\nnx = 8\n[time]\ndt = 0.01\nt_end = 0.05\n[output]\ndir = {}\n{extra}",
            dir.display()
        );
        parse_config(&text).unwrap()
    }

    #[test]
    fn zero_scenario_has_zero_norms() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg(
            dir.path(),
            "[checks]\nsuites = finite, divergence, energy, pressure, compatibility, splitting\n",
        );
        let rep = run_scenario(&c).unwrap();
        assert!(rep.passed(), "{:?}", rep.checks);
        assert_eq!(rep.checks.len(), 6);
        assert!(rep.norms.values().all(|&v| v == 0.0), "{:?}", rep.norms);
        for f in [CSV_FILE, CHECKPOINT_FILE, REPORT_FILE] {
            assert!(dir.path().join(f).exists());
        }
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join(REPORT_FILE)).unwrap())
                .unwrap();
        for key in ["config", "checks", "norms", "timings"] {
            assert!(json.get(key).is_some(), "{key}");
        }
        let back: SolveReport = serde_json::from_value(json).unwrap();
        assert_eq!(back.config, c);
        assert!(back.checks.iter().all(|c| c.recompute() == c.passed));
    }

    #[test]
    fn identical_seeds_give_identical_outputs() {
        let extra = "[scenario]\nseed = 5\n[boundary]\ngenerator = smooth\nfrequency = 3\n[initial]\ngenerator = random\namplitude = 0.5\n";
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let ra = run_scenario(&cfg(a.path(), extra)).unwrap();
        let rb = run_scenario(&cfg(b.path(), extra)).unwrap();
        for f in [CSV_FILE, CHECKPOINT_FILE] {
            assert_eq!(
                std::fs::read(a.path().join(f)).unwrap(),
                std::fs::read(b.path().join(f)).unwrap()
            );
        }
        assert_eq!(ra.norms, rb.norms);
        assert_eq!(ra.checks, rb.checks);
        assert!(ra.norms["final_energy"] > 0.0);
    }

    #[test]
    fn every_solver_runs_with_smooth_data() {
        let dir = tempfile::tempdir().unwrap();
        for kind in ["split", "monolithic", "linear", "semigroup-duhamel"] {
            let extra = format!("[boundary]\ngenerator = smooth\nfrequency = 2\n[initial]\ngenerator = lift\n[solver]\nkind = {kind}\n");
            let rep = run_scenario(&cfg(dir.path(), &extra)).unwrap();
            assert!(rep.passed(), "{kind}: {:?}", rep.checks);
            assert!(rep.norms["compatibility"] < 1e-9, "{kind}");
        }
    }

    #[test]
    fn split_matches_coupled_monolithic() {
        let dir = tempfile::tempdir().unwrap();
        let extra = "[boundary]\ngenerator = smooth\n[initial]\ngenerator = random\namplitude = 0.3\n[checks]\nsuites = splitting, pressure\n";
        let rep = run_scenario(&cfg(dir.path(), extra)).unwrap();
        assert!(rep.passed(), "{:?}", rep.checks);
    }

    #[test]
    fn mms_forcing_tracks_exact_solution() {
        let dir = tempfile::tempdir().unwrap();
        let extra = "[boundary]\ngenerator = mms\n[initial]\ngenerator = mms\n[forcing]\ngenerator = mms\n[solver]\nkind = monolithic\n";
        let rep = run_scenario(&cfg(dir.path(), extra)).unwrap();
        assert!(rep.norms["mms_error"] < 0.1, "{:?}", rep.norms);
        let bad = cfg(
            dir.path(),
            "[forcing]\ngenerator = mms\n[solver]\nkind = linear\n",
        );
        assert!(matches!(
            run_scenario(&bad),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn duality_report_embeds_residuals() {
        let dir = tempfile::tempdir().unwrap();
        let extra = "[boundary]\ngenerator = smooth\n[duality]\ntrials = 3\nunsteady_trials = 2\nunsteady_steps = 4\n";
        let rep = run_duality(&cfg(dir.path(), extra)).unwrap();
        let d = rep.duality.as_ref().unwrap();
        assert!(d[0].rel_residual <= 1e-8, "{d:?}");
        assert_eq!(d.len(), 2);
        assert!(rep
            .checks
            .iter()
            .any(|c| c.name == "duality-continuous-refinement"));
    }

    #[test]
    fn semigroup_command_on_small_grid() {
        let dir = tempfile::tempdir().unwrap();
        let text = format!(
            "[grid]\nnx = 6\n[time]\ndt = 0.02\nt_end = 0.4\n[boundary]\ngenerator = smooth\nfrequency = 3\n[initial]\ngenerator = lift\n[semigroup]\nsamples = 50\nrefinements = 2\n[output]\ndir = {}\n",
            dir.path().display()
        );
        let rep = run_semigroup(&parse_config(&text).unwrap()).unwrap();
        assert!(rep.passed(), "{:?} {:?}", rep.checks, rep.norms);
        let big = cfg(dir.path(), "");
        let mut big = big;
        big.grid.nx = 16;
        big.grid.ny = 16;
        assert!(matches!(run_semigroup(&big), Err(Error::TooLarge(_))));
    }

    #[test]
    fn study_command() {
        let dir = tempfile::tempdir().unwrap();
        let rep = run_study(
            &cfg(dir.path(), "[physics]\nlambda0 = 1\n"),
            Some(&[8, 16, 32]),
        )
        .unwrap();
        assert!(rep.passed());
        let t = rep.convergence.unwrap();
        assert_eq!(t.rows.len(), 3);
        let neg = run_study(
            &cfg(
                dir.path(),
                "[physics]\nlambda0 = 1\n[study]\nclosure = half-cell\n",
            ),
            None,
        )
        .unwrap();
        assert!(!neg.passed());
        let e = run_study(&cfg(dir.path(), ""), Some(&[8])).unwrap_err();
        assert!(e.to_string().contains("≥3 levels required"));
    }

    #[test]
    fn checkpoint_check() {
        let dir = tempfile::tempdir().unwrap();
        run_scenario(&cfg(dir.path(), "[boundary]\ngenerator = smooth\n")).unwrap();
        let out = check_checkpoint(&dir.path().join(CHECKPOINT_FILE), 1e-9).unwrap();
        assert!(out.iter().all(|c| c.passed), "{out:?}");
        std::fs::write(dir.path().join("junk"), b"nope").unwrap();
        assert!(matches!(
            check_checkpoint(&dir.path().join("junk"), 1e-9),
            Err(Error::Checkpoint(_))
        ));
    }
}
