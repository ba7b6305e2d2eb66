use boussinesq::bench::{CheckOutcome, ConvergenceTable, RefinementAxis, Relation, SolveReport};
use boussinesq::evolve::{diagnostics_from_csv, diagnostics_to_csv, EnergyReport, StepDiagnostics};
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e6f64..1e6, 1e-300f64..1e-200, Just(0.0)]
}

proptest! {
    #[test]
    fn convergence_pass_is_recomputable(errors in proptest::collection::vec(1e-12f64..1.0, 3..6), target in 0.5f64..3.0) {
        let rows: Vec<(usize, f64, f64)> =
            errors.iter().enumerate().map(|(k, &e)| (8usize << k, 0.0, e)).collect();
        let t = ConvergenceTable::new("p", RefinementAxis::Space, target, &rows).unwrap();
        prop_assert_eq!(t.passed, t.recompute_pass());
        let json = serde_json::to_string(&t).unwrap();
        let back: ConvergenceTable = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back.passed, back.recompute_pass());
        prop_assert_eq!(back, t);
    }

    #[test]
    fn check_outcomes_are_recomputable(value in finite(), tol in finite(), rel in 0usize..3) {
        let relation = [Relation::Le, Relation::Ge, Relation::Gt][rel];
        let c = CheckOutcome::new("c", value, relation, tol);
        prop_assert_eq!(c.passed, c.recompute());
        let back: CheckOutcome = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        prop_assert_eq!(back, c);
    }

    #[test]
    fn diagnostics_csv_round_trip(rows in proptest::collection::vec((0usize..10_000, [finite(), finite(), finite(), finite(), finite(), finite()]), 0..40)) {
        let rows: Vec<StepDiagnostics> = rows
            .into_iter()
            .map(|(step, v)| StepDiagnostics {
                step,
                t: v[0],
                energy: v[1],
                div_norm: v[2],
                grad_y_sq: v[3],
                grad_tau_sq: v[4],
                residual: v[5],
            })
            .collect();
        let text = diagnostics_to_csv(&rows);
        prop_assert_eq!(&diagnostics_from_csv(&text).unwrap(), &rows);
        prop_assert_eq!(EnergyReport::from_csv(&text).unwrap(), EnergyReport::from_diagnostics(&rows));
    }

    #[test]
    fn energy_monotonicity_flag(energy in proptest::collection::vec(0.0f64..10.0, 1..30)) {
        let rows: Vec<StepDiagnostics> = energy
            .iter()
            .enumerate()
            .map(|(k, &e)| StepDiagnostics { step: k, t: k as f64, energy: e, div_norm: 0.0, grad_y_sq: 0.0, grad_tau_sq: 0.0, residual: 0.0 })
            .collect();
        let rep = EnergyReport::from_diagnostics(&rows);
        let strict = energy.windows(2).all(|w| w[1] <= w[0]);
        if strict {
            prop_assert!(rep.nonincreasing);
        }
        prop_assert_eq!(rep.sup_energy, energy.iter().copied().fold(0.0, f64::max));
    }
}

#[test]
fn report_json_keys() {
    let cfg = boussinesq::bench::ScenarioConfig::with_required(8, 0.01, 0.1);
    let mut rep = SolveReport::new(&cfg);
    rep.checks
        .push(CheckOutcome::at_most("divergence", 1e-15, 1e-9));
    rep.norms.insert("final_energy".into(), 0.25);
    let v: serde_json::Value = serde_json::from_str(&rep.to_json()).unwrap();
    for k in ["config", "checks", "norms", "timings"] {
        assert!(v.get(k).is_some(), "{k}");
    }
    assert_eq!(v["norms"]["final_energy"].as_f64(), Some(0.25));
    assert!(v.get("convergence").is_none());
    assert_eq!(v["checks"][0]["relation"], "le");
}
