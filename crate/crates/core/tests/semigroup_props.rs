use boussinesq::rng::Seeded;
use boussinesq::semigroup::{assemble_coupled_operator, CoupledOperator, StateVector};
use boussinesq::{Grid, PhysicalParams};
use proptest::prelude::*;
use std::sync::OnceLock;

fn op() -> &'static CoupledOperator {
    static OP: OnceLock<CoupledOperator> = OnceLock::new();
    OP.get_or_init(|| {
        let g = Grid::unit(5).unwrap();
        let prm = PhysicalParams {
            nu: 1.0,
            mu: 0.8,
            beta: [0.3, 1.0],
            lambda0: 1.0,
        };
        assemble_coupled_operator(&g, None, &prm).unwrap()
    })
}

fn state(seed: u64) -> StateVector {
    let mut rng = Seeded::new(seed);
    StateVector((0..op().dim()).map(|_| rng.normal()).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn semigroup_law(s in 0.0f64..1.0, t in 0.0f64..1.0, seed in any::<u64>()) {
        let x = state(seed);
        let a = op().semigroup_apply(s + t, &x).unwrap();
        let b = op().semigroup_apply(s, &op().semigroup_apply(t, &x).unwrap()).unwrap();
        prop_assert!(a.distance(&b) <= 1e-9 * x.norm());
    }

    #[test]
    fn powers_add(a in 0.05f64..0.9, b in 0.05f64..0.9, seed in any::<u64>()) {
        let x = state(seed);
        let ab = op().fractional_power_apply(a + b, &x).unwrap().0;
        let step = op().fractional_power_apply(b, &op().fractional_power_apply(a, &x).unwrap().0).unwrap().0;
        prop_assert!(ab.distance(&step) <= 1e-8 * ab.norm(), "{:e}", ab.distance(&step) / ab.norm());
    }

    #[test]
    fn semigroup_contracts_in_the_shifted_norm(t in 0.01f64..2.0, seed in any::<u64>()) {
        let x = state(seed);
        let y = op().semigroup_apply(t, &x).unwrap();
        prop_assert!(y.norm().is_finite());
        prop_assert!(y.norm() <= x.norm() * 1.0001);
    }
}

#[test]
fn zero_time_is_identity() {
    let x = state(1);
    assert!(op().semigroup_apply(0.0, &x).unwrap().distance(&x) <= 1e-12 * x.norm());
}
