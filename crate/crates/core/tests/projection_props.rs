use boussinesq::leray::{orthogonality_defect, Projector};
use boussinesq::mesh::{divergence, inner_vector, norm_vector};
use boussinesq::rng::Seeded;
use boussinesq::Grid;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn projection_identities(nx in 4usize..14, ny in 4usize..14, lx in 0.5f64..2.0, seed in any::<u64>()) {
        let g = Grid::new(nx, ny, lx, 1.0).unwrap();
        let proj = Projector::new(&g).unwrap();
        let mut w = Seeded::new(seed).vector_noise(&g);
        w.clear_normal_trace();
        let d = proj.decompose(&w).unwrap();
        let n2 = inner_vector(&g, &w, &w);

        let mut again = proj.project(&d.solenoidal).unwrap();
        again.axpy(-1.0, &d.solenoidal);
        prop_assert!(norm_vector(&g, &again) <= 1e-9 * n2.sqrt());
        prop_assert!(orthogonality_defect(&g, &d, &w) <= 1e-9);
        let parts = inner_vector(&g, &d.solenoidal, &d.solenoidal) + inner_vector(&g, &d.gradient_part, &d.gradient_part);
        prop_assert!((parts - n2).abs() <= 1e-9 * n2);
        let div = divergence(&g, &d.solenoidal).max_abs();
        prop_assert!(div * g.h() <= 1e-9 * w.max_abs().max(1.0), "div {div:e}");
    }

    #[test]
    fn projection_is_linear(seed in any::<u64>(), a in -3.0f64..3.0) {
        let g = Grid::unit(8).unwrap();
        let proj = Projector::new(&g).unwrap();
        let mut rng = Seeded::new(seed);
        let (mut w1, mut w2) = (rng.vector_noise(&g), rng.smooth_vector(&g, 3));
        w1.clear_normal_trace();
        w2.clear_normal_trace();
        let mut sum = w1.scaled(a);
        sum.axpy(1.0, &w2);
        let mut lhs = proj.project(&sum).unwrap();
        lhs.axpy(-a, &proj.project(&w1).unwrap());
        lhs.axpy(-1.0, &proj.project(&w2).unwrap());
        prop_assert!(lhs.max_abs() <= 1e-11 * (1.0 + a.abs()) * sum.max_abs().max(1.0));
    }
}
