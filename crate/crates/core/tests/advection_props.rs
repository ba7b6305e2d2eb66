use boussinesq::leray::Projector;
use boussinesq::mesh::{advect_scalar, advect_vector, inner_scalar, inner_vector};
use boussinesq::rng::Seeded;
use boussinesq::Grid;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Zero-trace fields: advection by a solenoidal carrier is skew.
    #[test]
    fn advection_is_skew(nx in 4usize..16, ny in 4usize..16, smooth in any::<bool>(), seed in any::<u64>()) {
        let g = Grid::new(nx, ny, 1.0, 0.7).unwrap();
        let mut rng = Seeded::new(seed);
        let mut z = if smooth { rng.smooth_vector(&g, 3) } else { rng.vector_noise(&g) };
        z.clear_normal_trace();
        let z = Projector::new(&g).unwrap().project(&z).unwrap();
        let mut u = rng.vector_noise(&g);
        u.clear_normal_trace();
        let tau = rng.scalar_noise(&g);
        let scale = z.max_abs().max(f64::MIN_POSITIVE) / g.h();
        let vel = inner_vector(&g, &advect_vector(&g, &z, &u, None), &u);
        let temp = inner_scalar(&g, &advect_scalar(&g, &z, &tau, None), &tau);
        prop_assert!(vel.abs() <= 1e-12 * scale * inner_vector(&g, &u, &u), "{vel:e}");
        prop_assert!(temp.abs() <= 1e-12 * scale * inner_scalar(&g, &tau, &tau), "{temp:e}");
    }
}
