use evtrig_core::graph::{random_connected_undirected, random_weight_balanced, symmetric_part};
use evtrig_core::metrics::disagreement;
use evtrig_core::{DVector, Xorshift64Star};
use proptest::prelude::*;

fn random_vec(n: usize, rng: &mut Xorshift64Star) -> DVector<f64> {
    DVector::from_vec(rng.uniform_vec(n, -5.0, 5.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn laplacian_rows_and_columns_sum_to_zero(seed in any::<u64>(), n in 2usize..=8, directed in any::<bool>()) {
        let mut rng = Xorshift64Star::new(seed);
        let g = if directed {
            random_weight_balanced(n, 3, (0.1, 3.0), &mut rng)
        } else {
            random_connected_undirected(n, 0.4, Some((0.1, 3.0)), &mut rng)
        };
        let l = g.laplacian();
        for i in 0..n {
            prop_assert!(l.row(i).sum().abs() <= 1e-12);
            prop_assert!(l.column(i).sum().abs() <= 1e-12);
        }
        prop_assert!(g.is_weight_balanced());
    }

    #[test]
    fn quadratic_form_dominates_disagreement(seed in any::<u64>(), n in 2usize..=8) {
        let mut rng = Xorshift64Star::new(seed);
        let g = random_connected_undirected(n, 0.3, Some((0.2, 2.0)), &mut rng);
        let lambda2 = g.spectral_info().unwrap().lambda2;
        let l = g.laplacian();
        for _ in 0..100 {
            let x = random_vec(n, &mut rng);
            let d = disagreement(&x);
            prop_assert!(x.dot(&(&l * &x)) >= lambda2 * d * d - 1e-9);
        }
    }

    #[test]
    fn sandwich_on_balanced_digraphs(seed in any::<u64>(), n in 2usize..=7, cycles in 0usize..5) {
        let mut rng = Xorshift64Star::new(seed);
        let g = random_weight_balanced(n, cycles, (0.2, 2.0), &mut rng);
        let info = g.spectral_info().unwrap();
        let l = g.laplacian();
        let s = symmetric_part(&l);
        let s2 = &s * &s;
        for _ in 0..50 {
            let x = random_vec(n, &mut rng);
            let q = x.dot(&(&l * &x));
            let mid = x.dot(&(&s2 * &x));
            let tol = 1e-9 * (1.0 + mid.abs());
            prop_assert!(info.lambda2 * q <= mid + tol);
            prop_assert!(mid <= info.lambda_n * q + tol);
        }
    }
}
