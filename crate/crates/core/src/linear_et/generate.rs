use nalgebra::DMatrix;

use super::LinearEtSystem;
use crate::rng::Xorshift64Star;

fn random_matrix(n: usize, m: usize, rng: &mut Xorshift64Star) -> DMatrix<f64> {
    DMatrix::from_fn(n, m, |_, _| rng.uniform(-1.0, 1.0))
}

/// Random admissible system with `n` states and `n` inputs.
///
/// The closed loop is `-(cI + G G^T) + (S - S^T)/2`, whose symmetric part is
/// negative definite, and `K` is solved from it. `R` is scaled below
/// `lambda_min(Q)` so `Q - R` stays positive definite.
pub fn random_system(n: usize, rng: &mut Xorshift64Star) -> LinearEtSystem {
    assert!(n > 0, "system dimension must be positive");
    loop {
        let g = random_matrix(n, n, rng);
        let s = random_matrix(n, n, rng);
        let c = rng.uniform(0.2, 1.0);
        let acl = -(DMatrix::identity(n, n) * c + &g * g.transpose()) + (&s - s.transpose()) * 0.5;
        let a = random_matrix(n, n, rng);
        let b = DMatrix::identity(n, n) + random_matrix(n, n, rng) * 0.3;
        let Some(k) = b.clone().lu().solve(&(&acl - &a)) else { continue };

        let h = random_matrix(n, n, rng);
        let q = &h * h.transpose() + DMatrix::identity(n, n);
        let w = random_matrix(n, n, rng);
        let shape = &w * w.transpose() + DMatrix::identity(n, n);
        let shape_max = shape.symmetric_eigenvalues().max();
        let q_min = q.symmetric_eigenvalues().min();
        let gamma = rng.uniform(0.2, 0.8);
        let r = shape * (gamma * q_min / shape_max);
        let r = (&r + r.transpose()) * 0.5;

        if let Ok(sys) = LinearEtSystem::new(a, b, k, q, r) {
            return sys;
        }
    }
}
