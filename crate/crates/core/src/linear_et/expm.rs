//! Matrix exponential by scaling and squaring with a degree-13 Padé approximant.

use nalgebra::DMatrix;

use super::LinearEtError;

const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

/// Largest 1-norm for which the unscaled degree-13 approximant is accurate to unit roundoff.
const THETA13: f64 = 5.371_920_351_148_152;

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// `exp(M t)`.
pub fn matrix_exponential(m: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>, LinearEtError> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(LinearEtError::Dimension { what: "M", expected: (n, n), found: (n, m.ncols()) });
    }
    if !t.is_finite() || m.iter().any(|v| !v.is_finite()) {
        return Err(LinearEtError::NonFinite("matrix exponential input"));
    }
    let a = m * t;
    let norm = one_norm(&a);
    let squarings = if norm > THETA13 { (norm / THETA13).log2().ceil() as i32 } else { 0 };
    if squarings > 1000 {
        return Err(LinearEtError::Overflow);
    }
    let a = a / 2f64.powi(squarings);

    let id = DMatrix::<f64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &PADE13;
    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]) + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &id * b[1];
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]) + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &id * b[0];
    let mut r = (&v - &u).lu().solve(&(&v + &u)).ok_or(LinearEtError::Singular("Padé denominator"))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(LinearEtError::Overflow);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Xorshift64Star;
    use nalgebra::dmatrix;

    fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    #[test]
    fn zero_is_identity() {
        let e = matrix_exponential(&DMatrix::zeros(3, 3), 1.0).unwrap();
        assert_eq!(e, DMatrix::identity(3, 3));
    }

    #[test]
    fn diagonal_case() {
        let e = matrix_exponential(&dmatrix![-1.0, 0.0; 0.0, -2.0], 1.0).unwrap();
        assert!((e[(0, 0)] - (-1.0f64).exp()).abs() < 1e-15);
        assert!((e[(1, 1)] - (-2.0f64).exp()).abs() < 1e-15);
        assert_eq!(e[(0, 1)], 0.0);
    }

    #[test]
    fn nilpotent_case() {
        for t in [0.3, 2.0, 17.0] {
            let e = matrix_exponential(&dmatrix![0.0, 1.0; 0.0, 0.0], t).unwrap();
            assert!(rel_err(&e, &dmatrix![1.0, t; 0.0, 1.0]) < 1e-14);
        }
    }

    #[test]
    fn rotation_generator() {
        // exp of [[0, -w], [w, 0]] t is a rotation by w t
        let e = matrix_exponential(&dmatrix![0.0, -3.0; 3.0, 0.0], 2.0).unwrap();
        let c = 6.0f64.cos();
        let s = 6.0f64.sin();
        assert!(rel_err(&e, &dmatrix![c, -s; s, c]) < 1e-13);
    }

    #[test]
    fn symmetric_matches_eigendecomposition() {
        let mut rng = Xorshift64Star::new(5);
        for _ in 0..20 {
            let g = DMatrix::from_fn(4, 4, |_, _| rng.uniform(-1.0, 1.0));
            let s = (&g + g.transpose()) * 2.0;
            let eig = s.clone().symmetric_eigen();
            let expected = &eig.eigenvectors
                * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| (l * 1.5).exp()))
                * eig.eigenvectors.transpose();
            assert!(rel_err(&matrix_exponential(&s, 1.5).unwrap(), &expected) < 1e-12);
        }
    }

    #[test]
    fn large_norm_against_nalgebra() {
        let mut rng = Xorshift64Star::new(11);
        for _ in 0..20 {
            let m = DMatrix::from_fn(4, 4, |_, _| rng.uniform(-1.0, 1.0)) - DMatrix::identity(4, 4) * 3.0;
            let t = 12.0;
            let ours = matrix_exponential(&m, t).unwrap();
            let theirs = (&m * t).exp();
            assert!(rel_err(&ours, &theirs) < 1e-10, "{}", rel_err(&ours, &theirs));
        }
    }

    #[test]
    fn overflow_and_bad_input() {
        assert_eq!(matrix_exponential(&dmatrix![1.0], 1e6), Err(LinearEtError::Overflow));
        assert!(matches!(matrix_exponential(&dmatrix![f64::NAN], 1.0), Err(LinearEtError::NonFinite(_))));
        assert!(matches!(matrix_exponential(&DMatrix::zeros(2, 3), 1.0), Err(LinearEtError::Dimension { .. })));
    }
}
