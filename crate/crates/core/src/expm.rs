//! Dense matrix exponential: scaling and squaring with the degree-13
//! diagonal Padé approximant (Higham, SIAM J. Matrix Anal. Appl. 26, 2005).

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{c, C64};

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const THETA13: f64 = 5.371920351148152;

fn one_norm(a: &DMatrix<C64>) -> f64 {
    a.column_iter()
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `e^A` for a square complex matrix.
pub fn expm(a: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Dimension {
            expected: n,
            found: a.ncols(),
        });
    }
    let id = DMatrix::<C64>::identity(n, n);
    let norm = one_norm(a);
    if !norm.is_finite() {
        return Err(Error::Numeric {
            message: "matrix exponential of a non-finite matrix".into(),
            residual: norm,
        });
    }
    if norm == 0.0 {
        return Ok(id);
    }
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = a * c(0.5f64.powi(s));
    let b = &PADE13;
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (&a6 * c(b[13]) + &a4 * c(b[11]) + &a2 * c(b[9]))
        + &a6 * c(b[7])
        + &a4 * c(b[5])
        + &a2 * c(b[3])
        + &id * c(b[1]);
    let u = &a * u_inner;
    let v = &a6 * (&a6 * c(b[12]) + &a4 * c(b[10]) + &a2 * c(b[8]))
        + &a6 * c(b[6])
        + &a4 * c(b[4])
        + &a2 * c(b[2])
        + &id * c(b[0]);
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).ok_or_else(|| Error::Numeric {
        message: "Padé denominator is singular".into(),
        residual: f64::NAN,
    })?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_eigen, max_norm, random_complex_matrix, random_hermitian};
    use nalgebra::DVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_and_diagonal() {
        let z = DMatrix::<C64>::zeros(3, 3);
        assert_eq!(expm(&z).unwrap(), DMatrix::identity(3, 3));
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![c(-20.0), c(0.5), C64::new(0.0, 3.0)]));
        let e = expm(&d).unwrap();
        assert!((e[(0, 0)] - c((-20f64).exp())).norm() < 1e-22);
        assert!((e[(1, 1)] - c(0.5f64.exp())).norm() < 1e-14);
        assert!((e[(2, 2)] - C64::new(3f64.cos(), 3f64.sin())).norm() < 1e-14);
    }

    #[test]
    fn rotation_generator() {
        let t = 7.3;
        let g = DMatrix::from_row_slice(2, 2, &[c(0.0), c(-t), c(t), c(0.0)]);
        let e = expm(&g).unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[c(t.cos()), c(-t.sin()), c(t.sin()), c(t.cos())]);
        assert!(max_norm(&(e - want)) < 1e-13);
    }

    #[test]
    fn nilpotent_is_exact_polynomial() {
        let mut n = DMatrix::<C64>::zeros(3, 3);
        n[(0, 1)] = c(2.0);
        n[(1, 2)] = c(3.0);
        let e = expm(&n).unwrap();
        let want = DMatrix::identity(3, 3) + &n + &n * &n * c(0.5);
        assert!(max_norm(&(e - want)) < 1e-13);
    }

    #[test]
    fn matches_spectral_exponential_for_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for scale in [0.01, 1.0, 30.0] {
            let h = random_hermitian(6, &mut rng) * c(scale);
            let (w, v) = hermitian_eigen(&h);
            let want = &v * DMatrix::from_diagonal(&w.map(|x| c(x.exp()))) * v.adjoint();
            let got = expm(&h).unwrap();
            assert!(max_norm(&(got - &want)) <= 1e-10 * max_norm(&want));
        }
    }

    #[test]
    fn inverse_and_semigroup() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_complex_matrix(5, 5, &mut rng);
        let prod = expm(&a).unwrap() * expm(&(-&a)).unwrap();
        assert!(max_norm(&(prod - DMatrix::identity(5, 5))) < 1e-10);
        let half = expm(&(&a * c(0.5))).unwrap();
        assert!(max_norm(&(&half * &half - expm(&a).unwrap())) < 1e-10 * max_norm(&expm(&a).unwrap()));
    }
}
