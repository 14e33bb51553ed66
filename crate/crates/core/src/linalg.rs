//! Dense complex matrix helpers shared by every layer.
//!
//! Operators on the `d`-dimensional Hilbert space and superoperator matrices
//! are both plain `nalgebra` dynamic matrices over `Complex64`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// A `d x d` complex matrix: states, observables, Hamiltonians, jump operators.
pub type DenseOperator = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn dagger(a: &DenseOperator) -> DenseOperator {
    a.adjoint()
}

pub fn commutator(a: &DenseOperator, b: &DenseOperator) -> DenseOperator {
    a * b - b * a
}

pub fn anticommutator(a: &DenseOperator, b: &DenseOperator) -> DenseOperator {
    a * b + b * a
}

pub fn trace(a: &DenseOperator) -> C64 {
    a.trace()
}

pub fn kron(a: &DenseOperator, b: &DenseOperator) -> DenseOperator {
    a.kronecker(b)
}

/// Largest absolute entry; zero for an empty matrix.
pub fn max_norm(a: &DMatrix<C64>) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

pub fn is_finite(a: &DMatrix<C64>) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn hermiticity_residual(a: &DMatrix<C64>) -> f64 {
    max_norm(&(a - a.adjoint()))
}

pub fn check_square(a: &DMatrix<C64>) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension {
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    Ok(a.nrows())
}

pub fn check_same_dim(a: &DMatrix<C64>, b: &DMatrix<C64>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::Dimension {
            expected: a.nrows(),
            found: b.nrows(),
        });
    }
    Ok(())
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues sorted ascending.
///
/// The input is symmetrized first so round-off asymmetry never leaks into
/// the solver.
pub fn hermitian_eigen(a: &DMatrix<C64>) -> (DVector<f64>, DMatrix<C64>) {
    let n = a.nrows();
    if n == 0 {
        return (DVector::zeros(0), DMatrix::zeros(0, 0));
    }
    let sym = (a + a.adjoint()) * c(0.5);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Largest singular value. Zero for empty matrices.
pub fn spectral_norm(a: &DMatrix<C64>) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    // Eigenvalues of the smaller Gram matrix are cheaper than an SVD and
    // accurate enough for a norm.
    let gram = if a.nrows() >= a.ncols() {
        a.adjoint() * a
    } else {
        a * a.adjoint()
    };
    let (w, _) = hermitian_eigen(&gram);
    w[w.len() - 1].max(0.0).sqrt()
}

/// Trace norm of a Hermitian matrix (sum of absolute eigenvalues).
pub fn trace_norm_hermitian(a: &DenseOperator) -> f64 {
    let (w, _) = hermitian_eigen(a);
    w.iter().map(|x| x.abs()).sum()
}

/// Hermitian-basis coordinates of a Hermitian matrix with respect to the
/// Hilbert–Schmidt orthonormal basis
/// `{E_ii} ∪ {(E_ij + E_ji)/√2} ∪ {(−iE_ij + iE_ji)/√2}` for `i < j`.
///
/// Any Hermiticity-preserving superoperator is a real matrix in this basis.
pub fn hermitian_coords(a: &DenseOperator) -> DVector<f64> {
    let d = a.nrows();
    let mut out = DVector::zeros(d * d);
    let s2 = std::f64::consts::SQRT_2;
    for i in 0..d {
        out[i] = a[(i, i)].re;
    }
    let mut k = d;
    for i in 0..d {
        for j in (i + 1)..d {
            // average the two triangles so slightly non-Hermitian inputs are
            // projected rather than read off one side
            let z = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            out[k] = s2 * z.re;
            out[k + 1] = -s2 * z.im;
            k += 2;
        }
    }
    out
}

pub fn from_hermitian_coords(v: &DVector<f64>, d: usize) -> DenseOperator {
    let mut a = DenseOperator::zeros(d, d);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..d {
        a[(i, i)] = c(v[i]);
    }
    let mut k = d;
    for i in 0..d {
        for j in (i + 1)..d {
            let z = C64::new(v[k] * r, -v[k + 1] * r);
            a[(i, j)] = z;
            a[(j, i)] = z.conj();
            k += 2;
        }
    }
    a
}

/// Real matrix of a Hermiticity-preserving linear map in the Hermitian basis
/// of [`hermitian_coords`].
pub fn hermitian_basis_matrix<F>(d: usize, map: F) -> DMatrix<f64>
where
    F: Fn(&DenseOperator) -> DenseOperator,
{
    let n = d * d;
    let mut m = DMatrix::zeros(n, n);
    let mut e = DVector::zeros(n);
    for k in 0..n {
        e[k] = 1.0;
        let b = from_hermitian_coords(&e, d);
        m.set_column(k, &hermitian_coords(&map(&b)));
        e[k] = 0.0;
    }
    m
}

/// Column-major vectorization `vec(A)`.
pub fn vectorize(a: &DenseOperator) -> DVector<C64> {
    DVector::from_column_slice(a.as_slice())
}

pub fn unvectorize(v: &DVector<C64>, d: usize) -> DenseOperator {
    DenseOperator::from_column_slice(d, d, v.as_slice())
}

/// Haar-random pure state `|ψ⟩⟨ψ|`.
pub fn random_pure_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DenseOperator {
    let psi = DVector::from_fn(d, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let psi = &psi / c(psi.norm());
    &psi * psi.adjoint()
}

/// Random Hermitian matrix with i.i.d. Gaussian entries (GUE-like).
pub fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DenseOperator {
    let g = random_complex_matrix(d, d, rng);
    (&g + g.adjoint()) * c(0.5)
}

pub fn random_complex_matrix<R: Rng + ?Sized>(r: usize, cols: usize, rng: &mut R) -> DMatrix<C64> {
    DMatrix::from_fn(r, cols, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

pub fn random_complex_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<C64> {
    DVector::from_fn(n, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// `⟨x, y⟩ = x† y` for coordinate vectors in an orthonormal basis.
pub fn inner(x: &DVector<C64>, y: &DVector<C64>) -> C64 {
    x.dotc(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hermitian_coords_round_trip_and_isometry() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_hermitian(4, &mut rng);
        let v = hermitian_coords(&a);
        let back = from_hermitian_coords(&v, 4);
        assert!(max_norm(&(&back - &a)) < 1e-12);
        // Hilbert–Schmidt norm is preserved
        let hs = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert_relative_eq!(v.norm(), hs, epsilon = 1e-12);
    }

    #[test]
    fn eigen_sorted_and_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_hermitian(5, &mut rng);
        let (w, v) = hermitian_eigen(&a);
        for k in 1..w.len() {
            assert!(w[k - 1] <= w[k]);
        }
        let diag = DMatrix::from_diagonal(&w.map(c));
        let rec = &v * diag * v.adjoint();
        assert!(max_norm(&(rec - a)) < 1e-10);
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![c(1.0), c(-3.0), C64::new(0.0, 2.0)]));
        assert_relative_eq!(spectral_norm(&m), 3.0, epsilon = 1e-12);
        let wide = DMatrix::from_row_slice(1, 2, &[c(3.0), c(4.0)]);
        assert_relative_eq!(spectral_norm(&wide), 5.0, epsilon = 1e-12);
    }

    #[test]
    fn trace_norm_of_pauli_z_is_two() {
        let z = DMatrix::from_diagonal(&DVector::from_vec(vec![c(1.0), c(-1.0)]));
        assert_relative_eq!(trace_norm_hermitian(&z), 2.0, epsilon = 1e-14);
    }
}
