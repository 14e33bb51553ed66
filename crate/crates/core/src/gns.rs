//! GNS geometry `⟨A, B⟩ = tr(σ A† B)` and superoperator matrices.
//!
//! A [`GnsFrame`] fixes a GNS-orthonormal operator basis built in σ's
//! eigenbasis `σ = U diag(s) U†`:
//!
//! * off-diagonal elements `U E_ij U† / √s_j` for `i ≠ j`;
//! * the diagonal block `U diag(y) U†` with `y_i = (Hz)_i / √s_i`, where `H`
//!   is the Householder reflection sending `e_0` to `(√s_0, …, √s_{d-1})`.
//!
//! Basis element 0 is therefore exactly the identity and every other element
//! satisfies `tr(σ B) = 0`. Coordinates of `A` are `⟨B_k, A⟩`, so the GNS
//! adjoint of a superoperator is the conjugate transpose of its matrix.

use std::ops::Range;
use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    c, check_same_dim, check_square, hermitian_eigen, hermiticity_residual, is_finite, max_norm,
    random_complex_matrix, DenseOperator, C64, ZERO,
};

/// Relative rank tolerance for σ.
pub const RANK_TOL: f64 = 1e-12;

/// Tolerance on σ being Hermitian, trace one and PSD.
pub const STATE_TOL: f64 = 1e-10;

/// Relative tolerance of the linearity and reconstruction spot checks.
pub const CONTRACT_TOL: f64 = 1e-9;

static NEXT_FRAME: AtomicU64 = AtomicU64::new(1);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct FrameId(u64);

/// `tr(σ a† b)` for an arbitrary (not necessarily full-rank) σ.
pub fn gns_inner(sigma: &DenseOperator, a: &DenseOperator, b: &DenseOperator) -> Result<C64> {
    check_square(sigma)?;
    check_same_dim(sigma, a)?;
    check_same_dim(sigma, b)?;
    Ok((sigma * a.adjoint() * b).trace())
}

#[derive(Clone, Debug)]
pub struct GnsFrame {
    id: FrameId,
    dim: usize,
    sigma: DenseOperator,
    eigvals: DVector<f64>,
    eigvecs: DenseOperator,
    sqrt_s: DVector<f64>,
    householder: DVector<f64>,
    offdiag: Vec<(usize, usize)>,
}

impl GnsFrame {
    /// Build the frame of a full-rank density matrix.
    pub fn new(sigma: &DenseOperator) -> Result<Self> {
        let d = check_square(sigma)?;
        if d == 0 {
            return Err(Error::Dimension { expected: 1, found: 0 });
        }
        if !is_finite(sigma) {
            return Err(Error::Domain("sigma has non-finite entries".into()));
        }
        let herm = hermiticity_residual(sigma);
        if herm > STATE_TOL {
            return Err(Error::Domain(format!("sigma is not Hermitian (residual {herm:e})")));
        }
        let tr = sigma.trace();
        if (tr - c(1.0)).norm() > STATE_TOL {
            return Err(Error::Domain(format!("sigma has trace {tr}, expected 1")));
        }
        let (eigvals, eigvecs) = hermitian_eigen(sigma);
        let smallest = eigvals[0];
        let largest = eigvals[d - 1];
        if smallest < -STATE_TOL {
            return Err(Error::Domain(format!("sigma is not PSD (eigenvalue {smallest:e})")));
        }
        if smallest <= RANK_TOL * largest {
            return Err(Error::Frame {
                reason: "sigma is not full rank".into(),
                smallest_eigenvalue: smallest,
            });
        }
        let sqrt_s = eigvals.map(f64::sqrt);
        let v = &sqrt_s / sqrt_s.norm();
        let mut w = v.clone();
        w[0] -= 1.0;
        // v = e_0 only for d = 1; the reflection degenerates to the identity
        if w.norm() < 1e-15 {
            w.fill(0.0);
        }
        let mut offdiag = Vec::with_capacity(d * d - d);
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    offdiag.push((i, j));
                }
            }
        }
        Ok(GnsFrame {
            id: FrameId(NEXT_FRAME.fetch_add(1, Ordering::Relaxed)),
            dim: d,
            sigma: (sigma + sigma.adjoint()) * c(0.5),
            eigvals,
            eigvecs,
            sqrt_s,
            householder: w,
            offdiag,
        })
    }

    pub fn id(&self) -> FrameId {
        self.id
    }

    /// Hilbert-space dimension `d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of basis elements, `d²`.
    pub fn len(&self) -> usize {
        self.dim * self.dim
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn sigma(&self) -> &DenseOperator {
        &self.sigma
    }

    /// Eigenvalues of σ, ascending.
    pub fn sigma_eigvals(&self) -> &DVector<f64> {
        &self.eigvals
    }

    pub fn sigma_min_eigenvalue(&self) -> f64 {
        self.eigvals[0]
    }

    /// Index of the identity element.
    pub fn identity_index(&self) -> usize {
        0
    }

    /// Coordinates spanning `{A : tr(σA) = 0}`.
    pub fn traceless_selector(&self) -> Range<usize> {
        1..self.len()
    }

    pub fn inner(&self, a: &DenseOperator, b: &DenseOperator) -> Result<C64> {
        gns_inner(&self.sigma, a, b)
    }

    pub fn norm(&self, a: &DenseOperator) -> Result<f64> {
        Ok(self.inner(a, a)?.re.max(0.0).sqrt())
    }

    fn reflect(&self, y: &mut DVector<C64>) {
        let w = &self.householder;
        let ww = w.norm_squared();
        if ww == 0.0 {
            return;
        }
        let proj = y.iter().zip(w.iter()).fold(ZERO, |acc, (yi, wi)| acc + yi * *wi);
        let f = proj * (2.0 / ww);
        for (yi, wi) in y.iter_mut().zip(w.iter()) {
            *yi -= f * *wi;
        }
    }

    /// GNS coordinates `⟨B_k, A⟩`.
    pub fn to_coords(&self, a: &DenseOperator) -> Result<DVector<C64>> {
        check_same_dim(&self.sigma, a)?;
        let d = self.dim;
        let at = self.eigvecs.adjoint() * a * &self.eigvecs;
        let mut out = DVector::zeros(d * d);
        let mut y = DVector::from_fn(d, |i, _| at[(i, i)] * self.sqrt_s[i]);
        self.reflect(&mut y);
        out.rows_mut(0, d).copy_from(&y);
        for (k, &(i, j)) in self.offdiag.iter().enumerate() {
            out[d + k] = at[(i, j)] * self.sqrt_s[j];
        }
        Ok(out)
    }

    pub fn from_coords(&self, v: &DVector<C64>) -> Result<DenseOperator> {
        let d = self.dim;
        if v.len() != d * d {
            return Err(Error::Dimension {
                expected: d * d,
                found: v.len(),
            });
        }
        let mut at = DenseOperator::zeros(d, d);
        let mut y = v.rows(0, d).into_owned();
        self.reflect(&mut y);
        for i in 0..d {
            at[(i, i)] = y[i] / self.sqrt_s[i];
        }
        for (k, &(i, j)) in self.offdiag.iter().enumerate() {
            at[(i, j)] = v[d + k] / self.sqrt_s[j];
        }
        Ok(&self.eigvecs * at * self.eigvecs.adjoint())
    }

    /// Basis element `k`, materialized on demand.
    pub fn basis_element(&self, k: usize) -> Result<DenseOperator> {
        let n = self.len();
        if k >= n {
            return Err(Error::Dimension { expected: n, found: k + 1 });
        }
        let mut e = DVector::zeros(n);
        e[k] = c(1.0);
        self.from_coords(&e)
    }

    /// Matrix of a linear operator-valued map in this frame.
    ///
    /// Column `k` holds the coordinates of `action(B_k)`. Linearity is
    /// spot-checked on random operators and the result is checked to
    /// reconstruct `action(A)` for a random `A`.
    pub fn superop_to_matrix<F>(&self, action: F) -> Result<SuperOp>
    where
        F: Fn(&DenseOperator) -> DenseOperator,
    {
        let n = self.len();
        let mut m = DMatrix::zeros(n, n);
        for k in 0..n {
            let b = self.basis_element(k)?;
            let image = action(&b);
            check_same_dim(&self.sigma, &image)?;
            m.set_column(k, &self.to_coords(&image)?);
        }
        if !is_finite(&m) {
            return Err(Error::Contract("superoperator matrix has non-finite entries".into()));
        }
        let op = SuperOp {
            coords: Coordinates::Gns(self.id),
            matrix: m,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0f9a5);
        check_linearity(self.dim, &action, &mut rng)?;
        let a = random_complex_matrix(self.dim, self.dim, &mut rng);
        let expected = self.to_coords(&action(&a))?;
        let got = &op.matrix * self.to_coords(&a)?;
        let scale = expected.iter().fold(1.0f64, |s, z| s.max(z.norm()));
        let resid = (expected - got).iter().fold(0.0f64, |s, z| s.max(z.norm()));
        if resid > CONTRACT_TOL * scale {
            return Err(Error::Contract(format!(
                "matrix does not reconstruct the action (residual {resid:e})"
            )));
        }
        Ok(op)
    }

    /// `A ↦ A` in this frame.
    pub fn identity_superop(&self) -> SuperOp {
        SuperOp {
            coords: Coordinates::Gns(self.id),
            matrix: DMatrix::identity(self.len(), self.len()),
        }
    }

    pub fn check_owns(&self, m: &SuperOp) -> Result<()> {
        if m.coords != Coordinates::Gns(self.id) {
            return Err(Error::FrameMismatch);
        }
        Ok(())
    }
}

fn check_linearity<F, R>(d: usize, action: &F, rng: &mut R) -> Result<()>
where
    F: Fn(&DenseOperator) -> DenseOperator,
    R: rand::Rng,
{
    for _ in 0..2 {
        let a = random_complex_matrix(d, d, rng);
        let b = random_complex_matrix(d, d, rng);
        let k = C64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let lhs = action(&(&a + &b * k));
        let rhs = action(&a) + action(&b) * k;
        let scale = max_norm(&lhs).max(max_norm(&rhs)).max(1.0);
        let resid = max_norm(&(lhs - rhs));
        if resid > CONTRACT_TOL * scale {
            return Err(Error::Contract(format!("action is not linear (residual {resid:e})")));
        }
    }
    Ok(())
}

/// Coordinate system of a [`SuperOp`] matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Coordinates {
    /// Full GNS frame, `d²` coordinates.
    Gns(FrameId),
    /// GNS frame with the identity direction removed, `d² − 1` coordinates.
    GnsTraceless(FrameId),
    /// Column-major `vec(A)` in matrix units (Hilbert–Schmidt geometry).
    MatrixUnits { dim: usize },
}

/// Matrix of a superoperator together with the coordinates it lives in.
#[derive(Clone, Debug)]
pub struct SuperOp {
    coords: Coordinates,
    matrix: DMatrix<C64>,
}

impl SuperOp {
    pub fn from_matrix(coords: Coordinates, matrix: DMatrix<C64>) -> Result<Self> {
        check_square(&matrix)?;
        if !is_finite(&matrix) {
            return Err(Error::Contract("superoperator matrix has non-finite entries".into()));
        }
        Ok(SuperOp { coords, matrix })
    }

    /// Matrix of `action` in matrix units: column `k` is `vec(action(E_k))`
    /// with `E_k` the `k`-th column-major matrix unit.
    pub fn in_matrix_units<F>(dim: usize, action: F) -> Result<Self>
    where
        F: Fn(&DenseOperator) -> DenseOperator,
    {
        let n = dim * dim;
        let mut m = DMatrix::zeros(n, n);
        let mut e = DenseOperator::zeros(dim, dim);
        for k in 0..n {
            let (i, j) = (k % dim, k / dim);
            e[(i, j)] = c(1.0);
            let image = action(&e);
            if image.shape() != (dim, dim) {
                return Err(Error::Dimension {
                    expected: dim,
                    found: image.nrows(),
                });
            }
            m.set_column(k, &DVector::from_column_slice(image.as_slice()));
            e[(i, j)] = ZERO;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0f9a6);
        check_linearity(dim, &action, &mut rng)?;
        Self::from_matrix(Coordinates::MatrixUnits { dim }, m)
    }

    pub fn coordinates(&self) -> Coordinates {
        self.coords
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    fn same_coords(&self, other: &SuperOp) -> Result<()> {
        if self.coords != other.coords {
            return Err(Error::FrameMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &SuperOp) -> Result<SuperOp> {
        self.same_coords(other)?;
        Ok(SuperOp {
            coords: self.coords,
            matrix: &self.matrix + &other.matrix,
        })
    }

    pub fn sub(&self, other: &SuperOp) -> Result<SuperOp> {
        self.same_coords(other)?;
        Ok(SuperOp {
            coords: self.coords,
            matrix: &self.matrix - &other.matrix,
        })
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &SuperOp) -> Result<SuperOp> {
        self.same_coords(other)?;
        Ok(SuperOp {
            coords: self.coords,
            matrix: &self.matrix * &other.matrix,
        })
    }

    pub fn scale(&self, k: C64) -> SuperOp {
        SuperOp {
            coords: self.coords,
            matrix: &self.matrix * k,
        }
    }

    pub fn apply(&self, x: &DVector<C64>) -> Result<DVector<C64>> {
        if x.len() != self.size() {
            return Err(Error::Dimension {
                expected: self.size(),
                found: x.len(),
            });
        }
        Ok(&self.matrix * x)
    }

    /// Adjoint in the geometry of the coordinates: GNS for frame
    /// coordinates, Hilbert–Schmidt for matrix units. Both bases are
    /// orthonormal, so this is the conjugate transpose.
    pub fn adjoint(&self) -> SuperOp {
        SuperOp {
            coords: self.coords,
            matrix: self.matrix.adjoint(),
        }
    }

    /// Row-major `[re, im]` pairs, for debugging dumps.
    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.matrix.nrows())
            .map(|i| (0..self.matrix.ncols()).map(|j| [self.matrix[(i, j)].re, self.matrix[(i, j)].im]).collect())
            .collect();
        serde_json::json!({ "coordinates": self.coords, "matrix": rows })
    }
}

/// GNS adjoint `M*`.
pub fn adjoint_gns(m: &SuperOp) -> SuperOp {
    m.adjoint()
}

/// Compress a frame matrix to the traceless coordinates.
pub fn restrict_traceless(m: &SuperOp, frame: &GnsFrame) -> Result<SuperOp> {
    frame.check_owns(m)?;
    let sel = frame.traceless_selector();
    let k = sel.len();
    Ok(SuperOp {
        coords: Coordinates::GnsTraceless(frame.id),
        matrix: m.matrix.view((sel.start, sel.start), (k, k)).into_owned(),
    })
}

/// Build a frame; free-function alias of [`GnsFrame::new`].
pub fn build_frame(sigma: &DenseOperator) -> Result<GnsFrame> {
    GnsFrame::new(sigma)
}
