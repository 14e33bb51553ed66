//! Lindblad generators in both pictures, stationary states and the exact
//! spectral reference.
//!
//! Heisenberg picture: `ℒA = i[H, A] + Σ_j (2 V_j† A V_j − {V_j† V_j, A})`.
//! Schrödinger picture (Hilbert–Schmidt dual):
//! `ℒ*ρ = −i[H, ρ] + Σ_j (2 V_j ρ V_j† − {V_j† V_j, ρ})`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, Schur};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::gns::{GnsFrame, SuperOp};
use crate::linalg::{
    anticommutator, c, check_square, commutator, from_hermitian_coords, hermitian_basis_matrix,
    hermitian_coords, hermitian_eigen, hermiticity_residual, is_finite, max_norm, DenseOperator, C64, I,
};
use crate::pauli::{PauliSum, PauliTermJson, MAX_DENSE_QUBITS};

/// Hermiticity tolerance for Hamiltonians.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Relative tolerance on `‖ℒ*σ‖` for stationarity.
pub const STATIONARY_TOL: f64 = 1e-9;

/// Eigenvalues of `ρ` below `−PSD_CLIP` are a genuine failure, not round-off.
pub const PSD_CLIP: f64 = 1e-10;

/// Largest supported Hilbert-space dimension.
pub const MAX_DIM: usize = 1 << MAX_DENSE_QUBITS;

#[derive(Clone, Debug)]
pub struct LindbladModel {
    pub name: String,
    dim: usize,
    hamiltonian: DenseOperator,
    jumps: Vec<DenseOperator>,
    jump_adjoints: Vec<DenseOperator>,
    loss: DenseOperator,
    sigma_hint: Option<DenseOperator>,
    pub params: BTreeMap<String, Value>,
}

impl LindbladModel {
    pub fn new(name: impl Into<String>, hamiltonian: DenseOperator, jumps: Vec<DenseOperator>) -> Result<Self> {
        let dim = check_square(&hamiltonian)?;
        if dim == 0 {
            return Err(Error::Model("empty Hilbert space".into()));
        }
        if dim > MAX_DIM {
            return Err(Error::SizeCap {
                what: "dim",
                value: dim,
                limit: MAX_DIM,
            });
        }
        if !is_finite(&hamiltonian) {
            return Err(Error::Model("hamiltonian has non-finite entries".into()));
        }
        let herm = hermiticity_residual(&hamiltonian);
        if herm > HERMITIAN_TOL * max_norm(&hamiltonian).max(1.0) {
            return Err(Error::Model(format!("hamiltonian is not Hermitian (residual {herm:e})")));
        }
        for (k, v) in jumps.iter().enumerate() {
            if v.shape() != (dim, dim) {
                return Err(Error::Model(format!(
                    "jump {k} has shape {:?}, expected {dim}x{dim}",
                    v.shape()
                )));
            }
            if !is_finite(v) {
                return Err(Error::Model(format!("jump {k} has non-finite entries")));
            }
        }
        let jump_adjoints: Vec<_> = jumps.iter().map(|v| v.adjoint()).collect();
        let mut loss = DenseOperator::zeros(dim, dim);
        for (v, vd) in jumps.iter().zip(&jump_adjoints) {
            loss += vd * v;
        }
        Ok(LindbladModel {
            name: name.into(),
            dim,
            hamiltonian: (&hamiltonian + hamiltonian.adjoint()) * c(0.5),
            jumps,
            jump_adjoints,
            loss,
            sigma_hint: None,
            params: BTreeMap::new(),
        })
    }

    pub fn with_sigma_hint(mut self, sigma: DenseOperator) -> Result<Self> {
        if sigma.shape() != (self.dim, self.dim) {
            return Err(Error::Dimension {
                expected: self.dim,
                found: sigma.nrows(),
            });
        }
        self.sigma_hint = Some(sigma);
        Ok(self)
    }

    pub fn with_param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hamiltonian(&self) -> &DenseOperator {
        &self.hamiltonian
    }

    pub fn jumps(&self) -> &[DenseOperator] {
        &self.jumps
    }

    pub fn sigma_hint(&self) -> Option<&DenseOperator> {
        self.sigma_hint.as_ref()
    }

    /// `A ↦ i[H, A]`.
    pub fn hamiltonian_action(&self, a: &DenseOperator) -> DenseOperator {
        commutator(&self.hamiltonian, a) * I
    }

    /// `A ↦ Σ 2V†AV − {V†V, A}`.
    pub fn dissipator_action(&self, a: &DenseOperator) -> DenseOperator {
        let mut out = -anticommutator(&self.loss, a);
        for (v, vd) in self.jumps.iter().zip(&self.jump_adjoints) {
            out += vd * a * v * c(2.0);
        }
        out
    }

    pub fn heisenberg_action(&self, a: &DenseOperator) -> DenseOperator {
        self.hamiltonian_action(a) + self.dissipator_action(a)
    }

    pub fn schrodinger_action(&self, rho: &DenseOperator) -> DenseOperator {
        let mut out = commutator(&self.hamiltonian, rho) * (-I) - anticommutator(&self.loss, rho);
        for (v, vd) in self.jumps.iter().zip(&self.jump_adjoints) {
            out += v * rho * vd * c(2.0);
        }
        out
    }

    /// Scale used for relative tolerances: `‖H‖_max + ‖ΣV†V‖_max`.
    pub fn generator_scale(&self) -> f64 {
        max_norm(&self.hamiltonian) + max_norm(&self.loss)
    }

    /// `‖ℒ*ρ‖_F`.
    pub fn stationarity_residual(&self, rho: &DenseOperator) -> f64 {
        self.schrodinger_action(rho).norm()
    }

    /// Parse the model JSON schema:
    /// `{"name", "dim" | "n_qubits", "hamiltonian", "jumps", "sigma"?, "params"?}`
    /// where operators are either Pauli-term arrays or dense row-major
    /// matrices of `[re, im]` pairs.
    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text)?;
        Self::from_json_value(&v)
    }

    pub fn from_json_value(v: &Value) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Parse("model must be a JSON object".into()))?;
        let name = obj.get("name").and_then(Value::as_str).unwrap_or("custom").to_string();
        let n_qubits = match obj.get("n_qubits") {
            Some(n) => Some(
                n.as_u64()
                    .filter(|&n| n > 0)
                    .ok_or_else(|| Error::Parse("n_qubits must be a positive integer".into()))?
                    as usize,
            ),
            None => None,
        };
        if let Some(n) = n_qubits {
            if n > MAX_DENSE_QUBITS {
                return Err(Error::SizeCap {
                    what: "n_qubits",
                    value: n,
                    limit: MAX_DENSE_QUBITS,
                });
            }
        }
        let dim_field = match obj.get("dim") {
            Some(d) => Some(
                d.as_u64()
                    .filter(|&d| d > 0)
                    .ok_or_else(|| Error::Parse("dim must be a positive integer".into()))? as usize,
            ),
            None => None,
        };
        let dim = match (dim_field, n_qubits) {
            (Some(d), Some(n)) if d != 1 << n => {
                return Err(Error::Parse(format!("dim {d} disagrees with n_qubits {n}")));
            }
            (Some(d), _) => Some(d),
            (None, Some(n)) => Some(1 << n),
            (None, None) => None,
        };
        let h_val = obj
            .get("hamiltonian")
            .ok_or_else(|| Error::Parse("missing \"hamiltonian\"".into()))?;
        let hamiltonian = parse_operator(h_val, n_qubits, dim)?;
        let dim = hamiltonian.nrows();
        let jumps = match obj.get("jumps") {
            None => Vec::new(),
            Some(Value::Array(items)) => items
                .iter()
                .map(|j| parse_operator(j, n_qubits, Some(dim)))
                .collect::<Result<Vec<_>>>()?,
            Some(_) => return Err(Error::Parse("\"jumps\" must be an array".into())),
        };
        let mut model = LindbladModel::new(name, hamiltonian, jumps)?;
        if let Some(s) = obj.get("sigma") {
            if !s.is_null() {
                let sigma = parse_dense(s)?;
                model = model.with_sigma_hint(sigma)?;
            }
        }
        if let Some(p) = obj.get("params") {
            match p {
                Value::Object(map) => {
                    for (k, val) in map {
                        model.params.insert(k.clone(), val.clone());
                    }
                }
                Value::Null => {}
                _ => return Err(Error::Parse("\"params\" must be an object".into())),
            }
        }
        Ok(model)
    }

    /// Dense-form JSON following the same schema.
    pub fn to_json_value(&self) -> Value {
        json!({
            "name": self.name,
            "dim": self.dim,
            "hamiltonian": dense_to_json(&self.hamiltonian),
            "jumps": self.jumps.iter().map(dense_to_json).collect::<Vec<_>>(),
            "sigma": self.sigma_hint.as_ref().map(dense_to_json),
            "params": self.params,
        })
    }
}

/// Row-major `[[ [re, im], ... ], ...]`.
pub fn dense_to_json(a: &DenseOperator) -> Value {
    let rows: Vec<Vec<[f64; 2]>> = (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| [a[(i, j)].re, a[(i, j)].im]).collect())
        .collect();
    json!(rows)
}

pub fn parse_dense(v: &Value) -> Result<DenseOperator> {
    let rows: Vec<Vec<[f64; 2]>> = serde_json::from_value(v.clone())
        .map_err(|e| Error::Parse(format!("dense matrix must be rows of [re, im] pairs: {e}")))?;
    let n = rows.len();
    if n == 0 {
        return Err(Error::Parse("dense matrix is empty".into()));
    }
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::Parse("dense matrix must be square".into()));
    }
    Ok(DenseOperator::from_fn(n, n, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
}

fn parse_operator(v: &Value, n_qubits: Option<usize>, dim: Option<usize>) -> Result<DenseOperator> {
    let items = v
        .as_array()
        .ok_or_else(|| Error::Parse("operator must be a JSON array".into()))?;
    let op = match items.first() {
        None => {
            let d = dim.ok_or_else(|| Error::Parse("empty operator needs \"dim\" or \"n_qubits\"".into()))?;
            DenseOperator::zeros(d, d)
        }
        Some(Value::Object(_)) => {
            let terms: Vec<PauliTermJson> = serde_json::from_value(v.clone())
                .map_err(|e| Error::Parse(format!("bad Pauli term: {e}")))?;
            PauliSum::from_json_terms(&terms, n_qubits)?.to_dense()?
        }
        Some(_) => parse_dense(v)?,
    };
    if let Some(d) = dim {
        if op.nrows() != d {
            return Err(Error::Dimension {
                expected: d,
                found: op.nrows(),
            });
        }
    }
    Ok(op)
}

/// Heisenberg `(ℋ, 𝒟)` as matrices in `frame`.
pub fn build_heisenberg(model: &LindbladModel, frame: &GnsFrame) -> Result<(SuperOp, SuperOp)> {
    if frame.dim() != model.dim {
        return Err(Error::Dimension {
            expected: model.dim,
            found: frame.dim(),
        });
    }
    let h = frame.superop_to_matrix(|a| model.hamiltonian_action(a))?;
    let d = frame.superop_to_matrix(|a| model.dissipator_action(a))?;
    Ok((h, d))
}

/// `ℒ*` in column-major matrix units.
pub fn build_schrodinger(model: &LindbladModel) -> Result<SuperOp> {
    SuperOp::in_matrix_units(model.dim, |rho| model.schrodinger_action(rho))
}

/// `ℒ` as a real matrix in the Hermitian Hilbert–Schmidt basis.
pub fn heisenberg_real_matrix(model: &LindbladModel) -> DMatrix<f64> {
    hermitian_basis_matrix(model.dim, |a| model.heisenberg_action(a))
}

/// `ℒ*` as a real matrix in the Hermitian Hilbert–Schmidt basis.
pub fn schrodinger_real_matrix(model: &LindbladModel) -> DMatrix<f64> {
    hermitian_basis_matrix(model.dim, |rho| model.schrodinger_action(rho))
}

#[derive(Clone, Debug)]
pub struct StationaryState {
    pub sigma: DenseOperator,
    /// Dimension of `ker ℒ*`; `None` when a hint was verified instead.
    pub kernel_dim: Option<usize>,
    pub residual: f64,
    pub from_hint: bool,
    pub warnings: Vec<String>,
}

/// Stationary state of the model.
///
/// A `sigma_hint` is verified rather than recomputed. Otherwise the kernel
/// of `ℒ*` is taken from an SVD of its real Hermitian-basis matrix; with a
/// degenerate kernel the projection of `I/d` onto it is returned together
/// with a multiplicity warning.
pub fn stationary_state(model: &LindbladModel) -> Result<StationaryState> {
    let tol = STATIONARY_TOL * model.generator_scale().max(1.0);
    if let Some(hint) = &model.sigma_hint {
        let sigma = repair_state(hint)?;
        let residual = model.stationarity_residual(&sigma);
        if residual > tol {
            return Err(Error::Numeric {
                message: "sigma_hint is not stationary".into(),
                residual,
            });
        }
        return Ok(StationaryState {
            sigma,
            kernel_dim: None,
            residual,
            from_hint: true,
            warnings: Vec::new(),
        });
    }

    let d = model.dim;
    let m = schrodinger_real_matrix(model);
    let svd = m.clone().svd(false, true);
    let vt = svd
        .v_t
        .ok_or_else(|| Error::Solver("SVD did not return right singular vectors".into()))?;
    let smax = svd.singular_values.max();
    let zero_tol = STATIONARY_TOL * smax.max(f64::MIN_POSITIVE);
    let null: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] <= zero_tol)
        .collect();
    if null.is_empty() {
        return Err(Error::Solver(format!(
            "generator has no numerical kernel (smallest singular value {:e})",
            svd.singular_values.min()
        )));
    }
    let mut warnings = Vec::new();
    let target = hermitian_coords(&(DenseOperator::identity(d, d) / c(d as f64)));
    let mut coords = DVector::zeros(d * d);
    for &k in &null {
        let v = vt.row(k).transpose();
        coords += &v * v.dot(&target);
    }
    if null.len() > 1 {
        warnings.push(format!(
            "stationary state is not unique (kernel dimension {}); returned the projection of I/d",
            null.len()
        ));
    } else if coords.norm() < 1e-8 {
        // kernel vector orthogonal to I/d cannot be traceful; fall back to it directly
        coords = vt.row(null[0]).transpose();
    }
    let raw = from_hermitian_coords(&coords, d);
    let sigma = repair_state(&raw)?;
    let residual = model.stationarity_residual(&sigma);
    if residual > tol {
        return Err(Error::Numeric {
            message: "computed stationary state fails verification".into(),
            residual,
        });
    }
    Ok(StationaryState {
        sigma,
        kernel_dim: Some(null.len()),
        residual,
        from_hint: false,
        warnings,
    })
}

/// Symmetrize, clip round-off negativity and renormalize the trace.
pub fn repair_state(rho: &DenseOperator) -> Result<DenseOperator> {
    let tr = rho.trace();
    if tr.norm() < 1e-14 {
        return Err(Error::Numeric {
            message: "candidate state has zero trace".into(),
            residual: tr.norm(),
        });
    }
    // fix the overall sign/phase of a null vector before clipping
    let scaled = rho / tr;
    let (w, u) = hermitian_eigen(&scaled);
    if w[0] < -PSD_CLIP {
        return Err(Error::Numeric {
            message: "stationary candidate is not positive semidefinite".into(),
            residual: w[0],
        });
    }
    let clipped = w.map(|x| c(x.max(0.0)));
    let out = &u * DenseOperator::from_diagonal(&clipped) * u.adjoint();
    let t = out.trace();
    Ok(out / t)
}

#[derive(Clone, Debug)]
pub struct SpectralReport {
    /// All `d²` eigenvalues of the Heisenberg generator.
    pub eigenvalues: Vec<C64>,
    /// `min −Re λ` over eigenvalues with `|λ| > zero_tol`; zero if none.
    pub gap: f64,
    pub kernel_dim: usize,
    pub primitive: bool,
    pub zero_tol: f64,
    /// Deflation threshold the Schur iteration converged with.
    pub deflation_tol: f64,
    /// `max |Q T Qᵀ − M|`.
    pub schur_residual: f64,
}

/// Deflation thresholds tried in order. Highly degenerate generators (the
/// isotropic Heisenberg chain at N = 4) stall at machine epsilon but
/// converge, to the same spectrum, slightly above it.
const DEFLATION_TOLS: [f64; 5] = [f64::EPSILON, 1e-15, 1e-14, 1e-13, 1e-12];

/// Exact spectrum of the Heisenberg generator.
pub fn exact_spectrum(model: &LindbladModel) -> Result<SpectralReport> {
    let m = heisenberg_real_matrix(model);
    let n = m.nrows();
    let scale = m.amax();
    let mut last_residual = f64::NAN;
    let mut found = None;
    for tol in DEFLATION_TOLS {
        let Some(schur) = Schur::try_new(m.clone(), tol, 1000 * n.max(10)) else {
            continue;
        };
        let eigenvalues = schur.complex_eigenvalues();
        let (q, t) = schur.unpack();
        last_residual = (&q * &t * q.transpose() - &m).amax();
        if last_residual <= 1e-9 * scale.max(1.0) {
            found = Some((tol, last_residual, eigenvalues));
            break;
        }
    }
    let (deflation_tol, schur_residual, eigenvalues) = found.ok_or_else(|| Error::Numeric {
        message: "Schur iteration did not converge".into(),
        residual: last_residual,
    })?;
    let eigenvalues: Vec<C64> = eigenvalues.iter().copied().collect();
    let zero_tol = 1e-9 * scale;
    let mut kernel_dim = 0;
    let mut gap = f64::INFINITY;
    for z in &eigenvalues {
        if z.norm() <= zero_tol {
            kernel_dim += 1;
        } else {
            gap = gap.min(-z.re);
        }
    }
    if !gap.is_finite() {
        gap = 0.0;
    }
    Ok(SpectralReport {
        eigenvalues,
        gap,
        kernel_dim,
        primitive: kernel_dim == 1,
        zero_tol,
        deflation_tol,
        schur_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gns::restrict_traceless;
    use crate::linalg::{random_complex_matrix, random_hermitian};
    use crate::pauli::{dephasing_eigenvalue, PauliString};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag(values: &[f64]) -> DenseOperator {
        DenseOperator::from_diagonal(&DVector::from_iterator(values.len(), values.iter().map(|&x| c(x))))
    }

    fn toy() -> LindbladModel {
        let x = DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
        LindbladModel::new("toy", x, vec![diag(&[1.0, 0.0])]).unwrap()
    }

    fn dephasing(n: usize, gamma: f64, h: Option<PauliSum>) -> LindbladModel {
        let d = 1 << n;
        let jumps = (0..n)
            .map(|i| PauliString::single(n, i, 'Z').unwrap().to_dense().unwrap() * c((gamma / 2.0).sqrt()))
            .collect();
        let ham = h.map(|h| h.to_dense().unwrap()).unwrap_or_else(|| DenseOperator::zeros(d, d));
        LindbladModel::new("dephasing", ham, jumps).unwrap()
    }

    fn heisenberg_chain(n: usize) -> PauliSum {
        let mut h = PauliSum::zero(n).unwrap();
        for i in 0..n - 1 {
            for p in ['X', 'Y', 'Z'] {
                let a = PauliString::single(n, i, p).unwrap();
                let b = PauliString::single(n, i + 1, p).unwrap();
                let (ph, ab) = crate::pauli::multiply(&a, &b).unwrap();
                h.add_term(ph.to_complex(), ab).unwrap();
            }
        }
        for i in 0..n {
            h.add_term(c(1.0), PauliString::single(n, i, 'X').unwrap()).unwrap();
        }
        h
    }

    fn sorted_re_im(mut v: Vec<C64>) -> Vec<C64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn rejects_non_hermitian_hamiltonian_and_bad_jumps() {
        let mut h = DenseOperator::zeros(2, 2);
        h[(0, 1)] = c(1.0);
        assert!(matches!(LindbladModel::new("x", h, vec![]), Err(Error::Model(_))));
        let bad_jump = DenseOperator::zeros(3, 3);
        assert!(LindbladModel::new("x", DenseOperator::zeros(2, 2), vec![bad_jump]).is_err());
    }

    #[test]
    fn pictures_are_dual_and_structure_preserved() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let h = random_hermitian(3, &mut rng);
        let jumps = (0..2).map(|_| random_complex_matrix(3, 3, &mut rng)).collect();
        let model = LindbladModel::new("random", h, jumps).unwrap();
        for _ in 0..20 {
            let a = random_complex_matrix(3, 3, &mut rng);
            let rho = random_complex_matrix(3, 3, &mut rng);
            let lhs = (&rho * model.heisenberg_action(&a)).trace();
            let rhs = (model.schrodinger_action(&rho) * &a).trace();
            assert!((lhs - rhs).norm() < 1e-9 * lhs.norm().max(1.0));
            let la_dag = model.heisenberg_action(&a.adjoint());
            assert!(max_norm(&(la_dag - model.heisenberg_action(&a).adjoint())) < 1e-10);
            let r = random_hermitian(3, &mut rng);
            assert!(model.schrodinger_action(&r).trace().norm() < 1e-10);
        }
        let id = DenseOperator::identity(3, 3);
        assert!(max_norm(&model.heisenberg_action(&id)) < 1e-10);
    }

    #[test]
    fn schrodinger_matrix_is_hs_adjoint_of_heisenberg() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = random_hermitian(2, &mut rng);
        let model = LindbladModel::new("r", h, vec![random_complex_matrix(2, 2, &mut rng)]).unwrap();
        let s = build_schrodinger(&model).unwrap();
        let heis = SuperOp::in_matrix_units(2, |a| model.heisenberg_action(a)).unwrap();
        assert!(max_norm(&(s.matrix() - heis.adjoint().matrix())) < 1e-12);
    }

    #[test]
    fn zero_hamiltonian_gives_zero_h_super() {
        let model = dephasing(1, 1.0, None);
        let frame = GnsFrame::new(&diag(&[0.5, 0.5])).unwrap();
        let (h, _) = build_heisenberg(&model, &frame).unwrap();
        assert_eq!(max_norm(h.matrix()), 0.0);
    }

    #[test]
    fn toy_dissipator_damps_off_diagonals() {
        let model = toy();
        let mut a = DenseOperator::zeros(2, 2);
        a[(0, 1)] = C64::new(0.3, 0.2);
        a[(1, 0)] = c(-1.1);
        let da = model.dissipator_action(&a);
        assert!(max_norm(&(da + &a)) < 1e-15);
        assert!(max_norm(&model.dissipator_action(&diag(&[2.0, -5.0]))) < 1e-15);
    }

    #[test]
    fn dephasing_dissipator_diagonal_in_pauli_basis() {
        for n in 1..=3 {
            let gamma = 0.9;
            let model = dephasing(n, gamma, None);
            for x in 0..(1u64 << n) {
                for z in 0..(1u64 << n) {
                    let p = PauliString::new(n, x, z).unwrap();
                    let pd = p.to_dense().unwrap();
                    let expected = &pd * c(dephasing_eigenvalue(&p, gamma));
                    assert!(max_norm(&(model.dissipator_action(&pd) - expected)) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn toy_spectrum() {
        let report = exact_spectrum(&toy()).unwrap();
        let got = sorted_re_im(report.eigenvalues.clone());
        let r15 = 15f64.sqrt() / 2.0;
        let want = sorted_re_im(vec![c(0.0), c(-1.0), C64::new(-0.5, r15), C64::new(-0.5, -r15)]);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).norm() < 1e-10, "{g} vs {w}");
        }
        assert_relative_eq!(report.gap, 0.5, epsilon = 1e-10);
        assert!(report.primitive);
    }

    #[test]
    fn dephasing_spectrum() {
        let report = exact_spectrum(&dephasing(1, 1.0, None)).unwrap();
        let mut re: Vec<f64> = report.eigenvalues.iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        for (g, w) in re.iter().zip([-2.0, -2.0, 0.0, 0.0]) {
            assert_relative_eq!(*g, w, epsilon = 1e-12);
        }
        assert_relative_eq!(report.gap, 2.0, epsilon = 1e-12);
        assert_eq!(report.kernel_dim, 2);
        assert!(!report.primitive);
    }

    #[test]
    fn spectrum_in_left_half_plane_and_contains_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let h = random_hermitian(3, &mut rng);
        let jumps = (0..2).map(|_| random_complex_matrix(3, 3, &mut rng)).collect();
        let model = LindbladModel::new("r", h, jumps).unwrap();
        let report = exact_spectrum(&model).unwrap();
        assert!(report.eigenvalues.iter().all(|z| z.re <= 1e-9));
        assert!(report.kernel_dim >= 1);
    }

    #[test]
    fn degenerate_chain_spectrum_converges() {
        let mut h = heisenberg_chain(4);
        for i in 0..4 {
            h.add_term(c(1.0), PauliString::single(4, i, 'X').unwrap()).unwrap();
        }
        let report = exact_spectrum(&dephasing(4, 0.01, Some(h))).unwrap();
        assert!(report.deflation_tol > f64::EPSILON);
        assert!(report.schur_residual < 1e-10);
        assert!(report.primitive);
        assert_relative_eq!(report.gap, 0.01, epsilon = 1e-10);
    }

    #[test]
    fn stationary_states() {
        let toy_state = stationary_state(&toy()).unwrap();
        assert!(max_norm(&(toy_state.sigma - diag(&[0.5, 0.5]))) < 1e-10);
        assert_eq!(toy_state.kernel_dim, Some(1));

        let heis = dephasing(2, 1.0, Some(heisenberg_chain(2)));
        let s = stationary_state(&heis).unwrap();
        assert!(max_norm(&(s.sigma - diag(&[0.25; 4]))) < 1e-9);
        assert!(s.warnings.is_empty());

        let tfim = PauliSum::from_terms(
            3,
            [
                (c(1.0), "ZZI".parse().unwrap()),
                (c(1.0), "IZZ".parse().unwrap()),
                (c(0.7), "XII".parse().unwrap()),
                (c(0.7), "IXI".parse().unwrap()),
                (c(0.7), "IIX".parse().unwrap()),
            ],
        )
        .unwrap();
        let model = dephasing(3, 1.0, Some(tfim));
        assert!(model.stationarity_residual(&(DenseOperator::identity(8, 8) / c(8.0))) < 1e-12);
    }

    #[test]
    fn degenerate_kernel_warns_and_returns_maximally_mixed() {
        let s = stationary_state(&dephasing(2, 1.0, None)).unwrap();
        assert_eq!(s.kernel_dim, Some(4));
        assert_eq!(s.warnings.len(), 1);
        assert!(max_norm(&(s.sigma - diag(&[0.25; 4]))) < 1e-10);
    }

    #[test]
    fn hint_is_verified() {
        let good = toy().with_sigma_hint(diag(&[0.5, 0.5])).unwrap();
        assert!(stationary_state(&good).unwrap().from_hint);
        let bad = toy().with_sigma_hint(diag(&[0.9, 0.1])).unwrap();
        assert!(matches!(stationary_state(&bad), Err(Error::Numeric { .. })));
    }

    #[test]
    fn amplitude_damping_fixed_point_is_pure() {
        // V = |0⟩⟨1| drives everything to |0⟩⟨0|
        let mut v = DenseOperator::zeros(2, 2);
        v[(0, 1)] = c(1.0);
        let model = LindbladModel::new("ad", DenseOperator::zeros(2, 2), vec![v]).unwrap();
        let s = stationary_state(&model).unwrap();
        assert!(max_norm(&(s.sigma - diag(&[1.0, 0.0]))) < 1e-10);
        assert!(GnsFrame::new(&diag(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn dephasing_heisenberg_restricted_matches_pauli_eigenvalues() {
        let n = 2;
        let model = dephasing(n, 0.6, None);
        let frame = GnsFrame::new(&(DenseOperator::identity(4, 4) / c(4.0))).unwrap();
        let (_, d) = build_heisenberg(&model, &frame).unwrap();
        let r = restrict_traceless(&d, &frame).unwrap();
        let (w, _) = hermitian_eigen(r.matrix());
        let mut want: Vec<f64> = (0..16u64)
            .filter(|&k| k != 0)
            .map(|k| dephasing_eigenvalue(&PauliString::new(n, k & 3, k >> 2).unwrap(), 0.6))
            .collect();
        want.sort_by(f64::total_cmp);
        for (g, w) in w.iter().zip(&want) {
            assert_relative_eq!(*g, *w, epsilon = 1e-12);
        }
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{
            "name": "tfim2",
            "n_qubits": 2,
            "hamiltonian": [{"coeff": [1.0, 0.0], "string": "ZZ"}, {"coeff": [0.5, 0.0], "string": "XI"}],
            "jumps": [[{"coeff": [0.7, 0.0], "string": "ZI"}], [{"coeff": [0.7, 0.0], "string": "IZ"}]],
            "params": {"h": 0.5}
        }"#;
        let model = LindbladModel::from_json(text).unwrap();
        assert_eq!(model.dim(), 4);
        assert_eq!(model.jumps().len(), 2);
        assert_eq!(model.params["h"], json!(0.5));
        let back = LindbladModel::from_json_value(&model.to_json_value()).unwrap();
        assert!(max_norm(&(back.hamiltonian() - model.hamiltonian())) < 1e-15);

        let dense = r#"{"dim": 2, "hamiltonian": [[[0,0],[1,0]],[[1,0],[0,0]]], "jumps": [[[[1,0],[0,0]],[[0,0],[0,0]]]],
                        "sigma": [[[0.5,0],[0,0]],[[0,0],[0.5,0]]]}"#;
        let toy = LindbladModel::from_json(dense).unwrap();
        assert!(toy.sigma_hint().is_some());
        assert!(stationary_state(&toy).unwrap().from_hint);
    }

    #[test]
    fn malformed_json_rejected() {
        assert!(matches!(LindbladModel::from_json("{"), Err(Error::Parse(_))));
        assert!(LindbladModel::from_json(r#"{"dim": 2}"#).is_err());
        assert!(LindbladModel::from_json(r#"{"dim": 3, "n_qubits": 2, "hamiltonian": []}"#).is_err());
        assert!(LindbladModel::from_json(r#"{"n_qubits": 7, "hamiltonian": []}"#).is_err());
        assert!(LindbladModel::from_json(r#"{"hamiltonian": [[[1,0],[0,0]]]}"#).is_err());
        let zero = LindbladModel::from_json(r#"{"n_qubits": 1, "hamiltonian": []}"#).unwrap();
        assert_eq!(zero.dim(), 2);
    }
}
