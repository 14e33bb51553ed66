//! Hypocoercive certification: the four structural conditions, the explicit
//! rate constants and the mixing-time bound.
//!
//! Everything runs on the GNS matrices compressed to the traceless subspace
//! `{A : tr(σA) = 0}` (see [`restrict_traceless`]).

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::gns::{restrict_traceless, GnsFrame, SuperOp};
use crate::lindblad::{build_heisenberg, stationary_state, LindbladModel, StationaryState};
use crate::linalg::{c, commutator, hermitian_eigen, max_norm, spectral_norm, C64};

pub const CERTIFICATE_SCHEMA: &str = "hypomix.certificate/1";

/// Relative factor for `kernel_tol` and `sym_tol`.
pub const REL_TOL: f64 = 1e-9;

/// Number of points of the logarithmic α grid.
pub const ALPHA_GRID_POINTS: usize = 65;

/// Condition number of the auxiliary solve above which a warning is raised.
pub const AUX_CONDITION_WARN: f64 = 1e12;

/// GNS-orthogonal projector onto `ker 𝒟` within the traceless subspace.
#[derive(Clone, Debug)]
pub struct KernelProjector {
    /// `𝒫 = K K†`.
    pub projector: SuperOp,
    /// Orthonormal columns spanning the kernel.
    pub kernel_basis: DMatrix<C64>,
    /// Orthonormal columns spanning the complement, paired with
    /// `complement_eigenvalues`.
    pub complement_basis: DMatrix<C64>,
    /// Eigenvalues of `(𝒟 + 𝒟*)/2` on the complement.
    pub complement_eigenvalues: Vec<f64>,
    pub kernel_dim: usize,
    pub kernel_tol: f64,
    pub warnings: Vec<String>,
}

/// Split the symmetrized dissipator into kernel and complement.
pub fn kernel_projector(d: &SuperOp) -> Result<KernelProjector> {
    let m = d.matrix();
    let sym = (m + m.adjoint()) * c(0.5);
    let (w, v) = hermitian_eigen(&sym);
    let n = w.len();
    let scale = w.iter().fold(0.0f64, |s, x| s.max(x.abs()));
    let kernel_tol = REL_TOL * scale;
    let mut kernel = Vec::new();
    let mut complement = Vec::new();
    let mut warnings = Vec::new();
    for k in 0..n {
        let a = w[k].abs();
        if a <= kernel_tol {
            kernel.push(k);
        } else {
            if a <= 10.0 * kernel_tol {
                warnings.push(format!(
                    "ambiguous kernel boundary: eigenvalue {:e} within 10x of kernel_tol {:e}",
                    w[k], kernel_tol
                ));
            }
            complement.push(k);
        }
    }
    let kernel_basis = v.select_columns(&kernel);
    let complement_basis = v.select_columns(&complement);
    let p = &kernel_basis * kernel_basis.adjoint();
    Ok(KernelProjector {
        projector: SuperOp::from_matrix(d.coordinates(), p)?,
        kernel_dim: kernel.len(),
        complement_eigenvalues: complement.iter().map(|&k| w[k]).collect(),
        kernel_basis,
        complement_basis,
        kernel_tol,
        warnings,
    })
}

/// `λ_m`: smallest eigenvalue of `−(𝒟 + 𝒟*)/2` off the kernel; zero when the
/// complement is empty.
pub fn check_condition_1(proj: &KernelProjector) -> f64 {
    proj.complement_eigenvalues
        .iter()
        .map(|w| -w)
        .fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.min(x))))
        .unwrap_or(0.0)
}

/// `λ_M`: smallest eigenvalue of `(ℋ𝒫)*(ℋ𝒫)` on the kernel; `None` when the
/// traceless kernel is trivial.
pub fn check_condition_2(h: &SuperOp, proj: &KernelProjector) -> Option<f64> {
    if proj.kernel_dim == 0 {
        return None;
    }
    let hk = h.matrix() * &proj.kernel_basis;
    let gram = hk.adjoint() * &hk;
    let (w, _) = hermitian_eigen(&gram);
    Some(w[0])
}

/// `‖𝒫ℋ𝒫‖₂`.
pub fn check_condition_3(h: &SuperOp, proj: &KernelProjector) -> f64 {
    let k = &proj.kernel_basis;
    spectral_norm(&(k.adjoint() * h.matrix() * k))
}

/// `C_M′ = ‖ℋ(𝒾−𝒫)‖ + ‖𝒟(𝒾−𝒫)‖`, both restricted to the complement.
pub fn check_condition_4(h: &SuperOp, d: &SuperOp, proj: &KernelProjector) -> f64 {
    let kc = &proj.complement_basis;
    spectral_norm(&(h.matrix() * kc)) + spectral_norm(&(d.matrix() * kc))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub alpha: f64,
    /// `C_M(α) = C_M′ / (2√α)`.
    pub cm_alpha: f64,
    pub epsilon: f64,
    pub kappa: f64,
    pub delta: f64,
    pub lambda: f64,
    pub big_c: f64,
}

/// Explicit rate constants for given `λ_m`, `λ_M`, `C_M′` and `α`.
pub fn bound_from_constants(lambda_m: f64, lambda_big_m: f64, cm_prime: f64, alpha: f64) -> Result<BoundConstants> {
    for (name, v) in [
        ("lambda_m", lambda_m),
        ("lambda_M", lambda_big_m),
        ("cm_prime", cm_prime),
        ("alpha", alpha),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Domain(format!("{name} must be positive and finite, got {v}")));
        }
    }
    let cm_alpha = cm_prime / (2.0 * alpha.sqrt());
    let ratio = lambda_big_m / (alpha + lambda_big_m);
    let epsilon = 0.5 * (lambda_m * lambda_big_m / ((alpha + lambda_big_m) * (1.0 + cm_alpha).powi(2))).min(1.0);
    let kappa = (lambda_m / 4.0).min(epsilon / 3.0 * ratio);
    let delta = (4.0 / 3.0 * ratio / (1.0 + cm_alpha)).min(1.0);
    let lambda = kappa / (1.0 + epsilon);
    let big_c = ((1.0 + epsilon) / (1.0 - epsilon)).sqrt();
    Ok(BoundConstants {
        alpha,
        cm_alpha,
        epsilon,
        kappa,
        delta,
        lambda,
        big_c,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaSample {
    pub alpha: f64,
    pub lambda: f64,
    pub refined: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaSearch {
    pub alpha_star: f64,
    pub lambda_star: f64,
    pub trace: Vec<AlphaSample>,
}

/// Maximize `λ(α)` over `[λ_M/100, 100 λ_M]`: 65-point log grid (which
/// contains `λ_M` exactly), ties to the smaller α, then golden-section
/// refinement in `log α` between the neighbours of the best grid point.
pub fn optimize_alpha(lambda_m: f64, lambda_big_m: f64, cm_prime: f64) -> Result<AlphaSearch> {
    let eval = |a: f64| bound_from_constants(lambda_m, lambda_big_m, cm_prime, a).map(|b| b.lambda);
    let (lo, hi) = ((lambda_big_m / 100.0).ln(), (lambda_big_m * 100.0).ln());
    let last = ALPHA_GRID_POINTS - 1;
    let mut grid: Vec<f64> = (0..ALPHA_GRID_POINTS)
        .map(|k| (lo + (hi - lo) * k as f64 / last as f64).exp())
        .collect();
    grid[last / 2] = lambda_big_m;
    let mut trace = Vec::with_capacity(ALPHA_GRID_POINTS + 64);
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (k, &a) in grid.iter().enumerate() {
        let val = eval(a)?;
        trace.push(AlphaSample {
            alpha: a,
            lambda: val,
            refined: false,
        });
        if val > best_val {
            best = k;
            best_val = val;
        }
    }

    let mut a = grid[best.saturating_sub(1)].ln();
    let mut b = grid[(best + 1).min(last)].ln();
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = eval(x1.exp())?;
    let mut f2 = eval(x2.exp())?;
    for (x, f) in [(x1, f1), (x2, f2)] {
        trace.push(AlphaSample {
            alpha: x.exp(),
            lambda: f,
            refined: true,
        });
    }
    while b - a > 1e-8 {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = eval(x1.exp())?;
            trace.push(AlphaSample {
                alpha: x1.exp(),
                lambda: f1,
                refined: true,
            });
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = eval(x2.exp())?;
            trace.push(AlphaSample {
                alpha: x2.exp(),
                lambda: f2,
                refined: true,
            });
        }
    }
    let (mut alpha_star, mut lambda_star) = (grid[best], best_val);
    let refined = ((a + b) / 2.0).exp();
    let refined_val = eval(refined)?;
    if refined_val > lambda_star {
        alpha_star = refined;
        lambda_star = refined_val;
    }
    Ok(AlphaSearch {
        alpha_star,
        lambda_star,
        trace,
    })
}

/// `(1/λ) ln(C ‖σ⁻¹‖_∞ / ε)` with `‖σ⁻¹‖_∞ = 1/σ_min`, clamped at zero.
pub fn mixing_time_bound(lambda: f64, big_c: f64, sigma_min: f64, eps_target: f64) -> Result<f64> {
    if !(sigma_min > 0.0) {
        return Err(Error::Domain(format!(
            "mixing-time bound needs a full-rank stationary state (smallest eigenvalue {sigma_min:e})"
        )));
    }
    if !(lambda > 0.0) || !(big_c >= 1.0) {
        return Err(Error::Domain(format!("invalid rate constants lambda={lambda}, C={big_c}")));
    }
    if !(eps_target > 0.0) || !eps_target.is_finite() {
        return Err(Error::Domain(format!("eps_target must be positive, got {eps_target}")));
    }
    Ok(((big_c / (sigma_min * eps_target)).ln() / lambda).max(0.0))
}

/// The auxiliary operator `𝒜 = (α𝒾 + (ℋ𝒫)*(ℋ𝒫))⁻¹ (ℋ𝒫)*`.
#[derive(Clone, Debug)]
pub struct AuxiliaryOperator {
    pub op: SuperOp,
    pub alpha: f64,
    /// `(α + ‖ℋ𝒫‖²)/α`, the 2-norm condition number of the solve.
    pub condition_number: f64,
    pub warnings: Vec<String>,
}

pub fn build_auxiliary(h: &SuperOp, p: &SuperOp, alpha: f64) -> Result<AuxiliaryOperator> {
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
    }
    let hp = h.compose(p)?;
    let hp_adj = hp.matrix().adjoint();
    let n = hp_adj.nrows();
    let g = DMatrix::<C64>::identity(n, n) * c(alpha) + &hp_adj * hp.matrix();
    let norm_hp = spectral_norm(hp.matrix());
    let condition_number = (alpha + norm_hp * norm_hp) / alpha;
    let mut warnings = Vec::new();
    if condition_number > AUX_CONDITION_WARN {
        warnings.push(format!("auxiliary solve is ill-conditioned (condition number {condition_number:e})"));
    }
    let a = g
        .lu()
        .solve(&hp_adj)
        .ok_or_else(|| Error::Solver("auxiliary system is singular".into()))?;
    Ok(AuxiliaryOperator {
        op: SuperOp::from_matrix(h.coordinates(), a)?,
        alpha,
        condition_number,
        warnings,
    })
}

/// `𝔏[A] = ½‖A‖² − ε Re⟨𝒜A, A⟩` on coordinates.
pub fn lyapunov_value(a: &nalgebra::DVector<C64>, eps: f64, aux: &SuperOp) -> f64 {
    let aa = aux.matrix() * a;
    0.5 * a.norm_squared() - eps * aa.dotc(a).re
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub d_symmetric: f64,
    pub h_skew: f64,
    pub php_zero: f64,
    pub sigma_commutes: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub d_symmetric: f64,
    pub h_skew: f64,
    pub php_zero: f64,
    pub sigma_commutes: f64,
    pub kernel_tol: f64,
    pub lambda_macro_min: f64,
}

/// Everything computed from a model before any α-dependent quantity.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub frame: GnsFrame,
    pub stationary: StationaryState,
    /// Full `ℋ` and `𝒟` in the frame.
    pub h_full: SuperOp,
    pub d_full: SuperOp,
    /// Traceless restrictions.
    pub h: SuperOp,
    pub d: SuperOp,
    pub projector: KernelProjector,
    pub lambda_micro: f64,
    pub lambda_macro: Option<f64>,
    pub php_residual: f64,
    pub cm_prime_numeric: f64,
    pub residuals: Residuals,
    pub tolerances: Tolerances,
    pub failures: Vec<String>,
    pub warnings: Vec<String>,
}

impl Analysis {
    pub fn new(model: &LindbladModel) -> Result<Self> {
        let stationary = stationary_state(model)?;
        let frame = GnsFrame::new(&stationary.sigma)?;
        let (h_full, d_full) = build_heisenberg(model, &frame)?;
        let h = restrict_traceless(&h_full, &frame)?;
        let d = restrict_traceless(&d_full, &frame)?;
        let projector = kernel_projector(&d)?;

        let hm = max_norm(h.matrix());
        let dm = max_norm(d.matrix());
        let residuals = Residuals {
            d_symmetric: max_norm(&(d.matrix() - d.matrix().adjoint())),
            h_skew: max_norm(&(h.matrix() + h.matrix().adjoint())),
            php_zero: check_condition_3(&h, &projector),
            sigma_commutes: max_norm(&commutator(model.hamiltonian(), frame.sigma())),
        };
        let tolerances = Tolerances {
            d_symmetric: REL_TOL * dm,
            h_skew: REL_TOL * hm,
            php_zero: REL_TOL * hm,
            sigma_commutes: REL_TOL * max_norm(model.hamiltonian()),
            kernel_tol: projector.kernel_tol,
            lambda_macro_min: projector.kernel_tol.max(REL_TOL * hm * hm),
        };

        let lambda_micro = check_condition_1(&projector);
        let lambda_macro = check_condition_2(&h, &projector);
        let cm_prime_numeric = check_condition_4(&h, &d, &projector);

        let mut failures = Vec::new();
        let mut warnings = stationary.warnings.clone();
        warnings.extend(projector.warnings.iter().cloned());
        if residuals.d_symmetric > tolerances.d_symmetric {
            failures.push(format!(
                "condition 1: dissipator is not GNS-symmetric (residual {:e})",
                residuals.d_symmetric
            ));
        }
        if !(lambda_micro > 0.0) {
            failures.push(format!("condition 1: lambda_m = {lambda_micro:e} is not positive"));
        }
        if residuals.h_skew > tolerances.h_skew {
            failures.push(format!(
                "condition 2: Hamiltonian part is not GNS-skew (residual {:e})",
                residuals.h_skew
            ));
        }
        if residuals.sigma_commutes > tolerances.sigma_commutes {
            failures.push(format!(
                "condition 2: [H, sigma] = {:e} is not zero",
                residuals.sigma_commutes
            ));
        }
        match lambda_macro {
            None => failures.push(
                "condition 2: ker D is trivial on the traceless subspace; the framework is not applicable".into(),
            ),
            Some(l) if l <= tolerances.lambda_macro_min => failures.push(format!(
                "condition 2: lambda_M = {l:e} does not exceed {:e}; the Hamiltonian does not stir ker D",
                tolerances.lambda_macro_min
            )),
            _ => {}
        }
        if residuals.php_zero > tolerances.php_zero {
            failures.push(format!("condition 3: |PHP| = {:e} is not zero", residuals.php_zero));
        }

        Ok(Analysis {
            frame,
            stationary,
            h_full,
            d_full,
            h,
            d,
            lambda_micro,
            lambda_macro,
            php_residual: residuals.php_zero,
            cm_prime_numeric,
            residuals,
            tolerances,
            failures,
            warnings,
            projector,
        })
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    /// `ℒ = ℋ + 𝒟` on the traceless subspace.
    pub fn generator(&self) -> SuperOp {
        self.h.add(&self.d).expect("same coordinates")
    }

    pub fn auxiliary(&self, alpha: f64) -> Result<AuxiliaryOperator> {
        build_auxiliary(&self.h, &self.projector.projector, alpha)
    }

    pub fn certificate(&self, model: &LindbladModel, opts: &CertifyOptions) -> Result<HypoCertificate> {
        let mut failures = self.failures.clone();
        let mut warnings = self.warnings.clone();
        let (cm_prime, cm_prime_source) = match opts.cm_prime_override {
            Some(v) if v >= self.cm_prime_numeric * (1.0 - REL_TOL) && v > 0.0 => (v, CmSource::Analytic),
            Some(v) => {
                warnings.push(format!(
                    "analytic C_M' = {v} is below the numeric value {}; using the numeric value",
                    self.cm_prime_numeric
                ));
                (self.cm_prime_numeric, CmSource::Numeric)
            }
            None => (self.cm_prime_numeric, CmSource::Numeric),
        };
        let lambda_macro = self.lambda_macro.unwrap_or(0.0);
        let mut cert = HypoCertificate {
            schema: CERTIFICATE_SCHEMA.to_string(),
            model: model.name.clone(),
            params: model.params.clone(),
            dim: model.dim(),
            passed: false,
            failures: Vec::new(),
            warnings: Vec::new(),
            lambda_micro: self.lambda_micro,
            lambda_macro,
            cm_prime,
            cm_prime_numeric: self.cm_prime_numeric,
            cm_prime_source,
            cm_alpha: None,
            alpha_star: None,
            epsilon: None,
            kappa: None,
            delta: None,
            lambda: None,
            big_c: None,
            tmix_bound: Vec::new(),
            kernel_dim: self.projector.kernel_dim,
            sigma_min_eigenvalue: self.frame.sigma_min_eigenvalue(),
            residuals: self.residuals,
            tolerances: self.tolerances,
            alpha_trace: Vec::new(),
        };
        if failures.is_empty() && !(cm_prime > 0.0) {
            failures.push("condition 4: C_M' is zero".into());
        }
        if failures.is_empty() {
            let (alpha, trace) = match opts.alpha {
                AlphaChoice::Optimize => {
                    let s = optimize_alpha(self.lambda_micro, lambda_macro, cm_prime)?;
                    (s.alpha_star, s.trace)
                }
                AlphaChoice::Fixed(a) => (a, Vec::new()),
            };
            let b = bound_from_constants(self.lambda_micro, lambda_macro, cm_prime, alpha)?;
            cert.alpha_trace = trace;
            cert.alpha_star = Some(alpha);
            cert.cm_alpha = Some(b.cm_alpha);
            cert.epsilon = Some(b.epsilon);
            cert.kappa = Some(b.kappa);
            cert.delta = Some(b.delta);
            cert.lambda = Some(b.lambda);
            cert.big_c = Some(b.big_c);
            for &eps in &opts.eps_targets {
                let time = mixing_time_bound(b.lambda, b.big_c, cert.sigma_min_eigenvalue, eps)?;
                cert.tmix_bound.push(TmixEntry { eps_target: eps, time });
            }
        }
        cert.passed = failures.is_empty();
        cert.failures = failures;
        cert.warnings = warnings;
        Ok(cert)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CmSource {
    Numeric,
    Analytic,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AlphaChoice {
    Optimize,
    Fixed(f64),
}

#[derive(Clone, Debug)]
pub struct CertifyOptions {
    pub eps_targets: Vec<f64>,
    /// Model-supplied `C_M′`, used only if it dominates the numeric value.
    pub cm_prime_override: Option<f64>,
    pub alpha: AlphaChoice,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            eps_targets: vec![0.01],
            cm_prime_override: None,
            alpha: AlphaChoice::Optimize,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TmixEntry {
    pub eps_target: f64,
    pub time: f64,
}

/// Certification record. α-dependent fields are absent when a condition
/// fails.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypoCertificate {
    pub schema: String,
    pub model: String,
    pub params: BTreeMap<String, Value>,
    pub dim: usize,
    pub passed: bool,
    pub failures: Vec<String>,
    pub warnings: Vec<String>,
    #[serde(rename = "lambda_m")]
    pub lambda_micro: f64,
    #[serde(rename = "lambda_M")]
    pub lambda_macro: f64,
    pub cm_prime: f64,
    pub cm_prime_numeric: f64,
    pub cm_prime_source: CmSource,
    pub cm_alpha: Option<f64>,
    pub alpha_star: Option<f64>,
    pub epsilon: Option<f64>,
    pub kappa: Option<f64>,
    pub delta: Option<f64>,
    pub lambda: Option<f64>,
    pub big_c: Option<f64>,
    pub tmix_bound: Vec<TmixEntry>,
    pub kernel_dim: usize,
    pub sigma_min_eigenvalue: f64,
    pub residuals: Residuals,
    pub tolerances: Tolerances,
    pub alpha_trace: Vec<AlphaSample>,
}

impl HypoCertificate {
    pub fn tmix_for(&self, eps_target: f64) -> Option<f64> {
        self.tmix_bound.iter().find(|e| e.eps_target == eps_target).map(|e| e.time)
    }
}

/// Run the full pipeline on `model`.
pub fn certify(model: &LindbladModel, opts: &CertifyOptions) -> Result<HypoCertificate> {
    Analysis::new(model)?.certificate(model, opts)
}
