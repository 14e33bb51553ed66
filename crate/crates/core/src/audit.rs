//! Sampling audit of a certificate: every inequality the rate argument
//! relies on, evaluated on random traceless observables.
//!
//! Each field is the worst `lhs − rhs` over the samples for an inequality
//! of the form `lhs ≤ rhs`, with samples normalized to unit GNS norm. A
//! sound certificate has every slack at or below rounding level.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::certifier::{Analysis, HypoCertificate};
use crate::error::{Error, Result};
use crate::linalg::{max_norm, random_complex_matrix, C64};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct AuditReport {
    pub samples: usize,
    /// `‖𝒜 − 𝒫𝒜‖` as an operator, plus the per-sample residual.
    pub aux_range: f64,
    /// `‖𝒜a‖ ≤ ‖(𝒾−𝒫)a‖ / (2√α)`.
    pub aux_bound: f64,
    /// `‖ℋ𝒜a‖ ≤ ‖(𝒾−𝒫)a‖`.
    pub h_aux_bound: f64,
    /// `λ_m ‖(𝒾−𝒫)a‖² ≤ −Re⟨𝒟a, a⟩`.
    pub condition_1: f64,
    /// `λ_M ‖𝒫a‖² ≤ ‖ℋ𝒫a‖²`.
    pub condition_2: f64,
    /// `‖ℋ(𝒾−𝒫)a‖ + ‖𝒟a‖ ≤ C_M′ ‖(𝒾−𝒫)a‖`.
    pub condition_4: f64,
    /// `‖𝒜ℋ(𝒾−𝒫)a‖ + ‖𝒜𝒟a‖ ≤ C_M(α) ‖(𝒾−𝒫)a‖`.
    pub aux_boundedness: f64,
    /// `½(1−ε)‖a‖² ≤ 𝔏[a]`.
    pub sandwich_lower: f64,
    /// `𝔏[a] ≤ ½(1+ε)‖a‖²`.
    pub sandwich_upper: f64,
    /// `κ‖a‖² ≤ −d𝔏/dt`.
    pub dissipation: f64,
}

impl AuditReport {
    pub fn worst(&self) -> f64 {
        [
            self.aux_range,
            self.aux_bound,
            self.h_aux_bound,
            self.condition_1,
            self.condition_2,
            self.condition_4,
            self.aux_boundedness,
            self.sandwich_lower,
            self.sandwich_upper,
            self.dissipation,
        ]
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Random traceless coordinates of unit GNS norm.
pub fn random_traceless(analysis: &Analysis, rng: &mut ChaCha8Rng) -> Result<DVector<C64>> {
    let d = analysis.frame.dim();
    let a = random_complex_matrix(d, d, rng);
    let full = analysis.frame.to_coords(&a)?;
    let x = full.rows(1, full.len() - 1).into_owned();
    let n = x.norm();
    Ok(x / C64::new(n, 0.0))
}

/// `−d𝔏/dt` along `ȧ = ℒa`.
pub fn dissipation_functional(generator: &DMatrix<C64>, aux: &DMatrix<C64>, eps: f64, a: &DVector<C64>) -> f64 {
    let la = generator * a;
    let d_norm = la.dotc(a).re;
    let d_twist = (aux * &la).dotc(a).re + (aux * a).dotc(&la).re;
    -(d_norm - eps * d_twist)
}

pub fn audit_certificate(
    analysis: &Analysis,
    cert: &HypoCertificate,
    samples: usize,
    seed: u64,
) -> Result<AuditReport> {
    let missing = |what: &str| Error::Domain(format!("certificate has no {what}; only passed certificates can be audited"));
    let alpha = cert.alpha_star.ok_or_else(|| missing("alpha"))?;
    let eps = cert.epsilon.ok_or_else(|| missing("epsilon"))?;
    let kappa = cert.kappa.ok_or_else(|| missing("kappa"))?;
    let cm_alpha = cert.cm_alpha.ok_or_else(|| missing("C_M(alpha)"))?;
    let lambda_macro = analysis.lambda_macro.ok_or_else(|| missing("lambda_M"))?;

    let aux = analysis.auxiliary(alpha)?;
    let am = aux.op.matrix();
    let p = analysis.projector.projector.matrix();
    let q = DMatrix::<C64>::identity(p.nrows(), p.nrows()) - p;
    let h = analysis.h.matrix();
    let d = analysis.d.matrix();
    let generator = analysis.generator();
    let gm = generator.matrix();
    let ha = h * am;

    let mut r = AuditReport {
        samples,
        aux_range: max_norm(&(am - p * am)),
        ..Default::default()
    };
    for f in [
        &mut r.aux_bound,
        &mut r.h_aux_bound,
        &mut r.condition_1,
        &mut r.condition_2,
        &mut r.condition_4,
        &mut r.aux_boundedness,
        &mut r.sandwich_lower,
        &mut r.sandwich_upper,
        &mut r.dissipation,
    ] {
        *f = f64::NEG_INFINITY;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let a = random_traceless(analysis, &mut rng)?;
        let pa = p * &a;
        let qa = &q * &a;
        let qn = qa.norm();
        let aa = am * &a;
        let n2 = a.norm_squared();
        let lyap = 0.5 * n2 - eps * aa.dotc(&a).re;

        r.aux_range = r.aux_range.max((&aa - p * &aa).norm());
        r.aux_bound = r.aux_bound.max(aa.norm() - qn / (2.0 * alpha.sqrt()));
        r.h_aux_bound = r.h_aux_bound.max((&ha * &a).norm() - qn);
        r.condition_1 = r
            .condition_1
            .max(analysis.lambda_micro * qn * qn + (d * &a).dotc(&a).re);
        r.condition_2 = r
            .condition_2
            .max(lambda_macro * pa.norm_squared() - (h * &pa).norm_squared());
        r.condition_4 = r
            .condition_4
            .max((h * &qa).norm() + (d * &a).norm() - cert.cm_prime * qn);
        r.aux_boundedness = r
            .aux_boundedness
            .max((am * (h * &qa)).norm() + (am * (d * &a)).norm() - cm_alpha * qn);
        r.sandwich_lower = r.sandwich_lower.max(0.5 * (1.0 - eps) * n2 - lyap);
        r.sandwich_upper = r.sandwich_upper.max(lyap - 0.5 * (1.0 + eps) * n2);
        r.dissipation = r
            .dissipation
            .max(kappa * n2 - dissipation_functional(gm, am, eps, &a));
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certifier::CertifyOptions;
    use crate::models::{qutrit, toy_qubit};

    #[test]
    fn toy_and_qutrit_audits_are_clean() {
        for built in [toy_qubit().unwrap(), qutrit(1.0, 1.0).unwrap()] {
            let an = Analysis::new(&built.model).unwrap();
            let cert = an.certificate(&built.model, &CertifyOptions::default()).unwrap();
            let r = audit_certificate(&an, &cert, 100, 3).unwrap();
            assert_eq!(r.samples, 100);
            assert!(r.worst() <= 1e-9, "{r:?}");
            // the sandwich is not vacuous
            assert!(r.sandwich_lower < 0.0 && r.sandwich_upper < 0.0);
        }
    }

    #[test]
    fn failed_certificate_cannot_be_audited() {
        let built = crate::models::tfim_dephasing(2, 0.0, 1.0).unwrap();
        let an = Analysis::new(&built.model).unwrap();
        let cert = an.certificate(&built.model, &CertifyOptions::default()).unwrap();
        assert!(!cert.passed);
        assert!(matches!(audit_certificate(&an, &cert, 10, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn inflated_rate_is_caught() {
        let built = qutrit(1.0, 1.0).unwrap();
        let an = Analysis::new(&built.model).unwrap();
        let mut cert = an.certificate(&built.model, &CertifyOptions::default()).unwrap();
        cert.kappa = Some(10.0);
        assert!(audit_certificate(&an, &cert, 50, 1).unwrap().dissipation > 1.0);
    }
}
