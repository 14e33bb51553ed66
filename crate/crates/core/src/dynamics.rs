//! Time evolution in both pictures, decay envelopes and empirical mixing
//! times.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;

use crate::certifier::{lyapunov_value, Analysis, HypoCertificate};
use crate::error::{Error, Result};
use crate::expm::expm;
use crate::gns::SuperOp;
use crate::lindblad::{build_schrodinger, LindbladModel};
use crate::linalg::{
    c, hermitian_eigen, hermiticity_residual, random_pure_state, trace_norm_hermitian, unvectorize, vectorize,
    DenseOperator, C64,
};

/// Absolute slack allowed on envelope comparisons.
pub const ENVELOPE_SLACK: f64 = 1e-7;

/// Number of seeded Haar-random probes used by [`empirical_mixing_time`].
pub const RANDOM_PROBES: usize = 20;

pub const DEFAULT_GRID_POINTS: usize = 200;

/// `e^{tM} x`.
pub fn propagate(generator: &SuperOp, x: &DVector<C64>, t: f64) -> Result<DVector<C64>> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("propagation time must be nonnegative, got {t}")));
    }
    if x.len() != generator.size() {
        return Err(Error::Dimension {
            expected: generator.size(),
            found: x.len(),
        });
    }
    if t == 0.0 {
        return Ok(x.clone());
    }
    Ok(expm(&(generator.matrix() * c(t)))? * x)
}

/// Propagate the columns of `x0` along an increasing time grid starting at
/// or after zero. Step propagators `e^{(t_{k+1} − t_k) M}` are built once
/// per step and shared by all columns.
pub fn propagate_grid(generator: &SuperOp, x0: &DMatrix<C64>, times: &[f64]) -> Result<Vec<DMatrix<C64>>> {
    check_grid(times)?;
    if x0.nrows() != generator.size() {
        return Err(Error::Dimension {
            expected: generator.size(),
            found: x0.nrows(),
        });
    }
    let mut out = Vec::with_capacity(times.len());
    let mut current = x0.clone();
    let mut t_prev = 0.0;
    for &t in times {
        let dt = t - t_prev;
        if dt > 0.0 {
            current = expm(&(generator.matrix() * c(dt)))? * current;
        }
        out.push(current.clone());
        t_prev = t;
    }
    Ok(out)
}

fn check_grid(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::Domain("time grid must contain finite nonnegative values".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("time grid must be strictly increasing".into()));
    }
    Ok(())
}

/// `n` log-spaced points on `[t_min, t_max]`.
pub fn log_grid(t_min: f64, t_max: f64, n: usize) -> Result<Vec<f64>> {
    if !(t_min > 0.0 && t_max > t_min) {
        return Err(Error::Domain(format!("bad log grid bounds [{t_min}, {t_max}]")));
    }
    if n < 2 {
        return Ok(vec![t_min; n]);
    }
    let (a, b) = (t_min.ln(), t_max.ln());
    Ok((0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect())
}

/// `0` followed by `n − 1` log-spaced points on `[1e-4·t_mix, 2·t_mix]`.
pub fn default_time_grid(tmix_bound: f64, n: usize) -> Result<Vec<f64>> {
    if !(tmix_bound > 0.0) {
        return Err(Error::Domain(format!("t_mix bound must be positive, got {tmix_bound}")));
    }
    let mut grid = vec![0.0];
    if n > 1 {
        grid.extend(log_grid(1e-4 * tmix_bound, 2.0 * tmix_bound, n - 1)?);
    }
    Ok(grid)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Picture {
    Heisenberg,
    Schrodinger,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryPoint {
    pub time: f64,
    pub gns_norm: f64,
    pub trace_distance: Option<f64>,
    pub lyapunov: Option<f64>,
    pub envelope_value: Option<f64>,
    pub envelope_ok: Option<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub picture: Picture,
    pub points: Vec<TrajectoryPoint>,
}

pub const TRAJECTORY_CSV_HEADER: &str = "time,gns_norm,trace_distance,lyapunov,envelope_value,envelope_ok";

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

impl Trajectory {
    pub fn envelope_violations(&self) -> usize {
        self.points.iter().filter(|p| p.envelope_ok == Some(false)).count()
    }

    pub fn all_envelope_ok(&self) -> bool {
        self.envelope_violations() == 0
    }

    /// Fixed-format CSV; missing values are empty fields.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(TRAJECTORY_CSV_HEADER);
        s.push('\n');
        for p in &self.points {
            let _ = writeln!(
                s,
                "{:.16e},{:.16e},{},{},{},{}",
                p.time,
                p.gns_norm,
                fmt_opt(p.trace_distance),
                fmt_opt(p.lyapunov),
                fmt_opt(p.envelope_value),
                p.envelope_ok.map(|b| b.to_string()).unwrap_or_default()
            );
        }
        s
    }
}

fn rate_constants(cert: Option<&HypoCertificate>) -> Option<(f64, f64)> {
    let cert = cert?;
    Some((cert.lambda?, cert.big_c?))
}

/// Coordinates of `A − tr(σA)·I` in the traceless frame coordinates.
pub fn centered_coords(analysis: &Analysis, a: &DenseOperator) -> Result<DVector<C64>> {
    let full = analysis.frame.to_coords(a)?;
    Ok(full.rows(1, full.len() - 1).into_owned())
}

/// Heisenberg trajectory of `‖A(t)‖` for the centered observable, with the
/// envelope `C e^{−λt} ‖A(0)‖` and the Lyapunov functional when a passed
/// certificate is supplied.
pub fn heisenberg_decay(
    analysis: &Analysis,
    cert: Option<&HypoCertificate>,
    a0: &DenseOperator,
    times: &[f64],
) -> Result<Trajectory> {
    let x0 = centered_coords(analysis, a0)?;
    let n0 = x0.norm();
    let generator = analysis.generator();
    let states = propagate_grid(&generator, &DMatrix::from_columns(&[x0]), times)?;
    let rates = rate_constants(cert);
    let aux = match (cert.and_then(|c| c.alpha_star), rates) {
        (Some(alpha), Some(_)) => Some(analysis.auxiliary(alpha)?),
        _ => None,
    };
    let eps = cert.and_then(|c| c.epsilon);
    let points = times
        .iter()
        .zip(states)
        .map(|(&t, x)| {
            let x = x.column(0).into_owned();
            let norm = x.norm();
            let envelope = rates.map(|(lambda, big_c)| big_c * (-lambda * t).exp() * n0);
            TrajectoryPoint {
                time: t,
                gns_norm: norm,
                trace_distance: None,
                lyapunov: match (&aux, eps) {
                    (Some(aux), Some(eps)) => Some(lyapunov_value(&x, eps, &aux.op)),
                    _ => None,
                },
                envelope_value: envelope,
                envelope_ok: envelope.map(|e| norm <= e + ENVELOPE_SLACK),
            }
        })
        .collect();
    Ok(Trajectory {
        picture: Picture::Heisenberg,
        points,
    })
}

/// Check that `rho` is a density matrix.
pub fn validate_state(rho: &DenseOperator, dim: usize) -> Result<()> {
    if rho.shape() != (dim, dim) {
        return Err(Error::Dimension {
            expected: dim,
            found: rho.nrows(),
        });
    }
    if hermiticity_residual(rho) > 1e-10 {
        return Err(Error::Domain("initial state is not Hermitian".into()));
    }
    if (rho.trace() - c(1.0)).norm() > 1e-10 {
        return Err(Error::Domain(format!("initial state has trace {}", rho.trace())));
    }
    let (w, _) = hermitian_eigen(rho);
    if w[0] < -1e-10 {
        return Err(Error::Domain(format!("initial state has negative eigenvalue {:e}", w[0])));
    }
    Ok(())
}

fn sigma_inverse(sigma: &DenseOperator) -> Result<DenseOperator> {
    let (w, u) = hermitian_eigen(sigma);
    if !(w[0] > 0.0) {
        return Err(Error::Domain(format!(
            "stationary state is singular (smallest eigenvalue {:e})",
            w[0]
        )));
    }
    Ok(&u * DenseOperator::from_diagonal(&w.map(|x| c(1.0 / x))) * u.adjoint())
}

/// GNS norm of `ρσ⁻¹`, i.e. `√tr(ρ² σ⁻¹)` for Hermitian `ρ`.
pub fn schrodinger_prefactor(sigma: &DenseOperator, rho: &DenseOperator) -> Result<f64> {
    let inv = sigma_inverse(sigma)?;
    let x = rho * &inv;
    Ok((sigma * x.adjoint() * &x).trace().re.max(0.0).sqrt())
}

/// Schrödinger trajectory: trace distance `‖ρ(t) − σ‖₁`, the GNS norm of
/// `ρ(t)σ⁻¹ − I`, and the envelope `C ‖ρ₀σ⁻¹‖ e^{−λt}`.
pub fn schrodinger_decay(
    model: &LindbladModel,
    analysis: &Analysis,
    cert: Option<&HypoCertificate>,
    rho0: &DenseOperator,
    times: &[f64],
) -> Result<Trajectory> {
    let d = model.dim();
    validate_state(rho0, d)?;
    let sigma = analysis.frame.sigma().clone();
    let inv = sigma_inverse(&sigma)?;
    let prefactor = schrodinger_prefactor(&sigma, rho0)?;
    let generator = build_schrodinger(model)?;
    let states = propagate_grid(&generator, &DMatrix::from_columns(&[vectorize(rho0)]), times)?;
    let rates = rate_constants(cert);
    let id = DenseOperator::identity(d, d);
    let mut points = Vec::with_capacity(times.len());
    for (&t, v) in times.iter().zip(states) {
        let rho = unvectorize(&v.column(0).into_owned(), d);
        let dist = trace_norm_hermitian(&(&rho - &sigma));
        let dev = &rho * &inv - &id;
        let gns = analysis.frame.norm(&dev)?;
        let envelope = rates.map(|(lambda, big_c)| big_c * prefactor * (-lambda * t).exp());
        points.push(TrajectoryPoint {
            time: t,
            gns_norm: gns,
            trace_distance: Some(dist),
            lyapunov: None,
            envelope_value: envelope,
            envelope_ok: envelope.map(|e| dist <= e + ENVELOPE_SLACK),
        });
    }
    Ok(Trajectory {
        picture: Picture::Schrodinger,
        points,
    })
}

/// Probe states: every computational basis state, then seeded Haar-random
/// pure states.
/// Haar-random pure state from a seeded ChaCha8 stream.
pub fn seeded_pure_state(dim: usize, seed: u64) -> DenseOperator {
    random_pure_state(dim, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn probe_states(dim: usize, seed: u64) -> Vec<DenseOperator> {
    let mut probes = Vec::with_capacity(dim + RANDOM_PROBES);
    for k in 0..dim {
        let mut p = DenseOperator::zeros(dim, dim);
        p[(k, k)] = c(1.0);
        probes.push(p);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..RANDOM_PROBES {
        probes.push(random_pure_state(dim, &mut rng));
    }
    probes
}

#[derive(Clone, Debug, PartialEq)]
pub struct MixingEstimate {
    /// Smallest grid time from which every later sample is within ε.
    /// This lower-estimates the true mixing time, which takes a supremum
    /// over all initial states.
    pub time: f64,
    pub max_distances: Vec<f64>,
    pub probes: usize,
}

/// Empirical ε-mixing time over the probe set on `times`.
pub fn empirical_mixing_time(
    model: &LindbladModel,
    sigma: &DenseOperator,
    eps_target: f64,
    times: &[f64],
    seed: u64,
) -> Result<MixingEstimate> {
    if !(eps_target > 0.0) {
        return Err(Error::Domain(format!("eps_target must be positive, got {eps_target}")));
    }
    check_grid(times)?;
    let d = model.dim();
    let probes = probe_states(d, seed);
    let initial_max = probes
        .iter()
        .map(|p| trace_norm_hermitian(&(p - sigma)))
        .fold(0.0, f64::max);
    if eps_target >= initial_max {
        return Ok(MixingEstimate {
            time: 0.0,
            max_distances: vec![initial_max],
            probes: probes.len(),
        });
    }
    let generator = build_schrodinger(model)?;
    let cols: Vec<_> = probes.iter().map(vectorize).collect();
    let x0 = DMatrix::from_columns(&cols);
    let states = propagate_grid(&generator, &x0, times)?;
    let max_distances: Vec<f64> = states
        .iter()
        .map(|m| {
            m.column_iter()
                .map(|col| trace_norm_hermitian(&(unvectorize(&col.into_owned(), d) - sigma)))
                .fold(0.0, f64::max)
        })
        .collect();
    let last = times.len();
    if last == 0 || max_distances[last - 1] > eps_target {
        return Err(Error::Horizon {
            last_time: times.last().copied().unwrap_or(0.0),
            last_distance: max_distances.last().copied().unwrap_or(initial_max),
        });
    }
    let mut k = last - 1;
    while k > 0 && max_distances[k - 1] <= eps_target {
        k -= 1;
    }
    Ok(MixingEstimate {
        time: times[k],
        max_distances,
        probes: probes.len(),
    })
}

/// Central finite difference of `𝔏[A(t)]` at time `t` with step `h`.
pub fn lyapunov_derivative_fd(
    generator: &SuperOp,
    aux: &SuperOp,
    eps: f64,
    x0: &DVector<C64>,
    t: f64,
    h: f64,
) -> Result<(f64, f64)> {
    if !(h > 0.0 && t >= h) {
        return Err(Error::Domain("finite-difference step must satisfy 0 < h <= t".into()));
    }
    let xm = propagate(generator, x0, t - h)?;
    let step = expm(&(generator.matrix() * c(h)))?;
    let x = &step * &xm;
    let xp = &step * &x;
    let d = (lyapunov_value(&xp, eps, aux) - lyapunov_value(&xm, eps, aux)) / (2.0 * h);
    Ok((lyapunov_value(&x, eps, aux), d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certifier::{certify, CertifyOptions};
    use crate::gns::Coordinates;
    use crate::linalg::{max_norm, random_complex_matrix, random_complex_vector, random_hermitian};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn diag(values: &[f64]) -> DenseOperator {
        DenseOperator::from_diagonal(&DVector::from_iterator(values.len(), values.iter().map(|&x| c(x))))
    }

    fn toy(with_h: bool) -> LindbladModel {
        let x = DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
        let h = if with_h { x } else { DenseOperator::zeros(2, 2) };
        LindbladModel::new("toy", h, vec![diag(&[1.0, 0.0])])
            .unwrap()
            .with_sigma_hint(diag(&[0.5, 0.5]))
            .unwrap()
    }

    fn random_model(seed: u64) -> LindbladModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_hermitian(3, &mut rng);
        let jumps = (0..2).map(|_| random_complex_matrix(3, 3, &mut rng) * c(0.5)).collect();
        LindbladModel::new("random", h, jumps).unwrap()
    }

    #[test]
    fn zero_time_is_identity_and_negative_rejected() {
        let gen = SuperOp::from_matrix(Coordinates::MatrixUnits { dim: 1 }, DMatrix::from_element(1, 1, c(-1.0))).unwrap();
        let x = DVector::from_element(1, c(3.0));
        assert_eq!(propagate(&gen, &x, 0.0).unwrap(), x);
        assert!(matches!(propagate(&gen, &x, -1.0), Err(Error::Domain(_))));
        assert_relative_eq!(propagate(&gen, &x, 2.0).unwrap()[0].re, 3.0 * (-2f64).exp(), epsilon = 1e-14);
    }

    #[test]
    fn toy_dissipator_only_decay_is_exponential() {
        let model = toy(false);
        let d = build_schrodinger(&model).unwrap();
        let heis = d.adjoint();
        let mut b = DenseOperator::zeros(2, 2);
        b[(0, 1)] = C64::new(0.4, -0.3);
        for t in [0.1, 1.0, 5.0] {
            let out = unvectorize(&propagate(&heis, &vectorize(&b), t).unwrap(), 2);
            assert!(max_norm(&(out - &b * c((-t).exp()))) < 1e-12);
        }
    }

    #[test]
    fn toy_hamiltonian_only_rotates_y_into_z() {
        // e^{tℋ}: Y ↦ cos(2t) Y − sin(2t) Z under ℋA = i[X, A]
        let h = DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
        let model = LindbladModel::new("h", h, vec![]).unwrap();
        let heis = build_schrodinger(&model).unwrap().adjoint();
        let y = DMatrix::from_row_slice(2, 2, &[c(0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), c(0.0)]);
        let z = diag(&[1.0, -1.0]);
        for t in [0.3, 1.7] {
            let out = unvectorize(&propagate(&heis, &vectorize(&y), t).unwrap(), 2);
            let want = &y * c((2.0 * t).cos()) - &z * c((2.0 * t).sin());
            assert!(max_norm(&(out - want)) < 1e-12);
        }
    }

    #[test]
    fn grids() {
        let g = default_time_grid(10.0, 200).unwrap();
        assert_eq!(g.len(), 200);
        assert_eq!(g[0], 0.0);
        assert_relative_eq!(g[1], 1e-3, epsilon = 1e-15);
        assert_relative_eq!(g[199], 20.0, epsilon = 1e-12);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert!(log_grid(0.0, 1.0, 3).is_err());
        let gen = SuperOp::from_matrix(Coordinates::MatrixUnits { dim: 1 }, DMatrix::from_element(1, 1, c(-1.0))).unwrap();
        let x = DMatrix::from_element(1, 1, c(1.0));
        assert!(propagate_grid(&gen, &x, &[0.0, 2.0, 1.0]).is_err());
    }

    #[test]
    fn fixed_point_stays_put() {
        let model = toy(true);
        let analysis = Analysis::new(&model).unwrap();
        let cert = certify(&model, &CertifyOptions::default()).unwrap();
        let times = default_time_grid(cert.tmix_for(0.01).unwrap(), 50).unwrap();
        let tr = schrodinger_decay(&model, &analysis, Some(&cert), &diag(&[0.5, 0.5]), &times).unwrap();
        assert!(tr.points.iter().all(|p| p.trace_distance.unwrap() < 1e-12));
        assert!(tr.all_envelope_ok());
    }

    #[test]
    fn toy_envelopes_and_monotone_distance() {
        let model = toy(true);
        let analysis = Analysis::new(&model).unwrap();
        let cert = certify(&model, &CertifyOptions::default()).unwrap();
        let times = default_time_grid(cert.tmix_for(0.01).unwrap(), 200).unwrap();
        let rho0 = diag(&[0.0, 1.0]);
        let tr = schrodinger_decay(&model, &analysis, Some(&cert), &rho0, &times).unwrap();
        assert!(tr.all_envelope_ok());
        let d: Vec<f64> = tr.points.iter().map(|p| p.trace_distance.unwrap()).collect();
        assert!(d.windows(2).all(|w| w[1] <= w[0] + 1e-12));

        // a kernel element still decays
        let heis = heisenberg_decay(&analysis, Some(&cert), &diag(&[1.0, -1.0]), &times).unwrap();
        assert!(heis.all_envelope_ok());
        assert!(heis.points.last().unwrap().gns_norm < 1e-6);
        assert!(heis.points.iter().all(|p| p.lyapunov.is_some()));
    }

    #[test]
    fn csv_layout() {
        let tr = Trajectory {
            picture: Picture::Heisenberg,
            points: vec![TrajectoryPoint {
                time: 0.5,
                gns_norm: 1.0,
                trace_distance: None,
                lyapunov: Some(0.25),
                envelope_value: Some(2.0),
                envelope_ok: Some(true),
            }],
        };
        let csv = tr.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), TRAJECTORY_CSV_HEADER);
        assert_eq!(
            lines.next().unwrap(),
            "5.0000000000000000e-1,1.0000000000000000e0,,2.5000000000000000e-1,2.0000000000000000e0,true"
        );
    }

    #[test]
    fn empirical_mixing_toy() {
        let model = toy(true);
        let sigma = diag(&[0.5, 0.5]);
        let times = default_time_grid(60.0, 200).unwrap();
        let est = empirical_mixing_time(&model, &sigma, 0.01, &times, 7).unwrap();
        assert_eq!(est.probes, 22);
        // distance ~ e^{-t/2}: ln(1/0.01)/0.5 ≈ 9.2 up to a prefactor
        assert!(est.time > 4.0 && est.time < 20.0, "{}", est.time);
        assert_eq!(empirical_mixing_time(&model, &sigma, 5.0, &times, 7).unwrap().time, 0.0);
        let short = [0.0, 0.1, 0.2];
        assert!(matches!(
            empirical_mixing_time(&model, &sigma, 0.01, &short, 7),
            Err(Error::Horizon { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn semigroup_property(seed in any::<u64>(), s in 0.0f64..3.0, t in 0.0f64..3.0) {
            let model = random_model(seed);
            let gen = build_schrodinger(&model).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 9);
            let x = random_complex_vector(9, &mut rng);
            let direct = propagate(&gen, &x, s + t).unwrap();
            let split = propagate(&gen, &propagate(&gen, &x, s).unwrap(), t).unwrap();
            prop_assert!((direct - split).norm() <= 1e-8 * x.norm());
        }

        #[test]
        fn positivity_trace_and_duality(seed in any::<u64>()) {
            let model = random_model(seed);
            let schr = build_schrodinger(&model).unwrap();
            let heis = schr.adjoint();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 3);
            let rho0 = random_pure_state(3, &mut rng);
            let a0 = random_hermitian(3, &mut rng);
            let times = [0.0, 0.05, 0.3, 1.0, 4.0];
            let rhos = propagate_grid(&schr, &DMatrix::from_columns(&[vectorize(&rho0)]), &times).unwrap();
            let obs = propagate_grid(&heis, &DMatrix::from_columns(&[vectorize(&a0)]), &times).unwrap();
            for (r, a) in rhos.iter().zip(&obs) {
                let rho = unvectorize(&r.column(0).into_owned(), 3);
                let a = unvectorize(&a.column(0).into_owned(), 3);
                let (w, _) = hermitian_eigen(&rho);
                prop_assert!(w[0] >= -1e-8);
                prop_assert!((rho.trace() - c(1.0)).norm() <= 1e-10);
                let lhs = (&rho0 * &a).trace();
                let rhs = (&rho * &a0).trace();
                prop_assert!((lhs - rhs).norm() <= 1e-8);
            }
        }
    }
}
