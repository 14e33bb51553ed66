//! Built-in models with their closed-form constants.
//!
//! Dephasing always means `𝒟A = γ Σ_i (Z_i A Z_i − A)`, i.e. jumps
//! `√(γ/2) Z_i` under the doubled dissipator convention of
//! [`crate::lindblad`].

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::lindblad::LindbladModel;
use crate::linalg::{c, hermitian_eigen, DenseOperator};
use crate::pauli::{multiply, PauliString, PauliSum, MAX_DENSE_QUBITS};

/// Closed-form constants carried by a recipe. `None` means no closed form.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Analytic {
    pub lambda_m: Option<f64>,
    #[serde(rename = "lambda_M")]
    pub lambda_macro: Option<f64>,
    /// When true `lambda_M` is only a lower bound.
    pub lambda_macro_is_lower_bound: bool,
    pub cm_prime: Option<f64>,
    #[serde(skip)]
    pub sigma: Option<DenseOperator>,
}

#[derive(Clone, Debug)]
pub struct ModelRecipe {
    pub model: LindbladModel,
    pub analytic: Analytic,
    /// Laplacian gap Δ, for graph walks.
    pub graph_gap: Option<f64>,
}

fn maximally_mixed(d: usize) -> DenseOperator {
    DenseOperator::identity(d, d) / c(d as f64)
}

fn check_rate(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::Model(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

fn check_chain(n: usize) -> Result<()> {
    if !(2..=MAX_DENSE_QUBITS).contains(&n) {
        return Err(Error::Model(format!("chain length must be in 2..={MAX_DENSE_QUBITS}, got {n}")));
    }
    Ok(())
}

/// `√(γ/2) Z_i` for every site.
pub fn dephasing_jumps(n: usize, gamma: f64) -> Result<Vec<DenseOperator>> {
    let k = c((gamma / 2.0).sqrt());
    (0..n)
        .map(|i| Ok(PauliString::single(n, i, 'Z')?.to_dense()? * k))
        .collect()
}

/// `H = X`, `V = |0⟩⟨0|`.
pub fn toy_qubit() -> Result<ModelRecipe> {
    let h = PauliSum::single(c(1.0), "X".parse()?).to_dense()?;
    let mut v = DenseOperator::zeros(2, 2);
    v[(0, 0)] = c(1.0);
    let sigma = maximally_mixed(2);
    let model = LindbladModel::new("toy", h, vec![v])?.with_sigma_hint(sigma.clone())?;
    Ok(ModelRecipe {
        model,
        analytic: Analytic {
            sigma: Some(sigma),
            ..Default::default()
        },
        graph_gap: None,
    })
}

/// `V₁ = √γ|0⟩⟨1|`, `V₂ = √γ|1⟩⟨0|`, `H = ω(|1⟩⟨2| + |2⟩⟨1|)`.
///
/// The closed forms recorded here are the ones this generator actually
/// has: σ = I/3, `λ_m = γ`, `λ_M = 3ω²`. No stationary hint is attached,
/// so σ is always computed from the kernel.
pub fn qutrit(omega: f64, gamma: f64) -> Result<ModelRecipe> {
    if !(omega != 0.0 && omega.is_finite()) {
        return Err(Error::Model(format!("omega must be nonzero, got {omega}")));
    }
    check_rate("gamma", gamma)?;
    let mut h = DenseOperator::zeros(3, 3);
    h[(1, 2)] = c(omega);
    h[(2, 1)] = c(omega);
    let g = c(gamma.sqrt());
    let mut v1 = DenseOperator::zeros(3, 3);
    v1[(0, 1)] = g;
    let mut v2 = DenseOperator::zeros(3, 3);
    v2[(1, 0)] = g;
    let model = LindbladModel::new("qutrit", h, vec![v1, v2])?
        .with_param("omega", omega)
        .with_param("gamma", gamma);
    Ok(ModelRecipe {
        model,
        analytic: Analytic {
            lambda_m: Some(gamma),
            lambda_macro: Some(3.0 * omega * omega),
            lambda_macro_is_lower_bound: false,
            cm_prime: None,
            sigma: Some(maximally_mixed(3)),
        },
        graph_gap: None,
    })
}

/// `H = Σ Z_i Z_{i+1} + h Σ X_i` (open chain) with dephasing.
pub fn tfim_dephasing(n: usize, h: f64, gamma: f64) -> Result<ModelRecipe> {
    check_chain(n)?;
    check_rate("gamma", gamma)?;
    if !h.is_finite() {
        return Err(Error::Model("h must be finite".into()));
    }
    let mut ham = PauliSum::zero(n)?;
    for i in 0..n - 1 {
        ham.add_term(c(1.0), PauliString::z_string(n, &[i, i + 1])?)?;
    }
    for i in 0..n {
        ham.add_term(c(h), PauliString::single(n, i, 'X')?)?;
    }
    let d = 1 << n;
    let sigma = maximally_mixed(d);
    let model = LindbladModel::new("tfim", ham.to_dense()?, dephasing_jumps(n, gamma)?)?
        .with_sigma_hint(sigma.clone())?
        .with_param("n", n)
        .with_param("h", h)
        .with_param("gamma", gamma);
    let nf = n as f64;
    Ok(ModelRecipe {
        model,
        analytic: Analytic {
            lambda_m: Some(2.0 * gamma),
            lambda_macro: Some(4.0 * h * h),
            lambda_macro_is_lower_bound: false,
            cm_prime: Some(2.0 * ((nf - 1.0) + nf * h.abs()) + 2.0 * nf * gamma),
            sigma: Some(sigma),
        },
        graph_gap: None,
    })
}

/// `H = Σ (J_x X_iX_{i+1} + J_y Y_iY_{i+1} + J_z Z_iZ_{i+1}) + h Σ X_i` with
/// dephasing. `C_M′` uses `2‖H‖ + 2Nγ` with `‖H‖` bounded by the
/// coefficient 1-norm.
pub fn heisenberg_dephasing(n: usize, jx: f64, jy: f64, jz: f64, h: f64, gamma: f64) -> Result<ModelRecipe> {
    check_chain(n)?;
    check_rate("gamma", gamma)?;
    let mut ham = PauliSum::zero(n)?;
    for i in 0..n - 1 {
        for (p, j) in [('X', jx), ('Y', jy), ('Z', jz)] {
            let (phase, s) = multiply(&PauliString::single(n, i, p)?, &PauliString::single(n, i + 1, p)?)?;
            ham.add_term(phase.to_complex() * j, s)?;
        }
    }
    for i in 0..n {
        ham.add_term(c(h), PauliString::single(n, i, 'X')?)?;
    }
    let d = 1 << n;
    let sigma = maximally_mixed(d);
    let model = LindbladModel::new("heisenberg", ham.to_dense()?, dephasing_jumps(n, gamma)?)?
        .with_sigma_hint(sigma.clone())?
        .with_param("n", n)
        .with_param("jx", jx)
        .with_param("jy", jy)
        .with_param("jz", jz)
        .with_param("h", h)
        .with_param("gamma", gamma);
    Ok(ModelRecipe {
        model,
        analytic: Analytic {
            lambda_m: Some(2.0 * gamma),
            lambda_macro: Some(4.0 * h * h),
            lambda_macro_is_lower_bound: true,
            cm_prime: Some(2.0 * ham.coefficient_one_norm() + 2.0 * n as f64 * gamma),
            sigma: Some(sigma),
        },
        graph_gap: None,
    })
}

/// Validated walk graph: returns `(n_qubits, degree, Δ)`.
pub fn validate_walk_graph(adjacency: &[Vec<u8>]) -> Result<(usize, usize, f64)> {
    let size = adjacency.len();
    if size < 2 || !size.is_power_of_two() || size > 1 << MAX_DENSE_QUBITS {
        return Err(Error::Model(format!(
            "walk graph needs 2^N vertices with 1 <= N <= {MAX_DENSE_QUBITS}, got {size}"
        )));
    }
    if let Some((i, row)) = adjacency.iter().enumerate().find(|(_, r)| r.len() != size) {
        return Err(Error::Model(format!("adjacency row {i} has length {}", row.len())));
    }
    for (i, row) in adjacency.iter().enumerate() {
        if row[i] != 0 {
            return Err(Error::Model(format!("self-loop at vertex {i}")));
        }
        for (j, &a) in row.iter().enumerate() {
            if a > 1 {
                return Err(Error::Model(format!("adjacency entry ({i},{j}) = {a} is not 0/1")));
            }
            if adjacency[j][i] != a {
                return Err(Error::Model(format!("adjacency is not symmetric at ({i},{j})")));
            }
        }
    }
    let degree = adjacency[0].iter().filter(|&&a| a == 1).count();
    if adjacency.iter().any(|r| r.iter().filter(|&&a| a == 1).count() != degree) {
        return Err(Error::Model("walk graph is not regular".into()));
    }
    let mut seen = vec![false; size];
    let mut queue = std::collections::VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(v) = queue.pop_front() {
        for (u, &a) in adjacency[v].iter().enumerate() {
            if a == 1 && !seen[u] {
                seen[u] = true;
                queue.push_back(u);
            }
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::Model("walk graph is disconnected".into()));
    }
    let lap = DenseOperator::from_fn(size, size, |i, j| {
        if i == j {
            c(degree as f64)
        } else {
            c(-(adjacency[i][j] as f64))
        }
    });
    let (w, _) = hermitian_eigen(&lap);
    Ok((size.trailing_zeros() as usize, degree, w[1]))
}

/// Walk `H = adjacency` on `2^N` vertices with qubit dephasing.
pub fn quantum_walk_dephasing(adjacency: &[Vec<u8>], gamma: f64) -> Result<ModelRecipe> {
    check_rate("gamma", gamma)?;
    let (n, degree, gap) = validate_walk_graph(adjacency)?;
    let size = adjacency.len();
    let h = DenseOperator::from_fn(size, size, |i, j| c(adjacency[i][j] as f64));
    let sigma = maximally_mixed(size);
    let model = LindbladModel::new("walk", h, dephasing_jumps(n, gamma)?)?
        .with_sigma_hint(sigma.clone())?
        .with_param("vertices", size)
        .with_param("degree", degree)
        .with_param("gamma", gamma);
    Ok(ModelRecipe {
        model,
        analytic: Analytic {
            lambda_m: Some(2.0 * gamma),
            lambda_macro: Some(2.0 * gap),
            lambda_macro_is_lower_bound: false,
            cm_prime: Some(2.0 * degree as f64 + 2.0 * n as f64 * gamma),
            sigma: Some(sigma),
        },
        graph_gap: Some(gap),
    })
}

pub fn cycle_graph(n: usize) -> Vec<Vec<u8>> {
    (0..n)
        .map(|i| (0..n).map(|j| u8::from(i != j && (j == (i + 1) % n || i == (j + 1) % n))).collect())
        .collect()
}

pub fn complete_graph(n: usize) -> Vec<Vec<u8>> {
    (0..n).map(|i| (0..n).map(|j| u8::from(i != j)).collect()).collect()
}

/// `cycle:N`, `complete:N`, or a JSON list of 0/1 rows.
pub fn parse_graph(spec: &str) -> Result<Vec<Vec<u8>>> {
    let spec = spec.trim();
    let sized = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::Parse(format!("bad graph size '{s}'")))
    };
    if let Some(n) = spec.strip_prefix("cycle:") {
        return Ok(cycle_graph(sized(n)?));
    }
    if let Some(n) = spec.strip_prefix("complete:") {
        return Ok(complete_graph(sized(n)?));
    }
    serde_json::from_str(spec).map_err(|e| Error::Parse(format!("bad graph spec '{spec}': {e}")))
}

/// A named model constructor with its parameters; the unit of sweeps.
#[derive(Clone, Debug, PartialEq)]
pub enum Recipe {
    Toy,
    Qutrit { omega: f64, gamma: f64 },
    Tfim { n: usize, h: f64, gamma: f64 },
    Heisenberg { n: usize, jx: f64, jy: f64, jz: f64, h: f64, gamma: f64 },
    Walk { adjacency: Vec<Vec<u8>>, gamma: f64 },
}

pub const RECIPE_NAMES: [&str; 5] = ["toy", "qutrit", "tfim", "heisenberg", "walk"];

impl Recipe {
    pub fn name(&self) -> &'static str {
        match self {
            Recipe::Toy => "toy",
            Recipe::Qutrit { .. } => "qutrit",
            Recipe::Tfim { .. } => "tfim",
            Recipe::Heisenberg { .. } => "heisenberg",
            Recipe::Walk { .. } => "walk",
        }
    }

    pub fn build(&self) -> Result<ModelRecipe> {
        match self {
            Recipe::Toy => toy_qubit(),
            Recipe::Qutrit { omega, gamma } => qutrit(*omega, *gamma),
            Recipe::Tfim { n, h, gamma } => tfim_dephasing(*n, *h, *gamma),
            Recipe::Heisenberg { n, jx, jy, jz, h, gamma } => heisenberg_dephasing(*n, *jx, *jy, *jz, *h, *gamma),
            Recipe::Walk { adjacency, gamma } => quantum_walk_dephasing(adjacency, *gamma),
        }
    }

    /// Copy with one numeric parameter replaced.
    pub fn with_param(&self, name: &str, value: f64) -> Result<Recipe> {
        let mut r = self.clone();
        let unknown = || Error::Model(format!("recipe '{}' has no parameter '{name}'", self.name()));
        let as_n = |v: f64| {
            if v.fract() == 0.0 && v >= 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::Model(format!("n must be a nonnegative integer, got {v}")))
            }
        };
        match (&mut r, name) {
            (Recipe::Qutrit { omega, .. }, "omega") => *omega = value,
            (Recipe::Qutrit { gamma, .. }, "gamma")
            | (Recipe::Tfim { gamma, .. }, "gamma")
            | (Recipe::Heisenberg { gamma, .. }, "gamma")
            | (Recipe::Walk { gamma, .. }, "gamma") => *gamma = value,
            (Recipe::Tfim { h, .. }, "h") | (Recipe::Heisenberg { h, .. }, "h") => *h = value,
            (Recipe::Tfim { n, .. }, "n") | (Recipe::Heisenberg { n, .. }, "n") => *n = as_n(value)?,
            (Recipe::Heisenberg { jx, .. }, "jx") => *jx = value,
            (Recipe::Heisenberg { jy, .. }, "jy") => *jy = value,
            (Recipe::Heisenberg { jz, .. }, "jz") => *jz = value,
            _ => return Err(unknown()),
        }
        Ok(r)
    }

    pub fn params_json(&self) -> Value {
        match self {
            Recipe::Toy => serde_json::json!({}),
            Recipe::Qutrit { omega, gamma } => serde_json::json!({"omega": omega, "gamma": gamma}),
            Recipe::Tfim { n, h, gamma } => serde_json::json!({"n": n, "h": h, "gamma": gamma}),
            Recipe::Heisenberg { n, jx, jy, jz, h, gamma } => {
                serde_json::json!({"n": n, "jx": jx, "jy": jy, "jz": jz, "h": h, "gamma": gamma})
            }
            Recipe::Walk { adjacency, gamma } => serde_json::json!({"adjacency": adjacency, "gamma": gamma}),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certifier::Analysis;
    use crate::lindblad::{exact_spectrum, stationary_state};
    use crate::linalg::{commutator, max_norm};
    use approx::assert_relative_eq;

    #[test]
    fn toy_recipe() {
        let r = toy_qubit().unwrap();
        let a = Analysis::new(&r.model).unwrap();
        assert_eq!(a.projector.kernel_dim, 1);
        assert_relative_eq!(exact_spectrum(&r.model).unwrap().gap, 0.5, epsilon = 1e-10);
    }

    #[test]
    fn qutrit_generator_and_derived_constants() {
        let r = qutrit(1.0, 1.0).unwrap();
        let s = stationary_state(&r.model).unwrap();
        assert!(max_norm(&(s.sigma - r.analytic.sigma.clone().unwrap())) < 1e-9);
        for (omega, gamma) in [(0.5, 2.0), (2.0, 0.5)] {
            let r = qutrit(omega, gamma).unwrap();
            let a = Analysis::new(&r.model).unwrap();
            assert_relative_eq!(a.lambda_micro, r.analytic.lambda_m.unwrap(), max_relative = 1e-8);
            assert_relative_eq!(a.lambda_macro.unwrap(), r.analytic.lambda_macro.unwrap(), max_relative = 1e-8);
        }
        assert!(qutrit(0.0, 1.0).is_err());
        assert!(qutrit(1.0, 0.0).is_err());
    }

    #[test]
    fn chain_preconditions() {
        assert!(tfim_dephasing(1, 1.0, 1.0).is_err());
        assert!(tfim_dephasing(7, 1.0, 1.0).is_err());
        assert!(heisenberg_dephasing(2, 1.0, 1.0, 1.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn heisenberg_hamiltonian_matches_kronecker() {
        let r = heisenberg_dephasing(2, 0.3, -0.7, 1.1, 0.4, 1.0).unwrap();
        let x = PauliString::single(1, 0, 'X').unwrap().to_dense().unwrap();
        let y = PauliString::single(1, 0, 'Y').unwrap().to_dense().unwrap();
        let z = PauliString::single(1, 0, 'Z').unwrap().to_dense().unwrap();
        let id = DenseOperator::identity(2, 2);
        let want = x.kronecker(&x) * c(0.3) + y.kronecker(&y) * c(-0.7) + z.kronecker(&z) * c(1.1)
            + (x.kronecker(&id) + id.kronecker(&x)) * c(0.4);
        assert!(max_norm(&(r.model.hamiltonian() - want)) < 1e-14);
    }

    #[test]
    fn every_recipe_commutes_with_its_sigma() {
        let recipes = [
            Recipe::Toy,
            Recipe::Qutrit { omega: 1.0, gamma: 1.0 },
            Recipe::Tfim { n: 2, h: 1.0, gamma: 1.0 },
            Recipe::Heisenberg { n: 2, jx: 1.0, jy: 1.0, jz: 1.0, h: 1.0, gamma: 1.0 },
            Recipe::Walk { adjacency: cycle_graph(4), gamma: 1.0 },
        ];
        for r in recipes {
            let built = r.build().unwrap();
            let sigma = built.analytic.sigma.unwrap();
            assert!(max_norm(&commutator(built.model.hamiltonian(), &sigma)) < 1e-10, "{}", r.name());
            assert!(built.model.stationarity_residual(&sigma) < 1e-10, "{}", r.name());
        }
    }

    #[test]
    fn walk_graphs() {
        let (n, deg, gap) = validate_walk_graph(&cycle_graph(4)).unwrap();
        assert_eq!((n, deg), (2, 2));
        assert_relative_eq!(gap, 2.0, epsilon = 1e-12);
        let (_, deg, gap) = validate_walk_graph(&complete_graph(4)).unwrap();
        assert_eq!(deg, 3);
        assert_relative_eq!(gap, 4.0, epsilon = 1e-12);

        // two disjoint 4-cycles
        let mut two = vec![vec![0u8; 8]; 8];
        for base in [0, 4] {
            for i in 0..4 {
                let j = (i + 1) % 4;
                two[base + i][base + j] = 1;
                two[base + j][base + i] = 1;
            }
        }
        assert!(matches!(validate_walk_graph(&two), Err(Error::Model(m)) if m.contains("disconnected")));

        let mut path = cycle_graph(4);
        path[0][3] = 0;
        path[3][0] = 0;
        assert!(matches!(validate_walk_graph(&path), Err(Error::Model(m)) if m.contains("regular")));
        assert!(validate_walk_graph(&cycle_graph(6)).is_err());
        assert!(validate_walk_graph(&[vec![0, 1], vec![1]]).is_err());
        let mut loopy = complete_graph(2);
        loopy[0][0] = 1;
        assert!(validate_walk_graph(&loopy).is_err());
    }

    #[test]
    fn graph_specs() {
        assert_eq!(parse_graph("cycle:4").unwrap(), cycle_graph(4));
        assert_eq!(parse_graph("complete:4").unwrap(), complete_graph(4));
        assert_eq!(parse_graph("[[0,1],[1,0]]").unwrap(), complete_graph(2));
        assert!(parse_graph("star:4").is_err());
    }

    #[test]
    fn recipe_param_override() {
        let r = Recipe::Tfim { n: 2, h: 1.0, gamma: 1.0 };
        assert_eq!(r.with_param("gamma", 0.3).unwrap(), Recipe::Tfim { n: 2, h: 1.0, gamma: 0.3 });
        assert_eq!(r.with_param("n", 3.0).unwrap(), Recipe::Tfim { n: 3, h: 1.0, gamma: 1.0 });
        assert!(r.with_param("omega", 1.0).is_err());
        assert!(r.with_param("n", 2.5).is_err());
        assert!(Recipe::Toy.with_param("gamma", 1.0).is_err());
    }
}
