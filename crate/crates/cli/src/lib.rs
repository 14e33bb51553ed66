//! Batch front end: `certify`, `sweep` and `simulate`.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use hypomix::certifier::{certify, Analysis, CertifyOptions, HypoCertificate};
use hypomix::dynamics::{
    default_time_grid, empirical_mixing_time, heisenberg_decay, schrodinger_decay, seeded_pure_state, MixingEstimate,
    Trajectory, DEFAULT_GRID_POINTS,
};
use hypomix::lindblad::{exact_spectrum, parse_dense, LindbladModel};
use hypomix::linalg::DenseOperator;
use hypomix::models::{parse_graph, Analytic, Recipe, RECIPE_NAMES};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CONDITION: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

pub const SWEEP_COLUMNS: [&str; 10] = [
    "lambda_m",
    "lambda_M",
    "cm_prime",
    "alpha_star",
    "epsilon",
    "lambda_bound",
    "big_c",
    "gap_exact",
    "tmix_bound",
    "passed",
];

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] hypomix::Error),
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use hypomix::Error as E;
        match self {
            CliError::Usage(_) | CliError::Read { .. } => EXIT_INPUT,
            CliError::Write { .. } => EXIT_NUMERIC,
            CliError::Core(e) => match e {
                E::Dimension { .. } | E::SizeCap { .. } | E::Domain(_) | E::Model(_) | E::Parse(_) => EXIT_INPUT,
                E::Frame { .. } | E::FrameMismatch | E::Contract(_) | E::Solver(_) | E::Numeric { .. } | E::Horizon { .. } => {
                    EXIT_NUMERIC
                }
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "hypomix", version, about = "Hypocoercive mixing-time certificates for Lindbladians")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the four conditions and emit a certificate as JSON.
    Certify {
        #[command(flatten)]
        model: ModelArgs,
        /// Mixing-time targets (comma separated).
        #[arg(long, default_value = "0.01", value_delimiter = ',')]
        eps: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certify a recipe over a grid of one parameter and emit CSV.
    Sweep {
        #[command(flatten)]
        model: ModelArgs,
        /// Parameter to vary.
        #[arg(long, default_value = "gamma")]
        param: String,
        /// `v1,v2,...` or `logspace:a:b:n` (exponents base 10).
        #[arg(long)]
        grid: String,
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        /// Worker threads; 0 uses all cores.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Propagate one initial condition and check the certified envelope.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        /// `basis:k`, `random:seed`, or a dense JSON matrix.
        #[arg(long, default_value = "basis:0")]
        initial: String,
        #[arg(long, value_enum, default_value_t = PictureArg::Schrodinger)]
        picture: PictureArg,
        #[arg(long, value_enum, default_value_t = GeneratorArg::Full)]
        generator: GeneratorArg,
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        /// Time grid; defaults to 200 points up to twice the certified bound.
        #[arg(long)]
        grid: Option<String>,
        /// Seed for the random probes of the empirical mixing estimate.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PictureArg {
    Heisenberg,
    Schrodinger,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GeneratorArg {
    Full,
    Dissipator,
    Hamiltonian,
}

#[derive(Clone, Debug, Args)]
pub struct ModelArgs {
    /// Built-in model: toy, qutrit, tfim, heisenberg, walk.
    #[arg(long, conflicts_with = "model_file")]
    pub recipe: Option<String>,
    /// Model JSON file.
    #[arg(long)]
    pub model_file: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub h: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub jx: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub jy: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub jz: f64,
    /// Walk graph: `cycle:N`, `complete:N`, or JSON adjacency rows.
    #[arg(long, default_value = "cycle:4")]
    pub graph: String,
    /// Ignore the recipe's closed-form C_M' and use the numeric value.
    #[arg(long)]
    pub numeric_cm: bool,
}

/// A model ready for the pipeline plus whatever closed forms came with it.
#[derive(Clone, Debug)]
pub struct LoadedModel {
    pub model: LindbladModel,
    pub analytic: Analytic,
}

impl ModelArgs {
    pub fn recipe(&self) -> CliResult<Option<Recipe>> {
        let Some(name) = self.recipe.as_deref() else {
            return Ok(None);
        };
        let r = match name {
            "toy" => Recipe::Toy,
            "qutrit" => Recipe::Qutrit {
                omega: self.omega,
                gamma: self.gamma,
            },
            "tfim" => Recipe::Tfim {
                n: self.n,
                h: self.h,
                gamma: self.gamma,
            },
            "heisenberg" => Recipe::Heisenberg {
                n: self.n,
                jx: self.jx,
                jy: self.jy,
                jz: self.jz,
                h: self.h,
                gamma: self.gamma,
            },
            "walk" => Recipe::Walk {
                adjacency: parse_graph(&self.graph)?,
                gamma: self.gamma,
            },
            other => {
                return Err(CliError::Usage(format!(
                    "unknown recipe '{other}' (expected one of {})",
                    RECIPE_NAMES.join(", ")
                )))
            }
        };
        Ok(Some(r))
    }

    pub fn load(&self) -> CliResult<LoadedModel> {
        if let Some(r) = self.recipe()? {
            let built = r.build()?;
            return Ok(LoadedModel {
                model: built.model,
                analytic: built.analytic,
            });
        }
        let Some(path) = &self.model_file else {
            return Err(CliError::Usage("one of --recipe or --model-file is required".into()));
        };
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.clone(),
            source,
        })?;
        Ok(LoadedModel {
            model: LindbladModel::from_json(&text)?,
            analytic: Analytic::default(),
        })
    }

    pub fn options(&self, analytic: &Analytic, eps_targets: Vec<f64>) -> CertifyOptions {
        CertifyOptions {
            eps_targets,
            cm_prime_override: if self.numeric_cm { None } else { analytic.cm_prime },
            ..Default::default()
        }
    }
}

/// `v1,v2,...`, `logspace:a:b:n`, or empty for no points.
pub fn parse_grid(spec: &str) -> CliResult<Vec<f64>> {
    let spec = spec.trim();
    if spec.is_empty() {
        return Ok(Vec::new());
    }
    if let Some(rest) = spec.strip_prefix("logspace:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let bad = || CliError::Usage(format!("bad logspace grid '{spec}' (want logspace:a:b:n)"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let a: f64 = parts[0].parse().map_err(|_| bad())?;
        let b: f64 = parts[1].parse().map_err(|_| bad())?;
        let n: usize = parts[2].parse().map_err(|_| bad())?;
        return Ok(match n {
            0 => Vec::new(),
            1 => vec![10f64.powf(a)],
            _ => (0..n)
                .map(|k| 10f64.powf(a + (b - a) * k as f64 / (n - 1) as f64))
                .collect(),
        });
    }
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("bad grid value '{s}'")))
        })
        .collect()
}

/// `basis:k`, `random:seed`, or a dense JSON matrix.
pub fn parse_initial(spec: &str, dim: usize) -> CliResult<DenseOperator> {
    let spec = spec.trim();
    if let Some(k) = spec.strip_prefix("basis:") {
        let k: usize = k
            .parse()
            .map_err(|_| CliError::Usage(format!("bad basis index in '{spec}'")))?;
        if k >= dim {
            return Err(CliError::Usage(format!("basis index {k} out of range for dimension {dim}")));
        }
        let mut rho = DenseOperator::zeros(dim, dim);
        rho[(k, k)] = hypomix::linalg::c(1.0);
        return Ok(rho);
    }
    if let Some(seed) = spec.strip_prefix("random:") {
        let seed: u64 = seed
            .parse()
            .map_err(|_| CliError::Usage(format!("bad seed in '{spec}'")))?;
        return Ok(seeded_pure_state(dim, seed));
    }
    let value: serde_json::Value = serde_json::from_str(spec)
        .map_err(|e| CliError::Usage(format!("initial state '{spec}' is not basis:k, random:seed or JSON: {e}")))?;
    let rho = parse_dense(&value)?;
    if rho.nrows() != dim {
        return Err(hypomix::Error::Dimension {
            expected: dim,
            found: rho.nrows(),
        }
        .into());
    }
    Ok(rho)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub lambda_m: Option<f64>,
    pub lambda_macro: Option<f64>,
    pub cm_prime: Option<f64>,
    pub alpha_star: Option<f64>,
    pub epsilon: Option<f64>,
    pub lambda_bound: Option<f64>,
    pub big_c: Option<f64>,
    pub gap_exact: Option<f64>,
    pub tmix_bound: Option<f64>,
    pub passed: bool,
    /// Failure reasons or the error that stopped this row.
    pub note: String,
}

fn sweep_row(recipe: &Recipe, param: &str, value: f64, eps: f64, numeric_cm: bool) -> SweepRow {
    let mut row = SweepRow {
        value,
        ..Default::default()
    };
    let result = (|| -> CliResult<()> {
        let built = recipe.with_param(param, value)?.build()?;
        let opts = CertifyOptions {
            eps_targets: vec![eps],
            cm_prime_override: if numeric_cm { None } else { built.analytic.cm_prime },
            ..Default::default()
        };
        let cert = certify(&built.model, &opts)?;
        row.lambda_m = Some(cert.lambda_micro);
        row.lambda_macro = Some(cert.lambda_macro);
        row.cm_prime = Some(cert.cm_prime);
        row.alpha_star = cert.alpha_star;
        row.epsilon = cert.epsilon;
        row.lambda_bound = cert.lambda;
        row.big_c = cert.big_c;
        row.tmix_bound = cert.tmix_for(eps);
        row.passed = cert.passed;
        row.note = cert.failures.join("; ");
        row.gap_exact = Some(exact_spectrum(&built.model)?.gap);
        Ok(())
    })();
    if let Err(e) = result {
        row.passed = false;
        row.note = e.to_string();
    }
    row
}

/// One row per grid value, in grid order. Row errors are recorded in the row.
pub fn sweep_rows(
    recipe: &Recipe,
    param: &str,
    grid: &[f64],
    eps: f64,
    workers: usize,
    numeric_cm: bool,
) -> CliResult<Vec<SweepRow>> {
    if let Some(v) = grid.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(CliError::Usage(format!("sweep grid values must be positive, got {v}")));
    }
    // fail fast on an unknown parameter name
    recipe.with_param(param, grid.first().copied().unwrap_or(1.0))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| {
        grid.par_iter()
            .map(|&v| sweep_row(recipe, param, v, eps, numeric_cm))
            .collect()
    }))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn sweep_csv(param: &str, rows: &[SweepRow]) -> String {
    let mut s = format!("{},{},note\n", csv_field(param), SWEEP_COLUMNS.join(","));
    for r in rows {
        let _ = writeln!(
            s,
            "{:.16e},{},{},{},{},{},{},{},{},{},{},{}",
            r.value,
            fmt_opt(r.lambda_m),
            fmt_opt(r.lambda_macro),
            fmt_opt(r.cm_prime),
            fmt_opt(r.alpha_star),
            fmt_opt(r.epsilon),
            fmt_opt(r.lambda_bound),
            fmt_opt(r.big_c),
            fmt_opt(r.gap_exact),
            fmt_opt(r.tmix_bound),
            r.passed,
            csv_field(&r.note)
        );
    }
    s
}

fn restricted_model(model: &LindbladModel, generator: GeneratorArg) -> CliResult<LindbladModel> {
    let d = model.dim();
    let (h, jumps) = match generator {
        GeneratorArg::Full => return Ok(model.clone()),
        GeneratorArg::Dissipator => (DenseOperator::zeros(d, d), model.jumps().to_vec()),
        GeneratorArg::Hamiltonian => (model.hamiltonian().clone(), Vec::new()),
    };
    let mut m = LindbladModel::new(format!("{}-{:?}", model.name, generator).to_lowercase(), h, jumps)?;
    m.params = model.params.clone();
    if let Some(s) = model.sigma_hint() {
        m = m.with_sigma_hint(s.clone())?;
    }
    Ok(m)
}

#[derive(Clone, Debug)]
pub struct SimulationOutcome {
    pub certificate: HypoCertificate,
    pub trajectory: Trajectory,
    /// Present for the full generator; `Err` carries a horizon or numeric failure.
    pub mixing: Option<Result<MixingEstimate, String>>,
    pub horizon_hit: bool,
}

impl SimulationOutcome {
    pub fn summary(&self, eps: f64) -> String {
        let bound = self
            .certificate
            .tmix_for(eps)
            .map(|t| format!("{t:.16e}"))
            .unwrap_or_else(|| "none".into());
        let empirical = match &self.mixing {
            None => "skipped".to_string(),
            Some(Ok(m)) => format!("{:.16e}", m.time),
            Some(Err(e)) => format!("failed ({e})"),
        };
        format!(
            "# eps_target={eps} empirical_tmix={empirical} certified_tmix={bound} certificate_passed={} envelope_violations={}",
            self.certificate.passed,
            self.trajectory.envelope_violations()
        )
    }

    pub fn exit_code(&self) -> i32 {
        if self.horizon_hit {
            EXIT_NUMERIC
        } else if self.trajectory.envelope_violations() > 0 {
            EXIT_CONDITION
        } else {
            EXIT_PASS
        }
    }
}

/// Everything `simulate` needs besides the model.
#[derive(Clone, Debug)]
pub struct SimulationSettings {
    pub generator: GeneratorArg,
    pub picture: PictureArg,
    pub initial: String,
    pub eps: f64,
    /// `None` sizes the grid from the certified mixing time.
    pub grid: Option<Vec<f64>>,
    pub seed: u64,
    pub numeric_cm: bool,
}

pub fn simulate(loaded: &LoadedModel, settings: &SimulationSettings) -> CliResult<SimulationOutcome> {
    let SimulationSettings {
        generator,
        picture,
        ref initial,
        eps,
        ref grid,
        seed,
        numeric_cm,
    } = *settings;
    let model = restricted_model(&loaded.model, generator)?;
    let rho0 = parse_initial(initial, model.dim())?;
    let analysis = Analysis::new(&model)?;
    let cm = if generator == GeneratorArg::Full && !numeric_cm {
        loaded.analytic.cm_prime
    } else {
        None
    };
    let opts = CertifyOptions {
        eps_targets: vec![eps],
        cm_prime_override: cm,
        ..Default::default()
    };
    let cert = analysis.certificate(&model, &opts)?;
    let times = match grid {
        Some(g) => g.clone(),
        None => {
            let tmix = cert.tmix_for(eps).ok_or_else(|| {
                CliError::Usage("no certified mixing time to size the default grid; pass --grid".into())
            })?;
            default_time_grid(tmix, DEFAULT_GRID_POINTS)?
        }
    };
    let cert_ref = cert.passed.then_some(&cert);
    let trajectory = match picture {
        PictureArg::Heisenberg => heisenberg_decay(&analysis, cert_ref, &rho0, &times)?,
        PictureArg::Schrodinger => schrodinger_decay(&model, &analysis, cert_ref, &rho0, &times)?,
    };
    let mut horizon_hit = false;
    let mixing = (generator == GeneratorArg::Full).then(|| {
        empirical_mixing_time(&model, analysis.frame.sigma(), eps, &times, seed).map_err(|e| {
            horizon_hit = true;
            e.to_string()
        })
    });
    Ok(SimulationOutcome {
        certificate: cert,
        trajectory,
        mixing,
        horizon_hit,
    })
}

fn emit(out: Option<&PathBuf>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Write {
            path: path.clone(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Run a parsed command line and return the process exit code.
pub fn run(cli: Cli) -> i32 {
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> CliResult<i32> {
    match cli.command {
        Command::Certify { model, eps, out } => {
            let loaded = model.load()?;
            let cert = certify(&loaded.model, &model.options(&loaded.analytic, eps))?;
            let mut text = serde_json::to_string_pretty(&cert).map_err(hypomix::Error::from)?;
            text.push('\n');
            emit(out.as_ref(), &text)?;
            for f in &cert.failures {
                eprintln!("failed: {f}");
            }
            for w in &cert.warnings {
                eprintln!("warning: {w}");
            }
            Ok(if cert.passed { EXIT_PASS } else { EXIT_CONDITION })
        }
        Command::Sweep {
            model,
            param,
            grid,
            eps,
            workers,
            out,
        } => {
            let recipe = model
                .recipe()?
                .ok_or_else(|| CliError::Usage("sweep needs --recipe".into()))?;
            let grid = parse_grid(&grid)?;
            let rows = sweep_rows(&recipe, &param, &grid, eps, workers, model.numeric_cm)?;
            emit(out.as_ref(), &sweep_csv(&param, &rows))?;
            Ok(EXIT_PASS)
        }
        Command::Simulate {
            model,
            initial,
            picture,
            generator,
            eps,
            grid,
            seed,
            out,
        } => {
            let loaded = model.load()?;
            let settings = SimulationSettings {
                generator,
                picture,
                initial,
                eps,
                grid: grid.as_deref().map(parse_grid).transpose()?,
                seed,
                numeric_cm: model.numeric_cm,
            };
            let outcome = simulate(&loaded, &settings)?;
            emit(out.as_ref(), &outcome.trajectory.to_csv())?;
            eprintln!("{}", outcome.summary(eps));
            Ok(outcome.exit_code())
        }
    }
}
