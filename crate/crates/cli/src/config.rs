//! Run configuration: one TOML file, command-line overrides, and the
//! resolution step that turns it into library inputs.

use std::path::{Path, PathBuf};

use fracosc::constants::estimate_embedding_constant;
use fracosc::nonlinearity::{oscillation_diagnostics, FactorialOptions};
use fracosc::problem::WeightProfile;
use fracosc::solver::SolveConfig;
use fracosc::testfn::SamplingOrder;
use fracosc::{BumpNonlinearity, DomainSpec, Extended, Grid, LambdaInterval, Oscillation, ProblemParams, WeightSpec};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSection,
    pub nonlinearity: NonlinearitySection,
    pub grid: GridSection,
    pub solver: SolverSection,
    pub lemma: LemmaSection,
    pub constants: ConstantsSection,
    pub phi: PhiSection,
    pub probe: ProbeSection,
    pub output: OutputSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemSection {
    pub dim: usize,
    pub s: f64,
    pub p: f64,
    pub domain: DomainSpec,
    pub weight: WeightProfile,
    /// Lattice size used to bound a non-constant weight.
    pub weight_samples: usize,
    /// λ itself; takes precedence over `lambda_factor`.
    pub lambda: Option<f64>,
    /// λ as a multiple of the lower threshold λ₁.
    pub lambda_factor: Option<f64>,
}

impl Default for ProblemSection {
    fn default() -> Self {
        ProblemSection {
            dim: 1,
            s: 0.75,
            p: 2.0,
            domain: DomainSpec::interval(-1.0, 1.0),
            weight: WeightProfile::Constant { value: 1.0 },
            weight_samples: 4096,
            lambda: None,
            lambda_factor: Some(2.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Factorial,
    GeometricOrigin,
    Bumps,
    Zero,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NonlinearitySection {
    pub preset: Preset,
    pub k_max: usize,
    pub literal_profile: bool,
    pub log_domain: bool,
    pub ratio: f64,
    pub width: f64,
    pub mass_base: f64,
    pub mass_scale: f64,
    /// Explicit bumps for the `bumps` preset, in sequence order.
    pub intervals: Vec<[f64; 2]>,
    pub masses: Vec<f64>,
    pub toward: Oscillation,
}

impl Default for NonlinearitySection {
    fn default() -> Self {
        NonlinearitySection {
            preset: Preset::Factorial,
            k_max: 8,
            literal_profile: false,
            log_domain: false,
            ratio: 4.0,
            width: 0.5,
            mass_base: 4.0,
            mass_scale: 8.4375,
            intervals: Vec::new(),
            masses: Vec::new(),
            toward: Oscillation::Infinity,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    /// Interior nodes.
    pub n: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { n: 255 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMode {
    Multistart,
    Balls,
}

// flatten and deny_unknown_fields do not combine in serde
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSection {
    pub mode: SolveMode,
    /// Sup-norm caps c_j for the ball search; r_j = c_j^p/(K^p p).
    pub c_seq: Vec<f64>,
    #[serde(flatten)]
    pub config: SolveConfig,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection { mode: SolveMode::Multistart, c_seq: Vec::new(), config: SolveConfig::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LemmaSection {
    pub budget: u64,
    pub seed: u64,
    pub rel_tol: f64,
    pub order: SamplingOrder,
    /// Extra cone radii for the dilation check.
    pub tau_sweep: Vec<f64>,
}

impl Default for LemmaSection {
    fn default() -> Self {
        LemmaSection { budget: 1_000_000, seed: 0, rel_tol: 1e-2, order: SamplingOrder::XFirst, tau_sweep: Vec::new() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstantsSection {
    /// Use this K instead of the grid estimate.
    pub k: Option<f64>,
    /// Values of s for a sweep table.
    pub s_sweep: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhiSection {
    pub radii: Vec<f64>,
}

impl Default for PhiSection {
    fn default() -> Self {
        PhiSection { radii: vec![0.1, 1.0, 10.0, 100.0] }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeSection {
    /// Amplitudes ζ; empty means the right end of every bump.
    pub zetas: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: PathBuf::from("out") }
    }
}

/// Command-line overrides, applied after the file is read.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub lambda: Option<f64>,
    pub seed: Option<u64>,
    pub budget: Option<u64>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    /// Reads a config file. A run manifest is accepted too: its `config`
    /// table is the resolved configuration of that run.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let value: toml::Table = toml::from_str(text).map_err(|e| e.to_string())?;
        match value.get("config") {
            Some(toml::Value::Table(inner)) if value.contains_key("run") => {
                inner.clone().try_into().map_err(|e: toml::de::Error| e.to_string())
            }
            _ => toml::from_str(text).map_err(|e| e.to_string()),
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(l) = o.lambda {
            self.problem.lambda = Some(l);
        }
        if let Some(s) = o.seed {
            self.solver.config.seed = s;
            self.lemma.seed = s;
        }
        if let Some(b) = o.budget {
            self.lemma.budget = b;
        }
        if let Some(d) = &o.out {
            self.output.dir = d.clone();
        }
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Validation(format!("cannot serialize config: {e}")))
    }
}

/// Everything a subcommand needs, validated before any heavy computation.
pub struct Resolved {
    pub params: ProblemParams,
    pub nl: BumpNonlinearity,
    pub grid: Option<Grid>,
    pub a_l: f64,
    pub b_l: Extended,
    /// Where A_L and B_L came from.
    pub limits_source: &'static str,
}

pub fn build_nonlinearity(sec: &NonlinearitySection, p: f64) -> Result<BumpNonlinearity, CliError> {
    let nl = match sec.preset {
        Preset::Factorial => {
            if sec.k_max == 0 {
                return Err(CliError::Validation("k_max must be at least 1".into()));
            }
            let opts = FactorialOptions { literal_profile: sec.literal_profile, log_domain: sec.log_domain };
            BumpNonlinearity::factorial_with(p, sec.k_max, opts)?
        }
        Preset::GeometricOrigin => {
            BumpNonlinearity::geometric_origin(p, sec.k_max, sec.ratio, sec.width, sec.mass_base, sec.mass_scale)?
        }
        Preset::Bumps => {
            let iv: Vec<(f64, f64)> = sec.intervals.iter().map(|x| (x[0], x[1])).collect();
            BumpNonlinearity::from_intervals(&iv, &sec.masses, sec.toward)?
        }
        Preset::Zero => BumpNonlinearity::zero(),
    };
    Ok(nl)
}

impl Resolved {
    /// Validates the problem and builds the nonlinearity; λ is resolved
    /// later because `lambda_factor` needs λ₁.
    pub fn new(cfg: &RunConfig, with_grid: bool) -> Result<Self, CliError> {
        let pb = &cfg.problem;
        let weight = WeightSpec::sampled(pb.weight.clone(), &pb.domain, pb.weight_samples)?;
        let params = ProblemParams::new(pb.dim, pb.s, pb.p, pb.domain.clone(), weight, 0.0)?;
        let nl = build_nonlinearity(&cfg.nonlinearity, pb.p)?;
        let (a_l, b_l, limits_source) = match (&nl.analytic, nl.len()) {
            (Some(lim), _) => (lim.a_l, lim.b_l, "analytic"),
            (None, 0) => (0.0, Extended::Finite(0.0), "f = 0"),
            (None, _) => {
                let d = oscillation_diagnostics(&nl, pb.p, nl.toward)?;
                (d.a_l_estimate, Extended::Finite(d.b_l_estimate), "bump-endpoint estimate")
            }
        };
        let grid = if with_grid {
            if pb.dim != 1 {
                return Err(CliError::Validation(format!(
                    "the grid solver is one-dimensional; N = {} is only supported by constants and verify-lemma",
                    pb.dim
                )));
            }
            Some(Grid::for_params(&params, cfg.grid.n)?)
        } else {
            None
        };
        Ok(Resolved { params, nl, grid, a_l, b_l, limits_source })
    }

    /// K from the config, else the discrete estimate on the grid.
    pub fn embedding(&self, cfg: &RunConfig) -> Result<(f64, Option<usize>, bool), CliError> {
        if let Some(k) = cfg.constants.k {
            if !(k > 0.0 && k.is_finite()) {
                return Err(CliError::Validation(format!("constants.k must be positive, got {k}")));
            }
            return Ok((k, None, true));
        }
        let grid = match &self.grid {
            Some(g) => g.clone(),
            None => {
                if self.params.dim != 1 {
                    return Err(CliError::Validation(format!(
                        "K can only be estimated for N = 1; set constants.k for N = {}",
                        self.params.dim
                    )));
                }
                Grid::for_params(&self.params, cfg.grid.n)?
            }
        };
        let est = estimate_embedding_constant(&grid, &self.params)?;
        Ok((est.k_est, Some(grid.n), est.converged))
    }

    pub fn interval(&self, k: f64) -> Result<LambdaInterval, CliError> {
        Ok(fracosc::constants::lambda_interval(&self.params, self.a_l, self.b_l, k)?)
    }

    /// Fixes λ: an explicit value wins, else `lambda_factor`·λ₁.
    pub fn set_lambda(&mut self, cfg: &RunConfig, iv: &LambdaInterval) -> Result<f64, CliError> {
        let lambda = match (cfg.problem.lambda, cfg.problem.lambda_factor) {
            (Some(l), _) => l,
            (None, Some(f)) => match iv.lambda1 {
                Extended::Finite(l1) => f * l1,
                Extended::Infinite => {
                    return Err(CliError::Validation(
                        "λ₁ = ∞ (B_L = 0), so lambda_factor is meaningless; give problem.lambda".into(),
                    ))
                }
            },
            (None, None) => 0.0,
        };
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(CliError::Validation(format!("λ must be finite and nonnegative, got {lambda}")));
        }
        self.params = self.params.with_lambda(lambda);
        Ok(lambda)
    }
}
