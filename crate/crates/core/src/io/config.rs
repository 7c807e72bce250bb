//! TOML run configuration.
//!
//! A document names a `command`, a master `seed` and an `output_dir`, and
//! carries the command's parameters in a table of the same name:
//!
//! ```toml
//! command = "example33"
//! seed = 7
//! output_dir = "out/example33"
//!
//! [example33]
//! S = 3
//! eta = 1
//! gamma = 2
//! alpha = 0.5
//! beta = 0.5
//! ```
//!
//! Unknown keys are rejected. Integers are accepted wherever a float is expected.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::IoError;
use crate::activation::ActivationConfig;
use crate::bounds::{ClampMode, Convention};
use crate::experiments::{ComparisonStudy, DepthStudy, GapStudy};
use crate::rademacher::{SoftThresholdClassSpec, EXACT_MAX_S};
use crate::resnet::Integrator;
use crate::train::LossSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Catalog,
    Forward,
    Flow,
    Rademacher,
    Example33,
    Bounds,
    GapVsS,
    Depth,
    ActivationCompare,
    Convergence,
}

impl Command {
    pub const ALL: [Command; 10] = [
        Command::Catalog,
        Command::Forward,
        Command::Flow,
        Command::Rademacher,
        Command::Example33,
        Command::Bounds,
        Command::GapVsS,
        Command::Depth,
        Command::ActivationCompare,
        Command::Convergence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Catalog => "catalog",
            Command::Forward => "forward",
            Command::Flow => "flow",
            Command::Rademacher => "rademacher",
            Command::Example33 => "example33",
            Command::Bounds => "bounds",
            Command::GapVsS => "gap-vs-s",
            Command::Depth => "depth",
            Command::ActivationCompare => "activation-compare",
            Command::Convergence => "convergence",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }
}

fn default_x_min() -> f64 {
    -3.0
}
fn default_x_max() -> f64 {
    3.0
}
fn default_points() -> usize {
    121
}
fn default_random_inputs() -> usize {
    8
}
fn default_steps() -> usize {
    256
}
fn default_draws() -> usize {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogParams {
    /// Empty means every catalog entry with its default parameters.
    #[serde(default)]
    pub activations: Vec<ActivationConfig>,
    #[serde(default = "default_x_min")]
    pub x_min: f64,
    #[serde(default = "default_x_max")]
    pub x_max: f64,
    #[serde(default = "default_points")]
    pub points: usize,
}

/// Where a discrete network comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NetworkSource {
    /// Random parameters with `||Theta||_inf <= b_theta`, drawn from the master seed.
    Random { n_d: usize, n: usize, m: usize, layers: usize, horizon: f64, b_theta: f64 },
    /// Parameters from a `.json` or binary file.
    File { path: PathBuf },
}

/// Where a continuous parameter path comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PathSource {
    /// Random smooth path (Fourier modes) with sup and H^1 norms at most `bound`.
    Fourier { n_d: usize, n: usize, m: usize, horizon: f64, modes: usize, bound: f64 },
    /// Time-independent random parameters.
    Constant { n_d: usize, n: usize, m: usize, horizon: f64, bound: f64 },
    /// Piecewise-constant extension of a discrete network.
    Extend { network: NetworkSource },
}

/// Explicit inputs, or `random_inputs` points drawn uniformly from the unit ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSpec {
    #[serde(default)]
    pub inputs: Vec<Vec<f64>>,
    #[serde(default = "default_random_inputs")]
    pub random_inputs: usize,
}

impl Default for InputSpec {
    fn default() -> Self {
        Self { inputs: Vec::new(), random_inputs: default_random_inputs() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForwardParams {
    pub network: NetworkSource,
    pub activation: ActivationConfig,
    #[serde(default)]
    pub data: InputSpec,
    /// Also report the state bound `B_out^l` per layer (needs `b_in`).
    #[serde(default)]
    pub b_in: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowParams {
    pub path: PathSource,
    pub activation: ActivationConfig,
    #[serde(default)]
    pub data: InputSpec,
    pub integrator: Integrator,
    #[serde(default = "default_steps")]
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassSource {
    /// `values[j][s]`: function `j` evaluated on sample `s`.
    Explicit { values: Vec<Vec<f64>> },
    /// `functions` random functions with values uniform in `[-scale, scale]`.
    Random { functions: usize, samples: usize, scale: f64 },
    /// Output coordinate `coord` of `networks` random networks on `samples` random inputs.
    Network { n_d: usize, n: usize, m: usize, layers: usize, horizon: f64, b_theta: f64, networks: usize, samples: usize, coord: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorChoice {
    Exact,
    Mc,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RademacherParams {
    pub class: ClassSource,
    pub estimator: EstimatorChoice,
    #[serde(default = "default_draws")]
    pub draws: usize,
    /// Network activation for `network` classes, and the map checked by the contraction report.
    #[serde(default)]
    pub activation: Option<ActivationConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsParams {
    pub n: usize,
    pub n_d: usize,
    pub horizon: f64,
    pub layers: usize,
    #[serde(rename = "S")]
    pub s: usize,
    pub delta: f64,
    pub b_theta: f64,
    pub b_in: f64,
    pub activation: ActivationConfig,
    /// Derive `b_kappa`, `b_ell` from this loss when they are not given.
    #[serde(default)]
    pub loss: Option<LossSpec>,
    #[serde(default)]
    pub b_kappa: Option<f64>,
    #[serde(default)]
    pub b_ell: Option<f64>,
    /// Empty means all zero; one value is broadcast to every layer.
    #[serde(default)]
    pub c_slack: Vec<f64>,
    /// Slack for the continuous bound (defaults to the mean of `c_slack`).
    #[serde(default)]
    pub c_continuous: Option<f64>,
    pub convention: Convention,
    pub clamp: ClampMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceParams {
    pub path: PathSource,
    pub activation: ActivationConfig,
    #[serde(default)]
    pub data: InputSpec,
    #[serde(rename = "L_grid")]
    pub l_grid: Vec<usize>,
}

/// Command parameters, one variant per command.
#[derive(Debug, Clone, PartialEq)]
pub enum CommandParams {
    Catalog(CatalogParams),
    Forward(ForwardParams),
    Flow(FlowParams),
    Rademacher(RademacherParams),
    Example33(SoftThresholdClassSpec),
    Bounds(BoundsParams),
    GapVsS(GapStudy),
    Depth(DepthStudy),
    ActivationCompare(ComparisonStudy),
    Convergence(ConvergenceParams),
}

impl CommandParams {
    pub fn command(&self) -> Command {
        match self {
            CommandParams::Catalog(_) => Command::Catalog,
            CommandParams::Forward(_) => Command::Forward,
            CommandParams::Flow(_) => Command::Flow,
            CommandParams::Rademacher(_) => Command::Rademacher,
            CommandParams::Example33(_) => Command::Example33,
            CommandParams::Bounds(_) => Command::Bounds,
            CommandParams::GapVsS(_) => Command::GapVsS,
            CommandParams::Depth(_) => Command::Depth,
            CommandParams::ActivationCompare(_) => Command::ActivationCompare,
            CommandParams::Convergence(_) => Command::Convergence,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub params: CommandParams,
}

impl RunConfig {
    pub fn command(&self) -> Command {
        self.params.command()
    }
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    command: Option<Command>,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_output")]
    output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    catalog: Option<CatalogParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    forward: Option<ForwardParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    flow: Option<FlowParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rademacher: Option<RademacherParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    example33: Option<SoftThresholdClassSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bounds: Option<BoundsParams>,
    #[serde(default, rename = "gap-vs-s", skip_serializing_if = "Option::is_none")]
    gap_vs_s: Option<GapStudy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    depth: Option<DepthStudy>,
    #[serde(default, rename = "activation-compare", skip_serializing_if = "Option::is_none")]
    activation_compare: Option<ComparisonStudy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    convergence: Option<ConvergenceParams>,
}

impl RawConfig {
    fn tables(&self) -> Vec<Command> {
        let present = [
            self.catalog.is_some(),
            self.forward.is_some(),
            self.flow.is_some(),
            self.rademacher.is_some(),
            self.example33.is_some(),
            self.bounds.is_some(),
            self.gap_vs_s.is_some(),
            self.depth.is_some(),
            self.activation_compare.is_some(),
            self.convergence.is_some(),
        ];
        Command::ALL.into_iter().zip(present).filter(|(_, p)| *p).map(|(c, _)| c).collect()
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

fn invalid(key: impl Into<String>, message: impl Into<String>) -> IoError {
    IoError::Validation { key: key.into(), message: message.into() }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, IoError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| line_of(text, s.start)).unwrap_or(0);
        let msg = e.message().to_string();
        match unknown_key(&msg) {
            Some(key) => IoError::Validation { key, message: format!("unknown key (line {line}): {msg}") },
            None => IoError::Parse { line, message: msg },
        }
    })?;
    let command = raw.command.ok_or_else(|| invalid("command", "missing"))?;
    let tables = raw.tables();
    if let Some(other) = tables.iter().find(|&&c| c != command) {
        return Err(invalid(other.name(), format!("table does not belong to command `{}`", command.name())));
    }
    let missing = || invalid(command.name(), "parameter table is missing");
    let params = match command {
        Command::Catalog => CommandParams::Catalog(raw.catalog.ok_or_else(missing)?),
        Command::Forward => CommandParams::Forward(raw.forward.ok_or_else(missing)?),
        Command::Flow => CommandParams::Flow(raw.flow.ok_or_else(missing)?),
        Command::Rademacher => CommandParams::Rademacher(raw.rademacher.ok_or_else(missing)?),
        Command::Example33 => CommandParams::Example33(raw.example33.ok_or_else(missing)?),
        Command::Bounds => CommandParams::Bounds(raw.bounds.ok_or_else(missing)?),
        Command::GapVsS => CommandParams::GapVsS(raw.gap_vs_s.ok_or_else(missing)?),
        Command::Depth => CommandParams::Depth(raw.depth.ok_or_else(missing)?),
        Command::ActivationCompare => CommandParams::ActivationCompare(raw.activation_compare.ok_or_else(missing)?),
        Command::Convergence => CommandParams::Convergence(raw.convergence.ok_or_else(missing)?),
    };
    let cfg = RunConfig { seed: raw.seed, output_dir: raw.output_dir, params };
    validate(&cfg)?;
    Ok(cfg)
}

fn unknown_key(msg: &str) -> Option<String> {
    let rest = msg.strip_prefix("unknown field `")?;
    Some(rest[..rest.find('`')?].to_string())
}

/// Renders a configuration back to TOML; `parse_config(render(c)) == c`.
pub fn render_config(cfg: &RunConfig) -> Result<String, IoError> {
    let mut raw = RawConfig { command: Some(cfg.command()), seed: cfg.seed, output_dir: cfg.output_dir.clone(), ..Default::default() };
    match &cfg.params {
        CommandParams::Catalog(p) => raw.catalog = Some(p.clone()),
        CommandParams::Forward(p) => raw.forward = Some(p.clone()),
        CommandParams::Flow(p) => raw.flow = Some(p.clone()),
        CommandParams::Rademacher(p) => raw.rademacher = Some(p.clone()),
        CommandParams::Example33(p) => raw.example33 = Some(*p),
        CommandParams::Bounds(p) => raw.bounds = Some(p.clone()),
        CommandParams::GapVsS(p) => raw.gap_vs_s = Some(p.clone()),
        CommandParams::Depth(p) => raw.depth = Some(p.clone()),
        CommandParams::ActivationCompare(p) => raw.activation_compare = Some(p.clone()),
        CommandParams::Convergence(p) => raw.convergence = Some(p.clone()),
    }
    toml::to_string(&raw).map_err(|e| IoError::Serialize(e.to_string()))
}

fn check_activation(key: &str, a: &ActivationConfig) -> Result<(), IoError> {
    a.build().map(|_| ()).map_err(|e| invalid(format!("{key}.activation"), e.to_string()))
}

fn positive(key: &str, v: f64) -> Result<(), IoError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(key, format!("{v} must be positive and finite")))
    }
}

fn nonzero(key: &str, v: usize) -> Result<(), IoError> {
    if v > 0 {
        Ok(())
    } else {
        Err(invalid(key, "must be positive"))
    }
}

fn check_network(key: &str, n: &NetworkSource) -> Result<(), IoError> {
    match n {
        NetworkSource::Random { n_d, n, m, layers, horizon, b_theta } => {
            nonzero(&format!("{key}.n_d"), *n_d)?;
            nonzero(&format!("{key}.n"), *n)?;
            nonzero(&format!("{key}.m"), *m)?;
            nonzero(&format!("{key}.layers"), *layers)?;
            positive(&format!("{key}.horizon"), *horizon)?;
            positive(&format!("{key}.b_theta"), *b_theta)
        }
        NetworkSource::File { path } => {
            if path.exists() {
                Ok(())
            } else {
                Err(invalid(format!("{key}.path"), format!("{} does not exist", path.display())))
            }
        }
    }
}

fn check_path(key: &str, p: &PathSource) -> Result<(), IoError> {
    match p {
        PathSource::Fourier { n_d, n, m, horizon, bound, .. } | PathSource::Constant { n_d, n, m, horizon, bound } => {
            nonzero(&format!("{key}.n_d"), *n_d)?;
            nonzero(&format!("{key}.n"), *n)?;
            nonzero(&format!("{key}.m"), *m)?;
            positive(&format!("{key}.horizon"), *horizon)?;
            positive(&format!("{key}.bound"), *bound)
        }
        PathSource::Extend { network } => check_network(&format!("{key}.network"), network),
    }
}

fn check_inputs(key: &str, d: &InputSpec) -> Result<(), IoError> {
    if d.inputs.is_empty() && d.random_inputs == 0 {
        return Err(invalid(format!("{key}.random_inputs"), "need explicit inputs or random_inputs > 0"));
    }
    if d.inputs.iter().flatten().any(|x| !x.is_finite()) {
        return Err(invalid(format!("{key}.inputs"), "inputs must be finite"));
    }
    Ok(())
}

fn check_data(key: &str, data: &crate::experiments::DatasetSpec) -> Result<(), IoError> {
    if let crate::experiments::DataSource::MnistSubset { images, labels, .. } = &data.source {
        for p in [images, labels] {
            if !p.exists() {
                return Err(invalid(format!("{key}.source"), format!("IDX file {} not found", p.display())));
            }
        }
    }
    Ok(())
}

fn study_err(key: &str, e: crate::experiments::ExperimentError) -> IoError {
    invalid(key, e.to_string())
}

/// Range checks that serde cannot express. Errors name the offending key.
pub fn validate(cfg: &RunConfig) -> Result<(), IoError> {
    match &cfg.params {
        CommandParams::Catalog(p) => {
            for a in &p.activations {
                check_activation("catalog", a)?;
            }
            if !(p.x_min < p.x_max) || !p.x_min.is_finite() || !p.x_max.is_finite() {
                return Err(invalid("catalog.x_max", "need finite x_min < x_max"));
            }
            if p.points < 2 {
                return Err(invalid("catalog.points", "need at least 2 points"));
            }
        }
        CommandParams::Forward(p) => {
            check_network("forward.network", &p.network)?;
            check_activation("forward", &p.activation)?;
            check_inputs("forward.data", &p.data)?;
            if let Some(b) = p.b_in {
                positive("forward.b_in", b)?;
            }
        }
        CommandParams::Flow(p) => {
            check_path("flow.path", &p.path)?;
            check_activation("flow", &p.activation)?;
            check_inputs("flow.data", &p.data)?;
            nonzero("flow.steps", p.steps)?;
        }
        CommandParams::Rademacher(p) => {
            match &p.class {
                ClassSource::Explicit { values } => {
                    if values.is_empty() || values[0].is_empty() {
                        return Err(invalid("rademacher.class.values", "class must be nonempty"));
                    }
                }
                ClassSource::Random { functions, samples, scale } => {
                    nonzero("rademacher.class.functions", *functions)?;
                    nonzero("rademacher.class.samples", *samples)?;
                    positive("rademacher.class.scale", *scale)?;
                }
                ClassSource::Network { networks, samples, horizon, b_theta, n, coord, .. } => {
                    nonzero("rademacher.class.networks", *networks)?;
                    nonzero("rademacher.class.samples", *samples)?;
                    positive("rademacher.class.horizon", *horizon)?;
                    positive("rademacher.class.b_theta", *b_theta)?;
                    if coord >= n {
                        return Err(invalid("rademacher.class.coord", format!("{coord} >= n = {n}")));
                    }
                    if p.activation.is_none() {
                        return Err(invalid("rademacher.activation", "required for network classes"));
                    }
                }
            }
            let s = match &p.class {
                ClassSource::Explicit { values } => values[0].len(),
                ClassSource::Random { samples, .. } | ClassSource::Network { samples, .. } => *samples,
            };
            if p.estimator != EstimatorChoice::Mc && s > EXACT_MAX_S {
                return Err(invalid("rademacher.estimator", format!("exact enumeration needs S <= {EXACT_MAX_S}")));
            }
            if p.estimator != EstimatorChoice::Exact && p.draws < 100 {
                return Err(invalid("rademacher.draws", "need at least 100 draws"));
            }
            if let Some(a) = &p.activation {
                check_activation("rademacher", a)?;
            }
        }
        CommandParams::Example33(p) => {
            for (k, v) in [("eta", p.eta), ("gamma", p.gamma), ("alpha", p.alpha), ("beta", p.beta)] {
                positive(&format!("example33.{k}"), v)?;
            }
            if p.alpha.max(p.beta) >= p.gamma {
                return Err(invalid("example33.gamma", "need max(alpha, beta) < gamma"));
            }
            nonzero("example33.S", p.s)?;
            if p.s > 60 {
                return Err(invalid("example33.S", "S must be at most 60"));
            }
        }
        CommandParams::Bounds(p) => {
            if !(p.delta > 0.0 && p.delta < 1.0) {
                return Err(invalid("bounds.delta", format!("{} must lie in (0, 1)", p.delta)));
            }
            nonzero("bounds.n", p.n)?;
            nonzero("bounds.n_d", p.n_d)?;
            nonzero("bounds.layers", p.layers)?;
            nonzero("bounds.S", p.s)?;
            positive("bounds.horizon", p.horizon)?;
            positive("bounds.b_theta", p.b_theta)?;
            positive("bounds.b_in", p.b_in)?;
            check_activation("bounds", &p.activation)?;
            if p.loss.is_none() && (p.b_kappa.is_none() || p.b_ell.is_none()) {
                return Err(invalid("bounds.loss", "give a loss or both b_kappa and b_ell"));
            }
            if !(p.c_slack.len() <= 1 || p.c_slack.len() == p.layers) {
                return Err(invalid("bounds.c_slack", format!("need 0, 1 or {} values", p.layers)));
            }
        }
        CommandParams::GapVsS(p) => {
            p.validate().map_err(|e| study_err("gap-vs-s", e))?;
            check_data("gap-vs-s.data", &p.data)?;
        }
        CommandParams::Depth(p) => {
            p.validate().map_err(|e| study_err("depth", e))?;
            check_data("depth.data", &p.data)?;
        }
        CommandParams::ActivationCompare(p) => {
            p.validate().map_err(|e| study_err("activation-compare", e))?;
            check_data("activation-compare.data", &p.data)?;
        }
        CommandParams::Convergence(p) => {
            check_path("convergence.path", &p.path)?;
            check_activation("convergence", &p.activation)?;
            check_inputs("convergence.data", &p.data)?;
            if p.l_grid.len() < 4 {
                return Err(invalid("convergence.L_grid", "need at least 4 depths"));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const EX33: &str = "command = \"example33\"\n[example33]\nS = 3\neta = 1\ngamma = 2\nalpha = 0.5\nbeta = 0.5\n";

    #[test]
    fn minimal_example33() {
        let cfg = parse_config(EX33).unwrap();
        assert_eq!(cfg.command(), Command::Example33);
        assert_eq!(
            cfg.params,
            CommandParams::Example33(SoftThresholdClassSpec { eta: 1.0, gamma: 2.0, alpha: 0.5, beta: 0.5, s: 3 })
        );
        assert_eq!(parse_config(&render_config(&cfg).unwrap()).unwrap(), cfg);
    }

    #[test]
    fn misspelled_key_is_named() {
        let err = parse_config(&EX33.replace("gamma", "ghama")).unwrap_err();
        match err {
            IoError::Validation { key, .. } => assert_eq!(key, "ghama"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn parse_error_reports_line() {
        let err = parse_config("command = \"bounds\"\n\n[bounds\n").unwrap_err();
        assert!(matches!(err, IoError::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn delta_out_of_range() {
        let text = "command = \"bounds\"\n[bounds]\nn = 1\nn_d = 2\nhorizon = 1\nlayers = 4\nS = 100\ndelta = 1.5\n\
                    b_theta = 1\nb_in = 1\nb_kappa = 1\nb_ell = 1\nconvention = \"as-printed\"\nclamp = \"reject\"\n\
                    [bounds.activation]\nname = \"ReLU\"\n";
        match parse_config(text).unwrap_err() {
            IoError::Validation { key, .. } => assert_eq!(key, "bounds.delta"),
            e => panic!("{e}"),
        }
        assert!(parse_config(&text.replace("1.5", "0.05")).is_ok());
    }

    #[test]
    fn foreign_and_missing_tables() {
        assert!(parse_config("command = \"catalog\"\n[example33]\nS = 3\neta = 1\ngamma = 2\nalpha = 0.5\nbeta = 0.5\n").is_err());
        assert!(matches!(parse_config("command = \"catalog\"\n"), Err(IoError::Validation { .. })));
        assert!(parse_config("command = \"catalog\"\n[catalog]\n").is_ok());
        assert!(parse_config("command = \"dance\"\n").is_err());
    }
}
