//! Command dispatcher: runs a validated [`RunConfig`] and writes its results.

use nalgebra::DVector;
use num_traits::{One, Zero};
use rand::Rng;
use rand_distr::StandardNormal;
use serde_json::json;
use thiserror::Error;

use super::config::{
    validate, ClassSource, CommandParams, EstimatorChoice, InputSpec, NetworkSource, PathSource, RunConfig,
};
use super::results::{write_results, Cell, Manifest, Table};
use super::IoError;
use crate::activation::{catalog, ActivationKind, ActivationSpec};
use crate::bounds::{
    continuous_bound, depth_envelope, discrete_bound, layered_recursion, loss_constants, BoundInputs,
};
use crate::experiments::{
    activation_comparison, convergence_rate_study, depth_refinement, gap_vs_samples, ComparisonReport,
    DatasetSpec, DepthReport, GapReport,
};
use crate::rademacher::{
    binomial, contraction_check, example33_bruteforce, example33_closed_form, example33_closed_form_exact,
    hypothesis_class_eval, rademacher_exact, rademacher_mc, EvaluatedClass, BRUTEFORCE_MAX_S,
};
use crate::resnet::{
    continuous_flow, discrete_forward, extend_params, read_binary, read_json, state_bound, ContinuousParams,
    DiscreteParams, Dims, FourierPath, LayerParams, ParamBudget, ParamPath, PreprocessParams,
};
use crate::seed::{derive_seed, rng_for};

/// Failures split by exit status: invalid input (1) or failed execution (2).
#[derive(Debug, Error)]
pub enum CommandError {
    #[error("{0}")]
    Invalid(IoError),
    #[error("{0}")]
    Runtime(String),
}

impl CommandError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Invalid(_) => 1,
            CommandError::Runtime(_) => 2,
        }
    }
}

fn rt(e: impl std::fmt::Display) -> CommandError {
    CommandError::Runtime(e.to_string())
}

const STREAM_NETWORK: u64 = 1;
const STREAM_INPUTS: u64 = 2;
const STREAM_CLASS: u64 = 3;
const STREAM_MC: u64 = 4;

fn build_activation(cfg: &crate::activation::ActivationConfig) -> Result<ActivationSpec, CommandError> {
    cfg.build().map_err(rt)
}

fn build_network(src: &NetworkSource, seed: u64) -> Result<DiscreteParams, CommandError> {
    match src {
        NetworkSource::Random { n_d, n, m, layers, horizon, b_theta } => {
            let dims = Dims::new(*n_d, *n, *m).map_err(rt)?;
            DiscreteParams::random(dims, *layers, *horizon, *b_theta, &mut rng_for(seed, &[STREAM_NETWORK])).map_err(rt)
        }
        NetworkSource::File { path } => {
            let bytes = std::fs::read(path).map_err(|e| rt(format!("{}: {e}", path.display())))?;
            if path.extension().is_some_and(|x| x == "json") {
                read_json(&String::from_utf8_lossy(&bytes)).map_err(rt)
            } else {
                read_binary(&bytes).map_err(rt)
            }
        }
    }
}

fn build_path(src: &PathSource, seed: u64) -> Result<ContinuousParams, CommandError> {
    let mut rng = rng_for(seed, &[STREAM_NETWORK]);
    match src {
        PathSource::Fourier { n_d, n, m, horizon, modes, bound } => {
            let dims = Dims::new(*n_d, *n, *m).map_err(rt)?;
            let pre = PreprocessParams::random(dims, *bound, &mut rng);
            let fp = FourierPath::random(dims, *modes, *bound, *horizon, &mut rng);
            ContinuousParams::new(pre, ParamPath::Fourier(fp), *horizon).map_err(rt)
        }
        PathSource::Constant { n_d, n, m, horizon, bound } => {
            let dims = Dims::new(*n_d, *n, *m).map_err(rt)?;
            let pre = PreprocessParams::random(dims, *bound, &mut rng);
            let layer = LayerParams::random(*n, *m, *bound, &mut rng);
            ContinuousParams::new(pre, ParamPath::Constant(layer), *horizon).map_err(rt)
        }
        PathSource::Extend { network } => Ok(extend_params(&build_network(network, seed)?)),
    }
}

fn unit_ball_point<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DVector<f64> {
    loop {
        let dir = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = dir.norm();
        if n > 1e-12 {
            return dir * (rng.random::<f64>().powf(1.0 / dim as f64) / n);
        }
    }
}

fn build_inputs(spec: &InputSpec, n_d: usize, seed: u64) -> Result<Vec<DVector<f64>>, CommandError> {
    if !spec.inputs.is_empty() {
        if let Some(bad) = spec.inputs.iter().find(|v| v.len() != n_d) {
            return Err(rt(format!("input of length {} but the network expects {n_d}", bad.len())));
        }
        return Ok(spec.inputs.iter().map(|v| DVector::from_vec(v.clone())).collect());
    }
    let mut rng = rng_for(seed, &[STREAM_INPUTS]);
    Ok((0..spec.random_inputs).map(|_| unit_ball_point(n_d, &mut rng)).collect())
}

fn state_header(prefix: &[&str], n: usize, suffix: &[&str]) -> Vec<String> {
    prefix
        .iter()
        .map(|s| s.to_string())
        .chain((0..n).map(|i| format!("x{i}")))
        .chain(suffix.iter().map(|s| s.to_string()))
        .collect()
}

fn json_f(v: f64) -> serde_json::Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(super::results::format_float(v))
    }
}

fn panel(name: &str, x: &[f64], y: &[f64]) -> Table {
    let mut t = Table::new(name, &["x", "y"]);
    for (a, b) in x.iter().zip(y) {
        t.push(vec![(*a).into(), (*b).into()]);
    }
    t
}

/// Validates `cfg`, runs its command and writes results into `cfg.output_dir`.
pub fn run_command(cfg: &RunConfig) -> Result<Manifest, CommandError> {
    validate(cfg).map_err(CommandError::Invalid)?;
    let (tables, summary) = execute(cfg)?;
    let mut summary = summary;
    summary["command"] = json!(cfg.command().name());
    summary["seed"] = json!(cfg.seed);
    write_results(&tables, &summary, &cfg.output_dir).map_err(rt)
}

/// Runs the command and returns its tables and summary without touching disk.
pub fn execute(cfg: &RunConfig) -> Result<(Vec<Table>, serde_json::Value), CommandError> {
    let seed = cfg.seed;
    match &cfg.params {
        CommandParams::Catalog(p) => {
            let specs: Vec<ActivationSpec> = if p.activations.is_empty() {
                ActivationKind::ALL.iter().map(|k| catalog(k.name(), &k.default_params())).collect::<Result<_, _>>().map_err(rt)?
            } else {
                p.activations.iter().map(build_activation).collect::<Result<_, _>>()?
            };
            let mut entries = Table::new("catalog", &["name", "params", "alpha", "beta", "lip", "structural_coefficient"]);
            let mut values = Table::new("values", &["name", "x", "psi", "dpsi"]);
            for s in &specs {
                let params = s.params.iter().map(|v| super::results::format_float(*v)).collect::<Vec<_>>().join(" ");
                entries.push(vec![
                    s.name().into(),
                    params.into(),
                    s.alpha.into(),
                    s.beta.into(),
                    s.lip().into(),
                    s.structural_coefficient().into(),
                ]);
                for i in 0..p.points {
                    let x = p.x_min + (p.x_max - p.x_min) * i as f64 / (p.points - 1) as f64;
                    values.push(vec![s.name().into(), x.into(), s.eval(x).into(), s.deriv(x).into()]);
                }
            }
            Ok((vec![entries, values], json!({ "activations": specs.len() })))
        }
        CommandParams::Forward(p) => {
            let net = build_network(&p.network, seed)?;
            let act = build_activation(&p.activation)?;
            let dims = net.dims();
            let inputs = build_inputs(&p.data, dims.n_d, seed)?;
            let budget = match p.b_in {
                Some(b_in) => Some(ParamBudget::new(net.inf_norm().max(f64::MIN_POSITIVE), b_in).map_err(rt)?),
                None => None,
            };
            let mut t = Table::new("trajectory", &[]);
            t.header = state_header(&["input", "layer", "time"], dims.n, &["inf_norm", "state_bound"]);
            let l_total = net.num_layers();
            let mut worst_ratio = 0.0f64;
            for (k, d) in inputs.iter().enumerate() {
                let tr = discrete_forward(&net, &act, d).map_err(rt)?;
                for (l, (x, time)) in tr.states.iter().zip(&tr.times).enumerate() {
                    let bound = budget.map_or(f64::NAN, |b| state_bound(&b, &act, net.horizon(), l as f64 / l_total as f64));
                    let nx = x.amax();
                    if bound.is_finite() {
                        worst_ratio = worst_ratio.max(nx / bound);
                    }
                    let mut row: Vec<Cell> = vec![k.into(), l.into(), (*time).into()];
                    row.extend(x.iter().map(|v| Cell::from(*v)));
                    row.push(nx.into());
                    row.push(bound.into());
                    t.push(row);
                }
            }
            Ok((
                vec![t],
                json!({
                    "layers": l_total,
                    "inputs": inputs.len(),
                    "param_inf_norm": net.inf_norm(),
                    "max_state_over_bound": if budget.is_some() { json_f(worst_ratio) } else { serde_json::Value::Null },
                }),
            ))
        }
        CommandParams::Flow(p) => {
            let path = build_path(&p.path, seed)?;
            let act = build_activation(&p.activation)?;
            let dims = path.dims();
            let inputs = build_inputs(&p.data, dims.n_d, seed)?;
            let mut t = Table::new("flow", &[]);
            t.header = state_header(&["input", "step", "time"], dims.n, &[]);
            let mut finals = Vec::new();
            for (k, d) in inputs.iter().enumerate() {
                let tr = continuous_flow(&path, &act, d, p.integrator, p.steps).map_err(rt)?;
                for (i, (x, time)) in tr.states.iter().zip(&tr.times).enumerate() {
                    let mut row: Vec<Cell> = vec![k.into(), i.into(), (*time).into()];
                    row.extend(x.iter().map(|v| Cell::from(*v)));
                    t.push(row);
                }
                finals.push(tr.last().iter().copied().map(json_f).collect::<Vec<_>>());
            }
            Ok((vec![t], json!({ "steps": p.steps, "integrator": p.integrator, "final_states": finals })))
        }
        CommandParams::Rademacher(p) => {
            let act = p.activation.as_ref().map(build_activation).transpose()?;
            let cls = match &p.class {
                ClassSource::Explicit { values } => EvaluatedClass::new(values.clone()).map_err(rt)?,
                ClassSource::Random { functions, samples, scale } => {
                    let mut rng = rng_for(seed, &[STREAM_CLASS]);
                    let values =
                        (0..*functions).map(|_| (0..*samples).map(|_| rng.random_range(-*scale..=*scale)).collect()).collect();
                    EvaluatedClass::new(values).map_err(rt)?
                }
                ClassSource::Network { n_d, n, m, layers, horizon, b_theta, networks, samples, coord } => {
                    let dims = Dims::new(*n_d, *n, *m).map_err(rt)?;
                    let mut rng = rng_for(seed, &[STREAM_CLASS]);
                    let grid: Vec<DiscreteParams> = (0..*networks)
                        .map(|_| DiscreteParams::random(dims, *layers, *horizon, *b_theta, &mut rng))
                        .collect::<Result<_, _>>()
                        .map_err(rt)?;
                    let data: Vec<DVector<f64>> = (0..*samples).map(|_| unit_ball_point(*n_d, &mut rng)).collect();
                    hypothesis_class_eval(&grid, act.as_ref().expect("validated"), *coord, &data).map_err(rt)?
                }
            };
            let mut t = Table::new("estimates", &["class", "estimator", "value", "draws", "half_width"]);
            let mut push_estimates = |label: &str, c: &EvaluatedClass| -> Result<(), CommandError> {
                if p.estimator != EstimatorChoice::Mc {
                    let e = rademacher_exact(c).map_err(rt)?;
                    t.push(vec![label.into(), "exact".into(), e.value.into(), e.draws.into(), e.half_width.into()]);
                }
                if p.estimator != EstimatorChoice::Exact {
                    let e = rademacher_mc(c, p.draws, derive_seed(seed, &[STREAM_MC])).map_err(rt)?;
                    t.push(vec![label.into(), "monte_carlo".into(), e.value.into(), e.draws.into(), e.half_width.into()]);
                }
                Ok(())
            };
            push_estimates("G", &cls)?;
            let mut summary = json!({ "functions": cls.num_functions(), "samples": cls.num_samples() });
            if let Some(a) = &act {
                push_estimates("psi_G", &cls.map_activation(a))?;
                if p.estimator != EstimatorChoice::Mc {
                    let r = contraction_check(&cls, a).map_err(rt)?;
                    summary["contraction"] = serde_json::to_value(r).map_err(rt)?;
                }
            }
            Ok((vec![t], summary))
        }
        CommandParams::Example33(spec) => {
            let closed = example33_closed_form(spec).map_err(rt)?;
            let brute = if spec.s <= BRUTEFORCE_MAX_S { Some(example33_bruteforce(spec).map_err(rt)?) } else { None };
            let (r_g, r_psi) = example33_closed_form_exact(spec).map_err(rt)?;
            let q = |x: f64| num_rational::BigRational::from_float(x).expect("finite");
            let lip = q(spec.activation().lip());
            let binom = num_rational::BigRational::from_integer(binomial(spec.s as u64 - 1, spec.s as u64 / 2).into());
            let two_s = num_rational::BigRational::from_integer(num_bigint::BigInt::one() << spec.s);
            let rhs = (q(spec.alpha) + q(spec.beta)) * binom / two_s;
            let lhs = &lip * &r_g - &r_psi;
            let mut t = Table::new("example33", &["S", "quantity", "closed_form", "brute_force"]);
            t.push(vec![spec.s.into(), "r_g".into(), closed.r_g.into(), brute.map_or(f64::NAN, |b| b.r_g).into()]);
            t.push(vec![spec.s.into(), "r_psi_g".into(), closed.r_psi_g.into(), brute.map_or(f64::NAN, |b| b.r_psi_g).into()]);
            Ok((
                vec![t],
                json!({
                    "r_g": closed.r_g,
                    "r_psi_g": closed.r_psi_g,
                    "bruteforce_checked": brute.is_some(),
                    "identity_exact": lhs == rhs && !rhs.is_zero(),
                    "identity_lhs": lhs.to_string(),
                    "identity_rhs": rhs.to_string(),
                }),
            ))
        }
        CommandParams::Bounds(p) => {
            let act = build_activation(&p.activation)?;
            let budget = ParamBudget::new(p.b_theta, p.b_in).map_err(rt)?;
            let (b_ell, b_kappa) = match (p.b_ell, p.b_kappa, &p.loss) {
                (Some(l), Some(k), _) => (l, k),
                (_, _, Some(loss)) => loss_constants(loss, p.n, &budget, &act, p.horizon),
                _ => unreachable!("validated"),
            };
            let c_slack = match p.c_slack.len() {
                0 => vec![0.0; p.layers],
                1 => vec![p.c_slack[0]; p.layers],
                _ => p.c_slack.clone(),
            };
            let c_cont = p.c_continuous.unwrap_or(c_slack.iter().sum::<f64>() / p.layers as f64);
            let mut inputs = BoundInputs {
                n: p.n,
                n_d: p.n_d,
                horizon: p.horizon,
                layers: p.layers,
                s: p.s,
                delta: p.delta,
                budget,
                act,
                b_kappa,
                b_ell,
                c_slack,
            };
            let disc = discrete_bound(&inputs, p.clamp).map_err(rt)?;
            let rec = layered_recursion(&inputs, p.clamp).map_err(rt)?;
            let envelope = depth_envelope(&inputs);
            let slack = std::mem::replace(&mut inputs.c_slack, vec![c_cont]);
            let cont = continuous_bound(&inputs, p.convention, p.clamp).map_err(rt)?;
            inputs.c_slack = slack;
            let mut t = Table::new("bounds", &["kind", "leading", "concentration", "structural", "total", "m_factor"]);
            for (k, r) in [("discrete", disc), ("continuous", cont)] {
                t.push(vec![k.into(), r.leading.into(), r.concentration.into(), r.structural.into(), r.total.into(), r.m_factor.into()]);
            }
            let mut rt_ = Table::new("recursion", &["layer", "R", "envelope"]);
            for (l, r) in rec.iter().enumerate() {
                rt_.push(vec![l.into(), (*r).into(), envelope.into()]);
            }
            Ok((
                vec![t, rt_],
                json!({ "b_kappa": b_kappa, "b_ell": b_ell, "discrete": disc, "continuous": cont, "convention": p.convention }),
            ))
        }
        CommandParams::GapVsS(study) => {
            let mut study = study.clone();
            study.data = reseed(&study.data, seed);
            let report = gap_vs_samples(&study).map_err(rt)?;
            Ok(gap_tables(&report))
        }
        CommandParams::Depth(study) => {
            let mut study = study.clone();
            study.data = reseed(&study.data, seed);
            let report = depth_refinement(&study).map_err(rt)?;
            Ok(depth_tables(&report))
        }
        CommandParams::ActivationCompare(study) => {
            let mut study = study.clone();
            study.data = reseed(&study.data, seed);
            let report = activation_comparison(&study).map_err(rt)?;
            Ok(compare_tables(&report))
        }
        CommandParams::Convergence(p) => {
            let path = build_path(&p.path, seed)?;
            let act = build_activation(&p.activation)?;
            let inputs = build_inputs(&p.data, path.dims().n_d, seed)?;
            let r = convergence_rate_study(&path, &act, &inputs, &p.l_grid).map_err(rt)?;
            let taus: Vec<f64> = r.l_grid.iter().map(|&l| path.horizon() / l as f64).collect();
            let mut t = Table::new("errors", &["L", "tau", "error"]);
            for ((l, tau), e) in r.l_grid.iter().zip(&taus).zip(&r.errors) {
                t.push(vec![(*l).into(), (*tau).into(), (*e).into()]);
            }
            let pl = panel("panel_error_vs_tau", &taus, &r.errors);
            Ok((
                vec![t, pl],
                json!({
                    "slope": r.slope.map(json_f),
                    "slope_skipped": r.slope_skipped,
                    "strictly_decreasing": r.strictly_decreasing,
                }),
            ))
        }
    }
}

/// Folds the master seed into the dataset seed.
fn reseed(data: &DatasetSpec, master: u64) -> DatasetSpec {
    let mut d = data.clone();
    d.seed = derive_seed(master, &[data.seed]);
    d
}

pub fn gap_tables(report: &GapReport) -> (Vec<Table>, serde_json::Value) {
    let mut rec = Table::new("records", &["T", "L", "S", "seed", "train_loss", "test_loss", "gap", "status"]);
    for r in &report.records {
        rec.push(vec![
            r.arch.horizon.into(),
            r.arch.layers.into(),
            r.s.into(),
            r.seed.into(),
            r.train_loss.into(),
            r.test_loss.into(),
            r.gap.into(),
            "ok".into(),
        ]);
    }
    for x in &report.exclusions {
        rec.push(vec![
            x.arch.horizon.into(),
            x.arch.layers.into(),
            x.s.into(),
            x.seed.into(),
            f64::NAN.into(),
            f64::NAN.into(),
            f64::NAN.into(),
            "excluded".into(),
        ]);
    }
    let mut fits = Table::new(
        "fits",
        &["T", "L", "mu", "r_squared", "residual_rms", "spearman", "loglog_slope", "decreasing_pairs"],
    );
    let mut tables = Vec::new();
    let xs: Vec<f64> = report.s_grid.iter().map(|&s| s as f64).collect();
    for (i, f) in report.fits.iter().enumerate() {
        let (mu, r2, rms) = f.fit.map_or((f64::NAN, f64::NAN, f64::NAN), |r| (r.mu, r.r_squared, r.residual_rms));
        fits.push(vec![
            f.arch.horizon.into(),
            f.arch.layers.into(),
            mu.into(),
            r2.into(),
            rms.into(),
            f.spearman.into(),
            f.loglog_slope.unwrap_or(f64::NAN).into(),
            f.decreasing_pairs.into(),
        ]);
        tables.push(panel(&format!("panel_gap_arch{i}"), &xs, &f.mean_gaps));
        let curve: Vec<f64> = xs.iter().map(|s| mu / s.sqrt()).collect();
        tables.push(panel(&format!("panel_fit_arch{i}"), &xs, &curve));
    }
    let summary = json!({
        "records": report.records.len(),
        "excluded": report.exclusions.len(),
        "nan_rows": report.exclusions.len(),
        "exclusions": report.exclusions,
        "fits": report.fits.iter().map(|f| json!({
            "T": f.arch.horizon,
            "L": f.arch.layers,
            "mu": f.fit.map(|r| json_f(r.mu)),
            "r_squared": f.fit.map(|r| json_f(r.r_squared)),
            "spearman": json_f(f.spearman),
            "decreasing_pairs": f.decreasing_pairs,
            "mean_gaps": f.mean_gaps.iter().copied().map(json_f).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
    });
    let mut out = vec![rec, fits];
    out.extend(tables);
    (out, summary)
}

pub fn depth_tables(report: &DepthReport) -> (Vec<Table>, serde_json::Value) {
    let mut runs = Table::new("runs", &["L", "seed", "final_train_loss", "final_test_loss"]);
    let mut curves = Table::new("curves", &["L", "seed", "epoch", "train_loss", "test_loss"]);
    for r in &report.runs {
        runs.push(vec![r.layers.into(), r.seed.into(), r.final_train_loss.into(), r.final_test_loss.into()]);
        for (e, (a, b)) in r.train_curve.iter().zip(&r.test_curve).enumerate() {
            curves.push(vec![r.layers.into(), r.seed.into(), e.into(), (*a).into(), (*b).into()]);
        }
    }
    let mut per_l = Table::new("depth", &["L", "mean_final_train", "mean_final_test", "init_forward_error"]);
    for (i, &l) in report.l_grid.iter().enumerate() {
        per_l.push(vec![
            l.into(),
            report.mean_final_train[i].into(),
            report.mean_final_test[i].into(),
            report.init_forward_errors[i].into(),
        ]);
    }
    let xs: Vec<f64> = report.l_grid.iter().map(|&l| l as f64).collect();
    let p1 = panel("panel_train_vs_L", &xs, &report.mean_final_train);
    let p2 = panel("panel_test_vs_L", &xs, &report.mean_final_test);
    let f = |v: &[f64]| v.iter().copied().map(json_f).collect::<Vec<_>>();
    let summary = json!({
        "horizon": report.horizon,
        "L_grid": report.l_grid,
        "train_diffs": f(&report.train_diffs),
        "test_diffs": f(&report.test_diffs),
        "shrinking_pairs": report.shrinking_pairs,
        "total_pairs": report.total_pairs,
        "strict_chain": report.strict_chain,
        "excluded": report.exclusions.len(),
        "exclusions": report.exclusions,
    });
    (vec![runs, curves, per_l, p1, p2], summary)
}

pub fn compare_tables(report: &ComparisonReport) -> (Vec<Table>, serde_json::Value) {
    let mut curves = Table::new("curves", &["arm", "T", "L", "seed", "epoch", "train_loss", "test_loss", "gap", "alpha", "beta"]);
    for c in &report.curves {
        curves.push(vec![
            c.arm.clone().into(),
            c.arch.horizon.into(),
            c.arch.layers.into(),
            c.seed.into(),
            c.epoch.into(),
            c.train_loss.into(),
            c.test_loss.into(),
            c.gap.into(),
            c.alpha.into(),
            c.beta.into(),
        ]);
    }
    let mut sums = Table::new("arms", &["arm", "T", "L", "runs", "late_mean_train", "late_mean_test", "late_mean_gap"]);
    for s in &report.summaries {
        sums.push(vec![
            s.arm.clone().into(),
            s.arch.horizon.into(),
            s.arch.layers.into(),
            s.runs.into(),
            s.late_mean_train.into(),
            s.late_mean_test.into(),
            s.late_mean_gap.into(),
        ]);
    }
    let summary = json!({
        "arms": report.summaries.iter().map(|s| json!({
            "arm": s.arm, "T": s.arch.horizon, "L": s.arch.layers, "runs": s.runs,
            "late_mean_gap": json_f(s.late_mean_gap),
        })).collect::<Vec<_>>(),
        "excluded": report.exclusions.len(),
    });
    (vec![curves, sums], summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::config::parse_config;

    #[test]
    fn validation_and_runtime_errors_map_to_exit_codes() {
        let mut cfg = parse_config("command = \"catalog\"\n[catalog]\n").unwrap();
        let CommandParams::Catalog(p) = &mut cfg.params else { unreachable!() };
        p.points = 1;
        assert_eq!(run_command(&cfg).unwrap_err().exit_code(), 1);
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("f");
        std::fs::write(&blocker, b"x").unwrap();
        let mut cfg = parse_config("command = \"catalog\"\n[catalog]\n").unwrap();
        cfg.output_dir = blocker.join("sub");
        assert_eq!(run_command(&cfg).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn example33_reports_exact_identity() {
        let cfg = parse_config("command = \"example33\"\n[example33]\nS = 7\neta = 1\ngamma = 2\nalpha = 0.5\nbeta = 0.25\n").unwrap();
        let (tables, summary) = execute(&cfg).unwrap();
        assert_eq!(summary["identity_exact"], true);
        assert_eq!(tables[0].rows.len(), 2);
    }
}
