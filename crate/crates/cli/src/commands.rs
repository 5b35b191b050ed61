//! The three subcommands: option resolution, evaluation and report writing.

use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;
use xmeter_core::attribution::{
    attribute, integrated_gradients, AttributionVector, Method, DEFAULT_IG_STEPS,
};
use xmeter_core::bench::{
    clustered_benchmark, fit_decision_tree, park_model, synth_tabular, token_benchmark_with,
    LinearSoftmax, SynthConfig, TokenConfig,
};
use xmeter_core::examples::{
    evaluate_selector, metrics_vs_n, Distance, ExampleConfig, KernelConfig, PairCounting, Selector,
};
use xmeter_core::metrics::{
    attribution_report, perturbation_test, ExpectationConfig, DEFAULT_EPSILON, DEFAULT_MC_SAMPLES,
    DEFAULT_ZERO_TOLERANCE,
};
use xmeter_core::mi::{extractor_study_with_target, model_target, StudyConfig, Variable};
use xmeter_core::{
    FeatureDistribution, LossFunction, MetricReport, Model, OutputKind, Sampler, TabularDataset,
};

use crate::args::{
    AttrEvalOptions, Command, ExampleEvalOptions, MiOptions, OutputOptions, SourceOptions,
    WithConfig,
};
use crate::config::{check_paths, load_config, merge};
use crate::dataset::load_dataset;
use crate::error::{config_err, CliResult};
use crate::external::ExternalModel;
use crate::output::{
    attr_csv, curve_csv, example_csv, mi_csv, render, write_outputs, AttrRow, CurveRow, ExampleRow,
    Format, MiRow,
};

const DEFAULT_PT_SEEDS: u64 = 5;
const DEFAULT_EXAMPLES: usize = 6;
const DEFAULT_TREE_DEPTH: usize = 4;

/// What a command produced.
#[derive(Debug)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    /// Table printed to stdout.
    pub summary: String,
}

pub fn run(command: Command) -> CliResult<Outcome> {
    match command {
        Command::AttrEval(w) => attr_eval(resolve(w)?),
        Command::ExampleEval(w) => example_eval(resolve(w)?),
        Command::Mi(w) => mi(resolve(w)?),
    }
}

fn resolve<T>(w: WithConfig<T>) -> CliResult<T>
where
    T: clap::Args + serde::de::DeserializeOwned + Serialize + Default,
{
    let file = w.config.as_deref().map(load_config::<T>).transpose()?;
    merge(file, w.options)
}

fn parse<T: std::str::FromStr<Err = String>>(s: &str) -> CliResult<T> {
    s.parse().map_err(config_err)
}

/// Dataset and, for built-ins that ship one, the model trained with it.
struct Sources {
    data: Option<TabularDataset>,
    trained: Option<Box<dyn Model>>,
    builtin: Option<String>,
}

fn load_data(src: &SourceOptions) -> CliResult<Sources> {
    check_paths(&[&src.dataset])?;
    let seed = src.data_seed.unwrap_or(0);
    match (&src.dataset, src.builtin.as_deref()) {
        (Some(_), Some(_)) => Err(config_err("give either --dataset or --builtin, not both")),
        (Some(path), None) => Ok(Sources {
            data: Some(load_dataset(path)?),
            trained: None,
            builtin: None,
        }),
        (None, Some(name)) => {
            let (data, trained): (TabularDataset, Option<Box<dyn Model>>) = match name {
                "synth" => (synth_tabular(&SynthConfig::default(), seed)?, None),
                "clustered" => {
                    let b = clustered_benchmark(seed)?;
                    (b.data, Some(Box::new(b.model)))
                }
                "token" => {
                    let b = token_benchmark_with(&TokenConfig::default(), seed)?;
                    (b.data, Some(Box::new(b.model)))
                }
                other => {
                    return Err(config_err(format!(
                        "unknown builtin dataset `{other}` (synth, clustered or token)"
                    )))
                }
            };
            Ok(Sources {
                data: Some(data),
                trained,
                builtin: Some(name.to_string()),
            })
        }
        (None, None) => Ok(Sources {
            data: None,
            trained: None,
            builtin: None,
        }),
    }
}

fn require_data<'a>(s: &'a Sources, what: &str) -> CliResult<&'a TabularDataset> {
    s.data
        .as_ref()
        .ok_or_else(|| config_err(format!("{what} needs --dataset or --builtin")))
}

fn default_model_name(s: &Sources) -> Option<&'static str> {
    match s.builtin.as_deref() {
        Some("synth") => Some("tree"),
        Some("clustered") => Some("softmax"),
        Some("token") => Some("token"),
        _ => None,
    }
}

/// Resolves the model; `fallback` names the built-in used when neither
/// `--model` nor `--model-cmd` is given and the dataset implies none.
fn load_model(
    src: &SourceOptions,
    sources: &mut Sources,
    fallback: Option<&str>,
) -> CliResult<Box<dyn Model>> {
    if let Some(cmd) = &src.model_cmd {
        if src.model.is_some() {
            return Err(config_err("give either --model or --model-cmd, not both"));
        }
        let secs = src
            .model_timeout
            .unwrap_or(crate::external::DEFAULT_TIMEOUT.as_secs_f64());
        if !(secs.is_finite() && secs > 0.0) {
            return Err(config_err(
                "model timeout must be a positive number of seconds",
            ));
        }
        return Ok(Box::new(ExternalModel::spawn_with_timeout(
            cmd,
            Duration::from_secs_f64(secs),
        )?));
    }
    let name = src
        .model
        .as_deref()
        .or(default_model_name(sources))
        .or(fallback)
        .ok_or_else(|| config_err("no model given: use --model or --model-cmd"))?;
    let seed = src.data_seed.unwrap_or(0);
    let implied = default_model_name(sources) == Some(name);
    if implied {
        if let Some(m) = sources.trained.take() {
            return Ok(m);
        }
    }
    Ok(match name {
        "park" => Box::new(park_model()),
        "tree" => {
            let data = require_data(sources, "the tree model")?;
            Box::new(fit_decision_tree(
                data,
                src.tree_depth.unwrap_or(DEFAULT_TREE_DEPTH),
            )?)
        }
        "softmax" => {
            let data = require_data(sources, "the softmax model")?;
            Box::new(LinearSoftmax::train(
                data,
                data.n_classes(),
                300,
                0.5,
                1e-3,
            )?)
        }
        "token" => Box::new(token_benchmark_with(&TokenConfig::default(), seed)?.model),
        other => {
            return Err(config_err(format!(
                "unknown model `{other}` (park, tree, softmax or token)"
            )))
        }
    })
}

fn output_dir(out: &OutputOptions) -> PathBuf {
    out.out_dir.clone().unwrap_or_else(|| PathBuf::from("."))
}

/// Attribution file accepted by `--attribution`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AttributionFile {
    point: Vec<f64>,
    values: Vec<f64>,
    #[serde(default = "supplied")]
    method: String,
}

fn supplied() -> String {
    "supplied".to_string()
}

fn distribution(
    opts: &AttrEvalOptions,
    model: &dyn Model,
    data: Option<&TabularDataset>,
) -> CliResult<FeatureDistribution> {
    let arity = model.arity();
    let explicit = opts.uniform_lo.is_some() || opts.uniform_hi.is_some();
    let kind = match opts.distribution.as_deref() {
        Some(k) => k,
        None if explicit => "uniform",
        None if data.is_some() => "empirical",
        None => "uniform",
    };
    match kind {
        "empirical" => {
            let data = data.ok_or_else(|| {
                config_err("the empirical distribution needs --dataset or --builtin")
            })?;
            Ok(FeatureDistribution::empirical(data)?)
        }
        "uniform" => {
            if explicit {
                let (Some(lo), Some(hi)) = (opts.uniform_lo, opts.uniform_hi) else {
                    return Err(config_err("give both --uniform-lo and --uniform-hi"));
                };
                return Ok(FeatureDistribution::uniform(arity, lo, hi)?);
            }
            let domain = model.domain().ok_or_else(|| {
                config_err("model declares no domain: give --uniform-lo/--uniform-hi or a dataset")
            })?;
            Ok(FeatureDistribution::marginal(
                domain
                    .into_iter()
                    .map(|iv| Sampler::Uniform {
                        lo: iv.lo,
                        hi: iv.hi,
                    })
                    .collect(),
            )?)
        }
        other => Err(config_err(format!(
            "unknown distribution `{other}` (uniform or empirical)"
        ))),
    }
}

#[derive(Debug, Serialize)]
struct AttrResolved {
    model: String,
    point: Vec<f64>,
    methods: Vec<String>,
    ig_steps: usize,
    epsilon: f64,
    n_mc: usize,
    seed: u64,
    loss: LossFunction,
    zero_tolerance: f64,
    distribution: String,
    perturbations: Option<usize>,
    pt_seeds: u64,
}

fn model_label(src: &SourceOptions, sources: &Sources) -> String {
    src.model_cmd
        .clone()
        .or_else(|| src.model.clone())
        .or_else(|| default_model_name(sources).map(str::to_string))
        .unwrap_or_else(|| "park".to_string())
}

pub fn attr_eval(opts: AttrEvalOptions) -> CliResult<Outcome> {
    check_paths(&[&opts.attribution])?;
    let format = Format::parse(opts.output.format.as_deref())?;
    let mut sources = load_data(&opts.source)?;
    let label = model_label(&opts.source, &sources);
    let model = load_model(&opts.source, &mut sources, Some("park"))?;
    let data = sources.data.as_ref();

    let supplied: Option<AttributionFile> = match &opts.attribution {
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            Some(serde_json::from_str(&text).map_err(|e| {
                config_err(format!("invalid attribution file {}: {e}", p.display()))
            })?)
        }
        None => None,
    };
    let point = match (&opts.point, opts.point_index, &supplied) {
        (Some(p), None, None) => p.clone(),
        (None, Some(i), None) => {
            let data =
                data.ok_or_else(|| config_err("--point-index needs --dataset or --builtin"))?;
            if i >= data.n_samples() {
                return Err(config_err(format!(
                    "--point-index {i} out of range for {} rows",
                    data.n_samples()
                )));
            }
            data.row(i).to_vec()
        }
        (None, None, Some(a)) => a.point.clone(),
        (None, None, None) => {
            return Err(config_err(
                "no point to explain: give --point x1,x2,..., --point-index or --attribution",
            ))
        }
        _ => {
            return Err(config_err(
                "give only one of --point, --point-index and --attribution",
            ))
        }
    };
    if point.len() != model.arity() {
        return Err(config_err(format!(
            "point has {} coordinates, model takes {}",
            point.len(),
            model.arity()
        )));
    }

    let seed = opts.seed.unwrap_or(0);
    let epsilon = opts.epsilon.unwrap_or(DEFAULT_EPSILON);
    let ig_steps = opts.ig_steps.unwrap_or(DEFAULT_IG_STEPS);
    let loss = match &opts.loss {
        Some(l) => parse(l)?,
        None if model.output_kind() == OutputKind::Scalar => LossFunction::SquaredError,
        None => LossFunction::ZeroOne,
    };
    let mut cfg = ExpectationConfig::new(distribution(&opts, model.as_ref(), data)?, loss, seed);
    cfg.n_mc_samples = opts.n_mc.unwrap_or(DEFAULT_MC_SAMPLES);
    cfg.zero_tolerance = opts.zero_tolerance.unwrap_or(DEFAULT_ZERO_TOLERANCE);
    cfg.validate()?;
    let pt_seeds = opts.pt_seeds.unwrap_or(DEFAULT_PT_SEEDS);
    if opts.perturbations.is_some() && pt_seeds == 0 {
        return Err(config_err("--pt-seeds must be positive"));
    }

    let attributions: Vec<AttributionVector> = match supplied {
        Some(a) => {
            if opts.methods.is_some() {
                return Err(config_err(
                    "--methods cannot be combined with --attribution",
                ));
            }
            let mut v = AttributionVector::new(a.point, a.values, a.method)?;
            v.prediction = Some(model.predict(&v.point)?);
            vec![v]
        }
        None => {
            let methods: Vec<Method> = match &opts.methods {
                Some(ms) => ms.iter().map(|m| parse(m)).collect::<CliResult<_>>()?,
                None => Method::ALL.to_vec(),
            };
            methods
                .into_iter()
                .map(|m| {
                    let mut a = match m {
                        Method::IntGrad => integrated_gradients(
                            model.as_ref(),
                            &point,
                            &vec![0.0; point.len()],
                            ig_steps,
                        )?,
                        _ => attribute(model.as_ref(), &point, m, seed)?,
                    };
                    a.method = m.label().to_string();
                    Ok(a)
                })
                .collect::<CliResult<_>>()?
        }
    };

    let mut reports = Vec::with_capacity(attributions.len());
    let mut rows = Vec::with_capacity(attributions.len());
    for a in &attributions {
        log::info!("evaluating {}", a.method);
        let rep = attribution_report(a, model.as_ref(), epsilon, &cfg)?;
        let pt = match opts.perturbations {
            Some(n) => {
                let corpus =
                    data.ok_or_else(|| config_err("--perturbations needs --dataset or --builtin"))?;
                let mut total = 0.0;
                for s in 0..pt_seeds {
                    total += perturbation_test(
                        a,
                        model.as_ref(),
                        rep.effective_complexity,
                        corpus,
                        n,
                        seed.wrapping_add(s),
                    )?;
                }
                Some(total / pt_seeds as f64)
            }
            None => None,
        };
        rows.push(AttrRow {
            method: rep.method.clone(),
            complexity: rep.complexity,
            monotonicity: rep.monotonicity,
            effective_complexity: rep.effective_complexity,
            non_sensitivity: rep.non_sensitivity,
            perturbation: pt,
        });
        let mut value = serde_json::to_value(&rep).map_err(|e| config_err(e.to_string()))?;
        if let (Some(p), Some(obj)) = (pt, value.as_object_mut()) {
            obj.insert("perturbation".into(), json!(p));
        }
        reports.push(value);
    }

    let resolved = AttrResolved {
        model: label,
        point,
        methods: attributions.iter().map(|a| a.method.clone()).collect(),
        ig_steps,
        epsilon,
        n_mc: cfg.n_mc_samples,
        seed,
        loss,
        zero_tolerance: cfg.zero_tolerance,
        distribution: cfg.settings().distribution,
        perturbations: opts.perturbations,
        pt_seeds,
    };
    let mut report = MetricReport::new(&resolved, &reports)?
        .with_seed("mc", seed)
        .with_seed("attribution", seed);
    if data.is_some() {
        report = report.with_seed("data", opts.source.data_seed.unwrap_or(0));
    }
    let table = attr_csv(&rows)?;
    let files = write_outputs(
        &output_dir(&opts.output),
        "attr_eval",
        &report,
        &[("attr_eval", table.clone())],
        format,
    )?;
    Ok(Outcome {
        files,
        summary: render(&table),
    })
}

#[derive(Debug, Serialize)]
struct ExampleResolved {
    model: String,
    selectors: Vec<Selector>,
    n: usize,
    sweep: Option<usize>,
    config: ExampleConfig,
}

pub fn example_eval(opts: ExampleEvalOptions) -> CliResult<Outcome> {
    let format = Format::parse(opts.output.format.as_deref())?;
    let mut sources = load_data(&opts.source)?;
    let label = model_label(&opts.source, &sources);
    let model = load_model(&opts.source, &mut sources, Some("softmax"))?;
    let data = require_data(&sources, "example-eval")?;
    if data.labels().is_none() {
        return Err(config_err(
            "example-eval needs a labeled dataset (final `label` column)",
        ));
    }
    let selectors: Vec<Selector> = match &opts.selectors {
        Some(s) => s.iter().map(|s| parse(s)).collect::<CliResult<_>>()?,
        None => Selector::ALL.to_vec(),
    };
    let n = opts.n.unwrap_or(DEFAULT_EXAMPLES);
    let pairs = match opts.pairs.as_deref() {
        None | Some("ordered") => PairCounting::Ordered,
        Some("unordered") => PairCounting::Unordered,
        Some(other) => {
            return Err(config_err(format!(
                "unknown pair counting `{other}` (ordered or unordered)"
            )))
        }
    };
    let cfg = ExampleConfig {
        metric: match &opts.distance {
            Some(d) => parse::<Distance>(d)?,
            None => Distance::Euclidean,
        },
        kernel: match opts.bandwidth {
            Some(b) => KernelConfig::rbf(b),
            None => KernelConfig::median_heuristic(),
        },
        pairs,
        loss: match &opts.loss {
            Some(l) => parse(l)?,
            None => LossFunction::ZeroOne,
        },
    };
    cfg.kernel.validate()?;

    let mut scores = Vec::new();
    let mut rows = Vec::new();
    let mut curve = Vec::new();
    let mut curve_rows = Vec::new();
    for &s in &selectors {
        log::info!("evaluating {} at n = {n}", s.label());
        let sc = evaluate_selector(data, model.as_ref(), s, n, &cfg)?;
        rows.push(ExampleRow {
            method: s.label().to_string(),
            non_representativeness: sc.non_representativeness,
            diversity: sc.diversity,
        });
        scores.push(sc);
        if let Some(max) = opts.sweep {
            if max == 0 {
                return Err(config_err("--sweep must be at least 1"));
            }
            let pts = metrics_vs_n(data, model.as_ref(), s, 1..=max, &cfg)?;
            curve_rows.extend(pts.iter().map(|p| CurveRow {
                method: s.label().to_string(),
                n: p.n,
                non_representativeness: p.non_representativeness,
                diversity: p.diversity,
            }));
            curve.push(json!({ "selector": s, "points": pts }));
        }
    }

    let resolved = ExampleResolved {
        model: label,
        selectors,
        n,
        sweep: opts.sweep,
        config: cfg,
    };
    let metrics = json!({ "scores": scores, "curves": curve });
    let report = MetricReport::new(&resolved, &metrics)?
        .with_seed("data", opts.source.data_seed.unwrap_or(0));
    let table = example_csv(&rows)?;
    let mut tables = vec![("example_eval", table.clone())];
    if opts.sweep.is_some() {
        tables.push(("example_curve", curve_csv(&curve_rows)?));
    }
    let files = write_outputs(
        &output_dir(&opts.output),
        "example_eval",
        &report,
        &tables,
        format,
    )?;
    Ok(Outcome {
        files,
        summary: render(&table),
    })
}

#[derive(Debug, Serialize)]
struct MiResolved {
    target: String,
    study: StudyConfig,
    seed: u64,
}

pub fn mi(opts: MiOptions) -> CliResult<Outcome> {
    let format = Format::parse(opts.output.format.as_deref())?;
    let mut sources = load_data(&opts.source)?;
    let explicit_model = opts.source.model.is_some() || opts.source.model_cmd.is_some();
    let use_model = explicit_model || sources.data.as_ref().is_some_and(|d| d.labels().is_none());
    let (y, target, data) = if use_model {
        let label = model_label(&opts.source, &sources);
        let model = load_model(&opts.source, &mut sources, None)?;
        let data = sources
            .data
            .take()
            .ok_or_else(|| config_err("mi needs --dataset or --builtin"))?;
        let y = model_target(model.as_ref(), &data)?;
        // the entropy discretizer is fit against labels; use the model's classes
        let data = match (&y, data.labels()) {
            (Variable::Discrete(sym), None) => {
                TabularDataset::with_labels(data.rows().to_vec(), sym.clone())?
            }
            (_, None) => {
                return Err(config_err(
                    "the entropy discretizer needs class labels; the dataset has none and the model is not a classifier",
                ))
            }
            _ => data,
        };
        (y, format!("model:{label}"), data)
    } else {
        let data = sources
            .data
            .take()
            .ok_or_else(|| config_err("mi needs --dataset or --builtin"))?;
        let labels = data.labels().expect("labeled").to_vec();
        (Variable::discrete(labels), "labels".to_string(), data)
    };

    let defaults = StudyConfig::default();
    let study = StudyConfig {
        runs: opts.runs.unwrap_or(defaults.runs),
        k: opts.k.unwrap_or(defaults.k),
        n_replaced: opts.n_replaced.unwrap_or(defaults.n_replaced),
        ood_value: opts.ood_value.unwrap_or(defaults.ood_value),
        discretizer_depth: opts.discretizer_depth.unwrap_or(defaults.discretizer_depth),
    };
    let seed = opts.seed.unwrap_or(0);
    let rows = extractor_study_with_target(&data, &y, &study, seed)?;
    let table_rows: Vec<MiRow> = rows
        .iter()
        .map(|r| MiRow {
            extractor: extractor_label(&r.extractor).to_string(),
            mi_xz: r.mi_xz,
            mi_zy: r.mi_zy,
        })
        .collect();
    let resolved = MiResolved {
        target,
        study,
        seed,
    };
    let report = MetricReport::new(&resolved, &rows)?
        .with_seed("mi", seed)
        .with_seed("data", opts.source.data_seed.unwrap_or(0));
    let table = mi_csv(&table_rows)?;
    let files = write_outputs(
        &output_dir(&opts.output),
        "mi",
        &report,
        &[("mi", table.clone())],
        format,
    )?;
    Ok(Outcome {
        files,
        summary: render(&table),
    })
}

fn extractor_label(name: &str) -> &str {
    match name {
        "identity" => "Identity",
        "random-ood" => "Random",
        "entropy" => "Entropy",
        other => other,
    }
}
