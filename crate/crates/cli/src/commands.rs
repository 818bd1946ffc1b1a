//! Subcommands of the `npc` binary.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use npc_core::attribute::{sample_attribute_values, train_attributes, AttributeModel, TrainConfig};
use npc_core::bound::{
    check_error_bound, empirical_world, perturbed_model, random_world, BoundReport, ModelTables,
};
use npc_core::circuit::Circuit;
use npc_core::construction::{compile_rules, learn_structure, rules_from_dataset, LearnSpnConfig};
use npc_core::data::SampledDataset;
use npc_core::explain::{
    counterfactual_from_probabilities, is_aligned, mpe_from_probabilities, CeConfig,
};
use npc_core::learning::{cccp_fit, CccpConfig};
use npc_core::metrics::evaluate;
use npc_core::npc::{
    joint_optimize, ClassPosterior, JointOptConfig, NpcModel, DEFAULT_ENUMERATION_CAP,
};
use npc_core::synth::{generate_synthetic, GeneratorKind, SyntheticSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::error::{CliError, CliResult, Context};
use crate::formats::world::World;
use crate::formats::{self, bundle, circuit, dataset, model, rules, world, FORMAT_VERSION};

#[derive(Debug, Parser)]
#[command(name = "npc", version, about = "Neural probabilistic circuit pipeline")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic world: dataset splits, true tables and its rule file.
    Gen(GenArgs),
    /// Stage 1: train the attribute recognizer.
    TrainAttr(TrainAttrArgs),
    /// Stage 2: build a circuit from rules, from data frequencies, or by structure learning.
    BuildCircuit(BuildCircuitArgs),
    /// Fit circuit weights by maximum likelihood (CCCP).
    FitCccp(FitCccpArgs),
    /// Combine an attribute model and a circuit into a model bundle.
    Bundle(BundleArgs),
    /// Stage 3: jointly optimize a bundle.
    JointTrain(JointTrainArgs),
    /// Class posteriors for every sample, optionally excluding attributes.
    Predict(PredictArgs),
    /// Most probable and counterfactual explanations.
    Explain(ExplainArgs),
    /// Metrics report on a test split.
    Evaluate(EvaluateArgs),
    /// Check the compositional error bound exactly.
    CheckBound(CheckBoundArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// JSON synthetic-world spec; flags below override its fields.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub kind: Option<Kind>,
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub attribute_noise: Option<f64>,
    #[arg(long)]
    pub feature_noise: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Kind {
    MnistAddition,
    RuleWorld,
}

#[derive(Debug, Args)]
pub struct TrainAttrArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub validation: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = TrainConfig::default().learning_rate)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = TrainConfig::default().epochs)]
    pub epochs: usize,
    #[arg(long, default_value_t = TrainConfig::default().batch_size)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the per-epoch loss trace here.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Compile a rule file.
    Knowledge,
    /// Compile one rule per observed tuple, weighted by frequency.
    Data,
    /// LearnSPN-style structure learning.
    Learn,
}

#[derive(Debug, Args)]
pub struct BuildCircuitArgs {
    #[arg(long, value_enum)]
    pub mode: Mode,
    #[arg(long, required_if_eq("mode", "knowledge"))]
    pub rules: Option<PathBuf>,
    /// Dataset (sampled with `--seed` when it carries probability targets).
    #[arg(long, required_if_eq_any([("mode", "data"), ("mode", "learn")]))]
    pub data: Option<PathBuf>,
    #[arg(long, default_value_t = LearnSpnConfig::default().independence_threshold)]
    pub independence_threshold: f64,
    #[arg(long, default_value_t = LearnSpnConfig::default().min_rows_to_split)]
    pub min_rows: usize,
    #[arg(long, default_value_t = LearnSpnConfig::default().cluster_count)]
    pub clusters: usize,
    #[arg(long, default_value_t = LearnSpnConfig::default().max_depth)]
    pub max_depth: usize,
    #[arg(long, default_value_t = LearnSpnConfig::default().laplace_alpha)]
    pub laplace_alpha: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitCccpArgs {
    #[arg(long)]
    pub circuit: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = CccpConfig::default().max_iterations)]
    pub max_iterations: usize,
    #[arg(long, default_value_t = CccpConfig::default().ll_abs_tolerance)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BundleArgs {
    /// Attribute-model checkpoint; without it a zero model (uniform
    /// predictions) of dimension `--feature-dim` is used.
    #[arg(long)]
    pub attr_model: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub feature_dim: usize,
    #[arg(long)]
    pub circuit: PathBuf,
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    pub cap: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct JointTrainArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = JointOptConfig::default().eta_a)]
    pub eta_a: f64,
    #[arg(long, default_value_t = JointOptConfig::default().eta_c)]
    pub eta_c: f64,
    #[arg(long, default_value_t = JointOptConfig::default().epochs)]
    pub epochs: usize,
    #[arg(long, default_value_t = JointOptConfig::default().batch_size)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Attribute names to leave out of inference.
    #[arg(long, value_delimiter = ',')]
    pub exclude: Vec<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON-lines output; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Most probable explanation for each predicted class.
    #[arg(long)]
    pub mpe: bool,
    /// Counterfactual towards the true class for each mispredicted sample.
    #[arg(long)]
    pub ce: bool,
    #[arg(long, default_value_t = CeConfig::default().gamma)]
    pub gamma: f64,
    #[arg(long, default_value_t = CeConfig::default().iterations)]
    pub iterations: usize,
    /// Include the per-iteration objective in each record.
    #[arg(long)]
    pub trace: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    /// Also compute alignment and correction rates.
    #[arg(long)]
    pub explanations: bool,
    #[arg(long, default_value_t = CeConfig::default().gamma)]
    pub gamma: f64,
    #[arg(long, default_value_t = CeConfig::default().iterations)]
    pub iterations: usize,
    /// Seed for drawing hard attribute values for the likelihood metric.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckBoundArgs {
    /// World tables written by `gen`.
    #[arg(long, requires = "bundle", conflicts_with = "random_worlds")]
    pub world: Option<PathBuf>,
    #[arg(long)]
    pub bundle: Option<PathBuf>,
    /// Use the rows of this dataset as the states (empirical error terms).
    #[arg(long, requires = "world")]
    pub empirical: Option<PathBuf>,
    /// Run the suite of random worlds with perturbed models instead.
    #[arg(long)]
    pub random_worlds: Option<usize>,
    #[arg(long, default_value_t = 50)]
    pub max_states: usize,
    #[arg(long, default_value_t = 3)]
    pub max_attributes: usize,
    #[arg(long, default_value_t = 4)]
    pub max_cardinality: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Gen(a) => gen(a),
        Command::TrainAttr(a) => train_attr(a),
        Command::BuildCircuit(a) => build_circuit(a),
        Command::FitCccp(a) => fit_cccp(a),
        Command::Bundle(a) => make_bundle(a),
        Command::JointTrain(a) => joint_train(a),
        Command::Predict(a) => predict(a),
        Command::Explain(a) => explain(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::CheckBound(a) => check_bound(a),
    }
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => formats::write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json_line<T: Serialize>(out: &mut String, value: &T) {
    out.push_str(&serde_json::to_string(value).expect("records serialize"));
    out.push('\n');
}

/// Reads hard-valued rows, sampling them from probability targets when the
/// file is a regular dataset.
fn read_rows(path: &Path, seed: u64) -> CliResult<SampledDataset> {
    let text = formats::read_text(path)?;
    let first = text.lines().next().unwrap_or("");
    if first.contains(dataset::SAMPLED_FORMAT) {
        dataset::sampled_from_text(path, &text)
    } else {
        let d = dataset::from_text(path, &text)?;
        sample_attribute_values(&d, seed).context(path.display().to_string())
    }
}

fn gen(a: GenArgs) -> CliResult<()> {
    let mut spec = match &a.spec {
        Some(p) => formats::read_json::<SyntheticSpec>(p)?,
        None => SyntheticSpec::default(),
    };
    if let Some(k) = a.kind {
        spec.kind = match k {
            Kind::MnistAddition => GeneratorKind::MnistAdditionLike,
            Kind::RuleWorld => GeneratorKind::RuleWorld,
        };
    }
    if let Some(r) = a.rows {
        spec.rows = r;
    }
    if let Some(e) = a.attribute_noise {
        spec.attribute_noise = e;
    }
    if let Some(s) = a.feature_noise {
        spec.feature_noise = s;
    }
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    let data = generate_synthetic(&spec).context("gen")?;
    dataset::write(&a.out.join("train.jsonl"), &data.train)?;
    dataset::write(&a.out.join("validation.jsonl"), &data.validation)?;
    dataset::write(&a.out.join("test.jsonl"), &data.test)?;
    world::write(&a.out.join("world.json"), &World::from_synthetic(&data))?;
    rules::write(
        &a.out.join("rules.txt"),
        &data.rule_set().context("class rules")?,
    )?;
    formats::write_json(&a.out.join("spec.json"), &spec)
}

fn train_attr(a: TrainAttrArgs) -> CliResult<()> {
    let train = dataset::read(&a.train)?;
    let validation = a.validation.as_deref().map(dataset::read).transpose()?;
    let cfg = TrainConfig {
        learning_rate: a.learning_rate,
        epochs: a.epochs,
        batch_size: a.batch_size,
        seed: a.seed,
        ..TrainConfig::default()
    };
    let (m, trace) = train_attributes(&train, validation.as_ref(), &cfg).context("train-attr")?;
    model::write(&a.out, &m)?;
    if let Some(p) = &a.trace {
        formats::write_json(
            p,
            &json!({
                "format": "npc-attribute-trace",
                "version": FORMAT_VERSION,
                "train_loss": trace.train_loss,
                "validation_loss": trace.validation_loss,
                "learning_rates": trace.learning_rates,
            }),
        )?;
    }
    Ok(())
}

fn build_circuit(a: BuildCircuitArgs) -> CliResult<()> {
    let c: Circuit = match a.mode {
        Mode::Knowledge => {
            let path = a
                .rules
                .as_deref()
                .ok_or_else(|| CliError::Usage("--rules is required".into()))?;
            compile_rules(&rules::read(path)?).context(path.display().to_string())?
        }
        Mode::Data | Mode::Learn => {
            let path = a
                .data
                .as_deref()
                .ok_or_else(|| CliError::Usage("--data is required".into()))?;
            let rows = read_rows(path, a.seed)?;
            if a.mode == Mode::Data {
                compile_rules(&rules_from_dataset(&rows).context("rules from data")?)
                    .context("compile")?
            } else {
                let cfg = LearnSpnConfig {
                    independence_threshold: a.independence_threshold,
                    min_rows_to_split: a.min_rows,
                    cluster_count: a.clusters,
                    max_depth: a.max_depth,
                    rng_seed: a.seed,
                    laplace_alpha: a.laplace_alpha,
                };
                learn_structure(&rows, &cfg).context("learn")?
            }
        }
    };
    circuit::write(&a.out, &c)
}

fn fit_cccp(a: FitCccpArgs) -> CliResult<()> {
    let c = circuit::read(&a.circuit)?;
    let rows = read_rows(&a.data, a.seed)?;
    let cfg = CccpConfig {
        max_iterations: a.max_iterations,
        ll_abs_tolerance: a.tolerance,
        ..CccpConfig::default()
    };
    let (fit, trace) = cccp_fit(&c, &rows, &cfg).context("fit-cccp")?;
    circuit::write(&a.out, &fit)?;
    if let Some(p) = &a.trace {
        formats::write_json(
            p,
            &json!({
                "format": "npc-cccp-trace",
                "version": FORMAT_VERSION,
                "log_likelihoods": trace.log_likelihoods,
                "converged": trace.converged,
                "iterations_run": trace.iterations_run,
            }),
        )?;
    }
    Ok(())
}

fn make_bundle(a: BundleArgs) -> CliResult<()> {
    let c = circuit::read(&a.circuit)?;
    let m = match &a.attr_model {
        Some(p) => model::read(p)?,
        None => AttributeModel::zeros(c.schema().clone(), a.feature_dim),
    };
    let npc = NpcModel::with_cap(m, c, a.cap).context("bundle")?;
    bundle::write(&a.out, &npc)
}

fn joint_train(a: JointTrainArgs) -> CliResult<()> {
    let npc = bundle::read(&a.bundle)?;
    let train = dataset::read(&a.train)?;
    let cfg = JointOptConfig {
        eta_a: a.eta_a,
        eta_c: a.eta_c,
        epochs: a.epochs,
        batch_size: a.batch_size,
        seed: a.seed,
        ..JointOptConfig::default()
    };
    let (tuned, trace) = joint_optimize(&npc, &train, &cfg).context("joint-train")?;
    bundle::write(&a.out, &tuned)?;
    if let Some(p) = &a.trace {
        formats::write_json(
            p,
            &json!({ "format": "npc-joint-trace", "version": FORMAT_VERSION, "loss": trace }),
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct PredictionRecord<'a> {
    sample: usize,
    predicted: &'a str,
    label: &'a str,
    probabilities: &'a [f64],
    raw_mass: f64,
}

fn predict(a: PredictArgs) -> CliResult<()> {
    let npc = bundle::read(&a.bundle)?;
    let data = dataset::read(&a.data)?;
    let schema = npc.schema().clone();
    let excluded = a
        .exclude
        .iter()
        .map(|name| {
            schema
                .attribute_index(name)
                .ok_or_else(|| CliError::Usage(format!("unknown attribute {name:?}")))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let table = npc.exclusion_table(&excluded).context("exclusion")?;
    let mut out = String::new();
    json_line(
        &mut out,
        &json!({ "format": "npc-predictions", "version": FORMAT_VERSION, "excluded": a.exclude }),
    );
    let mut correct = 0usize;
    for (i, s) in data.samples.iter().enumerate() {
        let probs = npc
            .attribute_model()
            .predict(&s.features)
            .context(format!("sample {i}"))?;
        let post =
            ClassPosterior::from_scores(table.scores(&probs)).context(format!("sample {i}"))?;
        let y = post.predicted();
        correct += usize::from(y == s.class_label);
        json_line(
            &mut out,
            &PredictionRecord {
                sample: i,
                predicted: &schema.class_values()[y],
                label: &schema.class_values()[s.class_label],
                probabilities: &post.probabilities,
                raw_mass: post.raw_mass,
            },
        );
    }
    emit(a.out.as_deref(), &out)?;
    if a.out.is_some() && !data.is_empty() {
        println!("accuracy {}", correct as f64 / data.len() as f64);
    }
    Ok(())
}

#[derive(Serialize)]
struct ExplanationRecord {
    sample: usize,
    predicted: String,
    label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    mpe: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    aligned: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ce: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    corrected: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    first_correction: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    uncorrectable: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    objective_trace: Option<Vec<f64>>,
}

fn explain(a: ExplainArgs) -> CliResult<()> {
    if !a.mpe && !a.ce {
        return Err(CliError::Usage("pass --mpe, --ce or both".into()));
    }
    let npc = bundle::read(&a.bundle)?;
    let data = dataset::read(&a.data)?;
    let schema = npc.schema().clone();
    let cfg = CeConfig {
        gamma: a.gamma,
        iterations: a.iterations,
    };
    let mut out = String::new();
    json_line(
        &mut out,
        &json!({ "format": "npc-explanations", "version": FORMAT_VERSION, "gamma": cfg.gamma, "iterations": cfg.iterations }),
    );
    for (i, s) in data.samples.iter().enumerate() {
        let ctx = || format!("sample {i}");
        let probs = npc.attribute_model().predict(&s.features).context(ctx())?;
        let (_, y) = npc.predict_from_probabilities(&probs).context(ctx())?;
        let mut rec = ExplanationRecord {
            sample: i,
            predicted: schema.class_values()[y].clone(),
            label: schema.class_values()[s.class_label].clone(),
            mpe: None,
            aligned: None,
            ce: None,
            corrected: None,
            first_correction: None,
            uncorrectable: None,
            objective_trace: None,
        };
        if a.mpe {
            let m = mpe_from_probabilities(&npc, &probs, y).context(ctx())?;
            rec.aligned = Some(is_aligned(&m.assignment, s));
            rec.mpe = Some(
                m.assignment
                    .iter()
                    .enumerate()
                    .map(|(k, &v)| schema.attribute_values(k)[v].clone())
                    .collect(),
            );
        }
        if a.ce && y != s.class_label {
            match counterfactual_from_probabilities(&npc, probs, s.class_label, &cfg) {
                Ok(ce) => {
                    rec.corrected = Some(ce.corrected);
                    rec.first_correction = ce.first_correction;
                    rec.objective_trace = a.trace.then_some(ce.objective_trace);
                    rec.ce = Some(ce.b);
                }
                Err(npc_core::Error::Uncorrectable { .. }) => rec.uncorrectable = Some(true),
                Err(e) => return Err(e).context(ctx()),
            }
        }
        json_line(&mut out, &rec);
    }
    emit(a.out.as_deref(), &out)
}

fn evaluate_cmd(a: EvaluateArgs) -> CliResult<()> {
    let npc = bundle::read(&a.bundle)?;
    let test = dataset::read(&a.test)?;
    let sampled = sample_attribute_values(&test, a.seed).context("sampling")?;
    let cfg = CeConfig {
        gamma: a.gamma,
        iterations: a.iterations,
    };
    let report =
        evaluate(&npc, &test, &sampled, a.explanations.then_some(&cfg)).context("evaluate")?;
    let doc = json!({
        "format": "npc-metrics",
        "version": FORMAT_VERSION,
        "rows": test.len(),
        "metrics": report,
    });
    emit(a.out.as_deref(), &formats::to_json(&doc))
}

fn check_bound(a: CheckBoundArgs) -> CliResult<()> {
    let (mode, reports): (&str, Vec<BoundReport>) = match (&a.world, a.random_worlds) {
        (Some(w), _) => {
            let world = world::read(w)?;
            let bundle_dir = a
                .bundle
                .as_deref()
                .ok_or_else(|| CliError::Usage("--bundle is required".into()))?;
            let npc = bundle::read(bundle_dir)?;
            match &a.empirical {
                Some(p) => {
                    let d = dataset::read(p)?;
                    let truth = empirical_world(&d, world.tables.class_given_attributes.clone())
                        .context("empirical world")?;
                    let features: Vec<Vec<f64>> =
                        d.samples.iter().map(|s| s.features.clone()).collect();
                    let m = ModelTables::from_npc(&npc, &features).context("model tables")?;
                    (
                        "empirical",
                        vec![check_error_bound(&truth, &m).context("bound")?],
                    )
                }
                None => {
                    if world.state_features.len() != world.tables.num_states() {
                        return Err(CliError::parse(
                            w,
                            1,
                            "world has no state features; use --empirical",
                        ));
                    }
                    let m = ModelTables::from_npc(&npc, &world.state_features)
                        .context("model tables")?;
                    (
                        "exact",
                        vec![check_error_bound(&world.tables, &m).context("bound")?],
                    )
                }
            }
        }
        (None, Some(n)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            let mut reports = Vec::with_capacity(n);
            for _ in 0..n {
                let w = random_world(&mut rng, a.max_states, a.max_attributes, a.max_cardinality)
                    .context("random world")?;
                let (_, m) = perturbed_model(&w, &mut rng).context("perturbed model")?;
                reports.push(check_error_bound(&w, &m).context("bound")?);
            }
            ("random-worlds", reports)
        }
        (None, None) => {
            return Err(CliError::Usage(
                "pass --world with --bundle, or --random-worlds".into(),
            ))
        }
    };
    let holding = reports
        .iter()
        .filter(|r| r.holds && r.intermediate_holds)
        .count();
    let all_hold = holding == reports.len();
    let doc = json!({
        "format": "npc-bound-report",
        "version": FORMAT_VERSION,
        "mode": mode,
        "cases": reports.len(),
        "holding": holding,
        "all_hold": all_hold,
        "reports": reports,
    });
    emit(a.out.as_deref(), &formats::to_json(&doc))?;
    if all_hold {
        Ok(())
    } else {
        Err(CliError::Invariant(format!(
            "bound fails in {} of {} cases",
            reports.len() - holding,
            reports.len()
        )))
    }
}
