//! Experiment harness behind the `in-ucds` binary: config files, dataset
//! directory layout, run manifests, and the train / evaluate / compare
//! commands.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use in_ucds::data::{
    build_eval_candidates, group_users_by_activity, leave_one_out_split, load_group_files,
    load_splits, parse_interactions, DataError, InteractionLog, SplitDataset, UserGrouping,
};
use in_ucds::eval::{evaluate, write_report, write_results, EvalConfig, EvalError, MetricReport};
use in_ucds::fairness::{write_curve, FairnessConfig, FairnessCurvePoint, FairnessMethod};
use in_ucds::model::{
    load_checkpoint, save_checkpoint, CheckpointMeta, ModelError, ModelKind, TrainConfig,
};
use in_ucds::train::{run_training, EpochRecord, TrainError, TrainInputs};
use in_ucds::ucds::UcdsParams;

/// Harness failure, bucketed into the documented process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or arguments (exit 2).
    Config(String),
    /// Dataset, checkpoint, or filesystem trouble (exit 3).
    Data(String),
    /// Non-finite loss or gradient during training (exit 4).
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Config(m) => CliError::Config(m),
            ModelError::NonFiniteGradient { .. } => CliError::Numeric(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Model(m) => m.into(),
            TrainError::Data(d) => d.into(),
            TrainError::Eval(ev) => ev.into(),
            TrainError::Config(m) => CliError::Config(m),
            TrainError::NonFiniteLoss { .. } => CliError::Numeric(e.to_string()),
        }
    }
}

/// A fully resolved experiment: which backbone, which pairing method, where
/// the data lives, and every hyperparameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub model: ModelKind,
    pub dataset_dir: PathBuf,
    pub method: FairnessMethod,
    pub out_dir: PathBuf,
    pub train: TrainConfig,
    pub fairness: FairnessConfig,
    pub ucds: UcdsParams,
    pub eval: EvalConfig,
    /// Accepted for config compatibility; execution is host-CPU only.
    pub device_id: Option<String>,
}

impl ExperimentSpec {
    pub fn seed(&self) -> u64 {
        self.train.seed
    }

    /// Cross-field validation; path existence is checked by the commands
    /// that actually touch the filesystem.
    pub fn validate(&self) -> Result<(), CliError> {
        self.train.validate().map_err(CliError::from)?;
        self.fairness.validate().map_err(CliError::Config)?;
        self.eval.validate().map_err(CliError::Config)?;
        if self.ucds.tol <= 0.0 || self.ucds.max_iter == 0 {
            return Err(CliError::Config(
                "ucds tolerance must be > 0 and max_iter >= 1".into(),
            ));
        }
        Ok(())
    }
}

fn default_spec() -> ExperimentSpec {
    ExperimentSpec {
        model: ModelKind::Pmf,
        dataset_dir: PathBuf::from("."),
        method: FairnessMethod::InUcds,
        out_dir: PathBuf::from("out"),
        train: TrainConfig::default(),
        fairness: FairnessConfig::default(),
        ucds: UcdsParams::default(),
        eval: EvalConfig::default(),
        device_id: None,
    }
}

/// Every key the flat config format understands, with its meaning. Shared
/// with `--help`.
pub const CONFIG_KEYS: &[(&str, &str)] = &[
    ("model", "backbone model: pmf or neumf"),
    (
        "dataset_dir",
        "directory holding <name>_data.txt and optional splits",
    ),
    ("method", "pairing method: original, in-ucds, or in-naive"),
    (
        "out_dir",
        "output root; logs/ and result/ are created inside",
    ),
    ("seed", "base RNG seed for splits, sampling, and init"),
    ("num_epoch", "number of training epochs"),
    ("batch_size", "training batch size"),
    ("adam_lr", "Adam learning rate"),
    ("latent_dim_mf", "GMF / PMF embedding dimension"),
    ("latent_dim_mlp", "MLP-tower embedding dimension"),
    ("num_negative", "training negatives sampled per positive"),
    (
        "layers",
        "comma-separated MLP layer sizes; layers[0] = 2*latent_dim_mlp",
    ),
    ("l2_regularization", "L2 penalty on touched embedding rows"),
    (
        "lambda",
        "fairness loss weight; must be 0 iff method=original",
    ),
    (
        "refresh_period",
        "epochs between cluster re-assignments (in-ucds)",
    ),
    ("naive_k", "partners per disadvantaged user for in-naive"),
    (
        "candidate_pool",
        "advantaged candidates per cluster problem; 0 = all",
    ),
    ("topk", "ranking cut-off for NDCG and F1"),
    ("optimizer", "optimizer name; only adam is supported"),
    (
        "device_id",
        "accepted and recorded for provenance; execution is CPU",
    ),
];

/// Parses a flat `key=value` config file. Absent keys take documented
/// defaults; unknown keys are rejected; `#` starts a comment.
pub fn load_config(path: &Path) -> Result<ExperimentSpec, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut spec = default_spec();
    let mut lambda: Option<f64> = None;
    let mut method_set = false;

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Config(format!(
                "{}:{}: expected key=value, got `{line}`",
                path.display(),
                lineno + 1
            ))
        })?;
        let (key, value) = (key.trim(), value.trim());
        let bad = |why: String| CliError::Config(format!("key `{key}`: {why}"));
        let parse_usize = |v: &str| {
            v.parse::<usize>()
                .map_err(|_| bad(format!("expected a non-negative integer, got `{v}`")))
        };
        let parse_f64 = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| bad(format!("expected a number, got `{v}`")))
        };
        match key {
            "model" => spec.model = value.parse().map_err(bad)?,
            "dataset_dir" => spec.dataset_dir = PathBuf::from(value),
            "method" => {
                spec.method = value.parse().map_err(bad)?;
                method_set = true;
            }
            "out_dir" => spec.out_dir = PathBuf::from(value),
            "seed" => {
                spec.train.seed = value
                    .parse()
                    .map_err(|_| bad(format!("expected an integer, got `{value}`")))?
            }
            "num_epoch" => spec.train.num_epoch = parse_usize(value)?,
            "batch_size" => spec.train.batch_size = parse_usize(value)?,
            "adam_lr" => spec.train.adam_lr = parse_f64(value)?,
            "latent_dim_mf" => spec.train.latent_dim_mf = parse_usize(value)?,
            "latent_dim_mlp" => spec.train.latent_dim_mlp = parse_usize(value)?,
            "num_negative" => spec.train.num_negative = parse_usize(value)?,
            "layers" => {
                spec.train.layers = value
                    .split(',')
                    .map(|p| {
                        p.trim()
                            .parse::<usize>()
                            .map_err(|_| bad(format!("bad layer size `{}`", p.trim())))
                    })
                    .collect::<Result<_, _>>()?
            }
            "l2_regularization" => spec.train.l2_regularization = parse_f64(value)?,
            "lambda" => lambda = Some(parse_f64(value)?),
            "refresh_period" => spec.fairness.refresh_period = parse_usize(value)?,
            "naive_k" => spec.fairness.naive_k = parse_usize(value)?,
            "candidate_pool" => spec.ucds.pool_size = parse_usize(value)?,
            "topk" => spec.eval.k = parse_usize(value)?,
            "optimizer" => {
                if !value.eq_ignore_ascii_case("adam") {
                    return Err(bad(format!("only `adam` is supported, got `{value}`")));
                }
            }
            "device_id" => spec.device_id = Some(value.to_string()),
            other => {
                return Err(CliError::Config(format!(
                    "{}:{}: unknown key `{other}`",
                    path.display(),
                    lineno + 1
                )))
            }
        }
    }

    if method_set || lambda.is_some() {
        spec.fairness.method = spec.method;
    }
    // lambda defaults to 0 for original and 0.1 otherwise; an explicit value
    // must respect the method coupling (validated below)
    spec.fairness.weight = lambda.unwrap_or(match spec.method {
        FairnessMethod::Original => 0.0,
        _ => FairnessConfig::default().weight,
    });
    spec.fairness.method = spec.method;
    spec.validate()?;
    Ok(spec)
}

/// Run identifier: `<dataset>_<model>_<method>_<seed>`.
pub fn run_id(dataset: &str, spec: &ExperimentSpec) -> String {
    format!("{dataset}_{}_{}_{}", spec.model, spec.method, spec.seed())
}

/// A loaded dataset directory: the full log plus splits and grouping,
/// either read from files or derived by the documented protocol.
pub struct LoadedDataset {
    pub name: String,
    pub log: InteractionLog,
    pub split: SplitDataset,
    pub grouping: UserGrouping,
}

/// Loads `<name>_data.txt` (exactly one per directory), the split files if
/// all three are present (else a seeded leave-one-out split), and the group
/// files if present (else top-5%-by-activity).
pub fn load_dataset(dir: &Path, seed: u64) -> Result<LoadedDataset, CliError> {
    if !dir.is_dir() {
        return Err(CliError::Config(format!(
            "dataset_dir {} does not exist",
            dir.display()
        )));
    }
    let mut data_files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::Data(format!("cannot list {}: {e}", dir.display())))?
        .filter_map(|entry| {
            let p = entry.ok()?.path();
            let name = p.file_name()?.to_str()?;
            (name.ends_with("_data.txt")).then_some(p)
        })
        .collect();
    data_files.sort();
    let data_file = match data_files.len() {
        0 => {
            return Err(CliError::Data(format!(
                "no *_data.txt file in {}",
                dir.display()
            )))
        }
        1 => data_files.pop().unwrap(),
        n => {
            return Err(CliError::Data(format!(
                "expected one *_data.txt in {}, found {n}",
                dir.display()
            )))
        }
    };
    let name = data_file
        .file_name()
        .unwrap()
        .to_str()
        .unwrap()
        .trim_end_matches("_data.txt")
        .to_string();
    let log = parse_interactions(&data_file)?;

    let have_splits = ["train", "tune", "test"]
        .iter()
        .all(|s| dir.join(format!("{name}_{s}.txt")).is_file());
    let split = if have_splits {
        load_splits(&log, dir, &name)?
    } else {
        leave_one_out_split(&log, seed)
    };

    let group_dir = dir.join("groups").join("users");
    let have_groups =
        group_dir.join("active_ids.txt").is_file() && group_dir.join("inactive_ids.txt").is_file();
    let grouping = if have_groups {
        load_group_files(&group_dir, &log)?
    } else {
        group_users_by_activity(&log, 0.05)
    };

    Ok(LoadedDataset {
        name,
        log,
        split,
        grouping,
    })
}

/// Everything a finished run leaves behind, echoed as JSON next to the
/// artifacts it names.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub spec: ExperimentSpec,
    pub code_version: String,
    pub run_id: String,
    pub dataset: String,
    pub wall_clock_secs: f64,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub checkpoint_path: PathBuf,
    pub result_path: PathBuf,
    pub report_path: PathBuf,
    pub curve_path: PathBuf,
    pub test_metrics: MetricReport,
}

fn ensure_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", path.display())))
}

/// Trains per the spec, checkpoints the best epoch under `<out>/logs/`,
/// evaluates it on test, and writes results, report, curve, and manifest.
pub fn cmd_train(spec: &ExperimentSpec) -> Result<RunManifest, CliError> {
    spec.validate()?;
    let started = Instant::now();
    let ds = load_dataset(&spec.dataset_dir, spec.seed())?;
    let id = run_id(&ds.name, spec);
    log::info!(
        "run {id}: {} users, {} items, {} interactions",
        ds.log.n_users(),
        ds.log.n_items(),
        ds.log.interactions().len()
    );

    let outcome = run_training(&TrainInputs {
        kind: spec.model,
        split: &ds.split,
        log: &ds.log,
        grouping: &ds.grouping,
        train_cfg: &spec.train,
        fairness_cfg: &spec.fairness,
        ucds_params: &spec.ucds,
        eval_cfg: spec.eval,
    })?;

    let logs_dir = spec.out_dir.join("logs");
    let result_dir = spec.out_dir.join("result");
    ensure_dir(&logs_dir)?;
    ensure_dir(&result_dir)?;

    let checkpoint_path = logs_dir.join(format!("{id}.ckpt"));
    save_checkpoint(
        &checkpoint_path,
        &outcome.best_model,
        &outcome.best_state,
        &CheckpointMeta {
            config: spec.train.clone(),
            id_map_digest: ds.log.id_map().digest(),
            dataset: ds.name.clone(),
            method: spec.method.to_string(),
            best_epoch: outcome.best_epoch,
        },
    )?;

    let candidates = build_eval_candidates(&ds.split, &ds.log, 99, spec.seed())?;
    let (test_metrics, rows) = evaluate(
        &outcome.best_model,
        &candidates,
        &ds.grouping,
        ds.log.id_map(),
        spec.eval,
    )?;

    let result_path = result_dir.join(format!("{id}.csv"));
    write_results(&rows, &result_path)?;
    let report_path = result_dir.join(format!("{id}_report.csv"));
    write_report(&test_metrics, &report_path)?;
    let curve_path = spec.out_dir.join(format!("{id}_curve.csv"));
    write_curve(&outcome.curve, &curve_path)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", curve_path.display())))?;

    let manifest = RunManifest {
        spec: spec.clone(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        run_id: id.clone(),
        dataset: ds.name,
        wall_clock_secs: started.elapsed().as_secs_f64(),
        history: outcome.history,
        best_epoch: outcome.best_epoch,
        checkpoint_path,
        result_path,
        report_path,
        curve_path,
        test_metrics,
    };
    let manifest_path = spec.out_dir.join(format!("{id}_manifest.json"));
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CliError::Data(format!("manifest serialization: {e}")))?;
    fs::write(&manifest_path, json)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", manifest_path.display())))?;
    Ok(manifest)
}

/// Re-evaluates a saved checkpoint against its dataset. The dataset's id-map
/// digest must match the one recorded at training time.
pub fn cmd_evaluate(
    model: ModelKind,
    dataset_dir: &Path,
    checkpoint: &Path,
) -> Result<MetricReport, CliError> {
    let (loaded, _state, meta) = load_checkpoint(checkpoint)?;
    if loaded.kind() != model {
        return Err(CliError::Config(format!(
            "checkpoint holds a {} model, not {model}",
            loaded.kind()
        )));
    }
    let ds = load_dataset(dataset_dir, meta.config.seed)?;
    if ds.log.id_map().digest() != meta.id_map_digest {
        return Err(CliError::Data(format!(
            "checkpoint was trained on a different dataset (id-map digest mismatch; \
             checkpoint records dataset `{}`)",
            meta.dataset
        )));
    }
    let candidates = build_eval_candidates(&ds.split, &ds.log, 99, meta.config.seed)?;
    let (report, _rows) = evaluate(
        &loaded,
        &candidates,
        &ds.grouping,
        ds.log.id_map(),
        EvalConfig::default(),
    )?;
    Ok(report)
}

/// Table-shaped rendering: one row per labelled report, eight metric
/// columns, four decimals. `undefined` marks an empty group.
pub fn format_table(rows: &[(String, &MetricReport)]) -> String {
    let fmt = |v: Option<f64>| v.map_or("undef".to_string(), |x| format!("{x:.4}"));
    let mut out = String::new();
    out.push_str(&format!(
        "{:<12} {:>8} {:>8} {:>8} {:>8}   {:>8} {:>8} {:>8} {:>8}\n",
        "", "NDCG", "Adv.", "Disadv.", "M_UOF", "F1", "Adv.", "Disadv.", "M_UOF"
    ));
    for (label, r) in rows {
        out.push_str(&format!(
            "{:<12} {:>8.4} {:>8} {:>8} {:>8}   {:>8.4} {:>8} {:>8} {:>8}\n",
            label,
            r.ndcg.overall,
            fmt(r.ndcg.advantaged),
            fmt(r.ndcg.disadvantaged),
            fmt(r.ndcg.m_uof),
            r.f1.overall,
            fmt(r.f1.advantaged),
            fmt(r.f1.disadvantaged),
            fmt(r.f1.m_uof),
        ));
    }
    out
}

/// Output of a three-method comparison.
pub struct CompareOutcome {
    pub manifests: Vec<RunManifest>,
    pub table: String,
    pub table_path: PathBuf,
    pub joint_curve_path: PathBuf,
}

/// Runs each requested method with the shared backbone, dataset, and seed,
/// then writes a merged metric table and joint fairness curve.
pub fn cmd_compare(
    base: &ExperimentSpec,
    methods: &[FairnessMethod],
) -> Result<CompareOutcome, CliError> {
    if methods.is_empty() {
        return Err(CliError::Config("no methods requested".into()));
    }
    let mut manifests: Vec<RunManifest> = Vec::new();
    for &method in methods {
        let mut spec = base.clone();
        spec.method = method;
        spec.fairness.method = method;
        spec.fairness.weight = match method {
            FairnessMethod::Original => 0.0,
            _ if base.fairness.weight > 0.0 => base.fairness.weight,
            _ => FairnessConfig::default().weight,
        };
        let manifest = cmd_train(&spec).inspect_err(|_e| {
            // leave a partial manifest trail before aborting
            let partial: Vec<&str> = manifests.iter().map(|m| m.run_id.as_str()).collect();
            log::error!(
                "method {method} failed after {} completed run(s): {partial:?}",
                partial.len()
            );
        })?;
        manifests.push(manifest);
    }

    let dataset = manifests[0].dataset.clone();
    let stem = format!("{dataset}_{}_{}_compare", base.model, base.seed());
    let table = format_table(
        &manifests
            .iter()
            .map(|m| (m.spec.method.to_string(), &m.test_metrics))
            .collect::<Vec<_>>(),
    );
    let table_path = base.out_dir.join(format!("{stem}.txt"));
    fs::write(&table_path, &table)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", table_path.display())))?;

    let mut joint: Vec<FairnessCurvePoint> = Vec::new();
    for m in &manifests {
        for rec in &m.history {
            joint.push(FairnessCurvePoint {
                epoch: rec.epoch,
                method: m.spec.method.to_string(),
                l_fairness: rec.l_fairness,
            });
        }
    }
    let joint_curve_path = base.out_dir.join(format!("{stem}_curve.csv"));
    write_curve(&joint, &joint_curve_path)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", joint_curve_path.display())))?;

    Ok(CompareOutcome {
        manifests,
        table,
        table_path,
        joint_curve_path,
    })
}

/// Writes a dataset directory with one synthetic `<name>_data.txt`, for
/// demos and smoke runs.
pub fn write_synthetic_dataset(
    dir: &Path,
    name: &str,
    config: &in_ucds::synthetic::SyntheticConfig,
) -> Result<PathBuf, CliError> {
    ensure_dir(dir)?;
    let log = in_ucds::synthetic::generate(config);
    let path = dir.join(format!("{name}_data.txt"));
    let mut out = String::new();
    for rec in log.interactions() {
        out.push_str(&format!(
            "{} {}\n",
            log.id_map().user_external(rec.user),
            log.id_map().item_external(rec.item)
        ));
    }
    fs::write(&path, out)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

/// Parses a comma-separated method list for `compare --methods`.
pub fn parse_methods(s: &str) -> Result<Vec<FairnessMethod>, CliError> {
    let mut methods = Vec::new();
    for part in s.split(',') {
        let m: FairnessMethod = part
            .trim()
            .parse()
            .map_err(|e: String| CliError::Config(e))?;
        if methods.contains(&m) {
            return Err(CliError::Config(format!("method `{m}` listed twice")));
        }
        methods.push(m);
    }
    Ok(methods)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn write_cfg(dir: &Path, body: &str) -> PathBuf {
        let path = dir.join("exp.cfg");
        let mut f = fs::File::create(&path).unwrap();
        f.write_all(body.as_bytes()).unwrap();
        path
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_cfg(dir.path(), "model=pmf\n");
        let spec = load_config(&path).unwrap();
        assert_eq!(spec.model, ModelKind::Pmf);
        assert_eq!(spec.method, FairnessMethod::InUcds);
        assert_eq!(spec.train.num_epoch, 50);
        assert_eq!(spec.train.layers, vec![16, 8]);
        assert_eq!(spec.fairness.weight, 0.1);
        assert_eq!(spec.eval.k, 10);
        assert_eq!(spec.ucds.pool_size, 50);
    }

    #[test]
    fn unknown_key_is_rejected_with_name() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_cfg(dir.path(), "model=pmf\nbogus_key=3\n");
        let err = load_config(&path).unwrap_err();
        assert!(matches!(&err, CliError::Config(m) if m.contains("bogus_key")));
    }

    #[test]
    fn layer_constraint_violation_names_the_key() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_cfg(dir.path(), "model=neumf\nlayers=10,8\nlatent_dim_mlp=8\n");
        let err = load_config(&path).unwrap_err();
        assert!(matches!(&err, CliError::Config(m) if m.contains("layers[0]")));
    }

    #[test]
    fn integers_parse_and_bad_values_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_cfg(dir.path(), "model=pmf\nnum_negative=4\n");
        assert_eq!(load_config(&path).unwrap().train.num_negative, 4);
        let path = write_cfg(dir.path(), "model=pmf\nnum_negative=four\n");
        assert!(matches!(load_config(&path), Err(CliError::Config(_))));
    }

    #[test]
    fn lambda_method_coupling() {
        let dir = tempfile::tempdir().unwrap();
        // original defaults to lambda 0
        let path = write_cfg(dir.path(), "model=pmf\nmethod=original\n");
        assert_eq!(load_config(&path).unwrap().fairness.weight, 0.0);
        // explicit nonzero lambda with original is a contradiction
        let path = write_cfg(dir.path(), "model=pmf\nmethod=original\nlambda=0.5\n");
        assert!(matches!(load_config(&path), Err(CliError::Config(_))));
        // in-ucds with lambda=0 likewise
        let path = write_cfg(dir.path(), "model=pmf\nmethod=in-ucds\nlambda=0\n");
        assert!(matches!(load_config(&path), Err(CliError::Config(_))));
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_cfg(
            dir.path(),
            "# experiment\nmodel = neumf\n\nseed = 11  # trailing\n",
        );
        let spec = load_config(&path).unwrap();
        assert_eq!(spec.model, ModelKind::Neumf);
        assert_eq!(spec.seed(), 11);
    }

    #[test]
    fn spec_round_trips_through_json() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_cfg(dir.path(), "model=neumf\nmethod=in-naive\nseed=3\n");
        let spec = load_config(&path).unwrap();
        let json = serde_json::to_string(&spec).unwrap();
        let back: ExperimentSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(spec, back);
    }

    #[test]
    fn method_list_parsing() {
        let ms = parse_methods("original, in-ucds,in-naive").unwrap();
        assert_eq!(ms.len(), 3);
        assert!(parse_methods("original,original").is_err());
        assert!(parse_methods("frobnicate").is_err());
    }
}
