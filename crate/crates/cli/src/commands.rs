use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use weapo::baselines::DsConfig;
use weapo::covering::build_constraints;
use weapo::data::{load_dataset, save_dataset};
use weapo::endmodel::{default_gamma, fit_krr, make_targets, predict_krr, TargetPolicy};
use weapo::metrics::{evaluate_all, evaluate_label_model, EvalResult};
use weapo::model::{fit_label_model, FitOptions, ModelKind};
use weapo::synth::{generate, oracle_posterior, FeatureSpec, OracleFile, SyntheticSpec};
use weapo::weapo::WeapoConfig;
use weapo::{Dataset, LabelModel, Prior, VERSION};

use crate::table::Table;
use crate::{CompareArgs, EndArgs, EvalArgs, FitArgs, ModelArgs, SynthArgs};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{context}: {source}")]
    Data {
        context: String,
        #[source]
        source: weapo::Error,
    },
    #[error("{0}")]
    Model(#[from] weapo::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// On-disk model file written by `fit`.
#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    command: String,
    version: String,
    config: Value,
    model: LabelModel,
}

fn load(path: &Path) -> CliResult<Dataset> {
    load_dataset(path).map_err(|source| CliError::Data {
        context: path.display().to_string(),
        source,
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn to_json(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("result values serialize");
    s.push('\n');
    s
}

/// Writes the result JSON to `out`, or to stdout when no path is given.
fn emit(out: Option<&Path>, value: &Value) -> CliResult<()> {
    let text = to_json(value);
    match out {
        Some(p) => write_file(p, text.as_bytes()),
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|source| CliError::Io {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    }
}

/// Human-readable output goes to stderr so stdout stays machine-readable.
fn show(quiet: bool, table: &Table) {
    if !quiet {
        eprint!("{}", table.render());
    }
}

fn parse_kind(name: &str) -> CliResult<ModelKind> {
    name.trim()
        .parse()
        .map_err(|e: weapo::Error| CliError::Usage(e.to_string()))
}

fn parse_prior(p: Option<f64>) -> CliResult<Option<Prior>> {
    p.map(|v| Prior::new(v).map_err(|_| CliError::Usage(format!("--prior {v} must lie strictly between 0 and 1"))))
        .transpose()
}

fn fit_options(params: &ModelArgs, seed: u64) -> FitOptions {
    FitOptions {
        weapo: WeapoConfig {
            lambda_reg: params.lambda,
            use_prior: true,
            prior_weight: params.prior_weight,
            max_iters: params.max_iters,
            step0: params.step0,
            tol: params.tol,
            seed,
        },
        ds: DsConfig {
            max_iters: params.ds_max_iters,
            tol: params.ds_tol,
            smoothing: params.smoothing,
        },
        eps_clip: params.eps_clip,
    }
}

fn fit_one(kind: ModelKind, train: &Dataset, prior: Option<Prior>, options: &FitOptions) -> CliResult<LabelModel> {
    if kind.requires_prior() && prior.is_none() {
        return Err(CliError::Usage(format!("model `{kind}` requires --prior")));
    }
    Ok(fit_label_model(kind, train, prior, options)?)
}

fn load_model(path: &Path) -> CliResult<LabelModel> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    if let Ok(file) = serde_json::from_str::<ModelFile>(&text) {
        return Ok(file.model);
    }
    serde_json::from_str::<LabelModel>(&text).map_err(|e| CliError::Data {
        context: path.display().to_string(),
        source: e.into(),
    })
}

fn eval_row(table: &mut Table, name: &str, r: &EvalResult) {
    table.row(vec![
        name.to_string(),
        format!("{:.4}", r.roc_auc),
        format!("{:.4}", r.pr_auc),
        r.n_evaluated.to_string(),
        r.n_pos.to_string(),
        r.n_neg.to_string(),
    ]);
}

fn eval_table() -> Table {
    Table::new(&["model", "roc_auc", "pr_auc", "n", "n_pos", "n_neg"])
}

pub fn fit(args: &FitArgs) -> CliResult<()> {
    let kind = parse_kind(&args.model)?;
    let prior = parse_prior(args.params.prior)?;
    let options = fit_options(&args.params, args.common.seed);
    let train = load(&args.train)?;
    let model = fit_one(kind, &train, prior, &options)?;

    if let Some(edges_path) = &args.edges {
        let (_, constraints) = build_constraints(&train);
        write_file(edges_path, to_json(&constraints.edge_summaries()).as_bytes())?;
    }

    let file = ModelFile {
        command: "fit".into(),
        version: VERSION.into(),
        config: json!({ "args": args, "model": kind.name(), "options": options }),
        model,
    };
    write_file(&args.out, to_json(&file).as_bytes())?;

    if !args.common.quiet {
        let mut t = Table::new(&["model", "num_lfs", "records", "covered"]);
        let covered = train.votes().filter(|v| v.is_covered()).count();
        t.row(vec![
            kind.name().into(),
            train.num_lfs().to_string(),
            train.len().to_string(),
            covered.to_string(),
        ]);
        show(false, &t);
        if let LabelModel::Weapo(m) = &file.model {
            let theta: Vec<String> = m.theta.iter().map(|x| format!("{x:.4}")).collect();
            eprintln!("theta = [{}]", theta.join(", "));
        }
    }
    Ok(())
}

pub fn eval(args: &EvalArgs) -> CliResult<()> {
    let model = load_model(&args.model_file)?;
    let test = load(&args.test)?;
    let gold = test.gold_labels()?;
    let pred = model.predict(&test)?;
    let result = evaluate_label_model(&pred.scores, &pred.covered, &gold)?;

    let mut t = eval_table();
    eval_row(&mut t, model.kind().name(), &result);
    show(args.common.quiet, &t);
    emit(
        args.out.as_deref(),
        &json!({
            "command": "eval",
            "version": VERSION,
            "config": args,
            "model": model.kind().name(),
            "result": result,
        }),
    )
}

pub fn end(args: &EndArgs) -> CliResult<()> {
    if !(args.alpha >= 0.0 && args.alpha.is_finite()) {
        return Err(CliError::Usage(format!("--alpha {} must be non-negative", args.alpha)));
    }
    if let Some(g) = args.gamma {
        if !(g > 0.0 && g.is_finite()) {
            return Err(CliError::Usage(format!("--gamma {g} must be positive")));
        }
    }
    let model = load_model(&args.model_file)?;
    let train = load(&args.train)?;
    let test = load(&args.test)?;
    let x_train = train.feature_matrix()?;
    let x_test = test.feature_matrix()?;
    let gold = test.gold_labels()?;

    let pred = model.predict(&train)?;
    if !pred.covered.iter().any(|&c| c) {
        return Err(CliError::Model(weapo::Error::UndefinedMetric(
            "undefined AUC: no training record is covered, so every target equals the uncovered target and the end model is constant"
                .into(),
        )));
    }
    let policy = TargetPolicy {
        uncovered_target: args.uncovered_target,
    };
    let targets = make_targets(&pred.scores, &pred.covered, policy);
    let gamma = match args.gamma {
        Some(g) => g,
        None => default_gamma(&x_train)?,
    };
    let krr = fit_krr(&x_train, &targets, gamma, args.alpha)?;
    let scores = predict_krr(&krr, &x_test)?;
    let result = evaluate_all(&scores, &gold)?;

    let mut t = eval_table();
    eval_row(&mut t, &format!("krr<{}>", model.kind().name()), &result);
    show(args.common.quiet, &t);
    emit(
        args.out.as_deref(),
        &json!({
            "command": "end",
            "version": VERSION,
            "config": args,
            "label_model": model.kind().name(),
            "diagnostics": {
                "alpha": args.alpha,
                "gamma": gamma,
                "uncovered_target": args.uncovered_target,
                "num_train": train.len(),
                "num_train_covered": pred.covered.iter().filter(|&&c| c).count(),
            },
            "result": result,
        }),
    )
}

#[derive(Debug, Serialize)]
struct CompareRow {
    model: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<EvalResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

impl CompareRow {
    fn from_outcome(model: String, outcome: CliResult<EvalResult>) -> Self {
        match outcome {
            Ok(r) => Self {
                model,
                result: Some(r),
                error: None,
            },
            Err(e) => Self {
                model,
                result: None,
                error: Some(e.to_string()),
            },
        }
    }
}

fn load_oracle(path: &Path) -> CliResult<OracleFile> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::Data {
        context: path.display().to_string(),
        source: e.into(),
    })
}

pub fn compare(args: &CompareArgs) -> CliResult<()> {
    let names: Vec<&str> = args.models.iter().map(|s| s.trim()).filter(|s| !s.is_empty()).collect();
    if names.is_empty() {
        return Err(CliError::Usage("--models must name at least one model".into()));
    }
    let kinds = names.iter().map(|n| parse_kind(n)).collect::<CliResult<Vec<_>>>()?;
    let prior = parse_prior(args.params.prior)?;
    let options = fit_options(&args.params, args.common.seed);
    let oracle = args.oracle.as_deref().map(load_oracle).transpose()?;
    let train = load(&args.train)?;
    let test = load(&args.test)?;
    let gold = test.gold_labels()?;

    let evaluate = |kind: ModelKind| -> CliResult<EvalResult> {
        let model = fit_one(kind, &train, prior, &options)?;
        let pred = model.predict(&test)?;
        Ok(evaluate_label_model(&pred.scores, &pred.covered, &gold)?)
    };
    let outcomes: Vec<CliResult<EvalResult>> = std::thread::scope(|s| {
        let handles: Vec<_> = kinds.iter().map(|&k| s.spawn(move || evaluate(k))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("model thread panicked"))
            .collect()
    });
    let mut rows: Vec<CompareRow> = kinds
        .iter()
        .zip(outcomes)
        .map(|(k, o)| CompareRow::from_outcome(k.name().into(), o))
        .collect();

    if let Some(oracle) = &oracle {
        let outcome = (|| -> CliResult<EvalResult> {
            let scores = test
                .votes()
                .map(|v| oracle_posterior(&oracle.spec, v))
                .collect::<weapo::Result<Vec<f64>>>()?;
            let covered: Vec<bool> = test.votes().map(|v| v.is_covered()).collect();
            Ok(evaluate_label_model(&scores, &covered, &gold)?)
        })();
        rows.push(CompareRow::from_outcome("oracle".into(), outcome));
    }

    let mut t = eval_table();
    for row in &rows {
        match (&row.result, &row.error) {
            (Some(r), _) => eval_row(&mut t, &row.model, r),
            (None, Some(e)) => t.row(vec![row.model.clone(), "error".into(), e.clone()]),
            (None, None) => unreachable!(),
        }
    }
    show(args.common.quiet, &t);
    emit(
        args.out.as_deref(),
        &json!({
            "command": "compare",
            "version": VERSION,
            "config": { "args": args, "options": options },
            "rows": rows,
        }),
    )
}

fn synth_spec(args: &SynthArgs) -> CliResult<SyntheticSpec> {
    let spec = match &args.spec {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            serde_json::from_str::<SyntheticSpec>(&text)
                .map_err(|e| CliError::Usage(format!("{}: invalid spec: {e}", path.display())))?
        }
        None => {
            let spec = SyntheticSpec::new(args.p_plus, args.tpr.clone(), args.fpr.clone(), args.n, args.common.seed);
            if args.feature_dim > 0 {
                spec.with_features(FeatureSpec::separated(args.feature_dim, args.separation, args.sigma))
            } else {
                spec
            }
        }
    };
    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(spec)
}

/// `data/train.jsonl` -> `data/train.oracle.json`.
pub fn default_oracle_path(out: &Path) -> PathBuf {
    out.with_extension("oracle.json")
}

pub fn synth(args: &SynthArgs) -> CliResult<()> {
    let spec = synth_spec(args)?;
    let dataset = generate(&spec)?;
    save_dataset(&dataset, &args.out).map_err(|source| CliError::Data {
        context: args.out.display().to_string(),
        source,
    })?;
    let oracle_path = args.oracle_out.clone().unwrap_or_else(|| default_oracle_path(&args.out));
    let oracle = OracleFile::for_dataset(&spec, &dataset)?;
    write_file(&oracle_path, to_json(&oracle).as_bytes())?;

    if !args.common.quiet {
        let positives = dataset
            .records()
            .iter()
            .filter(|r| r.gold.is_some_and(|g| g.is_positive()))
            .count();
        let covered = dataset.votes().filter(|v| v.is_covered()).count();
        let mut t = Table::new(&["records", "num_lfs", "positives", "covered", "seed"]);
        t.row(vec![
            dataset.len().to_string(),
            dataset.num_lfs().to_string(),
            positives.to_string(),
            covered.to_string(),
            spec.seed.to_string(),
        ]);
        show(false, &t);
        eprintln!("wrote {} and {}", args.out.display(), oracle_path.display());
    }
    Ok(())
}
