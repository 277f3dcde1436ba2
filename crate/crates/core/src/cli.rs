//! The `mrot` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 internal failure.
//! Results go to the `--output` file or stdout; diagnostics and timings go to
//! stderr so that output files are byte-identical across identical runs.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::cost::CapRule;
use crate::error::{Error, Result};
use crate::eval::{self, AblationGrid, SeededRng, MAX_FIT_SAMPLES};
use crate::io::{self, LabelColumn, WindowConfig};
use crate::model::{cross_validate_regressor, CostChoice, FitConfig, MrotModel, Neighborhood};
use crate::regress::RegressorKind;
use crate::solver::SolverConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "mrot", version, about = "Anomaly detection by mass-repulsive optimal transport")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a detector on a CSV table and write model.json.
    Fit(FitArgs),
    /// Score the rows of a CSV table with a saved model.
    Score(ScoreArgs),
    /// Compute ROC-AUC / AUC-PR of a scores file against labels.
    Eval(EvalArgs),
    /// Generate synthetic data.
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Turn a multivariate time series into per-window mean/std features.
    Windows(WindowArgs),
    /// Run the (epsilon, k, regressor) ablation grid on labeled data.
    Ablate(AblateArgs),
}

#[derive(Args, Debug)]
struct InputArgs {
    #[arg(long)]
    input: PathBuf,
    /// Column holding 0/1 labels; excluded from the features.
    #[arg(long = "label-col")]
    label_col: Option<String>,
    /// The input has no header row (label column must then be an index).
    #[arg(long)]
    no_header: bool,
}

impl InputArgs {
    fn label(&self) -> Result<Option<LabelColumn>> {
        Ok(match &self.label_col {
            None => None,
            Some(s) if self.no_header => Some(LabelColumn::Index(s.parse().map_err(|_| {
                Error::param(format!("--label-col `{s}` must be a column index without a header"))
            })?)),
            Some(s) => Some(LabelColumn::Name(s.clone())),
        })
    }

    fn load(&self) -> Result<io::Table> {
        require_file(&self.input)?;
        io::load_csv(&self.input, !self.no_header, self.label()?.as_ref())
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CostArg {
    Engineered,
    Coulomb,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Nearest neighbors placed in the exclusion zone alongside the sample itself.
    #[arg(long, required_unless_present = "rho")]
    k: Option<usize>,
    /// Use a distance ball of this radius (standardized units) instead of k-NN.
    #[arg(long, conflicts_with = "k")]
    rho: Option<f64>,
    /// Entropic regularization; 0 selects the exact solver.
    #[arg(long)]
    epsilon: f64,
    #[arg(long, value_enum, default_value = "engineered")]
    cost: CostArg,
    /// row-max, global-max or fixed:L
    #[arg(long, default_value = "row-max")]
    cap: String,
    /// kernel-ridge, knn, gbt, or auto (5-fold cross-validation)
    #[arg(long, default_value = "kernel-ridge")]
    regressor: String,
    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Compute costs on raw rather than standardized features.
    #[arg(long)]
    no_standardize: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct ScoreArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    input: InputArgs,
    /// Defaults to stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq)]
enum Metric {
    AucRoc,
    AucPr,
    Both,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// CSV with a `score` column, as written by `score`.
    #[arg(long)]
    scores: PathBuf,
    /// CSV holding the labels in row order.
    #[arg(long)]
    labels: PathBuf,
    #[arg(long = "label-col", default_value = "label")]
    label_col: String,
    #[arg(long, value_enum, default_value = "both")]
    metric: Metric,
}

#[derive(Subcommand, Debug)]
enum SynthCommand {
    /// Two Gaussian clusters: N(0, 0.25 I) normals, N((-3,-3), 0.01 I) anomalies.
    Toy(ToyArgs),
}

#[derive(Args, Debug)]
struct ToyArgs {
    #[arg(long, default_value_t = 500)]
    n_normal: usize,
    #[arg(long, default_value_t = 25)]
    n_anom: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct WindowArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    no_header: bool,
    #[arg(long, default_value_t = 60)]
    window_len: usize,
    /// Defaults to half the window length.
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct AblateArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Grid preset; individual lists can be overridden below.
    #[arg(long, default_value = "default")]
    grid: String,
    /// Comma-separated epsilon values.
    #[arg(long, value_delimiter = ',')]
    epsilons: Option<Vec<f64>>,
    /// Comma-separated k values.
    #[arg(long, value_delimiter = ',')]
    ks: Option<Vec<usize>>,
    /// Comma-separated regressor names.
    #[arg(long, value_delimiter = ',')]
    regressors: Option<Vec<String>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
    /// Also write the table as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

/// Maps an error to its exit code.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::NumericalOverflow { .. } | Error::Infeasible { .. } | Error::Regression { .. } => {
            EXIT_INTERNAL
        }
        Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => EXIT_USAGE,
        Error::Io { .. } => EXIT_INTERNAL,
        _ => EXIT_DATA,
    }
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
        ))
    }
}

/// Parses `argv` (program name first), runs the command and returns the exit
/// code. Never panics on bad input.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Fit(a) => fit(a),
        Command::Score(a) => score(a),
        Command::Eval(a) => evaluate(a),
        Command::Synth(SynthCommand::Toy(a)) => synth_toy(a),
        Command::Windows(a) => windows(a),
        Command::Ablate(a) => ablate(a),
    }
}

fn fit(a: FitArgs) -> Result<()> {
    let table = a.input.load()?;
    let names = table.column_names.clone();
    let mut data = table.into_dataset()?;
    if data.n_samples() > MAX_FIT_SAMPLES {
        eprintln!("subsampling {} rows to {MAX_FIT_SAMPLES}", data.n_samples());
        let keep = SeededRng::new(a.seed).sample_indices(data.n_samples(), MAX_FIT_SAMPLES);
        data = data.select(&keep)?;
    }
    let neighborhood = match (a.k, a.rho) {
        (_, Some(rho)) => Neighborhood::RhoBall { rho },
        (Some(k), None) => Neighborhood::Knn { k },
        (None, None) => unreachable!("clap requires --k or --rho"),
    };
    let regressor = if a.regressor == "auto" {
        None
    } else {
        Some(a.regressor.parse::<RegressorKind>()?)
    };
    let mut config = FitConfig {
        neighborhood,
        solver: SolverConfig {
            epsilon: a.epsilon,
            max_iters: a.max_iters,
            tol: a.tol,
            log_domain: None,
        },
        cap: a.cap.parse::<CapRule>()?,
        cost: match a.cost {
            CostArg::Engineered => CostChoice::Engineered,
            CostArg::Coulomb => CostChoice::Coulomb,
        },
        regressor: regressor.unwrap_or_default(),
        standardize: !a.no_standardize,
    };
    let start = Instant::now();
    let (mut model, trace) = MrotModel::fit_with_trace(&data, &config)?;
    if regressor.is_none() {
        let cands = [RegressorKind::knn(), RegressorKind::kernel_ridge(), RegressorKind::gbt()];
        let folds = 5.min(data.n_samples());
        let report = cross_validate_regressor(data.features(), &trace.scores, &cands, folds, a.seed)?;
        for (kind, mse) in &report.mse {
            match mse {
                Some(m) => eprintln!("cv {kind}: mse {m:.6e}"),
                None => eprintln!("cv {kind}: failed"),
            }
        }
        config.regressor = report.best;
        model = MrotModel::fit(&data, &config)?;
    }
    if let Some(n) = names {
        model = model.with_column_names(n);
    }
    eprintln!(
        "fit: n={} d={} regressor={} converged={} iterations={} marginal_error={:.3e} ({:.3}s)",
        data.n_samples(),
        data.n_features(),
        config.regressor,
        model.converged,
        trace.plan.iterations,
        trace.plan.marginal_error,
        start.elapsed().as_secs_f64()
    );
    io::save_model(&model, &a.output)
}

fn score(a: ScoreArgs) -> Result<()> {
    require_file(&a.model)?;
    let model = io::load_model(&a.model)?;
    let table = a.input.load()?;
    let scores = model.predict(table.features.view())?;
    let mut out = String::from("sample_index,score\n");
    for (i, s) in scores.iter().enumerate() {
        writeln!(out, "{i},{s:.16e}").expect("writing to a String");
    }
    match &a.output {
        Some(p) => fs::write(p, out).map_err(|e| Error::io(p, e)),
        None => {
            print!("{out}");
            Ok(())
        }
    }
}

fn evaluate(a: EvalArgs) -> Result<()> {
    require_file(&a.scores)?;
    require_file(&a.labels)?;
    let scores_table = io::load_csv(&a.scores, true, None)?;
    let col = scores_table
        .column_names
        .as_ref()
        .and_then(|n| n.iter().position(|c| c == "score"))
        .ok_or_else(|| Error::param("scores file has no `score` column"))?;
    let scores: Vec<f64> = scores_table.features.column(col).to_vec();
    let labels = io::load_csv(&a.labels, true, Some(&LabelColumn::Name(a.label_col.clone())))?
        .labels
        .expect("label column requested");
    if labels.len() != scores.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            got: scores.len(),
        });
    }
    let mut obj = serde_json::Map::new();
    if a.metric != Metric::AucPr {
        obj.insert("auc_roc".into(), eval::auc_roc(&scores, &labels)?.into());
    }
    if a.metric != Metric::AucRoc {
        obj.insert("auc_pr".into(), eval::auc_pr(&scores, &labels)?.into());
    }
    obj.insert("n".into(), labels.len().into());
    obj.insert("n_anomalies".into(), labels.iter().filter(|&&l| l).count().into());
    println!("{}", serde_json::Value::Object(obj));
    Ok(())
}

fn synth_toy(a: ToyArgs) -> Result<()> {
    let d = eval::synth_toy(a.n_normal, a.n_anom, a.seed)?;
    io::write_matrix_csv(
        &a.output,
        &["x0".into(), "x1".into(), "label".into()],
        d.dataset.features(),
        Some(&d.labels),
    )
}

fn windows(a: WindowArgs) -> Result<()> {
    require_file(&a.input)?;
    let table = io::load_csv(&a.input, !a.no_header, None)?;
    let cfg = WindowConfig {
        window_len: a.window_len,
        stride: a.stride.unwrap_or(WindowConfig::new(a.window_len).stride),
    };
    let feats = io::window_features(table.features.view(), cfg)?;
    let d = table.features.ncols();
    let names = table
        .column_names
        .unwrap_or_else(|| (0..d).map(|j| format!("x{j}")).collect());
    let header: Vec<String> = names
        .iter()
        .map(|n| format!("mu_{n}"))
        .chain(names.iter().map(|n| format!("sigma_{n}")))
        .collect();
    io::write_matrix_csv(&a.output, &header, feats.view(), None)
}

fn ablate(a: AblateArgs) -> Result<()> {
    if a.input.label_col.is_none() {
        return Err(Error::param("ablate needs --label-col"));
    }
    let data = a.input.load()?.into_labeled()?;
    let mut grid = match a.grid.as_str() {
        "default" => AblationGrid::default(),
        other => return Err(Error::param(format!("unknown grid preset `{other}`"))),
    };
    grid.seed = a.seed;
    if let Some(e) = a.epsilons {
        grid.epsilons = e;
    }
    if let Some(k) = a.ks {
        grid.ks = k;
    }
    if let Some(r) = a.regressors {
        grid.regressors = r.iter().map(|s| s.parse()).collect::<Result<_>>()?;
    }
    let rows = eval::ablation_run(&data, &grid)?;
    let fmt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.16e}"));
    let mut out = String::from("epsilon,k,regressor,auc_roc,auc_pr,converged,error\n");
    for r in &rows {
        eprintln!(
            "eps={} k={} {}: auc_roc={} ({:.3}s)",
            r.epsilon,
            r.k,
            r.regressor,
            r.auc_roc.map_or("failed".into(), |v| format!("{v:.4}")),
            r.runtime_secs
        );
        let err = r.error.as_deref().unwrap_or("").replace(['"', '\n'], "'");
        writeln!(
            out,
            "{},{},{},{},{},{},\"{err}\"",
            r.epsilon,
            r.k,
            r.regressor,
            fmt(r.auc_roc),
            fmt(r.auc_pr),
            r.converged.map_or(String::new(), |c| c.to_string()),
        )
        .expect("writing to a String");
    }
    fs::write(&a.output, out).map_err(|e| Error::io(&a.output, e))?;
    if let Some(p) = &a.json {
        // runtimes are left out so that the file is reproducible
        let rows: Vec<_> = rows
            .iter()
            .map(|r| {
                serde_json::json!({
                    "epsilon": r.epsilon, "k": r.k, "regressor": r.regressor,
                    "auc_roc": r.auc_roc, "auc_pr": r.auc_pr,
                    "converged": r.converged, "error": r.error,
                })
            })
            .collect();
        let text = serde_json::to_string_pretty(&rows).map_err(|e| Error::ModelFormat(e.to_string()))?;
        fs::write(p, text + "\n").map_err(|e| Error::io(p, e))?;
    }
    Ok(())
}
