//! The `awdr` command line.
//!
//! Exit status: 0 on success, 1 on divergence, a failed check or an I/O
//! error, 2 on a usage error. Usage errors are detected before anything is
//! written.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use awdr_core::harness::{
    bench_function, default_start, run_grad_check, train_toy, tune_lr, GradCheckTarget,
    SyntheticSpec, TestFunction,
};
use awdr_core::metrics::MetricsReport;
use awdr_core::netblocks::{compound_scale, grid_search_scaling, ScaleRange};
use awdr_core::optim::{HyperParams, OptimizerKind};
use clap::builder::{PossibleValuesParser, TypedValueParser};
use clap::{Args, Parser, Subcommand};

use crate::config::{CommandName, Format, RunConfig};
use crate::report::{self, BenchJson, BenchSidecar, MetricsJson, ScaleJson, TrainSidecar};

/// Environment variable naming the directory for default and relative
/// output paths.
pub const OUT_DIR_ENV: &str = "AWDR_OUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "awdr",
    version,
    about = "Optimizer benchmarks, toy training, gradient checks, scaling search and metrics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an optimizer on an analytic test function and write its trajectory.
    Bench(BenchArgs),
    /// Train the tiny MLP on the synthetic two-class task and write its history.
    TrainToy(TrainArgs),
    /// Compare analytic and finite-difference gradients on seeded cases.
    GradCheck(GradCheckArgs),
    /// Grid-search compound scaling bases under alpha*beta^2*gamma^2 = 2.
    Scale(ScaleArgs),
    /// Compute classification metrics from a `score,label` CSV file.
    Metrics(MetricsArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Run seed, echoed into every artifact [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file; relative paths resolve against $AWDR_OUT_DIR when set
    #[arg(long)]
    pub out: Option<String>,
    /// Output format [default: from --out extension, else csv]
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// JSON run configuration; flags take precedence over it
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HpArgs {
    /// Learning rate [default: 0.001]
    #[arg(long)]
    pub lr: Option<f64>,
    /// RMSProp squared-gradient decay [default: 0.99]
    #[arg(long)]
    pub rms_decay: Option<f64>,
    /// AdamW first-moment decay [default: 0.9]
    #[arg(long)]
    pub beta1: Option<f64>,
    /// AdamW second-moment decay [default: 0.999]
    #[arg(long)]
    pub beta2: Option<f64>,
    /// Denominator epsilon [default: 1e-8]
    #[arg(long)]
    pub eps: Option<f64>,
    /// Decoupled weight decay [default: 0.01]
    #[arg(long)]
    pub weight_decay: Option<f64>,
    /// Blend coefficient at epoch zero [default: 1]
    #[arg(long)]
    pub beta0: Option<f64>,
    /// Epoch at which the blend reaches pure AdamW [default: 100]
    #[arg(long)]
    pub horizon: Option<u64>,
}

fn optimizer_parser() -> impl clap::builder::TypedValueParser<Value = OptimizerKind> {
    PossibleValuesParser::new(["rmsprop", "adamw", "awdr"])
        .map(|s| s.parse().expect("listed value"))
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Test function (required)
    #[arg(long, value_parser = PossibleValuesParser::new(["quadratic", "rosenbrock"])
        .map(|s| s.parse::<TestFunction>().expect("listed value")))]
    pub function: Option<TestFunction>,
    /// Optimizer (required)
    #[arg(long, value_parser = optimizer_parser())]
    pub optimizer: Option<OptimizerKind>,
    /// Number of updates [default: 10000]
    #[arg(long)]
    pub steps: Option<u64>,
    /// Start point, comma separated [default: seeded ±1 for quadratic, -1.2,1 for rosenbrock]
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    /// Tune over these learning rates, keeping the lowest final value
    #[arg(long, value_delimiter = ',')]
    pub lr_grid: Option<Vec<f64>>,
    #[command(flatten)]
    pub hp: HpArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Optimizer (required)
    #[arg(long, value_parser = optimizer_parser())]
    pub optimizer: Option<OptimizerKind>,
    /// Epochs; also the blend horizon [default: 200]
    #[arg(long)]
    pub epochs: Option<u64>,
    /// Mini-batch size [default: 32]
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Samples per class [default: 200]
    #[arg(long)]
    pub n_per_class: Option<usize>,
    /// Feature dimension [default: 2]
    #[arg(long)]
    pub dim: Option<usize>,
    /// Distance between the class means [default: 6]
    #[arg(long)]
    pub separation: Option<f64>,
    #[command(flatten)]
    pub hp: HpArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct GradCheckArgs {
    /// Loss to check (required)
    #[arg(long, value_parser = PossibleValuesParser::new(["bce", "dfl", "ciou", "mlp"])
        .map(|s| s.parse::<GradCheckTarget>().expect("listed value")))]
    pub loss: Option<GradCheckTarget>,
    /// Number of seeded cases [default: 100]
    #[arg(long)]
    pub cases: Option<usize>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct ScaleArgs {
    /// Grid step [default: 0.05]
    #[arg(long)]
    pub step: Option<f64>,
    /// Lower bound of every base [default: 1]
    #[arg(long)]
    pub min: Option<f64>,
    /// Upper bound of every base [default: 1.5]
    #[arg(long)]
    pub max: Option<f64>,
    /// Compound coefficient for the reported multipliers [default: 1]
    #[arg(long)]
    pub phi: Option<f64>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// CSV file with a `score,label` header (required)
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Scores at or above this count as positive [default: 0.5]
    #[arg(long)]
    pub threshold: Option<f64>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Io(String),
    /// Divergence or a failed check; artifacts are still written.
    Flagged(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Io(_) | Failure::Flagged(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Io(m) | Failure::Flagged(m) => m,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

/// Runs one invocation, reading the output directory from `AWDR_OUT_DIR`.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let out_dir = std::env::var_os(OUT_DIR_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from);
    run_with_out_dir(argv, out_dir.as_deref(), out, err)
}

/// Runs one invocation with an explicit output directory.
pub fn run_with_out_dir<I, T>(
    argv: I,
    out_dir: Option<&Path>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                2
            } else {
                let _ = write!(out, "{}", e.render());
                0
            };
            return code;
        }
    };
    let ctx = Ctx { out_dir, out };
    let result = match cli.command {
        Command::Bench(a) => ctx.bench(a),
        Command::TrainToy(a) => ctx.train(a),
        Command::GradCheck(a) => ctx.grad_check(a),
        Command::Scale(a) => ctx.scale(a),
        Command::Metrics(a) => ctx.metrics(a),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            let kind = match f {
                Failure::Usage(_) => "usage error",
                Failure::Io(_) => "I/O error",
                Failure::Flagged(_) => "failed",
            };
            let _ = writeln!(err, "awdr: {kind}: {}", f.message());
            f.code()
        }
    }
}

/// Settings shared by every command after merging flags, config and defaults.
struct Resolved {
    config: RunConfig,
    seed: u64,
    format: Format,
    out: Option<PathBuf>,
}

struct Ctx<'a> {
    out_dir: Option<&'a Path>,
    out: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn resolve(&self, command: CommandName, common: &CommonArgs) -> Result<Resolved, Failure> {
        let config = match &common.config {
            Some(p) => {
                let c = RunConfig::load(p).map_err(usage)?;
                c.check_for(command).map_err(usage)?;
                c
            }
            None => RunConfig::default(),
        };
        let seed = common.seed.or(config.seed).unwrap_or(0);
        let out_raw = common.out.clone().or_else(|| config.output_path.clone());
        let format = common.format.or(config.format).unwrap_or_else(|| {
            match out_raw.as_deref().map(Path::new).and_then(Path::extension) {
                Some(e) if e == "json" => Format::Json,
                _ => Format::Csv,
            }
        });
        let out = out_raw.map(|p| self.place(Path::new(&p)));
        Ok(Resolved {
            config,
            seed,
            format,
            out,
        })
    }

    fn place(&self, path: &Path) -> PathBuf {
        match self.out_dir {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path.to_path_buf(),
        }
    }

    fn default_out(&self, stem: &str, format: Format) -> PathBuf {
        self.place(Path::new(&format!("{stem}.{}", format.extension())))
    }

    fn say(&mut self, line: &str) -> Result<(), Failure> {
        writeln!(self.out, "{line}").map_err(|e| Failure::Io(format!("stdout: {e}")))
    }

    fn bench(mut self, a: BenchArgs) -> Result<(), Failure> {
        let r = self.resolve(CommandName::Bench, &a.common)?;
        let c = &r.config;
        let function = a
            .function
            .or(c.function)
            .ok_or_else(|| usage("bench requires --function"))?;
        let optimizer = a
            .optimizer
            .or(c.optimizer)
            .ok_or_else(|| usage("bench requires --optimizer"))?;
        let hp = merge_hp(c.hp, &a.hp)?;
        let steps = a.steps.or(c.steps).unwrap_or(10_000);
        if steps == 0 {
            return Err(usage("--steps must be positive"));
        }
        let x0 =
            a.x0.or_else(|| c.x0.clone())
                .unwrap_or_else(|| default_start(function, r.seed));
        if x0.len() < function.min_dim() || x0.iter().any(|v| !v.is_finite()) {
            return Err(usage(format!(
                "--x0 needs at least {} finite values for {}",
                function.min_dim(),
                function.name()
            )));
        }
        let grid = a.lr_grid.or_else(|| c.lr_grid.clone());
        if let Some(g) = &grid {
            if g.is_empty() || g.iter().any(|&lr| hp.with_lr(lr).validate().is_err()) {
                return Err(usage("--lr-grid needs positive finite learning rates"));
            }
        }
        let path = r
            .out
            .clone()
            .unwrap_or_else(|| self.default_out("bench", r.format));

        let traj = match &grid {
            Some(g) => tune_lr(function, optimizer, &hp, &x0, steps, g),
            None => bench_function(function, optimizer, &hp, &x0, steps),
        }
        .map_err(usage)?;
        let used = hp.with_lr(traj.lr);
        let meta = BenchSidecar::new(&traj, r.seed, &x0, &used);
        match r.format {
            Format::Csv => {
                write_file(&path, &report::trajectory_csv(&traj))?;
                write_file(&sidecar(&path), &report::to_json(&meta))?;
            }
            Format::Json => write_file(
                &path,
                &report::to_json(&BenchJson {
                    meta: meta.clone(),
                    values: traj.values.clone(),
                }),
            )?,
        }
        self.say(&format!(
            "bench function={} optimizer={} lr={} seed={} steps={} final_value={:.6e} diverged={} out={}",
            meta.function,
            meta.optimizer,
            used.lr,
            r.seed,
            steps,
            meta.final_value,
            meta.diverged,
            path.display()
        ))?;
        if traj.diverged {
            return Err(Failure::Flagged(format!(
                "{} diverged on {}",
                meta.optimizer, meta.function
            )));
        }
        Ok(())
    }

    fn train(mut self, a: TrainArgs) -> Result<(), Failure> {
        let r = self.resolve(CommandName::TrainToy, &a.common)?;
        let c = &r.config;
        let optimizer = a
            .optimizer
            .or(c.optimizer)
            .ok_or_else(|| usage("train-toy requires --optimizer"))?;
        let hp = merge_hp(c.hp, &a.hp)?;
        let epochs = a.epochs.or(c.epochs).unwrap_or(200);
        let batch_size = a.batch_size.or(c.batch_size).unwrap_or(32);
        if epochs == 0 || batch_size == 0 {
            return Err(usage("--epochs and --batch-size must be positive"));
        }
        let defaults = SyntheticSpec::default();
        let spec = SyntheticSpec {
            seed: r.seed,
            n_per_class: a
                .n_per_class
                .or(c.n_per_class)
                .unwrap_or(defaults.n_per_class),
            dim: a.dim.or(c.dim).unwrap_or(defaults.dim),
            separation: a.separation.or(c.separation).unwrap_or(defaults.separation),
        };
        spec.validate().map_err(usage)?;
        let path = r
            .out
            .clone()
            .unwrap_or_else(|| self.default_out("train", r.format));

        let history = train_toy(optimizer, &hp, &spec, epochs, batch_size).map_err(usage)?;
        let meta = TrainSidecar::new(&history);
        match r.format {
            Format::Csv => {
                write_file(&path, &report::history_csv(&history))?;
                write_file(&sidecar(&path), &report::to_json(&meta))?;
            }
            Format::Json => write_file(&path, &report::history_json(&history))?,
        }
        let s = history.summary;
        self.say(&format!(
            "train-toy optimizer={} seed={} epochs={} final_loss={:.6} final_accuracy={:.6} epochs_to_target={} diverged={} out={}",
            meta.optimizer,
            r.seed,
            epochs,
            s.final_loss,
            s.final_accuracy,
            s.epochs_to_target.map_or("none".to_string(), |e| e.to_string()),
            s.diverged,
            path.display()
        ))?;
        if s.diverged {
            return Err(Failure::Flagged(format!("{} diverged", meta.optimizer)));
        }
        Ok(())
    }

    fn grad_check(mut self, a: GradCheckArgs) -> Result<(), Failure> {
        let r = self.resolve(CommandName::GradCheck, &a.common)?;
        let c = &r.config;
        let loss = a
            .loss
            .or(c.loss)
            .ok_or_else(|| usage("grad-check requires --loss"))?;
        let cases = a.cases.or(c.cases).unwrap_or(100);
        if cases == 0 {
            return Err(usage("--cases must be positive"));
        }
        let rep = run_grad_check(loss, cases, r.seed).map_err(usage)?;
        if let Some(path) = &r.out {
            let body = match r.format {
                Format::Json => report::to_json(&rep),
                Format::Csv => format!(
                    "loss,seed,cases,max_rel_error,mean_rel_error,worst_case,passed\n{},{},{},{:.6e},{:.6e},{},{}\n",
                    loss.name(),
                    rep.seed,
                    rep.cases,
                    rep.max_rel_error,
                    rep.mean_rel_error,
                    rep.worst_case,
                    rep.passed()
                ),
            };
            write_file(path, &body)?;
        }
        self.say(&report::grad_check_line(&rep))?;
        if !rep.passed() {
            return Err(Failure::Flagged(format!(
                "{} gradients disagree with finite differences",
                loss.name()
            )));
        }
        Ok(())
    }

    fn scale(mut self, a: ScaleArgs) -> Result<(), Failure> {
        let r = self.resolve(CommandName::Scale, &a.common)?;
        let c = &r.config;
        let step = a.step.or(c.step).unwrap_or(0.05);
        let lo = a.min.or(c.min).unwrap_or(1.0);
        let hi = a.max.or(c.max).unwrap_or(1.5);
        let phi = a.phi.or(c.phi).unwrap_or(1.0);
        if !phi.is_finite() {
            return Err(usage("--phi must be finite"));
        }
        let range = ScaleRange::new(lo, hi);
        let mut triple = grid_search_scaling(step, [range; 3]).map_err(usage)?;
        triple.phi = phi;
        let (depth, width, resolution) = compound_scale(&triple);
        let rec = ScaleJson {
            seed: r.seed,
            step,
            triple,
            constraint: triple.constraint_value(),
            residual: triple.residual(),
            depth,
            width,
            resolution,
        };
        if let Some(path) = &r.out {
            let body = match r.format {
                Format::Json => report::to_json(&rec),
                Format::Csv => {
                    let row = [
                        triple.alpha,
                        triple.beta_w,
                        triple.gamma_r,
                        phi,
                        rec.constraint,
                        rec.residual,
                        depth,
                        width,
                        resolution,
                    ]
                    .map(|v| report::fmt6(Some(v)));
                    format!(
                        "alpha,beta_w,gamma_r,phi,constraint,residual,depth,width,resolution\n{}\n",
                        row.join(",")
                    )
                }
            };
            write_file(path, &body)?;
        }
        let line = serde_json::to_string(&rec).expect("scale record serializes");
        self.say(&line)
    }

    fn metrics(mut self, a: MetricsArgs) -> Result<(), Failure> {
        let r = self.resolve(CommandName::Metrics, &a.common)?;
        let c = &r.config;
        let input = a
            .input
            .or_else(|| c.input.as_ref().map(PathBuf::from))
            .ok_or_else(|| usage("metrics requires --input"))?;
        let threshold = a.threshold.or(c.threshold).unwrap_or(0.5);
        let (scores, labels) = read_scored(&input)?;
        let rep = MetricsReport::from_scores(&scores, &labels, threshold).map_err(usage)?;
        let rec = MetricsJson {
            seed: r.seed,
            threshold,
            samples: scores.len(),
            report: rep,
        };
        if let Some(path) = &r.out {
            let body = match r.format {
                Format::Json => report::to_json(&rec),
                Format::Csv => report::metrics_csv(&rep),
            };
            write_file(path, &body)?;
        }
        let json = serde_json::to_string(&rec).expect("metrics serialize");
        self.say(&json)?;
        let csv = report::metrics_csv(&rep);
        self.say(csv.trim_end())
    }
}

fn merge_hp(base: Option<HyperParams>, f: &HpArgs) -> Result<HyperParams, Failure> {
    let mut hp = base.unwrap_or_default();
    if let Some(v) = f.lr {
        hp.lr = v;
    }
    if let Some(v) = f.rms_decay {
        hp.rms_decay = v;
    }
    if let Some(v) = f.beta1 {
        hp.beta1 = v;
    }
    if let Some(v) = f.beta2 {
        hp.beta2 = v;
    }
    if let Some(v) = f.eps {
        hp.eps = v;
    }
    if let Some(v) = f.weight_decay {
        hp.weight_decay = v;
    }
    if let Some(v) = f.beta0 {
        hp.beta0 = v;
    }
    if let Some(v) = f.horizon {
        hp.horizon_t = v;
    }
    hp.validate().map_err(usage)?;
    Ok(hp)
}

/// `run.csv` -> `run.summary.json`.
pub fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("summary.json")
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn parse_label(s: &str) -> Option<bool> {
    match s.trim() {
        "1" | "true" => Some(true),
        "0" | "false" => Some(false),
        _ => None,
    }
}

/// Reads a `score,label` CSV; labels are 0/1 or true/false.
fn read_scored(path: &Path) -> Result<(Vec<f64>, Vec<bool>), Failure> {
    let shown = path.display();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Failure::Io(format!("{shown}: {e}")),
            _ => usage(format!("{shown}: {e}")),
        })?;
    let headers = reader
        .headers()
        .map_err(|e| usage(format!("{shown}: {e}")))?;
    if headers.iter().collect::<Vec<_>>() != ["score", "label"] {
        return Err(usage(format!("{shown}: header must be `score,label`")));
    }
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| usage(format!("{shown}: {e}")))?;
        let line = i + 2;
        let score: f64 = rec[0]
            .parse()
            .map_err(|_| usage(format!("{shown}:{line}: bad score `{}`", &rec[0])))?;
        let label = parse_label(&rec[1])
            .ok_or_else(|| usage(format!("{shown}:{line}: bad label `{}`", &rec[1])))?;
        scores.push(score);
        labels.push(label);
    }
    Ok((scores, labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn clap_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(
            sidecar(Path::new("a/run.csv")),
            Path::new("a/run.summary.json")
        );
        assert_eq!(sidecar(Path::new("run")), Path::new("run.summary.json"));
    }

    #[test]
    fn flags_override_config_hp() {
        let base = HyperParams::default().with_lr(0.5).with_beta0(0.25);
        let flags = HpArgs {
            lr: Some(0.01),
            rms_decay: None,
            beta1: None,
            beta2: None,
            eps: None,
            weight_decay: None,
            beta0: None,
            horizon: Some(7),
        };
        let hp = merge_hp(Some(base), &flags).unwrap();
        assert_eq!(hp.lr, 0.01);
        assert_eq!(hp.beta0, 0.25);
        assert_eq!(hp.horizon_t, 7);
    }
}
