use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use honeyx::bench::{self, ExperimentConfig, Method};
use honeyx::binsearch::{self, BinsearchRecord};
use honeyx::deception::DeceptionMatrix;
use honeyx::exact::{self, ExactOptions, ExactRecord};
use honeyx::format::{number, to_json};
use honeyx::game::{self, GameFile, MatrixGame, MixedStrategy, Side};
use honeyx::victim::Mode;
use honeyx::Matrix;

/// Deceptive payoff announcements in zero-sum matrix games.
#[derive(Parser, Debug)]
#[command(name = "honeyx", version)]
struct Cli {
    /// Seed for random instances.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format; bench defaults to CSV, the other commands to JSON.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SolveMethod {
    Exact,
    Binsearch,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Value and security policies of a game.
    Solve { game: PathBuf },
    /// Compute a deceptive announcement under a budget.
    Deceive {
        game: PathBuf,
        #[arg(long, value_enum, default_value_t = SolveMethod::Binsearch)]
        method: SolveMethod,
        #[arg(long, allow_negative_numbers = true)]
        budget: f64,
        /// Bisection tolerance.
        #[arg(long, default_value_t = binsearch::DEFAULT_TOLERANCE)]
        tol: f64,
        /// Also report the guaranteed bound of the bisection solution.
        #[arg(long)]
        robustify: bool,
        #[command(flatten)]
        limits: Limits,
    },
    /// Outcome and improvement of a deception against a rational victim.
    Eval {
        game: PathBuf,
        solution: PathBuf,
        #[arg(long, default_value = "optimistic")]
        mode: String,
        /// Budget to check the deception against; defaults to the file's.
        #[arg(long, allow_negative_numbers = true)]
        budget: Option<f64>,
    },
    /// Experiment sweeps on random games, written as CSV.
    Bench {
        #[arg(value_enum)]
        sweep: Sweep,
        #[command(flatten)]
        config: BenchArgs,
    },
}

#[derive(Args, Debug)]
struct Limits {
    #[arg(long, default_value_t = 1e-6)]
    gap_tol: f64,
    #[arg(long, default_value_t = 1_000_000)]
    node_limit: usize,
    /// Seconds.
    #[arg(long, default_value_t = 600.0)]
    time_limit: f64,
}

impl Limits {
    fn options(&self) -> anyhow::Result<ExactOptions> {
        if !(self.time_limit.is_finite() && self.time_limit > 0.0) {
            return Err(honeyx::Error::InvalidArgument(format!("time limit must be positive, got {}", self.time_limit)).into());
        }
        Ok(ExactOptions {
            gap_tol: self.gap_tol,
            node_limit: self.node_limit,
            time_limit: Duration::from_secs_f64(self.time_limit),
            ..ExactOptions::default()
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Sweep {
    Budget,
    Size,
    Tol,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, default_value_t = 5)]
    m: usize,
    #[arg(long, default_value_t = 5)]
    n: usize,
    #[arg(long, default_value_t = 20)]
    samples: usize,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_value = "0,0.5,1,1.5,2,2.5,3")]
    budgets: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.001")]
    deltas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "2,3,4,5,6")]
    sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "exact,binsearch,binsearch_robust")]
    methods: Vec<String>,
    #[arg(long, default_value = "optimistic")]
    mode: String,
    #[command(flatten)]
    limits: Limits,
    /// Also write per-cell means and standard deviations here.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Also write a chart of the summary here.
    #[arg(long)]
    svg: Option<PathBuf>,
}

/// Failure classes mapped to the process exit status.
enum Failure {
    Input(anyhow::Error),
    Solver(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast_ref::<honeyx::Error>() {
            Some(honeyx::Error::SolverFailure(_)) => Failure::Solver(e),
            _ => Failure::Input(e),
        }
    }
}

fn read_json(path: &Path) -> anyhow::Result<Value> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("{} is not valid JSON", path.display()))
}

fn read_game(path: &Path) -> anyhow::Result<MatrixGame> {
    let file: GameFile = serde_json::from_value(read_json(path)?).with_context(|| format!("{} is not a game file", path.display()))?;
    Ok(MatrixGame::try_from(file)?)
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

/// One JSON object, or a two-line CSV of its scalar and vector fields.
fn render(value: &Value, format: Format) -> anyhow::Result<String> {
    match format {
        Format::Json => Ok(to_json(value)? + "\n"),
        Format::Csv => {
            let obj = value.as_object().ok_or_else(|| anyhow!("expected an object"))?;
            let cell = |v: &Value| -> String {
                match v {
                    Value::Number(x) => x.as_f64().map(number).unwrap_or_else(|| x.to_string()),
                    Value::String(s) => s.clone(),
                    Value::Null => String::new(),
                    Value::Array(items) => items.iter().map(|i| match i {
                        Value::Array(row) => row.iter().map(|x| x.as_f64().map(number).unwrap_or_default()).collect::<Vec<_>>().join(" "),
                        other => other.as_f64().map(number).unwrap_or_default(),
                    }).collect::<Vec<_>>().join(";"),
                    other => other.to_string(),
                }
            };
            let keys: Vec<&str> = obj.keys().map(String::as_str).collect();
            let vals: Vec<String> = obj.values().map(cell).collect();
            Ok(format!("{}\n{}\n", keys.join(","), vals.join(",")))
        }
    }
}

fn cmd_solve(cli: &Cli, path: &Path) -> Result<(), Failure> {
    let g = read_game(path)?;
    let s = game::solve_game(&g).map_err(anyhow::Error::from)?;
    let value = json!({
        "schema": 1,
        "value": s.value,
        "row_policy": s.row_policy.probs(),
        "col_policy": s.col_policy.probs(),
    });
    emit(cli.out.as_deref(), &render(&value, cli.format.unwrap_or(Format::Json))?)?;
    Ok(())
}

fn cmd_deceive(cli: &Cli, path: &Path, method: SolveMethod, budget: f64, tol: f64, robust: bool, limits: &Limits) -> Result<(), Failure> {
    let g = read_game(path)?;
    let value = match method {
        SolveMethod::Exact => {
            let s = exact::solve_exact(&g, budget, &limits.options()?).map_err(anyhow::Error::from)?;
            serde_json::to_value(ExactRecord::from(&s)).map_err(anyhow::Error::from)?
        }
        SolveMethod::Binsearch => {
            let mut s = binsearch::solve_feasible(&g, budget, tol).map_err(anyhow::Error::from)?;
            if robust {
                binsearch::robustify(&g, &mut s).map_err(anyhow::Error::from)?;
            }
            serde_json::to_value(BinsearchRecord::from(&s)).map_err(anyhow::Error::from)?
        }
    };
    emit(cli.out.as_deref(), &render(&value, cli.format.unwrap_or(Format::Json))?)?;
    Ok(())
}

fn cmd_eval(cli: &Cli, game_path: &Path, solution: &Path, mode: &str, budget: Option<f64>) -> Result<(), Failure> {
    let g = read_game(game_path)?;
    let mode: Mode = mode.parse().map_err(anyhow::Error::from)?;
    let sol = read_json(solution)?;
    let x: Vec<f64> = serde_json::from_value(sol.get("x").cloned().ok_or_else(|| anyhow!("solution has no \"x\""))?)
        .context("\"x\" must be a list of numbers")?;
    let d: Vec<Vec<f64>> = serde_json::from_value(sol.get("D").cloned().ok_or_else(|| anyhow!("solution has no \"D\""))?)
        .context("\"D\" must be a list of rows")?;
    let budget = match budget {
        Some(b) => b,
        None => sol
            .get("budget")
            .and_then(Value::as_f64)
            .ok_or_else(|| anyhow!("solution has no \"budget\"; pass --budget"))?,
    };
    let x = MixedStrategy::new(x, Side::Row).map_err(anyhow::Error::from)?;
    let d = DeceptionMatrix::new(Matrix::from_rows(&d).map_err(anyhow::Error::from)?, budget).map_err(anyhow::Error::from)?;
    let (outcome, improvement) = bench::evaluate_deception(&g, &x, &d, mode).map_err(anyhow::Error::from)?;
    let value = json!({
        "schema": 1,
        "mode": match mode { Mode::Optimistic => "optimistic", Mode::Pessimistic => "pessimistic" },
        "honest_value": outcome + improvement,
        "outcome": outcome,
        "improvement": improvement,
    });
    emit(cli.out.as_deref(), &render(&value, cli.format.unwrap_or(Format::Json))?)?;
    Ok(())
}

fn cmd_bench(cli: &Cli, sweep: Sweep, args: &BenchArgs) -> Result<(), Failure> {
    let methods = args
        .methods
        .iter()
        .map(|m| m.parse::<Method>())
        .collect::<honeyx::Result<Vec<_>>>()
        .map_err(anyhow::Error::from)?;
    let cfg = ExperimentConfig {
        m: args.m,
        n: args.n,
        samples: args.samples,
        seed: cli.seed,
        budgets: args.budgets.clone(),
        deltas: args.deltas.clone(),
        sizes: args.sizes.clone(),
        methods,
        exact: args.limits.options()?,
        mode: args.mode.parse().map_err(anyhow::Error::from)?,
    };
    cfg.validate().map_err(anyhow::Error::from)?;
    let (records, param, label): (_, fn(&bench::BenchRecord) -> f64, _) = match sweep {
        Sweep::Budget => (bench::sweep_budget(&cfg), |r| r.budget, "budget"),
        Sweep::Size => (bench::sweep_size(&cfg), |r| r.m as f64, "size"),
        Sweep::Tol => (bench::sweep_tolerance(&cfg), |r| r.delta.unwrap_or(f64::NAN), "tolerance"),
    };
    let records = records.map_err(anyhow::Error::from)?;
    let mut buf = Vec::new();
    match cli.format.unwrap_or(Format::Csv) {
        Format::Csv => bench::write_records(&mut buf, &records).map_err(anyhow::Error::from)?,
        Format::Json => {
            buf = to_json(&json!({"schema": 1, "records": records})).map_err(anyhow::Error::from)?.into_bytes();
            buf.push(b'\n');
        }
    }
    emit(cli.out.as_deref(), &String::from_utf8(buf).expect("CSV and JSON are UTF-8"))?;

    let summary = bench::summarize(&records, param);
    if let Some(path) = &args.summary {
        let file = fs::File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
        bench::write_summary(file, &summary).map_err(anyhow::Error::from)?;
    }
    if let Some(path) = &args.svg {
        let chart = bench::summary_svg(&summary, label, sweep == Sweep::Tol);
        fs::write(path, chart).with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Solve { game } => cmd_solve(cli, game),
        Command::Deceive {
            game,
            method,
            budget,
            tol,
            robustify,
            limits,
        } => cmd_deceive(cli, game, *method, *budget, *tol, *robustify, limits),
        Command::Eval {
            game,
            solution,
            mode,
            budget,
        } => cmd_eval(cli, game, solution, mode, *budget),
        Command::Bench { sweep, config } => cmd_bench(cli, *sweep, config),
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
