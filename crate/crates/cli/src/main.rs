use std::fmt::Write as _;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use rmstl::learner::{
    coarse_bins_warning, evaluate_policy, train, EvalSummary, LearnerConfig, QPolicy, QTable,
    SnapshotError,
};
use rmstl::monitor::{rob_truncated, AtomKind, EvalMode, OnlineMonitor};
use rmstl::runtime::{
    evaluate_signal, fmt_g9, policy::SCRIPTED, run_episode, scripted, CsvTable, EpisodeMetrics,
    EpisodeTrace, Policy, RandomPolicy, Role, Task,
};
use rmstl::Signal;
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "rmstl",
    version,
    about = "Reward machines driven by STL robustness monitoring"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a task file and report formulas, atoms and machines.
    Check { task_path: PathBuf },
    /// Replay a recorded trace as a growing signal and print robustness
    /// intervals per step.
    Monitor {
        task_path: PathBuf,
        trace: PathBuf,
        /// Formula to monitor; repeatable. Defaults to every formula.
        #[arg(long = "formula")]
        formulas: Vec<String>,
        /// Evaluation step.
        #[arg(long, default_value_t = 0)]
        at: usize,
        /// Write the interval series as CSV here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run episodes and record traces and metrics.
    Run {
        task_path: PathBuf,
        /// random, scripted:<name> or qtable:<path>.
        #[arg(long, default_value = "random")]
        policy: String,
        #[arg(long, default_value_t = 1)]
        episodes: usize,
        /// Seed of the first episode; episode i uses seed + i.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "traces")]
        out: PathBuf,
    },
    /// Train a tabular Q-learner and report its greedy evaluation.
    Train {
        task_path: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "train-out")]
        out: PathBuf,
    },
    /// Score every formula over a directory of trace CSVs.
    Eval {
        task_path: PathBuf,
        traces: PathBuf,
        /// Directory for eval.json and eval.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Validation(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }
}

type Outcome = Result<String, Failure>;

fn validation(e: impl ToString) -> Failure {
    Failure::Validation(e.to_string())
}

fn runtime(e: impl ToString) -> Failure {
    Failure::Runtime(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Check { task_path } => cmd_check(&task_path),
        Command::Monitor {
            task_path,
            trace,
            formulas,
            at,
            out,
        } => cmd_monitor(&task_path, &trace, &formulas, at, out.as_deref()),
        Command::Run {
            task_path,
            policy,
            episodes,
            seed,
            out,
        } => match seed_override(Some(seed)) {
            Ok(seed) => cmd_run(&task_path, &policy, episodes, seed.unwrap_or(0), &out),
            Err(e) => Err(e),
        },
        Command::Train {
            task_path,
            config,
            seed,
            out,
        } => match seed_override(seed) {
            Ok(seed) => cmd_train(&task_path, config.as_deref(), seed, &out),
            Err(e) => Err(e),
        },
        Command::Eval {
            task_path,
            traces,
            out,
        } => cmd_eval(&task_path, &traces, out.as_deref()),
    };
    match result {
        Ok(report) => {
            print!("{report}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            let (Failure::Validation(m) | Failure::Runtime(m)) = &f;
            eprintln!("error: {m}");
            ExitCode::from(f.code())
        }
    }
}

/// `RMSTL_SEED` wins over the flag.
fn seed_override(flag: Option<u64>) -> Result<Option<u64>, Failure> {
    match std::env::var("RMSTL_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| validation(format!("RMSTL_SEED: `{v}` is not an unsigned integer"))),
        Err(_) => Ok(flag),
    }
}

fn load_task(path: &Path) -> Result<Arc<Task>, Failure> {
    Task::load(path)
        .map(Arc::new)
        .map_err(|e| validation(format!("{}: {e}", path.display())))
}

fn create_dir(path: &Path) -> Result<(), Failure> {
    fs::create_dir_all(path).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn cmd_check(task_path: &Path) -> Outcome {
    let task = load_task(task_path)?;
    let mut r = String::new();
    let _ = writeln!(r, "{}: ok", task_path.display());
    let _ = writeln!(
        r,
        "environment {} (horizon {}, {} actions, observation length {})",
        task.env.id(),
        task.horizon,
        task.action_names.len(),
        task.observation_len()
    );
    let _ = writeln!(r, "\nformulas:");
    for f in &task.formulas {
        let role = match f.role {
            Role::Event => "event",
            Role::Eval => "eval",
        };
        let _ = writeln!(
            r,
            "  {:<14} {:<5} horizon {:<5} {}",
            f.name,
            role,
            f.formula.horizon(),
            f.text
        );
    }
    let _ = writeln!(r, "\natoms:");
    for (i, a) in task.atoms.iter().enumerate() {
        let kind = match a.kind {
            AtomKind::LowerAtLeast => "lo >=",
            AtomKind::UpperAtMost => "hi <=",
        };
        let mode = match a.mode {
            EvalMode::AtOrigin => "origin",
            EvalMode::Sliding => "sliding",
        };
        let _ = writeln!(
            r,
            "  {i:>2} {:<14} {kind} {} ({mode})",
            a.name,
            fmt_g9(a.threshold)
        );
    }
    let _ = writeln!(r, "\nmachines:");
    for m in &task.machines {
        let terminal: Vec<&str> = m
            .states
            .iter()
            .zip(&m.terminal)
            .filter(|(_, &t)| t)
            .map(|(s, _)| s.as_str())
            .collect();
        let _ = writeln!(
            r,
            "  {:<10} {} states, {} transitions, weight {}, initial {}, terminal [{}]",
            m.name,
            m.num_states(),
            m.transitions.len(),
            fmt_g9(m.weight),
            m.states[m.initial],
            terminal.join(", ")
        );
    }
    let names = task.atom_names();
    for o in task.overlaps() {
        let witness: Vec<&str> = o.witness.iter().map(|i| names[i]).collect();
        let _ = writeln!(
            r,
            "warning: machine {} state {}: transitions {} and {} can both fire (e.g. on {{{}}}); the first declared wins",
            o.machine,
            o.state,
            o.first,
            o.second,
            witness.join(", ")
        );
    }
    Ok(r)
}

/// Builds the signal from the trace columns. Variables no selected formula
/// reads may be absent and are filled with their lower bound.
fn trace_signal(task: &Task, table: &CsvTable, needed: &[usize]) -> Result<Signal, Failure> {
    let cols: Vec<Option<usize>> = task
        .vars
        .names()
        .enumerate()
        .map(|(i, n)| match table.column(n) {
            Ok(c) => Ok(Some(c)),
            Err(e) if needed.contains(&i) => Err(runtime(e)),
            Err(_) => Ok(None),
        })
        .collect::<Result<_, _>>()?;
    let lows: Vec<f64> = task.vars.iter().map(|d| d.lo).collect();
    let mut s = Signal::new(task.vars.clone());
    for (row_no, row) in table.rows.iter().enumerate() {
        let mut sample = Vec::with_capacity(cols.len());
        for (i, col) in cols.iter().enumerate() {
            let v = match col {
                None => lows[i],
                Some(c) => {
                    let cell = row.get(*c).map(String::as_str).unwrap_or("");
                    cell.trim().parse::<f64>().map_err(|_| {
                        runtime(format!(
                            "row {}, column `{}`: cannot parse `{cell}`",
                            row_no + 1,
                            table.header[*c]
                        ))
                    })?
                }
            };
            sample.push(v);
        }
        s.append(&sample).map_err(runtime)?;
    }
    Ok(s)
}

fn cmd_monitor(
    task_path: &Path,
    trace: &Path,
    names: &[String],
    at: usize,
    out: Option<&Path>,
) -> Outcome {
    let task = load_task(task_path)?;
    let selected: Vec<usize> = if names.is_empty() {
        (0..task.formulas.len()).collect()
    } else {
        names
            .iter()
            .map(|n| {
                task.formulas
                    .iter()
                    .position(|f| &f.name == n)
                    .ok_or_else(|| validation(format!("no formula named `{n}`")))
            })
            .collect::<Result<_, _>>()?
    };
    let file = fs::File::open(trace).map_err(|e| runtime(format!("{}: {e}", trace.display())))?;
    let table = CsvTable::read(file).map_err(runtime)?;
    let mut needed: Vec<usize> = selected
        .iter()
        .flat_map(|&i| task.formulas[i].formula.variables())
        .collect();
    needed.sort_unstable();
    needed.dedup();
    let full = trace_signal(&task, &table, &needed)?;

    let mut monitors: Vec<OnlineMonitor<f64>> = selected
        .iter()
        .map(|&i| {
            OnlineMonitor::new(&task.formulas[i].formula, &task.vars).expect("validated at load")
        })
        .collect();
    let mut series = String::from("samples");
    for &i in &selected {
        let n = &task.formulas[i].name;
        let _ = write!(series, ",lo.{n},hi.{n}");
    }
    series.push('\n');
    let mut growing = Signal::new(task.vars.clone());
    for k in 0..=full.len() {
        if k > 0 {
            growing.append(full.sample(k - 1)).map_err(runtime)?;
        }
        let _ = write!(series, "{k}");
        for m in monitors.iter_mut() {
            let iv = m.interval(&growing, at);
            let _ = write!(series, ",{},{}", fmt_g9(iv.lo), fmt_g9(iv.hi));
        }
        series.push('\n');
    }

    let mut report = String::new();
    match out {
        Some(path) => {
            write_file(path, &series)?;
            let _ = writeln!(
                report,
                "wrote {} interval rows to {}",
                full.len() + 1,
                path.display()
            );
        }
        None => report.push_str(&series),
    }
    for (&i, m) in selected.iter().zip(monitors.iter_mut()) {
        let f = &task.formulas[i];
        let h = f.formula.horizon();
        let iv = m.interval(&full, at);
        if at + h < full.len() {
            let _ = writeln!(report, "{}: robustness at {at} = {}", f.name, fmt_g9(iv.lo));
        } else if at < full.len() {
            let held = rob_truncated(&f.formula, &full, at).map_err(runtime)?;
            let _ = writeln!(
                report,
                "{}: interval at {at} = {iv}; horizon {h} not covered by {} samples, held-last robustness {} (truncated)",
                f.name,
                full.len(),
                fmt_g9(held.value)
            );
        } else {
            let _ = writeln!(
                report,
                "{}: interval at {at} = {iv} (no samples at that step)",
                f.name
            );
        }
    }
    Ok(report)
}

enum PolicyChoice {
    Random,
    Scripted(String),
    Table(QPolicy),
}

impl PolicyChoice {
    fn parse(text: &str, task: &Task) -> Result<Self, Failure> {
        if text == "random" {
            return Ok(Self::Random);
        }
        if let Some(name) = text.strip_prefix("scripted:") {
            if scripted(name, task.env.id()).is_none() {
                return Err(validation(format!(
                    "no scripted policy `{name}` for {} (known: {})",
                    task.env.id(),
                    SCRIPTED.join(", ")
                )));
            }
            return Ok(Self::Scripted(name.to_string()));
        }
        if let Some(path) = text.strip_prefix("qtable:") {
            let file = fs::File::open(path).map_err(|e| runtime(format!("{path}: {e}")))?;
            let (discretizer, q) =
                QTable::read_snapshot(task, BufReader::new(file)).map_err(|e| match e {
                    SnapshotError::Mismatch(_) => runtime(format!("{path}: {e}")),
                    _ => validation(format!("{path}: {e}")),
                })?;
            return Ok(Self::Table(QPolicy { q, discretizer }));
        }
        Err(validation(format!(
            "--policy `{text}`: expected random, scripted:<name> or qtable:<path>"
        )))
    }

    fn build(&self, task: &Task) -> Box<dyn Policy + Send> {
        match self {
            Self::Random => Box::new(RandomPolicy::new(task.action_names.len(), 0)),
            Self::Scripted(name) => scripted(name, task.env.id()).expect("checked when parsed"),
            Self::Table(p) => Box::new(p.clone()),
        }
    }
}

fn cmd_run(task_path: &Path, policy: &str, episodes: usize, seed: u64, out: &Path) -> Outcome {
    let task = load_task(task_path)?;
    let choice = PolicyChoice::parse(policy, &task)?;
    let traces: Vec<EpisodeTrace> = (0..episodes)
        .into_par_iter()
        .map(|i| {
            let mut p = choice.build(&task);
            run_episode(&task, p.as_mut(), seed.wrapping_add(i as u64)).map_err(runtime)
        })
        .collect::<Result<_, _>>()?;
    create_dir(out)?;
    let mut metrics = String::new();
    let mut report = String::new();
    for (i, trace) in traces.iter().enumerate() {
        let mut csv = Vec::new();
        trace.write_csv(&task, &mut csv).map_err(runtime)?;
        write_file(&out.join(format!("episode-{i:04}.csv")), csv)?;
        let m = EpisodeMetrics::of(&task, trace);
        metrics.push_str(&m.to_json_line());
        metrics.push('\n');
        let cause = m.terminal_cause.map_or("running", |c| c.as_str());
        let _ = writeln!(
            report,
            "episode {i} seed {}: {} steps, reward {}, env return {}, {cause}",
            m.seed,
            m.length,
            fmt_g9(m.total_reward),
            fmt_g9(m.env_return)
        );
    }
    write_file(&out.join("metrics.jsonl"), metrics)?;
    let _ = writeln!(
        report,
        "wrote {episodes} traces and metrics.jsonl to {}",
        out.display()
    );
    Ok(report)
}

fn cmd_train(task_path: &Path, config: Option<&Path>, seed: Option<u64>, out: &Path) -> Outcome {
    let task = load_task(task_path)?;
    let mut report = String::new();
    let mut cfg = match config {
        Some(path) => {
            LearnerConfig::load(path).map_err(|e| validation(format!("{}: {e}", path.display())))?
        }
        None => {
            let _ = writeln!(report, "no learner config given; using defaults");
            LearnerConfig::default()
        }
    };
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let disc = cfg.discretizer(&task).map_err(runtime)?;
    if let Some(w) = coarse_bins_warning(&task, &disc) {
        let _ = writeln!(report, "warning: {w}");
    }
    let outcome = train(&task, &cfg).map_err(runtime)?;
    let mut policy = QPolicy {
        q: outcome.q,
        discretizer: outcome.discretizer,
    };
    let records = evaluate_policy(&task, &mut policy, cfg.eval_episodes).map_err(runtime)?;
    let summary = EvalSummary::from_records(&records);

    create_dir(out)?;
    let mut curve = String::new();
    for r in &outcome.curve {
        curve.push_str(&serde_json::to_string(r).map_err(runtime)?);
        curve.push('\n');
    }
    write_file(&out.join("curve.jsonl"), curve)?;
    let mut snapshot = Vec::new();
    policy
        .q
        .write_snapshot(&task, &policy.discretizer, &mut snapshot)
        .map_err(runtime)?;
    write_file(&out.join("qtable.txt"), snapshot)?;
    write_file(
        &out.join("summary.json"),
        serde_json::to_string_pretty(&summary).map_err(runtime)? + "\n",
    )?;

    let _ = writeln!(
        report,
        "trained {} episodes (seed {}), {} table states",
        cfg.episodes,
        cfg.seed,
        policy.q.len()
    );
    let _ = writeln!(
        report,
        "mean reward: {:.3} ± {:.3} over {} greedy episodes",
        summary.mean_reward, summary.std_reward, summary.episodes
    );
    let _ = writeln!(
        report,
        "mean environment return: {:.3} ± {:.3}",
        summary.mean_env_return, summary.std_env_return
    );
    let _ = writeln!(
        report,
        "mean length: {:.1} ± {:.1}",
        summary.mean_length, summary.std_length
    );
    let _ = writeln!(
        report,
        "wrote curve.jsonl, qtable.txt and summary.json to {}",
        out.display()
    );
    Ok(report)
}

#[derive(Serialize)]
struct FormulaRate {
    formula: String,
    episodes: usize,
    satisfied: usize,
    satisfaction_rate: f64,
    mean_robustness: f64,
    std_robustness: f64,
    boundary: usize,
    truncated: usize,
}

fn cmd_eval(task_path: &Path, traces: &Path, out: Option<&Path>) -> Outcome {
    let task = load_task(task_path)?;
    let entries =
        fs::read_dir(traces).map_err(|e| runtime(format!("{}: {e}", traces.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(validation(format!(
            "{}: no trace CSVs found",
            traces.display()
        )));
    }
    let evals: Vec<_> = files
        .par_iter()
        .map(|path| {
            let file =
                fs::File::open(path).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
            let table =
                CsvTable::read(file).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
            let signal = table
                .signal(&task.vars)
                .map_err(|e| runtime(format!("{}: {e}", path.display())))?;
            Ok(evaluate_signal(&task, &signal, false))
        })
        .collect::<Result<_, Failure>>()?;

    let rates: Vec<FormulaRate> = task
        .formulas
        .iter()
        .map(|f| {
            let rows: Vec<_> = evals.iter().filter_map(|e| e.get(&f.name)).collect();
            let rob: Vec<f64> = rows.iter().map(|r| r.robustness).collect();
            let (mean, std) = rmstl::learner::mean_std(&rob);
            let satisfied = rows.iter().filter(|r| r.satisfied).count();
            FormulaRate {
                formula: f.name.clone(),
                episodes: rows.len(),
                satisfied,
                satisfaction_rate: if rows.is_empty() {
                    0.0
                } else {
                    satisfied as f64 / rows.len() as f64
                },
                mean_robustness: mean,
                std_robustness: std,
                boundary: rows.iter().filter(|r| r.boundary).count(),
                truncated: rows.iter().filter(|r| r.truncated).count(),
            }
        })
        .collect();

    let mut csv = String::from("formula,episodes,satisfied,satisfaction_rate,mean_robustness,std_robustness,boundary,truncated\n");
    for r in &rates {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            r.formula,
            r.episodes,
            r.satisfied,
            fmt_g9(r.satisfaction_rate),
            fmt_g9(r.mean_robustness),
            fmt_g9(r.std_robustness),
            r.boundary,
            r.truncated
        );
    }
    let mut report = String::new();
    let _ = writeln!(report, "{} traces", files.len());
    let _ = writeln!(
        report,
        "{:<14} {:>9} {:>12} {:>9} {:>9}",
        "formula", "satisfied", "robustness", "boundary", "truncated"
    );
    for r in &rates {
        let _ = writeln!(
            report,
            "{:<14} {:>8.1}% {:>12.4} {:>9} {:>9}",
            r.formula,
            100.0 * r.satisfaction_rate,
            r.mean_robustness,
            r.boundary,
            r.truncated
        );
    }
    if let Some(dir) = out {
        create_dir(dir)?;
        write_file(
            &dir.join("eval.json"),
            serde_json::to_string_pretty(&rates).map_err(runtime)? + "\n",
        )?;
        write_file(&dir.join("eval.csv"), csv)?;
        let _ = writeln!(report, "wrote eval.json and eval.csv to {}", dir.display());
    }
    Ok(report)
}
