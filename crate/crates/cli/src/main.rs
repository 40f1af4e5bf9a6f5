//! `maxrel`: analyse and solve maximal-reliability models from JSON files.
//!
//! Reports go to stdout as JSON, a short human summary goes to stderr. Exit status is 0 on success,
//! 1 for domain errors (reported as `{"error": {"code", "message"}}` on stdout) and 2 for usage or
//! I/O problems.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use maxrel::model::DEFAULT_ROW_SUM_TOL;
use maxrel::oracle::{run_oracles, ORACLE_TOL};
use maxrel::report;
use maxrel::scalar::format_sig17;
use maxrel::{
    compute_largest_absorbing, evaluate_in_class, evaluate_policy_pes, membership_test,
    simulate_survival, solve, AnyModel, Error, EvalOptions, ModelSpec, OracleOptions, RawModel,
    Scalar, SolveOptions, StationaryPolicy,
};

#[derive(Parser, Debug)]
#[command(
    name = "maxrel",
    version,
    about = "Maximal reliability of controlled Markov systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a model file and print its size.
    Validate(Common),
    /// Compute the largest absorbing set and the restricted actions.
    Absorbing(Common),
    /// Find a policy with minimal failure probability in every state.
    Solve(Common),
    /// Failure probabilities of a given policy.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Policy file: JSON object from state name to action name.
        #[arg(long)]
        policy: PathBuf,
    },
    /// Cross-check the solver against value iteration and exhaustive search.
    Oracle(Common),
    /// Monte-Carlo estimate of the probability of failing within a horizon.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        policy: PathBuf,
        /// Starting state name.
        #[arg(long)]
        state: String,
        #[arg(long)]
        horizon: usize,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
    },
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Model file.
    model: PathBuf,
    /// Use exact rational arithmetic regardless of the file's `arithmetic` field.
    #[arg(long)]
    exact: bool,
    /// Stopping tolerance of the fixed-point iterations (policy evaluation and value iteration).
    #[arg(long)]
    tol: Option<f64>,
    /// Iteration budget of the fixed-point iterations.
    #[arg(long)]
    max_iters: Option<usize>,
    /// Minimum decrease that counts as an improvement in policy iteration.
    #[arg(long, default_value_t = 1e-12)]
    improve_eps: f64,
    /// Starting policy for policy iteration.
    #[arg(long)]
    initial_policy: Option<PathBuf>,
    /// Largest number of policies the exhaustive search may visit.
    #[arg(long, default_value_t = maxrel::absorbing::DEFAULT_ENUM_CAP)]
    enum_cap: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

enum Failure {
    Domain(Error),
    /// Domain-level failure with its own report, e.g. oracle disagreement.
    Report(Value, String),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

struct Outcome {
    report: Value,
    summary: String,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::Usage(format!("cannot parse {}: {e}", path.display())))
}

fn read_policy<T: Scalar>(model: &ModelSpec<T>, path: &Path) -> Result<StationaryPolicy, Failure> {
    let names: BTreeMap<String, String> = read_json(path)?;
    Ok(StationaryPolicy::from_names(model, &names)?)
}

impl Common {
    fn eval_options(&self) -> EvalOptions {
        let defaults = EvalOptions::default();
        EvalOptions {
            tol: self.tol.unwrap_or(defaults.tol),
            max_iters: self.max_iters.unwrap_or(defaults.max_iters),
            ..defaults
        }
    }

    fn solve_options<T: Scalar>(&self, model: &ModelSpec<T>) -> Result<SolveOptions, Failure> {
        let initial_policy = match &self.initial_policy {
            Some(path) => Some(read_policy(model, path)?),
            None => None,
        };
        Ok(SolveOptions {
            eval: self.eval_options(),
            improve_eps: self.improve_eps,
            initial_policy,
            ..SolveOptions::default()
        })
    }

    fn oracle_options(&self) -> OracleOptions {
        let defaults = OracleOptions::default();
        OracleOptions {
            vi_tol: self.tol.unwrap_or(defaults.vi_tol),
            vi_max_iters: self.max_iters.unwrap_or(defaults.vi_max_iters),
            eval: self.eval_options(),
            enum_cap: self.enum_cap,
            ..defaults
        }
    }
}

fn show<T: Scalar>(x: &T) -> String {
    if T::is_exact() {
        format!("{} (≈ {})", x.render(), format_sig17(x.to_f64()))
    } else {
        x.render()
    }
}

fn vector_lines<T: Scalar>(model: &ModelSpec<T>, label: &str, values: &[T]) -> String {
    model
        .survivors()
        .map(|i| {
            format!(
                "  {label}[{}] = {}\n",
                model.state_name(i),
                show(&values[i.0])
            )
        })
        .collect()
}

fn policy_line<T: Scalar>(model: &ModelSpec<T>, policy: &StationaryPolicy) -> String {
    model
        .survivors()
        .map(|i| {
            format!(
                "{}:{}",
                model.state_name(i),
                model.action_name(policy.action(i))
            )
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn set_line<T: Scalar>(model: &ModelSpec<T>, set: &maxrel::StateSet) -> String {
    let names: Vec<&str> = set
        .ones()
        .map(|j| model.state_name(maxrel::StateId(j)))
        .collect();
    format!("{{{}}}", names.join(", "))
}

fn run<T: Scalar>(model: &ModelSpec<T>, command: &Command) -> Result<Outcome, Failure> {
    match command {
        Command::Validate(_) => Ok(Outcome {
            report: report::validate_json(model),
            summary: format!(
                "valid model: {} states, {} failed, {} state-action pairs, {} arithmetic",
                model.n_states(),
                model.failed().count_ones(..),
                model.n_pairs(),
                model.mode().as_str()
            ),
        }),
        Command::Absorbing(_) => {
            let analysis = compute_largest_absorbing(model);
            Ok(Outcome {
                report: report::analysis_json(model, &analysis),
                summary: format!(
                    "F* = {}, G* = {}, {} peeling layers",
                    set_line(model, &analysis.f_star),
                    set_line(model, &analysis.g_star),
                    analysis.n_star
                ),
            })
        }
        Command::Solve(common) => {
            let opts = common.solve_options(model)?;
            let start = Instant::now();
            let rep = solve(model, &opts)?;
            let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
            let summary = format!(
                "{:?} after {} evaluation(s); policy {}\n{}",
                rep.termination,
                rep.iterations.len(),
                policy_line(model, &rep.final_policy),
                vector_lines(model, "q*", rep.q_star.values()).trim_end()
            );
            Ok(Outcome {
                report: report::solve_json(model, &rep, wall_time_ms),
                summary,
            })
        }
        Command::Evaluate { common, policy } => {
            let policy = read_policy(model, policy)?;
            let analysis = compute_largest_absorbing(model);
            let in_class = membership_test(&analysis, &policy)?;
            let opts = common.eval_options();
            let q = if in_class {
                evaluate_in_class(model, &analysis, &policy, &opts)?
            } else {
                evaluate_policy_pes(model, &policy, &opts)?
            };
            let mut summary = vector_lines(model, "q", q.values());
            if !in_class {
                summary.push_str("  warning: policy is outside the restricted class; minimal solution reported\n");
            }
            Ok(Outcome {
                report: report::evaluate_json(model, &policy, &q, in_class),
                summary: summary.trim_end().to_string(),
            })
        }
        Command::Oracle(common) => {
            let start = Instant::now();
            let rep = solve(model, &common.solve_options(model)?)?;
            let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
            let oracle = run_oracles(model, &common.oracle_options())?;
            let vi_gap = oracle
                .q_star_vi
                .max_gap(&maxrel::FailureVector::new(rep.q_star.to_f64()));
            let enum_ok = match &oracle.q_star_enum {
                Some(q) => q.max_gap(&rep.q_star) <= T::tolerance(ORACLE_TOL),
                None => true,
            };
            let agree = vi_gap <= ORACLE_TOL && enum_ok;
            let mut out = report::solve_json(model, &rep, wall_time_ms);
            let oracle_part = report::oracle_json(model, &oracle, &rep.q_star, ORACLE_TOL, agree);
            out["oracle"] = oracle_part["oracle"].clone();
            let summary = format!(
                "oracles {}: value iteration gap {:e}, exhaustive search {}",
                if agree { "agree" } else { "DISAGREE" },
                vi_gap,
                match (&oracle.q_star_enum, enum_ok) {
                    (None, _) => "skipped (policy space above cap)",
                    (Some(_), true) => "matches",
                    (Some(_), false) => "differs",
                }
            );
            if agree {
                Ok(Outcome {
                    report: out,
                    summary,
                })
            } else {
                Err(Failure::Report(out, summary))
            }
        }
        Command::Simulate {
            common,
            policy,
            state,
            horizon,
            trials,
        } => {
            let policy = read_policy(model, policy)?;
            let start = model
                .state_id(state)
                .ok_or_else(|| Error::UnknownStateOrAction(format!("state `{state}`")))?;
            let est = simulate_survival(model, &policy, start, *horizon, *trials, common.seed)?;
            Ok(Outcome {
                report: report::simulation_json(model, &est, common.seed),
                summary: format!(
                    "P({state} fails within {horizon}) ≈ {} ± {} ({} of {} trials)",
                    format_sig17(est.estimate),
                    format_sig17(est.half_width_95),
                    est.hit_count,
                    est.trials
                ),
            })
        }
    }
}

fn common(command: &Command) -> &Common {
    match command {
        Command::Validate(c) | Command::Absorbing(c) | Command::Solve(c) | Command::Oracle(c) => c,
        Command::Evaluate { common, .. } | Command::Simulate { common, .. } => common,
    }
}

fn execute(command: &Command) -> Result<Outcome, Failure> {
    let c = common(command);
    let raw: RawModel = read_json(&c.model)?;
    match AnyModel::from_raw(&raw, c.exact, DEFAULT_ROW_SUM_TOL)? {
        AnyModel::Float(m) => run(&m, command),
        AnyModel::Exact(m) => run(&m, command),
    }
}

fn print_json(v: &Value) {
    use std::io::Write;
    let text = serde_json::to_string_pretty(v).expect("reports serialize");
    // a closed pipe downstream is not an error of ours
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(out) => {
            print_json(&out.report);
            eprintln!("{}", out.summary);
            ExitCode::SUCCESS
        }
        Err(Failure::Domain(e)) => {
            print_json(&report::error_json(&e));
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Report(v, summary)) => {
            print_json(&v);
            eprintln!("{summary}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
