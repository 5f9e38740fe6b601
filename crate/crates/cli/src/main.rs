mod args;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use biased_games::analysis::{
    half_open_grid, region_scan, svetlichny_curves, threshold_p_star, thresholds_vs_n, write_curves_csv,
    write_region_csv, write_thresholds_csv, CLOSED_FORM_GAP_TOL, GAP_TOL, THRESHOLD_GAP_TOL,
};
use biased_games::classical::{classical_value_chsh, classical_value_svetlichny};
use biased_games::nonsignaling::{ns_value, pr_box, simulate_rounds, BehaviorTable};
use biased_games::quantum::{
    best_strategy, classify_region, joint_no_advantage, quantum_value_chsh, quantum_value_joint_oracle,
    ChshWitness,
};
use biased_games::svetlichny::{quantum_value_svetlichny, MAX_QUANTUM_PARTIES};
use biased_games::{expand_svetlichny, expectation_to_success, BiasPair, GameError, JointBias};

use args::*;

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("{0}")]
    Io(#[from] io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Game(GameError::NoSignChange { .. }) => 4,
            CliError::Game(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Game(GameError::Validation(msg.into()))
}

/// What a subcommand produced: a JSON result, optional CSV, and whether
/// every optimizer run converged.
struct Outcome {
    result: Value,
    csv: Option<Vec<u8>>,
    converged: bool,
}

impl Outcome {
    fn json(result: impl Serialize) -> Result<Self, CliError> {
        Ok(Self {
            result: to_value(result),
            csv: None,
            converged: true,
        })
    }
}

fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).expect("results serialize to JSON")
}

fn check_unit(name: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("--{name} must lie in (0, 1), got {v}")))
    }
}

fn check_parties(n: usize, lo: usize) -> Result<(), CliError> {
    if (lo..=MAX_QUANTUM_PARTIES).contains(&n) {
        Ok(())
    } else {
        Err(invalid(format!("--n must lie in {lo}..={MAX_QUANTUM_PARTIES}, got {n}")))
    }
}

fn check_opt(opt: &OptArgs) -> Result<(), CliError> {
    opt.config().validate().map_err(CliError::from)
}

fn bias_pair(b: &BiasArgs) -> Result<BiasPair, CliError> {
    if b.pij.is_some() {
        return Err(CliError::Usage("this game takes --p and --q, not --pij".into()));
    }
    match (b.p, b.q) {
        (Some(p), Some(q)) => {
            check_unit("p", p)?;
            check_unit("q", q)?;
            Ok(BiasPair::new(p, q)?)
        }
        _ => Err(CliError::Usage("--p and --q are required".into())),
    }
}

fn joint_bias(b: &BiasArgs) -> Result<JointBias, CliError> {
    match (b.pij, b.p, b.q) {
        (Some(cells), None, None) => Ok(JointBias::from_row_major(cells)?),
        (None, Some(_), Some(_)) => Ok(bias_pair(b)?.to_joint()),
        (Some(_), _, _) => Err(CliError::Usage("give either --pij or --p/--q, not both".into())),
        _ => Err(CliError::Usage("a bias is required: --p and --q, or --pij".into())),
    }
}

fn value(a: &ValueArgs) -> Result<Outcome, CliError> {
    if a.game != Game::Svetlichny && a.n.is_some() {
        return Err(CliError::Usage("--n applies only to --game svetlichny".into()));
    }
    check_opt(&a.opt)?;
    match (a.game, a.model) {
        (Game::Chsh, model) => {
            let bias = bias_pair(&a.bias)?;
            let tag = classify_region(bias.p(), bias.q())?;
            let (value, witness) = match model {
                Model::Classical => {
                    let (v, s) = classical_value_chsh(&bias.to_joint());
                    (v, to_value(ChshWitness::Classical(s)))
                }
                Model::Quantum => (quantum_value_chsh(&bias), to_value(best_strategy(&bias))),
                Model::Ns => {
                    let (v, b) = ns_value(&bias.to_joint());
                    (v, json!({ "kind": "ns", "behavior": b }))
                }
            };
            Outcome::json(json!({
                "value": value,
                "success": expectation_to_success(value.clamp(-1.0, 1.0))?,
                "region": tag.region,
                "folded": [tag.r, tag.s],
                "witness": witness,
            }))
        }
        (Game::Joint, model) => {
            let bias = joint_bias(&a.bias)?;
            let condition = joint_no_advantage(&bias).ok();
            let mut converged = true;
            let (value, witness) = match model {
                Model::Classical => {
                    let (v, s) = classical_value_chsh(&bias);
                    (v, to_value(ChshWitness::Classical(s)))
                }
                Model::Quantum => {
                    let r = quantum_value_joint_oracle(&bias, &a.opt.config())?;
                    converged = r.converged;
                    let witness = json!({
                        "kind": "quantum",
                        "strategy": r.strategy(),
                        "starts_used": r.starts_used,
                        "converged": r.converged,
                    });
                    (r.value, witness)
                }
                Model::Ns => {
                    let (v, b) = ns_value(&bias);
                    (v, json!({ "kind": "ns", "behavior": b }))
                }
            };
            Ok(Outcome {
                result: json!({
                    "value": value,
                    "success": expectation_to_success(value.clamp(-1.0, 1.0))?,
                    "condition": condition,
                    "witness": witness,
                }),
                csv: None,
                converged,
            })
        }
        (Game::Svetlichny, model) => {
            let n = a.n.ok_or_else(|| CliError::Usage("--n is required for svetlichny".into()))?;
            check_parties(n, 2)?;
            if a.bias.pij.is_some() || a.bias.q.is_some() {
                return Err(CliError::Usage("svetlichny takes a single --p".into()));
            }
            let p = a.bias.p.ok_or_else(|| CliError::Usage("--p is required".into()))?;
            check_unit("p", p)?;
            match model {
                Model::Classical => {
                    let (v, s) = classical_value_svetlichny(n, p)?;
                    Outcome::json(json!({ "value": v, "witness": s }))
                }
                Model::Quantum => {
                    let r = quantum_value_svetlichny(n, p, &a.opt.config())?;
                    Ok(Outcome {
                        converged: r.converged,
                        result: to_value(&r),
                        csv: None,
                    })
                }
                Model::Ns => Err(GameError::Domain(
                    "the non-signaling model is implemented for two-party games only".into(),
                )
                .into()),
            }
        }
    }
}

fn region(a: &RegionArgs) -> Result<Outcome, CliError> {
    let rows = region_scan(a.grid)?;
    let mut csv = Vec::new();
    write_region_csv(&rows, &mut csv)?;
    Ok(Outcome {
        result: to_value(&rows),
        csv: Some(csv),
        converged: true,
    })
}

fn curves(a: &CurvesArgs) -> Result<Outcome, CliError> {
    check_parties(a.n, 2)?;
    check_opt(&a.opt)?;
    if a.grid == 0 {
        return Err(invalid("--grid must be >= 1"));
    }
    let rows = svetlichny_curves(a.n, &half_open_grid(a.grid), &a.opt.config())?;
    let mut csv = Vec::new();
    write_curves_csv(&rows, &mut csv)?;
    Ok(Outcome {
        converged: rows.iter().all(|r| r.converged),
        result: to_value(&rows),
        csv: Some(csv),
    })
}

fn check_tol(tol: f64) -> Result<(), CliError> {
    if tol.is_finite() && (1e-6..0.5).contains(&tol) {
        Ok(())
    } else {
        Err(invalid(format!("--tol must lie in [1e-6, 0.5), got {tol}")))
    }
}

fn threshold(a: &ThresholdArgs) -> Result<Outcome, CliError> {
    check_parties(a.n, 2)?;
    check_tol(a.tol)?;
    check_opt(&a.opt)?;
    let r = threshold_p_star(a.n, a.tol, &a.opt.config())?;
    let mut csv = Vec::new();
    write_thresholds_csv(std::slice::from_ref(&r), &mut csv)?;
    Ok(Outcome {
        converged: r.converged,
        result: to_value(&r),
        csv: Some(csv),
    })
}

fn thresholds(a: &ThresholdsArgs) -> Result<Outcome, CliError> {
    if !(3..=MAX_QUANTUM_PARTIES).contains(&a.n_max) {
        return Err(invalid(format!("--n-max must lie in 3..={MAX_QUANTUM_PARTIES}, got {}", a.n_max)));
    }
    check_tol(a.tol)?;
    check_opt(&a.opt)?;
    let rows = thresholds_vs_n(a.n_max, a.tol, &a.opt.config())?;
    let mut csv = Vec::new();
    write_thresholds_csv(&rows, &mut csv)?;
    Ok(Outcome {
        converged: rows.iter().all(|r| r.converged),
        result: to_value(&rows),
        csv: Some(csv),
    })
}

fn simulate(a: &SimulateArgs) -> Result<Outcome, CliError> {
    if a.rounds == 0 {
        return Err(invalid("--rounds must be >= 1"));
    }
    check_opt(&a.opt)?;
    let bias = joint_bias(&a.bias)?;
    let mut converged = true;
    let behavior = match a.behavior {
        BehaviorKind::Pr => pr_box(),
        BehaviorKind::Classical => BehaviorTable::deterministic(&classical_value_chsh(&bias).1)?,
        BehaviorKind::Quantum => match a.bias.pij {
            None => match best_strategy(&bias_pair(&a.bias)?) {
                ChshWitness::Quantum(s) => BehaviorTable::from_correlators_uniform(&s.correlators()),
                ChshWitness::Classical(s) => BehaviorTable::deterministic(&s)?,
            },
            Some(_) => {
                let r = quantum_value_joint_oracle(&bias, &a.opt.config())?;
                converged = r.converged;
                BehaviorTable::from_correlators_uniform(&r.strategy().correlators())
            }
        },
    };
    let report = simulate_rounds(&behavior, &bias, a.rounds, a.opt.seed)?;
    let mut result = to_value(&report);
    result["behavior"] = to_value(behavior);
    Ok(Outcome {
        result,
        csv: None,
        converged,
    })
}

fn expand(a: &ExpandArgs) -> Result<Outcome, CliError> {
    check_parties(a.n, 2)?;
    check_unit("p", a.p)?;
    Outcome::json(expand_svetlichny(a.n, a.p)?)
}

fn params(cli: &Cli) -> Value {
    let mut v = match &cli.command {
        Command::Value(a) => to_value(a),
        Command::Region(a) => to_value(a),
        Command::Curves(a) => to_value(a),
        Command::Threshold(a) => to_value(a),
        Command::Thresholds(a) => to_value(a),
        Command::Simulate(a) => to_value(a),
        Command::Expand(a) => to_value(a),
    };
    v["format"] = to_value(cli.format);
    v
}

fn metadata(cli: &Cli) -> Value {
    json!({
        "tool": "biased",
        "version": env!("CARGO_PKG_VERSION"),
        "command": cli.command.name(),
        "params": params(cli),
        "tolerances": {
            "gap_tol": GAP_TOL,
            "closed_form_gap_tol": CLOSED_FORM_GAP_TOL,
            "threshold_gap_tol": THRESHOLD_GAP_TOL,
        },
    })
}

fn write_to(out: Option<&Path>, bytes: &[u8]) -> io::Result<()> {
    match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            w.write_all(bytes)?;
            w.flush()
        }
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()
        }
    }
}

fn pretty(v: &Value) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(v).expect("JSON values serialize");
    bytes.push(b'\n');
    bytes
}

fn execute(cli: &Cli) -> Result<bool, CliError> {
    let outcome = match &cli.command {
        Command::Value(a) => value(a),
        Command::Region(a) => region(a),
        Command::Curves(a) => curves(a),
        Command::Threshold(a) => threshold(a),
        Command::Thresholds(a) => thresholds(a),
        Command::Simulate(a) => simulate(a),
        Command::Expand(a) => expand(a),
    };
    if cli.format == Format::Csv && !matches!(&outcome, Ok(o) if o.csv.is_some()) && outcome.is_ok() {
        return Err(CliError::Usage(format!(
            "`{}` has no CSV schema; use --format json",
            cli.command.name()
        )));
    }
    let outcome = outcome?;
    let mut meta = metadata(cli);
    meta["converged"] = Value::Bool(outcome.converged);
    match (cli.format, outcome.csv) {
        (Format::Csv, Some(csv)) => {
            write_to(cli.out.as_deref(), &csv)?;
            // CSV has no room for metadata; it goes beside the file, or to stderr
            match &cli.out {
                Some(path) => {
                    let mut side = path.as_os_str().to_owned();
                    side.push(".meta.json");
                    write_to(Some(Path::new(&side)), &pretty(&meta))?;
                }
                None => eprint!("{}", String::from_utf8_lossy(&pretty(&meta))),
            }
        }
        _ => {
            meta["result"] = outcome.result;
            write_to(cli.out.as_deref(), &pretty(&meta))?;
        }
    }
    Ok(outcome.converged)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(2),
            };
        }
    };
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("warning: optimizer did not converge within the iteration budget");
            ExitCode::from(4)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
