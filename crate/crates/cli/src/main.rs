mod job;
mod run;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use properclass::suite::SuiteItem;
use properclass::Config;

use job::{parse_job, InvariantName, Job, DEFAULT_WINDOW};
use run::{run, Failure};

/// Proper homotopy classification of maps R^n -> R^k.
///
/// Every command prints a JSON report. Exit status: 0 on success, 1 when a
/// computation fails or a check does not pass, 2 on invalid input.
#[derive(Parser, Debug)]
#[command(name = "properclass", version)]
struct Cli {
    /// Seed for every randomized step; overrides the job file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Run a JSON job file instead of a subcommand.
    #[arg(long)]
    job: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Stability-range check and the set of classes [R^n, R^k].
    Classify { m: u32, n: u32, k: u32 },
    /// Normalize a proper map to the suspension of a sphere map.
    Normalize {
        #[arg(long)]
        map: String,
        #[arg(long, default_value_t = DEFAULT_WINDOW)]
        window: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 2.0, 4.0])]
        radii: Vec<f64>,
    },
    /// Compute an invariant of a sphere map, or the class of a proper map.
    Invariant {
        #[arg(value_enum)]
        name: InvariantName,
        #[arg(long)]
        map: String,
        #[arg(long, default_value_t = DEFAULT_WINDOW)]
        window: f64,
        /// Sample count for the winding number.
        #[arg(long)]
        samples: Option<usize>,
        /// Index of the regular value pair for the Hopf invariant.
        #[arg(long)]
        value_pair: Option<usize>,
    },
    /// Framed preimages and the collapse construction.
    #[command(subcommand)]
    Pontryagin(Pontryagin),
    /// Certify the catalog of realizability and separation counterexamples.
    Counterexamples {
        #[arg(long, value_delimiter = ',', value_parser = parse_item)]
        items: Option<Vec<SuiteItem>>,
        #[arg(long)]
        fiber_step: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_WINDOW)]
        window: f64,
    },
}

#[derive(Subcommand, Debug)]
enum Pontryagin {
    /// Framed preimage points (n = k) or a traced fiber curve (n = k + 1).
    Extract(ExtractArgs),
    /// Build the collapse map of a framed point set.
    Construct {
        /// JSON array of points.
        #[arg(long)]
        points: String,
        /// JSON array of frames, one list of n vectors per point.
        #[arg(long)]
        frames: String,
        /// JSON array: the value whose preimage is the point set.
        #[arg(long)]
        regular_value: String,
        #[arg(long, default_value_t = 0.3)]
        tube_radius: f64,
    },
    /// Whether signed points on the line are the framed zeros of a proper map.
    Realizable {
        #[arg(allow_hyphen_values = true)]
        signs: String,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        positions: Option<Vec<f64>>,
    },
}

#[derive(Args, Debug)]
struct ExtractArgs {
    #[arg(long)]
    map: String,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    value: Option<Vec<f64>>,
    #[arg(long)]
    perturbation: Option<f64>,
    #[arg(long)]
    half_width: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    /// Write the traced fiber as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn parse_item(s: &str) -> Result<SuiteItem, String> {
    serde_json::from_value(Value::String(s.to_string())).map_err(|_| {
        let names: Vec<String> =
            SuiteItem::ALL.iter().map(|i| serde_json::to_value(i).unwrap().as_str().unwrap().to_string()).collect();
        format!("unknown item `{s}`; expected one of {}", names.join(", "))
    })
}

fn parse_json<T: serde::de::DeserializeOwned>(name: &str, s: &str) -> Result<T, String> {
    serde_json::from_str(s).map_err(|e| format!("--{name}: {e}"))
}

fn job_from_command(cmd: Command) -> Result<Job, String> {
    Ok(match cmd {
        Command::Classify { m, n, k } => Job::Classify { m, n, k },
        Command::Normalize { map, window, radii } => Job::Normalize { map, window, radii },
        Command::Invariant { name, map, window, samples, value_pair } => {
            Job::Invariant { name, map, window, samples, value_pair }
        }
        Command::Pontryagin(Pontryagin::Extract(a)) => Job::PontryaginExtract {
            map: a.map,
            value: a.value,
            perturbation: a.perturbation,
            half_width: a.half_width,
            step: a.step,
            csv: a.csv,
        },
        Command::Pontryagin(Pontryagin::Construct { points, frames, regular_value, tube_radius }) => {
            Job::PontryaginConstruct {
                points: parse_json("points", &points)?,
                frames: parse_json("frames", &frames)?,
                regular_value: parse_json("regular-value", &regular_value)?,
                tube_radius,
            }
        }
        Command::Pontryagin(Pontryagin::Realizable { signs, positions }) => {
            Job::PontryaginRealizable { signs, positions }
        }
        Command::Counterexamples { items, fiber_step, window } => Job::Counterexamples { items, fiber_step, window },
    })
}

fn emit(envelope: &Value, out: Option<&PathBuf>) -> Result<(), String> {
    let text = serde_json::to_string_pretty(envelope).expect("envelope serializes") + "\n";
    match out {
        Some(p) => fs::write(p, text).map_err(|e| format!("cannot write {}: {e}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let loaded = match (cli.job, cli.command) {
        (Some(_), Some(_)) => Err("--job cannot be combined with a subcommand".to_string()),
        (Some(path), None) => fs::read_to_string(&path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))
            .and_then(|t| parse_job(&t)),
        (None, Some(cmd)) => job_from_command(cmd).map(|job| job::JobFile { job, seed: None, out: None }),
        (None, None) => Err("no subcommand or --job given; see --help".to_string()),
    };
    let seed_hint = loaded.as_ref().ok().and_then(|j| j.seed);
    let cfg = Config::with_seed(cli.seed.or(seed_hint).unwrap_or(Config::default().seed));
    let out = cli.out.or_else(|| loaded.as_ref().ok().and_then(|j| j.out.clone()));

    let mut envelope = json!({
        "schema": "v1",
        "command": loaded.as_ref().ok().map(|j| j.job.command()),
        "seed": cfg.seed,
        "tolerances": serde_json::to_value(&cfg.tol).expect("tolerances serialize"),
    });
    let (key, body, code) = match loaded.map_err(Failure::Schema).and_then(|j| run(&j.job, &cfg)) {
        Ok(o) => ("report", o.report, if o.ok { 0 } else { 1 }),
        Err(Failure::Schema(message)) => ("error", json!({ "kind": "schema", "message": message }), 2),
        Err(Failure::Compute(e)) => ("error", json!({ "kind": e.kind(), "message": e.to_string() }), 1),
    };
    envelope[key] = body;
    if let Err(e) = emit(&envelope, out.as_ref()) {
        eprintln!("properclass: {e}");
        return ExitCode::from(1);
    }
    if key == "error" {
        eprintln!("properclass: {}", envelope["error"]["message"].as_str().unwrap_or_default());
    }
    ExitCode::from(code)
}
