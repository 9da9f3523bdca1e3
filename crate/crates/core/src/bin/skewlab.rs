use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;

use skewlab::config::{Construction, RunConfig};
use skewlab::error::Error;
use skewlab::report::{self, ConstructionSummary, SCHEMA_VERSION, SUITES};

#[derive(Parser)]
#[command(
    name = "skewlab",
    version,
    about = "Build and verify bundle-switching skew products"
)]
struct Cli {
    /// JSON run configuration; built-in cat-map defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Restrict to these suites; repeatable.
    #[arg(long, global = true)]
    suite: Vec<String>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate the configuration, rescale ε and summarize the tower.
    Construct,
    VerifyCones,
    /// Bundle switch, domination, sandwich and nested splittings.
    VerifySplitting,
    Lyapunov,
    WitnessIncoherence,
    Profiles {
        #[command(subcommand)]
        action: ProfilesAction,
    },
    /// Run every suite.
    Report,
}

#[derive(Subcommand)]
enum ProfilesAction {
    /// Write `h, τ, ρ` tables as CSV and check the profile.
    Dump,
}

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn config_error(e: &Error) -> ExitCode {
    eprintln!("configuration error: {e}");
    ExitCode::from(EXIT_CONFIG)
}

fn load(cli: &Cli) -> Result<Construction, Error> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.display().to_string();
    }
    cfg.construct()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            return config_error(&Error::ConfigInvalid(e.to_string()));
        }
    }
    let con = match load(&cli) {
        Ok(c) => c,
        Err(e) => return config_error(&e),
    };
    let out = PathBuf::from(&con.config.out);

    let (stem, suites): (&str, Vec<&str>) = match &cli.command {
        Command::Construct => ("construct", vec![]),
        Command::VerifyCones => ("cones", vec!["cones"]),
        Command::VerifySplitting => (
            "splitting",
            vec!["switch", "domination", "sandwich", "nested"],
        ),
        Command::Lyapunov => ("lyapunov", vec!["lyapunov"]),
        Command::WitnessIncoherence => ("incoherence", vec!["incoherence"]),
        Command::Profiles {
            action: ProfilesAction::Dump,
        } => ("profiles", vec!["profiles"]),
        Command::Report => ("report", SUITES.to_vec()),
    };
    for s in &cli.suite {
        if !SUITES.contains(&s.as_str()) {
            return config_error(&Error::ConfigInvalid(format!(
                "unknown suite `{s}`; expected one of {}",
                SUITES.join(", ")
            )));
        }
    }
    let suites: Vec<&str> = if cli.suite.is_empty() {
        suites
    } else {
        suites
            .into_iter()
            .filter(|s| cli.suite.iter().any(|x| x == s))
            .collect()
    };

    if let Command::Construct = cli.command {
        let summary: ConstructionSummary = (&con).into();
        let doc = json!({
            "schema_version": SCHEMA_VERSION,
            "manifest": con.config,
            "construction": summary,
        });
        let path = out.join("construct.json");
        let text = serde_json::to_string_pretty(&doc).expect("summary serializes");
        if let Err(e) = std::fs::create_dir_all(&out).and_then(|_| std::fs::write(&path, text)) {
            eprintln!("{}: {e}", path.display());
            return ExitCode::from(EXIT_FAIL);
        }
        println!(
            "constructed: ε = {}, splitting dims {:?}",
            con.epsilon, summary.bundle_dims
        );
        return ExitCode::SUCCESS;
    }
    if suites.is_empty() {
        return config_error(&Error::ConfigInvalid(format!(
            "no suite of `{stem}` selected"
        )));
    }

    let mut sections = Vec::new();
    let mut exports = report::Exports::default();
    for s in &suites {
        let start = Instant::now();
        match report::run_suite(s, &con) {
            Ok((sec, ex)) => {
                let status = match (&sec.skipped, sec.pass) {
                    (Some(why), _) => format!("skip ({why})"),
                    (None, true) => "pass".into(),
                    (None, false) => "FAIL".into(),
                };
                println!("{s:<12} {status}");
                eprintln!("{s}: {:.2?}", start.elapsed());
                sections.push(sec);
                exports.files.extend(ex.files);
            }
            Err(e @ Error::ConfigInvalid(_)) => return config_error(&e),
            Err(e) => {
                eprintln!("{s}: verification aborted: {e}");
                return ExitCode::from(EXIT_FAIL);
            }
        }
    }
    let pass = sections.iter().all(|s| s.pass);
    let rep = report::VerificationReport {
        schema_version: SCHEMA_VERSION,
        manifest: con.config.clone(),
        construction: (&con).into(),
        sections,
        pass,
    };
    let path = out.join(format!("{stem}.json"));
    let written = exports
        .write(&out)
        .and_then(|_| std::fs::write(&path, rep.to_json()).map_err(Error::from));
    if let Err(e) = written {
        eprintln!("{}: {e}", path.display());
        return ExitCode::from(EXIT_FAIL);
    }
    println!("report written to {}", path.display());
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}
