use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand};
use kfp_cli::output::{compare_golden, summary_text, write_suite};
use kfp_cli::suites::run_suite;
use kfp_cli::{report, CliError, Config, SUITES};

#[derive(Parser)]
#[command(name = "kfp", about = "Hessian-estimate verification suites for KFP operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one suite (or all) and write CSV/JSON reports
    Run {
        /// TOML config; defaults apply to missing keys
        #[arg(long)]
        config: Option<PathBuf>,
        /// geometry, kernels, harmonics, dyadic, operators, sparse, weights, orlicz, estimates or all
        #[arg(long)]
        suite: String,
        #[arg(long, default_value = "kfp-out")]
        out: PathBuf,
        /// overrides run.seed
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Merge suite summaries of an output directory
    Report {
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(config: Option<&Path>, suite: &str, out: &Path, seed: Option<u64>, threads: Option<usize>) -> Result<Vec<String>, CliError> {
    let mut cfg = match config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(s) = seed {
        cfg.run.seed = s;
    }
    let names: Vec<&str> = match suite {
        "all" => SUITES.to_vec(),
        s if SUITES.contains(&s) => vec![s],
        s => {
            let mut cmd = Cli::command();
            let usage = cmd.render_usage();
            return Err(CliError::Config(format!("unknown suite '{s}'; expected one of {} or all\n{usage}", SUITES.join(", "))));
        }
    };
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().map_err(|e| CliError::Config(e.to_string()))?;
    }
    let mut failed = Vec::new();
    for name in names {
        let o = run_suite(name, &cfg)?;
        write_suite(out, &o, cfg.run.seed)?;
        print!("{}", summary_text(&o));
        if let Some(g) = &cfg.run.golden_dir {
            let bad = compare_golden(Path::new(g), &o, cfg.run.golden_rtol)?;
            if !bad.is_empty() {
                return Err(CliError::Golden(bad.join(", ")));
            }
        }
        failed.extend(o.checks.iter().filter(|c| !c.passed).map(|c| format!("{}/{}", name, c.name)));
    }
    Ok(failed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config, suite, out, seed, threads } => run(config.as_deref(), suite, out, *seed, *threads),
        Command::Report { out } => report::report(out).map(|text| {
            print!("{text}");
            Vec::new()
        }),
    };
    match result {
        Ok(failed) if failed.is_empty() => ExitCode::SUCCESS,
        Ok(failed) => {
            eprintln!("assertion failure: {}", failed.join(", "));
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
