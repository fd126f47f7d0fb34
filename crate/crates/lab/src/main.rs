use ballot_lab::campaigns;
use ballot_lab::report::emit_report;
use ballot_lab::{ExperimentConfig, ExperimentKind, LabError};
use clap::Parser;
use std::path::PathBuf;
use std::process::ExitCode;

/// Run a verification campaign and write CSV/JSON reports.
#[derive(Parser, Debug)]
#[command(name = "ballot-lab", version)]
struct Cli {
    #[arg(value_enum)]
    campaign: ExperimentKind,
    /// JSON configuration; defaults are used when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    trials: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, LabError> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::from_json(&std::fs::read_to_string(p)?)?,
        None => ExperimentConfig::new(cli.campaign),
    };
    if cfg.kind != cli.campaign {
        return Err(LabError::Config(format!("config is for `{}`, not `{}`", cfg.kind.name(), cli.campaign.name())));
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.trials {
        cfg.trials = t;
    }
    if let Some(o) = &cli.out {
        cfg.out = Some(o.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), LabError> {
    let cfg = load(&cli)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| LabError::Config(e.to_string()))?;
    let output = pool.install(|| campaigns::run(&cfg))?;
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let stem = format!("{}-{}", cfg.kind.name(), &cfg.hash()[..12]);
    let emitted = emit_report(&output.report(&cfg), &dir, &stem, output.plot.as_ref())?;
    println!("{}", serde_json::to_string_pretty(&output.summary)?);
    for line in &output.footer {
        println!("note: {line}");
    }
    println!("wrote {}", emitted.csv.display());
    println!("wrote {}", emitted.json.display());
    if let Some(p) = emitted.plot {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
