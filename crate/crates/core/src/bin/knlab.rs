use std::path::PathBuf;

use anyhow::Context;
use clap::Parser;

use kn_gabor::cli::{resolve_output_dir, run, RunOptions, OUTPUT_DIR_ENV};
use kn_gabor::config::load_config;

/// Run one scenario file and write its report.
#[derive(Parser, Debug)]
#[command(name = "knlab", version)]
struct Args {
    /// Scenario TOML file.
    config: PathBuf,

    /// Output directory; overrides `output_dir` in the config.
    #[arg(long, env = OUTPUT_DIR_ENV)]
    out: Option<PathBuf>,

    /// Also write CSV files.
    #[arg(long)]
    dump: bool,

    /// Print the fully resolved configuration and exit.
    #[arg(long)]
    echo: bool,
}

fn main() -> anyhow::Result<()> {
    let args = Args::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cfg = load_config(&args.config).with_context(|| format!("loading {}", args.config.display()))?;
    if args.echo {
        print!("{}", cfg.echo());
        return Ok(());
    }
    let dir = resolve_output_dir(args.out, &cfg);
    let out = run(&cfg, &RunOptions { output_dir: dir.clone(), dump: args.dump })
        .with_context(|| format!("running {}", cfg.command.name()))?;
    println!("{}", serde_json::to_string_pretty(&out.report["results"])?);
    eprintln!("wrote {} files to {}", out.files.len(), dir.display());
    Ok(())
}
