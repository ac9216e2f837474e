use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stacktree::{Family, GeneratorSpec};
use stacktree_cli::{cmd_compare, cmd_generate, cmd_run, Blocks, Failure, RunConfig, DEFAULT_OUT_DIR, OUT_DIR_ENV};

#[derive(Parser)]
#[command(name = "stacktree", version, about = "Multi-target Hoeffding tree benchmark harness")]
struct Cli {
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, env = OUT_DIR_ENV)]
    out: Option<PathBuf>,
    /// Base seed, overriding the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (dataset, variant, seed) cell of a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Rank the variants in a report directory and test the differences.
    Compare {
        /// Directory written by `run`.
        reports: PathBuf,
        #[arg(long, value_enum, default_value = "windows")]
        blocks: Blocks,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Write a generator stream as CSV plus a schema declaration.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// TOML generator spec; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_family)]
    family: Option<Family>,
    #[arg(long)]
    examples: Option<usize>,
    #[arg(long)]
    targets: Option<usize>,
    #[arg(long)]
    noise_sd: Option<f64>,
    /// Base name of the written files.
    #[arg(long, default_value = "stream")]
    name: String,
}

fn parse_family(s: &str) -> Result<Family, String> {
    toml::Value::String(s.replace('-', "_"))
        .try_into()
        .map_err(|_| format!("unknown family `{s}` (friedman_mt, plane_mt, mv_like)"))
}

fn generator_spec(args: &GenerateArgs, seed: Option<u64>) -> Result<GeneratorSpec, Failure> {
    let mut spec = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
            toml::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?
        }
        None => {
            let family = args
                .family
                .ok_or_else(|| Failure::usage("generate needs --family or --config"))?;
            let n = args
                .examples
                .ok_or_else(|| Failure::usage("generate needs --examples or --config"))?;
            GeneratorSpec::new(family, n, 4, 1)
        }
    };
    if let Some(f) = args.family {
        spec.family = f;
    }
    if let Some(n) = args.examples {
        spec.n_examples = n;
    }
    if let Some(d) = args.targets {
        spec.d = d;
    }
    if let Some(s) = args.noise_sd {
        spec.noise_sd = s;
    }
    if let Some(s) = seed {
        spec.seed = s;
    }
    Ok(spec)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code().clamp(0, 255) as u8);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.exit_code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    let jobs = cli.jobs.map(|j| j as usize);
    match cli.command {
        Command::Run { config } => {
            let mut config = RunConfig::load(&config)?;
            if let Some(seed) = cli.seed {
                config.seed = seed;
            }
            let out = cli
                .out
                .or(config.out_dir.clone())
                .unwrap_or_else(|| DEFAULT_OUT_DIR.into());
            let outcome = cmd_run(&config, &out, jobs)?;
            println!(
                "wrote {} run reports and {}",
                outcome.run_files.len(),
                outcome.summary.display()
            );
        }
        Command::Compare { reports, blocks, alpha } => {
            let out = cli.out.unwrap_or_else(|| reports.clone());
            let comparison = cmd_compare(&reports, blocks, alpha, &out)?;
            print!("{}", comparison.text);
        }
        Command::Generate(args) => {
            let spec = generator_spec(&args, cli.seed)?;
            let out = cli.out.unwrap_or_else(|| DEFAULT_OUT_DIR.into());
            let (csv, schema) = cmd_generate(&spec, &args.name, &out)?;
            println!("wrote {} and {}", csv.display(), schema.display());
        }
    }
    Ok(())
}
