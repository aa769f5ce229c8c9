use clap::{Parser, Subcommand};
use fvshe_cli::manifest::{manifest_path, unix_now, RunManifest};
use fvshe_cli::selftest::Fault;
use fvshe_cli::{config::ExperimentConfig, experiment, formats, plotdata};
use std::path::PathBuf;
use std::process::ExitCode;

/// Finite volume solver and Monte Carlo convergence harness for the
/// stochastic heat equation with multiplicative noise.
#[derive(Parser)]
#[command(name = "fvshe", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a convergence experiment described by a config file.
    Run {
        /// Path to the flat key-value config (see docs/config.md).
        #[arg(long)]
        config: PathBuf,
        /// Override a config key, e.g. --set n_realizations=100. Repeatable;
        /// beats both the file and the FVSHE_SEED environment variable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Cap the worker pool (default: one worker per core).
        #[arg(long)]
        workers: Option<usize>,
        /// Dump realization-0 final fields (reference and every cell) as CSV
        /// into this directory.
        #[arg(long, value_name = "DIR")]
        dump_final: Option<PathBuf>,
    },
    /// Run the fast invariant suite and print one line per check.
    Selftest {
        /// Debug fault injection (`flip-transmissibility`) to verify the
        /// suite catches breakage.
        #[arg(long, hide = true, default_value = "none")]
        inject: String,
    },
    /// Emit log-log plot data files next to a results CSV.
    Plotdata {
        /// Results CSV produced by `run`.
        csv: PathBuf,
    },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            config,
            set,
            workers,
            dump_final,
        } => cmd_run(config, set, workers, dump_final),
        Command::Selftest { inject } => cmd_selftest(&inject),
        Command::Plotdata { csv } => cmd_plotdata(&csv),
    }
}

fn cmd_run(
    config_path: PathBuf,
    set: Vec<String>,
    workers: Option<usize>,
    dump_final: Option<PathBuf>,
) -> ExitCode {
    let started = unix_now();
    let text = match std::fs::read_to_string(&config_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read config `{}`: {e}", config_path.display());
            return ExitCode::FAILURE;
        }
    };
    let mut cfg = match ExperimentConfig::parse(&text) {
        Ok(c) => c,
        Err(errors) => {
            eprintln!("error: config `{}` is invalid:", config_path.display());
            for e in errors {
                eprintln!("  - {e}");
            }
            return ExitCode::FAILURE;
        }
    };

    // seed precedence: --set master_seed > FVSHE_SEED > config file
    let mut seed_source = "config";
    if let Ok(env_seed) = std::env::var("FVSHE_SEED") {
        match env_seed.parse::<u64>() {
            Ok(s) => {
                cfg.master_seed = s;
                seed_source = "env:FVSHE_SEED";
            }
            Err(_) => {
                eprintln!("error: FVSHE_SEED=`{env_seed}` is not a u64");
                return ExitCode::FAILURE;
            }
        }
    }
    let mut applied = Vec::new();
    for kv in &set {
        let Some((k, v)) = kv.split_once('=') else {
            eprintln!("error: --set expects KEY=VALUE, got `{kv}`");
            return ExitCode::FAILURE;
        };
        if let Err(e) = cfg.apply_override(k.trim(), v.trim()) {
            eprintln!("error: override `{kv}`: {e}");
            return ExitCode::FAILURE;
        }
        if k.trim() == "master_seed" {
            seed_source = "override:--set";
        }
        applied.push(format!("{}={}", k.trim(), v.trim()));
    }
    let problems = cfg.validate();
    if !problems.is_empty() {
        eprintln!("error: configuration is invalid after overrides:");
        for p in problems {
            eprintln!("  - {p}");
        }
        return ExitCode::FAILURE;
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build();
    let pool = match pool {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot build worker pool: {e}");
            return ExitCode::FAILURE;
        }
    };

    let result = pool.install(|| experiment::run_table(&cfg));
    let table = match result {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            eprintln!("(partial rows, if any, were flushed to `{}`)", cfg.output.display());
            return ExitCode::FAILURE;
        }
    };

    if let Some(dir) = dump_final {
        if let Err(e) = dump_final_fields(&cfg, &dir) {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }

    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        started_unix: started,
        finished_unix: unix_now(),
        master_seed: cfg.master_seed,
        seed_source: seed_source.to_string(),
        overrides: applied,
        workers: workers.unwrap_or(0),
        output_csv: cfg.output.clone(),
        config: cfg.clone(),
    };
    if let Err(e) = manifest.write_atomic(&manifest_path(&cfg.output)) {
        eprintln!("error: cannot write manifest: {e}");
        return ExitCode::FAILURE;
    }

    println!(
        "wrote {} ({} rows) and {}",
        cfg.output.display(),
        table.rows.len(),
        manifest_path(&cfg.output).display()
    );
    ExitCode::SUCCESS
}

fn dump_final_fields(cfg: &ExperimentConfig, dir: &PathBuf) -> Result<(), String> {
    std::fs::create_dir_all(dir).map_err(|e| format!("cannot create `{}`: {e}", dir.display()))?;
    let (reference, cells) = experiment::capture_realization_zero(cfg).map_err(|e| e.to_string())?;
    let ref_path = dir.join(format!("final_ref_L{}_N{}.csv", cfg.l_max, cfg.n_max));
    std::fs::write(&ref_path, formats::field_to_csv(&reference))
        .map_err(|e| format!("cannot write `{}`: {e}", ref_path.display()))?;
    for ((l, n), field) in cells {
        let path = dir.join(format!("final_L{l}_N{n}.csv"));
        std::fs::write(&path, formats::field_to_csv(&field))
            .map_err(|e| format!("cannot write `{}`: {e}", path.display()))?;
    }
    Ok(())
}

fn cmd_selftest(inject: &str) -> ExitCode {
    let fault = match Fault::parse(inject) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    let ok = fvshe_cli::selftest::run_selftest(fault, |line| println!("{line}"));
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn cmd_plotdata(csv: &PathBuf) -> ExitCode {
    match plotdata::emit_plotdata(csv) {
        Ok((t, s)) => {
            println!("wrote {} and {}", t.display(), s.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
