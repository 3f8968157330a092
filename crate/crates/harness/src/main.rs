use clap::{Parser, Subcommand};
use gibbs_lab::cache::Cache;
use gibbs_lab::config::RunConfig;
use gibbs_lab::{output_dir, run, HarnessError};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "gibbs-lab", version, about = "Zero-temperature Gibbs measure experiments")]
struct Cli {
    /// Worker threads for the compute kernels.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Cache directory (default: $GIBBS_LAB_CACHE or .gibbs-cache).
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        no_cache: bool,
    },
    /// Inspect or maintain the result cache.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Subcommand)]
enum CacheAction {
    List,
    Clear,
    Verify,
}

fn cache_root(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("GIBBS_LAB_CACHE").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(".gibbs-cache"))
}

fn execute(cli: Cli) -> Result<(), HarnessError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| HarnessError::validation(format!("threads: {e}")))?;
    }
    let root = cache_root(cli.cache_dir);
    match cli.cmd {
        Cmd::Run { config, out, no_cache } => {
            let cfg = RunConfig::load(&config)?;
            let out = output_dir(&cfg, out);
            let cache = if no_cache { None } else { Some(Cache::open(&root)?) };
            let m = run(&cfg, &out, cache.as_ref())?;
            println!(
                "[{}] {} in {:.2}s, cache {:?}, outputs in {}",
                m.kind,
                &m.config_hash[..12],
                m.wall_time_seconds,
                m.cache,
                out.display()
            );
        }
        Cmd::Cache { action } => {
            let cache = Cache::open(&root)?;
            match action {
                CacheAction::List => {
                    for e in cache.list()? {
                        println!("{} {} {}", e.hash, e.kind, e.created);
                    }
                }
                CacheAction::Clear => println!("removed {} entries", cache.clear()?),
                CacheAction::Verify => {
                    let r = cache.verify(&mut rand::thread_rng())?;
                    match (r.hash, r.cell) {
                        (None, _) => println!("cache empty"),
                        (Some(h), Some(i)) => println!("{h}: row {i} matches"),
                        (Some(h), None) => println!("{h}: recomputed outputs match"),
                    }
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.machine_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
