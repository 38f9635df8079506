use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use distal::experiment::{render_table, run_experiment, ExperimentSpec, SumProductRun, ZarankiewiczSweep, BUILD_ID};

#[derive(Parser)]
#[command(name = "distal", version = BUILD_ID, about = "Distal cell decomposition experiments")]
struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "DISTAL_THREADS")]
    threads: Option<usize>,
    /// Directory for CSV/JSON artifacts.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Construct, verify and count cells for every instance of a spec.
    Run {
        #[arg(long)]
        spec: PathBuf,
        /// Overrides the spec's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the distal-density table.
    Table {
        /// Point dimension at which to evaluate the exponents.
        #[arg(long, default_value_t = 1)]
        dim: usize,
    },
    /// Edge-count ratio sweep on grid point-line graphs.
    Zarankiewicz {
        #[arg(long, value_delimiter = ',', default_value = "64,128,256,512")]
        sizes: Vec<usize>,
        /// Number of slopes in the grid construction.
        #[arg(long, default_value_t = 4)]
        slopes: usize,
        /// Recorded in the CSV; the sweep itself is deterministic.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Sum-product and A + B·B incidence identities on random sets.
    Sumproduct {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 40)]
        max_size: usize,
        #[arg(long, default_value_t = 3)]
        prime: u64,
    },
}

fn write(dir: &Path, name: &str, body: &str) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), body)?;
    println!("wrote {}", dir.join(name).display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())).max(1);
    match execute(cli.command, &cli.out_dir, threads) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn execute(command: Command, out_dir: &Path, threads: usize) -> Result<bool, Box<dyn std::error::Error>> {
    match command {
        Command::Run { spec, seed } => {
            let text = std::fs::read_to_string(&spec)?;
            let spec = ExperimentSpec::from_json(&text)?;
            let outcome = run_experiment(&spec, seed, threads)?;
            for p in outcome.write(out_dir)? {
                println!("wrote {}", p.display());
            }
            let s = &outcome.summary;
            println!("{}: slope {:.4} (expected exponent {}, bound {})", s.experiment_id, s.slope, s.expected_exponent, s.max_slope);
            for a in &s.assertions {
                println!("  [{}] {}: {}", if a.passed { "pass" } else { "FAIL" }, a.name, a.detail);
            }
            Ok(s.passed)
        }
        Command::Table { dim } => {
            print!("{}", render_table(dim));
            Ok(true)
        }
        Command::Zarankiewicz { sizes, slopes, seed } => {
            let sweep = ZarankiewiczSweep::run(&sizes, slopes, threads)?;
            write(out_dir, "zarankiewicz.csv", &sweep.csv(seed))?;
            for r in &sweep.reports {
                println!("{}: m = {}, n = {}, |E| = {}, ratio {:.6}", r.experiment, r.m, r.n, r.edges, r.ratio);
            }
            match sweep.growth {
                Some(g) => println!("last-three growth {:.4}%", 100.0 * g),
                None => println!("fewer than three sizes, growth not defined"),
            }
            Ok(sweep.bounded())
        }
        Command::Sumproduct { seed, trials, max_size, prime } => {
            let run = SumProductRun::run(seed, trials, max_size, prime, threads)?;
            write(out_dir, "sumproduct.csv", &run.products_csv())?;
            write(out_dir, "sum_bb.csv", &run.sum_bb_csv())?;
            let bad = run.products.iter().filter(|r| !r.holds).count() + run.sum_bb.iter().filter(|r| !r.identity_holds).count();
            println!("{} sum-product rows, {} A + B·B rows, {bad} failing", run.products.len(), run.sum_bb.len());
            Ok(run.all_hold())
        }
    }
}
