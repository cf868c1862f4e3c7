use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use leosim::io::analysis::{aggregate_run, cka_run};
use leosim::io::charts::render_run_charts;
use leosim::io::compare::{compare_runs, write_comparison};
use leosim::io::config::parse_set;
use leosim::io::run::{run_scenario, CHARTS_DIR};
use leosim::io::{Manifest, ScenarioConfig};
use leosim::postlearn::AggregationTier;
use leosim::{Error, Result};

#[derive(Parser)]
#[command(name = "leosim", version, about = "LEO constellation packet routing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its artifacts.
    Run {
        #[arg(short, long)]
        config: Option<PathBuf>,
        /// Override a setting, e.g. `--set routing.policy=madrl`. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
        /// Output directory (same as `--set output.dir=...`).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Re-render charts for a finished run.
    Charts {
        run_dir: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Compare latency across runs of the same scenario.
    Compare {
        #[arg(required = true, num_args = 1..)]
        runs: Vec<PathBuf>,
        #[arg(short, long, default_value = "comparison")]
        out: PathBuf,
        /// Time bin width in seconds.
        #[arg(long)]
        bin_width: Option<f64>,
    },
    /// Average the agent models of an online run.
    Aggregate {
        run_dir: PathBuf,
        /// model_anticipation, orbital_plane, full_constellation or all.
        #[arg(long, default_value = "all")]
        tier: String,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Pairwise representation similarity of agent models.
    Cka {
        /// Run directory or directory of agent models.
        path: PathBuf,
        #[arg(long)]
        probes: Option<PathBuf>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, sets, out } => {
            let mut pairs = sets.iter().map(|s| parse_set(s)).collect::<Result<Vec<_>>>()?;
            if let Some(o) = out {
                pairs.push(("output.dir".into(), format!("{:?}", o.display().to_string())));
            }
            let cfg = ScenarioConfig::load(config.as_deref(), &pairs)?;
            let r = run_scenario(&cfg)?;
            let s = &r.summary;
            println!("policy      {}", r.policy);
            println!("output      {}", r.dir.display());
            println!(
                "packets     created {} delivered {} dropped {} stuck {} in-flight {}",
                s.created, s.delivered, s.dropped, s.stuck, s.in_flight
            );
            println!(
                "latency     e2e {:.6} s (queue {:.6} tx {:.6} prop {:.6})",
                s.mean_e2e_s, s.mean_queue_s, s.mean_tx_s, s.mean_prop_s
            );
            println!("rebuilds    {}", r.stats.rebuilds);
            println!("trace       {}", r.trace_digest);
        }
        Command::Charts { run_dir, out } => {
            let out = out.unwrap_or_else(|| run_dir.join(CHARTS_DIR));
            let label = Manifest::load(&run_dir)
                .map(|m| m.policy)
                .unwrap_or_else(|_| "run".into());
            let s = render_run_charts(&run_dir, &out, &label)?;
            for p in &s.rendered {
                println!("wrote {}", p.display());
            }
            for (name, why) in &s.failed {
                eprintln!("skipped {name}: {why}");
            }
            if s.rendered.is_empty() {
                return Err(Error::Analysis("no chart could be rendered".into()));
            }
        }
        Command::Compare { runs, out, bin_width } => {
            let cmp = compare_runs(&runs, bin_width)?;
            for p in write_comparison(&cmp, &out)? {
                println!("wrote {}", p.display());
            }
            for (i, r) in cmp.runs.iter().enumerate() {
                println!(
                    "{:<24} delivered {:>8} mean e2e {:.6} s  max |diff| vs first {:.6} s",
                    r.label,
                    r.summary.delivered,
                    r.summary.mean_e2e_s,
                    cmp.max_abs_diff(i)
                );
            }
        }
        Command::Aggregate { run_dir, tier, out } => {
            let tiers: Vec<AggregationTier> = if tier == "all" {
                AggregationTier::ALL.to_vec()
            } else {
                vec![tier.parse()?]
            };
            let base = out.unwrap_or_else(|| run_dir.join("aggregated"));
            for t in tiers {
                let r = aggregate_run(&run_dir, t, &base.join(t.as_str()))?;
                println!(
                    "{:<20} {} agents, parameter variance {:.3e} -> {:.3e}, wrote {}",
                    t.as_str(),
                    r.agents,
                    r.variance_before,
                    r.variance_after,
                    r.out_dir.display()
                );
            }
        }
        Command::Cka { path, probes, out } => {
            let out = out.unwrap_or_else(|| path.clone());
            let r = cka_run(&path, probes.as_deref(), &out)?;
            println!(
                "{} agents, {} probe states, mean pairwise CKA {:.4}",
                r.matrix.len(),
                r.probes,
                r.mean_off_diagonal()
            );
            for p in &r.files {
                println!("wrote {}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
