use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use pch::baselines::{run_baselines, Method};
use pch::experiment::run_experiment;
use pch::inference::{infer, SignPrior};
use pch::io::{self, ColumnRoles, ReportRecord};
use pch::oracle::identify;
use pch::pch::{pch_both, PchOptions};
use pch::stats::Design;

#[derive(Parser)]
#[command(
    name = "pch",
    version,
    about = "Bi-directional causal inference with possibly invalid instruments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the causal direction and both effects from a CSV file.
    Analyze {
        #[arg(long)]
        data: PathBuf,
        /// Column holding X (default: first column).
        #[arg(long)]
        x: Option<String>,
        /// Column holding Y (default: second column).
        #[arg(long)]
        y: Option<String>,
        /// Instrument columns, comma separated (default: all remaining).
        #[arg(long, value_delimiter = ',')]
        z: Option<Vec<String>>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value = "XY_POS_YX_NEG")]
        sign_prior: SignPrior,
        /// Also report TSHT, Egger and IVW rows.
        #[arg(long)]
        baselines: bool,
        /// Write the machine-readable TSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a Monte Carlo sweep described by a TOML config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "pch-sim")]
        out_dir: PathBuf,
        #[arg(long, env = "PCH_THREADS")]
        threads: Option<usize>,
    },
    /// Population-level identification for a TOML PopulationSpec.
    Oracle {
        #[arg(long)]
        spec: PathBuf,
    },
}

fn analyze(
    data: PathBuf,
    roles: ColumnRoles,
    alpha: f64,
    prior: SignPrior,
    with_baselines: bool,
    out: Option<PathBuf>,
) -> Result<()> {
    let ds =
        io::load_dataset(&data, &roles).with_context(|| format!("loading {}", data.display()))?;
    let design = Design::new(&ds.z)?;
    let both = pch_both(&design, &ds.x, &ds.y, PchOptions::default())?;
    let result = infer(&both.xy, &both.yx, ds.n(), alpha, prior)?;
    let mut records = vec![ReportRecord::from_pch(&result, &both)];
    if with_baselines {
        let methods = [Method::Tsht, Method::Egger, Method::Ivw];
        records.extend(
            run_baselines(&design, &ds.x, &ds.y, &methods, alpha)?
                .iter()
                .map(ReportRecord::from_baseline),
        );
    }
    let tsv = io::records_to_tsv(&records);
    match out {
        Some(path) => {
            print!("{}", io::human_table(&records));
            if result.undetectable {
                println!("note: assumptions undetectable in both orderings");
            }
            fs::write(&path, tsv).with_context(|| format!("writing {}", path.display()))?;
        }
        None => {
            eprint!("{}", io::human_table(&records));
            if result.undetectable {
                eprintln!("note: assumptions undetectable in both orderings");
            }
            print!("{tsv}");
        }
    }
    Ok(())
}

fn simulate(config: PathBuf, out_dir: PathBuf, threads: Option<usize>) -> Result<()> {
    let exp = io::load_experiment_config(&config)?;
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let report = run_experiment(&exp)?;
    fs::create_dir_all(&out_dir)?;
    fs::write(out_dir.join("report.tsv"), io::experiment_tsv(&report))?;
    fs::write(out_dir.join("plot.tsv"), io::plot_tsv(&report))?;
    let summary = io::summary_text(&report);
    fs::write(out_dir.join("summary.txt"), &summary)?;
    print!("{summary}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Analyze {
            data,
            x,
            y,
            z,
            alpha,
            sign_prior,
            baselines,
            out,
        } => analyze(
            data,
            ColumnRoles { x, y, z },
            alpha,
            sign_prior,
            baselines,
            out,
        ),
        Command::Simulate {
            config,
            out_dir,
            threads,
        } => simulate(config, out_dir, threads),
        Command::Oracle { spec } => io::load_population_spec(&spec)
            .and_then(|s| identify(&s))
            .map(|id| print!("{}", io::oracle_tsv(&id)))
            .map_err(Into::into),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
