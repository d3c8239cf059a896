//! `udi`: build disturbance indices from imagery and estimate outage
//! impact per census tract.
//!
//! Exit codes: 0 on success, 1 for command-line usage errors, 2 when the
//! data itself is unreadable or inconsistent.

mod commands;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use udi_core::month::MonthKey;

#[derive(Parser)]
#[command(name = "udi", version, about = "Raster time-series disturbance toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum CompositeKind {
    /// Average integer class maps into a fractional class composite.
    Impervious,
    /// Average monthly index rasters into a baseline.
    Udi,
}

#[derive(Clone, Copy, ValueEnum)]
enum ChangeArg {
    Subtract,
    #[value(name = "percent_change")]
    PercentChange,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scenario with a ground-truth manifest.
    Synth {
        /// Key = value scenario description.
        #[arg(long)]
        config: PathBuf,
        /// Directory receiving rasters, tracts, census, and manifest.
        #[arg(long)]
        output: PathBuf,
    },
    /// Bin a 0-100 percent raster into classes 1-10.
    Reclass {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Pool per-class band means from imagery under a reference map.
    Signatures {
        /// Reference class raster.
        #[arg(long)]
        reference: PathBuf,
        /// Image stems; each expands to `<stem>_<band>.rbin`.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        images: Vec<PathBuf>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Label every pixel of an image by nearest class signature.
    Classify {
        #[arg(long)]
        signatures: PathBuf,
        /// Image stem; expands to `<stem>_<band>.rbin`.
        #[arg(long)]
        image: PathBuf,
        /// Neighbour count (only 1 is supported).
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long)]
        output: PathBuf,
    },
    /// Average class maps or index rasters pixel-wise.
    Composite {
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        inputs: Vec<PathBuf>,
        #[arg(long, value_enum)]
        kind: CompositeKind,
        #[arg(long)]
        output: PathBuf,
    },
    /// Multiply a class composite by masked, upsampled radiance.
    Udi {
        /// Fractional class composite raster.
        #[arg(long)]
        impervious: PathBuf,
        #[arg(long)]
        radiance: PathBuf,
        /// Observation counts; zero-count pixels are masked out.
        #[arg(long)]
        observations: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Difference a monthly index against a baseline.
    Change {
        #[arg(long)]
        current: PathBuf,
        #[arg(long)]
        baseline: PathBuf,
        #[arg(long, value_enum, default_value = "subtract")]
        mode: ChangeArg,
        #[arg(long)]
        output: PathBuf,
    },
    /// Tract-by-month index statistics over a span of monthly composites.
    Zonal {
        #[arg(long)]
        tracts: PathBuf,
        /// Fractional class composite raster.
        #[arg(long)]
        impervious: PathBuf,
        /// Directory holding viirs_YYYY_MM_{rad,obs}.rbin pairs.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        start: MonthKey,
        #[arg(long)]
        end: MonthKey,
        #[arg(long)]
        output: PathBuf,
    },
    /// Fit per-tract trend + seasonal models and score a forecast window.
    Forecast {
        #[arg(long)]
        zonal: PathBuf,
        #[arg(long, default_value = "2012-04")]
        train_start: MonthKey,
        #[arg(long, default_value = "2017-08")]
        train_end: MonthKey,
        #[arg(long, default_value = "2017-09")]
        forecast_start: MonthKey,
        #[arg(long, default_value = "2018-05")]
        forecast_end: MonthKey,
        /// Output CSV of fitted models.
        #[arg(long)]
        models: PathBuf,
        /// Output CSV of monthly shortfall records.
        #[arg(long)]
        shortfalls: PathBuf,
    },
    /// Roll tract shortfalls up to island persons/buildings totals.
    Impact {
        #[arg(long)]
        shortfalls: PathBuf,
        #[arg(long)]
        models: PathBuf,
        #[arg(long)]
        tracts: PathBuf,
        #[arg(long, default_value = "2012-04")]
        train_start: MonthKey,
        #[arg(long, default_value = "2017-08")]
        train_end: MonthKey,
        #[arg(long)]
        output: PathBuf,
    },
    /// Draw a stratified random sample of a class map for review.
    Sample {
        #[arg(long)]
        map: PathBuf,
        /// Total number of sample points.
        #[arg(long)]
        size: usize,
        /// Generator seed; required so draws are reproducible.
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Score an interpreted sample: confusion matrix plus overall accuracy.
    Accuracy {
        /// Sample CSV with the interpreted column filled in.
        #[arg(long)]
        sample: PathBuf,
        /// Output confusion-matrix CSV.
        #[arg(long)]
        output: PathBuf,
    },
    /// Render an SVG chart: one tract's series or the island impact.
    #[command(group = clap::ArgGroup::new("source").required(true).args(["tract", "impact"]))]
    Report {
        /// Tract to chart; needs --zonal and --models.
        #[arg(long, requires = "zonal", requires = "models", conflicts_with = "impact")]
        tract: Option<String>,
        #[arg(long)]
        zonal: Option<PathBuf>,
        #[arg(long)]
        models: Option<PathBuf>,
        /// Island impact CSV to chart instead of a tract.
        #[arg(long)]
        impact: Option<PathBuf>,
        #[arg(long, default_value = "2012-04")]
        train_start: MonthKey,
        #[arg(long, default_value = "2017-08")]
        train_end: MonthKey,
        #[arg(long)]
        output: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
