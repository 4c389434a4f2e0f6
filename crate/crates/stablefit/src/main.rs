use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use stablefit::commands::{
    self, CompareSettings, FitSettings, GridSettings, Inputs, MomentSettings, Model, PipelineSettings, ReportSettings,
    ScalingSettings,
};
use stablefit::error::{CliError, Result};
use stablefit::grid_cache;
use stablefit::output::{Format, OutDir};
use stablefit::simulate::{Family, SimConfig};
use stablefit_core::aep::AepParams;
use stablefit_core::moment_test::UMode;
use stablefit_core::panel::{Dimension, Variable};
use stablefit_core::scaling::Subsampling;
use stablefit_core::stable::StableParams;

#[derive(Parser)]
#[command(name = "stablefit", version, about = "Heavy-tailed distribution fitting for firm-level panels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit stable and/or AEP models per group.
    Fit {
        #[command(flatten)]
        panel: PanelArgs,
        #[arg(long, value_enum, default_value_t = Model::Both)]
        model: Model,
        /// Bootstrap replicates for standard errors; 0 disables.
        #[arg(long, default_value_t = 200)]
        bootstrap: usize,
        /// Refine the stable fit by maximum likelihood.
        #[arg(long)]
        mle: bool,
    },
    /// Compare the stable and AEP fits per group.
    Compare {
        #[command(flatten)]
        panel: PanelArgs,
        #[arg(long, default_value_t = 10)]
        kfold: usize,
        #[arg(long, default_value_t = 10)]
        reps: usize,
        /// Histogram bins for the Soofi index.
        #[arg(long)]
        bins: Option<usize>,
    },
    /// Test finiteness of moments per group.
    TestMoments {
        #[command(flatten)]
        panel: PanelArgs,
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 2.0])]
        moment_p: Vec<f64>,
        #[arg(long, value_enum, default_value_t = UModeArg::Quadrature)]
        u_mode: UModeArg,
        #[arg(long, default_value_t = 0.05)]
        level: f64,
    },
    /// Subsample standard deviation against sample size on the pooled variable.
    Scaling {
        #[command(flatten)]
        panel: PanelArgs,
        #[arg(long, default_value_t = 100)]
        min_size: usize,
        #[arg(long, default_value_t = 100_000)]
        max_size: usize,
        #[arg(long, default_value_t = 13)]
        sizes: usize,
        #[arg(long, default_value_t = 500)]
        reps: usize,
        #[arg(long)]
        with_replacement: bool,
        #[arg(long, default_value_t = 2000)]
        calibration_reps: usize,
    },
    /// Dispersion metrics per group.
    Report {
        #[command(flatten)]
        panel: PanelArgs,
    },
    /// Generate a synthetic panel in the ingestion schema.
    Simulate {
        #[arg(long, value_enum, default_value_t = FamilyArg::Levy)]
        family: FamilyArg,
        /// Four comma-separated parameters: α,β,γ,δ or ξ,σ,h,κ. Write
        /// `--params=-1,...` when the first one is negative.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_values_t = [1.36, 0.89, 14.9, 42.0])]
        params: Vec<f64>,
        #[arg(long, default_value_t = 10_000)]
        firms: usize,
        #[arg(long, value_delimiter = ',', default_value = "FR")]
        countries: Vec<String>,
        #[arg(long, default_value_t = 2006)]
        first_year: i32,
        #[arg(long, default_value_t = 2015)]
        last_year: i32,
        /// Move the location so the model gives this share of negative values.
        #[arg(long)]
        negative_share: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        gap_rate: f64,
        #[arg(long, default_value_t = 0.0)]
        dirty_rate: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output directory; the panel is written to `panel.csv`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the quantile lookup grid and write it to `<out>/grid.csv`.
    BuildGrid {
        #[arg(long)]
        out: PathBuf,
        /// Spacing of the α axis over [0.5, 2].
        #[arg(long, default_value_t = 0.1)]
        alpha_step: f64,
        /// Spacing of the β axis over [0, 1].
        #[arg(long, default_value_t = 0.25)]
        beta_step: f64,
    },
}

#[derive(Args)]
struct PanelArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    deflators: Option<PathBuf>,
    /// Grid cache from `build-grid`; built in memory when absent.
    #[arg(long)]
    grid: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = DimensionArg::CountryYear)]
    group_by: DimensionArg,
    #[arg(long, value_enum, default_value_t = VariableArg::Lp)]
    variable: VariableArg,
    /// Overrides the minimum group size of the grouping dimension.
    #[arg(long)]
    min_n: Option<usize>,
    #[arg(long, default_value_t = 2006)]
    first_year: i32,
    #[arg(long, default_value_t = 2015)]
    last_year: i32,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Tsv)]
    format: Format,
}

impl PanelArgs {
    fn inputs(&self) -> Inputs {
        Inputs {
            panel: self.input.clone(),
            deflators: self.deflators.clone(),
            grid: self.grid.clone(),
        }
    }

    fn pipeline(&self) -> PipelineSettings {
        PipelineSettings {
            group_by: self.group_by.into(),
            variable: self.variable.into(),
            min_n: self.min_n,
            first_year: self.first_year,
            last_year: self.last_year,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DimensionArg {
    CountryYear,
    CountrySize,
    CountrySector,
}

impl From<DimensionArg> for Dimension {
    fn from(d: DimensionArg) -> Self {
        match d {
            DimensionArg::CountryYear => Dimension::CountryYear,
            DimensionArg::CountrySize => Dimension::CountrySize,
            DimensionArg::CountrySector => Dimension::CountrySector,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum VariableArg {
    Lp,
    Dlp,
    LogLp,
    LogGrowth,
}

impl From<VariableArg> for Variable {
    fn from(v: VariableArg) -> Self {
        match v {
            VariableArg::Lp => Variable::Lp,
            VariableArg::Dlp => Variable::Dlp,
            VariableArg::LogLp => Variable::LogLp,
            VariableArg::LogGrowth => Variable::LogGrowth,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum UModeArg {
    Quadrature,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Levy,
    Aep,
}

fn groups_line(groups: &[commands::GroupStatus]) -> String {
    let count = |s| groups.iter().filter(|g| g.status == s).count();
    format!(
        "{} groups: {} done, {} skipped, {} failed",
        groups.len(),
        count(commands::Status::Done),
        count(commands::Status::Skipped),
        count(commands::Status::Failed)
    )
}

fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Fit { panel, model, bootstrap, mle } => {
            let s = FitSettings {
                pipeline: panel.pipeline(),
                model,
                bootstrap,
                mle,
                seed: panel.seed,
                format: panel.format,
            };
            let grid = grid_cache::load_or_build(panel.grid.as_deref())?;
            let r = commands::run_fit(&panel.inputs(), &s, &grid, &OutDir::create(&panel.out)?)?;
            Ok(groups_line(&r.groups))
        }
        Command::Compare { panel, kfold, reps, bins } => {
            let s = CompareSettings {
                pipeline: panel.pipeline(),
                kfold,
                reps,
                bins,
                seed: panel.seed,
                format: panel.format,
            };
            let grid = grid_cache::load_or_build(panel.grid.as_deref())?;
            let r = commands::run_compare(&panel.inputs(), &s, &grid, &OutDir::create(&panel.out)?)?;
            Ok(groups_line(&r.groups))
        }
        Command::TestMoments { panel, moment_p, u_mode, level } => {
            let s = MomentSettings {
                pipeline: panel.pipeline(),
                moment_p,
                u_mode: match u_mode {
                    UModeArg::Quadrature => UMode::Quadrature,
                    UModeArg::Random => UMode::Random,
                },
                level,
                seed: panel.seed,
                format: panel.format,
            };
            let r = commands::run_test_moments(&panel.inputs(), &s, &OutDir::create(&panel.out)?)?;
            Ok(groups_line(&r.groups))
        }
        Command::Scaling { panel, min_size, max_size, sizes, reps, with_replacement, calibration_reps } => {
            let s = ScalingSettings {
                pipeline: panel.pipeline(),
                min_size,
                max_size,
                sizes,
                reps,
                subsampling: if with_replacement {
                    Subsampling::WithReplacement
                } else {
                    Subsampling::WithoutReplacement
                },
                calibration_reps,
                seed: panel.seed,
                format: panel.format,
            };
            let grid = grid_cache::load_or_build(panel.grid.as_deref())?;
            commands::run_scaling(&panel.inputs(), &s, &grid, &OutDir::create(&panel.out)?)?;
            Ok(format!("scaling written to {}", panel.out.display()))
        }
        Command::Report { panel } => {
            let s = ReportSettings {
                pipeline: panel.pipeline(),
                seed: panel.seed,
                format: panel.format,
            };
            let grid = grid_cache::load_or_build(panel.grid.as_deref())?;
            let r = commands::run_report(&panel.inputs(), &s, &grid, &OutDir::create(&panel.out)?)?;
            Ok(groups_line(&r.groups))
        }
        Command::Simulate {
            family,
            params,
            firms,
            countries,
            first_year,
            last_year,
            negative_share,
            gap_rate,
            dirty_rate,
            seed,
            out,
        } => {
            let [a, b, c, d] = params[..] else {
                return Err(CliError::Config("--params takes exactly four values".into()));
            };
            let mut family = match family {
                FamilyArg::Levy => Family::Levy(StableParams::new(a, b, c, d)?),
                FamilyArg::Aep => Family::Aep(AepParams::new(a, b, c, d)?),
            };
            if let Some(share) = negative_share {
                family = family.with_negative_share(share)?;
            }
            let cfg = SimConfig {
                family,
                firms,
                countries,
                first_year,
                last_year,
                gap_rate,
                dirty_rate,
                seed,
            };
            OutDir::create(&out)?;
            let rows = commands::run_simulate(&cfg, &out.join("panel.csv"))?;
            Ok(format!("{rows} rows written to {}", out.join("panel.csv").display()))
        }
        Command::BuildGrid { out, alpha_step, beta_step } => {
            let s = GridSettings::with_steps(alpha_step, beta_step)?;
            OutDir::create(&out)?;
            let path = out.join("grid.csv");
            commands::run_build_grid(&s, &path)?;
            Ok(format!("grid written to {}", path.display()))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(msg) => {
            eprintln!("{msg}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("stablefit: error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
