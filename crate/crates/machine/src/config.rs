//! Run settings: a TOML file overridden by command-line flags.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

use iga_core::coupling::CouplingConfig;
use iga_core::postproc::EmfConfig;

use crate::error::{CliError, Result};

/// Values accepted in a TOML config file. Every key is optional.
#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub machine: Option<PathBuf>,
    pub degree: Option<usize>,
    pub refine: Option<usize>,
    pub alpha: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub positions: Option<usize>,
    pub speed_rpm: Option<f64>,
    pub harmonics: Option<usize>,
    pub phase: Option<String>,
    pub out_dir: Option<PathBuf>,
    pub threads: Option<usize>,
    pub quad_points: Option<usize>,
    pub grid_samples: Option<usize>,
    pub levels: Option<usize>,
    pub degrees: Option<Vec<usize>>,
}

/// Flags shared by the run commands; each overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct RunFlags {
    /// TOML config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Machine file.
    #[arg(long)]
    pub machine: Option<PathBuf>,
    /// Field degree.
    #[arg(long)]
    pub degree: Option<usize>,
    /// Uniform refinement passes.
    #[arg(long)]
    pub refine: Option<usize>,
    /// Relaxation parameter in [0, 1].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Stopping tolerance of the rotor/stator iteration.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Rotor positions per electrical period.
    #[arg(long)]
    pub positions: Option<usize>,
    /// Mechanical speed in rpm.
    #[arg(long)]
    pub speed_rpm: Option<f64>,
    /// Harmonics reported in the spectrum.
    #[arg(long)]
    pub harmonics: Option<usize>,
    /// Phase whose EMF is analysed.
    #[arg(long)]
    pub phase: Option<String>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Worker threads for position sweeps.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Gauss points per direction (default: max field/geometry degree + 1).
    #[arg(long)]
    pub quad_points: Option<usize>,
    /// Samples per direction of the grid dump.
    #[arg(long)]
    pub grid_samples: Option<usize>,
    /// Finest refinement level of a study.
    #[arg(long)]
    pub levels: Option<usize>,
    /// Degrees of a study, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub degrees: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub machine: PathBuf,
    pub degree: Option<usize>,
    pub refine: usize,
    pub alpha: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub positions: usize,
    pub speed_rpm: f64,
    pub harmonics: usize,
    pub phase: String,
    pub out_dir: PathBuf,
    pub threads: usize,
    pub quad_points: Option<usize>,
    pub grid_samples: usize,
    pub levels: usize,
    pub degrees: Vec<usize>,
}

pub fn read_file_config(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    toml::from_str(&text).map_err(|e| CliError::Parse {
        path: path.display().to_string(),
        line: e.span().map_or(0, |s| text[..s.start].matches('\n').count() + 1),
        message: e.message().to_string(),
    })
}

impl RunConfig {
    pub fn resolve(flags: &RunFlags) -> Result<RunConfig> {
        let file = match &flags.config {
            Some(p) => read_file_config(p)?,
            None => FileConfig::default(),
        };
        let machine = flags
            .machine
            .clone()
            .or(file.machine)
            .ok_or_else(|| CliError::Invalid("no machine file given (--machine or 'machine' in the config)".into()))?;
        let cfg = RunConfig {
            machine,
            degree: flags.degree.or(file.degree),
            refine: flags.refine.or(file.refine).unwrap_or(1),
            alpha: flags.alpha.or(file.alpha).unwrap_or(0.5),
            tol: flags.tol.or(file.tol).unwrap_or(1e-7),
            max_iter: flags.max_iter.or(file.max_iter).unwrap_or(200),
            positions: flags.positions.or(file.positions).unwrap_or(64),
            speed_rpm: flags.speed_rpm.or(file.speed_rpm).unwrap_or(1500.0),
            harmonics: flags.harmonics.or(file.harmonics).unwrap_or(31),
            phase: flags.phase.clone().or(file.phase).unwrap_or_else(|| "A".into()),
            out_dir: flags.out_dir.clone().or(file.out_dir).unwrap_or_else(|| PathBuf::from("out")),
            threads: flags.threads.or(file.threads).unwrap_or(1),
            quad_points: flags.quad_points.or(file.quad_points),
            grid_samples: flags.grid_samples.or(file.grid_samples).unwrap_or(11),
            levels: flags.levels.or(file.levels).unwrap_or(3),
            degrees: flags.degrees.clone().or(file.degrees).unwrap_or_else(|| vec![1, 2]),
        };
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(CliError::Invalid(format!("tol must be positive, got {}", self.tol)));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(CliError::Invalid(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        if self.threads == 0 {
            return Err(CliError::Invalid("threads must be at least 1".into()));
        }
        if self.degree == Some(0) || self.degrees.iter().any(|d| *d == 0) {
            return Err(CliError::Invalid("degrees must be at least 1".into()));
        }
        Ok(())
    }

    pub fn coupling(&self) -> CouplingConfig {
        CouplingConfig {
            degree: self.degree.unwrap_or(2),
            alpha: self.alpha,
            tol: self.tol,
            max_iter: self.max_iter,
            assembly: iga_core::assembly::AssemblyOptions { quad_points: self.quad_points },
            ..CouplingConfig::default()
        }
    }

    pub fn emf(&self) -> EmfConfig {
        EmfConfig {
            coupling: self.coupling(),
            positions: self.positions,
            speed: self.speed_rpm * 2.0 * std::f64::consts::PI / 60.0,
            harmonics: self.harmonics,
            phase: self.phase.clone(),
        }
    }
}
