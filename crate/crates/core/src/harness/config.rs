use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::HarnessError;
use crate::esm::EsmConfig;
use crate::planner::PlannerConfig;
use crate::track::{FrenetPose, Track};
use crate::vehicle::{DynamicState, FullState, Pose, TireParams, VehicleParams};

/// Input and output files. Relative paths are resolved against the
/// directory of the configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub track: PathBuf,
    pub manifold: PathBuf,
    /// Vehicle and tire parameters; built-in defaults when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunMode {
    Plan,
    #[default]
    Lap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub mode: RunMode,
    pub laps: usize,
    pub output_dir: PathBuf,
    pub plots: bool,
    /// Planning cycles allowed per lap before the run is declared stuck.
    pub max_cycles_per_lap: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            mode: RunMode::Lap,
            laps: 1,
            output_dir: PathBuf::from("out"),
            plots: false,
            max_cycles_per_lap: 400,
        }
    }
}

/// Initial state, placed relative to the road.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialState {
    /// Arc length along the centerline (m).
    pub s: f64,
    /// Lateral offset, positive to the left (m).
    pub d: f64,
    /// Yaw relative to the road heading at `s` (rad).
    pub heading_offset: f64,
    pub v: f64,
    pub beta: f64,
    pub psidot: f64,
}

impl Default for InitialState {
    fn default() -> Self {
        InitialState {
            s: 5.0,
            d: 0.0,
            heading_offset: 0.0,
            v: 8.0,
            beta: 0.0,
            psidot: 0.0,
        }
    }
}

impl InitialState {
    pub fn to_full_state(&self, track: &Track) -> Result<FullState, HarnessError> {
        let on_road = track
            .from_frenet(FrenetPose::new(self.s, self.d))
            .map_err(|e| HarnessError::Config(format!("initial state: {e}")))?;
        Ok(FullState::new(
            Pose::new(on_road.x, on_road.y, on_road.psi + self.heading_offset),
            DynamicState::new(self.v, self.beta, self.psidot),
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsConfig {
    /// `|beta|` above which a sample counts as drifting (rad).
    pub beta_drift: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig { beta_drift: 0.4 }
    }
}

/// Contents of the vehicle parameter file.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsFile {
    pub vehicle: VehicleParams,
    pub tires: TireParams,
}

impl ParamsFile {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let p: ParamsFile = toml::from_str(text).map_err(|e| HarnessError::Config(format!("parameter file: {e}")))?;
        p.vehicle.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        p.tires.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(p)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("parameters serialize")
    }
}

/// One run of the harness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub initial: InitialState,
    #[serde(default)]
    pub metrics: MetricsConfig,
    #[serde(default)]
    pub esm: EsmConfig,
    #[serde(default)]
    pub planner: PlannerConfig,
}

impl RunConfig {
    /// Parses a configuration; relative paths are joined onto `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, HarnessError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        let join = |p: &Path| if p.is_relative() { base.join(p) } else { p.to_path_buf() };
        cfg.paths.track = join(&cfg.paths.track);
        cfg.paths.manifold = join(&cfg.paths.manifold);
        cfg.paths.params = cfg.paths.params.as_deref().map(join);
        cfg.run.output_dir = join(&cfg.run.output_dir);
        cfg.planner.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        if !(cfg.metrics.beta_drift > 0.0) {
            return Err(HarnessError::Config("metrics.beta_drift must be positive".into()));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Vehicle and tire parameters from the parameter file, or the defaults.
    pub fn load_params(&self) -> Result<ParamsFile, HarnessError> {
        match &self.paths.params {
            None => Ok(ParamsFile::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", p.display())))?;
                ParamsFile::parse(&text)
            }
        }
    }

    /// Fails with a configuration error naming the first input file that
    /// does not exist.
    pub fn require_inputs(&self, manifold: bool) -> Result<(), HarnessError> {
        let mut files = vec![("track", &self.paths.track)];
        if manifold {
            files.push(("manifold", &self.paths.manifold));
        }
        if let Some(p) = &self.paths.params {
            files.push(("params", p));
        }
        for (what, p) in files {
            if !p.is_file() {
                return Err(HarnessError::Config(format!("{what} file {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    /// SHA-256 over the effective configuration and parameters, independent
    /// of where the files live and of whether figures are drawn.
    pub fn hash(&self, params: &ParamsFile) -> String {
        let mut stripped = self.clone();
        stripped.paths.track = file_name(&self.paths.track);
        stripped.paths.manifold = file_name(&self.paths.manifold);
        stripped.paths.params = self.paths.params.as_deref().map(file_name);
        stripped.run.output_dir = PathBuf::new();
        stripped.run.plots = false;
        let text = format!(
            "{}\n{}",
            toml::to_string(&stripped).expect("config serializes"),
            params.to_toml()
        );
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn file_name(p: &Path) -> PathBuf {
    p.file_name().map(PathBuf::from).unwrap_or_default()
}
