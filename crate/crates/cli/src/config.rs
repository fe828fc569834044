//! The pipeline configuration file and its resolution against flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use roadgnn::features::{LocalProjection, DEFAULT_GEOMETRY_POINTS};
use roadgnn::graph::{SplitSize, UturnPolicy};
use roadgnn::training::{GridSpace, RankBy, SynthConfig};
use roadgnn::TrainConfig;
use serde::{Deserialize, Serialize};

pub const CONFIG_VERSION: u32 = 1;

/// Everything a run can be configured with. Sections not used by a command
/// are ignored but still validated for shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Absent in a file means invalid, so it does not take the struct default.
    #[serde(default)]
    pub version: Option<u32>,
    /// Applied to the split, training and synthetic-data seeds.
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub inputs: Inputs,
    pub ingest: IngestSettings,
    pub features: FeatureSettings,
    pub train: TrainConfig,
    pub grid: GridSettings,
    pub synth: SynthConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            version: Some(CONFIG_VERSION),
            seed: None,
            jobs: None,
            out: None,
            inputs: Inputs::default(),
            ingest: IngestSettings::default(),
            features: FeatureSettings::default(),
            train: TrainConfig::default(),
            grid: GridSettings::default(),
            synth: SynthConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Inputs {
    pub primal: Option<PathBuf>,
    pub graph: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub raster: Option<PathBuf>,
    pub world: Option<PathBuf>,
    pub dsm: Option<PathBuf>,
    pub dsm_world: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub histograms: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestSettings {
    pub uturn: UturnPolicy,
    pub split_seed: u64,
    pub val: SplitSize,
    pub test: SplitSize,
}

impl Default for IngestSettings {
    fn default() -> Self {
        Self {
            uturn: UturnPolicy::Include,
            split_seed: 0,
            val: SplitSize::Fraction(0.1),
            test: SplitSize::Fraction(0.1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureSettings {
    /// 0 drops the geometric block.
    pub geometry_points: usize,
    pub binary: bool,
    pub embedding_dim: Option<usize>,
    /// Reference point of the planar frame. Rasters must be georeferenced
    /// in meters of this frame. Defaults to the mean intersection position.
    pub origin: Option<[f64; 2]>,
}

impl Default for FeatureSettings {
    fn default() -> Self {
        Self {
            geometry_points: DEFAULT_GEOMETRY_POINTS,
            binary: true,
            embedding_dim: None,
            origin: None,
        }
    }
}

impl FeatureSettings {
    pub fn projection(&self) -> Option<LocalProjection> {
        self.origin.map(|[lon, lat]| LocalProjection::new(lon, lat))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSettings {
    pub space: GridSpace,
    pub top_k: usize,
    pub rank_by: RankBy,
}

impl Default for GridSettings {
    fn default() -> Self {
        Self {
            space: GridSpace::default(),
            top_k: 5,
            rank_by: RankBy::Validation,
        }
    }
}

/// Parses a config file. Errors name the file and the offending field path.
pub fn load(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    parse(&text).with_context(|| format!("invalid config {}", path.display()))
}

pub fn parse(text: &str) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        anyhow::anyhow!("field `{field}`: {}", e.inner())
    })?;
    match config.version {
        Some(CONFIG_VERSION) => Ok(config),
        Some(v) => bail!("field `version`: unsupported version {v}, expected {CONFIG_VERSION}"),
        None => bail!("field `version`: missing, expected {CONFIG_VERSION}"),
    }
}

impl RunConfig {
    /// Propagates the top-level seed into every seeded section.
    pub fn apply_seed(&mut self) {
        if let Some(seed) = self.seed {
            self.ingest.split_seed = seed;
            self.train.seed = seed;
            self.synth.seed = seed;
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn jobs(&self) -> usize {
        self.jobs.unwrap_or(1).max(1)
    }

    /// Checks that every listed input is set and exists on disk.
    pub fn require(&self, names: &[&str]) -> Result<()> {
        for name in names {
            self.input(name)?;
        }
        Ok(())
    }

    pub fn input(&self, name: &str) -> Result<&Path> {
        let slot = match name {
            "primal" => &self.inputs.primal,
            "graph" => &self.inputs.graph,
            "features" => &self.inputs.features,
            "raster" => &self.inputs.raster,
            "world" => &self.inputs.world,
            "dsm" => &self.inputs.dsm,
            "dsm_world" => &self.inputs.dsm_world,
            "embeddings" => &self.inputs.embeddings,
            "histograms" => &self.inputs.histograms,
            "checkpoint" => &self.inputs.checkpoint,
            other => bail!("unknown input {other}"),
        };
        let path = slot
            .as_deref()
            .with_context(|| format!("field `inputs.{name}`: required (flag --{})", name.replace('_', "-")))?;
        if !path.exists() {
            bail!("field `inputs.{name}`: {} does not exist", path.display());
        }
        Ok(path)
    }

    pub fn to_pretty_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
