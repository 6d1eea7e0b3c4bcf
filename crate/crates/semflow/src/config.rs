//! Run configuration: command-line flags, an optional TOML file, defaults.

use std::path::PathBuf;
use std::str::FromStr;

use clap::Args;
use serde::Deserialize;

use semflow_core::classify::{ClassifierKind, DEFAULT_FOLDS};
use semflow_core::motifs::StrategyKind;

use crate::error::{Error, Result};
use crate::io::EmbeddingSource;
use crate::manifest::ManifestEntry;

/// How books are assigned to classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Grouping {
    /// The manifest `label` field.
    #[default]
    Label,
    /// Publication year in 1700-1799, 1800-1899 or 1900 and later.
    Century,
    /// Publication year in 1700-1850 or 1851 and later.
    Split1850,
}

impl Grouping {
    pub fn as_str(self) -> &'static str {
        match self {
            Grouping::Label => "label",
            Grouping::Century => "century",
            Grouping::Split1850 => "split-1850",
        }
    }

    /// The class of `entry`, if it has one under this grouping.
    pub fn class(self, entry: &ManifestEntry) -> Option<String> {
        match self {
            Grouping::Label => entry.label.clone(),
            Grouping::Century => match entry.year? {
                1700..=1799 => Some("1700-1799".into()),
                1800..=1899 => Some("1800-1899".into()),
                y if y >= 1900 => Some("1900+".into()),
                _ => None,
            },
            Grouping::Split1850 => match entry.year? {
                1700..=1850 => Some("1700-1850".into()),
                y if y >= 1851 => Some("1851+".into()),
                _ => None,
            },
        }
    }
}

impl FromStr for Grouping {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Grouping::Label, Grouping::Century, Grouping::Split1850]
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown grouping `{s}` (label, century, split-1850)")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub manifest: PathBuf,
    pub embeddings: EmbeddingSource,
    pub stopwords: Option<PathBuf>,
    pub seed: u64,
    pub strategies: Vec<StrategyKind>,
    /// Pruning thresholds for the simplified strategies; the unweighted
    /// strategy always uses 0.
    pub thresholds: Vec<f64>,
    pub classifiers: Vec<ClassifierKind>,
    pub grouping: Grouping,
    pub folds: usize,
    pub cache_dir: Option<PathBuf>,
    pub out: PathBuf,
    pub workers: usize,
}

impl PipelineConfig {
    /// A configuration with default strategies, grid and classifiers.
    pub fn new(manifest: PathBuf, embeddings: EmbeddingSource, out: PathBuf) -> Self {
        Self {
            manifest,
            embeddings,
            stopwords: None,
            seed: DEFAULT_SEED,
            strategies: StrategyKind::ALL.to_vec(),
            thresholds: default_thresholds(),
            classifiers: ClassifierKind::ALL.to_vec(),
            grouping: Grouping::Label,
            folds: DEFAULT_FOLDS,
            cache_dir: None,
            out,
            workers: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.thresholds.is_empty() || self.thresholds.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(Error::Config("thresholds must be a non-empty list within [0, 1]".into()));
        }
        if self.strategies.is_empty() || self.classifiers.is_empty() {
            return Err(Error::Config("need at least one strategy and one classifier".into()));
        }
        if self.workers == 0 || self.folds < 2 {
            return Err(Error::Config("workers must be positive and folds at least 2".into()));
        }
        Ok(())
    }

    /// The threshold grid used for `strategy`.
    pub fn grid(&self, strategy: StrategyKind) -> Vec<f64> {
        if strategy.is_simplified() {
            self.thresholds.clone()
        } else {
            vec![0.0]
        }
    }
}

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_SYNTHETIC_DIM: usize = 32;

/// 0.005, 0.010, ..., 0.200.
pub fn default_thresholds() -> Vec<f64> {
    (1..=40).map(|i| f64::from(i) / 200.0).collect()
}

/// Parses `start:end:step` (inclusive) or a comma-separated list. The result
/// is sorted and deduplicated.
pub fn parse_thresholds(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("cannot parse thresholds `{s}`"));
    let num = |x: &str| x.trim().parse::<f64>().map_err(|_| bad());
    let mut values = if let [a, b, step] = s.split(':').collect::<Vec<_>>()[..] {
        let (a, b, step) = (num(a)?, num(b)?, num(step)?);
        if step.is_nan() || step <= 0.0 || b < a {
            return Err(bad());
        }
        let steps = ((b - a) / step + 1e-9).floor() as u64;
        // Snap to 12 decimals so grid points equal their decimal spelling.
        (0..=steps).map(|i| format!("{:.12}", a + i as f64 * step).parse().expect("formatted float")).collect()
    } else {
        s.split(',').map(num).collect::<Result<Vec<f64>>>()?
    };
    values.sort_by(f64::total_cmp);
    values.dedup();
    Ok(values)
}

fn parse_list<T: FromStr + Copy>(s: &str, all: &[T]) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    if s.trim() == "all" {
        return Ok(all.to_vec());
    }
    s.split(',').map(|x| x.trim().parse::<T>().map_err(|e| Error::Config(e.to_string()))).collect()
}

/// Settings shared by the command line and the config file. Every field is
/// optional so the two sources can be layered.
#[derive(Debug, Clone, Default, PartialEq, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Settings {
    /// TOML file with any of these settings (flags take precedence).
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Line-delimited JSON manifest of books.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Word-vector file (word2vec text format).
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// `word2vec-text` or `synthetic`.
    #[arg(long)]
    pub embeddings_format: Option<String>,
    /// Dimension of synthetic embeddings.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Stopword list, one word per line (default: bundled English list).
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated strategies or `all`.
    #[arg(long)]
    pub strategy: Option<String>,
    /// `start:end:step` or a comma-separated list.
    #[arg(long)]
    pub thresholds: Option<String>,
    /// Comma-separated classifiers or `all`.
    #[arg(long)]
    pub classifier: Option<String>,
    /// `label`, `century` or `split-1850`.
    #[arg(long)]
    pub grouping: Option<String>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    /// Disable the artifact cache.
    #[arg(long)]
    #[serde(default)]
    pub no_cache: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Books processed in parallel.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Run on the bundled fixture corpus with synthetic embeddings.
    #[arg(long)]
    #[serde(default)]
    pub demo: bool,
}

impl Settings {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Fields set here win over `fallback`.
    pub fn or(self, fallback: Settings) -> Settings {
        Settings {
            config: self.config.or(fallback.config),
            manifest: self.manifest.or(fallback.manifest),
            embeddings: self.embeddings.or(fallback.embeddings),
            embeddings_format: self.embeddings_format.or(fallback.embeddings_format),
            dim: self.dim.or(fallback.dim),
            stopwords: self.stopwords.or(fallback.stopwords),
            seed: self.seed.or(fallback.seed),
            strategy: self.strategy.or(fallback.strategy),
            thresholds: self.thresholds.or(fallback.thresholds),
            classifier: self.classifier.or(fallback.classifier),
            grouping: self.grouping.or(fallback.grouping),
            folds: self.folds.or(fallback.folds),
            cache_dir: self.cache_dir.or(fallback.cache_dir),
            no_cache: self.no_cache || fallback.no_cache,
            out: self.out.or(fallback.out),
            workers: self.workers.or(fallback.workers),
            demo: self.demo || fallback.demo,
        }
    }

    /// Layers the config file (if any) under these settings.
    pub fn with_file(self) -> Result<Settings> {
        match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                Ok(self.or(Settings::from_toml(&text)?))
            }
            None => Ok(self),
        }
    }

    /// Builds a validated configuration. With `demo` set, the bundled corpus
    /// is written under the output directory and used as the manifest.
    pub fn resolve(self) -> Result<PipelineConfig> {
        let out = self.out.unwrap_or_else(|| PathBuf::from("semflow-out"));
        let seed = self.seed.unwrap_or(DEFAULT_SEED);
        let manifest = if self.demo {
            crate::demo::materialize(&out.join("demo-corpus"))?
        } else {
            self.manifest.ok_or_else(|| Error::Config("--manifest is required (or use --demo)".into()))?
        };
        let format = self.embeddings_format.as_deref().unwrap_or(if self.embeddings.is_some() || !self.demo {
            "word2vec-text"
        } else {
            "synthetic"
        });
        let embeddings = match format {
            "word2vec-text" => EmbeddingSource::Word2VecText(
                self.embeddings.ok_or_else(|| Error::Config("--embeddings is required for word2vec-text".into()))?,
            ),
            "synthetic" => EmbeddingSource::Synthetic { dim: self.dim.unwrap_or(DEFAULT_SYNTHETIC_DIM), seed },
            other => return Err(Error::Config(format!("unknown embeddings format `{other}`"))),
        };
        let mut config = PipelineConfig::new(manifest, embeddings, out.clone());
        config.seed = seed;
        config.stopwords = self.stopwords;
        if let Some(s) = &self.strategy {
            config.strategies = parse_list(s, &StrategyKind::ALL)?;
        }
        if let Some(t) = &self.thresholds {
            config.thresholds = parse_thresholds(t)?;
        }
        if let Some(c) = &self.classifier {
            config.classifiers = parse_list(c, &ClassifierKind::ALL)?;
        }
        if let Some(g) = &self.grouping {
            config.grouping = g.parse()?;
        }
        config.folds = self.folds.unwrap_or(DEFAULT_FOLDS);
        config.cache_dir = if self.no_cache { None } else { Some(self.cache_dir.unwrap_or_else(|| out.join("cache"))) };
        config.workers =
            self.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, std::num::NonZeroUsize::get));
        config.validate()?;
        Ok(config)
    }
}
