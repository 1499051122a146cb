//! Plain-text run configuration.
//!
//! One `key = value` per line, `#` starts a comment. Top-level keys apply to
//! the whole run. `dataset.name`, `simulation.name` and `pipeline.name` each
//! open a new block; the following keys with the same prefix belong to it.
//! Relative paths are resolved against the directory of the config file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use whsboost::classifiers::{ClassifierSpec, Kernel, SvmParams};
use whsboost::ensemble::BoostConfig;
use whsboost::evaluation::{Metric, PairingMode, Pipeline, PipelineKind, SimulationSpec, WilcoxonOptions};
use whsboost::rng::{derive_seed, name_hash};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

type Result<T> = std::result::Result<T, ConfigError>;

macro_rules! bail {
    ($($arg:tt)*) => {
        return Err(ConfigError(format!($($arg)*)))
    };
}

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    Files { csv: PathBuf, schema: PathBuf },
    /// Name of a `simulation` block.
    Simulation(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetEntry {
    pub name: String,
    pub source: DatasetSource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationEntry {
    pub name: String,
    pub spec: SimulationSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatsConfig {
    pub results: Vec<PathBuf>,
    pub metric: Metric,
    pub mode: PairingMode,
    pub alpha: f64,
    pub wilcoxon: WilcoxonOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub path: PathBuf,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub repetitions: usize,
    pub train_fraction: f64,
    pub beta: f64,
    pub normalize: bool,
    pub record_wallclock: bool,
    pub datasets: Vec<DatasetEntry>,
    pub simulations: Vec<SimulationEntry>,
    pub pipelines: Vec<Pipeline>,
    pub stats: StatsConfig,
}

impl RunConfig {
    pub fn simulation(&self, name: &str) -> Option<&SimulationEntry> {
        self.simulations.iter().find(|s| s.name == name)
    }
}

struct Entry {
    line: usize,
    key: String,
    value: String,
}

/// Keys of one block, consumed as they are read so leftovers can be reported.
struct Block {
    kind: &'static str,
    name: String,
    line: usize,
    keys: BTreeMap<String, (usize, String)>,
}

impl Block {
    fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        match self.keys.remove(key) {
            None => Ok(None),
            Some((line, v)) => v.parse().map(Some).map_err(|e| {
                ConfigError(format!("line {line}: invalid value `{v}` for {}.{key}: {e}", self.kind))
            }),
        }
    }

    fn take_or<T: FromStr>(&mut self, key: &str, default: T) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        Ok(self.take(key)?.unwrap_or(default))
    }

    fn require<T: FromStr>(&mut self, key: &str) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        match self.take(key)? {
            Some(v) => Ok(v),
            None => bail!(
                "line {}: {} `{}` is missing {}.{key}",
                self.line,
                self.kind,
                self.name,
                self.kind
            ),
        }
    }

    fn finish(self) -> Result<()> {
        if let Some((key, (line, _))) = self.keys.into_iter().next() {
            bail!("line {line}: unknown key {}.{key}", self.kind);
        }
        Ok(())
    }
}

fn parse_entries(text: &str) -> Result<Vec<Entry>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("line {}: expected `key = value`, found `{line}`", i + 1);
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            bail!("line {}: empty key or value", i + 1);
        }
        out.push(Entry {
            line: i + 1,
            key: key.to_string(),
            value: value.to_string(),
        });
    }
    Ok(out)
}

pub fn load(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
    parse(&text, path)
}

/// Parses `text` as if read from `path` and checks that referenced input
/// files exist.
pub fn parse(text: &str, path: &Path) -> Result<RunConfig> {
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let resolve = |p: &str| -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base.join(p)
        }
    };

    let mut top = Block {
        kind: "top-level",
        name: path.display().to_string(),
        line: 1,
        keys: BTreeMap::new(),
    };
    let mut blocks: Vec<Block> = Vec::new();
    for e in parse_entries(text)? {
        let block_kind = ["dataset", "simulation", "pipeline"]
            .into_iter()
            .find(|k| e.key.starts_with(&format!("{k}.")));
        let target = match block_kind {
            None => &mut top,
            Some(kind) => {
                let sub = &e.key[kind.len() + 1..];
                if sub == "name" {
                    if blocks.iter().any(|b| b.kind == kind && b.name == e.value) {
                        bail!("line {}: {kind} `{}` is defined twice", e.line, e.value);
                    }
                    blocks.push(Block {
                        kind,
                        name: e.value,
                        line: e.line,
                        keys: BTreeMap::new(),
                    });
                    continue;
                }
                match blocks.last_mut() {
                    Some(b) if b.kind == kind => b,
                    _ => bail!("line {}: `{}` must follow a `{kind}.name` line", e.line, e.key),
                }
            }
        };
        let sub = match block_kind {
            Some(kind) => e.key[kind.len() + 1..].to_string(),
            None => e.key.clone(),
        };
        if target.keys.insert(sub, (e.line, e.value)).is_some() {
            bail!("line {}: key `{}` is repeated", e.line, e.key);
        }
    }

    let seed: u64 = match top.take("seed")? {
        Some(s) => s,
        None => bail!("{}: `seed` is required", path.display()),
    };
    let out = top.take::<String>("out")?.map(|p| resolve(&p));
    let repetitions = top.take_or("repetitions", 50usize)?;
    if repetitions == 0 {
        bail!("repetitions must be at least 1");
    }
    let train_fraction = top.take_or("train_fraction", 0.7f64)?;
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        bail!("train_fraction {train_fraction} is outside (0, 1)");
    }
    let beta = top.take_or("beta", 3.0f64)?;
    if !(beta > 0.0 && beta.is_finite()) {
        bail!("beta must be positive");
    }
    let normalize = top.take_or("normalize", true)?;
    let record_wallclock = top.take_or("record_wallclock", false)?;

    let mut results = Vec::new();
    if let Some(list) = top.take::<String>("stats.results")? {
        for p in list.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let p = resolve(p);
            if !p.is_file() {
                bail!("stats.results: file {} does not exist", p.display());
            }
            results.push(p);
        }
    }
    let metric = Metric::parse(&top.take_or("stats.metric", "f_beta".to_string())?).map_err(|e| ConfigError(e.to_string()))?;
    let mode = match top.take_or("stats.mode", "pooled".to_string())?.as_str() {
        "pooled" => PairingMode::Pooled,
        "per-dataset" => PairingMode::PerDataset,
        other => bail!("stats.mode `{other}` must be `pooled` or `per-dataset`"),
    };
    let alpha = top.take_or("stats.alpha", 0.05f64)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        bail!("stats.alpha {alpha} is outside (0, 1)");
    }
    let defaults = WilcoxonOptions::default();
    let wilcoxon = WilcoxonOptions {
        continuity_correction: top.take_or("stats.continuity_correction", defaults.continuity_correction)?,
        exact_max_n: top.take_or("stats.exact_max_n", defaults.exact_max_n)?,
    };
    top.finish()?;

    let mut datasets = Vec::new();
    let mut simulations = Vec::new();
    let mut pipelines = Vec::new();
    for mut b in blocks {
        match b.kind {
            "dataset" => {
                let source = match b.take::<String>("simulation")? {
                    Some(sim) => DatasetSource::Simulation(sim),
                    None => {
                        let csv = resolve(&b.require::<String>("csv")?);
                        let schema = resolve(&b.require::<String>("schema")?);
                        for p in [&csv, &schema] {
                            if !p.is_file() {
                                bail!("dataset `{}`: file {} does not exist", b.name, p.display());
                            }
                        }
                        DatasetSource::Files { csv, schema }
                    }
                };
                datasets.push(DatasetEntry {
                    name: b.name.clone(),
                    source,
                });
            }
            "simulation" => {
                let spec = SimulationSpec {
                    n_total: b.take_or("n_total", 1000)?,
                    p: b.take_or("p", 25)?,
                    p0: b.take_or("p0", 8)?,
                    minority_fraction: b.require("minority_fraction")?,
                    oversample_pool: b.take_or("oversample_pool", 5000)?,
                    seed: b.take_or("seed", derive_seed(seed, &[name_hash(&b.name)]))?,
                };
                spec.validate()
                    .map_err(|e| ConfigError(format!("simulation `{}`: {e}", b.name)))?;
                simulations.push(SimulationEntry {
                    name: b.name.clone(),
                    spec,
                });
            }
            _ => pipelines.push(parse_pipeline(&mut b)?),
        }
        b.finish()?;
    }
    for d in &datasets {
        if let DatasetSource::Simulation(sim) = &d.source {
            if !simulations.iter().any(|s| &s.name == sim) {
                bail!("dataset `{}` refers to unknown simulation `{sim}`", d.name);
            }
        }
    }
    Ok(RunConfig {
        path: path.to_path_buf(),
        seed,
        out,
        repetitions,
        train_fraction,
        beta,
        normalize,
        record_wallclock,
        datasets,
        simulations,
        pipelines,
        stats: StatsConfig {
            results,
            metric,
            mode,
            alpha,
            wilcoxon,
        },
    })
}

fn parse_pipeline(b: &mut Block) -> Result<Pipeline> {
    let kind: String = b.require("kind")?;
    let kind: PipelineKind = kind.parse().map_err(|e| ConfigError(format!("pipeline `{}`: {e}", b.name)))?;
    let classifier: String = b.require("classifier")?;
    let base = match classifier.as_str() {
        "knn" => ClassifierSpec::knn(b.take_or("k", 3)?),
        "dtree" => ClassifierSpec::dtree(b.take_or("max_depth", 10)?, b.take_or("min_leaf", 2)?),
        "bpnn" => ClassifierSpec::bpnn(
            b.take_or("hidden_units", 10)?,
            b.take_or("epochs", 100)?,
            b.take_or("learning_rate", 0.1)?,
        ),
        "svm" => {
            let defaults = SvmParams::default();
            let kernel = match b.take_or("kernel", "rbf".to_string())?.as_str() {
                "rbf" => Kernel::Rbf {
                    gamma: b.take_or("gamma", 1.0)?,
                },
                "linear" => Kernel::Linear,
                other => bail!("pipeline `{}`: kernel `{other}` must be `rbf` or `linear`", b.name),
            };
            ClassifierSpec::Svm(SvmParams {
                kernel,
                c: b.take_or("c", defaults.c)?,
                tolerance: b.take_or("tolerance", defaults.tolerance)?,
                max_passes: b.take_or("max_passes", defaults.max_passes)?,
            })
        }
        other => bail!(
            "pipeline `{}`: classifier `{other}` must be one of knn, dtree, bpnn, svm",
            b.name
        ),
    };
    let mut config = BoostConfig::new(base, b.take_or("seed", 0)?);
    config.iterations = b.take_or("iterations", config.iterations)?;
    config.balanced_size = b.take("balanced_size")?;
    config.pool_constant = b.take_or("pool_constant", config.pool_constant)?;
    config.smote.k = b.take_or("smote_k", config.smote.k)?;
    config.smote.literal_formula = b.take_or("literal_formula", config.smote.literal_formula)?;
    config.error_threshold = b.take_or("error_threshold", config.error_threshold)?;
    config.max_retries = b.take_or("max_retries", config.max_retries)?;
    config
        .validate()
        .map_err(|e| ConfigError(format!("pipeline `{}`: {e}", b.name)))?;
    Ok(Pipeline::new(b.name.clone(), kind, config))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_str(text: &str) -> Result<RunConfig> {
        parse(text, Path::new("/nonexistent/run.conf"))
    }

    #[test]
    fn full_config() {
        let cfg = parse_str(
            "seed = 7\nrepetitions = 3 # short\nbeta = 2\n\n\
             simulation.name = s10\nsimulation.minority_fraction = 0.1\n\
             dataset.name = sim\ndataset.simulation = s10\n\
             pipeline.name = whs\npipeline.kind = whsboost\npipeline.classifier = knn\npipeline.k = 5\npipeline.iterations = 8\n\
             pipeline.name = plain\npipeline.kind = none\npipeline.classifier = svm\npipeline.kernel = linear\npipeline.c = 2\n",
        )
        .unwrap();
        assert_eq!((cfg.seed, cfg.repetitions, cfg.beta), (7, 3, 2.0));
        assert_eq!(cfg.simulations[0].spec.n_total, 1000);
        assert_eq!(cfg.datasets[0].source, DatasetSource::Simulation("s10".into()));
        assert_eq!(cfg.pipelines.len(), 2);
        assert_eq!(cfg.pipelines[0].config.base, ClassifierSpec::knn(5));
        assert_eq!(cfg.pipelines[0].config.iterations, 8);
        assert_eq!(cfg.pipelines[1].config.base, ClassifierSpec::svm(Kernel::Linear, 2.0));
    }

    #[test]
    fn seed_is_mandatory() {
        let err = parse_str("repetitions = 2\n").unwrap_err();
        assert!(err.0.contains("seed"));
    }

    #[test]
    fn missing_files_are_named() {
        let err = parse_str("seed = 1\ndataset.name = g\ndataset.csv = missing.csv\ndataset.schema = missing.json\n")
            .unwrap_err();
        assert!(err.0.contains("/nonexistent/missing.csv"), "{err}");
    }

    #[test]
    fn malformed_input_is_rejected() {
        for text in [
            "seed = x\n",
            "seed = 1\nbogus = 2\n",
            "seed = 1\npipeline.kind = none\n",
            "seed = 1\npipeline.name = a\npipeline.kind = none\npipeline.classifier = knn\npipeline.gamma = 1\n",
            "seed = 1\npipeline.name = a\npipeline.kind = magic\npipeline.classifier = knn\n",
            "seed = 1\npipeline.name = a\npipeline.name = a\n",
            "seed = 1\nseed = 2\n",
            "seed = 1\njust words\n",
            "seed = 1\ndataset.name = d\ndataset.simulation = nowhere\n",
            "seed = 1\nsimulation.name = s\nsimulation.minority_fraction = 0.7\n",
        ] {
            assert!(parse_str(text).is_err(), "accepted: {text}");
        }
    }
}
