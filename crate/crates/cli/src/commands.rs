use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use whsboost::data::{load_csv_dataset, write_csv_dataset, Dataset};
use whsboost::evaluation::report::{PLOTDATA_FILE, RESULTS_FILE, SUMMARY_FILE, WILCOXON_FILE};
use whsboost::evaluation::{
    pairwise_wilcoxon, read_results_csv, run_experiment, simulate_dataset, write_plotdata_csv, write_results_csv,
    write_wilcoxon_csv, ExperimentResults, ExperimentSpec, PipelineFailure, SimulationMetadata, SummaryDocument,
};

use crate::config::{DatasetSource, RunConfig};

/// Why a command did not fully succeed.
#[derive(Debug)]
pub enum Failure {
    /// Bad configuration or unusable input files.
    Input(anyhow::Error),
    /// A failure while running; outputs may be incomplete.
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Input(e) | Failure::Runtime(e) => e,
        }
    }
}

/// Successful return; `partial` means some pipelines failed but outputs exist.
pub struct Outcome {
    pub partial: bool,
}

/// Writes through `<path>.partial` and renames once complete, so an
/// interrupted run never leaves a truncated final file.
fn write_atomic(path: &Path, fill: impl FnOnce(&mut BufWriter<File>) -> anyhow::Result<()>) -> anyhow::Result<()> {
    let mut partial = path.as_os_str().to_owned();
    partial.push(".partial");
    let partial = PathBuf::from(partial);
    let file = File::create(&partial).with_context(|| format!("cannot create {}", partial.display()))?;
    let mut w = BufWriter::new(file);
    fill(&mut w)?;
    w.flush()?;
    drop(w);
    fs::rename(&partial, path).with_context(|| format!("cannot rename {} into place", partial.display()))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

pub fn simulate(cfg: &RunConfig, out: &Path) -> Result<Outcome, Failure> {
    if cfg.simulations.is_empty() {
        return Err(Failure::Input(anyhow!("no simulation blocks in {}", cfg.path.display())));
    }
    for sim in &cfg.simulations {
        let (data, meta) = simulate_dataset(&sim.spec)
            .map_err(|e| Failure::Runtime(anyhow!("simulation `{}`: {e}", sim.name)))?;
        log::info!(
            "simulation `{}`: {} rows, {} positive",
            sim.name,
            data.n_rows(),
            data.count_positive()
        );
        let write = |name: String, fill: &dyn Fn(&mut BufWriter<File>) -> anyhow::Result<()>| {
            write_atomic(&out.join(name), |w| fill(w)).map_err(Failure::Runtime)
        };
        write(format!("{}.csv", sim.name), &|w| Ok(write_csv_dataset(&data, w)?))?;
        write(format!("{}.schema.json", sim.name), &|w| {
            serde_json::to_writer_pretty(&mut *w, data.schema())?;
            Ok(w.write_all(b"\n")?)
        })?;
        write(format!("{}.meta.json", sim.name), &|w| {
            serde_json::to_writer_pretty(&mut *w, &meta)?;
            Ok(w.write_all(b"\n")?)
        })?;
    }
    Ok(Outcome { partial: false })
}

fn load_dataset(cfg: &RunConfig, source: &DatasetSource) -> Result<(Dataset, Option<SimulationMetadata>), Failure> {
    match source {
        DatasetSource::Files { csv, schema } => load_csv_dataset(csv, schema)
            .map(|d| (d, None))
            .map_err(|e| Failure::Input(anyhow!("{e}"))),
        DatasetSource::Simulation(name) => {
            let sim = cfg.simulation(name).expect("simulation references are checked when parsing");
            simulate_dataset(&sim.spec)
                .map(|(d, m)| (d, Some(m)))
                .map_err(|e| Failure::Runtime(anyhow!("simulation `{name}`: {e}")))
        }
    }
}

pub fn bench(cfg: &RunConfig, out: &Path) -> Result<Outcome, Failure> {
    if cfg.datasets.is_empty() {
        return Err(Failure::Input(anyhow!("no dataset blocks in {}", cfg.path.display())));
    }
    if cfg.pipelines.is_empty() {
        return Err(Failure::Input(anyhow!("no pipeline blocks in {}", cfg.path.display())));
    }
    let mut loaded = Vec::new();
    for entry in &cfg.datasets {
        let (data, meta) = load_dataset(cfg, &entry.source)?;
        log::info!(
            "dataset `{}`: {} rows, {} features, {} positive",
            entry.name,
            data.n_rows(),
            data.n_features(),
            data.count_positive()
        );
        loaded.push((entry, data, meta));
    }

    let mut all = ExperimentResults::default();
    let mut summary = SummaryDocument::new(&[], &[], cfg.beta, cfg.repetitions, cfg.train_fraction, cfg.seed);
    for (entry, data, meta) in &loaded {
        let spec = ExperimentSpec {
            dataset: entry.name.clone(),
            repetitions: cfg.repetitions,
            train_fraction: cfg.train_fraction,
            beta: cfg.beta,
            seed: cfg.seed,
            normalize: cfg.normalize,
            record_wallclock: cfg.record_wallclock,
        };
        match run_experiment(data, &cfg.pipelines, &spec) {
            Ok(res) => all.extend(res),
            Err(e) => {
                log::error!("dataset `{}`: {e}", entry.name);
                all.failures.extend(cfg.pipelines.iter().map(|p| PipelineFailure {
                    dataset: entry.name.clone(),
                    pipeline: p.name.clone(),
                    repetition: 0,
                    message: e.to_string(),
                }));
            }
        }
        if let Some(m) = meta {
            summary.simulations.insert(entry.name.clone(), m.clone());
        }
    }
    summary.pipelines = whsboost::evaluation::summarize(&all.rows);
    summary.failures = all.failures.clone();

    let rt = Failure::Runtime;
    write_atomic(&out.join(RESULTS_FILE), |w| Ok(write_results_csv(&all.rows, w)?)).map_err(rt)?;
    write_atomic(&out.join(SUMMARY_FILE), |w| Ok(summary.write(w)?)).map_err(rt)?;
    write_atomic(&out.join(PLOTDATA_FILE), |w| Ok(write_plotdata_csv(&all.rows, w)?)).map_err(rt)?;

    for s in &summary.pipelines {
        log::info!(
            "{} / {}: recall {:.4} precision {:.4} f_beta {:.4} auc {:.4}",
            s.dataset,
            s.pipeline,
            s.recall.mean,
            s.precision.mean,
            s.f_beta.mean,
            s.auc.mean
        );
    }
    if all.rows.is_empty() {
        return Err(Failure::Runtime(anyhow!("every pipeline failed")));
    }
    Ok(Outcome {
        partial: !all.failures.is_empty(),
    })
}

pub fn stats(cfg: &RunConfig, out: &Path) -> Result<Outcome, Failure> {
    let st = &cfg.stats;
    if st.results.is_empty() {
        return Err(Failure::Input(anyhow!("`stats.results` lists no result files")));
    }
    let mut rows = Vec::new();
    for path in &st.results {
        let file = File::open(path)
            .with_context(|| format!("cannot open {}", path.display()))
            .map_err(Failure::Input)?;
        let mut part = read_results_csv(file)
            .map_err(|e| Failure::Input(anyhow!("{}: {e}", path.display())))?;
        rows.append(&mut part);
    }
    let cells = pairwise_wilcoxon(&rows, st.metric, st.mode, st.alpha, &st.wilcoxon)
        .map_err(|e| Failure::Input(anyhow!("{e}")))?;
    let significant = cells.iter().filter(|c| c.significant).count();
    log::info!("{} comparisons, {significant} significant at {}", cells.len(), st.alpha);
    write_atomic(&out.join(WILCOXON_FILE), |w| Ok(write_wilcoxon_csv(&cells, w)?)).map_err(Failure::Runtime)?;
    Ok(Outcome { partial: false })
}
