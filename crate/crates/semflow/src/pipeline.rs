//! End-to-end orchestration: per-book stages with caching, then
//! classification per subtask.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::sync::OnceLock;

use rayon::prelude::*;

use semflow_core::classify::{best_report, evaluate_all, stratified_folds, CvReport, Dataset};
use semflow_core::community::{louvain, Graph};
use semflow_core::corpus::{self, strip_boilerplate, Sentence, StopWords};
use semflow_core::embed::{embed_document, EmbeddingStore, SentenceVector};
use semflow_core::motifs::{census, Strategy, StrategyKind};
use semflow_core::semflow::{build_markov, community_sequence, MarkovChain};
use semflow_core::simnet::{min_k_connected, SimilarityGraph};

use crate::cache::{key, Cache, StageStats};
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::format::{self, FeatureRow, Floats, PartitionRecord};
use crate::io::{load_stopwords, read_text};
use crate::manifest::{Manifest, ManifestEntry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Ingest,
    Embed,
    Graph,
    Communities,
    Markov,
    Motifs,
    Classify,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Embed => "embed",
            Stage::Graph => "graph",
            Stage::Communities => "communities",
            Stage::Markov => "markov",
            Stage::Motifs => "motifs",
            Stage::Classify => "classify",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A book left out of the run, and why.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exclusion {
    pub id: String,
    pub stage: Stage,
    pub reason: String,
}

/// Everything computed for one book, up to the requested stage.
#[derive(Debug, Clone, PartialEq)]
pub struct BookRun {
    pub entry: ManifestEntry,
    pub class: Option<String>,
    pub sentences: Vec<Sentence>,
    pub vectors: Option<Vec<SentenceVector>>,
    pub graph: Option<SimilarityGraph>,
    pub partition: Option<PartitionRecord>,
    pub chain: Option<MarkovChain>,
    pub features: Vec<FeatureRow>,
}

/// Best cross-validation result of one subtask under one strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskResult {
    pub best: CvReport,
    /// Every (threshold, classifier) evaluated, in grid order.
    pub grid: Vec<CvReport>,
    pub folds: usize,
    pub folds_reduced_from: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskReport {
    /// Classes joined by ` x `, e.g. `children x philosophy`.
    pub name: String,
    pub classes: Vec<String>,
    pub strategy: StrategyKind,
    pub books: usize,
    /// `Err` holds the reason the subtask could not be evaluated.
    pub result: std::result::Result<TaskResult, String>,
}

#[derive(Debug)]
pub struct Outcome {
    pub books: Vec<BookRun>,
    pub exclusions: Vec<Exclusion>,
    pub tasks: Vec<TaskReport>,
    pub cache: std::collections::BTreeMap<String, StageStats>,
}

struct Context<'a> {
    config: &'a PipelineConfig,
    manifest: Manifest,
    stopwords: StopWords,
    stopwords_key: String,
    cache: Cache,
    until: Stage,
}

type BookResult = std::result::Result<BookRun, Exclusion>;

fn exclude(entry: &ManifestEntry, stage: Stage, reason: impl fmt::Display) -> Exclusion {
    Exclusion { id: entry.id.clone(), stage, reason: reason.to_string() }
}

impl Context<'_> {
    fn ingest(&self, entry: &ManifestEntry) -> std::result::Result<(String, Vec<Sentence>), Exclusion> {
        let path = self.manifest.resolve(entry);
        let raw = read_text(&path).map_err(|e| exclude(entry, Stage::Ingest, e))?;
        let stage_key = key(&[b"ingest", key(&[raw.as_bytes()]).as_bytes(), self.stopwords_key.as_bytes()]);
        let doc = entry.id.as_str();
        let sentences = self
            .cache
            .fetch(
                "ingest",
                &stage_key,
                || {
                    let stripped = strip_boilerplate(&raw)?;
                    if !stripped.markers_found {
                        log::warn!("{doc}: no start/end markers, using the whole file");
                    }
                    let offset = stripped.text.as_ptr() as usize - raw.as_ptr() as usize;
                    let mut found = corpus::sentences(doc, stripped.text, &self.stopwords);
                    for s in &mut found {
                        s.span = s.span.start + offset..s.span.end + offset;
                    }
                    Ok(found)
                },
                |s| format::write_sentences(s),
                |text| format::read_sentences(doc, text),
            )
            .map_err(|e| exclude(entry, Stage::Ingest, e))?;
        if sentences.is_empty() {
            return Err(exclude(entry, Stage::Ingest, "no sentences with content words"));
        }
        Ok((stage_key, sentences))
    }

    /// Runs the stages after ingestion. `Err` is fatal for the whole run;
    /// `Ok(Err(_))` excludes only this book.
    fn process<'s>(
        &self,
        entry: &ManifestEntry,
        ingest_key: &str,
        sentences: Vec<Sentence>,
        store: &(dyn Fn() -> Result<&'s EmbeddingStore> + Sync),
        fingerprint: &str,
    ) -> Result<BookResult> {
        let doc = entry.id.as_str();
        let mut run = BookRun {
            entry: entry.clone(),
            class: self.config.grouping.class(entry),
            sentences,
            vectors: None,
            graph: None,
            partition: None,
            chain: None,
            features: Vec::new(),
        };
        if self.until < Stage::Embed {
            return Ok(Ok(run));
        }

        let embed_key = key(&[b"embed", ingest_key.as_bytes(), fingerprint.as_bytes()]);
        let mut fatal = None;
        let vectors = self.cache.fetch(
            "embed",
            &embed_key,
            || match store() {
                Ok(store) => Ok(embed_document(&run.sentences, store)),
                Err(e) => {
                    let message = e.to_string();
                    fatal = Some(e);
                    Err(Error::Embeddings(message))
                }
            },
            |v| format::write_vectors(v, Floats::Exact),
            |text| format::read_vectors(doc, text),
        );
        if let Some(e) = fatal {
            return Err(e);
        }
        let vectors = match vectors {
            Ok(v) if v.len() >= 2 => v,
            Ok(v) => {
                return Ok(Err(exclude(
                    entry,
                    Stage::Embed,
                    format!("{} sentence(s) with covered words; need 2", v.len()),
                )))
            }
            Err(e) => return Ok(Err(exclude(entry, Stage::Embed, e))),
        };
        run.vectors = Some(vectors);
        if self.until < Stage::Graph {
            return Ok(Ok(run));
        }
        let vectors = run.vectors.as_deref().expect("set above");

        let graph_key = key(&[b"graph", embed_key.as_bytes()]);
        let graph = self.cache.fetch(
            "graph",
            &graph_key,
            || Ok(min_k_connected(vectors)?),
            |g| format::write_graph(g, Floats::Exact),
            format::read_graph,
        );
        let graph = match graph {
            Ok(g) => g,
            Err(e) => return Ok(Err(exclude(entry, Stage::Graph, e))),
        };
        run.graph = Some(graph);
        if self.until < Stage::Communities {
            return Ok(Ok(run));
        }
        let graph = run.graph.as_ref().expect("set above");

        let seed = self.config.seed;
        let communities_key = key(&[b"communities", graph_key.as_bytes(), &seed.to_le_bytes()]);
        let record = self.cache.fetch(
            "communities",
            &communities_key,
            || {
                let found = louvain(&Graph::from(graph), seed);
                Ok(PartitionRecord { seed, modularity: found.modularity, partition: found.partition })
            },
            |r| format::write_partition(r, Floats::Exact),
            format::read_partition,
        );
        let record = match record {
            Ok(r) => r,
            Err(e) => return Ok(Err(exclude(entry, Stage::Communities, e))),
        };
        run.partition = Some(record);
        if self.until < Stage::Markov {
            return Ok(Ok(run));
        }
        let partition = &run.partition.as_ref().expect("set above").partition;

        let markov_key = key(&[b"markov", communities_key.as_bytes()]);
        let chain = self.cache.fetch(
            "markov",
            &markov_key,
            || Ok(build_markov(&community_sequence(doc, vectors, partition)?)?),
            |c| format::write_chain(c, Floats::Exact),
            format::read_chain,
        );
        let chain = match chain {
            Ok(c) => c,
            Err(e) => return Ok(Err(exclude(entry, Stage::Markov, e))),
        };
        run.chain = Some(chain);
        if self.until < Stage::Motifs {
            return Ok(Ok(run));
        }
        let chain = run.chain.as_ref().expect("set above");

        let mut params = Vec::new();
        for &kind in &self.config.strategies {
            params.extend_from_slice(kind.as_str().as_bytes());
            for t in self.config.grid(kind) {
                params.extend_from_slice(&t.to_bits().to_le_bytes());
            }
        }
        let label = run.class.clone();
        let features = self.cache.fetch(
            "motifs",
            &key(&[b"motifs", markov_key.as_bytes(), &params]),
            || {
                let mut rows = Vec::new();
                for &kind in &self.config.strategies {
                    for threshold in self.config.grid(kind) {
                        let strategy = Strategy { kind, threshold };
                        rows.push(FeatureRow { label: label.clone(), features: census(doc, chain, strategy)? });
                    }
                }
                Ok(rows)
            },
            |rows| format::write_features(rows, Floats::Exact).expect("non-empty rows"),
            |text| {
                // The label is not part of the key; take it from the manifest.
                let mut rows = format::read_features(text)?;
                rows.iter_mut().for_each(|r| r.label = label.clone());
                Ok(rows)
            },
        );
        match features {
            Ok(rows) => run.features = rows,
            Err(e) => return Ok(Err(exclude(entry, Stage::Motifs, e))),
        }
        Ok(Ok(run))
    }
}

/// Runs every book through the stages up to `until` and, for
/// [`Stage::Classify`], evaluates every subtask. Per-book failures become
/// exclusions; configuration, embedding-load and manifest errors are fatal.
pub fn run(config: &PipelineConfig, until: Stage) -> Result<Outcome> {
    config.validate()?;
    let manifest = Manifest::load(&config.manifest)?;
    let stopwords = match &config.stopwords {
        Some(path) => load_stopwords(path)?,
        None => StopWords::english(),
    };
    let stopwords_key = key(&stopwords.iter().map(str::as_bytes).collect::<Vec<_>>());
    let ctx =
        Context { config, manifest, stopwords, stopwords_key, cache: Cache::new(config.cache_dir.clone()), until };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;

    let ingested: Vec<_> = pool.install(|| ctx.manifest.entries.par_iter().map(|e| ctx.ingest(e)).collect());

    let fingerprint = if until >= Stage::Embed { config.embeddings.fingerprint()? } else { String::new() };
    let vocabulary: HashSet<String> =
        ingested.iter().flatten().flat_map(|(_, s)| s.iter().flat_map(|s| s.tokens.iter().cloned())).collect();
    let store_cell: OnceLock<std::result::Result<EmbeddingStore, String>> = OnceLock::new();
    let store = || -> Result<&EmbeddingStore> {
        store_cell
            .get_or_init(|| {
                log::info!("loading embeddings");
                config.embeddings.load(Some(&vocabulary)).map_err(|e| e.to_string())
            })
            .as_ref()
            .map_err(|e| Error::Embeddings(e.clone()))
    };

    let processed: Vec<Result<BookResult>> = pool.install(|| {
        ctx.manifest
            .entries
            .par_iter()
            .zip(ingested)
            .map(|(entry, ingest)| match ingest {
                Ok((ingest_key, sentences)) => ctx.process(entry, &ingest_key, sentences, &store, &fingerprint),
                Err(exclusion) => Ok(Err(exclusion)),
            })
            .collect()
    });
    let mut books = Vec::new();
    let mut exclusions = Vec::new();
    for result in processed {
        match result? {
            Ok(book) => books.push(book),
            Err(exclusion) => {
                log::warn!("excluding {} at {}: {}", exclusion.id, exclusion.stage, exclusion.reason);
                exclusions.push(exclusion);
            }
        }
    }
    let tasks = if until >= Stage::Classify { pool.install(|| classify(config, &books)) } else { Vec::new() };
    Ok(Outcome { books, exclusions, tasks, cache: ctx.cache.stats() })
}

/// Pairs of classes in sorted order, then all classes together when there
/// are at least three.
pub fn subtasks(classes: &[String]) -> Vec<Vec<String>> {
    let mut tasks = Vec::new();
    for i in 0..classes.len() {
        for j in i + 1..classes.len() {
            tasks.push(vec![classes[i].clone(), classes[j].clone()]);
        }
    }
    if classes.len() >= 3 {
        tasks.push(classes.to_vec());
    }
    tasks
}

fn classify(config: &PipelineConfig, books: &[BookRun]) -> Vec<TaskReport> {
    let classes: Vec<String> =
        books.iter().filter_map(|b| b.class.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    let jobs: Vec<(Vec<String>, StrategyKind)> = subtasks(&classes)
        .into_iter()
        .flat_map(|task| config.strategies.iter().map(move |&s| (task.clone(), s)))
        .collect();
    jobs.into_par_iter()
        .map(|(task, strategy)| {
            let members: Vec<&BookRun> =
                books.iter().filter(|b| b.class.as_ref().is_some_and(|c| task.contains(c))).collect();
            TaskReport {
                name: task.join(" x "),
                books: members.len(),
                result: evaluate_task(config, &members, strategy),
                classes: task,
                strategy,
            }
        })
        .collect()
}

fn evaluate_task(
    config: &PipelineConfig,
    members: &[&BookRun],
    strategy: StrategyKind,
) -> std::result::Result<TaskResult, String> {
    let grid = config.grid(strategy);
    let datasets = grid
        .iter()
        .map(|&t| {
            let rows = members.iter().map(|b| {
                let row = b
                    .features
                    .iter()
                    .find(|r| r.features.strategy.kind == strategy && r.features.strategy.threshold == t)
                    .expect("features cover the configured grid");
                (b.entry.id.clone(), row.features.values.to_vec(), b.class.clone().expect("members have classes"))
            });
            Ok((t, Dataset::from_labeled(rows)?))
        })
        .collect::<semflow_core::Result<Vec<_>>>()
        .map_err(|e| e.to_string())?;
    let labels = datasets[0].1.labels();
    let folds = stratified_folds(&labels, config.folds, config.seed).map_err(|e| e.to_string())?;
    let per_threshold: Vec<Vec<CvReport>> = datasets
        .into_par_iter()
        .map(|point| evaluate_all(&[point], &config.classifiers, strategy, config.folds, config.seed))
        .collect::<semflow_core::Result<_>>()
        .map_err(|e| e.to_string())?;
    let grid: Vec<CvReport> = per_threshold.into_iter().flatten().collect();
    let best = best_report(&grid).expect("non-empty grid").clone();
    Ok(TaskResult { best, grid, folds: folds.count, folds_reduced_from: folds.reduced_from })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subtask_enumeration() {
        let c = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        assert_eq!(subtasks(&c(&["a", "b"])), vec![c(&["a", "b"])]);
        assert_eq!(
            subtasks(&c(&["a", "b", "c"])),
            vec![c(&["a", "b"]), c(&["a", "c"]), c(&["b", "c"]), c(&["a", "b", "c"])]
        );
        assert!(subtasks(&c(&["a"])).is_empty());
    }
}
