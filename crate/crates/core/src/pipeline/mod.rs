//! End-to-end runs: folds, sampling, per-fold masked graphs, extraction and file output.
//!
//! Every random choice draws from a ChaCha8 stream seeded by
//! [`derive_seed`]`(seed, purpose, fold)`, so runs are reproducible and the number of
//! worker threads never changes an output byte.

mod config;
mod folds;
mod sampling;

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{ingest_tables, TabularDataset};
use crate::error::{Error, Result};
use crate::features::{extract_all_features, FeatureTable, GeneratorRegistry, LabeledPair};
use crate::graph::{
    build_complete_graph, export_edge_list, mask_predicted_edges, EdgeIdx, FoldMaskedGraph, HeteroGraph,
};
use crate::schema::{load_schema, DatasetSchema};
use crate::scheme::{generate_capped, SchemeMask};

pub use config::{RunConfig, Task, JOBS_ENV};
pub use folds::{derive_seed, make_folds, rng_for, FoldPlan, Instance, SeedPurpose};
pub use sampling::{build_candidate_sets, sample_negatives, CandidateSet, TargetUniverse};

/// Name of the manifest written into the output directory.
pub const MANIFEST_FILE: &str = "manifest.json";

/// One emitted file, listed in the manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    /// Data rows, excluding any header.
    pub rows: usize,
    pub columns: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub n_folds: usize,
    pub task: Task,
    pub schemes: Vec<String>,
    pub files: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn file(&self, path: &str) -> Option<&ManifestEntry> {
        self.files.iter().find(|f| f.path == path)
    }
}

/// File contents produced in memory before anything touches the disk.
#[derive(Debug, Clone)]
pub struct OutputFile {
    pub path: String,
    pub bytes: Vec<u8>,
    pub rows: usize,
    pub columns: usize,
}

impl OutputFile {
    fn entry(&self) -> ManifestEntry {
        ManifestEntry {
            path: self.path.clone(),
            rows: self.rows,
            columns: self.columns,
            sha256: hex::encode(Sha256::digest(&self.bytes)),
        }
    }
}

fn table_file(path: String, table: &FeatureTable) -> Result<OutputFile> {
    let mut bytes = Vec::new();
    table.write_csv(&mut bytes)?;
    Ok(OutputFile {
        path,
        bytes,
        rows: table.row_count(),
        columns: table.columns().len() + 3,
    })
}

/// Everything a run needs before the per-fold work: graph, instances, folds, schemes.
#[derive(Debug)]
pub struct Prepared {
    pub config: RunConfig,
    pub schema: DatasetSchema,
    pub dataset: TabularDataset,
    pub graph: HeteroGraph,
    /// Predicted instances, one per predicted edge, sorted by (source, target).
    pub instances: Vec<Instance>,
    instance_edges: Vec<EdgeIdx>,
    pub plan: FoldPlan,
    pub masks: Vec<SchemeMask>,
    pub universe: TargetUniverse,
    pub registry: GeneratorRegistry,
}

/// Train and test pairs of one fold, labeled for the task.
#[derive(Debug, Clone)]
pub struct FoldPairs {
    pub train: Vec<LabeledPair>,
    pub test: Vec<LabeledPair>,
    pub candidates: Vec<CandidateSet>,
}

impl Prepared {
    /// Loads schema and tables named by `config`.
    pub fn load(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let schema = load_schema(&config.schema)?;
        let dataset = ingest_tables(&schema, &config.data_dir)?;
        Self::from_parts(config, schema, dataset)
    }

    pub fn from_parts(config: RunConfig, schema: DatasetSchema, dataset: TabularDataset) -> Result<Self> {
        config.validate()?;
        let dataset = match config.sparse_feature_fraction {
            Some(f) => dataset.drop_sparse_features(&schema, f),
            None => dataset,
        };
        let dataset = dataset.discretize(&schema)?;
        let graph = build_complete_graph(&dataset, &schema)?;
        let masks = generate_capped(
            &schema.relationship_names(),
            &schema.predicted().name,
            config.max_schemes,
        )?;

        let src_type = graph
            .entity_type_index(schema.source_entity())
            .ok_or_else(|| Error::data(&schema.predicted().name, "no source entity values"))?;
        let tgt_type = graph
            .entity_type_index(schema.target_entity())
            .ok_or_else(|| Error::data(&schema.predicted().name, "no target entity values"))?;
        let mut oriented: Vec<(Instance, EdgeIdx)> = graph
            .predicted_edges()
            .into_iter()
            .map(|e| {
                let edge = graph.edge(e);
                let (s, t) = if graph.vertex_entity(edge.a) == src_type {
                    (edge.a, edge.b)
                } else {
                    (edge.b, edge.a)
                };
                let inst = Instance {
                    source: graph.vertex(s).clone(),
                    target: graph.vertex(t).clone(),
                    label: edge.label.clone(),
                };
                (inst, e)
            })
            .collect();
        oriented.sort();
        let (instances, instance_edges): (Vec<_>, Vec<_>) = oriented.into_iter().unzip();

        let plan = make_folds(&instances, config.n_folds, config.prune_threshold, config.seed)?;
        let targets = graph
            .vertices()
            .iter()
            .enumerate()
            .filter(|&(v, _)| graph.vertex_entity(v as u32) == tgt_type)
            .map(|(_, id)| id.clone());
        let mut associations: Vec<(&_, &_)> = instances.iter().map(|i| (&i.source, &i.target)).collect();
        if src_type == tgt_type {
            associations.extend(instances.iter().map(|i| (&i.target, &i.source)));
        }
        let universe = TargetUniverse::new(targets, associations);
        Ok(Prepared {
            config,
            schema,
            dataset,
            graph,
            instances,
            instance_edges,
            plan,
            masks,
            universe,
            registry: GeneratorRegistry::default(),
        })
    }

    fn check_fold(&self, fold: usize) -> Result<()> {
        if fold >= self.plan.n_folds {
            return Err(Error::Config(format!(
                "fold {fold} out of range 0..{}",
                self.plan.n_folds
            )));
        }
        Ok(())
    }

    /// The complete graph minus the fold's test edges and the edges of pruned sources.
    pub fn fold_graph(&self, fold: usize) -> Result<FoldMaskedGraph<'_>> {
        self.check_fold(fold)?;
        let held_out: Vec<EdgeIdx> = self
            .plan
            .test_indices(fold)
            .into_iter()
            .chain(self.plan.pruned_indices())
            .map(|i| self.instance_edges[i])
            .collect();
        mask_predicted_edges(&self.graph, &held_out)
    }

    /// Tab-separated edge list of the fold graph.
    pub fn fold_graph_export(&self, fold: usize) -> Result<String> {
        Ok(export_edge_list(&self.fold_graph(fold)?.view()))
    }

    fn positives(&self, idx: &[usize]) -> Vec<(crate::graph::VertexId, crate::graph::VertexId)> {
        idx.iter()
            .map(|&i| (self.instances[i].source.clone(), self.instances[i].target.clone()))
            .collect()
    }

    /// Labeled train and test pairs for one fold.
    pub fn fold_pairs(&self, fold: usize) -> Result<FoldPairs> {
        self.check_fold(fold)?;
        let cfg = &self.config;
        let train_idx = self.plan.train_indices(fold);
        let test_idx = self.plan.test_indices(fold);
        let as_pairs = |idx: &[usize], fixed: Option<&str>| -> Vec<LabeledPair> {
            idx.iter()
                .map(|&i| {
                    let inst = &self.instances[i];
                    let label = fixed.map(str::to_string).or_else(|| inst.label.clone());
                    LabeledPair::new(inst.source.clone(), inst.target.clone(), label)
                })
                .collect()
        };
        let fold_index = fold as u64;
        Ok(match cfg.task {
            Task::Regression => FoldPairs {
                train: as_pairs(&train_idx, None),
                test: as_pairs(&test_idx, None),
                candidates: Vec::new(),
            },
            Task::Binary => {
                let mut train = as_pairs(&train_idx, Some("1"));
                let seed = derive_seed(cfg.seed, SeedPurpose::Negatives, fold_index);
                let ratio = cfg.negative_ratio.unwrap_or(0.0);
                let negatives = sample_negatives(&self.positives(&train_idx), &self.universe, ratio, seed)?;
                train.extend(
                    negatives
                        .into_iter()
                        .map(|(s, t)| LabeledPair::new(s, t, Some("0".into()))),
                );
                FoldPairs {
                    train,
                    test: as_pairs(&test_idx, Some("1")),
                    candidates: Vec::new(),
                }
            }
            Task::Ranking => {
                let seed = derive_seed(cfg.seed, SeedPurpose::Candidates, fold_index);
                let sizes = cfg.candidate_sizes.as_deref().unwrap_or_default();
                let candidates = build_candidate_sets(
                    &self.positives(&test_idx),
                    sizes,
                    cfg.positives_per_set,
                    &self.universe,
                    seed,
                )?;
                let labels: std::collections::BTreeMap<_, _> = test_idx
                    .iter()
                    .map(|&i| {
                        let inst = &self.instances[i];
                        ((&inst.source, &inst.target), inst.label.clone())
                    })
                    .collect();
                let mut seen = BTreeSet::new();
                let mut test = Vec::new();
                for cs in &candidates {
                    for t in cs.positives.iter().chain(&cs.negatives) {
                        if seen.insert((&cs.source, t)) {
                            let label = match labels.get(&(&cs.source, t)) {
                                Some(l) => l.clone(),
                                None => Some("0".into()),
                            };
                            test.push(LabeledPair::new(cs.source.clone(), t.clone(), label));
                        }
                    }
                }
                FoldPairs {
                    train: as_pairs(&train_idx, None),
                    test,
                    candidates,
                }
            }
        })
    }

    /// Train and test feature tables of one fold.
    pub fn fold_features(&self, fold: usize) -> Result<(FeatureTable, FeatureTable, FoldPairs)> {
        let pairs = self.fold_pairs(fold)?;
        let graph = self.fold_graph(fold)?;
        // one extraction over the union of keys shares the per-scheme work
        let mut keys = BTreeSet::new();
        let all: Vec<LabeledPair> = pairs
            .train
            .iter()
            .chain(&pairs.test)
            .filter(|p| keys.insert((p.source.clone(), p.target.clone())))
            .map(|p| LabeledPair::new(p.source.clone(), p.target.clone(), None))
            .collect();
        let table = extract_all_features(&graph, &self.masks, &all, &self.registry, &self.config.pagerank)?;
        let train = table.select(&pairs.train)?;
        let test = table.select(&pairs.test)?;
        Ok((train, test, pairs))
    }

    /// Every file of one fold, in memory.
    pub fn fold_output(&self, fold: usize) -> Result<Vec<OutputFile>> {
        let run = || -> Result<Vec<OutputFile>> {
            let (train, test, pairs) = self.fold_features(fold)?;
            let dir = format!("fold_{fold}");
            let mut files = vec![
                table_file(format!("{dir}/train.csv"), &train)?,
                table_file(format!("{dir}/test.csv"), &test)?,
            ];
            if self.config.task == Task::Ranking {
                files.push(candidates_file(format!("{dir}/candidates.csv"), &pairs.candidates)?);
            }
            if self.config.export_graphs {
                let text = self.fold_graph_export(fold)?;
                files.push(OutputFile {
                    path: format!("{dir}/graph.tsv"),
                    rows: text.lines().count(),
                    columns: 4,
                    bytes: text.into_bytes(),
                });
            }
            Ok(files)
        };
        run().map_err(|e| e.context(format!("fold {fold}")))
    }

    /// All fold files plus the manifest describing them.
    pub fn outputs(&self) -> Result<(Vec<OutputFile>, Manifest)> {
        let per_fold = (0..self.plan.n_folds)
            .into_par_iter()
            .map(|k| self.fold_output(k))
            .collect::<Result<Vec<_>>>()?;
        let mut files: Vec<OutputFile> = per_fold.into_iter().flatten().collect();
        files.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = Manifest {
            seed: self.config.seed,
            n_folds: self.plan.n_folds,
            task: self.config.task,
            schemes: self.masks.iter().map(|m| m.scheme_id().to_string()).collect(),
            files: files.iter().map(OutputFile::entry).collect(),
        };
        Ok((files, manifest))
    }
}

fn candidates_file(path: String, sets: &[CandidateSet]) -> Result<OutputFile> {
    let mut rows: Vec<(usize, &str, &str, u8)> = Vec::new();
    for cs in sets {
        rows.extend(
            cs.positives
                .iter()
                .map(|t| (cs.size, cs.source.value.as_str(), t.value.as_str(), 1)),
        );
        rows.extend(
            cs.negatives
                .iter()
                .map(|t| (cs.size, cs.source.value.as_str(), t.value.as_str(), 0)),
        );
    }
    rows.sort();
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Invariant(format!("writing candidates: {e}"));
    w.write_record(["size", "source", "target", "positive"]).map_err(err)?;
    for (size, s, t, p) in &rows {
        w.write_record([size.to_string().as_str(), s, t, &p.to_string()])
            .map_err(err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Invariant(format!("writing candidates: {e}")))?;
    Ok(OutputFile {
        path,
        bytes,
        rows: rows.len(),
        columns: 4,
    })
}

/// Writes `bytes` to a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    let write = || -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    };
    write().map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

/// Runs `f` on a pool with `jobs` threads, or on the global pool for `None`.
pub fn install<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Invariant(format!("thread pool: {e}")))?
            .install(f),
        None => f(),
    }
}

/// Runs the whole pipeline and writes the fold files, then the manifest.
///
/// Nothing is written unless every fold succeeds.
pub fn run_pipeline(config: &RunConfig) -> Result<Manifest> {
    let jobs = config.effective_jobs()?;
    let config = config.clone();
    install(jobs, move || {
        let out_dir: PathBuf = config.output_dir.clone();
        let prepared = Prepared::load(config)?;
        let (files, manifest) = prepared.outputs()?;
        for f in &files {
            write_atomic(&out_dir.join(&f.path), &f.bytes)?;
        }
        write_atomic(&out_dir.join(MANIFEST_FILE), manifest.to_json().as_bytes())?;
        log::info!("wrote {} files to {}", files.len() + 1, out_dir.display());
        Ok(manifest)
    })
}
