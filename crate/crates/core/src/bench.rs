//! Batch benchmark: every method on every instance and k, with bounds scaled
//! by the best bound per instance and summarized by geometric means.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{branch_and_bound_opt, ProofStatus};
use crate::formulations::{build_misdo, MisdoVariant};
use crate::graph::{gen_instance, parse_edge_list, Graph, InstanceSpec};
use crate::model::export_sdpa_format;
use crate::relaxations::{
    bqo_relax_bound, emilo_relax_bound, remilo_relax_bound, vmilo_relax_bound, BoundReport, BoundRow, BoundStatus,
    BqoBound, BqoBudget, Method, MethodBound, RelaxError, DEFAULT_STARTS,
};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("instance {name}: {reason}")]
    Instance { name: String, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BenchError + '_ {
    move |source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// An instance file path, or a generator spec with optional seed and name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InstanceEntry {
    Path(PathBuf),
    Generated {
        generate: InstanceSpec,
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default)]
        name: Option<String>,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    /// Per-instance, per-method bounds.
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
    /// Geometric means per batch.
    pub summary_csv: Option<PathBuf>,
    /// Where exported models go; defaults to the config's directory.
    pub export_dir: Option<PathBuf>,
}

fn default_time_cap() -> f64 {
    60.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub instances: Vec<InstanceEntry>,
    pub k: Vec<usize>,
    pub methods: Vec<Method>,
    /// Seconds per method; methods not listed use `default_time_cap`.
    #[serde(default)]
    pub time_caps: BTreeMap<Method, f64>,
    #[serde(default = "default_time_cap")]
    pub default_time_cap: f64,
    #[serde(default)]
    pub seed: u64,
    /// Concurrent jobs; defaults to the available cores.
    #[serde(default)]
    pub workers: Option<usize>,
    /// Separate E-MILO clique rows lazily instead of adding them upfront.
    #[serde(default)]
    pub lazy: bool,
    #[serde(default)]
    pub output: OutputPaths,
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |msg: String| Err(BenchError::Config(msg));
        if self.instances.is_empty() {
            return bad("no instances".into());
        }
        if self.methods.is_empty() {
            return bad("no methods".into());
        }
        if let Some(&k) = self.k.iter().find(|&&k| k < 2) {
            return bad(format!("k = {k} < 2"));
        }
        if self.k.is_empty() {
            return bad("no k values".into());
        }
        let caps = self.time_caps.values().chain(std::iter::once(&self.default_time_cap));
        if let Some(c) = caps.into_iter().find(|&&c| !(c > 0.0 && c.is_finite())) {
            return bad(format!("time cap {c} must be positive"));
        }
        if self.workers == Some(0) {
            return bad("workers must be positive".into());
        }
        Ok(())
    }

    fn time_cap(&self, m: Method) -> Duration {
        Duration::from_secs_f64(self.time_caps.get(&m).copied().unwrap_or(self.default_time_cap))
    }
}

pub struct Instance {
    pub name: String,
    pub graph: Graph,
}

/// Resolves paths against `base_dir` and generates the synthetic instances.
pub fn load_instances(cfg: &BenchConfig, base_dir: &Path) -> Result<Vec<Instance>, BenchError> {
    let mut out = Vec::with_capacity(cfg.instances.len());
    let mut seen = HashSet::new();
    for (i, entry) in cfg.instances.iter().enumerate() {
        let (name, graph) = match entry {
            InstanceEntry::Path(p) => {
                let path = base_dir.join(p);
                let text = fs::read_to_string(&path).map_err(io_err(&path))?;
                let name = p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned());
                let g = parse_edge_list(&text).map_err(|e| BenchError::Instance {
                    name: path.display().to_string(),
                    reason: e.to_string(),
                })?;
                (name, g)
            }
            InstanceEntry::Generated { generate, seed, name } => {
                let seed = seed.unwrap_or(cfg.seed.wrapping_add(i as u64));
                let label = name.clone().unwrap_or_else(|| format!("{}_s{seed}", generate.label()));
                let g = gen_instance(generate, seed).map_err(|e| BenchError::Instance {
                    name: label.clone(),
                    reason: e.to_string(),
                })?;
                (label, g)
            }
        };
        let name = if seen.contains(&name) { format!("{name}#{i}") } else { name };
        seen.insert(name.clone());
        out.push(Instance { name, graph });
    }
    Ok(out)
}

/// Buckets for a density given in percent.
pub fn density_bucket(pct: f64) -> &'static str {
    if pct <= 25.0 {
        "(0,25]"
    } else if pct <= 50.0 {
        "(25,50]"
    } else if pct <= 75.0 {
        "(50,75]"
    } else {
        "(75,100]"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    /// Vertex count of the batch, or `all` for the per-k aggregate.
    pub n: String,
    pub density_bucket: String,
    pub k: usize,
    pub method: String,
    pub instances: usize,
    pub geomean_scaled: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchOutput {
    pub reports: Vec<BoundReport>,
    pub summary: Vec<SummaryRow>,
}

impl BenchOutput {
    pub fn rows(&self) -> Vec<BoundRow> {
        self.reports.iter().flat_map(BoundReport::rows).collect()
    }

    pub fn bounds_csv(&self) -> Result<String, BenchError> {
        to_csv(&self.rows())
    }

    pub fn summary_csv(&self) -> Result<String, BenchError> {
        to_csv(&self.summary)
    }

    /// Looks up a summary row.
    pub fn geomean(&self, n: &str, bucket: &str, k: usize, method: Method) -> Option<f64> {
        self.summary
            .iter()
            .find(|r| r.n == n && r.density_bucket == bucket && r.k == k && r.method == method.name())
            .and_then(|r| r.geomean_scaled)
    }
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String, BenchError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| BenchError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

struct Job<'a> {
    k: usize,
    method: Method,
    graph: &'a Graph,
    name: &'a str,
}

fn run_job(cfg: &BenchConfig, export_dir: &Path, job: &Job) -> MethodBound {
    let start = Instant::now();
    let mut out = MethodBound {
        method: job.method,
        bound: None,
        lower: None,
        status: BoundStatus::Failed,
        seconds: 0.0,
        scaled: None,
        note: None,
    };
    let (g, k) = (job.graph, job.k);
    let result: Result<(), String> = (|| {
        match job.method {
            Method::Exact => {
                let r = branch_and_bound_opt(g, k, cfg.time_cap(Method::Exact)).map_err(|e| e.to_string())?;
                match r.status {
                    ProofStatus::Proved => {
                        out.bound = Some(r.value);
                        out.status = BoundStatus::Proved;
                    }
                    ProofStatus::Timeout => {
                        out.bound = Some(r.upper_bound);
                        out.lower = Some(r.value);
                        out.status = BoundStatus::Timeout;
                    }
                }
            }
            Method::Bqo => {
                let budget = BqoBudget {
                    time_cap: cfg.time_cap(Method::Bqo),
                    starts: DEFAULT_STARTS,
                    seed: cfg.seed,
                };
                match bqo_relax_bound(g, k, budget).map_err(|e| e.to_string())? {
                    BqoBound::Exact { value, .. } => {
                        out.bound = Some(value);
                        out.status = BoundStatus::Proved;
                        out.note = Some("relaxation optimum equals the integral optimum".into());
                    }
                    BqoBound::Bracket { lower, upper, .. } => {
                        out.bound = Some(upper);
                        out.lower = Some(lower);
                        out.status = BoundStatus::Bracket;
                    }
                }
            }
            Method::VmiloRelax => {
                out.bound = Some(vmilo_relax_bound(g));
                out.status = BoundStatus::Optimal;
            }
            Method::EmiloRelax | Method::RemiloRelax => {
                let b = if job.method == Method::EmiloRelax {
                    emilo_relax_bound(g, k, cfg.lazy)
                } else {
                    remilo_relax_bound(g, k)
                }
                .map_err(|e: RelaxError| e.to_string())?;
                out.bound = Some(b.value);
                out.status = if b.converged { BoundStatus::Optimal } else { BoundStatus::RowCap };
            }
            Method::MisdoExport => {
                let mut written = Vec::new();
                for (variant, tag) in [(MisdoVariant::I, "misdo1"), (MisdoVariant::II, "misdo2")] {
                    let model = build_misdo(g, k, variant).map_err(|e| e.to_string())?;
                    let text = export_sdpa_format(&model).map_err(|e| e.to_string())?;
                    let path = export_dir.join(format!("{}_k{k}_{tag}.dat-s", job.name));
                    fs::write(&path, text).map_err(|e| format!("{}: {e}", path.display()))?;
                    written.push(path.display().to_string());
                }
                out.status = BoundStatus::External;
                out.note = Some(written.join(" "));
            }
        }
        Ok(())
    })();
    if let Err(e) = result {
        out.status = BoundStatus::Failed;
        out.bound = None;
        out.note = Some(e);
    }
    out.seconds = start.elapsed().as_secs_f64();
    out
}

/// Runs every (instance, k, method) job and builds reports and summaries.
/// Results do not depend on scheduling; only the seconds columns vary.
pub fn bench_run(cfg: &BenchConfig, base_dir: &Path) -> Result<BenchOutput, BenchError> {
    cfg.validate()?;
    let instances = load_instances(cfg, base_dir)?;
    let export_dir = base_dir.join(cfg.output.export_dir.as_deref().unwrap_or(Path::new(".")));
    if cfg.methods.contains(&Method::MisdoExport) {
        fs::create_dir_all(&export_dir).map_err(io_err(&export_dir))?;
    }
    let mut jobs = Vec::new();
    for inst in &instances {
        for &k in &cfg.k {
            for &method in &cfg.methods {
                jobs.push(Job {
                    k,
                    method,
                    graph: &inst.graph,
                    name: &inst.name,
                });
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.unwrap_or(0))
        .build()
        .map_err(|e| BenchError::Config(format!("thread pool: {e}")))?;
    let results: Vec<MethodBound> = pool.install(|| jobs.par_iter().map(|j| run_job(cfg, &export_dir, j)).collect());

    // Jobs were laid out instance-major, then k, then method.
    let mut reports = Vec::new();
    let mut it = results.into_iter();
    for inst in &instances {
        let stats = inst.graph.stats();
        for &k in &cfg.k {
            let methods: Vec<MethodBound> = it.by_ref().take(cfg.methods.len()).collect();
            let mut r = BoundReport {
                instance: inst.name.clone(),
                n: stats.n,
                m: stats.m,
                density: stats.density,
                k,
                exact: None,
                methods,
            };
            r.rescale();
            reports.push(r);
        }
    }
    let summary = summarize(&reports, &cfg.methods);
    Ok(BenchOutput { reports, summary })
}

fn geomean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    Some((values.iter().map(|v| v.ln()).sum::<f64>() / values.len() as f64).exp())
}

/// Geometric means of scaled bounds per (n, density bucket, k) batch, then
/// per k over all instances.
pub fn summarize(reports: &[BoundReport], methods: &[Method]) -> Vec<SummaryRow> {
    let mut batches: BTreeMap<(usize, &'static str, usize), Vec<&BoundReport>> = BTreeMap::new();
    let mut per_k: BTreeMap<usize, Vec<&BoundReport>> = BTreeMap::new();
    for r in reports {
        batches.entry((r.n, density_bucket(r.density), r.k)).or_default().push(r);
        per_k.entry(r.k).or_default().push(r);
    }
    let row = |n: String, bucket: &str, k: usize, group: &[&BoundReport], method: Method| {
        let scaled: Vec<f64> = group
            .iter()
            .flat_map(|r| r.methods.iter().filter(|m| m.method == method))
            .filter_map(|m| m.scaled)
            .collect();
        SummaryRow {
            n,
            density_bucket: bucket.to_string(),
            k,
            method: method.name().to_string(),
            instances: scaled.len(),
            geomean_scaled: geomean(&scaled),
        }
    };
    let mut out = Vec::new();
    for ((n, bucket, k), group) in &batches {
        for &m in methods {
            out.push(row(n.to_string(), bucket, *k, group, m));
        }
    }
    for (k, group) in &per_k {
        for &m in methods {
            out.push(row("all".into(), "all", *k, group, m));
        }
    }
    out
}
