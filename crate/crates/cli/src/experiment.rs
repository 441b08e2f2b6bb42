// Copyright 2026 The chunkcache Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Sweeps over cache sizes and policies.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{ensure, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use chunkcache::che::{
    infinitesimal_bound, optimize_tail_drop, standard_lru_traffic, traffic_chunk_lru, NuSearch,
};
use chunkcache::export::{na, write_csv, TailDropRow};
use chunkcache::sim::run_simulation;
use chunkcache::static_opt::{most_popular_baseline, traffic_static, waterfill_bisection};
use chunkcache::{Catalog, ChunkScheme};

use crate::config::{default_requests, default_warmup, ScenarioSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub scenario: ScenarioSpec,
    /// Cache sizes as fractions of the catalog size, each in `(0, 1]`.
    pub c_over_sm: Vec<f64>,
    pub policies: Vec<PolicySpec>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_grid")]
    pub nu_grid_points: usize,
    /// Output directory; `--out-dir` takes precedence.
    pub output: Option<String>,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_grid() -> usize {
    NuSearch::default().grid_points
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicySpec {
    /// Waterfilling optimum with full popularity and retention knowledge.
    OptimalStatic,
    /// Whole files in popularity order.
    MostPopular,
    /// Che model of chunk-LRU with equal chunks; `nu` is optimized when
    /// absent.
    ChunkLru { chunks: Vec<usize>, nu: Option<f64> },
    /// Che model of whole-file LRU.
    StandardLru,
    /// Infinitesimal-chunk lower bound on chunk-LRU.
    InfinitesimalBound,
    /// Simulated chunk-LRU, one run per seed. `chunks = [1]` with `nu = 1`
    /// is whole-file LRU.
    Simulation {
        chunks: Vec<usize>,
        #[serde(default = "one")]
        nu: f64,
        #[serde(default = "default_requests")]
        requests: u64,
        #[serde(default = "default_warmup")]
        warmup_fraction: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl PolicySpec {
    fn name(&self) -> &'static str {
        match self {
            Self::OptimalStatic => "optimal_static",
            Self::MostPopular => "most_popular",
            Self::ChunkLru { .. } => "chunk_lru",
            Self::StandardLru => "standard_lru",
            Self::InfinitesimalBound => "infinitesimal_bound",
            Self::Simulation { .. } => "simulation",
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        ensure!(!self.policies.is_empty(), "at least one policy is required");
        ensure!(
            !self.c_over_sm.is_empty(),
            "c_over_sm must list at least one value"
        );
        for &c in &self.c_over_sm {
            ensure!(
                c > 0.0 && c <= 1.0,
                "c_over_sm values must lie in (0, 1], got {c}"
            );
        }
        ensure!(
            self.nu_grid_points >= 2,
            "nu_grid_points must be at least 2"
        );
        for p in &self.policies {
            match p {
                PolicySpec::ChunkLru { chunks, nu } => {
                    ensure!(
                        !chunks.is_empty() && chunks.iter().all(|&n| n >= 1),
                        "chunk counts must be >= 1"
                    );
                    if let Some(nu) = nu {
                        ensure!(*nu > 0.0 && *nu <= 1.0, "nu must lie in (0, 1], got {nu}");
                    }
                }
                PolicySpec::Simulation {
                    chunks,
                    nu,
                    requests,
                    warmup_fraction,
                } => {
                    ensure!(
                        !chunks.is_empty() && chunks.iter().all(|&n| n >= 1),
                        "chunk counts must be >= 1"
                    );
                    ensure!(*nu > 0.0 && *nu <= 1.0, "nu must lie in (0, 1], got {nu}");
                    ensure!(*requests >= 1, "requests must be at least 1");
                    ensure!(
                        (0.0..1.0).contains(warmup_fraction),
                        "warmup_fraction must lie in [0, 1)"
                    );
                    ensure!(!self.seeds.is_empty(), "simulation needs at least one seed");
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Chunk count column: absent, finite, or infinitesimal chunks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Chunks {
    NotApplicable,
    Finite(usize),
    Infinitesimal,
}

impl Serialize for Chunks {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::NotApplicable => s.serialize_str("NA"),
            Self::Finite(n) => s.serialize_u64(*n as u64),
            Self::Infinitesimal => s.serialize_str("inf"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrafficRow {
    pub c_over_sm: f64,
    pub policy: &'static str,
    pub n: Chunks,
    #[serde(serialize_with = "na")]
    pub nu: Option<f64>,
    #[serde(serialize_with = "na")]
    pub seed: Option<u64>,
    #[serde(serialize_with = "na")]
    pub b_normalized: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EtaRow {
    pub c_over_sm: f64,
    pub file_rank: usize,
    pub popularity_rank_fraction: f64,
    pub eta: f64,
}

/// One unit of work: a policy at one cache size (and chunk count / seed).
#[derive(Clone, Debug)]
struct Task {
    c_over_sm: f64,
    policy: usize,
    n: Option<usize>,
    seed: Option<u64>,
}

#[derive(Default)]
struct TaskOutput {
    traffic: Vec<TrafficRow>,
    eta: Vec<EtaRow>,
    nu_star: Vec<TailDropRow>,
    failure: Option<String>,
}

pub struct ExperimentSummary {
    pub points: usize,
    /// Largest `1 - B_opt / B_most_popular` and where it occurs, over points
    /// where the baseline traffic is not negligible.
    pub peak_gain: Option<(f64, f64)>,
    pub failures: Vec<String>,
    pub files: Vec<PathBuf>,
}

struct Catalogs {
    original: Catalog,
    uniform: Catalog,
}

fn run_task(spec: &ExperimentSpec, cats: &Catalogs, task: &Task) -> TaskOutput {
    let policy = &spec.policies[task.policy];
    let c = task.c_over_sm;
    let search = NuSearch {
        grid_points: spec.nu_grid_points,
        ..NuSearch::default()
    };
    let row = |n: Chunks, nu: Option<f64>, b: Option<f64>| TrafficRow {
        c_over_sm: c,
        policy: policy.name(),
        n,
        nu,
        seed: task.seed,
        b_normalized: b,
    };
    let mut out = TaskOutput::default();
    let result: chunkcache::Result<()> = (|| {
        match policy {
            PolicySpec::OptimalStatic | PolicySpec::MostPopular => {
                let cat = &cats.original;
                let capacity = c * cat.total_size();
                let alloc = if matches!(policy, PolicySpec::OptimalStatic) {
                    waterfill_bisection(cat, capacity)?
                } else {
                    most_popular_baseline(cat, capacity)?
                };
                out.traffic.push(row(
                    Chunks::NotApplicable,
                    None,
                    Some(traffic_static(cat, &alloc).normalized),
                ));
                if matches!(policy, PolicySpec::OptimalStatic) {
                    let m = cat.len() as f64;
                    out.eta = alloc
                        .eta
                        .iter()
                        .enumerate()
                        .map(|(i, &eta)| EtaRow {
                            c_over_sm: c,
                            file_rank: i + 1,
                            popularity_rank_fraction: (i + 1) as f64 / m,
                            eta,
                        })
                        .collect();
                }
            }
            PolicySpec::ChunkLru { nu, .. } => {
                let cat = &cats.uniform;
                let capacity = c * cat.total_size();
                let n = task.n.expect("chunk count");
                match nu {
                    Some(nu) => {
                        let p = traffic_chunk_lru(cat, &ChunkScheme::equal(n, *nu)?, capacity)?;
                        out.traffic.push(row(
                            Chunks::Finite(n),
                            Some(*nu),
                            Some(p.traffic.normalized),
                        ));
                    }
                    None => {
                        let opt = optimize_tail_drop(cat, capacity, n, search)?;
                        out.traffic.push(row(
                            Chunks::Finite(n),
                            Some(opt.nu),
                            Some(opt.traffic.normalized),
                        ));
                        out.nu_star.push(TailDropRow {
                            c_over_sm: c,
                            n: Some(n),
                            nu_star: Some(opt.nu),
                            b_normalized: Some(opt.traffic.normalized),
                            t_c: opt.t_c.is_finite().then_some(opt.t_c),
                        });
                    }
                }
            }
            PolicySpec::StandardLru => {
                let cat = &cats.uniform;
                let p = standard_lru_traffic(cat, c * cat.total_size())?;
                out.traffic.push(row(
                    Chunks::Finite(1),
                    Some(1.0),
                    Some(p.traffic.normalized),
                ));
            }
            PolicySpec::InfinitesimalBound => {
                let cat = &cats.uniform;
                let opt = infinitesimal_bound(cat, c * cat.total_size(), search)?;
                out.traffic.push(row(
                    Chunks::Infinitesimal,
                    Some(opt.nu),
                    Some(opt.traffic.normalized),
                ));
                out.nu_star.push(TailDropRow {
                    c_over_sm: c,
                    n: None,
                    nu_star: Some(opt.nu),
                    b_normalized: Some(opt.traffic.normalized),
                    t_c: opt.t_c.is_finite().then_some(opt.t_c),
                });
            }
            PolicySpec::Simulation {
                nu,
                requests,
                warmup_fraction,
                ..
            } => {
                let cat = &cats.uniform;
                let n = task.n.expect("chunk count");
                let scheme = ChunkScheme::equal(n, *nu)?;
                let seed = task.seed.expect("seed");
                let r = run_simulation(
                    cat,
                    &scheme,
                    c * cat.total_size(),
                    *requests,
                    seed,
                    *warmup_fraction,
                )?;
                out.traffic.push(row(
                    Chunks::Finite(n),
                    Some(*nu),
                    Some(r.traffic.normalized),
                ));
            }
        }
        Ok(())
    })();
    if let Err(e) = result {
        out.failure = Some(format!("{} at c_over_sm={c}: {e}", policy.name()));
        let n = match (policy, task.n) {
            (PolicySpec::InfinitesimalBound, _) => Chunks::Infinitesimal,
            (_, Some(n)) => Chunks::Finite(n),
            _ => Chunks::NotApplicable,
        };
        out.traffic = vec![row(n, None, None)];
        if matches!(
            policy,
            PolicySpec::InfinitesimalBound | PolicySpec::ChunkLru { nu: None, .. }
        ) {
            out.nu_star = vec![TailDropRow {
                c_over_sm: c,
                n: task.n,
                nu_star: None,
                b_normalized: None,
                t_c: None,
            }];
        }
    }
    out
}

fn tasks(spec: &ExperimentSpec) -> Vec<Task> {
    let mut out = Vec::new();
    for &c in &spec.c_over_sm {
        for (i, p) in spec.policies.iter().enumerate() {
            let task = |n, seed| Task {
                c_over_sm: c,
                policy: i,
                n,
                seed,
            };
            match p {
                PolicySpec::ChunkLru { chunks, .. } => {
                    out.extend(chunks.iter().map(|&n| task(Some(n), None)))
                }
                PolicySpec::Simulation { chunks, .. } => {
                    for &n in chunks {
                        out.extend(spec.seeds.iter().map(|&s| task(Some(n), Some(s))));
                    }
                }
                _ => out.push(task(None, None)),
            }
        }
    }
    out
}

fn write_table<R: Serialize>(dir: &Path, name: &str, rows: &[R]) -> Result<PathBuf> {
    let path = dir.join(format!("{name}.csv"));
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    write_csv(BufWriter::new(file), name, rows)?;
    Ok(path)
}

/// The catalog with every size replaced by the mean size, as the chunk-LRU
/// model requires. Total size is unchanged.
pub fn equal_size(catalog: &Catalog) -> Result<Catalog> {
    Ok(if catalog.is_uniform_size() {
        catalog.clone()
    } else {
        catalog.with_uniform_size(catalog.mean_size())?
    })
}

/// Runs every point of `spec` and writes `traffic.csv`, plus
/// `allocation.csv` and `nu_star.csv` when the policies produce them.
/// Points that cannot be computed are written with `NA` values.
pub fn run_experiment(spec: &ExperimentSpec, out_dir: &Path) -> Result<ExperimentSummary> {
    spec.validate()?;
    let original = spec.scenario.build()?;
    let uniform = equal_size(&original)?;
    let cats = Catalogs { original, uniform };
    let tasks = tasks(spec);
    let outputs: Vec<TaskOutput> = tasks.par_iter().map(|t| run_task(spec, &cats, t)).collect();

    let mut traffic = Vec::new();
    let mut eta = Vec::new();
    let mut nu_star = Vec::new();
    let mut failures = Vec::new();
    for o in outputs {
        traffic.extend(o.traffic);
        eta.extend(o.eta);
        nu_star.extend(o.nu_star);
        failures.extend(o.failure);
    }

    let mut peak_gain: Option<(f64, f64)> = None;
    for &c in &spec.c_over_sm {
        let find = |name: &str| {
            traffic
                .iter()
                .find(|r| r.c_over_sm == c && r.policy == name)
                .and_then(|r| r.b_normalized)
        };
        if let (Some(opt), Some(mp)) = (find("optimal_static"), find("most_popular")) {
            if mp > 1e-9 {
                let gain = 1.0 - opt / mp;
                if peak_gain.is_none_or(|(_, g)| gain > g) {
                    peak_gain = Some((c, gain));
                }
            }
        }
    }

    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut files = vec![write_table(out_dir, "traffic", &traffic)?];
    if !eta.is_empty() {
        files.push(write_table(out_dir, "allocation", &eta)?);
    }
    if !nu_star.is_empty() {
        files.push(write_table(out_dir, "nu_star", &nu_star)?);
    }
    Ok(ExperimentSummary {
        points: tasks.len(),
        peak_gain,
        failures,
        files,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(policies: &str) -> ExperimentSpec {
        serde_json::from_str(&format!(
            r#"{{"scenario":{{"kind":"synthetic","num_files":30,"watch_time":0.6}},"c_over_sm":[0.1,1.0],"policies":{policies},"nu_grid_points":8}}"#
        ))
        .unwrap()
    }

    #[test]
    fn validation() {
        assert!(spec("[]").validate().is_err());
        let mut s = spec(r#"[{"policy":"optimal_static"}]"#);
        s.validate().unwrap();
        s.c_over_sm.push(0.0);
        assert!(s.validate().is_err());
        assert!(spec(r#"[{"policy":"chunk_lru","chunks":[]}]"#)
            .validate()
            .is_err());
        assert!(serde_json::from_str::<PolicySpec>(r#"{"policy":"fifo"}"#).is_err());
    }

    #[test]
    fn task_expansion_keeps_spec_order() {
        let mut s = spec(
            r#"[{"policy":"chunk_lru","chunks":[1,4]},{"policy":"simulation","chunks":[2],"requests":10}]"#,
        );
        s.seeds = vec![5, 6];
        let t = tasks(&s);
        let keys: Vec<(f64, usize, Option<usize>, Option<u64>)> = t
            .iter()
            .map(|t| (t.c_over_sm, t.policy, t.n, t.seed))
            .collect();
        assert_eq!(
            keys,
            vec![
                (0.1, 0, Some(1), None),
                (0.1, 0, Some(4), None),
                (0.1, 1, Some(2), Some(5)),
                (0.1, 1, Some(2), Some(6)),
                (1.0, 0, Some(1), None),
                (1.0, 0, Some(4), None),
                (1.0, 1, Some(2), Some(5)),
                (1.0, 1, Some(2), Some(6)),
            ]
        );
    }
}
