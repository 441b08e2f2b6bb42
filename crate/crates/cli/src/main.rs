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

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use chunkcache::che::traffic_chunk_lru;
use chunkcache::export::{
    che_hit_rows, che_summary, sim_hit_rows, sim_summary, write_csv, TrafficSummaryRow,
};
use chunkcache::sim::{compare_sim_to_che, run_simulation, DeviationThresholds};
use chunkcache::static_opt::{
    most_popular_baseline, traffic_static, waterfill_active_set, waterfill_bisection,
};
use chunkcache::ChunkScheme;
use chunkcache_cli::config::{load_json, PointConfig, ScenarioSpec, StaticMethod};
use chunkcache_cli::experiment::{equal_size, run_experiment, ExperimentSpec};

const EXIT_IO: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_THRESHOLD: u8 = 3;

#[derive(Parser)]
#[command(
    name = "chunkcache",
    version,
    about = "Partial video caching analytics"
)]
struct Cli {
    /// Output format for tables.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write results into this directory instead of stdout.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Build a catalog from a scenario and emit it as JSON.
    GenCatalog {
        #[arg(long)]
        config: PathBuf,
    },
    /// Optimal (or most-popular) static prefix allocation.
    StaticOpt {
        #[arg(long)]
        config: PathBuf,
    },
    /// Che-model hit rates and traffic for chunk-LRU.
    Che {
        #[arg(long)]
        config: PathBuf,
    },
    /// Simulate chunk-LRU.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run an experiment sweep.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Replaces the seed list in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compare the simulator against the Che model; exits with status 3
    /// when the deviation exceeds the configured thresholds.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// Where tables go: files in a directory, or stdout one after another.
struct Sink {
    dir: Option<PathBuf>,
}

impl Sink {
    fn new(dir: Option<PathBuf>) -> Result<Self> {
        if let Some(d) = &dir {
            fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
        }
        Ok(Self { dir })
    }

    fn table<R: Serialize>(&self, name: &str, rows: &[R]) -> Result<()> {
        match &self.dir {
            Some(d) => {
                let path = d.join(format!("{name}.csv"));
                let f =
                    File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                write_csv(BufWriter::new(f), name, rows)?;
            }
            None => write_csv(io::stdout().lock(), name, rows)?,
        }
        Ok(())
    }

    fn json(&self, name: &str, text: &str) -> Result<()> {
        match &self.dir {
            Some(d) => {
                let path = d.join(format!("{name}.json"));
                fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            }
            None => writeln!(io::stdout().lock(), "{text}")?,
        }
        Ok(())
    }
}

fn load_point(path: &Path, seed: Option<u64>) -> Result<PointConfig> {
    let mut cfg: PointConfig = load_json(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<u8> {
    let Format::Csv = cli.format;
    match cli.command {
        Command::GenCatalog { config } => {
            let spec: ScenarioSpec = load_json(&config)?;
            let catalog = spec.build()?;
            Sink::new(cli.out_dir)?.json("catalog", &catalog.to_json()?)?;
        }
        Command::StaticOpt { config } => {
            let cfg = load_point(&config, None)?;
            let catalog = cfg.scenario.build()?;
            let capacity = cfg.cache.resolve(&catalog)?;
            let (source, alloc) = match cfg.method {
                StaticMethod::Bisection => {
                    ("optimal_static", waterfill_bisection(&catalog, capacity)?)
                }
                StaticMethod::ActiveSet => {
                    ("optimal_static", waterfill_active_set(&catalog, capacity)?)
                }
                StaticMethod::MostPopular => {
                    ("most_popular", most_popular_baseline(&catalog, capacity)?)
                }
            };
            let traffic = traffic_static(&catalog, &alloc);
            let sink = Sink::new(cli.out_dir)?;
            sink.table("allocation", &alloc.rows(&catalog))?;
            sink.table(
                "summary",
                &[TrafficSummaryRow {
                    source,
                    b_absolute: traffic.absolute,
                    b_normalized: traffic.normalized,
                    t_c: None,
                }],
            )?;
        }
        Command::Che { config } => {
            let cfg = load_point(&config, None)?;
            let catalog = equal_size(&cfg.scenario.build()?)?;
            let capacity = cfg.cache.resolve(&catalog)?;
            let p =
                traffic_chunk_lru(&catalog, &ChunkScheme::equal(cfg.chunks, cfg.nu)?, capacity)?;
            let sink = Sink::new(cli.out_dir)?;
            sink.table("hit_rates", &che_hit_rows(&p))?;
            sink.table("summary", &[che_summary(&p)])?;
        }
        Command::Simulate { config, seed } => {
            let cfg = load_point(&config, seed)?;
            let catalog = equal_size(&cfg.scenario.build()?)?;
            let capacity = cfg.cache.resolve(&catalog)?;
            let scheme = ChunkScheme::equal(cfg.chunks, cfg.nu)?;
            let r = run_simulation(
                &catalog,
                &scheme,
                capacity,
                cfg.requests,
                cfg.seed,
                cfg.warmup_fraction,
            )?;
            let sink = Sink::new(cli.out_dir)?;
            sink.table("hit_rates", &sim_hit_rows(&r))?;
            sink.table("summary", &[sim_summary(&r)])?;
        }
        Command::Sweep { config, seed } => {
            let mut spec: ExperimentSpec = load_json(&config)?;
            if let Some(s) = seed {
                spec.seeds = vec![s];
            }
            let dir = cli
                .out_dir
                .or_else(|| spec.output.as_ref().map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("results"));
            let summary = run_experiment(&spec, &dir)?;
            for f in &summary.failures {
                eprintln!("warning: {f}");
            }
            let mut out = io::stdout().lock();
            writeln!(out, "points: {}", summary.points)?;
            if let Some((c, gain)) = summary.peak_gain {
                writeln!(
                    out,
                    "peak gain of optimal_static over most_popular: {:.2}% at c_over_sm={c}",
                    100.0 * gain
                )?;
            }
            for f in &summary.files {
                writeln!(out, "wrote {}", f.display())?;
            }
        }
        Command::Validate { config, seed } => {
            let cfg = load_point(&config, seed)?;
            let catalog = equal_size(&cfg.scenario.build()?)?;
            let capacity = cfg.cache.resolve(&catalog)?;
            let scheme = ChunkScheme::equal(cfg.chunks, cfg.nu)?;
            let thresholds: DeviationThresholds = cfg.thresholds.into();
            let report = compare_sim_to_che(
                &catalog,
                &scheme,
                capacity,
                cfg.requests,
                cfg.seed,
                thresholds,
            )?;
            let top = cfg.top_files.unwrap_or(catalog.len().div_ceil(10)).max(1);
            let max_dev = report.max_over_top(top);
            let failed = max_dev > thresholds.hit_rate
                || report.traffic_relative > thresholds.traffic_relative;
            #[derive(Serialize)]
            struct Row {
                top_files: usize,
                max_hit_rate_deviation: f64,
                sim_traffic: f64,
                che_traffic: f64,
                traffic_relative: f64,
                pass: bool,
            }
            Sink::new(cli.out_dir)?.table(
                "deviation",
                &[Row {
                    top_files: top,
                    max_hit_rate_deviation: max_dev,
                    sim_traffic: report.sim_traffic,
                    che_traffic: report.che_traffic,
                    traffic_relative: report.traffic_relative,
                    pass: !failed,
                }],
            )?;
            if failed {
                eprintln!(
                    "deviation exceeds thresholds: hit rate {max_dev:.4} (limit {}), traffic {:.4} (limit {})",
                    thresholds.hit_rate, report.traffic_relative, thresholds.traffic_relative
                );
                return Ok(EXIT_THRESHOLD);
            }
        }
    }
    Ok(0)
}

fn is_io(err: &anyhow::Error) -> bool {
    err.chain().any(|e| {
        e.is::<io::Error>()
            || matches!(
                e.downcast_ref::<chunkcache::Error>(),
                Some(chunkcache::Error::Io(_))
            )
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INVALID } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_io(&e) { EXIT_IO } else { EXIT_INVALID })
        }
    }
}
