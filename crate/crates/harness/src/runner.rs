//! Executes the problem x parameter x run matrix and writes all outputs.

use std::fs;
use std::path::{Path, PathBuf};

use gedyn_core::evolve::Evolver;
use gedyn_core::metrics::SnapshotMetrics;
use gedyn_core::problems::Problem;
use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, InstancePolicy, ProblemKind};
use crate::plot::gnuplot_script;
use crate::records::{aggregate, read_records, write_aggregate, write_records, RunRecord};
use crate::HarnessError;

/// FNV-1a over the run coordinates.
pub fn coordinate_hash(problem: ProblemKind, param: usize, run: usize) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let bytes = problem
        .name()
        .bytes()
        .chain([0u8])
        .chain((param as u64).to_le_bytes())
        .chain((run as u64).to_le_bytes());
    bytes.fold(OFFSET, |h, b| (h ^ b as u64).wrapping_mul(PRIME))
}

pub fn run_seed(base_seed: u64, problem: ProblemKind, param: usize, run: usize) -> u64 {
    base_seed ^ coordinate_hash(problem, param, run)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunTask {
    pub problem: ProblemKind,
    pub param: usize,
    pub run: usize,
}

/// Tasks in canonical `(problem, param, run)` order.
pub fn tasks(config: &ExperimentConfig) -> Vec<RunTask> {
    config
        .problems
        .iter()
        .flat_map(|(problem, params)| {
            params.iter().flat_map(move |&param| {
                (0..config.runs).map(move |run| RunTask {
                    problem: *problem,
                    param,
                    run,
                })
            })
        })
        .collect()
}

pub fn build_problem(config: &ExperimentConfig, task: RunTask, seed: u64) -> Result<Problem, HarnessError> {
    let problem = match task.problem {
        ProblemKind::Parity => Problem::parity(task.param),
        ProblemKind::KLandscapes => {
            let instance_seed = match config.instance_policy {
                InstancePolicy::PerParam => task.param as u64,
                InstancePolicy::PerRun => seed,
            };
            Problem::klandscapes(task.param, instance_seed)
        }
    };
    problem.map_err(|e| HarnessError::Config(e.to_string()))
}

/// One finished run with its per-generation snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub task: RunTask,
    pub snapshots: Vec<SnapshotMetrics>,
}

impl RunOutput {
    pub fn records(&self) -> impl Iterator<Item = RunRecord> + '_ {
        let task = self.task;
        self.snapshots.iter().map(move |s| RunRecord {
            problem: task.problem,
            param: task.param,
            run: task.run,
            generation: s.generation,
            bf: s.best_fitness,
            d: s.diversity,
            id: s.id.unwrap_or(f64::NAN),
            id_fit: s.id_fit_quality.unwrap_or(f64::NAN),
        })
    }
}

pub fn run_task(config: &ExperimentConfig, task: RunTask) -> Result<RunOutput, HarnessError> {
    let seed = run_seed(config.base_seed, task.problem, task.param, task.run);
    let problem = build_problem(config, task, seed)?;
    let evolver = Evolver::new(config.evolution.clone(), problem)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let snapshots = evolver.run(&mut rng)?;
    Ok(RunOutput { task, snapshots })
}

/// Every run of the matrix in canonical order, whatever the worker count.
pub fn run_matrix(config: &ExperimentConfig) -> Result<Vec<RunOutput>, HarnessError> {
    config.validate()?;
    let tasks = tasks(config);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| HarnessError::Runtime(e.to_string()))?;
    info!("running {} tasks", tasks.len());
    pool.install(|| {
        tasks
            .par_iter()
            .map(|&task| {
                let out = run_task(config, task);
                info!("{}/{} run {} done", task.problem, task.param, task.run);
                out
            })
            .collect()
    })
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunRecord>, HarnessError> {
    let records: Vec<RunRecord> = run_matrix(config)?.iter().flat_map(RunOutput::records).collect();
    let expected = config.expected_records();
    if records.len() != expected {
        return Err(HarnessError::Runtime(format!(
            "record count {} differs from expected {expected}",
            records.len()
        )));
    }
    Ok(records)
}

fn write(path: &Path, contents: &str) -> Result<(), HarnessError> {
    fs::write(path, contents).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read(path: &Path) -> Result<String, HarnessError> {
    fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OutputFiles {
    pub records: Option<PathBuf>,
    pub aggregates: Vec<PathBuf>,
    pub plots: Vec<PathBuf>,
}

pub const RECORDS_FILE: &str = "records.tsv";

pub fn aggregate_path(dir: &Path, problem: ProblemKind) -> PathBuf {
    dir.join(format!("{}.tsv", problem.name()))
}

pub fn plot_path(dir: &Path, problem: ProblemKind) -> PathBuf {
    dir.join(format!("{}.gp", problem.name()))
}

/// Reads a records file and writes one aggregate per problem into `out_dir`.
pub fn aggregate_file(records: &Path, out_dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let parsed = read_records(&read(records)?)?;
    let mut written = Vec::new();
    for (problem, rows) in aggregate(&parsed)? {
        let path = aggregate_path(out_dir, problem);
        write(&path, &write_aggregate(&rows))?;
        written.push(path);
    }
    Ok(written)
}

/// Writes a gnuplot script next to every aggregate found in `out_dir`.
pub fn emit_plots(out_dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let mut written = Vec::new();
    for problem in ProblemKind::ALL {
        let agg = aggregate_path(out_dir, problem);
        if !agg.exists() {
            continue;
        }
        let rows = crate::records::read_aggregate(&read(&agg)?)?;
        match gnuplot_script(problem, &rows) {
            Some(script) => {
                let path = plot_path(out_dir, problem);
                write(&path, &script)?;
                written.push(path);
            }
            None => warn!("{problem}: no parameters to plot"),
        }
    }
    Ok(written)
}

/// Runs the matrix, then writes records, aggregates and plot scripts.
pub fn execute(config: &ExperimentConfig) -> Result<OutputFiles, HarnessError> {
    let records = run_experiment(config)?;
    write_outputs(&config.out_dir, &records)
}

/// Writes records, aggregates and plot scripts into `out_dir`.
pub fn write_outputs(out_dir: &Path, records: &[RunRecord]) -> Result<OutputFiles, HarnessError> {
    fs::create_dir_all(out_dir).map_err(|source| HarnessError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let records_path = out_dir.join(RECORDS_FILE);
    write(&records_path, &write_records(records))?;
    let aggregates = aggregate_file(&records_path, out_dir)?;
    let plots = emit_plots(out_dir)?;
    Ok(OutputFiles {
        records: Some(records_path),
        aggregates,
        plots,
    })
}
