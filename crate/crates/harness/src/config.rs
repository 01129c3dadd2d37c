//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # paper-scale matrix
//! problems = parity,klandscapes
//! parity_params = 3..7
//! klandscapes_params = 3,4,5,6,7
//! runs = 5
//! seed = 1
//! mapper = whge
//! ```
//!
//! Every key can also be given on the command line as `--key value`; command
//! line values are applied after the file.

use std::fmt;
use std::path::PathBuf;

use gedyn_core::evolve::{EvolutionConfig, MapperConfig, TiePolicy};
use gedyn_core::metrics::LineFit;

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ProblemKind {
    Parity,
    KLandscapes,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 2] = [ProblemKind::Parity, ProblemKind::KLandscapes];

    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Parity => "parity",
            ProblemKind::KLandscapes => "klandscapes",
        }
    }

    pub fn parse(s: &str) -> Result<Self, HarnessError> {
        match s.trim() {
            "parity" => Ok(ProblemKind::Parity),
            "klandscapes" | "kland" => Ok(ProblemKind::KLandscapes),
            other => Err(HarnessError::Config(format!("unknown problem {other:?}"))),
        }
    }

    /// Name of the hardness parameter in plot legends.
    pub fn param_symbol(self) -> &'static str {
        match self {
            ProblemKind::Parity => "b",
            ProblemKind::KLandscapes => "k",
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Whether K-Landscapes tables are shared by all runs of a parameter value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstancePolicy {
    /// Instance seed = the parameter value.
    PerParam,
    /// Instance seed = the run seed.
    PerRun,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Problems in run order with their parameter lists.
    pub problems: Vec<(ProblemKind, Vec<usize>)>,
    pub runs: usize,
    pub base_seed: u64,
    pub evolution: EvolutionConfig,
    pub instance_policy: InstancePolicy,
    pub out_dir: PathBuf,
    /// Worker threads; 0 uses every available core.
    pub jobs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            problems: ProblemKind::ALL.iter().map(|&p| (p, (3..=7).collect())).collect(),
            runs: 5,
            base_seed: 0,
            evolution: EvolutionConfig::default(),
            instance_policy: InstancePolicy::PerParam,
            out_dir: PathBuf::from("out"),
            jobs: 0,
        }
    }
}

fn bad(key: &str, value: &str) -> HarnessError {
    HarnessError::Config(format!("invalid value {value:?} for {key}"))
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, HarnessError> {
    value.trim().parse().map_err(|_| bad(key, value))
}

/// `3,4,7` or `3..7` (inclusive) or a mix like `3..5,7`.
pub fn parse_param_list(key: &str, value: &str) -> Result<Vec<usize>, HarnessError> {
    let mut out = Vec::new();
    for part in value.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((lo, hi)) = part.split_once("..") {
            let (lo, hi): (usize, usize) = (num(key, lo)?, num(key, hi.trim_start_matches('='))?);
            if lo > hi {
                return Err(bad(key, value));
            }
            out.extend(lo..=hi);
        } else {
            out.push(num(key, part)?);
        }
    }
    if out.is_empty() {
        return Err(HarnessError::Config(format!(
            "{key} must list at least one parameter"
        )));
    }
    Ok(out)
}

impl ExperimentConfig {
    pub fn from_text(text: &str) -> Result<Self, HarnessError> {
        let mut config = ExperimentConfig::default();
        config.apply_text(text)?;
        Ok(config)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), HarnessError> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                HarnessError::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            self.set(key.trim(), value.trim())
                .map_err(|e| HarnessError::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    fn params_mut(&mut self, kind: ProblemKind) -> &mut Vec<usize> {
        if let Some(i) = self.problems.iter().position(|(k, _)| *k == kind) {
            return &mut self.problems[i].1;
        }
        self.problems.push((kind, Vec::new()));
        &mut self.problems.last_mut().unwrap().1
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), HarnessError> {
        let ev = &mut self.evolution;
        match key {
            "problems" | "problem" => {
                let kinds = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(ProblemKind::parse)
                    .collect::<Result<Vec<_>, _>>()?;
                let old = std::mem::take(&mut self.problems);
                self.problems = kinds
                    .into_iter()
                    .map(|k| {
                        let params = old
                            .iter()
                            .find(|(o, _)| *o == k)
                            .map(|(_, p)| p.clone())
                            .unwrap_or_else(|| (3..=7).collect());
                        (k, params)
                    })
                    .collect();
            }
            "parity_params" => *self.params_mut(ProblemKind::Parity) = parse_param_list(key, value)?,
            "klandscapes_params" => {
                *self.params_mut(ProblemKind::KLandscapes) = parse_param_list(key, value)?
            }
            "param" => {
                let params = parse_param_list(key, value)?;
                for (_, p) in &mut self.problems {
                    *p = params.clone();
                }
            }
            "runs" => self.runs = num(key, value)?,
            "seed" => self.base_seed = num(key, value)?,
            "parents" => ev.parents = num(key, value)?,
            "offspring" => ev.offspring = num(key, value)?,
            "generations" => ev.generations = num(key, value)?,
            "tournament_size" => ev.tournament_size = num(key, value)?,
            "genotype_bits" => ev.genotype_bits = num(key, value)?,
            "crossover_rate" => ev.crossover_rate = num(key, value)?,
            "mutation_rate" => ev.mutation_rate = num(key, value)?,
            "mapper" => {
                ev.mapper = match value {
                    "ge" => MapperConfig::GE_DEFAULT,
                    "whge" => MapperConfig::WHGE_DEFAULT,
                    _ => return Err(bad(key, value)),
                }
            }
            "codon_bits" | "max_wraps" => {
                let n = num(key, value)?;
                match &mut ev.mapper {
                    MapperConfig::Ge {
                        codon_bits,
                        max_wraps,
                    } => {
                        *if key == "codon_bits" {
                            codon_bits
                        } else {
                            max_wraps
                        } = n
                    }
                    MapperConfig::Whge { .. } => {
                        return Err(HarnessError::Config(format!("{key} requires mapper = ge")))
                    }
                }
            }
            "depth_cap" | "horizon" => {
                let n = num(key, value)?;
                match &mut ev.mapper {
                    MapperConfig::Whge { depth_cap, horizon } => {
                        *if key == "depth_cap" { depth_cap } else { horizon } = n
                    }
                    MapperConfig::Ge { .. } => {
                        return Err(HarnessError::Config(format!("{key} requires mapper = whge")))
                    }
                }
            }
            "id_fit" => {
                ev.line_fit = match value {
                    "origin" => LineFit::ThroughOrigin,
                    "free" => LineFit::FreeIntercept,
                    _ => return Err(bad(key, value)),
                }
            }
            "ties" => {
                ev.ties = match value {
                    "offspring" => TiePolicy::OffspringFirst,
                    "parents" => TiePolicy::ParentsFirst,
                    _ => return Err(bad(key, value)),
                }
            }
            "klandscapes_instance" => {
                self.instance_policy = match value {
                    "per-param" => InstancePolicy::PerParam,
                    "per-run" => InstancePolicy::PerRun,
                    _ => return Err(bad(key, value)),
                }
            }
            "out_dir" => self.out_dir = PathBuf::from(value),
            "jobs" => self.jobs = num(key, value)?,
            _ => return Err(HarnessError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.runs < 1 {
            return Err(HarnessError::Config("runs must be at least 1".into()));
        }
        if self.problems.is_empty() {
            return Err(HarnessError::Config("no problems selected".into()));
        }
        for (kind, params) in &self.problems {
            if params.is_empty() {
                return Err(HarnessError::Config(format!(
                    "{kind} has an empty parameter list"
                )));
            }
            let range = match kind {
                ProblemKind::Parity => 2..=7,
                ProblemKind::KLandscapes => 1..=usize::MAX,
            };
            if let Some(p) = params.iter().find(|p| !range.contains(p)) {
                return Err(HarnessError::Config(format!(
                    "{kind} parameter {p} is out of range"
                )));
            }
        }
        self.evolution
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn expected_records(&self) -> usize {
        let params: usize = self.problems.iter().map(|(_, p)| p.len()).sum();
        params * self.runs * (self.evolution.generations + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_protocol() {
        let c = ExperimentConfig::default();
        assert_eq!(c.runs, 5);
        assert_eq!(c.evolution.parents, 500);
        assert_eq!(c.evolution.offspring, 500);
        assert_eq!(c.evolution.generations, 50);
        assert_eq!(c.evolution.tournament_size, 3);
        assert_eq!(c.evolution.genotype_bits, 256);
        assert_eq!(c.expected_records(), 2550);
    }

    #[test]
    fn parses_file() {
        let c = ExperimentConfig::from_text(
            "# test\nproblems = parity\nparity_params = 3..5, 7\nruns = 2\nseed = 42\nmapper = ge\ncodon_bits = 4\n",
        )
        .unwrap();
        assert_eq!(c.problems, vec![(ProblemKind::Parity, vec![3, 4, 5, 7])]);
        assert_eq!(c.runs, 2);
        assert_eq!(c.base_seed, 42);
        assert_eq!(
            c.evolution.mapper,
            MapperConfig::Ge {
                codon_bits: 4,
                max_wraps: 2
            }
        );
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "runs = x",
            "colour = blue",
            "just a line",
            "mapper = sge",
            "depth_cap = 3\nmapper = ge\ncodon_bits = 0\nhorizon = 2",
            "parity_params = 5..3",
            "problems = tsp",
        ] {
            assert!(
                ExperimentConfig::from_text(text).is_err(),
                "{text:?} should be rejected"
            );
        }
        let mut c = ExperimentConfig::default();
        c.set("param", "9").unwrap();
        assert!(c.validate().is_err());
        c.set("problems", "klandscapes").unwrap();
        assert!(c.validate().is_ok());
        c.set("runs", "0").unwrap();
        assert!(c.validate().is_err());
    }
}
