//! Generational engine: uniform initialization, tournament selection,
//! two-point crossover, bit-flip mutation and elitist m+n replacement.

use alloc::vec::Vec;

use rand::Rng;
use thiserror::Error;

use crate::genotype::{Genotype, GenotypeError};
use crate::mapper::{GeMapper, Mapper, MapperError, MappingOutcome, WhgeMapper};
use crate::metrics::{snapshot_with, LineFit, SnapshotMetrics};
use crate::problems::{Fitness, Problem, ProblemError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvolveError {
    #[error("invalid evolution config: {0}")]
    Config(&'static str),
    #[error(transparent)]
    Mapper(#[from] MapperError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Genotype(#[from] GenotypeError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MapperConfig {
    Ge { codon_bits: usize, max_wraps: usize },
    Whge { depth_cap: usize, horizon: usize },
}

impl MapperConfig {
    pub const GE_DEFAULT: MapperConfig = MapperConfig::Ge {
        codon_bits: 8,
        max_wraps: 2,
    };
    pub const WHGE_DEFAULT: MapperConfig = MapperConfig::Whge {
        depth_cap: 32,
        horizon: 2,
    };

    pub fn name(&self) -> &'static str {
        match self {
            MapperConfig::Ge { .. } => "ge",
            MapperConfig::Whge { .. } => "whge",
        }
    }
}

/// Which side of the m+n merge wins among equal fitness values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TiePolicy {
    /// Offspring are placed before parents, so neutral variants replace
    /// their equally fit parents.
    #[default]
    OffspringFirst,
    /// Parents are placed first; a plateau population never changes.
    ParentsFirst,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionConfig {
    /// Parent population size, `m`.
    pub parents: usize,
    /// Offspring per generation, `n`.
    pub offspring: usize,
    pub generations: usize,
    pub tournament_size: usize,
    pub genotype_bits: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub mapper: MapperConfig,
    pub line_fit: LineFit,
    pub ties: TiePolicy,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            parents: 500,
            offspring: 500,
            generations: 50,
            tournament_size: 3,
            genotype_bits: 256,
            crossover_rate: 0.8,
            mutation_rate: 0.01,
            mapper: MapperConfig::WHGE_DEFAULT,
            line_fit: LineFit::ThroughOrigin,
            ties: TiePolicy::OffspringFirst,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<(), EvolveError> {
        if self.parents < 2 {
            return Err(EvolveError::Config("parents (m) must be at least 2"));
        }
        if self.offspring < 1 {
            return Err(EvolveError::Config("offspring (n) must be at least 1"));
        }
        if self.tournament_size < 1 {
            return Err(EvolveError::Config("tournament size must be at least 1"));
        }
        if self.genotype_bits < 1 {
            return Err(EvolveError::Config("genotype must have at least one bit"));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return Err(EvolveError::Config("crossover rate must be in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return Err(EvolveError::Config("mutation rate must be in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub genotype: Genotype,
    pub outcome: MappingOutcome,
    pub fitness: Fitness,
    pub birth_generation: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Population {
    pub individuals: Vec<Individual>,
}

impl Population {
    pub fn len(&self) -> usize {
        self.individuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.individuals.is_empty()
    }

    pub fn best(&self) -> Option<&Individual> {
        // first minimum, so ties keep the earliest
        self.individuals.iter().reduce(|a, b| {
            if b.fitness.total_cmp(&a.fitness).is_lt() {
                b
            } else {
                a
            }
        })
    }

    pub fn genotypes(&self) -> impl Iterator<Item = &Genotype> {
        self.individuals.iter().map(|i| &i.genotype)
    }
}

/// Best of `size` uniform draws with replacement; ties go to the earliest
/// draw.
pub fn tournament_select<'a, R: Rng + ?Sized>(
    pop: &'a Population,
    size: usize,
    rng: &mut R,
) -> &'a Individual {
    assert!(size >= 1 && !pop.is_empty());
    let mut best = &pop.individuals[rng.random_range(0..pop.len())];
    for _ in 1..size {
        let cand = &pop.individuals[rng.random_range(0..pop.len())];
        if cand.fitness.total_cmp(&best.fitness).is_lt() {
            best = cand;
        }
    }
    best
}

/// `g1[..c1] ++ g2[c1..c2] ++ g1[c2..]`.
pub fn crossover_at(g1: &Genotype, g2: &Genotype, c1: usize, c2: usize) -> Result<Genotype, GenotypeError> {
    if g1.len() != g2.len() {
        return Err(GenotypeError::LengthMismatch {
            left: g1.len(),
            right: g2.len(),
        });
    }
    assert!(c1 <= c2 && c2 <= g1.len(), "cut points {c1}, {c2} out of order");
    let mut child = g1.clone();
    for i in c1..c2 {
        child.set(i, g2.get(i));
    }
    Ok(child)
}

/// Two-point crossover with cut points drawn uniformly from `0..=L`.
pub fn two_point_crossover<R: Rng + ?Sized>(
    g1: &Genotype,
    g2: &Genotype,
    rng: &mut R,
) -> Result<Genotype, GenotypeError> {
    let a = rng.random_range(0..=g1.len());
    let b = rng.random_range(0..=g1.len());
    crossover_at(g1, g2, a.min(b), a.max(b))
}

/// Flips each bit independently with probability `p`.
pub fn bitflip_mutation<R: Rng + ?Sized>(g: &Genotype, p: f64, rng: &mut R) -> Genotype {
    assert!((0.0..=1.0).contains(&p));
    let mut out = g.clone();
    if p == 0.0 {
        return out;
    }
    for i in 0..out.len() {
        if rng.random_bool(p) {
            out.flip(i);
        }
    }
    out
}

/// A configured run: the mapper is built once from the problem's grammar.
#[derive(Debug, Clone)]
pub struct Evolver {
    config: EvolutionConfig,
    problem: Problem,
    mapper: Mapper,
}

impl Evolver {
    pub fn new(config: EvolutionConfig, problem: Problem) -> Result<Self, EvolveError> {
        config.validate()?;
        let grammar = problem.grammar();
        let mapper = match config.mapper {
            MapperConfig::Ge {
                codon_bits,
                max_wraps,
            } => {
                let m = GeMapper::new(&grammar, codon_bits, max_wraps)?;
                m.check_length(config.genotype_bits)?;
                Mapper::Ge(m)
            }
            MapperConfig::Whge { depth_cap, horizon } => {
                Mapper::Whge(WhgeMapper::new(&grammar, depth_cap, horizon)?)
            }
        };
        Ok(Evolver {
            config,
            problem,
            mapper,
        })
    }

    pub fn config(&self) -> &EvolutionConfig {
        &self.config
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn individual(&self, genotype: Genotype, birth_generation: usize) -> Result<Individual, EvolveError> {
        let outcome = self.mapper.map(&genotype);
        let fitness = self.problem.evaluate(&outcome)?;
        Ok(Individual {
            genotype,
            outcome,
            fitness,
            birth_generation,
        })
    }

    pub fn init_population<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Population, EvolveError> {
        let genotypes: Vec<Genotype> = (0..self.config.parents)
            .map(|_| Genotype::random(self.config.genotype_bits, rng))
            .collect();
        let individuals = genotypes
            .into_iter()
            .map(|g| self.individual(g, 0))
            .collect::<Result<_, _>>()?;
        Ok(Population { individuals })
    }

    /// Offspring genotypes for one generation, all random draws made in a
    /// fixed order.
    pub fn breed<R: Rng + ?Sized>(
        &self,
        pop: &Population,
        rng: &mut R,
    ) -> Result<Vec<Genotype>, EvolveError> {
        let c = &self.config;
        (0..c.offspring)
            .map(|_| {
                let base = if rng.random_bool(c.crossover_rate) {
                    let a = tournament_select(pop, c.tournament_size, rng);
                    let b = tournament_select(pop, c.tournament_size, rng);
                    two_point_crossover(&a.genotype, &b.genotype, rng)?
                } else {
                    tournament_select(pop, c.tournament_size, rng).genotype.clone()
                };
                Ok(bitflip_mutation(&base, c.mutation_rate, rng))
            })
            .collect()
    }

    /// Concatenates parents and offspring in the order given by the tie
    /// policy, stably sorts by fitness and keeps the first `m`.
    pub fn replace(&self, pop: Population, offspring: Vec<Individual>) -> Population {
        let mut merged = match self.config.ties {
            TiePolicy::ParentsFirst => {
                let mut m = pop.individuals;
                m.extend(offspring);
                m
            }
            TiePolicy::OffspringFirst => {
                let mut m = offspring;
                m.extend(pop.individuals);
                m
            }
        };
        merged.sort_by(|a, b| a.fitness.total_cmp(&b.fitness));
        merged.truncate(self.config.parents);
        Population { individuals: merged }
    }

    pub fn step_generation<R: Rng + ?Sized>(
        &self,
        pop: Population,
        rng: &mut R,
        generation: usize,
    ) -> Result<Population, EvolveError> {
        let offspring = self
            .breed(&pop, rng)?
            .into_iter()
            .map(|g| self.individual(g, generation))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.replace(pop, offspring))
    }

    pub fn snapshot(&self, pop: &Population, generation: usize) -> SnapshotMetrics {
        snapshot_with(pop, generation, self.config.line_fit)
    }

    /// Snapshots of generation 0 and of every subsequent generation.
    pub fn run<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<SnapshotMetrics>, EvolveError> {
        let mut pop = self.init_population(rng)?;
        let mut out = Vec::with_capacity(self.config.generations + 1);
        out.push(self.snapshot(&pop, 0));
        for generation in 1..=self.config.generations {
            pop = self.step_generation(pop, rng, generation)?;
            out.push(self.snapshot(&pop, generation));
        }
        Ok(out)
    }
}

pub fn run_evolution<R: Rng + ?Sized>(
    config: &EvolutionConfig,
    problem: &Problem,
    rng: &mut R,
) -> Result<Vec<SnapshotMetrics>, EvolveError> {
    Evolver::new(config.clone(), problem.clone())?.run(rng)
}
