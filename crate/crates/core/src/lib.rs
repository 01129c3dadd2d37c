//! Grammatical evolution over fixed-length bit strings, instrumented with
//! population diversity and a two-nearest-neighbour intrinsic-dimension
//! estimate.
//!
//! The crate is `no_std` and only needs `alloc`. Everything here is a pure
//! function of its inputs plus an explicitly passed random generator, so a
//! run is reproducible from `(config, problem, seed)` alone. File formats,
//! the command-line runner and parallel scheduling live in the `gedyn`
//! companion crate.
//!
//! Module map:
//!
//! - [`grammar`]: BNF parsing, canonical serialization, derivation trees.
//! - [`genotype`]: packed bit strings.
//! - [`mapper`]: classic codon-mod GE and the weighted hierarchical mapper.
//! - [`problems`]: Parity and K-Landscapes benchmarks (lower is better).
//! - [`evolve`]: tournament selection, variation, m+n replacement.
//! - [`metrics`]: Hamming distances, diversity, TWO-NN estimation, snapshots.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod evolve;
pub mod genotype;
pub mod grammar;
pub mod mapper;
pub mod metrics;
pub mod problems;

pub use evolve::{run_evolution, EvolutionConfig, Evolver, Individual, MapperConfig, Population, TiePolicy};
pub use genotype::Genotype;
pub use grammar::{parse_bnf, DerivationTree, Grammar, Symbol, SymbolKind};
pub use mapper::{GeMapper, Mapper, MappingOutcome, WhgeMapper};
pub use metrics::{estimate_id, snapshot, DistanceMatrix, LineFit, SnapshotMetrics, TwoNnResult};
pub use problems::{Fitness, KLandscape, Problem};
