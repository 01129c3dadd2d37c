//! Benchmarks with a hardness knob. Fitness is in `[0, 1]`, lower is better,
//! and an incomplete phenotype always scores exactly 1.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::grammar::{parse_bnf, DerivationTree, Grammar};
use crate::mapper::MappingOutcome;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("unexpected token {0:?} in phenotype")]
    UnknownToken(String),
    #[error("malformed phenotype: {0}")]
    Malformed(String),
    #[error("problem parameter {name} = {value} is out of range")]
    Parameter { name: &'static str, value: usize },
    #[error("table value {0} is out of range")]
    TableRange(f64),
}

/// Fitness value in `[0, 1]`; 0 is optimal.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Fitness(f64);

impl Fitness {
    pub const BEST: Fitness = Fitness(0.0);
    pub const WORST: Fitness = Fitness(1.0);

    pub fn new(value: f64) -> Self {
        assert!((0.0..=1.0).contains(&value), "fitness {value} outside [0, 1]");
        Fitness(value)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn total_cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl fmt::Display for Fitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

// ---------------------------------------------------------------- parity

pub const PARITY_OPERATORS: [&str; 4] = ["and", "or", "nand", "nor"];

pub fn parity_grammar(bits: usize) -> Grammar {
    assert!(bits >= 2, "parity needs at least two inputs");
    let vars: Vec<String> = (0..bits).map(|i| format!("b{i}")).collect();
    let src = format!(
        "<expr> ::= ( <expr> <op> <expr> ) | <var>\n<op> ::= {}\n<var> ::= {}\n",
        PARITY_OPERATORS.join(" | "),
        vars.join(" | ")
    );
    parse_bnf(&src).expect("parity grammar is well formed")
}

/// Truth tables packed into a `u128`, row `r` in bit `r`; rows up to 2^7.
type Table = u128;

fn row_mask(bits: usize) -> Table {
    if bits >= 7 {
        u128::MAX
    } else {
        (1u128 << (1 << bits)) - 1
    }
}

fn variable_table(var: usize, bits: usize) -> Table {
    (0..1usize << bits)
        .filter(|row| (row >> var) & 1 == 1)
        .fold(0, |t, row| t | (1u128 << row))
}

/// Rows where the number of true inputs is even.
fn even_parity_table(bits: usize) -> Table {
    (0..1usize << bits)
        .filter(|row| row.count_ones() % 2 == 0)
        .fold(0, |t, row| t | (1u128 << row))
}

struct ParityEval {
    bits: usize,
    vars: Vec<Table>,
    mask: Table,
}

impl ParityEval {
    fn token<'a>(&self, mut node: &'a DerivationTree) -> Result<&'a str, ProblemError> {
        while let [only] = node.children() {
            node = only;
        }
        if node.children().is_empty() && node.symbol().is_terminal() {
            Ok(node.symbol().name())
        } else {
            Err(ProblemError::Malformed(format!("{node:?} is not an operator")))
        }
    }

    fn eval(&self, node: &DerivationTree) -> Result<Table, ProblemError> {
        if node.symbol().is_terminal() {
            let name = node.symbol().name();
            return name
                .strip_prefix('b')
                .and_then(|i| i.parse::<usize>().ok())
                .filter(|&i| i < self.bits)
                .map(|i| self.vars[i])
                .ok_or_else(|| ProblemError::UnknownToken(name.into()));
        }
        let inner: Vec<&DerivationTree> = node
            .children()
            .iter()
            .filter(|c| !matches!(c.symbol().name(), "(" | ")") || !c.symbol().is_terminal())
            .collect();
        match inner.as_slice() {
            [single] => self.eval(single),
            [left, op, right] => {
                let (l, r) = (self.eval(left)?, self.eval(right)?);
                let out = match self.token(op)? {
                    "and" => l & r,
                    "or" => l | r,
                    "nand" => !(l & r),
                    "nor" => !(l | r),
                    other => return Err(ProblemError::UnknownToken(other.into())),
                };
                Ok(out & self.mask)
            }
            _ => Err(ProblemError::Malformed(format!("{node:?}"))),
        }
    }
}

/// Fraction of the `2^bits` input rows on which the phenotype disagrees with
/// even parity.
pub fn parity_fitness(outcome: &MappingOutcome, bits: usize) -> Result<Fitness, ProblemError> {
    if !(1..=7).contains(&bits) {
        return Err(ProblemError::Parameter {
            name: "b",
            value: bits,
        });
    }
    if !outcome.complete {
        return Ok(Fitness::WORST);
    }
    let eval = ParityEval {
        bits,
        vars: (0..bits).map(|v| variable_table(v, bits)).collect(),
        mask: row_mask(bits),
    };
    let table = eval.eval(&outcome.tree)?;
    let wrong = (table ^ even_parity_table(bits)) & eval.mask;
    Ok(Fitness::new(wrong.count_ones() as f64 / (1u32 << bits) as f64))
}

// ----------------------------------------------------------- k-landscapes

/// Symbols of a K-Landscapes phenotype: two binary functions and two
/// terminals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum KSymbol {
    N0,
    N1,
    T0,
    T1,
}

impl KSymbol {
    pub const ALL: [KSymbol; 4] = [KSymbol::N0, KSymbol::N1, KSymbol::T0, KSymbol::T1];
    pub const FUNCTIONS: [KSymbol; 2] = [KSymbol::N0, KSymbol::N1];

    pub fn name(self) -> &'static str {
        match self {
            KSymbol::N0 => "n0",
            KSymbol::N1 => "n1",
            KSymbol::T0 => "t0",
            KSymbol::T1 => "t1",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        KSymbol::ALL.into_iter().find(|s| s.name() == name)
    }

    fn index(self) -> usize {
        self as usize
    }
}

pub fn klandscapes_grammar() -> Grammar {
    parse_bnf("<e> ::= ( n0 <e> <e> ) | ( n1 <e> <e> ) | t0 | t1\n")
        .expect("k-landscapes grammar is well formed")
}

/// A binary tree over [`KSymbol`]s.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KTree {
    pub symbol: KSymbol,
    pub children: Vec<KTree>,
}

impl KTree {
    pub fn leaf(symbol: KSymbol) -> Self {
        KTree {
            symbol,
            children: Vec::new(),
        }
    }

    pub fn node(symbol: KSymbol, left: KTree, right: KTree) -> Self {
        KTree {
            symbol,
            children: alloc::vec![left, right],
        }
    }

    /// Reads the symbol tree out of a derivation built from
    /// [`klandscapes_grammar`].
    pub fn from_derivation(tree: &DerivationTree) -> Result<Self, ProblemError> {
        let mut node = tree;
        while let [only] = node.children() {
            node = only;
        }
        let sym = |t: &DerivationTree| {
            KSymbol::from_name(t.symbol().name())
                .filter(|_| t.symbol().is_terminal())
                .ok_or_else(|| ProblemError::UnknownToken(t.symbol().name().into()))
        };
        match node.children() {
            [] => {
                let s = sym(node)?;
                if KSymbol::FUNCTIONS.contains(&s) {
                    return Err(ProblemError::Malformed(format!(
                        "function {} without arguments",
                        s.name()
                    )));
                }
                Ok(KTree::leaf(s))
            }
            [open, f, left, right, close] if open.symbol().name() == "(" && close.symbol().name() == ")" => {
                let s = sym(f)?;
                if !KSymbol::FUNCTIONS.contains(&s) {
                    return Err(ProblemError::Malformed(format!(
                        "{} applied as a function",
                        s.name()
                    )));
                }
                Ok(KTree::node(
                    s,
                    Self::from_derivation(left)?,
                    Self::from_derivation(right)?,
                ))
            }
            _ => Err(ProblemError::Malformed(format!("{node:?}"))),
        }
    }

    pub fn depth(&self) -> usize {
        self.children.iter().map(|c| c.depth() + 1).max().unwrap_or(0)
    }
}

/// Random node values and parent-child edge weights for one hardness level.
#[derive(Debug, Clone, PartialEq)]
pub struct KLandscape {
    k: usize,
    seed: u64,
    node_values: [f64; 4],
    /// Indexed by `[parent function][child symbol]`.
    edge_weights: [[f64; 4]; 2],
    optimum: f64,
}

impl KLandscape {
    /// Node values uniform in `[0, 1]`, edge weights uniform in `[-1, 1]`,
    /// drawn from a ChaCha8 stream seeded by `seed`.
    pub fn generate(k: usize, seed: u64) -> Result<Self, ProblemError> {
        if k == 0 {
            return Err(ProblemError::Parameter { name: "k", value: k });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut node_values = [0.0; 4];
        for v in &mut node_values {
            *v = rng.random_range(0.0..=1.0);
        }
        let mut edge_weights = [[0.0; 4]; 2];
        for row in &mut edge_weights {
            for w in row.iter_mut() {
                *w = rng.random_range(-1.0..=1.0);
            }
        }
        Ok(KLandscape::with_optimum(k, seed, node_values, edge_weights))
    }

    /// An instance with explicit tables; `seed` is recorded as 0.
    pub fn from_tables(
        k: usize,
        node_values: [f64; 4],
        edge_weights: [[f64; 4]; 2],
    ) -> Result<Self, ProblemError> {
        if k == 0 {
            return Err(ProblemError::Parameter { name: "k", value: k });
        }
        if let Some(&v) = node_values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(ProblemError::TableRange(v));
        }
        if let Some(&w) = edge_weights.iter().flatten().find(|w| !(-1.0..=1.0).contains(*w)) {
            return Err(ProblemError::TableRange(w));
        }
        Ok(KLandscape::with_optimum(k, 0, node_values, edge_weights))
    }

    fn with_optimum(k: usize, seed: u64, node_values: [f64; 4], edge_weights: [[f64; 4]; 2]) -> Self {
        let mut inst = KLandscape {
            k,
            seed,
            node_values,
            edge_weights,
            optimum: 0.0,
        };
        inst.optimum = inst.best_window_mean();
        inst
    }

    /// Largest window score any tree can reach. Bisection on `lambda`:
    /// some window has mean at least `lambda` iff the best window sum of
    /// `value - lambda` over its nodes and edges is non-negative.
    fn best_window_mean(&self) -> f64 {
        let (mut lo, mut hi) = (-1.0, 1.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if self.best_window_excess(mid) >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Max over windows of depth exactly `k` of the sum of `x - lambda`.
    fn best_window_excess(&self, lambda: f64) -> f64 {
        // free[s] / deep[s]: best subtree sum rooted at s with the current
        // number of remaining levels, without / with reaching the bottom.
        let mut free = [0.0f64; 4];
        for s in KSymbol::ALL {
            free[s.index()] = self.node_value(s) - lambda;
        }
        let mut deep = free;
        for _ in 0..self.k {
            let (mut next_free, mut next_deep) = (free, [f64::NEG_INFINITY; 4]);
            for f in KSymbol::FUNCTIONS {
                let edge =
                    |c: KSymbol, sub: &[f64; 4]| self.edge_weight(f, c).unwrap() - lambda + sub[c.index()];
                let any = KSymbol::ALL
                    .iter()
                    .map(|&c| edge(c, &free))
                    .fold(f64::NEG_INFINITY, f64::max);
                let reach = KSymbol::ALL
                    .iter()
                    .map(|&c| edge(c, &deep))
                    .fold(f64::NEG_INFINITY, f64::max);
                let own = self.node_value(f) - lambda;
                next_free[f.index()] = own + 2.0 * any;
                next_deep[f.index()] = own + any + reach;
            }
            free = next_free;
            deep = next_deep;
        }
        KSymbol::FUNCTIONS
            .iter()
            .map(|f| deep[f.index()])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Best achievable [`KLandscape::score`]; fitness is measured relative to it.
    pub fn optimum(&self) -> f64 {
        self.optimum
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn node_value(&self, s: KSymbol) -> f64 {
        self.node_values[s.index()]
    }

    /// `None` when `parent` is a terminal.
    pub fn edge_weight(&self, parent: KSymbol, child: KSymbol) -> Option<f64> {
        KSymbol::FUNCTIONS
            .iter()
            .position(|&f| f == parent)
            .map(|p| self.edge_weights[p][child.index()])
    }

    /// Best window score of a symbol tree: the maximum, over all nodes whose
    /// subtree reaches `k` levels below them, of the mean node value and
    /// edge weight inside the window that stops `k` edges below the node.
    /// `None` when no node reaches that depth.
    pub fn score(&self, tree: &KTree) -> Option<f64> {
        let mut best = None;
        self.windows(tree, &mut best);
        best
    }

    /// Per depth `d` in `0..=k`: (sum of values, count of nodes + edges) of
    /// the window of depth `d` rooted here, plus the subtree depth.
    fn windows(&self, t: &KTree, best: &mut Option<f64>) -> (Vec<(f64, usize)>, usize) {
        let k = self.k;
        let mut acc: Vec<(f64, usize)> = alloc::vec![(self.node_value(t.symbol), 1); k + 1];
        let mut depth = 0;
        for c in &t.children {
            let (child, child_depth) = self.windows(c, best);
            depth = depth.max(child_depth + 1);
            let w = self.edge_weight(t.symbol, c.symbol).unwrap_or(0.0);
            for d in 1..=k {
                acc[d].0 += w + child[d - 1].0;
                acc[d].1 += 1 + child[d - 1].1;
            }
        }
        if depth >= k {
            let v = acc[k].0 / acc[k].1 as f64;
            if best.is_none_or(|b| v > b) {
                *best = Some(v);
            }
        }
        (acc, depth)
    }

    pub fn fitness(&self, outcome: &MappingOutcome) -> Result<Fitness, ProblemError> {
        if !outcome.complete {
            return Ok(Fitness::WORST);
        }
        let tree = KTree::from_derivation(&outcome.tree)?;
        let score = match self.score(&tree) {
            Some(v) if self.optimum > 0.0 => v / self.optimum,
            Some(v) => v,
            None => 0.0,
        };
        Ok(Fitness::new(1.0 - score.clamp(0.0, 1.0)))
    }
}

pub fn klandscapes_fitness(instance: &KLandscape, outcome: &MappingOutcome) -> Result<Fitness, ProblemError> {
    instance.fitness(outcome)
}

/// A benchmark: its grammar plus its fitness function.
#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    Parity { bits: usize },
    KLandscapes(KLandscape),
}

impl Problem {
    pub fn parity(bits: usize) -> Result<Self, ProblemError> {
        if !(2..=7).contains(&bits) {
            return Err(ProblemError::Parameter {
                name: "b",
                value: bits,
            });
        }
        Ok(Problem::Parity { bits })
    }

    pub fn klandscapes(k: usize, seed: u64) -> Result<Self, ProblemError> {
        Ok(Problem::KLandscapes(KLandscape::generate(k, seed)?))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Problem::Parity { .. } => "parity",
            Problem::KLandscapes(_) => "klandscapes",
        }
    }

    pub fn param(&self) -> usize {
        match self {
            Problem::Parity { bits } => *bits,
            Problem::KLandscapes(inst) => inst.k(),
        }
    }

    pub fn grammar(&self) -> Grammar {
        match self {
            Problem::Parity { bits } => parity_grammar(*bits),
            Problem::KLandscapes(_) => klandscapes_grammar(),
        }
    }

    pub fn evaluate(&self, outcome: &MappingOutcome) -> Result<Fitness, ProblemError> {
        match self {
            Problem::Parity { bits } => parity_fitness(outcome, *bits),
            Problem::KLandscapes(inst) => inst.fitness(outcome),
        }
    }
}
