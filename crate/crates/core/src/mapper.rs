//! Genotype to phenotype mapping.
//!
//! Two mappers are provided. [`GeMapper`] is classic grammatical evolution:
//! a leftmost derivation where each expansion consumes one codon and picks
//! option `codon mod options`, wrapping around the genotype a bounded number
//! of times. [`WhgeMapper`] is a hierarchical, weighted mapper: each
//! nonterminal owns a contiguous slice of the genotype, picks its option by
//! comparing the density of ones in equal sub-slices, then hands its slice to
//! the chosen option's symbols in proportion to how expressive each symbol is.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::genotype::Genotype;
use crate::grammar::{DerivationTree, Grammar, Symbol};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MapperError {
    #[error("codon width {codon_bits} must be in 1..=32 and divide the genotype length {len}")]
    CodonWidth { codon_bits: usize, len: usize },
    #[error("nonterminal {0} cannot derive any finite terminal string")]
    NonTerminating(Symbol),
    #[error("{name} must be at least 1")]
    ZeroParameter { name: &'static str },
}

/// A mapped phenotype. `complete` is false iff the tree still contains
/// unexpanded nonterminals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingOutcome {
    pub tree: DerivationTree,
    pub complete: bool,
}

impl MappingOutcome {
    pub fn new(tree: DerivationTree) -> Self {
        let complete = tree.is_complete();
        MappingOutcome { tree, complete }
    }
}

/// Grammar re-indexed for fast expansion.
#[derive(Debug, Clone)]
struct Compiled {
    symbols: Vec<Symbol>,
    /// `rule_of[sym]` is the rule index for nonterminals.
    rule_of: Vec<Option<usize>>,
    /// rule -> option -> symbol ids.
    rules: Vec<Vec<Vec<usize>>>,
    start: usize,
}

impl Compiled {
    fn new(grammar: &Grammar) -> Self {
        let mut ids: BTreeMap<Symbol, usize> = BTreeMap::new();
        let mut symbols = Vec::new();
        let mut intern = |s: &Symbol, symbols: &mut Vec<Symbol>| {
            *ids.entry(s.clone()).or_insert_with(|| {
                symbols.push(s.clone());
                symbols.len() - 1
            })
        };
        for rule in grammar.rules() {
            intern(rule.lhs(), &mut symbols);
        }
        let rules: Vec<Vec<Vec<usize>>> = grammar
            .rules()
            .iter()
            .map(|rule| {
                rule.options()
                    .iter()
                    .map(|opt| opt.iter().map(|s| intern(s, &mut symbols)).collect())
                    .collect()
            })
            .collect();
        let mut rule_of = vec![None; symbols.len()];
        for (i, slot) in rule_of.iter_mut().enumerate().take(grammar.rules().len()) {
            *slot = Some(i);
        }
        Compiled {
            symbols,
            rule_of,
            rules,
            start: 0,
        }
    }

    fn options(&self, sym: usize) -> Option<&[Vec<usize>]> {
        self.rule_of[sym].map(|r| self.rules[r].as_slice())
    }

    fn is_nonterminal(&self, sym: usize) -> bool {
        self.rule_of[sym].is_some()
    }

    /// Minimal derivation height (edges) of every symbol, `None` when the
    /// symbol cannot derive a finite terminal string.
    fn min_heights(&self) -> Vec<Option<usize>> {
        let mut h: Vec<Option<usize>> = self
            .rule_of
            .iter()
            .map(|r| if r.is_none() { Some(0) } else { None })
            .collect();
        loop {
            let mut changed = false;
            for sym in 0..self.symbols.len() {
                let Some(opts) = self.options(sym) else { continue };
                let best = opts
                    .iter()
                    .filter_map(|opt| {
                        opt.iter()
                            .map(|&s| h[s])
                            .try_fold(0usize, |acc, x| x.map(|x| acc.max(x)))
                    })
                    .min()
                    .map(|m| m + 1);
                if best.is_some() && best < h[sym].or(Some(usize::MAX)) {
                    h[sym] = best;
                    changed = true;
                }
            }
            if !changed {
                return h;
            }
        }
    }
}

/// Classic codon-mod GE mapper.
#[derive(Debug, Clone)]
pub struct GeMapper {
    grammar: Compiled,
    codon_bits: usize,
    max_wraps: usize,
}

impl GeMapper {
    pub fn new(grammar: &Grammar, codon_bits: usize, max_wraps: usize) -> Result<Self, MapperError> {
        if codon_bits == 0 || codon_bits > 32 {
            return Err(MapperError::CodonWidth { codon_bits, len: 0 });
        }
        Ok(GeMapper {
            grammar: Compiled::new(grammar),
            codon_bits,
            max_wraps,
        })
    }

    pub fn check_length(&self, len: usize) -> Result<(), MapperError> {
        if len == 0 || !len.is_multiple_of(self.codon_bits) {
            return Err(MapperError::CodonWidth {
                codon_bits: self.codon_bits,
                len,
            });
        }
        Ok(())
    }

    /// Panics if `codon_bits` does not divide the genotype length; see
    /// [`GeMapper::check_length`].
    pub fn map(&self, genotype: &Genotype) -> MappingOutcome {
        if let Err(e) = self.check_length(genotype.len()) {
            panic!("{e}");
        }
        let codons = genotype.len() / self.codon_bits;
        let mut state = GeState {
            genotype,
            codons,
            budget: codons * (self.max_wraps + 1),
            used: 0,
        };
        let tree = self.expand(self.grammar.start, &mut state);
        MappingOutcome::new(tree)
    }

    fn expand(&self, sym: usize, st: &mut GeState<'_>) -> DerivationTree {
        let symbol = self.grammar.symbols[sym].clone();
        let Some(options) = self.grammar.options(sym) else {
            return DerivationTree::leaf(symbol);
        };
        if st.used >= st.budget {
            return DerivationTree::leaf(symbol);
        }
        let codon = st.used % st.codons;
        st.used += 1;
        let value = st.genotype.read_uint(codon * self.codon_bits, self.codon_bits);
        let choice = (value % options.len() as u64) as usize;
        let children = options[choice].iter().map(|&s| self.expand(s, st)).collect();
        DerivationTree::node(symbol, children)
    }
}

struct GeState<'a> {
    genotype: &'a Genotype,
    codons: usize,
    budget: usize,
    used: usize,
}

/// Shorthand for a one-off [`GeMapper`] mapping.
pub fn map_ge(
    genotype: &Genotype,
    grammar: &Grammar,
    codon_bits: usize,
    max_wraps: usize,
) -> Result<MappingOutcome, MapperError> {
    let mapper = GeMapper::new(grammar, codon_bits, max_wraps)?;
    mapper.check_length(genotype.len())?;
    Ok(mapper.map(genotype))
}

/// Count of sentential forms reachable from every symbol within `horizon`
/// expansion rounds, unexpanded nonterminals counting as one form.
fn derivation_counts(grammar: &Compiled, horizon: usize) -> Vec<u128> {
    let mut counts = vec![1u128; grammar.symbols.len()];
    for _ in 0..horizon {
        counts = (0..grammar.symbols.len())
            .map(|sym| match grammar.options(sym) {
                None => 1,
                Some(opts) => opts.iter().fold(0u128, |acc, opt| {
                    let product = opt.iter().fold(1u128, |p, &s| p.saturating_mul(counts[s]));
                    acc.saturating_add(product)
                }),
            })
            .collect();
    }
    counts
}

fn weight_of(count: u128) -> f64 {
    libm::log2(1.0 + count as f64)
}

/// `log2(1 + forms)` for every symbol, where `forms` is the number of
/// distinct strings derivable within `horizon` expansion rounds. Terminals
/// weigh exactly 1.
pub fn expressiveness_weights(grammar: &Grammar, horizon: usize) -> BTreeMap<Symbol, f64> {
    let compiled = Compiled::new(grammar);
    let counts = derivation_counts(&compiled, horizon);
    compiled
        .symbols
        .iter()
        .cloned()
        .zip(counts.into_iter().map(weight_of))
        .collect()
}

/// Splits `total` into parts proportional to `weights` by largest-remainder
/// apportionment. Ties on the remainder go to the leftmost part.
pub fn apportion(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    if weights.is_empty() {
        return Vec::new();
    }
    if sum.is_nan() || sum <= 0.0 {
        return apportion_equal(total, weights.len());
    }
    let quotas: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut parts: Vec<usize> = quotas
        .iter()
        .map(|q| (libm::floor(*q) as usize).min(total))
        .collect();
    let assigned: usize = parts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - libm::floor(quotas[a]);
        let fb = quotas[b] - libm::floor(quotas[b]);
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().cycle().take(total.saturating_sub(assigned)) {
        parts[i] += 1;
    }
    parts
}

/// Equal shares; the first `total % parts` parts get one extra element.
pub fn apportion_equal(total: usize, parts: usize) -> Vec<usize> {
    let base = total / parts;
    let extra = total % parts;
    (0..parts).map(|i| base + usize::from(i < extra)).collect()
}

/// Hierarchical weighted mapper.
#[derive(Debug, Clone)]
pub struct WhgeMapper {
    grammar: Compiled,
    weights: Vec<f64>,
    /// Per nonterminal: the option used once the genotype no longer drives
    /// the derivation.
    fallback: Vec<usize>,
    min_height: Vec<usize>,
    depth_cap: usize,
}

impl WhgeMapper {
    /// Fails if some nonterminal cannot derive a finite terminal string.
    pub fn new(grammar: &Grammar, depth_cap: usize, horizon: usize) -> Result<Self, MapperError> {
        if depth_cap == 0 {
            return Err(MapperError::ZeroParameter { name: "depth_cap" });
        }
        if horizon == 0 {
            return Err(MapperError::ZeroParameter { name: "horizon" });
        }
        let compiled = Compiled::new(grammar);
        let heights = compiled.min_heights();
        if let Some(sym) = (0..compiled.symbols.len()).find(|&s| heights[s].is_none()) {
            return Err(MapperError::NonTerminating(compiled.symbols[sym].clone()));
        }
        let heights: Vec<usize> = heights.into_iter().map(Option::unwrap).collect();
        let fallback = (0..compiled.symbols.len())
            .map(|sym| match compiled.options(sym) {
                None => 0,
                Some(opts) => {
                    let key = |opt: &Vec<usize>| {
                        let height = opt.iter().map(|&s| heights[s]).max().unwrap_or(0);
                        let nts = opt.iter().filter(|&&s| compiled.is_nonterminal(s)).count();
                        (height, nts)
                    };
                    (0..opts.len()).min_by_key(|&i| key(&opts[i])).unwrap()
                }
            })
            .collect();
        let weights = derivation_counts(&compiled, horizon)
            .into_iter()
            .map(weight_of)
            .collect();
        Ok(WhgeMapper {
            grammar: compiled,
            weights,
            fallback,
            min_height: heights,
            depth_cap,
        })
    }

    /// Upper bound on the depth of any tree this mapper produces.
    pub fn depth_bound(&self) -> usize {
        self.depth_cap + self.min_height.iter().copied().max().unwrap_or(0)
    }

    pub fn map(&self, genotype: &Genotype) -> MappingOutcome {
        let tree = self.map_slice(genotype, 0, genotype.len(), self.grammar.start, 0);
        MappingOutcome::new(tree)
    }

    fn map_slice(&self, g: &Genotype, start: usize, end: usize, sym: usize, depth: usize) -> DerivationTree {
        let symbol = self.grammar.symbols[sym].clone();
        let Some(options) = self.grammar.options(sym) else {
            return DerivationTree::leaf(symbol);
        };
        if depth >= self.depth_cap || start == end {
            return self.shortest(sym);
        }
        let len = end - start;
        let choice = if options.len() == 1 {
            0
        } else {
            let mut best = (0usize, 0.0f64);
            let mut at = start;
            for (i, part) in apportion_equal(len, options.len()).into_iter().enumerate() {
                let density = if part == 0 {
                    0.0
                } else {
                    g.count_ones_in(at, at + part) as f64 / part as f64
                };
                if density > best.1 {
                    best = (i, density);
                }
                at += part;
            }
            best.0
        };
        let option = &options[choice];
        let weights: Vec<f64> = option.iter().map(|&s| self.weights[s]).collect();
        let mut at = start;
        let children = option
            .iter()
            .zip(apportion(len, &weights))
            .map(|(&child, part)| {
                let tree = self.map_slice(g, at, at + part, child, depth + 1);
                at += part;
                tree
            })
            .collect();
        DerivationTree::node(symbol, children)
    }

    fn shortest(&self, sym: usize) -> DerivationTree {
        let symbol = self.grammar.symbols[sym].clone();
        match self.grammar.options(sym) {
            None => DerivationTree::leaf(symbol),
            Some(opts) => DerivationTree::node(
                symbol,
                opts[self.fallback[sym]]
                    .iter()
                    .map(|&s| self.shortest(s))
                    .collect(),
            ),
        }
    }
}

/// Shorthand for a one-off [`WhgeMapper`] mapping.
pub fn map_whge(
    genotype: &Genotype,
    grammar: &Grammar,
    depth_cap: usize,
    horizon: usize,
) -> Result<MappingOutcome, MapperError> {
    Ok(WhgeMapper::new(grammar, depth_cap, horizon)?.map(genotype))
}

/// Either mapper behind one interface.
#[derive(Debug, Clone)]
pub enum Mapper {
    Ge(GeMapper),
    Whge(WhgeMapper),
}

impl Mapper {
    pub fn map(&self, genotype: &Genotype) -> MappingOutcome {
        match self {
            Mapper::Ge(m) => m.map(genotype),
            Mapper::Whge(m) => m.map(genotype),
        }
    }
}
