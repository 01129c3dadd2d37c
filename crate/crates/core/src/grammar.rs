//! Context-free grammars in BNF and the derivation trees built from them.
//!
//! Concrete syntax, one rule per line:
//!
//! ```text
//! # comment
//! <expr> ::= ( <expr> <op> <expr> ) | <var>
//! <op>   ::= and | or
//! ```
//!
//! Tokens are whitespace separated. `<name>` is a nonterminal, anything else
//! except `|` and `::=` is a terminal. The first rule's left-hand side is the
//! start symbol. Option order is kept exactly as written because the mappers
//! index into it.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SymbolKind {
    Nonterminal,
    Terminal,
}

/// A grammar symbol. Nonterminal names are stored without angle brackets.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol {
    kind: SymbolKind,
    name: Arc<str>,
}

impl Symbol {
    pub fn terminal(name: &str) -> Self {
        assert!(!name.is_empty(), "symbol names are non-empty");
        Symbol {
            kind: SymbolKind::Terminal,
            name: name.into(),
        }
    }

    pub fn nonterminal(name: &str) -> Self {
        assert!(!name.is_empty(), "symbol names are non-empty");
        Symbol {
            kind: SymbolKind::Nonterminal,
            name: name.into(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> SymbolKind {
        self.kind
    }

    pub fn is_terminal(&self) -> bool {
        self.kind == SymbolKind::Terminal
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            SymbolKind::Terminal => f.write_str(&self.name),
            SymbolKind::Nonterminal => write!(f, "<{}>", self.name),
        }
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GrammarError {
    #[error("empty grammar source")]
    Empty,
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("undefined nonterminal <{name}> at {line}:{column}")]
    Undefined {
        name: String,
        line: usize,
        column: usize,
    },
    #[error("duplicate rule for <{name}> at line {line} (first defined at line {first_line})")]
    Duplicate {
        name: String,
        line: usize,
        first_line: usize,
    },
    #[error("name {name:?} is used both as a terminal and as a nonterminal")]
    NameClash { name: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    lhs: Symbol,
    options: Vec<Vec<Symbol>>,
}

impl Rule {
    pub fn lhs(&self) -> &Symbol {
        &self.lhs
    }

    pub fn options(&self) -> &[Vec<Symbol>] {
        &self.options
    }
}

/// A validated context-free grammar. Rules are kept in source order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grammar {
    rules: Vec<Rule>,
    index: BTreeMap<Arc<str>, usize>,
}

impl Grammar {
    /// Builds a grammar from `(lhs, options)` pairs; the first rule is the
    /// start rule. Nonterminals inside options must be defined.
    pub fn from_rules<I>(rules: I) -> Result<Self, GrammarError>
    where
        I: IntoIterator<Item = (Symbol, Vec<Vec<Symbol>>)>,
    {
        let mut out = Vec::new();
        let mut index = BTreeMap::new();
        for (i, (lhs, options)) in rules.into_iter().enumerate() {
            assert!(!lhs.is_terminal(), "rule left-hand side must be a nonterminal");
            if options.is_empty() || options.iter().any(Vec::is_empty) {
                return Err(GrammarError::Syntax {
                    line: i + 1,
                    column: 1,
                    message: alloc::format!("rule <{}> has an empty option", lhs.name()),
                });
            }
            if let Some(&first) = index.get(&lhs.name) {
                return Err(GrammarError::Duplicate {
                    name: lhs.name().into(),
                    line: i + 1,
                    first_line: first + 1,
                });
            }
            index.insert(lhs.name.clone(), i);
            out.push(Rule { lhs, options });
        }
        if out.is_empty() {
            return Err(GrammarError::Empty);
        }
        let g = Grammar { rules: out, index };
        for (i, rule) in g.rules.iter().enumerate() {
            for sym in rule.options.iter().flatten() {
                if !sym.is_terminal() && !g.index.contains_key(&sym.name) {
                    return Err(GrammarError::Undefined {
                        name: sym.name().into(),
                        line: i + 1,
                        column: 1,
                    });
                }
            }
        }
        g.check_name_clash()?;
        Ok(g)
    }

    fn check_name_clash(&self) -> Result<(), GrammarError> {
        for sym in self.rules.iter().flat_map(|r| r.options.iter().flatten()) {
            if sym.is_terminal() && self.index.contains_key(&sym.name) {
                return Err(GrammarError::NameClash {
                    name: sym.name().into(),
                });
            }
        }
        Ok(())
    }

    pub fn start(&self) -> &Symbol {
        &self.rules[0].lhs
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    /// Options of a nonterminal, in source order.
    pub fn options(&self, nonterminal: &Symbol) -> Option<&[Vec<Symbol>]> {
        if nonterminal.is_terminal() {
            return None;
        }
        self.index
            .get(&nonterminal.name)
            .map(|&i| self.rules[i].options.as_slice())
    }

    pub fn rule_index(&self, nonterminal: &Symbol) -> Option<usize> {
        if nonterminal.is_terminal() {
            None
        } else {
            self.index.get(&nonterminal.name).copied()
        }
    }

    pub fn symbols(&self) -> BTreeSet<Symbol> {
        let mut set = BTreeSet::new();
        for rule in &self.rules {
            set.insert(rule.lhs.clone());
            set.extend(rule.options.iter().flatten().cloned());
        }
        set
    }

    pub fn nonterminals(&self) -> impl Iterator<Item = &Symbol> {
        self.rules.iter().map(|r| &r.lhs)
    }

    pub fn terminals(&self) -> BTreeSet<Symbol> {
        self.symbols().into_iter().filter(Symbol::is_terminal).collect()
    }

    /// Canonical BNF: one rule per line, single spaces between tokens.
    pub fn to_bnf(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Grammar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for rule in &self.rules {
            write!(f, "{} ::=", rule.lhs)?;
            for (i, option) in rule.options.iter().enumerate() {
                if i > 0 {
                    f.write_str(" |")?;
                }
                for sym in option {
                    write!(f, " {sym}")?;
                }
            }
            f.write_str("\n")?;
        }
        Ok(())
    }
}

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let mut tokens = Vec::new();
    let mut start = None;
    for (col, (byte, ch)) in line.char_indices().enumerate() {
        match (ch.is_whitespace(), start) {
            (false, None) => start = Some((byte, col)),
            (true, Some((b, c))) => {
                tokens.push(Token {
                    text: &line[b..byte],
                    column: c + 1,
                });
                start = None;
            }
            _ => {}
        }
    }
    if let Some((b, c)) = start {
        tokens.push(Token {
            text: &line[b..],
            column: c + 1,
        });
    }
    tokens
}

fn nonterminal_name(token: &str) -> Option<&str> {
    token
        .strip_prefix('<')
        .and_then(|t| t.strip_suffix('>'))
        .filter(|t| !t.is_empty())
}

/// Parses BNF source into a [`Grammar`].
pub fn parse_bnf(text: &str) -> Result<Grammar, GrammarError> {
    struct Parsed<'a> {
        line: usize,
        lhs: &'a str,
        options: Vec<Vec<Token<'a>>>,
    }

    let mut parsed: Vec<Parsed<'_>> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let trimmed = raw.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let tokens = tokenize(raw);
        let syntax = |column: usize, message: &str| GrammarError::Syntax {
            line,
            column,
            message: message.to_string(),
        };
        let lhs = nonterminal_name(tokens[0].text)
            .ok_or_else(|| syntax(tokens[0].column, "rule must start with a <nonterminal>"))?;
        match tokens.get(1) {
            Some(t) if t.text == "::=" => {}
            Some(t) => return Err(syntax(t.column, "expected `::=`")),
            None => return Err(syntax(raw.chars().count() + 1, "expected `::=`")),
        }
        let mut options = Vec::new();
        let mut current = Vec::new();
        let mut last_column = tokens[1].column;
        for tok in tokens.into_iter().skip(2) {
            last_column = tok.column;
            match tok.text {
                "|" => {
                    if current.is_empty() {
                        return Err(syntax(tok.column, "empty option"));
                    }
                    options.push(core::mem::take(&mut current));
                }
                "::=" => return Err(syntax(tok.column, "unexpected `::=`")),
                _ => current.push(tok),
            }
        }
        if current.is_empty() {
            return Err(syntax(last_column, "empty option"));
        }
        options.push(current);
        parsed.push(Parsed { line, lhs, options });
    }
    if parsed.is_empty() {
        return Err(GrammarError::Empty);
    }

    let mut defined: BTreeMap<&str, usize> = BTreeMap::new();
    for p in &parsed {
        if let Some(&first_line) = defined.get(p.lhs) {
            return Err(GrammarError::Duplicate {
                name: p.lhs.into(),
                line: p.line,
                first_line,
            });
        }
        defined.insert(p.lhs, p.line);
    }

    let mut rules = Vec::with_capacity(parsed.len());
    for p in &parsed {
        let mut options = Vec::with_capacity(p.options.len());
        for option in &p.options {
            let mut seq = Vec::with_capacity(option.len());
            for tok in option {
                match nonterminal_name(tok.text) {
                    Some(name) if defined.contains_key(name) => seq.push(Symbol::nonterminal(name)),
                    Some(name) => {
                        return Err(GrammarError::Undefined {
                            name: name.into(),
                            line: p.line,
                            column: tok.column,
                        })
                    }
                    None => seq.push(Symbol::terminal(tok.text)),
                }
            }
            options.push(seq);
        }
        rules.push((Symbol::nonterminal(p.lhs), options));
    }
    Grammar::from_rules(rules)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("derivation tree has an unexpanded nonterminal {0}")]
    Incomplete(Symbol),
    #[error("node {symbol} has children [{found}] matching none of its options")]
    NoMatchingOption { symbol: Symbol, found: String },
    #[error("terminal {0} has children")]
    TerminalWithChildren(Symbol),
    #[error("symbol {0} is not part of the grammar")]
    UnknownSymbol(Symbol),
}

/// A derivation tree. A nonterminal node without children is unexpanded,
/// which makes the tree incomplete.
#[derive(Clone, PartialEq, Eq)]
pub struct DerivationTree {
    symbol: Symbol,
    children: Vec<DerivationTree>,
}

impl DerivationTree {
    pub fn leaf(symbol: Symbol) -> Self {
        DerivationTree {
            symbol,
            children: Vec::new(),
        }
    }

    pub fn node(symbol: Symbol, children: Vec<DerivationTree>) -> Self {
        DerivationTree { symbol, children }
    }

    pub fn symbol(&self) -> &Symbol {
        &self.symbol
    }

    pub fn children(&self) -> &[DerivationTree] {
        &self.children
    }

    pub fn is_complete(&self) -> bool {
        if self.children.is_empty() {
            self.symbol.is_terminal()
        } else {
            self.children.iter().all(DerivationTree::is_complete)
        }
    }

    /// Edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        self.children.iter().map(|c| c.depth() + 1).max().unwrap_or(0)
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(DerivationTree::size).sum::<usize>()
    }

    /// Leaves in left-to-right order.
    pub fn leaves(&self) -> Vec<&Symbol> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a Symbol>) {
        if self.children.is_empty() {
            out.push(&self.symbol);
        } else {
            for c in &self.children {
                c.collect_leaves(out);
            }
        }
    }

    /// Terminal leaves joined by single spaces.
    pub fn linearize(&self) -> Result<String, TreeError> {
        let mut out = String::new();
        for leaf in self.leaves() {
            if !leaf.is_terminal() {
                return Err(TreeError::Incomplete(leaf.clone()));
            }
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(leaf.name());
        }
        Ok(out)
    }

    /// Checks that every internal node expands by one of its grammar options.
    /// Unexpanded nonterminal leaves are accepted; use [`is_complete`] to
    /// reject them.
    ///
    /// [`is_complete`]: DerivationTree::is_complete
    pub fn validate(&self, grammar: &Grammar) -> Result<(), TreeError> {
        if self.symbol.is_terminal() {
            if !self.children.is_empty() {
                return Err(TreeError::TerminalWithChildren(self.symbol.clone()));
            }
            return Ok(());
        }
        let options = grammar
            .options(&self.symbol)
            .ok_or_else(|| TreeError::UnknownSymbol(self.symbol.clone()))?;
        if self.children.is_empty() {
            return Ok(());
        }
        let matches = options.iter().any(|opt| {
            opt.len() == self.children.len() && opt.iter().zip(&self.children).all(|(s, c)| *s == c.symbol)
        });
        if !matches {
            let found = self
                .children
                .iter()
                .map(|c| c.symbol.to_string())
                .collect::<Vec<_>>()
                .join(" ");
            return Err(TreeError::NoMatchingOption {
                symbol: self.symbol.clone(),
                found,
            });
        }
        self.children.iter().try_for_each(|c| c.validate(grammar))
    }
}

impl fmt::Debug for DerivationTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.children.is_empty() {
            write!(f, "{}", self.symbol)
        } else {
            write!(f, "{}[", self.symbol)?;
            for (i, c) in self.children.iter().enumerate() {
                if i > 0 {
                    f.write_str(" ")?;
                }
                write!(f, "{c:?}")?;
            }
            f.write_str("]")
        }
    }
}
