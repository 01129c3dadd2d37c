//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use gedyn::config::{ExperimentConfig, ProblemKind};
use gedyn::records::{read_aggregate, AggregateRow, RunRecord};
use gedyn::runner::{aggregate_path, execute, run_matrix, write_outputs, RunOutput};
use gedyn_core::grammar::{DerivationTree, Symbol};
use gedyn_core::mapper::MappingOutcome;
use gedyn_core::metrics::{estimate_id, DistanceMatrix};
use gedyn_core::problems::{parity_fitness, PARITY_OPERATORS};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

struct Report {
    failures: usize,
}

impl Report {
    fn check(&mut self, name: &str, ok: bool, detail: String) {
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failures += 1;
        }
    }
}

// --- TWO-NN hand oracle -----------------------------------------------------

fn line_matrix(xs: &[f64]) -> DistanceMatrix {
    DistanceMatrix::from_fn(xs.len(), |i, j| (xs[i] - xs[j]).abs())
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for at in 0..=p.len() {
            let mut q = p.clone();
            q.insert(at, n - 1);
            out.push(q);
        }
    }
    out
}

fn hand_oracle(report: &mut Report) {
    // second/first neighbour distances: 0 -> 3/1, 1 -> 2/1, 3 -> 3/2, 7 -> 6/4
    let x = [1.5f64.ln(), 1.5f64.ln(), 2f64.ln(), 3f64.ln()];
    let y = [0.0, (4.0f64 / 3.0).ln(), 2f64.ln(), 4f64.ln()];
    let slope = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / x.iter().map(|a| a * a).sum::<f64>();

    let dm = line_matrix(&[0.0, 1.0, 3.0, 7.0]);
    let est = estimate_id(&dm).expect("four distinct points").id;
    let scaled = estimate_id(&dm.scaled(7.3)).unwrap().id;
    let perms_equal = permutations(4)
        .iter()
        .all(|p| estimate_id(&dm.permuted(p)).unwrap().id == est);
    report.check(
        "1 two-nn hand oracle",
        (est - 1.05).abs() < 1e-2 && (est - slope).abs() < 1e-12 && scaled == est && perms_equal,
        format!("id={est:.6} oracle={slope:.6} scaled={scaled:.6} permutations_exact={perms_equal}"),
    );
}

// --- manifold recovery against a maximum-likelihood oracle -------------------

fn euclidean(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|p| {
            points
                .iter()
                .map(|q| {
                    p.iter()
                        .zip(q)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt()
                })
                .collect()
        })
        .collect()
}

/// Levina-Bickel with the MacKay-Ghahramani averaging of inverse estimates.
fn mle_dimension(dist: &[Vec<f64>], k: usize) -> f64 {
    let mut inv_sum = 0.0;
    for (i, row) in dist.iter().enumerate() {
        let mut d: Vec<f64> = row
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &v)| v)
            .collect();
        d.sort_by(f64::total_cmp);
        let tk = d[k - 1];
        inv_sum += d[..k - 1].iter().map(|tj| (tk / tj).ln()).sum::<f64>() / (k - 1) as f64;
    }
    dist.len() as f64 / inv_sum
}

fn manifold_recovery(report: &mut Report) {
    let mut rng = StdRng::seed_from_u64(2024);
    let n = 2000;
    let direction: Vec<f64> = {
        let v: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        v.into_iter().map(|a| a / norm).collect()
    };
    let samples: [(usize, &str, Vec<Vec<f64>>); 3] = [
        (
            1,
            "line in 10-d",
            (0..n)
                .map(|_| {
                    let t: f64 = rng.random();
                    direction.iter().map(|d| t * d).collect()
                })
                .collect(),
        ),
        (
            2,
            "unit square",
            (0..n).map(|_| (0..2).map(|_| rng.random()).collect()).collect(),
        ),
        (
            4,
            "unit hypercube",
            (0..n).map(|_| (0..4).map(|_| rng.random()).collect()).collect(),
        ),
    ];
    for (truth, name, points) in samples {
        let dist = euclidean(&points);
        let dm = DistanceMatrix::from_fn(n, |i, j| dist[i][j]);
        let est = estimate_id(&dm).expect("distinct samples").id;
        let mle = mle_dimension(&dist, 10);
        let truth = truth as f64;
        report.check(
            &format!("2 manifold recovery ({name})"),
            (est - truth).abs() <= 0.15 * truth && (est - mle).abs() <= 0.10 * mle,
            format!("id={est:.4} truth={truth} mle={mle:.4}"),
        );
    }
}

// --- parity against a text interpreter --------------------------------------

fn nt(name: &str, children: Vec<DerivationTree>) -> DerivationTree {
    DerivationTree::node(Symbol::nonterminal(name), children)
}

fn leaf(name: &str) -> DerivationTree {
    DerivationTree::leaf(Symbol::terminal(name))
}

fn random_expr(rng: &mut StdRng, bits: usize, depth: usize) -> DerivationTree {
    if depth == 0 || rng.random_bool(0.4) {
        let var = format!("b{}", rng.random_range(0..bits));
        return nt("expr", vec![nt("var", vec![leaf(&var)])]);
    }
    let op = PARITY_OPERATORS[rng.random_range(0..PARITY_OPERATORS.len())];
    nt(
        "expr",
        vec![
            leaf("("),
            random_expr(rng, bits, depth - 1),
            nt("op", vec![leaf(op)]),
            random_expr(rng, bits, depth - 1),
            leaf(")"),
        ],
    )
}

fn interpret(tokens: &[&str], pos: &mut usize, row: usize) -> bool {
    let tok = tokens[*pos];
    *pos += 1;
    if tok != "(" {
        let var: usize = tok[1..].parse().expect("variable token");
        return (row >> var) & 1 == 1;
    }
    let a = interpret(tokens, pos, row);
    let op = tokens[*pos];
    *pos += 1;
    let b = interpret(tokens, pos, row);
    assert_eq!(tokens[*pos], ")");
    *pos += 1;
    match op {
        "and" => a && b,
        "or" => a || b,
        "nand" => !(a && b),
        "nor" => !(a || b),
        other => panic!("unknown operator {other}"),
    }
}

fn text_parity_error(text: &str, bits: usize) -> f64 {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    let rows = 1usize << bits;
    let wrong = (0..rows)
        .filter(|&row| {
            let mut pos = 0;
            let out = interpret(&tokens, &mut pos, row);
            assert_eq!(pos, tokens.len());
            out != (row.count_ones() % 2 == 0)
        })
        .count();
    wrong as f64 / rows as f64
}

fn parity_oracle(report: &mut Report) {
    let mut rng = StdRng::seed_from_u64(77);
    let mut mismatches = 0;
    for bits in 3..=7 {
        for _ in 0..1000 {
            let tree = random_expr(&mut rng, bits, 6);
            let text = tree.linearize().expect("complete tree");
            let got = parity_fitness(&MappingOutcome::new(tree), bits).unwrap().value();
            if got != text_parity_error(&text, bits) {
                mismatches += 1;
            }
        }
    }
    let b0 = nt("expr", vec![nt("var", vec![leaf("b0")])]);
    let spot = parity_fitness(&MappingOutcome::new(b0), 3).unwrap().value();
    report.check(
        "3 parity oracle",
        mismatches == 0 && spot == 0.5,
        format!("mismatches={mismatches}/5000 spot(b0,b=3)={spot}"),
    );
}

// --- evolutionary dynamics over the full matrix -----------------------------

type Aggregates = BTreeMap<ProblemKind, Vec<AggregateRow>>;

fn load_aggregates(dir: &Path) -> Aggregates {
    ProblemKind::ALL
        .iter()
        .map(|&p| {
            let text = fs::read_to_string(aggregate_path(dir, p)).expect("aggregate file");
            (p, read_aggregate(&text).expect("aggregate rows"))
        })
        .collect()
}

fn series(rows: &[AggregateRow], param: usize) -> Vec<&AggregateRow> {
    let mut s: Vec<&AggregateRow> = rows.iter().filter(|r| r.param == param).collect();
    s.sort_by_key(|r| r.iterations);
    s
}

fn initial_diversity(report: &mut Report, agg: &Aggregates) {
    let low: Vec<String> = agg
        .iter()
        .flat_map(|(p, rows)| {
            rows.iter()
                .filter(|r| r.iterations == 0 && r.d < 0.99)
                .map(move |r| format!("{p}/{}", r.param))
        })
        .collect();
    let min = agg
        .values()
        .flatten()
        .filter(|r| r.iterations == 0)
        .map(|r| r.d)
        .fold(f64::INFINITY, f64::min);
    report.check(
        "4 initial diversity",
        low.is_empty(),
        format!("min d at generation 0 = {min}; below 0.99: {low:?}"),
    );
}

fn diversity_rebound(report: &mut Report, agg: &Aggregates, last: usize) {
    let s = series(&agg[&ProblemKind::Parity], 7);
    let (argmin, min) =
        s.iter().map(|r| (r.iterations, r.d)).fold(
            (0, f64::INFINITY),
            |acc, (g, d)| if d < acc.1 { (g, d) } else { acc },
        );
    let end = s.last().map(|r| r.d).unwrap_or(f64::NAN);
    report.check(
        "5 diversity rebound (parity b=7)",
        end > min && argmin < last,
        format!("min d={min} at generation {argmin}; d at generation {last} = {end}"),
    );
}

fn id_growth(report: &mut Report, agg: &Aggregates, last: usize) {
    let mut detail = Vec::new();
    let mut ok = true;
    for (p, rows) in agg {
        let mut params: Vec<usize> = rows.iter().map(|r| r.param).collect();
        params.dedup();
        for param in params {
            let s = series(rows, param);
            let (first, end) = (s[0].id, s.last().unwrap().id);
            ok &= s.last().unwrap().iterations == last && end > first;
            detail.push(format!("{p}/{param}: {first:.3}->{end:.3}"));
        }
    }
    report.check("6 id growth", ok, detail.join(" "));
}

fn hardness_ordering(report: &mut Report, agg: &Aggregates, last: usize) {
    for (p, rows) in agg {
        let mut finals: Vec<(usize, f64)> = rows
            .iter()
            .filter(|r| r.iterations == last)
            .map(|r| (r.param, r.bf))
            .collect();
        finals.sort_by_key(|&(param, _)| param);
        let drops: Vec<f64> = finals
            .windows(2)
            .map(|w| w[0].1 - w[1].1)
            .filter(|&d| d > 0.0)
            .collect();
        let ok = drops.is_empty() || (drops.len() == 1 && drops[0] <= 0.02);
        let shown: Vec<String> = finals
            .iter()
            .map(|(param, bf)| format!("{param}:{bf:.4}"))
            .collect();
        report.check(
            &format!("7 hardness ordering ({p})"),
            ok,
            format!(
                "bf at generation {last}: {} inversions={drops:?}",
                shown.join(" ")
            ),
        );
    }
}

fn elitism_and_conservation(report: &mut Report, runs: &[RunOutput], parents: usize) {
    let mut violations = Vec::new();
    for run in runs {
        let t = run.task;
        if run.snapshots.iter().any(|s| s.population_size != parents) {
            violations.push(format!("{}/{}/{} size", t.problem, t.param, t.run));
        }
        if run
            .snapshots
            .windows(2)
            .any(|w| w[1].best_fitness > w[0].best_fitness)
        {
            violations.push(format!("{}/{}/{} best fitness", t.problem, t.param, t.run));
        }
    }
    let snapshots: usize = runs.iter().map(|r| r.snapshots.len()).sum();
    report.check(
        "8 elitism and conservation",
        violations.is_empty(),
        format!(
            "{snapshots} snapshots over {} runs; violations: {violations:?}",
            runs.len()
        ),
    );
}

fn dir_contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .expect("output directory")
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

fn main() -> ExitCode {
    let mut report = Report { failures: 0 };
    hand_oracle(&mut report);
    manifold_recovery(&mut report);
    parity_oracle(&mut report);

    let tmp = tempfile::tempdir().expect("temporary directory");
    let config = ExperimentConfig::default();
    let last = config.evolution.generations;

    let started = Instant::now();
    let runs = run_matrix(&config).expect("first matrix execution");
    let records: Vec<RunRecord> = runs.iter().flat_map(RunOutput::records).collect();
    let first_dir = tmp.path().join("first");
    write_outputs(&first_dir, &records).expect("write first outputs");
    let first_elapsed = started.elapsed();

    let agg = load_aggregates(&first_dir);
    initial_diversity(&mut report, &agg);
    diversity_rebound(&mut report, &agg, last);
    id_growth(&mut report, &agg, last);
    hardness_ordering(&mut report, &agg, last);
    elitism_and_conservation(&mut report, &runs, config.evolution.parents);

    let second = ExperimentConfig {
        out_dir: tmp.path().join("second"),
        ..config
    };
    let started = Instant::now();
    execute(&second).expect("second matrix execution");
    let second_elapsed = started.elapsed();
    let (a, b) = (dir_contents(&first_dir), dir_contents(&second.out_dir));
    let limit = Duration::from_secs(15 * 60);
    report.check(
        "9 determinism and runtime",
        a == b && !a.is_empty() && first_elapsed < limit && second_elapsed < limit,
        format!(
            "{} files identical={}; records={}; wall clock {:.1}s and {:.1}s",
            a.len(),
            a == b,
            records.len(),
            first_elapsed.as_secs_f64(),
            second_elapsed.as_secs_f64()
        ),
    );

    let start_ids: Vec<String> = agg
        .iter()
        .flat_map(|(p, rows)| {
            rows.iter()
                .filter(|r| r.iterations == 0)
                .map(move |r| format!("{p}/{}={:.2}", r.param, r.id))
        })
        .collect();
    println!(
        "note: generation-0 id (reported, not asserted): {}",
        start_ids.join(" ")
    );

    if report.failures == 0 {
        println!("all acceptance criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("{} acceptance criteria failed", report.failures);
        ExitCode::FAILURE
    }
}
