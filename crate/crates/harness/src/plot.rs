//! gnuplot scripts for the three-panel figure of each problem: best fitness,
//! diversity and intrinsic dimension against iterations, one line per
//! parameter value.

use std::fmt::Write as _;

use crate::config::ProblemKind;
use crate::records::AggregateRow;

/// Script reading `<problem>.tsv` from its own directory and writing
/// `<problem>.png`. `None` when there is nothing to plot.
pub fn gnuplot_script(problem: ProblemKind, rows: &[AggregateRow]) -> Option<String> {
    let mut params: Vec<usize> = rows.iter().map(|r| r.param).collect();
    params.sort_unstable();
    params.dedup();
    if params.is_empty() {
        return None;
    }
    let name = problem.name();
    let sym = problem.param_symbol();
    let mut s = String::new();
    let _ = writeln!(s, "# {name}: columns k, iterations, bf, d, id");
    s.push_str("set terminal pngcairo size 1500,420\n");
    let _ = writeln!(s, "set output '{name}.png'");
    s.push_str("set datafile separator \"\\t\"\n");
    s.push_str("set datafile missing \"NaN\"\n");
    s.push_str("set grid\nset xlabel 'iterations'\nset key outside bottom center horizontal\n");
    s.push_str("set multiplot layout 1,3\n");
    for (column, title) in [(3, "Best fitness (lower is better)"), (4, "Diversity"), (5, "ID")] {
        let _ = writeln!(s, "set title '{title}'");
        let series: Vec<String> = params
            .iter()
            .map(|p| {
                format!(
                    "'{name}.tsv' skip 1 using 2:($1=={p} ? ${column} : 1/0) with lines lw 2 title '{sym}={p}'"
                )
            })
            .collect();
        let _ = writeln!(s, "plot {}", series.join(", \\\n     "));
    }
    s.push_str("unset multiplot\n");
    Some(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(params: &[usize]) -> Vec<AggregateRow> {
        params
            .iter()
            .flat_map(|&param| {
                (0..3).map(move |iterations| AggregateRow {
                    param,
                    iterations,
                    bf: 0.5,
                    d: 1.0,
                    id: 2.0,
                })
            })
            .collect()
    }

    #[test]
    fn one_series_per_param_and_panel() {
        let script = gnuplot_script(ProblemKind::KLandscapes, &rows(&[3, 4, 5, 6, 7])).unwrap();
        assert_eq!(script.matches("with lines").count(), 15);
        assert_eq!(script.matches("title 'k=5'").count(), 3);
        assert!(script.contains("lower is better"));
        assert!(script.contains("'klandscapes.tsv'"));
    }

    #[test]
    fn nothing_to_plot() {
        assert_eq!(gnuplot_script(ProblemKind::Parity, &[]), None);
    }
}
