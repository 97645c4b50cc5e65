//! Structural checks for the emitted tables.

use std::fmt;

use crate::tables::{
    odds_header, COUNTRIES_HEADER, CURVE_HEADER, FACTOR_DECIMALS, NA, OR_DECIMALS, PCT_DECIMALS,
    SUMMARY_HEADER,
};
use refimpact_core::cohort::DEPENDENT_NAME;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaError {
    pub table: &'static str,
    pub problems: Vec<String>,
}

impl fmt::Display for SchemaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} table: {}", self.table, self.problems.join("; "))
    }
}

impl std::error::Error for SchemaError {}

struct Checker {
    table: &'static str,
    problems: Vec<String>,
}

impl Checker {
    fn new(table: &'static str) -> Self {
        Checker {
            table,
            problems: Vec::new(),
        }
    }

    fn fail(&mut self, line: usize, msg: impl fmt::Display) {
        self.problems.push(format!("line {line}: {msg}"));
    }

    /// Splits the text into rows, checking the header and cell counts.
    fn rows<'a>(&mut self, text: &'a str, header: &[String]) -> Vec<(usize, Vec<&'a str>)> {
        if !text.ends_with('\n') {
            self.problems.push("missing final newline".into());
        }
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.split('\t').eq(header.iter().map(String::as_str)) => {}
            Some((_, h)) => self.fail(1, format!("header `{h}` != `{}`", header.join("\t"))),
            None => {
                self.problems.push("empty file".into());
                return Vec::new();
            }
        }
        let mut out = Vec::new();
        for (i, l) in lines {
            let cells: Vec<&str> = l.split('\t').collect();
            if cells.len() != header.len() {
                self.fail(
                    i + 1,
                    format!("{} cells, expected {}", cells.len(), header.len()),
                );
            } else {
                out.push((i + 1, cells));
            }
        }
        out
    }

    /// Parses a decimal with exactly `decimals` digits after the point.
    fn decimal(&mut self, line: usize, cell: &str, decimals: usize) -> Option<f64> {
        let digits_ok = match cell.split_once('.') {
            Some((_, frac)) => decimals > 0 && frac.len() == decimals,
            None => decimals == 0,
        };
        match cell.parse::<f64>() {
            Ok(v) if digits_ok && v.is_finite() => Some(v),
            _ => {
                self.fail(
                    line,
                    format!("`{cell}` is not a number with {decimals} decimals"),
                );
                None
            }
        }
    }

    fn finish(self) -> Result<(), SchemaError> {
        if self.problems.is_empty() {
            Ok(())
        } else {
            Err(SchemaError {
                table: self.table,
                problems: self.problems,
            })
        }
    }
}

fn owned(header: &[&str]) -> Vec<String> {
    header.iter().map(|s| (*s).to_owned()).collect()
}

/// Country ranking: consecutive ranks, distinct codes, nonincreasing counts.
pub fn validate_countries(text: &str) -> Result<(), SchemaError> {
    let mut c = Checker::new("countries");
    let rows = c.rows(text, &owned(&COUNTRIES_HEADER));
    let mut previous = f64::INFINITY;
    let mut seen = std::collections::BTreeSet::new();
    for (k, (line, cells)) in rows.iter().enumerate() {
        if cells[0] != (k + 1).to_string() {
            c.fail(*line, format!("rank `{}`, expected {}", cells[0], k + 1));
        }
        if cells[1].is_empty() || !seen.insert(cells[1]) {
            c.fail(*line, format!("country `{}` empty or repeated", cells[1]));
        }
        if let Some(v) = c.decimal(*line, cells[2], 2) {
            if v < 0.0 || v > previous {
                c.fail(*line, "counts must be nonnegative and nonincreasing");
            }
            previous = v;
        }
    }
    c.finish()
}

/// Descriptive statistics: dependent variable first, min <= mean <= max, sd >= 0.
pub fn validate_summary(text: &str) -> Result<(), SchemaError> {
    let mut c = Checker::new("summary");
    let rows = c.rows(text, &owned(&SUMMARY_HEADER));
    if rows
        .first()
        .is_some_and(|(_, cells)| cells[0] != DEPENDENT_NAME)
    {
        c.fail(2, format!("first variable must be `{DEPENDENT_NAME}`"));
    }
    for (line, cells) in &rows {
        if cells[0].is_empty() {
            c.fail(*line, "empty variable name");
        }
        let v: Vec<Option<f64>> = cells[1..].iter().map(|x| c.decimal(*line, x, 4)).collect();
        if let [Some(mean), Some(sd), Some(min), Some(max)] = v[..] {
            if sd < 0.0 || min > mean || mean > max {
                c.fail(*line, "need sd >= 0 and min <= mean <= max");
            }
        }
    }
    c.finish()
}

fn check_model_cells(c: &mut Checker, line: usize, cells: &[&str]) -> Option<f64> {
    if cells.iter().all(|x| *x == NA) {
        return None;
    }
    let or = c.decimal(line, cells[0], OR_DECIMALS);
    let lo = c.decimal(line, cells[1], OR_DECIMALS);
    let hi = c.decimal(line, cells[2], OR_DECIMALS);
    let pct = c.decimal(line, cells[3], PCT_DECIMALS);
    if !["", "*", "**", "***"].contains(&cells[4]) {
        c.fail(line, format!("stars `{}`", cells[4]));
    }
    if let (Some(or), Some(lo), Some(hi)) = (or, lo, hi) {
        if !(lo <= or && or <= hi) || or < 0.0 {
            c.fail(line, "odds ratio outside its interval");
        }
    }
    if let (Some(or), Some(pct)) = (or, pct) {
        // both sides rounded: 0.005 of odds ratio is 0.5 points
        if (pct - 100.0 * (or - 1.0)).abs() > 0.55 {
            c.fail(line, format!("pct {pct} inconsistent with odds ratio {or}"));
        }
    }
    pct
}

/// Odds table with one model (`A` or `B`) or both plus the factor column.
pub fn validate_odds(text: &str) -> Result<(), SchemaError> {
    let mut c = Checker::new("odds");
    let first = text.lines().next().unwrap_or("");
    let models: &[&str] = if first.contains("A_or") && first.contains("B_or") {
        &["A", "B"]
    } else if first.contains("A_or") {
        &["A"]
    } else {
        &["B"]
    };
    let rows = c.rows(text, &odds_header(models));
    if rows.is_empty() {
        c.problems.push("no coefficient rows".into());
    }
    let mut seen = std::collections::BTreeSet::new();
    for (line, cells) in &rows {
        if cells[0].is_empty() || !seen.insert(cells[0]) {
            c.fail(*line, format!("variable `{}` empty or repeated", cells[0]));
        }
        let pcts: Vec<Option<f64>> = models
            .iter()
            .enumerate()
            .map(|(m, _)| check_model_cells(&mut c, *line, &cells[1 + 5 * m..6 + 5 * m]))
            .collect();
        if models.len() == 2 {
            if pcts[1].is_none() {
                c.fail(*line, "model B cells missing");
            }
            let factor = cells[11];
            if factor != NA {
                let same_sign = matches!(
                    (pcts[0], pcts[1]),
                    (Some(a), Some(b)) if (a > 0.0) == (b > 0.0)
                );
                if c.decimal(*line, factor, FACTOR_DECIMALS).is_some() && !same_sign {
                    c.fail(*line, "factor given for missing or opposite-signed changes");
                }
            }
        }
    }
    c.finish()
}

/// Prediction curve: each citing year with flag 0 then 1, probabilities in [0, 1].
pub fn validate_curve(text: &str) -> Result<(), SchemaError> {
    let mut c = Checker::new("curve");
    let rows = c.rows(text, &owned(&CURVE_HEADER));
    for (k, (line, cells)) in rows.iter().enumerate() {
        if cells[0].parse::<i32>().is_err() {
            c.fail(*line, format!("year `{}`", cells[0]));
        }
        let expected = if k % 2 == 0 { "0" } else { "1" };
        if cells[1] != expected {
            c.fail(*line, format!("flag `{}`, expected {expected}", cells[1]));
        }
        if let Some(p) = c.decimal(*line, cells[2], 6) {
            if !(0.0..=1.0).contains(&p) {
                c.fail(*line, "probability outside [0, 1]");
            }
        }
    }
    if !rows.len().is_multiple_of(2) {
        c.problems.push("odd number of curve rows".into());
    }
    c.finish()
}
