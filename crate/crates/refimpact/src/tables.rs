//! Tab-separated and markdown renderings of analysis results.
//!
//! Odds ratios and interval bounds carry 2 decimals, percentage changes 1,
//! factor changes 2. Rounding is half away from zero on the decimal value.
//! Missing cells are `NA`; a coefficient without stars has an empty cell.

use std::fmt::Write;

use refimpact_core::cohort::{ObservationRow, SummaryStat, DEPENDENT_NAME};
use refimpact_core::regress::{factor_change, CurvePoint, OddsRow, OddsTable};
use refimpact_core::Result;

pub const NA: &str = "NA";

pub const COUNTRIES_HEADER: [&str; 3] = ["rank", "country", "fractional_count"];
pub const SUMMARY_HEADER: [&str; 5] = ["variable", "mean", "sd", "min", "max"];
pub const CURVE_HEADER: [&str; 3] = ["citing_year", "flag", "probability"];
pub const ODDS_CELLS: [&str; 5] = ["or", "ci_low", "ci_high", "pct", "stars"];
pub const FACTOR_COLUMN: &str = "factor";

pub const OR_DECIMALS: usize = 2;
pub const PCT_DECIMALS: usize = 1;
pub const FACTOR_DECIMALS: usize = 2;
const COUNT_DECIMALS: usize = 2;
const SUMMARY_DECIMALS: usize = 4;
const PROBABILITY_DECIMALS: usize = 6;

/// `x` rounded to `decimals` places, half away from zero.
pub fn round_to(x: f64, decimals: usize) -> f64 {
    let scale = 10f64.powi(decimals as i32);
    let r = (x * scale).round() / scale;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Fixed-point text, `NA` for non-finite values.
pub fn fixed(x: f64, decimals: usize) -> String {
    if x.is_finite() {
        format!("{:.*}", decimals, round_to(x, decimals))
    } else {
        NA.to_owned()
    }
}

fn line(out: &mut String, cells: &[&str]) {
    out.push_str(&cells.join("\t"));
    out.push('\n');
}

/// Country ranking in the layout of a most-referenced-countries table.
pub fn countries_tsv(ranking: &[(String, f64)]) -> String {
    let mut out = String::new();
    line(&mut out, &COUNTRIES_HEADER);
    for (i, (country, count)) in ranking.iter().enumerate() {
        let rank = (i + 1).to_string();
        line(&mut out, &[&rank, country, &fixed(*count, COUNT_DECIMALS)]);
    }
    out
}

/// Descriptive statistics for the dependent variable and every covariate.
pub fn summary_tsv(stats: &[SummaryStat]) -> String {
    let mut out = String::new();
    line(&mut out, &SUMMARY_HEADER);
    for s in stats {
        line(
            &mut out,
            &[
                &s.variable,
                &fixed(s.mean, SUMMARY_DECIMALS),
                &fixed(s.sd, SUMMARY_DECIMALS),
                &fixed(s.min, SUMMARY_DECIMALS),
                &fixed(s.max, SUMMARY_DECIMALS),
            ],
        );
    }
    out
}

fn odds_cells(row: Option<&OddsRow>) -> [String; 5] {
    match row {
        Some(r) => [
            fixed(r.odds_ratio, OR_DECIMALS),
            fixed(r.ci_low, OR_DECIMALS),
            fixed(r.ci_high, OR_DECIMALS),
            fixed(r.pct_change, PCT_DECIMALS),
            r.stars.clone(),
        ],
        None => [NA, NA, NA, NA, NA].map(str::to_owned),
    }
}

/// Header of an odds table holding the given models (`"A"`, `"B"`).
pub fn odds_header(models: &[&str]) -> Vec<String> {
    let mut h = vec!["variable".to_owned()];
    for m in models {
        h.extend(ODDS_CELLS.iter().map(|c| format!("{m}_{c}")));
    }
    if models.len() == 2 {
        h.push(FACTOR_COLUMN.to_owned());
    }
    h
}

/// One or two odds tables side by side. With both models present the rows
/// follow model B and a factor-change column is appended.
pub fn odds_tsv(a: Option<&OddsTable>, b: Option<&OddsTable>) -> Result<String> {
    let mut out = String::new();
    match (a, b) {
        (Some(a), Some(b)) => {
            let header = odds_header(&["A", "B"]);
            line(
                &mut out,
                &header.iter().map(String::as_str).collect::<Vec<_>>(),
            );
            for f in factor_change(a, b)? {
                let mut cells = vec![f.variable.clone()];
                cells.extend(odds_cells(a.row(&f.variable)));
                cells.extend(odds_cells(b.row(&f.variable)));
                cells.push(
                    f.factor
                        .map_or_else(|| NA.to_owned(), |x| fixed(x, FACTOR_DECIMALS)),
                );
                line(
                    &mut out,
                    &cells.iter().map(String::as_str).collect::<Vec<_>>(),
                );
            }
        }
        (Some(t), None) | (None, Some(t)) => {
            let header = odds_header(&[if a.is_some() { "A" } else { "B" }]);
            line(
                &mut out,
                &header.iter().map(String::as_str).collect::<Vec<_>>(),
            );
            for r in &t.rows {
                let mut cells = vec![r.variable.clone()];
                cells.extend(odds_cells(Some(r)));
                line(
                    &mut out,
                    &cells.iter().map(String::as_str).collect::<Vec<_>>(),
                );
            }
        }
        (None, None) => {}
    }
    Ok(out)
}

fn or_with_ci(row: Option<&OddsRow>) -> (String, String) {
    match row {
        Some(r) => (
            format!(
                "{}{} [{}, {}]",
                fixed(r.odds_ratio, OR_DECIMALS),
                r.stars,
                fixed(r.ci_low, OR_DECIMALS),
                fixed(r.ci_high, OR_DECIMALS)
            ),
            fixed(r.pct_change, PCT_DECIMALS),
        ),
        None => (String::new(), String::new()),
    }
}

/// Markdown version of [`odds_tsv`] with observation and cluster counts.
pub fn odds_markdown(title: &str, a: Option<&OddsTable>, b: Option<&OddsTable>) -> Result<String> {
    let mut out = format!("## {title}\n\n");
    let models: Vec<(&str, &OddsTable)> = [("A", a), ("B", b)]
        .into_iter()
        .filter_map(|(m, t)| t.map(|t| (m, t)))
        .collect();
    let Some(&(_, last)) = models.last() else {
        return Ok(out);
    };
    out.push_str("| Variable |");
    for (m, _) in &models {
        let _ = write!(out, " Model {m}: OR [95% CI] | Model {m}: % change |");
    }
    let both = models.len() == 2;
    if both {
        out.push_str(" Factor |");
    }
    out.push_str("\n|---|");
    for _ in &models {
        out.push_str("---:|---:|");
    }
    if both {
        out.push_str("---:|");
    }
    out.push('\n');
    let factors = match (a, b) {
        (Some(a), Some(b)) => Some(factor_change(a, b)?),
        _ => None,
    };
    for (i, r) in last.rows.iter().enumerate() {
        let _ = write!(out, "| {} |", r.variable);
        for (_, t) in &models {
            let (or, pct) = or_with_ci(t.row(&r.variable));
            let _ = write!(out, " {or} | {pct} |");
        }
        if let Some(f) = &factors {
            let cell = f[i]
                .factor
                .map(|x| fixed(x, FACTOR_DECIMALS))
                .unwrap_or_default();
            let _ = write!(out, " {cell} |");
        }
        out.push('\n');
    }
    let _ = writeln!(
        out,
        "\nObservations: {}. Citing articles (clusters): {}.",
        last.n_obs, last.n_clusters
    );
    out.push_str("Cluster-robust 95% intervals. *** p < 0.001, ** p < 0.01, * p < 0.05.\n");
    Ok(out)
}

/// Predicted probabilities by citing year with the flag off and on.
pub fn curve_tsv(points: &[CurvePoint]) -> String {
    let mut out = String::new();
    line(&mut out, &CURVE_HEADER);
    for p in points {
        line(
            &mut out,
            &[
                &p.citing_year.to_string(),
                if p.flag { "1" } else { "0" },
                &fixed(p.probability, PROBABILITY_DECIMALS),
            ],
        );
    }
    out
}

/// Observation rows: the dependent variable, every covariate and the
/// citing article id. Binary and count columns are integers.
pub fn rows_tsv(rows: &[ObservationRow], covariate_names: &[String]) -> String {
    let mut out = String::new();
    let mut header = vec![DEPENDENT_NAME];
    header.extend(covariate_names.iter().map(String::as_str));
    header.push("cluster_id");
    line(&mut out, &header);
    let mut values = Vec::with_capacity(covariate_names.len());
    for row in rows {
        values.clear();
        row.push_covariates(true, &mut values);
        out.push(if row.y { '1' } else { '0' });
        for (v, name) in values.iter().zip(covariate_names) {
            out.push('\t');
            if name == "cited_percentile" {
                out.push_str(&fixed(*v, PROBABILITY_DECIMALS));
            } else {
                let _ = write!(out, "{}", *v as i64);
            }
        }
        out.push('\t');
        out.push_str(&row.cluster_id);
        out.push('\n');
    }
    out
}
