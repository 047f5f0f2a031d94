use std::io::Write;

use anyhow::Result;
use basislab_core::greedy::{FundamentalTable, Mode, SignMode};
use basislab_core::harness::SuiteReport;

pub struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.header)?;
        for r in &self.rows {
            out.write_record(r)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// `v` to `digits` significant digits, trailing zeros dropped.
pub fn format_significant(v: f64, digits: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return v.to_string();
    }
    let text = format!("{:.*e}", digits.saturating_sub(1), v);
    let parsed: f64 = text.parse().expect("formatted float parses");
    parsed.to_string()
}

pub fn format_exponent(p: f64) -> String {
    if p.is_finite() {
        format_significant(p, 6)
    } else {
        "inf".into()
    }
}

pub fn mode_label(m: Mode) -> &'static str {
    match m {
        Mode::Exhaustive => "exhaustive",
        Mode::Heuristic => "heuristic",
    }
}

pub fn sign_mode_label(m: SignMode) -> &'static str {
    match m {
        SignMode::Exhaustive => "exhaustive",
        SignMode::MonteCarlo => "monte_carlo",
    }
}

pub fn fundamental_csv(t: &FundamentalTable) -> CsvTable {
    let mut out = CsvTable::new(&[
        "n",
        "lambda",
        "phi",
        "phi_mode",
        "phi_upper",
        "lambda_star_lower",
        "lambda_star_upper",
        "phi_star_lower",
        "phi_star_upper",
    ]);
    for e in &t.entries {
        out.push(vec![
            e.n.to_string(),
            e.lambda.to_string(),
            e.phi.to_string(),
            mode_label(e.phi_mode).into(),
            e.phi_upper.to_string(),
            e.lambda_star.lower.to_string(),
            e.lambda_star.upper.to_string(),
            e.phi_star.lower.to_string(),
            e.phi_star.upper.to_string(),
        ]);
    }
    out
}

/// One table per profile present in the report.
pub fn suite_tables(r: &SuiteReport) -> Vec<(&'static str, CsvTable)> {
    let p = &r.profiles;
    let mut out = Vec::new();
    if let Some(t) = &p.fundamental {
        out.push(("fundamental", fundamental_csv(t)));
    }
    if let Some(b) = &p.bidemocracy {
        let mut t = CsvTable::new(&["n", "lower", "upper"]);
        for (i, br) in b.iter().enumerate() {
            t.push(vec![
                (i + 1).to_string(),
                br.lower.to_string(),
                br.upper.to_string(),
            ]);
        }
        out.push(("bidemocracy", t));
    }
    if let Some(s) = &p.ell1_average_slope {
        let mut t = CsvTable::new(&["n", "value", "stderr", "mode"]);
        for e in s {
            t.push(vec![
                e.n.to_string(),
                e.value.to_string(),
                e.stderr.to_string(),
                sign_mode_label(e.mode).into(),
            ]);
        }
        out.push(("ell1_average_slope", t));
    }
    if let Some(g) = &p.lambda_grid {
        let mut t = CsvTable::new(&["m", "n", "ratio"]);
        for (i, row) in g.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                t.push(vec![
                    (i + 1).to_string(),
                    (j + 1).to_string(),
                    v.to_string(),
                ]);
            }
        }
        out.push(("lambda_grid", t));
    }
    if let Some(rows) = &p.power_condition {
        let mut t = CsvTable::new(&["input", "n", "ratio"]);
        for row in rows {
            let input = row
                .input
                .as_slice()
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(" ");
            for (k, v) in row.ratios.iter().enumerate() {
                t.push(vec![input.clone(), (k + 1).to_string(), v.to_string()]);
            }
        }
        out.push(("power_condition", t));
    }
    if let Some(sq) = &p.indicator_squares {
        let mut t = CsvTable::new(&["n", "ratio"]);
        for (i, v) in sq.iter().enumerate() {
            t.push(vec![(i + 1).to_string(), v.to_string()]);
        }
        out.push(("indicator_squares", t));
    }
    out
}
