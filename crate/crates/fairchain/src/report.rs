//! Markdown and CSV rendering.
//!
//! Reports (audit tables, markdown headroom tables) print numbers with six
//! decimals. Data files (headroom and curve CSVs) print the shortest decimal
//! that reads back to the same `f64`. Every output starts with the effective
//! configuration.

use std::fmt::Write as _;

use fairchain_core::counterfactual::HeadroomTable;
use fairchain_core::metrics::{ExposureReport, GapCurve, PairwiseReport};

/// Ordered key/value pairs describing how an output was produced.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Config {
    entries: Vec<(String, String)>,
}

impl Config {
    pub fn new(command: &str) -> Self {
        let mut c = Config::default();
        c.push("command", command);
        c
    }

    pub fn push(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    /// `key=value` lines, for `#` comment headers.
    pub fn comment_lines(&self) -> Vec<String> {
        self.entries.iter().map(|(k, v)| format!("{k}={v}")).collect()
    }

    fn csv_header(&self) -> String {
        self.comment_lines().iter().map(|l| format!("# {l}\n")).collect()
    }

    fn markdown(&self) -> String {
        let mut s = String::from("## Configuration\n\n| key | value |\n|---|---|\n");
        for (k, v) in &self.entries {
            let _ = writeln!(s, "| {k} | {} |", v.replace('|', "\\|"));
        }
        s
    }
}

fn f6(x: f64) -> String {
    format!("{x:.6}")
}

/// Exposure result for one score column or the composite.
#[derive(Debug, Clone, PartialEq)]
pub struct ExposureRow {
    pub subject: String,
    pub report: ExposureReport,
}

/// Pairwise result for one score column or the composite.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseRow {
    pub subject: String,
    pub report: PairwiseReport,
}

/// Per-component and composed gaps of one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub config: Config,
    pub groups: [String; 2],
    pub group_sizes: [usize; 2],
    pub exposure: Vec<ExposureRow>,
    pub pairwise: Vec<PairwiseRow>,
    pub notes: Vec<String>,
}

impl AuditReport {
    pub fn to_markdown(&self) -> String {
        let [a, b] = &self.groups;
        let mut s = String::from("# fairchain audit\n\n");
        s.push_str(&self.config.markdown());
        let _ = write!(
            s,
            "\nGroup A = `{a}` ({} items), group B = `{b}` ({} items).\n",
            self.group_sizes[0], self.group_sizes[1]
        );
        if !self.exposure.is_empty() {
            s.push_str("\n## Exposure\n\n");
            s.push_str("| subject | exposure A | exposure B | share A | share B | signed gap | gap |\n");
            s.push_str("|---|---|---|---|---|---|---|\n");
            for row in &self.exposure {
                let r = &row.report;
                let _ = writeln!(
                    s,
                    "| {} | {} | {} | {} | {} | {} | {} |",
                    row.subject,
                    f6(r.exposure_a),
                    f6(r.exposure_b),
                    f6(r.share_a),
                    f6(r.share_b),
                    f6(r.signed_gap),
                    f6(r.abs_gap)
                );
            }
            if let Some(first) = self.exposure.first() {
                let _ = write!(
                    s,
                    "\nSize-proportional reference gap: {}.\n",
                    f6(first.report.proportional_reference)
                );
            }
        }
        if !self.pairwise.is_empty() {
            s.push_str("\n## Pairwise accuracy\n\n");
            s.push_str("| subject | acc(A>B) | acc(B>A) | signed gap | gap | pairs A>B | pairs B>A |\n");
            s.push_str("|---|---|---|---|---|---|---|\n");
            for row in &self.pairwise {
                let r = &row.report;
                let _ = writeln!(
                    s,
                    "| {} | {} | {} | {} | {} | {} | {} |",
                    row.subject,
                    f6(r.acc_a_over_b),
                    f6(r.acc_b_over_a),
                    f6(r.acc_a_over_b - r.acc_b_over_a),
                    f6(r.gap),
                    r.pair_counts.0,
                    r.pair_counts.1
                );
            }
        }
        if !self.notes.is_empty() {
            s.push_str("\n## Notes\n\n");
            for n in &self.notes {
                let _ = writeln!(s, "- {n}");
            }
        }
        s
    }

    /// One row per (subject, metric). For exposure, `value_a`/`value_b` are
    /// the group shares; for pairwise they are the two directional
    /// accuracies.
    pub fn to_csv(&self) -> String {
        let mut s = self.config.csv_header();
        s.push_str("subject,metric,value_a,value_b,signed_gap,gap\n");
        for row in &self.exposure {
            let r = &row.report;
            let _ = writeln!(
                s,
                "{},exposure,{},{},{},{}",
                csv_field(&row.subject),
                f6(r.share_a),
                f6(r.share_b),
                f6(r.signed_gap),
                f6(r.abs_gap)
            );
        }
        for row in &self.pairwise {
            let r = &row.report;
            let _ = writeln!(
                s,
                "{},pairwise,{},{},{},{}",
                csv_field(&row.subject),
                f6(r.acc_a_over_b),
                f6(r.acc_b_over_a),
                f6(r.acc_a_over_b - r.acc_b_over_a),
                f6(r.gap)
            );
        }
        s
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Subset label: component names joined with `+`.
pub fn subset_label(subset: &[usize], names: &[String]) -> String {
    subset.iter().map(|&c| names[c].as_str()).collect::<Vec<_>>().join("+")
}

/// `subset,baseline_gap,improved_gap,fi` at full precision.
pub fn headroom_csv(table: &HeadroomTable, names: &[String], config: &Config) -> String {
    let mut s = config.csv_header();
    s.push_str("subset,baseline_gap,improved_gap,fi\n");
    for row in &table.rows {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            csv_field(&subset_label(&row.subset, names)),
            row.baseline_gap,
            row.improved_gap,
            row.fi
        );
    }
    s
}

pub fn headroom_markdown(table: &HeadroomTable, names: &[String], config: &Config) -> String {
    let mut s = String::from("# fairchain headroom\n\n");
    s.push_str(&config.markdown());
    let _ = write!(s, "\nBaseline gap: {}.\n\n", f6(table.baseline_gap));
    s.push_str("| fixed components | improved gap | FI |\n|---|---|---|\n");
    for row in &table.rows {
        let _ = writeln!(
            s,
            "| {} | {} | {} |",
            subset_label(&row.subset, names),
            f6(row.improved_gap),
            f6(row.fi)
        );
    }
    s
}

/// `t,gap[,random_gap]` at full precision.
pub fn curve_csv(curve: &GapCurve, config: &Config) -> String {
    let mut s = config.csv_header();
    match &curve.reference {
        Some(reference) => {
            s.push_str("t,gap,random_gap\n");
            for ((t, g), r) in curve.positions.iter().zip(&curve.gaps).zip(reference) {
                let _ = writeln!(s, "{t},{g},{r}");
            }
        }
        None => {
            s.push_str("t,gap\n");
            for (t, g) in curve.positions.iter().zip(&curve.gaps) {
                let _ = writeln!(s, "{t},{g}");
            }
        }
    }
    s
}
