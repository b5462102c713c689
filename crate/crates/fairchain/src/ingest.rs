//! Score CSV and German Credit readers, the score CSV writer, and group-size
//! equalization.
//!
//! Score CSV layout: a header `item_id,group[,label],<score columns...>`
//! followed by one row per item. Lines starting with `#` before the header
//! are comments; writers use them to echo the configuration that produced a
//! file. Scores are written with 17 significant digits so that a write/load
//! round trip reproduces every `f64` exactly.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use fairchain_core::model::{Group, Item, ScoredDataset, Side};
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Column bindings for a score CSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScoreTableSchema {
    pub item_id: String,
    pub group: String,
    pub label: Option<String>,
    /// Score columns in component order.
    pub scores: Vec<String>,
}

impl ScoreTableSchema {
    /// `item_id,group[,label],score_0..score_{k-1}`.
    pub fn standard(k: usize, labeled: bool) -> Self {
        ScoreTableSchema {
            item_id: "item_id".into(),
            group: "group".into(),
            label: labeled.then(|| "label".into()),
            scores: (0..k).map(|i| format!("score_{i}")).collect(),
        }
    }

    /// Reads the header of `path`: `item_id` and `group` are required,
    /// `label` is optional, and every other column is a score column in file
    /// order.
    pub fn infer(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        let (_, body) = split_comments(&text);
        let mut reader = csv_reader(body);
        let headers = reader.headers()?.clone();
        Self::from_headers(headers.iter())
    }

    fn from_headers<'a>(headers: impl Iterator<Item = &'a str>) -> Result<Self> {
        let headers: Vec<&str> = headers.collect();
        for required in ["item_id", "group"] {
            if !headers.contains(&required) {
                return Err(Error::MissingColumn(required.into()));
            }
        }
        let scores: Vec<String> = headers
            .iter()
            .filter(|h| !matches!(**h, "item_id" | "group" | "label"))
            .map(|h| h.to_string())
            .collect();
        if scores.is_empty() {
            return Err(Error::MissingColumn("score_0".into()));
        }
        Ok(ScoreTableSchema {
            item_id: "item_id".into(),
            group: "group".into(),
            label: headers.contains(&"label").then(|| "label".into()),
            scores,
        })
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Splits off leading `#` comment lines; returns their count and the rest.
fn split_comments(text: &str) -> (u64, &str) {
    let mut rest = text;
    let mut skipped = 0;
    while rest.starts_with('#') {
        rest = rest.find('\n').map_or("", |i| &rest[i + 1..]);
        skipped += 1;
    }
    (skipped, rest)
}

fn csv_reader(body: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes())
}

fn parse_score(cell: &str, line: u64, column: &str) -> Result<f64> {
    let value: f64 = cell.trim().parse().map_err(|_| Error::Cell {
        line,
        column: column.into(),
        message: format!("`{cell}` is not a number"),
    })?;
    if !value.is_finite() {
        return Err(Error::Cell {
            line,
            column: column.into(),
            message: format!("`{cell}` is not finite"),
        });
    }
    Ok(value)
}

fn parse_label(cell: &str, line: u64, column: &str) -> Result<bool> {
    match cell.trim() {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(Error::Cell {
            line,
            column: column.into(),
            message: format!("label must be 0 or 1, got `{other}`"),
        }),
    }
}

/// Loads a score CSV. Row order becomes item order; group `A` is the
/// lexicographically first group tag.
pub fn load_csv(path: &Path, schema: &ScoreTableSchema) -> Result<ScoredDataset> {
    let text = read_text(path)?;
    parse_csv(&text, schema)
}

/// As [`load_csv`] on in-memory text.
pub fn parse_csv(text: &str, schema: &ScoreTableSchema) -> Result<ScoredDataset> {
    let (offset, body) = split_comments(text);
    let mut reader = csv_reader(body);
    let headers = reader.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.into()))
    };
    let id_col = find(&schema.item_id)?;
    let group_col = find(&schema.group)?;
    let label_col = schema.label.as_deref().map(find).transpose()?;
    let score_cols = schema.scores.iter().map(|s| find(s)).collect::<Result<Vec<_>>>()?;

    let mut items = Vec::new();
    let mut seen = HashSet::new();
    for record in reader.records() {
        let record = record?;
        let line = offset + record.position().map_or(0, |p| p.line());
        let cell = |col: usize| record.get(col).unwrap_or("");
        let id = cell(id_col).to_string();
        if !seen.insert(id.clone()) {
            return Err(Error::Row {
                line,
                message: format!("duplicate item_id `{id}`"),
            });
        }
        let label = label_col
            .map(|c| parse_label(cell(c), line, schema.label.as_deref().unwrap_or("label")))
            .transpose()?;
        let scores = score_cols
            .iter()
            .zip(&schema.scores)
            .map(|(&c, name)| parse_score(cell(c), line, name))
            .collect::<Result<Vec<_>>>()?;
        items.push(Item::new(id, cell(group_col), label, scores));
    }
    if items.is_empty() {
        return Err(fairchain_core::Error::Structure("score table is empty".into()).into());
    }
    Ok(ScoredDataset::new(items)?)
}

/// Formats a score with 17 significant digits.
pub fn format_score(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `dataset` as a score CSV. `comments` become leading `# ` lines.
pub fn write_csv<W: Write>(out: W, dataset: &ScoredDataset, names: &[String], comments: &[String]) -> Result<()> {
    if names.len() != dataset.k() {
        return Err(Error::Internal(format!(
            "{} component names for K = {}",
            names.len(),
            dataset.k()
        )));
    }
    let mut out = out;
    for c in comments {
        writeln!(out, "# {c}").map_err(|e| Error::io("<output>", e))?;
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["item_id".to_string(), "group".to_string()];
    if dataset.has_labels() {
        header.push("label".into());
    }
    header.extend(names.iter().cloned());
    w.write_record(&header)?;
    let labels = dataset.labels();
    for i in 0..dataset.len() {
        let mut row = vec![dataset.ids()[i].0.clone(), dataset.group(dataset.side(i)).0.clone()];
        if let Some(labels) = labels {
            row.push(if labels[i] { "1" } else { "0" }.into());
        }
        row.extend((0..dataset.k()).map(|k| format_score(dataset.column(k)[i])));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<output>", e))?;
    Ok(())
}

/// Component names of the German Credit dataset, in component order.
pub const GERMAN_COMPONENTS: [&str; 4] = ["credit_amount", "age", "num_credits", "num_liable"];

/// Field positions (0-based) of the four numeric attributes.
const GERMAN_FIELDS: [usize; 4] = [4, 12, 15, 17];
const GERMAN_SEX_FIELD: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sex {
    Male,
    Female,
}

impl Sex {
    /// Maps the personal-status code (attribute 9).
    pub fn from_code(code: &str) -> Option<Sex> {
        match code {
            "A91" | "A93" | "A94" => Some(Sex::Male),
            "A92" | "A95" => Some(Sex::Female),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Sex::Male => "male",
            Sex::Female => "female",
        }
    }
}

/// One line of `german.data`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GermanCreditRecord {
    /// The 20 raw attribute tokens.
    pub attributes: Vec<String>,
    /// 1 = good, 2 = bad.
    pub outcome: u8,
    pub sex: Sex,
    pub credit_amount: u32,
    pub age: u32,
    pub num_credits: u32,
    pub num_liable: u32,
}

impl GermanCreditRecord {
    pub fn components(&self) -> [u32; 4] {
        [self.credit_amount, self.age, self.num_credits, self.num_liable]
    }
}

/// Parses one whitespace-separated line of 21 fields.
pub fn parse_german_line(text: &str, line: u64) -> Result<GermanCreditRecord> {
    let fields: Vec<&str> = text.split_whitespace().collect();
    if fields.len() != 21 {
        return Err(Error::Row {
            line,
            message: format!("expected 21 fields, found {}", fields.len()),
        });
    }
    let sex = Sex::from_code(fields[GERMAN_SEX_FIELD]).ok_or_else(|| Error::Row {
        line,
        message: format!("unknown personal-status code `{}`", fields[GERMAN_SEX_FIELD]),
    })?;
    let mut numeric = [0u32; 4];
    for (slot, (&field, name)) in numeric.iter_mut().zip(GERMAN_FIELDS.iter().zip(GERMAN_COMPONENTS)) {
        *slot = match fields[field].parse::<u32>() {
            Ok(v) if v > 0 => v,
            _ => {
                return Err(Error::Cell {
                    line,
                    column: name.into(),
                    message: format!("`{}` is not a positive integer", fields[field]),
                })
            }
        };
    }
    let outcome = match fields[20] {
        "1" => 1,
        "2" => 2,
        other => {
            return Err(Error::Row {
                line,
                message: format!("outcome must be 1 or 2, got `{other}`"),
            })
        }
    };
    Ok(GermanCreditRecord {
        attributes: fields[..20].iter().map(|s| s.to_string()).collect(),
        outcome,
        sex,
        credit_amount: numeric[0],
        age: numeric[1],
        num_credits: numeric[2],
        num_liable: numeric[3],
    })
}

/// Parses every non-blank line.
pub fn parse_german_credit(text: &str) -> Result<Vec<GermanCreditRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_german_line(l, i as u64 + 1))
        .collect()
}

/// Dataset with groups `[male, female]`, K = 4 components in
/// [`GERMAN_COMPONENTS`] order, no labels. Item ids are 1-based line numbers.
pub fn german_dataset(records: &[GermanCreditRecord]) -> Result<ScoredDataset> {
    let items = records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let scores = r.components().iter().map(|&v| f64::from(v)).collect();
            Item::new(format!("{:04}", i + 1), r.sex.as_str(), None, scores)
        })
        .collect();
    Ok(ScoredDataset::with_group_order(
        items,
        [Group::from("male"), Group::from("female")],
    )?)
}

/// Loads the UCI `german.data` file.
pub fn load_german_credit(path: &Path) -> Result<ScoredDataset> {
    german_dataset(&parse_german_credit(&read_text(path)?)?)
}

/// Which members of the larger group survive equalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Truncation {
    /// The first N members in item order.
    #[default]
    FileOrder,
    /// The N members with the highest composite score; ties keep item order.
    TopComposite,
    /// N members chosen uniformly at random.
    Random { seed: u64 },
}

/// Shrinks the larger group to the size N of the smaller one. Scores are
/// untouched, the smaller group is kept whole and item order is preserved.
pub fn equalize_groups(dataset: &ScoredDataset, composite: &[f64], mode: Truncation) -> Result<ScoredDataset> {
    if composite.len() != dataset.len() {
        return Err(Error::Internal(format!(
            "composite has {} values for {} items",
            composite.len(),
            dataset.len()
        )));
    }
    let (na, nb) = (dataset.group_size(Side::A), dataset.group_size(Side::B));
    if na == nb {
        return Ok(dataset.clone());
    }
    let (larger, smaller) = if na > nb {
        (Side::A, Side::B)
    } else {
        (Side::B, Side::A)
    };
    let n = na.min(nb);
    let mut candidates = dataset.members(larger);
    match mode {
        Truncation::FileOrder => {}
        Truncation::TopComposite => {
            candidates.sort_by(|&x, &y| composite[y].total_cmp(&composite[x]).then(x.cmp(&y)));
        }
        Truncation::Random { seed } => {
            candidates.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        }
    }
    let mut keep: Vec<usize> = candidates[..n].to_vec();
    keep.extend(dataset.members(smaller));
    keep.sort_unstable();
    Ok(dataset.select(&keep)?)
}
