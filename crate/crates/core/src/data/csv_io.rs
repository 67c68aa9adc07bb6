//! CSV schema: `problem_id,split,y,f` with a header row. `split` is the
//! literal `labeled` or `unlabeled`; `y` may be empty on unlabeled rows.
//! An optional sidecar `problem_id,sigma2,tau2,gamma` carries known moments.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::data::{LabeledPair, ProblemData, SecondMoments};
use crate::error::Error;
use crate::Result;

/// Which side of a problem a row belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Labeled,
    Unlabeled,
}

/// One parsed data row. `y` is present on every labeled row and optionally on
/// unlabeled rows (benchmark inputs carry it everywhere).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataRow {
    pub split: Split,
    pub y: Option<f64>,
    pub f: f64,
}

/// All rows of one problem, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemTable {
    pub id: String,
    pub rows: Vec<DataRow>,
    /// Line number of the problem's first row, for error reporting.
    pub first_row: u64,
}

impl ProblemTable {
    /// Estimation view: labeled rows become pairs, unlabeled rows keep only
    /// their prediction (any y they carry is ignored here).
    pub fn to_problem_data(&self) -> Result<ProblemData> {
        let mut labeled = Vec::new();
        let mut unlabeled_preds = Vec::new();
        for row in &self.rows {
            match row.split {
                Split::Labeled => labeled.push(LabeledPair {
                    y: row.y.expect("labeled rows are validated at parse time"),
                    z: row.f,
                }),
                Split::Unlabeled => unlabeled_preds.push(row.f),
            }
        }
        if labeled.is_empty() {
            return Err(Error::EmptyProblemSide {
                problem: format!("{} (first row {})", self.id, self.first_row),
                kind: "labeled",
            });
        }
        if unlabeled_preds.is_empty() {
            return Err(Error::EmptyProblemSide {
                problem: format!("{} (first row {})", self.id, self.first_row),
                kind: "unlabeled",
            });
        }
        Ok(ProblemData {
            id: self.id.clone(),
            labeled,
            unlabeled_preds,
        })
    }

    /// All outcomes, if every row carries one. `what` names the caller in the
    /// error message.
    pub fn all_outcomes(&self, what: &'static str) -> Result<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| {
                r.y.ok_or_else(|| Error::MissingOutcomeForTruth {
                    problem: self.id.clone(),
                    what,
                })
            })
            .collect()
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn parse_field(row: u64, field: &'static str, raw: &str) -> Result<f64> {
    let v: f64 = raw.trim().parse().map_err(|_| Error::NonNumericField {
        row,
        field,
        value: raw.to_string(),
    })?;
    if !v.is_finite() {
        return Err(Error::NonFiniteField { row, field });
    }
    Ok(v)
}

fn read_tables_from(reader: impl Read) -> Result<Vec<ProblemTable>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);

    let headers = rdr.headers()?.clone();
    let col = |name: &'static str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or(Error::MissingColumn { column: name })
    };
    let (c_id, c_split, c_y, c_f) = (col("problem_id")?, col("split")?, col("y")?, col("f")?);

    let mut tables: Vec<ProblemTable> = Vec::new();
    let mut index: std::collections::HashMap<String, usize> = std::collections::HashMap::new();

    for record in rdr.records() {
        let record = record?;
        let row = record.position().map_or(0, |p| p.line());
        let get = |i: usize| record.get(i).unwrap_or("");

        let id = get(c_id).to_string();
        let split = match get(c_split).trim() {
            "labeled" => Split::Labeled,
            "unlabeled" => Split::Unlabeled,
            other => {
                return Err(Error::BadSplit {
                    row,
                    value: other.to_string(),
                })
            }
        };
        let y_raw = get(c_y);
        let y = if y_raw.trim().is_empty() {
            if split == Split::Labeled {
                return Err(Error::MissingOutcome { row, problem: id });
            }
            None
        } else {
            Some(parse_field(row, "y", y_raw)?)
        };
        let f = parse_field(row, "f", get(c_f))?;

        let slot = *index.entry(id.clone()).or_insert_with(|| {
            tables.push(ProblemTable {
                id,
                rows: Vec::new(),
                first_row: row,
            });
            tables.len() - 1
        });
        tables[slot].rows.push(DataRow { split, y, f });
    }
    Ok(tables)
}

/// Parse the full table view: every row kept, problems ordered by first
/// appearance. This is the benchmark-mode entry point.
pub fn read_tables(path: impl AsRef<Path>) -> Result<Vec<ProblemTable>> {
    read_tables_from(open(path.as_ref())?)
}

/// Parse the estimation view: one [`ProblemData`] per problem.
pub fn ingest_csv(path: impl AsRef<Path>) -> Result<Vec<ProblemData>> {
    read_tables(path)?
        .iter()
        .map(ProblemTable::to_problem_data)
        .collect()
}

fn fmt_opt(y: Option<f64>) -> String {
    y.map(|v| v.to_string()).unwrap_or_default()
}

/// Write problems in the schema above; labeled rows first, then unlabeled
/// rows with an empty `y`. Float formatting is shortest-roundtrip, so
/// `ingest_csv` recovers the exact values.
pub fn write_problems_csv(problems: &[ProblemData], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["problem_id", "split", "y", "f"])?;
    for p in problems {
        for l in &p.labeled {
            w.write_record([&p.id, "labeled", &l.y.to_string(), &l.z.to_string()])?;
        }
        for &z in &p.unlabeled_preds {
            w.write_record([&p.id, "unlabeled", "", &z.to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::Io {
        path: "<writer>".into(),
        source: e,
    })?;
    Ok(())
}

/// Write full tables, keeping each row's split tag and any y it carries.
pub fn write_tables_csv(tables: &[ProblemTable], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["problem_id", "split", "y", "f"])?;
    for t in tables {
        for r in &t.rows {
            let split = match r.split {
                Split::Labeled => "labeled",
                Split::Unlabeled => "unlabeled",
            };
            w.write_record([&t.id, split, &fmt_opt(r.y), &r.f.to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::Io {
        path: "<writer>".into(),
        source: e,
    })?;
    Ok(())
}

/// Sidecar of known moments: `problem_id,sigma2,tau2,gamma`.
pub fn read_moments_csv(path: impl AsRef<Path>) -> Result<Vec<(String, SecondMoments)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(open(path.as_ref())?);
    let headers = rdr.headers()?.clone();
    let col = |name: &'static str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or(Error::MissingColumn { column: name })
    };
    let (c_id, c_s, c_t, c_g) = (
        col("problem_id")?,
        col("sigma2")?,
        col("tau2")?,
        col("gamma")?,
    );
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let row = record.position().map_or(0, |p| p.line());
        let get = |i: usize| record.get(i).unwrap_or("");
        let moments = SecondMoments::known(
            parse_field(row, "sigma2", get(c_s))?,
            parse_field(row, "tau2", get(c_t))?,
            parse_field(row, "gamma", get(c_g))?,
        )?;
        out.push((get(c_id).to_string(), moments));
    }
    Ok(out)
}
