//! CSV input and fixed-format output helpers.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Reads a two-column numeric CSV with a header row. Lines starting with `#`
/// are skipped.
pub fn read_two_columns(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let rows = read_numeric_rows(path, 2)?;
    Ok((rows.iter().map(|r| r[0]).collect(), rows.iter().map(|r| r[1]).collect()))
}

/// Reads rows of at least `min_cols` numbers from a CSV with a header row.
pub fn read_numeric_rows(path: &Path, min_cols: usize) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        if rec.len() < min_cols {
            return Err(Error::Config(format!(
                "{}: row {} has {} columns, expected at least {min_cols}",
                path.display(),
                i + 1,
                rec.len()
            )));
        }
        let mut row = Vec::with_capacity(rec.len());
        for field in rec.iter() {
            if field.is_empty() {
                continue;
            }
            let v: f64 = field.parse().map_err(|_| {
                Error::Config(format!("{}: row {}: `{field}` is not a number", path.display(), i + 1))
            })?;
            row.push(v);
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Fixed scientific formatting used in every data file.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.12e}")
}

/// Renders a CSV table: `# key=value ...` metadata line, header, rows.
pub fn render_csv(meta: &[(String, String)], header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    if !meta.is_empty() {
        out.push('#');
        for (k, v) in meta {
            let _ = write!(out, " {k}={v}");
        }
        out.push('\n');
    }
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
