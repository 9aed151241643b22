//! MatrixMarket coordinate files and `row,col,value` CSV triplets.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Rating, SparseRatings};
use crate::{Error, Result};

pub const MATRIX_MARKET_HEADER: &str = "%%MatrixMarket matrix coordinate real general";

pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<SparseRatings> {
    let path = path.as_ref();
    let file = File::open(path)?;
    read_matrix_market(BufReader::new(file), path)
}

/// Parses a coordinate/real/general MatrixMarket stream. `origin` only labels
/// error messages.
pub fn read_matrix_market<R: BufRead>(reader: R, origin: &Path) -> Result<SparseRatings> {
    let mut lines = reader.lines().enumerate();
    let err = |line: usize, msg: String| Error::parse(origin, line, msg);

    let (_, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let header = header?;
    let tokens: Vec<String> = header
        .split_whitespace()
        .map(str::to_ascii_lowercase)
        .collect();
    let ok = tokens.len() == 5
        && tokens[0] == "%%matrixmarket"
        && tokens[1] == "matrix"
        && tokens[2] == "coordinate"
        && (tokens[3] == "real" || tokens[3] == "integer")
        && tokens[4] == "general";
    if !ok {
        return Err(err(1, format!("unsupported header {header:?}")));
    }

    let mut size: Option<(usize, usize, usize)> = None;
    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    let mut last_line = 1;
    for (idx, line) in lines {
        let line_no = idx + 1;
        last_line = line_no;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(err(line_no, "size line needs 3 fields".into()));
                }
                let parse = |s: &str| {
                    s.parse::<usize>()
                        .map_err(|_| err(line_no, format!("bad size field {s:?}")))
                };
                let dims = (parse(fields[0])?, parse(fields[1])?, parse(fields[2])?);
                entries.reserve(dims.2);
                size = Some(dims);
            }
            Some((n_rows, n_cols, _)) => {
                if fields.len() != 3 {
                    return Err(err(line_no, "entry line needs 3 fields".into()));
                }
                let index = |s: &str, bound: usize| -> Result<usize> {
                    let v = s
                        .parse::<usize>()
                        .map_err(|_| err(line_no, format!("bad index {s:?}")))?;
                    if v == 0 || v > bound {
                        return Err(err(line_no, format!("index {v} outside 1..={bound}")));
                    }
                    Ok(v - 1)
                };
                let row = index(fields[0], n_rows)?;
                let col = index(fields[1], n_cols)?;
                let value = fields[2]
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| err(line_no, format!("bad value {:?}", fields[2])))?;
                if !seen.insert((row, col)) {
                    return Err(err(
                        line_no,
                        format!("duplicate entry ({}, {})", row + 1, col + 1),
                    ));
                }
                entries.push(Rating { row, col, value });
            }
        }
    }
    let (n_rows, n_cols, nnz) = size.ok_or_else(|| err(last_line, "missing size line".into()))?;
    if entries.len() != nnz {
        return Err(err(
            last_line,
            format!("size line declares {nnz} entries, found {}", entries.len()),
        ));
    }
    SparseRatings::new(n_rows, n_cols, entries, None)
}

pub fn write_matrix_market(data: &SparseRatings, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{MATRIX_MARKET_HEADER}")?;
    writeln!(w, "{} {} {}", data.n_rows(), data.n_cols(), data.len())?;
    for r in data.entries() {
        writeln!(w, "{} {} {}", r.row + 1, r.col + 1, r.value)?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_csv_triplets(path: impl AsRef<Path>, has_header: bool) -> Result<SparseRatings> {
    load_csv_triplets_with_dims(path, has_header, None)
}

/// As [`load_csv_triplets`], with optionally declared dimensions; otherwise
/// each dimension is the largest index seen plus one.
pub fn load_csv_triplets_with_dims(
    path: impl AsRef<Path>,
    has_header: bool,
    dims: Option<(usize, usize)>,
) -> Result<SparseRatings> {
    let path = path.as_ref();
    read_csv_triplets(File::open(path)?, path, has_header, dims)
}

pub fn read_csv_triplets<R: Read>(
    reader: R,
    origin: &Path,
    has_header: bool,
    dims: Option<(usize, usize)>,
) -> Result<SparseRatings> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    let (mut max_row, mut max_col) = (None::<usize>, None::<usize>);
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let err = |msg: String| Error::parse(origin, line, msg);
        if record.len() != 3 {
            return Err(err(format!("expected 3 fields, found {}", record.len())));
        }
        let index = |s: &str| -> Result<usize> {
            let v = s
                .parse::<i64>()
                .map_err(|_| err(format!("non-numeric index {s:?}")))?;
            usize::try_from(v).map_err(|_| err(format!("negative index {v}")))
        };
        let row = index(&record[0])?;
        let col = index(&record[1])?;
        let value = record[2]
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| err(format!("non-numeric value {:?}", &record[2])))?;
        if let Some((n_rows, n_cols)) = dims {
            if row >= n_rows || col >= n_cols {
                return Err(err(format!(
                    "({row}, {col}) outside declared {n_rows}x{n_cols}"
                )));
            }
        }
        if !seen.insert((row, col)) {
            return Err(err(format!("duplicate entry ({row}, {col})")));
        }
        max_row = max_row.max(Some(row));
        max_col = max_col.max(Some(col));
        entries.push(Rating { row, col, value });
    }
    let (n_rows, n_cols) =
        dims.unwrap_or((max_row.map_or(0, |r| r + 1), max_col.map_or(0, |c| c + 1)));
    SparseRatings::new(n_rows, n_cols, entries, None)
}

pub fn write_csv_triplets(
    data: &SparseRatings,
    path: impl AsRef<Path>,
    header: bool,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    if header {
        writeln!(w, "row,col,value")?;
    }
    for r in data.entries() {
        writeln!(w, "{},{},{}", r.row, r.col, r.value)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn mm(text: &str) -> Result<SparseRatings> {
        read_matrix_market(Cursor::new(text), Path::new("test.mtx"))
    }

    fn csv(text: &str, header: bool) -> Result<SparseRatings> {
        read_csv_triplets(Cursor::new(text), Path::new("test.csv"), header, None)
    }

    #[test]
    fn matrix_market_converts_to_zero_based() {
        let r = mm(
            "%%MatrixMarket matrix coordinate real general\n% comment\n3 4 2\n1 1 5.0\n3 4 1.0\n",
        )
        .unwrap();
        assert_eq!((r.n_rows(), r.n_cols()), (3, 4));
        let cells: Vec<_> = r.entries().iter().map(Rating::cell).collect();
        assert_eq!(cells, vec![(0, 0), (2, 3)]);
        assert_eq!(r.entries()[0].value, 5.0);
    }

    #[test]
    fn matrix_market_empty() {
        let r = mm("%%MatrixMarket matrix coordinate real general\n2 2 0\n").unwrap();
        assert!(r.is_empty());
        assert_eq!((r.n_rows(), r.n_cols()), (2, 2));
    }

    fn parse_line(e: Error) -> usize {
        match e {
            Error::Parse { line, .. } => line,
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn matrix_market_errors_name_the_line() {
        let bad_header = mm("%%MatrixMarket matrix array real general\n1 1\n1\n").unwrap_err();
        assert_eq!(parse_line(bad_header), 1);
        let symmetric = mm("%%MatrixMarket matrix coordinate real symmetric\n1 1 0\n").unwrap_err();
        assert_eq!(parse_line(symmetric), 1);
        let oob =
            mm("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n3 1 1\n").unwrap_err();
        assert_eq!(parse_line(oob), 4);
        let dup = mm("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n\n1 1 2\n")
            .unwrap_err();
        assert_eq!(parse_line(dup), 5);
        let count =
            mm("%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 1\n").unwrap_err();
        assert!(matches!(count, Error::Parse { .. }));
    }

    #[test]
    fn csv_infers_dimensions() {
        let r = csv("0,0,4.0\n1,2,3.0", false).unwrap();
        assert_eq!((r.n_rows(), r.n_cols(), r.len()), (2, 3, 2));
    }

    #[test]
    fn csv_with_header() {
        let r = csv("row,col,value\n0,0,4.0\n", true).unwrap();
        assert_eq!(r.len(), 1);
    }

    #[test]
    fn csv_errors() {
        assert_eq!(parse_line(csv("0,0,1\n0,0,2\n", false).unwrap_err()), 2);
        assert_eq!(parse_line(csv("0,0,1\nx,0,2\n", false).unwrap_err()), 2);
        assert_eq!(parse_line(csv("0,-1,1\n", false).unwrap_err()), 1);
        assert_eq!(parse_line(csv("0,1,abc\n", false).unwrap_err()), 1);
    }

    #[test]
    fn csv_line_count() {
        let n = 100_000;
        let mut text = String::with_capacity(n * 16);
        for k in 0..n {
            text.push_str(&format!("{},{},{}\n", k / 400, k % 400, 1 + k % 5));
        }
        let expected_lines = text.lines().count();
        let r = csv(&text, false).unwrap();
        assert_eq!(r.len(), expected_lines);
        assert_eq!(r.len(), 100_000);
    }
}
