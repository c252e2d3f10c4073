use std::io::Read;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};

/// A parsed data file: inputs, and the response when the header has `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub x: Vec<Vec<f64>>,
    pub y: Option<Vec<f64>>,
    pub dim: usize,
}

pub fn read_table_file(path: &Path, require_y: bool) -> Result<Table> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_table(file, require_y).with_context(|| format!("reading {}", path.display()))
}

/// Header `x1,…,xd[,y]`; lines starting with `#` are skipped.
pub fn read_table<R: Read>(src: R, require_y: bool) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(src);
    let header = rdr.headers().context("reading header")?.clone();
    if header.is_empty() || header.iter().all(str::is_empty) {
        bail!("empty file: expected a header row x1,...,xd,y");
    }
    let y_col = header.iter().position(|h| h == "y");
    if require_y && y_col.is_none() {
        bail!(
            "missing column \"y\" in header {:?}",
            header.iter().collect::<Vec<_>>()
        );
    }
    let mut dim = 0;
    for (i, name) in header.iter().enumerate() {
        if Some(i) == y_col {
            continue;
        }
        dim += 1;
        let want = format!("x{dim}");
        if name != want {
            bail!("header column {} is {name:?}, expected {want:?}", i + 1);
        }
    }
    if dim == 0 {
        bail!("header has no input columns");
    }

    let mut x = Vec::new();
    let mut y = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| match e.position() {
            Some(p) => anyhow!("line {}: {e}", p.line()),
            None => anyhow!(e),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let mut row = Vec::with_capacity(dim);
        for (i, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                anyhow!(
                    "line {line}, column {:?}: cannot parse {field:?} as a number",
                    &header[i]
                )
            })?;
            if !v.is_finite() {
                bail!(
                    "line {line}, column {:?}: value {field:?} is not finite",
                    &header[i]
                );
            }
            if Some(i) == y_col {
                y.push(v);
            } else {
                row.push(v);
            }
        }
        x.push(row);
    }
    Ok(Table {
        x,
        y: y_col.map(|_| y),
        dim,
    })
}

/// Prediction file: `#` header lines, then one `prediction` column.
pub fn write_predictions(header: &[String], values: &[f64]) -> String {
    let mut s = String::new();
    for h in header {
        s.push_str("# ");
        s.push_str(h);
        s.push('\n');
    }
    s.push_str("prediction\n");
    for v in values {
        s.push_str(&format!("{v:.16e}\n"));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_inputs_and_response() {
        let t = read_table("# note\nx1,x2,y\n1,2,3\n-0.5, 4e-1 ,0\n".as_bytes(), true).unwrap();
        assert_eq!(t.dim, 2);
        assert_eq!(t.x, vec![vec![1.0, 2.0], vec![-0.5, 0.4]]);
        assert_eq!(t.y, Some(vec![3.0, 0.0]));
    }

    #[test]
    fn missing_response_is_named() {
        let e = read_table("x1,x2\n1,2\n".as_bytes(), true).unwrap_err();
        assert!(format!("{e:#}").contains("\"y\""));
        let t = read_table("x1,x2\n1,2\n".as_bytes(), false).unwrap();
        assert_eq!(t.y, None);
    }

    #[test]
    fn bad_cells_report_line_numbers() {
        let e = read_table("x1,y\n1,2\n3,abc\n".as_bytes(), true).unwrap_err();
        let msg = format!("{e:#}");
        assert!(msg.contains("line 3") && msg.contains("abc"), "{msg}");
        let e = read_table("x1,y\n1,2\n3\n".as_bytes(), true).unwrap_err();
        assert!(format!("{e:#}").contains("line 3"));
        assert!(read_table("x1,y\nnan,1\n".as_bytes(), true).is_err());
    }

    #[test]
    fn header_names_are_checked() {
        let e = read_table("x1,x3,y\n".as_bytes(), true).unwrap_err();
        assert!(format!("{e:#}").contains("\"x2\""));
        assert!(read_table("".as_bytes(), false).is_err());
    }

    #[test]
    fn predictions_round_trip() {
        let v = [0.1, -1.0 / 3.0, 1e-300];
        let text = write_predictions(&["seed=1".into()], &v);
        let back: Vec<f64> = text
            .lines()
            .filter(|l| !l.starts_with('#'))
            .skip(1)
            .map(|l| l.parse().unwrap())
            .collect();
        assert_eq!(back, v);
    }
}
