//! Plain-text matrix dumps: one `# name rows cols` header line per matrix,
//! followed by its rows, entries space-separated in row-major order.
//! Values are written in shortest round-trip form, so parsing is bit-exact.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub fn format_matrix(name: &str, m: &DMatrix<f64>) -> String {
    let mut out = format!("# {name} {} {}\n", m.nrows(), m.ncols());
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn format_matrices<'a>(items: impl IntoIterator<Item = (&'a str, &'a DMatrix<f64>)>) -> String {
    items.into_iter().map(|(name, m)| format_matrix(name, m)).collect()
}

/// Parse every matrix in a dump, in file order.
pub fn parse_matrices(text: &str) -> Result<Vec<(String, DMatrix<f64>)>> {
    let mut out = Vec::new();
    let mut lines = text.lines().filter(|l| !l.trim().is_empty()).peekable();
    while let Some(header) = lines.next() {
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 4 || parts[0] != "#" {
            return Err(Error::Input(format!("bad matrix header: {header:?}")));
        }
        let name = parts[1].to_string();
        let parse_dim = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::Input(format!("bad dimension {s:?} in header {header:?}")))
        };
        let (rows, cols) = (parse_dim(parts[2])?, parse_dim(parts[3])?);
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            let line = lines
                .next()
                .ok_or_else(|| Error::Input(format!("matrix {name}: missing row {r}")))?;
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| Error::Input(format!("matrix {name}: bad number {t:?}")))
                })
                .collect::<Result<_>>()?;
            if row.len() != cols {
                return Err(Error::Input(format!(
                    "matrix {name}: row {r} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            data.extend(row);
        }
        out.push((name, DMatrix::from_row_slice(rows, cols, &data)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_matrix_round_trips() {
        let m = DMatrix::<f64>::zeros(0, 3);
        let parsed = parse_matrices(&format_matrix("E", &m)).unwrap();
        assert_eq!(parsed[0].1.shape(), (0, 3));
    }

    #[test]
    fn malformed_input() {
        assert!(parse_matrices("# A 2 2\n1 2\n").is_err());
        assert!(parse_matrices("# A 1 2\n1 x\n").is_err());
        assert!(parse_matrices("A 1 1\n1\n").is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(rows in 1usize..5, cols in 1usize..5,
                                   seed in proptest::collection::vec(-1e6f64..1e6, 25)) {
            let m = DMatrix::from_fn(rows, cols, |i, j| seed[i * 5 + j] / 7.0);
            let text = format_matrices([("M", &m), ("T", &m.transpose())]);
            let parsed = parse_matrices(&text).unwrap();
            prop_assert_eq!(parsed.len(), 2);
            prop_assert_eq!(&parsed[0].1, &m);
            prop_assert_eq!(&parsed[1].1, &m.transpose());
        }
    }
}
