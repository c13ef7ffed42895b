//! Plain-text matrix format for cross-language reuse.
//!
//! Header line `rows cols`, then `rows * cols` whitespace-separated
//! row-major doubles; `#` starts a comment anywhere on a line.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

pub fn write_matrix<W: Write>(w: &mut W, m: &DenseMatrix) -> Result<()> {
    writeln!(w, "{} {}", m.rows(), m.cols())?;
    for i in 0..m.rows() {
        let row: Vec<String> = (0..m.cols()).map(|j| format!("{:e}", m[(i, j)])).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

pub fn matrix_to_string(m: &DenseMatrix) -> String {
    let mut buf = Vec::new();
    write_matrix(&mut buf, m).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("ascii output")
}

pub fn read_matrix<R: BufRead>(reader: R) -> Result<DenseMatrix> {
    let mut header: Option<(usize, usize)> = None;
    let mut data: Vec<f64> = Vec::new();

    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        if header.is_none() {
            let parse_dim = |tok: Option<&str>| -> Result<usize> {
                tok.ok_or_else(|| Error::Parse {
                    line: idx + 1,
                    message: "header needs `rows cols`".into(),
                })?
                .parse::<usize>()
                .map_err(|e| Error::Parse { line: idx + 1, message: format!("bad dimension: {e}") })
            };
            let rows = parse_dim(tokens.next())?;
            let cols = parse_dim(tokens.next())?;
            if rows == 0 || cols == 0 {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: "dimensions must be positive".into(),
                });
            }
            if let Some(extra) = tokens.next() {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("unexpected token `{extra}` after header"),
                });
            }
            header = Some((rows, cols));
            data.reserve(rows * cols);
            continue;
        }
        let (rows, cols) = header.unwrap();
        for tok in tokens {
            let v: f64 = tok.parse().map_err(|e| Error::Parse {
                line: idx + 1,
                message: format!("bad number `{tok}`: {e}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("non-finite entry `{tok}`"),
                });
            }
            data.push(v);
            if data.len() > rows * cols {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("more than {} entries", rows * cols),
                });
            }
        }
    }

    let (rows, cols) = header.ok_or(Error::Parse { line: 1, message: "empty matrix file".into() })?;
    if data.len() != rows * cols {
        return Err(Error::Parse {
            line: 0,
            message: format!("expected {} entries, found {}", rows * cols, data.len()),
        });
    }
    DenseMatrix::from_vec(rows, cols, data)
}

pub fn read_matrix_file<P: AsRef<Path>>(path: P) -> Result<DenseMatrix> {
    let file = std::fs::File::open(path)?;
    read_matrix(std::io::BufReader::new(file))
}

pub fn write_matrix_file<P: AsRef<Path>>(path: P, m: &DenseMatrix) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    write_matrix(&mut file, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery::random_dense;

    #[test]
    fn round_trip_is_bit_exact() {
        let m = random_dense(7, 99);
        let text = matrix_to_string(&m);
        let back = read_matrix(text.as_bytes()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = "# a matrix\n
            2 2  # header
            1.0 2.0
            # interlude
            3.0 4.0\n";
        let m = read_matrix(text.as_bytes()).unwrap();
        assert_eq!(m, DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap());
    }

    #[test]
    fn errors_name_the_line() {
        let text = "2 2\n1.0 2.0\n3.0 oops\n";
        match read_matrix(text.as_bytes()) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("oops"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_data_is_rejected() {
        let text = "2 2\n1.0 2.0 3.0\n";
        assert!(matches!(read_matrix(text.as_bytes()), Err(Error::Parse { .. })));
        let text = "2 2\n1 2 3 4 5\n";
        assert!(matches!(read_matrix(text.as_bytes()), Err(Error::Parse { .. })));
    }
}
