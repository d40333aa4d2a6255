//! Textual word-vector format: a `<count> <dim>` header, then one
//! `token v1 ... vd` line per row.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::model::EmbeddingModel;
use super::vocab::Vocab;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

pub fn model_to_text<T: Scalar>(m: &EmbeddingModel<T>) -> String {
    let mut out = String::with_capacity(m.len() * (m.dim() * 12 + 16));
    let _ = writeln!(out, "{} {}", m.len(), m.dim());
    for (i, token) in m.vocab().tokens().iter().enumerate() {
        out.push_str(token);
        for v in m.row(i) {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    out
}

pub fn save_model<T: Scalar>(m: &EmbeddingModel<T>, path: &Path) -> Result<()> {
    std::fs::write(path, model_to_text(m)).map_err(|e| Error::io(path, e))
}

/// Parse the textual format. Counts are not stored in the file, so rows get
/// synthetic counts that preserve file order (first row highest).
pub fn model_from_reader<T: Scalar, R: BufRead>(reader: R) -> Result<EmbeddingModel<T>> {
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(l) => l.map_err(|e| parse_err(1, e.to_string()))?,
        None => return Err(parse_err(1, "empty embedding file")),
    };
    let mut fields = header.split_whitespace();
    let (count, dim) = match (fields.next(), fields.next(), fields.next()) {
        (Some(c), Some(d), None) => (
            c.parse::<usize>().map_err(|_| parse_err(1, format!("bad row count {c:?}")))?,
            d.parse::<usize>().map_err(|_| parse_err(1, format!("bad dimension {d:?}")))?,
        ),
        _ => return Err(parse_err(1, format!("expected '<count> <dim>', got {header:?}"))),
    };
    if dim == 0 {
        return Err(parse_err(1, "dimension must be positive"));
    }
    let mut entries = Vec::with_capacity(count);
    let mut matrix = Vec::with_capacity(count * dim);
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line.map_err(|e| parse_err(lineno, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.trim_end().split(' ');
        let token = parts.next().unwrap_or_default();
        if token.is_empty() {
            return Err(parse_err(lineno, "missing token"));
        }
        let before = matrix.len();
        for p in parts.filter(|p| !p.is_empty()) {
            let v: T = p
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad number {p:?}")))?;
            matrix.push(v);
        }
        if matrix.len() - before != dim {
            return Err(parse_err(
                lineno,
                format!("expected {dim} values for {token:?}, got {}", matrix.len() - before),
            ));
        }
        entries.push(token.to_string());
    }
    if entries.len() != count {
        return Err(parse_err(1, format!("header declares {count} rows, file has {}", entries.len())));
    }
    let n = entries.len() as u64;
    let vocab = Vocab::from_ordered(entries.into_iter().enumerate().map(|(i, t)| (t, n - i as u64)).collect())?;
    EmbeddingModel::new(vocab, matrix, dim, 0, 0)
}

pub fn load_model<T: Scalar>(path: &Path) -> Result<EmbeddingModel<T>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    model_from_reader(BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_mismatch() {
        let r = model_from_reader::<f64, _>("3 2\na 1 2\nb 3 4\n".as_bytes());
        assert!(matches!(r, Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn short_row_names_line() {
        let r = model_from_reader::<f64, _>("2 2\na 1 2\nb 3\n".as_bytes());
        assert!(matches!(r, Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn round_trip_exact() {
        let m = model_from_reader::<f64, _>("2 3\nx 0.1 -2e-7 3\ny 1 2 3\n".as_bytes()).unwrap();
        let back = model_from_reader::<f64, _>(model_to_text(&m).as_bytes()).unwrap();
        assert_eq!(back.matrix(), m.matrix());
        assert_eq!(back.vocab().tokens(), ["x", "y"]);
    }
}
