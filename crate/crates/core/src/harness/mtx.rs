//! Matrix Market coordinate files for skew and shifted skew operators, and
//! dense vectors in array format or as plain whitespace-separated numbers.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::operators::{DenseVector, SparseSkewMatrix, SssOperator};

/// Contents of a matrix file: the skew part and the shift, if any was given
/// (a constant diagonal in a general file, or an `alpha` comment line).
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFile {
    pub skew: SparseSkewMatrix,
    pub alpha: Option<f64>,
}

impl MatrixFile {
    pub fn into_operator(self, alpha_override: Option<f64>) -> SssOperator {
        SssOperator::new(alpha_override.or(self.alpha).unwrap_or(0.0), self.skew)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    SkewSymmetric,
}

const ALPHA_PREFIX: &str = "%% alpha =";

/// Writes the strict lower triangle of `s` as `real skew-symmetric`, with an
/// `%% alpha = <v>` line when `alpha` is given.
pub fn write_skew_matrix_market(path: &Path, s: &SparseSkewMatrix, alpha: Option<f64>) -> Result<()> {
    let lower: Vec<_> = s.triplets().filter(|(i, j, _)| i > j).collect();
    let mut out = String::from("%%MatrixMarket matrix coordinate real skew-symmetric\n");
    if let Some(a) = alpha {
        let _ = writeln!(out, "{ALPHA_PREFIX} {a:e}");
    }
    let _ = writeln!(out, "{} {} {}", s.n(), s.n(), lower.len());
    for (i, j, v) in lower {
        let _ = writeln!(out, "{} {} {v:e}", i + 1, j + 1);
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Writes `αI + S` as `real general` with the shift on the diagonal.
pub fn write_general_matrix_market(path: &Path, a: &SssOperator) -> Result<()> {
    let n = a.dim();
    let mut entries: Vec<(usize, usize, f64)> = a.skew().triplets().collect();
    if a.alpha() != 0.0 {
        entries.extend((0..n).map(|i| (i, i, a.alpha())));
    }
    entries.sort_by_key(|&(i, j, _)| (j, i));
    let mut out = String::from("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(out, "{n} {n} {}", entries.len());
    for (i, j, v) in entries {
        let _ = writeln!(out, "{} {} {v:e}", i + 1, j + 1);
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads a coordinate file. `real general` files must have the form
/// `αI + S`: a constant diagonal and a skew off-diagonal part, verified to
/// `1e-13·max|entry|`.
pub fn read_matrix_market(path: &Path) -> Result<MatrixFile> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let perr = |line: usize, msg: String| Error::Parse { path: path.to_path_buf(), line, msg };
    let verr = |msg: String| Error::Validation { path: path.to_path_buf(), msg };
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l));

    let (_, header) = lines.next().ok_or_else(|| perr(1, "empty file".into()))?;
    let fields: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(perr(1, format!("not a Matrix Market header: {header:?}")));
    }
    if fields[2] != "coordinate" {
        return Err(perr(1, format!("unsupported format {:?} (expected coordinate)", fields[2])));
    }
    if fields[3] != "real" && fields[3] != "integer" {
        return Err(perr(1, format!("unsupported field {:?}", fields[3])));
    }
    let symmetry = match fields[4].as_str() {
        "general" => Symmetry::General,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        other => return Err(perr(1, format!("unsupported symmetry {other:?}"))),
    };

    let mut alpha_comment = None;
    let mut size = None;
    let mut entries = Vec::new();
    for (ln, line) in lines {
        let t = line.trim();
        if let Some(rest) = t.strip_prefix(ALPHA_PREFIX) {
            let v: f64 = rest.trim().parse().map_err(|_| perr(ln, format!("bad alpha value {:?}", rest.trim())))?;
            alpha_comment = Some(v);
            continue;
        }
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let tok: Vec<&str> = t.split_whitespace().collect();
        match size {
            None => {
                if tok.len() != 3 {
                    return Err(perr(ln, "size line must have three fields".into()));
                }
                let nums: Vec<usize> = tok
                    .iter()
                    .map(|s| s.parse().map_err(|_| perr(ln, format!("bad integer {s:?}"))))
                    .collect::<Result<_>>()?;
                if nums[0] != nums[1] {
                    return Err(verr(format!("matrix is not square ({}x{})", nums[0], nums[1])));
                }
                if nums[0] == 0 {
                    return Err(perr(ln, "dimension must be positive".into()));
                }
                size = Some((nums[0], nums[2]));
            }
            Some((n, _)) => {
                if tok.len() != 3 {
                    return Err(perr(ln, "entry line must have three fields".into()));
                }
                let i: usize = tok[0].parse().map_err(|_| perr(ln, format!("bad row index {:?}", tok[0])))?;
                let j: usize = tok[1].parse().map_err(|_| perr(ln, format!("bad column index {:?}", tok[1])))?;
                let v: f64 = tok[2].parse().map_err(|_| perr(ln, format!("bad value {:?}", tok[2])))?;
                if i == 0 || j == 0 || i > n || j > n {
                    return Err(perr(ln, format!("index ({i}, {j}) out of range for n = {n}")));
                }
                if !v.is_finite() {
                    return Err(perr(ln, format!("value {v} is not finite")));
                }
                if symmetry == Symmetry::SkewSymmetric && i <= j {
                    return Err(perr(ln, format!("skew-symmetric files store the strict lower triangle, got ({i}, {j})")));
                }
                entries.push((i - 1, j - 1, v));
            }
        }
    }
    let (n, nnz) = size.ok_or_else(|| perr(text.lines().count().max(1), "missing size line".into()))?;
    if entries.len() != nnz {
        return Err(perr(
            text.lines().count(),
            format!("expected {nnz} entries, found {}", entries.len()),
        ));
    }

    match symmetry {
        Symmetry::SkewSymmetric => {
            let skew = SparseSkewMatrix::from_strict_triangle(n, &entries)?;
            Ok(MatrixFile { skew, alpha: alpha_comment })
        }
        Symmetry::General => {
            let mut diag = vec![0.0; n];
            let mut off = Vec::with_capacity(entries.len());
            for (i, j, v) in entries {
                if i == j {
                    diag[i] += v;
                } else {
                    off.push((i, j, v));
                }
            }
            let shift = diag[0];
            if let Some(k) = diag.iter().position(|&d| d != shift) {
                return Err(verr(format!(
                    "diagonal is not constant (entry {} is {}, entry 1 is {shift})",
                    k + 1,
                    diag[k]
                )));
            }
            let scale = off.iter().map(|e| e.2.abs()).fold(0.0, f64::max);
            let skew = SparseSkewMatrix::from_triplets(n, &off, 1e-13 * scale)?;
            let alpha = match alpha_comment {
                Some(c) if shift != 0.0 && c != shift => {
                    return Err(verr(format!(
                        "alpha comment {c} disagrees with the diagonal {shift}"
                    )))
                }
                Some(c) => Some(c),
                None => Some(shift),
            };
            Ok(MatrixFile { skew, alpha })
        }
    }
}

/// Reads a vector: a Matrix Market `array` file with one column, or plain
/// numbers separated by whitespace (lines starting with `%` or `#` skipped).
pub fn read_vector(path: &Path) -> Result<DenseVector> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let perr = |line: usize, msg: String| Error::Parse { path: path.to_path_buf(), line, msg };
    let mut values = Vec::new();
    let mut expected = None;
    let mut is_mm = false;
    for (k, line) in text.lines().enumerate() {
        let ln = k + 1;
        let t = line.trim();
        if k == 0 && t.to_ascii_lowercase().starts_with("%%matrixmarket") {
            let f: Vec<String> = t.split_whitespace().map(str::to_ascii_lowercase).collect();
            if f.len() < 3 || f[2] != "array" {
                return Err(perr(ln, "vector files must use the array format".into()));
            }
            is_mm = true;
            continue;
        }
        if t.is_empty() || t.starts_with('%') || t.starts_with('#') {
            continue;
        }
        if is_mm && expected.is_none() {
            let dims: Vec<usize> = t
                .split_whitespace()
                .map(|s| s.parse().map_err(|_| perr(ln, format!("bad size field {s:?}"))))
                .collect::<Result<_>>()?;
            if dims.len() != 2 || dims[1] != 1 {
                return Err(perr(ln, "array size line must be `<n> 1`".into()));
            }
            expected = Some(dims[0]);
            continue;
        }
        for s in t.split_whitespace() {
            let v: f64 = s.parse().map_err(|_| perr(ln, format!("bad value {s:?}")))?;
            if !v.is_finite() {
                return Err(perr(ln, format!("value {v} is not finite")));
            }
            values.push(v);
        }
    }
    if let Some(n) = expected {
        if values.len() != n {
            return Err(perr(text.lines().count(), format!("expected {n} values, found {}", values.len())));
        }
    }
    if values.is_empty() {
        return Err(perr(1, "no values".into()));
    }
    DenseVector::new(values)
}

/// Writes a vector as a one-column Matrix Market array.
pub fn write_vector(path: &Path, v: &[f64]) -> Result<()> {
    let mut out = String::from("%%MatrixMarket matrix array real general\n");
    let _ = writeln!(out, "{} 1", v.len());
    for x in v {
        let _ = writeln!(out, "{x:e}");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{advection_matrix, AdvectionConfig};

    #[test]
    fn skew_round_trip_with_alpha() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.mtx");
        let s = advection_matrix(&AdvectionConfig::new(2, 2, 2.0, 0.0, 0)).unwrap();
        write_skew_matrix_market(&p, &s, Some(2.5)).unwrap();
        let m = read_matrix_market(&p).unwrap();
        assert_eq!(m.skew, s);
        assert_eq!(m.alpha, Some(2.5));
    }

    #[test]
    fn general_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.mtx");
        let s = advection_matrix(&AdvectionConfig::new(3, 2, 0.7, 0.0, 0)).unwrap();
        let a = SssOperator::new(1e-3, s.clone());
        write_general_matrix_market(&p, &a).unwrap();
        let m = read_matrix_market(&p).unwrap();
        assert_eq!(m.skew, s);
        assert_eq!(m.alpha, Some(1e-3));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.mtx");
        fs::write(&p, "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 x 1.0\n").unwrap();
        match read_matrix_market(&p) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        fs::write(&p, "%%MatrixMarket matrix coordinate real general\n2 3 0\n").unwrap();
        assert!(matches!(read_matrix_market(&p), Err(Error::Validation { .. })));
        fs::write(&p, "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 2 1.0\n2 1 1.0\n").unwrap();
        assert!(matches!(read_matrix_market(&p), Err(Error::NotSkew { .. })));
    }

    #[test]
    fn vector_formats() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("b.mtx");
        write_vector(&p, &[1.0, -0.25, 3e-17]).unwrap();
        assert_eq!(read_vector(&p).unwrap().as_slice(), &[1.0, -0.25, 3e-17]);
        let q = dir.path().join("b.txt");
        fs::write(&q, "# rhs\n1 2\n3\n").unwrap();
        assert_eq!(read_vector(&q).unwrap().as_slice(), &[1.0, 2.0, 3.0]);
    }
}
