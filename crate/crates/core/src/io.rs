//! File formats: matrices and vectors as CSV (dims header row) or
//! column-major binary, and the per-iteration trace as CSV.
//!
//! CSV numbers use Rust's shortest round-trip formatting, so writing and
//! re-reading is lossless and byte-stable across runs.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::solver::SolveTrace;

/// Magic prefixes of the binary matrix and vector formats.
const MATRIX_MAGIC: &[u8; 4] = b"AITB";
const VECTOR_MAGIC: &[u8; 4] = b"AITV";

fn parse_f64(token: &str, context: &str) -> Result<f64> {
    token
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("{context}: invalid number {token:?}")))
}

/// Writes a matrix as CSV: a `rows,cols` header line followed by one line
/// per row.
pub fn write_matrix_csv(path: &Path, a: &DMatrix<f64>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{},{}", a.nrows(), a.ncols())?;
    for i in 0..a.nrows() {
        let row: Vec<String> = (0..a.ncols()).map(|j| format!("{}", a[(i, j)])).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let mut lines = BufReader::new(File::open(path)?).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty matrix file".into()))??;
    let dims: Vec<&str> = header.split(',').collect();
    if dims.len() != 2 {
        return Err(Error::Parse(format!(
            "matrix header must be 'rows,cols', got {header:?}"
        )));
    }
    let rows: usize = dims[0]
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("invalid row count {:?}", dims[0])))?;
    let cols: usize = dims[1]
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("invalid column count {:?}", dims[1])))?;
    let mut a = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        let line = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("matrix ends early at row {i}")))??;
        let values: Vec<&str> = line.split(',').collect();
        if values.len() != cols {
            return Err(Error::Parse(format!(
                "row {i} has {} entries, expected {cols}",
                values.len()
            )));
        }
        for (j, token) in values.iter().enumerate() {
            a[(i, j)] = parse_f64(token, &format!("matrix entry ({i},{j})"))?;
        }
    }
    Ok(a)
}

/// Binary layout: magic, u64 rows, u64 cols, then `rows*cols` little-endian
/// f64 values in column-major order.
pub fn write_matrix_bin(path: &Path, a: &DMatrix<f64>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MATRIX_MAGIC)?;
    w.write_all(&(a.nrows() as u64).to_le_bytes())?;
    w.write_all(&(a.ncols() as u64).to_le_bytes())?;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            w.write_all(&a[(i, j)].to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_matrix_bin(path: &Path) -> Result<DMatrix<f64>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MATRIX_MAGIC {
        return Err(Error::Parse("not a binary matrix file".into()));
    }
    let mut word = [0u8; 8];
    r.read_exact(&mut word)?;
    let rows = u64::from_le_bytes(word) as usize;
    r.read_exact(&mut word)?;
    let cols = u64::from_le_bytes(word) as usize;
    let mut a = DMatrix::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            r.read_exact(&mut word)?;
            a[(i, j)] = f64::from_le_bytes(word);
        }
    }
    Ok(a)
}

/// Reads `.bin` as binary and anything else as CSV.
pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    if path.extension().is_some_and(|e| e == "bin") {
        read_matrix_bin(path)
    } else {
        read_matrix_csv(path)
    }
}

pub fn write_matrix(path: &Path, a: &DMatrix<f64>) -> Result<()> {
    if path.extension().is_some_and(|e| e == "bin") {
        write_matrix_bin(path, a)
    } else {
        write_matrix_csv(path, a)
    }
}

/// Vector CSV: a length header line followed by one value per line.
pub fn write_vector_csv(path: &Path, v: &DVector<f64>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", v.len())?;
    for value in v.iter() {
        writeln!(w, "{value}")?;
    }
    Ok(())
}

pub fn read_vector_csv(path: &Path) -> Result<DVector<f64>> {
    let mut lines = BufReader::new(File::open(path)?).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty vector file".into()))??;
    let len: usize = header
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("invalid vector length {header:?}")))?;
    let mut v = DVector::zeros(len);
    for i in 0..len {
        let line = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("vector ends early at entry {i}")))??;
        v[i] = parse_f64(&line, &format!("vector entry {i}"))?;
    }
    Ok(v)
}

/// Binary vector: magic, u64 length, then little-endian f64 values.
pub fn write_vector_bin(path: &Path, v: &DVector<f64>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(VECTOR_MAGIC)?;
    w.write_all(&(v.len() as u64).to_le_bytes())?;
    for value in v.iter() {
        w.write_all(&value.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_vector_bin(path: &Path) -> Result<DVector<f64>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != VECTOR_MAGIC {
        return Err(Error::Parse("not a binary vector file".into()));
    }
    let mut word = [0u8; 8];
    r.read_exact(&mut word)?;
    let len = u64::from_le_bytes(word) as usize;
    let mut v = DVector::zeros(len);
    for i in 0..len {
        r.read_exact(&mut word)?;
        v[i] = f64::from_le_bytes(word);
    }
    Ok(v)
}

/// Reads `.bin` as binary and anything else as CSV.
pub fn read_vector(path: &Path) -> Result<DVector<f64>> {
    if path.extension().is_some_and(|e| e == "bin") {
        read_vector_bin(path)
    } else {
        read_vector_csv(path)
    }
}

pub fn write_vector(path: &Path, v: &DVector<f64>) -> Result<()> {
    if path.extension().is_some_and(|e| e == "bin") {
        write_vector_bin(path, v)
    } else {
        write_vector_csv(path, v)
    }
}

/// Trace CSV with columns `t,tau,step,residual_l2,err_l1,err_l2,err_linf`;
/// the error columns stay empty when no ground truth was configured.
pub fn write_trace_csv(path: &Path, trace: &SolveTrace) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "t,tau,step,residual_l2,err_l1,err_l2,err_linf")?;
    for record in &trace.records {
        let errors = match record.errors {
            Some((e1, e2, einf)) => format!("{e1},{e2},{einf}"),
            None => ",,".to_string(),
        };
        writeln!(
            w,
            "{},{},{},{},{}",
            record.t, record.tau, record.step, record.residual_l2, errors
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::TraceRecord;
    use proptest::prelude::*;
    use tempfile::tempdir;

    #[test]
    fn matrix_csv_roundtrip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("a.csv");
        let a = DMatrix::from_row_slice(2, 3, &[1.0, -0.5, 3.25e-7, 0.0, 2.0, -1e12]);
        write_matrix_csv(&path, &a).unwrap();
        assert_eq!(read_matrix_csv(&path).unwrap(), a);
        assert_eq!(read_matrix(&path).unwrap(), a);
    }

    #[test]
    fn matrix_bin_roundtrip_is_bit_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("a.bin");
        let a = DMatrix::from_row_slice(3, 2, &[1.0, f64::MIN_POSITIVE, -0.1, 1e300, 0.3, -0.0]);
        write_matrix_bin(&path, &a).unwrap();
        let back = read_matrix(&path).unwrap();
        for (x, y) in a.iter().zip(back.iter()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn vector_roundtrip_and_errors() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("v.csv");
        let v = DVector::from_vec(vec![0.1, -2.0, 1e-300]);
        write_vector_csv(&path, &v).unwrap();
        assert_eq!(read_vector_csv(&path).unwrap(), v);

        let bin = dir.path().join("v.bin");
        write_vector(&bin, &v).unwrap();
        let back = read_vector(&bin).unwrap();
        for (x, y) in v.iter().zip(back.iter()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        // matrix and vector binaries are not interchangeable
        let m = dir.path().join("m.bin");
        write_matrix_bin(&m, &DMatrix::from_row_slice(1, 3, &[1.0, 2.0, 3.0])).unwrap();
        assert!(read_vector_bin(&m).is_err());

        std::fs::write(&path, "3\n1.0\nnot-a-number\n0\n").unwrap();
        assert!(read_vector_csv(&path).is_err());
        std::fs::write(&path, "").unwrap();
        assert!(read_vector_csv(&path).is_err());
    }

    #[test]
    fn malformed_matrix_files_are_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "2\n1,2\n").unwrap();
        assert!(read_matrix_csv(&path).is_err());
        std::fs::write(&path, "2,2\n1,2\n3\n").unwrap();
        assert!(read_matrix_csv(&path).is_err());
        std::fs::write(&path, "2,2\n1,2\n").unwrap();
        assert!(read_matrix_csv(&path).is_err());
    }

    #[test]
    fn trace_csv_shape() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        let trace = SolveTrace {
            records: vec![
                TraceRecord {
                    t: 1,
                    tau: 0.5,
                    step: 1.0,
                    residual_l2: 0.25,
                    support: vec![0, 3],
                    errors: None,
                },
                TraceRecord {
                    t: 2,
                    tau: 0.25,
                    step: 1.0,
                    residual_l2: 0.125,
                    support: vec![0, 3],
                    errors: Some((0.3, 0.2, 0.1)),
                },
            ],
        };
        write_trace_csv(&path, &trace).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,tau,step,residual_l2,err_l1,err_l2,err_linf");
        assert_eq!(lines[1], "1,0.5,1,0.25,,,");
        assert_eq!(lines[2], "2,0.25,1,0.125,0.3,0.2,0.1");
    }

    proptest! {
        #[test]
        fn csv_roundtrip_preserves_values(values in proptest::collection::vec(-1e6f64..1e6, 1..40)) {
            let dir = tempdir().unwrap();
            let path = dir.path().join("m.csv");
            let rows = values.len();
            let a = DMatrix::from_fn(rows, 2, |i, j| if j == 0 { values[i] } else { values[i] * 0.5 });
            write_matrix_csv(&path, &a).unwrap();
            let back = read_matrix_csv(&path).unwrap();
            for (x, y) in a.iter().zip(back.iter()) {
                prop_assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }
}
