//! Headerless numeric CSV: one row per sample, every value written with 17
//! significant digits so that reading a written file is bitwise exact.
//! Infinities (the no-solution sentinel) are written as `inf` / `-inf`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use jacobnet_core::Tensor;

use crate::error::{Error, Result};

pub fn format_value(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.16e}")
    }
}

pub fn write_matrix<W: Write>(out: W, m: &Tensor) -> std::io::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    let mut fields: Vec<String> = Vec::with_capacity(m.cols());
    for row in m.iter_rows() {
        fields.clear();
        fields.extend(row.iter().map(|&v| format_value(v)));
        w.write_record(&fields)?;
    }
    w.flush()
}

/// Parses a matrix. With `cols` set, every row must have that many fields;
/// otherwise the first row fixes the width.
pub fn read_matrix<R: Read>(input: R, cols: Option<usize>, path: &Path) -> Result<Tensor> {
    let malformed = |row: usize, reason: String| Error::MalformedRow {
        path: path.to_path_buf(),
        row,
        reason,
    };
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut width = cols;
    let mut data = Vec::new();
    let mut rows = 0;
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| malformed(i, e.to_string()))?;
        let w = *width.get_or_insert(rec.len());
        if rec.len() != w {
            return Err(malformed(i, format!("expected {w} columns, found {}", rec.len())));
        }
        for field in rec.iter() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| malformed(i, format!("`{field}` is not a number")))?;
            data.push(v);
        }
        rows += 1;
    }
    Ok(Tensor::matrix(rows, width.unwrap_or(0), data)?)
}

pub fn write_matrix_file(path: &Path, m: &Tensor) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_matrix(BufWriter::new(f), m).map_err(|e| Error::io(path, e))
}

/// Reads a matrix file; a missing file is an input error, not an IO failure.
pub fn read_matrix_file(path: &Path, cols: Option<usize>) -> Result<Tensor> {
    let f = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(Error::MissingInput(path.to_path_buf())),
        Err(e) => return Err(Error::io(path, e)),
    };
    read_matrix(BufReader::new(f), cols, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn round_trip(m: &Tensor) -> Tensor {
        let mut buf = Vec::new();
        write_matrix(&mut buf, m).unwrap();
        read_matrix(buf.as_slice(), Some(m.cols()), Path::new("mem")).unwrap()
    }

    #[test]
    fn extreme_values_survive() {
        let vals = vec![
            0.1,
            -0.0,
            f64::MIN_POSITIVE,
            5e-324,
            f64::MAX,
            1.0 / 3.0,
            f64::INFINITY,
            f64::NEG_INFINITY,
            std::f64::consts::PI,
        ];
        let m = Tensor::matrix(3, 3, vals.clone()).unwrap();
        let back = round_trip(&m);
        for (a, b) in vals.iter().zip(back.data()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn wrong_width_names_the_row() {
        let text = "1,2,3\n4,5,6\n7,8\n";
        match read_matrix(text.as_bytes(), None, Path::new("x.csv")) {
            Err(Error::MalformedRow { row, .. }) => assert_eq!(row, 2),
            other => panic!("{other:?}"),
        }
        match read_matrix("1,2\n".as_bytes(), Some(3), Path::new("x.csv")) {
            Err(Error::MalformedRow { row, .. }) => assert_eq!(row, 0),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            read_matrix("1,abc\n".as_bytes(), None, Path::new("x.csv")),
            Err(Error::MalformedRow { row: 0, .. })
        ));
    }

    #[test]
    fn sentinel_is_written_as_inf() {
        assert_eq!(format_value(f64::INFINITY), "inf");
        assert_eq!(format_value(1.5), "1.5000000000000000e0");
    }
}
