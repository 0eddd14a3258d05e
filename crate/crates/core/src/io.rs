//! Plain-text formats shared by the library and the CLI.

use std::io::{Read, Write};

use ndarray::Array2;

use crate::error::{Error, Result};

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes a matrix as `i,j,value` rows in row-major order.
pub fn write_matrix_csv<W: Write>(w: W, m: &Array2<f64>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["i", "j", "value"])?;
    for ((i, j), v) in m.indexed_iter() {
        out.write_record([i.to_string(), j.to_string(), fmt_f64(*v)])?;
    }
    out.flush()?;
    Ok(())
}

/// Reads the `i,j,value` format back. Missing cells are zero; the shape is
/// inferred from the largest indices.
pub fn read_matrix_csv<R: Read>(r: R) -> Result<Array2<f64>> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut cells = Vec::new();
    let (mut rows, mut cols) = (0, 0);
    for rec in rdr.records() {
        let rec = rec?;
        let field = |k: usize| {
            rec.get(k)
                .ok_or_else(|| Error::InvalidParameter(format!("missing column {k}")))
        };
        let parse_idx = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|e| Error::InvalidParameter(format!("bad index {s:?}: {e}")))
        };
        let i = parse_idx(field(0)?)?;
        let j = parse_idx(field(1)?)?;
        let v = field(2)?
            .trim()
            .parse::<f64>()
            .map_err(|e| Error::InvalidParameter(format!("bad value: {e}")))?;
        rows = rows.max(i + 1);
        cols = cols.max(j + 1);
        cells.push((i, j, v));
    }
    let mut m = Array2::zeros((rows, cols));
    for (i, j, v) in cells {
        m[[i, j]] = v;
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn round_trip_is_exact() {
        let m = array![[0.1, 1.0 / 3.0], [2e-300, 7.0]];
        let mut buf = Vec::new();
        write_matrix_csv(&mut buf, &m).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("i,j,value\n0,0,1.0000000000000001e-1\n"));
        assert_eq!(read_matrix_csv(buf.as_slice()).unwrap(), m);
    }
}
