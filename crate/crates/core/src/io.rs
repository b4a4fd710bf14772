//! Field serialization.
//!
//! TPF ("text pressure field") files carry one header line
//! `tpf1 nx ny x_min x_max y_min y_max` followed by the `nx * ny` node
//! values row-major (one y-row per line). All numbers are written with 17
//! significant digits so `f64` round trips are bit-faithful. CSV export
//! emits `x,y,value` rows for plotting.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Grid2D, ScalarField};
use crate::scalar::{cast, Scalar};

const MAGIC: &str = "tpf1";

fn fmt<T: Scalar>(v: T) -> String {
    format!("{:.16e}", v)
}

/// Write a field in TPF format.
pub fn write_tpf<T: Scalar>(field: &ScalarField<T>, out: &mut impl Write) -> Result<()> {
    let g = field.grid();
    writeln!(
        out,
        "{MAGIC} {} {} {} {} {} {}",
        g.n(),
        g.n(),
        fmt(g.x_min()),
        fmt(g.x_max()),
        fmt(g.y_min()),
        fmt(g.y_max()),
    )?;
    for j in 0..g.n() {
        let row: Vec<String> = (0..g.n()).map(|i| fmt(field.get(i, j))).collect();
        writeln!(out, "{}", row.join(" "))?;
    }
    Ok(())
}

pub fn write_tpf_file<T: Scalar>(field: &ScalarField<T>, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_tpf(field, &mut w)?;
    w.flush()?;
    Ok(())
}

fn parse_value<T: Scalar>(token: &str) -> Result<T> {
    let v: f64 = token
        .parse()
        .map_err(|_| Error::FieldFormat(format!("cannot parse '{token}' as a number")))?;
    Ok(cast::<T>(v))
}

/// Read a TPF field.
pub fn read_tpf<T: Scalar>(input: &mut impl BufRead) -> Result<ScalarField<T>> {
    let mut header = String::new();
    input.read_line(&mut header)?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() != 7 || tokens[0] != MAGIC {
        return Err(Error::FieldFormat(format!(
            "expected header '{MAGIC} nx ny x_min x_max y_min y_max', got '{}'",
            header.trim_end()
        )));
    }
    let nx: usize = tokens[1]
        .parse()
        .map_err(|_| Error::FieldFormat("bad nx in header".into()))?;
    let ny: usize = tokens[2]
        .parse()
        .map_err(|_| Error::FieldFormat("bad ny in header".into()))?;
    if nx != ny {
        return Err(Error::FieldFormat(format!(
            "grids are square, got nx = {nx}, ny = {ny}"
        )));
    }
    let corners: Vec<f64> = tokens[3..7]
        .iter()
        .map(|t| parse_value::<f64>(t))
        .collect::<Result<_>>()?;
    let grid = Grid2D::<T>::new(
        cast(corners[0]),
        cast(corners[1]),
        cast(corners[2]),
        cast(corners[3]),
        nx,
    )?;
    let expected = grid.num_nodes();
    let mut values: Vec<T> = Vec::with_capacity(expected);
    for line in input.lines() {
        for token in line?.split_whitespace() {
            if values.len() == expected {
                return Err(Error::FieldFormat(format!(
                    "more than {expected} values in field body"
                )));
            }
            values.push(parse_value(token)?);
        }
    }
    if values.len() != expected {
        return Err(Error::FieldFormat(format!(
            "expected {expected} values, found {}",
            values.len()
        )));
    }
    ScalarField::new(grid, values)
}

pub fn read_tpf_file<T: Scalar>(path: impl AsRef<Path>) -> Result<ScalarField<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| {
        Error::FieldFormat(format!("cannot open '{}': {e}", path.display()))
    })?;
    read_tpf(&mut BufReader::new(file))
}

/// Export a field as `x,y,value` CSV rows with a header line.
pub fn write_csv<T: Scalar>(field: &ScalarField<T>, out: &mut impl Write) -> Result<()> {
    writeln!(out, "x,y,value")?;
    let g = field.grid();
    for j in 0..g.n() {
        for i in 0..g.n() {
            let (x, y) = g.node(i, j);
            writeln!(out, "{},{},{}", fmt(x), fmt(y), fmt(field.get(i, j)))?;
        }
    }
    Ok(())
}

pub fn write_csv_file<T: Scalar>(field: &ScalarField<T>, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_csv(field, &mut w)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tpf_round_trip_is_bit_faithful() {
        let g = Grid2D::<f64>::new(-1.0, 1.0, -1.0, 1.0, 7).unwrap();
        let f = ScalarField::from_fn(g, |x, y| (31.0 * x).sin() * (0.1 + y));
        let mut buf = Vec::new();
        write_tpf(&f, &mut buf).unwrap();
        let back: ScalarField<f64> = read_tpf(&mut &buf[..]).unwrap();
        assert_eq!(f, back);
    }

    #[test]
    fn tpf_rejects_malformed_input() {
        let cases = [
            "bogus 3 3 0 1 0 1\n",
            "tpf1 3 4 0 1 0 1\n",
            "tpf1 3 3 0 1 0 1\n1 2 3\n",
            "tpf1 3 3 0 1 0 1\n1 2 3 4 5 6 7 8 9 10\n",
            "tpf1 3 3 0 1 0 1\n1 2 3 4 5 x 7 8 9\n",
        ];
        for case in cases {
            let res: Result<ScalarField<f64>> = read_tpf(&mut case.as_bytes());
            assert!(res.is_err(), "accepted: {case:?}");
        }
    }

    #[test]
    fn csv_has_header_and_rows() {
        let g = Grid2D::<f64>::unit_square(3).unwrap();
        let f = ScalarField::constant(g, 2.0);
        let mut buf = Vec::new();
        write_csv(&f, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x,y,value"));
        assert_eq!(lines.count(), 9);
    }

    proptest! {
        #[test]
        fn tpf_round_trip_random_fields(vals in proptest::collection::vec(-1e12f64..1e12, 9)) {
            let g = Grid2D::<f64>::unit_square(3).unwrap();
            let f = ScalarField::new(g, vals).unwrap();
            let mut buf = Vec::new();
            write_tpf(&f, &mut buf).unwrap();
            let back: ScalarField<f64> = read_tpf(&mut &buf[..]).unwrap();
            prop_assert_eq!(f, back);
        }
    }
}
