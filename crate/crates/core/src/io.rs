//! Field serialization.
//!
//! Binary layout: `dim`, `n`, `L`, `s` as little-endian 64-bit values
//! (`dim` and `n` as `u64`, `L` and `s` as `f64`), then the row-major values
//! as little-endian `f64`.

use std::fmt::Write as _;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

const HEADER_BYTES: usize = 32;

pub fn write_field_binary(field: &Field, s: f64, mut out: impl Write) -> Result<()> {
    let g = field.grid();
    let mut buf = Vec::with_capacity(HEADER_BYTES + 8 * g.len());
    buf.extend_from_slice(&(g.dim() as u64).to_le_bytes());
    buf.extend_from_slice(&(g.n_per_axis() as u64).to_le_bytes());
    buf.extend_from_slice(&g.half_extent().to_le_bytes());
    buf.extend_from_slice(&s.to_le_bytes());
    for v in field.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

/// Returns the field and the stored order `s`.
pub fn read_field_binary(mut input: impl Read) -> Result<(Field, f64)> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() < HEADER_BYTES {
        return Err(Error::InvalidParameter(format!(
            "field file too short: {} bytes",
            bytes.len()
        )));
    }
    let word = |i: usize| -> [u8; 8] { bytes[8 * i..8 * i + 8].try_into().expect("8-byte slice") };
    let dim = u64::from_le_bytes(word(0)) as usize;
    let n = u64::from_le_bytes(word(1)) as usize;
    let half_extent = f64::from_le_bytes(word(2));
    let s = f64::from_le_bytes(word(3));
    let grid = Grid::new(dim, n, half_extent)?;
    let body = &bytes[HEADER_BYTES..];
    if body.len() != 8 * grid.len() {
        return Err(Error::InvalidParameter(format!(
            "field file holds {} bytes of values, expected {}",
            body.len(),
            8 * grid.len()
        )));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok((Field::new(grid, values)?, s))
}

/// Coordinates then value, one node per row.
pub fn field_to_csv(field: &Field) -> String {
    let g = field.grid();
    let mut out = String::from(if g.dim() == 1 { "x,value\n" } else { "x,y,value\n" });
    for (k, v) in field.values().iter().enumerate() {
        let [x, y] = g.coords(k);
        let _ = match g.dim() {
            1 => writeln!(out, "{x:e},{v:e}"),
            _ => writeln!(out, "{x:e},{y:e},{v:e}"),
        };
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_round_trip() {
        let g = Grid::new(2, 16, 3.5).unwrap();
        let f = Field::from_fn(g, |[x, y]| x.sin() * y + 0.1);
        let mut buf = Vec::new();
        write_field_binary(&f, 0.3, &mut buf).unwrap();
        assert_eq!(buf.len(), 32 + 8 * 256);
        assert_eq!(&buf[..8], &2u64.to_le_bytes());
        let (back, s) = read_field_binary(buf.as_slice()).unwrap();
        assert_eq!(back, f);
        assert_eq!(s, 0.3);
        assert!(read_field_binary(&buf[..100]).is_err());
    }

    #[test]
    fn csv_rows() {
        let g = Grid::new(1, 16, 2.0).unwrap();
        let csv = field_to_csv(&Field::constant(g, 2.0));
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 17);
        assert_eq!(lines[0], "x,value");
        assert_eq!(lines[9], "0e0,2e0");
    }
}
