//! Sample-function files.
//!
//! Binary layout, little-endian: `b"OSCM"`, `u8` version (1), `u8` dim,
//! `u32` points per axis, `f64` half-width, then `N^dim` pairs of `f64`
//! (re, im) in row-major order. CSV import reads headers `x,re,im` (1D) or
//! `x,y,re,im` (2D) with rows in grid order.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, SampledFunction, Space};

pub const MAGIC: &[u8; 4] = b"OSCM";
pub const VERSION: u8 = 1;

pub fn write_samples<W: Write>(mut w: W, f: &SampledFunction) -> Result<()> {
    f.expect_space(Space::Physical)?;
    let spec = f.spec();
    let points = u32::try_from(spec.points).map_err(|_| Error::Format("point count exceeds u32".into()))?;
    w.write_all(MAGIC)?;
    w.write_all(&[VERSION, spec.dim as u8])?;
    w.write_all(&points.to_le_bytes())?;
    w.write_all(&spec.half_width.to_le_bytes())?;
    for v in f.values() {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_samples<R: Read>(mut r: R) -> Result<SampledFunction> {
    let mut head = [0u8; 18];
    r.read_exact(&mut head).map_err(|e| Error::Format(format!("truncated header: {e}")))?;
    if &head[..4] != MAGIC {
        return Err(Error::Format("missing OSCM magic bytes".into()));
    }
    if head[4] != VERSION {
        return Err(Error::Format(format!("unsupported version {}", head[4])));
    }
    let dim = head[5] as usize;
    let points = u32::from_le_bytes(head[6..10].try_into().expect("4 bytes")) as usize;
    let half_width = f64::from_le_bytes(head[10..18].try_into().expect("8 bytes"));
    let spec = GridSpec::new(dim, half_width, points)?;
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    let expected = spec.size() * 16;
    if body.len() != expected {
        return Err(Error::Format(format!("payload has {} bytes; expected {expected}", body.len())));
    }
    let values = body
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
            )
        })
        .collect();
    SampledFunction::new(spec, values, Space::Physical)
}

/// Reads CSV samples; the grid is inferred from the coordinates, which must
/// be the points of a power-of-two grid in row-major order.
pub fn read_csv<R: Read>(r: R) -> Result<SampledFunction> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Format(e.to_string()))?
        .iter()
        .map(|h| h.to_ascii_lowercase())
        .collect();
    let dim = match headers.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["x", "re", "im"] => 1,
        ["x", "y", "re", "im"] => 2,
        other => return Err(Error::Format(format!("expected header x,re,im or x,y,re,im; got {}", other.join(",")))),
    };
    let mut coords = Vec::new();
    let mut values = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Format(e.to_string()))?;
        let nums = rec
            .iter()
            .map(|c| c.parse::<f64>().map_err(|e| Error::Format(format!("row {}: {e}", line + 2))))
            .collect::<Result<Vec<_>>>()?;
        if nums.len() != dim + 2 {
            return Err(Error::Format(format!("row {} has {} fields", line + 2, nums.len())));
        }
        coords.push([nums[0], if dim == 2 { nums[1] } else { 0.0 }]);
        values.push(Complex64::new(nums[dim], nums[dim + 1]));
    }
    let total = values.len();
    let points = if dim == 1 { total } else { (total as f64).sqrt().round() as usize };
    if points.pow(dim as u32) != total || points < 2 {
        return Err(Error::Format(format!("{total} rows do not form a {dim}-dimensional square grid")));
    }
    // x_0 = -L and Δx = 2L/N
    let half_width = -coords[0][0];
    let spec = GridSpec::new(dim, half_width, points)?;
    let tol = 1e-9 * spec.dx();
    for (i, c) in coords.iter().enumerate() {
        let p = spec.point(i);
        if (p[0] - c[0]).abs() > tol || (dim == 2 && (p[1] - c[1]).abs() > tol) {
            return Err(Error::Format(format!("row {} coordinates {:?} off the grid point {:?}", i + 2, c, p)));
        }
    }
    SampledFunction::new(spec, values, Space::Physical)
}

/// Dispatches on the extension: `.csv` or the binary format.
pub fn load(path: &std::path::Path) -> Result<SampledFunction> {
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        read_csv(reader)
    } else {
        read_samples(reader)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(dim: usize) -> SampledFunction {
        let spec = GridSpec::new(dim, 2.0, 16).unwrap();
        SampledFunction::physical(spec, |[x, y]| Complex64::new(x - 0.5 * y, x * y))
    }

    #[test]
    fn binary_round_trip() {
        for dim in [1, 2] {
            let f = sample(dim);
            let mut buf = Vec::new();
            write_samples(&mut buf, &f).unwrap();
            assert_eq!(buf.len(), 18 + 16 * f.spec().size());
            let g = read_samples(buf.as_slice()).unwrap();
            assert_eq!(g.spec(), f.spec());
            assert_eq!(g.values(), f.values());
        }
    }

    #[test]
    fn rejects_bad_headers() {
        assert!(read_samples(&b"NOPE\x01\x01"[..]).is_err());
        let mut buf = Vec::new();
        write_samples(&mut buf, &sample(1)).unwrap();
        buf[4] = 9;
        assert!(read_samples(buf.as_slice()).is_err());
        buf[4] = 1;
        buf.pop();
        assert!(read_samples(buf.as_slice()).is_err());
    }

    #[test]
    fn csv_import_matches_grid() {
        for dim in [1, 2] {
            let f = sample(dim);
            let mut text = if dim == 1 { "x,re,im\n".to_string() } else { "x,y,re,im\n".to_string() };
            for (i, v) in f.values().iter().enumerate() {
                let p = f.spec().point(i);
                if dim == 1 {
                    text += &format!("{:?},{:?},{:?}\n", p[0], v.re, v.im);
                } else {
                    text += &format!("{:?},{:?},{:?},{:?}\n", p[0], p[1], v.re, v.im);
                }
            }
            let g = read_csv(text.as_bytes()).unwrap();
            assert_eq!(g.spec(), f.spec());
            assert_eq!(g.values(), f.values());
        }
        assert!(read_csv("a,b\n1,2\n".as_bytes()).is_err());
    }
}
