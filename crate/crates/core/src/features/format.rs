//! Binary feature-matrix files.
//!
//! ```text
//! offset  size  field
//! 0       8     magic "SUBSELFM"
//! 8       4     version (u32, currently 1)
//! 12      8     n (u64)
//! 20      4     d (u32)
//! 24      1     dtype (0 = f32)
//! 25      1     normalized (0 or 1)
//! 26      4·n·d values, row-major
//! ```
//!
//! All integers and values are little-endian.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use super::{l2_norm, FeatureMatrix, NORM_TOLERANCE};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"SUBSELFM";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 26;
const DTYPE_F32: u8 = 0;

/// Shape a caller expects a loaded matrix to have.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub n: usize,
    pub d: usize,
}

pub fn write_features<W: Write>(m: &FeatureMatrix, mut w: W) -> Result<()> {
    let d = u32::try_from(m.d()).map_err(|_| Error::invalid("dimension exceeds u32"))?;
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(m.n() as u64).to_le_bytes())?;
    w.write_all(&d.to_le_bytes())?;
    w.write_all(&[DTYPE_F32, u8::from(m.is_normalized())])?;
    for v in m.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_features(m: &FeatureMatrix, path: &Path) -> Result<()> {
    let f = fs::File::create(path)?;
    write_features(m, BufWriter::new(f))
}

pub fn read_features<R: Read>(mut r: R, expected: Option<Layout>) -> Result<FeatureMatrix> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    parse(&buf, expected)
}

pub fn load_features(path: &Path, expected: Option<Layout>) -> Result<FeatureMatrix> {
    let buf = fs::read(path)?;
    parse(&buf, expected)
}

fn parse(buf: &[u8], expected: Option<Layout>) -> Result<FeatureMatrix> {
    if buf.len() < HEADER_LEN {
        return Err(Error::format(
            buf.len() as u64,
            format!("truncated header: {} of {HEADER_LEN} bytes", buf.len()),
        ));
    }
    if &buf[0..8] != MAGIC {
        return Err(Error::format(0, "bad magic"));
    }
    let version = u32::from_le_bytes(buf[8..12].try_into().unwrap());
    if version != VERSION {
        return Err(Error::format(8, format!("unsupported version {version}")));
    }
    let n = u64::from_le_bytes(buf[12..20].try_into().unwrap());
    let d = u32::from_le_bytes(buf[20..24].try_into().unwrap());
    let dtype = buf[24];
    if dtype != DTYPE_F32 {
        return Err(Error::format(24, format!("unsupported dtype {dtype}")));
    }
    let normalized = match buf[25] {
        0 => false,
        1 => true,
        other => return Err(Error::format(25, format!("normalized flag must be 0 or 1, got {other}"))),
    };
    if n == 0 {
        return Err(Error::format(12, "n must be at least 1"));
    }
    if d == 0 {
        return Err(Error::format(20, "d must be at least 1"));
    }
    let n = usize::try_from(n).map_err(|_| Error::format(12, "n does not fit in memory"))?;
    let d = d as usize;
    let count = n
        .checked_mul(d)
        .filter(|c| c.checked_mul(4).is_some())
        .ok_or_else(|| Error::format(12, "n·d overflows"))?;
    let body = &buf[HEADER_LEN..];
    if body.len() < count * 4 {
        let got = body.len() / 4;
        return Err(Error::format(
            buf.len() as u64,
            format!("truncated: header declares {count} values, file holds {got}"),
        ));
    }
    if body.len() > count * 4 {
        return Err(Error::format(
            (HEADER_LEN + count * 4) as u64,
            format!("{} trailing bytes after values", body.len() - count * 4),
        ));
    }
    let mut values = Vec::with_capacity(count);
    for (i, chunk) in body.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(Error::format(
                (HEADER_LEN + i * 4) as u64,
                format!("non-finite value at row {}, column {}", i / d, i % d),
            ));
        }
        values.push(v);
    }
    if let Some(layout) = expected {
        if layout.n != n || layout.d != d {
            return Err(Error::format(
                12,
                format!("expected {}x{}, file holds {n}x{d}", layout.n, layout.d),
            ));
        }
    }
    if normalized {
        for (i, row) in values.chunks_exact(d).enumerate() {
            let norm = l2_norm(row);
            if norm != 0.0 && (norm - 1.0).abs() > NORM_TOLERANCE {
                return Err(Error::format(
                    (HEADER_LEN + i * d * 4) as u64,
                    format!("row {i} flagged normalized but has norm {norm}"),
                ));
            }
        }
    }
    FeatureMatrix::with_flag(n, d, values, normalized)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::normalize_rows;

    fn bytes(m: &FeatureMatrix) -> Vec<u8> {
        let mut out = Vec::new();
        write_features(m, &mut out).unwrap();
        out
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let m = FeatureMatrix::new(3, 2, vec![0.1, -2.5, 1e-30, 7.0, -0.0, 3.25]).unwrap();
        let b = bytes(&m);
        assert_eq!(b.len(), HEADER_LEN + 24);
        let back = read_features(&b[..], None).unwrap();
        assert_eq!(back, m);
        assert_eq!(bytes(&back), b);

        let n = normalize_rows(m).matrix;
        let back = read_features(&bytes(&n)[..], Some(Layout { n: 3, d: 2 })).unwrap();
        assert!(back.is_normalized());
        assert_eq!(back, n);
    }

    #[test]
    fn truncated_values() {
        let m = FeatureMatrix::new(3, 2, vec![1.0; 6]).unwrap();
        let mut b = bytes(&m);
        b.truncate(HEADER_LEN + 5 * 4);
        match read_features(&b[..], None) {
            Err(Error::Format { offset, message }) => {
                assert_eq!(offset, b.len() as u64);
                assert!(message.contains("truncated"), "{message}");
            }
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn bad_magic_and_nan_offsets() {
        let m = FeatureMatrix::new(2, 2, vec![1.0; 4]).unwrap();
        let mut b = bytes(&m);
        b[0] = b'X';
        assert!(matches!(read_features(&b[..], None), Err(Error::Format { offset: 0, .. })));

        let mut b = bytes(&m);
        let at = HEADER_LEN + 2 * 4;
        b[at..at + 4].copy_from_slice(&f32::NAN.to_le_bytes());
        match read_features(&b[..], None) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, at as u64),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn layout_mismatch_and_trailing_bytes() {
        let m = FeatureMatrix::new(2, 2, vec![1.0; 4]).unwrap();
        let mut b = bytes(&m);
        assert!(read_features(&b[..], Some(Layout { n: 2, d: 3 })).is_err());
        b.push(0);
        assert!(matches!(read_features(&b[..], None), Err(Error::Format { .. })));
    }

    #[test]
    fn rejects_bogus_normalized_flag() {
        let m = FeatureMatrix::new(1, 2, vec![3.0, 4.0]).unwrap();
        let mut b = bytes(&m);
        b[25] = 1;
        assert!(matches!(read_features(&b[..], None), Err(Error::Format { offset: 26, .. })));
    }
}
