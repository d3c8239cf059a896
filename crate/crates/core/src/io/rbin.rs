//! `rbin`: the bit-exact binary raster format.
//!
//! Little-endian layout:
//!
//! ```text
//! offset  size  field
//!      0     4  magic "UDIR"
//!      4     4  version (u32, = 1)
//!      8     4  width   (u32, > 0)
//!     12     4  height  (u32, > 0)
//!     16     8  x_origin   (f64)
//!     24     8  y_origin   (f64)
//!     32     8  pixel_size (f64)
//!     40     4  nodata     (f32)
//!     44   4wh  samples row-major (f32); masked pixels hold the sentinel
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::{GridGeometry, Raster};
use crate::scalar::Scalar;

pub const MAGIC: [u8; 4] = *b"UDIR";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 44;
/// Default sentinel written for masked pixels.
pub const DEFAULT_NODATA: f32 = -9999.0;

/// Write with the default nodata sentinel.
pub fn write<T: Scalar>(raster: &Raster<T>, path: &Path) -> Result<()> {
    write_with_nodata(raster, path, DEFAULT_NODATA)
}

/// Write with an explicit nodata sentinel.
///
/// Samples are narrowed to `f32`. A valid sample that narrows to a value
/// bit-equal to the sentinel is an error: it would silently come back
/// masked on read.
pub fn write_with_nodata<T: Scalar>(raster: &Raster<T>, path: &Path, nodata: f32) -> Result<()> {
    let g = raster.geometry();
    let width = u32::try_from(g.width()).map_err(|_| Error::InvalidGeometry {
        detail: format!("width {} exceeds u32", g.width()),
    })?;
    let height = u32::try_from(g.height()).map_err(|_| Error::InvalidGeometry {
        detail: format!("height {} exceeds u32", g.height()),
    })?;

    let samples = raster.samples();
    let valid = raster.validity();
    let mut payload: Vec<f32> = Vec::with_capacity(samples.len());
    for i in 0..samples.len() {
        if valid[i] {
            let v = samples[i].to_f32().unwrap_or(f32::NAN);
            if v.to_bits() == nodata.to_bits() {
                return Err(Error::SentinelCollision {
                    col: i % g.width(),
                    row: i / g.width(),
                    value: v as f64,
                });
            }
            payload.push(v);
        } else {
            payload.push(nodata);
        }
    }

    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path, e);
    w.write_all(&MAGIC).map_err(io_err)?;
    w.write_all(&VERSION.to_le_bytes()).map_err(io_err)?;
    w.write_all(&width.to_le_bytes()).map_err(io_err)?;
    w.write_all(&height.to_le_bytes()).map_err(io_err)?;
    w.write_all(&g.x_origin().to_le_bytes()).map_err(io_err)?;
    w.write_all(&g.y_origin().to_le_bytes()).map_err(io_err)?;
    w.write_all(&g.pixel_size().to_le_bytes()).map_err(io_err)?;
    w.write_all(&nodata.to_le_bytes()).map_err(io_err)?;
    for v in payload {
        w.write_all(&v.to_le_bytes()).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn read<T: Scalar>(path: &Path) -> Result<Raster<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;
    parse(&bytes).map_err(|(offset, detail)| Error::parse(path, format!("byte {offset}"), detail))
}

fn parse<T: Scalar>(bytes: &[u8]) -> std::result::Result<Raster<T>, (usize, String)> {
    if bytes.len() < HEADER_LEN {
        return Err((bytes.len(), format!("truncated header ({} of {HEADER_LEN} bytes)", bytes.len())));
    }
    if bytes[0..4] != MAGIC {
        return Err((0, format!("bad magic {:?}, expected {:?}", &bytes[0..4], MAGIC)));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());

    let version = u32_at(4);
    if version != VERSION {
        return Err((4, format!("unsupported version {version}, expected {VERSION}")));
    }
    let width = u32_at(8) as usize;
    let height = u32_at(12) as usize;
    let geometry = GridGeometry::new(width, height, f64_at(16), f64_at(24), f64_at(32))
        .map_err(|e| (8, e.to_string()))?;
    let nodata = f32::from_le_bytes(bytes[40..44].try_into().unwrap());

    let expected = HEADER_LEN + 4 * geometry.len();
    if bytes.len() < expected {
        return Err((
            bytes.len(),
            format!(
                "truncated samples: {} of {} pixels present",
                (bytes.len() - HEADER_LEN) / 4,
                geometry.len()
            ),
        ));
    }
    if bytes.len() > expected {
        return Err((expected, format!("{} trailing bytes after samples", bytes.len() - expected)));
    }

    let mut samples = Vec::with_capacity(geometry.len());
    let mut valid = Vec::with_capacity(geometry.len());
    for i in 0..geometry.len() {
        let v = f32::from_le_bytes(bytes[HEADER_LEN + 4 * i..HEADER_LEN + 4 * i + 4].try_into().unwrap());
        // The sentinel compares bit-wise so a NaN nodata still masks.
        let masked = v.to_bits() == nodata.to_bits() || !v.is_finite();
        samples.push(T::from_f64_nearest(if masked { 0.0 } else { v as f64 }));
        valid.push(!masked);
    }
    Raster::from_parts(geometry, samples, valid).map_err(|e| (HEADER_LEN, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn sample_raster() -> Raster<f64> {
        // 2x2 with one masked corner: {1, 2; 3, nodata}.
        let g = GridGeometry::new(2, 2, 10.0, 20.0, 0.5).unwrap();
        Raster::from_parts(g, vec![1.0, 2.0, 3.0, 0.0], vec![true, true, true, false]).unwrap()
    }

    #[test]
    fn round_trip_preserves_geometry_samples_and_mask() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("r.rbin");
        let r = sample_raster();
        write(&r, &path).unwrap();
        let back: Raster<f64> = read(&path).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn rewrite_is_byte_identical() {
        let dir = tempdir().unwrap();
        let a = dir.path().join("a.rbin");
        let b = dir.path().join("b.rbin");
        let r = sample_raster();
        write(&r, &a).unwrap();
        let back: Raster<f64> = read(&a).unwrap();
        write(&back, &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn bad_magic_is_a_parse_error_at_byte_zero() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("r.rbin");
        write(&sample_raster(), &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] = b'X';
        std::fs::write(&path, &bytes).unwrap();
        match read::<f64>(&path) {
            Err(Error::Parse { location, detail, .. }) => {
                assert_eq!(location, "byte 0");
                assert!(detail.contains("bad magic"), "{detail}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn truncation_and_trailing_bytes_are_parse_errors() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("r.rbin");
        write(&sample_raster(), &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();

        std::fs::write(&path, &bytes[..bytes.len() - 5]).unwrap();
        match read::<f64>(&path) {
            Err(Error::Parse { detail, .. }) => assert!(detail.contains("truncated"), "{detail}"),
            other => panic!("expected parse error, got {other:?}"),
        }

        let mut extended = bytes.clone();
        extended.extend_from_slice(&[0u8; 4]);
        std::fs::write(&path, &extended).unwrap();
        match read::<f64>(&path) {
            Err(Error::Parse { detail, .. }) => assert!(detail.contains("trailing"), "{detail}"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn valid_sample_equal_to_sentinel_is_rejected() {
        let dir = tempdir().unwrap();
        let g = GridGeometry::new(1, 1, 0.0, 1.0, 1.0).unwrap();
        let r = Raster::from_parts(g, vec![-9999.0], vec![true]).unwrap();
        match write(&r, &dir.path().join("r.rbin")) {
            Err(Error::SentinelCollision { col: 0, row: 0, .. }) => {}
            other => panic!("expected sentinel collision, got {other:?}"),
        }
        // A different sentinel accepts the same data.
        write_with_nodata(&r, &dir.path().join("ok.rbin"), f32::NEG_INFINITY).unwrap();
        let back: Raster<f64> = read(&dir.path().join("ok.rbin")).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn zero_radiance_survives_round_trip_as_valid_data() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("zero.rbin");
        let g = GridGeometry::new(2, 1, 0.0, 1.0, 1.0).unwrap();
        let r = Raster::from_parts(g, vec![0.0, 5.5], vec![true, true]).unwrap();
        write(&r, &path).unwrap();
        let back: Raster<f64> = read(&path).unwrap();
        assert_eq!(back.get(0, 0), Some(0.0));
    }

    #[test]
    fn version_and_dimension_checks() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("r.rbin");
        write(&sample_raster(), &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[4] = 9; // version
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(read::<f64>(&path), Err(Error::Parse { .. })));

        let mut bytes = std::fs::read(&path).unwrap();
        bytes[4] = 1;
        bytes[8..12].copy_from_slice(&0u32.to_le_bytes()); // width 0
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(read::<f64>(&path), Err(Error::Parse { .. })));
    }

    #[test]
    fn reads_into_f32_without_loss() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("r.rbin");
        write(&sample_raster(), &path).unwrap();
        let back: Raster<f32> = read(&path).unwrap();
        assert_eq!(back.get(1, 0), Some(2.0f32));
        assert_eq!(back.get(1, 1), None);
    }
}
