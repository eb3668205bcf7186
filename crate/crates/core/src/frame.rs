//! Frames, camera geometry and the on-disk sequence format.
//!
//! A frame stores the sensor-native radial distance `d` (spherical sensor
//! coordinates) and the active intensity `I` per pixel. Axial distances `z`
//! are derived through the pinhole model when needed. Distance 0 is the
//! sentinel for invalid/ignored pixels.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::{Error, Result};

/// Pinhole camera parameters. Row-major grids, top-left origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub width: u32,
    pub height: u32,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl CameraIntrinsics {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidInput("image dimensions must be positive".into()));
        }
        if self.fx <= 0.0 || self.fy <= 0.0 {
            return Err(Error::InvalidInput("focal lengths must be positive".into()));
        }
        if self.cx < 0.0 || self.cx >= self.width as f64 || self.cy < 0.0 || self.cy >= self.height as f64 {
            return Err(Error::InvalidInput("principal point must lie inside the image".into()));
        }
        Ok(())
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }
}

/// A point in the camera coordinate system, z along the optical axis, meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    /// Euclidean distance of the XY projections.
    pub fn xy_distance(&self, other: &Point3) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        (dx * dx + dy * dy).sqrt()
    }
}

/// One co-registered range/intensity image.
///
/// Grids are kept in f64 in memory; the sequence file stores f32 payloads,
/// so a store/load round trip is the identity exactly when the values are
/// f32-representable (which holds for anything that came from disk).
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub intrinsics: CameraIntrinsics,
    /// Radial distance per pixel, meters. 0 marks an invalid pixel.
    pub distance: Vec<f64>,
    /// Active intensity per pixel, dimensionless, >= 0.
    pub intensity: Vec<f64>,
    pub frame_index: u32,
}

impl Frame {
    pub fn new(intrinsics: CameraIntrinsics, distance: Vec<f64>, intensity: Vec<f64>, frame_index: u32) -> Result<Self> {
        intrinsics.validate()?;
        let n = intrinsics.pixel_count();
        if distance.len() != n || intensity.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "expected {} grid entries, got {} distance / {} intensity",
                n,
                distance.len(),
                intensity.len()
            )));
        }
        Ok(Frame { intrinsics, distance, intensity, frame_index })
    }

    pub fn width(&self) -> usize {
        self.intrinsics.width as usize
    }

    pub fn height(&self) -> usize {
        self.intrinsics.height as usize
    }
}

/// Back-projects pixel (u, v) at radial distance `d` onto the pinhole ray.
///
/// The returned point lies on the ray through (u, v) with |point| = d.
pub fn pixel_to_camera(u: f64, v: f64, d: f64, k: &CameraIntrinsics) -> Result<Point3> {
    if d <= 0.0 {
        return Err(Error::InvalidInput(format!("radial distance must be positive, got {d}")));
    }
    if u < 0.0 || u >= k.width as f64 || v < 0.0 || v >= k.height as f64 {
        return Err(Error::InvalidInput(format!("pixel ({u}, {v}) outside the image")));
    }
    Ok(back_project(u, v, d, k))
}

/// Unchecked ray scaling; callers guarantee d > 0 and (u, v) in bounds.
#[inline]
pub(crate) fn back_project(u: f64, v: f64, d: f64, k: &CameraIntrinsics) -> Point3 {
    let rx = (u - k.cx) / k.fx;
    let ry = (v - k.cy) / k.fy;
    let n = (rx * rx + ry * ry + 1.0).sqrt();
    let s = d / n;
    Point3::new(rx * s, ry * s, s)
}

const SEQ_MAGIC: &[u8; 4] = b"RIS1";

fn read_exact_at(r: &mut impl Read, buf: &mut [u8], offset: &mut u64, what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|_| Error::Format {
        offset: *offset,
        msg: format!("truncated while reading {what}"),
    })?;
    *offset += buf.len() as u64;
    Ok(())
}

fn read_u32(r: &mut impl Read, offset: &mut u64, what: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact_at(r, &mut b, offset, what)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f32(r: &mut impl Read, offset: &mut u64, what: &str) -> Result<f32> {
    let mut b = [0u8; 4];
    read_exact_at(r, &mut b, offset, what)?;
    Ok(f32::from_le_bytes(b))
}

fn read_grid(r: &mut impl Read, n: usize, offset: &mut u64, what: &str) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; n * 4];
    read_exact_at(r, &mut bytes, offset, what)?;
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect())
}

/// Loads a recorded sequence, attaching the header intrinsics to every frame.
pub fn load_sequence(path: impl AsRef<Path>) -> Result<Vec<Frame>> {
    let mut r = BufReader::new(File::open(path.as_ref())?);
    let mut offset = 0u64;

    let mut magic = [0u8; 4];
    read_exact_at(&mut r, &mut magic, &mut offset, "magic")?;
    if &magic != SEQ_MAGIC {
        return Err(Error::Format { offset: 0, msg: "bad magic, expected RIS1".into() });
    }
    let width = read_u32(&mut r, &mut offset, "header width")?;
    let height = read_u32(&mut r, &mut offset, "header height")?;
    let fx = read_f32(&mut r, &mut offset, "header fx")? as f64;
    let fy = read_f32(&mut r, &mut offset, "header fy")? as f64;
    let cx = read_f32(&mut r, &mut offset, "header cx")? as f64;
    let cy = read_f32(&mut r, &mut offset, "header cy")? as f64;
    let frame_count = read_u32(&mut r, &mut offset, "header frame count")?;

    let intrinsics = CameraIntrinsics { width, height, fx, fy, cx, cy };
    intrinsics.validate().map_err(|e| Error::Format { offset: 4, msg: format!("invalid header: {e}") })?;

    let n = intrinsics.pixel_count();
    let mut frames = Vec::with_capacity(frame_count as usize);
    for i in 0..frame_count {
        let distance = read_grid(&mut r, n, &mut offset, &format!("frame {i} distance payload"))?;
        let intensity = read_grid(&mut r, n, &mut offset, &format!("frame {i} intensity payload"))?;
        frames.push(Frame { intrinsics, distance, intensity, frame_index: i });
    }
    Ok(frames)
}

/// Writes a sequence; all frames must share the same intrinsics.
pub fn store_sequence(frames: &[Frame], path: impl AsRef<Path>) -> Result<()> {
    if let Some(first) = frames.first() {
        if frames.iter().any(|f| f.intrinsics != first.intrinsics) {
            return Err(Error::InvalidInput("frames with mixed intrinsics".into()));
        }
        write_sequence(&first.intrinsics, frames, path)
    } else {
        Err(Error::InvalidInput("cannot infer intrinsics for an empty sequence; use store_sequence_with".into()))
    }
}

/// Like [`store_sequence`] but usable for empty sequences (header only).
pub fn store_sequence_with(intrinsics: &CameraIntrinsics, frames: &[Frame], path: impl AsRef<Path>) -> Result<()> {
    if frames.iter().any(|f| f.intrinsics != *intrinsics) {
        return Err(Error::InvalidInput("frames with mixed intrinsics".into()));
    }
    write_sequence(intrinsics, frames, path)
}

fn write_sequence(k: &CameraIntrinsics, frames: &[Frame], path: impl AsRef<Path>) -> Result<()> {
    k.validate()?;
    let mut w = BufWriter::new(File::create(path.as_ref())?);
    w.write_all(SEQ_MAGIC)?;
    w.write_all(&k.width.to_le_bytes())?;
    w.write_all(&k.height.to_le_bytes())?;
    for v in [k.fx, k.fy, k.cx, k.cy] {
        w.write_all(&(v as f32).to_le_bytes())?;
    }
    w.write_all(&(frames.len() as u32).to_le_bytes())?;
    for f in frames {
        for grid in [&f.distance, &f.intensity] {
            for &v in grid.iter() {
                w.write_all(&(v as f32).to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k() -> CameraIntrinsics {
        CameraIntrinsics { width: 8, height: 6, fx: 10.0, fy: 10.0, cx: 4.0, cy: 3.0 }
    }

    #[test]
    fn principal_point_ray_is_optical_axis() {
        let p = pixel_to_camera(4.0, 3.0, 1.0, &k()).unwrap();
        assert!((p.x.abs() < 1e-12) && (p.y.abs() < 1e-12));
        assert!((p.z - 1.0).abs() < 1e-12);
        let p = pixel_to_camera(4.0, 3.0, 2.5, &k()).unwrap();
        assert!((p.z - 2.5).abs() < 1e-12);
    }

    #[test]
    fn one_focal_length_off_axis() {
        // ray direction (1, 0, 1)/sqrt(2), scaled to radial distance sqrt(2)
        let wide = CameraIntrinsics { width: 32, height: 6, fx: 10.0, fy: 10.0, cx: 4.0, cy: 3.0 };
        let p = pixel_to_camera(4.0 + 10.0, 3.0, 2f64.sqrt(), &wide).unwrap();
        assert!((p.x - 1.0).abs() < 1e-12, "{p:?}");
        assert!(p.y.abs() < 1e-12);
        assert!((p.z - 1.0).abs() < 1e-12);
    }

    #[test]
    fn radial_distance_preserved() {
        for (u, v, d) in [(0.0, 0.0, 0.4), (7.0, 5.0, 3.3), (2.0, 4.0, 1.7)] {
            let p = pixel_to_camera(u, v, d, &k()).unwrap();
            assert!((p.norm() - d).abs() / d < 1e-9);
        }
    }

    #[test]
    fn z_monotone_in_d() {
        let mut last = 0.0;
        for i in 1..50 {
            let d = i as f64 * 0.1;
            let z = pixel_to_camera(1.0, 1.0, d, &k()).unwrap().z;
            assert!(z > last);
            last = z;
        }
    }

    #[test]
    fn rejects_nonpositive_distance() {
        assert!(pixel_to_camera(1.0, 1.0, 0.0, &k()).is_err());
        assert!(pixel_to_camera(1.0, 1.0, -1.0, &k()).is_err());
    }

    fn f32_frame(seed: u64, index: u32) -> Frame {
        // grids built from f32 values so the on-disk round trip is exact
        let n = k().pixel_count();
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 33) as f32) / (u32::MAX as f32) * 2.0 + 0.1
        };
        let distance: Vec<f64> = (0..n).map(|_| next() as f64).collect();
        let intensity: Vec<f64> = (0..n).map(|_| next() as f64).collect();
        Frame::new(k(), distance, intensity, index).unwrap()
    }

    #[test]
    fn sequence_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("seq.ris");
        let frames: Vec<Frame> = (0..3).map(|i| f32_frame(42 + i as u64, i)).collect();
        store_sequence(&frames, &path).unwrap();
        let back = load_sequence(&path).unwrap();
        assert_eq!(frames, back);
    }

    #[test]
    fn empty_sequence_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.ris");
        store_sequence_with(&k(), &[], &path).unwrap();
        let back = load_sequence(&path).unwrap();
        assert!(back.is_empty());
    }

    #[test]
    fn truncated_payload_reports_offset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trunc.ris");
        let frames = vec![f32_frame(7, 0)];
        store_sequence(&frames, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 10]).unwrap();
        match load_sequence(&path) {
            Err(Error::Format { offset, msg }) => {
                assert!(offset > 0);
                assert!(msg.contains("frame 0"), "{msg}");
            }
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn mixed_intrinsics_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut f2 = f32_frame(1, 1);
        f2.intrinsics.fx = 99.0;
        let err = store_sequence(&[f32_frame(0, 0), f2], dir.path().join("x.ris"));
        assert!(matches!(err, Err(Error::InvalidInput(_))));
    }
}
