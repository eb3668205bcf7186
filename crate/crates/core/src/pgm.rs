//! 16-bit binary PGM (P5, maxval 65535) import/export for label maps.
//!
//! Label 0 is reserved for background/clipped pixels. Samples are stored
//! big-endian per the PGM convention.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::{Error, Result};

pub fn write_pgm16(path: impl AsRef<Path>, width: usize, height: usize, data: &[u16]) -> Result<()> {
    if data.len() != width * height {
        return Err(Error::DimensionMismatch(format!(
            "pgm payload {} != {width}x{height}",
            data.len()
        )));
    }
    let mut w = BufWriter::new(File::create(path.as_ref())?);
    write!(w, "P5\n{width} {height}\n65535\n")?;
    for &v in data {
        w.write_all(&v.to_be_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_pgm16(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<u16>)> {
    let mut r = BufReader::new(File::open(path.as_ref())?);
    let mut header = Vec::new();
    // header: three whitespace-delimited fields after the magic
    let mut fields = Vec::new();
    let mut byte = [0u8; 1];
    let mut cur = String::new();
    let mut in_comment = false;
    while fields.len() < 4 {
        r.read_exact(&mut byte).map_err(|_| Error::Format { offset: header.len() as u64, msg: "truncated pgm header".into() })?;
        header.push(byte[0]);
        let c = byte[0] as char;
        if in_comment {
            if c == '\n' {
                in_comment = false;
            }
            continue;
        }
        if c == '#' {
            in_comment = true;
        } else if c.is_ascii_whitespace() {
            if !cur.is_empty() {
                fields.push(std::mem::take(&mut cur));
            }
        } else {
            cur.push(c);
        }
    }
    if fields[0] != "P5" {
        return Err(Error::Format { offset: 0, msg: "expected P5 pgm".into() });
    }
    let width: usize = fields[1].parse().map_err(|_| Error::Format { offset: 2, msg: "bad width".into() })?;
    let height: usize = fields[2].parse().map_err(|_| Error::Format { offset: 2, msg: "bad height".into() })?;
    let maxval: u32 = fields[3].parse().map_err(|_| Error::Format { offset: 2, msg: "bad maxval".into() })?;
    if maxval != 65535 {
        return Err(Error::Format { offset: 2, msg: format!("expected maxval 65535, got {maxval}") });
    }
    let mut bytes = vec![0u8; width * height * 2];
    r.read_exact(&mut bytes).map_err(|_| Error::Format { offset: header.len() as u64, msg: "truncated pgm payload".into() })?;
    let data = bytes.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect();
    Ok((width, height, data))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.pgm");
        let data: Vec<u16> = (0..12).map(|i| (i * 4097) as u16).collect();
        write_pgm16(&path, 4, 3, &data).unwrap();
        let (w, h, back) = read_pgm16(&path).unwrap();
        assert_eq!((w, h), (4, 3));
        assert_eq!(back, data);
    }

    #[test]
    fn payload_size_checked() {
        let dir = tempfile::tempdir().unwrap();
        assert!(write_pgm16(dir.path().join("bad.pgm"), 4, 3, &[0u16; 5]).is_err());
    }
}
