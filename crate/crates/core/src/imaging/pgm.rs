//! Binary PGM (P5). Written as 16-bit big-endian with maxval 65535; 8-bit
//! files are accepted on read and widened.

use std::fs;
use std::path::Path;

use super::{DepthMap, IntensityImage};
use crate::error::{Error, IoContext, Result};

/// Decoded PGM raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub data: Vec<u16>,
}

pub fn write_pgm(path: &Path, width: usize, height: usize, data: &[u16]) -> Result<()> {
    let mut buf = format!("P5\n{width} {height}\n65535\n").into_bytes();
    buf.reserve(data.len() * 2);
    for v in data {
        buf.extend_from_slice(&v.to_be_bytes());
    }
    fs::write(path, buf).at(path)
}

pub fn write_pgm_intensity(path: &Path, img: &IntensityImage) -> Result<()> {
    write_pgm(path, img.width(), img.height(), img.pixels())
}

pub fn write_pgm_depth(path: &Path, depth: &DepthMap) -> Result<()> {
    write_pgm(path, depth.width(), depth.height(), depth.depths())
}

pub fn read_pgm(path: &Path) -> Result<Pgm> {
    let bytes = fs::read(path).at(path)?;
    parse_pgm(&bytes).map_err(|reason| Error::Format {
        path: path.to_path_buf(),
        reason,
    })
}

pub fn read_pgm_intensity(path: &Path) -> Result<IntensityImage> {
    let p = read_pgm(path)?;
    IntensityImage::new(p.width, p.height, widen(p.maxval, p.data))
}

/// Depth values are stored verbatim in millimetres.
pub fn read_pgm_depth(path: &Path) -> Result<DepthMap> {
    let p = read_pgm(path)?;
    DepthMap::new(p.width, p.height, p.data)
}

fn widen(maxval: u16, data: Vec<u16>) -> Vec<u16> {
    if maxval == u16::MAX {
        return data;
    }
    let scale = f64::from(u16::MAX) / f64::from(maxval);
    data.into_iter()
        .map(|v| (f64::from(v) * scale).round().min(65535.0) as u16)
        .collect()
}

fn parse_pgm(bytes: &[u8]) -> std::result::Result<Pgm, String> {
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err("truncated header".into());
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    // single whitespace byte separates header and raster
    pos += 1;
    if fields[0] != "P5" {
        return Err(format!("unsupported magic {:?}", fields[0]));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|e| format!("bad header field {s:?}: {e}"));
    let (width, height, maxval) = (num(&fields[1])?, num(&fields[2])?, num(&fields[3])?);
    if width == 0 || height == 0 || maxval == 0 || maxval > 65535 {
        return Err(format!("bad header {width}x{height} maxval {maxval}"));
    }
    let n = width * height;
    let raster = bytes.get(pos..).unwrap_or_default();
    let data = if maxval < 256 {
        if raster.len() < n {
            return Err("truncated raster".into());
        }
        raster[..n].iter().map(|&b| u16::from(b)).collect()
    } else {
        if raster.len() < 2 * n {
            return Err("truncated raster".into());
        }
        raster[..2 * n]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    };
    Ok(Pgm {
        width,
        height,
        maxval: maxval as u16,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_16bit() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.pgm");
        let img = IntensityImage::from_fn(3, 2, |x, y| (x * 1000 + y * 30000) as u16);
        write_pgm_intensity(&path, &img).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert!(bytes.starts_with(b"P5\n3 2\n65535\n"));
        assert_eq!(bytes.len(), 13 + 12);
        assert_eq!(read_pgm_intensity(&path).unwrap(), img);
    }

    #[test]
    fn reads_8bit_with_comments() {
        let mut bytes = b"P5\n# comment\n2 1\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 255]);
        let p = parse_pgm(&bytes).unwrap();
        assert_eq!(p.data, vec![0, 255]);
        assert_eq!(widen(p.maxval, p.data), vec![0, 65535]);
    }

    #[test]
    fn rejects_truncated() {
        assert!(parse_pgm(b"P5\n2 2\n65535\n\x00\x01").is_err());
        assert!(parse_pgm(b"P2\n1 1\n255\n1").is_err());
    }
}
