//! Binary PGM (P5) encode/decode, 8-bit only. The writer emits one fixed
//! header layout so identical pixels always produce identical bytes.

use std::fs;
use std::path::Path;

use crate::data::image::GrayU8;
use crate::error::{Error, Result};

pub fn to_bytes(img: &GrayU8) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.w, img.h).into_bytes();
    out.extend_from_slice(&img.px);
    out
}

pub fn from_bytes(bytes: &[u8], origin: &str) -> Result<GrayU8> {
    let bad = |msg: &str| Error::Input(format!("{origin}: {msg}"));
    let mut pos = 0usize;

    // token reader: skips whitespace and '#' comments
    let token = |bytes: &[u8], pos: &mut usize| -> Result<Vec<u8>> {
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
                continue;
            }
            break;
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if start == *pos {
            return Err(bad("truncated header"));
        }
        Ok(bytes[start..*pos].to_vec())
    };

    if token(bytes, &mut pos)? != b"P5" {
        return Err(bad("not a binary PGM (missing P5 magic)"));
    }
    let num = |bytes: &[u8], pos: &mut usize, what: &str| -> Result<usize> {
        let t = token(bytes, pos)?;
        std::str::from_utf8(&t)
            .ok()
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| bad(&format!("bad {what}")))
    };
    let w = num(bytes, &mut pos, "width")?;
    let h = num(bytes, &mut pos, "height")?;
    let maxval = num(bytes, &mut pos, "maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(bad(&format!("unsupported maxval {maxval}")));
    }
    // exactly one whitespace byte separates maxval from the raster
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(bad("missing raster separator"));
    }
    pos += 1;
    if bytes.len() < pos + w * h {
        return Err(bad(&format!(
            "raster truncated: need {} bytes, have {}",
            w * h,
            bytes.len() - pos
        )));
    }
    GrayU8::new(h, w, bytes[pos..pos + w * h].to_vec())
}

pub fn write(path: &Path, img: &GrayU8) -> Result<()> {
    fs::write(path, to_bytes(img)).map_err(|e| Error::io(path, e))
}

pub fn read(path: &Path) -> Result<GrayU8> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout_is_fixed() {
        let img = GrayU8::new(2, 3, vec![10, 20, 30, 40, 50, 60]).unwrap();
        let bytes = to_bytes(&img);
        assert_eq!(&bytes[..10], b"P5\n3 2\n255");
        assert_eq!(bytes.len(), 11 + 6);
    }

    #[test]
    fn roundtrip_is_exact() {
        let img = GrayU8::new(3, 5, (0u8..15).collect()).unwrap();
        let back = from_bytes(&to_bytes(&img), "test").unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn tolerant_reader_accepts_comments_and_spacing() {
        let mut bytes = b"P5 # magic\n# a comment line\n  3\t2 # dims\n255 ".to_vec();
        bytes.extend_from_slice(&[1, 2, 3, 4, 5, 6]);
        let img = from_bytes(&bytes, "test").unwrap();
        assert_eq!((img.h, img.w), (2, 3));
        assert_eq!(img.px, vec![1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn rejects_malformed_inputs() {
        assert!(from_bytes(b"P6\n1 1\n255\nx", "t").is_err());
        assert!(from_bytes(b"P5\n2 2\n255\nab", "t").is_err()); // truncated raster
        assert!(from_bytes(b"P5\n1 1\n65535\n\0\0", "t").is_err()); // 16-bit
        assert!(from_bytes(b"P5\n-1 1\n255\nx", "t").is_err());
        assert!(from_bytes(b"P5\n1 1", "t").is_err());
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.pgm");
        let img = GrayU8::new(4, 4, (0u8..16).map(|v| v * 16).collect()).unwrap();
        write(&path, &img).unwrap();
        assert_eq!(read(&path).unwrap(), img);
        assert!(read(&dir.path().join("missing.pgm")).is_err());
    }
}
