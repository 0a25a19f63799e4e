//! Binary PGM (P5, maxval 255) reader and writer.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::GrayImage;

/// Decodes a P5 file. Header comments (`#` to end of line) are tolerated;
/// trailing bytes after the payload are ignored.
pub fn decode_pgm(data: &[u8]) -> Result<GrayImage> {
    let mut cur = HeaderCursor { data, pos: 0 };
    let magic = cur.token()?;
    if magic != b"P5" {
        return Err(Error::PgmHeader(format!(
            "expected magic P5, found {:?}",
            String::from_utf8_lossy(magic)
        )));
    }
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval = cur.number("max-value")?;
    if maxval != 255 {
        return Err(Error::PgmMaxValue(maxval));
    }
    // Exactly one whitespace byte separates the header from the raster.
    match data.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(Error::PgmHeader("missing whitespace after max-value".into())),
    }
    let (width, height) = (width as usize, height as usize);
    if width == 0 || height == 0 {
        return Err(Error::PgmHeader(format!("zero dimension {width}x{height}")));
    }
    let expected = width
        .checked_mul(height)
        .ok_or_else(|| Error::PgmHeader("dimensions overflow".into()))?;
    let payload = &data[cur.pos..];
    if payload.len() < expected {
        return Err(Error::PgmTruncated {
            expected,
            found: payload.len(),
        });
    }
    GrayImage::new(width, height, payload[..expected].to_vec())
}

/// Canonical encoding: `P5\n<w> <h>\n255\n` followed by the raster.
pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", img.width(), img.height());
    let mut out = Vec::with_capacity(header.len() + img.len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(img.pixels());
    out
}

pub fn load_gray_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let data = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&data)
}

pub fn save_gray_image(path: impl AsRef<Path>, img: &GrayImage) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(img)).map_err(|e| Error::io(path, e))
}

struct HeaderCursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.data.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.data.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Result<&'a [u8]> {
        self.skip_space_and_comments();
        let start = self.pos;
        while let Some(&b) = self.data.get(self.pos) {
            if b.is_ascii_whitespace() || b == b'#' {
                break;
            }
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::PgmHeader("unexpected end of header".into()));
        }
        Ok(&self.data[start..self.pos])
    }

    fn number(&mut self, field: &str) -> Result<u32> {
        let tok = self.token()?;
        std::str::from_utf8(tok)
            .ok()
            .filter(|s| s.bytes().all(|b| b.is_ascii_digit()))
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| {
                Error::PgmHeader(format!(
                    "invalid {field} {:?}",
                    String::from_utf8_lossy(tok)
                ))
            })
    }
}
