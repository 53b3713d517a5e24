//! File formats: PFM for float maps, 16-bit PGM/PNG for captures and
//! patterns, ASCII PLY for point clouds, JSON for structured records.

pub mod pfm;
pub mod pgm;
pub mod ply;
pub mod png16;

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

/// Whitespace-token reader for netpbm-style headers that tracks byte offsets.
pub(crate) struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn skip_space_and_comments(&mut self) {
        loop {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.pos < self.bytes.len() && self.bytes[self.pos] == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    /// Next token and the offset where it starts.
    pub(crate) fn token(&mut self) -> Result<(usize, String)> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::parse(start, "unexpected end of header"));
        }
        let tok = std::str::from_utf8(&self.bytes[start..self.pos])
            .map_err(|_| Error::parse(start, "non-ASCII header token"))?;
        Ok((start, tok.to_string()))
    }

    pub(crate) fn parse_token<T: std::str::FromStr>(&mut self, what: &str) -> Result<T> {
        let (off, tok) = self.token()?;
        tok.parse().map_err(|_| Error::parse(off, format!("bad {what} {tok:?}")))
    }

    /// Consumes the single whitespace byte that terminates the header.
    pub(crate) fn end_header(&mut self) -> Result<usize> {
        match self.bytes.get(self.pos) {
            Some(b) if b.is_ascii_whitespace() => Ok(self.pos + 1),
            _ => Err(Error::parse(self.pos, "header not terminated by whitespace")),
        }
    }
}

/// Pretty-printed UTF-8 JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| {
        // serde_json reports line/column; convert to a byte offset
        let offset = text
            .split_inclusive('\n')
            .take(e.line().saturating_sub(1))
            .map(str::len)
            .sum::<usize>()
            + e.column().saturating_sub(1);
        Error::parse(offset, e.to_string())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::PinholeCamera;

    #[test]
    fn json_errors_carry_offsets() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cam.json");
        std::fs::write(&p, "{\n  \"fx\": oops\n}").unwrap();
        match read_json::<PinholeCamera>(&p) {
            Err(Error::Parse { offset, .. }) => assert!((8..=12).contains(&offset), "{offset}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cam.json");
        let cam = PinholeCamera::identity(1.0, 2.0, 3.0, 4.0).unwrap();
        write_json(&p, &cam).unwrap();
        assert_eq!(read_json::<PinholeCamera>(&p).unwrap(), cam);
    }
}
