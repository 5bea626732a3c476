//! Binary time-tag files.
//!
//! Layout (little-endian): the magic bytes `TTAG`, a version byte `0x01`,
//! then one 9-byte record per tag: `u64` timestamp in picoseconds followed
//! by a `u8` channel (0 = signal, 1 = idler). The file does not store the
//! acquisition duration.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::{Channel, Tag, TagStream};

pub const MAGIC: &[u8; 4] = b"TTAG";
pub const VERSION: u8 = 0x01;
const RECORD: usize = 9;

#[derive(Debug, Error)]
pub enum TtagError {
    #[error("not a TTAG file")]
    BadMagic,
    #[error("unsupported TTAG version {0}")]
    BadVersion(u8),
    #[error("truncated record at byte {0}")]
    Truncated(usize),
    #[error("invalid channel byte {byte} in record {record}")]
    BadChannel { record: usize, byte: u8 },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn encode(tags: &[Tag]) -> Vec<u8> {
    let mut out = Vec::with_capacity(5 + RECORD * tags.len());
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    for t in tags {
        out.extend_from_slice(&t.time_ps.to_le_bytes());
        out.push(t.channel as u8);
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<Vec<Tag>, TtagError> {
    if bytes.len() < 5 || &bytes[..4] != MAGIC {
        return Err(TtagError::BadMagic);
    }
    if bytes[4] != VERSION {
        return Err(TtagError::BadVersion(bytes[4]));
    }
    let body = &bytes[5..];
    if body.len() % RECORD != 0 {
        return Err(TtagError::Truncated(5 + body.len() / RECORD * RECORD));
    }
    body.chunks_exact(RECORD)
        .enumerate()
        .map(|(record, r)| {
            let time_ps = u64::from_le_bytes(r[..8].try_into().expect("8 bytes"));
            let channel = Channel::from_byte(r[8]).ok_or(TtagError::BadChannel { record, byte: r[8] })?;
            Ok(Tag { time_ps, channel })
        })
        .collect()
}

pub fn write_stream(w: &mut impl Write, stream: &TagStream) -> Result<(), TtagError> {
    w.write_all(&encode(&stream.tags))?;
    Ok(())
}

/// Reads a tag file. The duration is taken as the last timestamp.
pub fn read_stream(r: &mut impl Read) -> Result<TagStream, TtagError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let tags = decode(&bytes)?;
    let duration_s = tags.iter().map(|t| t.time_ps).max().unwrap_or(0) as f64 * 1e-12;
    Ok(TagStream { tags, duration_s })
}

pub fn write_file(path: &Path, stream: &TagStream) -> Result<(), TtagError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_stream(&mut w, stream)?;
    w.flush()?;
    Ok(())
}

pub fn read_file(path: &Path) -> Result<TagStream, TtagError> {
    read_stream(&mut BufReader::new(File::open(path)?))
}
