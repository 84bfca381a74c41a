//! Binary key file: `"PAK1"`, bit count as little-endian `u64`, then the
//! packed payload of `ceil(count / 8)` bytes, MSB first, zero padded.

use std::fs;
use std::path::Path;

use crate::bits::BitString;
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"PAK1";
const HEADER_LEN: usize = 12;

pub fn encode(bits: &BitString) -> Vec<u8> {
    let payload = bits.to_bytes();
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&(bits.len() as u64).to_le_bytes());
    out.extend_from_slice(&payload);
    out
}

pub fn decode(bytes: &[u8]) -> Result<BitString> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!("key file too short ({} bytes)", bytes.len())));
    }
    if bytes[..4] != MAGIC {
        return Err(Error::Format("bad magic, expected PAK1".into()));
    }
    let count = u64::from_le_bytes(bytes[4..HEADER_LEN].try_into().expect("8-byte slice"));
    let len = usize::try_from(count).map_err(|_| Error::Format(format!("bit count {count} too large")))?;
    BitString::from_bytes(&bytes[HEADER_LEN..], len)
}

pub fn read(path: &Path) -> Result<BitString> {
    let bytes = fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    decode(&bytes)
}

pub fn write(path: &Path, bits: &BitString) -> Result<()> {
    fs::write(path, encode(bits)).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
