//! Named-tensor container.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "CTXNMT1\n"                       8-byte magic
//! repeated until end of file:
//!   u32   name length in bytes
//!   [u8]  name, UTF-8
//!   u32   rank
//!   u64   dimension, `rank` times
//!   f64   values, row-major, product(shape) times
//! ```

use std::io::{self, Read, Write};

use super::Tensor;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"CTXNMT1\n";

pub fn write_checkpoint<W: Write>(mut w: W, entries: &[(&str, &Tensor)]) -> io::Result<()> {
    w.write_all(CHECKPOINT_MAGIC)?;
    for (name, t) in entries {
        let bytes = name.as_bytes();
        w.write_all(&(bytes.len() as u32).to_le_bytes())?;
        w.write_all(bytes)?;
        w.write_all(&(t.shape().len() as u32).to_le_bytes())?;
        for &d in t.shape() {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        for v in t.values() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()
}

fn bad(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> io::Result<Vec<(String, Tensor)>> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    if buf.len() < 8 || &buf[..8] != CHECKPOINT_MAGIC {
        return Err(bad("missing CTXNMT1 magic header"));
    }
    let mut pos = 8;
    let mut take = |n: usize, what: &str| -> io::Result<&[u8]> {
        if pos + n > buf.len() {
            return Err(bad(format!("truncated checkpoint while reading {what}")));
        }
        let s = &buf[pos..pos + n];
        pos += n;
        Ok(s)
    };
    let mut out = Vec::new();
    loop {
        // EOF exactly at an entry boundary ends the file
        let name_len = match take(4, "name length") {
            Ok(b) => u32::from_le_bytes(b.try_into().unwrap()) as usize,
            Err(_) => break,
        };
        let name = String::from_utf8(take(name_len, "name")?.to_vec())
            .map_err(|_| bad("tensor name is not UTF-8"))?;
        let rank = u32::from_le_bytes(take(4, "rank")?.try_into().unwrap()) as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(u64::from_le_bytes(take(8, "shape")?.try_into().unwrap()) as usize);
        }
        let n: usize = shape.iter().product();
        let payload = take(n.checked_mul(8).ok_or_else(|| bad("shape overflow"))?, "values")?;
        let values = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let t = Tensor::new(shape, values).map_err(|e| bad(format!("{name}: {e}")))?;
        out.push((name, t));
    }
    if pos != buf.len() {
        return Err(bad("trailing bytes after last tensor"));
    }
    Ok(out)
}
