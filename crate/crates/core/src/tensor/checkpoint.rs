//! `trajseg-ckpt-v1` parameter files.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "trajseg-ckpt-v1\n"
//! u32 descriptor length, descriptor bytes (UTF-8, opaque to this module)
//! u32 parameter count
//! per parameter:
//!   u32 name length, name bytes
//!   u32 rank, u64 per axis
//!   f64 values
//! ```

use std::io::{Read, Write};

use super::{Param, Tensor};
use crate::error::{Error, Result};

pub const CKPT_MAGIC: &[u8] = b"trajseg-ckpt-v1\n";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub descriptor: String,
    pub params: Vec<(String, Tensor)>,
}

pub fn write_checkpoint<W: Write>(mut w: W, descriptor: &str, params: &[Param]) -> Result<()> {
    w.write_all(CKPT_MAGIC)?;
    w.write_all(&(descriptor.len() as u32).to_le_bytes())?;
    w.write_all(descriptor.as_bytes())?;
    w.write_all(&(params.len() as u32).to_le_bytes())?;
    for p in params {
        w.write_all(&(p.name.len() as u32).to_le_bytes())?;
        w.write_all(p.name.as_bytes())?;
        let shape = p.value.shape();
        w.write_all(&(shape.len() as u32).to_le_bytes())?;
        for &d in shape {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(p.value.len() * 8);
        for v in p.value.data() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_string<R: Read>(r: &mut R, len: usize) -> Result<String> {
    let mut b = vec![0; len];
    r.read_exact(&mut b)?;
    String::from_utf8(b).map_err(|e| Error::Format(format!("checkpoint string: {e}")))
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Checkpoint> {
    let mut magic = [0; 16];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Format("checkpoint too short".into()))?;
    if magic != CKPT_MAGIC {
        return Err(Error::Format("not a trajseg-ckpt-v1 file".into()));
    }
    let dlen = read_u32(&mut r)? as usize;
    let descriptor = read_string(&mut r, dlen)?;
    let count = read_u32(&mut r)? as usize;
    let mut params = Vec::with_capacity(count);
    for _ in 0..count {
        let nlen = read_u32(&mut r)? as usize;
        let name = read_string(&mut r, nlen)?;
        let rank = read_u32(&mut r)? as usize;
        if rank > 3 {
            return Err(Error::Format(format!("parameter `{name}` has rank {rank}")));
        }
        let shape: Vec<usize> = (0..rank)
            .map(|_| read_u64(&mut r).map(|d| d as usize))
            .collect::<Result<_>>()?;
        let n: usize = shape.iter().product();
        let mut raw = vec![0u8; n * 8];
        r.read_exact(&mut raw)?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        params.push((name, Tensor::from_vec(&shape, data)?));
    }
    Ok(Checkpoint { descriptor, params })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_bad_magic() {
        let params = vec![
            Param::new("conv.w", Tensor::from_vec(&[2, 1, 3], vec![1.0, -2.5, 3.0, 0.0, 1e-300, -0.0]).unwrap()),
            Param::new("b", Tensor::from_vec(&[2], vec![f64::MIN_POSITIVE, 7.0]).unwrap()),
        ];
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, "{\"x\":1}", &params).unwrap();
        assert!(buf.starts_with(CKPT_MAGIC));
        let ck = read_checkpoint(&buf[..]).unwrap();
        assert_eq!(ck.descriptor, "{\"x\":1}");
        assert_eq!(ck.params.len(), 2);
        assert_eq!(ck.params[0].0, "conv.w");
        assert_eq!(ck.params[0].1, params[0].value);
        assert_eq!(ck.params[1].1, params[1].value);
        assert!(read_checkpoint(&b"trajseg-ckpt-v0\n"[..]).is_err());
        assert!(read_checkpoint(&buf[..buf.len() - 3]).is_err());
    }
}
