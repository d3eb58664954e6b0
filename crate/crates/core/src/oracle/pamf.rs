//! Flat binary dump of a [`GridField`]: the magic `PAMF`, u32 d, u32 side
//! length and f64 h (20 bytes), then side^d row-major f64 values, all
//! little-endian.

use std::io::{Read, Write};

use super::GridField;
use crate::error::{Error, Result};

pub const PAMF_MAGIC: &[u8; 4] = b"PAMF";

pub fn write_pamf(field: &GridField, mut w: impl Write) -> std::io::Result<()> {
    w.write_all(PAMF_MAGIC)?;
    w.write_all(&(field.d as u32).to_le_bytes())?;
    w.write_all(&(field.side() as u32).to_le_bytes())?;
    w.write_all(&field.h.to_le_bytes())?;
    for v in &field.values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_pamf(mut r: impl Read) -> Result<GridField> {
    let io = |e: std::io::Error| Error::input(format!("PAMF read failed: {e}"));
    let mut header = [0u8; 20];
    r.read_exact(&mut header).map_err(io)?;
    if &header[..4] != PAMF_MAGIC {
        return Err(Error::input("not a PAMF file"));
    }
    let d = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let side = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let h = f64::from_le_bytes(header[12..20].try_into().unwrap());
    if !(d == 1 || d == 2) || side == 0 || !side.is_multiple_of(2) || !(h > 0.0) {
        return Err(Error::input("corrupt PAMF header"));
    }
    let count = side.pow(d as u32);
    let mut bytes = vec![0u8; count * 8];
    r.read_exact(&mut bytes).map_err(io)?;
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(GridField {
        d,
        h,
        extent: side as f64 * h / 2.0,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::SeedSpec;

    #[test]
    fn round_trip() {
        let g = crate::oracle::sample_noise_grid(2, 0.25, 1.0, SeedSpec::new(4, 0)).unwrap();
        let mut buf = Vec::new();
        write_pamf(&g, &mut buf).unwrap();
        assert_eq!(buf.len(), 20 + 64 * 8);
        assert_eq!(&buf[..4], b"PAMF");
        let back = read_pamf(buf.as_slice()).unwrap();
        assert_eq!(back, g);
        assert!(read_pamf(&buf[..30]).is_err());
        buf[0] = b'X';
        assert!(read_pamf(buf.as_slice()).is_err());
    }
}
