//! Versioned binary snapshots of a slice.
//!
//! Layout: 8-byte magic, `u32` version, `u64` header length, a JSON header,
//! then every field as little-endian `f64`, point-major with components
//! contiguous, in the order `g`, `K`, `N`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{BrError, Result};
use crate::evolution::SliceState;
use crate::grid::{Field, GridSpec};
use crate::point::FieldValue;

pub const MAGIC: &[u8; 8] = b"BRLABSNP";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    grid: GridSpec,
    t: f64,
    scale: f64,
    fields: Vec<(String, usize)>,
}

fn write_field<T: FieldValue, W: Write>(f: &Field<T>, w: &mut W) -> Result<()> {
    let mut buf = Vec::with_capacity(f.values().len() * T::COMPONENTS * 8);
    for v in f.values() {
        for c in 0..T::COMPONENTS {
            buf.extend_from_slice(&v.component(c).to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_field<T: FieldValue, R: Read>(grid: GridSpec, r: &mut R) -> Result<Field<T>> {
    let mut buf = vec![0u8; grid.len() * T::COMPONENTS * 8];
    r.read_exact(&mut buf).map_err(|e| BrError::Snapshot(format!("truncated field data: {e}")))?;
    let mut chunks = buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")));
    let values = (0..grid.len())
        .map(|_| {
            let mut v = T::default();
            for c in 0..T::COMPONENTS {
                v.set_component(c, chunks.next().expect("sized buffer"));
            }
            v
        })
        .collect();
    Field::from_values(grid, values).map_err(|e| BrError::Snapshot(e.to_string()))
}

pub fn write_snapshot<W: Write>(state: &SliceState, w: &mut W) -> Result<()> {
    let header = Header {
        grid: *state.grid(),
        t: state.t,
        scale: state.scale,
        fields: vec![("g".into(), 6), ("k".into(), 6), ("n".into(), 1)],
    };
    let json = serde_json::to_vec(&header).map_err(|e| BrError::Sink(e.to_string()))?;
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    write_field(&state.g, w)?;
    write_field(&state.k, w)?;
    write_field(&state.n, w)?;
    w.flush()?;
    Ok(())
}

pub fn read_snapshot<R: Read>(r: &mut R) -> Result<SliceState> {
    let bad = |m: String| BrError::Snapshot(m);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|e| bad(format!("missing magic: {e}")))?;
    if &magic != MAGIC {
        return Err(bad("wrong magic bytes".into()));
    }
    let mut word = [0u8; 4];
    r.read_exact(&mut word).map_err(|e| bad(format!("missing version: {e}")))?;
    let version = u32::from_le_bytes(word);
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len).map_err(|e| bad(format!("missing header length: {e}")))?;
    let len = u64::from_le_bytes(len);
    if len > 1 << 20 {
        return Err(bad(format!("header length {len} is implausible")));
    }
    let mut json = vec![0u8; len as usize];
    r.read_exact(&mut json).map_err(|e| bad(format!("truncated header: {e}")))?;
    let header: Header = serde_json::from_slice(&json).map_err(|e| bad(format!("header: {e}")))?;
    let expected = [("g", 6), ("k", 6), ("n", 1)];
    if header.fields.len() != 3 || header.fields.iter().zip(expected).any(|((n, c), (en, ec))| n != en || *c != ec) {
        return Err(bad(format!("unexpected field list {:?}", header.fields)));
    }
    let grid = GridSpec::new(header.grid.n(), header.grid.period()).map_err(|e| bad(e.to_string()))?;
    let g = read_field(grid, r)?;
    let k = read_field(grid, r)?;
    let n = read_field(grid, r)?;
    let state = SliceState {
        t: header.t,
        scale: header.scale,
        g,
        k,
        n,
    };
    state.validate()?;
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{kasner_initial_data_warped, rescale, RescaleFactor};
    use crate::kasner::{CoordinateWarp, KasnerParams};

    fn sample() -> SliceState {
        let grid = GridSpec::new(8, [1.0, 2.0, 0.5]).unwrap();
        let s = kasner_initial_data_warped(
            KasnerParams::axisymmetric(),
            -0.7,
            grid,
            &CoordinateWarp::new(0.1, grid.period()),
        )
        .unwrap();
        rescale(&s, RescaleFactor::new(1.3).unwrap())
    }

    #[test]
    fn round_trip_is_bitwise() {
        let s = sample();
        let mut buf = Vec::new();
        write_snapshot(&s, &mut buf).unwrap();
        let back = read_snapshot(&mut buf.as_slice()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn corrupt_input_is_rejected() {
        let s = sample();
        let mut buf = Vec::new();
        write_snapshot(&s, &mut buf).unwrap();
        let mut wrong_magic = buf.clone();
        wrong_magic[0] = b'X';
        assert!(matches!(read_snapshot(&mut wrong_magic.as_slice()), Err(BrError::Snapshot(_))));
        let mut wrong_version = buf.clone();
        wrong_version[8] = 9;
        assert!(matches!(read_snapshot(&mut wrong_version.as_slice()), Err(BrError::Snapshot(_))));
        let truncated = &buf[..buf.len() - 3];
        assert!(matches!(read_snapshot(&mut &truncated[..]), Err(BrError::Snapshot(_))));
    }
}
