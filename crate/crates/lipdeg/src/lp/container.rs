//! Binary GridForm container: the magic `GFRM`, then little-endian
//! u32 d, u32 p, u32 N, f64 T, followed by the C(d, p) component planes
//! as f64 in component order.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::{Grid, GridForm};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"GFRM";
const HEADER: usize = 24;

pub fn write_container<W: Write>(mut w: W, a: &GridForm) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(a.grid.dim as u32)?;
    w.write_u32::<LittleEndian>(a.degree as u32)?;
    w.write_u32::<LittleEndian>(a.grid.n as u32)?;
    w.write_f64::<LittleEndian>(a.grid.period)?;
    for c in &a.components {
        for &v in c {
            w.write_f64::<LittleEndian>(v)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn truncated(offset: usize, what: &str) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::parse(format!("byte {offset}"), format!("truncated {what}: {e}"))
}

pub fn read_container<R: Read>(mut r: R) -> Result<GridForm> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(truncated(0, "magic"))?;
    if &magic != MAGIC {
        return Err(Error::parse("byte 0", "missing GFRM magic"));
    }
    let d = r.read_u32::<LittleEndian>().map_err(truncated(4, "dimension"))? as usize;
    let p = r.read_u32::<LittleEndian>().map_err(truncated(8, "degree"))? as usize;
    let n = r.read_u32::<LittleEndian>().map_err(truncated(12, "resolution"))? as usize;
    let t = r.read_f64::<LittleEndian>().map_err(truncated(16, "period"))?;
    let grid = Grid::new(d, n, t)?;
    let mut a = GridForm::zeros(grid, p)?;
    let plane = grid.points() * 8;
    for (ci, c) in a.components.iter_mut().enumerate() {
        r.read_f64_into::<LittleEndian>(c).map_err(|e| {
            Error::parse(format!("byte {} (component {ci})", HEADER + ci * plane), format!("truncated data: {e}"))
        })?;
    }
    Ok(a)
}
