//! `FBF1` binary field files.
//!
//! Layout: magic `FBF1`, then little-endian `u32`s `version (=1)`, `dim`,
//! `points_per_axis` once per axis, component count (`1`, `dim` or `dim^2`)
//! and dtype (`0` real f64, `1` complex f64 pairs), followed by the raw
//! samples, component-major and C-order inside each component. The torus
//! period is not stored.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{Field, MatrixField, ScalarField, VectorField};
use crate::grid::Grid;

pub const MAGIC: &[u8; 4] = b"FBF1";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u32)]
pub enum Dtype {
    Real = 0,
    Complex = 1,
}

fn put_u32<W: Write>(w: &mut W, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn get_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn get_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn write<W: Write>(w: &mut W, field: &Field, dtype: Dtype) -> Result<()> {
    let grid = field.grid();
    let comps = field.scalar_components();
    w.write_all(MAGIC)?;
    put_u32(w, VERSION)?;
    put_u32(w, grid.dim() as u32)?;
    for _ in 0..grid.dim() {
        put_u32(w, grid.points_per_axis() as u32)?;
    }
    put_u32(w, comps.len() as u32)?;
    put_u32(w, dtype as u32)?;
    for c in comps {
        for v in c.values() {
            w.write_all(&v.re.to_le_bytes())?;
            if dtype == Dtype::Complex {
                w.write_all(&v.im.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

/// Read a field; `period` comes from the run configuration.
pub fn read<R: Read>(r: &mut R, period: f64) -> Result<Field> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let version = get_u32(r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let dim = get_u32(r)? as usize;
    if dim != 2 && dim != 3 {
        return Err(Error::Format(format!("unsupported dim {dim}")));
    }
    let mut sizes = Vec::with_capacity(dim);
    for _ in 0..dim {
        sizes.push(get_u32(r)? as usize);
    }
    if sizes.iter().any(|&s| s != sizes[0]) {
        return Err(Error::Format(format!("non-cubic grid {sizes:?}")));
    }
    let grid = Grid::new(dim, sizes[0], period)?;
    let ncomp = get_u32(r)? as usize;
    let dtype = match get_u32(r)? {
        0 => Dtype::Real,
        1 => Dtype::Complex,
        d => return Err(Error::Format(format!("unknown dtype {d}"))),
    };
    if ncomp != 1 && ncomp != dim && ncomp != dim * dim {
        return Err(Error::Format(format!("component count {ncomp} invalid for dim {dim}")));
    }
    let mut comps = Vec::with_capacity(ncomp);
    for _ in 0..ncomp {
        let mut vals = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            let re = get_f64(r)?;
            let im = if dtype == Dtype::Complex { get_f64(r)? } else { 0.0 };
            vals.push(Complex64::new(re, im));
        }
        comps.push(ScalarField::new(grid, vals)?);
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(Error::Format("trailing bytes after samples".into()));
    }
    Ok(match ncomp {
        1 => Field::Scalar(comps.pop().expect("one component")),
        n if n == dim => Field::Vector(VectorField::new(comps)?),
        _ => Field::Matrix(MatrixField::new(comps, false)?),
    })
}

pub fn save(path: impl AsRef<Path>, field: &Field, dtype: Dtype) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write(&mut w, field, dtype)?;
    w.flush()?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>, period: f64) -> Result<Field> {
    let mut r = BufReader::new(File::open(path)?);
    read(&mut r, period)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let g = Grid::unit(2, 16).unwrap();
        let f: Field = ScalarField::zeros(g).into();
        let mut buf = Vec::new();
        write(&mut buf, &f, Dtype::Real).unwrap();
        assert_eq!(&buf[..4], b"FBF1");
        let words: Vec<u32> =
            buf[4..28].chunks(4).map(|c| u32::from_le_bytes(c.try_into().unwrap())).collect();
        assert_eq!(words, vec![1, 2, 16, 16, 1, 0]);
        assert_eq!(buf.len(), 28 + 8 * 256);
    }

    #[test]
    fn rejects_truncated_and_garbage() {
        assert!(read(&mut &b"FBF2"[..], 1.0).is_err());
        let g = Grid::unit(2, 16).unwrap();
        let mut buf = Vec::new();
        write(&mut buf, &ScalarField::zeros(g).into(), Dtype::Real).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(read(&mut buf.as_slice(), 1.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn roundtrip_is_bit_exact(seed in any::<u64>(), complex in any::<bool>(), rank in 0usize..3) {
            let g = Grid::unit(2, 16).unwrap();
            let mk = |k: u64| {
                let vals = (0..g.len()).map(|i| {
                    let x = ((seed ^ k).wrapping_mul(6364136223846793005).wrapping_add(i as u64)) as f64;
                    Complex64::new(x.sin() * 1e3, if complex { x.cos() } else { 0.0 })
                }).collect();
                ScalarField::new(g, vals).unwrap()
            };
            let field: Field = match rank {
                0 => mk(0).into(),
                1 => VectorField::new(vec![mk(1), mk(2)]).unwrap().into(),
                _ => MatrixField::new(vec![mk(3), mk(4), mk(5), mk(6)], false).unwrap().into(),
            };
            let dtype = if complex { Dtype::Complex } else { Dtype::Real };
            let mut buf = Vec::new();
            write(&mut buf, &field, dtype).unwrap();
            let back = read(&mut buf.as_slice(), 1.0).unwrap();
            for (a, b) in field.scalar_components().iter().zip(back.scalar_components()) {
                for (x, y) in a.values().iter().zip(b.values()) {
                    prop_assert_eq!(x.re.to_bits(), y.re.to_bits());
                    prop_assert_eq!(x.im.to_bits(), y.im.to_bits());
                }
            }
        }
    }
}
