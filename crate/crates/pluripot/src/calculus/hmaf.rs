//! The HMAF v1 field file format.
//!
//! Layout (all integers `u32`, all payload values `f64`, little-endian):
//!
//! | field | content |
//! |-------|---------|
//! | magic | the bytes `HMAF` |
//! | version | `1` |
//! | n | complex dimension |
//! | res | common resolution, or `0` if per-axis resolutions follow |
//! | res\[2n\] | only when `res == 0`: resolutions in axis order `x_1, y_1, ...` |
//! | kind | `0` scalar, `1` Hermitian (1,1), `2` form (followed by `p`, `q`) |
//! | payload | point-major values in grid order |
//!
//! Per point the payload holds one value for a scalar field, the `n x n` coefficient
//! matrix row-major as `(re, im)` pairs for a Hermitian field, and the `(I, J)` slot
//! coefficients as `(re, im)` pairs for a form.

use std::io::{Read, Write};

use num_complex::Complex;

use super::field::{HermitianForm11Field, ScalarField};
use super::forms::FormField;
use super::grid::GridSpec;
use crate::algebra::point_form::binom;
use crate::algebra::HermitianMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

const MAGIC: &[u8; 4] = b"HMAF";
const VERSION: u32 = 1;

/// A field read back from an HMAF file.
#[derive(Clone, Debug, PartialEq)]
pub enum HmafField {
    Scalar(ScalarField<f64>),
    Herm11(HermitianForm11Field<f64>),
    Form { p: usize, q: usize, field: FormField<f64> },
}

fn put_u32(w: &mut impl Write, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Format("header value exceeds u32".into()))?;
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_f64(w: &mut impl Write, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn header(w: &mut impl Write, grid: &GridSpec, kind: &[usize]) -> Result<()> {
    w.write_all(MAGIC)?;
    put_u32(w, VERSION as usize)?;
    put_u32(w, grid.dim())?;
    match grid.uniform_res() {
        Some(r) => put_u32(w, r)?,
        None => {
            put_u32(w, 0)?;
            for &r in grid.res() {
                put_u32(w, r)?;
            }
        }
    }
    for &k in kind {
        put_u32(w, k)?;
    }
    Ok(())
}

/// Writes a scalar field.
pub fn write_scalar<T: Real>(w: &mut impl Write, u: &ScalarField<T>) -> Result<()> {
    header(w, u.grid(), &[0])?;
    for &v in u.values() {
        put_f64(w, v.to_f64_lossy())?;
    }
    Ok(())
}

/// Writes a Hermitian (1,1)-form field.
pub fn write_herm11<T: Real>(w: &mut impl Write, f: &HermitianForm11Field<T>) -> Result<()> {
    header(w, f.grid(), &[1])?;
    for i in 0..f.grid().len() {
        for z in f.at(i).to_rows() {
            put_f64(w, z.re.to_f64_lossy())?;
            put_f64(w, z.im.to_f64_lossy())?;
        }
    }
    Ok(())
}

/// Writes the `(p, q)` part of a form field.
pub fn write_form<T: Real>(w: &mut impl Write, f: &FormField<T>, p: usize, q: usize) -> Result<()> {
    header(w, f.grid(), &[2, p, q])?;
    for i in 0..f.grid().len() {
        for z in f.point(i, p, q)?.coeffs() {
            put_f64(w, z.re.to_f64_lossy())?;
            put_f64(w, z.im.to_f64_lossy())?;
        }
    }
    Ok(())
}

fn get_u32(r: &mut impl Read) -> Result<usize> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b) as usize)
}

fn get_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Reads any HMAF v1 field.
pub fn read(r: &mut impl Read) -> Result<HmafField> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = get_u32(r)?;
    if version != VERSION as usize {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n = get_u32(r)?;
    let res = get_u32(r)?;
    let grid = if res == 0 {
        let axes = (0..2 * n).map(|_| get_u32(r)).collect::<Result<Vec<_>>>()?;
        GridSpec::new(n, &axes)?
    } else {
        GridSpec::cube(n, res)?
    };
    let len = grid.len();
    match get_u32(r)? {
        0 => {
            let values = (0..len).map(|_| get_f64(r)).collect::<Result<Vec<_>>>()?;
            Ok(HmafField::Scalar(ScalarField::new(grid, values)?))
        }
        1 => {
            let mut mats = Vec::with_capacity(len);
            for _ in 0..len {
                let mut rows = Vec::with_capacity(n * n);
                for _ in 0..n * n {
                    rows.push(Complex::new(get_f64(r)?, get_f64(r)?));
                }
                mats.push(HermitianMatrix::from_rows(n, &rows)?);
            }
            let probe = HermitianForm11Field::constant(&grid, HermitianMatrix::zeros(n)?)?;
            Ok(HmafField::Herm11(probe.map_points(|i| mats[i])))
        }
        2 => {
            let p = get_u32(r)?;
            let q = get_u32(r)?;
            if p > n || q > n {
                return Err(Error::Format(format!("bidegree ({p},{q}) in dimension {n}")));
            }
            let slots = binom(n, p) * binom(n, q);
            let mut part = vec![Vec::with_capacity(len); slots];
            for _ in 0..len {
                for arr in part.iter_mut() {
                    arr.push(Complex::new(get_f64(r)?, get_f64(r)?));
                }
            }
            Ok(HmafField::Form { p, q, field: FormField::from_part(&grid, p, q, part)? })
        }
        k => Err(Error::Format(format!("unknown kind tag {k}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_header_is_bit_exact() {
        let g = GridSpec::cube(1, 16).unwrap();
        let u = ScalarField::<f64>::constant(&g, 1.0);
        let mut buf = Vec::new();
        write_scalar(&mut buf, &u).unwrap();
        assert_eq!(&buf[..4], b"HMAF");
        assert_eq!(&buf[4..20], &[1, 0, 0, 0, 1, 0, 0, 0, 16, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(buf.len(), 20 + 8 * 256);
        assert_eq!(&buf[20..28], &1.0f64.to_le_bytes());
    }

    #[test]
    fn round_trips_all_kinds() {
        let g = GridSpec::new(2, &[16, 1, 16, 1]).unwrap();
        let u = ScalarField::<f64>::from_fn(&g, |c| c[0] - 0.3 * c[2]);
        let mut buf = Vec::new();
        write_scalar(&mut buf, &u).unwrap();
        assert_eq!(read(&mut buf.as_slice()).unwrap(), HmafField::Scalar(u.clone()));

        let h = crate::calculus::spectral::ddc(&u.map(|v| (6.0 * v).sin())).unwrap();
        let mut buf = Vec::new();
        write_herm11(&mut buf, &h).unwrap();
        match read(&mut buf.as_slice()).unwrap() {
            HmafField::Herm11(back) => assert!(back.sup_distance(&h).unwrap() == 0.0),
            other => panic!("{other:?}"),
        }

        let f = FormField::from_hermitian(&h);
        let mut buf = Vec::new();
        write_form(&mut buf, &f, 1, 1).unwrap();
        match read(&mut buf.as_slice()).unwrap() {
            HmafField::Form { p: 1, q: 1, field } => assert_eq!(field, f),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_corrupt_headers() {
        assert!(read(&mut &b"HMAX"[..]).is_err());
        let mut bad = b"HMAF".to_vec();
        bad.extend_from_slice(&2u32.to_le_bytes());
        assert!(read(&mut bad.as_slice()).is_err());
    }
}
