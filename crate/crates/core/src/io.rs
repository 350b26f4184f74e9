//! Little-endian binary container for space-time fields and frame series.
//!
//! ```text
//! offset  size  field
//!      0     8  magic "HOKDVST1"
//!      8     1  layout: 0 dense space-time, 1 sparse space-time, 2 frames
//!      9     3  zero
//!     12     4  j                              (u32)
//!     16     8  lambda numerator               (u64)
//!     24     8  lambda denominator             (u64)
//!     32     8  lambda                         (f64, informational)
//!     40     8  M, grid points                 (u64)
//!     48     8  T_modes                        (u64)
//!     56     8  dtau (frames: dt)              (f64)
//!     64     8  dense: first cell n0 (i64); frames: t0 (f64); sparse: 0
//!     72     8  dense: row count; otherwise 0  (u64)
//!     80        payload
//! ```
//!
//! Payloads, all values IEEE-754 doubles:
//! * dense — per row: `m: i64` then `T_modes` cells `(re, im)` for
//!   `n = n0 .. n0+T_modes`;
//! * sparse — `T_modes` records `(m: i64, n: i64, re, im)`;
//! * frames — `T_modes` frames of `M` coefficients `(re, im)` in FFT slot
//!   order (slot `i` holds index `i` for `i < M/2`, `i - M` otherwise).
//!
//! For space-time layouts cell `(m, n)` is `ℱu(m/λ, p(m/λ) + nΔτ)`.

use crate::dispersion::DispersionModel;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spacetime::{FrameSeries, Segment, SpaceTimeField};
use crate::torus::{Lambda, SpectralField, TorusGrid};
use num_complex::Complex;
use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

pub const MAGIC: &[u8; 8] = b"HOKDVST1";
const HEADER_LEN: usize = 80;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layout {
    Dense = 0,
    Sparse = 1,
    Frames = 2,
}

struct Header {
    layout: Layout,
    j: u32,
    lambda: Lambda,
    modes: u64,
    t_modes: u64,
    step: f64,
    extra: [u8; 8],
    rows: u64,
}

impl Header {
    fn encode(&self) -> Vec<u8> {
        let mut b = Vec::with_capacity(HEADER_LEN);
        b.extend_from_slice(MAGIC);
        b.push(self.layout as u8);
        b.extend_from_slice(&[0; 3]);
        b.extend_from_slice(&self.j.to_le_bytes());
        b.extend_from_slice(&self.lambda.num().to_le_bytes());
        b.extend_from_slice(&self.lambda.den().to_le_bytes());
        b.extend_from_slice(&self.lambda.value::<f64>().to_le_bytes());
        b.extend_from_slice(&self.modes.to_le_bytes());
        b.extend_from_slice(&self.t_modes.to_le_bytes());
        b.extend_from_slice(&self.step.to_le_bytes());
        b.extend_from_slice(&self.extra);
        b.extend_from_slice(&self.rows.to_le_bytes());
        b
    }

    fn decode(r: &mut impl Read) -> Result<Self> {
        let mut b = [0u8; HEADER_LEN];
        r.read_exact(&mut b).map_err(|_| Error::Format("truncated header".into()))?;
        if &b[..8] != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let layout = match b[8] {
            0 => Layout::Dense,
            1 => Layout::Sparse,
            2 => Layout::Frames,
            x => return Err(Error::Format(format!("unknown layout {x}"))),
        };
        let u64_at = |o: usize| u64::from_le_bytes(b[o..o + 8].try_into().unwrap());
        let lambda = Lambda::rational(u64_at(16), u64_at(24))
            .map_err(|e| Error::Format(format!("bad lambda: {e}")))?;
        Ok(Header {
            layout,
            j: u32::from_le_bytes(b[12..16].try_into().unwrap()),
            lambda,
            modes: u64_at(40),
            t_modes: u64_at(48),
            step: f64::from_le_bytes(b[56..64].try_into().unwrap()),
            extra: b[64..72].try_into().unwrap(),
            rows: u64_at(72),
        })
    }

    fn grid(&self) -> Result<(DispersionModel, TorusGrid)> {
        let model = DispersionModel::new(self.j, self.lambda).map_err(|e| Error::Format(e.to_string()))?;
        let grid = TorusGrid::new(self.lambda, self.modes as usize).map_err(|e| Error::Format(e.to_string()))?;
        Ok((model, grid))
    }
}

fn put_c<T: Real>(out: &mut Vec<u8>, c: Complex<T>) {
    out.extend_from_slice(&c.re.f64().to_le_bytes());
    out.extend_from_slice(&c.im.f64().to_le_bytes());
}

fn take<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b).map_err(|_| Error::Format("truncated payload".into()))?;
    Ok(b)
}

fn take_f64(r: &mut impl Read) -> Result<f64> {
    Ok(f64::from_le_bytes(take::<8>(r)?))
}

fn take_i64(r: &mut impl Read) -> Result<i64> {
    Ok(i64::from_le_bytes(take::<8>(r)?))
}

fn take_c<T: Real>(r: &mut impl Read) -> Result<Complex<T>> {
    let re = take_f64(r)?;
    let im = take_f64(r)?;
    Ok(Complex::new(T::lit(re), T::lit(im)))
}

/// Serialize a space-time field. The dense layout pads every row to the
/// common cell range; sparse stores only the stored cells.
pub fn encode_spacetime<T: Real>(u: &SpaceTimeField<T>, layout: Layout) -> Result<Vec<u8>> {
    let model = u.model();
    let mut header = Header {
        layout,
        j: model.j(),
        lambda: model.lambda(),
        modes: u.grid().modes() as u64,
        t_modes: 0,
        step: u.dtau().f64(),
        extra: [0; 8],
        rows: 0,
    };
    let mut payload = Vec::new();
    match layout {
        Layout::Dense => {
            let (lo, hi) = u.sigma_extent().unwrap_or((0, -1));
            header.t_modes = (hi - lo + 1) as u64;
            header.extra = lo.to_le_bytes();
            header.rows = u.rows().len() as u64;
            for &m in u.rows().keys() {
                payload.extend_from_slice(&m.to_le_bytes());
                for n in lo..=hi {
                    put_c(&mut payload, u.get(m, n));
                }
            }
        }
        Layout::Sparse => {
            header.t_modes = u.cell_count() as u64;
            for (m, n, v) in u.cells() {
                payload.extend_from_slice(&m.to_le_bytes());
                payload.extend_from_slice(&n.to_le_bytes());
                put_c(&mut payload, v);
            }
        }
        Layout::Frames => return Err(Error::InvalidInput("frames layout is for frame series".into())),
    }
    let mut out = header.encode();
    out.extend(payload);
    Ok(out)
}

pub fn decode_spacetime<T: Real>(r: &mut impl Read) -> Result<SpaceTimeField<T>> {
    let h = Header::decode(r)?;
    let (model, grid) = h.grid()?;
    let mut rows: BTreeMap<i64, Vec<Segment<T>>> = BTreeMap::new();
    match h.layout {
        Layout::Dense => {
            let n0 = i64::from_le_bytes(h.extra);
            for _ in 0..h.rows {
                let m = take_i64(r)?;
                let values = (0..h.t_modes).map(|_| take_c(r)).collect::<Result<Vec<_>>>()?;
                rows.insert(m, vec![Segment { start: n0, values }]);
            }
        }
        Layout::Sparse => {
            let mut out = SpaceTimeField::new(model, grid, T::lit(h.step))?;
            for _ in 0..h.t_modes {
                let m = take_i64(r)?;
                let n = take_i64(r)?;
                out.accumulate(m, n, &[take_c(r)?])?;
            }
            return Ok(out);
        }
        Layout::Frames => return Err(Error::Format("container holds frames, not a space-time field".into())),
    }
    for &m in rows.keys() {
        if grid.slot(m).is_none() {
            return Err(Error::Format(format!("row {m} outside lattice")));
        }
    }
    let probe = SpaceTimeField::<T>::new(model, grid, T::lit(h.step))?;
    Ok(SpaceTimeField::from_parts(*probe.model(), *probe.grid(), probe.dtau(), rows))
}

pub fn encode_frames<T: Real>(model: &DispersionModel, series: &FrameSeries<T>) -> Result<Vec<u8>> {
    let grid = match series.frames.first() {
        Some(f) => *f.grid(),
        None => return Err(Error::InvalidInput("empty frame series".into())),
    };
    let header = Header {
        layout: Layout::Frames,
        j: model.j(),
        lambda: model.lambda(),
        modes: grid.modes() as u64,
        t_modes: series.len() as u64,
        step: series.dt.f64(),
        extra: series.t0.f64().to_le_bytes(),
        rows: 0,
    };
    let mut out = header.encode();
    for f in &series.frames {
        for &c in f.slots() {
            put_c(&mut out, c);
        }
    }
    Ok(out)
}

pub fn decode_frames<T: Real>(r: &mut impl Read) -> Result<(DispersionModel, FrameSeries<T>)> {
    let h = Header::decode(r)?;
    if h.layout != Layout::Frames {
        return Err(Error::Format("container does not hold frames".into()));
    }
    let (model, grid) = h.grid()?;
    let mut frames = Vec::with_capacity(h.t_modes as usize);
    for _ in 0..h.t_modes {
        let slots = (0..h.modes).map(|_| take_c(r)).collect::<Result<Vec<_>>>()?;
        frames.push(SpectralField::from_slots(grid, slots)?);
    }
    let t0 = f64::from_le_bytes(h.extra);
    Ok((model, FrameSeries::new(T::lit(t0), T::lit(h.step), frames)?))
}

/// Write `bytes` to `path` via a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}
