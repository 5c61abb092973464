//! Binary sidecar files for measurement operators.
//!
//! Layout (all integers `u64` little-endian, all entries `f64` little-endian):
//!
//! ```text
//! magic       8 bytes  "MODEWISE"
//! version     1 byte   1
//! variant     1 byte   0 = vectorized, 1 = modewise, 2 = two-stage
//! d           u64      number of input modes
//! shape       d × u64  input shape
//! vectorized: matrix
//! modewise:   kappa, count, count × matrix
//! two-stage:  kappa, count, count × matrix, matrix
//! matrix      rows u64, cols u64, rows·cols × f64 (row-major)
//! ```

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::measurement::MeasurementOperator;
use crate::tensor::{Matrix, ReshapePlan};

pub const SIDECAR_MAGIC: &[u8; 8] = b"MODEWISE";
pub const SIDECAR_VERSION: u8 = 1;

fn put_u64(buf: &mut Vec<u8>, v: usize) {
    buf.extend_from_slice(&(v as u64).to_le_bytes());
}

fn put_matrix(buf: &mut Vec<u8>, m: &Matrix) {
    put_u64(buf, m.rows());
    put_u64(buf, m.cols());
    for v in m.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
}

pub(crate) fn encode(op: &MeasurementOperator) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(SIDECAR_MAGIC);
    buf.push(SIDECAR_VERSION);
    let tag = match op {
        MeasurementOperator::Vectorized { .. } => 0u8,
        MeasurementOperator::Modewise { .. } => 1,
        MeasurementOperator::TwoStage { .. } => 2,
    };
    buf.push(tag);
    put_u64(&mut buf, op.input_shape().len());
    for &n in op.input_shape() {
        put_u64(&mut buf, n);
    }
    match op {
        MeasurementOperator::Vectorized { matrix, .. } => put_matrix(&mut buf, matrix),
        MeasurementOperator::Modewise { plan, matrices } => {
            put_u64(&mut buf, plan.kappa());
            put_u64(&mut buf, matrices.len());
            matrices.iter().for_each(|m| put_matrix(&mut buf, m));
        }
        MeasurementOperator::TwoStage {
            plan,
            matrices,
            second,
        } => {
            put_u64(&mut buf, plan.kappa());
            put_u64(&mut buf, matrices.len());
            matrices.iter().for_each(|m| put_matrix(&mut buf, m));
            put_matrix(&mut buf, second);
        }
    }
    buf
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format(format!("truncated sidecar at byte {}", self.pos)))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn usize(&mut self) -> Result<usize> {
        let v = u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes"));
        usize::try_from(v).map_err(|_| Error::Format(format!("dimension {v} does not fit in memory")))
    }

    fn matrix(&mut self) -> Result<Matrix> {
        let rows = self.usize()?;
        let cols = self.usize()?;
        let len = rows
            .checked_mul(cols)
            .filter(|&l| l.checked_mul(8).is_some_and(|b| b <= self.bytes.len() - self.pos))
            .ok_or_else(|| Error::Format(format!("matrix {rows}x{cols} exceeds remaining data")))?;
        let data = self
            .take(len * 8)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Matrix::new(rows, cols, data).map_err(|e| Error::Format(e.to_string()))
    }
}

pub(crate) fn decode(bytes: &[u8]) -> Result<MeasurementOperator> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(SIDECAR_MAGIC.len())? != SIDECAR_MAGIC {
        return Err(Error::Format("bad magic, not an operator sidecar".into()));
    }
    let version = r.u8()?;
    if version != SIDECAR_VERSION {
        return Err(Error::Format(format!("unsupported sidecar version {version}")));
    }
    let tag = r.u8()?;
    let d = r.usize()?;
    if d == 0 || d > 64 {
        return Err(Error::Format(format!("implausible mode count {d}")));
    }
    let shape = (0..d).map(|_| r.usize()).collect::<Result<Vec<_>>>()?;
    let op = match tag {
        0 => MeasurementOperator::vectorized(shape, r.matrix()?),
        1 | 2 => {
            let kappa = r.usize()?;
            let count = r.usize()?;
            if count > d {
                return Err(Error::Format(format!("{count} matrices for {d} modes")));
            }
            let plan = ReshapePlan::new(&shape, kappa)?;
            let matrices = (0..count).map(|_| r.matrix()).collect::<Result<Vec<_>>>()?;
            if tag == 1 {
                MeasurementOperator::modewise(plan, matrices)
            } else {
                MeasurementOperator::two_stage(plan, matrices, r.matrix()?)
            }
        }
        t => return Err(Error::Format(format!("unknown operator variant tag {t}"))),
    }
    .map_err(|e| Error::Format(e.to_string()))?;
    if r.pos != bytes.len() {
        return Err(Error::Format(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Ok(op)
}

pub fn write_operator(op: &MeasurementOperator, path: &Path) -> Result<()> {
    fs::write(path, encode(op)).map_err(|e| Error::io(path, e))
}

pub fn read_operator(path: &Path) -> Result<MeasurementOperator> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}
