//! Parameter file formats.
//!
//! Binary layout, all little-endian:
//!
//! ```text
//! u64 n_d | u64 n | u64 m | u64 L | f64 T
//! f64[n * n_d] U (row-major) | f64[n] a
//! per layer l = 0 .. L-1:
//!   f64[m * n] V | f64[n * m] W | f64[m] b | f64[n] c
//! ```
//!
//! The JSON form stores matrices as arrays of rows.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::params::{DiscreteParams, LayerParams, PreprocessParams};
use super::ResnetError;

fn push_mat(out: &mut Vec<u8>, m: &DMatrix<f64>) {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.extend_from_slice(&m[(i, j)].to_le_bytes());
        }
    }
}

fn push_vec(out: &mut Vec<u8>, v: &DVector<f64>) {
    for x in v.iter() {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

pub fn write_binary(p: &DiscreteParams) -> Vec<u8> {
    let d = p.dims();
    let mut out = Vec::with_capacity(40 + 8 * p.num_scalars());
    for k in [d.n_d, d.n, d.m, p.num_layers()] {
        out.extend_from_slice(&(k as u64).to_le_bytes());
    }
    out.extend_from_slice(&p.horizon().to_le_bytes());
    push_mat(&mut out, &p.pre().u);
    push_vec(&mut out, &p.pre().a);
    for l in p.layers() {
        push_mat(&mut out, &l.v);
        push_mat(&mut out, &l.w);
        push_vec(&mut out, &l.b);
        push_vec(&mut out, &l.c);
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take8(&mut self) -> Result<[u8; 8], ResnetError> {
        let end = self.pos + 8;
        let chunk = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| ResnetError::Format(format!("truncated at byte {}", self.pos)))?;
        self.pos = end;
        Ok(chunk.try_into().unwrap())
    }

    fn dim(&mut self) -> Result<usize, ResnetError> {
        let v = u64::from_le_bytes(self.take8()?);
        usize::try_from(v)
            .ok()
            .filter(|&v| v > 0 && v < (1 << 32))
            .ok_or_else(|| ResnetError::Format(format!("implausible dimension {v}")))
    }

    fn f64(&mut self) -> Result<f64, ResnetError> {
        Ok(f64::from_le_bytes(self.take8()?))
    }

    fn mat(&mut self, rows: usize, cols: usize) -> Result<DMatrix<f64>, ResnetError> {
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            data.push(self.f64()?);
        }
        Ok(DMatrix::from_row_slice(rows, cols, &data))
    }

    fn vec(&mut self, len: usize) -> Result<DVector<f64>, ResnetError> {
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(self.f64()?);
        }
        Ok(DVector::from_vec(data))
    }
}

pub fn read_binary(bytes: &[u8]) -> Result<DiscreteParams, ResnetError> {
    let mut r = Reader { bytes, pos: 0 };
    let n_d = r.dim()?;
    let n = r.dim()?;
    let m = r.dim()?;
    let layers = r.dim()?;
    let horizon = r.f64()?;
    let needed = 40 + 8 * (n * n_d + n + layers * (2 * n * m + m + n));
    if bytes.len() != needed {
        return Err(ResnetError::Format(format!(
            "expected {needed} bytes for the declared dimensions, found {}",
            bytes.len()
        )));
    }
    let pre = PreprocessParams {
        u: r.mat(n, n_d)?,
        a: r.vec(n)?,
    };
    let mut ls = Vec::with_capacity(layers);
    for _ in 0..layers {
        ls.push(LayerParams {
            v: r.mat(m, n)?,
            w: r.mat(n, m)?,
            b: r.vec(m)?,
            c: r.vec(n)?,
        });
    }
    DiscreteParams::new(pre, ls, horizon)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerJson {
    pub v: Vec<Vec<f64>>,
    pub w: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsJson {
    pub horizon: f64,
    pub u: Vec<Vec<f64>>,
    pub a: Vec<f64>,
    pub layers: Vec<LayerJson>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn from_rows(r: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>, ResnetError> {
    let cols = r.first().map_or(0, Vec::len);
    if r.iter().any(|row| row.len() != cols) {
        return Err(ResnetError::Format(format!("ragged rows in `{what}`")));
    }
    let flat: Vec<f64> = r.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(r.len(), cols, &flat))
}

impl From<&DiscreteParams> for ParamsJson {
    fn from(p: &DiscreteParams) -> Self {
        ParamsJson {
            horizon: p.horizon(),
            u: rows(&p.pre().u),
            a: p.pre().a.iter().copied().collect(),
            layers: p
                .layers()
                .iter()
                .map(|l| LayerJson {
                    v: rows(&l.v),
                    w: rows(&l.w),
                    b: l.b.iter().copied().collect(),
                    c: l.c.iter().copied().collect(),
                })
                .collect(),
        }
    }
}

impl TryFrom<&ParamsJson> for DiscreteParams {
    type Error = ResnetError;

    fn try_from(j: &ParamsJson) -> Result<Self, ResnetError> {
        let pre = PreprocessParams {
            u: from_rows(&j.u, "u")?,
            a: DVector::from_vec(j.a.clone()),
        };
        let layers = j
            .layers
            .iter()
            .map(|l| {
                Ok(LayerParams {
                    v: from_rows(&l.v, "v")?,
                    w: from_rows(&l.w, "w")?,
                    b: DVector::from_vec(l.b.clone()),
                    c: DVector::from_vec(l.c.clone()),
                })
            })
            .collect::<Result<Vec<_>, ResnetError>>()?;
        DiscreteParams::new(pre, layers, j.horizon)
    }
}

pub fn write_json(p: &DiscreteParams) -> String {
    serde_json::to_string_pretty(&ParamsJson::from(p)).expect("finite parameters serialize")
}

pub fn read_json(text: &str) -> Result<DiscreteParams, ResnetError> {
    let j: ParamsJson = serde_json::from_str(text).map_err(|e| ResnetError::Format(e.to_string()))?;
    DiscreteParams::try_from(&j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resnet::params::Dims;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample() -> DiscreteParams {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        DiscreteParams::random(Dims::new(3, 2, 4).unwrap(), 3, 1.5, 1.0, &mut rng).unwrap()
    }

    #[test]
    fn binary_round_trip_and_layout() {
        let p = sample();
        let bytes = write_binary(&p);
        assert_eq!(bytes.len(), 40 + 8 * p.num_scalars());
        assert_eq!(u64::from_le_bytes(bytes[0..8].try_into().unwrap()), 3);
        assert_eq!(f64::from_le_bytes(bytes[32..40].try_into().unwrap()), 1.5);
        // first entry of U, then U[0][1]: row-major
        assert_eq!(f64::from_le_bytes(bytes[40..48].try_into().unwrap()), p.pre().u[(0, 0)]);
        assert_eq!(f64::from_le_bytes(bytes[48..56].try_into().unwrap()), p.pre().u[(0, 1)]);
        assert_eq!(read_binary(&bytes).unwrap(), p);
    }

    #[test]
    fn binary_rejects_truncation() {
        let bytes = write_binary(&sample());
        assert!(matches!(read_binary(&bytes[..bytes.len() - 1]), Err(ResnetError::Format(_))));
        assert!(matches!(read_binary(&bytes[..20]), Err(ResnetError::Format(_))));
    }

    #[test]
    fn json_round_trip() {
        let p = sample();
        assert_eq!(read_json(&write_json(&p)).unwrap(), p);
        assert!(read_json("{\"horizon\": 1.0}").is_err());
    }
}
