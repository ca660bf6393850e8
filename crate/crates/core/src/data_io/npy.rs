//! Reading and writing 2-D float arrays in the NPY v1.0 format.
//!
//! Layout: `\x93NUMPY`, version bytes `1 0`, a little-endian `u16` header
//! length `L`, `L` bytes of ASCII dict literal padded with spaces and ending
//! in `\n` so that `10 + L` is a multiple of 64, then the raw C-order payload.

use std::fs;
use std::path::Path;

use crate::error::{Error, NpyError, Result};
use crate::numeric::Matrix;

pub const MAGIC: [u8; 6] = *b"\x93NUMPY";
const PREAMBLE_LEN: usize = 10;
const ALIGN: usize = 64;

/// On-disk element type.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dtype {
    F4,
    F8,
}

impl Dtype {
    fn descr(self) -> &'static str {
        match self {
            Dtype::F4 => "<f4",
            Dtype::F8 => "<f8",
        }
    }

    fn size(self) -> usize {
        match self {
            Dtype::F4 => 4,
            Dtype::F8 => 8,
        }
    }
}

#[derive(Debug, PartialEq, Eq)]
struct Header {
    dtype: Dtype,
    rows: usize,
    cols: usize,
}

/// Value text following `'key':` in the header dict.
fn dict_value<'a>(dict: &'a str, key: &str) -> std::result::Result<&'a str, NpyError> {
    let pattern = format!("'{key}'");
    let start = dict
        .find(&pattern)
        .ok_or_else(|| NpyError::BadHeader(format!("missing key {key}")))?;
    let rest = dict[start + pattern.len()..].trim_start();
    rest.strip_prefix(':')
        .map(str::trim_start)
        .ok_or_else(|| NpyError::BadHeader(format!("no ':' after {key}")))
}

fn parse_header(text: &str) -> std::result::Result<Header, NpyError> {
    let text = text.trim();
    if !(text.starts_with('{') && text.ends_with('}')) {
        return Err(NpyError::BadHeader("header is not a dict literal".into()));
    }

    let descr = dict_value(text, "descr")?;
    let quote = descr
        .chars()
        .next()
        .filter(|c| *c == '\'' || *c == '"')
        .ok_or_else(|| NpyError::BadHeader("descr is not a string".into()))?;
    let descr = descr[1..]
        .split(quote)
        .next()
        .ok_or_else(|| NpyError::BadHeader("unterminated descr".into()))?;
    let dtype = match descr {
        "<f4" => Dtype::F4,
        "<f8" => Dtype::F8,
        other => return Err(NpyError::UnsupportedDtype(other.to_string())),
    };

    let fortran = dict_value(text, "fortran_order")?;
    if fortran.starts_with("True") {
        return Err(NpyError::FortranOrder);
    } else if !fortran.starts_with("False") {
        return Err(NpyError::BadHeader("fortran_order is not a bool".into()));
    }

    let shape = dict_value(text, "shape")?;
    let shape = shape
        .strip_prefix('(')
        .and_then(|s| s.split(')').next())
        .ok_or_else(|| NpyError::BadHeader("shape is not a tuple".into()))?;
    let dims = shape
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| NpyError::BadHeader(format!("bad shape entry: {e}")))?;
    match dims[..] {
        [rows, cols] => Ok(Header { dtype, rows, cols }),
        _ => Err(NpyError::BadHeader(format!("expected a 2-D shape, found {dims:?}"))),
    }
}

/// Decodes an in-memory NPY file into a `T × D` matrix, widening `<f4`.
pub fn decode(bytes: &[u8]) -> std::result::Result<Matrix, NpyError> {
    if bytes.len() < PREAMBLE_LEN || bytes[..6] != MAGIC {
        return Err(NpyError::BadMagic);
    }
    if (bytes[6], bytes[7]) != (1, 0) {
        return Err(NpyError::UnsupportedVersion(bytes[6], bytes[7]));
    }
    let header_len = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
    let data_start = PREAMBLE_LEN + header_len;
    if bytes.len() < data_start {
        return Err(NpyError::Truncated {
            expected: data_start,
            actual: bytes.len(),
        });
    }
    let text = std::str::from_utf8(&bytes[PREAMBLE_LEN..data_start])
        .map_err(|_| NpyError::BadHeader("header is not ASCII".into()))?;
    let header = parse_header(text)?;

    let count = header.rows * header.cols;
    let payload = &bytes[data_start..];
    let expected = count * header.dtype.size();
    if payload.len() < expected {
        return Err(NpyError::Truncated {
            expected,
            actual: payload.len(),
        });
    }
    let values: Vec<f64> = match header.dtype {
        Dtype::F8 => payload[..expected]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect(),
        Dtype::F4 => payload[..expected]
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes(c.try_into().expect("chunk of 4"))))
            .collect(),
    };
    Ok(Matrix::from_vec(header.rows, header.cols, values).expect("count matches shape"))
}

/// Encodes a matrix. With [`Dtype::F4`] values are narrowed to `f32`.
pub fn encode(m: &Matrix, dtype: Dtype) -> Vec<u8> {
    let mut dict = format!(
        "{{'descr': '{}', 'fortran_order': False, 'shape': ({}, {}), }}",
        dtype.descr(),
        m.rows(),
        m.cols()
    );
    let unpadded = PREAMBLE_LEN + dict.len() + 1;
    let padding = (ALIGN - unpadded % ALIGN) % ALIGN;
    dict.extend(std::iter::repeat_n(' ', padding));
    dict.push('\n');

    let mut out = Vec::with_capacity(PREAMBLE_LEN + dict.len() + m.data().len() * dtype.size());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(dict.len() as u16).to_le_bytes());
    out.extend_from_slice(dict.as_bytes());
    match dtype {
        Dtype::F8 => m.data().iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes())),
        Dtype::F4 => m
            .data()
            .iter()
            .for_each(|&v| out.extend_from_slice(&(v as f32).to_le_bytes())),
    }
    out
}

pub fn read_feature_file(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(Error::from)
}

/// Writes `<f8`, C order, shape `(T, D)`.
pub fn write_feature_file(path: impl AsRef<Path>, m: &Matrix) -> Result<()> {
    write_feature_file_as(path, m, Dtype::F8)
}

pub fn write_feature_file_as(path: impl AsRef<Path>, m: &Matrix, dtype: Dtype) -> Result<()> {
    let path = path.as_ref();
    if m.rows() == 0 || m.cols() == 0 {
        return Err(Error::EmptyInput("feature matrix is empty"));
    }
    fs::write(path, encode(m, dtype)).map_err(|e| Error::io(path, e))
}
