//! Wire representation of complex numbers and matrices.
//!
//! Complex scalars are two-element arrays `[re, im]`; matrices are row-major
//! nested arrays of those pairs.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{CMatrix, C64};

pub type ComplexPair = [f64; 2];

pub fn pair(z: C64) -> ComplexPair {
    [z.re, z.im]
}

pub fn from_pair(p: ComplexPair) -> C64 {
    C64::new(p[0], p[1])
}

pub fn rows(m: &CMatrix) -> Vec<Vec<ComplexPair>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| pair(m[(i, j)])).collect())
        .collect()
}

pub fn from_rows(rows: &[Vec<ComplexPair>]) -> Result<CMatrix, String> {
    let n_rows = rows.len();
    let n_cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != n_cols) {
        return Err("ragged matrix rows".to_string());
    }
    Ok(CMatrix::from_fn(n_rows, n_cols, |i, j| from_pair(rows[i][j])))
}

/// `#[serde(with = "json::complex")]`
pub mod complex {
    use super::*;

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
        pair(*z).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
        ComplexPair::deserialize(d).map(from_pair)
    }
}

/// `#[serde(with = "json::complex_vec")]`
pub mod complex_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[C64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|z| pair(*z)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<C64>, D::Error> {
        Vec::<ComplexPair>::deserialize(d).map(|v| v.into_iter().map(from_pair).collect())
    }
}

/// `#[serde(with = "json::matrix")]`
pub mod matrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> Result<S::Ok, S::Error> {
        rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMatrix, D::Error> {
        let r = Vec::<Vec<ComplexPair>>::deserialize(d)?;
        from_rows(&r).map_err(serde::de::Error::custom)
    }
}
