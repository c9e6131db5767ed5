//! Systematic MDS codec over GF(2^8).
//!
//! The generator is `[I_k; P]` where `P` is a column-scaled Cauchy matrix.
//! With Cauchy points `y_c = c` and `x_r = k + r`, entry `(r, c)` of `P` is
//! `(x_0 + y_c) / (x_r + y_c)`. The scaling forces the first parity row to be
//! all ones (so `(3, 2)` stores `x, y, x + y`) and, being a column scaling of
//! a Cauchy matrix, keeps every square submatrix of `P` nonsingular.

use std::collections::BTreeSet;

use super::Gf256;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MdsCodec {
    n: usize,
    k: usize,
    parity: Vec<Vec<Gf256>>,
}

impl MdsCodec {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::InvalidParams(format!("MDS codec needs 1 <= k <= n, got n={n}, k={k}")));
        }
        if n > 255 {
            return Err(Error::InvalidParams(format!("MDS codec length {n} exceeds 255")));
        }
        let x0 = Gf256(k as u8);
        let parity = (0..n - k)
            .map(|r| {
                let xr = Gf256((k + r) as u8);
                (0..k)
                    .map(|c| {
                        let yc = Gf256(c as u8);
                        // x_r != y_c because the point sets are disjoint.
                        (x0 + yc) * (xr + yc).inv().expect("disjoint Cauchy points")
                    })
                    .collect()
            })
            .collect();
        Ok(MdsCodec { n, k, parity })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Generator row for the 1-based output position `pos`.
    pub fn generator_row(&self, pos: usize) -> Result<Vec<Gf256>> {
        self.check_position(pos)?;
        if pos <= self.k {
            let mut row = vec![Gf256::ZERO; self.k];
            row[pos - 1] = Gf256::ONE;
            Ok(row)
        } else {
            Ok(self.parity[pos - self.k - 1].clone())
        }
    }

    pub fn encode(&self, message: &[Gf256]) -> Result<Vec<Gf256>> {
        self.check_message(message)?;
        let mut out = Vec::with_capacity(self.n);
        out.extend_from_slice(message);
        out.extend(self.parity.iter().map(|row| dot(row, message)));
        Ok(out)
    }

    /// The single coded symbol at 1-based position `pos`.
    pub fn encode_symbol(&self, message: &[Gf256], pos: usize) -> Result<Gf256> {
        self.check_message(message)?;
        self.check_position(pos)?;
        if pos <= self.k {
            Ok(message[pos - 1])
        } else {
            Ok(dot(&self.parity[pos - self.k - 1], message))
        }
    }

    pub fn decode(&self, symbols: &[(usize, Gf256)]) -> Result<Vec<Gf256>> {
        let positions: Vec<usize> = symbols.iter().map(|&(p, _)| p).collect();
        let values: Vec<Gf256> = symbols.iter().map(|&(_, v)| v).collect();
        Ok(self.decoder(&positions)?.apply(&values))
    }

    /// Inverts the generator rows at `positions` once so many stripes can be
    /// decoded against the same erasure pattern.
    pub fn decoder(&self, positions: &[usize]) -> Result<Decoder> {
        if positions.len() != self.k {
            return Err(Error::LengthMismatch { expected: self.k, actual: positions.len() });
        }
        let mut seen = BTreeSet::new();
        for &p in positions {
            self.check_position(p)?;
            if !seen.insert(p) {
                return Err(Error::DuplicatePosition(p));
            }
        }
        let rows = positions
            .iter()
            .map(|&p| self.generator_row(p))
            .collect::<Result<Vec<_>>>()?;
        Ok(Decoder { inverse: invert(rows)? })
    }

    fn check_message(&self, message: &[Gf256]) -> Result<()> {
        if message.len() != self.k {
            return Err(Error::LengthMismatch { expected: self.k, actual: message.len() });
        }
        Ok(())
    }

    fn check_position(&self, pos: usize) -> Result<()> {
        if pos == 0 || pos > self.n {
            return Err(Error::PositionOutOfRange { position: pos, n: self.n });
        }
        Ok(())
    }
}

/// Precomputed inverse of a k×k generator submatrix.
#[derive(Clone, Debug)]
pub struct Decoder {
    inverse: Vec<Vec<Gf256>>,
}

impl Decoder {
    /// `values[i]` must be the symbol at the i-th position given to
    /// [`MdsCodec::decoder`].
    pub fn apply(&self, values: &[Gf256]) -> Vec<Gf256> {
        self.inverse.iter().map(|row| dot(row, values)).collect()
    }
}

fn dot(row: &[Gf256], v: &[Gf256]) -> Gf256 {
    row.iter().zip(v).map(|(&a, &b)| a * b).sum()
}

/// Gauss-Jordan inversion of a square matrix.
fn invert(mut m: Vec<Vec<Gf256>>) -> Result<Vec<Vec<Gf256>>> {
    let k = m.len();
    let mut inv: Vec<Vec<Gf256>> = (0..k)
        .map(|i| (0..k).map(|j| if i == j { Gf256::ONE } else { Gf256::ZERO }).collect())
        .collect();
    for col in 0..k {
        let pivot = (col..k).find(|&r| !m[r][col].is_zero()).ok_or(Error::Singular)?;
        m.swap(col, pivot);
        inv.swap(col, pivot);
        let scale = m[col][col].inv()?;
        for j in 0..k {
            m[col][j] *= scale;
            inv[col][j] *= scale;
        }
        for r in 0..k {
            if r == col || m[r][col].is_zero() {
                continue;
            }
            let f = m[r][col];
            for j in 0..k {
                let (a, b) = (m[col][j], inv[col][j]);
                m[r][j] += f * a;
                inv[r][j] += f * b;
            }
        }
    }
    Ok(inv)
}
