//! GF(2) linear algebra for systematic LDPC encoding.
//!
//! The parity-check matrix is reduced once to row echelon form with full
//! pivoting bookkeeping; encoding then places information bits on the free
//! columns and solves the pivot columns by back-substitution.

use super::alist::ParityCheckMatrix;
use crate::error::{CvqkdError, Result};

/// Dense bit-row, 64 columns per word.
#[derive(Clone)]
struct BitRow {
    words: Vec<u64>,
}

impl BitRow {
    fn zeros(n: usize) -> Self {
        BitRow {
            words: vec![0; n.div_ceil(64)],
        }
    }

    fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    fn xor_assign(&mut self, other: &BitRow) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }
}

/// Systematic encoder derived from a parity-check matrix.
pub struct SystematicEncoder {
    n: usize,
    rank: usize,
    /// Pivot column of each echelon row.
    pivot_cols: Vec<usize>,
    /// Non-pivot columns, in ascending order: the information positions.
    free_cols: Vec<usize>,
    /// Reduced rows (RREF): each row has a 1 in its pivot column and
    /// elsewhere only in free columns.
    rows: Vec<BitRow>,
}

impl SystematicEncoder {
    /// Reduce `h` over GF(2). Linearly dependent checks reduce the rank and
    /// raise the true code rate above the design rate.
    pub fn from_parity_check(h: &ParityCheckMatrix) -> Result<Self> {
        let n = h.n;
        let mut rows: Vec<BitRow> = h
            .rows
            .iter()
            .map(|r| {
                let mut row = BitRow::zeros(n);
                for &c in r {
                    row.set(c);
                }
                row
            })
            .collect();

        let mut pivot_cols = Vec::new();
        let mut rank = 0usize;
        for col in 0..n {
            let Some(pivot) = (rank..rows.len()).find(|&r| rows[r].get(col)) else {
                continue;
            };
            rows.swap(rank, pivot);
            let pivot_row = rows[rank].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank && row.get(col) {
                    row.xor_assign(&pivot_row);
                }
            }
            pivot_cols.push(col);
            rank += 1;
            if rank == rows.len() {
                break;
            }
        }
        rows.truncate(rank);
        if rank == n {
            return Err(CvqkdError::invalid(
                "parity-check matrix has full column rank: code carries no information",
            ));
        }

        let mut is_pivot = vec![false; n];
        for &c in &pivot_cols {
            is_pivot[c] = true;
        }
        let free_cols = (0..n).filter(|&c| !is_pivot[c]).collect();

        Ok(SystematicEncoder {
            n,
            rank,
            pivot_cols,
            free_cols,
            rows,
        })
    }

    /// Information bits per codeword.
    pub fn k(&self) -> usize {
        self.n - self.rank
    }

    /// Codeword length.
    pub fn n(&self) -> usize {
        self.n
    }

    /// GF(2) rank of the parity-check matrix.
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// True code rate `k / n`.
    pub fn rate(&self) -> f64 {
        self.k() as f64 / self.n as f64
    }

    /// Encode information bits into a codeword with zero syndrome.
    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>> {
        if info.len() != self.k() {
            return Err(CvqkdError::invalid(format!(
                "encode: {} info bits, code carries {}",
                info.len(),
                self.k()
            )));
        }
        let mut word = vec![0u8; self.n];
        for (bit, &col) in info.iter().zip(&self.free_cols) {
            word[col] = bit & 1;
        }
        // Each RREF row reads: word[pivot] = XOR of its free-column entries.
        for (row, &pc) in self.rows.iter().zip(&self.pivot_cols) {
            let mut parity = 0u8;
            for &fc in &self.free_cols {
                if row.get(fc) {
                    parity ^= word[fc];
                }
            }
            word[pc] = parity;
        }
        Ok(word)
    }

    /// Extract the information bits back out of a codeword.
    pub fn extract_info(&self, word: &[u8]) -> Result<Vec<u8>> {
        if word.len() != self.n {
            return Err(CvqkdError::invalid(format!(
                "extract_info: word length {} vs n = {}",
                word.len(),
                self.n
            )));
        }
        Ok(self.free_cols.iter().map(|&c| word[c] & 1).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::{RngStream, StreamPurpose};

    fn hamming() -> ParityCheckMatrix {
        ParityCheckMatrix::from_rows(
            7,
            vec![vec![0, 1, 2, 4], vec![0, 1, 3, 5], vec![0, 2, 3, 6]],
        )
        .unwrap()
    }

    #[test]
    fn hamming_encoder_dimensions() {
        let enc = SystematicEncoder::from_parity_check(&hamming()).unwrap();
        assert_eq!(enc.n(), 7);
        assert_eq!(enc.rank(), 3);
        assert_eq!(enc.k(), 4);
        assert!((enc.rate() - 4.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn all_hamming_codewords_have_zero_syndrome() {
        let h = hamming();
        let enc = SystematicEncoder::from_parity_check(&h).unwrap();
        for value in 0..16u8 {
            let info: Vec<u8> = (0..4).map(|b| value >> b & 1).collect();
            let word = enc.encode(&info).unwrap();
            assert!(h.syndrome_is_zero(&word).unwrap(), "info {value:04b}");
            assert_eq!(enc.extract_info(&word).unwrap(), info);
        }
    }

    #[test]
    fn encoding_is_linear() {
        let h = hamming();
        let enc = SystematicEncoder::from_parity_check(&h).unwrap();
        let a = enc.encode(&[1, 0, 1, 1]).unwrap();
        let b = enc.encode(&[0, 1, 1, 0]).unwrap();
        let sum: Vec<u8> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
        assert!(h.syndrome_is_zero(&sum).unwrap());
    }

    #[test]
    fn dependent_rows_raise_rate() {
        // Duplicate check: rank 2, k = 5 - 2 = 3.
        let h = ParityCheckMatrix::from_rows(
            5,
            vec![vec![0, 1, 4], vec![1, 2, 3], vec![0, 1, 4]],
        )
        .unwrap();
        let enc = SystematicEncoder::from_parity_check(&h).unwrap();
        assert_eq!(enc.rank(), 2);
        assert_eq!(enc.k(), 3);
        let mut rng = RngStream::new(5, 0, StreamPurpose::ReconciliationBits);
        for _ in 0..8 {
            let info: Vec<u8> = (0..3).map(|_| (rng.next_u64() & 1) as u8).collect();
            let word = enc.encode(&info).unwrap();
            assert!(h.syndrome_is_zero(&word).unwrap());
        }
    }

    #[test]
    fn rejects_full_rank_square_matrix() {
        let h =
            ParityCheckMatrix::from_rows(2, vec![vec![0], vec![1]]).unwrap();
        assert!(SystematicEncoder::from_parity_check(&h).is_err());
    }

    #[test]
    fn wrong_info_length_rejected() {
        let enc = SystematicEncoder::from_parity_check(&hamming()).unwrap();
        assert!(enc.encode(&[1, 0]).is_err());
        assert!(enc.extract_info(&[0; 5]).is_err());
    }
}
