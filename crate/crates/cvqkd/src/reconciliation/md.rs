//! Multidimensional mapping of correlated Gaussian variables onto a virtual
//! binary-input AWGN channel.
//!
//! For d in {1, 2, 4, 8} the normed division algebras (reals, complexes,
//! quaternions, octonions) give norm-preserving rotations that send any unit
//! vector to any other: Bob publishes `m = u * conj(x/|x|)` and both sides
//! apply the left-multiplication map `M(m)`. Octonion non-associativity is
//! harmless because `(u * conj(x)) * x` only involves two independent
//! elements, and the algebra is alternative.

use crate::error::{CvqkdError, Result};

/// Dimensions with a normed division algebra.
pub const SUPPORTED_DIMENSIONS: [usize; 4] = [1, 2, 4, 8];

/// Messages and hard decisions are capped at this log-likelihood magnitude.
pub const LLR_CAP: f64 = 50.0;

/// Fano-plane triads defining the octonion products: for each `(a, b, c)`,
/// `e_a e_b = e_c` cyclically.
const OCTONION_TRIADS: [[usize; 3]; 7] = [
    [1, 2, 3],
    [1, 4, 5],
    [1, 7, 6],
    [2, 4, 6],
    [2, 5, 7],
    [3, 4, 7],
    [3, 6, 5],
];

/// Product table: `TABLE[i][j] = (sign, k)` with `e_i e_j = sign * e_k`.
fn octonion_table() -> &'static [[(f64, usize); 8]; 8] {
    static TABLE: std::sync::OnceLock<[[(f64, usize); 8]; 8]> = std::sync::OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = [[(0.0, 0usize); 8]; 8];
        for j in 0..8 {
            table[0][j] = (1.0, j);
            table[j][0] = (1.0, j);
        }
        for i in 1..8 {
            table[i][i] = (-1.0, 0);
        }
        for [a, b, c] in OCTONION_TRIADS {
            for &(p, q, r) in &[(a, b, c), (b, c, a), (c, a, b)] {
                table[p][q] = (1.0, r);
                table[q][p] = (-1.0, r);
            }
        }
        table
    })
}

/// General product through the octonion table. The d < 8 algebras are the
/// subalgebras spanned by the first d basis elements: (1), (1, e1),
/// (1, e1, e2, e3), so one table covers every supported dimension.
fn algebra_mul(a: &[f64], b: &[f64], out: &mut [f64]) {
    let table = octonion_table();
    out.fill(0.0);
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            let (sign, k) = table[i][j];
            out[k] += sign * ai * bj;
        }
    }
}

fn conjugate(x: &[f64]) -> Vec<f64> {
    let mut c = x.to_vec();
    for v in c.iter_mut().skip(1) {
        *v = -*v;
    }
    c
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn check_dimension(d: usize) -> Result<()> {
    if SUPPORTED_DIMENSIONS.contains(&d) {
        Ok(())
    } else {
        Err(CvqkdError::invalid(format!(
            "multidimensional mapping needs d in {{1, 2, 4, 8}}, got {d}"
        )))
    }
}

/// Compute the public mapping message `m` with `M(m) x/|x| = u`.
///
/// `u` must be binary-antipodal, entries exactly `±1/sqrt(d)`.
pub fn md_map(x: &[f64], u: &[f64], d: usize) -> Result<Vec<f64>> {
    check_dimension(d)?;
    if x.len() != d || u.len() != d {
        return Err(CvqkdError::invalid(format!(
            "md_map: expected {d}-dim inputs, got x: {}, u: {}",
            x.len(),
            u.len()
        )));
    }
    let nx = norm(x);
    if !(nx > 0.0) {
        return Err(CvqkdError::invalid("md_map: |x| must be positive"));
    }
    let amp = 1.0 / (d as f64).sqrt();
    for &ui in u {
        if (ui.abs() - amp).abs() > 1e-9 {
            return Err(CvqkdError::invalid(format!(
                "md_map: u entry {ui} is not antipodal +-{amp}"
            )));
        }
    }
    let x_hat: Vec<f64> = x.iter().map(|v| v / nx).collect();
    let mut m = vec![0.0; d];
    algebra_mul(u, &conjugate(&x_hat), &mut m);
    Ok(m)
}

/// Apply the rotation `M(m)` to `z`.
pub fn md_rotate(m: &[f64], z: &[f64]) -> Result<Vec<f64>> {
    let d = m.len();
    check_dimension(d)?;
    if z.len() != d {
        return Err(CvqkdError::invalid(format!(
            "md_rotate: mismatched dimensions {d} vs {}",
            z.len()
        )));
    }
    let mut out = vec![0.0; d];
    algebra_mul(m, z, &mut out);
    Ok(out)
}

/// Per-dimension log-likelihood ratios for the virtual channel.
///
/// Rotates Alice's correlated block `y` by the public `M(m)`, giving
/// `v = a*u + rotated noise`. The amplitude is taken from the norm of
/// Alice's own block (`|v| = |y|` by isometry), the channel state she knows
/// exactly: `llr_i = 2 (|y|/sqrt(d)) v_i / noise_var`, capped at +-50.
/// Positive LLR means bit 0 (`u_i = +1/sqrt(d)`).
pub fn md_demap(y: &[f64], m: &[f64], noise_var: f64) -> Result<Vec<f64>> {
    let d = m.len();
    if !(noise_var > 0.0) {
        return Err(CvqkdError::invalid(format!(
            "md_demap: noise variance {noise_var} must be positive"
        )));
    }
    let v = md_rotate(m, y)?;
    let amp = norm(y) / (d as f64).sqrt();
    Ok(v
        .iter()
        .map(|&vi| (2.0 * amp * vi / noise_var).clamp(-LLR_CAP, LLR_CAP))
        .collect())
}

/// Map codeword bits to antipodal symbols `(1 - 2b) / sqrt(d)`.
pub fn bits_to_antipodal(bits: &[u8], d: usize) -> Vec<f64> {
    let amp = 1.0 / (d as f64).sqrt();
    bits.iter()
        .map(|&b| if b == 0 { amp } else { -amp })
        .collect()
}
