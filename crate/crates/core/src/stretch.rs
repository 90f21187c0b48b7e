//! Metallic ratios, the 2×2 matrix formula for 3-braid normal forms and the
//! stretch-factor table of the `β_{n,p}` family.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::braid::gcd;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StretchError {
    #[error("parameter out of range: {0}")]
    Parameter(String),
    #[error("integer overflow in normal-form matrix product")]
    Overflow,
    #[error("trace {0} <= 2: not pseudo-Anosov under this encoding")]
    Degenerate(i128),
}

/// `s_k = (k + √(k²+4)) / 2`, the positive root of `x² − kx − 1`.
pub fn metallic(k: u64) -> Result<f64, StretchError> {
    if k < 1 {
        return Err(StretchError::Parameter(
            "metallic index must be >= 1".into(),
        ));
    }
    let k = k as f64;
    // (k + √(k²+4))/2 loses nothing for k ≥ 1; the conjugate root is tiny.
    Ok(0.5 * (k + (k * k + 4.0).sqrt()))
}

/// `σ1^{k1} σ2^{-l1} … σ1^{kr} σ2^{-lr}` with all exponents positive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThreeBraidNormalForm {
    syllables: Vec<(u32, u32)>,
}

impl ThreeBraidNormalForm {
    pub fn new(syllables: Vec<(u32, u32)>) -> Result<Self, StretchError> {
        if syllables.is_empty() {
            return Err(StretchError::Parameter(
                "normal form needs at least one syllable pair".into(),
            ));
        }
        if syllables.iter().any(|&(k, l)| k == 0 || l == 0) {
            return Err(StretchError::Parameter(
                "normal-form exponents must be >= 1".into(),
            ));
        }
        Ok(Self { syllables })
    }

    pub fn syllables(&self) -> &[(u32, u32)] {
        &self.syllables
    }

    /// Number of syllable pairs `r`.
    pub fn pairs(&self) -> usize {
        self.syllables.len()
    }

    pub fn rotate(&self, by: usize) -> Self {
        let mut s = self.syllables.clone();
        let len = s.len();
        s.rotate_left(by % len);
        Self { syllables: s }
    }
}

pub type Mat2 = [[i128; 2]; 2];

fn mat_mul(a: &Mat2, b: &Mat2) -> Result<Mat2, StretchError> {
    let mut out = [[0i128; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let mut acc: i128 = 0;
            for (k, row) in b.iter().enumerate() {
                let t = a[i][k].checked_mul(row[j]).ok_or(StretchError::Overflow)?;
                acc = acc.checked_add(t).ok_or(StretchError::Overflow)?;
            }
            out[i][j] = acc;
        }
    }
    Ok(out)
}

fn mat_pow(base: &Mat2, mut e: u32) -> Result<Mat2, StretchError> {
    let mut acc: Mat2 = [[1, 0], [0, 1]];
    let mut sq = *base;
    while e > 0 {
        if e & 1 == 1 {
            acc = mat_mul(&acc, &sq)?;
        }
        e >>= 1;
        if e > 0 {
            sq = mat_mul(&sq, &sq)?;
        }
    }
    Ok(acc)
}

const UPPER: Mat2 = [[1, 1], [0, 1]];
const LOWER: Mat2 = [[1, 0], [1, 1]];

/// Ordered product of `[[1,1],[0,1]]^{k_j} [[1,0],[1,1]]^{l_j}`, exact.
pub fn normal_form_matrix(nf: &ThreeBraidNormalForm) -> Result<Mat2, StretchError> {
    let mut acc: Mat2 = [[1, 0], [0, 1]];
    for &(k, l) in &nf.syllables {
        acc = mat_mul(&acc, &mat_pow(&UPPER, k)?)?;
        acc = mat_mul(&acc, &mat_pow(&LOWER, l)?)?;
    }
    Ok(acc)
}

/// Larger root of `x² − tr(M)x + 1`.
pub fn stretch_three_braid(nf: &ThreeBraidNormalForm) -> Result<f64, StretchError> {
    let m = normal_form_matrix(nf)?;
    let tr = m[0][0].checked_add(m[1][1]).ok_or(StretchError::Overflow)?;
    if tr <= 2 {
        return Err(StretchError::Degenerate(tr));
    }
    let t = tr as f64;
    Ok(0.5 * (t + (t * t - 4.0).sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StretchReport {
    pub n: usize,
    pub p: usize,
    pub d: usize,
    /// `n / d`, the power of `β_{n,p}` representing the full orbit.
    pub power: usize,
    /// `(s_{2p})²`
    pub lambda_beta: f64,
    /// `(s_{2p})^{2n/d}`
    pub lambda_x: f64,
    pub entropy: f64,
    /// `p > ⌊n/2⌋`: no existence theorem covers this pair.
    pub conjectural: bool,
}

pub fn stretch_report(n: usize, p: usize) -> Result<StretchReport, StretchError> {
    if n < 2 || p < 1 {
        return Err(StretchError::Parameter(format!(
            "need n >= 2 and p >= 1, got (n, p) = ({n}, {p})"
        )));
    }
    let d = gcd(n, p);
    let power = n / d;
    let s = metallic(2 * p as u64)?;
    let lambda_beta = s * s;
    let lambda_x = s.powi((2 * power) as i32);
    let entropy = (2 * power) as f64 * s.ln();
    Ok(StretchReport {
        n,
        p,
        d,
        power,
        lambda_beta,
        lambda_x,
        entropy,
        conjectural: p > n / 2,
    })
}

/// All `(n, p)` with `2 ≤ n ≤ n_max`, `1 ≤ p ≤ ⌊n/2⌋`, ordered by `n` then `p`.
pub fn table(n_max: usize) -> Result<Vec<StretchReport>, StretchError> {
    if n_max < 2 {
        return Err(StretchError::Parameter(format!(
            "n_max must be >= 2, got {n_max}"
        )));
    }
    let mut rows = Vec::new();
    for n in 2..=n_max {
        for p in 1..=n / 2 {
            rows.push(stretch_report(n, p)?);
        }
    }
    Ok(rows)
}

pub const TABLE_CSV_HEADER: &str = "n,p,d,power,lambda,entropy";

/// CSV rendering with 15 decimals for the real columns.
pub fn table_csv(rows: &[StretchReport]) -> String {
    let mut s = String::from(TABLE_CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{:.15e},{:.15}\n",
            r.n, r.p, r.d, r.power, r.lambda_x, r.entropy
        ));
    }
    s
}
