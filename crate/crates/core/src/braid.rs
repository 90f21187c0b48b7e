//! Braid words on `m` strands, the permutation homomorphism, linking numbers,
//! the Artin action on the free group and a word-growth stretch estimator.
//!
//! Letters are signed generator indices: `g > 0` is `σ_g`, `g < 0` is
//! `σ_{|g|}^{-1}`. The first letter of a word is the crossing nearest `t = 0`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BraidError {
    #[error("strand count mismatch: {left} vs {right}")]
    StrandMismatch { left: usize, right: usize },
    #[error("letter {letter} out of range for {strands} strands")]
    LetterOutOfRange { letter: i32, strands: usize },
    #[error("need at least {min} strands, got {got}")]
    TooFewStrands { min: usize, got: usize },
    #[error("parameter out of range: {0}")]
    Parameter(String),
    #[error("linking matrix requires a pure braid")]
    NotPure,
    #[error("crossing count between strands {0} and {1} is odd")]
    OddCrossings(usize, usize),
    #[error("free generator {index} out of range for rank {rank}")]
    GeneratorOutOfRange { index: i32, rank: usize },
    #[error("growth estimate needs at least 2 iterations")]
    TooFewIterations,
    #[error(
        "word length cap {cap} reached after {completed} iterate(s); partial estimate {partial:?}"
    )]
    LengthCap {
        cap: usize,
        completed: usize,
        partial: Option<f64>,
    },
    #[error("malformed braid text: {0}")]
    Parse(String),
}

/// A finite word in the Artin generators of `B_m`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BraidWord {
    strands: usize,
    letters: Vec<i32>,
}

impl BraidWord {
    pub fn new(strands: usize, letters: Vec<i32>) -> Result<Self, BraidError> {
        if strands == 0 {
            return Err(BraidError::TooFewStrands { min: 1, got: 0 });
        }
        for &g in &letters {
            if g == 0 || g.unsigned_abs() as usize >= strands {
                return Err(BraidError::LetterOutOfRange { letter: g, strands });
            }
        }
        Ok(Self { strands, letters })
    }

    pub fn identity(strands: usize) -> Self {
        Self {
            strands: strands.max(1),
            letters: Vec::new(),
        }
    }

    pub fn strands(&self) -> usize {
        self.strands
    }

    pub fn letters(&self) -> &[i32] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Concatenation `self · other` (self at the bottom). Not reduced.
    pub fn compose(&self, other: &BraidWord) -> Result<BraidWord, BraidError> {
        if self.strands != other.strands {
            return Err(BraidError::StrandMismatch {
                left: self.strands,
                right: other.strands,
            });
        }
        let mut letters = Vec::with_capacity(self.len() + other.len());
        letters.extend_from_slice(&self.letters);
        letters.extend_from_slice(&other.letters);
        Ok(BraidWord {
            strands: self.strands,
            letters,
        })
    }

    /// Cancels adjacent `g, -g` pairs only; braid relations are never applied.
    pub fn free_reduce(&self) -> BraidWord {
        BraidWord {
            strands: self.strands,
            letters: free_reduce_letters(&self.letters),
        }
    }

    pub fn inverse(&self) -> BraidWord {
        BraidWord {
            strands: self.strands,
            letters: self.letters.iter().rev().map(|g| -g).collect(),
        }
    }

    pub fn power(&self, k: usize) -> BraidWord {
        let mut letters = Vec::with_capacity(self.len() * k);
        for _ in 0..k {
            letters.extend_from_slice(&self.letters);
        }
        BraidWord {
            strands: self.strands,
            letters,
        }
    }

    /// Conjugate `c^{-1} · self · c`.
    pub fn conjugate_by(&self, c: &BraidWord) -> Result<BraidWord, BraidError> {
        c.inverse().compose(self)?.compose(c)
    }

    /// Image under `σ̂`, with `σ̂(σ_j) = (j, j+1)` and products composed as
    /// maps (right factor acts first), so that `σ̂(σ1 σ2⁻¹) = (12)(23) = (123)`.
    pub fn permutation(&self) -> Permutation {
        // σ̂(w) = t_{l1} ∘ t_{l2} ∘ … ; evaluate by applying letters from the right.
        let mut images: Vec<usize> = (0..self.strands).collect();
        // images[i] = σ̂(w)(i). Build by pre-composing from the left:
        // P ← P ∘ t_l for l in order, i.e. new(i) = P(t_l(i)).
        for &g in &self.letters {
            let j = g.unsigned_abs() as usize - 1;
            images.swap(j, j + 1);
        }
        Permutation { images }
    }

    /// Start slot → end slot of each strand when the word is read bottom to top.
    /// This is the inverse of [`BraidWord::permutation`].
    pub fn strand_map(&self) -> Permutation {
        self.permutation().inverse()
    }

    pub fn is_pure(&self) -> bool {
        self.permutation().is_identity()
    }

    pub fn exponent_sum(&self) -> i64 {
        self.letters.iter().map(|&g| g.signum() as i64).sum()
    }

    /// Pairwise linking numbers of a pure braid, labelled by starting slot.
    pub fn linking_matrix(&self) -> Result<LinkingMatrix, BraidError> {
        if !self.is_pure() {
            return Err(BraidError::NotPure);
        }
        let m = self.strands;
        // slot -> strand currently occupying it
        let mut at: Vec<usize> = (0..m).collect();
        let mut half = vec![0i64; m * m];
        for &g in &self.letters {
            let k = g.unsigned_abs() as usize - 1;
            let (a, b) = (at[k], at[k + 1]);
            let s = g.signum() as i64;
            half[a * m + b] += s;
            half[b * m + a] += s;
            at.swap(k, k + 1);
        }
        let mut entries = vec![0i64; m * m];
        for i in 0..m {
            for j in 0..m {
                let h = half[i * m + j];
                if h % 2 != 0 {
                    return Err(BraidError::OddCrossings(i + 1, j + 1));
                }
                entries[i * m + j] = h / 2;
            }
        }
        Ok(LinkingMatrix { size: m, entries })
    }

    /// Plain-text form: `strands=m` header, then comma-separated letters.
    pub fn to_text(&self) -> String {
        let body: Vec<String> = self.letters.iter().map(|g| g.to_string()).collect();
        format!("strands={}\n{}", self.strands, body.join(","))
    }

    pub fn from_text(s: &str) -> Result<Self, BraidError> {
        let s = s.strip_suffix('\n').unwrap_or(s);
        let (header, body) = match s.split_once('\n') {
            Some((h, b)) => (h, b),
            None => (s, ""),
        };
        let strands = header
            .strip_prefix("strands=")
            .ok_or_else(|| BraidError::Parse(format!("bad header {header:?}")))?
            .parse::<usize>()
            .map_err(|e| BraidError::Parse(e.to_string()))?;
        let letters = if body.is_empty() {
            Vec::new()
        } else {
            body.split(',')
                .map(|t| {
                    t.parse::<i32>()
                        .map_err(|e| BraidError::Parse(format!("{t:?}: {e}")))
                })
                .collect::<Result<Vec<_>, _>>()?
        };
        BraidWord::new(strands, letters)
    }
}

impl fmt::Display for BraidWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for BraidWord {
    type Err = BraidError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BraidWord::from_text(s)
    }
}

pub(crate) fn free_reduce_letters<T>(letters: &[T]) -> Vec<T>
where
    T: Copy + PartialEq + std::ops::Neg<Output = T>,
{
    let mut out: Vec<T> = Vec::with_capacity(letters.len());
    for &g in letters {
        push_reduced(&mut out, g);
    }
    out
}

#[inline]
fn push_reduced<T>(out: &mut Vec<T>, g: T)
where
    T: Copy + PartialEq + std::ops::Neg<Output = T>,
{
    if out.last().is_some_and(|&h| h == -g) {
        out.pop();
    } else {
        out.push(g);
    }
}

/// Half twist `Δ_m = (σ1…σ_{m-1})(σ1…σ_{m-2})…(σ1σ2)σ1`.
pub fn half_twist(m: usize) -> Result<BraidWord, BraidError> {
    if m < 2 {
        return Err(BraidError::TooFewStrands { min: 2, got: m });
    }
    let mut letters = Vec::with_capacity(m * (m - 1) / 2);
    for top in (1..m).rev() {
        letters.extend(1..=top as i32);
    }
    Ok(BraidWord {
        strands: m,
        letters,
    })
}

pub fn full_twist(m: usize) -> Result<BraidWord, BraidError> {
    Ok(half_twist(m)?.power(2))
}

fn check_n(n: usize) -> Result<(), BraidError> {
    if n < 2 {
        return Err(BraidError::Parameter(format!("n must be >= 2, got {n}")));
    }
    Ok(())
}

/// `u_n = (σ1σ2…σ_{2n-1})(σ1σ3…σ_{2n-1})^{-1}` on `2n` strands, unreduced.
pub fn u_braid(n: usize) -> Result<BraidWord, BraidError> {
    check_n(n)?;
    let top = 2 * n as i32 - 1;
    let mut letters: Vec<i32> = (1..=top).collect();
    letters.extend((1..=top).rev().step_by(2).map(|g| -g));
    Ok(BraidWord {
        strands: 2 * n,
        letters,
    })
}

/// `v_n = (σ1σ2…σ_{2n-1})^{-1}(σ1σ3…σ_{2n-1})` on `2n` strands, unreduced.
pub fn v_braid(n: usize) -> Result<BraidWord, BraidError> {
    check_n(n)?;
    let top = 2 * n as i32 - 1;
    let mut letters: Vec<i32> = (1..=top).rev().map(|g| -g).collect();
    letters.extend((1..=top).step_by(2));
    Ok(BraidWord {
        strands: 2 * n,
        letters,
    })
}

/// `β_{n,p} = u_n^p v_n^p`.
pub fn beta(n: usize, p: usize) -> Result<BraidWord, BraidError> {
    check_n(n)?;
    if p < 1 {
        return Err(BraidError::Parameter(format!("p must be >= 1, got {p}")));
    }
    u_braid(n)?.power(p).compose(&v_braid(n)?.power(p))
}

/// A bijection of `{1..m}`, stored zero-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn identity(m: usize) -> Self {
        Self {
            images: (0..m).collect(),
        }
    }

    /// From one-based images: `images[i-1] = π(i)`.
    pub fn from_images(images: &[usize]) -> Result<Self, BraidError> {
        let m = images.len();
        let mut seen = vec![false; m];
        let mut zero = Vec::with_capacity(m);
        for &v in images {
            if v == 0 || v > m || seen[v - 1] {
                return Err(BraidError::Parameter(format!(
                    "not a bijection of 1..{m}: {images:?}"
                )));
            }
            seen[v - 1] = true;
            zero.push(v - 1);
        }
        Ok(Self { images: zero })
    }

    /// Product of one-based cycles, composed right to left.
    pub fn from_cycles(m: usize, cycles: &[Vec<usize>]) -> Result<Self, BraidError> {
        let mut acc = Permutation::identity(m);
        for cycle in cycles.iter().rev() {
            let mut c = Permutation::identity(m);
            for (idx, &a) in cycle.iter().enumerate() {
                let b = cycle[(idx + 1) % cycle.len()];
                if a == 0 || a > m || b == 0 || b > m {
                    return Err(BraidError::Parameter(format!("cycle entry out of 1..{m}")));
                }
                c.images[a - 1] = b - 1;
            }
            // validate bijection
            Permutation::from_images(&c.images.iter().map(|v| v + 1).collect::<Vec<_>>())?;
            acc = c.then_after(&acc);
        }
        Ok(acc)
    }

    fn then_after(&self, first: &Permutation) -> Permutation {
        // self ∘ first
        Permutation {
            images: first.images.iter().map(|&i| self.images[i]).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// One-based image of one-based `i`.
    pub fn apply(&self, i: usize) -> usize {
        self.images[i - 1] + 1
    }

    pub fn images(&self) -> Vec<usize> {
        self.images.iter().map(|v| v + 1).collect()
    }

    /// `self ∘ other`: `other` acts first.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        assert_eq!(self.len(), other.len(), "permutation size mismatch");
        self.then_after(other)
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.len()];
        for (i, &v) in self.images.iter().enumerate() {
            inv[v] = i;
        }
        Permutation { images: inv }
    }

    pub fn pow(&self, k: i64) -> Permutation {
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let mut acc = Permutation::identity(self.len());
        for _ in 0..k.unsigned_abs() {
            acc = base.compose(&acc);
        }
        acc
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &v)| i == v)
    }

    /// Nontrivial cycles, one-based, each starting at its smallest element.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.len()];
        let mut out = Vec::new();
        for start in 0..self.len() {
            if seen[start] {
                continue;
            }
            let mut cyc = Vec::new();
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                cyc.push(i + 1);
                i = self.images[i];
            }
            if cyc.len() > 1 {
                out.push(cyc);
            }
        }
        out
    }

    /// Sorted cycle lengths including fixed points.
    pub fn cycle_type(&self) -> Vec<usize> {
        let mut seen = vec![false; self.len()];
        let mut lens = Vec::new();
        for start in 0..self.len() {
            let mut len = 0;
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                len += 1;
                i = self.images[i];
            }
            if len > 0 {
                lens.push(len);
            }
        }
        lens.sort_unstable_by(|a, b| b.cmp(a));
        lens
    }

    pub fn order(&self) -> usize {
        self.cycle_type().into_iter().fold(1, lcm)
    }
}

impl std::ops::Mul for &Permutation {
    type Output = Permutation;

    fn mul(self, rhs: &Permutation) -> Permutation {
        self.compose(rhs)
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cycles = self.cycles();
        if cycles.is_empty() {
            return f.write_str("()");
        }
        for c in cycles {
            let parts: Vec<String> = c.iter().map(|v| v.to_string()).collect();
            write!(f, "({})", parts.join(","))?;
        }
        Ok(())
    }
}

pub fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// The permutation `(1,3,…,2n-1)^p (2,4,…,2n)^{-p}` on `2n` letters.
pub fn return_permutation(n: usize, p: usize) -> Permutation {
    let odd: Vec<usize> = (1..=n).map(|k| 2 * k - 1).collect();
    let even: Vec<usize> = (1..=n).map(|k| 2 * k).collect();
    let odd_c = Permutation::from_cycles(2 * n, &[odd]).expect("valid cycle");
    let even_c = Permutation::from_cycles(2 * n, &[even]).expect("valid cycle");
    odd_c.pow(p as i64).compose(&even_c.pow(-(p as i64)))
}

/// Symmetric integer matrix of pairwise linking numbers, zero diagonal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkingMatrix {
    size: usize,
    entries: Vec<i64>,
}

impl LinkingMatrix {
    pub fn size(&self) -> usize {
        self.size
    }

    /// One-based entry.
    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.entries[(i - 1) * self.size + (j - 1)]
    }

    /// Off-diagonal entries `i < j`, sorted ascending.
    pub fn sorted_pairs(&self) -> Vec<i64> {
        let mut v = Vec::with_capacity(self.size * (self.size - 1) / 2);
        for i in 0..self.size {
            for j in (i + 1)..self.size {
                v.push(self.entries[i * self.size + j]);
            }
        }
        v.sort_unstable();
        v
    }
}

/// Freely reduced word over `x_1..x_rank`; `±i` encodes `x_i^{±1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FreeGroupWord {
    rank: usize,
    letters: Vec<i32>,
}

impl FreeGroupWord {
    pub fn new(rank: usize, letters: &[i32]) -> Result<Self, BraidError> {
        for &g in letters {
            if g == 0 || g.unsigned_abs() as usize > rank {
                return Err(BraidError::GeneratorOutOfRange { index: g, rank });
            }
        }
        Ok(Self {
            rank,
            letters: free_reduce_letters(letters),
        })
    }

    pub fn generator(rank: usize, i: usize) -> Result<Self, BraidError> {
        Self::new(rank, &[i as i32])
    }

    /// `x_1 x_2 … x_rank`.
    pub fn boundary(rank: usize) -> Self {
        Self {
            rank,
            letters: (1..=rank as i32).collect(),
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn letters(&self) -> &[i32] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn cyclically_reduced_len(&self) -> usize {
        cyclic_len(&self.letters)
    }
}

fn cyclic_len<T: Copy + PartialEq + std::ops::Neg<Output = T>>(w: &[T]) -> usize {
    let (mut lo, mut hi) = (0usize, w.len());
    while hi - lo >= 2 && w[lo] == -w[hi - 1] {
        lo += 1;
        hi -= 1;
    }
    hi - lo
}

/// Image of `x_{i}^{sign}` under a single Artin generator `σ_g^{±1}`.
fn generator_image(g: i32, letter: i32, out: &mut Vec<i32>) {
    let i = g.unsigned_abs() as i32;
    let x = letter.abs();
    let s = letter.signum();
    let img: [i32; 3];
    let slice: &[i32] = if g > 0 {
        // x_i -> x_i x_{i+1} x_i^{-1}, x_{i+1} -> x_i
        if x == i {
            img = [i, i + 1, -i];
            &img
        } else if x == i + 1 {
            img = [i, 0, 0];
            &img[..1]
        } else {
            img = [x, 0, 0];
            &img[..1]
        }
    } else {
        // x_i -> x_{i+1}, x_{i+1} -> x_{i+1}^{-1} x_i x_{i+1}
        if x == i {
            img = [i + 1, 0, 0];
            &img[..1]
        } else if x == i + 1 {
            img = [-(i + 1), i, i + 1];
            &img
        } else {
            img = [x, 0, 0];
            &img[..1]
        }
    };
    if s > 0 {
        for &l in slice {
            push_reduced(out, l);
        }
    } else {
        for &l in slice.iter().rev() {
            push_reduced(out, -l);
        }
    }
}

/// Apply the Artin automorphism of `b` to `w`, letters of `b` acting in order.
pub fn artin_apply(b: &BraidWord, w: &FreeGroupWord) -> Result<FreeGroupWord, BraidError> {
    if w.rank != b.strands {
        return Err(BraidError::StrandMismatch {
            left: b.strands,
            right: w.rank,
        });
    }
    let mut cur = w.letters.clone();
    let mut next = Vec::with_capacity(cur.len());
    for &g in &b.letters {
        next.clear();
        for &l in &cur {
            generator_image(g, l, &mut next);
        }
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(FreeGroupWord {
        rank: w.rank,
        letters: cur,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GrowthMode {
    /// Track generator images, measure plain reduced length.
    Plain,
    /// Track the loops `x_i x_{i+1}`, measure cyclically reduced length.
    Cyclic,
    /// Iterate a generic measured lamination in Dynnikov coordinates and
    /// measure its norm; no length cap applies.
    Lamination,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthConfig {
    pub iterations: usize,
    pub mode: GrowthMode,
    pub length_cap: usize,
}

impl Default for GrowthConfig {
    fn default() -> Self {
        Self {
            iterations: 20,
            mode: GrowthMode::Lamination,
            length_cap: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthEstimate {
    /// `len_k / len_{k-1}` at the last iterate reached.
    pub value: f64,
    pub iterations: usize,
    pub capped: bool,
    /// Word lengths per iterate (word modes only).
    pub lengths: Vec<usize>,
    /// Successive growth ratios; the last one is `value`.
    pub ratios: Vec<f64>,
}

fn pos(x: f64) -> f64 {
    x.max(0.0)
}

fn neg(x: f64) -> f64 {
    x.min(0.0)
}

/// Dynnikov update for one letter on `m` punctures; `a`, `b` have `m - 2`
/// entries each.
fn dynnikov_letter(g: i32, m: usize, a: &mut [f64], b: &mut [f64]) {
    let i = g.unsigned_abs() as usize;
    let sign = g.signum();
    // σ^{-1} is the mirror image of σ, and mirroring flips `a`.
    let s = sign as f64;
    if i == 1 || i == m - 1 {
        let j = if i == 1 { 0 } else { m - 3 };
        let (x, y) = (s * a[j], b[j]);
        let (nx, ny) = if i == 1 {
            (-y + pos(x + pos(y)), x + pos(y))
        } else {
            (-y + neg(x + neg(y)), x + neg(y))
        };
        a[j] = s * nx;
        b[j] = ny;
        return;
    }
    let j = i - 2;
    let (a0, a1, b0, b1) = (a[j], a[j + 1], b[j], b[j + 1]);
    if sign > 0 {
        let c = a0 - a1 - pos(b1) + neg(b0);
        a[j] = a0 - pos(b0) - pos(pos(b1) + c);
        b[j] = b1 + neg(c);
        a[j + 1] = a1 - neg(b1) - neg(neg(b0) - c);
        b[j + 1] = b0 - neg(c);
    } else {
        let d = a0 - a1 + pos(b1) - neg(b0);
        a[j] = a0 + pos(b0) + pos(pos(b1) - d);
        b[j] = b1 - pos(d);
        a[j + 1] = a1 + neg(b1) + neg(neg(b0) + d);
        b[j + 1] = b0 + pos(d);
    }
}

/// Applies `b` to Dynnikov coordinates `(a, b)` of a measured lamination.
pub fn dynnikov_apply(word: &BraidWord, a: &mut [f64], b: &mut [f64]) -> Result<(), BraidError> {
    let m = word.strands;
    if m < 3 || a.len() != m - 2 || b.len() != m - 2 {
        return Err(BraidError::Parameter(format!(
            "Dynnikov coordinates need {} + {} entries for {m} strands",
            m.saturating_sub(2),
            m.saturating_sub(2)
        )));
    }
    for &g in &word.letters {
        dynnikov_letter(g, m, a, b);
    }
    Ok(())
}

fn lamination_growth(b: &BraidWord, iterations: usize) -> GrowthEstimate {
    let m = b.strands;
    let k = m - 2;
    // fixed, generic starting lamination
    let mut xa: Vec<f64> = (0..k).map(|i| (1.3 * i as f64 + 0.7).sin()).collect();
    let mut xb: Vec<f64> = (0..k).map(|i| (2.1 * i as f64 + 0.4).cos()).collect();
    let norm = |a: &[f64], b: &[f64]| a.iter().chain(b).map(|v| v * v).sum::<f64>().sqrt();
    let mut ratios = Vec::with_capacity(iterations);
    let mut prev = norm(&xa, &xb);
    for _ in 0..iterations {
        dynnikov_apply(b, &mut xa, &mut xb).expect("sizes match");
        let cur = norm(&xa, &xb);
        ratios.push(cur / prev);
        for v in xa.iter_mut().chain(xb.iter_mut()) {
            *v /= cur;
        }
        prev = 1.0;
    }
    GrowthEstimate {
        value: *ratios.last().expect("iterations >= 2"),
        iterations,
        capped: false,
        lengths: Vec::new(),
        ratios,
    }
}

/// Stretch factor estimate from the growth of word lengths under iterated
/// Artin action. Stops early (with `capped = true`) when the next iterate
/// would exceed the length cap.
pub fn growth_estimate(b: &BraidWord, cfg: &GrowthConfig) -> Result<GrowthEstimate, BraidError> {
    if cfg.iterations < 2 {
        return Err(BraidError::TooFewIterations);
    }
    let m = b.strands;
    if m < 2 {
        return Ok(GrowthEstimate {
            value: 1.0,
            iterations: cfg.iterations,
            capped: false,
            lengths: vec![1; cfg.iterations + 1],
            ratios: vec![1.0; cfg.iterations],
        });
    }
    if cfg.mode == GrowthMode::Lamination {
        if m == 2 {
            // the twice-punctured disk carries no essential lamination
            return Ok(GrowthEstimate {
                value: 1.0,
                iterations: cfg.iterations,
                capped: false,
                lengths: Vec::new(),
                ratios: vec![1.0; cfg.iterations],
            });
        }
        return Ok(lamination_growth(b, cfg.iterations));
    }
    // images of the free generators, stored compactly
    let images: Vec<Vec<i16>> = (1..=m)
        .map(|i| {
            let x = FreeGroupWord::generator(m, i).expect("in range");
            artin_apply(b, &x)
                .expect("rank matches")
                .letters
                .iter()
                .map(|&l| l as i16)
                .collect()
        })
        .collect();
    let mut tracked: Vec<Vec<i16>> = match cfg.mode {
        GrowthMode::Plain => (1..=m as i16).map(|i| vec![i]).collect(),
        GrowthMode::Cyclic | GrowthMode::Lamination => {
            (1..m as i16).map(|i| vec![i, i + 1]).collect()
        }
    };
    let measure = |words: &[Vec<i16>]| -> usize {
        words
            .iter()
            .map(|w| match cfg.mode {
                GrowthMode::Plain => w.len(),
                _ => cyclic_len(w),
            })
            .max()
            .unwrap_or(0)
    };
    let mut lengths = vec![measure(&tracked)];
    let mut capped = false;
    for _ in 0..cfg.iterations {
        let predicted: usize = tracked
            .iter()
            .flat_map(|w| w.iter())
            .map(|&l| images[l.unsigned_abs() as usize - 1].len())
            .sum();
        if predicted > cfg.length_cap {
            capped = true;
            break;
        }
        tracked = tracked
            .iter()
            .map(|w| {
                let mut out: Vec<i16> = Vec::with_capacity(w.len() * 2);
                for &l in w {
                    let img = &images[l.unsigned_abs() as usize - 1];
                    if l > 0 {
                        for &h in img {
                            push_reduced(&mut out, h);
                        }
                    } else {
                        for &h in img.iter().rev() {
                            push_reduced(&mut out, -h);
                        }
                    }
                }
                out
            })
            .collect();
        lengths.push(measure(&tracked));
    }
    let done = lengths.len() - 1;
    if done < 2 {
        let partial = (done == 1 && lengths[0] > 0).then(|| lengths[1] as f64 / lengths[0] as f64);
        return Err(BraidError::LengthCap {
            cap: cfg.length_cap,
            completed: done,
            partial,
        });
    }
    let ratios: Vec<f64> = lengths
        .windows(2)
        .map(|w| w[1] as f64 / w[0] as f64)
        .collect();
    Ok(GrowthEstimate {
        value: ratios[done - 1],
        iterations: done,
        capped,
        lengths,
        ratios,
    })
}
