//! Braid words read off planar motions by tracking the order of the
//! projections onto a line, and conjugacy-invariant fingerprints used to
//! compare them with `β_{n,p}`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::braid::{
    beta, gcd, growth_estimate, return_permutation, BraidError, BraidWord, GrowthConfig,
    Permutation,
};
use crate::exec::Execution;
use crate::nbody::{NbodyError, Trajectory};
use crate::stretch::{metallic, StretchError};

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("degenerate projection at angle {angle} near t = {time}: {reason}; retry with another angle")]
    Degenerate {
        angle: f64,
        time: f64,
        reason: String,
    },
    #[error("no generic projection among {tried} angle(s): {last}")]
    NoGenericAngle { tried: usize, last: String },
    #[error("motion covers [{start}, {end}] but [{from}, {to}] was requested")]
    Span {
        start: f64,
        end: f64,
        from: f64,
        to: f64,
    },
    #[error("{0}")]
    Parameter(String),
    #[error(transparent)]
    Braid(#[from] BraidError),
    #[error(transparent)]
    Trajectory(#[from] NbodyError),
    #[error(transparent)]
    Stretch(#[from] StretchError),
}

/// Anything that can report strand positions over a time span.
pub trait Motion: Sync {
    fn strands(&self) -> usize;
    fn span(&self) -> (f64, f64);
    /// Natural sampling instants; the scan grid refines these.
    fn sample_times(&self) -> &[f64];
    fn positions_at(&self, t: f64) -> Result<Vec<Complex64>, ExtractError>;
}

impl Motion for Trajectory {
    fn strands(&self) -> usize {
        self.bodies()
    }

    fn span(&self) -> (f64, f64) {
        (self.times[0], self.coverage_end())
    }

    fn sample_times(&self) -> &[f64] {
        &self.times
    }

    fn positions_at(&self, t: f64) -> Result<Vec<Complex64>, ExtractError> {
        Ok(Trajectory::positions_at(self, t)?)
    }
}

/// Samples with exact velocities, interpolated by cubic Hermite.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledMotion {
    times: Vec<f64>,
    positions: Vec<Vec<Complex64>>,
    velocities: Vec<Vec<Complex64>>,
}

impl SampledMotion {
    pub fn new(
        times: Vec<f64>,
        positions: Vec<Vec<Complex64>>,
        velocities: Vec<Vec<Complex64>>,
    ) -> Result<Self, ExtractError> {
        if times.len() < 2 || positions.len() != times.len() || velocities.len() != times.len() {
            return Err(ExtractError::Parameter(
                "need at least two samples with positions and velocities".into(),
            ));
        }
        if times
            .windows(2)
            .any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
        {
            return Err(ExtractError::Parameter("sample times must increase".into()));
        }
        let m = positions[0].len();
        if positions.iter().chain(&velocities).any(|r| r.len() != m) {
            return Err(ExtractError::Parameter("ragged sample rows".into()));
        }
        Ok(Self {
            times,
            positions,
            velocities,
        })
    }
}

impl Motion for SampledMotion {
    fn strands(&self) -> usize {
        self.positions[0].len()
    }

    fn span(&self) -> (f64, f64) {
        (self.times[0], *self.times.last().unwrap())
    }

    fn sample_times(&self) -> &[f64] {
        &self.times
    }

    fn positions_at(&self, t: f64) -> Result<Vec<Complex64>, ExtractError> {
        let (a, b) = self.span();
        if t < a || t > b {
            return Err(ExtractError::Span {
                start: a,
                end: b,
                from: t,
                to: t,
            });
        }
        let j = self
            .times
            .partition_point(|&s| s <= t)
            .saturating_sub(1)
            .min(self.times.len() - 2);
        let (t0, t1) = (self.times[j], self.times[j + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let h00 = 2.0 * s.powi(3) - 3.0 * s * s + 1.0;
        let h10 = s.powi(3) - 2.0 * s * s + s;
        let h01 = -2.0 * s.powi(3) + 3.0 * s * s;
        let h11 = s.powi(3) - s * s;
        let (x0, x1) = (&self.positions[j], &self.positions[j + 1]);
        let (v0, v1) = (&self.velocities[j], &self.velocities[j + 1]);
        Ok((0..x0.len())
            .map(|b| x0[b] * h00 + v0[b] * (h10 * h) + x1[b] * h01 + v1[b] * (h11 * h))
            .collect())
    }
}

/// Geometric realization of `word`: strands rest at `1..=m` on the real
/// axis and each letter swaps one adjacent pair by a half turn about its
/// midpoint (counterclockwise for positive letters) during one time unit.
pub fn synthesize(
    word: &BraidWord,
    samples_per_letter: usize,
) -> Result<SampledMotion, ExtractError> {
    if samples_per_letter < 2 {
        return Err(ExtractError::Parameter(
            "need at least 2 samples per letter".into(),
        ));
    }
    let m = word.strands();
    let mut rest: Vec<Complex64> = (1..=m).map(|k| Complex64::new(k as f64, 0.0)).collect();
    // slot -> strand currently resting there
    let mut at: Vec<usize> = (0..m).collect();
    let zero = Complex64::new(0.0, 0.0);
    let mut times = vec![0.0];
    let mut positions = vec![rest.clone()];
    let mut velocities = vec![vec![zero; m]];
    for (l, &g) in word.letters().iter().enumerate() {
        let k = g.unsigned_abs() as usize - 1;
        let dir = g.signum() as f64;
        let (a, b) = (at[k], at[k + 1]);
        let centre = (rest[a] + rest[b]) * 0.5;
        for j in 1..=samples_per_letter {
            let tau = j as f64 / samples_per_letter as f64;
            // smoothstep keeps velocities continuous across letters
            let phi = std::f64::consts::PI * (3.0 * tau * tau - 2.0 * tau.powi(3));
            let dphi = std::f64::consts::PI * (6.0 * tau - 6.0 * tau * tau);
            let mut x = rest.clone();
            let mut v = vec![zero; m];
            let right = Complex64::from_polar(0.5, dir * phi);
            x[b] = centre + right;
            x[a] = centre - right;
            let vr = right * Complex64::new(0.0, dir * dphi);
            v[b] = vr;
            v[a] = -vr;
            times.push(l as f64 + tau);
            positions.push(x);
            velocities.push(v);
        }
        rest.swap(a, b);
        at.swap(k, k + 1);
    }
    if word.is_empty() {
        times.push(1.0);
        positions.push(rest);
        velocities.push(vec![zero; m]);
    }
    SampledMotion::new(times, positions, velocities)
}

/// Hand-built words for round-trip tests of the extractor.
pub fn synthesis_library() -> Vec<BraidWord> {
    let raw: [(usize, &[i32]); 12] = [
        (2, &[1]),
        (2, &[-1]),
        (3, &[1, 1, -2, -2]),
        (3, &[1, -2]),
        (3, &[1, 2, 1]),
        (3, &[1, 2, 1, 1, 2, 1]),
        (3, &[1, -2, 1, -2, 1, -2]),
        (4, &[1, 2, 3, -3, -1]),
        (4, &[1, 2, 3, -3, -1, -3, -2, -1, 1, 3]),
        (5, &[2, -1, 3, -2, 4, 1]),
        (5, &[-1, -1, -1, 2, 2, 3, -4]),
        (6, &[1, 3, 5, -2, -4, 1, 3, 5]),
    ];
    raw.iter()
        .map(|(m, l)| BraidWord::new(*m, l.to_vec()).expect("library words are valid"))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingEvent {
    pub time: f64,
    /// One-based adjacent slots `(k, k+1)` exchanged.
    pub slots: (usize, usize),
    /// Strand labels (one-based) occupying those slots just before.
    pub strands: (usize, usize),
    /// The strand with the larger perpendicular coordinate.
    pub front: usize,
    pub sign: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extraction {
    pub angle: f64,
    pub word: BraidWord,
    pub events: Vec<CrossingEvent>,
    /// Strand label (one-based) in each slot at the start of the window.
    pub initial_order: Vec<usize>,
}

impl Extraction {
    /// Start-to-end permutation of strand labels:
    /// `x_i(end) = x_{π(i)}(start)`.
    pub fn label_permutation(&self) -> Permutation {
        let order = Permutation::from_images(&self.initial_order).expect("order is a bijection");
        order
            .compose(&self.word.strand_map())
            .compose(&order.inverse())
    }
}

struct Scanner<'a, M: Motion> {
    motion: &'a M,
    rot: Complex64,
    angle: f64,
    time_tol: f64,
    dist_tol: f64,
}

impl<M: Motion> Scanner<'_, M> {
    /// (along, across) coordinates of every strand.
    fn project(&self, t: f64) -> Result<(Vec<f64>, Vec<f64>), ExtractError> {
        let x = self.motion.positions_at(t)?;
        Ok(x.iter()
            .map(|z| {
                let r = z * self.rot;
                (r.re, r.im)
            })
            .unzip())
    }

    fn order(&self, s: &[f64]) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..s.len()).collect();
        idx.sort_by(|&a, &b| s[a].total_cmp(&s[b]));
        idx
    }

    fn degenerate(&self, time: f64, reason: impl Into<String>) -> ExtractError {
        ExtractError::Degenerate {
            angle: self.angle,
            time,
            reason: reason.into(),
        }
    }

    /// Adjacent pairs swapped between two orders, if the change is a product
    /// of disjoint adjacent transpositions.
    fn simple_swaps(a: &[usize], b: &[usize]) -> Option<Vec<usize>> {
        let mut out = Vec::new();
        let mut k = 0;
        while k < a.len() {
            if a[k] == b[k] {
                k += 1;
            } else if k + 1 < a.len() && a[k] == b[k + 1] && a[k + 1] == b[k] {
                out.push(k);
                k += 2;
            } else {
                return None;
            }
        }
        Some(out)
    }

    fn scan(
        &self,
        ta: f64,
        oa: &[usize],
        tb: f64,
        ob: &[usize],
        events: &mut Vec<CrossingEvent>,
    ) -> Result<(), ExtractError> {
        if oa == ob {
            return Ok(());
        }
        if let Some(swaps) = Self::simple_swaps(oa, ob) {
            let mut found = Vec::with_capacity(swaps.len());
            for k in swaps {
                found.push(self.locate(ta, tb, k, oa)?);
            }
            found.sort_by(|x, y| x.time.total_cmp(&y.time));
            events.extend(found);
            return Ok(());
        }
        if tb - ta < self.time_tol {
            return Err(self.degenerate(ta, "three or more projections coincide"));
        }
        let tm = 0.5 * (ta + tb);
        let om = self.order(&self.project(tm)?.0);
        self.scan(ta, oa, tm, &om, events)?;
        self.scan(tm, &om, tb, ob, events)
    }

    /// Bisects the exchange of the strands in slots `k`, `k+1` of `order`.
    fn locate(
        &self,
        ta: f64,
        tb: f64,
        k: usize,
        order: &[usize],
    ) -> Result<CrossingEvent, ExtractError> {
        let (left, right) = (order[k], order[k + 1]);
        let (mut lo, mut hi) = (ta, tb);
        while hi - lo > self.time_tol {
            let mid = 0.5 * (lo + hi);
            let (s, _) = self.project(mid)?;
            if s[right] - s[left] > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let tc = 0.5 * (lo + hi);
        let (s, w) = self.project(tc)?;
        let gap = w[right] - w[left];
        if gap.abs() < self.dist_tol {
            return Err(self.degenerate(
                tc,
                format!("strands {} and {} nearly collide", left + 1, right + 1),
            ));
        }
        let here = 0.5 * (s[left] + s[right]);
        for (slot, &other) in order.iter().enumerate() {
            if slot != k && slot != k + 1 && (s[other] - here).abs() < self.dist_tol {
                return Err(self.degenerate(tc, "three projections coincide"));
            }
        }
        // tangential touch: the separation barely changes sign across the bracket
        let h = (tb - ta).min(1e3 * self.time_tol).max(self.time_tol);
        let (sa, _) = self.project((tc - h).max(ta))?;
        let (sb, _) = self.project((tc + h).min(tb))?;
        let slope = ((sa[right] - sa[left]) - (sb[right] - sb[left])).abs();
        if slope < self.dist_tol * 1e-3 {
            return Err(self.degenerate(tc, "near-tangential crossing"));
        }
        // the right strand moves left; positive when it passes in front
        let sign = if gap > 0.0 { 1 } else { -1 };
        Ok(CrossingEvent {
            time: tc,
            slots: (k + 1, k + 2),
            strands: (left + 1, right + 1),
            front: if gap > 0.0 { right + 1 } else { left + 1 },
            sign,
        })
    }
}

/// Refinement of the natural sample grid used when scanning for crossings.
pub const SCAN_REFINE: usize = 4;

/// Reads the braid traced by `motion` over `[t0, t1]` when viewed along the
/// line at `angle` (radians from the x-axis). Letters are ordered in time.
pub fn extract_word<M: Motion>(
    motion: &M,
    angle: f64,
    t0: f64,
    t1: f64,
) -> Result<Extraction, ExtractError> {
    let (a, b) = motion.span();
    let slack = 1e-12 * (b - a).abs().max(1.0);
    if !(t1 > t0) || t0 < a - slack || t1 > b + slack {
        return Err(ExtractError::Span {
            start: a,
            end: b,
            from: t0,
            to: t1,
        });
    }
    let x0 = motion.positions_at(t0)?;
    let scale = x0.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    let scanner = Scanner {
        motion,
        rot: Complex64::from_polar(1.0, -angle),
        angle,
        time_tol: 1e-10 * (b - a),
        dist_tol: 1e-9 * scale,
    };
    let mut grid = vec![t0];
    for &s in motion.sample_times() {
        if s > t0 && s < t1 {
            grid.push(s);
        }
    }
    grid.push(t1);
    let fine: Vec<f64> = grid
        .windows(2)
        .flat_map(|w| {
            (0..SCAN_REFINE).map(move |j| w[0] + (w[1] - w[0]) * j as f64 / SCAN_REFINE as f64)
        })
        .chain(std::iter::once(t1))
        .collect();

    let (s0, _) = scanner.project(t0)?;
    let mut order = scanner.order(&s0);
    for w in order.windows(2) {
        if s0[w[1]] - s0[w[0]] < scanner.dist_tol {
            return Err(scanner.degenerate(t0, "projections tie at the window start"));
        }
    }
    let initial_order: Vec<usize> = order.iter().map(|i| i + 1).collect();
    let mut events = Vec::new();
    for w in fine.windows(2) {
        let next = scanner.order(&scanner.project(w[1])?.0);
        scanner.scan(w[0], &order, w[1], &next, &mut events)?;
        order = next;
    }
    let letters = events.iter().map(|e| e.sign * e.slots.0 as i32).collect();
    Ok(Extraction {
        angle,
        word: BraidWord::new(motion.strands(), letters)?,
        events,
        initial_order,
    })
}

/// Generic projection angles tried in order.
pub const DEFAULT_ANGLES: [f64; 6] = [0.1234, 0.2718, -0.1414, 0.3271, 0.0577, -0.2236];

/// First successful extraction along `angles`.
pub fn extract_with_schedule<M: Motion>(
    motion: &M,
    angles: &[f64],
    t0: f64,
    t1: f64,
) -> Result<Extraction, ExtractError> {
    let mut last = String::from("empty angle schedule");
    for &a in angles {
        match extract_word(motion, a, t0, t1) {
            Ok(e) => return Ok(e),
            Err(e @ ExtractError::Degenerate { .. }) => last = e.to_string(),
            Err(e) => return Err(e),
        }
    }
    Err(ExtractError::NoGenericAngle {
        tried: angles.len(),
        last,
    })
}

/// Conjugacy invariants of a braid modulo the full twist.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeFingerprint {
    pub strands: usize,
    pub cycle_type: Vec<usize>,
    /// Exponent sum reduced mod `m(m−1)`.
    pub exponent_sum: i64,
    /// Sorted pairwise linking numbers minus their minimum; pure braids only.
    pub linking: Option<Vec<i64>>,
    pub growth: f64,
}

pub fn fingerprint(b: &BraidWord) -> Result<TypeFingerprint, ExtractError> {
    let m = b.strands();
    let modulus = (m * (m - 1)).max(1) as i64;
    let linking = if b.is_pure() {
        let mut v = b.linking_matrix()?.sorted_pairs();
        if let Some(&lo) = v.first() {
            v.iter_mut().for_each(|x| *x -= lo);
        }
        Some(v)
    } else {
        None
    };
    Ok(TypeFingerprint {
        strands: m,
        cycle_type: b.permutation().cycle_type(),
        exponent_sum: b.exponent_sum().rem_euclid(modulus),
        linking,
        growth: growth_estimate(b, &GrowthConfig::default())?.value,
    })
}

/// Relative tolerance on growth estimates in fingerprint comparisons.
pub const GROWTH_REL_TOL: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldComparison {
    pub field: String,
    pub expected: serde_json::Value,
    pub observed: serde_json::Value,
    pub pass: bool,
}

pub fn compare_fingerprints(
    expected: &TypeFingerprint,
    observed: &TypeFingerprint,
) -> Vec<FieldComparison> {
    use serde_json::json;
    let field = |name: &str, e: serde_json::Value, o: serde_json::Value| {
        let pass = e == o;
        FieldComparison {
            field: name.into(),
            expected: e,
            observed: o,
            pass,
        }
    };
    let rel = (observed.growth - expected.growth).abs() / expected.growth.abs();
    vec![
        field("strands", json!(expected.strands), json!(observed.strands)),
        field(
            "cycle_type",
            json!(expected.cycle_type),
            json!(observed.cycle_type),
        ),
        field(
            "exponent_sum",
            json!(expected.exponent_sum),
            json!(observed.exponent_sum),
        ),
        field("linking", json!(expected.linking), json!(observed.linking)),
        FieldComparison {
            field: "growth".into(),
            expected: json!(expected.growth),
            observed: json!(observed.growth),
            pass: rel < GROWTH_REL_TOL,
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthCheck {
    pub target: f64,
    pub observed: f64,
    pub rel_error: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleOutcome {
    pub angle: f64,
    /// `consistent`, `inconsistent`, or `degenerate`.
    pub status: String,
    pub word_length: Option<usize>,
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub n: usize,
    pub p: usize,
    pub power: usize,
    /// `consistent` or `inconsistent`.
    pub verdict: String,
    pub expected: TypeFingerprint,
    pub observed: TypeFingerprint,
    pub fields: Vec<FieldComparison>,
    pub permutation_expected: Vec<Vec<usize>>,
    pub permutation_observed: Vec<Vec<usize>>,
    pub permutation_pass: bool,
    /// Every strand pair crosses an even number of times over the full power.
    pub parity_pass: bool,
    pub growth_vs_metallic: GrowthCheck,
    pub angle_used: f64,
    pub angles: Vec<AngleOutcome>,
    pub angles_agree: bool,
    /// Of the crossings between an odd and an even body, the fraction with
    /// the even body in front.
    pub even_front_fraction: Option<f64>,
    pub word: String,
    pub events: Vec<CrossingEvent>,
}

impl Verdict {
    pub fn is_consistent(&self) -> bool {
        self.verdict == "consistent"
    }
}

struct Judged {
    extraction: Extraction,
    observed: TypeFingerprint,
    fields: Vec<FieldComparison>,
    permutation: Permutation,
    parity: bool,
    growth: GrowthCheck,
    consistent: bool,
}

fn judge(
    extraction: Extraction,
    n: usize,
    p: usize,
    power: usize,
    expected: &TypeFingerprint,
    target: f64,
) -> Result<Judged, ExtractError> {
    let full = extraction.word.power(power);
    let observed = fingerprint(&full)?;
    let fields = compare_fingerprints(expected, &observed);
    let permutation = extraction.label_permutation();
    let perm_ok = permutation == return_permutation(n, p);
    let parity = full.linking_matrix().is_ok();
    let rel = (observed.growth - target).abs() / target;
    let growth = GrowthCheck {
        target,
        observed: observed.growth,
        rel_error: rel,
        pass: rel < GROWTH_REL_TOL,
    };
    let consistent = fields.iter().all(|f| f.pass) && perm_ok && parity && growth.pass;
    Ok(Judged {
        extraction,
        observed,
        fields,
        permutation,
        parity,
        growth,
        consistent,
    })
}

/// Extracts the braid of `traj` over one symmetry sub-period `[0, 2T̄]`,
/// raises it to the power `n/d` and compares with `β_{n,p}^{n/d}`.
pub fn match_trajectory(
    traj: &Trajectory,
    n: usize,
    p: usize,
    angles: &[f64],
    execution: Execution,
) -> Result<Verdict, ExtractError> {
    if traj.n != n || traj.p != p {
        return Err(ExtractError::Parameter(format!(
            "trajectory is for (n, p) = ({}, {}), not ({n}, {p})",
            traj.n, traj.p
        )));
    }
    if angles.is_empty() {
        return Err(ExtractError::Parameter("empty angle schedule".into()));
    }
    let d = gcd(n, p);
    let power = n / d;
    let window = d as f64 * traj.period / n as f64;
    let b = beta(n, p)?;
    let expected = fingerprint(&b.power(power))?;
    let target = metallic(2 * p as u64)?.powi((2 * n / d) as i32);

    let attempts = execution.map_indexed(angles.len(), |i| {
        extract_word(traj, angles[i], 0.0, window)
            .and_then(|e| judge(e, n, p, power, &expected, target))
    });
    let mut outcomes = Vec::with_capacity(angles.len());
    let mut judged = Vec::new();
    for (&angle, r) in angles.iter().zip(attempts) {
        match r {
            Ok(j) => {
                outcomes.push(AngleOutcome {
                    angle,
                    status: if j.consistent {
                        "consistent"
                    } else {
                        "inconsistent"
                    }
                    .into(),
                    word_length: Some(j.extraction.word.len()),
                    message: None,
                });
                judged.push(j);
            }
            Err(e @ ExtractError::Degenerate { .. }) => outcomes.push(AngleOutcome {
                angle,
                status: "degenerate".into(),
                word_length: None,
                message: Some(e.to_string()),
            }),
            Err(e) => return Err(e),
        }
    }
    let Some(first) = judged.first() else {
        return Err(ExtractError::NoGenericAngle {
            tried: angles.len(),
            last: outcomes
                .last()
                .and_then(|o| o.message.clone())
                .unwrap_or_default(),
        });
    };
    let angles_agree = judged.iter().all(|j| j.consistent == first.consistent);
    let ex = &first.extraction;
    let mixed: Vec<&CrossingEvent> = ex
        .events
        .iter()
        .filter(|e| (e.strands.0 + e.strands.1) % 2 == 1)
        .collect();
    let even_front_fraction = (!mixed.is_empty())
        .then(|| mixed.iter().filter(|e| e.front % 2 == 0).count() as f64 / mixed.len() as f64);
    let expected_perm = return_permutation(n, p);
    Ok(Verdict {
        n,
        p,
        power,
        verdict: if first.consistent && angles_agree {
            "consistent"
        } else {
            "inconsistent"
        }
        .into(),
        expected,
        observed: first.observed.clone(),
        fields: first.fields.clone(),
        permutation_expected: expected_perm.cycles(),
        permutation_observed: first.permutation.cycles(),
        permutation_pass: first.permutation == expected_perm,
        parity_pass: first.parity,
        growth_vs_metallic: first.growth.clone(),
        angle_used: ex.angle,
        angles: outcomes,
        angles_agree,
        even_front_fraction,
        word: ex.word.to_text(),
        events: ex.events.clone(),
    })
}
