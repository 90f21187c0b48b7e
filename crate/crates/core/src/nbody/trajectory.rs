use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fourier::FourierLoop;
use super::NbodyError;

/// Time-sampled planar positions of all bodies.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub n: usize,
    pub p: usize,
    pub period: f64,
    pub masses: Vec<f64>,
    pub times: Vec<f64>,
    pub positions: Vec<Vec<Complex64>>,
    pub velocities: Option<Vec<Vec<Complex64>>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrajectoryFile {
    n: usize,
    p: usize,
    period: f64,
    masses: Vec<f64>,
    times: Vec<f64>,
    positions: Vec<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    velocities: Option<Vec<Vec<[f64; 2]>>>,
}

fn to_pairs(v: &[Vec<Complex64>]) -> Vec<Vec<[f64; 2]>> {
    v.iter()
        .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

fn from_pairs(v: Vec<Vec<[f64; 2]>>) -> Vec<Vec<Complex64>> {
    v.into_iter()
        .map(|row| row.into_iter().map(|[x, y]| Complex64::new(x, y)).collect())
        .collect()
}

impl Trajectory {
    /// Validates shape: ≥ 2 samples, strictly increasing times in `[0, period)`,
    /// one position per body per sample.
    pub fn new(
        n: usize,
        p: usize,
        period: f64,
        times: Vec<f64>,
        positions: Vec<Vec<Complex64>>,
        velocities: Option<Vec<Vec<Complex64>>>,
    ) -> Result<Self, NbodyError> {
        let bodies = 2 * n;
        let bad = |m: String| Err(NbodyError::Trajectory(m));
        if !(period > 0.0) {
            return bad(format!("period must be positive, got {period}"));
        }
        if times.len() < 2 {
            return bad("need at least two samples".into());
        }
        if times.len() != positions.len() {
            return bad("times/positions length mismatch".into());
        }
        if times[0] < 0.0 || *times.last().unwrap() >= period {
            return bad("sample times must lie in [0, period)".into());
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return bad("sample times must be strictly increasing".into());
        }
        if positions.iter().any(|row| row.len() != bodies) {
            return bad(format!("every sample needs {bodies} positions"));
        }
        if let Some(v) = &velocities {
            if v.len() != times.len() || v.iter().any(|row| row.len() != bodies) {
                return bad("velocity array shape mismatch".into());
            }
        }
        Ok(Self {
            n,
            p,
            period,
            masses: vec![1.0; bodies],
            times,
            positions,
            velocities,
        })
    }

    /// `samples` uniform instants over one period, with exact velocities.
    pub fn from_loop(lp: &FourierLoop, samples: usize) -> Result<Self, NbodyError> {
        let h = lp.period / samples as f64;
        let mut times = Vec::with_capacity(samples);
        let mut pos = Vec::with_capacity(samples);
        let mut vel = Vec::with_capacity(samples);
        for j in 0..samples {
            let t = j as f64 * h;
            let s = lp.state(t);
            times.push(t);
            pos.push(s.positions);
            vel.push(s.velocities);
        }
        Self::new(lp.n, lp.p, lp.period, times, pos, Some(vel))
    }

    pub fn bodies(&self) -> usize {
        2 * self.n
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Uniform spacing starting at 0 and ending one step short of `period`.
    pub fn is_periodic_uniform(&self) -> bool {
        let m = self.times.len();
        let h = self.period / m as f64;
        self.times
            .iter()
            .enumerate()
            .all(|(j, &t)| (t - j as f64 * h).abs() <= 1e-9 * self.period)
    }

    /// Latest time at which positions can be evaluated.
    pub fn coverage_end(&self) -> f64 {
        if self.is_periodic_uniform() {
            self.period
        } else {
            *self.times.last().unwrap()
        }
    }

    pub fn min_pair_distance(&self) -> (f64, usize) {
        let mut best = (f64::INFINITY, 0);
        for (j, row) in self.positions.iter().enumerate() {
            for a in 0..row.len() {
                for b in (a + 1)..row.len() {
                    let d = (row[a] - row[b]).norm();
                    if d < best.0 {
                        best = (d, j);
                    }
                }
            }
        }
        best
    }

    pub fn ensure_collision_free(&self, delta: f64) -> Result<(), NbodyError> {
        let (d, j) = self.min_pair_distance();
        if d <= delta {
            return Err(NbodyError::Trajectory(format!(
                "near collision at t = {} (distance {d:.3e} <= {delta:.1e})",
                self.times[j]
            )));
        }
        Ok(())
    }

    fn sample(&self, j: usize) -> (f64, &[Complex64], Option<&[Complex64]>) {
        let m = self.times.len();
        let (t, jj) = if j < m {
            (self.times[j], j)
        } else {
            (self.times[j - m] + self.period, j - m)
        };
        (
            t,
            &self.positions[jj],
            self.velocities.as_ref().map(|v| v[jj].as_slice()),
        )
    }

    /// Positions of all bodies at `t` by cubic interpolation: Hermite when
    /// velocities are present, otherwise Catmull–Rom on the samples.
    pub fn positions_at(&self, t: f64) -> Result<Vec<Complex64>, NbodyError> {
        let m = self.times.len();
        let periodic = self.is_periodic_uniform();
        let end = self.coverage_end();
        let tol = 1e-12 * self.period;
        if t < self.times[0] - tol || t > end + tol {
            return Err(NbodyError::Trajectory(format!(
                "time {t} outside sampled span [{}, {end}]",
                self.times[0]
            )));
        }
        let t = t.clamp(self.times[0], end);
        // interval index with times[j] <= t < times[j+1] (wrapping when periodic)
        let mut j = match self.times.partition_point(|&s| s <= t) {
            0 => 0,
            k => k - 1,
        };
        let last = if periodic { m - 1 } else { m - 2 };
        if j > last {
            j = last;
        }
        let (t0, x0, v0) = self.sample(j);
        let (t1, x1, v1) = self.sample(j + 1);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let nb = self.bodies();
        if let (Some(v0), Some(v1)) = (v0, v1) {
            let h00 = 2.0 * s.powi(3) - 3.0 * s * s + 1.0;
            let h10 = s.powi(3) - 2.0 * s * s + s;
            let h01 = -2.0 * s.powi(3) + 3.0 * s * s;
            let h11 = s.powi(3) - s * s;
            return Ok((0..nb)
                .map(|b| x0[b] * h00 + v0[b] * (h10 * h) + x1[b] * h01 + v1[b] * (h11 * h))
                .collect());
        }
        // Catmull–Rom with one-sided ends on non-periodic data
        let prev = if j > 0 {
            Some(self.sample(j - 1))
        } else if periodic {
            let (tp, xp, vp) = self.sample(m - 1);
            Some((tp - self.period, xp, vp))
        } else {
            None
        };
        let next = if j + 2 < m || periodic {
            Some(self.sample(j + 2))
        } else {
            None
        };
        Ok((0..nb)
            .map(|b| {
                let d0 = match &prev {
                    Some((tp, xp, _)) => (x1[b] - xp[b]) / (t1 - tp),
                    None => (x1[b] - x0[b]) / h,
                };
                let d1 = match &next {
                    Some((tn, xn, _)) => (xn[b] - x0[b]) / (tn - t0),
                    None => (x1[b] - x0[b]) / h,
                };
                let h00 = 2.0 * s.powi(3) - 3.0 * s * s + 1.0;
                let h10 = s.powi(3) - 2.0 * s * s + s;
                let h01 = -2.0 * s.powi(3) + 3.0 * s * s;
                let h11 = s.powi(3) - s * s;
                x0[b] * h00 + d0 * (h10 * h) + x1[b] * h01 + d1 * (h11 * h)
            })
            .collect())
    }

    pub fn to_json(&self) -> Result<String, NbodyError> {
        let file = TrajectoryFile {
            n: self.n,
            p: self.p,
            period: self.period,
            masses: self.masses.clone(),
            times: self.times.clone(),
            positions: to_pairs(&self.positions),
            velocities: self.velocities.as_deref().map(to_pairs),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(s: &str) -> Result<Self, NbodyError> {
        let f: TrajectoryFile = serde_json::from_str(s)?;
        if f.masses.len() != 2 * f.n || f.masses.iter().any(|&m| m != 1.0) {
            return Err(NbodyError::Trajectory("expected 2n unit masses".into()));
        }
        Self::new(
            f.n,
            f.p,
            f.period,
            f.times,
            from_pairs(f.positions),
            f.velocities.map(from_pairs),
        )
    }
}
