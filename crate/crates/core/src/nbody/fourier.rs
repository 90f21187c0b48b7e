use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::NbodyError;
use crate::braid::gcd;

/// Fourier modes compatible with the time-shift symmetry: `k·d ≡ p (mod n)`,
/// `|k| ≤ K`, ascending.
///
/// The shift `t ↦ t + dT/n` maps body 1 onto body `1 + 2p`, which sits at
/// `ω^p x_1`. A mode `e^{ikt}` picks up `e^{2πikd/n}` under the shift, so it
/// survives iff `e^{2πikd/n} = e^{2πip/n}`.
pub fn admissible_modes(n: usize, p: usize, max_mode: usize) -> Result<Vec<i64>, NbodyError> {
    if n < 2 || p < 1 || max_mode < 1 {
        return Err(NbodyError::Parameter(format!(
            "need n >= 2, p >= 1, K >= 1; got ({n}, {p}, {max_mode})"
        )));
    }
    let d = gcd(n, p) as i64;
    let (n, p, k) = (n as i64, p as i64, max_mode as i64);
    let modes: Vec<i64> = (-k..=k)
        .filter(|&m| (m * d - p).rem_euclid(n) == 0)
        .collect();
    if modes.is_empty() {
        return Err(NbodyError::Parameter(format!(
            "no admissible modes for (n, p, K) = ({n}, {p}, {k})"
        )));
    }
    Ok(modes)
}

/// Truncated Fourier series of the generating body `x_1(t) = Σ c_k e^{2πikt/T}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierLoop {
    pub n: usize,
    pub p: usize,
    pub period: f64,
    modes: Vec<i64>,
    coeffs: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct ModeRecord {
    k: i64,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LoopFile {
    n: usize,
    p: usize,
    period: f64,
    modes: Vec<ModeRecord>,
}

impl FourierLoop {
    pub fn new(
        n: usize,
        p: usize,
        period: f64,
        modes: Vec<i64>,
        coeffs: Vec<Complex64>,
    ) -> Result<Self, NbodyError> {
        if modes.len() != coeffs.len() {
            return Err(NbodyError::Parameter(
                "mode/coefficient length mismatch".into(),
            ));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(NbodyError::Parameter(format!("bad period {period}")));
        }
        let kmax = modes
            .iter()
            .map(|k| k.unsigned_abs() as usize)
            .max()
            .unwrap_or(1)
            .max(1);
        let allowed = admissible_modes(n, p, kmax)?;
        for k in &modes {
            if allowed.binary_search(k).is_err() {
                return Err(NbodyError::Parameter(format!(
                    "mode {k} is not admissible for (n, p) = ({n}, {p})"
                )));
            }
        }
        for w in modes.windows(2) {
            if w[0] >= w[1] {
                return Err(NbodyError::Parameter(
                    "modes must be strictly increasing".into(),
                ));
            }
        }
        Ok(Self {
            n,
            p,
            period,
            modes,
            coeffs,
        })
    }

    /// All admissible modes up to `max_mode`, zero coefficients.
    pub fn zeros(n: usize, p: usize, period: f64, max_mode: usize) -> Result<Self, NbodyError> {
        let modes = admissible_modes(n, p, max_mode)?;
        let coeffs = vec![Complex64::new(0.0, 0.0); modes.len()];
        Self::new(n, p, period, modes, coeffs)
    }

    pub fn modes(&self) -> &[i64] {
        &self.modes
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn bodies(&self) -> usize {
        2 * self.n
    }

    pub fn d(&self) -> usize {
        gcd(self.n, self.p)
    }

    pub fn max_mode(&self) -> usize {
        self.modes
            .iter()
            .map(|k| k.unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn coeff(&self, k: i64) -> Option<Complex64> {
        self.modes.binary_search(&k).ok().map(|i| self.coeffs[i])
    }

    pub fn set_coeff(&mut self, k: i64, c: Complex64) -> Result<(), NbodyError> {
        let i = self
            .modes
            .binary_search(&k)
            .map_err(|_| NbodyError::Parameter(format!("mode {k} not in loop")))?;
        self.coeffs[i] = c;
        Ok(())
    }

    /// Same loop on all admissible modes up to `max_mode`, new modes zero.
    pub fn resized(&self, max_mode: usize) -> Result<Self, NbodyError> {
        let mut out = Self::zeros(self.n, self.p, self.period, max_mode)?;
        for (k, c) in self.modes.iter().zip(&self.coeffs) {
            if k.unsigned_abs() as usize <= max_mode {
                out.set_coeff(*k, *c)?;
            }
        }
        Ok(out)
    }

    pub fn frequency(&self) -> f64 {
        2.0 * PI / self.period
    }

    /// `(x_1(t), ẋ_1(t), ẍ_1(t))` of the generating body.
    pub fn generator_jet(&self, t: f64) -> [Complex64; 3] {
        let w = self.frequency();
        let mut out = [Complex64::new(0.0, 0.0); 3];
        for (&k, &c) in self.modes.iter().zip(&self.coeffs) {
            let kw = k as f64 * w;
            let e = Complex64::from_polar(1.0, kw * t) * c;
            out[0] += e;
            out[1] += e * Complex64::new(0.0, kw);
            out[2] -= e * (kw * kw);
        }
        out
    }

    /// Positions of all `2n` bodies at time `t`.
    pub fn positions(&self, t: f64) -> Vec<Complex64> {
        let fwd = self.generator_jet(t)[0];
        let bwd = self.generator_jet(-t)[0];
        expand_positions(self.n, fwd, bwd)
    }

    /// Positions, velocities and accelerations of all bodies at time `t`.
    pub fn state(&self, t: f64) -> BodyJets {
        let f = self.generator_jet(t);
        let b = self.generator_jet(-t);
        BodyJets {
            positions: expand_positions(self.n, f[0], b[0]),
            // d/dt x_1(-t) = -ẋ_1(-t), d²/dt² x_1(-t) = ẍ_1(-t)
            velocities: expand_positions(self.n, f[1], -b[1]),
            accelerations: expand_positions(self.n, f[2], b[2]),
        }
    }

    pub fn to_json(&self) -> Result<String, NbodyError> {
        let file = LoopFile {
            n: self.n,
            p: self.p,
            period: self.period,
            modes: self
                .modes
                .iter()
                .zip(&self.coeffs)
                .map(|(&k, c)| ModeRecord {
                    k,
                    re: c.re,
                    im: c.im,
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(s: &str) -> Result<Self, NbodyError> {
        let file: LoopFile = serde_json::from_str(s)?;
        let mut recs = file.modes;
        recs.sort_by_key(|r| r.k);
        let modes = recs.iter().map(|r| r.k).collect();
        let coeffs = recs.iter().map(|r| Complex64::new(r.re, r.im)).collect();
        Self::new(file.n, file.p, file.period, modes, coeffs)
    }
}

#[derive(Debug, Clone)]
pub struct BodyJets {
    pub positions: Vec<Complex64>,
    pub velocities: Vec<Complex64>,
    pub accelerations: Vec<Complex64>,
}

/// Odd bodies `x_{2k-1} = ω^{k-1} fwd`, even bodies `x_{2k} = ω^{k-1} e^{iπ/n} bwd`,
/// where `fwd` is a jet of `x_1` at `t` and `bwd` the matching jet of `x_1(-t)`.
pub fn expand_positions(n: usize, fwd: Complex64, bwd: Complex64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(2 * n);
    for (odd, even) in body_phases(n) {
        out.push(odd * fwd);
        out.push(even * bwd);
    }
    out
}

/// `(ω^{k-1}, ω^{k-1} e^{iπ/n})` for `k = 1..n`.
pub fn body_phases(n: usize) -> Vec<(Complex64, Complex64)> {
    let nf = n as f64;
    (0..n)
        .map(|k| {
            let a = 2.0 * PI * k as f64 / nf;
            (
                Complex64::from_polar(1.0, a),
                Complex64::from_polar(1.0, a + PI / nf),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::braid::return_permutation;

    #[test]
    fn admissible_examples() {
        assert_eq!(
            admissible_modes(2, 1, 5).unwrap(),
            vec![-5, -3, -1, 1, 3, 5]
        );
        assert_eq!(
            admissible_modes(4, 2, 6).unwrap(),
            vec![-5, -3, -1, 1, 3, 5]
        );
        assert_eq!(admissible_modes(3, 1, 4).unwrap(), vec![-2, 1, 4]);
        assert_eq!(admissible_modes(4, 1, 6).unwrap(), vec![-3, 1, 5]);
        assert!(admissible_modes(1, 1, 4).is_err());
        assert!(admissible_modes(3, 1, 0).is_err());
    }

    /// Direct substitution: for every mode in the admissible set, the shifted
    /// and relabelled configuration reproduces the original one; for every mode
    /// outside it, it does not.
    #[test]
    fn congruence_matches_time_shift_invariance() {
        for n in 2..=7 {
            for p in 1..n {
                let d = gcd(n, p);
                let period = 2.0 * PI;
                let shift = d as f64 * period / n as f64;
                let sigma = return_permutation(n, p);
                let allowed = admissible_modes(n, p, 3 * n).unwrap();
                for k in -(3 * n as i64)..=(3 * n as i64) {
                    let modes = vec![k];
                    let coeffs = vec![Complex64::new(0.7, -0.3)];
                    let lp = FourierLoop {
                        n,
                        p,
                        period,
                        modes,
                        coeffs,
                    };
                    let mut ok = true;
                    for s in 0..7 {
                        let t = 0.37 + 0.81 * s as f64;
                        let later = lp.positions(t + shift);
                        let now = lp.positions(t);
                        for i in 1..=2 * n {
                            let j = sigma.apply(i);
                            if (later[i - 1] - now[j - 1]).norm() > 1e-12 {
                                ok = false;
                            }
                        }
                    }
                    assert_eq!(ok, allowed.contains(&k), "n={n} p={p} k={k}");
                }
            }
        }
    }

    #[test]
    fn reflection_relation_holds() {
        let mut lp = FourierLoop::zeros(3, 1, 2.0 * PI, 10).unwrap();
        for (i, c) in lp.coeffs_mut().iter_mut().enumerate() {
            *c = Complex64::new(1.0 / (1 + i) as f64, 0.3 * i as f64 - 0.5);
        }
        let w = Complex64::from_polar(1.0, 2.0 * PI / 3.0);
        let e = Complex64::from_polar(1.0, PI / 3.0);
        for s in 0..20 {
            let t = 0.31 * s as f64;
            let x = lp.positions(t);
            let x1m = lp.positions(-t)[0];
            assert!((x[1] - e * x1m).norm() < 1e-12);
            for k in 1..3 {
                assert!((x[2 * k] - w.powu(k as u32) * x[0]).norm() < 1e-12);
                assert!((x[2 * k + 1] - w.powu(k as u32) * x[1]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn initial_configuration_is_regular_polygon() {
        let mut lp = FourierLoop::zeros(4, 1, 2.0 * PI, 9).unwrap();
        lp.set_coeff(1, Complex64::new(1.0, 0.0)).unwrap();
        lp.set_coeff(5, Complex64::new(0.1, -0.2)).unwrap();
        let x = lp.positions(0.0);
        let r = x[0].norm();
        let step = Complex64::from_polar(1.0, PI / 4.0);
        for i in 0..8 {
            assert!((x[i].norm() - r).abs() < 1e-12);
            assert!((x[(i + 1) % 8] - step * x[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn single_mode_counter_rotation() {
        let mut lp = FourierLoop::zeros(2, 1, 2.0 * PI, 1).unwrap();
        lp.set_coeff(1, Complex64::new(1.0, 0.0)).unwrap();
        let t = 0.4;
        let x = lp.positions(t);
        assert!((x[0] - Complex64::from_polar(1.0, t)).norm() < 1e-14);
        assert!((x[1] - Complex64::from_polar(1.0, PI / 2.0 - t)).norm() < 1e-14);
        assert!((x[2] + x[0]).norm() < 1e-14);
        assert!((x[3] + x[1]).norm() < 1e-14);
    }

    #[test]
    fn rejects_inadmissible_modes() {
        assert!(FourierLoop::new(3, 1, 1.0, vec![2], vec![Complex64::new(1.0, 0.0)]).is_err());
        assert!(
            FourierLoop::new(3, 1, 1.0, vec![1, -2], vec![Complex64::new(1.0, 0.0); 2]).is_err()
        );
    }
}
