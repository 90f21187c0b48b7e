//! Classical RK4 for the unit-mass planar N-body problem.

use num_complex::Complex64;

use super::eom::forces;
use super::trajectory::Trajectory;
use super::NbodyError;

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub positions: Vec<Complex64>,
    pub velocities: Vec<Complex64>,
}

impl State {
    pub fn new(positions: Vec<Complex64>, velocities: Vec<Complex64>) -> Result<Self, NbodyError> {
        if positions.len() != velocities.len() || positions.len() < 2 {
            return Err(NbodyError::Parameter(
                "state needs matching position/velocity arrays".into(),
            ));
        }
        Ok(Self {
            positions,
            velocities,
        })
    }

    fn closest_pair(&self) -> (f64, (usize, usize)) {
        let x = &self.positions;
        let mut best = (f64::INFINITY, (0, 0));
        for a in 0..x.len() {
            for b in (a + 1)..x.len() {
                let d = (x[a] - x[b]).norm();
                if d < best.0 {
                    best = (d, (a + 1, b + 1));
                }
            }
        }
        best
    }
}

/// Smallest pair distance along straight-line motion from `a` to `b`, so a
/// pair that passes through each other within one step is still caught.
fn swept_closest_pair(a: &[Complex64], b: &[Complex64]) -> (f64, (usize, usize)) {
    let mut best = (f64::INFINITY, (0, 0));
    for i in 0..a.len() {
        for j in (i + 1)..a.len() {
            let d0 = a[i] - a[j];
            let dd = (b[i] - b[j]) - d0;
            let den = dd.norm_sqr();
            let s = if den > 0.0 {
                (-(d0.re * dd.re + d0.im * dd.im) / den).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let d = (d0 + dd * s).norm();
            if d < best.0 {
                best = (d, (i + 1, j + 1));
            }
        }
    }
    best
}

/// Kinetic minus potential energy.
pub fn energy(s: &State) -> f64 {
    let kin: f64 = s.velocities.iter().map(|v| 0.5 * v.norm_sqr()).sum();
    let x = &s.positions;
    let mut pot = 0.0;
    for a in 0..x.len() {
        for b in (a + 1)..x.len() {
            pot += 1.0 / (x[a] - x[b]).norm();
        }
    }
    kin - pot
}

#[derive(Debug, Clone)]
pub struct IntegrationResult {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    /// `max_t |E(t) − E(0)| / |E(0)|`
    pub max_energy_drift: f64,
}

impl IntegrationResult {
    pub fn last(&self) -> &State {
        self.states.last().expect("at least the initial state")
    }

    /// Sampled trajectory with the given metadata; the final state is dropped
    /// when it lands exactly on `period`.
    pub fn to_trajectory(&self, n: usize, p: usize, period: f64) -> Result<Trajectory, NbodyError> {
        let keep = self.times.iter().take_while(|&&t| t < period).count();
        Trajectory::new(
            n,
            p,
            period,
            self.times[..keep].to_vec(),
            self.states[..keep]
                .iter()
                .map(|s| s.positions.clone())
                .collect(),
            Some(
                self.states[..keep]
                    .iter()
                    .map(|s| s.velocities.clone())
                    .collect(),
            ),
        )
    }
}

fn axpy(x: &[Complex64], a: f64, y: &[Complex64]) -> Vec<Complex64> {
    x.iter().zip(y).map(|(x, y)| x + y * a).collect()
}

/// Integrates for `duration` in `steps` equal RK4 steps, recording every
/// state. Aborts when any pair comes closer than `delta`.
pub fn integrate(
    initial: &State,
    duration: f64,
    steps: usize,
    delta: f64,
) -> Result<IntegrationResult, NbodyError> {
    if steps == 0 || !(duration > 0.0) {
        return Err(NbodyError::Parameter(
            "need positive duration and steps".into(),
        ));
    }
    let (d0, pair0) = initial.closest_pair();
    if d0 < delta {
        return Err(NbodyError::CloseEncounter {
            time: 0.0,
            bodies: pair0,
            distance: d0,
        });
    }
    let h = duration / steps as f64;
    let e0 = energy(initial);
    let mut drift: f64 = 0.0;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(initial.clone());
    let mut s = initial.clone();
    for i in 1..=steps {
        let x = &s.positions;
        let v = &s.velocities;
        let k1v = forces(x);
        let k1x = v.clone();
        let x2 = axpy(x, 0.5 * h, &k1x);
        let k2x = axpy(v, 0.5 * h, &k1v);
        let k2v = forces(&x2);
        let x3 = axpy(x, 0.5 * h, &k2x);
        let k3x = axpy(v, 0.5 * h, &k2v);
        let k3v = forces(&x3);
        let x4 = axpy(x, h, &k3x);
        let k4x = axpy(v, h, &k3v);
        let k4v = forces(&x4);
        let nx: Vec<Complex64> = (0..x.len())
            .map(|b| x[b] + (k1x[b] + k2x[b] * 2.0 + k3x[b] * 2.0 + k4x[b]) * (h / 6.0))
            .collect();
        let nv: Vec<Complex64> = (0..x.len())
            .map(|b| v[b] + (k1v[b] + k2v[b] * 2.0 + k3v[b] * 2.0 + k4v[b]) * (h / 6.0))
            .collect();
        let t = i as f64 * h;
        let (d, pair) = [&x2, &x3, &x4]
            .iter()
            .map(|stage| swept_closest_pair(&s.positions, stage))
            .chain(std::iter::once(swept_closest_pair(&s.positions, &nx)))
            .fold(
                (f64::INFINITY, (0, 0)),
                |a, b| if b.0 < a.0 { b } else { a },
            );
        s = State {
            positions: nx,
            velocities: nv,
        };
        if d < delta || !d.is_finite() {
            return Err(NbodyError::CloseEncounter {
                time: t,
                bodies: pair,
                distance: d,
            });
        }
        drift = drift.max(((energy(&s) - e0) / e0).abs());
        times.push(t);
        states.push(s.clone());
    }
    Ok(IntegrationResult {
        times,
        states,
        max_energy_drift: drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Slightly eccentric four-body ring: generic, bound, collision-free.
    fn perturbed_ring() -> State {
        let r: f64 = 1.0;
        let positions: Vec<Complex64> = (0..4)
            .map(|i| Complex64::from_polar(r, std::f64::consts::FRAC_PI_2 * i as f64))
            .collect();
        let speed = ((1.0 + 2.0f64.sqrt() * 2.0) / 4.0).sqrt() * 0.9;
        let velocities = positions
            .iter()
            .enumerate()
            .map(|(i, x)| x * Complex64::new(0.05 * i as f64, speed))
            .collect();
        State::new(positions, velocities).unwrap()
    }

    #[test]
    fn energy_drift_is_fourth_order() {
        let s = perturbed_ring();
        let d: Vec<f64> = [400, 800, 1600]
            .iter()
            .map(|&n| integrate(&s, 3.0, n, 1e-3).unwrap().max_energy_drift)
            .collect();
        for w in d.windows(2) {
            let ratio = w[0] / w[1];
            assert!(
                (ratio - 16.0).abs() < 0.3 * 16.0,
                "ratio {ratio} from {d:?}"
            );
        }
    }

    #[test]
    fn collapse_is_rejected() {
        let positions = vec![Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0)];
        let s = State::new(positions, vec![Complex64::new(0.0, 0.0); 2]).unwrap();
        let err = integrate(&s, 5.0, 5000, 1e-3).unwrap_err();
        match err {
            NbodyError::CloseEncounter { time, bodies, .. } => {
                // radial free fall from separation 2 takes π/√2 ≈ 2.221
                assert!(time > 2.0 && time < 2.23, "time {time}");
                assert_eq!(bodies, (1, 2));
            }
            e => panic!("unexpected {e}"),
        }
    }
}
