//! Residual of Newton's equations on sampled or spectral trajectories.

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::fourier::FourierLoop;
use super::trajectory::Trajectory;
use super::NbodyError;

pub const MIN_SAMPLES: usize = 16;

/// Gravitational acceleration on each unit-mass body.
pub fn forces(x: &[Complex64]) -> Vec<Complex64> {
    let mut f = vec![Complex64::new(0.0, 0.0); x.len()];
    for a in 0..x.len() {
        for b in (a + 1)..x.len() {
            let d = x[b] - x[a];
            let r2 = d.norm_sqr();
            let g = d / (r2 * r2.sqrt());
            f[a] += g;
            f[b] -= g;
        }
    }
    f
}

fn normalized_rms(acc: &[Vec<Complex64>], pos: &[Vec<Complex64>]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (a, x) in acc.iter().zip(pos) {
        let f = forces(x);
        for (ai, fi) in a.iter().zip(&f) {
            num += (ai - fi).norm_sqr();
            den += fi.norm_sqr();
        }
    }
    (num / den).sqrt()
}

/// Relative RMS residual using exact accelerations of the loop at `samples`
/// uniform instants.
pub fn eom_residual_loop(lp: &FourierLoop, samples: usize) -> Result<f64, NbodyError> {
    if samples < MIN_SAMPLES {
        return Err(NbodyError::TooFewSamples {
            need: MIN_SAMPLES,
            got: samples,
        });
    }
    let h = lp.period / samples as f64;
    let (pos, acc): (Vec<_>, Vec<_>) = (0..samples)
        .map(|j| {
            let s = lp.state(j as f64 * h);
            (s.positions, s.accelerations)
        })
        .unzip();
    Ok(normalized_rms(&acc, &pos))
}

/// Relative RMS residual of a sampled trajectory.
///
/// Uniform samples covering a full period are differentiated spectrally;
/// anything else needs uniform spacing and uses the 5-point stencil on
/// interior samples.
pub fn eom_residual(traj: &Trajectory) -> Result<f64, NbodyError> {
    let m = traj.len();
    if m < MIN_SAMPLES {
        return Err(NbodyError::TooFewSamples {
            need: MIN_SAMPLES,
            got: m,
        });
    }
    if traj.is_periodic_uniform() {
        let acc = spectral_second_derivative(&traj.positions, traj.period);
        return Ok(normalized_rms(&acc, &traj.positions));
    }
    let h = traj.times[1] - traj.times[0];
    let uniform = traj
        .times
        .windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h);
    if !uniform {
        return Err(NbodyError::Trajectory(
            "finite-difference residual needs uniformly spaced samples".into(),
        ));
    }
    let nb = traj.bodies();
    let x = &traj.positions;
    let mut acc = Vec::with_capacity(m - 4);
    for j in 2..m - 2 {
        acc.push(
            (0..nb)
                .map(|b| {
                    (-x[j - 2][b] + x[j - 1][b] * 16.0 - x[j][b] * 30.0 + x[j + 1][b] * 16.0
                        - x[j + 2][b])
                        / (12.0 * h * h)
                })
                .collect::<Vec<_>>(),
        );
    }
    Ok(normalized_rms(&acc, &x[2..m - 2]))
}

fn spectral_second_derivative(pos: &[Vec<Complex64>], period: f64) -> Vec<Vec<Complex64>> {
    let m = pos.len();
    let nb = pos[0].len();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(m);
    let inv = planner.plan_fft_inverse(m);
    let w = 2.0 * std::f64::consts::PI / period;
    let mut out = vec![vec![Complex64::new(0.0, 0.0); nb]; m];
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for b in 0..nb {
        for (j, row) in pos.iter().enumerate() {
            buf[j] = row[b];
        }
        fwd.process(&mut buf);
        for (j, c) in buf.iter_mut().enumerate() {
            let k = if j <= m / 2 {
                j as f64
            } else {
                j as f64 - m as f64
            };
            if m.is_multiple_of(2) && j == m / 2 {
                *c = Complex64::new(0.0, 0.0);
            } else {
                *c *= -(k * w).powi(2) / m as f64;
            }
        }
        inv.process(&mut buf);
        for (j, row) in out.iter_mut().enumerate() {
            row[b] = buf[j];
        }
    }
    out
}
