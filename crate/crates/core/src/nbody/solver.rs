//! Preconditioned steepest descent on the symmetric loop space.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::action::{gradient_norm, ActionEvaluator, ActionValue};
use super::eom::eom_residual_loop;
use super::fourier::FourierLoop;
use super::trajectory::Trajectory;
use super::NbodyError;
use crate::braid::{gcd, return_permutation};
use crate::exec::Execution;

/// Smallest positive admissible mode, `p / gcd(n, p)`.
pub fn leading_mode(n: usize, p: usize) -> i64 {
    (p / gcd(n, p)) as i64
}

/// `24·n/d`: admissible modes are spaced `n/d` apart, so this keeps about
/// 48 of them for every `(n, p)`.
pub fn default_mode_count(n: usize, p: usize) -> usize {
    24 * n / gcd(n, p).max(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub n: usize,
    pub p: usize,
    pub period: f64,
    pub mode_count: usize,
    pub quadrature_samples: usize,
}

impl ProblemSpec {
    /// Defaults: `T = 2π`, [`default_mode_count`], `N_q = max(256, 8K)`.
    pub fn new(n: usize, p: usize) -> Result<Self, NbodyError> {
        if n < 2 || p < 1 {
            return Err(NbodyError::Parameter(format!(
                "need n >= 2 and p >= 1, got (n, p) = ({n}, {p})"
            )));
        }
        Self::with_modes(n, p, default_mode_count(n, p))
    }

    pub fn with_modes(n: usize, p: usize, mode_count: usize) -> Result<Self, NbodyError> {
        let s = Self {
            n,
            p,
            period: 2.0 * PI,
            mode_count,
            quadrature_samples: (8 * mode_count).max(256),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), NbodyError> {
        if self.n < 2 || self.p < 1 {
            return Err(NbodyError::Parameter(format!(
                "need n >= 2 and p >= 1, got (n, p) = ({}, {})",
                self.n, self.p
            )));
        }
        if self.p >= self.n {
            return Err(NbodyError::Parameter(format!(
                "p must be < n, got (n, p) = ({}, {})",
                self.n, self.p
            )));
        }
        if self.mode_count < 1 {
            return Err(NbodyError::Parameter("mode_count must be >= 1".into()));
        }
        if self.quadrature_samples < 4 * self.mode_count {
            return Err(NbodyError::Parameter(format!(
                "quadrature_samples {} < 4 x mode_count {}",
                self.quadrature_samples, self.mode_count
            )));
        }
        if !(self.period > 0.0 && self.period.is_finite()) {
            return Err(NbodyError::Parameter(format!("bad period {}", self.period)));
        }
        Ok(())
    }

    pub fn d(&self) -> usize {
        gcd(self.n, self.p)
    }

    /// `T̄ = dT/(2n)`.
    pub fn t_bar(&self) -> f64 {
        self.d() as f64 * self.period / (2 * self.n) as f64
    }

    /// `p > ⌊n/2⌋`.
    pub fn conjectural(&self) -> bool {
        self.p > self.n / 2
    }

    /// `(2n/d)·256` samples per period, so `T̄` lands on sample 256.
    pub fn trajectory_samples(&self) -> usize {
        (2 * self.n / self.d()) * 256
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub grad_tol: f64,
    pub max_iterations: usize,
    pub eom_tol: f64,
    pub symmetry_tol: f64,
    pub collision_guard: f64,
    pub armijo_c: f64,
    pub shrink: f64,
    /// Scale each mode's descent direction by the inverse kinetic Hessian.
    pub precondition: bool,
    /// Re-solve at twice the mode count and compare actions.
    pub doubling_check: bool,
    pub doubling_tol: f64,
    pub execution: Execution,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            grad_tol: 1e-8,
            max_iterations: 50_000,
            eom_tol: 1e-4,
            symmetry_tol: 1e-6,
            collision_guard: 1e-3,
            armijo_c: 1e-4,
            shrink: 0.5,
            precondition: true,
            doubling_check: true,
            doubling_tol: 1e-6,
            execution: Execution::Parallel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub n: usize,
    pub p: usize,
    pub seed: u64,
    pub mode_count: usize,
    pub quadrature_samples: usize,
    pub action: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub gradient_norm: f64,
    pub eom_residual: f64,
    pub symmetry_error: f64,
    pub min_distance: f64,
    pub iterations: usize,
    /// Largest action increase over accepted steps; zero when monotone.
    pub max_increase: f64,
    pub doubled_action: Option<f64>,
    pub doubling_change: Option<f64>,
    pub converged: bool,
    pub conjectural: bool,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct SolveOutput {
    pub loop_: FourierLoop,
    pub trajectory: Trajectory,
    pub report: SolveReport,
}

/// Unit mass on the leading mode, `0.1` on the next one up with a phase near
/// `−π/2` (which makes the outer generating body the farther one during the
/// first half sub-period), small noise elsewhere; then rescaled to the
/// minimum of the action along the ray.
pub fn initial_guess(spec: &ProblemSpec, seed: u64) -> Result<FourierLoop, NbodyError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lp = FourierLoop::zeros(spec.n, spec.p, spec.period, spec.mode_count)?;
    let k0 = leading_mode(spec.n, spec.p);
    let k1 = k0 + (spec.n / spec.d()) as i64;
    for (&k, c) in lp.modes().to_vec().iter().zip(lp.coeffs_mut()) {
        let amp = 1e-3 / (1.0 + (k - k0).abs() as f64);
        *c = Complex64::new(rng.gen_range(-amp..amp), rng.gen_range(-amp..amp));
    }
    lp.set_coeff(k0, Complex64::new(1.0, 0.0))?;
    let phase = -0.5 * PI + rng.gen_range(-0.1..0.1);
    if lp.coeff(k1).is_some() {
        lp.set_coeff(k1, Complex64::from_polar(0.1, phase))?;
    }
    let ev = ActionEvaluator::new(&lp, spec.quadrature_samples, 0.0)?;
    let a = ev.action(&lp)?;
    let s = (a.potential / (2.0 * a.kinetic)).cbrt();
    for c in lp.coeffs_mut() {
        *c *= s;
    }
    Ok(lp)
}

#[derive(Debug, Clone)]
pub struct DescentResult {
    pub loop_: FourierLoop,
    pub value: ActionValue,
    pub gradient: Vec<Complex64>,
    pub iterations: usize,
    pub max_increase: f64,
    pub stalled: bool,
}

/// Relative action change treated as rounding noise. Below it the line
/// search switches from Armijo to a test on the directional derivative.
pub const ROUNDOFF_SLACK: f64 = 1e-12;

fn dot(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.re * y.re + x.im * y.im)
        .sum()
}

/// Steepest descent with backtracking Armijo search from `start`.
///
/// Once the predicted Armijo decrease drops below the rounding level of the
/// action, steps are chosen by the directional derivative instead: accepted
/// when it has shrunk to half its initial size (and the action has not
/// grown beyond rounding), refined by secant otherwise.
pub fn descend(
    start: FourierLoop,
    ev: &ActionEvaluator,
    cfg: &SolverConfig,
) -> Result<DescentResult, NbodyError> {
    let w = start.frequency();
    let kin_scale = 2.0 * start.n as f64 * start.period;
    let precond: Vec<f64> = start
        .modes()
        .iter()
        .map(|&k| {
            if cfg.precondition {
                1.0 / (kin_scale * (k as f64 * w).powi(2))
            } else {
                1.0
            }
        })
        .collect();
    let mut x = start;
    let (mut f, mut g) = ev.action_and_gradient(&x).map_err(|e| match e {
        NbodyError::NearCollision { .. } => NbodyError::Barrier(format!("initial loop: {e}")),
        e => e,
    })?;
    let mut step: f64 = 1.0;
    let mut max_increase: f64 = 0.0;
    let mut iterations = 0;
    let mut stalled = false;
    while iterations < cfg.max_iterations && gradient_norm(&g) >= cfg.grad_tol {
        let dir: Vec<Complex64> = g.iter().zip(&precond).map(|(g, s)| -g * *s).collect();
        let slope = dot(&g, &dir);
        let mut alpha = (2.0 * step).min(1e6);
        let mut collisions = 0;
        let mut accepted = None;
        for _ in 0..80 {
            let mut trial = x.clone();
            for (c, d) in trial.coeffs_mut().iter_mut().zip(&dir) {
                *c += d * alpha;
            }
            let (fv, gv) = match ev.action_and_gradient(&trial) {
                Ok(v) => v,
                Err(NbodyError::NearCollision { .. }) => {
                    collisions += 1;
                    alpha *= cfg.shrink;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let (f0, f1) = (f.total(), fv.total());
            let d1 = dot(&gv, &dir);
            // Armijo is only meaningful while the predicted decrease is
            // above the rounding level of the action.
            if cfg.armijo_c * alpha * slope.abs() > ROUNDOFF_SLACK * f0.abs() {
                if f1 - f0 <= cfg.armijo_c * alpha * slope {
                    accepted = Some((trial, fv, gv));
                    break;
                }
                alpha *= cfg.shrink;
                continue;
            }
            if f1 - f0 <= ROUNDOFF_SLACK * f0.abs() && d1.abs() <= 0.5 * slope.abs() {
                accepted = Some((trial, fv, gv));
                break;
            }
            alpha = if d1 > 0.0 {
                // secant root of the directional derivative
                (alpha * slope / (slope - d1)).max(0.01 * alpha)
            } else {
                2.0 * alpha
            };
        }
        let Some((trial, fv, gv)) = accepted else {
            if collisions > 0 && iterations == 0 {
                return Err(NbodyError::Barrier(format!(
                    "line search blocked by {collisions} collision rejections"
                )));
            }
            stalled = true;
            break;
        };
        max_increase = max_increase.max(fv.total() - f.total());
        x = trial;
        f = fv;
        g = gv;
        step = alpha;
        iterations += 1;
    }
    Ok(DescentResult {
        loop_: x,
        value: f,
        gradient: g,
        iterations,
        max_increase,
        stalled,
    })
}

/// `max_i |x_i(2T̄) − x_{σ(i)}(0)|` with `σ` the return permutation.
pub fn symmetry_error(lp: &FourierLoop) -> f64 {
    let d = lp.d();
    let shift = d as f64 * lp.period / lp.n as f64;
    let later = lp.positions(shift);
    let now = lp.positions(0.0);
    let sigma = return_permutation(lp.n, lp.p);
    (1..=2 * lp.n)
        .map(|i| (later[i - 1] - now[sigma.apply(i) - 1]).norm())
        .fold(0.0, f64::max)
}

pub fn solve(spec: &ProblemSpec, cfg: &SolverConfig, seed: u64) -> Result<SolveOutput, NbodyError> {
    spec.validate()?;
    let start = initial_guess(spec, seed)?;
    let ev = ActionEvaluator::new(&start, spec.quadrature_samples, cfg.collision_guard)?
        .with_execution(cfg.execution);
    let res = descend(start, &ev, cfg)?;
    let lp = res.loop_;
    let grad = gradient_norm(&res.gradient);
    let samples = spec.trajectory_samples();
    let eom = eom_residual_loop(&lp, samples)?;
    let sym = symmetry_error(&lp);
    let trajectory = Trajectory::from_loop(&lp, samples)?;
    let (min_distance, _) = trajectory.min_pair_distance();

    let (doubled_action, doubling_change) = if cfg.doubling_check {
        let big = ProblemSpec::with_modes(spec.n, spec.p, 2 * spec.mode_count)?;
        let padded = lp.resized(big.mode_count)?;
        let ev2 = ActionEvaluator::new(&padded, big.quadrature_samples, cfg.collision_guard)?
            .with_execution(cfg.execution);
        let res2 = descend(padded, &ev2, cfg)?;
        let a2 = res2.value.total();
        let a1 = res.value.total();
        (Some(a2), Some((a2 - a1).abs() / a1.abs()))
    } else {
        (None, None)
    };

    let mut failures = Vec::new();
    if grad >= cfg.grad_tol {
        failures.push(format!("gradient norm {grad:.3e} >= {:.1e}", cfg.grad_tol));
    }
    if eom >= cfg.eom_tol {
        failures.push(format!("EOM residual {eom:.3e} >= {:.1e}", cfg.eom_tol));
    }
    if sym >= cfg.symmetry_tol {
        failures.push(format!(
            "symmetry error {sym:.3e} >= {:.1e}",
            cfg.symmetry_tol
        ));
    }
    if let Some(c) = doubling_change {
        if c >= cfg.doubling_tol {
            failures.push(format!("mode doubling changed the action by {c:.3e}"));
        }
    }
    if min_distance <= cfg.collision_guard {
        failures.push(format!("near collision in samples ({min_distance:.3e})"));
    }
    if res.stalled {
        failures.push("line search stalled".into());
    }
    let converged = failures.is_empty();
    let message = if converged {
        "converged".into()
    } else {
        failures.join("; ")
    };
    let report = SolveReport {
        n: spec.n,
        p: spec.p,
        seed,
        mode_count: spec.mode_count,
        quadrature_samples: spec.quadrature_samples,
        action: res.value.total(),
        kinetic: res.value.kinetic,
        potential: res.value.potential,
        gradient_norm: grad,
        eom_residual: eom,
        symmetry_error: sym,
        min_distance,
        iterations: res.iterations,
        max_increase: res.max_increase,
        doubled_action,
        doubling_change,
        converged,
        conjectural: spec.conjectural(),
        message,
    };
    Ok(SolveOutput {
        loop_: lp,
        trajectory,
        report,
    })
}
