//! Lagrangian action on the symmetric loop space and its exact gradient.

use num_complex::Complex64;

use super::fourier::{body_phases, FourierLoop};
use super::NbodyError;
use crate::exec::Execution;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionValue {
    pub kinetic: f64,
    pub potential: f64,
    pub min_distance: f64,
}

impl ActionValue {
    pub fn total(&self) -> f64 {
        self.kinetic + self.potential
    }
}

/// Trapezoidal quadrature of the action at `N_q` uniform nodes, with the
/// kinetic term taken exactly from the coefficients.
#[derive(Debug, Clone)]
pub struct ActionEvaluator {
    n: usize,
    period: f64,
    modes: Vec<i64>,
    /// `basis[j * M + m] = e^{i k_m t_j}`
    basis: Vec<Complex64>,
    phases: Vec<(Complex64, Complex64)>,
    nodes: usize,
    collision_guard: f64,
    exec: Execution,
}

struct NodeEval {
    potential: f64,
    min_distance: f64,
    min_pair: (usize, usize),
    /// Σ over odd bodies of ∂U/∂x_i · conj(phase), likewise even bodies.
    odd: Complex64,
    even: Complex64,
}

impl ActionEvaluator {
    pub fn new(
        template: &FourierLoop,
        nodes: usize,
        collision_guard: f64,
    ) -> Result<Self, NbodyError> {
        if nodes < 4 * template.max_mode().max(1) {
            return Err(NbodyError::Parameter(format!(
                "quadrature nodes {nodes} < 4 x max mode {}",
                template.max_mode()
            )));
        }
        let modes = template.modes().to_vec();
        let w = template.frequency();
        let h = template.period / nodes as f64;
        let mut basis = Vec::with_capacity(nodes * modes.len());
        for j in 0..nodes {
            let t = j as f64 * h;
            for &k in &modes {
                basis.push(Complex64::from_polar(1.0, k as f64 * w * t));
            }
        }
        Ok(Self {
            n: template.n,
            period: template.period,
            modes,
            basis,
            phases: body_phases(template.n),
            nodes,
            collision_guard,
            exec: Execution::default(),
        })
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn node_time(&self, j: usize) -> f64 {
        j as f64 * self.period / self.nodes as f64
    }

    fn check(&self, lp: &FourierLoop) -> Result<(), NbodyError> {
        if lp.modes() != self.modes.as_slice() || lp.n != self.n {
            return Err(NbodyError::Parameter(
                "loop does not match evaluator modes".into(),
            ));
        }
        Ok(())
    }

    fn kinetic(&self, c: &[Complex64]) -> f64 {
        let w = 2.0 * std::f64::consts::PI / self.period;
        // 2n bodies, each with ½∫|ẋ|² = ½ T Σ (kω)² |c_k|²
        let s: f64 = self
            .modes
            .iter()
            .zip(c)
            .map(|(&k, c)| (k as f64 * w).powi(2) * c.norm_sqr())
            .sum();
        self.n as f64 * self.period * s
    }

    fn eval_node(&self, c: &[Complex64], j: usize, want_grad: bool) -> NodeEval {
        let mm = self.modes.len();
        let row = &self.basis[j * mm..(j + 1) * mm];
        let mut fwd = Complex64::new(0.0, 0.0);
        let mut bwd = Complex64::new(0.0, 0.0);
        for (e, ck) in row.iter().zip(c) {
            fwd += ck * e;
            bwd += ck * e.conj();
        }
        let nb = 2 * self.n;
        let mut x = Vec::with_capacity(nb);
        for (odd, even) in &self.phases {
            x.push(odd * fwd);
            x.push(even * bwd);
        }
        let mut potential = 0.0;
        let mut min_d = f64::INFINITY;
        let mut min_pair = (0, 0);
        let mut grad = if want_grad {
            vec![Complex64::new(0.0, 0.0); nb]
        } else {
            Vec::new()
        };
        for a in 0..nb {
            for b in (a + 1)..nb {
                let dx = x[a] - x[b];
                let r2 = dx.norm_sqr();
                let r = r2.sqrt();
                if r < min_d {
                    min_d = r;
                    min_pair = (a, b);
                }
                potential += 1.0 / r;
                if want_grad {
                    // ∂(1/|x_a - x_b|)/∂x_a = -(x_a - x_b)/r³
                    let g = dx / (r2 * r);
                    grad[a] -= g;
                    grad[b] += g;
                }
            }
        }
        let mut odd = Complex64::new(0.0, 0.0);
        let mut even = Complex64::new(0.0, 0.0);
        if want_grad {
            for (k, (po, pe)) in self.phases.iter().enumerate() {
                odd += grad[2 * k] * po.conj();
                even += grad[2 * k + 1] * pe.conj();
            }
        }
        NodeEval {
            potential,
            min_distance: min_d,
            min_pair,
            odd,
            even,
        }
    }

    fn collision_check(&self, evals: &[NodeEval]) -> Result<f64, NbodyError> {
        let mut min_d = f64::INFINITY;
        for (j, e) in evals.iter().enumerate() {
            if e.min_distance < self.collision_guard || !e.min_distance.is_finite() {
                return Err(NbodyError::NearCollision {
                    time: self.node_time(j),
                    node: j,
                    bodies: (e.min_pair.0 + 1, e.min_pair.1 + 1),
                    distance: e.min_distance,
                });
            }
            min_d = min_d.min(e.min_distance);
        }
        Ok(min_d)
    }

    pub fn action(&self, lp: &FourierLoop) -> Result<ActionValue, NbodyError> {
        self.check(lp)?;
        let c = lp.coeffs();
        let evals = self
            .exec
            .map_indexed(self.nodes, |j| self.eval_node(c, j, false));
        let min_distance = self.collision_check(&evals)?;
        let h = self.period / self.nodes as f64;
        let potential = h * evals.iter().map(|e| e.potential).sum::<f64>();
        Ok(ActionValue {
            kinetic: self.kinetic(c),
            potential,
            min_distance,
        })
    }

    /// Action and its gradient `∂A/∂Re c_k + i ∂A/∂Im c_k` per mode.
    pub fn action_and_gradient(
        &self,
        lp: &FourierLoop,
    ) -> Result<(ActionValue, Vec<Complex64>), NbodyError> {
        self.check(lp)?;
        let c = lp.coeffs();
        let evals = self
            .exec
            .map_indexed(self.nodes, |j| self.eval_node(c, j, true));
        let min_distance = self.collision_check(&evals)?;
        let h = self.period / self.nodes as f64;
        let potential = h * evals.iter().map(|e| e.potential).sum::<f64>();
        let mm = self.modes.len();
        let w = 2.0 * std::f64::consts::PI / self.period;
        let kin_scale = 2.0 * self.n as f64 * self.period;
        let grad = (0..mm)
            .map(|m| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, e) in evals.iter().enumerate() {
                    let b = self.basis[j * mm + m];
                    // odd bodies carry e^{ikt}, even bodies e^{-ikt}
                    acc += e.odd * b.conj() + e.even * b;
                }
                let kw = self.modes[m] as f64 * w;
                acc * h + c[m] * (kin_scale * kw * kw)
            })
            .collect();
        Ok((
            ActionValue {
                kinetic: self.kinetic(c),
                potential,
                min_distance,
            },
            grad,
        ))
    }
}

pub fn gradient_norm(g: &[Complex64]) -> f64 {
    g.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Solver starting loop plus random noise on every mode.
    fn sample_loop(n: usize, p: usize, k: usize, seed: u64) -> FourierLoop {
        use crate::nbody::solver::{initial_guess, leading_mode, ProblemSpec};
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let spec = ProblemSpec::with_modes(n, p, k).unwrap();
        let mut lp = initial_guess(&spec, seed).unwrap();
        let k0 = leading_mode(n, p);
        for (m, c) in lp.modes().to_vec().into_iter().zip(lp.coeffs_mut()) {
            let amp = 0.03 / (1.0 + (m - k0).abs() as f64);
            *c += Complex64::new(rng.gen_range(-amp..amp), rng.gen_range(-amp..amp));
        }
        lp
    }

    #[test]
    fn kinetic_single_mode() {
        let mut lp = FourierLoop::zeros(3, 1, 2.0 * PI, 4).unwrap();
        lp.set_coeff(4, Complex64::new(0.6, 0.0)).unwrap();
        lp.set_coeff(1, Complex64::new(0.0, 0.0)).unwrap();
        let ev = ActionEvaluator::new(&lp, 256, 0.0).unwrap();
        let k = ev.kinetic(lp.coeffs());
        let want = 6.0 * 0.5 * (4.0f64).powi(2) * 0.36 * 2.0 * PI;
        assert!((k - want).abs() < 1e-12);
    }

    #[test]
    fn homogeneity() {
        let lp = sample_loop(3, 1, 8, 3);
        let ev = ActionEvaluator::new(&lp, 256, 1e-6).unwrap();
        let a = ev.action(&lp).unwrap();
        let mut lp2 = lp.clone();
        for c in lp2.coeffs_mut() {
            *c *= 2.0;
        }
        let b = ev.action(&lp2).unwrap();
        assert!((b.kinetic - 4.0 * a.kinetic).abs() < 1e-10 * a.kinetic);
        assert!((b.potential - 0.5 * a.potential).abs() < 1e-12 * a.potential);
    }

    #[test]
    fn collision_rejected() {
        let lp = FourierLoop::zeros(2, 1, 2.0 * PI, 3).unwrap();
        let ev = ActionEvaluator::new(&lp, 64, 1e-3).unwrap();
        assert!(matches!(
            ev.action(&lp),
            Err(NbodyError::NearCollision { .. })
        ));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for (n, p, seed) in [(2, 1, 1), (3, 1, 2), (4, 2, 3), (4, 1, 4), (5, 2, 5)] {
            let lp = sample_loop(n, p, 9, seed);
            let ev = ActionEvaluator::new(&lp, 256, 1e-6).unwrap();
            let (_, g) = ev.action_and_gradient(&lp).unwrap();
            let f = |l: &FourierLoop| ev.action(l).unwrap().total();
            let h = 1e-6;
            for i in 0..g.len() {
                for (part, dir) in [
                    (g[i].re, Complex64::new(h, 0.0)),
                    (g[i].im, Complex64::new(0.0, h)),
                ] {
                    let mut a = lp.clone();
                    a.coeffs_mut()[i] += dir;
                    let mut b = lp.clone();
                    b.coeffs_mut()[i] -= dir;
                    let fd = (f(&a) - f(&b)) / (2.0 * h);
                    let scale = part.abs().max(1.0);
                    assert!(
                        (fd - part).abs() / scale < 1e-6,
                        "n={n} p={p} i={i}: {fd} vs {part}"
                    );
                }
            }
        }
    }

    #[test]
    fn execution_modes_agree_bitwise() {
        let lp = sample_loop(4, 1, 12, 9);
        let seq = ActionEvaluator::new(&lp, 256, 1e-6)
            .unwrap()
            .with_execution(Execution::Sequential);
        let par = seq.clone().with_execution(Execution::Parallel);
        let (a, ga) = seq.action_and_gradient(&lp).unwrap();
        let (b, gb) = par.action_and_gradient(&lp).unwrap();
        assert_eq!(a.total().to_bits(), b.total().to_bits());
        assert_eq!(ga, gb);
    }
}
