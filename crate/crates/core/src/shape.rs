//! Shape-sphere projection of the two generating bodies, ray labels and
//! the structural checks on a computed orbit.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::braid::{gcd, return_permutation};
use crate::nbody::{NbodyError, Trajectory};

#[derive(Debug, Error)]
pub enum ShapeError {
    #[error("both generating bodies at the origin")]
    Degenerate,
    #[error("angular tolerance {tol} outside (0, pi/(4n)) = (0, {limit})")]
    Tolerance { tol: f64, limit: f64 },
    #[error("trajectory covers [0, {covered}] but the checks need [0, {needed}]")]
    Span { covered: f64, needed: f64 },
    #[error(transparent)]
    Trajectory(#[from] NbodyError),
}

/// `(|x1|² − |x2|², 2 Re(x1 x̄2), 2 Im(x1 x̄2))`
pub fn project(x1: Complex64, x2: Complex64) -> Result<[f64; 3], ShapeError> {
    if x1 == Complex64::new(0.0, 0.0) && x2 == Complex64::new(0.0, 0.0) {
        return Err(ShapeError::Degenerate);
    }
    let z = x1 * x2.conj();
    Ok([x1.norm_sqr() - x2.norm_sqr(), 2.0 * z.re, 2.0 * z.im])
}

fn norm3(u: &[f64; 3]) -> f64 {
    (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt()
}

fn angle_between(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    // atan2 of |a×b| and a·b stays accurate near 0 and π
    let cross = [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ];
    let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    norm3(&cross).atan2(dot)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapePoint {
    pub t: f64,
    pub u: [f64; 3],
    pub unit_u: [f64; 3],
}

impl ShapePoint {
    pub fn new(t: f64, x1: Complex64, x2: Complex64) -> Result<Self, ShapeError> {
        let u = project(x1, x2)?;
        let r = norm3(&u);
        Ok(Self {
            t,
            u,
            unit_u: [u[0] / r, u[1] / r, u[2] / r],
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RayKind {
    APlus,
    AMinus,
    /// `B_j`, `j` reduced into `0..2n`.
    B(usize),
    None,
}

impl RayKind {
    /// `B_j` for any integer `j`.
    pub fn b(j: i64, n: usize) -> Self {
        RayKind::B(j.rem_euclid(2 * n as i64) as usize)
    }

    pub fn is_collision(self) -> bool {
        matches!(self, RayKind::APlus | RayKind::AMinus)
            || matches!(self, RayKind::B(j) if j % 2 == 0)
    }

    pub fn direction(self, n: usize) -> Option<[f64; 3]> {
        match self {
            RayKind::APlus => Some([1.0, 0.0, 0.0]),
            RayKind::AMinus => Some([-1.0, 0.0, 0.0]),
            RayKind::B(j) => {
                let a = j as f64 * PI / n as f64;
                Some([0.0, a.cos(), a.sin()])
            }
            RayKind::None => None,
        }
    }
}

impl fmt::Display for RayKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RayKind::APlus => write!(f, "A+"),
            RayKind::AMinus => write!(f, "A-"),
            RayKind::B(j) => write!(f, "B{j}"),
            RayKind::None => write!(f, "none"),
        }
    }
}

impl Serialize for RayLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("RayLabel", 3)?;
        st.serialize_field("kind", &self.kind.to_string())?;
        st.serialize_field("nearest", &self.nearest.to_string())?;
        st.serialize_field("distance", &self.distance)?;
        st.end()
    }
}

/// Nearest ray and its angular distance; `kind` is `None` when that
/// distance exceeds the tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayLabel {
    pub kind: RayKind,
    pub nearest: RayKind,
    pub distance: f64,
}

pub fn default_tolerance(n: usize) -> f64 {
    PI / (16 * n) as f64
}

pub fn check_tolerance(n: usize, tol: f64) -> Result<(), ShapeError> {
    let limit = PI / (4 * n) as f64;
    if !(tol > 0.0 && tol < limit) {
        return Err(ShapeError::Tolerance { tol, limit });
    }
    Ok(())
}

pub fn classify(u: &[f64; 3], n: usize, tol: f64) -> Result<RayLabel, ShapeError> {
    check_tolerance(n, tol)?;
    if norm3(u) == 0.0 {
        return Err(ShapeError::Degenerate);
    }
    let candidates = [RayKind::APlus, RayKind::AMinus]
        .into_iter()
        .chain((0..2 * n).map(RayKind::B));
    let mut best = (RayKind::None, f64::INFINITY);
    for c in candidates {
        let d = angle_between(u, &c.direction(n).expect("real ray"));
        if d < best.1 {
            best = (c, d);
        }
    }
    Ok(RayLabel {
        kind: if best.1 <= tol { best.0 } else { RayKind::None },
        nearest: best.0,
        distance: best.1,
    })
}

/// The π-rotation about `B_k`.
pub fn m_matrix(k: i64, n: usize) -> [[f64; 3]; 3] {
    let a = 2.0 * PI * k as f64 / n as f64;
    [
        [-1.0, 0.0, 0.0],
        [0.0, a.cos(), a.sin()],
        [0.0, a.sin(), -a.cos()],
    ]
}

fn apply(m: &[[f64; 3]; 3], u: &[f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (o, row) in out.iter_mut().zip(m) {
        *o = row[0] * u[0] + row[1] * u[1] + row[2] * u[2];
    }
    out
}

/// Shape curve of a trajectory, one point per sample, with labels.
pub fn shape_curve(traj: &Trajectory, tol: f64) -> Result<Vec<(ShapePoint, RayLabel)>, ShapeError> {
    check_tolerance(traj.n, tol)?;
    traj.times
        .iter()
        .zip(&traj.positions)
        .map(|(&t, x)| {
            let pt = ShapePoint::new(t, x[0], x[1])?;
            let label = classify(&pt.u, traj.n, tol)?;
            Ok((pt, label))
        })
        .collect()
}

pub const SHAPE_CSV_HEADER: &str = "t,u1,u2,u3,label";

pub fn shape_csv(curve: &[(ShapePoint, RayLabel)]) -> String {
    let mut s = String::from(SHAPE_CSV_HEADER);
    s.push('\n');
    for (p, l) in curve {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            p.t, p.u[0], p.u[1], p.u[2], l.kind
        ));
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShapeCheckConfig {
    /// Angular ray tolerance; `None` means `π/(16n)`.
    pub tol_angle: Option<f64>,
    /// Guard band around the sign changes of `u1`, as a fraction of `T̄`.
    pub guard_fraction: f64,
    /// Allowed `max_i |x_i(2T̄) − x_{σ(i)}(0)|`.
    pub return_tol: f64,
    /// Allowed relative mismatch of the π-rotation symmetry about `B_{2p−1}`.
    pub mirror_tol: f64,
    /// Pair distance below which a sample is flagged.
    pub collision_warning: f64,
}

impl Default for ShapeCheckConfig {
    fn default() -> Self {
        Self {
            tol_angle: None,
            guard_fraction: 1e-3,
            return_tol: 1e-6,
            mirror_tol: 1e-6,
            collision_warning: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EndpointCheck {
    pub t: f64,
    pub expected: String,
    pub label: RayLabel,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SignCheck {
    /// Smallest `u1` (first half) or largest `u1` (second half) inside the band.
    pub extreme_u1: f64,
    pub samples: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ShapeReport {
    pub n: usize,
    pub p: usize,
    pub t_bar: f64,
    pub tol_angle: f64,
    pub s1: Vec<EndpointCheck>,
    pub s1_pass: bool,
    pub s2: SignCheck,
    pub s3: SignCheck,
    pub s4_error: f64,
    pub s4_pass: bool,
    /// Smallest angular distance to `A±`/`B_even` on `(0, 2T̄)`.
    pub collision_ray_distance: f64,
    pub avoids_collision_rays: bool,
    pub mirror_error: f64,
    pub mirror_pass: bool,
    /// First odd `B` ray reached after leaving `B_{-1}`.
    pub first_return: Option<(f64, String)>,
    pub warnings: Vec<String>,
    pub all_pass: bool,
}

/// Checks the endpoint rays, the sign of `u1` on each half, the return map,
/// collision-ray avoidance and the mirror symmetry on `[0, 2T̄]`.
pub fn check_shape_properties(
    traj: &Trajectory,
    cfg: &ShapeCheckConfig,
) -> Result<ShapeReport, ShapeError> {
    let (n, p) = (traj.n, traj.p);
    let tol = cfg.tol_angle.unwrap_or_else(|| default_tolerance(n));
    check_tolerance(n, tol)?;
    let d = gcd(n, p);
    let t_bar = d as f64 * traj.period / (2 * n) as f64;
    let covered = traj.coverage_end();
    if covered < 2.0 * t_bar * (1.0 - 1e-12) {
        return Err(ShapeError::Span {
            covered,
            needed: 2.0 * t_bar,
        });
    }
    let u_at = |t: f64| -> Result<[f64; 3], ShapeError> {
        let x = traj.positions_at(t)?;
        project(x[0], x[1])
    };

    let mut warnings = Vec::new();
    let (dmin, jmin) = traj.min_pair_distance();
    if dmin <= cfg.collision_warning {
        warnings.push(format!(
            "near-collision sample at t = {} (pair distance {dmin:.3e}); the shape curve \
             touches a collision ray (A+, A- or an even B ray) there",
            traj.times[jmin]
        ));
    }

    let mut s1 = Vec::new();
    for (t, j) in [
        (0.0, -1i64),
        (t_bar, 2 * p as i64 - 1),
        (2.0 * t_bar, 4 * p as i64 - 1),
    ] {
        let expected = RayKind::b(j, n);
        let label = classify(&u_at(t)?, n, tol)?;
        s1.push(EndpointCheck {
            t,
            expected: expected.to_string(),
            pass: label.kind == expected,
            label,
        });
    }
    let s1_pass = s1.iter().all(|c| c.pass);

    let guard = cfg.guard_fraction * t_bar;
    let window = |a: f64, b: f64| {
        traj.times
            .iter()
            .zip(&traj.positions)
            .filter(move |(&t, _)| t > a && t < b)
    };
    let mut s2 = SignCheck {
        extreme_u1: f64::INFINITY,
        samples: 0,
        pass: true,
    };
    for (_, x) in window(guard, t_bar - guard) {
        let u1 = project(x[0], x[1])?[0];
        s2.extreme_u1 = s2.extreme_u1.min(u1);
        s2.samples += 1;
    }
    s2.pass = s2.samples > 0 && s2.extreme_u1 > 0.0;
    let mut s3 = SignCheck {
        extreme_u1: f64::NEG_INFINITY,
        samples: 0,
        pass: true,
    };
    for (_, x) in window(t_bar + guard, 2.0 * t_bar - guard) {
        let u1 = project(x[0], x[1])?[0];
        s3.extreme_u1 = s3.extreme_u1.max(u1);
        s3.samples += 1;
    }
    s3.pass = s3.samples > 0 && s3.extreme_u1 < 0.0;

    let sigma = return_permutation(n, p);
    let later = traj.positions_at(2.0 * t_bar)?;
    let now = traj.positions_at(0.0)?;
    let s4_error = (1..=2 * n)
        .map(|i| (later[i - 1] - now[sigma.apply(i) - 1]).norm())
        .fold(0.0, f64::max);
    let s4_pass = s4_error <= cfg.return_tol;

    let mut collision_ray_distance = f64::INFINITY;
    let mut first_return = None;
    let mut left_start = false;
    for (&t, x) in window(0.0, 2.0 * t_bar) {
        let u = project(x[0], x[1])?;
        for ray in [RayKind::APlus, RayKind::AMinus]
            .into_iter()
            .chain((0..n).map(|k| RayKind::B(2 * k)))
        {
            let dist = angle_between(&u, &ray.direction(n).expect("real ray"));
            collision_ray_distance = collision_ray_distance.min(dist);
        }
        let label = classify(&u, n, tol)?;
        let start_ray = RayKind::b(-1, n);
        if label.kind != start_ray {
            left_start = true;
        }
        if first_return.is_none() && left_start {
            if let RayKind::B(j) = label.kind {
                if j % 2 == 1 {
                    first_return = Some((t, label.kind.to_string()));
                }
            }
        }
    }
    if first_return.is_none() && left_start {
        let label = classify(&u_at(2.0 * t_bar)?, n, tol)?;
        if matches!(label.kind, RayKind::B(j) if j % 2 == 1) {
            first_return = Some((2.0 * t_bar, label.kind.to_string()));
        }
    }
    let avoids_collision_rays = collision_ray_distance > tol;

    let mm = m_matrix(2 * p as i64 - 1, n);
    let steps = 64;
    let mut mirror_error: f64 = 0.0;
    for j in 1..steps {
        let s = t_bar * j as f64 / steps as f64;
        let a = u_at(t_bar - s)?;
        let b = apply(&mm, &u_at(t_bar + s)?);
        let diff = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
        mirror_error = mirror_error.max(norm3(&diff) / norm3(&a));
    }
    let mirror_pass = mirror_error <= cfg.mirror_tol;

    let all_pass = s1_pass && s2.pass && s3.pass && s4_pass && avoids_collision_rays && mirror_pass;
    Ok(ShapeReport {
        n,
        p,
        t_bar,
        tol_angle: tol,
        s1,
        s1_pass,
        s2,
        s3,
        s4_error,
        s4_pass,
        collision_ray_distance,
        avoids_collision_rays,
        mirror_error,
        mirror_pass,
        first_return,
        warnings,
        all_pass,
    })
}
