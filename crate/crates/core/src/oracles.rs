//! Closed-form reference solutions for point-force Darcy flow.
//!
//! These are the independent yardsticks for the finite element solver: the
//! free-space fundamental solution, the Neumann Green's function for a unit
//! ball dipole (3-D), the simplified on-axis dipole with its boundary speed
//! profile, and the 2-D unit-disc analogue used to grade the actual solver.
//! Every formula here is itself validated by finite-difference residual
//! checks (`run_self_checks`) before any solver test relies on it.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    /// The image of a dipole at the center lies at infinity.
    #[error("dipole location must be nonzero")]
    CenterDipole,
}

/// Point dipole driving a flow: location, moment vector, ambient dimension.
#[derive(Debug, Clone)]
pub struct DipoleSpec {
    pub location: Vec<f64>,
    pub moment: Vec<f64>,
    pub dim: usize,
}

impl DipoleSpec {
    pub fn validate(&self) -> Result<(), String> {
        if self.dim != 2 && self.dim != 3 {
            return Err(format!("dimension must be 2 or 3, got {}", self.dim));
        }
        if self.location.len() != self.dim || self.moment.len() != self.dim {
            return Err("location/moment length must equal dim".into());
        }
        let r2: f64 = self.location.iter().map(|v| v * v).sum();
        if !(r2 < 1.0) {
            return Err("dipole must lie strictly inside the unit ball".into());
        }
        if !self.moment.iter().chain(&self.location).all(|v| v.is_finite()) {
            return Err("dipole entries must be finite".into());
        }
        Ok(())
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Free-space kernel: Psi(x) = x / (omega_n |x|^n) with omega_2 = 2 pi,
/// omega_3 = 4 pi. A dipole pressure is p = D . Psi(x - z).
pub fn fundamental_solution(x: &[f64], n: usize) -> Vec<f64> {
    assert!(n == 2 || n == 3, "dimension must be 2 or 3");
    assert_eq!(x.len(), n);
    let r = norm(x);
    assert!(r > 0.0, "kernel is singular at the origin");
    let omega = match n {
        2 => 2.0 * std::f64::consts::PI,
        _ => 4.0 * std::f64::consts::PI,
    };
    let scale = 1.0 / (omega * r.powi(n as i32));
    x.iter().map(|v| v * scale).collect()
}

/// Neumann Green's function (dipole form) for the unit ball: the pressure of
/// a point dipole with moment D at z inside the ball, with impermeable
/// boundary, is p = D . G_z(x).
pub fn ball_green_function(x: [f64; 3], z: [f64; 3]) -> Result<[f64; 3], OracleError> {
    let zn = norm(&z);
    if zn == 0.0 {
        return Err(OracleError::CenterDipole);
    }
    let e = [z[0] / zn, z[1] / zn, z[2] / zn];
    let zeta = [z[0] / (zn * zn), z[1] / (zn * zn), z[2] / (zn * zn)];
    let xz = [x[0] - z[0], x[1] - z[1], x[2] - z[2]];
    let xzeta = [x[0] - zeta[0], x[1] - zeta[1], x[2] - zeta[2]];
    let rz = norm(&xz);
    let rzeta = norm(&xzeta);
    let xe = dot(&x, &e);

    let radial = (xe - zn) / rz.powi(3) - (xe - 1.0 / zn) / (zn.powi(3) * rzeta.powi(3));
    let tangential = (1.0 / (zn * rzeta))
        * (1.0
            + 1.0 / (zn * zn * rzeta * rzeta)
            + zn * rzeta / rz.powi(3)
            + xe / (1.0 / zn - xe + rzeta));
    let perp = [x[0] - xe * e[0], x[1] - xe * e[1], x[2] - xe * e[2]];

    let c = 1.0 / (4.0 * std::f64::consts::PI);
    Ok([
        c * (radial * e[0] + tangential * perp[0]),
        c * (radial * e[1] + tangential * perp[1]),
        c * (radial * e[2] + tangential * perp[2]),
    ])
}

/// Evaluation of the on-axis dipole flow in the unit ball: unit vertical
/// moment at (0, 0, c). `boundary_velocity` and `speed` describe the slip
/// velocity field and are meaningful for |x| = 1.
#[derive(Debug, Clone, Copy)]
pub struct AxisDipoleEval {
    pub pressure: f64,
    pub boundary_velocity: [f64; 3],
    pub speed: f64,
}

pub fn axis_dipole_ball(x: [f64; 3], c: f64) -> AxisDipoleEval {
    let pi4 = 4.0 * std::f64::consts::PI;
    let rz = ((x[0]) * (x[0]) + (x[1]) * (x[1]) + (x[2] - c) * (x[2] - c)).sqrt();
    let rzeta = ((x[0]) * (x[0]) + (x[1]) * (x[1]) + (x[2] - 1.0 / c) * (x[2] - 1.0 / c)).sqrt();
    let pressure = ((x[2] - c) / rz.powi(3) - (x[2] - 1.0 / c) / (c.powi(3) * rzeta.powi(3))) / pi4;

    let w_scale = 3.0 / pi4 * (1.0 - c * c) / rz.powi(5);
    let boundary_velocity = [
        w_scale * x[2] * x[0],
        w_scale * x[2] * x[1],
        w_scale * (x[2] * x[2] - 1.0),
    ];
    let speed = norm(&boundary_velocity);
    AxisDipoleEval { pressure, boundary_velocity, speed }
}

/// Height x3 at which the boundary speed of the on-axis dipole peaks.
pub fn axis_dipole_max_location(c: f64) -> f64 {
    let s = c * c + 1.0;
    ((s * s + 60.0 * c * c).sqrt() - s) / (6.0 * c)
}

/// 2-D analogue of the ball Green's function on the unit disc, constructed
/// by the method of images: G_z = -grad_z of the disc Neumann function
/// (1/2pi)(ln|x-z| + ln(|z| |x-zeta|) - |x|^2/2), zeta = z/|z|^2. The
/// pressure of a 2-D dipole with moment D at z is p = D . G_z(x).
pub fn disc_neumann_green(x: [f64; 2], z: [f64; 2]) -> Result<[f64; 2], OracleError> {
    let zn = norm(&z);
    if zn == 0.0 {
        return Err(OracleError::CenterDipole);
    }
    let e = [z[0] / zn, z[1] / zn];
    let zeta = [z[0] / (zn * zn), z[1] / (zn * zn)];
    let xz = [x[0] - z[0], x[1] - z[1]];
    let xzeta = [x[0] - zeta[0], x[1] - zeta[1]];
    let rz2 = xz[0] * xz[0] + xz[1] * xz[1];
    let rzeta2 = xzeta[0] * xzeta[0] + xzeta[1] * xzeta[1];

    // (I - 2 e e^T)(x - zeta): reflection of the image term's gradient.
    let ee = e[0] * xzeta[0] + e[1] * xzeta[1];
    let refl = [xzeta[0] - 2.0 * ee * e[0], xzeta[1] - 2.0 * ee * e[1]];

    let c = 1.0 / (2.0 * std::f64::consts::PI);
    Ok([
        c * (xz[0] / rz2 + refl[0] / (zn * zn * rzeta2) - z[0] / (zn * zn)),
        c * (xz[1] / rz2 + refl[1] / (zn * zn * rzeta2) - z[1] / (zn * zn)),
    ])
}

/// Centered second-order finite-difference step used by all residual checks.
pub const FD_STEP: f64 = 1e-4;

/// FD Laplacian residual of `f` at `x`: returns (|sum of second
/// differences|, scale), where the scale is the sum of the magnitudes of the
/// individual second-derivative terms, floored at one. A correct harmonic
/// function has residual far below the scale; a wrong formula does not.
pub fn fd_laplacian_residual(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> (f64, f64) {
    let mut sum = 0.0;
    let mut scale = 0.0;
    let fx = f(x);
    let mut p = x.to_vec();
    for i in 0..x.len() {
        p[i] = x[i] + h;
        let fp = f(&p);
        p[i] = x[i] - h;
        let fm = f(&p);
        p[i] = x[i];
        let second = (fp - 2.0 * fx + fm) / (h * h);
        sum += second;
        scale += second.abs();
    }
    (sum.abs(), scale.max(1.0))
}

/// Centered FD gradient of `f` at `x`.
pub fn fd_gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut p = x.to_vec();
    for i in 0..x.len() {
        p[i] = x[i] + h;
        let fp = f(&p);
        p[i] = x[i] - h;
        let fm = f(&p);
        p[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    g
}

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub max_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

fn check(name: &'static str, max_residual: f64, tolerance: f64) -> CheckResult {
    CheckResult { name, max_residual, tolerance, passed: max_residual <= tolerance }
}

/// Worst ratio of residual to tolerance over a point set, reported as a
/// single result with tolerance normalized to the scale of the worst point.
fn worst<I: Iterator<Item = (f64, f64)>>(name: &'static str, tol_factor: f64, iter: I) -> CheckResult {
    let mut worst_ratio = 0.0;
    let mut worst_res = 0.0;
    let mut worst_tol = f64::INFINITY;
    for (residual, scale) in iter {
        let tol = tol_factor * scale;
        let ratio = residual / tol;
        if ratio > worst_ratio {
            worst_ratio = ratio;
            worst_res = residual;
            worst_tol = tol;
        }
    }
    check(name, worst_res, worst_tol)
}

fn sample_disc(rng: &mut ChaCha8Rng, avoid: [f64; 2], min_dist: f64) -> [f64; 2] {
    loop {
        let p = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let inside = p[0] * p[0] + p[1] * p[1] < 0.96;
        if inside && (p[0] - avoid[0]).hypot(p[1] - avoid[1]) >= min_dist {
            return p;
        }
    }
}

fn sample_ball(rng: &mut ChaCha8Rng, avoid: [f64; 3], min_dist: f64) -> [f64; 3] {
    loop {
        let p = [
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ];
        let r2: f64 = p.iter().map(|v| v * v).sum();
        let d: f64 = p
            .iter()
            .zip(&avoid)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if r2 < 0.96 && d >= min_dist {
            return p;
        }
    }
}

fn sample_circle(rng: &mut ChaCha8Rng) -> [f64; 2] {
    let t = rng.random_range(0.0..std::f64::consts::TAU);
    [t.cos(), t.sin()]
}

fn sample_sphere(rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let p = [
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ];
        let r = norm(&p);
        if r > 0.2 && r < 1.0 {
            return [p[0] / r, p[1] / r, p[2] / r];
        }
    }
}

/// Runs the whole self-validation suite. Every oracle must pass before it is
/// trusted as a solver reference.
pub fn run_self_checks() -> Vec<CheckResult> {
    let mut out = Vec::new();
    let h = FD_STEP;

    // Free-space kernel, 2-D: dipole pressure is harmonic away from z.
    {
        let z = [0.25, -0.1];
        let d = [0.8, -0.5];
        let p = move |x: &[f64]| {
            let psi = fundamental_solution(&[x[0] - z[0], x[1] - z[1]], 2);
            d[0] * psi[0] + d[1] * psi[1]
        };
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        out.push(worst(
            "fundamental-2d-harmonic",
            1e-5,
            (0..300).map(|_| {
                let x = sample_disc(&mut rng, z, 0.1);
                fd_laplacian_residual(&p, &x, h)
            }),
        ));
    }

    // Free-space kernel, 3-D.
    {
        let z = [0.2, 0.1, -0.3];
        let d = [0.5, -1.0, 0.7];
        let p = move |x: &[f64]| {
            let psi = fundamental_solution(&[x[0] - z[0], x[1] - z[1], x[2] - z[2]], 3);
            d[0] * psi[0] + d[1] * psi[1] + d[2] * psi[2]
        };
        let mut rng = ChaCha8Rng::seed_from_u64(102);
        out.push(worst(
            "fundamental-3d-harmonic",
            1e-5,
            (0..300).map(|_| {
                let x = sample_ball(&mut rng, z, 0.1);
                fd_laplacian_residual(&p, &x, h)
            }),
        ));
    }

    // Unit-ball Green's function: no-flux boundary, interior harmonicity,
    // and boundedness of the non-singular correction.
    {
        let z = [0.3, -0.2, 0.35];
        let d = [1.0, 0.4, -0.8];
        let p = move |x: &[f64]| {
            let g = ball_green_function([x[0], x[1], x[2]], z).unwrap();
            d[0] * g[0] + d[1] * g[1] + d[2] * g[2]
        };

        let mut rng = ChaCha8Rng::seed_from_u64(103);
        out.push(worst(
            "ball-green-neumann",
            1e-6,
            (0..1000).map(|_| {
                let x = sample_sphere(&mut rng);
                let grad = fd_gradient(&p, &x, h);
                let normal = dot(&grad, &x);
                (normal.abs(), norm(&grad).max(1.0))
            }),
        ));

        let mut rng = ChaCha8Rng::seed_from_u64(104);
        out.push(worst(
            "ball-green-harmonic",
            1e-5,
            (0..500).map(|_| {
                let x = sample_ball(&mut rng, z, 0.2);
                fd_laplacian_residual(&p, &x, h)
            }),
        ));

        // Correction G_z - Psi(. - z) stays bounded approaching z: the drift
        // between successive radii shrinks instead of blowing up like the
        // 1/|x-z|^2 leading part would. Radii stay above 1e-4 so the O(1)
        // difference of the two large terms is not lost to roundoff.
        let dir = [0.577, 0.577, -0.578];
        let corr = |r: f64| {
            let x = [z[0] + r * dir[0], z[1] + r * dir[1], z[2] + r * dir[2]];
            let psi = fundamental_solution(&[x[0] - z[0], x[1] - z[1], x[2] - z[2]], 3);
            p(&x) - (d[0] * psi[0] + d[1] * psi[1] + d[2] * psi[2])
        };
        let tail = corr(1e-4);
        let drift = (corr(3e-4) - tail).abs();
        out.push(check("ball-green-regular-correction", drift, 1e-2 * (1.0 + tail.abs())));
    }

    // Disc Green's function: the oracle the 2-D solver is graded against.
    {
        let z = [0.3, 0.15];
        let d = [1.0, -0.6];
        let p = move |x: &[f64]| {
            let g = disc_neumann_green([x[0], x[1]], z).unwrap();
            d[0] * g[0] + d[1] * g[1]
        };

        let mut rng = ChaCha8Rng::seed_from_u64(105);
        out.push(worst(
            "disc-green-neumann",
            1e-6,
            (0..1000).map(|_| {
                let x = sample_circle(&mut rng);
                let grad = fd_gradient(&p, &x, h);
                let normal = dot(&grad, &x);
                (normal.abs(), norm(&grad).max(1.0))
            }),
        ));

        let mut rng = ChaCha8Rng::seed_from_u64(106);
        out.push(worst(
            "disc-green-harmonic",
            1e-5,
            (0..500).map(|_| {
                let x = sample_disc(&mut rng, z, 0.2);
                fd_laplacian_residual(&p, &x, h)
            }),
        ));

        // Axis-aligned configuration is mirror symmetric.
        let zs = [0.3, 0.0];
        let mut rng = ChaCha8Rng::seed_from_u64(107);
        let mut max_asym: f64 = 0.0;
        for _ in 0..300 {
            let x = sample_disc(&mut rng, zs, 0.15);
            let above = disc_neumann_green(x, zs).unwrap()[0];
            let below = disc_neumann_green([x[0], -x[1]], zs).unwrap()[0];
            max_asym = max_asym.max((above - below).abs());
        }
        out.push(check("disc-green-symmetry", max_asym, 1e-12));
    }

    // On-axis dipole: tangency, pole behaviour, agreement with the general
    // Green's function, and the analytic maximizer.
    {
        let c = 0.5;
        let mut rng = ChaCha8Rng::seed_from_u64(108);
        let mut max_normal: f64 = 0.0;
        let mut scale: f64 = 1.0;
        for _ in 0..200 {
            let x = sample_sphere(&mut rng);
            let w = axis_dipole_ball(x, c).boundary_velocity;
            max_normal = max_normal.max(dot(&w, &x).abs());
            scale = scale.max(norm(&w));
        }
        out.push(check("axis-dipole-tangency", max_normal, 1e-12 * scale));

        let pole = axis_dipole_ball([0.0, 0.0, 1.0], c).speed;
        out.push(check("axis-dipole-north-pole", pole, 1e-12));

        let mut rng = ChaCha8Rng::seed_from_u64(109);
        let mut max_diff: f64 = 0.0;
        let mut pscale: f64 = 1.0;
        for _ in 0..200 {
            let x = sample_ball(&mut rng, [0.0, 0.0, c], 0.15);
            let g = ball_green_function(x, [0.0, 0.0, c]).unwrap()[2];
            let pr = axis_dipole_ball(x, c).pressure;
            max_diff = max_diff.max((g - pr).abs());
            pscale = pscale.max(pr.abs());
        }
        out.push(check("axis-dipole-matches-green", max_diff, 1e-10 * pscale));

        // Frozen arithmetic value of the maximizer formula at c = 0.5, and a
        // grid search over the speed profile as an independent cross-check.
        let loc = axis_dipole_max_location(0.5);
        out.push(check("axis-dipole-maximizer-value", (loc - 0.9399017).abs(), 1e-6));
        let speed_at = |x3: f64| {
            let r = (1.0 - x3 * x3).max(0.0).sqrt();
            axis_dipole_ball([r, 0.0, x3], 0.5).speed
        };
        let mut best = (0.0, f64::MIN);
        let mut x3 = -1.0;
        while x3 <= 1.0 {
            let s = speed_at(x3);
            if s > best.1 {
                best = (x3, s);
            }
            x3 += 1e-4;
        }
        out.push(check("axis-dipole-maximizer-grid", (best.0 - loc).abs(), 2e-4));
    }

    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fundamental_solution_pinned_values() {
        let v = fundamental_solution(&[1.0, 0.0], 2);
        assert!((v[0] - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-16);
        assert_eq!(v[1], 0.0);
        let w = fundamental_solution(&[0.0, 0.0, 2.0], 3);
        assert_eq!(w[0], 0.0);
        assert_eq!(w[1], 0.0);
        assert!((w[2] - 1.0 / (16.0 * std::f64::consts::PI)).abs() < 1e-16);
    }

    #[test]
    fn center_dipole_rejected() {
        assert!(ball_green_function([0.5, 0.0, 0.0], [0.0; 3]).is_err());
        assert!(disc_neumann_green([0.5, 0.0], [0.0; 2]).is_err());
    }

    #[test]
    fn dipole_spec_validation() {
        let good = DipoleSpec { location: vec![0.5, 0.0], moment: vec![1.0, 0.0], dim: 2 };
        assert!(good.validate().is_ok());
        let outside = DipoleSpec { location: vec![1.5, 0.0], moment: vec![1.0, 0.0], dim: 2 };
        assert!(outside.validate().is_err());
        let bad_dim = DipoleSpec { location: vec![0.5], moment: vec![1.0], dim: 1 };
        assert!(bad_dim.validate().is_err());
    }

    #[test]
    fn self_checks_all_pass() {
        for c in run_self_checks() {
            assert!(
                c.passed,
                "{}: residual {:.3e} > tolerance {:.3e}",
                c.name, c.max_residual, c.tolerance
            );
        }
    }

    #[test]
    fn maximizer_asymptotics() {
        // As the dipole approaches the boundary the peak moves toward it:
        // x3* ~ 1 - (c - 1)^2 / 8.
        for c in [0.9, 0.95, 0.99] {
            let exact = axis_dipole_max_location(c);
            let approx = 1.0 - (c - 1.0) * (c - 1.0) / 8.0;
            assert!((exact - approx).abs() < 0.02 * (1.0 - c) * (1.0 - c));
        }
    }
}
