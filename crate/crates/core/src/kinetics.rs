//! Pointwise membrane reaction laws and their equilibrium analysis.
//!
//! The surface species adsorbs cooperatively onto free membrane sites and
//! desorbs at a rate that grows with the local tangential flow speed. The
//! difference of the two rates is the derivative of a double-well potential
//! whose minima are the homogeneous steady states; increasing the flow speed
//! past a threshold removes the high-density state, which is the mechanism
//! behind flow-driven depletion at the cell front.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct KineticsParams {
    /// Flow-coupled desorption coefficient.
    pub c1: f64,
    /// Baseline desorption rate.
    pub c2: f64,
    /// Adsorption strength.
    pub c3: f64,
    /// Cooperativity exponent, >= 1.
    pub alpha: f64,
    /// Supersaturation desorption exponent, > 1.
    pub zeta: f64,
}

impl Default for KineticsParams {
    fn default() -> Self {
        KineticsParams { c1: 50.0, c2: 0.1, c3: 5.0, alpha: 1.0, zeta: 2.0 }
    }
}

impl KineticsParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.c1 > 0.0) {
            return Err(format!("c1 must be > 0, got {}", self.c1));
        }
        if !(self.c2 >= 0.0) {
            return Err(format!("c2 must be >= 0, got {}", self.c2));
        }
        if !(self.c3 > 0.0) {
            return Err(format!("c3 must be > 0, got {}", self.c3));
        }
        if !(self.alpha >= 1.0) {
            return Err(format!("alpha must be >= 1, got {}", self.alpha));
        }
        if !(self.zeta > 1.0) {
            return Err(format!("zeta must be > 1, got {}", self.zeta));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stability {
    Stable,
    Unstable,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SteadyState {
    pub u: f64,
    pub stability: Stability,
}

/// Homogeneous steady states at a fixed flow speed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseReport {
    /// Speed above which only the depleted state survives.
    pub threshold: f64,
    pub states: Vec<SteadyState>,
}

/// Odd power extension: sign(u) * |u|^alpha. Coincides with u^alpha on
/// u >= 0 and keeps the reaction term finite and restoring if the discrete
/// solution undershoots zero.
fn pow_alpha(u: f64, alpha: f64) -> f64 {
    u.signum() * u.abs().powf(alpha)
}

/// Desorption rate; superlinear above the saturation density u = 1, with
/// value and slope continuous there.
pub fn desorption(w_speed: f64, u: f64, p: &KineticsParams) -> f64 {
    let base = p.c1 * w_speed + p.c2;
    if u <= 1.0 {
        base * u
    } else {
        base * (u.powf(p.zeta) + p.zeta - 1.0) / p.zeta
    }
}

/// Adsorption rate onto free membrane sites; zero once saturated.
pub fn adsorption(u: f64, v: f64, p: &KineticsParams) -> f64 {
    if u > 1.0 {
        0.0
    } else {
        p.c3 * pow_alpha(u, p.alpha) * (1.0 - u) * v
    }
}

/// Reaction potential W with W' = desorption - adsorption (at v = 1),
/// normalized to W(0) = 0 and continuous across u = 1.
pub fn potential(u: f64, w_speed: f64, p: &KineticsParams) -> f64 {
    let base = p.c1 * w_speed + p.c2;
    // Antiderivative of pow_alpha(s, a) * (1 - s): even/odd extension keeps
    // it C^1 across s = 0.
    let ads_anti = |s: f64| {
        let m = s.abs();
        m.powf(p.alpha + 1.0) / (p.alpha + 1.0)
            - s.signum() * m.powf(p.alpha + 2.0) / (p.alpha + 2.0)
    };
    if u <= 1.0 {
        0.5 * base * u * u - p.c3 * ads_anti(u)
    } else {
        let w1 = 0.5 * base - p.c3 * ads_anti(1.0);
        let z = p.zeta;
        w1 + base * ((u.powf(z + 1.0) - 1.0) / (z * (z + 1.0)) + (z - 1.0) * (u - 1.0) / z)
    }
}

/// W'(u) = desorption - adsorption, the right-hand side sign convention of
/// the relaxation ODE du/dt = -W'(u).
pub fn potential_prime(u: f64, w_speed: f64, p: &KineticsParams) -> f64 {
    desorption(w_speed, u, p) - adsorption(u, 1.0, p)
}

/// Steady states of the homogeneous reaction ODE at speed `w_speed`,
/// labeled by the sign of W'' at the root.
pub fn classify_phases(w_speed: f64, p: &KineticsParams) -> PhaseReport {
    let w = w_speed.abs();
    let threshold = if p.alpha == 1.0 {
        (p.c3 - p.c2) / p.c1
    } else {
        let a = p.alpha;
        p.c3 / p.c1 * (1.0 - 1.0 / a).powf(a - 1.0) / a - p.c2 / p.c1
    };

    let g = |u: f64| potential_prime(u, w, p);
    let mut roots = vec![0.0];
    if w < threshold {
        if p.alpha == 1.0 {
            roots.push((p.c3 - p.c2 - p.c1 * w) / p.c3);
        } else {
            let hump = (p.alpha - 1.0) / p.alpha;
            if g(hump) < 0.0 {
                roots.push(bisect(g, 1e-12, hump));
                let mut right = 1.0 - p.c2 / p.c3;
                if g(right) <= 0.0 {
                    right = 1.0;
                }
                roots.push(bisect(g, hump, right));
            }
        }
    }

    let states = roots
        .into_iter()
        .map(|u| {
            let h = 1e-7;
            let slope = (g(u + h) - g(u - h)) / (2.0 * h);
            let stability = if slope >= 0.0 { Stability::Stable } else { Stability::Unstable };
            SteadyState { u, stability }
        })
        .collect();
    PhaseReport { threshold, states }
}

fn bisect(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut glo = g(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo < 1e-12 {
            return mid;
        }
        let gm = g(mid);
        if (gm > 0.0) == (glo > 0.0) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Order-of-magnitude estimate of the transition-layer width between the
/// depleted and enriched phases at diffusivity `epsilon`.
pub fn interface_width(p: &KineticsParams, epsilon: f64) -> f64 {
    (epsilon / p.c3).sqrt() * (1.0 - p.c2 / p.c3).powf(-1.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn table_defaults() -> KineticsParams {
        KineticsParams::default()
    }

    #[test]
    fn desorption_pinned_values() {
        let p = table_defaults();
        assert_eq!(desorption(0.7, 0.0, &p), 0.0);
        assert!((desorption(0.0, 1.0, &p) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn desorption_smooth_at_saturation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let p = KineticsParams {
                c1: rng.random_range(1.0..100.0),
                c2: rng.random_range(0.0..1.0),
                c3: rng.random_range(0.5..10.0),
                alpha: 1.0,
                zeta: rng.random_range(1.1..4.0),
            };
            let w = rng.random_range(0.0..1.0);
            let base = p.c1 * w + p.c2;
            // Value continuity: both branch formulas at u = 1.
            let left = base * 1.0;
            let right = base * (1.0f64.powf(p.zeta) + p.zeta - 1.0) / p.zeta;
            assert!((left - right).abs() < 1e-12 * (1.0 + base));
            // One-sided finite-difference slopes agree.
            let h = 1e-6;
            let sl = (desorption(w, 1.0, &p) - desorption(w, 1.0 - h, &p)) / h;
            let sr = (desorption(w, 1.0 + h, &p) - desorption(w, 1.0, &p)) / h;
            assert!((sl - sr).abs() < 5e-6 * (1.0 + base), "slopes {sl} vs {sr}");
        }
    }

    #[test]
    fn adsorption_pinned_values() {
        let p = table_defaults();
        assert_eq!(adsorption(1.0, 1.0, &p), 0.0);
        assert_eq!(adsorption(1.2, 1.0, &p), 0.0);
        assert!((adsorption(0.5, 1.0, &p) - 1.25).abs() < 1e-15);
    }

    #[test]
    fn potential_prime_is_rate_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let p = KineticsParams {
                c1: rng.random_range(1.0..100.0),
                c2: rng.random_range(0.0..1.0),
                c3: rng.random_range(0.5..10.0),
                alpha: rng.random_range(1.0..3.0),
                zeta: rng.random_range(1.1..4.0),
            };
            let w = rng.random_range(0.0..0.5);
            let u = rng.random_range(-0.5..2.0);
            let lhs = potential_prime(u, w, &p);
            let rhs = desorption(w, u, &p) - adsorption(u, 1.0, &p);
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn potential_prime_matches_derivative_of_potential() {
        let p = table_defaults();
        let w = 0.03;
        let h = 1e-5;
        let mut u: f64 = 0.0;
        while u <= 2.0 {
            if (u - 1.0).abs() > 3.0 * h {
                let fd = (potential(u + h, w, &p) - potential(u - h, w, &p)) / (2.0 * h);
                let exact = potential_prime(u, w, &p);
                assert!(
                    (fd - exact).abs() < 1e-6 * exact.abs().max(1.0),
                    "u={u}: fd {fd} vs {exact}"
                );
            }
            u += 0.01;
        }
    }

    #[test]
    fn potential_continuous_at_saturation() {
        for zeta in [1.5, 2.0, 3.0] {
            let p = KineticsParams { zeta, ..table_defaults() };
            let below = potential(1.0 - 1e-12, 0.02, &p);
            let above = potential(1.0 + 1e-12, 0.02, &p);
            assert!((below - above).abs() < 1e-10);
        }
    }

    #[test]
    fn strong_flow_leaves_single_minimum_at_zero() {
        let p = table_defaults();
        let w = 0.12;
        assert!(p.c1 * w + p.c2 >= p.c3);
        let w0 = potential(0.0, w, &p);
        for i in 1..=2000 {
            let u = i as f64 * 1e-3;
            assert!(potential(u, w, &p) > w0, "W({u}) below W(0)");
        }
    }

    #[test]
    fn phase_report_linear_cooperativity() {
        let p = table_defaults();
        let report = classify_phases(0.0, &p);
        assert!((report.threshold - 0.098).abs() < 1e-15);
        let stable: Vec<&SteadyState> =
            report.states.iter().filter(|s| s.stability == Stability::Stable).collect();
        assert_eq!(stable.len(), 1);
        assert!((stable[0].u - 0.98).abs() < 1e-12);
        assert!(report
            .states
            .iter()
            .any(|s| s.u == 0.0 && s.stability == Stability::Unstable));

        // Above threshold only the depleted state remains, and it is stable.
        let high = classify_phases(0.12, &p);
        assert_eq!(high.states.len(), 1);
        assert_eq!(high.states[0].u, 0.0);
        assert_eq!(high.states[0].stability, Stability::Stable);
    }

    #[test]
    fn phase_report_superlinear_cooperativity() {
        let p = KineticsParams { alpha: 2.0, ..table_defaults() };
        let report = classify_phases(0.0, &p);
        assert!((report.threshold - 0.023).abs() < 1e-15, "threshold {}", report.threshold);
        let stable_upper: Vec<f64> = report
            .states
            .iter()
            .filter(|s| s.stability == Stability::Stable && s.u > 0.1)
            .map(|s| s.u)
            .collect();
        assert_eq!(stable_upper.len(), 1);
        assert!(stable_upper[0] >= 0.5 && stable_upper[0] <= 0.98);
        // Depleted state is stable for alpha > 1 at any speed.
        assert!(report
            .states
            .iter()
            .any(|s| s.u == 0.0 && s.stability == Stability::Stable));
        assert_eq!(report.states.len(), 3);
    }

    #[test]
    fn steady_states_are_roots_with_consistent_labels() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let p = KineticsParams {
                c1: rng.random_range(10.0..80.0),
                c2: rng.random_range(0.01..0.5),
                c3: rng.random_range(2.0..8.0),
                alpha: if rng.random_bool(0.5) { 1.0 } else { 2.0 },
                zeta: 2.0,
            };
            let w = rng.random_range(0.0..0.2);
            let report = classify_phases(w, &p);
            for s in &report.states {
                assert!(potential_prime(s.u, w, &p).abs() < 1e-10);
                let h = 1e-6;
                let slope =
                    (potential_prime(s.u + h, w, &p) - potential_prime(s.u - h, w, &p)) / (2.0 * h);
                if slope.abs() > 1e-8 {
                    let expect =
                        if slope > 0.0 { Stability::Stable } else { Stability::Unstable };
                    assert_eq!(s.stability, expect, "u={} w={w}", s.u);
                }
            }
        }
    }

    // Brute-force oracle: relax the reaction ODE and compare its limit with
    // the classified stable state.
    fn relax_ode(u0: f64, w: f64, p: &KineticsParams) -> f64 {
        let dt = 1e-3;
        let mut u = u0;
        let f = |u: f64| -potential_prime(u, w, p);
        for _ in 0..200_000 {
            let k1 = f(u);
            let k2 = f(u + 0.5 * dt * k1);
            let k3 = f(u + 0.5 * dt * k2);
            let k4 = f(u + dt * k3);
            u += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        u
    }

    #[test]
    fn ode_limit_matches_classification() {
        let p = table_defaults();
        for u0 in [0.1, 0.5, 1.0] {
            let u_inf = relax_ode(u0, 0.05, &p);
            assert!((u_inf - 0.48).abs() < 1e-6, "u0={u0}: {u_inf}");
        }
        for u0 in [0.3, 0.9] {
            let u_inf = relax_ode(u0, 0.12, &p);
            assert!(u_inf.abs() < 1e-6, "u0={u0}: {u_inf}");
        }
    }

    #[test]
    fn interface_width_scaling() {
        let p = table_defaults();
        let w = interface_width(&p, 0.002);
        assert!((w - 0.02061537) .abs() < 1e-7, "width {w}");
        assert!((interface_width(&p, 0.004) / w - 2.0f64.sqrt()).abs() < 1e-12);
        assert!(interface_width(&p, 1e-12) < 1e-5);
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        assert!(KineticsParams { c1: 0.0, ..table_defaults() }.validate().is_err());
        assert!(KineticsParams { c2: -0.1, ..table_defaults() }.validate().is_err());
        assert!(KineticsParams { zeta: 1.0, ..table_defaults() }.validate().is_err());
        assert!(KineticsParams { alpha: 0.5, ..table_defaults() }.validate().is_err());
        assert!(table_defaults().validate().is_ok());
    }
}
