//! Planar vector helpers and analytic ellipse geometry.

pub type Vec2 = [f64; 2];

pub fn add(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] + b[0], a[1] + b[1]]
}

pub fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

pub fn scale(a: Vec2, s: f64) -> Vec2 {
    [a[0] * s, a[1] * s]
}

pub fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub fn norm(a: Vec2) -> f64 {
    a[0].hypot(a[1])
}

pub fn dist(a: Vec2, b: Vec2) -> f64 {
    norm(sub(a, b))
}

pub fn normalize(a: Vec2) -> Vec2 {
    let n = norm(a);
    if n == 0.0 {
        [0.0, 0.0]
    } else {
        scale(a, 1.0 / n)
    }
}

/// Axis-aligned ellipse centered at the origin with semi-axes `a` (x) and `b` (y).
#[derive(Debug, Clone, Copy)]
pub struct Ellipse {
    pub a: f64,
    pub b: f64,
}

impl Ellipse {
    pub fn new(a: f64, b: f64) -> Self {
        Ellipse { a, b }
    }

    /// Point at parameter angle `t` of the standard parameterization.
    pub fn point(&self, t: f64) -> Vec2 {
        [self.a * t.cos(), self.b * t.sin()]
    }

    /// Unit tangent at parameter `t`, oriented counterclockwise.
    pub fn tangent(&self, t: f64) -> Vec2 {
        normalize([-self.a * t.sin(), self.b * t.cos()])
    }

    /// Parameter angle of the ellipse point nearest to `p` (not the polar angle of `p`).
    pub fn param_of(&self, p: Vec2) -> f64 {
        (p[1] * self.a).atan2(p[0] * self.b)
    }

    pub fn contains(&self, p: Vec2) -> bool {
        let x = p[0] / self.a;
        let y = p[1] / self.b;
        x * x + y * y < 1.0
    }

    /// Parameter of the closest boundary point to `p`.
    ///
    /// Newton iteration on g(t) = (E(t) - p) . E'(t), seeded from several
    /// angles; returns the visited root with the smallest distance.
    pub fn closest_param(&self, p: Vec2) -> f64 {
        let mut best_t = 0.0;
        let mut best_d = f64::INFINITY;
        // The scaled-angle seed is near-optimal everywhere except close to
        // the evolute; extra seeds make the search global.
        let mut seeds = vec![self.param_of(p)];
        for k in 0..8 {
            seeds.push(std::f64::consts::PI * (0.25 * k as f64));
        }
        for t0 in seeds {
            let mut t = t0;
            for _ in 0..40 {
                let (s, c) = t.sin_cos();
                let ex = self.a * c - p[0];
                let ey = self.b * s - p[1];
                let dx = -self.a * s;
                let dy = self.b * c;
                let g = ex * dx + ey * dy;
                let dg = ex * (-self.a * c) + ey * (-self.b * s) + dx * dx + dy * dy;
                if dg.abs() < 1e-300 {
                    break;
                }
                let dt = g / dg;
                t -= dt.clamp(-0.5, 0.5);
                if dt.abs() < 1e-14 {
                    break;
                }
            }
            let d = dist(self.point(t), p);
            if d < best_d {
                best_d = d;
                best_t = t;
            }
        }
        best_t
    }

    /// Closest point on the ellipse to `p`.
    pub fn project(&self, p: Vec2) -> Vec2 {
        self.point(self.closest_param(p))
    }

    /// Distance to the boundary, negative inside.
    pub fn signed_distance(&self, p: Vec2) -> f64 {
        let d = dist(self.project(p), p);
        if self.contains(p) {
            -d
        } else {
            d
        }
    }

    /// Parameterization speed |E'(t)|.
    pub fn speed(&self, t: f64) -> f64 {
        let (s, c) = t.sin_cos();
        (self.a * s).hypot(self.b * c)
    }

    /// Perimeter by composite Simpson quadrature of |E'|.
    pub fn perimeter(&self) -> f64 {
        self.arclength_table(4096).last().copied().unwrap()
    }

    /// Cumulative arclength at parameters 2*pi*i/n for i = 0..=n (n even).
    fn arclength_table(&self, n: usize) -> Vec<f64> {
        let h = 2.0 * std::f64::consts::PI / n as f64;
        let mut acc = vec![0.0; n + 1];
        for i in 0..n / 2 {
            let t0 = 2.0 * i as f64 * h;
            let piece_mid = h / 6.0 * (self.speed(t0) + 4.0 * self.speed(t0 + 0.5 * h) + self.speed(t0 + h));
            let piece_end = h / 6.0 * (self.speed(t0 + h) + 4.0 * self.speed(t0 + 1.5 * h) + self.speed(t0 + 2.0 * h));
            acc[2 * i + 1] = acc[2 * i] + piece_mid;
            acc[2 * i + 2] = acc[2 * i + 1] + piece_end;
        }
        acc
    }

    /// Parameters of `n` points equally spaced in arclength, starting at t = 0.
    pub fn sample_by_arclength(&self, n: usize) -> Vec<f64> {
        let table = self.arclength_table(4096);
        let total = *table.last().unwrap();
        let grid_h = 2.0 * std::f64::consts::PI / (table.len() - 1) as f64;
        let mut params = Vec::with_capacity(n);
        let mut j = 0usize;
        for i in 0..n {
            let target = total * i as f64 / n as f64;
            while j + 1 < table.len() && table[j + 1] < target {
                j += 1;
            }
            let seg = table[j + 1] - table[j];
            let frac = if seg > 0.0 { (target - table[j]) / seg } else { 0.0 };
            let mut t = grid_h * (j as f64 + frac);
            // Newton polish on arclength(t) = target.
            for _ in 0..4 {
                let s_here = interp_arclength(&table, grid_h, t);
                t -= (s_here - target) / self.speed(t);
            }
            params.push(t);
        }
        params
    }
}

fn interp_arclength(table: &[f64], grid_h: f64, t: f64) -> f64 {
    let pos = (t / grid_h).clamp(0.0, (table.len() - 1) as f64);
    let j = (pos as usize).min(table.len() - 2);
    let frac = pos - j as f64;
    table[j] + frac * (table[j + 1] - table[j])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_perimeter() {
        let e = Ellipse::new(1.0, 1.0);
        assert!((e.perimeter() - 2.0 * std::f64::consts::PI).abs() < 1e-10);
    }

    #[test]
    fn ellipse_perimeter_against_series() {
        // Gauss-Kummer series for a=1.2, b=0.8.
        let e = Ellipse::new(1.2, 0.8);
        let h = ((e.a - e.b) / (e.a + e.b)).powi(2);
        let mut p = 1.0 + h / 4.0;
        let mut term = h / 4.0;
        let mut n = 1.0_f64;
        while term.abs() > 1e-16 {
            n += 1.0;
            term *= h * ((2.0 * n - 3.0) / (2.0 * n)).powi(2);
            p += term;
        }
        p *= std::f64::consts::PI * (e.a + e.b);
        assert!((e.perimeter() - p).abs() < 1e-9, "{} vs {}", e.perimeter(), p);
    }

    #[test]
    fn closest_point_is_projection() {
        let e = Ellipse::new(1.2, 0.8);
        let pts = [[0.3, 0.1], [1.5, 0.4], [-0.9, -0.9], [0.0, 0.0], [0.01, 0.75]];
        for p in pts {
            let t = e.closest_param(p);
            let q = e.point(t);
            // Projection must beat a dense sampling of the boundary.
            let mut best = f64::INFINITY;
            for k in 0..5000 {
                let tt = 2.0 * std::f64::consts::PI * k as f64 / 5000.0;
                best = best.min(dist(e.point(tt), p));
            }
            assert!(dist(q, p) <= best + 1e-7, "projection not optimal for {p:?}");
        }
    }

    #[test]
    fn signed_distance_sign() {
        let e = Ellipse::new(1.2, 0.8);
        assert!(e.signed_distance([0.0, 0.0]) < 0.0);
        assert!(e.signed_distance([2.0, 0.0]) > 0.0);
        assert!((e.signed_distance([2.0, 0.0]) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn arclength_sampling_uniform() {
        let e = Ellipse::new(1.2, 0.8);
        let n = 200;
        let ts = e.sample_by_arclength(n);
        let mut lens = Vec::new();
        for i in 0..n {
            let q0 = e.point(ts[i]);
            let q1 = e.point(ts[(i + 1) % n]);
            lens.push(dist(q0, q1));
        }
        let mean: f64 = lens.iter().sum::<f64>() / n as f64;
        for l in lens {
            assert!((l - mean).abs() < 0.02 * mean);
        }
    }
}
