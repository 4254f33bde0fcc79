//! Weak form of the steady vorticity equation, tested against tensor bump
//! functions on dyadic subrectangles.

use crate::domain::{Domain, DomainSpec, Point};
use crate::elliptic::perp_gradient;
use crate::field::ScalarField;

/// Standard mollifier profile on `(−1, 1)` and its derivative.
fn bump(t: f64) -> (f64, f64) {
    if t.abs() >= 1.0 {
        return (0.0, 0.0);
    }
    let a = 1.0 - t * t;
    let b = (-1.0 / a).exp();
    (b, b * (-2.0 * t / (a * a)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestFunction {
    pub center: Point,
    pub half_width: [f64; 2],
    /// `1 / max|∇(b ⊗ b)|`, so the scaled test function has `‖∇φ‖∞ = 1`.
    scale: f64,
}

/// `max|∇(b ⊗ b)|` for a cell with the given half widths, on a 199×199 sample.
fn gradient_max(half_width: [f64; 2]) -> f64 {
    let m = 200;
    let mut gmax = 0.0f64;
    for i in 1..m {
        let s = -1.0 + 2.0 * i as f64 / m as f64;
        let (bs, ds) = bump(s);
        for j in 1..m {
            let t = -1.0 + 2.0 * j as f64 / m as f64;
            let (bt, dt) = bump(t);
            let gx = ds * bt / half_width[0];
            let gy = bs * dt / half_width[1];
            gmax = gmax.max(gx.hypot(gy));
        }
    }
    gmax
}

impl TestFunction {
    fn new(lo: Point, hi: Point, gmax: f64) -> TestFunction {
        TestFunction {
            center: [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])],
            half_width: [0.5 * (hi[0] - lo[0]), 0.5 * (hi[1] - lo[1])],
            scale: 1.0 / gmax,
        }
    }

    pub fn eval(&self, p: Point) -> f64 {
        let s = (p[0] - self.center[0]) / self.half_width[0];
        let t = (p[1] - self.center[1]) / self.half_width[1];
        self.scale * bump(s).0 * bump(t).0
    }

    pub fn contains(&self, p: Point) -> bool {
        (p[0] - self.center[0]).abs() < self.half_width[0]
            && (p[1] - self.center[1]).abs() < self.half_width[1]
    }

    /// Central-difference gradient with step `h`.
    pub fn gradient(&self, p: Point, h: f64) -> [f64; 2] {
        [
            (self.eval([p[0] + h, p[1]]) - self.eval([p[0] - h, p[1]])) / (2.0 * h),
            (self.eval([p[0], p[1] + h]) - self.eval([p[0], p[1] - h])) / (2.0 * h),
        ]
    }
}

fn bounding_box(spec: &DomainSpec) -> (Point, Point) {
    match *spec {
        DomainSpec::Rectangle {
            x0,
            y0,
            width,
            height,
        } => ([x0, y0], [x0 + width, y0 + height]),
        DomainSpec::UnitDisk => ([-1.0, -1.0], [1.0, 1.0]),
    }
}

fn closed_cell_inside(spec: &DomainSpec, lo: Point, hi: Point) -> bool {
    match *spec {
        DomainSpec::UnitDisk => [lo, hi, [lo[0], hi[1]], [hi[0], lo[1]]]
            .iter()
            .all(|c| c[0] * c[0] + c[1] * c[1] < 1.0),
        DomainSpec::Rectangle { .. } => {
            spec.contains(lo) && spec.contains(hi)
        }
    }
}

/// The first `n_test` subrectangles of the bounding box, by level
/// (`2^ℓ × 2^ℓ` cells at level `ℓ`) and then row-major, whose closure lies in
/// the open domain.
pub fn dyadic_family(d: &Domain, n_test: usize) -> Vec<TestFunction> {
    let (lo, hi) = bounding_box(d.spec());
    let mut out = Vec::new();
    for level in 0..12u32 {
        let m = 1usize << level;
        let wx = (hi[0] - lo[0]) / m as f64;
        let wy = (hi[1] - lo[1]) / m as f64;
        let mut gmax = None;
        for j in 0..m {
            for i in 0..m {
                if out.len() == n_test {
                    return out;
                }
                let a = [lo[0] + i as f64 * wx, lo[1] + j as f64 * wy];
                let b = [a[0] + wx, a[1] + wy];
                if closed_cell_inside(d.spec(), a, b) {
                    let g = *gmax.get_or_insert_with(|| gradient_max([0.5 * wx, 0.5 * wy]));
                    out.push(TestFunction::new(a, b, g));
                }
            }
        }
    }
    out
}

/// Number of family members on levels `0..=max_level`.
pub fn family_size_through_level(d: &Domain, max_level: u32) -> usize {
    let (lo, hi) = bounding_box(d.spec());
    (0..=max_level)
        .map(|level| {
            let m = 1usize << level;
            let wx = (hi[0] - lo[0]) / m as f64;
            let wy = (hi[1] - lo[1]) / m as f64;
            (0..m * m)
                .filter(|&c| {
                    let (i, j) = (c % m, c / m);
                    let a = [lo[0] + i as f64 * wx, lo[1] + j as f64 * wy];
                    closed_cell_inside(d.spec(), a, [a[0] + wx, a[1] + wy])
                })
                .count()
        })
        .sum()
}

/// `max_φ |∫ ω ∇⊥ψ · ∇φ dx|` over the dyadic family, where `ψ = 𝒢ω + q` is
/// supplied as node values.
pub fn weak_residual_of(d: &Domain, omega: &ScalarField, psi: &ScalarField, n_test: usize) -> f64 {
    if omega.values().iter().all(|&w| w == 0.0) {
        return 0.0;
    }
    let v = perp_gradient(d, psi);
    let h = d.h();
    let h2 = d.cell_area();
    dyadic_family(d, n_test)
        .iter()
        .map(|phi| {
            let mut acc = 0.0;
            for (k, &p) in d.nodes().iter().enumerate() {
                let w = omega[k];
                if w == 0.0 {
                    continue;
                }
                // the stencil of the central difference must reach the cell
                let near = (p[0] - phi.center[0]).abs() < phi.half_width[0] + h
                    && (p[1] - phi.center[1]).abs() < phi.half_width[1] + h;
                if !near {
                    continue;
                }
                let g = phi.gradient(p, h);
                acc += w * (v[k][0] * g[0] + v[k][1] * g[1]);
            }
            (acc * h2).abs()
        })
        .fold(0.0, f64::max)
}
