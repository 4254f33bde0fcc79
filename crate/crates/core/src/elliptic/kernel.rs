//! Dense quadrature of the unit-disk Green function (method of images).

use std::f64::consts::PI;

use crate::domain::{Domain, Point};
use crate::exec::Exec;

/// `G(x, y) = −(1/2π) [ln|x − y| − ln(|x| |x/|x|² − y|)]` for `x ≠ y` in the
/// unit disk. The image factor is evaluated as `1 − 2x·y + |x|²|y|²`, which
/// is symmetric and regular at `x = 0`.
#[inline]
pub fn disk_green(x: Point, y: Point) -> f64 {
    let dx = x[0] - y[0];
    let dy = x[1] - y[1];
    let direct = dx * dx + dy * dy;
    let xy = x[0] * y[0] + x[1] * y[1];
    let image = 1.0 - 2.0 * xy + (x[0] * x[0] + x[1] * x[1]) * (y[0] * y[0] + y[1] * y[1]);
    -(direct.ln() - image.ln()) / (4.0 * PI)
}

/// `∫_cell −(1/2π) ln|x − y| dy` over an `h × h` cell centred at `x`, by a
/// 16×16 tensor midpoint rule.
pub fn self_cell_integral(h: f64) -> f64 {
    const M: usize = 16;
    let w = h / M as f64;
    let mut acc = 0.0;
    for a in 0..M {
        let u = -0.5 * h + (a as f64 + 0.5) * w;
        for b in 0..M {
            let v = -0.5 * h + (b as f64 + 0.5) * w;
            acc += (u * u + v * v).ln();
        }
    }
    -acc * w * w / (4.0 * PI)
}

#[derive(Debug, Clone)]
pub struct DiskKernel {
    nodes: Vec<Point>,
    cell_area: f64,
    diagonal: Vec<f64>,
}

impl DiskKernel {
    pub fn new(d: &Domain) -> DiskKernel {
        let h = d.h();
        let singular = self_cell_integral(h);
        let cell_area = d.cell_area();
        let diagonal = d
            .nodes()
            .iter()
            .map(|x| {
                let r2 = x[0] * x[0] + x[1] * x[1];
                // image term at the cell centre: (1/2π) ln(1 − |x|²)
                singular + cell_area * (1.0 - r2).ln() / (2.0 * PI)
            })
            .collect();
        DiskKernel {
            nodes: d.nodes().to_vec(),
            cell_area,
            diagonal,
        }
    }

    /// `ψ_i = Σ_{j≠i} G(x_i, x_j) ω_j h² + ω_i ∫_cell G(x_i, y) dy`.
    pub fn apply(&self, omega: &[f64], exec: Exec) -> Vec<f64> {
        let support: Vec<(Point, f64)> = self
            .nodes
            .iter()
            .zip(omega)
            .filter(|(_, &w)| w != 0.0)
            .map(|(&p, &w)| (p, w))
            .collect();
        let mut out = vec![0.0; self.nodes.len()];
        exec.fill(&mut out, |i| {
            let x = self.nodes[i];
            let mut acc = 0.0;
            for &(y, w) in &support {
                if y != x {
                    acc += disk_green(x, y) * w;
                }
            }
            acc * self.cell_area + omega[i] * self.diagonal[i]
        });
        out
    }
}
