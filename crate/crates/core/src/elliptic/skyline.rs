//! Profile (skyline) Cholesky factorization of the 5-point Dirichlet
//! Laplacian `4I − N` on a lattice domain.
//!
//! With row-major node ordering the lower profile of row `i` starts at its
//! south neighbour, so fill-in is confined to roughly one lattice row per row.

use crate::domain::{Dir, Domain};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Skyline {
    first: Vec<usize>,
    offset: Vec<usize>,
    data: Vec<f64>,
    /// neighbour lists used for residual checks
    neighbors: Vec<[Option<usize>; 4]>,
}

impl Skyline {
    pub fn factor(d: &Domain) -> Result<Skyline> {
        let n = d.len();
        let neighbors: Vec<[Option<usize>; 4]> = (0..n)
            .map(|k| Dir::ALL.map(|dir| d.neighbor(k, dir)))
            .collect();
        let first: Vec<usize> = neighbors
            .iter()
            .enumerate()
            .map(|(i, nb)| nb.iter().flatten().copied().filter(|&j| j < i).min().unwrap_or(i))
            .collect();
        let mut offset = Vec::with_capacity(n + 1);
        let mut total = 0usize;
        for (i, &f) in first.iter().enumerate() {
            offset.push(total);
            total += i - f + 1;
        }
        offset.push(total);

        let mut data = vec![0.0; total];
        for i in 0..n {
            data[offset[i] + (i - first[i])] = 4.0;
            for &j in neighbors[i].iter().flatten() {
                if j < i {
                    data[offset[i] + (j - first[i])] = -1.0;
                }
            }
        }

        for i in 0..n {
            let fi = first[i];
            let oi = offset[i];
            for j in fi..=i {
                let fj = first[j];
                let oj = offset[j];
                let start = fi.max(fj);
                let mut s = data[oi + (j - fi)];
                let ri = &data[oi + (start - fi)..oi + (j - fi)];
                let rj = &data[oj + (start - fj)..oj + (j - fj)];
                s -= ri.iter().zip(rj).map(|(a, b)| a * b).sum::<f64>();
                if j < i {
                    let diag = data[oj + (j - fj)];
                    data[oi + (j - fi)] = s / diag;
                } else {
                    if !(s > 0.0) {
                        return Err(Error::SolveFailure { residual: f64::NAN });
                    }
                    data[oi + (j - fi)] = s.sqrt();
                }
            }
        }
        Ok(Skyline {
            first,
            offset,
            data,
            neighbors,
        })
    }

    pub fn len(&self) -> usize {
        self.first.len()
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[self.offset[i]..self.offset[i + 1]]
    }

    fn substitute(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut y = rhs.to_vec();
        for i in 0..n {
            let row = self.row(i);
            let fi = self.first[i];
            let s: f64 = row[..i - fi].iter().zip(&y[fi..i]).map(|(a, b)| a * b).sum();
            y[i] = (y[i] - s) / row[i - fi];
        }
        for i in (0..n).rev() {
            let row = self.row(i);
            let fi = self.first[i];
            y[i] /= row[i - fi];
            let xi = y[i];
            for (yk, l) in y[fi..i].iter_mut().zip(&row[..i - fi]) {
                *yk -= l * xi;
            }
        }
        y
    }

    /// `(4I − N) x`
    pub fn apply_operator(&self, x: &[f64]) -> Vec<f64> {
        self.neighbors
            .iter()
            .enumerate()
            .map(|(i, nb)| 4.0 * x[i] - nb.iter().flatten().map(|&j| x[j]).sum::<f64>())
            .collect()
    }

    /// Normwise backward error `‖b − Ax‖∞ / (‖A‖∞ ‖x‖∞ + ‖b‖∞)`.
    pub fn backward_error(&self, x: &[f64], b: &[f64]) -> f64 {
        let ax = self.apply_operator(x);
        let r = ax.iter().zip(b).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let xn = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let bn = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let denom = 8.0 * xn + bn;
        if denom == 0.0 {
            0.0
        } else {
            r / denom
        }
    }

    /// Solve `(4I − N) x = b` with one step of iterative refinement when the
    /// backward error exceeds `tol`.
    pub fn solve(&self, b: &[f64], tol: f64) -> Result<Vec<f64>> {
        let mut x = self.substitute(b);
        let mut err = self.backward_error(&x, b);
        if err > tol {
            let ax = self.apply_operator(&x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
            let dx = self.substitute(&r);
            x.iter_mut().zip(&dx).for_each(|(x, d)| *x += d);
            err = self.backward_error(&x, b);
        }
        if !(err <= tol) {
            return Err(Error::SolveFailure { residual: err });
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DomainSpec;

    #[test]
    fn solves_against_operator() {
        let d = Domain::build(DomainSpec::UnitDisk, 0.07).unwrap();
        let sky = Skyline::factor(&d).unwrap();
        let x: Vec<f64> = (0..d.len()).map(|k| ((k * 7919) % 101) as f64 / 50.0 - 1.0).collect();
        let b = sky.apply_operator(&x);
        let y = sky.solve(&b, 1e-12).unwrap();
        let err = x.iter().zip(&y).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-10, "{err}");
    }
}
