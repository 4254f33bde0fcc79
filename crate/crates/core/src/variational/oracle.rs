//! Brute-force verification oracle for small grids: projected-gradient
//! ascent on the discretized energy, with its own dense Green matrix.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::problem::{Group, Setup};
use crate::domain::{Dir, Domain};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::field::ScalarField;

pub const ORACLE_MAX_NODES: usize = 100;

/// Dense discretization of the energy on one whole-domain group, independent
/// of the factorized solver: `G = ((4I − N)/h²)⁻¹` by a dense Cholesky
/// inverse.
#[derive(Debug, Clone)]
pub struct DenseModel {
    green: DMatrix<f64>,
    q: DVector<f64>,
    h2: f64,
    group: Group,
}

impl DenseModel {
    pub fn new(d: &Domain, q: &ScalarField, group: &Group) -> Result<DenseModel> {
        let n = d.len();
        let h2 = d.cell_area();
        let mut a = DMatrix::<f64>::zeros(n, n);
        for k in 0..n {
            a[(k, k)] = 4.0 / h2;
            for dir in Dir::ALL {
                if let Some(j) = d.neighbor(k, dir) {
                    a[(k, j)] = -1.0 / h2;
                }
            }
        }
        let green = a
            .cholesky()
            .ok_or(Error::SolveFailure { residual: f64::NAN })?
            .inverse();
        Ok(DenseModel {
            green,
            q: DVector::from_column_slice(q.values()),
            h2,
            group: group.clone(),
        })
    }

    pub fn energy(&self, w: &DVector<f64>) -> f64 {
        let g = &self.group;
        let gw = &self.green * w;
        let pen: f64 = w
            .iter()
            .map(|&x| g.lambda * g.profile.primitive(x / g.lambda))
            .sum();
        (0.5 * w.dot(&gw) + self.q.dot(w) - pen) * self.h2
    }

    /// `L²` gradient `Gω + q − f⁻¹(ω/Λ)`.
    fn gradient(&self, w: &DVector<f64>) -> DVector<f64> {
        let g = &self.group;
        let mut out = &self.green * w + &self.q;
        for (o, &x) in out.iter_mut().zip(w.iter()) {
            *o -= g.profile.inverse(x / g.lambda);
        }
        out
    }

    fn lipschitz(&self) -> f64 {
        // largest eigenvalue of G by power iteration
        let n = self.green.nrows();
        let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
        let mut lam = 0.0;
        for _ in 0..200 {
            let w = &self.green * &v;
            lam = w.norm();
            v = w / lam;
        }
        // slope of f⁻¹(·/Λ) on [0, 1], sampled
        let g = &self.group;
        let slope = (1..=1000)
            .map(|i| {
                let a = (i - 1) as f64 / 1000.0;
                let b = i as f64 / 1000.0;
                (g.profile.inverse(b) - g.profile.inverse(a)) / (b - a)
            })
            .fold(0.0f64, f64::max)
            / g.lambda;
        lam + slope
    }
}

/// Euclidean projection onto `{0 ≤ ω ≤ Λ, Σω h² = κ}`: `ω = clip(v − τ)` with
/// the shift `τ` found by bisection.
pub fn project_feasible(v: &[f64], lambda: f64, kappa: f64, h2: f64) -> Vec<f64> {
    let mass = |tau: f64| v.iter().map(|x| (x - tau).clamp(0.0, lambda)).sum::<f64>() * h2;
    let vmin = v.iter().copied().fold(f64::INFINITY, f64::min);
    let vmax = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mut lo, mut hi) = (vmin - lambda, vmax);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mass(mid) >= kappa {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau = 0.5 * (lo + hi);
    let mut w: Vec<f64> = v.iter().map(|x| (x - tau).clamp(0.0, lambda)).collect();
    // remove the bisection residue on the free nodes
    let m = w.iter().sum::<f64>() * h2;
    let free = w.iter().filter(|&&x| x > 0.0 && x < lambda).count();
    if free > 0 {
        let shift = (kappa - m) / (free as f64 * h2);
        for x in w.iter_mut() {
            if *x > 0.0 && *x < lambda {
                *x = (*x + shift).clamp(0.0, lambda);
            }
        }
    }
    w
}

/// Uniform random field in the box, projected onto the admissible class.
pub fn random_feasible(n: usize, group: &Group, h2: f64, rng: &mut impl Rng) -> ScalarField {
    let v: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..group.lambda)).collect();
    ScalarField::new(project_feasible(&v, group.lambda, group.kappa, h2))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub omega: ScalarField,
    pub energy: f64,
    /// Best energy reached from each restart.
    pub restarts: Vec<f64>,
}

pub const ORACLE_RESTARTS: usize = 10;
pub const ORACLE_STEPS: usize = 100_000;

/// Projected-gradient ascent from `restarts` random feasible starts with
/// step `1/(L (1 + k/10⁴))`; returns the best feasible iterate.
pub fn oracle_maximize(
    setup: &Setup,
    group: &Group,
    seed: u64,
    restarts: usize,
    steps: usize,
    exec: Exec,
) -> Result<OracleSolution> {
    let n = setup.domain.len();
    if n > ORACLE_MAX_NODES {
        return Err(Error::GridTooLarge(n));
    }
    let model = DenseModel::new(&setup.domain, &setup.q.interior, group)?;
    let h2 = setup.domain.cell_area();
    let step0 = 1.0 / model.lipschitz();
    let runs = exec.map(restarts.max(1), |r| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r as u64));
        let start = random_feasible(n, group, h2, &mut rng);
        let mut w = DVector::from_column_slice(start.values());
        let mut best = (model.energy(&w), w.clone());
        let mut still = 0;
        for k in 0..steps {
            let eta = step0 / (1.0 + k as f64 * 1e-4);
            let grad = model.gradient(&w);
            let trial: Vec<f64> = w.iter().zip(grad.iter()).map(|(x, g)| x + eta * g).collect();
            let next = DVector::from_vec(project_feasible(&trial, group.lambda, group.kappa, h2));
            let moved = (&next - &w).amax();
            w = next;
            let e = model.energy(&w);
            if e > best.0 {
                best = (e, w.clone());
            }
            if moved <= 1e-16 * group.lambda {
                still += 1;
                if still >= 10 {
                    break;
                }
            } else {
                still = 0;
            }
        }
        best
    });
    let restarts: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let (energy, w) = runs
        .into_iter()
        .fold((f64::NEG_INFINITY, DVector::zeros(n)), |acc, r| if r.0 > acc.0 { r } else { acc });
    Ok(OracleSolution {
        omega: ScalarField::new(w.iter().copied().collect()),
        energy,
        restarts,
    })
}
