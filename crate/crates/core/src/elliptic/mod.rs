//! Green operator of `−Δ` with zero Dirichlet data, discrete harmonic
//! extension, and the background flow built from a boundary flux.

mod kernel;
mod skyline;

pub use kernel::{disk_green, self_cell_integral, DiskKernel};
pub use skyline::Skyline;

use crate::domain::{Dir, Domain, DomainSpec, Point};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::field::ScalarField;

/// Backward-error threshold for the factorized Poisson solve.
pub const SOLVE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    /// 5-point finite differences, factorized once.
    #[default]
    Fd,
    /// Direct quadrature against the unit-disk Green function.
    DiskKernel,
}

/// Factorized Green operator for one domain. Immutable after construction and
/// safe to share between threads.
#[derive(Debug, Clone)]
pub struct GreenOperator {
    backend: Backend,
    n: usize,
    h2: f64,
    fd: Skyline,
    kernel: Option<DiskKernel>,
    exec: Exec,
}

impl GreenOperator {
    pub fn new(d: &Domain, backend: Backend) -> Result<GreenOperator> {
        let kernel = match backend {
            Backend::Fd => None,
            Backend::DiskKernel => {
                if *d.spec() != DomainSpec::UnitDisk {
                    return Err(Error::BackendMismatch);
                }
                Some(DiskKernel::new(d))
            }
        };
        Ok(GreenOperator {
            backend,
            n: d.len(),
            h2: d.cell_area(),
            fd: Skyline::factor(d)?,
            kernel,
            exec: Exec::default(),
        })
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `ψ = 𝒢ω`.
    pub fn apply(&self, omega: &ScalarField) -> Result<ScalarField> {
        if omega.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: omega.len(),
            });
        }
        match &self.kernel {
            Some(k) => Ok(ScalarField::new(k.apply(omega.values(), self.exec))),
            None => {
                let rhs: Vec<f64> = omega.values().iter().map(|w| w * self.h2).collect();
                Ok(ScalarField::new(self.fd.solve(&rhs, SOLVE_TOLERANCE)?))
            }
        }
    }

    /// Discrete harmonic field whose stencil values outside the node set are
    /// taken from `bdata` (one value per boundary sample), interpolated along
    /// the boundary at the nearest boundary point.
    pub fn dirichlet_extend(&self, d: &Domain, bdata: &[f64]) -> Result<ScalarField> {
        if bdata.len() != d.boundary().len() {
            return Err(Error::LengthMismatch {
                expected: d.boundary().len(),
                got: bdata.len(),
            });
        }
        let rhs: Vec<f64> = (0..d.len())
            .map(|k| {
                Dir::ALL
                    .iter()
                    .filter(|&&dir| d.neighbor(k, dir).is_none())
                    .map(|&dir| {
                        let s = d.boundary_param(d.stencil_point(k, dir));
                        d.interpolate_boundary(bdata, s)
                    })
                    .sum()
            })
            .collect();
        Ok(ScalarField::new(self.fd.solve(&rhs, SOLVE_TOLERANCE)?))
    }
}

/// One-shot `𝒢ω` with the requested backend.
pub fn green_apply(d: &Domain, omega: &ScalarField, backend: Backend) -> Result<ScalarField> {
    omega.check(d)?;
    GreenOperator::new(d, backend)?.apply(omega)
}

pub fn dirichlet_extend(d: &Domain, bdata: &[f64]) -> Result<ScalarField> {
    GreenOperator::new(d, Backend::Fd)?.dirichlet_extend(d, bdata)
}

/// Normal flux `g = ∇⊥q·n`, one value per boundary sample.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFlux(pub Vec<f64>);

impl BoundaryFlux {
    pub fn from_fn(d: &Domain, f: impl Fn(Point) -> f64) -> Self {
        BoundaryFlux(d.boundary().iter().map(|b| f(b.point)).collect())
    }

    /// Closed trapezoid integral `∮ g dσ` over the boundary polygon.
    pub fn circulation(&self, d: &Domain) -> f64 {
        let b = d.boundary();
        let n = b.len();
        (0..n)
            .map(|k| {
                let (s1, g1) = if k + 1 < n {
                    (b[k + 1].s, self.0[k + 1])
                } else {
                    (d.perimeter(), self.0[0])
                };
                0.5 * (self.0[k] + g1) * (s1 - b[k].s)
            })
            .sum()
    }

    pub fn compatibility_tolerance(&self, d: &Domain) -> f64 {
        let gmax = self.0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        1e-10 * d.perimeter() * gmax
    }
}

/// Harmonic background flow: interior values plus its trace on the boundary
/// samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Background {
    pub interior: ScalarField,
    pub boundary: Vec<f64>,
}

impl Background {
    pub fn shifted(&self, c: f64) -> Background {
        Background {
            interior: self.interior.map(|v| v + c),
            boundary: self.boundary.iter().map(|v| v + c).collect(),
        }
    }

    /// `max_{D̄} q` over interior nodes and boundary samples.
    pub fn max(&self) -> f64 {
        self.boundary
            .iter()
            .copied()
            .fold(self.interior.max(), f64::max)
    }

    pub fn min(&self) -> f64 {
        self.boundary
            .iter()
            .copied()
            .fold(self.interior.min(), f64::min)
    }
}

/// Boundary data `q(s) = ∫₀ˢ g dσ`, shifted to zero boundary mean.
pub fn flux_antiderivative(d: &Domain, g: &BoundaryFlux) -> Result<Vec<f64>> {
    if g.0.len() != d.boundary().len() {
        return Err(Error::LengthMismatch {
            expected: d.boundary().len(),
            got: g.0.len(),
        });
    }
    let integral = g.circulation(d);
    let tolerance = g.compatibility_tolerance(d);
    if integral.abs() > tolerance {
        return Err(Error::CompatibilityViolation {
            integral,
            tolerance,
        });
    }
    let b = d.boundary();
    let n = b.len();
    let mut q = vec![0.0; n];
    for k in 1..n {
        q[k] = q[k - 1] + 0.5 * (g.0[k - 1] + g.0[k]) * (b[k].s - b[k - 1].s);
    }
    // arclength-weighted (trapezoid) mean over the closed polygon
    let mut mean = 0.0;
    for k in 0..n {
        let (s1, q1) = if k + 1 < n {
            (b[k + 1].s, q[k + 1])
        } else {
            (d.perimeter(), q[0])
        };
        mean += 0.5 * (q[k] + q1) * (s1 - b[k].s);
    }
    mean /= d.perimeter();
    q.iter_mut().for_each(|v| *v -= mean);
    Ok(q)
}

/// `q` with `−Δq = 0` in the domain and `∇⊥q·n = g` on the boundary.
pub fn harmonic_from_flux(d: &Domain, g: &BoundaryFlux) -> Result<Background> {
    let boundary = flux_antiderivative(d, g)?;
    let interior = dirichlet_extend(d, &boundary)?;
    Ok(Background { interior, boundary })
}

/// Central-difference gradient, one-sided where a lattice neighbour is
/// missing.
pub fn gradient(d: &Domain, f: &ScalarField) -> Vec<[f64; 2]> {
    let h = d.h();
    let partial = |k: usize, plus: Dir, minus: Dir| -> f64 {
        match (d.neighbor(k, plus), d.neighbor(k, minus)) {
            (Some(a), Some(b)) => (f[a] - f[b]) / (2.0 * h),
            (Some(a), None) => (f[a] - f[k]) / h,
            (None, Some(b)) => (f[k] - f[b]) / h,
            (None, None) => 0.0,
        }
    };
    (0..d.len())
        .map(|k| [partial(k, Dir::East, Dir::West), partial(k, Dir::North, Dir::South)])
        .collect()
}

/// `∇⊥f = (∂₂f, −∂₁f)`.
pub fn perp_gradient(d: &Domain, f: &ScalarField) -> Vec<[f64; 2]> {
    gradient(d, f)
        .into_iter()
        .map(|[gx, gy]| [gy, -gx])
        .collect()
}

/// Velocity `v = ∇⊥(q + 𝒢ω)`.
pub fn velocity_field(
    d: &Domain,
    green: &GreenOperator,
    omega: &ScalarField,
    q: &ScalarField,
) -> Result<Vec<[f64; 2]>> {
    q.check(d)?;
    let psi = green.apply(omega)?.add(q);
    Ok(perp_gradient(d, &psi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn eigen_error(h: f64) -> f64 {
        let d = Domain::build(DomainSpec::unit_square(), h).unwrap();
        let omega = ScalarField::from_fn(&d, |p| {
            2.0 * PI * PI * (PI * p[0]).sin() * (PI * p[1]).sin()
        });
        let psi = green_apply(&d, &omega, Backend::Fd).unwrap();
        let exact = ScalarField::from_fn(&d, |p| (PI * p[0]).sin() * (PI * p[1]).sin());
        psi.sup_distance(&exact)
    }

    #[test]
    fn zero_in_zero_out() {
        let d = Domain::build(DomainSpec::UnitDisk, 0.1).unwrap();
        for backend in [Backend::Fd, Backend::DiskKernel] {
            let psi = green_apply(&d, &ScalarField::zeros(d.len()), backend).unwrap();
            assert!(psi.values().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn eigenfunction_second_order() {
        let e1 = eigen_error(1.0 / 16.0);
        let e2 = eigen_error(1.0 / 32.0);
        let h = 1.0 / 16.0;
        assert!(e1 <= PI.powi(4) / 12.0 * h * h * 1.1, "{e1}");
        let ratio = e1 / e2;
        assert!((3.5..=4.5).contains(&ratio), "{ratio}");
    }

    #[test]
    fn kernel_backend_rejects_rectangle() {
        let d = Domain::build(DomainSpec::unit_square(), 0.25).unwrap();
        let w = ScalarField::zeros(d.len());
        assert_eq!(
            green_apply(&d, &w, Backend::DiskKernel).unwrap_err(),
            Error::BackendMismatch
        );
    }

    #[test]
    fn length_mismatch() {
        let d = Domain::build(DomainSpec::unit_square(), 0.25).unwrap();
        assert!(matches!(
            green_apply(&d, &ScalarField::zeros(3), Backend::Fd),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn constant_and_linear_extension() {
        let d = Domain::build(DomainSpec::unit_square(), 0.05).unwrap();
        let c = vec![2.5; d.boundary().len()];
        let f = dirichlet_extend(&d, &c).unwrap();
        assert!(f.values().iter().all(|v| (v - 2.5).abs() < 1e-12));

        let x1: Vec<f64> = d.boundary().iter().map(|b| b.point[0]).collect();
        let f = dirichlet_extend(&d, &x1).unwrap();
        let exact = ScalarField::from_fn(&d, |p| p[0]);
        assert!(f.sup_distance(&exact) < 1e-12);

        let d = Domain::build(DomainSpec::UnitDisk, 0.1).unwrap();
        let c = vec![-1.0; d.boundary().len()];
        let f = dirichlet_extend(&d, &c).unwrap();
        assert!(f.values().iter().all(|v| (v + 1.0).abs() < 1e-12));
    }

    #[test]
    fn disk_extension_first_order() {
        let err = |h: f64| {
            let d = Domain::build(DomainSpec::UnitDisk, h).unwrap();
            let b: Vec<f64> = d
                .boundary()
                .iter()
                .map(|s| (2.0 * s.point[1].atan2(s.point[0])).cos())
                .collect();
            let f = dirichlet_extend(&d, &b).unwrap();
            let exact = ScalarField::from_fn(&d, |p| p[0] * p[0] - p[1] * p[1]);
            f.sup_distance(&exact)
        };
        let h = 1.0 / 64.0;
        let e = err(h);
        assert!(e <= 2.0 * h, "{e}");
        assert!(err(h / 2.0) < e);
    }

    #[test]
    fn flux_orientation() {
        let d = Domain::build(DomainSpec::UnitDisk, 1.0 / 32.0).unwrap();
        let g = BoundaryFlux::from_fn(&d, |p| -p[1]);
        let q = harmonic_from_flux(&d, &g).unwrap();
        for (b, v) in d.boundary().iter().zip(&q.boundary) {
            assert!((v - b.point[0]).abs() < 1e-3, "{v} {:?}", b.point);
        }
        let exact = ScalarField::from_fn(&d, |p| p[0]);
        assert!(q.interior.sup_distance(&exact) < 2.0 / 32.0);

        let zero = harmonic_from_flux(&d, &BoundaryFlux(vec![0.0; d.boundary().len()])).unwrap();
        assert!(zero.interior.sup_norm() == 0.0);

        let one = BoundaryFlux(vec![1.0; d.boundary().len()]);
        assert!(matches!(
            harmonic_from_flux(&d, &one),
            Err(Error::CompatibilityViolation { .. })
        ));
    }

    #[test]
    fn velocity_of_linear_background() {
        let d = Domain::build(DomainSpec::unit_square(), 0.1).unwrap();
        let g = GreenOperator::new(&d, Backend::Fd).unwrap();
        let q = ScalarField::from_fn(&d, |p| p[0]);
        let v = velocity_field(&d, &g, &ScalarField::zeros(d.len()), &q).unwrap();
        for u in &v {
            assert!(u[0].abs() < 1e-12 && (u[1] + 1.0).abs() < 1e-12);
        }
        let c = ScalarField::constant(d.len(), 3.0);
        let v = velocity_field(&d, &g, &ScalarField::zeros(d.len()), &c).unwrap();
        assert!(v.iter().all(|u| u[0] == 0.0 && u[1] == 0.0));
    }
}
