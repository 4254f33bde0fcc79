//! Energy functionals, the mass-constraint multiplier and the maximizers.

mod oracle;
mod problem;
mod solver;

pub use oracle::{
    oracle_maximize, project_feasible, random_feasible, DenseModel, OracleSolution, ORACLE_MAX_NODES,
    ORACLE_RESTARTS, ORACLE_STEPS,
};
pub use problem::{
    in_cone, single_group, site_groups, Controls, FluxSource, Group, Harmonic, MultiProblemSpec,
    ProblemSpec, QSource, Setup, SiteSpec,
};
pub use solver::{
    feasibility_check, maximize, maximize_in, maximize_multi, maximize_multi_in,
    ConstraintCheck, FeasibilityReport, Solution,
};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::profiles::Profile;

/// `∫ω` by midpoint quadrature.
pub fn mass(omega: &ScalarField, cell_area: f64) -> f64 {
    omega.integral(cell_area)
}

fn box_violation(values: impl Iterator<Item = f64>, lambda: f64) -> f64 {
    values.fold(0.0f64, |m, w| m.max(-w).max(w - lambda))
}

/// `𝓕(ω) = Λ ∫ F(ω/Λ)` over the nodes in `nodes` (all nodes when `None`).
pub fn penalty_on(
    omega: &ScalarField,
    nodes: Option<&[usize]>,
    lambda: f64,
    f: &Profile,
    cell_area: f64,
) -> Result<f64> {
    let values: Box<dyn Iterator<Item = f64>> = match nodes {
        Some(idx) => Box::new(idx.iter().map(|&k| omega[k])),
        None => Box::new(omega.values().iter().copied()),
    };
    let mut sum = 0.0;
    let mut worst = 0.0f64;
    for w in values {
        worst = worst.max(-w).max(w - lambda);
        sum += f.primitive(w / lambda);
    }
    if worst > 1e-12 * lambda {
        return Err(Error::BoxViolation {
            upper: lambda,
            violation: worst,
        });
    }
    Ok(lambda * sum * cell_area)
}

pub fn penalty(omega: &ScalarField, lambda: f64, f: &Profile, cell_area: f64) -> Result<f64> {
    penalty_on(omega, None, lambda, f, cell_area)
}

/// `𝓔(ω) = ½⟨ω, ψ⟩ + ⟨q, ω⟩ − Σ_groups 𝓕_g(ω)` with `ψ = 𝒢ω` supplied.
pub fn energy_with_psi(
    omega: &ScalarField,
    psi: &ScalarField,
    q: &ScalarField,
    groups: &[Group],
    cell_area: f64,
) -> Result<f64> {
    let quad = 0.5 * omega.inner(psi, cell_area);
    let lin = omega.inner(q, cell_area);
    let mut pen = 0.0;
    for g in groups {
        pen += penalty_on(omega, Some(&g.nodes), g.lambda, &g.profile, cell_area)?;
    }
    Ok(quad + lin - pen)
}

/// `𝓔(ω)` on a prepared setup for the whole-domain class with box bound
/// `lambda`.
pub fn energy(setup: &Setup, omega: &ScalarField, lambda: f64, f: &Profile) -> Result<f64> {
    omega.check(&setup.domain)?;
    let psi = setup.green.apply(omega)?;
    let h2 = setup.domain.cell_area();
    Ok(0.5 * omega.inner(&psi, h2) + omega.inner(&setup.q.interior, h2)
        - penalty(omega, lambda, f, h2)?)
}

/// Pointwise `min(Λ f((u − μ)₊), Λ)`.
#[inline]
pub fn bathtub_value(u: f64, mu: f64, lambda: f64, f: &Profile) -> f64 {
    let t = u - mu;
    if t <= 0.0 {
        0.0
    } else {
        (lambda * f.eval(t)).min(lambda)
    }
}

pub fn bathtub_update(u: &ScalarField, mu: f64, lambda: f64, f: &Profile) -> ScalarField {
    u.map(|v| bathtub_value(v, mu, lambda, f))
}

/// Mass of the bathtub field restricted to `nodes`.
pub fn bathtub_mass(
    u: &ScalarField,
    nodes: &[usize],
    mu: f64,
    lambda: f64,
    f: &Profile,
    cell_area: f64,
) -> f64 {
    nodes
        .iter()
        .map(|&k| bathtub_value(u[k], mu, lambda, f))
        .sum::<f64>()
        * cell_area
}

/// Result of the multiplier bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Multiplier {
    pub mu: f64,
    /// Set when the mass map is not continuous at the root (the target mass
    /// falls in a jump), in which case `mu` is the bracket midpoint.
    pub degenerate: bool,
}

/// Find `μ` with `mass(bathtub(u, μ)) = κ` on `nodes` by bisection on the
/// non-increasing map `μ ↦ mass`, starting from the bracket
/// `[min u − f⁻¹(1) − 1, max u]`.
pub fn multiplier_on(
    u: &ScalarField,
    nodes: &[usize],
    kappa: f64,
    lambda: f64,
    f: &Profile,
    cell_area: f64,
    tol: f64,
) -> Result<Multiplier> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidKappa(kappa));
    }
    let capacity = lambda * nodes.len() as f64 * cell_area;
    if kappa > capacity * (1.0 + 1e-12) {
        return Err(Error::Infeasible { kappa, capacity });
    }
    let umin = nodes.iter().map(|&k| u[k]).fold(f64::INFINITY, f64::min);
    let umax = nodes.iter().map(|&k| u[k]).fold(f64::NEG_INFINITY, f64::max);
    let mass_at = |mu: f64| bathtub_mass(u, nodes, mu, lambda, f, cell_area);

    let mut lo = umin - f.inverse(1.0) - 1.0;
    let mut hi = umax;
    let mut widen = 1.0;
    let mut tries = 0;
    while mass_at(lo) < kappa * (1.0 - 1e-12) {
        widen *= 2.0;
        lo -= widen;
        tries += 1;
        if tries > 60 {
            return Err(Error::NoRoot);
        }
    }
    while hi - lo > tol * hi.abs().max(lo.abs()).max(1.0) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mass_at(mid) >= kappa {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    let gap = mass_at(lo) - mass_at(hi);
    let degenerate = gap > 1e-8 * kappa.max(f64::MIN_POSITIVE);
    // a jump keeps the midpoint; otherwise an end of the final bracket may
    // match the mass better, as on the flat stretch at saturation
    let mut mu = mid;
    if !degenerate {
        let err = |m: f64| (mass_at(m) - kappa).abs();
        for end in [lo, hi] {
            if err(end) < err(mu) {
                mu = end;
            }
        }
    }
    Ok(Multiplier { mu, degenerate })
}

/// Whole-field multiplier solve for `u = 𝒢ω + q`.
pub fn multiplier_solve(
    u: &ScalarField,
    kappa: f64,
    lambda: f64,
    f: &Profile,
    cell_area: f64,
) -> Result<f64> {
    let nodes: Vec<usize> = (0..u.len()).collect();
    Ok(multiplier_on(u, &nodes, kappa, lambda, f, cell_area, 1e-12)?.mu)
}

/// Worst violation of the box `[0, Λ]`.
pub fn box_excess(omega: &ScalarField, nodes: &[usize], lambda: f64) -> f64 {
    box_violation(nodes.iter().map(|&k| omega[k]), lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Domain, DomainSpec, VortexSite};
    use crate::elliptic::Backend;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p1() -> Profile {
        Profile::power(1.0).unwrap()
    }

    #[test]
    fn mass_examples() {
        let d = Domain::build(DomainSpec::unit_square(), 0.25).unwrap();
        let h2 = d.cell_area();
        assert_eq!(mass(&ScalarField::constant(9, 1.0), h2), 0.5625);
        assert_eq!(mass(&ScalarField::zeros(9), h2), 0.0);

        let d = Domain::build(DomainSpec::UnitDisk, 0.1).unwrap();
        let mask = d.ball_mask(&VortexSite::new([1.0, 0.0], 0.3));
        let mut w = ScalarField::zeros(d.len());
        mask.iter().for_each(|&k| w[k] = 1.0);
        let brute: f64 = (0..d.len())
            .filter(|&k| {
                let p = d.node(k);
                (p[0] - 1.0).hypot(p[1]) < 0.3
            })
            .map(|_| d.cell_area())
            .sum();
        assert!((mass(&w, d.cell_area()) - brute).abs() < 1e-15);
    }

    #[test]
    fn penalty_examples() {
        let h2 = 0.0625;
        assert_eq!(penalty(&ScalarField::zeros(9), 1.0, &p1(), h2).unwrap(), 0.0);
        let c = 0.3;
        let v = penalty(&ScalarField::constant(9, c), 1.0, &p1(), h2).unwrap();
        assert!((v - 0.5625 * c * c / 2.0).abs() < 1e-15);
        let bad = ScalarField::new(vec![-0.1, 0.0, 0.0]);
        assert!(matches!(
            penalty(&bad, 1.0, &p1(), h2),
            Err(Error::BoxViolation { .. })
        ));
    }

    #[test]
    fn penalty_is_convex_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = Profile::power(2.0).unwrap();
        for _ in 0..100 {
            let a = ScalarField::new((0..30).map(|_| rng.gen_range(0.0..2.0)).collect());
            let b = ScalarField::new((0..30).map(|_| rng.gen_range(0.0..2.0)).collect());
            let mid = a.add(&b).scale(0.5);
            let lhs = penalty(&mid, 2.0, &f, 0.01).unwrap();
            let rhs = 0.5 * penalty(&a, 2.0, &f, 0.01).unwrap() + 0.5 * penalty(&b, 2.0, &f, 0.01).unwrap();
            assert!(lhs <= rhs + 1e-15);
        }
    }

    #[test]
    fn bathtub_examples() {
        let u = ScalarField::new(vec![-1.0, 0.0, 0.3]);
        assert!(bathtub_update(&u, 0.5, 1.0, &p1()).values().iter().all(|&v| v == 0.0));
        assert_eq!(bathtub_value(3.0, 0.0, 2.0, &p1()), 2.0);
        let sq = Profile::power(2.0).unwrap();
        assert_eq!(bathtub_value(0.5, 0.0, 1.0, &sq), 0.25);
    }

    #[test]
    fn constant_field_multiplier() {
        let u = ScalarField::constant(9, 0.5);
        let mu = multiplier_solve(&u, 0.05625, 1.0, &p1(), 0.0625).unwrap();
        assert!((mu - 0.4).abs() < 1e-11, "{mu}");

        // saturation: κ equal to the capacity forces ω ≡ Λ
        let mu = multiplier_solve(&u, 0.5625, 1.0, &p1(), 0.0625).unwrap();
        let w = bathtub_update(&u, mu, 1.0, &p1());
        assert!(w.values().iter().all(|&v| v == 1.0));
        assert!(mu <= 0.5 - 1.0 + 1e-11);

        assert!(matches!(
            multiplier_solve(&u, 0.6, 1.0, &p1(), 0.0625),
            Err(Error::Infeasible { .. })
        ));
    }

    /// Dense scan of the bracket with 10⁶ points; the crossing is then
    /// refined by linear interpolation of the (piecewise-linear for p = 1)
    /// mass map between the two bracketing scan points.
    fn scan_multiplier(u: &ScalarField, kappa: f64, h2: f64) -> f64 {
        let f = p1();
        let nodes: Vec<usize> = (0..u.len()).collect();
        let lo = u.min() - 2.0;
        let hi = u.max();
        let n = 1_000_000;
        let mut prev = (lo, bathtub_mass(u, &nodes, lo, 1.0, &f, h2));
        for i in 1..=n {
            let mu = lo + (hi - lo) * i as f64 / n as f64;
            let m = bathtub_mass(u, &nodes, mu, 1.0, &f, h2);
            if m < kappa {
                let t = (prev.1 - kappa) / (prev.1 - m);
                return prev.0 + t * (mu - prev.0);
            }
            prev = (mu, m);
        }
        hi
    }

    #[test]
    fn multiplier_matches_dense_scan() {
        let d = Domain::build(
            DomainSpec::Rectangle {
                x0: 0.0,
                y0: 0.0,
                width: 1.0,
                height: 1.0,
            },
            1.0 / 7.0,
        )
        .unwrap();
        assert_eq!(d.len(), 36);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..3 {
            let u = ScalarField::new((0..36).map(|_| rng.gen_range(-1.0..1.0)).collect());
            let kappa = 0.05;
            let mu = multiplier_solve(&u, kappa, 1.0, &p1(), d.cell_area()).unwrap();
            let oracle = scan_multiplier(&u, kappa, d.cell_area());
            assert!((mu - oracle).abs() < 1e-8, "{mu} vs {oracle}");
        }
    }

    #[test]
    fn multiplier_decreasing_in_kappa() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = Profile::power(2.0).unwrap();
        let u = ScalarField::new((0..50).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let mus: Vec<f64> = [0.01, 0.02, 0.05, 0.1, 0.2]
            .iter()
            .map(|&k| multiplier_solve(&u, k, 1.0, &f, 0.01).unwrap())
            .collect();
        assert!(mus.windows(2).all(|w| w[1] < w[0]), "{mus:?}");
    }

    #[test]
    fn energy_on_disk_with_unit_field() {
        let h = 1.0 / 32.0;
        let setup = Setup::new(
            DomainSpec::UnitDisk,
            h,
            &QSource::Dirichlet(vec![0.0; Domain::build(DomainSpec::UnitDisk, h).unwrap().boundary().len()]),
            0.0,
            Backend::Fd,
        )
        .unwrap();
        let one = ScalarField::constant(setup.domain.len(), 1.0);
        let e = energy(&setup, &one, 1.0, &p1()).unwrap();
        let exact = std::f64::consts::PI / 16.0 - std::f64::consts::PI / 2.0;
        assert!((e - exact).abs() <= 5.0 * h, "{e} vs {exact}");
        assert_eq!(energy(&setup, &ScalarField::zeros(setup.domain.len()), 1.0, &p1()).unwrap(), 0.0);
    }

    #[test]
    fn energy_linear_term_isolated() {
        let setup = Setup::new(
            DomainSpec::unit_square(),
            0.1,
            &QSource::Analytic(Harmonic::X1),
            0.0,
            Backend::Fd,
        )
        .unwrap();
        let n = setup.domain.len();
        let w = ScalarField::from_fn(&setup.domain, |p| 0.5 + 0.4 * (3.0 * p[1]).sin());
        let eps = 1e-6;
        let scaled = w.scale(eps);
        let e = energy(&setup, &scaled, 1.0, &p1()).unwrap() / eps;
        let lin = w.inner(&setup.q.interior, setup.domain.cell_area());
        assert!((e - lin).abs() < 1e-6, "{e} {lin}");
        assert_eq!(n, 81);
    }
}
