//! Damped bathtub fixed-point iteration with energy-ascent acceptance.
//!
//! Each step forms `u = 𝒢ω + q`, solves the multiplier problem per group,
//! builds the bathtub field `ω*` and moves to `(1 − θ)ω + θω*`. A step is
//! accepted when the energy does not drop (up to a `1e−14` relative slack);
//! otherwise `θ` is halved down to `1/64`, at which point the step is taken
//! regardless and a warning is recorded.

use std::fmt;

use super::problem::{single_group, site_groups, Controls, Group, MultiProblemSpec, ProblemSpec, Setup};
use super::{bathtub_value, energy_with_psi, multiplier_on};
use crate::error::Result;
use crate::field::ScalarField;

const ASCENT_SLACK: f64 = 1e-14;
const DAMPING_FLOOR: f64 = 1.0 / 64.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub omega: ScalarField,
    /// `𝒢ω` for the returned `omega`.
    pub psi: ScalarField,
    /// One multiplier per group (a single entry for the whole-domain class).
    pub mu: Vec<f64>,
    pub kappa: Vec<f64>,
    pub lambda: Vec<f64>,
    pub energy_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// `sup |ω − min(Λ f((u − μ)₊), Λ)|`.
    pub fixed_point_residual: f64,
    /// Worst `|mass_g − κ_g|` over groups.
    pub mass_error: f64,
    /// Per group, `#{u − μ ≥ f⁻¹(1)}`.
    pub patch_nodes: Vec<usize>,
    pub warnings: Vec<String>,
}

impl Solution {
    /// Multiplier of the first (for single problems, the only) group.
    pub fn mu(&self) -> f64 {
        self.mu[0]
    }

    pub fn energy(&self) -> f64 {
        *self.energy_trace.last().unwrap_or(&f64::NAN)
    }

    pub fn total_patch_nodes(&self) -> usize {
        self.patch_nodes.iter().sum()
    }
}

struct Step {
    target: ScalarField,
    mu: Vec<f64>,
    patch: Vec<usize>,
    degenerate: bool,
}

fn bathtub_step(setup: &Setup, groups: &[Group], psi: &ScalarField, controls: &Controls) -> Result<Step> {
    let h2 = setup.domain.cell_area();
    let u = psi.add(&setup.q.interior);
    let mut target = ScalarField::zeros(u.len());
    let mut mu = Vec::with_capacity(groups.len());
    let mut patch = Vec::with_capacity(groups.len());
    let mut degenerate = false;
    for g in groups {
        let m = multiplier_on(&u, &g.nodes, g.kappa, g.lambda, &g.profile, h2, controls.bisection_tol)?;
        degenerate |= m.degenerate;
        let threshold = g.profile.inverse(1.0);
        let mut count = 0;
        for &k in &g.nodes {
            target[k] = bathtub_value(u[k], m.mu, g.lambda, &g.profile);
            if u[k] - m.mu >= threshold {
                count += 1;
            }
        }
        mu.push(m.mu);
        patch.push(count);
    }
    Ok(Step {
        target,
        mu,
        patch,
        degenerate,
    })
}

fn group_mass(omega: &ScalarField, g: &Group, h2: f64) -> f64 {
    g.nodes.iter().map(|&k| omega[k]).sum::<f64>() * h2
}

fn mass_error(omega: &ScalarField, groups: &[Group], h2: f64) -> f64 {
    groups
        .iter()
        .map(|g| (group_mass(omega, g, h2) - g.kappa).abs() / g.kappa)
        .fold(0.0, f64::max)
}

/// Multiplicative rescale to each group's circulation, re-clip to the box,
/// and one proportional correction over the unsaturated nodes when clipping
/// moved the mass by more than `tol·κ`.
fn restore_mass(omega: &mut ScalarField, groups: &[Group], h2: f64, tol: f64) {
    for g in groups {
        let m = group_mass(omega, g, h2);
        if m > 0.0 {
            let s = g.kappa / m;
            for &k in &g.nodes {
                omega[k] = (omega[k] * s).clamp(0.0, g.lambda);
            }
        }
        let deficit = g.kappa - group_mass(omega, g, h2);
        if deficit.abs() > tol * g.kappa {
            let free: f64 = g
                .nodes
                .iter()
                .map(|&k| omega[k])
                .filter(|&w| w > 0.0 && w < g.lambda)
                .sum::<f64>()
                * h2;
            if free > 0.0 {
                let s = 1.0 + deficit / free;
                for &k in &g.nodes {
                    let w = omega[k];
                    if w > 0.0 && w < g.lambda {
                        omega[k] = (w * s).clamp(0.0, g.lambda);
                    }
                }
            }
        }
    }
}

fn lambda_scale(groups: &[Group]) -> f64 {
    groups.iter().map(|g| g.lambda).fold(0.0, f64::max)
}

/// Run the fixed-point iteration for `groups` on a prepared setup. `init`
/// warm-starts the iteration (rescaled to each group's circulation); the
/// default start is uniform on each group.
pub(crate) fn run(
    setup: &Setup,
    groups: &[Group],
    controls: &Controls,
    init: Option<&ScalarField>,
) -> Result<Solution> {
    controls.validate()?;
    let h2 = setup.domain.cell_area();
    let n = setup.domain.len();
    let mut omega = ScalarField::zeros(n);
    match init {
        Some(w) if w.len() == n => {
            for g in groups {
                for &k in &g.nodes {
                    omega[k] = w[k].max(0.0);
                }
            }
            restore_mass(&mut omega, groups, h2, controls.tol);
            // a warm start with no mass on some group falls back to uniform
            for g in groups {
                if group_mass(&omega, g, h2) == 0.0 {
                    let c = g.kappa / (g.nodes.len() as f64 * h2);
                    g.nodes.iter().for_each(|&k| omega[k] = c);
                }
            }
        }
        _ => {
            for g in groups {
                let c = g.kappa / (g.nodes.len() as f64 * h2);
                g.nodes.iter().for_each(|&k| omega[k] = c.min(g.lambda));
            }
        }
    }

    let lam = lambda_scale(groups);
    let mut psi = setup.green.apply(&omega)?;
    let mut e = energy_with_psi(&omega, &psi, &setup.q.interior, groups, h2)?;
    let mut trace = vec![e];
    let mut warnings = Vec::new();
    let mut floor_hits = 0usize;
    let mut degenerate = false;

    let mut step = bathtub_step(setup, groups, &psi, controls)?;
    let mut residual = omega.sup_distance(&step.target);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < controls.max_iters {
        degenerate |= step.degenerate;
        if residual <= controls.tol * lam && mass_error(&omega, groups, h2) <= controls.tol {
            converged = true;
            break;
        }
        iterations += 1;
        let mut theta = controls.damping;
        loop {
            let mut cand = ScalarField::new(
                omega
                    .values()
                    .iter()
                    .zip(step.target.values())
                    .map(|(w, t)| (1.0 - theta) * w + theta * t)
                    .collect(),
            );
            restore_mass(&mut cand, groups, h2, controls.tol);
            let cpsi = setup.green.apply(&cand)?;
            let ce = energy_with_psi(&cand, &cpsi, &setup.q.interior, groups, h2)?;
            let ok = ce >= e - ASCENT_SLACK * (1.0 + e.abs());
            if ok || theta <= DAMPING_FLOOR {
                if !ok {
                    floor_hits += 1;
                }
                omega = cand;
                psi = cpsi;
                e = ce;
                trace.push(e);
                break;
            }
            theta *= 0.5;
        }
        step = bathtub_step(setup, groups, &psi, controls)?;
        residual = omega.sup_distance(&step.target);
    }
    if !converged
        && residual <= controls.tol * lam
        && mass_error(&omega, groups, h2) <= controls.tol
    {
        converged = true;
    }

    if converged {
        // Replace the damped iterate by its bathtub image, which carries the
        // exact two-branch form (exact zeros off the support), when that keeps
        // every convergence criterion and the ascent property.
        let mut polished = step.target.clone();
        restore_mass(&mut polished, groups, h2, controls.tol);
        let ppsi = setup.green.apply(&polished)?;
        let pe = energy_with_psi(&polished, &ppsi, &setup.q.interior, groups, h2)?;
        let pstep = bathtub_step(setup, groups, &ppsi, controls)?;
        let pres = polished.sup_distance(&pstep.target);
        if pres <= controls.tol * lam
            && mass_error(&polished, groups, h2) <= controls.tol
            && pe >= e - ASCENT_SLACK * (1.0 + e.abs())
        {
            omega = polished;
            psi = ppsi;
            trace.push(pe);
            step = pstep;
            residual = pres;
        }
    }

    if floor_hits > 0 {
        warnings.push(format!(
            "{floor_hits} step(s) accepted at the damping floor without energy ascent"
        ));
    }
    if degenerate {
        warnings.push("multiplier bisection hit a jump in the mass map".into());
    }
    if !converged {
        warnings.push(format!(
            "not converged after {} iterations (residual {residual:e})",
            controls.max_iters
        ));
    }
    Ok(Solution {
        mass_error: groups
            .iter()
            .map(|g| (group_mass(&omega, g, h2) - g.kappa).abs())
            .fold(0.0, f64::max),
        omega,
        psi,
        mu: step.mu,
        kappa: groups.iter().map(|g| g.kappa).collect(),
        lambda: groups.iter().map(|g| g.lambda).collect(),
        energy_trace: trace,
        iterations,
        converged,
        fixed_point_residual: residual,
        patch_nodes: step.patch,
        warnings,
    })
}

/// Maximize `𝓔` over the whole-domain class `𝓜^κ`.
pub fn maximize(p: &ProblemSpec) -> Result<Solution> {
    let setup = Setup::for_problem(p)?;
    maximize_in(&setup, p, None)
}

/// [`maximize`] on an existing setup, optionally warm-started.
pub fn maximize_in(setup: &Setup, p: &ProblemSpec, init: Option<&ScalarField>) -> Result<Solution> {
    let group = single_group(setup, p)?;
    run(setup, std::slice::from_ref(&group), &p.controls, init)
}

/// Maximize `𝓟` over the multi-site class `𝓝^κ⃗`.
pub fn maximize_multi(p: &MultiProblemSpec) -> Result<Solution> {
    let setup = Setup::for_multi(p)?;
    maximize_multi_in(&setup, p, None)
}

pub fn maximize_multi_in(
    setup: &Setup,
    p: &MultiProblemSpec,
    init: Option<&ScalarField>,
) -> Result<Solution> {
    let groups = site_groups(setup, p)?;
    run(setup, &groups, &p.controls, init)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintCheck {
    pub name: String,
    pub passed: bool,
    pub worst: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeasibilityReport {
    pub checks: Vec<ConstraintCheck>,
}

impl FeasibilityReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{:<12} {}  worst={:.3e}",
                c.name,
                if c.passed { "PASS" } else { "FAIL" },
                c.worst
            )?;
        }
        Ok(())
    }
}

/// Box, mass and support constraints of the class described by `groups`.
/// `mass_tol` is relative to each group's circulation.
pub fn feasibility_check(
    omega: &ScalarField,
    groups: &[Group],
    cell_area: f64,
    mass_tol: f64,
) -> FeasibilityReport {
    let mut checks = Vec::new();
    let multi = groups.len() > 1;
    for (i, g) in groups.iter().enumerate() {
        let tag = if multi { format!("[{}]", i + 1) } else { String::new() };
        let worst_box = super::box_excess(omega, &g.nodes, g.lambda);
        checks.push(ConstraintCheck {
            name: format!("box{tag}"),
            passed: worst_box <= 1e-12 * g.lambda,
            worst: worst_box,
        });
        let dm = (group_mass(omega, g, cell_area) - g.kappa).abs();
        checks.push(ConstraintCheck {
            name: format!("mass{tag}"),
            passed: dm <= mass_tol * g.kappa,
            worst: dm,
        });
    }
    let mut inside = vec![false; omega.len()];
    groups
        .iter()
        .flat_map(|g| g.nodes.iter())
        .for_each(|&k| inside[k] = true);
    let leak = omega
        .values()
        .iter()
        .zip(&inside)
        .filter(|(_, &i)| !i)
        .fold(0.0f64, |m, (w, _)| m.max(w.abs()));
    checks.push(ConstraintCheck {
        name: "support".into(),
        passed: leak == 0.0,
        worst: leak,
    });
    FeasibilityReport { checks }
}
