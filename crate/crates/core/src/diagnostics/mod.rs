//! Checks run on computed solutions: weak-form residual, support
//! localization, multiplier and penalty asymptotics, and κ-sweep tables.

mod weak;

pub use weak::{dyadic_family, family_size_through_level, weak_residual_of, TestFunction};

use std::fmt;

use crate::domain::{dist, Domain, Point};
use crate::elliptic::Background;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::field::ScalarField;
use crate::variational::{
    maximize_in, maximize_multi_in, penalty_on, single_group, site_groups, Group, MultiProblemSpec,
    ProblemSpec, Setup, Solution,
};

pub const DEFAULT_THRESHOLD_FRACTION: f64 = 1e-6;
pub const DEFAULT_N_TEST: usize = 512;
/// Relative tolerance, against `osc(q)`, for membership in the maximum set.
pub const MAX_SET_TOLERANCE: f64 = 1e-9;

/// Weak-form residual of `ω` with stream function `𝒢ω + q`.
pub fn weak_residual(setup: &Setup, omega: &ScalarField, n_test: usize) -> Result<f64> {
    if n_test == 0 {
        return Err(Error::InvalidProblem("n_test must be at least 1".into()));
    }
    omega.check(&setup.domain)?;
    let psi = setup.green.apply(omega)?.add(&setup.q.interior);
    Ok(weak_residual_of(&setup.domain, omega, &psi, n_test))
}

/// Boundary samples and interior nodes where `q ≥ max q − 10⁻⁹·osc(q)`.
pub fn maximum_set(d: &Domain, q: &Background) -> Vec<Point> {
    let (max, min) = (q.max(), q.min());
    let cut = max - MAX_SET_TOLERANCE * (max - min);
    let mut out: Vec<Point> = d
        .boundary()
        .iter()
        .zip(&q.boundary)
        .filter(|(_, &v)| v >= cut)
        .map(|(b, _)| b.point)
        .collect();
    out.extend(
        d.nodes()
            .iter()
            .zip(q.interior.values())
            .filter(|(_, &v)| v >= cut)
            .map(|(p, _)| *p),
    );
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupportMetrics {
    pub node_count: usize,
    pub diameter: f64,
    /// `None` when the support is empty.
    pub dist_to_s: Option<f64>,
}

impl SupportMetrics {
    pub fn is_empty(&self) -> bool {
        self.node_count == 0
    }
}

/// Nodes of `nodes` (all nodes when `None`) with `ω > fraction · max ω`.
pub fn support_nodes(omega: &ScalarField, nodes: Option<&[usize]>, fraction: f64) -> Vec<usize> {
    let all: Vec<usize>;
    let nodes = match nodes {
        Some(n) => n,
        None => {
            all = (0..omega.len()).collect();
            &all
        }
    };
    let max = nodes.iter().map(|&k| omega[k]).fold(0.0f64, f64::max);
    if max <= 0.0 {
        return Vec::new();
    }
    nodes
        .iter()
        .copied()
        .filter(|&k| omega[k] > fraction * max)
        .collect()
}

fn metrics_of(d: &Domain, support: &[usize], s_set: &[Point]) -> SupportMetrics {
    if support.is_empty() {
        return SupportMetrics {
            node_count: 0,
            diameter: 0.0,
            dist_to_s: None,
        };
    }
    let pts: Vec<Point> = support.iter().map(|&k| d.node(k)).collect();
    let mut diameter = 0.0f64;
    for (i, a) in pts.iter().enumerate() {
        for b in &pts[i + 1..] {
            diameter = diameter.max(dist(*a, *b));
        }
    }
    let dist_to_s = if s_set.is_empty() {
        None
    } else {
        Some(
            pts.iter()
                .map(|p| s_set.iter().map(|s| dist(*p, *s)).fold(f64::INFINITY, f64::min))
                .fold(0.0, f64::max),
        )
    };
    SupportMetrics {
        node_count: pts.len(),
        diameter,
        dist_to_s,
    }
}

fn check_fraction(fraction: f64) -> Result<()> {
    if fraction > 0.0 && fraction < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidProblem(format!(
            "threshold fraction must lie in (0, 1), got {fraction}"
        )))
    }
}

/// Diameter of the numerical support and its distance to `s_set`.
pub fn support_metrics(
    d: &Domain,
    omega: &ScalarField,
    s_set: &[Point],
    threshold_fraction: f64,
) -> Result<SupportMetrics> {
    check_fraction(threshold_fraction)?;
    omega.check(d)?;
    Ok(metrics_of(
        d,
        &support_nodes(omega, None, threshold_fraction),
        s_set,
    ))
}

/// `|⟨ω, ψ + q − μ⟩|` with `ψ = 𝒢ω`.
pub fn pairing_term(
    omega: &ScalarField,
    psi: &ScalarField,
    q: &ScalarField,
    mu: f64,
    cell_area: f64,
) -> f64 {
    pairing_on(omega, psi, q, mu, cell_area, None)
}

fn pairing_on(
    omega: &ScalarField,
    psi: &ScalarField,
    q: &ScalarField,
    mu: f64,
    cell_area: f64,
    nodes: Option<&[usize]>,
) -> f64 {
    let term = |k: usize| omega[k] * (psi[k] + q[k] - mu);
    let s: f64 = match nodes {
        Some(n) => n.iter().map(|&k| term(k)).sum(),
        None => (0..omega.len()).map(term).sum(),
    };
    (s * cell_area).abs()
}

/// Worst violation of the three-branch optimality conditions of a maximizer
/// with multiplier `mu[i]` on each group, where `t = 𝒢ω + q − μ`:
/// `t ≥ f⁻¹(1)` where `ω = Λ`, `t = f⁻¹(ω/Λ)` where `0 < ω < Λ`, and
/// `t ≤ f⁻¹(0)` where `ω = 0`.
pub fn first_order_defect(setup: &Setup, omega: &ScalarField, groups: &[Group], mu: &[f64]) -> Result<f64> {
    if mu.len() != groups.len() {
        return Err(Error::LengthMismatch {
            expected: groups.len(),
            got: mu.len(),
        });
    }
    omega.check(&setup.domain)?;
    let u = setup.green.apply(omega)?.add(&setup.q.interior);
    let mut worst = 0.0f64;
    for (g, &m) in groups.iter().zip(mu) {
        let top = g.profile.inverse(1.0);
        let bottom = g.profile.inverse(0.0);
        for &k in &g.nodes {
            let t = u[k] - m;
            let w = omega[k];
            let v = if w >= g.lambda {
                (top - t).max(0.0)
            } else if w <= 0.0 {
                (t - bottom).max(0.0)
            } else {
                (t - g.profile.inverse(w / g.lambda)).abs()
            };
            worst = worst.max(v);
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub kappa: f64,
    pub mu: f64,
    pub qmax_minus_mu: f64,
    pub supp_diameter: f64,
    /// `NaN` when the support is empty.
    pub supp_dist_to_s: f64,
    pub patch_nodes: usize,
    pub penalty_over_kappa: f64,
    pub pairing_over_kappa: f64,
    pub weak_residual: f64,
    pub energy: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SweepRow {
    pub fn is_finite(&self) -> bool {
        [
            self.kappa,
            self.mu,
            self.qmax_minus_mu,
            self.supp_diameter,
            self.supp_dist_to_s,
            self.penalty_over_kappa,
            self.pairing_over_kappa,
            self.weak_residual,
            self.energy,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub threshold_fraction: f64,
    pub n_test: usize,
    /// Start each solve from the previous row's field. Rows are solved
    /// concurrently only when this is off.
    pub warm_start: bool,
    pub exec: Exec,
    /// Explicit maximum set of `q`, overriding detection.
    pub argmax: Option<Vec<Point>>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            threshold_fraction: DEFAULT_THRESHOLD_FRACTION,
            n_test: DEFAULT_N_TEST,
            warm_start: true,
            exec: Exec::Sequential,
            argmax: None,
        }
    }
}

/// Trend proxies for the small-circulation limit, over converged rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrendFlags {
    pub qmax_minus_mu: bool,
    pub penalty_over_kappa: bool,
    pub pairing_over_kappa: bool,
    pub supp_dist_to_s: bool,
    /// `patch_nodes = 0` on the final half of the list.
    pub patch_free_tail: bool,
}

impl TrendFlags {
    pub fn all(&self) -> bool {
        self.qmax_minus_mu
            && self.penalty_over_kappa
            && self.pairing_over_kappa
            && self.supp_dist_to_s
            && self.patch_free_tail
    }

    pub fn named(&self) -> [(&'static str, bool); 5] {
        [
            ("qmax_minus_mu decreasing", self.qmax_minus_mu),
            ("penalty_over_kappa decreasing", self.penalty_over_kappa),
            ("pairing_over_kappa decreasing", self.pairing_over_kappa),
            ("supp_dist_to_S decreasing", self.supp_dist_to_s),
            ("patch_nodes zero on final half", self.patch_free_tail),
        ]
    }

    /// Flags for `rows`, listed in sweep order; `None` entries failed.
    pub fn compute(rows: &[Option<&SweepRow>]) -> TrendFlags {
        let ok: Vec<&SweepRow> = rows.iter().flatten().filter(|r| r.converged).copied().collect();
        let decreasing = |col: fn(&SweepRow) -> f64| ok.windows(2).all(|w| col(w[1]) < col(w[0]));
        // the final ⌈n/2⌉ rows; a single row is a vacuous trend
        let tail_start = if rows.len() < 2 { rows.len() } else { rows.len() / 2 };
        TrendFlags {
            qmax_minus_mu: decreasing(|r| r.qmax_minus_mu),
            penalty_over_kappa: decreasing(|r| r.penalty_over_kappa),
            pairing_over_kappa: decreasing(|r| r.pairing_over_kappa),
            supp_dist_to_s: decreasing(|r| r.supp_dist_to_s),
            patch_free_tail: rows[tail_start..]
                .iter()
                .flatten()
                .filter(|r| r.converged)
                .all(|r| r.patch_nodes == 0),
        }
    }
}

impl fmt::Display for TrendFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, ok) in self.named() {
            writeln!(f, "{:<32} {}", name, if ok { "PASS" } else { "FAIL" })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SweepRecord {
    pub row: SweepRow,
    pub solution: Solution,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub kappas: Vec<f64>,
    pub rows: Vec<Result<SweepRecord>>,
    pub trends: TrendFlags,
}

impl SweepReport {
    pub fn converged_rows(&self) -> Vec<&SweepRow> {
        self.rows
            .iter()
            .flatten()
            .map(|r| &r.row)
            .filter(|r| r.converged)
            .collect()
    }

    pub fn all_ok(&self) -> bool {
        self.rows.iter().all(|r| matches!(r, Ok(rec) if rec.row.converged)) && self.trends.all()
    }
}

fn check_decreasing(list: &[f64], what: &str) -> Result<()> {
    if list.is_empty() {
        return Err(Error::InvalidProblem(format!("{what} list is empty")));
    }
    if list.iter().any(|k| !(*k > 0.0) || !k.is_finite()) {
        return Err(Error::InvalidProblem(format!("{what} values must be positive")));
    }
    if list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidProblem(format!(
            "{what} list must be strictly decreasing"
        )));
    }
    Ok(())
}

struct RowContext<'a> {
    setup: &'a Setup,
    s_set: &'a [Point],
    qmax: f64,
    fraction: f64,
}

fn row_for(ctx: &RowContext, sol: &Solution, i: usize, g: &Group, weak: f64) -> Result<SweepRow> {
    let d = &ctx.setup.domain;
    let h2 = d.cell_area();
    let support = support_nodes(&sol.omega, Some(&g.nodes), ctx.fraction);
    let m = metrics_of(d, &support, ctx.s_set);
    let mu = sol.mu[i];
    let pen = penalty_on(&sol.omega, Some(&g.nodes), g.lambda, &g.profile, h2)?;
    let pairing = pairing_on(&sol.omega, &sol.psi, &ctx.setup.q.interior, mu, h2, Some(&g.nodes));
    Ok(SweepRow {
        kappa: g.kappa,
        mu,
        qmax_minus_mu: ctx.qmax - mu,
        supp_diameter: m.diameter,
        supp_dist_to_s: m.dist_to_s.unwrap_or(f64::NAN),
        patch_nodes: sol.patch_nodes[i],
        penalty_over_kappa: pen / g.kappa,
        pairing_over_kappa: pairing / g.kappa,
        weak_residual: weak,
        energy: sol.energy(),
        iterations: sol.iterations,
        converged: sol.converged,
    })
}

/// One solve and one [`SweepRow`] per circulation in `kappas`.
pub fn kappa_sweep(
    setup: &Setup,
    template: &ProblemSpec,
    kappas: &[f64],
    opts: &SweepOptions,
) -> Result<SweepReport> {
    check_decreasing(kappas, "kappa")?;
    check_fraction(opts.threshold_fraction)?;
    let s_set = opts
        .argmax
        .clone()
        .unwrap_or_else(|| maximum_set(&setup.domain, &setup.q));
    let qmax = match &opts.argmax {
        Some(pts) if !pts.is_empty() => pts.iter().map(|&p| setup.q_at(p)).fold(f64::NEG_INFINITY, f64::max),
        _ => setup.q.max(),
    };
    let ctx = RowContext {
        setup,
        s_set: &s_set,
        qmax,
        fraction: opts.threshold_fraction,
    };
    let solve_one = |kappa: f64, init: Option<&ScalarField>| -> Result<SweepRecord> {
        let mut p = template.clone();
        p.kappa = kappa;
        let g = single_group(setup, &p)?;
        let sol = maximize_in(setup, &p, init)?;
        let weak = weak_residual_of(&setup.domain, &sol.omega, &sol.psi.add(&setup.q.interior), opts.n_test);
        let row = row_for(&ctx, &sol, 0, &g, weak)?;
        Ok(SweepRecord { row, solution: sol })
    };
    let rows: Vec<Result<SweepRecord>> = if opts.warm_start {
        let mut prev: Option<ScalarField> = None;
        kappas
            .iter()
            .map(|&k| {
                let r = solve_one(k, prev.as_ref());
                if let Ok(rec) = &r {
                    prev = Some(rec.solution.omega.clone());
                }
                r
            })
            .collect()
    } else {
        opts.exec.map(kappas.len(), |i| solve_one(kappas[i], None))
    };
    let view: Vec<Option<&SweepRow>> = rows.iter().map(|r| r.as_ref().ok().map(|r| &r.row)).collect();
    let trends = TrendFlags::compute(&view);
    Ok(SweepReport {
        kappas: kappas.to_vec(),
        rows,
        trends,
    })
}

#[derive(Debug, Clone)]
pub struct MultiSweepRecord {
    /// One row per site.
    pub site_rows: Vec<SweepRow>,
    pub solution: Solution,
}

#[derive(Debug, Clone)]
pub struct MultiSweepReport {
    pub scales: Vec<f64>,
    pub rows: Vec<Result<MultiSweepRecord>>,
    /// One set of flags per site.
    pub trends: Vec<TrendFlags>,
}

impl MultiSweepReport {
    /// Rows of site `i` in sweep order; `None` where the solve failed.
    pub fn site_rows(&self, i: usize) -> Vec<Option<&SweepRow>> {
        self.rows
            .iter()
            .map(|r| r.as_ref().ok().map(|rec| &rec.site_rows[i]))
            .collect()
    }

    pub fn all_ok(&self) -> bool {
        self.rows
            .iter()
            .all(|r| matches!(r, Ok(rec) if rec.solution.converged))
            && self.trends.iter().all(|t| t.all())
    }
}

/// Sweep of the multi-site problem over `template.scaled(s)` for each scale.
/// Per site, the maximum set is the site centre and `qmax` is `q` there.
pub fn sweep_multi(
    setup: &Setup,
    template: &MultiProblemSpec,
    scales: &[f64],
    opts: &SweepOptions,
) -> Result<MultiSweepReport> {
    check_decreasing(scales, "kappa scale")?;
    check_fraction(opts.threshold_fraction)?;
    let centers: Vec<Point> = template.sites.iter().map(|s| s.site.center).collect();
    let solve_one = |scale: f64, init: Option<&ScalarField>| -> Result<MultiSweepRecord> {
        let p = template.scaled(scale);
        let groups = site_groups(setup, &p)?;
        let sol = maximize_multi_in(setup, &p, init)?;
        let weak = weak_residual_of(&setup.domain, &sol.omega, &sol.psi.add(&setup.q.interior), opts.n_test);
        let site_rows = groups
            .iter()
            .enumerate()
            .map(|(i, g)| {
                let s_set = [centers[i]];
                let ctx = RowContext {
                    setup,
                    s_set: &s_set,
                    qmax: setup.q_at(centers[i]),
                    fraction: opts.threshold_fraction,
                };
                row_for(&ctx, &sol, i, g, weak)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MultiSweepRecord {
            site_rows,
            solution: sol,
        })
    };
    let rows: Vec<Result<MultiSweepRecord>> = if opts.warm_start {
        let mut prev: Option<ScalarField> = None;
        scales
            .iter()
            .map(|&s| {
                let r = solve_one(s, prev.as_ref());
                if let Ok(rec) = &r {
                    prev = Some(rec.solution.omega.clone());
                }
                r
            })
            .collect()
    } else {
        opts.exec.map(scales.len(), |i| solve_one(scales[i], None))
    };
    let mut report = MultiSweepReport {
        scales: scales.to_vec(),
        rows,
        trends: Vec::new(),
    };
    report.trends = (0..template.sites.len())
        .map(|i| TrendFlags::compute(&report.site_rows(i)))
        .collect();
    Ok(report)
}
