use crate::domain::{dist, Domain, DomainSpec, Point, VortexSite};
use crate::elliptic::{self, Background, Backend, BoundaryFlux, GreenOperator};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::profiles::{Profile, StrengthSchedule};

/// Harmonic polynomials available as closed-form backgrounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Harmonic {
    X1,
    X2,
    /// `x1² − x2²`
    X1SqMinusX2Sq,
    /// `2 x1 x2`
    TwoX1X2,
}

impl Harmonic {
    pub fn eval(self, p: Point) -> f64 {
        match self {
            Harmonic::X1 => p[0],
            Harmonic::X2 => p[1],
            Harmonic::X1SqMinusX2Sq => p[0] * p[0] - p[1] * p[1],
            Harmonic::TwoX1X2 => 2.0 * p[0] * p[1],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Harmonic::X1 => "x1",
            Harmonic::X2 => "x2",
            Harmonic::X1SqMinusX2Sq => "x1^2-x2^2",
            Harmonic::TwoX1X2 => "2x1x2",
        }
    }

    pub fn parse(s: &str) -> Option<Harmonic> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        match compact.as_str() {
            "x1" => Some(Harmonic::X1),
            "x2" => Some(Harmonic::X2),
            "x1^2-x2^2" | "x1²-x2²" => Some(Harmonic::X1SqMinusX2Sq),
            "2x1x2" | "2*x1*x2" => Some(Harmonic::TwoX1X2),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FluxSource {
    /// One value per boundary sample.
    Values(Vec<f64>),
    /// `g(θ) = Σ_k cos[k−1]·cos kθ + sin[k−1]·sin kθ`, `θ` the polar angle
    /// about the domain centre.
    Fourier { cos: Vec<f64>, sin: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum QSource {
    Flux(FluxSource),
    Analytic(Harmonic),
    /// Dirichlet data, one value per boundary sample.
    Dirichlet(Vec<f64>),
}

fn domain_center(spec: &DomainSpec) -> Point {
    match *spec {
        DomainSpec::Rectangle {
            x0,
            y0,
            width,
            height,
        } => [x0 + 0.5 * width, y0 + 0.5 * height],
        DomainSpec::UnitDisk => [0.0, 0.0],
    }
}

impl FluxSource {
    pub fn sample(&self, d: &Domain) -> Result<BoundaryFlux> {
        match self {
            FluxSource::Values(v) => {
                if v.len() != d.boundary().len() {
                    return Err(Error::LengthMismatch {
                        expected: d.boundary().len(),
                        got: v.len(),
                    });
                }
                Ok(BoundaryFlux(v.clone()))
            }
            FluxSource::Fourier { cos, sin } => {
                let c = domain_center(d.spec());
                Ok(BoundaryFlux::from_fn(d, |p| {
                    let theta = (p[1] - c[1]).atan2(p[0] - c[0]);
                    let a: f64 = cos
                        .iter()
                        .enumerate()
                        .map(|(k, a)| a * ((k + 1) as f64 * theta).cos())
                        .sum();
                    let b: f64 = sin
                        .iter()
                        .enumerate()
                        .map(|(k, b)| b * ((k + 1) as f64 * theta).sin())
                        .sum();
                    a + b
                }))
            }
        }
    }
}

/// Iteration controls of the damped fixed-point solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Controls {
    pub max_iters: usize,
    /// Initial damping `θ₀`.
    pub damping: f64,
    /// Fixed-point tolerance, relative to `Λ(κ)`.
    pub tol: f64,
    /// Bisection tolerance on the multiplier.
    pub bisection_tol: f64,
}

impl Default for Controls {
    fn default() -> Self {
        Controls {
            max_iters: 500,
            damping: 0.5,
            tol: 1e-8,
            bisection_tol: 1e-12,
        }
    }
}

impl Controls {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidProblem("max_iters must be at least 1".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidProblem(format!(
                "damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        if !(self.tol > 0.0) || !(self.bisection_tol > 0.0) {
            return Err(Error::InvalidProblem("tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub domain: DomainSpec,
    pub h: f64,
    pub q: QSource,
    /// Constant added to the background flow.
    pub q_offset: f64,
    pub profile: Profile,
    pub schedule: StrengthSchedule,
    pub kappa: f64,
    pub backend: Backend,
    pub controls: Controls,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiteSpec {
    pub site: VortexSite,
    pub profile: Profile,
    pub schedule: StrengthSchedule,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiProblemSpec {
    pub domain: DomainSpec,
    pub h: f64,
    pub q: QSource,
    pub q_offset: f64,
    pub sites: Vec<SiteSpec>,
    /// Cone parameter: `max κ_i / κ_j ≤ α`.
    pub alpha: f64,
    pub backend: Backend,
    pub controls: Controls,
}

impl MultiProblemSpec {
    pub fn kappas(&self) -> Vec<f64> {
        self.sites.iter().map(|s| s.kappa).collect()
    }

    /// Same problem with every circulation multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> MultiProblemSpec {
        let mut out = self.clone();
        out.sites.iter_mut().for_each(|s| s.kappa *= factor);
        out
    }
}

/// Check membership of `kappas` in the cone `𝕂^α`.
pub fn in_cone(kappas: &[f64], alpha: f64) -> bool {
    if kappas.iter().any(|k| !(*k > 0.0)) {
        return false;
    }
    let max = kappas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = kappas.iter().copied().fold(f64::INFINITY, f64::min);
    max / min <= alpha * (1.0 + 1e-12)
}

/// Domain, factorized Green operator and background flow shared by every
/// solve on the same geometry.
#[derive(Debug, Clone)]
pub struct Setup {
    pub domain: Domain,
    pub green: GreenOperator,
    pub q: Background,
    harmonic: Option<Harmonic>,
    q_offset: f64,
}

impl Setup {
    pub fn new(
        domain: DomainSpec,
        h: f64,
        q: &QSource,
        q_offset: f64,
        backend: Backend,
    ) -> Result<Setup> {
        let d = Domain::build(domain, h)?;
        let green = GreenOperator::new(&d, backend)?;
        let (bg, harmonic) = match q {
            QSource::Analytic(hq) => (
                Background {
                    interior: ScalarField::from_fn(&d, |p| hq.eval(p)),
                    boundary: d.boundary().iter().map(|b| hq.eval(b.point)).collect(),
                },
                Some(*hq),
            ),
            QSource::Flux(src) => {
                let g = src.sample(&d)?;
                let boundary = elliptic::flux_antiderivative(&d, &g)?;
                let interior = green.dirichlet_extend(&d, &boundary)?;
                (Background { interior, boundary }, None)
            }
            QSource::Dirichlet(values) => {
                let interior = green.dirichlet_extend(&d, values)?;
                (
                    Background {
                        interior,
                        boundary: values.clone(),
                    },
                    None,
                )
            }
        };
        Ok(Setup {
            domain: d,
            green,
            q: bg.shifted(q_offset),
            harmonic,
            q_offset,
        })
    }

    pub fn for_problem(p: &ProblemSpec) -> Result<Setup> {
        Setup::new(p.domain, p.h, &p.q, p.q_offset, p.backend)
    }

    pub fn for_multi(p: &MultiProblemSpec) -> Result<Setup> {
        Setup::new(p.domain, p.h, &p.q, p.q_offset, p.backend)
    }

    /// Background value at an arbitrary point: exact for closed-form
    /// backgrounds, otherwise the nearest node or boundary sample.
    pub fn q_at(&self, p: Point) -> f64 {
        if let Some(hq) = self.harmonic {
            return hq.eval(p) + self.q_offset;
        }
        let d = &self.domain;
        let mut best = (f64::INFINITY, 0.0);
        for (k, &x) in d.nodes().iter().enumerate() {
            let r = dist(x, p);
            if r < best.0 {
                best = (r, self.q.interior[k]);
            }
        }
        for (b, &v) in d.boundary().iter().zip(&self.q.boundary) {
            let r = dist(b.point, p);
            if r < best.0 {
                best = (r, v);
            }
        }
        best.1
    }
}

/// One block of the admissible class: the nodes it lives on, its box bound,
/// circulation and profile.
#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub nodes: Vec<usize>,
    pub lambda: f64,
    pub kappa: f64,
    pub profile: Profile,
}

impl Group {
    /// Largest circulation the group can carry, `Λ · #nodes · h²`.
    pub fn capacity(&self, cell_area: f64) -> f64 {
        self.lambda * self.nodes.len() as f64 * cell_area
    }
}

/// The whole domain as one group.
pub fn single_group(setup: &Setup, p: &ProblemSpec) -> Result<Group> {
    if !(p.kappa > 0.0) || !p.kappa.is_finite() {
        return Err(Error::InvalidKappa(p.kappa));
    }
    p.controls.validate()?;
    let lambda = p.schedule.eval(p.kappa)?;
    let g = Group {
        nodes: (0..setup.domain.len()).collect(),
        lambda,
        kappa: p.kappa,
        profile: p.profile.clone(),
    };
    let capacity = g.capacity(setup.domain.cell_area());
    if p.kappa > capacity * (1.0 + 1e-12) {
        return Err(Error::Infeasible {
            kappa: p.kappa,
            capacity,
        });
    }
    Ok(g)
}

/// One group per site, restricted to the site's ball.
pub fn site_groups(setup: &Setup, p: &MultiProblemSpec) -> Result<Vec<Group>> {
    p.controls.validate()?;
    if p.sites.is_empty() {
        return Err(Error::InvalidSites("at least one site is required".into()));
    }
    let sites: Vec<VortexSite> = p.sites.iter().map(|s| s.site).collect();
    setup.domain.validate_sites(&sites)?;
    for s in &p.sites {
        if !(s.kappa > 0.0) || !s.kappa.is_finite() {
            return Err(Error::InvalidKappa(s.kappa));
        }
    }
    if !in_cone(&p.kappas(), p.alpha) {
        return Err(Error::InvalidProblem(format!(
            "circulations {:?} are outside the cone with alpha = {}",
            p.kappas(),
            p.alpha
        )));
    }
    p.sites
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let g = Group {
                nodes: setup.domain.ball_mask(&s.site),
                lambda: s.schedule.eval(s.kappa)?,
                kappa: s.kappa,
                profile: s.profile.clone(),
            };
            let capacity = g.capacity(setup.domain.cell_area());
            if s.kappa > capacity * (1.0 + 1e-12) {
                return Err(Error::SiteInfeasible {
                    site: i,
                    kappa: s.kappa,
                    capacity,
                });
            }
            Ok(g)
        })
        .collect()
}
