//! Profile nonlinearities `f` (with `f⁻¹` and `F(s) = ∫₀ˢ f⁻¹`) and strength
//! schedules `Λ(κ)`, together with desk-scale validators for the structural
//! hypotheses the solver relies on.

use std::fmt;

use crate::error::{Error, Result};

/// Piecewise-linear table through `(s_k, f_k)` with `s_0 = 0` and strictly
/// increasing `s`. Extrapolated linearly past the last knot.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    s: Vec<f64>,
    f: Vec<f64>,
}

impl Table {
    pub fn new(s: Vec<f64>, f: Vec<f64>) -> Result<Table> {
        if s.len() != f.len() || s.len() < 2 {
            return Err(Error::InvalidProfile(
                "table needs at least two (s, f) rows".into(),
            ));
        }
        if s[0] != 0.0 {
            return Err(Error::InvalidProfile("table must start at s = 0".into()));
        }
        if s.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidProfile("table s must be strictly increasing".into()));
        }
        if s.iter().chain(&f).any(|v| !v.is_finite()) {
            return Err(Error::InvalidProfile("table entries must be finite".into()));
        }
        Ok(Table { s, f })
    }

    /// Parse two whitespace- or comma-separated columns; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Table> {
        let mut s = Vec::new();
        let mut f = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|c| !c.is_empty())
                .collect();
            if cols.len() != 2 {
                return Err(Error::InvalidProfile(format!(
                    "line {}: expected two columns",
                    lineno + 1
                )));
            }
            let parse = |c: &str| {
                c.parse::<f64>().map_err(|_| {
                    Error::InvalidProfile(format!("line {}: bad number {c:?}", lineno + 1))
                })
            };
            s.push(parse(cols[0])?);
            f.push(parse(cols[1])?);
        }
        Table::new(s, f)
    }

    fn last_slope(&self) -> f64 {
        let n = self.s.len();
        (self.f[n - 1] - self.f[n - 2]) / (self.s[n - 1] - self.s[n - 2])
    }

    fn eval(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let n = self.s.len();
        if x >= self.s[n - 1] {
            return self.f[n - 1] + self.last_slope() * (x - self.s[n - 1]);
        }
        let k = self.s.partition_point(|&v| v <= x) - 1;
        let t = (x - self.s[k]) / (self.s[k + 1] - self.s[k]);
        self.f[k] + t * (self.f[k + 1] - self.f[k])
    }

    /// `∫₀ˣ f`, exact for the piecewise-linear interpolant.
    fn integral(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let mut acc = 0.0;
        for k in 0..self.s.len() - 1 {
            let (a, b) = (self.s[k], self.s[k + 1]);
            if x <= a {
                return acc;
            }
            let hi = x.min(b);
            acc += 0.5 * (self.f[k] + self.eval(hi)) * (hi - a);
            if x <= b {
                return acc;
            }
        }
        let end = *self.s.last().unwrap();
        acc + 0.5 * (self.eval(end) + self.eval(x)) * (x - end)
    }

    /// Smallest `x ≥ 0` with `f(x) = y`, scanning segments in order; zero
    /// below the range of `f`.
    fn inverse(&self, y: f64) -> f64 {
        if y <= 0.0 || y <= self.f[0] {
            return 0.0;
        }
        for k in 0..self.s.len() - 1 {
            let (f0, f1) = (self.f[k], self.f[k + 1]);
            if (f0 <= y && y <= f1) && f1 > f0 {
                return self.s[k] + (y - f0) / (f1 - f0) * (self.s[k + 1] - self.s[k]);
            }
        }
        let slope = self.last_slope();
        let n = self.s.len();
        if slope > 0.0 {
            self.s[n - 1] + (y - self.f[n - 1]) / slope
        } else {
            self.s[n - 1]
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    /// `f(s) = s₊ᵖ`
    Power { p: f64 },
    Tabulated(Table),
}

impl Profile {
    pub fn power(p: f64) -> Result<Profile> {
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::InvalidProfile(format!("power exponent must be positive, got {p}")));
        }
        Ok(Profile::Power { p })
    }

    pub fn eval(&self, s: f64) -> f64 {
        match self {
            Profile::Power { p } => {
                if s <= 0.0 {
                    0.0
                } else if *p == 1.0 {
                    s
                } else {
                    s.powf(*p)
                }
            }
            Profile::Tabulated(t) => t.eval(s),
        }
    }

    /// `f⁻¹`, identically zero on `(−∞, 0]`.
    pub fn inverse(&self, s: f64) -> f64 {
        match self {
            Profile::Power { p } => {
                if s <= 0.0 {
                    0.0
                } else if *p == 1.0 {
                    s
                } else {
                    s.powf(1.0 / p)
                }
            }
            Profile::Tabulated(t) => t.inverse(s),
        }
    }

    /// `F(s) = ∫₀ˢ f⁻¹(r) dr`.
    pub fn primitive(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        match self {
            Profile::Power { p } => {
                if *p == 1.0 {
                    0.5 * s * s
                } else {
                    p / (p + 1.0) * s.powf((p + 1.0) / p)
                }
            }
            // Young's identity: ∫₀ˢ f⁻¹ = s·a − ∫₀ᵃ f with a = f⁻¹(s)
            Profile::Tabulated(t) => {
                let a = t.inverse(s);
                s * a - t.integral(a)
            }
        }
    }

    /// `∫₀ˢ f(r) dr`.
    pub fn integral(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        match self {
            Profile::Power { p } => s.powf(p + 1.0) / (p + 1.0),
            Profile::Tabulated(t) => t.integral(s),
        }
    }

    /// Closed-form `δ₀` for power profiles.
    pub fn delta0(&self) -> Option<f64> {
        match self {
            Profile::Power { p } => Some(1.0 / (p + 1.0)),
            Profile::Tabulated(_) => None,
        }
    }

    /// Closed-form `δ₁` for power profiles.
    pub fn delta1(&self) -> Option<f64> {
        match self {
            Profile::Power { p } => Some(p / (p + 1.0)),
            Profile::Tabulated(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Worst sampled value of the quantity the check bounds.
    pub worst: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    pub delta0: Option<f64>,
    pub delta1: Option<f64>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{:<6} {}  worst={:.6e}  {}",
                c.name,
                if c.passed { "PASS" } else { "FAIL" },
                c.worst,
                c.detail
            )?;
        }
        Ok(())
    }
}

/// Sample the profile on `[0, s_max]` (and its mirror for H1) and check
/// H1 (vanishing on the negative axis), H2 (strict monotonicity), H3 and H3′
/// (the δ₀ / δ₁ bounds) and the inverse round trip.
pub fn check_hypotheses(f: &Profile, s_max: f64, n_samples: usize) -> ValidationReport {
    let n = n_samples.max(10);
    let grid: Vec<f64> = (0..=n).map(|k| s_max * k as f64 / n as f64).collect();
    let positive = &grid[1..];

    let h1 = grid
        .iter()
        .map(|&s| f.eval(-s).abs())
        .fold(0.0f64, f64::max);

    let h2 = grid
        .windows(2)
        .map(|w| f.eval(w[1]) - f.eval(w[0]))
        .fold(f64::INFINITY, f64::min);

    let h3 = positive
        .iter()
        .map(|&s| {
            let fs = f.eval(s);
            if fs > 0.0 {
                f.integral(s) / (fs * s)
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0f64, f64::max);

    let h3p = positive
        .iter()
        .map(|&s| {
            let inv = f.inverse(s);
            if inv > 0.0 {
                f.primitive(s) / (s * inv)
            } else {
                0.0
            }
        })
        .fold(f64::INFINITY, f64::min);

    let roundtrip = positive
        .iter()
        .map(|&s| (f.eval(f.inverse(s)) - s).abs() / s)
        .fold(0.0f64, f64::max);

    let checks = vec![
        Check {
            name: "H1",
            passed: h1 == 0.0,
            worst: h1,
            detail: "max |f(s)| for s <= 0".into(),
        },
        Check {
            name: "H2",
            passed: h2 > 0.0,
            worst: h2,
            detail: "min f(s+ds) - f(s) on [0, s_max]".into(),
        },
        Check {
            name: "H3",
            passed: h3 < 1.0,
            worst: h3,
            detail: "max int_0^s f / (s f(s)); delta0 must lie in (0,1)".into(),
        },
        Check {
            name: "H3'",
            passed: h3p > 0.0 && h3p < 1.0,
            worst: h3p,
            detail: "min F(s) / (s f^-1(s)); delta1 must lie in (0,1)".into(),
        },
        Check {
            name: "INV",
            passed: roundtrip <= 1e-10,
            worst: roundtrip,
            detail: "max relative |f(f^-1(s)) - s|".into(),
        },
    ];
    let all = checks.iter().all(|c| c.passed);
    ValidationReport {
        delta0: f.delta0().or((all).then_some(h3)),
        delta1: f.delta1().or((all).then_some(h3p)),
        checks,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleKind {
    Constant { a: f64 },
    /// `Λ(κ) = a κ^{−β}`
    Power { a: f64, beta: f64 },
    /// Log-log interpolation through `(κ_k, Λ_k)` with increasing `κ`.
    Tabulated { kappa: Vec<f64>, lambda: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrengthSchedule {
    pub kind: ScheduleKind,
    /// Witness exponent for `Λ(κ) κ^{γ₀} → 0`.
    pub gamma0: f64,
}

impl StrengthSchedule {
    pub fn constant(a: f64) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::InvalidSchedule(format!("constant must be positive, got {a}")));
        }
        Ok(StrengthSchedule {
            kind: ScheduleKind::Constant { a },
            gamma0: 1.0,
        })
    }

    pub fn power(a: f64, beta: f64) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::InvalidSchedule(format!("prefactor must be positive, got {a}")));
        }
        if !(0.0..1.0).contains(&beta) {
            return Err(Error::InvalidSchedule(format!(
                "exponent beta must lie in [0, 1), got {beta}"
            )));
        }
        Ok(StrengthSchedule {
            kind: ScheduleKind::Power { a, beta },
            gamma0: 1.0,
        })
    }

    pub fn tabulated(kappa: Vec<f64>, lambda: Vec<f64>) -> Result<Self> {
        if kappa.len() != lambda.len() || kappa.len() < 2 {
            return Err(Error::InvalidSchedule("table needs at least two rows".into()));
        }
        if kappa.iter().chain(&lambda).any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidSchedule("table entries must be positive".into()));
        }
        if kappa.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidSchedule("table kappa must be increasing".into()));
        }
        Ok(StrengthSchedule {
            kind: ScheduleKind::Tabulated { kappa, lambda },
            gamma0: 1.0,
        })
    }

    pub fn with_gamma0(mut self, gamma0: f64) -> Self {
        self.gamma0 = gamma0;
        self
    }

    pub fn eval(&self, kappa: f64) -> Result<f64> {
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(Error::InvalidKappa(kappa));
        }
        Ok(match &self.kind {
            ScheduleKind::Constant { a } => *a,
            ScheduleKind::Power { a, beta } => a * kappa.powf(-beta),
            ScheduleKind::Tabulated { kappa: ks, lambda } => {
                let n = ks.len();
                let x = kappa.ln();
                let k = ks.partition_point(|&v| v <= kappa).clamp(1, n - 1) - 1;
                let (x0, x1) = (ks[k].ln(), ks[k + 1].ln());
                let (y0, y1) = (lambda[k].ln(), lambda[k + 1].ln());
                (y0 + (x - x0) / (x1 - x0) * (y1 - y0)).exp()
            }
        })
    }
}

pub fn strength_eval(l: &StrengthSchedule, kappa: f64) -> Result<f64> {
    l.eval(kappa)
}

/// Monotone-trend proxies on `κ = 2^{−j}`, `j = 1..=depth`: `Λ(κ)/κ` must
/// increase and `Λ(κ) κ^{γ₀}` must decrease as `κ` decreases.
pub fn check_schedule(l: &StrengthSchedule, depth: usize) -> ValidationReport {
    let depth = depth.max(2);
    let values: Vec<(f64, f64)> = (1..=depth)
        .map(|j| {
            let k = 0.5f64.powi(j as i32);
            (k, l.eval(k).unwrap_or(f64::NAN))
        })
        .collect();
    let a1 = values
        .windows(2)
        .map(|w| w[1].1 / w[1].0 - w[0].1 / w[0].0)
        .fold(f64::INFINITY, f64::min);
    let a2 = values
        .windows(2)
        .map(|w| w[0].1 * w[0].0.powf(l.gamma0) - w[1].1 * w[1].0.powf(l.gamma0))
        .fold(f64::INFINITY, f64::min);
    ValidationReport {
        checks: vec![
            Check {
                name: "A1",
                passed: a1 > 0.0,
                worst: a1,
                detail: "min increase of Lambda/kappa along halving kappa".into(),
            },
            Check {
                name: "A2",
                passed: a2 > 0.0,
                worst: a2,
                detail: format!(
                    "min decrease of Lambda*kappa^gamma0 (gamma0={}) along halving kappa",
                    l.gamma0
                ),
            },
        ],
        delta0: None,
        delta1: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn power_values() {
        let f = Profile::power(2.0).unwrap();
        assert_eq!(f.eval(3.0), 9.0);
        assert_eq!(f.inverse(9.0), 3.0);
        assert_eq!(f.eval(-1.0), 0.0);
        assert_eq!(f.inverse(-1.0), 0.0);
        let f = Profile::power(1.0).unwrap();
        assert_eq!(f.primitive(2.0), 2.0);
    }

    #[test]
    fn power_profiles_pass_with_exact_constants() {
        for p in [0.5, 1.0, 2.0] {
            let f = Profile::power(p).unwrap();
            let r = check_hypotheses(&f, 1.0, 200);
            assert!(r.all_passed(), "p={p}\n{r}");
            assert_eq!(r.delta0, Some(1.0 / (p + 1.0)));
            assert_eq!(r.delta0.unwrap() + r.delta1.unwrap(), 1.0);
            // sampled ratio agrees with the closed form
            assert!((r.get("H3").unwrap().worst - 1.0 / (p + 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn tabulated_counterexamples() {
        let shifted = Profile::Tabulated(Table::new(vec![0.0, 1.0, 2.0], vec![0.1, 1.0, 2.0]).unwrap());
        let r = check_hypotheses(&shifted, 1.0, 50);
        assert!(!r.get("H1").unwrap().passed);

        let n = 64;
        let s: Vec<f64> = (0..=n).map(|k| std::f64::consts::PI * k as f64 / n as f64).collect();
        let f: Vec<f64> = s.iter().map(|v| v.sin().max(0.0)).collect();
        let sine = Profile::Tabulated(Table::new(s, f).unwrap());
        let r = check_hypotheses(&sine, std::f64::consts::PI, 100);
        assert!(!r.get("H2").unwrap().passed);
    }

    #[test]
    fn tabulated_linear_matches_power_one() {
        let t = Profile::Tabulated(Table::parse("0 0\n1, 1\n# tail\n2 2\n").unwrap());
        let p = Profile::power(1.0).unwrap();
        for k in 0..40 {
            let s = k as f64 * 0.07;
            assert!((t.eval(s) - p.eval(s)).abs() < 1e-14);
            assert!((t.inverse(s) - p.inverse(s)).abs() < 1e-14);
            assert!((t.primitive(s) - p.primitive(s)).abs() < 1e-12);
        }
        assert!(check_hypotheses(&t, 1.0, 50).all_passed());
    }

    #[test]
    fn table_parse_errors() {
        assert!(Table::parse("0 0\n1\n").is_err());
        assert!(Table::parse("0 0\n0 1\n").is_err());
        assert!(Table::parse("0.5 0\n1 1\n").is_err());
    }

    #[test]
    fn schedule_values_and_proxies() {
        let l = StrengthSchedule::power(1.0, 0.5).unwrap();
        assert!((l.eval(0.01).unwrap() - 10.0).abs() < 1e-12);
        assert_eq!(l.eval(0.0), Err(Error::InvalidKappa(0.0)));
        assert_eq!(l.eval(-1.0), Err(Error::InvalidKappa(-1.0)));
        assert!(check_schedule(&l, 12).all_passed());

        let c = StrengthSchedule::constant(1.0).unwrap();
        assert!(check_schedule(&c, 12).all_passed());

        let ks: Vec<f64> = (1..=16).rev().map(|j| 0.5f64.powi(j)).collect();
        let sq: Vec<f64> = ks.iter().map(|k| k * k).collect();
        let bad = StrengthSchedule::tabulated(ks, sq).unwrap();
        assert!((bad.eval(0.01).unwrap() - 1e-4).abs() < 1e-15);
        let r = check_schedule(&bad, 12);
        assert!(!r.get("A1").unwrap().passed);

        assert!(StrengthSchedule::power(1.0, 1.0).is_err());
        assert!(StrengthSchedule::constant(0.0).is_err());
    }

    #[test]
    fn primitive_derivative_matches_inverse() {
        let step = 1e-3;
        for (p, lo) in [(0.5, 0.1), (1.0, 0.1), (1.5, 0.1), (2.0, 0.2)] {
            let f = Profile::power(p).unwrap();
            for k in 0..=90 {
                let s = lo + (1.0 - lo) * k as f64 / 90.0;
                let d = (f.primitive(s + step) - f.primitive(s - step)) / (2.0 * step);
                assert!((d - f.inverse(s)).abs() < 1e-6, "p={p} s={s}");
            }
        }
    }

    proptest! {
        #[test]
        fn power_round_trip(p in 0.2f64..5.0, s in 0.0f64..1.0) {
            let f = Profile::power(p).unwrap();
            prop_assert!((f.inverse(f.eval(s)) - s).abs() <= 1e-10 * (1.0 + s));
        }

        #[test]
        fn young_identity(p in 0.2f64..5.0, s in 0.0f64..1.0) {
            let f = Profile::power(p).unwrap();
            let lhs = f.integral(s) + f.primitive(f.eval(s));
            prop_assert!((lhs - s * f.eval(s)).abs() <= 1e-12 * (1.0 + s * f.eval(s)));
        }
    }
}
