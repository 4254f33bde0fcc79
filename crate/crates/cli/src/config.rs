//! Run configuration: a JSON document with a strict schema.
//!
//! ```json
//! {
//!   "domain": { "kind": "disk" },
//!   "h": 0.015625,
//!   "q": { "flux": { "sin": [-1.0] } },
//!   "profile": { "power": 1.0 },
//!   "lambda": { "constant": 1.0 },
//!   "kappa": 0.05
//! }
//! ```
//!
//! A document describes exactly one request: a single solve (`kappa`), a
//! multi-site solve (`sites`), or a sweep (`sweep`, over `kappas` for a
//! single problem or `scales` for a multi-site one).

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use steady_vortex::diagnostics::{SweepOptions, DEFAULT_N_TEST, DEFAULT_THRESHOLD_FRACTION};
use steady_vortex::profiles::Table;
use steady_vortex::variational::{
    in_cone, Controls, FluxSource, Harmonic, MultiProblemSpec, ProblemSpec, QSource, SiteSpec,
};
use steady_vortex::{Backend, DomainSpec, Exec, Profile, StrengthSchedule, VortexSite};

/// Environment variable overriding the configured output directory.
pub const OUTPUT_DIR_ENV: &str = "STEADY_VORTEX_OUT";

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Io {
        path: PathBuf,
        message: String,
    },
    Parse {
        line: usize,
        column: usize,
        message: String,
        suggestion: Option<String>,
    },
    Validation(Vec<String>),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io { path, message } => write!(f, "cannot read {}: {message}", path.display()),
            ConfigError::Parse {
                line,
                column,
                message,
                suggestion,
            } => {
                write!(f, "parse error at line {line}, column {column}: {message}")?;
                if let Some(s) = suggestion {
                    write!(f, " (did you mean `{s}`?)")?;
                }
                Ok(())
            }
            ConfigError::Validation(v) => {
                writeln!(f, "invalid configuration ({} problem(s)):", v.len())?;
                for item in v {
                    writeln!(f, "  - {item}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum DomainCfg {
    Disk,
    Rectangle {
        #[serde(default)]
        x0: f64,
        #[serde(default)]
        y0: f64,
        width: f64,
        height: f64,
    },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FourierCfg {
    #[serde(default)]
    cos: Vec<f64>,
    #[serde(default)]
    sin: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct QCfg {
    analytic: Option<String>,
    flux: Option<FourierCfg>,
    flux_values: Option<Vec<f64>>,
    dirichlet: Option<Vec<f64>>,
    #[serde(default)]
    offset: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableCfg {
    s: Vec<f64>,
    f: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileCfg {
    power: Option<f64>,
    table: Option<TableCfg>,
    table_file: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PowerScheduleCfg {
    a: f64,
    beta: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleTableCfg {
    kappa: Vec<f64>,
    lambda: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleCfg {
    constant: Option<f64>,
    power: Option<PowerScheduleCfg>,
    table: Option<ScheduleTableCfg>,
    gamma0: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SiteCfg {
    center: [f64; 2],
    radius: f64,
    kappa: f64,
    profile: Option<ProfileCfg>,
    lambda: Option<ScheduleCfg>,
}

fn default_true() -> bool {
    true
}

fn default_fraction() -> f64 {
    DEFAULT_THRESHOLD_FRACTION
}

fn default_n_test() -> usize {
    DEFAULT_N_TEST
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepCfg {
    kappas: Option<Vec<f64>>,
    scales: Option<Vec<f64>>,
    #[serde(default = "default_true")]
    warm_start: bool,
    #[serde(default)]
    parallel: bool,
    #[serde(default = "default_fraction")]
    threshold_fraction: f64,
    #[serde(default = "default_n_test")]
    n_test: usize,
    argmax: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SolverCfg {
    max_iters: usize,
    damping: f64,
    tol: f64,
    bisection_tol: f64,
}

impl Default for SolverCfg {
    fn default() -> Self {
        let c = Controls::default();
        SolverCfg {
            max_iters: c.max_iters,
            damping: c.damping,
            tol: c.tol,
            bisection_tol: c.bisection_tol,
        }
    }
}

#[derive(Debug, Default, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
enum BackendCfg {
    #[default]
    Fd,
    DiskKernel,
}

/// Settings of the `verify` subcommand.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySettings {
    /// Right end of the sampling interval for the profile checks.
    pub s_max: f64,
    pub samples: usize,
    /// Number of dyadic circulations `2^{-j}` for the schedule checks.
    pub schedule_depth: usize,
    pub oracle_restarts: usize,
    pub oracle_steps: usize,
    pub random_fields: usize,
}

impl Default for VerifySettings {
    fn default() -> Self {
        VerifySettings {
            s_max: 4.0,
            samples: 400,
            schedule_depth: 12,
            oracle_restarts: steady_vortex::variational::ORACLE_RESTARTS,
            oracle_steps: steady_vortex::variational::ORACLE_STEPS,
            random_fields: 1000,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    domain: DomainCfg,
    h: f64,
    q: QCfg,
    profile: Option<ProfileCfg>,
    lambda: Option<ScheduleCfg>,
    kappa: Option<f64>,
    sites: Option<Vec<SiteCfg>>,
    alpha: Option<f64>,
    sweep: Option<SweepCfg>,
    #[serde(default)]
    solver: SolverCfg,
    #[serde(default)]
    backend: BackendCfg,
    output_dir: Option<String>,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    verify: VerifySettings,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Request {
    Solve(ProblemSpec),
    SolveMulti(MultiProblemSpec),
    /// Template (its `kappa` is the first list entry) and circulations.
    Sweep(ProblemSpec, Vec<f64>),
    /// Template and circulation scale factors.
    SweepMulti(MultiProblemSpec, Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub request: Request,
    pub sweep_options: SweepOptions,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub verify: VerifySettings,
}

/// Closest candidate to `word` among the names listed in a serde
/// "expected one of" message.
fn suggest(message: &str) -> Option<String> {
    let unknown = message
        .split_once("unknown field `")
        .or_else(|| message.split_once("unknown variant `"))?
        .1;
    let (word, rest) = unknown.split_once('`')?;
    let expected = rest.split_once("expected")?.1;
    expected
        .split('`')
        .skip(1)
        .step_by(2)
        .map(|c| (strsim::levenshtein(word, c), c))
        .filter(|(d, c)| *d <= 2.max(c.len() / 3))
        .min_by_key(|(d, _)| *d)
        .map(|(_, c)| c.to_string())
}

fn parse_error(e: serde_json::Error) -> ConfigError {
    let full = e.to_string();
    // drop serde_json's trailing " at line L column C"
    let message = match full.rfind(" at line ") {
        Some(i) => full[..i].to_string(),
        None => full,
    };
    ConfigError::Parse {
        line: e.line(),
        column: e.column(),
        suggestion: suggest(&message),
        message,
    }
}

struct Builder<'a> {
    base: &'a Path,
    problems: Vec<String>,
}

impl Builder<'_> {
    fn fail(&mut self, msg: impl Into<String>) {
        self.problems.push(msg.into());
    }

    fn domain(&mut self, d: &DomainCfg) -> DomainSpec {
        let spec = match *d {
            DomainCfg::Disk => DomainSpec::UnitDisk,
            DomainCfg::Rectangle {
                x0,
                y0,
                width,
                height,
            } => DomainSpec::Rectangle {
                x0,
                y0,
                width,
                height,
            },
        };
        if let Err(e) = spec.validate() {
            self.fail(format!("domain: {e}"));
        }
        spec
    }

    fn q(&mut self, q: &QCfg) -> QSource {
        let given = [
            q.analytic.is_some(),
            q.flux.is_some(),
            q.flux_values.is_some(),
            q.dirichlet.is_some(),
        ]
        .iter()
        .filter(|b| **b)
        .count();
        if given != 1 {
            self.fail("q: give exactly one of `analytic`, `flux`, `flux_values`, `dirichlet`");
        }
        if !q.offset.is_finite() {
            self.fail("q.offset must be finite");
        }
        if let Some(name) = &q.analytic {
            match Harmonic::parse(name) {
                Some(h) => return QSource::Analytic(h),
                None => self.fail(format!(
                    "q.analytic: `{name}` is not one of x1, x2, x1^2-x2^2, 2x1x2"
                )),
            }
        }
        if let Some(f) = &q.flux {
            if f.cos.is_empty() && f.sin.is_empty() {
                self.fail("q.flux: at least one Fourier coefficient is required");
            }
            return QSource::Flux(FluxSource::Fourier {
                cos: f.cos.clone(),
                sin: f.sin.clone(),
            });
        }
        if let Some(v) = &q.flux_values {
            return QSource::Flux(FluxSource::Values(v.clone()));
        }
        if let Some(v) = &q.dirichlet {
            return QSource::Dirichlet(v.clone());
        }
        QSource::Analytic(Harmonic::X1)
    }

    fn profile(&mut self, p: Option<&ProfileCfg>, at: &str) -> Profile {
        let fallback = Profile::power(1.0).expect("p = 1 is valid");
        let Some(p) = p else { return fallback };
        let given = [p.power.is_some(), p.table.is_some(), p.table_file.is_some()]
            .iter()
            .filter(|b| **b)
            .count();
        if given != 1 {
            self.fail(format!("{at}: give exactly one of `power`, `table`, `table_file`"));
            return fallback;
        }
        let built = if let Some(x) = p.power {
            Profile::power(x)
        } else if let Some(t) = &p.table {
            Table::new(t.s.clone(), t.f.clone()).map(Profile::Tabulated)
        } else {
            let path = self.base.join(p.table_file.as_deref().unwrap_or_default());
            match std::fs::read_to_string(&path) {
                Ok(text) => Table::parse(&text).map(Profile::Tabulated),
                Err(e) => {
                    self.fail(format!("{at}.table_file: cannot read {}: {e}", path.display()));
                    return fallback;
                }
            }
        };
        built.unwrap_or_else(|e| {
            self.fail(format!("{at}: {e}"));
            fallback
        })
    }

    fn schedule(&mut self, s: Option<&ScheduleCfg>, at: &str) -> StrengthSchedule {
        let fallback = StrengthSchedule::constant(1.0).expect("Λ ≡ 1 is valid");
        let Some(s) = s else { return fallback };
        let given = [s.constant.is_some(), s.power.is_some(), s.table.is_some()]
            .iter()
            .filter(|b| **b)
            .count();
        if given != 1 {
            self.fail(format!("{at}: give exactly one of `constant`, `power`, `table`"));
            return fallback;
        }
        let built = if let Some(a) = s.constant {
            StrengthSchedule::constant(a)
        } else if let Some(p) = &s.power {
            StrengthSchedule::power(p.a, p.beta)
        } else {
            let t = s.table.as_ref().expect("checked above");
            StrengthSchedule::tabulated(t.kappa.clone(), t.lambda.clone())
        };
        match built {
            Ok(mut l) => {
                if let Some(g) = s.gamma0 {
                    if g > 0.0 && g.is_finite() {
                        l = l.with_gamma0(g);
                    } else {
                        self.fail(format!("{at}.gamma0 must be positive, got {g}"));
                    }
                }
                l
            }
            Err(e) => {
                self.fail(format!("{at}: {e}"));
                fallback
            }
        }
    }

    fn positive(&mut self, name: &str, v: f64) {
        if !(v > 0.0) || !v.is_finite() {
            self.fail(format!("{name} must be positive, got {v}"));
        }
    }

    fn decreasing(&mut self, name: &str, list: &[f64]) {
        if list.is_empty() {
            self.fail(format!("{name} must not be empty"));
        }
        if list.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            self.fail(format!("{name} entries must be positive"));
        }
        if list.windows(2).any(|w| w[1] >= w[0]) {
            self.fail(format!("{name} must be strictly decreasing"));
        }
    }
}

fn build(raw: RawConfig, base: &Path) -> Result<RunConfig, ConfigError> {
    let mut b = Builder {
        base,
        problems: Vec::new(),
    };
    let domain = b.domain(&raw.domain);
    b.positive("h", raw.h);
    let q = b.q(&raw.q);
    let profile = b.profile(raw.profile.as_ref(), "profile");
    let schedule = b.schedule(raw.lambda.as_ref(), "lambda");
    let controls = Controls {
        max_iters: raw.solver.max_iters,
        damping: raw.solver.damping,
        tol: raw.solver.tol,
        bisection_tol: raw.solver.bisection_tol,
    };
    if let Err(e) = controls.validate() {
        b.fail(format!("solver: {e}"));
    }
    let backend = match raw.backend {
        BackendCfg::Fd => Backend::Fd,
        BackendCfg::DiskKernel => {
            if domain != DomainSpec::UnitDisk {
                b.fail("backend `disk_kernel` requires the unit disk domain");
            }
            Backend::DiskKernel
        }
    };
    if let Some(k) = raw.kappa {
        b.positive("kappa", k);
    }

    let mut sweep_options = SweepOptions::default();
    if let Some(s) = &raw.sweep {
        if !(s.threshold_fraction > 0.0 && s.threshold_fraction < 1.0) {
            b.fail(format!(
                "sweep.threshold_fraction must lie in (0, 1), got {}",
                s.threshold_fraction
            ));
        }
        if s.n_test == 0 {
            b.fail("sweep.n_test must be at least 1");
        }
        if s.parallel && s.warm_start {
            b.fail("sweep.parallel requires sweep.warm_start = false");
        }
        sweep_options = SweepOptions {
            threshold_fraction: s.threshold_fraction,
            n_test: s.n_test,
            warm_start: s.warm_start,
            exec: if s.parallel { Exec::Parallel } else { Exec::Sequential },
            argmax: s.argmax.clone(),
        };
    }

    let single = |kappa: f64| ProblemSpec {
        domain,
        h: raw.h,
        q: q.clone(),
        q_offset: raw.q.offset,
        profile: profile.clone(),
        schedule: schedule.clone(),
        kappa,
        backend,
        controls,
    };

    let request = match &raw.sites {
        Some(sites) => {
            if raw.kappa.is_some() {
                b.fail("`kappa` and `sites` are exclusive; give per-site `kappa` values");
            }
            if sites.is_empty() {
                b.fail("sites must not be empty");
            }
            let alpha = raw.alpha.unwrap_or(1.0);
            if !(alpha >= 1.0) {
                b.fail(format!("alpha must be at least 1, got {alpha}"));
            }
            let specs: Vec<SiteSpec> = sites
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let at = format!("sites[{i}]");
                    b.positive(&format!("{at}.radius"), s.radius);
                    b.positive(&format!("{at}.kappa"), s.kappa);
                    SiteSpec {
                        site: VortexSite::new(s.center, s.radius),
                        profile: match &s.profile {
                            Some(p) => b.profile(Some(p), &format!("{at}.profile")),
                            None => profile.clone(),
                        },
                        schedule: match &s.lambda {
                            Some(l) => b.schedule(Some(l), &format!("{at}.lambda")),
                            None => schedule.clone(),
                        },
                        kappa: s.kappa,
                    }
                })
                .collect();
            let kappas: Vec<f64> = specs.iter().map(|s| s.kappa).collect();
            if !kappas.is_empty() && kappas.iter().all(|k| *k > 0.0) && !in_cone(&kappas, alpha) {
                b.fail(format!("site circulations {kappas:?} are outside the cone alpha = {alpha}"));
            }
            let multi = MultiProblemSpec {
                domain,
                h: raw.h,
                q: q.clone(),
                q_offset: raw.q.offset,
                sites: specs,
                alpha,
                backend,
                controls,
            };
            match &raw.sweep {
                Some(s) => {
                    if s.kappas.is_some() {
                        b.fail("sweep.kappas applies to single problems; use sweep.scales with sites");
                    }
                    let scales = s.scales.clone().unwrap_or_default();
                    b.decreasing("sweep.scales", &scales);
                    Request::SweepMulti(multi, scales)
                }
                None => Request::SolveMulti(multi),
            }
        }
        None => {
            if raw.alpha.is_some() {
                b.fail("`alpha` only applies together with `sites`");
            }
            match &raw.sweep {
                Some(s) => {
                    if raw.kappa.is_some() {
                        b.fail("`kappa` and `sweep` are exclusive; list circulations in sweep.kappas");
                    }
                    if s.scales.is_some() {
                        b.fail("sweep.scales applies to multi-site problems; use sweep.kappas");
                    }
                    let kappas = s.kappas.clone().unwrap_or_default();
                    b.decreasing("sweep.kappas", &kappas);
                    Request::Sweep(single(kappas.first().copied().unwrap_or(f64::NAN)), kappas)
                }
                None => match raw.kappa {
                    Some(k) => Request::Solve(single(k)),
                    None => {
                        b.fail("one of `kappa`, `sites` or `sweep` is required");
                        Request::Solve(single(f64::NAN))
                    }
                },
            }
        }
    };

    let v = &raw.verify;
    if !(v.s_max > 0.0) || v.samples == 0 || v.schedule_depth < 2 || v.oracle_restarts == 0 {
        b.fail("verify: s_max, samples, oracle_restarts must be positive and schedule_depth at least 2");
    }

    if !b.problems.is_empty() {
        return Err(ConfigError::Validation(b.problems));
    }
    let output_dir = match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => base.join(raw.output_dir.as_deref().unwrap_or("out")),
    };
    Ok(RunConfig {
        request,
        sweep_options,
        output_dir,
        seed: raw.seed,
        verify: raw.verify,
    })
}

/// Parse and validate a configuration document. Relative paths inside it
/// (tabulated profiles, the output directory) resolve against `base`.
pub fn parse_config_str(text: &str, base: &Path) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = serde_json::from_str(text).map_err(parse_error)?;
    build(raw, base)
}

pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config_str(&text, base)
}
