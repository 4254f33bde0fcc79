//! Subcommands. Each returns the process exit code: 0 on success, 1 on
//! errors or failed checks, 2 when a solve did not converge.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use steady_vortex::diagnostics::{kappa_sweep, sweep_multi, SweepRow, TrendFlags};
use steady_vortex::elliptic::green_apply;
use steady_vortex::io::{read_field_file, sidecar_text, write_field_file, write_sweep_csv};
use steady_vortex::profiles::{check_hypotheses, check_schedule};
use steady_vortex::variational::{
    energy, feasibility_check, maximize_in, maximize_multi_in, oracle_maximize, random_feasible,
    single_group, site_groups, ProblemSpec, Setup, Solution, ORACLE_MAX_NODES,
};
use steady_vortex::{Backend, Domain, DomainSpec, Exec, ScalarField};


use crate::config::{Request, RunConfig};

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_NOT_CONVERGED: u8 = 2;

fn write_solution(dir: &Path, stem: &str, d: &Domain, sol: &Solution) -> Result<()> {
    write_field_file(&dir.join(format!("{stem}.field")), d, &sol.omega)?;
    fs::write(dir.join(format!("{stem}.sidecar")), sidecar_text(sol))?;
    Ok(())
}

fn summary(sol: &Solution, feasible: bool) -> String {
    let mus: Vec<String> = sol.mu.iter().map(|m| format!("{m:.12e}")).collect();
    format!(
        "converged={} iterations={} mu={} energy={:.12e} residual={:.3e} mass_error={:.3e} patch_nodes={} feasibility={}",
        u8::from(sol.converged),
        sol.iterations,
        mus.join(","),
        sol.energy(),
        sol.fixed_point_residual,
        sol.mass_error,
        sol.total_patch_nodes(),
        if feasible { "pass" } else { "fail" }
    )
}

/// Solve a single or multi-site problem and write `solution.field` and
/// `solution.sidecar` into the output directory.
pub fn cmd_solve(cfg: &RunConfig) -> Result<u8> {
    let (setup, groups, sol) = match &cfg.request {
        Request::Solve(p) => {
            let setup = Setup::for_problem(p)?;
            let groups = vec![single_group(&setup, p)?];
            let sol = maximize_in(&setup, p, None)?;
            (setup, groups, sol)
        }
        Request::SolveMulti(p) => {
            let setup = Setup::for_multi(p)?;
            let groups = site_groups(&setup, p)?;
            let sol = maximize_multi_in(&setup, p, None)?;
            (setup, groups, sol)
        }
        Request::Sweep(..) | Request::SweepMulti(..) => {
            bail!("the configuration describes a sweep; run the `sweep` subcommand")
        }
    };
    fs::create_dir_all(&cfg.output_dir)
        .with_context(|| format!("creating {}", cfg.output_dir.display()))?;
    write_solution(&cfg.output_dir, "solution", &setup.domain, &sol)?;
    let report = feasibility_check(&sol.omega, &groups, setup.domain.cell_area(), 1e-8);
    println!("{}", summary(&sol, report.all_passed()));
    for w in &sol.warnings {
        eprintln!("warning: {w}");
    }
    Ok(if !sol.converged {
        EXIT_NOT_CONVERGED
    } else if !report.all_passed() {
        eprint!("{report}");
        EXIT_ERROR
    } else {
        EXIT_OK
    })
}

fn print_trends(label: &str, t: &TrendFlags) {
    for (name, ok) in t.named() {
        println!("{label}{name:<32} {}", if ok { "PASS" } else { "FAIL" });
    }
}

fn write_csv(path: &Path, rows: &[&SweepRow]) -> Result<()> {
    let f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_sweep_csv(std::io::BufWriter::new(f), rows.iter().copied())?;
    Ok(())
}

/// Run a κ sweep, writing `sweep.csv` (or `sweep_site<i>.csv` per site) and
/// one field file plus sidecar per row. Exit 0 iff every row converged and
/// every trend flag holds; 1 if a row failed outright; 2 otherwise.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<u8> {
    let dir = &cfg.output_dir;
    let opts = &cfg.sweep_options;
    match &cfg.request {
        Request::Sweep(p, kappas) => {
            let setup = Setup::for_problem(p)?;
            let report = kappa_sweep(&setup, p, kappas, opts)?;
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let mut rows = Vec::new();
            let mut errored = false;
            for (i, (k, r)) in kappas.iter().zip(&report.rows).enumerate() {
                match r {
                    Ok(rec) => {
                        write_solution(dir, &format!("kappa_{i:02}"), &setup.domain, &rec.solution)?;
                        rows.push(&rec.row);
                    }
                    Err(e) => {
                        errored = true;
                        eprintln!("kappa={k}: {e}");
                    }
                }
            }
            write_csv(&dir.join("sweep.csv"), &rows)?;
            print_trends("", &report.trends);
            Ok(if errored {
                EXIT_ERROR
            } else if report.all_ok() {
                EXIT_OK
            } else {
                EXIT_NOT_CONVERGED
            })
        }
        Request::SweepMulti(p, scales) => {
            let setup = Setup::for_multi(p)?;
            let report = sweep_multi(&setup, p, scales, opts)?;
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let mut errored = false;
            for (i, (s, r)) in scales.iter().zip(&report.rows).enumerate() {
                match r {
                    Ok(rec) => write_solution(dir, &format!("scale_{i:02}"), &setup.domain, &rec.solution)?,
                    Err(e) => {
                        errored = true;
                        eprintln!("scale={s}: {e}");
                    }
                }
            }
            for i in 0..p.sites.len() {
                let rows: Vec<&SweepRow> = report.site_rows(i).into_iter().flatten().collect();
                write_csv(&dir.join(format!("sweep_site{}.csv", i + 1)), &rows)?;
                print_trends(&format!("site {}: ", i + 1), &report.trends[i]);
            }
            Ok(if errored {
                EXIT_ERROR
            } else if report.all_ok() {
                EXIT_OK
            } else {
                EXIT_NOT_CONVERGED
            })
        }
        Request::Solve(_) | Request::SolveMulti(_) => {
            bail!("the configuration has no `sweep` section; run the `solve` subcommand")
        }
    }
}

struct Table {
    rows: Vec<(String, bool, String)>,
}

impl Table {
    fn add(&mut self, name: impl Into<String>, ok: bool, detail: impl Into<String>) {
        self.rows.push((name.into(), ok, detail.into()));
    }
}

fn elliptic_self_tests(t: &mut Table, cfg: &RunConfig, setup: &Setup) -> Result<()> {
    let err = |h: f64| -> Result<f64> {
        let d = Domain::build(DomainSpec::unit_square(), h)?;
        let w = ScalarField::from_fn(&d, |p| 2.0 * PI * PI * (PI * p[0]).sin() * (PI * p[1]).sin());
        let exact = ScalarField::from_fn(&d, |p| (PI * p[0]).sin() * (PI * p[1]).sin());
        Ok(green_apply(&d, &w, Backend::Fd)?.sup_distance(&exact))
    };
    let ratio = err(1.0 / 32.0)? / err(1.0 / 64.0)?;
    t.add(
        "elliptic: fd second-order convergence",
        (3.5..=4.5).contains(&ratio),
        format!("error ratio {ratio:.3}"),
    );

    let d = Domain::build(DomainSpec::UnitDisk, 1.0 / 32.0)?;
    let one = ScalarField::constant(d.len(), 1.0);
    let exact = ScalarField::from_fn(&d, |p| (1.0 - p[0] * p[0] - p[1] * p[1]) / 4.0);
    let e = green_apply(&d, &one, Backend::DiskKernel)?.sup_distance(&exact);
    t.add("elliptic: disk kernel closed form", e <= 1e-3, format!("sup error {e:.3e}"));

    let n = setup.domain.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let u = ScalarField::new((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
    let v = ScalarField::new((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
    let h2 = setup.domain.cell_area();
    let a = setup.green.apply(&u)?.inner(&v, h2);
    let b = u.inner(&setup.green.apply(&v)?, h2);
    let defect = (a - b).abs() / (1.0 + a.abs());
    t.add(
        "elliptic: green symmetry (configured grid)",
        defect <= 1e-10,
        format!("relative defect {defect:.3e}"),
    );
    Ok(())
}

fn oracle_comparison(t: &mut Table, cfg: &RunConfig, p: &ProblemSpec, setup: &Setup) -> Result<()> {
    let n = setup.domain.len();
    if n > ORACLE_MAX_NODES {
        println!("oracle comparison skipped: {n} nodes > {ORACLE_MAX_NODES}");
        return Ok(());
    }
    let group = single_group(setup, p)?;
    let sol = maximize_in(setup, p, None)?;
    let v = &cfg.verify;
    let oracle = oracle_maximize(setup, &group, cfg.seed, v.oracle_restarts, v.oracle_steps, Exec::default())?;
    let e = energy(setup, &sol.omega, group.lambda, &group.profile)?;
    t.add(
        "oracle: maximize >= oracle - 1e-8",
        e >= oracle.energy - 1e-8,
        format!("maximize {e:.12e}, oracle {:.12e}", oracle.energy),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let mut margin = f64::INFINITY;
    for _ in 0..v.random_fields {
        let w = random_feasible(n, &group, setup.domain.cell_area(), &mut rng);
        margin = margin.min(e - energy(setup, &w, group.lambda, &group.profile)?);
    }
    t.add(
        format!("oracle: maximize beats {} random fields", v.random_fields),
        margin >= 0.0,
        format!("min margin {margin:.3e}"),
    );
    Ok(())
}

/// Hypothesis checks on every profile and schedule, elliptic self-tests and,
/// on grids of at most 100 nodes, the oracle comparison.
pub fn cmd_verify(cfg: &RunConfig) -> Result<u8> {
    let mut t = Table { rows: Vec::new() };
    let v = &cfg.verify;
    let pairs: Vec<(String, _, _)> = match &cfg.request {
        Request::Solve(p) | Request::Sweep(p, _) => {
            vec![(String::new(), p.profile.clone(), p.schedule.clone())]
        }
        Request::SolveMulti(p) | Request::SweepMulti(p, _) => p
            .sites
            .iter()
            .enumerate()
            .map(|(i, s)| (format!("site {} ", i + 1), s.profile.clone(), s.schedule.clone()))
            .collect(),
    };
    for (label, f, l) in &pairs {
        let r = check_hypotheses(f, v.s_max, v.samples);
        for c in &r.checks {
            t.add(format!("{label}profile {}", c.name), c.passed, c.detail.clone());
        }
        let r = check_schedule(l, v.schedule_depth);
        for c in &r.checks {
            t.add(format!("{label}schedule {}", c.name), c.passed, c.detail.clone());
        }
    }
    let (setup, single) = match &cfg.request {
        Request::Solve(p) | Request::Sweep(p, _) => (Setup::for_problem(p)?, Some(p)),
        Request::SolveMulti(p) | Request::SweepMulti(p, _) => (Setup::for_multi(p)?, None),
    };
    elliptic_self_tests(&mut t, cfg, &setup)?;
    if let Some(p) = single {
        oracle_comparison(&mut t, cfg, p, &setup)?;
    }
    for (name, ok, detail) in &t.rows {
        println!("{name:<44} {}  {detail}", if *ok { "PASS" } else { "FAIL" });
    }
    Ok(if t.rows.iter().all(|r| r.1) {
        EXIT_OK
    } else {
        EXIT_ERROR
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Text,
    Csv,
}

/// Re-emit a field file as text (the canonical field format) or as
/// `x,y,value` CSV with node coordinates.
pub fn cmd_export(field: &Path, format: ExportFormat, out: &mut impl Write) -> Result<u8> {
    let file = read_field_file(field).with_context(|| format!("reading {}", field.display()))?;
    match format {
        ExportFormat::Text => {
            let hd = &file.header;
            writeln!(
                out,
                "{} {} {} {} {} {}",
                hd.nx,
                hd.ny,
                hd.h,
                hd.origin[0],
                hd.origin[1],
                hd.kind.name()
            )?;
            for v in file.values.values() {
                writeln!(out, "{v:.16e}")?;
            }
        }
        ExportFormat::Csv => {
            let coords = file.header.node_coords()?;
            let mut w = csv::Writer::from_writer(&mut *out);
            w.write_record(["x", "y", "value"])?;
            for (p, v) in coords.iter().zip(file.values.values()) {
                w.write_record([format!("{:.16e}", p[0]), format!("{:.16e}", p[1]), format!("{v:.16e}")])?;
            }
            w.flush()?;
        }
    }
    Ok(EXIT_OK)
}
