//! Text formats: node-valued field files, solution sidecars, sweep tables.
//!
//! A field file is a header line `nx ny h x0 y0 kind` (lattice extents,
//! spacing, first lattice point, `rectangle` or `disk`) followed by one node
//! value per line in domain node order, written with 17 significant digits
//! so that reading it back reproduces every value bit for bit.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::diagnostics::SweepRow;
use crate::domain::{Domain, DomainSpec, Point};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::variational::Solution;

pub const SWEEP_HEADER: [&str; 12] = [
    "kappa",
    "mu",
    "qmax_minus_mu",
    "supp_diameter",
    "supp_dist_to_S",
    "patch_nodes",
    "penalty_over_kappa",
    "pairing_over_kappa",
    "weak_residual",
    "energy",
    "iterations",
    "converged",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Rectangle,
    Disk,
}

impl FieldKind {
    pub fn name(self) -> &'static str {
        match self {
            FieldKind::Rectangle => "rectangle",
            FieldKind::Disk => "disk",
        }
    }

    fn parse(s: &str) -> Result<FieldKind> {
        match s {
            "rectangle" => Ok(FieldKind::Rectangle),
            "disk" => Ok(FieldKind::Disk),
            other => Err(Error::Format(format!("unknown domain kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldHeader {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    /// First lattice point.
    pub origin: Point,
    pub kind: FieldKind,
}

impl FieldHeader {
    pub fn of(d: &Domain) -> FieldHeader {
        let (nx, ny, origin) = d.lattice_shape();
        FieldHeader {
            nx,
            ny,
            h: d.h(),
            origin,
            kind: match d.spec() {
                DomainSpec::Rectangle { .. } => FieldKind::Rectangle,
                DomainSpec::UnitDisk => FieldKind::Disk,
            },
        }
    }

    /// Node coordinates in file order.
    pub fn node_coords(&self) -> Result<Vec<Point>> {
        match self.kind {
            FieldKind::Rectangle => Ok((0..self.ny)
                .flat_map(|j| {
                    (0..self.nx).map(move |i| {
                        [
                            self.origin[0] + i as f64 * self.h,
                            self.origin[1] + j as f64 * self.h,
                        ]
                    })
                })
                .collect()),
            FieldKind::Disk => Ok(Domain::build(DomainSpec::UnitDisk, self.h)?.nodes().to_vec()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldFile {
    pub header: FieldHeader,
    pub values: ScalarField,
}

pub fn write_field(out: &mut impl Write, d: &Domain, values: &ScalarField) -> Result<()> {
    values.check(d)?;
    let hd = FieldHeader::of(d);
    let mut s = format!(
        "{} {} {} {} {} {}\n",
        hd.nx,
        hd.ny,
        hd.h,
        hd.origin[0],
        hd.origin[1],
        hd.kind.name()
    );
    for v in values.values() {
        writeln!(s, "{v:.16e}").expect("writing to a String");
    }
    out.write_all(s.as_bytes())?;
    Ok(())
}

pub fn write_field_file(path: &Path, d: &Domain, values: &ScalarField) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_field(&mut f, d, values)?;
    f.flush()?;
    Ok(())
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, what: &str, line: usize) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::Format(format!("line {line}: missing {what}")))?;
    tok.parse()
        .map_err(|_| Error::Format(format!("line {line}: bad {what} `{tok}`")))
}

pub fn read_field(input: impl BufRead) -> Result<FieldFile> {
    let mut lines = input.lines();
    let first = lines
        .next()
        .ok_or_else(|| Error::Format("empty field file".into()))??;
    let mut toks = first.split_whitespace();
    let nx: usize = parse_num(toks.next(), "nx", 1)?;
    let ny: usize = parse_num(toks.next(), "ny", 1)?;
    let h: f64 = parse_num(toks.next(), "h", 1)?;
    let x0: f64 = parse_num(toks.next(), "x0", 1)?;
    let y0: f64 = parse_num(toks.next(), "y0", 1)?;
    let kind = FieldKind::parse(
        toks.next()
            .ok_or_else(|| Error::Format("line 1: missing kind".into()))?,
    )?;
    if toks.next().is_some() {
        return Err(Error::Format("line 1: trailing tokens in header".into()));
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::Format(format!("line 1: spacing must be positive, got {h}")));
    }
    let mut values = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        values.push(parse_num::<f64>(Some(t), "value", i + 2)?);
    }
    let header = FieldHeader {
        nx,
        ny,
        h,
        origin: [x0, y0],
        kind,
    };
    let expected = match kind {
        FieldKind::Rectangle => nx * ny,
        FieldKind::Disk => Domain::build(DomainSpec::UnitDisk, h)?.len(),
    };
    if values.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            got: values.len(),
        });
    }
    Ok(FieldFile {
        header,
        values: ScalarField::new(values),
    })
}

pub fn read_field_file(path: &Path) -> Result<FieldFile> {
    read_field(std::io::BufReader::new(std::fs::File::open(path)?))
}

/// Sidecar text for a solution: a single line
/// `mu= kappa= iterations= converged= patch_nodes=` for one group, or one
/// `mu_i= kappa_i= patch_nodes_i=` line per site followed by
/// `iterations= converged=` for several.
pub fn sidecar_text(sol: &Solution) -> String {
    let conv = u8::from(sol.converged);
    if sol.mu.len() == 1 {
        format!(
            "mu={:.16e} kappa={:.16e} iterations={} converged={} patch_nodes={}\n",
            sol.mu[0], sol.kappa[0], sol.iterations, conv, sol.patch_nodes[0]
        )
    } else {
        let mut s = String::new();
        for i in 0..sol.mu.len() {
            let n = i + 1;
            writeln!(
                s,
                "mu_{n}={:.16e} kappa_{n}={:.16e} patch_nodes_{n}={}",
                sol.mu[i], sol.kappa[i], sol.patch_nodes[i]
            )
            .expect("writing to a String");
        }
        writeln!(s, "iterations={} converged={}", sol.iterations, conv).expect("writing to a String");
        s
    }
}

/// All `key=value` pairs of a sidecar, in file order.
pub fn parse_sidecar(text: &str) -> Result<Vec<(String, String)>> {
    text.split_whitespace()
        .map(|tok| {
            tok.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| Error::Format(format!("sidecar token `{tok}` is not key=value")))
        })
        .collect()
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

fn row_record(r: &SweepRow) -> [String; 12] {
    let g = |v: f64| format!("{v:.16e}");
    [
        g(r.kappa),
        g(r.mu),
        g(r.qmax_minus_mu),
        g(r.supp_diameter),
        g(r.supp_dist_to_s),
        r.patch_nodes.to_string(),
        g(r.penalty_over_kappa),
        g(r.pairing_over_kappa),
        g(r.weak_residual),
        g(r.energy),
        r.iterations.to_string(),
        u8::from(r.converged).to_string(),
    ]
}

pub fn write_sweep_csv<'a>(
    out: impl Write,
    rows: impl IntoIterator<Item = &'a SweepRow>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record(row_record(r)).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sweep_csv(input: impl std::io::Read) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_err)?;
    if header.iter().ne(SWEEP_HEADER.iter().copied()) {
        return Err(Error::Format("unexpected sweep CSV header".into()));
    }
    r.records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec.map_err(csv_err)?;
            let line = i + 2;
            let f = |j: usize| parse_num::<f64>(rec.get(j), SWEEP_HEADER[j], line);
            let u = |j: usize| parse_num::<usize>(rec.get(j), SWEEP_HEADER[j], line);
            Ok(SweepRow {
                kappa: f(0)?,
                mu: f(1)?,
                qmax_minus_mu: f(2)?,
                supp_diameter: f(3)?,
                supp_dist_to_s: f(4)?,
                patch_nodes: u(5)?,
                penalty_over_kappa: f(6)?,
                pairing_over_kappa: f(7)?,
                weak_residual: f(8)?,
                energy: f(9)?,
                iterations: u(10)?,
                converged: u(11)? != 0,
            })
        })
        .collect()
}
