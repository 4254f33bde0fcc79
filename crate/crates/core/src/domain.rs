//! Discrete computational domains.
//!
//! A [`Domain`] is a uniform lattice of spacing `h` restricted to the points
//! strictly inside a rectangle or the unit disk. Every node carries the
//! midpoint quadrature weight `h²`. The boundary is sampled counterclockwise
//! and parametrized by (polygonal) arclength.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[inline]
pub fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainSpec {
    Rectangle {
        x0: f64,
        y0: f64,
        width: f64,
        height: f64,
    },
    UnitDisk,
}

impl DomainSpec {
    pub fn unit_square() -> Self {
        DomainSpec::Rectangle {
            x0: 0.0,
            y0: 0.0,
            width: 1.0,
            height: 1.0,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            DomainSpec::Rectangle { .. } => "rectangle",
            DomainSpec::UnitDisk => "disk",
        }
    }

    pub fn diameter(&self) -> f64 {
        match *self {
            DomainSpec::Rectangle { width, height, .. } => width.hypot(height),
            DomainSpec::UnitDisk => 2.0,
        }
    }

    /// Area of the continuous region.
    pub fn area(&self) -> f64 {
        match *self {
            DomainSpec::Rectangle { width, height, .. } => width * height,
            DomainSpec::UnitDisk => PI,
        }
    }

    /// Length of the continuous boundary.
    pub fn perimeter(&self) -> f64 {
        match *self {
            DomainSpec::Rectangle { width, height, .. } => 2.0 * (width + height),
            DomainSpec::UnitDisk => 2.0 * PI,
        }
    }

    /// Strict interior test for the continuous region.
    pub fn contains(&self, p: Point) -> bool {
        match *self {
            DomainSpec::Rectangle {
                x0,
                y0,
                width,
                height,
            } => p[0] > x0 && p[0] < x0 + width && p[1] > y0 && p[1] < y0 + height,
            DomainSpec::UnitDisk => p[0] * p[0] + p[1] * p[1] < 1.0,
        }
    }

    /// Distance from `p` to the closed region (zero inside).
    pub fn distance_to_closure(&self, p: Point) -> f64 {
        match *self {
            DomainSpec::Rectangle {
                x0,
                y0,
                width,
                height,
            } => {
                let dx = (x0 - p[0]).max(p[0] - (x0 + width)).max(0.0);
                let dy = (y0 - p[1]).max(p[1] - (y0 + height)).max(0.0);
                dx.hypot(dy)
            }
            DomainSpec::UnitDisk => (p[0].hypot(p[1]) - 1.0).max(0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let DomainSpec::Rectangle {
            x0,
            y0,
            width,
            height,
        } = *self
        {
            if !(width > 0.0 && height > 0.0) || !width.is_finite() || !height.is_finite() {
                return Err(Error::InvalidSpec(format!(
                    "rectangle dimensions must be positive, got {width} x {height}"
                )));
            }
            if !x0.is_finite() || !y0.is_finite() {
                return Err(Error::InvalidSpec("rectangle corner must be finite".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySample {
    pub point: Point,
    /// Arclength coordinate measured counterclockwise from the first sample.
    pub s: f64,
    pub normal: Point,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VortexSite {
    pub center: Point,
    pub radius: f64,
}

impl VortexSite {
    pub fn new(center: Point, radius: f64) -> Self {
        VortexSite { center, radius }
    }
}

/// Lattice neighbour directions of the 5-point stencil.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dir {
    East,
    West,
    North,
    South,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::East, Dir::West, Dir::North, Dir::South];

    fn offset(self) -> (isize, isize) {
        match self {
            Dir::East => (1, 0),
            Dir::West => (-1, 0),
            Dir::North => (0, 1),
            Dir::South => (0, -1),
        }
    }
}

const NO_NODE: u32 = u32::MAX;

#[derive(Debug, Clone)]
pub struct Domain {
    spec: DomainSpec,
    h: f64,
    origin: Point,
    nx: usize,
    ny: usize,
    nodes: Vec<Point>,
    lattice: Vec<(usize, usize)>,
    index: Vec<u32>,
    boundary: Vec<BoundarySample>,
    perimeter: f64,
}

impl Domain {
    /// Build the lattice domain for `spec` with spacing `h`.
    pub fn build(spec: DomainSpec, h: f64) -> Result<Domain> {
        spec.validate()?;
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidSpec(format!("spacing must be positive, got {h}")));
        }
        let (origin, nx, ny, shift) = match spec {
            DomainSpec::Rectangle {
                x0,
                y0,
                width,
                height,
            } => {
                // lattice points x0 + i h, i >= 1, strictly below x0 + width
                let nx = ((width / h) - 1e-9).ceil().max(1.0) as usize - 1;
                let ny = ((height / h) - 1e-9).ceil().max(1.0) as usize - 1;
                ([x0 + h, y0 + h], nx, ny, None)
            }
            DomainSpec::UnitDisk => {
                let m = (1.0 / h).floor() as usize;
                let start = -(m as f64) * h;
                ([start, start], 2 * m + 1, 2 * m + 1, Some(m as f64))
            }
        };
        let mut nodes = Vec::new();
        let mut lattice = Vec::new();
        let mut index = vec![NO_NODE; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                // disk coordinates are centred so the lattice is exactly
                // symmetric under x -> -x and y -> -y
                let p = match shift {
                    Some(m) => [(i as f64 - m) * h, (j as f64 - m) * h],
                    None => [origin[0] + i as f64 * h, origin[1] + j as f64 * h],
                };
                if spec.contains(p) {
                    index[j * nx + i] = nodes.len() as u32;
                    nodes.push(p);
                    lattice.push((i, j));
                }
            }
        }
        if nodes.is_empty() {
            return Err(Error::SpacingTooCoarse { h });
        }
        let (boundary, perimeter) = sample_boundary(&spec, h);
        Ok(Domain {
            spec,
            h,
            origin,
            nx,
            ny,
            nodes,
            lattice,
            index,
            boundary,
            perimeter,
        })
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn cell_area(&self) -> f64 {
        self.h * self.h
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn node(&self, k: usize) -> Point {
        self.nodes[k]
    }

    /// Lattice extents `(nx, ny)` and origin of the bounding lattice.
    pub fn lattice_shape(&self) -> (usize, usize, Point) {
        (self.nx, self.ny, self.origin)
    }

    pub fn lattice_coords(&self, k: usize) -> (usize, usize) {
        self.lattice[k]
    }

    /// Node index at lattice position `(i, j)`, if that point is interior.
    pub fn node_at(&self, i: isize, j: isize) -> Option<usize> {
        if i < 0 || j < 0 || i as usize >= self.nx || j as usize >= self.ny {
            return None;
        }
        let id = self.index[j as usize * self.nx + i as usize];
        (id != NO_NODE).then_some(id as usize)
    }

    pub fn neighbor(&self, k: usize, dir: Dir) -> Option<usize> {
        let (i, j) = self.lattice[k];
        let (di, dj) = dir.offset();
        self.node_at(i as isize + di, j as isize + dj)
    }

    /// Coordinates of the stencil point next to node `k` in direction `dir`,
    /// whether or not it is a node.
    pub fn stencil_point(&self, k: usize, dir: Dir) -> Point {
        let (di, dj) = dir.offset();
        let p = self.nodes[k];
        [p[0] + di as f64 * self.h, p[1] + dj as f64 * self.h]
    }

    /// Sum of quadrature weights.
    pub fn discrete_area(&self) -> f64 {
        self.nodes.len() as f64 * self.cell_area()
    }

    pub fn diameter(&self) -> f64 {
        self.spec.diameter()
    }

    pub fn boundary(&self) -> &[BoundarySample] {
        &self.boundary
    }

    /// Arclength of the closed boundary polygon.
    pub fn perimeter(&self) -> f64 {
        self.perimeter
    }

    /// Arclength coordinate of the boundary point closest to `p` (radial
    /// projection on the disk).
    pub fn boundary_param(&self, p: Point) -> f64 {
        match self.spec {
            DomainSpec::Rectangle {
                x0,
                y0,
                width,
                height,
            } => {
                let x = p[0].clamp(x0, x0 + width);
                let y = p[1].clamp(y0, y0 + height);
                // distances to the four edges: bottom, right, top, left
                let d = [y - y0, x0 + width - x, y0 + height - y, x - x0];
                let edge = (0..4)
                    .min_by(|&a, &b| d[a].total_cmp(&d[b]))
                    .unwrap_or(0);
                match edge {
                    0 => x - x0,
                    1 => width + (y - y0),
                    2 => width + height + (x0 + width - x),
                    _ => 2.0 * width + height + (y0 + height - y),
                }
            }
            DomainSpec::UnitDisk => {
                let n = self.boundary.len();
                let step = 2.0 * PI / n as f64;
                let theta = p[1].atan2(p[0]).rem_euclid(2.0 * PI);
                let k = ((theta / step).floor() as usize).min(n - 1);
                let frac = (theta - k as f64 * step) / step;
                let chord = 2.0 * (0.5 * step).sin();
                self.boundary[k].s + frac * chord
            }
        }
    }

    /// Piecewise-linear periodic interpolation of per-sample boundary values
    /// at arclength `s`.
    pub fn interpolate_boundary(&self, values: &[f64], s: f64) -> f64 {
        let n = self.boundary.len();
        debug_assert_eq!(values.len(), n);
        let s = s.rem_euclid(self.perimeter);
        let k = match self
            .boundary
            .binary_search_by(|b| b.s.total_cmp(&s))
        {
            Ok(k) => return values[k],
            Err(k) => k - 1,
        };
        let (s0, v0) = (self.boundary[k].s, values[k]);
        let (s1, v1) = if k + 1 < n {
            (self.boundary[k + 1].s, values[k + 1])
        } else {
            (self.perimeter, values[0])
        };
        let t = (s - s0) / (s1 - s0);
        v0 + t * (v1 - v0)
    }

    /// Interior nodes inside the open ball of `site`.
    pub fn ball_mask(&self, site: &VortexSite) -> Vec<usize> {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, &p)| dist(p, site.center) < site.radius)
            .map(|(k, _)| k)
            .collect()
    }

    /// Check that each site's ball meets the closed domain and that balls are
    /// pairwise disjoint.
    pub fn validate_sites(&self, sites: &[VortexSite]) -> Result<()> {
        for (i, s) in sites.iter().enumerate() {
            if !(s.radius > 0.0) || !s.radius.is_finite() {
                return Err(Error::InvalidSites(format!(
                    "site {i}: radius must be positive, got {}",
                    s.radius
                )));
            }
            if self.spec.distance_to_closure(s.center) >= s.radius {
                return Err(Error::InvalidSites(format!(
                    "site {i}: ball does not meet the domain"
                )));
            }
        }
        for i in 0..sites.len() {
            for j in i + 1..sites.len() {
                let gap = dist(sites[i].center, sites[j].center);
                if gap < sites[i].radius + sites[j].radius {
                    return Err(Error::InvalidSites(format!(
                        "balls of sites {i} and {j} overlap"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn sample_boundary(spec: &DomainSpec, h: f64) -> (Vec<BoundarySample>, f64) {
    match *spec {
        DomainSpec::Rectangle {
            x0,
            y0,
            width,
            height,
        } => {
            let corners = [
                [x0, y0],
                [x0 + width, y0],
                [x0 + width, y0 + height],
                [x0, y0 + height],
            ];
            let normals = [[0.0, -1.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]];
            let lengths = [width, height, width, height];
            let mut out = Vec::new();
            let mut s0 = 0.0;
            for e in 0..4 {
                let a = corners[e];
                let b = corners[(e + 1) % 4];
                let m = (lengths[e] / h - 1e-9).ceil().max(1.0) as usize;
                for k in 0..m {
                    let t = k as f64 / m as f64;
                    out.push(BoundarySample {
                        point: [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])],
                        s: s0 + t * lengths[e],
                        normal: normals[e],
                    });
                }
                s0 += lengths[e];
            }
            (out, s0)
        }
        DomainSpec::UnitDisk => {
            let n = (2.0 * PI / h).ceil().max(3.0) as usize;
            let step = 2.0 * PI / n as f64;
            let chord = 2.0 * (0.5 * step).sin();
            let out = (0..n)
                .map(|k| {
                    let theta = k as f64 * step;
                    let (sin, cos) = theta.sin_cos();
                    BoundarySample {
                        point: [cos, sin],
                        s: k as f64 * chord,
                        normal: [cos, sin],
                    }
                })
                .collect();
            (out, n as f64 * chord)
        }
    }
}
