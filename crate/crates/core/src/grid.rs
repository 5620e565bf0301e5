//! Uniform Cartesian grids on `[-1,1]^d` (or the unit disc) and scalar fields
//! on their non-exterior nodes.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// A point in the plane; 1D grids only use the first coordinate.
pub type Point = [f64; 2];

const NO_NODE: usize = usize::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum DomainKind {
    Box,
    Disc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeClass {
    Interior,
    Boundary,
    Exterior,
}

/// Uniform grid with `n` nodes per axis and spacing `h = 2/(n-1)`.
///
/// Nodes are addressed by a compact "active" index that skips exterior
/// lattice points. Interior nodes are additionally numbered as unknowns, in
/// lexicographic order.
#[derive(Clone, Debug)]
pub struct Grid {
    dim: usize,
    n: usize,
    h: f64,
    kind: DomainKind,
    lattice_of: Vec<usize>,
    active_of: Vec<usize>,
    class: Vec<NodeClass>,
    interior: Vec<usize>,
    unknown_of: Vec<usize>,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n == other.n && self.kind == other.kind
    }
}

/// Lattice coordinate `i` mapped to `[-1, 1]`; exact at `-1`, `0` and `1`.
#[inline]
fn coordinate(i: usize, n: usize) -> f64 {
    (2.0 * i as f64 - (n - 1) as f64) / (n - 1) as f64
}

impl Grid {
    pub fn new(dim: usize, n: usize, kind: DomainKind) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in {{1, 2}}")));
        }
        if n < 5 {
            return Err(Error::InvalidGrid(format!("n = {n} is below 5")));
        }
        if n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("n = {n} must be odd")));
        }
        let h = 2.0 / (n - 1) as f64;
        let lattice_len = if dim == 1 { n } else { n * n };
        let mut lattice_of = Vec::new();
        let mut active_of = vec![NO_NODE; lattice_len];
        let mut class = Vec::new();
        for l in 0..lattice_len {
            let (i, j) = (l % n, l / n);
            let c = match kind {
                DomainKind::Box => {
                    let edge = |a: usize| a == 0 || a == n - 1;
                    if edge(i) || (dim == 2 && edge(j)) {
                        NodeClass::Boundary
                    } else {
                        NodeClass::Interior
                    }
                }
                DomainKind::Disc => {
                    let x = coordinate(i, n);
                    let y = if dim == 2 { coordinate(j, n) } else { 0.0 };
                    let r = libm::hypot(x, y);
                    if r < 1.0 - 0.5 * h {
                        NodeClass::Interior
                    } else if r <= 1.0 + h {
                        NodeClass::Boundary
                    } else {
                        NodeClass::Exterior
                    }
                }
            };
            if c != NodeClass::Exterior {
                active_of[l] = lattice_of.len();
                lattice_of.push(l);
                class.push(c);
            }
        }
        let mut interior = Vec::new();
        let mut unknown_of = vec![NO_NODE; lattice_of.len()];
        for (k, c) in class.iter().enumerate() {
            if *c == NodeClass::Interior {
                unknown_of[k] = interior.len();
                interior.push(k);
            }
        }
        Ok(Self {
            dim,
            n,
            h,
            kind,
            lattice_of,
            active_of,
            class,
            interior,
            unknown_of,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    /// Number of non-exterior nodes.
    pub fn len(&self) -> usize {
        self.lattice_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lattice_of.is_empty()
    }

    pub fn class(&self, node: usize) -> NodeClass {
        self.class[node]
    }

    pub fn is_interior(&self, node: usize) -> bool {
        self.class[node] == NodeClass::Interior
    }

    /// Interior nodes in unknown order.
    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn boundary(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&k| self.class[k] == NodeClass::Boundary)
    }

    /// Position of an interior node in the unknown vector.
    pub fn unknown_index(&self, node: usize) -> Option<usize> {
        match self.unknown_of[node] {
            NO_NODE => None,
            u => Some(u),
        }
    }

    pub fn lattice_coords(&self, node: usize) -> (usize, usize) {
        let l = self.lattice_of[node];
        (l % self.n, l / self.n)
    }

    pub fn node_at(&self, i: isize, j: isize) -> Option<usize> {
        let n = self.n as isize;
        if i < 0 || i >= n || j < 0 || (self.dim == 1 && j != 0) || (self.dim == 2 && j >= n) {
            return None;
        }
        match self.active_of[(j * n + i) as usize] {
            NO_NODE => None,
            k => Some(k),
        }
    }

    pub fn neighbor(&self, node: usize, di: isize, dj: isize) -> Option<usize> {
        let (i, j) = self.lattice_coords(node);
        self.node_at(i as isize + di, j as isize + dj)
    }

    pub fn point(&self, node: usize) -> Point {
        let (i, j) = self.lattice_coords(node);
        let y = if self.dim == 2 { coordinate(j, self.n) } else { 0.0 };
        [coordinate(i, self.n), y]
    }

    /// Where boundary data is sampled for `node`: the node itself on boxes,
    /// its radial projection onto the unit circle for disc boundary nodes.
    pub fn data_point(&self, node: usize) -> Point {
        let p = self.point(node);
        if self.kind == DomainKind::Disc && self.class[node] == NodeClass::Boundary {
            let r = libm::hypot(p[0], p[1]);
            if r > 0.0 {
                return [p[0] / r, p[1] / r];
            }
        }
        p
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        let (pa, pb) = (self.point(a), self.point(b));
        libm::hypot(pa[0] - pb[0], pa[1] - pb[1])
    }

    /// Node closest to `p`, if that lattice point is not exterior.
    pub fn nearest_node(&self, p: Point) -> Option<usize> {
        let to_index = |x: f64| libm::round((x + 1.0) / self.h) as isize;
        let j = if self.dim == 2 { to_index(p[1]) } else { 0 };
        self.node_at(to_index(p[0]), j)
    }

    /// The node at the origin (always present since `n` is odd).
    pub fn origin(&self) -> usize {
        let c = (self.n / 2) as isize;
        self.node_at(c, if self.dim == 2 { c } else { 0 })
            .expect("origin is always a node")
    }

    /// Distance from a node to the edge of the continuous domain.
    pub fn distance_to_edge(&self, node: usize) -> f64 {
        let p = self.point(node);
        match self.kind {
            DomainKind::Box => {
                let m = if self.dim == 2 {
                    libm::fabs(p[0]).max(libm::fabs(p[1]))
                } else {
                    libm::fabs(p[0])
                };
                1.0 - m
            }
            DomainKind::Disc => 1.0 - libm::hypot(p[0], p[1]),
        }
    }

    /// Non-exterior nodes with `|x - x0| ≤ r`, in index order.
    pub fn ball_nodes(&self, x0: Point, r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        if !(r > 0.0) {
            return out;
        }
        let slack = r * (1.0 + 1e-12) + 1e-14;
        let reach = (r / self.h) as isize + 1;
        let centre = |x: f64| libm::round((x + 1.0) / self.h) as isize;
        let (ci, cj) = (centre(x0[0]), if self.dim == 2 { centre(x0[1]) } else { 0 });
        let (jlo, jhi) = if self.dim == 2 { (cj - reach, cj + reach) } else { (0, 0) };
        for j in jlo..=jhi {
            for i in ci - reach..=ci + reach {
                if let Some(k) = self.node_at(i, j) {
                    let p = self.point(k);
                    let y0 = if self.dim == 2 { x0[1] } else { 0.0 };
                    if libm::hypot(p[0] - x0[0], p[1] - y0) <= slack {
                        out.push(k);
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Real values on every non-exterior node of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if let Some(node) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { node });
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Arc<Grid>, mut f: impl FnMut(Point) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|k| f(grid.point(k))).collect();
        Self::new(grid, values)
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> Result<Self> {
        let values = vec![c; grid.len()];
        Self::new(grid, values)
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let values = vec![0.0; grid.len()];
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn value(&self, node: usize) -> f64 {
        self.values[node]
    }

    /// Value at an arbitrary point, snapped to the nearest node.
    pub fn at(&self, p: Point) -> Option<f64> {
        self.grid.nearest_node(p).map(|k| self.values[k])
    }

    pub fn same_grid(&self, other: &GridFunction) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Result<Self> {
        Self::new(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &GridFunction, mut f: impl FnMut(f64, f64) -> f64) -> Result<Self> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::new(self.grid.clone(), values)
    }

    /// Max of `|values|` over non-exterior nodes.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(libm::fabs(*v)))
    }

    pub fn sup_distance(&self, other: &GridFunction) -> Result<f64> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max(libm::fabs(a - b))))
    }

    /// Empirical modulus of continuity: for each radius `r`, the max of
    /// `|f(x) - f(y)|` over node pairs with `|x - y| ≤ r`.
    pub fn modulus_of_continuity(&self, radii: &[f64]) -> Result<Vec<(f64, f64)>> {
        let g = &*self.grid;
        let floor = 2.0 * g.h;
        let mut out = Vec::with_capacity(radii.len());
        for &r in radii {
            if !(r >= floor * (1.0 - 1e-12)) {
                return Err(Error::ResolutionFloor { radius: r, floor });
            }
            let slack = r * (1.0 + 1e-12);
            let reach = (r / g.h) as isize + 1;
            let mut omega: f64 = 0.0;
            for a in 0..g.len() {
                let (ia, ja) = g.lattice_coords(a);
                let pa = g.point(a);
                let jr = if g.dim == 2 { reach } else { 0 };
                // Each unordered pair is visited once: only look "forward".
                for dj in 0..=jr {
                    let di_start = if dj == 0 { 1 } else { -reach };
                    for di in di_start..=reach {
                        if let Some(b) = g.node_at(ia as isize + di, ja as isize + dj) {
                            let pb = g.point(b);
                            if libm::hypot(pa[0] - pb[0], pa[1] - pb[1]) <= slack {
                                omega = omega.max(libm::fabs(self.values[a] - self.values[b]));
                            }
                        }
                    }
                }
            }
            out.push((r, omega));
        }
        Ok(out)
    }
}

/// A field defined only on a subset of nodes (e.g. where a stencil fits).
#[derive(Clone, Debug, PartialEq)]
pub struct NodeField {
    grid: Arc<Grid>,
    values: Vec<Option<f64>>,
}

impl NodeField {
    pub fn new(grid: Arc<Grid>, values: Vec<Option<f64>>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn get(&self, node: usize) -> Option<f64> {
        self.values[node]
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn present(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(k, v)| v.map(|v| (k, v)))
    }

    /// Sup norm over present nodes; 0 when nothing is present.
    pub fn sup_norm(&self) -> f64 {
        self.present().fold(0.0, |m, (_, v)| m.max(libm::fabs(v)))
    }

    pub fn max(&self) -> Option<f64> {
        self.present().map(|(_, v)| v).reduce(f64::max)
    }
}
