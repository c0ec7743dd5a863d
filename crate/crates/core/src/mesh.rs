//! Structured quadrilateral meshes, face classification and subdomain partitions.

use std::collections::BTreeMap;

use crate::error::{invalid, Error, Result};
use crate::quadrature::Rule;

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Bounds {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self { x0, x1, y0, y1 }
    }

    pub fn unit_square() -> Self {
        Self::new(0.0, 1.0, 0.0, 1.0)
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    pub fn perimeter(&self) -> f64 {
        2.0 * ((self.x1 - self.x0) + (self.y1 - self.y0))
    }
}

/// Side of the bounding rectangle a boundary face lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub fn outward_normal(self) -> [f64; 2] {
        match self {
            Side::Left => [-1.0, 0.0],
            Side::Right => [1.0, 0.0],
            Side::Bottom => [0.0, -1.0],
            Side::Top => [0.0, 1.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceKind {
    Interior,
    Boundary(Side),
}

#[derive(Debug, Clone)]
pub struct Cell {
    /// Lower-left and upper-right corners.
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub barycenter: [f64; 2],
    pub measure: f64,
    /// Diameter (diagonal length).
    pub h: f64,
}

impl Cell {
    /// Maps a physical point to reference coordinates in `[-1, 1]^2`.
    pub fn to_reference(&self, x: &[f64; 2]) -> [f64; 2] {
        [
            2.0 * (x[0] - self.lo[0]) / (self.hi[0] - self.lo[0]) - 1.0,
            2.0 * (x[1] - self.lo[1]) / (self.hi[1] - self.lo[1]) - 1.0,
        ]
    }

    pub fn from_reference(&self, r: &[f64; 2]) -> [f64; 2] {
        [
            self.lo[0] + 0.5 * (r[0] + 1.0) * (self.hi[0] - self.lo[0]),
            self.lo[1] + 0.5 * (r[1] + 1.0) * (self.hi[1] - self.lo[1]),
        ]
    }

    pub fn widths(&self) -> [f64; 2] {
        [self.hi[0] - self.lo[0], self.hi[1] - self.lo[1]]
    }
}

#[derive(Debug, Clone)]
pub struct Face {
    pub kind: FaceKind,
    /// One owner for boundary faces; `(T1, T2)` with `T1 < T2` for interior faces.
    pub owners: Vec<usize>,
    /// Unit normal: outward on the boundary, from `T1` to `T2` in the interior.
    pub normal: [f64; 2],
    pub measure: f64,
    pub start: [f64; 2],
    pub end: [f64; 2],
}

impl Face {
    pub fn is_interior(&self) -> bool {
        matches!(self.kind, FaceKind::Interior)
    }

    /// Maps a 1D reference rule onto the face: physical points and weights.
    pub fn quadrature(&self, rule: &Rule) -> (Vec<[f64; 2]>, Vec<f64>) {
        let (a, b) = (self.start, self.end);
        let pts = rule
            .nodes
            .iter()
            .map(|&t| {
                let s = 0.5 * (t + 1.0);
                [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
            })
            .collect();
        let wts = rule.weights.iter().map(|w| 0.5 * w * self.measure).collect();
        (pts, wts)
    }
}

/// Cartesian tessellation of a rectangle into `nx * ny` quadrilaterals.
///
/// Cells are numbered row-major: cell `(i, j)` has id `j * nx + i`.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub nx: usize,
    pub ny: usize,
    pub bounds: Bounds,
    pub cells: Vec<Cell>,
    pub faces: Vec<Face>,
    pub cell_to_faces: Vec<Vec<usize>>,
}

impl Mesh {
    pub const DIM: usize = 2;

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn cell_id(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn interior_faces(&self) -> impl Iterator<Item = (usize, &Face)> {
        self.faces.iter().enumerate().filter(|(_, f)| f.is_interior())
    }

    pub fn boundary_faces(&self) -> impl Iterator<Item = (usize, &Face)> {
        self.faces.iter().enumerate().filter(|(_, f)| !f.is_interior())
    }

    /// Largest cell diameter.
    pub fn h_max(&self) -> f64 {
        self.cells.iter().map(|c| c.h).fold(0.0, f64::max)
    }

    /// Tensor-product Gauss points of a cell: physical coordinates and weights.
    pub fn cell_quadrature(&self, cell: usize, rule: &Rule) -> (Vec<[f64; 2]>, Vec<f64>) {
        let c = &self.cells[cell];
        let jac = c.measure / 4.0;
        let mut pts = Vec::with_capacity(rule.len() * rule.len());
        let mut wts = Vec::with_capacity(rule.len() * rule.len());
        for (b, &yb) in rule.nodes.iter().enumerate() {
            for (a, &xa) in rule.nodes.iter().enumerate() {
                pts.push(c.from_reference(&[xa, yb]));
                wts.push(rule.weights[a] * rule.weights[b] * jac);
            }
        }
        (pts, wts)
    }

    /// Stable content hash of the geometry, used to tag snapshot sets.
    pub fn fingerprint(&self) -> u64 {
        // FNV-1a over the defining integers and bound bit patterns
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |v: u64| {
            for byte in v.to_le_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(0x100_0000_01b3);
            }
        };
        eat(self.nx as u64);
        eat(self.ny as u64);
        for v in [self.bounds.x0, self.bounds.x1, self.bounds.y0, self.bounds.y1] {
            eat(v.to_bits());
        }
        h
    }
}

/// Builds an `nx x ny` Cartesian mesh of `bounds`.
pub fn build_cartesian_mesh(nx: usize, ny: usize, bounds: Bounds) -> Result<Mesh> {
    if nx == 0 || ny == 0 {
        return Err(invalid(format!("mesh needs nx, ny >= 1 (got {nx} x {ny})")));
    }
    let finite = [bounds.x0, bounds.x1, bounds.y0, bounds.y1].iter().all(|v| v.is_finite());
    if !finite || !(bounds.x1 > bounds.x0) || !(bounds.y1 > bounds.y0) {
        return Err(invalid(format!("degenerate mesh bounds {bounds:?}")));
    }
    let dx = (bounds.x1 - bounds.x0) / nx as f64;
    let dy = (bounds.y1 - bounds.y0) / ny as f64;
    let xs = |i: usize| if i == nx { bounds.x1 } else { bounds.x0 + i as f64 * dx };
    let ys = |j: usize| if j == ny { bounds.y1 } else { bounds.y0 + j as f64 * dy };

    let mut cells = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let lo = [xs(i), ys(j)];
            let hi = [xs(i + 1), ys(j + 1)];
            let w = [hi[0] - lo[0], hi[1] - lo[1]];
            cells.push(Cell {
                lo,
                hi,
                barycenter: [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])],
                measure: w[0] * w[1],
                h: w[0].hypot(w[1]),
            });
        }
    }

    let segment = |a: [f64; 2], b: [f64; 2]| (a, b, (b[0] - a[0]).hypot(b[1] - a[1]));

    let id = |i: usize, j: usize| j * nx + i;
    let mut faces = Vec::with_capacity(nx * (ny + 1) + ny * (nx + 1));
    let mut cell_to_faces = vec![Vec::with_capacity(4); nx * ny];
    // vertical faces (normal along x)
    for j in 0..ny {
        for i in 0..=nx {
            let (start, end, measure) = segment([xs(i), ys(j)], [xs(i), ys(j + 1)]);
            let (kind, owners, normal) = if i == 0 {
                (FaceKind::Boundary(Side::Left), vec![id(0, j)], Side::Left.outward_normal())
            } else if i == nx {
                (FaceKind::Boundary(Side::Right), vec![id(nx - 1, j)], Side::Right.outward_normal())
            } else {
                (FaceKind::Interior, vec![id(i - 1, j), id(i, j)], [1.0, 0.0])
            };
            for &o in &owners {
                cell_to_faces[o].push(faces.len());
            }
            faces.push(Face { kind, owners, normal, measure, start, end });
        }
    }
    // horizontal faces (normal along y)
    for j in 0..=ny {
        for i in 0..nx {
            let (start, end, measure) = segment([xs(i), ys(j)], [xs(i + 1), ys(j)]);
            let (kind, owners, normal) = if j == 0 {
                (FaceKind::Boundary(Side::Bottom), vec![id(i, 0)], Side::Bottom.outward_normal())
            } else if j == ny {
                (FaceKind::Boundary(Side::Top), vec![id(i, ny - 1)], Side::Top.outward_normal())
            } else {
                (FaceKind::Interior, vec![id(i, j - 1), id(i, j)], [0.0, 1.0])
            };
            for &o in &owners {
                cell_to_faces[o].push(faces.len());
            }
            faces.push(Face { kind, owners, normal, measure, start, end });
        }
    }

    Ok(Mesh { nx, ny, bounds, cells, faces, cell_to_faces })
}

/// Assignment of cells to `K` disjoint subdomains.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub num_subdomains: usize,
    pub owner: Vec<usize>,
    /// Interior faces whose owners lie in different subdomains, keyed by `(i, j)` with `i < j`.
    pub interface_faces: BTreeMap<(usize, usize), Vec<usize>>,
}

impl Partition {
    pub fn cells_of(&self, subdomain: usize) -> Vec<usize> {
        (0..self.owner.len()).filter(|&c| self.owner[c] == subdomain).collect()
    }

    /// Interior faces with both owners in `subdomain`.
    pub fn internal_faces(&self, mesh: &Mesh, subdomain: usize) -> Vec<usize> {
        mesh.interior_faces()
            .filter(|(_, f)| self.owner[f.owners[0]] == subdomain && self.owner[f.owners[1]] == subdomain)
            .map(|(i, _)| i)
            .collect()
    }

    /// Boundary faces of the domain owned by `subdomain`.
    pub fn boundary_faces(&self, mesh: &Mesh, subdomain: usize) -> Vec<usize> {
        mesh.boundary_faces()
            .filter(|(_, f)| self.owner[f.owners[0]] == subdomain)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn is_interface(&self, face: &Face) -> bool {
        face.is_interior() && self.owner[face.owners[0]] != self.owner[face.owners[1]]
    }
}

fn interface_sets(mesh: &Mesh, owner: &[usize]) -> BTreeMap<(usize, usize), Vec<usize>> {
    let mut sets: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (fid, f) in mesh.interior_faces() {
        let (a, b) = (owner[f.owners[0]], owner[f.owners[1]]);
        if a != b {
            sets.entry((a.min(b), a.max(b))).or_default().push(fid);
        }
    }
    sets
}

/// Splits the mesh into `k` contiguous vertical stripes.
///
/// Cells are ordered column by column (left to right, bottom to top) and the
/// sequence is cut into `k` chunks whose sizes differ by at most one. When `k`
/// divides `nx` the chunks are whole columns.
pub fn partition_stripes(mesh: &Mesh, k: usize) -> Result<Partition> {
    let n = mesh.num_cells();
    if k == 0 || k > n {
        return Err(invalid(format!("cannot split {n} cells into {k} subdomains")));
    }
    let mut owner = vec![0; n];
    let (base, extra) = (n / k, n % k);
    let mut pos = 0;
    for i in 0..mesh.nx {
        for j in 0..mesh.ny {
            // first `extra` chunks get one more cell
            let s = if pos < extra * (base + 1) {
                pos / (base + 1)
            } else {
                extra + (pos - extra * (base + 1)) / base
            };
            owner[mesh.cell_id(i, j)] = s;
            pos += 1;
        }
    }
    let interface_faces = interface_sets(mesh, &owner);
    Ok(Partition { num_subdomains: k, owner, interface_faces })
}

/// Builds a partition from explicit per-cell labels, which must cover `0..k` densely.
pub fn partition_from_labels(mesh: &Mesh, labels: &[usize]) -> Result<Partition> {
    if labels.len() != mesh.num_cells() {
        return Err(Error::DimensionMismatch {
            context: "partition labels",
            expected: mesh.num_cells(),
            found: labels.len(),
        });
    }
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut seen = vec![false; k];
    for &l in labels {
        seen[l] = true;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(invalid(format!("label {missing} is unused; labels must be dense in [0, {k})")));
    }
    let owner = labels.to_vec();
    let interface_faces = interface_sets(mesh, &owner);
    Ok(Partition { num_subdomains: k, owner, interface_faces })
}
