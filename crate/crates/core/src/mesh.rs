//! Polygonal meshes.
//!
//! Cells are counterclockwise vertex loops. Every edge is stored once with its
//! endpoints in increasing index order; that order fixes the global unit
//! normal `n_F` (the right-hand normal of the directed segment) and the edge
//! parameterisation used by the edge degrees of freedom. Each cell stores, per
//! local edge, the global edge id and a sign that is `+1` when the cell's
//! outward normal equals `n_F`.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Point, Result};

/// An axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub const UNIT: Rect = Rect {
        x0: 0.0,
        y0: 0.0,
        x1: 1.0,
        y1: 1.0,
    };

    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Rect { x0, y0, x1, y1 }
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    fn map(&self, sx: f64, sy: f64) -> Point {
        [
            self.x0 + (self.x1 - self.x0) * sx,
            self.y0 + (self.y1 - self.y0) * sy,
        ]
    }
}

/// Cell shape used by the L-shape generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellKind {
    Triangles,
    Polygons,
}

#[derive(Clone, Debug)]
pub struct Edge {
    /// Endpoints, `vertices[0] < vertices[1]`.
    pub vertices: [usize; 2],
    /// Cells on either side; the second slot is `None` on the boundary.
    pub cells: [Option<usize>; 2],
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.cells[1].is_none()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellEdge {
    pub edge: usize,
    /// `+1.0` if the cell traverses the edge from `vertices[0]` to `vertices[1]`.
    pub sign: f64,
}

/// A validated polygonal mesh. Immutable after construction.
#[derive(Clone, Debug)]
pub struct PolyMesh {
    vertices: Vec<Point>,
    cells: Vec<Vec<usize>>,
    edges: Vec<Edge>,
    cell_edges: Vec<Vec<CellEdge>>,
    reoriented: Vec<usize>,
}

/// Geometry of one edge as seen from a cell.
#[derive(Clone, Debug)]
pub struct EdgeGeometry {
    pub edge: usize,
    pub sign: f64,
    /// Start and end points in the cell's counterclockwise traversal.
    pub start: Point,
    pub end: Point,
    pub length: f64,
    /// Unit outward normal of the cell.
    pub normal: Point,
    /// Unit counterclockwise tangent of the cell.
    pub tangent: Point,
    /// Start point of the global edge parameterisation.
    pub origin: Point,
    /// Unit direction of the global edge parameterisation.
    pub direction: Point,
}

impl EdgeGeometry {
    /// Point at global edge parameter `s` in `[0, 1]`.
    pub fn point_at(&self, s: f64) -> Point {
        [
            self.origin[0] + s * self.length * self.direction[0],
            self.origin[1] + s * self.length * self.direction[1],
        ]
    }

    pub fn is_boundary_of(&self, mesh: &PolyMesh) -> bool {
        mesh.edges[self.edge].is_boundary()
    }
}

/// Centroid, diameter, area and oriented edges of one cell.
#[derive(Clone, Debug)]
pub struct CellGeometry {
    pub index: usize,
    pub vertices: Vec<Point>,
    pub centroid: Point,
    pub diameter: f64,
    pub area: f64,
    pub edges: Vec<EdgeGeometry>,
}

impl CellGeometry {
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Centroid fan of the cell; a triangle is returned unchanged.
    pub fn subtriangulate(&self) -> Result<Vec<[Point; 3]>> {
        let n = self.vertices.len();
        if n == 3 {
            return Ok(vec![[self.vertices[0], self.vertices[1], self.vertices[2]]]);
        }
        let c = self.centroid;
        let mut tris = Vec::with_capacity(n);
        for i in 0..n {
            let t = [c, self.vertices[i], self.vertices[(i + 1) % n]];
            if triangle_area(&t) <= 1e-14 * self.area {
                return Err(Error::NotStarShaped { cell: self.index });
            }
            tris.push(t);
        }
        Ok(tris)
    }
}

pub fn triangle_area(t: &[Point; 3]) -> f64 {
    0.5 * ((t[1][0] - t[0][0]) * (t[2][1] - t[0][1]) - (t[2][0] - t[0][0]) * (t[1][1] - t[0][1]))
}

fn signed_area(pts: &[Point]) -> f64 {
    let n = pts.len();
    (0..n)
        .map(|i| {
            let (p, q) = (pts[i], pts[(i + 1) % n]);
            p[0] * q[1] - q[0] * p[1]
        })
        .sum::<f64>()
        * 0.5
}

fn polygon_centroid(pts: &[Point]) -> Point {
    // Shoelace centroid relative to the first vertex to limit cancellation.
    let o = pts[0];
    let n = pts.len();
    let (mut a, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let p = [pts[i][0] - o[0], pts[i][1] - o[1]];
        let q = [pts[(i + 1) % n][0] - o[0], pts[(i + 1) % n][1] - o[1]];
        let cr = p[0] * q[1] - q[0] * p[1];
        a += cr;
        cx += (p[0] + q[0]) * cr;
        cy += (p[1] + q[1]) * cr;
    }
    [o[0] + cx / (3.0 * a), o[1] + cy / (3.0 * a)]
}

fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    fn orient(a: Point, b: Point, c: Point) -> f64 {
        (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    }
    fn on_segment(a: Point, b: Point, p: Point) -> bool {
        p[0] >= a[0].min(b[0])
            && p[0] <= a[0].max(b[0])
            && p[1] >= a[1].min(b[1])
            && p[1] <= a[1].max(b[1])
    }
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

fn is_simple(pts: &[Point]) -> bool {
    let n = pts.len();
    for i in 0..n {
        for j in (i + 1)..n {
            // adjacent edges share a vertex
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            if segments_intersect(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

impl PolyMesh {
    /// Builds and validates a mesh. Clockwise cells are reversed and a warning
    /// is logged; their indices are available from [`PolyMesh::reoriented_cells`].
    pub fn new(vertices: Vec<Point>, mut cells: Vec<Vec<usize>>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::InvalidMesh("mesh has no cells".into()));
        }
        if let Some(i) = vertices
            .iter()
            .position(|p| !p[0].is_finite() || !p[1].is_finite())
        {
            return Err(Error::InvalidMesh(format!("vertex {i} is not finite")));
        }
        let mut reoriented = Vec::new();
        for (ci, cell) in cells.iter_mut().enumerate() {
            if cell.len() < 3 {
                return Err(Error::InvalidCell {
                    cell: ci,
                    reason: "fewer than 3 vertices".into(),
                });
            }
            if let Some(&v) = cell.iter().find(|&&v| v >= vertices.len()) {
                return Err(Error::InvalidCell {
                    cell: ci,
                    reason: format!("vertex index {v} out of range"),
                });
            }
            let mut sorted = cell.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidCell {
                    cell: ci,
                    reason: "duplicate vertex index".into(),
                });
            }
            let pts: Vec<Point> = cell.iter().map(|&v| vertices[v]).collect();
            if !is_simple(&pts) {
                return Err(Error::InvalidCell {
                    cell: ci,
                    reason: "polygon is self-intersecting".into(),
                });
            }
            let a = signed_area(&pts);
            let scale = pts
                .iter()
                .map(|p| p[0].abs().max(p[1].abs()))
                .fold(1.0, f64::max);
            if a.abs() <= 1e-14 * scale * scale {
                return Err(Error::InvalidCell {
                    cell: ci,
                    reason: "zero area".into(),
                });
            }
            if a < 0.0 {
                log::warn!("cell {ci} is clockwise; reversing its vertex order");
                cell.reverse();
                reoriented.push(ci);
            }
        }

        let mut edges: Vec<Edge> = Vec::new();
        let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
        let mut cell_edges = Vec::with_capacity(cells.len());
        for (ci, cell) in cells.iter().enumerate() {
            let n = cell.len();
            let mut ce = Vec::with_capacity(n);
            for i in 0..n {
                let (p, q) = (cell[i], cell[(i + 1) % n]);
                let key = (p.min(q), p.max(q));
                let sign = if p < q { 1.0 } else { -1.0 };
                let e = match lookup.get(&key) {
                    Some(&e) => {
                        let edge = &mut edges[e];
                        if edge.cells[1].is_some() {
                            return Err(Error::InvalidMesh(format!(
                                "edge ({}, {}) is shared by more than two cells",
                                key.0, key.1
                            )));
                        }
                        if edge.cells[0] == Some(ci) {
                            return Err(Error::InvalidCell {
                                cell: ci,
                                reason: "edge repeated in cell".into(),
                            });
                        }
                        edge.cells[1] = Some(ci);
                        e
                    }
                    None => {
                        edges.push(Edge {
                            vertices: [key.0, key.1],
                            cells: [Some(ci), None],
                        });
                        lookup.insert(key, edges.len() - 1);
                        edges.len() - 1
                    }
                };
                ce.push(CellEdge { edge: e, sign });
            }
            cell_edges.push(ce);
        }

        let mesh = PolyMesh {
            vertices,
            cells,
            edges,
            cell_edges,
            reoriented,
        };
        // Two cells sharing an edge must traverse it in opposite directions.
        for (e, edge) in mesh.edges.iter().enumerate() {
            if let [Some(a), Some(b)] = edge.cells {
                let sa = mesh.cell_edges[a]
                    .iter()
                    .find(|c| c.edge == e)
                    .unwrap()
                    .sign;
                let sb = mesh.cell_edges[b]
                    .iter()
                    .find(|c| c.edge == e)
                    .unwrap()
                    .sign;
                if sa + sb != 0.0 {
                    return Err(Error::InvalidMesh(format!(
                        "cells {a} and {b} overlap along edge {e}"
                    )));
                }
            }
        }
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn cell_edges(&self, cell: usize) -> &[CellEdge] {
        &self.cell_edges[cell]
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Cells whose vertex order was reversed during construction.
    pub fn reoriented_cells(&self) -> &[usize] {
        &self.reoriented
    }

    pub fn cell_points(&self, cell: usize) -> Vec<Point> {
        self.cells[cell].iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn cell_area(&self, cell: usize) -> f64 {
        signed_area(&self.cell_points(cell))
    }

    pub fn geometry(&self, cell: usize) -> CellGeometry {
        let pts = self.cell_points(cell);
        let n = pts.len();
        let area = signed_area(&pts);
        let centroid = polygon_centroid(&pts);
        let mut diameter: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                diameter = diameter.max(dist(pts[i], pts[j]));
            }
        }
        let edges = (0..n)
            .map(|i| {
                let (start, end) = (pts[i], pts[(i + 1) % n]);
                let length = dist(start, end);
                let tangent = [(end[0] - start[0]) / length, (end[1] - start[1]) / length];
                let ce = self.cell_edges[cell][i];
                let (origin, direction) = if ce.sign > 0.0 {
                    (start, tangent)
                } else {
                    (end, [-tangent[0], -tangent[1]])
                };
                EdgeGeometry {
                    edge: ce.edge,
                    sign: ce.sign,
                    start,
                    end,
                    length,
                    normal: [tangent[1], -tangent[0]],
                    tangent,
                    origin,
                    direction,
                }
            })
            .collect();
        CellGeometry {
            index: cell,
            vertices: pts,
            centroid,
            diameter,
            area,
            edges,
        }
    }

    /// Global unit normal `n_F` of an edge.
    pub fn edge_normal(&self, edge: usize) -> Point {
        let [a, b] = self.edges[edge].vertices;
        let (p, q) = (self.vertices[a], self.vertices[b]);
        let l = dist(p, q);
        [(q[1] - p[1]) / l, -(q[0] - p[0]) / l]
    }

    pub fn edge_length(&self, edge: usize) -> f64 {
        let [a, b] = self.edges[edge].vertices;
        dist(self.vertices[a], self.vertices[b])
    }

    /// Largest cell diameter.
    pub fn h_max(&self) -> f64 {
        (0..self.num_cells())
            .map(|c| self.geometry(c).diameter)
            .fold(0.0, f64::max)
    }

    /// Area enclosed by the boundary edges, computed independently of the cells.
    pub fn boundary_enclosed_area(&self) -> f64 {
        let mut a = 0.0;
        for (c, ces) in self.cell_edges.iter().enumerate() {
            let cell = &self.cells[c];
            for (i, ce) in ces.iter().enumerate() {
                if self.edges[ce.edge].is_boundary() {
                    let p = self.vertices[cell[i]];
                    let q = self.vertices[cell[(i + 1) % cell.len()]];
                    a += p[0] * q[1] - q[0] * p[1];
                }
            }
        }
        0.5 * a
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_cells()).map(|c| self.cell_area(c)).sum()
    }

    /// Checks the structural invariants every mesh handed to the solvers must
    /// satisfy: positive areas, area partition, edge incidences and
    /// star-shapedness with respect to the cell centroids.
    pub fn check_invariants(&self) -> Result<()> {
        for c in 0..self.num_cells() {
            if self.cell_area(c) <= 0.0 {
                return Err(Error::InvalidCell {
                    cell: c,
                    reason: "non-positive area".into(),
                });
            }
            self.geometry(c).subtriangulate()?;
        }
        let total = self.total_area();
        let enclosed = self.boundary_enclosed_area();
        if (total - enclosed).abs() > 1e-12 * enclosed.abs().max(1.0) {
            return Err(Error::InvalidMesh(format!(
                "cell areas sum to {total} but the boundary encloses {enclosed}"
            )));
        }
        for (e, edge) in self.edges.iter().enumerate() {
            if edge.cells[0].is_none() {
                return Err(Error::InvalidMesh(format!("edge {e} has no cell")));
            }
        }
        Ok(())
    }

    /// Reads a mesh from the JSON format `{"vertices": [[x, y], ...], "cells": [[i0, i1, ...], ...]}`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: MeshFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            msg: e.to_string(),
        })?;
        PolyMesh::new(file.vertices, file.cells)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    /// One vertex or cell per line; floats use the shortest round-trip form.
    pub fn to_json(&self) -> String {
        let mut s = String::from("{\n  \"vertices\": [\n");
        let nv = self.vertices.len();
        for (i, v) in self.vertices.iter().enumerate() {
            s.push_str("    ");
            s.push_str(&serde_json::to_string(v).expect("finite coordinates"));
            s.push_str(if i + 1 < nv { ",\n" } else { "\n" });
        }
        s.push_str("  ],\n  \"cells\": [\n");
        let nc = self.cells.len();
        for (i, c) in self.cells.iter().enumerate() {
            s.push_str("    ");
            s.push_str(&serde_json::to_string(c).expect("integer indices"));
            s.push_str(if i + 1 < nc { ",\n" } else { "\n" });
        }
        s.push_str("  ]\n}\n");
        s
    }
}

#[derive(Serialize, Deserialize)]
struct MeshFile {
    vertices: Vec<Point>,
    cells: Vec<Vec<usize>>,
}

pub(crate) fn dist(p: Point, q: Point) -> f64 {
    (p[0] - q[0]).hypot(p[1] - q[1])
}

/// Collects polygons given by coordinates and merges coincident vertices.
struct MeshBuilder {
    vertices: Vec<Point>,
    cells: Vec<Vec<usize>>,
    index: HashMap<(i64, i64), usize>,
    tol: f64,
}

impl MeshBuilder {
    fn new(tol: f64) -> Self {
        MeshBuilder {
            vertices: Vec::new(),
            cells: Vec::new(),
            index: HashMap::new(),
            tol,
        }
    }

    fn vertex(&mut self, p: Point) -> usize {
        let key = (
            (p[0] / self.tol).round() as i64,
            (p[1] / self.tol).round() as i64,
        );
        *self.index.entry(key).or_insert_with(|| {
            self.vertices.push(p);
            self.vertices.len() - 1
        })
    }

    fn polygon(&mut self, pts: &[Point]) {
        let mut cell: Vec<usize> = Vec::with_capacity(pts.len());
        for &p in pts {
            let v = self.vertex(p);
            if cell.last() != Some(&v) {
                cell.push(v);
            }
        }
        if cell.len() > 1 && cell.first() == cell.last() {
            cell.pop();
        }
        self.cells.push(cell);
    }

    fn build(self) -> Result<PolyMesh> {
        PolyMesh::new(self.vertices, self.cells)
    }
}

fn check_count(name: &str, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument(format!("{name} must be at least 1")));
    }
    Ok(())
}

fn push_triangles(b: &mut MeshBuilder, nx: usize, ny: usize, rect: Rect) {
    let p = |i: usize, j: usize| rect.map(i as f64 / nx as f64, j as f64 / ny as f64);
    for j in 0..ny {
        for i in 0..nx {
            b.polygon(&[p(i, j), p(i + 1, j), p(i + 1, j + 1)]);
            b.polygon(&[p(i, j), p(i + 1, j + 1), p(i, j + 1)]);
        }
    }
}

/// `nx x ny` grid on `rect`, each square split along its lower-left to
/// upper-right diagonal.
pub fn uniform_triangles(nx: usize, ny: usize, rect: Rect) -> Result<PolyMesh> {
    check_count("nx", nx)?;
    check_count("ny", ny)?;
    let mut b = MeshBuilder::new(1e-10 * rect.area().sqrt());
    push_triangles(&mut b, nx, ny, rect);
    b.build()
}

/// Clips a convex polygon to `[0, w] x [0, h]` (Sutherland-Hodgman).
fn clip_to_box(poly: &[Point], w: f64, h: f64) -> Vec<Point> {
    let planes: [(usize, f64, f64); 4] = [(0, 0.0, 1.0), (0, w, -1.0), (1, 0.0, 1.0), (1, h, -1.0)];
    let mut out = poly.to_vec();
    for &(axis, level, dir) in &planes {
        if out.is_empty() {
            break;
        }
        let inside = |p: &Point| (p[axis] - level) * dir >= -1e-12;
        let input = std::mem::take(&mut out);
        let n = input.len();
        for i in 0..n {
            let s = input[(i + n - 1) % n];
            let e = input[i];
            let cross = |s: Point, e: Point| {
                let t = (level - s[axis]) / (e[axis] - s[axis]);
                let mut p = [s[0] + t * (e[0] - s[0]), s[1] + t * (e[1] - s[1])];
                p[axis] = level;
                p
            };
            if inside(&e) {
                if !inside(&s) {
                    out.push(cross(s, e));
                }
                out.push(e);
            } else if inside(&s) {
                out.push(cross(s, e));
            }
        }
    }
    let mut dedup: Vec<Point> = Vec::with_capacity(out.len());
    for p in out {
        if dedup.last().is_none_or(|q| dist(*q, p) > 1e-9) {
            dedup.push(p);
        }
    }
    while dedup.len() > 1 && dist(dedup[0], *dedup.last().unwrap()) <= 1e-9 {
        dedup.pop();
    }
    dedup
}

fn push_hexagons(b: &mut MeshBuilder, n: usize, rect: Rect) {
    // Hexagon tiling in lattice units: rows of centres at integer y, even rows
    // at integer x, odd rows shifted by one half. The box [0, n]^2 cuts the
    // boundary rows and columns through hexagon centres or along whole edges.
    const HEX: [Point; 6] = [
        [0.0, 2.0 / 3.0],
        [-0.5, 1.0 / 3.0],
        [-0.5, -1.0 / 3.0],
        [0.0, -2.0 / 3.0],
        [0.5, -1.0 / 3.0],
        [0.5, 1.0 / 3.0],
    ];
    let nf = n as f64;
    for j in 0..=n {
        let shift = if j % 2 == 1 { 0.5 } else { 0.0 };
        for i in -1..=(n as i64 + 1) {
            let c = [i as f64 + shift, j as f64];
            let hex: Vec<Point> = HEX.iter().map(|d| [c[0] + d[0], c[1] + d[1]]).collect();
            let clipped = clip_to_box(&hex, nf, nf);
            if clipped.len() < 3 || signed_area(&clipped) < 1e-9 {
                continue;
            }
            // Snap lattice coordinates (multiples of 1/6) before mapping.
            let pts: Vec<Point> = clipped
                .iter()
                .map(|p| {
                    let sx = (p[0] * 6.0).round() / (6.0 * nf);
                    let sy = (p[1] * 6.0).round() / (6.0 * nf);
                    rect.map(sx, sy)
                })
                .collect();
            b.polygon(&pts);
        }
    }
}

/// Hexagonal tiling with `n` hexagon rows and columns clipped to `rect`.
/// Interior cells are hexagons; boundary cells are clipped halves and quarters.
pub fn hex_dominant(n: usize, rect: Rect) -> Result<PolyMesh> {
    check_count("n", n)?;
    let mut b = MeshBuilder::new(1e-10 * rect.area().sqrt());
    push_hexagons(&mut b, n, rect);
    b.build()
}

/// The L-shaped domain `(-1, 1)^2 \ [0, 1) x (-1, 0]` built from three unit
/// patches, each meshed like an `n x n` square.
///
/// Polygonal meshes need even `n` so that the hexagon rows meet conformingly
/// across the patch interfaces.
pub fn lshape(n: usize, kind: CellKind) -> Result<PolyMesh> {
    check_count("n", n)?;
    if kind == CellKind::Polygons && n % 2 == 1 {
        return Err(Error::InvalidArgument(format!(
            "polygonal L-shape needs even n, got {n}"
        )));
    }
    let patches = [
        Rect::new(-1.0, -1.0, 0.0, 0.0),
        Rect::new(-1.0, 0.0, 0.0, 1.0),
        Rect::new(0.0, 0.0, 1.0, 1.0),
    ];
    let mut b = MeshBuilder::new(1e-10);
    for rect in patches {
        match kind {
            CellKind::Triangles => push_triangles(&mut b, n, n, rect),
            CellKind::Polygons => push_hexagons(&mut b, n, rect),
        }
    }
    b.build()
}
