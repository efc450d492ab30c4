//! Leaf-space R-tree of the vertical (or horizontal) foliation of the
//! symmetric family, with tree-metric queries and a quadrature cross-check
//! of the edge length.

use std::collections::VecDeque;
use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::polyfield::{family_roots, PolyError, SymmetricFamily};
use crate::quaddiff::{Foliation, QuadDiffError, QuadraticDifferential};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TreeError {
    #[error("invalid location on tree: {0}")]
    InvalidLocation(String),
    #[error("outer root index {k} out of range for m = {m}")]
    BadIndex { k: usize, m: u32 },
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Quad(#[from] QuadDiffError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexLabel {
    /// The zero of order `m - 1` at the origin (`m >= 2`).
    Center,
    /// Midpoint of the single finite edge when `m = 1`; not a zero of `P`.
    Midpoint,
    /// The zero `ω^k η`.
    Outer(usize),
    /// All zeros merged into one vertex (edge parameter zero).
    Collapsed,
}

impl VertexLabel {
    pub fn name(&self) -> String {
        match self {
            VertexLabel::Center => "center".into(),
            VertexLabel::Midpoint => "midpoint".into(),
            VertexLabel::Outer(k) => format!("outer{k}"),
            VertexLabel::Collapsed => "collapsed".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeVertex {
    pub id: usize,
    /// Order of the zero of `P` this vertex represents (0 for the midpoint).
    pub multiplicity: u32,
    pub label: VertexLabel,
    /// Position of the corresponding point in the plane.
    pub location: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteEdge {
    pub a: usize,
    pub b: usize,
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfiniteEdge {
    pub vertex: usize,
    /// Index of the end domain, counterclockwise from the one whose center
    /// direction is the smallest nonnegative angle.
    pub ray: usize,
    /// Center direction of the end domain.
    pub direction: f64,
}

/// A point of a [`MetricTree`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PointOnTree {
    Vertex(usize),
    /// `offset` is measured from `edge.a`.
    Finite { edge: usize, offset: f64 },
    /// `offset` is measured from the ray's vertex.
    Infinite { ray: usize, offset: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricTree {
    pub foliation: Foliation,
    pub m: u32,
    /// `|b|` for the vertical tree, `|a|` for the horizontal one.
    pub edge_parameter: f64,
    pub vertices: Vec<TreeVertex>,
    pub finite_edges: Vec<FiniteEdge>,
    /// Sorted by ray index, i.e. in cyclic order.
    pub infinite_edges: Vec<InfiniteEdge>,
}

/// Leaf-space tree of the given foliation of `[z^{2m} - c z^{m-1}] dz²`.
///
/// For `m >= 2` this is a star with `m + 1` edges of length
/// `π p / (2(m+1))` around the center (`p` is the edge parameter). For
/// `m = 1` the single edge of length `π p / 2` is split at an explicit
/// midpoint so that every outer vertex sits at distance `π p / 4` from the
/// center node. With `p = 0` all zeros collapse to one vertex carrying all
/// `2m + 2` rays.
pub fn build_family_tree(f: &SymmetricFamily, foliation: Foliation) -> MetricTree {
    let m = f.m();
    let nrays = 2 * m as usize + 2;
    let spacing = PI / (m as f64 + 1.0);
    let offset = match foliation {
        Foliation::Vertical => 0.0,
        Foliation::Horizontal => 0.5 * spacing,
    };
    let param = match foliation {
        Foliation::Vertical => f.b().abs(),
        Foliation::Horizontal => f.a().abs(),
    };
    let direction = |j: usize| offset + spacing * j as f64;

    if param == 0.0 {
        return MetricTree {
            foliation,
            m,
            edge_parameter: 0.0,
            vertices: vec![TreeVertex {
                id: 0,
                multiplicity: 2 * m,
                label: VertexLabel::Collapsed,
                location: Complex64::new(0.0, 0.0),
            }],
            finite_edges: Vec::new(),
            infinite_edges: (0..nrays)
                .map(|j| InfiniteEdge { vertex: 0, ray: j, direction: direction(j) })
                .collect(),
        };
    }

    let outer = family_roots(f).expect("c is nonzero when the edge parameter is").outer;
    let len = PI * param / (2.0 * (m as f64 + 1.0));
    let mut vertices = vec![TreeVertex {
        id: 0,
        multiplicity: m - 1,
        label: if m == 1 { VertexLabel::Midpoint } else { VertexLabel::Center },
        location: Complex64::new(0.0, 0.0),
    }];
    let mut finite_edges = Vec::new();
    let mut owner = vec![0usize; nrays];
    for (k, &z) in outer.iter().enumerate() {
        let id = k + 1;
        vertices.push(TreeVertex {
            id,
            multiplicity: 1,
            label: VertexLabel::Outer(k),
            location: z,
        });
        finite_edges.push(FiniteEdge { a: 0, b: id, length: len });
        // the zero sits strictly inside the sector between two adjacent
        // ray directions and owns both of them
        let sector = ((z.arg() - offset).rem_euclid(2.0 * PI) / spacing).floor() as usize % nrays;
        owner[sector] = id;
        owner[(sector + 1) % nrays] = id;
    }
    MetricTree {
        foliation,
        m,
        edge_parameter: param,
        vertices,
        finite_edges,
        infinite_edges: (0..nrays)
            .map(|j| InfiniteEdge { vertex: owner[j], ray: j, direction: direction(j) })
            .collect(),
    }
}

impl MetricTree {
    pub fn outer_vertex(&self, k: usize) -> Option<usize> {
        self.vertices
            .iter()
            .find(|v| v.label == VertexLabel::Outer(k))
            .map(|v| v.id)
    }

    /// Finite edges with degree-two midpoint vertices merged away, as
    /// `(vertex, vertex, length)`.
    pub fn merged_edges(&self) -> Vec<(usize, usize, f64)> {
        if self.vertices.iter().any(|v| v.label == VertexLabel::Midpoint) {
            let total = self.finite_edges.iter().map(|e| e.length).sum();
            let ends: Vec<usize> = self.finite_edges.iter().map(|e| e.b).collect();
            vec![(ends[0], ends[1], total)]
        } else {
            self.finite_edges.iter().map(|e| (e.a, e.b, e.length)).collect()
        }
    }

    /// Rays owned by `vertex`, in cyclic order.
    pub fn rays_of(&self, vertex: usize) -> Vec<usize> {
        self.infinite_edges
            .iter()
            .filter(|e| e.vertex == vertex)
            .map(|e| e.ray)
            .collect()
    }

    fn vertex_distances(&self, from: usize) -> Vec<f64> {
        let n = self.vertices.len();
        let mut dist = vec![f64::INFINITY; n];
        dist[from] = 0.0;
        let mut queue = VecDeque::from([from]);
        while let Some(v) = queue.pop_front() {
            for e in &self.finite_edges {
                let other = if e.a == v {
                    e.b
                } else if e.b == v {
                    e.a
                } else {
                    continue;
                };
                if dist[other].is_infinite() {
                    dist[other] = dist[v] + e.length;
                    queue.push_back(other);
                }
            }
        }
        dist
    }

    /// Vertex anchors of a point: `(vertex, distance to it)`.
    fn anchors(&self, p: PointOnTree) -> Result<Vec<(usize, f64)>, TreeError> {
        match p {
            PointOnTree::Vertex(v) => {
                if v >= self.vertices.len() {
                    return Err(TreeError::InvalidLocation(format!("no vertex {v}")));
                }
                Ok(vec![(v, 0.0)])
            }
            PointOnTree::Finite { edge, offset } => {
                let e = self
                    .finite_edges
                    .get(edge)
                    .ok_or_else(|| TreeError::InvalidLocation(format!("no finite edge {edge}")))?;
                if !(0.0..=e.length).contains(&offset) {
                    return Err(TreeError::InvalidLocation(format!(
                        "offset {offset} outside [0, {}] on edge {edge}",
                        e.length
                    )));
                }
                Ok(vec![(e.a, offset), (e.b, e.length - offset)])
            }
            PointOnTree::Infinite { ray, offset } => {
                let e = self
                    .infinite_edges
                    .iter()
                    .find(|e| e.ray == ray)
                    .ok_or_else(|| TreeError::InvalidLocation(format!("no ray {ray}")))?;
                if !(offset >= 0.0 && offset.is_finite()) {
                    return Err(TreeError::InvalidLocation(format!("bad ray offset {offset}")));
                }
                Ok(vec![(e.vertex, offset)])
            }
        }
    }

    /// Length of the unique path between two points.
    pub fn distance(&self, p: PointOnTree, q: PointOnTree) -> Result<f64, TreeError> {
        let pa = self.anchors(p)?;
        let qa = self.anchors(q)?;
        match (p, q) {
            (PointOnTree::Finite { edge: e1, offset: o1 }, PointOnTree::Finite { edge: e2, offset: o2 })
                if e1 == e2 =>
            {
                return Ok((o1 - o2).abs())
            }
            (PointOnTree::Infinite { ray: r1, offset: o1 }, PointOnTree::Infinite { ray: r2, offset: o2 })
                if r1 == r2 =>
            {
                return Ok((o1 - o2).abs())
            }
            _ => {}
        }
        let mut best = f64::INFINITY;
        for &(u, du) in &pa {
            let dist = self.vertex_distances(u);
            for &(v, dv) in &qa {
                best = best.min(du + dist[v] + dv);
            }
        }
        Ok(best)
    }
}

/// Free-function form of [`MetricTree::distance`].
pub fn tree_distance(t: &MetricTree, p: PointOnTree, q: PointOnTree) -> Result<f64, TreeError> {
    t.distance(p, q)
}

/// `|Re(ζ(ω^k η) - ζ(0))|` along the straight segment from the origin to
/// the `k`-th outer root, by numerical quadrature.
pub fn measure_edge_numeric(f: &SymmetricFamily, k: usize) -> Result<f64, TreeError> {
    let roots = family_roots(f)?;
    if k > f.m() as usize {
        return Err(TreeError::BadIndex { k, m: f.m() });
    }
    let q = QuadraticDifferential::new(f.expand())?;
    let target = roots.outer[k];
    let path = q.integrate(&[Complex64::new(0.0, 0.0), target], target.norm() / 4.0, None)?;
    Ok(path.zeta().re.abs())
}
