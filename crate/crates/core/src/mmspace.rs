//! Finite metric-measure spaces and their local distance distributions.
//!
//! A shape with points `x_1..x_N`, a metric and the uniform measure is mapped
//! to the 1D meta-measure `(1/N) sum_i delta_{d(x_i, .)_# mu}`: one inner
//! measure per point, holding that point's distances to every point
//! (itself included). Isometric copies map to the same meta-measure.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};
use std::fs;
use std::path::Path;

use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measures::{build_meta, EmpiricalMeasure, MetaMeasure};
use crate::sqw_dsw::{sqw_with_config, DistanceEstimate, SlicingConfig};

/// Symmetric distance matrix with zero diagonal, uniform measure.
#[derive(Debug, Clone, PartialEq)]
pub struct MMSpace {
    distances: Array2<f64>,
    pub label: Option<String>,
}

impl MMSpace {
    pub fn new(distances: Array2<f64>, label: Option<String>) -> Result<Self> {
        let (n, m) = distances.dim();
        if n == 0 || n != m {
            return Err(Error::InvalidArgument(format!(
                "distance matrix must be square and nonempty, got {n}x{m}"
            )));
        }
        for i in 0..n {
            if distances[[i, i]] != 0.0 {
                return Err(Error::InvalidArgument(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let v = distances[[i, j]];
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::InvalidArgument(format!("invalid distance {v} at ({i}, {j})")));
                }
                if (v - distances[[j, i]]).abs() > 1e-9 {
                    return Err(Error::InvalidArgument(format!("asymmetric distances at ({i}, {j})")));
                }
            }
        }
        Ok(Self { distances, label })
    }

    pub fn size(&self) -> usize {
        self.distances.nrows()
    }

    pub fn distances(&self) -> &Array2<f64> {
        &self.distances
    }
}

/// Undirected weighted edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub length: f64,
}

/// Input accepted by the shape pipeline.
#[derive(Debug, Clone)]
pub enum ShapeInput {
    /// Point cloud with Euclidean distances.
    Points(Array2<f64>),
    /// Vertices plus an edge graph; shortest-path distances.
    Graph { points: Array2<f64>, edges: Vec<Edge> },
    Precomputed(MMSpace),
}

impl ShapeInput {
    pub fn to_mmspace(&self) -> Result<MMSpace> {
        match self {
            ShapeInput::Points(p) => euclidean_mmspace(p),
            ShapeInput::Graph { points, edges } => geodesic_mmspace(points, edges),
            ShapeInput::Precomputed(m) => Ok(m.clone()),
        }
    }
}

/// Pairwise Euclidean distances of the rows of `points`.
pub fn euclidean_mmspace(points: &Array2<f64>) -> Result<MMSpace> {
    let n = points.nrows();
    if n == 0 {
        return Err(Error::Empty("shape has no points".into()));
    }
    let mut d = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let v = points
                .row(i)
                .iter()
                .zip(points.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            d[[i, j]] = v;
            d[[j, i]] = v;
        }
    }
    MMSpace::new(d, None)
}

#[derive(PartialEq)]
struct Visit(f64, usize);

impl Eq for Visit {}

impl Ord for Visit {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, then index
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Visit {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra(adj: &[Vec<(usize, f64)>], source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adj.len()];
    dist[source] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(Visit(0.0, source));
    while let Some(Visit(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, w) in &adj[u] {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Visit(nd, v));
            }
        }
    }
    dist
}

/// All-pairs shortest-path distances over an undirected edge graph.
pub fn geodesic_mmspace(points: &Array2<f64>, edges: &[Edge]) -> Result<MMSpace> {
    let n = points.nrows();
    if n == 0 {
        return Err(Error::Empty("shape has no vertices".into()));
    }
    let mut adj = vec![Vec::new(); n];
    for e in edges {
        if e.i >= n || e.j >= n {
            return Err(Error::InvalidArgument(format!(
                "edge ({}, {}) out of range for {n} vertices",
                e.i, e.j
            )));
        }
        if !(e.length > 0.0 && e.length.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "edge ({}, {}) has non-positive length {}",
                e.i, e.j, e.length
            )));
        }
        adj[e.i].push((e.j, e.length));
        adj[e.j].push((e.i, e.length));
    }
    let rows: Vec<Vec<f64>> = (0..n).into_par_iter().map(|s| dijkstra(&adj, s)).collect();
    let mut d = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let v = rows[i][j];
            if !v.is_finite() {
                return Err(Error::Disconnected { from: i, to: j });
            }
            // shortest paths are symmetric; take one side to make it exact
            d[[i, j]] = if i <= j { v } else { rows[j][i] };
        }
    }
    MMSpace::new(d, None)
}

/// Triangle mesh read from an OFF file.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Array2<f64>,
    pub triangles: Vec<[usize; 3]>,
}

/// Parse OFF text: header `OFF`, counts `nv nf ne`, vertex lines, face lines.
pub fn parse_off(text: &str) -> Result<Mesh> {
    let mut tokens = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(str::split_whitespace);
    let bad = |msg: &str| Error::Parse {
        line: 0,
        msg: format!("OFF: {msg}"),
    };
    let head = tokens.next().ok_or_else(|| bad("empty file"))?;
    let first_count = if head == "OFF" {
        tokens.next().ok_or_else(|| bad("missing counts"))?
    } else if let Some(rest) = head.strip_prefix("OFF") {
        rest
    } else {
        return Err(bad("missing OFF header"));
    };
    let next_usize = |t: Option<&str>| -> Result<usize> {
        t.ok_or_else(|| bad("unexpected end of file"))?
            .parse()
            .map_err(|_| bad("invalid integer"))
    };
    let nv = next_usize(Some(first_count))?;
    let nf = next_usize(tokens.next())?;
    let _ne = next_usize(tokens.next())?;
    let mut verts = Vec::with_capacity(nv * 3);
    for _ in 0..nv * 3 {
        let v: f64 = tokens
            .next()
            .ok_or_else(|| bad("truncated vertex list"))?
            .parse()
            .map_err(|_| bad("invalid vertex coordinate"))?;
        verts.push(v);
    }
    let mut triangles = Vec::with_capacity(nf);
    for _ in 0..nf {
        let k = next_usize(tokens.next())?;
        let idx: Vec<usize> = (0..k)
            .map(|_| next_usize(tokens.next()))
            .collect::<Result<_>>()?;
        if idx.iter().any(|&i| i >= nv) {
            return Err(bad("face index out of range"));
        }
        // fan-triangulate polygons
        for t in 1..k.saturating_sub(1) {
            triangles.push([idx[0], idx[t], idx[t + 1]]);
        }
    }
    let vertices = Array2::from_shape_vec((nv, 3), verts).map_err(|e| bad(&e.to_string()))?;
    Ok(Mesh { vertices, triangles })
}

pub fn read_off(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_off(&text)
}

/// Unique triangle edges with Euclidean lengths.
pub fn mesh_to_edges(mesh: &Mesh) -> Vec<Edge> {
    let mut set = BTreeSet::new();
    for t in &mesh.triangles {
        for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            if a != b {
                set.insert((a.min(b), a.max(b)));
            }
        }
    }
    let v = &mesh.vertices;
    set.into_iter()
        .map(|(i, j)| Edge {
            i,
            j,
            length: v
                .row(i)
                .iter()
                .zip(v.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
        })
        .collect()
}

/// One inner measure per point: uniform on that point's distance row.
pub fn local_distance_distribution(space: &MMSpace) -> MetaMeasure {
    let inner = space
        .distances
        .rows()
        .into_iter()
        .map(|row| EmpiricalMeasure::from_values(&row.to_vec()).expect("valid row"))
        .collect();
    build_meta(inner, None).expect("nonempty, one-dimensional")
}

/// SQW between the local distance distributions of two shapes.
pub fn sqw_shape_distance(x: &ShapeInput, y: &ShapeInput, config: &SlicingConfig) -> Result<DistanceEstimate> {
    let a = local_distance_distribution(&x.to_mmspace()?);
    let b = local_distance_distribution(&y.to_mmspace()?);
    sqw_with_config(&a, &b, config)
}
