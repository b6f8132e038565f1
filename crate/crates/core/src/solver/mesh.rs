//! Ring triangulation of the unit disc.

use crate::error::{invalid, Result};
use crate::geom::PlaneVec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::TAU;

/// Conforming triangulation of the unit disc with precomputed element geometry.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiscDomain {
    pub h: f64,
    /// Number of rings; ring `k` has `6k` nodes on the circle of radius `k / rings`.
    pub rings: usize,
    pub nodes: Vec<PlaneVec>,
    /// Counterclockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary_nodes: Vec<usize>,
    pub is_boundary: Vec<bool>,
    pub areas: Vec<f64>,
    /// Gradients of the three barycentric hat functions per triangle.
    pub shape_grads: Vec<[PlaneVec; 3]>,
    pub centroids: Vec<PlaneVec>,
}

/// Triangles between two consecutive rings of equally spaced nodes starting at angle 0,
/// merged by angle.
fn zip_rings(inner: &[usize], outer: &[usize], tris: &mut Vec<[usize; 3]>) {
    let (ni, no) = (inner.len(), outer.len());
    let (mut i, mut j) = (0usize, 0usize);
    while i < ni || j < no {
        let next_in = if i < ni { (i + 1) as f64 / ni as f64 } else { f64::INFINITY };
        let next_out = if j < no { (j + 1) as f64 / no as f64 } else { f64::INFINITY };
        let (a, b) = (inner[i % ni], outer[j % no]);
        if next_out <= next_in {
            tris.push([a, b, outer[(j + 1) % no]]);
            j += 1;
        } else {
            tris.push([a, b, inner[(i + 1) % ni]]);
            i += 1;
        }
    }
}

/// Builds the ring mesh with `ceil(1/h)` rings.
pub fn build_disc_mesh(h: f64) -> Result<DiscDomain> {
    if !(h > 0.0 && h <= 0.5) {
        return Err(invalid(format!("mesh size must lie in (0, 0.5], got {h}")));
    }
    let rings = (1.0 / h - 1e-9).ceil().max(1.0) as usize;
    let mut nodes = vec![PlaneVec::ZERO];
    let mut ring_ids: Vec<Vec<usize>> = vec![vec![0]];
    for k in 1..=rings {
        let count = 6 * k;
        let radius = k as f64 / rings as f64;
        let mut ids = Vec::with_capacity(count);
        for j in 0..count {
            let t = TAU * j as f64 / count as f64;
            ids.push(nodes.len());
            nodes.push(if k == rings { PlaneVec::new(t.cos(), t.sin()) } else { PlaneVec::polar(radius, t) });
        }
        ring_ids.push(ids);
    }
    let mut triangles = Vec::with_capacity(6 * rings * rings);
    for j in 0..6 {
        triangles.push([0, ring_ids[1][j], ring_ids[1][(j + 1) % 6]]);
    }
    for k in 2..=rings {
        zip_rings(&ring_ids[k - 1], &ring_ids[k], &mut triangles);
    }
    let boundary_nodes = ring_ids[rings].clone();
    let mut is_boundary = vec![false; nodes.len()];
    for &b in &boundary_nodes {
        is_boundary[b] = true;
    }
    let mut areas = Vec::with_capacity(triangles.len());
    let mut shape_grads = Vec::with_capacity(triangles.len());
    let mut centroids = Vec::with_capacity(triangles.len());
    for t in &triangles {
        let [a, b, c] = t.map(|i| nodes[i]);
        let twice = (b - a).cross(c - a);
        areas.push(0.5 * twice);
        // ∇φ_a = rot(c − b)/(2|T|), cyclically.
        let g = |p: PlaneVec, q: PlaneVec| (q - p).rot() * (1.0 / twice);
        shape_grads.push([g(b, c), g(c, a), g(a, b)]);
        centroids.push((a + b + c) * (1.0 / 3.0));
    }
    Ok(DiscDomain { h, rings, nodes, triangles, boundary_nodes, is_boundary, areas, shape_grads, centroids })
}

/// Quality summary used by the mesh invariants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshQuality {
    pub min_angle_deg: f64,
    pub max_angle_deg: f64,
    pub min_area: f64,
    pub max_edge: f64,
    pub boundary_radius_error: f64,
}

impl DiscDomain {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    /// Node closest to the origin (the center node by construction).
    pub fn center_node(&self) -> usize {
        0
    }

    pub fn quality(&self) -> MeshQuality {
        let mut q = MeshQuality {
            min_angle_deg: 180.0,
            max_angle_deg: 0.0,
            min_area: f64::INFINITY,
            max_edge: 0.0,
            boundary_radius_error: 0.0,
        };
        for (t, &area) in self.triangles.iter().zip(&self.areas) {
            let p = t.map(|i| self.nodes[i]);
            for k in 0..3 {
                let (a, b, c) = (p[k], p[(k + 1) % 3], p[(k + 2) % 3]);
                let (u, v) = (b - a, c - a);
                let ang = u.cross(v).atan2(u.dot(v)).abs().to_degrees();
                q.min_angle_deg = q.min_angle_deg.min(ang);
                q.max_angle_deg = q.max_angle_deg.max(ang);
                q.max_edge = q.max_edge.max(u.norm());
            }
            q.min_area = q.min_area.min(area);
        }
        for &b in &self.boundary_nodes {
            q.boundary_radius_error = q.boundary_radius_error.max((self.nodes[b].norm() - 1.0).abs());
        }
        q
    }

    /// Interior node adjacency (sorted, including the diagonal), for sparse patterns.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj: Vec<Vec<usize>> = (0..self.nodes.len()).map(|i| vec![i]).collect();
        for t in &self.triangles {
            for &a in t {
                for &b in t {
                    adj[a].push(b);
                }
            }
        }
        for row in &mut adj {
            row.sort_unstable();
            row.dedup();
        }
        adj
    }

    /// SHA-256 over node coordinates and connectivity.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        for p in &self.nodes {
            hasher.update(p.x.to_le_bytes());
            hasher.update(p.y.to_le_bytes());
        }
        for t in &self.triangles {
            for i in t {
                hasher.update((*i as u64).to_le_bytes());
            }
        }
        hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Triangles whose closure meets the closed disc of radius `r` around the origin.
    pub fn triangles_meeting_ball(&self, r: f64) -> Vec<usize> {
        (0..self.triangles.len()).filter(|&k| self.triangle_distance_to_origin(k) <= r).collect()
    }

    /// Distance from the origin to triangle `k`.
    pub fn triangle_distance_to_origin(&self, k: usize) -> f64 {
        let p = self.triangles[k].map(|i| self.nodes[i]);
        // Inside test by orientation.
        let inside = (0..3).all(|e| (p[(e + 1) % 3] - p[e]).cross(PlaneVec::ZERO - p[e]) >= 0.0);
        if inside {
            return 0.0;
        }
        (0..3)
            .map(|e| segment_distance(PlaneVec::ZERO, p[e], p[(e + 1) % 3]))
            .fold(f64::INFINITY, f64::min)
    }
}

pub(crate) fn segment_distance(x: PlaneVec, a: PlaneVec, b: PlaneVec) -> f64 {
    let d = b - a;
    let t = ((x - a).dot(d) / d.norm_sq()).clamp(0.0, 1.0);
    (a + d * t).dist(x)
}
