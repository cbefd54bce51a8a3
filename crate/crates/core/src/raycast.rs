//! Closest-hit ray queries with per-query mesh exclusion.

use std::sync::Arc;

use crate::geometry::{Ray, Vec3};
use crate::scene::{FrameScene, TriangleMesh};

/// Hits closer than this to the ray origin are ignored.
pub const T_EPSILON: f64 = 1e-6;
/// Determinant magnitude below which a ray counts as parallel to a triangle.
pub const PARALLEL_EPSILON: f64 = 1e-12;
/// Hits whose `t` differ by no more than this are ties.
pub const TIE_EPSILON: f64 = 1e-9;
pub const MAX_LEAF_SIZE: usize = 4;

/// Möller-Trumbore intersection. Edges and vertices count as hits.
#[inline]
pub fn intersect_ray_triangle(ray: &Ray, v0: Vec3, v1: Vec3, v2: Vec3) -> Option<f64> {
    let e1 = v1 - v0;
    let e2 = v2 - v0;
    let p = ray.direction.cross(e2);
    let det = e1.dot(p);
    if det.abs() < PARALLEL_EPSILON {
        return None;
    }
    let inv = 1.0 / det;
    let s = ray.origin - v0;
    let u = s.dot(p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(e1);
    let v = ray.direction.dot(q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(q) * inv;
    (t > T_EPSILON).then_some(t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub point: Vec3,
    pub ooi_label: Arc<str>,
    pub mesh_id: u32,
    pub triangle_index: u32,
}

#[derive(Debug, Clone, Copy)]
struct Aabb {
    min: Vec3,
    max: Vec3,
}

impl Aabb {
    const EMPTY: Aabb = Aabb {
        min: Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
        max: Vec3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
    };

    fn grow(&mut self, p: Vec3) {
        self.min = self.min.min(p);
        self.max = self.max.max(p);
    }

    fn longest_axis(&self) -> usize {
        let d = self.max - self.min;
        if d.x >= d.y && d.x >= d.z {
            0
        } else if d.y >= d.z {
            1
        } else {
            2
        }
    }

    /// Entry distance of the ray into the box, if it overlaps `[0, t_max]`.
    #[inline]
    fn entry(&self, origin: Vec3, inv_dir: Vec3, t_max: f64) -> Option<f64> {
        let mut t0 = 0.0f64;
        let mut t1 = t_max;
        for a in 0..3 {
            let o = origin.axis(a);
            let inv = inv_dir.axis(a);
            let mut near = (self.min.axis(a) - o) * inv;
            let mut far = (self.max.axis(a) - o) * inv;
            if near > far {
                std::mem::swap(&mut near, &mut far);
            }
            // NaN (0 * inf) keeps the current bound.
            if near > t0 {
                t0 = near;
            }
            if far < t1 {
                t1 = far;
            }
        }
        // Slack keeps the box test conservative against rounding.
        let slack = 1e-9 * (1.0 + t1.abs());
        (t0 <= t1 + slack).then_some(t0)
    }
}

#[derive(Debug, Clone, Copy)]
struct PackedTriangle {
    v0: Vec3,
    v1: Vec3,
    v2: Vec3,
    mesh_id: u32,
    triangle_index: u32,
}

#[derive(Debug, Clone, Copy)]
struct Node {
    bounds: Aabb,
    /// Leaf: first triangle; interior: index of the left child (right child
    /// follows the left subtree, stored at `right`).
    start: u32,
    count: u32,
    right: u32,
}

/// Bounding volume hierarchy over a set of labeled meshes.
#[derive(Debug, Clone, Default)]
pub struct Bvh {
    nodes: Vec<Node>,
    triangles: Vec<PackedTriangle>,
    labels: Vec<(u32, Arc<str>)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    t: f64,
    mesh_id: u32,
    triangle_index: u32,
}

impl Candidate {
    /// Smaller `t` wins; ties within [`TIE_EPSILON`] go to the lower mesh id,
    /// then the lower triangle index.
    #[inline]
    fn beats(&self, other: &Candidate) -> bool {
        if self.t < other.t - TIE_EPSILON {
            return true;
        }
        if self.t > other.t + TIE_EPSILON {
            return false;
        }
        (self.mesh_id, self.triangle_index) < (other.mesh_id, other.triangle_index)
    }
}

fn better(best: Option<Candidate>, c: Candidate) -> Option<Candidate> {
    match best {
        Some(b) if !c.beats(&b) => Some(b),
        _ => Some(c),
    }
}

impl Bvh {
    /// Builds from `(mesh_id, label, mesh)` entries using median splits on
    /// the longest centroid axis, with at most [`MAX_LEAF_SIZE`] triangles per
    /// leaf.
    pub fn build<'a>(meshes: impl IntoIterator<Item = (u32, &'a str, &'a TriangleMesh)>) -> Bvh {
        let mut triangles = Vec::new();
        let mut labels = Vec::new();
        for (mesh_id, label, mesh) in meshes {
            labels.push((mesh_id, Arc::<str>::from(label)));
            for (i, t) in mesh.triangles.iter().enumerate() {
                triangles.push(PackedTriangle {
                    v0: mesh.vertices[t[0] as usize],
                    v1: mesh.vertices[t[1] as usize],
                    v2: mesh.vertices[t[2] as usize],
                    mesh_id,
                    triangle_index: i as u32,
                });
            }
        }
        labels.sort_by_key(|(id, _)| *id);
        labels.dedup_by_key(|(id, _)| *id);
        let mut bvh = Bvh { nodes: Vec::new(), triangles, labels };
        if !bvh.triangles.is_empty() {
            let n = bvh.triangles.len();
            bvh.nodes.reserve(2 * n / MAX_LEAF_SIZE + 1);
            bvh.build_node(0, n);
        }
        bvh
    }

    pub fn from_scene(scene: &FrameScene) -> Bvh {
        Bvh::build(scene.all_entries())
    }

    fn build_node(&mut self, start: usize, end: usize) -> u32 {
        let mut bounds = Aabb::EMPTY;
        let mut centroids = Aabb::EMPTY;
        for t in &self.triangles[start..end] {
            bounds.grow(t.v0);
            bounds.grow(t.v1);
            bounds.grow(t.v2);
            centroids.grow(centroid(t));
        }
        let idx = self.nodes.len() as u32;
        self.nodes.push(Node { bounds, start: start as u32, count: (end - start) as u32, right: 0 });
        if end - start <= MAX_LEAF_SIZE {
            return idx;
        }
        let axis = centroids.longest_axis();
        let mid = start + (end - start) / 2;
        self.triangles[start..end].select_nth_unstable_by(mid - start, |a, b| {
            centroid(a).axis(axis).total_cmp(&centroid(b).axis(axis))
        });
        let left = self.build_node(start, mid);
        let right = self.build_node(mid, end);
        debug_assert_eq!(left, idx + 1);
        let node = &mut self.nodes[idx as usize];
        node.count = 0;
        node.start = left;
        node.right = right;
        idx
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    /// Triangle counts of every leaf, in tree order.
    pub fn leaf_sizes(&self) -> Vec<usize> {
        self.nodes.iter().filter(|n| n.count > 0).map(|n| n.count as usize).collect()
    }

    /// Checks that every node's box contains all triangles beneath it.
    pub fn check_bounds(&self) -> bool {
        fn walk(b: &Bvh, i: usize) -> Option<(usize, usize)> {
            let n = &b.nodes[i];
            let range = if n.count > 0 {
                (n.start as usize, (n.start + n.count) as usize)
            } else {
                let l = walk(b, n.start as usize)?;
                let r = walk(b, n.right as usize)?;
                if l.1 != r.0 {
                    return None;
                }
                (l.0, r.1)
            };
            let inside = |p: Vec3| {
                p.x >= n.bounds.min.x && p.y >= n.bounds.min.y && p.z >= n.bounds.min.z
                    && p.x <= n.bounds.max.x && p.y <= n.bounds.max.y && p.z <= n.bounds.max.z
            };
            b.triangles[range.0..range.1]
                .iter()
                .all(|t| inside(t.v0) && inside(t.v1) && inside(t.v2))
                .then_some(range)
        }
        self.nodes.is_empty() || walk(self, 0) == Some((0, self.triangles.len()))
    }

    pub fn label_of(&self, mesh_id: u32) -> Option<&Arc<str>> {
        self.labels
            .binary_search_by_key(&mesh_id, |(id, _)| *id)
            .ok()
            .map(|i| &self.labels[i].1)
    }

    fn nearest(&self, ray: &Ray, exclude: &[u32], mut best: Option<Candidate>) -> Option<Candidate> {
        if self.nodes.is_empty() {
            return best;
        }
        let d = ray.direction;
        let inv_dir = Vec3::new(1.0 / d.x, 1.0 / d.y, 1.0 / d.z);
        let mut stack: Vec<u32> = Vec::with_capacity(64);
        stack.push(0);
        while let Some(i) = stack.pop() {
            let node = &self.nodes[i as usize];
            let limit = best.map_or(f64::INFINITY, |b| b.t + TIE_EPSILON);
            if node.bounds.entry(ray.origin, inv_dir, limit).is_none() {
                continue;
            }
            if node.count > 0 {
                let s = node.start as usize;
                for tri in &self.triangles[s..s + node.count as usize] {
                    if exclude.contains(&tri.mesh_id) {
                        continue;
                    }
                    if let Some(t) = intersect_ray_triangle(ray, tri.v0, tri.v1, tri.v2) {
                        best = better(best, Candidate { t, mesh_id: tri.mesh_id, triangle_index: tri.triangle_index });
                    }
                }
            } else {
                let (l, r) = (node.start, node.right);
                let el = self.nodes[l as usize].bounds.entry(ray.origin, inv_dir, limit);
                let er = self.nodes[r as usize].bounds.entry(ray.origin, inv_dir, limit);
                // Push the farther child first so the nearer one is visited next.
                match (el, er) {
                    (Some(a), Some(b)) if a <= b => {
                        stack.push(r);
                        stack.push(l);
                    }
                    (Some(_), Some(_)) => {
                        stack.push(l);
                        stack.push(r);
                    }
                    (Some(_), None) => stack.push(l),
                    (None, Some(_)) => stack.push(r),
                    (None, None) => {}
                }
            }
        }
        best
    }

    fn make_hit(&self, ray: &Ray, c: Candidate) -> Hit {
        Hit {
            t: c.t,
            point: ray.at(c.t),
            ooi_label: self.label_of(c.mesh_id).cloned().unwrap_or_else(|| Arc::from("")),
            mesh_id: c.mesh_id,
            triangle_index: c.triangle_index,
        }
    }

    /// Nearest hit among meshes not listed in `exclude`.
    pub fn closest_hit(&self, ray: &Ray, exclude: &[u32]) -> Option<Hit> {
        self.nearest(ray, exclude, None).map(|c| self.make_hit(ray, c))
    }

    /// Reference scan over every triangle.
    pub fn closest_hit_brute_force(&self, ray: &Ray, exclude: &[u32]) -> Option<Hit> {
        let mut best = None;
        for tri in &self.triangles {
            if exclude.contains(&tri.mesh_id) {
                continue;
            }
            if let Some(t) = intersect_ray_triangle(ray, tri.v0, tri.v1, tri.v2) {
                best = better(best, Candidate { t, mesh_id: tri.mesh_id, triangle_index: tri.triangle_index });
            }
        }
        best.map(|c| self.make_hit(ray, c))
    }
}

#[inline]
fn centroid(t: &PackedTriangle) -> Vec3 {
    (t.v0 + t.v1 + t.v2) * (1.0 / 3.0)
}

/// Two-level structure: a session-wide static BVH shared across frames and a
/// small per-frame BVH for participant boxes.
#[derive(Debug, Clone)]
pub struct SceneBvh {
    pub statics: Arc<Bvh>,
    pub dynamic: Bvh,
}

impl SceneBvh {
    pub fn new(statics: Arc<Bvh>, frame: &FrameScene) -> Self {
        Self { statics, dynamic: Bvh::build(frame.dynamic_entries()) }
    }

    pub fn closest_hit(&self, ray: &Ray, exclude: &[u32]) -> Option<Hit> {
        let s = self.statics.nearest(ray, exclude, None);
        let best = self.dynamic.nearest(ray, exclude, s);
        let c = best?;
        if s == Some(c) {
            Some(self.statics.make_hit(ray, c))
        } else {
            Some(self.dynamic.make_hit(ray, c))
        }
    }
}

/// `closest_hit` over a freshly built single-level BVH.
pub fn closest_hit(ray: &Ray, bvh: &Bvh, exclude: &[u32]) -> Option<Hit> {
    bvh.closest_hit(ray, exclude)
}

pub fn build_bvh(scene: &FrameScene) -> Bvh {
    Bvh::from_scene(scene)
}
