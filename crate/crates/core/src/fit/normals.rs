//! Normal-estimation baselines: PCA over k nearest splat centres, and the
//! normal of the nearest triangle of a reference mesh.

use std::num::NonZero;

use glam::DVec3;
use kiddo::{ImmutableKdTree, SquaredEuclidean};
use nalgebra::{Matrix3, SymmetricEigen};
use thiserror::Error;

use crate::scene::{HeadAsset, MeshError, TriangleMesh};

#[derive(Debug, Error)]
pub enum NormalError {
    #[error("k = {0} is too small (need at least 3)")]
    TooFewNeighbours(usize),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

const LEAF: usize = 4;

#[derive(Debug, Clone, Copy)]
struct Aabb {
    min: DVec3,
    max: DVec3,
}

impl Aabb {
    fn empty() -> Self {
        Self {
            min: DVec3::INFINITY,
            max: DVec3::NEG_INFINITY,
        }
    }

    fn grow(&mut self, p: DVec3) {
        self.min = self.min.min(p);
        self.max = self.max.max(p);
    }

    fn distance_sq(&self, p: DVec3) -> f64 {
        let d = (self.min - p).max(p - self.max).max(DVec3::ZERO);
        d.length_squared()
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf { bounds: Aabb, start: usize, end: usize },
    Inner { bounds: Aabb, left: usize, right: usize },
}

impl Node {
    fn bounds(&self) -> &Aabb {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

/// A triangle mesh with unit face normals and a bounding-volume hierarchy
/// for nearest-triangle queries.
#[derive(Debug, Clone)]
pub struct MeshNormalField {
    mesh: TriangleMesh,
    normals: Vec<DVec3>,
    order: Vec<u32>,
    nodes: Vec<Node>,
}

impl MeshNormalField {
    pub fn new(mesh: TriangleMesh) -> Result<Self, MeshError> {
        if mesh.triangles.is_empty() {
            return Err(MeshError::Empty);
        }
        let mut normals = Vec::with_capacity(mesh.triangles.len());
        for t in 0..mesh.triangles.len() {
            let an = mesh.area_normal(t);
            let len = an.length();
            if !(len > 1e-12) {
                return Err(MeshError::Degenerate(t));
            }
            normals.push(an / len);
        }
        let centroids: Vec<DVec3> = (0..mesh.triangles.len())
            .map(|t| {
                let [a, b, c] = mesh.corners(t);
                (a + b + c) / 3.0
            })
            .collect();
        let mut field = Self {
            order: (0..mesh.triangles.len() as u32).collect(),
            mesh,
            normals,
            nodes: Vec::new(),
        };
        let n = field.order.len();
        field.build(&centroids, 0, n);
        Ok(field)
    }

    pub fn mesh(&self) -> &TriangleMesh {
        &self.mesh
    }

    pub fn face_normal(&self, t: usize) -> DVec3 {
        self.normals[t]
    }

    fn build(&mut self, centroids: &[DVec3], start: usize, end: usize) -> usize {
        let mut bounds = Aabb::empty();
        let mut cb = Aabb::empty();
        for &t in &self.order[start..end] {
            for v in self.mesh.corners(t as usize) {
                bounds.grow(v);
            }
            cb.grow(centroids[t as usize]);
        }
        let id = self.nodes.len();
        if end - start <= LEAF {
            self.nodes.push(Node::Leaf { bounds, start, end });
            return id;
        }
        self.nodes.push(Node::Leaf { bounds, start, end });
        let ext = cb.max - cb.min;
        let axis = if ext.x >= ext.y && ext.x >= ext.z { 0 } else if ext.y >= ext.z { 1 } else { 2 };
        let mid = (start + end) / 2;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            centroids[a as usize][axis]
                .total_cmp(&centroids[b as usize][axis])
                .then(a.cmp(&b))
        });
        let left = self.build(centroids, start, mid);
        let right = self.build(centroids, mid, end);
        self.nodes[id] = Node::Inner { bounds, left, right };
        id
    }

    /// Nearest triangle to `p` and the squared distance to it. Ties go to
    /// the lower triangle index.
    pub fn nearest(&self, p: DVec3) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if node.bounds().distance_sq(p) > best.1 {
                continue;
            }
            match node {
                Node::Leaf { start, end, .. } => {
                    for &t in &self.order[*start..*end] {
                        let [a, b, c] = self.mesh.corners(t as usize);
                        let d = (closest_point_on_triangle(p, a, b, c) - p).length_squared();
                        if d < best.1 || (d == best.1 && (t as usize) < best.0) {
                            best = (t as usize, d);
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    let (dl, dr) = (self.nodes[*left].bounds().distance_sq(p), self.nodes[*right].bounds().distance_sq(p));
                    // visit the nearer child first
                    if dl <= dr {
                        stack.push(*right);
                        stack.push(*left);
                    } else {
                        stack.push(*left);
                        stack.push(*right);
                    }
                }
            }
        }
        best
    }

    pub fn normal_at(&self, p: DVec3) -> DVec3 {
        self.normals[self.nearest(p).0]
    }
}

/// Closest point of triangle `abc` to `p` (Voronoi-region walk).
pub fn closest_point_on_triangle(p: DVec3, a: DVec3, b: DVec3, c: DVec3) -> DVec3 {
    let (ab, ac, ap) = (b - a, c - a, p - a);
    let (d1, d2) = (ab.dot(ap), ac.dot(ap));
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = p - b;
    let (d3, d4) = (ab.dot(bp), ac.dot(bp));
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let (d5, d6) = (ab.dot(cp), ac.dot(cp));
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}

/// Nearest-triangle normal for every splat centre.
pub fn normal_from_mesh(asset: &HeadAsset, field: &MeshNormalField) -> Vec<DVec3> {
    asset.splats().iter().map(|s| field.normal_at(s.position_f64())).collect()
}

/// kNN normals and which splats fell back to the radial direction.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnNormals {
    pub normals: Vec<DVec3>,
    pub fallback: Vec<bool>,
}

/// Smallest-eigenvalue eigenvector of the covariance of the `k` nearest
/// splat centres (the query splat included), oriented away from the asset
/// centroid. Degenerate neighbourhoods (collinear points, or a tangent
/// plane that is not well separated from the normal direction) fall back to
/// the radial direction.
pub fn normal_knn(asset: &HeadAsset, k: usize) -> Result<KnnNormals, NormalError> {
    if k < 3 {
        return Err(NormalError::TooFewNeighbours(k));
    }
    let pts: Vec<[f64; 3]> = asset.splats().iter().map(|s| s.position_f64().to_array()).collect();
    let tree: ImmutableKdTree<f64, 3> = ImmutableKdTree::new_from_slice(&pts);
    let centroid = asset.centroid();
    let qty = NonZero::new(k.min(pts.len())).expect("k >= 3");
    let mut normals = Vec::with_capacity(pts.len());
    let mut fallback = Vec::with_capacity(pts.len());
    for p in &pts {
        let p = DVec3::from_array(*p);
        let nbrs = tree.nearest_n::<SquaredEuclidean>(&p.to_array(), qty);
        let radial = (p - centroid).normalize_or(DVec3::Z);
        let (n, degenerate) = pca_normal(nbrs.iter().map(|nb| DVec3::from_array(pts[nb.item as usize])));
        let mut n = if degenerate { radial } else { n };
        if n.dot(p - centroid) < 0.0 {
            n = -n;
        }
        normals.push(n);
        fallback.push(degenerate);
    }
    Ok(KnnNormals { normals, fallback })
}

fn pca_normal(points: impl Iterator<Item = DVec3>) -> (DVec3, bool) {
    let pts: Vec<DVec3> = points.collect();
    if pts.len() < 3 {
        return (DVec3::Z, true);
    }
    let mean = pts.iter().copied().sum::<DVec3>() / pts.len() as f64;
    let mut cov = Matrix3::<f64>::zeros();
    for q in &pts {
        let d = *q - mean;
        let v = nalgebra::Vector3::new(d.x, d.y, d.z);
        cov += v * v.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let (l0, l1) = (eig.eigenvalues[idx[0]], eig.eigenvalues[idx[1]]);
    let col = eig.eigenvectors.column(idx[0]);
    let n = DVec3::new(col[0], col[1], col[2]);
    // the two tangent directions must have real spread
    let degenerate = !(l1 > 0.0) || !(l0 <= 0.5 * l1) || !n.is_finite();
    (n.normalize_or(DVec3::Z), degenerate)
}

/// Mean angle in degrees between corresponding unit vectors.
pub fn mean_angular_error_deg(a: &[DVec3], b: &[DVec3]) -> f64 {
    assert_eq!(a.len(), b.len());
    let sum: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| x.normalize().dot(y.normalize()).clamp(-1.0, 1.0).acos().to_degrees())
        .sum();
    sum / a.len().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::generate_sphere_asset;
    use approx::assert_abs_diff_eq;

    #[test]
    fn closest_point_regions() {
        let (a, b, c) = (DVec3::ZERO, DVec3::X, DVec3::Y);
        let q = closest_point_on_triangle(DVec3::new(0.2, 0.2, 1.0), a, b, c);
        assert!((q - DVec3::new(0.2, 0.2, 0.0)).length() < 1e-12);
        assert_eq!(closest_point_on_triangle(DVec3::new(-1.0, -1.0, 0.0), a, b, c), a);
        assert_eq!(closest_point_on_triangle(DVec3::new(2.0, -0.5, 0.0), a, b, c), b);
        assert_eq!(closest_point_on_triangle(DVec3::new(0.5, -1.0, 0.3), a, b, c), DVec3::new(0.5, 0.0, 0.0));
        let q = closest_point_on_triangle(DVec3::new(1.0, 1.0, 0.0), a, b, c);
        assert_abs_diff_eq!(q.x, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(q.y, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn bvh_matches_linear_scan() {
        let field = MeshNormalField::new(TriangleMesh::icosphere(3, 1.0, DVec3::ZERO)).unwrap();
        let probes = crate::scene::fibonacci_sphere(200, 0.3);
        for (i, d) in probes.iter().enumerate() {
            let p = *d * (0.5 + (i % 7) as f64 * 0.2);
            let (t, dist) = field.nearest(p);
            let brute = (0..field.mesh.triangles.len())
                .map(|u| {
                    let [a, b, c] = field.mesh.corners(u);
                    (closest_point_on_triangle(p, a, b, c) - p).length_squared()
                })
                .fold(f64::INFINITY, f64::min);
            assert_abs_diff_eq!(dist, brute, epsilon = 1e-15);
            assert!(t < field.mesh.triangles.len());
        }
    }

    #[test]
    fn knn_on_clean_sphere() {
        let a = generate_sphere_asset(2000, 1.0, [0.5; 3], 0.5, 0).unwrap();
        let knn = normal_knn(&a, 8).unwrap();
        let gt: Vec<DVec3> = a.splats().iter().map(|s| s.position_f64().normalize()).collect();
        assert!(mean_angular_error_deg(&knn.normals, &gt) < 3.0);
        assert!(normal_knn(&a, 2).is_err());
    }

    #[test]
    fn degenerate_mesh_is_rejected() {
        let m = TriangleMesh {
            vertices: vec![DVec3::ZERO, DVec3::X, DVec3::X * 2.0],
            triangles: vec![[0, 1, 2]],
        };
        assert!(matches!(MeshNormalField::new(m), Err(MeshError::Degenerate(0))));
    }
}
