use std::collections::HashMap;
use std::path::Path;

use glam::DVec3;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("mesh has no triangles")]
    Empty,
    #[error("triangle {0} is degenerate")]
    Degenerate(usize),
}

/// Indexed triangle mesh; triangles wind counter-clockwise around their
/// outward normal.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<DVec3>,
    pub triangles: Vec<[u32; 3]>,
}

impl TriangleMesh {
    pub fn corners(&self, t: usize) -> [DVec3; 3] {
        self.triangles[t].map(|i| self.vertices[i as usize])
    }

    /// Unnormalized normal; its length is twice the triangle area.
    pub fn area_normal(&self, t: usize) -> DVec3 {
        let [a, b, c] = self.corners(t);
        (b - a).cross(c - a)
    }

    /// Parse the `v` / `f` subset of Wavefront OBJ. Faces must be triangles;
    /// `v/vt/vn` references use the vertex index only. Other records are
    /// ignored.
    pub fn parse_obj(text: &str) -> Result<Self, MeshError> {
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = ln + 1;
            let mut it = raw.split_whitespace();
            let err = |reason: String| MeshError::Parse { line, reason };
            match it.next() {
                Some("v") => {
                    let xyz: Vec<f64> = it
                        .take(3)
                        .map(|t| t.parse::<f64>().map_err(|_| err(format!("bad coordinate {t:?}"))))
                        .collect::<Result<_, _>>()?;
                    if xyz.len() != 3 {
                        return Err(err("vertex needs 3 coordinates".into()));
                    }
                    vertices.push(DVec3::new(xyz[0], xyz[1], xyz[2]));
                }
                Some("f") => {
                    let idx: Vec<i64> = it
                        .map(|t| {
                            t.split('/')
                                .next()
                                .and_then(|s| s.parse::<i64>().ok())
                                .ok_or_else(|| err(format!("bad face index {t:?}")))
                        })
                        .collect::<Result<_, _>>()?;
                    if idx.len() != 3 {
                        return Err(err(format!("only triangles are supported, got {} vertices", idx.len())));
                    }
                    let n = vertices.len() as i64;
                    let mut tri = [0u32; 3];
                    for (k, &i) in idx.iter().enumerate() {
                        let resolved = if i < 0 { n + i } else { i - 1 };
                        if resolved < 0 || resolved >= n {
                            return Err(err(format!("face index {i} out of range")));
                        }
                        tri[k] = resolved as u32;
                    }
                    triangles.push(tri);
                }
                _ => {}
            }
        }
        if triangles.is_empty() {
            return Err(MeshError::Empty);
        }
        Ok(Self { vertices, triangles })
    }

    pub fn load_obj(path: &Path) -> Result<Self, MeshError> {
        let text = std::fs::read_to_string(path).map_err(|source| MeshError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse_obj(&text)
    }

    pub fn to_obj(&self) -> String {
        let mut s = String::new();
        for v in &self.vertices {
            s.push_str(&format!("v {} {} {}\n", v.x, v.y, v.z));
        }
        for t in &self.triangles {
            s.push_str(&format!("f {} {} {}\n", t[0] + 1, t[1] + 1, t[2] + 1));
        }
        s
    }

    /// Subdivided icosahedron projected onto a sphere.
    pub fn icosphere(subdivisions: u32, radius: f64, center: DVec3) -> Self {
        let t = (1.0 + 5f64.sqrt()) / 2.0;
        let mut verts: Vec<DVec3> = [
            (-1.0, t, 0.0),
            (1.0, t, 0.0),
            (-1.0, -t, 0.0),
            (1.0, -t, 0.0),
            (0.0, -1.0, t),
            (0.0, 1.0, t),
            (0.0, -1.0, -t),
            (0.0, 1.0, -t),
            (t, 0.0, -1.0),
            (t, 0.0, 1.0),
            (-t, 0.0, -1.0),
            (-t, 0.0, 1.0),
        ]
        .iter()
        .map(|&(x, y, z)| DVec3::new(x, y, z).normalize())
        .collect();
        let mut tris: Vec<[u32; 3]> = vec![
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ];
        for _ in 0..subdivisions {
            let mut midpoint: HashMap<(u32, u32), u32> = HashMap::new();
            let mut mid = |a: u32, b: u32, verts: &mut Vec<DVec3>| -> u32 {
                let key = (a.min(b), a.max(b));
                *midpoint.entry(key).or_insert_with(|| {
                    verts.push(((verts[a as usize] + verts[b as usize]) * 0.5).normalize());
                    verts.len() as u32 - 1
                })
            };
            let mut next = Vec::with_capacity(tris.len() * 4);
            for [a, b, c] in tris {
                let ab = mid(a, b, &mut verts);
                let bc = mid(b, c, &mut verts);
                let ca = mid(c, a, &mut verts);
                next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
            }
            tris = next;
        }
        Self {
            vertices: verts.into_iter().map(|v| center + v * radius).collect(),
            triangles: tris,
        }
    }
}
