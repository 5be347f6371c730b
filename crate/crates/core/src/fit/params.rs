use glam::DVec3;

use crate::scene::{HeadAsset, Splat};
use crate::shading::{AttrGrad, SurfaceAttrs, ROUGHNESS_FLOOR};

/// Which relighting attributes the fitter may change.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FreeAttributes {
    pub normal: bool,
    pub roughness: bool,
    pub transport: bool,
    pub albedo: bool,
}

impl FreeAttributes {
    pub const ALL: Self = Self {
        normal: true,
        roughness: true,
        transport: true,
        albedo: true,
    };
    pub const NONE: Self = Self {
        normal: false,
        roughness: false,
        transport: false,
        albedo: false,
    };
}

impl Default for FreeAttributes {
    /// Albedo comes from the frozen base branch and stays fixed.
    fn default() -> Self {
        Self {
            albedo: false,
            ..Self::ALL
        }
    }
}

/// Which attribute a flat parameter index addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamId {
    pub splat: usize,
    pub attribute: &'static str,
    pub component: usize,
}

/// Flattening of the free attributes of every splat into one vector:
/// per splat `[n (3)] [σ] [T (3 × width)] [ρ (3)]`, absent blocks skipped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamLayout {
    pub free: FreeAttributes,
    pub width: usize,
    pub splats: usize,
}

impl ParamLayout {
    pub fn new(free: FreeAttributes, width: usize, splats: usize) -> Self {
        Self { free, width, splats }
    }

    pub fn per_splat(&self) -> usize {
        let f = &self.free;
        3 * f.normal as usize + f.roughness as usize + 3 * self.width * f.transport as usize + 3 * f.albedo as usize
    }

    pub fn len(&self) -> usize {
        self.per_splat() * self.splats
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn visit(&self, k: usize, mut f: impl FnMut(usize, &'static str, usize)) {
        let mut i = k * self.per_splat();
        let mut emit = |name, n| {
            for c in 0..n {
                f(i, name, c);
                i += 1;
            }
        };
        if self.free.normal {
            emit("normal", 3);
        }
        if self.free.roughness {
            emit("roughness", 1);
        }
        if self.free.transport {
            emit("transport", 3 * self.width);
        }
        if self.free.albedo {
            emit("albedo", 3);
        }
    }

    pub fn id(&self, index: usize) -> ParamId {
        let k = index / self.per_splat();
        let mut out = None;
        self.visit(k, |i, attribute, component| {
            if i == index {
                out = Some(ParamId {
                    splat: k,
                    attribute,
                    component,
                })
            }
        });
        out.expect("index in range")
    }

    pub fn pack(&self, attrs: &[SurfaceAttrs]) -> Vec<f64> {
        let mut v = vec![0.0; self.len()];
        for (k, a) in attrs.iter().enumerate() {
            self.visit(k, |i, name, c| v[i] = *slot_ref(a, name, c, self.width));
        }
        v
    }

    pub fn unpack(&self, v: &[f64], attrs: &mut [SurfaceAttrs]) {
        for (k, a) in attrs.iter_mut().enumerate() {
            self.visit(k, |i, name, c| *slot_mut(a, name, c, self.width) = v[i]);
        }
    }

    pub fn pack_grad(&self, grads: &[AttrGrad]) -> Vec<f64> {
        let mut v = vec![0.0; self.len()];
        for (k, g) in grads.iter().enumerate() {
            self.visit(k, |i, name, c| {
                v[i] = match name {
                    "normal" => g.normal[c],
                    "roughness" => g.roughness,
                    "transport" => g.transport[c / self.width][c % self.width],
                    _ => g.albedo[c],
                }
            });
        }
        v
    }
}

fn slot_ref<'a>(a: &'a SurfaceAttrs, name: &str, c: usize, width: usize) -> &'a f64 {
    match name {
        "normal" => match c {
            0 => &a.normal.x,
            1 => &a.normal.y,
            _ => &a.normal.z,
        },
        "roughness" => &a.roughness,
        "transport" => &a.transport[c / width][c % width],
        _ => &a.albedo[c],
    }
}

fn slot_mut<'a>(a: &'a mut SurfaceAttrs, name: &str, c: usize, width: usize) -> &'a mut f64 {
    match name {
        "normal" => match c {
            0 => &mut a.normal.x,
            1 => &mut a.normal.y,
            _ => &mut a.normal.z,
        },
        "roughness" => &mut a.roughness,
        "transport" => &mut a.transport[c / width][c % width],
        _ => &mut a.albedo[c],
    }
}

pub fn attrs_of(asset: &HeadAsset) -> Vec<SurfaceAttrs> {
    asset.splats().iter().map(SurfaceAttrs::from_splat).collect()
}

/// Normals whose squared length is this close to 1 are left alone. Stored
/// `f32` normals are off by up to ~2.4e-7, and renormalizing them would
/// move an exact fit off its optimum.
pub const NORMAL_SLACK: f64 = 1e-6;

/// Project the free attributes back onto their valid sets: unit normals,
/// σ in `[0.01, 1]`, albedo in `[0, 1]`.
pub fn project_valid(a: &mut SurfaceAttrs, free: &FreeAttributes) {
    if free.normal && (a.normal.length_squared() - 1.0).abs() > NORMAL_SLACK {
        a.normal = a.normal.normalize_or(DVec3::Z);
    }
    if free.roughness {
        a.roughness = a.roughness.clamp(ROUGHNESS_FLOOR, 1.0);
    }
    if free.albedo {
        for c in a.albedo.iter_mut() {
            *c = c.clamp(0.0, 1.0);
        }
    }
}

/// `base` with its free attributes replaced by `a`; everything else,
/// geometry included, is copied unchanged.
pub fn write_back(base: &Splat, a: &SurfaceAttrs, free: &FreeAttributes) -> Splat {
    let mut s = *base;
    if free.albedo {
        s.albedo = DVec3::from_array(a.albedo).as_vec3();
    }
    if free.normal {
        s.normal = a.normal.normalize().as_vec3();
    }
    if free.roughness {
        s.roughness = a.roughness as f32;
    }
    if free.transport {
        for c in 0..3 {
            for (dst, src) in s.transport.row_mut(c).iter_mut().zip(&a.transport[c]) {
                *dst = *src as f32;
            }
        }
    }
    s
}
