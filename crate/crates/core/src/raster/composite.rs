use glam::DVec2;
use rayon::prelude::*;

use super::project::{project_splat, Projected, CUTOFF_SQ};
use super::ImageBuffer;
use crate::scene::{Camera, HeadAsset};

pub const TILE: usize = 8;
pub const ALPHA_MAX: f64 = 0.99;
pub const T_MIN: f64 = 1e-4;

/// Visible splats of one view in global front-to-back order (depth, then
/// index).
#[derive(Debug, Clone)]
pub struct Frame {
    pub width: usize,
    pub height: usize,
    pub sorted: Vec<Projected>,
}

impl Frame {
    pub fn new(asset: &HeadAsset, camera: &Camera) -> Self {
        let mut sorted: Vec<Projected> = asset
            .splats()
            .par_iter()
            .enumerate()
            .filter_map(|(i, s)| project_splat(s, i as u32, camera))
            .collect();
        sorted.sort_by(|a, b| a.depth.total_cmp(&b.depth).then(a.index.cmp(&b.index)));
        Self {
            width: camera.width,
            height: camera.height,
            sorted,
        }
    }

    fn tiles(&self) -> (usize, usize) {
        (self.width.div_ceil(TILE), self.height.div_ceil(TILE))
    }

    /// Per-tile lists of positions into `sorted`, each in sorted order. A
    /// splat lands in a tile when its `m ≤ 9` ellipse reaches the rectangle
    /// spanned by the tile's pixel centres.
    fn bin(&self) -> Vec<Vec<u32>> {
        let (tx, ty) = self.tiles();
        let mut bins = vec![Vec::new(); tx * ty];
        for (r, p) in self.sorted.iter().enumerate() {
            let lo = (p.mean - p.extent - 0.5).max(DVec2::ZERO);
            let hi = p.mean + p.extent + 0.5;
            let (x0, y0) = (((lo.x as usize) / TILE).min(tx - 1), ((lo.y as usize) / TILE).min(ty - 1));
            let x1 = ((hi.x.min(self.width as f64 - 1.0)) as usize / TILE).min(tx - 1);
            let y1 = ((hi.y.min(self.height as f64 - 1.0)) as usize / TILE).min(ty - 1);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let rect_lo = DVec2::new((x * TILE) as f64 + 0.5, (y * TILE) as f64 + 0.5);
                    let rect_hi = DVec2::new(
                        (((x + 1) * TILE).min(self.width) - 1) as f64 + 0.5,
                        (((y + 1) * TILE).min(self.height) - 1) as f64 + 0.5,
                    );
                    if min_mahalanobis_sq(p, rect_lo, rect_hi) <= CUTOFF_SQ + BIN_SLACK {
                        bins[y * tx + x].push(r as u32);
                    }
                }
            }
        }
        bins
    }

    /// Run `visit` for every pixel, where [`PixelWalk::walk`] visits
    /// `(splat index, weight)` front to back. Tiles run in parallel; results
    /// come back in pixel order.
    pub(crate) fn map_pixels<R: Send>(&self, tiled: bool, visit: impl Fn(PixelWalk<'_>) -> R + Sync) -> Vec<R> {
        let (tx, ty) = self.tiles();
        let bins = if tiled { self.bin() } else { Vec::new() };
        let all: Vec<Footprint> = if tiled { Vec::new() } else { self.sorted.iter().map(Footprint::from).collect() };
        let per_tile: Vec<Vec<(usize, R)>> = (0..tx * ty)
            .into_par_iter()
            .map(|t| {
                let local: Vec<Footprint>;
                let list = if tiled {
                    local = bins[t].iter().map(|&r| Footprint::from(&self.sorted[r as usize])).collect();
                    &local
                } else {
                    &all
                };
                let (bx, by) = ((t % tx) * TILE, (t / tx) * TILE);
                let mut out = Vec::with_capacity(TILE * TILE);
                for y in by..(by + TILE).min(self.height) {
                    for x in bx..(bx + TILE).min(self.width) {
                        let p = DVec2::new(x as f64 + 0.5, y as f64 + 0.5);
                        out.push((y * self.width + x, visit(PixelWalk { p, list })));
                    }
                }
                out
            })
            .collect();
        let mut slots: Vec<Option<R>> = (0..self.width * self.height).map(|_| None).collect();
        for tile in per_tile {
            for (i, r) in tile {
                slots[i] = Some(r);
            }
        }
        slots.into_iter().map(|r| r.expect("every pixel visited")).collect()
    }

    /// Composite per-splat payloads (indexed by splat index).
    pub fn composite(&self, payload: &[[f64; 3]], tiled: bool) -> ImageBuffer {
        let px = self.map_pixels(tiled, |px| {
            let mut rgb = [0.0; 3];
            let alpha = px.walk(|k, w| {
                let c = payload[k as usize];
                rgb[0] += w * c[0];
                rgb[1] += w * c[1];
                rgb[2] += w * c[2];
            });
            (rgb, alpha)
        });
        let mut img = ImageBuffer::new(self.width, self.height);
        for (i, (rgb, a)) in px.into_iter().enumerate() {
            img.rgb[i] = rgb;
            img.alpha[i] = a;
        }
        img
    }
}

/// Absolute slack on the tile test, far above the rounding of the quadratic
/// form, so the tiled path never drops a pixel the brute-force path keeps.
const BIN_SLACK: f64 = 1e-6;

/// Minimum of the splat's squared Mahalanobis distance over the rectangle
/// `[lo, hi]`: zero inside, otherwise the smallest of the four edge minima.
fn min_mahalanobis_sq(g: &Projected, lo: DVec2, hi: DVec2) -> f64 {
    let (a, b, c) = (g.conic[0], g.conic[1], g.conic[2]);
    let (dlo, dhi) = (lo - g.mean, hi - g.mean);
    if dlo.x <= 0.0 && dhi.x >= 0.0 && dlo.y <= 0.0 && dhi.y >= 0.0 {
        return 0.0;
    }
    let q = |dx: f64, dy: f64| a * dx * dx + 2.0 * b * dx * dy + c * dy * dy;
    let mut best = f64::INFINITY;
    for dx in [dlo.x, dhi.x] {
        let dy = (-b * dx / c).clamp(dlo.y, dhi.y);
        best = best.min(q(dx, dy));
    }
    for dy in [dlo.y, dhi.y] {
        let dx = (-b * dy / a).clamp(dlo.x, dhi.x);
        best = best.min(q(dx, dy));
    }
    best
}

/// The part of a [`Projected`] splat that compositing reads, packed so a
/// tile's list stays in cache.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Footprint {
    mean: DVec2,
    conic: [f64; 3],
    opacity: f64,
    index: u32,
}

impl From<&Projected> for Footprint {
    fn from(g: &Projected) -> Self {
        Self {
            mean: g.mean,
            conic: g.conic,
            opacity: g.opacity,
            index: g.index,
        }
    }
}

/// One pixel and the depth-ordered splats that may cover it.
#[derive(Clone, Copy)]
pub(crate) struct PixelWalk<'a> {
    p: DVec2,
    list: &'a [Footprint],
}

impl PixelWalk<'_> {
    /// Front-to-back compositing. Calls `visit(index, α·T)` per contributing
    /// splat and returns the accumulated opacity `1 − T`.
    #[inline]
    pub(crate) fn walk(&self, mut visit: impl FnMut(u32, f64)) -> f64 {
        let mut t = 1.0f64;
        for g in self.list {
            // same expression as `Projected::mahalanobis_sq`
            let d = self.p - g.mean;
            let m = g.conic[0] * d.x * d.x + 2.0 * g.conic[1] * d.x * d.y + g.conic[2] * d.y * d.y;
            if m > CUTOFF_SQ {
                continue;
            }
            let alpha = (g.opacity * (-0.5 * m).exp()).min(ALPHA_MAX);
            if alpha <= 0.0 {
                continue;
            }
            let test_t = t * (1.0 - alpha);
            if test_t < T_MIN {
                break;
            }
            visit(g.index, alpha * t);
            t = test_t;
        }
        1.0 - t
    }
}
