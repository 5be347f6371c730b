use super::composite::Frame;
use super::ImageBuffer;
use crate::scene::{Camera, HeadAsset};

/// Per-pixel compositing weights `w_pk = α_k(p) · Π_{j<k} (1 − α_j(p))` of a
/// frozen-geometry view, stored as compressed rows in front-to-back order.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightCache {
    pub width: usize,
    pub height: usize,
    offsets: Vec<usize>,
    entries: Vec<(u32, f64)>,
}

impl WeightCache {
    pub fn from_frame(frame: &Frame) -> Self {
        let lists = frame.map_pixels(true, |px| {
            let mut list = Vec::new();
            px.walk(|k, w| list.push((k, w)));
            list
        });
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        offsets.push(0);
        let mut entries = Vec::with_capacity(lists.iter().map(Vec::len).sum());
        for l in lists {
            entries.extend_from_slice(&l);
            offsets.push(entries.len());
        }
        Self {
            width: frame.width,
            height: frame.height,
            offsets,
            entries,
        }
    }

    pub fn pixel(&self, p: usize) -> &[(u32, f64)] {
        &self.entries[self.offsets[p]..self.offsets[p + 1]]
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn entry_count(&self) -> usize {
        self.entries.len()
    }

    /// `Σ_k w_pk · c_k` per pixel; alpha is `Σ_k w_pk`.
    pub fn reconstruct(&self, colors: &[[f64; 3]]) -> ImageBuffer {
        let mut img = ImageBuffer::new(self.width, self.height);
        for p in 0..self.pixel_count() {
            let mut rgb = [0.0; 3];
            let mut a = 0.0;
            for &(k, w) in self.pixel(p) {
                let c = colors[k as usize];
                rgb[0] += w * c[0];
                rgb[1] += w * c[1];
                rgb[2] += w * c[2];
                a += w;
            }
            img.rgb[p] = rgb;
            img.alpha[p] = a;
        }
        img
    }

    /// Adjoint of [`reconstruct`](Self::reconstruct): accumulate
    /// `Σ_p w_pk · g_p` into `out[k]`.
    pub fn backproject(&self, grad: &[[f64; 3]], out: &mut [[f64; 3]]) {
        for p in 0..self.pixel_count() {
            let g = grad[p];
            if g == [0.0; 3] {
                continue;
            }
            for &(k, w) in self.pixel(p) {
                let o = &mut out[k as usize];
                o[0] += w * g[0];
                o[1] += w * g[1];
                o[2] += w * g[2];
            }
        }
    }
}

/// Weight cache of `asset` seen from `camera`.
pub fn extract_weight_cache(asset: &HeadAsset, camera: &Camera) -> WeightCache {
    WeightCache::from_frame(&Frame::new(asset, camera))
}
