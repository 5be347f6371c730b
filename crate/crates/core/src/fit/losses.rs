//! Standalone loss terms, plus the gradient kernels the objective shares.

use crate::metrics::ShapeMismatch;
use crate::raster::ImageBuffer;
use crate::scene::HeadAsset;

use super::normals::MeshNormalField;

/// Pooling levels of the multi-scale L1 stand-in for a perceptual loss.
pub const PYRAMID_LEVELS: u32 = 3;

fn check(a: &ImageBuffer, b: &ImageBuffer) -> Result<(), ShapeMismatch> {
    if a.same_shape(b) {
        Ok(())
    } else {
        Err(ShapeMismatch(a.width, a.height, b.width, b.height))
    }
}

/// `(1/N) Σ_k (1 − n_k · n̂_k)` against the nearest-triangle normals.
pub fn loss_normal_distill(asset: &HeadAsset, field: &MeshNormalField) -> f64 {
    let sum: f64 = asset
        .splats()
        .iter()
        .map(|s| 1.0 - s.normal_f64().dot(field.normal_at(s.position_f64())))
        .sum();
    sum / asset.len() as f64
}

/// `‖∇x I‖₁ + ‖∇y I‖₁` with forward differences, summed over pixels and
/// channels.
pub fn loss_normal_tv(normal_map: &ImageBuffer) -> f64 {
    tv(normal_map, None, 0.0)
}

/// Same total variation on an rgb image.
pub fn loss_tv_image(pred: &ImageBuffer) -> f64 {
    tv(pred, None, 0.0)
}

/// `(1/N) Σ_k ‖T_k − T̄_k‖²`, `T̄_k` the channel-mean row.
pub fn loss_prt(asset: &HeadAsset) -> f64 {
    let sum: f64 = asset
        .splats()
        .iter()
        .map(|s| {
            let t = &s.transport;
            (0..t.width())
                .map(|j| {
                    let v = [0, 1, 2].map(|c| t.row(c)[j] as f64);
                    let m = (v[0] + v[1] + v[2]) / 3.0;
                    v.iter().map(|x| (x - m).powi(2)).sum::<f64>()
                })
                .sum::<f64>()
        })
        .sum();
    sum / asset.len() as f64
}

/// Mean absolute error over all pixels and channels.
pub fn loss_image(pred: &ImageBuffer, target: &ImageBuffer) -> Result<f64, ShapeMismatch> {
    check(pred, target)?;
    Ok(l1(pred, target, None, 0.0))
}

/// Mean over [`PYRAMID_LEVELS`] levels of 2×, 4× and 8× box-downsampled L1.
/// A multi-scale substitute for a perceptual loss, not a perceptual metric.
pub fn loss_pyramid(pred: &ImageBuffer, target: &ImageBuffer) -> Result<f64, ShapeMismatch> {
    check(pred, target)?;
    Ok(pyramid(pred, target, None, 0.0))
}

#[inline]
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Sum-form TV. With `grad`, adds `scale · ∂TV/∂I` into it.
pub(crate) fn tv(img: &ImageBuffer, mut grad: Option<&mut [[f64; 3]]>, scale: f64) -> f64 {
    let (w, h) = (img.width, img.height);
    let mut sum = 0.0;
    for y in 0..h {
        for x in 0..w {
            let p = y * w + x;
            for (q, ok) in [(p + 1, x + 1 < w), (p + w, y + 1 < h)] {
                if !ok {
                    continue;
                }
                for c in 0..3 {
                    let d = img.rgb[q][c] - img.rgb[p][c];
                    sum += d.abs();
                    if let Some(g) = grad.as_deref_mut() {
                        let s = scale * sign(d);
                        g[q][c] += s;
                        g[p][c] -= s;
                    }
                }
            }
        }
    }
    sum
}

/// Mean absolute error; with `grad`, adds `scale · ∂/∂pred`.
pub(crate) fn l1(pred: &ImageBuffer, target: &ImageBuffer, mut grad: Option<&mut [[f64; 3]]>, scale: f64) -> f64 {
    let n = (3 * pred.len()).max(1) as f64;
    let mut sum = 0.0;
    for p in 0..pred.len() {
        for c in 0..3 {
            let r = pred.rgb[p][c] - target.rgb[p][c];
            sum += r.abs();
            if let Some(g) = grad.as_deref_mut() {
                g[p][c] += scale * sign(r) / n;
            }
        }
    }
    sum / n
}

fn block_means(img: &ImageBuffer, b: usize) -> (Vec<[f64; 3]>, usize, usize) {
    let (w, h) = (img.width / b, img.height / b);
    let inv = 1.0 / (b * b) as f64;
    let mut out = vec![[0.0; 3]; w * h];
    for (q, o) in out.iter_mut().enumerate() {
        let (bx, by) = ((q % w) * b, (q / w) * b);
        for y in by..by + b {
            for x in bx..bx + b {
                let v = img.rgb[y * img.width + x];
                for c in 0..3 {
                    o[c] += v[c];
                }
            }
        }
        for v in o.iter_mut() {
            *v *= inv;
        }
    }
    (out, w, h)
}

pub(crate) fn pyramid(pred: &ImageBuffer, target: &ImageBuffer, mut grad: Option<&mut [[f64; 3]]>, scale: f64) -> f64 {
    let mut total = 0.0;
    for level in 1..=PYRAMID_LEVELS {
        let b = 1usize << level;
        let (pp, w, h) = block_means(pred, b);
        if w == 0 || h == 0 {
            continue;
        }
        let (tp, ..) = block_means(target, b);
        let n = (3 * w * h) as f64;
        let per_level = 1.0 / PYRAMID_LEVELS as f64;
        let mut sum = 0.0;
        for q in 0..w * h {
            for c in 0..3 {
                let r = pp[q][c] - tp[q][c];
                sum += r.abs();
                if let Some(g) = grad.as_deref_mut() {
                    let s = scale * per_level * sign(r) / (n * (b * b) as f64);
                    if s != 0.0 {
                        let (bx, by) = ((q % w) * b, (q / w) * b);
                        for y in by..by + b {
                            for x in bx..bx + b {
                                g[y * pred.width + x][c] += s;
                            }
                        }
                    }
                }
            }
        }
        total += per_level * sum / n;
    }
    total
}

/// Push the sign pattern of the non-smooth terms into `sink`.
pub(crate) fn l1_signs(pred: &ImageBuffer, target: &ImageBuffer, sink: &mut impl FnMut(i8)) {
    for (p, t) in pred.rgb.iter().zip(&target.rgb) {
        for c in 0..3 {
            sink(sign(p[c] - t[c]) as i8);
        }
    }
}

pub(crate) fn pyramid_signs(pred: &ImageBuffer, target: &ImageBuffer, sink: &mut impl FnMut(i8)) {
    for level in 1..=PYRAMID_LEVELS {
        let (pp, ..) = block_means(pred, 1 << level);
        let (tp, ..) = block_means(target, 1 << level);
        for (p, t) in pp.iter().zip(&tp) {
            for c in 0..3 {
                sink(sign(p[c] - t[c]) as i8);
            }
        }
    }
}

pub(crate) fn tv_signs(img: &ImageBuffer, sink: &mut impl FnMut(i8)) {
    let (w, h) = (img.width, img.height);
    for y in 0..h {
        for x in 0..w {
            let p = y * w + x;
            for (q, ok) in [(p + 1, x + 1 < w), (p + w, y + 1 < h)] {
                if ok {
                    for c in 0..3 {
                        sink(sign(img.rgb[q][c] - img.rgb[p][c]) as i8);
                    }
                }
            }
        }
    }
}
