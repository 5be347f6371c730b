//! Image quality metrics on linear images in `[0, 1]`.

use thiserror::Error;

use crate::raster::ImageBuffer;

/// PSNR reported for (near-)identical images.
pub const PSNR_CAP: f64 = 100.0;
const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;

#[derive(Debug, Error, PartialEq)]
#[error("image shapes differ: {0}x{1} vs {2}x{3}")]
pub struct ShapeMismatch(pub usize, pub usize, pub usize, pub usize);

fn check(a: &ImageBuffer, b: &ImageBuffer) -> Result<(), ShapeMismatch> {
    if a.same_shape(b) {
        Ok(())
    } else {
        Err(ShapeMismatch(a.width, a.height, b.width, b.height))
    }
}

pub fn mse(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64, ShapeMismatch> {
    check(a, b)?;
    let sum: f64 = a
        .rgb
        .iter()
        .zip(&b.rgb)
        .flat_map(|(x, y)| (0..3).map(move |c| (x[c] - y[c]).powi(2)))
        .sum();
    Ok(sum / (3 * a.len()).max(1) as f64)
}

/// `10 log10(1 / MSE)`, capped at 100 dB when `MSE < 1e-10`.
pub fn psnr(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64, ShapeMismatch> {
    let m = mse(a, b)?;
    Ok(if m < 1e-10 { PSNR_CAP } else { (10.0 * (1.0 / m).log10()).min(PSNR_CAP) })
}

fn gaussian_window(size: usize) -> Vec<f64> {
    let c = (size as f64 - 1.0) / 2.0;
    let w: Vec<f64> = (0..size).map(|i| (-((i as f64 - c).powi(2)) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// Separable "valid" filtering with a 1-D kernel.
fn filter_valid(img: &[f64], w: usize, h: usize, k: &[f64]) -> (Vec<f64>, usize, usize) {
    let n = k.len();
    let (ow, oh) = (w + 1 - n, h + 1 - n);
    let mut tmp = vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            tmp[y * ow + x] = (0..n).map(|i| k[i] * img[y * w + x + i]).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..n).map(|i| k[i] * tmp[(y + i) * ow + x]).sum();
        }
    }
    (out, ow, oh)
}

/// Mean SSIM over the three channels with an 11×11 Gaussian window
/// (σ = 1.5), `K1 = 0.01`, `K2 = 0.03`, dynamic range 1, no padding. Images
/// smaller than the window use the largest odd window that fits.
pub fn ssim(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64, ShapeMismatch> {
    check(a, b)?;
    let (w, h) = (a.width, a.height);
    if w == 0 || h == 0 {
        return Ok(1.0);
    }
    let mut size = SSIM_WINDOW.min(w).min(h);
    if size % 2 == 0 {
        size -= 1;
    }
    let k = gaussian_window(size);
    let (c1, c2) = (K1 * K1, K2 * K2);
    let mut total = 0.0;
    for ch in 0..3 {
        let x: Vec<f64> = a.rgb.iter().map(|p| p[ch]).collect();
        let y: Vec<f64> = b.rgb.iter().map(|p| p[ch]).collect();
        let prod = |u: &[f64], v: &[f64]| -> Vec<f64> { u.iter().zip(v).map(|(p, q)| p * q).collect() };
        let (mx, ow, oh) = filter_valid(&x, w, h, &k);
        let (my, ..) = filter_valid(&y, w, h, &k);
        let (sxx, ..) = filter_valid(&prod(&x, &x), w, h, &k);
        let (syy, ..) = filter_valid(&prod(&y, &y), w, h, &k);
        let (sxy, ..) = filter_valid(&prod(&x, &y), w, h, &k);
        let mut acc = 0.0;
        for i in 0..ow * oh {
            let (ux, uy) = (mx[i], my[i]);
            let vx = sxx[i] - ux * ux;
            let vy = syy[i] - uy * uy;
            let cxy = sxy[i] - ux * uy;
            acc += ((2.0 * ux * uy + c1) * (2.0 * cxy + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
        }
        total += acc / (ow * oh) as f64;
    }
    Ok(total / 3.0)
}
