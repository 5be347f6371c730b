use crate::imageio::LinearImage;

/// Linear radiance image with accumulated opacity, row-major, row 0 at the
/// top.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    pub width: usize,
    pub height: usize,
    pub rgb: Vec<[f64; 3]>,
    pub alpha: Vec<f64>,
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            rgb: vec![[0.0; 3]; width * height],
            alpha: vec![0.0; width * height],
        }
    }

    /// Fully opaque image from rgb values.
    pub fn from_rgb(width: usize, height: usize, rgb: Vec<[f64; 3]>) -> Self {
        assert_eq!(rgb.len(), width * height, "pixel count");
        Self {
            width,
            height,
            alpha: vec![1.0; rgb.len()],
            rgb,
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> [f64; 3]) -> Self {
        let rgb = (0..height).flat_map(|y| (0..width).map(move |x| (x, y))).map(|(x, y)| f(x, y)).collect();
        Self::from_rgb(width, height, rgb)
    }

    pub fn len(&self) -> usize {
        self.rgb.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rgb.is_empty()
    }

    pub fn get(&self, x: usize, y: usize) -> [f64; 3] {
        self.rgb[y * self.width + x]
    }

    pub fn same_shape(&self, other: &ImageBuffer) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Largest absolute difference over rgb and alpha.
    pub fn max_abs_diff(&self, other: &ImageBuffer) -> f64 {
        assert!(self.same_shape(other), "shape mismatch");
        let rgb = self
            .rgb
            .iter()
            .zip(&other.rgb)
            .flat_map(|(a, b)| (0..3).map(move |c| (a[c] - b[c]).abs()))
            .fold(0.0f64, f64::max);
        let alpha = self.alpha.iter().zip(&other.alpha).map(|(a, b)| (a - b).abs()).fold(0.0f64, f64::max);
        rgb.max(alpha)
    }

    /// Pixel-wise rgb sum; alpha is the maximum of the two.
    pub fn add(&self, other: &ImageBuffer) -> ImageBuffer {
        assert!(self.same_shape(other), "shape mismatch");
        ImageBuffer {
            width: self.width,
            height: self.height,
            rgb: self.rgb.iter().zip(&other.rgb).map(|(a, b)| [a[0] + b[0], a[1] + b[1], a[2] + b[2]]).collect(),
            alpha: self.alpha.iter().zip(&other.alpha).map(|(a, b)| a.max(*b)).collect(),
        }
    }

    pub fn max_value(&self) -> f64 {
        self.rgb.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.rgb.iter().flatten().all(|v| v.is_finite()) && self.alpha.iter().all(|a| a.is_finite())
    }

    /// Per-pixel luminance (Rec. 709 weights).
    pub fn luminance(&self) -> Vec<f64> {
        self.rgb.iter().map(|p| 0.2126 * p[0] + 0.7152 * p[1] + 0.0722 * p[2]).collect()
    }

    pub fn to_linear(&self) -> LinearImage {
        LinearImage {
            width: self.width,
            height: self.height,
            rgb: self.rgb.iter().map(|p| p.map(|c| c as f32)).collect(),
        }
    }

    pub fn from_linear(img: &LinearImage) -> Self {
        Self::from_rgb(img.width, img.height, img.rgb.iter().map(|p| p.map(|c| c as f64)).collect())
    }
}
