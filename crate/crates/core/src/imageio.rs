//! Portable float maps (linear, little-endian) and 8-bit PNG with a plain
//! 2.2 gamma curve.

use std::fs;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageIoError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path}: malformed float map: {reason}")]
    MalformedPfm { path: String, reason: String },
    #[error("{path}: {source}")]
    Png {
        path: String,
        source: image::ImageError,
    },
    #[error("{0}: unsupported image extension (expected .pfm or .png)")]
    UnsupportedFormat(String),
}

pub const GAMMA: f32 = 2.2;

/// Linear rgb pixels, row-major with row 0 at the top.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearImage {
    pub width: usize,
    pub height: usize,
    pub rgb: Vec<[f32; 3]>,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> ImageIoError + '_ {
    move |source| ImageIoError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Encode as a colour PFM. Rows are written bottom-to-top as the format
/// requires; the negative scale marks little-endian data.
pub fn encode_pfm(img: &LinearImage) -> Vec<u8> {
    let mut out = format!("PF\n{} {}\n-1.0\n", img.width, img.height).into_bytes();
    out.reserve(img.width * img.height * 12);
    for row in (0..img.height).rev() {
        for px in &img.rgb[row * img.width..(row + 1) * img.width] {
            for c in px {
                out.extend_from_slice(&c.to_le_bytes());
            }
        }
    }
    out
}

pub fn save_pfm(path: &Path, img: &LinearImage) -> Result<(), ImageIoError> {
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(&encode_pfm(img)).map_err(io_err(path))
}

fn header_token(r: &mut impl BufRead) -> io::Result<String> {
    let mut tok = Vec::new();
    let mut byte = [0u8];
    loop {
        r.read_exact(&mut byte)?;
        if byte[0].is_ascii_whitespace() {
            if tok.is_empty() {
                continue;
            }
            return Ok(String::from_utf8_lossy(&tok).into_owned());
        }
        tok.push(byte[0]);
    }
}

pub fn load_pfm(path: &Path) -> Result<LinearImage, ImageIoError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut r = BufReader::new(file);
    let malformed = |reason: &str| ImageIoError::MalformedPfm {
        path: path.display().to_string(),
        reason: reason.to_string(),
    };
    let magic = header_token(&mut r).map_err(|_| malformed("missing header"))?;
    let channels = match magic.as_str() {
        "PF" => 3,
        "Pf" => 1,
        _ => return Err(malformed("bad magic")),
    };
    let mut num = |what: &str| -> Result<String, ImageIoError> {
        header_token(&mut r).map_err(|_| malformed(what))
    };
    let width: usize = num("width")?.parse().map_err(|_| malformed("width"))?;
    let height: usize = num("height")?.parse().map_err(|_| malformed("height"))?;
    let scale: f32 = num("scale")?.parse().map_err(|_| malformed("scale"))?;
    let little = scale < 0.0;
    let mut data = Vec::new();
    r.read_to_end(&mut data).map_err(io_err(path))?;
    let count = width * height * channels;
    if data.len() < count * 4 {
        return Err(malformed("truncated pixel data"));
    }
    let floats: Vec<f32> = data[..count * 4]
        .chunks_exact(4)
        .map(|b| {
            let b = [b[0], b[1], b[2], b[3]];
            if little {
                f32::from_le_bytes(b)
            } else {
                f32::from_be_bytes(b)
            }
        })
        .collect();
    let mut rgb = vec![[0.0; 3]; width * height];
    for (i, px) in floats.chunks_exact(channels).enumerate() {
        let (row_from_bottom, col) = (i / width, i % width);
        let row = height - 1 - row_from_bottom;
        rgb[row * width + col] = if channels == 3 {
            [px[0], px[1], px[2]]
        } else {
            [px[0]; 3]
        };
    }
    Ok(LinearImage { width, height, rgb })
}

pub fn linear_to_u8(c: f32) -> u8 {
    (c.clamp(0.0, 1.0).powf(1.0 / GAMMA) * 255.0).round() as u8
}

pub fn u8_to_linear(c: u8) -> f32 {
    (c as f32 / 255.0).powf(GAMMA)
}

/// Gamma-encode to 8-bit PNG bytes. Values are clamped to `[0, 1]` first.
pub fn encode_png(img: &LinearImage) -> Result<Vec<u8>, image::ImageError> {
    let buf: Vec<u8> = img.rgb.iter().flat_map(|px| px.map(linear_to_u8)).collect();
    let rgb = image::RgbImage::from_raw(img.width as u32, img.height as u32, buf)
        .expect("buffer size matches dimensions");
    let mut out = io::Cursor::new(Vec::new());
    rgb.write_to(&mut out, image::ImageFormat::Png)?;
    Ok(out.into_inner())
}

pub fn save_png(path: &Path, img: &LinearImage) -> Result<(), ImageIoError> {
    let bytes = encode_png(img).map_err(|source| ImageIoError::Png {
        path: path.display().to_string(),
        source,
    })?;
    fs::write(path, bytes).map_err(io_err(path))
}

pub fn load_png(path: &Path) -> Result<LinearImage, ImageIoError> {
    let img = image::open(path)
        .map_err(|source| ImageIoError::Png {
            path: path.display().to_string(),
            source,
        })?
        .to_rgb8();
    let (w, h) = img.dimensions();
    let rgb = img.pixels().map(|p| p.0.map(u8_to_linear)).collect();
    Ok(LinearImage {
        width: w as usize,
        height: h as usize,
        rgb,
    })
}

/// Dispatch on extension: `.pfm` or `.png`.
pub fn load_linear(path: &Path) -> Result<LinearImage, ImageIoError> {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase) {
        Some(e) if e == "pfm" => load_pfm(path),
        Some(e) if e == "png" => load_png(path),
        _ => Err(ImageIoError::UnsupportedFormat(path.display().to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> LinearImage {
        LinearImage {
            width: 3,
            height: 2,
            rgb: (0..6).map(|i| [i as f32 * 0.1, 1.5, -0.25 * i as f32]).collect(),
        }
    }

    #[test]
    fn pfm_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.pfm");
        save_pfm(&p, &sample()).unwrap();
        assert_eq!(load_pfm(&p).unwrap(), sample());
    }

    #[test]
    fn png_gamma_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.png");
        let img = LinearImage {
            width: 2,
            height: 1,
            rgb: vec![[0.0, 0.5, 1.0], [0.218, 2.0, -1.0]],
        };
        save_png(&p, &img).unwrap();
        let back = load_png(&p).unwrap();
        for (a, b) in back.rgb.iter().flatten().zip(img.rgb.iter().flatten()) {
            assert!((a - b.clamp(0.0, 1.0)).abs() < 0.01, "{a} vs {b}");
        }
    }

    #[test]
    fn truncated_pfm_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.pfm");
        let bytes = encode_pfm(&sample());
        fs::write(&p, &bytes[..bytes.len() - 5]).unwrap();
        assert!(matches!(load_pfm(&p), Err(ImageIoError::MalformedPfm { .. })));
    }
}
