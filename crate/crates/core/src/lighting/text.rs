//! Plain-text light files.
//!
//! Point lights, one per line: `x y z r g b` (the direction need not be
//! unit). SH lighting: the degree, then `(d+1)²` coefficients for each of
//! r, g and b in turn. Blank lines and `#` comments are ignored in both.

use std::fmt::Write as _;

use super::{LightingError, PointLight};
use crate::sh::{coeff_count, ShLightingRgb, ShVector, MAX_DEGREE};

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

fn parse_err(line: usize, reason: impl Into<String>) -> LightingError {
    LightingError::Parse {
        line,
        reason: reason.into(),
    }
}

pub fn parse_point_lights(text: &str) -> Result<Vec<PointLight>, LightingError> {
    let mut out = Vec::new();
    for (line, l) in content_lines(text) {
        let v: Vec<f64> = l
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| parse_err(line, format!("not a number: {t:?}"))))
            .collect::<Result<_, _>>()?;
        if v.len() != 6 {
            return Err(parse_err(line, format!("expected 6 values (x y z r g b), found {}", v.len())));
        }
        let light = PointLight::new(glam::DVec3::new(v[0], v[1], v[2]), [v[3], v[4], v[5]])
            .map_err(|e| parse_err(line, e.to_string()))?;
        out.push(light);
    }
    if out.is_empty() {
        return Err(parse_err(0, "no lights"));
    }
    Ok(out)
}

pub fn format_point_lights(lights: &[PointLight]) -> String {
    let mut s = String::new();
    for l in lights {
        let d = l.direction;
        let r = l.radiance;
        let _ = writeln!(s, "{} {} {} {} {} {}", d.x, d.y, d.z, r[0], r[1], r[2]);
    }
    s
}

pub fn parse_sh_lighting(text: &str) -> Result<ShLightingRgb, LightingError> {
    let mut tokens = content_lines(text).flat_map(|(line, l)| l.split_whitespace().map(move |t| (line, t)));
    let (line, t) = tokens.next().ok_or_else(|| parse_err(0, "empty SH file"))?;
    let degree: u32 = t.parse().map_err(|_| parse_err(line, format!("degree must be an integer, found {t:?}")))?;
    if degree > MAX_DEGREE {
        return Err(parse_err(line, format!("degree {degree} > {MAX_DEGREE}")));
    }
    let values: Vec<f64> = tokens
        .map(|(line, t)| t.parse::<f64>().map_err(|_| parse_err(line, format!("not a number: {t:?}"))))
        .collect::<Result<_, _>>()?;
    let n = coeff_count(degree);
    if values.len() != 3 * n {
        return Err(parse_err(0, format!("degree {degree} needs {} coefficients, found {}", 3 * n, values.len())));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(parse_err(0, "non-finite coefficient"));
    }
    let row = |c: usize| ShVector::from_slice(degree, &values[c * n..(c + 1) * n]).expect("length checked");
    Ok(ShLightingRgb::new(row(0), row(1), row(2)).expect("same degree"))
}

pub fn format_sh_lighting(sh: &ShLightingRgb) -> String {
    let mut s = format!("{}\n", sh.degree());
    for ch in &sh.channels {
        let row: Vec<String> = ch.as_slice().iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "{}", row.join(" "));
    }
    s
}
