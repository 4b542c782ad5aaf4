//! Raster image of a diagram: flux upwards, chemical potential to the right.

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ImageEncoder, Rgb, RgbImage};
use palette::{FromColor, Hsv, Srgb};

use super::{ButterflyDiagram, FluxEntry};
use crate::error::{Error, Result};
use crate::spectrum::GapRecord;

/// Band interiors and anything no gap covers.
pub const BACKGROUND: [u8; 3] = [255, 255, 255];
/// `sigma = 0`.
pub const NEUTRAL: [u8; 3] = [236, 230, 214];
/// Open gaps without a Chern label.
pub const UNRESOLVED: [u8; 3] = [128, 128, 128];
pub const CLOSED: [u8; 3] = [0, 0, 0];

/// Signed cyclic palette: `|sigma|` picks a hue in `[0, 180)` that repeats
/// with period `period / 2`, and negative values get the opposite hue.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Palette {
    period: u64,
}

impl Palette {
    pub fn new(period: u64) -> Self {
        Palette { period: period.max(2) }
    }

    /// Period `2 max |sigma|` over the labelled gaps of `diagram`.
    pub fn for_diagram(diagram: &ButterflyDiagram) -> Self {
        let max = diagram
            .entries
            .iter()
            .flat_map(|e| &e.gaps)
            .filter_map(|g| g.chern)
            .map(|s| s.unsigned_abs())
            .max()
            .unwrap_or(1);
        Palette::new(2 * max)
    }

    pub fn period(&self) -> u64 {
        self.period
    }

    pub fn hue(&self, sigma: i64) -> Option<f64> {
        if sigma == 0 {
            return None;
        }
        let half = self.period / 2;
        let base = ((sigma.unsigned_abs() - 1) % half) as f64 * 180.0 / half as f64;
        Some(if sigma < 0 { base + 180.0 } else { base })
    }

    pub fn color(&self, sigma: i64) -> [u8; 3] {
        let Some(h) = self.hue(sigma) else { return NEUTRAL };
        let value = if sigma.unsigned_abs() % 2 == 0 { 0.78 } else { 0.95 };
        let rgb: Srgb<u8> = Srgb::from_color(Hsv::new(h as f32, 0.85, value)).into_format();
        [rgb.red, rgb.green, rgb.blue]
    }

    fn gap_color(&self, g: &GapRecord) -> [u8; 3] {
        match g.chern {
            _ if g.closed => CLOSED,
            Some(s) => self.color(s),
            None => UNRESOLVED,
        }
    }
}

/// Resolution to which gap ends are rounded before painting.
const SNAP: f64 = 1e-9;

/// Colors of one flux row. Pixel `x` samples energy
/// `e_max (2x + 1 - w) / w`; open gaps paint the pixels strictly inside them
/// and a closed gap marks the pixels within half a pixel of its midpoint.
fn row_colors(entry: &FluxEntry, w: usize, e_max: f64, palette: &Palette) -> Vec<Option<[u8; 3]>> {
    let mut row = vec![None; w];
    let energy = |x: usize| e_max * (2.0 * x as f64 + 1.0 - w as f64) / w as f64;
    let half_pixel = e_max / w as f64;
    // odd under E -> -E, so mirrored gaps equal to rounding cover mirrored pixels
    let snap = |e: f64| (e / SNAP).round() * SNAP;
    for g in &entry.gaps {
        let color = palette.gap_color(g);
        let (lo, hi) = (snap(g.lo), snap(g.hi));
        if g.closed {
            let mid = 0.5 * (lo + hi);
            for (x, px) in row.iter_mut().enumerate() {
                if px.is_none() && (mid - energy(x)).abs() <= half_pixel {
                    *px = Some(color);
                }
            }
        } else {
            for (x, px) in row.iter_mut().enumerate() {
                let e = energy(x);
                if lo < e && e < hi {
                    *px = Some(color);
                }
            }
        }
    }
    row
}

/// Distance `|2 q y - 2 p (h - 1)| / 2q` from row `y` to the row of `p/q`,
/// as a fraction.
#[derive(Debug, Clone, Copy)]
struct Claim {
    entry: usize,
    num: u128,
    den: u128,
    q: u64,
}

impl Claim {
    fn cmp_key(&self, other: &Claim) -> std::cmp::Ordering {
        (self.num * other.den).cmp(&(other.num * self.den)).then(self.q.cmp(&other.q))
    }
}

/// Renders the diagram. Row `y` (counted from the bottom) is owned by the
/// nearest flux whose band `max(1, round(h c / q))` rows thick covers it,
/// with ties going to the smaller `q` and then to the pixel colour. The flux
/// `1/1` is drawn at both ends of the axis. All placement arithmetic is
/// exact, so the image is symmetric under `(Phi, E) -> (-Phi, -E)` whenever
/// the diagram is.
pub fn render(diagram: &ButterflyDiagram) -> RgbImage {
    let c = &diagram.config;
    let (w, h) = (c.mu_bins, c.height);
    let palette = c.palette_period.map(Palette::new).unwrap_or_else(|| Palette::for_diagram(diagram));
    let e_max = c.energy_clamp();
    let span = (h - 1) as u128;

    let mut owners: Vec<Vec<Claim>> = vec![Vec::new(); h];
    for (i, e) in diagram.entries.iter().enumerate() {
        if e.q == 0 || e.p > e.q {
            continue;
        }
        let thick = ((h as f64 * c.row_scale / e.q as f64).round() as u128).max(1);
        let q = e.q as u128;
        let places: &[u128] = if e.p == e.q { &[0, 1] } else { &[e.p as u128] };
        for &p in places {
            let centre = 2 * p * span; // in units of 1/2q rows
            let reach = q * thick;
            let lo = centre.saturating_sub(reach).div_ceil(2 * q);
            let hi = ((centre + reach) / (2 * q)).min(span);
            for y in lo..=hi {
                let num = (2 * q * y).abs_diff(centre);
                let claim = Claim { entry: i, num, den: 2 * q, q: e.q };
                let slot = &mut owners[y as usize];
                match slot.first().map(|c| claim.cmp_key(c)) {
                    None => slot.push(claim),
                    Some(std::cmp::Ordering::Less) => *slot = vec![claim],
                    Some(std::cmp::Ordering::Equal) => slot.push(claim),
                    Some(std::cmp::Ordering::Greater) => {}
                }
            }
        }
    }

    let mut img = RgbImage::from_pixel(w as u32, h as u32, Rgb(BACKGROUND));
    for (y, claims) in owners.iter().enumerate() {
        if claims.is_empty() {
            continue;
        }
        let rows: Vec<Vec<Option<[u8; 3]>>> =
            claims.iter().map(|cl| row_colors(&diagram.entries[cl.entry], w, e_max, &palette)).collect();
        let img_y = (h - 1 - y) as u32;
        for x in 0..w {
            if let Some(px) = rows.iter().filter_map(|r| r[x]).min() {
                img.put_pixel(x as u32, img_y, Rgb(px));
            }
        }
    }
    img
}

/// Binary PPM (P6) bytes.
pub fn encode_ppm(img: &RgbImage) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    PnmEncoder::new(&mut out)
        .with_subtype(PnmSubtype::Pixmap(SampleEncoding::Binary))
        .write_image(img.as_raw(), img.width(), img.height(), image::ExtendedColorType::Rgb8)
        .map_err(|e| Error::Io(e.to_string()))?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn opposite_signs_have_opposite_hues() {
        let p = Palette::new(10);
        for s in 1..=12i64 {
            let (a, b) = (p.hue(s).unwrap(), p.hue(-s).unwrap());
            assert!(((b - a).rem_euclid(360.0) - 180.0).abs() < 1e-12);
            assert_ne!(p.color(s), p.color(-s));
        }
        assert_eq!(p.hue(0), None);
        assert_eq!(p.color(0), NEUTRAL);
        assert_eq!(p.hue(1), p.hue(6));
        assert_ne!(p.hue(1), p.hue(2));
    }

    #[test]
    fn reserved_colors_are_not_in_the_palette() {
        let p = Palette::new(16);
        for s in -8..=8 {
            let c = p.color(s);
            for r in [BACKGROUND, UNRESOLVED, CLOSED] {
                assert_ne!(c, r);
            }
            if s != 0 {
                assert_ne!(c, NEUTRAL);
            }
        }
    }
}
