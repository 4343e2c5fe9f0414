use super::ImageU8;
use crate::rng::Rng;

/// Multiplier applied to pixels under a synthetic shadow.
pub const SHADOW_DARKNESS: f64 = 0.65;

const SHADOW_QUADS: usize = 4;

/// Add a constant bias to every channel of every pixel, clamping to `[0, 255]`.
pub fn adjust_brightness(img: &ImageU8, beta: i32) -> ImageU8 {
    let mut out = img.clone();
    for v in out.data_mut() {
        *v = (*v as i32 + beta).clamp(0, 255) as u8;
    }
    out
}

/// Draw the vertices of four quadrangles in the lower half of a `w x h` frame.
///
/// Each vertex is `X ~ U{0..w-1}`, `Y ~ U{h/2..h-1}`; the four vertices of a
/// quad are ordered by angle around their centroid so the polygon is simple.
pub fn shadow_quads(width: usize, height: usize, rng: &mut Rng) -> Vec<[(f64, f64); 4]> {
    let y_lo = (height / 2) as i64;
    let y_hi = (height as i64).max(y_lo + 1);
    (0..SHADOW_QUADS)
        .map(|_| {
            let mut quad = [(0.0, 0.0); 4];
            for v in quad.iter_mut() {
                let x = rng.range_i64(0, width.max(1) as i64) as f64;
                let y = rng.range_i64(y_lo, y_hi) as f64;
                *v = (x, y);
            }
            let cx = quad.iter().map(|p| p.0).sum::<f64>() / 4.0;
            let cy = quad.iter().map(|p| p.1).sum::<f64>() / 4.0;
            quad.sort_by(|a, b| {
                let ta = (a.1 - cy).atan2(a.0 - cx);
                let tb = (b.1 - cy).atan2(b.0 - cx);
                ta.total_cmp(&tb)
            });
            quad
        })
        .collect()
}

/// Scale every pixel whose center lies inside at least one polygon by the
/// darkness coefficient (rounded to nearest). Overlaps darken once.
pub fn draw_shadow_quads(img: &ImageU8, quads: &[[(f64, f64); 4]]) -> ImageU8 {
    let (w, h) = (img.width(), img.height());
    let mut mask = vec![false; w * h];
    let mut xs: Vec<f64> = Vec::with_capacity(8);
    for quad in quads {
        for y in 0..h {
            let yc = y as f64 + 0.5;
            xs.clear();
            for i in 0..4 {
                let (x0, y0) = quad[i];
                let (x1, y1) = quad[(i + 1) % 4];
                // Half-open rule avoids double-counting shared vertices.
                if (y0 <= yc && yc < y1) || (y1 <= yc && yc < y0) {
                    xs.push(x0 + (yc - y0) * (x1 - x0) / (y1 - y0));
                }
            }
            xs.sort_by(f64::total_cmp);
            for pair in xs.chunks_exact(2) {
                // Pixel centres x + 0.5 in [a, b).
                let start = (pair[0] - 0.5).ceil().max(0.0) as usize;
                let end = ((pair[1] - 0.5).ceil().max(0.0) as usize).min(w);
                for x in start..end {
                    mask[y * w + x] = true;
                }
            }
        }
    }
    let mut out = img.clone();
    let data = out.data_mut();
    for (i, &inside) in mask.iter().enumerate() {
        if inside {
            for c in 0..3 {
                let v = &mut data[i * 3 + c];
                *v = (*v as f64 * SHADOW_DARKNESS).round() as u8;
            }
        }
    }
    out
}

/// Four random quadrangular shadows in the lower half of the frame.
pub fn apply_shadows(img: &ImageU8, rng: &mut Rng) -> ImageU8 {
    let quads = shadow_quads(img.width(), img.height(), rng);
    draw_shadow_quads(img, &quads)
}
