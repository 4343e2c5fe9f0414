use std::f64::consts::FRAC_PI_4;

use super::{CameraSlot, ImageU8, ImgError};

/// Mirror pixel columns and negate the steering label.
///
/// Only center-camera frames may be flipped: flipping a side frame swaps the
/// left and right viewpoints and invalidates its steering correction.
pub fn flip_horizontal(
    img: &ImageU8,
    steering: f32,
    slot: CameraSlot,
) -> Result<(ImageU8, f32), ImgError> {
    if slot.is_side() {
        return Err(ImgError::SideFrameFlip);
    }
    let w = img.width();
    let mut out = img.clone();
    for y in 0..img.height() {
        for x in 0..w {
            out.set_pixel(x, y, img.pixel(w - 1 - x, y));
        }
    }
    Ok((out, -steering))
}

/// Per-output-coordinate source index pair and interpolation weight.
struct Taps {
    lo: Vec<usize>,
    hi: Vec<usize>,
    frac: Vec<f32>,
}

/// Bilinear taps for `n_out` samples starting at source coordinate `start`
/// (continuous, pixel edges at integers) with spacing `step`.
fn taps(n_src: usize, n_out: usize, start: f64, step: f64) -> Taps {
    let mut t = Taps {
        lo: Vec::with_capacity(n_out),
        hi: Vec::with_capacity(n_out),
        frac: Vec::with_capacity(n_out),
    };
    let max = (n_src - 1) as f64;
    for i in 0..n_out {
        let s = (start + (i as f64 + 0.5) * step - 0.5).clamp(0.0, max);
        let lo = s.floor();
        let lo_i = lo as usize;
        t.lo.push(lo_i);
        t.hi.push((lo_i + 1).min(n_src - 1));
        t.frac.push((s - lo) as f32);
    }
    t
}

/// Resample the source rectangle `[x0, x0 + cw) x [y0, y0 + ch)` (continuous
/// coordinates) to `out_w x out_h` with bilinear interpolation.
pub fn crop_resize(
    img: &ImageU8,
    x0: f64,
    y0: f64,
    cw: f64,
    ch: f64,
    out_w: usize,
    out_h: usize,
) -> ImageU8 {
    let tx = taps(img.width(), out_w, x0, cw / out_w as f64);
    let ty = taps(img.height(), out_h, y0, ch / out_h as f64);
    let src = img.data();
    let stride = img.width() * 3;
    let mut out = vec![0u8; out_w * out_h * 3];
    for v in 0..out_h {
        let r0 = &src[ty.lo[v] * stride..(ty.lo[v] + 1) * stride];
        let r1 = &src[ty.hi[v] * stride..(ty.hi[v] + 1) * stride];
        let fy = ty.frac[v];
        let dst = &mut out[v * out_w * 3..(v + 1) * out_w * 3];
        for u in 0..out_w {
            let (a, b, fx) = (tx.lo[u] * 3, tx.hi[u] * 3, tx.frac[u]);
            for c in 0..3 {
                let top = r0[a + c] as f32 + (r0[b + c] as f32 - r0[a + c] as f32) * fx;
                let bot = r1[a + c] as f32 + (r1[b + c] as f32 - r1[a + c] as f32) * fx;
                dst[u * 3 + c] = (top + (bot - top) * fy).round().clamp(0.0, 255.0) as u8;
            }
        }
    }
    ImageU8::from_raw(out_w, out_h, out).expect("sized buffer")
}

/// Bilinear resize with pixel-center alignment.
pub fn resize(img: &ImageU8, out_w: usize, out_h: usize) -> ImageU8 {
    assert!(out_w > 0 && out_h > 0, "resize target must be non-empty");
    if out_w == img.width() && out_h == img.height() {
        return img.clone();
    }
    crop_resize(
        img,
        0.0,
        0.0,
        img.width() as f64,
        img.height() as f64,
        out_w,
        out_h,
    )
}

/// Translate by `(tx * width, ty * height)` pixels, crop away the null
/// border and resize the remaining region back to the original size.
pub fn pan(img: &ImageU8, tx: f64, ty: f64) -> ImageU8 {
    let (w, h) = (img.width() as f64, img.height() as f64);
    let dx = (tx * w).clamp(-(w - 1.0), w - 1.0);
    let dy = (ty * h).clamp(-(h - 1.0), h - 1.0);
    if dx == 0.0 && dy == 0.0 {
        return img.clone();
    }
    // Translated image T(x) = src(x - dx); its valid part maps back to this
    // source window.
    crop_resize(
        img,
        (-dx).max(0.0),
        (-dy).max(0.0),
        w - dx.abs(),
        h - dy.abs(),
        img.width(),
        img.height(),
    )
}

/// Largest-area axis-aligned rectangle centred in a `w x h` image rotated by
/// `phi` radians.
///
/// Half-constrained case (two corners on the long sides, the other two on
/// the line joining the short-side midpoints) when
/// `min(w, h) <= max(w, h) * sin(2|phi|)`; otherwise all four corners touch
/// the rotated sides.
pub fn max_axis_aligned_crop(w: f64, h: f64, phi: f64) -> Result<(f64, f64), ImgError> {
    if !(w > 0.0 && h > 0.0) {
        return Err(ImgError::OutOfRange(format!("crop of {w}x{h}")));
    }
    if !phi.is_finite() {
        return Err(ImgError::NonFinite("phi"));
    }
    if phi.abs() > FRAC_PI_4 + 1e-12 {
        return Err(ImgError::OutOfRange(format!("|phi| {phi} > pi/4")));
    }
    if phi == 0.0 {
        return Ok((w, h));
    }
    let a = phi.abs();
    let (sin_a, cos_a) = a.sin_cos();
    let (long, short) = if w >= h { (w, h) } else { (h, w) };
    if short <= long * (2.0 * a).sin() || (sin_a - cos_a).abs() < 1e-12 {
        let x = 0.5 * short;
        Ok(if w >= h {
            (x / sin_a, x / cos_a)
        } else {
            (x / cos_a, x / sin_a)
        })
    } else {
        let cos_2a = (2.0 * a).cos();
        Ok((
            (w * cos_a - h * sin_a) / cos_2a,
            (h * cos_a - w * sin_a) / cos_2a,
        ))
    }
}

/// Rotate about the image centre by `phi_deg` degrees (counter-clockwise as
/// displayed), crop the maximal central axis-aligned region and resize it
/// back to the original dimensions.
pub fn tilt(img: &ImageU8, phi_deg: f64) -> ImageU8 {
    if phi_deg == 0.0 {
        return img.clone();
    }
    let (w, h) = (img.width(), img.height());
    let (wf, hf) = (w as f64, h as f64);
    let phi = phi_deg.to_radians();
    let (w_roi, h_roi) = max_axis_aligned_crop(wf, hf, phi).expect("|phi| small");
    let (sin, cos) = phi.sin_cos();
    let (cx, cy) = (wf / 2.0, hf / 2.0);
    let (sx, sy) = (w_roi / wf, h_roi / hf);
    let (rx0, ry0) = (cx - w_roi / 2.0, cy - h_roi / 2.0);
    let src = img.data();
    let stride = w * 3;
    let mut out = vec![0u8; w * h * 3];
    for v in 0..h {
        let py = ry0 + (v as f64 + 0.5) * sy - cy;
        for u in 0..w {
            let px = rx0 + (u as f64 + 0.5) * sx - cx;
            // Inverse of the forward rotation [[cos, sin], [-sin, cos]].
            let xs = (cos * px - sin * py + cx - 0.5).clamp(0.0, wf - 1.0);
            let ys = (sin * px + cos * py + cy - 0.5).clamp(0.0, hf - 1.0);
            let (x0, y0) = (xs.floor() as usize, ys.floor() as usize);
            let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
            let (fx, fy) = ((xs - x0 as f64) as f32, (ys - y0 as f64) as f32);
            for c in 0..3 {
                let p00 = src[y0 * stride + x0 * 3 + c] as f32;
                let p01 = src[y0 * stride + x1 * 3 + c] as f32;
                let p10 = src[y1 * stride + x0 * 3 + c] as f32;
                let p11 = src[y1 * stride + x1 * 3 + c] as f32;
                let top = p00 + (p01 - p00) * fx;
                let bot = p10 + (p11 - p10) * fx;
                out[(v * w + u) * 3 + c] = (top + (bot - top) * fy).round().clamp(0.0, 255.0) as u8;
            }
        }
    }
    ImageU8::from_raw(w, h, out).expect("sized buffer")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gradient(w: usize, h: usize) -> ImageU8 {
        let mut img = ImageU8::new(w, h);
        for y in 0..h {
            for x in 0..w {
                img.set_pixel(x, y, [(x % 256) as u8, (y % 256) as u8, ((x + y) % 256) as u8]);
            }
        }
        img
    }

    #[test]
    fn flip_negates_and_mirrors() {
        let img = gradient(7, 3);
        let (f, s) = flip_horizontal(&img, 0.3, CameraSlot::Center).unwrap();
        assert_eq!(s, -0.3);
        assert_eq!(f.pixel(0, 1), img.pixel(6, 1));
        let (ff, ss) = flip_horizontal(&f, s, CameraSlot::Center).unwrap();
        assert_eq!((ff, ss), (img.clone(), 0.3));
        let (_, z) = flip_horizontal(&img, 0.0, CameraSlot::Center).unwrap();
        assert_eq!(z, 0.0);
    }

    #[test]
    fn flip_rejects_side_frames() {
        let img = gradient(4, 4);
        assert!(matches!(
            flip_horizontal(&img, 0.1, CameraSlot::Left),
            Err(ImgError::SideFrameFlip)
        ));
        assert!(flip_horizontal(&img, 0.1, CameraSlot::Right).is_err());
    }

    #[test]
    fn resize_default_factors() {
        let out = resize(&gradient(320, 160), 64, 64);
        assert_eq!((out.width(), out.height()), (64, 64));
    }

    #[test]
    fn resize_constant_and_identity() {
        let c = ImageU8::filled(320, 160, [37, 200, 9]);
        for (w, h) in [(64, 64), (200, 66), (17, 5), (640, 320)] {
            let r = resize(&c, w, h);
            assert!(r.data().chunks(3).all(|p| p == [37, 200, 9]));
        }
        let g = gradient(33, 21);
        assert_eq!(resize(&g, 33, 21), g);
        // Non-shortcut path with unit scale is also exact.
        assert_eq!(crop_resize(&g, 0.0, 0.0, 33.0, 21.0, 33, 21), g);
    }

    #[test]
    fn pan_zero_is_identity() {
        let g = gradient(320, 160);
        assert_eq!(pan(&g, 0.0, 0.0), g);
    }

    #[test]
    fn pan_shift_magnitude() {
        // tx = 0.05 at 320 px is a 16 px shift: the left 304 columns are
        // stretched back to 320.
        let g = gradient(320, 160);
        let p = pan(&g, 0.05, 0.0);
        let expect = crop_resize(&g, 0.0, 0.0, 304.0, 160.0, 320, 160);
        assert_eq!(p, expect);
        let n = pan(&g, -0.05, 0.0);
        assert_eq!(n, crop_resize(&g, 16.0, 0.0, 304.0, 160.0, 320, 160));
        assert_eq!(p.pixel(0, 10), g.pixel(0, 10));
    }

    #[test]
    fn crop_no_rotation() {
        assert_eq!(max_axis_aligned_crop(320.0, 160.0, 0.0).unwrap(), (320.0, 160.0));
    }

    #[test]
    fn crop_one_degree() {
        let (w, h) = max_axis_aligned_crop(320.0, 160.0, 1f64.to_radians()).unwrap();
        assert!((w - 317.35).abs() < 0.01, "{w}");
        assert!((h - 154.49).abs() < 0.01, "{h}");
        let (w2, h2) = max_axis_aligned_crop(320.0, 160.0, -1f64.to_radians()).unwrap();
        assert_eq!((w, h), (w2, h2));
    }

    #[test]
    fn crop_selector_never_half_constrained_in_augmentation_range() {
        for i in 0..=2000 {
            let phi = (-1.0 + i as f64 / 1000.0).to_radians();
            assert!(160.0 > 320.0 * (2.0 * phi.abs()).sin());
        }
    }

    #[test]
    fn crop_rejects_bad_args() {
        assert!(max_axis_aligned_crop(0.0, 10.0, 0.1).is_err());
        assert!(max_axis_aligned_crop(10.0, 10.0, 1.0).is_err());
        assert!(max_axis_aligned_crop(10.0, 10.0, f64::NAN).is_err());
    }

    #[test]
    fn tilt_zero_and_shape() {
        let g = gradient(320, 160);
        assert_eq!(tilt(&g, 0.0), g);
        let t = tilt(&g, 1.0);
        assert_eq!((t.width(), t.height()), (320, 160));
        // Small rotation of a constant image stays constant.
        let c = ImageU8::filled(320, 160, [5, 6, 7]);
        assert_eq!(tilt(&c, 0.7), c);
    }
}
