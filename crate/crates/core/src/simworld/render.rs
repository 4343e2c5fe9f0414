use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::geometry::Centerline;
use super::scenario::{SceneLight, TrackScenario};
use super::vehicle::VehicleState;
use crate::imgproc::{CameraSlot, ImageU8, FRAME_HEIGHT, FRAME_WIDTH, SHADOW_DARKNESS};

/// Ground texture resolution, metres per texel.
const TEXEL_M: f64 = 0.1;
/// Texture margin beyond the road edge (wider around bridges for water).
const MARGIN_M: f64 = 3.0;
const BRIDGE_MARGIN_M: f64 = 12.0;
/// Ground beyond this distance is drawn as horizon haze.
const MAX_GROUND_M: f64 = 400.0;

const GRASS: [f64; 3] = [64.0, 112.0, 46.0];
const SHOULDER: [f64; 3] = [122.0, 106.0, 82.0];
const ASPHALT: [f64; 3] = [86.0, 86.0, 92.0];
const LINE: [f64; 3] = [226.0, 226.0, 222.0];
const PLANK: [f64; 3] = [128.0, 96.0, 62.0];
const SEAM: [f64; 3] = [72.0, 54.0, 36.0];
const WATER: [f64; 3] = [46.0, 82.0, 128.0];
const CANOPY: [f64; 3] = [32.0, 70.0, 30.0];
const HAZE: [f64; 3] = [176.0, 196.0, 210.0];
const SKY_TOP: [f64; 3] = [112.0, 160.0, 220.0];
const CONE: [u8; 3] = [250, 110, 20];
const CONE_BAND: [u8; 3] = [240, 240, 240];

/// Camera geometry shared by the three mounting slots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraRig {
    /// 1 (center only) or 3 (center, left, right).
    pub count: usize,
    /// Lateral distance of each side camera from the center camera.
    pub side_offset_m: f64,
    pub height_m: f64,
    pub pitch_deg: f64,
    pub fov_deg: f64,
    /// Mount position ahead of the rear axle.
    pub forward_m: f64,
    pub width: usize,
    pub height: usize,
}

impl Default for CameraRig {
    fn default() -> Self {
        Self {
            count: 3,
            side_offset_m: 0.95,
            height_m: 1.4,
            pitch_deg: 8.0,
            fov_deg: 60.0,
            forward_m: 1.5,
            width: FRAME_WIDTH,
            height: FRAME_HEIGHT,
        }
    }
}

impl CameraRig {
    pub fn single() -> Self {
        Self {
            count: 1,
            ..Self::default()
        }
    }

    pub fn slots(&self) -> &'static [CameraSlot] {
        if self.count == 1 {
            &[CameraSlot::Center]
        } else {
            &[CameraSlot::Center, CameraSlot::Left, CameraSlot::Right]
        }
    }

    /// Lateral mount offset of `slot`, positive to the left.
    pub fn lateral(&self, slot: CameraSlot) -> f64 {
        match slot {
            CameraSlot::Center => 0.0,
            CameraSlot::Left => self.side_offset_m,
            CameraSlot::Right => -self.side_offset_m,
        }
    }

    pub fn focal_px(&self) -> f64 {
        (self.width as f64 / 2.0) / (self.fov_deg.to_radians() / 2.0).tan()
    }

    /// Project a point given in the vehicle frame (forward, left, up above
    /// ground) into pixel coordinates for `slot`. `None` behind the camera.
    pub fn project(&self, slot: CameraSlot, forward: f64, left: f64, up: f64) -> Option<(f64, f64, f64)> {
        let (f, l, u) = (forward - self.forward_m, left - self.lateral(slot), up - self.height_m);
        let p = self.pitch_deg.to_radians();
        let z = f * p.cos() - u * p.sin();
        if z <= 0.1 {
            return None;
        }
        let down = -f * p.sin() - u * p.cos();
        let focal = self.focal_px();
        Some((
            self.width as f64 / 2.0 + focal * (-l) / z,
            self.height as f64 / 2.0 + focal * down / z,
            z,
        ))
    }
}

/// Per-pixel ground intersection in the vehicle frame.
#[derive(Debug, Clone)]
struct RayTable {
    /// `(forward, left)` per pixel; NaN where the ray misses the ground.
    ground: Vec<[f32; 2]>,
    /// Distance weight of horizon haze per pixel.
    haze: Vec<f32>,
}

impl RayTable {
    fn new(rig: &CameraRig, slot: CameraSlot) -> Self {
        let focal = rig.focal_px();
        let p = rig.pitch_deg.to_radians();
        let (w, h) = (rig.width, rig.height);
        let mut ground = Vec::with_capacity(w * h);
        let mut haze = Vec::with_capacity(w * h);
        for v in 0..h {
            for u in 0..w {
                let xc = (u as f64 + 0.5 - w as f64 / 2.0) / focal;
                let yc = (v as f64 + 0.5 - h as f64 / 2.0) / focal;
                let denom = p.sin() + yc * p.cos();
                let t = if denom > 1e-6 { rig.height_m / denom } else { f64::INFINITY };
                let fwd = t * (p.cos() - yc * p.sin());
                let left = -t * xc;
                let d = fwd.hypot(left);
                if d.is_finite() && d < MAX_GROUND_M {
                    ground.push([
                        (fwd + rig.forward_m) as f32,
                        (left + rig.lateral(slot)) as f32,
                    ]);
                    haze.push(((d - 60.0) / 200.0).clamp(0.0, 0.75) as f32);
                } else {
                    ground.push([f32::NAN; 2]);
                    haze.push(1.0);
                }
            }
        }
        Self { ground, haze }
    }
}

/// Top-down RGB ground raster.
#[derive(Debug, Clone)]
pub(crate) struct Texture {
    x0: f64,
    y0: f64,
    w: usize,
    h: usize,
    data: Vec<u8>,
}

fn hash2(ix: i64, iy: i64, seed: u64) -> u64 {
    let mut z = (ix as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (iy as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
        ^ seed.wrapping_mul(0x1656_67B1_9E37_79F9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Noise in `[-amp, amp]`.
fn noise(ix: i64, iy: i64, seed: u64, amp: f64) -> f64 {
    (hash2(ix, iy, seed) >> 11) as f64 / (1u64 << 53) as f64 * 2.0 * amp - amp
}

impl Texture {
    fn put(&mut self, i: usize, c: [f64; 3], n: f64) {
        for (d, v) in self.data[i * 3..i * 3 + 3].iter_mut().zip(c) {
            *d = (v + n).round().clamp(0.0, 255.0) as u8;
        }
    }

    fn texel_center(&self, ix: usize, iy: usize) -> [f64; 2] {
        [
            self.x0 + (ix as f64 + 0.5) * TEXEL_M,
            self.y0 + (iy as f64 + 0.5) * TEXEL_M,
        ]
    }

    /// Texel index range covering `[lo, hi]` along one axis.
    fn span(origin: f64, n: usize, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let a = ((lo - origin) / TEXEL_M).floor().max(0.0) as usize;
        let b = (((hi - origin) / TEXEL_M).ceil().max(0.0) as usize).min(n);
        a.min(b)..b
    }

    fn bake(sc: &TrackScenario, line: &Centerline) -> Self {
        let max_half = sc.widths.iter().fold(0.0f64, |a, &w| a.max(w / 2.0));
        let pad = max_half + BRIDGE_MARGIN_M + 2.0;
        let pts = line.points();
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in pts {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k] - pad);
                hi[k] = hi[k].max(p[k] + pad);
            }
        }
        let w = ((hi[0] - lo[0]) / TEXEL_M).ceil() as usize;
        let h = ((hi[1] - lo[1]) / TEXEL_M).ceil() as usize;
        let mut tex = Texture {
            x0: lo[0],
            y0: lo[1],
            w,
            h,
            data: vec![0; w * h * 3],
        };
        let seed = sc.texture_seed;
        for iy in 0..h {
            for ix in 0..w {
                let n = noise(ix as i64, iy as i64, seed, 9.0) + noise(ix as i64 / 8, iy as i64 / 8, seed ^ 1, 6.0);
                tex.put(iy * w + ix, GRASS, n);
            }
        }

        // Nearest-segment search restricted to a band around each segment.
        let mut best: Vec<f32> = vec![f32::INFINITY; w * h];
        let mut lat: Vec<f32> = vec![0.0; w * h];
        let mut arc: Vec<f32> = vec![0.0; w * h];
        let n = pts.len();
        for i in 0..n {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            let s0 = line.vertex_s(i);
            let reach = sc.widths[i] / 2.0
                + if sc.on_bridge(s0) { BRIDGE_MARGIN_M } else { MARGIN_M };
            let ab = [b[0] - a[0], b[1] - a[1]];
            let len2 = ab[0] * ab[0] + ab[1] * ab[1];
            let xs = Self::span(tex.x0, w, a[0].min(b[0]) - reach, a[0].max(b[0]) + reach);
            let ys = Self::span(tex.y0, h, a[1].min(b[1]) - reach, a[1].max(b[1]) + reach);
            for iy in ys {
                for ix in xs.clone() {
                    let p = tex.texel_center(ix, iy);
                    let ap = [p[0] - a[0], p[1] - a[1]];
                    let t = ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0);
                    let d = (ap[0] - t * ab[0]).hypot(ap[1] - t * ab[1]);
                    let k = iy * w + ix;
                    if d <= reach && (d as f32) < best[k] {
                        best[k] = d as f32;
                        let cross = ab[0] * ap[1] - ab[1] * ap[0];
                        lat[k] = if cross >= 0.0 { d as f32 } else { -d as f32 };
                        arc[k] = (s0 + t * len2.sqrt()) as f32;
                    }
                }
            }
        }

        for iy in 0..h {
            for ix in 0..w {
                let k = iy * w + ix;
                if !best[k].is_finite() {
                    continue;
                }
                let (l, s) = (lat[k] as f64, line.wrap_s(arc[k] as f64));
                let half = sc.half_width_at(line, s);
                let bridge = sc.on_bridge(s);
                let fine = noise(ix as i64, iy as i64, seed ^ 2, 5.0);
                let colour = if l.abs() <= half {
                    let edge = l.abs() >= half - 0.45 && l.abs() <= half - 0.2;
                    let divider = sc.lanes == 2 && l.abs() <= 0.1 && s.rem_euclid(9.0) < 3.0;
                    if edge || divider {
                        LINE
                    } else if bridge {
                        if s.rem_euclid(0.6) < 0.08 { SEAM } else { PLANK }
                    } else {
                        ASPHALT
                    }
                } else if bridge {
                    WATER
                } else if l.abs() <= half + 1.2 {
                    SHOULDER
                } else {
                    continue;
                };
                tex.put(k, colour, fine);
            }
        }

        for prop in &sc.props {
            tex.disc(prop.x, prop.y, prop.radius, |c| {
                let _ = c;
                CANOPY
            });
        }
        tex
    }

    /// Apply `f` to every texel whose center lies inside the disc.
    fn disc(&mut self, cx: f64, cy: f64, r: f64, f: impl Fn([f64; 3]) -> [f64; 3]) {
        let xs = Self::span(self.x0, self.w, cx - r, cx + r);
        let ys = Self::span(self.y0, self.h, cy - r, cy + r);
        for iy in ys {
            for ix in xs.clone() {
                let p = self.texel_center(ix, iy);
                if (p[0] - cx).hypot(p[1] - cy) <= r {
                    let k = (iy * self.w + ix) * 3;
                    let c = [self.data[k] as f64, self.data[k + 1] as f64, self.data[k + 2] as f64];
                    let out = f(c);
                    for (d, v) in self.data[k..k + 3].iter_mut().zip(out) {
                        *d = v.round().clamp(0.0, 255.0) as u8;
                    }
                }
            }
        }
    }

    /// Darken the union of prop shadows once by the shadow factor. Shadows
    /// are the prop discs displaced along world +y by `height * tan(angle)`.
    fn with_shadows(&self, sc: &TrackScenario, direction_deg: f64) -> Texture {
        let mut mask = vec![false; self.w * self.h];
        let shift = direction_deg.clamp(-85.0, 85.0).to_radians().tan();
        for prop in &sc.props {
            let (cx, cy, r) = (prop.x, prop.y + prop.height * shift, prop.radius);
            let xs = Self::span(self.x0, self.w, cx - r, cx + r);
            let ys = Self::span(self.y0, self.h, cy - r, cy + r);
            for iy in ys {
                for ix in xs.clone() {
                    let p = self.texel_center(ix, iy);
                    if (p[0] - cx).hypot(p[1] - cy) <= r {
                        mask[iy * self.w + ix] = true;
                    }
                }
            }
        }
        let mut out = self.clone();
        for (k, m) in mask.iter().enumerate() {
            if *m {
                for v in &mut out.data[k * 3..k * 3 + 3] {
                    *v = (*v as f64 * SHADOW_DARKNESS).round() as u8;
                }
            }
        }
        out
    }

    /// Bilinear sample at world coordinates; grass outside the raster.
    fn sample(&self, x: f64, y: f64) -> [f64; 3] {
        let fx = (x - self.x0) / TEXEL_M - 0.5;
        let fy = (y - self.y0) / TEXEL_M - 0.5;
        if !(fx >= 0.0 && fy >= 0.0 && fx < (self.w - 1) as f64 && fy < (self.h - 1) as f64) {
            return GRASS;
        }
        let (ix, iy) = (fx as usize, fy as usize);
        let (tx, ty) = (fx - ix as f64, fy - iy as f64);
        let k = (iy * self.w + ix) * 3;
        let row = self.w * 3;
        let mut out = [0.0; 3];
        for (c, o) in out.iter_mut().enumerate() {
            let a = self.data[k + c] as f64;
            let b = self.data[k + 3 + c] as f64;
            let d = self.data[k + row + c] as f64;
            let e = self.data[k + row + 3 + c] as f64;
            *o = (a * (1.0 - tx) + b * tx) * (1.0 - ty) + (d * (1.0 - tx) + e * tx) * ty;
        }
        out
    }
}

/// Renders camera frames of one scenario under one light direction.
#[derive(Debug, Clone)]
pub struct Renderer {
    rig: CameraRig,
    base: Arc<Texture>,
    shaded: Arc<Texture>,
    shadow_direction_deg: f64,
    tables: Arc<[RayTable; 3]>,
    sky: Vec<[f64; 3]>,
}

fn slot_index(slot: CameraSlot) -> usize {
    match slot {
        CameraSlot::Center => 0,
        CameraSlot::Left => 1,
        CameraSlot::Right => 2,
    }
}

impl Renderer {
    pub fn new(sc: &TrackScenario, line: &Centerline, rig: CameraRig) -> Self {
        let base = Texture::bake(sc, line);
        let shaded = Arc::new(base.with_shadows(sc, sc.light.direction_deg));
        let tables = Arc::new([
            RayTable::new(&rig, CameraSlot::Center),
            RayTable::new(&rig, CameraSlot::Left),
            RayTable::new(&rig, CameraSlot::Right),
        ]);
        let sky = (0..rig.height)
            .map(|v| {
                let t = (v as f64 / (rig.height as f64 / 2.0)).min(1.0);
                [0, 1, 2].map(|c| SKY_TOP[c] * (1.0 - t) + HAZE[c] * t)
            })
            .collect();
        Self {
            rig,
            base: Arc::new(base),
            shaded,
            shadow_direction_deg: sc.light.direction_deg,
            tables,
            sky,
        }
    }

    /// Same geometry with shadows recast for `light`; shares the base raster.
    pub fn relit(&self, sc: &TrackScenario, light: &SceneLight) -> Self {
        let mut out = self.clone();
        if light.direction_deg != self.shadow_direction_deg {
            out.shaded = Arc::new(self.base.with_shadows(sc, light.direction_deg));
            out.shadow_direction_deg = light.direction_deg;
        }
        out
    }

    pub fn rig(&self) -> &CameraRig {
        &self.rig
    }

    /// Frame from `slot` at vehicle pose `state`. Pixel values are the unlit
    /// scene colour times the light's brightness scale, clamped to 255.
    pub fn render(&self, sc: &TrackScenario, state: &VehicleState, slot: CameraSlot, light: &SceneLight) -> ImageU8 {
        let (w, h) = (self.rig.width, self.rig.height);
        let table = &self.tables[slot_index(slot)];
        let (c, s) = (state.yaw.cos(), state.yaw.sin());
        let mut img = ImageU8::new(w, h);
        {
            let data = img.data_mut();
            for (i, (g, &hz)) in table.ground.iter().zip(&table.haze).enumerate() {
                let colour = if g[0].is_nan() {
                    self.sky[i / w]
                } else {
                    let (f, l) = (g[0] as f64, g[1] as f64);
                    let t = self.shaded.sample(state.x + c * f - s * l, state.y + s * f + c * l);
                    let hz = hz as f64;
                    [0, 1, 2].map(|k| t[k] * (1.0 - hz) + HAZE[k] * hz)
                };
                for k in 0..3 {
                    data[i * 3 + k] = colour[k].round() as u8;
                }
            }
        }
        self.draw_cones(sc, state, slot, &mut img);
        let scale = light.brightness_scale();
        if scale != 1.0 {
            for v in img.data_mut() {
                *v = (*v as f64 * scale).round().min(255.0) as u8;
            }
        }
        img
    }

    fn draw_cones(&self, sc: &TrackScenario, state: &VehicleState, slot: CameraSlot, img: &mut ImageU8) {
        let (c, s) = (state.yaw.cos(), state.yaw.sin());
        let mut visible: Vec<(f64, f64, f64, f64)> = sc
            .obstacles
            .iter()
            .filter_map(|cone| {
                let (dx, dy) = (cone.x - state.x, cone.y - state.y);
                let fwd = c * dx + s * dy;
                let left = -s * dx + c * dy;
                let (u, v, z) = self.rig.project(slot, fwd, left, cone.radius)?;
                (z < 120.0).then(|| (z, u, v, self.rig.focal_px() * cone.radius / z))
            })
            .collect();
        visible.sort_by(|a, b| b.0.total_cmp(&a.0));
        let (w, h) = (img.width() as i64, img.height() as i64);
        for (_, u, v, r) in visible {
            let x0 = ((u - r).floor() as i64).max(0);
            let x1 = ((u + r).ceil() as i64).min(w - 1);
            let y0 = ((v - r).floor() as i64).max(0);
            let y1 = ((v + r).ceil() as i64).min(h - 1);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let (px, py) = (x as f64 + 0.5 - u, y as f64 + 0.5 - v);
                    if px * px + py * py <= r * r {
                        let band = py.abs() < r * 0.18;
                        img.set_pixel(x as usize, y as usize, if band { CONE_BAND } else { CONE });
                    }
                }
            }
        }
    }
}
