use std::f64::consts::PI;

use super::SimError;

pub type Vec2 = [f64; 2];

/// Wrap an angle to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

pub(crate) fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

pub(crate) fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub(crate) fn dist(a: Vec2, b: Vec2) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Position of a point relative to the centerline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    /// Segment index.
    pub segment: usize,
    /// Arc length of the foot point, in `[0, length)`.
    pub s: f64,
    /// Signed offset, positive to the left of the forward direction.
    pub lateral: f64,
}

/// Closed polyline with arc-length parametrisation.
#[derive(Debug, Clone)]
pub struct Centerline {
    points: Vec<Vec2>,
    /// Arc length at each vertex; `cum[n]` is the total length.
    cum: Vec<f64>,
}

impl Centerline {
    pub fn new(points: Vec<Vec2>) -> Result<Self, SimError> {
        if points.len() < 3 {
            return Err(SimError::Scenario("centerline needs at least 3 vertices".into()));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(SimError::Scenario("centerline has non-finite vertices".into()));
        }
        let n = points.len();
        let mut cum = Vec::with_capacity(n + 1);
        cum.push(0.0);
        for i in 0..n {
            let d = dist(points[i], points[(i + 1) % n]);
            if d <= 1e-9 {
                return Err(SimError::Scenario(format!("duplicate centerline vertex {i}")));
            }
            cum.push(cum[i] + d);
        }
        Ok(Self { points, cum })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn length(&self) -> f64 {
        self.cum[self.points.len()]
    }

    pub fn vertex_s(&self, i: usize) -> f64 {
        self.cum[i]
    }

    fn segment(&self, i: usize) -> (Vec2, Vec2) {
        (self.points[i], self.points[(i + 1) % self.points.len()])
    }

    /// Unit tangent of segment `i`.
    pub fn segment_tangent(&self, i: usize) -> Vec2 {
        let (a, b) = self.segment(i);
        let d = dist(a, b);
        [(b[0] - a[0]) / d, (b[1] - a[1]) / d]
    }

    pub fn wrap_s(&self, s: f64) -> f64 {
        s.rem_euclid(self.length())
    }

    fn segment_at(&self, s: f64) -> usize {
        let s = self.wrap_s(s);
        match self.cum.binary_search_by(|c| c.total_cmp(&s)) {
            Ok(i) => i.min(self.points.len() - 1),
            Err(i) => i - 1,
        }
    }

    pub fn point_at(&self, s: f64) -> Vec2 {
        let s = self.wrap_s(s);
        let i = self.segment_at(s);
        let (a, b) = self.segment(i);
        let t = (s - self.cum[i]) / (self.cum[i + 1] - self.cum[i]);
        [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
    }

    /// Unit tangent at arc length `s`.
    pub fn tangent_at(&self, s: f64) -> Vec2 {
        self.segment_tangent(self.segment_at(s))
    }

    pub fn heading_at(&self, s: f64) -> f64 {
        let t = self.tangent_at(s);
        t[1].atan2(t[0])
    }

    /// Point at arc length `s` shifted `lateral` metres to the left.
    pub fn offset_point(&self, s: f64, lateral: f64) -> Vec2 {
        let p = self.point_at(s);
        let t = self.tangent_at(s);
        [p[0] - t[1] * lateral, p[1] + t[0] * lateral]
    }

    fn project_on(&self, i: usize, p: Vec2) -> (f64, Projection) {
        let (a, b) = self.segment(i);
        let ab = sub(b, a);
        let len2 = dot(ab, ab);
        let t = (dot(sub(p, a), ab) / len2).clamp(0.0, 1.0);
        let foot = [a[0] + t * ab[0], a[1] + t * ab[1]];
        let d = dist(p, foot);
        let cross = ab[0] * (p[1] - a[1]) - ab[1] * (p[0] - a[0]);
        let lateral = if cross >= 0.0 { d } else { -d };
        let s = self.cum[i] + t * len2.sqrt();
        (
            d,
            Projection {
                segment: i,
                s: self.wrap_s(s),
                lateral,
            },
        )
    }

    /// Nearest point over the whole polyline.
    pub fn project(&self, p: Vec2) -> Projection {
        (0..self.points.len())
            .map(|i| self.project_on(i, p))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .expect("non-empty centerline")
            .1
    }

    /// Nearest point among segments within `window` of `hint`. Keeps the
    /// projection on the right branch where the track passes close to itself.
    pub fn project_near(&self, p: Vec2, hint: usize, window: usize) -> Projection {
        let n = self.points.len();
        if 2 * window + 1 >= n {
            return self.project(p);
        }
        (0..=2 * window)
            .map(|k| self.project_on((hint + n + k - window) % n, p))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .expect("window is non-empty")
            .1
    }

    /// Signed curvature (1/m, positive for left turns) at vertex `i`.
    pub fn curvature_at_vertex(&self, i: usize) -> f64 {
        let n = self.points.len();
        let (a, b, c) = (self.points[(i + n - 1) % n], self.points[i], self.points[(i + 1) % n]);
        let cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
        2.0 * cross / (dist(a, b) * dist(b, c) * dist(c, a))
    }

    /// Shortest signed arc distance from `from` to `to`.
    pub fn arc_delta(&self, from: f64, to: f64) -> f64 {
        let l = self.length();
        let mut d = (to - from).rem_euclid(l);
        if d > l / 2.0 {
            d -= l;
        }
        d
    }

    /// True when no two non-adjacent segments cross.
    pub fn is_simple(&self) -> bool {
        let n = self.points.len();
        for i in 0..n {
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (a, b) = self.segment(i);
                let (c, d) = self.segment(j);
                if segments_cross(a, b, c, d) {
                    return false;
                }
            }
        }
        true
    }
}

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn segments_cross(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let (o1, o2) = (orient(a, b, c), orient(a, b, d));
    let (o3, o4) = (orient(c, d, a), orient(c, d, b));
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

/// Closed curve `r(phi) = r0 + sum a_k cos(k phi + phase_k)`, resampled at
/// roughly `spacing` metres.
pub fn polar_track(r0: f64, harmonics: &[(u32, f64, f64)], spacing: f64) -> Vec<Vec2> {
    const DENSE: usize = 20_000;
    let dense: Vec<Vec2> = (0..DENSE)
        .map(|i| {
            let phi = 2.0 * PI * i as f64 / DENSE as f64;
            let r = r0
                + harmonics
                    .iter()
                    .map(|&(k, a, ph)| a * (k as f64 * phi + ph).cos())
                    .sum::<f64>();
            [r * phi.cos(), r * phi.sin()]
        })
        .collect();
    let mut cum = vec![0.0];
    for i in 0..DENSE {
        let d = dist(dense[i], dense[(i + 1) % DENSE]);
        cum.push(cum[i] + d);
    }
    let total = cum[DENSE];
    let n = (total / spacing).round().max(3.0) as usize;
    let step = total / n as f64;
    let mut out = Vec::with_capacity(n);
    let mut j = 0;
    for k in 0..n {
        let s = k as f64 * step;
        while cum[j + 1] < s {
            j += 1;
        }
        let t = (s - cum[j]) / (cum[j + 1] - cum[j]);
        let (a, b) = (dense[j], dense[(j + 1) % DENSE]);
        out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Centerline {
        Centerline::new(vec![[0.0, 0.0], [10.0, 0.0], [10.0, 10.0], [0.0, 10.0]]).unwrap()
    }

    #[test]
    fn wrap() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn arc_length_queries() {
        let c = square();
        assert_eq!(c.length(), 40.0);
        assert_eq!(c.point_at(15.0), [10.0, 5.0]);
        assert_eq!(c.point_at(-5.0), [0.0, 5.0]);
        assert_eq!(c.offset_point(5.0, 1.0), [5.0, 1.0]);
        assert!((c.heading_at(12.0) - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn projection_sign() {
        let c = square();
        let p = c.project([4.0, 1.0]);
        assert_eq!(p.segment, 0);
        assert!((p.s - 4.0).abs() < 1e-12 && (p.lateral - 1.0).abs() < 1e-12);
        let q = c.project([4.0, -2.0]);
        assert!((q.lateral + 2.0).abs() < 1e-12);
        assert_eq!(c.project_near([4.0, -2.0], 0, 1), q);
    }

    #[test]
    fn arc_delta_wraps() {
        let c = square();
        assert_eq!(c.arc_delta(39.0, 1.0), 2.0);
        assert_eq!(c.arc_delta(1.0, 39.0), -2.0);
    }

    #[test]
    fn polar_resampling() {
        let pts = polar_track(50.0, &[], 1.0);
        let c = Centerline::new(pts).unwrap();
        assert!((c.length() - 2.0 * PI * 50.0).abs() < 0.05);
        assert!((c.curvature_at_vertex(10) - 0.02).abs() < 1e-4);
        assert!(c.is_simple());
    }

    #[test]
    fn detects_crossing() {
        let bowtie = Centerline::new(vec![[0.0, 0.0], [10.0, 10.0], [10.0, 0.0], [0.0, 10.0]]).unwrap();
        assert!(!bowtie.is_simple());
        assert!(square().is_simple());
    }
}
