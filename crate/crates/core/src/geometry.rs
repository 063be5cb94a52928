//! Convex bodies and convex rings.
//!
//! The outer body is a bounded convex domain; the inner body is a compact
//! convex set (possibly a point or a segment) strictly inside it. All
//! quantities the gradient estimates depend on live here: boundary distances,
//! separation, diameter, the high ridge of the distance function, stadium
//! detection, corner angles, and ray clipping used by the solver stencils.

use crate::error::{Error, Result};
use crate::vec2::{dist_to_segment, Vec2};
use serde::{Deserialize, Serialize};

const EPS: f64 = 1e-12;

/// A convex body in the plane.
///
/// Polygons are strictly convex counterclockwise chains. Points and segments
/// are kept exact (not approximated by tiny polygons) because the inner
/// boundary of a ring behaves differently in those cases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ConvexBody {
    Point { at: Vec2 },
    Segment { a: Vec2, b: Vec2 },
    Disk { center: Vec2, radius: f64 },
    Ellipse { center: Vec2, a: f64, b: f64, rotation: f64 },
    Polygon { vertices: Vec<Vec2> },
}

impl ConvexBody {
    pub fn point(x: f64, y: f64) -> Self {
        ConvexBody::Point { at: Vec2::new(x, y) }
    }

    pub fn segment(a: Vec2, b: Vec2) -> Self {
        ConvexBody::Segment { a, b }
    }

    pub fn disk(center: Vec2, radius: f64) -> Self {
        ConvexBody::Disk { center, radius }
    }

    pub fn ellipse(center: Vec2, a: f64, b: f64, rotation: f64) -> Self {
        ConvexBody::Ellipse { center, a, b, rotation }
    }

    pub fn polygon(vertices: Vec<Vec2>) -> Self {
        ConvexBody::Polygon { vertices }
    }

    /// Axis-aligned rectangle (as a polygon), counterclockwise.
    pub fn rectangle(min: Vec2, max: Vec2) -> Self {
        ConvexBody::Polygon {
            vertices: vec![
                Vec2::new(min.x, min.y),
                Vec2::new(max.x, min.y),
                Vec2::new(max.x, max.y),
                Vec2::new(min.x, max.y),
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ConvexBody::Point { at } => {
                if !at.is_finite() {
                    return Err(Error::InvalidBody("non-finite point".into()));
                }
            }
            ConvexBody::Segment { a, b } => {
                if !a.is_finite() || !b.is_finite() {
                    return Err(Error::InvalidBody("non-finite segment".into()));
                }
                if a.dist(*b) <= EPS {
                    return Err(Error::InvalidBody("segment endpoints coincide".into()));
                }
            }
            ConvexBody::Disk { center, radius } => {
                if !center.is_finite() || !radius.is_finite() || *radius <= 0.0 {
                    return Err(Error::InvalidBody("disk needs a positive radius".into()));
                }
            }
            ConvexBody::Ellipse { center, a, b, rotation } => {
                if !center.is_finite() || !rotation.is_finite() {
                    return Err(Error::InvalidBody("non-finite ellipse".into()));
                }
                if !(*b > 0.0) || !(*a >= *b) || !a.is_finite() {
                    return Err(Error::InvalidBody("ellipse needs semi-axes a >= b > 0".into()));
                }
            }
            ConvexBody::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return Err(Error::InvalidBody("polygon needs at least 3 vertices".into()));
                }
                if vertices.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidBody("non-finite polygon vertex".into()));
                }
                let n = vertices.len();
                for i in 0..n {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % n];
                    let c = vertices[(i + 2) % n];
                    if (b - a).cross(c - b) <= EPS {
                        return Err(Error::InvalidBody(format!(
                            "polygon not strictly convex counterclockwise at vertex {}",
                            (i + 1) % n
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Whether the body has a nonempty interior.
    pub fn has_interior(&self) -> bool {
        !matches!(self, ConvexBody::Point { .. } | ConvexBody::Segment { .. })
    }

    /// Membership in the closed body. Points and segments count membership
    /// as lying on them (within rounding).
    pub fn contains(&self, x: Vec2) -> bool {
        match self {
            ConvexBody::Point { at } => x.dist(*at) <= EPS,
            ConvexBody::Segment { a, b } => dist_to_segment(x, *a, *b) <= EPS,
            ConvexBody::Disk { center, radius } => x.dist(*center) <= *radius + EPS,
            ConvexBody::Ellipse { .. } => {
                let p = self.to_canonical(x);
                let (a, b) = self.semi_axes();
                (p.x / a).powi(2) + (p.y / b).powi(2) <= 1.0 + 1e-11
            }
            ConvexBody::Polygon { vertices } => {
                let n = vertices.len();
                (0..n).all(|i| {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % n];
                    (b - a).cross(x - a) >= -EPS * (1.0 + b.dist(a))
                })
            }
        }
    }

    /// Euclidean distance from `x` to the boundary of the body (to the set
    /// itself for points and segments). Works for interior and exterior `x`.
    pub fn boundary_distance(&self, x: Vec2) -> f64 {
        match self {
            ConvexBody::Point { at } => x.dist(*at),
            ConvexBody::Segment { a, b } => dist_to_segment(x, *a, *b),
            ConvexBody::Disk { center, radius } => (x.dist(*center) - radius).abs(),
            ConvexBody::Ellipse { .. } => self.ellipse_boundary_distance(x),
            ConvexBody::Polygon { vertices } => {
                let n = vertices.len();
                let mut best = f64::INFINITY;
                for i in 0..n {
                    let d = dist_to_segment(x, vertices[i], vertices[(i + 1) % n]);
                    if d < best {
                        best = d;
                    }
                }
                best
            }
        }
    }

    /// Signed distance to the boundary: positive inside, negative outside.
    /// Concave on the whole plane for a convex body.
    pub fn signed_boundary_distance(&self, x: Vec2) -> f64 {
        let d = self.boundary_distance(x);
        if self.contains(x) {
            d
        } else {
            -d
        }
    }

    /// Distance to the closed set (zero inside).
    pub fn set_distance(&self, x: Vec2) -> f64 {
        if self.contains(x) {
            0.0
        } else {
            self.boundary_distance(x)
        }
    }

    /// Maximal pairwise distance.
    pub fn diameter(&self) -> f64 {
        match self {
            ConvexBody::Point { .. } => 0.0,
            ConvexBody::Segment { a, b } => a.dist(*b),
            ConvexBody::Disk { radius, .. } => 2.0 * radius,
            ConvexBody::Ellipse { a, .. } => 2.0 * a,
            ConvexBody::Polygon { vertices } => calipers_diameter(vertices),
        }
    }

    /// Interior angle at every polygon vertex; empty for smooth bodies,
    /// points, and segments.
    pub fn corner_angles(&self) -> Vec<(Vec2, f64)> {
        match self {
            ConvexBody::Polygon { vertices } => {
                let n = vertices.len();
                (0..n)
                    .map(|i| {
                        let prev = vertices[(i + n - 1) % n];
                        let v = vertices[i];
                        let next = vertices[(i + 1) % n];
                        let u = (prev - v).normalized();
                        let w = (next - v).normalized();
                        (v, u.dot(w).clamp(-1.0, 1.0).acos())
                    })
                    .collect()
            }
            _ => Vec::new(),
        }
    }

    /// Bounding box `(min, max)`.
    pub fn bounding_box(&self) -> (Vec2, Vec2) {
        match self {
            ConvexBody::Point { at } => (*at, *at),
            ConvexBody::Segment { a, b } => (
                Vec2::new(a.x.min(b.x), a.y.min(b.y)),
                Vec2::new(a.x.max(b.x), a.y.max(b.y)),
            ),
            ConvexBody::Disk { center, radius } => (
                *center - Vec2::new(*radius, *radius),
                *center + Vec2::new(*radius, *radius),
            ),
            ConvexBody::Ellipse { center, a, b, rotation } => {
                // Extent of a rotated ellipse along each axis.
                let (s, c) = rotation.sin_cos();
                let ex = ((a * c).powi(2) + (b * s).powi(2)).sqrt();
                let ey = ((a * s).powi(2) + (b * c).powi(2)).sqrt();
                (*center - Vec2::new(ex, ey), *center + Vec2::new(ex, ey))
            }
            ConvexBody::Polygon { vertices } => {
                let mut min = Vec2::new(f64::INFINITY, f64::INFINITY);
                let mut max = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
                for v in vertices {
                    min.x = min.x.min(v.x);
                    min.y = min.y.min(v.y);
                    max.x = max.x.max(v.x);
                    max.y = max.y.max(v.y);
                }
                (min, max)
            }
        }
    }

    /// A boundary point at normalized parameter `t` in `[0, 1)`, counterclockwise.
    /// Polygons are parametrized by arclength; disks and ellipses by angle.
    pub fn boundary_point(&self, t: f64) -> Vec2 {
        let t = t.rem_euclid(1.0);
        match self {
            ConvexBody::Point { at } => *at,
            ConvexBody::Segment { a, b } => {
                // Out-and-back walk along the segment.
                let s = 2.0 * t;
                if s <= 1.0 {
                    a.lerp(*b, s)
                } else {
                    b.lerp(*a, s - 1.0)
                }
            }
            ConvexBody::Disk { center, radius } => {
                let ang = 2.0 * std::f64::consts::PI * t;
                *center + Vec2::new(ang.cos(), ang.sin()) * *radius
            }
            ConvexBody::Ellipse { center, a, b, rotation } => {
                let ang = 2.0 * std::f64::consts::PI * t;
                *center + Vec2::new(a * ang.cos(), b * ang.sin()).rotate(*rotation)
            }
            ConvexBody::Polygon { vertices } => {
                let n = vertices.len();
                let perim: f64 = (0..n).map(|i| vertices[i].dist(vertices[(i + 1) % n])).sum();
                let mut target = t * perim;
                for i in 0..n {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % n];
                    let len = a.dist(b);
                    if target <= len || i == n - 1 {
                        return a.lerp(b, (target / len).clamp(0.0, 1.0));
                    }
                    target -= len;
                }
                vertices[0]
            }
        }
    }

    /// `n` boundary points at uniform parameters.
    pub fn boundary_points(&self, n: usize) -> Vec<Vec2> {
        (0..n).map(|i| self.boundary_point(i as f64 / n as f64)).collect()
    }

    /// Unit direction pointing into the interior from a boundary point.
    /// At a polygon vertex this is the interior angle bisector.
    pub fn inward_direction(&self, x: Vec2) -> Vec2 {
        match self {
            ConvexBody::Point { .. } | ConvexBody::Segment { .. } => Vec2::ZERO,
            ConvexBody::Disk { center, .. } => (*center - x).normalized(),
            ConvexBody::Ellipse { center, a, b, rotation } => {
                let p = (x - *center).rotate(-rotation);
                let n_out = Vec2::new(p.x / (a * a), p.y / (b * b)).rotate(*rotation);
                (-n_out).normalized()
            }
            ConvexBody::Polygon { vertices } => {
                let n = vertices.len();
                // Vertex within rounding distance: bisector.
                for i in 0..n {
                    if x.dist(vertices[i]) <= 1e-9 {
                        let prev = vertices[(i + n - 1) % n];
                        let next = vertices[(i + 1) % n];
                        let u = (prev - vertices[i]).normalized();
                        let w = (next - vertices[i]).normalized();
                        return (u + w).normalized();
                    }
                }
                // Otherwise the inward normal of the nearest edge.
                let mut best = (f64::INFINITY, Vec2::ZERO);
                for i in 0..n {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % n];
                    let d = dist_to_segment(x, a, b);
                    if d < best.0 {
                        best = (d, (b - a).normalized().perp());
                    }
                }
                best.1
            }
        }
    }

    /// Exit parameter of the ray `from + t*dir` out of the body (`from` inside).
    /// `None` if the body has no interior or the ray never exits (cannot
    /// happen for bounded bodies with `dir != 0`).
    pub fn ray_exit(&self, from: Vec2, dir: Vec2) -> Option<f64> {
        match self {
            ConvexBody::Point { .. } | ConvexBody::Segment { .. } => None,
            ConvexBody::Disk { center, radius } => {
                ray_circle(from, dir, *center, *radius).map(|(_, t_out)| t_out)
            }
            ConvexBody::Ellipse { .. } => {
                let (a, b) = self.semi_axes();
                let p = self.to_canonical(from);
                let d = self.dir_canonical(dir);
                let sp = Vec2::new(p.x / a, p.y / b);
                let sd = Vec2::new(d.x / a, d.y / b);
                ray_circle(sp, sd, Vec2::ZERO, 1.0).map(|(_, t_out)| t_out)
            }
            ConvexBody::Polygon { vertices } => {
                let n = vertices.len();
                let mut t_out = f64::INFINITY;
                for i in 0..n {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % n];
                    let edge = b - a;
                    let n_out = Vec2::new(edge.y, -edge.x); // outward for ccw
                    let denom = n_out.dot(dir);
                    let num = n_out.dot(a - from);
                    if denom > 0.0 {
                        t_out = t_out.min(num / denom);
                    }
                }
                if t_out.is_finite() {
                    Some(t_out.max(0.0))
                } else {
                    None
                }
            }
        }
    }

    /// First entry parameter of the ray `from + t*dir` into the closed set
    /// inflated by `pad` (a capsule for segments, a ball for points).
    /// `None` if there is no entry with `0 < t <= t_max`.
    pub fn ray_entry(&self, from: Vec2, dir: Vec2, pad: f64, t_max: f64) -> Option<f64> {
        let t = match self {
            ConvexBody::Point { at } => ray_circle(from, dir, *at, pad).map(|(t_in, _)| t_in),
            ConvexBody::Segment { a, b } => ray_capsule(from, dir, *a, *b, pad),
            ConvexBody::Disk { center, radius } => {
                ray_circle(from, dir, *center, *radius + pad).map(|(t_in, _)| t_in)
            }
            ConvexBody::Ellipse { .. } => {
                // Entry into the ellipse itself (pad is not used for bodies
                // with interior; callers pass 0).
                let (a, b) = self.semi_axes();
                let p = self.to_canonical(from);
                let d = self.dir_canonical(dir);
                let sp = Vec2::new(p.x / a, p.y / b);
                let sd = Vec2::new(d.x / a, d.y / b);
                ray_circle(sp, sd, Vec2::ZERO, 1.0).map(|(t_in, _)| t_in)
            }
            ConvexBody::Polygon { vertices } => ray_convex_polygon(from, dir, vertices),
        };
        match t {
            Some(t) if t > 0.0 && t <= t_max => Some(t),
            _ => None,
        }
    }

    /// Contact parameter of the ray with the inner set: for points and
    /// segments, the closest-approach parameter when the ray passes within
    /// `pad` of the set (the boundary datum then acts at the set's own
    /// distance); for bodies with interior, the entry parameter into the
    /// body. `None` when there is no contact with `0 < t <= t_max`.
    pub fn ray_contact(&self, from: Vec2, dir: Vec2, pad: f64, t_max: f64) -> Option<f64> {
        match self {
            ConvexBody::Point { at } => {
                let t = (*at - from).dot(dir);
                let miss = (from + dir * t).dist(*at);
                if t > 0.0 && t <= t_max && miss <= pad {
                    Some(t)
                } else {
                    None
                }
            }
            ConvexBody::Segment { a, b } => {
                // Distance to a convex set along a line is convex in t.
                let f = |t: f64| dist_to_segment(from + dir * t, *a, *b);
                let (mut lo, mut hi) = (0.0f64, t_max);
                for _ in 0..80 {
                    let m1 = lo + (hi - lo) / 3.0;
                    let m2 = hi - (hi - lo) / 3.0;
                    if f(m1) <= f(m2) {
                        hi = m2;
                    } else {
                        lo = m1;
                    }
                }
                let t = 0.5 * (lo + hi);
                if t > 0.0 && f(t) <= pad {
                    Some(t)
                } else {
                    None
                }
            }
            _ => self.ray_entry(from, dir, 0.0, t_max),
        }
    }

    fn semi_axes(&self) -> (f64, f64) {
        match self {
            ConvexBody::Ellipse { a, b, .. } => (*a, *b),
            _ => unreachable!("semi_axes on non-ellipse"),
        }
    }

    fn to_canonical(&self, x: Vec2) -> Vec2 {
        match self {
            ConvexBody::Ellipse { center, rotation, .. } => (x - *center).rotate(-rotation),
            _ => x,
        }
    }

    fn dir_canonical(&self, d: Vec2) -> Vec2 {
        match self {
            ConvexBody::Ellipse { rotation, .. } => d.rotate(-rotation),
            _ => d,
        }
    }

    /// Point-to-ellipse-boundary distance via the stationarity condition on
    /// the boundary angle, solved by bracketing plus bisection to 1e-12.
    /// The closed-form alternative is unstable near the axes.
    fn ellipse_boundary_distance(&self, x: Vec2) -> f64 {
        let (a, b) = self.semi_axes();
        let p = self.to_canonical(x);
        let (px, py) = (p.x.abs(), p.y.abs());
        // Stationarity of |p - (a cos t, b sin t)|^2 on [0, pi/2].
        let g = |t: f64| {
            let (s, c) = t.sin_cos();
            (a * a - b * b) * c * s - px * a * s + py * b * c
        };
        let dist_at = |t: f64| {
            let (s, c) = t.sin_cos();
            Vec2::new(px - a * c, py - b * s).norm()
        };
        let half_pi = std::f64::consts::FRAC_PI_2;
        let mut best = dist_at(0.0).min(dist_at(half_pi));
        // Scan for sign changes; an interior point near the evolute can have
        // several stationary angles, so every bracket is resolved.
        const N: usize = 64;
        let mut t_prev = 0.0;
        let mut g_prev = g(0.0);
        for i in 1..=N {
            let t = half_pi * i as f64 / N as f64;
            let gi = g(t);
            if g_prev == 0.0 {
                best = best.min(dist_at(t_prev));
            } else if g_prev * gi < 0.0 {
                let (mut lo, mut hi) = (t_prev, t);
                let mut g_lo = g_prev;
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    let gm = g(mid);
                    if g_lo * gm <= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                        g_lo = gm;
                    }
                    if hi - lo < 1e-12 {
                        break;
                    }
                }
                best = best.min(dist_at(0.5 * (lo + hi)));
            }
            t_prev = t;
            g_prev = gi;
        }
        best
    }
}

/// Intersection parameters of a ray with a circle: `(t_in, t_out)`, `t_in <= t_out`.
fn ray_circle(from: Vec2, dir: Vec2, center: Vec2, radius: f64) -> Option<(f64, f64)> {
    let f = from - center;
    let a = dir.norm_sq();
    if a == 0.0 {
        return None;
    }
    let b = f.dot(dir);
    let c = f.norm_sq() - radius * radius;
    let disc = b * b - a * c;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    Some(((-b - sq) / a, (-b + sq) / a))
}

/// First positive entry of a ray into a convex polygon.
fn ray_convex_polygon(from: Vec2, dir: Vec2, vertices: &[Vec2]) -> Option<f64> {
    let n = vertices.len();
    let mut t_lo = f64::NEG_INFINITY;
    let mut t_hi = f64::INFINITY;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        let edge = b - a;
        let n_out = Vec2::new(edge.y, -edge.x);
        let denom = n_out.dot(dir);
        let num = n_out.dot(a - from);
        if denom.abs() < 1e-300 {
            if num < 0.0 {
                return None; // parallel and outside this half-plane
            }
        } else {
            let t = num / denom;
            if denom > 0.0 {
                t_hi = t_hi.min(t);
            } else {
                t_lo = t_lo.max(t);
            }
        }
    }
    if t_lo <= t_hi {
        Some(t_lo)
    } else {
        None
    }
}

/// First positive entry of a ray into the capsule of radius `r` around `[a, b]`.
fn ray_capsule(from: Vec2, dir: Vec2, a: Vec2, b: Vec2, r: f64) -> Option<f64> {
    let mut t_in = f64::INFINITY;
    if let Some((t, _)) = ray_circle(from, dir, a, r) {
        t_in = t_in.min(t);
    }
    if let Some((t, _)) = ray_circle(from, dir, b, r) {
        t_in = t_in.min(t);
    }
    // The slab part: rectangle between the two circles.
    let axis = (b - a).normalized();
    let off = axis.perp() * r;
    let rect = [a + off, a - off, b - off, b + off];
    // Orientation of the rectangle depends on the segment direction; make ccw.
    let verts: Vec<Vec2> = if crate::vec2::polygon_area(&rect) > 0.0 {
        rect.to_vec()
    } else {
        rect.iter().rev().copied().collect()
    };
    if let Some(t) = ray_convex_polygon(from, dir, &verts) {
        t_in = t_in.min(t);
    }
    if t_in.is_finite() {
        Some(t_in)
    } else {
        None
    }
}

/// Rotating-calipers diameter of a strictly convex ccw polygon.
fn calipers_diameter(vertices: &[Vec2]) -> f64 {
    let n = vertices.len();
    if n == 1 {
        return 0.0;
    }
    if n == 2 {
        return vertices[0].dist(vertices[1]);
    }
    let area2 = |a: Vec2, b: Vec2, c: Vec2| (b - a).cross(c - a).abs();
    let mut best = 0.0f64;
    let mut j = 1;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        while area2(a, b, vertices[(j + 1) % n]) > area2(a, b, vertices[j]) {
            j = (j + 1) % n;
        }
        best = best.max(a.dist(vertices[j])).max(b.dist(vertices[j]));
    }
    best
}

/// The maximizer set of the distance to the outer boundary: a point or a
/// segment for a planar convex body.
#[derive(Clone, Debug, PartialEq)]
pub enum RidgeGeometry {
    Point(Vec2),
    Segment(Vec2, Vec2),
}

#[derive(Clone, Debug, PartialEq)]
pub struct HighRidge {
    pub geometry: RidgeGeometry,
    /// Maximal distance to the boundary (the inradius).
    pub clearance: f64,
}

impl HighRidge {
    /// Distance from `x` to the ridge set.
    pub fn distance(&self, x: Vec2) -> f64 {
        match &self.geometry {
            RidgeGeometry::Point(p) => x.dist(*p),
            RidgeGeometry::Segment(a, b) => dist_to_segment(x, *a, *b),
        }
    }
}

/// Maximizer of the (concave) signed boundary distance over the body,
/// followed by a 1-D probe for a maximal ridge segment through it.
///
/// The probe directions are the polygon edge directions (the only possible
/// ridge axes) plus the coordinate axes; a planar convex high ridge is a
/// point or a segment, so 1-D probing suffices.
pub fn high_ridge(body: &ConvexBody, tol: f64) -> Result<HighRidge> {
    if !body.has_interior() {
        return Err(Error::InvalidBody("high ridge needs a body with interior".into()));
    }
    // Smooth bodies with a unique incenter.
    match body {
        ConvexBody::Disk { center, radius } => {
            return Ok(HighRidge { geometry: RidgeGeometry::Point(*center), clearance: *radius })
        }
        ConvexBody::Ellipse { center, b, .. } => {
            return Ok(HighRidge { geometry: RidgeGeometry::Point(*center), clearance: *b })
        }
        _ => {}
    }

    let f = |x: Vec2| body.signed_boundary_distance(x);
    let (bb_min, bb_max) = body.bounding_box();
    let mut center = (bb_min + bb_max) * 0.5;
    let mut half = (bb_max - bb_min) * 0.5;
    // Shrinking grid search; the objective is concave, so the grid maximum
    // homes in on the global maximum.
    const GRID: i32 = 12;
    for _ in 0..60 {
        let mut best = (f64::NEG_INFINITY, center);
        for i in -GRID..=GRID {
            for j in -GRID..=GRID {
                let p = center
                    + Vec2::new(
                        half.x * i as f64 / GRID as f64,
                        half.y * j as f64 / GRID as f64,
                    );
                let v = f(p);
                if v > best.0 {
                    best = (v, p);
                }
            }
        }
        center = best.1;
        half = half * (1.5 / GRID as f64);
        if half.x.max(half.y) < tol * 1e-3 + 1e-15 {
            break;
        }
    }
    let apex = center;
    let clearance = f(apex);

    let mut dirs: Vec<Vec2> = vec![Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)];
    if let ConvexBody::Polygon { vertices } = body {
        let n = vertices.len();
        for i in 0..n {
            dirs.push((vertices[(i + 1) % n] - vertices[i]).normalized());
        }
    }

    let extent = |d: Vec2| -> f64 {
        // Largest t with f(apex + t d) >= clearance - tol.
        let scale = (bb_max - bb_min).norm();
        let ok = |t: f64| f(apex + d * t) >= clearance - tol;
        let mut lo = 0.0;
        let mut hi = scale.max(1e-9);
        if ok(hi) {
            return hi;
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if ok(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };

    let mut best_dir = (0.0f64, Vec2::new(1.0, 0.0), 0.0f64, 0.0f64);
    for d in dirs {
        let plus = extent(d);
        let minus = extent(-d);
        if plus + minus > best_dir.0 {
            best_dir = (plus + minus, d, plus, minus);
        }
    }

    let min_len = (tol * 10.0).max(1e-9);
    if best_dir.0 <= min_len {
        Ok(HighRidge { geometry: RidgeGeometry::Point(apex), clearance })
    } else {
        let (_, d, plus, minus) = best_dir;
        Ok(HighRidge {
            geometry: RidgeGeometry::Segment(apex - d * minus, apex + d * plus),
            clearance,
        })
    }
}

/// A convex ring: the outer body minus the inner one. Rejects rings whose
/// inner boundary touches the outer boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexRing {
    outer: ConvexBody,
    inner: ConvexBody,
    separation: f64,
    diameter: f64,
}

impl ConvexRing {
    pub fn new(outer: ConvexBody, inner: ConvexBody) -> Result<Self> {
        outer.validate()?;
        inner.validate()?;
        if !outer.has_interior() {
            return Err(Error::InvalidBody("outer body needs a nonempty interior".into()));
        }
        // Inner set must lie inside the outer body.
        for p in inner_probe_points(&inner) {
            if !outer.contains(p) || outer.boundary_distance(p) <= EPS {
                return Err(Error::ZeroSeparation);
            }
        }
        let separation = separation_of(&outer, &inner)?;
        let diameter = outer.diameter();
        Ok(ConvexRing { outer, inner, separation, diameter })
    }

    pub fn outer(&self) -> &ConvexBody {
        &self.outer
    }

    pub fn inner(&self) -> &ConvexBody {
        &self.inner
    }

    /// Distance from the inner boundary to the outer boundary.
    pub fn separation(&self) -> f64 {
        self.separation
    }

    /// Diameter of the outer body.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Membership in the closed ring (outer minus open interior of inner).
    pub fn contains(&self, x: Vec2) -> bool {
        self.outer.contains(x)
    }

    /// Distance from `x` to the nearer of the two boundaries, inside the ring.
    pub fn clearance(&self, x: Vec2) -> f64 {
        self.outer.boundary_distance(x).min(self.inner.set_distance(x))
    }
}

fn inner_probe_points(inner: &ConvexBody) -> Vec<Vec2> {
    match inner {
        ConvexBody::Point { at } => vec![*at],
        ConvexBody::Segment { a, b } => vec![*a, *b],
        ConvexBody::Polygon { vertices } => vertices.clone(),
        ConvexBody::Disk { .. } | ConvexBody::Ellipse { .. } => inner.boundary_points(256),
    }
}

/// dist(inner boundary, outer boundary): minimum over the inner boundary of
/// the distance to the outer boundary. The distance-to-outer function is
/// concave inside the outer body, so for segments and polygons the minimum
/// sits at a vertex; curved inner boundaries are sampled and refined.
fn separation_of(outer: &ConvexBody, inner: &ConvexBody) -> Result<f64> {
    let d = |p: Vec2| outer.boundary_distance(p);
    let sep = match inner {
        ConvexBody::Point { at } => d(*at),
        ConvexBody::Segment { a, b } => d(*a).min(d(*b)),
        ConvexBody::Polygon { vertices } => {
            vertices.iter().map(|v| d(*v)).fold(f64::INFINITY, f64::min)
        }
        ConvexBody::Disk { .. } | ConvexBody::Ellipse { .. } => {
            const N: usize = 1024;
            let mut best = (f64::INFINITY, 0.0f64);
            for i in 0..N {
                let t = i as f64 / N as f64;
                let v = d(inner.boundary_point(t));
                if v < best.0 {
                    best = (v, t);
                }
            }
            // Golden-section refinement around the best sample.
            let (mut lo, mut hi) = (best.1 - 1.0 / N as f64, best.1 + 1.0 / N as f64);
            let phi = (5.0f64.sqrt() - 1.0) / 2.0;
            let mut x1 = hi - phi * (hi - lo);
            let mut x2 = lo + phi * (hi - lo);
            let mut f1 = d(inner.boundary_point(x1));
            let mut f2 = d(inner.boundary_point(x2));
            for _ in 0..200 {
                if f1 < f2 {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - phi * (hi - lo);
                    f1 = d(inner.boundary_point(x1));
                } else {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + phi * (hi - lo);
                    f2 = d(inner.boundary_point(x2));
                }
            }
            best.0.min(f1).min(f2)
        }
    };
    if sep <= 1e-9 {
        return Err(Error::ZeroSeparation);
    }
    Ok(sep)
}

/// Whether the ring is a stadium: the inner boundary coincides with the high
/// ridge of the outer body and the outer body equals the set of points within
/// the maximal clearance of the ridge (checked by boundary sampling).
pub fn is_stadium(ring: &ConvexRing, tol: f64) -> bool {
    let ridge = match high_ridge(ring.outer(), tol.max(1e-9)) {
        Ok(r) => r,
        Err(_) => return false,
    };
    // The ridge probe may overrun a flat plateau by about tol along the
    // marching direction; match endpoints with matching slack.
    let etol = 3.0 * tol;
    let gamma_matches = match (ring.inner(), &ridge.geometry) {
        (ConvexBody::Point { at }, RidgeGeometry::Point(p)) => at.dist(*p) <= etol,
        (ConvexBody::Segment { a, b }, RidgeGeometry::Segment(c, d)) => {
            (a.dist(*c) <= etol && b.dist(*d) <= etol)
                || (a.dist(*d) <= etol && b.dist(*c) <= etol)
        }
        _ => false,
    };
    if !gamma_matches {
        return false;
    }
    // Every outer boundary point must be at ridge distance == clearance.
    const N: usize = 512;
    for p in ring.outer().boundary_points(N) {
        if (ring.inner().set_distance(p) - ridge.clearance).abs() > tol {
            return false;
        }
    }
    true
}

/// The largest disk centered at a point inner boundary that fits in the ring.
pub fn inscribed_disk(ring: &ConvexRing) -> Result<ConvexBody> {
    match ring.inner() {
        ConvexBody::Point { at } => Ok(ConvexBody::disk(*at, ring.separation())),
        _ => Err(Error::NotAPoint),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_square() -> ConvexBody {
        ConvexBody::rectangle(Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0))
    }

    fn unit_disk() -> ConvexBody {
        ConvexBody::disk(Vec2::ZERO, 1.0)
    }

    #[test]
    fn contains_examples() {
        assert!(unit_disk().contains(Vec2::ZERO));
        assert!(unit_square().contains(Vec2::new(1.0, 1.0)));
        assert!(!unit_square().contains(Vec2::new(1.01, 0.0)));
    }

    #[test]
    fn boundary_distance_examples() {
        assert!((unit_square().boundary_distance(Vec2::ZERO) - 1.0).abs() < 1e-12);
        assert!((unit_disk().boundary_distance(Vec2::new(0.25, 0.0)) - 0.75).abs() < 1e-12);
        let e = ConvexBody::ellipse(Vec2::ZERO, 1.5, 1.0, 0.0);
        assert!((e.boundary_distance(Vec2::ZERO) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn ellipse_distance_matches_dense_boundary_sampling() {
        let e = ConvexBody::ellipse(Vec2::new(0.3, -0.2), 1.5, 0.7, 0.4);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let p = Vec2::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            let newton = e.boundary_distance(p);
            let brute = (0..20000)
                .map(|i| e.boundary_point(i as f64 / 20000.0).dist(p))
                .fold(f64::INFINITY, f64::min);
            assert!(
                (newton - brute).abs() < 1e-6,
                "p = {p:?}: bisect {newton} vs brute {brute}"
            );
        }
    }

    #[test]
    fn separation_examples() {
        let r1 = ConvexRing::new(unit_disk(), ConvexBody::point(0.0, 0.0)).unwrap();
        assert!((r1.separation() - 1.0).abs() < 1e-12);
        let r2 = ConvexRing::new(unit_square(), ConvexBody::point(0.0, 0.0)).unwrap();
        assert!((r2.separation() - 1.0).abs() < 1e-12);
        let r3 = ConvexRing::new(
            ConvexBody::ellipse(Vec2::ZERO, 1.5, 1.0, 0.0),
            ConvexBody::point(0.0, 0.0),
        )
        .unwrap();
        assert!((r3.separation() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn separation_rejects_touching_inner() {
        let err = ConvexRing::new(unit_disk(), ConvexBody::point(1.0, 0.0));
        assert!(matches!(err, Err(Error::ZeroSeparation)));
    }

    #[test]
    fn diameter_examples() {
        assert!((unit_square().diameter() - 2.0 * 2.0f64.sqrt()).abs() < 1e-12);
        assert!((unit_disk().diameter() - 2.0).abs() < 1e-12);
        let seg = ConvexBody::segment(Vec2::new(-0.7, 0.0), Vec2::new(0.7, 0.0));
        assert!((seg.diameter() - 1.4).abs() < 1e-12);
    }

    #[test]
    fn calipers_matches_brute_force_on_random_polygons() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            // Random convex polygon: hull of random points on an ellipse.
            let k = rng.random_range(5..40);
            let mut angles: Vec<f64> = (0..k)
                .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
                .collect();
            angles.sort_by(f64::total_cmp);
            angles.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
            if angles.len() < 3 {
                continue;
            }
            let ax = rng.random_range(0.5..2.0);
            let by = rng.random_range(0.5..2.0);
            let verts: Vec<Vec2> = angles
                .iter()
                .map(|t| Vec2::new(ax * t.cos(), by * t.sin()))
                .collect();
            let poly = ConvexBody::polygon(verts.clone());
            if poly.validate().is_err() {
                continue;
            }
            let brute = verts
                .iter()
                .flat_map(|a| verts.iter().map(move |b| a.dist(*b)))
                .fold(0.0f64, f64::max);
            assert!((poly.diameter() - brute).abs() < 1e-12);
        }
    }

    #[test]
    fn high_ridge_examples() {
        let hr = high_ridge(&unit_square(), 1e-9).unwrap();
        assert!((hr.clearance - 1.0).abs() < 1e-7);
        match hr.geometry {
            RidgeGeometry::Point(p) => assert!(p.norm() < 1e-6),
            _ => panic!("square ridge must be a point"),
        }

        let rect = ConvexBody::rectangle(Vec2::new(-2.0, -1.0), Vec2::new(2.0, 1.0));
        let hr = high_ridge(&rect, 1e-9).unwrap();
        assert!((hr.clearance - 1.0).abs() < 1e-7);
        match hr.geometry {
            RidgeGeometry::Segment(a, b) => {
                let (l, r) = if a.x < b.x { (a, b) } else { (b, a) };
                assert!(l.dist(Vec2::new(-1.0, 0.0)) < 1e-6, "left end {l:?}");
                assert!(r.dist(Vec2::new(1.0, 0.0)) < 1e-6, "right end {r:?}");
            }
            _ => panic!("rectangle ridge must be a segment"),
        }

        let hr = high_ridge(&unit_disk(), 1e-9).unwrap();
        assert!((hr.clearance - 1.0).abs() < 1e-9);
        match hr.geometry {
            RidgeGeometry::Point(p) => assert!(p.norm() < 1e-9),
            _ => panic!("disk ridge must be a point"),
        }
    }

    #[test]
    fn high_ridge_clearance_matches_dense_grid() {
        for body in [
            unit_square(),
            ConvexBody::rectangle(Vec2::new(-2.0, -1.0), Vec2::new(2.0, 1.0)),
            ConvexBody::polygon(vec![
                Vec2::new(0.0, 0.0),
                Vec2::new(2.0, 0.1),
                Vec2::new(2.5, 1.5),
                Vec2::new(0.7, 2.0),
                Vec2::new(-0.4, 1.0),
            ]),
        ] {
            let hr = high_ridge(&body, 1e-9).unwrap();
            let (min, max) = body.bounding_box();
            let mut best = 0.0f64;
            let n = 400;
            for i in 0..=n {
                for j in 0..=n {
                    let p = Vec2::new(
                        min.x + (max.x - min.x) * i as f64 / n as f64,
                        min.y + (max.y - min.y) * j as f64 / n as f64,
                    );
                    best = best.max(body.signed_boundary_distance(p));
                }
            }
            // The sampled maximum of a 1-Lipschitz function undershoots by at
            // most the grid cell half-diagonal.
            let gap = 0.5 * ((max.x - min.x).powi(2) + (max.y - min.y).powi(2)).sqrt() / n as f64;
            assert!(
                hr.clearance >= best - 1e-9 && hr.clearance <= best + 2.0 * gap,
                "ridge clearance {} vs grid max {} (gap {})",
                hr.clearance,
                best,
                gap
            );
        }
    }

    /// Stadium oracle: sample the outer boundary and check that the distance
    /// to the inner set is the clearance everywhere.
    fn stadium_oracle(ring: &ConvexRing, clearance: f64, tol: f64) -> bool {
        ring.outer()
            .boundary_points(2048)
            .iter()
            .all(|p| (ring.inner().set_distance(*p) - clearance).abs() <= tol)
    }

    #[test]
    fn stadium_examples() {
        let disk_ring = ConvexRing::new(unit_disk(), ConvexBody::point(0.0, 0.0)).unwrap();
        assert!(is_stadium(&disk_ring, 1e-9));
        assert!(stadium_oracle(&disk_ring, 1.0, 1e-9));

        let square_ring = ConvexRing::new(unit_square(), ConvexBody::point(0.0, 0.0)).unwrap();
        assert!(!is_stadium(&square_ring, 1e-6));
        assert!(!stadium_oracle(&square_ring, 1.0, 1e-6));

        // Sharp rectangle with a ridge segment: the corners sit at distance
        // sqrt(2), not 1, from the segment, so the oracle rejects it.
        let rect_ring = ConvexRing::new(
            ConvexBody::rectangle(Vec2::new(-2.0, -1.0), Vec2::new(2.0, 1.0)),
            ConvexBody::segment(Vec2::new(-1.0, 0.0), Vec2::new(1.0, 0.0)),
        )
        .unwrap();
        assert!(!stadium_oracle(&rect_ring, 1.0, 1e-2));
        assert!(!is_stadium(&rect_ring, 1e-2));

        // A polygonal capsule (rounded rectangle) is a stadium within the
        // chord sag of its arcs.
        let capsule = capsule_polygon(1.0, 1.0, 64);
        let capsule_ring = ConvexRing::new(
            capsule,
            ConvexBody::segment(Vec2::new(-1.0, 0.0), Vec2::new(1.0, 0.0)),
        )
        .unwrap();
        assert!(stadium_oracle(&capsule_ring, 1.0, 2e-3));
        assert!(is_stadium(&capsule_ring, 1e-2));
    }

    /// Convex polygon tracing the boundary of {dist(., segment (+-a,0)) <= r}.
    fn capsule_polygon(a: f64, r: f64, arc_pts: usize) -> ConvexBody {
        let mut verts = Vec::new();
        for i in 0..=arc_pts {
            let t = -std::f64::consts::FRAC_PI_2
                + std::f64::consts::PI * i as f64 / arc_pts as f64;
            verts.push(Vec2::new(a + r * t.cos(), r * t.sin()));
        }
        for i in 0..=arc_pts {
            let t = std::f64::consts::FRAC_PI_2
                + std::f64::consts::PI * i as f64 / arc_pts as f64;
            verts.push(Vec2::new(-a + r * t.cos(), r * t.sin()));
        }
        // Deduplicate near-identical seam vertices.
        verts.dedup_by(|p, q| p.dist(*q) < 1e-9);
        if verts.first().zip(verts.last()).map(|(f, l)| f.dist(*l) < 1e-9) == Some(true) {
            verts.pop();
        }
        let poly = ConvexBody::polygon(verts);
        poly.validate().expect("capsule polygon must be convex");
        poly
    }

    #[test]
    fn corner_angles_examples() {
        let sq = unit_square().corner_angles();
        assert_eq!(sq.len(), 4);
        for (_, ang) in sq {
            assert!((ang - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        }
        let hexa = ConvexBody::polygon(
            (0..6)
                .map(|i| {
                    let t = std::f64::consts::TAU * i as f64 / 6.0;
                    Vec2::new(t.cos(), t.sin())
                })
                .collect(),
        );
        for (_, ang) in hexa.corner_angles() {
            assert!((ang - 2.0 * std::f64::consts::PI / 3.0).abs() < 1e-12);
        }
        assert!(unit_disk().corner_angles().is_empty());
    }

    #[test]
    fn inscribed_disk_examples() {
        let e = ConvexRing::new(
            ConvexBody::ellipse(Vec2::ZERO, 1.5, 1.0, 0.0),
            ConvexBody::point(0.0, 0.0),
        )
        .unwrap();
        match inscribed_disk(&e).unwrap() {
            ConvexBody::Disk { center, radius } => {
                assert!(center.norm() < 1e-12);
                assert!((radius - 1.0).abs() < 1e-9);
            }
            _ => unreachable!(),
        }
        let sq = ConvexRing::new(unit_square(), ConvexBody::point(0.0, 0.0)).unwrap();
        match inscribed_disk(&sq).unwrap() {
            ConvexBody::Disk { radius, .. } => assert!((radius - 1.0).abs() < 1e-12),
            _ => unreachable!(),
        }
        let off = ConvexRing::new(
            ConvexBody::disk(Vec2::ZERO, 2.0),
            ConvexBody::point(0.5, 0.0),
        )
        .unwrap();
        match inscribed_disk(&off).unwrap() {
            ConvexBody::Disk { center, radius } => {
                assert!(center.dist(Vec2::new(0.5, 0.0)) < 1e-12);
                assert!((radius - 1.5).abs() < 1e-12);
            }
            _ => unreachable!(),
        }
        let seg_ring = ConvexRing::new(
            unit_square(),
            ConvexBody::segment(Vec2::new(-0.1, 0.0), Vec2::new(0.1, 0.0)),
        )
        .unwrap();
        assert!(matches!(inscribed_disk(&seg_ring), Err(Error::NotAPoint)));
    }

    #[test]
    fn midpoint_of_interior_points_stays_interior() {
        let bodies = [
            unit_square(),
            unit_disk(),
            ConvexBody::ellipse(Vec2::new(0.2, 0.1), 1.5, 0.8, 0.7),
            ConvexBody::polygon(vec![
                Vec2::new(0.0, 0.0),
                Vec2::new(2.0, 0.1),
                Vec2::new(2.5, 1.5),
                Vec2::new(0.7, 2.0),
            ]),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for body in &bodies {
            let (min, max) = body.bounding_box();
            let mut found = 0;
            while found < 300 {
                let p = Vec2::new(
                    rng.random_range(min.x..max.x),
                    rng.random_range(min.y..max.y),
                );
                let q = Vec2::new(
                    rng.random_range(min.x..max.x),
                    rng.random_range(min.y..max.y),
                );
                if body.contains(p) && body.contains(q) {
                    assert!(body.contains((p + q) * 0.5));
                    found += 1;
                }
            }
        }
    }

    #[test]
    fn boundary_distance_is_one_lipschitz() {
        let bodies = [
            unit_square(),
            unit_disk(),
            ConvexBody::ellipse(Vec2::ZERO, 1.5, 1.0, 0.3),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for body in &bodies {
            for _ in 0..500 {
                let p = Vec2::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
                let q = Vec2::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
                let dd = (body.boundary_distance(p) - body.boundary_distance(q)).abs();
                assert!(dd <= p.dist(q) + 1e-9);
            }
        }
    }

    #[test]
    fn ray_clipping_agrees_with_membership_bisection() {
        let bodies = [
            unit_square(),
            unit_disk(),
            ConvexBody::ellipse(Vec2::new(0.1, -0.1), 1.4, 0.9, 0.5),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for body in &bodies {
            for _ in 0..200 {
                let from = Vec2::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
                if !body.contains(from) {
                    continue;
                }
                let ang = rng.random_range(0.0..std::f64::consts::TAU);
                let dir = Vec2::new(ang.cos(), ang.sin());
                let t = body.ray_exit(from, dir).unwrap();
                assert!(body.boundary_distance(from + dir * t) < 1e-9);
                assert!(body.contains(from + dir * (t - 1e-6)));
            }
        }
    }

    #[test]
    fn capsule_entry_matches_distance_scan() {
        let a = Vec2::new(-0.6, 0.1);
        let b = Vec2::new(0.5, -0.2);
        let r = 0.25;
        let body = ConvexBody::segment(a, b);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..300 {
            let from = Vec2::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            if dist_to_segment(from, a, b) <= r {
                continue;
            }
            let ang = rng.random_range(0.0..std::f64::consts::TAU);
            let dir = Vec2::new(ang.cos(), ang.sin());
            let entry = body.ray_entry(from, dir, r, 10.0);
            // Scan oracle.
            let mut scan = None;
            let mut t = 0.0;
            while t <= 10.0 {
                if dist_to_segment(from + dir * t, a, b) <= r {
                    scan = Some(t);
                    break;
                }
                t += 1e-3;
            }
            match (entry, scan) {
                (Some(te), Some(ts)) => assert!(
                    (te - ts).abs() < 2e-3,
                    "entry {te} vs scan {ts}"
                ),
                (None, None) => {}
                (Some(te), None) => {
                    assert!(te > 10.0 - 2e-3, "entry {te} but scan found nothing")
                }
                (None, Some(ts)) => panic!("scan found {ts} but entry missed"),
            }
        }
    }
}
