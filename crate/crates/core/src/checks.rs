//! Numerical predicates with machine-readable verdicts.
//!
//! Every check measures a quantity on a solved field and compares it against
//! a threshold with quantified slack. Windows stand in for limits: gradient
//! limits at the inner boundary are measured on the 4h-8h annulus, boundary
//! limits on 6h disks. Slacks scale with h through two pinned constants:
//! `GRAD_SLACK_PER_H` for gradient comparisons and `FLUX_SLACK_COEFF` for the
//! sqrt(h) normalized-flux tolerance. Report-only verdicts never fail a run.

use crate::error::{Error, Result};
use crate::field::{gradient, level_curve, ScalarField, VectorField};
use crate::flow::{
    all_merges, detect_merge, trace_ascending, Streamline, TraceParams,
};
use crate::geometry::{is_stadium, ConvexBody, ConvexRing, RidgeGeometry};
use crate::solver::{residual_infinity, solve_infinity, SolveParams};
use crate::vec2::{polygon_area, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Slack constant for gradient-based thresholds, in units of h.
pub const GRAD_SLACK_PER_H: f64 = 16.0;
/// Coefficient of the sqrt(h) tolerance on normalized fluxes.
pub const FLUX_SLACK_COEFF: f64 = 1.0;
/// Excess of the inner gradient floor over the boundary gradient cap needed
/// to assert the merge criterion.
pub const CL_MARGIN: f64 = 0.1;

/// Normalized-flux tolerance at spacing `h`.
pub fn flux_tolerance(h: f64) -> f64 {
    FLUX_SLACK_COEFF * h.sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictStatus {
    Pass,
    Fail,
    ReportOnly,
}

/// Outcome of one check: what was measured, what was required, verdict.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    /// The mathematical claim being checked, in plain words.
    pub note: String,
    pub measured: Vec<(String, f64)>,
    pub threshold: String,
    pub status: VerdictStatus,
}

impl Verdict {
    pub fn check(
        name: &str,
        note: &str,
        measured: Vec<(String, f64)>,
        threshold: String,
        ok: bool,
    ) -> Verdict {
        Verdict {
            name: name.into(),
            note: note.into(),
            measured,
            threshold,
            status: if ok { VerdictStatus::Pass } else { VerdictStatus::Fail },
        }
    }

    pub fn report(name: &str, note: &str, measured: Vec<(String, f64)>, context: String) -> Verdict {
        Verdict {
            name: name.into(),
            note: note.into(),
            measured,
            threshold: context,
            status: VerdictStatus::ReportOnly,
        }
    }

    pub fn passed(&self) -> bool {
        self.status != VerdictStatus::Fail
    }
}

/// True when no assertive verdict failed.
pub fn all_assertive_pass(verdicts: &[Verdict]) -> bool {
    verdicts.iter().all(Verdict::passed)
}

/// Measured stand-ins for the gradient limits at a boundary point and at the
/// inner boundary.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GradientLimits {
    /// Max gradient near the chosen outer-boundary point.
    pub alpha: f64,
    /// Min gradient on the annulus window around the inner boundary.
    pub beta: f64,
    pub xi0: Vec2,
    pub alpha_window: f64,
    pub beta_window: (f64, f64),
}

fn orient_ccw(contour: &[Vec2]) -> Vec<Vec2> {
    if polygon_area(contour) >= 0.0 {
        contour.to_vec()
    } else {
        contour.iter().rev().copied().collect()
    }
}

/// Crossing-number point-in-polygon test.
pub fn point_in_polygon(p: Vec2, poly: &[Vec2]) -> bool {
    let n = poly.len();
    let mut inside = false;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if (a.y > p.y) != (b.y > p.y) {
            let t = (p.y - a.y) / (b.y - a.y);
            if p.x < a.x + t * (b.x - a.x) {
                inside = !inside;
            }
        }
    }
    inside
}

fn contour_clearance_ok(field: &ScalarField, contour: &[Vec2]) -> bool {
    let grid = field.grid();
    let h = grid.h();
    let n = contour.len();
    (0..n).all(|i| {
        let a = contour[i];
        let m = (contour[i] + contour[(i + 1) % n]) * 0.5;
        grid.clearance(a) >= 2.0 * h - 1e-12 && grid.clearance(m) >= 2.0 * h - 1e-12
    })
}

/// Composite-midpoint line integral of `|grad|^(p-2) <grad, n>` along the
/// contour with outward normal, plus the quantities used to normalize it.
fn boundary_integral(
    vf: &VectorField,
    contour: &[Vec2],
    p: f64,
    map_grad: impl Fn(Vec2, Vec2) -> Vec2,
) -> Result<(f64, f64, f64)> {
    let n = contour.len();
    let mut total = 0.0;
    let mut length = 0.0;
    let mut max_speed = 0.0f64;
    for i in 0..n {
        let a = contour[i];
        let b = contour[(i + 1) % n];
        let edge = b - a;
        let len = edge.norm();
        if len == 0.0 {
            continue;
        }
        let m = (a + b) * 0.5;
        let g = map_grad(vf.sample(m)?, m);
        let outward = Vec2::new(edge.y, -edge.x) / len;
        let speed = g.norm();
        total += speed.powf(p - 2.0) * g.dot(outward) * len;
        length += len;
        max_speed = max_speed.max(speed);
    }
    Ok((total, length, max_speed))
}

/// Outward flux of `|grad V|^(p-2) grad V` through a closed contour strictly
/// inside the ring, normalized by contour length times the p-1 power of the
/// largest gradient on the contour. The potential is superharmonic in the
/// p-sense, so the normalized flux must not exceed the sqrt(h) tolerance.
pub fn flux_check(
    field: &ScalarField,
    vf: &VectorField,
    contour: &[Vec2],
    p: f64,
) -> Result<Verdict> {
    if !contour_clearance_ok(field, contour) {
        return Err(Error::ContourTouchesBoundary);
    }
    let contour = orient_ccw(contour);
    let (flux, length, max_speed) = boundary_integral(vf, &contour, p, |g, _| g)?;
    let normalized = if max_speed > 1e-300 {
        flux / (length * max_speed.powf(p - 1.0))
    } else {
        0.0
    };
    let tol = flux_tolerance(field.grid().h());
    Ok(Verdict::check(
        "flux-inequality",
        "outward flux of |grad V|^(p-2) grad V through interior contours is non-positive",
        vec![
            ("flux".into(), flux),
            ("normalized".into(), normalized),
            ("p".into(), p),
            ("contour_length".into(), length),
            ("max_gradient".into(), max_speed),
        ],
        format!("normalized flux <= {tol:.6}"),
        normalized <= tol,
    ))
}

/// Two-sided inequality for the log-potential W = log V: the p-energy of W
/// inside the contour dominates the boundary term,
/// `-(p-1) * area(|grad W|^p) >= boundary(|grad W|^(p-2) <grad W, n>)`,
/// with sqrt(h) slack after the flux normalization.
pub fn log_flux_check(
    field: &ScalarField,
    vf: &VectorField,
    contour: &[Vec2],
    p: f64,
) -> Result<Verdict> {
    if !contour_clearance_ok(field, contour) {
        return Err(Error::ContourTouchesBoundary);
    }
    let contour = orient_ccw(contour);
    let grad_w = |g: Vec2, m: Vec2| -> Vec2 {
        let v = field.sample(m).unwrap_or(1.0).max(1e-12);
        g / v
    };
    let (boundary, length, max_speed) = boundary_integral(vf, &contour, p, grad_w)?;

    // Midpoint rule over grid cells whose centers lie inside the contour.
    let grid = field.grid();
    let h = grid.h();
    let (bb_min, bb_max) = bounding_box_of(&contour);
    let i0 = (((bb_min.x - grid.origin().x) / h).floor() as isize).max(0) as usize;
    let j0 = (((bb_min.y - grid.origin().y) / h).floor() as isize).max(0) as usize;
    let i1 = ((((bb_max.x - grid.origin().x) / h).ceil() as isize) as usize).min(grid.nx() - 2);
    let j1 = ((((bb_max.y - grid.origin().y) / h).ceil() as isize) as usize).min(grid.ny() - 2);
    let mut area_term = 0.0;
    for j in j0..=j1 {
        for i in i0..=i1 {
            let c = grid.pos(i, j) + Vec2::new(0.5 * h, 0.5 * h);
            if !point_in_polygon(c, &contour) {
                continue;
            }
            let g = match vf.sample(c) {
                Ok(g) => g,
                Err(_) => continue,
            };
            let w = grad_w(g, c);
            area_term += w.norm().powf(p) * h * h;
        }
    }
    let lhs = -(p - 1.0) * area_term;
    let norm = (length * max_speed.powf(p - 1.0)).max(1e-300);
    let slack = flux_tolerance(h);
    let margin = (lhs - boundary) / norm;
    Ok(Verdict::check(
        "log-flux-inequality",
        "for W = log V, -(p-1) * integral(|grad W|^p) dominates the boundary flux of |grad W|^(p-2) grad W",
        vec![
            ("area_side".into(), lhs),
            ("boundary_side".into(), boundary),
            ("normalized_margin".into(), margin),
            ("p".into(), p),
        ],
        format!("normalized margin >= -{slack:.6}"),
        margin >= -slack,
    ))
}

fn bounding_box_of(pts: &[Vec2]) -> (Vec2, Vec2) {
    let mut min = Vec2::new(f64::INFINITY, f64::INFINITY);
    let mut max = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in pts {
        min.x = min.x.min(p.x);
        min.y = min.y.min(p.y);
        max.x = max.x.max(p.x);
        max.y = max.y.max(p.y);
    }
    (min, max)
}

/// Interior nodes with clearance at least `min_clearance`, with positions and
/// gradient magnitudes.
fn clear_nodes(field: &ScalarField, vf: &VectorField, min_clearance: f64) -> Vec<(Vec2, f64, f64)> {
    let grid = field.grid();
    let mut out = Vec::new();
    for (i, j) in grid.interior_indices() {
        let p = grid.pos(i, j);
        if grid.clearance(p) >= min_clearance {
            out.push((p, field.value(i, j), vf.at(i, j).norm()));
        }
    }
    out
}

/// Gradient bounds away from the boundaries: the speed is positive, bounded
/// by the reciprocal separation, and bounded below by V over the diameter.
pub fn gradient_bounds_check(field: &ScalarField, vf: &VectorField) -> Verdict {
    let grid = field.grid();
    let h = grid.h();
    let ring = grid.ring();
    let slack = GRAD_SLACK_PER_H * h;
    let mut min_speed = f64::INFINITY;
    let mut max_speed = 0.0f64;
    let mut footnote_margin = f64::INFINITY;
    for (_, v, speed) in clear_nodes(field, vf, 2.0 * h) {
        min_speed = min_speed.min(speed);
        max_speed = max_speed.max(speed);
        footnote_margin = footnote_margin.min(speed - v / ring.diameter());
    }
    let cap = 1.0 / ring.separation() + slack;
    let ok = min_speed > 0.0 && max_speed <= cap && footnote_margin >= -slack;
    Verdict::check(
        "gradient-bounds",
        "0 < |grad V| <= 1/separation, and |grad V| >= V/diameter",
        vec![
            ("min_speed".into(), min_speed),
            ("max_speed".into(), max_speed),
            ("speed_cap".into(), cap),
            ("lower_bound_margin".into(), footnote_margin),
        ],
        format!("min > 0, max <= {cap:.4}, margin >= -{slack:.4}"),
        ok,
    )
}

/// At a point inner boundary the gradient magnitude attains its global sup:
/// the annulus-window mean must match both the reciprocal separation and the
/// global max within 10 percent.
pub fn inner_limit_check(field: &ScalarField, vf: &VectorField) -> Result<Verdict> {
    let grid = field.grid();
    let ring = grid.ring();
    if !matches!(ring.inner(), ConvexBody::Point { .. }) {
        return Err(Error::NotAPoint);
    }
    let h = grid.h();
    let mut sum = 0.0;
    let mut count = 0usize;
    for (i, j) in grid.interior_indices() {
        let p = grid.pos(i, j);
        let d = ring.inner().set_distance(p);
        if (4.0 * h..=8.0 * h).contains(&d) {
            sum += vf.at(i, j).norm();
            count += 1;
        }
    }
    let mean = if count > 0 { sum / count as f64 } else { f64::NAN };
    let global_max = clear_nodes(field, vf, 2.0 * h)
        .iter()
        .map(|(_, _, s)| *s)
        .fold(0.0f64, f64::max);
    let target = 1.0 / ring.separation();
    let ok = count > 0
        && (mean - target).abs() <= 0.1 * target
        && (mean - global_max).abs() <= 0.1 * global_max;
    Ok(Verdict::check(
        "inner-gradient-limit",
        "the gradient magnitude at a point inner boundary attains the global sup 1/separation",
        vec![
            ("window_mean".into(), mean),
            ("reciprocal_separation".into(), target),
            ("global_max".into(), global_max),
            ("window_nodes".into(), count as f64),
        ],
        "mean within 10% of 1/separation and of the global max".into(),
        ok,
    ))
}

/// The gradient magnitude near the inner boundary is at least the reciprocal
/// diameter of the outer body.
pub fn outer_lower_bound_check(field: &ScalarField, vf: &VectorField) -> Verdict {
    let grid = field.grid();
    let ring = grid.ring();
    let h = grid.h();
    let mut window_min = f64::INFINITY;
    for (i, j) in grid.interior_indices() {
        let p = grid.pos(i, j);
        let d = ring.inner().set_distance(p);
        if (4.0 * h..=8.0 * h).contains(&d) {
            window_min = window_min.min(vf.at(i, j).norm());
        }
    }
    let bound = 1.0 / ring.diameter() - GRAD_SLACK_PER_H * h;
    Verdict::check(
        "inner-gradient-floor",
        "the gradient magnitude approaching the inner boundary is at least 1/diameter",
        vec![("window_min".into(), window_min), ("bound".into(), bound)],
        format!("window min >= {bound:.4}"),
        window_min >= bound,
    )
}

/// Arc of the level-`c` curve between the two streamline crossings, taking
/// the shorter way around.
fn level_arc_between(field: &ScalarField, c: f64, pa: Vec2, pb: Vec2) -> Result<Vec<Vec2>> {
    let lc = level_curve(field, c)?;
    let main = lc.main_loop();
    let n = main.len();
    let nearest = |p: Vec2| -> usize {
        (0..n)
            .min_by(|&i, &j| main[i].dist(p).total_cmp(&main[j].dist(p)))
            .unwrap()
    };
    let ia = nearest(pa);
    let ib = nearest(pb);
    let forward: Vec<Vec2> = {
        let mut v = Vec::new();
        let mut i = ia;
        loop {
            v.push(main[i]);
            if i == ib {
                break;
            }
            i = (i + 1) % n;
        }
        v
    };
    let backward: Vec<Vec2> = {
        let mut v = Vec::new();
        let mut i = ia;
        loop {
            v.push(main[i]);
            if i == ib {
                break;
            }
            i = (i + n - 1) % n;
        }
        v
    };
    let len = |arc: &[Vec2]| arc.windows(2).map(|w| w[0].dist(w[1])).sum::<f64>();
    Ok(if len(&forward) <= len(&backward) { forward } else { backward })
}

/// Sup of the gradient on the higher-level arc between two streamlines must
/// not exceed the sup on the lower-level arc: the lower level curve has the
/// larger maximum gradient between consecutive streamline crossings.
pub fn speed_level_check(
    field: &ScalarField,
    vf: &VectorField,
    s1: &Streamline,
    s2: &Streamline,
    a: f64,
    b: f64,
) -> Result<Verdict> {
    if !(a < b) {
        return Err(Error::WrongFixture("levels must satisfy a < b".into()));
    }
    let h = field.grid().h();
    if let Some(cl) = detect_merge(s1, s2, h) {
        if cl.level <= b {
            return Err(Error::StreamlinesMergedInBand);
        }
    }
    let p1a = s1.position_at_level(a).ok_or(Error::WrongFixture("s1 misses level a".into()))?;
    let p2a = s2.position_at_level(a).ok_or(Error::WrongFixture("s2 misses level a".into()))?;
    let p1b = s1.position_at_level(b).ok_or(Error::WrongFixture("s1 misses level b".into()))?;
    let p2b = s2.position_at_level(b).ok_or(Error::WrongFixture("s2 misses level b".into()))?;
    let sup_on = |arc: &[Vec2]| -> f64 {
        arc.iter()
            .filter_map(|p| vf.sample(*p).ok())
            .map(|g| g.norm())
            .fold(0.0f64, f64::max)
    };
    let arc_a = level_arc_between(field, a, p1a, p2a)?;
    let arc_b = level_arc_between(field, b, p1b, p2b)?;
    let sup_a = sup_on(&arc_a);
    let sup_b = sup_on(&arc_b);
    let slack = GRAD_SLACK_PER_H * h;
    Ok(Verdict::check(
        "speed-level-comparison",
        "between two ascending streamlines, the lower level arc carries the larger max gradient",
        vec![
            ("sup_lower_arc".into(), sup_a),
            ("sup_upper_arc".into(), sup_b),
            ("level_a".into(), a),
            ("level_b".into(), b),
        ],
        format!("sup_upper <= sup_lower + {slack:.4}"),
        sup_b <= sup_a + slack,
    ))
}

/// Merge criterion at an outer-boundary point: measure the gradient cap near
/// `xi0` and the gradient floor near the inner boundary; when the floor
/// clearly exceeds the cap, a pair of streamlines seeded 4h apart near `xi0`
/// must merge before the top level. When 4h spacing fails, 2h is tried and
/// the passing spacing recorded.
pub fn cl_criterion(
    field: &ScalarField,
    vf: &VectorField,
    xi0: Vec2,
) -> (GradientLimits, Verdict) {
    let grid = field.grid();
    let ring = grid.ring();
    let h = grid.h();
    // Window radius 2h: a wider window at a corner is dominated by its own
    // outer edge (the gradient grows like a power of the distance), which
    // over-approximates the boundary limit it stands in for.
    let mut alpha = 0.0f64;
    for (i, j) in grid.interior_indices() {
        let p = grid.pos(i, j);
        if p.dist(xi0) <= 2.0 * h {
            alpha = alpha.max(vf.at(i, j).norm());
        }
    }
    let mut beta = f64::INFINITY;
    for (i, j) in grid.interior_indices() {
        let p = grid.pos(i, j);
        let d = ring.inner().set_distance(p);
        if (4.0 * h..=8.0 * h).contains(&d) {
            beta = beta.min(vf.at(i, j).norm());
        }
    }
    let limits = GradientLimits {
        alpha,
        beta,
        xi0,
        alpha_window: 2.0 * h,
        beta_window: (4.0 * h, 8.0 * h),
    };
    if beta <= alpha + CL_MARGIN {
        let verdict = Verdict::report(
            "merge-criterion",
            "streamline pairs near a boundary point with gradient cap below the inner floor must merge",
            vec![("alpha".into(), alpha), ("beta".into(), beta)],
            format!("not triggered: beta <= alpha + {CL_MARGIN}"),
        );
        return (limits, verdict);
    }
    let inward = ring.outer().inward_direction(xi0);
    let tangent = inward.perp();
    let params = TraceParams::for_grid(grid);
    let mut outcome: Option<(f64, f64)> = None;
    for spacing in [4.0 * h, 2.0 * h] {
        let base = xi0 + inward * (2.0 * h);
        let seeds = [base + tangent * (0.5 * spacing), base - tangent * (0.5 * spacing)];
        let t1 = trace_ascending(field, vf, seeds[0], &params);
        let t2 = trace_ascending(field, vf, seeds[1], &params);
        if let (Ok(t1), Ok(t2)) = (t1, t2) {
            if let Some(cl) = detect_merge(&t1, &t2, params.merge_tol) {
                if cl.level < 1.0 - params.delta_stop {
                    outcome = Some((spacing, cl.level));
                    break;
                }
            }
        }
    }
    let verdict = match outcome {
        Some((spacing, level)) => Verdict::check(
            "merge-criterion",
            "streamline pairs near a boundary point with gradient cap below the inner floor must merge",
            vec![
                ("alpha".into(), alpha),
                ("beta".into(), beta),
                ("seed_spacing".into(), spacing),
                ("merge_level".into(), level),
            ],
            "merge before the top level".into(),
            true,
        ),
        None => Verdict::check(
            "merge-criterion",
            "streamline pairs near a boundary point with gradient cap below the inner floor must merge",
            vec![("alpha".into(), alpha), ("beta".into(), beta)],
            "merge before the top level".into(),
            false,
        ),
    };
    (limits, verdict)
}

/// For a point inner boundary in a non-stadium ring, every streamline seeded
/// outside the inscribed disk must acquire a merge with a neighboring seed's
/// streamline before the top level.
pub fn theorem_single_check(field: &ScalarField, vf: &VectorField) -> Result<Verdict> {
    let grid = field.grid();
    let ring = grid.ring();
    let gamma = match ring.inner() {
        ConvexBody::Point { at } => *at,
        _ => return Err(Error::NotAPoint),
    };
    if is_stadium(ring, 1e-6) {
        return Err(Error::IsAStadium);
    }
    let h = grid.h();
    let sep = ring.separation();
    let candidates = ring.outer().boundary_points(256);
    let filtered: Vec<Vec2> = candidates
        .into_iter()
        .filter(|p| p.dist(gamma) > sep + 4.0 * h)
        .collect();
    if filtered.len() < 8 {
        return Err(Error::WrongFixture(
            "fewer than 8 boundary points beyond the inscribed disk".into(),
        ));
    }
    // Thin to around 16 seeds, keeping the cyclic order.
    let stride = (filtered.len() / 16).max(1);
    let seeds: Vec<Vec2> = filtered.iter().step_by(stride).copied().collect();
    let params = TraceParams::for_grid(grid);
    let traces: Vec<Streamline> = seeds
        .iter()
        .map(|s| trace_ascending(field, vf, *s, &params))
        .collect::<Result<_>>()?;
    let n = traces.len();
    let mut unmerged = 0usize;
    let mut worst_level = 0.0f64;
    for i in 0..n {
        let prev = (i + n - 1) % n;
        let next = (i + 1) % n;
        let merged = [prev, next].iter().any(|&j| {
            detect_merge(&traces[i], &traces[j], params.merge_tol)
                .map(|cl| cl.level < 1.0 - params.delta_stop)
                .unwrap_or(false)
        });
        if !merged {
            unmerged += 1;
        } else if let Some(cl) = detect_merge(&traces[i], &traces[next], params.merge_tol) {
            worst_level = worst_level.max(cl.level);
        }
    }
    Ok(Verdict::check(
        "outside-inscribed-disk-merges",
        "in a non-stadium ring with point inner boundary, streamlines seeded beyond the inscribed disk merge",
        vec![
            ("seeds".into(), n as f64),
            ("unmerged".into(), unmerged as f64),
            ("worst_merge_level".into(), worst_level),
        ],
        "every such seed merges with a neighbor before the top level".into(),
        unmerged == 0,
    ))
}

/// Glued-structure check for a segment inner boundary on the high ridge with
/// unit clearance: the potential coincides with the one-point potentials left
/// and right of the segment span and with the boundary distance in between;
/// on the middle band it equals `1 - |x2|`. Non-stadium rings must also show
/// a merging pair.
pub fn hr_glued_check(
    ring: &ConvexRing,
    h: f64,
    r_gamma: f64,
    sparams: &SolveParams,
) -> Result<Vec<Verdict>> {
    let (ga, gb) = match ring.inner() {
        ConvexBody::Segment { a, b } => (*a, *b),
        _ => {
            return Err(Error::GammaNotOnRidge("inner boundary is not a segment".into()));
        }
    };
    let (left, right) = if ga.x <= gb.x { (ga, gb) } else { (gb, ga) };
    if left.y.abs() > 1e-9 || right.y.abs() > 1e-9 || (left.x + right.x).abs() > 1e-9 {
        return Err(Error::GammaNotOnRidge(
            "segment must span (-a, 0)..(a, 0) in normalized coordinates".into(),
        ));
    }
    if (ring.separation() - 1.0).abs() > 1e-2 {
        return Err(Error::GammaNotOnRidge(format!(
            "clearance must be normalized to 1, found {}",
            ring.separation()
        )));
    }
    let ridge = crate::geometry::high_ridge(ring.outer(), 1e-3)?;
    let on_ridge = match &ridge.geometry {
        RidgeGeometry::Segment(_, _) => {
            ridge.distance(left) <= 5e-3 && ridge.distance(right) <= 5e-3
        }
        RidgeGeometry::Point(p) => left.dist(*p) <= 5e-3 && right.dist(*p) <= 5e-3,
    };
    if !on_ridge {
        return Err(Error::GammaNotOnRidge("segment endpoints leave the high ridge".into()));
    }
    let a_span = right.x;

    let main = solve_infinity(&crate::field::build_grid(ring, h, r_gamma)?, sparams)?;
    let ring_l = ConvexRing::new(ring.outer().clone(), ConvexBody::Point { at: left })?;
    let ring_r = ConvexRing::new(ring.outer().clone(), ConvexBody::Point { at: right })?;
    let u_l = solve_infinity(&crate::field::build_grid(&ring_l, h, r_gamma)?, sparams)?;
    let u_r = solve_infinity(&crate::field::build_grid(&ring_r, h, r_gamma)?, sparams)?;

    let grid = main.grid();
    let mut sup_glued = 0.0f64;
    let mut sup_rect = 0.0f64;
    for (i, j) in grid.interior_indices() {
        let p = grid.pos(i, j);
        if ring.inner().set_distance(p) < 4.0 * h {
            continue;
        }
        let glued = if p.x >= a_span {
            u_r.value(i, j)
        } else if p.x <= -a_span {
            u_l.value(i, j)
        } else {
            ring.outer().boundary_distance(p)
        };
        sup_glued = sup_glued.max((main.value(i, j) - glued).abs());
        if p.x.abs() <= a_span {
            sup_rect = sup_rect.max((main.value(i, j) - (1.0 - p.y.abs())).abs());
        }
    }
    let mut verdicts = vec![
        Verdict::check(
            "glued-potential-agreement",
            "a segment inner boundary on the high ridge glues two one-point potentials and the distance function",
            vec![("sup_deviation".into(), sup_glued)],
            "sup deviation <= 0.03".into(),
            sup_glued <= 0.03,
        ),
        Verdict::check(
            "middle-rectangle-identity",
            "between the segment ends the potential is 1 - |x2|",
            vec![("sup_deviation".into(), sup_rect)],
            "sup deviation <= 0.02".into(),
            sup_rect <= 0.02,
        ),
    ];

    if is_stadium(ring, 1e-2) {
        verdicts.push(Verdict::report(
            "segment-ridge-merges",
            "non-stadium rings with the inner boundary on the high ridge have merging streamlines",
            vec![],
            "skipped: the ring is a stadium".into(),
        ));
    } else {
        let vf = gradient(&main);
        let params = TraceParams::for_grid(grid);
        let candidates = ring.outer().boundary_points(256);
        let filtered: Vec<Vec2> = candidates
            .into_iter()
            .filter(|p| ring.inner().set_distance(*p) > 1.0 + 4.0 * h)
            .collect();
        let stride = (filtered.len() / 16).max(1);
        let seeds: Vec<Vec2> = filtered.iter().step_by(stride).copied().collect();
        let traces: Vec<Streamline> = seeds
            .iter()
            .filter_map(|s| trace_ascending(&main, &vf, *s, &params).ok())
            .collect();
        let merges = all_merges(&traces, params.merge_tol);
        let found = merges
            .iter()
            .any(|cl| cl.level < 1.0 - params.delta_stop);
        verdicts.push(Verdict::check(
            "segment-ridge-merges",
            "non-stadium rings with the inner boundary on the high ridge have merging streamlines",
            vec![
                ("seeds".into(), traces.len() as f64),
                ("merges".into(), merges.len() as f64),
            ],
            "at least one merging pair below the top level".into(),
            found,
        ));
    }
    Ok(verdicts)
}

#[derive(Clone, Debug)]
pub struct SquareSuiteParams {
    pub seeds_per_side: usize,
    /// Residual tolerance the field was solved to; the symmetry threshold is
    /// ten times this.
    pub tol_res: f64,
}

impl Default for SquareSuiteParams {
    fn default() -> Self {
        SquareSuiteParams { seeds_per_side: 16, tol_res: 1e-8 }
    }
}

/// The full battery for the square with a center point inner boundary:
/// sandwich bounds, median linearity, corner flatness, diagonal speed
/// monotonicity, merge counts near corners and near the top, dihedral
/// symmetry, and two report-only diagnostics.
pub fn square_suite(
    field: &ScalarField,
    vf: &VectorField,
    suite: &SquareSuiteParams,
) -> Result<Vec<Verdict>> {
    let grid = field.grid();
    let ring = grid.ring();
    let h = grid.h();
    // Fixture gate: the unit square with the origin as inner boundary.
    let corners_expected = [
        Vec2::new(-1.0, -1.0),
        Vec2::new(1.0, -1.0),
        Vec2::new(1.0, 1.0),
        Vec2::new(-1.0, 1.0),
    ];
    let fixture_ok = match (ring.outer(), ring.inner()) {
        (ConvexBody::Polygon { vertices }, ConvexBody::Point { at }) => {
            at.norm() <= 1e-9
                && vertices.len() == 4
                && corners_expected
                    .iter()
                    .all(|c| vertices.iter().any(|v| v.dist(*c) <= 1e-9))
        }
        _ => false,
    };
    if !fixture_ok {
        return Err(Error::WrongFixture(
            "square suite requires the square [-1,1]^2 with a center point inner boundary".into(),
        ));
    }

    let mut verdicts = Vec::new();

    // 1. Sandwich inequality 1 - |x| <= V <= dist(x, outer boundary).
    let mut below = 0.0f64;
    let mut above = 0.0f64;
    for (i, j) in grid.interior_indices() {
        let p = grid.pos(i, j);
        let v = field.value(i, j);
        below = below.max((1.0 - p.norm()) - v);
        above = above.max(v - ring.outer().boundary_distance(p));
    }
    verdicts.push(Verdict::check(
        "sandwich-inequality",
        "the potential is pinched between 1 - |x| and the boundary distance",
        vec![("cone_violation".into(), below), ("distance_violation".into(), above)],
        "violations <= 0.02".into(),
        below <= 0.02 && above <= 0.02,
    ));

    // 2. Median linearity.
    let mut med = 0.0f64;
    for (i, j) in grid.interior_indices() {
        let p = grid.pos(i, j);
        if p.x.abs() <= 1e-12 || p.y.abs() <= 1e-12 {
            let t = p.x.abs().max(p.y.abs());
            med = med.max((field.value(i, j) - (1.0 - t)).abs());
        }
    }
    verdicts.push(Verdict::check(
        "median-linearity",
        "the potential is linear on the medians",
        vec![("sup_deviation".into(), med)],
        "sup deviation <= 0.02".into(),
        med <= 0.02,
    ));

    // 3. Corner gradient flatness.
    let mut corner_max = 0.0f64;
    for (i, j) in grid.interior_indices() {
        let p = grid.pos(i, j);
        if corners_expected.iter().any(|c| p.dist(*c) <= 2.0 * h) {
            corner_max = corner_max.max(vf.at(i, j).norm());
        }
    }
    verdicts.push(Verdict::check(
        "corner-gradient-flatness",
        "the gradient vanishes at the four corners",
        vec![("max_speed_2h".into(), corner_max)],
        "max |grad V| within 2h of a corner <= 0.15".into(),
        corner_max <= 0.15,
    ));

    // 4. Diagonal speed monotone toward the top.
    let mut worst_backslide = 0.0f64;
    let mut first_speed = f64::INFINITY;
    let mut last_speed = 0.0f64;
    let inner_stop = (2.0 * h).max(grid.r_gamma()) + 2.0 * h;
    for corner in corners_expected {
        let dir = -corner.normalized();
        let total = corner.norm() - inner_stop;
        let mut samples = Vec::new();
        let mut s = 2.0 * h;
        while s <= total {
            let p = corner + dir * s;
            if let Ok(g) = vf.sample(p) {
                samples.push(g.norm());
            }
            s += 0.5 * h;
        }
        let mut running_max = f64::NEG_INFINITY;
        for &sp in &samples {
            if running_max - sp > worst_backslide {
                worst_backslide = running_max - sp;
            }
            running_max = running_max.max(sp);
        }
        if let (Some(f), Some(l)) = (samples.first(), samples.last()) {
            first_speed = first_speed.min(*f);
            last_speed = last_speed.max(*l);
        }
    }
    verdicts.push(Verdict::check(
        "diagonal-speed-monotone",
        "the speed is non-decreasing along the diagonals toward the top",
        vec![
            ("worst_backslide".into(), worst_backslide),
            ("speed_near_corner".into(), first_speed),
            ("speed_near_top".into(), last_speed),
        ],
        "backslide <= 0.02".into(),
        worst_backslide <= 0.02,
    ));

    // Traces: per-side seeds plus diagonals and medians.
    let n_side = suite.seeds_per_side;
    let mut seeds = Vec::new();
    for k in 0..n_side {
        let t = -1.0 + (2.0 * k as f64 + 1.0) / n_side as f64;
        seeds.push(Vec2::new(t, -1.0));
        seeds.push(Vec2::new(1.0, t));
        seeds.push(Vec2::new(-t, 1.0));
        seeds.push(Vec2::new(-1.0, -t));
    }
    let side_count = seeds.len();
    seeds.extend(corners_expected);
    seeds.extend([
        Vec2::new(0.0, -1.0),
        Vec2::new(1.0, 0.0),
        Vec2::new(0.0, 1.0),
        Vec2::new(-1.0, 0.0),
    ]);
    let params = TraceParams::for_grid(grid);
    let traces: Vec<Streamline> = seeds
        .iter()
        .map(|s| trace_ascending(field, vf, *s, &params))
        .collect::<Result<_>>()?;
    let merges = all_merges(&traces, params.merge_tol);

    // 5. Corner windows hold at least 3 distinct merge points each.
    let window = 0.25;
    let mut min_corner_count = usize::MAX;
    for corner in corners_expected {
        let lo = Vec2::new(corner.x.min(corner.x - corner.x.signum() * window), corner.y.min(corner.y - corner.y.signum() * window));
        let hi = Vec2::new(lo.x + window, lo.y + window);
        let pts: Vec<Vec2> = merges
            .iter()
            .map(|cl| cl.location)
            .filter(|p| p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y)
            .collect();
        min_corner_count = min_corner_count.min(distinct_count(&pts, 1e-6));
    }
    verdicts.push(Verdict::check(
        "corner-window-merges",
        "merge points accumulate near the corners",
        vec![("min_distinct_per_corner".into(), min_corner_count as f64)],
        "at least 3 distinct merge points in each corner window of side 0.25".into(),
        min_corner_count >= 3,
    ));

    // 6. Merge points accumulate near the top.
    let high: Vec<Vec2> = merges
        .iter()
        .filter(|cl| cl.level > 0.8)
        .map(|cl| cl.location)
        .collect();
    let high_count = distinct_count(&high, 1e-6);
    verdicts.push(Verdict::check(
        "origin-window-merges",
        "merge points accumulate near the top of the potential",
        vec![("distinct_above_0_8".into(), high_count as f64)],
        "at least 3 distinct merge points with level > 0.8".into(),
        high_count >= 3,
    ));

    // 7. Every non-median side seed merges below the top level.
    let mut merged = vec![false; traces.len()];
    for cl in &merges {
        if cl.level < 1.0 - 1e-3 {
            merged[cl.pair.0] = true;
            merged[cl.pair.1] = true;
        }
    }
    let unmerged_sides = (0..side_count).filter(|&i| !merged[i]).count();
    verdicts.push(Verdict::check(
        "side-seed-merges",
        "every non-median streamline acquires a merge",
        vec![
            ("side_seeds".into(), side_count as f64),
            ("unmerged".into(), unmerged_sides as f64),
        ],
        "all side seeds merge before level 1 - 1e-3".into(),
        unmerged_sides == 0,
    ));

    // 8. Dihedral symmetry of the nodal values.
    let nx = grid.nx();
    let ny = grid.ny();
    let mut sym = 0.0f64;
    if nx == ny {
        for (i, j) in grid.interior_indices() {
            let v = field.value(i, j);
            let images = [
                (nx - 1 - i, j),
                (i, ny - 1 - j),
                (nx - 1 - i, ny - 1 - j),
                (j, i),
                (ny - 1 - j, nx - 1 - i),
                (j, nx - 1 - i),
                (ny - 1 - j, i),
            ];
            for (ii, jj) in images {
                sym = sym.max((v - field.value(ii, jj)).abs());
            }
        }
    } else {
        sym = f64::INFINITY;
    }
    let sym_tol = 10.0 * suite.tol_res;
    verdicts.push(Verdict::check(
        "dihedral-symmetry",
        "the potential carries the full symmetry group of the square",
        vec![("max_asymmetry".into(), sym)],
        format!("max asymmetry <= {sym_tol:.2e}"),
        sym <= sym_tol,
    ));

    // Report-only: how far merge points sit from the diagonals.
    let diag_dist = |p: Vec2| (p.x.abs() - p.y.abs()).abs() / 2.0f64.sqrt();
    let mut max_d = 0.0f64;
    let mut sum_d = 0.0f64;
    for cl in &merges {
        let d = diag_dist(cl.location);
        max_d = max_d.max(d);
        sum_d += d;
    }
    let mean_d = if merges.is_empty() { 0.0 } else { sum_d / merges.len() as f64 };
    verdicts.push(Verdict::report(
        "merge-diagonal-distance",
        "distance of detected merge points to the nearest diagonal (conjecturally zero)",
        vec![
            ("max".into(), max_d),
            ("mean".into(), mean_d),
            ("merge_count".into(), merges.len() as f64),
        ],
        "report only".into(),
    ));

    // Report-only: the log-gradient floor (conjectured >= 1).
    let mut log_min = f64::INFINITY;
    for (_, v, speed) in clear_nodes(field, vf, 2.0 * h) {
        if v > 1e-12 {
            log_min = log_min.min(speed / v);
        }
    }
    verdicts.push(Verdict::report(
        "log-gradient-floor",
        "min |grad log V| over nodes with 2h clearance (conjectured >= 1)",
        vec![("min".into(), log_min)],
        "report only".into(),
    ));

    Ok(verdicts)
}

fn distinct_count(points: &[Vec2], tol: f64) -> usize {
    let mut kept: Vec<Vec2> = Vec::new();
    for p in points {
        if kept.iter().all(|q| q.dist(*p) > tol) {
            kept.push(*p);
        }
    }
    kept.len()
}

/// Deterministic random rectangle contours inside the ring with the given
/// clearance, edges subdivided to about one spacing.
pub fn random_rect_contours(
    field: &ScalarField,
    n: usize,
    seed: u64,
    min_clearance: f64,
) -> Vec<Vec<Vec2>> {
    let grid = field.grid();
    let (bb_min, bb_max) = grid.ring().outer().bounding_box();
    let h = grid.h();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut attempts = 0usize;
    while out.len() < n && attempts < 100_000 {
        attempts += 1;
        let x0 = rng.random_range(bb_min.x..bb_max.x);
        let x1 = rng.random_range(bb_min.x..bb_max.x);
        let y0 = rng.random_range(bb_min.y..bb_max.y);
        let y1 = rng.random_range(bb_min.y..bb_max.y);
        let (x0, x1) = (x0.min(x1), x0.max(x1));
        let (y0, y1) = (y0.min(y1), y0.max(y1));
        if x1 - x0 < 4.0 * h || y1 - y0 < 4.0 * h {
            continue;
        }
        let rect = [
            Vec2::new(x0, y0),
            Vec2::new(x1, y0),
            Vec2::new(x1, y1),
            Vec2::new(x0, y1),
        ];
        let contour = subdivide_closed(&rect, h);
        if contour.iter().all(|p| grid.clearance(*p) >= min_clearance) {
            out.push(contour);
        }
    }
    out
}

/// Closed-polyline subdivision with segment length at most `max_len`.
pub fn subdivide_closed(corners: &[Vec2], max_len: f64) -> Vec<Vec2> {
    let n = corners.len();
    let mut out = Vec::new();
    for i in 0..n {
        let a = corners[i];
        let b = corners[(i + 1) % n];
        let pieces = (a.dist(b) / max_len).ceil().max(1.0) as usize;
        for k in 0..pieces {
            out.push(a.lerp(b, k as f64 / pieces as f64));
        }
    }
    out
}

/// Circle contour helper.
pub fn circle_contour(center: Vec2, radius: f64, n: usize) -> Vec<Vec2> {
    (0..n)
        .map(|i| {
            let t = std::f64::consts::TAU * i as f64 / n as f64;
            center + Vec2::new(t.cos(), t.sin()) * radius
        })
        .collect()
}

/// The standard battery run by the verification command: value bounds,
/// residual, level-curve convexity, flux batteries, and gradient estimates.
pub fn run_standard_checks(
    field: &ScalarField,
    vf: &VectorField,
    sparams: &SolveParams,
    contour_count: usize,
    contour_seed: u64,
) -> Vec<Verdict> {
    let grid = field.grid();
    let h = grid.h();
    let mut verdicts = Vec::new();

    // Value bounds (discrete comparison principle).
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in field.values() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    verdicts.push(Verdict::check(
        "value-bounds",
        "the potential stays between its boundary values",
        vec![("min".into(), lo), ("max".into(), hi)],
        "values within [0, 1] up to 1e-12".into(),
        lo >= -1e-12 && hi <= 1.0 + 1e-12,
    ));

    // Solver residual.
    let res = residual_infinity(field, sparams);
    let res_cap = 10.0 * sparams.tol_res / (h * h);
    verdicts.push(Verdict::check(
        "solver-residual",
        "the field is a fixed point of the midrange operator",
        vec![("residual".into(), res)],
        format!("residual <= {res_cap:.3e}"),
        res <= res_cap,
    ));

    // Level-curve convexity at the standard levels.
    let mut worst_defect = 0.0f64;
    let mut curves = 0usize;
    for k in 1..10 {
        let c = k as f64 / 10.0;
        if let Ok(lc) = level_curve(field, c) {
            worst_defect = worst_defect.max(crate::field::convexity_defect(lc.main_loop()));
            curves += 1;
        }
    }
    verdicts.push(Verdict::check(
        "level-convexity",
        "level curves of the potential are convex",
        vec![("worst_defect".into(), worst_defect), ("curves".into(), curves as f64)],
        format!("convexity defect <= {:.4}", 2.0 * h),
        curves > 0 && worst_defect <= 2.0 * h,
    ));

    // Flux battery over deterministic random contours.
    let contours = random_rect_contours(field, contour_count, contour_seed, 2.0 * h);
    for p in [2.0, 3.0, 6.0] {
        let mut worst = f64::NEG_INFINITY;
        let mut count = 0usize;
        for c in &contours {
            if let Ok(v) = flux_check(field, vf, c, p) {
                if let Some((_, val)) = v.measured.iter().find(|(k, _)| k == "normalized") {
                    worst = worst.max(*val);
                    count += 1;
                }
            }
        }
        verdicts.push(Verdict::check(
            &format!("flux-battery-p{p}"),
            "outward flux of |grad V|^(p-2) grad V through interior contours is non-positive",
            vec![("worst_normalized".into(), worst), ("contours".into(), count as f64)],
            format!("worst normalized flux <= {:.6}", flux_tolerance(h)),
            count > 0 && worst <= flux_tolerance(h),
        ));
    }
    {
        let mut worst = f64::INFINITY;
        let mut count = 0usize;
        for c in contours.iter().take(20) {
            if let Ok(v) = log_flux_check(field, vf, c, 2.0) {
                if let Some((_, val)) = v.measured.iter().find(|(k, _)| k == "normalized_margin") {
                    worst = worst.min(*val);
                    count += 1;
                }
            }
        }
        verdicts.push(Verdict::check(
            "log-flux-battery-p2",
            "the log-potential energy inequality holds on interior contours",
            vec![("worst_margin".into(), worst), ("contours".into(), count as f64)],
            format!("worst margin >= -{:.6}", flux_tolerance(h)),
            count > 0 && worst >= -flux_tolerance(h),
        ));
    }

    verdicts.push(gradient_bounds_check(field, vf));
    verdicts.push(outer_lower_bound_check(field, vf));
    if let Ok(v) = inner_limit_check(field, vf) {
        verdicts.push(v);
    }
    verdicts
}
