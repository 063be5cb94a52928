//! Streamlines of the gradient flow and their merge structure.
//!
//! Ascending streamlines follow `dx/dt = grad V` from the outer boundary
//! toward the inner one; descending streamlines follow the negative gradient.
//! Two ascending streamlines can come together and continue as one; the first
//! point where that happens is recorded as a `ClPoint`. Merge detection is
//! level-matched: positions are compared on common potential levels, and a
//! merge requires closeness sustained from the first matching level all the
//! way to the common termination.

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::vec2::Vec2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    ReachedGamma,
    ReachedOuter,
    Stalled,
    LeftDomain,
}

impl Termination {
    pub fn tag(self) -> &'static str {
        match self {
            Termination::ReachedGamma => "reached_gamma",
            Termination::ReachedOuter => "reached_outer",
            Termination::Stalled => "stalled",
            Termination::LeftDomain => "left_domain",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Termination> {
        match tag {
            "reached_gamma" => Some(Termination::ReachedGamma),
            "reached_outer" => Some(Termination::ReachedOuter),
            "stalled" => Some(Termination::Stalled),
            "left_domain" => Some(Termination::LeftDomain),
            _ => None,
        }
    }
}

/// A traced trajectory with arclength, potential, and speed per vertex.
#[derive(Clone, Debug)]
pub struct Streamline {
    pub seed: Vec2,
    pub vertices: Vec<Vec2>,
    pub arclength: Vec<f64>,
    pub potential: Vec<f64>,
    pub speed: Vec<f64>,
    pub termination: Termination,
}

impl Streamline {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn total_arclength(&self) -> f64 {
        *self.arclength.last().unwrap_or(&0.0)
    }

    pub fn final_potential(&self) -> f64 {
        *self.potential.last().unwrap_or(&f64::NAN)
    }

    /// Position where the trace crosses level `c`, by monotone interpolation
    /// of the per-vertex potential. `None` outside the traced range.
    pub fn position_at_level(&self, c: f64) -> Option<Vec2> {
        self.interp_at_level(c).map(|(p, _)| p)
    }

    /// Arclength parameter at level `c`.
    pub fn arclength_at_level(&self, c: f64) -> Option<f64> {
        self.interp_at_level(c).map(|(_, s)| s)
    }

    fn interp_at_level(&self, c: f64) -> Option<(Vec2, f64)> {
        let v = &self.potential;
        if v.is_empty() || c < v[0] || c > *v.last().unwrap() {
            return None;
        }
        // Binary search on the ascending potential array.
        let mut lo = 0usize;
        let mut hi = v.len() - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if v[mid] <= c {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (va, vb) = (v[lo], v[hi]);
        let t = if vb > va { (c - va) / (vb - va) } else { 0.0 };
        Some((
            self.vertices[lo].lerp(self.vertices[hi], t),
            self.arclength[lo] + (self.arclength[hi] - self.arclength[lo]) * t,
        ))
    }

    /// Position at arclength `s` (clamped to the traced range).
    pub fn position_at_arclength(&self, s: f64) -> Vec2 {
        let a = &self.arclength;
        if s <= a[0] {
            return self.vertices[0];
        }
        if s >= *a.last().unwrap() {
            return *self.vertices.last().unwrap();
        }
        let mut lo = 0usize;
        let mut hi = a.len() - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if a[mid] <= s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = (s - a[lo]) / (a[hi] - a[lo]).max(1e-300);
        self.vertices[lo].lerp(self.vertices[hi], t)
    }
}

#[derive(Clone, Debug)]
pub struct TraceParams {
    /// Spatial step cap per integration step.
    pub max_step: f64,
    /// Ascending traces stop within `1 - delta_stop` of the top level.
    pub delta_stop: f64,
    /// Speed floor: below this the stall budget starts draining.
    pub eps_speed: f64,
    /// Consecutive sub-floor steps allowed before declaring a stall.
    pub stall_budget: usize,
    pub max_steps: usize,
    /// Distance at which two traces count as joined.
    pub merge_tol: f64,
    /// Inner-boundary arrival radius.
    pub gamma_radius: f64,
    /// Outer-boundary arrival radius (descending traces).
    pub outer_radius: f64,
}

impl TraceParams {
    /// Defaults tied to the grid: step cap h/2, merge tolerance h, arrival
    /// radius max(2h, capture radius), speed floor 1e-6 of the gradient bound.
    pub fn for_grid(grid: &crate::field::Grid) -> TraceParams {
        let h = grid.h();
        let sep = grid.ring().separation();
        TraceParams {
            max_step: 0.5 * h,
            delta_stop: 1e-3,
            eps_speed: 1e-6 / sep,
            stall_budget: 400,
            max_steps: 400_000,
            merge_tol: h,
            gamma_radius: (2.0 * h).max(grid.r_gamma()),
            outer_radius: 2.0 * h,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Sense {
    Ascending,
    Descending,
}

/// Ascending streamline from `seed`. Seeds on the outer boundary with a
/// degenerate gradient (corners) are nudged inward along the interior
/// bisector before integration starts.
pub fn trace_ascending(
    field: &ScalarField,
    vf: &VectorField,
    seed: Vec2,
    params: &TraceParams,
) -> Result<Streamline> {
    trace(field, vf, seed, params, Sense::Ascending)
}

/// Descending streamline (negative gradient). Descending flows may branch at
/// singular points; the integrator returns the numerically followed branch.
pub fn trace_descending(
    field: &ScalarField,
    vf: &VectorField,
    seed: Vec2,
    params: &TraceParams,
) -> Result<Streamline> {
    trace(field, vf, seed, params, Sense::Descending)
}

fn trace(
    field: &ScalarField,
    vf: &VectorField,
    seed: Vec2,
    params: &TraceParams,
    sense: Sense,
) -> Result<Streamline> {
    let grid = field.grid();
    let ring = grid.ring();
    let h = grid.h();
    if !ring.contains(seed) && ring.outer().boundary_distance(seed) > 1e-9 {
        return Err(Error::SeedOutOfDomain { x: seed.x, y: seed.y });
    }

    let mut x = seed;
    // Boundary seed with a near-zero gradient: step inward first.
    if sense == Sense::Ascending && ring.outer().boundary_distance(x) <= 1e-9 {
        let g0 = vf.sample(x).map(|g| g.norm()).unwrap_or(0.0);
        if g0 < 0.05 / ring.separation() {
            x += ring.outer().inward_direction(x) * (2.0 * h);
        }
    }

    let sgn = match sense {
        Sense::Ascending => 1.0,
        Sense::Descending => -1.0,
    };
    let mut vertices = vec![x];
    let mut arclength = vec![0.0];
    let mut potential = vec![field.sample(x)?];
    let mut speed = vec![vf.sample(x)?.norm()];
    let mut stall = 0usize;

    let termination = 'outer: loop {
        if vertices.len() >= params.max_steps {
            break Termination::Stalled;
        }
        // Arrival tests.
        match sense {
            Sense::Ascending => {
                if ring.inner().set_distance(x) <= params.gamma_radius
                    || *potential.last().unwrap() >= 1.0 - params.delta_stop
                {
                    break Termination::ReachedGamma;
                }
            }
            Sense::Descending => {
                if ring.outer().boundary_distance(x) <= params.outer_radius
                    || *potential.last().unwrap() <= params.delta_stop
                {
                    break Termination::ReachedOuter;
                }
            }
        }

        let g = match vf.sample(x) {
            Ok(g) => g * sgn,
            Err(_) => break Termination::LeftDomain,
        };
        let sp = g.norm();
        if sp < params.eps_speed {
            stall += 1;
            if stall > params.stall_budget {
                break Termination::Stalled;
            }
        } else {
            stall = 0;
        }

        // RK4 with the time step scaled so the spatial advance is capped.
        let mut dt = params.max_step / sp.max(params.eps_speed);
        let mut accepted = None;
        for _ in 0..12 {
            match rk4_step(vf, x, dt, sgn) {
                Some(xn) => {
                    if xn.dist(x) > 1.5 * params.max_step {
                        dt *= 0.5;
                        continue;
                    }
                    let vn = match field.sample(xn) {
                        Ok(v) => v,
                        Err(_) => {
                            // Stage left the sampled domain: descending traces
                            // land on the outer boundary, ascending ones stop.
                            if sense == Sense::Descending {
                                break 'outer Termination::ReachedOuter;
                            }
                            dt *= 0.5;
                            continue;
                        }
                    };
                    let monotone_ok = match sense {
                        Sense::Ascending => vn > *potential.last().unwrap() - 1e-14,
                        Sense::Descending => vn < *potential.last().unwrap() + 1e-14,
                    };
                    if !monotone_ok {
                        dt *= 0.5;
                        continue;
                    }
                    accepted = Some((xn, vn));
                    break;
                }
                None => {
                    if sense == Sense::Descending {
                        break 'outer Termination::ReachedOuter;
                    }
                    dt *= 0.5;
                }
            }
        }
        let (xn, vn) = match accepted {
            Some(av) => av,
            None => break Termination::Stalled,
        };
        if !ring.outer().contains(xn) {
            if sense == Sense::Descending {
                break Termination::ReachedOuter;
            }
            break Termination::LeftDomain;
        }
        let ds = xn.dist(x);
        if ds < 1e-16 {
            stall += 1;
            if stall > params.stall_budget {
                break Termination::Stalled;
            }
        }
        x = xn;
        vertices.push(x);
        arclength.push(arclength.last().unwrap() + ds);
        potential.push(vn);
        speed.push(vf.sample(x).map(|g| g.norm()).unwrap_or(0.0));
    };

    Ok(Streamline { seed, vertices, arclength, potential, speed, termination })
}

fn rk4_step(vf: &VectorField, x: Vec2, dt: f64, sgn: f64) -> Option<Vec2> {
    let f = |p: Vec2| vf.sample(p).ok().map(|g| g * sgn);
    let k1 = f(x)?;
    let k2 = f(x + k1 * (dt * 0.5))?;
    let k3 = f(x + k2 * (dt * 0.5))?;
    let k4 = f(x + k3 * dt)?;
    Some(x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
}

/// First meeting of two streamlines.
#[derive(Clone, Debug, PartialEq)]
pub struct ClPoint {
    pub location: Vec2,
    /// Potential level at the meeting.
    pub level: f64,
    /// Streamline indices as supplied to [`merge_tree`]; `(0, 1)` from
    /// [`detect_merge`].
    pub pair: (usize, usize),
    /// Arclength parameter of the meeting on each streamline.
    pub s_on: (f64, f64),
}

/// Number of level samples used by the sustained-closeness scan.
const MERGE_LEVELS: usize = 1024;

/// Level-matched first meeting: the smallest level at which the two traces
/// are within `tol_merge` and stay within it at every higher sampled level
/// of their common range. `None` when no such level exists.
pub fn detect_merge(s1: &Streamline, s2: &Streamline, tol_merge: f64) -> Option<ClPoint> {
    if s1.is_empty() || s2.is_empty() {
        return None;
    }
    let lo = s1.potential[0].max(s2.potential[0]);
    let hi = s1.final_potential().min(s2.final_potential());
    if !(hi > lo) {
        // Degenerate range: identical seeds still merge at the seed level.
        return if s1.vertices[0].dist(s2.vertices[0]) <= tol_merge {
            let level = s1.potential[0].max(s2.potential[0]);
            Some(ClPoint {
                location: (s1.vertices[0] + s2.vertices[0]) * 0.5,
                level,
                pair: (0, 1),
                s_on: (0.0, 0.0),
            })
        } else {
            None
        };
    }
    let level_at = |i: usize| lo + (hi - lo) * i as f64 / (MERGE_LEVELS - 1) as f64;
    let dist_at = |c: f64| -> Option<f64> {
        let p1 = s1.position_at_level(c)?;
        let p2 = s2.position_at_level(c)?;
        Some(p1.dist(p2))
    };
    // Scan from the top: find the longest suffix of levels that stays close.
    let mut first_ok: Option<usize> = None;
    for i in (0..MERGE_LEVELS).rev() {
        match dist_at(level_at(i)) {
            Some(d) if d <= tol_merge => first_ok = Some(i),
            _ => break,
        }
    }
    let i0 = first_ok?;
    // Refine the onset level between the last failing and first passing sample.
    let mut c_merge = level_at(i0);
    if i0 > 0 {
        let (mut bad, mut good) = (level_at(i0 - 1), level_at(i0));
        for _ in 0..50 {
            let mid = 0.5 * (bad + good);
            match dist_at(mid) {
                Some(d) if d <= tol_merge => good = mid,
                _ => bad = mid,
            }
        }
        c_merge = good;
    }
    let p1 = s1.position_at_level(c_merge)?;
    let p2 = s2.position_at_level(c_merge)?;
    Some(ClPoint {
        location: (p1 + p2) * 0.5,
        level: c_merge,
        pair: (0, 1),
        s_on: (
            s1.arclength_at_level(c_merge).unwrap_or(0.0),
            s2.arclength_at_level(c_merge).unwrap_or(0.0),
        ),
    })
}

/// Forest of merge events over a family of streamlines: every streamline
/// keeps its earliest merge; mutual-earliest pairs collapse to one edge.
#[derive(Clone, Debug, Default)]
pub struct MergeTree {
    pub node_count: usize,
    pub edges: Vec<ClPoint>,
}

impl MergeTree {
    /// Streamlines with no merge edge at all (single trunks).
    pub fn singleton_trunks(&self) -> Vec<usize> {
        let mut has_edge = vec![false; self.node_count];
        for e in &self.edges {
            has_edge[e.pair.0] = true;
            has_edge[e.pair.1] = true;
        }
        (0..self.node_count).filter(|&i| !has_edge[i]).collect()
    }

    /// Earliest merge edge touching streamline `i`.
    pub fn earliest_for(&self, i: usize) -> Option<&ClPoint> {
        self.edges
            .iter()
            .filter(|e| e.pair.0 == i || e.pair.1 == i)
            .min_by(|a, b| a.level.total_cmp(&b.level))
    }
}

pub fn merge_tree(streamlines: &[Streamline], tol_merge: f64) -> MergeTree {
    let n = streamlines.len();
    let mut earliest: Vec<Option<ClPoint>> = vec![None; n];
    for i in 0..n {
        for j in (i + 1)..n {
            if let Some(mut cl) = detect_merge(&streamlines[i], &streamlines[j], tol_merge) {
                cl.pair = (i, j);
                cl.s_on = (
                    streamlines[i].arclength_at_level(cl.level).unwrap_or(0.0),
                    streamlines[j].arclength_at_level(cl.level).unwrap_or(0.0),
                );
                for &side in &[i, j] {
                    let better = match &earliest[side] {
                        None => true,
                        Some(prev) => {
                            cl.level < prev.level - 1e-15
                                || (cl.level <= prev.level + 1e-15 && cl.pair < prev.pair)
                        }
                    };
                    if better {
                        earliest[side] = Some(cl.clone());
                    }
                }
            }
        }
    }
    let mut edges: Vec<ClPoint> = Vec::new();
    for e in earliest.into_iter().flatten() {
        if !edges.iter().any(|x| x.pair == e.pair) {
            edges.push(e);
        }
    }
    edges.sort_by(|a, b| a.level.total_cmp(&b.level).then(a.pair.cmp(&b.pair)));
    MergeTree { node_count: n, edges }
}

/// All pairwise first meetings (not reduced to a forest).
pub fn all_merges(streamlines: &[Streamline], tol_merge: f64) -> Vec<ClPoint> {
    let n = streamlines.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if let Some(mut cl) = detect_merge(&streamlines[i], &streamlines[j], tol_merge) {
                cl.pair = (i, j);
                out.push(cl);
            }
        }
    }
    out
}

/// Transversal crossing test for a pair of ascending traces. Crossings inside
/// the merged tail (at or above the merge level) and contacts at the shared
/// terminal region are not transversal crossings. Ascending streamlines of a
/// potential must never cross, so this returns false on healthy data.
pub fn crossing_check(s1: &Streamline, s2: &Streamline, tol_merge: f64) -> bool {
    if s1.vertices == s2.vertices {
        return false;
    }
    let merge_level = detect_merge(s1, s2, tol_merge).map(|cl| cl.level);
    // Uniform spatial hash over s2 segments to prune the pair loop.
    let cell = (4.0 * seg_max_len(s1).max(seg_max_len(s2))).max(1e-12);
    let mut buckets: std::collections::HashMap<(i64, i64), Vec<usize>> =
        std::collections::HashMap::new();
    let key = |p: Vec2| ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64);
    for j in 0..s2.vertices.len() - 1 {
        let (a, b) = (s2.vertices[j], s2.vertices[j + 1]);
        let (ka, kb) = (key(a), key(b));
        for gx in ka.0.min(kb.0)..=ka.0.max(kb.0) {
            for gy in ka.1.min(kb.1)..=ka.1.max(kb.1) {
                buckets.entry((gx, gy)).or_default().push(j);
            }
        }
    }
    for i in 0..s1.vertices.len() - 1 {
        let (a, b) = (s1.vertices[i], s1.vertices[i + 1]);
        let (ka, kb) = (key(a), key(b));
        let mut seen: Vec<usize> = Vec::new();
        for gx in ka.0.min(kb.0) - 1..=ka.0.max(kb.0) + 1 {
            for gy in ka.1.min(kb.1) - 1..=ka.1.max(kb.1) + 1 {
                if let Some(js) = buckets.get(&(gx, gy)) {
                    seen.extend_from_slice(js);
                }
            }
        }
        seen.sort_unstable();
        seen.dedup();
        for j in seen {
            let (c, d) = (s2.vertices[j], s2.vertices[j + 1]);
            if let Some(p) = proper_intersection(a, b, c, d) {
                // Level on s1 at the intersection.
                let t = if b.dist(a) > 0.0 { p.dist(a) / b.dist(a) } else { 0.0 };
                let lvl = s1.potential[i] + (s1.potential[i + 1] - s1.potential[i]) * t;
                if let Some(ml) = merge_level {
                    if lvl >= ml - 1e-9 {
                        continue;
                    }
                }
                // Shared terminal contact.
                let near_end1 = s1.vertices.last().unwrap().dist(p) <= 2.0 * tol_merge;
                let near_end2 = s2.vertices.last().unwrap().dist(p) <= 2.0 * tol_merge;
                if near_end1 && near_end2 {
                    continue;
                }
                return true;
            }
        }
    }
    false
}

fn seg_max_len(s: &Streamline) -> f64 {
    s.vertices
        .windows(2)
        .map(|w| w[0].dist(w[1]))
        .fold(0.0, f64::max)
}

/// Strictly interior transversal intersection of two segments.
fn proper_intersection(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> Option<Vec2> {
    let r = b - a;
    let s = d - c;
    let denom = r.cross(s);
    if denom.abs() < 1e-15 {
        return None;
    }
    let t = (c - a).cross(s) / denom;
    let u = (c - a).cross(r) / denom;
    const IN: f64 = 1e-9;
    if t > IN && t < 1.0 - IN && u > IN && u < 1.0 - IN {
        Some(a + r * t)
    } else {
        None
    }
}

/// Sup distance between traces of the same seed at step caps h/2 and h/4,
/// matched by arclength over the common range. A small value is the numerical
/// stand-in for uniqueness of the ascending flow.
pub fn refinement_consistency(
    field: &ScalarField,
    vf: &VectorField,
    seed: Vec2,
    params: &TraceParams,
) -> Result<f64> {
    let h = field.grid().h();
    let coarse =
        trace_ascending(field, vf, seed, &TraceParams { max_step: 0.5 * h, ..params.clone() })?;
    let fine =
        trace_ascending(field, vf, seed, &TraceParams { max_step: 0.25 * h, ..params.clone() })?;
    let common = coarse.total_arclength().min(fine.total_arclength());
    let mut worst = 0.0f64;
    let mut s = 0.0;
    while s <= common {
        worst = worst.max(coarse.position_at_arclength(s).dist(fine.position_at_arclength(s)));
        s += 0.25 * h;
    }
    Ok(worst)
}

/// Evenly spaced boundary seeds.
pub fn boundary_seeds(outer: &crate::geometry::ConvexBody, n: usize) -> Vec<Vec2> {
    outer.boundary_points(n)
}
