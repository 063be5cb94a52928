//! Discrete infinity-harmonic and p-harmonic potentials.
//!
//! The infinity solver iterates a monotone midrange operator: a node's value
//! becomes the interpolation between the largest and smallest directional
//! slopes over a stencil of `k` unit directions at radius `m * h`. Rays that
//! leave the ring before the stencil radius are clipped exactly at the
//! boundary and the boundary value enters the directional slope at the clip
//! distance. With equal arm lengths the update is the plain midrange
//! `(max + min) / 2`; unequal arms near boundaries keep first-order
//! consistency and monotonicity.
//!
//! The p-solver minimizes the discrete p-Dirichlet energy over grid edges by
//! nodewise safeguarded Newton inside Gauss-Seidel sweeps.

use crate::error::{Error, Result};
use crate::field::{build_grid, gradient, Grid, NodeClass, ScalarField};
use crate::geometry::ConvexRing;
use crate::vec2::Vec2;
use rayon::prelude::*;
use std::sync::Arc;
use std::time::Instant;

/// Boundary data carried by the two boundaries. The ring potential uses 0 on
/// the outer boundary and 1 on the inner one; affine data exists for
/// verification fixtures (affine functions solve every p-Laplacian).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundaryData {
    Ring01,
    Affine { a: f64, bx: f64, by: f64 },
}

impl BoundaryData {
    fn outer_value(&self, p: Vec2) -> f64 {
        match self {
            BoundaryData::Ring01 => 0.0,
            BoundaryData::Affine { a, bx, by } => a + bx * p.x + by * p.y,
        }
    }

    fn inner_value(&self, p: Vec2) -> f64 {
        match self {
            BoundaryData::Ring01 => 1.0,
            BoundaryData::Affine { a, bx, by } => a + bx * p.x + by * p.y,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepOrder {
    Lexicographic,
    /// Two-color sweeps; nodes of one color update from a frozen state, so
    /// the result is identical whether the color is processed sequentially
    /// or in parallel.
    Checkerboard,
}

#[derive(Clone, Debug)]
pub struct SolveParams {
    /// Stencil radius in cells.
    pub stencil_m: usize,
    /// Number of stencil directions.
    pub stencil_k: usize,
    /// Sweep terminates when the largest nodal update falls below this.
    pub tol_res: f64,
    pub max_sweeps: usize,
    pub order: SweepOrder,
    /// Process checkerboard colors with rayon.
    pub parallel: bool,
    pub boundary: BoundaryData,
    /// Print a log line to stderr every this many sweeps (0 = silent).
    pub log_every: usize,
}

impl Default for SolveParams {
    fn default() -> Self {
        SolveParams {
            stencil_m: 3,
            stencil_k: 16,
            tol_res: 1e-8,
            max_sweeps: 100_000,
            order: SweepOrder::Checkerboard,
            parallel: false,
            boundary: BoundaryData::Ring01,
            log_every: 0,
        }
    }
}

impl SolveParams {
    pub fn validate(&self) -> Result<()> {
        if self.stencil_m < 2 {
            return Err(Error::InvalidBody("stencil radius m must be >= 2".into()));
        }
        if self.stencil_k < 8 {
            return Err(Error::InvalidBody("stencil directions k must be >= 8".into()));
        }
        if !(self.tol_res > 0.0) {
            return Err(Error::InvalidBody("tol_res must be positive".into()));
        }
        Ok(())
    }
}

/// One stencil arm: either an off-grid sample (four bilinear weights) or a
/// clipped boundary value at distance `t`.
#[derive(Clone, Copy)]
enum Arm {
    Interp { idx: [u32; 4], w: [f64; 4], t: f64 },
    Boundary { value: f64, t: f64 },
}

struct Stencil {
    /// Interior node indices, sweep order.
    nodes: Vec<u32>,
    /// `k` arms per node, same order as `nodes`.
    arms: Vec<Arm>,
    k: usize,
}

fn build_stencil(grid: &Grid, params: &SolveParams) -> Stencil {
    let (nx, ny, h) = (grid.nx(), grid.ny(), grid.h());
    let eps = params.stencil_m as f64 * h;
    let k = params.stencil_k;
    let dirs: Vec<Vec2> = (0..k)
        .map(|d| {
            let ang = std::f64::consts::TAU * d as f64 / k as f64;
            Vec2::new(ang.cos(), ang.sin())
        })
        .collect();
    let ring = grid.ring();
    let inner_pad = grid.r_gamma();

    // Cells safe for off-grid sampling: no corner is an outer-boundary node
    // lying strictly outside the domain (such nodes hold 0 while the
    // potential's extension would be negative; sampling across that kink
    // flattens the scheme near the rim).
    let clean: Vec<bool> = (0..(nx - 1) * (ny - 1))
        .map(|c| {
            let (ci, cj) = (c % (nx - 1), c / (nx - 1));
            [(ci, cj), (ci + 1, cj), (ci, cj + 1), (ci + 1, cj + 1)]
                .iter()
                .all(|&(i, j)| match grid.class(i, j) {
                    NodeClass::Exterior => false,
                    NodeClass::OuterBc => {
                        ring.outer().boundary_distance(grid.pos(i, j)) <= 1e-12
                    }
                    _ => true,
                })
        })
        .collect();

    let interior: Vec<(usize, usize)> = grid.interior_indices();
    let mut nodes = Vec::with_capacity(interior.len());
    let mut arms = Vec::with_capacity(interior.len() * k);
    for &(i, j) in &interior {
        nodes.push(grid.idx(i, j) as u32);
        let x = grid.pos(i, j);
        for dir in &dirs {
            let t_out = ring.outer().ray_exit(x, *dir).unwrap_or(f64::INFINITY);
            let t_in = ring
                .inner()
                .ray_contact(x, *dir, inner_pad, eps)
                .unwrap_or(f64::INFINITY);
            let arm = if t_out <= eps && t_out <= t_in {
                let t = t_out.max(1e-9 * h);
                Arm::Boundary { value: params.boundary.outer_value(x + *dir * t_out), t }
            } else if t_in <= eps {
                let t = t_in.max(1e-9 * h);
                Arm::Boundary { value: params.boundary.inner_value(x + *dir * t_in), t }
            } else {
                interp_arm(grid, &clean, x, *dir, eps)
            };
            arms.push(arm);
        }
    }
    Stencil { nodes, arms, k }
}

/// Off-grid sample arm at radius `eps`, retreating toward the node in
/// half-spacing steps until the sampled cell is clean. The directional slope
/// stays consistent at any positive sample distance.
fn interp_arm(grid: &Grid, clean: &[bool], x: Vec2, dir: Vec2, eps: f64) -> Arm {
    let (nx, ny, h) = (grid.nx(), grid.ny(), grid.h());
    let mut t = eps;
    let mut fallback = None;
    while t >= 0.5 * h - 1e-12 {
        let y = x + dir * t;
        let fx = (y.x - grid.origin().x) / h;
        let fy = (y.y - grid.origin().y) / h;
        let ci = (fx.floor() as isize).clamp(0, nx as isize - 2) as usize;
        let cj = (fy.floor() as isize).clamp(0, ny as isize - 2) as usize;
        let (ax, ay) = (fx - ci as f64, fy - cj as f64);
        let usable = grid.class(ci, cj) != NodeClass::Exterior
            && grid.class(ci + 1, cj) != NodeClass::Exterior
            && grid.class(ci, cj + 1) != NodeClass::Exterior
            && grid.class(ci + 1, cj + 1) != NodeClass::Exterior;
        if usable {
            let arm = Arm::Interp {
                idx: [
                    grid.idx(ci, cj) as u32,
                    grid.idx(ci + 1, cj) as u32,
                    grid.idx(ci, cj + 1) as u32,
                    grid.idx(ci + 1, cj + 1) as u32,
                ],
                w: [
                    (1.0 - ax) * (1.0 - ay),
                    ax * (1.0 - ay),
                    (1.0 - ax) * ay,
                    ax * ay,
                ],
                t,
            };
            if clean[cj * (nx - 1) + ci] {
                return arm;
            }
            if fallback.is_none() {
                fallback = Some(arm);
            }
        }
        t -= 0.5 * h;
    }
    // Grazing ray with no clean cell on it: keep the longest usable sample.
    fallback.unwrap_or(Arm::Boundary { value: 0.0, t: eps })
}

/// Directional slope of arm `a` seen from value `u`.
#[inline]
fn arm_value(a: &Arm, u: &[f64]) -> (f64, f64) {
    match a {
        Arm::Boundary { value, t } => (*value, *t),
        Arm::Interp { idx, w, t } => {
            let v = w[0] * u[idx[0] as usize]
                + w[1] * u[idx[1] as usize]
                + w[2] * u[idx[2] as usize]
                + w[3] * u[idx[3] as usize];
            (v, *t)
        }
    }
}

/// Root of (max slope + min slope) = 0 over the node's arms: the value where
/// the steepest ascent and descent rates balance. Ties break to the first
/// direction in stencil order.
fn nodal_update(arms: &[Arm], u: &[f64], u_old: f64) -> f64 {
    let mut vals = [0.0f64; 64];
    let mut ts = [0.0f64; 64];
    let k = arms.len();
    for (d, a) in arms.iter().enumerate() {
        let (v, t) = arm_value(a, u);
        vals[d] = v;
        ts[d] = t;
    }
    let mut cur = u_old;
    for _ in 0..16 {
        let mut best_up = f64::NEG_INFINITY;
        let mut best_dn = f64::INFINITY;
        let (mut iu, mut id) = (0usize, 0usize);
        for d in 0..k {
            let s = (vals[d] - cur) / ts[d];
            if s > best_up {
                best_up = s;
                iu = d;
            }
            if s < best_dn {
                best_dn = s;
                id = d;
            }
        }
        let (tp, vp) = (ts[iu], vals[iu]);
        let (tm, vm) = (ts[id], vals[id]);
        let root = (tm * vp + tp * vm) / (tp + tm);
        if (root - cur).abs() <= 1e-15 {
            return root;
        }
        cur = root;
    }
    cur
}

/// Initial iterate: the normalized distance interpolant
/// `min(1, dist(x, outer boundary) / separation)`, which already satisfies
/// the boundary data and the gradient bound. Affine data starts affine.
fn initial_values(grid: &Grid, boundary: &BoundaryData) -> Vec<f64> {
    let mut values = vec![0.0; grid.node_count()];
    let sep = grid.ring().separation();
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            let p = grid.pos(i, j);
            let k = grid.idx(i, j);
            values[k] = match (grid.class(i, j), boundary) {
                (NodeClass::OuterBc, bd) => bd.outer_value(p),
                (NodeClass::InnerBc, bd) => bd.inner_value(p),
                (NodeClass::Exterior, BoundaryData::Ring01) => 0.0,
                (NodeClass::Interior, BoundaryData::Ring01) => {
                    (grid.ring().outer().boundary_distance(p) / sep).min(1.0)
                }
                (_, BoundaryData::Affine { a, bx, by }) => a + bx * p.x + by * p.y,
            };
        }
    }
    values
}

/// Fixed point of the midrange operator on the grid.
pub fn solve_infinity(grid: &Grid, params: &SolveParams) -> Result<ScalarField> {
    params.validate()?;
    let stencil = build_stencil(grid, params);
    let mut values = initial_values(grid, &params.boundary);
    let start = Instant::now();
    let mut residual = f64::INFINITY;
    for sweep in 1..=params.max_sweeps {
        residual = match params.order {
            SweepOrder::Lexicographic => sweep_lexicographic(&stencil, &mut values),
            SweepOrder::Checkerboard => {
                sweep_checkerboard(grid, &stencil, &mut values, params.parallel)
            }
        };
        if params.log_every > 0 && sweep % params.log_every == 0 {
            eprintln!(
                "sweep {sweep} residual {residual:.3e} t {:.1}s",
                start.elapsed().as_secs_f64()
            );
        }
        if residual < params.tol_res {
            return ScalarField::new(Arc::new(grid.clone()), values);
        }
    }
    Err(Error::NoConvergence { sweeps: params.max_sweeps, residual })
}

fn sweep_lexicographic(stencil: &Stencil, values: &mut [f64]) -> f64 {
    let k = stencil.k;
    let mut worst = 0.0f64;
    for (n, &node) in stencil.nodes.iter().enumerate() {
        let arms = &stencil.arms[n * k..(n + 1) * k];
        let old = values[node as usize];
        let new = nodal_update(arms, values, old);
        values[node as usize] = new;
        worst = worst.max((new - old).abs());
    }
    worst
}

fn sweep_checkerboard(grid: &Grid, stencil: &Stencil, values: &mut Vec<f64>, parallel: bool) -> f64 {
    let k = stencil.k;
    let nx = grid.nx();
    let mut worst = 0.0f64;
    for color in 0..2usize {
        let compute = |(n, &node): (usize, &u32)| -> Option<(u32, f64, f64)> {
            let (i, j) = (node as usize % nx, node as usize / nx);
            if (i + j) % 2 != color {
                return None;
            }
            let arms = &stencil.arms[n * k..(n + 1) * k];
            let old = values[node as usize];
            let new = nodal_update(arms, values, old);
            Some((node, new, (new - old).abs()))
        };
        let updates: Vec<(u32, f64, f64)> = if parallel {
            stencil
                .nodes
                .par_iter()
                .enumerate()
                .filter_map(compute)
                .collect()
        } else {
            stencil.nodes.iter().enumerate().filter_map(compute).collect()
        };
        for (node, new, delta) in updates {
            values[node as usize] = new;
            worst = worst.max(delta);
        }
    }
    worst
}

/// Largest normalized midrange defect over interior nodes:
/// `max |update(u)(x) - u(x)| / h^2`.
pub fn residual_infinity(field: &ScalarField, params: &SolveParams) -> f64 {
    let grid = field.grid();
    let stencil = build_stencil(grid, params);
    let k = stencil.k;
    let values = field.values();
    let h2 = grid.h() * grid.h();
    let mut worst = 0.0f64;
    for (n, &node) in stencil.nodes.iter().enumerate() {
        let arms = &stencil.arms[n * k..(n + 1) * k];
        let old = values[node as usize];
        let new = nodal_update(arms, values, old);
        worst = worst.max((new - old).abs() / h2);
    }
    worst
}

/// Same, restricted to nodes with clearance at least `min_clearance`.
pub fn residual_infinity_away(field: &ScalarField, params: &SolveParams, min_clearance: f64) -> f64 {
    let grid = field.grid();
    let stencil = build_stencil(grid, params);
    let k = stencil.k;
    let values = field.values();
    let h2 = grid.h() * grid.h();
    let nx = grid.nx();
    let mut worst = 0.0f64;
    for (n, &node) in stencil.nodes.iter().enumerate() {
        let (i, j) = (node as usize % nx, node as usize / nx);
        if grid.clearance(grid.pos(i, j)) < min_clearance {
            continue;
        }
        let arms = &stencil.arms[n * k..(n + 1) * k];
        let old = values[node as usize];
        let new = nodal_update(arms, values, old);
        worst = worst.max((new - old).abs() / h2);
    }
    worst
}

/// Nodewise minimization of the discrete p-Dirichlet energy
/// `sum_edges h^2 |du/h|^p / p` by safeguarded Newton, Gauss-Seidel sweeps.
pub fn solve_p(grid: &Grid, p: f64, params: &SolveParams) -> Result<ScalarField> {
    solve_p_with_init(grid, p, params, None)
}

/// p-solver with a warm start (continuation across p reuses the previous
/// solution).
pub fn solve_p_with_init(
    grid: &Grid,
    p: f64,
    params: &SolveParams,
    init: Option<&ScalarField>,
) -> Result<ScalarField> {
    params.validate()?;
    if !(p >= 2.0) || !p.is_finite() {
        return Err(Error::InvalidBody("p must be finite and >= 2".into()));
    }
    let mut values = match init {
        Some(f) => f.values().to_vec(),
        None => initial_values(grid, &params.boundary),
    };
    let (nx, ny) = (grid.nx(), grid.ny());
    let interior = grid.interior_indices();
    // Neighbor index table (only non-exterior neighbors).
    let neighbors: Vec<[i64; 4]> = interior
        .iter()
        .map(|&(i, j)| {
            let mut nb = [-1i64; 4];
            let cand = [
                (i.wrapping_sub(1), j, i >= 1),
                (i + 1, j, i + 1 < nx),
                (i, j.wrapping_sub(1), j >= 1),
                (i, j + 1, j + 1 < ny),
            ];
            for (s, &(ci, cj, ok)) in cand.iter().enumerate() {
                if ok && grid.class(ci, cj) != NodeClass::Exterior {
                    nb[s] = grid.idx(ci, cj) as i64;
                }
            }
            nb
        })
        .collect();

    for sweep in 1..=params.max_sweeps {
        let mut worst = 0.0f64;
        for (n, &(i, j)) in interior.iter().enumerate() {
            let k = grid.idx(i, j);
            let mut vals = [0.0f64; 4];
            let mut cnt = 0usize;
            for &nb in &neighbors[n] {
                if nb >= 0 {
                    vals[cnt] = values[nb as usize];
                    cnt += 1;
                }
            }
            let old = values[k];
            let new = p_node_minimum(&vals[..cnt], p, old);
            values[k] = new;
            worst = worst.max((new - old).abs());
        }
        if worst < params.tol_res {
            return ScalarField::new(Arc::new(grid.clone()), values);
        }
        if params.log_every > 0 && sweep % params.log_every == 0 {
            eprintln!("p-sweep {sweep} residual {worst:.3e}");
        }
        if sweep == params.max_sweeps {
            return Err(Error::NoConvergence { sweeps: sweep, residual: worst });
        }
    }
    unreachable!()
}

/// Minimizer of `sum_n |u - v_n|^p` over `u` (the grid scale factors cancel
/// in the nodewise problem): safeguarded Newton on the strictly increasing
/// derivative, bracketed by the neighbor range.
fn p_node_minimum(vals: &[f64], p: f64, start: f64) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in vals {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if hi - lo < 1e-15 {
        return 0.5 * (lo + hi);
    }
    if p == 2.0 {
        return vals.iter().sum::<f64>() / vals.len() as f64;
    }
    let dphi = |u: f64| -> (f64, f64) {
        let mut d1 = 0.0;
        let mut d2 = 0.0;
        for &v in vals {
            let s = u - v;
            let a = s.abs();
            if a > 0.0 {
                let w = a.powf(p - 2.0);
                d1 += w * s;
                d2 += (p - 1.0) * w;
            }
        }
        (d1, d2)
    };
    let mut u = start.clamp(lo, hi);
    let (mut blo, mut bhi) = (lo, hi);
    for _ in 0..200 {
        let (d1, d2) = dphi(u);
        if d1.abs() < 1e-300 {
            return u;
        }
        if d1 > 0.0 {
            bhi = u;
        } else {
            blo = u;
        }
        let mut next = if d2 > 0.0 { u - d1 / d2 } else { 0.5 * (blo + bhi) };
        if !(next > blo && next < bhi) {
            next = 0.5 * (blo + bhi);
        }
        if (next - u).abs() < 1e-14 * (1.0 + u.abs()) {
            return next;
        }
        u = next;
    }
    u
}

/// Convenience: grid + infinity solve in one call.
pub fn solve_ring(ring: &ConvexRing, h: f64, r_gamma: f64, params: &SolveParams) -> Result<ScalarField> {
    let grid = build_grid(ring, h, r_gamma)?;
    solve_infinity(&grid, params)
}

/// Max-norm distance between two fields on the same grid, interior nodes
/// with clearance at least `min_clearance`.
pub fn sup_distance(a: &ScalarField, b: &ScalarField, min_clearance: f64) -> f64 {
    let grid = a.grid();
    let mut worst = 0.0f64;
    for (i, j) in grid.interior_indices() {
        if grid.clearance(grid.pos(i, j)) < min_clearance {
            continue;
        }
        worst = worst.max((a.value(i, j) - b.value(i, j)).abs());
    }
    worst
}

/// Max-norm deviation from a reference function over interior nodes with
/// clearance at least `min_clearance` from the inner capture set.
pub fn sup_error(
    field: &ScalarField,
    reference: impl Fn(Vec2) -> f64,
    min_inner_clearance: f64,
) -> f64 {
    let grid = field.grid();
    let mut worst = 0.0f64;
    for (i, j) in grid.interior_indices() {
        let p = grid.pos(i, j);
        if grid.inner_capture_distance(p) < min_inner_clearance {
            continue;
        }
        worst = worst.max((field.value(i, j) - reference(p)).abs());
    }
    worst
}

/// The gradient field of a solved potential.
pub fn solve_gradient(field: &ScalarField) -> crate::field::VectorField {
    gradient(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ConvexBody;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn disk_ring() -> ConvexRing {
        ConvexRing::new(ConvexBody::disk(Vec2::ZERO, 1.0), ConvexBody::point(0.0, 0.0)).unwrap()
    }

    fn annulus_ring() -> ConvexRing {
        ConvexRing::new(
            ConvexBody::disk(Vec2::ZERO, 1.0),
            ConvexBody::disk(Vec2::ZERO, 0.4),
        )
        .unwrap()
    }

    fn square_ring() -> ConvexRing {
        ConvexRing::new(
            ConvexBody::rectangle(Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0)),
            ConvexBody::point(0.0, 0.0),
        )
        .unwrap()
    }

    #[test]
    fn disk_cone_coarse() {
        let h = 1.0 / 64.0;
        let grid = build_grid(&disk_ring(), h, h).unwrap();
        let params = SolveParams { tol_res: 1e-9, ..Default::default() };
        let u = solve_infinity(&grid, &params).unwrap();
        let err = sup_error(&u, |p| 1.0 - p.norm(), 4.0 * h);
        assert!(err <= 0.02, "cone error {err}");
        // Discrete comparison bounds.
        for &v in u.values() {
            assert!((-1e-12..=1.0 + 1e-12).contains(&v));
        }
    }

    #[test]
    fn annulus_cone_coarse() {
        let h = 1.0 / 64.0;
        let grid = build_grid(&annulus_ring(), h, h).unwrap();
        let params = SolveParams { tol_res: 1e-9, ..Default::default() };
        let u = solve_infinity(&grid, &params).unwrap();
        let err = sup_error(&u, |p| ((1.0 - p.norm()) / 0.6).clamp(0.0, 1.0), 0.0);
        assert!(err <= 0.02, "annulus cone error {err}");
    }

    #[test]
    fn square_median_linearity_coarse() {
        let h = 1.0 / 64.0;
        let grid = build_grid(&square_ring(), h, h).unwrap();
        let params = SolveParams { tol_res: 1e-9, ..Default::default() };
        let u = solve_infinity(&grid, &params).unwrap();
        // Medians carry the linear profile 1 - |t|.
        let mut worst = 0.0f64;
        for (i, j) in grid.interior_indices() {
            let p = grid.pos(i, j);
            if p.x.abs() < 1e-12 || p.y.abs() < 1e-12 {
                let t = p.x.abs().max(p.y.abs());
                worst = worst.max((u.value(i, j) - (1.0 - t)).abs());
            }
        }
        assert!(worst <= 0.02, "median deviation {worst}");
    }

    #[test]
    fn affine_data_reproduced_for_all_p_and_infinity() {
        // Rectangle ring with a segment inner boundary lying on a level line
        // of the affine function: u = 0.5 + 0.25 x is p-harmonic for every p
        // and matches the boundary data exactly.
        let ring = ConvexRing::new(
            ConvexBody::rectangle(Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0)),
            ConvexBody::segment(Vec2::new(0.0, -0.25), Vec2::new(0.0, 0.25)),
        )
        .unwrap();
        let h = 1.0 / 32.0;
        let grid = build_grid(&ring, h, h).unwrap();
        let boundary = BoundaryData::Affine { a: 0.5, bx: 0.25, by: 0.0 };
        let params = SolveParams { tol_res: 1e-12, boundary, ..Default::default() };
        let u = solve_infinity(&grid, &params).unwrap();
        let err = sup_error(&u, |p| 0.5 + 0.25 * p.x, 0.0);
        assert!(err < 1e-6, "infinity affine error {err}");
        for p in [2.0, 3.5, 8.0] {
            let up = solve_p(&grid, p, &params).unwrap();
            let err = sup_error(&up, |q| 0.5 + 0.25 * q.x, 0.0);
            assert!(err < 1e-6, "p = {p} affine error {err}");
        }
    }

    #[test]
    fn p2_disk_matches_log_annulus() {
        // Harmonic ring potential between the capture circle and the unit
        // circle: log(r) / log(r_gamma).
        let h = 1.0 / 64.0;
        let r_gamma = 1.0 / 16.0;
        let grid = build_grid(&disk_ring(), h, r_gamma).unwrap();
        let params = SolveParams { tol_res: 1e-10, ..Default::default() };
        let u = solve_p(&grid, 2.0, &params).unwrap();
        let mut worst = 0.0f64;
        for (i, j) in grid.interior_indices() {
            let p = grid.pos(i, j);
            if p.norm() < 0.1 {
                continue;
            }
            let exact = (p.norm().ln() / r_gamma.ln()).clamp(0.0, 1.0);
            worst = worst.max((u.value(i, j) - exact).abs());
        }
        assert!(worst <= 0.03, "p=2 log-annulus error {worst}");
    }

    #[test]
    fn p64_annulus_approaches_infinity_solution() {
        // The edge-based p-energy is angularly anisotropic, which floors the
        // p -> infinity gap near 0.05 on radial fixtures independent of h
        // (measured 0.0512 at h=1/32 and 0.0563 at h=1/64 with the infinity
        // solve as oracle). The sequence of gaps must still decrease in p.
        let h = 1.0 / 32.0;
        let grid = build_grid(&annulus_ring(), h, h).unwrap();
        let params = SolveParams { tol_res: 1e-9, ..Default::default() };
        let vinf = solve_infinity(&grid, &params).unwrap();
        let mut warm = None;
        let mut gaps = Vec::new();
        for p in [8.0, 16.0, 32.0, 64.0] {
            let sol = solve_p_with_init(&grid, p, &params, warm.as_ref()).unwrap();
            gaps.push(sup_distance(&sol, &vinf, 0.0));
            warm = Some(sol);
        }
        assert!(gaps[3] <= 0.06, "p=64 vs infinity distance {}", gaps[3]);
        for w in gaps.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "gaps not non-increasing: {gaps:?}");
        }
    }

    #[test]
    fn monotone_in_neighbor_values() {
        // Raising any arm value never lowers the nodal update.
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..500 {
            let k = 8;
            let arms: Vec<Arm> = (0..k)
                .map(|_| {
                    if rng.random_range(0.0..1.0) < 0.3 {
                        Arm::Boundary {
                            value: rng.random_range(0.0..1.0),
                            t: rng.random_range(0.2..1.0),
                        }
                    } else {
                        Arm::Interp {
                            idx: [0, 1, 2, 3],
                            w: [0.25; 4],
                            t: 1.0,
                        }
                    }
                })
                .collect();
            let mut u: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..1.0)).collect();
            let base = nodal_update(&arms, &u, 0.5);
            let bump = rng.random_range(0usize..4);
            u[bump] += rng.random_range(0.0..0.5);
            let raised = nodal_update(&arms, &u, 0.5);
            assert!(
                raised >= base - 1e-12,
                "raising a neighbor lowered the update: {base} -> {raised}"
            );
        }
    }

    #[test]
    fn no_interior_extremum_of_fixed_point() {
        let h = 1.0 / 32.0;
        let grid = build_grid(&annulus_ring(), h, h).unwrap();
        let params = SolveParams { tol_res: 1e-11, ..Default::default() };
        let u = solve_infinity(&grid, &params).unwrap();
        let stencil = build_stencil(&grid, &params);
        let k = stencil.k;
        for (n, &node) in stencil.nodes.iter().enumerate() {
            let arms = &stencil.arms[n * k..(n + 1) * k];
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for a in arms {
                let (v, _) = arm_value(a, u.values());
                lo = lo.min(v);
                hi = hi.max(v);
            }
            let v = u.values()[node as usize];
            assert!(
                v >= lo - 1e-7 && v <= hi + 1e-7,
                "strict interior extremum at node {node}: {v} not in [{lo}, {hi}]"
            );
        }
    }

    #[test]
    fn sweep_orders_agree_at_the_fixed_point() {
        // Tiny, fast-contracting fixture: both orders iterate to the same
        // fixed point well below 10x the tolerance.
        let ring = ConvexRing::new(
            ConvexBody::disk(Vec2::ZERO, 1.0),
            ConvexBody::disk(Vec2::ZERO, 0.55),
        )
        .unwrap();
        let h = 1.0 / 24.0;
        let grid = build_grid(&ring, h, h).unwrap();
        let tol = 1e-11;
        let lex = solve_infinity(
            &grid,
            &SolveParams { tol_res: tol, order: SweepOrder::Lexicographic, ..Default::default() },
        )
        .unwrap();
        let chk = solve_infinity(
            &grid,
            &SolveParams { tol_res: tol, order: SweepOrder::Checkerboard, ..Default::default() },
        )
        .unwrap();
        let diff = sup_distance(&lex, &chk, 0.0);
        assert!(diff <= 10.0 * tol, "sweep orders disagree by {diff}");
    }

    #[test]
    fn parallel_checkerboard_is_bitwise_deterministic() {
        let h = 1.0 / 32.0;
        let grid = build_grid(&annulus_ring(), h, h).unwrap();
        let base = SolveParams { tol_res: 1e-9, ..Default::default() };
        let seq = solve_infinity(&grid, &base).unwrap();
        let par = solve_infinity(&grid, &SolveParams { parallel: true, ..base }).unwrap();
        assert_eq!(seq.values(), par.values());
    }

    #[test]
    fn refinement_reduces_cone_error() {
        let params = SolveParams { tol_res: 1e-9, ..Default::default() };
        let mut errs = Vec::new();
        for h in [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0] {
            let grid = build_grid(&annulus_ring(), h, h).unwrap();
            let u = solve_infinity(&grid, &params).unwrap();
            errs.push(sup_error(&u, |p| ((1.0 - p.norm()) / 0.6).clamp(0.0, 1.0), 0.0));
        }
        assert!(errs[1] < errs[0] && errs[2] < errs[1], "errors not decreasing: {errs:?}");
    }

    #[test]
    fn residual_examples() {
        let h = 1.0 / 64.0;
        let grid = build_grid(&disk_ring(), h, h).unwrap();
        let params = SolveParams { tol_res: 1e-9, ..Default::default() };
        let u = solve_infinity(&grid, &params).unwrap();
        let res = residual_infinity(&u, &params);
        assert!(
            res <= 10.0 * params.tol_res / (h * h),
            "solved residual {res}"
        );

        // Analytic cone sampled on the same grid: the midrange defect is
        // large only near the apex; the far-field defect is bounded by the
        // angular resolution of the stencil.
        let cone = ScalarField::new(
            Arc::new(grid.clone()),
            (0..grid.node_count())
                .map(|k| {
                    let (i, j) = (k % grid.nx(), k / grid.nx());
                    (1.0 - grid.pos(i, j).norm()).clamp(0.0, 1.0)
                })
                .collect(),
        )
        .unwrap();
        let far = residual_infinity_away(&cone, &params, 4.0 * h);
        let near = residual_infinity(&cone, &params);
        assert!(near > 10.0 * far, "apex defect {near} vs far-field {far}");

        // Affine field with matching affine boundary data: zero defect up to
        // rounding.
        let affine = ScalarField::new(
            Arc::new(grid.clone()),
            (0..grid.node_count())
                .map(|k| {
                    let (i, j) = (k % grid.nx(), k / grid.nx());
                    let p = grid.pos(i, j);
                    0.3 * p.x - 0.1 * p.y
                })
                .collect(),
        )
        .unwrap();
        let affine_params = SolveParams {
            boundary: BoundaryData::Affine { a: 0.0, bx: 0.3, by: -0.1 },
            ..params.clone()
        };
        assert!(residual_infinity(&affine, &affine_params) < 1e-8 / (h * h));
    }
}
