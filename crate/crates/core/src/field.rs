//! Uniform grids over a convex ring, scalar and vector fields on them,
//! gradient reconstruction, bilinear interpolation, and level curves.
//!
//! Node classes: interior nodes carry unknowns; outer-boundary nodes hold the
//! value 0 and sit on or just outside the outer boundary; inner-boundary nodes
//! hold the value 1 and sit in the inner body or within the capture radius of
//! a point/segment inner boundary; exterior nodes are unused.

use crate::error::{Error, Result};
use crate::geometry::{ConvexBody, ConvexRing};
use crate::vec2::Vec2;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum NodeClass {
    Interior,
    OuterBc,
    InnerBc,
    Exterior,
}

impl NodeClass {
    pub fn tag(self) -> char {
        match self {
            NodeClass::Interior => 'I',
            NodeClass::OuterBc => 'O',
            NodeClass::InnerBc => 'G',
            NodeClass::Exterior => 'E',
        }
    }

    pub fn from_tag(c: char) -> Option<NodeClass> {
        match c {
            'I' => Some(NodeClass::Interior),
            'O' => Some(NodeClass::OuterBc),
            'G' => Some(NodeClass::InnerBc),
            'E' => Some(NodeClass::Exterior),
            _ => None,
        }
    }
}

/// Uniform node-centered grid covering the outer body padded by two cells.
///
/// The ring is stored with the grid: solver stencils clip rays against the
/// exact boundaries, and tracing needs inner-set distances.
#[derive(Clone, Debug)]
pub struct Grid {
    ring: ConvexRing,
    origin: Vec2,
    h: f64,
    r_gamma: f64,
    nx: usize,
    ny: usize,
    class: Vec<NodeClass>,
}

/// Outer band width in cells: nodes outside the outer boundary but within
/// this many spacings stay usable so every cell intersecting the domain has
/// non-exterior corners.
const OUTER_BAND: f64 = 1.5;

/// Classified grid for the ring. A point/segment inner boundary is captured
/// by marking all nodes within `r_gamma` (at least one spacing) as
/// inner-boundary nodes; an inner body with interior captures the nodes it
/// contains.
pub fn build_grid(ring: &ConvexRing, h: f64, r_gamma: f64) -> Result<Grid> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::TooCoarse("spacing must be positive".into()));
    }
    if h >= ring.separation() / 8.0 {
        return Err(Error::TooCoarse(format!(
            "h = {h} must be below separation/8 = {}",
            ring.separation() / 8.0
        )));
    }
    let r_cap = capture_radius(ring.inner(), h, r_gamma);
    let (bb_min, bb_max) = ring.outer().bounding_box();
    let center = (bb_min + bb_max) * 0.5;
    // Symmetric node layout around the domain center: symmetric fixtures get
    // exactly symmetric grids.
    let half = (bb_max - bb_min) * 0.5 + Vec2::new(2.0 * h, 2.0 * h);
    let n_half_x = (half.x / h).ceil() as usize;
    let n_half_y = (half.y / h).ceil() as usize;
    let origin = center - Vec2::new(n_half_x as f64 * h, n_half_y as f64 * h);
    let nx = 2 * n_half_x + 1;
    let ny = 2 * n_half_y + 1;

    let mut class = vec![NodeClass::Exterior; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let p = origin + Vec2::new(i as f64 * h, j as f64 * h);
            let cls = if inner_captured(ring.inner(), p, r_cap) {
                NodeClass::InnerBc
            } else if ring.outer().contains(p) {
                if ring.outer().boundary_distance(p) > 1e-12 {
                    NodeClass::Interior
                } else {
                    NodeClass::OuterBc
                }
            } else if ring.outer().boundary_distance(p) <= OUTER_BAND * h {
                NodeClass::OuterBc
            } else {
                NodeClass::Exterior
            };
            class[j * nx + i] = cls;
        }
    }

    let grid = Grid {
        ring: ring.clone(),
        origin,
        h,
        r_gamma: r_cap,
        nx,
        ny,
        class,
    };
    grid.check_connected()?;
    Ok(grid)
}

fn capture_radius(inner: &ConvexBody, h: f64, r_gamma: f64) -> f64 {
    if inner.has_interior() {
        0.0
    } else {
        r_gamma.max(h)
    }
}

fn inner_captured(inner: &ConvexBody, p: Vec2, r_cap: f64) -> bool {
    if inner.has_interior() {
        inner.contains(p)
    } else {
        inner.set_distance(p) <= r_cap
    }
}

impl Grid {
    /// Reassemble a grid from stored parts (snapshot loading).
    pub(crate) fn from_parts(
        ring: ConvexRing,
        origin: Vec2,
        h: f64,
        r_gamma: f64,
        nx: usize,
        ny: usize,
        class: Vec<NodeClass>,
    ) -> Result<Grid> {
        if class.len() != nx * ny {
            return Err(Error::Parse {
                context: "grid".into(),
                msg: format!("expected {} node classes, found {}", nx * ny, class.len()),
            });
        }
        Ok(Grid { ring, origin, h, r_gamma, nx, ny, class })
    }

    pub fn ring(&self) -> &ConvexRing {
        &self.ring
    }

    pub fn origin(&self) -> Vec2 {
        self.origin
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Effective capture radius of the inner boundary (zero when the inner
    /// body has interior).
    pub fn r_gamma(&self) -> f64 {
        self.r_gamma
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn node_count(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn pos(&self, i: usize, j: usize) -> Vec2 {
        self.origin + Vec2::new(i as f64 * self.h, j as f64 * self.h)
    }

    #[inline]
    pub fn class(&self, i: usize, j: usize) -> NodeClass {
        self.class[self.idx(i, j)]
    }

    pub fn classes(&self) -> &[NodeClass] {
        &self.class
    }

    /// Boundary value carried by a node class, if any.
    pub fn bc_value(&self, cls: NodeClass) -> Option<f64> {
        match cls {
            NodeClass::OuterBc => Some(0.0),
            NodeClass::InnerBc => Some(1.0),
            _ => None,
        }
    }

    /// Distance to the inner capture set (the inner body inflated by the
    /// capture radius for points/segments).
    pub fn inner_capture_distance(&self, x: Vec2) -> f64 {
        (self.ring.inner().set_distance(x) - self.r_gamma).max(0.0)
    }

    /// Distance to the nearer of outer boundary and inner capture set.
    pub fn clearance(&self, x: Vec2) -> f64 {
        self.ring
            .outer()
            .boundary_distance(x)
            .min(self.inner_capture_distance(x))
    }

    pub fn interior_indices(&self) -> Vec<(usize, usize)> {
        let mut v = Vec::new();
        for j in 0..self.ny {
            for i in 0..self.nx {
                if self.class(i, j) == NodeClass::Interior {
                    v.push((i, j));
                }
            }
        }
        v
    }

    fn check_connected(&self) -> Result<()> {
        let interior = self.interior_indices();
        if interior.is_empty() {
            return Err(Error::TooCoarse("no interior nodes".into()));
        }
        let mut seen = vec![false; self.node_count()];
        let mut stack = vec![interior[0]];
        seen[self.idx(interior[0].0, interior[0].1)] = true;
        let mut count = 1usize;
        while let Some((i, j)) = stack.pop() {
            let push = |ii: usize, jj: usize, stack: &mut Vec<(usize, usize)>, seen: &mut Vec<bool>, count: &mut usize| {
                let id = self.idx(ii, jj);
                if !seen[id] && self.class(ii, jj) == NodeClass::Interior {
                    seen[id] = true;
                    *count += 1;
                    stack.push((ii, jj));
                }
            };
            if i > 0 {
                push(i - 1, j, &mut stack, &mut seen, &mut count);
            }
            if i + 1 < self.nx {
                push(i + 1, j, &mut stack, &mut seen, &mut count);
            }
            if j > 0 {
                push(i, j - 1, &mut stack, &mut seen, &mut count);
            }
            if j + 1 < self.ny {
                push(i, j + 1, &mut stack, &mut seen, &mut count);
            }
        }
        if count != interior.len() {
            return Err(Error::TooCoarse(format!(
                "interior disconnected: {} of {} nodes reachable",
                count,
                interior.len()
            )));
        }
        Ok(())
    }

    /// Cell index containing `x`, clamped to valid cells.
    fn locate_cell(&self, x: Vec2) -> (usize, usize, f64, f64) {
        let fx = (x.x - self.origin.x) / self.h;
        let fy = (x.y - self.origin.y) / self.h;
        let i = (fx.floor() as isize).clamp(0, self.nx as isize - 2) as usize;
        let j = (fy.floor() as isize).clamp(0, self.ny as isize - 2) as usize;
        (i, j, fx - i as f64, fy - j as f64)
    }

    fn cell_usable(&self, i: usize, j: usize, need_interior: bool) -> bool {
        let ok = |c: NodeClass| {
            if need_interior {
                c == NodeClass::Interior
            } else {
                c != NodeClass::Exterior
            }
        };
        ok(self.class(i, j))
            && ok(self.class(i + 1, j))
            && ok(self.class(i, j + 1))
            && ok(self.class(i + 1, j + 1))
    }

    /// Nearest usable cell to `(i, j)` within a fixed search radius, by ring
    /// scan. Returns the cell and the fractional coordinates of `x` relative
    /// to it (possibly outside `[0, 1]`: the bilinear extension is evaluated).
    fn nearest_usable_cell(
        &self,
        x: Vec2,
        i0: usize,
        j0: usize,
        need_interior: bool,
    ) -> Option<(usize, usize, f64, f64)> {
        const RADIUS: isize = 4;
        for r in 0..=RADIUS {
            let mut best: Option<(f64, usize, usize)> = None;
            for dj in -r..=r {
                for di in -r..=r {
                    if di.abs().max(dj.abs()) != r {
                        continue;
                    }
                    let ii = i0 as isize + di;
                    let jj = j0 as isize + dj;
                    if ii < 0 || jj < 0 || ii + 1 >= self.nx as isize || jj + 1 >= self.ny as isize
                    {
                        continue;
                    }
                    let (iu, ju) = (ii as usize, jj as usize);
                    if self.cell_usable(iu, ju, need_interior) {
                        let cc = self.pos(iu, ju) + Vec2::new(self.h * 0.5, self.h * 0.5);
                        let d = cc.dist(x);
                        if best.map(|(bd, _, _)| d < bd).unwrap_or(true) {
                            best = Some((d, iu, ju));
                        }
                    }
                }
            }
            if let Some((_, iu, ju)) = best {
                let fx = (x.x - self.origin.x) / self.h - iu as f64;
                let fy = (x.y - self.origin.y) / self.h - ju as f64;
                return Some((iu, ju, fx, fy));
            }
        }
        None
    }
}

/// Grid-sampled scalar field. Boundary nodes hold their boundary value.
#[derive(Clone, Debug)]
pub struct ScalarField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::Parse {
                context: "field".into(),
                msg: format!(
                    "expected {} values, found {}",
                    grid.node_count(),
                    values.len()
                ),
            });
        }
        Ok(ScalarField { grid, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn grid_arc(&self) -> Arc<Grid> {
        Arc::clone(&self.grid)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    /// All node values finite?
    pub fn check_finite(&self) -> Result<()> {
        for (k, v) in self.values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteField { index: k });
            }
        }
        Ok(())
    }

    /// Bilinear interpolation on the containing cell; cells touching
    /// exterior nodes fall back to the bilinear extension of the nearest
    /// fully usable cell.
    pub fn sample(&self, x: Vec2) -> Result<f64> {
        let g = &self.grid;
        let (i, j, fx, fy) = g.locate_cell(x);
        let (i, j, fx, fy) = if g.cell_usable(i, j, false) {
            (i, j, fx, fy)
        } else {
            g.nearest_usable_cell(x, i, j, false)
                .ok_or(Error::OutOfDomain { x: x.x, y: x.y })?
        };
        Ok(self.bilinear(i, j, fx, fy))
    }

    #[inline]
    fn bilinear(&self, i: usize, j: usize, fx: f64, fy: f64) -> f64 {
        let v00 = self.value(i, j);
        let v10 = self.value(i + 1, j);
        let v01 = self.value(i, j + 1);
        let v11 = self.value(i + 1, j + 1);
        v00 * (1.0 - fx) * (1.0 - fy)
            + v10 * fx * (1.0 - fy)
            + v01 * (1.0 - fx) * fy
            + v11 * fx * fy
    }
}

/// Gradient samples at interior nodes. Non-interior nodes hold NaN.
#[derive(Clone, Debug)]
pub struct VectorField {
    grid: Arc<Grid>,
    gx: Vec<f64>,
    gy: Vec<f64>,
}

impl VectorField {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Vec2 {
        let k = self.grid.idx(i, j);
        Vec2::new(self.gx[k], self.gy[k])
    }

    /// Bilinear gradient interpolation; cells with non-interior corners use
    /// the nearest cell whose four corners are interior.
    pub fn sample(&self, x: Vec2) -> Result<Vec2> {
        let g = &self.grid;
        let (i, j, fx, fy) = g.locate_cell(x);
        let (i, j, fx, fy) = if g.cell_usable(i, j, true) {
            (i, j, fx, fy)
        } else {
            g.nearest_usable_cell(x, i, j, true)
                .ok_or(Error::OutOfDomain { x: x.x, y: x.y })?
        };
        let lerp2 = |a: f64, b: f64, c: f64, d: f64| {
            a * (1.0 - fx) * (1.0 - fy) + b * fx * (1.0 - fy) + c * (1.0 - fx) * fy + d * fx * fy
        };
        let k00 = g.idx(i, j);
        let k10 = g.idx(i + 1, j);
        let k01 = g.idx(i, j + 1);
        let k11 = g.idx(i + 1, j + 1);
        Ok(Vec2::new(
            lerp2(self.gx[k00], self.gx[k10], self.gx[k01], self.gx[k11]),
            lerp2(self.gy[k00], self.gy[k10], self.gy[k01], self.gy[k11]),
        ))
    }
}

/// Gradient reconstruction for ring potentials: central differences at
/// interior nodes, with arms that cross a boundary clipped at the exact
/// crossing point carrying the boundary value (0 on the outer boundary, 1 at
/// the inner capture set). A zero-valued node lying outside the outer
/// boundary would otherwise flatten the reconstruction by O(1) on the last
/// interior ring. Non-uniform arms use the second-order 3-point formula.
pub fn gradient(field: &ScalarField) -> VectorField {
    let g = field.grid();
    let (nx, ny, h) = (g.nx(), g.ny(), g.h());
    let ring = g.ring();
    let r_cap = g.r_gamma();
    let mut gx = vec![f64::NAN; g.node_count()];
    let mut gy = vec![f64::NAN; g.node_count()];

    // Arm toward `dir`: (distance, value).
    let arm = |x: Vec2, i: isize, j: isize, dir: Vec2| -> (f64, f64) {
        let t_out = ring.outer().ray_exit(x, dir).unwrap_or(f64::INFINITY);
        let t_in = ring
            .inner()
            .ray_contact(x, dir, r_cap, h)
            .unwrap_or(f64::INFINITY);
        let floor = 1e-9 * h;
        if t_out <= h && t_out <= t_in {
            return (t_out.max(floor), 0.0);
        }
        if t_in <= h {
            return (t_in.max(floor), 1.0);
        }
        let inside = i >= 0 && j >= 0 && i < nx as isize && j < ny as isize;
        if inside && g.class(i as usize, j as usize) != NodeClass::Exterior {
            (h, field.value(i as usize, j as usize))
        } else {
            // No usable neighbor and no crossing found (grazing ray):
            // degenerate one-sided arm of zero length handled by caller.
            (f64::INFINITY, 0.0)
        }
    };

    for j in 0..ny {
        for i in 0..nx {
            if g.class(i, j) != NodeClass::Interior {
                continue;
            }
            let k = g.idx(i, j);
            let x = g.pos(i, j);
            let u0 = field.value(i, j);
            let (ii, jj) = (i as isize, j as isize);
            gx[k] = axis_derivative(
                u0,
                arm(x, ii - 1, jj, Vec2::new(-1.0, 0.0)),
                arm(x, ii + 1, jj, Vec2::new(1.0, 0.0)),
            );
            gy[k] = axis_derivative(
                u0,
                arm(x, ii, jj - 1, Vec2::new(0.0, -1.0)),
                arm(x, ii, jj + 1, Vec2::new(0.0, 1.0)),
            );
        }
    }
    VectorField { grid: field.grid_arc(), gx, gy }
}

/// Second-order derivative estimate from two arms of lengths `tm`, `tp` and
/// values `vm`, `vp` around the center value `u0`.
fn axis_derivative(u0: f64, minus: (f64, f64), plus: (f64, f64)) -> f64 {
    let (tm, vm) = minus;
    let (tp, vp) = plus;
    match (tm.is_finite(), tp.is_finite()) {
        (true, true) => {
            (tm * tm * (vp - u0) - tp * tp * (vm - u0)) / (tp * tm * (tp + tm))
        }
        (true, false) => (u0 - vm) / tm,
        (false, true) => (vp - u0) / tp,
        (false, false) => 0.0,
    }
}

/// A level set contour: one or more closed loops, counterclockwise.
#[derive(Clone, Debug)]
pub struct LevelCurve {
    pub level: f64,
    pub loops: Vec<Vec<Vec2>>,
}

impl LevelCurve {
    /// Vertices of the longest loop.
    pub fn main_loop(&self) -> &[Vec2] {
        self.loops
            .iter()
            .max_by(|a, b| a.len().cmp(&b.len()))
            .map(|v| v.as_slice())
            .expect("level curve has at least one loop")
    }
}

/// Marching-squares contour of `field` at level `c`, stitched into closed
/// loops with vertices ordered counterclockwise.
pub fn level_curve(field: &ScalarField, c: f64) -> Result<LevelCurve> {
    let g = field.grid();
    let (nx, ny) = (g.nx(), g.ny());
    // Crossing points live on grid edges; key them by (node index, axis).
    #[derive(Clone, Copy, PartialEq, Eq, Hash)]
    struct EdgeKey {
        node: usize,
        horizontal: bool,
    }
    let mut crossing: std::collections::HashMap<EdgeKey, Vec2> = std::collections::HashMap::new();
    let mut links: std::collections::HashMap<EdgeKey, Vec<EdgeKey>> =
        std::collections::HashMap::new();

    let edge_point = |i: usize, j: usize, horizontal: bool| -> Option<(EdgeKey, Vec2)> {
        let (i2, j2) = if horizontal { (i + 1, j) } else { (i, j + 1) };
        if g.class(i, j) == NodeClass::Exterior || g.class(i2, j2) == NodeClass::Exterior {
            return None;
        }
        let v0 = field.value(i, j) - c;
        let v1 = field.value(i2, j2) - c;
        if (v0 < 0.0) == (v1 < 0.0) {
            return None;
        }
        let t = v0 / (v0 - v1);
        let p = g.pos(i, j).lerp(g.pos(i2, j2), t);
        Some((EdgeKey { node: g.idx(i, j), horizontal }, p))
    };

    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            if !g.cell_usable(i, j, false) {
                continue;
            }
            let mut cuts: Vec<(EdgeKey, Vec2)> = Vec::new();
            if let Some(e) = edge_point(i, j, true) {
                cuts.push(e);
            }
            if let Some(e) = edge_point(i, j + 1, true) {
                cuts.push(e);
            }
            if let Some(e) = edge_point(i, j, false) {
                cuts.push(e);
            }
            if let Some(e) = edge_point(i + 1, j, false) {
                cuts.push(e);
            }
            match cuts.len() {
                2 => {
                    let (a, pa) = cuts[0];
                    let (b, pb) = cuts[1];
                    crossing.insert(a, pa);
                    crossing.insert(b, pb);
                    links.entry(a).or_default().push(b);
                    links.entry(b).or_default().push(a);
                }
                4 => {
                    // Saddle cell: split by the sign of the center average.
                    let center = 0.25
                        * (field.value(i, j)
                            + field.value(i + 1, j)
                            + field.value(i, j + 1)
                            + field.value(i + 1, j + 1))
                        - c;
                    // cuts order: bottom, top, left, right.
                    let (bot, top, left, right) = (cuts[0], cuts[1], cuts[2], cuts[3]);
                    let corner = field.value(i, j) - c;
                    let pairs = if (center < 0.0) == (corner < 0.0) {
                        [(bot, right), (top, left)]
                    } else {
                        [(bot, left), (top, right)]
                    };
                    for (a, b) in pairs {
                        crossing.insert(a.0, a.1);
                        crossing.insert(b.0, b.1);
                        links.entry(a.0).or_default().push(b.0);
                        links.entry(b.0).or_default().push(a.0);
                    }
                }
                _ => {}
            }
        }
    }

    if crossing.is_empty() {
        return Err(Error::EmptyLevel(c));
    }

    // Walk the adjacency into closed loops.
    let mut visited: std::collections::HashSet<EdgeKey> = std::collections::HashSet::new();
    let mut start_keys: Vec<EdgeKey> = crossing.keys().copied().collect();
    start_keys.sort_by_key(|k| (k.node, k.horizontal));
    let mut loops = Vec::new();
    for start in start_keys {
        if visited.contains(&start) {
            continue;
        }
        let mut path = vec![start];
        visited.insert(start);
        let mut prev: Option<EdgeKey> = None;
        let mut cur = start;
        loop {
            let nexts = match links.get(&cur) {
                Some(n) => n,
                None => break,
            };
            let next = nexts.iter().find(|&&k| Some(k) != prev && !visited.contains(&k));
            match next {
                Some(&k) => {
                    visited.insert(k);
                    path.push(k);
                    prev = Some(cur);
                    cur = k;
                }
                None => break,
            }
        }
        if path.len() >= 3 {
            let mut pts: Vec<Vec2> = path.iter().map(|k| crossing[k]).collect();
            if crate::vec2::polygon_area(&pts) < 0.0 {
                pts.reverse();
            }
            loops.push(pts);
        }
    }
    if loops.is_empty() {
        return Err(Error::EmptyLevel(c));
    }
    Ok(LevelCurve { level: c, loops })
}

/// Maximal distance from the polyline's vertices to the boundary of their
/// convex hull; zero for convex curves.
pub fn convexity_defect(vertices: &[Vec2]) -> f64 {
    if vertices.len() < 4 {
        return 0.0;
    }
    let hull = convex_hull(vertices);
    if hull.len() < 3 {
        return 0.0;
    }
    let mut worst = 0.0f64;
    for v in vertices {
        let mut d = f64::INFINITY;
        for i in 0..hull.len() {
            let a = hull[i];
            let b = hull[(i + 1) % hull.len()];
            d = d.min(crate::vec2::dist_to_segment(*v, a, b));
        }
        worst = worst.max(d);
    }
    worst
}

/// Monotone-chain convex hull (counterclockwise, no duplicate endpoint).
pub fn convex_hull(points: &[Vec2]) -> Vec<Vec2> {
    let mut pts: Vec<Vec2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup_by(|a, b| a.dist(*b) < 1e-15);
    let n = pts.len();
    if n < 3 {
        return pts;
    }
    let build = |iter: &mut dyn Iterator<Item = Vec2>| -> Vec<Vec2> {
        let mut chain: Vec<Vec2> = Vec::new();
        for p in iter {
            while chain.len() >= 2 {
                let a = chain[chain.len() - 2];
                let b = chain[chain.len() - 1];
                if (b - a).cross(p - a) <= 0.0 {
                    chain.pop();
                } else {
                    break;
                }
            }
            chain.push(p);
        }
        chain
    };
    let mut lower = build(&mut pts.iter().copied());
    let mut upper = build(&mut pts.iter().rev().copied());
    lower.pop();
    upper.pop();
    lower.append(&mut upper);
    lower
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ConvexBody, ConvexRing};

    fn disk_ring() -> ConvexRing {
        ConvexRing::new(ConvexBody::disk(Vec2::ZERO, 1.0), ConvexBody::point(0.0, 0.0)).unwrap()
    }

    fn square_ring() -> ConvexRing {
        ConvexRing::new(
            ConvexBody::rectangle(Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0)),
            ConvexBody::point(0.0, 0.0),
        )
        .unwrap()
    }

    fn annulus_ring() -> ConvexRing {
        ConvexRing::new(
            ConvexBody::disk(Vec2::ZERO, 1.0),
            ConvexBody::disk(Vec2::ZERO, 0.4),
        )
        .unwrap()
    }

    /// Analytic cone field sampled on the grid of `ring`: a + b * dist-like
    /// profile given per node position.
    fn sampled(grid: Arc<Grid>, f: impl Fn(Vec2) -> f64) -> ScalarField {
        let values = (0..grid.node_count())
            .map(|k| {
                let (i, j) = (k % grid.nx(), k / grid.nx());
                f(grid.pos(i, j))
            })
            .collect();
        ScalarField::new(grid, values).unwrap()
    }

    #[test]
    fn build_grid_disk_capture() {
        let h = 1.0 / 64.0;
        let g = build_grid(&disk_ring(), h, h).unwrap();
        for j in 0..g.ny() {
            for i in 0..g.nx() {
                let p = g.pos(i, j);
                match g.class(i, j) {
                    NodeClass::InnerBc => assert!(p.norm() <= h + 1e-12),
                    NodeClass::Interior => {
                        assert!(p.norm() < 1.0 && p.norm() > h - 1e-12)
                    }
                    _ => {}
                }
            }
        }
    }

    #[test]
    fn build_grid_square_outer_band() {
        let h = 1.0 / 64.0;
        let g = build_grid(&square_ring(), h, h).unwrap();
        for j in 0..g.ny() {
            for i in 0..g.nx() {
                let p = g.pos(i, j);
                if g.class(i, j) == NodeClass::OuterBc {
                    let outside = !square_ring().outer().contains(p)
                        || square_ring().outer().boundary_distance(p) <= 1e-12;
                    assert!(outside, "outer bc node {p:?} strictly inside");
                    assert!(square_ring().outer().boundary_distance(p) <= OUTER_BAND * h + 1e-12);
                }
            }
        }
    }

    #[test]
    fn build_grid_annulus_inner_nodes() {
        let h = 1.0 / 64.0;
        let g = build_grid(&annulus_ring(), h, h).unwrap();
        for j in 0..g.ny() {
            for i in 0..g.nx() {
                let p = g.pos(i, j);
                if g.class(i, j) == NodeClass::InnerBc {
                    assert!(p.norm() <= 0.4 + 1e-12);
                }
                if p.norm() <= 0.4 {
                    assert_eq!(g.class(i, j), NodeClass::InnerBc);
                }
            }
        }
    }

    #[test]
    fn too_coarse_is_rejected() {
        let err = build_grid(&disk_ring(), 0.2, 0.2);
        assert!(matches!(err, Err(Error::TooCoarse(_))));
    }

    #[test]
    fn interpolation_reproduces_nodes_and_bilinear_midpoint() {
        let h = 1.0 / 32.0;
        let g = Arc::new(build_grid(&disk_ring(), h, h).unwrap());
        let f = sampled(Arc::clone(&g), |p| (1.0 - p.norm()).max(0.0).min(1.0));
        // Node reproduction.
        for j in 0..g.ny() {
            for i in 0..g.nx() {
                if g.class(i, j) != NodeClass::Exterior && g.cell_ok_for_node(i, j) {
                    let p = g.pos(i, j);
                    assert!(
                        (f.sample(p).unwrap() - f.value(i, j)).abs() < 1e-12,
                        "node ({i},{j})"
                    );
                }
            }
        }
        // Cone midpoint example.
        assert!((f.sample(Vec2::new(0.5, 0.0)).unwrap() - 0.5).abs() < 1e-3);
    }

    impl Grid {
        /// Test helper: node participates in at least one fully usable cell.
        fn cell_ok_for_node(&self, i: usize, j: usize) -> bool {
            let mut ok = false;
            for dj in 0..2usize {
                for di in 0..2usize {
                    if i >= di && j >= dj && i - di + 1 < self.nx && j - dj + 1 < self.ny {
                        ok |= self.cell_usable(i - di, j - dj, false);
                    }
                }
            }
            ok
        }
    }

    #[test]
    fn gradient_of_affine_is_exact_at_full_stencils() {
        let h = 1.0 / 32.0;
        let g = Arc::new(build_grid(&square_ring(), h, h).unwrap());
        let f = sampled(Arc::clone(&g), |p| 0.3 + 0.25 * p.x - 0.125 * p.y);
        let vf = gradient(&f);
        for (i, j) in g.interior_indices() {
            // Full stencil: no arm clipped at a boundary.
            if g.clearance(g.pos(i, j)) <= 1.5 * h {
                continue;
            }
            let grad = vf.at(i, j);
            assert!(
                (grad.x - 0.25).abs() < 1e-10 && (grad.y + 0.125).abs() < 1e-10,
                "node ({i},{j}) grad {grad:?}"
            );
        }
    }

    #[test]
    fn gradient_of_cone_is_radial() {
        let h = 1.0 / 64.0;
        let g = Arc::new(build_grid(&disk_ring(), h, h).unwrap());
        let f = sampled(Arc::clone(&g), |p| 1.0 - p.norm());
        let vf = gradient(&f);
        for (i, j) in g.interior_indices() {
            let p = g.pos(i, j);
            if p.norm() < 6.0 * h || p.norm() > 1.0 - 3.0 * h {
                continue;
            }
            let grad = vf.at(i, j);
            let expected = -p.normalized();
            assert!(
                grad.dist(expected) < 10.0 * h * h / p.norm().min(1.0),
                "at {p:?}: {grad:?} vs {expected:?}"
            );
        }
    }

    #[test]
    fn gradient_of_constant_is_zero_at_full_stencils() {
        let h = 1.0 / 32.0;
        let g = Arc::new(build_grid(&square_ring(), h, h).unwrap());
        let f = sampled(Arc::clone(&g), |_| 0.5);
        let vf = gradient(&f);
        for (i, j) in g.interior_indices() {
            if g.clearance(g.pos(i, j)) <= 1.5 * h {
                continue;
            }
            assert_eq!(vf.at(i, j), Vec2::ZERO);
        }
    }

    #[test]
    fn annulus_cone_gradient_magnitude() {
        let h = 1.0 / 64.0;
        let g = Arc::new(build_grid(&annulus_ring(), h, h).unwrap());
        let f = sampled(Arc::clone(&g), |p| {
            ((1.0 - p.norm()) / 0.6).clamp(0.0, 1.0)
        });
        let vf = gradient(&f);
        for (i, j) in g.interior_indices() {
            let p = g.pos(i, j);
            if p.norm() < 0.4 + 3.0 * h || p.norm() > 1.0 - 3.0 * h {
                continue;
            }
            let speed = vf.at(i, j).norm();
            assert!(
                (speed - 1.0 / 0.6).abs() < 20.0 * h * h,
                "speed {speed} at {p:?}"
            );
        }
    }

    #[test]
    fn level_curve_of_cone_is_a_circle() {
        let h = 1.0 / 64.0;
        let g = Arc::new(build_grid(&disk_ring(), h, h).unwrap());
        let f = sampled(Arc::clone(&g), |p| (1.0 - p.norm()).clamp(0.0, 1.0));
        let lc = level_curve(&f, 0.5).unwrap();
        let main = lc.main_loop();
        assert!(main.len() > 30);
        for v in main {
            assert!((v.norm() - 0.5).abs() < h, "vertex {v:?}");
            assert!((f.sample(*v).unwrap() - 0.5).abs() < 1e-9);
        }
        assert!(convexity_defect(main) <= 2.0 * h);
    }

    #[test]
    fn level_curve_of_annulus_cone() {
        let h = 1.0 / 64.0;
        let g = Arc::new(build_grid(&annulus_ring(), h, h).unwrap());
        let f = sampled(Arc::clone(&g), |p| {
            ((1.0 - p.norm()) / 0.6).clamp(0.0, 1.0)
        });
        let lc = level_curve(&f, 0.5).unwrap();
        for v in lc.main_loop() {
            assert!((v.norm() - 0.7).abs() < h, "vertex {v:?}");
        }
    }

    #[test]
    fn empty_level_is_an_error() {
        let h = 1.0 / 32.0;
        let g = Arc::new(build_grid(&disk_ring(), h, h).unwrap());
        let f = sampled(Arc::clone(&g), |_| 0.5);
        assert!(matches!(level_curve(&f, 0.25), Err(Error::EmptyLevel(_))));
    }

    #[test]
    fn convexity_defect_examples() {
        let circle: Vec<Vec2> = (0..100)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / 100.0;
                Vec2::new(t.cos(), t.sin())
            })
            .collect();
        assert!(convexity_defect(&circle) < 1e-9);

        let square = vec![
            Vec2::new(-1.0, -1.0),
            Vec2::new(1.0, -1.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(-1.0, 1.0),
        ];
        assert!(convexity_defect(&square) < 1e-12);

        let star: Vec<Vec2> = (0..10)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / 10.0;
                let r = if i % 2 == 0 { 1.0 } else { 0.4 };
                Vec2::new(r * t.cos(), r * t.sin())
            })
            .collect();
        assert!(convexity_defect(&star) > 0.1);
    }
}
