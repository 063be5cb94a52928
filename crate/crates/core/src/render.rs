//! Deterministic SVG figures: boundaries, level curves, streamlines, and
//! merge markers. Element order and 4-decimal coordinates are fixed so the
//! same inputs produce byte-identical files.

use crate::error::Result;
use crate::field::{level_curve, ScalarField};
use crate::flow::{MergeTree, Streamline};
use crate::geometry::ConvexBody;
use crate::vec2::Vec2;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Clone, Debug)]
pub struct RenderSpec {
    /// Canvas size in pixels (square).
    pub canvas: u32,
    /// Level-curve levels, strictly increasing inside (0, 1).
    pub levels: Vec<f64>,
    pub stroke_boundary: String,
    pub stroke_level: String,
    pub stroke_streamline: String,
    pub fill_merge: String,
    pub stroke_gamma: String,
}

impl Default for RenderSpec {
    fn default() -> Self {
        RenderSpec {
            canvas: 800,
            levels: (1..10).map(|k| k as f64 / 10.0).collect(),
            stroke_boundary: "#000000".into(),
            stroke_level: "#b0b0b0".into(),
            stroke_streamline: "#2060c0".into(),
            fill_merge: "#d03030".into(),
            stroke_gamma: "#d08020".into(),
        }
    }
}

impl RenderSpec {
    pub fn validate(&self) -> Result<()> {
        let increasing = self.levels.windows(2).all(|w| w[0] < w[1]);
        let in_range = self.levels.iter().all(|c| *c > 0.0 && *c < 1.0);
        if !increasing || !in_range {
            return Err(crate::error::Error::InvalidBody(
                "render levels must be strictly increasing inside (0, 1)".into(),
            ));
        }
        Ok(())
    }
}

struct Mapper {
    scale: f64,
    offset: Vec2,
    canvas: f64,
}

impl Mapper {
    fn map(&self, p: Vec2) -> (f64, f64) {
        // Flip y so larger coordinates draw upward.
        let x = (p.x - self.offset.x) * self.scale;
        let y = self.canvas - (p.y - self.offset.y) * self.scale;
        (x, y)
    }
}

fn path_from(points: &[Vec2], mapper: &Mapper, close: bool) -> String {
    let mut d = String::new();
    for (k, p) in points.iter().enumerate() {
        let (x, y) = mapper.map(*p);
        let cmd = if k == 0 { 'M' } else { 'L' };
        let _ = write!(d, "{cmd}{x:.4} {y:.4} ");
    }
    if close {
        d.push('Z');
    }
    d.trim_end().to_string()
}

fn body_outline(body: &ConvexBody) -> Vec<Vec2> {
    match body {
        ConvexBody::Polygon { vertices } => vertices.clone(),
        _ => body.boundary_points(256),
    }
}

/// Render the field with optional streamlines and merge markers into an SVG
/// file. Output is byte-identical across runs for identical inputs.
pub fn render_svg(
    field: &ScalarField,
    streamlines: &[Streamline],
    merge_tree: Option<&MergeTree>,
    spec: &RenderSpec,
    path: impl AsRef<Path>,
) -> Result<()> {
    spec.validate()?;
    let grid = field.grid();
    let ring = grid.ring();
    let (bb_min, bb_max) = ring.outer().bounding_box();
    let extent = (bb_max.x - bb_min.x).max(bb_max.y - bb_min.y);
    let margin = 0.05 * extent;
    let canvas = spec.canvas as f64;
    let mapper = Mapper {
        scale: canvas / (extent + 2.0 * margin),
        offset: bb_min - Vec2::new(margin, margin),
        canvas,
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{c}" height="{c}" viewBox="0 0 {c} {c}">"#,
        c = spec.canvas
    );
    let _ = writeln!(
        svg,
        r##"<rect width="{c}" height="{c}" fill="#ffffff"/>"##,
        c = spec.canvas
    );

    // Level curves, ascending.
    for c in &spec.levels {
        if let Ok(lc) = level_curve(field, *c) {
            for lp in &lc.loops {
                let _ = writeln!(
                    svg,
                    r#"<path d="{}" fill="none" stroke="{}" stroke-width="1"/>"#,
                    path_from(lp, &mapper, true),
                    spec.stroke_level
                );
            }
        }
    }

    // Outer boundary.
    let _ = writeln!(
        svg,
        r#"<path d="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
        path_from(&body_outline(ring.outer()), &mapper, true),
        spec.stroke_boundary
    );

    // Inner boundary.
    match ring.inner() {
        ConvexBody::Point { at } => {
            let (x, y) = mapper.map(*at);
            let _ = writeln!(
                svg,
                r#"<circle cx="{x:.4}" cy="{y:.4}" r="3" fill="{}"/>"#,
                spec.stroke_gamma
            );
        }
        ConvexBody::Segment { a, b } => {
            let (xa, ya) = mapper.map(*a);
            let (xb, yb) = mapper.map(*b);
            let _ = writeln!(
                svg,
                r#"<line x1="{xa:.4}" y1="{ya:.4}" x2="{xb:.4}" y2="{yb:.4}" stroke="{}" stroke-width="3"/>"#,
                spec.stroke_gamma
            );
        }
        other => {
            let _ = writeln!(
                svg,
                r#"<path d="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
                path_from(&body_outline(other), &mapper, true),
                spec.stroke_gamma
            );
        }
    }

    // Streamlines in input order.
    for s in streamlines {
        let _ = writeln!(
            svg,
            r#"<path d="{}" fill="none" stroke="{}" stroke-width="1"/>"#,
            path_from(&s.vertices, &mapper, false),
            spec.stroke_streamline
        );
    }

    // Merge markers.
    if let Some(tree) = merge_tree {
        for e in &tree.edges {
            let (x, y) = mapper.map(e.location);
            let _ = writeln!(
                svg,
                r#"<circle cx="{x:.4}" cy="{y:.4}" r="2.5" fill="{}"/>"#,
                spec.fill_merge
            );
        }
    }

    let _ = writeln!(svg, "</svg>");
    std::fs::write(path, svg)?;
    Ok(())
}
