//! File formats: domain specs (JSON), field snapshots (text), streamline
//! sets (CSV), merge trees and verification reports (JSON).
//!
//! Every format carries a `format_version` tag. Field values are written with
//! 17 significant digits, which round-trips IEEE doubles bit-exactly; domain
//! geometry echoes through serde_json losslessly.

use crate::checks::Verdict;
use crate::error::{Error, Result};
use crate::field::{Grid, NodeClass, ScalarField};
use crate::flow::{ClPoint, MergeTree, Streamline, Termination};
use crate::geometry::{ConvexBody, ConvexRing};
use crate::vec2::Vec2;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct DomainFile {
    format_version: u32,
    outer: ConvexBody,
    inner: ConvexBody,
}

/// Load a convex ring from a JSON domain spec.
pub fn load_domain(path: impl AsRef<Path>) -> Result<ConvexRing> {
    let text = std::fs::read_to_string(&path)?;
    parse_domain(&text)
}

pub fn parse_domain(text: &str) -> Result<ConvexRing> {
    let dom: DomainFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        context: format!("domain line {} col {}", e.line(), e.column()),
        msg: e.to_string(),
    })?;
    if dom.format_version != FORMAT_VERSION {
        return Err(Error::VersionMismatch { found: dom.format_version.to_string() });
    }
    ConvexRing::new(dom.outer, dom.inner)
}

/// Write a convex ring as a JSON domain spec.
pub fn save_domain(path: impl AsRef<Path>, ring: &ConvexRing) -> Result<()> {
    let dom = DomainFile {
        format_version: FORMAT_VERSION,
        outer: ring.outer().clone(),
        inner: ring.inner().clone(),
    };
    let mut text = serde_json::to_string_pretty(&dom).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Field snapshot layout:
/// ```text
/// ringflow-field 1
/// domain <single-line JSON>
/// r_gamma <g17>
/// nx ny h ox oy        (h, ox, oy at 17 significant digits)
/// classes legend: I interior, O outer boundary, G inner boundary, E exterior
/// <ny rows of nx class tags, row 0 first>
/// <ny rows of nx values, 17 significant digits>
/// ```
pub fn save_field(path: impl AsRef<Path>, field: &ScalarField) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    let grid = field.grid();
    writeln!(w, "ringflow-field {FORMAT_VERSION}")?;
    let dom = DomainFile {
        format_version: FORMAT_VERSION,
        outer: grid.ring().outer().clone(),
        inner: grid.ring().inner().clone(),
    };
    let dom_line = serde_json::to_string(&dom).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(w, "domain {dom_line}")?;
    writeln!(w, "r_gamma {}", fmt_f64(grid.r_gamma()))?;
    writeln!(
        w,
        "{} {} {} {} {}",
        grid.nx(),
        grid.ny(),
        fmt_f64(grid.h()),
        fmt_f64(grid.origin().x),
        fmt_f64(grid.origin().y)
    )?;
    writeln!(w, "classes I=interior O=outer_bc G=inner_bc E=exterior")?;
    for j in 0..grid.ny() {
        let row: String = (0..grid.nx()).map(|i| grid.class(i, j).tag()).collect();
        writeln!(w, "{row}")?;
    }
    for j in 0..grid.ny() {
        let row = (0..grid.nx())
            .map(|i| fmt_f64(field.value(i, j)))
            .collect::<Vec<_>>()
            .join(" ");
        writeln!(w, "{row}")?;
    }
    w.flush()?;
    Ok(())
}

/// 17 significant digits: enough to reproduce any f64 exactly on parse.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn load_field(path: impl AsRef<Path>) -> Result<ScalarField> {
    let file = std::fs::File::open(&path)?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines().enumerate();

    let mut next_line = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((n, Ok(line))) => Ok((n + 1, line)),
            Some((n, Err(e))) => Err(Error::Parse {
                context: format!("field line {}", n + 1),
                msg: e.to_string(),
            }),
            None => Err(Error::Parse {
                context: "field".into(),
                msg: format!("unexpected end of file, expected {what}"),
            }),
        }
    };

    let (n, header) = next_line("header")?;
    let mut parts = header.split_whitespace();
    if parts.next() != Some("ringflow-field") {
        return Err(Error::Parse {
            context: format!("field line {n}"),
            msg: "missing ringflow-field header".into(),
        });
    }
    let version = parts.next().unwrap_or("");
    if version != FORMAT_VERSION.to_string() {
        return Err(Error::VersionMismatch { found: version.into() });
    }

    let (n, dom_line) = next_line("domain")?;
    let dom_json = dom_line.strip_prefix("domain ").ok_or_else(|| Error::Parse {
        context: format!("field line {n}"),
        msg: "expected domain line".into(),
    })?;
    let dom: DomainFile = serde_json::from_str(dom_json).map_err(|e| Error::Parse {
        context: format!("field line {n}"),
        msg: e.to_string(),
    })?;
    let ring = ConvexRing::new(dom.outer, dom.inner)?;

    let (n, rg_line) = next_line("r_gamma")?;
    let r_gamma: f64 = rg_line
        .strip_prefix("r_gamma ")
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| Error::Parse {
            context: format!("field line {n}"),
            msg: "expected r_gamma".into(),
        })?;

    let (n, dims) = next_line("grid dimensions")?;
    let mut it = dims.split_whitespace();
    let parse_err = |n: usize, what: &str| Error::Parse {
        context: format!("field line {n}"),
        msg: format!("expected {what}"),
    };
    let nx: usize = it.next().and_then(|s| s.parse().ok()).ok_or_else(|| parse_err(n, "nx"))?;
    let ny: usize = it.next().and_then(|s| s.parse().ok()).ok_or_else(|| parse_err(n, "ny"))?;
    let h: f64 = it.next().and_then(|s| s.parse().ok()).ok_or_else(|| parse_err(n, "h"))?;
    let ox: f64 = it.next().and_then(|s| s.parse().ok()).ok_or_else(|| parse_err(n, "ox"))?;
    let oy: f64 = it.next().and_then(|s| s.parse().ok()).ok_or_else(|| parse_err(n, "oy"))?;

    let (_, _legend) = next_line("class legend")?;

    let mut class = Vec::with_capacity(nx * ny);
    for _ in 0..ny {
        let (n, row) = next_line("class row")?;
        if row.chars().count() != nx {
            return Err(Error::Parse {
                context: format!("field line {n}"),
                msg: format!("expected {nx} class tags, found {}", row.chars().count()),
            });
        }
        for c in row.chars() {
            class.push(NodeClass::from_tag(c).ok_or_else(|| Error::Parse {
                context: format!("field line {n}"),
                msg: format!("unknown class tag {c:?}"),
            })?);
        }
    }
    let grid = Grid::from_parts(ring, Vec2::new(ox, oy), h, r_gamma, nx, ny, class)?;

    let mut values = Vec::with_capacity(nx * ny);
    for _ in 0..ny {
        let (n, row) = next_line("value row")?;
        for tok in row.split_whitespace() {
            values.push(tok.parse::<f64>().map_err(|e| Error::Parse {
                context: format!("field line {n}"),
                msg: e.to_string(),
            })?);
        }
    }
    ScalarField::new(std::sync::Arc::new(grid), values)
}

/// Streamline CSV: `id,s,x1,x2,v,speed,termination`, termination tag only on
/// the last row of each streamline.
pub fn save_streamlines(path: impl AsRef<Path>, streamlines: &[Streamline]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "# ringflow-streamlines {FORMAT_VERSION}")?;
    writeln!(w, "id,s,x1,x2,v,speed,termination")?;
    for (id, s) in streamlines.iter().enumerate() {
        for k in 0..s.len() {
            let term = if k + 1 == s.len() { s.termination.tag() } else { "" };
            writeln!(
                w,
                "{id},{},{},{},{},{},{term}",
                fmt_f64(s.arclength[k]),
                fmt_f64(s.vertices[k].x),
                fmt_f64(s.vertices[k].y),
                fmt_f64(s.potential[k]),
                fmt_f64(s.speed[k]),
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_streamlines(path: impl AsRef<Path>) -> Result<Vec<Streamline>> {
    let file = std::fs::File::open(&path)?;
    let reader = BufReader::new(file);
    let mut out: Vec<Streamline> = Vec::new();
    let mut current: Option<(usize, Streamline)> = None;
    for (ln, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse {
            context: format!("streamlines line {}", ln + 1),
            msg: e.to_string(),
        })?;
        if line.starts_with('#') || line.starts_with("id,") || line.trim().is_empty() {
            if line.starts_with("# ringflow-streamlines") {
                let ver = line.trim().rsplit(' ').next().unwrap_or("");
                if ver != FORMAT_VERSION.to_string() {
                    return Err(Error::VersionMismatch { found: ver.into() });
                }
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(Error::Parse {
                context: format!("streamlines line {}", ln + 1),
                msg: format!("expected 7 fields, found {}", fields.len()),
            });
        }
        let bad = |msg: &str| Error::Parse {
            context: format!("streamlines line {}", ln + 1),
            msg: msg.into(),
        };
        let id: usize = fields[0].parse().map_err(|_| bad("bad id"))?;
        let s: f64 = fields[1].parse().map_err(|_| bad("bad s"))?;
        let x: f64 = fields[2].parse().map_err(|_| bad("bad x1"))?;
        let y: f64 = fields[3].parse().map_err(|_| bad("bad x2"))?;
        let v: f64 = fields[4].parse().map_err(|_| bad("bad v"))?;
        let sp: f64 = fields[5].parse().map_err(|_| bad("bad speed"))?;

        let start_new = match &current {
            Some((cid, _)) => *cid != id,
            None => true,
        };
        if start_new {
            if let Some((_, done)) = current.take() {
                out.push(done);
            }
            current = Some((
                id,
                Streamline {
                    seed: Vec2::new(x, y),
                    vertices: vec![],
                    arclength: vec![],
                    potential: vec![],
                    speed: vec![],
                    termination: Termination::Stalled,
                },
            ));
        }
        let (_, cur) = current.as_mut().unwrap();
        cur.vertices.push(Vec2::new(x, y));
        cur.arclength.push(s);
        cur.potential.push(v);
        cur.speed.push(sp);
        if !fields[6].is_empty() {
            cur.termination =
                Termination::from_tag(fields[6]).ok_or_else(|| bad("bad termination"))?;
        }
    }
    if let Some((_, s)) = current.take() {
        out.push(s);
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct MergeTreeFile {
    format_version: u32,
    node_count: usize,
    edges: Vec<MergeEdgeFile>,
}

#[derive(Serialize, Deserialize)]
struct MergeEdgeFile {
    from: usize,
    to: usize,
    level: f64,
    location: Vec2,
    s_from: f64,
    s_to: f64,
}

pub fn save_merge_tree(path: impl AsRef<Path>, tree: &MergeTree) -> Result<()> {
    let file = MergeTreeFile {
        format_version: FORMAT_VERSION,
        node_count: tree.node_count,
        edges: tree
            .edges
            .iter()
            .map(|e| MergeEdgeFile {
                from: e.pair.0,
                to: e.pair.1,
                level: e.level,
                location: e.location,
                s_from: e.s_on.0,
                s_to: e.s_on.1,
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&file).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_merge_tree(path: impl AsRef<Path>) -> Result<MergeTree> {
    let text = std::fs::read_to_string(&path)?;
    let file: MergeTreeFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
        context: format!("merge tree line {}", e.line()),
        msg: e.to_string(),
    })?;
    if file.format_version != FORMAT_VERSION {
        return Err(Error::VersionMismatch { found: file.format_version.to_string() });
    }
    Ok(MergeTree {
        node_count: file.node_count,
        edges: file
            .edges
            .into_iter()
            .map(|e| ClPoint {
                location: e.location,
                level: e.level,
                pair: (e.from, e.to),
                s_on: (e.s_from, e.s_to),
            })
            .collect(),
    })
}

#[derive(Serialize, Deserialize)]
struct ReportFile {
    format_version: u32,
    verdicts: Vec<Verdict>,
}

pub fn save_report(path: impl AsRef<Path>, verdicts: &[Verdict]) -> Result<()> {
    let file = ReportFile { format_version: FORMAT_VERSION, verdicts: verdicts.to_vec() };
    let mut text = serde_json::to_string_pretty(&file).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_report(path: impl AsRef<Path>) -> Result<Vec<Verdict>> {
    let text = std::fs::read_to_string(&path)?;
    let file: ReportFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
        context: format!("report line {}", e.line()),
        msg: e.to_string(),
    })?;
    if file.format_version != FORMAT_VERSION {
        return Err(Error::VersionMismatch { found: file.format_version.to_string() });
    }
    Ok(file.verdicts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::build_grid;
    use crate::solver::{solve_infinity, SolveParams};

    fn square_ring() -> ConvexRing {
        ConvexRing::new(
            ConvexBody::rectangle(Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0)),
            ConvexBody::point(0.0, 0.0),
        )
        .unwrap()
    }

    #[test]
    fn field_snapshot_roundtrip_is_nodewise_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("field.txt");
        let h = 1.0 / 32.0;
        let grid = build_grid(&square_ring(), h, h).unwrap();
        let u = solve_infinity(&grid, &SolveParams { tol_res: 1e-8, ..Default::default() })
            .unwrap();
        save_field(&path, &u).unwrap();
        let v = load_field(&path).unwrap();
        assert_eq!(u.values(), v.values());
        assert_eq!(u.grid().nx(), v.grid().nx());
        assert_eq!(u.grid().classes(), v.grid().classes());
        assert_eq!(u.grid().origin(), v.grid().origin());
        // Second write is byte-identical.
        let path2 = dir.path().join("field2.txt");
        save_field(&path2, &v).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&path2).unwrap()
        );
    }

    #[test]
    fn domain_roundtrip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("domain.json");
        let ring = ConvexRing::new(
            ConvexBody::ellipse(Vec2::new(0.1, 0.0), 1.5, 1.0, 0.25),
            ConvexBody::segment(Vec2::new(-0.2, 0.0), Vec2::new(0.2, 0.0)),
        )
        .unwrap();
        save_domain(&path, &ring).unwrap();
        let loaded = load_domain(&path).unwrap();
        assert_eq!(ring.outer(), loaded.outer());
        assert_eq!(ring.inner(), loaded.inner());

        // Missing "outer" names the key.
        let err = parse_domain(r#"{"format_version":1,"inner":{"type":"point","at":[0,0]}}"#);
        match err {
            Err(Error::Parse { msg, .. }) => assert!(msg.contains("outer"), "{msg}"),
            other => panic!("expected parse error, got {other:?}"),
        }

        // Non-convex polygon fails validation.
        let err = parse_domain(
            r#"{"format_version":1,
                "outer":{"type":"polygon","vertices":[[0,0],[2,0],[0.1,0.1],[0,2]]},
                "inner":{"type":"point","at":[0.5,0.5]}}"#,
        );
        assert!(matches!(err, Err(Error::InvalidBody(_))), "{err:?}");

        // Unknown version.
        let err = parse_domain(
            r#"{"format_version":9,"outer":{"type":"disk","center":[0,0],"radius":1},
                "inner":{"type":"point","at":[0,0]}}"#,
        );
        assert!(matches!(err, Err(Error::VersionMismatch { .. })));
    }

    #[test]
    fn streamline_csv_roundtrip() {
        use crate::field::gradient;
        use crate::flow::{trace_ascending, TraceParams};
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("streamlines.csv");
        let h = 1.0 / 32.0;
        let grid = build_grid(&square_ring(), h, h).unwrap();
        let u = solve_infinity(&grid, &SolveParams { tol_res: 1e-8, ..Default::default() })
            .unwrap();
        let g = gradient(&u);
        let params = TraceParams::for_grid(u.grid());
        let traces: Vec<_> = [Vec2::new(0.0, -1.0), Vec2::new(-0.5, -1.0)]
            .iter()
            .map(|s| trace_ascending(&u, &g, *s, &params).unwrap())
            .collect();
        save_streamlines(&path, &traces).unwrap();
        let loaded = load_streamlines(&path).unwrap();
        assert_eq!(loaded.len(), traces.len());
        for (a, b) in traces.iter().zip(loaded.iter()) {
            assert_eq!(a.vertices, b.vertices);
            assert_eq!(a.potential, b.potential);
            assert_eq!(a.termination, b.termination);
        }
    }

    #[test]
    fn merge_tree_and_report_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let tree = MergeTree {
            node_count: 3,
            edges: vec![ClPoint {
                location: Vec2::new(0.25, -0.25),
                level: 0.625,
                pair: (0, 1),
                s_on: (0.5, 0.625),
            }],
        };
        let tpath = dir.path().join("tree.json");
        save_merge_tree(&tpath, &tree).unwrap();
        let loaded = load_merge_tree(&tpath).unwrap();
        assert_eq!(loaded.node_count, 3);
        assert_eq!(loaded.edges[0].pair, (0, 1));
        assert_eq!(loaded.edges[0].level, 0.625);

        let verdicts = vec![Verdict::check(
            "demo",
            "demo claim",
            vec![("x".into(), 1.5)],
            "x <= 2".into(),
            true,
        )];
        let rpath = dir.path().join("report.json");
        save_report(&rpath, &verdicts).unwrap();
        let loaded = load_report(&rpath).unwrap();
        assert_eq!(loaded.len(), 1);
        assert_eq!(loaded[0].name, "demo");
        assert!(loaded[0].passed());
    }
}
