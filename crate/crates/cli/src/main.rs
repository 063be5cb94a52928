//! Command-line front end: solve a domain, trace streamlines, verify a
//! solved field, render figures, and run one-shot reproduction pipelines.
//!
//! Exit codes: 0 success (all assertive verdicts pass), 1 verification
//! failure, 2 usage error (bad flags or malformed input files), 3 numerical
//! failure (no convergence or non-finite field data).

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ringflow::checks::{
    all_assertive_pass, run_standard_checks, square_suite, SquareSuiteParams, Verdict,
    VerdictStatus,
};
use ringflow::error::Error;
use ringflow::field::{build_grid, gradient, ScalarField, VectorField};
use ringflow::flow::{merge_tree, trace_ascending, Streamline, TraceParams};
use ringflow::geometry::{ConvexBody, ConvexRing};
use ringflow::render::{render_svg, RenderSpec};
use ringflow::solver::{solve_infinity, solve_p, SolveParams, SweepOrder};
use ringflow::Vec2;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "ringflow",
    about = "Potentials of planar convex rings: solve, trace, verify, render",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a domain file into a field snapshot.
    Solve(SolveArgs),
    /// Trace ascending streamlines of a solved field and build the merge tree.
    Trace(TraceArgs),
    /// Run the verification battery on a solved field.
    Verify(VerifyArgs),
    /// Render a solved field (plus optional streamlines) as SVG.
    Render(RenderArgs),
    /// Solve, trace, check, and render the square with a center point.
    ReproduceSquare(ReproduceArgs),
    /// Solve, trace, check, and render the unit-disk stadium.
    ReproduceStadium(ReproduceArgs),
    /// Solve, trace, check, and render the 3:2 ellipse with a center point.
    ReproduceEllipse(ReproduceArgs),
}

#[derive(Args, Clone)]
struct SolverFlags {
    /// Grid spacing.
    #[arg(long, default_value_t = 1.0 / 128.0)]
    h: f64,
    /// Capture radius for point/segment inner boundaries (defaults to h).
    #[arg(long = "r-gamma")]
    r_gamma: Option<f64>,
    /// Residual tolerance (max nodal update per sweep).
    #[arg(long = "tol", default_value_t = 1e-8)]
    tol: f64,
    /// Stencil radius in cells.
    #[arg(long = "stencil-m", default_value_t = 3)]
    stencil_m: usize,
    /// Stencil directions.
    #[arg(long = "stencil-k", default_value_t = 16)]
    stencil_k: usize,
    /// Update checkerboard colors with worker threads (same results).
    #[arg(long)]
    parallel: bool,
    /// Sweep order: checkerboard (default) or lexicographic.
    #[arg(long, default_value = "checkerboard")]
    order: String,
}

impl SolverFlags {
    fn params(&self) -> Result<SolveParams, Error> {
        let order = match self.order.as_str() {
            "checkerboard" => SweepOrder::Checkerboard,
            "lexicographic" => SweepOrder::Lexicographic,
            other => {
                return Err(Error::Parse {
                    context: "--order".into(),
                    msg: format!("unknown sweep order {other:?}"),
                })
            }
        };
        Ok(SolveParams {
            stencil_m: self.stencil_m,
            stencil_k: self.stencil_k,
            tol_res: self.tol,
            order,
            parallel: self.parallel,
            log_every: 200,
            ..Default::default()
        })
    }

    fn r_gamma(&self) -> f64 {
        self.r_gamma.unwrap_or(self.h)
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Domain spec (JSON).
    #[arg(long)]
    domain: PathBuf,
    /// Solve the p-Dirichlet problem instead of the limit problem.
    #[arg(long)]
    p: Option<f64>,
    #[command(flatten)]
    solver: SolverFlags,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct TraceArgs {
    /// Field snapshot produced by `solve`.
    field: PathBuf,
    /// Seeds: a per-side count, `random:N`, or `x,y;x,y;...`.
    #[arg(long, default_value = "16")]
    seeds: String,
    /// RNG seed for `random:N` seed specs.
    #[arg(long = "seed-int", default_value_t = 0)]
    seed_int: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Field snapshot produced by `solve`.
    field: PathBuf,
    /// Number of random contours for the flux batteries.
    #[arg(long, default_value_t = 50)]
    contours: usize,
    #[arg(long = "seed-int", default_value_t = 0)]
    seed_int: u64,
    #[arg(long = "tol", default_value_t = 1e-8)]
    tol: f64,
    #[arg(long = "stencil-m", default_value_t = 3)]
    stencil_m: usize,
    #[arg(long = "stencil-k", default_value_t = 16)]
    stencil_k: usize,
    /// Report path (JSON).
    #[arg(long, default_value = "report.json")]
    out: PathBuf,
}

#[derive(Args)]
struct RenderArgs {
    /// Field snapshot produced by `solve`.
    field: PathBuf,
    /// Streamline CSV to overlay.
    #[arg(long)]
    streamlines: Option<PathBuf>,
    /// Merge tree JSON to overlay.
    #[arg(long = "merge-tree")]
    merge_tree: Option<PathBuf>,
    /// Comma-separated level-curve levels.
    #[arg(long, default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")]
    levels: String,
    #[arg(long, default_value_t = 800)]
    canvas: u32,
    /// Output SVG path.
    #[arg(long, default_value = "figure.svg")]
    out: PathBuf,
}

#[derive(Args)]
struct ReproduceArgs {
    #[command(flatten)]
    solver: SolverFlags,
    /// Seeds per side (square) or total boundary seeds (smooth bodies).
    #[arg(long, default_value_t = 16)]
    seeds: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Trace(args) => cmd_trace(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Render(args) => cmd_render(args),
        Command::ReproduceSquare(args) => cmd_reproduce(Fixture::Square, args),
        Command::ReproduceStadium(args) => cmd_reproduce(Fixture::Stadium, args),
        Command::ReproduceEllipse(args) => cmd_reproduce(Fixture::Ellipse, args),
    };
    match result {
        Ok(all_pass) => {
            if all_pass {
                ExitCode::SUCCESS
            } else {
                eprintln!("verification failed");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::NoConvergence { .. } | Error::NonFiniteField { .. } => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn cmd_solve(args: SolveArgs) -> Result<bool, Error> {
    let ring = ringflow::io::load_domain(&args.domain)?;
    let params = args.solver.params()?;
    let grid = build_grid(&ring, args.solver.h, args.solver.r_gamma())?;
    let start = std::time::Instant::now();
    let field = match args.p {
        Some(p) => solve_p(&grid, p, &params)?,
        None => solve_infinity(&grid, &params)?,
    };
    eprintln!(
        "solved {} nodes in {:.1}s",
        grid.node_count(),
        start.elapsed().as_secs_f64()
    );
    std::fs::create_dir_all(&args.out)?;
    let path = args.out.join("field.txt");
    ringflow::io::save_field(&path, &field)?;
    eprintln!("wrote {}", path.display());
    Ok(true)
}

fn parse_seeds(spec: &str, ring: &ConvexRing, seed_int: u64) -> Result<Vec<Vec2>, Error> {
    let bad = |msg: String| Error::Parse { context: "--seeds".into(), msg };
    if let Ok(per_side) = spec.parse::<usize>() {
        if per_side == 0 {
            return Err(bad("seed count must be positive".into()));
        }
        return Ok(sides_seeds(ring.outer(), per_side));
    }
    if let Some(n) = spec.strip_prefix("random:") {
        let n: usize = n.parse().map_err(|_| bad(format!("bad random seed count {n:?}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed_int);
        return Ok((0..n)
            .map(|_| ring.outer().boundary_point(rng.random_range(0.0..1.0)))
            .collect());
    }
    spec.split(';')
        .map(|pair| {
            let mut it = pair.split(',');
            let x: f64 = it
                .next()
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| bad(format!("bad seed {pair:?}")))?;
            let y: f64 = it
                .next()
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| bad(format!("bad seed {pair:?}")))?;
            Ok(Vec2::new(x, y))
        })
        .collect()
}

/// Per-side seeds for polygons (offset to avoid corners), uniform boundary
/// seeds otherwise.
fn sides_seeds(outer: &ConvexBody, per_side: usize) -> Vec<Vec2> {
    match outer {
        ConvexBody::Polygon { vertices } => {
            let n = vertices.len();
            let mut seeds = Vec::with_capacity(n * per_side);
            for i in 0..n {
                let a = vertices[i];
                let b = vertices[(i + 1) % n];
                for k in 0..per_side {
                    let t = (2.0 * k as f64 + 1.0) / (2.0 * per_side as f64);
                    seeds.push(a.lerp(b, t));
                }
            }
            seeds
        }
        _ => outer.boundary_points(4 * per_side),
    }
}

fn load_solved(path: &Path) -> Result<(ScalarField, VectorField), Error> {
    let field = ringflow::io::load_field(path)?;
    field.check_finite()?;
    let vf = gradient(&field);
    Ok((field, vf))
}

fn cmd_trace(args: TraceArgs) -> Result<bool, Error> {
    let (field, vf) = load_solved(&args.field)?;
    let ring = field.grid().ring().clone();
    let seeds = parse_seeds(&args.seeds, &ring, args.seed_int)?;
    let params = TraceParams::for_grid(field.grid());
    let traces: Vec<Streamline> = seeds
        .iter()
        .map(|s| trace_ascending(&field, &vf, *s, &params))
        .collect::<Result<_, _>>()?;
    let tree = merge_tree(&traces, params.merge_tol);
    std::fs::create_dir_all(&args.out)?;
    ringflow::io::save_streamlines(args.out.join("streamlines.csv"), &traces)?;
    ringflow::io::save_merge_tree(args.out.join("merge_tree.json"), &tree)?;
    eprintln!(
        "traced {} streamlines, {} merge edges",
        traces.len(),
        tree.edges.len()
    );
    Ok(true)
}

fn verify_field(
    field: &ScalarField,
    vf: &VectorField,
    tol: f64,
    stencil_m: usize,
    stencil_k: usize,
    contours: usize,
    seed_int: u64,
) -> Vec<Verdict> {
    let sparams = SolveParams {
        tol_res: tol,
        stencil_m,
        stencil_k,
        ..Default::default()
    };
    let mut verdicts = run_standard_checks(field, vf, &sparams, contours, seed_int);
    // The square fixture gets its dedicated battery on top.
    if let Ok(mut suite) = square_suite(
        field,
        vf,
        &SquareSuiteParams { tol_res: tol, ..Default::default() },
    ) {
        verdicts.append(&mut suite);
    }
    verdicts
}

fn print_verdicts(verdicts: &[Verdict]) {
    for v in verdicts {
        let tag = match v.status {
            VerdictStatus::Pass => "PASS",
            VerdictStatus::Fail => "FAIL",
            VerdictStatus::ReportOnly => "INFO",
        };
        let measured: Vec<String> = v
            .measured
            .iter()
            .map(|(k, val)| format!("{k}={val:.6}"))
            .collect();
        println!("{tag} {} [{}] {}", v.name, measured.join(", "), v.threshold);
    }
}

fn cmd_verify(args: VerifyArgs) -> Result<bool, Error> {
    let (field, vf) = load_solved(&args.field)?;
    let verdicts = verify_field(
        &field,
        &vf,
        args.tol,
        args.stencil_m,
        args.stencil_k,
        args.contours,
        args.seed_int,
    );
    print_verdicts(&verdicts);
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    ringflow::io::save_report(&args.out, &verdicts)?;
    eprintln!("wrote {}", args.out.display());
    Ok(all_assertive_pass(&verdicts))
}

fn parse_levels(spec: &str) -> Result<Vec<f64>, Error> {
    spec.split(',')
        .map(|s| {
            s.trim().parse::<f64>().map_err(|_| Error::Parse {
                context: "--levels".into(),
                msg: format!("bad level {s:?}"),
            })
        })
        .collect()
}

fn cmd_render(args: RenderArgs) -> Result<bool, Error> {
    let (field, _) = load_solved(&args.field)?;
    let streamlines = match &args.streamlines {
        Some(p) => ringflow::io::load_streamlines(p)?,
        None => Vec::new(),
    };
    let tree = match &args.merge_tree {
        Some(p) => Some(ringflow::io::load_merge_tree(p)?),
        None => None,
    };
    let spec = RenderSpec {
        canvas: args.canvas,
        levels: parse_levels(&args.levels)?,
        ..Default::default()
    };
    render_svg(&field, &streamlines, tree.as_ref(), &spec, &args.out)?;
    eprintln!("wrote {}", args.out.display());
    Ok(true)
}

enum Fixture {
    Square,
    Stadium,
    Ellipse,
}

fn cmd_reproduce(fixture: Fixture, args: ReproduceArgs) -> Result<bool, Error> {
    let ring = match fixture {
        Fixture::Square => ConvexRing::new(
            ConvexBody::rectangle(Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0)),
            ConvexBody::point(0.0, 0.0),
        )?,
        Fixture::Stadium => {
            ConvexRing::new(ConvexBody::disk(Vec2::ZERO, 1.0), ConvexBody::point(0.0, 0.0))?
        }
        Fixture::Ellipse => ConvexRing::new(
            ConvexBody::ellipse(Vec2::ZERO, 1.5, 1.0, 0.0),
            ConvexBody::point(0.0, 0.0),
        )?,
    };
    std::fs::create_dir_all(&args.out)?;
    ringflow::io::save_domain(args.out.join("domain.json"), &ring)?;

    let params = args.solver.params()?;
    let grid = build_grid(&ring, args.solver.h, args.solver.r_gamma())?;
    let start = std::time::Instant::now();
    let field = solve_infinity(&grid, &params)?;
    eprintln!(
        "solved {} nodes in {:.1}s",
        grid.node_count(),
        start.elapsed().as_secs_f64()
    );
    ringflow::io::save_field(args.out.join("field.txt"), &field)?;
    let vf = gradient(&field);

    // Seeds: per-side for the square (plus corners and side midpoints),
    // uniform around smooth boundaries.
    let mut seeds = sides_seeds(ring.outer(), args.seeds);
    if matches!(fixture, Fixture::Square) {
        seeds.extend([
            Vec2::new(-1.0, -1.0),
            Vec2::new(1.0, -1.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(-1.0, 1.0),
            Vec2::new(0.0, -1.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(-1.0, 0.0),
        ]);
    }
    let tparams = TraceParams::for_grid(field.grid());
    let traces: Vec<Streamline> = seeds
        .iter()
        .map(|s| trace_ascending(&field, &vf, *s, &tparams))
        .collect::<Result<_, _>>()?;
    let tree = merge_tree(&traces, tparams.merge_tol);
    ringflow::io::save_streamlines(args.out.join("streamlines.csv"), &traces)?;
    ringflow::io::save_merge_tree(args.out.join("merge_tree.json"), &tree)?;

    let mut verdicts = run_standard_checks(&field, &vf, &params, 50, 0);
    match fixture {
        Fixture::Square => {
            let suite = square_suite(
                &field,
                &vf,
                &SquareSuiteParams {
                    seeds_per_side: args.seeds,
                    tol_res: args.solver.tol,
                },
            )?;
            verdicts.extend(suite);
        }
        Fixture::Stadium => {
            verdicts.push(Verdict::check(
                "stadium-identity",
                "the ring is a stadium and its streamlines never merge",
                vec![
                    ("is_stadium".into(), f64::from(ringflow::geometry::is_stadium(&ring, 1e-6))),
                    ("merge_edges".into(), tree.edges.len() as f64),
                ],
                "stadium, and the merge tree is empty".into(),
                ringflow::geometry::is_stadium(&ring, 1e-6) && tree.edges.is_empty(),
            ));
        }
        Fixture::Ellipse => {
            verdicts.push(ringflow::checks::theorem_single_check(&field, &vf)?);
        }
    }
    print_verdicts(&verdicts);
    ringflow::io::save_report(args.out.join("report.json"), &verdicts)?;

    render_svg(&field, &traces, Some(&tree), &RenderSpec::default(), args.out.join("figure.svg"))?;
    eprintln!("artifacts in {}", args.out.display());
    Ok(all_assertive_pass(&verdicts))
}
