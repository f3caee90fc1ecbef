use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::{json, Value};

use jetprolong::contact::{rank4_type, ContactError, PdeSurface, PointClass, Rank4Kind, PARABOLIC_BAND};
use jetprolong::expr::{parse_expr, Chart, Expr, Point, Poly, Table};
use jetprolong::par;
use jetprolong::prolong::atlas::{embedding_pairs, sigma_j2_atlas, Model};
use jetprolong::prolong::{
    chart_defining_functions, fiber_sampler_oracle, fiber_topology, plucker_fiber, prolong_rank4, stratify, tower,
    ChartId, FiberPoint, ProlongError,
};
use jetprolong::solutions::{self, InputFunction, SolutionError, SolutionSurface, RANK_TOL};
use jetprolong::tanaka::reference::{compare_symbol, reference_symbol, Reference};
use jetprolong::tanaka::{derived_flag, filtration, symbol_algebra, TanakaError};

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "jetprolong", version, about = "Prolongations, symbols and singular solutions of second-order PDEs")]
struct Cli {
    #[command(flatten)]
    cfg: RunConfig,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, serde::Serialize)]
struct RunConfig {
    /// relative singular-value threshold for rank decisions
    #[arg(long, global = true, default_value_t = RANK_TOL)]
    tol_rank: f64,
    /// residual threshold for integral-surface verification
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol_residual: f64,
    /// relative width of the parabolic band in the classification
    #[arg(long, global = true, default_value_t = PARABOLIC_BAND)]
    band: f64,
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// sample count of the fiber mesh oracle
    #[arg(long, global = true, default_value_t = 100_000)]
    oracle_samples: usize,
    /// write the report here instead of stdout
    #[arg(long, global = true)]
    #[serde(skip)]
    json_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PointsArgs {
    /// TOML file with `equation = "..."`
    pde: PathBuf,
    /// TOML file with `points = [[x, y, z, p, q, r, s, t], ...]`
    points: PathBuf,
    /// move each point onto the surface along this coordinate first
    #[arg(long)]
    project: Option<String>,
}

#[derive(Args, Debug)]
struct FiberArgs {
    /// fiber chart, a numeral I..VI or a coframe label
    #[arg(long, default_value = "I")]
    chart: String,
    /// values of the two free fiber coordinates
    #[arg(long, value_parser = parse_pair, default_value = "0.3,0.7", allow_hyphen_values = true)]
    free: [f64; 2],
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classify points of an equation by the sign of the discriminant
    Classify(PointsArgs),
    /// Topology of the fiber of integral planes at each point
    Fiber {
        #[command(flatten)]
        pts: PointsArgs,
        /// also run the mesh oracle
        #[arg(long)]
        oracle: bool,
    },
    /// Iterated prolongation at random fiber points
    Prolong {
        #[command(flatten)]
        pts: PointsArgs,
        #[arg(short = 'k', long, default_value_t = 1)]
        steps: usize,
        #[arg(long, default_value = "I")]
        chart: String,
    },
    /// Graded symbol algebra at a point of the prolongation
    Symbol {
        #[command(flatten)]
        pts: PointsArgs,
        #[command(flatten)]
        fiber: FiberArgs,
    },
    /// Derived flag at a point of the prolongation
    Derived {
        #[command(flatten)]
        pts: PointsArgs,
        #[command(flatten)]
        fiber: FiberArgs,
    },
    /// Type of the induced rank-4 distribution from its Pfaffian pencil
    Rank4Type(PointsArgs),
    /// Build a singular solution of a model equation and verify it
    Solve { input: PathBuf },
    /// Verify a surface given by explicit components or by a solve input
    VerifySolution { input: PathBuf },
    /// Dump the fiber chart tables and the atlas of the second jet Grassmann bundle
    Charts,
}

enum Failure {
    Input(String),
    Rejected(Value),
}

type Outcome = Result<(Value, bool), Failure>;

fn input<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Input(e.to_string())
}

fn read_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

#[derive(Deserialize)]
struct PdeFile {
    equation: String,
    name: Option<String>,
}

#[derive(Deserialize)]
struct PointsFile {
    points: Vec<[f64; 8]>,
}

fn load_points(args: &PointsArgs) -> Result<(PdeSurface, Vec<Point>), Failure> {
    let spec: PdeFile = read_toml(&args.pde)?;
    let mut pde = PdeSurface::parse(&spec.equation).map_err(|e| Failure::Input(format!("equation: {e}")))?;
    if let Some(n) = spec.name {
        pde = pde.named(&n);
    }
    let pts: PointsFile = read_toml(&args.points)?;
    let mut out = Vec::with_capacity(pts.points.len());
    for (i, v) in pts.points.iter().enumerate() {
        let mut pt = pde.point(*v);
        if let Some(c) = &args.project {
            if !pde.chart.contains(c) {
                return Err(Failure::Input(format!("unknown coordinate {c}")));
            }
            pt = pde.project(&pt, c).ok_or_else(|| Failure::Input(format!("point {i}: projection along {c} failed")))?;
        }
        let f = pde.f.eval(&pt).map_err(|e| Failure::Input(format!("point {i}: {e}")))?;
        if f.abs() > 1e-9 {
            return Err(Failure::Input(format!("point {i} is off the surface: |F| = {:.3e}", f.abs())));
        }
        out.push(pt);
    }
    Ok((pde, out))
}

/// Errors that say something about the geometry rather than the input.
fn is_rejection(msg: &MathError) -> bool {
    match msg {
        MathError::Contact(e) => !matches!(e, ContactError::Parse(_) | ContactError::OffSurface(_)),
        MathError::Prolong(e) => !matches!(
            e,
            ProlongError::UnknownChart(_) | ProlongError::UnlistedEmbedding { .. } | ProlongError::Contact(ContactError::Parse(_))
        ),
        MathError::Tanaka(_) | MathError::System(_) => true,
        MathError::Solution(e) => matches!(
            e,
            SolutionError::CauchyRiemann(_) | SolutionError::PathDependent(_) | SolutionError::Eval(_)
        ),
    }
}

#[derive(Debug, thiserror::Error)]
enum MathError {
    #[error(transparent)]
    Contact(#[from] ContactError),
    #[error(transparent)]
    Prolong(#[from] ProlongError),
    #[error(transparent)]
    Tanaka(#[from] TanakaError),
    #[error(transparent)]
    Solution(#[from] SolutionError),
    #[error(transparent)]
    System(#[from] jetprolong::system::SystemError),
}

/// Runs `f` on every point; per-point rejections are reported inline.
fn per_point<F>(pts: &[Point], f: F) -> Outcome
where
    F: Fn(usize, &Point) -> Result<Value, MathError> + Sync + Send,
{
    let idx: Vec<usize> = (0..pts.len()).collect();
    let results = par::map(&idx, |&i| f(i, &pts[i]));
    let mut rejected = false;
    let mut out = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => out.push(v),
            Err(e) if is_rejection(&e) => {
                rejected = true;
                out.push(json!({ "point": pts[i].values, "error": e.to_string() }));
            }
            Err(e) => return Err(Failure::Input(format!("point {i}: {e}"))),
        }
    }
    Ok((Value::Array(out), rejected))
}

fn kind_at(pde: &PdeSurface, pt: &Point) -> Result<Rank4Kind, MathError> {
    Ok(rank4_type(&pde.induced_distribution(pt)?)?.kind)
}

fn cmd_classify(cfg: &RunConfig, args: &PointsArgs) -> Outcome {
    let (pde, pts) = load_points(args)?;
    let (v, _) = per_point(&pts, |_, pt| {
        let c = pde.classify_with_band(pt, cfg.band)?;
        Ok(json!({ "point": pt.values, "class": c.class, "delta": c.delta, "delta_exact": c.delta_exact, "band": c.band }))
    })?;
    let rejected = v.as_array().unwrap().iter().any(|p| p["class"] == json!(PointClass::NonRegular));
    Ok((json!({ "equation": pde.f.to_string(), "points": v }), rejected))
}

fn cmd_fiber(cfg: &RunConfig, args: &PointsArgs, oracle: bool) -> Outcome {
    let (pde, pts) = load_points(args)?;
    let (v, rejected) = per_point(&pts, |_, pt| {
        let class = pde.classify_with_band(pt, cfg.band)?.class;
        let pf = plucker_fiber(&pde.induced_distribution(pt)?)?;
        let topo = fiber_topology(&pf);
        let mesh = if oracle { Some(fiber_sampler_oracle(&pf, cfg.oracle_samples)?) } else { None };
        Ok(json!({ "point": pt.values, "class": class, "topology": topo, "oracle": mesh }))
    })?;
    Ok((json!({ "equation": pde.f.to_string(), "points": v }), rejected))
}

fn cmd_rank4(args: &PointsArgs) -> Outcome {
    let (pde, pts) = load_points(args)?;
    let (v, rejected) = per_point(&pts, |_, pt| {
        let class = pde.classify(pt)?.class;
        let t = rank4_type(&pde.induced_distribution(pt)?)?;
        Ok(json!({ "point": pt.values, "class": class, "type": t, "agrees": t.kind.matches(class) }))
    })?;
    Ok((json!({ "equation": pde.f.to_string(), "points": v }), rejected))
}

fn cmd_prolong(cfg: &RunConfig, args: &PointsArgs, k: usize, chart: &str) -> Outcome {
    let (pde, pts) = load_points(args)?;
    let (v, rejected) = per_point(&pts, |i, pt| {
        let chart = ChartId::parse(chart, kind_at(&pde, pt)?)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(i as u64));
        let levels = tower(&pde.system(pt)?, pt, k, chart, &mut rng)?;
        Ok(json!({ "point": pt.values, "chart": chart.to_string(), "levels": levels }))
    })?;
    Ok((json!({ "equation": pde.f.to_string(), "steps": k, "points": v }), rejected))
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let v: Vec<f64> = s.split(',').map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"))).collect::<Result<_, _>>()?;
    <[f64; 2]>::try_from(v).map_err(|_| "expected two comma-separated numbers".to_string())
}

fn cmd_symbol(args: &PointsArgs, fa: &FiberArgs, derived_only: bool) -> Outcome {
    let (pde, pts) = load_points(args)?;
    let free = fa.free;
    let (v, rejected) = per_point(&pts, |_, pt| {
        let kind = kind_at(&pde, pt)?;
        let chart = ChartId::parse(&fa.chart, kind)?;
        let sys = pde.system(pt)?;
        let (pro, _) = prolong_rank4(&sys, pt, chart, &FiberPoint::Free(free))?;
        let w = pro.lift(pt, free);
        let stratum = stratify(&plucker_fiber(&sys.sample(pt)?)?, &pro.plane(pt, free)?)?;
        let head = json!({ "point": pt.values, "chart": chart.to_string(), "free": free, "stratum": stratum.index() });
        if derived_only {
            let fl = derived_flag(&pro.system, &w)?;
            return Ok(json!({ "at": head, "flag": fl }));
        }
        let gs = symbol_algebra(&filtration(&pro.system, &w)?)?;
        let fp = gs.fingerprint();
        let r = Reference { kind, stratum: stratum.index() };
        let reference_match = match reference_symbol(r) {
            Some(_) => Some(compare_symbol(&gs, r)?),
            None => None,
        };
        Ok(json!({
            "at": head,
            "graded_dims": fp.graded_dims,
            "bracket_image_dims": fp.bracket_image_dims,
            "generating_condition": fp.generating_condition,
            "centralizer_dims": fp.centralizer_dims,
            "jacobi_residual": gs.jacobi_residual(),
            "grading_residual": gs.grading_residual,
            "reference_match": reference_match,
        }))
    })?;
    Ok((json!({ "equation": pde.f.to_string(), "points": v }), rejected))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum FunctionSpec {
    Expr(String),
    Table { xs: Vec<f64>, ys: Vec<f64> },
}

#[derive(Deserialize)]
struct SolveFile {
    model: String,
    /// parameter pair: xt, rt, st or rs
    params: Option<String>,
    /// atlas chart letter, for explicit components
    chart: Option<char>,
    variables: Option<[String; 2]>,
    #[serde(default)]
    functions: BTreeMap<String, FunctionSpec>,
    components: Option<BTreeMap<String, String>>,
    designated: Option<[f64; 2]>,
    base: Option<[f64; 2]>,
    grid: Option<usize>,
    domain: Option<[[f64; 2]; 2]>,
}

fn function(spec: &SolveFile, name: &str, var: &str) -> Result<InputFunction, Failure> {
    match spec.functions.get(name) {
        None => Err(Failure::Input(format!("missing function {name}"))),
        Some(FunctionSpec::Expr(text)) => InputFunction::parse(name, text, var).map_err(|e| Failure::Input(format!("{name}: {e}"))),
        Some(FunctionSpec::Table { xs, ys }) => {
            let t = Table::new(name, xs.clone(), ys.clone()).map_err(|e| Failure::Input(format!("{name}: {e}")))?;
            Ok(InputFunction::table(name, t, var))
        }
    }
}

fn build_surface(spec: &SolveFile) -> Result<SolutionSurface, Failure> {
    let model: Model = spec.model.parse().map_err(|_| Failure::Input(format!("unknown model {}", spec.model)))?;
    let fail = |e: SolutionError| {
        let e = MathError::from(e);
        if is_rejection(&e) {
            Failure::Rejected(json!({ "error": e.to_string() }))
        } else {
            Failure::Input(e.to_string())
        }
    };
    let surface = if let Some(comps) = &spec.components {
        let chart = spec.chart.ok_or_else(|| Failure::Input("explicit components need `chart`".into()))?;
        let vars = spec.variables.as_ref().ok_or_else(|| Failure::Input("explicit components need `variables`".into()))?;
        let pc = Chart::new(vars).map_err(|e| Failure::Input(format!("variables: duplicate {}", e.0)))?;
        let mut parsed = Vec::new();
        for (n, text) in comps {
            parsed.push((n.as_str(), parse_expr(text, &pc).map_err(|e| Failure::Input(format!("component {n}: {e}")))?));
        }
        SolutionSurface::new(model, chart, [&vars[0], &vars[1]], parsed).map_err(fail)?
    } else {
        let params = spec.params.as_deref().unwrap_or(match model {
            Model::Wave => "xt",
            Model::Parabolic => "st",
            Model::Laplace => "rs",
        });
        match (model, params) {
            (Model::Wave, "xt") => solutions::wave_solution_xt(&function(spec, "y", "t")?, &function(spec, "z0", "x")?),
            (Model::Wave, "rt") => solutions::wave_solution_rt(&function(spec, "x", "r")?, &function(spec, "y", "t")?),
            (Model::Parabolic, "st") => {
                solutions::parabolic_solution_st(&function(spec, "y", "s")?, &function(spec, "x0", "s")?)
            }
            (Model::Laplace, "rs") => {
                let chart = Chart::new(&["r", "s"]).unwrap();
                let part = |n: &str| -> Result<Expr, Failure> {
                    match spec.functions.get(n) {
                        Some(FunctionSpec::Expr(t)) => parse_expr(t, &chart).map_err(|e| Failure::Input(format!("{n}: {e}"))),
                        _ => Err(Failure::Input(format!("laplace needs expression {n}(r, s)"))),
                    }
                };
                solutions::laplace_solution_rs(&part("y")?, &part("x")?, spec.base.unwrap_or([0.0, 0.0]))
            }
            _ => return Err(Failure::Input(format!("no construction for {model} on parameters {params}"))),
        }
        .map_err(fail)?
    };
    Ok(match spec.designated {
        Some(u) => surface.with_designated(u),
        None => surface,
    })
}

fn verify(cfg: &RunConfig, spec: &SolveFile, s: &SolutionSurface) -> Result<solutions::VerificationReport, Failure> {
    let grid = spec.grid.unwrap_or(30);
    let domain = spec.domain.unwrap_or([[-1.0, 1.0], [-1.0, 1.0]]);
    solutions::verify_integral_surface_with(s, grid, domain, cfg.tol_residual, cfg.tol_rank)
        .map_err(|e| Failure::Rejected(json!({ "error": e.to_string() })))
}

fn cmd_solve(cfg: &RunConfig, path: &Path) -> Outcome {
    let spec: SolveFile = read_toml(path)?;
    let s = build_surface(&spec)?;
    let report = verify(cfg, &spec, &s)?;
    let show = |e: &Expr| Poly::from_expr(e).map_or_else(|| e.to_string(), |p| p.to_expr().to_string());
    let comps: BTreeMap<&str, String> = s.names.iter().map(|n| n.as_str()).zip(s.components.iter().map(show)).collect();
    let pass = report.pass;
    Ok((
        json!({
            "model": s.model,
            "chart": s.chart.to_string(),
            "params": s.params,
            "components": comps,
            "verification": report,
        }),
        !pass,
    ))
}

fn cmd_verify(cfg: &RunConfig, path: &Path) -> Outcome {
    let spec: SolveFile = read_toml(path)?;
    let s = build_surface(&spec)?;
    let report = verify(cfg, &spec, &s)?;
    let pass = report.pass;
    Ok((json!({ "model": s.model, "chart": s.chart.to_string(), "verification": report }), !pass))
}

fn cmd_charts() -> Outcome {
    let mut grassmann = serde_json::Map::new();
    for (name, kind) in [
        ("hyperbolic", Rank4Kind::HyperbolicType),
        ("parabolic", Rank4Kind::ParabolicType),
        ("elliptic", Rank4Kind::EllipticType),
    ] {
        let mut rows = Vec::new();
        for c in ChartId::ALL {
            rows.push(chart_defining_functions(kind, c).map_err(input)?.report());
        }
        grassmann.insert(name.into(), json!(rows));
    }
    let atlas: Vec<Value> = sigma_j2_atlas()
        .iter()
        .map(|a| {
            let gens: Vec<Value> = a
                .generator_labels
                .iter()
                .zip(&a.generators)
                .map(|(l, g)| json!({ "label": l, "form": g.to_string() }))
                .collect();
            json!({
                "id": a.id.to_string(),
                "label": a.label,
                "independent": a.independent,
                "fiber": a.fiber,
                "coordinates": a.chart.names().iter().map(|n| n.to_string()).collect::<Vec<_>>(),
                "generators": gens,
            })
        })
        .collect();
    let embeddings: Vec<Value> = embedding_pairs().iter().map(|(m, c)| json!({ "model": m, "chart": c.to_string() })).collect();
    Ok((json!({ "grassmann_charts": grassmann, "atlas": atlas, "embeddings": embeddings }), false))
}

fn envelope(command: &str, cfg: &RunConfig, status: &str, result: Value) -> Value {
    json!({ "schema_version": SCHEMA_VERSION, "command": command, "config": cfg, "status": status, "result": result })
}

fn emit(cfg: &RunConfig, v: &Value) -> Result<(), String> {
    let text = serde_json::to_string_pretty(v).map_err(|e| e.to_string())? + "\n";
    match &cfg.json_out {
        Some(p) => fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = &cli.cfg;
    let (name, outcome) = match &cli.command {
        Command::Classify(a) => ("classify", cmd_classify(cfg, a)),
        Command::Fiber { pts, oracle } => ("fiber", cmd_fiber(cfg, pts, *oracle)),
        Command::Prolong { pts, steps, chart } => ("prolong", cmd_prolong(cfg, pts, *steps, chart)),
        Command::Symbol { pts, fiber } => ("symbol", cmd_symbol(pts, fiber, false)),
        Command::Derived { pts, fiber } => ("derived", cmd_symbol(pts, fiber, true)),
        Command::Rank4Type(a) => ("rank4-type", cmd_rank4(a)),
        Command::Solve { input } => ("solve", cmd_solve(cfg, input)),
        Command::VerifySolution { input } => ("verify-solution", cmd_verify(cfg, input)),
        Command::Charts => ("charts", cmd_charts()),
    };
    let (report, code) = match outcome {
        Ok((v, false)) => (envelope(name, cfg, "ok", v), 0),
        Ok((v, true)) => (envelope(name, cfg, "rejected", v), 2),
        Err(Failure::Rejected(v)) => (envelope(name, cfg, "rejected", v), 2),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
    };
    if let Err(e) = emit(cfg, &report) {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    ExitCode::from(code)
}
