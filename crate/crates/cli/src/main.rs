use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use basin_core::conjugacy::{ClassDescriptor, ConjugacyClass, UNIQUENESS_TOLERANCE};
use basin_core::poly::PolynomialDescriptor;
use basin_core::potential::{
    escape_level_data, green_gradient, green_value, level_seed, omega_arc_integral,
    trace_level_curve,
};
use basin_core::render::{render_dilatation, render_green, Window};
use basin_core::selftest::{format_table, run_all};
use basin_core::teich::teich_distance;
use basin_core::tree::{build_tree_with, TreeOptions, DEFAULT_GRID, MAX_GRID};
use basin_core::{Complex64, Polynomial};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

/// Potential theory and basin conjugacy tools for monic centered polynomials.
#[derive(Debug, Parser)]
#[command(name = "basin", version)]
struct Cli {
    /// Write the artifact here instead of standard output.
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
    /// Seed for every sampling routine.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct PolyArg {
    /// Polynomial descriptor {"degree": d, "coefficients": [[re, im], ...]}, a_0 first.
    #[arg(long)]
    poly: PathBuf,
}

#[derive(Debug, Args)]
struct LevelArgs {
    /// Absolute level L.
    #[arg(long, conflicts_with = "factor", required_unless_present = "factor")]
    level: Option<f64>,
    /// Level as a multiple of the fundamental level M.
    #[arg(long)]
    factor: Option<f64>,
    /// Start point re,im; defaults to a point on the ray of angle 0.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    start: Option<Complex64>,
}

#[derive(Debug, Args)]
struct RasterArgs {
    /// Viewport x0,x1,y0,y1.
    #[arg(long, allow_hyphen_values = true)]
    window: Window,
    /// Image width in pixels; height follows the aspect ratio.
    #[arg(long, default_value_t = 512)]
    px: usize,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Green value, certified error and gradient at points.
    Green {
        #[command(flatten)]
        poly: PolyArg,
        /// Point re,im (repeatable).
        #[arg(long = "point", required = true, value_parser = parse_point, allow_hyphen_values = true)]
        points: Vec<Complex64>,
    },
    /// Critical escape levels {"M", "levels", "N"}.
    Levels {
        #[command(flatten)]
        poly: PolyArg,
    },
    /// Trace one component of a level curve.
    Curve {
        #[command(flatten)]
        poly: PolyArg,
        #[command(flatten)]
        level: LevelArgs,
    },
    /// Integral of |ω| along a traced level curve.
    Mass {
        #[command(flatten)]
        poly: PolyArg,
        #[command(flatten)]
        level: LevelArgs,
    },
    /// Truncated metrized tree of level-set components.
    Tree {
        #[command(flatten)]
        poly: PolyArg,
        #[arg(long, default_value_t = 5)]
        depth: usize,
        /// Grid cells along each vertex box.
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
        /// Emit Graphviz DOT instead of JSON.
        #[arg(long)]
        dot: bool,
    },
    /// Per-annulus and minimal dilatation of a class {"S": [...], "T": [...]}.
    Dilatation {
        #[command(flatten)]
        poly: PolyArg,
        #[arg(long)]
        class: PathBuf,
        /// Tolerance for the uniqueness predicate.
        #[arg(long, default_value_t = UNIQUENESS_TOLERANCE)]
        tol: f64,
    },
    /// PPM of |μ| for the extremal model of a class.
    MuField {
        #[command(flatten)]
        poly: PolyArg,
        #[arg(long)]
        class: PathBuf,
        #[command(flatten)]
        raster: RasterArgs,
    },
    /// Teichmüller distance between two classes over the same polynomial.
    TeichDist {
        #[command(flatten)]
        poly: PolyArg,
        #[arg(long, num_args = 2, required = true, value_names = ["FIRST", "SECOND"])]
        class: Vec<PathBuf>,
    },
    /// PPM of the Green function.
    Render {
        #[command(flatten)]
        poly: PolyArg,
        #[command(flatten)]
        raster: RasterArgs,
    },
    /// Run the reduced invariant suites.
    Selftest,
}

fn parse_point(s: &str) -> Result<Complex64, String> {
    let parts: Vec<&str> = s.split(',').collect();
    match parts[..] {
        [re, im] => {
            let re = re.trim().parse::<f64>().map_err(|e| e.to_string())?;
            let im = im.trim().parse::<f64>().map_err(|e| e.to_string())?;
            Ok(Complex64::new(re, im))
        }
        _ => Err(format!("expected re,im, got {s:?}")),
    }
}

enum Failure {
    Domain(basin_core::Error),
    Io(String),
    Parse(String),
    Selftest(usize),
}

impl From<basin_core::Error> for Failure {
    fn from(e: basin_core::Error) -> Self {
        Failure::Domain(e)
    }
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: &'a str,
    message: String,
}

impl Failure {
    fn report(&self) -> (ExitCode, ErrorReport<'_>) {
        match self {
            Failure::Domain(e) => (
                ExitCode::from(2),
                ErrorReport {
                    error: e.code(),
                    message: e.to_string(),
                },
            ),
            Failure::Selftest(n) => (
                ExitCode::from(2),
                ErrorReport {
                    error: "SELFTEST_FAILED",
                    message: format!("{n} suite(s) failed"),
                },
            ),
            Failure::Io(m) => (
                ExitCode::from(1),
                ErrorReport {
                    error: "IO_ERROR",
                    message: m.clone(),
                },
            ),
            Failure::Parse(m) => (
                ExitCode::from(1),
                ErrorReport {
                    error: "PARSE_ERROR",
                    message: m.clone(),
                },
            ),
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))
}

fn load_poly(arg: &PolyArg) -> Result<Polynomial, Failure> {
    let desc: PolynomialDescriptor = read_json(&arg.poly)?;
    Ok(Polynomial::try_from(desc)?)
}

fn load_class(p: &Polynomial, path: &Path) -> Result<ConjugacyClass, Failure> {
    let desc: ClassDescriptor = read_json(path)?;
    Ok(ConjugacyClass::from_descriptor(
        escape_level_data(p)?,
        desc,
    )?)
}

fn json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    text.into_bytes()
}

#[derive(Serialize)]
struct GreenRecord {
    point: Complex64,
    value: f64,
    certified_error: f64,
    iterations: usize,
    escaped: bool,
    gradient: Option<Complex64>,
}

#[derive(Serialize)]
struct LevelsRecord {
    #[serde(rename = "M")]
    m: f64,
    levels: Vec<f64>,
    #[serde(rename = "N")]
    n: usize,
}

#[derive(Serialize)]
struct MassRecord {
    level: f64,
    mass: f64,
    vertices: usize,
    closed: bool,
}

#[derive(Serialize)]
struct DistanceRecord {
    distance: f64,
}

fn resolve_level(p: &Polynomial, args: &LevelArgs) -> Result<(f64, Complex64), Failure> {
    let level = match (args.level, args.factor) {
        (Some(l), _) => l,
        (None, Some(f)) => f * escape_level_data(p)?.max_critical(),
        (None, None) => unreachable!("clap requires one of --level and --factor"),
    };
    let start = match args.start {
        Some(z) => z,
        None => level_seed(p, level, 0.0)?,
    };
    Ok((level, start))
}

fn execute(cli: &Cli) -> Result<Vec<u8>, Failure> {
    match &cli.command {
        Command::Green { poly, points } => {
            let p = load_poly(poly)?;
            let records: Vec<GreenRecord> = points
                .iter()
                .map(|&z| {
                    let g = green_value(&p, z);
                    GreenRecord {
                        point: z,
                        value: g.value,
                        certified_error: g.certified_error,
                        iterations: g.iterations,
                        escaped: g.escaped,
                        gradient: green_gradient(&p, z).ok(),
                    }
                })
                .collect();
            Ok(json(&records))
        }
        Command::Levels { poly } => {
            let levels = escape_level_data(&load_poly(poly)?)?;
            Ok(json(&LevelsRecord {
                m: levels.max_critical(),
                levels: levels.levels().to_vec(),
                n: levels.annulus_count(),
            }))
        }
        Command::Curve { poly, level } => {
            let p = load_poly(poly)?;
            let (level, start) = resolve_level(&p, level)?;
            Ok(json(&trace_level_curve(&p, level, start)?))
        }
        Command::Mass { poly, level } => {
            let p = load_poly(poly)?;
            let (level, start) = resolve_level(&p, level)?;
            let curve = trace_level_curve(&p, level, start)?;
            Ok(json(&MassRecord {
                level,
                mass: omega_arc_integral(&p, &curve)?,
                vertices: curve.points.len(),
                closed: curve.closed,
            }))
        }
        Command::Tree {
            poly,
            depth,
            grid,
            dot,
        } => {
            let p = load_poly(poly)?;
            let options = TreeOptions {
                grid: *grid,
                max_grid: MAX_GRID.max(*grid),
                ..TreeOptions::default()
            };
            let tree = build_tree_with(&p, *depth, &options)?;
            Ok(if *dot {
                tree.to_dot().into_bytes()
            } else {
                json(&tree)
            })
        }
        Command::Dilatation { poly, class, tol } => {
            let p = load_poly(poly)?;
            Ok(json(&load_class(&p, class)?.minimal_dilatation(*tol)))
        }
        Command::MuField {
            poly,
            class,
            raster,
        } => {
            let p = load_poly(poly)?;
            let model = load_class(&p, class)?.extremal_model();
            Ok(render_dilatation(&p, &model, &raster.window, raster.px)?.to_ppm())
        }
        Command::TeichDist { poly, class } => {
            let p = load_poly(poly)?;
            let a = load_class(&p, &class[0])?;
            let b = load_class(&p, &class[1])?;
            Ok(json(&DistanceRecord {
                distance: teich_distance(&a, &b)?,
            }))
        }
        Command::Render { poly, raster } => {
            let p = load_poly(poly)?;
            Ok(render_green(&p, &raster.window, raster.px)?.to_ppm())
        }
        Command::Selftest => {
            let outcomes = run_all(cli.seed);
            let table = format_table(&outcomes);
            let failed = outcomes.iter().filter(|o| !o.passed).count();
            if failed > 0 {
                eprint!("{table}");
                return Err(Failure::Selftest(failed));
            }
            Ok(table.into_bytes())
        }
    }
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match out {
        Some(path) => {
            fs::write(path, bytes).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
        }
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| Failure::Io(format!("stdout: {e}"))),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli).and_then(|bytes| emit(cli.out.as_deref(), &bytes)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            let (code, report) = failure.report();
            eprintln!("{}", serde_json::to_string(&report).expect("serializable"));
            code
        }
    }
}
