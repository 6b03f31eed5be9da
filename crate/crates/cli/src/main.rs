//! Batch front end: each subcommand builds a lattice, runs one pipeline and
//! writes a deterministic JSON (or CSV) report.
//!
//! Exit status: 0 success, 1 invariant violation or failed check, 2 input error.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use isoforge::geometry::minkowski_constant;
use isoforge::graph::{neighbor_fan, subset_view, VertexSet};
use isoforge::isoperimetry::{iso_constants, scan, triangular_census, MAX_N_CAP};
use isoforge::lattices::{generate, product, reference_subset, subdivide, LatticeBundle, LatticeKind, ReferenceKind, Subdivision};
use isoforge::pde::{laplacian, neumann_solve, optimal_constant, Rhs, DEFAULT_SELECTION_CAP};
use isoforge::subdifferential::{chain_report, target_polytope, ChainOptions};
use isoforge::transport::{aleksandrov_on_closure, fit_equal_volumes, verify_sufficiency};
use isoforge::{round_json, Error};

#[derive(Parser, Debug)]
#[command(name = "iso-forge", version, about = "Sharp discrete isoperimetric constants on lattice graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// grid[:λ1,..], honeycomb[:m11,m12,m21,m22], triangular, bcc, fcc[:ell1], A*B (product), sub:A (subdivision)
    #[arg(long, global = true, default_value = "honeycomb")]
    lattice: String,

    /// Lattice window: translations in [-(w+1), w+1]^d.
    #[arg(long, global = true)]
    window: Option<usize>,

    #[arg(long, global = true, default_value_t = 6)]
    max_n: usize,

    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Report path; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Residual tolerance for the Neumann and transport checks.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol_geom: f64,

    #[arg(long, global = true, default_value_t = DEFAULT_SELECTION_CAP)]
    selection_cap: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Debug, clap::Args)]
struct OmegaArgs {
    /// Vertex ids of Ω, comma separated.
    #[arg(long, value_delimiter = ',')]
    omega: Option<Vec<usize>>,

    /// Use the lattice's reference subset of this size parameter.
    #[arg(long, default_value_t = 1)]
    reference_k: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Minkowski constant of a fan ("x,y;x,y;...") or of the lattice's central neighbor fan.
    Minkowski {
        #[arg(long)]
        fan: Option<String>,
    },
    /// Neumann problem on Ω with the balanced right-hand side.
    Neumann {
        #[command(flatten)]
        omega: OmegaArgs,
        /// Also compute the optimal constant C(g,Ω) over boundary selections.
        #[arg(long)]
        optimal: bool,
    },
    /// Subdifferential chain for the Neumann solution on Ω.
    Chain {
        #[command(flatten)]
        omega: OmegaArgs,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
    /// Exhaustive isoperimetric scan over connected subsets.
    Scan,
    /// Equal-volume transport fit of Ω's sites into H_g, with the chain of its Aleksandrov solution.
    OtFit {
        #[command(flatten)]
        omega: OmegaArgs,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
    /// Triangular-lattice census of a union of triangles.
    Census {
        #[arg(long)]
        hex_k: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        omega: Option<Vec<usize>>,
    },
    /// Sufficiency conditions and constants of a lattice.
    Verify,
}

/// Outcome of a command: the report, and whether every check passed.
struct Report {
    body: String,
    ok: bool,
}

fn parse_floats(s: &str) -> Result<Vec<f64>, Error> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::input(format!("not a number: {t:?}"))))
        .collect()
}

fn build_lattice(spec: &str, window: usize) -> Result<LatticeBundle, Error> {
    if let Some((a, b)) = spec.split_once('*') {
        return product(&build_lattice(a, window)?, &build_lattice(b, window)?);
    }
    if let Some(inner) = spec.strip_prefix("sub:") {
        return subdivide(&build_lattice(inner, window)?, &Subdivision::default());
    }
    let (name, args) = match spec.split_once(':') {
        Some((n, a)) => (n, Some(parse_floats(a)?)),
        None => (spec, None),
    };
    let kind = match (name, args) {
        ("grid", None) => LatticeKind::ProductGrid(vec![1.0, 1.0]),
        ("grid", Some(l)) => LatticeKind::ProductGrid(l),
        ("honeycomb", None) => LatticeKind::Honeycomb(None),
        ("honeycomb", Some(m)) if m.len() == 4 => LatticeKind::Honeycomb(Some([[m[0], m[1]], [m[2], m[3]]])),
        ("triangular", None) => LatticeKind::Triangular,
        ("bcc", None) => LatticeKind::Bcc,
        ("fcc", None) => LatticeKind::FccSubdivided { ell1: 1.0 },
        ("fcc", Some(l)) if l.len() == 1 => LatticeKind::FccSubdivided { ell1: l[0] },
        _ => return Err(Error::input(format!("unknown lattice {spec:?}"))),
    };
    generate(kind, window)
}

fn reference_kind(bundle: &LatticeBundle, k: usize) -> Result<ReferenceKind, Error> {
    match bundle.kind {
        LatticeKind::Honeycomb(_) => Ok(ReferenceKind::HexHoneycomb(k)),
        LatticeKind::Triangular => Ok(ReferenceKind::HexTriangular(k)),
        LatticeKind::Bcc => Ok(ReferenceKind::RhombicDodecaBcc(k)),
        _ => Err(Error::input(format!(
            "{} has no reference subset; pass --omega",
            bundle.kind.label()
        ))),
    }
}

fn choose_omega(bundle: &LatticeBundle, args: &OmegaArgs) -> Result<VertexSet, Error> {
    match &args.omega {
        Some(ids) => {
            let set: VertexSet = ids.iter().copied().collect();
            bundle.check_inside(&set)?;
            Ok(set)
        }
        None => reference_subset(bundle, reference_kind(bundle, args.reference_k)?),
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Value {
    let mut v = serde_json::to_value(value).expect("reports serialize");
    round_json(&mut v);
    v
}

fn pretty(v: Value) -> String {
    let mut s = serde_json::to_string_pretty(&v).expect("reports serialize");
    s.push('\n');
    s
}

fn execute(cli: &Cli) -> Result<Report, Error> {
    if !(cli.tol_geom > 0.0) {
        return Err(Error::input("--tol-geom must be positive"));
    }
    if cli.max_n == 0 || cli.max_n > MAX_N_CAP {
        return Err(Error::input(format!("--max-n must lie in 1..={MAX_N_CAP}")));
    }
    if cli.format == Format::Csv && !matches!(cli.command, Command::Scan) {
        return Err(Error::input("csv output is only available for scan"));
    }
    let window = cli.window.unwrap_or(4);
    match &cli.command {
        Command::Minkowski { fan } => {
            let vectors = match fan {
                Some(f) => f.split(';').map(parse_floats).collect::<Result<Vec<_>, _>>()?,
                None => {
                    let b = build_lattice(&cli.lattice, window)?;
                    neighbor_fan(&b.graph, b.center())?.vectors
                }
            };
            let sol = minkowski_constant(&vectors)?;
            Ok(Report { body: pretty(to_json(&sol)), ok: true })
        }
        Command::Neumann { omega, optimal } => {
            let b = build_lattice(&cli.lattice, window)?;
            let omega = choose_omega(&b, omega)?;
            let sol = neumann_solve(&b.graph, &omega, &Rhs::Balanced)?;
            let view = subset_view(&b.graph, &omega)?;
            let lap = laplacian(&b.graph, &omega, &sol.u)?;
            let bound = view.flux / omega.len() as f64 + 1e-9;
            let mut ok = sol.divergence_residual <= cli.tol_geom
                && sol.saturation_residual <= cli.tol_geom
                && lap.values().all(|&l| l <= bound);
            let mut report = json!({
                "lattice": b.kind.label(),
                "omega": omega,
                "flux": view.flux,
                "weighted_boundary": view.weighted_boundary,
                "solution": to_json(&sol),
                "laplacian": to_json(&lap),
            });
            if *optimal {
                let oc = optimal_constant(&b.graph, &omega, cli.selection_cap)?;
                ok &= oc.constant <= oc.upper_bound + 1e-9;
                report["optimal_constant"] = to_json(&oc);
            }
            round_json(&mut report);
            Ok(Report { body: pretty(report), ok })
        }
        Command::Chain { omega, samples } => {
            let b = build_lattice(&cli.lattice, window)?;
            let omega = choose_omega(&b, omega)?;
            let sol = neumann_solve(&b.graph, &omega, &Rhs::Balanced)?;
            let opts = ChainOptions { samples: *samples, ..ChainOptions::from_env() };
            let chain = chain_report(&b.graph, &omega, &sol.u, &opts)?;
            let mut report = json!({
                "lattice": b.kind.label(),
                "omega": omega,
                "seed": opts.seed,
                "chain": to_json(&chain),
            });
            round_json(&mut report);
            Ok(Report { body: pretty(report), ok: chain.monotone })
        }
        Command::Scan => {
            // Without an explicit window, grow it until the enumeration fits.
            let mut w = window;
            let r = loop {
                let b = build_lattice(&cli.lattice, w)?;
                match scan(&b, cli.max_n) {
                    Err(Error::Window(_)) if cli.window.is_none() && w < 12 => w += 1,
                    other => break other?,
                }
            };
            let ok = !r.sufficient || r.rows.iter().all(|row| row.holds);
            let body = match cli.format {
                Format::Csv => r.to_csv(),
                Format::Json => pretty(to_json(&r)),
            };
            Ok(Report { body, ok })
        }
        Command::OtFit { omega, samples } => {
            let b = build_lattice(&cli.lattice, window)?;
            let omega = choose_omega(&b, omega)?;
            let body = target_polytope(&b.graph, &omega)?;
            if !body.bounded {
                return Err(Error::input("H_g is unbounded for this Ω"));
            }
            let sites: Vec<Vec<f64>> = omega.iter().map(|&x| b.graph.coords(x).to_vec()).collect();
            let fit = fit_equal_volumes(&sites, &body)?;
            let u = aleksandrov_on_closure(&b.graph, &omega, &fit)?;
            let opts = ChainOptions { samples: *samples, ..ChainOptions::from_env() };
            let chain = chain_report(&b.graph, &omega, &u, &opts)?;
            let ok = fit.residual <= 1e-6 * body.volume && chain.monotone;
            let mut report = json!({
                "lattice": b.kind.label(),
                "omega": omega,
                "h_volume": body.volume,
                "iterations": fit.iterations,
                "residual": fit.residual,
                "weights": fit.diagram.weights,
                "volumes": fit.diagram.volumes,
                "u": to_json(&u),
                "chain": to_json(&chain),
            });
            round_json(&mut report);
            Ok(Report { body: pretty(report), ok })
        }
        Command::Census { hex_k, omega } => {
            let k = hex_k.unwrap_or(1);
            let b = build_lattice("triangular", cli.window.unwrap_or(4.max(k + 1)))?;
            let set: VertexSet = match omega {
                Some(ids) => ids.iter().copied().collect(),
                None => reference_subset(&b, ReferenceKind::HexTriangular(k))?,
            };
            let c = triangular_census(&b, &set)?;
            let (num, den) = c.ratio_parts();
            let mut report = to_json(&c);
            report["ratio"] = json!(num as f64 / den as f64);
            report["equality"] = json!(c.is_equality());
            report["dual_ok"] = json!(c.y_star * c.y_star >= 6 * c.x_star);
            round_json(&mut report);
            Ok(Report { body: pretty(report), ok: num >= 12 * den })
        }
        Command::Verify => {
            let b = build_lattice(&cli.lattice, window)?;
            let r = verify_sufficiency(&b);
            let constants = iso_constants(&b)?;
            let mut report = json!({
                "lattice": b.kind.label(),
                "passed": r.passed(),
                "first_failure": r.first_failure(),
                "C": constants.constant,
                "H_volume": constants.h_volume,
                "report": to_json(&r),
            });
            round_json(&mut report);
            Ok(Report { body: pretty(report), ok: r.passed() })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(j) = cli.jobs {
        if j == 0 {
            eprintln!("error: --jobs must be positive");
            return ExitCode::from(2);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .expect("thread pool is configured once");
    }
    let report = match execute(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(if e.is_input() { 2 } else { 1 });
        }
    };
    let written = match &cli.out {
        Some(path) => std::fs::write(path, &report.body),
        None => std::io::stdout().write_all(report.body.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("error: cannot write report: {e}");
        return ExitCode::from(2);
    }
    if report.ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
