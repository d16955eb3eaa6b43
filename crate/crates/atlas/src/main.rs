//! Command-line surface for batch analysis and cross-validation.
//!
//! Exit codes: 0 success, 1 validation failure, 2 infeasible presentation or
//! bad event address, 3 unclassifiable graph, 4 oracle domain error
//! (non-escaping points, unresolved grids).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use wander_atlas::{
    auto_base_level, crosscheck, default_threads, extract_atom_graph, points_to_csv,
    polylines_to_svg, trace_levels, CrosscheckError, HoloMap, Window,
};
use wander_atlas_core::{
    build_reeb, classify, decompose, export_dot, generate, validate, AtomGraph, GenerateError,
    MapSpec,
};

#[derive(Parser)]
#[command(name = "wander-atlas", version, about = "Atom-graph models of wandering regions")]
struct Cli {
    /// Worker cap for grid sampling (default: WANDER_ATLAS_THREADS or all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Materialize the atom graph of a map presentation.
    Generate {
        /// Map presentation (JSON: degree, label, events).
        spec: PathBuf,
        /// Generations beyond the deepest singular event.
        #[arg(long)]
        depth: u32,
        /// Output graph file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check every structural rule of a graph file.
    Validate {
        graph: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Classify the ideal boundary of a graph file.
    Classify {
        graph: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Export the oriented Reeb tree as DOT.
    Reeb {
        graph: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Numerical ground truth for concrete polynomial maps.
    Oracle {
        #[command(subcommand)]
        cmd: OracleCmd,
    },
    /// Compare a generated model against a numerical extraction.
    Crosscheck {
        spec: PathBuf,
        #[command(flatten)]
        map: MapArgs,
        /// Total materialized depth on both sides.
        #[arg(long)]
        depth: u32,
        /// Grid resolution per axis.
        #[arg(long, default_value_t = 2048)]
        grid: usize,
    },
}

#[derive(Subcommand)]
enum OracleCmd {
    /// Level coordinate tau at a point.
    Tau {
        #[command(flatten)]
        map: MapArgs,
        #[arg(allow_negative_numbers = true)]
        re: f64,
        #[arg(allow_negative_numbers = true)]
        im: f64,
    },
    /// All preimages of a point.
    Preimages {
        #[command(flatten)]
        map: MapArgs,
        #[arg(allow_negative_numbers = true)]
        re: f64,
        #[arg(allow_negative_numbers = true)]
        im: f64,
    },
    /// Neutral section of a point at depth n, with density diagnostics.
    Neutral {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long)]
        n: u32,
        #[arg(allow_negative_numbers = true)]
        re: f64,
        #[arg(allow_negative_numbers = true)]
        im: f64,
        /// Dump the points as CSV to this file.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Critical levels; with --trace, level-curve components at a level.
    Levels {
        #[command(flatten)]
        map: MapArgs,
        /// Trace the level curve tau = T instead of listing critical levels.
        #[arg(long, allow_negative_numbers = true)]
        trace: Option<f64>,
        #[arg(long, default_value_t = 1024)]
        grid: usize,
        /// Window half-size for tracing (default map-dependent).
        #[arg(long)]
        window: Option<f64>,
        /// Dump traced polylines as SVG.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Extract the atom graph of the map numerically.
    Extract {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long)]
        depth: u32,
        /// Base level (default: half a band below the first branch level).
        #[arg(long, allow_negative_numbers = true)]
        base: Option<f64>,
        #[arg(long, default_value_t = 2048)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct MapArgs {
    /// Map kind: z2, z3, zd (with --d), z2c (with --c-re/--c-im).
    #[arg(long)]
    map: String,
    /// Degree for --map zd.
    #[arg(long)]
    d: Option<u32>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    c_re: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    c_im: f64,
}

impl MapArgs {
    fn build(&self) -> Result<HoloMap, String> {
        match self.map.as_str() {
            "z2" => HoloMap::power(2).map_err(|e| e.to_string()),
            "z3" => HoloMap::power(3).map_err(|e| e.to_string()),
            "zd" => {
                let d = self.d.ok_or("--map zd requires --d")?;
                HoloMap::power(d).map_err(|e| e.to_string())
            }
            "z2c" => HoloMap::quadratic(Complex64::new(self.c_re, self.c_im))
                .map_err(|e| e.to_string()),
            other => Err(format!("unknown map kind '{other}' (use z2, z3, zd, z2c)")),
        }
    }
}

const EXIT_VALIDATION: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_UNCLASSIFIABLE: u8 = 3;
const EXIT_ORACLE: u8 = 4;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        // The sampler reads the environment on each call.
        std::env::set_var("WANDER_ATLAS_THREADS", n.to_string());
    }
    match run(cli.command) {
        Ok(code) => code,
        Err(Failure { code, message }) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure { code, message: message.into() }
    }
}

fn read_to_string(path: &PathBuf) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::new(EXIT_ORACLE, format!("cannot read {}: {e}", path.display())))
}

fn write_or_print(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::new(EXIT_ORACLE, format!("cannot write {}: {e}", path.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn load_graph(path: &PathBuf) -> Result<AtomGraph, Failure> {
    let text = read_to_string(path)?;
    AtomGraph::from_json(&text)
        .map_err(|e| Failure::new(EXIT_VALIDATION, format!("{}: {e}", path.display())))
}

fn run(command: Command) -> Result<ExitCode, Failure> {
    let threads = default_threads();
    match command {
        Command::Generate { spec, depth, out } => {
            let spec = MapSpec::from_json(&read_to_string(&spec)?)
                .map_err(|e| Failure::new(EXIT_INFEASIBLE, e))?;
            let graph = generate(&spec, depth).map_err(|e| {
                let code = match e {
                    GenerateError::InvalidDepth => EXIT_INFEASIBLE,
                    GenerateError::Infeasible { .. } | GenerateError::Address { .. } => {
                        EXIT_INFEASIBLE
                    }
                };
                Failure::new(code, e.to_string())
            })?;
            write_or_print(&out, &graph.to_json())?;
            if out.is_some() {
                println!(
                    "wrote {} atoms, {} circles (depth {})",
                    graph.atoms.len(),
                    graph.circles.len(),
                    graph.depth
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { graph, json } => {
            let graph = load_graph(&graph)?;
            let report = validate(&graph);
            if json {
                println!("{}", report.to_json());
            } else {
                for rule in &report.rules {
                    let status = if rule.passed { "pass" } else { "FAIL" };
                    println!("{status}  {}", rule.name);
                    for offender in rule.offenders.iter().take(8) {
                        println!("        {offender}");
                    }
                }
            }
            if report.passed() {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(EXIT_VALIDATION))
            }
        }
        Command::Classify { graph, json } => {
            let graph = load_graph(&graph)?;
            let ends = classify(&graph)
                .map_err(|e| Failure::new(EXIT_UNCLASSIFIABLE, e.to_string()))?;
            if json {
                println!("{}", ends.to_json());
            } else {
                println!("attractor side: {:?}", ends.aib_class);
                println!("repeller side:  {:?}", ends.rib_class);
                println!(
                    "ends in window: {} attractor, {} repeller (depth {})",
                    ends.aib.len(),
                    ends.rib.len(),
                    ends.certified_depth
                );
                println!("branching by generation:");
                for (gen, count) in &ends.atoms_per_generation {
                    println!("  generation {gen:>4}: {count}");
                }
                if let Ok(d) = decompose(&graph) {
                    println!(
                        "trunk {} atoms, stump {:?}, root {} atoms, {} auxiliary trunks",
                        d.main_trunk.len(),
                        d.main_stump,
                        d.main_root.len(),
                        d.auxiliary_trunks.len()
                    );
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Reeb { graph, out } => {
            let graph = load_graph(&graph)?;
            let tree = build_reeb(&graph)
                .map_err(|e| Failure::new(EXIT_VALIDATION, e.to_string()))?;
            write_or_print(&out, &export_dot(&tree))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Oracle { cmd } => run_oracle(cmd, threads),
        Command::Crosscheck { spec, map, depth, grid } => {
            let spec = MapSpec::from_json(&read_to_string(&spec)?)
                .map_err(|e| Failure::new(EXIT_INFEASIBLE, e))?;
            let map = map.build().map_err(|e| Failure::new(EXIT_ORACLE, e))?;
            let outcome = crosscheck(&spec, &map, depth, grid, threads).map_err(|e| match e {
                CrosscheckError::Generate(g) => Failure::new(EXIT_INFEASIBLE, g.to_string()),
                CrosscheckError::Extract(x) => Failure::new(EXIT_ORACLE, x.to_string()),
                CrosscheckError::DepthTooShallow { .. } => {
                    Failure::new(EXIT_INFEASIBLE, e.to_string())
                }
            })?;
            println!(
                "generated: {} atoms ({}), extracted: {} atoms ({})",
                outcome.generated.atoms.len(),
                if outcome.generated_valid { "valid" } else { "INVALID" },
                outcome.extracted.atoms.len(),
                if outcome.extracted_valid { "valid" } else { "INVALID" },
            );
            if outcome.isomorphic && outcome.generated_valid && outcome.extracted_valid {
                println!("isomorphic: yes");
                Ok(ExitCode::SUCCESS)
            } else {
                println!("isomorphic: {}", if outcome.isomorphic { "yes" } else { "no" });
                Ok(ExitCode::from(EXIT_VALIDATION))
            }
        }
    }
}

fn run_oracle(cmd: OracleCmd, threads: usize) -> Result<ExitCode, Failure> {
    let oracle_err = |e: wander_atlas::HoloError| Failure::new(EXIT_ORACLE, e.to_string());
    match cmd {
        OracleCmd::Tau { map, re, im } => {
            let m = map.build().map_err(|e| Failure::new(EXIT_ORACLE, e))?;
            let t = m.tau(Complex64::new(re, im)).map_err(oracle_err)?;
            println!("{t:.9}");
            Ok(ExitCode::SUCCESS)
        }
        OracleCmd::Preimages { map, re, im } => {
            let m = map.build().map_err(|e| Failure::new(EXIT_ORACLE, e))?;
            for p in m.preimages(Complex64::new(re, im)) {
                println!("{:.12} {:.12}", p.re, p.im);
            }
            Ok(ExitCode::SUCCESS)
        }
        OracleCmd::Neutral { map, n, re, im, csv } => {
            let m = map.build().map_err(|e| Failure::new(EXIT_ORACLE, e))?;
            let section = m.neutral_section(Complex64::new(re, im), n).map_err(oracle_err)?;
            println!(
                "points: {}, tau: {:.9}, tau spread: {:.3e}, max angular gap: {:.9}",
                section.points.len(),
                section.base_tau,
                section.tau_spread,
                section.max_angular_gap
            );
            if let Some(path) = csv {
                write_or_print(&Some(path), &points_to_csv(&section.points))?;
            }
            Ok(ExitCode::SUCCESS)
        }
        OracleCmd::Levels { map, trace, grid, window, svg } => {
            let m = map.build().map_err(|e| Failure::new(EXIT_ORACLE, e))?;
            match trace {
                None => {
                    let levels = m.critical_levels().map_err(oracle_err)?;
                    if levels.is_empty() {
                        println!("no critical levels (branch points sit on the attractor/repeller)");
                    }
                    for level in levels {
                        println!("{level:.9}");
                    }
                    Ok(ExitCode::SUCCESS)
                }
                Some(t) => {
                    let half = window.unwrap_or_else(|| default_trace_half(&m, t));
                    let w = Window::square(half, grid);
                    let trace = trace_levels(&m, t, &w, threads)
                        .map_err(|e| Failure::new(EXIT_ORACLE, e.to_string()))?;
                    println!("components: {}", trace.components.len());
                    for warning in &trace.warnings {
                        eprintln!("warning: {warning}");
                    }
                    if let Some(path) = svg {
                        write_or_print(&Some(path), &polylines_to_svg(&trace.components, "black"))?;
                    }
                    Ok(ExitCode::SUCCESS)
                }
            }
        }
        OracleCmd::Extract { map, depth, base, grid, out } => {
            let m = map.build().map_err(|e| Failure::new(EXIT_ORACLE, e))?;
            let c = match base {
                Some(c) => c,
                None => auto_base_level(&m).map_err(oracle_err)?,
            };
            let graph = extract_atom_graph(&m, c, depth, grid, threads)
                .map_err(|e| Failure::new(EXIT_ORACLE, e.to_string()))?;
            let report = validate(&graph);
            write_or_print(&out, &graph.to_json())?;
            if out.is_some() {
                println!(
                    "extracted {} atoms, {} circles; validation: {}",
                    graph.atoms.len(),
                    graph.circles.len(),
                    if report.passed() { "pass" } else { "FAIL" }
                );
            }
            if report.passed() {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(EXIT_VALIDATION))
            }
        }
    }
}

/// Window big enough for the level curve `tau = t`.
fn default_trace_half(map: &HoloMap, t: f64) -> f64 {
    let d = map.degree() as f64;
    let g = d.powf(-t);
    match map.kind {
        wander_atlas::MapKind::Power(_) => (g.exp() * 1.15).max(2.0),
        wander_atlas::MapKind::QuadraticPlusC(c) => {
            let escape = 0.5 * (1.0 + (1.0 + 4.0 * c.norm()).sqrt()) + 0.15;
            (g.exp() * 1.25).max(escape)
        }
    }
}
