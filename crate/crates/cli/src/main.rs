use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use mosaic_core::backend::{backend_from_env, SolverConfig};
use mosaic_core::metrics::metrics_report;
use mosaic_core::render::{export_gallery, render_map, OverlayStyle, RenderError};
use mosaic_core::setsystem::{write_set_system_csv, SetSystem};
use mosaic_core::solver::{run_variant, EmbeddingDocument, PipelineOptions, SolveError, SolveReport, Variant};
use mosaic_core::synth::{generate, Profile};
use mosaic_core::{
    build_grid, contract_indistinguishable, grid_size_for, parse_set_system, parse_set_system_json, pp_scores,
    GridKind, HostGrid, StyleSheet,
};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "mosaic", version, about = "Embed set systems into grid maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an embedding and write embedding.json and report.json.
    Embed(EmbedArgs),
    /// Render an embedding as SVG, optionally with an HTML gallery.
    Render(RenderArgs),
    /// Compute Polsby-Popper scores of an embedding.
    Metrics(MetricsArgs),
    /// Generate a synthetic set system.
    Synth(SynthArgs),
    /// Run MSP, MSE and MSEA on both grid kinds and tabulate the scores.
    Compare(CompareArgs),
}

#[derive(Args, Clone)]
struct InputArgs {
    /// Elements CSV (`id,label,base_set`) or a JSON set system.
    elements: PathBuf,
    /// Overlays CSV (`set,element_id`).
    overlays: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct SolveArgs {
    /// Relative optimality gap.
    #[arg(long, default_value_t = 0.005)]
    gap: f64,
    /// Maximum number of re-centering iterations.
    #[arg(long, default_value_t = 5)]
    iterations: usize,
    /// Time limit per solve in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct EmbedArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value = "hex")]
    grid: GridKind,
    #[arg(long, default_value = "mse")]
    variant: Variant,
    /// Grid dimensions as ROWSxCOLS or a single side length.
    #[arg(long)]
    grid_size: Option<String>,
    #[command(flatten)]
    solve: SolveArgs,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct RenderArgs {
    embedding: PathBuf,
    /// Comma-separated overlays to draw; all overlays by default.
    #[arg(long, value_delimiter = ',')]
    select: Option<Vec<String>>,
    #[arg(long, default_value = "boundary")]
    style: OverlayStyle,
    /// JSON style sheet overriding the defaults.
    #[arg(long)]
    style_file: Option<PathBuf>,
    /// Also write basemap.svg, per-overlay SVGs and gallery.html.
    #[arg(long)]
    gallery: bool,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct MetricsArgs {
    embedding: PathBuf,
    /// Solve report for wall times; defaults to report.json next to the embedding.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// bonn, vienna, parliament or random.
    #[arg(long, default_value = "bonn")]
    profile: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of overlays; the profile's count by default.
    #[arg(long)]
    overlays: Option<usize>,
    /// Element count for the random profile.
    #[arg(long)]
    elements: Option<usize>,
    /// Base-set count for the random profile.
    #[arg(long)]
    base_sets: Option<usize>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    solve: SolveArgs,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

enum Failure {
    Input(String),
    Infeasible(String),
    Solver(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Infeasible(_) => 3,
            Failure::Solver(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Infeasible(m) | Failure::Solver(m) => m,
        }
    }
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::Infeasible => Failure::Infeasible(e.to_string()),
            SolveError::Model(_) | SolveError::TooLarge { .. } => Failure::Input(e.to_string()),
            other => Failure::Solver(other.to_string()),
        }
    }
}

impl From<RenderError> for Failure {
    fn from(e: RenderError) -> Self {
        match e {
            RenderError::Io(_) => Failure::Solver(e.to_string()),
            other => Failure::Input(other.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn input_err(e: impl std::fmt::Display) -> Failure {
    Failure::Input(e.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, body: &str) -> Outcome {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Solver(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, body).map_err(|e| Failure::Solver(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable") + "\n"
}

fn load_system(input: &InputArgs) -> Result<SetSystem, Failure> {
    let first = read(&input.elements)?;
    let is_json = input.elements.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        return parse_set_system_json(&first).map_err(input_err);
    }
    let overlays = match &input.overlays {
        Some(p) => read(p)?,
        None => String::new(),
    };
    parse_set_system(&first, &overlays).map_err(input_err)
}

fn parse_grid_size(s: &str) -> Result<(u32, u32), Failure> {
    let bad = || Failure::Input(format!("grid size `{s}` is not ROWSxCOLS"));
    let parts: Vec<&str> = s.split(['x', 'X']).collect();
    let nums: Vec<u32> = parts.iter().map(|p| p.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?;
    match nums.as_slice() {
        [n] if *n > 0 => Ok((*n, *n)),
        [r, c] if *r > 0 && *c > 0 => Ok((*r, *c)),
        _ => Err(bad()),
    }
}

fn pipeline_options(args: &SolveArgs) -> Result<PipelineOptions, Failure> {
    if !(0.0..1.0).contains(&args.gap) {
        return Err(Failure::Input("--gap must lie in [0, 1)".into()));
    }
    if args.iterations == 0 {
        return Err(Failure::Input("--iterations must be at least 1".into()));
    }
    let time_limit = match args.time_limit {
        Some(t) if t > 0.0 => Some(Duration::from_secs_f64(t)),
        Some(_) => return Err(Failure::Input("--time-limit must be positive".into())),
        None => None,
    };
    Ok(PipelineOptions {
        max_iterations: args.iterations,
        solver: SolverConfig { relative_gap: args.gap, time_limit, seed: args.seed },
        ..Default::default()
    })
}

fn solve(
    sys: &SetSystem,
    grid: &HostGrid,
    variant: Variant,
    opts: &PipelineOptions,
) -> Result<(EmbeddingDocument, SolveReport), Failure> {
    let mut backend = backend_from_env().map_err(input_err)?;
    let cs = contract_indistinguishable(sys);
    let (emb, report) = run_variant(variant, &cs, grid, backend.as_mut(), opts)?;
    Ok((EmbeddingDocument::new(sys.clone(), grid, variant, emb), report))
}

fn cmd_embed(args: EmbedArgs) -> Outcome {
    let sys = load_system(&args.input)?;
    let opts = pipeline_options(&args.solve)?;
    let (rows, cols) = match &args.grid_size {
        Some(s) => parse_grid_size(s)?,
        None => grid_size_for(sys.elements().len()),
    };
    let grid = build_grid(args.grid, rows, cols).map_err(input_err)?;
    let (doc, report) = solve(&sys, &grid, args.variant, &opts)?;
    write(&args.out.join("embedding.json"), &to_json(&doc))?;
    write(&args.out.join("report.json"), &to_json(&report))?;
    println!(
        "{} on {:?} {}x{}: {} elements, {} iteration(s), objective {:.6}, gap {:.4}, {:.2}s",
        args.variant,
        args.grid,
        rows,
        cols,
        doc.embedding.assignment.len(),
        report.iterations.len(),
        report.final_objective,
        report.final_gap,
        report.total_wall_time_s
    );
    Ok(())
}

fn load_embedding(path: &Path) -> Result<(EmbeddingDocument, HostGrid), Failure> {
    let doc: EmbeddingDocument =
        serde_json::from_str(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let violations = doc.validate();
    if !violations.is_empty() {
        let lines: Vec<String> = violations.iter().map(|v| v.message.clone()).collect();
        return Err(Failure::Input(format!("invalid embedding:\n  {}", lines.join("\n  "))));
    }
    let grid = doc.grid.build().map_err(input_err)?;
    Ok((doc, grid))
}

fn cmd_render(args: RenderArgs) -> Outcome {
    let (doc, grid) = load_embedding(&args.embedding)?;
    let style = match &args.style_file {
        Some(p) => serde_json::from_str::<StyleSheet>(&read(p)?).map_err(input_err)?,
        None => StyleSheet::default(),
    };
    let selected =
        args.select.unwrap_or_else(|| doc.system.overlay_sets().map(|s| s.name.clone()).collect::<Vec<_>>());
    let map = render_map(&doc.embedding, &doc.system, &grid, &style, &selected, args.style)?;
    for w in &map.warnings {
        eprintln!("warning: {w}");
    }
    write(&args.out.join("map.svg"), &map.to_svg_string())?;
    if args.gallery {
        export_gallery(&doc.embedding, &doc.system, &grid, &style, &selected, args.style, &args.out)?;
    }
    Ok(())
}

fn cmd_metrics(args: MetricsArgs) -> Outcome {
    let (doc, grid) = load_embedding(&args.embedding)?;
    let report_path = args.report.clone().or_else(|| {
        let sibling = args.embedding.with_file_name("report.json");
        sibling.exists().then_some(sibling)
    });
    let report: Option<SolveReport> = match report_path {
        Some(p) => Some(serde_json::from_str(&read(&p)?).map_err(input_err)?),
        None => None,
    };
    let m = metrics_report(&doc.embedding, &doc.system, &grid, report.as_ref()).map_err(input_err)?;
    write(&args.out.join("metrics.json"), &to_json(&m))?;
    write(&args.out.join("metrics.csv"), &m.to_csv())?;
    println!("PP_C1 {:.4}  PP_C2 {:.4}  PP_C3 {:.4}", m.pp_c1, m.pp_c2, m.pp_c3);
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Outcome {
    let profile = if args.profile.eq_ignore_ascii_case("random") {
        let elements = args.elements.ok_or_else(|| input_err("random profile needs --elements"))?;
        let base_sets = args.base_sets.ok_or_else(|| input_err("random profile needs --base-sets"))?;
        if base_sets == 0 || elements < base_sets {
            return Err(input_err("need --elements ≥ --base-sets ≥ 1"));
        }
        Profile { elements, base_sets, overlays: args.overlays.unwrap_or(3) }
    } else {
        let p = Profile::named(&args.profile).ok_or_else(|| input_err(format!("unknown profile `{}`", args.profile)))?;
        args.overlays.map_or(p, |k| p.with_overlays(k))
    };
    let sys = generate(profile, args.seed);
    let (elements, overlays) = write_set_system_csv(&sys);
    write(&args.out.join("elements.csv"), &elements)?;
    write(&args.out.join("overlays.csv"), &overlays)?;
    println!(
        "{} elements, {} base sets, {} overlays",
        sys.elements().len(),
        sys.base_sets().count(),
        sys.overlay_sets().count()
    );
    Ok(())
}

#[derive(Serialize)]
struct CompareRow {
    variant: String,
    grid: String,
    pp_c1: Option<f64>,
    pp_c2: Option<f64>,
    pp_c3: Option<f64>,
    wall_time: Option<f64>,
    gap: Option<f64>,
    note: String,
}

fn compare_one(sys: &SetSystem, kind: GridKind, variant: Variant, opts: &PipelineOptions) -> CompareRow {
    let grid_name = format!("{kind:?}").to_lowercase();
    let failed = |note: String| CompareRow {
        variant: variant.to_string(),
        grid: grid_name.clone(),
        pp_c1: None,
        pp_c2: None,
        pp_c3: None,
        wall_time: None,
        gap: None,
        note,
    };
    let (rows, cols) = grid_size_for(sys.elements().len());
    let grid = match build_grid(kind, rows, cols) {
        Ok(g) => g,
        Err(e) => return failed(e.to_string()),
    };
    match solve(sys, &grid, variant, opts) {
        Ok((doc, report)) => match pp_scores(&doc.embedding, sys, &grid) {
            Ok(pp) => CompareRow {
                variant: variant.to_string(),
                grid: grid_name,
                pp_c1: Some(pp.pp_c1),
                pp_c2: Some(pp.pp_c2),
                pp_c3: Some(pp.pp_c3),
                wall_time: Some(report.total_wall_time_s),
                gap: Some(report.final_gap),
                note: if report.iterations.iter().any(|i| i.timed_out) { "time limit".into() } else { "ok".into() },
            },
            Err(e) => failed(e.to_string()),
        },
        Err(e) => failed(e.message().to_string()),
    }
}

fn cmd_compare(args: CompareArgs) -> Outcome {
    let sys = load_system(&args.input)?;
    let opts = pipeline_options(&args.solve)?;
    let configs: Vec<(GridKind, Variant)> = [GridKind::Hex, GridKind::Square]
        .into_iter()
        .flat_map(|k| [Variant::Msp, Variant::Mse, Variant::Msea].map(|v| (k, v)))
        .collect();
    let (sys, opts) = (&sys, &opts);
    let rows: Vec<CompareRow> = std::thread::scope(|s| {
        let handles: Vec<_> =
            configs.iter().map(|&(k, v)| s.spawn(move || compare_one(sys, k, v, opts))).collect();
        handles.into_iter().map(|h| h.join().expect("comparison worker panicked")).collect()
    });
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(r).map_err(|e| Failure::Solver(e.to_string()))?;
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| Failure::Solver(e.to_string()))?).unwrap();
    write(&args.out.join("comparison.csv"), &body)?;
    print!("{body}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Embed(a) => cmd_embed(a),
        Command::Render(a) => cmd_render(a),
        Command::Metrics(a) => cmd_metrics(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Compare(a) => cmd_compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
