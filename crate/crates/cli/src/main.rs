//! Command-line driver for the tower construction and its verification.
//!
//! Exit codes: 0 on success (and verification pass), 1 when verification
//! finds failures, 2 for usage, I/O, or corrupt-state errors.

mod render;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use treelike_core::construct::build_tower;
use treelike_core::exactnum::Quad;
use treelike_core::plcurve::PlanePath;
use treelike_core::state::{parse_state, serialize_tower, tower_digest, LoadedState};
use treelike_core::suite::{certificate_loop, run_suite, Side, SuiteConfig};
use treelike_core::treelike::{decide_polygonal_loop, Verdict};

#[derive(Parser)]
#[command(
    name = "treelike",
    about = "Build, verify, and render an exact tower of tree-factored plane curves",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the tower and write the state file.
    Build(BuildArgs),
    /// Run the exact verification suite against a state file.
    Verify(VerifyArgs),
    /// Render curves and trees from a state file as SVG.
    Render(RenderArgs),
    /// Decide whether a polygonal loop is tree-like.
    Decide(DecideArgs),
    /// Emit the tree-derived height function for a level's certificate loop.
    Heightfn(HeightArgs),
}

#[derive(Args)]
struct BuildArgs {
    /// Number of levels to build (≥ 1).
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u32).range(1..=14))]
    levels: u32,
    /// Output path for the state file.
    #[arg(long, default_value = "state.json")]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// State file produced by `build`.
    #[arg(long)]
    state: PathBuf,
    /// Fixed pair-grid refinement for all levels. Default policy: refine 1
    /// up to level 4, refine 0 above.
    #[arg(long)]
    refine: Option<u32>,
    /// Highest level to run the certificate pair grids at.
    #[arg(long, default_value_t = 6)]
    cert_levels: u32,
    /// Worker threads for the pair scans (fallback: TREELIKE_WORKERS).
    #[arg(long)]
    workers: Option<usize>,
    /// Where to write the JSON report (omit for stdout summary only).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    state: PathBuf,
    /// Level whose curves/trees to draw.
    #[arg(long, default_value_t = 2)]
    level: u32,
    /// Comma-separated subset of: alpha, beta, gamma (or gamma_n), trees.
    #[arg(long, default_value = "gamma", value_delimiter = ',')]
    curves: Vec<String>,
    /// Pixels per unit length.
    #[arg(long, default_value_t = 512, value_parser = clap::value_parser!(u32).range(1..))]
    scale: u32,
    #[arg(long, default_value = "figure.svg")]
    out: PathBuf,
}

#[derive(Args)]
struct DecideArgs {
    /// Loop file: JSON `{"breakpoints": [[param, {"x":…, "y":…}], …]}`.
    #[arg(long = "loop", value_name = "LOOP")]
    loop_file: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct HeightArgs {
    #[arg(long)]
    state: PathBuf,
    #[arg(long)]
    level: u32,
    /// Which curve family: "legs" (α side) or "hypotenuse" (β side).
    #[arg(long, default_value = "legs")]
    side: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Build(args) => cmd_build(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Render(args) => cmd_render(args),
        Command::Decide(args) => cmd_decide(args),
        Command::Heightfn(args) => cmd_heightfn(args),
    }
}

fn load_state(path: &PathBuf) -> Result<LoadedState> {
    let json = fs::read_to_string(path)
        .with_context(|| format!("cannot read state file {}", path.display()))?;
    let state = parse_state(&json).context("state file is invalid")?;
    if !state.digest_ok {
        eprintln!("note: state digest does not match its contents (modified state?)");
    }
    Ok(state)
}

fn write_or_print(out: &Option<PathBuf>, contents: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, contents)
            .with_context(|| format!("cannot write {}", path.display())),
        None => {
            println!("{contents}");
            Ok(())
        }
    }
}

fn cmd_build(args: BuildArgs) -> Result<ExitCode> {
    let tower = build_tower(args.levels).context("construction failed")?;
    let json = serialize_tower(&tower);
    fs::write(&args.out, &json)
        .with_context(|| format!("cannot write {}", args.out.display()))?;
    println!(
        "built {} levels → {} ({} bytes, digest {})",
        args.levels,
        args.out.display(),
        json.len(),
        tower_digest(&tower)
    );
    Ok(ExitCode::SUCCESS)
}

fn configure_workers(workers: Option<usize>) -> Result<()> {
    let n = workers.or_else(|| {
        std::env::var("TREELIKE_WORKERS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = n {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("worker pool already configured")?;
    }
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode> {
    configure_workers(args.workers)?;
    let state = load_state(&args.state)?;
    let mut cfg = SuiteConfig {
        cert_max_level: args.cert_levels,
        ..SuiteConfig::default()
    };
    if let Some(k) = args.refine {
        cfg.refine_low = k;
        cfg.refine_high = k;
    }
    let report = run_suite(&state.tower, &cfg).context("verification could not run")?;

    let line = |name: &str, pass: bool| {
        println!("{} {name}", if pass { "PASS" } else { "FAIL" });
    };
    line("tower hypotheses (1)-(7)", report.hypotheses.iter().all(|e| e.pass));
    line("curve gap bound", report.curve_gap.iter().all(|e| e.pass));
    line(
        "retraction displacement",
        report.retraction_displacement.iter().all(|e| e.pass),
    );
    line("edge isometry", report.edge_isometry.iter().all(|e| e.pass));
    line("counts and lengths", report.counts_lengths.iter().all(|e| e.pass));
    line("density", report.density.iter().all(|e| e.pass));
    line(
        "subtree embedding",
        report.subtree_embedding.iter().all(|e| e.pass),
    );
    line("containment", report.containment.iter().all(|e| e.pass));
    line("tree-like certificates", report.certificates.iter().all(|e| e.pass));
    line(
        "class consistency",
        report.class_consistency.iter().all(|e| e.pass),
    );
    line("simple-closed-curve refutation", report.refutation.pass);
    println!(
        "verdicts: α ~ γ_n: {}, β ~ γ̃_n: {}, α ~ β: {}",
        report.verdicts.alpha_vs_gamma,
        report.verdicts.beta_vs_gamma,
        report.verdicts.alpha_vs_beta
    );

    if let Some(out) = &args.out {
        let json = serde_json::to_string_pretty(&report)?;
        fs::write(out, json).with_context(|| format!("cannot write {}", out.display()))?;
        println!("report → {}", out.display());
    }
    Ok(if report.all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_render(args: RenderArgs) -> Result<ExitCode> {
    let state = load_state(&args.state)?;
    let idx = args.level as usize;
    if idx == 0 || idx > state.tower.len() {
        bail!(
            "level {} out of range; the state has levels 1..={}",
            args.level,
            state.tower.len()
        );
    }
    let mut want_curves = Vec::new();
    let mut want_trees = false;
    for c in &args.curves {
        match c.as_str() {
            "alpha" => want_curves.push(render::CurveKind::Alpha),
            "beta" => want_curves.push(render::CurveKind::Beta),
            "gamma" | "gamma_n" => want_curves.push(render::CurveKind::Gamma),
            "trees" => want_trees = true,
            other => bail!("unknown curve name {other:?}; expected alpha, beta, gamma, trees"),
        }
    }
    let svg = render::render(
        &state.tower[0],
        &state.tower[idx - 1],
        &want_curves,
        want_trees,
        args.scale,
    )?;
    fs::write(&args.out, svg)
        .with_context(|| format!("cannot write {}", args.out.display()))?;
    println!("figure → {}", args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_decide(args: DecideArgs) -> Result<ExitCode> {
    let json = fs::read_to_string(&args.loop_file)
        .with_context(|| format!("cannot read {}", args.loop_file.display()))?;
    let loop_path: PlanePath = serde_json::from_str(&json).context("invalid loop file")?;
    let decision = decide_polygonal_loop(&loop_path).context("loop rejected")?;
    let kind = match &decision.verdict {
        Verdict::TreeLike { .. } => "TreeLike",
        Verdict::NotTreeLike { .. } => "NotTreeLike",
        Verdict::Inconclusive { .. } => "Inconclusive",
    };
    println!("verdict: {kind}");
    let doc = serde_json::json!({
        "verdict": decision.verdict,
        "witness_tree": decision.witness_tree,
    });
    write_or_print(&args.out, &serde_json::to_string_pretty(&doc)?)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_heightfn(args: HeightArgs) -> Result<ExitCode> {
    let state = load_state(&args.state)?;
    let idx = args.level as usize;
    if idx == 0 || idx > state.tower.len() {
        bail!(
            "level {} out of range; the state has levels 1..={}",
            args.level,
            state.tower.len()
        );
    }
    let side = match args.side.as_str() {
        "legs" | "e" | "alpha" => Side::Legs,
        "hypotenuse" | "et" | "beta" => Side::Hypotenuse,
        other => bail!("unknown side {other:?}; expected legs or hypotenuse"),
    };
    let (loop_path, h) = certificate_loop(&state.tower[0], &state.tower[idx - 1], side)
        .context("could not assemble the certificate loop")?;
    let doc = serde_json::json!({
        "level": args.level,
        "side": args.side,
        "lipschitz": Quad::one(),
        "loop_breakpoints": loop_path.breakpoints().len(),
        "height": h,
    });
    write_or_print(&args.out, &serde_json::to_string_pretty(&doc)?)?;
    let peak = h
        .breakpoints()
        .iter()
        .map(|(_, v)| v)
        .fold(Quad::zero(), |acc, v| Quad::max(&acc, v));
    println!(
        "height function with {} breakpoints, peak {}",
        h.breakpoints().len(),
        peak
    );
    Ok(ExitCode::SUCCESS)
}
