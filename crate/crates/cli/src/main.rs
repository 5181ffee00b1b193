use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::json;

use kcut_core::bench::{bench_run, BenchConfig};
use kcut_core::certify::{certify, Theorem};
use kcut_core::exact::{branch_and_bound_opt, brute_force_opt};
use kcut_core::formulations::{Formulation, MisdoVariant};
use kcut_core::graph::{parse_edge_list, Graph};
use kcut_core::linalg::SymMatrix;
use kcut_core::model::{export_lp_format, export_sdpa_format};
use kcut_core::polytopes::{
    lift_y, lift_z, lift_zbar, lift_zmatrix, member_emilo, member_misdo, member_vmilo, sample_fractional_x,
    CliqueCheck, FractionalAssignment, Membership,
};
use kcut_core::relaxations::{emilo_relax_bound, remilo_relax_bound, vmilo_relax_bound_lp};

/// Exit status when a certification or membership check fails.
const CHECK_FAILED: u8 = 2;
const MEMBER_TOL: f64 = 1e-9;
const PSD_TOL: f64 = 1e-8;

#[derive(Parser)]
#[command(name = "kcut", version, about = "Max k-cut formulations, relaxation bounds and certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolveMethod {
    Bnb,
    Brute,
}

#[derive(Clone, Copy, ValueEnum)]
enum RelaxMethod {
    Vmilo,
    Emilo,
    Remilo,
}

#[derive(Clone, Copy, ValueEnum)]
enum LiftKind {
    Y,
    Z,
    Zmatrix,
    Zbar,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportFormat {
    Lp,
    Sdpa,
}

#[derive(Subcommand)]
enum Command {
    /// Solve max k-cut exactly.
    Solve {
        file: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum, default_value = "bnb")]
        method: SolveMethod,
        /// Seconds before branch-and-bound stops with a bracket.
        #[arg(long, default_value_t = 60.0)]
        time_cap: f64,
    },
    /// Bound max k-cut by an LP relaxation.
    Relax {
        file: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum)]
        method: RelaxMethod,
        /// Separate clique rows on demand (emilo only).
        #[arg(long)]
        lazy: bool,
    },
    /// Lift random fractional assignments and test membership in a relaxation.
    LiftCheck {
        file: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum, default_value = "y")]
        lift: LiftKind,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Check this lifted point (JSON) instead of sampled lifts.
        #[arg(long)]
        point: Option<PathBuf>,
    },
    /// Check a relaxation-strength result numerically; exits 2 on failure.
    Certify {
        #[arg(long)]
        theorem: String,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the JSON report here.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a benchmark described by a JSON config.
    Bench {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write a formulation in LP or SDPA sparse format.
    Export {
        file: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        formulation: String,
        #[arg(long, value_enum, default_value = "lp")]
        format: ExportFormat,
        #[arg(short, long)]
        output: PathBuf,
    },
}

fn read_graph(path: &Path) -> Result<Graph> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_edge_list(&text).with_context(|| format!("parsing {}", path.display()))
}

fn print_text(text: &str) -> Result<()> {
    let mut out = io::stdout().lock();
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn print_json(v: &serde_json::Value) -> Result<()> {
    print_text(&(serde_json::to_string_pretty(v)? + "\n"))
}

fn solve(file: &Path, k: usize, method: SolveMethod, time_cap: f64) -> Result<()> {
    let g = read_graph(file)?;
    let out = match method {
        SolveMethod::Brute => {
            let (value, p) = brute_force_opt(&g, k)?;
            json!({"method": "brute", "value": value, "status": "proved", "upper_bound": value, "partitioning": p.assignment()})
        }
        SolveMethod::Bnb => {
            if !(time_cap > 0.0 && time_cap.is_finite()) {
                bail!("--time-cap must be positive");
            }
            let r = branch_and_bound_opt(&g, k, Duration::from_secs_f64(time_cap))?;
            json!({
                "method": "bnb",
                "value": r.value,
                "status": r.status,
                "upper_bound": r.upper_bound,
                "nodes": r.nodes,
                "partitioning": r.partitioning.assignment(),
            })
        }
    };
    print_json(&out)
}

fn relax(file: &Path, k: usize, method: RelaxMethod, lazy: bool) -> Result<()> {
    let g = read_graph(file)?;
    let (name, b) = match method {
        RelaxMethod::Vmilo => ("vmilo", vmilo_relax_bound_lp(&g, k)?),
        RelaxMethod::Emilo => ("emilo", emilo_relax_bound(&g, k, lazy)?),
        RelaxMethod::Remilo => ("remilo", remilo_relax_bound(&g, k)?),
    };
    print_json(&json!({
        "method": name,
        "bound": b.value,
        "converged": b.converged,
        "rounds": b.rounds,
        "iterations": b.iterations,
    }))
}

/// A point given directly in lifted coordinates. Which fields are needed
/// depends on the lift: `x` and `y`, `z`, or `matrix`.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GivenPoint {
    x: Option<Vec<Vec<f64>>>,
    y: Option<Vec<f64>>,
    z: Option<Vec<f64>>,
    matrix: Option<Vec<Vec<f64>>>,
}

fn check_given(g: &Graph, k: usize, lift: LiftKind, path: &Path) -> Result<Membership> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let p: GivenPoint = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let need = |what: &str| anyhow!("point file lacks `{what}`");
    Ok(match lift {
        LiftKind::Y => {
            let x = FractionalAssignment::new(&p.x.ok_or_else(|| need("x"))?)?;
            if x.n() != g.n() || x.k() != k {
                bail!("x is {}x{}, expected {}x{k}", x.n(), x.k(), g.n());
            }
            member_vmilo(g, k, &x, &p.y.ok_or_else(|| need("y"))?, MEMBER_TOL)
        }
        LiftKind::Z => member_emilo(&p.z.ok_or_else(|| need("z"))?, g.n(), k, MEMBER_TOL, CliqueCheck::Enumerate),
        LiftKind::Zmatrix | LiftKind::Zbar => {
            let m = SymMatrix::from_rows(&p.matrix.ok_or_else(|| need("matrix"))?)?;
            let variant = if matches!(lift, LiftKind::Zmatrix) { MisdoVariant::I } else { MisdoVariant::II };
            member_misdo(&m, k, variant, PSD_TOL)
        }
    })
}

fn lift_check(file: &Path, k: usize, lift: LiftKind, samples: usize, seed: u64, point: Option<&Path>) -> Result<bool> {
    let g = read_graph(file)?;
    let n = g.n();
    if k < 2 {
        bail!("k must be at least 2");
    }
    if let Some(path) = point {
        let m = check_given(&g, k, lift, path)?;
        print_json(&json!({"member": m.member, "witness": m.witness}))?;
        return Ok(m.member);
    }
    let mut failed = 0;
    let mut first: Option<Membership> = None;
    for x in sample_fractional_x(n, k, seed, samples) {
        let m = match lift {
            LiftKind::Y => member_vmilo(&g, k, &x, &lift_y(&x, &g), MEMBER_TOL),
            LiftKind::Z => member_emilo(&lift_z(&x), n, k, MEMBER_TOL, CliqueCheck::Separate),
            LiftKind::Zmatrix => member_misdo(&lift_zmatrix(&x), k, MisdoVariant::I, PSD_TOL),
            LiftKind::Zbar => member_misdo(&lift_zbar(&x), k, MisdoVariant::II, PSD_TOL),
        };
        if !m.member {
            failed += 1;
            first.get_or_insert(m);
        }
    }
    print_json(&json!({"samples": samples, "failed": failed, "first_witness": first.and_then(|m| m.witness)}))?;
    Ok(failed == 0)
}

fn run_certify(theorem: &str, samples: usize, seed: u64, output: Option<&Path>) -> Result<bool> {
    let Some(t) = Theorem::parse(theorem) else {
        bail!("unknown theorem {theorem:?}; expected 1, 2, 3, 4 or lemma1");
    };
    let report = certify(t, samples, seed);
    let text = serde_json::to_string_pretty(&report)?;
    if let Some(path) = output {
        fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
    }
    print_text(&(text + "\n"))?;
    for c in report.checks.iter().filter(|c| !c.passed) {
        eprintln!("check failed: {}: {}", c.name, c.detail);
    }
    if report.failed > 0 {
        eprintln!("{} of {} sampled points failed", report.failed, report.samples);
    }
    Ok(report.ok())
}

fn bench(config: &Path) -> Result<()> {
    let text = fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
    let cfg: BenchConfig = serde_json::from_str(&text).with_context(|| format!("parsing {}", config.display()))?;
    let base = config.parent().unwrap_or(Path::new("."));
    let out = bench_run(&cfg, base)?;
    let write = |p: &Option<PathBuf>, body: &str| -> Result<bool> {
        let Some(p) = p else { return Ok(false) };
        let path = base.join(p);
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        Ok(true)
    };
    let bounds = out.bounds_csv()?;
    let summary = out.summary_csv()?;
    let wrote_bounds = write(&cfg.output.csv, &bounds)?;
    write(&cfg.output.json, &serde_json::to_string_pretty(&out)?)?;
    let wrote_summary = write(&cfg.output.summary_csv, &summary)?;
    if !wrote_bounds {
        print_text(&bounds)?;
    }
    if !wrote_summary {
        print_text(&summary)?;
    }
    for r in &out.reports {
        for m in r.methods.iter().filter(|m| m.note.is_some()) {
            eprintln!("{} k={} {}: {}", r.instance, r.k, m.method.name(), m.note.as_deref().unwrap_or(""));
        }
    }
    Ok(())
}

fn export(file: &Path, k: usize, formulation: &str, format: ExportFormat, output: &Path) -> Result<()> {
    let Some(f) = Formulation::parse(formulation) else {
        bail!("unknown formulation {formulation:?}");
    };
    let g = read_graph(file)?;
    let model = f.build(&g, k)?;
    let text = match format {
        ExportFormat::Lp => export_lp_format(&model)?,
        ExportFormat::Sdpa => export_sdpa_format(&model)?,
    };
    fs::write(output, text).with_context(|| format!("writing {}", output.display()))
}

fn main() -> Result<ExitCode> {
    let ok = match Cli::parse().command {
        Command::Solve { file, k, method, time_cap } => solve(&file, k, method, time_cap).map(|()| true)?,
        Command::Relax { file, k, method, lazy } => relax(&file, k, method, lazy).map(|()| true)?,
        Command::LiftCheck {
            file,
            k,
            lift,
            samples,
            seed,
            point,
        } => lift_check(&file, k, lift, samples, seed, point.as_deref())?,
        Command::Certify { theorem, samples, seed, output } => run_certify(&theorem, samples, seed, output.as_deref())?,
        Command::Bench { config } => bench(&config).map(|()| true)?,
        Command::Export { file, k, formulation, format, output } => {
            export(&file, k, &formulation, format, &output).map(|()| true)?
        }
    };
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(CHECK_FAILED) })
}
