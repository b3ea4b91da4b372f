//! `causal-roofline` command line.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use super::artifacts::{
    roofline_plot_data, roofline_svg, write_comparison_csv, write_matrix_csv, write_pgm, write_roofline_points_csv,
    write_sim_csv,
};
use super::compare::{run_suite, Suite, Verdict};
use super::dataset::ReferenceDataset;
use super::format::fmt_sig;
use crate::bench::{
    d_state_sweep, fit_scaling_exponent, repetitions_from_env, run_sweep, write_records_csv, BenchRecord, ScalingField,
    DESK_SWEEP,
};
use crate::cost::{cost_descriptor, Counting, NpuDescriptor, RooflinePoint};
use crate::error::{Error, Result};
use crate::operators::{build_mask, AttentionConfig, MaskKind, Operator, DEFAULT_D_H, DEFAULT_D_STATE, DEFAULT_GAMMA};
use crate::sim::{chunk_plan, decompose, monolithic_peak_bytes, simulate, sweep_bottlenecks, CalibrationProfile};

#[derive(Debug, Parser)]
#[command(
    name = "causal-roofline",
    version,
    about = "Causal attention operators: benchmarks, roofline analysis and NPU simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Time operators on the host over a context-length sweep.
    Bench(BenchArgs),
    /// Simulate DPU/DMA/SHAVE shares and bottlenecks.
    Simulate(SimulateArgs),
    /// Roofline points, plot data and SVG for the reference measurements.
    Roofline(RooflineArgs),
    /// Write the six structured masks as PGM images and CSV grids.
    Masks(MasksArgs),
    /// Compare reference values with recomputed ones.
    Compare(CompareArgs),
    /// Plan chunked prefill against the scratchpad.
    ChunkPlan(ChunkPlanArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Output directory for artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct Shape {
    #[arg(long, default_value_t = DEFAULT_D_H)]
    d_h: usize,
    #[arg(long, default_value_t = DEFAULT_D_STATE)]
    d_state: usize,
    #[arg(long, default_value_t = DEFAULT_GAMMA)]
    gamma: f32,
}

impl Shape {
    fn config(&self, n: usize) -> AttentionConfig {
        AttentionConfig::new(n, self.d_h)
            .with_d_state(self.d_state)
            .with_gamma(self.gamma)
    }
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    shape: Shape,
    /// Operators to run (comma separated); all five by default.
    #[arg(long, value_delimiter = ',')]
    operator: Vec<Operator>,
    /// Context lengths (comma separated).
    #[arg(long, value_delimiter = ',')]
    n_sweep: Option<Vec<usize>>,
    /// Append n = 8192 to the default sweep.
    #[arg(long)]
    include_8192: bool,
    /// Timed repetitions; overrides the environment variable.
    #[arg(long)]
    reps: Option<usize>,
    /// Sweep d_state at fixed --n instead of sweeping n.
    #[arg(long, value_delimiter = ',')]
    d_state_sweep: Option<Vec<usize>>,
    /// Context length for --d-state-sweep.
    #[arg(long, default_value_t = 1024)]
    n: usize,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    shape: Shape,
    /// Calibration profile; the shipped profile by default.
    #[arg(long)]
    calib: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    operator: Vec<Operator>,
    #[arg(long, value_delimiter = ',')]
    n_sweep: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
struct RooflineArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    shape: Shape,
    /// Hardware descriptor; built-in defaults otherwise.
    #[arg(long)]
    npu: Option<PathBuf>,
    /// Context length for the analytic intensities.
    #[arg(long, default_value_t = 4096)]
    n: usize,
}

#[derive(Debug, Args)]
struct MasksArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    shape: Shape,
    #[arg(long, default_value_t = 64)]
    n: usize,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    /// identities, calibrated or all.
    #[arg(long, default_value = "all")]
    suite: Suite,
    #[arg(long)]
    npu: Option<PathBuf>,
    #[arg(long)]
    calib: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ChunkPlanArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 16384)]
    n: u64,
    #[arg(long, default_value_t = DEFAULT_D_H)]
    d_h: usize,
    #[arg(long, default_value_t = 32)]
    d_state: usize,
    #[arg(long)]
    npu: Option<PathBuf>,
}

fn load_npu(path: &Option<PathBuf>) -> Result<NpuDescriptor> {
    path.as_ref()
        .map_or_else(|| Ok(NpuDescriptor::default()), NpuDescriptor::load)
}

fn load_calib(path: &Option<PathBuf>) -> Result<CalibrationProfile> {
    path.as_ref()
        .map_or_else(|| Ok(CalibrationProfile::shipped()), CalibrationProfile::load)
}

fn operators_or_all(ops: &[Operator]) -> Vec<Operator> {
    if ops.is_empty() {
        Operator::ALL.to_vec()
    } else {
        ops.to_vec()
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn bench(args: &BenchArgs) -> Result<bool> {
    let reps = match args.reps {
        Some(r) => r,
        None => repetitions_from_env()?,
    };
    let mut all: Vec<BenchRecord> = Vec::new();
    for op in operators_or_all(&args.operator) {
        let outcome = match &args.d_state_sweep {
            Some(ds) => d_state_sweep(op, args.n, ds, &args.shape.config(args.n), reps, args.common.seed)?,
            None => {
                let mut ns = args.n_sweep.clone().unwrap_or_else(|| DESK_SWEEP.to_vec());
                if args.include_8192 && !ns.contains(&8192) {
                    ns.push(8192);
                }
                run_sweep(op, &ns, &args.shape.config(1), reps, args.common.seed)?
            }
        };
        for r in &outcome.records {
            println!(
                "{:<10} n={:<6} d_state={:<4} latency_ms={:<10} ops={:<12} gops={}",
                r.operator,
                r.n,
                r.d_state,
                fmt_sig(r.latency_ms),
                r.ops,
                fmt_sig(r.derived_gops)
            );
        }
        for (key, why) in &outcome.skipped {
            println!("{op:<10} skipped {key}: {why}");
        }
        if args.d_state_sweep.is_none() {
            if let (Ok((ls, lr2)), Ok((os, _))) = (
                fit_scaling_exponent(&outcome.records, ScalingField::Latency),
                fit_scaling_exponent(&outcome.records, ScalingField::Ops),
            ) {
                println!(
                    "{op:<10} latency slope {} (r2 {}), ops slope {}",
                    fmt_sig(ls),
                    fmt_sig(lr2),
                    fmt_sig(os)
                );
            }
        }
        all.extend(outcome.records);
    }
    let name = if args.d_state_sweep.is_some() {
        "d_state_sweep.csv"
    } else {
        "bench.csv"
    };
    write_records_csv(&all, create(&args.common.out, name)?)?;
    println!("wrote {}", args.common.out.join(name).display());
    Ok(true)
}

fn simulate_cmd(args: &SimulateArgs) -> Result<bool> {
    let calib = load_calib(&args.calib)?;
    let ns = args
        .n_sweep
        .clone()
        .unwrap_or_else(|| vec![128, 256, 512, 1024, 2048, 4096, 8192]);
    let mut results = Vec::new();
    let ops = if args.operator.is_empty() {
        vec![Operator::Fourier, Operator::Retentive]
    } else {
        args.operator.clone()
    };
    for op in ops {
        for &n in &ns {
            let r = simulate(&decompose(op, &args.shape.config(n))?, &calib)?;
            println!(
                "{:<10} n={:<6} DPU {:>6}%  DMA {:>6}%  SHAVE {:>6}%  -> {}",
                op,
                n,
                fmt_sig(r.shares[0]),
                fmt_sig(r.shares[1]),
                fmt_sig(r.shares[2]),
                r.bottleneck
            );
            results.push(r);
        }
        let sweep = sweep_bottlenecks(op, &ns, &args.shape.config(1), &calib)?;
        for (a, b, from, to) in sweep.transitions() {
            println!("{op:<10} transition {from} -> {to} between n={a} and n={b}");
        }
    }
    write_sim_csv(&results, create(&args.common.out, "simulate.csv")?)?;
    println!("wrote {}", args.common.out.join("simulate.csv").display());
    Ok(true)
}

fn roofline(args: &RooflineArgs) -> Result<bool> {
    let npu = load_npu(&args.npu)?;
    let data = ReferenceDataset::embedded()?;
    let mut points = Vec::new();
    for label in &data.figure_labels {
        let row = data.intensity_row(label.operator)?;
        let p = RooflinePoint::new(
            label.operator.name(),
            row.intensity,
            row.measured_gops,
            &npu,
            label.mode.parse()?,
        );
        println!(
            "{:<10} I={:<7} measured={:<6} bound={:<6} utilization={}% ({})",
            p.label,
            fmt_sig(p.intensity),
            fmt_sig(p.measured),
            fmt_sig(p.bound),
            fmt_sig(100.0 * p.utilization),
            p.mode
        );
        points.push(p);
    }
    let out = &args.common.out;
    write_roofline_points_csv(&points, create(out, "roofline_points.csv")?)?;
    create(out, "roofline_plot.csv")?.write_all(roofline_plot_data(&points, &npu).as_bytes())?;
    create(out, "roofline.svg")?.write_all(roofline_svg(&points, &npu).as_bytes())?;

    let mut w = csv::Writer::from_writer(create(out, "analytic_intensity.csv")?);
    w.write_record([
        "operator",
        "n",
        "d_h",
        "ops",
        "bytes",
        "intensity",
        "reference_intensity",
    ])?;
    for op in Operator::ALL {
        let c = cost_descriptor(op, &args.shape.config(args.n), Counting::Analytic)?;
        let reference = data.intensity_row(op).map(|r| fmt_sig(r.intensity)).unwrap_or_default();
        w.write_record([
            op.to_string(),
            args.n.to_string(),
            args.shape.d_h.to_string(),
            c.ops.to_string(),
            c.bytes.to_string(),
            fmt_sig(c.intensity),
            reference,
        ])?;
    }
    w.flush()?;
    println!(
        "wrote roofline_points.csv, roofline_plot.csv, roofline.svg, analytic_intensity.csv to {}",
        out.display()
    );
    Ok(true)
}

fn masks(args: &MasksArgs) -> Result<bool> {
    let cfg = args.shape.config(args.n);
    cfg.validate()?;
    for kind in MaskKind::ALL {
        let m = build_mask(kind, args.n, &cfg, args.common.seed)?;
        write_pgm(&m, create(&args.common.out, &format!("mask_{kind}.pgm"))?)?;
        write_matrix_csv(&m, create(&args.common.out, &format!("mask_{kind}.csv"))?)?;
    }
    println!(
        "wrote {} masks ({}x{}) to {}",
        MaskKind::ALL.len(),
        args.n,
        args.n,
        args.common.out.display()
    );
    Ok(true)
}

fn compare(args: &CompareArgs) -> Result<bool> {
    let rows = run_suite(
        args.suite,
        &ReferenceDataset::embedded()?,
        &load_npu(&args.npu)?,
        &load_calib(&args.calib)?,
    )?;
    for r in &rows {
        println!(
            "[{:<16}] {}: reference {} / artifact {}",
            r.verdict.name(),
            r.metric,
            r.reference,
            r.artifact
        );
    }
    write_comparison_csv(&rows, create(&args.common.out, "comparison.csv")?)?;
    let count = |v: Verdict| rows.iter().filter(|r| r.verdict == v).count();
    println!(
        "{} match, {} within tolerance, {} informational, {} fail",
        count(Verdict::Match),
        count(Verdict::WithinTolerance),
        count(Verdict::Informational),
        count(Verdict::Fail)
    );
    Ok(count(Verdict::Fail) == 0)
}

fn chunk(args: &ChunkPlanArgs) -> Result<bool> {
    let npu = load_npu(&args.npu)?;
    let cfg = AttentionConfig::new(1, args.d_h).with_d_state(args.d_state);
    let plan = chunk_plan(args.n, &cfg, npu.scratchpad_bytes)?;
    let mono = monolithic_peak_bytes(args.n, &cfg);
    println!(
        "n={} chunk={} chunks={} peak_bytes={} eviction_bytes={} monolithic_peak_bytes={} reduction={}x",
        args.n,
        plan.chunk_tokens,
        plan.n_chunks,
        plan.peak_bytes,
        plan.eviction_bytes,
        mono,
        fmt_sig(mono as f64 / plan.peak_bytes as f64)
    );
    let mut w = csv::Writer::from_writer(create(&args.common.out, "chunk_plan.csv")?);
    w.write_record([
        "n",
        "d_h",
        "d_state",
        "scratchpad_bytes",
        "chunk_tokens",
        "n_chunks",
        "peak_bytes",
        "eviction_bytes",
        "monolithic_peak_bytes",
    ])?;
    w.write_record(
        [
            args.n,
            args.d_h as u64,
            args.d_state as u64,
            npu.scratchpad_bytes,
            plan.chunk_tokens,
            plan.n_chunks,
            plan.peak_bytes,
            plan.eviction_bytes,
            mono,
        ]
        .map(|v| v.to_string()),
    )?;
    w.flush()?;
    Ok(true)
}

/// Parses `argv` and runs the subcommand. Returns the process exit status:
/// 0 on success, 1 on runtime errors or failed comparisons, 2 on usage errors.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let outcome = match &cli.command {
        Command::Bench(a) => bench(a),
        Command::Simulate(a) => simulate_cmd(a),
        Command::Roofline(a) => roofline(a),
        Command::Masks(a) => masks(a),
        Command::Compare(a) => compare(a),
        Command::ChunkPlan(a) => chunk(a),
    };
    match outcome {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::InvalidConfig(_) | Error::UnknownOperator(_)) {
                2
            } else {
                1
            }
        }
    }
}
