use std::fs;

use blaschke_sums::boundary::decimal_digits;
use blaschke_sums::harness::{
    pilot_disc, truncation_for, ProductGenerator, ScanDisc, PROPERTY_IDS,
};
use blaschke_sums::solver::{certify_with_shift, CertifyOutcome};
use blaschke_sums::{
    arc_image as image_of_arc, calibrate_constants, evaluate_boundary, iterate_boundary,
    parse_complex, Arc, BlaschkeProduct, BoundaryPoint, CalibrationBudget, CoefficientSequence,
    ConstantEstimates, Error, ExtF64, PaleyOptions, ScanOptions, SolverTrace, SuiteConfig,
};
use clap::Args;
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::config::{Common, Resolved};
use crate::output::{fmt_complex, fmt_num, print_digits, with_digits, Emitter};
use crate::CliError;

fn complex_arg(s: &str, what: &str) -> Result<Complex64, CliError> {
    parse_complex(s)
        .map_err(|_| CliError::contract(format!("{what}: cannot parse complex number '{s}'")))
}

fn turn_arg(s: &str, bits: u32) -> Result<BoundaryPoint, CliError> {
    BoundaryPoint::parse(s, bits)
        .map_err(|_| CliError::contract(format!("--turn: cannot parse turn '{s}'")))
}

fn complex_json(z: Complex64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

fn point_in_closed_disk(z: Complex64) -> Result<Complex64, CliError> {
    if z.norm().is_nan() || z.norm() > 1.0 + 1e-12 {
        return Err(CliError::contract(format!(
            "--point must satisfy |z| <= 1, got |z| = {}",
            z.norm()
        )));
    }
    Ok(z)
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[command(flatten)]
    common: Common,
    /// Point of the closed disk, e.g. "0.3+0.4i".
    #[arg(
        long,
        conflicts_with = "turn",
        required_unless_present = "turn",
        allow_hyphen_values = true
    )]
    point: Option<String>,
    /// Boundary point as a decimal turn.
    #[arg(long)]
    turn: Option<String>,
}

pub fn eval(args: EvalArgs) -> Result<(), CliError> {
    let mut run = args
        .common
        .resolve(json!({ "point": args.point, "turn": args.turn }))?;
    let f = run.product()?.clone();
    let (bits, body, line) = match (&args.point, &args.turn) {
        (Some(p), _) => {
            let bits = run.double_bits();
            let z = point_in_closed_disk(complex_arg(p, "--point")?)?;
            let w = f.evaluate(z)?;
            let line = fmt_complex(w, print_digits(bits));
            (
                bits,
                json!({ "point": complex_json(z), "value": complex_json(w) }),
                line,
            )
        }
        (None, Some(t)) => {
            let bits = run.bits_for(1)?;
            let xi = turn_arg(t, bits)?;
            let image = evaluate_boundary(&f, &xi)?;
            let line = image.to_decimal_string();
            let body = json!({ "turn": xi, "value_turn": image, "value": complex_json(image.to_complex()) });
            (bits, body, line)
        }
        (None, None) => unreachable!("clap requires --point or --turn"),
    };
    emit_trace(&run, "eval", bits, body)?;
    println!("{line}");
    Ok(())
}

fn emit_trace(run: &Resolved, command: &str, bits: u32, body: Value) -> Result<(), CliError> {
    let mut out = Emitter::new(&run.config.output_dir)?;
    out.json("trace.json", &with_digits(decimal_digits(bits), body))?;
    out.finish(command, &run.config, decimal_digits(bits))
}

#[derive(Args, Debug)]
pub struct IterateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(
        long,
        conflicts_with = "turn",
        required_unless_present = "turn",
        allow_hyphen_values = true
    )]
    point: Option<String>,
    #[arg(long)]
    turn: Option<String>,
    /// Number of iterations.
    #[arg(long, short)]
    n: usize,
    /// Record every iterate, not just the last.
    #[arg(long)]
    orbit: bool,
}

pub fn iterate(args: IterateArgs) -> Result<(), CliError> {
    let params =
        json!({ "point": args.point, "turn": args.turn, "n": args.n, "orbit": args.orbit });
    let mut run = args.common.resolve(params)?;
    let f = run.product()?.clone();
    let (bits, body, line) = match (&args.point, &args.turn) {
        (Some(p), _) => {
            let bits = run.double_bits();
            let z = point_in_closed_disk(complex_arg(p, "--point")?)?;
            let orbit = f.interior_orbit(z, args.n);
            let last = *orbit.last().expect("orbit includes the start");
            let mut body =
                json!({ "point": complex_json(z), "n": args.n, "value": complex_json(last) });
            if args.orbit {
                body["orbit"] = orbit.iter().map(|&w| complex_json(w)).collect();
            }
            (bits, body, fmt_complex(last, print_digits(bits)))
        }
        (None, Some(t)) => {
            let bits = run.bits_for(args.n)?;
            let xi = turn_arg(t, bits)?;
            let mut body = json!({ "turn": xi, "n": args.n });
            let last = if args.orbit {
                let mut orbit = vec![xi.clone()];
                for _ in 0..args.n {
                    let next = evaluate_boundary(&f, orbit.last().expect("nonempty"))?;
                    orbit.push(next);
                }
                let last = orbit.last().expect("nonempty").clone();
                body["orbit"] = serde_json::to_value(&orbit).expect("points serialize");
                last
            } else {
                iterate_boundary(&f, &xi, args.n)?
            };
            body["value"] = complex_json(last.to_complex());
            body["value_turn"] = serde_json::to_value(&last).expect("points serialize");
            (bits, body, last.to_decimal_string())
        }
        (None, None) => unreachable!("clap requires --point or --turn"),
    };
    emit_trace(&run, "iterate", bits, body)?;
    println!("{line}");
    Ok(())
}

#[derive(Args, Debug)]
pub struct ArcImageArgs {
    #[command(flatten)]
    common: Common,
    /// Center of the arc as a decimal turn.
    #[arg(long)]
    center: String,
    /// Length in turns; values like "1e-300" are accepted.
    #[arg(long)]
    length: String,
    #[arg(long, short)]
    n: usize,
}

pub fn arc_image(args: ArcImageArgs) -> Result<(), CliError> {
    let params = json!({ "center": args.center, "length": args.length, "n": args.n });
    let mut run = args.common.resolve(params)?;
    let f = run.product()?.clone();
    let bits = run.bits_for(args.n)?;
    let length = ExtF64::parse(&args.length)
        .ok_or_else(|| CliError::contract(format!("--length: cannot parse '{}'", args.length)))?;
    let arc = Arc::new(turn_arg(&args.center, bits)?, length)?;
    let result = image_of_arc(&f, &arc, args.n)?;
    let line = result.measure.to_decimal_string();
    let body = json!({
        "arc": arc,
        "n": args.n,
        "measure": result.measure,
        "measure_f64": result.measure.to_f64(),
        "image": result.image,
        "injective": result.injective,
    });
    emit_trace(&run, "arc-image", bits, body)?;
    println!("{line}");
    Ok(())
}

#[derive(Args, Debug)]
pub struct ConstantsArgs {
    #[command(flatten)]
    common: Common,
    /// Grid points for the scan of |f'| before refinement.
    #[arg(long, default_value_t = 4096)]
    grid: usize,
    /// Report the precision needed to iterate this many times.
    #[arg(long)]
    depth: Option<usize>,
}

pub fn constants(args: ConstantsArgs) -> Result<(), CliError> {
    let mut run = args
        .common
        .resolve(json!({ "grid": args.grid, "depth": args.depth }))?;
    let f = run.product()?.clone();
    let bits = match args.depth {
        Some(d) => run.bits_for(d)?,
        None => run.double_bits(),
    };
    let consts = f.expansion_constants(args.grid)?;
    let mut body = json!({
        "degree": f.degree(),
        "zeros_at_origin": f.zero_at_origin_count(),
        "expanding": f.check_expanding_contract().is_ok(),
        "expansion": consts,
    });
    if let Some(d) = args.depth {
        body["required_precision"] = json!({ "depth": d, "bits": f.required_precision(d, 53) });
    }
    emit_trace(&run, "constants", bits, body)?;
    let digits = print_digits(bits);
    println!(
        "k_min {} k_max {}",
        fmt_num(consts.k_min, digits),
        fmt_num(consts.k_max, digits)
    );
    Ok(())
}

#[derive(Args, Debug)]
pub struct CalibrateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 50)]
    starts: usize,
    #[arg(long, default_value_t = 40)]
    block_len: usize,
    #[arg(long, default_value_t = 200)]
    arcs: usize,
    #[arg(long, default_value_t = 128)]
    search_budget: usize,
}

pub fn calibrate(args: CalibrateArgs) -> Result<(), CliError> {
    let params = json!({
        "starts": args.starts, "block_len": args.block_len, "arcs": args.arcs, "search_budget": args.search_budget,
    });
    let mut run = args.common.resolve(params)?;
    let f = run.product()?.clone();
    let bits = run.double_bits();
    let budget = CalibrationBudget {
        seed: run.config.seed,
        starts: args.starts,
        block_len: args.block_len,
        arcs: args.arcs,
        search_budget: args.search_budget,
    };
    let consts = calibrate_constants(&f, &budget)?;
    let digits = print_digits(bits);
    println!(
        "epsilon_f {} c_f {} eta_f {} gamma0 {} delta1 {} T_gap {}",
        fmt_num(consts.epsilon_f, digits),
        fmt_num(consts.c_f, digits),
        fmt_num(consts.eta_f, digits),
        fmt_num(consts.gamma0, digits),
        fmt_num(consts.delta1, digits),
        consts.t_gap
    );
    let body = serde_json::to_value(&consts).expect("constants serialize");
    emit_trace(&run, "calibrate", bits, body)
}

/// Where the solver constants come from.
#[derive(Args, Debug)]
pub struct ConstantsSource {
    /// Constants JSON as written by `calibrate` (path or inline); calibrated
    /// from the seed when absent.
    #[arg(long)]
    constants: Option<String>,
}

impl ConstantsSource {
    fn load(&self, f: &BlaschkeProduct, seed: u64) -> Result<ConstantEstimates, CliError> {
        let Some(arg) = &self.constants else {
            return Ok(calibrate_constants(
                f,
                &CalibrationBudget {
                    seed,
                    ..Default::default()
                },
            )?);
        };
        let text = if arg.trim_start().starts_with('{') {
            arg.clone()
        } else {
            fs::read_to_string(arg)
                .map_err(|e| CliError::contract(format!("cannot read constants '{arg}': {e}")))?
        };
        let consts: ConstantEstimates = serde_json::from_str(&text)
            .map_err(|e| CliError::contract(format!("invalid constants JSON: {e}")))?;
        consts.validate()?;
        Ok(consts)
    }
}

fn sums_rows(trace: &SolverTrace, digits: usize) -> Vec<Vec<String>> {
    trace
        .partial_sum_log
        .iter()
        .map(|r| {
            vec![
                r.round.to_string(),
                r.depth.to_string(),
                fmt_num(r.value.re, digits),
                fmt_num(r.value.im, digits),
                serde_json::to_value(r.case)
                    .expect("case serializes")
                    .as_str()
                    .unwrap_or("")
                    .to_string(),
            ]
        })
        .collect()
}

const SUMS_HEADER: [&str; 5] = ["round", "depth", "re", "im", "case"];

/// Decimal digits of the witness, or of doubles without one.
fn trace_bits(trace: &SolverTrace) -> u32 {
    trace
        .witness
        .as_ref()
        .map(|w| w.bits())
        .unwrap_or(blaschke_sums::boundary::ACCURACY_BITS)
}

fn emit_solver(
    run: &mut Resolved,
    command: &str,
    consts: &ConstantEstimates,
    trace: &SolverTrace,
    extra: Value,
) -> Result<(), CliError> {
    let bits = match run.precision {
        crate::config::Precision::Bits(b) => b,
        crate::config::Precision::Auto => trace_bits(trace),
    };
    run.config.precision_bits = Value::from(bits);
    let digits = decimal_digits(bits);
    let mut body = json!({ "constants": consts, "trace": trace });
    if let (Value::Object(b), Value::Object(e)) = (&mut body, extra) {
        b.extend(e);
    }
    let mut out = Emitter::new(&run.config.output_dir)?;
    out.json("trace.json", &with_digits(digits, body))?;
    out.csv(
        "sums.csv",
        &SUMS_HEADER,
        &sums_rows(trace, print_digits(bits)),
    )?;
    out.finish(command, &run.config, digits)
}

#[derive(Args, Debug)]
pub struct LowerBoundArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    source: ConstantsSource,
    /// First index of the block.
    #[arg(long, default_value_t = 1)]
    m: usize,
    /// Last index of the block.
    #[arg(long)]
    n: usize,
    /// Long block length.
    #[arg(long, default_value_t = 8)]
    t: usize,
    /// Short block length.
    #[arg(long, default_value_t = 2)]
    t_short: usize,
    /// Starting point of the disk.
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    z: String,
    #[arg(long, default_value_t = 128)]
    budget: usize,
    /// Grid offset in cells.
    #[arg(long, default_value_t = 0.0)]
    shift: f64,
}

pub fn lower_bound(args: LowerBoundArgs) -> Result<(), CliError> {
    let params = json!({
        "m": args.m, "n": args.n, "t": args.t, "t_short": args.t_short, "z": args.z,
        "budget": args.budget, "shift": args.shift, "constants": args.source.constants,
    });
    let mut run = args.common.resolve(params)?;
    let f = run.product()?.clone();
    let a = run.coeffs()?.clone();
    let z = complex_arg(&args.z, "--z")?;
    let consts = args.source.load(&f, run.config.seed)?;
    let CertifyOutcome {
        point,
        ratio,
        trace,
    } = certify_with_shift(
        &f,
        &a,
        z,
        args.m,
        args.n,
        &consts,
        args.t,
        args.t_short,
        args.budget,
        args.shift,
    )?;
    let threshold = if args.t > 0 {
        consts.c_f * (1.0 - args.t_short as f64 / args.t as f64) / 2.0
    } else {
        0.0
    };
    let extra = json!({ "point": point, "ratio": ratio, "threshold": threshold, "meets_threshold": ratio >= threshold });
    let digits = print_digits(point.bits());
    println!(
        "ratio {} threshold {} turn {}",
        fmt_num(ratio, digits),
        fmt_num(threshold, digits),
        point.to_decimal_string()
    );
    emit_solver(&mut run, "lower-bound", &consts, &trace, extra)
}

/// Options shared by the target solver and the cluster follower.
#[derive(Args, Debug)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    #[arg(long, default_value_t = 200)]
    max_rounds: usize,
    /// Grid points per search chunk.
    #[arg(long, default_value_t = 64)]
    budget: usize,
    #[arg(long, default_value_t = 0.0)]
    shift: f64,
    /// Start from this turn instead of the best first-term point.
    #[arg(long)]
    initial_turn: Option<String>,
    #[arg(long, default_value_t = 33)]
    samples: usize,
    #[arg(long, default_value_t = 10)]
    stall_rounds: usize,
}

impl SolverArgs {
    fn params(&self) -> Value {
        json!({
            "tol": self.tol, "max_rounds": self.max_rounds, "budget": self.budget, "shift": self.shift,
            "initial_turn": self.initial_turn, "samples": self.samples, "stall_rounds": self.stall_rounds,
        })
    }

    fn options(&self) -> Result<PaleyOptions, CliError> {
        let initial_turn = self
            .initial_turn
            .as_deref()
            .map(|t| turn_arg(t, blaschke_sums::geometry::DEFAULT_ARC_BITS))
            .transpose()?;
        Ok(PaleyOptions {
            max_rounds: self.max_rounds,
            tol: self.tol,
            budget: self.budget,
            shift: self.shift,
            initial_turn,
            samples: self.samples,
            stall_rounds: self.stall_rounds,
        })
    }
}

/// Writes the trace even when the solver stalls, then reports the stall.
fn finish_solver(
    run: &mut Resolved,
    command: &str,
    consts: &ConstantEstimates,
    tol: f64,
    result: Result<SolverTrace, Error>,
) -> Result<(), CliError> {
    match result {
        Ok(trace) => {
            let digits = print_digits(trace_bits(&trace));
            let turn = trace
                .witness
                .as_ref()
                .map(|w| w.to_decimal_string())
                .unwrap_or_default();
            println!(
                "residual {} depth {} turn {}",
                fmt_num(trace.final_value, digits),
                trace.witness_depth,
                turn
            );
            let reached = trace.final_value <= tol;
            let status = if reached { "converged" } else { "not-reached" };
            emit_solver(run, command, consts, &trace, json!({ "status": status }))?;
            if !reached {
                return Err(CliError {
                    code: 3,
                    message: format!(
                        "tolerance {tol:e} not reached: residual {:e}",
                        trace.final_value
                    ),
                });
            }
            Ok(())
        }
        Err(Error::Stall {
            rounds,
            residual,
            trace,
        }) => {
            emit_solver(run, command, consts, &trace, json!({ "status": "stalled" }))?;
            Err(Error::Stall {
                rounds,
                residual,
                trace,
            }
            .into())
        }
        Err(e) => Err(e.into()),
    }
}

#[derive(Args, Debug)]
pub struct SolveTargetArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    source: ConstantsSource,
    #[command(flatten)]
    solver: SolverArgs,
    /// Target value, e.g. "0.3+0.4i".
    #[arg(long, allow_hyphen_values = true)]
    target: String,
}

pub fn solve_target(args: SolveTargetArgs) -> Result<(), CliError> {
    let mut params = args.solver.params();
    params["target"] = Value::from(args.target.clone());
    params["constants"] = json!(args.source.constants);
    let mut run = args.common.resolve(params)?;
    let f = run.product()?.clone();
    let a = run.coeffs()?.clone();
    let w = complex_arg(&args.target, "--target")?;
    let opts = args.solver.options()?;
    let consts = args.source.load(&f, run.config.seed)?;
    let result = blaschke_sums::solver::paley_solve_with(&f, &a, w, &consts, &opts);
    finish_solver(&mut run, "solve-target", &consts, opts.tol, result)
}

#[derive(Args, Debug)]
pub struct ClusterFollowArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    source: ConstantsSource,
    #[command(flatten)]
    solver: SolverArgs,
    /// Targets in the order they are followed; repeat the flag.
    #[arg(long = "target", required = true, allow_hyphen_values = true)]
    targets: Vec<String>,
}

pub fn cluster_follow(args: ClusterFollowArgs) -> Result<(), CliError> {
    let mut params = args.solver.params();
    params["targets"] = json!(args.targets);
    params["constants"] = json!(args.source.constants);
    let mut run = args.common.resolve(params)?;
    let f = run.product()?.clone();
    let a = run.coeffs()?.clone();
    let targets = args
        .targets
        .iter()
        .map(|t| complex_arg(t, "--target"))
        .collect::<Result<Vec<_>, _>>()?;
    let opts = args.solver.options()?;
    let consts = args.source.load(&f, run.config.seed)?;
    let result = blaschke_sums::solver::cluster_follow_with(&f, &a, &targets, &consts, &opts);
    finish_solver(&mut run, "cluster-follow", &consts, opts.tol, result)
}

#[derive(Args, Debug)]
pub struct PeanoScanArgs {
    #[command(flatten)]
    common: Common,
    /// Cells per side of the scan grid.
    #[arg(long, default_value_t = 64)]
    resolution: usize,
    #[arg(long, default_value_t = 1 << 20)]
    sample_budget: usize,
    /// Terms kept in the series; chosen from the tail bound when absent.
    #[arg(long)]
    truncation: Option<usize>,
    #[arg(long, default_value_t = 10)]
    initial_level: u32,
    /// Scan disc as "re,im,radius"; a pilot scan picks it when absent.
    #[arg(long, allow_hyphen_values = true)]
    disc: Option<String>,
    #[arg(long, default_value_t = 256)]
    pilot_resolution: usize,
    #[arg(long, default_value_t = 20)]
    pilot_level: u32,
}

fn parse_disc(s: &str) -> Result<ScanDisc, CliError> {
    let bad = || CliError::contract(format!("--disc must be \"re,im,radius\", got '{s}'"));
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    match parts[..] {
        [re, im, radius] if radius > 0.0 => Ok(ScanDisc {
            center: Complex64::new(re, im),
            radius,
        }),
        _ => Err(bad()),
    }
}

fn bounding_radius(a: &CoefficientSequence) -> Result<f64, CliError> {
    Ok(a.abs_sum(1, 64) + blaschke_sums::tail_abs_sum(a, 64, None)?.upper())
}

pub fn peano_scan(args: PeanoScanArgs) -> Result<(), CliError> {
    let params = json!({
        "resolution": args.resolution, "sample_budget": args.sample_budget, "truncation": args.truncation,
        "initial_level": args.initial_level, "disc": args.disc,
        "pilot_resolution": args.pilot_resolution, "pilot_level": args.pilot_level,
    });
    let mut run = args.common.resolve(params)?;
    let f = run.product()?.clone();
    let a = run.coeffs()?.clone();
    let bits = run.double_bits();
    let mut out = Emitter::new(&run.config.output_dir)?;
    let (disc, pilot) = match &args.disc {
        Some(d) => (parse_disc(d)?, None),
        None => {
            let radius = bounding_radius(&a)?;
            let truncation = truncation_for(&a, radius, args.pilot_resolution)?;
            let pilot_opts = ScanOptions {
                resolution: args.pilot_resolution,
                sample_budget: 1 << args.pilot_level,
                truncation,
                initial_level: args.pilot_level,
            };
            let (disc, grid) = pilot_disc(&f, &a, &pilot_opts)?;
            out.bytes("pilot.pgm", &grid.to_pgm())?;
            (disc, Some(grid))
        }
    };
    let truncation = match args.truncation {
        Some(t) => t,
        None => truncation_for(&a, disc.radius, args.resolution)?,
    };
    let options = ScanOptions {
        resolution: args.resolution,
        sample_budget: args.sample_budget,
        truncation,
        initial_level: args.initial_level,
    };
    let grid = blaschke_sums::peano_scan(&f, &a, disc, &options)?;
    let digits = print_digits(bits);
    println!(
        "coverage {} samples {}{}",
        fmt_num(grid.coverage_fraction, digits),
        grid.samples_used,
        if grid.budget_exhausted {
            " (budget exhausted)"
        } else {
            ""
        }
    );
    out.bytes("grid.pgm", &grid.to_pgm())?;
    let meta = json!({ "disc": disc, "options": options, "grid": grid, "pilot": pilot });
    out.json("grid.json", &with_digits(decimal_digits(bits), meta))?;
    out.finish("peano-scan", &run.config, decimal_digits(bits))
}

#[derive(Args, Debug)]
pub struct AbelCheckArgs {
    #[command(flatten)]
    common: Common,
    /// Boundary direction as a decimal turn.
    #[arg(long)]
    turn: String,
    /// Radii 1 - 2^-j for j = 1..=j_max.
    #[arg(long, default_value_t = 20, conflicts_with = "radii")]
    j_max: u32,
    /// Explicit radii, comma separated.
    #[arg(long, value_delimiter = ',')]
    radii: Option<Vec<f64>>,
    /// Constant of the bound; calibrated from the seed when absent.
    #[arg(long)]
    c_emp: Option<f64>,
    /// Also compare the partial sums at these depths with matched radial values.
    #[arg(long, value_delimiter = ',')]
    cluster_depths: Option<Vec<usize>>,
}

pub fn abel_check(args: AbelCheckArgs) -> Result<(), CliError> {
    let radii: Vec<f64> = match &args.radii {
        Some(r) => r.clone(),
        None => (1..=args.j_max)
            .map(|j| 1.0 - (-(j as f64)).exp2())
            .collect(),
    };
    let params = json!({
        "turn": args.turn, "radii": radii, "c_emp": args.c_emp, "cluster_depths": args.cluster_depths,
    });
    let mut run = args.common.resolve(params)?;
    let f = run.product()?.clone();
    let a = run.coeffs()?.clone();
    let bits = run.double_bits();
    let xi = turn_arg(&args.turn, blaschke_sums::geometry::DEFAULT_ARC_BITS)?;
    let seed = run.config.seed;
    let report = blaschke_sums::abel_check(&f, &a, &xi, &radii, args.c_emp, seed)?;
    let cluster = args
        .cluster_depths
        .as_deref()
        .map(|d| blaschke_sums::radial_cluster_compare(&f, &a, &xi, d, Some(report.c_emp), seed))
        .transpose()?;
    let digits = print_digits(bits);
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "max discrepancy {} bound {} within {}",
        fmt_num(report.max_discrepancy, digits),
        fmt_num(report.c_emp * report.sup_abs, digits),
        report.within_bound
    );
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                fmt_num(r.radius, 17),
                r.depth.to_string(),
                fmt_num(r.boundary_sum.re, digits),
                fmt_num(r.boundary_sum.im, digits),
                fmt_num(r.radial_value.re, digits),
                fmt_num(r.radial_value.im, digits),
                fmt_num(r.discrepancy, digits),
            ]
        })
        .collect();
    let mut out = Emitter::new(&run.config.output_dir)?;
    out.json(
        "trace.json",
        &with_digits(
            decimal_digits(bits),
            json!({ "turn": xi, "report": report, "cluster": cluster }),
        ),
    )?;
    out.csv(
        "sums.csv",
        &[
            "radius",
            "depth",
            "boundary_re",
            "boundary_im",
            "radial_re",
            "radial_im",
            "discrepancy",
        ],
        &rows,
    )?;
    out.finish("abel-check", &run.config, decimal_digits(bits))
}

#[derive(Args, Debug)]
pub struct LemmaSuiteArgs {
    #[command(flatten)]
    common: Common,
    /// Property id, repeatable; "all" runs every suite.
    #[arg(long = "id", required = true)]
    ids: Vec<String>,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
}

pub fn lemma_suite(args: LemmaSuiteArgs) -> Result<(), CliError> {
    let ids: Vec<String> = if args.ids.iter().any(|i| i == "all") {
        PROPERTY_IDS.iter().map(|s| s.to_string()).collect()
    } else {
        args.ids.clone()
    };
    if let Some(bad) = ids.iter().find(|i| !PROPERTY_IDS.contains(&i.as_str())) {
        return Err(CliError::contract(format!(
            "unknown property id '{bad}' (expected one of {})",
            PROPERTY_IDS.join(", ")
        )));
    }
    let params = json!({ "ids": ids, "trials": args.trials, "tolerance": args.tolerance });
    let mut run = args.common.resolve(params)?;
    let bits = run.double_bits();
    let generator = match &run.product {
        Some(f) => ProductGenerator::Fixed(f.clone()),
        None => ProductGenerator::Random,
    };
    let config = SuiteConfig {
        generator,
        trials: args.trials,
        seed: run.config.seed,
        tolerance: args.tolerance,
    };
    let digits = print_digits(bits);
    let mut reports = Vec::with_capacity(ids.len());
    for id in &ids {
        let report = blaschke_sums::run_lemma_suite(id, &config)?;
        println!(
            "{} trials {} violations {} worst margin {} envelope {}",
            report.property_id,
            report.trials,
            report.violations,
            report
                .worst_margin
                .map(|m| fmt_num(m, digits))
                .unwrap_or_else(|| "none".into()),
            fmt_num(report.envelope, digits)
        );
        reports.push(report);
    }
    let mut out = Emitter::new(&run.config.output_dir)?;
    out.jsonl("report.jsonl", &reports)?;
    out.finish("lemma-suite", &run.config, decimal_digits(bits))
}
