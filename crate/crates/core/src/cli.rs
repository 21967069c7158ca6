//! Config-driven command runner behind the `knlab` binary.
//!
//! Every run writes `report.json` (deterministic for a fixed config) and
//! `timing.json` into the output directory, plus binary artifacts. With
//! `dump` set, CSV versions are written too.

use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::channel::{channel_matrix, diag_direct, diag_via_convolution, GaborLattice};
use crate::config::{Command, ScenarioConfig};
use crate::error::{Error, Result, StageExt};
use crate::grid::{relative_l2, PlaneGrid, TimeGrid};
use crate::io::{
    save_channel_matrix, save_operator, save_symbol, write_channel_csv, write_lattice_csv, write_symbol_csv, Storage,
};
use crate::ofdm::{run_pipeline, spreading_l1};
use crate::psido::{synth_bandlimited, KnOperator, Smoothness};
use crate::reconstruction::{
    build_bump, build_kernel, calibrate, evaluate, q_box, q_eps, reconstruct_frequency, reconstruct_time, ReconstructionKernel,
};
use crate::tf::Window;
use crate::uniqueness::{assemble_map, diagonal_obstruction_svd, full_injectivity_svd, invert, UniquenessReport};

pub const OUTPUT_DIR_ENV: &str = "KNLAB_OUTPUT_DIR";

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub output_dir: PathBuf,
    pub dump: bool,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub report: Value,
    pub files: Vec<PathBuf>,
}

/// Command-line value, then the config's `output_dir`, then `./out`.
/// The binary folds `KNLAB_OUTPUT_DIR` into the command-line value.
pub fn resolve_output_dir(cli: Option<PathBuf>, cfg: &ScenarioConfig) -> PathBuf {
    cli.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"))
}

#[derive(Serialize)]
struct Timing {
    stage: &'static str,
    ms: f64,
}

struct Ctx<'a> {
    cfg: &'a ScenarioConfig,
    dir: &'a Path,
    dump: bool,
    files: Vec<PathBuf>,
    timings: Vec<Timing>,
    clock: Instant,
}

impl Ctx<'_> {
    fn lap(&mut self, stage: &'static str) {
        let now = Instant::now();
        self.timings.push(Timing { stage, ms: (now - self.clock).as_secs_f64() * 1e3 });
        self.clock = now;
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.files.push(p.clone());
        p
    }

    fn setup(&self) -> Result<(TimeGrid, Window, GaborLattice)> {
        let grid = self.cfg.grid.build().stage("setup")?;
        let g = self.cfg.window.build(grid).stage("setup")?;
        let lattice = self.cfg.lattice.build(grid).stage("setup")?;
        Ok((grid, g, lattice))
    }

    fn kernel(&self, g: &Window, lattice: &GaborLattice, seed: u64) -> Result<ReconstructionKernel> {
        let rs = &self.cfg.reconstruction;
        let inner = q_eps(lattice, rs.eps_steps).stage("reconstruct")?;
        let bump = build_bump(lattice.grid, inner, q_box(lattice), rs.profile).stage("reconstruct")?;
        let kernel = build_kernel(g, lattice, bump, rs.nonvanish_tol).stage("reconstruct")?;
        calibrate(kernel, lattice, g, seed).stage("calibrate")
    }
}

fn complex(c: Complex64) -> [f64; 2] {
    [c.re, c.im]
}

/// Diagonal read straight off the operator: convolution for sampled
/// operators, inner products for exact shifts.
fn diagonal(op: &KnOperator, g: &Window, lattice: &GaborLattice) -> Result<Vec<Complex64>> {
    if op.is_exact() {
        diag_direct(op, g, lattice)
    } else {
        diag_via_convolution(op, g, lattice)
    }
}

pub fn run(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<RunOutcome> {
    cfg.validate()?;
    std::fs::create_dir_all(&opts.output_dir)?;
    let mut ctx = Ctx { cfg, dir: &opts.output_dir, dump: opts.dump, files: Vec::new(), timings: Vec::new(), clock: Instant::now() };
    let results = match cfg.command {
        Command::SynthSymbol => synth_symbol(&mut ctx)?,
        Command::ChannelMatrix => channel_matrix_cmd(&mut ctx)?,
        Command::Reconstruct => reconstruct(&mut ctx)?,
        Command::UniquenessSvd => uniqueness(&mut ctx)?,
        Command::OfdmDemo => ofdm(&mut ctx)?,
        Command::Calibrate => calibration(&mut ctx)?,
    };
    let report = json!({
        "command": cfg.command.name(),
        "config": cfg,
        "results": results,
    });
    let p = ctx.path("report.json");
    std::fs::write(&p, serde_json::to_string_pretty(&report)? + "\n")?;
    let p = ctx.path("timing.json");
    std::fs::write(&p, serde_json::to_string_pretty(&ctx.timings)? + "\n")?;
    Ok(RunOutcome { report, files: ctx.files })
}

fn synth_symbol(ctx: &mut Ctx) -> Result<Value> {
    let (_, _, lattice) = ctx.setup()?;
    let op = ctx.cfg.channel.build(&lattice, ctx.cfg.seed).stage("channel")?;
    ctx.lap("synthesize");
    let p = ctx.path("operator.json");
    save_operator(&p, &op, Storage::Sidecar)?;
    ctx.files.push(p.with_extension("bin"));
    let sampled = op.to_sampled()?;
    let symbol = sampled.symbol.as_ref().expect("sampled");
    let spreading = sampled.spreading.as_ref().expect("sampled");
    let p = ctx.path("symbol.json");
    save_symbol(&p, symbol, Storage::Sidecar)?;
    ctx.files.push(p.with_extension("bin"));
    if ctx.dump {
        let p = ctx.path("symbol.csv");
        write_symbol_csv(&p, symbol)?;
        let p = ctx.path("spreading.csv");
        write_symbol_csv(&p, spreading)?;
    }
    ctx.lap("write");
    Ok(json!({
        "channel": ctx.cfg.channel.kind,
        "band_box": sampled.band_box,
        "exact_shifts": op.exact_shifts.len(),
        "symbol_norm": symbol.norm(),
        "spreading_norm": spreading.norm(),
        "spreading_l1": spreading_l1(&op),
    }))
}

fn channel_matrix_cmd(ctx: &mut Ctx) -> Result<Value> {
    let (_, g, lattice) = ctx.setup()?;
    let op = ctx.cfg.channel.build(&lattice, ctx.cfg.seed).stage("channel")?;
    let h = channel_matrix(&op, &g, &lattice).stage("channel-matrix")?;
    ctx.lap("channel-matrix");
    let diag = diagonal(&op, &g, &lattice).stage("diagonal")?;
    let agreement = relative_l2(&diag, &h.diagonal());
    ctx.lap("diagonal");
    let p = ctx.path("channel_matrix.json");
    save_channel_matrix(&p, &h, Storage::Sidecar)?;
    ctx.files.push(p.with_extension("bin"));
    if ctx.dump {
        let p = ctx.path("channel_matrix.csv");
        write_channel_csv(&p, &h)?;
        let p = ctx.path("diagonal.csv");
        write_lattice_csv(&p, &lattice, &h.diagonal())?;
    }
    ctx.lap("write");
    Ok(json!({
        "a": lattice.a,
        "b": lattice.b,
        "ab": lattice.ab(),
        "size": h.size(),
        "frobenius": h.frobenius(),
        "offdiag_frobenius": h.offdiag_frobenius(),
        "offdiag_ratio": h.offdiag_frobenius() / h.frobenius(),
        "diagonal_route_difference": agreement,
    }))
}

fn reconstruct(ctx: &mut Ctx) -> Result<Value> {
    let (_, g, lattice) = ctx.setup()?;
    let op = ctx.cfg.channel.build(&lattice, ctx.cfg.seed).stage("channel")?;
    let diag = diagonal(&op, &g, &lattice).stage("diagonal")?;
    ctx.lap("diagonal");
    let kernel = ctx.kernel(&g, &lattice, ctx.cfg.reconstruction.calibration_seed)?;
    ctx.lap("kernel");
    let rec = reconstruct_frequency(&diag, &lattice, &kernel).stage("reconstruct")?;
    ctx.lap("frequency-route");
    let time = if ctx.cfg.reconstruction.time_route {
        let t = reconstruct_time(&diag, &lattice, &kernel).stage("time-route")?;
        Some(t)
    } else {
        None
    };
    ctx.lap("time-route");
    let eval = evaluate(&op, &rec, &kernel).stage("evaluate")?;
    if let Some(w) = &eval.warning {
        log::warn!("{w}");
    }
    let p = ctx.path("symbol_rec.json");
    save_symbol(&p, &rec, Storage::Sidecar)?;
    ctx.files.push(p.with_extension("bin"));
    if ctx.dump {
        let p = ctx.path("diagonal.csv");
        write_lattice_csv(&p, &lattice, &diag)?;
        let p = ctx.path("symbol_rec.csv");
        write_symbol_csv(&p, &rec)?;
        let truth = op.to_sampled()?;
        let p = ctx.path("symbol_true.csv");
        write_symbol_csv(&p, truth.symbol.as_ref().expect("sampled"))?;
    }
    ctx.lap("write");
    let c = kernel.calibration_constant.expect("calibrated");
    Ok(json!({
        "a": lattice.a,
        "b": lattice.b,
        "ab": lattice.ab(),
        "lattice_points": lattice.len(),
        "calibration_constant": complex(c),
        "min_abs_g": kernel.min_abs_g_on_support,
        "min_abs_g_point": kernel.min_point,
        "evaluation": eval,
        "time_route_difference": time.as_ref().map(|t| t.symbol.max_abs_diff(&rec) / rec.max_abs().max(f64::MIN_POSITIVE)),
        "truncation_tail": time.as_ref().map(|t| t.truncation_tail),
    }))
}

fn uniqueness(ctx: &mut Ctx) -> Result<Value> {
    let (grid, g, lattice) = ctx.setup()?;
    let us = &ctx.cfg.uniqueness;
    let band = q_eps(&lattice, us.band_eps_steps).stage("setup")?;
    let map = assemble_map(&g, &lattice, band).stage("assemble")?;
    ctx.lap("assemble");
    let (sigma_min, sigma_max) = full_injectivity_svd(&map);
    ctx.lap("svd");
    let (mut sigma_min_offdiag, mut a_est, mut b_est, mut obstruction_note) = (None, None, None, Value::Null);
    if us.obstruction {
        match diagonal_obstruction_svd(&map, us.min_frame_ratio) {
            Ok(ob) => {
                sigma_min_offdiag = Some(ob.sigma_min_offdiag);
                a_est = Some(ob.frame.a_est);
                b_est = Some(ob.frame.b_est);
            }
            Err(Error::FrameConditionUnmet { a_est: a, b_est: b }) => {
                a_est = Some(a);
                b_est = Some(b);
                obstruction_note = json!(format!("frame precondition unmet (A = {a:e}, B = {b:e}); obstruction not evaluated"));
            }
            Err(e) => return Err(e.in_stage("obstruction")),
        }
    }
    ctx.lap("obstruction");
    let op = synth_bandlimited(&PlaneGrid::symbol_grid(&grid), band, ctx.cfg.seed, Smoothness::White).stage("inversion")?;
    let h = channel_matrix(&op, &g, &lattice).stage("inversion")?;
    let inversion_relative_error = match invert(&map, &h) {
        Ok(x) => Some(relative_l2(&x, &map.coefficients(&op)?)),
        Err(Error::Singular { condition }) => {
            log::warn!("inversion skipped: map is singular (condition {condition:e})");
            None
        }
        Err(e) => return Err(e.in_stage("inversion")),
    };
    ctx.lap("inversion");
    let report = UniquenessReport {
        window: g.name().to_string(),
        a: lattice.a,
        b: lattice.b,
        ab: lattice.ab(),
        band_box: band,
        truncation: lattice.truncation,
        n_samples: grid.n_samples(),
        period: grid.period(),
        columns: map.basis.len(),
        sigma_min,
        sigma_max,
        sigma_min_offdiag,
        a_est,
        b_est,
        inversion_relative_error,
    };
    let mut v = serde_json::to_value(&report)?;
    v["obstruction_note"] = obstruction_note;
    v["injective"] = json!(sigma_min > 1e-6 * sigma_max);
    Ok(v)
}

fn ofdm(ctx: &mut Ctx) -> Result<Value> {
    let r = run_pipeline(ctx.cfg)?;
    ctx.lap("pipeline");
    let p = ctx.path("h_est.json");
    save_channel_matrix(&p, &r.h_est, Storage::Sidecar)?;
    ctx.files.push(p.with_extension("bin"));
    let p = ctx.path("h_true.json");
    save_channel_matrix(&p, &r.h_true, Storage::Sidecar)?;
    ctx.files.push(p.with_extension("bin"));
    if ctx.dump {
        let lattice = r.h_true.lattice.clone();
        let p = ctx.path("y.csv");
        write_lattice_csv(&p, &lattice, &r.y)?;
        let p = ctx.path("c_est.csv");
        write_lattice_csv(&p, &lattice, &r.c_est)?;
        let p = ctx.path("c_sent.csv");
        write_lattice_csv(&p, &lattice, &r.c_sent)?;
        let p = ctx.path("diag_est.csv");
        write_lattice_csv(&p, &r.rec_lattice, &r.diag_est)?;
        let p = ctx.path("h_est.csv");
        write_channel_csv(&p, &r.h_est)?;
    }
    ctx.lap("write");
    Ok(serde_json::to_value(&r.summary)?)
}

fn calibration(ctx: &mut Ctx) -> Result<Value> {
    let (_, g, lattice) = ctx.setup()?;
    let seed = ctx.cfg.reconstruction.calibration_seed;
    let first = ctx.kernel(&g, &lattice, seed)?;
    let second = ctx.kernel(&g, &lattice, seed.wrapping_add(1))?;
    ctx.lap("calibrate");
    let (c1, c2) = (first.calibration_constant.expect("calibrated"), second.calibration_constant.expect("calibrated"));
    let ab = lattice.ab();
    Ok(json!({
        "a": lattice.a,
        "b": lattice.b,
        "ab": ab,
        "calibration_constant": complex(c1),
        "relative_deviation_from_ab": (c1 - Complex64::new(ab, 0.0)).norm() / ab,
        "seed_spread": (c1 - c2).norm() / c1.norm(),
        "seeds": [seed, seed.wrapping_add(1)],
        "min_abs_g": first.min_abs_g_on_support,
    }))
}
