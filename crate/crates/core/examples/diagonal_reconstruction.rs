//! Recover a band-limited symbol from the channel-matrix diagonal alone.

use kn_gabor::reconstruction::rec_spreading;
use kn_gabor::{
    build_bump, build_kernel, build_lattice, calibrate, diag_via_convolution, evaluate, q_box, q_eps, reconstruct_frequency,
    reconstruct_time, synth_bandlimited, BumpProfile, PlaneGrid, Smoothness, TimeGrid, Truncation, Window,
};

fn main() -> kn_gabor::Result<()> {
    let grid = TimeGrid::new(256, 16.0)?;
    let g = Window::gaussian(grid);
    let lattice = build_lattice(grid, 1.0, 1.0, Truncation::FullPeriod)?;
    let band = q_eps(&lattice, 2.0)?;
    let op = synth_bandlimited(&PlaneGrid::symbol_grid(&grid), band, 1, Smoothness::Smooth)?;

    let bump = build_bump(grid, band, q_box(&lattice), BumpProfile::Quintic)?;
    let kernel = calibrate(build_kernel(&g, &lattice, bump, 1e-6)?, &lattice, &g, 0)?;
    println!("min |G| on the bump support: {:.4}", kernel.min_abs_g_on_support);

    let diag = diag_via_convolution(&op, &g, &lattice)?;
    let rec = reconstruct_frequency(&diag, &lattice, &kernel)?;
    let ev = evaluate(&op, &rec, &kernel)?;
    println!("relative error (frequency route): {:.2e}", ev.relative_error);
    println!("spreading leak outside Q: {:.2e}", ev.support_leak);
    println!("rec spreading peak: {:.4}", rec_spreading(&rec)?.max_abs());

    let time = reconstruct_time(&diag, &lattice, &kernel)?;
    println!("frequency vs time route: {:.2e}", time.symbol.relative_error(&rec));
    Ok(())
}
