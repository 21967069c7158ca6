//! The reconstruction constant measured for several lattice densities.

use kn_gabor::{build_bump, build_kernel, build_lattice, calibrate, q_box, q_eps, BumpProfile, TimeGrid, Truncation, Window};

fn main() -> kn_gabor::Result<()> {
    let grid = TimeGrid::new(256, 16.0)?;
    let g = Window::gaussian(grid);
    for (a, b) in [(1.0, 1.0), (2.0, 1.0), (0.5, 0.5)] {
        let lattice = build_lattice(grid, a, b, Truncation::FullPeriod)?;
        let bump = build_bump(grid, q_eps(&lattice, 2.0)?, q_box(&lattice), BumpProfile::Quintic)?;
        let kernel = build_kernel(&g, &lattice, bump, 1e-6)?;
        let c = calibrate(kernel, &lattice, &g, 7)?.calibration_constant.expect("calibrated");
        println!("a = {a}, b = {b}: C = {c:.12} (ab = {})", a * b);
    }
    Ok(())
}
