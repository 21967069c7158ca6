//! Three delay-Doppler scatterers located from the reconstructed spreading function.

use num_complex::Complex64;

use kn_gabor::reconstruction::rec_spreading;
use kn_gabor::{
    build_bump, build_kernel, build_lattice, calibrate, diag_via_convolution, point_scatterers, q_box, q_eps, reconstruct_frequency,
    BumpProfile, TimeGrid, Truncation, Window,
};

fn main() -> kn_gabor::Result<()> {
    let grid = TimeGrid::new(256, 16.0)?;
    let g = Window::gaussian(grid);
    let lattice = build_lattice(grid, 1.0, 1.0, Truncation::FullPeriod)?;
    let list = [
        (Complex64::new(0.8, 0.2), 0.25, -0.125),
        (Complex64::new(-0.5, 0.4), -0.1875, 0.3125),
        (Complex64::new(0.3, -0.6), 0.0625, 0.0),
    ];
    let op = point_scatterers(grid, &list)?.to_sampled()?;
    let bump = build_bump(grid, q_eps(&lattice, 2.0)?, q_box(&lattice), BumpProfile::Quintic)?;
    let kernel = calibrate(build_kernel(&g, &lattice, bump, 1e-6)?, &lattice, &g, 0)?;
    let rec = reconstruct_frequency(&diag_via_convolution(&op, &g, &lattice)?, &lattice, &kernel)?;
    let s = rec_spreading(&rec)?;

    let area = s.grid.axis1.step() * s.grid.axis2.step();
    for (amp, tau, nu) in list {
        let got = s.value_at(nu, tau)? * area;
        println!("tau = {tau:+.4}, nu = {nu:+.4}: amplitude {amp:.3} recovered {got:.6}");
    }
    Ok(())
}
