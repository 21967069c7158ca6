//! Gabor channel matrix of a smooth operator and how diagonal it is.

use kn_gabor::{build_lattice, channel_matrix, diag_via_convolution, q_eps, synth_bandlimited, PlaneGrid, Smoothness, TimeGrid, Truncation, Window};

fn main() -> kn_gabor::Result<()> {
    let grid = TimeGrid::new(128, 8.0)?;
    let g = Window::gaussian(grid);
    let lattice = build_lattice(grid, 1.0, 1.0, Truncation::Radii { k1: 3, k2: 3 })?;
    let op = synth_bandlimited(&PlaneGrid::symbol_grid(&grid), q_eps(&lattice, 2.0)?, 5, Smoothness::Smooth)?;

    let h = channel_matrix(&op, &g, &lattice)?;
    println!("lattice points: {}", lattice.len());
    println!("||H||_F = {:.4}, off-diagonal part = {:.4}", h.frobenius(), h.offdiag_frobenius());

    let diag = h.diagonal();
    let conv = diag_via_convolution(&op, &g, &lattice)?;
    let dev = diag.iter().zip(&conv).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    println!("diagonal vs (sigma * R(g, g)) on the lattice: {dev:.2e}");
    for (idx, d) in diag.iter().enumerate().take(4) {
        let (k, l) = lattice.steps(idx);
        println!("  H[({k},{l}),({k},{l})] = {d:.5}");
    }
    Ok(())
}
