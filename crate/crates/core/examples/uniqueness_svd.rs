//! Injectivity of the symbol-to-matrix map and the diagonal-only obstruction.

use kn_gabor::{assemble_map, build_lattice, diagonal_obstruction_svd, full_injectivity_svd, q_eps, TimeGrid, Truncation, Window};

fn main() -> kn_gabor::Result<()> {
    let grid = TimeGrid::new(64, 8.0)?;
    let g = Window::gaussian(grid);
    let lattice = build_lattice(grid, 1.0, 1.0, Truncation::Radii { k1: 3, k2: 3 })?;
    let map = assemble_map(&g, &lattice, q_eps(&lattice, 2.0)?)?;
    let (smin, smax) = full_injectivity_svd(&map);
    println!("a = b = 1, {} columns: sigma_min / sigma_max = {:.3}", map.matrix_a.ncols(), smin / smax);

    let s = std::f64::consts::FRAC_1_SQRT_2;
    let grid = TimeGrid::new(128, 8.0 * 2f64.sqrt())?;
    let g = Window::gaussian(grid);
    let lattice = build_lattice(grid, s, s, Truncation::Radii { k1: 3, k2: 3 })?;
    let map = assemble_map(&g, &lattice, q_eps(&lattice, 5.0)?)?;
    let ob = diagonal_obstruction_svd(&map, 0.1)?;
    println!("ab = {:.2}: frame bounds A = {:.4}, B = {:.4}", ob.ab, ob.frame.a_est, ob.frame.b_est);
    println!("off-diagonal sigma_min / sigma_max = {:.2e}", ob.sigma_min_offdiag / ob.sigma_max);
    Ok(())
}
