//! Frame bounds of Gaussian Gabor systems at a few densities.

use kn_gabor::{build_lattice, frame_bounds, TimeGrid, Truncation, Window};

fn main() -> kn_gabor::Result<()> {
    let grid = TimeGrid::new(128, 8.0)?;
    let g = Window::gaussian(grid);
    println!("{:>6} {:>6} {:>10} {:>10} {:>10}", "a", "b", "A", "B", "B/A");
    for (a, b) in [(0.5, 0.5), (0.5, 1.0), (1.0, 1.0), (2.0, 0.25)] {
        let lattice = build_lattice(grid, a, b, Truncation::FullPeriod)?;
        let fb = frame_bounds(&g, &lattice)?;
        println!("{a:>6} {b:>6} {:>10.4e} {:>10.4e} {:>10.3e}", fb.a_est, fb.b_est, fb.ratio());
    }
    Ok(())
}
