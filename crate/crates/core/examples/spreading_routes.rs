//! One operator applied three ways: spreading sum, symbol integral, bilinear form.

use kn_gabor::{apply_spreading, apply_symbol, kn_bilinear, synth_bandlimited, BandBox, PlaneGrid, Smoothness, TimeGrid, Window};

fn main() -> kn_gabor::Result<()> {
    let grid = TimeGrid::new(128, 8.0)?;
    let op = synth_bandlimited(&PlaneGrid::symbol_grid(&grid), BandBox::new(1.0, 0.75)?, 11, Smoothness::Smooth)?;
    let f = Window::gaussian(grid).signal;
    let g = kn_gabor::tf_shift(&f, 0.5, -0.25)?;

    let a = apply_spreading(&op, &f)?;
    let b = apply_symbol(&op, &f)?;
    println!("||H f|| = {:.6}", a.norm());
    println!("spreading vs symbol route: {:.2e} (relative)", a.relative_error(&b));
    let kn = kn_bilinear(&op, &f, &g)?;
    let ip = a.inner(&g)?;
    println!("<sigma, R(g, f)> = {kn:.6}");
    println!("<H f, g>         = {ip:.6}");
    Ok(())
}
