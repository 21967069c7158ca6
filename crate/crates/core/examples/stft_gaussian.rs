//! Sampled STFT of the Gaussian against its closed form.

use kn_gabor::tf::gaussian_stft;
use kn_gabor::{stft, TimeGrid, Window};

fn main() -> kn_gabor::Result<()> {
    let grid = TimeGrid::new(128, 8.0)?;
    let g = Window::gaussian(grid);
    let v = stft(&g.signal, &g)?;
    let mut sup = 0.0f64;
    for i1 in 0..128 {
        for i2 in 0..128 {
            let (x, xi) = v.grid.point(i1, i2);
            sup = sup.max((v.at(i1, i2) - gaussian_stft(x, xi)).norm());
        }
    }
    println!("N = 128, T = 8");
    println!("V_g g(0, 0)   = {:.6}", v.value_at(0.0, 0.0)?);
    println!("V_g g(1, 0.5) = {:.6}", v.value_at(1.0, 0.5)?);
    println!("max deviation from closed form: {sup:.2e}");
    Ok(())
}
