//! Continuous Fourier transform on centered grids, built on the FFT.
//!
//! The convention is `f_hat(xi) = int f(x) exp(-2 pi i x xi) dx`. With
//! `t_k = (k - n/2) dt` and `xi_m = (m - n/2) df` the Riemann sum becomes
//!
//! ```text
//! f_hat_m = dt * (-1)^(n/2) * (-1)^m * DFT[(-1)^k f_k]_m
//! ```
//!
//! and the inverse uses `df` and the conjugate kernel. Because
//! `dt * df * n = 1` the pair is an exact inverse up to round-off. All sign
//! and centering bookkeeping for the toolkit lives in this module.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{PlaneGrid, SampledSignal, SampledSymbol, SignalDomain, SymbolDomain, TimeGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

thread_local! {
    static PLANS: RefCell<HashMap<(usize, bool), Arc<dyn Fft<f64>>>> = RefCell::new(HashMap::new());
}

fn plan(n: usize, direction: Direction) -> Arc<dyn Fft<f64>> {
    let forward = direction == Direction::Forward;
    PLANS.with(|cache| {
        cache
            .borrow_mut()
            .entry((n, forward))
            .or_insert_with(|| {
                let dir = if forward {
                    FftDirection::Forward
                } else {
                    FftDirection::Inverse
                };
                FftPlanner::new().plan_fft(n, dir)
            })
            .clone()
    })
}

/// In-place centered transform of one line of samples taken on `grid`.
/// The output lives on `grid.dual()`.
pub(crate) fn transform_line(buf: &mut [Complex64], grid: &TimeGrid, direction: Direction) {
    let n = buf.len();
    debug_assert_eq!(n, grid.n_samples());
    for (k, v) in buf.iter_mut().enumerate() {
        if k % 2 == 1 {
            *v = -*v;
        }
    }
    plan(n, direction).process(buf);
    let mut scale = grid.step();
    if (n / 2) % 2 == 1 {
        scale = -scale;
    }
    for (m, v) in buf.iter_mut().enumerate() {
        *v *= if m % 2 == 1 { -scale } else { scale };
    }
}

/// Continuous-FT approximation of a sampled signal.
///
/// `Forward` maps a time-domain signal to the frequency grid; `Inverse`
/// maps back.
pub fn fourier(signal: &SampledSignal, direction: Direction) -> Result<SampledSignal> {
    let (expected, out_domain) = match direction {
        Direction::Forward => (SignalDomain::Time, SignalDomain::Frequency),
        Direction::Inverse => (SignalDomain::Frequency, SignalDomain::Time),
    };
    if signal.domain != expected {
        return Err(Error::DomainMismatch {
            expected: expected.name(),
            found: signal.domain.name(),
        });
    }
    let mut values = signal.values.clone();
    transform_line(&mut values, &signal.grid, direction);
    Ok(SampledSignal {
        grid: signal.grid.dual(),
        values,
        domain: out_domain,
    })
}

/// Tensor-product transform without domain bookkeeping. Output lives on
/// `grid.dual()`.
pub(crate) fn transform_plane(values: &mut [Complex64], grid: &PlaneGrid, direction: Direction) {
    let (n1, n2) = grid.shape();
    for row in values.chunks_mut(n2) {
        transform_line(row, &grid.axis2, direction);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); n1];
    for i2 in 0..n2 {
        for i1 in 0..n1 {
            col[i1] = values[i1 * n2 + i2];
        }
        transform_line(&mut col, &grid.axis1, direction);
        for i1 in 0..n1 {
            values[i1 * n2 + i2] = col[i1];
        }
    }
}

/// Two-dimensional transform; `Forward` takes a symbol `sigma(x, xi)` to its
/// spreading function `sigma_hat(eta, u)`, `Inverse` goes back.
pub fn fourier2d(symbol: &SampledSymbol, direction: Direction) -> Result<SampledSymbol> {
    let expected = match direction {
        Direction::Forward => SymbolDomain::Symbol,
        Direction::Inverse => SymbolDomain::Spreading,
    };
    if symbol.domain != expected {
        return Err(Error::DomainMismatch {
            expected: expected.name(),
            found: symbol.domain.name(),
        });
    }
    Ok(fourier2d_unchecked(symbol, direction))
}

pub(crate) fn fourier2d_unchecked(symbol: &SampledSymbol, direction: Direction) -> SampledSymbol {
    let mut values = symbol.values.clone();
    transform_plane(&mut values, &symbol.grid, direction);
    SampledSymbol {
        grid: symbol.grid.dual(),
        values,
        domain: symbol.domain.toggled(),
        support_box: None,
    }
}

/// Periodic convolution `int a(z - w) b(w) dw` evaluated with the FFT.
///
/// When both inputs carry a support box, a combined extent beyond half the
/// period on either axis is reported as [`Error::WrapAround`].
pub fn convolve2d(a: &SampledSymbol, b: &SampledSymbol) -> Result<SampledSymbol> {
    a.check_compatible(b)?;
    if let (Some(sa), Some(sb)) = (a.support_box, b.support_box) {
        let h1 = a.grid.axis1.period() / 2.0;
        let h2 = a.grid.axis2.period() / 2.0;
        if sa.half1 + sb.half1 > h1 {
            return Err(Error::WrapAround {
                axis: "axis1",
                extent: sa.half1 + sb.half1,
                half_period: h1,
            });
        }
        if sa.half2 + sb.half2 > h2 {
            return Err(Error::WrapAround {
                axis: "axis2",
                extent: sa.half2 + sb.half2,
                half_period: h2,
            });
        }
    }
    let mut fa = a.values.clone();
    let mut fb = b.values.clone();
    transform_plane(&mut fa, &a.grid, Direction::Forward);
    transform_plane(&mut fb, &b.grid, Direction::Forward);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    let dual = a.grid.dual();
    transform_plane(&mut fa, &dual, Direction::Inverse);
    let support_box = match (a.support_box, b.support_box) {
        (Some(sa), Some(sb)) => Some(crate::grid::BandBox {
            half1: sa.half1 + sb.half1,
            half2: sa.half2 + sb.half2,
        }),
        _ => None,
    };
    Ok(SampledSymbol {
        grid: a.grid,
        values: fa,
        domain: a.domain,
        support_box,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BandBox;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn random_signal(grid: TimeGrid, rng: &mut ChaCha8Rng) -> SampledSignal {
        let values = (0..grid.n_samples())
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        SampledSignal::new(grid, values, SignalDomain::Time).unwrap()
    }

    fn random_symbol(grid: PlaneGrid, rng: &mut ChaCha8Rng) -> SampledSymbol {
        let values = (0..grid.len())
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        SampledSymbol::new(grid, values, SymbolDomain::Symbol).unwrap()
    }

    /// Direct O(n^2) Riemann sum, independent of the FFT path.
    fn direct_ft(f: &SampledSignal) -> Vec<Complex64> {
        let g = f.grid;
        let d = g.dual();
        (0..g.n_samples())
            .map(|m| {
                let xi = d.point(m);
                f.values
                    .iter()
                    .enumerate()
                    .map(|(k, v)| v * Complex64::from_polar(1.0, -2.0 * PI * xi * g.point(k)))
                    .sum::<Complex64>()
                    * g.step()
            })
            .collect()
    }

    #[test]
    fn gaussian_is_its_own_transform() {
        let grid = TimeGrid::new(256, 16.0).unwrap();
        let f = SampledSignal::sample(grid, SignalDomain::Time, |t| c((-PI * t * t).exp())).unwrap();
        let fh = fourier(&f, Direction::Forward).unwrap();
        let expected = SampledSignal::sample(grid.dual(), SignalDomain::Frequency, |x| {
            c((-PI * x * x).exp())
        })
        .unwrap();
        assert!(fh.max_abs_diff(&expected) < 1e-10);
    }

    #[test]
    fn fft_path_matches_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &(n, t) in &[(64usize, 8.0), (66, 5.0), (128, 11.0)] {
            let grid = TimeGrid::new(n, t).unwrap();
            let f = random_signal(grid, &mut rng);
            let fh = fourier(&f, Direction::Forward).unwrap();
            let d = direct_ft(&f);
            assert!(crate::grid::max_abs_diff(&fh.values, &d) < 1e-11, "n = {n}");
        }
    }

    #[test]
    fn scaled_impulse_becomes_constant() {
        let grid = TimeGrid::new(256, 16.0).unwrap();
        let mut f = SampledSignal::zeros(grid, SignalDomain::Time);
        f.values[grid.center()] = c(1.0 / grid.step());
        let fh = fourier(&f, Direction::Forward).unwrap();
        for v in &fh.values {
            assert!((v - c(1.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn parseval_and_round_trip_on_random_signals() {
        let grid = TimeGrid::new(256, 16.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let f = random_signal(grid, &mut rng);
            let fh = fourier(&f, Direction::Forward).unwrap();
            assert!((fh.norm() - f.norm()).abs() <= 1e-10 * f.norm());
            let back = fourier(&fh, Direction::Inverse).unwrap();
            assert!(back.relative_error(&f) <= 1e-12);
            assert!(back.grid.same_as(&grid));
        }
    }

    #[test]
    fn wrong_domain_is_rejected() {
        let grid = TimeGrid::new(16, 4.0).unwrap();
        let f = SampledSignal::zeros(grid, SignalDomain::Time);
        assert!(matches!(
            fourier(&f, Direction::Inverse),
            Err(Error::DomainMismatch { .. })
        ));
        let s = SampledSymbol::zeros(PlaneGrid::symbol_grid(&grid), SymbolDomain::Symbol);
        assert!(fourier2d(&s, Direction::Inverse).is_err());
    }

    #[test]
    fn separable_gaussian_is_fixed_by_fourier2d() {
        let t = TimeGrid::new(256, 16.0).unwrap();
        let grid = PlaneGrid::symbol_grid(&t);
        let s = SampledSymbol::sample(grid, SymbolDomain::Symbol, |x, xi| {
            c((-PI * (x * x + xi * xi)).exp())
        })
        .unwrap();
        let sh = fourier2d(&s, Direction::Forward).unwrap();
        assert_eq!(sh.domain, SymbolDomain::Spreading);
        let expected = SampledSymbol::sample(sh.grid, SymbolDomain::Spreading, |e, u| {
            c((-PI * (e * e + u * u)).exp())
        })
        .unwrap();
        assert!(sh.max_abs_diff(&expected) < 1e-10);
    }

    #[test]
    fn fourier2d_round_trip_and_parseval() {
        let t = TimeGrid::new(64, 8.0).unwrap();
        let grid = PlaneGrid::symbol_grid(&t);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let s = random_symbol(grid, &mut rng);
            let sh = fourier2d(&s, Direction::Forward).unwrap();
            assert!((sh.norm() - s.norm()).abs() <= 1e-10 * s.norm());
            let back = fourier2d(&sh, Direction::Inverse).unwrap();
            assert!(back.relative_error(&s) <= 1e-12);
        }
    }

    #[test]
    fn delta_is_the_convolution_identity() {
        let t = TimeGrid::new(64, 8.0).unwrap();
        let grid = PlaneGrid::symbol_grid(&t);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_symbol(grid, &mut rng);
        let mut delta = SampledSymbol::zeros(grid, SymbolDomain::Symbol);
        let idx = grid.index(grid.axis1.center(), grid.axis2.center());
        delta.values[idx] = c(1.0 / grid.cell_area());
        let conv = convolve2d(&a, &delta).unwrap();
        assert!(conv.max_abs_diff(&a) < 1e-10);
    }

    #[test]
    fn gaussian_convolution_matches_riemann_sum() {
        // Low-resolution oracle: direct periodic double sum.
        let t = TimeGrid::new(32, 8.0).unwrap();
        let grid = PlaneGrid::new(t, t);
        let g = SampledSymbol::sample(grid, SymbolDomain::Symbol, |x, y| {
            c((-PI * (x * x + y * y)).exp())
        })
        .unwrap();
        let conv = convolve2d(&g, &g).unwrap();
        let n = 32usize;
        let w = grid.cell_area();
        for &(i1, i2) in &[(16usize, 16usize), (18, 15), (20, 22), (10, 16)] {
            let mut s = Complex64::new(0.0, 0.0);
            for j1 in 0..n {
                for j2 in 0..n {
                    let k1 = (i1 + n + n / 2 - j1) % n;
                    let k2 = (i2 + n + n / 2 - j2) % n;
                    s += g.at(k1, k2) * g.at(j1, j2);
                }
            }
            s *= w;
            assert!((conv.at(i1, i2) - s).norm() < 1e-12);
            // and the continuous answer (1/2) exp(-pi |z|^2 / 2)
            let (x, y) = grid.point(i1, i2);
            let exact = 0.5 * (-PI * (x * x + y * y) / 2.0).exp();
            assert!((conv.at(i1, i2).re - exact).abs() < 1e-6);
        }
    }

    #[test]
    fn convolution_commutes_is_linear_and_obeys_convolution_theorem() {
        let t = TimeGrid::new(32, 4.0).unwrap();
        let grid = PlaneGrid::symbol_grid(&t);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = random_symbol(grid, &mut rng);
        let b = random_symbol(grid, &mut rng);
        let d = random_symbol(grid, &mut rng);
        let ab = convolve2d(&a, &b).unwrap();
        let ba = convolve2d(&b, &a).unwrap();
        assert!(ab.max_abs_diff(&ba) <= 1e-12 * ab.max_abs().max(1.0));

        let fa = fourier2d(&a, Direction::Forward).unwrap();
        let fb = fourier2d(&b, Direction::Forward).unwrap();
        let fab = fourier2d(&ab, Direction::Forward).unwrap();
        let prod: Vec<Complex64> = fa.values.iter().zip(&fb.values).map(|(x, y)| x * y).collect();
        assert!(crate::grid::max_abs_diff(&fab.values, &prod) <= 1e-10 * fab.max_abs());

        let alpha = Complex64::new(0.3, -1.2);
        let beta = Complex64::new(-0.7, 0.4);
        let lhs = convolve2d(&a.combine(alpha, &d, beta).unwrap(), &b).unwrap();
        let rhs = ab
            .combine(alpha, &convolve2d(&d, &b).unwrap(), beta)
            .unwrap();
        assert!(lhs.max_abs_diff(&rhs) <= 1e-12 * lhs.max_abs());
    }

    #[test]
    fn fourier_is_linear() {
        let grid = TimeGrid::new(128, 8.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = random_signal(grid, &mut rng);
        let g = random_signal(grid, &mut rng);
        let alpha = Complex64::new(1.5, 0.5);
        let beta = Complex64::new(-0.25, 2.0);
        let lhs = fourier(&f.combine(alpha, &g, beta).unwrap(), Direction::Forward).unwrap();
        let rhs = fourier(&f, Direction::Forward)
            .unwrap()
            .combine(alpha, &fourier(&g, Direction::Forward).unwrap(), beta)
            .unwrap();
        assert!(lhs.max_abs_diff(&rhs) <= 1e-12 * lhs.values.iter().map(|v| v.norm()).fold(0.0, f64::max));
    }

    #[test]
    fn wide_supports_are_flagged() {
        let t = TimeGrid::new(32, 4.0).unwrap();
        let grid = PlaneGrid::symbol_grid(&t);
        let mut a = SampledSymbol::zeros(grid, SymbolDomain::Symbol);
        a.support_box = Some(BandBox::new(1.5, 1.0).unwrap());
        let mut b = a.clone();
        b.support_box = Some(BandBox::new(1.0, 1.0).unwrap());
        assert!(matches!(convolve2d(&a, &b), Err(Error::WrapAround { axis: "axis1", .. })));
    }
}
