//! Time-frequency primitives: shifts, windows, STFT, Rihaczek distribution.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fourier::{fourier, transform_line, Direction};
use crate::grid::{PlaneGrid, Roots, SampledSignal, SampledSymbol, SignalDomain, SymbolDomain, TimeGrid};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WindowKind {
    /// `exp(-pi t^2)`
    Gaussian,
    /// Indicator of `[start, end]`, half weight at grid points on the endpoints.
    Rectangular { start: f64, end: f64 },
    /// `a^{-1/2}` times the indicator of `[0, a)`; with `b = 1/a` its Gabor
    /// system is an orthonormal basis.
    BoxBasis { width: f64 },
    Custom,
}

/// A sampled analysis/synthesis window.
#[derive(Clone, Debug)]
pub struct Window {
    pub kind: WindowKind,
    pub signal: SampledSignal,
    pub schwartz_class: bool,
    pub closed_form_stft_available: bool,
}

impl Window {
    pub fn gaussian(grid: TimeGrid) -> Self {
        let signal = SampledSignal::sample(grid, SignalDomain::Time, |t| {
            Complex64::new((-PI * t * t).exp(), 0.0)
        })
        .expect("gaussian samples are finite");
        Self {
            kind: WindowKind::Gaussian,
            signal,
            schwartz_class: true,
            closed_form_stft_available: true,
        }
    }

    pub fn rectangular(grid: TimeGrid, start: f64, end: f64) -> Result<Self> {
        if !(end > start) {
            return Err(Error::InvalidGrid(format!(
                "rectangular window needs start < end, got [{start}, {end}]"
            )));
        }
        let tol = 1e-9 * grid.step();
        let signal = SampledSignal::sample(grid, SignalDomain::Time, |t| {
            let v = if (t - start).abs() <= tol || (t - end).abs() <= tol {
                0.5
            } else if t > start && t < end {
                1.0
            } else {
                0.0
            };
            Complex64::new(v, 0.0)
        })?;
        Self::checked(
            WindowKind::Rectangular { start, end },
            signal,
            false,
        )
    }

    pub fn box_basis(grid: TimeGrid, width: f64) -> Result<Self> {
        let steps = grid.steps_of(width, "window width")?;
        if steps <= 0 {
            return Err(Error::ZeroWindow);
        }
        let amp = 1.0 / width.sqrt();
        let mut signal = SampledSignal::zeros(grid, SignalDomain::Time);
        for s in 0..steps {
            signal.values[grid.wrap(s)] = Complex64::new(amp, 0.0);
        }
        Self::checked(WindowKind::BoxBasis { width }, signal, false)
    }

    pub fn custom(signal: SampledSignal) -> Result<Self> {
        if signal.domain != SignalDomain::Time {
            return Err(Error::DomainMismatch {
                expected: "time",
                found: signal.domain.name(),
            });
        }
        Self::checked(WindowKind::Custom, signal, false)
    }

    fn checked(kind: WindowKind, signal: SampledSignal, schwartz_class: bool) -> Result<Self> {
        if signal.norm() == 0.0 {
            return Err(Error::ZeroWindow);
        }
        Ok(Self {
            kind,
            signal,
            schwartz_class,
            closed_form_stft_available: false,
        })
    }

    pub fn grid(&self) -> TimeGrid {
        self.signal.grid
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            WindowKind::Gaussian => "gaussian",
            WindowKind::Rectangular { .. } => "rectangular",
            WindowKind::BoxBasis { .. } => "box_basis",
            WindowKind::Custom => "custom",
        }
    }
}

/// Closed form of `V_phi phi(x, xi)` for `phi(t) = exp(-pi t^2)`.
pub fn gaussian_stft(x: f64, xi: f64) -> Complex64 {
    Complex64::from_polar(
        (-0.5 * PI * (x * x + xi * xi)).exp() / 2f64.sqrt(),
        -PI * x * xi,
    )
}

/// Integer-step form of `pi(z)`: translate by `kx` samples, modulate by `kxi`
/// dual-grid steps. Exact on the periodic grid.
pub(crate) fn shift_steps(values: &[Complex64], grid: &TimeGrid, roots: &Roots, kx: i64, kxi: i64) -> Vec<Complex64> {
    let n = values.len() as i64;
    let c = grid.center() as i64;
    (0..n)
        .map(|k| {
            let src = (k - kx).rem_euclid(n) as usize;
            values[src] * roots.get(kxi * (k - c))
        })
        .collect()
}

/// `pi(x, xi) f (t) = exp(2 pi i xi t) f(t - x)` with circular translation.
///
/// Both coordinates must be grid-aligned: `x` a multiple of `dt`, `xi` a
/// multiple of `df`.
pub fn tf_shift(f: &SampledSignal, x: f64, xi: f64) -> Result<SampledSignal> {
    if f.domain != SignalDomain::Time {
        return Err(Error::DomainMismatch {
            expected: "time",
            found: f.domain.name(),
        });
    }
    let kx = f.grid.steps_of(x, "time")?;
    let kxi = f.grid.dual().steps_of(xi, "frequency")?;
    let roots = Roots::new(f.grid.n_samples());
    Ok(SampledSignal {
        grid: f.grid,
        values: shift_steps(&f.values, &f.grid, &roots, kx, kxi),
        domain: SignalDomain::Time,
    })
}

/// Short-time Fourier transform `V_g f(x, xi) = <f, M_xi T_x g>` on the
/// symbol grid, one FFT per time shift.
pub fn stft(f: &SampledSignal, g: &Window) -> Result<SampledSymbol> {
    f.check_compatible(&g.signal)?;
    if g.signal.norm() == 0.0 {
        return Err(Error::ZeroWindow);
    }
    let grid = f.grid;
    let n = grid.n_samples();
    let plane = PlaneGrid::symbol_grid(&grid);
    let mut values = vec![Complex64::new(0.0, 0.0); plane.len()];
    values.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let shift = grid.offset(i);
        for (k, r) in row.iter_mut().enumerate() {
            let src = (k as i64 - shift).rem_euclid(n as i64) as usize;
            *r = f.values[k] * g.signal.values[src].conj();
        }
        transform_line(row, &grid, Direction::Forward);
    });
    SampledSymbol::new(plane, values, SymbolDomain::Symbol)
}

/// Rihaczek distribution `R(f, g)(x, xi) = f(x) conj(g_hat(xi)) exp(-2 pi i x xi)`.
pub fn rihaczek(f: &SampledSignal, g: &SampledSignal) -> Result<SampledSymbol> {
    f.check_compatible(g)?;
    let grid = f.grid;
    let n = grid.n_samples();
    let c = grid.center() as i64;
    let g_hat = fourier(g, Direction::Forward)?;
    let roots = Roots::new(n);
    let plane = PlaneGrid::symbol_grid(&grid);
    let mut values = Vec::with_capacity(plane.len());
    for i in 0..n {
        let fi = f.values[i];
        let oi = i as i64 - c;
        for m in 0..n {
            values.push(fi * g_hat.values[m].conj() * roots.get(-oi * (m as i64 - c)));
        }
    }
    SampledSymbol::new(plane, values, SymbolDomain::Symbol)
}

/// Axis swap `U F(xi, x) = F(-x, xi)`.
///
/// The output lives on the swapped plane grid and carries the opposite domain
/// tag, so `u_swap(stft(f, g))` is directly comparable with
/// `fourier2d(rihaczek(f, g))`.
pub fn u_swap(f: &SampledSymbol) -> SampledSymbol {
    let grid = f.grid.swapped();
    let (n1, n2) = grid.shape();
    let mut values = Vec::with_capacity(grid.len());
    for i1 in 0..n1 {
        for i2 in 0..n2 {
            // output(p, q) = input(-q, p); q indexes the input's axis1.
            let src1 = f.grid.axis1.wrap(-f.grid.axis1.offset(i2));
            values.push(f.at(src1, i1));
        }
    }
    SampledSymbol {
        grid,
        values,
        domain: f.domain.toggled(),
        support_box: None,
    }
}

/// `F*(z) = conj(F(-z))`
pub fn star_involution(f: &SampledSymbol) -> SampledSymbol {
    let (n1, n2) = f.grid.shape();
    let mut values = Vec::with_capacity(f.grid.len());
    for i1 in 0..n1 {
        let s1 = f.grid.axis1.wrap(-f.grid.axis1.offset(i1));
        for i2 in 0..n2 {
            let s2 = f.grid.axis2.wrap(-f.grid.axis2.offset(i2));
            values.push(f.at(s1, s2).conj());
        }
    }
    SampledSymbol {
        grid: f.grid,
        values,
        domain: f.domain,
        support_box: f.support_box,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::fourier2d;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid() -> TimeGrid {
        TimeGrid::new(256, 16.0).unwrap()
    }

    fn random_signal(grid: TimeGrid, rng: &mut ChaCha8Rng) -> SampledSignal {
        let values = (0..grid.n_samples())
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        SampledSignal::new(grid, values, SignalDomain::Time).unwrap()
    }

    fn random_point(grid: &TimeGrid, rng: &mut ChaCha8Rng) -> (f64, f64) {
        let n = grid.n_samples() as i64;
        let kx = rng.random_range(-n / 2..n / 2);
        let kxi = rng.random_range(-n / 2..n / 2);
        (kx as f64 * grid.step(), kxi as f64 * grid.dual_step())
    }

    #[test]
    fn zero_shift_is_identity_and_shifts_are_unitary() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = random_signal(g, &mut rng);
        assert_eq!(tf_shift(&f, 0.0, 0.0).unwrap(), f);
        for _ in 0..20 {
            let (x, xi) = random_point(&g, &mut rng);
            let s = tf_shift(&f, x, xi).unwrap();
            assert!((s.norm() - f.norm()).abs() <= 1e-12 * f.norm());
        }
    }

    #[test]
    fn modulation_follows_translation() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = random_signal(g, &mut rng);
        let (x, xi) = (1.25, -0.5);
        let two_step = tf_shift(&tf_shift(&f, x, 0.0).unwrap(), 0.0, xi).unwrap();
        assert_eq!(two_step, tf_shift(&f, x, xi).unwrap());
    }

    #[test]
    fn off_grid_shift_is_rejected() {
        let f = Window::gaussian(grid()).signal;
        assert!(matches!(tf_shift(&f, 0.03, 0.0), Err(Error::OffGrid { .. })));
        assert!(matches!(tf_shift(&f, 0.0, 0.01), Err(Error::OffGrid { .. })));
    }

    #[test]
    fn gaussian_stft_matches_closed_form() {
        let g = grid();
        let w = Window::gaussian(g);
        let v = stft(&w.signal, &w).unwrap();
        let origin = v.at(g.center(), g.center());
        assert!((origin - Complex64::new(0.5f64.sqrt(), 0.0)).norm() < 1e-8);
        let mut sup: f64 = 0.0;
        for i in 0..g.n_samples() {
            for m in 0..g.n_samples() {
                let (x, xi) = v.grid.point(i, m);
                sup = sup.max((v.at(i, m) - gaussian_stft(x, xi)).norm());
            }
        }
        assert!(sup < 1e-8, "sup deviation {sup}");
    }

    #[test]
    fn stft_obeys_cauchy_schwarz() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let f = random_signal(g, &mut rng);
        let w = Window::rectangular(g, -1.0, 1.0).unwrap();
        let v = stft(&f, &w).unwrap();
        let bound = f.norm() * w.signal.norm();
        assert!(v.values.iter().all(|z| z.norm() <= bound * (1.0 + 1e-12)));
    }

    #[test]
    fn gaussian_rihaczek_closed_form() {
        let g = grid();
        let w = Window::gaussian(g);
        let r = rihaczek(&w.signal, &w.signal).unwrap();
        assert!((r.at(g.center(), g.center()) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        let mut sup: f64 = 0.0;
        for i in (0..256).step_by(7) {
            for m in (0..256).step_by(5) {
                let (x, xi) = r.grid.point(i, m);
                let expected = Complex64::from_polar((-PI * (x * x + xi * xi)).exp(), -2.0 * PI * x * xi);
                sup = sup.max((r.at(i, m) - expected).norm());
            }
        }
        assert!(sup < 1e-10);
    }

    #[test]
    fn rihaczek_transform_is_swapped_stft() {
        let g = TimeGrid::new(64, 8.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..5 {
            let f = random_signal(g, &mut rng);
            let h = random_signal(g, &mut rng);
            let lhs = fourier2d(&rihaczek(&f, &h).unwrap(), Direction::Forward).unwrap();
            let rhs = u_swap(&stft(&f, &Window::custom(h).unwrap()).unwrap());
            assert!(lhs.grid.same_as(&rhs.grid));
            assert_eq!(lhs.domain, rhs.domain);
            assert!(lhs.max_abs_diff(&rhs) < 1e-8);
        }
    }

    #[test]
    fn rihaczek_norm_is_product_of_norms() {
        let g = TimeGrid::new(64, 8.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let f = random_signal(g, &mut rng);
        let h = random_signal(g, &mut rng);
        let r = rihaczek(&f, &h).unwrap();
        assert!((r.norm() - f.norm() * h.norm()).abs() < 1e-10 * r.norm());
    }

    #[test]
    fn rihaczek_is_covariant_under_lattice_shifts() {
        let g = TimeGrid::new(128, 8.0 * 2f64.sqrt()).unwrap();
        let w = Window::gaussian(g);
        let base = rihaczek(&w.signal, &w.signal).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..20 {
            let kx = rng.random_range(-4i64..=4) * 8;
            let kxi = rng.random_range(-4i64..=4) * 8;
            let x = kx as f64 * g.step();
            let xi = kxi as f64 * g.dual_step();
            let shifted = tf_shift(&w.signal, x, xi).unwrap();
            let r = rihaczek(&shifted, &shifted).unwrap();
            let mut sup: f64 = 0.0;
            for i in 0..128 {
                for m in 0..128 {
                    let src1 = (i as i64 - kx).rem_euclid(128) as usize;
                    let src2 = (m as i64 - kxi).rem_euclid(128) as usize;
                    sup = sup.max((r.at(i, m) - base.at(src1, src2)).norm());
                }
            }
            assert!(sup < 1e-8);
        }
    }

    #[test]
    fn u_swap_properties() {
        let g = TimeGrid::new(64, 8.0).unwrap();
        let plane = PlaneGrid::symbol_grid(&g);
        let gauss = SampledSymbol::sample(plane, SymbolDomain::Symbol, |x, y| {
            Complex64::new((-PI * (x * x + y * y)).exp(), 0.0)
        })
        .unwrap();
        assert_eq!(u_swap(&gauss).values, gauss.values);

        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let values = (0..plane.len())
            .map(|_| Complex64::new(rng.random(), rng.random()))
            .collect();
        let f = SampledSymbol::new(plane, values, SymbolDomain::Symbol).unwrap();
        let four = u_swap(&u_swap(&u_swap(&u_swap(&f))));
        assert_eq!(four.values, f.values);
        assert_eq!(four.domain, f.domain);
    }

    #[test]
    fn u_swap_of_gaussian_stft_matches_rihaczek_by_quadrature() {
        // Direct quadrature of the 2-D transform of R(g, g) at a few points.
        let g = TimeGrid::new(64, 8.0).unwrap();
        let w = Window::gaussian(g);
        let r = rihaczek(&w.signal, &w.signal).unwrap();
        let us = u_swap(&stft(&w.signal, &w).unwrap());
        let n = 64;
        for &(p1, p2) in &[(32usize, 32usize), (35, 30), (28, 40), (33, 33)] {
            let (eta, u) = us.grid.point(p1, p2);
            let mut s = Complex64::new(0.0, 0.0);
            for i in 0..n {
                for m in 0..n {
                    let (x, xi) = r.grid.point(i, m);
                    s += r.at(i, m) * Complex64::from_polar(1.0, -2.0 * PI * (eta * x + u * xi));
                }
            }
            s *= r.grid.cell_area();
            assert!((s - us.at(p1, p2)).norm() < 1e-8);
        }
    }

    #[test]
    fn star_involution_properties() {
        let g = TimeGrid::new(32, 4.0).unwrap();
        let plane = PlaneGrid::symbol_grid(&g);
        let even = SampledSymbol::sample(plane, SymbolDomain::Symbol, |x, y| {
            Complex64::new((-(x * x) - 2.0 * y * y).exp(), 0.0)
        })
        .unwrap();
        assert_eq!(star_involution(&even).values, even.values);

        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let values = (0..plane.len())
            .map(|_| Complex64::new(rng.random(), rng.random()))
            .collect();
        let f = SampledSymbol::new(plane, values, SymbolDomain::Symbol).unwrap();
        assert_eq!(star_involution(&star_involution(&f)).values, f.values);

        let lhs = fourier2d(&star_involution(&f), Direction::Forward).unwrap();
        let rhs = fourier2d(&f, Direction::Forward).unwrap();
        let conj: Vec<Complex64> = rhs.values.iter().map(|v| v.conj()).collect();
        assert!(crate::grid::max_abs_diff(&lhs.values, &conj) < 1e-10);
    }

    #[test]
    fn windows() {
        let g = grid();
        let gauss = Window::gaussian(g);
        assert!(gauss.schwartz_class && gauss.closed_form_stft_available);
        let r = Window::rectangular(g, -0.5, 0.5).unwrap();
        assert_eq!(r.signal.values[g.wrap(8)].re, 0.5);
        assert_eq!(r.signal.values[g.wrap(7)].re, 1.0);
        assert_eq!(r.signal.values[g.wrap(-8)].re, 0.5);
        assert_eq!(r.signal.values[g.wrap(9)].re, 0.0);
        let b = Window::box_basis(g, 1.0).unwrap();
        assert!((b.signal.norm() - 1.0).abs() < 1e-14);
        let zero = SampledSignal::zeros(g, SignalDomain::Time);
        assert!(matches!(Window::custom(zero), Err(Error::ZeroWindow)));
    }
}
