//! Symbol recovery from channel-matrix diagonals: bump functions, the
//! deconvolution kernel, and the modified cardinal series in frequency and
//! time form.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::channel::{diag_via_convolution, GaborLattice, Truncation};
use crate::error::{Error, Result};
use crate::fourier::{fourier2d, fourier2d_unchecked, Direction};
use crate::grid::{relative_l2, BandBox, PlaneGrid, SampledSymbol, SymbolDomain, TimeGrid};
use crate::psido::KnOperator;
use crate::tf::{stft, u_swap, Window, WindowKind};

/// Relative size of the calibration window `|C - ab| / ab`.
pub const CALIBRATION_TOLERANCE: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BumpProfile {
    /// Indicator of the inner box.
    Indicator,
    /// `6 s^5 - 15 s^4 + 10 s^3`
    Quintic,
    /// `C^inf` step built from `exp(-1/s)`.
    Mollifier,
}

impl BumpProfile {
    pub fn is_smooth(&self) -> bool {
        !matches!(self, BumpProfile::Indicator)
    }

    /// Transition value for `s` in `[0, 1]`: 0 at the outer face, 1 at the
    /// inner face.
    fn step(&self, s: f64) -> f64 {
        match self {
            BumpProfile::Indicator => 0.0,
            BumpProfile::Quintic => s * s * s * (10.0 + s * (-15.0 + 6.0 * s)),
            BumpProfile::Mollifier => {
                let psi = |t: f64| if t <= 0.0 { 0.0 } else { (-1.0 / t).exp() };
                let (p, q) = (psi(s), psi(1.0 - s));
                p / (p + q)
            }
        }
    }

    /// One-dimensional factor at distance `t` from the center.
    fn factor(&self, t: f64, inner: f64, outer: f64, tol: f64) -> f64 {
        let t = t.abs();
        if t <= inner + tol {
            1.0
        } else if t >= outer - tol || *self == BumpProfile::Indicator {
            0.0
        } else {
            self.step((outer - t) / (outer - inner))
        }
    }
}

/// Separable cut-off `phi` on the spreading grid: 1 on `inner_box`, 0 outside
/// `outer_box`.
#[derive(Clone, Debug)]
pub struct BumpFunction {
    pub inner_box: BandBox,
    pub outer_box: BandBox,
    pub profile: BumpProfile,
    pub samples: SampledSymbol,
}

pub fn build_bump(grid: TimeGrid, inner_box: BandBox, outer_box: BandBox, profile: BumpProfile) -> Result<BumpFunction> {
    if outer_box.half1 <= 0.0 || outer_box.half2 <= 0.0 {
        return Err(Error::InvalidBand(format!("outer box {outer_box:?} has zero area")));
    }
    if !inner_box.is_inside(&outer_box) {
        return Err(Error::InvalidBand(format!("inner box {inner_box:?} is not inside {outer_box:?}")));
    }
    let plane = PlaneGrid::spreading_grid(&grid);
    let (t1, t2) = (1e-9 * plane.axis1.step(), 1e-9 * plane.axis2.step());
    let samples = SampledSymbol::sample(plane, SymbolDomain::Spreading, |eta, u| {
        let v = profile.factor(eta, inner_box.half1, outer_box.half1, t1)
            * profile.factor(u, inner_box.half2, outer_box.half2, t2);
        Complex64::new(v, 0.0)
    })?;
    Ok(BumpFunction { inner_box, outer_box, profile, samples })
}

/// `Q = [-1/(2a), 1/(2a)] x [-1/(2b), 1/(2b)]`
pub fn q_box(lattice: &GaborLattice) -> BandBox {
    BandBox { half1: 0.5 / lattice.a, half2: 0.5 / lattice.b }
}

/// `Q` shrunk by `eps_steps` grid steps on each axis (Doppler steps `df`,
/// delay steps `dt`).
pub fn q_eps(lattice: &GaborLattice, eps_steps: f64) -> Result<BandBox> {
    let g = lattice.grid;
    q_box(lattice).shrink(eps_steps * g.dual_step(), eps_steps * g.step())
}

/// Deconvolution kernel for one window and lattice.
#[derive(Clone, Debug)]
pub struct ReconstructionKernel {
    /// `G(eta, u) = V_g g(-u, eta)` on the spreading grid.
    pub g_transform: SampledSymbol,
    pub phi: BumpFunction,
    /// `phi / conj(G)` where `phi > 0`, zero elsewhere.
    pub khat: SampledSymbol,
    pub min_abs_g_on_support: f64,
    /// Spreading point where the minimum is attained.
    pub min_point: (f64, f64),
    pub calibration_constant: Option<Complex64>,
    pub a: f64,
    pub b: f64,
}

/// Closed form `(1/sqrt 2) exp(-pi (eta^2 + u^2) / 2) exp(pi i eta u)` of
/// `G` for the Gaussian window.
pub fn gaussian_g(eta: f64, u: f64) -> Complex64 {
    Complex64::from_polar((-0.5 * PI * (eta * eta + u * u)).exp() / 2f64.sqrt(), PI * eta * u)
}

/// `G = U V_g g`, closed form for the Gaussian.
pub fn window_transform(g: &Window) -> Result<SampledSymbol> {
    if g.kind == WindowKind::Gaussian {
        let plane = PlaneGrid::spreading_grid(&g.grid());
        return SampledSymbol::sample(plane, SymbolDomain::Spreading, gaussian_g);
    }
    Ok(u_swap(&stft(&g.signal, g)?))
}

fn min_abs_where(values: &SampledSymbol, mask: impl Fn(usize, usize) -> bool) -> (f64, (f64, f64)) {
    let (n1, n2) = values.grid.shape();
    let mut best = (f64::INFINITY, (0.0, 0.0));
    for i1 in 0..n1 {
        for i2 in 0..n2 {
            if mask(i1, i2) {
                let v = values.at(i1, i2).norm();
                if v < best.0 {
                    best = (v, values.grid.point(i1, i2));
                }
            }
        }
    }
    best
}

pub fn build_kernel(g: &Window, lattice: &GaborLattice, bump: BumpFunction, nonvanish_tol: f64) -> Result<ReconstructionKernel> {
    if !g.grid().same_as(&lattice.grid) || !bump.samples.grid.same_as(&PlaneGrid::spreading_grid(&lattice.grid)) {
        return Err(Error::GridMismatch("window, lattice and bump must share one grid".into()));
    }
    let q = q_box(lattice);
    if (bump.outer_box.half1 - q.half1).abs() > 1e-9 * q.half1 || (bump.outer_box.half2 - q.half2).abs() > 1e-9 * q.half2 {
        return Err(Error::InvalidBand(format!(
            "bump outer box {:?} must equal Q = {q:?} for a = {}, b = {}",
            bump.outer_box, lattice.a, lattice.b
        )));
    }
    let gt = window_transform(g)?;
    let phi = &bump.samples;
    let (min_abs, min_point) = min_abs_where(&gt, |i1, i2| phi.at(i1, i2).re > 0.0);
    if min_abs < nonvanish_tol {
        return Err(Error::NonvanishingViolation {
            min_abs,
            tolerance: nonvanish_tol,
            eta: min_point.0,
            u: min_point.1,
        });
    }
    let mut khat = SampledSymbol::zeros(gt.grid, SymbolDomain::Spreading);
    for (k, (p, gv)) in khat.values.iter_mut().zip(phi.values.iter().zip(&gt.values)) {
        if p.re > 0.0 {
            *k = *p / gv.conj();
        }
    }
    khat.support_box = Some(q);
    Ok(ReconstructionKernel {
        g_transform: gt,
        phi: bump,
        khat,
        min_abs_g_on_support: min_abs,
        min_point,
        calibration_constant: None,
        a: lattice.a,
        b: lattice.b,
    })
}

impl ReconstructionKernel {
    /// Minimum of `|G|` over the grid points of a closed box.
    pub fn min_abs_g_on(&self, band: BandBox) -> (f64, (f64, f64)) {
        let grid = self.g_transform.grid;
        min_abs_where(&self.g_transform, |i1, i2| {
            let (p, q) = grid.point(i1, i2);
            band.contains_on(&grid, p, q)
        })
    }

    pub fn with_constant(mut self, c: Complex64) -> Self {
        self.calibration_constant = Some(c);
        self
    }

    fn constant(&self) -> Result<Complex64> {
        self.calibration_constant.ok_or(Error::Uncalibrated)
    }

    fn check_lattice(&self, lattice: &GaborLattice) -> Result<()> {
        if (lattice.a - self.a).abs() > 1e-12 * self.a || (lattice.b - self.b).abs() > 1e-12 * self.b {
            return Err(Error::InvalidLattice(format!(
                "kernel built for a = {}, b = {}; lattice has a = {}, b = {}",
                self.a, self.b, lattice.a, lattice.b
            )));
        }
        Ok(())
    }
}

/// `sinc(x / a) sinc(xi / b)` on the symbol grid.
pub fn sinc_lattice(grid: TimeGrid, lattice: &GaborLattice) -> SampledSymbol {
    let sinc = |t: f64| if t == 0.0 { 1.0 } else { (PI * t).sin() / (PI * t) };
    let plane = PlaneGrid::symbol_grid(&grid);
    SampledSymbol::sample(plane, SymbolDomain::Symbol, |x, xi| {
        Complex64::new(sinc(x / lattice.a) * sinc(xi / lattice.b), 0.0)
    })
    .expect("sinc samples are finite")
}

/// Periodic sinc `(a / T) sin(pi z / a) cot(pi z / T)` of a grid with period
/// `T`. Its discrete transform is `a` on `|eta| < 1/(2a)` and `a/2` on the
/// two faces, exactly.
fn periodic_sinc(z: f64, a: f64, period: f64) -> f64 {
    let r = z / period;
    if (r - r.round()).abs() < 1e-12 {
        return 1.0;
    }
    (a / period) * (PI * z / a).sin() / (PI * z / period).tan()
}

/// Periodic counterpart of [`sinc_lattice`]; requires `T / (2a)` and
/// `(n / T) / (2b)` to be integers.
pub fn periodic_sinc_lattice(grid: TimeGrid, lattice: &GaborLattice) -> Result<SampledSymbol> {
    let n = grid.n_samples() as i64;
    if n % (2 * lattice.n_a) != 0 || n % (2 * lattice.n_b) != 0 {
        return Err(Error::InvalidLattice(format!(
            "time route needs 2a and 2b to divide the grid ranges (n = {n}, a/dt = {}, b/df = {})",
            lattice.n_a, lattice.n_b
        )));
    }
    let plane = PlaneGrid::symbol_grid(&grid);
    let (t1, t2) = (grid.period(), grid.dual().period());
    SampledSymbol::sample(plane, SymbolDomain::Symbol, |x, xi| {
        Complex64::new(periodic_sinc(x, lattice.a, t1) * periodic_sinc(xi, lattice.b, t2), 0.0)
    })
}

fn check_diag(diag: &[Complex64], lattice: &GaborLattice) -> Result<()> {
    if diag.len() != lattice.len() {
        return Err(Error::InvalidLattice(format!(
            "diagonal has {} entries, lattice has {} points",
            diag.len(),
            lattice.len()
        )));
    }
    Ok(())
}

/// `S(omega) = sum_lambda d_lambda exp(-2 pi i lambda . omega)` on the
/// spreading grid.
pub fn lattice_sum(diag: &[Complex64], lattice: &GaborLattice) -> Result<SampledSymbol> {
    check_diag(diag, lattice)?;
    let plane = PlaneGrid::symbol_grid(&lattice.grid);
    let mut deltas = SampledSymbol::zeros(plane, SymbolDomain::Symbol);
    let w = 1.0 / plane.cell_area();
    for (i, d) in diag.iter().enumerate() {
        let (kx, kxi) = lattice.steps(i);
        let idx = plane.index(plane.axis1.wrap(kx), plane.axis2.wrap(kxi));
        deltas.values[idx] += d * w;
    }
    fourier2d(&deltas, Direction::Forward)
}

/// Frequency route: `sigma_hat_rec = C * S * khat`, then back to the symbol.
pub fn reconstruct_frequency(diag: &[Complex64], lattice: &GaborLattice, kernel: &ReconstructionKernel) -> Result<SampledSymbol> {
    let c = kernel.constant()?;
    reconstruct_frequency_with(diag, lattice, kernel, c)
}

fn reconstruct_frequency_with(diag: &[Complex64], lattice: &GaborLattice, kernel: &ReconstructionKernel, c: Complex64) -> Result<SampledSymbol> {
    kernel.check_lattice(lattice)?;
    let mut s = lattice_sum(diag, lattice)?;
    for (v, k) in s.values.iter_mut().zip(&kernel.khat.values) {
        *v *= c * k;
    }
    let mut out = fourier2d(&s, Direction::Inverse)?;
    out.support_box = None;
    Ok(out)
}

/// Spreading function of a reconstructed symbol.
pub fn rec_spreading(rec: &SampledSymbol) -> Result<SampledSymbol> {
    fourier2d(rec, Direction::Forward)
}

/// Time-route kernel `F^-1(F(periodic sinc) * khat / (ab))`.
pub fn time_kernel(grid: TimeGrid, lattice: &GaborLattice, kernel: &ReconstructionKernel) -> Result<SampledSymbol> {
    kernel.check_lattice(lattice)?;
    let mut hat = fourier2d(&periodic_sinc_lattice(grid, lattice)?, Direction::Forward)?;
    let ab = lattice.ab();
    for (v, k) in hat.values.iter_mut().zip(&kernel.khat.values) {
        *v *= k / ab;
    }
    fourier2d(&hat, Direction::Inverse)
}

/// Outcome of the time-domain cardinal series.
#[derive(Clone, Debug)]
pub struct TimeReconstruction {
    pub symbol: SampledSymbol,
    /// `max |d| on the outermost lattice ring / max |d|`; zero for
    /// full-period lattices, where the series is complete.
    pub truncation_tail: f64,
}

/// `C * sum_lambda d_lambda T_lambda K` by direct summation over the lattice.
pub fn reconstruct_time(diag: &[Complex64], lattice: &GaborLattice, kernel: &ReconstructionKernel) -> Result<TimeReconstruction> {
    let c = kernel.constant()?;
    check_diag(diag, lattice)?;
    let kt = time_kernel(lattice.grid, lattice, kernel)?;
    let plane = kt.grid;
    let (n1, n2) = plane.shape();
    let terms: Vec<(i64, i64, Complex64)> = diag
        .iter()
        .enumerate()
        .filter(|(_, d)| d.norm() != 0.0)
        .map(|(i, d)| {
            let (kx, kxi) = lattice.steps(i);
            (kx, kxi, d * c)
        })
        .collect();
    let mut values = vec![Complex64::new(0.0, 0.0); plane.len()];
    values.par_chunks_mut(n2).enumerate().for_each(|(i1, row)| {
        for &(kx, kxi, d) in &terms {
            let s1 = (i1 as i64 - kx).rem_euclid(n1 as i64) as usize;
            let src = &kt.values[s1 * n2..(s1 + 1) * n2];
            let off = kxi.rem_euclid(n2 as i64) as usize;
            for (i2, r) in row.iter_mut().enumerate() {
                let s2 = if i2 >= off { i2 - off } else { i2 + n2 - off };
                *r += d * src[s2];
            }
        }
    });
    Ok(TimeReconstruction {
        symbol: SampledSymbol::new(plane, values, SymbolDomain::Symbol)?,
        truncation_tail: truncation_tail(diag, lattice),
    })
}

/// Largest diagonal magnitude on the outer ring of a radius-truncated lattice,
/// relative to the overall maximum.
pub fn truncation_tail(diag: &[Complex64], lattice: &GaborLattice) -> f64 {
    let Truncation::Radii { .. } = lattice.truncation else {
        return 0.0;
    };
    let kmax = lattice.points.iter().map(|p| p.0.abs()).max().unwrap_or(0);
    let lmax = lattice.points.iter().map(|p| p.1.abs()).max().unwrap_or(0);
    let top = diag.iter().map(|d| d.norm()).fold(0.0, f64::max);
    if top == 0.0 {
        return 0.0;
    }
    let ring = lattice
        .points
        .iter()
        .zip(diag)
        .filter(|((k, l), _)| k.abs() == kmax || l.abs() == lmax)
        .map(|(_, d)| d.norm())
        .fold(0.0, f64::max);
    ring / top
}

/// Calibration symbol: a mollifier bump on the inner box with a seeded complex
/// amplitude.
pub fn calibration_operator(grid: TimeGrid, inner: BandBox, seed: u64) -> Result<KnOperator> {
    if inner.half1 <= 0.0 || inner.half2 <= 0.0 {
        return Err(Error::Calibration(format!("inner box {inner:?} has no interior; reduce the margin")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let re: f64 = StandardNormal.sample(&mut rng);
    let im: f64 = StandardNormal.sample(&mut rng);
    let amp = Complex64::new(1.0 + re.abs(), im);
    let bump = |t: f64, h: f64| {
        let r = t / h;
        if r.abs() >= 1.0 {
            0.0
        } else {
            (1.0 - 1.0 / (1.0 - r * r)).exp()
        }
    };
    let shrunk = BandBox::new(inner.half1 * 0.9, inner.half2 * 0.9)?;
    KnOperator::from_spreading_fn(grid, shrunk, |eta, u| amp * bump(eta, shrunk.half1) * bump(u, shrunk.half2))
}

/// Fixes the scalar `C` by reconstructing a known calibration symbol with
/// `C = 1` and projecting.
pub fn calibrate(kernel: ReconstructionKernel, lattice: &GaborLattice, g: &Window, seed: u64) -> Result<ReconstructionKernel> {
    let cal = calibration_operator(lattice.grid, kernel.phi.inner_box, seed)?;
    let diag = diag_via_convolution(&cal, g, lattice)?;
    let raw = reconstruct_frequency_with(&diag, lattice, &kernel, Complex64::new(1.0, 0.0))?;
    let truth = cal.symbol.as_ref().expect("sampled operator");
    let rr = raw.inner(&raw)?.re;
    if rr <= f64::MIN_POSITIVE || rr.sqrt() <= 1e-14 * truth.norm() {
        return Err(Error::Calibration("uncalibrated reconstruction is numerically zero".into()));
    }
    let c = truth.inner(&raw)? / rr;
    let ab = lattice.ab();
    let dev = (c - Complex64::new(ab, 0.0)).norm() / ab;
    if dev > CALIBRATION_TOLERANCE {
        return Err(Error::Calibration(format!(
            "measured C = {c} deviates from ab = {ab} by {:.3}%",
            100.0 * dev
        )));
    }
    log::info!("calibration constant C = {c} (ab = {ab})");
    Ok(kernel.with_constant(c))
}

/// Comparison of a reconstruction with the operator it came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub relative_error: f64,
    /// `||sigma_hat (1 - phi)|| / ||sigma_hat||` over points where `phi < 1`.
    pub out_of_band_fraction: f64,
    /// `max |sigma_hat_rec|` outside `Q`, relative to its maximum.
    pub support_leak: f64,
    pub warning: Option<String>,
}

pub fn evaluate(truth: &KnOperator, rec: &SampledSymbol, kernel: &ReconstructionKernel) -> Result<Evaluation> {
    let truth = truth.to_sampled()?;
    let sigma = truth.symbol.as_ref().expect("sampled");
    let sigma_hat = truth.spreading.as_ref().expect("sampled");
    sigma.check_compatible(rec)?;
    let relative_error = relative_l2(&rec.values, &sigma.values);
    let phi = &kernel.phi.samples.values;
    let outside: f64 = sigma_hat
        .values
        .iter()
        .zip(phi)
        .filter(|(_, p)| p.re < 1.0)
        .map(|(v, _)| v.norm_sqr())
        .sum();
    let total: f64 = sigma_hat.values.iter().map(|v| v.norm_sqr()).sum();
    let out_of_band_fraction = if total > 0.0 { (outside / total).sqrt() } else { 0.0 };
    let rec_hat = fourier2d_unchecked(rec, Direction::Forward);
    let q = kernel.khat.support_box.expect("kernel records Q");
    let grid = rec_hat.grid;
    let (mut leak, mut top) = (0.0f64, 0.0f64);
    for i1 in 0..grid.axis1.n_samples() {
        for i2 in 0..grid.axis2.n_samples() {
            let v = rec_hat.at(i1, i2).norm();
            top = top.max(v);
            let (p, qq) = grid.point(i1, i2);
            if !q.contains_on(&grid, p, qq) {
                leak = leak.max(v);
            }
        }
    }
    let support_leak = if top > 0.0 { leak / top } else { 0.0 };
    let warning = (out_of_band_fraction > 1e-12).then(|| {
        let msg = format!(
            "spreading function has {:.3e} of its norm outside the region where phi = 1; reconstruction is not exact",
            out_of_band_fraction
        );
        log::warn!("{msg}");
        msg
    });
    Ok(Evaluation { relative_error, out_of_band_fraction, support_leak, warning })
}
