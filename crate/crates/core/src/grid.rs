//! Uniform centered grids and the sampled functions that live on them.
//!
//! A [`TimeGrid`] with `n` samples and period `T` places sample `k` at
//! `t_k = (k - n/2) * T / n`, so the origin is always a grid point and the
//! grid covers `[-T/2, T/2)`. The frequency grid of a signal is the *dual*
//! grid with the same sample count and period `n / T`; the product
//! `dt * df * n` is exactly one.
//!
//! Two-dimensional phase-space functions use a [`PlaneGrid`] built from two
//! time grids. Symbols `sigma(x, xi)` sit on `(time, frequency)` and their
//! spreading functions `sigma_hat(eta, u)` on the swapped pair
//! `(frequency, time)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

const ALIGN_TOL: f64 = 1e-9;

/// A uniform, centered, periodic 1-D grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    n_samples: usize,
    period: f64,
}

impl TimeGrid {
    pub fn new(n_samples: usize, period: f64) -> Result<Self> {
        if n_samples < 2 || !n_samples.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "n_samples must be even and at least 2, got {n_samples}"
            )));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "period must be positive and finite, got {period}"
            )));
        }
        Ok(Self { n_samples, period })
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Sample spacing `T / n`.
    pub fn step(&self) -> f64 {
        self.period / self.n_samples as f64
    }

    /// Spacing of the dual (Fourier) grid, `1 / T`.
    pub fn dual_step(&self) -> f64 {
        1.0 / self.period
    }

    /// The Fourier-dual grid: same sample count, period `n / T`.
    pub fn dual(&self) -> TimeGrid {
        TimeGrid {
            n_samples: self.n_samples,
            period: self.n_samples as f64 / self.period,
        }
    }

    /// Index of the origin.
    pub fn center(&self) -> usize {
        self.n_samples / 2
    }

    pub fn point(&self, k: usize) -> f64 {
        (k as f64 - self.center() as f64) * self.step()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_samples).map(|k| self.point(k)).collect()
    }

    /// Signed offset from the origin, in samples, of `k`.
    pub fn offset(&self, k: usize) -> i64 {
        k as i64 - self.center() as i64
    }

    /// Storage index of the grid point `offset` samples away from the origin,
    /// wrapped periodically.
    pub fn wrap(&self, offset: i64) -> usize {
        (offset + self.center() as i64).rem_euclid(self.n_samples as i64) as usize
    }

    /// Number of steps represented by `value`, or an error naming the nearest
    /// representable value when `value` is off the grid.
    pub fn steps_of(&self, value: f64, axis: &'static str) -> Result<i64> {
        let step = self.step();
        let r = value / step;
        let k = r.round();
        if (r - k).abs() > ALIGN_TOL * r.abs().max(1.0) {
            return Err(Error::OffGrid {
                axis,
                value,
                step,
                nearest: k * step,
            });
        }
        Ok(k as i64)
    }

    /// Whether two grids are the same up to floating round-off.
    pub fn same_as(&self, other: &TimeGrid) -> bool {
        self.n_samples == other.n_samples
            && (self.period - other.period).abs() <= 1e-12 * self.period.max(other.period)
    }
}

/// Phase factors `exp(2 pi i j / n)` for the exact integer-index exponentials
/// that appear on a grid and its dual.
#[derive(Clone, Debug)]
pub(crate) struct Roots {
    table: Vec<Complex64>,
}

impl Roots {
    pub(crate) fn new(n: usize) -> Self {
        let table = (0..n)
            .map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64))
            .collect();
        Self { table }
    }

    /// `exp(2 pi i j / n)` for any integer `j`.
    #[inline]
    pub(crate) fn get(&self, j: i64) -> Complex64 {
        self.table[j.rem_euclid(self.table.len() as i64) as usize]
    }
}

/// Tensor product of two time grids.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneGrid {
    pub axis1: TimeGrid,
    pub axis2: TimeGrid,
}

impl PlaneGrid {
    pub fn new(axis1: TimeGrid, axis2: TimeGrid) -> Self {
        Self { axis1, axis2 }
    }

    /// Phase-space grid for symbols `sigma(x, xi)` of signals on `time`.
    pub fn symbol_grid(time: &TimeGrid) -> Self {
        Self::new(*time, time.dual())
    }

    /// Grid for spreading functions `sigma_hat(eta, u)` of signals on `time`.
    pub fn spreading_grid(time: &TimeGrid) -> Self {
        Self::new(time.dual(), *time)
    }

    /// Fourier-dual plane grid.
    pub fn dual(&self) -> Self {
        Self::new(self.axis1.dual(), self.axis2.dual())
    }

    pub fn swapped(&self) -> Self {
        Self::new(self.axis2, self.axis1)
    }

    pub fn len(&self) -> usize {
        self.axis1.n_samples() * self.axis2.n_samples()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.axis1.n_samples(), self.axis2.n_samples())
    }

    #[inline]
    pub fn index(&self, i1: usize, i2: usize) -> usize {
        i1 * self.axis2.n_samples() + i2
    }

    pub fn point(&self, i1: usize, i2: usize) -> (f64, f64) {
        (self.axis1.point(i1), self.axis2.point(i2))
    }

    /// Quadrature weight of one cell.
    pub fn cell_area(&self) -> f64 {
        self.axis1.step() * self.axis2.step()
    }

    pub fn same_as(&self, other: &PlaneGrid) -> bool {
        self.axis1.same_as(&other.axis1) && self.axis2.same_as(&other.axis2)
    }
}

/// Centered rectangle `[-half1, half1] x [-half2, half2]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandBox {
    pub half1: f64,
    pub half2: f64,
}

impl BandBox {
    pub fn new(half1: f64, half2: f64) -> Result<Self> {
        if !(half1 >= 0.0 && half2 >= 0.0 && half1.is_finite() && half2.is_finite()) {
            return Err(Error::InvalidBand(format!(
                "half-widths must be finite and non-negative, got ({half1}, {half2})"
            )));
        }
        Ok(Self { half1, half2 })
    }

    /// Membership with a small tolerance relative to the grid steps so that
    /// boxes whose faces sit on grid points include those points.
    pub fn contains_on(&self, grid: &PlaneGrid, p: f64, q: f64) -> bool {
        let t1 = 1e-9 * grid.axis1.step();
        let t2 = 1e-9 * grid.axis2.step();
        p.abs() <= self.half1 + t1 && q.abs() <= self.half2 + t2
    }

    pub fn shrink(&self, d1: f64, d2: f64) -> Result<Self> {
        Self::new(self.half1 - d1, self.half2 - d2)
    }

    pub fn is_inside(&self, other: &BandBox) -> bool {
        self.half1 <= other.half1 + 1e-12 && self.half2 <= other.half2 + 1e-12
    }

    /// Storage indices (per axis) of the grid points inside the box.
    pub fn axis_indices(&self, grid: &PlaneGrid) -> (Vec<usize>, Vec<usize>) {
        let i1 = (0..grid.axis1.n_samples())
            .filter(|&i| grid.axis1.point(i).abs() <= self.half1 + 1e-9 * grid.axis1.step())
            .collect();
        let i2 = (0..grid.axis2.n_samples())
            .filter(|&i| grid.axis2.point(i).abs() <= self.half2 + 1e-9 * grid.axis2.step())
            .collect();
        (i1, i2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalDomain {
    Time,
    Frequency,
}

impl SignalDomain {
    pub fn name(&self) -> &'static str {
        match self {
            SignalDomain::Time => "time",
            SignalDomain::Frequency => "frequency",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolDomain {
    /// `sigma(x, xi)`
    Symbol,
    /// `sigma_hat(eta, u)`
    Spreading,
}

impl SymbolDomain {
    pub fn name(&self) -> &'static str {
        match self {
            SymbolDomain::Symbol => "symbol",
            SymbolDomain::Spreading => "spreading",
        }
    }

    pub fn toggled(&self) -> Self {
        match self {
            SymbolDomain::Symbol => SymbolDomain::Spreading,
            SymbolDomain::Spreading => SymbolDomain::Symbol,
        }
    }
}

/// Complex samples of a function of one variable.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledSignal {
    pub grid: TimeGrid,
    pub values: Vec<Complex64>,
    pub domain: SignalDomain,
}

impl SampledSignal {
    pub fn new(grid: TimeGrid, values: Vec<Complex64>, domain: SignalDomain) -> Result<Self> {
        if values.len() != grid.n_samples() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} samples",
                values.len(),
                grid.n_samples()
            )));
        }
        Ok(Self {
            grid,
            values,
            domain,
        })
    }

    pub fn zeros(grid: TimeGrid, domain: SignalDomain) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.n_samples()],
            domain,
        }
    }

    /// Samples `f` at every grid point.
    pub fn sample<F>(grid: TimeGrid, domain: SignalDomain, f: F) -> Result<Self>
    where
        F: Fn(f64) -> Complex64,
    {
        let mut values = Vec::with_capacity(grid.n_samples());
        for k in 0..grid.n_samples() {
            let t = grid.point(k);
            let v = f(t);
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NonFinite {
                    value: v.to_string(),
                    location: format!("t = {t} (index {k})"),
                });
            }
            values.push(v);
        }
        Ok(Self {
            grid,
            values,
            domain,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `sqrt(dt * sum |f_k|^2)`
    pub fn norm(&self) -> f64 {
        (self.grid.step() * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// `<self, other> = dt * sum self_k * conj(other_k)`
    pub fn inner(&self, other: &SampledSignal) -> Result<Complex64> {
        self.check_compatible(other)?;
        Ok(inner_weighted(&self.values, &other.values, self.grid.step()))
    }

    pub fn check_compatible(&self, other: &SampledSignal) -> Result<()> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch(format!(
                "signal grids differ: {:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        if self.domain != other.domain {
            return Err(Error::DomainMismatch {
                expected: self.domain.name(),
                found: other.domain.name(),
            });
        }
        Ok(())
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * s).collect(),
            domain: self.domain,
        }
    }

    /// `alpha * self + beta * other`
    pub fn combine(&self, alpha: Complex64, other: &SampledSignal, beta: Complex64) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| alpha * a + beta * b)
                .collect(),
            domain: self.domain,
        })
    }

    /// Largest pointwise distance to `other`.
    pub fn max_abs_diff(&self, other: &SampledSignal) -> f64 {
        max_abs_diff(&self.values, &other.values)
    }

    /// `||self - other|| / ||other||`
    pub fn relative_error(&self, reference: &SampledSignal) -> f64 {
        relative_l2(&self.values, &reference.values)
    }
}

/// Complex samples of a function on the plane, stored row-major with
/// `axis1` as the outer index.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledSymbol {
    pub grid: PlaneGrid,
    pub values: Vec<Complex64>,
    pub domain: SymbolDomain,
    pub support_box: Option<BandBox>,
}

impl SampledSymbol {
    pub fn new(grid: PlaneGrid, values: Vec<Complex64>, domain: SymbolDomain) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a plane grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid,
            values,
            domain,
            support_box: None,
        })
    }

    pub fn zeros(grid: PlaneGrid, domain: SymbolDomain) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
            domain,
            support_box: None,
        }
    }

    pub fn sample<F>(grid: PlaneGrid, domain: SymbolDomain, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> Complex64,
    {
        let (n1, n2) = grid.shape();
        let mut values = Vec::with_capacity(grid.len());
        for i1 in 0..n1 {
            let p = grid.axis1.point(i1);
            for i2 in 0..n2 {
                let q = grid.axis2.point(i2);
                let v = f(p, q);
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(Error::NonFinite {
                        value: v.to_string(),
                        location: format!("({p}, {q}) (index ({i1}, {i2}))"),
                    });
                }
                values.push(v);
            }
        }
        Ok(Self {
            grid,
            values,
            domain,
            support_box: None,
        })
    }

    /// Attaches a support box after checking that every value outside it is
    /// exactly zero.
    pub fn with_support(mut self, support: BandBox) -> Result<Self> {
        let (n1, n2) = self.grid.shape();
        for i1 in 0..n1 {
            for i2 in 0..n2 {
                let (p, q) = self.grid.point(i1, i2);
                let v = self.values[self.grid.index(i1, i2)];
                if !support.contains_on(&self.grid, p, q) && v != Complex64::new(0.0, 0.0) {
                    return Err(Error::InvalidBand(format!(
                        "nonzero value {v} at ({p}, {q}) outside support box {support:?}"
                    )));
                }
            }
        }
        self.support_box = Some(support);
        Ok(self)
    }

    /// Zeroes every value outside `support` and records the box.
    pub fn masked(mut self, support: BandBox) -> Self {
        let (n1, n2) = self.grid.shape();
        for i1 in 0..n1 {
            for i2 in 0..n2 {
                let (p, q) = self.grid.point(i1, i2);
                if !support.contains_on(&self.grid, p, q) {
                    let idx = self.grid.index(i1, i2);
                    self.values[idx] = Complex64::new(0.0, 0.0);
                }
            }
        }
        self.support_box = Some(support);
        self
    }

    #[inline]
    pub fn at(&self, i1: usize, i2: usize) -> Complex64 {
        self.values[self.grid.index(i1, i2)]
    }

    /// Value at the grid point closest to `(p, q)`; both coordinates must be
    /// grid-aligned.
    pub fn value_at(&self, p: f64, q: f64) -> Result<Complex64> {
        let k1 = self.grid.axis1.steps_of(p, "axis1")?;
        let k2 = self.grid.axis2.steps_of(q, "axis2")?;
        Ok(self.at(self.grid.axis1.wrap(k1), self.grid.axis2.wrap(k2)))
    }

    /// `sqrt(d1 * d2 * sum |F|^2)`
    pub fn norm(&self) -> f64 {
        (self.grid.cell_area() * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn inner(&self, other: &SampledSymbol) -> Result<Complex64> {
        self.check_compatible(other)?;
        Ok(inner_weighted(&self.values, &other.values, self.grid.cell_area()))
    }

    pub fn check_compatible(&self, other: &SampledSymbol) -> Result<()> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch(format!(
                "plane grids differ: {:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        if self.domain != other.domain {
            return Err(Error::DomainMismatch {
                expected: self.domain.name(),
                found: other.domain.name(),
            });
        }
        Ok(())
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * s).collect(),
            domain: self.domain,
            support_box: self.support_box,
        }
    }

    pub fn combine(&self, alpha: Complex64, other: &SampledSymbol, beta: Complex64) -> Result<Self> {
        self.check_compatible(other)?;
        let support_box = match (self.support_box, other.support_box) {
            (Some(a), Some(b)) => Some(BandBox {
                half1: a.half1.max(b.half1),
                half2: a.half2.max(b.half2),
            }),
            _ => None,
        };
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| alpha * a + beta * b)
                .collect(),
            domain: self.domain,
            support_box,
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &SampledSymbol) -> f64 {
        max_abs_diff(&self.values, &other.values)
    }

    pub fn relative_error(&self, reference: &SampledSymbol) -> f64 {
        relative_l2(&self.values, &reference.values)
    }
}

pub(crate) fn inner_weighted(a: &[Complex64], b: &[Complex64], w: f64) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum::<Complex64>() * w
}

pub(crate) fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub(crate) fn relative_l2(a: &[Complex64], reference: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(reference).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = reference.iter().map(|y| y.norm_sqr()).sum();
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_centered_and_self_consistent() {
        let g = TimeGrid::new(256, 16.0).unwrap();
        assert_eq!(g.point(0), -8.0);
        assert_eq!(g.point(128), 0.0);
        let prod = g.step() * g.dual_step() * 256.0;
        assert!((prod - 1.0).abs() < 1e-12);
        assert!((g.dual().step() - g.dual_step()).abs() < 1e-15);
        assert!(g.dual().dual().same_as(&g));
    }

    #[test]
    fn odd_or_empty_grids_are_rejected() {
        assert!(TimeGrid::new(255, 16.0).is_err());
        assert!(TimeGrid::new(0, 16.0).is_err());
        assert!(TimeGrid::new(16, -1.0).is_err());
    }

    #[test]
    fn gaussian_sample_at_origin_is_one() {
        let g = TimeGrid::new(256, 16.0).unwrap();
        let f = SampledSignal::sample(g, SignalDomain::Time, |t| {
            Complex64::new((-PI * t * t).exp(), 0.0)
        })
        .unwrap();
        assert_eq!(f.values[128], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn zero_function_has_zero_norm() {
        let g = TimeGrid::new(64, 8.0).unwrap();
        let f = SampledSignal::sample(g, SignalDomain::Time, |_| Complex64::new(0.0, 0.0)).unwrap();
        assert_eq!(f.norm(), 0.0);
    }

    #[test]
    fn gaussian_norm_matches_high_resolution_quadrature() {
        // Oracle: composite Simpson rule on [-10, 10] with 200k panels.
        let n = 200_000;
        let h = 20.0 / n as f64;
        let mut s = 0.0;
        for i in 0..=n {
            let t = -10.0 + i as f64 * h;
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            s += w * (-2.0 * PI * t * t).exp();
        }
        let oracle = (s * h / 3.0).sqrt();
        assert!((oracle - 2f64.powf(-0.25)).abs() < 1e-12);

        let g = TimeGrid::new(256, 16.0).unwrap();
        let f = SampledSignal::sample(g, SignalDomain::Time, |t| {
            Complex64::new((-PI * t * t).exp(), 0.0)
        })
        .unwrap();
        assert!((f.norm() - oracle).abs() < 1e-8);
    }

    #[test]
    fn non_finite_samples_report_location() {
        let g = TimeGrid::new(16, 4.0).unwrap();
        let err = SampledSignal::sample(g, SignalDomain::Time, |t| Complex64::new(1.0 / t, 0.0))
            .unwrap_err();
        match err {
            Error::NonFinite { location, .. } => assert!(location.contains("index 8")),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn support_box_is_enforced() {
        let t = TimeGrid::new(16, 4.0).unwrap();
        let grid = PlaneGrid::spreading_grid(&t);
        let band = BandBox::new(0.5, 0.5).unwrap();
        let s = SampledSymbol::sample(grid, SymbolDomain::Spreading, |_, _| Complex64::new(1.0, 0.0))
            .unwrap();
        assert!(s.clone().with_support(band).is_err());
        let m = s.masked(band);
        assert!(m.clone().with_support(band).is_ok());
        let nonzero = m.values.iter().filter(|v| v.norm() > 0.0).count();
        // eta step 1/4 -> 5 points in [-0.5, 0.5]; u step 1/4 -> 5 points.
        assert_eq!(nonzero, 25);
    }

    #[test]
    fn off_grid_values_name_the_nearest_point() {
        let g = TimeGrid::new(256, 16.0).unwrap();
        assert_eq!(g.steps_of(0.25, "x").unwrap(), 4);
        match g.steps_of(0.26, "x").unwrap_err() {
            Error::OffGrid { nearest, .. } => assert!((nearest - 0.25).abs() < 1e-12),
            other => panic!("unexpected {other}"),
        }
    }
}
