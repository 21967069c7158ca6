//! Kohn-Nirenberg operators in symbol and spreading form.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{fourier, fourier2d, Direction};
use crate::grid::{inner_weighted, BandBox, PlaneGrid, Roots, SampledSignal, SampledSymbol, SignalDomain, SymbolDomain, TimeGrid};
use crate::tf::{rihaczek, shift_steps};

/// One term `amplitude * M_eta T_{-u}` of a point-scatterer channel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactShift {
    pub amplitude: Complex64,
    /// Doppler
    pub eta: f64,
    /// delay
    pub u: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothness {
    White,
    Smooth,
}

/// A Kohn-Nirenberg operator on a periodic time grid.
///
/// Either a sampled symbol/spreading pair or a finite list of exact
/// time-frequency shifts; never both.
#[derive(Clone, Debug)]
pub struct KnOperator {
    pub grid: TimeGrid,
    pub symbol: Option<SampledSymbol>,
    pub spreading: Option<SampledSymbol>,
    pub band_box: Option<BandBox>,
    pub exact_shifts: Vec<ExactShift>,
}

fn check_time(f: &SampledSignal) -> Result<()> {
    if f.domain != SignalDomain::Time {
        return Err(Error::DomainMismatch {
            expected: "time",
            found: f.domain.name(),
        });
    }
    Ok(())
}

fn check_band_fits(band: &BandBox, spreading: &PlaneGrid) -> Result<()> {
    let n1 = spreading.axis1.period() / 2.0;
    let n2 = spreading.axis2.period() / 2.0;
    if band.half1 >= n1 || band.half2 >= n2 {
        return Err(Error::InvalidBand(format!(
            "band box half-widths ({}, {}) must stay below the grid half-ranges ({n1}, {n2})",
            band.half1, band.half2
        )));
    }
    Ok(())
}

impl KnOperator {
    /// Operator given by a spreading function; values outside `band_box`
    /// are zeroed.
    pub fn from_spreading(spreading: SampledSymbol, band_box: Option<BandBox>) -> Result<Self> {
        if spreading.domain != SymbolDomain::Spreading {
            return Err(Error::DomainMismatch {
                expected: "spreading",
                found: spreading.domain.name(),
            });
        }
        let grid = spreading.grid.axis2;
        if !spreading.grid.same_as(&PlaneGrid::spreading_grid(&grid)) {
            return Err(Error::GridMismatch(
                "spreading function must live on (frequency, time) of one time grid".into(),
            ));
        }
        let spreading = match band_box {
            Some(b) => {
                check_band_fits(&b, &spreading.grid)?;
                spreading.masked(b)
            }
            None => spreading,
        };
        let mut symbol = fourier2d(&spreading, Direction::Inverse)?;
        symbol.support_box = None;
        Ok(Self {
            grid,
            symbol: Some(symbol),
            spreading: Some(spreading),
            band_box,
            exact_shifts: Vec::new(),
        })
    }

    pub fn from_symbol(symbol: SampledSymbol) -> Result<Self> {
        if symbol.domain != SymbolDomain::Symbol {
            return Err(Error::DomainMismatch {
                expected: "symbol",
                found: symbol.domain.name(),
            });
        }
        let grid = symbol.grid.axis1;
        if !symbol.grid.same_as(&PlaneGrid::symbol_grid(&grid)) {
            return Err(Error::GridMismatch(
                "symbol must live on (time, frequency) of one time grid".into(),
            ));
        }
        let spreading = fourier2d(&symbol, Direction::Forward)?;
        Ok(Self {
            grid,
            symbol: Some(symbol),
            spreading: Some(spreading),
            band_box: None,
            exact_shifts: Vec::new(),
        })
    }

    /// Spreading function sampled from `f(eta, u)` and restricted to `band_box`.
    pub fn from_spreading_fn<F>(grid: TimeGrid, band_box: BandBox, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> Complex64,
    {
        let plane = PlaneGrid::spreading_grid(&grid);
        check_band_fits(&band_box, &plane)?;
        let s = SampledSymbol::sample(plane, SymbolDomain::Spreading, |eta, u| {
            if band_box.contains_on(&plane, eta, u) {
                f(eta, u)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })?;
        Self::from_spreading(s, Some(band_box))
    }

    /// `sigma = 1`, whose spreading function is the grid delta at the origin.
    pub fn identity(grid: TimeGrid) -> Self {
        let plane = PlaneGrid::spreading_grid(&grid);
        let mut s = SampledSymbol::zeros(plane, SymbolDomain::Spreading);
        let idx = plane.index(plane.axis1.center(), plane.axis2.center());
        s.values[idx] = Complex64::new(1.0 / plane.cell_area(), 0.0);
        let band = BandBox { half1: 0.0, half2: 0.0 };
        Self::from_spreading(s, Some(band)).expect("origin delta fits every grid")
    }

    pub fn zero(grid: TimeGrid) -> Self {
        let plane = PlaneGrid::spreading_grid(&grid);
        Self::from_spreading(SampledSymbol::zeros(plane, SymbolDomain::Spreading), None)
            .expect("zero spreading is valid")
    }

    pub fn is_exact(&self) -> bool {
        !self.exact_shifts.is_empty() || self.spreading.is_none()
    }

    /// The grid proxy of an exact-shift operator: mass `amplitude / (d_eta du)`
    /// at each shift. Sampled operators are returned unchanged.
    pub fn to_sampled(&self) -> Result<Self> {
        if !self.is_exact() {
            return Ok(self.clone());
        }
        let plane = PlaneGrid::spreading_grid(&self.grid);
        let mut s = SampledSymbol::zeros(plane, SymbolDomain::Spreading);
        let mut h1: f64 = 0.0;
        let mut h2: f64 = 0.0;
        for sh in &self.exact_shifts {
            let k1 = plane.axis1.steps_of(sh.eta, "doppler")?;
            let k2 = plane.axis2.steps_of(sh.u, "delay")?;
            let idx = plane.index(plane.axis1.wrap(k1), plane.axis2.wrap(k2));
            s.values[idx] += sh.amplitude / plane.cell_area();
            h1 = h1.max(sh.eta.abs());
            h2 = h2.max(sh.u.abs());
        }
        Self::from_spreading(s, Some(BandBox::new(h1, h2)?))
    }

    /// `alpha * self + beta * other`. Mixing an exact-shift operator with a
    /// sampled one goes through the grid proxy.
    pub fn combine(&self, alpha: Complex64, other: &KnOperator, beta: Complex64) -> Result<Self> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch("operators live on different grids".into()));
        }
        if self.is_exact() && other.is_exact() {
            let exact_shifts = self
                .exact_shifts
                .iter()
                .map(|s| ExactShift { amplitude: alpha * s.amplitude, ..*s })
                .chain(other.exact_shifts.iter().map(|s| ExactShift {
                    amplitude: beta * s.amplitude,
                    ..*s
                }))
                .collect();
            return Ok(Self {
                grid: self.grid,
                symbol: None,
                spreading: None,
                band_box: None,
                exact_shifts,
            });
        }
        let a = self.to_sampled()?;
        let b = other.to_sampled()?;
        let s = a
            .spreading
            .as_ref()
            .expect("sampled")
            .combine(alpha, b.spreading.as_ref().expect("sampled"), beta)?;
        let band = match (a.band_box, b.band_box) {
            (Some(x), Some(y)) => Some(BandBox {
                half1: x.half1.max(y.half1),
                half2: x.half2.max(y.half2),
            }),
            _ => None,
        };
        Self::from_spreading(s, band)
    }

    pub fn scaled(&self, alpha: Complex64) -> Self {
        let mut out = self.clone();
        for s in &mut out.exact_shifts {
            s.amplitude *= alpha;
        }
        out.symbol = out.symbol.map(|v| v.scaled(alpha));
        out.spreading = out.spreading.map(|v| v.scaled(alpha));
        out
    }

    /// Nonzero spreading samples as `(eta steps, u steps, weighted value)`.
    fn terms(&self) -> Vec<(i64, i64, Complex64)> {
        if self.is_exact() {
            return self
                .exact_shifts
                .iter()
                .map(|s| {
                    let k1 = self.grid.dual().steps_of(s.eta, "doppler").expect("validated on construction");
                    let k2 = self.grid.steps_of(s.u, "delay").expect("validated on construction");
                    (k1, k2, s.amplitude)
                })
                .collect();
        }
        let s = self.spreading.as_ref().expect("sampled");
        let w = s.grid.cell_area();
        let (i1s, i2s) = match self.band_box {
            Some(b) => b.axis_indices(&s.grid),
            None => ((0..s.grid.axis1.n_samples()).collect(), (0..s.grid.axis2.n_samples()).collect()),
        };
        let mut out = Vec::new();
        for &i1 in &i1s {
            for &i2 in &i2s {
                let v = s.at(i1, i2);
                if v != Complex64::new(0.0, 0.0) {
                    out.push((s.grid.axis1.offset(i1), s.grid.axis2.offset(i2), v * w));
                }
            }
        }
        out
    }
}

/// Random bandlimited operator: complex normal spreading samples inside
/// `band_box`, zero outside, scaled to unit L2 norm.
///
/// `grid` is the symbol grid. In smooth mode the samples are tapered by
/// `cos^2` profiles that vanish on the box faces.
pub fn synth_bandlimited(grid: &PlaneGrid, band_box: BandBox, seed: u64, smoothness: Smoothness) -> Result<KnOperator> {
    let time = grid.axis1;
    if !grid.same_as(&PlaneGrid::symbol_grid(&time)) {
        return Err(Error::GridMismatch("expected a symbol grid (time, frequency)".into()));
    }
    let plane = PlaneGrid::spreading_grid(&time);
    check_band_fits(&band_box, &plane)?;
    let mut s = SampledSymbol::zeros(plane, SymbolDomain::Spreading);
    if band_box.half1 > 0.0 && band_box.half2 > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (i1s, i2s) = band_box.axis_indices(&plane);
        for &i1 in &i1s {
            for &i2 in &i2s {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                let (eta, u) = plane.point(i1, i2);
                let taper = match smoothness {
                    Smoothness::White => 1.0,
                    Smoothness::Smooth => cos2(eta / band_box.half1) * cos2(u / band_box.half2),
                };
                s.values[plane.index(i1, i2)] = Complex64::new(re, im) * taper;
            }
        }
        let norm = s.norm();
        if norm > 0.0 {
            s = s.scaled(Complex64::new(1.0 / norm, 0.0));
        }
    }
    KnOperator::from_spreading(s, Some(band_box))
}

fn cos2(r: f64) -> f64 {
    if r.abs() >= 1.0 {
        0.0
    } else {
        (std::f64::consts::FRAC_PI_2 * r).cos().powi(2)
    }
}

/// Single point scatterer with delay `tau` and Doppler `nu`.
pub fn point_scatterer(grid: TimeGrid, amplitude: Complex64, tau: f64, nu: f64) -> Result<KnOperator> {
    grid.dual().steps_of(nu, "doppler")?;
    grid.steps_of(tau, "delay")?;
    Ok(KnOperator {
        grid,
        symbol: None,
        spreading: None,
        band_box: None,
        exact_shifts: vec![ExactShift { amplitude, eta: nu, u: tau }],
    })
}

/// Sum of exact point scatterers `(amplitude, tau, nu)`.
pub fn point_scatterers(grid: TimeGrid, list: &[(Complex64, f64, f64)]) -> Result<KnOperator> {
    let mut shifts = Vec::with_capacity(list.len());
    for &(amplitude, tau, nu) in list {
        shifts.extend(point_scatterer(grid, amplitude, tau, nu)?.exact_shifts);
    }
    Ok(KnOperator {
        grid,
        symbol: None,
        spreading: None,
        band_box: None,
        exact_shifts: shifts,
    })
}

/// `sum sigma_hat(eta, u) M_eta T_{-u} f` over the support of the spreading
/// function (exact finite sum for point scatterers).
pub fn apply_spreading(op: &KnOperator, f: &SampledSignal) -> Result<SampledSignal> {
    check_time(f)?;
    if !f.grid.same_as(&op.grid) {
        return Err(Error::GridMismatch("signal and operator grids differ".into()));
    }
    let terms = op.terms();
    let n = f.grid.n_samples() as i64;
    let c = f.grid.center() as i64;
    let roots = Roots::new(n as usize);
    if op.is_exact() {
        let mut out = vec![Complex64::new(0.0, 0.0); n as usize];
        for &(k1, k2, amp) in &terms {
            let shifted = shift_steps(&f.values, &f.grid, &roots, -k2, k1);
            for (o, s) in out.iter_mut().zip(shifted) {
                *o += amp * s;
            }
        }
        return Ok(SampledSignal { grid: f.grid, values: out, domain: SignalDomain::Time });
    }
    let values = (0..n)
        .into_par_iter()
        .map(|k| {
            let x = k - c;
            terms.iter().fold(Complex64::new(0.0, 0.0), |acc, &(k1, k2, w)| {
                acc + w * roots.get(k1 * x) * f.values[(k + k2).rem_euclid(n) as usize]
            })
        })
        .collect();
    Ok(SampledSignal { grid: f.grid, values, domain: SignalDomain::Time })
}

/// `sum_xi sigma(x, xi) exp(2 pi i x xi) f_hat(xi) d_xi` at every time sample.
pub fn apply_symbol(op: &KnOperator, f: &SampledSignal) -> Result<SampledSignal> {
    check_time(f)?;
    let symbol = op.symbol.as_ref().ok_or(Error::NoSampledSymbol)?;
    if !f.grid.same_as(&op.grid) {
        return Err(Error::GridMismatch("signal and operator grids differ".into()));
    }
    let f_hat = fourier(f, Direction::Forward)?;
    let n = f.grid.n_samples();
    let c = f.grid.center() as i64;
    let roots = Roots::new(n);
    let dxi = f.grid.dual_step();
    let values = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = i as i64 - c;
            let row = &symbol.values[i * n..(i + 1) * n];
            let s = row
                .iter()
                .zip(&f_hat.values)
                .enumerate()
                .fold(Complex64::new(0.0, 0.0), |acc, (m, (s, fh))| {
                    acc + s * fh * roots.get(x * (m as i64 - c))
                });
            s * dxi
        })
        .collect();
    Ok(SampledSignal { grid: f.grid, values, domain: SignalDomain::Time })
}

/// `<sigma, R(g, f)>`, which equals `<sigma^KN f, g>`.
///
/// Point-scatterer operators have no sampled symbol; for them the pairing is
/// evaluated on the spreading side as `sum amplitude * <M_eta T_{-u} f, g>`.
pub fn kn_bilinear(op: &KnOperator, f: &SampledSignal, g: &SampledSignal) -> Result<Complex64> {
    check_time(f)?;
    f.check_compatible(g)?;
    if !f.grid.same_as(&op.grid) {
        return Err(Error::GridMismatch("signal and operator grids differ".into()));
    }
    match &op.symbol {
        Some(symbol) => {
            let r = rihaczek(g, f)?;
            Ok(inner_weighted(&symbol.values, &r.values, symbol.grid.cell_area()))
        }
        None => {
            let roots = Roots::new(f.grid.n_samples());
            let mut acc = Complex64::new(0.0, 0.0);
            for &(k1, k2, amp) in &op.terms() {
                let s = shift_steps(&f.values, &f.grid, &roots, -k2, k1);
                acc += amp * inner_weighted(&s, &g.values, f.grid.step());
            }
            Ok(acc)
        }
    }
}
