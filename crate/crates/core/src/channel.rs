//! Gabor lattices, frame bounds and channel matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::convolve2d;
use crate::grid::{inner_weighted, Roots, SampledSignal, SignalDomain, TimeGrid};
use crate::psido::{apply_spreading, KnOperator};
use crate::tf::{rihaczek, shift_steps, star_involution, Window, WindowKind};

/// How the infinite lattice is cut down to a finite index set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Truncation {
    /// `|k| <= k1`, `|l| <= k2`, restricted to points strictly inside the grid box.
    Radii { k1: i64, k2: i64 },
    /// One full period of the lattice on the periodic grid. Requires `a` and
    /// `b` to divide the grid period and frequency range.
    FullPeriod,
}

/// Separable lattice `a Z x b Z` aligned with a time grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaborLattice {
    pub grid: TimeGrid,
    pub a: f64,
    pub b: f64,
    /// `a / dt`
    pub n_a: i64,
    /// `b / df`
    pub n_b: i64,
    pub truncation: Truncation,
    /// `(k, l)` pairs, `k` outer.
    pub points: Vec<(i64, i64)>,
}

fn align(grid: &TimeGrid, value: f64, name: &'static str) -> Result<i64> {
    let step = grid.step();
    match grid.steps_of(value, name) {
        Ok(k) if k > 0 => Ok(k),
        Ok(_) => Err(Error::InvalidLattice(format!("{name} must be positive, got {value}"))),
        Err(_) => {
            let nearest = ((value / step).round().max(1.0)) * step;
            Err(Error::MisalignedLattice { name, value, step, nearest })
        }
    }
}

fn full_range(m: i64) -> std::ops::Range<i64> {
    let lo = -(m / 2);
    lo..lo + m
}

impl GaborLattice {
    pub fn ab(&self) -> f64 {
        self.a * self.b
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Phase-space coordinates `(k a, l b)` of entry `idx`.
    pub fn point(&self, idx: usize) -> (f64, f64) {
        let (k, l) = self.points[idx];
        (k as f64 * self.a, l as f64 * self.b)
    }

    /// Grid-step offsets `(k n_a, l n_b)` of entry `idx`.
    pub fn steps(&self, idx: usize) -> (i64, i64) {
        let (k, l) = self.points[idx];
        (k * self.n_a, l * self.n_b)
    }

    pub fn index_of(&self, k: i64, l: i64) -> Option<usize> {
        self.points.iter().position(|&p| p == (k, l))
    }

    /// Parameters `(b, a)` of the lattice `b Z x a Z`.
    pub fn transposed_params(&self) -> (f64, f64) {
        (self.b, self.a)
    }

    /// Parameters `(1/b, 1/a)` of the adjoint lattice.
    pub fn adjoint_params(&self) -> (f64, f64) {
        (1.0 / self.b, 1.0 / self.a)
    }

    /// Number of lattice periods along each axis when the truncation is a full
    /// period: `(T / a, (n / T) / b)`.
    pub fn period_counts(&self) -> Option<(i64, i64)> {
        let n = self.grid.n_samples() as i64;
        (n % self.n_a == 0 && n % self.n_b == 0).then(|| (n / self.n_a, n / self.n_b))
    }

    pub fn is_full_period(&self) -> bool {
        self.truncation == Truncation::FullPeriod
    }

    /// Lattice `(p a) Z x (q b) Z` with the same truncation style. Radii are
    /// divided by the factors.
    pub fn sublattice(&self, p: i64, q: i64) -> Result<GaborLattice> {
        if p <= 0 || q <= 0 {
            return Err(Error::InvalidLattice(format!("sublattice factors must be positive, got ({p}, {q})")));
        }
        let truncation = match self.truncation {
            Truncation::Radii { k1, k2 } => Truncation::Radii { k1: k1 / p, k2: k2 / q },
            Truncation::FullPeriod => Truncation::FullPeriod,
        };
        build_lattice(self.grid, p as f64 * self.a, q as f64 * self.b, truncation)
    }
}

pub fn build_lattice(grid: TimeGrid, a: f64, b: f64, truncation: Truncation) -> Result<GaborLattice> {
    let n_a = align(&grid, a, "a")?;
    let n_b = align(&grid.dual(), b, "b")?;
    let a = n_a as f64 * grid.step();
    let b = n_b as f64 * grid.dual_step();
    let n = grid.n_samples() as i64;
    let mut points = Vec::new();
    match truncation {
        Truncation::Radii { k1, k2 } => {
            if k1 < 0 || k2 < 0 {
                return Err(Error::InvalidLattice(format!("negative truncation radii ({k1}, {k2})")));
            }
            let h = n / 2;
            for k in -k1..=k1 {
                if (k * n_a).abs() >= h {
                    continue;
                }
                for l in -k2..=k2 {
                    if (l * n_b).abs() < h {
                        points.push((k, l));
                    }
                }
            }
        }
        Truncation::FullPeriod => {
            if n % n_a != 0 || n % n_b != 0 {
                return Err(Error::InvalidLattice(format!(
                    "full-period truncation needs a and b to divide the grid: n = {n}, a/dt = {n_a}, b/df = {n_b}"
                )));
            }
            for k in full_range(n / n_a) {
                for l in full_range(n / n_b) {
                    points.push((k, l));
                }
            }
        }
    }
    Ok(GaborLattice { grid, a, b, n_a, n_b, truncation, points })
}

/// `pi(lambda) g` for lattice entry `idx`.
pub(crate) fn atom_at(g: &Window, lattice: &GaborLattice, roots: &Roots, idx: usize) -> Vec<Complex64> {
    let (kx, kxi) = lattice.steps(idx);
    shift_steps(&g.signal.values, &g.signal.grid, roots, kx, kxi)
}

pub(crate) fn all_atoms(g: &Window, lattice: &GaborLattice) -> Vec<Vec<Complex64>> {
    let roots = Roots::new(lattice.grid.n_samples());
    (0..lattice.len()).into_par_iter().map(|i| atom_at(g, lattice, &roots, i)).collect()
}

fn check_window(g: &Window, lattice: &GaborLattice) -> Result<()> {
    if !g.grid().same_as(&lattice.grid) {
        return Err(Error::GridMismatch("window and lattice live on different grids".into()));
    }
    Ok(())
}

/// Atom `pi(k a, l b) g`.
pub fn gabor_atom(g: &Window, lattice: &GaborLattice, k: i64, l: i64) -> Result<SampledSignal> {
    check_window(g, lattice)?;
    let idx = lattice.index_of(k, l).ok_or(Error::NotInLattice { k, l })?;
    let roots = Roots::new(lattice.grid.n_samples());
    Ok(SampledSignal {
        grid: lattice.grid,
        values: atom_at(g, lattice, &roots, idx),
        domain: SignalDomain::Time,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameBounds {
    pub a_est: f64,
    pub b_est: f64,
    /// Number of time samples the frame operator was restricted to.
    pub support_samples: usize,
    pub warning: Option<String>,
}

impl FrameBounds {
    pub fn ratio(&self) -> f64 {
        self.b_est / self.a_est
    }
}

/// `dt * sum_lambda atom atom^H`, the frame operator as an `n x n` matrix.
pub fn frame_operator(g: &Window, lattice: &GaborLattice) -> Result<DMatrix<Complex64>> {
    check_window(g, lattice)?;
    let n = lattice.grid.n_samples();
    let atoms = all_atoms(g, lattice);
    let a = DMatrix::from_fn(n, atoms.len(), |r, c| atoms[c][r]);
    Ok(a.clone() * a.adjoint() * Complex64::new(lattice.grid.step(), 0.0))
}

/// Extremal eigenvalues of the frame operator.
///
/// Full-period lattices use the whole periodic grid. Radius-truncated
/// lattices restrict the operator to signals supported on
/// `|t| <= k1 * a / 2`, away from the truncation edge.
pub fn frame_bounds(g: &Window, lattice: &GaborLattice) -> Result<FrameBounds> {
    let s = frame_operator(g, lattice)?;
    let grid = lattice.grid;
    let keep: Vec<usize> = match lattice.truncation {
        Truncation::FullPeriod => (0..grid.n_samples()).collect(),
        Truncation::Radii { k1, .. } => {
            let half = k1 as f64 * lattice.a / 2.0;
            (0..grid.n_samples()).filter(|&i| grid.point(i).abs() <= half + 1e-9).collect()
        }
    };
    let sub = s.select_rows(&keep).select_columns(&keep);
    let eig = sub.symmetric_eigenvalues();
    let a_est = eig.iter().cloned().fold(f64::INFINITY, f64::min).max(0.0);
    let b_est = eig.iter().cloned().fold(0.0, f64::max);
    let warning = match g.kind {
        WindowKind::Rectangular { .. } | WindowKind::BoxBasis { .. } => {
            let msg = format!("window '{}' has no decay; bounds depend on the truncation", g.name());
            log::warn!("{msg}");
            Some(msg)
        }
        _ => None,
    };
    Ok(FrameBounds { a_est, b_est, support_samples: keep.len(), warning })
}

/// Channel matrix over a truncated lattice; row `i` and column `j` belong to
/// `lattice.points[i]` and `lattice.points[j]`.
#[derive(Clone, Debug)]
pub struct ChannelMatrix {
    pub lattice: GaborLattice,
    pub entries: DMatrix<Complex64>,
}

impl ChannelMatrix {
    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        self.entries.diagonal().iter().cloned().collect()
    }

    pub fn frobenius(&self) -> f64 {
        self.entries.norm()
    }

    /// `||offdiag(H)||_F`
    pub fn offdiag_frobenius(&self) -> f64 {
        let mut s = 0.0;
        for (j, col) in self.entries.column_iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                if i != j {
                    s += v.norm_sqr();
                }
            }
        }
        s.sqrt()
    }

    pub fn relative_frobenius(&self, reference: &ChannelMatrix) -> f64 {
        (&self.entries - &reference.entries).norm() / reference.entries.norm()
    }
}

fn assemble(lattice: &GaborLattice, atoms: &[Vec<Complex64>], columns: Vec<Vec<Complex64>>) -> Result<ChannelMatrix> {
    let m = atoms.len();
    let dt = lattice.grid.step();
    let cols: Vec<Vec<Complex64>> = columns
        .par_iter()
        .map(|h| atoms.iter().map(|row| inner_weighted(h, row, dt)).collect())
        .collect();
    let entries = DMatrix::from_fn(m, m, |i, j| cols[j][i]);
    if let Some((idx, v)) = entries.iter().enumerate().find(|(_, v)| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::NonFinite {
            value: v.to_string(),
            location: format!("channel matrix entry ({}, {})", idx % m, idx / m),
        });
    }
    Ok(ChannelMatrix { lattice: lattice.clone(), entries })
}

/// `H[i, j] = <sigma^KN pi(mu_j) g, pi(lambda_i) g>`, one operator application
/// per column.
pub fn channel_matrix(op: &KnOperator, g: &Window, lattice: &GaborLattice) -> Result<ChannelMatrix> {
    check_window(g, lattice)?;
    if !op.grid.same_as(&lattice.grid) {
        return Err(Error::GridMismatch("operator and lattice live on different grids".into()));
    }
    let atoms = all_atoms(g, lattice);
    let columns = atoms
        .par_iter()
        .map(|atom| {
            let f = SampledSignal { grid: lattice.grid, values: atom.clone(), domain: SignalDomain::Time };
            apply_spreading(op, &f).map(|h| h.values)
        })
        .collect::<Result<Vec<_>>>()?;
    assemble(lattice, &atoms, columns)
}

/// Gram matrix `<pi(mu) g, pi(lambda) g>`.
pub fn gram_matrix(g: &Window, lattice: &GaborLattice) -> Result<ChannelMatrix> {
    check_window(g, lattice)?;
    let atoms = all_atoms(g, lattice);
    let columns = atoms.clone();
    assemble(lattice, &atoms, columns)
}

/// Diagonal of the channel matrix as samples of `sigma * R(g, g)^*` at the
/// lattice points.
pub fn diag_via_convolution(op: &KnOperator, g: &Window, lattice: &GaborLattice) -> Result<Vec<Complex64>> {
    check_window(g, lattice)?;
    let symbol = op.symbol.as_ref().ok_or(Error::NoSampledSymbol)?;
    let r = star_involution(&rihaczek(&g.signal, &g.signal)?);
    let conv = convolve2d(symbol, &r)?;
    let grid = conv.grid;
    Ok((0..lattice.len())
        .map(|i| {
            let (kx, kxi) = lattice.steps(i);
            conv.at(grid.axis1.wrap(kx), grid.axis2.wrap(kxi))
        })
        .collect())
}

/// Diagonal by direct inner products; works for point-scatterer operators.
pub fn diag_direct(op: &KnOperator, g: &Window, lattice: &GaborLattice) -> Result<Vec<Complex64>> {
    check_window(g, lattice)?;
    let atoms = all_atoms(g, lattice);
    let dt = lattice.grid.step();
    atoms
        .par_iter()
        .map(|atom| {
            let f = SampledSignal { grid: lattice.grid, values: atom.clone(), domain: SignalDomain::Time };
            apply_spreading(op, &f).map(|h| inner_weighted(&h.values, atom, dt))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{BandBox, PlaneGrid};
    use crate::psido::{point_scatterer, synth_bandlimited, Smoothness};
    use crate::tf::gaussian_stft;
    use std::f64::consts::PI;

    fn grid256() -> TimeGrid {
        TimeGrid::new(256, 16.0).unwrap()
    }

    #[test]
    fn lattice_counting_and_alignment() {
        let l = build_lattice(grid256(), 1.0, 1.0, Truncation::Radii { k1: 2, k2: 2 }).unwrap();
        assert_eq!(l.len(), 25);
        assert_eq!(l.ab(), 1.0);
        assert_eq!(l.points[0], (-2, -2));
        assert_eq!(l.points[1], (-2, -1));
        match build_lattice(grid256(), 1.03, 1.0, Truncation::Radii { k1: 2, k2: 2 }) {
            Err(Error::MisalignedLattice { name, nearest, .. }) => {
                assert_eq!(name, "a");
                assert!((nearest - 1.0).abs() < 1e-12);
            }
            other => panic!("expected misalignment, got {other:?}"),
        }
        let wide = build_lattice(grid256(), 4.0, 4.0, Truncation::Radii { k1: 5, k2: 5 }).unwrap();
        // |k a| < 8 keeps k in -1..=1
        assert_eq!(wide.len(), 9);
        let full = build_lattice(grid256(), 2.0, 1.0, Truncation::FullPeriod).unwrap();
        assert_eq!(full.len(), 8 * 16);
        assert_eq!(full.adjoint_params(), (1.0, 0.5));
    }

    #[test]
    fn atoms() {
        let g = Window::gaussian(grid256());
        let l = build_lattice(grid256(), 1.0, 1.0, Truncation::Radii { k1: 2, k2: 2 }).unwrap();
        assert_eq!(gabor_atom(&g, &l, 0, 0).unwrap(), g.signal);
        let atoms = all_atoms(&g, &l);
        for (i, x) in atoms.iter().enumerate() {
            let norm = inner_weighted(x, x, l.grid.step()).re.sqrt();
            assert!((norm - g.signal.norm()).abs() < 1e-12);
            for y in &atoms[i + 1..] {
                assert!(crate::grid::max_abs_diff(x, y) > 0.0);
            }
        }
        assert!(matches!(gabor_atom(&g, &l, 3, 0), Err(Error::NotInLattice { k: 3, l: 0 })));
    }

    #[test]
    fn orthonormal_box_basis_has_unit_bounds() {
        let grid = grid256();
        let g = Window::box_basis(grid, 1.0).unwrap();
        let l = build_lattice(grid, 1.0, 1.0, Truncation::FullPeriod).unwrap();
        let fb = frame_bounds(&g, &l).unwrap();
        assert!((fb.a_est - 1.0).abs() < 1e-6 && (fb.b_est - 1.0).abs() < 1e-6);
        assert!(fb.warning.is_some());
    }

    #[test]
    fn gaussian_frame_bounds() {
        let grid = TimeGrid::new(128, 8.0 * 2f64.sqrt()).unwrap();
        let g = Window::gaussian(grid);
        let s = 0.5f64.sqrt();
        let l = build_lattice(grid, s, s, Truncation::FullPeriod).unwrap();
        let fb = frame_bounds(&g, &l).unwrap();
        assert!(fb.a_est > 0.1 * fb.b_est);
        assert!((fb.a_est - 1.1803).abs() < 1e-3, "{fb:?}");
        assert!((fb.b_est - 1.6693).abs() < 1e-3, "{fb:?}");

        // Gram route: nonzero spectrum of dt * A^H A equals that of the frame operator.
        let gram = gram_matrix(&g, &l).unwrap();
        let mut ev: Vec<f64> = gram.entries.symmetric_eigenvalues().iter().cloned().collect();
        ev.sort_by(|x, y| y.partial_cmp(x).unwrap());
        let top = &ev[..128];
        assert!((top[0] - fb.b_est).abs() < 1e-9);
        assert!((top[127] - fb.a_est).abs() < 1e-9);

        let critical_grid = TimeGrid::new(64, 8.0).unwrap();
        let gc = Window::gaussian(critical_grid);
        let lc = build_lattice(critical_grid, 1.0, 1.0, Truncation::FullPeriod).unwrap();
        let fc = frame_bounds(&gc, &lc).unwrap();
        assert!(fc.a_est < 1e-3 * fc.b_est, "{fc:?}");
    }

    #[test]
    fn identity_and_zero_channel() {
        let grid = grid256();
        let g = Window::gaussian(grid);
        let l = build_lattice(grid, 1.0, 1.0, Truncation::Radii { k1: 2, k2: 2 }).unwrap();
        let h = channel_matrix(&KnOperator::identity(grid), &g, &l).unwrap();
        let gram = gram_matrix(&g, &l).unwrap();
        assert!((&h.entries - &gram.entries).camax() < 1e-8);
        let n2 = g.signal.norm().powi(2);
        assert!(h.diagonal().iter().all(|d| (d - n2).norm() < 1e-8));
        let z = channel_matrix(&KnOperator::zero(grid), &g, &l).unwrap();
        assert_eq!(z.entries.camax(), 0.0);
        let d = diag_via_convolution(&KnOperator::identity(grid), &g, &l).unwrap();
        assert!(d.iter().all(|v| (v - n2).norm() < 1e-8));
        let d0 = diag_via_convolution(&KnOperator::zero(grid), &g, &l).unwrap();
        assert!(d0.iter().all(|v| v.norm() == 0.0));
    }

    /// `<M_eta T_{-u} pi(mu) g, pi(lambda) g>` from STFT covariance and the
    /// Gaussian closed form.
    fn scatterer_entry(lam: (f64, f64), mu: (f64, f64), eta: f64, u: f64) -> Complex64 {
        let x = mu.0 - u;
        let xi = mu.1 + eta;
        Complex64::from_polar(1.0, 2.0 * PI * mu.1 * u)
            * Complex64::from_polar(1.0, -2.0 * PI * (lam.1 - xi) * x)
            * gaussian_stft(lam.0 - x, lam.1 - xi)
    }

    #[test]
    fn point_scatterer_entries_follow_covariance() {
        let grid = grid256();
        let g = Window::gaussian(grid);
        let l = build_lattice(grid, 1.0, 1.0, Truncation::Radii { k1: 3, k2: 3 }).unwrap();
        let (tau, nu) = (3.0 * grid.step(), -5.0 * grid.dual_step());
        let op = point_scatterer(grid, Complex64::new(1.0, 0.0), tau, nu).unwrap();
        let h = channel_matrix(&op, &g, &l).unwrap();
        let mut sup: f64 = 0.0;
        for i in 0..l.len() {
            for j in 0..l.len() {
                let e = scatterer_entry(l.point(i), l.point(j), nu, tau);
                sup = sup.max((h.entries[(i, j)] - e).norm());
            }
        }
        assert!(sup < 1e-8, "sup {sup}");
        let d = diag_direct(&op, &g, &l).unwrap();
        for (i, v) in d.iter().enumerate() {
            assert!((v - h.entries[(i, i)]).norm() < 1e-12);
        }
    }

    #[test]
    fn diagonal_lemma_on_random_operators() {
        let grid = TimeGrid::new(128, 8.0 * 2f64.sqrt()).unwrap();
        let plane = PlaneGrid::symbol_grid(&grid);
        let s = 0.5f64.sqrt();
        let l = build_lattice(grid, s, s, Truncation::Radii { k1: 3, k2: 3 }).unwrap();
        let windows = [Window::gaussian(grid), Window::rectangular(grid, -0.5, 0.5).unwrap()];
        for seed in 0..10 {
            let op = synth_bandlimited(&plane, BandBox::new(0.5, 0.5).unwrap(), seed, Smoothness::White).unwrap();
            for g in &windows {
                let h = channel_matrix(&op, g, &l).unwrap().diagonal();
                let d = diag_via_convolution(&op, g, &l).unwrap();
                let scale = h.iter().map(|v| v.norm()).fold(0.0, f64::max);
                let dev = h.iter().zip(&d).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
                assert!(dev <= 1e-7 * scale, "seed {seed}: {dev} vs {scale}");
            }
        }
    }

    #[test]
    fn exact_operator_has_no_convolution_route() {
        let grid = grid256();
        let g = Window::gaussian(grid);
        let l = build_lattice(grid, 1.0, 1.0, Truncation::Radii { k1: 1, k2: 1 }).unwrap();
        let op = point_scatterer(grid, Complex64::new(1.0, 0.0), 0.0, 0.0).unwrap();
        assert!(matches!(diag_via_convolution(&op, &g, &l), Err(Error::NoSampledSymbol)));
    }
}
