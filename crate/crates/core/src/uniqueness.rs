//! Linear map from band-limited spreading coefficients to channel matrices,
//! and the singular-value certificates built on it.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{all_atoms, build_lattice, frame_bounds, ChannelMatrix, FrameBounds, GaborLattice, Truncation};
use crate::error::{Error, Result};
use crate::grid::{BandBox, PlaneGrid, Roots};
use crate::psido::KnOperator;
use crate::tf::{shift_steps, Window};

/// Largest admissible number of rows (`M^2`) or columns (`P`).
pub const SIZE_LIMIT: usize = 100_000;

/// `A x = vec(H)`, where `x` holds spreading masses `sigma_hat * d_eta * du`
/// at the band points and `vec` stacks columns of `H`.
#[derive(Clone, Debug)]
pub struct SymbolToMatrixMap {
    /// Spreading-grid offsets `(eta steps, u steps)` of the free coefficients.
    pub basis: Vec<(i64, i64)>,
    pub band_box: BandBox,
    pub lattice: GaborLattice,
    pub window: Window,
    pub matrix_a: DMatrix<Complex64>,
    /// Rows of `matrix_a` that hold off-diagonal entries of `H`.
    pub offdiag_rows: Vec<usize>,
}

impl SymbolToMatrixMap {
    pub fn basis_point(&self, j: usize) -> (f64, f64) {
        let (k1, k2) = self.basis[j];
        let g = self.lattice.grid;
        (k1 as f64 * g.dual_step(), k2 as f64 * g.step())
    }

    /// Spreading masses of an operator at the basis points.
    pub fn coefficients(&self, op: &KnOperator) -> Result<Vec<Complex64>> {
        let op = op.to_sampled()?;
        let s = op.spreading.as_ref().expect("sampled");
        let w = s.grid.cell_area();
        Ok(self
            .basis
            .iter()
            .map(|&(k1, k2)| s.at(s.grid.axis1.wrap(k1), s.grid.axis2.wrap(k2)) * w)
            .collect())
    }

    /// Operator whose spreading masses are `x` at the basis points.
    pub fn operator(&self, x: &[Complex64]) -> Result<KnOperator> {
        let plane = PlaneGrid::spreading_grid(&self.lattice.grid);
        let mut s = crate::grid::SampledSymbol::zeros(plane, crate::grid::SymbolDomain::Spreading);
        let w = plane.cell_area();
        for (&(k1, k2), v) in self.basis.iter().zip(x) {
            s.values[plane.index(plane.axis1.wrap(k1), plane.axis2.wrap(k2))] = v / w;
        }
        KnOperator::from_spreading(s, Some(self.band_box))
    }

    pub fn apply(&self, x: &[Complex64]) -> DVector<Complex64> {
        &self.matrix_a * DVector::from_column_slice(x)
    }

    pub fn offdiag_matrix(&self) -> DMatrix<Complex64> {
        self.matrix_a.select_rows(&self.offdiag_rows)
    }

    /// Reshapes `vec(H)` into a channel matrix.
    pub fn unvec(&self, v: &DVector<Complex64>) -> ChannelMatrix {
        let m = self.lattice.len();
        ChannelMatrix {
            lattice: self.lattice.clone(),
            entries: DMatrix::from_column_slice(m, m, v.as_slice()),
        }
    }
}

/// Columns are the channel matrices of the unit-mass shifts `M_eta T_{-u}` at
/// every spreading-grid point of `band_box`, `eta` outer.
pub fn assemble_map(window: &Window, lattice: &GaborLattice, band_box: BandBox) -> Result<SymbolToMatrixMap> {
    if !window.grid().same_as(&lattice.grid) {
        return Err(Error::GridMismatch("window and lattice live on different grids".into()));
    }
    let grid = lattice.grid;
    let plane = PlaneGrid::spreading_grid(&grid);
    let (i1s, i2s) = band_box.axis_indices(&plane);
    let basis: Vec<(i64, i64)> = i1s
        .iter()
        .flat_map(|&i1| i2s.iter().map(move |&i2| (plane.axis1.offset(i1), plane.axis2.offset(i2))))
        .collect();
    let m = lattice.len();
    let rows = m * m;
    if basis.len() > SIZE_LIMIT || rows > SIZE_LIMIT {
        return Err(Error::SizeGuard(format!(
            "map would be {rows} x {} (limit {SIZE_LIMIT} per side)",
            basis.len()
        )));
    }
    let n = grid.n_samples();
    let atoms = all_atoms(window, lattice);
    let atom_matrix = DMatrix::from_fn(n, m, |r, c| atoms[c][r]);
    let analysis = atom_matrix.adjoint() * Complex64::new(grid.step(), 0.0);
    let roots = Roots::new(n);
    let columns: Vec<DMatrix<Complex64>> = basis
        .par_iter()
        .map(|&(k_eta, k_u)| {
            let mut shifted = DMatrix::zeros(n, m);
            for (c, atom) in atoms.iter().enumerate() {
                let s = shift_steps(atom, &grid, &roots, -k_u, k_eta);
                shifted.column_mut(c).copy_from_slice(&s);
            }
            &analysis * shifted
        })
        .collect();
    let mut matrix_a = DMatrix::zeros(rows, basis.len());
    for (j, h) in columns.iter().enumerate() {
        matrix_a.column_mut(j).copy_from_slice(h.as_slice());
    }
    let offdiag_rows = (0..rows).filter(|r| r % m != r / m).collect();
    Ok(SymbolToMatrixMap {
        basis,
        band_box,
        lattice: lattice.clone(),
        window: window.clone(),
        matrix_a,
        offdiag_rows,
    })
}

/// `(sigma_min, sigma_max)` of a matrix; `sigma_min` is the smallest of the
/// `min(rows, cols)` singular values.
pub fn singular_extremes(m: &DMatrix<Complex64>) -> (f64, f64) {
    if m.nrows() == 0 || m.ncols() == 0 {
        return (0.0, 0.0);
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    (min, max)
}

pub fn full_injectivity_svd(map: &SymbolToMatrixMap) -> (f64, f64) {
    singular_extremes(&map.matrix_a)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Obstruction {
    pub sigma_min_offdiag: f64,
    pub sigma_max: f64,
    pub ab: f64,
    pub frame: FrameBounds,
    /// Right singular vector for `sigma_min_offdiag`, as spreading masses.
    pub witness: Vec<Complex64>,
}

/// Smallest singular value of the off-diagonal rows.
///
/// The frame hypothesis is checked first with [`frame_bounds`] on one full
/// lattice period when the grid allows it, otherwise on the map's own
/// truncation; the map is refused when `A_est <= min_frame_ratio * B_est`.
pub fn diagonal_obstruction_svd(map: &SymbolToMatrixMap, min_frame_ratio: f64) -> Result<Obstruction> {
    let l = &map.lattice;
    let frame_lattice = build_lattice(l.grid, l.a, l.b, Truncation::FullPeriod).unwrap_or_else(|_| l.clone());
    let frame = frame_bounds(&map.window, &frame_lattice)?;
    if !(frame.a_est > min_frame_ratio * frame.b_est) {
        return Err(Error::FrameConditionUnmet { a_est: frame.a_est, b_est: frame.b_est });
    }
    if l.ab() >= 1.0 {
        log::warn!("ab = {} >= 1: the obstruction is not expected to hold", l.ab());
    }
    let off = map.offdiag_matrix();
    let svd = off.clone().svd(false, true);
    let sv = &svd.singular_values;
    let (jmin, &sigma_min_offdiag) = sv
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).expect("finite singular values"))
        .expect("nonempty map");
    let v_t = svd.v_t.expect("requested");
    let witness = v_t.row(jmin).iter().map(|v| v.conj()).collect();
    let (_, sigma_max) = full_injectivity_svd(map);
    Ok(Obstruction { sigma_min_offdiag, sigma_max, ab: l.ab(), frame, witness })
}

/// Least-squares spreading masses from a channel matrix.
pub fn invert(map: &SymbolToMatrixMap, h: &ChannelMatrix) -> Result<Vec<Complex64>> {
    let m = map.lattice.len();
    if h.size() != m {
        return Err(Error::InvalidLattice(format!("channel matrix is {} x {}, map expects {m}", h.size(), h.size())));
    }
    let b = DVector::from_column_slice(h.entries.as_slice());
    let svd = map.matrix_a.clone().svd(true, true);
    let (smin, smax) = singular_extremes(&map.matrix_a);
    if smin <= 1e-14 * smax {
        return Err(Error::Singular { condition: smax / smin });
    }
    let x = svd
        .solve(&b, 1e-14 * smax)
        .map_err(|_| Error::Singular { condition: smax / smin })?;
    Ok(x.iter().cloned().collect())
}

/// JSON-facing summary of a uniqueness experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub window: String,
    pub a: f64,
    pub b: f64,
    pub ab: f64,
    pub band_box: BandBox,
    pub truncation: Truncation,
    pub n_samples: usize,
    pub period: f64,
    pub columns: usize,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub sigma_min_offdiag: Option<f64>,
    pub a_est: Option<f64>,
    pub b_est: Option<f64>,
    pub inversion_relative_error: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{channel_matrix, gram_matrix};
    use crate::grid::TimeGrid;
    use crate::psido::{synth_bandlimited, Smoothness};
    use crate::reconstruction::{gaussian_g, q_eps};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn reference() -> (Window, GaborLattice, BandBox) {
        let grid = TimeGrid::new(64, 8.0).unwrap();
        let lattice = build_lattice(grid, 1.0, 1.0, Truncation::Radii { k1: 3, k2: 3 }).unwrap();
        let band = q_eps(&lattice, 2.0).unwrap();
        (Window::gaussian(grid), lattice, band)
    }

    #[test]
    fn origin_column_is_the_gram_matrix() {
        let (g, l, _) = reference();
        let map = assemble_map(&g, &l, BandBox::new(0.0, 0.0).unwrap()).unwrap();
        assert_eq!(map.basis, vec![(0, 0)]);
        let gram = gram_matrix(&g, &l).unwrap();
        let col = map.unvec(&map.matrix_a.column(0).into_owned());
        assert!((&col.entries - &gram.entries).camax() < 1e-12);
    }

    #[test]
    fn columns_match_channel_matrices_and_closed_form() {
        let (g, l, band) = reference();
        let map = assemble_map(&g, &l, band).unwrap();
        assert_eq!(map.basis.len(), 25);
        for j in [0, 7, 12, 24] {
            let mut x = vec![Complex64::new(0.0, 0.0); map.basis.len()];
            x[j] = Complex64::new(1.0, 0.0);
            let op = map.operator(&x).unwrap();
            let h = channel_matrix(&op, &g, &l).unwrap();
            let col = map.unvec(&map.matrix_a.column(j).into_owned());
            assert!((&col.entries - &h.entries).camax() < 1e-9);
            // <sigma_hat, M_mu T_lambda G> pattern on the diagonal.
            let (eta, u) = map.basis_point(j);
            for i in 0..l.len() {
                let (x1, x2) = l.point(i);
                let expected = Complex64::from_polar(1.0, 2.0 * PI * (x1 * eta + x2 * u)) * gaussian_g(eta, u).conj();
                assert!((col.entries[(i, i)] - expected).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn map_is_linear() {
        let (g, l, band) = reference();
        let map = assemble_map(&g, &l, band).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut draw = || -> Vec<Complex64> {
            (0..map.basis.len()).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
        };
        let (x1, x2) = (draw(), draw());
        let (al, be) = (Complex64::new(0.2, 1.0), Complex64::new(-0.7, 0.1));
        let mix: Vec<Complex64> = x1.iter().zip(&x2).map(|(a, b)| al * a + be * b).collect();
        let lhs = map.apply(&mix);
        let rhs = map.apply(&x1) * al + map.apply(&x2) * be;
        assert!((lhs - rhs).camax() < 1e-10);
    }

    #[test]
    fn injectivity_certificate() {
        let (g, l, band) = reference();
        let map = assemble_map(&g, &l, band).unwrap();
        let (smin, smax) = full_injectivity_svd(&map);
        assert!(smin > 1e-6 * smax);
        // Fewer columns never lower sigma_min.
        let sub = map.matrix_a.columns(0, 10).into_owned();
        assert!(singular_extremes(&sub).0 >= smin * (1.0 - 1e-12));
        // A repeated column is detected.
        let mut dup = map.matrix_a.clone().insert_column(map.basis.len(), Complex64::new(0.0, 0.0));
        let c0 = dup.column(0).into_owned();
        dup.column_mut(map.basis.len()).copy_from(&c0);
        assert!(singular_extremes(&dup).0 < 1e-12);
    }

    #[test]
    fn least_squares_recovers_the_spreading_function() {
        let (g, l, band) = reference();
        let map = assemble_map(&g, &l, band).unwrap();
        let op = synth_bandlimited(&PlaneGrid::symbol_grid(&l.grid), band, 21, Smoothness::White).unwrap();
        let truth = map.coefficients(&op).unwrap();
        let h = channel_matrix(&op, &g, &l).unwrap();
        let x = invert(&map, &h).unwrap();
        assert!(crate::grid::relative_l2(&x, &truth) < 1e-6);
    }

    #[test]
    fn gaussian_transform_never_vanishes() {
        let grid = TimeGrid::new(64, 8.0).unwrap();
        let plane = PlaneGrid::spreading_grid(&grid);
        let mut min = f64::INFINITY;
        for i1 in 0..64 {
            for i2 in 0..64 {
                let (eta, u) = plane.point(i1, i2);
                let v = gaussian_g(eta, u).norm();
                let envelope = (-0.5 * PI * (eta * eta + u * u)).exp() / 2f64.sqrt();
                assert!((v - envelope).abs() < 1e-8);
                min = min.min(v);
            }
        }
        assert!(min > 0.0);
    }

    fn redundant() -> (Window, GaborLattice, BandBox) {
        let grid = TimeGrid::new(128, 8.0 * 2f64.sqrt()).unwrap();
        let s = 0.5f64.sqrt();
        let lattice = build_lattice(grid, s, s, Truncation::Radii { k1: 3, k2: 3 }).unwrap();
        let band = q_eps(&lattice, 5.0).unwrap();
        (Window::gaussian(grid), lattice, band)
    }

    #[test]
    fn obstruction_at_half_density() {
        let (g, l, band) = redundant();
        let map = assemble_map(&g, &l, band).unwrap();
        assert_eq!(map.basis.len(), 49);
        let ob = diagonal_obstruction_svd(&map, 0.1).unwrap();
        assert!(ob.sigma_min_offdiag > 1e-8 * ob.sigma_max, "{}", ob.sigma_min_offdiag);

        // Certificate is consistent with direct assembly.
        for seed in 0..10 {
            let op = synth_bandlimited(&PlaneGrid::symbol_grid(&l.grid), band, seed, Smoothness::White).unwrap();
            let x = map.coefficients(&op).unwrap();
            let xn = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            let off = channel_matrix(&op, &g, &l).unwrap().offdiag_frobenius();
            assert!(off >= 0.95 * ob.sigma_min_offdiag * xn);
        }
        // Dropping every off-diagonal row leaves nothing to certify with.
        assert_eq!(singular_extremes(&map.matrix_a.select_rows(&[])).1, 0.0);
    }

    #[test]
    fn orthonormal_basis_admits_diagonal_channels() {
        let grid = TimeGrid::new(64, 8.0).unwrap();
        let g = Window::box_basis(grid, 1.0).unwrap();
        let l = build_lattice(grid, 1.0, 1.0, Truncation::Radii { k1: 3, k2: 3 }).unwrap();
        let band = q_eps(&l, 2.0).unwrap();
        let map = assemble_map(&g, &l, band).unwrap();
        let ob = diagonal_obstruction_svd(&map, 0.1).unwrap();
        assert!(ob.sigma_min_offdiag < 1e-12);
        let origin = map.basis.iter().position(|&p| p == (0, 0)).unwrap();
        assert!((ob.witness[origin].norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn critical_gaussian_frame_is_refused() {
        let (g, l, band) = reference();
        let map = assemble_map(&g, &l, band).unwrap();
        assert!(matches!(diagonal_obstruction_svd(&map, 0.1), Err(Error::FrameConditionUnmet { .. })));
    }
}
