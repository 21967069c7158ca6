//! Pulse-shaped multicarrier link over a Kohn-Nirenberg channel: modulation,
//! pilot-based diagonal estimation, symbol reconstruction and equalization.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::channel::{all_atoms, channel_matrix, ChannelMatrix, GaborLattice};
use crate::config::{EqualizerMode, PilotMode, ScenarioConfig};
use crate::error::{Error, Result, StageExt};
use crate::grid::{inner_weighted, relative_l2, BandBox, PlaneGrid, SampledSignal, SampledSymbol, SignalDomain};
use crate::psido::{apply_spreading, KnOperator};
use crate::reconstruction::{
    build_bump, build_kernel, calibrate, q_box, q_eps, rec_spreading, reconstruct_frequency, reconstruct_time,
};
use crate::tf::{stft, Window};

const ALPHABET_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alphabet {
    /// `(+-1 +- i) / sqrt 2`
    Qpsk,
    Unconstrained,
}

impl Alphabet {
    pub fn contains(&self, v: Complex64) -> bool {
        match self {
            Alphabet::Qpsk => (v - slice_qpsk(v)).norm() <= ALPHABET_TOL,
            Alphabet::Unconstrained => v.re.is_finite() && v.im.is_finite(),
        }
    }
}

/// Nearest QPSK point.
pub fn slice_qpsk(v: Complex64) -> Complex64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Complex64::new(if v.re >= 0.0 { s } else { -s }, if v.im >= 0.0 { s } else { -s })
}

pub fn random_qpsk<R: Rng>(rng: &mut R) -> Complex64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Complex64::new(if rng.random::<bool>() { s } else { -s }, if rng.random::<bool>() { s } else { -s })
}

/// Pilots on `(k, l) = offset + (spacing) Z^2`; data is zeroed within `guard`
/// lattice indices of a pilot.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PilotLayout {
    pub spacing: (i64, i64),
    pub offset: (i64, i64),
    pub guard: (i64, i64),
    pub value: Complex64,
}

impl PilotLayout {
    pub fn pilot_mask(&self, lattice: &GaborLattice) -> Vec<bool> {
        let (p, q) = self.spacing;
        lattice
            .points
            .iter()
            .map(|&(k, l)| (k - self.offset.0).rem_euclid(p) == 0 && (l - self.offset.1).rem_euclid(q) == 0)
            .collect()
    }

    /// Positions that carry a pilot or sit in a pilot's guard region.
    pub fn reserved_mask(&self, lattice: &GaborLattice) -> Vec<bool> {
        let pilots: Vec<(i64, i64)> = lattice
            .points
            .iter()
            .zip(self.pilot_mask(lattice))
            .filter(|(_, p)| *p)
            .map(|(&pt, _)| pt)
            .collect();
        lattice
            .points
            .iter()
            .map(|&(k, l)| {
                pilots.iter().any(|&(pk, pl)| {
                    let (dk, dl) = index_distance(lattice, k - pk, l - pl);
                    dk <= self.guard.0 && dl <= self.guard.1
                })
            })
            .collect()
    }
}

/// Index distance, periodic on full-period lattices.
fn index_distance(lattice: &GaborLattice, dk: i64, dl: i64) -> (i64, i64) {
    match lattice.period_counts() {
        Some((mk, ml)) => {
            let wrap = |d: i64, m: i64| {
                let r = d.rem_euclid(m);
                r.min(m - r)
            };
            (wrap(dk, mk), wrap(dl, ml))
        }
        None => (dk.abs(), dl.abs()),
    }
}

#[derive(Clone, Debug)]
pub struct TransmitFrame {
    pub coefficients: Vec<Complex64>,
    pub pilot_mask: Vec<bool>,
    /// Non-pilot positions that carry a nonzero symbol.
    pub data_mask: Vec<bool>,
    pub signal: SampledSignal,
}

/// `f = sum_lambda c_lambda pi(lambda) g`.
///
/// Pilot positions must hold unit-modulus values; the others must be zero or
/// belong to `alphabet`.
pub fn modulate(
    coefficients: &[Complex64],
    pilot_mask: &[bool],
    alphabet: Alphabet,
    g: &Window,
    lattice: &GaborLattice,
) -> Result<TransmitFrame> {
    let m = lattice.len();
    if coefficients.len() != m || pilot_mask.len() != m {
        return Err(Error::InvalidLattice(format!(
            "{} coefficients and {} mask entries for a lattice of {m} points",
            coefficients.len(),
            pilot_mask.len()
        )));
    }
    if !g.grid().same_as(&lattice.grid) {
        return Err(Error::GridMismatch("window and lattice live on different grids".into()));
    }
    for (i, (&c, &pilot)) in coefficients.iter().zip(pilot_mask).enumerate() {
        if pilot {
            if c.norm() == 0.0 {
                return Err(Error::ZeroPilot(i));
            }
            if (c.norm() - 1.0).abs() > ALPHABET_TOL {
                return Err(Error::AlphabetViolation { index: i, value: format!("{c} (pilot, |c| != 1)") });
            }
        } else if c.norm() != 0.0 && !alphabet.contains(c) {
            return Err(Error::AlphabetViolation { index: i, value: c.to_string() });
        }
    }
    let atoms = all_atoms(g, lattice);
    let mut values = vec![Complex64::new(0.0, 0.0); lattice.grid.n_samples()];
    for (c, atom) in coefficients.iter().zip(&atoms) {
        if c.norm() != 0.0 {
            for (v, a) in values.iter_mut().zip(atom) {
                *v += c * a;
            }
        }
    }
    let data_mask = coefficients.iter().zip(pilot_mask).map(|(c, &p)| !p && c.norm() != 0.0).collect();
    Ok(TransmitFrame {
        coefficients: coefficients.to_vec(),
        pilot_mask: pilot_mask.to_vec(),
        data_mask,
        signal: SampledSignal { grid: lattice.grid, values, domain: SignalDomain::Time },
    })
}

/// Frame with pilots from `layout`, zeros in the guard regions and random
/// QPSK symbols elsewhere.
pub fn pilot_frame<R: Rng>(layout: &PilotLayout, g: &Window, lattice: &GaborLattice, rng: &mut R) -> Result<TransmitFrame> {
    let pilots = layout.pilot_mask(lattice);
    let reserved = layout.reserved_mask(lattice);
    let c: Vec<Complex64> = pilots
        .iter()
        .zip(&reserved)
        .map(|(&p, &r)| if p { layout.value } else if r { Complex64::new(0.0, 0.0) } else { random_qpsk(rng) })
        .collect();
    modulate(&c, &pilots, Alphabet::Qpsk, g, lattice)
}

/// Frame of random QPSK symbols on every lattice point.
pub fn data_frame<R: Rng>(g: &Window, lattice: &GaborLattice, rng: &mut R) -> Result<TransmitFrame> {
    let c: Vec<Complex64> = (0..lattice.len()).map(|_| random_qpsk(rng)).collect();
    modulate(&c, &vec![false; lattice.len()], Alphabet::Qpsk, g, lattice)
}

#[derive(Clone, Debug)]
pub struct Transmission {
    pub received: SampledSignal,
    pub signal_power: f64,
    pub noise_power: f64,
}

/// `sigma^KN f` plus complex white noise at `snr_db` relative to the mean
/// power of the noiseless output. `None` is noiseless.
pub fn transmit<R: Rng>(op: &KnOperator, f: &SampledSignal, snr_db: Option<f64>, rng: &mut R) -> Result<Transmission> {
    let mut out = apply_spreading(op, f)?;
    let n = out.values.len() as f64;
    let signal_power = out.values.iter().map(|v| v.norm_sqr()).sum::<f64>() / n;
    let mut noise_power = 0.0;
    if let Some(snr) = snr_db {
        let var = signal_power * 10f64.powf(-snr / 10.0);
        let sd = (var / 2.0).sqrt();
        for v in out.values.iter_mut() {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            let e = Complex64::new(re, im) * sd;
            noise_power += e.norm_sqr();
            *v += e;
        }
        noise_power /= n;
    }
    Ok(Transmission { received: out, signal_power, noise_power })
}

/// `y_lambda = <f, pi(lambda) g>`
pub fn demodulate(received: &SampledSignal, g: &Window, lattice: &GaborLattice) -> Result<Vec<Complex64>> {
    if received.domain != SignalDomain::Time {
        return Err(Error::DomainMismatch { expected: "time", found: received.domain.name() });
    }
    if !received.grid.same_as(&lattice.grid) || !g.grid().same_as(&lattice.grid) {
        return Err(Error::GridMismatch("signal, window and lattice must share one grid".into()));
    }
    let dt = lattice.grid.step();
    Ok(all_atoms(g, lattice).iter().map(|a| inner_weighted(&received.values, a, dt)).collect())
}

/// `||sigma_hat||_L1`, counting exact shifts by their amplitudes.
pub fn spreading_l1(op: &KnOperator) -> f64 {
    let exact: f64 = op.exact_shifts.iter().map(|s| s.amplitude.norm()).sum();
    let sampled = op
        .spreading
        .as_ref()
        .map(|s| s.values.iter().map(|v| v.norm()).sum::<f64>() * s.grid.cell_area())
        .unwrap_or(0.0);
    exact + sampled
}

/// Smallest box holding the operator's spreading support.
pub fn spreading_extent(op: &KnOperator) -> BandBox {
    let mut b = op.band_box.unwrap_or(BandBox { half1: 0.0, half2: 0.0 });
    for s in &op.exact_shifts {
        b.half1 = b.half1.max(s.eta.abs());
        b.half2 = b.half2.max(s.u.abs());
    }
    b
}

/// Bound on off-diagonal channel entries:
/// `|H[lambda, mu]| <= gain * max_{(eta, u) in band} |V_g g(lambda - mu + (u, -eta))|`.
#[derive(Clone, Debug)]
pub struct LeakageModel {
    vgg: SampledSymbol,
    band: BandBox,
    pub gain: f64,
    cache: HashMap<(i64, i64), f64>,
}

impl LeakageModel {
    pub fn new(g: &Window, band: BandBox, gain: f64) -> Result<Self> {
        let vgg = stft(&g.signal, g)?;
        Ok(Self { vgg, band, gain, cache: HashMap::new() })
    }

    /// Envelope for a lattice offset given in grid steps `(time, frequency)`.
    pub fn envelope(&mut self, kx: i64, kxi: i64) -> f64 {
        if let Some(&w) = self.cache.get(&(kx, kxi)) {
            return w;
        }
        let plane = self.vgg.grid;
        let spreading = PlaneGrid::spreading_grid(&plane.axis1);
        let (i_eta, i_u) = self.band.axis_indices(&spreading);
        let mut w = 0.0f64;
        for &ie in &i_eta {
            let ke = spreading.axis1.offset(ie);
            for &iu in &i_u {
                let ku = spreading.axis2.offset(iu);
                let v = self.vgg.at(plane.axis1.wrap(kx + ku), plane.axis2.wrap(kxi - ke));
                w = w.max(v.norm());
            }
        }
        self.cache.insert((kx, kxi), w);
        w
    }
}

#[derive(Clone, Debug)]
pub struct PilotEstimate {
    /// Lattice indices of the pilots.
    pub positions: Vec<usize>,
    /// `y / c` at the pilots.
    pub values: Vec<Complex64>,
    /// Triangle-inequality bound on the interference at each pilot.
    pub leakage_bound: Vec<f64>,
    /// Root-sum-square of the same terms: the typical size for random data.
    pub leakage_rms: Vec<f64>,
}

/// Diagonal estimates `y_lambda / c_lambda` at the pilots of `frame`.
pub fn estimate_diagonal_from_pilots(y: &[Complex64], frame: &TransmitFrame, lattice: &GaborLattice, leakage: &mut LeakageModel) -> Result<PilotEstimate> {
    if y.len() != lattice.len() || frame.coefficients.len() != lattice.len() {
        return Err(Error::InvalidLattice("observation and frame sizes differ from the lattice".into()));
    }
    let (na, nb) = (lattice.n_a, lattice.n_b);
    let active: Vec<usize> = (0..lattice.len()).filter(|&j| frame.coefficients[j].norm() != 0.0).collect();
    let mut est = PilotEstimate { positions: Vec::new(), values: Vec::new(), leakage_bound: Vec::new(), leakage_rms: Vec::new() };
    for i in (0..lattice.len()).filter(|&i| frame.pilot_mask[i]) {
        let c = frame.coefficients[i];
        if c.norm() == 0.0 {
            return Err(Error::ZeroPilot(i));
        }
        let (k, l) = lattice.points[i];
        let (mut sum, mut sq) = (0.0, 0.0);
        for &j in active.iter().filter(|&&j| j != i) {
            let (kj, lj) = lattice.points[j];
            let w = leakage.envelope((k - kj) * na, (l - lj) * nb) * frame.coefficients[j].norm();
            sum += w;
            sq += w * w;
        }
        est.positions.push(i);
        est.values.push(y[i] / c);
        est.leakage_bound.push(leakage.gain * sum / c.norm());
        est.leakage_rms.push(leakage.gain * sq.sqrt() / c.norm());
    }
    Ok(est)
}

/// Linear solver for `y = H c`, factored once.
#[derive(Clone, Debug)]
pub struct Equalizer {
    mode: EqualizerMode,
    u_adj: DMatrix<Complex64>,
    v: DMatrix<Complex64>,
    filter: Vec<f64>,
    diag: Vec<Complex64>,
    pub condition_number: f64,
}

#[derive(Clone, Debug)]
pub struct Equalized {
    pub decisions: Vec<Complex64>,
    pub raw: Vec<Complex64>,
}

impl Equalizer {
    /// `tikhonov` is relative to the spectral norm of `H`; systems whose
    /// condition number reaches `1 / tikhonov` are refused.
    pub fn new(h: &ChannelMatrix, mode: EqualizerMode, tikhonov: f64) -> Result<Self> {
        let diag = h.diagonal();
        match mode {
            EqualizerMode::DiagonalOnly => {
                let max = diag.iter().map(|v| v.norm()).fold(0.0, f64::max);
                let min = diag.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
                let condition_number = max / min;
                if !(min > tikhonov * max) {
                    return Err(Error::Singular { condition: condition_number });
                }
                Ok(Self { mode, u_adj: DMatrix::zeros(0, 0), v: DMatrix::zeros(0, 0), filter: Vec::new(), diag, condition_number })
            }
            EqualizerMode::FullSolve => {
                let svd = h.entries.clone().svd(true, true);
                let s = &svd.singular_values;
                let smax = s.iter().cloned().fold(0.0, f64::max);
                let smin = s.iter().cloned().fold(f64::INFINITY, f64::min);
                let condition_number = smax / smin;
                if !(smin > tikhonov * smax) {
                    return Err(Error::Singular { condition: condition_number });
                }
                let tau2 = (tikhonov * smax).powi(2);
                let filter = s.iter().map(|&x| x / (x * x + tau2)).collect();
                Ok(Self {
                    mode,
                    u_adj: svd.u.expect("requested").adjoint(),
                    v: svd.v_t.expect("requested").adjoint(),
                    filter,
                    diag,
                    condition_number,
                })
            }
        }
    }

    pub fn solve(&self, y: &[Complex64]) -> Equalized {
        let raw: Vec<Complex64> = match self.mode {
            EqualizerMode::DiagonalOnly => y.iter().zip(&self.diag).map(|(a, d)| a / d).collect(),
            EqualizerMode::FullSolve => {
                let mut t = &self.u_adj * DVector::from_column_slice(y);
                for (v, f) in t.iter_mut().zip(&self.filter) {
                    *v *= *f;
                }
                (&self.v * t).iter().cloned().collect()
            }
        };
        Equalized { decisions: raw.iter().map(|&v| slice_qpsk(v)).collect(), raw }
    }
}

pub fn equalize(h: &ChannelMatrix, y: &[Complex64], mode: EqualizerMode, tikhonov: f64) -> Result<Equalized> {
    Ok(Equalizer::new(h, mode, tikhonov)?.solve(y))
}

/// Scalar results of a pipeline run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReceiveSummary {
    pub a: f64,
    pub b: f64,
    pub lattice_points: usize,
    pub pilot_mode: PilotMode,
    pub equalizer: EqualizerMode,
    pub training_frames: usize,
    pub data_frames: usize,
    pub data_symbols: usize,
    pub symbol_errors: usize,
    pub ser: f64,
    pub evm: f64,
    pub evm_db: f64,
    pub condition_number: f64,
    pub snr_db: Option<f64>,
    pub measured_snr_db: Option<f64>,
    pub calibration_constant: [f64; 2],
    pub min_abs_g: f64,
    pub diag_relative_error: f64,
    pub pilot_error_max: f64,
    /// Uses the true `||sigma_hat||_L1` as the channel-class gain.
    pub leakage_bound_max: f64,
    pub leakage_rms_max: f64,
    pub h_est_relative_error: f64,
    pub time_route_difference: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct ReceiveReport {
    pub summary: ReceiveSummary,
    pub operator: KnOperator,
    pub h_true: ChannelMatrix,
    pub h_est: ChannelMatrix,
    /// Lattice the symbol was reconstructed from: the full lattice for dense
    /// pilots, the pilot sublattice otherwise.
    pub rec_lattice: GaborLattice,
    /// Pilot-derived diagonal on `rec_lattice`.
    pub diag_est: Vec<Complex64>,
    pub symbol_rec: SampledSymbol,
    /// Observation and raw estimates of the last data frame.
    pub y: Vec<Complex64>,
    pub c_est: Vec<Complex64>,
    pub c_sent: Vec<Complex64>,
}

/// Training, reconstruction and data transmission for one scenario.
pub fn run_pipeline(cfg: &ScenarioConfig) -> Result<ReceiveReport> {
    let grid = cfg.grid.build().stage("setup")?;
    let g = cfg.window.build(grid).stage("setup")?;
    let lattice = cfg.lattice.build(grid).stage("setup")?;
    let op = cfg.channel.build(&lattice, cfg.seed).stage("channel")?;
    let h_true = channel_matrix(&op, &g, &lattice).stage("channel-matrix")?;

    let mut data_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    data_rng.set_stream(1);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    noise_rng.set_stream(2);

    let ps = &cfg.pilots;
    let (p, q) = (ps.spacing[0], ps.spacing[1]);
    let value = Complex64::new(ps.value[0], ps.value[1]);
    let offsets: Vec<(i64, i64)> = match ps.mode {
        PilotMode::Dense => (0..p).flat_map(|o1| (0..q).map(move |o2| (o1, o2))).collect(),
        PilotMode::Sublattice => vec![(0, 0)],
    };
    let rec_lattice = match ps.mode {
        PilotMode::Dense => lattice.clone(),
        PilotMode::Sublattice => lattice.sublattice(p, q).stage("setup")?,
    };
    let mut leakage = LeakageModel::new(&g, spreading_extent(&op), spreading_l1(&op)).stage("setup")?;

    let mut diag = vec![None; lattice.len()];
    let (mut bound_max, mut rms_max, mut pilot_err) = (0.0f64, 0.0f64, 0.0f64);
    let (mut p_sig, mut p_noise) = (0.0, 0.0);
    for &offset in &offsets {
        let layout = PilotLayout { spacing: (p, q), offset, guard: (ps.guard[0], ps.guard[1]), value };
        let frame = pilot_frame(&layout, &g, &lattice, &mut data_rng).stage("modulate")?;
        let tx = transmit(&op, &frame.signal, cfg.noise.snr_db, &mut noise_rng).stage("transmit")?;
        p_sig += tx.signal_power;
        p_noise += tx.noise_power;
        let y = demodulate(&tx.received, &g, &lattice).stage("demodulate")?;
        let est = estimate_diagonal_from_pilots(&y, &frame, &lattice, &mut leakage).stage("pilot-estimate")?;
        for (j, &i) in est.positions.iter().enumerate() {
            diag[i] = Some(est.values[j]);
            bound_max = bound_max.max(est.leakage_bound[j]);
            rms_max = rms_max.max(est.leakage_rms[j]);
            pilot_err = pilot_err.max((est.values[j] - h_true.entries[(i, i)]).norm());
        }
    }

    // Reconstruction-lattice point (k, l) is lattice point (s1 k, s2 l).
    let (s1, s2) = if ps.mode == PilotMode::Dense { (1, 1) } else { (p, q) };
    let parent: Vec<usize> = rec_lattice
        .points
        .iter()
        .map(|&(k, l)| lattice.index_of(s1 * k, s2 * l).ok_or(Error::NotInLattice { k: s1 * k, l: s2 * l }))
        .collect::<Result<_>>()
        .stage("pilot-estimate")?;
    let rec_diag: Vec<Complex64> = parent
        .iter()
        .map(|&i| diag[i].ok_or_else(|| Error::Config(format!("lattice point {i} never carried a pilot"))))
        .collect::<Result<_>>()
        .stage("pilot-estimate")?;
    let true_diag: Vec<Complex64> = parent.iter().map(|&i| h_true.entries[(i, i)]).collect();

    let rs = &cfg.reconstruction;
    let q_rec = q_box(&rec_lattice);
    let inner = q_eps(&rec_lattice, rs.eps_steps).stage("reconstruct")?;
    let bump = build_bump(grid, inner, q_rec, rs.profile).stage("reconstruct")?;
    let kernel = build_kernel(&g, &rec_lattice, bump, rs.nonvanish_tol).stage("reconstruct")?;
    let kernel = calibrate(kernel, &rec_lattice, &g, rs.calibration_seed).stage("calibrate")?;
    let symbol_rec = reconstruct_frequency(&rec_diag, &rec_lattice, &kernel).stage("reconstruct")?;
    let time_route_difference = if rs.time_route && rec_lattice.is_full_period() {
        match reconstruct_time(&rec_diag, &rec_lattice, &kernel) {
            Ok(t) => Some(t.symbol.max_abs_diff(&symbol_rec) / symbol_rec.max_abs().max(f64::MIN_POSITIVE)),
            Err(e) => {
                log::warn!("time-domain route skipped: {e}");
                None
            }
        }
    } else {
        None
    };
    let op_est = KnOperator::from_spreading(rec_spreading(&symbol_rec).stage("reconstruct")?, Some(q_rec)).stage("reconstruct")?;
    let h_est = channel_matrix(&op_est, &g, &lattice).stage("channel-matrix")?;

    let eq = &cfg.equalizer;
    let h_used = if eq.use_true_channel { &h_true } else { &h_est };
    let equalizer = Equalizer::new(h_used, eq.mode, eq.tikhonov).stage("equalize")?;
    let (mut errors, mut symbols, mut err_energy, mut sym_energy) = (0usize, 0usize, 0.0, 0.0);
    let mut last = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..cfg.ofdm.data_frames {
        let frame = data_frame(&g, &lattice, &mut data_rng).stage("modulate")?;
        let tx = transmit(&op, &frame.signal, cfg.noise.snr_db, &mut noise_rng).stage("transmit")?;
        p_sig += tx.signal_power;
        p_noise += tx.noise_power;
        let y = demodulate(&tx.received, &g, &lattice).stage("demodulate")?;
        let out = equalizer.solve(&y);
        for ((d, r), c) in out.decisions.iter().zip(&out.raw).zip(&frame.coefficients) {
            symbols += 1;
            if (d - c).norm() > 1e-9 {
                errors += 1;
            }
            err_energy += (r - c).norm_sqr();
            sym_energy += c.norm_sqr();
        }
        last = (y, out.raw, frame.coefficients);
    }
    let evm = (err_energy / sym_energy).sqrt();
    let c = kernel.calibration_constant.expect("calibrated");
    let summary = ReceiveSummary {
        a: lattice.a,
        b: lattice.b,
        lattice_points: lattice.len(),
        pilot_mode: ps.mode,
        equalizer: eq.mode,
        training_frames: offsets.len(),
        data_frames: cfg.ofdm.data_frames,
        data_symbols: symbols,
        symbol_errors: errors,
        ser: errors as f64 / symbols as f64,
        evm,
        evm_db: 20.0 * evm.log10(),
        condition_number: equalizer.condition_number,
        snr_db: cfg.noise.snr_db,
        measured_snr_db: cfg.noise.snr_db.map(|_| 10.0 * (p_sig / p_noise).log10()),
        calibration_constant: [c.re, c.im],
        min_abs_g: kernel.min_abs_g_on_support,
        diag_relative_error: relative_l2(&rec_diag, &true_diag),
        pilot_error_max: pilot_err,
        leakage_bound_max: bound_max,
        leakage_rms_max: rms_max,
        h_est_relative_error: h_est.relative_frobenius(&h_true),
        time_route_difference,
    };
    Ok(ReceiveReport {
        summary,
        operator: op,
        h_true,
        h_est,
        rec_lattice,
        diag_est: rec_diag,
        symbol_rec,
        y: last.0,
        c_est: last.1,
        c_sent: last.2,
    })
}
