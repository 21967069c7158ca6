//! TOML scenario configuration.
//!
//! Every section has defaults, so a file holding only `command = "..."` is a
//! valid scenario. Unknown keys are rejected with the offending key named.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

use crate::channel::{build_lattice, GaborLattice, Truncation};
use crate::error::{Error, Result};
use crate::grid::{BandBox, PlaneGrid, TimeGrid};
use crate::psido::{point_scatterers, synth_bandlimited, KnOperator, Smoothness};
use crate::reconstruction::{q_eps, BumpProfile};
use crate::tf::Window;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    SynthSymbol,
    ChannelMatrix,
    Reconstruct,
    UniquenessSvd,
    OfdmDemo,
    Calibrate,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SynthSymbol => "synth-symbol",
            Command::ChannelMatrix => "channel-matrix",
            Command::Reconstruct => "reconstruct",
            Command::UniquenessSvd => "uniqueness-svd",
            Command::OfdmDemo => "ofdm-demo",
            Command::Calibrate => "calibrate",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub n_samples: usize,
    pub period: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { n_samples: 256, period: 16.0 }
    }
}

impl GridSpec {
    pub fn build(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.n_samples, self.period)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowChoice {
    Gaussian,
    Rectangular,
    BoxBasis,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindowSpec {
    pub kind: WindowChoice,
    /// Rectangular window interval.
    pub start: f64,
    pub end: f64,
    /// Box-basis width.
    pub width: f64,
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self { kind: WindowChoice::Gaussian, start: -0.5, end: 0.5, width: 1.0 }
    }
}

impl WindowSpec {
    pub fn build(&self, grid: TimeGrid) -> Result<Window> {
        match self.kind {
            WindowChoice::Gaussian => Ok(Window::gaussian(grid)),
            WindowChoice::Rectangular => Window::rectangular(grid, self.start, self.end),
            WindowChoice::BoxBasis => Window::box_basis(grid, self.width),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationChoice {
    FullPeriod,
    Radii,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LatticeSpec {
    pub a: f64,
    pub b: f64,
    pub truncation: TruncationChoice,
    pub radii: [i64; 2],
}

impl Default for LatticeSpec {
    fn default() -> Self {
        Self { a: 2.0, b: 1.0, truncation: TruncationChoice::FullPeriod, radii: [3, 3] }
    }
}

impl LatticeSpec {
    pub fn truncation(&self) -> Truncation {
        match self.truncation {
            TruncationChoice::FullPeriod => Truncation::FullPeriod,
            TruncationChoice::Radii => Truncation::Radii { k1: self.radii[0], k2: self.radii[1] },
        }
    }

    pub fn build(&self, grid: TimeGrid) -> Result<GaborLattice> {
        build_lattice(grid, self.a, self.b, self.truncation())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelChoice {
    Identity,
    Zero,
    PointScatterers,
    /// Random band-limited spreading function inside `Q_eps`.
    Bandlimited,
    /// Line of sight plus a random band-limited scatter part.
    LosPlusScatter,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScattererSpec {
    pub amplitude: [f64; 2],
    pub delay: f64,
    pub doppler: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelSpec {
    pub kind: ChannelChoice,
    /// Margin of the scatter band inside `Q`, in grid steps.
    pub band_eps_steps: f64,
    pub smoothness: Smoothness,
    /// Line-of-sight amplitude for `los_plus_scatter`.
    pub los_amplitude: f64,
    /// L2 norm of the random spreading part.
    pub scatter_gain: f64,
    pub scatterers: Vec<ScattererSpec>,
}

impl Default for ChannelSpec {
    fn default() -> Self {
        Self {
            kind: ChannelChoice::LosPlusScatter,
            band_eps_steps: 2.0,
            smoothness: Smoothness::Smooth,
            los_amplitude: 1.0,
            scatter_gain: 0.5,
            scatterers: Vec::new(),
        }
    }
}

impl ChannelSpec {
    pub fn band(&self, lattice: &GaborLattice) -> Result<BandBox> {
        q_eps(lattice, self.band_eps_steps)
    }

    pub fn build(&self, lattice: &GaborLattice, seed: u64) -> Result<KnOperator> {
        let grid = lattice.grid;
        let plane = PlaneGrid::symbol_grid(&grid);
        match self.kind {
            ChannelChoice::Identity => Ok(KnOperator::identity(grid)),
            ChannelChoice::Zero => Ok(KnOperator::zero(grid)),
            ChannelChoice::PointScatterers => {
                if self.scatterers.is_empty() {
                    return Err(Error::Config("channel.kind = \"point_scatterers\" needs [[channel.scatterers]]".into()));
                }
                let list: Vec<_> = self
                    .scatterers
                    .iter()
                    .map(|s| (Complex64::new(s.amplitude[0], s.amplitude[1]), s.delay, s.doppler))
                    .collect();
                point_scatterers(grid, &list)
            }
            ChannelChoice::Bandlimited => {
                let op = synth_bandlimited(&plane, self.band(lattice)?, seed, self.smoothness)?;
                Ok(op.scaled(Complex64::new(self.scatter_gain, 0.0)))
            }
            ChannelChoice::LosPlusScatter => {
                let scatter = synth_bandlimited(&plane, self.band(lattice)?, seed, self.smoothness)?;
                KnOperator::identity(grid).combine(
                    Complex64::new(self.los_amplitude, 0.0),
                    &scatter,
                    Complex64::new(self.scatter_gain, 0.0),
                )
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PilotMode {
    /// Pilot patterns cycle over training frames until every lattice point
    /// has carried a pilot.
    Dense,
    /// One training frame; the diagonal is known only on the pilot
    /// sublattice, which is reconstructed with its own, smaller `Q`.
    Sublattice,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PilotSpec {
    pub mode: PilotMode,
    /// Pilot spacing in lattice indices `(k, l)`.
    pub spacing: [i64; 2],
    /// Data is zeroed within this many indices of a pilot.
    pub guard: [i64; 2],
    pub value: [f64; 2],
}

impl Default for PilotSpec {
    fn default() -> Self {
        Self { mode: PilotMode::Dense, spacing: [2, 4], guard: [1, 3], value: [1.0, 0.0] }
    }
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSpec {
    /// Absent means noiseless.
    pub snr_db: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EqualizerMode {
    FullSolve,
    DiagonalOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EqualizerSpec {
    pub mode: EqualizerMode,
    /// Tikhonov parameter relative to the spectral norm of `H`.
    pub tikhonov: f64,
    /// Equalize with the directly assembled channel matrix instead of the
    /// reconstructed one.
    pub use_true_channel: bool,
}

impl Default for EqualizerSpec {
    fn default() -> Self {
        Self { mode: EqualizerMode::FullSolve, tikhonov: 1e-10, use_true_channel: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReconstructionSpec {
    /// Width of the transition band of `phi`, in grid steps.
    pub eps_steps: f64,
    pub profile: BumpProfile,
    pub nonvanish_tol: f64,
    pub calibration_seed: u64,
    /// Also run the time-domain cardinal series and report its agreement.
    pub time_route: bool,
}

impl Default for ReconstructionSpec {
    fn default() -> Self {
        Self {
            eps_steps: 2.0,
            profile: BumpProfile::Quintic,
            nonvanish_tol: 1e-6,
            calibration_seed: 0,
            time_route: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UniquenessSpec {
    /// Margin of the coefficient band inside `Q`, in grid steps.
    pub band_eps_steps: f64,
    /// Frame precondition `A_est > ratio * B_est` for the obstruction test.
    pub min_frame_ratio: f64,
    pub obstruction: bool,
}

impl Default for UniquenessSpec {
    fn default() -> Self {
        Self { band_eps_steps: 2.0, min_frame_ratio: 0.1, obstruction: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OfdmSpec {
    pub data_frames: usize,
}

impl Default for OfdmSpec {
    fn default() -> Self {
        Self { data_frames: 4 }
    }
}

/// A complete scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub command: Command,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub window: WindowSpec,
    #[serde(default)]
    pub lattice: LatticeSpec,
    #[serde(default)]
    pub channel: ChannelSpec,
    #[serde(default)]
    pub pilots: PilotSpec,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub equalizer: EqualizerSpec,
    #[serde(default)]
    pub reconstruction: ReconstructionSpec,
    #[serde(default)]
    pub uniqueness: UniquenessSpec,
    #[serde(default)]
    pub ofdm: OfdmSpec,
}

impl ScenarioConfig {
    pub fn minimal(command: Command) -> Self {
        Self {
            command,
            seed: 0,
            output_dir: None,
            grid: GridSpec::default(),
            window: WindowSpec::default(),
            lattice: LatticeSpec::default(),
            channel: ChannelSpec::default(),
            pilots: PilotSpec::default(),
            noise: NoiseSpec::default(),
            equalizer: EqualizerSpec::default(),
            reconstruction: ReconstructionSpec::default(),
            uniqueness: UniquenessSpec::default(),
            ofdm: OfdmSpec::default(),
        }
    }

    /// Range and alignment checks that need more than one field.
    pub fn validate(&self) -> Result<()> {
        let grid = self.grid.build()?;
        self.lattice.build(grid)?;
        self.window.build(grid)?;
        if self.pilots.spacing.iter().any(|&s| s <= 0) || self.pilots.guard.iter().any(|&g| g < 0) {
            return Err(Error::Config("pilots.spacing must be positive and pilots.guard non-negative".into()));
        }
        let v = Complex64::new(self.pilots.value[0], self.pilots.value[1]);
        if (v.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("pilots.value must have unit modulus, got |{v}| = {}", v.norm())));
        }
        if let Some(snr) = self.noise.snr_db {
            if !snr.is_finite() {
                return Err(Error::Config("noise.snr_db must be finite; omit it for a noiseless run".into()));
            }
        }
        if !(self.equalizer.tikhonov >= 0.0) {
            return Err(Error::Config("equalizer.tikhonov must be non-negative".into()));
        }
        if self.reconstruction.eps_steps < 0.0 || self.channel.band_eps_steps < 0.0 || self.uniqueness.band_eps_steps < 0.0 {
            return Err(Error::Config("band margins (eps_steps) must be non-negative".into()));
        }
        if self.ofdm.data_frames == 0 {
            return Err(Error::Config("ofdm.data_frames must be at least 1".into()));
        }
        Ok(())
    }

    /// Fully resolved parameter set as TOML.
    pub fn echo(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Parses and validates a scenario. Errors carry the TOML line and key.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &std::path::Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}
