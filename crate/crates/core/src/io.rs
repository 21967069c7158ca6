//! On-disk formats.
//!
//! Arrays are little-endian `f64` pairs `(re, im)`, row-major for planes,
//! either base64-encoded inside the JSON header or in a sibling `.bin` file.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelMatrix, GaborLattice};
use crate::error::{Error, Result};
use crate::grid::{BandBox, PlaneGrid, SampledSignal, SampledSymbol, SignalDomain, SymbolDomain, TimeGrid};
use crate::psido::{ExactShift, KnOperator};

const VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Storage {
    Inline,
    /// Payload in `<stem>.bin` next to the header.
    Sidecar,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "encoding", rename_all = "snake_case")]
pub enum ArrayData {
    Base64 { data: String },
    File { path: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisHeader {
    pub n_samples: usize,
    pub period: f64,
}

impl AxisHeader {
    fn of(g: &TimeGrid) -> Self {
        Self { n_samples: g.n_samples(), period: g.period() }
    }

    fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.n_samples, self.period)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalFile {
    pub format: String,
    pub version: u32,
    pub grid: AxisHeader,
    pub domain: SignalDomain,
    pub values: ArrayData,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolFile {
    pub format: String,
    pub version: u32,
    pub axis1: AxisHeader,
    pub axis2: AxisHeader,
    pub domain: SymbolDomain,
    pub support_box: Option<BandBox>,
    pub values: ArrayData,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelFile {
    pub format: String,
    pub version: u32,
    pub grid: AxisHeader,
    pub lattice: GaborLattice,
    /// Row-major `H[i, j]`.
    pub entries: ArrayData,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorFile {
    pub format: String,
    pub version: u32,
    pub grid: AxisHeader,
    pub band_box: Option<BandBox>,
    pub exact_shifts: Vec<ExactShift>,
    /// Spreading samples on the spreading grid, when the operator is sampled.
    pub spreading: Option<ArrayData>,
}

pub fn encode(values: &[Complex64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(values.len() * 16);
    for v in values {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<Vec<Complex64>> {
    if !bytes.len().is_multiple_of(16) {
        return Err(Error::Format(format!("payload of {} bytes is not a whole number of complex values", bytes.len())));
    }
    Ok(bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            Complex64::new(re, im)
        })
        .collect())
}

fn store(header: &Path, values: &[Complex64], storage: Storage) -> Result<ArrayData> {
    let bytes = encode(values);
    match storage {
        Storage::Inline => Ok(ArrayData::Base64 { data: STANDARD.encode(bytes) }),
        Storage::Sidecar => {
            let p = header.with_extension("bin");
            fs::write(&p, bytes)?;
            let name = p.file_name().and_then(|s| s.to_str()).expect("utf-8 file name").to_string();
            Ok(ArrayData::File { path: name })
        }
    }
}

fn fetch(header: &Path, data: &ArrayData, expected: usize) -> Result<Vec<Complex64>> {
    let bytes = match data {
        ArrayData::Base64 { data } => STANDARD.decode(data).map_err(|e| Error::Format(format!("bad base64 payload: {e}")))?,
        ArrayData::File { path } => {
            let p = header.parent().unwrap_or(Path::new(".")).join(path);
            fs::read(&p).map_err(|e| Error::Format(format!("cannot read payload {}: {e}", p.display())))?
        }
    };
    let values = decode(&bytes)?;
    if values.len() != expected {
        return Err(Error::Format(format!("payload holds {} values, header implies {expected}", values.len())));
    }
    Ok(values)
}

fn check_format(found: &str, version: u32, expected: &str) -> Result<()> {
    if found != expected {
        return Err(Error::Format(format!("expected format \"{expected}\", found \"{found}\"")));
    }
    if version != VERSION {
        return Err(Error::Format(format!("unsupported {expected} version {version}")));
    }
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn save_signal(path: &Path, f: &SampledSignal, storage: Storage) -> Result<()> {
    let file = SignalFile {
        format: "signal".into(),
        version: VERSION,
        grid: AxisHeader::of(&f.grid),
        domain: f.domain,
        values: store(path, &f.values, storage)?,
    };
    write_json(path, &file)
}

pub fn load_signal(path: &Path) -> Result<SampledSignal> {
    let file: SignalFile = read_json(path)?;
    check_format(&file.format, file.version, "signal")?;
    let grid = file.grid.grid()?;
    let values = fetch(path, &file.values, grid.n_samples())?;
    SampledSignal::new(grid, values, file.domain)
}

pub fn save_symbol(path: &Path, s: &SampledSymbol, storage: Storage) -> Result<()> {
    let file = SymbolFile {
        format: "symbol".into(),
        version: VERSION,
        axis1: AxisHeader::of(&s.grid.axis1),
        axis2: AxisHeader::of(&s.grid.axis2),
        domain: s.domain,
        support_box: s.support_box,
        values: store(path, &s.values, storage)?,
    };
    write_json(path, &file)
}

pub fn load_symbol(path: &Path) -> Result<SampledSymbol> {
    let file: SymbolFile = read_json(path)?;
    check_format(&file.format, file.version, "symbol")?;
    let grid = PlaneGrid::new(file.axis1.grid()?, file.axis2.grid()?);
    let values = fetch(path, &file.values, grid.len())?;
    let s = SampledSymbol::new(grid, values, file.domain)?;
    match file.support_box {
        Some(b) => s.with_support(b),
        None => Ok(s),
    }
}

pub fn save_channel_matrix(path: &Path, h: &ChannelMatrix, storage: Storage) -> Result<()> {
    let row_major: Vec<Complex64> = h.entries.transpose().iter().cloned().collect();
    let file = ChannelFile {
        format: "channel-matrix".into(),
        version: VERSION,
        grid: AxisHeader::of(&h.lattice.grid),
        lattice: h.lattice.clone(),
        entries: store(path, &row_major, storage)?,
    };
    write_json(path, &file)
}

pub fn load_channel_matrix(path: &Path) -> Result<ChannelMatrix> {
    let file: ChannelFile = read_json(path)?;
    check_format(&file.format, file.version, "channel-matrix")?;
    let grid = file.grid.grid()?;
    let mut lattice = file.lattice;
    if !lattice.grid.same_as(&grid) {
        return Err(Error::Format("lattice grid disagrees with the file grid".into()));
    }
    lattice.grid = grid;
    let m = lattice.len();
    let values = fetch(path, &file.entries, m * m)?;
    Ok(ChannelMatrix { lattice, entries: DMatrix::from_row_slice(m, m, &values) })
}

pub fn save_operator(path: &Path, op: &KnOperator, storage: Storage) -> Result<()> {
    let spreading = match &op.spreading {
        Some(s) => Some(store(path, &s.values, storage)?),
        None => None,
    };
    let file = OperatorFile {
        format: "operator".into(),
        version: VERSION,
        grid: AxisHeader::of(&op.grid),
        band_box: op.band_box,
        exact_shifts: op.exact_shifts.clone(),
        spreading,
    };
    write_json(path, &file)
}

pub fn load_operator(path: &Path) -> Result<KnOperator> {
    let file: OperatorFile = read_json(path)?;
    check_format(&file.format, file.version, "operator")?;
    let grid = file.grid.grid()?;
    match file.spreading {
        Some(data) => {
            if !file.exact_shifts.is_empty() {
                return Err(Error::Format("operator file holds both spreading samples and exact shifts".into()));
            }
            let plane = PlaneGrid::spreading_grid(&grid);
            let values = fetch(path, &data, plane.len())?;
            KnOperator::from_spreading(SampledSymbol::new(plane, values, SymbolDomain::Spreading)?, file.band_box)
        }
        None => Ok(KnOperator {
            grid,
            symbol: None,
            spreading: None,
            band_box: file.band_box,
            exact_shifts: file.exact_shifts,
        }),
    }
}

/// `t,re,im` (or `xi,re,im` in the frequency domain).
pub fn write_signal_csv(path: &Path, f: &SampledSignal) -> Result<()> {
    let mut w = std::io::BufWriter::new(fs::File::create(path)?);
    let axis = if f.domain == SignalDomain::Time { "t" } else { "xi" };
    writeln!(w, "{axis},re,im")?;
    for (x, v) in f.grid.points().iter().zip(&f.values) {
        writeln!(w, "{x:e},{:e},{:e}", v.re, v.im)?;
    }
    Ok(())
}

pub fn read_signal_csv(path: &Path) -> Result<SampledSignal> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Format("empty CSV".into()))?;
    let domain = match header.trim() {
        "t,re,im" => SignalDomain::Time,
        "xi,re,im" => SignalDomain::Frequency,
        other => return Err(Error::Format(format!("unexpected CSV header \"{other}\""))),
    };
    let mut xs = Vec::new();
    let mut values = Vec::new();
    for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let cols: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Format(format!("line {}: {e}", n + 2)))?;
        if cols.len() != 3 {
            return Err(Error::Format(format!("line {}: expected 3 columns, found {}", n + 2, cols.len())));
        }
        xs.push(cols[0]);
        values.push(Complex64::new(cols[1], cols[2]));
    }
    if xs.len() < 2 {
        return Err(Error::Format("CSV needs at least two samples".into()));
    }
    let step = xs[1] - xs[0];
    let grid = TimeGrid::new(xs.len(), step * xs.len() as f64)?;
    for (k, x) in xs.iter().enumerate() {
        if (x - grid.point(k)).abs() > 1e-9 * grid.period() {
            return Err(Error::Format(format!("sample {k} at {x} is off the centered grid")));
        }
    }
    SampledSignal::new(grid, values, domain)
}

/// `p,q,re,im`, row-major.
pub fn write_symbol_csv(path: &Path, s: &SampledSymbol) -> Result<()> {
    let mut w = std::io::BufWriter::new(fs::File::create(path)?);
    let (a, b) = match s.domain {
        SymbolDomain::Symbol => ("x", "xi"),
        SymbolDomain::Spreading => ("eta", "u"),
    };
    writeln!(w, "{a},{b},re,im")?;
    let (n1, n2) = s.grid.shape();
    for i1 in 0..n1 {
        for i2 in 0..n2 {
            let (p, q) = s.grid.point(i1, i2);
            let v = s.at(i1, i2);
            writeln!(w, "{p:e},{q:e},{:e},{:e}", v.re, v.im)?;
        }
    }
    Ok(())
}

/// `k,l,k',l',re,im`: row lattice indices, column lattice indices, entry.
pub fn write_channel_csv(path: &Path, h: &ChannelMatrix) -> Result<()> {
    let mut w = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(w, "k,l,k',l',re,im")?;
    for (i, &(k, l)) in h.lattice.points.iter().enumerate() {
        for (j, &(kk, ll)) in h.lattice.points.iter().enumerate() {
            let v = h.entries[(i, j)];
            writeln!(w, "{k},{l},{kk},{ll},{:e},{:e}", v.re, v.im)?;
        }
    }
    Ok(())
}

/// `k,l,re,im` for one value per lattice point.
pub fn write_lattice_csv(path: &Path, lattice: &GaborLattice, values: &[Complex64]) -> Result<()> {
    let mut w = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(w, "k,l,re,im")?;
    for (&(k, l), v) in lattice.points.iter().zip(values) {
        writeln!(w, "{k},{l},{:e},{:e}", v.re, v.im)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{build_lattice, channel_matrix, Truncation};
    use crate::psido::{point_scatterers, synth_bandlimited, Smoothness};
    use crate::tf::Window;

    #[test]
    fn encoding_is_bit_exact() {
        let v = vec![Complex64::new(1.0 / 3.0, -0.0), Complex64::new(f64::MIN_POSITIVE, 1e300)];
        let back = decode(&encode(&v)).unwrap();
        assert_eq!(v, back);
        assert_eq!(back[0].im.to_bits(), (-0.0f64).to_bits());
        assert!(decode(&[0u8; 15]).is_err());
    }

    #[test]
    fn signal_round_trips_both_storages() {
        let dir = tempfile::tempdir().unwrap();
        let grid = TimeGrid::new(64, 8.0).unwrap();
        let g = Window::gaussian(grid).signal;
        for (name, storage) in [("inline.json", Storage::Inline), ("side.json", Storage::Sidecar)] {
            let p = dir.path().join(name);
            save_signal(&p, &g, storage).unwrap();
            assert_eq!(load_signal(&p).unwrap(), g);
        }
        assert!(dir.path().join("side.bin").exists());
        let csv = dir.path().join("g.csv");
        write_signal_csv(&csv, &g).unwrap();
        let back = read_signal_csv(&csv).unwrap();
        assert!(back.grid.same_as(&grid));
        assert!(back.max_abs_diff(&g) < 1e-15);
    }

    #[test]
    fn symbol_and_operator_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let grid = TimeGrid::new(32, 4.0).unwrap();
        let band = BandBox::new(1.0, 0.5).unwrap();
        let op = synth_bandlimited(&PlaneGrid::symbol_grid(&grid), band, 5, Smoothness::White).unwrap();
        let p = dir.path().join("sym.json");
        let sym = op.symbol.clone().unwrap();
        save_symbol(&p, &sym, Storage::Sidecar).unwrap();
        assert_eq!(load_symbol(&p).unwrap(), sym);

        let p = dir.path().join("op.json");
        save_operator(&p, &op, Storage::Inline).unwrap();
        let back = load_operator(&p).unwrap();
        assert_eq!(back.spreading, op.spreading);
        assert_eq!(back.band_box, op.band_box);

        let one = Complex64::new(1.0, 0.0);
        let exact = point_scatterers(grid, &[(one, 0.125, 0.25), (one * 0.5, 0.0, -0.5)]).unwrap();
        save_operator(&p, &exact, Storage::Inline).unwrap();
        let back = load_operator(&p).unwrap();
        assert_eq!(back.exact_shifts, exact.exact_shifts);
        assert!(back.spreading.is_none());
    }

    #[test]
    fn channel_matrix_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let grid = TimeGrid::new(64, 8.0).unwrap();
        let l = build_lattice(grid, 2.0, 1.0, Truncation::FullPeriod).unwrap();
        let g = Window::gaussian(grid);
        let op = point_scatterers(grid, &[(Complex64::new(0.3, 0.4), 0.125, 0.25)]).unwrap();
        let h = channel_matrix(&op, &g, &l).unwrap();
        let p = dir.path().join("h.json");
        save_channel_matrix(&p, &h, Storage::Sidecar).unwrap();
        let back = load_channel_matrix(&p).unwrap();
        assert_eq!(back.entries, h.entries);
        assert_eq!(back.lattice, h.lattice);
        let csv = dir.path().join("h.csv");
        write_channel_csv(&csv, &h).unwrap();
        let text = fs::read_to_string(&csv).unwrap();
        assert_eq!(text.lines().count(), 1 + l.len() * l.len());
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.json");
        fs::write(&p, r#"{"format":"symbol","version":1,"grid":{"n_samples":4,"period":1.0},"domain":"time","values":{"encoding":"base64","data":""}}"#).unwrap();
        assert!(matches!(load_signal(&p), Err(Error::Format(_))));
        fs::write(&p, r#"{"format":"signal","version":1,"grid":{"n_samples":4,"period":1.0},"domain":"time","values":{"encoding":"base64","data":"AAAA"}}"#).unwrap();
        assert!(matches!(load_signal(&p), Err(Error::Format(_))));
        fs::write(&p, r#"{"format":"signal","version":1,"grid":{"n_samples":3,"period":1.0},"domain":"time","values":{"encoding":"base64","data":""}}"#).unwrap();
        assert!(load_signal(&p).is_err());
    }
}
