//! THz path-loss model: spreading loss plus molecular-absorption loss.
//!
//! Total path loss in dB decomposes as
//!
//!   L(f, d) = Ls(f, d) + La(f, d)
//!   Ls(f, d) = 20 log10(4 pi f d / c)
//!   La(f, d) = 10 log10(1 / tau),   tau = exp(-k(f) d)
//!
//! where tau is the Beer-Lambert transmittance and k(f) is the medium
//! absorption coefficient in 1/m. La uses a factor of 10 because tau is a
//! power ratio. k(f) comes from one of two pluggable inputs: a tabulated
//! k(f) curve (linear interpolation, no extrapolation) or a simplified
//! molecular line catalog evaluated as
//!
//!   k(f) = sum over lines of (p/p0) (T0/T) Q S G(f)
//!
//! with Q the molecular number density of the line's species, S the
//! line's integrated absorption cross-section and G a Lorentzian line
//! shape normalized to unit area, parameterized by the line's full width
//! at half maximum. Line intensities S carry units of m^2 Hz per molecule
//! so that S G(f) is an m^2 cross-section; catalogs shipped with this
//! repository use illustrative values chosen to exercise the model, not
//! spectroscopic ground truth.
//!
//! Unit conventions at the API boundary: frequency in Hz, distance in m,
//! temperature in K, pressure in atm. Conversions (atm to Pa) happen
//! internally.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in m/s (exact).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Molar gas constant in J/(mol K).
pub const GAS_CONSTANT: f64 = 8.314_462_618;
/// Avogadro constant in 1/mol (exact).
pub const AVOGADRO: f64 = 6.022_140_76e23;
/// Standard atmosphere in Pa (exact).
pub const PASCALS_PER_ATM: f64 = 101_325.0;

const LOG10_E: f64 = std::f64::consts::LOG10_E;

/// Ambient conditions plus the reference state the line catalog scales
/// against. Defaults use the HITRAN reference state T0 = 296 K, p0 = 1 atm.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Medium {
    pub temperature_k: f64,
    pub pressure_atm: f64,
    #[serde(default = "Medium::default_reference_temperature")]
    pub reference_temperature_k: f64,
    #[serde(default = "Medium::default_reference_pressure")]
    pub reference_pressure_atm: f64,
}

impl Medium {
    fn default_reference_temperature() -> f64 {
        296.0
    }

    fn default_reference_pressure() -> f64 {
        1.0
    }

    pub fn new(temperature_k: f64, pressure_atm: f64) -> Result<Self> {
        let medium = Self {
            temperature_k,
            pressure_atm,
            reference_temperature_k: Self::default_reference_temperature(),
            reference_pressure_atm: Self::default_reference_pressure(),
        };
        medium.validate()?;
        Ok(medium)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature_k > 0.0)
            || !(self.pressure_atm > 0.0)
            || !(self.reference_temperature_k > 0.0)
            || !(self.reference_pressure_atm > 0.0)
        {
            return Err(Error::InvalidParameter(format!(
                "medium requires positive temperature and pressure, got T = {} K, p = {} atm",
                self.temperature_k, self.pressure_atm
            )));
        }
        Ok(())
    }
}

/// One absorption line of the simplified catalog.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Line {
    pub gas: String,
    pub isotopologue: String,
    /// Line center in Hz.
    pub center_hz: f64,
    /// Integrated absorption cross-section, m^2 Hz per molecule.
    pub intensity: f64,
    /// Lorentzian full width at half maximum, Hz.
    pub width_hz: f64,
    /// Volume mixing ratio of the species, dimensionless in [0, 1].
    pub mixing_ratio: f64,
}

/// Molecular line catalog used to evaluate k(f) line by line.
#[derive(Debug, Clone)]
pub struct LineCatalog {
    lines: Vec<Line>,
}

impl LineCatalog {
    pub fn new(lines: Vec<Line>) -> Result<Self> {
        if lines.is_empty() {
            return Err(Error::InvalidParameter("empty line catalog".into()));
        }
        for (i, line) in lines.iter().enumerate() {
            if !(line.center_hz > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "line {i}: center frequency must be positive"
                )));
            }
            if !(line.intensity >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "line {i}: intensity must be non-negative"
                )));
            }
            if !(line.width_hz > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "line {i}: width must be positive"
                )));
            }
            if !(0.0..=1.0).contains(&line.mixing_ratio) {
                return Err(Error::InvalidParameter(format!(
                    "line {i}: mixing ratio must lie in [0, 1]"
                )));
            }
        }
        Ok(Self { lines })
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    /// Parse the catalog CSV. Header:
    /// `gas,isotopologue,center_hz,intensity,width_hz,mixing_ratio`;
    /// lines starting with `#` are ignored.
    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut lines = Vec::new();
        for record in rdr.deserialize() {
            let line: Line = record?;
            lines.push(line);
        }
        Self::new(lines)
    }

    pub fn from_csv_path<P: AsRef<Path>>(path: P) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref()).map_err(|source| Error::File {
            path: path.as_ref().to_path_buf(),
            source,
        })?;
        Self::from_reader(file)
    }
}

/// Tabulated absorption coefficient k(f), strictly increasing in f.
#[derive(Debug, Clone)]
pub struct AbsorptionTable {
    frequencies_hz: Vec<f64>,
    k_per_m: Vec<f64>,
    pub temperature_k: f64,
    pub pressure_atm: f64,
    pub label: String,
}

impl AbsorptionTable {
    pub fn new(
        entries: Vec<(f64, f64)>,
        temperature_k: f64,
        pressure_atm: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidParameter("empty absorption table".into()));
        }
        for window in entries.windows(2) {
            if !(window[1].0 > window[0].0) {
                return Err(Error::InvalidParameter(
                    "absorption table frequencies must be strictly increasing".into(),
                ));
            }
        }
        for &(f, k) in &entries {
            if !(f > 0.0) || !(k >= 0.0) || !k.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "absorption table entry ({f}, {k}) out of domain"
                )));
            }
        }
        let (frequencies_hz, k_per_m) = entries.into_iter().unzip();
        Ok(Self {
            frequencies_hz,
            k_per_m,
            temperature_k,
            pressure_atm,
            label: label.into(),
        })
    }

    /// Parse the table CSV. Header: `frequency_hz,k_per_m`; lines starting
    /// with `#` are ignored. The descriptive metadata defaults to 285 K
    /// and 1 atm since the CSV format carries none.
    pub fn from_reader<R: Read>(reader: R, label: impl Into<String>) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            frequency_hz: f64,
            k_per_m: f64,
        }
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut entries = Vec::new();
        for record in rdr.deserialize() {
            let row: Row = record?;
            entries.push((row.frequency_hz, row.k_per_m));
        }
        Self::new(entries, 285.0, 1.0, label)
    }

    pub fn from_csv_path<P: AsRef<Path>>(path: P) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref()).map_err(|source| Error::File {
            path: path.as_ref().to_path_buf(),
            source,
        })?;
        let label = path
            .as_ref()
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::from_reader(file, label)
    }

    /// Sample a catalog on a frequency grid into a table.
    pub fn from_catalog(catalog: &LineCatalog, medium: &Medium, grid_hz: &[f64]) -> Result<Self> {
        let entries = grid_hz
            .iter()
            .map(|&f| absorption_coefficient(catalog, medium, f).map(|k| (f, k)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(
            entries,
            medium.temperature_k,
            medium.pressure_atm,
            "sampled-catalog",
        )
    }

    pub fn coverage_hz(&self) -> (f64, f64) {
        (self.frequencies_hz[0], *self.frequencies_hz.last().unwrap())
    }

    /// k(f) by linear interpolation. Queries outside the covered range
    /// fail rather than extrapolate.
    pub fn k_at(&self, frequency_hz: f64) -> Result<f64> {
        let (min_hz, max_hz) = self.coverage_hz();
        if !(frequency_hz >= min_hz && frequency_hz <= max_hz) {
            return Err(Error::OutOfCoverage {
                frequency_hz,
                min_hz,
                max_hz,
            });
        }
        let idx = match self
            .frequencies_hz
            .binary_search_by(|f| f.partial_cmp(&frequency_hz).unwrap())
        {
            Ok(i) => return Ok(self.k_per_m[i]),
            Err(i) => i,
        };
        let (f0, f1) = (self.frequencies_hz[idx - 1], self.frequencies_hz[idx]);
        let (k0, k1) = (self.k_per_m[idx - 1], self.k_per_m[idx]);
        let t = (frequency_hz - f0) / (f1 - f0);
        Ok(k0 + t * (k1 - k0))
    }
}

/// Source of the absorption coefficient for path-loss evaluation.
#[derive(Debug, Clone)]
pub enum AbsorptionModel {
    Table(AbsorptionTable),
    Catalog(LineCatalog),
}

impl AbsorptionModel {
    /// k(f) in 1/m from whichever input backs this model.
    pub fn k_at(&self, medium: &Medium, frequency_hz: f64) -> Result<f64> {
        match self {
            AbsorptionModel::Table(table) => table.k_at(frequency_hz),
            AbsorptionModel::Catalog(catalog) => {
                absorption_coefficient(catalog, medium, frequency_hz)
            }
        }
    }
}

/// Free-space spreading loss 20 log10(4 pi f d / c) in dB.
pub fn spreading_loss_db(frequency_hz: f64, distance_m: f64) -> Result<f64> {
    if !(frequency_hz > 0.0) || !(distance_m > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "spreading loss requires f > 0 and d > 0, got f = {frequency_hz}, d = {distance_m}"
        )));
    }
    Ok(20.0 * (4.0 * std::f64::consts::PI * frequency_hz * distance_m / SPEED_OF_LIGHT).log10())
}

/// Number density of a species: (p / R T) q N_A in molecules per m^3.
pub fn molecular_density(medium: &Medium, mixing_ratio: f64) -> Result<f64> {
    medium.validate()?;
    if !(0.0..=1.0).contains(&mixing_ratio) {
        return Err(Error::InvalidParameter(format!(
            "mixing ratio must lie in [0, 1], got {mixing_ratio}"
        )));
    }
    let pressure_pa = medium.pressure_atm * PASCALS_PER_ATM;
    Ok(pressure_pa / (GAS_CONSTANT * medium.temperature_k) * mixing_ratio * AVOGADRO)
}

/// Area-normalized Lorentzian centered at `center_hz` with the given FWHM.
fn lorentzian(frequency_hz: f64, center_hz: f64, fwhm_hz: f64) -> f64 {
    let half_width = 0.5 * fwhm_hz;
    let offset = frequency_hz - center_hz;
    half_width / (std::f64::consts::PI * (offset * offset + half_width * half_width))
}

/// Medium absorption coefficient k(f) summed over all catalog lines.
pub fn absorption_coefficient(
    catalog: &LineCatalog,
    medium: &Medium,
    frequency_hz: f64,
) -> Result<f64> {
    if !(frequency_hz > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "absorption coefficient requires f > 0, got {frequency_hz}"
        )));
    }
    medium.validate()?;
    let pressure_scale = medium.pressure_atm / medium.reference_pressure_atm;
    let temperature_scale = medium.reference_temperature_k / medium.temperature_k;
    let mut k = 0.0;
    for line in catalog.lines() {
        let density = molecular_density(medium, line.mixing_ratio)?;
        let cross_section =
            line.intensity * lorentzian(frequency_hz, line.center_hz, line.width_hz);
        k += pressure_scale * temperature_scale * density * cross_section;
    }
    Ok(k)
}

/// Beer-Lambert transmittance exp(-k d).
pub fn transmittance(k_per_m: f64, distance_m: f64) -> Result<f64> {
    if !(k_per_m >= 0.0) || !(distance_m >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "transmittance requires k >= 0 and d >= 0, got k = {k_per_m}, d = {distance_m}"
        )));
    }
    Ok((-k_per_m * distance_m).exp())
}

/// Absorption loss 10 log10(1/tau) = 10 k d log10(e) in dB.
pub fn absorption_loss_db(k_per_m: f64, distance_m: f64) -> Result<f64> {
    if !(k_per_m >= 0.0) || !(distance_m >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "absorption loss requires k >= 0 and d >= 0, got k = {k_per_m}, d = {distance_m}"
        )));
    }
    Ok(10.0 * k_per_m * distance_m * LOG10_E)
}

/// Total path loss in dB: spreading loss plus absorption loss.
pub fn path_loss_db(
    model: &AbsorptionModel,
    medium: &Medium,
    frequency_hz: f64,
    distance_m: f64,
) -> Result<f64> {
    let k = model.k_at(medium, frequency_hz)?;
    Ok(spreading_loss_db(frequency_hz, distance_m)? + absorption_loss_db(k, distance_m)?)
}
