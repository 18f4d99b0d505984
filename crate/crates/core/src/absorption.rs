//! Line-by-line molecular absorption coefficient k(f).
//!
//! Each line contributes a pressure/temperature prefactor, a radiation-term
//! ratio `f tanh(hcf/2k_bT) / (f_c tanh(hcf_c/2k_bT))` and a Van
//! Vleck-Weisskopf line shape. All quantities are SI (Hz, 1/m) once a catalog
//! has been loaded; catalog files may carry per-field calibration factors
//! that convert their native units.
//!
//! Catalog CSV layout (column order fixed, header row mandatory):
//!
//! ```text
//! # cal.f_c0=2.9979e10
//! # cal.S=2.5934e9
//! q,S,f_c0,delta,alpha_air,alpha_0,gamma
//! 0.0005,2.66e-25,276,0.0251,0.1117,0.916,0.83
//! ```
//!
//! `# cal.<field>=<float>` comment lines may appear anywhere; every stored
//! value is the file value multiplied by its field's factor (default 1).

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Constants fixed to the reference parameter table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub speed_of_light: f64,
    pub planck: f64,
    pub boltzmann: f64,
    pub avogadro: f64,
    /// Gas constant in m³·atm/(K·mol).
    pub gas_constant: f64,
}

impl PhysicalConstants {
    pub const TABLE: PhysicalConstants = PhysicalConstants {
        speed_of_light: 2.9979e8,
        planck: 6.6262e-34,
        boltzmann: 1.3806e-23,
        avogadro: 6.0221e23,
        gas_constant: 8.2051e-5,
    };
}

/// State of the propagation medium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediumConditions {
    pub pressure_atm: f64,
    pub reference_pressure_atm: f64,
    pub temperature_k: f64,
    pub reference_temperature_k: f64,
    pub standard_temperature_k: f64,
}

impl Default for MediumConditions {
    fn default() -> Self {
        Self {
            pressure_atm: 1.0,
            reference_pressure_atm: 1.0,
            temperature_k: 396.0,
            reference_temperature_k: 296.0,
            standard_temperature_k: 273.15,
        }
    }
}

impl MediumConditions {
    pub fn validate(&self) -> Result<(), AbsorptionError> {
        let all = [
            self.pressure_atm,
            self.reference_pressure_atm,
            self.temperature_k,
            self.reference_temperature_k,
            self.standard_temperature_k,
        ];
        if all.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(AbsorptionError::Medium(format!("all medium fields must be positive: {self:?}")))
        }
    }

    fn pressure_ratio(&self) -> f64 {
        self.pressure_atm / self.reference_pressure_atm
    }
}

/// One absorption line, SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralLine {
    /// Mixing ratio q (fraction).
    pub mixing_ratio: f64,
    /// Line intensity S.
    pub intensity: f64,
    /// Zero-pressure resonance f_c0 (Hz).
    pub resonance_hz: f64,
    /// Linear pressure shift δ (Hz).
    pub pressure_shift_hz: f64,
    /// Air-broadened half-width (Hz).
    pub air_half_width_hz: f64,
    /// Self-broadened half-width (Hz).
    pub self_half_width_hz: f64,
    /// Temperature broadening exponent γ.
    pub temperature_exponent: f64,
}

impl SpectralLine {
    pub fn validate(&self) -> Result<(), String> {
        let fields = [
            self.mixing_ratio,
            self.intensity,
            self.resonance_hz,
            self.pressure_shift_hz,
            self.air_half_width_hz,
            self.self_half_width_hz,
            self.temperature_exponent,
        ];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err("non-finite field".into());
        }
        if !(0.0..=1.0).contains(&self.mixing_ratio) {
            return Err(format!("mixing ratio {} outside [0, 1]", self.mixing_ratio));
        }
        if self.intensity < 0.0 {
            return Err(format!("negative line intensity {}", self.intensity));
        }
        if self.air_half_width_hz <= 0.0 || self.self_half_width_hz <= 0.0 {
            return Err(format!(
                "half-widths must be positive (alpha_air = {}, alpha_0 = {})",
                self.air_half_width_hz, self.self_half_width_hz
            ));
        }
        if self.resonance_hz <= 0.0 {
            return Err(format!("resonance must be positive, got {}", self.resonance_hz));
        }
        Ok(())
    }
}

/// Lorentz half-width α = ((1−q)α_air + qα_0)(p/p0)(T0/T)^γ.
pub fn lorentz_half_width(line: &SpectralLine, medium: &MediumConditions) -> f64 {
    let q = line.mixing_ratio;
    ((1.0 - q) * line.air_half_width_hz + q * line.self_half_width_hz)
        * medium.pressure_ratio()
        * (medium.reference_temperature_k / medium.temperature_k).powf(line.temperature_exponent)
}

/// Pressure-shifted resonance f_c = f_c0 + δ(p/p0).
pub fn shifted_resonance(line: &SpectralLine, medium: &MediumConditions) -> f64 {
    line.resonance_hz + line.pressure_shift_hz * medium.pressure_ratio()
}

/// Van Vleck-Weisskopf line shape F(f) in 1/Hz.
pub fn vvw_line_shape(line: &SpectralLine, medium: &MediumConditions, f: f64) -> f64 {
    let alpha = lorentz_half_width(line, medium);
    let fc = shifted_resonance(line, medium);
    let c = PhysicalConstants::TABLE.speed_of_light;
    let y = f + fc;
    let z = f - fc;
    let a2 = alpha * alpha;
    100.0 * c * alpha * f / (PI * fc) * (1.0 / (y * y + a2) + 1.0 / (z * z + a2))
}

fn line_absorption(line: &SpectralLine, medium: &MediumConditions, f: f64) -> f64 {
    let k = PhysicalConstants::TABLE;
    let fc = shifted_resonance(line, medium);
    let t = medium.temperature_k;
    let thermal = |freq: f64| (k.planck * k.speed_of_light * freq / (2.0 * k.boltzmann * t)).tanh();
    let p = medium.pressure_atm;
    let numerator =
        p * p * medium.standard_temperature_k * line.mixing_ratio * k.avogadro * line.intensity * f * thermal(f);
    let denominator = medium.reference_pressure_atm * k.gas_constant * t * t * fc * thermal(fc);
    numerator / denominator * vvw_line_shape(line, medium, f)
}

/// Molecular absorption coefficient k(f) in 1/m: the sum of every line's
/// contribution. An empty catalog yields 0 and logs a warning.
pub fn absorption_coefficient(lines: &[SpectralLine], medium: &MediumConditions, f: f64) -> f64 {
    if lines.is_empty() {
        log::warn!("absorption coefficient requested from an empty line catalog; returning 0");
        return 0.0;
    }
    lines.iter().map(|l| line_absorption(l, medium, f)).sum()
}

/// Per-field unit factors applied while loading a catalog.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub q: f64,
    pub s: f64,
    pub f_c0: f64,
    pub delta: f64,
    pub alpha_air: f64,
    pub alpha_0: f64,
    pub gamma: f64,
}

impl Default for Calibration {
    fn default() -> Self {
        Self { q: 1.0, s: 1.0, f_c0: 1.0, delta: 1.0, alpha_air: 1.0, alpha_0: 1.0, gamma: 1.0 }
    }
}

impl Calibration {
    fn set(&mut self, field: &str, value: f64) -> bool {
        let slot = match field {
            "q" => &mut self.q,
            "S" | "s" => &mut self.s,
            "f_c0" => &mut self.f_c0,
            "delta" => &mut self.delta,
            "alpha_air" => &mut self.alpha_air,
            "alpha_0" => &mut self.alpha_0,
            "gamma" => &mut self.gamma,
            _ => return false,
        };
        *slot = value;
        true
    }
}

pub const CATALOG_COLUMNS: [&str; 7] = ["q", "S", "f_c0", "delta", "alpha_air", "alpha_0", "gamma"];

/// Single-line water-vapour catalog with the shipped calibration: positions
/// and widths read as cm⁻¹ (factor 100c to Hz) and an intensity scale
/// fitted to the reference k(f) values at 0.85–1.1 THz.
pub const TABLE_CATALOG_CSV: &str = include_str!("../presets/h2o_table.csv");

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Catalog {
    pub lines: Vec<SpectralLine>,
    pub calibration: Calibration,
}

impl Catalog {
    pub fn absorption_coefficient(&self, medium: &MediumConditions, f: f64) -> f64 {
        absorption_coefficient(&self.lines, medium, f)
    }

    pub fn table_preset() -> Catalog {
        TABLE_CATALOG_CSV.parse().expect("shipped catalog parses")
    }
}

impl FromStr for Catalog {
    type Err = AbsorptionError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut calibration = Calibration::default();
        let mut body = String::with_capacity(text.len());
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(assignment) = comment.trim().strip_prefix("cal.") {
                    let (field, value) = assignment.split_once('=').ok_or_else(|| AbsorptionError::Parse {
                        row: idx + 1,
                        column: "cal".into(),
                        message: format!("expected cal.<field>=<float>, got '{line}'"),
                    })?;
                    let value: f64 = value.trim().parse().map_err(|_| AbsorptionError::Parse {
                        row: idx + 1,
                        column: format!("cal.{}", field.trim()),
                        message: format!("'{}' is not a number", value.trim()),
                    })?;
                    if !calibration.set(field.trim(), value) {
                        return Err(AbsorptionError::Parse {
                            row: idx + 1,
                            column: format!("cal.{}", field.trim()),
                            message: "unknown calibration field".into(),
                        });
                    }
                }
                body.push('\n');
                continue;
            }
            body.push_str(raw);
            body.push('\n');
        }

        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .comment(None)
            .flexible(true)
            .from_reader(body.as_bytes());
        let headers = reader.headers().map_err(|e| AbsorptionError::Header(e.to_string()))?.clone();
        let found: Vec<&str> = headers.iter().collect();
        if found != CATALOG_COLUMNS {
            return Err(AbsorptionError::Header(format!("expected columns {:?}, found {:?}", CATALOG_COLUMNS, found)));
        }

        let mut lines = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| AbsorptionError::Parse {
                row: e.position().map(|p| p.line() as usize).unwrap_or(0),
                column: String::new(),
                message: e.to_string(),
            })?;
            let row = record.position().map(|p| p.line() as usize).unwrap_or(0);
            if record.iter().all(|f| f.is_empty()) {
                continue;
            }
            if record.len() != CATALOG_COLUMNS.len() {
                return Err(AbsorptionError::Parse {
                    row,
                    column: String::new(),
                    message: format!("expected {} fields, found {}", CATALOG_COLUMNS.len(), record.len()),
                });
            }
            let mut vals = [0.0; 7];
            for (i, field) in record.iter().enumerate() {
                vals[i] = field.parse::<f64>().map_err(|_| AbsorptionError::Parse {
                    row,
                    column: CATALOG_COLUMNS[i].to_string(),
                    message: format!("'{field}' is not a number"),
                })?;
            }
            let c = &calibration;
            let line = SpectralLine {
                mixing_ratio: vals[0] * c.q,
                intensity: vals[1] * c.s,
                resonance_hz: vals[2] * c.f_c0,
                pressure_shift_hz: vals[3] * c.delta,
                air_half_width_hz: vals[4] * c.alpha_air,
                self_half_width_hz: vals[5] * c.alpha_0,
                temperature_exponent: vals[6] * c.gamma,
            };
            line.validate().map_err(|message| AbsorptionError::Validation { row, message })?;
            lines.push(line);
        }
        Ok(Catalog { lines, calibration })
    }
}

/// Reads and parses a catalog file.
pub fn load_catalog(path: impl AsRef<Path>) -> Result<Catalog, AbsorptionError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| AbsorptionError::Io(format!("{}: {e}", path.display())))?;
    text.parse()
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AbsorptionError {
    #[error("catalog I/O: {0}")]
    Io(String),
    #[error("catalog header: {0}")]
    Header(String),
    #[error("catalog row {row}, column '{column}': {message}")]
    Parse { row: usize, column: String, message: String },
    #[error("catalog row {row}: invalid line: {message}")]
    Validation { row: usize, message: String },
    #[error("medium conditions: {0}")]
    Medium(String),
}

/// Reference subcarrier frequencies (Hz) and the absorption coefficients
/// (1/m) quoted for them.
pub const REFERENCE_FREQUENCIES_HZ: [f64; 6] = [0.85e12, 0.9e12, 0.95e12, 1.0e12, 1.05e12, 1.1e12];
pub const REFERENCE_ABSORPTION: [f64; 6] = [0.0357, 0.04, 0.0446, 0.0494, 0.0545, 0.0598];

/// Relative deviation of a catalog's k(f) from the reference list, one entry
/// per reference frequency.
pub fn reference_deviation(catalog: &Catalog, medium: &MediumConditions) -> Vec<(f64, f64, f64)> {
    REFERENCE_FREQUENCIES_HZ
        .iter()
        .zip(REFERENCE_ABSORPTION)
        .map(|(&f, k_ref)| {
            let k = catalog.absorption_coefficient(medium, f);
            (f, k, k / k_ref - 1.0)
        })
        .collect()
}

impl fmt::Display for Catalog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} line(s)", self.lines.len())
    }
}
