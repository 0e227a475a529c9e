//! Radar scenario description and the steering/geometry quantities derived
//! from it.
//!
//! Angles are radians throughout the API. Scenario files use degrees and are
//! converted on load (see [`Scenario::from_json_str`]).

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cis, from_db, CVector};

/// Propagation speed used to derive the wavelength from the carrier.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

/// Transmit and receive uniform linear arrays.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    /// Number of transmit elements.
    pub n_tx: usize,
    /// Number of receive elements.
    pub n_rx: usize,
    /// Transmit element spacing in wavelengths.
    pub d_tx: f64,
    /// Receive element spacing in wavelengths.
    pub d_rx: f64,
}

impl ArrayGeometry {
    fn validate(&self) -> Result<()> {
        if self.n_tx == 0 || self.n_rx == 0 {
            return Err(Error::InvalidScenario(
                "array element counts must be at least 1".into(),
            ));
        }
        if !(self.d_tx > 0.0 && self.d_rx > 0.0) {
            return Err(Error::InvalidScenario(
                "array spacings must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseParams {
    /// Pulses per coherent processing interval.
    pub m_pulses: usize,
    pub prf_hz: f64,
    /// Code length (samples per pulse).
    pub code_length: usize,
    pub carrier_hz: f64,
    pub wavelength_m: f64,
}

impl PulseParams {
    pub fn new(m_pulses: usize, prf_hz: f64, code_length: usize, carrier_hz: f64) -> Self {
        Self {
            m_pulses,
            prf_hz,
            code_length,
            carrier_hz,
            wavelength_m: SPEED_OF_LIGHT / carrier_hz,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.m_pulses == 0 || self.code_length == 0 {
            return Err(Error::InvalidScenario(
                "pulse count and code length must be at least 1".into(),
            ));
        }
        if !(self.prf_hz > 0.0 && self.carrier_hz > 0.0 && self.wavelength_m > 0.0) {
            return Err(Error::InvalidScenario(
                "PRF, carrier and wavelength must be positive".into(),
            ));
        }
        let expected = SPEED_OF_LIGHT / self.carrier_hz;
        if ((self.wavelength_m - expected) / expected).abs() > 1e-12 {
            return Err(Error::InvalidScenario(format!(
                "wavelength {} m inconsistent with carrier ({} m expected)",
                self.wavelength_m, expected
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetParams {
    pub doa_rad: f64,
    /// Normalized Doppler frequency in [−0.5, 0.5].
    pub normalized_doppler: f64,
    /// |α_t|², the target return power.
    pub amplitude_power: f64,
}

impl TargetParams {
    /// Doppler in radians per pulse.
    pub fn omega(&self) -> f64 {
        2.0 * PI * self.normalized_doppler
    }
}

/// Ground clutter as `2P+1` range rings of `N_c` azimuth patches each.
///
/// All rings share one azimuth grid and one per-patch power profile; the ring
/// index only enters through the fast-time shift.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClutterConfig {
    pub ring_halfwidth: usize,
    pub patches_per_ring: usize,
    /// Power of each patch, indexed by azimuth.
    pub patch_power: Vec<f64>,
    pub platform_speed_mps: f64,
    pub azimuth_grid_rad: Vec<f64>,
}

impl ClutterConfig {
    /// Uniform patch power on an evenly spaced grid covering [−90°, 90°]
    /// inclusive.
    pub fn uniform(ring_halfwidth: usize, patches: usize, power: f64, speed_mps: f64) -> Self {
        Self {
            ring_halfwidth,
            patches_per_ring: patches,
            patch_power: vec![power; patches],
            platform_speed_mps: speed_mps,
            azimuth_grid_rad: azimuth_grid(patches),
        }
    }

    pub fn ring_count(&self) -> usize {
        2 * self.ring_halfwidth + 1
    }

    /// Ring offsets `−P..=P`.
    pub fn rings(&self) -> impl Iterator<Item = isize> + Clone {
        let p = self.ring_halfwidth as isize;
        -p..=p
    }

    /// True when no patch carries power.
    pub fn is_silent(&self) -> bool {
        self.patch_power.iter().all(|&p| p == 0.0)
    }

    fn validate(&self) -> Result<()> {
        if self.patches_per_ring == 0 {
            return Err(Error::InvalidScenario(
                "patches_per_ring must be positive".into(),
            ));
        }
        if self.azimuth_grid_rad.len() != self.patches_per_ring
            || self.patch_power.len() != self.patches_per_ring
        {
            return Err(Error::InvalidScenario(
                "clutter azimuth grid and power profile must have patches_per_ring entries".into(),
            ));
        }
        if self.azimuth_grid_rad.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidScenario(
                "clutter azimuth grid must be strictly increasing".into(),
            ));
        }
        if self
            .patch_power
            .iter()
            .any(|&p| !(p >= 0.0) || !p.is_finite())
        {
            return Err(Error::InvalidScenario(
                "patch powers must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// `n` points evenly spaced on [−π/2, π/2], endpoints included.
pub fn azimuth_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n)
            .map(|k| -PI / 2.0 + PI * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Jammer {
    pub doa_rad: f64,
    pub power: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct JammerConfig {
    pub jammers: Vec<Jammer>,
}

/// Parameters recorded for documentation only; they do not enter any
/// computation since elevation is not modeled.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScenarioNotes {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub platform_height_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_range_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidth_hz: Option<f64>,
}

/// Problem sizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dims {
    pub n_tx: usize,
    pub n_rx: usize,
    pub code_length: usize,
    pub pulses: usize,
}

impl Dims {
    /// `L·N_T`, the length of the stacked waveform `s`.
    pub fn tx_len(&self) -> usize {
        self.code_length * self.n_tx
    }

    /// `L·M·N_R`, the length of a stacked snapshot and of the receive filter.
    pub fn rx_len(&self) -> usize {
        self.code_length * self.pulses * self.n_rx
    }

    /// `M·N_T·N_R`, the order of the clutter spectral tables.
    pub fn spectral_len(&self) -> usize {
        self.pulses * self.n_tx * self.n_rx
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub geometry: ArrayGeometry,
    pub pulses: PulseParams,
    pub target: TargetParams,
    pub clutter: ClutterConfig,
    pub jammers: JammerConfig,
    pub noise_power: f64,
    /// Total transmit energy `e_t = sᴴs`.
    pub total_energy: f64,
    #[serde(default)]
    pub notes: ScenarioNotes,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.pulses.validate()?;
        self.clutter.validate()?;
        if !(self.target.normalized_doppler.abs() <= 0.5) {
            return Err(Error::InvalidScenario(
                "target normalized Doppler must lie in [-0.5, 0.5]".into(),
            ));
        }
        if !(self.target.amplitude_power >= 0.0) {
            return Err(Error::InvalidScenario(
                "target power must be non-negative".into(),
            ));
        }
        if self.jammers.jammers.iter().any(|j| !(j.power >= 0.0)) {
            return Err(Error::InvalidScenario(
                "jammer powers must be non-negative".into(),
            ));
        }
        if !(self.noise_power > 0.0) {
            return Err(Error::InvalidScenario(
                "noise power must be positive".into(),
            ));
        }
        if !(self.total_energy > 0.0) {
            return Err(Error::InvalidScenario(
                "total energy must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn dims(&self) -> Dims {
        Dims {
            n_tx: self.geometry.n_tx,
            n_rx: self.geometry.n_rx,
            code_length: self.pulses.code_length,
            pulses: self.pulses.m_pulses,
        }
    }

    /// Per-sample power `p_s = e_t / (L·N_T)`.
    pub fn symbol_power(&self) -> f64 {
        self.total_energy / self.dims().tx_len() as f64
    }

    pub fn with_target_doppler(&self, normalized_doppler: f64) -> Self {
        let mut s = self.clone();
        s.target.normalized_doppler = normalized_doppler;
        s
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: ScenarioFile = serde_json::from_str(text)?;
        file.into_scenario()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }
}

/// `exp(j·2π·n·d·sin θ / λ)` for `n = 0..count`, with the spacing `d`
/// given in wavelengths.
fn ula_steering(count: usize, spacing_wavelengths: f64, wavelength: f64, theta: f64) -> CVector {
    let spacing_m = spacing_wavelengths * wavelength;
    let step = 2.0 * PI * spacing_m * theta.sin() / wavelength;
    CVector::from_fn(count, |n, _| cis(step * n as f64))
}

/// Transmit array steering vector `a_T(θ)`.
pub fn steering_tx(geometry: &ArrayGeometry, wavelength: f64, theta: f64) -> CVector {
    ula_steering(geometry.n_tx, geometry.d_tx, wavelength, theta)
}

/// Receive array steering vector `a_R(θ)`.
pub fn steering_rx(geometry: &ArrayGeometry, wavelength: f64, theta: f64) -> CVector {
    ula_steering(geometry.n_rx, geometry.d_rx, wavelength, theta)
}

/// Temporal steering vector `d(ω) = [1, e^{jω}, …, e^{j(M−1)ω}]`.
pub fn temporal_steering(m_pulses: usize, omega: f64) -> CVector {
    CVector::from_fn(m_pulses, |m, _| cis(omega * m as f64))
}

/// Clutter Doppler (radians per pulse) for a platform velocity aligned with
/// the array axis.
pub fn clutter_doppler(clutter: &ClutterConfig, pulses: &PulseParams, theta: f64) -> f64 {
    4.0 * PI * clutter.platform_speed_mps * theta.sin() / (pulses.prf_hz * pulses.wavelength_m)
}

/// One clutter patch: ring `p`, azimuth index `k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClutterPatch {
    pub ring: isize,
    pub index: usize,
    pub power: f64,
    pub azimuth_rad: f64,
    pub doppler_rad: f64,
}

/// All `(2P+1)·N_c` patches, ring-major then azimuth.
pub fn enumerate_clutter_patches(scenario: &Scenario) -> Vec<ClutterPatch> {
    let clutter = &scenario.clutter;
    let mut out = Vec::with_capacity(clutter.ring_count() * clutter.patches_per_ring);
    for ring in clutter.rings() {
        for (index, (&azimuth_rad, &power)) in clutter
            .azimuth_grid_rad
            .iter()
            .zip(&clutter.patch_power)
            .enumerate()
        {
            out.push(ClutterPatch {
                ring,
                index,
                power,
                azimuth_rad,
                doppler_rad: clutter_doppler(clutter, &scenario.pulses, azimuth_rad),
            });
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Scenario file format (angles in degrees).

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PulseFile {
    m_pulses: usize,
    prf_hz: f64,
    code_length: usize,
    carrier_hz: f64,
    #[serde(default)]
    bandwidth_hz: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetFile {
    doa_deg: f64,
    normalized_doppler: f64,
    #[serde(default = "one")]
    amplitude_power: f64,
    #[serde(default)]
    range_m: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ClutterFile {
    ring_halfwidth: usize,
    patches_per_ring: usize,
    /// Either a single value applied to every patch or one value per patch.
    #[serde(default = "uniform_one")]
    patch_power: PatchPower,
    platform_speed_mps: f64,
    #[serde(default)]
    platform_height_m: Option<f64>,
    #[serde(default)]
    azimuth_grid_deg: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PatchPower {
    Uniform(f64),
    PerPatch(Vec<f64>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JammerFile {
    doa_deg: f64,
    #[serde(default)]
    power: Option<f64>,
    /// Jammer-to-noise ratio, converted with the scenario noise power.
    #[serde(default)]
    jnr_db: Option<f64>,
}

#[derive(Deserialize)]
struct ScenarioFile {
    geometry: ArrayGeometry,
    pulses: PulseFile,
    target: TargetFile,
    clutter: ClutterFile,
    #[serde(default)]
    jammers: Vec<JammerFile>,
    noise_power: f64,
    total_energy: f64,
}

fn one() -> f64 {
    1.0
}

fn uniform_one() -> PatchPower {
    PatchPower::Uniform(1.0)
}

impl ScenarioFile {
    fn into_scenario(self) -> Result<Scenario> {
        let c = self.clutter;
        let grid = match c.azimuth_grid_deg {
            Some(deg) => deg.into_iter().map(f64::to_radians).collect(),
            None => azimuth_grid(c.patches_per_ring),
        };
        let patch_power = match c.patch_power {
            PatchPower::Uniform(p) => vec![p; c.patches_per_ring],
            PatchPower::PerPatch(v) => v,
        };
        let jammers = self
            .jammers
            .into_iter()
            .map(|j| {
                let power = match (j.power, j.jnr_db) {
                    (Some(p), None) => p,
                    (None, Some(db)) => self.noise_power * from_db(db),
                    _ => {
                        return Err(Error::InvalidScenario(
                            "each jammer needs exactly one of `power` or `jnr_db`".into(),
                        ))
                    }
                };
                Ok(Jammer {
                    doa_rad: j.doa_deg.to_radians(),
                    power,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let scenario = Scenario {
            geometry: self.geometry,
            pulses: PulseParams::new(
                self.pulses.m_pulses,
                self.pulses.prf_hz,
                self.pulses.code_length,
                self.pulses.carrier_hz,
            ),
            target: TargetParams {
                doa_rad: self.target.doa_deg.to_radians(),
                normalized_doppler: self.target.normalized_doppler,
                amplitude_power: self.target.amplitude_power,
            },
            clutter: ClutterConfig {
                ring_halfwidth: c.ring_halfwidth,
                patches_per_ring: c.patches_per_ring,
                patch_power,
                platform_speed_mps: c.platform_speed_mps,
                azimuth_grid_rad: grid,
            },
            jammers: JammerConfig { jammers },
            noise_power: self.noise_power,
            total_energy: self.total_energy,
            notes: ScenarioNotes {
                platform_height_m: c.platform_height_m,
                target_range_m: self.target.range_m,
                bandwidth_hz: self.pulses.bandwidth_hz,
            },
        };
        scenario.validate()?;
        Ok(scenario)
    }
}
