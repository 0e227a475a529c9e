//! Ready-made scenarios.

use crate::linalg::from_db;
use crate::model::{
    ArrayGeometry, ClutterConfig, Jammer, JammerConfig, PulseParams, Scenario, ScenarioNotes,
    TargetParams,
};

/// Airborne side-looking reference scenario: 4×4 arrays (2λ transmit, λ/2
/// receive spacing), L = 13, M = 16, three clutter rings of 361 patches and
/// a 35 dB jammer at 30°.
pub fn fig1() -> Scenario {
    Scenario {
        geometry: ArrayGeometry {
            n_tx: 4,
            n_rx: 4,
            d_tx: 2.0,
            d_rx: 0.5,
        },
        pulses: PulseParams::new(16, 1000.0, 13, 1e9),
        target: TargetParams {
            doa_rad: 0.0,
            normalized_doppler: 0.2,
            amplitude_power: 1.0,
        },
        clutter: ClutterConfig::uniform(1, 361, 1.0, 150.0),
        jammers: JammerConfig {
            jammers: vec![Jammer {
                doa_rad: 30f64.to_radians(),
                power: from_db(35.0),
            }],
        },
        noise_power: 1.0,
        total_energy: 1.0,
        notes: ScenarioNotes {
            platform_height_m: Some(9000.0),
            target_range_m: None,
            bandwidth_hz: Some(1e6),
        },
    }
}

/// Same sizes as [`fig1`] with white noise only.
pub fn noise_only() -> Scenario {
    let mut s = fig1();
    s.clutter = ClutterConfig::uniform(0, 1, 0.0, 150.0);
    s.jammers = JammerConfig::default();
    s
}

/// A scenario of arbitrary size with uniform unit clutter, no jammer and the
/// reference platform kinematics.
pub fn small(
    n_tx: usize,
    n_rx: usize,
    code_length: usize,
    pulses: usize,
    rings: usize,
    patches: usize,
) -> Scenario {
    let mut s = fig1();
    s.geometry.n_tx = n_tx;
    s.geometry.n_rx = n_rx;
    s.pulses = PulseParams::new(pulses, 1000.0, code_length, 1e9);
    s.clutter = ClutterConfig::uniform(rings, patches, 1.0, 150.0);
    s.jammers = JammerConfig::default();
    s
}

/// Two transmitters, two receivers, L = 3, M = 2: 64 binary waveforms.
pub fn tiny() -> Scenario {
    let mut s = small(2, 2, 3, 2, 1, 9);
    s.target.normalized_doppler = 0.25;
    s.jammers.jammers.push(Jammer {
        doa_rad: 30f64.to_radians(),
        power: 10.0,
    });
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for s in [fig1(), noise_only(), small(2, 2, 4, 3, 1, 16), tiny()] {
            s.validate().unwrap();
        }
    }

    #[test]
    fn fig1_sizes() {
        let d = fig1().dims();
        assert_eq!((d.tx_len(), d.rx_len(), d.spectral_len()), (52, 832, 256));
        assert!((fig1().jammers.jammers[0].power - 3162.2776601683795).abs() < 1e-9);
    }
}
