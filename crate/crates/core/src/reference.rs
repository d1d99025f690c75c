//! The three-mode payload-lifting scenario.
//!
//! Mode 0 is the bare vehicle, modes 1 and 2 carry growing payloads. The
//! vehicle starts on the ground and tracks `z_d = 2 + sin(0.1 t)` with zero
//! attitude while the payload changes on a fixed, ADT-certified schedule.

use alloc::vec;
use alloc::vec::Vec;

use crate::controller::{AdaptiveGains, ModeConfig};
use crate::disturbance::{DisturbanceSpec, DisturbanceTerm};
use crate::dynamics::{PlantState, SubsystemParams};
use crate::sim::Scenario;
use crate::switching::{AdtParams, SwitchEvent, SwitchSchedule};
use crate::trajectory::{ChannelTrajectory, DesiredTrajectory};
use crate::{Vector2, Vector4};

/// `(m, Ixx, Iyy, Izz)` per mode.
pub const MASS_PROPERTIES: [(f64, f64, f64, f64); 3] = [
    (1.5, 1.69e-5, 1.69e-5, 3.38e-5),
    (1.6, 0.011, 0.010, 1.27e-4),
    (1.7, 0.032, 0.030, 2.20e-4),
];

/// `(K1, K2)` scalar gains per mode.
pub const GAINS: [(f64, f64); 3] = [(120.0, 100.0), (150.0, 120.0), (200.0, 140.0)];

pub const Q_SCALE: f64 = 2.0;
pub const KAPPA_FRACTION: f64 = 0.9;
pub const ARM_LENGTH: f64 = 0.169;
pub const ALPHA: f64 = 0.6;
pub const EPS: f64 = 0.005;
pub const VARPI: f64 = 0.1;
pub const VARTHETA: f64 = 7.0;
pub const CHATTER_BOUND: f64 = 3.0;
pub const HORIZON: f64 = 100.0;
pub const STEP: f64 = 1e-3;
/// Yaw-channel gust height (N m).
pub const PULSE_AMPLITUDE: f64 = 5e-4;

/// `(time, mode)` pairs; three quick switches, then long dwells.
pub const SCHEDULE: [(f64, usize); 8] = [
    (0.0, 0),
    (4.0, 1),
    (7.0, 2),
    (10.0, 0),
    (28.0, 1),
    (46.0, 2),
    (64.0, 1),
    (82.0, 0),
];

pub fn d_gain() -> Vector4 {
    Vector4::new(2.0, 1e-4, 1e-4, 1e-4)
}

pub fn disturbance() -> DisturbanceSpec {
    DisturbanceSpec::none()
        .with_term(
            0,
            DisturbanceTerm::Sinusoid {
                amplitude: 0.05,
                frequency: 0.5,
                phase: 0.0,
            },
        )
        .with_term(
            3,
            DisturbanceTerm::PulseTrain {
                amplitude: PULSE_AMPLITUDE,
                start: 20.0,
                width: 2.0,
                period: Some(40.0),
                count: Some(2),
            },
        )
}

pub fn subsystems() -> Vec<SubsystemParams> {
    MASS_PROPERTIES
        .iter()
        .map(|&(m, ixx, iyy, izz)| {
            SubsystemParams::new(m, ixx, iyy, izz, ARM_LENGTH)
                .expect("reference parameters are valid")
                .with_disturbance(disturbance())
        })
        .collect()
}

pub fn mode_configs() -> Vec<ModeConfig> {
    GAINS
        .iter()
        .map(|&(k1, k2)| ModeConfig::uniform(k1, k2, Q_SCALE, d_gain(), ALPHA, EPS, EPS))
        .collect()
}

pub fn initial_gains() -> AdaptiveGains {
    AdaptiveGains::new(Vector4::new(1.2, 1.3, 1.4, 1.5), 1.0, 1.0)
}

pub fn schedule() -> SwitchSchedule {
    SwitchSchedule::new(
        0.0,
        HORIZON,
        SCHEDULE
            .iter()
            .map(|&(time, mode)| SwitchEvent { time, mode })
            .collect(),
        Some(AdtParams {
            vartheta: VARTHETA,
            chatter_bound: CHATTER_BOUND,
        }),
    )
    .expect("reference schedule is well formed")
}

pub fn trajectory() -> DesiredTrajectory {
    DesiredTrajectory {
        channels: [
            ChannelTrajectory::sinusoid(2.0, 1.0, 0.1, 0.0),
            ChannelTrajectory::default(),
            ChannelTrajectory::default(),
            ChannelTrajectory::default(),
        ],
    }
}

pub fn initial_state() -> PlantState {
    PlantState::at_rest(Vector4::new(0.0, 0.1, 0.1, 0.1), Vector2::new(0.1, 0.1))
}

pub fn scenario() -> Scenario {
    Scenario {
        subsystems: subsystems(),
        modes: mode_configs(),
        initial_gains: vec![initial_gains(); 3],
        varpi: VARPI,
        schedule: schedule(),
        trajectory: trajectory(),
        initial_state: initial_state(),
        step: STEP,
        horizon: HORIZON,
    }
}
