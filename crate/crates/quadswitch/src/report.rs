//! Monitor verdicts for a finished run.

use quadswitch_core::dynamics::theta_star_oracle;
use quadswitch_core::monitor::{
    envelope_monitor, error_dynamics_residual, estimate_delta1, gain_freeze_check, lyapunov_jump_monitor, rms_errors,
    ultimate_bound, uub_verdict, BoundInputs, EnvelopeReport, GainFreezeReport, JumpCheck, UltimateBound, UubVerdict,
};
use quadswitch_core::sim::{Scenario, SimTrace};
use quadswitch_core::switching::{adt_threshold_for_modes, AdtCertificate, AdtThreshold};
use quadswitch_core::{Error, Matrix8, Vector4};

/// Errors before this time count as transient.
pub const TRANSIENT: f64 = 20.0;
/// Tolerance for gains that must not move.
pub const FREEZE_TOL: f64 = 1e-12;
/// Tolerance for the closed-loop error identity.
pub const RESIDUAL_TOL: f64 = 1e-6;
/// Hold time before the Lyapunov level counts as entered.
pub const ENTRY_HOLD: f64 = 1.0;

/// `Theta*` for every mode from true parameters.
pub fn theta_star_list(scenario: &Scenario) -> Result<Vec<Vector4>, Error> {
    let bounds = (
        scenario.trajectory.velocity_bound(),
        scenario.trajectory.acceleration_bound(),
    );
    scenario
        .subsystems
        .iter()
        .zip(&scenario.modes)
        .map(|(params, mode)| theta_star_oracle(params, &mode.d_gain, bounds, params.disturbance.bound()))
        .collect()
}

#[derive(Debug, Clone)]
pub struct Report {
    pub threshold: AdtThreshold,
    pub certificate: AdtCertificate,
    pub theta_star: Vec<Vector4>,
    pub jumps: Vec<JumpCheck>,
    pub envelope: EnvelopeReport,
    pub freeze: GainFreezeReport,
    pub residual: f64,
    pub delta1: f64,
    pub bound: UltimateBound,
    pub uub: UubVerdict,
    /// Whole-run RMS error; attitude in degrees.
    pub rms_full: Vector4,
    /// RMS after [`TRANSIENT`], when the run is long enough.
    pub rms_settled: Option<Vector4>,
    /// Largest `|e|` after [`TRANSIENT`]; attitude in degrees.
    pub max_settled: Option<Vector4>,
}

impl Report {
    pub fn jumps_pass(&self) -> bool {
        self.jumps.iter().all(|j| j.pass)
    }

    pub fn freeze_pass(&self) -> bool {
        self.freeze.active_gamma_drift <= FREEZE_TOL
            && self.freeze.inactive_drift <= FREEZE_TOL
            && self.freeze.intervals_with_adaptation == self.freeze.intervals
    }

    pub fn residual_pass(&self) -> bool {
        self.residual < RESIDUAL_TOL
    }

    pub fn all_pass(&self) -> bool {
        self.jumps_pass() && self.freeze_pass() && self.residual_pass() && self.envelope.holds() && self.uub.pass
    }
}

pub fn analyse(scenario: &Scenario, kappa_fraction: f64, trace: &SimTrace) -> Result<Report, Error> {
    let threshold = adt_threshold_for_modes(&trace.modes, kappa_fraction)?;
    let certificate = trace.schedule.certify()?;
    let theta_star = theta_star_list(scenario)?;
    let p_list: Vec<Matrix8> = trace.modes.iter().map(|m| m.p).collect();
    let delta1 = estimate_delta1(trace);
    let bound = ultimate_bound(
        &trace.modes,
        &BoundInputs {
            theta_star: theta_star.clone(),
            initial_gains: scenario.initial_gains.clone(),
            kappa: threshold.kappa,
            chatter_bound: trace.schedule.adt.map_or(1.0, |a| a.chatter_bound),
            varpi: trace.varpi,
            delta1,
        },
    )?;
    let end = trace.last().map_or(0.0, |r| r.t);
    let settled = end > TRANSIENT;
    let deg = Vector4::new(
        1.0,
        180.0 / std::f64::consts::PI,
        180.0 / std::f64::consts::PI,
        180.0 / std::f64::consts::PI,
    );
    let max_settled = settled.then(|| {
        trace
            .records
            .iter()
            .filter(|r| r.t > TRANSIENT)
            .fold(Vector4::zeros(), |acc, r| acc.sup(&r.e().component_mul(&deg).abs()))
    });
    Ok(Report {
        jumps: lyapunov_jump_monitor(trace, &p_list),
        envelope: envelope_monitor(trace, &theta_star),
        freeze: gain_freeze_check(trace),
        residual: error_dynamics_residual(trace),
        uub: uub_verdict(trace, &bound, ENTRY_HOLD),
        rms_full: rms_errors(trace, 0.0, end)?,
        rms_settled: if settled {
            Some(rms_errors(trace, TRANSIENT, end)?)
        } else {
            None
        },
        max_settled,
        threshold,
        certificate,
        theta_star,
        delta1,
        bound,
    })
}
