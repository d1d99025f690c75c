//! Fixed-step closed-loop simulation.
//!
//! The plant (12 states) and every mode's adaptive gains (6 per mode) form one
//! augmented ODE integrated with classical RK4. Within a step:
//!
//! - the active mode is fixed (switches are snapped to the grid and act at the
//!   start of a step),
//! - the acceleration feedback `q_bar_ddot` is the previous step's stage-1
//!   acceleration,
//! - pulse disturbances are sampled once at the step midpoint; smooth terms are
//!   evaluated at each stage time.
//!
//! After each step `theta_hat` is floored at zero.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::fmt;

use crate::controller::{
    adaptive_derivatives_into, control_tau, delta_tau, filtered_error, gain_rho, regressor, AdaptiveGains,
    ControllerMode, GainRates, ModeConfig, GAINS_PER_MODE,
};
use crate::dynamics::{lumped_uncertainty, plant_accels, Accelerations, PlantState, SubsystemParams};
use crate::switching::SwitchSchedule;
use crate::trajectory::{Desired, DesiredTrajectory};
use crate::{Error, Result, Vector2, Vector4, Vector6, Vector8};

const PLANT_STATES: usize = 12;

/// Everything needed for one closed-loop run.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub subsystems: Vec<SubsystemParams>,
    pub modes: Vec<ModeConfig>,
    pub initial_gains: Vec<AdaptiveGains>,
    /// Boundary-layer width shared by all modes.
    pub varpi: f64,
    pub schedule: SwitchSchedule,
    pub trajectory: DesiredTrajectory,
    pub initial_state: PlantState,
    pub step: f64,
    pub horizon: f64,
}

impl Scenario {
    /// Number of integration steps.
    pub fn steps(&self) -> usize {
        libm::round(self.horizon / self.step) as usize
    }

    /// Synthesises every mode and checks the whole scenario.
    pub fn prepare(&self) -> Result<Vec<ControllerMode>> {
        let n = self.modes.len();
        if n == 0 {
            return Err(Error::InvalidParameter {
                name: "modes",
                reason: "at least one mode is required",
            });
        }
        if self.subsystems.len() != n {
            return Err(Error::DimensionMismatch {
                what: "subsystems",
                expected: n,
                found: self.subsystems.len(),
            });
        }
        if self.initial_gains.len() != n {
            return Err(Error::DimensionMismatch {
                what: "initial gains",
                expected: n,
                found: self.initial_gains.len(),
            });
        }
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::InvalidParameter {
                name: "step",
                reason: "must be finite and positive",
            });
        }
        if !(self.horizon.is_finite() && self.horizon >= self.step) {
            return Err(Error::InvalidParameter {
                name: "horizon",
                reason: "must be finite and at least one step",
            });
        }
        if libm::fabs(self.steps() as f64 * self.step - self.horizon) > 1e-9 * self.horizon {
            return Err(Error::InvalidParameter {
                name: "horizon",
                reason: "must be a whole number of steps",
            });
        }
        if !(self.varpi.is_finite() && self.varpi > 0.0) {
            return Err(Error::InvalidParameter {
                name: "varpi",
                reason: "must be finite and positive",
            });
        }
        self.schedule.validate()?;
        if self.schedule.start != 0.0 || self.schedule.end < self.horizon {
            return Err(Error::InvalidSchedule("schedule must cover [0, horizon]"));
        }
        if self.schedule.mode_count() > n {
            return Err(Error::ModeOutOfRange {
                index: self.schedule.mode_count() - 1,
                modes: n,
            });
        }
        self.schedule.certify()?;
        self.trajectory.validate()?;
        self.initial_state.check()?;
        for params in &self.subsystems {
            params.validate()?;
        }
        let mut synthesized = Vec::with_capacity(n);
        for (i, (cfg, gains)) in self.modes.iter().zip(&self.initial_gains).enumerate() {
            let mode = ControllerMode::synthesize(*cfg)?;
            mode.check_leakage(i)?;
            gains.check_initial(cfg)?;
            synthesized.push(mode);
        }
        Ok(synthesized)
    }
}

/// One logged grid point, evaluated at the start of the step.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub t: f64,
    /// Active mode (zero-based).
    pub sigma: usize,
    /// Plant state; `q_ddot_bar` holds the feedback accelerations in use.
    pub state: PlantState,
    pub desired: Desired,
    pub xi: Vector8,
    pub r: Vector4,
    pub tau: Vector4,
    pub delta_tau: Vector4,
    pub rho: f64,
    pub disturbance: Vector4,
    /// True accelerations produced by `tau` at this instant.
    pub accel: Accelerations,
    /// `chi = -D^{-1} E` from true parameters.
    pub chi: Vector4,
    pub gains: Vec<AdaptiveGains>,
    /// `0.5 xi^T P_sigma xi`.
    pub v_quad: f64,
}

impl TraceRecord {
    pub fn e(&self) -> Vector4 {
        self.xi.fixed_rows::<4>(0).into_owned()
    }

    pub fn e_dot(&self) -> Vector4 {
        self.xi.fixed_rows::<4>(4).into_owned()
    }
}

/// Uniform-grid log of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub step: f64,
    pub varpi: f64,
    /// The schedule after snapping to the grid.
    pub schedule: SwitchSchedule,
    pub modes: Vec<ControllerMode>,
    pub records: Vec<TraceRecord>,
}

impl SimTrace {
    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    /// Record indices at which the active mode changes.
    pub fn switch_indices(&self) -> Vec<usize> {
        (1..self.records.len())
            .filter(|&k| self.records[k].sigma != self.records[k - 1].sigma)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SimError {
    /// The scenario was rejected before integration.
    Setup(Error),
    /// Integration stopped; `trace` holds every record logged before `time`.
    Abort {
        time: f64,
        cause: Error,
        trace: Box<SimTrace>,
    },
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::Setup(e) => write!(f, "scenario rejected: {e}"),
            SimError::Abort { time, cause, .. } => write!(f, "simulation aborted at t = {time}: {cause}"),
        }
    }
}

impl core::error::Error for SimError {}

impl From<Error> for SimError {
    fn from(e: Error) -> Self {
        SimError::Setup(e)
    }
}

fn unpack(y: &[f64], q_ddot_bar: Vector6) -> PlantState {
    PlantState {
        q: Vector4::new(y[0], y[1], y[2], y[3]),
        q_u: Vector2::new(y[4], y[5]),
        q_dot: Vector4::new(y[6], y[7], y[8], y[9]),
        q_u_dot: Vector2::new(y[10], y[11]),
        q_ddot_bar,
    }
}

fn pack(state: &PlantState, gains: &[AdaptiveGains], y: &mut [f64]) {
    y[0..4].copy_from_slice(state.q.as_slice());
    y[4..6].copy_from_slice(state.q_u.as_slice());
    y[6..10].copy_from_slice(state.q_dot.as_slice());
    y[10..12].copy_from_slice(state.q_u_dot.as_slice());
    for (i, g) in gains.iter().enumerate() {
        let at = PLANT_STATES + i * GAINS_PER_MODE;
        y[at..at + GAINS_PER_MODE].copy_from_slice(&g.to_array());
    }
}

fn gains_of(y: &[f64], modes: usize) -> Vec<AdaptiveGains> {
    (0..modes)
        .map(|i| {
            let at = PLANT_STATES + i * GAINS_PER_MODE;
            AdaptiveGains::from_slice(&y[at..at + GAINS_PER_MODE])
        })
        .collect()
}

struct Stage {
    state: PlantState,
    desired: Desired,
    xi: Vector8,
    r: Vector4,
    tau: Vector4,
    delta: Vector4,
    rho: f64,
    d: Vector4,
    accel: Accelerations,
    gains: Vec<AdaptiveGains>,
}

struct Engine<'a> {
    scenario: &'a Scenario,
    modes: &'a [ControllerMode],
    rates: Vec<GainRates>,
}

impl Engine<'_> {
    /// Closed-loop derivative at `(t, y)` with mode `p` active.
    fn derivative(
        &mut self,
        t: f64,
        y: &[f64],
        p: usize,
        feedback: &Vector6,
        pulse_t: f64,
        dy: &mut [f64],
    ) -> Result<Stage> {
        let sc = self.scenario;
        let mode = &self.modes[p];
        let state = unpack(y, *feedback);
        let desired = sc.trajectory.eval(t);
        let e = state.q - desired.q;
        let e_dot = state.q_dot - desired.q_dot;
        let mut xi = Vector8::zeros();
        xi.fixed_rows_mut::<4>(0).copy_from(&e);
        xi.fixed_rows_mut::<4>(4).copy_from(&e_dot);
        let r = filtered_error(&mode.p, &xi);
        let gains = gains_of(y, self.modes.len());
        let rho = gain_rho(&gains[p], &regressor(&xi, feedback));
        let delta = delta_tau(rho, &r, sc.varpi);
        let tau = control_tau(mode, &xi, &delta, &desired.q_ddot);
        let params = &sc.subsystems[p];
        let d = params.disturbance.eval_sampled(t, pulse_t);
        let accel = plant_accels(&state, &tau, params, &d)?;

        dy[0..4].copy_from_slice(state.q_dot.as_slice());
        dy[4..6].copy_from_slice(state.q_u_dot.as_slice());
        let qdd = accel.q_ddot();
        dy[6..10].copy_from_slice(qdd.as_slice());
        dy[10..12].copy_from_slice(accel.q_u_ddot().as_slice());
        adaptive_derivatives_into(self.modes, &gains, p, &r, &xi, feedback, &mut self.rates)?;
        for (i, rate) in self.rates.iter().enumerate() {
            let at = PLANT_STATES + i * GAINS_PER_MODE;
            dy[at..at + 4].copy_from_slice(rate.theta_hat.as_slice());
            dy[at + 4] = rate.zeta;
            dy[at + 5] = rate.gamma;
        }
        Ok(Stage {
            state,
            desired,
            xi,
            r,
            tau,
            delta,
            rho,
            d,
            accel,
            gains,
        })
    }

    fn record(&self, t: f64, p: usize, stage: Stage) -> Result<TraceRecord> {
        let params = &self.scenario.subsystems[p];
        let mode = &self.modes[p];
        let chi = lumped_uncertainty(&stage.state, &stage.accel, params, &stage.d, &mode.config.d_gain)?;
        Ok(TraceRecord {
            t,
            sigma: p,
            state: stage.state,
            desired: stage.desired,
            xi: stage.xi,
            r: stage.r,
            tau: stage.tau,
            delta_tau: stage.delta,
            rho: stage.rho,
            disturbance: stage.d,
            accel: stage.accel,
            chi,
            gains: stage.gains,
            v_quad: mode.quadratic_lyapunov(&stage.xi),
        })
    }
}

/// Runs the scenario over `[0, horizon]`, logging every grid point.
pub fn simulate(scenario: &Scenario) -> core::result::Result<SimTrace, SimError> {
    let modes = scenario.prepare()?;
    let h = scenario.step;
    let n = scenario.steps();
    let schedule = scenario.schedule.snapped(h)?;
    let mut mode_by_step = schedule.step_indices(h);
    mode_by_step.retain(|&(k, _)| k <= n);

    let dim = PLANT_STATES + GAINS_PER_MODE * modes.len();
    let mut y = alloc::vec![0.0; dim];
    pack(&scenario.initial_state, &scenario.initial_gains, &mut y);
    let mut feedback = scenario.initial_state.q_ddot_bar;
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
        alloc::vec![0.0; dim],
        alloc::vec![0.0; dim],
        alloc::vec![0.0; dim],
        alloc::vec![0.0; dim],
        alloc::vec![0.0; dim],
    );

    let mut engine = Engine {
        scenario,
        modes: &modes,
        rates: alloc::vec![GainRates::default(); modes.len()],
    };
    let mut trace = SimTrace {
        step: h,
        varpi: scenario.varpi,
        schedule: schedule.clone(),
        modes: modes.clone(),
        records: Vec::with_capacity(n + 1),
    };
    let abort = |trace: SimTrace, time: f64, cause: Error| SimError::Abort {
        time,
        cause,
        trace: Box::new(trace),
    };

    let mut next_event = 0usize;
    let mut p = schedule.initial_mode();
    for k in 0..=n {
        while next_event < mode_by_step.len() && mode_by_step[next_event].0 <= k {
            p = mode_by_step[next_event].1;
            next_event += 1;
        }
        let t = k as f64 * h;
        let pulse_t = t + 0.5 * h;
        let stage = match engine.derivative(t, &y, p, &feedback, pulse_t, &mut k1) {
            Ok(s) => s,
            Err(e) => return Err(abort(trace, t, e)),
        };
        let stage_accel = stage.accel.q_bar_ddot();
        match engine.record(t, p, stage) {
            Ok(rec) => trace.records.push(rec),
            Err(e) => return Err(abort(trace, t, e)),
        }
        if k == n {
            break;
        }

        let stages = (|| -> Result<()> {
            for i in 0..dim {
                tmp[i] = y[i] + 0.5 * h * k1[i];
            }
            engine.derivative(t + 0.5 * h, &tmp, p, &feedback, pulse_t, &mut k2)?;
            for i in 0..dim {
                tmp[i] = y[i] + 0.5 * h * k2[i];
            }
            engine.derivative(t + 0.5 * h, &tmp, p, &feedback, pulse_t, &mut k3)?;
            for i in 0..dim {
                tmp[i] = y[i] + h * k3[i];
            }
            engine.derivative(t + h, &tmp, p, &feedback, pulse_t, &mut k4)?;
            Ok(())
        })();
        if let Err(e) = stages {
            return Err(abort(trace, t + h, e));
        }
        for i in 0..dim {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        for m in 0..modes.len() {
            let at = PLANT_STATES + m * GAINS_PER_MODE;
            for v in &mut y[at..at + 4] {
                *v = v.max(0.0);
            }
        }
        feedback = stage_accel;
        if let Err(e) = unpack(&y, feedback).check() {
            return Err(abort(trace, t + h, e));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(abort(trace, t + h, Error::NonFinite("adaptive gains")));
        }
    }
    Ok(trace)
}
