//! Post-run checks of a [`SimTrace`] against the stability argument.
//!
//! Everything here reads a finished trace; none of it feeds back into the
//! controller. The envelope and bound checks need the true parameters.

use alloc::vec::Vec;

use crate::controller::{regressor, AdaptiveGains, ControllerMode};
use crate::sim::SimTrace;
use crate::{Error, Matrix8, Result, Vector4};

/// One evaluation of `V+ <= mu V-` at a switch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpCheck {
    pub time: f64,
    pub from: usize,
    pub to: usize,
    pub v_minus: f64,
    pub v_plus: f64,
    /// `mu * V-`.
    pub bound: f64,
    pub pass: bool,
}

/// `max lambda_max(P) / min lambda_min(P)`.
pub fn jump_factor(p_list: &[Matrix8]) -> f64 {
    let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
    for p in p_list {
        let e = p.symmetric_eigenvalues();
        hi = hi.max(e.max());
        lo = lo.min(e.min());
    }
    hi / lo
}

/// Checks `0.5 xi^T P_new xi <= mu * 0.5 xi^T P_old xi` at every switch.
///
/// `xi` is continuous across a switch, so the record at the switch instant
/// supplies both sides. A relative slack of `1e-9` absorbs rounding.
pub fn lyapunov_jump_monitor(trace: &SimTrace, p_list: &[Matrix8]) -> Vec<JumpCheck> {
    let mu = jump_factor(p_list);
    trace
        .switch_indices()
        .into_iter()
        .map(|k| {
            let rec = &trace.records[k];
            let from = trace.records[k - 1].sigma;
            let to = rec.sigma;
            let v_minus = 0.5 * rec.xi.dot(&(p_list[from] * rec.xi));
            let v_plus = 0.5 * rec.xi.dot(&(p_list[to] * rec.xi));
            let bound = mu * v_minus;
            JumpCheck {
                time: rec.t,
                from,
                to,
                v_minus,
                v_plus,
                bound,
                pass: v_plus <= bound * (1.0 + 1e-9),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeReport {
    /// `max (|chi| - Y^T Theta*)`; non-positive when the envelope holds.
    pub max_slack: f64,
    pub time_of_max_slack: f64,
    /// `max |chi| / Y^T Theta*`.
    pub max_ratio: f64,
}

impl EnvelopeReport {
    pub fn holds(&self) -> bool {
        self.max_slack <= 0.0
    }
}

/// Compares `|chi|` with `Y^T Theta*` at every record, using the true accelerations in `Y`.
pub fn envelope_monitor(trace: &SimTrace, theta_star: &[Vector4]) -> EnvelopeReport {
    let mut report = EnvelopeReport {
        max_slack: f64::NEG_INFINITY,
        time_of_max_slack: f64::NAN,
        max_ratio: 0.0,
    };
    for rec in &trace.records {
        let y = regressor(&rec.xi, &rec.accel.q_bar_ddot());
        let envelope = y.dot(&theta_star[rec.sigma]);
        let chi = rec.chi.norm();
        let slack = chi - envelope;
        if slack > report.max_slack {
            report.max_slack = slack;
            report.time_of_max_slack = rec.t;
        }
        report.max_ratio = report.max_ratio.max(chi / envelope);
    }
    report
}

/// Inputs to the ultimate-bound formula beyond the synthesised modes.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundInputs {
    pub theta_star: Vec<Vector4>,
    /// Initial gains; they give the upper bounds on `zeta` and `gamma`.
    pub initial_gains: Vec<AdaptiveGains>,
    pub kappa: f64,
    pub chatter_bound: f64,
    pub varpi: f64,
    /// Empirical bound on `sum_{j<=2} theta_hat_j |xi|^j` inside the boundary layer.
    pub delta1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UltimateBound {
    pub delta: f64,
    /// Level `(delta + varpi delta1) / (rate - kappa)` for the full Lyapunov function.
    pub level: f64,
    /// Radius `b` for `|xi|`.
    pub b: f64,
}

/// Evaluates `delta`, the level set and the radius `b`.
///
/// The lower bounds on `zeta` and `gamma` are taken as the smallest `eps_bar`
/// and `eps` over all modes.
pub fn ultimate_bound(modes: &[ControllerMode], inputs: &BoundInputs) -> Result<UltimateBound> {
    let n = modes.len();
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "modes",
            reason: "at least one mode is required",
        });
    }
    for (what, len) in [
        ("theta_star", inputs.theta_star.len()),
        ("initial gains", inputs.initial_gains.len()),
    ] {
        if len != n {
            return Err(Error::DimensionMismatch {
                what,
                expected: n,
                found: len,
            });
        }
    }
    let rate = modes.iter().map(|m| m.rate).fold(f64::INFINITY, f64::min);
    if !(inputs.kappa > 0.0 && inputs.kappa < rate) {
        return Err(Error::InvalidParameter {
            name: "kappa",
            reason: "must lie in (0, rate)",
        });
    }
    if !(inputs.varpi > 0.0 && inputs.delta1 >= 0.0 && inputs.chatter_bound > 0.0) {
        return Err(Error::InvalidParameter {
            name: "bound inputs",
            reason: "varpi and N0 must be positive, delta1 non-negative",
        });
    }
    let zeta_floor = modes.iter().map(|m| m.config.eps_bar).fold(f64::INFINITY, f64::min);
    let gamma_floor = modes.iter().map(|m| m.config.eps).fold(f64::INFINITY, f64::min);

    let mut active_worst = f64::NEG_INFINITY;
    let mut shared = 0.0;
    for (s, (mode, (theta, g0))) in modes
        .iter()
        .zip(inputs.theta_star.iter().zip(&inputs.initial_gains))
        .enumerate()
    {
        let cfg = &mode.config;
        let mut active = cfg.eps_bar / zeta_floor;
        for i in 0..4 {
            let alpha_bar = cfg.alpha[i] - mode.rate / 2.0;
            if !(alpha_bar > 0.0) {
                return Err(Error::LeakageTooSmall {
                    mode: s,
                    index: i,
                    alpha: cfg.alpha[i],
                    floor: mode.rate / 2.0,
                });
            }
            let weighted = cfg.alpha[i] * theta[i];
            active += weighted * weighted / (4.0 * alpha_bar);
        }
        active_worst = active_worst.max(active);
        shared += mode.rate / 2.0 * theta.norm_squared()
            + mode.rate * g0.gamma / gamma_floor
            + mode.rate * g0.zeta / zeta_floor
            + cfg.eps / gamma_floor;
    }
    let delta = active_worst + shared;
    let level = (delta + inputs.varpi * inputs.delta1) / (rate - inputs.kappa);
    let p_max = modes
        .iter()
        .map(|m| m.p_max_eigenvalue)
        .fold(f64::NEG_INFINITY, f64::max);
    let p_min = modes.iter().map(|m| m.p_min_eigenvalue).fold(f64::INFINITY, f64::min);
    let n0 = inputs.chatter_bound;
    let b = libm::sqrt(2.0 * libm::pow(p_max, n0 + 1.0) * level / libm::pow(p_min, n0 + 2.0));
    Ok(UltimateBound { delta, level, b })
}

/// Largest `sum_{j<=2} theta_hat_j |xi|^j` of the active mode over records with `|r| < varpi`.
pub fn estimate_delta1(trace: &SimTrace) -> f64 {
    trace
        .records
        .iter()
        .filter(|rec| rec.r.norm() < trace.varpi)
        .map(|rec| {
            let th = &rec.gains[rec.sigma].theta_hat;
            let n = rec.xi.norm();
            th[0] + th[1] * n + th[2] * n * n
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UubVerdict {
    /// First time `V_quad` falls below the level and stays there for the hold time.
    pub entry_time: Option<f64>,
    pub sup_xi_after_entry: f64,
    pub b: f64,
    pub pass: bool,
}

/// Finds the entry time and checks `sup |xi| <= b` afterwards.
pub fn uub_verdict(trace: &SimTrace, bound: &UltimateBound, hold: f64) -> UubVerdict {
    let recs = &trace.records;
    let mut entry = None;
    let mut candidate: Option<usize> = None;
    for (k, rec) in recs.iter().enumerate() {
        if rec.v_quad < bound.level {
            let start = *candidate.get_or_insert(k);
            if rec.t - recs[start].t >= hold {
                entry = Some(start);
                break;
            }
        } else {
            candidate = None;
        }
    }
    match entry {
        Some(k) => {
            let sup = recs[k..].iter().map(|r| r.xi.norm()).fold(0.0, f64::max);
            UubVerdict {
                entry_time: Some(recs[k].t),
                sup_xi_after_entry: sup,
                b: bound.b,
                pass: sup <= bound.b,
            }
        }
        None => UubVerdict {
            entry_time: None,
            sup_xi_after_entry: f64::NAN,
            b: bound.b,
            pass: false,
        },
    }
}

/// Per-channel RMS of a sequence of errors.
pub fn rms(errors: impl IntoIterator<Item = Vector4>) -> Result<Vector4> {
    let mut sum = Vector4::zeros();
    let mut n = 0usize;
    for e in errors {
        sum += e.component_mul(&e);
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyWindow);
    }
    Ok((sum / n as f64).map(libm::sqrt))
}

/// RMS tracking error over records with `t0 <= t <= t1`; attitude channels in degrees.
pub fn rms_errors(trace: &SimTrace, t0: f64, t1: f64) -> Result<Vector4> {
    let deg = Vector4::new(
        1.0,
        180.0 / core::f64::consts::PI,
        180.0 / core::f64::consts::PI,
        180.0 / core::f64::consts::PI,
    );
    rms(trace
        .records
        .iter()
        .filter(|r| r.t >= t0 && r.t <= t1)
        .map(|r| r.e().component_mul(&deg)))
}

/// Gain drift measured step by step from a trace.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GainFreezeReport {
    /// Largest one-step change of the active mode's `gamma`.
    pub active_gamma_drift: f64,
    /// Largest one-step change of any inactive mode's `theta_hat` or `zeta`.
    pub inactive_drift: f64,
    pub intervals: usize,
    /// Intervals over which the active `theta_hat` or `zeta` changed.
    pub intervals_with_adaptation: usize,
}

pub fn gain_freeze_check(trace: &SimTrace) -> GainFreezeReport {
    let recs = &trace.records;
    let mut report = GainFreezeReport::default();
    let mut interval_start = 0usize;
    for k in 0..recs.len().saturating_sub(1) {
        let p = recs[k].sigma;
        let (before, after) = (&recs[k].gains, &recs[k + 1].gains);
        report.active_gamma_drift = report.active_gamma_drift.max((after[p].gamma - before[p].gamma).abs());
        for m in (0..before.len()).filter(|&m| m != p) {
            let drift = (after[m].theta_hat - before[m].theta_hat)
                .amax()
                .max((after[m].zeta - before[m].zeta).abs());
            report.inactive_drift = report.inactive_drift.max(drift);
        }
        let closes = k + 1 == recs.len() - 1 || recs[k + 1].sigma != p;
        if closes {
            let first = &recs[interval_start].gains[p];
            let last = &recs[k + 1].gains[p];
            report.intervals += 1;
            if first.theta_hat != last.theta_hat || first.zeta != last.zeta {
                report.intervals_with_adaptation += 1;
            }
            interval_start = k + 1;
        }
    }
    report
}

/// Largest `|e_ddot - (-Lambda xi - delta_tau + chi)|` over the trace.
pub fn error_dynamics_residual(trace: &SimTrace) -> f64 {
    trace
        .records
        .iter()
        .map(|rec| {
            let mode = &trace.modes[rec.sigma];
            let e_ddot = rec.accel.q_ddot() - rec.desired.q_ddot;
            let predicted = -mode.lambda_xi(&rec.xi) - rec.delta_tau + rec.chi;
            (e_ddot - predicted).norm()
        })
        .fold(0.0, f64::max)
}
