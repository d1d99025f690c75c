//! Switching signals, average-dwell-time thresholds and certification.
//!
//! A signal `sigma` has average dwell time `vartheta` with chatter bound `N0`
//! when every window `[t1, t2)` contains at most `N0 + (t2 - t1) / vartheta`
//! switches. Mode indices are zero-based here.

use alloc::vec::Vec;

use crate::controller::ControllerMode;
use crate::{Error, Matrix8, Result};

/// Mode `mode` becomes active at `time`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchEvent {
    pub time: f64,
    pub mode: usize,
}

/// Declared ADT `vartheta` (s) and chatter bound `N0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdtParams {
    pub vartheta: f64,
    pub chatter_bound: f64,
}

/// Piecewise-constant switching signal on `[start, end]`.
///
/// The first event sits at `start` and selects the initial mode; every later
/// event is a switch.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchSchedule {
    pub start: f64,
    pub end: f64,
    pub events: Vec<SwitchEvent>,
    pub adt: Option<AdtParams>,
}

/// A window on which the ADT inequality fails.
///
/// `[t1, t2]` runs from the first to the last offending switch; any half-open
/// window `[t1, t2 + eps)` with small `eps` violates the bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdtWitness {
    pub t1: f64,
    pub t2: f64,
    pub count: usize,
    pub allowed: f64,
}

impl SwitchSchedule {
    pub fn new(start: f64, end: f64, events: Vec<SwitchEvent>, adt: Option<AdtParams>) -> Result<Self> {
        let schedule = Self {
            start,
            end,
            events,
            adt,
        };
        schedule.validate()?;
        Ok(schedule)
    }

    /// A single mode held over the whole horizon.
    pub fn constant(mode: usize, start: f64, end: f64) -> Self {
        Self {
            start,
            end,
            events: alloc::vec![SwitchEvent { time: start, mode }],
            adt: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start.is_finite() && self.end.is_finite()) {
            return Err(Error::NonFinite("schedule horizon"));
        }
        if self.end <= self.start {
            return Err(Error::InvalidSchedule("horizon end must follow start"));
        }
        let first = self
            .events
            .first()
            .ok_or(Error::InvalidSchedule("at least one event is required"))?;
        if first.time != self.start {
            return Err(Error::InvalidSchedule("first event must sit at the start time"));
        }
        for pair in self.events.windows(2) {
            if !(pair[1].time > pair[0].time) {
                return Err(Error::InvalidSchedule("switch times must be strictly increasing"));
            }
            if pair[1].mode == pair[0].mode {
                return Err(Error::InvalidSchedule("consecutive events must change mode"));
            }
        }
        if self.events.iter().any(|e| !e.time.is_finite() || e.time > self.end) {
            return Err(Error::InvalidSchedule("switch times must lie inside the horizon"));
        }
        if let Some(adt) = self.adt {
            check_adt_params(adt.vartheta, adt.chatter_bound)?;
        }
        Ok(())
    }

    pub fn initial_mode(&self) -> usize {
        self.events[0].mode
    }

    /// Largest mode index referenced, plus one.
    pub fn mode_count(&self) -> usize {
        self.events.iter().map(|e| e.mode + 1).max().unwrap_or(0)
    }

    /// Active mode at `t` (the signal is right-continuous).
    pub fn mode_at(&self, t: f64) -> usize {
        let idx = self.events.partition_point(|e| e.time <= t);
        self.events[idx.saturating_sub(1)].mode
    }

    /// Switch instants, excluding the initial event.
    pub fn switch_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.events.iter().skip(1).map(|e| e.time)
    }

    pub fn switch_count(&self) -> usize {
        self.events.len().saturating_sub(1)
    }

    /// Number of switches in `[t1, t2)`.
    pub fn count_switches(&self, t1: f64, t2: f64) -> Result<usize> {
        if !(t1 >= self.start && t2 <= self.end && t1 <= t2) {
            return Err(Error::OutOfHorizon { t1, t2 });
        }
        Ok(self.switch_times().filter(|&t| t >= t1 && t < t2).count())
    }

    /// Moves every event onto the grid `start + k h`.
    ///
    /// Fails if two events collapse onto the same grid point.
    pub fn snapped(&self, h: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidParameter {
                name: "step",
                reason: "must be finite and positive",
            });
        }
        let events = self
            .events
            .iter()
            .map(|e| SwitchEvent {
                time: self.start + libm::round((e.time - self.start) / h) * h,
                mode: e.mode,
            })
            .collect();
        let snapped = Self { events, ..self.clone() };
        snapped.validate()?;
        Ok(snapped)
    }

    /// Grid index of each event for step `h`.
    pub fn step_indices(&self, h: f64) -> Vec<(usize, usize)> {
        self.events
            .iter()
            .map(|e| (libm::round((e.time - self.start) / h) as usize, e.mode))
            .collect()
    }

    /// Certifies against the declared ADT parameters.
    pub fn certify(&self) -> Result<AdtCertificate> {
        match self.adt {
            Some(adt) => adt_certify(self, adt.vartheta, adt.chatter_bound),
            None if self.switch_count() == 0 => Ok(AdtCertificate {
                switches: 0,
                min_margin: f64::INFINITY,
            }),
            None => Err(Error::InvalidSchedule("switching schedule without ADT parameters")),
        }
    }
}

fn check_adt_params(vartheta: f64, n0: f64) -> Result<()> {
    if !(vartheta.is_finite() && vartheta > 0.0) {
        return Err(Error::InvalidParameter {
            name: "vartheta",
            reason: "must be finite and positive",
        });
    }
    if !(n0.is_finite() && n0 > 0.0) {
        return Err(Error::InvalidParameter {
            name: "N0",
            reason: "must be finite and positive",
        });
    }
    Ok(())
}

/// Outcome of a successful certification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdtCertificate {
    pub switches: usize,
    /// Smallest `N0 + (t_j - t_i) / vartheta - (j - i + 1)` over switch pairs.
    pub min_margin: f64,
}

/// Checks the ADT inequality on every window.
///
/// The excess `N(t1, t2) - (t2 - t1) / vartheta` only increases when `t1`
/// moves onto the next switch or `t2` moves just past one, so its supremum is
/// approached by windows from switch `i` to just after switch `j`. Those pairs
/// are scanned in one pass with a running maximum of `t_i / vartheta - i`.
pub fn adt_certify(schedule: &SwitchSchedule, vartheta: f64, n0: f64) -> Result<AdtCertificate> {
    check_adt_params(vartheta, n0)?;
    let times: Vec<f64> = schedule.switch_times().collect();
    let mut min_margin = f64::INFINITY;
    let mut best_i = 0usize;
    let mut best_key = f64::NEG_INFINITY;
    for (j, &tj) in times.iter().enumerate() {
        let key = times[j] / vartheta - j as f64;
        if key > best_key {
            best_key = key;
            best_i = j;
        }
        let ti = times[best_i];
        let count = j - best_i + 1;
        let allowed = n0 + (tj - ti) / vartheta;
        let margin = allowed - count as f64;
        if margin < 0.0 {
            return Err(Error::AdtViolation(AdtWitness {
                t1: ti,
                t2: tj,
                count,
                allowed,
            }));
        }
        min_margin = min_margin.min(margin);
    }
    Ok(AdtCertificate {
        switches: times.len(),
        min_margin,
    })
}

/// Schedule templates for [`generate_schedule`].
#[derive(Debug, Clone, PartialEq)]
pub enum SchedulePattern {
    /// Cycle through `modes` with a fixed `period`, starting at `t = 0`.
    Periodic { period: f64, modes: Vec<usize> },
    /// `burst` switches spread evenly over `burst_span` after `burst_start`,
    /// then one switch every `gap` seconds, cycling through `modes`.
    BurstThenSlow {
        burst_start: f64,
        burst: usize,
        burst_span: f64,
        gap: f64,
        modes: Vec<usize>,
    },
    /// Events given verbatim; the first must sit at `t = 0`.
    Explicit(Vec<SwitchEvent>),
}

fn check_cycle(modes: &[usize]) -> Result<()> {
    if modes.len() < 2 {
        return Err(Error::InvalidSchedule("a switching pattern needs at least two modes"));
    }
    let n = modes.len();
    if (0..n).any(|i| modes[i] == modes[(i + 1) % n]) {
        return Err(Error::InvalidSchedule("neighbouring modes in a cycle must differ"));
    }
    Ok(())
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: "must be finite and positive",
        })
    }
}

/// Builds a schedule on `[0, horizon]` and certifies it against `(vartheta, n0)`.
pub fn generate_schedule(pattern: &SchedulePattern, vartheta: f64, n0: f64, horizon: f64) -> Result<SwitchSchedule> {
    positive("horizon", horizon)?;
    check_adt_params(vartheta, n0)?;
    let events = match pattern {
        SchedulePattern::Periodic { period, modes } => {
            positive("period", *period)?;
            check_cycle(modes)?;
            let mut events = Vec::new();
            let mut k = 0usize;
            loop {
                let time = k as f64 * period;
                if time >= horizon {
                    break;
                }
                events.push(SwitchEvent {
                    time,
                    mode: modes[k % modes.len()],
                });
                k += 1;
            }
            events
        }
        SchedulePattern::BurstThenSlow {
            burst_start,
            burst,
            burst_span,
            gap,
            modes,
        } => {
            positive("burst span", *burst_span)?;
            positive("gap", *gap)?;
            check_cycle(modes)?;
            if !(burst_start.is_finite() && *burst_start > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "burst start",
                    reason: "must be finite and positive",
                });
            }
            let mut times = Vec::new();
            let spacing = if *burst > 1 {
                burst_span / (*burst - 1) as f64
            } else {
                0.0
            };
            for k in 0..*burst {
                times.push(burst_start + k as f64 * spacing);
            }
            let mut t = times.last().copied().unwrap_or(*burst_start - gap) + gap;
            while t < horizon {
                times.push(t);
                t += gap;
            }
            let mut events = alloc::vec![SwitchEvent {
                time: 0.0,
                mode: modes[0]
            }];
            for (k, time) in times.into_iter().filter(|&t| t < horizon).enumerate() {
                events.push(SwitchEvent {
                    time,
                    mode: modes[(k + 1) % modes.len()],
                });
            }
            events
        }
        SchedulePattern::Explicit(events) => events.clone(),
    };
    let schedule = SwitchSchedule::new(
        0.0,
        horizon,
        events,
        Some(AdtParams {
            vartheta,
            chatter_bound: n0,
        }),
    )?;
    schedule.certify()?;
    Ok(schedule)
}

/// ADT threshold and the eigenvalue data behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct AdtThreshold {
    /// `max lambda_max(P) / min lambda_min(P)`.
    pub mu: f64,
    /// `min lambda_min(Q) / lambda_max(P)` over modes.
    pub rate: f64,
    pub kappa: f64,
    /// `ln(mu) / kappa`.
    pub vartheta_star: f64,
    /// Smallest `c` with `xi^T P_j xi <= c xi^T P_i xi` for every pair of
    /// modes. Never exceeds `mu`, and is exactly 1 when all `P` coincide.
    pub tight_mu: f64,
    /// `ln(tight_mu) / kappa`.
    pub tight_vartheta_star: f64,
    pub p_min_eigenvalues: Vec<f64>,
    pub p_max_eigenvalues: Vec<f64>,
}

impl AdtThreshold {
    pub fn p_max_overall(&self) -> f64 {
        self.p_max_eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn p_min_overall(&self) -> f64 {
        self.p_min_eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `(mu, rate, kappa, vartheta*)` from the per-mode Lyapunov pairs.
pub fn adt_threshold(p_list: &[Matrix8], q_list: &[Matrix8], kappa_fraction: f64) -> Result<AdtThreshold> {
    if p_list.is_empty() {
        return Err(Error::InvalidParameter {
            name: "modes",
            reason: "at least one mode is required",
        });
    }
    if p_list.len() != q_list.len() {
        return Err(Error::DimensionMismatch {
            what: "Q list",
            expected: p_list.len(),
            found: q_list.len(),
        });
    }
    if !(kappa_fraction > 0.0 && kappa_fraction < 1.0) {
        return Err(Error::InvalidParameter {
            name: "kappa_fraction",
            reason: "must lie in (0, 1)",
        });
    }
    let mut p_min = Vec::with_capacity(p_list.len());
    let mut p_max = Vec::with_capacity(p_list.len());
    let mut rate = f64::INFINITY;
    for (p, q) in p_list.iter().zip(q_list) {
        let pe = p.symmetric_eigenvalues();
        let qmin = q.symmetric_eigenvalues().min();
        if !(pe.min() > 0.0) {
            return Err(Error::NotPositiveDefinite {
                what: "P",
                min_eigenvalue: pe.min(),
            });
        }
        if !(qmin > 0.0) {
            return Err(Error::NotPositiveDefinite {
                what: "Q",
                min_eigenvalue: qmin,
            });
        }
        p_min.push(pe.min());
        p_max.push(pe.max());
        rate = rate.min(qmin / pe.max());
    }
    let hi = p_max.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = p_min.iter().copied().fold(f64::INFINITY, f64::min);
    // mu >= 1 holds analytically; clamp rounding when all P coincide.
    let mu = (hi / lo).max(1.0);
    let kappa = kappa_fraction * rate;
    let tight_mu = tight_jump_factor(p_list)?.min(mu);
    Ok(AdtThreshold {
        mu,
        rate,
        kappa,
        vartheta_star: libm::log(mu) / kappa,
        tight_mu,
        tight_vartheta_star: libm::log(tight_mu) / kappa,
        p_min_eigenvalues: p_min,
        p_max_eigenvalues: p_max,
    })
}

/// `max_{i,j} lambda_max(L_i^-1 P_j L_i^-T)` with `P_i = L_i L_i^T`, floored at 1.
pub fn tight_jump_factor(p_list: &[Matrix8]) -> Result<f64> {
    let mut factor: f64 = 1.0;
    for (i, pi) in p_list.iter().enumerate() {
        let chol = pi.cholesky().ok_or(Error::NotPositiveDefinite {
            what: "P",
            min_eigenvalue: pi.symmetric_eigenvalues().min(),
        })?;
        let l_inv = chol.l().try_inverse().ok_or(Error::NotPositiveDefinite {
            what: "P",
            min_eigenvalue: 0.0,
        })?;
        for (j, pj) in p_list.iter().enumerate() {
            if i == j || pj == pi {
                continue;
            }
            let m = l_inv * pj * l_inv.transpose();
            let m = (m + m.transpose()) * 0.5;
            factor = factor.max(m.symmetric_eigenvalues().max());
        }
    }
    Ok(factor)
}

/// [`adt_threshold`] over synthesised modes.
pub fn adt_threshold_for_modes(modes: &[ControllerMode], kappa_fraction: f64) -> Result<AdtThreshold> {
    let p: Vec<Matrix8> = modes.iter().map(|m| m.p).collect();
    let q: Vec<Matrix8> = modes.iter().map(|m| m.config.q).collect();
    adt_threshold(&p, &q, kappa_fraction)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn events(list: &[(f64, usize)]) -> Vec<SwitchEvent> {
        list.iter().map(|&(time, mode)| SwitchEvent { time, mode }).collect()
    }

    fn schedule(times: &[f64], end: f64) -> SwitchSchedule {
        let mut ev = alloc::vec![SwitchEvent { time: 0.0, mode: 0 }];
        for (k, &t) in times.iter().enumerate() {
            ev.push(SwitchEvent {
                time: t,
                mode: (k + 1) % 2,
            });
        }
        SwitchSchedule::new(0.0, end, ev, None).unwrap()
    }

    #[test]
    fn empty_schedule_counts_nothing() {
        let s = SwitchSchedule::constant(0, 0.0, 10.0);
        assert_eq!(s.count_switches(0.0, 10.0).unwrap(), 0);
        assert_eq!(s.count_switches(3.0, 3.0).unwrap(), 0);
        assert_eq!(adt_certify(&s, 1.0, 1.0).unwrap().switches, 0);
        assert_eq!(s.certify().unwrap().switches, 0);
    }

    #[test]
    fn half_open_count() {
        let s = schedule(&[1.0, 2.0, 3.0], 5.0);
        assert_eq!(s.count_switches(1.0, 3.0).unwrap(), 2);
        assert_eq!(s.count_switches(0.0, 5.0).unwrap(), 3);
        assert!(matches!(s.count_switches(-1.0, 2.0), Err(Error::OutOfHorizon { .. })));
        assert!(s.count_switches(0.0, 6.0).is_err());
        assert!(s.count_switches(3.0, 2.0).is_err());
    }

    #[test]
    fn mode_lookup_is_right_continuous() {
        let s = SwitchSchedule::new(0.0, 10.0, events(&[(0.0, 2), (4.0, 0), (7.0, 1)]), None).unwrap();
        assert_eq!(s.mode_at(0.0), 2);
        assert_eq!(s.mode_at(3.999), 2);
        assert_eq!(s.mode_at(4.0), 0);
        assert_eq!(s.mode_at(9.0), 1);
        assert_eq!(s.mode_count(), 3);
    }

    #[test]
    fn rejects_malformed_schedules() {
        assert!(SwitchSchedule::new(0.0, 10.0, Vec::new(), None).is_err());
        assert!(SwitchSchedule::new(0.0, 10.0, events(&[(1.0, 0)]), None).is_err());
        assert!(SwitchSchedule::new(0.0, 10.0, events(&[(0.0, 0), (2.0, 1), (2.0, 0)]), None).is_err());
        assert!(SwitchSchedule::new(0.0, 10.0, events(&[(0.0, 0), (2.0, 0)]), None).is_err());
        assert!(SwitchSchedule::new(0.0, 10.0, events(&[(0.0, 0), (12.0, 1)]), None).is_err());
    }

    #[test]
    fn uncertified_switching_is_refused() {
        let s = schedule(&[1.0], 5.0);
        assert!(matches!(s.certify(), Err(Error::InvalidSchedule(_))));
    }

    #[test]
    fn snapping_moves_onto_grid() {
        let s = schedule(&[1.00049, 2.0004], 5.0);
        let snapped = s.snapped(1e-3).unwrap();
        let times: Vec<f64> = snapped.switch_times().collect();
        assert_eq!(times, alloc::vec![1000.0 * 1e-3, 2000.0 * 1e-3]);
        assert_eq!(snapped.step_indices(1e-3), alloc::vec![(0, 0), (1000, 1), (2000, 0)]);
        let crowded = schedule(&[1.0001, 1.0004], 5.0);
        assert!(crowded.snapped(1e-3).is_err());
    }

    #[test]
    fn periodic_at_twice_vartheta_certifies() {
        let vartheta = 1.5;
        let times: Vec<f64> = (1..20).map(|k| k as f64 * 2.0 * vartheta).collect();
        let s = schedule(&times, 60.0);
        for n0 in [1.0, 2.0, 5.0] {
            adt_certify(&s, vartheta, n0).unwrap();
        }
    }

    #[test]
    fn tight_burst_is_caught() {
        let n0 = 3.0;
        let times: Vec<f64> = (0..4).map(|k| 5.0 + k as f64 * 1e-3).collect();
        let s = schedule(&times, 10.0);
        match adt_certify(&s, 2.0, n0) {
            Err(Error::AdtViolation(w)) => {
                assert_eq!(w.count, 4);
                assert_eq!(w.t1, 5.0);
                assert_eq!(w.t2, times[3]);
                assert!(w.allowed < 4.0);
            }
            other => panic!("expected violation, got {other:?}"),
        }
    }

    #[test]
    fn periodic_generation() {
        let pattern = SchedulePattern::Periodic {
            period: 7.1,
            modes: alloc::vec![0, 1, 2],
        };
        let s = generate_schedule(&pattern, 7.0, 1.0, 100.0).unwrap();
        assert_eq!(s.switch_count(), 14);
        assert_eq!(s.mode_at(7.1), 1);
        assert_eq!(s.mode_at(14.2), 2);
    }

    #[test]
    fn burst_then_slow_generation() {
        let vartheta = 7.0;
        let pattern = SchedulePattern::BurstThenSlow {
            burst_start: 4.0,
            burst: 3,
            burst_span: 1.0,
            gap: 2.0 * vartheta,
            modes: alloc::vec![0, 1, 2],
        };
        let s = generate_schedule(&pattern, vartheta, 3.0, 100.0).unwrap();
        assert_eq!(s.count_switches(4.0, 5.001).unwrap(), 3);
        assert!(s
            .switch_times()
            .collect::<Vec<_>>()
            .windows(2)
            .skip(2)
            .all(|w| w[1] - w[0] >= 2.0 * vartheta - 1e-12));
    }

    #[test]
    fn violating_explicit_list_is_rejected() {
        let pattern = SchedulePattern::Explicit(events(&[(0.0, 0), (1.0, 1), (1.1, 0), (1.2, 1), (1.3, 0)]));
        assert!(matches!(
            generate_schedule(&pattern, 5.0, 3.0, 10.0),
            Err(Error::AdtViolation(_))
        ));
    }

    #[test]
    fn single_identity_mode() {
        let th = adt_threshold(&[Matrix8::identity()], &[Matrix8::identity() * 2.0], 0.9).unwrap();
        assert_eq!(th.mu, 1.0);
        assert_eq!(th.vartheta_star, 0.0);
        assert_eq!(th.rate, 2.0);
    }

    #[test]
    fn identical_scalar_modes_have_unit_mu() {
        let p = Matrix8::identity() * 3.0;
        let th = adt_threshold(&[p, p], &[Matrix8::identity(); 2], 0.5).unwrap();
        assert_eq!(th.mu, 1.0);
        assert_eq!(th.vartheta_star, 0.0);
    }

    #[test]
    fn duplicating_a_mode_keeps_threshold() {
        // mu compares extreme eigenvalues across all modes, so one
        // non-scalar P already gives mu = cond(P).
        let p = Matrix8::from_diagonal(&crate::Vector8::from_fn(|i, _| 1.0 + i as f64));
        let q = Matrix8::identity();
        let one = adt_threshold(&[p], &[q], 0.5).unwrap();
        let two = adt_threshold(&[p, p], &[q, q], 0.5).unwrap();
        assert_eq!(one.mu, 8.0);
        assert_eq!(
            one,
            AdtThreshold {
                p_min_eigenvalues: alloc::vec![1.0],
                p_max_eigenvalues: alloc::vec![8.0],
                ..two.clone()
            }
        );
        assert_eq!(two.p_min_eigenvalues, alloc::vec![1.0, 1.0]);
    }

    #[test]
    fn identical_modes_have_unit_tight_factor() {
        let p = Matrix8::from_diagonal(&crate::Vector8::from_fn(|i, _| 1.0 + i as f64));
        let th = adt_threshold(&[p, p], &[Matrix8::identity(); 2], 0.5).unwrap();
        assert_eq!(th.tight_mu, 1.0);
        assert_eq!(th.tight_vartheta_star, 0.0);
        let one = adt_threshold(&[p], &[Matrix8::identity()], 0.5).unwrap();
        assert_eq!(one.tight_mu, 1.0);
    }

    #[test]
    fn tight_factor_of_diagonal_pairs() {
        // Oracle: for diagonal P the factor is the largest entrywise ratio.
        let a = crate::Vector8::from([1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        let b = crate::Vector8::from([2.0, 1.0, 9.0, 4.0, 1.0, 6.0, 7.0, 0.5]);
        let mut expected: f64 = 1.0;
        for k in 0..8 {
            expected = expected.max(a[k] / b[k]).max(b[k] / a[k]);
        }
        let f = tight_jump_factor(&[Matrix8::from_diagonal(&a), Matrix8::from_diagonal(&b)]).unwrap();
        assert!((f - expected).abs() <= 1e-12 * expected, "{f} vs {expected}");
        assert_eq!(expected, 16.0);
    }

    #[test]
    fn threshold_rejects_bad_inputs() {
        let mut p = Matrix8::identity();
        p[(3, 3)] = -1.0;
        assert!(adt_threshold(&[p], &[Matrix8::identity()], 0.9).is_err());
        assert!(adt_threshold(&[Matrix8::identity()], &[Matrix8::identity()], 1.0).is_err());
        assert!(adt_threshold(&[], &[], 0.5).is_err());
    }

    /// Dense-grid oracle on integer-millisecond switch times.
    ///
    /// For every closed grid window `[a, b]` it checks
    /// `#switches in [a, b] <= N0 + (b - a) / vartheta`, via the running maximum
    /// of `a / vartheta - #switches before a`.
    fn grid_oracle(ms: &[u32], horizon_ms: u32, vartheta: f64, n0: f64) -> bool {
        let mut at = alloc::vec![0u32; horizon_ms as usize + 1];
        for &m in ms {
            at[m as usize] += 1;
        }
        let mut before = 0u32;
        let mut best = f64::NEG_INFINITY;
        for b in 0..=horizon_ms {
            let tb = b as f64 * 1e-3;
            best = best.max(tb / vartheta - before as f64);
            let upto = before + at[b as usize];
            if upto as f64 - tb / vartheta + best > n0 {
                return false;
            }
            before = upto;
        }
        true
    }

    fn pair_oracle(times: &[f64], vartheta: f64, n0: f64) -> bool {
        for i in 0..times.len() {
            for j in i..times.len() {
                if (j - i + 1) as f64 > n0 + (times[j] - times[i]) / vartheta {
                    return false;
                }
            }
        }
        true
    }

    fn schedule_strategy() -> impl Strategy<Value = (Vec<u32>, f64, f64)> {
        (
            proptest::collection::btree_set(1u32..3000, 0..25),
            0.05f64..2.0,
            0.5f64..4.0,
        )
            .prop_map(|(set, vartheta, n0)| (set.into_iter().collect(), vartheta, n0))
    }

    proptest! {
        #[test]
        fn certifier_matches_grid_oracle((ms, vartheta, n0) in schedule_strategy()) {
            let times: Vec<f64> = ms.iter().map(|&m| m as f64 * 1e-3).collect();
            let s = schedule(&times, 3.0);
            let fast = adt_certify(&s, vartheta, n0).is_ok();
            prop_assert_eq!(fast, grid_oracle(&ms, 3000, vartheta, n0));
            prop_assert_eq!(fast, pair_oracle(&times, vartheta, n0));
        }

        #[test]
        fn counts_match_brute_force(ms in proptest::collection::btree_set(1u32..3000, 0..25), a in 0u32..3000, len in 0u32..3000) {
            let times: Vec<f64> = ms.iter().map(|&m| m as f64 * 1e-3).collect();
            let s = schedule(&times, 3.0);
            let b = (a + len).min(3000);
            let expected = ms.iter().filter(|&&m| m >= a && m < b).count();
            prop_assert_eq!(s.count_switches(a as f64 * 1e-3, b as f64 * 1e-3).unwrap(), expected);
        }

        #[test]
        fn mu_at_least_one(diags in proptest::collection::vec(proptest::array::uniform8(0.1f64..10.0), 1..4)) {
            let ps: Vec<Matrix8> = diags.iter().map(|d| Matrix8::from_diagonal(&crate::Vector8::from(*d))).collect();
            let qs = alloc::vec![Matrix8::identity(); ps.len()];
            let th = adt_threshold(&ps, &qs, 0.9).unwrap();
            prop_assert!(th.mu >= 1.0);
            prop_assert!(th.vartheta_star >= 0.0);
        }

        #[test]
        fn threshold_is_scale_free(scale in 1e-3f64..1e3, k in 0.1f64..0.9) {
            let ps = [
                Matrix8::from_diagonal(&crate::Vector8::from([1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0])),
                Matrix8::from_diagonal(&crate::Vector8::repeat(3.5)),
            ];
            let qs = [Matrix8::identity() * 2.0, Matrix8::identity() * 3.0];
            let base = adt_threshold(&ps, &qs, k).unwrap();
            let scaled = adt_threshold(&ps.map(|p| p * scale), &qs.map(|q| q * scale), k).unwrap();
            prop_assert!((base.mu - scaled.mu).abs() <= 1e-12 * base.mu);
            prop_assert!((base.rate - scaled.rate).abs() <= 1e-12 * base.rate);
            prop_assert!((base.vartheta_star - scaled.vartheta_star).abs() <= 1e-12 * base.vartheta_star);
        }

        #[test]
        fn tight_factor_bounds_every_jump(
            a in proptest::collection::vec(-1.0f64..1.0, 64),
            b in proptest::collection::vec(-1.0f64..1.0, 64),
            xi in proptest::array::uniform8(-1.0f64..1.0),
        ) {
            let pa = { let m = Matrix8::from_vec(a); m * m.transpose() + Matrix8::identity() * 0.1 };
            let pb = { let m = Matrix8::from_vec(b); m * m.transpose() + Matrix8::identity() * 0.1 };
            let f = tight_jump_factor(&[pa, pb]).unwrap();
            let th = adt_threshold(&[pa, pb], &[Matrix8::identity(); 2], 0.5).unwrap();
            prop_assert!(f >= 1.0 && f <= th.mu * (1.0 + 1e-12));
            let xi = crate::Vector8::from(xi);
            let (va, vb) = (xi.dot(&(pa * xi)), xi.dot(&(pb * xi)));
            prop_assert!(vb <= f * va * (1.0 + 1e-9) && va <= f * vb * (1.0 + 1e-9));
        }

        #[test]
        fn larger_kappa_shortens_threshold(k1 in 0.05f64..0.9, dk in 0.01f64..0.09) {
            let ps = [Matrix8::identity(), Matrix8::identity() * 4.0];
            let qs = [Matrix8::identity(); 2];
            let lo = adt_threshold(&ps, &qs, k1).unwrap();
            let hi = adt_threshold(&ps, &qs, k1 + dk).unwrap();
            prop_assert!(hi.vartheta_star < lo.vartheta_star);
        }
    }
}
