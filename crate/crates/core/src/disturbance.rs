//! Bounded external disturbances on the four actuated channels.
//!
//! Channels are ordered `(thrust, roll torque, pitch torque, yaw torque)`.
//! Every term is bounded by its amplitude, so [`DisturbanceSpec::bound`] is a
//! valid `d_bar` for the uncertainty envelope.

use alloc::vec::Vec;

use crate::{Error, Result, Vector4};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DisturbanceTerm {
    /// `amplitude * sin(frequency * t + phase)`, frequency in rad/s.
    Sinusoid { amplitude: f64, frequency: f64, phase: f64 },
    /// Rectangular pulses of height `amplitude` on `[start + k*period, start + k*period + width)`.
    ///
    /// `period == None` is a single pulse; `count` caps the number of pulses.
    PulseTrain {
        amplitude: f64,
        start: f64,
        width: f64,
        period: Option<f64>,
        count: Option<u32>,
    },
}

impl DisturbanceTerm {
    pub fn amplitude(&self) -> f64 {
        match *self {
            DisturbanceTerm::Sinusoid { amplitude, .. } => amplitude,
            DisturbanceTerm::PulseTrain { amplitude, .. } => amplitude,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            DisturbanceTerm::Sinusoid {
                amplitude,
                frequency,
                phase,
            } => {
                if !(amplitude.is_finite() && frequency.is_finite() && phase.is_finite()) {
                    return Err(Error::NonFinite("sinusoid disturbance"));
                }
            }
            DisturbanceTerm::PulseTrain {
                amplitude,
                start,
                width,
                period,
                ..
            } => {
                if !(amplitude.is_finite() && start.is_finite() && width.is_finite()) {
                    return Err(Error::NonFinite("pulse disturbance"));
                }
                if width < 0.0 {
                    return Err(Error::InvalidParameter {
                        name: "pulse width",
                        reason: "must be non-negative",
                    });
                }
                if let Some(p) = period {
                    if !(p.is_finite() && p > 0.0 && p >= width) {
                        return Err(Error::InvalidParameter {
                            name: "pulse period",
                            reason: "must be finite, positive and at least the pulse width",
                        });
                    }
                }
            }
        }
        Ok(())
    }

    fn is_pulse(&self) -> bool {
        matches!(self, DisturbanceTerm::PulseTrain { .. })
    }

    fn eval(&self, t: f64) -> f64 {
        match *self {
            DisturbanceTerm::Sinusoid {
                amplitude,
                frequency,
                phase,
            } => amplitude * libm::sin(frequency * t + phase),
            DisturbanceTerm::PulseTrain {
                amplitude,
                start,
                width,
                period,
                count,
            } => {
                if t < start {
                    return 0.0;
                }
                let since = t - start;
                let (index, offset) = match period {
                    Some(p) => {
                        let k = libm::floor(since / p);
                        (k, since - k * p)
                    }
                    None => (0.0, since),
                };
                if let Some(n) = count {
                    if index >= f64::from(n) {
                        return 0.0;
                    }
                }
                if offset < width {
                    amplitude
                } else {
                    0.0
                }
            }
        }
    }
}

/// Per-channel sums of disturbance terms.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DisturbanceSpec {
    pub channels: [Vec<DisturbanceTerm>; 4],
}

impl DisturbanceSpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn with_term(mut self, channel: usize, term: DisturbanceTerm) -> Self {
        self.channels[channel].push(term);
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.channels
            .iter()
            .flat_map(|c| c.iter())
            .try_for_each(DisturbanceTerm::validate)
    }

    pub fn is_zero(&self) -> bool {
        self.channels.iter().all(|c| c.is_empty())
    }

    /// Disturbance at time `t`.
    pub fn eval(&self, t: f64) -> Vector4 {
        self.eval_sampled(t, t)
    }

    /// Smooth terms at `t`, pulse terms at `pulse_t`.
    ///
    /// The simulator samples pulses once per step (at the step midpoint) so
    /// that pulse edges placed on the integration grid are integrated exactly.
    pub fn eval_sampled(&self, t: f64, pulse_t: f64) -> Vector4 {
        let mut d = Vector4::zeros();
        for (slot, terms) in d.iter_mut().zip(self.channels.iter()) {
            *slot = terms
                .iter()
                .map(|term| {
                    if term.is_pulse() {
                        term.eval(pulse_t)
                    } else {
                        term.eval(t)
                    }
                })
                .sum();
        }
        d
    }

    /// `d_bar` with `|d(t)| <= d_bar` for all `t`.
    pub fn bound(&self) -> f64 {
        let per_channel = Vector4::from_iterator(
            self.channels
                .iter()
                .map(|terms| terms.iter().map(|t| libm::fabs(t.amplitude())).sum::<f64>()),
        );
        per_channel.norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn reference_spec() -> DisturbanceSpec {
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
                    amplitude: 5e-4,
                    start: 20.0,
                    width: 2.0,
                    period: Some(40.0),
                    count: Some(2),
                },
            )
    }

    #[test]
    fn sinusoid_peak_at_pi() {
        let d = reference_spec().eval(PI);
        assert!((d[0] - 0.05).abs() < 1e-15);
        assert_eq!(d[1], 0.0);
        assert_eq!(d[2], 0.0);
    }

    #[test]
    fn pulse_window_is_half_open() {
        let spec = reference_spec();
        assert_eq!(spec.eval(19.999)[3], 0.0);
        assert_eq!(spec.eval(20.0)[3], 5e-4);
        assert_eq!(spec.eval(21.999)[3], 5e-4);
        assert_eq!(spec.eval(22.0)[3], 0.0);
        assert_eq!(spec.eval(61.0)[3], 5e-4);
        // count = 2: no third pulse at t = 100
        assert_eq!(spec.eval(100.5)[3], 0.0);
    }

    #[test]
    fn pulses_use_the_sampling_time() {
        let spec = reference_spec();
        // stage evaluated at the right edge of a step that ends where the pulse starts
        assert_eq!(spec.eval_sampled(20.0, 19.9995)[3], 0.0);
        assert_eq!(spec.eval_sampled(20.0, 20.0005)[3], 5e-4);
    }

    #[test]
    fn bounded_by_amplitude_sum() {
        let spec = reference_spec().with_term(
            0,
            DisturbanceTerm::PulseTrain {
                amplitude: -0.2,
                start: 1.0,
                width: 0.5,
                period: None,
                count: None,
            },
        );
        let bound = spec.bound();
        for k in 0..200_000 {
            let t = k as f64 * 5e-4;
            assert!(spec.eval(t).norm() <= bound + 1e-15);
        }
    }

    #[test]
    fn rejects_bad_pulse() {
        let spec = DisturbanceSpec::none().with_term(
            3,
            DisturbanceTerm::PulseTrain {
                amplitude: 1.0,
                start: 0.0,
                width: 3.0,
                period: Some(2.0),
                count: None,
            },
        );
        assert!(spec.validate().is_err());
    }
}
