//! Desired trajectories for the actuated coordinates `(z, roll, pitch, yaw)`.

use crate::{Error, Result, Vector4};

/// `offset + amplitude * sin(frequency * t + phase)` on one channel.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ChannelTrajectory {
    pub offset: f64,
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
}

impl ChannelTrajectory {
    pub fn constant(value: f64) -> Self {
        Self {
            offset: value,
            ..Self::default()
        }
    }

    pub fn sinusoid(offset: f64, amplitude: f64, frequency: f64, phase: f64) -> Self {
        Self {
            offset,
            amplitude,
            frequency,
            phase,
        }
    }

    fn is_finite(&self) -> bool {
        self.offset.is_finite() && self.amplitude.is_finite() && self.frequency.is_finite() && self.phase.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Desired {
    pub q: Vector4,
    pub q_dot: Vector4,
    pub q_ddot: Vector4,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DesiredTrajectory {
    pub channels: [ChannelTrajectory; 4],
}

impl DesiredTrajectory {
    pub fn constant(q: Vector4) -> Self {
        Self {
            channels: [
                ChannelTrajectory::constant(q[0]),
                ChannelTrajectory::constant(q[1]),
                ChannelTrajectory::constant(q[2]),
                ChannelTrajectory::constant(q[3]),
            ],
        }
    }

    /// Every channel must have finite parameters, which makes `q_d`, its rate and
    /// its acceleration uniformly bounded.
    pub fn validate(&self) -> Result<()> {
        if self.channels.iter().all(ChannelTrajectory::is_finite) {
            Ok(())
        } else {
            Err(Error::NonFinite("desired trajectory"))
        }
    }

    pub fn eval(&self, t: f64) -> Desired {
        let mut out = Desired {
            q: Vector4::zeros(),
            q_dot: Vector4::zeros(),
            q_ddot: Vector4::zeros(),
        };
        for (i, c) in self.channels.iter().enumerate() {
            let arg = c.frequency * t + c.phase;
            let (s, co) = (libm::sin(arg), libm::cos(arg));
            out.q[i] = c.offset + c.amplitude * s;
            out.q_dot[i] = c.amplitude * c.frequency * co;
            out.q_ddot[i] = -c.amplitude * c.frequency * c.frequency * s;
        }
        out
    }

    /// Upper bound on `|q_d_dot(t)|` over all `t`.
    pub fn velocity_bound(&self) -> f64 {
        Vector4::from_iterator(self.channels.iter().map(|c| libm::fabs(c.amplitude * c.frequency))).norm()
    }

    /// Upper bound on `|q_d_ddot(t)|` over all `t`.
    pub fn acceleration_bound(&self) -> f64 {
        Vector4::from_iterator(
            self.channels
                .iter()
                .map(|c| libm::fabs(c.amplitude * c.frequency * c.frequency)),
        )
        .norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lift() -> DesiredTrajectory {
        DesiredTrajectory {
            channels: [
                ChannelTrajectory::sinusoid(2.0, 1.0, 0.1, 0.0),
                ChannelTrajectory::default(),
                ChannelTrajectory::default(),
                ChannelTrajectory::default(),
            ],
        }
    }

    #[test]
    fn height_profile() {
        let d = lift().eval(0.0);
        assert_eq!(d.q[0], 2.0);
        assert!((d.q_dot[0] - 0.1).abs() < 1e-15);
        assert_eq!(d.q_ddot[0], 0.0);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let traj = lift();
        let h = 1e-5;
        for k in 0..50 {
            let t = 0.73 * k as f64;
            let fd_vel = (traj.eval(t + h).q - traj.eval(t - h).q) / (2.0 * h);
            let fd_acc = (traj.eval(t + h).q_dot - traj.eval(t - h).q_dot) / (2.0 * h);
            assert!((fd_vel - traj.eval(t).q_dot).norm() < 1e-9);
            assert!((fd_acc - traj.eval(t).q_ddot).norm() < 1e-9);
        }
    }

    #[test]
    fn sampled_rates_stay_within_bounds() {
        let traj = lift();
        for k in 0..10_000 {
            let d = traj.eval(0.01 * k as f64);
            assert!(d.q_dot.norm() <= traj.velocity_bound() + 1e-15);
            assert!(d.q_ddot.norm() <= traj.acceleration_bound() + 1e-15);
        }
    }
}
