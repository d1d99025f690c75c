use core::fmt;

use crate::switching::AdtWitness;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A quantity that must be finite was NaN or infinite.
    NonFinite(&'static str),
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },
    /// Roll or pitch reached the `cos(roll) cos(pitch) -> 0` singularity guard.
    AttitudeSingularity {
        roll: f64,
        pitch: f64,
    },
    NotHurwitz {
        max_real_part: f64,
    },
    NotPositiveDefinite {
        what: &'static str,
        min_eigenvalue: f64,
    },
    /// The vectorised Lyapunov system could not be solved.
    SingularLyapunov,
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    ModeOutOfRange {
        index: usize,
        modes: usize,
    },
    /// A leakage rate violates `alpha > rate / 2`.
    LeakageTooSmall {
        mode: usize,
        index: usize,
        alpha: f64,
        floor: f64,
    },
    OutOfHorizon {
        t1: f64,
        t2: f64,
    },
    InvalidSchedule(&'static str),
    AdtViolation(AdtWitness),
    EmptyWindow,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NonFinite(what) => write!(f, "non-finite value in {what}"),
            Error::InvalidParameter { name, reason } => write!(f, "invalid {name}: {reason}"),
            Error::AttitudeSingularity { roll, pitch } => write!(
                f,
                "attitude singularity guard hit (roll = {roll} rad, pitch = {pitch} rad)"
            ),
            Error::NotHurwitz { max_real_part } => {
                write!(f, "closed-loop matrix is not Hurwitz (max real part {max_real_part})")
            }
            Error::NotPositiveDefinite { what, min_eigenvalue } => {
                write!(f, "{what} is not positive definite (min eigenvalue {min_eigenvalue})")
            }
            Error::SingularLyapunov => f.write_str("Lyapunov equation system is singular"),
            Error::DimensionMismatch { what, expected, found } => {
                write!(f, "{what}: expected dimension {expected}, found {found}")
            }
            Error::ModeOutOfRange { index, modes } => {
                write!(f, "mode index {index} out of range for {modes} modes")
            }
            Error::LeakageTooSmall {
                mode,
                index,
                alpha,
                floor,
            } => write!(f, "mode {mode}: alpha[{index}] = {alpha} must exceed {floor}"),
            Error::OutOfHorizon { t1, t2 } => {
                write!(f, "window [{t1}, {t2}) lies outside the schedule horizon")
            }
            Error::InvalidSchedule(reason) => write!(f, "invalid schedule: {reason}"),
            Error::AdtViolation(w) => write!(
                f,
                "average dwell time violated on [{}, {}]: {} switches > {}",
                w.t1, w.t2, w.count, w.allowed
            ),
            Error::EmptyWindow => f.write_str("empty time window"),
        }
    }
}

impl core::error::Error for Error {}
