//! Per-mode controller synthesis and the adaptive robust control law.
//!
//! For a mode with gains `K1`, `K2` the stacked error `xi = [e; e_dot]` has the
//! closed-loop matrix `A = [0 I; -K1 -K2]`. Synthesis solves
//! `A^T P + P A = -Q` and fixes the convergence rate
//! `rate = lambda_min(Q) / lambda_max(P)`. At run time the input is
//!
//! ```text
//! tau = D (-K1 e - K2 e_dot - delta_tau + q_d_ddot)
//! delta_tau = rho r / |r|    if |r| >= varpi
//!           = rho r / varpi  otherwise
//! rho = Y^T theta_hat + zeta + gamma,   Y = (1, |xi|, |xi|^2, |q_bar_ddot|)
//! ```
//!
//! with `r = B^T P xi`. Only the active mode adapts `theta_hat` and `zeta`;
//! only inactive modes adapt `gamma`.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::lyapunov::{lyapunov_residual, solve_lyapunov, spectral_abscissa};
use crate::{Error, Matrix4, Matrix8, Result, Vector4, Vector6, Vector8};

/// Designer-chosen constants for one mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeConfig {
    pub k1: Matrix4,
    pub k2: Matrix4,
    pub q: Matrix8,
    /// Diagonal of the constant input gain `D`.
    pub d_gain: Vector4,
    /// Leakage rates for `theta_hat_0..3`.
    pub alpha: Vector4,
    /// Drive of the inactive-mode `gamma` law.
    pub eps: f64,
    /// Drive of the active-mode `zeta` law.
    pub eps_bar: f64,
}

impl ModeConfig {
    /// Scalar-times-identity gains, the usual design.
    pub fn uniform(k1: f64, k2: f64, q: f64, d_gain: Vector4, alpha: f64, eps: f64, eps_bar: f64) -> Self {
        Self {
            k1: Matrix4::identity() * k1,
            k2: Matrix4::identity() * k2,
            q: Matrix8::identity() * q,
            d_gain,
            alpha: Vector4::repeat(alpha),
            eps,
            eps_bar,
        }
    }
}

fn to_dynamic<const N: usize>(m: &nalgebra::SMatrix<f64, N, N>) -> DMatrix<f64> {
    DMatrix::from_column_slice(N, N, m.as_slice())
}

fn check_pd4(m: &Matrix4, what: &'static str) -> Result<()> {
    if !m.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite(what));
    }
    if (m - m.transpose()).amax() > 1e-12 * m.amax().max(1.0) {
        return Err(Error::InvalidParameter {
            name: what,
            reason: "must be symmetric",
        });
    }
    let min = m.symmetric_eigenvalues().min();
    if !(min > 0.0) {
        return Err(Error::NotPositiveDefinite {
            what,
            min_eigenvalue: min,
        });
    }
    Ok(())
}

/// `A = [0 I; -K1 -K2]`, verified Hurwitz.
pub fn build_closed_loop(k1: &Matrix4, k2: &Matrix4) -> Result<Matrix8> {
    check_pd4(k1, "K1")?;
    check_pd4(k2, "K2")?;
    let mut a = Matrix8::zeros();
    a.fixed_view_mut::<4, 4>(0, 4).copy_from(&Matrix4::identity());
    a.fixed_view_mut::<4, 4>(4, 0).copy_from(&(-k1));
    a.fixed_view_mut::<4, 4>(4, 4).copy_from(&(-k2));
    let abscissa = spectral_abscissa(&to_dynamic(&a))?;
    if !(abscissa < 0.0) {
        return Err(Error::NotHurwitz {
            max_real_part: abscissa,
        });
    }
    Ok(a)
}

/// A synthesised mode: gains plus the solved Lyapunov matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerMode {
    pub config: ModeConfig,
    pub a: Matrix8,
    pub p: Matrix8,
    /// `lambda_min(Q) / lambda_max(P)`.
    pub rate: f64,
    pub p_min_eigenvalue: f64,
    pub p_max_eigenvalue: f64,
    pub q_min_eigenvalue: f64,
}

impl ControllerMode {
    pub fn synthesize(config: ModeConfig) -> Result<Self> {
        let d = &config.d_gain;
        if !d.iter().all(|v| v.is_finite() && *v > 0.0) {
            return Err(Error::InvalidParameter {
                name: "D",
                reason: "diagonal entries must be finite and positive",
            });
        }
        for (name, v) in [("eps", config.eps), ("eps_bar", config.eps_bar)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: "must be finite and positive",
                });
            }
        }
        let a = build_closed_loop(&config.k1, &config.k2)?;
        let p = solve_lyapunov(&to_dynamic(&a), &to_dynamic(&config.q))?;
        let p = Matrix8::from_column_slice(p.as_slice());
        let p_eigs = p.symmetric_eigenvalues();
        let q_min = config.q.symmetric_eigenvalues().min();
        let mode = Self {
            config,
            a,
            p,
            rate: q_min / p_eigs.max(),
            p_min_eigenvalue: p_eigs.min(),
            p_max_eigenvalue: p_eigs.max(),
            q_min_eigenvalue: q_min,
        };
        Ok(mode)
    }

    /// Enforces `alpha_i > rate / 2` for every leakage rate.
    pub fn check_leakage(&self, mode_index: usize) -> Result<()> {
        let floor = self.rate / 2.0;
        for (i, &alpha) in self.config.alpha.iter().enumerate() {
            if !(alpha.is_finite() && alpha > floor) {
                return Err(Error::LeakageTooSmall {
                    mode: mode_index,
                    index: i,
                    alpha,
                    floor,
                });
            }
        }
        Ok(())
    }

    pub fn lyapunov_residual(&self) -> f64 {
        lyapunov_residual(&to_dynamic(&self.a), &to_dynamic(&self.p), &to_dynamic(&self.config.q))
    }

    /// `0.5 xi^T P xi`.
    pub fn quadratic_lyapunov(&self, xi: &Vector8) -> f64 {
        0.5 * xi.dot(&(self.p * xi))
    }

    /// `Lambda xi = K1 e + K2 e_dot`.
    pub fn lambda_xi(&self, xi: &Vector8) -> Vector4 {
        self.config.k1 * xi.fixed_rows::<4>(0) + self.config.k2 * xi.fixed_rows::<4>(4)
    }
}

/// Live adaptive gains of one mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveGains {
    pub theta_hat: Vector4,
    pub zeta: f64,
    pub gamma: f64,
}

/// Number of scalar states per mode in the integrator.
pub const GAINS_PER_MODE: usize = 6;

impl AdaptiveGains {
    pub fn new(theta_hat: Vector4, zeta: f64, gamma: f64) -> Self {
        Self { theta_hat, zeta, gamma }
    }

    /// Initial conditions: `theta_hat > 0`, `zeta > eps_bar`, `gamma > eps`.
    pub fn check_initial(&self, config: &ModeConfig) -> Result<()> {
        if !self.theta_hat.iter().all(|v| v.is_finite() && *v > 0.0) {
            return Err(Error::InvalidParameter {
                name: "initial theta_hat",
                reason: "entries must be positive",
            });
        }
        if !(self.zeta.is_finite() && self.zeta > config.eps_bar) {
            return Err(Error::InvalidParameter {
                name: "initial zeta",
                reason: "must exceed eps_bar",
            });
        }
        if !(self.gamma.is_finite() && self.gamma > config.eps) {
            return Err(Error::InvalidParameter {
                name: "initial gamma",
                reason: "must exceed eps",
            });
        }
        Ok(())
    }

    pub fn to_array(&self) -> [f64; GAINS_PER_MODE] {
        let t = &self.theta_hat;
        [t[0], t[1], t[2], t[3], self.zeta, self.gamma]
    }

    pub fn from_slice(s: &[f64]) -> Self {
        Self {
            theta_hat: Vector4::new(s[0], s[1], s[2], s[3]),
            zeta: s[4],
            gamma: s[5],
        }
    }
}

/// Time derivatives of one mode's adaptive gains.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GainRates {
    pub theta_hat: Vector4,
    pub zeta: f64,
    pub gamma: f64,
}

/// Tracking errors for the active mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingError {
    pub e: Vector4,
    pub e_dot: Vector4,
    pub xi: Vector8,
    pub r: Vector4,
}

impl TrackingError {
    pub fn new(e: Vector4, e_dot: Vector4, p: &Matrix8) -> Self {
        let mut xi = Vector8::zeros();
        xi.fixed_rows_mut::<4>(0).copy_from(&e);
        xi.fixed_rows_mut::<4>(4).copy_from(&e_dot);
        let r = filtered_error(p, &xi);
        Self { e, e_dot, xi, r }
    }
}

/// `r = B^T P xi` with `B = [0; I]`: the bottom four rows of `P` applied to `xi`.
pub fn filtered_error(p: &Matrix8, xi: &Vector8) -> Vector4 {
    p.fixed_rows::<4>(4) * xi
}

/// `Y = (1, |xi|, |xi|^2, |q_bar_ddot|)`.
pub fn regressor(xi: &Vector8, q_bar_ddot: &Vector6) -> Vector4 {
    let n = xi.norm();
    Vector4::new(1.0, n, n * n, q_bar_ddot.norm())
}

/// `rho = Y^T theta_hat + zeta + gamma`.
pub fn gain_rho(gains: &AdaptiveGains, y: &Vector4) -> f64 {
    y.dot(&gains.theta_hat) + gains.zeta + gains.gamma
}

/// Robust term with a linear boundary layer of width `varpi`.
pub fn delta_tau(rho: f64, r: &Vector4, varpi: f64) -> Vector4 {
    let n = r.norm();
    if n >= varpi {
        r * (rho / n)
    } else {
        r * (rho / varpi)
    }
}

/// `tau = D (-Lambda xi - delta_tau + q_d_ddot)`.
pub fn control_tau(mode: &ControllerMode, xi: &Vector8, delta: &Vector4, q_d_ddot: &Vector4) -> Vector4 {
    (-mode.lambda_xi(xi) - delta + q_d_ddot).component_mul(&mode.config.d_gain)
}

/// Adaptive-law derivatives for every mode, written into `out`.
///
/// `r` is the filtered error of the active mode.
pub fn adaptive_derivatives_into(
    modes: &[ControllerMode],
    gains: &[AdaptiveGains],
    active: usize,
    r: &Vector4,
    xi: &Vector8,
    q_bar_ddot: &Vector6,
    out: &mut [GainRates],
) -> Result<()> {
    if active >= modes.len() {
        return Err(Error::ModeOutOfRange {
            index: active,
            modes: modes.len(),
        });
    }
    if gains.len() != modes.len() || out.len() != modes.len() {
        return Err(Error::DimensionMismatch {
            what: "adaptive gains",
            expected: modes.len(),
            found: gains.len().min(out.len()),
        });
    }
    let r_norm = r.norm();
    let xi_norm = xi.norm();
    let acc_norm = q_bar_ddot.norm();
    for (index, ((mode, g), rate)) in modes.iter().zip(gains).zip(out.iter_mut()).enumerate() {
        let cfg = &mode.config;
        *rate = if index == active {
            let drive = Vector4::new(r_norm, r_norm * xi_norm, r_norm * xi_norm * xi_norm, r_norm * acc_norm);
            GainRates {
                theta_hat: drive - cfg.alpha.component_mul(&g.theta_hat),
                zeta: -(1.0 + g.theta_hat[3] * acc_norm * r_norm) * g.zeta + cfg.eps_bar,
                gamma: 0.0,
            }
        } else {
            GainRates {
                theta_hat: Vector4::zeros(),
                zeta: 0.0,
                gamma: -(1.0 + 0.5 * mode.rate * g.theta_hat.norm_squared()) * g.gamma + cfg.eps,
            }
        };
    }
    Ok(())
}

pub fn adaptive_derivatives(
    modes: &[ControllerMode],
    gains: &[AdaptiveGains],
    active: usize,
    r: &Vector4,
    xi: &Vector8,
    q_bar_ddot: &Vector6,
) -> Result<Vec<GainRates>> {
    let mut out = alloc::vec![GainRates::default(); modes.len()];
    adaptive_derivatives_into(modes, gains, active, r, xi, q_bar_ddot, &mut out)?;
    Ok(out)
}
