//! Six-DoF quadrotor plant and its collocated four-DoF form.
//!
//! Actuated coordinates are `q = (z, roll, pitch, yaw)`, the non-actuated ones
//! `q_u = (x, y)`. Inputs are `tau = (thrust, roll torque, pitch torque, yaw torque)`.
//! The disturbance enters as a reduction of the effective input, `tau - d`,
//! which is the same as adding `d` to the left-hand side of the collocated
//! model `M q_ddot + C q_dot + G + H q_u_ddot + d = tau`.

use core::f64::consts::FRAC_PI_2;

use crate::disturbance::DisturbanceSpec;
use crate::{Error, Matrix3, Matrix4, Matrix4x2, Result, Vector2, Vector3, Vector4, Vector6};

pub const STANDARD_GRAVITY: f64 = 9.81;

/// Roll and pitch must stay strictly inside `±ATTITUDE_LIMIT`.
pub const ATTITUDE_LIMIT: f64 = FRAC_PI_2 - 1e-3;

/// Physical constants of one switched mode.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsystemParams {
    pub mass: f64,
    pub ixx: f64,
    pub iyy: f64,
    pub izz: f64,
    pub arm_length: f64,
    pub gravity: f64,
    pub disturbance: DisturbanceSpec,
}

impl SubsystemParams {
    pub fn new(mass: f64, ixx: f64, iyy: f64, izz: f64, arm_length: f64) -> Result<Self> {
        let params = Self {
            mass,
            ixx,
            iyy,
            izz,
            arm_length,
            gravity: STANDARD_GRAVITY,
            disturbance: DisturbanceSpec::none(),
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_disturbance(mut self, disturbance: DisturbanceSpec) -> Self {
        self.disturbance = disturbance;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("mass", self.mass),
            ("ixx", self.ixx),
            ("iyy", self.iyy),
            ("izz", self.izz),
            ("arm length", self.arm_length),
        ];
        for (name, value) in named {
            if !value.is_finite() {
                return Err(Error::NonFinite(name));
            }
            if value <= 0.0 {
                return Err(Error::InvalidParameter {
                    name,
                    reason: "must be strictly positive",
                });
            }
        }
        // Zero gravity is allowed for equilibrium tests.
        if !(self.gravity.is_finite() && self.gravity >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "gravity",
                reason: "must be finite and non-negative",
            });
        }
        self.disturbance.validate()
    }

    /// Closed-form constants with `|C| <= c_bar |q_dot|`, `|G| <= g_bar`, `|H| <= h_bar`.
    ///
    /// Each row of `C` carries one rate-weighted inertia difference in a
    /// distinct column, so its spectral norm is the largest such coefficient.
    /// `H` has a single non-zero row equal to `m` times part of a unit vector.
    pub fn uncertainty_bounds(&self) -> UncertaintyBounds {
        let l = self.arm_length;
        let roll_pitch = libm::fmax(libm::fabs(self.izz - self.iyy), libm::fabs(self.ixx - self.izz)) / l;
        UncertaintyBounds {
            c_bar: roll_pitch + libm::fabs(self.iyy - self.ixx),
            g_bar: self.mass * self.gravity,
            h_bar: core::f64::consts::SQRT_2 * self.mass,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintyBounds {
    pub c_bar: f64,
    pub g_bar: f64,
    pub h_bar: f64,
}

/// Full plant state plus the most recent accelerations of `q_bar = [q; q_u]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantState {
    pub q: Vector4,
    pub q_dot: Vector4,
    pub q_u: Vector2,
    pub q_u_dot: Vector2,
    /// `(z, roll, pitch, yaw, x, y)` accelerations available for feedback.
    pub q_ddot_bar: Vector6,
}

impl Default for PlantState {
    fn default() -> Self {
        Self {
            q: Vector4::zeros(),
            q_dot: Vector4::zeros(),
            q_u: Vector2::zeros(),
            q_u_dot: Vector2::zeros(),
            q_ddot_bar: Vector6::zeros(),
        }
    }
}

impl PlantState {
    pub fn at_rest(q: Vector4, q_u: Vector2) -> Self {
        Self {
            q,
            q_u,
            ..Self::default()
        }
    }

    pub fn roll(&self) -> f64 {
        self.q[1]
    }

    pub fn pitch(&self) -> f64 {
        self.q[2]
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().all(|v| v.is_finite())
            && self.q_dot.iter().all(|v| v.is_finite())
            && self.q_u.iter().all(|v| v.is_finite())
            && self.q_u_dot.iter().all(|v| v.is_finite())
            && self.q_ddot_bar.iter().all(|v| v.is_finite())
    }

    /// Finite entries and roll/pitch inside the singularity guard.
    pub fn check(&self) -> Result<()> {
        if !self.is_finite() {
            return Err(Error::NonFinite("plant state"));
        }
        if libm::fabs(self.roll()) >= ATTITUDE_LIMIT || libm::fabs(self.pitch()) >= ATTITUDE_LIMIT {
            return Err(Error::AttitudeSingularity {
                roll: self.roll(),
                pitch: self.pitch(),
            });
        }
        Ok(())
    }
}

/// Accelerations produced by the six-DoF plant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Accelerations {
    /// `(x, y, z)` accelerations in the earth frame.
    pub linear: Vector3,
    /// `(roll, pitch, yaw)` angular accelerations.
    pub angular: Vector3,
}

impl Accelerations {
    /// `(x_ddot, y_ddot, z_ddot, roll_ddot, pitch_ddot, yaw_ddot)`.
    pub fn to_vector(&self) -> Vector6 {
        Vector6::new(
            self.linear[0],
            self.linear[1],
            self.linear[2],
            self.angular[0],
            self.angular[1],
            self.angular[2],
        )
    }

    pub fn q_ddot(&self) -> Vector4 {
        Vector4::new(self.linear[2], self.angular[0], self.angular[1], self.angular[2])
    }

    pub fn q_u_ddot(&self) -> Vector2 {
        Vector2::new(self.linear[0], self.linear[1])
    }

    /// Accelerations of `q_bar = [q; q_u]`, i.e. `(z, roll, pitch, yaw, x, y)`.
    pub fn q_bar_ddot(&self) -> Vector6 {
        Vector6::new(
            self.linear[2],
            self.angular[0],
            self.angular[1],
            self.angular[2],
            self.linear[0],
            self.linear[1],
        )
    }
}

/// Earth-to-body rotation for `(roll, pitch, yaw)`.
///
/// Row 1 is `(c_yaw c_pitch, s_yaw c_pitch, -s_pitch)`; the body thrust axis in
/// the earth frame is the third row.
pub fn rotation_matrix(roll: f64, pitch: f64, yaw: f64) -> Result<Matrix3> {
    if !(roll.is_finite() && pitch.is_finite() && yaw.is_finite()) {
        return Err(Error::NonFinite("rotation angles"));
    }
    let (sf, cf) = (libm::sin(roll), libm::cos(roll));
    let (st, ct) = (libm::sin(pitch), libm::cos(pitch));
    let (sp, cp) = (libm::sin(yaw), libm::cos(yaw));
    #[rustfmt::skip]
    let r = Matrix3::new(
        cp * ct,                sp * ct,                -st,
        cp * st * sf - sp * cf, sp * st * sf + cp * cf, sf * ct,
        cp * st * cf + sp * sf, sp * st * cf - cp * sf, ct * cf,
    );
    Ok(r)
}

/// Six-DoF accelerations under input `tau` and disturbance `d` (applied as `tau - d`).
pub fn plant_accels(
    state: &PlantState,
    tau: &Vector4,
    params: &SubsystemParams,
    disturbance: &Vector4,
) -> Result<Accelerations> {
    state.check()?;
    let eff = tau - disturbance;
    if !eff.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("control input"));
    }
    let r = rotation_matrix(state.q[1], state.q[2], state.q[3])?;
    let thrust_axis = r.row(2).transpose();
    let linear = thrust_axis * (eff[0] / params.mass) - Vector3::new(0.0, 0.0, params.gravity);

    let l = params.arm_length;
    let (roll_rate, pitch_rate, yaw_rate) = (state.q_dot[1], state.q_dot[2], state.q_dot[3]);
    let angular = Vector3::new(
        (eff[1] - (params.izz - params.iyy) / l * pitch_rate * yaw_rate) / (params.ixx / l),
        (eff[2] - (params.ixx - params.izz) / l * roll_rate * yaw_rate) / (params.iyy / l),
        (eff[3] - (params.iyy - params.ixx) * pitch_rate * roll_rate) / params.izz,
    );
    Ok(Accelerations { linear, angular })
}

/// Collocated-form matrices evaluated at one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollocatedMatrices {
    pub m: Matrix4,
    pub c: Matrix4,
    pub g: Vector4,
    pub h: Matrix4x2,
}

impl CollocatedMatrices {
    /// `M q_ddot + C q_dot + G + H q_u_ddot`.
    pub fn apply(&self, q_ddot: &Vector4, q_dot: &Vector4, q_u_ddot: &Vector2) -> Vector4 {
        self.m * q_ddot + self.c * q_dot + self.g + self.h * q_u_ddot
    }
}

pub fn collocated_matrices(state: &PlantState, params: &SubsystemParams) -> Result<CollocatedMatrices> {
    state.check()?;
    let (sf, cf) = (libm::sin(state.q[1]), libm::cos(state.q[1]));
    let (st, ct) = (libm::sin(state.q[2]), libm::cos(state.q[2]));
    let (sp, cp) = (libm::sin(state.q[3]), libm::cos(state.q[3]));
    let (m, l) = (params.mass, params.arm_length);
    let (ixx, iyy, izz) = (params.ixx, params.iyy, params.izz);

    let mass = Matrix4::from_diagonal(&Vector4::new(m * ct * cf, ixx / l, iyy / l, izz));

    let mut c = Matrix4::zeros();
    c[(1, 3)] = (izz - iyy) / l * state.q_dot[2];
    c[(2, 1)] = (ixx - izz) / l * state.q_dot[3];
    c[(3, 2)] = (iyy - ixx) * state.q_dot[1];

    let g = Vector4::new(m * params.gravity * ct * cf, 0.0, 0.0, 0.0);

    let mut h = Matrix4x2::zeros();
    h[(0, 0)] = m * (cp * st * cf + sp * sf);
    h[(0, 1)] = m * (sp * st * cf - cp * sf);

    Ok(CollocatedMatrices { m: mass, c, g, h })
}

/// Lumped uncertainty `chi = -D^{-1} E` with
/// `E = (M - D) q_ddot + C q_dot + G + H q_u_ddot + d`, from true parameters.
pub fn lumped_uncertainty(
    state: &PlantState,
    accel: &Accelerations,
    params: &SubsystemParams,
    disturbance: &Vector4,
    d_gain: &Vector4,
) -> Result<Vector4> {
    let mats = collocated_matrices(state, params)?;
    let q_ddot = accel.q_ddot();
    let d_mat = Matrix4::from_diagonal(d_gain);
    let e = (mats.m - d_mat) * q_ddot + mats.c * state.q_dot + mats.g + mats.h * accel.q_u_ddot() + disturbance;
    Ok(-e.component_div(d_gain))
}

/// `|D^{-1} M(q) - I|` at one state (spectral norm of a diagonal matrix).
pub fn mass_mismatch_at(state: &PlantState, params: &SubsystemParams, d_gain: &Vector4) -> Result<f64> {
    let mats = collocated_matrices(state, params)?;
    Ok((0..4)
        .map(|i| libm::fabs(mats.m[(i, i)] / d_gain[i] - 1.0))
        .fold(0.0, libm::fmax))
}

/// Supremum of `|D^{-1} M(q) - I|` over the valid attitude region.
///
/// Only the thrust entry `m cos(roll) cos(pitch) / D_z` depends on the state and
/// it sweeps `(0, m / D_z]`.
pub fn mass_mismatch_sup(params: &SubsystemParams, d_gain: &Vector4) -> f64 {
    let thrust = libm::fmax(1.0, libm::fabs(params.mass / d_gain[0] - 1.0));
    let roll = libm::fabs(params.ixx / params.arm_length / d_gain[1] - 1.0);
    let pitch = libm::fabs(params.iyy / params.arm_length / d_gain[2] - 1.0);
    let yaw = libm::fabs(params.izz / d_gain[3] - 1.0);
    [thrust, roll, pitch, yaw].into_iter().fold(0.0, libm::fmax)
}

/// Everything the `Theta*` formulas need for one mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeInputs {
    pub d_gain: Vector4,
    pub bounds: UncertaintyBounds,
    /// `|D^{-1} M - I|` (a supremum for the oracle).
    pub mass_mismatch: f64,
    /// `sup |q_d_dot|`.
    pub desired_velocity_bound: f64,
    /// `d_bar`.
    pub disturbance_bound: f64,
}

/// `Theta* = (theta0*, theta1*, theta2*, theta3*)` from its four defining formulas.
pub fn theta_star(inputs: &EnvelopeInputs) -> Vector4 {
    let d_inv = 1.0 / inputs.d_gain.min();
    let UncertaintyBounds { c_bar, g_bar, h_bar } = inputs.bounds;
    let v = inputs.desired_velocity_bound;
    Vector4::new(
        d_inv * (g_bar + inputs.disturbance_bound + c_bar * v * v),
        2.0 * c_bar * d_inv * v,
        c_bar * d_inv,
        inputs.mass_mismatch + d_inv * h_bar,
    )
}

/// True-parameter `Theta*` for one mode; used only by verification monitors.
///
/// `desired_bounds` is `(sup |q_d_dot|, sup |q_d_ddot|)`. The acceleration bound
/// does not enter the formulas but is accepted so callers pass the full
/// trajectory envelope.
pub fn theta_star_oracle(
    params: &SubsystemParams,
    d_gain: &Vector4,
    desired_bounds: (f64, f64),
    disturbance_bound: f64,
) -> Result<Vector4> {
    params.validate()?;
    if !d_gain.iter().all(|&v| v.is_finite() && v > 0.0) {
        return Err(Error::InvalidParameter {
            name: "D",
            reason: "diagonal entries must be finite and positive",
        });
    }
    if !(desired_bounds.0.is_finite() && desired_bounds.1.is_finite() && disturbance_bound.is_finite()) {
        return Err(Error::NonFinite("envelope bounds"));
    }
    Ok(theta_star(&EnvelopeInputs {
        d_gain: *d_gain,
        bounds: params.uncertainty_bounds(),
        mass_mismatch: mass_mismatch_sup(params, d_gain),
        desired_velocity_bound: desired_bounds.0,
        disturbance_bound,
    }))
}
