//! CSV traces, plot data and the run summary.

use std::fmt::Write as _;
use std::io::{self, Write};

use quadswitch_core::sim::SimTrace;

use crate::report::{Report, FREEZE_TOL, RESIDUAL_TOL, TRANSIENT};

const RAD_TO_DEG: f64 = 180.0 / std::f64::consts::PI;

/// Seventeen significant digits, enough to round-trip an `f64`.
fn num(out: &mut String, v: f64) {
    let _ = write!(out, ",{v:.16e}");
}

/// Six significant digits, fixed-point where readable.
pub fn sig6(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let mag = v.abs().log10().floor() as i32;
    if (-4..6).contains(&mag) {
        format!("{v:.*}", (5 - mag).max(0) as usize)
    } else {
        format!("{v:.5e}")
    }
}

pub fn trace_header(modes: usize) -> String {
    let mut h = String::from(
        "t,z,phi,theta,psi,x,y,e_z,e_phi_deg,e_theta_deg,e_psi_deg,r0,r1,r2,r3,tau0,tau1,tau2,tau3,rho,sigma",
    );
    for m in 1..=modes {
        for i in 0..4 {
            let _ = write!(h, ",thetahat{m}{i}");
        }
        let _ = write!(h, ",zeta{m},gamma{m}");
    }
    h.push_str(",Vquad");
    h
}

/// Full trace, one row per grid point. `sigma` is 1-based.
pub fn write_trace_csv(mut w: impl Write, trace: &SimTrace) -> io::Result<()> {
    writeln!(w, "{}", trace_header(trace.modes.len()))?;
    let mut line = String::with_capacity(1024);
    for rec in &trace.records {
        line.clear();
        let _ = write!(line, "{:.16e}", rec.t);
        for v in rec.state.q.iter().chain(rec.state.q_u.iter()) {
            num(&mut line, *v);
        }
        let e = rec.e();
        num(&mut line, e[0]);
        for i in 1..4 {
            num(&mut line, e[i] * RAD_TO_DEG);
        }
        for v in rec.r.iter().chain(rec.tau.iter()) {
            num(&mut line, *v);
        }
        num(&mut line, rec.rho);
        let _ = write!(line, ",{}", rec.sigma + 1);
        for g in &rec.gains {
            for v in g.theta_hat.iter() {
                num(&mut line, *v);
            }
            num(&mut line, g.zeta);
            num(&mut line, g.gamma);
        }
        num(&mut line, rec.v_quad);
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Tracking errors; attitude in degrees.
pub fn write_errors_csv(mut w: impl Write, trace: &SimTrace) -> io::Result<()> {
    writeln!(w, "t,e_z,e_phi_deg,e_theta_deg,e_psi_deg")?;
    for rec in &trace.records {
        let e = rec.e();
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            rec.t,
            e[0],
            e[1] * RAD_TO_DEG,
            e[2] * RAD_TO_DEG,
            e[3] * RAD_TO_DEG
        )?;
    }
    Ok(())
}

/// Adaptive gains of one mode (zero-based index).
pub fn write_gains_csv(mut w: impl Write, trace: &SimTrace, mode: usize) -> io::Result<()> {
    writeln!(w, "t,thetahat0,thetahat1,thetahat2,thetahat3,zeta,gamma,active")?;
    for rec in &trace.records {
        let g = &rec.gains[mode];
        let th = &g.theta_hat;
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            rec.t,
            th[0],
            th[1],
            th[2],
            th[3],
            g.zeta,
            g.gamma,
            u8::from(rec.sigma == mode)
        )?;
    }
    Ok(())
}

pub fn write_switching_csv(mut w: impl Write, trace: &SimTrace) -> io::Result<()> {
    writeln!(w, "t,sigma")?;
    for rec in &trace.records {
        writeln!(w, "{:.16e},{}", rec.t, rec.sigma + 1)?;
    }
    Ok(())
}

pub fn write_disturbance_csv(mut w: impl Write, trace: &SimTrace) -> io::Result<()> {
    writeln!(w, "t,d_thrust,d_roll,d_pitch,d_yaw")?;
    for rec in &trace.records {
        let d = &rec.disturbance;
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            rec.t, d[0], d[1], d[2], d[3]
        )?;
    }
    Ok(())
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn vec4(v: &quadswitch_core::Vector4) -> String {
    format!("{} {} {} {}", sig6(v[0]), sig6(v[1]), sig6(v[2]), sig6(v[3]))
}

/// Plain-text summary. Depends only on the scenario and the trace.
pub fn summary(source: &str, trace: &SimTrace, report: &Report) -> String {
    let mut s = String::new();
    let th = &report.threshold;
    let adt = trace.schedule.adt;
    let end = trace.last().map_or(0.0, |r| r.t);
    let _ = writeln!(s, "scenario: {source}");
    let _ = writeln!(s, "modes: {}", trace.modes.len());
    let _ = writeln!(s, "step: {} s", trace.step);
    let _ = writeln!(s, "horizon: {end} s");
    let _ = writeln!(s, "varpi: {}", trace.varpi);
    let _ = writeln!(s, "mu: {}", sig6(th.mu));
    let _ = writeln!(s, "rate: {}", sig6(th.rate));
    let _ = writeln!(s, "kappa: {}", sig6(th.kappa));
    let _ = writeln!(s, "vartheta*: {} s", sig6(th.vartheta_star));
    let _ = writeln!(
        s,
        "tight mu: {}, tight vartheta*: {} s",
        sig6(th.tight_mu),
        sig6(th.tight_vartheta_star)
    );
    if let Some(a) = adt {
        let _ = writeln!(s, "declared vartheta: {} s, N0: {}", a.vartheta, a.chatter_bound);
        if a.vartheta <= th.vartheta_star {
            let _ = writeln!(s, "warning: declared vartheta does not exceed vartheta*");
        }
    }
    let _ = writeln!(s, "switches: {}", report.certificate.switches);
    let _ = writeln!(s, "ADT certified: yes");
    let _ = writeln!(
        s,
        "rms error [0, {end}] (z m; roll, pitch, yaw deg): {}",
        vec4(&report.rms_full)
    );
    if let (Some(rms), Some(max)) = (report.rms_settled, report.max_settled) {
        let _ = writeln!(s, "rms error after {TRANSIENT} s: {}", vec4(&rms));
        let _ = writeln!(s, "max |error| after {TRANSIENT} s: {}", vec4(&max));
    }
    let jumps_ok = report.jumps.iter().filter(|j| j.pass).count();
    let _ = writeln!(
        s,
        "lyapunov jump: {} ({jumps_ok}/{} switches)",
        verdict(report.jumps_pass()),
        report.jumps.len()
    );
    let f = &report.freeze;
    let _ = writeln!(
        s,
        "gain freeze: {} (active gamma drift {}, inactive drift {}, adapting intervals {}/{}, tol {FREEZE_TOL:e})",
        verdict(report.freeze_pass()),
        sig6(f.active_gamma_drift),
        sig6(f.inactive_drift),
        f.intervals_with_adaptation,
        f.intervals
    );
    let _ = writeln!(
        s,
        "error dynamics residual: {} ({} < {RESIDUAL_TOL:e})",
        verdict(report.residual_pass()),
        sig6(report.residual)
    );
    let _ = writeln!(
        s,
        "uncertainty envelope: {} (max slack {}, max ratio {})",
        verdict(report.envelope.holds()),
        sig6(report.envelope.max_slack),
        sig6(report.envelope.max_ratio)
    );
    let b = &report.bound;
    let _ = writeln!(
        s,
        "delta: {}, delta1: {}, level: {}",
        sig6(b.delta),
        sig6(report.delta1),
        sig6(b.level)
    );
    let _ = writeln!(s, "ultimate bound b: {}", sig6(b.b));
    let entry = report
        .uub
        .entry_time
        .map_or_else(|| "never".to_string(), |t| format!("{t} s"));
    let _ = writeln!(
        s,
        "UUB: {} (entry {entry}, sup |xi| after entry {})",
        verdict(report.uub.pass),
        sig6(report.uub.sup_xi_after_entry)
    );
    let _ = writeln!(s, "all monitors: {}", verdict(report.all_pass()));
    s
}
