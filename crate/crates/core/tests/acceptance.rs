//! Acceptance suite. Each test prints one `PASS` or `FAIL` line for its
//! criterion and then asserts it. All run-based criteria share one
//! reproduction run of the reference payload-lifting scenario.

use std::io::Write;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, Matrix2};
use quadswitch_core::controller::ControllerMode;
use quadswitch_core::dynamics::{
    collocated_matrices, plant_accels, rotation_matrix, theta_star_oracle, PlantState, SubsystemParams,
};
use quadswitch_core::lyapunov::{is_hurwitz, lyapunov_residual, solve_lyapunov};
use quadswitch_core::monitor::{
    envelope_monitor, estimate_delta1, lyapunov_jump_monitor, ultimate_bound, uub_verdict, BoundInputs,
};
use quadswitch_core::reference;
use quadswitch_core::sim::{simulate, Scenario, SimTrace};
use quadswitch_core::switching::{adt_certify, adt_threshold_for_modes, SwitchEvent, SwitchSchedule};
use quadswitch_core::{Matrix4, Matrix8, Vector2, Vector4, Vector6};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Errors before this time count as transient.
const TRANSIENT: f64 = 20.0;
/// Reported dwell-time threshold for the reference gains (s).
const REPORTED_VARTHETA_STAR: f64 = 6.57;

fn verdict(id: &str, pass: bool, detail: &str) {
    // Written past the test harness capture so every line shows up.
    let mut out = std::io::stdout().lock();
    let _ = writeln!(
        out,
        "acceptance {id}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
}

struct Repro {
    scenario: Scenario,
    trace: SimTrace,
    elapsed: Duration,
}

fn repro() -> &'static Repro {
    static RUN: OnceLock<Repro> = OnceLock::new();
    RUN.get_or_init(|| {
        let scenario = reference::scenario();
        let start = Instant::now();
        let trace = simulate(&scenario).expect("reference scenario completes");
        Repro {
            scenario,
            trace,
            elapsed: start.elapsed(),
        }
    })
}

/// `P` for the scalar pair `A = [[0, 1], [-k1, -k2]]`, `Q = q I`, solved by hand.
fn block_p(k1: f64, k2: f64, q: f64) -> Matrix2<f64> {
    let p12 = q / (2.0 * k1);
    let p22 = (p12 + q / 2.0) / k2;
    let p11 = k1 * p22 + k2 * p12;
    Matrix2::new(p11, p12, p12, p22)
}

fn sym2_eigen(p: &Matrix2<f64>) -> (f64, f64) {
    let mid = 0.5 * (p[(0, 0)] + p[(1, 1)]);
    let rad = (0.25 * (p[(0, 0)] - p[(1, 1)]).powi(2) + p[(0, 1)] * p[(0, 1)]).sqrt();
    (mid - rad, mid + rad)
}

/// The full 8x8 `P` built from the 2x2 block: `[[p11 I, p12 I], [p12 I, p22 I]]`.
fn block_p8(k1: f64, k2: f64, q: f64) -> Matrix8 {
    let b = block_p(k1, k2, q);
    let mut p = Matrix8::zeros();
    for i in 0..4 {
        p[(i, i)] = b[(0, 0)];
        p[(i, i + 4)] = b[(0, 1)];
        p[(i + 4, i)] = b[(1, 0)];
        p[(i + 4, i + 4)] = b[(1, 1)];
    }
    p
}

/// `(mu, rate, kappa, vartheta*)` from the 2x2 blocks alone.
fn threshold_oracle() -> (f64, f64, f64, f64) {
    let (mut hi, mut lo, mut rate) = (f64::NEG_INFINITY, f64::INFINITY, f64::INFINITY);
    for &(k1, k2) in &reference::GAINS {
        let (min, max) = sym2_eigen(&block_p(k1, k2, reference::Q_SCALE));
        hi = hi.max(max);
        lo = lo.min(min);
        rate = rate.min(reference::Q_SCALE / max);
    }
    let mu = hi / lo;
    let kappa = reference::KAPPA_FRACTION * rate;
    (mu, rate, kappa, mu.ln() / kappa)
}

fn reference_modes() -> Vec<ControllerMode> {
    reference::mode_configs()
        .into_iter()
        .map(|c| ControllerMode::synthesize(c).unwrap())
        .collect()
}

fn theta_star_list(scenario: &Scenario) -> Vec<Vector4> {
    let bounds = (
        scenario.trajectory.velocity_bound(),
        scenario.trajectory.acceleration_bound(),
    );
    scenario
        .subsystems
        .iter()
        .zip(&scenario.modes)
        .map(|(params, mode)| theta_star_oracle(params, &mode.d_gain, bounds, params.disturbance.bound()).unwrap())
        .collect()
}

#[test]
fn criterion_01_adt_threshold() {
    let start = Instant::now();
    let th = adt_threshold_for_modes(&reference_modes(), reference::KAPPA_FRACTION).unwrap();
    let elapsed = start.elapsed();
    let (mu, rate, kappa, vs) = threshold_oracle();
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    let oracle_err = [
        rel(th.mu, mu),
        rel(th.rate, rate),
        rel(th.kappa, kappa),
        rel(th.vartheta_star, vs),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let reported_gap = rel(REPORTED_VARTHETA_STAR, vs);
    let pass = oracle_err <= 1e-9 && reported_gap <= 0.05 && elapsed < Duration::from_secs(1);
    verdict(
        "1 adt threshold",
        pass,
        &format!(
            "vartheta* = {:.6} s, oracle {vs:.6} s, max rel err {oracle_err:.1e} <= 1e-9; reported 6.57 s differs by {:.2}% <= 5%; {:.1} ms < 1 s",
            th.vartheta_star,
            100.0 * reported_gap,
            elapsed.as_secs_f64() * 1e3
        ),
    );
    assert!(pass);
}

fn random_spd4(rng: &mut StdRng, lo: f64, hi: f64) -> Matrix4 {
    let b = Matrix4::from_fn(|_, _| rng.random_range(-1.0..1.0));
    let (u, _) = (b * b.transpose()).symmetric_eigen().eigenvectors.qr().unpack();
    let d = Vector4::from_fn(|_, _| rng.random_range(lo..hi));
    u * Matrix4::from_diagonal(&d) * u.transpose()
}

#[test]
fn criterion_02_lyapunov_solver() {
    let mut worst_residual: f64 = 0.0;
    let mut worst_oracle: f64 = 0.0;
    for mode in reference_modes() {
        worst_residual = worst_residual.max(mode.lyapunov_residual());
        let k1 = mode.config.k1[(0, 0)];
        let k2 = mode.config.k2[(0, 0)];
        let expected = block_p8(k1, k2, reference::Q_SCALE);
        worst_oracle = worst_oracle.max((mode.p - expected).abs().max());
    }
    let mut rng = StdRng::seed_from_u64(0x51ab);
    for _ in 0..100 {
        let k1 = random_spd4(&mut rng, 1.0, 200.0);
        let k2 = random_spd4(&mut rng, 1.0, 200.0);
        let mut a = DMatrix::zeros(8, 8);
        a.view_mut((0, 4), (4, 4)).copy_from(&Matrix4::identity());
        a.view_mut((4, 0), (4, 4)).copy_from(&(-k1));
        a.view_mut((4, 4), (4, 4)).copy_from(&(-k2));
        assert!(is_hurwitz(&a).unwrap());
        let g = DMatrix::from_fn(8, 8, |_, _| rng.random_range(-1.0..1.0));
        let q = &g * g.transpose() + DMatrix::identity(8, 8) * 0.1;
        let p = solve_lyapunov(&a, &q).unwrap();
        worst_residual = worst_residual.max(lyapunov_residual(&a, &p, &q));
    }
    // Scalar gains reduce to decoupled 2x2 blocks with a closed form.
    for &(k1, k2, q) in &[
        (1.0, 1.0, 1.0),
        (3.0, 0.5, 2.0),
        (120.0, 100.0, 2.0),
        (400.0, 30.0, 7.5),
    ] {
        let mut a = DMatrix::zeros(8, 8);
        a.view_mut((0, 4), (4, 4)).copy_from(&Matrix4::identity());
        a.view_mut((4, 0), (4, 4)).copy_from(&(Matrix4::identity() * -k1));
        a.view_mut((4, 4), (4, 4)).copy_from(&(Matrix4::identity() * -k2));
        let p = solve_lyapunov(&a, &(DMatrix::identity(8, 8) * q)).unwrap();
        let expected = block_p8(k1, k2, q);
        let diff = (0..8)
            .flat_map(|i| (0..8).map(move |j| (i, j)))
            .map(|(i, j)| (p[(i, j)] - expected[(i, j)]).abs())
            .fold(0.0, f64::max);
        worst_oracle = worst_oracle.max(diff);
    }
    let pass = worst_residual < 1e-10 && worst_oracle <= 1e-12;
    verdict(
        "2 lyapunov solver",
        pass,
        &format!("max residual {worst_residual:.2e} < 1e-10 over 3 + 100 systems; max |P - oracle| {worst_oracle:.2e} <= 1e-12"),
    );
    assert!(pass);
}

#[test]
fn criterion_03a_bounded_errors() {
    let run = repro();
    let recs = &run.trace.records;
    let finite = recs.iter().all(|r| r.xi.iter().all(|v| v.is_finite()));
    let complete = recs.len() == run.scenario.steps() + 1;
    let max_xi = recs.iter().map(|r| r.xi.norm()).fold(0.0, f64::max);
    let pass = finite && complete && max_xi < 10.0;
    verdict(
        "3a bounded errors",
        pass,
        &format!(
            "no abort over {} s, {} records, sup |xi| = {max_xi:.4}",
            reference::HORIZON,
            recs.len()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_03b_altitude_band() {
    let run = repro();
    let (t, ez) = run
        .trace
        .records
        .iter()
        .filter(|r| r.t > TRANSIENT)
        .map(|r| (r.t, r.xi[0].abs()))
        .fold((0.0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    let pass = ez <= 0.05;
    verdict(
        "3b altitude error",
        pass,
        &format!("max |e_z| after {TRANSIENT} s = {ez:.4} m at t = {t:.3} s, limit 0.05 m"),
    );
    assert!(pass, "max |e_z| {ez} after the transient");
}

#[test]
fn criterion_03c_attitude_band() {
    let run = repro();
    let worst = run
        .trace
        .records
        .iter()
        .filter(|r| r.t > TRANSIENT)
        .map(|r| (1..4).map(|i| r.xi[i].abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max)
        .to_degrees();
    let pass = worst < 5.0;
    verdict(
        "3c attitude error",
        pass,
        &format!("max attitude error after {TRANSIENT} s = {worst:.4} deg, limit 5 deg"),
    );
    assert!(pass);
}

#[test]
fn criterion_03d_runtime() {
    let run = repro();
    let pass = run.elapsed < Duration::from_secs(30);
    verdict(
        "3d runtime",
        pass,
        &format!(
            "{} s at h = {} s took {:.2} s, limit 30 s",
            reference::HORIZON,
            reference::STEP,
            run.elapsed.as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_04_gain_update_semantics() {
    let trace = &repro().trace;
    let recs = &trace.records;
    let mut bounds: Vec<usize> = vec![0];
    bounds.extend(trace.switch_indices());
    bounds.push(recs.len());
    let (mut frozen_drift, mut intervals, mut adapting): (f64, usize, usize) = (0.0, 0, 0);
    let mut min_move = f64::INFINITY;
    for w in bounds.windows(2) {
        // Gains flow through the last record of the interval into the next one.
        let (a, b) = (w[0], (w[1]).min(recs.len() - 1));
        let sigma = recs[a].sigma;
        let (g0, g1) = (&recs[a].gains, &recs[b].gains);
        for m in 0..g0.len() {
            if m == sigma {
                frozen_drift = frozen_drift.max((g1[m].gamma - g0[m].gamma).abs());
            } else {
                frozen_drift = frozen_drift.max((g1[m].theta_hat - g0[m].theta_hat).amax());
                frozen_drift = frozen_drift.max((g1[m].zeta - g0[m].zeta).abs());
            }
        }
        intervals += 1;
        // "Evolves" means moving by more than the constancy tolerance. Late in
        // the run zeta sits near its floor and moves by ~1e-9 only.
        let (mut dtheta, mut dzeta): (f64, f64) = (0.0, 0.0);
        for r in &recs[a..=b] {
            dtheta = dtheta.max((r.gains[sigma].theta_hat - g0[sigma].theta_hat).amax());
            dzeta = dzeta.max((r.gains[sigma].zeta - g0[sigma].zeta).abs());
        }
        min_move = min_move.min(dtheta.min(dzeta));
        adapting += usize::from(dtheta > 1e-12 && dzeta > 1e-12);
    }
    let pass = frozen_drift <= 1e-12 && adapting == intervals;
    verdict(
        "4 gain update semantics",
        pass,
        &format!("frozen-gain drift {frozen_drift:.1e} <= 1e-12; active theta and zeta move by > 1e-12 in {adapting}/{intervals} intervals (smallest move {min_move:.1e})"),
    );
    assert!(pass);
}

#[test]
fn criterion_05_lyapunov_jump() {
    let trace = &repro().trace;
    let (mu, ..) = threshold_oracle();
    let p: Vec<Matrix8> = reference::GAINS
        .iter()
        .map(|&(k1, k2)| block_p8(k1, k2, reference::Q_SCALE))
        .collect();
    let mut worst: f64 = 0.0;
    let mut ok = 0;
    let idx = trace.switch_indices();
    for &k in &idx {
        let rec = &trace.records[k];
        let from = trace.records[k - 1].sigma;
        let xi = rec.xi;
        let v_minus = 0.5 * xi.dot(&(p[from] * xi));
        let v_plus = 0.5 * xi.dot(&(p[rec.sigma] * xi));
        worst = worst.max(v_plus / v_minus);
        ok += usize::from(v_plus <= mu * v_minus * (1.0 + 1e-9));
    }
    let library = lyapunov_jump_monitor(trace, &trace.modes.iter().map(|m| m.p).collect::<Vec<_>>());
    let pass = ok == idx.len() && !idx.is_empty() && library.iter().all(|j| j.pass) && library.len() == idx.len();
    verdict(
        "5 lyapunov jump",
        pass,
        &format!(
            "{ok}/{} switches satisfy V+ <= mu V- (1 + 1e-9); largest V+/V- = {worst:.4}, mu = {mu:.3}",
            idx.len()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_06_uncertainty_envelope() {
    let run = repro();
    let theta = theta_star_list(&run.scenario);
    let report = envelope_monitor(&run.trace, &theta);
    let shrunk: Vec<Vector4> = theta.iter().map(|t| t / 10.0).collect();
    let control = envelope_monitor(&run.trace, &shrunk);
    let pass = report.max_slack <= 0.0 && !control.holds();
    verdict(
        "6 uncertainty envelope",
        pass,
        &format!(
            "max slack {:.4e} <= 0 with Theta*; 10x-shrunk control max slack {:.4e} ({}); max |chi| / Y^T Theta* = {:.3e}",
            report.max_slack,
            control.max_slack,
            if control.holds() { "no violation reported" } else { "violation reported" },
            report.max_ratio
        ),
    );
    assert!(report.max_slack <= 0.0, "envelope violated");
    assert!(
        !control.holds(),
        "10x-shrunk envelope still holds: max ratio {}",
        report.max_ratio
    );
}

#[test]
fn criterion_06_envelope_control_past_the_observed_ratio() {
    // The monitor must flag an envelope shrunk below the observed maximum ratio.
    let run = repro();
    let theta = theta_star_list(&run.scenario);
    let ratio = envelope_monitor(&run.trace, &theta).max_ratio;
    let shrink = 0.5 * ratio;
    let control = envelope_monitor(&run.trace, &theta.iter().map(|t| t * shrink).collect::<Vec<_>>());
    let pass = !control.holds() && control.max_slack > 0.0;
    verdict(
        "6 (supplementary) shrunk-envelope control",
        pass,
        &format!(
            "Theta* scaled by {shrink:.3e} gives max slack {:.4e} > 0",
            control.max_slack
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_07_ultimate_bound() {
    let run = repro();
    let trace = &run.trace;
    let (_, _, kappa, _) = threshold_oracle();
    let bound = ultimate_bound(
        &trace.modes,
        &BoundInputs {
            theta_star: theta_star_list(&run.scenario),
            initial_gains: run.scenario.initial_gains.clone(),
            kappa,
            chatter_bound: reference::CHATTER_BOUND,
            varpi: trace.varpi,
            delta1: estimate_delta1(trace),
        },
    )
    .unwrap();
    let sup = trace
        .records
        .iter()
        .filter(|r| r.t > TRANSIENT)
        .map(|r| r.xi.norm())
        .fold(0.0, f64::max);
    let uub = uub_verdict(trace, &bound, 1.0);
    let pass = bound.b > sup && uub.pass;
    verdict(
        "7 ultimate bound",
        pass,
        &format!(
            "b = {:.4e} > sup |xi| after {TRANSIENT} s = {sup:.4}; UUB verdict {}",
            bound.b,
            if uub.pass { "pass" } else { "fail" }
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_08_adt_certifier() {
    const GRID: usize = 1000;
    let mut rng = StdRng::seed_from_u64(0xad7);
    let (mut disagreements, mut violations) = (0, 0);
    for _ in 0..1000 {
        let n = rng.random_range(0..=20usize);
        let mut ms: Vec<usize> = (0..n).map(|_| rng.random_range(1..=GRID)).collect();
        ms.sort_unstable();
        ms.dedup();
        let vartheta = rng.random_range(0.02..0.4);
        let n0 = rng.random_range(0.5..4.0);
        let mut events = vec![SwitchEvent { time: 0.0, mode: 0 }];
        events.extend(ms.iter().enumerate().map(|(k, &m)| SwitchEvent {
            time: m as f64 * 1e-3,
            mode: (k + 1) % 2,
        }));
        let schedule = SwitchSchedule::new(0.0, GRID as f64 * 1e-3, events, None).unwrap();
        let fast = adt_certify(&schedule, vartheta, n0).is_ok();

        // Every closed window [a, b] on the 1 ms grid.
        let mut upto = vec![0usize; GRID + 1];
        for &m in &ms {
            upto[m] += 1;
        }
        for k in 1..=GRID {
            upto[k] += upto[k - 1];
        }
        let mut dense = true;
        'outer: for a in 0..=GRID {
            let before = if a == 0 { 0 } else { upto[a - 1] };
            for (b, &through_b) in upto.iter().enumerate().skip(a) {
                let count = (through_b - before) as f64;
                if count > n0 + (b - a) as f64 * 1e-3 / vartheta {
                    dense = false;
                    break 'outer;
                }
            }
        }
        violations += usize::from(!dense);
        disagreements += usize::from(fast != dense);
    }
    let pass = disagreements == 0;
    verdict(
        "8 adt certifier",
        pass,
        &format!(
            "{disagreements} disagreements with the 1 ms brute force over 1000 schedules ({violations} violating)"
        ),
    );
    assert!(pass);
}

fn random_params(rng: &mut StdRng) -> SubsystemParams {
    SubsystemParams::new(
        rng.random_range(0.5..3.0),
        rng.random_range(1e-5..0.05),
        rng.random_range(1e-5..0.05),
        rng.random_range(1e-5..0.01),
        rng.random_range(0.1..0.4),
    )
    .unwrap()
}

#[test]
fn criterion_09_plant_invariants() {
    let mut rng = StdRng::seed_from_u64(0x9);
    let mut orth: f64 = 0.0;
    let mut det: f64 = 0.0;
    for _ in 0..10_000 {
        let r = rotation_matrix(
            rng.random_range(-1.5..1.5),
            rng.random_range(-1.5..1.5),
            rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
        )
        .unwrap();
        orth = orth.max((r.transpose() * r - nalgebra::Matrix3::identity()).amax());
        det = det.max((r.determinant() - 1.0).abs());
    }
    let mut form: f64 = 0.0;
    let fixed = reference::subsystems();
    for k in 0..1000 {
        let params = if k < 300 {
            fixed[k % 3].clone()
        } else {
            random_params(&mut rng)
        };
        let state = PlantState {
            q: Vector4::new(
                rng.random_range(-5.0..5.0),
                rng.random_range(-1.4..1.4),
                rng.random_range(-1.4..1.4),
                rng.random_range(-3.0..3.0),
            ),
            q_dot: Vector4::from_fn(|_, _| rng.random_range(-2.0..2.0)),
            q_u: Vector2::from_fn(|_, _| rng.random_range(-5.0..5.0)),
            q_u_dot: Vector2::from_fn(|_, _| rng.random_range(-2.0..2.0)),
            q_ddot_bar: Vector6::zeros(),
        };
        let tau = Vector4::new(
            rng.random_range(0.0..40.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-0.1..0.1),
        );
        let d = Vector4::from_fn(|_, _| rng.random_range(-0.1..0.1));
        let acc = plant_accels(&state, &tau, &params, &d).unwrap();
        let lhs = collocated_matrices(&state, &params)
            .unwrap()
            .apply(&acc.q_ddot(), &state.q_dot, &acc.q_u_ddot());
        form = form.max((lhs - (tau - d)).amax());
    }
    let pass = orth <= 1e-10 && det <= 1e-10 && form < 1e-8;
    verdict(
        "9 plant invariants",
        pass,
        &format!("max |R^T R - I| {orth:.1e}, max |det R - 1| {det:.1e} over 1e4 samples; collocated residual {form:.1e} < 1e-8 over 1e3 states"),
    );
    assert!(pass);
}

fn bits(trace: &SimTrace) -> Vec<u64> {
    trace
        .records
        .iter()
        .flat_map(|r| {
            let gains = r.gains.iter().flat_map(|g| g.to_array());
            [r.t, r.rho, r.v_quad]
                .into_iter()
                .chain(r.xi.iter().copied())
                .chain(r.tau.iter().copied())
                .chain(r.state.q_u.iter().copied())
                .chain(r.state.q_u_dot.iter().copied())
                .chain(r.chi.iter().copied())
                .chain(gains)
                .map(f64::to_bits)
                .collect::<Vec<_>>()
        })
        .collect()
}

#[test]
fn criterion_10_determinism_and_convergence() {
    let run = repro();
    let again = simulate(&run.scenario).unwrap();
    let identical = bits(&again) == bits(&run.trace);
    let mut fine = run.scenario.clone();
    fine.step = reference::STEP / 2.0;
    let fine = simulate(&fine).unwrap();
    let terminal = |t: &SimTrace| t.last().unwrap().xi.norm();
    let diff = (terminal(&fine) - terminal(&run.trace)).abs();
    let pass = identical && diff < 1e-4;
    verdict(
        "10 determinism and convergence",
        pass,
        &format!(
            "rerun bit-identical: {identical}; terminal |xi| {:.9} at h, {:.9} at h/2, change {diff:.2e} < 1e-4",
            terminal(&run.trace),
            terminal(&fine)
        ),
    );
    assert!(pass);
}
