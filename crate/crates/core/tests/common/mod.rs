//! Property checks shared by the proptest suites and the acceptance harness.
#![allow(dead_code)]

use dirguess::abstention::{fidelity_surface, optimal_plan};
use dirguess::hilbert::{
    build_input_state, singlet_projector, triplet_projector, two_qubit_rotation, Bell, Direction, InputStateSpec,
    TetraIndex, TwoQubitState,
};
use dirguess::linalg::{c, frobenius, identity, ComplexMatrix};
use dirguess::povm::{
    build_abstention_povm, direction_vector, score_operator, score_value, AbstentionParams, ScoreKind, F_MAX,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

pub type Check = Result<(), TestCaseError>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(TestCaseError::fail(format!($($fmt)+)));
        }
    };
}

pub fn direction() -> impl Strategy<Value = Direction> {
    (-1.0f64..=1.0, 0.0f64..std::f64::consts::TAU).prop_map(|(z, phi)| {
        let r = (1.0 - z * z).max(0.0).sqrt();
        Direction::normalized(r * phi.cos(), r * phi.sin(), z).unwrap()
    })
}

pub fn lambda() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(1.0), 0.0f64..=1.0]
}

pub fn completeness(l0: f64, l1: f64) -> Check {
    let p = build_abstention_povm(&AbstentionParams::new(l0, l1).unwrap()).unwrap();
    let sum = p.elements().iter().fold(ComplexMatrix::zeros(4, 4), |a, b| a + b);
    let err = frobenius(&(sum - identity(4)));
    ensure!(err < 1e-9, "completeness error {err:e} at ({l0}, {l1})");
    Ok(())
}

pub fn ejm_orthogonality() -> Check {
    let p = AbstentionParams::none();
    for i in TetraIndex::all() {
        for j in TetraIndex::all() {
            let o = direction_vector(&p, i).dotc(&direction_vector(&p, j));
            let want = if i == j { 1.0 } else { 0.0 };
            ensure!((o - c(want, 0.0)).norm() < 1e-10, "<Phi_{}|Phi_{}> = {o}", i.get(), j.get());
        }
    }
    Ok(())
}

/// The singlet is invariant under every U_n and H₀, H₁ commute with it.
pub fn singlet_invariance(n: &Direction) -> Check {
    let u = two_qubit_rotation(n);
    let s = Bell::PsiMinus.vector();
    let err = (&u * &s - &s).norm();
    ensure!(err < 1e-10, "U_n psi- differs by {err:e} for {n:?}");
    for p in [singlet_projector(), triplet_projector()] {
        let comm = frobenius(&(&u * &p - &p * &u));
        ensure!(comm < 1e-10, "commutator {comm:e}");
    }
    Ok(())
}

/// Σᵢ Tr Πᵢ = 4 for the EJM.
pub fn weight_law() -> Check {
    let p = build_abstention_povm(&AbstentionParams::none()).unwrap();
    let s: f64 = p.elements()[..4].iter().map(|e| e.trace().re).sum();
    ensure!((s - 4.0).abs() < 1e-12, "sum of traces {s}");
    Ok(())
}

fn six_axis_average(spec: &InputStateSpec) -> ComplexMatrix {
    let psi = build_input_state(spec).density();
    let mut avg = ComplexMatrix::zeros(4, 4);
    for n in Direction::six_axes() {
        let u = two_qubit_rotation(&n);
        let w = score_value(ScoreKind::Fidelity, &n, &Direction::PLUS_Z).unwrap() / 6.0;
        avg += (&u * &psi * u.adjoint()).scale(w);
    }
    avg
}

/// Sphere average of ½(1 + n·z) U_n Ψ U_n† by product quadrature
/// (Gauss-Legendre in cos θ, trapezoid in φ).
pub fn sphere_average(spec: &InputStateSpec, n_theta: usize, n_phi: usize) -> ComplexMatrix {
    let psi = build_input_state(spec).density();
    let (nodes, weights) = gauss_legendre(n_theta);
    let mut avg = ComplexMatrix::zeros(4, 4);
    for (z, w) in nodes.iter().zip(&weights) {
        for k in 0..n_phi {
            let phi = std::f64::consts::TAU * (k as f64 + 0.5) / n_phi as f64;
            let r = (1.0 - z * z).sqrt();
            let n = Direction::normalized(r * phi.cos(), r * phi.sin(), *z).unwrap();
            let u = two_qubit_rotation(&n);
            let f = 0.5 * (1.0 + z);
            avg += (&u * &psi * u.adjoint()).scale(f * w / 2.0 / n_phi as f64);
        }
    }
    avg
}

fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    for i in 0..n {
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, t);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (t * p1 - p0) / (t * t - 1.0);
            let dt = p1 / dp;
            t -= dt;
            if dt.abs() < 1e-16 {
                let (mut q0, mut q1) = (1.0, t);
                for k in 2..=n {
                    let q2 = ((2 * k - 1) as f64 * t * q1 - (k - 1) as f64 * q0) / k as f64;
                    q0 = q1;
                    q1 = q2;
                }
                let dq = n as f64 * (t * q1 - q0) / (t * t - 1.0);
                x.push(t);
                w.push(2.0 / ((1.0 - t * t) * dq * dq));
                break;
            }
        }
    }
    (x, w)
}

/// Six-axis average, sphere average and closed-form F_f agree for ψ⁺ inputs.
pub fn six_direction_equivalence(c0: f64) -> Check {
    let spec = InputStateSpec::psi_plus(c0).unwrap();
    let closed = score_operator(ScoreKind::Fidelity, &spec);
    let six = six_axis_average(&spec);
    let e = frobenius(&(&six - &closed));
    ensure!(e < 1e-10, "six-axis vs closed form {e:e} at c0 = {c0}");
    let sphere = sphere_average(&spec, 24, 24);
    let e = frobenius(&(&sphere - &closed));
    ensure!(e < 1e-9, "sphere vs closed form {e:e} at c0 = {c0}");
    Ok(())
}

/// Grid maximum and random probes of f_av(β, b, θ).
pub fn surface_maximum(beta: f64, b: f64, theta: f64) -> Check {
    let v = fidelity_surface(beta, b, theta);
    ensure!(v <= F_MAX + 1e-12, "f_av({beta}, {b}, {theta}) = {v} above the maximum");
    ensure!((fidelity_surface(1.0, 1.0, std::f64::consts::FRAC_PI_4) - F_MAX).abs() < 1e-12, "maximum value");
    Ok(())
}

pub fn surface_grid_argmax() -> Check {
    let n = 101;
    let mut best = (f64::MIN, 0, 0, 0);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let (be, b, th) = (
                    i as f64 / (n - 1) as f64,
                    j as f64 / (n - 1) as f64,
                    std::f64::consts::FRAC_PI_2 * k as f64 / (n - 1) as f64,
                );
                let v = fidelity_surface(be, b, th);
                if v > best.0 {
                    best = (v, i, j, k);
                }
            }
        }
    }
    ensure!((best.1, best.2, best.3) == (100, 100, 50), "grid argmax at {:?}", (best.1, best.2, best.3));
    Ok(())
}

pub fn covariance() -> Check {
    let p = build_abstention_povm(&AbstentionParams::new(0.37, 0.81).unwrap()).unwrap();
    let pz = &p.elements()[0];
    for (k, i) in TetraIndex::all().into_iter().enumerate() {
        let u = two_qubit_rotation(&i.direction());
        let e = frobenius(&(&u * pz * u.adjoint() - &p.elements()[k]));
        ensure!(e < 1e-9, "covariance off by {e:e} for n{}", i.get());
    }
    Ok(())
}

pub fn abstention_isotropic(l0: f64, l1: f64, c0: f64, n: &Direction) -> Check {
    let p = build_abstention_povm(&AbstentionParams::new(l0, l1).unwrap()).unwrap();
    let psi = build_input_state(&InputStateSpec::psi_plus(c0).unwrap());
    let rot = |d: &Direction| {
        let s = TwoQubitState::normalized(two_qubit_rotation(d) * psi.amplitudes()).unwrap();
        (&p.elements()[4] * s.density()).trace().re
    };
    let (a, b) = (rot(n), rot(&Direction::PLUS_Z));
    ensure!((a - b).abs() < 1e-10, "abstention probability {a} vs {b}");
    Ok(())
}

pub fn plan_constraint_chain(kind: ScoreKind, c0: f64, constrained: bool) -> Check {
    let p = match optimal_plan(kind, c0, constrained) {
        Ok(p) => p,
        Err(_) => return Ok(()),
    };
    let c1 = (1.0 - c0 * c0).sqrt();
    let b0 = c0 / p.q_bar.sqrt();
    let b1 = c1 / p.q_bar.sqrt();
    ensure!(p.c_tilde_0 <= b0 + 1e-12 && p.c_tilde_1 <= b1 + 1e-12, "constraint violated");
    let binding = (p.c_tilde_0 - b0).abs() < 1e-9 || (p.c_tilde_1 - b1).abs() < 1e-9;
    ensure!(binding, "no binding coefficient at c0 = {c0}");
    Ok(())
}

/// Runs `f` over `cases` draws of `strategy` with a fixed seed.
pub fn run_cases<S: Strategy>(cases: u32, strategy: S, f: impl Fn(S::Value) -> Check) -> Result<(), String> {
    let mut runner = TestRunner::new_with_rng(
        Config { cases, failure_persistence: None, ..Config::default() },
        proptest::test_runner::TestRng::deterministic_rng(proptest::test_runner::RngAlgorithm::ChaCha),
    );
    runner.run(&strategy, f).map_err(|e| e.to_string())
}
