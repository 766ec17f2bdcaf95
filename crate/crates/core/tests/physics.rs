//! Channel completeness, trace and positivity preservation, decay laws, metric axioms.

use hetqfl_core::qsim::{
    amplitude_damping, apply_channel, apply_gate, phase_damping, thermal_relaxation,
    trace_distance, Gate, KrausChannel, QuantumState,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_channel(rng: &mut ChaCha8Rng) -> KrausChannel {
    match rng.gen_range(0..3) {
        0 => amplitude_damping(rng.gen()).unwrap(),
        1 => phase_damping(rng.gen()).unwrap(),
        _ => {
            let t1 = rng.gen_range(1.0..200.0);
            let t2 = rng.gen_range(0.1..2.0 * t1);
            thermal_relaxation(t1, t2, rng.gen_range(1.0..5e4)).unwrap()
        }
    }
}

fn random_gate(rng: &mut ChaCha8Rng, n: usize) -> Gate {
    let t = rng.gen_range(0..n);
    let theta = rng.gen_range(-4.0..4.0);
    match rng.gen_range(0..6) {
        0 => Gate::x(t),
        1 => Gate::h(t),
        2 => Gate::rx(t, theta),
        3 => Gate::ry(t, theta),
        4 => Gate::rz(t, theta),
        _ => {
            let c = (t + rng.gen_range(1..n)) % n;
            Gate::cnot(c, t).unwrap()
        }
    }
}

#[test]
fn all_channels_are_cptp() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let g: f64 = rng.gen();
        let p: f64 = rng.gen();
        let t1 = rng.gen_range(1.0..200.0);
        let t2 = rng.gen_range(0.1..2.0 * t1);
        for ch in [
            amplitude_damping(g).unwrap(),
            phase_damping(p).unwrap(),
            thermal_relaxation(t1, t2, rng.gen_range(0.0..1e5)).unwrap(),
        ] {
            assert!(ch.completeness_deviation() < 1e-10);
        }
    }
}

#[test]
fn random_noisy_circuits_stay_physical() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..50 {
        let mut rho = QuantumState::zero(3).to_density();
        for _ in 0..rng.gen_range(5..30) {
            rho = apply_gate(&rho, &random_gate(&mut rng, 3)).unwrap();
            let target = rng.gen_range(0..3);
            rho = apply_channel(&rho, &random_channel(&mut rng), target).unwrap();
        }
        assert!((rho.trace() - 1.0).abs() < 1e-9);
        assert!(rho.hermiticity_error() < 1e-9);
        assert!(rho.min_eigenvalue() > -1e-9);
    }
}

#[test]
fn noiseless_density_matches_statevector() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let mut psi = QuantumState::zero(3);
        let mut rho = psi.to_density();
        for _ in 0..20 {
            let g = random_gate(&mut rng, 3);
            psi = apply_gate(&psi, &g).unwrap();
            rho = apply_gate(&rho, &g).unwrap();
        }
        let want = psi.to_density();
        for i in 0..8 {
            for j in 0..8 {
                assert!((rho.entry(i, j) - want.entry(i, j)).norm() < 1e-9);
            }
        }
    }
}

#[test]
fn amplitude_damping_decay_law() {
    for &g in &[0.01, 0.1, 0.37, 0.9] {
        let ch = amplitude_damping(g).unwrap();
        let mut rho = QuantumState::basis(1, 1).unwrap().to_density();
        for n in 1..=40 {
            rho = apply_channel(&rho, &ch, 0).unwrap();
            let want = (1.0f64 - g).powi(n);
            assert!((rho.entry(1, 1).re - want).abs() < 1e-12);
        }
    }
}

#[test]
fn phase_damping_keeps_populations() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut rho = QuantumState::zero(2).to_density();
    for _ in 0..10 {
        rho = apply_gate(&rho, &random_gate(&mut rng, 2)).unwrap();
    }
    let after = apply_channel(&rho, &phase_damping(0.42).unwrap(), 1).unwrap();
    for i in 0..4 {
        assert!((after.entry(i, i) - rho.entry(i, i)).norm() < 1e-12);
    }
}

fn random_mixed(rng: &mut ChaCha8Rng) -> QuantumState {
    // A A^† / tr for a random complex A.
    let a: Vec<Complex64> = (0..16)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let mut m = vec![Complex64::new(0.0, 0.0); 16];
    for i in 0..4 {
        for j in 0..4 {
            m[i * 4 + j] = (0..4).map(|k| a[i * 4 + k] * a[j * 4 + k].conj()).sum();
        }
    }
    let tr: f64 = (0..4).map(|i| m[i * 5].re).sum();
    m.iter_mut().for_each(|v| *v /= tr);
    QuantumState::from_density(2, m).unwrap()
}

#[test]
fn trace_distance_is_a_metric() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..50 {
        let (a, b, c) = (random_mixed(&mut rng), random_mixed(&mut rng), random_mixed(&mut rng));
        let ab = trace_distance(&a, &b).unwrap();
        let ba = trace_distance(&b, &a).unwrap();
        let bc = trace_distance(&b, &c).unwrap();
        let ac = trace_distance(&a, &c).unwrap();
        assert!(ab >= 0.0 && (ab - ba).abs() < 1e-9);
        assert!(ac <= ab + bc + 1e-9);
        assert!(trace_distance(&a, &a).unwrap() < 1e-9);
    }
}
