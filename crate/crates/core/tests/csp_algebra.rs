mod common;

use brainswarm::csp::{fit_csp, trial_covariance, class_mean_covariance, CspModel};
use brainswarm::recording::Trial;
use brainswarm::Command;
use common::{class_cov, max_abs, random_spd};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RIDGE: f64 = 1e-9;

fn whitening_error(m: &CspModel, composite: &DMatrix<f64>) -> f64 {
    let n = composite.nrows();
    max_abs(&(m.filters.transpose() * composite * &m.filters - DMatrix::identity(n, n)))
}

/// In the model basis, Wᵀ(C₋ + ridge·I)W must be diag(1 − λ).
fn complementarity_error(m: &CspModel, c_neg: &DMatrix<f64>, ridge: f64) -> f64 {
    let n = c_neg.nrows();
    let neg = m.filters.transpose() * (c_neg + DMatrix::identity(n, n) * ridge) * &m.filters;
    let want = DMatrix::from_diagonal(&DVector::from_iterator(n, m.eigenvalues.iter().map(|l| 1.0 - l)));
    max_abs(&(neg - want))
}

#[test]
fn hundred_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for k in 0..100 {
        let n = [4, 8, 64][k % 3];
        let (p, q) = (random_spd(n, &mut rng), random_spd(n, &mut rng));
        let m = fit_csp(&class_cov(p.clone()), &class_cov(q.clone()), 1, RIDGE).unwrap();
        let composite = &p + &q + DMatrix::identity(n, n) * RIDGE;
        assert!(whitening_error(&m, &composite) < 1e-8, "pair {k}");
        assert!(complementarity_error(&m, &q, RIDGE) < 1e-8, "pair {k}");
        assert!(m.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        assert!(m.eigenvalues.iter().all(|&l| (-1e-12..=1.0 + 1e-12).contains(&l)));

        // Without a ridge the power fractions of the two classes sum to 1
        // per filter, literally.
        let m0 = fit_csp(&class_cov(p.clone()), &class_cov(q.clone()), 1, 0.0).unwrap();
        for j in 0..n {
            let w = m0.filters.column(j);
            let a = (w.transpose() * &p * w)[0];
            let b = (w.transpose() * &q * w)[0];
            assert!((a / (a + b) + b / (a + b) - 1.0).abs() < 1e-12);
            assert!((a / (a + b) - m0.eigenvalues[j]).abs() < 1e-8, "pair {k} filter {j}");
        }
    }
}

/// Largest generalized Rayleigh quotient wᵀPw / wᵀ(P+Q+ridge)w over a
/// dense grid of directions on the unit sphere.
fn brute_force_max(p: &DMatrix<f64>, q: &DMatrix<f64>, ridge: f64) -> f64 {
    let n = p.nrows();
    let comp = p + q + DMatrix::identity(n, n) * ridge;
    let quotient = |w: DVector<f64>| (w.transpose() * p * &w)[0] / (w.transpose() * &comp * &w)[0];
    let steps = 2000;
    let mut best = f64::NEG_INFINITY;
    match n {
        1 => best = quotient(DVector::from_element(1, 1.0)),
        2 => {
            for i in 0..steps {
                let t = std::f64::consts::PI * i as f64 / steps as f64;
                best = best.max(quotient(DVector::from_vec(vec![t.cos(), t.sin()])));
            }
        }
        3 => {
            let s = 600;
            for i in 0..=s {
                let theta = std::f64::consts::PI * i as f64 / s as f64;
                for j in 0..2 * s {
                    let phi = std::f64::consts::PI * j as f64 / s as f64;
                    let w = DVector::from_vec(vec![
                        theta.sin() * phi.cos(),
                        theta.sin() * phi.sin(),
                        theta.cos(),
                    ]);
                    best = best.max(quotient(w));
                }
            }
        }
        _ => unreachable!(),
    }
    best
}

#[test]
fn leading_eigenvalue_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for k in 0..30 {
        let n = 2 + k % 2;
        let (p, q) = (random_spd(n, &mut rng), random_spd(n, &mut rng));
        let m = fit_csp(&class_cov(p.clone()), &class_cov(q.clone()), 1, RIDGE).unwrap();
        let brute = brute_force_max(&p, &q, RIDGE);
        assert!((brute - m.eigenvalues[0]).abs() < 1e-3, "{brute} vs {}", m.eigenvalues[0]);
        assert!(brute <= m.eigenvalues[0] + 1e-12);
    }
}

#[test]
fn spectrum_is_invariant_to_channel_mixing() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in [4, 8, 16] {
        for _ in 0..5 {
            let (p, q) = (random_spd(n, &mut rng), random_spd(n, &mut rng));
            let mix = DMatrix::from_fn(n, n, |r, c| {
                f64::from(u8::from(r == c)) + 0.3 * rng.random_range(-1.0..1.0)
            });
            let a = fit_csp(&class_cov(p.clone()), &class_cov(q.clone()), 1, 0.0).unwrap();
            let b = fit_csp(
                &class_cov(&mix * &p * mix.transpose()),
                &class_cov(&mix * &q * mix.transpose()),
                1,
                0.0,
            )
            .unwrap();
            for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
                assert!((x - y).abs() < 1e-8, "{x} vs {y}");
            }
        }
    }
}

fn arb_trial(n: usize, t: usize) -> impl Strategy<Value = Trial> {
    proptest::collection::vec(-100.0f64..100.0, n * t).prop_map(move |v| Trial {
        label: Command::Hovering,
        samples: DMatrix::from_vec(n, t, v),
    })
}

proptest! {
    #[test]
    fn trial_covariance_properties(trial in arb_trial(5, 40)) {
        let c = trial_covariance(&trial).unwrap();
        prop_assert!((c.trace() - 1.0).abs() < 1e-12);
        prop_assert!(max_abs(&(&c - c.transpose())) < 1e-12);
        let eig = c.clone().symmetric_eigen();
        prop_assert!(eig.eigenvalues.min() > -1e-12);
    }

    #[test]
    fn class_mean_keeps_unit_trace(trials in proptest::collection::vec(arb_trial(4, 30), 1..10)) {
        let refs: Vec<&Trial> = trials.iter().collect();
        let m = class_mean_covariance(&refs).unwrap();
        prop_assert!((m.matrix.trace() - 1.0).abs() < 1e-9);
        prop_assert_eq!(m.n_trials, trials.len());
    }
}
