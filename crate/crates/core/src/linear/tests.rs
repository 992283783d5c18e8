use approx::assert_abs_diff_eq;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::semigroup::adaptive_quadrature;
use super::*;
use crate::diagnostics::{fit_decay, DecayModel};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn params() -> SystemParams {
    SystemParams::new(0.0, 1.0, 2.0).unwrap()
}

fn spec1(n: usize) -> HermiteSpec {
    HermiteSpec::one_dim(n).unwrap()
}

fn max_diff(a: &ModeState, b: &ModeState) -> f64 {
    (a.to_vector() - b.to_vector()).camax()
}

#[test]
fn neutral_density_offset() {
    let mut m = ModeState::zeros(spec1(6), 0.0);
    m.rho = c(0.7, -0.2);
    let r = mode_rhs(&m, &params());
    assert_eq!(r.to_vector().camax(), 0.0);
}

#[test]
fn friction_only_at_zero_wavenumber() {
    let spec = spec1(6);
    let mut m = ModeState::zeros(spec, 0.0);
    m.u[0] = c(0.3, 0.1);
    let r = mode_rhs(&m, &params());
    assert_eq!(r.u[0], -m.u[0]);
    assert_eq!(r.rho, c(0.0, 0.0));
    for (i, v) in r.f.coeffs().iter().enumerate() {
        let want = if i == spec.unit(0) {
            m.u[0]
        } else {
            c(0.0, 0.0)
        };
        assert_eq!(*v, want);
    }
}

#[test]
fn viscosity_damps_velocity() {
    let mut m = ModeState::zeros(spec1(4), 2.0);
    m.u[0] = c(1.0, 0.0);
    let p = SystemParams::new(0.1, 1.0, 2.0).unwrap();
    let r = mode_rhs(&m, &p);
    assert_abs_diff_eq!(r.u[0].re, -1.0 - 0.4, epsilon = 1e-15);
}

#[test]
fn rejects_bad_mode() {
    let spec = spec1(4);
    let f = VelocityCoeffs::zeros(spec);
    assert!(ModeState::new(-1.0, c(0.0, 0.0), vec![c(0.0, 0.0)], f.clone()).is_err());
    assert!(ModeState::new(1.0, c(0.0, 0.0), vec![], f.clone()).is_err());
    assert!(ModeState::new(1.0, c(f64::NAN, 0.0), vec![c(0.0, 0.0)], f).is_err());
}

#[test]
fn evolve_trivial_cases() {
    let p = params();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let m = random_mode(spec1(8), &p, 5.0, &mut rng);
    assert_eq!(evolve_mode(&m, &p, 0.0, Method::Expm).unwrap(), m);
    assert!(evolve_mode(&m, &p, -1.0, Method::Rk).is_err());
    let z = ModeState::zeros(spec1(8), 3.0);
    for method in [Method::Expm, Method::Rk] {
        assert_eq!(
            evolve_mode(&z, &p, 2.0, method)
                .unwrap()
                .to_vector()
                .camax(),
            0.0
        );
    }
}

#[test]
fn expm_known_matrices() {
    let d = DMatrix::from_diagonal(&DVector::from_vec(vec![
        c(-30.0, 0.0),
        c(0.5, 2.0),
        c(0.0, 0.0),
    ]));
    let e = expm(&d);
    for i in 0..3 {
        let want = d[(i, i)].exp();
        assert!(
            (e[(i, i)] - want).norm() <= 1e-13 * want.norm().max(1e-300),
            "{i}"
        );
    }
    // Rotation generator with a large angle exercises the squaring phase.
    let th = 40.0;
    let r = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(-th, 0.0), c(th, 0.0), c(0.0, 0.0)]);
    let e = expm(&r);
    assert!((e[(0, 0)] - c(th.cos(), 0.0)).norm() < 1e-12);
    assert!((e[(1, 0)] - c(th.sin(), 0.0)).norm() < 1e-12);
    // Nilpotent: exp(N) = I + N + N^2 / 2.
    let n = DMatrix::from_row_slice(
        3,
        3,
        &[
            c(0.0, 0.0),
            c(2.0, 0.0),
            c(0.0, 1.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(3.0, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
        ],
    );
    let want = DMatrix::identity(3, 3) + &n + &n * &n * c(0.5, 0.0);
    assert!((expm(&n) - want).camax() < 1e-14);
}

#[test]
fn blocks_split_the_generator() {
    let p = params();
    // At xi = 0 every Hermite degree above one decouples.
    let a = generator(spec1(6), &p, 0.0);
    let blocks = block_partition(&a);
    assert!(blocks.contains(&vec![1, 3]));
    assert_eq!(blocks.len(), 8);
    let a3 = generator(HermiteSpec::three_dim(4).unwrap(), &p, 1.5);
    let blocks = block_partition(&a3);
    // Longitudinal, two transverse shear blocks, and the doubly transverse block.
    assert_eq!(blocks.len(), 4);
    let full = expm(&(a3.clone() * c(0.7, 0.0)));
    assert!((propagator(&a3, 0.7) - full).camax() < 1e-13);
}

#[test]
fn propagators_agree_on_random_modes() {
    let p = SystemParams::new(0.01, 1.0, 1.4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for i in 0..50 {
        let spec = if i % 5 == 0 {
            HermiteSpec::three_dim(6).unwrap()
        } else {
            spec1(12)
        };
        let mut m = random_mode(spec, &p, 20.0, &mut rng);
        m.xi = 0.05 * 400f64.powf(rand::Rng::random_range(&mut rng, 0.0..1.0));
        for t in [1.0, 10.0] {
            let a = evolve_mode(&m, &p, t, Method::Expm).unwrap();
            let b = evolve_mode(&m, &p, t, Method::Rk).unwrap();
            worst = worst.max(max_diff(&a, &b));
        }
    }
    assert!(worst < 1e-9, "{worst:e}");
}

#[test]
fn zero_wavenumber_velocity_energy() {
    let p = params();
    let mut m = ModeState::zeros(spec1(8), 0.0);
    m.u[0] = c(1.0, 0.0);
    for t in [0.1, 1.0, 3.0] {
        let e = evolve_mode(&m, &p, t, Method::Expm)
            .unwrap()
            .plain_energy(&p);
        assert_abs_diff_eq!(e, 0.5 * (1.0 + (-4.0 * t).exp()), epsilon = 1e-14);
    }
    // Eigenvalues of the friction pair are 0 and -2.
    let a = generator(spec1(8), &p, 0.0);
    let pair = DMatrix::from_fn(2, 2, |i, j| a[([1, 3][i], [1, 3][j])].re);
    let mut ev: Vec<f64> = pair.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    assert_abs_diff_eq!(ev[0], -2.0, epsilon = 1e-15);
    assert_abs_diff_eq!(ev[1], 0.0, epsilon = 1e-15);
}

#[test]
fn energy_identity_along_evolution() {
    let p = SystemParams::new(0.02, 1.0, 1.4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for spec in [spec1(10), HermiteSpec::three_dim(5).unwrap()] {
        let m = random_mode(spec, &p, 10.0, &mut rng);
        for t in [0.0, 0.5, 2.0, 7.0] {
            let mt = evolve_mode(&m, &p, t, Method::Expm).unwrap();
            assert!(energy_identity_residual(&mt, &p).abs() < 1e-12);
        }
        // Integrated form: E(t1) - E(t0) = -2 int D, by Simpson's rule.
        let (t0, t1) = (0.3, 0.4);
        let n = 400;
        let h = (t1 - t0) / n as f64;
        let mut integral = 0.0;
        for j in 0..=n {
            let w = if j == 0 || j == n {
                1.0 / 3.0
            } else if j % 2 == 1 {
                4.0 / 3.0
            } else {
                2.0 / 3.0
            };
            let mt = evolve_mode(&m, &p, t0 + j as f64 * h, Method::Expm).unwrap();
            integral += w * h * mode_dissipation(&mt, &p);
        }
        let e0 = evolve_mode(&m, &p, t0, Method::Expm)
            .unwrap()
            .plain_energy(&p);
        let e1 = evolve_mode(&m, &p, t1, Method::Expm)
            .unwrap()
            .plain_energy(&p);
        assert!(
            (e1 - e0 + 2.0 * integral).abs() < 1e-8,
            "{}",
            e1 - e0 + 2.0 * integral
        );
    }
}

#[test]
fn transverse_free_modes_match_one_dimension() {
    let p = params();
    let s3 = HermiteSpec::three_dim(6).unwrap();
    let s1 = spec1(6);
    let mut m1 = ModeState::zeros(s1, 1.3);
    m1.rho = c(0.2, 0.1);
    m1.u[0] = c(-0.4, 0.0);
    for k in 0..=6 {
        m1.f.coeffs_mut()[k] = c(0.1 * k as f64, -0.05);
    }
    let mut m3 = ModeState::zeros(s3, 1.3);
    m3.rho = m1.rho;
    m3.u[0] = m1.u[0];
    for k in 0..=6 {
        m3.f.coeffs_mut()[s3.index([k, 0, 0]).unwrap()] = m1.f.coeffs()[k];
    }
    let e1 = evolve_mode(&m1, &p, 2.5, Method::Expm).unwrap();
    let e3 = evolve_mode(&m3, &p, 2.5, Method::Expm).unwrap();
    assert!((e1.rho - e3.rho).norm() < 1e-14);
    assert_eq!(e3.u[1], c(0.0, 0.0));
    assert_eq!(e3.u[2], c(0.0, 0.0));
    for (i, k) in s3.multi_indices().enumerate() {
        let v = e3.f.coeffs()[i];
        if k[1] + k[2] > 0 {
            assert_eq!(v, c(0.0, 0.0));
        } else {
            assert!((v - e1.f.coeffs()[k[0]]).norm() < 1e-14);
        }
    }
}

#[test]
fn augmented_functional_basics() {
    let p = params();
    let z = ModeState::zeros(spec1(6), 2.0);
    assert_eq!(mode_energy_f(&z, &p, 0.1, 0.01), 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let m = random_mode(spec1(6), &p, 20.0, &mut rng);
    assert_eq!(mode_energy_f(&m, &p, 0.0, 0.0), m.plain_energy(&p));
    let eq = certify_energy_f(spec1(6), &p, 0.0, 0.0, 50, 20.0, 0).unwrap();
    assert_eq!((eq.lower, eq.upper), (1.0, 1.0));
    let eq = certify_energy_f(spec1(12), &p, DEFAULT_TAU4, DEFAULT_TAU5, 1000, 20.0, 1).unwrap();
    assert!(eq.lower >= 0.5 && eq.upper <= 2.0, "{eq:?}");
    let eq3 = certify_energy_f(
        HermiteSpec::three_dim(6).unwrap(),
        &p,
        DEFAULT_TAU4,
        DEFAULT_TAU5,
        1000,
        20.0,
        2,
    )
    .unwrap();
    assert!(eq3.lower >= 0.5 && eq3.upper <= 2.0, "{eq3:?}");
    assert!(matches!(
        certify_energy_f(spec1(6), &p, 20.0, 5.0, 1000, 20.0, 3),
        Err(crate::Error::TauEquivalence { .. })
    ));
}

#[test]
fn mixed_functional_hand_value() {
    // a = 1, b = i, Gamma_11 of the micro part = sqrt(2) * 0.5 at xi = 1.
    let spec = spec1(4);
    let mut m = ModeState::zeros(spec, 1.0);
    m.f.coeffs_mut()[0] = c(1.0, 0.0);
    m.f.coeffs_mut()[1] = c(0.0, 1.0);
    m.f.coeffs_mut()[2] = c(0.5, 0.0);
    // 2 i xi b conj(G) = 2 i * i * sqrt(2)/2 = -sqrt(2); a conj(i xi b) = conj(-1) = -1.
    let want = (-std::f64::consts::SQRT_2 + 1.0) / 2.0;
    assert_abs_diff_eq!(mixed_functional(&m), want, epsilon = 1e-15);
}

#[test]
fn canonical_set_is_normalized() {
    for spec in [spec1(6), HermiteSpec::three_dim(4).unwrap()] {
        let set = canonical_modes(spec, 0.7);
        assert_eq!(set.len(), 4 + spec.velocity_dim() / 3);
        for m in &set {
            assert_abs_diff_eq!(m.norms().total(), 1.0, epsilon = 1e-15);
        }
    }
}

#[test]
fn decay_table_on_small_grid() {
    let p = params();
    let s: Vec<f64> = (0..12).map(|i| 1.0 + 0.5 * i as f64).collect();
    let t = verify_mode_decay(spec1(8), &p, &[0.5, 2.0], &s, DEFAULT_TAU4, DEFAULT_TAU5).unwrap();
    assert!(t.c > 0.0 && t.gronwall_c > 0.0);
    for r in &t.rows {
        assert!(r.monotone);
        assert!(r.fitted_rate >= r.bound_rate * (1.0 - 1e-12));
    }
    assert!(verify_mode_decay(spec1(8), &p, &[0.0], &s, 0.1, 0.01).is_err());
    assert!(verify_mode_decay(spec1(8), &p, &[1.0], &s[..3], 0.1, 0.01).is_err());
}

#[test]
fn adaptive_quadrature_known_integrals() {
    let v = adaptive_quadrature(
        |x| vec![x * x, (-x).exp(), x.sqrt()],
        &[0.0, 0.5, 1.0],
        1e-12,
        1000,
    )
    .unwrap();
    assert_abs_diff_eq!(v[0], 1.0 / 3.0, epsilon = 1e-14);
    assert_abs_diff_eq!(v[1], 1.0 - (-1.0f64).exp(), epsilon = 1e-14);
    assert_abs_diff_eq!(v[2], 2.0 / 3.0, epsilon = 1e-12);
    assert!(matches!(
        adaptive_quadrature(|x| vec![x.powf(-0.9)], &[0.0, 1.0], 1e-12, 10),
        Err(crate::Error::QuadratureNonConvergence(_))
    ));
    assert!(matches!(
        adaptive_quadrature(|x| vec![1.0 / x], &[-1.0, 1.0], 1e-12, 10),
        Err(crate::Error::NonFinite(_))
    ));
}

#[test]
fn profile_shapes() {
    let p = SpectrumProfile::l1();
    assert_eq!(p.weight(0.0), 1.0);
    assert_eq!(p.weight(1.0), 1.0);
    assert_eq!(p.weight(8.0), 0.0);
    assert!(p.weight(4.0) > 0.0 && p.weight(4.0) < 1.0);
    let q = SpectrumProfile::lq(1.19).unwrap();
    let e = 3.0 * (1.0 - 1.0 / 1.19);
    assert_abs_diff_eq!(q.weight(0.25), 0.25f64.powf(-e), epsilon = 1e-14);
    assert!(SpectrumProfile::lq(0.5).is_err());
    let b = SpectrumProfile::concentrated(1.0, 0.1).unwrap();
    assert_eq!(b.weight(1.0), 1.0);
    assert_eq!(b.weight(0.85), 0.0);
    assert!(SpectrumProfile::concentrated(0.1, 0.2).is_err());
}

#[test]
fn semigroup_at_time_zero_is_the_profile_mass() {
    let spec = HermiteSpec::three_dim(4).unwrap();
    let prof = SpectrumProfile::l1();
    for k in [0usize, 1] {
        let s = semigroup_decay(spec, &params(), &prof, k, &[0.0], 1e-10).unwrap();
        // Composite Simpson reference.
        let n = 200_000;
        let h = 8.0 / n as f64;
        let g =
            |r: f64| 4.0 * std::f64::consts::PI * r.powi(2 + 2 * k as i32) * prof.weight(r).powi(2);
        let mut sum = g(0.0) + g(8.0);
        for j in 1..n {
            sum += if j % 2 == 1 { 4.0 } else { 2.0 } * g(j as f64 * h);
        }
        let reference = sum * h / 3.0;
        assert!(
            (s.total[0].powi(2) / reference - 1.0).abs() < 1e-8,
            "k = {k}"
        );
    }
    assert!(semigroup_decay(spec, &params(), &prof, 2, &[0.0], 1e-8).is_err());
}

#[test]
fn concentrated_profile_decays_exponentially() {
    let spec = HermiteSpec::three_dim(6).unwrap();
    let prof = SpectrumProfile::concentrated(1.0, 0.02).unwrap();
    let times: Vec<f64> = (0..16).map(|i| 5.0 + 3.0 * i as f64).collect();
    let s = semigroup_decay(spec, &params(), &prof, 0, &times, 1e-8).unwrap();
    let ex = fit_decay(&times, &s.total, DecayModel::Exponential, (0.0, 1e9)).unwrap();
    let alg = fit_decay(&times, &s.total, DecayModel::Algebraic, (0.0, 1e9)).unwrap();
    assert!(ex.r_squared > 0.99, "{ex:?}");
    assert!(
        alg.r_squared < ex.r_squared && alg.r_squared < 0.99,
        "{alg:?}"
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn energy_identity_holds(seed in 0u64..10_000, mu in 0.0f64..0.2) {
        let p = SystemParams::new(mu, 1.0, 1.4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_mode(spec1(8), &p, 20.0, &mut rng);
        prop_assert!(energy_identity_residual(&m, &p).abs() < 1e-12);
        prop_assert!(mode_dissipation(&m, &p) >= 0.0);
    }
}

#[test]
fn slowest_mode_rate_is_slowest_of_the_set() {
    let p = SystemParams::new(0.0, 0.5, 2.0).unwrap();
    let spec = spec1(12);
    let times: Vec<f64> = (0..=80).map(|i| 0.5 * i as f64).collect();
    let slow = slowest_mode_rate(spec, &p, 1.0, &times, (5.0, 40.0)).unwrap();
    assert!(slow.rate < -0.2 && slow.rate > -0.4, "{slow:?}");
    assert!(slow.r_squared > 0.99);
    let evolved = evolve_modes(&canonical_modes(spec, 1.0), &p, &times);
    for k in 0..evolved[0].len() {
        let series: Vec<f64> = evolved.iter().map(|row| row[k].norms().total()).collect();
        let fit = fit_decay(&times, &series, DecayModel::Exponential, (5.0, 40.0)).unwrap();
        assert!(fit.rate <= slow.rate);
    }
    assert!(slowest_mode_rate(spec, &p, 0.0, &times, (5.0, 40.0)).is_err());
}
