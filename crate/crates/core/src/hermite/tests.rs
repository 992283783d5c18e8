use approx::assert_abs_diff_eq;
use num_complex::Complex64;
use proptest::prelude::*;

use super::quadrature::{hermite_values, GaussHermite, OracleOp, QuadratureOracle};
use super::*;

const SQRT2: f64 = std::f64::consts::SQRT_2;

fn e(spec: HermiteSpec, k: usize) -> VelocityCoeffs {
    VelocityCoeffs::basis(spec, [k, 0, 0]).unwrap()
}

fn s1(n: usize) -> HermiteSpec {
    HermiteSpec::one_dim(n).unwrap()
}

fn assert_coeffs(c: &VelocityCoeffs, expected: &[(usize, f64)], tol: f64) {
    let mut want = vec![0.0; c.coeffs().len()];
    for &(i, v) in expected {
        want[i] = v;
    }
    for (i, (&got, &w)) in c.coeffs().iter().zip(&want).enumerate() {
        assert!((got - w).abs() <= tol, "index {i}: got {got}, want {w}");
    }
}

#[test]
fn spec_validation() {
    assert!(HermiteSpec::one_dim(1).is_err());
    assert!(HermiteSpec::new(4, 2, 0).is_err());
    assert!(HermiteSpec::new(4, 3, 0).is_err());
    assert!(HermiteSpec::new(4, 3, 2).is_err());
    let s = HermiteSpec::new(4, 1, 1).unwrap();
    assert_eq!(s.transverse_cap(), 0);
    assert_eq!(s.basis_size(), 5);
    assert_eq!(HermiteSpec::three_dim(4).unwrap().basis_size(), 20);
}

#[test]
fn multi_index_round_trip() {
    let s = HermiteSpec::three_dim(5).unwrap();
    for i in 0..s.basis_size() {
        assert_eq!(s.index(s.multi_index(i)), Some(i));
    }
    assert_eq!(s.index([0, 2, 0]), None);
    assert_eq!(s.unit(2), s.index([0, 0, 1]).unwrap());
}

#[test]
fn fokker_planck_examples() {
    let s = s1(6);
    assert_coeffs(&e(s, 0).fokker_planck(), &[], 0.0);
    assert_coeffs(&e(s, 1).fokker_planck(), &[(1, -1.0)], 0.0);
    assert_coeffs(&e(s, 3).fokker_planck(), &[(3, -3.0)], 0.0);
}

#[test]
fn v_multiply_examples() {
    let s = s1(6);
    assert_coeffs(&e(s, 0).v_multiply(0), &[(1, 1.0)], 1e-15);
    assert_coeffs(&e(s, 1).v_multiply(0), &[(0, 1.0), (2, SQRT2)], 1e-15);
    assert_coeffs(&VelocityCoeffs::zeros(s).v_multiply(0), &[], 0.0);
    // Truncation at the cap.
    assert_coeffs(&e(s, 6).v_multiply(0), &[(5, 6f64.sqrt())], 1e-15);
}

#[test]
fn grad_v_examples() {
    let s = s1(6);
    assert_coeffs(&e(s, 0).grad_v(0), &[(1, -0.5)], 1e-15);
    assert_coeffs(&e(s, 1).grad_v(0), &[(0, 0.5), (2, -SQRT2 / 2.0)], 1e-15);
    assert_coeffs(&VelocityCoeffs::zeros(s).grad_v(0), &[], 0.0);
}

#[test]
fn raising_examples() {
    let s = s1(6);
    assert_coeffs(&e(s, 0).raising(&[1.0]), &[(1, 1.0)], 1e-15);
    assert_coeffs(&e(s, 1).raising(&[1.0]), &[(2, SQRT2)], 1e-15);
    let c = e(s, 3).add(&e(s, 5));
    assert_coeffs(&c.raising(&[0.0]), &[], 0.0);
}

#[test]
fn projection_examples() {
    let s = s1(4);
    let p = e(s, 0).project_macro();
    assert_eq!(p.macro_part, e(s, 0));
    assert_eq!(p.micro, VelocityCoeffs::zeros(s));
    assert_eq!(
        p.moments,
        MomentPair {
            a: 1.0,
            b: vec![0.0]
        }
    );

    let p = e(s, 2).project_macro();
    assert_eq!(p.macro_part, VelocityCoeffs::zeros(s));
    assert_eq!(p.micro, e(s, 2));
    assert_eq!(
        p.moments,
        MomentPair {
            a: 0.0,
            b: vec![0.0]
        }
    );

    let c = e(s, 0).scaled(2.0).add(&e(s, 1).scaled(3.0)).add(&e(s, 2));
    assert_eq!(
        c.project_macro().moments,
        MomentPair {
            a: 2.0,
            b: vec![3.0]
        }
    );
}

#[test]
fn nu_norm_examples() {
    let s = s1(4);
    assert_eq!(VelocityCoeffs::<f64>::zeros(s).nu_norm_sq(), 0.0);
    assert_abs_diff_eq!(e(s, 0).nu_norm_sq(), 9.0 / 4.0, epsilon = 1e-14);
    assert_abs_diff_eq!(e(s, 1).nu_norm_sq(), 19.0 / 4.0, epsilon = 1e-14);
    // Headroom: the top-degree function is not truncated. For e_k in 1D,
    // |e_k|^2 + |v e_k|^2 + |d e_k|^2 = 1 + (2k + 1) + (2k + 1)/4.
    assert_abs_diff_eq!(e(s, 4).nu_norm_sq(), 1.0 + 9.0 * 1.25, epsilon = 1e-13);
}

#[test]
fn gamma_examples() {
    let s = s1(4);
    assert_abs_diff_eq!(e(s, 2).gamma_moment(0, 0), SQRT2, epsilon = 1e-15);
    assert_eq!(e(s, 1).gamma_moment(0, 0), 0.0);
    assert_eq!(e(s, 0).gamma_moment(0, 0), 0.0);
    let s3 = HermiteSpec::three_dim(4).unwrap();
    let c = VelocityCoeffs::<f64>::basis(s3, [1, 1, 0]).unwrap();
    assert_eq!(c.gamma_moment(0, 1), 1.0);
    assert_eq!(c.gamma_moment(1, 0), 1.0);
    assert_eq!(c.gamma_moment(0, 2), 0.0);
    // Transverse second moments are truncated away at transverse_cap = 1.
    assert_eq!(c.gamma_moment(1, 1), 0.0);
}

#[test]
fn complex_coefficients() {
    let s = s1(3);
    let mut c = VelocityCoeffs::<Complex64>::zeros(s);
    c.coeffs_mut()[1] = Complex64::new(0.0, 2.0);
    let v = c.v_multiply(0);
    assert_eq!(v.coeffs()[0], Complex64::new(0.0, 2.0));
    assert_eq!(c.inner(&c), Complex64::new(4.0, 0.0));
    assert_abs_diff_eq!(c.nu_norm_sq(), 4.0 * 19.0 / 4.0, epsilon = 1e-13);
}

#[test]
fn new_rejects_bad_input() {
    let s = s1(3);
    assert!(VelocityCoeffs::new(s, vec![0.0; 3]).is_err());
    assert!(VelocityCoeffs::new(s, vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
    assert!(VelocityCoeffs::<f64>::basis(s, [4, 0, 0]).is_err());
}

// Quadrature oracle.

#[test]
fn gauss_hermite_moments() {
    let rule = GaussHermite::new(40);
    let w: f64 = rule.weights().iter().sum();
    assert_abs_diff_eq!(w, 1.0, epsilon = 1e-14);
    assert_abs_diff_eq!(rule.expectation(|x| x * x), 1.0, epsilon = 1e-13);
    assert_abs_diff_eq!(rule.expectation(|x| x.powi(4)), 3.0, epsilon = 1e-12);
    assert_abs_diff_eq!(rule.expectation(|x| x.powi(10)), 945.0, epsilon = 1e-9);
    // Weights at the extreme nodes keep full relative accuracy: symmetric.
    let n = rule.weights().len();
    let (w0, wn) = (rule.weights()[0], rule.weights()[n - 1]);
    assert!(((w0 - wn) / w0).abs() < 1e-10, "{w0} vs {wn}");
}

#[test]
fn hermite_values_match_closed_form() {
    let x = 0.7f64;
    let (h, d1, d2) = hermite_values(4, x);
    // He_3 = x^3 - 3x, He_4 = x^4 - 6x^2 + 3.
    assert_abs_diff_eq!(h[3], (x.powi(3) - 3.0 * x) / 6f64.sqrt(), epsilon = 1e-15);
    assert_abs_diff_eq!(
        h[4],
        (x.powi(4) - 6.0 * x * x + 3.0) / 24f64.sqrt(),
        epsilon = 1e-15
    );
    assert_abs_diff_eq!(
        d1[4],
        (4.0 * x.powi(3) - 12.0 * x) / 24f64.sqrt(),
        epsilon = 1e-15
    );
    assert_abs_diff_eq!(d2[4], (12.0 * x * x - 12.0) / 24f64.sqrt(), epsilon = 1e-14);
}

#[test]
fn oracle_rejects_large_caps() {
    assert!(matches!(
        QuadratureOracle::new(s1(17)),
        Err(crate::Error::OracleRange(17))
    ));
}

#[test]
fn oracle_spot_values() {
    let s = s1(6);
    let o = QuadratureOracle::new(s).unwrap();
    let c = o
        .apply(&e(s, 0), OracleOp::FokkerPlanck)
        .unwrap()
        .coeffs()
        .unwrap();
    assert_coeffs(&c, &[], 1e-10);
    let c = o
        .apply(&e(s, 2), OracleOp::FokkerPlanck)
        .unwrap()
        .coeffs()
        .unwrap();
    assert_coeffs(&c, &[(2, -2.0)], 1e-10);
    let c = o
        .apply(&e(s, 1), OracleOp::VMultiply(0))
        .unwrap()
        .coeffs()
        .unwrap();
    assert_coeffs(&c, &[(0, 1.0), (2, SQRT2)], 1e-10);
    let v = o
        .apply(&e(s, 0), OracleOp::NuForm)
        .unwrap()
        .value()
        .unwrap();
    assert_abs_diff_eq!(v, 2.25, epsilon = 1e-10);
    let v = o
        .apply(&e(s, 2), OracleOp::Gamma(0, 0))
        .unwrap()
        .value()
        .unwrap();
    assert_abs_diff_eq!(v, SQRT2, epsilon = 1e-10);
}

fn random_coeffs(spec: HermiteSpec, seed: u64) -> VelocityCoeffs {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let v = (0..spec.basis_size())
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    VelocityCoeffs::new(spec, v).unwrap()
}

fn max_diff(a: &VelocityCoeffs, b: &VelocityCoeffs) -> f64 {
    a.coeffs()
        .iter()
        .zip(b.coeffs())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn check_against_oracle(spec: HermiteSpec, seed: u64) {
    let o = QuadratureOracle::new(spec).unwrap();
    let c = random_coeffs(spec, seed);
    let fp = o
        .apply(&c, OracleOp::FokkerPlanck)
        .unwrap()
        .coeffs()
        .unwrap();
    assert!(max_diff(&fp, &c.fokker_planck()) < 1e-10);
    for axis in 0..spec.velocity_dim() {
        let v = o
            .apply(&c, OracleOp::VMultiply(axis))
            .unwrap()
            .coeffs()
            .unwrap();
        assert!(
            max_diff(&v, &c.v_multiply(axis)) < 1e-10,
            "v_mult axis {axis}"
        );
        let g = o
            .apply(&c, OracleOp::GradV(axis))
            .unwrap()
            .coeffs()
            .unwrap();
        assert!(max_diff(&g, &c.grad_v(axis)) < 1e-10, "grad_v axis {axis}");
        for j in 0..spec.velocity_dim() {
            let gm = o
                .apply(&c, OracleOp::Gamma(axis, j))
                .unwrap()
                .value()
                .unwrap();
            assert!((gm - c.gamma_moment(axis, j)).abs() < 1e-10);
        }
    }
    let nu = o.apply(&c, OracleOp::NuForm).unwrap().value().unwrap();
    assert!(
        (nu - c.nu_norm_sq()).abs() < 1e-10 * nu.max(1.0),
        "{nu} vs {}",
        c.nu_norm_sq()
    );
}

#[test]
fn operators_match_oracle_one_dim() {
    for cap in 2..=16 {
        check_against_oracle(s1(cap), cap as u64);
    }
}

#[test]
fn operators_match_oracle_three_dim() {
    for cap in [2, 5, 8, 16] {
        check_against_oracle(HermiteSpec::three_dim(cap).unwrap(), 100 + cap as u64);
    }
}

#[test]
fn fokker_planck_diagonal_on_every_basis_function() {
    for spec in [s1(16), HermiteSpec::three_dim(8).unwrap()] {
        let o = QuadratureOracle::new(spec).unwrap();
        for k in spec.multi_indices() {
            let c = VelocityCoeffs::basis(spec, k).unwrap();
            let exact = c.scaled(-((k[0] + k[1] + k[2]) as f64));
            let got = o
                .apply(&c, OracleOp::FokkerPlanck)
                .unwrap()
                .coeffs()
                .unwrap();
            assert!(max_diff(&got, &exact) < 1e-10, "k = {k:?}");
            assert_eq!(c.fokker_planck(), exact);
        }
    }
}

#[test]
fn coercivity_constant_is_uniform_in_cap() {
    let lams: Vec<f64> = [4, 8, 16]
        .iter()
        .map(|&n| coercivity_constants(s1(n)).min())
        .collect();
    let (lo, hi) = lams
        .iter()
        .fold((f64::MAX, 0f64), |(a, b), &x| (a.min(x), b.max(x)));
    assert!(lo > 0.0);
    assert!((hi - lo) / hi < 0.2, "{lams:?}");
}

fn spec_strategy() -> impl Strategy<Value = HermiteSpec> {
    prop_oneof![
        (2usize..=16).prop_map(|n| HermiteSpec::one_dim(n).unwrap()),
        (2usize..=8).prop_map(|n| HermiteSpec::three_dim(n).unwrap()),
    ]
}

fn coeffs_strategy() -> impl Strategy<Value = VelocityCoeffs> {
    spec_strategy().prop_flat_map(|spec| {
        prop::collection::vec(-1.0f64..1.0, spec.basis_size())
            .prop_map(move |v| VelocityCoeffs::new(spec, v).unwrap())
    })
}

fn pair_strategy() -> impl Strategy<Value = (VelocityCoeffs, VelocityCoeffs)> {
    spec_strategy().prop_flat_map(|spec| {
        let n = spec.basis_size();
        (
            prop::collection::vec(-1.0f64..1.0, n),
            prop::collection::vec(-1.0f64..1.0, n),
        )
            .prop_map(move |(a, b)| {
                (
                    VelocityCoeffs::new(spec, a).unwrap(),
                    VelocityCoeffs::new(spec, b).unwrap(),
                )
            })
    })
}

proptest! {
    #[test]
    fn fokker_planck_self_adjoint((c, d) in pair_strategy()) {
        let lhs = c.fokker_planck().inner(&d);
        let rhs = c.inner(&d.fokker_planck());
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn fokker_planck_nonpositive(c in coeffs_strategy()) {
        prop_assert!(c.fokker_planck().inner(&c) <= 0.0);
    }

    #[test]
    fn projection_idempotent(c in coeffs_strategy()) {
        let p = c.project_macro();
        let pp = p.macro_part.project_macro();
        prop_assert_eq!(&pp.macro_part, &p.macro_part);
        prop_assert_eq!(pp.micro, VelocityCoeffs::zeros(c.spec()));
        prop_assert_eq!(pp.moments, p.moments);
        prop_assert_eq!(p.macro_part.add(&p.micro), c);
    }

    #[test]
    fn ladder_consistency(c in coeffs_strategy(), w in prop::collection::vec(-2.0f64..2.0, 3)) {
        let dv = c.spec().velocity_dim();
        let w = &w[..dv];
        let direct = c.raising(w);
        let mut combo = VelocityCoeffs::zeros(c.spec());
        for (axis, &wa) in w.iter().enumerate() {
            combo = combo
                .add(&c.grad_v(axis).scaled(-wa))
                .add(&c.v_multiply(axis).scaled(0.5 * wa));
        }
        for (x, y) in direct.coeffs().iter().zip(combo.coeffs()) {
            prop_assert!((x - y).abs() <= 1e-14 * (1.0 + x.abs()), "{} vs {}", x, y);
        }
    }

    #[test]
    fn gamma_annihilates_macro(c in coeffs_strategy()) {
        let m = c.project_macro().macro_part;
        let dv = c.spec().velocity_dim();
        for i in 0..dv {
            for j in 0..dv {
                prop_assert_eq!(m.gamma_moment(i, j), 0.0);
            }
        }
    }

    #[test]
    fn nu_norm_dominates_l2(c in coeffs_strategy()) {
        prop_assert!(c.nu_norm_sq() >= c.norm_sq());
    }
}

#[test]
fn coercivity_holds_on_random_samples() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for cap in [4, 8, 16] {
        let spec = s1(cap);
        let lam = coercivity_constants(spec);
        assert!(lam.min() > 0.1);
        for _ in 0..200 {
            let v: Vec<f64> = (0..spec.basis_size())
                .map(|_| rng.random_range(-1.0..1.0))
                .collect();
            let c = VelocityCoeffs::new(spec, v).unwrap();
            let diss = -c.fokker_planck().inner(&c);
            let b2: f64 = c.moments().b.iter().map(|b| b * b).sum();
            let tol = 1e-12 * diss;
            assert!(diss + tol >= lam.min() * c.remove_density().nu_norm_sq());
            assert!(diss + tol >= lam.min() * c.project_macro().micro.nu_norm_sq() + b2);
        }
    }
}
