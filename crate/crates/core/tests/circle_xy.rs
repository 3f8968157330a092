use gibbs_core::circle_xy::*;
use proptest::prelude::*;
use std::f64::consts::PI;

fn full_circle() -> CircleInterval {
    CircleInterval::new(0.0, 0.5).unwrap()
}

fn log_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let (mut term, mut sum) = (1.0f64, 1.0f64);
    for k in 1..300 {
        term *= q / (k as f64 * k as f64);
        sum += term;
    }
    sum.ln()
}

fn desk4() -> Schedule {
    calibrate_desk(&default_desk_halfwidths(4), 0.5).unwrap()
}

fn sign_pattern(bits: u32, len: usize) -> SignSequence {
    let prefix: Vec<Sign> = (0..len)
        .map(|i| if bits >> i & 1 == 0 { Sign::Plus } else { Sign::Minus })
        .collect();
    let tail = prefix[len - 1];
    SignSequence::new(prefix, tail)
}

#[test]
fn bessel_partition_functions() {
    for beta in [0.5, 1.0, 10.0, 40.0] {
        let d = marginal_density(TrigPolynomial::new(0.0, vec![1.0], vec![]), beta).unwrap();
        assert!((d.log_z.ln() - log_i0(beta)).abs() < 1e-8, "beta {beta}");
    }
}

#[test]
fn desk_densities_are_normalized() {
    let s = desk4();
    for bits in 0..16 {
        let signs = sign_pattern(bits, 4);
        let u = build_u(&signs, &s, 4).unwrap();
        for beta in [0.0, 1.0, s.level(2), s.level(4)] {
            let d = marginal_density(u.clone(), beta).unwrap();
            assert!((interval_mass(&d, &full_circle()).unwrap() - 1.0).abs() <= 1e-10);
        }
    }
}

#[test]
fn sharp_peaks_off_the_anchors() {
    // The maximum sits away from 0 and 1/2, so the integrand is only known to
    // about β ε; the quadrature must still settle.
    let p = TrigPolynomial::new(0.0, vec![1.0, -0.5], vec![0.25]);
    for beta in [1e5, 1e6, 1e8] {
        let d = marginal_density(p.clone(), beta).unwrap();
        let a = interval_mass(&d, &CircleInterval::new(0.13, 0.25).unwrap()).unwrap();
        let b = interval_mass(&d, &CircleInterval::new(0.63, 0.25).unwrap()).unwrap();
        assert!((a + b - 1.0).abs() <= 1e-10, "beta {beta}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn trig_densities_are_normalized(c in prop::collection::vec(-2.0f64..2.0, 1..4),
                                     s in prop::collection::vec(-2.0f64..2.0, 0..3),
                                     beta in 0.0f64..200.0) {
        let d = marginal_density(TrigPolynomial::new(0.3, c, s), beta).unwrap();
        prop_assert!((interval_mass(&d, &full_circle()).unwrap() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn constant_shift_leaves_masses_alone(shift in -50.0f64..50.0, beta in 0.1f64..500.0,
                                          center in 0.0f64..1.0, h in 0.01f64..0.4) {
        let p = TrigPolynomial::new(0.0, vec![1.0, -0.4], vec![0.3]);
        let a = marginal_density(p.clone(), beta).unwrap();
        let b = marginal_density(p.shifted(shift), beta).unwrap();
        let iv = CircleInterval::new(center, h).unwrap();
        prop_assert!((interval_mass(&a, &iv).unwrap() - interval_mass(&b, &iv).unwrap()).abs() <= 1e-12);
        prop_assert!((b.log_z.ln() - a.log_z.ln() - beta * shift).abs() <= 1e-9 * (1.0 + (beta * shift).abs()));
    }

    #[test]
    fn desk_shift_invariance(bits in 0u32..16, shift in -5.0f64..5.0, m in 1usize..=4) {
        let s = desk4();
        let signs = sign_pattern(bits, 4);
        let u = build_u(&signs, &s, 4).unwrap();
        let beta = s.level(m);
        let a = marginal_density(u.clone(), beta).unwrap();
        let b = marginal_density(u.shifted(shift), beta).unwrap();
        let iv = s.window(m - 1, signs.get(m)).unwrap();
        prop_assert!((interval_mass(&a, &iv).unwrap() - interval_mass(&b, &iv).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn masses_are_additive(beta in 0.0f64..100.0, c in 0.0f64..1.0, h in 0.01f64..0.2) {
        let d = marginal_density(TrigPolynomial::new(0.0, vec![1.0], vec![0.5]), beta).unwrap();
        let left = CircleInterval::new(c - h / 2.0, h / 2.0).unwrap();
        let right = CircleInterval::new(c + h / 2.0, h / 2.0).unwrap();
        let whole = CircleInterval::new(c, h).unwrap();
        let sum = interval_mass(&d, &left).unwrap() + interval_mass(&d, &right).unwrap();
        prop_assert!((sum - interval_mass(&d, &whole).unwrap()).abs() <= 1e-11);
    }

    #[test]
    fn flipping_all_signs_mirrors_the_phases(bits in 0u32..16, m in 1usize..=4) {
        let s = desk4();
        let signs = sign_pattern(bits, 4);
        let a = window_mass(&signs, m, s.level(m), &s).unwrap();
        let b = window_mass(&signs.flipped(), m, s.level(m), &s).unwrap();
        prop_assert!((a.achieved - b.achieved).abs() <= 1e-9);
    }
}

/// `U = (3 cos 2πθ + 10 cos 4πθ - 3 cos 6πθ) / (8 (2π)^2)` has maxima at 0 and
/// 1/2 with `-U''/2` equal to 1 and 4.
fn two_curvatures() -> TrigPolynomial {
    let k = 8.0 * (2.0 * PI).powi(2);
    TrigPolynomial::new(0.0, vec![3.0 / k, 10.0 / k, -3.0 / k], vec![])
}

#[test]
fn laplace_weights_follow_curvature() {
    let p = two_curvatures();
    let atoms = laplace_limit(&p).unwrap();
    assert_eq!(atoms.len(), 2);
    let d = marginal_density(p, 1e4).unwrap();
    for h in [0.2, 0.1, 0.05] {
        for a in &atoms {
            let got = interval_mass(&d, &CircleInterval::new(a.atom, h).unwrap()).unwrap();
            assert!((got - a.weight).abs() <= 0.02 * a.weight, "h {h} atom {} mass {got}", a.atom);
        }
    }
    let w0 = atoms.iter().find(|a| wrap(a.atom).abs() < 1e-9).unwrap().weight;
    assert!((w0 - 2.0 / 3.0).abs() < 1e-9);
}

fn order2_window_mass(amplitude: f64, beta: f64) -> f64 {
    let p = TrigPolynomial::new(0.0, vec![amplitude, 2.0 * amplitude, -amplitude], vec![]);
    let d = marginal_density(p, beta).unwrap();
    interval_mass(&d, &CircleInterval::new(0.5, 0.05).unwrap()).unwrap()
}

#[test]
fn higher_order_maximum_takes_all_mass() {
    // Maxima of equal height at 0 (order 4) and 1/2 (order 2).
    let p = TrigPolynomial::new(0.0, vec![1.0, 2.0, -1.0], vec![]);
    assert!((p.eval(0.0) - p.eval(0.5)).abs() < 1e-12);
    let atoms = laplace_limit(&p).unwrap();
    assert_eq!(atoms.len(), 1);
    assert_eq!(atoms[0].order, 4);
    assert!(wrap(atoms[0].atom).abs() < 1e-6);
    // The order-2 share decays like β^{-1/4}.
    let (a, b) = (order2_window_mass(1.0, 1e4), order2_window_mass(1.0, 1e8));
    assert!(a < 0.05 && b < 0.005, "{a} {b}");
    let odds = (b / (1.0 - b)) / (a / (1.0 - a));
    assert!((odds - 0.1).abs() < 0.002, "{a} {b}");
    assert!(order2_window_mass(1000.0, 1e4) < 0.01);
}

#[test]
fn analytic_schedule_statement_is_out_of_range() {
    let s = Schedule::analytic(3);
    let r = verify_xy_statement(&SignSequence::constant(Sign::Plus), 1, 1, 1.0, &s);
    assert!(r.is_err());
}

#[test]
fn statement_rejects_nonconstant_signs() {
    let s = desk4();
    let signs = SignSequence::parse("+-").unwrap();
    assert!(verify_xy_statement(&signs, 1, 2, s.level(1), &s).is_err());
}

#[test]
fn desk_statement_on_constant_blocks() {
    let s = desk4();
    for bits in 0..16 {
        let signs = sign_pattern(bits, 4);
        for m in 1..=4 {
            for m_hat in m..=4 {
                if !signs.constant_on(m, m_hat) {
                    continue;
                }
                let (lo, hi) = (s.level(m).ln(), s.level(m_hat).ln());
                let n = if m == m_hat { 1 } else { 9 };
                for i in 0..n {
                    let t = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
                    let beta = (lo + t * (hi - lo)).exp().clamp(s.level(m), s.level(m_hat));
                    let v = verify_xy_statement(&signs, m, m_hat, beta, &s).unwrap();
                    assert!(v.holds, "{signs} [{m},{m_hat}] beta {beta}: {} < {}", v.achieved, v.required);
                }
            }
        }
    }
}

#[test]
fn alternating_signs_oscillate() {
    let s = desk4();
    let alt = SignSequence::alternating(Sign::Plus, 4);
    for m in 1..=4 {
        let d = marginal_density(build_u(&alt, &s, 4).unwrap(), s.level(m)).unwrap();
        let plus = interval_mass(&d, &s.window(m - 1, Sign::Plus).unwrap()).unwrap();
        if alt.get(m) == Sign::Plus {
            assert!(plus >= 0.9, "m {m}: {plus}");
        } else {
            assert!(plus <= 0.1, "m {m}: {plus}");
        }
    }
}

#[test]
fn scheduled_signs_follow_the_targets() {
    let s = desk4();
    let targets = [s.level(2) * 1.5, s.level(4) * 1.5];
    let signs = schedule_signs(&targets, &SignSequence::constant(Sign::Plus), 1, &s).unwrap();
    assert_eq!(signs.get(2), Sign::Plus);
    assert_eq!(signs.get(4), Sign::Minus);
}

#[test]
fn family_modulus_vanishes_on_equal_signs() {
    let s = desk4();
    let a = SignSequence::parse("++-+").unwrap();
    assert!(family_modulus(&a, &a, 2, &s).unwrap().is_zero());
    let b = SignSequence::parse("++--").unwrap();
    assert!(!family_modulus(&a, &b, 2, &s).unwrap().is_zero());
}

#[test]
fn interval_systems_nest() {
    let s = desk4();
    for m in 1..=3 {
        assert!(m_set_inclusion_holds(m, &s).unwrap(), "m {m}");
    }
}
