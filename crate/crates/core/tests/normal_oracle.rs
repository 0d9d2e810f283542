use astro_float::{BigFloat, Consts, RoundingMode, Sign, WORD_BIT_SIZE};
use opstat_core::{std_normal_cdf, std_normal_quantile};

const BITS: usize = 320;
const RM: RoundingMode = RoundingMode::ToEven;

/// `Φ(z) = 1/2 + φ(z) Σ_{j>=0} z^{2j+1} / (2j+1)!!`, summed in 320 bits.
fn phi_oracle(z: f64, cc: &mut Consts) -> f64 {
    let x = BigFloat::from_f64(z, BITS);
    let x2 = x.mul(&x, BITS, RM);
    let half = BigFloat::from_f64(0.5, BITS);
    let two_pi = cc.pi(BITS, RM).mul(&BigFloat::from_u64(2, BITS), BITS, RM);
    let density = x2
        .mul(&half, BITS, RM)
        .neg()
        .exp(BITS, RM, cc)
        .div(&two_pi.sqrt(BITS, RM), BITS, RM);
    let mut term = x.clone();
    let mut sum = x.clone();
    let eps = BigFloat::from_f64(1e-90, BITS);
    for j in 1..10_000u64 {
        term = term
            .mul(&x2, BITS, RM)
            .div(&BigFloat::from_u64(2 * j + 1, BITS), BITS, RM);
        sum = sum.add(&term, BITS, RM);
        if term.abs().cmp(&eps).is_some_and(|c| c < 0) {
            break;
        }
    }
    let v = half.add(&density.mul(&sum, BITS, RM), BITS, RM);
    to_f64(&v)
}

fn to_f64(x: &BigFloat) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    let (m, _, sign, e, _) = x.as_raw_parts().unwrap();
    let w = WORD_BIT_SIZE as i32;
    let hi = m[m.len() - 1] as f64 * 2f64.powi(e - w);
    let lo = m[m.len() - 2] as f64 * 2f64.powi(e - 2 * w);
    if sign == Sign::Neg { -(hi + lo) } else { hi + lo }
}

#[test]
fn cdf_matches_series_oracle() {
    let mut cc = Consts::new().unwrap();
    let mut worst = 0.0f64;
    for i in -800..=800 {
        let z = i as f64 / 100.0;
        let err = (std_normal_cdf(z) - phi_oracle(z, &mut cc)).abs();
        worst = worst.max(err);
    }
    assert!(worst <= 1e-14, "worst absolute error {worst:e}");
}

#[test]
fn cdf_reference_point() {
    let mut cc = Consts::new().unwrap();
    assert!((phi_oracle(1.959964, &mut cc) - 0.975).abs() < 1e-6);
    assert!((std_normal_cdf(1.959964) - 0.975).abs() < 1e-6);
}

/// `Φ⁻¹(Φ(z)) = z` to 1e-9 wherever `Φ(z)` itself is resolved finely enough
/// in `f64`. Near `Φ = 1` adjacent doubles are 1.1e-16 apart, so for `z`
/// above about 5.4 the round trip can only be as good as
/// `ulp(Φ(z)) / φ(z)`; there the check uses that bound.
#[test]
fn quantile_inverts_cdf() {
    let mut worst_lower = 0.0f64;
    for i in -6000..=6000 {
        let z = i as f64 / 1000.0;
        let q = std_normal_cdf(z);
        let back = std_normal_quantile(q);
        let density = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let ulp = f64::from_bits(q.to_bits() + 1) - q;
        let resolution = 2.0 * ulp / density;
        let tol = 1e-9f64.max(resolution);
        assert!((back - z).abs() <= tol, "z={z} back={back}");
        if z <= 0.0 {
            worst_lower = worst_lower.max((back - z).abs());
        }
    }
    assert!(worst_lower < 1e-9);
}
