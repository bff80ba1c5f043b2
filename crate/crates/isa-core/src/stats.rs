//! Standard normal quantile.
//!
//! Rational approximation with three branches (central, tail, far tail),
//! accurate to well below 1e-9 absolute over (0, 1). The unit tests pin it
//! against a bisection oracle built on an independent error-function
//! implementation.

// published coefficient tables are kept verbatim
#![allow(clippy::excessive_precision)]

use crate::error::{IsaError, Result};

/// Inverse of the standard normal CDF.
pub fn standard_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(IsaError::InvalidArgument(format!(
            "quantile argument must lie in (0, 1), got {p}"
        )));
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return Ok(q * rational(r, &CENTRAL_NUM, &CENTRAL_DEN));
    }
    let mut r = if q < 0.0 { p } else { 1.0 - p };
    r = (-r.ln()).sqrt();
    let x = if r <= 5.0 {
        rational(r - 1.6, &TAIL_NUM, &TAIL_DEN)
    } else {
        rational(r - 5.0, &FAR_NUM, &FAR_DEN)
    };
    Ok(if q < 0.0 { -x } else { x })
}

fn rational(r: f64, num: &[f64; 8], den: &[f64; 8]) -> f64 {
    let mut n = num[7];
    let mut d = den[7];
    for i in (0..7).rev() {
        n = n * r + num[i];
        d = d * r + den[i];
    }
    n / d
}

const CENTRAL_NUM: [f64; 8] = [
    3.387_132_872_796_366_608e0,
    1.331_416_678_917_843_774_5e2,
    1.971_590_950_306_551_442_7e3,
    1.373_169_376_550_946_112_5e4,
    4.592_195_393_154_987_145_7e4,
    6.726_577_092_700_870_085_3e4,
    3.343_057_558_358_812_810_5e4,
    2.509_080_928_730_122_672_7e3,
];
const CENTRAL_DEN: [f64; 8] = [
    1.0,
    4.231_333_070_160_091_125_2e1,
    6.871_870_074_920_579_083e2,
    5.394_196_021_424_751_107_7e3,
    2.121_379_430_158_659_586_7e4,
    3.930_789_580_009_271_061e4,
    2.872_908_573_572_194_267_4e4,
    5.226_495_278_852_854_561e3,
];
const TAIL_NUM: [f64; 8] = [
    1.423_437_110_749_683_577_34e0,
    4.630_337_846_156_545_295_9e0,
    5.769_497_221_460_691_405_5e0,
    3.647_848_324_763_204_605_04e0,
    1.270_458_252_452_368_382_58e0,
    2.417_807_251_774_506_117_7e-1,
    2.272_384_498_926_918_458_33e-2,
    7.745_450_142_783_414_076_4e-4,
];
const TAIL_DEN: [f64; 8] = [
    1.0,
    2.053_191_626_637_758_821_87e0,
    1.676_384_830_183_803_849_4e0,
    6.897_673_349_851_000_045_5e-1,
    1.481_039_764_274_800_745_9e-1,
    1.519_866_656_361_645_719_66e-2,
    5.475_938_084_995_344_946e-4,
    1.050_750_071_644_416_843_24e-9,
];
const FAR_NUM: [f64; 8] = [
    6.657_904_643_501_103_777_2e0,
    5.463_784_911_164_114_369_9e0,
    1.784_826_539_917_291_335_8e0,
    2.965_605_718_285_048_912_3e-1,
    2.653_218_952_657_612_309_3e-2,
    1.242_660_947_388_078_438_6e-3,
    2.711_555_568_743_487_578_15e-5,
    2.010_334_399_292_288_132_65e-7,
];
const FAR_DEN: [f64; 8] = [
    1.0,
    5.998_322_065_558_879_376_9e-1,
    1.369_298_809_227_358_053_1e-1,
    1.487_536_129_085_061_485_25e-2,
    7.868_691_311_456_132_591e-4,
    1.846_318_317_510_054_681_8e-5,
    1.421_511_758_316_445_888_7e-7,
    2.044_263_103_389_939_785_64e-15,
];

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Bisection on `Phi(x) = (1 + erf(x / sqrt(2))) / 2` with an independent
    /// erf.
    fn quantile_by_bisection(p: f64) -> f64 {
        let phi = |x: f64| 0.5 * (1.0 + statrs::function::erf::erf(x / 2.0f64.sqrt()));
        let (mut lo, mut hi) = (-10.0, 10.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if phi(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn matches_bisection_oracle_on_grid() {
        for i in 1..200 {
            let p = i as f64 / 200.0;
            let ours = standard_normal_quantile(p).unwrap();
            let oracle = quantile_by_bisection(p);
            assert!(
                (ours - oracle).abs() < 1e-9,
                "p = {p}: {ours} vs {oracle}"
            );
        }
        // tail probes, including the multiplicity-corrected regime
        for &p in &[1e-8, 1e-6, 1e-4, 0.9999932, 1.0 - 1e-6, 1.0 - 1e-8] {
            let ours = standard_normal_quantile(p).unwrap();
            let oracle = quantile_by_bisection(p);
            assert!((ours - oracle).abs() < 1e-9, "p = {p}: {ours} vs {oracle}");
        }
    }

    #[test]
    fn classic_value_at_0975() {
        let q = standard_normal_quantile(0.975).unwrap();
        assert_abs_diff_eq!(q, 1.959_963_984_540_054, epsilon = 1e-6);
    }

    #[test]
    fn antisymmetric() {
        for &p in &[0.01, 0.2, 0.4] {
            let a = standard_normal_quantile(p).unwrap();
            let b = standard_normal_quantile(1.0 - p).unwrap();
            assert_abs_diff_eq!(a, -b, epsilon = 1e-12);
        }
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(standard_normal_quantile(0.0).is_err());
        assert!(standard_normal_quantile(1.0).is_err());
        assert!(standard_normal_quantile(-0.5).is_err());
    }
}
