//! Standard normal quantile and CDF.
//!
//! The quantile is the Wichura AS 241 (PPND16) rational approximation, accurate
//! to roughly 1e-15 — comfortably beyond the 1e-9 the interval constructions
//! need — and implemented here so confidence intervals are reproducible without
//! depending on any external math library. The CDF is obtained by inverting the
//! quantile with bisection plus Newton polish, which keeps the pair exactly
//! consistent with each other.

/// Standard normal quantile (inverse CDF) for `p` in the open interval (0, 1).
///
/// # Panics
/// Panics if `p` is not strictly inside (0, 1).
pub fn std_normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile level must be in (0, 1), got {p}");

    let q = p - 0.5;
    if q.abs() <= 0.425 {
        // Central region: rational approximation in r = 0.425^2 - q^2.
        let r = 0.180625 - q * q;
        const A: [f64; 8] = [
            3.387_132_872_796_366_608e0,
            1.331_416_678_917_843_774_5e2,
            1.971_590_950_306_551_442_7e3,
            1.373_169_376_550_946_112_5e4,
            4.592_195_393_154_987_145_7e4,
            6.726_577_092_700_870_085_3e4,
            3.343_057_558_358_812_810_5e4,
            2.509_080_928_730_122_672_7e3,
        ];
        const B: [f64; 7] = [
            4.231_333_070_160_091_125_2e1,
            6.871_870_074_920_579_083e2,
            5.394_196_021_424_751_107_7e3,
            2.121_379_430_158_659_586_7e4,
            3.930_789_580_009_271_061e4,
            2.872_908_573_572_194_267_4e4,
            5.226_495_278_852_854_561e3,
        ];
        let num = poly7(&A, r) * q;
        let den = poly7b(&B, r);
        return num / den;
    }

    // Tail regions: approximation in r = sqrt(-log(min(p, 1-p))).
    let lower = q < 0.0;
    let rr = if lower { p } else { 1.0 - p };
    let mut r = (-rr.ln()).sqrt();
    let x = if r <= 5.0 {
        r -= 1.6;
        const C: [f64; 8] = [
            1.423_437_110_749_683_577_34e0,
            4.630_337_846_156_545_295_9e0,
            5.769_497_221_460_691_405_5e0,
            3.647_848_324_763_204_605_04e0,
            1.270_458_252_452_368_382_58e0,
            2.417_807_251_774_506_117_7e-1,
            2.272_384_498_926_918_458_33e-2,
            7.745_450_142_783_414_076_4e-4,
        ];
        const D: [f64; 7] = [
            2.053_191_626_637_758_821_87e0,
            1.676_384_830_183_803_849_4e0,
            6.897_673_349_851_000_045_5e-1,
            1.481_039_764_274_800_745_9e-1,
            1.519_866_656_361_645_719_66e-2,
            5.475_938_084_995_344_946e-4,
            1.050_750_071_644_416_843_24e-9,
        ];
        poly7(&C, r) / poly7b(&D, r)
    } else {
        r -= 5.0;
        const E: [f64; 8] = [
            6.657_904_643_501_103_777_2e0,
            5.463_784_911_164_114_369_9e0,
            1.784_826_539_917_291_335_8e0,
            2.965_605_718_285_048_912_3e-1,
            2.653_218_952_657_612_309_3e-2,
            1.242_660_947_388_078_438_6e-3,
            2.711_555_568_743_487_578_15e-5,
            2.010_334_399_292_288_132_65e-7,
        ];
        const F: [f64; 7] = [
            5.998_322_065_558_879_376_9e-1,
            1.369_298_809_227_358_053_1e-1,
            1.487_536_129_085_061_485_25e-2,
            7.868_691_311_456_132_591e-4,
            1.846_318_317_510_054_681_8e-5,
            1.421_511_758_316_445_888_7e-7,
            2.044_263_103_389_939_785_64e-15,
        ];
        poly7(&E, r) / poly7b(&F, r)
    };
    if lower {
        -x
    } else {
        x
    }
}

/// Standard normal CDF, consistent with [`std_normal_quantile`] to machine
/// precision. Arguments beyond roughly +/-8.3 saturate at 0 or 1 in f64.
pub fn std_normal_cdf(x: f64) -> f64 {
    const P_LO: f64 = 1e-300;
    const P_HI: f64 = 1.0 - 1e-16;
    if x <= std_normal_quantile(P_LO) {
        return 0.0;
    }
    if x >= std_normal_quantile(P_HI) {
        return 1.0;
    }

    // Bisection on the monotone quantile, then Newton polish using the density.
    let (mut lo, mut hi) = (P_LO, P_HI);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if std_normal_quantile(mid) < x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut p = 0.5 * (lo + hi);
    for _ in 0..3 {
        let q = std_normal_quantile(p);
        let dens = (-0.5 * q * q).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let next = p - (q - x) * dens;
        if next > 0.0 && next < 1.0 {
            p = next;
        }
    }
    p
}

fn poly7(c: &[f64; 8], r: f64) -> f64 {
    ((((((c[7] * r + c[6]) * r + c[5]) * r + c[4]) * r + c[3]) * r + c[2]) * r + c[1]) * r + c[0]
}

fn poly7b(c: &[f64; 7], r: f64) -> f64 {
    ((((((c[6] * r + c[5]) * r + c[4]) * r + c[3]) * r + c[2]) * r + c[1]) * r + c[0]) * r + 1.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_matches_reference_values() {
        // Reference quantiles quoted to full double precision.
        let cases = [
            (0.5, 0.0),
            (0.9, 1.281_551_565_544_600_4),
            (0.95, 1.644_853_626_951_472_2),
            (0.975, 1.959_963_984_540_054),
            (0.99, 2.326_347_874_040_840_8),
            (0.995, 2.575_829_303_548_900_4),
            (0.999, 3.090_232_306_167_813),
        ];
        for (p, expected) in cases {
            let got = std_normal_quantile(p);
            assert!(
                (got - expected).abs() < 1e-9,
                "quantile({p}) = {got}, expected {expected}"
            );
        }
    }

    #[test]
    fn quantile_is_antisymmetric() {
        // Below ~1e-7 the complement 1 - p is no longer exactly representable,
        // so antisymmetry can only be checked down to that scale.
        for &p in &[1e-6, 0.01, 0.2, 0.47] {
            let a = std_normal_quantile(p);
            let b = std_normal_quantile(1.0 - p);
            assert!((a + b).abs() < 1e-9 * (1.0 + a.abs()), "p={p}: {a} vs {b}");
        }
    }

    #[test]
    fn quantile_far_tail_reference() {
        let got = std_normal_quantile(1e-20);
        assert!(
            (got - -9.262_340_089_798_408).abs() < 1e-9,
            "quantile(1e-20) = {got}"
        );
    }

    #[test]
    fn cdf_inverts_quantile() {
        for &p in &[1e-8, 1e-4, 0.025, 0.3, 0.5, 0.8, 0.977, 1.0 - 1e-6] {
            let x = std_normal_quantile(p);
            let back = std_normal_cdf(x);
            assert!((back - p).abs() < 1e-12, "p={p}, roundtrip {back}");
        }
    }

    #[test]
    fn cdf_known_points() {
        assert!((std_normal_cdf(0.0) - 0.5).abs() < 1e-14);
        assert!((std_normal_cdf(1.959_963_984_540_054) - 0.975).abs() < 1e-12);
        assert!((std_normal_cdf(-1.0) - 0.158_655_253_931_457_05).abs() < 1e-10);
        assert_eq!(std_normal_cdf(-40.0), 0.0);
        assert_eq!(std_normal_cdf(40.0), 1.0);
    }
}
