//! Stats module checked against scipy/statsmodels reference values
//! (generated by tests/oracles/stats_oracle.py) and distributional
//! properties.

use boardsense_core::stats::special::{gamma_q, ln_gamma};
use boardsense_core::stats::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};

const TEN: [f64; 10] = [2.1, 3.4, 1.9, 5.6, 4.4, 3.3, 2.8, 6.1, 3.9, 4.0];
const SKEWED20: [f64; 20] = [
    0.3, 0.1, 2.5, 0.7, 0.2, 0.05, 1.4, 0.9, 3.8, 0.4, 0.6, 0.15, 0.8, 5.2, 0.35, 1.1, 0.25,
    0.5, 2.0, 0.45,
];

fn dunn_groups() -> Vec<Vec<f64>> {
    vec![
        vec![1.2, 2.3, 1.8, 2.9, 1.1, 2.2, 1.8],
        vec![3.1, 2.9, 4.5, 3.8, 4.1, 3.3],
        vec![5.2, 4.4, 6.1, 5.0, 3.8, 5.7, 4.9, 6.3],
    ]
}

fn labels(k: usize) -> Vec<String> {
    (0..k).map(|i| format!("g{i}")).collect()
}

#[test]
fn shapiro_wilk_matches_reference() {
    let cases: [(&[f64], f64, f64); 4] = [
        (&TEN, 0.955_704_266_341_904_9, 0.736_002_566_291_537_6),
        (&SKEWED20, 0.724_776_379_743_749_6, 7.941_779_731_905_101e-5),
        (&[1.0, 2.0, 4.0, 8.0], 0.920_202_678_880_602_6, 0.538_083_777_775_902_5),
        (
            &[10.2, 9.8, 10.5, 11.1, 9.4, 10.0, 10.7],
            0.994_962_680_071_142_5,
            0.999_031_950_410_770_8,
        ),
    ];
    for (xs, w, p) in cases {
        let r = shapiro_wilk(xs).unwrap();
        assert!((r.statistic - w).abs() < 1e-6, "W {} vs {w}", r.statistic);
        assert!((r.p_value - p).abs() < 1e-6 * p.max(1e-3), "p {} vs {p}", r.p_value);
    }
}

#[test]
fn shapiro_wilk_null_rarely_rejects() {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let accepted = (0..100u64)
        .filter(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let xs: Vec<f64> = (0..50).map(|_| normal.sample(&mut rng)).collect();
            shapiro_wilk(&xs).unwrap().p_value > 0.01
        })
        .count();
    assert!(accepted >= 95, "{accepted}/100");
}

#[test]
fn shapiro_wilk_rejects_exponential() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let exp = Exp::new(1.0).unwrap();
    let xs: Vec<f64> = (0..500).map(|_| exp.sample(&mut rng)).collect();
    assert!(shapiro_wilk(&xs).unwrap().p_value < 0.001);
}

#[test]
fn kruskal_wallis_matches_reference() {
    let r = kruskal_wallis(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
    assert!((r.statistic - 3.857).abs() < 1e-3);
    assert!((r.p_value - 0.049_534_613_435_626_915).abs() < 1e-12);

    let r = kruskal_wallis(&dunn_groups()).unwrap();
    assert!((r.statistic - 16.397_318_524_026_396).abs() < 1e-9);
    assert!((r.p_value - 2.750_220_554_126_301_4e-4).abs() < 1e-12);
    assert_eq!(r.groups, vec![7, 6, 8]);
    assert!((r.effect_size.unwrap() - (16.397_318_524_026_396 - 2.0) / 18.0).abs() < 1e-9);
}

#[test]
fn kruskal_wallis_detects_shift() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let groups: Vec<Vec<f64>> = (0..3)
        .map(|g| (0..30).map(|_| normal.sample(&mut rng) + g as f64).collect())
        .collect();
    assert!(kruskal_wallis(&groups).unwrap().p_value < 0.01);
}

#[test]
fn dunn_matches_reference() {
    let g = dunn_groups();
    let expected_z = [
        (0, 1, -2.009_045_300_957_349_2),
        (0, 2, -4.049_360_261_081_545),
        (1, 2, -1.810_928_961_832_926_3),
    ];
    let expected_p = [
        (
            Adjustment::None,
            [0.044_532_329_726_437_47, 5.135_783_291_831_964_6e-5, 0.070_151_848_748_706_16],
        ),
        (
            Adjustment::Holm,
            [0.089_064_659_452_874_94, 1.540_734_987_549_589_5e-4, 0.089_064_659_452_874_94],
        ),
        (
            Adjustment::Bonferroni,
            [0.133_596_989_179_312_4, 1.540_734_987_549_589_5e-4, 0.210_455_546_246_118_45],
        ),
    ];
    for (method, ps) in expected_p {
        let m = dunn_posthoc(&g, &labels(3), method).unwrap();
        for (k, &(i, j, z)) in expected_z.iter().enumerate() {
            assert!((m.z[i][j] - z).abs() < 1e-9);
            assert!((m.z[j][i] + z).abs() < 1e-9);
            assert!((m.p_values[i][j] - ps[k]).abs() < 1e-6, "{method} {i}{j}");
            assert_eq!(m.p_values[i][j], m.p_values[j][i]);
        }
        assert_eq!(m.p_values[1][1], 1.0);
    }
}

#[test]
fn two_group_dunn_squares_to_kruskal_wallis() {
    let g = vec![vec![1.3, 4.2, 2.2, 8.1, 5.5], vec![3.3, 9.4, 7.7, 6.1, 10.2, 0.4]];
    let h = kruskal_wallis(&g).unwrap().statistic;
    let z = dunn_posthoc(&g, &labels(2), Adjustment::None).unwrap().z[0][1];
    assert!((z * z - h).abs() < 1e-9);
}

#[test]
fn rank_tests_are_scale_invariant() {
    let g = dunn_groups();
    let scaled: Vec<Vec<f64>> = g
        .iter()
        .map(|v| v.iter().map(|x| x * 3.75).collect())
        .collect();
    assert_eq!(kruskal_wallis(&g).unwrap(), kruskal_wallis(&scaled).unwrap());
    assert_eq!(
        dunn_posthoc(&g, &labels(3), Adjustment::Holm).unwrap(),
        dunn_posthoc(&scaled, &labels(3), Adjustment::Holm).unwrap()
    );
}

#[test]
fn special_functions_match_reference() {
    let sf = [
        (0.0, 0.5),
        (1.0, 0.158_655_253_931_457_07),
        (1.96, 0.024_997_895_148_220_435),
        (3.0, 0.001_349_898_031_630_093_3),
        (5.0, 2.866_515_718_791_933e-7),
        (8.0, 6.220_960_574_271_74e-16),
        (-2.5, 0.993_790_334_674_223_8),
    ];
    for (z, p) in sf {
        assert!((normal_sf(z) - p).abs() <= 1e-12 * p.max(1e-4), "{z}");
    }
    assert!((normal_sf(1.96) - 0.024_997_9).abs() < 1e-7);

    let chi = [
        (3.857_142_857_142_857, 1.0, 0.049_534_613_435_626_49),
        (10.0, 3.0, 0.018_566_135_463_043_25),
        (0.5, 4.0, 0.973_500_978_839_256_1),
        (25.0, 7.0, 7.588_002_556_582_502e-4),
    ];
    for (x, df, p) in chi {
        assert!((chi2_sf(x, df) - p).abs() < 1e-12, "{x} {df}");
    }
    assert_eq!(chi2_sf(11_871.68, 8.0), 0.0);

    let q = [
        (1e-10, -6.361_340_902_404_056),
        (0.001, -3.090_232_306_167_813),
        (0.025, -1.959_963_984_540_054_5),
        (0.3, -0.524_400_512_708_040_9),
        (0.9, 1.281_551_565_544_600_4),
        (0.999_999, 4.753_424_308_817_087),
    ];
    for (p, z) in q {
        assert!((normal_quantile(p) - z).abs() < 1e-12 * z.abs().max(1.0), "{p}");
    }

    let lg = [
        (0.5, 0.572_364_942_924_7),
        (3.7, 1.428_072_326_665_388),
        (12.25, 18.115_669_505_710_894),
        (100.0, 359.134_205_369_575_4),
    ];
    for (x, v) in lg {
        assert!((ln_gamma(x) - v).abs() < 1e-12 * v.abs().max(1.0), "{x}");
    }
}

#[test]
fn chi_square_tail_decreases_in_h() {
    let mut prev = 1.0;
    for i in 1..200 {
        let h = i as f64 * 0.25;
        let p = chi2_sf(h, 8.0);
        assert!(p < prev, "{h}");
        prev = p;
    }
    assert!((gamma_q(1.0, 2.0) - (-2.0f64).exp()).abs() < 1e-15);
}

#[test]
fn two_proportion_reference_values() {
    let a = two_proportion_z(1572, 2000, 1589, 2000).unwrap();
    assert!((a.statistic - -0.660_215_458_320_883_6).abs() < 1e-12);
    assert!((a.p_value - 0.509_115_573_621_343_3).abs() < 1e-12);
    let b = two_proportion_z(1589, 2000, 1937, 2000).unwrap();
    assert!((b.statistic - -17.024_678_323_554_483).abs() < 1e-10);
    assert!(b.p_value < 1e-60);
}

#[test]
fn eta_squared_reproduces_reported_effects() {
    assert!((eta_squared(11_871.68, 9, 18_000).unwrap() - 0.6594).abs() < 1e-4);
    assert!((eta_squared(12_058.8, 9, 18_000).unwrap() - 0.6698).abs() < 1e-4);
}

#[test]
fn report_json_shape() {
    let r = kruskal_wallis(&dunn_groups()).unwrap();
    let v = serde_json::to_value(&r).unwrap();
    for key in ["test", "statistic", "p_value", "effect_size", "groups"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert_eq!(v["test"], "kruskal_wallis");
}
