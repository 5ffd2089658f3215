//! Student-t tails checked against numerical integration of the density.

use covsum::analysis::stats::{ln_gamma, paired_ttest, student_t_two_tailed};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn t_density(x: f64, df: f64) -> f64 {
    let ln_c = ln_gamma_oracle((df + 1.0) / 2.0) - ln_gamma_oracle(df / 2.0) - 0.5 * (df * std::f64::consts::PI).ln();
    (ln_c - (df + 1.0) / 2.0 * (1.0 + x * x / df).ln()).exp()
}

/// Stirling series with upward recurrence; independent of the Lanczos fit.
fn ln_gamma_oracle(x: f64) -> f64 {
    let mut x = x;
    let mut shift = 0.0;
    while x < 10.0 {
        shift -= x.ln();
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)));
    shift + (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + series
}

/// Composite Simpson on `[0, |t|]`; the two-tailed p is `1 - 2 * integral`.
fn simpson_two_tailed(t: f64, df: f64) -> f64 {
    let b = t.abs();
    let n = 20_000;
    let h = b / n as f64;
    let mut s = t_density(0.0, df) + t_density(b, df);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * t_density(k as f64 * h, df);
    }
    (1.0 - 2.0 * s * h / 3.0).max(0.0)
}

#[test]
fn p_values_match_simpson_on_50_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for k in 0..50 {
        let n = rng.gen_range(2..40);
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let shift = rng.gen_range(-0.3..0.3);
        let b: Vec<f64> = a.iter().map(|x| x + shift + rng.gen_range(-0.4..0.4)).collect();
        let r = paired_ttest(&a, &b).unwrap();
        let oracle = simpson_two_tailed(r.t_statistic, (n - 1) as f64);
        assert!(
            (r.p_value - oracle).abs() < 1e-3,
            "sample {k}: n={n} t={} p={} oracle={oracle}",
            r.t_statistic,
            r.p_value
        );
        assert_eq!(r.significant_05, r.p_value < 0.05);
    }
}

#[test]
fn tails_over_a_grid() {
    for df in [1.0, 2.0, 3.0, 5.0, 10.0, 30.0, 120.0] {
        for t in [0.0, 0.1, 0.7, 1.5, 2.2, 3.5, 6.0] {
            let p = student_t_two_tailed(t, df);
            let o = simpson_two_tailed(t, df);
            assert!((p - o).abs() < 1e-6, "df={df} t={t}: {p} vs {o}");
        }
    }
}

#[test]
fn ln_gamma_matches_stirling() {
    for x in [0.3, 0.5, 1.0, 1.7, 2.5, 7.25, 15.0, 60.5] {
        assert!((ln_gamma(x) - ln_gamma_oracle(x)).abs() < 1e-10, "x={x}");
    }
}
