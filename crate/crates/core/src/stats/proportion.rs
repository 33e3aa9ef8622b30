use super::special::normal_sf;
use super::{StatsError, TestResult};

/// Pooled two-proportion Z-test, two-sided.
pub fn two_proportion_z(
    successes_1: u64,
    n_1: u64,
    successes_2: u64,
    n_2: u64,
) -> Result<TestResult, StatsError> {
    if n_1 == 0 || n_2 == 0 || successes_1 > n_1 || successes_2 > n_2 {
        return Err(StatsError::SampleSize {
            n: n_1.min(n_2) as usize,
            reason: "need 0 <= successes <= n and n > 0",
        });
    }
    let (s1, n1, s2, n2) = (
        successes_1 as f64,
        n_1 as f64,
        successes_2 as f64,
        n_2 as f64,
    );
    let pooled = (s1 + s2) / (n1 + n2);
    if pooled <= 0.0 || pooled >= 1.0 {
        return Err(StatsError::Degenerate(format!(
            "pooled proportion is {pooled}"
        )));
    }
    let se = (pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2)).sqrt();
    let z = (s1 / n1 - s2 / n2) / se;
    let p = (2.0 * normal_sf(z.abs())).min(1.0);
    Ok(TestResult::new("two_proportion_z", z, p).with_groups(vec![n_1 as usize, n_2 as usize]))
}
