//! Rank-based tests: Kruskal-Wallis and Dunn's post-hoc comparisons.

use serde::{Deserialize, Serialize};

use super::special::{chi2_sf, normal_sf};
use super::{StatsError, TestResult};

struct Ranked {
    /// Sum of ranks per group.
    rank_sums: Vec<f64>,
    sizes: Vec<usize>,
    n: usize,
    /// Σ (t³ − t) over tie blocks.
    tie_sum: f64,
}

fn rank_groups(groups: &[Vec<f64>]) -> Result<Ranked, StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::SampleSize {
            n: groups.len(),
            reason: "need at least two groups",
        });
    }
    if let Some(n) = groups.iter().map(Vec::len).find(|&n| n == 0) {
        return Err(StatsError::SampleSize {
            n,
            reason: "every group must be non-empty",
        });
    }
    let mut pooled: Vec<(f64, usize)> = Vec::new();
    for (g, values) in groups.iter().enumerate() {
        for &v in values {
            if !v.is_finite() {
                return Err(StatsError::NonFinite);
            }
            pooled.push((v, g));
        }
    }
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = pooled.len();
    let mut rank_sums = vec![0.0; groups.len()];
    let mut tie_sum = 0.0;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && pooled[end].0 == pooled[start].0 {
            end += 1;
        }
        // ranks start..end (0-based) share their midrank
        let midrank = (start + end + 1) as f64 / 2.0;
        for &(_, g) in &pooled[start..end] {
            rank_sums[g] += midrank;
        }
        let t = (end - start) as f64;
        tie_sum += t * t * t - t;
        start = end;
    }
    Ok(Ranked {
        rank_sums,
        sizes: groups.iter().map(Vec::len).collect(),
        n,
        tie_sum,
    })
}

/// η² = (H − k + 1) / (n − k).
pub fn eta_squared(h: f64, k: usize, n: usize) -> Result<f64, StatsError> {
    if k < 2 || n <= k {
        return Err(StatsError::SampleSize {
            n,
            reason: "eta squared needs n > k >= 2",
        });
    }
    Ok((h - k as f64 + 1.0) / (n - k) as f64)
}

/// Kruskal-Wallis H with tie correction; p from chi-square with k − 1 df.
/// All-identical data is degenerate and yields H = 0, p = 1.
pub fn kruskal_wallis(groups: &[Vec<f64>]) -> Result<TestResult, StatsError> {
    let r = rank_groups(groups)?;
    let n = r.n as f64;
    let k = groups.len();
    let correction = 1.0 - r.tie_sum / (n * n * n - n);
    let h = if correction <= 0.0 {
        0.0
    } else {
        let raw = 12.0 / (n * (n + 1.0))
            * r.rank_sums
                .iter()
                .zip(&r.sizes)
                .map(|(s, &ni)| s * s / ni as f64)
                .sum::<f64>()
            - 3.0 * (n + 1.0);
        (raw / correction).max(0.0)
    };
    let p = if h == 0.0 { 1.0 } else { chi2_sf(h, (k - 1) as f64) };
    let mut result = TestResult::new("kruskal_wallis", h, p).with_groups(r.sizes.clone());
    result.df = Some((k - 1) as f64);
    if r.n > k {
        result.effect_size = Some(eta_squared(h, k, r.n)?);
    }
    Ok(result)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Adjustment {
    #[default]
    Holm,
    Bonferroni,
    None,
}

impl std::str::FromStr for Adjustment {
    type Err = StatsError;

    fn from_str(s: &str) -> Result<Adjustment, StatsError> {
        match s.to_ascii_lowercase().as_str() {
            "holm" => Ok(Adjustment::Holm),
            "bonferroni" => Ok(Adjustment::Bonferroni),
            "none" => Ok(Adjustment::None),
            _ => Err(StatsError::Degenerate(format!("unknown adjustment {s:?}"))),
        }
    }
}

impl std::fmt::Display for Adjustment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Adjustment::Holm => "holm",
            Adjustment::Bonferroni => "bonferroni",
            Adjustment::None => "none",
        })
    }
}

/// Adjust a family of p-values in place.
pub fn adjust_p_values(p: &[f64], method: Adjustment) -> Vec<f64> {
    let m = p.len() as f64;
    match method {
        Adjustment::None => p.to_vec(),
        Adjustment::Bonferroni => p.iter().map(|v| (v * m).min(1.0)).collect(),
        Adjustment::Holm => {
            let mut order: Vec<usize> = (0..p.len()).collect();
            order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
            let mut out = vec![0.0; p.len()];
            let mut running = 0.0f64;
            for (rank, &i) in order.iter().enumerate() {
                let v = ((m - rank as f64) * p[i]).min(1.0);
                running = running.max(v);
                out[i] = running;
            }
            out
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosthocMatrix {
    pub labels: Vec<String>,
    /// Symmetric adjusted p-values, 1 on the diagonal.
    pub p_values: Vec<Vec<f64>>,
    /// Signed z of row minus column mean ranks, 0 on the diagonal.
    pub z: Vec<Vec<f64>>,
    pub adjustment: Adjustment,
}

impl PosthocMatrix {
    pub fn p(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.labels.iter().position(|l| l == a)?;
        let j = self.labels.iter().position(|l| l == b)?;
        Some(self.p_values[i][j])
    }
}

/// Dunn's pairwise comparisons of mean ranks with tie correction.
pub fn dunn_posthoc(
    groups: &[Vec<f64>],
    labels: &[String],
    adjust: Adjustment,
) -> Result<PosthocMatrix, StatsError> {
    if labels.len() != groups.len() {
        return Err(StatsError::SampleSize {
            n: labels.len(),
            reason: "one label per group",
        });
    }
    let r = rank_groups(groups)?;
    let n = r.n as f64;
    let variance = n * (n + 1.0) / 12.0 - r.tie_sum / (12.0 * (n - 1.0));
    if variance <= 0.0 {
        return Err(StatsError::Degenerate("all values are identical".into()));
    }
    let k = groups.len();
    let mean_rank: Vec<f64> = r
        .rank_sums
        .iter()
        .zip(&r.sizes)
        .map(|(s, &ni)| s / ni as f64)
        .collect();
    let mut z = vec![vec![0.0; k]; k];
    let mut pairs = Vec::new();
    let mut raw = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            let se = (variance * (1.0 / r.sizes[i] as f64 + 1.0 / r.sizes[j] as f64)).sqrt();
            let zij = (mean_rank[i] - mean_rank[j]) / se;
            z[i][j] = zij;
            z[j][i] = -zij;
            pairs.push((i, j));
            raw.push((2.0 * normal_sf(zij.abs())).min(1.0));
        }
    }
    let adjusted = adjust_p_values(&raw, adjust);
    let mut p = vec![vec![1.0; k]; k];
    for (&(i, j), &v) in pairs.iter().zip(&adjusted) {
        p[i][j] = v;
        p[j][i] = v;
    }
    Ok(PosthocMatrix {
        labels: labels.to_vec(),
        p_values: p,
        z,
        adjustment: adjust,
    })
}
