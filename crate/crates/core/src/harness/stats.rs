//! Score transformations and agreement measures between metric and human
//! scores.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleState {
    Raw,
    Standardized,
    Normalized,
}

/// One metric's (or the human) scores over a set of cases.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreVector {
    pub metric: String,
    pub ids: Vec<String>,
    pub values: Vec<f64>,
    pub state: ScaleState,
}

impl ScoreVector {
    pub fn raw(metric: impl Into<String>, ids: Vec<String>, values: Vec<f64>) -> Self {
        assert_eq!(ids.len(), values.len(), "one value per case id");
        ScoreVector {
            metric: metric.into(),
            ids,
            values,
            state: ScaleState::Raw,
        }
    }

    pub fn standardized(&self) -> ScoreVector {
        ScoreVector {
            values: standardize(&self.values),
            state: ScaleState::Standardized,
            ..self.clone()
        }
    }

    pub fn normalized(&self) -> ScoreVector {
        ScoreVector {
            values: normalize(&self.values),
            state: ScaleState::Normalized,
            ..self.clone()
        }
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// `(s - mean) / std` with the population standard deviation. A constant
/// input is returned unchanged.
pub fn standardize(v: &[f64]) -> Vec<f64> {
    if v.is_empty() {
        return Vec::new();
    }
    let mu = mean(v);
    let sd = (v.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / v.len() as f64).sqrt();
    if sd == 0.0 || !sd.is_finite() {
        log::warn!(
            "standardize: zero variance over {} values; left unchanged",
            v.len()
        );
        return v.to_vec();
    }
    v.iter().map(|x| (x - mu) / sd).collect()
}

/// `(s - min) / (max - min)`. A constant input maps to 0.5 everywhere.
pub fn normalize(v: &[f64]) -> Vec<f64> {
    if v.is_empty() {
        return Vec::new();
    }
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        log::warn!(
            "normalize: constant input over {} values; mapped to 0.5",
            v.len()
        );
        return vec![0.5; v.len()];
    }
    v.iter().map(|x| (x - lo) / (hi - lo)).collect()
}

/// Standardize, then min-max normalize.
pub fn rescale(v: &[f64]) -> Vec<f64> {
    normalize(&standardize(v))
}

/// 1-based ranks; ties receive the mean of the ranks they span.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let (mx, my) = (mean(x), mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rho; `None` when either side is constant or has fewer than two
/// values.
pub fn spearman(m: &[f64], h: &[f64]) -> Option<f64> {
    assert_eq!(m.len(), h.len());
    if m.len() < 2 {
        return None;
    }
    pearson(&average_ranks(m), &average_ranks(h))
}

/// `(mean(m), mean(|m - h|))`; `None` for an empty group.
pub fn mad_and_avg(m: &[f64], h: &[f64]) -> Option<(f64, f64)> {
    assert_eq!(m.len(), h.len());
    if m.is_empty() {
        return None;
    }
    let avg = mean(m);
    let mad = m.iter().zip(h).map(|(a, b)| (a - b).abs()).sum::<f64>() / m.len() as f64;
    Some((avg, mad))
}

/// Percentile with linear interpolation between closest ranks (`q` in
/// 0..=100).
pub fn percentile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = (q / 100.0).clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(v[lo] + (v[hi] - v[lo]) * (pos - lo as f64))
}

/// How the tie threshold for metric scores is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "rule", content = "value", rename_all = "kebab-case")]
pub enum TauRule {
    /// Percentile of the metric's normalized scores on the dataset.
    ScorePercentile(f64),
    /// Percentile of absolute pairwise differences of normalized scores.
    DiffPercentile(f64),
    Fixed(f64),
}

impl Default for TauRule {
    fn default() -> Self {
        TauRule::ScorePercentile(5.0)
    }
}

impl fmt::Display for TauRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TauRule::ScorePercentile(q) => write!(f, "score-percentile:{q}"),
            TauRule::DiffPercentile(q) => write!(f, "diff-percentile:{q}"),
            TauRule::Fixed(v) => write!(f, "fixed:{v}"),
        }
    }
}

impl FromStr for TauRule {
    type Err = String;

    /// `score-percentile[:q]`, `diff-percentile[:q]`, `zero`, `fixed:v`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s, None),
        };
        let num = |default: Option<f64>| -> Result<f64, String> {
            match (arg, default) {
                (Some(a), _) => a
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite() && *x >= 0.0)
                    .ok_or_else(|| format!("bad tau rule argument `{a}`")),
                (None, Some(d)) => Ok(d),
                (None, None) => Err(format!("tau rule `{kind}` needs a value")),
            }
        };
        match kind {
            "score-percentile" => Ok(TauRule::ScorePercentile(num(Some(5.0))?)),
            "diff-percentile" => Ok(TauRule::DiffPercentile(num(Some(5.0))?)),
            "zero" if arg.is_none() => Ok(TauRule::Fixed(0.0)),
            "fixed" => Ok(TauRule::Fixed(num(None)?)),
            _ => Err(format!(
                "unknown tau rule `{s}` (expected score-percentile[:q], diff-percentile[:q], zero or fixed:v)"
            )),
        }
    }
}

impl TauRule {
    /// Threshold for one metric over one dataset's normalized scores.
    pub fn tau(&self, normalized: &[f64]) -> f64 {
        match *self {
            TauRule::ScorePercentile(q) => percentile(normalized, q).unwrap_or(0.0),
            TauRule::DiffPercentile(q) => {
                let mut diffs =
                    Vec::with_capacity(normalized.len() * normalized.len().saturating_sub(1) / 2);
                for i in 0..normalized.len() {
                    for j in i + 1..normalized.len() {
                        diffs.push((normalized[i] - normalized[j]).abs());
                    }
                }
                percentile(&diffs, q).unwrap_or(0.0)
            }
            TauRule::Fixed(v) => v,
        }
    }
}

fn relation(d: f64, tie: bool) -> i8 {
    if tie {
        0
    } else if d > 0.0 {
        1
    } else {
        -1
    }
}

/// Fraction of unordered case pairs on which metric and human agree about
/// the order. Metric differences within `tau` count as ties; human ties are
/// exact. `None` below two cases.
pub fn pairwise_ranking(m: &[f64], h: &[f64], tau: f64) -> Option<f64> {
    assert_eq!(m.len(), h.len());
    let n = m.len();
    if n < 2 {
        return None;
    }
    let mut points = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            let dm = m[i] - m[j];
            let dh = h[i] - h[j];
            if relation(dm, dm.abs() <= tau) == relation(dh, dh == 0.0) {
                points += 1;
            }
        }
    }
    Some(points as f64 / (n * (n - 1) / 2) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn standardize_and_normalize_small() {
        let s = standardize(&[1.0, 3.0, 5.0]);
        let k = 1.5f64.sqrt();
        assert_eq!(s[1], 0.0);
        assert!((s[0] + k).abs() < 1e-15 && (s[2] - k).abs() < 1e-15);
        assert_eq!(normalize(&[1.0, 3.0, 5.0]), vec![0.0, 0.5, 1.0]);
        assert_eq!(normalize(&[-2.0, 2.0]), vec![0.0, 1.0]);
        assert_eq!(standardize(&[2.0, 2.0]), vec![2.0, 2.0]);
        assert_eq!(normalize(&[2.0, 2.0, 2.0]), vec![0.5; 3]);
    }

    #[test]
    fn spearman_cases() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]), Some(1.0));
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), Some(-1.0));
        assert_eq!(spearman(&[0.5, 0.5, 0.5], &[1.0, 2.0, 3.0]), None);
        assert_eq!(
            average_ranks(&[3.0, 1.0, 3.0, 2.0]),
            vec![3.5, 1.0, 3.5, 2.0]
        );
    }

    #[test]
    fn mad_cases() {
        assert_eq!(mad_and_avg(&[0.0, 1.0], &[1.0, 0.0]), Some((0.5, 1.0)));
        assert_eq!(mad_and_avg(&[], &[]), None);
        let (avg, mad) = mad_and_avg(&[0.2, 0.4, 0.9], &[0.1, 0.7, 0.9]).unwrap();
        assert!((avg - 0.5).abs() < 1e-12);
        assert!((mad - (0.1 + 0.3 + 0.0) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn percentile_interpolates() {
        assert_eq!(percentile(&[4.0, 1.0, 3.0, 2.0, 5.0], 50.0), Some(3.0));
        // position 0.05 * 4 = 0.2 between 1 and 2
        assert!((percentile(&[1.0, 2.0, 3.0, 4.0, 5.0], 5.0).unwrap() - 1.2).abs() < 1e-12);
        assert_eq!(percentile(&[], 5.0), None);
    }

    #[test]
    fn tau_rules_parse() {
        assert_eq!(
            "score-percentile".parse(),
            Ok(TauRule::ScorePercentile(5.0))
        );
        assert_eq!(
            "diff-percentile:10".parse(),
            Ok(TauRule::DiffPercentile(10.0))
        );
        assert_eq!("zero".parse(), Ok(TauRule::Fixed(0.0)));
        assert_eq!("fixed:0.1".parse(), Ok(TauRule::Fixed(0.1)));
        assert!("fixed".parse::<TauRule>().is_err());
        assert!("median".parse::<TauRule>().is_err());
        assert_eq!(TauRule::DiffPercentile(50.0).tau(&[0.0, 0.5, 1.0]), 0.5);
    }

    #[test]
    fn ranking_extremes() {
        let h = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(pairwise_ranking(&h, &h, 0.0), Some(1.0));
        assert_eq!(pairwise_ranking(&[0.3; 4], &h, 0.0), Some(0.0));
        assert_eq!(pairwise_ranking(&[1.0], &[1.0], 0.0), None);
    }

    proptest! {
        #[test]
        fn standardized_moments(v in proptest::collection::vec(-100.0f64..100.0, 2..40)) {
            prop_assume!(v.iter().any(|x| (x - v[0]).abs() > 1e-6));
            let s = standardize(&v);
            let mu = mean(&s);
            let sd = (s.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / s.len() as f64).sqrt();
            prop_assert!(mu.abs() < 1e-9);
            prop_assert!((sd - 1.0).abs() < 1e-9);
        }

        #[test]
        fn normalize_preserves_ranks(v in proptest::collection::vec(-100.0f64..100.0, 1..40)) {
            let n = rescale(&v);
            prop_assert!(n.iter().all(|x| (0.0..=1.0).contains(x)));
            if v.iter().any(|x| *x != v[0]) {
                prop_assert_eq!(average_ranks(&n), average_ranks(&v));
            }
        }

        #[test]
        fn ranking_with_zero_tau_uses_ranks_only(
            pairs in proptest::collection::vec((0u8..6, 0u8..6), 2..15)
        ) {
            let m: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
            let h: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
            let warped: Vec<f64> = m.iter().map(|x| x.powi(3) + 7.0).collect();
            prop_assert_eq!(pairwise_ranking(&m, &h, 0.0), pairwise_ranking(&warped, &h, 0.0));
        }

        #[test]
        fn perfect_metric(h in proptest::collection::vec(1.0f64..5.0, 3..20)) {
            prop_assume!(h.iter().any(|x| *x != h[0]));
            let hn = rescale(&h);
            let (_, mad) = mad_and_avg(&hn, &hn).unwrap();
            prop_assert_eq!(mad, 0.0);
            prop_assert!((spearman(&hn, &hn).unwrap() - 1.0).abs() < 1e-12);
            prop_assert_eq!(pairwise_ranking(&hn, &hn, 0.0), Some(1.0));
        }
    }
}
