//! Threshold calibration: coverage-targeted percentile thresholds and
//! risk-targeted SGR thresholds. Acceptance is always `k > tau`.

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

/// Where a threshold came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThresholdSource {
    Percentile { coverage: f64 },
    Sgr { risk: f64, delta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    /// `-inf` accepts everything.
    pub tau: f64,
    pub source: ThresholdSource,
    /// Set when ties made the requested coverage unreachable (e.g. all
    /// confidences equal).
    pub degenerate: bool,
}

impl Threshold {
    pub fn accept_all(source: ThresholdSource) -> Self {
        Self {
            tau: f64::NEG_INFINITY,
            source,
            degenerate: false,
        }
    }

    #[inline]
    pub fn accepts(&self, confidence: f64) -> bool {
        confidence > self.tau
    }
}

fn check_scores(conf: &[f64]) -> Result<()> {
    if conf.is_empty() {
        return Err(Error::Empty("confidence vector"));
    }
    if conf.iter().any(|c| c.is_nan()) {
        return Err(Error::InvalidInput("NaN confidence".into()));
    }
    Ok(())
}

/// Threshold at the `(1 - c)` empirical quantile: `tau` is the k-th smallest
/// confidence with `k = floor((1 - c) n)`, or `-inf` when `k = 0`. If ties
/// push coverage more than `1/n` below `c`, `tau` steps down to the next
/// distinct value.
pub fn percentile_threshold(conf: &[f64], coverage: f64) -> Result<Threshold> {
    check_scores(conf)?;
    if !(coverage > 0.0 && coverage <= 1.0) {
        return Err(Error::InvalidHyperparameter(format!("coverage {coverage} outside (0, 1]")));
    }
    let source = ThresholdSource::Percentile { coverage };
    let n = conf.len();
    let mut sorted = conf.to_vec();
    sorted.sort_by(f64::total_cmp);
    // guard against (1 - c) * n landing a hair below an integer
    let k = ((1.0 - coverage) * n as f64 + 1e-9).floor() as usize;
    if k == 0 {
        return Ok(Threshold::accept_all(source));
    }
    let tau = sorted[k - 1];
    let accepted = n - sorted.partition_point(|&v| v <= tau);
    let achieved = accepted as f64 / n as f64;
    if coverage - achieved <= 1.0 / n as f64 + 1e-12 {
        return Ok(Threshold {
            tau,
            source,
            degenerate: false,
        });
    }
    let below = sorted.partition_point(|&v| v < tau);
    if below == 0 {
        return Ok(Threshold {
            tau,
            source,
            degenerate: true,
        });
    }
    Ok(Threshold {
        tau: sorted[below - 1],
        source,
        degenerate: false,
    })
}

/// Accept flags `k > tau`.
pub fn apply_threshold(conf: &[f64], threshold: &Threshold) -> Vec<bool> {
    conf.iter().map(|&c| threshold.accepts(c)).collect()
}

/// `P(Bin(m, b) <= k)`.
fn binomial_cdf(k: u64, m: u64, b: f64) -> f64 {
    if k >= m || b <= 0.0 {
        return 1.0;
    }
    if b >= 1.0 {
        return 0.0;
    }
    beta_reg((m - k) as f64, (k + 1) as f64, 1.0 - b)
}

/// Upper confidence bound on the true error: the smallest `b >= r_hat` with
/// `P(Bin(m, b) <= round(m r_hat)) <= delta`, found by bisection to 1e-10.
pub fn binomial_tail_inverse(r_hat: f64, m: usize, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidHyperparameter(format!("delta {delta} outside (0, 1)")));
    }
    if !(0.0..=1.0).contains(&r_hat) {
        return Err(Error::InvalidInput(format!("empirical error {r_hat} outside [0, 1]")));
    }
    if m == 0 {
        return Err(Error::Empty("sample"));
    }
    let errors = (r_hat * m as f64).round() as u64;
    let m = m as u64;
    if errors >= m {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (r_hat, 1.0);
    if binomial_cdf(errors, m, lo) <= delta {
        return Ok(lo);
    }
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if binomial_cdf(errors, m, mid) <= delta {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgrResult {
    pub threshold: Threshold,
    /// Risk bound on the accepted subset of the calibration data.
    pub bound: f64,
    /// Calibration coverage at the threshold.
    pub coverage: f64,
    pub risk: f64,
    pub delta: f64,
    /// False when no threshold met the bound; the threshold then accepts only
    /// the most confident group.
    pub guaranteed: bool,
}

/// Selection with guaranteed risk: the lowest threshold (maximal coverage)
/// among `{-inf} ∪ distinct confidences` whose accepted-set bound is `<= risk`.
pub fn sgr_threshold(conf: &[f64], correct: &[bool], risk: f64, delta: f64) -> Result<SgrResult> {
    check_scores(conf)?;
    if conf.len() != correct.len() {
        return Err(Error::Shape("confidence and correctness lengths differ".into()));
    }
    if !(risk > 0.0 && risk <= 1.0) {
        return Err(Error::InvalidHyperparameter(format!("target risk {risk} outside (0, 1]")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidHyperparameter(format!("delta {delta} outside (0, 1)")));
    }
    let n = conf.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| conf[b].total_cmp(&conf[a]));

    // candidate i: accept the first `i + 1` rows in descending order, i.e.
    // tau = next lower distinct value (or -inf)
    let mut best: Option<(usize, f64)> = None;
    let mut first_group: Option<(usize, f64)> = None;
    let mut errors = 0usize;
    for (pos, &row) in order.iter().enumerate() {
        errors += usize::from(!correct[row]);
        let group_end = pos + 1 == n || conf[order[pos + 1]] != conf[row];
        if !group_end {
            continue;
        }
        let accepted = pos + 1;
        let bound = binomial_tail_inverse(errors as f64 / accepted as f64, accepted, delta)?;
        first_group.get_or_insert((accepted, bound));
        if bound <= risk {
            best = Some((accepted, bound));
        }
    }
    let tau_for = |accepted: usize| {
        if accepted == n {
            f64::NEG_INFINITY
        } else {
            conf[order[accepted]]
        }
    };
    let source = ThresholdSource::Sgr { risk, delta };
    let ((accepted, bound), guaranteed) = match best {
        Some(b) => (b, true),
        None => (first_group.expect("nonempty"), false),
    };
    Ok(SgrResult {
        threshold: Threshold {
            tau: tau_for(accepted),
            source,
            degenerate: false,
        },
        bound,
        coverage: accepted as f64 / n as f64,
        risk,
        delta,
        guaranteed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn coverage(conf: &[f64], t: &Threshold) -> f64 {
        apply_threshold(conf, t).iter().filter(|&&a| a).count() as f64 / conf.len() as f64
    }

    #[test]
    fn percentile_examples() {
        let conf: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
        let t = percentile_threshold(&conf, 0.7).unwrap();
        assert_eq!(t.tau, 0.3);
        assert_eq!(apply_threshold(&conf, &t).iter().filter(|&&a| a).count(), 7);

        let t = percentile_threshold(&conf, 1.0).unwrap();
        assert_eq!(t.tau, f64::NEG_INFINITY);
        assert_eq!(coverage(&conf, &t), 1.0);

        let t = percentile_threshold(&[0.4; 10], 0.7).unwrap();
        assert!(t.degenerate);
        assert_eq!(coverage(&[0.4; 10], &t), 0.0);

        assert!(matches!(percentile_threshold(&[], 0.7), Err(Error::Empty(_))));
    }

    #[test]
    fn ties_step_down() {
        // 0.5 repeated: k = 3 lands inside the tie block, strict > would give 0.4
        let conf = [0.1, 0.2, 0.5, 0.5, 0.5, 0.5, 0.9, 0.9, 0.9, 0.9];
        let t = percentile_threshold(&conf, 0.7).unwrap();
        assert_eq!(t.tau, 0.2);
        assert_eq!(coverage(&conf, &t), 0.8);
    }

    #[test]
    fn threshold_endpoints() {
        let k = [0.2, 0.6, 0.9];
        let t = |tau| Threshold {
            tau,
            source: ThresholdSource::Percentile { coverage: 0.5 },
            degenerate: false,
        };
        assert_eq!(apply_threshold(&k, &t(0.5)), vec![false, true, true]);
        assert_eq!(apply_threshold(&k, &t(0.0)), vec![true; 3]);
        assert_eq!(apply_threshold(&k, &t(1.0)), vec![false; 3]);
    }

    /// Direct summation of binomial probabilities.
    fn cdf_oracle(k: u64, m: u64, b: f64) -> f64 {
        let mut total = 0.0;
        let mut ln_choose = 0.0f64;
        for i in 0..=k {
            if i > 0 {
                ln_choose += ((m - i + 1) as f64).ln() - (i as f64).ln();
            }
            total += (ln_choose + i as f64 * b.ln() + (m - i) as f64 * (1.0 - b).ln()).exp();
        }
        total
    }

    #[test]
    fn binomial_bound_examples() {
        let b = binomial_tail_inverse(0.0, 100, 0.1).unwrap();
        assert!((b - (1.0 - 0.1f64.powf(0.01))).abs() < 1e-9);
        assert!((b - 0.02276).abs() < 1e-5);
        let loose = binomial_tail_inverse(0.2, 50, 1.0 - 1e-12).unwrap();
        assert!((loose - 0.2).abs() < 1e-6);
        assert!(binomial_tail_inverse(0.1, 10, 0.0).is_err());
        assert!(binomial_tail_inverse(0.1, 10, 1.0).is_err());
        for &(r, m) in &[(0.05, 200usize), (0.1, 40), (0.3, 17)] {
            let b = binomial_tail_inverse(r, m, 0.05).unwrap();
            let k = (r * m as f64).round() as u64;
            assert!((cdf_oracle(k, m as u64, b) - 0.05).abs() < 1e-7);
        }
    }

    #[test]
    fn sgr_examples() {
        let conf: Vec<f64> = (0..1000).map(|i| i as f64 / 1000.0).collect();
        let res = sgr_threshold(&conf, &[true; 1000], 0.01, 0.1).unwrap();
        assert!(res.guaranteed);
        assert_eq!(res.coverage, 1.0);
        assert!((res.bound - 0.0023).abs() < 1e-4);

        let correct: Vec<bool> = (0..1000).map(|i| i % 2 == 0).collect();
        let res = sgr_threshold(&conf, &correct, 1.0, 0.1).unwrap();
        assert_eq!(res.coverage, 1.0);
        assert!(matches!(sgr_threshold(&[], &[], 0.1, 0.1), Err(Error::Empty(_))));
    }

    #[test]
    fn sgr_without_qualifying_threshold() {
        let res = sgr_threshold(&[0.9, 0.8, 0.7], &[false, false, true], 0.01, 0.1).unwrap();
        assert!(!res.guaranteed);
        assert_eq!(res.threshold.tau, 0.8);
        assert!((res.coverage - 1.0 / 3.0).abs() < 1e-12);
    }

    /// Brute force: try every candidate threshold, keep the one with the
    /// largest coverage that satisfies the bound.
    fn sgr_oracle(conf: &[f64], correct: &[bool], r: f64, delta: f64) -> Option<f64> {
        let mut cands: Vec<f64> = conf.to_vec();
        cands.push(f64::NEG_INFINITY);
        let mut best: Option<(usize, f64)> = None;
        for &tau in &cands {
            let acc: Vec<usize> = (0..conf.len()).filter(|&i| conf[i] > tau).collect();
            if acc.is_empty() {
                continue;
            }
            let err = acc.iter().filter(|&&i| !correct[i]).count() as f64 / acc.len() as f64;
            let b = binomial_tail_inverse(err, acc.len(), delta).unwrap();
            if b <= r && best.is_none_or(|(n, _)| acc.len() > n) {
                best = Some((acc.len(), tau));
            }
        }
        best.map(|(_, t)| t)
    }

    proptest! {
        #[test]
        fn percentile_coverage_window(mut conf in proptest::collection::vec(0.0f64..1.0, 1..200), c in 0.05f64..1.0) {
            conf.sort_by(f64::total_cmp);
            conf.dedup();
            let t = percentile_threshold(&conf, c).unwrap();
            let phi = coverage(&conf, &t);
            let n = conf.len() as f64;
            prop_assert!(phi >= c - 1e-9 && phi <= c + 1.0 / n + 1e-9, "phi {} c {} n {}", phi, c, n);
        }

        #[test]
        fn monotone_transform_keeps_partition(conf in proptest::collection::vec(0.0f64..1.0, 1..100), c in 0.05f64..1.0) {
            let mapped: Vec<f64> = conf.iter().map(|v| (3.0 * v).exp() - 7.0).collect();
            let a = apply_threshold(&conf, &percentile_threshold(&conf, c).unwrap());
            let b = apply_threshold(&mapped, &percentile_threshold(&mapped, c).unwrap());
            prop_assert_eq!(a, b);
        }

        #[test]
        fn coverage_monotone_in_tau(conf in proptest::collection::vec(0.0f64..1.0, 1..50), t1 in 0.0f64..1.0, t2 in 0.0f64..1.0) {
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            let mk = |tau| Threshold { tau, source: ThresholdSource::Percentile { coverage: 0.5 }, degenerate: false };
            prop_assert!(coverage(&conf, &mk(lo)) >= coverage(&conf, &mk(hi)));
        }

        #[test]
        fn bound_monotone(k1 in 0usize..30, k2 in 0usize..30, m in 30usize..80) {
            let (a, b) = if k1 <= k2 { (k1, k2) } else { (k2, k1) };
            let ba = binomial_tail_inverse(a as f64 / m as f64, m, 0.1).unwrap();
            let bb = binomial_tail_inverse(b as f64 / m as f64, m, 0.1).unwrap();
            prop_assert!(ba <= bb + 1e-9);
            // more samples at the same error count rate -> tighter
            let wider = binomial_tail_inverse(a as f64 / m as f64 , 2 * m, 0.1).unwrap();
            prop_assert!(wider <= ba + 1e-9);
        }

        #[test]
        fn sgr_matches_exhaustive_scan(
            rows in proptest::collection::vec((0u8..20, proptest::bool::weighted(0.8)), 1..200),
            r in 0.02f64..0.6,
        ) {
            let conf: Vec<f64> = rows.iter().map(|(c, _)| *c as f64 / 20.0).collect();
            let correct: Vec<bool> = rows.iter().map(|(_, k)| *k).collect();
            let res = sgr_threshold(&conf, &correct, r, 0.1).unwrap();
            match sgr_oracle(&conf, &correct, r, 0.1) {
                Some(tau) => {
                    prop_assert!(res.guaranteed);
                    prop_assert_eq!(res.threshold.tau, tau);
                    prop_assert!(res.bound <= r);
                }
                None => prop_assert!(!res.guaranteed),
            }
        }
    }
}
