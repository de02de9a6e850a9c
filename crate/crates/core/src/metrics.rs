//! Biometric performance (FMR/FNMR), vulnerability (IAPMR/RIAPAR) and
//! presentation attack detection (APCER/BPCER, D-EER, DET) metrics.
//!
//! Conventions: comparison scores match when `score ≥ threshold`; detection
//! scores flag an attack when `score ≥ threshold`. Every rate is an exact
//! `count / total`.

use std::path::Path;

use crate::error::{Error, Result};
use crate::io::write_string;

fn non_empty(scores: &[f64], what: &'static str) -> Result<()> {
    if scores.is_empty() {
        return Err(Error::EmptyScores(what));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "{what} contain non-finite scores"
        )));
    }
    Ok(())
}

#[inline]
fn rate(count: usize, total: usize) -> f64 {
    count as f64 / total as f64
}

/// Largest count `m` such that `m / total ≤ cap`.
#[inline]
fn max_count_within(cap: f64, total: usize) -> usize {
    (cap * total as f64 + 1e-9).floor().max(0.0) as usize
}

fn sorted(scores: &[f64]) -> Vec<f64> {
    let mut v = scores.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Number of sorted scores strictly below `t`.
#[inline]
fn below(sorted: &[f64], t: f64) -> usize {
    sorted.partition_point(|&s| s < t)
}

/// `(fmr, fnmr)`: impostors at or above the threshold, genuines below it.
pub fn fmr_fnmr(genuine: &[f64], impostor: &[f64], threshold: f64) -> Result<(f64, f64)> {
    non_empty(genuine, "genuine scores")?;
    non_empty(impostor, "impostor scores")?;
    let fm = impostor.iter().filter(|&&s| s >= threshold).count();
    let fnm = genuine.iter().filter(|&&s| s < threshold).count();
    Ok((rate(fm, impostor.len()), rate(fnm, genuine.len())))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdAtFmr {
    pub threshold: f64,
    pub achieved_fmr: f64,
}

/// Smallest threshold whose FMR does not exceed `target_fmr`. Thresholds are
/// taken from the impostor scores themselves; when even the maximum score
/// admits too many impostors the threshold is `+∞` with FMR 0.
pub fn threshold_at_fmr(impostor: &[f64], target_fmr: f64) -> Result<ThresholdAtFmr> {
    non_empty(impostor, "impostor scores")?;
    if !(target_fmr > 0.0 && target_fmr <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "target FMR must lie in (0, 1], got {target_fmr}"
        )));
    }
    let s = sorted(impostor);
    let n = s.len();
    let allowed = max_count_within(target_fmr, n);
    // at threshold s[k] the accepted impostors are those from the first index
    // holding s[k] onwards
    let mut k = n - allowed.min(n);
    while k > 0 && k < n && s[k - 1] == s[k] {
        k += 1;
    }
    if k >= n {
        return Ok(ThresholdAtFmr {
            threshold: f64::INFINITY,
            achieved_fmr: 0.0,
        });
    }
    Ok(ThresholdAtFmr {
        threshold: s[k],
        achieved_fmr: rate(n - k, n),
    })
}

/// Fraction of attack comparison scores matching at `threshold`.
pub fn iapmr(attack: &[f64], threshold: f64) -> Result<f64> {
    non_empty(attack, "attack scores")?;
    Ok(rate(
        attack.iter().filter(|&&s| s >= threshold).count(),
        attack.len(),
    ))
}

/// `1 + (IAPMR − (1 − FNMR))`.
pub fn riapar(iapmr: f64, fnmr: f64) -> f64 {
    1.0 + (iapmr - (1.0 - fnmr))
}

/// `(apcer, bpcer)`: attacks scored below the threshold, bona fides at or
/// above it.
pub fn apcer_bpcer(attack: &[f64], bona_fide: &[f64], threshold: f64) -> Result<(f64, f64)> {
    non_empty(attack, "attack scores")?;
    non_empty(bona_fide, "bona fide scores")?;
    let missed = attack.iter().filter(|&&s| s < threshold).count();
    let false_alarm = bona_fide.iter().filter(|&&s| s >= threshold).count();
    Ok((
        rate(missed, attack.len()),
        rate(false_alarm, bona_fide.len()),
    ))
}

/// Candidate detection thresholds in ascending order: `−∞`, the midpoint of
/// each adjacent pair of distinct pooled scores, `+∞`.
pub fn candidate_thresholds(attack: &[f64], bona_fide: &[f64]) -> Vec<f64> {
    let mut pooled: Vec<f64> = attack.iter().chain(bona_fide).copied().collect();
    pooled.sort_by(f64::total_cmp);
    pooled.dedup();
    let mut out = Vec::with_capacity(pooled.len() + 1);
    out.push(f64::NEG_INFINITY);
    out.extend(pooled.windows(2).map(|w| midpoint(w[0], w[1])));
    out.push(f64::INFINITY);
    out
}

/// A point strictly above `a` and at most `b` (`a < b`).
fn midpoint(a: f64, b: f64) -> f64 {
    let m = a / 2.0 + b / 2.0;
    if m > a {
        m
    } else {
        b
    }
}

/// APCER/BPCER evaluated over sorted score lists.
struct SortedRates {
    attack: Vec<f64>,
    bona_fide: Vec<f64>,
}

impl SortedRates {
    fn new(attack: &[f64], bona_fide: &[f64]) -> Result<Self> {
        non_empty(attack, "attack scores")?;
        non_empty(bona_fide, "bona fide scores")?;
        Ok(Self {
            attack: sorted(attack),
            bona_fide: sorted(bona_fide),
        })
    }

    fn counts(&self, t: f64) -> (usize, usize) {
        (
            below(&self.attack, t),
            self.bona_fide.len() - below(&self.bona_fide, t),
        )
    }

    fn rates(&self, t: f64) -> (f64, f64) {
        let (a, b) = self.counts(t);
        (rate(a, self.attack.len()), rate(b, self.bona_fide.len()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EerPoint {
    pub eer: f64,
    pub threshold: f64,
    pub apcer: f64,
    pub bpcer: f64,
}

/// Detection equal error rate: the candidate threshold minimizing
/// `|APCER − BPCER|` (ties: lower BPCER, then lower threshold), reported as
/// the mean of the two rates there.
pub fn d_eer(attack: &[f64], bona_fide: &[f64]) -> Result<EerPoint> {
    let r = SortedRates::new(attack, bona_fide)?;
    let mut best: Option<EerPoint> = None;
    for t in candidate_thresholds(attack, bona_fide) {
        let (apcer, bpcer) = r.rates(t);
        let gap = (apcer - bpcer).abs();
        let better = match &best {
            None => true,
            Some(b) => {
                let bgap = (b.apcer - b.bpcer).abs();
                gap < bgap || (gap == bgap && bpcer < b.bpcer)
            }
        };
        if better {
            best = Some(EerPoint {
                eer: (apcer + bpcer) / 2.0,
                threshold: t,
                apcer,
                bpcer,
            });
        }
    }
    Ok(best.expect("at least two candidate thresholds"))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub threshold: f64,
    pub apcer: f64,
    pub bpcer: f64,
}

/// Operating point with the lowest BPCER among thresholds whose APCER stays
/// within `apcer_cap` (the largest such candidate threshold).
pub fn operating_point_at_apcer(
    attack: &[f64],
    bona_fide: &[f64],
    apcer_cap: f64,
) -> Result<OperatingPoint> {
    if !(apcer_cap > 0.0 && apcer_cap < 1.0) {
        return Err(Error::InvalidInput(format!(
            "APCER cap must lie in (0, 1), got {apcer_cap}"
        )));
    }
    let r = SortedRates::new(attack, bona_fide)?;
    let allowed = max_count_within(apcer_cap, r.attack.len());
    let mut chosen = None;
    for t in candidate_thresholds(attack, bona_fide) {
        let (missed, _) = r.counts(t);
        if missed > allowed {
            break;
        }
        chosen = Some(t);
    }
    let threshold = chosen.expect("−∞ always satisfies the cap");
    let (apcer, bpcer) = r.rates(threshold);
    Ok(OperatingPoint {
        threshold,
        apcer,
        bpcer,
    })
}

/// BPCER at the APCER cap, e.g. `0.10` for BPCER10 and `0.05` for BPCER20.
pub fn bpcer_at_apcer(attack: &[f64], bona_fide: &[f64], apcer_cap: f64) -> Result<f64> {
    operating_point_at_apcer(attack, bona_fide, apcer_cap).map(|p| p.bpcer)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistributionStats {
    pub mean: f64,
    /// Population standard deviation (divides by N).
    pub std_dev: f64,
    pub min: f64,
    pub max: f64,
}

/// Single-pass (Welford) mean and population standard deviation.
pub fn distribution_stats(scores: &[f64]) -> Result<DistributionStats> {
    non_empty(scores, "scores")?;
    let (mut mean, mut m2) = (0.0, 0.0);
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    for (i, &s) in scores.iter().enumerate() {
        let delta = s - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (s - mean);
        min = min.min(s);
        max = max.max(s);
    }
    Ok(DistributionStats {
        mean,
        std_dev: (m2 / scores.len() as f64).max(0.0).sqrt(),
        min,
        max,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetPoint {
    pub threshold: f64,
    pub apcer: f64,
    pub bpcer: f64,
}

/// Detection error tradeoff curve, one point per candidate threshold in
/// descending threshold order.
#[derive(Debug, Clone, PartialEq)]
pub struct DetCurve {
    pub points: Vec<DetPoint>,
}

pub fn det_curve(attack: &[f64], bona_fide: &[f64]) -> Result<DetCurve> {
    let r = SortedRates::new(attack, bona_fide)?;
    let points = candidate_thresholds(attack, bona_fide)
        .into_iter()
        .rev()
        .map(|t| {
            let (apcer, bpcer) = r.rates(t);
            DetPoint {
                threshold: t,
                apcer,
                bpcer,
            }
        })
        .collect();
    Ok(DetCurve { points })
}

impl DetCurve {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("threshold,apcer,bpcer\n");
        for p in &self.points {
            s.push_str(&format!("{},{},{}\n", p.threshold, p.apcer, p.bpcer));
        }
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_string(path.as_ref(), &self.to_csv())
    }
}

/// Headline detection numbers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionSummary {
    pub d_eer: EerPoint,
    pub bpcer10: f64,
    pub bpcer20: f64,
}

pub fn detection_summary(attack: &[f64], bona_fide: &[f64]) -> Result<DetectionSummary> {
    Ok(DetectionSummary {
        d_eer: d_eer(attack, bona_fide)?,
        bpcer10: bpcer_at_apcer(attack, bona_fide, 0.10)?,
        bpcer20: bpcer_at_apcer(attack, bona_fide, 0.05)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VulnerabilityRow {
    pub target_fmr: f64,
    pub threshold: f64,
    pub achieved_fmr: f64,
    pub fnmr: f64,
    pub iapmr: f64,
    pub riapar: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VulnerabilityReport {
    pub rows: Vec<VulnerabilityRow>,
    pub genuine: DistributionStats,
    pub impostor: DistributionStats,
    pub attack: DistributionStats,
}

/// Vulnerability of a comparator at each target FMR (given as fractions).
pub fn vulnerability_report(
    genuine: &[f64],
    impostor: &[f64],
    attack: &[f64],
    target_fmrs: &[f64],
) -> Result<VulnerabilityReport> {
    non_empty(genuine, "genuine scores")?;
    non_empty(impostor, "impostor scores")?;
    non_empty(attack, "attack scores")?;
    let rows = target_fmrs
        .iter()
        .map(|&target| {
            let t = threshold_at_fmr(impostor, target)?;
            let (_, fnmr) = fmr_fnmr(genuine, impostor, t.threshold)?;
            let iapmr = iapmr(attack, t.threshold)?;
            Ok(VulnerabilityRow {
                target_fmr: target,
                threshold: t.threshold,
                achieved_fmr: t.achieved_fmr,
                fnmr,
                iapmr,
                riapar: riapar(iapmr, fnmr),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VulnerabilityReport {
        rows,
        genuine: distribution_stats(genuine)?,
        impostor: distribution_stats(impostor)?,
        attack: distribution_stats(attack)?,
    })
}

impl VulnerabilityReport {
    /// `FMR,FNMR,IAPMR,RIAPAR`, all in percent.
    pub fn rates_csv(&self) -> String {
        let mut s = String::from("FMR,FNMR,IAPMR,RIAPAR\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{}\n",
                // targets come in as percentages; undo the fraction round trip
                (r.target_fmr * 100.0 * 1e12).round() / 1e12,
                r.fnmr * 100.0,
                r.iapmr * 100.0,
                r.riapar * 100.0
            ));
        }
        s
    }

    pub fn stats_csv(&self) -> String {
        let mut s = String::from("distribution,mean,st_dev_population,minimum,maximum\n");
        for (name, d) in [
            ("genuine", &self.genuine),
            ("impostor", &self.impostor),
            ("attack", &self.attack),
        ] {
            s.push_str(&format!(
                "{name},{},{},{},{}\n",
                d.mean, d.std_dev, d.min, d.max
            ));
        }
        s
    }
}
