//! Batch commands: extract, train, score, evaluate, vuln, synth.
//!
//! Each command reads and writes files only, is deterministic given its
//! inputs, and writes rows in input order whatever the execution mode.
//! Row-level problems are collected rather than aborting the batch.

use std::fmt;
use std::path::{Path, PathBuf};

use crate::classifier::{self, TrainedDetector, TrainingReport};
use crate::config::PipelineConfig;
use crate::error::{Error, Result, RowError};
use crate::exec::Execution;
use crate::features::{self, FeatureChannel, FeatureVector};
use crate::geometry::align_face_with;
use crate::io::{self, FeatureRow, ScoreRow};
use crate::metrics::{self, DetCurve, DetectionSummary, VulnerabilityReport};
use crate::model::{FaceSource, Label, PairRecord, Split};
use crate::synth::{self, CorpusConfig, CorpusSummary, GateRejections};

fn require<'a>(value: &'a Option<PathBuf>, what: &str) -> Result<&'a PathBuf> {
    value
        .as_ref()
        .ok_or_else(|| Error::InvalidInput(format!("missing {what}")))
}

fn aligned(
    src: &FaceSource,
    side: &str,
    config: &PipelineConfig,
) -> Result<crate::geometry::AlignedFace> {
    let image = io::load_ppm(require(&src.image, &format!("{side} image"))?)?;
    let landmarks = io::load_landmarks(require(&src.landmarks, &format!("{side} landmarks"))?)?;
    align_face_with(&image, &landmarks, &config.crop(), Execution::Sequential)
}

/// Features of one manifest row for the configured channel.
pub fn extract_record(record: &PairRecord, config: &PipelineConfig) -> Result<FeatureVector> {
    let (r, p) = (&record.reference, &record.probe);
    let dim = config.embedding_dim;
    match config.channel {
        FeatureChannel::EmbeddingDiff => {
            let re = io::load_embedding(require(&r.embedding, "reference embedding")?, dim)?;
            let pe = io::load_embedding(require(&p.embedding, "probe embedding")?, dim)?;
            features::embedding_difference(&re, &pe, config.normalize_embeddings)
        }
        FeatureChannel::ProbeOnly => {
            let pe = io::load_embedding(require(&p.embedding, "probe embedding")?, dim)?;
            Ok(features::probe_only_feature(&pe))
        }
        FeatureChannel::LandmarkDiff => {
            let rl = io::load_landmarks(require(&r.landmarks, "reference landmarks")?)?;
            let pl = io::load_landmarks(require(&p.landmarks, "probe landmarks")?)?;
            features::landmark_difference(&rl, &pl)
        }
        FeatureChannel::LbpGrid => {
            let ra = aligned(r, "reference", config)?;
            let pa = aligned(p, "probe", config)?;
            features::lbp_grid_features(&ra, &pa)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractOutcome {
    pub rows: Vec<FeatureRow>,
    pub errors: Vec<RowError>,
}

/// Extract features for every manifest row; failed rows are reported, not
/// written.
pub fn extract(records: &[PairRecord], config: &PipelineConfig, exec: Execution) -> ExtractOutcome {
    let results = exec.map(records, |rec| extract_record(rec, config));
    let mut rows = Vec::with_capacity(records.len());
    let mut errors = Vec::new();
    for (rec, res) in records.iter().zip(results) {
        match res {
            Ok(feature) => rows.push(FeatureRow {
                pair_id: rec.pair_id.clone(),
                label: rec.label,
                split: rec.split,
                feature,
            }),
            Err(e) => errors.push(RowError {
                pair_id: rec.pair_id.clone(),
                message: e.to_string(),
            }),
        }
    }
    ExtractOutcome { rows, errors }
}

/// Extract features from a manifest into a feature file. The file holds the
/// rows that succeeded; the outcome lists the ones that did not.
pub fn cmd_extract(
    manifest: &Path,
    config: &PipelineConfig,
    out: &Path,
    exec: Execution,
) -> Result<ExtractOutcome> {
    let records = io::load_manifest(manifest)?;
    let outcome = extract(&records, config, exec);
    io::write_features(out, &outcome.rows)?;
    Ok(outcome)
}

/// Train on the `train` split of a feature file and save the model.
pub fn cmd_train(
    features: &Path,
    config: &PipelineConfig,
    out: &Path,
    exec: Execution,
) -> Result<TrainingReport> {
    let samples: Vec<(FeatureVector, Label)> = io::load_features(features)?
        .into_iter()
        .filter(|r| r.split == Split::Train)
        .map(|r| (r.feature, r.label))
        .collect();
    let (model, report) = classifier::train_with(&samples, &config.svm, exec)?;
    classifier::save_model(&model, out)?;
    Ok(report)
}

/// Score feature rows with a model, optionally restricted to one split.
pub fn score_rows(
    model: &TrainedDetector,
    rows: &[FeatureRow],
    split: Option<Split>,
    exec: Execution,
) -> Result<Vec<ScoreRow>> {
    let chosen: Vec<&FeatureRow> = rows
        .iter()
        .filter(|r| split.is_none_or(|s| r.split == s))
        .collect();
    let features: Vec<FeatureVector> = chosen.iter().map(|r| r.feature.clone()).collect();
    let scores = model.score_batch(&features, exec)?;
    Ok(chosen
        .iter()
        .zip(scores)
        .map(|(r, score)| ScoreRow {
            pair_id: r.pair_id.clone(),
            label: r.label,
            score,
        })
        .collect())
}

pub fn cmd_score(
    model: &Path,
    features: &Path,
    split: Option<Split>,
    out: &Path,
    exec: Execution,
) -> Result<Vec<ScoreRow>> {
    let model = classifier::load_model(model)?;
    let rows = io::load_features(features)?;
    let scores = score_rows(&model, &rows, split, exec)?;
    io::write_scores(out, &scores)?;
    Ok(scores)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub summary: DetectionSummary,
    pub det: DetCurve,
    pub attack: usize,
    pub bona_fide: usize,
}

impl Evaluation {
    /// `metric,percent` rows for D-EER, BPCER10 and BPCER20.
    pub fn summary_csv(&self) -> String {
        format!(
            "metric,percent\nD-EER,{}\nBPCER10,{}\nBPCER20,{}\n",
            self.summary.d_eer.eer * 100.0,
            self.summary.bpcer10 * 100.0,
            self.summary.bpcer20 * 100.0
        )
    }
}

impl fmt::Display for Evaluation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "attacks: {}  bona fide: {}", self.attack, self.bona_fide)?;
        writeln!(f, "D-EER   {:.3} %", self.summary.d_eer.eer * 100.0)?;
        writeln!(f, "BPCER10 {:.3} %", self.summary.bpcer10 * 100.0)?;
        write!(f, "BPCER20 {:.3} %", self.summary.bpcer20 * 100.0)
    }
}

pub fn evaluate_scores(rows: &[ScoreRow]) -> Result<Evaluation> {
    let pick = |l: Label| {
        rows.iter()
            .filter(|r| r.label == l)
            .map(|r| r.score)
            .collect::<Vec<f64>>()
    };
    let (attack, bona_fide) = (pick(Label::Attack), pick(Label::BonaFide));
    if attack.is_empty() || bona_fide.is_empty() {
        return Err(Error::SingleClass {
            bona_fide: bona_fide.len(),
            attack: attack.len(),
        });
    }
    Ok(Evaluation {
        summary: metrics::detection_summary(&attack, &bona_fide)?,
        det: metrics::det_curve(&attack, &bona_fide)?,
        attack: attack.len(),
        bona_fide: bona_fide.len(),
    })
}

/// Evaluate a score file; writes `summary.csv` and `det.csv` into `out_dir`.
pub fn cmd_evaluate(scores: &Path, out_dir: &Path) -> Result<Evaluation> {
    let eval = evaluate_scores(&io::load_scores(scores)?)?;
    io::write_string(&out_dir.join("summary.csv"), &eval.summary_csv())?;
    eval.det.write_csv(out_dir.join("det.csv"))?;
    Ok(eval)
}

pub const DEFAULT_FMRS_PERCENT: [f64; 4] = [0.001, 0.01, 0.1, 1.0];

/// Vulnerability analysis from three comparison-score files; FMRs are given
/// in percent. Writes `vulnerability.csv` and `score_stats.csv`.
pub fn cmd_vuln(
    genuine: &Path,
    impostor: &Path,
    attack: &Path,
    fmrs_percent: &[f64],
    out_dir: &Path,
) -> Result<VulnerabilityReport> {
    if fmrs_percent.is_empty() {
        return Err(Error::InvalidInput("empty FMR list".into()));
    }
    if let Some(bad) = fmrs_percent.iter().find(|f| !(**f > 0.0 && **f <= 100.0)) {
        return Err(Error::InvalidInput(format!(
            "FMR must be in (0, 100] %, got {bad}"
        )));
    }
    let load = |p: &Path, what: &'static str| -> Result<Vec<f64>> {
        let v = io::load_score_list(p)?;
        if v.is_empty() {
            return Err(Error::EmptyScores(what));
        }
        Ok(v)
    };
    let g = load(genuine, "genuine scores")?;
    let i = load(impostor, "impostor scores")?;
    let a = load(attack, "attack scores")?;
    let fractions: Vec<f64> = fmrs_percent.iter().map(|f| f / 100.0).collect();
    let report = metrics::vulnerability_report(&g, &i, &a, &fractions)?;
    io::write_string(&out_dir.join("vulnerability.csv"), &report.rates_csv())?;
    io::write_string(&out_dir.join("score_stats.csv"), &report.stats_csv())?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoolGate {
    pub kept: usize,
    pub rejected: usize,
    pub rejections: GateRejections,
}

impl fmt::Display for PoolGate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = &self.rejections;
        write!(
            f,
            "kept {}, rejected {} (frontal_pose {}, mouth_closed {}, landmark_sanity {}, unreadable {})",
            self.kept, self.rejected, r.frontal_pose, r.mouth_closed, r.landmark_sanity, r.unreadable
        )
    }
}

#[derive(Debug, Clone)]
pub struct SynthOutcome {
    pub corpus: CorpusSummary,
    pub targets: PoolGate,
    pub probes: PoolGate,
}

/// Quality-gate both pools (targets on the reference side, probes on the
/// probe side), then generate a corpus into `out_dir`.
pub fn cmd_synth(
    target_manifest: &Path,
    probe_manifest: &Path,
    config: &PipelineConfig,
    out_dir: &Path,
    exec: Execution,
) -> Result<SynthOutcome> {
    let targets = io::load_manifest(target_manifest)?;
    let probes = io::load_manifest(probe_manifest)?;
    let (kept_t, rej_t, n_t) = synth::gate_pool(&targets, |r| &r.reference, &config.gates);
    let (kept_p, rej_p, n_p) = synth::gate_pool(&probes, |r| &r.probe, &config.gates);
    let targets_gate = PoolGate {
        kept: kept_t.len(),
        rejected: n_t,
        rejections: rej_t,
    };
    let probes_gate = PoolGate {
        kept: kept_p.len(),
        rejected: n_p,
        rejections: rej_p,
    };
    if kept_t.is_empty() || kept_p.is_empty() {
        return Err(Error::InvalidInput(format!(
            "empty pool after quality gating; targets: {targets_gate}; probes: {probes_gate}"
        )));
    }
    let corpus_config = CorpusConfig {
        seed: config.seed,
        count: config.count,
        crop: config.crop(),
        warp_intensity: config.warp_intensity,
        split: Split::Train,
    };
    let corpus = synth::generate_corpus(&kept_t, &kept_p, &corpus_config, out_dir, exec)?;
    Ok(SynthOutcome {
        corpus,
        targets: targets_gate,
        probes: probes_gate,
    })
}
