use std::fs;
use std::path::Path;

use mpad_core::commands::{self, evaluate_scores};
use mpad_core::config::PipelineConfig;
use mpad_core::features::{FeatureChannel, FeatureVector};
use mpad_core::geometry::CropGeometry;
use mpad_core::io::{self, FeatureRow, ScoreRow};
use mpad_core::metrics;
use mpad_core::model::{Label, Split};
use mpad_core::synth;
use mpad_core::synthetic::{self, EmbeddingWorld};
use mpad_core::{Error, Execution};

fn separable(dir: &Path) -> std::path::PathBuf {
    let mut rows = Vec::new();
    for i in 0..40 {
        let label = if i % 2 == 0 {
            Label::BonaFide
        } else {
            Label::Attack
        };
        let centre = if label == Label::Attack { 1.0 } else { -1.0 };
        let jitter = (i as f64 * 0.37).sin() * 0.2;
        rows.push(FeatureRow {
            pair_id: format!("p{i}"),
            label,
            split: if i < 30 { Split::Train } else { Split::Test },
            feature: FeatureVector::new(
                FeatureChannel::EmbeddingDiff,
                vec![centre + jitter, centre - jitter, jitter],
            )
            .unwrap(),
        });
    }
    let path = dir.join("features.csv");
    io::write_features(&path, &rows).unwrap();
    path
}

#[test]
fn train_on_separable_features_is_exact_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let feats = separable(dir.path());
    let cfg = PipelineConfig::default();
    let m1 = dir.path().join("m1.json");
    let m2 = dir.path().join("m2.json");
    let r = commands::cmd_train(&feats, &cfg, &m1, Execution::Parallel).unwrap();
    assert_eq!(r.training_accuracy, 1.0);
    commands::cmd_train(&feats, &cfg, &m2, Execution::Sequential).unwrap();
    assert_eq!(fs::read(&m1).unwrap(), fs::read(&m2).unwrap());

    let scores = commands::cmd_score(
        &m1,
        &feats,
        Some(Split::Train),
        &dir.path().join("s.csv"),
        Execution::Parallel,
    )
    .unwrap();
    assert!(scores.iter().all(|s| (0.0..=1.0).contains(&s.score)));
    let max_bf = scores
        .iter()
        .filter(|s| s.label == Label::BonaFide)
        .map(|s| s.score)
        .fold(f64::MIN, f64::max);
    let min_atk = scores
        .iter()
        .filter(|s| s.label == Label::Attack)
        .map(|s| s.score)
        .fold(f64::MAX, f64::min);
    assert!(min_atk > max_bf);
}

#[test]
fn empty_train_split_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let rows = vec![FeatureRow {
        pair_id: "t".into(),
        label: Label::Attack,
        split: Split::Test,
        feature: FeatureVector::new(FeatureChannel::EmbeddingDiff, vec![1.0]).unwrap(),
    }];
    let f = dir.path().join("f.csv");
    io::write_features(&f, &rows).unwrap();
    let err = commands::cmd_train(
        &f,
        &PipelineConfig::default(),
        &dir.path().join("m.json"),
        Execution::Sequential,
    );
    assert!(matches!(err, Err(Error::SingleClass { .. })));
}

#[test]
fn scoring_mismatched_features_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let feats = separable(dir.path());
    let model = dir.path().join("m.json");
    commands::cmd_train(
        &feats,
        &PipelineConfig::default(),
        &model,
        Execution::Sequential,
    )
    .unwrap();
    let other = dir.path().join("other.csv");
    let row = |channel, values: Vec<f64>| FeatureRow {
        pair_id: "x".into(),
        label: Label::Attack,
        split: Split::Test,
        feature: FeatureVector::new(channel, values).unwrap(),
    };
    io::write_features(&other, &[row(FeatureChannel::EmbeddingDiff, vec![0.0; 5])]).unwrap();
    assert!(commands::cmd_score(
        &model,
        &other,
        None,
        &dir.path().join("s.csv"),
        Execution::Sequential
    )
    .is_err());
    io::write_features(&other, &[row(FeatureChannel::LandmarkDiff, vec![0.0; 3])]).unwrap();
    assert!(matches!(
        commands::cmd_score(
            &model,
            &other,
            None,
            &dir.path().join("s.csv"),
            Execution::Sequential
        ),
        Err(Error::ChannelMismatch { .. })
    ));
}

fn score_rows(bona_fide: &[f64], attack: &[f64]) -> Vec<ScoreRow> {
    let mut rows = Vec::new();
    for (i, &s) in bona_fide.iter().enumerate() {
        rows.push(ScoreRow {
            pair_id: format!("b{i}"),
            label: Label::BonaFide,
            score: s,
        });
    }
    for (i, &s) in attack.iter().enumerate() {
        rows.push(ScoreRow {
            pair_id: format!("a{i}"),
            label: Label::Attack,
            score: s,
        });
    }
    rows
}

#[test]
fn evaluate_examples() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scores.csv");
    io::write_scores(
        &path,
        &score_rows(&[0.1, 0.2, 0.3, 0.8], &[0.4, 0.7, 0.9, 0.95]),
    )
    .unwrap();
    let e = commands::cmd_evaluate(&path, &dir.path().join("out")).unwrap();
    assert_eq!(format!("{:.3}", e.summary.d_eer.eer * 100.0), "25.000");
    let direct = metrics::detection_summary(&[0.4, 0.7, 0.9, 0.95], &[0.1, 0.2, 0.3, 0.8]).unwrap();
    assert_eq!(e.summary, direct);
    let summary = fs::read_to_string(dir.path().join("out/summary.csv")).unwrap();
    assert_eq!(
        summary,
        "metric,percent\nD-EER,25\nBPCER10,25\nBPCER20,25\n"
    );
    assert!(fs::read_to_string(dir.path().join("out/det.csv"))
        .unwrap()
        .starts_with("threshold,apcer,bpcer\n"));

    let separated = evaluate_scores(&score_rows(&[0.1, 0.2], &[0.8, 0.9])).unwrap();
    assert_eq!(
        (
            separated.summary.d_eer.eer,
            separated.summary.bpcer10,
            separated.summary.bpcer20
        ),
        (0.0, 0.0, 0.0)
    );
}

#[test]
fn vuln_reproduces_engineered_table_row() {
    // 3571 genuine scores with one below the FMR-1% threshold gives FNMR
    // 0.028 %; 428 attacks with 73 above it gives IAPMR 17.056 %
    let dir = tempfile::tempdir().unwrap();
    let impostor: Vec<f64> = (0..1000).map(|i| i as f64 / 1000.0).collect();
    let mut genuine = vec![2.0; 3571];
    genuine[0] = 0.5;
    let mut attack = vec![0.1; 428];
    for a in attack.iter_mut().take(73) {
        *a = 1.5;
    }
    let (g, i, a) = (
        dir.path().join("g.txt"),
        dir.path().join("i.txt"),
        dir.path().join("a.txt"),
    );
    io::write_score_list(&g, &genuine).unwrap();
    io::write_score_list(&i, &impostor).unwrap();
    io::write_score_list(&a, &attack).unwrap();
    let r = commands::cmd_vuln(&g, &i, &a, &[1.0], dir.path()).unwrap();
    let row = r.rows[0];
    assert_eq!(row.achieved_fmr, 0.01);
    assert_eq!(format!("{:.3}", row.fnmr * 100.0), "0.028");
    assert_eq!(format!("{:.3}", row.iapmr * 100.0), "17.056");
    assert_eq!(format!("{:.3}", row.riapar * 100.0), "17.084");
    let csv = fs::read_to_string(dir.path().join("vulnerability.csv")).unwrap();
    assert!(csv.starts_with("FMR,FNMR,IAPMR,RIAPAR\n1,"));

    io::write_score_list(&a, &[0.0; 10]).unwrap();
    io::write_score_list(&g, &[0.0, 1.0]).unwrap();
    let r = commands::cmd_vuln(&g, &i, &a, &commands::DEFAULT_FMRS_PERCENT, dir.path()).unwrap();
    assert!(r.rows.iter().all(|row| row.iapmr == 0.0));
    assert_eq!((r.genuine.mean, r.genuine.std_dev), (0.5, 0.5));
    let stats = fs::read_to_string(dir.path().join("score_stats.csv")).unwrap();
    assert!(stats.contains("genuine,0.5,0.5,0,1\n"));
}

#[test]
fn pairing_at_paper_scale_never_pairs_a_subject_with_itself() {
    // 641 targets and 100 probes drawn from overlapping identities
    let targets: Vec<String> = (0..641).map(|i| format!("id{}", i % 150)).collect();
    let probes: Vec<String> = (0..100).map(|i| format!("id{i}")).collect();
    let t: Vec<&str> = targets.iter().map(String::as_str).collect();
    let p: Vec<&str> = probes.iter().map(String::as_str).collect();
    let pairing = synth::draw_pairings(&t, &p, 3290, 3290).unwrap();
    assert_eq!(pairing.pairs.len(), 3290);
    assert!(!pairing.with_replacement);
    assert!(pairing.pairs.iter().all(|&(a, b)| t[a] != p[b]));
    let mut unique = pairing.pairs.clone();
    unique.sort();
    unique.dedup();
    assert_eq!(unique.len(), 3290);
}

fn pools(dir: &Path, size: usize) -> (std::path::PathBuf, std::path::PathBuf) {
    let crop = CropGeometry::square(size);
    (
        synthetic::write_face_pool(&dir.join("t"), "target", 1, true, &crop, 5).unwrap(),
        synthetic::write_face_pool(&dir.join("p"), "probe", 1, false, &crop, 6).unwrap(),
    )
}

#[test]
fn synth_count_zero_emits_only_bona_fide() {
    let dir = tempfile::tempdir().unwrap();
    let (t, p) = pools(dir.path(), 64);
    let cfg = PipelineConfig {
        crop_size: 64,
        count: 0,
        ..PipelineConfig::default()
    };
    let o =
        commands::cmd_synth(&t, &p, &cfg, &dir.path().join("out"), Execution::Sequential).unwrap();
    let records = io::load_manifest(&o.corpus.manifest).unwrap();
    assert_eq!(records.len(), 1);
    assert!(records.iter().all(|r| r.label == Label::BonaFide));
    let text = fs::read_to_string(&o.corpus.manifest).unwrap();
    assert!(text.starts_with("# seed=0\n# attacks=0\n"));
}

#[test]
fn synth_single_subject_pools_oversample_with_replacement() {
    let dir = tempfile::tempdir().unwrap();
    let (t, p) = pools(dir.path(), 64);
    let cfg = PipelineConfig {
        crop_size: 64,
        count: 3,
        ..PipelineConfig::default()
    };
    let o =
        commands::cmd_synth(&t, &p, &cfg, &dir.path().join("out"), Execution::Parallel).unwrap();
    assert_eq!(o.corpus.attacks, 3);
    assert!(o.corpus.with_replacement);
    assert!(fs::read_to_string(&o.corpus.manifest)
        .unwrap()
        .contains("# with_replacement=true\n"));
}

#[test]
fn synth_reports_gate_rejections() {
    let dir = tempfile::tempdir().unwrap();
    let (t, p) = pools(dir.path(), 64);
    let mut cfg = PipelineConfig {
        crop_size: 64,
        ..PipelineConfig::default()
    };
    cfg.set("gate_lip_gap", "0.000001").unwrap();
    let err = commands::cmd_synth(&t, &p, &cfg, &dir.path().join("out"), Execution::Sequential)
        .unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("mouth_closed 1"), "{msg}");
}

#[test]
fn lbp_channel_extracts_from_images() {
    let dir = tempfile::tempdir().unwrap();
    let (_, p) = pools(dir.path(), 64);
    let mut cfg = PipelineConfig {
        channel: FeatureChannel::LbpGrid,
        crop_size: 64,
        ..PipelineConfig::default()
    };
    let out = dir.path().join("f.csv");
    let o = commands::cmd_extract(&p, &cfg, &out, Execution::Parallel).unwrap();
    assert!(o.errors.is_empty(), "{:?}", o.errors);
    assert_eq!(o.rows[0].feature.dim(), 8192);
    cfg.channel = FeatureChannel::LandmarkDiff;
    let o = commands::cmd_extract(&p, &cfg, &out, Execution::Parallel).unwrap();
    assert_eq!(o.rows[0].feature.dim(), 136);
}

#[test]
fn parallel_and_sequential_pipelines_agree() {
    let dir = tempfile::tempdir().unwrap();
    let world = EmbeddingWorld {
        train_pairs: 60,
        test_pairs: 40,
        ..EmbeddingWorld::default()
    };
    let manifest = world.write(dir.path()).unwrap();
    let cfg = PipelineConfig::default();
    let mut outputs = Vec::new();
    for (k, exec) in [Execution::Sequential, Execution::Parallel]
        .into_iter()
        .enumerate()
    {
        let f = dir.path().join(format!("f{k}.csv"));
        let m = dir.path().join(format!("m{k}.json"));
        let s = dir.path().join(format!("s{k}.csv"));
        commands::cmd_extract(&manifest, &cfg, &f, exec).unwrap();
        commands::cmd_train(&f, &cfg, &m, exec).unwrap();
        commands::cmd_score(&m, &f, None, &s, exec).unwrap();
        outputs.push([f, m, s].map(|p| fs::read(p).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
}
