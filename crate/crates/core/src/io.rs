//! Text and image carriers: manifests, embeddings, landmarks, PPM images and
//! score files. Reals are written with Rust's shortest round-trip formatting,
//! so write-then-read reproduces values exactly.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::features::{FeatureChannel, FeatureVector};
use crate::model::{
    Embedding, FaceSource, Label, LandmarkSet, PairRecord, Point, RasterImage, Split,
    LANDMARK_COUNT,
};

pub const MANIFEST_COLUMNS: [&str; 9] = [
    "pair_id",
    "ref_image",
    "probe_image",
    "ref_landmarks",
    "probe_landmarks",
    "ref_embedding",
    "probe_embedding",
    "label",
    "split",
];

const SUBJECT_COLUMN: &str = "subject";

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn create_file(path: &Path) -> Result<fs::File> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::File::create(path).map_err(|e| Error::io(path, e))
}

/// Write text to `path`, creating parent directories.
pub fn write_string(path: &Path, contents: &str) -> Result<()> {
    let mut f = create_file(path)?;
    f.write_all(contents.as_bytes())
        .map_err(|e| Error::io(path, e))
}

fn parse_real(path: &Path, line: u64, token: &str) -> Result<f64> {
    let t = token.trim();
    t.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::parse(path, line, format!("not a finite number: {t:?}")))
}

/// Load a pair manifest. Lines starting with `#` are comments. Relative
/// file paths are resolved against the manifest's directory.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Vec<PairRecord>> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    let base = path.parent().unwrap_or(Path::new(""));
    parse_manifest(&text, path, Some(base))
}

/// Parse manifest text. Paths are kept verbatim when `base` is `None`.
pub fn parse_manifest(text: &str, path: &Path, base: Option<&Path>) -> Result<Vec<PairRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(text.as_bytes());

    let mut records = reader.records();
    let header = match records.next() {
        None => return Err(Error::parse(path, 1, "missing header row")),
        Some(r) => r.map_err(|e| csv_error(path, e))?,
    };
    let header_line = header.position().map_or(1, |p| p.line());
    let cols: Vec<&str> = header.iter().map(str::trim).collect();
    let has_subject = match cols.len() {
        9 => false,
        10 if cols[9] == SUBJECT_COLUMN => true,
        _ => {
            return Err(Error::parse(
                path,
                header_line,
                format!(
                    "expected header {}[,{SUBJECT_COLUMN}]",
                    MANIFEST_COLUMNS.join(",")
                ),
            ))
        }
    };
    if cols[..9] != MANIFEST_COLUMNS {
        return Err(Error::parse(
            path,
            header_line,
            format!("expected header {}", MANIFEST_COLUMNS.join(",")),
        ));
    }

    let resolve = |cell: &str| -> Option<PathBuf> {
        let cell = cell.trim();
        if cell.is_empty() {
            return None;
        }
        let p = PathBuf::from(cell);
        Some(match base {
            Some(b) if p.is_relative() => b.join(p),
            _ => p,
        })
    };

    let mut out = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != cols.len() {
            return Err(Error::parse(
                path,
                line,
                format!("expected {} fields, got {}", cols.len(), rec.len()),
            ));
        }
        let pair_id = rec[0].trim().to_string();
        if pair_id.is_empty() {
            return Err(Error::parse(path, line, "empty pair_id"));
        }
        let label: Label = rec[7].trim().parse().map_err(|e| with_line(e, line))?;
        let split: Split = rec[8].trim().parse().map_err(|e| with_line(e, line))?;
        let subject = if has_subject && !rec[9].trim().is_empty() {
            rec[9].trim().to_string()
        } else {
            pair_id.clone()
        };
        out.push(PairRecord {
            reference: FaceSource {
                image: resolve(&rec[1]),
                landmarks: resolve(&rec[3]),
                embedding: resolve(&rec[5]),
            },
            probe: FaceSource {
                image: resolve(&rec[2]),
                landmarks: resolve(&rec[4]),
                embedding: resolve(&rec[6]),
            },
            pair_id,
            label,
            split,
            subject,
        });
    }
    Ok(out)
}

fn with_line(e: Error, line: u64) -> Error {
    match e {
        Error::UnknownToken { kind, token, .. } => Error::UnknownToken { kind, token, line },
        other => other,
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    Error::parse(path, line, e.to_string())
}

/// Write a manifest. `comments` become leading `#` lines; paths are written
/// as given. A `subject` column is added when any subject differs from its
/// pair id.
pub fn write_manifest(
    path: impl AsRef<Path>,
    comments: &[String],
    records: &[PairRecord],
) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for c in comments {
        out.push_str("# ");
        out.push_str(c);
        out.push('\n');
    }
    let with_subject = records.iter().any(|r| r.subject != r.pair_id);
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    let mut header: Vec<&str> = MANIFEST_COLUMNS.to_vec();
    if with_subject {
        header.push(SUBJECT_COLUMN);
    }
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    let cell = |p: &Option<PathBuf>| {
        p.as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_default()
    };
    for r in records {
        let mut row = vec![
            r.pair_id.clone(),
            cell(&r.reference.image),
            cell(&r.probe.image),
            cell(&r.reference.landmarks),
            cell(&r.probe.landmarks),
            cell(&r.reference.embedding),
            cell(&r.probe.embedding),
            r.label.to_string(),
            r.split.to_string(),
        ];
        if with_subject {
            row.push(r.subject.clone());
        }
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    out.push_str(&String::from_utf8(bytes).expect("csv output is utf-8"));
    write_string(path, &out)
}

/// Load a one-line comma-separated embedding and check its dimension.
pub fn load_embedding(path: impl AsRef<Path>, expected_dim: usize) -> Result<Embedding> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (idx, line) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "empty embedding file"))?;
    if let Some((extra, _)) = lines.next() {
        return Err(Error::parse(
            path,
            extra as u64 + 1,
            "embedding file must hold a single line",
        ));
    }
    let values = line
        .split(',')
        .map(|t| parse_real(path, idx as u64 + 1, t))
        .collect::<Result<Vec<_>>>()?;
    if values.len() != expected_dim {
        return Err(Error::DimensionMismatch {
            expected: expected_dim,
            actual: values.len(),
        });
    }
    Embedding::new(values)
}

pub fn format_embedding(embedding: &Embedding) -> String {
    let mut s = join_reals(embedding.values());
    s.push('\n');
    s
}

pub fn write_embedding(path: impl AsRef<Path>, embedding: &Embedding) -> Result<()> {
    write_string(path.as_ref(), &format_embedding(embedding))
}

/// Load 68 `x,y` lines.
pub fn load_landmarks(path: impl AsRef<Path>) -> Result<LandmarkSet> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    parse_landmarks(&text, path)
}

pub fn parse_landmarks(text: &str, path: &Path) -> Result<LandmarkSet> {
    let mut points = Vec::with_capacity(LANDMARK_COUNT);
    for (i, line) in text.lines().enumerate() {
        let line_no = i as u64 + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let (Some(x), Some(y), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::parse(path, line_no, "expected \"x,y\""));
        };
        points.push(Point::new(
            parse_real(path, line_no, x)?,
            parse_real(path, line_no, y)?,
        ));
    }
    if points.len() != LANDMARK_COUNT {
        return Err(Error::parse(
            path,
            text.lines().count() as u64,
            format!(
                "expected {LANDMARK_COUNT} landmark lines, got {}",
                points.len()
            ),
        ));
    }
    LandmarkSet::new(points)
}

pub fn format_landmarks(landmarks: &LandmarkSet) -> String {
    landmarks
        .points()
        .iter()
        .map(|p| format!("{},{}\n", p.x, p.y))
        .collect()
}

pub fn write_landmarks(path: impl AsRef<Path>, landmarks: &LandmarkSet) -> Result<()> {
    write_string(path.as_ref(), &format_landmarks(landmarks))
}

pub(crate) fn join_reals(values: &[f64]) -> String {
    let mut s = String::with_capacity(values.len() * 8);
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        s.push_str(&v.to_string());
    }
    s
}

/// Read a binary PPM (P6, maxval 255).
pub fn load_ppm(path: impl AsRef<Path>) -> Result<RasterImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_ppm(&bytes).map_err(|m| Error::parse(path, 1, m))
}

pub fn decode_ppm(bytes: &[u8]) -> std::result::Result<RasterImage, String> {
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'#' {
            pos += 1;
        }
        if start == pos {
            return Err("truncated PPM header".into());
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| "non-ASCII PPM header")?);
    }
    if fields[0] != "P6" {
        return Err(format!(
            "unsupported PPM magic {:?}, expected P6",
            fields[0]
        ));
    }
    let num = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| format!("bad PPM header field {s:?}"))
    };
    let (w, h, maxval) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
    if maxval != 255 {
        return Err(format!("unsupported PPM maxval {maxval}, expected 255"));
    }
    // exactly one whitespace byte separates the header from the raster
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err("truncated PPM header".into());
    }
    pos += 1;
    let need = w
        .checked_mul(h)
        .and_then(|n| n.checked_mul(3))
        .ok_or("PPM too large")?;
    if bytes.len() - pos != need {
        return Err(format!(
            "PPM raster holds {} bytes, {w}x{h} needs {need}",
            bytes.len() - pos
        ));
    }
    RasterImage::new(w, h, bytes[pos..].to_vec()).map_err(|e| e.to_string())
}

pub fn encode_ppm(image: &RasterImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend_from_slice(image.pixels());
    out
}

pub fn write_ppm(path: impl AsRef<Path>, image: &RasterImage) -> Result<()> {
    let path = path.as_ref();
    let mut f = create_file(path)?;
    f.write_all(&encode_ppm(image))
        .map_err(|e| Error::io(path, e))
}

/// One row of a detection score file.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub pair_id: String,
    pub label: Label,
    pub score: f64,
}

pub const SCORE_HEADER: &str = "pair_id,label,score";

pub fn write_scores(path: impl AsRef<Path>, rows: &[ScoreRow]) -> Result<()> {
    let mut s = String::from(SCORE_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&format!("{},{},{}\n", r.pair_id, r.label, r.score));
    }
    write_string(path.as_ref(), &s)
}

pub fn load_scores(path: impl AsRef<Path>) -> Result<Vec<ScoreRow>> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == SCORE_HEADER => {}
        _ => {
            return Err(Error::parse(
                path,
                1,
                format!("expected header {SCORE_HEADER}"),
            ))
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let line_no = i as u64 + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::parse(path, line_no, "expected pair_id,label,score"));
        }
        rows.push(ScoreRow {
            pair_id: parts[0].trim().to_string(),
            label: parts[1].trim().parse().map_err(|e| with_line(e, line_no))?,
            score: parse_real(path, line_no, parts[2])?,
        });
    }
    Ok(rows)
}

/// Comparison scores: one real per line, `#` comments and blank lines skipped.
pub fn load_score_list(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        out.push(parse_real(path, i as u64 + 1, t)?);
    }
    Ok(out)
}

pub fn write_score_list(path: impl AsRef<Path>, scores: &[f64]) -> Result<()> {
    let s: String = scores.iter().map(|v| format!("{v}\n")).collect();
    write_string(path.as_ref(), &s)
}

/// One extracted feature row.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub pair_id: String,
    pub label: Label,
    pub split: Split,
    pub feature: FeatureVector,
}

const FEATURE_PREFIX: [&str; 5] = ["pair_id", "label", "split", "channel", "dim"];

/// Feature file: header `pair_id,label,split,channel,dim,f0,…,f{d-1}`, one
/// row per pair. All rows share one channel and dimension.
pub fn write_features(path: impl AsRef<Path>, rows: &[FeatureRow]) -> Result<()> {
    let dim = rows.first().map_or(0, |r| r.feature.dim());
    let mut s = FEATURE_PREFIX.join(",");
    for k in 0..dim {
        s.push_str(&format!(",f{k}"));
    }
    s.push('\n');
    for r in rows {
        if r.feature.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: r.feature.dim(),
            });
        }
        s.push_str(&format!(
            "{},{},{},{},{}",
            r.pair_id, r.label, r.split, r.feature.channel, dim
        ));
        if dim > 0 {
            s.push(',');
            s.push_str(&join_reals(&r.feature.values));
        }
        s.push('\n');
    }
    write_string(path.as_ref(), &s)
}

pub fn load_features(path: impl AsRef<Path>) -> Result<Vec<FeatureRow>> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let header: Vec<&str> = match lines.next() {
        Some((_, h)) => h.trim().split(',').collect(),
        None => return Err(Error::parse(path, 1, "empty feature file")),
    };
    if header.len() < FEATURE_PREFIX.len() || header[..FEATURE_PREFIX.len()] != FEATURE_PREFIX {
        return Err(Error::parse(
            path,
            1,
            format!("expected header starting {}", FEATURE_PREFIX.join(",")),
        ));
    }
    let dim = header.len() - FEATURE_PREFIX.len();
    let mut rows = Vec::new();
    for (i, line) in lines {
        let line_no = i as u64 + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != header.len() {
            return Err(Error::parse(
                path,
                line_no,
                format!("expected {} fields, found {}", header.len(), parts.len()),
            ));
        }
        let declared: usize = parts[4]
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, line_no, format!("bad dim {:?}", parts[4])))?;
        if declared != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: declared,
            });
        }
        let channel: FeatureChannel = parts[3].trim().parse().map_err(|e| with_line(e, line_no))?;
        let values = parts[5..]
            .iter()
            .map(|t| parse_real(path, line_no, t))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(FeatureRow {
            pair_id: parts[0].trim().to_string(),
            label: parts[1].trim().parse().map_err(|e| with_line(e, line_no))?,
            split: parts[2].trim().parse().map_err(|e| with_line(e, line_no))?,
            feature: FeatureVector { channel, values },
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const HEADER: &str = "pair_id,ref_image,probe_image,ref_landmarks,probe_landmarks,ref_embedding,probe_embedding,label,split\n";

    fn parse(text: &str) -> Result<Vec<PairRecord>> {
        parse_manifest(text, Path::new("m.csv"), None)
    }

    #[test]
    fn manifest_rows_in_file_order() {
        let text = format!(
            "{HEADER}p1,,,,,r1.txt,q1.txt,bona_fide,train\np2,,,,,r2.txt,q2.txt,attack,test\n"
        );
        let recs = parse(&text).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].pair_id, "p1");
        assert_eq!(recs[0].label, Label::BonaFide);
        assert_eq!(recs[1].label, Label::Attack);
        assert_eq!(recs[1].split, Split::Test);
        assert_eq!(
            recs[1].probe.embedding.as_deref(),
            Some(Path::new("q2.txt"))
        );
        assert_eq!(recs[0].reference.image, None);
        assert_eq!(recs[0].subject, "p1");
    }

    #[test]
    fn header_only_manifest_is_empty() {
        assert!(parse(HEADER).unwrap().is_empty());
    }

    #[test]
    fn unknown_label_names_line_and_token() {
        let text = format!("# note\n{HEADER}p1,,,,,,,bona_fide,train\np2,,,,,,,spoof,train\n");
        match parse(&text).unwrap_err() {
            Error::UnknownToken { token, line, kind } => {
                assert_eq!(token, "spoof");
                assert_eq!(kind, "label");
                assert_eq!(line, 4);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_row_reports_line() {
        let text = format!("{HEADER}p1,,,,,,bona_fide,train\n");
        let err = parse(&text).unwrap_err().to_string();
        assert!(err.contains("m.csv:2"), "{err}");
    }

    #[test]
    fn subject_column_and_relative_paths() {
        let text = "pair_id,ref_image,probe_image,ref_landmarks,probe_landmarks,ref_embedding,probe_embedding,label,split,subject\n\
                    a,img/a.ppm,,,,,,bona_fide,train,s7\n";
        let recs = parse_manifest(text, Path::new("d/m.csv"), Some(Path::new("d"))).unwrap();
        assert_eq!(recs[0].subject, "s7");
        assert_eq!(
            recs[0].reference.image.as_deref(),
            Some(Path::new("d/img/a.ppm"))
        );
    }

    #[test]
    fn manifest_write_read_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let text = format!("{HEADER}p1,a.ppm,,a.txt,,,,attack,train\n");
        let recs = parse(&text).unwrap();
        let path = dir.path().join("out.csv");
        write_manifest(&path, &["seed=3".into()], &recs).unwrap();
        let written = fs::read_to_string(&path).unwrap();
        assert!(written.starts_with("# seed=3\n"));
        let back = parse_manifest(&written, &path, None).unwrap();
        assert_eq!(back, recs);
    }

    #[test]
    fn embedding_examples() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.txt");
        fs::write(&p, vec!["0.0"; 512].join(",")).unwrap();
        let e = load_embedding(&p, 512).unwrap();
        assert!(e.values().iter().all(|&v| v == 0.0));

        fs::write(&p, vec!["0.0"; 511].join(",")).unwrap();
        assert!(matches!(
            load_embedding(&p, 512),
            Err(Error::DimensionMismatch {
                expected: 512,
                actual: 511
            })
        ));

        fs::write(&p, "1.0,-2.5,3.25\n").unwrap();
        assert_eq!(load_embedding(&p, 3).unwrap().values(), &[1.0, -2.5, 3.25]);

        fs::write(&p, "1.0,x,3\n").unwrap();
        assert!(matches!(load_embedding(&p, 3), Err(Error::Parse { .. })));
        fs::write(&p, "").unwrap();
        assert!(load_embedding(&p, 3).is_err());
    }

    #[test]
    fn landmark_examples() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("l.txt");
        let text: String = (0..68).map(|i| format!("{i},{i}\n")).collect();
        fs::write(&p, &text).unwrap();
        let lm = load_landmarks(&p).unwrap();
        assert_eq!(lm.get(67), Point::new(67.0, 67.0));

        let short: String = (0..67).map(|i| format!("{i},{i}\n")).collect();
        fs::write(&p, short).unwrap();
        assert!(load_landmarks(&p).is_err());

        let bad = text.replacen("3,3", "a,b", 1);
        fs::write(&p, bad).unwrap();
        let err = load_landmarks(&p).unwrap_err().to_string();
        assert!(err.contains(":4:"), "{err}");
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_manifest("/nonexistent/m.csv"),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn ppm_round_trip_and_rejects() {
        let img = RasterImage::from_fn(5, 3, |x, y| [x as u8, y as u8, 200]).unwrap();
        let bytes = encode_ppm(&img);
        assert_eq!(decode_ppm(&bytes).unwrap(), img);
        let commented = [b"P6 # c\n5 3\n255\n".as_slice(), img.pixels()].concat();
        assert_eq!(decode_ppm(&commented).unwrap(), img);
        assert!(decode_ppm(b"P3\n1 1\n255\n0 0 0").is_err());
        assert!(decode_ppm(&bytes[..bytes.len() - 1]).is_err());
    }

    proptest! {
        #[test]
        fn text_carriers_round_trip_exactly(
            vals in proptest::collection::vec(-1e6f64..1e6, 1..40),
            pts in proptest::collection::vec((-1e4f64..1e4, -1e4f64..1e4), 68),
        ) {
            let e = Embedding::new(vals.clone()).unwrap();
            let text = format_embedding(&e);
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("e.txt");
            fs::write(&p, &text).unwrap();
            prop_assert_eq!(load_embedding(&p, vals.len()).unwrap(), e);

            let lm = LandmarkSet::new(pts.iter().map(|&(x, y)| Point::new(x, y)).collect()).unwrap();
            let back = parse_landmarks(&format_landmarks(&lm), Path::new("l")).unwrap();
            prop_assert_eq!(back, lm);
        }
    }
}
