//! Labelled feature tables: CSV I/O, frame files, seeded synthetic
//! Gaussian data and stratified train/test splits.
//!
//! CSV layout: a header `f0,…,f{d−1},label` followed by one row per
//! pattern, `.` as decimal separator, labels unquoted.

use std::collections::BTreeSet;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Deserialize;
use thiserror::Error;

use crate::belief::{BeliefError, Frame};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("dataset is empty")]
    Empty,
    #[error("line {line}: {message}")]
    Header { line: u64, message: String },
    #[error("line {line}: expected {expected} fields, found {found}")]
    Ragged {
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: column `{column}` is not a finite number: `{value}`")]
    NonNumeric {
        line: u64,
        column: String,
        value: String,
    },
    #[error("line {line}: empty label")]
    EmptyLabel { line: u64 },
    #[error("line {line}: {source}")]
    Csv {
        line: u64,
        #[source]
        source: csv::Error,
    },
    #[error("frame: {0}")]
    Frame(#[from] BeliefError),
    #[error("invalid synthetic spec: {0}")]
    Spec(String),
    #[error("split ratio must be in (0, 1), got {0}")]
    Ratio(f64),
    #[error("rows have {got} features, expected {expected}")]
    Dimension { expected: usize, got: usize },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DataError + '_ {
    move |source| DataError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Feature matrix with string labels. `frame` lists the learned classes;
/// labels outside it are unlearned.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<String>,
    pub frame: Arc<Frame>,
}

impl Dataset {
    pub fn new(
        features: Vec<Vec<f64>>,
        labels: Vec<String>,
        frame: Arc<Frame>,
    ) -> Result<Self, DataError> {
        if features.is_empty() {
            return Err(DataError::Empty);
        }
        let d = features[0].len();
        if let Some(bad) = features.iter().find(|r| r.len() != d) {
            return Err(DataError::Dimension {
                expected: d,
                got: bad.len(),
            });
        }
        assert_eq!(features.len(), labels.len(), "one label per row");
        Ok(Self {
            features,
            labels,
            frame,
        })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    /// Frame index of each label, `None` for unlearned ones.
    pub fn class_indices(&self) -> Vec<Option<usize>> {
        self.labels.iter().map(|l| self.frame.index_of(l)).collect()
    }

    /// Rows whose label belongs to the frame, with frame indices.
    pub fn learned(&self) -> (Vec<Vec<f64>>, Vec<usize>) {
        self.features
            .iter()
            .zip(self.class_indices())
            .filter_map(|(x, y)| y.map(|y| (x.clone(), y)))
            .unzip()
    }

    pub fn unlearned_labels(&self) -> BTreeSet<&str> {
        self.labels
            .iter()
            .filter(|l| self.frame.index_of(l).is_none())
            .map(String::as_str)
            .collect()
    }

    /// Same rows, another frame.
    pub fn with_frame(mut self, frame: Arc<Frame>) -> Self {
        self.frame = frame;
        self
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::WriterBuilder::new()
            .quote_style(csv::QuoteStyle::Never)
            .from_writer(out);
        let mut header: Vec<String> = (0..self.dim()).map(|i| format!("f{i}")).collect();
        header.push("label".into());
        w.write_record(&header)?;
        for (row, label) in self.features.iter().zip(&self.labels) {
            let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            rec.push(label.clone());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<(), DataError> {
        let path = path.as_ref();
        let file = fs::File::create(path).map_err(io_err(path))?;
        self.write_csv(std::io::BufWriter::new(file))
            .map_err(|source| DataError::Csv { line: 0, source })
    }
}

/// Parses a dataset. Without an explicit frame, the frame is the sorted
/// set of distinct labels.
pub fn read_dataset<R: Read>(input: R, frame: Option<Arc<Frame>>) -> Result<Dataset, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = reader
        .headers()
        .map_err(|source| DataError::Csv { line: 1, source })?
        .clone();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(DataError::Empty);
    }
    if header.len() < 2 || &header[header.len() - 1] != "label" {
        return Err(DataError::Header {
            line: 1,
            message: "expected header `f0,…,f{d−1},label`".into(),
        });
    }
    let d = header.len() - 1;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|source| DataError::Csv {
            line: source.position().map_or(0, |p| p.line()),
            source,
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != d + 1 {
            return Err(DataError::Ragged {
                line,
                expected: d + 1,
                found: rec.len(),
            });
        }
        let mut row = Vec::with_capacity(d);
        for (k, field) in rec.iter().take(d).enumerate() {
            let v: f64 = field
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| DataError::NonNumeric {
                    line,
                    column: header[k].to_string(),
                    value: field.to_string(),
                })?;
            row.push(v);
        }
        let label = &rec[d];
        if label.is_empty() {
            return Err(DataError::EmptyLabel { line });
        }
        features.push(row);
        labels.push(label.to_string());
    }
    if features.is_empty() {
        return Err(DataError::Empty);
    }
    let frame = match frame {
        Some(f) => f,
        None => {
            let distinct: BTreeSet<&str> = labels.iter().map(String::as_str).collect();
            Arc::new(Frame::new(distinct)?)
        }
    };
    Dataset::new(features, labels, frame)
}

pub fn load_dataset(
    path: impl AsRef<Path>,
    frame: Option<Arc<Frame>>,
) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(io_err(path))?;
    read_dataset(std::io::BufReader::new(file), frame)
}

/// Frame file: one class label per line; blank lines and `#` comments are
/// skipped.
pub fn parse_frame(text: &str) -> Result<Frame, DataError> {
    let labels: Vec<&str> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect();
    Ok(Frame::new(labels)?)
}

pub fn load_frame(path: impl AsRef<Path>) -> Result<Frame, DataError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_frame(&text)
}

pub fn frame_to_string(frame: &Frame) -> String {
    let mut s = frame.labels().join("\n");
    s.push('\n');
    s
}

/// One Gaussian component with diagonal covariance.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub count: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassSpec {
    pub name: String,
    #[serde(default = "default_true")]
    pub learned: bool,
    #[serde(rename = "component")]
    pub components: Vec<ComponentSpec>,
}

fn default_true() -> bool {
    true
}

/// Description of a synthetic mixture dataset (TOML).
///
/// ```toml
/// [[class]]
/// name = "rock"
/// [[class.component]]
/// mean = [0.0, 0.0]
/// variance = [1.0, 1.0]
/// count = 100
/// ```
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    #[serde(rename = "class")]
    pub classes: Vec<ClassSpec>,
}

/// Four-class benchmark: three learned classes, two of which overlap, and
/// one displaced unlearned class.
pub const BENCHMARK_SPEC: &str = include_str!("../data/benchmark.toml");

impl SyntheticSpec {
    pub fn parse(text: &str) -> Result<Self, DataError> {
        let spec: SyntheticSpec =
            toml::from_str(text).map_err(|e| DataError::Spec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DataError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Self::parse(&text)
    }

    pub fn benchmark() -> Self {
        Self::parse(BENCHMARK_SPEC).expect("bundled benchmark spec is valid")
    }

    pub fn dim(&self) -> usize {
        self.classes
            .first()
            .and_then(|c| c.components.first())
            .map_or(0, |c| c.mean.len())
    }

    pub fn validate(&self) -> Result<(), DataError> {
        if self.classes.is_empty() {
            return Err(DataError::Spec("no classes".into()));
        }
        let d = self.dim();
        if d == 0 {
            return Err(DataError::Spec("mean vectors must be non-empty".into()));
        }
        for class in &self.classes {
            if class.components.is_empty() {
                return Err(DataError::Spec(format!(
                    "class `{}` has no components",
                    class.name
                )));
            }
            for (k, comp) in class.components.iter().enumerate() {
                let at = format!("class `{}` component {k}", class.name);
                if comp.count == 0 {
                    return Err(DataError::Spec(format!("{at}: count must be > 0")));
                }
                if comp.mean.len() != d || comp.variance.len() != d {
                    return Err(DataError::Spec(format!(
                        "{at}: mean and variance must have {d} entries"
                    )));
                }
                if comp.mean.iter().any(|v| !v.is_finite()) {
                    return Err(DataError::Spec(format!("{at}: non-finite mean")));
                }
                if comp.variance.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                    return Err(DataError::Spec(format!("{at}: variances must be > 0")));
                }
            }
        }
        let learned: Vec<&str> = self
            .classes
            .iter()
            .filter(|c| c.learned)
            .map(|c| c.name.as_str())
            .collect();
        Frame::new(learned)?;
        let all: BTreeSet<&str> = self.classes.iter().map(|c| c.name.as_str()).collect();
        if all.len() != self.classes.len() {
            return Err(DataError::Spec("class names must be unique".into()));
        }
        Ok(())
    }

    pub fn learned_frame(&self) -> Result<Frame, DataError> {
        Ok(Frame::new(
            self.classes
                .iter()
                .filter(|c| c.learned)
                .map(|c| c.name.clone()),
        )?)
    }
}

/// Samples the mixture with a ChaCha8 stream seeded from `seed`. Rows come
/// out class by class, component by component.
pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<Dataset, DataError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for class in &spec.classes {
        for comp in &class.components {
            let sd: Vec<f64> = comp.variance.iter().map(|v| v.sqrt()).collect();
            for _ in 0..comp.count {
                let row = comp
                    .mean
                    .iter()
                    .zip(&sd)
                    .map(|(m, s)| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        m + s * z
                    })
                    .collect();
                features.push(row);
                labels.push(class.name.clone());
            }
        }
    }
    Dataset::new(features, labels, Arc::new(spec.learned_frame()?))
}

/// Stratified split: within each label, a seeded shuffle sends
/// `round(ratio·count)` rows to the training side. Both sides keep the
/// original row order.
pub fn split(data: &Dataset, ratio: f64, seed: u64) -> Result<(Dataset, Dataset), DataError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(DataError::Ratio(ratio));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let distinct: BTreeSet<&str> = data.labels.iter().map(String::as_str).collect();
    let mut in_train = vec![false; data.len()];
    for label in distinct {
        let mut idx: Vec<usize> = (0..data.len())
            .filter(|&i| data.labels[i] == label)
            .collect();
        idx.shuffle(&mut rng);
        let take = (ratio * idx.len() as f64).round() as usize;
        for &i in &idx[..take] {
            in_train[i] = true;
        }
    }
    let pick = |want: bool| -> Result<Dataset, DataError> {
        let (f, l): (Vec<Vec<f64>>, Vec<String>) = (0..data.len())
            .filter(|&i| in_train[i] == want)
            .map(|i| (data.features[i].clone(), data.labels[i].clone()))
            .unzip();
        Dataset::new(f, l, Arc::clone(&data.frame))
    };
    Ok((pick(true)?, pick(false)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_small_file() {
        let csv = "f0,f1,label\n1,2,a\n3.5,-1e-3,b\n0,0,a\n";
        let ds = read_dataset(csv.as_bytes(), None).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.frame.labels(), ["a", "b"]);
        assert_eq!(ds.features[1], vec![3.5, -1e-3]);
    }

    #[test]
    fn ragged_row_names_line() {
        let csv = "f0,f1,label\n1,2,a\n3,b\n";
        match read_dataset(csv.as_bytes(), None) {
            Err(DataError::Ragged {
                line,
                expected,
                found,
            }) => {
                assert_eq!((line, expected, found), (3, 3, 2));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_numeric_names_line_and_column() {
        let csv = "f0,f1,label\n1,2,a\n1,x,b\n";
        let err = read_dataset(csv.as_bytes(), None).unwrap_err();
        assert!(matches!(err, DataError::NonNumeric { line: 3, .. }));
        assert!(err.to_string().contains("f1"));
        let csv = "f0,label\nNaN,a\n";
        assert!(matches!(
            read_dataset(csv.as_bytes(), None),
            Err(DataError::NonNumeric { line: 2, .. })
        ));
    }

    #[test]
    fn empty_inputs() {
        assert!(matches!(
            read_dataset("".as_bytes(), None),
            Err(DataError::Empty)
        ));
        assert!(matches!(
            read_dataset("f0,label\n".as_bytes(), None),
            Err(DataError::Empty)
        ));
        assert!(matches!(
            read_dataset("f0,f1\n1,2\n".as_bytes(), None),
            Err(DataError::Header { .. })
        ));
    }

    #[test]
    fn frame_file_marks_unlearned() {
        let csv = "f0,label\n1,rock\n2,sand\n3,silt\n4,ripple\n";
        let frame = Arc::new(parse_frame("rock\nsand\n# comment\nsilt\n").unwrap());
        let ds = read_dataset(csv.as_bytes(), Some(frame)).unwrap();
        assert_eq!(ds.class_indices(), vec![Some(0), Some(1), Some(2), None]);
        assert_eq!(
            ds.unlearned_labels().into_iter().collect::<Vec<_>>(),
            ["ripple"]
        );
        let (x, y) = ds.learned();
        assert_eq!(x.len(), 3);
        assert_eq!(y, vec![0, 1, 2]);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let csv = "f0,f1,label\n0.1,2.5e-17,a\n-3,1e300,b\n";
        let ds = read_dataset(csv.as_bytes(), None).unwrap();
        let mut out = Vec::new();
        ds.write_csv(&mut out).unwrap();
        let back = read_dataset(out.as_slice(), None).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn synthetic_is_seeded() {
        let spec = SyntheticSpec::parse(
            r#"
            [[class]]
            name = "a"
            [[class.component]]
            mean = [0.0, 0.0]
            variance = [1.0, 1.0]
            count = 20
            [[class]]
            name = "b"
            learned = false
            [[class.component]]
            mean = [5.0, 5.0]
            variance = [0.5, 2.0]
            count = 10
            "#,
        )
        .unwrap();
        let a = generate_synthetic(&spec, 7).unwrap();
        let b = generate_synthetic(&spec, 7).unwrap();
        let c = generate_synthetic(&spec, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.features, c.features);
        assert_eq!(a.len(), 30);
        assert_eq!(a.frame.labels(), ["a"]);
    }

    #[test]
    fn synthetic_rejects_bad_specs() {
        let zero = r#"
            [[class]]
            name = "a"
            [[class.component]]
            mean = [0.0]
            variance = [1.0]
            count = 0
        "#;
        assert!(matches!(
            SyntheticSpec::parse(zero),
            Err(DataError::Spec(_))
        ));
        let neg = zero
            .replace("count = 0", "count = 3")
            .replace("[1.0]", "[-1.0]");
        assert!(matches!(
            SyntheticSpec::parse(&neg),
            Err(DataError::Spec(_))
        ));
    }

    #[test]
    fn split_is_stratified_and_seeded() {
        let spec = SyntheticSpec::benchmark();
        let ds = generate_synthetic(&spec, 1).unwrap();
        let (tr, te) = split(&ds, 2.0 / 3.0, 5).unwrap();
        assert_eq!(tr.len() + te.len(), ds.len());
        for class in &spec.classes {
            let total: usize = class.components.iter().map(|c| c.count).sum();
            let n_test = te.labels.iter().filter(|l| **l == class.name).count();
            assert_eq!(n_test, total - (2.0 / 3.0 * total as f64).round() as usize);
        }
        let (tr2, _) = split(&ds, 2.0 / 3.0, 5).unwrap();
        assert_eq!(tr, tr2);
        assert!(matches!(split(&ds, 1.0, 5), Err(DataError::Ratio(_))));
    }
}
