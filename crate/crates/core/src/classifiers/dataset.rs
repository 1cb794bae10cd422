//! Labelled image manifests, stratified splitting and accuracy reports.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ClassifierHandle, Preprocess, Role};
use crate::error::{Error, Result};
use crate::imaging::RasterImage;
use crate::neuralnet::LabeledTensors;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: String,
}

/// `path,label` rows plus split settings.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    pub train_fraction: f64,
    pub seed: u64,
}

pub const DEFAULT_TRAIN_FRACTION: f64 = 0.70;

impl DatasetManifest {
    pub fn new(entries: Vec<ManifestEntry>, seed: u64) -> Self {
        Self {
            entries,
            train_fraction: DEFAULT_TRAIN_FRACTION,
            seed,
        }
    }

    /// Reads a CSV with a `path,label` header. Relative paths are resolved
    /// against the manifest's directory.
    pub fn load(path: impl AsRef<Path>, seed: u64) -> Result<Self> {
        let path = path.as_ref();
        let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::Reader::from_reader(file);
        let mut entries = Vec::new();
        for (line, row) in reader.deserialize::<ManifestEntry>().enumerate() {
            let mut entry =
                row.map_err(|e| Error::Dataset(format!("{} row {}: {e}", path.display(), line + 1)))?;
            if entry.path.is_relative() {
                entry.path = base.join(&entry.path);
            }
            entries.push(entry);
        }
        Ok(Self::new(entries, seed))
    }

    pub fn write_csv(entries: &[ManifestEntry], out: impl std::io::Write) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        for e in entries {
            writer
                .serialize(e)
                .map_err(|e| Error::Dataset(format!("manifest write: {e}")))?;
        }
        writer
            .flush()
            .map_err(|e| Error::Dataset(format!("manifest write: {e}")))
    }

    /// Class index per entry for `role`; unknown labels are an error.
    pub fn class_indices(&self, role: Role) -> Result<Vec<usize>> {
        self.entries
            .iter()
            .map(|e| {
                role.parse_label(&e.label).ok_or_else(|| {
                    Error::Dataset(format!("{}: label {:?} is not a {role} label", e.path.display(), e.label))
                })
            })
            .collect()
    }

    /// Errors unless every class of `role` has at least two samples.
    pub fn check_classes(&self, role: Role) -> Result<Vec<usize>> {
        let labels = self.class_indices(role)?;
        let names = role.label_names();
        for (i, name) in names.iter().enumerate() {
            let n = labels.iter().filter(|&&l| l == i).count();
            if n < 2 {
                return Err(Error::Dataset(format!("class {name:?} has {n} samples; at least 2 are needed")));
            }
        }
        Ok(labels)
    }
}

/// Per-class seeded split; each class contributes `round(fraction · n)` samples
/// (halves rounded up) to train. Returns sorted index lists.
pub fn stratified_split_indices<K: Ord + Clone>(labels: &[K], fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut by_class: BTreeMap<K, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        by_class.entry(l.clone()).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for (_, mut members) in by_class {
        members.shuffle(&mut rng);
        let k = (fraction * members.len() as f64 + 0.5 + 1e-9).floor() as usize;
        let k = k.min(members.len());
        train.extend_from_slice(&members[..k]);
        val.extend_from_slice(&members[k..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

/// Splits the manifest's entries into (train, validation).
pub fn stratified_split(m: &DatasetManifest) -> Result<(Vec<ManifestEntry>, Vec<ManifestEntry>)> {
    let labels: Vec<&str> = m.entries.iter().map(|e| e.label.as_str()).collect();
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for l in &labels {
        *counts.entry(l).or_default() += 1;
    }
    if let Some((l, n)) = counts.iter().find(|(_, &n)| n < 2) {
        return Err(Error::Dataset(format!("class {l:?} has {n} samples; at least 2 are needed")));
    }
    let (t, v) = stratified_split_indices(&labels, m.train_fraction, m.seed);
    let pick = |idx: Vec<usize>| idx.into_iter().map(|i| m.entries[i].clone()).collect();
    Ok((pick(t), pick(v)))
}

/// Decodes and preprocesses every entry.
pub fn load_samples(entries: &[ManifestEntry], role: Role, pre: &Preprocess) -> Result<LabeledTensors> {
    let mut set = LabeledTensors::new(pre.input_shape());
    for e in entries {
        let label = role
            .parse_label(&e.label)
            .ok_or_else(|| Error::Dataset(format!("label {:?} is not a {role} label", e.label)))?;
        let img = RasterImage::load(&e.path)?;
        set.push(&pre.tensor_data(&img), label);
    }
    Ok(set)
}

/// Top-1 accuracy and confusion matrix (rows = truth, columns = prediction).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub labels: Vec<String>,
    pub total: u64,
    pub correct: u64,
    pub accuracy: f64,
    pub confusion: Vec<Vec<u64>>,
}

impl Evaluation {
    pub fn from_predictions(labels: Vec<String>, truth: &[usize], predicted: &[usize]) -> Result<Self> {
        if truth.is_empty() {
            return Err(Error::Dataset("empty evaluation set".into()));
        }
        if truth.len() != predicted.len() {
            return Err(Error::Dataset("prediction count differs from sample count".into()));
        }
        let k = labels.len();
        let mut confusion = vec![vec![0u64; k]; k];
        for (&t, &p) in truth.iter().zip(predicted) {
            if t >= k || p >= k {
                return Err(Error::Dataset(format!("class index outside {k} labels")));
            }
            confusion[t][p] += 1;
        }
        let correct: u64 = (0..k).map(|i| confusion[i][i]).sum();
        let total = truth.len() as u64;
        Ok(Self {
            labels,
            total,
            correct,
            accuracy: correct as f64 / total as f64,
            confusion,
        })
    }

    /// Classifies every crop with `h` and tallies against `truth`.
    pub fn run(h: &ClassifierHandle, crops: &[RasterImage], truth: &[usize]) -> Result<Self> {
        let mut predicted = Vec::with_capacity(crops.len());
        for chunk in crops.chunks(64) {
            predicted.extend(h.predict(chunk)?.into_iter().map(|(i, _)| i));
        }
        let labels = h.role().label_names().into_iter().map(String::from).collect();
        Self::from_predictions(labels, truth, &predicted)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ten_samples_split_seven_three() {
        let labels = vec![0; 10];
        let (t, v) = stratified_split_indices(&labels, 0.7, 1);
        assert_eq!((t.len(), v.len()), (7, 3));
    }

    #[test]
    fn large_class_counts_round_half_up() {
        let mut labels = Vec::new();
        for (class, n) in [(0, 652), (1, 1055), (2, 384)] {
            labels.extend(std::iter::repeat(class).take(n));
        }
        let (t, v) = stratified_split_indices(&labels, 0.7, 5);
        let count = |set: &[usize], c| set.iter().filter(|&&i| labels[i] == c).count();
        let expected = [(0, 456), (1, 738), (2, 268)];
        for (c, want) in expected {
            let got = count(&t, c) as i64;
            assert!((got - want).abs() <= 2, "class {c}: {got}");
        }
        assert_eq!(t.len() + v.len(), labels.len());
    }

    #[test]
    fn split_rejects_singleton_class() {
        let entry = |l: &str| ManifestEntry {
            path: "x.png".into(),
            label: l.into(),
        };
        let m = DatasetManifest::new(vec![entry("jar"), entry("jar"), entry("no-jar")], 0);
        assert!(stratified_split(&m).is_err());
    }

    #[test]
    fn manifest_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let entries = vec![
            ManifestEntry {
                path: "a.png".into(),
                label: "jar".into(),
            },
            ManifestEntry {
                path: "b c.png".into(),
                label: "no-jar".into(),
            },
        ];
        let path = dir.path().join("m.csv");
        DatasetManifest::write_csv(&entries, std::fs::File::create(&path).unwrap()).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("path,label\n"));
        let m = DatasetManifest::load(&path, 0).unwrap();
        assert_eq!(m.entries[1].path, dir.path().join("b c.png"));
        assert_eq!(m.class_indices(Role::Glyph2).unwrap(), vec![0, 1]);
        assert!(m.check_classes(Role::Glyph2).is_err());
    }

    #[test]
    fn perfect_and_constant_predictors() {
        let names = || vec!["a".to_string(), "b".to_string()];
        let truth = [0, 1, 0, 1, 1, 0];
        let perfect = Evaluation::from_predictions(names(), &truth, &truth).unwrap();
        assert_eq!(perfect.accuracy, 1.0);
        assert_eq!(perfect.confusion, vec![vec![3, 0], vec![0, 3]]);
        let constant = Evaluation::from_predictions(names(), &truth, &[0; 6]).unwrap();
        assert_eq!(constant.accuracy, 0.5);
    }

    proptest! {
        #[test]
        fn split_is_a_stratified_partition(
            labels in prop::collection::vec(0u8..4, 1..200),
            seed in any::<u64>(),
        ) {
            let (t, v) = stratified_split_indices(&labels, 0.7, seed);
            let mut all: Vec<usize> = t.iter().chain(&v).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
            for c in 0u8..4 {
                let n = labels.iter().filter(|&&l| l == c).count() as f64;
                let k = t.iter().filter(|&&i| labels[i] == c).count() as f64;
                prop_assert!((k - 0.7 * n).abs() <= 1.0);
            }
        }

        #[test]
        fn evaluation_is_consistent_and_order_free(
            pairs in prop::collection::vec((0usize..3, 0usize..3), 1..100),
        ) {
            let names: Vec<String> = ["x", "y", "z"].iter().map(|s| s.to_string()).collect();
            let (truth, pred): (Vec<usize>, Vec<usize>) = pairs.iter().copied().unzip();
            let e = Evaluation::from_predictions(names.clone(), &truth, &pred).unwrap();
            let diag: u64 = (0..3).map(|i| e.confusion[i][i]).sum();
            prop_assert_eq!(e.accuracy, diag as f64 / pairs.len() as f64);
            for c in 0..3 {
                let row: u64 = e.confusion[c].iter().sum();
                prop_assert_eq!(row, truth.iter().filter(|&&t| t == c).count() as u64);
            }
            let (rt, rp): (Vec<usize>, Vec<usize>) = pairs.iter().rev().copied().unzip();
            prop_assert_eq!(Evaluation::from_predictions(names, &rt, &rp).unwrap(), e);
        }
    }
}
