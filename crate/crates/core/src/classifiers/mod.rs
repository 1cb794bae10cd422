//! Region (text / no-text / both) and glyph (jar / no-jar) classification
//! behind a single handle type, plus datasets, splits and augmentation.

mod augment;
mod dataset;
mod plugin;
mod training;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{to_grayscale, RasterImage};
use crate::neuralnet::{Checkpoint, Mode, Network, NetworkSpec, Tensor};

pub use augment::{augment, AugmentKind, AugmentOp, AugmentPlan};
pub use dataset::{
    load_samples, stratified_split, stratified_split_indices, DatasetManifest, Evaluation, ManifestEntry,
};
pub use plugin::PluginClassifier;
pub use training::{tensors, train_role, TrainedModel};

/// A fixed, ordered label set.
pub trait ClassLabel: Copy + Eq + fmt::Debug + Send + Sync + 'static {
    const ALL: &'static [Self];
    const ROLE: Role;

    fn name(self) -> &'static str;

    fn index(self) -> usize {
        Self::ALL.iter().position(|&l| l == self).expect("label in ALL")
    }

    fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        Self::ALL.iter().copied().find(|l| l.name().eq_ignore_ascii_case(s))
    }
}

/// Region classification outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegionLabel {
    Text,
    NoText,
    Both,
}

impl ClassLabel for RegionLabel {
    const ALL: &'static [Self] = &[RegionLabel::Text, RegionLabel::NoText, RegionLabel::Both];
    const ROLE: Role = Role::Region3;

    fn name(self) -> &'static str {
        match self {
            RegionLabel::Text => "text",
            RegionLabel::NoText => "no-text",
            RegionLabel::Both => "both",
        }
    }
}

/// Glyph identification outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GlyphLabel {
    Jar,
    NoJar,
}

impl ClassLabel for GlyphLabel {
    const ALL: &'static [Self] = &[GlyphLabel::Jar, GlyphLabel::NoJar];
    const ROLE: Role = Role::Glyph2;

    fn name(self) -> &'static str {
        match self {
            GlyphLabel::Jar => "jar",
            GlyphLabel::NoJar => "no-jar",
        }
    }
}

macro_rules! label_text {
    ($t:ty) => {
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $t {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                <$t as ClassLabel>::parse(s).ok_or_else(|| Error::Dataset(format!("unknown label {s:?}")))
            }
        }
    };
}

label_text!(RegionLabel);
label_text!(GlyphLabel);

/// Which classification task a handle serves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Region3,
    Glyph2,
}

impl Role {
    pub fn name(self) -> &'static str {
        match self {
            Role::Region3 => "region3",
            Role::Glyph2 => "glyph2",
        }
    }

    pub fn classes(self) -> usize {
        self.label_names().len()
    }

    pub fn label_names(self) -> Vec<&'static str> {
        match self {
            Role::Region3 => RegionLabel::ALL.iter().map(|l| l.name()).collect(),
            Role::Glyph2 => GlyphLabel::ALL.iter().map(|l| l.name()).collect(),
        }
    }

    /// Class index of a label string for this role.
    pub fn parse_label(self, s: &str) -> Option<usize> {
        match self {
            Role::Region3 => RegionLabel::parse(s).map(|l| l.index()),
            Role::Glyph2 => GlyphLabel::parse(s).map(|l| l.index()),
        }
    }

    pub fn default_preprocess(self) -> Preprocess {
        match self {
            Role::Region3 => Preprocess::new(64),
            Role::Glyph2 => Preprocess::new(32),
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "region3" | "region" => Ok(Role::Region3),
            "glyph2" | "glyph" => Ok(Role::Glyph2),
            other => Err(Error::Dataset(format!("unknown role {other:?}"))),
        }
    }
}

/// Crop → network input conversion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preprocess {
    pub side: usize,
    pub grayscale: bool,
    pub divisor: f32,
}

impl Preprocess {
    pub fn new(side: usize) -> Self {
        Self {
            side,
            grayscale: true,
            divisor: 255.0,
        }
    }

    pub fn input_shape(&self) -> [usize; 3] {
        [if self.grayscale { 1 } else { 3 }, self.side, self.side]
    }

    /// Image-space part of preprocessing: grayscale and resize. Applying it to
    /// its own output is the identity.
    pub fn prepare(&self, img: &RasterImage) -> RasterImage {
        let img = if self.grayscale {
            to_grayscale(img)
        } else if img.is_gray() {
            let data = img.data().iter().flat_map(|&v| [v, v, v]).collect();
            RasterImage::new(img.width(), img.height(), 3, data).expect("rgb expansion")
        } else {
            img.clone()
        };
        img.resize(self.side, self.side)
    }

    /// Planar `[c, side, side]` input scaled by `1 / divisor`.
    pub fn tensor_data(&self, img: &RasterImage) -> Vec<f32> {
        let img = self.prepare(img);
        let c = img.channels();
        let plane = self.side * self.side;
        let mut out = vec![0.0; c * plane];
        for (i, px) in img.data().chunks_exact(c).enumerate() {
            for (ch, &v) in px.iter().enumerate() {
                out[ch * plane + i] = v as f32 / self.divisor;
            }
        }
        out
    }
}

/// Inference engine behind a handle.
#[derive(Debug)]
pub enum Backend {
    Net(Network<f32>),
    Plugin(PluginClassifier),
}

/// A trained classifier for one role.
#[derive(Debug)]
pub struct ClassifierHandle {
    role: Role,
    preprocess: Preprocess,
    backend: Backend,
}

/// Label with its confidence, plus a note when the input was degenerate.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction<L> {
    pub label: L,
    pub confidence: f64,
    pub warning: Option<String>,
}

/// Crops narrower or shorter than this are not sent to the region classifier.
pub const MIN_REGION_SIDE: usize = 4;

impl ClassifierHandle {
    pub fn from_network(role: Role, preprocess: Preprocess, net: Network<f32>) -> Result<Self> {
        if net.output_len() != role.classes() {
            return Err(Error::InvalidNetwork(format!(
                "{role} needs {} outputs, network has {}",
                role.classes(),
                net.output_len()
            )));
        }
        if net.input_shape() != preprocess.input_shape() {
            return Err(Error::InvalidNetwork(format!(
                "network input {:?} does not match preprocessing {:?}",
                net.input_shape(),
                preprocess.input_shape()
            )));
        }
        Ok(Self {
            role,
            preprocess,
            backend: Backend::Net(net),
        })
    }

    pub fn from_plugin(role: Role, plugin: PluginClassifier) -> Self {
        Self {
            role,
            preprocess: role.default_preprocess(),
            backend: Backend::Plugin(plugin),
        }
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn preprocess(&self) -> &Preprocess {
        &self.preprocess
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    pub fn network(&self) -> Option<&Network<f32>> {
        match &self.backend {
            Backend::Net(net) => Some(net),
            Backend::Plugin(_) => None,
        }
    }

    /// Class probabilities for each crop. Plugins report only a label and its
    /// confidence; the remaining mass is spread evenly over the other classes.
    pub fn probabilities(&self, crops: &[RasterImage]) -> Result<Vec<Vec<f64>>> {
        if crops.is_empty() {
            return Ok(Vec::new());
        }
        match &self.backend {
            Backend::Net(net) => {
                let [c, h, w] = self.preprocess.input_shape();
                let mut data = Vec::with_capacity(crops.len() * c * h * w);
                for crop in crops {
                    data.extend(self.preprocess.tensor_data(crop));
                }
                let x = Tensor::from_vec(&[crops.len(), c, h, w], data);
                let probs = net.forward(&x, Mode::Eval)?;
                Ok(probs
                    .data()
                    .chunks_exact(self.role.classes())
                    .map(|row| row.iter().map(|&p| p as f64).collect())
                    .collect())
            }
            Backend::Plugin(plugin) => {
                let k = self.role.classes();
                crops
                    .iter()
                    .map(|crop| {
                        let (label, conf) = plugin.classify(crop)?;
                        let idx = self
                            .role
                            .parse_label(&label)
                            .ok_or_else(|| Error::Plugin(format!("label {label:?} is not a {} label", self.role)))?;
                        let conf = conf.clamp(0.0, 1.0);
                        let rest = (1.0 - conf) / (k - 1) as f64;
                        Ok((0..k).map(|i| if i == idx { conf } else { rest }).collect())
                    })
                    .collect()
            }
        }
    }

    /// Argmax class and probability per crop.
    pub fn predict(&self, crops: &[RasterImage]) -> Result<Vec<(usize, f64)>> {
        Ok(self
            .probabilities(crops)?
            .into_iter()
            .map(|row| {
                let mut best = 0;
                for i in 1..row.len() {
                    if row[i] > row[best] {
                        best = i;
                    }
                }
                (best, row[best])
            })
            .collect())
    }

    fn expect_role(&self, role: Role) -> Result<()> {
        if self.role != role {
            return Err(Error::RoleMismatch {
                expected: role.name(),
                actual: self.role.name(),
            });
        }
        Ok(())
    }

    pub fn classify<L: ClassLabel>(&self, crops: &[RasterImage]) -> Result<Vec<Prediction<L>>> {
        self.expect_role(L::ROLE)?;
        Ok(self
            .predict(crops)?
            .into_iter()
            .map(|(i, confidence)| Prediction {
                label: L::from_index(i).expect("class index within role"),
                confidence,
                warning: None,
            })
            .collect())
    }

    /// Loads a handle saved with [`ModelFile::save`].
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        ModelFile::load(path)?.into_handle()
    }
}

/// Region classification of a batch of crops. Degenerate crops (a side below
/// [`MIN_REGION_SIDE`]) are labelled `NoText` with confidence 0 and a warning.
pub fn classify_regions(h: &ClassifierHandle, crops: &[RasterImage]) -> Result<Vec<Prediction<RegionLabel>>> {
    h.expect_role(Role::Region3)?;
    let usable: Vec<usize> = (0..crops.len())
        .filter(|&i| crops[i].width() >= MIN_REGION_SIDE && crops[i].height() >= MIN_REGION_SIDE)
        .collect();
    let batch: Vec<RasterImage> = usable.iter().map(|&i| crops[i].clone()).collect();
    let mut classified = h.classify::<RegionLabel>(&batch)?.into_iter();
    let mut next_usable = usable.iter().peekable();
    let mut out = Vec::with_capacity(crops.len());
    for (i, crop) in crops.iter().enumerate() {
        if next_usable.peek() == Some(&&i) {
            next_usable.next();
            out.push(classified.next().expect("one prediction per usable crop"));
        } else {
            out.push(Prediction {
                label: RegionLabel::NoText,
                confidence: 0.0,
                warning: Some(format!(
                    "{}x{} crop is below {MIN_REGION_SIDE} px; treated as no-text",
                    crop.width(),
                    crop.height()
                )),
            });
        }
    }
    Ok(out)
}

pub fn classify_region(h: &ClassifierHandle, crop: &RasterImage) -> Result<Prediction<RegionLabel>> {
    Ok(classify_regions(h, std::slice::from_ref(crop))?.remove(0))
}

pub fn classify_glyphs(h: &ClassifierHandle, crops: &[RasterImage]) -> Result<Vec<Prediction<GlyphLabel>>> {
    h.classify::<GlyphLabel>(crops)
}

pub fn classify_glyph(h: &ClassifierHandle, crop: &RasterImage) -> Result<Prediction<GlyphLabel>> {
    Ok(classify_glyphs(h, std::slice::from_ref(crop))?.remove(0))
}

const MODEL_FORMAT: &str = "glyphline-model";
const MODEL_VERSION: u32 = 1;

/// On-disk classifier: role, preprocessing and network checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub role: Role,
    pub labels: Vec<String>,
    pub preprocess: Preprocess,
    pub checkpoint: Checkpoint,
}

impl ModelFile {
    pub fn new(role: Role, preprocess: Preprocess, net: &Network<f32>) -> Self {
        Self {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            role,
            labels: role.label_names().into_iter().map(String::from).collect(),
            preprocess,
            checkpoint: Checkpoint::from_network(net),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: ModelFile = serde_json::from_str(text)?;
        if model.format != MODEL_FORMAT {
            return Err(Error::Checkpoint(format!("unexpected model format {:?}", model.format)));
        }
        if model.version != MODEL_VERSION {
            return Err(Error::Checkpoint(format!("unsupported model version {}", model.version)));
        }
        if model.labels != model.role.label_names() {
            return Err(Error::Checkpoint(format!(
                "labels {:?} do not match role {}",
                model.labels, model.role
            )));
        }
        Ok(model)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn into_handle(self) -> Result<ClassifierHandle> {
        let net = self.checkpoint.to_network()?;
        ClassifierHandle::from_network(self.role, self.preprocess, net)
    }
}

/// Network shape used for a role's classifier.
pub fn default_network(role: Role, preprocess: &Preprocess) -> NetworkSpec {
    let mut spec = NetworkSpec::symbol_net(preprocess.side, role.classes());
    spec.input = preprocess.input_shape();
    spec
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_handle(role: Role) -> ClassifierHandle {
        let pre = role.default_preprocess();
        let net = Network::zeroed(default_network(role, &pre)).unwrap();
        ClassifierHandle::from_network(role, pre, net).unwrap()
    }

    #[test]
    fn labels_round_trip_through_text() {
        for &l in RegionLabel::ALL {
            assert_eq!(l.to_string().parse::<RegionLabel>().unwrap(), l);
            assert_eq!(RegionLabel::from_index(l.index()), Some(l));
        }
        assert_eq!("No-Jar".parse::<GlyphLabel>().unwrap(), GlyphLabel::NoJar);
        assert!("vase".parse::<GlyphLabel>().is_err());
        assert_eq!(serde_json::to_string(&RegionLabel::NoText).unwrap(), "\"no-text\"");
    }

    #[test]
    fn glyph_preprocessing_is_32_gray_unit_range() {
        let pre = Role::Glyph2.default_preprocess();
        assert_eq!(pre.input_shape(), [1, 32, 32]);
        let img = RasterImage::filled(50, 20, 3, 255);
        let t = pre.tensor_data(&img);
        assert_eq!(t.len(), 1024);
        assert!(t.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn preprocessing_is_idempotent() {
        let pre = Preprocess::new(32);
        let img = RasterImage::from_fn_gray(47, 21, |x, y| ((x * 7 + y * 13) % 256) as u8);
        let once = pre.prepare(&img);
        assert_eq!(pre.prepare(&once), once);
        assert_eq!(pre.tensor_data(&once), pre.tensor_data(&img));
    }

    #[test]
    fn probabilities_are_normalised_and_confidence_wins() {
        let pre = Role::Glyph2.default_preprocess();
        let net = Network::new(default_network(Role::Glyph2, &pre), 3).unwrap();
        let h = ClassifierHandle::from_network(Role::Glyph2, pre, net).unwrap();
        let crops: Vec<RasterImage> = (0..5)
            .map(|s| RasterImage::from_fn_gray(30, 40, |x, y| ((x * s + y) % 256) as u8))
            .collect();
        for row in h.probabilities(&crops).unwrap() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        }
        for p in classify_glyphs(&h, &crops).unwrap() {
            assert!(p.confidence >= 0.5);
        }
    }

    #[test]
    fn blank_glyph_is_classified_without_special_casing() {
        let h = zero_handle(Role::Glyph2);
        let p = classify_glyph(&h, &RasterImage::filled(32, 32, 1, 0)).unwrap();
        assert_eq!(p.label, GlyphLabel::Jar);
        assert!((p.confidence - 0.5).abs() < 1e-6);
        assert!(p.warning.is_none());
    }

    #[test]
    fn tiny_region_crop_is_no_text_with_warning() {
        let h = zero_handle(Role::Region3);
        let crops = [
            RasterImage::filled(3, 40, 1, 9),
            RasterImage::filled(20, 20, 1, 9),
        ];
        let out = classify_regions(&h, &crops).unwrap();
        assert_eq!(out[0].label, RegionLabel::NoText);
        assert_eq!(out[0].confidence, 0.0);
        assert!(out[0].warning.is_some());
        assert!(out[1].warning.is_none());
        assert!((out[1].confidence - 1.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn wrong_role_is_rejected() {
        let h = zero_handle(Role::Glyph2);
        let err = classify_region(&h, &RasterImage::filled(8, 8, 1, 0)).unwrap_err();
        assert!(matches!(err, Error::RoleMismatch { .. }));
    }

    #[test]
    fn network_arity_must_match_role() {
        let pre = Preprocess::new(32);
        let net = Network::zeroed(NetworkSpec::symbol_net(32, 3)).unwrap();
        assert!(ClassifierHandle::from_network(Role::Glyph2, pre, net).is_err());
    }

    #[test]
    fn model_file_round_trip() {
        let pre = Role::Glyph2.default_preprocess();
        let net = Network::new(default_network(Role::Glyph2, &pre), 11).unwrap();
        let model = ModelFile::new(Role::Glyph2, pre, &net);
        let back = ModelFile::from_json(&model.to_json().unwrap()).unwrap();
        assert_eq!(back, model);
        let h = back.into_handle().unwrap();
        assert_eq!(h.network().unwrap().params(), net.params());

        let mut wrong = model.clone();
        wrong.labels.reverse();
        assert!(ModelFile::from_json(&wrong.to_json().unwrap()).is_err());
    }
}
