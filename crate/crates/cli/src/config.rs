//! The JSON run configuration shared by every subcommand.

use std::path::{Path, PathBuf};

use grpsparse::data::{
    balanced_downsample, gen_parity, haar_dataset, holdout, load_csv_with_manifest, load_mnist_idx, load_splice,
    load_splice_fasta_pair, rows_as_groups, CsvOptions, LabelSource, SpliceFormat,
};
use grpsparse::loss::inverse_frequency_weights;
use grpsparse::{Activation, Dataset, LossSpec, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataConfig,
    /// Hidden layer widths; input and output widths come from the data.
    pub hidden: Vec<usize>,
    #[serde(default = "relu")]
    pub activation: Activation,
    #[serde(default)]
    pub loss: LossConfig,
    pub train: TrainConfig,
    /// For SGD / SGD_TAU: run `k` times the epochs and decay every `k`
    /// epochs, `k` being the number of groups.
    #[serde(default)]
    pub baseline_epoch_scaling: bool,
    #[serde(default)]
    pub output: OutputConfig,
}

fn relu() -> Activation {
    Activation::Relu
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub train: DatasetSpec,
    /// Separate evaluation set. Without one, `holdout` rows of the training
    /// set are held out (or the training set itself is evaluated).
    #[serde(default)]
    pub test: Option<DatasetSpec>,
    #[serde(default)]
    pub holdout: Option<usize>,
    /// Per-class sample counts drawn from the training set.
    #[serde(default)]
    pub downsample: Option<Vec<usize>>,
    /// Seeds the holdout split and the downsampling; independent of the
    /// training seed so that `--seed` never changes the split.
    #[serde(default)]
    pub split_seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSpec {
    Parity {
        n: usize,
        seed: u64,
    },
    MnistIdx {
        images: PathBuf,
        labels: PathBuf,
        #[serde(default)]
        features: MnistFeatures,
        /// Keep only the first `limit` samples.
        #[serde(default)]
        limit: Option<usize>,
    },
    Csv {
        data: PathBuf,
        manifest: PathBuf,
        #[serde(default)]
        impute_mean: bool,
        #[serde(default)]
        label_column: Option<String>,
    },
    /// `<label> <sequence>` lines, or bare sequences with a parallel label
    /// file.
    Splice {
        path: PathBuf,
        #[serde(default)]
        labels: Option<PathBuf>,
        #[serde(default = "donor_consensus")]
        drop_positions: Vec<usize>,
    },
    SplicePair {
        positive: PathBuf,
        negative: PathBuf,
        #[serde(default = "donor_consensus")]
        drop_positions: Vec<usize>,
    },
}

fn donor_consensus() -> Vec<usize> {
    vec![4, 5]
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MnistFeatures {
    /// Raw pixels, one group per image row.
    #[default]
    PixelRows,
    /// Haar coefficients grouped by level and orientation.
    Wavelet,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LossConfig {
    #[default]
    CrossEntropy,
    /// Class weights default to inverse training-set frequencies.
    WeightedCrossEntropy {
        #[serde(default)]
        weights: Option<Vec<f64>>,
    },
    SquaredError,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Used when `--out` is not given.
    #[serde(default)]
    pub dir: Option<PathBuf>,
    /// Also write the confusion matrix as CSV.
    #[serde(default)]
    pub confusion_csv: bool,
}

/// Training and evaluation sets built from a [`DataConfig`].
#[derive(Clone, Debug)]
pub struct Splits {
    pub train: Dataset,
    pub test: Dataset,
}

impl RunConfig {
    /// Parses and validates; relative paths are resolved against the
    /// config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::parse(&text)?;
        if let Some(base) = path.parent() {
            cfg.resolve_paths(base);
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| CliError::Config {
            field: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let field = |f: &str, e: grpsparse::Error| CliError::Config {
            field: f.to_string(),
            message: e.to_string(),
        };
        self.train.validate().map_err(|e| field("train", e))?;
        if let Some(i) = self.hidden.iter().position(|&h| h == 0) {
            return Err(CliError::config(format!("hidden[{i}]"), "layer width must be >= 1"));
        }
        if let LossConfig::WeightedCrossEntropy { weights: Some(w) } = &self.loss {
            LossSpec::weighted_cross_entropy(w.clone()).map_err(|e| field("loss.weights", e))?;
        }
        if self.data.test.is_some() && self.data.holdout.is_some() {
            return Err(CliError::config(
                "data.holdout",
                "give either a test set or a holdout size, not both",
            ));
        }
        for (name, spec) in [
            ("data.train", Some(&self.data.train)),
            ("data.test", self.data.test.as_ref()),
        ] {
            if let Some(DatasetSpec::Parity { n: 0, .. }) = spec {
                return Err(CliError::config(format!("{name}.n"), "must be >= 1"));
            }
        }
        Ok(())
    }

    fn resolve_paths(&mut self, base: &Path) {
        self.data.train.resolve_paths(base);
        if let Some(t) = &mut self.data.test {
            t.resolve_paths(base);
        }
        if let Some(d) = &mut self.output.dir {
            if d.is_relative() {
                *d = base.join(&*d);
            }
        }
    }

    pub fn load_splits(&self) -> Result<Splits> {
        let mut train = self.data.train.load()?;
        if let Some(per_class) = &self.data.downsample {
            train = balanced_downsample(&train, per_class, self.data.split_seed)?.0;
        }
        let test = match (&self.data.test, self.data.holdout) {
            (Some(spec), _) => spec.load()?,
            (None, Some(k)) => {
                let (rest, held) = holdout(&train, k, self.data.split_seed)?;
                train = rest;
                held
            }
            (None, None) => train.clone(),
        };
        if test.p() != train.p() {
            return Err(grpsparse::Error::DimensionMismatch(format!(
                "training data has {} features, test data {}",
                train.p(),
                test.p()
            ))
            .into());
        }
        Ok(Splits { train, test })
    }

    /// Full layer widths for a dataset.
    pub fn dims(&self, data: &Dataset) -> Vec<usize> {
        let mut dims = vec![data.p()];
        dims.extend(&self.hidden);
        dims.push(data.num_classes());
        dims
    }

    pub fn loss_spec(&self, train: &Dataset) -> Result<LossSpec> {
        Ok(match &self.loss {
            LossConfig::CrossEntropy => LossSpec::cross_entropy(),
            LossConfig::SquaredError => LossSpec::squared_error(),
            LossConfig::WeightedCrossEntropy { weights: Some(w) } => LossSpec::weighted_cross_entropy(w.clone())?,
            LossConfig::WeightedCrossEntropy { weights: None } => {
                LossSpec::weighted_cross_entropy(inverse_frequency_weights(train.y(), train.num_classes())?)?
            }
        })
    }

    /// The training schedule actually run on `groups` groups.
    pub fn effective_train(&self, groups: usize) -> TrainConfig {
        if self.baseline_epoch_scaling && !self.train.algorithm.is_blockwise() {
            self.train.clone().with_baseline_scaling(groups)
        } else {
            self.train.clone()
        }
    }
}

impl DatasetSpec {
    pub fn load(&self) -> Result<Dataset> {
        Ok(match self {
            DatasetSpec::Parity { n, seed } => gen_parity(*n, *seed)?,
            DatasetSpec::MnistIdx {
                images,
                labels,
                features,
                limit,
            } => {
                let mut ds = load_mnist_idx(images, labels)?;
                if let Some(k) = limit {
                    ds = ds.head(*k);
                }
                match features {
                    MnistFeatures::PixelRows => {
                        let side = (ds.p() as f64).sqrt() as usize;
                        if side * side != ds.p() {
                            return Err(grpsparse::Error::DimensionMismatch(format!(
                                "{} pixels do not form a square image",
                                ds.p()
                            ))
                            .into());
                        }
                        ds.with_partition(rows_as_groups(side, side))?
                    }
                    MnistFeatures::Wavelet => haar_dataset(&ds)?,
                }
            }
            DatasetSpec::Csv {
                data,
                manifest,
                impute_mean,
                label_column,
            } => {
                let opts = CsvOptions {
                    impute_mean: *impute_mean,
                    label_column: label_column.clone(),
                };
                load_csv_with_manifest(data, manifest, &opts)?
            }
            DatasetSpec::Splice {
                path,
                labels,
                drop_positions,
            } => {
                let source = labels.clone().map_or(LabelSource::Inline, LabelSource::File);
                let fmt = SpliceFormat {
                    labels: source,
                    drop_positions: drop_positions.clone(),
                };
                load_splice(path, &fmt)?
            }
            DatasetSpec::SplicePair {
                positive,
                negative,
                drop_positions,
            } => load_splice_fasta_pair(positive, negative, drop_positions)?,
        })
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match self {
            DatasetSpec::Parity { .. } => {}
            DatasetSpec::MnistIdx { images, labels, .. } => {
                fix(images);
                fix(labels);
            }
            DatasetSpec::Csv { data, manifest, .. } => {
                fix(data);
                fix(manifest);
            }
            DatasetSpec::Splice { path, labels, .. } => {
                fix(path);
                if let Some(l) = labels {
                    fix(l);
                }
            }
            DatasetSpec::SplicePair { positive, negative, .. } => {
                fix(positive);
                fix(negative);
            }
        }
    }
}
