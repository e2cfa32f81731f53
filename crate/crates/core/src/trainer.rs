//! WOA-trained MLP classifiers.
//!
//! Training minimizes the mean squared error between softmax outputs and
//! one-hot targets over the whole training table, searching the flat
//! parameter vector inside a symmetric box `±weight_bound`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ErrorKind;
use crate::feature_io::{apply_normalizer, fit_normalizer, FeatureError, FeatureTable, Normalizer};
use crate::nn::{self, MlpTopology, NnError, ParamVector};
use crate::woa::{self, Bounds, WoaConfig, WoaError};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("data has {found} columns, topology expects {expected}")]
    InputWidth { expected: usize, found: usize },
    #[error("data has {found} classes, topology outputs {expected}")]
    ClassCount { expected: usize, found: usize },
    #[error("class {0:?} has no training samples")]
    MissingClass(String),
    #[error("unknown class label {0:?}")]
    UnknownLabel(String),
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed model file: {0}")]
    Malformed(String),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Woa(#[from] WoaError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
}

impl TrainError {
    pub(crate) fn kind(&self) -> ErrorKind {
        match self {
            TrainError::Io { .. } => ErrorKind::Io,
            TrainError::Nn(e) => e.kind(),
            TrainError::Woa(e) => e.kind(),
            TrainError::Feature(e) => e.kind(),
            _ => ErrorKind::Data,
        }
    }
}

/// Optimizer settings for training; the search dimension and box come from
/// the topology and `weight_bound`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WoaSettings {
    pub population_size: usize,
    pub max_iterations: usize,
    pub spiral_shape: f64,
    pub seed: u64,
    pub parallel: bool,
}

impl Default for WoaSettings {
    fn default() -> Self {
        Self {
            population_size: 30,
            max_iterations: 200,
            spiral_shape: 1.0,
            seed: 0,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub topology: MlpTopology,
    pub woa: WoaSettings,
    pub weight_bound: f64,
    pub normalize: bool,
}

impl TrainConfig {
    pub fn new(topology: MlpTopology) -> Self {
        Self {
            topology,
            woa: WoaSettings::default(),
            weight_bound: 10.0,
            normalize: true,
        }
    }

    pub fn woa_config(&self) -> WoaConfig {
        WoaConfig {
            population_size: self.woa.population_size,
            max_iterations: self.woa.max_iterations,
            bounds: Bounds::uniform(
                self.topology.param_count(),
                -self.weight_bound,
                self.weight_bound,
            ),
            spiral_shape: self.woa.spiral_shape,
            seed: self.woa.seed,
            parallel: self.woa.parallel,
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        self.topology.validate()?;
        if !(self.weight_bound.is_finite() && self.weight_bound > 0.0) {
            return Err(TrainError::InvalidConfig(format!(
                "weight_bound must be positive and finite, got {}",
                self.weight_bound
            )));
        }
        self.woa_config().validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub topology: MlpTopology,
    pub params: ParamVector,
    pub normalizer: Option<Normalizer>,
    pub class_names: Vec<String>,
    pub history: Vec<f64>,
}

fn check_data(topology: &MlpTopology, data: &FeatureTable) -> Result<(), TrainError> {
    if data.dim() != topology.input_size() {
        return Err(TrainError::InputWidth {
            expected: topology.input_size(),
            found: data.dim(),
        });
    }
    if data.class_names.len() != topology.output_size() {
        return Err(TrainError::ClassCount {
            expected: topology.output_size(),
            found: data.class_names.len(),
        });
    }
    Ok(())
}

/// Mean over samples and output units of `(softmax_k - onehot_k)^2`.
pub fn fitness(
    params: &[f64],
    topology: &MlpTopology,
    data: &FeatureTable,
) -> Result<f64, TrainError> {
    check_data(topology, data)?;
    let c = topology.output_size();
    let mut total = 0.0;
    for (x, &label) in data.features.iter().zip(&data.labels) {
        let mut out = nn::mlp_logits(topology, params, x)?;
        nn::softmax(&mut out);
        total += out
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let target = if k == label { 1.0 } else { 0.0 };
                (p - target) * (p - target)
            })
            .sum::<f64>();
    }
    Ok(total / (data.len() * c) as f64)
}

pub fn train(config: &TrainConfig, data: &FeatureTable) -> Result<TrainedModel, TrainError> {
    config.validate()?;
    data.validate()?;
    check_data(&config.topology, data)?;
    if data.class_names.len() < 2 {
        return Err(TrainError::ClassCount {
            expected: config.topology.output_size().max(2),
            found: data.class_names.len(),
        });
    }
    if let Some(missing) = data.class_counts().iter().position(|&n| n == 0) {
        return Err(TrainError::MissingClass(data.class_names[missing].clone()));
    }

    let normalizer = if config.normalize {
        Some(fit_normalizer(data)?)
    } else {
        None
    };
    let scaled;
    let train_data = match &normalizer {
        Some(n) => {
            scaled = apply_normalizer(data, n)?;
            &scaled
        }
        None => data,
    };

    let topology = &config.topology;
    // Any parameter vector inside the box gives finite outputs for sigmoid
    // and tanh; overflow is still possible with relu and is reported as a
    // non-finite objective.
    let objective = |p: &[f64]| fitness(p, topology, train_data).unwrap_or(f64::NAN);
    let state = woa::optimize(objective, &config.woa_config())?;

    Ok(TrainedModel {
        topology: topology.clone(),
        params: ParamVector(state.best_position),
        normalizer,
        class_names: data.class_names.clone(),
        history: state.history,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub class_index: usize,
    pub label: String,
    pub probabilities: Vec<f64>,
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

impl TrainedModel {
    pub fn input_size(&self) -> usize {
        self.topology.input_size()
    }

    /// Checks the invariants a deserialized model must satisfy.
    pub fn validate(&self) -> Result<(), TrainError> {
        self.topology.validate()?;
        let expected = self.topology.param_count();
        if self.params.len() != expected {
            return Err(TrainError::Malformed(format!(
                "{} parameters for a topology that needs {expected}",
                self.params.len()
            )));
        }
        if self.params.0.iter().any(|p| !p.is_finite()) {
            return Err(TrainError::Malformed("non-finite parameter".into()));
        }
        if self.class_names.len() != self.topology.output_size() {
            return Err(TrainError::Malformed(format!(
                "{} class names for {} outputs",
                self.class_names.len(),
                self.topology.output_size()
            )));
        }
        if let Some(n) = &self.normalizer {
            if n.dim() != self.input_size() || n.stddevs.len() != n.dim() {
                return Err(TrainError::Malformed(
                    "normalizer width differs from input".into(),
                ));
            }
            if n.stddevs.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
                return Err(TrainError::Malformed(
                    "normalizer stddevs must be positive".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction, TrainError> {
        let normalized;
        let input = match &self.normalizer {
            Some(n) => {
                normalized = n.apply_row(x).map_err(|_| TrainError::InputWidth {
                    expected: self.input_size(),
                    found: x.len(),
                })?;
                &normalized
            }
            None => x,
        };
        let probabilities = nn::mlp_forward(&self.topology, &self.params, input)?;
        let class_index = argmax(&probabilities);
        Ok(Prediction {
            class_index,
            label: self.class_names[class_index].clone(),
            probabilities,
        })
    }

    /// Predicted labels for every row of `data`.
    pub fn predict_table(&self, data: &FeatureTable) -> Result<Vec<String>, TrainError> {
        data.features
            .iter()
            .map(|x| self.predict(x).map(|p| p.label))
            .collect()
    }

    /// Fraction of rows of `data` predicted correctly. Labels of `data` are
    /// matched by name.
    pub fn accuracy(&self, data: &FeatureTable) -> Result<f64, TrainError> {
        let preds = self.predict_table(data)?;
        let correct = preds
            .iter()
            .enumerate()
            .filter(|(i, p)| *p == data.label_name(*i))
            .count();
        Ok(correct as f64 / data.len() as f64)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, TrainError> {
        let model: TrainedModel =
            serde_json::from_str(text).map_err(|e| TrainError::Malformed(e.to_string()))?;
        model.validate()?;
        Ok(model)
    }
}

pub fn predict(model: &TrainedModel, x: &[f64]) -> Result<Prediction, TrainError> {
    model.predict(x)
}

pub fn save_model(model: &TrainedModel, path: impl AsRef<Path>) -> Result<(), TrainError> {
    let path = path.as_ref();
    fs::write(path, model.to_json()).map_err(|source| TrainError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TrainedModel, TrainError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| TrainError::Io {
        path: path.display().to_string(),
        source,
    })?;
    TrainedModel::from_json(&text)
}
