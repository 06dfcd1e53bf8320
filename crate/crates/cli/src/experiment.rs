//! Experiment configuration and dataset assembly.

use std::path::{Path, PathBuf};

use eqcnn::data::{
    angle_embed, binary_image_samples, expand_splits, load_idx, make_graph_splits, GraphCase,
    GraphSplits, SplitOptions,
};
use eqcnn::training::{Dataset, Sample, TrainConfig};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{usage, CliError, CliResult};

/// Dataset root used when neither the config nor `--data` names one.
pub const DATA_ENV: &str = "EQCNN_DATA";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    #[serde(rename = "fashion_0v8")]
    Fashion0v8,
    #[serde(rename = "mnist_0v1")]
    Mnist0v1,
    #[serde(rename = "graphs_case1")]
    GraphsCase1,
    #[serde(rename = "graphs_case2")]
    GraphsCase2,
}

impl Experiment {
    pub fn n_qubits(self) -> usize {
        match self {
            Experiment::Fashion0v8 | Experiment::Mnist0v1 => 16,
            Experiment::GraphsCase1 | Experiment::GraphsCase2 => 4,
        }
    }

    fn graph_case(self) -> Option<GraphCase> {
        match self {
            Experiment::GraphsCase1 => Some(GraphCase::Case1),
            Experiment::GraphsCase2 => Some(GraphCase::Case2),
            _ => None,
        }
    }

    /// Directory under the data root and the `(label 0, label 1)` classes.
    fn image_source(self) -> Option<(&'static str, u8, u8)> {
        match self {
            Experiment::Fashion0v8 => Some(("fashion", 0, 8)),
            Experiment::Mnist0v1 => Some(("mnist", 0, 1)),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageOptions {
    /// Images kept per class from the training file; `None` keeps all.
    pub train_per_class: Option<usize>,
    pub test_per_class: Option<usize>,
}

impl Default for ImageOptions {
    fn default() -> Self {
        Self {
            train_per_class: Some(100),
            test_per_class: Some(50),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct GraphOptions {
    pub split_seed: u64,
    #[serde(flatten)]
    pub split: SplitOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub data_root: Option<PathBuf>,
    #[serde(default)]
    pub images: ImageOptions,
    #[serde(default)]
    pub graphs: GraphOptions,
    pub train: TrainConfig,
}

impl ExperimentConfig {
    /// Paper-default hyperparameters for `experiment`.
    pub fn defaults(
        experiment: Experiment,
        architecture: eqcnn::ArchitectureId,
        iterations: usize,
        seed: u64,
    ) -> Self {
        let train = match experiment.graph_case() {
            Some(_) => TrainConfig::graphs(architecture, iterations, seed),
            None => TrainConfig::images(architecture, iterations, seed),
        };
        Self {
            experiment,
            output_dir: PathBuf::from("runs").join(format!(
                "{}_{}",
                experiment_name(experiment),
                architecture
            )),
            data_root: None,
            images: ImageOptions::default(),
            graphs: GraphOptions::default(),
            train,
        }
    }

    /// Parses JSON and applies `key.path=value` overrides; values are read as
    /// JSON, falling back to a plain string.
    pub fn from_json(text: &str, overrides: &[String]) -> CliResult<Self> {
        let mut value: Value =
            serde_json::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))?;
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let cfg: Self = serde_json::from_value(value).map_err(|e| {
            // Re-parse the file itself so the message carries a line and column.
            match serde_json::from_str::<Self>(text) {
                Err(located) => CliError::Usage(format!("config: {located}")),
                Ok(_) => CliError::Usage(format!("config after overrides: {e}")),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        self.train.validate()?;
        let want = self.experiment.n_qubits();
        if self.train.n_qubits != want {
            return usage(format!(
                "{} needs {want}-qubit models, config has n_qubits = {}",
                experiment_name(self.experiment),
                self.train.n_qubits
            ));
        }
        let arch = self.train.architecture.build(want).map_err(|e| {
            CliError::Usage(format!(
                "{} is not usable for {}: {e}",
                self.train.architecture,
                experiment_name(self.experiment)
            ))
        })?;
        if arch.input_qubits != want {
            return usage("architecture input size does not match the experiment");
        }
        if self.experiment.image_source().is_some() && arch.embedding.is_none() {
            return usage(format!(
                "{} has no pixel embedding",
                self.train.architecture
            ));
        }
        Ok(())
    }

    pub fn resolved_data_root(&self) -> PathBuf {
        resolve_data_root(self.data_root.as_deref())
    }

    /// Loads and prepares the train/test states.
    pub fn dataset(&self) -> CliResult<(Dataset, Option<GraphSplits>)> {
        let arch = self.train.architecture.build(self.experiment.n_qubits())?;
        if let Some(case) = self.experiment.graph_case() {
            let splits = make_graph_splits(case, self.graphs.split_seed, &self.graphs.split)?;
            let (train, test) = expand_splits::<f64>(&splits)?;
            let conv = |v: Vec<eqcnn::data::GraphSample<f64>>| {
                v.into_iter()
                    .map(|g| Sample {
                        state: g.state,
                        label: g.label,
                    })
                    .collect()
            };
            return Ok((
                Dataset {
                    train: conv(train),
                    test: conv(test),
                },
                Some(splits),
            ));
        }
        let (dir, neg, pos) = self.experiment.image_source().expect("image experiment");
        let root = self.resolved_data_root().join(dir);
        let embedding = arch.embedding.as_ref().expect("validated");
        let load = |prefix: &str, per_class: Option<usize>| -> CliResult<Vec<Sample>> {
            let images = root.join(format!("{prefix}-images-idx3-ubyte"));
            let labels = root.join(format!("{prefix}-labels-idx1-ubyte"));
            for p in [&images, &labels] {
                if !p.exists() {
                    return usage(format!(
                        "missing dataset file {} (run scripts/fetch_datasets.sh or set {DATA_ENV})",
                        p.display()
                    ));
                }
            }
            let set = load_idx(&images, &labels)?;
            binary_image_samples(&set, neg, pos, 4, per_class)?
                .into_iter()
                .map(|s| {
                    Ok(Sample {
                        state: angle_embed(&s.pixels, embedding)?,
                        label: s.label,
                    })
                })
                .collect()
        };
        Ok((
            Dataset {
                train: load("train", self.images.train_per_class)?,
                test: load("t10k", self.images.test_per_class)?,
            },
            None,
        ))
    }
}

pub fn experiment_name(e: Experiment) -> &'static str {
    match e {
        Experiment::Fashion0v8 => "fashion_0v8",
        Experiment::Mnist0v1 => "mnist_0v1",
        Experiment::GraphsCase1 => "graphs_case1",
        Experiment::GraphsCase2 => "graphs_case2",
    }
}

/// Explicit path, else `$EQCNN_DATA`, else `data/`.
pub fn resolve_data_root(explicit: Option<&Path>) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(DATA_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("data"))
}

fn apply_override(root: &mut Value, spec: &str) -> CliResult<()> {
    let Some((path, raw)) = spec.split_once('=') else {
        return usage(format!(
            "override '{spec}' is not of the form key.path=value"
        ));
    };
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let keys: Vec<&str> = path.split('.').collect();
    for (i, key) in keys.iter().enumerate() {
        let Value::Object(map) = node else {
            return usage(format!(
                "override '{path}': '{}' is not an object",
                keys[..i].join(".")
            ));
        };
        if i + 1 == keys.len() {
            map.insert(key.to_string(), value);
            return Ok(());
        }
        node = map
            .entry(key.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("split yields at least one key")
}

#[cfg(test)]
mod tests {
    use super::*;
    use eqcnn::ArchitectureId;

    #[test]
    fn experiment_names_match_serde() {
        for e in [
            Experiment::Fashion0v8,
            Experiment::Mnist0v1,
            Experiment::GraphsCase1,
            Experiment::GraphsCase2,
        ] {
            assert_eq!(
                serde_json::to_value(e).unwrap(),
                Value::String(experiment_name(e).into())
            );
        }
    }

    #[test]
    fn defaults_round_trip_through_json() {
        let cfg = ExperimentConfig::defaults(
            Experiment::GraphsCase2,
            ArchitectureId::SnEqcnnMixture,
            50,
            1,
        );
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text, &[]).unwrap(), cfg);
    }

    #[test]
    fn overrides_replace_nested_keys() {
        let cfg =
            ExperimentConfig::defaults(Experiment::GraphsCase1, ArchitectureId::SnEqnn, 50, 1);
        let text = serde_json::to_string(&cfg).unwrap();
        let o = [
            "train.runs=3".to_string(),
            "output_dir=elsewhere".to_string(),
            "train.optimizer.lr=0.5".to_string(),
        ];
        let got = ExperimentConfig::from_json(&text, &o).unwrap();
        assert_eq!(got.train.runs, 3);
        assert_eq!(got.output_dir, PathBuf::from("elsewhere"));
        assert_eq!(got.train.optimizer.lr(), 0.5);
        assert!(ExperimentConfig::from_json(&text, &["train.runs".to_string()]).is_err());
        assert!(ExperimentConfig::from_json(&text, &["train.runs.x=1".to_string()]).is_err());
    }

    #[test]
    fn schema_errors_carry_line_numbers() {
        let err = ExperimentConfig::from_json(
            "{\n  \"experiment\": \"graphs_case1\",\n  \"bogus\": 1\n}",
            &[],
        )
        .unwrap_err();
        assert!(err.to_string().contains("line"), "{err}");
        let err = ExperimentConfig::from_json("{\n  \"experiment\": ,\n}", &[]).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn incompatible_architecture_rejected() {
        let mut cfg =
            ExperimentConfig::defaults(Experiment::GraphsCase1, ArchitectureId::SnEqnn, 5, 1);
        cfg.train.architecture = ArchitectureId::ReflectionEqcnn;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::defaults(
            Experiment::Fashion0v8,
            ArchitectureId::ReflectionEqcnn,
            5,
            1,
        );
        cfg.train.architecture = ArchitectureId::SnEqnn;
        assert!(cfg.validate().is_err());
        let cfg =
            ExperimentConfig::defaults(Experiment::Fashion0v8, ArchitectureId::BaselineQcnn, 5, 1);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn graph_dataset_sizes() {
        let cfg = ExperimentConfig::defaults(Experiment::GraphsCase1, ArchitectureId::SnEqnn, 5, 1);
        let (d, splits) = cfg.dataset().unwrap();
        assert_eq!((d.train.len(), d.test.len()), (180, 72));
        assert_eq!(splits.unwrap().train.len(), 45);
    }
}
