//! Mini-batch training loop and its report.

use std::fmt::Write as _;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::loss::{predict, Loss};
use super::optim::OptimizerConfig;
use crate::architectures::ArchitectureId;
use crate::circuit::{GradientMethod, Model};
use crate::error::{domain, Result};
use crate::simcore::StateVector;
use crate::ParamVector;

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub architecture: ArchitectureId,
    pub n_qubits: usize,
    pub optimizer: OptimizerConfig,
    pub loss: Loss,
    pub batch_size: usize,
    pub iterations: usize,
    pub runs: usize,
    pub seed: u64,
    #[serde(default)]
    pub gradient: GradientMethod,
    /// Test accuracy is computed every `eval_every` iterations and always
    /// after the last one.
    #[serde(default = "one")]
    pub eval_every: usize,
}

impl TrainConfig {
    /// Nesterov 0.005, BCE, batch 32, 10 runs.
    pub fn images(architecture: ArchitectureId, iterations: usize, seed: u64) -> Self {
        Self {
            architecture,
            n_qubits: 16,
            optimizer: OptimizerConfig::nesterov(),
            loss: Loss::Bce,
            batch_size: 32,
            iterations,
            runs: 10,
            seed,
            gradient: GradientMethod::Adjoint,
            eval_every: 1,
        }
    }

    /// Adam 0.01, MSE, batch 10, 10 runs.
    pub fn graphs(architecture: ArchitectureId, iterations: usize, seed: u64) -> Self {
        Self {
            architecture,
            n_qubits: 4,
            optimizer: OptimizerConfig::adam(),
            loss: Loss::Mse,
            batch_size: 10,
            iterations,
            runs: 10,
            seed,
            gradient: GradientMethod::Adjoint,
            eval_every: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.optimizer.validate()?;
        if self.batch_size == 0 || self.runs == 0 || self.eval_every == 0 {
            return domain("batch_size, runs and eval_every must be at least 1");
        }
        Ok(())
    }

    /// SHA-256 of the config's JSON serialization.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(
            serde_json::to_vec(self).expect("config serializes"),
        ))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub state: StateVector<f64>,
    /// 0 or 1.
    pub label: u8,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    pub train: Vec<Sample>,
    pub test: Vec<Sample>,
}

impl Dataset {
    /// SHA-256 over labels and amplitude bit patterns.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for set in [&self.train, &self.test] {
            h.update((set.len() as u64).to_le_bytes());
            for s in set {
                h.update([s.label]);
                for a in s.state.amplitudes() {
                    h.update(a.re.to_bits().to_le_bytes());
                    h.update(a.im.to_bits().to_le_bytes());
                }
            }
        }
        hex::encode(h.finalize())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Curves {
    /// Mean loss over the iteration's batch, at the parameters before the step.
    pub train_loss: Vec<f64>,
    pub train_acc: Vec<f64>,
    /// After the step; `None` where no evaluation was scheduled.
    pub test_acc: Vec<Option<f64>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FinalMetrics {
    /// Over the whole training set at the final parameters.
    pub train_loss: f64,
    pub train_acc: f64,
    pub test_acc: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub curves: Curves,
    pub final_metrics: FinalMetrics,
    pub initial_params: Vec<f64>,
    pub final_params: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub config: TrainConfig,
    pub config_hash: String,
    pub dataset_hash: String,
    pub crate_version: String,
    pub n_train: usize,
    pub n_test: usize,
    pub seeds: Vec<u64>,
    pub runs: Vec<RunReport>,
    pub mean: Curves,
    /// Sample standard deviation across runs (zero for a single run).
    pub std: Curves,
    pub final_mean: FinalMetrics,
    pub final_std: FinalMetrics,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn aggregate(runs: &[RunReport], iterations: usize) -> (Curves, Curves) {
    let mut mean = Curves::default();
    let mut std = Curves::default();
    for i in 0..iterations {
        let col =
            |f: &dyn Fn(&Curves) -> f64| runs.iter().map(|r| f(&r.curves)).collect::<Vec<_>>();
        let (m, s) = mean_std(&col(&|c| c.train_loss[i]));
        mean.train_loss.push(m);
        std.train_loss.push(s);
        let (m, s) = mean_std(&col(&|c| c.train_acc[i]));
        mean.train_acc.push(m);
        std.train_acc.push(s);
        let test: Vec<f64> = runs.iter().filter_map(|r| r.curves.test_acc[i]).collect();
        if test.is_empty() {
            mean.test_acc.push(None);
            std.test_acc.push(None);
        } else {
            let (m, s) = mean_std(&test);
            mean.test_acc.push(Some(m));
            std.test_acc.push(Some(s));
        }
    }
    (mean, std)
}

impl TrainReport {
    /// Mean curves as `iteration,train_loss,train_acc,test_acc`, 1-based
    /// iterations, empty cells for unevaluated test accuracy.
    pub fn to_csv(&self) -> String {
        curves_csv(&self.mean)
    }

    pub fn run_csv(&self, run: usize) -> Option<String> {
        self.runs.get(run).map(|r| curves_csv(&r.curves))
    }
}

fn curves_csv(c: &Curves) -> String {
    let mut out = String::from("iteration,train_loss,train_acc,test_acc\n");
    for i in 0..c.train_loss.len() {
        let test = c.test_acc[i].map(|x| x.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{}",
            i + 1,
            c.train_loss[i],
            c.train_acc[i],
            test
        );
    }
    out
}

fn check_inputs(model: &Model<f64>, data: &Dataset) -> Result<()> {
    if data.train.is_empty() || data.test.is_empty() {
        return domain("training and test sets must be nonempty");
    }
    for s in data.train.iter().chain(&data.test) {
        if s.state.n_qubits() != model.input_qubits() {
            return domain(format!(
                "{}-qubit sample for a {}-qubit model",
                s.state.n_qubits(),
                model.input_qubits()
            ));
        }
        if s.label > 1 {
            return domain(format!("label {} is not binary", s.label));
        }
    }
    Ok(())
}

/// Loss and accuracy of `params` on `samples`.
pub fn evaluate(
    model: &Model<f64>,
    params: &[f64],
    samples: &[Sample],
    loss: Loss,
) -> Result<(f64, f64)> {
    let outs: Vec<f64> = samples
        .par_iter()
        .map(|s| model.expectation(params, &s.state))
        .collect::<Result<_>>()?;
    let mut total = 0.0;
    let mut correct = 0usize;
    for (m, s) in outs.iter().zip(samples) {
        total += loss.value_and_grad(*m, s.label).0;
        correct += (predict(*m) == s.label) as usize;
    }
    let n = samples.len() as f64;
    Ok((total / n, correct as f64 / n))
}

fn train_run(
    config: &TrainConfig,
    model: &Model<f64>,
    groups: Vec<crate::ParamGroup>,
    data: &Dataset,
    seed: u64,
) -> Result<RunReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ParamVector::<f64>::uniform(groups, &mut rng)?.values;
    let initial_params = params.clone();
    let mut state = config.optimizer.state(params.len());
    let mut curves = Curves::default();
    let n_train = data.train.len();
    let batch_size = config.batch_size.min(n_train);
    for it in 0..config.iterations {
        let mut batch = index::sample(&mut rng, n_train, batch_size).into_vec();
        batch.sort_unstable();
        let results: Vec<(f64, Vec<f64>)> = batch
            .par_iter()
            .map(|&i| model.gradient(&params, &data.train[i].state, config.gradient))
            .collect::<Result<_>>()?;
        let mut grad = vec![0.0; params.len()];
        let mut total = 0.0;
        let mut correct = 0usize;
        for ((m, g), &i) in results.iter().zip(&batch) {
            let y = data.train[i].label;
            let (l, dl) = config.loss.value_and_grad(*m, y);
            total += l;
            correct += (predict(*m) == y) as usize;
            for (a, b) in grad.iter_mut().zip(g) {
                *a += dl * b;
            }
        }
        let scale = 1.0 / batch_size as f64;
        grad.iter_mut().for_each(|g| *g *= scale);
        curves.train_loss.push(total * scale);
        curves.train_acc.push(correct as f64 * scale);
        config.optimizer.step(&mut params, &grad, &mut state)?;
        let due = (it + 1) % config.eval_every == 0 || it + 1 == config.iterations;
        curves.test_acc.push(if due {
            Some(evaluate(model, &params, &data.test, config.loss)?.1)
        } else {
            None
        });
    }
    let (train_loss, train_acc) = evaluate(model, &params, &data.train, config.loss)?;
    let test_acc = match curves.test_acc.last() {
        Some(Some(a)) => *a,
        _ => evaluate(model, &params, &data.test, config.loss)?.1,
    };
    Ok(RunReport {
        seed,
        curves,
        final_metrics: FinalMetrics {
            train_loss,
            train_acc,
            test_acc,
        },
        initial_params,
        final_params: params,
    })
}

/// Runs `config.runs` independent trainings. Run seeds are drawn from a
/// ChaCha8 stream seeded with `config.seed`.
pub fn train(config: &TrainConfig, data: &Dataset) -> Result<TrainReport> {
    config.validate()?;
    let arch = config.architecture.build(config.n_qubits)?;
    let model = arch.model::<f64>()?;
    check_inputs(&model, data)?;
    let mut seed_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let seeds: Vec<u64> = (0..config.runs).map(|_| seed_rng.random()).collect();
    let runs: Vec<RunReport> = seeds
        .par_iter()
        .map(|&s| train_run(config, &model, arch.param_groups(), data, s))
        .collect::<Result<_>>()?;
    let (mean, std) = aggregate(&runs, config.iterations);
    let fin = |f: fn(&FinalMetrics) -> f64| {
        mean_std(&runs.iter().map(|r| f(&r.final_metrics)).collect::<Vec<_>>())
    };
    let (a, b, c) = (
        fin(|m| m.train_loss),
        fin(|m| m.train_acc),
        fin(|m| m.test_acc),
    );
    Ok(TrainReport {
        config: config.clone(),
        config_hash: config.hash(),
        dataset_hash: data.hash(),
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        n_train: data.train.len(),
        n_test: data.test.len(),
        seeds,
        runs,
        mean,
        std,
        final_mean: FinalMetrics {
            train_loss: a.0,
            train_acc: b.0,
            test_acc: c.0,
        },
        final_std: FinalMetrics {
            train_loss: a.1,
            train_acc: b.1,
            test_acc: c.1,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{adjacency_from_mask, graph_state};

    fn graph_dataset(masks_train: &[u64], masks_test: &[u64]) -> Dataset {
        let mk = |ms: &[u64]| {
            ms.iter()
                .map(|&m| {
                    let a = adjacency_from_mask(4, m);
                    Sample {
                        state: graph_state(&a).unwrap(),
                        label: crate::data::is_connected(&a) as u8,
                    }
                })
                .collect::<Vec<_>>()
        };
        Dataset {
            train: mk(masks_train),
            test: mk(masks_test),
        }
    }

    fn small_config(arch: ArchitectureId) -> TrainConfig {
        TrainConfig {
            runs: 2,
            ..TrainConfig::graphs(arch, 8, 11)
        }
    }

    #[test]
    fn zero_learning_rate_freezes_the_loss() {
        let data = graph_dataset(&[1, 7, 33, 63, 12], &[3, 60]);
        let mut cfg = small_config(ArchitectureId::SnEqcnnMixture);
        cfg.optimizer = cfg.optimizer.with_lr(0.0);
        cfg.batch_size = 5;
        let r = train(&cfg, &data).unwrap();
        for run in &r.runs {
            assert!(run.curves.train_loss.windows(2).all(|w| w[0] == w[1]));
            assert_eq!(run.initial_params, run.final_params);
        }
    }

    #[test]
    fn overfits_one_sample() {
        let data = graph_dataset(&[7], &[7]);
        for arch in [ArchitectureId::SnEqcnnMixture, ArchitectureId::BaselineQcnn] {
            let mut cfg = small_config(arch);
            cfg.iterations = 150;
            cfg.optimizer = cfg.optimizer.with_lr(0.05);
            let r = train(&cfg, &data).unwrap();
            assert_eq!(r.final_mean.train_acc, 1.0, "{arch}");
            assert!(r.final_mean.train_loss < r.mean.train_loss[0]);
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let data = graph_dataset(&[1, 7, 33, 63, 12, 5, 40], &[3, 60]);
        let mut cfg = small_config(ArchitectureId::SnEqnn);
        cfg.batch_size = 3;
        cfg.eval_every = 3;
        let a = train(&cfg, &data).unwrap();
        let b = train(&cfg, &data).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.mean.train_loss.len(), 8);
        assert_eq!(a.mean.test_acc.iter().filter(|x| x.is_some()).count(), 3);
        let csv = a.to_csv();
        assert!(csv.starts_with("iteration,train_loss,train_acc,test_acc\n"));
        assert_eq!(csv.lines().count(), 9);
        let mut other = cfg.clone();
        other.seed += 1;
        assert_ne!(train(&other, &data).unwrap().seeds, a.seeds);
        assert_ne!(other.hash(), cfg.hash());
    }

    #[test]
    fn accuracies_in_unit_interval_and_json_round_trip() {
        let data = graph_dataset(&[1, 7, 33, 63, 12], &[3, 60, 9]);
        let r = train(&small_config(ArchitectureId::SnEqcnnCircuit), &data).unwrap();
        for run in &r.runs {
            assert!(run.curves.train_acc.iter().all(|a| (0.0..=1.0).contains(a)));
            assert!(run
                .curves
                .test_acc
                .iter()
                .flatten()
                .all(|a| (0.0..=1.0).contains(a)));
        }
        let back: TrainReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn bad_inputs_rejected() {
        let data = graph_dataset(&[1], &[3]);
        let mut cfg = small_config(ArchitectureId::SnEqnn);
        cfg.batch_size = 0;
        assert!(train(&cfg, &data).is_err());
        let cfg = small_config(ArchitectureId::ReflectionEqcnn);
        assert!(train(&cfg, &data).is_err());
        let mut cfg = small_config(ArchitectureId::SnEqnn);
        cfg.n_qubits = 16;
        assert!(train(&cfg, &data).is_err());
        assert!(train(&small_config(ArchitectureId::SnEqnn), &Dataset::default()).is_err());
    }
}
