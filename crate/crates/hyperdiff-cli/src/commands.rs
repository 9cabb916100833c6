//! Implementations of the four subcommands.
//!
//! Each command reads one config, writes its outputs plus `manifest.json`
//! and `summary.json` into the output directory, and reports whether any
//! property check failed (exit code 1) as distinct from hard errors.

use std::path::{Path, PathBuf};

use serde::Serialize;

use hyperdiff::hypergraph::{ce_homophily, Hypergraph};
use hyperdiff::io::{self, Dataset, PairsFile};
use hyperdiff::model::ModelParams;
use hyperdiff::potentials::validate_edge_spec;
use hyperdiff::rng::{rng_for, standard_normal_vec};
use hyperdiff::solvers::run_diffusion;
use hyperdiff::synth::{
    gen_csbm, gen_diffusion_pairs, gen_gaussian_features, gen_uniform_hypergraph, split_dataset,
};
use hyperdiff::tensor::Tensor2D;
use hyperdiff::train::{train_diffusion_regression, train_node_classification};
use hyperdiff::{checks, Error, Result};

use crate::config::{
    CheckConfig, ClassificationSpec, DiffuseConfig, GenerateConfig, HypergraphSource,
    InitialState, RegressionSpec, TrainCommandConfig,
};
use crate::output::{Csv, CsvField, OutDir};

/// Whether the command's own checks passed; hard errors use `Err` instead.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Success,
    PropertyFailure,
}

/// Resolve a path from a config file relative to that config's directory,
/// so configs are relocatable along with the files they reference.
fn resolve(base: &Path, path: &str) -> PathBuf {
    let p = Path::new(path);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// A config pointing at a file that does not exist is a configuration
/// mistake (exit code 2), not a runtime failure.
fn not_found_is_config(e: Error, path: &Path) -> Error {
    match e {
        Error::Io(ioe) if ioe.kind() == std::io::ErrorKind::NotFound => {
            Error::Config(format!("input file not found: {}", path.display()))
        }
        other => other,
    }
}

fn load_dataset(path: &Path) -> Result<Dataset> {
    io::load_dataset(path).map_err(|e| not_found_is_config(e, path))
}

fn load_pairs(path: &Path) -> Result<PairsFile> {
    io::load_pairs(path).map_err(|e| not_found_is_config(e, path))
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct GenerateSummary {
    kind: &'static str,
    num_nodes: usize,
    num_hyperedges: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    homophily: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    feature_dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    split_sizes: Option<[usize; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    num_pairs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eta: Option<f64>,
}

impl GenerateSummary {
    fn new(kind: &'static str, hg: &Hypergraph) -> Self {
        GenerateSummary {
            kind,
            num_nodes: hg.num_nodes(),
            num_hyperedges: hg.num_edges(),
            homophily: None,
            feature_dim: None,
            split_sizes: None,
            num_pairs: None,
            eta: None,
        }
    }
}

pub fn cmd_generate(cfg: &GenerateConfig, base: &Path, out_dir: &Path) -> Result<Outcome> {
    let mut out = OutDir::create(out_dir)?;
    let summary = match cfg {
        GenerateConfig::Csbm(c) => {
            let mut ds = gen_csbm(&c.csbm)?;
            let labels = ds.labels.clone().expect("community model datasets are labeled");
            let mut summary = GenerateSummary::new("csbm", &ds.hypergraph);
            summary.homophily = Some(ce_homophily(&ds.hypergraph, &labels)?);
            if let Some(f) = &c.features {
                ds.features =
                    Some(gen_gaussian_features(&labels, f.dim, f.class_separation, f.seed)?);
                summary.feature_dim = Some(f.dim);
            }
            if let Some(s) = &c.split {
                let masks = split_dataset(ds.num_nodes(), s.fractions, s.seed)?;
                summary.split_sizes =
                    Some([masks.train.len(), masks.val.len(), masks.test.len()]);
                ds.masks = Some(masks);
            }
            io::save_dataset(&out.path("dataset.json"), &ds)?;
            out.record("dataset.json");
            summary
        }
        GenerateConfig::Uniform(c) => {
            let hg = gen_uniform_hypergraph(c.num_nodes, c.num_hyperedges, c.edge_size, c.seed)?;
            let summary = GenerateSummary::new("uniform", &hg);
            io::save_dataset(&out.path("dataset.json"), &Dataset::new(hg))?;
            out.record("dataset.json");
            summary
        }
        GenerateConfig::DiffusionPairs(c) => {
            let (hg, hypergraph_ref) = match &c.hypergraph {
                HypergraphSource::Path { path } => {
                    (load_dataset(&resolve(base, path))?.hypergraph, path.clone())
                }
                HypergraphSource::Uniform { num_nodes, num_hyperedges, edge_size, seed } => {
                    let hg =
                        gen_uniform_hypergraph(*num_nodes, *num_hyperedges, *edge_size, *seed)?;
                    io::save_dataset(&out.path("hypergraph.json"), &Dataset::new(hg.clone()))?;
                    out.record("hypergraph.json");
                    (hg, "hypergraph.json".to_string())
                }
            };
            let pairs = gen_diffusion_pairs(&hg, &c.pairs)?;
            let mut summary = GenerateSummary::new("diffusion_pairs", &hg);
            summary.num_pairs = Some(pairs.len());
            summary.eta = Some(c.pairs.resolved_eta());
            let file = PairsFile {
                hypergraph_ref,
                pairs,
                config: serde_json::to_value(&c.pairs)?,
                format_version: io::FORMAT_VERSION,
            };
            io::save_pairs(&out.path("pairs.json"), &file)?;
            out.record("pairs.json");
            summary
        }
    };
    println!(
        "generated {}: {} nodes, {} hyperedges",
        summary.kind, summary.num_nodes, summary.num_hyperedges
    );
    out.write_json("summary.json", &summary)?;
    out.finish("generate", cfg)?;
    Ok(Outcome::Success)
}

// ---------------------------------------------------------------------------
// diffuse
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct DiffuseSummary {
    iterations: usize,
    stopped_early: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    initial_objective: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    final_objective: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    final_max_change: Option<f64>,
}

pub fn cmd_diffuse(cfg: &DiffuseConfig, base: &Path, out_dir: &Path) -> Result<Outcome> {
    validate_edge_spec(&cfg.potential)?;
    let solver = cfg.solver.solver_config()?;
    solver.validate()?;
    let ds = load_dataset(&resolve(base, &cfg.dataset))?;
    let n = ds.num_nodes();
    let x = match &cfg.initial {
        InitialState::Features => ds.features.clone().ok_or_else(|| {
            Error::Config(format!(
                "dataset {} has no features; use an explicit initial state",
                cfg.dataset
            ))
        })?,
        InitialState::Gaussian { sigma, channels, seed } => {
            if !(sigma.is_finite() && *sigma > 0.0) {
                return Err(Error::Config(format!("initial sigma must be positive, got {sigma}")));
            }
            if *channels == 0 {
                return Err(Error::Config("initial channels must be >= 1".into()));
            }
            let mut rng = rng_for(*seed, "diffuse_initial");
            let mut data = standard_normal_vec(&mut rng, n * channels);
            for v in &mut data {
                *v *= sigma;
            }
            Tensor2D::from_vec(n, *channels, data)
        }
    };

    let outcome = run_diffusion(
        &ds.hypergraph,
        &x,
        &cfg.node_potential,
        &cfg.potential,
        cfg.solver.kind,
        &solver,
    )?;

    let mut out = OutDir::create(out_dir)?;
    let mut csv = Csv::new("iter,objective,max_change");
    if !outcome.objective.is_empty() {
        csv.row(&[CsvField::Int(0), CsvField::Float(outcome.objective[0]), CsvField::Empty]);
        for t in 1..outcome.objective.len() {
            csv.row(&[
                CsvField::Int(t),
                CsvField::Float(outcome.objective[t]),
                CsvField::Float(outcome.max_change[t - 1]),
            ]);
        }
    }
    out.write("trajectory.csv", &csv.into_string())?;

    let final_state = Dataset {
        hypergraph: ds.hypergraph.clone(),
        labels: ds.labels.clone(),
        features: Some(outcome.state.h.clone()),
        masks: ds.masks.clone(),
    };
    io::save_dataset(&out.path("final_state.json"), &final_state)?;
    out.record("final_state.json");

    let summary = DiffuseSummary {
        iterations: outcome.iterations,
        stopped_early: outcome.iterations < solver.max_iters,
        initial_objective: outcome.objective.first().copied(),
        final_objective: outcome.objective.last().copied(),
        final_max_change: outcome.max_change.last().copied(),
    };
    println!(
        "diffused {} iterations{}",
        outcome.iterations,
        summary
            .final_objective
            .map(|o| format!(", final objective {o}"))
            .unwrap_or_default()
    );
    out.write_json("summary.json", &summary)?;
    out.finish("diffuse", cfg)?;
    Ok(Outcome::Success)
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

/// Saved trained model: the architecture plus every parameter tensor.
#[derive(Serialize, serde::Deserialize)]
pub struct Checkpoint {
    pub model_config: hyperdiff::model::ModelConfig,
    pub params: ModelParams,
    pub format_version: u32,
}

#[derive(Serialize)]
struct ClassificationRun {
    layers: usize,
    num_params: usize,
    best_epoch: usize,
    best_val_acc: f64,
    test_acc: f64,
    metrics_file: String,
}

#[derive(Serialize)]
struct ClassificationSummary {
    task: &'static str,
    runs: Vec<ClassificationRun>,
}

#[derive(Serialize)]
struct RegressionRun {
    hidden: usize,
    num_params: usize,
    held_out_mae: f64,
    identity_mae: f64,
    mae_ratio: f64,
    num_train_pairs: usize,
    num_held_out_pairs: usize,
    metrics_file: String,
}

#[derive(Serialize)]
struct RegressionSummary {
    task: &'static str,
    runs: Vec<RegressionRun>,
}

pub fn cmd_train(cfg: &TrainCommandConfig, base: &Path, out_dir: &Path) -> Result<Outcome> {
    match cfg {
        TrainCommandConfig::Classification(c) => cmd_train_classification(cfg, c, base, out_dir),
        TrainCommandConfig::Regression(c) => cmd_train_regression(cfg, c, base, out_dir),
    }
}

fn cmd_train_classification(
    full: &TrainCommandConfig,
    c: &ClassificationSpec,
    base: &Path,
    out_dir: &Path,
) -> Result<Outcome> {
    let ds = load_dataset(&resolve(base, &c.dataset))?;
    let features = ds
        .features
        .as_ref()
        .ok_or_else(|| Error::Config(format!("dataset {} has no features", c.dataset)))?;
    let labels = ds
        .labels
        .as_ref()
        .ok_or_else(|| Error::Config(format!("dataset {} has no labels", c.dataset)))?;
    let masks = ds
        .masks
        .as_ref()
        .ok_or_else(|| Error::Config(format!("dataset {} has no train/val/test split", c.dataset)))?;
    let (train_mask, val_mask, test_mask) = masks.bool_masks(ds.num_nodes())?;
    let num_classes = labels.iter().max().map_or(0, |&m| m + 1);
    let exp = ds.hypergraph.star_expansion();

    let depths = match &c.depth_sweep {
        Some(list) if list.is_empty() => {
            return Err(Error::Config("depth_sweep must not be empty".into()))
        }
        Some(list) => list.clone(),
        None => vec![c.model.layers],
    };
    let sweep = c.depth_sweep.is_some();

    let mut out = OutDir::create(out_dir)?;
    let mut runs = Vec::with_capacity(depths.len());
    for &layers in &depths {
        let mut spec = c.model.clone();
        spec.layers = layers;
        let model_cfg = spec.model_config(features.cols(), features.cols(), num_classes);
        model_cfg.validate()?;
        // One shared seed across sweep runs: parameters are shared across
        // message-passing iterations, so every depth starts from identical
        // initial parameters.
        let mut rng = rng_for(c.seed, "train_classification");
        let outcome = train_node_classification(
            &model_cfg,
            &c.train,
            &exp,
            features,
            labels,
            &train_mask,
            &val_mask,
            &test_mask,
            &mut rng,
        )?;

        let mut csv = Csv::new("epoch,train_acc,val_acc,test_acc,loss");
        for m in &outcome.metrics {
            csv.row(&[
                CsvField::Int(m.epoch),
                CsvField::Float(m.train_acc),
                CsvField::Float(m.val_acc),
                CsvField::Float(m.test_acc),
                CsvField::Float(m.loss),
            ]);
        }
        let metrics_file =
            if sweep { format!("metrics_L{layers}.csv") } else { "metrics.csv".to_string() };
        out.write(&metrics_file, &csv.into_string())?;

        let checkpoint_file = if sweep {
            format!("checkpoint_L{layers}.json")
        } else {
            "checkpoint.json".to_string()
        };
        let num_params = outcome.params.num_params();
        out.write_json(
            &checkpoint_file,
            &Checkpoint {
                model_config: model_cfg,
                params: outcome.params,
                format_version: io::FORMAT_VERSION,
            },
        )?;

        println!(
            "trained L={layers}: best val acc {:.4} at epoch {}, test acc {:.4} ({num_params} params)",
            outcome.best_val_acc, outcome.best_epoch, outcome.test_acc
        );
        runs.push(ClassificationRun {
            layers,
            num_params,
            best_epoch: outcome.best_epoch,
            best_val_acc: outcome.best_val_acc,
            test_acc: outcome.test_acc,
            metrics_file,
        });
    }

    out.write_json("summary.json", &ClassificationSummary { task: "classification", runs })?;
    out.finish("train", full)?;
    Ok(Outcome::Success)
}

fn cmd_train_regression(
    full: &TrainCommandConfig,
    c: &RegressionSpec,
    base: &Path,
    out_dir: &Path,
) -> Result<Outcome> {
    let pairs_path = resolve(base, &c.pairs);
    let pairs_file = load_pairs(&pairs_path)?;
    let pairs_dir = pairs_path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let dataset_path = match &c.dataset {
        Some(p) => resolve(base, p),
        None => resolve(&pairs_dir, &pairs_file.hypergraph_ref),
    };
    let hg = load_dataset(&dataset_path)?.hypergraph;
    let exp = hg.star_expansion();

    let widths = match &c.hidden_sweep {
        Some(list) if list.is_empty() => {
            return Err(Error::Config("hidden_sweep must not be empty".into()))
        }
        Some(list) => list.clone(),
        None => vec![c.model.hidden],
    };
    let sweep = c.hidden_sweep.is_some();

    let mut out = OutDir::create(out_dir)?;
    let mut runs = Vec::with_capacity(widths.len());
    for &hidden in &widths {
        let mut spec = c.model.clone();
        spec.hidden = hidden;
        if sweep {
            spec.head_hidden = hidden;
        }
        let model_cfg = spec.model_config(1, 1, 1);
        model_cfg.validate()?;
        let mut rng = rng_for(c.seed, "train_regression");
        let outcome = train_diffusion_regression(
            &model_cfg,
            &c.train,
            c.train_frac,
            &exp,
            &pairs_file.pairs,
            &mut rng,
        )?;

        let mut csv = Csv::new("epoch,train_mae,held_out_mae");
        for m in &outcome.metrics {
            csv.row(&[
                CsvField::Int(m.epoch),
                CsvField::Float(m.train_mae),
                CsvField::Float(m.held_out_mae),
            ]);
        }
        let metrics_file =
            if sweep { format!("metrics_h{hidden}.csv") } else { "metrics.csv".to_string() };
        out.write(&metrics_file, &csv.into_string())?;

        let checkpoint_file = if sweep {
            format!("checkpoint_h{hidden}.json")
        } else {
            "checkpoint.json".to_string()
        };
        let num_params = outcome.params.num_params();
        out.write_json(
            &checkpoint_file,
            &Checkpoint {
                model_config: model_cfg,
                params: outcome.params,
                format_version: io::FORMAT_VERSION,
            },
        )?;

        println!(
            "trained hidden={hidden}: held-out MAE {:.6} vs identity {:.6} ({num_params} params)",
            outcome.held_out_mae, outcome.identity_mae
        );
        runs.push(RegressionRun {
            hidden,
            num_params,
            held_out_mae: outcome.held_out_mae,
            identity_mae: outcome.identity_mae,
            mae_ratio: outcome.held_out_mae / outcome.identity_mae,
            num_train_pairs: outcome.num_train_pairs,
            num_held_out_pairs: outcome.num_held_out_pairs,
            metrics_file,
        });
    }

    if sweep {
        let mut csv = Csv::new("hidden,held_out_mae,identity_mae");
        for r in &runs {
            csv.row(&[
                CsvField::Int(r.hidden),
                CsvField::Float(r.held_out_mae),
                CsvField::Float(r.identity_mae),
            ]);
        }
        out.write("mae_by_hidden.csv", &csv.into_string())?;
    }

    out.write_json("summary.json", &RegressionSummary { task: "regression", runs })?;
    out.finish("train", full)?;
    Ok(Outcome::Success)
}

// ---------------------------------------------------------------------------
// check
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct CheckReport<'a> {
    all_passed: bool,
    suites: &'a [checks::SuiteReport],
}

pub fn cmd_check(cfg: &CheckConfig, out_dir: &Path) -> Result<Outcome> {
    let reports = checks::run_suites(&cfg.suites, cfg.inject_fault, cfg.seed)?;
    let all_passed = reports.iter().all(|r| r.passed);
    for r in &reports {
        println!(
            "suite {:<20} {}  (cases {}, max residual {:.3e}, threshold {:.1e})",
            r.name,
            if r.passed { "PASS" } else { "FAIL" },
            r.cases,
            r.max_residual,
            r.threshold
        );
    }
    let mut out = OutDir::create(out_dir)?;
    out.write_json("report.json", &CheckReport { all_passed, suites: &reports })?;
    out.write_json(
        "summary.json",
        &serde_json::json!({
            "all_passed": all_passed,
            "num_suites": reports.len(),
            "failed": reports.iter().filter(|r| !r.passed).map(|r| r.name.clone()).collect::<Vec<_>>(),
        }),
    )?;
    out.finish("check", cfg)?;
    Ok(if all_passed { Outcome::Success } else { Outcome::PropertyFailure })
}
