//! Experiment pipeline: obfuscate, train, attack and evaluate once per sweep
//! value, then write `report.json`, `curves.csv` and `artifacts/*.pgm`.
//!
//! Every stochastic stage draws from `seed::derive(master_seed, stage, index)`
//! and parallel work is collected in index order, so the report content does
//! not depend on the worker count.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::attacks::inversion::{inversion_attack_eval, InversionParams};
use crate::attacks::membership::{membership_attack_eval, membership_attack_train, ShadowConfig};
use crate::attacks::memorization::{memorization_attack_eval, IndividualDefense, MemorizationSetup};
use crate::attacks::property::{property_attack_eval, property_attack_train, train_family_models, BlobFamily, FamilyModel};
use crate::attacks::AttackReport;
use crate::dataset::{write_pgm, Dataset, Domain, SensitiveSelection};
use crate::error::{Error, Result};
use crate::metrics::{track_curve, AccuracyCurve, CurvePoint};
use crate::model::Model;
use crate::obfuscate::{obfuscate_dataset_individual, GroupParams, IndividualParams};
use crate::seed;

pub mod config;

pub use config::{AttackSettings, BlobConfig, ExperimentConfig, Scenario};

pub const VERSION: &str = concat!("obfuskit ", env!("CARGO_PKG_VERSION"));

/// Environment variable capping the worker count; 0 or unset means automatic.
pub const THREADS_ENV: &str = "OBFUSKIT_THREADS";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub r: f64,
    pub report: AttackReport,
    pub curve: AccuracyCurve,
    pub val_acc: f64,
    /// Baseline validation accuracy minus this point's.
    pub delta_acc: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub config: ExperimentConfig,
    /// Feature domain of the data, used to render artifacts.
    pub domain: Domain,
    pub points: Vec<SweepPoint>,
    pub wall_clock_seconds: f64,
}

impl RunReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// The report without its wall-clock field; identical across reruns of
    /// the same config.
    pub fn content_json(&self) -> Result<String> {
        let mut value = serde_json::to_value(self)?;
        if let Some(obj) = value.as_object_mut() {
            obj.remove("wall_clock_seconds");
        }
        Ok(serde_json::to_string_pretty(&value)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::from(e).context(path.display().to_string()))
    }

    /// `r,epoch,train,val` rows for every sweep point.
    pub fn curves_csv(&self) -> String {
        let mut out = String::from("r,epoch,train,val\n");
        for p in &self.points {
            for c in &p.curve.points {
                let _ = writeln!(out, "{},{},{},{}", p.r, c.epoch, c.train_acc, c.validation_acc);
            }
        }
        out
    }

    /// One row per sweep point: `r`, `f1`, `val_acc`, `delta_acc`, then every
    /// metric name that occurs in any point (empty when absent).
    pub fn summary_csv(&self) -> String {
        let mut keys: Vec<&String> = self
            .points
            .iter()
            .flat_map(|p| p.report.metrics.keys())
            .filter(|k| k.as_str() != "val_acc")
            .collect();
        keys.sort();
        keys.dedup();
        let mut out = String::from("r,f1,val_acc,delta_acc");
        for k in &keys {
            out.push(',');
            out.push_str(k);
        }
        out.push('\n');
        for p in &self.points {
            let f1 = p.report.f1.map(|v| v.to_string()).unwrap_or_default();
            let _ = write!(out, "{},{},{},{}", p.r, f1, p.val_acc, p.delta_acc);
            for k in &keys {
                out.push(',');
                if let Some(v) = p.report.metric(k) {
                    out.push_str(&v.to_string());
                }
            }
            out.push('\n');
        }
        out
    }

    /// Write `report.json`, `curves.csv` and one PGM per artifact under `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        let art = dir.join("artifacts");
        fs::create_dir_all(&art).map_err(|e| Error::io(&art, e))?;
        let report = dir.join("report.json");
        fs::write(&report, self.to_json()?).map_err(|e| Error::io(&report, e))?;
        let curves = dir.join("curves.csv");
        fs::write(&curves, self.curves_csv()).map_err(|e| Error::io(&curves, e))?;
        let domain = self.domain;
        for (i, p) in self.points.iter().enumerate() {
            for a in &p.report.artifacts {
                let (h, w) = self.config.image_shape(a.features.len());
                write_pgm(art.join(format!("p{i}_r{}_{}.pgm", p.r, a.name)), &a.features, h, w, domain)?;
            }
        }
        Ok(())
    }
}

impl ExperimentConfig {
    /// `(height, width)` used for PGM output of a `len`-feature vector.
    pub fn image_shape(&self, len: usize) -> (usize, usize) {
        if let Some([h, w]) = self.dataset.image_shape {
            if h * w == len {
                return (h, w);
            }
        }
        let side = (len as f64).sqrt().round() as usize;
        if side * side == len {
            (side, side)
        } else {
            (1, len)
        }
    }
}

/// Worker count from [`THREADS_ENV`]; 0 lets rayon decide.
pub fn threads_from_env() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::invalid(THREADS_ENV, format!("`{v}` is not a non-negative integer"))),
        Err(_) => Ok(0),
    }
}

/// Run the experiment with the worker count from the environment and write
/// its outputs when the config names an output directory.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunReport> {
    let report = execute(config, threads_from_env()?)?;
    if let Some(dir) = &config.output_dir {
        report.write(dir)?;
    }
    Ok(report)
}

/// Run the experiment on `threads` workers (0 = automatic) without writing
/// anything.
pub fn execute(config: &ExperimentConfig, threads: usize) -> Result<RunReport> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::invalid(THREADS_ENV, e.to_string()))?;
    let start = Instant::now();
    let (domain, results) = pool.install(|| run_points(config))?;
    let baseline = results.first().map_or(0.0, |p| p.1);
    let points = results
        .into_iter()
        .map(|(r, val_acc, report, curve)| SweepPoint {
            r,
            report,
            curve,
            val_acc,
            delta_acc: baseline - val_acc,
        })
        .collect();
    Ok(RunReport {
        version: VERSION.to_string(),
        config: config.clone(),
        domain,
        points,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    })
}

type PointResult = (f64, f64, AttackReport, AccuracyCurve);

fn run_points(config: &ExperimentConfig) -> Result<(Domain, Vec<PointResult>)> {
    let scenario = config.scenario.name();
    let result = match config.attack_settings()? {
        AttackSettings::Memorization(a) => run_memorization(config, &a),
        AttackSettings::Membership(a) => run_membership(config, &a),
        AttackSettings::Inversion(a) => run_inversion(config, &a),
        AttackSettings::Property(a) => run_property(config, &a),
    };
    result.map_err(|e| e.context(format!("{scenario} scenario")))
}

fn with_context<T>(r: f64, result: Result<T>) -> Result<T> {
    result.map_err(|e| e.context(format!("sweep point r={r}")))
}

fn split_train_val(config: &ExperimentConfig, data: &Dataset) -> Result<(Dataset, Dataset)> {
    data.split(1.0 - config.dataset.validation_fraction, seed::derive(config.master_seed, "split", 0))
        .map_err(|e| e.context("dataset.validation_fraction"))
}

fn run_memorization(config: &ExperimentConfig, a: &config::MemorizationAttack) -> Result<(Domain, Vec<PointResult>)> {
    let data = config.load_dataset()?;
    let (train, val) = split_train_val(config, &data)?;
    let secret_idx: Vec<usize> = match &a.secret {
        Some(s) => s.clone(),
        None => (0..train.num_classes())
            .filter_map(|c| train.samples().iter().position(|s| s.label == c))
            .collect(),
    };
    let secret = SensitiveSelection::new(secret_idx.iter().copied(), train.len()).map_err(|e| e.context("attack.secret"))?;
    let setup = MemorizationSetup {
        spec: config.model.spec_for(train.dim(), train.num_classes(), train.domain()),
        train: config.train.config(),
        bits_per_feature: a.bits_per_feature,
        method: a.method,
    };
    let params = IndividualParams::new(config.obfuscation.individual.coord_ratio, config.individual_sigma(train.domain()))?;
    let eval_seed = seed::derive(config.master_seed, "memorization", 0);
    let points = config
        .sweep()
        .into_iter()
        .map(|r| {
            with_context(r, {
                let defense = if r > 0.0 {
                    // the sensitive samples are always protected; r is the
                    // fraction of the whole training set that is noised
                    let mut sel: Vec<usize> =
                        SensitiveSelection::random_fraction(train.len(), r, seed::derive(config.master_seed, "selection", 0))?
                            .iter()
                            .collect();
                    sel.extend(secret.iter());
                    sel.sort_unstable();
                    sel.dedup();
                    Some(IndividualDefense {
                        params,
                        selection: SensitiveSelection::new(sel, train.len())?,
                    })
                } else {
                    None
                };
                memorization_attack_eval(&train, &val, &secret, defense.as_ref(), &setup, eval_seed).map(|out| {
                    let acc = out.report.metric("val_acc_encoded").unwrap_or(0.0);
                    (r, acc, out.report, out.curve)
                })
            })
        })
        .collect::<Result<_>>()?;
    Ok((train.domain(), points))
}

fn run_membership(config: &ExperimentConfig, a: &config::MembershipAttack) -> Result<(Domain, Vec<PointResult>)> {
    let data = config.load_dataset()?;
    let n = a.target_train_size;
    if data.len() < 2 * n + 2 {
        return Err(Error::invalid(
            "attack.target_train_size",
            format!("dataset of {} samples cannot hold members, non-members and a shadow pool", data.len()),
        ));
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut seed::rng(config.master_seed, "membership-split", 0));
    let members = data.subset(&order[..n])?;
    let non_members = data.subset(&order[n..2 * n])?;
    let pool = data.subset(&order[2 * n..])?;
    // everything the target never trains on; larger than the non-member set,
    // so the accuracy estimate is less noisy
    let held_out = data.subset(&order[n..])?;
    let spec = config.model.spec_for(data.dim(), data.num_classes(), data.domain());
    let cfg = config.train.config();
    let shadows = ShadowConfig {
        shadow_count: a.shadow_count,
        shadow_train_size: a.shadow_train_size.unwrap_or(n),
        classifier: a.classifier.clone(),
    };
    let attack = membership_attack_train(&spec, &pool, &shadows, &cfg, seed::derive(config.master_seed, "shadows", 0))?;
    let params = IndividualParams::new(config.obfuscation.individual.coord_ratio, config.individual_sigma(data.domain()))?;
    let init = Model::init(spec.clone(), seed::derive(config.master_seed, "target-init", 0))?;
    let target_cfg = cfg.with_seed(seed::derive(config.master_seed, "target-train", 0));
    let points = config
        .sweep()
        .into_iter()
        .map(|r| {
            with_context(r, {
                let train = if r > 0.0 {
                    let sel = SensitiveSelection::random_fraction(n, r, seed::derive(config.master_seed, "selection", 0))?;
                    obfuscate_dataset_individual(&members, &sel, &params, seed::derive(config.master_seed, "obfuscate", 0))?
                } else {
                    members.clone()
                };
                track_curve(&init, &train, &held_out, &target_cfg).and_then(|(target, curve)| {
                    let mut report = membership_attack_eval(&target, &members, &non_members, &attack)?;
                    let val = target.accuracy(&held_out)?;
                    report.set("train_acc", target.accuracy(&train)?);
                    report.set("val_acc", val);
                    Ok((r, val, report, curve))
                })
            })
        })
        .collect::<Result<_>>()?;
    Ok((data.domain(), points))
}

fn run_inversion(config: &ExperimentConfig, a: &config::InversionAttack) -> Result<(Domain, Vec<PointResult>)> {
    let data = config.load_dataset()?;
    if a.target_class >= data.num_classes() {
        return Err(Error::invalid(
            "attack.target_class",
            format!("dataset has {} classes", data.num_classes()),
        ));
    }
    let (train, val) = split_train_val(config, &data)?;
    let spec = config.model.spec_for(train.dim(), train.num_classes(), train.domain());
    let params = InversionParams {
        steps: a.steps,
        step_size: a.step_size,
        init: None,
    };
    let eval_seed = seed::derive(config.master_seed, "inversion", 0);
    let points = config
        .sweep()
        .into_iter()
        .map(|r| {
            with_context(r, {
                let defense = GroupParams::new(r, config.obfuscation.group.sigma)?;
                let defense = (r > 0.0).then_some(&defense);
                inversion_attack_eval(&train, &val, a.target_class, defense, &spec, &config.train.config(), &params, eval_seed)
                    .map(|out| {
                        let acc = out.report.metric("val_acc").unwrap_or(0.0);
                        (r, acc, out.report, out.curve)
                    })
            })
        })
        .collect::<Result<_>>()?;
    Ok((train.domain(), points))
}

fn mean_curve(models: &[FamilyModel]) -> AccuracyCurve {
    let Some(first) = models.first() else {
        return AccuracyCurve::default();
    };
    let n = models.len() as f64;
    let points = first
        .curve
        .points
        .iter()
        .enumerate()
        .map(|(k, p)| CurvePoint {
            epoch: p.epoch,
            train_acc: models.iter().map(|m| m.curve.points[k].train_acc).sum::<f64>() / n,
            validation_acc: models.iter().map(|m| m.curve.points[k].validation_acc).sum::<f64>() / n,
        })
        .collect();
    AccuracyCurve { points }
}

fn run_property(config: &ExperimentConfig, a: &config::PropertyAttack) -> Result<(Domain, Vec<PointResult>)> {
    let config::DatasetSource::Blobs(with_cfg) = &config.dataset.source else {
        return Err(Error::invalid("dataset.source", "property scenario needs a blobs generator"));
    };
    let family = |name: &str, b: &BlobConfig| BlobFamily {
        name: name.to_string(),
        centers: b.centers(config.master_seed),
        per_class: b.per_class,
        per_class_max: b.per_class_max,
        spread: b.spread,
        round: b.round,
    };
    let with = family("with", with_cfg);
    let without = family("without", &a.without);
    let spec = config.model.spec_for(with_cfg.dim, with_cfg.classes, with_cfg.domain());
    let cfg = config.train.config();
    let attack = property_attack_train(
        &spec,
        &with,
        &without,
        a.shadow_each,
        &cfg,
        &a.classifier,
        seed::derive(config.master_seed, "property-shadows", 0),
    )?;
    let eval_seed = seed::derive(config.master_seed, "property-eval", 0);
    let eval_without: Vec<Model> = train_family_models(&spec, &without, a.eval_each, &cfg, None, eval_seed, "eval-without")?
        .into_iter()
        .map(|f| f.model)
        .collect();
    let points = config
        .sweep()
        .into_iter()
        .map(|r| {
            with_context(r, {
                let defense = GroupParams::new(r, config.obfuscation.group.sigma)?;
                let defense = (r > 0.0).then_some(&defense);
                train_family_models(&spec, &with, a.eval_each, &cfg, defense, eval_seed, "eval-with").and_then(|models| {
                    let with_models: Vec<Model> = models.iter().map(|f| f.model.clone()).collect();
                    let mut report = property_attack_eval(&attack, &with_models, &eval_without)?;
                    let recall = report.metric("recall").unwrap_or(0.0);
                    report.set("with_classified_without", 1.0 - recall);
                    let val = models.iter().map(|f| f.val_acc).sum::<f64>() / models.len() as f64;
                    report.set("val_acc", val);
                    Ok((r, val, report, mean_curve(&models)))
                })
            })
        })
        .collect::<Result<_>>()?;
    Ok((with_cfg.domain(), points))
}
