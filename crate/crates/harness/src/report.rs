//! Report assembly and serialization. Reports carry no timestamps, so two
//! runs with the same configuration produce identical files.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{ensure, Result};
use daem_core::cv::normalized_overlap;
use daem_nn::checkpoint::CHECKPOINT_VERSION;
use daem_nn::Checkpoint;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::metrics::{kl, mae, mean};
use crate::pipeline::{kerr_setup, stat_kind, Datasets, StatKind};

pub const NOISY: &str = "noisy-min-level";
pub const DAEM: &str = "daem";
pub const ZNE: &str = "zne";
pub const CDR: &str = "cdr";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub experiment: String,
    pub config_hash: String,
    pub seed: u64,
    pub shots: usize,
    pub versions: BTreeMap<String, String>,
    pub levels: Vec<f64>,
    pub cdr_level: Option<f64>,
    pub na_train: usize,
    pub na_val: usize,
    pub em_test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRow {
    pub method: String,
    pub mae: f64,
    /// Mean `KL(estimate ‖ ideal)`, distributions only.
    pub kl: Option<f64>,
    /// Mean normalized phase-space overlap with the ideal state, grids only.
    pub fidelity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    pub level: f64,
    pub mae: f64,
    pub kl: Option<f64>,
}

/// Scalar MAE per process tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRow {
    pub g: f64,
    pub samples: usize,
    pub mae: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeRow {
    pub t: f64,
    pub fidelity: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionRow {
    pub bitstring: String,
    pub ideal: f64,
    pub estimates: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub parameters: usize,
    pub epochs: usize,
    pub best_epoch: usize,
    pub best_val_loss: Option<f64>,
    pub final_train_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub experiment: String,
    pub config_hash: String,
    /// `mae`, `kl` or `fidelity`: the per-sample error stored in the report.
    pub primary_metric: String,
    pub methods: Vec<MethodRow>,
    pub noisy_by_level: Vec<LevelRow>,
    pub by_g: Vec<GroupRow>,
    pub fidelity_by_time: Vec<TimeRow>,
    /// Distribution of the first error-mitigation sample.
    pub distribution: Vec<DistributionRow>,
    pub training: TrainingSummary,
}

impl Metrics {
    pub fn method(&self, name: &str) -> Option<&MethodRow> {
        self.methods.iter().find(|m| m.method == name)
    }
}

/// Per-sample estimates, keyed back to the dataset by `id`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: usize,
    pub g: f64,
    /// Scalar statistics only.
    pub ideal: Option<f64>,
    pub estimates: BTreeMap<String, f64>,
    /// Per-method value of the primary metric for this sample.
    pub error: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub provenance: Provenance,
    pub metrics: Metrics,
    pub samples: Vec<SampleRecord>,
}

fn versions() -> BTreeMap<String, String> {
    BTreeMap::from([
        (
            "daem-harness".to_string(),
            env!("CARGO_PKG_VERSION").to_string(),
        ),
        (
            "checkpoint-format".to_string(),
            CHECKPOINT_VERSION.to_string(),
        ),
    ])
}

pub fn assemble(
    cfg: &ExperimentConfig,
    data: &Datasets,
    ck: &Checkpoint,
    daem: &[Vec<f64>],
    zne: Option<&[Vec<f64>]>,
) -> Result<Report> {
    let test = &data.em_test;
    ensure!(
        daem.len() == test.len(),
        "{} predictions for {} samples",
        daem.len(),
        test.len()
    );
    if let Some(cdr) = &data.baselines.cdr {
        ensure!(
            cdr.len() == test.len(),
            "{} CDR estimates for {} samples",
            cdr.len(),
            test.len()
        );
    }
    let kind = stat_kind(cfg);

    // estimates[method][sample]
    let mut estimates: Vec<(&str, Vec<Vec<f64>>)> = vec![
        (NOISY, test.iter().map(|s| s.p[0].clone()).collect()),
        (DAEM, daem.to_vec()),
    ];
    if let Some(z) = zne {
        estimates.push((ZNE, z.to_vec()));
    }
    if let Some(c) = &data.baselines.cdr {
        estimates.push((CDR, c.iter().map(|v| vec![*v]).collect()));
    }

    let grid = kerr_setup(cfg).grid;
    let sample_error = |est: &[f64], ideal: &[f64]| -> Result<f64> {
        Ok(match kind {
            StatKind::Scalar => mae(est, ideal)?,
            StatKind::Distribution => kl(est, ideal)?,
            StatKind::Grid(_) => normalized_overlap(est, ideal, &grid)?,
        })
    };

    let mut samples = Vec::with_capacity(test.len());
    for (i, s) in test.iter().enumerate() {
        let mut rec = SampleRecord {
            id: s.id,
            g: s.g,
            ideal: (kind == StatKind::Scalar).then(|| s.p0[0]),
            estimates: BTreeMap::new(),
            error: BTreeMap::new(),
        };
        for (name, est) in &estimates {
            if kind == StatKind::Scalar {
                rec.estimates.insert(name.to_string(), est[i][0]);
            }
            rec.error
                .insert(name.to_string(), sample_error(&est[i], &s.p0)?);
        }
        samples.push(rec);
    }

    let truth: Vec<f64> = test.iter().flat_map(|s| s.p0.iter().copied()).collect();
    let mut methods = Vec::new();
    for (name, est) in &estimates {
        let flat: Vec<f64> = est.iter().flatten().copied().collect();
        let per_sample: Vec<f64> = samples.iter().map(|r| r.error[*name]).collect();
        methods.push(MethodRow {
            method: name.to_string(),
            mae: mae(&flat, &truth)?,
            kl: (kind == StatKind::Distribution).then(|| mean(&per_sample)),
            fidelity: matches!(kind, StatKind::Grid(_)).then(|| mean(&per_sample)),
        });
    }

    let mut noisy_by_level = Vec::new();
    for (k, &level) in data.levels.iter().enumerate() {
        let flat: Vec<f64> = test.iter().flat_map(|s| s.p[k].iter().copied()).collect();
        let kl_level = if kind == StatKind::Distribution {
            Some(mean(
                &test
                    .iter()
                    .map(|s| kl(&s.p[k], &s.p0))
                    .collect::<Result<Vec<_>, _>>()?,
            ))
        } else {
            None
        };
        noisy_by_level.push(LevelRow {
            level,
            mae: mae(&flat, &truth)?,
            kl: kl_level,
        });
    }

    let mut by_g: Vec<GroupRow> = Vec::new();
    if kind == StatKind::Scalar {
        let mut tags: Vec<f64> = test.iter().map(|s| s.g).collect();
        tags.sort_by(f64::total_cmp);
        tags.dedup();
        for g in tags {
            let idx: Vec<usize> = (0..test.len()).filter(|&i| test[i].g == g).collect();
            let ideal: Vec<f64> = idx.iter().map(|&i| test[i].p0[0]).collect();
            let mut row = GroupRow {
                g,
                samples: idx.len(),
                mae: BTreeMap::new(),
            };
            for (name, est) in &estimates {
                let v: Vec<f64> = idx.iter().map(|&i| est[i][0]).collect();
                row.mae.insert(name.to_string(), mae(&v, &ideal)?);
            }
            by_g.push(row);
        }
    }

    let fidelity_by_time = if matches!(kind, StatKind::Grid(_)) {
        samples
            .iter()
            .map(|r| TimeRow {
                t: r.g,
                fidelity: r.error.clone(),
            })
            .collect()
    } else {
        Vec::new()
    };

    let distribution = match (kind, test.first()) {
        (StatKind::Distribution, Some(s)) => {
            let bits = s.p0.len().trailing_zeros() as usize;
            (0..s.p0.len())
                .map(|x| DistributionRow {
                    bitstring: format!("{x:0bits$b}"),
                    ideal: s.p0[x],
                    estimates: estimates
                        .iter()
                        .map(|(name, est)| (name.to_string(), est[0][x]))
                        .collect(),
                })
                .collect()
        }
        _ => Vec::new(),
    };

    let training = TrainingSummary {
        parameters: ck.params.len(),
        epochs: ck.history.len(),
        best_epoch: ck.best_epoch,
        best_val_loss: ck.history.get(ck.best_epoch).map(|e| e.val_loss),
        final_train_loss: ck.history.last().map(|e| e.train_loss),
    };

    let hash = cfg.hash();
    Ok(Report {
        provenance: Provenance {
            experiment: cfg.experiment.name().to_string(),
            config_hash: hash.clone(),
            seed: cfg.seed,
            shots: cfg.dataset.shots,
            versions: versions(),
            levels: data.levels.clone(),
            cdr_level: data.baselines.cdr_level,
            na_train: data.na_train.len(),
            na_val: data.na_val.len(),
            em_test: test.len(),
        },
        metrics: Metrics {
            experiment: cfg.experiment.name().to_string(),
            config_hash: hash,
            primary_metric: match kind {
                StatKind::Scalar => "mae",
                StatKind::Distribution => "kl",
                StatKind::Grid(_) => "fidelity",
            }
            .to_string(),
            methods,
            noisy_by_level,
            by_g,
            fidelity_by_time,
            distribution,
            training,
        },
        samples,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn method_columns(rows: impl Iterator<Item = BTreeMap<String, f64>>) -> Vec<String> {
    let mut names: Vec<String> = rows.flat_map(|m| m.into_keys()).collect();
    names.sort();
    names.dedup();
    names
}

fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `report.json`, `metrics.json` and the plot-data CSVs under `dir`.
pub fn write_all(dir: &Path, report: &Report) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.json"), serde_json::to_vec_pretty(report)?)?;
    std::fs::write(
        dir.join("metrics.json"),
        serde_json::to_vec_pretty(&report.metrics)?,
    )?;
    let m = &report.metrics;
    let s = |x: &str| x.to_string();

    let rows: Vec<Vec<String>> = m
        .methods
        .iter()
        .map(|r| {
            vec![
                r.method.clone(),
                r.mae.to_string(),
                opt(r.kl),
                opt(r.fidelity),
            ]
        })
        .collect();
    write_csv(
        &dir.join("methods.csv"),
        &[s("method"), s("mae"), s("kl"), s("fidelity")],
        &rows,
    )?;

    let rows: Vec<Vec<String>> = m
        .noisy_by_level
        .iter()
        .map(|r| vec![r.level.to_string(), r.mae.to_string(), opt(r.kl)])
        .collect();
    write_csv(
        &dir.join("mae_by_level.csv"),
        &[s("level"), s("noisy_mae"), s("noisy_kl")],
        &rows,
    )?;

    if !m.by_g.is_empty() {
        let names = method_columns(m.by_g.iter().map(|r| r.mae.clone()));
        let mut header = vec![s("g"), s("samples")];
        header.extend(names.iter().cloned());
        let rows: Vec<Vec<String>> = m
            .by_g
            .iter()
            .map(|r| {
                let mut row = vec![r.g.to_string(), r.samples.to_string()];
                row.extend(names.iter().map(|n| opt(r.mae.get(n).copied())));
                row
            })
            .collect();
        write_csv(&dir.join("mae_by_g.csv"), &header, &rows)?;
    }
    if !m.fidelity_by_time.is_empty() {
        let names = method_columns(m.fidelity_by_time.iter().map(|r| r.fidelity.clone()));
        let mut header = vec![s("t")];
        header.extend(names.iter().cloned());
        let rows: Vec<Vec<String>> = m
            .fidelity_by_time
            .iter()
            .map(|r| {
                let mut row = vec![r.t.to_string()];
                row.extend(names.iter().map(|n| opt(r.fidelity.get(n).copied())));
                row
            })
            .collect();
        write_csv(&dir.join("fidelity_by_time.csv"), &header, &rows)?;
    }
    if !m.distribution.is_empty() {
        let names = method_columns(m.distribution.iter().map(|r| r.estimates.clone()));
        let mut header = vec![s("bitstring"), s("ideal")];
        header.extend(names.iter().cloned());
        let rows: Vec<Vec<String>> = m
            .distribution
            .iter()
            .map(|r| {
                let mut row = vec![r.bitstring.clone(), r.ideal.to_string()];
                row.extend(names.iter().map(|n| opt(r.estimates.get(n).copied())));
                row
            })
            .collect();
        write_csv(&dir.join("distribution.csv"), &header, &rows)?;
    }
    Ok(())
}

/// Human-readable comparison table.
pub fn summary_table(m: &Metrics) -> String {
    let mut out = format!(
        "{:<18} {:>12} {:>12} {:>12}\n",
        "method", "mae", "kl", "fidelity"
    );
    let f = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_else(|| "-".into());
    for r in &m.methods {
        out.push_str(&format!(
            "{:<18} {:>12.6} {:>12} {:>12}\n",
            r.method,
            r.mae,
            f(r.kl),
            f(r.fidelity)
        ));
    }
    out
}
