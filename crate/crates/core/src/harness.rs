//! The evaluation harness: L2 alignment error and the replica comparison
//! between the two registered models on both benchmark settings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Curve, FunctionalDataset};
use crate::registry::{lookup, FitSettings, RegistrationModel};
use crate::simulate::{simulate_setting1, simulate_setting2, TruthBundle};
use crate::stats::{interp_linear, trapezoid};

/// L2 distance between two sampled curves: the square root of the
/// trapezoid-rule integral of the squared difference over the grid, with
/// both curves linearly interpolated onto it.
pub fn l2_distance(f: &Curve, g: &Curve, grid: &[f64]) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::usage("l2 distance needs a nonempty grid"));
    }
    if f.is_empty() || g.is_empty() {
        return Err(Error::usage("l2 distance of an empty curve"));
    }
    let sq: Vec<f64> = grid
        .iter()
        .map(|&t| {
            let a = interp_linear(&f.times, &f.values, t);
            let b = interp_linear(&g.times, &g.values, t);
            (a - b) * (a - b)
        })
        .collect();
    Ok(trapezoid(grid, &sq).max(0.0).sqrt())
}

/// Average L2 distance between the unwarped truth and the aligned curves
/// of one group, both evaluated on the truth grid.
fn group_alignment_error(
    truth: &TruthBundle,
    g: usize,
    registered: &[Vec<f64>],
    grid: &[f64],
) -> Result<f64> {
    let n = registered.len();
    let mut total = 0.0;
    for (i, reg) in registered.iter().enumerate() {
        let aligned = Curve {
            times: grid.to_vec(),
            values: reg.clone(),
        };
        let tru = Curve {
            times: truth.grid.clone(),
            values: truth.curves[g][i].clone(),
        };
        total += l2_distance(&tru, &aligned, grid)?;
    }
    Ok(total / n as f64)
}

/// Fit one model to one replica and return its average alignment error.
/// Models that cannot pool groups are fitted per group and the group
/// errors averaged.
pub fn replica_error(
    model: &dyn RegistrationModel,
    data: &FunctionalDataset,
    truth: &TruthBundle,
    settings: &FitSettings,
) -> Result<f64> {
    let grid = truth.grid.clone();
    if model.pools_groups() || data.n_groups() == 1 {
        let dump = model.fit(data, settings)?;
        let summary = model.summarize(&dump, data, &grid, 0.95)?;
        let mut total = 0.0;
        for g in 0..data.n_groups() {
            total += group_alignment_error(truth, g, &summary.registered[g], &grid)?;
        }
        Ok(total / data.n_groups() as f64)
    } else {
        let mut total = 0.0;
        for g in 0..data.n_groups() {
            let single = data.single_group(g)?;
            let dump = model.fit(&single, settings)?;
            let summary = model.summarize(&dump, &single, &grid, 0.95)?;
            total += group_alignment_error(truth, g, &summary.registered[0], &grid)?;
        }
        Ok(total / data.n_groups() as f64)
    }
}

/// Alignment error of the raw (unregistered) data against the truth;
/// the reference point any useful fit must improve on.
pub fn unaligned_error(data: &FunctionalDataset, truth: &TruthBundle) -> Result<f64> {
    let mut total = 0.0;
    let mut count = 0usize;
    for (g, i, curve) in data.iter_curves() {
        let tru = Curve {
            times: truth.grid.clone(),
            values: truth.curves[g][i].clone(),
        };
        total += l2_distance(&tru, curve, &truth.grid)?;
        count += 1;
    }
    Ok(total / count as f64)
}

/// One row of the comparison table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub replica: usize,
    pub model: String,
    pub setting: u8,
    pub error: f64,
}

/// Options of the replica comparison study.
#[derive(Debug, Clone)]
pub struct CompareOptions {
    pub replicas: usize,
    pub settings: Vec<u8>,
    pub master_seed: u64,
    pub fit: FitSettings,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions {
            replicas: 10,
            settings: vec![1, 2],
            master_seed: 20_250_101,
            fit: FitSettings::desk_sim(),
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Deterministic per-replica seed derivation.
pub fn replica_seed(master: u64, setting: u8, replica: usize) -> u64 {
    splitmix64(master ^ ((setting as u64) << 48) ^ replica as u64)
}

/// Generate one replica of a setting.
pub fn generate_replica(setting: u8, seed: u64) -> Result<(FunctionalDataset, TruthBundle)> {
    match setting {
        1 => simulate_setting1(seed),
        2 => simulate_setting2(seed),
        other => Err(Error::usage(format!(
            "unknown setting {other}; available: 1, 2"
        ))),
    }
}

/// Run every registered model on every requested setting for the requested
/// number of replicas, scoring the average L2 distance between the truth
/// and the aligned curves.
pub fn compare_models(options: &CompareOptions) -> Result<Vec<ComparisonRow>> {
    let grouped = lookup("grouped")?;
    let shiftscale = lookup("shiftscale")?;
    let mut rows = Vec::new();
    for &setting in &options.settings {
        for replica in 0..options.replicas {
            let seed = replica_seed(options.master_seed, setting, replica);
            let (data, truth) = generate_replica(setting, seed)?;
            let mut fit = options.fit.clone();
            fit.sampler.seed = splitmix64(seed);
            for model in [grouped, shiftscale] {
                let error = replica_error(model, &data, &truth, &fit)?;
                rows.push(ComparisonRow {
                    replica,
                    model: model.name().to_string(),
                    setting,
                    error,
                });
            }
        }
    }
    Ok(rows)
}

/// Mean error of one model within one setting.
pub fn mean_error(rows: &[ComparisonRow], model: &str, setting: u8) -> f64 {
    let errors: Vec<f64> = rows
        .iter()
        .filter(|r| r.model == model && r.setting == setting)
        .map(|r| r.error)
        .collect();
    crate::stats::mean(&errors)
}

/// Number of replicas of a setting in which `model_a` beat `model_b`.
pub fn wins(rows: &[ComparisonRow], model_a: &str, model_b: &str, setting: u8) -> usize {
    let mut count = 0;
    let replicas: Vec<usize> = rows
        .iter()
        .filter(|r| r.setting == setting)
        .map(|r| r.replica)
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    for rep in replicas {
        let err = |m: &str| {
            rows.iter()
                .find(|r| r.setting == setting && r.replica == rep && r.model == m)
                .map(|r| r.error)
        };
        if let (Some(a), Some(b)) = (err(model_a), err(model_b)) {
            if a < b {
                count += 1;
            }
        }
    }
    count
}
