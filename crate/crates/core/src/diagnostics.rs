//! Convergence diagnostics on stored chains: acceptance-rate tables, trace
//! extraction, and split-chain potential scale reduction.

use crate::error::{Error, Result};
use crate::sampler::{AcceptanceRecord, ChainDump};
use crate::stats::split_rhat;

/// Diagnostics computed from one stored chain.
#[derive(Debug, Clone)]
pub struct DiagnosticsBundle {
    /// One row per latent coordinate (g, i, j), j in 2..=q.
    pub acceptance: Vec<AcceptanceRecord>,
    /// Requested scalar traces, exactly as stored.
    pub traces: Vec<(String, Vec<f64>)>,
    /// Split-chain potential scale reduction per stored scalar;
    /// `None` marks degenerate (constant or too-short) traces.
    pub rhat: Vec<(String, Option<f64>)>,
}

/// Build the diagnostics bundle. `trace_coords` selects the traces to
/// extract; an empty selection falls back to the variance components.
pub fn diagnose(dump: &ChainDump, trace_coords: &[String]) -> Result<DiagnosticsBundle> {
    if dump.draws.is_empty() {
        return Err(Error::usage("diagnostics need a nonempty chain"));
    }

    let defaults: Vec<String> = dump
        .names
        .iter()
        .filter(|n| n.starts_with("lambda") || n.starts_with("sigma2"))
        .cloned()
        .collect();
    let selected: Vec<String> = if trace_coords.is_empty() {
        defaults
    } else {
        trace_coords.to_vec()
    };

    let mut traces = Vec::with_capacity(selected.len());
    for name in &selected {
        traces.push((name.clone(), dump.trace(name)?));
    }

    let mut rhat = Vec::with_capacity(dump.names.len());
    for (idx, name) in dump.names.iter().enumerate() {
        let trace: Vec<f64> = dump.draws.iter().map(|row| row[idx]).collect();
        rhat.push((name.clone(), split_rhat(&trace)));
    }

    Ok(DiagnosticsBundle {
        acceptance: dump.acceptance.clone(),
        traces,
        rhat,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::Bases;
    use crate::model::{Curve, FunctionalDataset, Hyperparams};
    use crate::sampler::{run_chain, SamplerConfig};
    use crate::stats::unit_grid;
    use crate::warping::elicit_identity;

    fn small_dump() -> ChainDump {
        let bases = Bases::cubic(4, 4, 4).unwrap();
        let hyper = Hyperparams {
            a_lambda: 3.0,
            b_lambda: 3.0,
            a_gamma: 3.0,
            b_gamma: 3.0,
            a_eps: 3.0,
            b_eps: 3.0,
            warp: elicit_identity(&bases.warp, 3.0).unwrap(),
        };
        let times = unit_grid(15);
        let data = FunctionalDataset::new(
            vec![vec![Curve {
                times: times.clone(),
                values: times.iter().map(|&t| (2.0 * t).sin()).collect(),
            }]],
            0.0,
            1.0,
        )
        .unwrap();
        let config = SamplerConfig {
            n_iter: 60,
            burn_in: 20,
            seed: 8,
            ..Default::default()
        };
        run_chain(&data, &hyper, &bases, &config).unwrap().dump()
    }

    #[test]
    fn acceptance_table_has_one_row_per_coordinate() {
        let dump = small_dump();
        let bundle = diagnose(&dump, &[]).unwrap();
        // one curve, q=4: coordinates j = 2, 3, 4
        assert_eq!(bundle.acceptance.len(), 3);
        let js: Vec<usize> = bundle.acceptance.iter().map(|r| r.j).collect();
        assert_eq!(js, vec![2, 3, 4]);
        for r in &bundle.acceptance {
            assert!(r.proposals > 0);
        }
    }

    #[test]
    fn traces_match_stored_draws_exactly() {
        let dump = small_dump();
        let bundle = diagnose(&dump, &["lambda".to_string(), "sigma2_eps".to_string()]).unwrap();
        let lambda_idx = dump.names.iter().position(|n| n == "lambda").unwrap();
        for (row, &v) in dump.draws.iter().zip(&bundle.traces[0].1) {
            assert_eq!(row[lambda_idx], v);
        }
    }

    #[test]
    fn constant_chain_reports_degenerate_rhat_without_crashing() {
        let mut dump = small_dump();
        let first = dump.draws[0].clone();
        dump.draws = vec![first; 24];
        let bundle = diagnose(&dump, &[]).unwrap();
        for (name, r) in &bundle.rhat {
            assert!(r.is_none(), "coordinate {name} gave rhat {r:?}");
        }
    }

    #[test]
    fn empty_chain_is_usage_error() {
        let mut dump = small_dump();
        dump.draws.clear();
        assert!(matches!(diagnose(&dump, &[]), Err(Error::Usage(_))));
    }
}
