//! Posterior summaries: common-curve means with pointwise credible bands,
//! posterior-mean warps, and registered curves.

use crate::basis::Bases;
use crate::error::{Error, Result};
use crate::model::{register_curve, FunctionalDataset, ModelState};
use crate::sampler::Chain;
use crate::stats::empirical_quantile;
use crate::warping::{warp_eval, WarpCoeffs};

/// Pointwise posterior mean and credible band of one group's common term.
#[derive(Debug, Clone)]
pub struct GroupCurveBand {
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Plot-ready posterior summary of a fitted grouped model.
#[derive(Debug, Clone)]
pub struct SummaryBundle {
    pub grid: Vec<f64>,
    /// Per group: the common term with its credible band.
    pub common: Vec<GroupCurveBand>,
    /// Per group, per curve: posterior-mean warp coefficients.
    pub mean_warps: Vec<Vec<WarpCoeffs>>,
    /// Per group, per curve: the posterior-mean warp evaluated on the grid.
    pub warp_curves: Vec<Vec<Vec<f64>>>,
    /// Per group, per curve: the observed curve registered through the
    /// inverse posterior-mean warp, on the grid.
    pub registered: Vec<Vec<Vec<f64>>>,
}

/// Average stored warp coefficient vectors; the constraint set is convex,
/// so the mean of valid warps is again a valid warp.
pub fn mean_warp(draws: &[&WarpCoeffs]) -> Result<WarpCoeffs> {
    if draws.is_empty() {
        return Err(Error::usage("mean of zero warps"));
    }
    let q = draws[0].len();
    let mut acc = vec![0.0; q];
    for phi in draws {
        for (a, &v) in acc.iter_mut().zip(phi.values()) {
            *a += v;
        }
    }
    let n = draws.len() as f64;
    for a in acc.iter_mut() {
        *a /= n;
    }
    WarpCoeffs::new(acc)
}

/// Summarize a chain on an output grid at the given credible level.
pub fn posterior_summary(
    chain: &Chain<ModelState>,
    bases: &Bases,
    dataset: &FunctionalDataset,
    grid: &[f64],
    level: f64,
) -> Result<SummaryBundle> {
    if chain.draws.is_empty() {
        return Err(Error::usage("posterior summary of an empty chain"));
    }
    if grid.is_empty() {
        return Err(Error::usage("posterior summary needs a nonempty grid"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::usage(format!(
            "credible level must lie in (0,1), got {level}"
        )));
    }
    let lo_q = (1.0 - level) / 2.0;
    let hi_q = 1.0 - lo_q;
    let n_draws = chain.draws.len();
    let design = bases.group.eval_design(grid)?;

    let mut common = Vec::with_capacity(chain.dims.n_groups);
    for g in 0..chain.dims.n_groups {
        let mut mean = vec![0.0; grid.len()];
        let mut per_point: Vec<Vec<f64>> = vec![Vec::with_capacity(n_draws); grid.len()];
        for draw in &chain.draws {
            let beta = &draw.beta[g];
            for (idx, slot) in per_point.iter_mut().enumerate() {
                let mut v = 0.0;
                for j in 0..bases.group.dim() {
                    v += design[(idx, j)] * beta[j];
                }
                slot.push(v);
                mean[idx] += v;
            }
        }
        let mut lower = Vec::with_capacity(grid.len());
        let mut upper = Vec::with_capacity(grid.len());
        for (idx, slot) in per_point.iter_mut().enumerate() {
            mean[idx] /= n_draws as f64;
            slot.sort_by(|a, b| a.partial_cmp(b).unwrap());
            lower.push(empirical_quantile(slot, lo_q)?);
            upper.push(empirical_quantile(slot, hi_q)?);
        }
        common.push(GroupCurveBand { mean, lower, upper });
    }

    let mut mean_warps = Vec::with_capacity(chain.dims.n_groups);
    let mut warp_curves = Vec::with_capacity(chain.dims.n_groups);
    let mut registered = Vec::with_capacity(chain.dims.n_groups);
    for (g, &n) in chain.dims.curves_per_group.iter().enumerate() {
        let mut group_warps = Vec::with_capacity(n);
        let mut group_curves = Vec::with_capacity(n);
        let mut group_reg = Vec::with_capacity(n);
        for i in 0..n {
            let phis: Vec<&WarpCoeffs> =
                chain.draws.iter().map(|d| &d.warps[g][i].phi).collect();
            let phi = mean_warp(&phis)?;
            group_curves.push(warp_eval(&phi, &bases.warp, grid)?);
            group_reg.push(register_curve(
                dataset.curve(g, i),
                &phi,
                &bases.warp,
                grid,
            )?);
            group_warps.push(phi);
        }
        mean_warps.push(group_warps);
        warp_curves.push(group_curves);
        registered.push(group_reg);
    }

    Ok(SummaryBundle {
        grid: grid.to_vec(),
        common,
        mean_warps,
        warp_curves,
        registered,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Curve, Hyperparams};
    use crate::sampler::{run_chain, SamplerConfig};
    use crate::stats::unit_grid;
    use crate::warping::elicit_identity;

    fn fitted_chain() -> (Chain<ModelState>, Bases, FunctionalDataset) {
        let bases = Bases::cubic(5, 4, 4).unwrap();
        let hyper = Hyperparams {
            a_lambda: 3.0,
            b_lambda: 3.0,
            a_gamma: 3.0,
            b_gamma: 3.0,
            a_eps: 3.0,
            b_eps: 3.0,
            warp: elicit_identity(&bases.warp, 3.0).unwrap(),
        };
        let times = unit_grid(25);
        let groups = vec![vec![
            Curve {
                times: times.clone(),
                values: times.iter().map(|&t| (5.0 * t).cos()).collect(),
            },
            Curve {
                times: times.clone(),
                values: times.iter().map(|&t| (5.0 * t + 0.3).cos()).collect(),
            },
        ]];
        let dataset = FunctionalDataset::new(groups, 0.0, 1.0).unwrap();
        let config = SamplerConfig {
            n_iter: 80,
            burn_in: 30,
            seed: 21,
            ..Default::default()
        };
        let chain = run_chain(&dataset, &hyper, &bases, &config).unwrap();
        (chain, bases, dataset)
    }

    #[test]
    fn degenerate_chain_has_zero_width_bands() {
        let (mut chain, bases, dataset) = fitted_chain();
        let first = chain.draws[0].clone();
        chain.draws = vec![first; 10];
        let grid = unit_grid(20);
        let summary = posterior_summary(&chain, &bases, &dataset, &grid, 0.95).unwrap();
        for band in &summary.common {
            for idx in 0..grid.len() {
                assert!((band.upper[idx] - band.lower[idx]).abs() < 1e-14);
                assert!((band.mean[idx] - band.lower[idx]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mean_of_valid_warps_is_valid() {
        let (chain, _, _) = fitted_chain();
        let phis: Vec<&WarpCoeffs> = chain
            .draws
            .iter()
            .map(|d| &d.warps[0][0].phi)
            .collect();
        let m = mean_warp(&phis).unwrap();
        assert_eq!(m.values()[0], 0.0);
        assert_eq!(*m.values().last().unwrap(), 1.0);
        for w in m.values().windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn band_quantiles_match_independent_routine() {
        let (chain, bases, dataset) = fitted_chain();
        let grid = unit_grid(15);
        let summary = posterior_summary(&chain, &bases, &dataset, &grid, 0.95).unwrap();

        // independent quantile: explicit sort plus (n-1)p interpolation,
        // recomputed from raw draws
        let design = bases.group.eval_design(&grid).unwrap();
        for (idx, _) in grid.iter().enumerate() {
            let mut vals: Vec<f64> = chain
                .draws
                .iter()
                .map(|d| {
                    (0..5)
                        .map(|j| design[(idx, j)] * d.beta[0][j])
                        .sum::<f64>()
                })
                .collect();
            vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let n = vals.len();
            let q_at = |p: f64| -> f64 {
                let h = (n - 1) as f64 * p;
                let lo = h.floor() as usize;
                let hi = (lo + 1).min(n - 1);
                vals[lo] + (h - lo as f64) * (vals[hi] - vals[lo])
            };
            assert!((summary.common[0].lower[idx] - q_at(0.025)).abs() < 1e-12);
            assert!((summary.common[0].upper[idx] - q_at(0.975)).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_chain_is_usage_error() {
        let (mut chain, bases, dataset) = fitted_chain();
        chain.draws.clear();
        let grid = unit_grid(5);
        assert!(matches!(
            posterior_summary(&chain, &bases, &dataset, &grid, 0.95),
            Err(Error::Usage(_))
        ));
    }
}
