//! Runtime selection of registration models.
//!
//! Both fitters live behind one trait keyed by name: "grouped" is the
//! hierarchical model with group and individual spline terms, "shiftscale"
//! the single-shape comparison model. The harness and the CLI pick a model
//! from configuration and otherwise treat them identically.

use crate::baseline::{baseline_fit, BaselineBases, BaselineHyper, BaselineState};
use crate::basis::Bases;
use crate::error::{Error, Result};
use crate::model::{register_curve, FunctionalDataset, Hyperparams};
use crate::sampler::{
    posterior_summary, run_chain, Chain, ChainDump, GroupCurveBand, SamplerConfig, SummaryBundle,
};
use crate::stats::empirical_quantile;
use crate::warping::{
    default_concentration, elicit_identity, warp_eval, WarpHyper, DEFAULT_RATE,
};

/// Everything needed to fit either model to a normalized dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct FitSettings {
    /// Group-shape dimension of the grouped model.
    pub p: usize,
    /// Individual-shape dimension of the grouped model.
    pub k: usize,
    /// Warp dimension (both models).
    pub q: usize,
    /// Shape dimension of the shift/scale model.
    pub baseline_p: usize,
    /// Total shape mass of the identity-centered warping prior;
    /// `None` picks the smallest value keeping all shapes at 1 or above.
    pub warp_concentration: Option<f64>,
    pub warp_rate: f64,
    pub a_lambda: f64,
    pub b_lambda: f64,
    pub a_gamma: f64,
    pub b_gamma: f64,
    pub a_eps: f64,
    pub b_eps: f64,
    /// Priors specific to the shift/scale model.
    pub scale_mean_loc: f64,
    pub scale_mean_var: f64,
    pub shift_mean_loc: f64,
    pub shift_mean_var: f64,
    pub a_scale: f64,
    pub b_scale: f64,
    pub a_shift: f64,
    pub b_shift: f64,
    pub sampler: SamplerConfig,
}

impl FitSettings {
    /// Dimensions and hyperparameters used for the knee-data-scale runs.
    pub fn production_defaults() -> Self {
        FitSettings {
            p: 23,
            k: 8,
            q: 10,
            baseline_p: 14,
            warp_concentration: None,
            warp_rate: DEFAULT_RATE,
            a_lambda: 1200.0,
            b_lambda: 3500.0,
            a_gamma: 1000.0,
            b_gamma: 2000.0,
            a_eps: 3000.0,
            b_eps: 5000.0,
            scale_mean_loc: 1.0,
            scale_mean_var: 4.0,
            shift_mean_loc: 0.0,
            shift_mean_var: 25.0,
            a_scale: 2.0,
            b_scale: 1.0,
            a_shift: 2.0,
            b_shift: 2.0,
            sampler: SamplerConfig::default(),
        }
    }

    /// Desk-scale simulation settings: the generating dimensions of the
    /// benchmark settings with weakly informative priors (the production
    /// hyperparameters are calibrated to a different data scale) and short
    /// chains.
    pub fn desk_sim() -> Self {
        FitSettings {
            p: 13,
            k: 7,
            q: 10,
            baseline_p: 14,
            warp_concentration: None,
            warp_rate: DEFAULT_RATE,
            a_lambda: 2.0,
            b_lambda: 2.0,
            a_gamma: 2.0,
            b_gamma: 2.0,
            a_eps: 2.0,
            b_eps: 1.0,
            scale_mean_loc: 1.0,
            scale_mean_var: 4.0,
            shift_mean_loc: 0.0,
            shift_mean_var: 25.0,
            a_scale: 2.0,
            b_scale: 1.0,
            a_shift: 2.0,
            b_shift: 2.0,
            sampler: SamplerConfig {
                n_iter: 4500,
                burn_in: 1500,
                thin: 1,
                seed: 17,
                ..Default::default()
            },
        }
    }

    pub fn warp_hyper_for(&self, basis_h: &crate::basis::SplineBasis) -> Result<WarpHyper> {
        let conc = self
            .warp_concentration
            .unwrap_or_else(|| default_concentration(basis_h));
        elicit_identity(basis_h, conc)?.with_rate(self.warp_rate)
    }

    pub fn grouped_bases(&self) -> Result<Bases> {
        Bases::cubic(self.p, self.k, self.q)
    }

    pub fn grouped_hyper(&self, bases: &Bases) -> Result<Hyperparams> {
        Ok(Hyperparams {
            a_lambda: self.a_lambda,
            b_lambda: self.b_lambda,
            a_gamma: self.a_gamma,
            b_gamma: self.b_gamma,
            a_eps: self.a_eps,
            b_eps: self.b_eps,
            warp: self.warp_hyper_for(&bases.warp)?,
        })
    }

    pub fn baseline_bases(&self) -> Result<BaselineBases> {
        BaselineBases::cubic(self.baseline_p, self.q)
    }

    pub fn baseline_hyper(&self, bases: &BaselineBases) -> Result<BaselineHyper> {
        Ok(BaselineHyper {
            a_lambda: self.a_lambda,
            b_lambda: self.b_lambda,
            a_eps: self.a_eps,
            b_eps: self.b_eps,
            scale_mean_loc: self.scale_mean_loc,
            scale_mean_var: self.scale_mean_var,
            shift_mean_loc: self.shift_mean_loc,
            shift_mean_var: self.shift_mean_var,
            a_scale: self.a_scale,
            b_scale: self.b_scale,
            a_shift: self.a_shift,
            b_shift: self.b_shift,
            warp: self.warp_hyper_for(&bases.warp)?,
        })
    }

    /// Configuration smells worth surfacing before a fit. An individual
    /// basis nearly as rich as the group basis lets the smoother absorb
    /// phase variation, leaving nothing for the warps to align.
    pub fn dimension_warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.k >= self.p {
            out.push(format!(
                "individual basis dimension k={} is not below group dimension p={}; \
                 the individual smoother can absorb the misalignment and curves may \
                 not be aligned at all. Choose p well above k.",
                self.k, self.p
            ));
        } else if self.k as f64 > 0.8 * self.p as f64 {
            out.push(format!(
                "individual basis dimension k={} is close to group dimension p={}; \
                 the smoothed curves can fit the data so well that curves are \
                 not aligned at all. Choose p well above k.",
                self.k, self.p
            ));
        }
        out
    }
}

/// A registration model selectable by name.
pub trait RegistrationModel: Send + Sync {
    fn name(&self) -> &'static str;
    /// Whether one fit can pool several groups. When false, the comparison
    /// protocol fits each group separately and averages the errors.
    fn pools_groups(&self) -> bool;
    /// Fit a normalized dataset and return the flat chain.
    fn fit(&self, dataset: &FunctionalDataset, settings: &FitSettings) -> Result<ChainDump>;
    /// Posterior summary (common curves, mean warps, registered curves)
    /// from a flat chain.
    fn summarize(
        &self,
        dump: &ChainDump,
        dataset: &FunctionalDataset,
        grid: &[f64],
        level: f64,
    ) -> Result<SummaryBundle>;
}

/// The grouped hierarchical model.
pub struct GroupedModel;

impl RegistrationModel for GroupedModel {
    fn name(&self) -> &'static str {
        "grouped"
    }

    fn pools_groups(&self) -> bool {
        true
    }

    fn fit(&self, dataset: &FunctionalDataset, settings: &FitSettings) -> Result<ChainDump> {
        let bases = settings.grouped_bases()?;
        let hyper = settings.grouped_hyper(&bases)?;
        let chain = run_chain(dataset, &hyper, &bases, &settings.sampler)?;
        Ok(chain.dump())
    }

    fn summarize(
        &self,
        dump: &ChainDump,
        dataset: &FunctionalDataset,
        grid: &[f64],
        level: f64,
    ) -> Result<SummaryBundle> {
        let bases = Bases::cubic(dump.dims.p, dump.dims.k, dump.dims.q)?;
        let chain = Chain {
            draws: dump.to_model_states()?,
            acceptance: dump.acceptance.clone(),
            config: dump.config.clone(),
            dims: dump.dims.clone(),
            source_domain: dump.source_domain,
            model: dump.model.clone(),
            abort_reason: dump.abort_reason.clone(),
        };
        posterior_summary(&chain, &bases, dataset, grid, level)
    }
}

/// The single-shape shift/scale comparison model.
pub struct ShiftScaleModel;

impl RegistrationModel for ShiftScaleModel {
    fn name(&self) -> &'static str {
        "shiftscale"
    }

    fn pools_groups(&self) -> bool {
        false
    }

    fn fit(&self, dataset: &FunctionalDataset, settings: &FitSettings) -> Result<ChainDump> {
        let bases = settings.baseline_bases()?;
        let hyper = settings.baseline_hyper(&bases)?;
        let chain = baseline_fit(dataset, &hyper, &bases, &settings.sampler)?;
        Ok(chain.dump())
    }

    fn summarize(
        &self,
        dump: &ChainDump,
        dataset: &FunctionalDataset,
        grid: &[f64],
        level: f64,
    ) -> Result<SummaryBundle> {
        if dump.dims.n_groups != 1 {
            return Err(Error::validation(
                "shift/scale chains always hold a single group",
            ));
        }
        let bases = BaselineBases::cubic(dump.dims.p, dump.dims.q)?;
        let states: Vec<BaselineState> = dump
            .draws
            .iter()
            .map(|row| BaselineState::from_flat(&dump.dims, row))
            .collect::<Result<_>>()?;
        if states.is_empty() {
            return Err(Error::usage("posterior summary of an empty chain"));
        }
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::usage(format!(
                "credible level must lie in (0,1), got {level}"
            )));
        }
        let lo_q = (1.0 - level) / 2.0;
        let hi_q = 1.0 - lo_q;

        // population curve per draw: scale_mean * shape + shift_mean
        let design = bases.shape.eval_design(grid)?;
        let mut mean = vec![0.0; grid.len()];
        let mut per_point: Vec<Vec<f64>> = vec![Vec::with_capacity(states.len()); grid.len()];
        for s in &states {
            for (idx, slot) in per_point.iter_mut().enumerate() {
                let mut v = 0.0;
                for j in 0..dump.dims.p {
                    v += design[(idx, j)] * s.beta[j];
                }
                let v = s.scale_mean * v + s.shift_mean;
                slot.push(v);
                mean[idx] += v;
            }
        }
        let mut lower = Vec::with_capacity(grid.len());
        let mut upper = Vec::with_capacity(grid.len());
        for (idx, slot) in per_point.iter_mut().enumerate() {
            mean[idx] /= states.len() as f64;
            slot.sort_by(|a, b| a.partial_cmp(b).unwrap());
            lower.push(empirical_quantile(slot, lo_q)?);
            upper.push(empirical_quantile(slot, hi_q)?);
        }

        let n = dump.dims.n_curves();
        let mut mean_warps = Vec::with_capacity(n);
        let mut warp_curves = Vec::with_capacity(n);
        let mut registered = Vec::with_capacity(n);
        for i in 0..n {
            let phis: Vec<&crate::warping::WarpCoeffs> =
                states.iter().map(|s| &s.warps[i].phi).collect();
            let phi = crate::sampler::summary::mean_warp(&phis)?;
            warp_curves.push(warp_eval(&phi, &bases.warp, grid)?);
            registered.push(register_curve(dataset.curve(0, i), &phi, &bases.warp, grid)?);
            mean_warps.push(phi);
        }

        Ok(SummaryBundle {
            grid: grid.to_vec(),
            common: vec![GroupCurveBand { mean, lower, upper }],
            mean_warps: vec![mean_warps],
            warp_curves: vec![warp_curves],
            registered: vec![registered],
        })
    }
}

static GROUPED: GroupedModel = GroupedModel;
static SHIFTSCALE: ShiftScaleModel = ShiftScaleModel;

/// All registered models.
pub fn registry() -> [&'static dyn RegistrationModel; 2] {
    [&GROUPED, &SHIFTSCALE]
}

/// Look a model up by its registered name.
pub fn lookup(name: &str) -> Result<&'static dyn RegistrationModel> {
    registry()
        .into_iter()
        .find(|m| m.name() == name)
        .ok_or_else(|| {
            let known: Vec<&str> = registry().iter().map(|m| m.name()).collect();
            Error::usage(format!(
                "unknown model '{name}'; available: {}",
                known.join(", ")
            ))
        })
}
