//! Closed-form full conditionals of the grouped model: Gaussian updates for
//! the spline coefficient blocks and inverse-gamma updates for the variance
//! components.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::basis::Bases;
use crate::error::{Error, Result};
use crate::model::{FunctionalDataset, ModelState};
use crate::warping::warp_eval;

/// A Gaussian full conditional in precision form: the mean and the Cholesky
/// factor of the precision matrix.
pub struct GaussianConditional {
    mean: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
}

impl GaussianConditional {
    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    /// Dense covariance matrix (the precision inverse). Intended for tests
    /// and small toys, not hot paths.
    pub fn covariance(&self) -> DMatrix<f64> {
        self.chol.inverse()
    }

    /// Draw x = mean + L^{-T} z with the precision factored as L L^T.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let n = self.mean.len();
        let l = self.chol.l_dirty();
        let mut x = vec![0.0; n];
        for i in 0..n {
            x[i] = StandardNormal.sample(rng);
        }
        // back substitution: solve L^T u = z in place
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in (i + 1)..n {
                acc -= l[(j, i)] * x[j];
            }
            x[i] = acc / l[(i, i)];
        }
        for i in 0..n {
            x[i] += self.mean[i];
        }
        x
    }
}

/// Cholesky of a precision matrix with escalating diagonal jitter
/// (base, base*100, base*10000) before reporting failure.
pub(crate) fn cholesky_with_jitter(
    precision: &DMatrix<f64>,
    base_jitter: f64,
) -> Result<Cholesky<f64, Dyn>> {
    if let Some(c) = Cholesky::new(precision.clone()) {
        return Ok(c);
    }
    for level in 0..3 {
        let jitter = base_jitter * 100f64.powi(level);
        let mut bumped = precision.clone();
        for d in 0..bumped.nrows() {
            bumped[(d, d)] += jitter;
        }
        if let Some(c) = Cholesky::new(bumped) {
            return Ok(c);
        }
    }
    Err(Error::numerical(format!(
        "precision matrix not positive definite after jitter up to {}",
        base_jitter * 1e4
    )))
}

/// Assemble a Gaussian conditional from prior precision, prior
/// precision-times-mean, and per-observation local design contributions.
pub(crate) struct GaussianAccumulator {
    precision: DMatrix<f64>,
    rhs: DVector<f64>,
}

impl GaussianAccumulator {
    pub fn new(prior_precision: DMatrix<f64>) -> Self {
        let n = prior_precision.nrows();
        GaussianAccumulator {
            precision: prior_precision,
            rhs: DVector::zeros(n),
        }
    }

    /// Add one observation with local design row and residual target,
    /// scaled by the noise precision.
    #[inline]
    pub fn add_observation(
        &mut self,
        row: &crate::basis::LocalRow,
        target: f64,
        noise_precision: f64,
    ) {
        for r in 0..row.len {
            let vr = row.vals[r] * noise_precision;
            let ir = row.start + r;
            self.rhs[ir] += vr * target;
            for c in r..row.len {
                let ic = row.start + c;
                self.precision[(ir, ic)] += vr * row.vals[c];
            }
        }
    }

    pub fn finish(mut self, jitter: f64) -> Result<GaussianConditional> {
        // observations filled only the upper triangle of their local blocks
        let n = self.precision.nrows();
        for r in 0..n {
            for c in (r + 1)..n {
                self.precision[(c, r)] = self.precision[(r, c)];
            }
        }
        let chol = cholesky_with_jitter(&self.precision, jitter)?;
        let mean = chol.solve(&self.rhs);
        Ok(GaussianConditional { mean, chol })
    }
}

/// Full conditional of the group shape coefficients for group `g`:
/// prior precision Omega/lambda plus the warped-design Gram matrix over all
/// curves of the group, centered on the individual-term residuals.
pub fn fc_beta(
    state: &ModelState,
    dataset: &FunctionalDataset,
    bases: &Bases,
    g: usize,
    jitter: f64,
) -> Result<GaussianConditional> {
    let prior_precision = bases.penalty.matrix() / state.lambda;
    let mut acc = GaussianAccumulator::new(prior_precision);
    let noise_precision = 1.0 / state.sigma2_eps;
    for (i, curve) in dataset.group(g).iter().enumerate() {
        let warped = warp_eval(&state.warps[g][i].phi, &bases.warp, &curve.times)?;
        for (idx, &w) in warped.iter().enumerate() {
            let row_b = bases.group.eval_local(w)?;
            let row_g = bases.individual.eval_local(w)?;
            let target = curve.values[idx] - row_g.dot(&state.gamma[g][i]);
            acc.add_observation(&row_b, target, noise_precision);
        }
    }
    acc.finish(jitter)
}

/// Full conditional of the individual shape coefficients for curve (g, i):
/// ridge prior I/sigma2_gamma plus the individual design, centered on the
/// group-term residuals.
pub fn fc_gamma(
    state: &ModelState,
    dataset: &FunctionalDataset,
    bases: &Bases,
    g: usize,
    i: usize,
    jitter: f64,
) -> Result<GaussianConditional> {
    let k = bases.individual.dim();
    let prior_precision = DMatrix::identity(k, k) / state.sigma2_gamma;
    let mut acc = GaussianAccumulator::new(prior_precision);
    let noise_precision = 1.0 / state.sigma2_eps;
    let curve = dataset.curve(g, i);
    let warped = warp_eval(&state.warps[g][i].phi, &bases.warp, &curve.times)?;
    for (idx, &w) in warped.iter().enumerate() {
        let row_b = bases.group.eval_local(w)?;
        let row_g = bases.individual.eval_local(w)?;
        let target = curve.values[idx] - row_b.dot(&state.beta[g]);
        acc.add_observation(&row_g, target, noise_precision);
    }
    acc.finish(jitter)
}

/// Parameters of an inverse-gamma full conditional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvGammaParams {
    pub shape: f64,
    pub rate: f64,
}

impl InvGammaParams {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        let gamma = Gamma::new(self.shape, 1.0 / self.rate).map_err(|e| {
            Error::numerical(format!(
                "inverse-gamma update with shape {} rate {}: {e}",
                self.shape, self.rate
            ))
        })?;
        let g: f64 = gamma.sample(rng);
        if g <= 0.0 || !g.is_finite() {
            return Err(Error::numerical(format!(
                "inverse-gamma update produced gamma draw {g}"
            )));
        }
        Ok(1.0 / g)
    }
}

/// Full conditional of the random-walk variance: shape grows by G*p/2 and
/// the rate accumulates the penalty quadratic forms of all groups.
pub fn fc_lambda(state: &ModelState, bases: &Bases, a_lambda: f64, b_lambda: f64) -> InvGammaParams {
    let n_groups = state.beta.len() as f64;
    let p = bases.group.dim() as f64;
    let quad: f64 = state
        .beta
        .iter()
        .map(|b| bases.penalty.quad_form(b))
        .sum();
    InvGammaParams {
        shape: a_lambda + n_groups * p / 2.0,
        rate: b_lambda + 0.5 * quad,
    }
}

/// Full conditional of the individual-shape variance: shape grows by N*k/2
/// and the rate accumulates the squared norms of all individual coefficient
/// vectors.
pub fn fc_sigma_gamma(state: &ModelState, a_gamma: f64, b_gamma: f64) -> InvGammaParams {
    let mut count = 0usize;
    let mut quad = 0.0;
    let mut k = 0usize;
    for group in &state.gamma {
        for gamma in group {
            count += 1;
            k = gamma.len();
            quad += gamma.iter().map(|&v| v * v).sum::<f64>();
        }
    }
    InvGammaParams {
        shape: a_gamma + (count * k) as f64 / 2.0,
        rate: b_gamma + 0.5 * quad,
    }
}

/// Full conditional of the noise variance: shape grows by half the total
/// observation count and the rate by half the total squared residual
/// against the warped means.
pub fn fc_sigma_eps(
    state: &ModelState,
    dataset: &FunctionalDataset,
    bases: &Bases,
    a_eps: f64,
    b_eps: f64,
) -> Result<InvGammaParams> {
    let mut rss = 0.0;
    for (g, i, curve) in dataset.iter_curves() {
        let fitted = crate::model::warped_mean(state, bases, g, i, &curve.times)?;
        rss += curve
            .values
            .iter()
            .zip(&fitted)
            .map(|(&y, &m)| (y - m) * (y - m))
            .sum::<f64>();
    }
    Ok(InvGammaParams {
        shape: a_eps + dataset.n_observations() as f64 / 2.0,
        rate: b_eps + 0.5 * rss,
    })
}
