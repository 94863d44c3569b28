//! Metropolis-Hastings update of the warp latents with adaptive proposal
//! scaling.
//!
//! Each latent coordinate moves by a Gaussian random walk on the log scale;
//! the acceptance ratio combines the curve likelihood, the gamma prior, and
//! the log-scale proposal Jacobian, all computed in the log domain. During
//! burn-in the per-coordinate scale follows a diminishing Robbins-Monro
//! recursion toward a target acceptance rate and is frozen afterwards.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::basis::{Bases, LocalRow, SplineBasis};
use crate::error::Result;
use crate::model::{Curve, FunctionalDataset, Hyperparams, ModelState, Warp};
use crate::warping::xi_to_phi;

/// Probability of proposing a fresh draw from the latent's prior instead of
/// a random-walk move. Prior proposals make the large coordinated jumps a
/// coordinate-wise walk cannot, letting chains escape misaligned local
/// modes; the acceptance ratio reduces to the likelihood ratio.
pub const INDEPENDENCE_WEIGHT: f64 = 0.1;

/// Precomputed warp-basis rows at a fixed set of observation times; the
/// warp value at time j is `rows[j].dot(phi)`.
#[derive(Debug, Clone)]
pub struct WarpRowCache {
    rows: Vec<LocalRow>,
}

impl WarpRowCache {
    pub fn build(basis_h: &SplineBasis, times: &[f64]) -> Result<Self> {
        Ok(WarpRowCache {
            rows: times
                .iter()
                .map(|&t| basis_h.eval_local(t))
                .collect::<Result<_>>()?,
        })
    }

    #[inline]
    pub fn warped(&self, idx: usize, phi: &[f64]) -> f64 {
        self.rows[idx].dot(phi).clamp(0.0, 1.0)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Bounds on the adapted log proposal scale.
const LOG_SCALE_MIN: f64 = -9.2;
const LOG_SCALE_MAX: f64 = 2.3;

/// Per-coordinate proposal scales with Robbins-Monro batch adaptation.
#[derive(Debug, Clone)]
pub struct AdaptScales {
    log_scale: Vec<Vec<Vec<f64>>>,
    batch_alpha: Vec<Vec<Vec<f64>>>,
    batch_n: Vec<Vec<Vec<u32>>>,
    batches_done: Vec<Vec<Vec<u32>>>,
    window: u32,
    target: f64,
}

impl AdaptScales {
    /// One scale per free latent coordinate of each curve.
    pub fn new(curves_per_group: &[usize], q: usize, initial_scale: f64, window: usize, target: f64) -> Self {
        let shape = |fill: f64| -> Vec<Vec<Vec<f64>>> {
            curves_per_group
                .iter()
                .map(|&n| vec![vec![fill; q - 1]; n])
                .collect()
        };
        let counts = |fill: u32| -> Vec<Vec<Vec<u32>>> {
            curves_per_group
                .iter()
                .map(|&n| vec![vec![fill; q - 1]; n])
                .collect()
        };
        AdaptScales {
            log_scale: shape(initial_scale.ln()),
            batch_alpha: shape(0.0),
            batch_n: counts(0),
            batches_done: counts(0),
            window: window as u32,
            target,
        }
    }

    #[inline]
    pub fn scale(&self, g: usize, i: usize, coord: usize) -> f64 {
        self.log_scale[g][i][coord - 1].exp()
    }

    /// Record one realized acceptance probability and, at batch boundaries,
    /// move the log scale toward the target with a step decaying as
    /// 1/t^0.6 in the batch counter.
    pub(crate) fn record(&mut self, g: usize, i: usize, coord: usize, alpha: f64) {
        let c = coord - 1;
        self.batch_alpha[g][i][c] += alpha;
        self.batch_n[g][i][c] += 1;
        if self.batch_n[g][i][c] >= self.window {
            let mean_alpha = self.batch_alpha[g][i][c] / self.batch_n[g][i][c] as f64;
            self.batches_done[g][i][c] += 1;
            let step = (self.batches_done[g][i][c] as f64).powf(-0.6);
            let ls = &mut self.log_scale[g][i][c];
            *ls = (*ls + step * (mean_alpha - self.target)).clamp(LOG_SCALE_MIN, LOG_SCALE_MAX);
            self.batch_alpha[g][i][c] = 0.0;
            self.batch_n[g][i][c] = 0;
        }
    }
}

/// Residual sum of squares of one curve under a given warp and coefficient
/// pair, fused into a single pass over the observations.
pub(crate) fn warped_rss(
    curve: &Curve,
    warp: &Warp,
    beta: &[f64],
    gamma: &[f64],
    bases: &Bases,
    cache: &WarpRowCache,
) -> Result<f64> {
    let phi = warp.phi.values();
    let mut rss = 0.0;
    for idx in 0..curve.times.len() {
        let w = cache.warped(idx, phi);
        let m = bases.group.eval_dot(w, beta)? + bases.individual.eval_dot(w, gamma)?;
        let r = curve.values[idx] - m;
        rss += r * r;
    }
    Ok(rss)
}

/// How a proposal was generated; scale adaptation listens only to the
/// random-walk component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ProposalKind {
    Walk,
    Independence,
}

/// Outcome of one proposal.
pub(crate) struct ProposalOutcome {
    pub accepted: bool,
    /// min(1, exp(log ratio)); 0 when the proposal was auto-rejected.
    pub alpha: f64,
    pub kind: ProposalKind,
}

/// One MH update of a single latent coordinate: with probability
/// `independence_weight` the candidate is a fresh prior draw (acceptance
/// reduces to the likelihood ratio), otherwise a Gaussian random walk on
/// the log scale with the usual prior and Jacobian terms. `rss_of`
/// evaluates the curve's residual sum of squares under a candidate warp;
/// `cur_rss` holds the current value and is updated in place on acceptance.
#[allow(clippy::too_many_arguments)]
pub(crate) fn propose_latent_coord<R, F>(
    warp: &mut Warp,
    coord: usize,
    shape: f64,
    rate: f64,
    sigma2_eps: f64,
    scale: f64,
    independence_weight: f64,
    cur_rss: &mut f64,
    rss_of: F,
    rng: &mut R,
) -> Result<ProposalOutcome>
where
    R: Rng + ?Sized,
    F: FnOnce(&Warp) -> Result<f64>,
{
    let xi_old = warp.xi.values()[coord];
    let take_independence = rng.random::<f64>() < independence_weight;

    let (xi_new, kind, log_prior_and_jacobian) = if take_independence {
        let candidate: f64 = Gamma::new(shape, 1.0 / rate)
            .expect("validated warp prior")
            .sample(rng);
        // prior and proposal densities cancel exactly
        (candidate, ProposalKind::Independence, 0.0)
    } else {
        let z: f64 = {
            let n: f64 = StandardNormal.sample(rng);
            n * scale
        };
        if z == 0.0 {
            // zero-length move: identical state, accepted with probability one
            return Ok(ProposalOutcome {
                accepted: true,
                alpha: 1.0,
                kind: ProposalKind::Walk,
            });
        }
        let xi_new = xi_old * z.exp();
        // the (shape-1) prior exponent and the log-scale proposal Jacobian
        // combine to shape*z
        (
            xi_new,
            ProposalKind::Walk,
            shape * z - rate * (xi_new - xi_old),
        )
    };
    let log_u: f64 = rng.random::<f64>().ln();

    let rejected = |kind| {
        Ok(ProposalOutcome {
            accepted: false,
            alpha: 0.0,
            kind,
        })
    };

    // a degenerate or non-monotone normalization auto-rejects the proposal
    let proposal = match warp
        .xi
        .with_coord(coord, xi_new)
        .and_then(|xi| xi_to_phi(&xi).map(|phi| Warp { xi, phi }))
    {
        Ok(w) => w,
        Err(_) => return rejected(kind),
    };

    let new_rss = rss_of(&proposal)?;
    if !new_rss.is_finite() {
        return rejected(kind);
    }

    let log_ratio = -0.5 * (new_rss - *cur_rss) / sigma2_eps + log_prior_and_jacobian;
    if !log_ratio.is_finite() {
        return rejected(kind);
    }

    let alpha = log_ratio.min(0.0).exp();
    if log_u < log_ratio {
        *warp = proposal;
        *cur_rss = new_rss;
        Ok(ProposalOutcome {
            accepted: true,
            alpha,
            kind,
        })
    } else {
        Ok(ProposalOutcome {
            accepted: false,
            alpha,
            kind,
        })
    }
}

/// Grouped-model proposal for one latent coordinate of curve (g, i).
#[allow(clippy::too_many_arguments)]
pub(crate) fn propose_coord<R: Rng + ?Sized>(
    state: &mut ModelState,
    curve: &Curve,
    bases: &Bases,
    hyper: &Hyperparams,
    g: usize,
    i: usize,
    coord: usize,
    scale: f64,
    independence_weight: f64,
    cache: &WarpRowCache,
    cur_rss: &mut f64,
    rng: &mut R,
) -> Result<ProposalOutcome> {
    let shape = hyper.warp.shapes[coord - 1];
    let rate = hyper.warp.rate;
    let sigma2_eps = state.sigma2_eps;
    let ModelState {
        beta,
        gamma,
        warps,
        ..
    } = state;
    let beta_g = &beta[g];
    let gamma_gi = &gamma[g][i];
    propose_latent_coord(
        &mut warps[g][i],
        coord,
        shape,
        rate,
        sigma2_eps,
        scale,
        independence_weight,
        cur_rss,
        |w| warped_rss(curve, w, beta_g, gamma_gi, bases, cache),
        rng,
    )
}

/// Metropolis-Hastings update of one warp latent, addressed by its position
/// `j` in 2..=q. Recomputes the current curve fit, proposes on the log
/// scale (with the usual prior-independence mixture component), and adapts
/// the proposal scale when `adapt` is set.
pub fn mh_update_xi<R: Rng + ?Sized>(
    state: &mut ModelState,
    dataset: &FunctionalDataset,
    bases: &Bases,
    hyper: &Hyperparams,
    g: usize,
    i: usize,
    j: usize,
    scales: &mut AdaptScales,
    adapt: bool,
    rng: &mut R,
) -> Result<bool> {
    assert!(
        (2..=bases.warp.dim()).contains(&j),
        "warp coordinate position {j} outside 2..=q"
    );
    let coord = j - 1;
    let curve = dataset.curve(g, i);
    let cache = WarpRowCache::build(&bases.warp, &curve.times)?;
    let mut cur_rss = warped_rss(
        curve,
        &state.warps[g][i],
        &state.beta[g],
        &state.gamma[g][i],
        bases,
        &cache,
    )?;
    let scale = scales.scale(g, i, coord);
    let outcome = propose_coord(
        state,
        curve,
        bases,
        hyper,
        g,
        i,
        coord,
        scale,
        INDEPENDENCE_WEIGHT,
        &cache,
        &mut cur_rss,
        rng,
    )?;
    if adapt && outcome.kind == ProposalKind::Walk {
        scales.record(g, i, coord, outcome.alpha);
    }
    Ok(outcome.accepted)
}
