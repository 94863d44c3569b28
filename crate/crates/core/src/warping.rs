//! Warping functions and their normalized-gamma prior.
//!
//! A warp is a monotone cubic spline h on [0,1] with h(0)=0 and h(1)=1,
//! parameterized by coefficients that are themselves a normalized cumulative
//! sum of independent gamma latents. The construction makes every draw a
//! valid warp by design: the coefficient vector starts at 0, ends at 1, and
//! is strictly increasing, which is sufficient for strict monotonicity of
//! the spline.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::basis::SplineBasis;
use crate::error::{Error, Result};

/// Default rate of the gamma latents. The law of the normalized coefficients
/// does not depend on it, so it mostly sets the scale of the latent total.
pub const DEFAULT_RATE: f64 = 2.5;

/// Per-curve gamma latents: entry 0 pinned to zero, the rest strictly
/// positive.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpLatent {
    xi: Vec<f64>,
}

impl WarpLatent {
    pub fn new(xi: Vec<f64>) -> Result<Self> {
        if xi.len() < 2 {
            return Err(Error::config(format!(
                "warp latent needs at least 2 entries, got {}",
                xi.len()
            )));
        }
        if xi[0] != 0.0 {
            return Err(Error::invariant(format!(
                "first warp latent must be 0, got {}",
                xi[0]
            )));
        }
        for (j, &v) in xi.iter().enumerate().skip(1) {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invariant(format!(
                    "warp latent {j} must be strictly positive and finite, got {v}"
                )));
            }
        }
        Ok(WarpLatent { xi })
    }

    pub fn values(&self) -> &[f64] {
        &self.xi
    }

    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.xi.iter().sum()
    }

    /// Copy with coordinate `j` (1-based position j+1 in the math) replaced.
    pub fn with_coord(&self, j: usize, value: f64) -> Result<Self> {
        let mut xi = self.xi.clone();
        xi[j] = value;
        WarpLatent::new(xi)
    }
}

/// Warping-spline coefficients: strictly increasing from exactly 0 to
/// exactly 1. Checked at every construction; no operation can emit an
/// invalid warp.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpCoeffs {
    phi: Vec<f64>,
}

impl WarpCoeffs {
    pub fn new(phi: Vec<f64>) -> Result<Self> {
        if phi.len() < 2 {
            return Err(Error::config(format!(
                "warp coefficients need at least 2 entries, got {}",
                phi.len()
            )));
        }
        if phi[0] != 0.0 {
            return Err(Error::invariant(format!(
                "warp coefficients must start at 0, got {}",
                phi[0]
            )));
        }
        if *phi.last().unwrap() != 1.0 {
            return Err(Error::invariant(format!(
                "warp coefficients must end at 1, got {}",
                phi.last().unwrap()
            )));
        }
        for w in phi.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::invariant(format!(
                    "warp coefficients must be strictly increasing, found {} -> {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(WarpCoeffs { phi })
    }

    pub fn values(&self) -> &[f64] {
        &self.phi
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    /// The identity warp for a given basis: coefficients at the Greville
    /// abscissae reproduce h(t) = t exactly.
    pub fn identity(basis_h: &SplineBasis) -> Result<Self> {
        WarpCoeffs::new(basis_h.greville())
    }
}

/// Hyperparameters of the warping prior: gamma shapes for positions 2..q
/// and a common rate.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpHyper {
    /// Shapes a_2..a_q (length q-1).
    pub shapes: Vec<f64>,
    /// Common rate b.
    pub rate: f64,
}

impl WarpHyper {
    pub fn new(shapes: Vec<f64>, rate: f64) -> Result<Self> {
        if shapes.is_empty() {
            return Err(Error::config("warping prior needs at least one shape"));
        }
        if shapes.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
            return Err(Error::config("warping shapes must be strictly positive"));
        }
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::config(format!(
                "warping rate must be strictly positive, got {rate}"
            )));
        }
        Ok(WarpHyper { shapes, rate })
    }

    /// Number of warp coefficients q implied by the shape vector.
    pub fn dim(&self) -> usize {
        self.shapes.len() + 1
    }

    /// Shape a_j for math position j in 2..=q.
    pub fn shape_at(&self, position: usize) -> f64 {
        self.shapes[position - 2]
    }

    pub fn with_rate(mut self, rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::config(format!(
                "warping rate must be strictly positive, got {rate}"
            )));
        }
        self.rate = rate;
        Ok(self)
    }

    /// Beta marginal parameters (alpha1, alpha2) of coefficient position j
    /// (2 <= j <= q-1): cumulative shape mass below vs above j.
    pub fn beta_marginal(&self, position: usize) -> (f64, f64) {
        let a1: f64 = self.shapes[..position - 1].iter().sum();
        let a2: f64 = self.shapes[position - 1..].iter().sum();
        (a1, a2)
    }
}

/// Normalize gamma latents into warp coefficients by cumulative sum.
/// The endpoints are exact: the first entry is 0/T and the last is T/T.
pub fn xi_to_phi(xi: &WarpLatent) -> Result<WarpCoeffs> {
    let total = xi.total();
    if total <= 0.0 || !total.is_finite() {
        return Err(Error::degenerate(format!(
            "warp latent total must be positive and finite, got {total}"
        )));
    }
    let mut phi = Vec::with_capacity(xi.len());
    let mut acc = 0.0;
    for &v in xi.values() {
        acc += v;
        phi.push(acc / total);
    }
    // the final cumulative sum is the total itself
    *phi.last_mut().unwrap() = 1.0;
    WarpCoeffs::new(phi)
}

/// Draw (latents, coefficients) from the warping prior. Retries the rare
/// degenerate draw where floating-point underflow breaks strict
/// monotonicity of the normalized sums.
pub fn sample_prior_warp<R: Rng + ?Sized>(
    hyper: &WarpHyper,
    rng: &mut R,
) -> (WarpLatent, WarpCoeffs) {
    const MAX_ATTEMPTS: usize = 64;
    for _ in 0..MAX_ATTEMPTS {
        let mut xi = Vec::with_capacity(hyper.dim());
        xi.push(0.0);
        for &a in &hyper.shapes {
            let g = Gamma::new(a, 1.0 / hyper.rate).expect("validated shape and rate");
            xi.push(g.sample(rng));
        }
        let Ok(latent) = WarpLatent::new(xi) else {
            continue;
        };
        if let Ok(phi) = xi_to_phi(&latent) {
            return (latent, phi);
        }
    }
    unreachable!("warping prior produced 64 degenerate draws in a row")
}

/// Closed-form prior mean and covariance of the warp coefficients.
/// Rows and columns of the pinned endpoints are zero.
pub fn prior_moments_phi(hyper: &WarpHyper) -> (Vec<f64>, nalgebra::DMatrix<f64>) {
    let q = hyper.dim();
    let total: f64 = hyper.shapes.iter().sum();
    let mut mean = vec![0.0; q];
    let mut cum = vec![0.0; q];
    let mut acc = 0.0;
    for j in 2..=q {
        acc += hyper.shape_at(j);
        cum[j - 1] = acc;
        mean[j - 1] = acc / total;
    }
    mean[q - 1] = 1.0;
    let denom = (total + 1.0) * total * total;
    let mut cov = nalgebra::DMatrix::zeros(q, q);
    for l in 2..q {
        for m in l..q {
            let below = cum[l - 1];
            let above = total - cum[m - 1];
            let c = below * above / denom;
            cov[(l - 1, m - 1)] = c;
            cov[(m - 1, l - 1)] = c;
        }
    }
    (mean, cov)
}

/// Choose gamma shapes so the prior mean warp is the identity: cumulative
/// shape fractions must sit at the Greville abscissae of the warp basis.
/// `concentration` is the total shape mass; larger values tighten the prior
/// around the identity without moving its mean.
pub fn elicit_identity(basis_h: &SplineBasis, concentration: f64) -> Result<WarpHyper> {
    if !(concentration > 0.0 && concentration.is_finite()) {
        return Err(Error::config(format!(
            "concentration must be strictly positive, got {concentration}"
        )));
    }
    let greville = basis_h.greville();
    let shapes: Vec<f64> = greville
        .windows(2)
        .map(|w| concentration * (w[1] - w[0]))
        .collect();
    WarpHyper::new(shapes, DEFAULT_RATE)
}

/// Default concentration: the smallest value keeping every elicited shape
/// at 1 or above, i.e. the reciprocal of the smallest Greville gap. Shapes
/// below 1 give gamma densities unbounded at zero, which destabilizes the
/// latent updates.
pub fn default_concentration(basis_h: &SplineBasis) -> f64 {
    let greville = basis_h.greville();
    let min_gap = greville
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    1.0 / min_gap
}

/// Evaluate the warp at each time. The value is a convex combination of the
/// coefficients, hence inside [0,1] up to rounding; the result is clamped so
/// downstream basis evaluation never sees an out-of-domain float.
pub fn warp_eval(phi: &WarpCoeffs, basis_h: &SplineBasis, times: &[f64]) -> Result<Vec<f64>> {
    debug_assert_eq!(phi.len(), basis_h.dim());
    times
        .iter()
        .map(|&t| Ok(basis_h.eval_dot(t, phi.values())?.clamp(0.0, 1.0)))
        .collect()
}

/// Bisection inverse of a continuous strictly increasing function on [0,1]
/// with f(0)=0, f(1)=1. Converges unconditionally on monotone inputs.
pub fn invert_increasing<F: Fn(f64) -> f64>(f: F, s: f64, tol: f64, max_iter: usize) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    if s >= 1.0 {
        return 1.0;
    }
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if f(mid) < s {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < tol {
            break;
        }
    }
    0.5 * (lo + hi)
}

const INVERT_TOL: f64 = 1e-10;
const INVERT_MAX_ITER: usize = 200;

/// Invert the warp at each target point: returns t with h(t) = s.
pub fn warp_invert(phi: &WarpCoeffs, basis_h: &SplineBasis, targets: &[f64]) -> Result<Vec<f64>> {
    for &s in targets {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::domain(format!("target {s} outside [0,1]")));
        }
    }
    let h = |t: f64| basis_h.eval_dot(t, phi.values()).expect("t in [0,1]");
    Ok(targets
        .iter()
        .map(|&s| invert_increasing(h, s, INVERT_TOL, INVERT_MAX_ITER))
        .collect())
}

/// Map normalized coefficients onto an arbitrary interval [t0, tf].
pub fn denormalize_phi(phi: &WarpCoeffs, t0: f64, tf: f64) -> Result<Vec<f64>> {
    if !(t0 < tf) {
        return Err(Error::config(format!(
            "need t0 < tf for denormalization, got [{t0}, {tf}]"
        )));
    }
    Ok(phi.values().iter().map(|&v| t0 + v * (tf - t0)).collect())
}
