//! The hierarchical data model: grouped functional observations, the
//! smoothing decomposition into group and individual spline terms, the
//! warped-mean likelihood, and registration of observed curves.

use crate::basis::Bases;
use crate::error::{Error, Result};
use crate::stats::interp_linear;
use crate::warping::{warp_eval, warp_invert, WarpCoeffs, WarpLatent};

/// One observed curve: paired (time, value) samples with strictly
/// increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl Curve {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// A ragged collection of curves organized by group. Times live in
/// [t0, tf]; `source_domain` keeps the pre-normalization interval so
/// outputs can be mapped back.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalDataset {
    groups: Vec<Vec<Curve>>,
    t0: f64,
    tf: f64,
    source_domain: (f64, f64),
}

impl FunctionalDataset {
    pub fn new(groups: Vec<Vec<Curve>>, t0: f64, tf: f64) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::validation("dataset needs at least one group"));
        }
        if !(t0 < tf) {
            return Err(Error::degenerate(format!(
                "time domain must satisfy t0 < tf, got [{t0}, {tf}]"
            )));
        }
        for (g, group) in groups.iter().enumerate() {
            for (i, curve) in group.iter().enumerate() {
                if curve.times.len() != curve.values.len() {
                    return Err(Error::validation(format!(
                        "curve ({g},{i}): {} times but {} values",
                        curve.times.len(),
                        curve.values.len()
                    )));
                }
                if curve.len() < 2 {
                    return Err(Error::validation(format!(
                        "curve ({g},{i}) has {} observations, need at least 2",
                        curve.len()
                    )));
                }
                for w in curve.times.windows(2) {
                    if !(w[1] > w[0]) {
                        return Err(Error::validation(format!(
                            "curve ({g},{i}) times not strictly increasing: {} -> {}",
                            w[0], w[1]
                        )));
                    }
                }
                let first = curve.times[0];
                let last = *curve.times.last().unwrap();
                if first < t0 || last > tf {
                    return Err(Error::validation(format!(
                        "curve ({g},{i}) times [{first}, {last}] outside domain [{t0}, {tf}]"
                    )));
                }
            }
        }
        Ok(FunctionalDataset {
            groups,
            t0,
            tf,
            source_domain: (t0, tf),
        })
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn group(&self, g: usize) -> &[Curve] {
        &self.groups[g]
    }

    pub fn curve(&self, g: usize, i: usize) -> &Curve {
        &self.groups[g][i]
    }

    pub fn curves_in_group(&self, g: usize) -> usize {
        self.groups[g].len()
    }

    /// Total number of curves N.
    pub fn n_curves(&self) -> usize {
        self.groups.iter().map(|g| g.len()).sum()
    }

    /// Total number of observations across all curves.
    pub fn n_observations(&self) -> usize {
        self.groups
            .iter()
            .flat_map(|g| g.iter().map(|c| c.len()))
            .sum()
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.t0, self.tf)
    }

    pub fn source_domain(&self) -> (f64, f64) {
        self.source_domain
    }

    pub fn is_normalized(&self) -> bool {
        self.t0 == 0.0 && self.tf == 1.0
    }

    /// Iterate (g, i, curve) over all curves.
    pub fn iter_curves(&self) -> impl Iterator<Item = (usize, usize, &Curve)> {
        self.groups
            .iter()
            .enumerate()
            .flat_map(|(g, group)| group.iter().enumerate().map(move |(i, c)| (g, i, c)))
    }

    /// A single-group view of one group, preserving the domain metadata.
    pub fn single_group(&self, g: usize) -> Result<FunctionalDataset> {
        if g >= self.n_groups() {
            return Err(Error::usage(format!("group index {g} out of range")));
        }
        let mut out = FunctionalDataset::new(vec![self.groups[g].clone()], self.t0, self.tf)?;
        out.source_domain = self.source_domain;
        Ok(out)
    }
}

/// Map all observation times affinely onto [0,1], retaining the original
/// interval for later denormalization of outputs.
pub fn normalize_time(dataset: &FunctionalDataset) -> Result<FunctionalDataset> {
    let (t0, tf) = dataset.domain();
    if dataset.is_normalized() {
        return Ok(dataset.clone());
    }
    let span = tf - t0;
    let groups = dataset
        .groups
        .iter()
        .map(|group| {
            group
                .iter()
                .map(|c| Curve {
                    times: c.times.iter().map(|&t| (t - t0) / span).collect(),
                    values: c.values.clone(),
                })
                .collect()
        })
        .collect();
    let mut out = FunctionalDataset::new(groups, 0.0, 1.0)?;
    out.source_domain = (t0, tf);
    Ok(out)
}

/// Hyperparameters of the full model: inverse-gamma parameters of the three
/// variance components plus the warping prior.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    pub a_lambda: f64,
    pub b_lambda: f64,
    pub a_gamma: f64,
    pub b_gamma: f64,
    pub a_eps: f64,
    pub b_eps: f64,
    pub warp: crate::warping::WarpHyper,
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("a_lambda", self.a_lambda),
            ("b_lambda", self.b_lambda),
            ("a_gamma", self.a_gamma),
            ("b_gamma", self.b_gamma),
            ("a_eps", self.a_eps),
            ("b_eps", self.b_eps),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!(
                    "hyperparameter {name} must be strictly positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// A per-curve warp: latents and their normalized coefficients, kept in
/// lockstep.
#[derive(Debug, Clone, PartialEq)]
pub struct Warp {
    pub xi: WarpLatent,
    pub phi: WarpCoeffs,
}

impl Warp {
    pub fn from_latent(xi: WarpLatent) -> Result<Self> {
        let phi = crate::warping::xi_to_phi(&xi)?;
        Ok(Warp { xi, phi })
    }
}

/// One MCMC state of the full model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    /// Group shape coefficients, one length-p vector per group.
    pub beta: Vec<Vec<f64>>,
    /// Individual shape coefficients, one length-k vector per curve.
    pub gamma: Vec<Vec<Vec<f64>>>,
    /// Per-curve warps.
    pub warps: Vec<Vec<Warp>>,
    pub lambda: f64,
    pub sigma2_gamma: f64,
    pub sigma2_eps: f64,
}

impl ModelState {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda", self.lambda),
            ("sigma2_gamma", self.sigma2_gamma),
            ("sigma2_eps", self.sigma2_eps),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invariant(format!(
                    "variance component {name} must be strictly positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// The smoothing decomposition at unwarped times: group term plus
/// individual term.
pub fn smooth_eval(
    beta_g: &[f64],
    gamma_gi: &[f64],
    bases: &Bases,
    times: &[f64],
) -> Result<Vec<f64>> {
    if beta_g.len() != bases.group.dim() {
        return Err(Error::config(format!(
            "group coefficients have length {}, basis dimension is {}",
            beta_g.len(),
            bases.group.dim()
        )));
    }
    if gamma_gi.len() != bases.individual.dim() {
        return Err(Error::config(format!(
            "individual coefficients have length {}, basis dimension is {}",
            gamma_gi.len(),
            bases.individual.dim()
        )));
    }
    times
        .iter()
        .map(|&t| {
            let g = bases.group.eval_dot(t, beta_g)?;
            let i = bases.individual.eval_dot(t, gamma_gi)?;
            Ok(g + i)
        })
        .collect()
}

/// The model mean at observed times: the smooth evaluated at warped times.
pub fn warped_mean(
    state: &ModelState,
    bases: &Bases,
    g: usize,
    i: usize,
    times: &[f64],
) -> Result<Vec<f64>> {
    let warped = warp_eval(&state.warps[g][i].phi, &bases.warp, times)?;
    smooth_eval(&state.beta[g], &state.gamma[g][i], bases, &warped)
}

/// Gaussian log-likelihood of one curve given its fitted mean.
pub fn curve_log_likelihood(values: &[f64], fitted: &[f64], sigma2_eps: f64) -> f64 {
    let n = values.len() as f64;
    let rss: f64 = values
        .iter()
        .zip(fitted)
        .map(|(&y, &m)| (y - m) * (y - m))
        .sum();
    -0.5 * n * (2.0 * std::f64::consts::PI * sigma2_eps).ln() - 0.5 * rss / sigma2_eps
}

/// Full-data Gaussian log-likelihood under the current state.
pub fn log_likelihood(
    state: &ModelState,
    dataset: &FunctionalDataset,
    bases: &Bases,
) -> Result<f64> {
    if !(state.sigma2_eps > 0.0 && state.sigma2_eps.is_finite()) {
        return Err(Error::invariant(format!(
            "noise variance must be strictly positive, got {}",
            state.sigma2_eps
        )));
    }
    let mut total = 0.0;
    for (g, i, curve) in dataset.iter_curves() {
        let fitted = warped_mean(state, bases, g, i, &curve.times)?;
        total += curve_log_likelihood(&curve.values, &fitted, state.sigma2_eps);
    }
    Ok(total)
}

/// Registered curve: observed values carried back through the inverse warp
/// and linearly interpolated onto the output grid.
pub fn register_curve(
    curve: &Curve,
    phi: &WarpCoeffs,
    basis_h: &crate::basis::SplineBasis,
    output_grid: &[f64],
) -> Result<Vec<f64>> {
    if curve.is_empty() {
        return Err(Error::degenerate("cannot register an empty curve"));
    }
    let pulled_back = warp_invert(phi, basis_h, output_grid)?;
    Ok(pulled_back
        .iter()
        .map(|&u| interp_linear(&curve.times, &curve.values, u))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::SplineBasis;
    use crate::stats::unit_grid;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn toy_dataset() -> FunctionalDataset {
        let c1 = Curve {
            times: vec![2.0, 3.0, 4.0],
            values: vec![1.0, 2.0, 0.5],
        };
        let c2 = Curve {
            times: vec![2.0, 2.5, 3.5, 4.0],
            values: vec![0.0, 1.0, -1.0, 0.25],
        };
        FunctionalDataset::new(vec![vec![c1, c2]], 2.0, 4.0).unwrap()
    }

    #[test]
    fn normalize_maps_affinely() {
        let d = normalize_time(&toy_dataset()).unwrap();
        assert_eq!(d.curve(0, 0).times, vec![0.0, 0.5, 1.0]);
        assert_eq!(d.source_domain(), (2.0, 4.0));
        assert!(d.is_normalized());
    }

    #[test]
    fn normalize_is_identity_on_unit_domain() {
        let d = normalize_time(&toy_dataset()).unwrap();
        let again = normalize_time(&d).unwrap();
        assert_eq!(d, again);
    }

    #[test]
    fn normalize_roundtrip() {
        let orig = toy_dataset();
        let norm = normalize_time(&orig).unwrap();
        let (t0, tf) = norm.source_domain();
        for (g, i, c) in norm.iter_curves() {
            for (j, &t) in c.times.iter().enumerate() {
                let back = t0 + t * (tf - t0);
                assert!((back - orig.curve(g, i).times[j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn degenerate_domain_rejected() {
        let c = Curve {
            times: vec![1.0, 1.5],
            values: vec![0.0, 0.0],
        };
        assert!(matches!(
            FunctionalDataset::new(vec![vec![c]], 1.0, 1.0),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn non_monotone_times_rejected() {
        let c = Curve {
            times: vec![0.0, 0.5, 0.4, 1.0],
            values: vec![0.0; 4],
        };
        assert!(matches!(
            FunctionalDataset::new(vec![vec![c]], 0.0, 1.0),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn zero_individual_term_gives_pure_group_curve() {
        let bases = Bases::cubic(6, 4, 4).unwrap();
        let beta: Vec<f64> = (0..6).map(|i| (i as f64).sin()).collect();
        let gamma = vec![0.0; 4];
        let grid = unit_grid(50);
        let smooth = smooth_eval(&beta, &gamma, &bases, &grid).unwrap();
        for (idx, &t) in grid.iter().enumerate() {
            let expected = bases.group.eval_dot(t, &beta).unwrap();
            assert_abs_diff_eq!(smooth[idx], expected, epsilon = 1e-14);
        }
    }

    #[test]
    fn constant_individual_term_by_partition_of_unity() {
        let bases = Bases::cubic(6, 5, 4).unwrap();
        let beta = vec![0.0; 6];
        let gamma = vec![2.75; 5];
        let grid = unit_grid(80);
        let smooth = smooth_eval(&beta, &gamma, &bases, &grid).unwrap();
        for &v in &smooth {
            assert!((v - 2.75).abs() < 1e-12);
        }
    }

    #[test]
    fn smooth_eval_matches_double_loop_oracle() {
        let bases = Bases::cubic(8, 5, 4).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let beta: Vec<f64> = (0..8).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
        let gamma: Vec<f64> = (0..5).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
        let grid = unit_grid(64);
        let fast = smooth_eval(&beta, &gamma, &bases, &grid).unwrap();
        // naive oracle: dense design rows, explicit double loop
        for (idx, &t) in grid.iter().enumerate() {
            let row_b = bases.group.eval_design(&[t]).unwrap();
            let row_g = bases.individual.eval_design(&[t]).unwrap();
            let mut acc = 0.0;
            for j in 0..8 {
                acc += row_b[(0, j)] * beta[j];
            }
            for j in 0..5 {
                acc += row_g[(0, j)] * gamma[j];
            }
            assert!((fast[idx] - acc).abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_mismatch_is_config_error() {
        let bases = Bases::cubic(6, 4, 4).unwrap();
        let r = smooth_eval(&[0.0; 5], &[0.0; 4], &bases, &[0.5]);
        assert!(matches!(r, Err(Error::Config(_))));
    }

    fn tiny_state(bases: &Bases, n_curves: usize) -> ModelState {
        let identity = Warp {
            xi: WarpLatent::new({
                let g = bases.warp.greville();
                let mut xi = vec![0.0];
                xi.extend(g.windows(2).map(|w| w[1] - w[0]));
                xi
            })
            .unwrap(),
            phi: WarpCoeffs::identity(&bases.warp).unwrap(),
        };
        ModelState {
            beta: vec![vec![0.0; bases.group.dim()]],
            gamma: vec![vec![vec![0.0; bases.individual.dim()]; n_curves]],
            warps: vec![vec![identity; n_curves]],
            lambda: 1.0,
            sigma2_gamma: 1.0,
            sigma2_eps: 1.0,
        }
    }

    #[test]
    fn identity_warp_mean_equals_smooth() {
        let bases = Bases::cubic(6, 4, 4).unwrap();
        let mut state = tiny_state(&bases, 1);
        state.beta[0] = (0..6).map(|i| (i as f64 * 0.7).cos()).collect();
        state.gamma[0][0] = (0..4).map(|i| i as f64 * 0.1).collect();
        let grid = unit_grid(40);
        let wm = warped_mean(&state, &bases, 0, 0, &grid).unwrap();
        let sm = smooth_eval(&state.beta[0], &state.gamma[0][0], &bases, &grid).unwrap();
        for (a, b) in wm.iter().zip(&sm) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn warped_mean_is_composition() {
        let bases = Bases::cubic(6, 4, 5).unwrap();
        let mut state = tiny_state(&bases, 1);
        state.beta[0] = (0..6).map(|i| (i as f64 * 1.3).sin()).collect();
        state.gamma[0][0] = vec![0.3, -0.2, 0.1, 0.0];
        let warp = Warp::from_latent(
            WarpLatent::new(vec![0.0, 0.5, 2.0, 1.0, 0.5]).unwrap(),
        )
        .unwrap();
        state.warps[0][0] = warp.clone();
        let grid = unit_grid(60);
        let wm = warped_mean(&state, &bases, 0, 0, &grid).unwrap();
        let h = warp_eval(&warp.phi, &bases.warp, &grid).unwrap();
        let composed = smooth_eval(&state.beta[0], &state.gamma[0][0], &bases, &h).unwrap();
        for (a, b) in wm.iter().zip(&composed) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn monotone_reparameterization_preserves_extrema() {
        let bases = Bases::cubic(8, 4, 6).unwrap();
        let mut state = tiny_state(&bases, 1);
        state.beta[0] = vec![0.0, 1.5, -0.6, 2.2, -1.0, 0.7, 1.1, -0.4];
        let warp = Warp::from_latent(
            WarpLatent::new(vec![0.0, 2.0, 0.5, 1.5, 3.0, 1.0]).unwrap(),
        )
        .unwrap();
        state.warps[0][0] = warp;
        let fine = unit_grid(4000);
        let wm = warped_mean(&state, &bases, 0, 0, &fine).unwrap();
        let sm = smooth_eval(&state.beta[0], &state.gamma[0][0], &bases, &fine).unwrap();
        let max_wm = wm.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let max_sm = sm.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!((max_wm - max_sm).abs() < 1e-3);
    }

    #[test]
    fn log_likelihood_zero_residuals() {
        // two curves of 5 points each fitted exactly, unit variance
        let bases = Bases::cubic(4, 4, 4).unwrap();
        let state = tiny_state(&bases, 2);
        let times = unit_grid(5);
        let groups = vec![vec![
            Curve {
                times: times.clone(),
                values: vec![0.0; 5],
            },
            Curve {
                times,
                values: vec![0.0; 5],
            },
        ]];
        let dataset = FunctionalDataset::new(groups, 0.0, 1.0).unwrap();
        let ll = log_likelihood(&state, &dataset, &bases).unwrap();
        let expected = -5.0 * (2.0 * std::f64::consts::PI).ln();
        assert_abs_diff_eq!(ll, expected, epsilon = 1e-12);
    }

    #[test]
    fn log_likelihood_single_point_hand_arithmetic() {
        // y - m = 2, sigma2 = 4: -0.5 ln(8 pi) - 0.5
        let ll = curve_log_likelihood(&[2.0], &[0.0], 4.0);
        let expected = -0.5 * (8.0 * std::f64::consts::PI).ln() - 0.5;
        assert_abs_diff_eq!(ll, expected, epsilon = 1e-14);
    }

    #[test]
    fn log_likelihood_matches_pointwise_oracle() {
        let bases = Bases::cubic(6, 4, 4).unwrap();
        let mut state = tiny_state(&bases, 2);
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        state.beta[0] = (0..6).map(|_| rng.random::<f64>() - 0.5).collect();
        state.gamma[0][0] = (0..4).map(|_| rng.random::<f64>() - 0.5).collect();
        state.gamma[0][1] = (0..4).map(|_| rng.random::<f64>() - 0.5).collect();
        state.sigma2_eps = 0.37;
        let times = unit_grid(12);
        let groups = vec![vec![
            Curve {
                times: times.clone(),
                values: (0..12).map(|_| rng.random::<f64>() * 2.0).collect(),
            },
            Curve {
                times,
                values: (0..12).map(|_| rng.random::<f64>() * 2.0).collect(),
            },
        ]];
        let dataset = FunctionalDataset::new(groups, 0.0, 1.0).unwrap();
        let ll = log_likelihood(&state, &dataset, &bases).unwrap();

        // independent per-point normal log-density sum
        let mut oracle = 0.0;
        for (g, i, curve) in dataset.iter_curves() {
            let fitted = warped_mean(&state, &bases, g, i, &curve.times).unwrap();
            for (y, m) in curve.values.iter().zip(&fitted) {
                let z = (y - m) / state.sigma2_eps.sqrt();
                oracle += -0.5 * (2.0 * std::f64::consts::PI * state.sigma2_eps).ln()
                    - 0.5 * z * z;
            }
        }
        assert!((ll - oracle).abs() < 1e-10);
    }

    #[test]
    fn log_likelihood_decomposes_per_curve() {
        let bases = Bases::cubic(6, 4, 4).unwrap();
        let state = tiny_state(&bases, 2);
        let times = unit_grid(9);
        let groups = vec![vec![
            Curve {
                times: times.clone(),
                values: (0..9).map(|i| (i as f64).sin()).collect(),
            },
            Curve {
                times,
                values: (0..9).map(|i| (i as f64).cos()).collect(),
            },
        ]];
        let dataset = FunctionalDataset::new(groups, 0.0, 1.0).unwrap();
        let full = log_likelihood(&state, &dataset, &bases).unwrap();
        let mut sum = 0.0;
        for (g, i, curve) in dataset.iter_curves() {
            let fitted = warped_mean(&state, &bases, g, i, &curve.times).unwrap();
            sum += curve_log_likelihood(&curve.values, &fitted, state.sigma2_eps);
        }
        assert!((full - sum).abs() < 1e-10);
    }

    #[test]
    fn nonpositive_noise_variance_rejected() {
        let bases = Bases::cubic(4, 4, 4).unwrap();
        let mut state = tiny_state(&bases, 1);
        state.sigma2_eps = 0.0;
        let times = unit_grid(4);
        let dataset = FunctionalDataset::new(
            vec![vec![Curve {
                times,
                values: vec![0.0; 4],
            }]],
            0.0,
            1.0,
        )
        .unwrap();
        assert!(matches!(
            log_likelihood(&state, &dataset, &bases),
            Err(Error::InvariantViolation(_))
        ));
    }

    #[test]
    fn register_identity_warp_is_interpolation() {
        let basis_h = SplineBasis::cubic(4).unwrap();
        let phi = WarpCoeffs::identity(&basis_h).unwrap();
        let curve = Curve {
            times: vec![0.0, 0.5, 1.0],
            values: vec![0.0, 1.0, 0.0],
        };
        let grid = vec![0.0, 0.25, 0.5, 0.75, 1.0];
        let reg = register_curve(&curve, &phi, &basis_h, &grid).unwrap();
        let expected = [0.0, 0.5, 1.0, 0.5, 0.0];
        for (a, b) in reg.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn register_roundtrip_recovers_unwarped_truth() {
        // sample m(h(t)) densely, register with the same warp, compare to m
        let bases = Bases::cubic(8, 4, 6).unwrap();
        let beta = vec![0.0, 1.2, -0.5, 2.0, -1.5, 0.8, 0.3, -0.2];
        let warp = Warp::from_latent(
            WarpLatent::new(vec![0.0, 1.0, 3.0, 0.7, 2.0, 1.3]).unwrap(),
        )
        .unwrap();
        let n = 300;
        let times = unit_grid(n);
        let h = warp_eval(&warp.phi, &bases.warp, &times).unwrap();
        let observed = smooth_eval(&beta, &vec![0.0; 4], &bases, &h).unwrap();
        let curve = Curve {
            times: times.clone(),
            values: observed,
        };
        let grid = unit_grid(n);
        let registered = register_curve(&curve, &warp.phi, &bases.warp, &grid).unwrap();
        let truth = smooth_eval(&beta, &vec![0.0; 4], &bases, &grid).unwrap();
        let sup = registered
            .iter()
            .zip(&truth)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(sup < 1e-3, "sup registration error {sup}");
    }

    #[test]
    fn register_preserves_endpoints() {
        let basis_h = SplineBasis::cubic(5).unwrap();
        let warp = Warp::from_latent(
            WarpLatent::new(vec![0.0, 2.0, 0.5, 1.0]).unwrap(),
        )
        .unwrap();
        let curve = Curve {
            times: vec![0.0, 0.3, 0.7, 1.0],
            values: vec![4.0, 1.0, -2.0, 7.0],
        };
        let reg = register_curve(&curve, &warp.phi, &basis_h, &[0.0, 1.0]).unwrap();
        assert_eq!(reg[0], 4.0);
        assert_eq!(reg[1], 7.0);
    }

    #[test]
    fn register_empty_curve_rejected() {
        let basis_h = SplineBasis::cubic(4).unwrap();
        let phi = WarpCoeffs::identity(&basis_h).unwrap();
        let curve = Curve {
            times: vec![],
            values: vec![],
        };
        assert!(matches!(
            register_curve(&curve, &phi, &basis_h, &[0.0, 1.0]),
            Err(Error::DegenerateInput(_))
        ));
    }
}
