//! Clamped B-spline bases on [0,1] and the first-order random-walk penalty.
//!
//! All three coefficient blocks of the model (group shape, individual shape,
//! warping function) use the same basis machinery, differing only in
//! dimension. Evaluation uses the local de Boor recursion: at any point only
//! `degree + 1` basis functions are nonzero, and hot paths work directly on
//! that local window instead of full rows.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Largest supported spline degree for the stack-allocated local window.
pub const MAX_DEGREE: usize = 7;

/// A clamped B-spline basis of a given degree on [0,1] with uniformly
/// spaced interior knots.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineBasis {
    degree: usize,
    dim: usize,
    knots: Vec<f64>,
}

/// The `degree + 1` basis values that are nonzero at a point, together with
/// the index of the first one.
#[derive(Debug, Clone, Copy)]
pub struct LocalRow {
    pub start: usize,
    pub len: usize,
    pub vals: [f64; MAX_DEGREE + 1],
}

impl LocalRow {
    /// Dot product against a full-length coefficient vector.
    #[inline]
    pub fn dot(&self, coefs: &[f64]) -> f64 {
        let mut acc = 0.0;
        for r in 0..self.len {
            acc += self.vals[r] * coefs[self.start + r];
        }
        acc
    }
}

impl SplineBasis {
    /// Build a clamped basis with `dim` functions of the given degree.
    /// Interior knots are uniformly spaced on (0,1).
    pub fn new(dim: usize, degree: usize) -> Result<Self> {
        if degree > MAX_DEGREE {
            return Err(Error::config(format!(
                "degree {degree} exceeds supported maximum {MAX_DEGREE}"
            )));
        }
        if dim < degree + 1 {
            return Err(Error::config(format!(
                "basis dimension {dim} too small for degree {degree} (need at least {})",
                degree + 1
            )));
        }
        let n_interior = dim - degree - 1;
        let mut knots = Vec::with_capacity(dim + degree + 1);
        knots.extend(std::iter::repeat(0.0).take(degree + 1));
        for i in 1..=n_interior {
            knots.push(i as f64 / (n_interior + 1) as f64);
        }
        knots.extend(std::iter::repeat(1.0).take(degree + 1));
        Ok(SplineBasis { degree, dim, knots })
    }

    /// Cubic basis, the degree used throughout the model.
    pub fn cubic(dim: usize) -> Result<Self> {
        SplineBasis::new(dim, 3)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Index of the knot span containing `t`: the unique `s` in
    /// `[degree, dim-1]` with `knots[s] <= t < knots[s+1]` (right end closed).
    fn find_span(&self, t: f64) -> usize {
        if t >= 1.0 {
            return self.dim - 1;
        }
        let mut lo = self.degree;
        let mut hi = self.dim - 1;
        while lo < hi {
            let mid = (lo + hi + 1) / 2;
            if self.knots[mid] <= t {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        lo
    }

    /// Evaluate the nonzero basis functions at `t` by the de Boor recursion.
    pub fn eval_local(&self, t: f64) -> Result<LocalRow> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::domain(format!("time {t} outside [0,1]")));
        }
        let span = self.find_span(t);
        let d = self.degree;
        let mut vals = [0.0; MAX_DEGREE + 1];
        let mut left = [0.0; MAX_DEGREE + 1];
        let mut right = [0.0; MAX_DEGREE + 1];
        vals[0] = 1.0;
        for j in 1..=d {
            left[j] = t - self.knots[span + 1 - j];
            right[j] = self.knots[span + j] - t;
            let mut saved = 0.0;
            for r in 0..j {
                let denom = right[r + 1] + left[j - r];
                let temp = vals[r] / denom;
                vals[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            vals[j] = saved;
        }
        Ok(LocalRow {
            start: span - d,
            len: d + 1,
            vals,
        })
    }

    /// Spline value at `t` for a full coefficient vector.
    pub fn eval_dot(&self, t: f64, coefs: &[f64]) -> Result<f64> {
        debug_assert_eq!(coefs.len(), self.dim);
        Ok(self.eval_local(t)?.dot(coefs))
    }

    /// Dense design matrix: row i holds all basis functions at `times[i]`.
    pub fn eval_design(&self, times: &[f64]) -> Result<DMatrix<f64>> {
        let mut design = DMatrix::zeros(times.len(), self.dim);
        for (i, &t) in times.iter().enumerate() {
            let row = self.eval_local(t)?;
            for r in 0..row.len {
                design[(i, row.start + r)] = row.vals[r];
            }
        }
        Ok(design)
    }

    /// Greville abscissae: knot averages. Using them as coefficients
    /// reproduces the identity function exactly (degree >= 1).
    pub fn greville(&self) -> Vec<f64> {
        let d = self.degree;
        (0..self.dim)
            .map(|j| {
                if d == 0 {
                    0.5 * (self.knots[j] + self.knots[j + 1])
                } else {
                    self.knots[j + 1..j + 1 + d].iter().sum::<f64>() / d as f64
                }
            })
            .collect()
    }
}

/// The banded penalty of the first-order random-walk prior: tridiagonal,
/// 2 on the diagonal except 1 in the last entry, -1 off the diagonal.
/// Full rank, so the induced Gaussian prior is proper.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyMatrix {
    omega: DMatrix<f64>,
}

impl PenaltyMatrix {
    pub fn new(p: usize) -> Result<Self> {
        if p < 2 {
            return Err(Error::config(format!(
                "penalty matrix needs dimension >= 2, got {p}"
            )));
        }
        let mut omega = DMatrix::zeros(p, p);
        for j in 0..p {
            omega[(j, j)] = if j + 1 == p { 1.0 } else { 2.0 };
            if j + 1 < p {
                omega[(j, j + 1)] = -1.0;
                omega[(j + 1, j)] = -1.0;
            }
        }
        Ok(PenaltyMatrix { omega })
    }

    pub fn dim(&self) -> usize {
        self.omega.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.omega
    }

    /// Quadratic form x' Omega x, accumulated along the band.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let p = self.dim();
        debug_assert_eq!(x.len(), p);
        let mut acc = 0.0;
        for j in 0..p {
            acc += self.omega[(j, j)] * x[j] * x[j];
            if j + 1 < p {
                acc += 2.0 * self.omega[(j, j + 1)] * x[j] * x[j + 1];
            }
        }
        acc
    }
}

/// Convenience bundle of the three bases plus the penalty used by a fit.
#[derive(Debug, Clone)]
pub struct Bases {
    pub group: SplineBasis,
    pub individual: SplineBasis,
    pub warp: SplineBasis,
    pub penalty: PenaltyMatrix,
}

impl Bases {
    /// Cubic bases of dimensions (p, k, q) with the matching penalty.
    pub fn cubic(p: usize, k: usize, q: usize) -> Result<Self> {
        Ok(Bases {
            group: SplineBasis::cubic(p)?,
            individual: SplineBasis::cubic(k)?,
            warp: SplineBasis::cubic(q)?,
            penalty: PenaltyMatrix::new(p)?,
        })
    }
}
