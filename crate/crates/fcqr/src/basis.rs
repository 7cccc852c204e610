//! Clamped uniform B-spline bases on [0, 1].
//!
//! A basis of degree `p` with `M` equally spaced interior knots carries
//! `M + p + 1` normalized basis functions. Values and derivatives come
//! from the Cox–de Boor recursion; the Gram matrices of derivative
//! products are integrated exactly with per-interval Gauss–Legendre
//! quadrature (the integrand is piecewise polynomial).

use ndarray::{Array1, Array2};

use crate::error::{FcqrError, Result};
use crate::quadrature::gauss_legendre;

/// Clamped uniform B-spline basis on [0, 1].
///
/// Immutable after construction; evaluation and integration are pure and
/// safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct BSplineBasis {
    degree: usize,
    interior_knots: usize,
    knots: Vec<f64>,
}

impl BSplineBasis {
    /// Build the clamped basis of degree `p` with `M` equally spaced
    /// interior knots. The knot vector repeats 0 and 1 each `p + 1` times,
    /// giving `M + p + 1` basis functions.
    pub fn new(degree: usize, interior_knots: usize) -> Self {
        let p = degree;
        let m = interior_knots;
        let mut knots = Vec::with_capacity(m + 2 * (p + 1));
        knots.extend(std::iter::repeat(0.0).take(p + 1));
        for j in 1..=m {
            knots.push(j as f64 / (m + 1) as f64);
        }
        knots.extend(std::iter::repeat(1.0).take(p + 1));
        Self {
            degree,
            interior_knots,
            knots,
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn interior_knot_count(&self) -> usize {
        self.interior_knots
    }

    /// Number of basis functions, `M + p + 1`.
    pub fn basis_count(&self) -> usize {
        self.interior_knots + self.degree + 1
    }

    /// The full clamped knot vector (length `M + 2(p + 1)`).
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Greville abscissae `ξ_l = (t_{l+1} + … + t_{l+p}) / p`. The spline
    /// with coefficients `a + b·ξ_l` reproduces the line `a + b·t` exactly
    /// (degree ≥ 1).
    pub fn greville_abscissae(&self) -> Vec<f64> {
        let p = self.degree;
        (0..self.basis_count())
            .map(|l| {
                if p == 0 {
                    0.5 * (self.knots[l] + self.knots[l + 1])
                } else {
                    self.knots[l + 1..l + 1 + p].iter().sum::<f64>() / p as f64
                }
            })
            .collect()
    }

    /// Evaluate the `derivative_order`-th derivative of every basis
    /// function at `t`. Order 0 gives the basis values; evaluation at
    /// `t = 1` is defined by continuity from the left (the last basis
    /// function equals 1).
    pub fn evaluate(&self, t: f64, derivative_order: usize) -> Result<Array1<f64>> {
        if !t.is_finite() || !(0.0..=1.0).contains(&t) {
            return Err(FcqrError::Domain(format!(
                "evaluation point {t} outside [0, 1]"
            )));
        }
        if derivative_order > self.degree {
            return Err(FcqrError::InvalidArgument(format!(
                "derivative order {derivative_order} exceeds spline degree {}",
                self.degree
            )));
        }
        Ok(self.evaluate_unchecked(t, derivative_order))
    }

    fn evaluate_unchecked(&self, t: f64, derivative_order: usize) -> Array1<f64> {
        let p = self.degree;
        let r = derivative_order;
        let knots = &self.knots;
        let n_knots = knots.len();

        // Degree-0 values: indicator of the half-open knot interval, with
        // the right endpoint folded into the last nonempty interval.
        let mut values = vec![0.0; n_knots - 1];
        if t >= 1.0 {
            let l = (0..n_knots - 1)
                .rev()
                .find(|&l| knots[l] < knots[l + 1])
                .expect("knot vector has a nonempty interval");
            values[l] = 1.0;
        } else {
            for l in 0..n_knots - 1 {
                if knots[l] <= t && t < knots[l + 1] {
                    values[l] = 1.0;
                    break;
                }
            }
        }

        // Cox-de Boor up to degree p - r.
        for q in 1..=p - r {
            let count = n_knots - q - 1;
            for l in 0..count {
                let d1 = knots[l + q] - knots[l];
                let d2 = knots[l + q + 1] - knots[l + 1];
                let a = if d1 > 0.0 {
                    (t - knots[l]) / d1 * values[l]
                } else {
                    0.0
                };
                let b = if d2 > 0.0 {
                    (knots[l + q + 1] - t) / d2 * values[l + 1]
                } else {
                    0.0
                };
                values[l] = a + b;
            }
            values.truncate(count);
        }

        // Derivative lifts: each pass raises degree by one while taking one
        // more derivative, via B'_{l,q} = q (B_{l,q-1}/Δ_l - B_{l+1,q-1}/Δ_{l+1}).
        for s in 1..=r {
            let q = p - r + s;
            let count = n_knots - q - 1;
            let prev = values.clone();
            values.resize(count, 0.0);
            for l in 0..count {
                let d1 = knots[l + q] - knots[l];
                let d2 = knots[l + q + 1] - knots[l + 1];
                let a = if d1 > 0.0 { prev[l] / d1 } else { 0.0 };
                let b = if d2 > 0.0 { prev[l + 1] / d2 } else { 0.0 };
                values[l] = q as f64 * (a - b);
            }
        }

        debug_assert_eq!(values.len(), self.basis_count());
        Array1::from_vec(values)
    }

    /// The Gram matrix `∫ B^{(q)}(t) B^{(q)T}(t) dt`, integrated exactly:
    /// the integrand has degree ≤ 2(p − q) on each knot interval, so
    /// per-interval Gauss–Legendre with `p − q + 2` nodes suffices.
    /// `q = 0` gives the mass matrix.
    pub fn gram_matrix(&self, derivative_order: usize) -> Result<Array2<f64>> {
        let p = self.degree;
        let q = derivative_order;
        if q > p {
            return Err(FcqrError::InvalidArgument(format!(
                "penalty order {q} exceeds spline degree {p}"
            )));
        }
        let bc = self.basis_count();
        let (nodes, weights) = gauss_legendre(p - q + 2);
        let mut gram = Array2::<f64>::zeros((bc, bc));
        for j in p..=p + self.interior_knots {
            let (a, b) = (self.knots[j], self.knots[j + 1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (&x, &w) in nodes.iter().zip(&weights) {
                let t = mid + half * x;
                let v = self.evaluate_unchecked(t.clamp(0.0, 1.0), q);
                let scale = w * half;
                for row in 0..bc {
                    let vr = v[row];
                    if vr == 0.0 {
                        continue;
                    }
                    for col in row..bc {
                        gram[[row, col]] += scale * vr * v[col];
                    }
                }
            }
        }
        for row in 0..bc {
            for col in 0..row {
                gram[[row, col]] = gram[[col, row]];
            }
        }
        Ok(gram)
    }
}

/// A spline function `t ↦ B^T(t) θ` with fixed coefficients.
#[derive(Debug, Clone)]
pub struct SplineCurve {
    basis: BSplineBasis,
    coefficients: Array1<f64>,
}

impl SplineCurve {
    pub fn new(basis: BSplineBasis, coefficients: Array1<f64>) -> Result<Self> {
        if coefficients.len() != basis.basis_count() {
            return Err(FcqrError::InvalidArgument(format!(
                "{} coefficients for a basis of {} functions",
                coefficients.len(),
                basis.basis_count()
            )));
        }
        Ok(Self {
            basis,
            coefficients,
        })
    }

    pub fn value(&self, t: f64) -> Result<f64> {
        Ok(self.basis.evaluate(t, 0)?.dot(&self.coefficients))
    }

    pub fn basis(&self) -> &BSplineBasis {
        &self.basis
    }

    pub fn coefficients(&self) -> &Array1<f64> {
        &self.coefficients
    }
}
