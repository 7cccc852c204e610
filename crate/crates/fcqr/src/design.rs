//! From curve observations to the finite-dimensional regression design.
//!
//! Each observed curve is reduced to the vector of its integrals against
//! the basis functions; stacking those rows gives the design matrix. The
//! intercept block for the composite levels is appended per row on demand
//! (`augment`), and the roughness penalty is zero-padded to match.

use std::sync::Arc;

use ndarray::{Array1, Array2, ArrayView1};

use crate::basis::BSplineBasis;
use crate::error::{FcqrError, Result};
use crate::quadrature::gauss_legendre;

/// Default spline degree (cubic).
pub const DEFAULT_DEGREE: usize = 3;
/// Default roughness penalty order (second derivative).
pub const DEFAULT_PENALTY_ORDER: usize = 2;

/// Default interior knot count for a dataset of `n` curves:
/// `ceil(1.5 n^{1/5})` clamped to `[4, floor(sqrt(n)/2)]`.
pub fn default_interior_knots(n: usize) -> usize {
    let raw = (1.5 * (n as f64).powf(0.2)).ceil() as usize;
    let upper = ((n as f64).sqrt() / 2.0).floor() as usize;
    raw.clamp(4, upper.max(4))
}

/// One functional observation: a curve sampled on a grid plus its scalar
/// response. The grid is shared (`Arc`) across a dataset and must be
/// identical for every sample.
#[derive(Debug, Clone)]
pub struct FunctionalSample {
    grid: Arc<[f64]>,
    values: Vec<f64>,
    response: f64,
}

impl FunctionalSample {
    pub fn new(grid: Arc<[f64]>, values: Vec<f64>, response: f64) -> Result<Self> {
        if grid.len() < 2 {
            return Err(FcqrError::Data(format!(
                "grid needs at least 2 points, got {}",
                grid.len()
            )));
        }
        if grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(FcqrError::Data(
                "grid must be strictly increasing".to_string(),
            ));
        }
        if grid.iter().any(|v| !v.is_finite()) {
            return Err(FcqrError::Data("grid contains non-finite values".to_string()));
        }
        if values.len() != grid.len() {
            return Err(FcqrError::Data(format!(
                "curve has {} values but grid has {} points",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(FcqrError::Data(
                "curve contains non-finite values".to_string(),
            ));
        }
        if !response.is_finite() {
            return Err(FcqrError::Data("response is non-finite".to_string()));
        }
        Ok(Self {
            grid,
            values,
            response,
        })
    }

    pub fn grid(&self) -> &Arc<[f64]> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn response(&self) -> f64 {
        self.response
    }
}

/// Quadrature rule used to integrate curves against the basis on the
/// observation grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureRule {
    /// Composite trapezoid; works on any strictly increasing grid.
    Trapezoid,
    /// Composite Simpson; requires a uniform grid with an odd point count.
    Simpson,
}

fn check_grid_covers_unit_interval(grid: &[f64]) -> Result<()> {
    let first = grid[0];
    let last = grid[grid.len() - 1];
    if first.abs() > 1e-9 || (1.0 - last).abs() > 1e-9 {
        return Err(FcqrError::Domain(format!(
            "grid [{first}, {last}] does not cover [0, 1]"
        )));
    }
    Ok(())
}

/// Integration weight matrix `A` with `A[g, l] = ∫ φ_g(t) B_l(t) dt`,
/// where the `φ_g` are the interpolation cardinal functions of the rule
/// (piecewise-linear hats for trapezoid, piecewise-quadratic Lagrange
/// triples for Simpson). A design row is then exactly the integral of the
/// interpolated curve against the basis: `U = A^T x`.
///
/// Each `φ_g B_l` is piecewise polynomial with breakpoints at grid nodes
/// and basis knots, so per-piece Gauss–Legendre integrates it exactly.
fn interpolant_weight_matrix(
    grid: &[f64],
    basis: &BSplineBasis,
    rule: QuadratureRule,
) -> Result<Array2<f64>> {
    check_grid_covers_unit_interval(grid)?;
    let g = grid.len();
    let bc = basis.basis_count();
    let (nodes, weights) = gauss_legendre(basis.degree() + 3);
    let mut a = Array2::<f64>::zeros((g, bc));

    // Interior basis knots, strictly inside [0, 1], for cell splitting.
    let p = basis.degree();
    let interior = &basis.knots()[p + 1..p + 1 + basis.interior_knot_count()];

    let integrate_cell =
        |lo: f64, hi: f64, add: &mut dyn FnMut(f64, f64, &Array1<f64>)| -> Result<()> {
            // Split [lo, hi] at any interior knots it straddles.
            let mut cuts = vec![lo];
            for &k in interior {
                if k > lo && k < hi {
                    cuts.push(k);
                }
            }
            cuts.push(hi);
            for w in cuts.windows(2) {
                let (a0, b0) = (w[0], w[1]);
                if b0 <= a0 {
                    continue;
                }
                let half = 0.5 * (b0 - a0);
                let mid = 0.5 * (a0 + b0);
                for (&x, &wq) in nodes.iter().zip(&weights) {
                    let t = (mid + half * x).clamp(0.0, 1.0);
                    let b = basis.evaluate(t, 0)?;
                    add(t, wq * half, &b);
                }
            }
            Ok(())
        };

    match rule {
        QuadratureRule::Trapezoid => {
            for c in 0..g - 1 {
                let (t0, t1) = (grid[c], grid[c + 1]);
                let h = t1 - t0;
                integrate_cell(t0, t1, &mut |t, w, b| {
                    let left = (t1 - t) / h;
                    let right = (t - t0) / h;
                    for l in 0..bc {
                        a[[c, l]] += w * left * b[l];
                        a[[c + 1, l]] += w * right * b[l];
                    }
                })?;
            }
        }
        QuadratureRule::Simpson => {
            if g < 3 || g % 2 == 0 || !grid_is_uniform(grid) {
                return Err(FcqrError::InvalidArgument(
                    "Simpson quadrature requires a uniform grid with an odd number of points"
                        .to_string(),
                ));
            }
            for c in (0..g - 2).step_by(2) {
                let (t0, t1, t2) = (grid[c], grid[c + 1], grid[c + 2]);
                integrate_cell(t0, t2, &mut |t, w, b| {
                    let l0 = (t - t1) * (t - t2) / ((t0 - t1) * (t0 - t2));
                    let l1 = (t - t0) * (t - t2) / ((t1 - t0) * (t1 - t2));
                    let l2 = (t - t0) * (t - t1) / ((t2 - t0) * (t2 - t1));
                    for l in 0..bc {
                        a[[c, l]] += w * l0 * b[l];
                        a[[c + 1, l]] += w * l1 * b[l];
                        a[[c + 2, l]] += w * l2 * b[l];
                    }
                })?;
            }
        }
    }
    Ok(a)
}

fn grid_is_uniform(grid: &[f64]) -> bool {
    let g = grid.len();
    let h = (grid[g - 1] - grid[0]) / (g - 1) as f64;
    let tol = 1e-9 * h.max(1e-300);
    grid.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= tol)
}

/// Integrate one curve against every basis function on its observation
/// grid, yielding the design row for that sample.
pub fn design_vector(
    sample: &FunctionalSample,
    basis: &BSplineBasis,
    rule: QuadratureRule,
) -> Result<Array1<f64>> {
    let wb = interpolant_weight_matrix(sample.grid(), basis, rule)?;
    let x = ArrayView1::from(sample.values());
    Ok(wb.t().dot(&x))
}

/// The assembled regression design: stacked integral rows plus the
/// roughness penalty of the chosen derivative order. Immutable once built.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    u: Array2<f64>,
    responses: Array1<f64>,
    penalty: Array2<f64>,
    penalty_order: usize,
    basis: BSplineBasis,
    quadrature: QuadratureRule,
}

impl DesignMatrix {
    #[cfg(test)]
    pub(crate) fn from_parts(
        u: Array2<f64>,
        responses: Array1<f64>,
        penalty: Array2<f64>,
        penalty_order: usize,
        basis: BSplineBasis,
    ) -> Self {
        Self {
            u,
            responses,
            penalty,
            penalty_order,
            basis,
            quadrature: QuadratureRule::Trapezoid,
        }
    }

    /// Rows of curve-basis integrals, one per sample.
    pub fn u(&self) -> &Array2<f64> {
        &self.u
    }

    pub fn responses(&self) -> &Array1<f64> {
        &self.responses
    }

    /// Penalty matrix `D_q` (dimension `basis_count` squared).
    pub fn penalty(&self) -> &Array2<f64> {
        &self.penalty
    }

    pub fn penalty_order(&self) -> usize {
        self.penalty_order
    }

    pub fn basis(&self) -> &BSplineBasis {
        &self.basis
    }

    pub fn quadrature(&self) -> QuadratureRule {
        self.quadrature
    }

    pub fn n_samples(&self) -> usize {
        self.u.nrows()
    }

    pub fn basis_count(&self) -> usize {
        self.u.ncols()
    }
}

/// Stack the design rows for a dataset sharing one grid and attach the
/// order-`q` penalty matrix.
pub fn build_design(
    samples: &[FunctionalSample],
    basis: &BSplineBasis,
    penalty_order: usize,
) -> Result<DesignMatrix> {
    build_design_with_rule(samples, basis, penalty_order, QuadratureRule::Trapezoid)
}

pub fn build_design_with_rule(
    samples: &[FunctionalSample],
    basis: &BSplineBasis,
    penalty_order: usize,
    rule: QuadratureRule,
) -> Result<DesignMatrix> {
    let first = samples
        .first()
        .ok_or_else(|| FcqrError::Data("empty sample list".to_string()))?;
    let grid = first.grid();
    for (i, s) in samples.iter().enumerate().skip(1) {
        let same = Arc::ptr_eq(s.grid(), grid)
            || (s.grid().len() == grid.len()
                && s.grid()
                    .iter()
                    .zip(grid.iter())
                    .all(|(a, b)| a.to_bits() == b.to_bits()));
        if !same {
            return Err(FcqrError::Data(format!(
                "sample {i} has a different observation grid"
            )));
        }
    }

    let wb = interpolant_weight_matrix(grid, basis, rule)?;
    let mut u = Array2::<f64>::zeros((samples.len(), basis.basis_count()));
    let mut responses = Array1::<f64>::zeros(samples.len());
    for (i, s) in samples.iter().enumerate() {
        let row = wb.t().dot(&ArrayView1::from(s.values()));
        u.row_mut(i).assign(&row);
        responses[i] = s.response();
    }
    let penalty = basis.gram_matrix(penalty_order)?;
    Ok(DesignMatrix {
        u,
        responses,
        penalty,
        penalty_order,
        basis: basis.clone(),
        quadrature: rule,
    })
}

/// A design row extended with the intercept indicator for composite
/// level `k` (1-based, matching the quantile levels).
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedRow {
    pub level: usize,
    pub vector: Array1<f64>,
}

/// Append the `k`-th standard basis vector of length `levels` to a design
/// row. Levels are 1-based.
pub fn augment(u_row: ArrayView1<f64>, level: usize, levels: usize) -> Result<AugmentedRow> {
    if level == 0 || level > levels {
        return Err(FcqrError::InvalidArgument(format!(
            "level {level} out of range 1..={levels}"
        )));
    }
    let d = u_row.len();
    let mut v = Array1::<f64>::zeros(d + levels);
    v.slice_mut(ndarray::s![..d]).assign(&u_row);
    v[d + level - 1] = 1.0;
    Ok(AugmentedRow { level, vector: v })
}

/// Zero-pad the penalty to the augmented dimension: intercepts are never
/// penalized, so the extra `levels` rows and columns are zero.
pub fn padded_penalty(penalty: &Array2<f64>, levels: usize) -> Array2<f64> {
    let d = penalty.nrows();
    let mut out = Array2::<f64>::zeros((d + levels, d + levels));
    out.slice_mut(ndarray::s![..d, ..d]).assign(penalty);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform_grid(points: usize) -> Arc<[f64]> {
        (0..points)
            .map(|i| i as f64 / (points - 1) as f64)
            .collect::<Vec<_>>()
            .into()
    }

    fn sample_from(grid: &Arc<[f64]>, f: impl Fn(f64) -> f64, y: f64) -> FunctionalSample {
        let values = grid.iter().map(|&t| f(t)).collect();
        FunctionalSample::new(grid.clone(), values, y).unwrap()
    }

    #[test]
    fn zero_curve_gives_zero_row() {
        let grid = uniform_grid(101);
        let basis = BSplineBasis::new(3, 5);
        let s = sample_from(&grid, |_| 0.0, 1.0);
        let u = design_vector(&s, &basis, QuadratureRule::Trapezoid).unwrap();
        assert!(u.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_curve_against_indicators() {
        let grid = uniform_grid(101);
        let basis = BSplineBasis::new(0, 1);
        let s = sample_from(&grid, |_| 1.0, 0.0);
        let u = design_vector(&s, &basis, QuadratureRule::Trapezoid).unwrap();
        assert!((u[0] - 0.5).abs() < 1e-12);
        assert!((u[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn basis_function_curve_recovers_gram_row() {
        let basis = BSplineBasis::new(3, 5);
        let grid = uniform_grid(1001);
        let s = sample_from(&grid, |t| basis.evaluate(t, 0).unwrap()[1], 0.0);
        let u = design_vector(&s, &basis, QuadratureRule::Trapezoid).unwrap();
        let gram = basis.gram_matrix(0).unwrap();
        for l in 0..basis.basis_count() {
            assert!(
                (u[l] - gram[[1, l]]).abs() < 1e-6,
                "l={l}: {} vs {}",
                u[l],
                gram[[1, l]]
            );
        }
    }

    #[test]
    fn design_vector_is_linear_in_the_curve() {
        let grid = uniform_grid(101);
        let basis = BSplineBasis::new(3, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let a: f64 = rng.gen_range(-3.0..3.0);
            let b: f64 = rng.gen_range(-3.0..3.0);
            let x = sample_from(&grid, |t| (2.0 * t).sin() + rng_free(t), 0.0);
            let z = sample_from(&grid, |t| t * t - 0.3, 0.0);
            let combo_values: Vec<f64> = x
                .values()
                .iter()
                .zip(z.values())
                .map(|(&xv, &zv)| a * xv + b * zv)
                .collect();
            let combo = FunctionalSample::new(grid.clone(), combo_values, 0.0).unwrap();
            let ux = design_vector(&x, &basis, QuadratureRule::Trapezoid).unwrap();
            let uz = design_vector(&z, &basis, QuadratureRule::Trapezoid).unwrap();
            let uc = design_vector(&combo, &basis, QuadratureRule::Trapezoid).unwrap();
            let lin = &ux * a + &uz * b;
            for l in 0..basis.basis_count() {
                assert!((uc[l] - lin[l]).abs() < 1e-12);
            }
        }
    }

    fn rng_free(t: f64) -> f64 {
        (7.0 * t).cos() * 0.5
    }

    #[test]
    fn grid_refinement_converges() {
        let basis = BSplineBasis::new(3, 5);
        let f = |t: f64| (2.0 * std::f64::consts::PI * t).sin() + t * t;
        let coarse = uniform_grid(1001);
        let fine = uniform_grid(10001);
        let uc = design_vector(
            &sample_from(&coarse, f, 0.0),
            &basis,
            QuadratureRule::Trapezoid,
        )
        .unwrap();
        let uf = design_vector(
            &sample_from(&fine, f, 0.0),
            &basis,
            QuadratureRule::Trapezoid,
        )
        .unwrap();
        for l in 0..basis.basis_count() {
            assert!((uc[l] - uf[l]).abs() < 1e-6);
        }
    }

    #[test]
    fn row_entries_bounded_by_basis_integrals() {
        let grid = uniform_grid(100);
        let basis = BSplineBasis::new(3, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let values: Vec<f64> = grid
            .iter()
            .map(|&t| (3.0 * t).sin() + 0.2 * rng.r#gen::<f64>())
            .collect();
        let max_abs = values.iter().cloned().fold(0.0f64, |a, v| a.max(v.abs()));
        let s = FunctionalSample::new(grid.clone(), values, 0.0).unwrap();
        let u = design_vector(&s, &basis, QuadratureRule::Trapezoid).unwrap();
        // Same-quadrature integral of each basis function bounds the row.
        let ones = sample_from(&grid, |_| 1.0, 0.0);
        let b_int = design_vector(&ones, &basis, QuadratureRule::Trapezoid).unwrap();
        for l in 0..basis.basis_count() {
            assert!(u[l].abs() <= max_abs * b_int[l] + 1e-12);
        }
    }

    #[test]
    fn row_sup_norm_scales_inversely_with_knot_count() {
        let grid = uniform_grid(501);
        let f = |t: f64| 1.0 + (2.0 * std::f64::consts::PI * t).sin();
        let s = sample_from(&grid, f, 0.0);
        let mut scaled = Vec::new();
        for m in [4usize, 8, 16, 32] {
            let basis = BSplineBasis::new(3, m);
            let u = design_vector(&s, &basis, QuadratureRule::Trapezoid).unwrap();
            let sup = u.iter().cloned().fold(0.0f64, |a, v| a.max(v.abs()));
            scaled.push(sup * m as f64);
        }
        let mn = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
        let mx = scaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(mx / mn < 2.0, "scaled sup norms drift: {scaled:?}");
    }

    #[test]
    fn build_design_shapes_and_zero_rows() {
        let grid = uniform_grid(101);
        let basis = BSplineBasis::new(3, 5);
        let samples: Vec<_> = (0..3).map(|_| sample_from(&grid, |_| 0.0, 1.0)).collect();
        let d = build_design(&samples, &basis, 2).unwrap();
        assert_eq!(d.u().shape(), &[3, 9]);
        assert!(d.u().iter().all(|&v| v == 0.0));
        assert_eq!(d.penalty().shape(), &[9, 9]);

        let single = vec![sample_from(&grid, |t| t, 2.0)];
        let d1 = build_design(&single, &basis, 2).unwrap();
        assert_eq!(d1.u().shape(), &[1, 9]);
        assert_eq!(d1.responses()[0], 2.0);
    }

    #[test]
    fn inconsistent_grids_are_rejected() {
        let g1 = uniform_grid(101);
        let g2 = uniform_grid(51);
        let basis = BSplineBasis::new(3, 2);
        let samples = vec![sample_from(&g1, |t| t, 0.0), sample_from(&g2, |t| t, 0.0)];
        match build_design(&samples, &basis, 2) {
            Err(FcqrError::Data(_)) => {}
            other => panic!("expected data error, got {other:?}"),
        }
    }

    #[test]
    fn grid_must_cover_unit_interval() {
        let grid: Arc<[f64]> = (0..50).map(|i| i as f64 / 100.0).collect::<Vec<_>>().into();
        let basis = BSplineBasis::new(3, 2);
        let s = sample_from(&grid, |t| t, 0.0);
        match design_vector(&s, &basis, QuadratureRule::Trapezoid) {
            Err(FcqrError::Domain(_)) => {}
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn non_finite_values_are_rejected_at_construction() {
        let grid = uniform_grid(10);
        let mut values = vec![0.0; 10];
        values[3] = f64::NAN;
        assert!(matches!(
            FunctionalSample::new(grid.clone(), values, 0.0),
            Err(FcqrError::Data(_))
        ));
        assert!(matches!(
            FunctionalSample::new(grid, vec![0.0; 10], f64::INFINITY),
            Err(FcqrError::Data(_))
        ));
    }

    #[test]
    fn simpson_matches_trapezoid_on_smooth_curve() {
        let grid = uniform_grid(101);
        let basis = BSplineBasis::new(3, 3);
        let s = sample_from(&grid, |t| (t * 3.0).sin(), 0.0);
        let ut = design_vector(&s, &basis, QuadratureRule::Trapezoid).unwrap();
        let us = design_vector(&s, &basis, QuadratureRule::Simpson).unwrap();
        for l in 0..basis.basis_count() {
            assert!((ut[l] - us[l]).abs() < 1e-4);
        }
    }

    #[test]
    fn simpson_rejects_even_grids() {
        let grid = uniform_grid(100);
        let basis = BSplineBasis::new(3, 3);
        let s = sample_from(&grid, |t| t, 0.0);
        assert!(design_vector(&s, &basis, QuadratureRule::Simpson).is_err());
    }

    #[test]
    fn augment_places_indicator() {
        let u = array![1.0, 2.0];
        let a1 = augment(u.view(), 1, 2).unwrap();
        assert_eq!(a1.vector.to_vec(), vec![1.0, 2.0, 1.0, 0.0]);
        let a2 = augment(u.view(), 2, 2).unwrap();
        assert_eq!(a2.vector.to_vec(), vec![1.0, 2.0, 0.0, 1.0]);

        let zeros = Array1::<f64>::zeros(9);
        let a = augment(zeros.view(), 5, 9).unwrap();
        assert_eq!(a.vector.len(), 18);
        for (i, &v) in a.vector.iter().enumerate() {
            assert_eq!(v, if i == 13 { 1.0 } else { 0.0 });
        }

        assert!(augment(u.view(), 0, 2).is_err());
        assert!(augment(u.view(), 3, 2).is_err());
    }

    #[test]
    fn padded_penalty_block_structure() {
        let d = array![[0.5, 0.0], [0.0, 0.5]];
        let p = padded_penalty(&d, 1);
        assert_eq!(p.shape(), &[3, 3]);
        assert_eq!(p[[0, 0]], 0.5);
        assert_eq!(p[[1, 1]], 0.5);
        assert_eq!(p[[2, 2]], 0.0);

        let unchanged = padded_penalty(&d, 0);
        assert_eq!(unchanged, d);

        // Trace preserved for any padding.
        let trace_before = d.diag().sum();
        let trace_after = padded_penalty(&d, 4).diag().sum();
        assert_eq!(trace_before, trace_after);
    }

    #[test]
    fn default_knot_heuristic() {
        assert_eq!(default_interior_knots(10_000), 10);
        // powf rounding may land on either side of the integer boundary.
        assert!((15..=16).contains(&default_interior_knots(100_000)));
        assert!(default_interior_knots(30) >= 2);
        // Grows with n, capped by sqrt(n)/2.
        assert!(default_interior_knots(1_000_000) <= 500);
    }
}
