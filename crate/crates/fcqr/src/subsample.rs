//! Subsampling probabilities, with-replacement drawing, the two-step
//! estimator, and sandwich variance estimation.
//!
//! The score of row `i` at level `k` is `{τ_k - 1(ε_i < b_k)} Ũ_ik` with
//! `Ũ_ik` the intercept-augmented design row. Summing over levels gives
//! the row score ψ_i; its norm (optionally preconditioned by the inverse
//! curvature matrix) yields the optimal sampling probabilities. A uniform
//! pilot supplies the residuals and intercepts those scores need.

use ndarray::{s, Array1, Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::basis::BSplineBasis;
use crate::design::{padded_penalty, DesignMatrix};
use crate::error::{FcqrError, Result};
use crate::linalg::SpdFactor;
use crate::seed::derive_seed;
use crate::solver::{quantile_grid, solve, CqrFit, CqrProblem, SolveOptions};

/// How the sampling probabilities are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingCriterion {
    /// π_i = 1/N, single stage (no pilot).
    Uniform,
    /// π_i ∝ ‖ψ_i‖; needs only pilot residuals and intercepts.
    LOptimal,
    /// π_i ∝ ‖H_N^{-1} ψ_i‖; additionally needs the density estimates
    /// entering H_N.
    AOptimal,
}

impl SamplingCriterion {
    pub fn as_str(&self) -> &'static str {
        match self {
            SamplingCriterion::Uniform => "unif",
            SamplingCriterion::LOptimal => "lopt",
            SamplingCriterion::AOptimal => "aopt",
        }
    }
}

impl std::str::FromStr for SamplingCriterion {
    type Err = FcqrError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "unif" | "uniform" => Ok(SamplingCriterion::Uniform),
            "lopt" => Ok(SamplingCriterion::LOptimal),
            "aopt" => Ok(SamplingCriterion::AOptimal),
            other => Err(FcqrError::InvalidArgument(format!(
                "unknown sampling criterion '{other}'; expected unif, lopt, or aopt"
            ))),
        }
    }
}

/// A drawn with-replacement subsample: the probability vector it was
/// drawn from, the draw order, per-row multiplicities, and the
/// inverse-probability weights of the drawn rows.
#[derive(Debug, Clone)]
pub struct SubsamplePlan {
    probabilities: Array1<f64>,
    drawn_indices: Vec<usize>,
    counts: Vec<(usize, u32)>,
    rng_seed: u64,
}

impl SubsamplePlan {
    /// Full probability vector over the dataset.
    pub fn probabilities(&self) -> &Array1<f64> {
        &self.probabilities
    }

    /// Indices in draw order, with multiplicity.
    pub fn drawn_indices(&self) -> &[usize] {
        &self.drawn_indices
    }

    /// Unique drawn rows with their multiplicities, ascending by index.
    pub fn counts(&self) -> &[(usize, u32)] {
        &self.counts
    }

    /// Inverse-probability weights `R_i / (N π_i)`, aligned with
    /// [`counts`](Self::counts).
    pub fn weights(&self) -> Vec<f64> {
        let n_total = self.probabilities.len() as f64;
        self.counts
            .iter()
            .map(|&(i, r)| r as f64 / (n_total * self.probabilities[i]))
            .collect()
    }

    /// Number of draws.
    pub fn size(&self) -> usize {
        self.drawn_indices.len()
    }

    pub fn seed(&self) -> u64 {
        self.rng_seed
    }
}

/// Pilot stage output: the uniform-subsample fit plus the residuals of
/// the pilot rows (used for density estimation).
#[derive(Debug, Clone)]
pub struct PilotEstimate {
    pub theta: Array1<f64>,
    pub intercepts: Array1<f64>,
    pub pilot_size: usize,
    pub residuals: Array1<f64>,
}

/// Row score `ψ_i = Σ_k {τ_k - 1(ε_i < b_k)} Ũ_ik`: the design block is
/// `U_i` times the summed level coefficients and the intercept block is
/// the per-level coefficient vector (never zero, since each coefficient
/// is τ_k or τ_k - 1).
pub fn score_vector(
    residual: f64,
    intercepts: &Array1<f64>,
    taus: &[f64],
    u_row: ArrayView1<f64>,
) -> Array1<f64> {
    let d = u_row.len();
    let k_levels = taus.len();
    debug_assert_eq!(intercepts.len(), k_levels);
    let mut out = Array1::<f64>::zeros(d + k_levels);
    let mut total = 0.0;
    for (k, &tau) in taus.iter().enumerate() {
        let c = tau - if residual < intercepts[k] { 1.0 } else { 0.0 };
        out[d + k] = c;
        total += c;
    }
    for j in 0..d {
        out[j] = total * u_row[j];
    }
    out
}

/// Per-level score coefficients for every row: `C[i, k] = τ_k - 1(ε_i < b_k)`.
fn score_coefficients(
    residuals: &Array1<f64>,
    intercepts: &Array1<f64>,
    taus: &[f64],
) -> Array2<f64> {
    let n = residuals.len();
    let k_levels = taus.len();
    let mut c = Array2::<f64>::zeros((n, k_levels));
    for i in 0..n {
        for (k, &tau) in taus.iter().enumerate() {
            c[[i, k]] = tau - if residuals[i] < intercepts[k] { 1.0 } else { 0.0 };
        }
    }
    c
}

fn validate_residuals(residuals: &Array1<f64>, design: &DesignMatrix) -> Result<()> {
    if residuals.len() != design.n_samples() {
        return Err(FcqrError::InvalidArgument(format!(
            "{} residuals for {} design rows",
            residuals.len(),
            design.n_samples()
        )));
    }
    if residuals.iter().any(|v| !v.is_finite()) {
        return Err(FcqrError::Data(
            "residuals contain non-finite values".to_string(),
        ));
    }
    Ok(())
}

fn normalize_to_simplex(mut norms: Array1<f64>) -> Array1<f64> {
    let total: f64 = norms.iter().sum();
    norms.mapv_inplace(|v| v / total);
    norms
}

/// Score-norm sampling probabilities `π_i ∝ ‖ψ_i‖₂`.
pub fn lopt_probabilities(
    residuals: &Array1<f64>,
    intercepts: &Array1<f64>,
    design: &DesignMatrix,
    taus: &[f64],
) -> Result<Array1<f64>> {
    validate_residuals(residuals, design)?;
    let u = design.u();
    let c = score_coefficients(residuals, intercepts, taus);
    let mut norms = Array1::<f64>::zeros(u.nrows());
    for i in 0..u.nrows() {
        let total: f64 = c.row(i).sum();
        let u_sq: f64 = u.row(i).iter().map(|v| v * v).sum();
        let c_sq: f64 = c.row(i).iter().map(|v| v * v).sum();
        norms[i] = (total * total * u_sq + c_sq).sqrt();
    }
    Ok(normalize_to_simplex(norms))
}

/// Curvature-preconditioned sampling probabilities `π_i ∝ ‖H_N^{-1} ψ_i‖₂`.
pub fn aopt_probabilities(
    residuals: &Array1<f64>,
    intercepts: &Array1<f64>,
    design: &DesignMatrix,
    taus: &[f64],
    curvature: &Array2<f64>,
) -> Result<Array1<f64>> {
    validate_residuals(residuals, design)?;
    let u = design.u();
    let d = u.ncols();
    let k_levels = taus.len();
    if curvature.nrows() != d + k_levels || curvature.ncols() != d + k_levels {
        return Err(FcqrError::InvalidArgument(format!(
            "curvature matrix is {}x{}, expected {}",
            curvature.nrows(),
            curvature.ncols(),
            d + k_levels
        )));
    }
    let factor = SpdFactor::new(curvature)?;
    let inv = factor.inverse();

    // H^{-1} ψ_i = s_i (W_u U_i) + W_e c_i, batched over rows.
    let c = score_coefficients(residuals, intercepts, taus);
    let w_u = inv.slice(s![.., ..d]);
    let w_e = inv.slice(s![.., d..]);
    let t_u = u.dot(&w_u.t());
    let t_e = c.dot(&w_e.t());
    let mut norms = Array1::<f64>::zeros(u.nrows());
    for i in 0..u.nrows() {
        let s_i: f64 = c.row(i).sum();
        let mut acc = 0.0;
        for j in 0..d + k_levels {
            let v = s_i * t_u[[i, j]] + t_e[[i, j]];
            acc += v * v;
        }
        norms[i] = acc.sqrt();
    }
    Ok(normalize_to_simplex(norms))
}

/// Draw `n` rows with replacement via the alias method (O(N) setup,
/// O(1) per draw). Deterministic given the seed.
pub fn draw_with_replacement(
    probabilities: &Array1<f64>,
    n: usize,
    seed: u64,
) -> Result<SubsamplePlan> {
    let rows = probabilities.len();
    if rows == 0 || n == 0 {
        return Err(FcqrError::InvalidArgument(
            "need a nonempty probability vector and at least one draw".to_string(),
        ));
    }
    if probabilities.iter().any(|&p| !p.is_finite() || p <= 0.0) {
        return Err(FcqrError::InvalidArgument(
            "every sampling probability must be strictly positive".to_string(),
        ));
    }
    let total: f64 = probabilities.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(FcqrError::InvalidArgument(format!(
            "sampling probabilities sum to {total}, not 1"
        )));
    }

    // Vose alias tables.
    let mut prob = vec![0.0f64; rows];
    let mut alias = vec![0usize; rows];
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut scaled: Vec<f64> = probabilities.iter().map(|&p| p * rows as f64).collect();
    for (i, &v) in scaled.iter().enumerate() {
        if v < 1.0 {
            small.push(i);
        } else {
            large.push(i);
        }
    }
    while !small.is_empty() && !large.is_empty() {
        let s = small.pop().expect("small stack checked nonempty");
        let l = *large.last().expect("large stack checked nonempty");
        prob[s] = scaled[s];
        alias[s] = l;
        scaled[l] -= 1.0 - scaled[s];
        if scaled[l] < 1.0 {
            large.pop();
            small.push(l);
        }
    }
    // Residual slots carry (numerically) unit mass.
    for i in large.into_iter().chain(small) {
        prob[i] = 1.0;
        alias[i] = i;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut drawn = Vec::with_capacity(n);
    let mut count = vec![0u32; rows];
    for _ in 0..n {
        let col = rng.gen_range(0..rows);
        let idx = if rng.r#gen::<f64>() < prob[col] {
            col
        } else {
            alias[col]
        };
        drawn.push(idx);
        count[idx] += 1;
    }
    let counts: Vec<(usize, u32)> = count
        .into_iter()
        .enumerate()
        .filter(|&(_, r)| r > 0)
        .collect();

    Ok(SubsamplePlan {
        probabilities: probabilities.clone(),
        drawn_indices: drawn,
        counts,
        rng_seed: seed,
    })
}

/// Gaussian-kernel density estimates at the fitted intercepts, with
/// Silverman bandwidth. Strictly positive by construction.
pub fn density_at_quantiles(
    residuals: &Array1<f64>,
    intercepts: &Array1<f64>,
) -> Result<Array1<f64>> {
    let n = residuals.len();
    if n < 50 {
        return Err(FcqrError::InvalidArgument(format!(
            "density estimation needs at least 50 residuals, got {n}"
        )));
    }
    if residuals.iter().any(|v| !v.is_finite()) {
        return Err(FcqrError::Data(
            "residuals contain non-finite values".to_string(),
        ));
    }
    let mean = residuals.sum() / n as f64;
    let var = residuals
        .iter()
        .map(|r| (r - mean) * (r - mean))
        .sum::<f64>()
        / (n - 1) as f64;
    let sd = var.sqrt();
    let slice = residuals.as_slice().expect("residuals are contiguous");
    let iqr = crate::solver::empirical_quantile(slice, 0.75)
        - crate::solver::empirical_quantile(slice, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    if !(spread > 0.0) {
        return Err(FcqrError::Numerical(
            "residuals are degenerate (zero spread); cannot estimate a density".to_string(),
        ));
    }
    let h = 0.9 * spread * (n as f64).powf(-0.2);

    const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
    let mut out = Array1::<f64>::zeros(intercepts.len());
    for (k, &b) in intercepts.iter().enumerate() {
        let mut acc = 0.0;
        for &r in residuals.iter() {
            let z = (b - r) / h;
            acc += (-0.5 * z * z).exp();
        }
        out[k] = (acc * INV_SQRT_2PI / (n as f64 * h)).max(f64::MIN_POSITIVE);
    }
    Ok(out)
}

/// Curvature matrix `H_N = G_N + (λ/N) diag(D_q, 0)` with the density
/// estimates standing in for the unknown error density.
pub fn curvature_matrix(
    design: &DesignMatrix,
    densities: &Array1<f64>,
    lambda: f64,
) -> Array2<f64> {
    let u = design.u();
    let n = u.nrows() as f64;
    let d = u.ncols();
    let k_levels = densities.len();
    let dim = d + k_levels;

    let mut g = Array2::<f64>::zeros((dim, dim));
    let f_total: f64 = densities.iter().sum();
    let utu = u.t().dot(u);
    let col_means = u.t().dot(&Array1::<f64>::ones(u.nrows())) / n;
    for a in 0..d {
        for b in 0..d {
            g[[a, b]] = f_total / n * utu[[a, b]];
        }
    }
    for (k, &fk) in densities.iter().enumerate() {
        for a in 0..d {
            g[[a, d + k]] = fk * col_means[a];
            g[[d + k, a]] = fk * col_means[a];
        }
        g[[d + k, d + k]] = fk;
    }

    let pad = padded_penalty(design.penalty(), k_levels);
    g + &(pad * (lambda / n))
}

/// The assembled variance pieces of the subsample estimator, plus the
/// pointwise standard deviation of the fitted slope function.
#[derive(Debug, Clone)]
pub struct SandwichVariance {
    v_pi: Array2<f64>,
    g_n: Array2<f64>,
    h_n: Array2<f64>,
    densities: Array1<f64>,
    sd_matrix: Array2<f64>,
    basis: BSplineBasis,
    scale: f64,
}

impl SandwichVariance {
    /// Score-level variance `V_π`.
    pub fn v_pi(&self) -> &Array2<f64> {
        &self.v_pi
    }

    /// Density-weighted curvature `G_N`.
    pub fn g_n(&self) -> &Array2<f64> {
        &self.g_n
    }

    /// Penalized curvature `H_N`.
    pub fn h_n(&self) -> &Array2<f64> {
        &self.h_n
    }

    pub fn densities(&self) -> &Array1<f64> {
        &self.densities
    }

    /// Asymptotic covariance `H_N^{-1} V_π H_N^{-1}` of the scaled
    /// coefficient estimate.
    pub fn asymptotic_covariance(&self) -> &Array2<f64> {
        &self.sd_matrix
    }

    /// Standard deviation of the fitted slope function at `t`:
    /// `sqrt(B̃(t)^T H^{-1} V H^{-1} B̃(t) · M/n)` with `B̃` the
    /// zero-padded basis vector.
    pub fn pointwise_sd(&self, t: f64) -> Result<f64> {
        let b = self.basis.evaluate(t, 0)?;
        let d = b.len();
        let block = self.sd_matrix.slice(s![..d, ..d]);
        let quad = b.dot(&block.dot(&b));
        Ok((quad.max(0.0) * self.scale).sqrt())
    }
}

/// Assemble `V_π`, `G_N`, and `H_N` at a fitted estimate, for the given
/// sampling probabilities and subsample size.
pub fn sandwich_variance(
    fit: &CqrFit,
    probabilities: &Array1<f64>,
    design: &DesignMatrix,
    taus: &[f64],
    lambda: f64,
    densities: &Array1<f64>,
    subsample_size: usize,
) -> Result<SandwichVariance> {
    sandwich_variance_impl(
        fit,
        probabilities,
        design,
        taus,
        lambda,
        densities,
        subsample_size,
        false,
    )
}

/// [`sandwich_variance`] with the finite-population refinement: each row
/// weight becomes `1/(N²π_i) - (n-1)/N²`. Tightens the variance; the
/// plug-in estimate is no longer guaranteed positive semidefinite.
pub fn sandwich_variance_with_correction(
    fit: &CqrFit,
    probabilities: &Array1<f64>,
    design: &DesignMatrix,
    taus: &[f64],
    lambda: f64,
    densities: &Array1<f64>,
    subsample_size: usize,
) -> Result<SandwichVariance> {
    sandwich_variance_impl(
        fit,
        probabilities,
        design,
        taus,
        lambda,
        densities,
        subsample_size,
        true,
    )
}

#[allow(clippy::too_many_arguments)]
fn sandwich_variance_impl(
    fit: &CqrFit,
    probabilities: &Array1<f64>,
    design: &DesignMatrix,
    taus: &[f64],
    lambda: f64,
    densities: &Array1<f64>,
    subsample_size: usize,
    finite_population_correction: bool,
) -> Result<SandwichVariance> {
    let u = design.u();
    let n = u.nrows();
    let d = u.ncols();
    let k_levels = taus.len();
    if probabilities.len() != n {
        return Err(FcqrError::InvalidArgument(format!(
            "{} probabilities for {n} rows",
            probabilities.len()
        )));
    }
    if probabilities.iter().any(|&p| !p.is_finite() || p <= 0.0) {
        return Err(FcqrError::InvalidArgument(
            "sampling probabilities must be strictly positive".to_string(),
        ));
    }
    if densities.len() != k_levels {
        return Err(FcqrError::InvalidArgument(format!(
            "{} density values for {k_levels} levels",
            densities.len()
        )));
    }

    let residuals = design.responses() - &u.dot(&fit.theta);
    let c = score_coefficients(&residuals, &fit.intercepts, taus);

    // V = (1/M) Σ ψ_i ψ_i^T / (N² π_i), assembled as Φ^T Φ on scaled rows.
    let m = design.basis().interior_knot_count().max(1) as f64;
    let nf = n as f64;
    let mut phi = Array2::<f64>::zeros((n, d + k_levels));
    for i in 0..n {
        let scale = 1.0 / (nf * probabilities[i].sqrt());
        let total: f64 = c.row(i).sum();
        for j in 0..d {
            phi[[i, j]] = total * u[[i, j]] * scale;
        }
        for k in 0..k_levels {
            phi[[i, d + k]] = c[[i, k]] * scale;
        }
    }
    let mut v_pi = phi.t().dot(&phi) / m;
    if finite_population_correction {
        // Subtract (n-1)/(N² M) Σ ψ_i ψ_i^T.
        let mut psi = Array2::<f64>::zeros((n, d + k_levels));
        for i in 0..n {
            let total: f64 = c.row(i).sum();
            for j in 0..d {
                psi[[i, j]] = total * u[[i, j]];
            }
            for k in 0..k_levels {
                psi[[i, d + k]] = c[[i, k]];
            }
        }
        let correction = psi.t().dot(&psi) * ((subsample_size as f64 - 1.0) / (nf * nf * m));
        v_pi = &v_pi - &correction;
    }

    let h_n = curvature_matrix(design, densities, lambda);
    let g_n = &h_n - &(padded_penalty(design.penalty(), k_levels) * (lambda / nf));

    let factor = SpdFactor::new(&h_n)?;
    let h_inv = factor.inverse();
    let mut sd_matrix = h_inv.dot(&v_pi).dot(&h_inv);
    // Symmetrize against rounding drift.
    let transpose = sd_matrix.t().to_owned();
    sd_matrix = (&sd_matrix + &transpose) / 2.0;

    Ok(SandwichVariance {
        v_pi,
        g_n,
        h_n,
        densities: densities.clone(),
        sd_matrix,
        basis: design.basis().clone(),
        scale: m / subsample_size as f64,
    })
}

/// Everything the two-step run produces.
#[derive(Debug, Clone)]
pub struct TwoStepResult {
    pub fit: CqrFit,
    pub plan: SubsamplePlan,
    /// Present for the score-based criteria; the uniform criterion has no
    /// pilot stage.
    pub pilot: Option<PilotEstimate>,
}

/// Build the weighted problem restricted to the drawn rows of a plan.
fn plan_problem(
    design: &DesignMatrix,
    plan: &SubsamplePlan,
    taus: &[f64],
    lambda: f64,
) -> Result<CqrProblem> {
    let counts = plan.counts();
    let weights = plan.weights();
    let d = design.basis_count();
    let mut u_sub = Array2::<f64>::zeros((counts.len(), d));
    let mut y_sub = Array1::<f64>::zeros(counts.len());
    for (row, &(idx, _)) in counts.iter().enumerate() {
        u_sub.row_mut(row).assign(&design.u().row(idx));
        y_sub[row] = design.responses()[idx];
    }
    CqrProblem::new(
        u_sub,
        y_sub,
        Array1::from_vec(weights),
        taus.to_vec(),
        lambda,
        design.penalty().clone(),
    )
}

/// Two-step subsampled estimator on a prebuilt design.
///
/// Step 1 draws a uniform pilot of size `n0`, fits it, and converts the
/// full-data residuals into sampling probabilities under `criterion`.
/// Step 2 draws `n` rows from those probabilities and minimizes the
/// inverse-probability-weighted objective. The uniform criterion skips
/// the pilot and runs a single uniform stage of size `n`.
pub fn two_step(
    design: &DesignMatrix,
    levels: usize,
    n0: usize,
    n: usize,
    lambda: f64,
    seed: u64,
    criterion: SamplingCriterion,
) -> Result<TwoStepResult> {
    let taus = quantile_grid(levels)?;
    let n_total = design.n_samples();
    let d_aug = design.basis_count() + levels;
    if n == 0 {
        return Err(FcqrError::InvalidArgument(
            "subsample size must be at least 1".to_string(),
        ));
    }
    let options = SolveOptions::default();
    let uniform = Array1::from_elem(n_total, 1.0 / n_total as f64);

    if criterion == SamplingCriterion::Uniform {
        let plan = draw_with_replacement(&uniform, n, derive_seed(seed, 1))?;
        let problem = plan_problem(design, &plan, &taus, lambda)?;
        let fit = solve(&problem, &options)?;
        return Ok(TwoStepResult {
            fit,
            plan,
            pilot: None,
        });
    }

    if n0 < 10 * d_aug {
        return Err(FcqrError::InvalidArgument(format!(
            "pilot size {n0} is below 10 x (basis_count + levels) = {}",
            10 * d_aug
        )));
    }
    if n0 + n > n_total {
        log::warn!(
            "pilot ({n0}) plus subsample ({n}) exceeds the dataset size {n_total}; \
             the subsample no longer saves work"
        );
    }

    // Step 1: uniform pilot.
    let pilot_plan = draw_with_replacement(&uniform, n0, derive_seed(seed, 0))?;
    let pilot_problem = plan_problem(design, &pilot_plan, &taus, lambda)?;
    let pilot_fit = solve(&pilot_problem, &options).map_err(|e| {
        FcqrError::Numerical(format!("pilot stage failed on {n0} uniform draws: {e}"))
    })?;
    if !pilot_fit.converged {
        log::warn!(
            "pilot fit did not fully converge (objective {:.6e}); continuing",
            pilot_fit.objective_value
        );
    }

    // Full-data residuals under the pilot slope estimate.
    let residuals = design.responses() - &design.u().dot(&pilot_fit.theta);
    let pilot_residuals =
        Array1::from_iter(pilot_plan.drawn_indices().iter().map(|&i| residuals[i]));

    let probabilities = match criterion {
        SamplingCriterion::LOptimal => {
            lopt_probabilities(&residuals, &pilot_fit.intercepts, design, &taus)?
        }
        SamplingCriterion::AOptimal => {
            let densities = density_at_quantiles(&pilot_residuals, &pilot_fit.intercepts)?;
            let h_n = curvature_matrix(design, &densities, lambda);
            aopt_probabilities(&residuals, &pilot_fit.intercepts, design, &taus, &h_n)?
        }
        SamplingCriterion::Uniform => unreachable!(),
    };

    // Step 2: weighted fit on the optimal draw.
    let plan = draw_with_replacement(&probabilities, n, derive_seed(seed, 1))?;
    let problem = plan_problem(design, &plan, &taus, lambda)?;
    let fit = solve(&problem, &options)?;

    Ok(TwoStepResult {
        fit,
        plan,
        pilot: Some(PilotEstimate {
            theta: pilot_fit.theta,
            intercepts: pilot_fit.intercepts,
            pilot_size: n0,
            residuals: pilot_residuals,
        }),
    })
}
