//! Shared test support: an independent epigraph-form oracle for the
//! weighted penalized CQR objective, plus scenario helpers.
//!
//! The oracle reformulates `min Σ_i Σ_k w_i ρ_{τ_k}(y_i - b_k - U_i θ)
//! + (λ/2) θ^T D θ` with split nonnegative residuals `u_ik - v_ik =
//! y_i - b_k - U_i θ`, yielding a quadratic program solved by a generic
//! interior-point conic solver. It shares no code with the smoothing
//! continuation path it is used to check.

#![allow(dead_code)]

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, IPSolver, NonnegativeConeT, SolverStatus, ZeroConeT,
};
use ndarray::{Array1, Array2};

/// Solution of the epigraph QP: optimal value and the minimizer.
pub struct OracleSolution {
    pub objective: f64,
    pub theta: Array1<f64>,
    pub intercepts: Array1<f64>,
}

/// Solve the weighted penalized CQR problem as an epigraph QP.
pub fn epigraph_oracle(
    u: &Array2<f64>,
    y: &Array1<f64>,
    weights: &Array1<f64>,
    taus: &[f64],
    lambda: f64,
    penalty: &Array2<f64>,
) -> OracleSolution {
    let n = u.nrows();
    let d = u.ncols();
    let k_levels = taus.len();
    let nk = n * k_levels;
    let n_vars = d + k_levels + 2 * nk;
    let n_eq = nk;
    let n_rows = n_eq + 2 * nk;

    // Quadratic cost: (λ/2) θ^T D θ  =>  P upper triangle = λ D.
    let mut p_colptr = vec![0usize];
    let mut p_rowval = Vec::new();
    let mut p_nzval = Vec::new();
    for col in 0..n_vars {
        if col < d && lambda > 0.0 {
            for row in 0..=col {
                let v = lambda * penalty[[row, col]];
                if v != 0.0 {
                    p_rowval.push(row);
                    p_nzval.push(v);
                }
            }
        }
        p_colptr.push(p_rowval.len());
    }
    let p = CscMatrix::new(n_vars, n_vars, p_colptr, p_rowval, p_nzval);

    // Linear cost: w_i τ_k on u_ik, w_i (1 - τ_k) on v_ik.
    let mut q = vec![0.0; n_vars];
    for i in 0..n {
        for (k, &tau) in taus.iter().enumerate() {
            q[d + k_levels + i * k_levels + k] = weights[i] * tau;
            q[d + k_levels + nk + i * k_levels + k] = weights[i] * (1.0 - tau);
        }
    }

    // Constraints (rows):
    //   0..nk          U_i θ + b_k + u_ik - v_ik = y_i   (zero cone)
    //   nk..2nk        -u_ik ≤ 0                          (nonneg cone)
    //   2nk..3nk       -v_ik ≤ 0                          (nonneg cone)
    let mut a_colptr = vec![0usize];
    let mut a_rowval = Vec::new();
    let mut a_nzval = Vec::new();
    for j in 0..d {
        for i in 0..n {
            let uij = u[[i, j]];
            if uij != 0.0 {
                for k in 0..k_levels {
                    a_rowval.push(i * k_levels + k);
                    a_nzval.push(uij);
                }
            }
        }
        // Row indices must ascend within the column.
        let start = a_colptr[j];
        let mut pairs: Vec<(usize, f64)> = a_rowval[start..]
            .iter()
            .cloned()
            .zip(a_nzval[start..].iter().cloned())
            .collect();
        pairs.sort_by_key(|&(r, _)| r);
        for (idx, (r, v)) in pairs.into_iter().enumerate() {
            a_rowval[start + idx] = r;
            a_nzval[start + idx] = v;
        }
        a_colptr.push(a_rowval.len());
    }
    for k in 0..k_levels {
        for i in 0..n {
            a_rowval.push(i * k_levels + k);
            a_nzval.push(1.0);
        }
        a_colptr.push(a_rowval.len());
    }
    for slack in 0..2 {
        for i in 0..n {
            for k in 0..k_levels {
                let idx = i * k_levels + k;
                let sign = if slack == 0 { 1.0 } else { -1.0 };
                a_rowval.push(idx);
                a_nzval.push(sign);
                a_rowval.push(nk * (1 + slack) + idx);
                a_nzval.push(-1.0);
                a_colptr.push(a_rowval.len());
            }
        }
    }
    let a = CscMatrix::new(n_rows, n_vars, a_colptr, a_rowval, a_nzval);

    let mut b = vec![0.0; n_rows];
    for i in 0..n {
        for k in 0..k_levels {
            b[i * k_levels + k] = y[i];
        }
    }

    let cones = vec![ZeroConeT(nk), NonnegativeConeT(2 * nk)];
    let settings = DefaultSettings {
        verbose: false,
        max_iter: 200,
        ..Default::default()
    };
    let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, settings);
    solver.solve();
    assert!(
        matches!(
            solver.solution.status,
            SolverStatus::Solved | SolverStatus::AlmostSolved
        ),
        "oracle failed with status {:?}",
        solver.solution.status
    );

    let x = &solver.solution.x;
    OracleSolution {
        objective: solver.solution.obj_val,
        theta: Array1::from_iter(x[..d].iter().cloned()),
        intercepts: Array1::from_iter(x[d..d + k_levels].iter().cloned()),
    }
}
