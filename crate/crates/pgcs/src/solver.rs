//! Sparse recovery solvers: LASSO in an orthonormal analysis basis, the
//! cross-validation error routine and its K-fold extension, grid-searched
//! LASSO-CV, and a graph total-variation regularized variant.
//!
//! Because the basis is orthonormal, the analysis problem
//! `min ||y - Phi x||^2 + mu ||Psi' x||_1` is solved exactly in synthesis
//! form over `theta = Psi' x` with the composed operator `B = Phi Psi`, using
//! a monotone accelerated proximal-gradient scheme.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::sensing::FoldPlan;

pub const MAX_ITERATIONS: usize = 20_000;
pub const REL_TOLERANCE: f64 = 1e-10;

/// Strictly increasing grid of positive regularization weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuGrid(Vec<f64>);

impl MuGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::arg("mu grid must be nonempty"));
        }
        for w in values.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::arg("mu grid must be strictly increasing"));
            }
        }
        if values[0] <= 0.0 {
            return Err(Error::arg("mu grid values must be positive"));
        }
        Ok(MuGrid(values))
    }

    /// `count` values from `lo` to `hi` inclusive, evenly spaced in log10.
    pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if !(lo > 0.0 && hi > lo && count >= 2) {
            return Err(Error::arg("log grid needs 0 < lo < hi and count >= 2"));
        }
        let (llo, lhi) = (lo.log10(), hi.log10());
        let step = (lhi - llo) / (count - 1) as f64;
        MuGrid::new(
            (0..count)
                .map(|t| 10f64.powf(llo + step * t as f64))
                .collect(),
        )
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Default for MuGrid {
    /// 20 values between 0.001 and 1000, evenly spaced in logarithm.
    fn default() -> Self {
        MuGrid::log_spaced(1e-3, 1e3, 20).expect("valid default grid")
    }
}

/// LASSO instance `min_x ||y - Phi x||_2^2 + mu ||Psi' x||_1` with an
/// orthonormal `Psi`.
#[derive(Debug, Clone)]
pub struct LassoProblem<'a> {
    pub y: &'a DVector<f64>,
    pub phi: &'a DMatrix<f64>,
    pub psi: &'a DMatrix<f64>,
    pub mu: f64,
}

#[derive(Debug, Clone)]
pub struct LassoResult {
    pub x: DVector<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Result of a grid-searched LASSO-CV.
#[derive(Debug, Clone)]
pub struct CvResult {
    pub best_mu: f64,
    pub best_index: usize,
    /// K-fold CV error per grid value, in ascending grid order.
    pub errors: Vec<f64>,
    /// Recovered signal at the best weight, refit on all measurements.
    pub signal: DVector<f64>,
    pub refit: LassoResult,
}

fn check_finite(name: &str, it: impl IntoIterator<Item = f64>) -> Result<()> {
    for v in it {
        if !v.is_finite() {
            return Err(Error::arg(format!("non-finite value in {name}")));
        }
    }
    Ok(())
}

fn check_orthonormal(psi: &DMatrix<f64>) -> Result<()> {
    let n = psi.ncols();
    if psi.nrows() != n {
        return Err(Error::dim("basis must be square"));
    }
    let gram = psi.transpose() * psi;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            if (gram[(i, j)] - target).abs() > 1e-6 {
                return Err(Error::arg("basis is not orthonormal within 1e-6"));
            }
        }
    }
    Ok(())
}

/// Upper bound on the largest eigenvalue of `B' B`, from deterministic power
/// iteration with a safety margin.
pub(crate) fn operator_norm_sq_upper(b: &DMatrix<f64>) -> f64 {
    let n = b.ncols();
    if n == 0 || b.nrows() == 0 {
        return 0.0;
    }
    let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut lambda = 0.0f64;
    for _ in 0..60 {
        let w = b.transpose() * (b * &v);
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        lambda = norm;
        v = w / norm;
    }
    // Margin absorbs the residual convergence error of the power iteration.
    lambda * 1.1
}

struct SynthesisSolution {
    theta: DVector<f64>,
    objective: f64,
    iterations: usize,
    converged: bool,
}

fn synthesis_objective(b: &DMatrix<f64>, y: &DVector<f64>, theta: &DVector<f64>, mu: f64) -> f64 {
    let r = y - b * theta;
    r.norm_squared() + mu * theta.iter().map(|t| t.abs()).sum::<f64>()
}

/// Monotone accelerated proximal gradient for
/// `min_theta ||y - B theta||_2^2 + mu ||theta||_1`.
///
/// The accelerated point is rejected whenever it would increase the
/// objective; a rejection restarts the momentum, and the following plain
/// proximal step is guaranteed to descend, so the reported objective is
/// non-increasing across iterations.
fn solve_synthesis(
    b: &DMatrix<f64>,
    y: &DVector<f64>,
    mu: f64,
    lmax_sq: f64,
    warm: Option<&DVector<f64>>,
) -> SynthesisSolution {
    let n = b.ncols();
    let mut x = warm.cloned().unwrap_or_else(|| DVector::zeros(n));
    if lmax_sq == 0.0 {
        return SynthesisSolution {
            theta: DVector::zeros(n),
            objective: synthesis_objective(b, y, &DVector::zeros(n), mu),
            iterations: 0,
            converged: true,
        };
    }
    let step = 1.0 / (2.0 * lmax_sq);
    let threshold = step * mu;
    let mut f_x = synthesis_objective(b, y, &x, mu);
    let mut x_prev = x.clone();
    let mut v = x.clone(); // accelerated point
    let mut t = 1.0f64;
    let mut iterations = 0usize;
    let mut converged = false;
    let mut stalled = 0usize;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let grad = b.transpose() * (b * &v - y) * 2.0;
        let mut z = &v - grad * step;
        for zi in z.iter_mut() {
            *zi = soft_threshold(*zi, threshold);
        }
        let f_z = synthesis_objective(b, y, &z, mu);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        if f_z <= f_x {
            let f_old = f_x;
            x_prev.copy_from(&x);
            x.copy_from(&z);
            f_x = f_z;
            v = &x + (&z - &x) * (t / t_next) + (&x - &x_prev) * ((t - 1.0) / t_next);
            t = t_next;
            debug_assert!(f_x <= f_old + 1e-12 * f_old.abs().max(1.0));
            if f_old - f_x <= REL_TOLERANCE * f_old.max(1.0) {
                // Stop only once the decrease stays below tolerance, so the
                // terminal solution is converged in coordinates as well.
                stalled += 1;
                if stalled >= 3 {
                    converged = true;
                    break;
                }
            } else {
                stalled = 0;
            }
        } else {
            // Momentum overshot; restart from the best point.
            v = x.clone();
            t = 1.0;
            stalled = 0;
        }
    }
    SynthesisSolution {
        theta: x,
        objective: f_x,
        iterations,
        converged,
    }
}

#[inline]
fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Precomputed synthesis operator `B = Phi Psi` for one basis, shared by
/// every fold and grid point evaluated against it.
pub(crate) struct BasisOperator {
    pub b: DMatrix<f64>,
    pub lmax_sq: f64,
}

impl BasisOperator {
    pub fn new(phi: &DMatrix<f64>, psi: &DMatrix<f64>) -> Self {
        let b = phi * psi;
        let lmax_sq = operator_norm_sq_upper(&b);
        BasisOperator { b, lmax_sq }
    }

    fn rows(&self, rows: &[usize]) -> DMatrix<f64> {
        self.b.select_rows(rows.iter())
    }

    /// Squared held-out residual for one split at one weight.
    pub fn cv_error(&self, y: &DVector<f64>, cv_rows: &[usize], recovery_rows: &[usize], mu: f64)
        -> (f64, DVector<f64>) {
        let b_r = self.rows(recovery_rows);
        let y_r = y.select_rows(recovery_rows.iter());
        let sol = solve_synthesis(&b_r, &y_r, mu, self.lmax_sq, None);
        let b_cv = self.rows(cv_rows);
        let y_cv = y.select_rows(cv_rows.iter());
        let err = (y_cv - b_cv * &sol.theta).norm_squared();
        (err, sol.theta)
    }

    /// Sum of held-out errors over the folds of the plan at one weight.
    pub fn kfold_error(&self, y: &DVector<f64>, plan: &FoldPlan, mu: f64) -> f64 {
        (0..plan.k())
            .map(|f| {
                self.cv_error(y, plan.cv_rows(f), &plan.recovery_rows(f), mu)
                    .0
            })
            .sum()
    }

    /// K-fold error at every grid value. The grid is swept in descending
    /// order so each fold warm-starts from the previous solution; warm
    /// starting is a numerics-only optimization.
    pub fn grid_errors(&self, y: &DVector<f64>, plan: &FoldPlan, grid: &MuGrid, warm: bool)
        -> Vec<f64> {
        let mut errors = vec![0.0f64; grid.len()];
        for f in 0..plan.k() {
            let recovery = plan.recovery_rows(f);
            let b_r = self.rows(&recovery);
            let y_r = y.select_rows(recovery.iter());
            let b_cv = self.rows(plan.cv_rows(f));
            let y_cv = y.select_rows(plan.cv_rows(f).iter());
            let mut carry: Option<DVector<f64>> = None;
            for idx in (0..grid.len()).rev() {
                let mu = grid.values()[idx];
                let sol = solve_synthesis(&b_r, &y_r, mu, self.lmax_sq, carry.as_ref());
                errors[idx] += (&y_cv - &b_cv * &sol.theta).norm_squared();
                carry = if warm { Some(sol.theta) } else { None };
            }
        }
        errors
    }

    /// Grid search: returns `(best index, best mu, errors)`, ties broken
    /// toward the smaller weight.
    pub fn grid_search(&self, y: &DVector<f64>, plan: &FoldPlan, grid: &MuGrid, warm: bool)
        -> (usize, f64, Vec<f64>) {
        let errors = self.grid_errors(y, plan, grid, warm);
        let mut best = 0usize;
        for idx in 1..errors.len() {
            if errors[idx] < errors[best] {
                best = idx;
            }
        }
        (best, grid.values()[best], errors)
    }

    /// Solve on all measurements at one weight, returning coefficients.
    pub fn refit_all(&self, y: &DVector<f64>, mu: f64) -> SynthesisResult {
        let sol = solve_synthesis(&self.b, y, mu, self.lmax_sq, None);
        SynthesisResult {
            theta: sol.theta,
            objective: sol.objective,
            iterations: sol.iterations,
            converged: sol.converged,
        }
    }
}

pub(crate) struct SynthesisResult {
    pub theta: DVector<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Solve the LASSO. A hit of the iteration cap is reported through the
/// `converged` flag, not an error.
pub fn lasso(p: &LassoProblem) -> Result<LassoResult> {
    let (m, n) = (p.phi.nrows(), p.phi.ncols());
    if p.y.len() != m || p.psi.nrows() != n {
        return Err(Error::dim(format!(
            "inconsistent shapes: y {}, phi {m}x{n}, psi {}x{}",
            p.y.len(),
            p.psi.nrows(),
            p.psi.ncols()
        )));
    }
    if !p.mu.is_finite() || p.mu < 0.0 {
        return Err(Error::arg("mu must be finite and nonnegative"));
    }
    check_finite("y", p.y.iter().copied())?;
    check_finite("phi", p.phi.iter().copied())?;
    check_finite("psi", p.psi.iter().copied())?;
    check_orthonormal(p.psi)?;
    let op = BasisOperator::new(p.phi, p.psi);
    let sol = op.refit_all(p.y, p.mu);
    Ok(LassoResult {
        x: p.psi * &sol.theta,
        objective: sol.objective,
        iterations: sol.iterations,
        converged: sol.converged,
    })
}

/// Cross-validation error: recover on the complement of `cv_rows`, return
/// the squared residual on `cv_rows` along with the recovered signal.
pub fn cve(
    y: &DVector<f64>,
    phi: &DMatrix<f64>,
    psi: &DMatrix<f64>,
    mu: f64,
    cv_rows: &[usize],
) -> Result<(f64, DVector<f64>)> {
    let m = y.len();
    if cv_rows.is_empty() {
        return Err(Error::arg("empty CV fold"));
    }
    let held: std::collections::BTreeSet<usize> = cv_rows.iter().copied().collect();
    if held.len() != cv_rows.len() || cv_rows.iter().any(|&r| r >= m) {
        return Err(Error::arg("CV rows must be distinct and in range"));
    }
    if held.len() == m {
        return Err(Error::arg("no recovery rows left"));
    }
    check_orthonormal(psi)?;
    let recovery: Vec<usize> = (0..m).filter(|r| !held.contains(r)).collect();
    let op = BasisOperator::new(phi, psi);
    let (err, theta) = op.cv_error(y, cv_rows, &recovery, mu);
    Ok((err, psi * theta))
}

/// Sum of CV errors over the K folds of the plan.
pub fn kfold_cve(
    y: &DVector<f64>,
    phi: &DMatrix<f64>,
    psi: &DMatrix<f64>,
    mu: f64,
    plan: &FoldPlan,
) -> Result<f64> {
    if plan.k() < 2 || plan.k() > y.len() {
        return Err(Error::arg(format!("fold count {} out of range", plan.k())));
    }
    if plan.m() != y.len() {
        return Err(Error::dim("fold plan does not match measurement count"));
    }
    check_orthonormal(psi)?;
    let op = BasisOperator::new(phi, psi);
    Ok(op.kfold_error(y, plan, mu))
}

/// Grid-searched LASSO-CV: K-fold CV error for every grid weight, selection
/// of the minimizer (ties toward the smaller weight), then a refit on all
/// measurements.
pub fn lasso_cv(
    y: &DVector<f64>,
    phi: &DMatrix<f64>,
    psi: &DMatrix<f64>,
    grid: &MuGrid,
    plan: &FoldPlan,
) -> Result<CvResult> {
    if plan.m() != y.len() {
        return Err(Error::dim("fold plan does not match measurement count"));
    }
    check_orthonormal(psi)?;
    let op = BasisOperator::new(phi, psi);
    let (best_index, best_mu, errors) = op.grid_search(y, plan, grid, true);
    let sol = op.refit_all(y, best_mu);
    Ok(CvResult {
        best_mu,
        best_index,
        errors,
        signal: psi * &sol.theta,
        refit: LassoResult {
            x: DVector::zeros(0),
            objective: sol.objective,
            iterations: sol.iterations,
            converged: sol.converged,
        },
    })
}

/// Graph total variation: sum of absolute signal differences across edges.
pub fn graph_tv(x: &DVector<f64>, g: &Graph) -> Result<f64> {
    if x.len() != g.n() {
        return Err(Error::dim("signal length does not match node count"));
    }
    Ok(g.edges().map(|e| (x[e.a()] - x[e.b()]).abs()).sum())
}

/// Solve `min_x ||y - Phi x||_2^2 + mu TV_G(x)` by a primal-dual scheme over
/// the graph incidence operator. Step sizes come from the incidence norm
/// bound `sqrt(2 max_degree)`; the best iterate found is returned.
pub fn tv_solve(
    y: &DVector<f64>,
    phi: &DMatrix<f64>,
    g: &Graph,
    mu: f64,
) -> Result<LassoResult> {
    let (m, n) = (phi.nrows(), phi.ncols());
    if y.len() != m || g.n() != n {
        return Err(Error::dim("inconsistent shapes for tv_solve"));
    }
    if !mu.is_finite() || mu < 0.0 {
        return Err(Error::arg("mu must be finite and nonnegative"));
    }
    check_finite("y", y.iter().copied())?;
    check_finite("phi", phi.iter().copied())?;
    let edges: Vec<(usize, usize)> = g.edges().map(|e| (e.a(), e.b())).collect();
    let max_degree = g.degrees().into_iter().max().unwrap_or(0);
    let d_norm = (2.0 * max_degree as f64).sqrt().max(1e-12);
    let beta = 2.0 * operator_norm_sq_upper(phi);
    let sigma = 1.0 / d_norm;
    let tau = 1.0 / (beta / 2.0 + sigma * d_norm * d_norm);

    let objective = |x: &DVector<f64>| -> f64 {
        let r = y - phi * x;
        let tv: f64 = edges.iter().map(|&(a, b)| (x[a] - x[b]).abs()).sum();
        r.norm_squared() + mu * tv
    };

    let mut x = DVector::<f64>::zeros(n);
    let mut z = DVector::<f64>::zeros(edges.len());
    let mut best_x = x.clone();
    let mut best_f = objective(&x);
    let mut last_improved = 0usize;
    let mut iterations = 0usize;
    let mut converged = false;
    // Convergence: the best objective has stopped decreasing (relative
    // change below tolerance) for a window of iterations.
    const WINDOW: usize = 50;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        // x step: explicit gradient of the quadratic plus the dual pullback.
        let mut grad = phi.transpose() * (phi * &x - y) * 2.0;
        for (idx, &(a, b)) in edges.iter().enumerate() {
            grad[a] += z[idx];
            grad[b] -= z[idx];
        }
        let x_new = &x - grad * tau;
        let x_bar = &x_new * 2.0 - &x;
        for (idx, &(a, b)) in edges.iter().enumerate() {
            let v = z[idx] + sigma * (x_bar[a] - x_bar[b]);
            z[idx] = v.clamp(-mu, mu);
        }
        x = x_new;
        let f = objective(&x);
        if f < best_f - REL_TOLERANCE * best_f.max(1.0) {
            best_f = f;
            best_x.copy_from(&x);
            last_improved = iterations;
        } else if f < best_f {
            best_f = f;
            best_x.copy_from(&x);
        }
        if iterations - last_improved >= WINDOW {
            converged = true;
            break;
        }
    }
    Ok(LassoResult {
        x: best_x,
        objective: best_f,
        iterations,
        converged,
    })
}
