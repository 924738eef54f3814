//! Signal synthesis, compressive Gaussian measurements, CV fold plans, and
//! recovery metrics.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::SpectralBasis;
use crate::rng::{self, Stream};

/// A graph signal, optionally carrying the spectral coefficients it was
/// synthesized from.
#[derive(Debug, Clone)]
pub struct GraphSignal {
    pub x: DVector<f64>,
    pub coefficients: Option<SpectralCoefficients>,
}

#[derive(Debug, Clone)]
pub struct SpectralCoefficients {
    pub theta: DVector<f64>,
    pub support: Vec<usize>,
}

impl GraphSignal {
    /// Build `x = V theta` from explicit support indices and coefficients.
    pub fn from_coefficients(
        basis: &SpectralBasis,
        support: Vec<usize>,
        values: &[f64],
    ) -> Result<Self> {
        let n = basis.n();
        if support.len() != values.len() {
            return Err(Error::dim("support and coefficient lengths differ"));
        }
        let mut theta = DVector::<f64>::zeros(n);
        for (&k, &v) in support.iter().zip(values) {
            if k >= n {
                return Err(Error::arg(format!("support index {k} out of range")));
            }
            theta[k] = v;
        }
        let x = &basis.vectors * &theta;
        Ok(GraphSignal {
            x,
            coefficients: Some(SpectralCoefficients { theta, support }),
        })
    }
}

/// Signal with `s` nonzero spectral coefficients at uniformly random
/// indices, each coefficient standard normal.
pub fn sparse_spectrum_signal(basis: &SpectralBasis, s: usize, seed: u64) -> Result<GraphSignal> {
    let n = basis.n();
    if s == 0 || s > n {
        return Err(Error::arg(format!("sparsity {s} out of range 1..={n}")));
    }
    let mut rng = rng::substream(seed, "signal");
    let mut support = rng::sample_distinct(&mut rng, n, s);
    support.sort_unstable();
    let values: Vec<f64> = (0..s).map(|_| rng::standard_normal(&mut rng)).collect();
    GraphSignal::from_coefficients(basis, support, &values)
}

/// Signal supported on the `s` lowest-frequency eigenvectors.
pub fn band_limited_signal(basis: &SpectralBasis, s: usize, seed: u64) -> Result<GraphSignal> {
    let n = basis.n();
    if s == 0 || s > n {
        return Err(Error::arg(format!("sparsity {s} out of range 1..={n}")));
    }
    let mut rng = rng::substream(seed, "signal");
    let support: Vec<usize> = (0..s).collect();
    let values: Vec<f64> = (0..s).map(|_| rng::standard_normal(&mut rng)).collect();
    GraphSignal::from_coefficients(basis, support, &values)
}

/// Assignment of measurement rows to cross-validation folds. Folds are
/// disjoint with exactly `floor(m / k)` rows each; any remainder rows stay on
/// the recovery side of every fold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    m: usize,
    folds: Vec<Vec<usize>>,
}

impl FoldPlan {
    pub fn kfold(m: usize, k: usize, seed: u64) -> Result<Self> {
        if k < 1 || k > m {
            return Err(Error::arg(format!("fold count {k} out of range 1..={m}")));
        }
        let mut rng = rng::substream(seed, "folds");
        Self::kfold_from(m, k, &mut rng)
    }

    pub(crate) fn kfold_from(m: usize, k: usize, rng: &mut Stream) -> Result<Self> {
        if k < 1 || k > m {
            return Err(Error::arg(format!("fold count {k} out of range 1..={m}")));
        }
        let size = m / k;
        let perm = rng::permutation(rng, m);
        let folds = (0..k)
            .map(|f| {
                let mut rows: Vec<usize> = perm[f * size..(f + 1) * size].to_vec();
                rows.sort_unstable();
                rows
            })
            .collect();
        Ok(FoldPlan { m, folds })
    }

    /// One split holding out `m_cv` rows.
    pub fn single_split(m: usize, m_cv: usize, seed: u64) -> Result<Self> {
        if m_cv == 0 || m_cv >= m {
            return Err(Error::arg(format!(
                "held-out count {m_cv} out of range 1..{m}"
            )));
        }
        let mut rng = rng::substream(seed, "folds");
        let mut rows = rng::sample_distinct(&mut rng, m, m_cv);
        rows.sort_unstable();
        Ok(FoldPlan {
            m,
            folds: vec![rows],
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.folds.len()
    }

    /// Rows held out by fold `f`.
    pub fn cv_rows(&self, f: usize) -> &[usize] {
        &self.folds[f]
    }

    /// Rows used for recovery when fold `f` is held out.
    pub fn recovery_rows(&self, f: usize) -> Vec<usize> {
        let held: std::collections::BTreeSet<usize> = self.folds[f].iter().copied().collect();
        (0..self.m).filter(|r| !held.contains(r)).collect()
    }

    /// Total number of held-out rows across folds, the `m_cv` entering the
    /// noise-floor statistics.
    pub fn total_cv_rows(&self) -> usize {
        self.folds.iter().map(Vec::len).sum()
    }
}

/// Compressive measurements `y = Phi x + eta` with the noise level and fold
/// plan used downstream.
#[derive(Debug, Clone)]
pub struct MeasurementSet {
    pub y: DVector<f64>,
    pub phi: DMatrix<f64>,
    pub sigma: f64,
    pub folds: FoldPlan,
}

impl MeasurementSet {
    pub fn m(&self) -> usize {
        self.y.len()
    }

    /// True when in the compressive regime `m < n`; exceeding it is allowed
    /// but flagged.
    pub fn is_compressive(&self) -> bool {
        self.phi.nrows() < self.phi.ncols()
    }
}

pub const DEFAULT_FOLDS: usize = 5;

/// Measure a signal with an i.i.d. standard normal matrix and Gaussian noise
/// of deviation `sigma = beta * ||Phi x||_1 / m`, planning `k_folds` CV
/// folds from the same seed.
pub fn measure_with_folds(
    x: &DVector<f64>,
    m: usize,
    beta: f64,
    k_folds: usize,
    seed: u64,
) -> Result<MeasurementSet> {
    if m == 0 {
        return Err(Error::arg("need at least one measurement"));
    }
    let n = x.len();
    let mut rng = rng::substream(seed, "phi");
    let phi = DMatrix::from_fn(m, n, |_, _| rng::standard_normal(&mut rng));
    let clean = &phi * x;
    let sigma = beta * clean.iter().map(|v| v.abs()).sum::<f64>() / m as f64;
    let mut noise_rng = rng::substream(seed, "noise");
    let y = if sigma > 0.0 {
        DVector::from_fn(m, |i, _| clean[i] + sigma * rng::standard_normal(&mut noise_rng))
    } else {
        clean
    };
    let mut fold_rng = rng::substream(seed, "folds");
    let folds = FoldPlan::kfold_from(m, k_folds, &mut fold_rng)?;
    Ok(MeasurementSet {
        y,
        phi,
        sigma,
        folds,
    })
}

pub fn measure(x: &DVector<f64>, m: usize, beta: f64, seed: u64) -> Result<MeasurementSet> {
    measure_with_folds(x, m, beta, DEFAULT_FOLDS.min(m), seed)
}

/// Relative root-mean-square error `||xh - xs||_2 / ||xs||_2`.
pub fn rrmse(estimate: &DVector<f64>, truth: &DVector<f64>) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(Error::dim("rrmse operands differ in length"));
    }
    let denom = truth.norm();
    if denom == 0.0 {
        return Err(Error::arg("rrmse is undefined for a zero ground truth"));
    }
    Ok((estimate - truth).norm() / denom)
}

/// Write a vector as CSV: a header naming the quantity, then one value per
/// line.
pub fn write_vector_csv(path: &std::path::Path, name: &str, v: &DVector<f64>) -> Result<()> {
    let mut out = String::with_capacity(v.len() * 20 + name.len() + 1);
    out.push_str(name);
    out.push('\n');
    for value in v.iter() {
        out.push_str(&format!("{value}\n"));
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_vector_csv(path: &std::path::Path, name: &str) -> Result<DVector<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse(format!("{}: empty csv", path.display())))?;
    if header.trim() != name {
        return Err(Error::Parse(format!(
            "{}: expected header '{name}', found '{header}'",
            path.display()
        )));
    }
    let values: Vec<f64> = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad value '{l}'")))
        })
        .collect::<Result<_>>()?;
    Ok(DVector::from_vec(values))
}

/// Write a matrix as CSV in row-major order, one value per line.
pub fn write_matrix_csv(path: &std::path::Path, name: &str, m: &DMatrix<f64>) -> Result<()> {
    let mut out = String::with_capacity(m.len() * 20 + name.len() + 1);
    out.push_str(name);
    out.push('\n');
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            out.push_str(&format!("{}\n", m[(r, c)]));
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_matrix_csv(
    path: &std::path::Path,
    name: &str,
    rows: usize,
    cols: usize,
) -> Result<DMatrix<f64>> {
    let flat = read_vector_csv(path, name)?;
    if flat.len() != rows * cols {
        return Err(Error::dim(format!(
            "{}: expected {rows}x{cols} = {} values, found {}",
            path.display(),
            rows * cols,
            flat.len()
        )));
    }
    Ok(DMatrix::from_fn(rows, cols, |r, c| flat[r * cols + c]))
}
