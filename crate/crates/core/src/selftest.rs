//! The two-copy witness `W_ρ = V + tr(ρ²)·I − 2·(I ⊗ ρ)`.
//!
//! For every state σ, `tr{W_ρ (σ⊗σ)} = tr{(σ − ρ)²} = ‖σ − ρ‖_F²`, which
//! vanishes only at σ = ρ. The functional is linear in the two-copy state,
//! so its minimum over the convex set of pairs is attained at an extreme
//! point `(σ, σ⊗σ)`; scanning those is enough to see `(ρ, ρ⊗ρ)` as the
//! unique minimizer.
//!
//! Tensor basis: `|j⟩|k⟩` is index `j·D + k`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::rng::{stream_rng, SimRng};

/// Tolerance for Hermiticity, positivity and trace checks.
pub const STATE_TOL: f64 = 1e-10;

pub type CMatrix = DMatrix<Complex64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SelfTestError {
    #[error("dimension must be at least 2, got {0}")]
    Dimension(usize),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("matrix file: {0}")]
    Parse(String),
}

/// A validated density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: CMatrix,
}

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self, SelfTestError> {
        let d = m.nrows();
        if m.ncols() != d {
            return Err(SelfTestError::DimensionMismatch(d, m.ncols()));
        }
        if d < 2 {
            return Err(SelfTestError::Dimension(d));
        }
        let herm_err = (&m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm_err > STATE_TOL {
            return Err(SelfTestError::InvalidState(format!("not Hermitian (error {herm_err:e})")));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(SelfTestError::InvalidState(format!("trace {tr} is not 1")));
        }
        let herm = (&m + m.adjoint()).scale(0.5);
        let min_eig = SymmetricEigen::new(herm).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min_eig < -STATE_TOL {
            return Err(SelfTestError::InvalidState(format!("negative eigenvalue {min_eig:e}")));
        }
        Ok(Self { m })
    }

    pub fn maximally_mixed(d: usize) -> Result<Self, SelfTestError> {
        Self::new(CMatrix::identity(d, d).unscale(d as f64))
    }

    /// `|ψ⟩⟨ψ|` for a nonzero vector, normalized.
    pub fn pure(psi: &[Complex64]) -> Result<Self, SelfTestError> {
        let v = nalgebra::DVector::from_column_slice(psi);
        let norm = v.norm();
        if norm == 0.0 {
            return Err(SelfTestError::InvalidState("zero vector".into()));
        }
        let v = v.unscale(norm);
        Self::new(&v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn purity(&self) -> f64 {
        (&self.m * &self.m).trace().re
    }

    /// Dimension header line, then one line per row of `re im` pairs.
    pub fn to_text(&self) -> String {
        let d = self.dim();
        let mut s = format!("{d}\n");
        for r in 0..d {
            let row: Vec<String> = (0..d).map(|c| format!("{:e} {:e}", self.m[(r, c)].re, self.m[(r, c)].im)).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, SelfTestError> {
        let mut tokens = text.split_whitespace();
        let d: usize = tokens
            .next()
            .ok_or_else(|| SelfTestError::Parse("missing dimension".into()))?
            .parse()
            .map_err(|e| SelfTestError::Parse(format!("dimension: {e}")))?;
        let values: Vec<f64> = tokens
            .map(|t| t.parse::<f64>().map_err(|e| SelfTestError::Parse(format!("{t:?}: {e}"))))
            .collect::<Result<_, _>>()?;
        if values.len() != 2 * d * d {
            return Err(SelfTestError::Parse(format!(
                "expected {} numbers after the dimension, found {}",
                2 * d * d,
                values.len()
            )));
        }
        let m = CMatrix::from_fn(d, d, |r, c| {
            let k = 2 * (r * d + c);
            Complex64::new(values[k], values[k + 1])
        });
        Self::new(m)
    }
}

/// Swap `V|j⟩|k⟩ = |k⟩|j⟩` on `C^D ⊗ C^D`.
pub fn permutation_operator(d: usize) -> Result<CMatrix, SelfTestError> {
    if d < 2 {
        return Err(SelfTestError::Dimension(d));
    }
    let mut v = CMatrix::zeros(d * d, d * d);
    for j in 0..d {
        for k in 0..d {
            v[(k * d + j, j * d + k)] = Complex64::new(1.0, 0.0);
        }
    }
    Ok(v)
}

/// `W_ρ = V + tr(ρ²)·I − 2·(I ⊗ ρ)`.
pub fn witness_matrix(rho: &DensityMatrix) -> CMatrix {
    let d = rho.dim();
    let v = permutation_operator(d).expect("validated states have D ≥ 2");
    let id = CMatrix::identity(d, d);
    let eye = CMatrix::identity(d * d, d * d);
    v + eye.scale(rho.purity()) - id.kronecker(rho.matrix()).scale(2.0)
}

/// `tr{W_ρ (σ⊗σ)}`.
pub fn witness_value(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64, SelfTestError> {
    if rho.dim() != sigma.dim() {
        return Err(SelfTestError::DimensionMismatch(rho.dim(), sigma.dim()));
    }
    let w = witness_matrix(rho);
    let ss = sigma.matrix().kronecker(sigma.matrix());
    let n = w.nrows();
    let mut tr = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            tr += w[(i, j)] * ss[(j, i)];
        }
    }
    assert!(tr.im.abs() < STATE_TOL, "imaginary part {} in a Hermitian trace", tr.im);
    Ok(tr.re)
}

/// `tr{(σ − ρ)²}`, computed directly.
pub fn squared_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
    let diff = sigma.matrix() - rho.matrix();
    (&diff * &diff).trace().re
}

/// Hilbert–Schmidt random state `GG†/tr(GG†)`, `G` complex Ginibre.
pub fn random_density(d: usize, rng: &mut SimRng) -> Result<DensityMatrix, SelfTestError> {
    if d < 2 {
        return Err(SelfTestError::Dimension(d));
    }
    let g = CMatrix::from_fn(d, d, |_, _| {
        Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    let mut m = m.unscale(tr);
    // enforce exact Hermiticity against rounding
    m = (&m + m.adjoint()).scale(0.5);
    DensityMatrix::new(m)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExposednessReport {
    pub dim: usize,
    pub samples: usize,
    pub min_value: f64,
    /// `‖σ − ρ‖_F` at the minimizer.
    pub argmin_distance: f64,
    /// Smallest value among the random samples, excluding σ = ρ.
    pub second_smallest: f64,
    /// `max |tr{W_ρ σ⊗σ} − ‖σ − ρ‖_F²|` over all scanned σ.
    pub identity_max_error: f64,
    #[serde(skip)]
    pub argmin: DensityMatrix,
}

/// Evaluates the witness at σ = ρ and at `samples` random states; sample
/// `i` uses the stream `derive_seed(seed, i)`.
pub fn exposedness_scan(rho: &DensityMatrix, samples: usize, seed: u64) -> Result<ExposednessReport, SelfTestError> {
    if samples == 0 {
        return Err(SelfTestError::InvalidState("at least one sample is required".into()));
    }
    let d = rho.dim();
    let scanned: Vec<(f64, f64, DensityMatrix)> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let sigma = random_density(d, &mut stream_rng(seed, i as u64))?;
            let v = witness_value(rho, &sigma)?;
            let f2 = squared_distance(rho, &sigma);
            Ok((v, f2, sigma))
        })
        .collect::<Result<_, SelfTestError>>()?;
    let at_rho = witness_value(rho, rho)?;
    let mut identity_max_error = at_rho.abs();
    let mut best = (at_rho, 0.0, rho.clone());
    let mut second_smallest = f64::INFINITY;
    for (v, f2, sigma) in scanned {
        identity_max_error = identity_max_error.max((v - f2).abs());
        second_smallest = second_smallest.min(v);
        if v < best.0 {
            best = (v, f2.sqrt(), sigma);
        }
    }
    Ok(ExposednessReport {
        dim: d,
        samples,
        min_value: best.0,
        argmin_distance: best.1,
        second_smallest,
        identity_max_error,
        argmin: best.2,
    })
}
