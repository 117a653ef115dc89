//! Inverse Wishart distribution `W⁻¹(Ψ, ν)` over real p×p covariances.
//!
//! Density:
//! `|Ψ|^{ν/2} |Σ|^{-(ν+p+1)/2} / (2^{νp/2} Γ_p(ν/2)) · exp(-tr(ΨΣ⁻¹)/2)`,
//! defined for positive-definite `Ψ` and real `ν > p - 1`.

use std::f64::consts::{LN_2, PI};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{Error, Result};
use crate::linalg::ComplexVector;

const SYMMETRY_TOL: f64 = 1e-12;

/// `π^{p(p-1)/4} Π_{j=1}^{p} Γ(s - (j-1)/2)` for `s > (p-1)/2`.
pub fn multivariate_gamma(p: usize, s: f64) -> Result<f64> {
    check_mvgamma_domain(p, s)?;
    let prod: f64 = (0..p).map(|j| gamma(s - j as f64 / 2.0)).product();
    Ok(PI.powf((p * (p - 1)) as f64 / 4.0) * prod)
}

/// Natural log of [`multivariate_gamma`].
pub fn ln_multivariate_gamma(p: usize, s: f64) -> Result<f64> {
    check_mvgamma_domain(p, s)?;
    let sum: f64 = (0..p).map(|j| ln_gamma(s - j as f64 / 2.0)).sum();
    Ok((p * (p - 1)) as f64 / 4.0 * PI.ln() + sum)
}

fn check_mvgamma_domain(p: usize, s: f64) -> Result<()> {
    if p == 0 {
        return Err(Error::Domain("multivariate gamma needs p >= 1".into()));
    }
    if !(s > (p as f64 - 1.0) / 2.0) {
        return Err(Error::Domain(format!("multivariate gamma Γ_{p}({s}) needs s > {}", (p as f64 - 1.0) / 2.0)));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamsJson", into = "ParamsJson")]
pub struct InverseWishartParams {
    scale: DMatrix<f64>,
    dof: f64,
}

impl InverseWishartParams {
    pub fn new(scale: DMatrix<f64>, dof: f64) -> Result<Self> {
        let p = scale.nrows();
        if p == 0 || scale.ncols() != p {
            return Err(Error::InvalidDimension(format!("scale must be square and non-empty, got {}x{}", p, scale.ncols())));
        }
        let mag = scale.iter().fold(1.0_f64, |a, x| a.max(x.abs()));
        for i in 0..p {
            for j in 0..i {
                if (scale[(i, j)] - scale[(j, i)]).abs() > SYMMETRY_TOL * mag {
                    return Err(Error::InvalidParameter("scale matrix is not symmetric".into()));
                }
            }
        }
        if scale.clone().cholesky().is_none() {
            return Err(Error::InvalidParameter("scale matrix is not positive definite".into()));
        }
        if !(dof.is_finite() && dof > p as f64 - 1.0) {
            return Err(Error::InvalidParameter(format!("degrees of freedom must exceed p - 1 = {}, got {dof}", p - 1)));
        }
        let scale = (&scale + scale.transpose()) * 0.5;
        Ok(Self { scale, dof })
    }

    /// The p = 1 case `W⁻¹(ψ, ν)`, an inverse gamma with shape ν/2 and scale ψ/2.
    pub fn scalar(psi: f64, dof: f64) -> Result<Self> {
        Self::new(DMatrix::from_element(1, 1, psi), dof)
    }

    pub fn p(&self) -> usize {
        self.scale.nrows()
    }

    pub fn scale(&self) -> &DMatrix<f64> {
        &self.scale
    }

    pub fn dof(&self) -> f64 {
        self.dof
    }

    /// `ψ` of a p = 1 distribution.
    pub fn scalar_scale(&self) -> Result<f64> {
        if self.p() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: self.p() });
        }
        Ok(self.scale[(0, 0)])
    }

    pub fn log_density(&self, sigma: &DMatrix<f64>) -> Result<f64> {
        let p = self.p();
        if sigma.nrows() != p || sigma.ncols() != p {
            return Err(Error::DimensionMismatch { expected: p, got: sigma.nrows() });
        }
        let chol = sigma.clone().cholesky().ok_or_else(|| Error::Domain("Σ must be positive definite".into()))?;
        let log_det_sigma = 2.0 * chol.l().diagonal().iter().map(|x| x.ln()).sum::<f64>();
        let log_det_psi = 2.0 * self.scale.clone().cholesky().expect("validated").l().diagonal().iter().map(|x| x.ln()).sum::<f64>();
        let trace = (&self.scale * chol.inverse()).trace();
        let (pf, nu) = (p as f64, self.dof);
        Ok(nu / 2.0 * log_det_psi
            - (nu + pf + 1.0) / 2.0 * log_det_sigma
            - nu * pf / 2.0 * LN_2
            - ln_multivariate_gamma(p, nu / 2.0)?
            - trace / 2.0)
    }

    /// Log density of a p = 1 distribution at `x > 0`.
    pub fn scalar_log_density(&self, x: f64) -> Result<f64> {
        self.scalar_scale()?;
        if !(x > 0.0) {
            return Err(Error::Domain(format!("Σ must be positive, got {x}")));
        }
        self.log_density(&DMatrix::from_element(1, 1, x))
    }

    /// Bartlett draw of `W ~ Wishart(Ψ⁻¹, ν)`, returned as `W⁻¹`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DMatrix<f64> {
        let p = self.p();
        let psi_inv = self.scale.clone().cholesky().expect("validated").inverse();
        let l = psi_inv.cholesky().expect("inverse of PD is PD").l();
        let mut a = DMatrix::<f64>::zeros(p, p);
        for i in 0..p {
            let chi = ChiSquared::new(self.dof - i as f64).expect("dof > p - 1");
            a[(i, i)] = chi.sample(rng).sqrt();
            for j in 0..i {
                a[(i, j)] = rng.sample(StandardNormal);
            }
        }
        // W = M M' with M = L A lower triangular, so W⁻¹ = M⁻ᵀ M⁻¹.
        let m = l * a;
        let m_inv = m.solve_lower_triangular(&DMatrix::identity(p, p)).expect("Bartlett factor has a positive diagonal almost surely");
        let s = m_inv.transpose() * m_inv;
        (&s + s.transpose()) * 0.5
    }

    /// `Ψ / (ν - p - 1)`, defined for `ν > p + 1`.
    pub fn mean(&self) -> Result<DMatrix<f64>> {
        let p = self.p() as f64;
        if !(self.dof > p + 1.0) {
            return Err(Error::UndefinedMoment(format!("mean needs ν > p + 1 = {}, got {}", p + 1.0, self.dof)));
        }
        Ok(&self.scale / (self.dof - p - 1.0))
    }

    /// `Ψ + Σ_k z_k z_kᵀ`, `ν + n`. Observations are added in order, so a
    /// batch update is bitwise equal to the same updates applied one by one.
    pub fn conjugate_update(&self, observations: &[DVector<f64>]) -> Result<Self> {
        let p = self.p();
        let mut scale = self.scale.clone();
        for z in observations {
            if z.len() != p {
                return Err(Error::DimensionMismatch { expected: p, got: z.len() });
            }
            scale += z * z.transpose();
        }
        Ok(Self { scale, dof: self.dof + observations.len() as f64 })
    }

    /// Complex observations enter through `Re(z z')`. For p = 1 this adds
    /// `|z|²` per observation.
    pub fn conjugate_update_complex(&self, observations: &[ComplexVector]) -> Result<Self> {
        let p = self.p();
        let mut scale = self.scale.clone();
        for z in observations {
            if z.dim() != p {
                return Err(Error::DimensionMismatch { expected: p, got: z.dim() });
            }
            for i in 0..p {
                for j in 0..p {
                    scale[(i, j)] += (z[i] * z[j].conj()).re;
                }
            }
        }
        Ok(Self { scale, dof: self.dof + observations.len() as f64 })
    }
}

/// Variance `2ψ²/((ν-2)²(ν-4))` of the scalar `W⁻¹(ψ, ν)`, for `ν > 4`.
pub fn scalar_variance(psi: f64, dof: f64) -> Result<f64> {
    if !(dof > 4.0) {
        return Err(Error::UndefinedMoment(format!("scalar variance needs ν > 4, got {dof}")));
    }
    Ok(2.0 * psi * psi / ((dof - 2.0).powi(2) * (dof - 4.0)))
}

/// Mean `ψ/(ν-2)` of the scalar `W⁻¹(ψ, ν)`, for `ν > 2`.
pub fn scalar_mean(psi: f64, dof: f64) -> Result<f64> {
    if !(dof > 2.0) {
        return Err(Error::UndefinedMoment(format!("scalar mean needs ν > 2, got {dof}")));
    }
    Ok(psi / (dof - 2.0))
}

/// Skewness `4√(α-2)/(α-3)` of the scalar `W⁻¹(ψ, ν)` with `α = ν/2`,
/// defined for `ν > 6`.
pub fn scalar_skewness(dof: f64) -> Result<f64> {
    let alpha = dof / 2.0;
    if !(alpha > 3.0) {
        return Err(Error::UndefinedMoment(format!("skewness needs ν > 6, got {dof}")));
    }
    Ok(4.0 * (alpha - 2.0).sqrt() / (alpha - 3.0))
}

#[derive(Serialize, Deserialize)]
struct ParamsJson {
    p: usize,
    nu: f64,
    psi: Vec<Vec<f64>>,
}

impl TryFrom<ParamsJson> for InverseWishartParams {
    type Error = Error;

    fn try_from(j: ParamsJson) -> Result<Self> {
        if j.psi.len() != j.p {
            return Err(Error::DimensionMismatch { expected: j.p, got: j.psi.len() });
        }
        if let Some(row) = j.psi.iter().find(|r| r.len() != j.p) {
            return Err(Error::DimensionMismatch { expected: j.p, got: row.len() });
        }
        let flat: Vec<f64> = j.psi.into_iter().flatten().collect();
        Self::new(DMatrix::from_row_slice(j.p, j.p, &flat), j.nu)
    }
}

impl From<InverseWishartParams> for ParamsJson {
    fn from(w: InverseWishartParams) -> Self {
        let p = w.p();
        Self { p, nu: w.dof, psi: (0..p).map(|i| (0..p).map(|j| w.scale[(i, j)]).collect()).collect() }
    }
}
