//! Least squares on pseudovalues with heteroskedasticity-consistent
//! (sandwich) covariance.
//!
//! With an identity link and identity working covariance the pseudovalue
//! estimating equation `Σ xᵢ (θ̂ᵢ - xᵢ'β) = 0` is the OLS normal equation, so
//! `β̂` comes from a QR solve and its covariance from
//! `A⁻¹ B A⁻¹ / n` with `A = XᵀX / n` and `B = Σ xᵢxᵢ' ε̂ᵢ² / n`.
//!
//! Covariate columns are centered before the solve; the intercept and its
//! covariance entries are mapped back afterwards, so only the intercept
//! depends on covariate location.

use serde::{Deserialize, Serialize};

use crate::error::{Result, RmstError};
use crate::linalg::{matmul, transpose, Qr};
use crate::normal;
use crate::pseudo::PseudovalueSet;
use crate::sample::SurvivalSample;

/// Designs whose reciprocal condition number falls below this are rejected.
pub const RCOND_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnRole {
    Intercept,
    Treatment,
    Covariate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum HcVariant {
    HC0,
    /// HC0 scaled by `n / (n - p)`.
    #[default]
    HC1,
}

impl std::str::FromStr for HcVariant {
    type Err = RmstError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hc0" => Ok(HcVariant::HC0),
            "hc1" => Ok(HcVariant::HC1),
            other => Err(RmstError::invalid(format!("unknown HC variant {other:?}"))),
        }
    }
}

/// Column-major `n × p` design with a role per column.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    roles: Vec<ColumnRole>,
}

impl DesignMatrix {
    /// Builds a design from `(role, column)` pairs. Requires exactly one
    /// all-ones intercept and exactly one 0/1 treatment column.
    pub fn new(columns: Vec<(ColumnRole, Vec<f64>)>) -> Result<Self> {
        let rows = columns.first().map_or(0, |c| c.1.len());
        if rows == 0 {
            return Err(RmstError::invalid("design has no rows or no columns"));
        }
        let count = |r: ColumnRole| columns.iter().filter(|c| c.0 == r).count();
        if count(ColumnRole::Intercept) != 1 {
            return Err(RmstError::invalid("design needs exactly one intercept column"));
        }
        if count(ColumnRole::Treatment) != 1 {
            return Err(RmstError::invalid("design needs exactly one treatment column"));
        }
        let mut data = Vec::with_capacity(rows * columns.len());
        let mut roles = Vec::with_capacity(columns.len());
        for (j, (role, col)) in columns.into_iter().enumerate() {
            if col.len() != rows {
                return Err(RmstError::invalid(format!(
                    "column {j} has {} rows, expected {rows}",
                    col.len()
                )));
            }
            let ok = match role {
                ColumnRole::Intercept => col.iter().all(|&x| x == 1.0),
                ColumnRole::Treatment => col.iter().all(|&x| x == 0.0 || x == 1.0),
                ColumnRole::Covariate => col.iter().all(|x| x.is_finite()),
            };
            if !ok {
                return Err(RmstError::invalid(format!(
                    "column {j} has invalid entries for role {role:?}"
                )));
            }
            data.extend(col);
            roles.push(role);
        }
        Ok(DesignMatrix {
            rows,
            cols: roles.len(),
            data,
            roles,
        })
    }

    /// Intercept, treatment indicator, then one column per covariate.
    pub fn treatment_with_covariates(treatment: &[f64], covariates: &[Vec<f64>]) -> Result<Self> {
        let mut cols = vec![
            (ColumnRole::Intercept, vec![1.0; treatment.len()]),
            (ColumnRole::Treatment, treatment.to_vec()),
        ];
        cols.extend(covariates.iter().map(|c| (ColumnRole::Covariate, c.clone())));
        DesignMatrix::new(cols)
    }

    /// Design from samples using the covariates at `covariate_idx`.
    pub fn from_samples(samples: &[SurvivalSample], covariate_idx: &[usize]) -> Result<Self> {
        crate::sample::validate_samples(samples)?;
        let width = samples[0].covariates.len();
        if let Some(&bad) = covariate_idx.iter().find(|&&j| j >= width) {
            return Err(RmstError::invalid(format!(
                "covariate index {bad} out of range ({width} covariates)"
            )));
        }
        let treatment: Vec<f64> = samples.iter().map(|s| s.arm.indicator()).collect();
        let covs: Vec<Vec<f64>> = covariate_idx
            .iter()
            .map(|&j| samples.iter().map(|s| s.covariates[j]).collect())
            .collect();
        Self::treatment_with_covariates(&treatment, &covs)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn roles(&self) -> &[ColumnRole] {
        &self.roles
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub beta: Vec<f64>,
    /// Row-major `p × p` sandwich covariance of `beta`.
    pub sandwich_cov: Vec<Vec<f64>>,
    /// `Σ ε̂ᵢ² / (n - p)`.
    pub residual_var: f64,
    pub residuals: Vec<f64>,
    pub n: usize,
    pub p: usize,
    pub hc_variant: HcVariant,
    pub roles: Vec<ColumnRole>,
    pub rcond: f64,
}

impl RegressionFit {
    pub fn std_errs(&self) -> Vec<f64> {
        (0..self.p).map(|j| self.sandwich_cov[j][j].max(0.0).sqrt()).collect()
    }

    pub fn treatment_index(&self) -> Option<usize> {
        self.roles.iter().position(|&r| r == ColumnRole::Treatment)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaldResult {
    pub estimate: f64,
    pub std_err: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub p_value: f64,
    pub level: f64,
}

impl WaldResult {
    pub fn covers(&self, value: f64) -> bool {
        self.ci_low <= value && value <= self.ci_high
    }
}

pub fn fit_pseudovalue_ols(
    design: &DesignMatrix,
    pv: &PseudovalueSet,
    hc: HcVariant,
) -> Result<RegressionFit> {
    fit_ols(design, &pv.values, hc)
}

/// OLS of `y` on `design` with sandwich covariance.
pub fn fit_ols(design: &DesignMatrix, y: &[f64], hc: HcVariant) -> Result<RegressionFit> {
    let (n, p) = (design.rows, design.cols);
    if y.len() != n {
        return Err(RmstError::invalid(format!(
            "response has {} values but design has {n} rows",
            y.len()
        )));
    }
    if n <= p {
        return Err(RmstError::invalid(format!("need more rows ({n}) than columns ({p})")));
    }
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return Err(RmstError::invalid(format!("response {i} is not finite")));
    }

    let mut centered = design.data.clone();
    let mut means = vec![0.0; p];
    for (j, role) in design.roles.iter().enumerate() {
        if *role == ColumnRole::Covariate {
            let col = &mut centered[j * n..(j + 1) * n];
            let m = crate::stats::mean(col);
            col.iter_mut().for_each(|x| *x -= m);
            means[j] = m;
        }
    }

    // unit-norm columns so the conditioning check ignores units
    let mut scales = vec![0.0; p];
    for (j, s) in scales.iter_mut().enumerate() {
        let col = &mut centered[j * n..(j + 1) * n];
        *s = col.iter().map(|x| x * x).sum::<f64>().sqrt();
        if *s == 0.0 {
            return Err(RmstError::SingularDesign { rcond: 0.0 });
        }
        let inv = 1.0 / *s;
        col.iter_mut().for_each(|x| *x *= inv);
    }

    let qr = Qr::new(&centered, n, p);
    let rcond = qr.rcond();
    if !(rcond >= RCOND_THRESHOLD) {
        return Err(RmstError::SingularDesign { rcond });
    }
    let mut beta_c = qr.solve(y);
    let residuals: Vec<f64> = (0..n)
        .map(|i| y[i] - (0..p).map(|j| centered[j * n + i] * beta_c[j]).sum::<f64>())
        .collect();

    // Rows of the thin Q are xᵢ' R⁻¹; the meat is Qᵀ diag(ε̂²) Q and the
    // covariance R⁻¹ (meat) R⁻ᵀ.
    let r_inv = qr.r_inverse();
    let mut meat = vec![vec![0.0; p]; p];
    let mut qi = vec![0.0; p];
    for i in 0..n {
        for (c, q) in qi.iter_mut().enumerate() {
            *q = (0..=c).map(|k| centered[k * n + i] * r_inv[k][c]).sum();
        }
        let w = residuals[i] * residuals[i];
        for a in 0..p {
            for b in 0..=a {
                meat[a][b] += w * qi[a] * qi[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            meat[b][a] = meat[a][b];
        }
    }
    let scale = match hc {
        HcVariant::HC0 => 1.0,
        HcVariant::HC1 => n as f64 / (n - p) as f64,
    };
    let mut cov_c = matmul(&matmul(&r_inv, &meat), &transpose(&r_inv));
    for a in 0..p {
        beta_c[a] /= scales[a];
        for b in 0..p {
            cov_c[a][b] /= scales[a] * scales[b];
        }
    }

    // back-transform: intercept_raw = intercept_c - Σ_j mean_j β_j
    let mut t = vec![vec![0.0; p]; p];
    for (j, row) in t.iter_mut().enumerate() {
        row[j] = 1.0;
    }
    let icpt = design
        .roles
        .iter()
        .position(|&r| r == ColumnRole::Intercept)
        .expect("validated design has an intercept");
    for j in 0..p {
        if design.roles[j] == ColumnRole::Covariate {
            t[icpt][j] = -means[j];
        }
    }
    let beta: Vec<f64> = (0..p)
        .map(|a| (0..p).map(|b| t[a][b] * beta_c[b]).sum())
        .collect();
    let mut cov = matmul(&matmul(&t, &cov_c), &transpose(&t));
    for a in 0..p {
        for b in 0..p {
            cov[a][b] *= scale;
        }
    }
    for a in 0..p {
        for b in 0..a {
            let s = 0.5 * (cov[a][b] + cov[b][a]);
            cov[a][b] = s;
            cov[b][a] = s;
        }
    }

    let rss: f64 = residuals.iter().map(|e| e * e).sum();
    Ok(RegressionFit {
        beta,
        sandwich_cov: cov,
        residual_var: rss / (n - p) as f64,
        residuals,
        n,
        p,
        hc_variant: hc,
        roles: design.roles.clone(),
        rcond,
    })
}

/// Normal-reference Wald interval and two-sided p-value for the treatment
/// coefficient.
pub fn wald_treatment_effect(fit: &RegressionFit, level: f64) -> Result<WaldResult> {
    let j = fit
        .treatment_index()
        .ok_or_else(|| RmstError::invalid("fit has no treatment column"))?;
    wald(fit.beta[j], fit.sandwich_cov[j][j].max(0.0).sqrt(), level)
}

/// Wald interval for an arbitrary estimate and standard error.
pub fn wald(estimate: f64, std_err: f64, level: f64) -> Result<WaldResult> {
    if !(level > 0.0 && level < 1.0) {
        return Err(RmstError::invalid(format!("confidence level must be in (0, 1), got {level}")));
    }
    if !(std_err >= 0.0) || !estimate.is_finite() {
        return Err(RmstError::invalid("estimate and standard error must be finite"));
    }
    let z = normal::quantile(0.5 + level / 2.0);
    let half = z * std_err;
    let p_value = if std_err == 0.0 {
        if estimate == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        normal::two_sided_p(estimate / std_err)
    };
    Ok(WaldResult {
        estimate,
        std_err,
        ci_low: estimate - half,
        ci_high: estimate + half,
        p_value,
        level,
    })
}
