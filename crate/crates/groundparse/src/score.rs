//! Pair scoring and span composition.
//!
//! A scorer maps two span embeddings to a merge score; a composer maps them
//! to the embedding of the merged span. Both come in a full-capacity form
//! and deliberately weakened forms used to probe how little machinery the
//! parsing strategy actually needs:
//!
//! * scorers: a two-layer MLP over the concatenation; a per-side weighted
//!   sum `u.l + v.r`; and for one-dimensional embeddings the weighted mean
//!   `(l + tau*r)/(1 + tau)` with no trainable parameters at all.
//! * composers: L2-normalized sum; elementwise mean; elementwise max.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::embed::{Mlp2, Mlp2Grad};
use crate::vecmath::{dot, l2_norm, scaled_add};

/// Sums with an L2 norm below this are rejected as degenerate.
pub const DEGENERATE_EPS: f64 = 1e-12;

/// Which scorer a model uses. The serialized names double as the notation
/// used on the command line and in variant labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScoreKind {
    /// Two-layer MLP over `[left; right]`.
    #[serde(rename = "mlp")]
    Mlp,
    /// `u . left + v . right` with trainable `u`, `v`.
    #[serde(rename = "ws")]
    WeightedSum,
    /// `(left + tau*right) / (1 + tau)` with `tau = 1`: an unbiased mean.
    /// Parameter-free; requires one-dimensional embeddings.
    #[serde(rename = "m")]
    Mean,
    /// Same form with `tau = 20`, weighting the right side heavily
    /// (a head-initial bias). Parameter-free, one-dimensional only.
    #[serde(rename = "mhi")]
    MeanHeadInitial,
}

impl ScoreKind {
    /// Mixing weight used when the configuration does not override it.
    pub fn default_tau(self) -> f64 {
        match self {
            ScoreKind::MeanHeadInitial => 20.0,
            _ => 1.0,
        }
    }

    /// Whether this scorer reads `tau` at all.
    pub fn uses_tau(self) -> bool {
        matches!(self, ScoreKind::Mean | ScoreKind::MeanHeadInitial)
    }

    /// Whether this scorer is defined only for one-dimensional embeddings.
    pub fn requires_scalar(self) -> bool {
        self.uses_tau()
    }

    pub fn label(self) -> &'static str {
        match self {
            ScoreKind::Mlp => "mlp",
            ScoreKind::WeightedSum => "ws",
            ScoreKind::Mean => "m",
            ScoreKind::MeanHeadInitial => "mhi",
        }
    }
}

/// Which composer a model uses. Serialized names match the variant notation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CombineKind {
    /// `(l + r) / ||l + r||`.
    #[serde(rename = "l2sum")]
    L2Sum,
    /// Elementwise mean.
    #[serde(rename = "me")]
    Mean,
    /// Elementwise max.
    #[serde(rename = "mx")]
    Max,
}

impl CombineKind {
    pub fn label(self) -> &'static str {
        match self {
            CombineKind::L2Sum => "l2sum",
            CombineKind::Mean => "me",
            CombineKind::Max => "mx",
        }
    }
}

/// Trainable state of a scorer. `Mean` has none; its mixing weight `tau`
/// lives in the model configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScoreParams {
    Mlp(Mlp2),
    WeightedSum { u: Vec<f64>, v: Vec<f64> },
    Mean,
}

impl ScoreParams {
    /// Whether this parameter block fits a configured scorer kind.
    pub fn matches(&self, kind: ScoreKind) -> bool {
        matches!(
            (self, kind),
            (ScoreParams::Mlp(_), ScoreKind::Mlp)
                | (ScoreParams::WeightedSum { .. }, ScoreKind::WeightedSum)
                | (ScoreParams::Mean, ScoreKind::Mean | ScoreKind::MeanHeadInitial)
        )
    }
}

/// Gradients for [`ScoreParams`], same shape.
#[derive(Debug, Clone, PartialEq)]
pub enum ScoreGrad {
    Mlp(Mlp2Grad),
    WeightedSum { du: Vec<f64>, dv: Vec<f64> },
    Mean,
}

impl ScoreGrad {
    pub fn zeros_like(params: &ScoreParams) -> Self {
        match params {
            ScoreParams::Mlp(net) => ScoreGrad::Mlp(Mlp2Grad::zeros_like(net)),
            ScoreParams::WeightedSum { u, v } => ScoreGrad::WeightedSum {
                du: vec![0.0; u.len()],
                dv: vec![0.0; v.len()],
            },
            ScoreParams::Mean => ScoreGrad::Mean,
        }
    }
}

/// MLP scorer: `MLP([l; r])` with a scalar output.
pub fn score_mlp(net: &Mlp2, l: &[f64], r: &[f64]) -> Result<f64> {
    if l.len() + r.len() != net.in_dim() {
        return Err(Error::DimMismatch {
            expected: net.in_dim(),
            got: l.len() + r.len(),
        });
    }
    let mut x = Vec::with_capacity(l.len() + r.len());
    x.extend_from_slice(l);
    x.extend_from_slice(r);
    Ok(net.forward(&x)[0])
}

/// Weighted-sum scorer: `u.l + v.r`.
pub fn score_ws(u: &[f64], v: &[f64], l: &[f64], r: &[f64]) -> Result<f64> {
    if u.len() != l.len() || v.len() != r.len() {
        return Err(Error::DimMismatch {
            expected: u.len(),
            got: l.len(),
        });
    }
    Ok(dot(u, l) + dot(v, r))
}

/// Parameter-free scalar scorer: `(l + tau*r) / (1 + tau)`.
///
/// `tau = 1` weighs both sides equally; large `tau` prefers merging a span
/// whose right neighbor scores high on its own (a head-initial bias).
pub fn score_mean(tau: f64, l: &[f64], r: &[f64]) -> Result<f64> {
    if tau <= 0.0 {
        return Err(Error::NonPositiveTau { tau });
    }
    if l.len() != 1 || r.len() != 1 {
        return Err(Error::NotScalarModel {
            dim: l.len().max(r.len()),
        });
    }
    Ok((l[0] + tau * r[0]) / (1.0 + tau))
}

/// Dispatch on the scorer's trainable state.
pub fn score_pair(params: &ScoreParams, tau: f64, l: &[f64], r: &[f64]) -> Result<f64> {
    match params {
        ScoreParams::Mlp(net) => score_mlp(net, l, r),
        ScoreParams::WeightedSum { u, v } => score_ws(u, v, l, r),
        ScoreParams::Mean => score_mean(tau, l, r),
    }
}

/// Backward through a scorer. `dscore` is the gradient at the score output;
/// parameter gradients accumulate into `grad`; returns `(dl, dr)`.
pub fn score_backward(
    params: &ScoreParams,
    tau: f64,
    l: &[f64],
    r: &[f64],
    dscore: f64,
    grad: &mut ScoreGrad,
) -> (Vec<f64>, Vec<f64>) {
    match (params, grad) {
        (ScoreParams::Mlp(net), ScoreGrad::Mlp(g)) => {
            let mut x = Vec::with_capacity(l.len() + r.len());
            x.extend_from_slice(l);
            x.extend_from_slice(r);
            let dx = net.backward(&x, &[dscore], g);
            let (dl, dr) = dx.split_at(l.len());
            (dl.to_vec(), dr.to_vec())
        }
        (ScoreParams::WeightedSum { u, v }, ScoreGrad::WeightedSum { du, dv }) => {
            scaled_add(du, dscore, l);
            scaled_add(dv, dscore, r);
            let dl = u.iter().map(|x| x * dscore).collect();
            let dr = v.iter().map(|x| x * dscore).collect();
            (dl, dr)
        }
        (ScoreParams::Mean, ScoreGrad::Mean) => {
            let dl = vec![dscore / (1.0 + tau)];
            let dr = vec![dscore * tau / (1.0 + tau)];
            (dl, dr)
        }
        _ => unreachable!("score gradient shape mismatch"),
    }
}

/// `(l + r) / ||l + r||`. Errors when the sum is numerically zero, since the
/// direction of the merged span would be meaningless.
pub fn combine_l2sum(l: &[f64], r: &[f64]) -> Result<Vec<f64>> {
    debug_assert_eq!(l.len(), r.len());
    let mut s: Vec<f64> = l.iter().zip(r).map(|(a, b)| a + b).collect();
    let norm = l2_norm(&s);
    if norm < DEGENERATE_EPS {
        return Err(Error::DegenerateSum { span: None });
    }
    for x in s.iter_mut() {
        *x /= norm;
    }
    Ok(s)
}

/// Elementwise mean.
pub fn combine_mean(l: &[f64], r: &[f64]) -> Vec<f64> {
    debug_assert_eq!(l.len(), r.len());
    l.iter().zip(r).map(|(a, b)| (a + b) / 2.0).collect()
}

/// Elementwise max.
pub fn combine_max(l: &[f64], r: &[f64]) -> Vec<f64> {
    debug_assert_eq!(l.len(), r.len());
    l.iter().zip(r).map(|(a, b)| a.max(*b)).collect()
}

/// Dispatch on the composer kind.
pub fn combine(kind: CombineKind, l: &[f64], r: &[f64]) -> Result<Vec<f64>> {
    match kind {
        CombineKind::L2Sum => combine_l2sum(l, r),
        CombineKind::Mean => Ok(combine_mean(l, r)),
        CombineKind::Max => Ok(combine_max(l, r)),
    }
}

/// Backward through a composer. `y` is the forward output, `dy` the gradient
/// at the output; returns `(dl, dr)`. For max, ties route the gradient to
/// the left input, matching the forward tie-break.
pub fn combine_backward(
    kind: CombineKind,
    l: &[f64],
    r: &[f64],
    y: &[f64],
    dy: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    match kind {
        CombineKind::L2Sum => {
            // y = s/||s||; dL/ds = (dy - (y.dy) y) / ||s||.
            let s: Vec<f64> = l.iter().zip(r).map(|(a, b)| a + b).collect();
            let norm = l2_norm(&s);
            let ydy = dot(y, dy);
            let ds: Vec<f64> = dy.iter().zip(y).map(|(d, yi)| (d - ydy * yi) / norm).collect();
            (ds.clone(), ds)
        }
        CombineKind::Mean => {
            let half: Vec<f64> = dy.iter().map(|d| d / 2.0).collect();
            (half.clone(), half)
        }
        CombineKind::Max => {
            let mut dl = vec![0.0; l.len()];
            let mut dr = vec![0.0; r.len()];
            for k in 0..l.len() {
                if l[k] >= r[k] {
                    dl[k] = dy[k];
                } else {
                    dr[k] = dy[k];
                }
            }
            (dl, dr)
        }
    }
}
