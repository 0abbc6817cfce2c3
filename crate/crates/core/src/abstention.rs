//! Closed-form abstention plans and analytic scores.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::povm::{AbstentionParams, ScoreKind, DELTA_MAX, F_MAX};

const SQRT3: f64 = 1.732_050_807_568_877_2;
// tabulated c0 values carry four decimals; 0.7071 stands for 1/√2
const FEAS_TOL: f64 = 5e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbstentionPlan {
    pub lambda_bar_0: f64,
    pub lambda_bar_1: f64,
    pub q_bar: f64,
    pub c_tilde_0: f64,
    pub c_tilde_1: f64,
}

impl AbstentionPlan {
    pub fn params(&self) -> AbstentionParams {
        AbstentionParams {
            lambda_bar_0: self.lambda_bar_0,
            lambda_bar_1: self.lambda_bar_1,
        }
    }
}

fn c1_of(c0: f64) -> f64 {
    (1.0 - c0 * c0).max(0.0).sqrt()
}

/// Acceptance rate Q̄ and rescaled coefficients c̃ᵢ = √(λ̄ᵢ/Q̄)cᵢ for the ψ⁺ family.
pub fn rescaled(c0: f64, p: &AbstentionParams) -> Result<AbstentionPlan> {
    let c1 = c1_of(c0);
    let q = p.lambda_bar_0 * c0 * c0 + p.lambda_bar_1 * c1 * c1;
    if q <= 0.0 {
        return Err(Error::AlwaysAbstains);
    }
    Ok(AbstentionPlan {
        lambda_bar_0: p.lambda_bar_0,
        lambda_bar_1: p.lambda_bar_1,
        q_bar: q,
        c_tilde_0: (p.lambda_bar_0 / q).sqrt() * c0,
        c_tilde_1: (p.lambda_bar_1 / q).sqrt() * c1,
    })
}

/// Maximal-acceptance plan reaching the optimal score.
pub fn optimal_plan(kind: ScoreKind, c0: f64, constrain_lambda1_to_one: bool) -> Result<AbstentionPlan> {
    if !(c0 > 0.0 && c0 < 1.0) {
        return Err(Error::OptimumUnreachable(c0));
    }
    let c1 = c1_of(c0);
    let (c0s, c1s) = (c0 * c0, c1 * c1);
    let (l0, l1) = match (kind, constrain_lambda1_to_one) {
        (ScoreKind::MaxLikelihood, false) => {
            let q = (4.0 * c0s).min(4.0 * c1s / 3.0);
            (q / (4.0 * c0s), 3.0 * q / (4.0 * c1s))
        }
        (ScoreKind::Fidelity, false) => {
            let q = (2.0 * c0s).min(2.0 * c1s);
            (q / (2.0 * c0s), q / (2.0 * c1s))
        }
        (ScoreKind::MaxLikelihood, true) => {
            if c0 < 0.5 - FEAS_TOL {
                return Err(Error::ConstraintInfeasible(c0));
            }
            ((c1s / (3.0 * c0s)).min(1.0), 1.0)
        }
        (ScoreKind::Fidelity, true) => {
            if c0 < std::f64::consts::FRAC_1_SQRT_2 - FEAS_TOL {
                return Err(Error::ConstraintInfeasible(c0));
            }
            ((c1s / c0s).min(1.0), 1.0)
        }
    };
    rescaled(c0, &AbstentionParams::new(l0.min(1.0), l1.min(1.0))?)
}

/// δ_av = (c₀ + √3c₁)² and f_av = ½ + (√3/3)c₀c₁ for the EJM on ψ⁺ inputs.
pub fn analytic_score_no_abstention(kind: ScoreKind, c0: f64) -> f64 {
    let c1 = c1_of(c0);
    match kind {
        ScoreKind::MaxLikelihood => delta_with_overlap(c0, 1.0),
        ScoreKind::Fidelity => 0.5 + SQRT3 / 3.0 * c0 * c1,
    }
}

/// Score of the EJM applied after rescaling, from the plan's c̃ coefficients.
pub fn analytic_score_with_plan(kind: ScoreKind, plan: &AbstentionPlan) -> f64 {
    match kind {
        ScoreKind::MaxLikelihood => (plan.c_tilde_0 + SQRT3 * plan.c_tilde_1).powi(2),
        ScoreKind::Fidelity => 0.5 + SQRT3 / 3.0 * plan.c_tilde_0 * plan.c_tilde_1,
    }
}

/// δ_av = |c₀ + √3c₁⟨φ^sym|ψ^sym⟩|² for a real overlap.
pub fn delta_with_overlap(c0: f64, overlap: f64) -> f64 {
    (c0 + SQRT3 * c1_of(c0) * overlap).powi(2)
}

pub fn fidelity_surface(beta: f64, b: f64, theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    0.5 + SQRT3 / 3.0 * (c * s * beta * b + SQRT3 / 4.0 * s * s * (1.0 - beta * beta) * (1.0 - b * b))
}

pub fn max_score_bound(kind: ScoreKind) -> f64 {
    match kind {
        ScoreKind::MaxLikelihood => DELTA_MAX,
        ScoreKind::Fidelity => F_MAX,
    }
}
