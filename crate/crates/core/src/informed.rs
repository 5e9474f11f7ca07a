//! Best-response view of the game: marginal gains from switching strategy,
//! the sign classification of individual perceptions, and the replicator
//! field of players who can evaluate hypothetical strategy changes.
//!
//! With `R = R(C′)`, `b = b(C′)` and `ε = ε₁ + ε₂`:
//!
//! ```text
//! ΔΠ_CD = c (R ε − 1)
//! ΔΠ_DO = c (b ε₁ − κ)
//! ΔΠ_CO = c (R ε − 1 + b ε₁ − κ)
//! ```
//!
//! Labels: only two regimes are named. `A` (cooperative) needs
//! `R > 1/(ε₁+ε₂)` and `b′ ε₁ > 1 − R ε₂ + κ`, where `b′ = b(C′ + c)` is the
//! relative benefit once the player's own contribution is added; with that
//! reading the pair is exactly `ΔΠ_CD > 0 ∧ ΔΠ_CO > 0`. `B` is the sign
//! pattern `ΔΠ_CD < 0, ΔΠ_DO > 0`: outsiders join as defectors while
//! cooperators stop contributing. Every other pattern carries no label; the
//! sign triple is the primary output.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{effective_shares, marginal_return, relative_benefit, GameParams, PopulationState};
use crate::sampling::FitnessLandscape;

/// `ΔΠ_XY = Π_X − Π_Y` at fixed others' contribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalGains {
    pub coop_defect: f64,
    pub defect_outside: f64,
    pub coop_outside: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn of(v: f64) -> Sign {
        if v > 0.0 {
            Sign::Positive
        } else if v < 0.0 {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Negative => '-',
            Sign::Zero => '0',
            Sign::Positive => '+',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// Cooperation and engagement both pay.
    Cooperative,
    /// New members join as defectors, cooperators prefer to defect.
    DefectorInflux,
}

impl Regime {
    pub fn letter(self) -> char {
        match self {
            Regime::Cooperative => 'A',
            Regime::DefectorInflux => 'B',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateClass {
    /// Signs of `(ΔΠ_CD, ΔΠ_DO, ΔΠ_CO)`.
    pub signs: [Sign; 3],
    pub label: Option<Regime>,
}

impl StateClass {
    pub fn triple(&self) -> String {
        self.signs.iter().map(|s| s.symbol()).collect()
    }

    /// No strategy gains from entering a coalition or from cooperating.
    pub fn is_outsider_dominant(&self) -> bool {
        self.signs.iter().all(|&s| s == Sign::Negative)
    }
}

fn check_contribution(params: &GameParams, others_contribution: f64, group: usize) -> Result<()> {
    let max = group as f64 * params.cost;
    if others_contribution < 0.0 || others_contribution + params.cost > max * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "need 0 <= C' and C' + c <= N·c, got C' = {others_contribution}, N = {group}"
        )));
    }
    Ok(())
}

pub fn marginal_gains(
    params: &GameParams,
    others_contribution: f64,
    group: usize,
) -> Result<MarginalGains> {
    check_contribution(params, others_contribution, group)?;
    let shares = effective_shares(params, group);
    let r = marginal_return(params, others_contribution, group);
    let b = relative_benefit(params, others_contribution, group);
    let c = params.cost;
    let cd = c * (r * shares.total() - 1.0);
    let dout = c * (b * shares.eps1 - shares.kappa);
    Ok(MarginalGains {
        coop_defect: cd,
        defect_outside: dout,
        coop_outside: c * (r * shares.total() - 1.0 + b * shares.eps1 - shares.kappa),
    })
}

/// The two conditions for the cooperative regime, evaluated literally.
pub fn cooperative_conditions(
    params: &GameParams,
    others_contribution: f64,
    group: usize,
) -> (bool, bool) {
    let shares = effective_shares(params, group);
    let r = marginal_return(params, others_contribution, group);
    let b_after = relative_benefit(params, others_contribution + params.cost, group);
    let high_return = r > 1.0 / shares.total();
    let engagement = b_after * shares.eps1 > 1.0 - r * shares.eps2 + shares.kappa;
    (high_return, engagement)
}

pub fn classify_state(params: &GameParams, others_contribution: f64, group: usize) -> Result<StateClass> {
    let g = marginal_gains(params, others_contribution, group)?;
    let signs = [
        Sign::of(g.coop_defect),
        Sign::of(g.defect_outside),
        Sign::of(g.coop_outside),
    ];
    let (high_return, engagement) = cooperative_conditions(params, others_contribution, group);
    let label = if high_return && engagement {
        Some(Regime::Cooperative)
    } else if signs[0] == Sign::Negative && signs[1] == Sign::Positive {
        Some(Regime::DefectorInflux)
    } else {
        None
    };
    Ok(StateClass { signs, label })
}

/// Payoff differences an informed player computes for each switch `X → Y`,
/// `Δf_XY = f_Y(after the switch) − f_X(now)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InformedGains {
    pub defect_to_coop: f64,
    pub coop_to_defect: f64,
    pub outside_to_coop: f64,
    pub coop_to_outside: f64,
    pub defect_to_outside: f64,
    pub outside_to_defect: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InformedField {
    pub x_dot: f64,
    pub y_dot: f64,
    pub gains: InformedGains,
}

/// Linearized replicator field of informed players:
///
/// ```text
/// ẋ = ½ x(1−x) [ y (Δf_DC − Δf_CD) + (1−y)(Δf_OC − Δf_CO + Δf_DO − Δf_OD) ]
/// ẏ = ½ y(1−y) [ x (Δf_OC − Δf_CO) + (1−x)(Δf_OD − Δf_DO) ]
/// ```
///
/// A gain whose shifted composition leaves the simplex is zero; its weight
/// vanishes there anyway.
pub fn informed_field(land: &FitnessLandscape, state: &PopulationState) -> InformedField {
    let Some(x) = state.x() else {
        return InformedField::default();
    };
    let y = state.y();
    let (c, d) = (state.cooperators as isize, state.defectors as isize);
    let here = land.fitness_of(state);
    let f = |dc: isize, dd: isize| land.fitness_shifted(c + dc, d + dd);
    let cooperating = state.cooperators >= 1;
    let defecting = state.defectors >= 1;
    let outside = state.outsiders() >= 1;

    let gains = InformedGains {
        defect_to_coop: if defecting {
            f(1, -1).map_or(0.0, |t| t.cooperator - here.defector)
        } else {
            0.0
        },
        coop_to_defect: if cooperating {
            f(-1, 1).map_or(0.0, |t| t.defector - here.cooperator)
        } else {
            0.0
        },
        outside_to_coop: if outside {
            f(1, 0).map_or(0.0, |t| t.cooperator - here.outsider)
        } else {
            0.0
        },
        coop_to_outside: if cooperating {
            f(-1, 0).map_or(0.0, |t| t.outsider - here.cooperator)
        } else {
            0.0
        },
        defect_to_outside: if defecting {
            f(0, -1).map_or(0.0, |t| t.outsider - here.defector)
        } else {
            0.0
        },
        outside_to_defect: if outside {
            f(0, 1).map_or(0.0, |t| t.defector - here.outsider)
        } else {
            0.0
        },
    };
    let g = &gains;
    let x_dot = 0.5
        * x
        * (1.0 - x)
        * (y * (g.defect_to_coop - g.coop_to_defect)
            + (1.0 - y)
                * (g.outside_to_coop - g.coop_to_outside + g.defect_to_outside
                    - g.outside_to_defect));
    let y_dot = 0.5
        * y
        * (1.0 - y)
        * (x * (g.outside_to_coop - g.coop_to_outside)
            + (1.0 - x) * (g.outside_to_defect - g.defect_to_outside));
    InformedField { x_dot, y_dot, gains }
}
