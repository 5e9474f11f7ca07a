//! Model constants, population compositions, the benefit function and the
//! per-encounter payoffs of cooperators (C), defectors (D) and outsiders (O).
//!
//! Members (C and D) pay the membership cost `c_c`; cooperators additionally
//! pay `c`. A fraction `e` of the benefit produced by a coalition of size `N`
//! is shared among its members with congestion exponent `θ′`, the remaining
//! `1 − e` spills over to the whole population with congestion exponent `θ`.

use std::fmt;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    Cooperate,
    Defect,
    Outside,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Cooperate, Strategy::Defect, Strategy::Outside];

    pub fn symbol(self) -> char {
        match self {
            Strategy::Cooperate => 'C',
            Strategy::Defect => 'D',
            Strategy::Outside => 'O',
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// How mutation enters the one-step transition probabilities.
///
/// `Scaled`: `T_XY = (i_X/Z)[(1−μ)(i_Y/(Z−1)) p(X,Y) + μ/2]`.
/// `Literal`: `T_XY = (i_X/Z)(i_Y/(Z−1)) p(X,Y)(1−μ) + μ/2`, applied only when `i_X ≥ 1`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MutationForm {
    #[default]
    Scaled,
    Literal,
}

/// Maps the total contribution `C` of a coalition to the benefit `B(C)` it
/// produces. Every evaluation receives the full-cooperation contribution of
/// the current coalition, `N·c`, as normalization scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BenefitFunction {
    /// `B(C) = slope · C`, independent of the scale.
    Linear { slope: f64 },
    /// `B(C) = height` once `C` reaches `threshold · N·c`, zero before.
    Step { threshold: f64, height: f64 },
    /// Logistic step centred at `threshold · N·c`, rescaled so that
    /// `B(0) = 0` and `B(N·c) = amplitude`.
    Sigmoid {
        amplitude: f64,
        steepness: f64,
        threshold: f64,
    },
    /// Piecewise-linear interpolation between `(C, B)` knots.
    Tabulated { knots: Vec<(f64, f64)> },
}

impl BenefitFunction {
    /// Sharp threshold at three quarters of the coalition's full contribution.
    pub fn threshold_sigmoid() -> Self {
        BenefitFunction::Sigmoid {
            amplitude: 100.0,
            steepness: 100.0,
            threshold: 0.75,
        }
    }

    pub fn linear(slope: f64) -> Self {
        BenefitFunction::Linear { slope }
    }

    pub fn constant(height: f64) -> Self {
        BenefitFunction::Step {
            threshold: 0.0,
            height,
        }
    }

    pub fn eval(&self, contribution: f64, scale: f64) -> f64 {
        match self {
            BenefitFunction::Linear { slope } => slope * contribution,
            BenefitFunction::Step { threshold, height } => {
                if contribution + 1e-9 * scale.max(1.0) >= threshold * scale {
                    *height
                } else {
                    0.0
                }
            }
            BenefitFunction::Sigmoid {
                amplitude,
                steepness,
                threshold,
            } => {
                if scale <= 0.0 {
                    return 0.0;
                }
                // Complement of F(C) = 1/(1 + exp(s(C/Nc − t))); same normalized ratio,
                // better conditioned near C = 0.
                let g = |u: f64| 1.0 / (1.0 + (-steepness * (u - threshold)).exp());
                let g0 = g(0.0);
                let g1 = g(1.0);
                amplitude * (g(contribution / scale) - g0) / (g1 - g0)
            }
            BenefitFunction::Tabulated { knots } => interpolate(knots, contribution),
        }
    }

    /// Reads a two-column `C,B` table with a header row.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut knots = Vec::new();
        for record in rdr.records() {
            let record = record?;
            if record.len() != 2 {
                return Err(Error::Config(format!(
                    "benefit table rows need exactly two columns, found {}",
                    record.len()
                )));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::Config(format!("benefit table: cannot parse `{s}`")))
            };
            knots.push((parse(&record[0])?, parse(&record[1])?));
        }
        let table = BenefitFunction::Tabulated { knots };
        table.check_shape()?;
        Ok(table)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(file)
    }

    fn check_shape(&self) -> Result<()> {
        match self {
            BenefitFunction::Linear { slope } => {
                if !(slope.is_finite() && *slope >= 0.0) {
                    return Err(Error::param("benefit.slope", "must be finite and >= 0"));
                }
            }
            BenefitFunction::Step { threshold, height } => {
                if !(0.0..=1.0).contains(threshold) {
                    return Err(Error::param("benefit.threshold", "must lie in [0, 1]"));
                }
                if !(height.is_finite() && *height >= 0.0) {
                    return Err(Error::param("benefit.height", "must be finite and >= 0"));
                }
            }
            BenefitFunction::Sigmoid {
                amplitude,
                steepness,
                threshold,
            } => {
                if !(amplitude.is_finite() && *amplitude >= 0.0) {
                    return Err(Error::param("benefit.amplitude", "must be finite and >= 0"));
                }
                if !(steepness.is_finite() && *steepness > 0.0) {
                    return Err(Error::param("benefit.steepness", "must be finite and > 0"));
                }
                if !threshold.is_finite() {
                    return Err(Error::param("benefit.threshold", "must be finite"));
                }
            }
            BenefitFunction::Tabulated { knots } => {
                if knots.len() < 2 {
                    return Err(Error::param("benefit.knots", "need at least two knots"));
                }
                if knots.iter().any(|&(x, y)| !x.is_finite() || !y.is_finite() || y < 0.0) {
                    return Err(Error::param("benefit.knots", "values must be finite, B >= 0"));
                }
                if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(Error::param("benefit.knots", "C must be strictly increasing"));
                }
            }
        }
        Ok(())
    }

    /// Checks the shape parameters and, for tables, that `[0, max_contribution]` is covered.
    pub fn validate(&self, max_contribution: f64) -> Result<()> {
        self.check_shape()?;
        if let BenefitFunction::Tabulated { knots } = self {
            let lo = knots[0].0;
            let hi = knots[knots.len() - 1].0;
            if lo > 0.0 || hi < max_contribution {
                return Err(Error::BenefitDomain {
                    required: max_contribution,
                    lo,
                    hi,
                });
            }
        }
        Ok(())
    }
}

fn interpolate(knots: &[(f64, f64)], x: f64) -> f64 {
    let first = knots[0];
    let last = knots[knots.len() - 1];
    if x <= first.0 {
        return first.1;
    }
    if x >= last.0 {
        return last.1;
    }
    let hi = knots.partition_point(|&(k, _)| k <= x);
    let (x0, y0) = knots[hi - 1];
    let (x1, y1) = knots[hi];
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// All constants of the model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameParams {
    /// Population size `Z`.
    pub population: usize,
    /// Excludable (club) fraction `e` of the benefit.
    pub excludability: f64,
    /// Congestibility `θ` of the public spillover.
    pub theta: f64,
    /// Congestibility `θ′` of the club share.
    pub theta_prime: f64,
    /// Cost of cooperation `c`.
    pub cost: f64,
    /// Coalition membership cost `c_c`.
    pub membership_cost: f64,
    /// Minimum group fraction `g_m`.
    pub min_group_fraction: f64,
    /// Coalition-constraint exponent `α`.
    pub alpha: f64,
    /// Selection intensity `β`.
    pub beta: f64,
    /// Mutation probability `μ`.
    pub mu: f64,
    pub mutation_form: MutationForm,
    pub benefit: BenefitFunction,
}

impl GameParams {
    /// Reference parameter set: `g_m = 5/Z`, `e = 0.5`, `c = c_c = 1`,
    /// `β = 0.1`, `μ = 1/Z`, `θ = θ′ = 1`, `α = 1` and the threshold sigmoid.
    pub fn reference(population: usize) -> Self {
        let z = population as f64;
        GameParams {
            population,
            excludability: 0.5,
            theta: 1.0,
            theta_prime: 1.0,
            cost: 1.0,
            membership_cost: 1.0,
            min_group_fraction: 5.0 / z,
            alpha: 1.0,
            beta: 0.1,
            mu: 1.0 / z,
            mutation_form: MutationForm::Scaled,
            benefit: BenefitFunction::threshold_sigmoid(),
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    pub fn with_benefit(mut self, benefit: BenefitFunction) -> Self {
        self.benefit = benefit;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &'static str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::param(name, format!("{v} is outside [0, 1]")))
            }
        };
        if self.population < 4 {
            return Err(Error::param("Z", "population must be at least 4"));
        }
        unit("e", self.excludability)?;
        unit("theta", self.theta)?;
        unit("theta_prime", self.theta_prime)?;
        unit("mu", self.mu)?;
        if !(self.cost.is_finite() && self.cost > 0.0) {
            return Err(Error::param("c", "cooperation cost must be finite and > 0"));
        }
        if !(self.membership_cost.is_finite() && self.membership_cost >= 0.0) {
            return Err(Error::param("c_c", "membership cost must be finite and >= 0"));
        }
        if !(self.min_group_fraction > 0.0 && self.min_group_fraction <= 1.0) {
            return Err(Error::param("g_m", "must lie in (0, 1]"));
        }
        if self.population as f64 * self.min_group_fraction < 2.0 - 1e-9 {
            return Err(Error::param("g_m", "Z·g_m must be at least 2"));
        }
        if !(self.alpha.is_finite() && self.alpha >= 1.0) {
            return Err(Error::param("alpha", "must be finite and >= 1"));
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::param("beta", "must be finite and >= 0"));
        }
        self.benefit
            .validate(self.population as f64 * self.cost)
    }

    pub fn kappa(&self) -> f64 {
        self.membership_cost / self.cost
    }
}

/// Typical coalition size for `members` coalition members:
/// `N = Z·min{y, g_m + (1 − g_m) y^α}`, rounded half-up and clamped to
/// `[2, max(members, 2)]`.
pub fn group_size(params: &GameParams, members: usize) -> usize {
    let z = params.population as f64;
    let y = members as f64 / z;
    let g = params.min_group_fraction;
    let constrained = g + (1.0 - g) * y.powf(params.alpha);
    let real = z * y.min(constrained);
    let rounded = (real + 0.5 + 1e-9).floor().max(0.0) as usize;
    rounded.clamp(2, members.max(2))
}

/// Composition of the population: `i_C` cooperators, `i_D` defectors, the rest outsiders.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PopulationState {
    pub cooperators: usize,
    pub defectors: usize,
    pub population: usize,
}

impl PopulationState {
    pub fn new(cooperators: usize, defectors: usize, population: usize) -> Result<Self> {
        if cooperators + defectors > population {
            return Err(Error::InvalidState(format!(
                "i_C + i_D = {} exceeds Z = {population}",
                cooperators + defectors
            )));
        }
        Ok(PopulationState {
            cooperators,
            defectors,
            population,
        })
    }

    pub fn members(&self) -> usize {
        self.cooperators + self.defectors
    }

    pub fn outsiders(&self) -> usize {
        self.population - self.members()
    }

    pub fn count(&self, strategy: Strategy) -> usize {
        match strategy {
            Strategy::Cooperate => self.cooperators,
            Strategy::Defect => self.defectors,
            Strategy::Outside => self.outsiders(),
        }
    }

    /// Fraction of members `y = i_M / Z`.
    pub fn y(&self) -> f64 {
        self.members() as f64 / self.population as f64
    }

    /// Fraction of cooperators among members, undefined without members.
    pub fn x(&self) -> Option<f64> {
        let m = self.members();
        (m > 0).then(|| self.cooperators as f64 / m as f64)
    }

    /// At least one individual of every strategy.
    pub fn is_interior(&self) -> bool {
        self.cooperators >= 1 && self.defectors >= 1 && self.outsiders() >= 1
    }

    /// The composition after one `from` individual switched to `to`.
    pub fn after_switch(&self, from: Strategy, to: Strategy) -> Option<PopulationState> {
        if from == to || self.count(from) == 0 {
            return None;
        }
        let mut c = self.cooperators as isize;
        let mut d = self.defectors as isize;
        for (s, delta) in [(from, -1), (to, 1)] {
            match s {
                Strategy::Cooperate => c += delta,
                Strategy::Defect => d += delta,
                Strategy::Outside => {}
            }
        }
        Some(PopulationState {
            cooperators: c as usize,
            defectors: d as usize,
            population: self.population,
        })
    }
}

/// Bijection between compositions `(i_C, i_D)` with `i_C + i_D ≤ Z` and `0..S`,
/// `S = (Z+1)(Z+2)/2`. States are ordered by `i_C`, then `i_D`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StateSpace {
    population: usize,
}

impl StateSpace {
    pub fn new(population: usize) -> Self {
        StateSpace { population }
    }

    pub fn population(&self) -> usize {
        self.population
    }

    pub fn len(&self) -> usize {
        (self.population + 1) * (self.population + 2) / 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn row_offset(&self, cooperators: usize) -> usize {
        // Σ_{j < i_C} (Z + 1 − j)
        cooperators * (self.population + 1) - cooperators * (cooperators.saturating_sub(1)) / 2
    }

    pub fn index(&self, cooperators: usize, defectors: usize) -> usize {
        debug_assert!(cooperators + defectors <= self.population);
        self.row_offset(cooperators) + defectors
    }

    pub fn index_of(&self, state: &PopulationState) -> usize {
        self.index(state.cooperators, state.defectors)
    }

    pub fn state(&self, index: usize) -> PopulationState {
        let z = self.population;
        let mut c = 0;
        let mut offset = 0;
        while offset + (z + 1 - c) <= index {
            offset += z + 1 - c;
            c += 1;
        }
        PopulationState {
            cooperators: c,
            defectors: index - offset,
            population: z,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = PopulationState> + '_ {
        let z = self.population;
        (0..=z).flat_map(move |c| {
            (0..=z - c).map(move |d| PopulationState {
                cooperators: c,
                defectors: d,
                population: z,
            })
        })
    }
}

/// Effective game parameters of a coalition of size `N`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveShares {
    /// Member share `ε₁ = e / N^θ′`.
    pub eps1: f64,
    /// Public spillover share `ε₂ = (1 − e) / Z^θ`.
    pub eps2: f64,
    /// Relative engagement cost `κ = c_c / c`.
    pub kappa: f64,
}

impl EffectiveShares {
    pub fn total(&self) -> f64 {
        self.eps1 + self.eps2
    }
}

pub fn effective_shares(params: &GameParams, group: usize) -> EffectiveShares {
    let n = group.max(1) as f64;
    let z = params.population as f64;
    EffectiveShares {
        eps1: params.excludability / n.powf(params.theta_prime),
        eps2: (1.0 - params.excludability) / z.powf(params.theta),
        kappa: params.kappa(),
    }
}

/// Payoffs inside a coalition of fixed size `N`, indexed by the number `k`
/// of contributing co-players (others' contribution `C′ = k·c`).
#[derive(Clone, Copy, Debug)]
pub struct GroupPayoffs<'a> {
    params: &'a GameParams,
    group: usize,
    shares: EffectiveShares,
    scale: f64,
}

impl<'a> GroupPayoffs<'a> {
    pub fn new(params: &'a GameParams, group: usize) -> Self {
        GroupPayoffs {
            params,
            group,
            shares: effective_shares(params, group),
            scale: group as f64 * params.cost,
        }
    }

    pub fn group(&self) -> usize {
        self.group
    }

    pub fn shares(&self) -> EffectiveShares {
        self.shares
    }

    /// `B(k·c)` normalized with the current `N·c`.
    pub fn benefit(&self, k: usize) -> f64 {
        self.params
            .benefit
            .eval(k as f64 * self.params.cost, self.scale)
    }

    /// `b(k·c) = B(k·c)/c`.
    pub fn relative_benefit(&self, k: usize) -> f64 {
        self.benefit(k) / self.params.cost
    }

    /// `R(k·c) = b(k·c + c) − b(k·c)`.
    pub fn marginal_return(&self, k: usize) -> f64 {
        (self.benefit(k + 1) - self.benefit(k)) / self.params.cost
    }

    pub fn payoff(&self, strategy: Strategy, k: usize) -> f64 {
        let p = self.params;
        let s = self.shares;
        match strategy {
            Strategy::Cooperate => self.benefit(k + 1) * s.total() - p.cost - p.membership_cost,
            Strategy::Defect => self.benefit(k) * s.total() - p.membership_cost,
            Strategy::Outside => self.benefit(k) * s.eps2,
        }
    }
}

/// Converts a contribution `C′` into a co-player count on the grid `{0, c, 2c, …}`.
fn contribution_steps(params: &GameParams, contribution: f64, max_steps: usize) -> Result<usize> {
    let steps = contribution / params.cost;
    let k = steps.round();
    if !(steps.is_finite() && k >= 0.0 && (steps - k).abs() <= 1e-9 * steps.abs().max(1.0)) {
        return Err(Error::InvalidArgument(format!(
            "contribution {contribution} is not a multiple of c = {}",
            params.cost
        )));
    }
    let k = k as usize;
    if k > max_steps {
        return Err(Error::InvalidArgument(format!(
            "contribution {contribution} exceeds {max_steps}·c"
        )));
    }
    Ok(k)
}

/// Single-encounter payoff of `strategy` when the others in the coalition of
/// size `group` contribute `others_contribution` in total.
///
/// Members see at most `N − 1` contributing co-players. Outsiders may face a
/// fully cooperating coalition, `C′ = N·c`.
pub fn payoff(
    params: &GameParams,
    strategy: Strategy,
    others_contribution: f64,
    group: usize,
) -> Result<f64> {
    if group < 2 {
        return Err(Error::InvalidArgument(format!(
            "coalition size {group} is below 2"
        )));
    }
    let max_steps = match strategy {
        Strategy::Outside => group,
        _ => group - 1,
    };
    let k = contribution_steps(params, others_contribution, max_steps)?;
    Ok(GroupPayoffs::new(params, group).payoff(strategy, k))
}

/// `R(C′) = (B(C′ + c) − B(C′))/c` for a coalition of size `group`.
pub fn marginal_return(params: &GameParams, others_contribution: f64, group: usize) -> f64 {
    let scale = group as f64 * params.cost;
    let b = |x: f64| params.benefit.eval(x, scale);
    (b(others_contribution + params.cost) - b(others_contribution)) / params.cost
}

/// `b(C′) = B(C′)/c` for a coalition of size `group`.
pub fn relative_benefit(params: &GameParams, others_contribution: f64, group: usize) -> f64 {
    params
        .benefit
        .eval(others_contribution, group as f64 * params.cost)
        / params.cost
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(z: usize, alpha: f64) -> GameParams {
        GameParams::reference(z).with_alpha(alpha)
    }

    #[test]
    fn group_size_examples() {
        assert_eq!(group_size(&params(100, 1.0), 50), 50);
        assert_eq!(group_size(&params(100, 2.0), 100), 100);
        assert_eq!(group_size(&params(100, 2.0), 50), 29);
    }

    #[test]
    fn group_size_single_coalition_is_identity() {
        for z in [4, 12, 60, 100, 257] {
            let p = params(z, 1.0);
            for m in 2..=z {
                assert_eq!(group_size(&p, m), m, "Z={z} i_M={m}");
            }
        }
    }

    #[test]
    fn group_size_monotone_and_bounded() {
        for alpha in [1.0, 1.5, 2.0, 3.0, 8.0] {
            let p = params(100, alpha);
            let mut last = 0;
            for m in 0..=100 {
                let n = group_size(&p, m);
                assert!(n >= last);
                assert!(n >= 2 && n <= m.max(2));
                last = n;
            }
        }
    }

    #[test]
    fn payoff_examples() {
        let mut p = params(100, 1.0);
        p.excludability = 1.0;
        for k in 0..10 {
            assert_eq!(payoff(&p, Strategy::Outside, k as f64, 10).unwrap(), 0.0);
        }

        let p = params(100, 1.0).with_benefit(BenefitFunction::constant(100.0));
        let pd = payoff(&p, Strategy::Defect, 3.0, 10).unwrap();
        assert!((pd - 4.5).abs() < 1e-12, "{pd}");

        let p = params(100, 1.0).with_benefit(BenefitFunction::linear(0.0));
        assert_eq!(payoff(&p, Strategy::Cooperate, 2.0, 10).unwrap(), -2.0);
    }

    #[test]
    fn payoff_rejects_off_grid_contribution() {
        let p = params(100, 1.0);
        assert!(payoff(&p, Strategy::Defect, 1.5, 10).is_err());
        assert!(payoff(&p, Strategy::Defect, 10.0, 10).is_err());
        assert!(payoff(&p, Strategy::Outside, 10.0, 10).is_ok());
        assert!(payoff(&p, Strategy::Cooperate, -1.0, 10).is_err());
    }

    #[test]
    fn shares_examples() {
        let p = params(100, 1.0);
        let s = effective_shares(&p, 10);
        assert!((s.eps1 - 0.05).abs() < 1e-15);
        assert!((s.eps2 - 0.005).abs() < 1e-15);
        assert_eq!(s.kappa, 1.0);

        let mut p = params(100, 1.0);
        p.theta = 0.0;
        p.theta_prime = 0.0;
        let s = effective_shares(&p, 37);
        assert_eq!((s.eps1, s.eps2), (0.5, 0.5));

        p.excludability = 1.0;
        assert_eq!(effective_shares(&p, 10).eps2, 0.0);
    }

    #[test]
    fn marginal_return_flat_and_linear() {
        let lin = params(100, 1.0).with_benefit(BenefitFunction::linear(1.0));
        let flat = params(100, 1.0).with_benefit(BenefitFunction::constant(7.0));
        for k in 0..50 {
            assert!((marginal_return(&lin, k as f64, 50) - 1.0).abs() < 1e-12);
            assert_eq!(marginal_return(&flat, k as f64, 50), 0.0);
        }
    }

    #[test]
    fn sigmoid_return_peaks_at_threshold() {
        let p = params(100, 1.0);
        let returns: Vec<f64> = (0..100).map(|k| marginal_return(&p, k as f64, 100)).collect();
        let argmax = (0..100)
            .max_by(|&a, &b| returns[a].total_cmp(&returns[b]))
            .unwrap();
        assert!((73..=75).contains(&argmax), "argmax {argmax}");
    }

    #[test]
    fn sigmoid_normalization() {
        let b = BenefitFunction::threshold_sigmoid();
        for n in [2usize, 5, 10, 37, 100] {
            let scale = n as f64;
            assert!(b.eval(0.0, scale).abs() < 1e-9);
            assert!((b.eval(scale, scale) - 100.0).abs() < 1e-9);
            let mut last = -1.0;
            for i in 0..=200 {
                let v = b.eval(scale * i as f64 / 200.0, scale);
                assert!(v >= last);
                last = v;
            }
        }
    }

    #[test]
    fn tabulated_from_csv() {
        let csv = "C,B\n0,0\n50,10\n100,30\n";
        let b = BenefitFunction::from_csv_reader(csv.as_bytes()).unwrap();
        assert_eq!(b.eval(25.0, 1.0), 5.0);
        assert_eq!(b.eval(75.0, 1.0), 20.0);
        assert!(b.validate(100.0).is_ok());
        assert!(matches!(b.validate(120.0), Err(Error::BenefitDomain { .. })));
        assert!(BenefitFunction::from_csv_reader("C,B\n0,0\n0,1\n".as_bytes()).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(GameParams::reference(100).validate().is_ok());
        let mut p = GameParams::reference(100);
        p.min_group_fraction = 0.01;
        assert!(p.validate().is_err());
        let mut p = GameParams::reference(100);
        p.cost = 0.0;
        assert!(p.validate().is_err());
        let p = GameParams::reference(100).with_alpha(0.5);
        assert!(p.validate().is_err());
        let p = GameParams::reference(3);
        assert!(p.validate().is_err());
    }

    #[test]
    fn state_space_bijection() {
        for z in [4usize, 7, 20] {
            let space = StateSpace::new(z);
            let states: Vec<_> = space.iter().collect();
            assert_eq!(states.len(), space.len());
            for (i, s) in states.iter().enumerate() {
                assert_eq!(space.index_of(s), i);
                assert_eq!(space.state(i), *s);
            }
        }
    }
}
