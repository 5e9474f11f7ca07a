//! Hypergeometric sampling of coalition compositions and the average payoffs
//! `f_C`, `f_D`, `f_O` of each strategy.
//!
//! A member draws its `N − 1` co-players without replacement from the other
//! `i_M − 1` members. Outsider payoffs average the spillover over the
//! coalitions seen from a random member, weighted by `i_C/i_M` and `i_D/i_M`.
//! Compositions with fewer than two members have no coalition; every fitness
//! is zero there.

use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{group_size, GameParams, GroupPayoffs, PopulationState, StateSpace, Strategy};

/// Largest state space a landscape (and a Markov chain) will allocate.
pub const MAX_STATES: usize = 2_000_000;

/// `P(k; z, n, i)`: probability of `k` successes when drawing `n` out of `z`
/// items of which `i` are successes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypergeomSpec {
    pub pool: usize,
    pub draws: usize,
    pub successes: usize,
}

impl HypergeomSpec {
    pub fn new(pool: usize, draws: usize, successes: usize) -> Result<Self> {
        if draws > pool || successes > pool {
            return Err(Error::InvalidArgument(format!(
                "hypergeometric spec (z={pool}, n={draws}, i={successes}) needs n <= z and i <= z"
            )));
        }
        Ok(HypergeomSpec {
            pool,
            draws,
            successes,
        })
    }

    pub fn support(&self) -> RangeInclusive<usize> {
        let lo = self.draws.saturating_sub(self.pool - self.successes);
        let hi = self.draws.min(self.successes);
        lo..=hi
    }
}

/// The full PMF over the support of a [`HypergeomSpec`].
#[derive(Clone, Debug, PartialEq)]
pub struct HypergeomRow {
    lo: usize,
    probs: Vec<f64>,
}

impl HypergeomRow {
    pub fn new(spec: HypergeomSpec) -> Self {
        let (lo, hi) = spec.support().into_inner();
        let z = spec.pool as f64;
        let n = spec.draws as f64;
        let i = spec.successes as f64;
        // Ratio recurrence outward from the mode: weights stay in (0, 1], no overflow.
        let mode = (((n + 1.0) * (i + 1.0) / (z + 2.0)).floor() as usize).clamp(lo, hi);
        let mut w = vec![0.0; hi - lo + 1];
        w[mode - lo] = 1.0;
        for k in mode + 1..=hi {
            let kf = k as f64;
            let ratio = (i - kf + 1.0) * (n - kf + 1.0) / (kf * (z - i - n + kf));
            w[k - lo] = w[k - 1 - lo] * ratio;
        }
        for k in (lo..mode).rev() {
            let kf = k as f64;
            let ratio = (kf + 1.0) * (z - i - n + kf + 1.0) / ((i - kf) * (n - kf));
            w[k - lo] = w[k + 1 - lo] * ratio;
        }
        let total: f64 = w.iter().sum();
        for v in &mut w {
            *v /= total;
        }
        HypergeomRow { lo, probs: w }
    }

    pub fn probability(&self, k: usize) -> f64 {
        k.checked_sub(self.lo)
            .and_then(|j| self.probs.get(j))
            .copied()
            .unwrap_or(0.0)
    }

    /// `(k, P(k))` over the support.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.probs.iter().enumerate().map(move |(j, &p)| (self.lo + j, p))
    }

    /// `Σ_k P(k) g(k)`.
    pub fn expect(&self, mut g: impl FnMut(usize) -> f64) -> f64 {
        self.iter().map(|(k, p)| p * g(k)).sum()
    }
}

/// Probability of `k` successes; zero outside the support.
pub fn hypergeom_pmf(spec: HypergeomSpec, k: usize) -> f64 {
    if !spec.support().contains(&k) {
        return 0.0;
    }
    HypergeomRow::new(spec).probability(k)
}

/// Member-perspective composition row: `P(k; i_M − 1, N − 1, successes)`.
pub(crate) fn member_row(members: usize, group: usize, successes: usize) -> HypergeomRow {
    HypergeomRow::new(HypergeomSpec {
        pool: members - 1,
        draws: group - 1,
        successes,
    })
}

/// Average payoffs of cooperators, defectors and outsiders at one composition.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FitnessTriple {
    pub cooperator: f64,
    pub defector: f64,
    pub outsider: f64,
}

impl FitnessTriple {
    pub fn get(&self, strategy: Strategy) -> f64 {
        match strategy {
            Strategy::Cooperate => self.cooperator,
            Strategy::Defect => self.defector,
            Strategy::Outside => self.outsider,
        }
    }

    pub(crate) fn lerp(&self, other: &FitnessTriple, t: f64) -> FitnessTriple {
        FitnessTriple {
            cooperator: self.cooperator + t * (other.cooperator - self.cooperator),
            defector: self.defector + t * (other.defector - self.defector),
            outsider: self.outsider + t * (other.outsider - self.outsider),
        }
    }
}

fn fitness_in_group(
    params: &GameParams,
    cooperators: usize,
    defectors: usize,
    group: usize,
) -> FitnessTriple {
    let members = cooperators + defectors;
    if members < 2 {
        return FitnessTriple::default();
    }
    let payoffs = GroupPayoffs::new(params, group);
    let m = members as f64;
    let mut out = FitnessTriple::default();
    if cooperators >= 1 {
        let row = member_row(members, group, cooperators - 1);
        out.cooperator = row.expect(|k| payoffs.payoff(Strategy::Cooperate, k));
        out.outsider +=
            cooperators as f64 / m * row.expect(|k| payoffs.payoff(Strategy::Outside, k + 1));
    }
    if defectors >= 1 {
        let row = member_row(members, group, cooperators);
        out.defector = row.expect(|k| payoffs.payoff(Strategy::Defect, k));
        out.outsider += defectors as f64 / m * row.expect(|k| payoffs.payoff(Strategy::Outside, k));
    }
    out
}

/// Average payoffs at a valid composition, with `N = group_size(i_M)`.
pub fn fitness(params: &GameParams, state: &PopulationState) -> FitnessTriple {
    let members = state.members();
    fitness_in_group(
        params,
        state.cooperators,
        state.defectors,
        group_size(params, members),
    )
}

/// Average payoffs at an arbitrary composition. The coalition size is
/// recomputed from the composition's own `i_M` unless overridden.
pub fn fitness_at(
    params: &GameParams,
    cooperators: usize,
    defectors: usize,
    group_override: Option<usize>,
) -> Result<FitnessTriple> {
    let members = cooperators + defectors;
    if members > params.population {
        return Err(Error::InvalidState(format!(
            "i_C + i_D = {members} exceeds Z = {}",
            params.population
        )));
    }
    let group = match group_override {
        Some(n) if members >= 2 && !(2..=members).contains(&n) => {
            return Err(Error::InvalidArgument(format!(
                "coalition size {n} outside [2, {members}]"
            )))
        }
        Some(n) => n,
        None => group_size(params, members),
    };
    Ok(fitness_in_group(params, cooperators, defectors, group))
}

/// Fitness of every composition of one parameter set, computed once.
///
/// Built in parallel; read-only afterwards.
#[derive(Clone, Debug)]
pub struct FitnessLandscape {
    params: GameParams,
    space: StateSpace,
    groups: Vec<usize>,
    table: Vec<FitnessTriple>,
}

impl FitnessLandscape {
    pub fn new(params: GameParams) -> Result<Self> {
        params.validate()?;
        let space = StateSpace::new(params.population);
        if space.len() > MAX_STATES {
            return Err(Error::Capacity(format!(
                "Z = {} needs {} states, limit is {MAX_STATES}",
                params.population,
                space.len()
            )));
        }
        let groups: Vec<usize> = (0..=params.population)
            .map(|m| group_size(&params, m))
            .collect();
        let states: Vec<PopulationState> = space.iter().collect();
        let table = states
            .par_iter()
            .map(|s| fitness_in_group(&params, s.cooperators, s.defectors, groups[s.members()]))
            .collect();
        Ok(FitnessLandscape {
            params,
            space,
            groups,
            table,
        })
    }

    pub fn params(&self) -> &GameParams {
        &self.params
    }

    pub fn space(&self) -> StateSpace {
        self.space
    }

    pub fn population(&self) -> usize {
        self.params.population
    }

    /// `N` for `members` coalition members.
    pub fn group(&self, members: usize) -> usize {
        self.groups[members]
    }

    pub fn state(&self, cooperators: usize, defectors: usize) -> Result<PopulationState> {
        PopulationState::new(cooperators, defectors, self.params.population)
    }

    pub fn fitness(&self, cooperators: usize, defectors: usize) -> FitnessTriple {
        self.table[self.space.index(cooperators, defectors)]
    }

    pub fn fitness_of(&self, state: &PopulationState) -> FitnessTriple {
        self.table[self.space.index_of(state)]
    }

    /// Fitness at a possibly shifted composition; `None` when it leaves the simplex.
    pub fn fitness_shifted(&self, cooperators: isize, defectors: isize) -> Option<FitnessTriple> {
        if cooperators < 0 || defectors < 0 {
            return None;
        }
        let (c, d) = (cooperators as usize, defectors as usize);
        (c + d <= self.params.population).then(|| self.fitness(c, d))
    }

    pub fn table(&self) -> &[FitnessTriple] {
        &self.table
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::BenefitFunction;

    fn binom(n: u64, k: u64) -> u64 {
        if k > n {
            return 0;
        }
        (0..k).fold(1u64, |acc, j| acc * (n - j) / (j + 1))
    }

    #[test]
    fn pmf_examples() {
        for i in 0..=7 {
            for k in 0..=7 {
                let p = hypergeom_pmf(HypergeomSpec::new(7, 7, i).unwrap(), k);
                assert_eq!(p, if k == i { 1.0 } else { 0.0 });
            }
        }
        let p = hypergeom_pmf(HypergeomSpec::new(4, 2, 2).unwrap(), 1);
        assert!((p - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(hypergeom_pmf(HypergeomSpec::new(9, 4, 0).unwrap(), 0), 1.0);
    }

    #[test]
    fn pmf_matches_counting() {
        for z in 0..=12u64 {
            for n in 0..=z {
                for i in 0..=z {
                    let spec = HypergeomSpec::new(z as usize, n as usize, i as usize).unwrap();
                    for k in 0..=n {
                        let exact =
                            (binom(i, k) * binom(z - i, n - k)) as f64 / binom(z, n) as f64;
                        assert!((hypergeom_pmf(spec, k as usize) - exact).abs() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn invalid_spec_rejected() {
        assert!(HypergeomSpec::new(3, 4, 1).is_err());
        assert!(HypergeomSpec::new(3, 2, 4).is_err());
    }

    #[test]
    fn full_cooperation_single_composition() {
        let p = GameParams::reference(30).with_alpha(1.0);
        let state = PopulationState::new(12, 0, 30).unwrap();
        let f = fitness(&p, &state);
        let direct = GroupPayoffs::new(&p, 12).payoff(Strategy::Cooperate, 11);
        assert!((f.cooperator - direct).abs() < 1e-12);
        assert_eq!(f.defector, 0.0);
    }

    #[test]
    fn boundary_conventions() {
        let p = GameParams::reference(20).with_alpha(2.0);
        let f = fitness_at(&p, 0, 5, None).unwrap();
        assert_eq!(f.cooperator, 0.0);
        assert!(f.defector != 0.0);
        assert_eq!(fitness_at(&p, 1, 0, None).unwrap(), FitnessTriple::default());
        assert_eq!(fitness_at(&p, 0, 0, None).unwrap(), FitnessTriple::default());
        assert!(fitness_at(&p, 15, 6, None).is_err());
        assert!(fitness_at(&p, 3, 3, Some(7)).is_err());
    }

    #[test]
    fn fitness_at_matches_fitness_and_landscape() {
        let p = GameParams::reference(24)
            .with_alpha(3.0)
            .with_benefit(BenefitFunction::threshold_sigmoid());
        let land = FitnessLandscape::new(p.clone()).unwrap();
        for s in land.space().iter() {
            let a = fitness(&p, &s);
            let b = fitness_at(&p, s.cooperators, s.defectors, None).unwrap();
            assert_eq!(a, b);
            assert_eq!(land.fitness_of(&s), a);
        }
    }

    #[test]
    fn group_override_changes_sampling() {
        let p = GameParams::reference(40).with_alpha(4.0);
        let natural = fitness_at(&p, 10, 10, None).unwrap();
        let forced = fitness_at(&p, 10, 10, Some(20)).unwrap();
        assert_ne!(natural, forced);
        let at_n = fitness_at(&p, 10, 10, Some(group_size(&p, 20))).unwrap();
        assert_eq!(natural, at_n);
    }
}
