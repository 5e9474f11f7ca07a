//! Test-side reference computations shared by the integration tests.

#![allow(dead_code)]

use coalition_core::game::GameParams;
use coalition_core::sampling::{hypergeom_pmf, HypergeomSpec};

pub fn sigmoid_benefit(contribution: f64, group: usize, cost: f64) -> f64 {
    let g = |u: f64| 1.0 / (1.0 + (-100.0 * (u - 0.75)).exp());
    let u = contribution / (group as f64 * cost);
    100.0 * (g(u) - g(0.0)) / (g(1.0) - g(0.0))
}

/// Payoffs written out from the model definition, independent of the library.
pub fn direct_payoffs(p: &GameParams, group: usize, k: usize) -> (f64, f64, f64) {
    let eps1 = p.excludability / (group as f64).powf(p.theta_prime);
    let eps2 = (1.0 - p.excludability) / (p.population as f64).powf(p.theta);
    let b = |k: usize| sigmoid_benefit(k as f64 * p.cost, group, p.cost);
    (
        b(k + 1) * (eps1 + eps2) - p.cost - p.membership_cost,
        b(k) * (eps1 + eps2) - p.membership_cost,
        b(k) * eps2,
    )
}

pub fn direct_group_size(p: &GameParams, members: usize) -> usize {
    let z = p.population as f64;
    let y = members as f64 / z;
    let g = p.min_group_fraction;
    let v = z * y.min(g + (1.0 - g) * y.powf(p.alpha));
    ((v + 0.5).floor() as usize).clamp(2, members.max(2))
}

/// Largest deviation of the PMF from counting subsets of `z` labelled items,
/// over every `z <= max_z`.
pub fn max_pmf_error(max_z: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for z in 0..=max_z {
        for n in 0..=z {
            let subsets: Vec<u32> = (0u32..1 << z).filter(|m| m.count_ones() as usize == n).collect();
            for i in 0..=z {
                let successes: u32 = (1u32 << i) - 1;
                let mut counts = vec![0usize; n + 1];
                for &m in &subsets {
                    counts[(m & successes).count_ones() as usize] += 1;
                }
                let spec = HypergeomSpec::new(z, n, i).unwrap();
                for (k, &c) in counts.iter().enumerate() {
                    let exact = c as f64 / subsets.len() as f64;
                    worst = worst.max((hypergeom_pmf(spec, k) - exact).abs());
                }
            }
        }
    }
    worst
}

/// Fitness by listing every possible coalition of labelled individuals.
pub fn enumerated_fitness(p: &GameParams, cooperators: usize, defectors: usize) -> (f64, f64, f64) {
    let members = cooperators + defectors;
    let group = direct_group_size(p, members);
    // Members 0..i_C cooperate, the rest defect.
    let is_coop = |idx: usize| idx < cooperators;
    let average_over = |pool: &[usize], draws: usize, score: &dyn Fn(usize) -> f64| {
        let (mut total, mut count) = (0.0, 0usize);
        for mask in 0u32..1 << pool.len() {
            if mask.count_ones() as usize != draws {
                continue;
            }
            let k = pool
                .iter()
                .enumerate()
                .filter(|&(bit, &idx)| mask >> bit & 1 == 1 && is_coop(idx))
                .count();
            total += score(k);
            count += 1;
        }
        total / count as f64
    };
    let everyone: Vec<usize> = (0..members).collect();
    let without = |focal: usize| -> Vec<usize> { everyone.iter().cloned().filter(|&i| i != focal).collect() };
    let f_c = if cooperators > 0 {
        average_over(&without(0), group - 1, &|k| direct_payoffs(p, group, k).0)
    } else {
        0.0
    };
    let f_d = if defectors > 0 {
        average_over(&without(members - 1), group - 1, &|k| direct_payoffs(p, group, k).1)
    } else {
        0.0
    };
    let f_o = average_over(&everyone, group, &|k| direct_payoffs(p, group, k).2);
    (f_c, f_d, f_o)
}

