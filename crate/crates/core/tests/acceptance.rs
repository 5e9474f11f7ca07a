//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! `cargo test --test acceptance` runs everything. Criteria listed in
//! `KNOWN_FAILURES` still print FAIL but do not fail the process; pass
//! `-- --strict` to make any FAIL an error. `-- 3 5` runs only those criteria.

mod common;

use std::time::{Duration, Instant};

use coalition_core::cli::config::ExperimentConfig;
use coalition_core::cli::experiments::run_experiment;
use coalition_core::deterministic::{
    find_fixed_points, information_slice, k_decomposition, mean_return, members_for_group, replicator_field,
    FixedPoint, Stability,
};
use coalition_core::game::{effective_shares, BenefitFunction, GameParams, PopulationState};
use coalition_core::sampling::{fitness_at, FitnessLandscape};
use coalition_core::stochastic::{
    monte_carlo, selection_gradient, stationary, total_variation, MarkovModel, MonteCarloOptions,
    StationaryOptions,
};

/// Criteria that fail with the pinned parameters; see README.
const KNOWN_FAILURES: [u32; 2] = [6, 7];

const SWEEP_ALPHAS: [f64; 4] = [1.0, 2.0, 4.0, 8.0];
const SWEEP_CONFIG: &str = "[game]\nZ = 100\n\n[experiment]\nname = \"sweep-alpha\"\nvalues = [1, 2, 4, 8]\nformats = [\"csv\", \"json\"]\n";

/// CSV outputs by name, and `(alpha, mean_x, mean_y)` per panel.
type Sweep = (Vec<(String, Vec<u8>)>, Vec<(f64, f64, f64)>);

struct Outcome {
    pass: bool,
    detail: String,
}

fn interior_states(land: &FitnessLandscape) -> Vec<PopulationState> {
    land.space().iter().filter(|s| s.is_interior()).collect()
}

fn criterion_1() -> Outcome {
    let mut worst: f64 = 0.0;
    for z in [20, 60] {
        for benefit in [BenefitFunction::threshold_sigmoid(), BenefitFunction::linear(2.0)] {
            let land = FitnessLandscape::new(GameParams::reference(z).with_benefit(benefit)).unwrap();
            let c = land.params().cost;
            for s in interior_states(&land) {
                let f = land.fitness_of(&s);
                worst = worst.max((f.cooperator - f.defector + c).abs());
            }
        }
    }
    Outcome {
        pass: worst < 1e-12,
        detail: format!("max |f_C - f_D + c| = {worst:.3e}"),
    }
}

fn criterion_2() -> Outcome {
    let mut worst: f64 = 0.0;
    for z in [20, 60] {
        let land = FitnessLandscape::new(GameParams::reference(z)).unwrap();
        for s in interior_states(&land) {
            let k = k_decomposition(&land, &s).unwrap();
            let eps = effective_shares(land.params(), land.group(s.members())).total();
            worst = worst.max((k.k_exact - mean_return(&land, &s).unwrap() * eps).abs());
        }
    }
    Outcome {
        pass: worst < 1e-10,
        detail: format!("max |K_exact - <R>(e1+e2)| = {worst:.3e}"),
    }
}

fn criterion_3() -> Outcome {
    let mut worst: f64 = 0.0;
    for alpha in [1.0, 2.0, 4.0] {
        let land = FitnessLandscape::new(GameParams::reference(60).with_alpha(alpha)).unwrap();
        let c = land.params().cost;
        for s in interior_states(&land) {
            let x = s.x().unwrap();
            let k = k_decomposition(&land, &s).unwrap();
            let eps = effective_shares(land.params(), land.group(s.members())).total();
            let r = mean_return(&land, &s).unwrap();
            let expected = x * (1.0 - x) * c * (r * eps - 1.0 - k.k_exact);
            worst = worst.max((replicator_field(&land, &s).x_dot - expected).abs());
        }
    }
    Outcome {
        pass: worst < 1e-10,
        detail: format!("max closure error = {worst:.3e}"),
    }
}

fn criterion_4() -> Outcome {
    let pmf = common::max_pmf_error(12);
    let mut fit: f64 = 0.0;
    let mut p = GameParams::reference(12).with_alpha(2.0);
    p.min_group_fraction = 2.0 / 12.0;
    for c in 0..=12usize {
        for d in 0..=12 - c {
            if c + d < 2 {
                continue;
            }
            let (fc, fd, fo) = common::enumerated_fitness(&p, c, d);
            let f = fitness_at(&p, c, d, None).unwrap();
            if c > 0 {
                fit = fit.max((f.cooperator - fc).abs());
            }
            if d > 0 {
                fit = fit.max((f.defector - fd).abs());
            }
            fit = fit.max((f.outsider - fo).abs());
        }
    }
    Outcome {
        pass: pmf < 1e-12 && fit < 1e-10,
        detail: format!("pmf error {pmf:.3e}, fitness error {fit:.3e}"),
    }
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let land = FitnessLandscape::new(GameParams::reference(100).with_alpha(4.0)).unwrap();
    let model = MarkovModel::from_landscape(&land).unwrap();
    let result = stationary(&model, &StationaryOptions::default()).unwrap();
    let chain_time = start.elapsed();
    let residual = model.residual(&result.pi);

    let land = FitnessLandscape::new(GameParams::reference(20).with_alpha(2.0)).unwrap();
    let model = MarkovModel::from_landscape(&land).unwrap();
    let pi = stationary(&model, &StationaryOptions::default()).unwrap().pi;
    let tvs: Vec<f64> = [1u64, 2, 3]
        .iter()
        .map(|&seed| {
            let mc = monte_carlo(
                &land,
                &MonteCarloOptions {
                    steps: 10_000_000,
                    seed,
                    start: (0, 0),
                    stride: 0,
                },
            )
            .unwrap();
            total_variation(&pi, &mc.occupancy)
        })
        .collect();
    Outcome {
        pass: residual < 1e-10 && chain_time < Duration::from_secs(60) && tvs.iter().all(|&t| t < 0.05),
        detail: format!(
            "Z=100 residual {residual:.3e} in {:.1}s ({} states); Z=20 TV {:.4} {:.4} {:.4}",
            chain_time.as_secs_f64(),
            model_states(100),
            tvs[0],
            tvs[1],
            tvs[2]
        ),
    }
}

fn model_states(z: usize) -> usize {
    (z + 1) * (z + 2) / 2
}

/// Runs the reference sweep through the experiment harness.
fn reference_sweep() -> Sweep {
    let cfg = ExperimentConfig::from_toml_str(SWEEP_CONFIG).unwrap();
    let outputs = run_experiment(&cfg).unwrap();
    let sweep = outputs.iter().find(|o| o.name == "sweep.json").expect("sweep summary");
    let json: serde_json::Value = serde_json::from_slice(&sweep.bytes).unwrap();
    let means = json["panels"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| {
            (
                p["alpha"].as_f64().unwrap(),
                p["mean_x"].as_f64().unwrap(),
                p["mean_y"].as_f64().unwrap(),
            )
        })
        .collect();
    let csvs = outputs
        .into_iter()
        .filter(|o| o.name.ends_with(".csv"))
        .map(|o| (o.name, o.bytes))
        .collect();
    (csvs, means)
}

fn criterion_6(sweep: &[(f64, f64, f64)]) -> Outcome {
    let first = sweep.iter().find(|p| p.0 == 1.0).unwrap();
    let last = sweep.iter().find(|p| p.0 == 8.0).unwrap();
    let dx = last.1 - first.1;
    let listing: Vec<String> = sweep
        .iter()
        .map(|(a, x, y)| format!("a={a}: x {x:.4} y {y:.4}"))
        .collect();
    Outcome {
        pass: last.1 > first.1 && last.2 > first.2 && dx > 0.1,
        detail: format!("mean_x(8) - mean_x(1) = {dx:.4} (need > 0.1); {}", listing.join(", ")),
    }
}

/// The interior attractor candidate: the non-saddle fixed point with the
/// largest membership, or the highest one if all are saddles.
fn primary(fixed: &[FixedPoint]) -> Option<&FixedPoint> {
    fixed
        .iter()
        .filter(|f| f.stability != Stability::Saddle)
        .max_by(|a, b| a.y.total_cmp(&b.y))
        .or_else(|| fixed.iter().max_by(|a, b| a.y.total_cmp(&b.y)))
}

fn criterion_7() -> Outcome {
    let alphas = [1.5, 2.0, 3.0, 4.0, 6.0, 8.0];
    let points: Vec<(f64, Option<FixedPoint>)> = alphas
        .iter()
        .map(|&a| {
            let land = FitnessLandscape::new(GameParams::reference(100).with_alpha(a)).unwrap();
            let fixed = find_fixed_points(&land, 200).unwrap();
            (a, primary(&fixed).cloned())
        })
        .collect();
    let spiral = |f: &FixedPoint| f.eigenvalues.iter().any(|e| e.im != 0.0);
    let sink = |f: &FixedPoint| f.eigenvalues.iter().all(|e| e.im == 0.0 && e.re < 0.0);
    let mut crossover = None;
    for (i, (a, fi)) in points.iter().enumerate() {
        if fi.as_ref().is_some_and(spiral) {
            if let Some((b, _)) = points[i + 1..].iter().find(|(_, fj)| fj.as_ref().is_some_and(sink)) {
                crossover = Some((*a, *b));
                break;
            }
        }
    }
    let listing: Vec<String> = points
        .iter()
        .map(|(a, f)| match f {
            Some(f) => format!(
                "a={a}: {:?} ({:.3},{:.3}) re {:.3} im {:.3}",
                f.stability, f.x, f.y, f.eigenvalues[0].re, f.eigenvalues[0].im.abs()
            ),
            None => format!("a={a}: none"),
        })
        .collect();
    // Where the leading real part changes sign, whatever the eigenvalue type.
    let stable = |f: &FixedPoint| f.eigenvalues.iter().all(|e| e.re < 0.0);
    let change = points
        .windows(2)
        .find(|w| match (&w[0].1, &w[1].1) {
            (Some(a), Some(b)) => stable(a) != stable(b),
            _ => false,
        })
        .map(|w| format!("stability changes between a={} and a={}", w[0].0, w[1].0))
        .unwrap_or_else(|| "no stability change".into());
    Outcome {
        pass: crossover.is_some(),
        detail: match crossover {
            Some((a, b)) => format!("spiral at a={a}, sink at a={b}; {change}; {}", listing.join("; ")),
            None => format!("no spiral-to-sink crossover, {change}; {}", listing.join("; ")),
        },
    }
}

fn criterion_8() -> Outcome {
    let land = FitnessLandscape::new(GameParams::reference(100).with_alpha(4.0).with_mu(0.0)).unwrap();
    let gradient = selection_gradient(&land);
    let (mut dot, mut ng, mut nf) = (0.0, 0.0, 0.0);
    let mut min_local: f64 = 1.0;
    let mut counted = 0;
    for g in &gradient.points {
        let s = land.state(g.cooperators, g.defectors).unwrap();
        if s.cooperators.min(s.defectors).min(s.outsiders()) < 5 {
            continue;
        }
        let f = replicator_field(&land, &s);
        let (a, b) = ((g.grad_x, g.grad_y), (f.x_dot, f.y_dot));
        let d = a.0 * b.0 + a.1 * b.1;
        let (na, nb) = (a.0.hypot(a.1), b.0.hypot(b.1));
        if na > 0.0 && nb > 0.0 {
            min_local = min_local.min(d / (na * nb));
        }
        dot += d;
        ng += na * na;
        nf += nb * nb;
        counted += 1;
    }
    let cosine = dot / (ng.sqrt() * nf.sqrt());
    Outcome {
        pass: cosine > 0.99,
        detail: format!("cosine {cosine:.6} over {counted} states (smallest per-state {min_local:.4})"),
    }
}

fn criterion_9() -> Outcome {
    let mut orderings = Vec::new();
    let mut text = Vec::new();
    for z in [60usize, 100] {
        let gaps: Vec<f64> = SWEEP_ALPHAS
            .iter()
            .map(|&a| {
                let land = FitnessLandscape::new(GameParams::reference(z).with_alpha(a)).unwrap();
                let members = members_for_group(&land, 20).expect("N = 20 reachable");
                information_slice(&land, members)
                    .unwrap()
                    .iter()
                    .map(|s| (s.informed - s.uninformed).abs())
                    .fold(0.0f64, f64::max)
            })
            .collect();
        let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
        let mut order: Vec<usize> = (0..gaps.len()).collect();
        order.sort_by(|&i, &j| gaps[j].total_cmp(&gaps[i]));
        text.push(format!(
            "Z={z}: {}",
            gaps.iter().map(|g| format!("{g:.3}")).collect::<Vec<_>>().join(" ")
        ));
        orderings.push((decreasing, order));
    }
    let pass = orderings.iter().all(|(d, _)| *d) && orderings[0].1 == orderings[1].1;
    Outcome {
        pass,
        detail: format!("max gap over a=1,2,4,8; {}", text.join("; ")),
    }
}

fn criterion_10(first: &[(String, Vec<u8>)]) -> Outcome {
    let (second, _) = reference_sweep();
    let same = first.len() == second.len() && first.iter().zip(&second).all(|(a, b)| a == b);
    Outcome {
        pass: same && !first.is_empty(),
        detail: format!("{} CSV files compared", first.len()),
    }
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let strict = args.iter().any(|a| a == "--strict");
    let selected: Vec<u32> = args.iter().filter_map(|a| a.parse().ok()).collect();
    // libtest flags such as --list are accepted and ignored.
    if args.iter().any(|a| a == "--list") {
        return;
    }
    let wanted = |n: u32| selected.is_empty() || selected.contains(&n);

    let limits: [(u32, Duration); 10] = [
        (1, Duration::from_secs(5)),
        (2, Duration::from_secs(30)),
        (3, Duration::from_secs(120)),
        (4, Duration::from_secs(30)),
        (5, Duration::MAX),
        (6, Duration::from_secs(600)),
        (7, Duration::MAX),
        (8, Duration::from_secs(120)),
        (9, Duration::from_secs(120)),
        (10, Duration::MAX),
    ];
    let mut sweep_csv = Vec::new();
    let mut failed = Vec::new();
    for (n, limit) in limits {
        if !wanted(n) && !(n == 6 && wanted(10)) {
            continue;
        }
        let start = Instant::now();
        let outcome = match n {
            1 => criterion_1(),
            2 => criterion_2(),
            3 => criterion_3(),
            4 => criterion_4(),
            5 => criterion_5(),
            6 => {
                let (csv, means) = reference_sweep();
                sweep_csv = csv;
                criterion_6(&means)
            }
            7 => criterion_7(),
            8 => criterion_8(),
            9 => criterion_9(),
            _ => criterion_10(&sweep_csv),
        };
        let elapsed = start.elapsed();
        if !wanted(n) {
            continue;
        }
        let pass = outcome.pass && elapsed < limit;
        let over = if elapsed < limit { "" } else { " (over time limit)" };
        println!(
            "{} criterion {n:>2} [{:.1}s{over}] {}",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            outcome.detail
        );
        if !pass {
            failed.push(n);
        }
    }
    let unexpected: Vec<u32> = failed.iter().copied().filter(|n| !KNOWN_FAILURES.contains(n)).collect();
    println!(
        "acceptance: {} failed {:?}, known failures {:?}",
        failed.len(),
        failed,
        KNOWN_FAILURES
    );
    if !unexpected.is_empty() || (strict && !failed.is_empty()) {
        std::process::exit(1);
    }
}
