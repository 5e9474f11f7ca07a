//! Experiment runners. Each produces its files in memory so that runs can be
//! checksummed and verified without touching the disk.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::config::{ExperimentConfig, ExperimentKind, Format};
use super::svg;
use crate::deterministic::{
    find_fixed_points, flow_field, information_slice, k_decomposition, mean_return,
    members_for_group, FixedPoint,
};
use crate::error::{Error, Result};
use crate::game::{effective_shares, group_size, GameParams};
use crate::informed::{classify_state, informed_field};
use crate::io::{csv_line, fmt_f64};
use crate::sampling::FitnessLandscape;
use crate::stochastic::{
    monte_carlo, selection_gradient, stationary, stationary_csv, summarize, total_variation,
    MarkovModel, MonteCarloOptions, StationaryOptions, StationaryResult, StationarySummary,
};

#[derive(Clone, Debug, PartialEq)]
pub struct Output {
    /// Path relative to the output directory.
    pub name: String,
    pub format: Format,
    pub bytes: Vec<u8>,
}

impl Output {
    fn text(name: impl Into<String>, format: Format, body: String) -> Self {
        Output {
            name: name.into(),
            format,
            bytes: body.into_bytes(),
        }
    }

    fn json(name: impl Into<String>, value: &impl Serialize) -> Result<Self> {
        let mut body = serde_json::to_string_pretty(value)?;
        body.push('\n');
        Ok(Output::text(name, Format::Json, body))
    }
}

fn stationary_options(cfg: &ExperimentConfig) -> StationaryOptions {
    let d = StationaryOptions::default();
    StationaryOptions {
        method: cfg.experiment.solver.unwrap_or(d.method),
        tolerance: cfg.experiment.tolerance.unwrap_or(d.tolerance),
        max_iterations: cfg.experiment.max_iterations.unwrap_or(d.max_iterations),
    }
}

fn alpha_dir(alpha: f64) -> String {
    format!("alpha_{}", fmt_f64(alpha))
}

/// Runs the configured experiment; outputs are filtered by the requested formats.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<Output>> {
    let params = cfg.params()?;
    let outputs = match cfg.kind() {
        ExperimentKind::Field => field(cfg, params)?,
        ExperimentKind::Stationary => single_stationary(cfg, params)?,
        ExperimentKind::SweepAlpha => sweep(cfg, params, false)?,
        ExperimentKind::Figure2 => sweep(cfg, params, true)?,
        ExperimentKind::InformedMap => informed_map(params)?,
        ExperimentKind::KProfile => k_profile(cfg, params)?,
        ExperimentKind::S1Compare => s1_compare(cfg, params)?,
        ExperimentKind::Montecarlo => montecarlo(cfg, params)?,
    };
    let formats = cfg.formats();
    Ok(outputs
        .into_iter()
        .filter(|o| formats.contains(&o.format))
        .collect())
}

fn field(cfg: &ExperimentConfig, params: GameParams) -> Result<Vec<Output>> {
    let land = FitnessLandscape::new(params)?;
    let flow = flow_field(&land);
    let fixed = find_fixed_points(&land, cfg.grid_resolution())?;
    let title = format!("replicator field, alpha = {}", fmt_f64(land.params().alpha));
    Ok(vec![
        Output::text("field.csv", Format::Csv, flow.to_csv()),
        Output::json(
            "fixed_points.json",
            &json!({ "alpha": land.params().alpha, "fixed_points": fixed }),
        )?,
        Output::text(
            "field.svg",
            Format::Svg,
            svg::square(&flow, &fixed, land.population(), &title),
        ),
    ])
}

struct Panel {
    alpha: f64,
    result: StationaryResult,
    outputs: Vec<Output>,
    fixed: Vec<FixedPoint>,
}

fn panel(cfg: &ExperimentConfig, params: GameParams, prefix: &str, with_field: bool) -> Result<Panel> {
    let alpha = params.alpha;
    let land = FitnessLandscape::new(params)?;
    let model = MarkovModel::from_landscape(&land)?;
    let result = stationary(&model, &stationary_options(cfg))?;
    let gradient = selection_gradient(&land);
    let title = format!("stationary distribution, alpha = {}", fmt_f64(alpha));
    let mut outputs = vec![
        Output::text(
            format!("{prefix}stationary.csv"),
            Format::Csv,
            stationary_csv(land.space(), &result.pi),
        ),
        Output::text(format!("{prefix}gradient.csv"), Format::Csv, gradient.to_csv()),
        Output::text(
            format!("{prefix}stationary.svg"),
            Format::Svg,
            svg::simplex(land.space(), &result.pi, &gradient, &title),
        ),
    ];
    let fixed = if with_field {
        let flow = flow_field(&land);
        let fixed = find_fixed_points(&land, cfg.grid_resolution())?;
        let title = format!("replicator field, alpha = {}", fmt_f64(alpha));
        outputs.push(Output::text(format!("{prefix}field.csv"), Format::Csv, flow.to_csv()));
        outputs.push(Output::text(
            format!("{prefix}field.svg"),
            Format::Svg,
            svg::square(&flow, &fixed, land.population(), &title),
        ));
        fixed
    } else {
        Vec::new()
    };
    Ok(Panel {
        alpha,
        result,
        outputs,
        fixed,
    })
}

#[derive(Serialize)]
struct StationaryReport<'a> {
    alpha: f64,
    #[serde(flatten)]
    summary: &'a StationarySummary,
    residual: f64,
    iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    fixed_points: Option<&'a [FixedPoint]>,
}

fn report(p: &Panel, with_field: bool) -> StationaryReport<'_> {
    StationaryReport {
        alpha: p.alpha,
        summary: &p.result.summary,
        residual: p.result.residual,
        iterations: p.result.iterations,
        fixed_points: with_field.then_some(p.fixed.as_slice()),
    }
}

fn single_stationary(cfg: &ExperimentConfig, params: GameParams) -> Result<Vec<Output>> {
    let p = panel(cfg, params, "", false)?;
    let summary = Output::json("summary.json", &report(&p, false))?;
    let mut out = p.outputs;
    out.push(summary);
    Ok(out)
}

fn non_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] >= w[0])
}

fn sweep(cfg: &ExperimentConfig, params: GameParams, figure: bool) -> Result<Vec<Output>> {
    let alphas = cfg.values();
    if alphas.is_empty() {
        return Err(Error::Config("`values` must list at least one alpha".into()));
    }
    let panels: Vec<Panel> = alphas
        .par_iter()
        .map(|&a| {
            let prefix = format!("{}/", alpha_dir(a));
            panel(cfg, params.clone().with_alpha(a), &prefix, figure)
        })
        .collect::<Result<_>>()?;
    let mean_x: Vec<f64> = panels.iter().map(|p| p.result.summary.mean_x).collect();
    let mean_y: Vec<f64> = panels.iter().map(|p| p.result.summary.mean_y).collect();
    let summary = json!({
        "population": params.population,
        "mutation_form": params.mutation_form,
        "panels": panels.iter().map(|p| report(p, figure)).collect::<Vec<_>>(),
        "mean_x_non_decreasing": non_decreasing(&mean_x),
        "mean_y_non_decreasing": non_decreasing(&mean_y),
    });
    let mut out = Vec::new();
    if figure {
        out.push(Output::text("group_size.csv", Format::Csv, group_size_table(&params, &alphas)));
    }
    for p in panels {
        out.extend(p.outputs);
    }
    out.push(Output::json("sweep.json", &summary)?);
    Ok(out)
}

fn group_size_table(params: &GameParams, alphas: &[f64]) -> String {
    let mut out = String::from("i_M,y");
    for &a in alphas {
        out.push_str(&format!(",N_{}", alpha_dir(a)));
    }
    out.push('\n');
    let z = params.population;
    for m in 0..=z {
        let mut row = vec![m.to_string(), fmt_f64(m as f64 / z as f64)];
        for &a in alphas {
            row.push(group_size(&params.clone().with_alpha(a), m).to_string());
        }
        csv_line(&mut out, &row);
    }
    out
}

fn informed_map(params: GameParams) -> Result<Vec<Output>> {
    let land = FitnessLandscape::new(params)?;
    let p = land.params();
    let mut csv = String::from(
        "i_C,i_D,x,y,N,C_others,dPi_CD,dPi_DO,dPi_CO,signs,label,x_dot_informed,y_dot_informed\n",
    );
    let mut counts = std::collections::BTreeMap::<String, usize>::new();
    for s in land.space().iter().filter(|s| s.is_interior()) {
        let n = land.group(s.members());
        let x = s.x().expect("members");
        // Expected contribution of the other N−1 group members.
        let others = p.cost * x * (n - 1) as f64;
        let class = classify_state(p, others, n)?;
        let gains = crate::informed::marginal_gains(p, others, n)?;
        let v = informed_field(&land, &s);
        let label = class.label.map(|l| l.letter().to_string()).unwrap_or_default();
        *counts
            .entry(format!("{}{}", class.triple(), if label.is_empty() { "" } else { ":" }) + &label)
            .or_default() += 1;
        csv_line(
            &mut csv,
            &[
                s.cooperators.to_string(),
                s.defectors.to_string(),
                fmt_f64(x),
                fmt_f64(s.y()),
                n.to_string(),
                fmt_f64(others),
                fmt_f64(gains.coop_defect),
                fmt_f64(gains.defect_outside),
                fmt_f64(gains.coop_outside),
                class.triple(),
                label,
                fmt_f64(v.x_dot),
                fmt_f64(v.y_dot),
            ],
        );
    }
    Ok(vec![
        Output::text("informed.csv", Format::Csv, csv),
        Output::json("informed_summary.json", &json!({ "patterns": counts }))?,
    ])
}

fn k_profile(cfg: &ExperimentConfig, params: GameParams) -> Result<Vec<Output>> {
    let z = params.population;
    let y = cfg.experiment.y.unwrap_or(0.5);
    if !(y > 0.0 && y < 1.0) {
        return Err(Error::Config(format!("`y` must lie in (0, 1), got {y}")));
    }
    let members = ((y * z as f64).round() as usize).clamp(2, z - 1);
    let mut csv = String::from("alpha,i_C,i_D,x,y,return_term,K_exact,K_dropped\n");
    let mut rows = Vec::new();
    for a in cfg.values() {
        let land = FitnessLandscape::new(params.clone().with_alpha(a))?;
        let shares = effective_shares(land.params(), land.group(members));
        let mut mid = None;
        for c in 1..members {
            let s = land.state(c, members - c)?;
            let k = k_decomposition(&land, &s).expect("interior");
            let r = mean_return(&land, &s).expect("two members") * shares.total();
            if 2 * c == members || (mid.is_none() && 2 * c > members) {
                mid = Some((c, k.k_exact, r));
            }
            csv_line(
                &mut csv,
                &[
                    fmt_f64(a),
                    c.to_string(),
                    (members - c).to_string(),
                    fmt_f64(s.x().expect("members")),
                    fmt_f64(s.y()),
                    fmt_f64(r),
                    fmt_f64(k.k_exact),
                    fmt_f64(k.k_dropped),
                ],
            );
        }
        let (c, k, r) = mid.expect("row has interior states");
        rows.push(json!({
            "alpha": a, "group": land.group(members), "i_C": c,
            "K_exact": k, "return_term": r,
        }));
    }
    Ok(vec![
        Output::text("k_profile.csv", Format::Csv, csv),
        Output::json("k_profile.json", &json!({ "members": members, "midpoints": rows }))?,
    ])
}

fn s1_compare(cfg: &ExperimentConfig, params: GameParams) -> Result<Vec<Output>> {
    let target = cfg.experiment.group_target.unwrap_or(20);
    let populations = cfg.experiment.populations.clone().unwrap_or_else(|| vec![60, 100]);
    let mut csv = String::from("Z,alpha,i_M,N,i_C,i_D,x,uninformed,informed,K_exact,K_dropped\n");
    let mut series = Vec::new();
    for &z in &populations {
        let mut gaps = Vec::new();
        for a in cfg.values() {
            let mut p = params.clone().with_alpha(a);
            let scale = |v: f64| v * params.population as f64 / z as f64;
            // Population-relative defaults follow the new Z.
            p.min_group_fraction = scale(params.min_group_fraction);
            p.mu = scale(params.mu);
            p.population = z;
            let land = FitnessLandscape::new(p)?;
            let members = members_for_group(&land, target).ok_or_else(|| {
                Error::InvalidArgument(format!("no membership reaches N = {target} at Z = {z}, alpha = {a}"))
            })?;
            let slice = information_slice(&land, members)?;
            let gap = slice
                .iter()
                .map(|s| (s.informed - s.uninformed).abs())
                .fold(0.0f64, f64::max);
            for s in &slice {
                csv_line(
                    &mut csv,
                    &[
                        z.to_string(),
                        fmt_f64(a),
                        members.to_string(),
                        land.group(members).to_string(),
                        s.cooperators.to_string(),
                        s.defectors.to_string(),
                        fmt_f64(s.x),
                        fmt_f64(s.uninformed),
                        fmt_f64(s.informed),
                        fmt_f64(s.k_exact),
                        fmt_f64(s.k_dropped),
                    ],
                );
            }
            gaps.push(json!({ "alpha": a, "members": members, "group": land.group(members), "max_gap": gap }));
        }
        let values: Vec<f64> = gaps.iter().map(|g| g["max_gap"].as_f64().unwrap_or(f64::NAN)).collect();
        series.push(json!({
            "population": z,
            "gaps": gaps,
            "decreasing": values.windows(2).all(|w| w[1] < w[0]),
        }));
    }
    Ok(vec![
        Output::text("s1.csv", Format::Csv, csv),
        Output::json("s1.json", &json!({ "group_target": target, "series": series }))?,
    ])
}

fn montecarlo(cfg: &ExperimentConfig, params: GameParams) -> Result<Vec<Output>> {
    let land = FitnessLandscape::new(params)?;
    let steps = cfg.experiment.steps.unwrap_or(1_000_000);
    if steps == 0 {
        return Err(Error::Config("`steps` must be at least 1".into()));
    }
    let start = cfg.experiment.start.unwrap_or([0, 0]);
    let opts = MonteCarloOptions {
        steps,
        seed: cfg.seed(),
        start: (start[0], start[1]),
        stride: cfg.experiment.stride.unwrap_or((steps / 1000).max(1)),
    };
    let mc = monte_carlo(&land, &opts)?;
    let model = MarkovModel::from_landscape(&land)?;
    let tv = stationary(&model, &stationary_options(cfg))
        .map(|r| total_variation(&r.pi, &mc.occupancy))
        .ok();
    let mut occ = String::from("i_C,i_D,x,y,occupancy\n");
    for (s, &p) in land.space().iter().zip(&mc.occupancy) {
        csv_line(
            &mut occ,
            &[
                s.cooperators.to_string(),
                s.defectors.to_string(),
                fmt_f64(s.x().unwrap_or(f64::NAN)),
                fmt_f64(s.y()),
                fmt_f64(p),
            ],
        );
    }
    let mut traj = String::from("step,i_C,i_D\n");
    for (k, &(c, d)) in mc.trajectory.iter().enumerate() {
        csv_line(
            &mut traj,
            &[(k as u64 * opts.stride).to_string(), c.to_string(), d.to_string()],
        );
    }
    Ok(vec![
        Output::text("occupancy.csv", Format::Csv, occ),
        Output::text("trajectory.csv", Format::Csv, traj),
        Output::json(
            "montecarlo.json",
            &json!({
                "steps": steps,
                "seed": opts.seed,
                "start": start,
                "summary": summarize(land.space(), &mc.occupancy),
                "tv_to_stationary": tv,
            }),
        )?,
    ])
}
