//! Replicator dynamics of uninformed players on the `(x, y)` square, where
//! `y = i_M/Z` is the member fraction and `x = i_C/i_M` the cooperator
//! fraction among members:
//!
//! ```text
//! ẋ = x(1−x)(f_C − f_D)
//! ẏ = y(1−y)(x f_C + (1−x) f_D − f_O)
//! ```
//!
//! The cooperation component decomposes exactly as
//! `ẋ = x(1−x) c (⟨R⟩(ε₁+ε₂) − 1 − K)` with `K = A/(2c)`,
//! `A = f_C(i_C+1, i_D−1) − f_C(i_C, i_D) + f_D(i_C, i_D) − f_D(i_C−1, i_D+1)`.
//! The remaining `(1−y)(B − C − D)/(2c)` term, with
//! `B = f_O(i_C, i_D−1) − f_O(i_C−1, i_D)`,
//! `C = f_C(i_C+1, i_D−1) − f_C(i_C+1, i_D)` and
//! `D = f_D(i_C, i_D+1) − f_D(i_C−1, i_D+1)`,
//! is what separates informed from uninformed players beyond `K`; it is
//! reported as `k_dropped`. The full informed/uninformed gap in `ẋ` is
//! `x(1−x) c (K + k_dropped)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{effective_shares, GroupPayoffs, PopulationState};
use crate::informed::informed_field;
use crate::io::{csv_line, fmt_f64};
use crate::sampling::{member_row, FitnessLandscape, FitnessTriple};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FieldVector {
    pub x_dot: f64,
    pub y_dot: f64,
}

impl FieldVector {
    pub fn norm(&self) -> f64 {
        self.x_dot.hypot(self.y_dot)
    }
}

fn field_from(x: f64, y: f64, f: &FitnessTriple) -> FieldVector {
    FieldVector {
        x_dot: x * (1.0 - x) * (f.cooperator - f.defector),
        y_dot: y * (1.0 - y) * (x * f.cooperator + (1.0 - x) * f.defector - f.outsider),
    }
}

/// Uninformed replicator field at an integer composition. Zero without members.
pub fn replicator_field(land: &FitnessLandscape, state: &PopulationState) -> FieldVector {
    let Some(x) = state.x() else {
        return FieldVector::default();
    };
    let y = state.y();
    let mut v = field_from(x, y, &land.fitness_of(state));
    // Exact zeros where the logistic prefactors vanish.
    if state.cooperators == 0 || state.defectors == 0 {
        v.x_dot = 0.0;
    }
    if state.outsiders() == 0 {
        v.y_dot = 0.0;
    }
    v
}

/// `⟨R⟩ = Σ_k ½[P(k; i_M−1, N−1, i_C) + P(k; i_M−1, N−1, i_C−1)] R(kc)`.
///
/// On the edges `x ∈ {0, 1}` only the existing composition row is used.
/// `None` below two members.
pub fn mean_return(land: &FitnessLandscape, state: &PopulationState) -> Option<f64> {
    let members = state.members();
    if members < 2 {
        return None;
    }
    let group = land.group(members);
    let payoffs = GroupPayoffs::new(land.params(), group);
    let mut total = 0.0;
    let mut rows = 0;
    if state.defectors >= 1 {
        total += member_row(members, group, state.cooperators).expect(|k| payoffs.marginal_return(k));
        rows += 1;
    }
    if state.cooperators >= 1 {
        total +=
            member_row(members, group, state.cooperators - 1).expect(|k| payoffs.marginal_return(k));
        rows += 1;
    }
    Some(total / rows as f64)
}

/// `⟨b⟩ = x Σ_k P(k; i_M−1, N−1, i_C−1) b(kc+c) + (1−x) Σ_k P(k; i_M−1, N−1, i_C) b(kc)`.
pub fn mean_benefit(land: &FitnessLandscape, state: &PopulationState) -> Option<f64> {
    let members = state.members();
    if members < 2 {
        return None;
    }
    let x = state.x()?;
    let group = land.group(members);
    let payoffs = GroupPayoffs::new(land.params(), group);
    let mut total = 0.0;
    if state.cooperators >= 1 {
        total += x
            * member_row(members, group, state.cooperators - 1)
                .expect(|k| payoffs.relative_benefit(k + 1));
    }
    if state.defectors >= 1 {
        total += (1.0 - x)
            * member_row(members, group, state.cooperators).expect(|k| payoffs.relative_benefit(k));
    }
    Some(total)
}

/// Information-cost decomposition at one interior composition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KDecomposition {
    /// `A`, `B`, `C`, `D` in payoff units.
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    /// `A / (2c)`: closes `ẋ = x(1−x)c(⟨R⟩ε − 1 − K)`.
    pub k_exact: f64,
    /// `(1−y)(B − C − D)/(2c)`.
    pub k_dropped: f64,
}

impl KDecomposition {
    /// `K_exact + K_dropped`: the informed/uninformed gap in `ẋ/(x(1−x)c)`.
    pub fn information_gap(&self) -> f64 {
        self.k_exact + self.k_dropped
    }
}

/// `None` outside the interior (`i_C, i_D, i_O ≥ 1`), where some shifted
/// composition leaves the simplex.
pub fn k_decomposition(land: &FitnessLandscape, state: &PopulationState) -> Option<KDecomposition> {
    if !state.is_interior() {
        return None;
    }
    let (c, d) = (state.cooperators as isize, state.defectors as isize);
    let f = |dc: isize, dd: isize| land.fitness_shifted(c + dc, d + dd);
    let here = land.fitness_of(state);
    let a = f(1, -1)?.cooperator - here.cooperator + here.defector - f(-1, 1)?.defector;
    let b = f(0, -1)?.outsider - f(-1, 0)?.outsider;
    let c_term = f(1, -1)?.cooperator - f(1, 0)?.cooperator;
    let d_term = f(0, 1)?.defector - f(-1, 1)?.defector;
    let cost = land.params().cost;
    let y = state.y();
    Some(KDecomposition {
        a,
        b,
        c: c_term,
        d: d_term,
        k_exact: a / (2.0 * cost),
        k_dropped: (1.0 - y) * (b - c_term - d_term) / (2.0 * cost),
    })
}

/// `k_exact` alongside its components; errors outside the interior.
pub fn k_exact(land: &FitnessLandscape, state: &PopulationState) -> Result<KDecomposition> {
    k_decomposition(land, state).ok_or_else(|| {
        Error::InvalidState(format!(
            "K is undefined at boundary composition (i_C={}, i_D={}, i_O={})",
            state.cooperators,
            state.defectors,
            state.outsiders()
        ))
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowPoint {
    pub cooperators: usize,
    pub defectors: usize,
    pub x: f64,
    pub y: f64,
    pub x_dot: f64,
    pub y_dot: f64,
    pub mean_return: f64,
    pub mean_benefit: f64,
    pub k_exact: f64,
    pub k_dropped: f64,
    /// `ε₁ + ε₂` at this composition's coalition size.
    pub shares_total: f64,
}

/// Deterministic field with its decomposition over all interior compositions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowField {
    pub points: Vec<FlowPoint>,
}

pub fn flow_field(land: &FitnessLandscape) -> FlowField {
    let states: Vec<PopulationState> = land.space().iter().filter(|s| s.is_interior()).collect();
    let points = states
        .par_iter()
        .map(|s| {
            let v = replicator_field(land, s);
            let k = k_decomposition(land, s).expect("interior");
            FlowPoint {
                cooperators: s.cooperators,
                defectors: s.defectors,
                x: s.x().expect("members"),
                y: s.y(),
                x_dot: v.x_dot,
                y_dot: v.y_dot,
                mean_return: mean_return(land, s).expect("two members"),
                mean_benefit: mean_benefit(land, s).expect("two members"),
                k_exact: k.k_exact,
                k_dropped: k.k_dropped,
                shares_total: effective_shares(land.params(), land.group(s.members())).total(),
            }
        })
        .collect();
    FlowField { points }
}

impl FlowField {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i_C,i_D,x,y,x_dot,y_dot,mean_R,mean_b,K_exact,K_dropped\n");
        for p in &self.points {
            csv_line(
                &mut out,
                &[
                    p.cooperators.to_string(),
                    p.defectors.to_string(),
                    fmt_f64(p.x),
                    fmt_f64(p.y),
                    fmt_f64(p.x_dot),
                    fmt_f64(p.y_dot),
                    fmt_f64(p.mean_return),
                    fmt_f64(p.mean_benefit),
                    fmt_f64(p.k_exact),
                    fmt_f64(p.k_dropped),
                ],
            );
        }
        out
    }
}

/// Smallest member count whose coalition size reaches `target`, keeping at
/// least one outsider.
pub fn members_for_group(land: &FitnessLandscape, target: usize) -> Option<usize> {
    (2..land.population()).find(|&m| land.group(m) >= target)
}

/// One composition of a fixed-membership slice, comparing the cooperation
/// drive `ẋ/(x(1−x))` of uninformed and informed players.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlicePoint {
    pub cooperators: usize,
    pub defectors: usize,
    pub x: f64,
    /// `f_C − f_D`.
    pub uninformed: f64,
    /// Informed `ẋ / (x(1−x))`.
    pub informed: f64,
    pub k_exact: f64,
    pub k_dropped: f64,
}

/// All interior compositions with `members` coalition members.
pub fn information_slice(land: &FitnessLandscape, members: usize) -> Result<Vec<SlicePoint>> {
    if members < 2 || members >= land.population() {
        return Err(Error::InvalidArgument(format!(
            "slice needs 2 <= i_M < Z, got i_M = {members}"
        )));
    }
    Ok((1..members)
        .map(|c| {
            let s = land.state(c, members - c).expect("inside the simplex");
            let x = s.x().expect("members");
            let f = land.fitness_of(&s);
            let k = k_decomposition(land, &s).expect("interior");
            SlicePoint {
                cooperators: c,
                defectors: members - c,
                x,
                uninformed: f.cooperator - f.defector,
                informed: informed_field(land, &s).x_dot / (x * (1.0 - x)),
                k_exact: k.k_exact,
                k_dropped: k.k_dropped,
            }
        })
        .collect())
}

/// Continuous extension of the field to the open unit square: fitness values
/// are interpolated bilinearly on the integer lattice of `(i_C, i_D)` at
/// `i_C = xyZ`, `i_D = (1−x)yZ`. Defined only where every lattice corner with
/// nonzero weight has at least one cooperator and one defector.
#[derive(Clone, Copy, Debug)]
pub struct ContinuousField<'a> {
    land: &'a FitnessLandscape,
}

impl<'a> ContinuousField<'a> {
    pub fn new(land: &'a FitnessLandscape) -> Self {
        ContinuousField { land }
    }

    fn corner(&self, c: usize, d: usize) -> Option<FitnessTriple> {
        (c >= 1 && d >= 1 && c + d <= self.land.population()).then(|| self.land.fitness(c, d))
    }

    pub fn fitness(&self, x: f64, y: f64) -> Option<FitnessTriple> {
        if !(x > 0.0 && x < 1.0 && y > 0.0 && y < 1.0) {
            return None;
        }
        let members = y * self.land.population() as f64;
        // Snap round-off so integer compositions hit their own lattice point.
        let snap = |v: f64| if (v - v.round()).abs() < 1e-9 { v.round() } else { v };
        let (ic, id) = (snap(x * members), snap((1.0 - x) * members));
        let (c0, d0) = (ic.floor(), id.floor());
        let (s, t) = (ic - c0, id - d0);
        let (c0, d0) = (c0 as usize, d0 as usize);
        let lower = |d: usize| -> Option<FitnessTriple> {
            let a = self.corner(c0, d)?;
            if s == 0.0 {
                return Some(a);
            }
            Some(a.lerp(&self.corner(c0 + 1, d)?, s))
        };
        let lo = lower(d0)?;
        if t == 0.0 {
            return Some(lo);
        }
        Some(lo.lerp(&lower(d0 + 1)?, t))
    }

    pub fn eval(&self, x: f64, y: f64) -> Option<FieldVector> {
        self.fitness(x, y).map(|f| field_from(x, y, &f))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stability {
    StableNode,
    StableSpiral,
    UnstableNode,
    UnstableSpiral,
    Saddle,
    Degenerate,
}

impl Stability {
    pub fn is_spiral(self) -> bool {
        matches!(self, Stability::StableSpiral | Stability::UnstableSpiral)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub x: f64,
    pub y: f64,
    /// `[[∂ẋ/∂x, ∂ẋ/∂y], [∂ẏ/∂x, ∂ẏ/∂y]]`.
    pub jacobian: [[f64; 2]; 2],
    pub eigenvalues: [Eigenvalue; 2],
    pub stability: Stability,
    pub residual: f64,
}

pub fn eigenvalues_2x2(j: &[[f64; 2]; 2]) -> [Eigenvalue; 2] {
    let tr = j[0][0] + j[1][1];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let disc = tr * tr - 4.0 * det;
    if disc >= 0.0 {
        let r = disc.sqrt();
        [
            Eigenvalue {
                re: (tr + r) / 2.0,
                im: 0.0,
            },
            Eigenvalue {
                re: (tr - r) / 2.0,
                im: 0.0,
            },
        ]
    } else {
        let i = (-disc).sqrt() / 2.0;
        [
            Eigenvalue { re: tr / 2.0, im: i },
            Eigenvalue {
                re: tr / 2.0,
                im: -i,
            },
        ]
    }
}

pub fn classify_jacobian(j: &[[f64; 2]; 2]) -> Stability {
    let tr = j[0][0] + j[1][1];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let scale = j.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let tiny = 1e-12 * scale.max(f64::MIN_POSITIVE);
    if det < -tiny {
        return Stability::Saddle;
    }
    if det.abs() <= tiny * scale || tr.abs() <= tiny {
        return Stability::Degenerate;
    }
    let spiral = tr * tr - 4.0 * det < 0.0;
    match (spiral, tr < 0.0) {
        (true, true) => Stability::StableSpiral,
        (true, false) => Stability::UnstableSpiral,
        (false, true) => Stability::StableNode,
        (false, false) => Stability::UnstableNode,
    }
}

const RESIDUAL_TOL: f64 = 1e-8;

fn residual(v: &FieldVector) -> f64 {
    v.x_dot.abs().max(v.y_dot.abs())
}

fn newton(field: &ContinuousField, mut x: f64, mut y: f64) -> Option<(f64, f64, f64)> {
    let mut v = field.eval(x, y)?;
    let mut r = residual(&v);
    for _ in 0..100 {
        if r < 1e-13 {
            break;
        }
        let h = 1e-7;
        let fx = field.eval(x + h, y).or_else(|| field.eval(x - h, y).map(|w| mirror(&v, &w)))?;
        let fy = field.eval(x, y + h).or_else(|| field.eval(x, y - h).map(|w| mirror(&v, &w)))?;
        let j = [
            [(fx.x_dot - v.x_dot) / h, (fy.x_dot - v.x_dot) / h],
            [(fx.y_dot - v.y_dot) / h, (fy.y_dot - v.y_dot) / h],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let dx = (j[1][1] * v.x_dot - j[0][1] * v.y_dot) / det;
        let dy = (j[0][0] * v.y_dot - j[1][0] * v.x_dot) / det;
        let mut step = 1.0;
        let mut moved = false;
        for _ in 0..40 {
            let (nx, ny) = (x - step * dx, y - step * dy);
            if let Some(nv) = field.eval(nx, ny) {
                let nr = residual(&nv);
                if nr < r {
                    x = nx;
                    y = ny;
                    v = nv;
                    r = nr;
                    moved = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    (r < RESIDUAL_TOL).then_some((x, y, r))
}

// Forward difference from a backward sample: f(p+h) ≈ 2 f(p) − f(p−h).
fn mirror(at: &FieldVector, back: &FieldVector) -> FieldVector {
    FieldVector {
        x_dot: 2.0 * at.x_dot - back.x_dot,
        y_dot: 2.0 * at.y_dot - back.y_dot,
    }
}

/// Central-difference Jacobian with one composition step per coordinate
/// (`Δy = 1/Z`, `Δx = 1/i_M`), shrunk when the stencil leaves the domain.
pub fn jacobian_at(field: &ContinuousField, x: f64, y: f64) -> Option<[[f64; 2]; 2]> {
    let z = field.land.population() as f64;
    let mut hx = 1.0 / (y * z).max(1.0);
    let mut hy = 1.0 / z;
    for _ in 0..20 {
        let samples = (
            field.eval(x + hx, y),
            field.eval(x - hx, y),
            field.eval(x, y + hy),
            field.eval(x, y - hy),
        );
        if let (Some(xp), Some(xm), Some(yp), Some(ym)) = samples {
            return Some([
                [
                    (xp.x_dot - xm.x_dot) / (2.0 * hx),
                    (yp.x_dot - ym.x_dot) / (2.0 * hy),
                ],
                [
                    (xp.y_dot - xm.y_dot) / (2.0 * hx),
                    (yp.y_dot - ym.y_dot) / (2.0 * hy),
                ],
            ]);
        }
        hx *= 0.5;
        hy *= 0.5;
    }
    None
}

/// Locates interior zeros of the continuous field.
///
/// Cells of a `grid_resolution × grid_resolution` scan where both components
/// change sign seed a damped Newton refinement; points are reported once,
/// ordered by `(y, x)`.
pub fn find_fixed_points(land: &FitnessLandscape, grid_resolution: usize) -> Result<Vec<FixedPoint>> {
    if grid_resolution < 20 {
        return Err(Error::InvalidArgument(format!(
            "grid_resolution must be at least 20, got {grid_resolution}"
        )));
    }
    let field = ContinuousField::new(land);
    let g = grid_resolution;
    let h = 1.0 / g as f64;
    let nodes: Vec<Option<FieldVector>> = (0..=g)
        .flat_map(|j| (0..=g).map(move |i| (i, j)))
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&(i, j)| field.eval(i as f64 * h, j as f64 * h))
        .collect();
    let node = |i: usize, j: usize| nodes[j * (g + 1) + i];
    let changes = |vals: &[f64]| {
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        lo <= 0.0 && hi >= 0.0
    };
    let mut seeds = Vec::new();
    for j in 0..g {
        for i in 0..g {
            let corners = [node(i, j), node(i + 1, j), node(i, j + 1), node(i + 1, j + 1)];
            if corners.iter().any(|c| c.is_none()) {
                continue;
            }
            let c: Vec<FieldVector> = corners.iter().map(|c| c.unwrap()).collect();
            let xs: Vec<f64> = c.iter().map(|v| v.x_dot).collect();
            let ys: Vec<f64> = c.iter().map(|v| v.y_dot).collect();
            if changes(&xs) && changes(&ys) {
                seeds.push(((i as f64 + 0.5) * h, (j as f64 + 0.5) * h));
            }
        }
    }
    let refined: Vec<Option<(f64, f64, f64)>> = seeds
        .par_iter()
        .map(|&(x, y)| {
            newton(&field, x, y).filter(|&(nx, ny, _)| (nx - x).abs() <= 1.5 * h && (ny - y).abs() <= 1.5 * h)
        })
        .collect();
    let mut points: Vec<FixedPoint> = Vec::new();
    for (x, y, r) in refined.into_iter().flatten() {
        if points
            .iter()
            .any(|p| (p.x - x).abs() < 1e-6 && (p.y - y).abs() < 1e-6)
        {
            continue;
        }
        let Some(jac) = jacobian_at(&field, x, y) else {
            continue;
        };
        points.push(FixedPoint {
            x,
            y,
            jacobian: jac,
            eigenvalues: eigenvalues_2x2(&jac),
            stability: classify_jacobian(&jac),
            residual: r,
        });
    }
    points.sort_by(|a, b| a.y.total_cmp(&b.y).then(a.x.total_cmp(&b.x)));
    Ok(points)
}
