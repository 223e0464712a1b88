//! Concrete systems with known long-time behavior: uncoupled boxes, the wedge
//! with its closed-form Poincaré map, the drifting equilateral triangle and a
//! handful of crawler gaits.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::crawler::{self, Gait};
use crate::polyhedra::{FrozenPolyhedron, MovingPolyhedron, Tolerances};
use crate::signals::PeriodicSignal;
use crate::sweeping::{self, SweepingProblem};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum System {
    Sweeping(SweepingProblem),
    Crawler(Gait),
}

/// How a reference value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    /// Holds for any valid input.
    Trivial,
    /// Closed form for the continuous problem.
    Analytic,
    /// Computed from an analytic ingredient (composition, derivative, oracle).
    Derived,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Expected {
    /// Periodic from window `max_period` on, at the latest.
    FiniteTime { max_period: usize },
    Geometric { ratio: f64, tol: f64 },
    Velocity { v0: f64, tol: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReferenceMap {
    /// [`wedge_poincare`] on `z1`.
    Wedge { alpha: f64, period: f64 },
    /// [`edge_map`] composed three times on the edge coordinate of RP.
    TriangleEdge { side: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub expected: Expected,
    pub basis: Basis,
    pub map: Option<ReferenceMap>,
    pub fixed_point: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub system: System,
    pub periods: usize,
    pub steps_per_period: usize,
    pub start: Vec<f64>,
    pub reference: Option<Reference>,
}

impl Scenario {
    pub fn problem(&self) -> Option<&SweepingProblem> {
        match &self.system {
            System::Sweeping(p) => Some(p),
            System::Crawler(_) => None,
        }
    }

    pub fn gait(&self) -> Option<&Gait> {
        match &self.system {
            System::Crawler(g) => Some(g),
            System::Sweeping(_) => None,
        }
    }

    pub fn period(&self) -> f64 {
        match &self.system {
            System::Sweeping(p) => p.period(),
            System::Crawler(g) => g.period(),
        }
    }
}

/// Product of intervals `a_i(t) ≤ z_i ≤ b_i(t)`; constraint `2i` is the upper
/// bound of `z_i`, `2i + 1` the lower one.
pub fn ncell_scenario(lower: Vec<PeriodicSignal>, upper: Vec<PeriodicSignal>) -> Result<Scenario> {
    let n = lower.len();
    if n == 0 || upper.len() != n {
        return Err(Error::InvalidScenario(format!(
            "{n} lower and {} upper bounds",
            upper.len()
        )));
    }
    let mut normals = Vec::with_capacity(2 * n);
    let mut offsets = Vec::with_capacity(2 * n);
    for (i, (a, b)) in lower.iter().zip(&upper).enumerate() {
        let width = PeriodicSignal::linear_combination(0.0, &[(1.0, b), (-1.0, a)])?;
        if width.min_value() < 0.0 {
            return Err(Error::InvalidScenario(format!("interval {i} is inverted")));
        }
        let mut up = vec![0.0; n];
        up[i] = 1.0;
        let mut down = vec![0.0; n];
        down[i] = -1.0;
        normals.push(up);
        normals.push(down);
        offsets.push(b.clone());
        offsets.push(PeriodicSignal::linear_combination(0.0, &[(-1.0, a)])?);
    }
    let start = lower.iter().zip(&upper).map(|(a, b)| 0.5 * (a.eval(0.0) + b.eval(0.0))).collect();
    Ok(Scenario {
        name: format!("ncell-{n}"),
        system: System::Sweeping(SweepingProblem::without_drift(MovingPolyhedron::new(
            normals, offsets,
        )?)),
        periods: 6,
        steps_per_period: 400,
        start,
        reference: Some(Reference {
            expected: Expected::FiniteTime { max_period: 1 },
            basis: Basis::Analytic,
            map: None,
            fixed_point: None,
        }),
    })
}

/// `C(t) = C_0 − (0, l(t))` with `C_0 = {0 ≤ z_2 ≤ α z_1, z_1 ≤ β}` and `l`
/// the zig-zag rising from 0 to `T/2` and back.
pub fn wedge_scenario(alpha: f64, beta: f64, period: f64) -> Result<Scenario> {
    if !(alpha > 0.0 && beta > 0.0 && period > 0.0) {
        return Err(Error::InvalidScenario("wedge parameters must be positive".into()));
    }
    let gamma = period / (2.0 * alpha);
    if 2.0 * beta <= period * alpha || beta <= gamma {
        return Err(Error::InvalidScenario(format!(
            "need 2β > Tα and β > T/(2α); got α = {alpha}, β = {beta}, T = {period}"
        )));
    }
    let lift = PeriodicSignal::triangle(period, 0.0, period / 2.0);
    let normals = vec![vec![0.0, -1.0], vec![-alpha, 1.0], vec![1.0, 0.0]];
    let offsets = vec![
        lift.clone(),
        PeriodicSignal::linear_combination(0.0, &[(-1.0, &lift)])?,
        PeriodicSignal::constant(period, beta),
    ];
    Ok(Scenario {
        name: "wedge".into(),
        system: System::Sweeping(SweepingProblem::without_drift(MovingPolyhedron::new(
            normals, offsets,
        )?)),
        periods: 60,
        steps_per_period: 2000,
        start: vec![0.5 * gamma, 0.0],
        reference: Some(Reference {
            expected: Expected::Geometric { ratio: 1.0 / (alpha * alpha + 1.0), tol: 0.05 },
            basis: Basis::Analytic,
            map: Some(ReferenceMap::Wedge { alpha, period }),
            fixed_point: Some(gamma),
        }),
    })
}

/// Period map of the wedge on the bottom edge.
pub fn wedge_poincare(alpha: f64, period: f64, z1: f64) -> f64 {
    let gamma = period / (2.0 * alpha);
    if z1 < gamma {
        (alpha * alpha * gamma + z1) / (alpha * alpha + 1.0)
    } else {
        z1
    }
}

/// Outward unit normals of PQ, QR and RP.
fn triangle_normals() -> [[f64; 2]; 3] {
    let c = libm::sqrt(3.0) / 2.0;
    [[0.0, -1.0], [c, 0.5], [-c, 0.5]]
}

/// Vertices `P = (0, 0)`, `Q = (s, 0)`, `R = (s/2, s√3/2)`.
pub fn triangle_vertices(side: f64) -> [[f64; 2]; 3] {
    [[0.0, 0.0], [side, 0.0], [0.5 * side, 0.5 * libm::sqrt(3.0) * side]]
}

pub fn triangle(side: f64) -> Result<FrozenPolyhedron> {
    let nu = triangle_normals();
    let offsets = vec![0.0, 0.5 * libm::sqrt(3.0) * side, 0.0];
    FrozenPolyhedron::new(nu.iter().map(|v| v.to_vec()).collect(), offsets)
}

/// Edge coordinate in `[0, 1]` measured from the edge's first vertex
/// (`edge` 0, 1, 2 for PQ, QR, RP).
pub fn edge_coordinate(side: f64, edge: usize, z: &[f64]) -> f64 {
    let v = triangle_vertices(side);
    let (a, b) = (v[edge % 3], v[(edge + 1) % 3]);
    ((z[0] - a[0]) * (b[0] - a[0]) + (z[1] - a[1]) * (b[1] - a[1])) / (side * side)
}

pub fn edge_map(z: f64) -> f64 {
    0.5 * (1.0 - z)
}

/// Steps used when checking that every start reaches the next edge in time.
const REACH_STEPS: usize = 300;

/// Fixed equilateral triangle with drift `α ν_i` on the `i`-th third of the
/// period, `ν_i` the outward normal of PQ, QR, RP in turn.
pub fn triangle_scenario(alpha: f64, period: f64, side: f64) -> Result<Scenario> {
    if !(alpha > 0.0 && period > 0.0 && side > 0.0) {
        return Err(Error::InvalidScenario("triangle parameters must be positive".into()));
    }
    let nu = triangle_normals();
    let third = period / 3.0;
    let drift = (0..2)
        .map(|c| {
            PeriodicSignal::piecewise_constant(
                period,
                vec![
                    (0.0, alpha * nu[0][c]),
                    (third, alpha * nu[1][c]),
                    (2.0 * third, alpha * nu[2][c]),
                ],
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let frozen = triangle(side)?;
    let set = MovingPolyhedron::new(
        frozen.normals().to_vec(),
        frozen.offsets().iter().map(|&c| PeriodicSignal::constant(period, c)).collect(),
    )?;
    let problem = SweepingProblem::new(set, Some(drift))?;
    check_reach(&problem, side)?;
    let v = triangle_vertices(side);
    Ok(Scenario {
        name: "triangle".into(),
        system: System::Sweeping(problem),
        periods: 12,
        steps_per_period: 3000,
        start: vec![0.5 * (v[2][0] + v[0][0]), 0.5 * (v[2][1] + v[0][1])],
        reference: Some(triangle_reference(side)),
    })
}

fn triangle_reference(side: f64) -> Reference {
    Reference {
        expected: Expected::Geometric { ratio: 0.125, tol: 0.02 },
        basis: Basis::Derived,
        map: Some(ReferenceMap::TriangleEdge { side }),
        fixed_point: Some(1.0 / 3.0),
    }
}

/// The same system seen from a frame moving with the drift:
/// `C(t) = PQR − F(t)`, `F(t) = ∫_0^t f`. States relate by `z = u + F(t)`.
pub fn triangle_moving_scenario(alpha: f64, period: f64, side: f64) -> Result<Scenario> {
    let base = triangle_scenario(alpha, period, side)?;
    let nu = triangle_normals();
    let frozen = triangle(side)?;
    let offsets = (0..3)
        .map(|i| {
            let points = (0..3)
                .map(|j| {
                    let f = triangle_shift(alpha, period, j as f64 * period / 3.0);
                    (j as f64 * period / 3.0, frozen.offsets()[i] - nu[i][0] * f[0] - nu[i][1] * f[1])
                })
                .collect();
            PeriodicSignal::piecewise_linear(period, points)
        })
        .collect::<Result<Vec<_>>>()?;
    let set = MovingPolyhedron::new(frozen.normals().to_vec(), offsets)?;
    Ok(Scenario {
        name: "triangle-moving".into(),
        system: System::Sweeping(SweepingProblem::without_drift(set)),
        ..base
    })
}

/// `F(t) = ∫_0^t f` for the triangle drift; zero at multiples of `T`.
pub fn triangle_shift(alpha: f64, period: f64, t: f64) -> [f64; 2] {
    let nu = triangle_normals();
    let third = period / 3.0;
    let s = t - libm::floor(t / period) * period;
    let mut f = [0.0, 0.0];
    for (i, n) in nu.iter().enumerate() {
        let dt = (s - i as f64 * third).clamp(0.0, third);
        f[0] += alpha * dt * n[0];
        f[1] += alpha * dt * n[1];
    }
    f
}

fn check_reach(problem: &SweepingProblem, side: f64) -> Result<()> {
    let tols = Tolerances::default();
    let tol = 1e-9 * side.max(1.0);
    let frozen = triangle(side)?;
    for start in triangle_vertices(side) {
        let traj = sweeping::simulate(problem, &start, 0.0, 1, REACH_STEPS, &tols)?;
        for edge in 0..3 {
            let z = &traj.states()[(edge + 1) * REACH_STEPS / 3];
            if frozen.slack(edge, z) > tol {
                return Err(Error::EdgeNotReached { start, edge });
            }
        }
    }
    Ok(())
}

/// Edge coordinate on RP, measured from R, at every period boundary.
pub fn triangle_edge_samples(traj: &sweeping::Trajectory, side: f64) -> Vec<f64> {
    sweeping::poincare_samples(traj).iter().map(|z| edge_coordinate(side, 2, z)).collect()
}

/// A vertex of a polygon whose interior angle is below 90°.
#[derive(Debug, Clone, PartialEq)]
pub struct AcuteCorner {
    pub vertex: Vec<f64>,
    pub constraints: (usize, usize),
    pub angle: f64,
}

/// Vertices of a 2D polyhedron with acute interior angle; the interior angle
/// is `π` minus the angle between the two edge normals.
pub fn acute_corner_note(poly: &FrozenPolyhedron, tol: f64) -> Result<Vec<AcuteCorner>> {
    if poly.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: poly.dim() });
    }
    let unit = |i: usize| {
        let b = &poly.normals()[i];
        let r = libm::hypot(b[0], b[1]);
        [b[0] / r, b[1] / r]
    };
    let mut out = Vec::new();
    for v in poly.vertices(tol) {
        let active = v.active.to_vec();
        let mut widest: Option<(f64, usize, usize)> = None;
        for (a, &i) in active.iter().enumerate() {
            for &j in &active[a + 1..] {
                let (bi, bj) = (unit(i), unit(j));
                let c = bi[0] * bj[0] + bi[1] * bj[1];
                if widest.is_none_or(|w| c < w.0) {
                    widest = Some((c, i, j));
                }
            }
        }
        if let Some((c, i, j)) = widest {
            if c < -tol {
                out.push(AcuteCorner {
                    vertex: v.point,
                    constraints: (i, j),
                    angle: core::f64::consts::PI - libm::acos(c.clamp(-1.0, 1.0)),
                });
            }
        }
    }
    Ok(out)
}

fn crawler_scenario(name: &str, gait: Gait, v0: Option<f64>) -> Scenario {
    let n = gait.blocks();
    Scenario {
        name: name.into(),
        system: System::Crawler(gait),
        periods: 10,
        steps_per_period: 2000,
        start: vec![0.0; n],
        reference: v0.map(|v0| Reference {
            expected: Expected::Velocity { v0, tol: 0.02 },
            basis: Basis::Derived,
            map: None,
            fixed_point: None,
        }),
    }
}

fn constant_all(period: f64, values: &[f64]) -> Vec<PeriodicSignal> {
    values.iter().map(|&v| PeriodicSignal::constant(period, v)).collect()
}

/// Two blocks, unit stiffness and period, `μ^+ = (1, 1)`, `μ^− = (2, 2)`,
/// rest length a triangle wave `0 → 4 → 0`.
pub fn gait_star() -> Gait {
    Gait::new(
        1.0,
        1.0,
        vec![PeriodicSignal::triangle(1.0, 0.0, 4.0)],
        constant_all(1.0, &[1.0, 1.0]),
        constant_all(1.0, &[2.0, 2.0]),
    )
    .expect("valid gait")
}

/// Three blocks with two phase-shifted actuators and time-varying friction.
pub fn gait_three() -> Gait {
    let t = 1.0;
    let l1 = PeriodicSignal::triangle(t, 0.0, 2.0);
    let l2 = PeriodicSignal::piecewise_linear(t, vec![(0.0, 1.0), (0.25, 0.0), (0.75, 2.0)])
        .expect("valid signal");
    let mu1 = PeriodicSignal::piecewise_linear(t, vec![(0.0, 1.0), (0.5, 1.2)]).expect("valid signal");
    Gait::new(
        t,
        1.0,
        vec![l1, l2],
        vec![mu1, PeriodicSignal::constant(t, 1.5), PeriodicSignal::constant(t, 1.0)],
        constant_all(t, &[2.0, 2.5, 2.0]),
    )
    .expect("valid gait")
}

/// Equal forward and backward friction: the uniqueness margin vanishes.
pub fn gait_degenerate() -> Gait {
    Gait::new(
        1.0,
        1.0,
        vec![PeriodicSignal::triangle(1.0, 0.0, 4.0)],
        constant_all(1.0, &[1.0, 1.0]),
        constant_all(1.0, &[1.0, 1.0]),
    )
    .expect("valid gait")
}

/// G*, its mirror, the three-block gait and the degenerate gait.
pub fn reference_gaits() -> Vec<Gait> {
    vec![gait_star(), gait_star().mirrored(), gait_three(), gait_degenerate()]
}

/// Names accepted by [`scenario_by_name`].
pub const CATALOG: &[&str] = &[
    "ncell-1-static",
    "ncell-1",
    "ncell-3",
    "wedge",
    "triangle",
    "triangle-moving",
    "gait-star",
    "gait-star-mirror",
    "gait-three",
    "gait-degenerate",
];

fn ncell_three() -> Result<Scenario> {
    let t = 1.0;
    let a1 = PeriodicSignal::triangle(t, 0.0, 2.0);
    let a2 = PeriodicSignal::piecewise_linear(t, vec![(0.0, 1.0), (0.25, 0.0), (0.75, 2.0)])?;
    let a3 = PeriodicSignal::triangle(t, 0.0, 0.5);
    let b1 = PeriodicSignal::linear_combination(1.0, &[(1.0, &a1)])?;
    let b2 = PeriodicSignal::linear_combination(0.5, &[(1.0, &a2)])?;
    let b3 = PeriodicSignal::linear_combination(2.0, &[(1.0, &a3)])?;
    ncell_scenario(vec![a1, a2, a3], vec![b1, b2, b3])
}

pub fn scenario_by_name(name: &str) -> Result<Scenario> {
    let named = |mut s: Scenario| {
        s.name = name.into();
        s
    };
    match name {
        "ncell-1-static" => {
            let mut s = ncell_scenario(
                vec![PeriodicSignal::constant(1.0, 0.0)],
                vec![PeriodicSignal::constant(1.0, 1.0)],
            )?;
            s.start = vec![0.3];
            if let Some(r) = &mut s.reference {
                r.expected = Expected::FiniteTime { max_period: 0 };
                r.basis = Basis::Trivial;
            }
            Ok(named(s))
        }
        "ncell-1" => {
            let a = PeriodicSignal::triangle(1.0, 0.0, 2.0);
            let b = PeriodicSignal::linear_combination(1.0, &[(1.0, &a)])?;
            let mut s = ncell_scenario(vec![a], vec![b])?;
            s.start = vec![0.0];
            Ok(named(s))
        }
        "ncell-3" => ncell_three().map(named),
        "wedge" => wedge_scenario(1.0, 2.0, 2.0),
        "triangle" => triangle_scenario(6.0, 1.0, 1.0),
        "triangle-moving" => triangle_moving_scenario(6.0, 1.0, 1.0),
        "gait-star" => Ok(crawler_scenario(name, gait_star(), Some(2.0))),
        "gait-star-mirror" => Ok(crawler_scenario(name, gait_star().mirrored(), Some(-2.0))),
        "gait-three" => Ok(crawler_scenario(name, gait_three(), None)),
        "gait-degenerate" => Ok(crawler_scenario(name, gait_degenerate(), None)),
        _ => Err(Error::InvalidScenario(format!("unknown scenario {name:?}"))),
    }
}

/// Minimum uniqueness margin of a gait over `samples` equally spaced times.
pub fn gait_margin(g: &Gait, samples: usize) -> f64 {
    let t = g.period();
    (0..samples)
        .map(|k| crawler::uniqueness_margin(g, t * k as f64 / samples as f64).0)
        .fold(f64::INFINITY, f64::min)
}
