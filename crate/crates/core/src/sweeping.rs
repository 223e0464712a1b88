//! Catching-up integration of `ż ∈ −N_{C(t)}(z) + f(t)` and the diagnostics
//! used to study convergence towards periodic orbits.
//!
//! One step is `z_{k+1} = proj_{C(t_{k+1})}(z_k + h f(t_k))`. The projection
//! multipliers `η_k` give the discrete normal-cone coefficients, so
//! `λ_i(t_k) = η_{k,i} / h` approximates the measurable selection behind the
//! velocity `ż = −Σ λ_i b_i`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{self, distance};
use crate::polyhedra::{ActiveSet, FrozenPolyhedron, MovingPolyhedron, Projection, Tolerances};
use crate::signals::PeriodicSignal;
use crate::{Error, Result};

/// A moving polyhedron plus an optional drift (one signal per coordinate).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepingProblem {
    set: MovingPolyhedron,
    drift: Option<Vec<PeriodicSignal>>,
}

impl SweepingProblem {
    pub fn new(set: MovingPolyhedron, drift: Option<Vec<PeriodicSignal>>) -> Result<Self> {
        if let Some(d) = &drift {
            if d.len() != set.dim() {
                return Err(Error::DimensionMismatch { expected: set.dim(), got: d.len() });
            }
            let period = set.period();
            if d.iter().any(|s| (s.period() - period).abs() > 1e-12 * period) {
                return Err(Error::InvalidSignal("drift period differs from the set's".into()));
            }
        }
        Ok(Self { set, drift })
    }

    pub fn without_drift(set: MovingPolyhedron) -> Self {
        Self { set, drift: None }
    }

    pub fn set(&self) -> &MovingPolyhedron {
        &self.set
    }

    pub fn drift(&self) -> Option<&[PeriodicSignal]> {
        self.drift.as_deref()
    }

    pub fn period(&self) -> f64 {
        self.set.period()
    }

    pub fn dim(&self) -> usize {
        self.set.dim()
    }

    pub fn drift_at(&self, t: f64) -> Vec<f64> {
        match &self.drift {
            Some(d) => d.iter().map(|s| s.eval(t)).collect(),
            None => vec![0.0; self.dim()],
        }
    }

    fn signals(&self) -> impl Iterator<Item = &PeriodicSignal> {
        self.set.offsets().iter().chain(self.drift.iter().flatten())
    }
}

/// Uniform grid `t_k = t0 + k·T/M` with `M` steps per period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub period: f64,
    pub steps_per_period: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, period: f64, steps_per_period: usize) -> Result<Self> {
        if steps_per_period == 0 {
            return Err(Error::InvalidGrid("steps per period must be positive".into()));
        }
        if !(period.is_finite() && period > 0.0 && t0.is_finite()) {
            return Err(Error::InvalidGrid("period must be positive and t0 finite".into()));
        }
        Ok(Self { t0, period, steps_per_period })
    }

    pub fn step(&self) -> f64 {
        self.period / self.steps_per_period as f64
    }

    /// Time of grid point `k`. Computed from the period count and the phase
    /// index so that the same phase always maps to the same offset.
    pub fn time(&self, k: usize) -> f64 {
        let m = self.steps_per_period;
        let phase = ((k % m) as f64 * self.period) / m as f64;
        self.t0 + (k / m) as f64 * self.period + phase
    }

    /// Every breakpoint of every signal lies on the grid.
    pub fn check_alignment<'a, I>(&self, signals: I) -> Result<()>
    where
        I: IntoIterator<Item = &'a PeriodicSignal>,
    {
        for s in signals {
            if !s.aligned_with(self.t0, self.step()) {
                return Err(Error::InvalidGrid(format!(
                    "{} steps per period do not hit every breakpoint of a signal",
                    self.steps_per_period
                )));
            }
        }
        Ok(())
    }
}

/// The discrete solution: states on the grid, the multipliers of the
/// projection that produced each state, and the active set at each state.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: TimeGrid,
    periods: usize,
    normals: Vec<Vec<f64>>,
    states: Vec<Vec<f64>>,
    /// `multipliers[k]` belongs to the step landing on `states[k]`; zero for `k = 0`.
    multipliers: Vec<Vec<f64>>,
    active: Vec<ActiveSet>,
    /// `h·f(t_k)` for each step, when the problem has a drift.
    displacements: Option<Vec<Vec<f64>>>,
}

impl Trajectory {
    /// Assemble a trajectory from stored columns (e.g. a parsed CSV file).
    pub fn from_parts(
        grid: TimeGrid,
        normals: Vec<Vec<f64>>,
        states: Vec<Vec<f64>>,
        multipliers: Vec<Vec<f64>>,
        active: Vec<ActiveSet>,
    ) -> Result<Self> {
        let m = grid.steps_per_period;
        if states.is_empty() || (states.len() - 1) % m != 0 {
            return Err(Error::InvalidGrid(format!(
                "{} states do not cover whole periods of {m} steps",
                states.len()
            )));
        }
        if multipliers.len() != states.len() || active.len() != states.len() {
            return Err(Error::DimensionMismatch { expected: states.len(), got: multipliers.len() });
        }
        let n = states[0].len();
        if states.iter().any(|z| z.len() != n) || normals.iter().any(|b| b.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: 0 });
        }
        if multipliers.iter().any(|e| e.len() != normals.len()) {
            return Err(Error::DimensionMismatch { expected: normals.len(), got: 0 });
        }
        let periods = (states.len() - 1) / m;
        Ok(Self { grid, periods, normals, states, multipliers, active, displacements: None })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn h(&self) -> f64 {
        self.grid.step()
    }

    pub fn periods(&self) -> usize {
        self.periods
    }

    pub fn steps_per_period(&self) -> usize {
        self.grid.steps_per_period
    }

    pub fn time(&self, k: usize) -> f64 {
        self.grid.time(k)
    }

    pub fn normals(&self) -> &[Vec<f64>] {
        &self.normals
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn multipliers(&self) -> &[Vec<f64>] {
        &self.multipliers
    }

    pub fn active_sets(&self) -> &[ActiveSet] {
        &self.active
    }

    pub fn last(&self) -> &[f64] {
        &self.states[self.states.len() - 1]
    }

    /// Largest `|z_k + h f(t_k) − z_{k+1} − Σ_i η_{k+1,i} b_i|` over the trajectory.
    pub fn reconstruction_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..self.states.len() - 1 {
            let mut r = linalg::sub(&self.states[k], &self.states[k + 1]);
            if let Some(d) = &self.displacements {
                linalg::axpy(&mut r, 1.0, &d[k]);
            }
            for (b, &eta) in self.normals.iter().zip(&self.multipliers[k + 1]) {
                linalg::axpy(&mut r, -eta, b);
            }
            worst = worst.max(linalg::norm(&r));
        }
        worst
    }
}

/// One catching-up step: project `z + h·drift` onto the next set.
pub fn step(
    next: &FrozenPolyhedron,
    z: &[f64],
    drift: &[f64],
    h: f64,
    tols: &Tolerances,
) -> Result<Projection> {
    let mut p = z.to_vec();
    linalg::axpy(&mut p, h, drift);
    next.project(&p, tols)
}

/// Indices whose slack is within `tol`, ignoring (tiny) violations.
fn landing_activity(f: &FrozenPolyhedron, z: &[f64], tol: f64) -> ActiveSet {
    let mut s = ActiveSet::EMPTY;
    for i in 0..f.len() {
        if f.slack(i, z) <= tol {
            s.insert(i);
        }
    }
    s
}

/// Run `periods × steps_per_period` catching-up steps from an admissible `z0`.
pub fn simulate(
    problem: &SweepingProblem,
    z0: &[f64],
    t0: f64,
    periods: usize,
    steps_per_period: usize,
    tols: &Tolerances,
) -> Result<Trajectory> {
    let grid = TimeGrid::new(t0, problem.period(), steps_per_period)?;
    grid.check_alignment(problem.signals())?;
    let start = problem.set().freeze(t0);
    if z0.len() != problem.dim() {
        return Err(Error::DimensionMismatch { expected: problem.dim(), got: z0.len() });
    }
    if let Some((index, slack)) = (0..start.len())
        .map(|i| (i, start.slack(i, z0)))
        .find(|&(_, s)| s < -tols.tol)
    {
        return Err(Error::InadmissibleStart { index, violation: -slack });
    }
    let m = start.len();
    let total = periods * steps_per_period;
    let h = grid.step();
    let mut states = Vec::with_capacity(total + 1);
    let mut multipliers = Vec::with_capacity(total + 1);
    let mut active = Vec::with_capacity(total + 1);
    active.push(landing_activity(&start, z0, tols.tol));
    states.push(z0.to_vec());
    multipliers.push(vec![0.0; m]);
    let mut displacements = problem.drift().map(|_| Vec::with_capacity(total));
    for k in 0..total {
        let next = problem.set().freeze(grid.time(k + 1));
        let drift = problem.drift_at(grid.time(k));
        let pr = step(&next, &states[k], &drift, h, tols)?;
        if let Some(d) = &mut displacements {
            d.push(drift.iter().map(|f| h * f).collect());
        }
        active.push(landing_activity(&next, &pr.point, tols.tol));
        states.push(pr.point);
        multipliers.push(pr.multipliers);
    }
    Ok(Trajectory {
        grid,
        periods,
        normals: problem.set().normals().to_vec(),
        states,
        multipliers,
        active,
        displacements,
    })
}

/// States at `t0 + qT` for `q = 0..=Q`.
pub fn poincare_samples(traj: &Trajectory) -> Vec<Vec<f64>> {
    let m = traj.steps_per_period();
    (0..=traj.periods).map(|q| traj.states[q * m].clone()).collect()
}

fn check_window(traj: &Trajectory, q: usize) -> Result<()> {
    if q + 2 > traj.periods {
        return Err(Error::OutOfRange { index: q, limit: traj.periods.saturating_sub(2) });
    }
    Ok(())
}

/// `max_j |z(t0 + qT + jh) − z(t0 + (q+1)T + jh)|` over the closed window `j = 0..=M`.
pub fn period_distance_sup(traj: &Trajectory, q: usize) -> Result<f64> {
    check_window(traj, q)?;
    let m = traj.steps_per_period();
    Ok((0..=m)
        .map(|j| distance(&traj.states[q * m + j], &traj.states[(q + 1) * m + j]))
        .fold(0.0, f64::max))
}

/// Discrete `W^{1,2}` distance between consecutive period windows, with
/// forward differences for the derivative of the difference.
pub fn period_distance_w12(traj: &Trajectory, q: usize) -> Result<f64> {
    check_window(traj, q)?;
    let m = traj.steps_per_period();
    let h = traj.h();
    let diff = |j: usize| linalg::sub(&traj.states[q * m + j], &traj.states[(q + 1) * m + j]);
    let mut l2 = 0.0;
    let mut d2 = 0.0;
    let mut cur = diff(0);
    for j in 0..m {
        let next = diff(j + 1);
        l2 += h * linalg::dot(&cur, &cur);
        let der = linalg::sub(&next, &cur);
        d2 += linalg::dot(&der, &der) / h;
        cur = next;
    }
    Ok(libm::sqrt(l2 + d2))
}

/// `d_q^∞` for every comparable pair of windows, `q = 0..Q−1`.
pub fn sup_distances(traj: &Trajectory) -> Vec<f64> {
    (0..traj.periods.saturating_sub(1))
        .map(|q| period_distance_sup(traj, q).expect("window in range"))
        .collect()
}

pub fn w12_distances(traj: &Trajectory) -> Vec<f64> {
    (0..traj.periods.saturating_sub(1))
        .map(|q| period_distance_w12(traj, q).expect("window in range"))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Classification {
    /// Consecutive periods coincide (to `tol_ft`) from window `period` on.
    FiniteTime { period: usize },
    /// Distances shrink by a stable factor per period.
    Geometric { ratio: f64 },
    Undetermined,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyOptions {
    pub tol_ft: f64,
    /// Minimum number of periods, and minimum number of stable ratios for a
    /// geometric verdict.
    pub min_periods: usize,
    /// Allowed `(max − min) / median` of the ratios.
    pub ratio_spread: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self { tol_ft: 1e-9, min_periods: 3, ratio_spread: 0.2 }
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Longest suffix of `ratios` whose relative spread stays within `spread`.
fn stable_ratio(ratios: &[f64], spread: f64, min_len: usize) -> Option<f64> {
    let mut best = None;
    for start in (0..ratios.len()).rev() {
        let mut tail = ratios[start..].to_vec();
        let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let med = median(&mut tail);
        if med <= 0.0 || (hi - lo) / med > spread {
            break;
        }
        if tail.len() >= min_len {
            best = Some(med);
        }
    }
    best
}

/// Classify a sequence of per-period distances.
///
/// A tail below `tol_ft` means finite-time convergence, unless the sequence
/// entered the tail at the same stable rate it was decaying with before, in
/// which case it is geometric decay crossing the threshold.
pub fn classify_sequence(d: &[f64], opts: &ClassifyOptions) -> Classification {
    let settle = {
        let mut q = d.len();
        while q > 0 && d[q - 1] <= opts.tol_ft {
            q -= 1;
        }
        (q < d.len()).then_some(q)
    };
    let run_end = settle.unwrap_or(d.len());
    let run_start = d[..run_end].iter().rposition(|&x| x <= opts.tol_ft).map_or(0, |i| i + 1);
    let ratios: Vec<f64> = (run_start..run_end.saturating_sub(1)).map(|q| d[q + 1] / d[q]).collect();
    let min_ratios = opts.min_periods.max(2);
    let stable = stable_ratio(&ratios, opts.ratio_spread, min_ratios);
    match (settle, stable) {
        (Some(q), Some(r)) if q > run_start => {
            let crossing = d[q] / d[q - 1];
            if crossing >= r * (1.0 - opts.ratio_spread) && crossing <= r * (1.0 + opts.ratio_spread) {
                Classification::Geometric { ratio: r }
            } else {
                Classification::FiniteTime { period: q }
            }
        }
        (Some(q), _) => Classification::FiniteTime { period: q },
        (None, Some(r)) => Classification::Geometric { ratio: r },
        (None, None) => Classification::Undetermined,
    }
}

pub fn classify_convergence(traj: &Trajectory, opts: &ClassifyOptions) -> Result<Classification> {
    let needed = opts.min_periods + 2;
    if traj.periods < needed {
        return Err(Error::InsufficientPeriods { needed, have: traj.periods });
    }
    Ok(classify_sequence(&sup_distances(traj), opts))
}

/// `λ_i(t_k) = η_{k,i} / h` for every step, indexed `[constraint][step]`.
pub fn lambda_series(traj: &Trajectory) -> Vec<Vec<f64>> {
    let h = traj.h();
    let steps = traj.states.len() - 1;
    (0..traj.normals.len())
        .map(|i| (0..steps).map(|k| traj.multipliers[k + 1][i] / h).collect())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaDistances {
    /// Discrete `L²` distance of `λ_i` between windows `q` and `q + 1`.
    pub per_constraint: Vec<f64>,
    /// Whether every landing state of both windows has independent active
    /// normals, i.e. the multipliers are uniquely defined.
    pub licq_holds: bool,
}

pub fn lambda_convergence(traj: &Trajectory, q: usize) -> Result<LambdaDistances> {
    check_window(traj, q)?;
    let m = traj.steps_per_period();
    let h = traj.h();
    let n = traj.states[0].len();
    let licq_holds = (q * m + 1..=(q + 2) * m).all(|k| {
        let rows: Vec<&[f64]> =
            traj.active[k].iter().map(|i| traj.normals[i].as_slice()).collect();
        linalg::independent(&rows, n)
    });
    let per_constraint = (0..traj.normals.len())
        .map(|i| {
            let s: f64 = (0..m)
                .map(|j| {
                    let a = traj.multipliers[q * m + j + 1][i] / h;
                    let b = traj.multipliers[(q + 1) * m + j + 1][i] / h;
                    h * (a - b) * (a - b)
                })
                .sum();
            libm::sqrt(s)
        })
        .collect();
    Ok(LambdaDistances { per_constraint, licq_holds })
}

/// `|z1_k − z2_k|` for every grid point of two trajectories on the same grid.
pub fn pairwise_distances(a: &Trajectory, b: &Trajectory) -> Result<Vec<f64>> {
    if a.grid != b.grid || a.states.len() != b.states.len() || a.normals != b.normals {
        return Err(Error::GridMismatch);
    }
    Ok(a.states.iter().zip(&b.states).map(|(x, y)| distance(x, y)).collect())
}

/// Whether the distance between two solutions never increases (by more than
/// `1e-12`). Holds exactly for drift-free problems: both states are projected
/// onto the same convex set at every step.
pub fn hypomonotone_check(a: &Trajectory, b: &Trajectory) -> Result<bool> {
    let d = pairwise_distances(a, b)?;
    Ok(d.windows(2).all(|w| w[1] <= w[0] + 1e-12))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitCycle {
    /// The last full period of states, `M + 1` grid points.
    pub window: Vec<Vec<f64>>,
    /// Sup distance between the last two windows.
    pub residual: f64,
}

pub fn estimate_limit_cycle(traj: &Trajectory) -> Result<LimitCycle> {
    if traj.periods < 2 {
        return Err(Error::InsufficientPeriods { needed: 2, have: traj.periods });
    }
    let m = traj.steps_per_period();
    let q = traj.periods - 1;
    Ok(LimitCycle {
        window: traj.states[q * m..=(q + 1) * m].to_vec(),
        residual: period_distance_sup(traj, q - 1)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub d_sup: Vec<f64>,
    pub d_w12: Vec<f64>,
    pub classification: Classification,
    pub residual: f64,
    pub cycle: Vec<Vec<f64>>,
}

pub fn convergence_report(traj: &Trajectory, opts: &ClassifyOptions) -> Result<ConvergenceReport> {
    let classification = classify_convergence(traj, opts)?;
    let cycle = estimate_limit_cycle(traj)?;
    Ok(ConvergenceReport {
        d_sup: sup_distances(traj),
        d_w12: w12_distances(traj),
        classification,
        residual: cycle.residual,
        cycle: cycle.window,
    })
}
