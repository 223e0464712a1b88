//! Quasistatic crawler: `N` blocks on a line with rate-independent friction,
//! joined by `N − 1` springs in series with actuators of prescribed length.
//!
//! Forces balance as `0 ∈ D_xE(t, x) + ∂R(t, ẋ)`. Splitting `x` into its mean
//! `y` and its shape `z = (x_2 − x_1, …, x_N − x_{N−1})`, the scaled shape
//! `w = −k z` follows the sweeping process `ẇ ∈ −N_{K(t)}(w)` with
//! `2N` constraints. Constraint `i < N` is block `i` slipping forward (force at
//! `+μ_i^+`), constraint `N + i` is block `i` slipping backward. The mean
//! advances by `(Σ_{i<N} η_i − Σ_{i≥N} η_i) / (kN)` per catching-up step.
//!
//! [`incremental_oracle`] solves the original problem in `x` directly by
//! time-incremental minimization, as an independent check of the reduction.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg;
use crate::polyhedra::{MovingPolyhedron, Tolerances};
use crate::signals::{PeriodicSignal, SignalKind};
use crate::sweeping::{self, SweepingProblem, TimeGrid, Trajectory};
use crate::{Error, Result};

/// Subset enumeration in the uniqueness check is `2^N`.
pub const MAX_BLOCKS_UNIQUENESS: usize = 16;
/// The oracle enumerates `3^N` slip patterns per step.
pub const MAX_BLOCKS_ORACLE: usize = 8;

/// Periodic actuation and friction of an `N`-block crawler.
#[derive(Debug, Clone, PartialEq)]
pub struct Gait {
    period: f64,
    stiffness: f64,
    rest_lengths: Vec<PeriodicSignal>,
    mu_plus: Vec<PeriodicSignal>,
    mu_minus: Vec<PeriodicSignal>,
}

impl Gait {
    pub fn new(
        period: f64,
        stiffness: f64,
        rest_lengths: Vec<PeriodicSignal>,
        mu_plus: Vec<PeriodicSignal>,
        mu_minus: Vec<PeriodicSignal>,
    ) -> Result<Self> {
        let n = mu_plus.len();
        if n < 2 {
            return Err(Error::InvalidGait(format!("need at least 2 blocks, got {n}")));
        }
        if n > crate::polyhedra::MAX_CONSTRAINTS / 2 {
            return Err(Error::InvalidGait(format!("{n} blocks exceed the supported maximum")));
        }
        if mu_minus.len() != n || rest_lengths.len() + 1 != n {
            return Err(Error::InvalidGait(format!(
                "{n} forward coefficients need {n} backward ones and {} rest lengths",
                n - 1
            )));
        }
        if !(stiffness.is_finite() && stiffness > 0.0) {
            return Err(Error::InvalidGait("stiffness must be positive".into()));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidGait("period must be positive".into()));
        }
        for s in rest_lengths.iter().chain(&mu_plus).chain(&mu_minus) {
            if (s.period() - period).abs() > 1e-12 * period {
                return Err(Error::InvalidGait("all signals must share the gait period".into()));
            }
            if s.kind() != SignalKind::PiecewiseLinear {
                return Err(Error::InvalidGait("gait signals must be piecewise linear".into()));
            }
        }
        if mu_plus.iter().chain(&mu_minus).any(|s| s.min_value() <= 0.0) {
            return Err(Error::InvalidGait("friction coefficients must stay positive".into()));
        }
        Ok(Self { period, stiffness, rest_lengths, mu_plus, mu_minus })
    }

    pub fn blocks(&self) -> usize {
        self.mu_plus.len()
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn stiffness(&self) -> f64 {
        self.stiffness
    }

    pub fn rest_lengths(&self) -> &[PeriodicSignal] {
        &self.rest_lengths
    }

    pub fn mu_plus(&self) -> &[PeriodicSignal] {
        &self.mu_plus
    }

    pub fn mu_minus(&self) -> &[PeriodicSignal] {
        &self.mu_minus
    }

    /// Friction bounds `(α1, α2)` with `α1 ≤ μ_i^±(t) ≤ α2`.
    pub fn friction_bounds(&self) -> (f64, f64) {
        let all = self.mu_plus.iter().chain(&self.mu_minus);
        let lo = all.clone().map(PeriodicSignal::min_value).fold(f64::INFINITY, f64::min);
        let hi = all.map(PeriodicSignal::max_value).fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    /// The same gait with forward and backward friction exchanged; solutions
    /// are mapped to their reflections `x → −x` (with `L → −L`).
    pub fn mirrored(&self) -> Self {
        Self {
            mu_plus: self.mu_minus.clone(),
            mu_minus: self.mu_plus.clone(),
            ..self.clone()
        }
    }

    fn rest_at(&self, t: f64) -> Vec<f64> {
        self.rest_lengths.iter().map(|s| s.eval(t)).collect()
    }

    fn signals(&self) -> impl Iterator<Item = &PeriodicSignal> {
        self.rest_lengths.iter().chain(&self.mu_plus).chain(&self.mu_minus)
    }
}

/// `π_Y(x)`: mean position.
pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// `π_Z(x)`: consecutive differences.
pub fn shape(x: &[f64]) -> Vec<f64> {
    x.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Inverse of `x ↦ (π_Y(x), π_Z(x))`.
pub fn compose(y: f64, z: &[f64]) -> Vec<f64> {
    let mut x = Vec::with_capacity(z.len() + 1);
    x.push(0.0);
    for (i, dz) in z.iter().enumerate() {
        x.push(x[i] + dz);
    }
    let shift = y - mean(&x);
    x.iter_mut().for_each(|v| *v += shift);
    x
}

/// `Σ (k/2)(x_{i+1} − x_i − L_i(t))²`.
pub fn energy(g: &Gait, t: f64, x: &[f64]) -> f64 {
    let l = g.rest_at(t);
    shape(x).iter().zip(&l).map(|(z, l)| 0.5 * g.stiffness * (z - l) * (z - l)).sum()
}

pub fn energy_gradient(g: &Gait, t: f64, x: &[f64]) -> Vec<f64> {
    let l = g.rest_at(t);
    let tension: Vec<f64> =
        shape(x).iter().zip(&l).map(|(z, l)| g.stiffness * (z - l)).collect();
    let n = x.len();
    (0..n)
        .map(|i| {
            let left = if i > 0 { tension[i - 1] } else { 0.0 };
            let right = if i + 1 < n { tension[i] } else { 0.0 };
            left - right
        })
        .collect()
}

/// `Σ μ_i^+ (v_i)_+ + μ_i^− (v_i)_−`.
pub fn dissipation(g: &Gait, t: f64, v: &[f64]) -> f64 {
    v.iter()
        .enumerate()
        .map(|(i, &vi)| {
            if vi >= 0.0 {
                g.mu_plus[i].eval(t) * vi
            } else {
                -g.mu_minus[i].eval(t) * vi
            }
        })
        .sum()
}

fn unit(n: usize, i: usize, sign: f64) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[i] = sign;
    e
}

/// Admissible friction forces `{ξ : −μ_i^− ≤ ξ_i ≤ μ_i^+}`; constraint `i`
/// is the upper bound of `ξ_i`, constraint `N + i` the lower bound.
pub fn force_polyhedron(g: &Gait) -> Result<MovingPolyhedron> {
    let n = g.blocks();
    let normals = (0..n).map(|i| unit(n, i, 1.0)).chain((0..n).map(|i| unit(n, i, -1.0))).collect();
    let offsets = g.mu_plus.iter().chain(&g.mu_minus).cloned().collect();
    MovingPolyhedron::new(normals, offsets)
}

/// `ν_i = π_Z(e_i)` for `i < N` and `ν_{N+i} = −π_Z(e_i)`.
pub fn reduced_normals(blocks: usize) -> Vec<Vec<f64>> {
    let fwd: Vec<Vec<f64>> = (0..blocks).map(|i| shape(&unit(blocks, i, 1.0))).collect();
    let bwd: Vec<Vec<f64>> =
        fwd.iter().map(|v| v.iter().map(|x| -x).collect()).collect();
    fwd.into_iter().chain(bwd).collect()
}

/// Translation of the shape-space force set: `g_sh(t) = k·L(t)`.
pub fn shape_translation(g: &Gait, t: f64) -> Vec<f64> {
    g.rest_at(t).into_iter().map(|l| g.stiffness * l).collect()
}

/// `K(t) = C_sh(t) − g_sh(t)` in `R^{N−1}`:
/// `⟨ν_i, w⟩ ≤ μ_i^±(t) − ⟨ν_i, g_sh(t)⟩`.
pub fn reduced_set(g: &Gait) -> Result<MovingPolyhedron> {
    let n = g.blocks();
    let normals = reduced_normals(n);
    let mut offsets = Vec::with_capacity(2 * n);
    for (i, nu) in normals.iter().enumerate() {
        let mu = if i < n { &g.mu_plus[i] } else { &g.mu_minus[i - n] };
        let mut terms: Vec<(f64, &PeriodicSignal)> = vec![(1.0, mu)];
        for (j, &c) in nu.iter().enumerate() {
            if c != 0.0 {
                terms.push((-g.stiffness * c, &g.rest_lengths[j]));
            }
        }
        offsets.push(PeriodicSignal::linear_combination(0.0, &terms)?);
    }
    MovingPolyhedron::new(normals, offsets)
}

/// `min_J |Σ_{i∈J} μ_i^+(t) − Σ_{i∉J} μ_i^−(t)|` and a minimizing `J`
/// (bit `i` set when block `i` is in `J`).
pub fn uniqueness_margin(g: &Gait, t: f64) -> (f64, u32) {
    let n = g.blocks();
    let plus: Vec<f64> = g.mu_plus.iter().map(|s| s.eval(t)).collect();
    let minus: Vec<f64> = g.mu_minus.iter().map(|s| s.eval(t)).collect();
    let mut best = (f64::INFINITY, 0u32);
    for mask in 0u32..(1u32 << n) {
        let s: f64 = (0..n)
            .map(|i| if mask & (1 << i) != 0 { plus[i] } else { -minus[i] })
            .sum();
        if s.abs() < best.0 {
            best = (s.abs(), mask);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniquenessReport {
    pub min_margin: f64,
    pub worst_time: f64,
    /// Blocks in the minimizing subset `J`.
    pub worst_subset: Vec<usize>,
    /// Fraction of the sampled times where the margin is zero (within tol).
    pub zero_fraction: f64,
}

pub fn check_gait_uniqueness<I>(g: &Gait, times: I, tol: f64) -> Result<UniquenessReport>
where
    I: IntoIterator<Item = f64>,
{
    let n = g.blocks();
    if n > MAX_BLOCKS_UNIQUENESS {
        return Err(Error::EnumerationCap { constraints: n, cap: MAX_BLOCKS_UNIQUENESS });
    }
    let mut report = UniquenessReport {
        min_margin: f64::INFINITY,
        worst_time: 0.0,
        worst_subset: Vec::new(),
        zero_fraction: 0.0,
    };
    let mut samples = 0usize;
    let mut zeros = 0usize;
    for t in times {
        let (margin, mask) = uniqueness_margin(g, t);
        samples += 1;
        if margin <= tol {
            zeros += 1;
        }
        if margin < report.min_margin {
            report.min_margin = margin;
            report.worst_time = t;
            report.worst_subset = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        }
    }
    if samples > 0 {
        report.zero_fraction = zeros as f64 / samples as f64;
    }
    Ok(report)
}

/// `−D_xE(t, x) ∈ C(t)` within `tol`.
pub fn admissible(g: &Gait, t: f64, x: &[f64], tol: f64) -> bool {
    let force: Vec<f64> = energy_gradient(g, t, x).into_iter().map(|v| -v).collect();
    force.iter().enumerate().all(|(i, &f)| {
        f <= g.mu_plus[i].eval(t) + tol && -f <= g.mu_minus[i].eval(t) + tol
    })
}

/// `w = −k·π_Z(x) ∈ K(t)` within `tol`; equivalent to [`admissible`].
pub fn admissible_reduced(g: &Gait, k_set: &MovingPolyhedron, t: f64, x: &[f64], tol: f64) -> bool {
    let w: Vec<f64> = shape(x).into_iter().map(|z| -g.stiffness * z).collect();
    k_set.freeze(t).contains(&w, tol)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrawlerOptions {
    pub tols: Tolerances,
    /// Gaits whose margin vanishes on a larger fraction of the grid are refused.
    pub max_zero_fraction: f64,
}

impl Default for CrawlerOptions {
    fn default() -> Self {
        Self { tols: Tolerances::default(), max_zero_fraction: 1e-3 }
    }
}

/// Reduced trajectory together with the recovered motion.
#[derive(Debug, Clone, PartialEq)]
pub struct CrawlerRun {
    pub w: Trajectory,
    pub y: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub uniqueness: UniquenessReport,
}

impl CrawlerRun {
    pub fn z(&self, k: usize) -> Vec<f64> {
        shape(&self.x[k])
    }
}

fn grid_margin(g: &Gait, grid: &TimeGrid, opts: &CrawlerOptions) -> Result<UniquenessReport> {
    let m = grid.steps_per_period;
    let report = check_gait_uniqueness(g, (0..m).map(|k| grid.time(k)), opts.tols.tol)?;
    if report.zero_fraction > opts.max_zero_fraction {
        return Err(Error::DegenerateGait {
            margin: report.min_margin,
            time: report.worst_time,
            zero_fraction: report.zero_fraction,
        });
    }
    Ok(report)
}

/// Integrate the reduced sweeping process from `x0` and recover `y` and `x`.
pub fn simulate_reduced(
    g: &Gait,
    x0: &[f64],
    t0: f64,
    periods: usize,
    steps_per_period: usize,
    opts: &CrawlerOptions,
) -> Result<CrawlerRun> {
    let n = g.blocks();
    if x0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x0.len() });
    }
    let grid = TimeGrid::new(t0, g.period, steps_per_period)?;
    grid.check_alignment(g.signals())?;
    let uniqueness = grid_margin(g, &grid, opts)?;
    let k_set = reduced_set(g)?;
    let w0: Vec<f64> = shape(x0).into_iter().map(|z| -g.stiffness * z).collect();
    let problem = SweepingProblem::without_drift(k_set);
    let w = sweeping::simulate(&problem, &w0, t0, periods, steps_per_period, &opts.tols)?;
    let scale = 1.0 / (g.stiffness * n as f64);
    let mut y = Vec::with_capacity(w.states().len());
    y.push(mean(x0));
    for eta in &w.multipliers()[1..] {
        let fwd: f64 = eta[..n].iter().sum();
        let bwd: f64 = eta[n..].iter().sum();
        let last = y[y.len() - 1];
        y.push(last + scale * (fwd - bwd));
    }
    let x = w
        .states()
        .iter()
        .zip(&y)
        .map(|(wk, &yk)| {
            let z: Vec<f64> = wk.iter().map(|v| -v / g.stiffness).collect();
            compose(yk, &z)
        })
        .collect();
    Ok(CrawlerRun { w, y, x, uniqueness })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VelocityEstimate {
    pub v0: f64,
    /// `(y(t0 + qT) − y(t0 + (q−1)T)) / T` for `q = 1..=Q`.
    pub per_period: Vec<f64>,
    /// The last three per-period values agree within `tol_v`.
    pub converged: bool,
}

pub fn estimate_velocity(
    y: &[f64],
    steps_per_period: usize,
    period: f64,
    tol_v: f64,
) -> Result<VelocityEstimate> {
    let periods = y.len().saturating_sub(1) / steps_per_period.max(1);
    if periods < 3 {
        return Err(Error::InsufficientPeriods { needed: 3, have: periods });
    }
    let m = steps_per_period;
    let per_period: Vec<f64> =
        (1..=periods).map(|q| (y[q * m] - y[(q - 1) * m]) / period).collect();
    let tail = &per_period[periods - 3..];
    let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(VelocityEstimate { v0: per_period[periods - 1], per_period, converged: hi - lo < tol_v })
}

/// `x(t) ≈ x̄0 + (t − t0)·v̄0 + p̄(t)` with `p̄` read off the last period.
#[derive(Debug, Clone, PartialEq)]
pub struct RunningPeriodic {
    pub x_bar0: Vec<f64>,
    pub v_bar0: f64,
    /// `p̄` on the `M + 1` grid points of the last period.
    pub profile: Vec<Vec<f64>>,
    /// `max_i |p̄_i(end) − p̄_i(start)|`.
    pub residual: f64,
    pub converged: bool,
}

pub fn running_periodic_decomposition(
    x: &[Vec<f64>],
    steps_per_period: usize,
    period: f64,
    tol: f64,
) -> Result<RunningPeriodic> {
    let y: Vec<f64> = x.iter().map(|v| mean(v)).collect();
    let vel = estimate_velocity(&y, steps_per_period, period, tol)?;
    let m = steps_per_period;
    let q = (x.len() - 1) / m - 1;
    let h = period / m as f64;
    let x_bar0 = x[0].clone();
    let profile: Vec<Vec<f64>> = (0..=m)
        .map(|j| {
            let k = q * m + j;
            let shift = (q as f64 * period + j as f64 * h) * vel.v0;
            x[k].iter().zip(&x_bar0).map(|(xi, x0)| xi - x0 - shift).collect()
        })
        .collect();
    let residual = profile[m]
        .iter()
        .zip(&profile[0])
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(RunningPeriodic {
        x_bar0,
        v_bar0: vel.v0,
        profile,
        residual,
        converged: residual <= tol && vel.converged,
    })
}

/// Slip state of one block within a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slip {
    Stick,
    Forward,
    Backward,
}

/// Time-incremental minimization `x_{k+1} = argmin E(t_{k+1}, ·) + R(t_{k+1}, · − x_k)`,
/// solved exactly by trying every forward/stick/backward pattern.
pub fn incremental_oracle(
    g: &Gait,
    x0: &[f64],
    t0: f64,
    periods: usize,
    steps_per_period: usize,
    tol: f64,
) -> Result<Vec<Vec<f64>>> {
    let n = g.blocks();
    if n > MAX_BLOCKS_ORACLE {
        return Err(Error::EnumerationCap { constraints: n, cap: MAX_BLOCKS_ORACLE });
    }
    if x0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x0.len() });
    }
    if !admissible(g, t0, x0, tol) {
        return Err(Error::InadmissibleStart { index: 0, violation: f64::NAN });
    }
    let grid = TimeGrid::new(t0, g.period, steps_per_period)?;
    grid.check_alignment(g.signals())?;
    let patterns = slip_patterns(n);
    let mut xs = Vec::with_capacity(periods * steps_per_period + 1);
    xs.push(x0.to_vec());
    for k in 0..periods * steps_per_period {
        let t = grid.time(k + 1);
        let next = oracle_step(g, t, &xs[k], &patterns, tol).map_err(|violation| {
            Error::NoSlipPattern { step: k, violation }
        })?;
        xs.push(next);
    }
    Ok(xs)
}

/// All `3^N` patterns, fewest slipping blocks first.
fn slip_patterns(n: usize) -> Vec<Vec<Slip>> {
    let mut out: Vec<Vec<Slip>> = (0..3usize.pow(n as u32))
        .map(|mut code| {
            (0..n)
                .map(|_| {
                    let s = match code % 3 {
                        0 => Slip::Stick,
                        1 => Slip::Forward,
                        _ => Slip::Backward,
                    };
                    code /= 3;
                    s
                })
                .collect()
        })
        .collect();
    out.sort_by_key(|p: &Vec<Slip>| p.iter().filter(|s| **s != Slip::Stick).count());
    out
}

/// Hessian entry of `E` (path Laplacian times `k`).
fn hessian(n: usize, k: f64, i: usize, j: usize) -> f64 {
    if i == j {
        let deg = usize::from(i > 0) + usize::from(i + 1 < n);
        k * deg as f64
    } else if i.abs_diff(j) == 1 {
        -k
    } else {
        0.0
    }
}

fn oracle_step(
    g: &Gait,
    t: f64,
    prev: &[f64],
    patterns: &[Vec<Slip>],
    tol: f64,
) -> core::result::Result<Vec<f64>, f64> {
    let n = g.blocks();
    let k = g.stiffness;
    let plus: Vec<f64> = g.mu_plus.iter().map(|s| s.eval(t)).collect();
    let minus: Vec<f64> = g.mu_minus.iter().map(|s| s.eval(t)).collect();
    // constant part of −∇E
    let rest = g.rest_at(t);
    let drive: Vec<f64> = (0..n)
        .map(|i| {
            let left = if i > 0 { rest[i - 1] } else { 0.0 };
            let right = if i + 1 < n { rest[i] } else { 0.0 };
            k * (left - right)
        })
        .collect();
    let scale = 1.0 + plus.iter().chain(&minus).fold(0.0_f64, |a, &b| a.max(b));
    let accept = tol * scale;
    let mut best: Option<(f64, Vec<f64>)> = None;
    for pattern in patterns {
        let slipping: Vec<usize> = (0..n).filter(|&i| pattern[i] != Slip::Stick).collect();
        if slipping.len() == n {
            // translation invariance makes the all-slip system singular
            continue;
        }
        let mut x = prev.to_vec();
        if !slipping.is_empty() {
            let s = slipping.len();
            let mut a = Vec::with_capacity(s * s);
            let mut b = Vec::with_capacity(s);
            for &i in &slipping {
                for &j in &slipping {
                    a.push(hessian(n, k, i, j));
                }
                let target = if pattern[i] == Slip::Forward { plus[i] } else { -minus[i] };
                let pinned: f64 = (0..n)
                    .filter(|j| pattern[*j] == Slip::Stick)
                    .map(|j| hessian(n, k, i, j) * prev[j])
                    .sum();
                b.push(drive[i] - target - pinned);
            }
            let Some(sol) = linalg::solve(&a, &b, s) else {
                continue;
            };
            for (&i, v) in slipping.iter().zip(sol) {
                x[i] = v;
            }
        }
        let force: Vec<f64> = (0..n)
            .map(|i| drive[i] - (0..n).map(|j| hessian(n, k, i, j) * x[j]).sum::<f64>())
            .collect();
        let mut violation: f64 = 0.0;
        for i in 0..n {
            let dv = x[i] - prev[i];
            violation = violation.max(match pattern[i] {
                Slip::Forward => -dv,
                Slip::Backward => dv,
                Slip::Stick => (force[i] - plus[i]).max(-minus[i] - force[i]),
            });
        }
        if violation <= accept {
            return Ok(x);
        }
        if best.as_ref().is_none_or(|(v, _)| violation < *v) {
            best = Some((violation, x));
        }
    }
    match best {
        Some((v, x)) if v <= 1e3 * accept => Ok(x),
        Some((v, _)) => Err(v),
        None => Err(f64::INFINITY),
    }
}

/// `max_k max_i |a_k,i − b_k,i|` over two state sequences of equal length.
pub fn sup_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(u, v)| u.iter().zip(v).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max)
}
