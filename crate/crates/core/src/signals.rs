//! T-periodic scalar signals with finitely many breakpoints.

use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Relative distance (in units of the period) within which a time is
/// considered to sit exactly on a breakpoint.
const SNAP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalKind {
    /// Linear interpolation between breakpoints, wrapping around the period.
    PiecewiseLinear,
    /// Value of the most recent breakpoint (left-closed, right-open steps).
    PiecewiseConstant,
}

/// A periodic function of time given by breakpoints `(t, v)` with
/// `0 ≤ t < period`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicSignal {
    period: f64,
    kind: SignalKind,
    points: Vec<(f64, f64)>,
}

impl PeriodicSignal {
    pub fn new(period: f64, kind: SignalKind, points: Vec<(f64, f64)>) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidSignal(format!("period must be positive, got {period}")));
        }
        if points.is_empty() {
            return Err(Error::InvalidSignal("no breakpoints".into()));
        }
        for (i, &(t, v)) in points.iter().enumerate() {
            if !(t.is_finite() && v.is_finite()) {
                return Err(Error::InvalidSignal(format!("breakpoint {i} is not finite")));
            }
            if t < 0.0 || t >= period {
                return Err(Error::InvalidSignal(format!(
                    "breakpoint time {t} outside [0, {period})"
                )));
            }
            if i > 0 && t <= points[i - 1].0 {
                return Err(Error::InvalidSignal("breakpoint times must increase strictly".into()));
            }
        }
        Ok(Self { period, kind, points })
    }

    pub fn piecewise_linear(period: f64, points: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(period, SignalKind::PiecewiseLinear, points)
    }

    pub fn piecewise_constant(period: f64, points: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(period, SignalKind::PiecewiseConstant, points)
    }

    /// Constant signal.
    ///
    /// # Panics
    /// If `period` is not positive and finite.
    pub fn constant(period: f64, value: f64) -> Self {
        Self::piecewise_linear(period, alloc::vec![(0.0, value)]).expect("positive period")
    }

    /// Triangle wave rising linearly from `low` at `t = 0` to `high` at
    /// `t = period / 2` and back.
    ///
    /// # Panics
    /// If `period` is not positive and finite.
    pub fn triangle(period: f64, low: f64, high: f64) -> Self {
        Self::piecewise_linear(period, alloc::vec![(0.0, low), (period / 2.0, high)])
            .expect("positive period")
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn kind(&self) -> SignalKind {
        self.kind
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Reduce `t` into `[0, period)` using the floor convention.
    pub fn phase(&self, t: f64) -> f64 {
        let q = libm::floor(t / self.period);
        let mut tau = t - q * self.period;
        if tau >= self.period || tau < 0.0 {
            tau = 0.0;
        }
        // Times a hair below a full period belong to the next one.
        if self.period - tau <= SNAP * self.period {
            tau = 0.0;
        }
        tau
    }

    pub fn eval(&self, t: f64) -> f64 {
        let tau = self.phase(t);
        let pts = &self.points;
        let snap = SNAP * self.period;
        // Index of the last breakpoint at or before tau (with snapping).
        let idx = pts.iter().rposition(|&(tb, _)| tb <= tau + snap);
        match self.kind {
            SignalKind::PiecewiseConstant => match idx {
                Some(i) => pts[i].1,
                None => pts[pts.len() - 1].1,
            },
            SignalKind::PiecewiseLinear => {
                if pts.len() == 1 {
                    return pts[0].1;
                }
                let (a, b) = match idx {
                    Some(i) if i + 1 < pts.len() => (pts[i], pts[i + 1]),
                    Some(i) => (pts[i], (pts[0].0 + self.period, pts[0].1)),
                    None => {
                        let last = pts[pts.len() - 1];
                        ((last.0 - self.period, last.1), pts[0])
                    }
                };
                if (tau - a.0).abs() <= snap {
                    return a.1;
                }
                let s = (tau - a.0) / (b.0 - a.0);
                a.1 + s * (b.1 - a.1)
            }
        }
    }

    /// Maximum absolute slope over all segments, including the wrap segment.
    pub fn lipschitz_constant(&self) -> Result<f64> {
        match self.kind {
            SignalKind::PiecewiseConstant => {
                let first = self.points[0].1;
                if self.points.iter().all(|&(_, v)| v == first) {
                    Ok(0.0)
                } else {
                    Err(Error::NotLipschitz)
                }
            }
            SignalKind::PiecewiseLinear => Ok(self
                .segments()
                .map(|((t0, v0), (t1, v1))| ((v1 - v0) / (t1 - t0)).abs())
                .fold(0.0, f64::max)),
        }
    }

    /// Consecutive breakpoint pairs, the last one wrapping into the next period.
    fn segments(&self) -> impl Iterator<Item = ((f64, f64), (f64, f64))> + '_ {
        let n = self.points.len();
        (0..n).map(move |i| {
            let a = self.points[i];
            let b = if i + 1 < n {
                self.points[i + 1]
            } else {
                (self.points[0].0 + self.period, self.points[0].1)
            };
            (a, b)
        })
    }

    pub fn min_value(&self) -> f64 {
        self.points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Whether every breakpoint lands on the grid `t0 + j·step`.
    pub fn aligned_with(&self, t0: f64, step: f64) -> bool {
        self.points.iter().all(|&(tb, _)| {
            let r = (tb - t0) / step;
            (r - libm::round(r)).abs() <= 1e-7
        })
    }

    /// `constant + Σ coeff_i · s_i` for piecewise-linear signals sharing one
    /// period; the result carries the union of all breakpoints and is exact.
    pub fn linear_combination(constant: f64, terms: &[(f64, &PeriodicSignal)]) -> Result<Self> {
        let Some(first) = terms.first() else {
            return Err(Error::InvalidSignal("empty combination".into()));
        };
        let period = first.1.period;
        let mut times: Vec<f64> = Vec::new();
        for (_, s) in terms {
            if s.kind != SignalKind::PiecewiseLinear {
                return Err(Error::InvalidSignal(
                    "only piecewise-linear signals can be combined".into(),
                ));
            }
            if (s.period - period).abs() > 1e-12 * period {
                return Err(Error::InvalidSignal("signals have different periods".into()));
            }
            times.extend(s.points.iter().map(|p| p.0));
        }
        times.sort_by(f64::total_cmp);
        times.dedup_by(|a, b| (*a - *b).abs() <= SNAP * period);
        let points = times
            .into_iter()
            .map(|t| {
                let v = constant + terms.iter().map(|(c, s)| c * s.eval(t)).sum::<f64>();
                (t, v)
            })
            .collect();
        Self::piecewise_linear(period, points)
    }
}
