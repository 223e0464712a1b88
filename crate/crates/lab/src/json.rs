//! JSON forms of signals, polyhedra, problems, gaits and reports.

use polysweep_core::crawler::{Gait, UniquenessReport, VelocityEstimate};
use polysweep_core::scenarios::{Scenario, System};
use polysweep_core::sweeping::{Classification, ConvergenceReport};
use polysweep_core::{MovingPolyhedron, PeriodicSignal, SignalKind, SweepingProblem};
use serde::{Deserialize, Serialize};

use crate::LabError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KindJson {
    #[serde(rename = "pl")]
    PiecewiseLinear,
    #[serde(rename = "pc")]
    PiecewiseConstant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalJson {
    pub period: f64,
    pub kind: KindJson,
    pub points: Vec<[f64; 2]>,
}

impl From<&PeriodicSignal> for SignalJson {
    fn from(s: &PeriodicSignal) -> Self {
        Self {
            period: s.period(),
            kind: match s.kind() {
                SignalKind::PiecewiseLinear => KindJson::PiecewiseLinear,
                SignalKind::PiecewiseConstant => KindJson::PiecewiseConstant,
            },
            points: s.points().iter().map(|&(t, v)| [t, v]).collect(),
        }
    }
}

impl TryFrom<&SignalJson> for PeriodicSignal {
    type Error = LabError;

    fn try_from(s: &SignalJson) -> Result<Self, LabError> {
        let kind = match s.kind {
            KindJson::PiecewiseLinear => SignalKind::PiecewiseLinear,
            KindJson::PiecewiseConstant => SignalKind::PiecewiseConstant,
        };
        Ok(PeriodicSignal::new(s.period, kind, s.points.iter().map(|p| (p[0], p[1])).collect())?)
    }
}

fn signals(list: &[SignalJson]) -> Result<Vec<PeriodicSignal>, LabError> {
    list.iter().map(PeriodicSignal::try_from).collect()
}

fn signal_list(list: &[PeriodicSignal]) -> Vec<SignalJson> {
    list.iter().map(SignalJson::from).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyhedronJson {
    pub n: usize,
    pub normals: Vec<Vec<f64>>,
    pub offsets: Vec<SignalJson>,
}

impl From<&MovingPolyhedron> for PolyhedronJson {
    fn from(p: &MovingPolyhedron) -> Self {
        Self { n: p.dim(), normals: p.normals().to_vec(), offsets: signal_list(p.offsets()) }
    }
}

impl TryFrom<&PolyhedronJson> for MovingPolyhedron {
    type Error = LabError;

    fn try_from(p: &PolyhedronJson) -> Result<Self, LabError> {
        if let Some(row) = p.normals.iter().find(|row| row.len() != p.n) {
            return Err(LabError::Config(format!(
                "normal of length {} in a polyhedron of dimension {}",
                row.len(),
                p.n
            )));
        }
        Ok(MovingPolyhedron::new(p.normals.clone(), signals(&p.offsets)?)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemJson {
    pub set: PolyhedronJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<Vec<SignalJson>>,
}

impl From<&SweepingProblem> for ProblemJson {
    fn from(p: &SweepingProblem) -> Self {
        Self { set: p.set().into(), drift: p.drift().map(signal_list) }
    }
}

impl TryFrom<&ProblemJson> for SweepingProblem {
    type Error = LabError;

    fn try_from(p: &ProblemJson) -> Result<Self, LabError> {
        let set = MovingPolyhedron::try_from(&p.set)?;
        let drift = p.drift.as_deref().map(signals).transpose()?;
        Ok(SweepingProblem::new(set, drift)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaitJson {
    #[serde(rename = "N")]
    pub blocks: usize,
    #[serde(rename = "T")]
    pub period: f64,
    pub k: f64,
    #[serde(rename = "L")]
    pub rest_lengths: Vec<SignalJson>,
    pub mu_plus: Vec<SignalJson>,
    pub mu_minus: Vec<SignalJson>,
}

impl From<&Gait> for GaitJson {
    fn from(g: &Gait) -> Self {
        Self {
            blocks: g.blocks(),
            period: g.period(),
            k: g.stiffness(),
            rest_lengths: signal_list(g.rest_lengths()),
            mu_plus: signal_list(g.mu_plus()),
            mu_minus: signal_list(g.mu_minus()),
        }
    }
}

impl TryFrom<&GaitJson> for Gait {
    type Error = LabError;

    fn try_from(g: &GaitJson) -> Result<Self, LabError> {
        if g.mu_plus.len() != g.blocks {
            return Err(LabError::Config(format!(
                "N = {} but {} forward friction coefficients",
                g.blocks,
                g.mu_plus.len()
            )));
        }
        Ok(Gait::new(
            g.period,
            g.k,
            signals(&g.rest_lengths)?,
            signals(&g.mu_plus)?,
            signals(&g.mu_minus)?,
        )?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassificationJson {
    FiniteTime { period: usize },
    Geometric { ratio: f64 },
    Undetermined,
}

impl From<Classification> for ClassificationJson {
    fn from(c: Classification) -> Self {
        match c {
            Classification::FiniteTime { period } => Self::FiniteTime { period },
            Classification::Geometric { ratio } => Self::Geometric { ratio },
            Classification::Undetermined => Self::Undetermined,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceJson {
    pub d_sup: Vec<f64>,
    pub d_w12: Vec<f64>,
    pub classification: ClassificationJson,
    pub residual: f64,
}

impl From<&ConvergenceReport> for ConvergenceJson {
    fn from(r: &ConvergenceReport) -> Self {
        Self {
            d_sup: r.d_sup.clone(),
            d_w12: r.d_w12.clone(),
            classification: r.classification.into(),
            residual: r.residual,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityJson {
    pub v0: f64,
    pub per_period: Vec<f64>,
    pub margin: f64,
    pub converged: bool,
    /// `v0` of every start, in order.
    pub starts: Vec<f64>,
    /// `max − min` over `starts`.
    pub spread: f64,
}

impl VelocityJson {
    pub fn new(estimates: &[VelocityEstimate], margin: f64) -> Self {
        let first = &estimates[0];
        let starts: Vec<f64> = estimates.iter().map(|e| e.v0).collect();
        let hi = starts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = starts.iter().copied().fold(f64::INFINITY, f64::min);
        Self {
            v0: first.v0,
            per_period: first.per_period.clone(),
            margin,
            converged: estimates.iter().all(|e| e.converged),
            starts,
            spread: hi - lo,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginJson {
    pub min_margin: f64,
    pub worst_time: f64,
    pub worst_subset: Vec<usize>,
    pub zero_fraction: f64,
    pub accepted: bool,
}

impl MarginJson {
    pub fn new(r: &UniquenessReport, accepted: bool) -> Self {
        Self {
            min_margin: r.min_margin,
            worst_time: r.worst_time,
            worst_subset: r.worst_subset.clone(),
            zero_fraction: r.zero_fraction,
            accepted,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemJson {
    Sweeping { problem: ProblemJson },
    Crawler { gait: GaitJson },
}

/// Export form of a catalog entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioJson {
    pub name: String,
    pub system: SystemJson,
    pub periods: usize,
    pub steps: usize,
    pub start: Vec<f64>,
}

impl From<&Scenario> for ScenarioJson {
    fn from(s: &Scenario) -> Self {
        Self {
            name: s.name.clone(),
            system: match &s.system {
                System::Sweeping(p) => SystemJson::Sweeping { problem: p.into() },
                System::Crawler(g) => SystemJson::Crawler { gait: g.into() },
            },
            periods: s.periods,
            steps: s.steps_per_period,
            start: s.start.clone(),
        }
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_pretty<T: Serialize>(value: &T) -> Result<String, LabError> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}
