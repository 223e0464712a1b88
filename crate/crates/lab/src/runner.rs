//! Executes a [`RunConfig`] and writes its reports.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;

use polysweep_core::crawler::{self, CrawlerOptions, CrawlerRun, Gait};
use polysweep_core::scenarios::{self, System};
use polysweep_core::sweeping::{self, Classification, ClassifyOptions, ConvergenceReport, Trajectory};
use polysweep_core::{Error, FrozenPolyhedron, SweepingProblem, Tolerances};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{Report, RunConfig};
use crate::json::{self, ConvergenceJson, MarginJson, VelocityJson};
use crate::{table, LabError};

const DEFAULT_PERIODS: usize = 10;
const DEFAULT_STEPS: usize = 1000;
const MAX_REJECTIONS: usize = 1_000_000;

/// A configuration with its system built and its starts drawn.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub name: String,
    pub system: System,
    pub periods: usize,
    pub steps: usize,
    pub starts: Vec<Vec<f64>>,
}

fn gait_rest_start(g: &Gait, t0: f64) -> Vec<f64> {
    let z: Vec<f64> = g.rest_lengths().iter().map(|l| l.eval(t0)).collect();
    crawler::compose(0.0, &z)
}

/// Uniform sample of a bounded polyhedron by rejection in its bounding box.
pub fn sample_polyhedron(set: &FrozenPolyhedron, rng: &mut ChaCha8Rng) -> Result<Vec<f64>, LabError> {
    let (lo, hi) = set.bounding_box(1e-9)?;
    for _ in 0..MAX_REJECTIONS {
        let z: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| rng.gen_range(*a..=*b)).collect();
        if set.contains(&z, 0.0) {
            return Ok(z);
        }
    }
    Err(LabError::Config("initial set too thin to sample".into()))
}

/// Random crawler configuration with mean 0 and `−k·π_Z(x)` uniform in `K(t0)`.
pub fn sample_gait_start(g: &Gait, t0: f64, rng: &mut ChaCha8Rng) -> Result<Vec<f64>, LabError> {
    let k_set = crawler::reduced_set(g)?.freeze(t0);
    let w = sample_polyhedron(&k_set, rng)?;
    let z: Vec<f64> = w.iter().map(|v| -v / g.stiffness()).collect();
    Ok(crawler::compose(0.0, &z))
}

pub fn resolve(cfg: &RunConfig) -> Result<Resolved, LabError> {
    cfg.validate()?;
    let (name, system, periods, steps, default_start) = if let Some(name) = &cfg.scenario {
        let s = scenarios::scenario_by_name(name).map_err(|e| LabError::Config(e.to_string()))?;
        (s.name, s.system, s.periods, s.steps_per_period, Some(s.start))
    } else if let Some(p) = &cfg.problem {
        let problem = SweepingProblem::try_from(p)?;
        ("problem".to_string(), System::Sweeping(problem), DEFAULT_PERIODS, DEFAULT_STEPS, None)
    } else {
        let g = Gait::try_from(cfg.gait.as_ref().expect("validated"))?;
        ("gait".to_string(), System::Crawler(g), DEFAULT_PERIODS, DEFAULT_STEPS, None)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut starts = cfg.starts.clone();
    for _ in 0..cfg.random_starts {
        starts.push(match &system {
            System::Sweeping(p) => sample_polyhedron(&p.set().freeze(cfg.t0), &mut rng)?,
            System::Crawler(g) => sample_gait_start(g, cfg.t0, &mut rng)?,
        });
    }
    if starts.is_empty() {
        starts.push(match (&system, default_start) {
            (System::Crawler(g), _) => gait_rest_start(g, cfg.t0),
            (System::Sweeping(_), Some(s)) if cfg.t0 == 0.0 => s,
            (System::Sweeping(p), _) => sample_polyhedron(&p.set().freeze(cfg.t0), &mut rng)?,
        });
    }
    Ok(Resolved {
        name,
        system,
        periods: cfg.periods.unwrap_or(periods),
        steps: cfg.steps.unwrap_or(steps),
        starts,
    })
}

fn tolerances(cfg: &RunConfig) -> Tolerances {
    Tolerances { tol: cfg.tol, ..Tolerances::default() }
}

fn classify_options(cfg: &RunConfig) -> ClassifyOptions {
    ClassifyOptions { tol_ft: cfg.tol_ft, ..ClassifyOptions::default() }
}

/// Convergence report; short runs are reported as undetermined.
fn convergence(traj: &Trajectory, opts: &ClassifyOptions) -> Result<ConvergenceReport, LabError> {
    if traj.periods() < 2 {
        return Err(Error::InsufficientPeriods { needed: 2, have: traj.periods() }.into());
    }
    match sweeping::convergence_report(traj, opts) {
        Err(Error::InsufficientPeriods { .. }) => {
            let cycle = sweeping::estimate_limit_cycle(traj)?;
            Ok(ConvergenceReport {
                d_sup: sweeping::sup_distances(traj),
                d_w12: sweeping::w12_distances(traj),
                classification: Classification::Undetermined,
                residual: cycle.residual,
                cycle: cycle.window,
            })
        }
        other => Ok(other?),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareJson {
    pub periods: usize,
    pub steps: usize,
    pub sup_distance: f64,
    pub v0_reduced: f64,
    pub v0_oracle: f64,
}

#[derive(Debug, Clone, Default)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub convergence: Option<ConvergenceJson>,
    pub velocity: Option<VelocityJson>,
    pub compare: Option<CompareJson>,
    pub summary: String,
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn text(&mut self, name: &str, contents: &str) -> Result<(), LabError> {
        let path = self.dir.join(name);
        fs::write(&path, contents)?;
        self.files.push(path);
        Ok(())
    }

    fn csv<F>(&mut self, name: &str, write: F) -> Result<(), LabError>
    where
        F: FnOnce(BufWriter<File>) -> Result<(), LabError>,
    {
        let path = self.dir.join(name);
        write(BufWriter::new(File::create(&path)?))?;
        self.files.push(path);
        Ok(())
    }
}

fn classification_line(c: Classification) -> String {
    match c {
        Classification::FiniteTime { period } => format!("finite-time (periodic from window {period})"),
        Classification::Geometric { ratio } => format!("geometric (ratio {ratio:.6})"),
        Classification::Undetermined => "undetermined".into(),
    }
}

pub fn compare_gait(
    g: &Gait,
    start: &[f64],
    t0: f64,
    periods: usize,
    steps: usize,
    cfg: &RunConfig,
    reduced: Option<&CrawlerRun>,
) -> Result<CompareJson, LabError> {
    let opts = CrawlerOptions { tols: tolerances(cfg), ..CrawlerOptions::default() };
    let owned;
    let run = match reduced {
        Some(r) => r,
        None => {
            owned = crawler::simulate_reduced(g, start, t0, periods, steps, &opts)?;
            &owned
        }
    };
    let oracle = crawler::incremental_oracle(g, start, t0, periods, steps, cfg.tol)?;
    let oy: Vec<f64> = oracle.iter().map(|x| crawler::mean(x)).collect();
    let v = |y: &[f64]| crawler::estimate_velocity(y, steps, g.period(), cfg.tol_v).map(|e| e.v0);
    Ok(CompareJson {
        periods,
        steps,
        sup_distance: crawler::sup_distance(&run.x, &oracle),
        v0_reduced: v(&run.y).unwrap_or(f64::NAN),
        v0_oracle: v(&oy).unwrap_or(f64::NAN),
    })
}

/// Run the configuration and write the requested reports into `cfg.out`.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome, LabError> {
    let r = resolve(cfg)?;
    fs::create_dir_all(&cfg.out)?;
    let mut out = Writer { dir: cfg.out.clone(), files: Vec::new() };
    let mut outcome = RunOutcome::default();
    let tols = tolerances(cfg);
    let copts = classify_options(cfg);
    let mut summary = String::new();
    writeln!(summary, "system: {}", r.name).ok();
    writeln!(summary, "grid: t0 = {}, periods = {}, steps per period = {}", cfg.t0, r.periods, r.steps).ok();
    writeln!(summary, "seed: {}", cfg.seed).ok();
    writeln!(summary, "starts: {}", r.starts.len()).ok();

    match &r.system {
        System::Sweeping(problem) => {
            let mut first: Option<(Trajectory, ConvergenceReport)> = None;
            for (i, z0) in r.starts.iter().enumerate() {
                let traj = sweeping::simulate(problem, z0, cfg.t0, r.periods, r.steps, &tols)?;
                let report = convergence(&traj, &copts)?;
                writeln!(
                    summary,
                    "start {i}: {:?} -> {}, residual {:.3e}",
                    z0,
                    classification_line(report.classification),
                    report.residual
                )
                .ok();
                if first.is_none() {
                    first = Some((traj, report));
                }
            }
            let (traj, report) = first.expect("at least one start");
            if cfg.wants(Report::Trajectory) {
                out.csv("trajectory.csv", |w| table::write_trajectory(&traj, w))?;
            }
            let conv = ConvergenceJson::from(&report);
            if cfg.wants(Report::Convergence) {
                out.text("convergence.json", &json::to_pretty(&conv)?)?;
            }
            outcome.convergence = Some(conv);
        }
        System::Crawler(g) => {
            if r.periods < 3 {
                return Err(Error::InsufficientPeriods { needed: 3, have: r.periods }.into());
            }
            let opts = CrawlerOptions { tols, ..CrawlerOptions::default() };
            let mut runs = Vec::with_capacity(r.starts.len());
            let mut estimates = Vec::with_capacity(r.starts.len());
            for x0 in &r.starts {
                let run = crawler::simulate_reduced(g, x0, cfg.t0, r.periods, r.steps, &opts)?;
                estimates.push(crawler::estimate_velocity(&run.y, r.steps, g.period(), cfg.tol_v)?);
                runs.push(run);
            }
            let margin = runs[0].uniqueness.min_margin;
            if runs[0].uniqueness.zero_fraction > 0.0 {
                writeln!(
                    summary,
                    "warning: uniqueness margin vanishes on {:.3e} of the grid",
                    runs[0].uniqueness.zero_fraction
                )
                .ok();
            }
            let vel = VelocityJson::new(&estimates, margin);
            writeln!(summary, "margin: {margin}").ok();
            writeln!(summary, "v0: {} (spread over starts {:.3e}, converged {})", vel.v0, vel.spread, vel.converged)
                .ok();
            let report = convergence(&runs[0].w, &copts)?;
            writeln!(summary, "shape: {}, residual {:.3e}", classification_line(report.classification), report.residual)
                .ok();
            if cfg.wants(Report::Trajectory) {
                out.csv("trajectory.csv", |w| table::write_trajectory(&runs[0].w, w))?;
                out.csv("motion.csv", |w| table::write_motion(&runs[0], w))?;
            }
            let conv = ConvergenceJson::from(&report);
            if cfg.wants(Report::Convergence) {
                out.text("convergence.json", &json::to_pretty(&conv)?)?;
            }
            if cfg.wants(Report::Velocity) {
                out.text("velocity.json", &json::to_pretty(&vel)?)?;
            }
            if cfg.compare {
                let cmp = compare_gait(g, &r.starts[0], cfg.t0, r.periods, r.steps, cfg, Some(&runs[0]))?;
                writeln!(summary, "oracle sup-distance: {:.3e}", cmp.sup_distance).ok();
                out.text("compare.json", &json::to_pretty(&cmp)?)?;
                outcome.compare = Some(cmp);
            }
            outcome.convergence = Some(conv);
            outcome.velocity = Some(vel);
        }
    }
    if cfg.wants(Report::Summary) {
        out.text("summary.txt", &summary)?;
    }
    outcome.files = out.files;
    outcome.summary = summary;
    Ok(outcome)
}

/// Uniqueness margin of the configured gait on one period of the run grid.
pub fn check_gait(cfg: &RunConfig) -> Result<MarginJson, LabError> {
    let r = resolve(cfg)?;
    let System::Crawler(g) = &r.system else {
        return Err(LabError::Config("check-gait needs a gait".into()));
    };
    let h = g.period() / r.steps as f64;
    let times = (0..r.steps).map(|k| cfg.t0 + k as f64 * h);
    let report = crawler::check_gait_uniqueness(g, times, cfg.tol)?;
    let accepted = report.zero_fraction <= CrawlerOptions::default().max_zero_fraction;
    Ok(MarginJson::new(&report, accepted))
}

/// Reduced pipeline against incremental minimization from the first start.
pub fn compare(cfg: &RunConfig) -> Result<CompareJson, LabError> {
    let r = resolve(cfg)?;
    let System::Crawler(g) = &r.system else {
        return Err(LabError::Config("compare needs a gait".into()));
    };
    compare_gait(g, &r.starts[0], cfg.t0, r.periods, r.steps, cfg, None)
}
