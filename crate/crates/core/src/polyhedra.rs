//! Moving polyhedra `C(t) = {z : ⟨b_i, z⟩ ≤ c_i(t)}` with fixed normals.
//!
//! A [`FrozenPolyhedron`] is the snapshot at one instant. Projection onto it is
//! exact: every subset of constraints with linearly independent normals is a
//! candidate active set, the equality-constrained projection is solved for
//! each, and the first candidate that is primal feasible with nonnegative
//! multipliers is the (unique) Euclidean projection. The cost is exponential in
//! the number of constraints, which is why `m` is capped.
//!
//! Faces, LICQ and vertex queries go through vertex enumeration, valid because
//! every polyhedron handled here is pointed (bounded, or at least with normals
//! spanning the space).

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{self, dot, norm};
use crate::signals::{PeriodicSignal, SignalKind};
use crate::{Error, Result};

/// Hard limit imposed by the bitmask representation of [`ActiveSet`].
pub const MAX_CONSTRAINTS: usize = 32;

/// Numerical knobs shared by membership, activity and projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub tol: f64,
    /// Projection refuses polyhedra with more constraints than this.
    pub max_constraints: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { tol: 1e-9, max_constraints: 24 }
    }
}

/// A set of constraint indices, stored as a bitmask.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActiveSet(u32);

impl ActiveSet {
    pub const EMPTY: ActiveSet = ActiveSet(0);

    pub fn from_bits(bits: u32) -> Self {
        ActiveSet(bits)
    }

    pub fn from_indices(indices: &[usize]) -> Self {
        let mut s = ActiveSet(0);
        for &i in indices {
            s.insert(i);
        }
        s
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn insert(&mut self, i: usize) {
        debug_assert!(i < MAX_CONSTRAINTS);
        self.0 |= 1 << i;
    }

    pub fn contains(self, i: usize) -> bool {
        i < MAX_CONSTRAINTS && self.0 & (1 << i) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset(self, other: ActiveSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn intersection(self, other: ActiveSet) -> ActiveSet {
        ActiveSet(self.0 & other.0)
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..MAX_CONSTRAINTS).filter(move |&i| self.0 & (1 << i) != 0)
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }
}

/// Euclidean projection together with its multipliers:
/// `p − point = Σ multipliers[i] · b_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub point: Vec<f64>,
    pub multipliers: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub point: Vec<f64>,
    pub active: ActiveSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LicqReport {
    pub holds: bool,
    /// A realized active set whose normals are linearly dependent.
    pub witness: Option<ActiveSet>,
}

fn check_normals(normals: &[Vec<f64>]) -> Result<usize> {
    let Some(first) = normals.first() else {
        return Err(Error::InvalidPolyhedron("at least one constraint is required".into()));
    };
    let n = first.len();
    if n == 0 {
        return Err(Error::InvalidPolyhedron("dimension must be positive".into()));
    }
    if normals.len() > MAX_CONSTRAINTS {
        return Err(Error::EnumerationCap { constraints: normals.len(), cap: MAX_CONSTRAINTS });
    }
    for (i, b) in normals.iter().enumerate() {
        if b.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: b.len() });
        }
        if !b.iter().all(|v| v.is_finite()) || norm(b) == 0.0 {
            return Err(Error::InvalidPolyhedron(format!("normal {i} is zero or not finite")));
        }
    }
    Ok(n)
}

/// Whether the normals positively span `R^n`, i.e. `0` is interior to their
/// convex hull. Equivalent to boundedness of every nonempty `{⟨b_i,z⟩ ≤ c_i}`.
pub fn positively_spanning(normals: &[Vec<f64>], tol: f64) -> bool {
    let Some(n) = normals.first().map(Vec::len) else {
        return false;
    };
    let rows: Vec<&[f64]> = normals.iter().map(Vec::as_slice).collect();
    if linalg::rank(&rows, n) < n {
        return false;
    }
    // The recession cone {d : ⟨b_i, d⟩ ≤ 0} is pointed; it is nontrivial iff it
    // has an extreme ray, cut out by n − 1 independent tight constraints.
    let mut bounded = true;
    linalg::for_each_combination(normals.len(), n - 1, |subset| {
        let sub: Vec<&[f64]> = subset.iter().map(|&i| rows[i]).collect();
        if let Some(d) = linalg::null_vector(&sub, n) {
            for sign in [1.0, -1.0] {
                if rows.iter().all(|b| sign * dot(b, &d) <= tol * norm(b)) {
                    bounded = false;
                }
            }
        }
        bounded
    });
    bounded
}

/// The polyhedron at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenPolyhedron {
    dim: usize,
    normals: Vec<Vec<f64>>,
    offsets: Vec<f64>,
}

impl FrozenPolyhedron {
    pub fn new(normals: Vec<Vec<f64>>, offsets: Vec<f64>) -> Result<Self> {
        let dim = check_normals(&normals)?;
        if offsets.len() != normals.len() {
            return Err(Error::DimensionMismatch { expected: normals.len(), got: offsets.len() });
        }
        if !offsets.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidPolyhedron("offsets must be finite".into()));
        }
        Ok(Self { dim, normals, offsets })
    }

    /// Axis-aligned box `lower ≤ z ≤ upper`; constraint `2i` is the upper
    /// bound of coordinate `i`, `2i + 1` the lower bound.
    pub fn from_box(lower: &[f64], upper: &[f64]) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), got: upper.len() });
        }
        let n = lower.len();
        let mut normals = Vec::with_capacity(2 * n);
        let mut offsets = Vec::with_capacity(2 * n);
        for i in 0..n {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            normals.push(e.clone());
            offsets.push(upper[i]);
            e[i] = -1.0;
            normals.push(e);
            offsets.push(-lower[i]);
        }
        Self::new(normals, offsets)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of constraints `m`.
    pub fn len(&self) -> usize {
        self.normals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.normals.is_empty()
    }

    pub fn normals(&self) -> &[Vec<f64>] {
        &self.normals
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    /// Slack `c_i − ⟨b_i, z⟩` of constraint `i`.
    pub fn slack(&self, i: usize, z: &[f64]) -> f64 {
        self.offsets[i] - dot(&self.normals[i], z)
    }

    fn check_dim(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: z.len() });
        }
        Ok(())
    }

    pub fn contains(&self, z: &[f64], tol: f64) -> bool {
        z.len() == self.dim && (0..self.len()).all(|i| self.slack(i, z) >= -tol)
    }

    /// Indices of the constraints holding with equality (up to `tol`).
    pub fn active_set(&self, z: &[f64], tol: f64) -> Result<ActiveSet> {
        self.check_dim(z)?;
        let mut active = ActiveSet::EMPTY;
        for i in 0..self.len() {
            let s = self.slack(i, z);
            if s < -tol {
                return Err(Error::NotMember { index: i, violation: -s });
            }
            if s <= tol {
                active.insert(i);
            }
        }
        Ok(active)
    }

    /// Euclidean projection of `p`, with multipliers.
    pub fn project(&self, p: &[f64], tols: &Tolerances) -> Result<Projection> {
        self.check_dim(p)?;
        let m = self.len();
        if m > tols.max_constraints {
            return Err(Error::EnumerationCap { constraints: m, cap: tols.max_constraints });
        }
        if self.contains(p, 0.0) {
            return Ok(Projection { point: p.to_vec(), multipliers: vec![0.0; m] });
        }
        let tol = tols.tol;
        let mut found: Option<Projection> = None;
        let mut best_violation = f64::INFINITY;
        for size in 1..=m.min(self.dim) {
            linalg::for_each_combination(m, size, |subset| {
                let rows: Vec<&[f64]> = subset.iter().map(|&i| self.normals[i].as_slice()).collect();
                let g = linalg::gram(&rows);
                let rhs: Vec<f64> =
                    subset.iter().map(|&i| dot(&self.normals[i], p) - self.offsets[i]).collect();
                let Some(lambda) = linalg::solve(&g, &rhs, size) else {
                    return true;
                };
                let mut violation = lambda.iter().fold(0.0_f64, |v, &l| v.max(-l));
                let mut point = p.to_vec();
                let mut multipliers = vec![0.0; m];
                for (&i, &l) in subset.iter().zip(&lambda) {
                    let l = l.max(0.0);
                    multipliers[i] = l;
                    linalg::axpy(&mut point, -l, &self.normals[i]);
                }
                for i in 0..m {
                    violation = violation.max(-self.slack(i, &point));
                }
                if violation <= tol {
                    found = Some(Projection { point, multipliers });
                    return false;
                }
                best_violation = best_violation.min(violation);
                true
            });
            if found.is_some() {
                break;
            }
        }
        match found {
            Some(p) => Ok(p),
            None if self.vertices(tol).is_empty() && self.spans() => Err(Error::Infeasible),
            None => Err(Error::ProjectionFailed { violation: best_violation }),
        }
    }

    /// The unique nonnegative coefficients `λ` with `v = Σ λ_i b_i` supported
    /// on the active set at `z`. Requires linearly independent active normals.
    pub fn decompose_normal(&self, z: &[f64], v: &[f64], tol: f64) -> Result<Vec<f64>> {
        self.check_dim(v)?;
        let active = self.active_set(z, tol)?;
        let idx = active.to_vec();
        let mut lambda = vec![0.0; self.len()];
        let vnorm = norm(v);
        if idx.is_empty() {
            if vnorm > tol {
                return Err(Error::NotInNormalCone { residual: vnorm, min_coefficient: 0.0 });
            }
            return Ok(lambda);
        }
        let rows: Vec<&[f64]> = idx.iter().map(|&i| self.normals[i].as_slice()).collect();
        if !linalg::independent(&rows, self.dim) {
            return Err(Error::LicqFailure { active: idx });
        }
        let g = linalg::gram(&rows);
        let rhs: Vec<f64> = rows.iter().map(|b| dot(b, v)).collect();
        let coeffs = linalg::solve(&g, &rhs, idx.len())
            .ok_or_else(|| Error::LicqFailure { active: idx.clone() })?;
        let mut recon = v.to_vec();
        for (b, &l) in rows.iter().zip(&coeffs) {
            linalg::axpy(&mut recon, -l, b);
        }
        let residual = norm(&recon);
        let min_coefficient = coeffs.iter().copied().fold(0.0, f64::min);
        if residual > tol * (1.0 + vnorm) || min_coefficient < -tol {
            return Err(Error::NotInNormalCone { residual, min_coefficient });
        }
        for (&i, &l) in idx.iter().zip(&coeffs) {
            lambda[i] = l.max(0.0);
        }
        Ok(lambda)
    }

    fn spans(&self) -> bool {
        let rows: Vec<&[f64]> = self.normals.iter().map(Vec::as_slice).collect();
        linalg::rank(&rows, self.dim) == self.dim
    }

    /// All vertices, each reported once with its full active set.
    pub fn vertices(&self, tol: f64) -> Vec<Vertex> {
        let n = self.dim;
        let mut out: Vec<Vertex> = Vec::new();
        linalg::for_each_combination(self.len(), n, |subset| {
            let a: Vec<f64> =
                subset.iter().flat_map(|&i| self.normals[i].iter().copied()).collect();
            let b: Vec<f64> = subset.iter().map(|&i| self.offsets[i]).collect();
            if let Some(point) = linalg::solve(&a, &b, n) {
                if let Ok(active) = self.active_set(&point, tol) {
                    if !out.iter().any(|v| v.active == active) {
                        out.push(Vertex { point, active });
                    }
                }
            }
            true
        });
        out
    }

    /// Nonempty vertex list or the reason there is none.
    fn pointed_vertices(&self, tol: f64) -> Result<Vec<Vertex>> {
        if !self.spans() {
            return Err(Error::InvalidPolyhedron("normals do not span the space".into()));
        }
        let v = self.vertices(tol);
        if v.is_empty() {
            return Err(Error::Infeasible);
        }
        Ok(v)
    }

    /// Linear independence of the normals on every realized active set.
    ///
    /// Every nonempty face of a pointed polyhedron contains a vertex whose
    /// active set includes the face's, so checking vertices is enough.
    pub fn check_licq(&self, tols: &Tolerances) -> Result<LicqReport> {
        if self.len() > tols.max_constraints {
            return Err(Error::EnumerationCap { constraints: self.len(), cap: tols.max_constraints });
        }
        for v in self.pointed_vertices(tols.tol)? {
            let rows: Vec<&[f64]> = v.active.iter().map(|i| self.normals[i].as_slice()).collect();
            if !linalg::independent(&rows, self.dim) {
                return Ok(LicqReport { holds: false, witness: Some(v.active) });
            }
        }
        Ok(LicqReport { holds: true, witness: None })
    }

    /// Every active set realized by some point of the polyhedron, `∅` included.
    pub fn enumerate_faces(&self, tols: &Tolerances) -> Result<Vec<ActiveSet>> {
        if self.len() > tols.max_constraints {
            return Err(Error::EnumerationCap { constraints: self.len(), cap: tols.max_constraints });
        }
        let verts = self.pointed_vertices(tols.tol)?;
        let mut faces = BTreeSet::new();
        for v in &verts {
            let members = v.active.to_vec();
            for mask in 0u64..(1u64 << members.len()) {
                let mut s = ActiveSet::EMPTY;
                for (j, &i) in members.iter().enumerate() {
                    if mask & (1 << j) != 0 {
                        s.insert(i);
                    }
                }
                // The face cut out by `s` is the hull of the vertices whose
                // active sets contain it; its relative interior is active
                // exactly on their common constraints.
                let face = verts
                    .iter()
                    .filter(|w| s.is_subset(w.active))
                    .fold(ActiveSet(u32::MAX), |acc, w| acc.intersection(w.active));
                faces.insert(face);
            }
        }
        Ok(faces.into_iter().collect())
    }

    /// Grid estimate of the reverse-triangle constant: the largest ratio
    /// `Σ λ_i |b_i| / |Σ λ_i b_i|` over faces and nonnegative `λ` on a simplex
    /// grid with `divisions` steps per axis.
    pub fn gamma_constant(&self, divisions: usize, tols: &Tolerances) -> Result<f64> {
        let licq = self.check_licq(tols)?;
        if let Some(w) = licq.witness {
            return Err(Error::LicqFailure { active: w.to_vec() });
        }
        let divisions = divisions.max(1);
        let mut gamma: f64 = 0.0;
        for face in self.enumerate_faces(tols)? {
            let idx = face.to_vec();
            if idx.is_empty() {
                continue;
            }
            let lengths: Vec<f64> = idx.iter().map(|&i| norm(&self.normals[i])).collect();
            for_each_composition(divisions, idx.len(), |parts| {
                let mut sum = vec![0.0; self.dim];
                let mut weighted = 0.0;
                for ((&i, &k), len) in idx.iter().zip(parts).zip(&lengths) {
                    let l = k as f64 / divisions as f64;
                    linalg::axpy(&mut sum, l, &self.normals[i]);
                    weighted += l * len;
                }
                let denom = norm(&sum);
                if denom > 0.0 {
                    gamma = gamma.max(weighted / denom);
                }
            });
        }
        Ok(gamma)
    }

    /// Componentwise bounds of the vertex set.
    pub fn bounding_box(&self, tol: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let verts = self.pointed_vertices(tol)?;
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for v in &verts {
            for (j, &x) in v.point.iter().enumerate() {
                lo[j] = lo[j].min(x);
                hi[j] = hi[j].max(x);
            }
        }
        Ok((lo, hi))
    }
}

/// All ways of writing `total` as an ordered sum of `parts` nonnegative integers.
fn for_each_composition(total: usize, parts: usize, mut f: impl FnMut(&[usize])) {
    fn rec(rest: usize, slot: usize, buf: &mut [usize], f: &mut dyn FnMut(&[usize])) {
        if slot + 1 == buf.len() {
            buf[slot] = rest;
            f(buf);
            return;
        }
        for k in 0..=rest {
            buf[slot] = k;
            rec(rest - k, slot + 1, buf, f);
        }
    }
    if parts == 0 {
        return;
    }
    let mut buf = vec![0; parts];
    rec(total, 0, &mut buf, &mut f);
}

/// A polyhedron whose faces translate periodically in time.
#[derive(Debug, Clone, PartialEq)]
pub struct MovingPolyhedron {
    dim: usize,
    normals: Vec<Vec<f64>>,
    offsets: Vec<PeriodicSignal>,
}

impl MovingPolyhedron {
    /// Checks shapes, a common period, piecewise-linear offsets and positive
    /// spanning of the normals (boundedness at every instant).
    pub fn new(normals: Vec<Vec<f64>>, offsets: Vec<PeriodicSignal>) -> Result<Self> {
        let dim = check_normals(&normals)?;
        if offsets.len() != normals.len() {
            return Err(Error::DimensionMismatch { expected: normals.len(), got: offsets.len() });
        }
        let period = offsets[0].period();
        for s in &offsets {
            if (s.period() - period).abs() > 1e-12 * period {
                return Err(Error::InvalidPolyhedron("offsets have different periods".into()));
            }
            if s.kind() != SignalKind::PiecewiseLinear {
                return Err(Error::InvalidPolyhedron(
                    "offsets must be piecewise linear (Lipschitz)".into(),
                ));
            }
        }
        if !positively_spanning(&normals, 1e-12) {
            return Err(Error::InvalidPolyhedron(
                "normals do not positively span the space (unbounded set)".into(),
            ));
        }
        Ok(Self { dim, normals, offsets })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.normals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.normals.is_empty()
    }

    pub fn period(&self) -> f64 {
        self.offsets[0].period()
    }

    pub fn normals(&self) -> &[Vec<f64>] {
        &self.normals
    }

    pub fn offsets(&self) -> &[PeriodicSignal] {
        &self.offsets
    }

    pub fn freeze(&self, t: f64) -> FrozenPolyhedron {
        FrozenPolyhedron {
            dim: self.dim,
            normals: self.normals.clone(),
            offsets: self.offsets.iter().map(|s| s.eval(t)).collect(),
        }
    }

    /// Nonemptiness at each of the given times.
    pub fn check_nonempty<I: IntoIterator<Item = f64>>(&self, times: I, tol: f64) -> Result<()> {
        for t in times {
            if self.freeze(t).vertices(tol).is_empty() {
                return Err(Error::EmptyAt { time: t });
            }
        }
        Ok(())
    }
}
