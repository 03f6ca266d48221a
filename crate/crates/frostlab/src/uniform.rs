//! Uniform branching structure.
//!
//! A set at scale `Δ^n` is uniform when every `Δ^j`-cube meeting it has the
//! same number of `Δ^{j+1}`-children. Extraction pigeonholes a large uniform
//! subset out of an arbitrary set; the branching function turns the counts
//! into a piecewise-linear profile; the scale selector finds the indices at
//! which renormalized pieces keep a prescribed spread, and certifies each one
//! instead of trusting the selection argument.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::dyadic::{window_constant_bound, CubeSet, DeltaMeasure, DyadicCube, WINDOW_SLACK};
use crate::{domain, precondition, FrostError, Result};

/// Branching functions of planar sets are `AMBIENT_DIM`-Lipschitz per step.
pub const AMBIENT_DIM: f64 = 2.0;

/// Cube set at scale `Δ^n`, `Δ = 2^-T`, with exactly constant branching:
/// every `Δ^j`-cube meeting the set has `N_j` children at scale `Δ^{j+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformSet {
    cubes: CubeSet,
    ratio_log2: u32,
    counts: Vec<u64>,
}

impl UniformSet {
    /// Verifies the constant-branching invariant level by level and records
    /// the counts. Fails with a certification error naming the first level
    /// where two parents disagree.
    pub fn new(cubes: CubeSet, ratio_log2: u32) -> Result<Self> {
        if ratio_log2 == 0 {
            return domain("scale ratio 2^-T needs T >= 1");
        }
        if cubes.level() % ratio_log2 != 0 {
            return domain(format!(
                "set level {} is not a multiple of the ratio exponent {ratio_log2}",
                cubes.level()
            ));
        }
        let steps = (cubes.level() / ratio_log2) as usize;
        let mut counts = Vec::with_capacity(steps);
        for j in 0..steps {
            let child_shift = cubes.level() - ratio_log2 * (j as u32 + 1);
            let mut children: Vec<(i64, i64)> = cubes
                .cells()
                .iter()
                .map(|&(x, y)| (x >> child_shift, y >> child_shift))
                .collect();
            children.sort_unstable();
            children.dedup();
            let mut per_parent: BTreeMap<(i64, i64), u64> = BTreeMap::new();
            for &(cx, cy) in &children {
                *per_parent
                    .entry((cx >> ratio_log2, cy >> ratio_log2))
                    .or_insert(0) += 1;
            }
            let mut values = per_parent.values();
            let first = values.next().copied().unwrap_or(0);
            if let Some((q, &c)) = per_parent.iter().find(|(_, &c)| c != first) {
                return Err(FrostError::Certification(format!(
                    "branching at step {j} is not constant: parent {q:?} has {c} children, expected {first}"
                )));
            }
            counts.push(first);
        }
        Ok(UniformSet {
            cubes,
            ratio_log2,
            counts,
        })
    }

    pub fn cubes(&self) -> &CubeSet {
        &self.cubes
    }

    /// `T` with `Δ = 2^-T`.
    pub fn ratio_log2(&self) -> u32 {
        self.ratio_log2
    }

    pub fn ratio(&self) -> f64 {
        (0.5f64).powi(self.ratio_log2 as i32)
    }

    /// Number of branching steps `n`; the cubes live at scale `Δ^n`.
    pub fn steps(&self) -> usize {
        self.counts.len()
    }

    pub fn branching_counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }
}

/// Keeps a uniform subset of `P` of size at least `(2T)^-n |P|`.
///
/// Levels are processed finest first, so when step `j` is bucketed every
/// deeper level is already uniform and all children of a parent carry the
/// same number of surviving leaves. Parents are then classed by
/// `floor(log2(child count))`; keeping the class with the largest trimmed
/// mass and cutting each member down to the class minimum loses at most half
/// of that class, which is where the `(2T)^-n` accounting comes from. The
/// bound is re-checked in exact integer arithmetic before returning.
///
/// An empty input produces an empty uniform set, not an error.
pub fn extract_uniform_subset(p: &CubeSet, ratio_log2: u32, steps: usize) -> Result<UniformSet> {
    if ratio_log2 == 0 {
        return domain("scale ratio 2^-T needs T >= 1");
    }
    if p.level() != ratio_log2 * steps as u32 {
        return domain(format!(
            "set level {} does not equal T*n = {}",
            p.level(),
            ratio_log2 * steps as u32
        ));
    }
    let level = p.level();
    if p.is_empty() {
        return UniformSet::new(CubeSet::from_cells(level, Vec::new())?, ratio_log2);
    }

    let mut cells: Vec<(i64, i64)> = p.cells().to_vec();
    for j in (0..steps).rev() {
        let child_shift = level - ratio_log2 * (j as u32 + 1);
        let mut by_child: BTreeMap<(i64, i64), Vec<(i64, i64)>> = BTreeMap::new();
        for &(x, y) in &cells {
            by_child
                .entry((x >> child_shift, y >> child_shift))
                .or_default()
                .push((x, y));
        }
        let mut by_parent: BTreeMap<(i64, i64), Vec<(i64, i64)>> = BTreeMap::new();
        for &child in by_child.keys() {
            by_parent
                .entry((child.0 >> ratio_log2, child.1 >> ratio_log2))
                .or_default()
                .push(child);
        }
        // class -> (min child count, parents); children per parent never
        // exceed 2^(2T), so there are at most 2T+1 classes.
        let mut classes: BTreeMap<u32, (u64, Vec<(i64, i64)>)> = BTreeMap::new();
        for (&q, ch) in &by_parent {
            let c = ch.len() as u64;
            let k = 63 - c.leading_zeros();
            let entry = classes.entry(k).or_insert((c, Vec::new()));
            entry.0 = entry.0.min(c);
            entry.1.push(q);
        }
        // Trimmed mass of a class is (class min) * (parents in it); ties go
        // to the finer branching. Ascending keys make max_by_key do both.
        let (&_, &(keep, ref parents)) = classes
            .iter()
            .max_by_key(|(_, (mn, ps))| mn * ps.len() as u64)
            .expect("nonempty set has at least one class");
        let mut next = Vec::with_capacity(cells.len());
        for q in parents {
            for child in by_parent[q].iter().take(keep as usize) {
                next.extend_from_slice(&by_child[child]);
            }
        }
        cells = next;
    }

    let out = CubeSet::from_cells(level, cells)?;
    let loss_cap = (2 * ratio_log2 as u128).pow(steps as u32);
    if (out.len() as u128) * loss_cap < p.len() as u128 {
        return Err(FrostError::Certification(format!(
            "extraction kept {} of {} cells, below the 1/{loss_cap} floor",
            out.len(),
            p.len()
        )));
    }
    UniformSet::new(out, ratio_log2)
}

/// Piecewise-linear `β` on breakpoints `0..n`: `β(0) = 0`, non-decreasing,
/// `AMBIENT_DIM`-Lipschitz per unit step.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchingFunction {
    values: Vec<f64>,
}

impl BranchingFunction {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return domain("branching function needs at least the base breakpoint");
        }
        if values[0] != 0.0 {
            return domain(format!("branching function starts at {}, not 0", values[0]));
        }
        for w in values.windows(2) {
            let inc = w[1] - w[0];
            if !(-1e-12..=AMBIENT_DIM + 1e-12).contains(&inc) {
                return domain(format!(
                    "step {inc} outside [0, {AMBIENT_DIM}]; branching is monotone and Lipschitz"
                ));
            }
        }
        Ok(BranchingFunction { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }

    /// Linear interpolation, clamped to the breakpoint range.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.steps();
        if x <= 0.0 {
            return self.values[0];
        }
        if x >= n as f64 {
            return self.values[n];
        }
        let j = x.floor() as usize;
        let frac = x - j as f64;
        self.values[j] * (1.0 - frac) + self.values[j + 1] * frac
    }

    /// The `[0,1]`-normalized profile `x = j/n, y = β(j)/n` that the good
    /// scale computation works on.
    pub fn normalized(&self) -> Result<PiecewiseLinear> {
        let n = self.steps();
        if n == 0 {
            return domain("cannot normalize a single-breakpoint branching function");
        }
        let xs = (0..=n).map(|j| j as f64 / n as f64).collect();
        let ys = self.values.iter().map(|&v| v / n as f64).collect();
        PiecewiseLinear::new(xs, ys)
    }
}

/// Branching function of a uniform set: increments are `log2(N_j) / T`, so
/// the endpoint value is `log2 |U| / T` by telescoping.
pub fn branching_function(u: &UniformSet) -> Result<BranchingFunction> {
    if u.is_empty() {
        return precondition("branching function of an empty set");
    }
    let t = u.ratio_log2() as f64;
    let mut values = Vec::with_capacity(u.steps() + 1);
    values.push(0.0);
    for &nj in u.branching_counts() {
        // Exact for powers of two, which is what extraction never produces
        // but hand-built uniform sets often are.
        let lg = if nj.is_power_of_two() {
            nj.trailing_zeros() as f64
        } else {
            (nj as f64).log2()
        };
        values.push(values.last().unwrap() + lg / t);
    }
    BranchingFunction::from_values(values)
}

/// Worst slack of `β(j) - β(a) >= t (j - a)` over breakpoints `j >= a`,
/// together with whether it stays within `eps * n`. The slack is never
/// negative since `j = a` contributes zero.
pub fn check_superlinear(
    beta: &BranchingFunction,
    t: f64,
    eps: f64,
    a: usize,
) -> Result<(bool, f64)> {
    if !(t > 0.0) || eps < 0.0 {
        return domain(format!("superlinearity check needs t > 0, eps >= 0, got ({t}, {eps})"));
    }
    let n = beta.steps();
    if a > n {
        return domain(format!("base index {a} beyond the last breakpoint {n}"));
    }
    let base = beta.values[a];
    let mut worst = 0.0f64;
    for (j, &v) in beta.values.iter().enumerate().skip(a) {
        worst = worst.max(t * (j - a) as f64 - (v - base));
    }
    Ok((worst <= eps * n as f64 + 1e-12, worst))
}

/// Piecewise-linear function on strictly increasing breakpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return domain("breakpoint and value lists must match and hold at least two nodes");
        }
        if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
            return domain("piecewise-linear data must be finite");
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return domain("breakpoints must increase strictly");
        }
        Ok(PiecewiseLinear { xs, ys })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.xs[0] {
            return self.ys[0];
        }
        let last = self.xs.len() - 1;
        if x >= self.xs[last] {
            return self.ys[last];
        }
        let i = self.xs.partition_point(|&u| u <= x) - 1;
        let w = (x - self.xs[i]) / (self.xs[i + 1] - self.xs[i]);
        self.ys[i] * (1.0 - w) + self.ys[i + 1] * w
    }
}

/// Good scales of a growth profile: closed intervals and their total length.
#[derive(Debug, Clone, PartialEq)]
pub struct GoodScales {
    /// Disjoint closed intervals in ascending order. Degenerate single
    /// points are kept: they still select an integer index.
    pub intervals: Vec<(f64, f64)>,
    pub measure: f64,
}

/// The set `G = {x in [0, gamma] : f(x) - tau x <= min_{y >= x} (f(y) - tau y)}`
/// for a `AMBIENT_DIM`-Lipschitz profile with `f(0) = 0` and
/// `f(x) >= t x - eps` on `[0,1]`.
///
/// `g = f - tau x` is piecewise linear, so one backward scan carrying the
/// running minimum (inclusive of the segment's right breakpoint) solves each
/// segment exactly; no discretization is involved. The returned measure is
/// checked against the `gamma (t-tau)^2 / (10 d^2)` floor the hypotheses
/// guarantee, and failing that floor is a certification error.
pub fn good_scales(
    f: &PiecewiseLinear,
    t: f64,
    tau: f64,
    gamma: f64,
    eps: f64,
) -> Result<GoodScales> {
    let d = AMBIENT_DIM;
    if !(0.0 < tau && tau < t) {
        return domain(format!("need 0 < tau < t, got tau = {tau}, t = {t}"));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return domain(format!("gamma {gamma} outside (0, 1]"));
    }
    if !(eps >= 0.0) {
        return domain(format!("eps {eps} negative"));
    }
    let xs = f.xs();
    let ys = f.ys();
    let m = xs.len() - 1;
    if xs[0] != 0.0 || (xs[m] - 1.0).abs() > 1e-12 {
        return precondition(format!("profile domain [{}, {}] is not [0, 1]", xs[0], xs[m]));
    }
    if ys[0].abs() > 1e-12 {
        return precondition(format!("f(0) = {} instead of 0", ys[0]));
    }
    for i in 0..m {
        let slope = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
        if slope.abs() > d + 1e-9 {
            return precondition(format!(
                "slope {slope} at x = {} breaks the {d}-Lipschitz hypothesis",
                xs[i]
            ));
        }
    }
    for i in 0..=m {
        if ys[i] < t * xs[i] - eps - 1e-12 {
            return precondition(format!(
                "growth deficit at x = {}: f = {} < t x - eps = {}",
                xs[i],
                ys[i],
                t * xs[i] - eps
            ));
        }
    }
    let budget = gamma * (t - tau) * (t - tau);
    if eps > budget / (4.0 * d) + 1e-15 {
        return precondition(format!(
            "eps {eps} exceeds the admissible budget {}",
            budget / (4.0 * d)
        ));
    }

    let g: Vec<f64> = (0..=m).map(|i| ys[i] - tau * xs[i]).collect();
    let mut raw: Vec<(f64, f64)> = Vec::new();
    raw.push((xs[m], xs[m])); // the right endpoint always qualifies
    let mut min_right = g[m];
    for i in (0..m).rev() {
        // min over [x_{i+1}, 1], right breakpoint included.
        min_right = min_right.min(g[i + 1]);
        let (a, b) = (g[i], g[i + 1]);
        let (x0, x1) = (xs[i], xs[i + 1]);
        if a <= min_right && b <= min_right {
            raw.push((x0, x1));
        } else if a <= min_right && b > min_right {
            let cut = x0 + (min_right - a) / (b - a) * (x1 - x0);
            raw.push((x0, cut));
        } else if a > min_right && b <= min_right {
            let cut = x1 - (min_right - b) / (a - b) * (x1 - x0);
            raw.push((cut, x1));
        }
        min_right = min_right.min(g[i]);
    }
    raw.reverse();

    let mut intervals: Vec<(f64, f64)> = Vec::new();
    for (a, b) in raw {
        let (a, b) = (a.max(0.0), b.min(gamma));
        if a > b {
            continue;
        }
        match intervals.last_mut() {
            Some(last) if a <= last.1 + 1e-15 => last.1 = last.1.max(b),
            _ => intervals.push((a, b)),
        }
    }
    let measure: f64 = intervals.iter().map(|(a, b)| b - a).sum();
    let floor = budget / (10.0 * d * d);
    if measure < floor - 1e-12 {
        return Err(FrostError::Certification(format!(
            "good set has measure {measure}, below the guaranteed {floor}"
        )));
    }
    Ok(GoodScales { intervals, measure })
}

/// Certification record for one candidate scale index.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleCertificate {
    pub index: usize,
    /// Cubes at scale `Δ^index` meeting the set, each renormalized and
    /// checked separately.
    pub cubes_checked: usize,
    pub worst_constant: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleSelection {
    /// Certified good indices, ascending.
    pub good: Vec<usize>,
    /// One record per candidate, including the dropped ones.
    pub certificates: Vec<ScaleCertificate>,
    /// Per-cell constant cap `WINDOW_SLACK * Δ^{-3d}`.
    pub constant_cap: f64,
    /// Floor `n γ (t-τ)² / (10 d²)` that `|good|` is certified against.
    pub required: f64,
    pub tau: f64,
    pub gamma: f64,
}

fn snap_to_integer(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() < 1e-9 {
        r
    } else {
        v
    }
}

/// Good scale indices of a uniform set, each certified by renormalizing
/// every cube at that scale and bounding its spread constant at exponent
/// `tau`.
///
/// The continuum good set comes from the branching profile with the measured
/// growth deficit (never smaller than the declared `eps`); indices are its
/// image under `x -> floor(n x)`. A candidate whose certification fails is
/// dropped with its record kept; if fewer than `n γ (t-τ)² / (10 d²)`
/// indices survive the whole selection fails.
pub fn select_scale_indices(
    u: &UniformSet,
    t: f64,
    tau: f64,
    gamma: f64,
    eps: f64,
) -> Result<ScaleSelection> {
    let d = AMBIENT_DIM;
    if u.is_empty() {
        return precondition("scale selection on an empty set");
    }
    if !(0.0 < tau && tau < t && t <= d) {
        return domain(format!("need 0 < tau < t <= {d}, got ({tau}, {t})"));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return domain(format!("gamma {gamma} outside (0, 1]"));
    }
    if !(eps > 0.0) {
        return domain(format!("eps {eps} must be positive"));
    }
    let budget = gamma * (t - tau) * (t - tau);
    if eps > budget / (8.0 * d) + 1e-15 {
        return precondition(format!(
            "eps {eps} exceeds the selection budget {}",
            budget / (8.0 * d)
        ));
    }
    let n = u.steps();
    if n == 0 {
        return precondition("uniform set with no branching steps");
    }
    // Spread certificate for the input itself. The window bound can sit a
    // bounded factor above the ball constant, so the cap absorbs it.
    let global = window_constant_bound(u.cubes(), t)?;
    let global_cap = WINDOW_SLACK * u.cubes().delta().powf(-eps);
    if global > global_cap {
        return precondition(format!(
            "input spread constant {global} exceeds {global_cap}; not a (δ,{t})-set at this eps"
        ));
    }

    let beta = branching_function(u)?;
    let (_, slack) = check_superlinear(&beta, t, 0.0, 0)?;
    let eps_profile = eps.max(slack / n as f64);
    let scales = good_scales(&beta.normalized()?, t, tau, gamma, eps_profile)?;

    let j_cap = ((gamma * n as f64).floor() as usize).min(n);
    let candidates: Vec<usize> = (0..=j_cap)
        .filter(|&j| {
            scales.intervals.iter().any(|&(a, b)| {
                // [j/n, (j+1)/n) meets [a, b], with products snapped so a
                // degenerate endpoint cannot leak into the neighbor index.
                let lo = snap_to_integer(a * n as f64);
                let hi = snap_to_integer(b * n as f64);
                (j as f64) <= hi && ((j + 1) as f64) > lo
            })
        })
        .collect();

    let ratio_log2 = u.ratio_log2();
    let constant_cap = WINDOW_SLACK * (2.0f64).powi(3 * d as i32 * ratio_log2 as i32);
    let level = u.cubes().level();
    let mut certificates = Vec::with_capacity(candidates.len());
    for &j in &candidates {
        let shift = level - ratio_log2 * j as u32;
        let mut parents: Vec<(i64, i64)> = u
            .cubes()
            .cells()
            .iter()
            .map(|&(x, y)| (x >> shift, y >> shift))
            .collect();
        parents.sort_unstable();
        parents.dedup();
        let worst = parents
            .par_iter()
            .map(|&(qx, qy)| -> Result<f64> {
                let q = DyadicCube::unit(level - shift, qx, qy)?;
                window_constant_bound(&renormalize_cubes(u.cubes(), &q)?, tau)
            })
            .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))?;
        certificates.push(ScaleCertificate {
            index: j,
            cubes_checked: parents.len(),
            worst_constant: worst,
            passed: worst <= constant_cap,
        });
    }
    let good: Vec<usize> = certificates
        .iter()
        .filter(|c| c.passed)
        .map(|c| c.index)
        .collect();
    let required = n as f64 * budget / (10.0 * d * d);
    if (good.len() as f64) < required {
        let dropped: Vec<usize> = certificates
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.index)
            .collect();
        return Err(FrostError::Selection(format!(
            "{} certified indices, need at least {required:.4}; dropped {dropped:?}",
            good.len()
        )));
    }
    Ok(ScaleSelection {
        good,
        certificates,
        constant_cap,
        required,
        tau,
        gamma,
    })
}

/// Trace of `P` in `Q`, pushed forward by the map taking `Q` to the unit
/// square. The result lives at level `P.level - Q.level`.
pub fn renormalize_cubes(p: &CubeSet, q: &DyadicCube) -> Result<CubeSet> {
    if q.level > p.level() {
        return domain(format!(
            "cube level {} finer than the set level {}",
            q.level,
            p.level()
        ));
    }
    let shift = p.level() - q.level;
    let cells = p
        .cells()
        .iter()
        .copied()
        .filter(|&(x, y)| (x >> shift, y >> shift) == (q.x, q.y))
        .map(|(x, y)| (x - (q.x << shift), y - (q.y << shift)))
        .collect();
    CubeSet::from_cells(shift, cells)
}

/// Restriction of `m` to `Q`, pushed forward and renormalized to total mass
/// one. A cube carrying no mass is a degenerate input.
pub fn renormalize_measure(m: &DeltaMeasure, q: &DyadicCube) -> Result<DeltaMeasure> {
    if q.level > m.level() {
        return domain(format!(
            "cube level {} finer than the measure level {}",
            q.level,
            m.level()
        ));
    }
    let shift = m.level() - q.level;
    let atoms: Vec<((i64, i64), f64)> = m
        .atoms()
        .iter()
        .filter(|&&((x, y), _)| (x >> shift, y >> shift) == (q.x, q.y))
        .map(|&((x, y), w)| ((x - (q.x << shift), y - (q.y << shift)), w))
        .collect();
    let mass: f64 = atoms.iter().map(|&(_, w)| w).sum();
    if mass <= 0.0 {
        return precondition(format!(
            "cube ({}, {}) at level {} carries no mass",
            q.x, q.y, q.level
        ));
    }
    let out = DeltaMeasure::from_weights(
        shift,
        atoms.into_iter().map(|(c, w)| (c, w / mass)).collect(),
    )?;
    if (out.total() - 1.0).abs() > 1e-12 {
        return Err(FrostError::Certification(format!(
            "renormalized mass {} drifted from 1",
            out.total()
        )));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArithmeticProgression {
    pub start: i64,
    pub gap: i64,
    pub length: usize,
}

impl ArithmeticProgression {
    pub fn terms(&self) -> Vec<i64> {
        (0..self.length as i64).map(|i| self.start + i * self.gap).collect()
    }
}

/// Lexicographically first (by start, then gap) arithmetic progression of
/// the given length with gap at least `min_gap` inside `g`. Exhaustive over
/// all (start, gap) pairs; the sets this runs on are scale-index sets, so
/// quadratic search is plenty.
pub fn find_arithmetic_progression(
    g: &[i64],
    length: usize,
    min_gap: i64,
) -> Option<ArithmeticProgression> {
    if length == 0 || min_gap < 1 {
        return None;
    }
    let mut sorted = g.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let &max = sorted.last()?;
    for &start in &sorted {
        if length == 1 {
            return Some(ArithmeticProgression { start, gap: min_gap, length });
        }
        let max_gap = (max - start) / (length as i64 - 1);
        for gap in min_gap..=max_gap {
            if (1..length as i64).all(|i| sorted.binary_search(&(start + i * gap)).is_ok()) {
                return Some(ArithmeticProgression { start, gap, length });
            }
        }
    }
    None
}
