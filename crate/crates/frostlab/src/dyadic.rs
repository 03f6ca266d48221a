//! Dyadic grids on the unit square: cube sets, covering numbers, content by
//! tree DP, Frostman-type property checks, Riesz energy, subset extraction.
//!
//! Conventions used by every checker in this module:
//! * balls are Euclidean and open, with centers restricted to cube centers
//!   and radii restricted to dyadic values in [delta, 1];
//! * a cube counts towards `|S ∩ B(x,r)|` exactly when its center lies in
//!   the ball, and a measure weighs the ball by the atoms whose center lies
//!   in it.
//!
//! Restricting centers and radii distorts the optimal constant by at most an
//! absolute factor and keeps every check an exact finite computation: cube
//! centers live on the half-integer grid, so all distance comparisons are
//! integer arithmetic.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{domain, precondition, FrostError, Result};

/// Coordinates are kept in `i64` and squared distances in the same width;
/// levels beyond this would overflow the integer ball tests.
pub const MAX_LEVEL: u32 = 26;

/// `enumerate_cubes` walks the full grid, so its depth is capped separately.
pub const MAX_ENUMERATION_LEVEL: u32 = 12;

/// An axis-parallel dyadic square `[x,x+1)·2^-level × [y,y+1)·2^-level`.
///
/// Coordinates are unrestricted integers so the same type serves the dual
/// grid of tubes, where the second coordinate ranges over all of `ℤ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DyadicCube {
    pub level: u32,
    pub x: i64,
    pub y: i64,
}

impl DyadicCube {
    pub fn new(level: u32, x: i64, y: i64) -> Self {
        DyadicCube { level, x, y }
    }

    /// Constructor for cubes inside `[0,1)²`, rejecting out-of-range coords.
    pub fn unit(level: u32, x: i64, y: i64) -> Result<Self> {
        if level > MAX_LEVEL {
            return domain(format!("level {level} exceeds maximum {MAX_LEVEL}"));
        }
        let n = 1i64 << level;
        if x < 0 || y < 0 || x >= n || y >= n {
            return domain(format!("cube ({x},{y}) outside the level-{level} unit grid"));
        }
        Ok(DyadicCube { level, x, y })
    }

    pub fn side(&self) -> f64 {
        (0.5f64).powi(self.level as i32)
    }

    pub fn corner(&self) -> (f64, f64) {
        let s = self.side();
        (self.x as f64 * s, self.y as f64 * s)
    }

    pub fn center(&self) -> (f64, f64) {
        let s = self.side();
        ((self.x as f64 + 0.5) * s, (self.y as f64 + 0.5) * s)
    }

    pub fn parent(&self) -> Option<DyadicCube> {
        if self.level == 0 {
            return None;
        }
        Some(DyadicCube {
            level: self.level - 1,
            x: self.x.div_euclid(2),
            y: self.y.div_euclid(2),
        })
    }

    /// Ancestor at a coarser level (identity when `level == self.level`).
    pub fn ancestor(&self, level: u32) -> Result<DyadicCube> {
        if level > self.level {
            return domain(format!(
                "level {level} is finer than the cube's level {}",
                self.level
            ));
        }
        let shift = self.level - level;
        Ok(DyadicCube {
            level,
            x: self.x >> shift,
            y: self.y >> shift,
        })
    }

    /// Half-open membership test.
    pub fn contains(&self, px: f64, py: f64) -> bool {
        let s = self.side();
        let (cx, cy) = (self.x as f64 * s, self.y as f64 * s);
        px >= cx && px < cx + s && py >= cy && py < cy + s
    }
}

/// A duplicate-free set of unit-square cubes sharing one level, kept sorted
/// so equality is structural.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CubeSet {
    level: u32,
    cells: Vec<(i64, i64)>,
}

impl CubeSet {
    pub fn from_cells(level: u32, mut cells: Vec<(i64, i64)>) -> Result<Self> {
        if level > MAX_LEVEL {
            return domain(format!("level {level} exceeds maximum {MAX_LEVEL}"));
        }
        let n = 1i64 << level;
        for &(x, y) in &cells {
            if x < 0 || y < 0 || x >= n || y >= n {
                return domain(format!("cell ({x},{y}) outside the level-{level} unit grid"));
            }
        }
        cells.sort_unstable();
        cells.dedup();
        Ok(CubeSet { level, cells })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn delta(&self) -> f64 {
        (0.5f64).powi(self.level as i32)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[(i64, i64)] {
        &self.cells
    }

    pub fn contains_cell(&self, cell: (i64, i64)) -> bool {
        self.cells.binary_search(&cell).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = DyadicCube> + '_ {
        let level = self.level;
        self.cells.iter().map(move |&(x, y)| DyadicCube::new(level, x, y))
    }

    /// The uniform probability measure spreading mass `1/|S|` per cube.
    pub fn uniform_measure(&self) -> Result<DeltaMeasure> {
        if self.is_empty() {
            return precondition("uniform measure of an empty set");
        }
        let w = 1.0 / self.len() as f64;
        DeltaMeasure::from_weights(self.level, self.cells.iter().map(|&c| (c, w)).collect())
    }
}

/// Non-negative weights on level-`level` cells. Coordinates are not clamped
/// to the unit square: pushforwards and dual-grid measures range wider.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaMeasure {
    level: u32,
    atoms: Vec<((i64, i64), f64)>,
    total: f64,
}

impl DeltaMeasure {
    /// Builds a measure from `(cell, weight)` pairs. Duplicate cells are
    /// merged by summing; zero weights are dropped; negatives rejected.
    pub fn from_weights(level: u32, mut weights: Vec<((i64, i64), f64)>) -> Result<Self> {
        if level > MAX_LEVEL {
            return domain(format!("level {level} exceeds maximum {MAX_LEVEL}"));
        }
        for &(cell, w) in &weights {
            if !w.is_finite() || w < 0.0 {
                return domain(format!("weight {w} at cell {cell:?} is not a finite non-negative value"));
            }
        }
        weights.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        let mut atoms: Vec<((i64, i64), f64)> = Vec::with_capacity(weights.len());
        for (cell, w) in weights {
            match atoms.last_mut() {
                Some((last, acc)) if *last == cell => *acc += w,
                _ => atoms.push((cell, w)),
            }
        }
        atoms.retain(|&(_, w)| w > 0.0);
        let total = atoms.iter().map(|&(_, w)| w).sum();
        Ok(DeltaMeasure { level, atoms, total })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn delta(&self) -> f64 {
        (0.5f64).powi(self.level as i32)
    }

    pub fn atoms(&self) -> &[((i64, i64), f64)] {
        &self.atoms
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn mass_of(&self, cell: (i64, i64)) -> f64 {
        match self.atoms.binary_search_by(|&(c, _)| c.cmp(&cell)) {
            Ok(i) => self.atoms[i].1,
            Err(_) => 0.0,
        }
    }

    /// Support as a `CubeSet`; fails when atoms lie outside the unit square.
    pub fn support(&self) -> Result<CubeSet> {
        CubeSet::from_cells(self.level, self.atoms.iter().map(|&(c, _)| c).collect())
    }

    /// Keeps only atoms satisfying the predicate.
    pub fn restricted(&self, keep: impl Fn((i64, i64), f64) -> bool) -> DeltaMeasure {
        let atoms: Vec<_> = self
            .atoms
            .iter()
            .copied()
            .filter(|&(c, w)| keep(c, w))
            .collect();
        let total = atoms.iter().map(|&(_, w)| w).sum();
        DeltaMeasure { level: self.level, atoms, total }
    }

    /// Rescales to total mass one.
    pub fn normalized(&self) -> Result<DeltaMeasure> {
        if self.total <= 0.0 {
            return precondition("cannot normalize a measure with zero total mass");
        }
        let inv = 1.0 / self.total;
        let atoms: Vec<_> = self.atoms.iter().map(|&(c, w)| (c, w * inv)).collect();
        let total = atoms.iter().map(|&(_, w)| w).sum();
        Ok(DeltaMeasure { level: self.level, atoms, total })
    }
}

/// Result of a property check: the measured optimal constant, the witness
/// achieving it, and whether it clears the requested threshold (always true
/// when no threshold was requested).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrostmanReport {
    pub minimal_constant: f64,
    pub witness_center: (f64, f64),
    pub witness_radius: f64,
    pub requested: Option<f64>,
    pub passes: bool,
}

impl FrostmanReport {
    pub(crate) fn from_worst(worst: WorstRatio, delta: f64, requested: Option<f64>) -> FrostmanReport {
        FrostmanReport {
            minimal_constant: worst.ratio,
            witness_center: worst.center,
            witness_radius: worst.radius_log2.map_or(delta, |k| (0.5f64).powi(k)),
            requested,
            passes: requested.map_or(true, |c| worst.ratio <= c),
        }
    }
}

/// The level-`level` cubes meeting a region given by a point predicate.
///
/// Membership is decided by sampling the four points of the half-resolution
/// lattice inside each cube (its corner plus offsets of `2^-(level+1)`), so
/// the result can err only by the sampling: a cube is included when the
/// predicate holds at one of the four points.
pub fn enumerate_cubes(level: u32, indicator: impl Fn(f64, f64) -> bool) -> Result<CubeSet> {
    if level > MAX_ENUMERATION_LEVEL {
        return domain(format!(
            "enumeration level {level} exceeds maximum {MAX_ENUMERATION_LEVEL}"
        ));
    }
    let n = 1i64 << level;
    let h = (0.5f64).powi(level as i32 + 1);
    let mut cells = Vec::new();
    for x in 0..n {
        for y in 0..n {
            let (cx, cy) = (2 * x, 2 * y);
            let hit = [(0, 0), (1, 0), (0, 1), (1, 1)]
                .iter()
                .any(|&(a, b)| indicator((cx + a) as f64 * h, (cy + b) as f64 * h));
            if hit {
                cells.push((x, y));
            }
        }
    }
    CubeSet::from_cells(level, cells)
}

/// Number of level-`coarser` dyadic cubes meeting `S`.
pub fn covering_number(s: &CubeSet, coarser: u32) -> Result<usize> {
    if coarser > s.level() {
        return domain(format!(
            "covering level {coarser} is finer than the set's level {}",
            s.level()
        ));
    }
    let shift = s.level() - coarser;
    let mut ancestors: Vec<(i64, i64)> = s.cells().iter().map(|&(x, y)| (x >> shift, y >> shift)).collect();
    ancestors.sort_unstable();
    ancestors.dedup();
    Ok(ancestors.len())
}

/// Per-level min-cost tables for the content DP: `tree[l]` maps a level-`l`
/// ancestor to `min(side^t, sum of children costs)`.
fn content_tree(s: &CubeSet, t: f64) -> Vec<BTreeMap<(i64, i64), f64>> {
    let levels = s.level() as usize;
    let mut tree: Vec<BTreeMap<(i64, i64), f64>> = vec![BTreeMap::new(); levels + 1];
    let leaf_cost = s.delta().powf(t);
    for &cell in s.cells() {
        tree[levels].insert(cell, leaf_cost);
    }
    for l in (0..levels).rev() {
        let side_cost = (0.5f64).powi(l as i32).powf(t);
        let mut sums: BTreeMap<(i64, i64), f64> = BTreeMap::new();
        for (&(x, y), &cost) in &tree[l + 1] {
            *sums.entry((x >> 1, y >> 1)).or_insert(0.0) += cost;
        }
        tree[l] = sums
            .into_iter()
            .map(|(q, sum)| (q, sum.min(side_cost)))
            .collect();
    }
    tree
}

/// Exact minimum of `Σ side(Q)^t` over dyadic covers of `S` inside `[0,1)²`.
///
/// Comparable to the Hausdorff content of the union of `S` up to an absolute
/// constant, which is all the downstream bounds use.
pub fn dyadic_content(s: &CubeSet, t: f64) -> Result<f64> {
    if !(t > 0.0 && t <= 2.0) {
        return domain(format!("content exponent {t} outside (0,2]"));
    }
    if s.is_empty() {
        return Ok(0.0);
    }
    let tree = content_tree(s, t);
    Ok(tree[0].values().copied().sum())
}

pub(crate) struct WorstRatio {
    pub(crate) ratio: f64,
    pub(crate) center: (f64, f64),
    /// `radius = 2^-k`; `None` only for the degenerate empty scan.
    pub(crate) radius_log2: Option<i32>,
}

/// Scans all (cube center, dyadic radius) pairs and maximizes
/// `score(strictly-inside quantity, radius)`. The quantity is the number of
/// centers (unweighted) or their total weight.
pub(crate) fn worst_ball_ratio(
    level: u32,
    points: &[((i64, i64), f64)],
    score: impl Fn(f64, f64) -> f64 + Sync,
) -> WorstRatio {
    // Centers sit at odd multiples of 2^-(level+1); squared distances are
    // integers in those units, so every ball test below is exact.
    let coords: Vec<(i64, i64)> = points
        .iter()
        .map(|&((x, y), _)| (2 * x + 1, 2 * y + 1))
        .collect();
    let radii: Vec<i32> = (0..=level as i32).collect();
    let best = (0..points.len())
        .into_par_iter()
        .map(|i| {
            let (ui, vi) = coords[i];
            let mut dist: Vec<(i64, f64)> = coords
                .iter()
                .zip(points)
                .map(|(&(u, v), &(_, w))| {
                    let (du, dv) = (u - ui, v - vi);
                    (du * du + dv * dv, w)
                })
                .collect();
            dist.sort_unstable_by(|a, b| a.0.cmp(&b.0));
            let mut prefix = Vec::with_capacity(dist.len() + 1);
            let mut acc = 0.0;
            prefix.push(0.0);
            for &(_, w) in &dist {
                acc += w;
                prefix.push(acc);
            }
            let mut local = (f64::NEG_INFINITY, 0i32);
            for &k in &radii {
                // |c - x| < 2^-k  ⟺  d2 < 2^(2(level+1-k)) in center units.
                let r2 = 1i64 << (2 * (level as i32 + 1 - k));
                let inside = dist.partition_point(|&(d2, _)| d2 < r2);
                let ratio = score(prefix[inside], (0.5f64).powi(k));
                if ratio > local.0 {
                    local = (ratio, k);
                }
            }
            (local.0, i, local.1)
        })
        .reduce(
            || (f64::NEG_INFINITY, usize::MAX, 0),
            |a, b| {
                if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            },
        );
    let (ratio, idx, k) = best;
    let side = (0.5f64).powi(level as i32);
    let center = if idx == usize::MAX {
        (0.0, 0.0)
    } else {
        let (x, y) = points[idx].0;
        ((x as f64 + 0.5) * side, (y as f64 + 0.5) * side)
    };
    WorstRatio {
        ratio,
        center,
        radius_log2: (idx != usize::MAX).then_some(k),
    }
}

/// Measures the optimal `C` in `|S ∩ B(x,r)| ≤ C · r^t · |S|` over cube
/// centers `x` and dyadic radii `r ∈ [δ,1]`.
pub fn check_delta_set(s: &CubeSet, t: f64, requested: Option<f64>) -> Result<FrostmanReport> {
    if s.is_empty() {
        return precondition("delta-set check on an empty set");
    }
    let points: Vec<((i64, i64), f64)> = s.cells().iter().map(|&c| (c, 1.0)).collect();
    let total = s.len() as f64;
    let worst = worst_ball_ratio(s.level(), &points, |count, r| count / (r.powf(t) * total));
    Ok(FrostmanReport::from_worst(worst, s.delta(), requested))
}

/// Measures the optimal `C` in the Katz–Tao normalization
/// `|S ∩ B(x,r)| ≤ C · (r/δ)^t`.
pub fn check_katz_tao(s: &CubeSet, t: f64, requested: Option<f64>) -> Result<FrostmanReport> {
    if s.is_empty() {
        return precondition("Katz-Tao check on an empty set");
    }
    let points: Vec<((i64, i64), f64)> = s.cells().iter().map(|&c| (c, 1.0)).collect();
    let delta = s.delta();
    let worst = worst_ball_ratio(s.level(), &points, |count, r| count / (r / delta).powf(t));
    Ok(FrostmanReport::from_worst(worst, delta, requested))
}

/// Measures the optimal `C` in `m(B(x,r)) ≤ C · r^s` over atom centers and
/// dyadic radii.
pub fn check_frostman_measure(
    m: &DeltaMeasure,
    s_exp: f64,
    requested: Option<f64>,
) -> Result<FrostmanReport> {
    if m.is_empty() {
        return precondition("Frostman check on a measure without atoms");
    }
    let worst = worst_ball_ratio(m.level(), m.atoms(), |mass, r| mass / r.powf(s_exp));
    Ok(FrostmanReport::from_worst(worst, m.delta(), requested))
}

/// Riesz `t`-energy `Σᵢ Σⱼ mᵢ mⱼ / max(|xᵢ-xⱼ|, δ)^t` over atom centers,
/// with the kernel floored at the cell scale so the diagonal stays finite.
pub fn riesz_energy(m: &DeltaMeasure, t: f64) -> Result<f64> {
    if !(t > 0.0 && t < 2.0) {
        return domain(format!("Riesz exponent {t} outside (0,2)"));
    }
    let delta = m.delta();
    let atoms = m.atoms();
    // Squared center distances are integers in units 2^-(level+1), and their
    // range is small, so the kernel is memoized per distinct distance.
    let mut kernel: Vec<f64> = Vec::new();
    let mut energy = 0.0;
    let scale = delta / 2.0;
    for i in 0..atoms.len() {
        let ((xi, yi), wi) = atoms[i];
        energy += wi * wi * delta.powf(-t);
        for &((xj, yj), wj) in &atoms[i + 1..] {
            let (du, dv) = (2 * (xj - xi), 2 * (yj - yi));
            let d2 = (du * du + dv * dv) as usize;
            if d2 >= kernel.len() {
                kernel.resize(d2 + 1, f64::NAN);
            }
            if kernel[d2].is_nan() {
                let d = (d2 as f64).sqrt() * scale;
                kernel[d2] = d.max(delta).powf(-t);
            }
            energy += 2.0 * wi * wj * kernel[d2];
        }
    }
    Ok(energy)
}

/// Certified constant for `extract_delta_subset`: the output passes
/// `check_delta_set` with `C ≤ EXTRACT_SUBSET_CONSTANT / kappa`. The value
/// is the product of the per-cube cap slack (2) and the number of dyadic
/// squares of side `r` a ball of radius `r` can meet (9).
pub const EXTRACT_SUBSET_CONSTANT: f64 = 18.0;

/// Extracts from `S` a subset that is a `(δ,t,C)`-set with
/// `C ≤ EXTRACT_SUBSET_CONSTANT / kappa`, given `dyadic_content(S,t) > kappa`.
///
/// Top-down greedy selection: every ancestor cube `Q` caps its selected
/// descendants at `⌈(side(Q)/δ)^t⌉`, and quota is handed to children in
/// decreasing order of their content-DP cost. The cap forces the Katz–Tao
/// bound per dyadic cube, while a min-cut argument over the selection tree
/// keeps at least `content · δ^-t` cells, which converts the cube bound into
/// the normalized one. The result is re-certified before returning.
pub fn extract_delta_subset(s: &CubeSet, t: f64, kappa: f64) -> Result<CubeSet> {
    if !(t > 0.0 && t <= 2.0) {
        return domain(format!("subset exponent {t} outside (0,2]"));
    }
    if !(kappa > 0.0 && kappa.is_finite()) {
        return domain(format!("content bound {kappa} must be positive and finite"));
    }
    let content = dyadic_content(s, t)?;
    if content <= kappa {
        return precondition(format!("content {content} below kappa {kappa}"));
    }
    let tree = content_tree(s, t);
    let levels = s.level() as usize;

    // keep[l][q] = min(cap, Σ children keep): the max number of cells
    // selectable under all ancestor caps within q.
    let mut keep: Vec<BTreeMap<(i64, i64), u64>> = vec![BTreeMap::new(); levels + 1];
    for &cell in s.cells() {
        keep[levels].insert(cell, 1);
    }
    for l in (0..levels).rev() {
        let cap_f = ((1u64 << ((levels - l) as u32)) as f64).powf(t);
        let cap = (cap_f - 1e-9).ceil().max(1.0) as u64;
        let mut sums: BTreeMap<(i64, i64), u64> = BTreeMap::new();
        for (&(x, y), &k) in &keep[l + 1] {
            *sums.entry((x >> 1, y >> 1)).or_insert(0) += k;
        }
        keep[l] = sums.into_iter().map(|(q, sum)| (q, sum.min(cap))).collect();
    }

    // Hand quota down, children ordered by cost (descending), coords as
    // tie-break, so the selection is deterministic.
    let mut quota: BTreeMap<(i64, i64), u64> = keep[0].clone();
    for l in 0..levels {
        let mut next: BTreeMap<(i64, i64), u64> = BTreeMap::new();
        for (&(qx, qy), &q) in &quota {
            let mut children: Vec<((i64, i64), u64, f64)> = Vec::with_capacity(4);
            for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                let c = (2 * qx + dx, 2 * qy + dy);
                if let Some(&k) = keep[l + 1].get(&c) {
                    children.push((c, k, tree[l + 1][&c]));
                }
            }
            children.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap().then(a.0.cmp(&b.0)));
            let mut remaining = q;
            for (c, k, _) in children {
                let give = k.min(remaining);
                if give > 0 {
                    next.insert(c, give);
                    remaining -= give;
                }
            }
        }
        quota = next;
    }
    let out = CubeSet::from_cells(levels as u32, quota.keys().copied().collect())?;

    let bound = EXTRACT_SUBSET_CONSTANT / kappa;
    let report = check_delta_set(&out, t, Some(bound))?;
    if !report.passes {
        return Err(FrostError::Certification(format!(
            "extracted subset has constant {} above the certified bound {bound}",
            report.minimal_constant
        )));
    }
    Ok(out)
}

/// `window_constant_bound` never exceeds the exact ball constant by more
/// than this factor: the window around a radius-`r` ball fits inside the
/// ball of radius `2√2 r`, costing `(2√2)^t <= 8` in the count, and the
/// anchoring at cell centers at most doubles that.
pub const WINDOW_SLACK: f64 = 16.0;

/// Upper bound on the `check_delta_set` constant of `S` computed from axis
/// window counts: the ball `B(x,r)` sits inside the square window of side
/// `2r`, whose count comes from a 2-D prefix-sum table in constant time.
///
/// Sound for certification (never below the true constant's ball count) and
/// linear in the grid size, so it scales to sets far beyond the reach of the
/// exact quadratic scan.
pub fn window_constant_bound(s: &CubeSet, t: f64) -> Result<f64> {
    if s.is_empty() {
        return precondition("window bound on an empty set");
    }
    let level = s.level();
    let n = 1usize << level;
    let mut prefix = vec![0u32; (n + 1) * (n + 1)];
    let row = n + 1;
    for &(x, y) in s.cells() {
        prefix[(x as usize + 1) * row + (y as usize + 1)] = 1;
    }
    for i in 1..=n {
        for j in 1..=n {
            prefix[i * row + j] = prefix[i * row + j] + prefix[(i - 1) * row + j]
                + prefix[i * row + j - 1]
                - prefix[(i - 1) * row + j - 1];
        }
    }
    let count = |x0: i64, x1: i64, y0: i64, y1: i64| -> u32 {
        // Closed cell-index window [x0,x1]×[y0,y1], clamped to the grid.
        let xa = x0.clamp(0, n as i64) as usize;
        let xb = (x1 + 1).clamp(0, n as i64) as usize;
        let ya = y0.clamp(0, n as i64) as usize;
        let yb = (y1 + 1).clamp(0, n as i64) as usize;
        if xb <= xa || yb <= ya {
            return 0;
        }
        (prefix[xb * row + yb] as i64 - prefix[xa * row + yb] as i64
            - prefix[xb * row + ya] as i64
            + prefix[xa * row + ya] as i64) as u32
    };
    let total = s.len() as f64;
    let mut worst = 0.0f64;
    for &(x, y) in s.cells() {
        for k in 0..=level as i32 {
            // Cells whose center can lie in B(center(x,y), 2^-k): index
            // offsets strictly below 2^(level-k) in each axis.
            let m = 1i64 << (level as i32 - k);
            let c = count(x - m, x + m, y - m, y + m) as f64;
            let ratio = c / ((0.5f64).powi(k).powf(t) * total);
            worst = worst.max(ratio);
        }
    }
    Ok(worst)
}
