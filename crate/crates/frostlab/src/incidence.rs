//! Cube-tube incidence counting, the empirical incidence-bound margin,
//! rectangle concentration search and a deterministic bipartition splitter.

use rayon::prelude::*;

use crate::dyadic::{self, CubeSet, DyadicCube};
use crate::tubes::{self, Tube, TubeSet};
use crate::{domain, precondition, Result};

/// A certified incidence: `tube_cube_incidence(tube, cube)` holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncidencePair {
    pub cube: DyadicCube,
    pub tube: Tube,
}

/// Per-column index of a cube set: sorted y-lists keyed by x.
fn columns(p: &CubeSet) -> Vec<Vec<i64>> {
    let n = 1usize << p.level();
    let mut cols: Vec<Vec<i64>> = vec![Vec::new(); n];
    for &(x, y) in p.cells() {
        cols[x as usize].push(y);
    }
    cols
}

/// The incident y-index window of a tube over one x-column, clamped to the
/// unit grid; `None` when the band misses the column entirely.
fn band_window(t: &Tube, level: u32, i: i64) -> Option<(i64, i64)> {
    let d = (0.5f64).powi(level as i32);
    let (a0, a1) = t.a_interval();
    let (b0, b1) = t.b_interval();
    let x0 = i as f64 * d;
    let x1 = x0 + d;
    let products = [a0 * x0, a0 * x1, a1 * x0, a1 * x1];
    let lo = products.iter().copied().fold(f64::INFINITY, f64::min) + b0;
    let hi = products.iter().copied().fold(f64::NEG_INFINITY, f64::max) + b1;
    // A cube row j meets [lo,hi] iff j ≥ lo/δ - 1 and j ≤ hi/δ; all the
    // divisions are exact because δ is a power of two.
    let j_min = ((lo / d).ceil() as i64 - 1).max(0);
    let j_max = ((hi / d).floor() as i64).min((1i64 << level) - 1);
    (j_min <= j_max).then_some((j_min, j_max))
}

/// Exact `|{(p,T) : p ∩ T ≠ ∅}|`, identical to the naive double loop over
/// `tube_cube_incidence` but swept per tube through per-column y-windows.
pub fn count_incidences(p: &CubeSet, ts: &TubeSet) -> Result<u64> {
    if p.level() != ts.level() {
        return precondition(format!(
            "cube level {} differs from tube level {}",
            p.level(),
            ts.level()
        ));
    }
    let cols = columns(p);
    let level = p.level();
    let total = ts
        .tubes()
        .par_iter()
        .map(|&(a, b)| {
            let t = Tube::new(level, a, b).expect("members were validated at construction");
            let mut count = 0u64;
            for (i, ys) in cols.iter().enumerate() {
                if ys.is_empty() {
                    continue;
                }
                if let Some((j_min, j_max)) = band_window(&t, level, i as i64) {
                    let lo = ys.partition_point(|&y| y < j_min);
                    let hi = ys.partition_point(|&y| y <= j_max);
                    count += (hi - lo) as u64;
                }
            }
            count
        })
        .sum();
    Ok(total)
}

/// The full incidence list, ordered by tube then cube.
pub fn incidence_pairs(p: &CubeSet, ts: &TubeSet) -> Result<Vec<IncidencePair>> {
    if p.level() != ts.level() {
        return precondition(format!(
            "cube level {} differs from tube level {}",
            p.level(),
            ts.level()
        ));
    }
    let cols = columns(p);
    let level = p.level();
    let mut pairs = Vec::new();
    for t in ts.iter() {
        for (i, ys) in cols.iter().enumerate() {
            if ys.is_empty() {
                continue;
            }
            if let Some((j_min, j_max)) = band_window(&t, level, i as i64) {
                let lo = ys.partition_point(|&y| y < j_min);
                let hi = ys.partition_point(|&y| y <= j_max);
                for &y in &ys[lo..hi] {
                    pairs.push(IncidencePair {
                        cube: DyadicCube::new(level, i as i64, y),
                        tube: t,
                    });
                }
            }
        }
    }
    Ok(pairs)
}

/// Incidence count against the square-function bound
/// `δ^(-1/2-ε) (C_P C_T)^(1/2) |P|^(1/2) |𝒯|^(1/2)`, with both Katz-Tao
/// constants measured from the data rather than assumed.
#[derive(Debug, Clone, Copy)]
pub struct FuRenReport {
    pub incidences: u64,
    pub bound: f64,
    /// `bound / incidences`; infinite when nothing is incident.
    pub margin: f64,
    pub cube_constant: f64,
    pub tube_constant: f64,
}

pub fn fu_ren_margin(p: &CubeSet, ts: &TubeSet, t: f64, s: f64, eps: f64) -> Result<FuRenReport> {
    if eps < 0.0 {
        return domain(format!("margin slack {eps} must be nonnegative"));
    }
    let cube_constant = dyadic::check_katz_tao(p, t, None)?.minimal_constant;
    let tube_constant = tubes::check_tube_set(ts, s, None, true)?.minimal_constant;
    let incidences = count_incidences(p, ts)?;
    let delta = p.delta();
    let bound = delta.powf(-0.5 - eps)
        * (cube_constant * tube_constant).sqrt()
        * (p.len() as f64).sqrt()
        * (ts.len() as f64).sqrt();
    let margin = if incidences == 0 {
        f64::INFINITY
    } else {
        bound / incidences as f64
    };
    Ok(FuRenReport {
        incidences,
        bound,
        margin,
        cube_constant,
        tube_constant,
    })
}

/// Direction of a rectangle's long side, as a slope in one of two charts so
/// every direction is reached with `|a| ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChartSlope {
    /// Long side along `(1,a)`.
    Standard(f64),
    /// Long side along `(a,1)`.
    Rotated(f64),
}

impl ChartSlope {
    pub fn slope(&self) -> f64 {
        match *self {
            ChartSlope::Standard(a) | ChartSlope::Rotated(a) => a,
        }
    }

    /// Unnormalized (long-side, short-side) axes; the short axis is the long
    /// one rotated by +90°.
    fn axes(&self) -> ((f64, f64), (f64, f64)) {
        match *self {
            ChartSlope::Standard(a) => ((1.0, a), (-a, 1.0)),
            ChartSlope::Rotated(a) => ((a, 1.0), (-1.0, a)),
        }
    }
}

/// The maximizing rectangle of `max_rectangle_count`.
#[derive(Debug, Clone, Copy)]
pub struct RectangleWitness {
    pub anchor_cell: (i64, i64),
    pub anchor: (f64, f64),
    pub theta: ChartSlope,
    pub length: f64,
    /// Half-width; the search doubles the nominal width `δ` to make the
    /// anchored scan lose at most the cubes of one width offset.
    pub half_width: f64,
    pub count: usize,
}

/// Offsets of a cube center from the anchor in rectangle coordinates: long
/// axis in `[0, length)`, short axis in `[-δ, δ)`, both scaled by the axis
/// norm so the comparisons stay in exact dyadic arithmetic.
fn in_rectangle(d: (f64, f64), theta: ChartSlope, length: f64, delta: f64) -> bool {
    let ((u0, u1), (v0, v1)) = theta.axes();
    let n2 = 1.0 + theta.slope() * theta.slope();
    let u = d.0 * u0 + d.1 * u1;
    if u < 0.0 || u * u >= length * length * n2 {
        return false;
    }
    let v = d.0 * v0 + d.1 * v1;
    let w2 = delta * delta * n2;
    if v >= 0.0 {
        v * v < w2
    } else {
        v * v <= w2
    }
}

/// Maximum number of `P`-cubes whose centers fall in a `(2δ × length)`
/// rectangle with long side of direction `theta`, over rectangles anchored
/// at cube centers. Anchoring is complete up to the doubled width: any
/// rectangle can be slid along its axis to start at the first center it
/// contains, and widened to absorb the transverse rounding.
pub fn max_rectangle_count(
    p: &CubeSet,
    theta: ChartSlope,
    length: f64,
) -> Result<(usize, RectangleWitness)> {
    if theta.slope().abs() > 1.0 {
        return domain(format!("chart slope {} outside [-1,1]", theta.slope()));
    }
    let delta = p.delta();
    if !(length >= delta && length <= 1.0) {
        return domain(format!("rectangle length {length} outside [{delta}, 1]"));
    }
    if p.is_empty() {
        return precondition("rectangle search over an empty set");
    }
    let cells = p.cells();
    let best = (0..cells.len())
        .into_par_iter()
        .map(|i| {
            let (ax, ay) = cells[i];
            let count = cells
                .iter()
                .filter(|&&(cx, cy)| {
                    let d = ((cx - ax) as f64 * delta, (cy - ay) as f64 * delta);
                    in_rectangle(d, theta, length, delta)
                })
                .count();
            (count, i)
        })
        .reduce(
            || (0usize, usize::MAX),
            |a, b| {
                if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            },
        );
    let (count, idx) = best;
    let (ax, ay) = cells[idx];
    let anchor = ((ax as f64 + 0.5) * delta, (ay as f64 + 0.5) * delta);
    Ok((
        count,
        RectangleWitness {
            anchor_cell: (ax, ay),
            anchor,
            theta,
            length,
            half_width: delta,
            count,
        },
    ))
}

/// Outcome of the rectangular-Frostman scan for one direction.
#[derive(Debug, Clone, Copy)]
pub struct ThetaOutcome {
    pub theta: ChartSlope,
    pub removed: usize,
    pub removed_fraction: f64,
    pub exceptional: bool,
}

#[derive(Debug, Clone)]
pub struct RectFrostmanReport {
    pub per_theta: Vec<ThetaOutcome>,
    /// Fraction of directions whose removals exceeded `δ^ε |P|`.
    pub exceptional_fraction: f64,
    /// Largest ε with exceptional_fraction ≤ δ^ε; infinite when no
    /// direction is exceptional.
    pub eps_sufficient: f64,
    pub removal_threshold: f64,
    pub eta: f64,
    pub eps: f64,
}

/// Greedy pruning along one direction: removes the cubes of any `(2δ × Δ)`
/// rectangle holding more than `δ^(1-η) Δ^(t-1) |P|` of them, over dyadic
/// `Δ ∈ [δ, 1]`, restarting the length scan after every removal with the
/// bound anchored at the original cardinality. Returns the survivors and the
/// number of cubes removed.
pub fn rect_prune(
    p: &CubeSet,
    theta: ChartSlope,
    t: f64,
    eta: f64,
) -> Result<(CubeSet, usize)> {
    if !(t > 0.0 && t <= 2.0) {
        return domain(format!("exponent {t} outside (0,2]"));
    }
    if !(0.0..1.0).contains(&eta) {
        return domain(format!("concentration slack {eta} outside [0,1)"));
    }
    let level = p.level();
    let delta = p.delta();
    let bound_base = delta.powf(1.0 - eta) * p.len() as f64;

    let mut work = p.clone();
    let mut removed = 0usize;
    'scan: loop {
        if work.is_empty() {
            break;
        }
        for k in 0..=level {
            let length = (0.5f64).powi(k as i32);
            let (count, witness) = max_rectangle_count(&work, theta, length)?;
            if count as f64 > bound_base * length.powf(t - 1.0) {
                let (ax, ay) = witness.anchor_cell;
                let keep: Vec<(i64, i64)> = work
                    .cells()
                    .iter()
                    .copied()
                    .filter(|&(cx, cy)| {
                        let d = ((cx - ax) as f64 * delta, (cy - ay) as f64 * delta);
                        !in_rectangle(d, theta, length, delta)
                    })
                    .collect();
                removed += work.len() - keep.len();
                work = CubeSet::from_cells(level, keep)?;
                continue 'scan;
            }
        }
        break;
    }
    Ok((work, removed))
}

/// Runs `rect_prune` for each direction; a direction is exceptional when the
/// removals exceed `δ^ε |P|`.
pub fn rect_frostman_experiment(
    p: &CubeSet,
    thetas: &[ChartSlope],
    t: f64,
    eta: f64,
    eps: f64,
) -> Result<RectFrostmanReport> {
    if eps <= 0.0 {
        return domain(format!("exceptional exponent {eps} must be positive"));
    }
    if p.is_empty() {
        return precondition("rectangle experiment over an empty set");
    }
    if thetas.is_empty() {
        return precondition("rectangle experiment without directions");
    }
    let delta = p.delta();
    let total = p.len() as f64;
    let removal_threshold = delta.powf(eps) * total;

    let mut per_theta = Vec::with_capacity(thetas.len());
    for &theta in thetas {
        let (_, removed) = rect_prune(p, theta, t, eta)?;
        let removed_fraction = removed as f64 / total;
        per_theta.push(ThetaOutcome {
            theta,
            removed,
            removed_fraction,
            exceptional: removed as f64 > removal_threshold,
        });
    }
    let exceptional = per_theta.iter().filter(|o| o.exceptional).count();
    let exceptional_fraction = exceptional as f64 / thetas.len() as f64;
    let eps_sufficient = if exceptional == 0 {
        f64::INFINITY
    } else {
        exceptional_fraction.ln() / delta.ln()
    };
    Ok(RectFrostmanReport {
        per_theta,
        exceptional_fraction,
        eps_sufficient,
        removal_threshold,
        eta,
        eps,
    })
}

/// Simple undirected graph on `0..n` with deduplicated edges.
#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn from_edges(n: usize, edges: Vec<(usize, usize)>) -> Result<Graph> {
        let mut normalized = Vec::with_capacity(edges.len());
        for (i, j) in edges {
            if i == j {
                return domain(format!("self-loop at vertex {i}"));
            }
            if i >= n || j >= n {
                return domain(format!("edge ({i},{j}) outside vertex range 0..{n}"));
            }
            normalized.push((i.min(j), i.max(j)));
        }
        normalized.sort_unstable();
        normalized.dedup();
        Ok(Graph { n, edges: normalized })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }
}

/// Deterministic bipartition with at least `⌈|E|/2⌉` crossing edges.
///
/// Flips the first vertex with more same-side than cross-side neighbors
/// until none exists; each flip strictly increases the crossing count, and
/// at a local optimum every vertex crosses at least half its degree.
pub fn erdos_bipartition(g: &Graph) -> (Vec<usize>, Vec<usize>, usize) {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); g.n];
    for &(i, j) in &g.edges {
        adj[i].push(j);
        adj[j].push(i);
    }
    let mut side = vec![false; g.n];
    loop {
        let mut flipped = false;
        for v in 0..g.n {
            let same = adj[v].iter().filter(|&&w| side[w] == side[v]).count();
            if 2 * same > adj[v].len() {
                side[v] = !side[v];
                flipped = true;
            }
        }
        if !flipped {
            break;
        }
    }
    let crossing = g.edges.iter().filter(|&&(i, j)| side[i] != side[j]).count();
    let v1 = (0..g.n).filter(|&v| !side[v]).collect();
    let v2 = (0..g.n).filter(|&v| side[v]).collect();
    (v1, v2, crossing)
}
