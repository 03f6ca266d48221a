//! Line accessibility of rasterized curves.
//!
//! The objects here live on the other side of the crate's main inequalities:
//! instead of certifying that X-ray mass spreads out, they construct curves
//! whose every point is reachable along some line that meets the curve only
//! near that point. A Hölder graph wrapped into polar position is the
//! workhorse: its box dimension can sit anywhere in `[1, 2)` while every
//! radial line still crosses it exactly once.
//!
//! Everything is measured at raster precision. A direction counts as
//! accessible when the `eps`-neighbourhood of the line through the base
//! point meets the raster only inside a ball of radius `r/2`, which is the
//! scale-stable reading of "meets the curve once".

use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_2, LN_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dyadic::{covering_number, CubeSet};
use crate::{domain, precondition, Result};

/// Hard cap on `log2` of the raster sample count.
const MAX_SAMPLE_EXP: u32 = 28;

/// Lacunary cosine sum `offset + Σ_k 4^{-kα} cos(2π 4^k u) / norm`.
///
/// With frequencies `4^k` the series is `α`-Hölder and, for `α < 1`, its
/// graph has box dimension `2 - α`. The normalization keeps values inside
/// `[1/2, 1]` so the graph can be wrapped around the origin.
#[derive(Debug, Clone)]
pub struct HolderFunction {
    alpha: f64,
    depth: usize,
    norm: f64,
    offset: f64,
}

impl HolderFunction {
    /// The constant function `u ↦ c`, Hölder of every exponent; `c ∈ [1/2, 1]`.
    pub fn constant(c: f64) -> Result<Self> {
        if !(0.5..=1.0).contains(&c) {
            return domain(format!("constant value {c} outside [1/2, 1]"));
        }
        Ok(HolderFunction { alpha: 1.0, depth: 0, norm: 1.0, offset: c })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn value(&self, u: f64) -> f64 {
        let mut w = 0.0;
        let mut freq = 1.0;
        for k in 1..=self.depth {
            freq *= 4.0;
            let amp = 4f64.powf(-(k as f64) * self.alpha);
            w += amp * (2.0 * PI * freq * u).cos();
        }
        self.offset + w / self.norm
    }
}

/// Truncated Besicovitch-Ursell series whose graph has box dimension `t`.
///
/// The exponent is `α = 2 - t`; amplitudes `4^{-kα}` are summed to `depth`
/// terms and scaled so the range lands in `[1/2, 1]` with `f(0) = 1`.
pub fn besicovitch_ursell(t: f64, depth: usize) -> Result<HolderFunction> {
    if !(1.0..2.0).contains(&t) {
        return domain(format!("target dimension {t} outside [1, 2)"));
    }
    if depth == 0 || depth > 16 {
        return domain(format!("series depth {depth} outside 1..=16"));
    }
    let alpha = 2.0 - t;
    let mut total = 0.0;
    for k in 1..=depth {
        total += 4f64.powf(-(k as f64) * alpha);
    }
    Ok(HolderFunction { alpha, depth, norm: 4.0 * total, offset: 0.75 })
}

/// Largest sampled ratio `|f(u) - f(v)| / |u - v|^exponent` over random pairs.
///
/// A Monte Carlo stand-in for the Hölder seminorm; it underestimates, so use
/// it for stability comparisons rather than as a certified bound.
pub fn empirical_holder_constant(
    f: &HolderFunction,
    exponent: f64,
    pairs: usize,
    seed: u64,
) -> Result<f64> {
    if !(exponent > 0.0 && exponent <= 1.0) {
        return domain(format!("Hölder exponent {exponent} outside (0, 1]"));
    }
    if pairs == 0 {
        return domain("need at least one sample pair");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    for _ in 0..pairs {
        let u: f64 = rng.gen();
        let v: f64 = rng.gen();
        if (u - v).abs() < 1e-12 {
            continue;
        }
        let ratio = (f.value(u) - f.value(v)).abs() / (u - v).abs().powf(exponent);
        best = best.max(ratio);
    }
    Ok(best)
}

fn sample_exponent(level: u32, alpha: f64) -> Result<u32> {
    let e = (level as f64 / alpha).ceil() as u32 + 2;
    if e > MAX_SAMPLE_EXP {
        return domain(format!(
            "rasterizing level {level} at Hölder exponent {alpha} needs 2^{e} samples, cap is 2^{MAX_SAMPLE_EXP}"
        ));
    }
    Ok(e)
}

/// Sampling density `2^(level/α)` resolves an `α`-Hölder curve: over one
/// sample gap the function moves less than a raster cell.
fn rasterize(f: &HolderFunction, level: u32, radial: bool) -> Result<CubeSet> {
    let m = 1u64 << sample_exponent(level, f.alpha)?;
    let side = 1i64 << level;
    let chunk = 1u64 << 20;
    let chunks = (m / chunk) + 1;
    let cells = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * chunk;
            let hi = ((c + 1) * chunk).min(m + 1);
            let mut out = BTreeSet::new();
            for i in lo..hi {
                let u = i as f64 / m as f64;
                let v = f.value(u);
                let (px, py) = if radial {
                    let ang = u * FRAC_PI_2;
                    (v * ang.cos(), v * ang.sin())
                } else {
                    (u, v)
                };
                let cx = ((px * side as f64).floor() as i64).clamp(0, side - 1);
                let cy = ((py * side as f64).floor() as i64).clamp(0, side - 1);
                out.insert((cx, cy));
            }
            out
        })
        .reduce(BTreeSet::new, |mut a, mut b| {
            if a.len() < b.len() {
                std::mem::swap(&mut a, &mut b);
            }
            a.extend(b);
            a
        });
    CubeSet::from_cells(level, cells.into_iter().collect())
}

/// A Hölder function wrapped into polar position: the point of parameter
/// `u ∈ [0, 1]` sits at distance `f(u)` from the origin along the angle
/// `u·π/2`, so the curve spans the first quadrant between radii 1/2 and 1.
#[derive(Debug, Clone)]
pub struct RadialGraph {
    f: HolderFunction,
    level: u32,
    raster: CubeSet,
}

/// Chart direction of the radial line through the parameter-`u` point.
pub fn radial_direction(u: f64) -> f64 {
    0.25 + u / 4.0
}

pub fn radial_graph(f: &HolderFunction, level: u32) -> Result<RadialGraph> {
    if level == 0 {
        return domain("radial graph needs a positive raster level");
    }
    let raster = rasterize(f, level, true)?;
    Ok(RadialGraph { f: f.clone(), level, raster })
}

impl RadialGraph {
    pub fn raster(&self) -> &CubeSet {
        &self.raster
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn function(&self) -> &HolderFunction {
        &self.f
    }

    pub fn point_at(&self, u: f64) -> (f64, f64) {
        let v = self.f.value(u);
        let ang = u * FRAC_PI_2;
        (v * ang.cos(), v * ang.sin())
    }

    /// Raster of the same function in Cartesian position `(u, f(u))`,
    /// sampled at the same density. The polar chart is bilipschitz on the
    /// annulus, so covering numbers of the two rasters agree up to a
    /// constant factor.
    pub fn cartesian_raster(&self) -> Result<CubeSet> {
        rasterize(&self.f, self.level, false)
    }
}

/// Least-squares box-counting fit over the given dyadic scales.
#[derive(Debug, Clone)]
pub struct BoxDimensionFit {
    pub estimate: f64,
    pub residual: f64,
    pub counts: Vec<(u32, usize)>,
}

/// Regresses `ln N(2^-l)` on `l ln 2` over at least four distinct scales.
pub fn box_dimension(set: &CubeSet, levels: &[u32]) -> Result<BoxDimensionFit> {
    if set.is_empty() {
        return precondition("box dimension of an empty set");
    }
    let mut ls = levels.to_vec();
    ls.sort_unstable();
    ls.dedup();
    if ls.len() < 4 {
        return domain(format!("box dimension fit needs 4 distinct scales, got {}", ls.len()));
    }
    let mut counts = Vec::with_capacity(ls.len());
    for &l in &ls {
        counts.push((l, covering_number(set, l)?));
    }
    let xs: Vec<f64> = counts.iter().map(|&(l, _)| l as f64 * LN_2).collect();
    let ys: Vec<f64> = counts.iter().map(|&(_, n)| (n as f64).ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let estimate = cov / var;
    let b = my - estimate * mx;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let e = y - (estimate * x + b);
            e * e
        })
        .sum::<f64>()
        / k)
        .sqrt();
    Ok(BoxDimensionFit { estimate, residual, counts })
}

/// Does the line through `x` in chart direction `theta` meet the raster
/// only near `x`?
///
/// A cell blocks the direction when its `eps`-neighbourhood test
/// `dist(center, line) - h(|n₁| + |n₂|) ≤ eps` passes (the subtracted term
/// absorbs the cell's own extent against the line's normal `n`) while some
/// corner lies outside the closed ball `B(x, r/2)`.
pub fn direction_is_accessible(k: &CubeSet, x: (f64, f64), theta: f64, r: f64, eps: f64) -> bool {
    let delta = k.delta();
    let h = delta / 2.0;
    let ang = 2.0 * PI * theta;
    let (n1, n2) = (ang.cos(), ang.sin());
    let spread = h * (n1.abs() + n2.abs());
    for &(a, b) in k.cells() {
        let cx = (a as f64 + 0.5) * delta;
        let cy = (b as f64 + 0.5) * delta;
        let d = ((cx - x.0) * n1 + (cy - x.1) * n2).abs() - spread;
        if d <= eps {
            let ex = a as f64 * delta;
            let ey = b as f64 * delta;
            let fx = (ex - x.0).abs().max((ex + delta - x.0).abs());
            let fy = (ey - x.1).abs().max((ey + delta - x.1).abs());
            if fx.hypot(fy) > r / 2.0 {
                return false;
            }
        }
    }
    true
}

/// Number of raster cells whose `eps`-band around the direction-`theta`
/// line through `x` is nonempty. Feed for the accessibility reports.
pub fn line_intersection_count(k: &CubeSet, x: (f64, f64), theta: f64, eps: f64) -> usize {
    let delta = k.delta();
    let h = delta / 2.0;
    let ang = 2.0 * PI * theta;
    let (n1, n2) = (ang.cos(), ang.sin());
    let spread = h * (n1.abs() + n2.abs());
    k.cells()
        .iter()
        .filter(|&&(a, b)| {
            let cx = (a as f64 + 0.5) * delta;
            let cy = (b as f64 + 0.5) * delta;
            ((cx - x.0) * n1 + (cy - x.1) * n2).abs() - spread <= eps
        })
        .count()
}

/// Accessible directions of one base point over a uniform direction grid.
#[derive(Debug, Clone)]
pub struct DirectionSet {
    pub grid: usize,
    pub accessible: Vec<usize>,
    pub x: (f64, f64),
    pub r: f64,
    pub eps: f64,
}

/// Scans directions `i/grid` for `i ∈ 0..grid`. Directions `θ` and
/// `θ + 1/2` name the same line, so the result is symmetric under
/// `i ↦ i + grid/2` when `grid` is even.
pub fn accessible_directions(
    k: &CubeSet,
    x: (f64, f64),
    r: f64,
    eps: f64,
    grid: usize,
) -> Result<DirectionSet> {
    if grid == 0 {
        return domain("direction grid must be positive");
    }
    if !(r > 0.0) || !(eps > 0.0) {
        return domain("accessibility radii must be positive");
    }
    let side = 1i64 << k.level();
    let bx = ((x.0 * side as f64).floor() as i64).clamp(0, side - 1);
    let by = ((x.1 * side as f64).floor() as i64).clamp(0, side - 1);
    if !k.cells().iter().any(|&(a, b)| (a - bx).abs() <= 1 && (b - by).abs() <= 1) {
        return precondition("base point is not within one cell of the raster");
    }
    let accessible = (0..grid)
        .filter(|&i| direction_is_accessible(k, x, i as f64 / grid as f64, r, eps))
        .collect();
    Ok(DirectionSet { grid, accessible, x, r, eps })
}

/// Box-dimension comparison of a graph against the bound
/// `dim Γ_f(A) ≤ dim A + 1 - α`.
#[derive(Debug, Clone)]
pub struct KahaneReport {
    pub graph_dimension: f64,
    pub base_dimension: f64,
    pub bound: f64,
    pub slack: f64,
    pub graph_fit: BoxDimensionFit,
    pub base_fit: BoxDimensionFit,
}

/// Measures `dim Γ_f(A)` for `A` a union of level-`a_level` intervals and
/// checks it against `dim A + 1 - α`. Dimensions are box-counting fits, so
/// `slack` can dip slightly negative on small or scale-incoherent inputs;
/// anything below about `-0.15` means the bound genuinely failed.
pub fn kahane_bound_check(
    f: &HolderFunction,
    a_cells: &[i64],
    a_level: u32,
    graph_level: u32,
    scales: &[u32],
) -> Result<KahaneReport> {
    if a_cells.is_empty() {
        return precondition("Kahane check needs a nonempty base set");
    }
    if a_level < 4 {
        return domain("base level below 4 leaves too few scales for the base fit");
    }
    if graph_level < a_level {
        return domain(format!(
            "graph level {graph_level} coarser than base level {a_level}"
        ));
    }
    let span = 1i64 << a_level;
    if a_cells.iter().any(|&c| c < 0 || c >= span) {
        return domain("base cell outside the unit interval");
    }
    let exp = ((graph_level - a_level) as f64 / f.alpha).ceil() as u32 + 2;
    if exp > MAX_SAMPLE_EXP || (a_cells.len() as u64) << exp > 1 << MAX_SAMPLE_EXP {
        return domain("graph raster sample budget exceeded");
    }
    let steps = 1u64 << exp;
    let side = 1i64 << graph_level;
    let da = (0.5f64).powi(a_level as i32);
    let mut cells = BTreeSet::new();
    for &c in a_cells {
        for j in 0..=steps {
            let u = (c as f64 + j as f64 / steps as f64) * da;
            let cx = ((u * side as f64).floor() as i64).clamp(0, side - 1);
            let cy = ((f.value(u) * side as f64).floor() as i64).clamp(0, side - 1);
            cells.insert((cx, cy));
        }
    }
    let graph = CubeSet::from_cells(graph_level, cells.into_iter().collect())?;
    let graph_fit = box_dimension(&graph, scales)?;
    let base = CubeSet::from_cells(a_level, a_cells.iter().map(|&c| (c, 0)).collect())?;
    let base_scales: Vec<u32> = (a_level.saturating_sub(4).max(1)..=a_level).collect();
    let base_fit = box_dimension(&base, &base_scales)?;
    let bound = base_fit.estimate + 1.0 - f.alpha;
    Ok(KahaneReport {
        graph_dimension: graph_fit.estimate,
        base_dimension: base_fit.estimate,
        bound,
        slack: bound - graph_fit.estimate,
        graph_fit,
        base_fit,
    })
}

/// One candidate exceptional direction set and the violation found for it.
#[derive(Debug, Clone)]
pub struct ExceptionalFamilyRow {
    pub description: String,
    pub family_size: usize,
    pub witness: Option<usize>,
    pub witness_theta: Option<f64>,
    pub witness_point: Option<(f64, f64)>,
    pub tried: usize,
}

#[derive(Debug, Clone)]
pub struct ExceptionalDirectionReport {
    pub t: f64,
    pub t_bar: f64,
    pub gamma: f64,
    pub level: u32,
    pub grid: usize,
    pub budget: usize,
    pub raster_cells: usize,
    pub vacuous: bool,
    pub all_violated: bool,
    pub rows: Vec<ExceptionalFamilyRow>,
}

/// Tests that no small direction set can absorb all accessibility of a
/// dimension-`t_bar` radial graph.
///
/// For each candidate family `E` of at most `grid^gamma` directions inside
/// the radial window, the scan looks for a direction outside `E` whose line
/// meets the raster only near its own radial base point. Such a witness
/// violates the premise that every direction off `E` meets the curve twice.
/// Above the critical exponent, `1 + (t - t_bar) ≤ gamma`, every direction
/// set is admissible and the experiment passes vacuously.
pub fn exceptional_direction_experiment(
    t: f64,
    t_bar: f64,
    gamma: f64,
    level: u32,
) -> Result<ExceptionalDirectionReport> {
    if !(1.0 <= t && t < t_bar && t_bar < 2.0) {
        return domain(format!("need 1 ≤ t < t_bar < 2, got t = {t}, t_bar = {t_bar}"));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return domain(format!("direction-set dimension {gamma} outside (0, 1]"));
    }
    if level < 3 {
        return domain("experiment needs raster level at least 3");
    }
    let n = 4usize << level;
    if 1.0 + (t - t_bar) <= gamma {
        return Ok(ExceptionalDirectionReport {
            t,
            t_bar,
            gamma,
            level,
            grid: n,
            budget: 0,
            raster_cells: 0,
            vacuous: true,
            all_violated: true,
            rows: Vec::new(),
        });
    }
    let depth = (level.div_ceil(2) as usize).max(3);
    let f = besicovitch_ursell(t_bar, depth)?;
    let graph = radial_graph(&f, level)?;
    // powf lands a hair under exact powers of two; nudge before truncating.
    let budget = ((n as f64).powf(gamma) + 1e-9).floor() as usize;
    let (lo, hi) = (n / 4, n / 2);
    if budget < 2 || budget > n / 4 {
        return domain(format!("direction budget {budget} does not fit the tested window"));
    }
    let mut families: Vec<(String, BTreeSet<usize>)> = Vec::new();
    for j in 0..8usize {
        let start = lo + ((j * (lo - budget)) as f64 / 7.0).round() as usize;
        families.push((format!("arc@{start}"), (start..start + budget).collect()));
    }
    families.push((
        "spread".to_string(),
        (0..budget)
            .map(|j| (lo + ((j * lo) as f64 / budget as f64).round() as usize).min(hi))
            .collect(),
    ));
    let half = budget / 2;
    let mut split: BTreeSet<usize> = (lo..lo + half).collect();
    split.extend(hi - (budget - half) + 1..=hi);
    families.push(("split".to_string(), split));
    let eps = (0.5f64).powi(level as i32);
    let rows: Vec<ExceptionalFamilyRow> = families
        .into_iter()
        .map(|(description, family)| {
            let mut row = ExceptionalFamilyRow {
                description,
                family_size: family.len(),
                witness: None,
                witness_theta: None,
                witness_point: None,
                tried: 0,
            };
            for i in lo..=hi {
                if family.contains(&i) {
                    continue;
                }
                row.tried += 1;
                // Window indices map to curve parameters: the direction
                // i/n is radial for the base point of parameter u.
                let u = i as f64 / (1u64 << level) as f64 - 1.0;
                let x = graph.point_at(u);
                let theta = i as f64 / n as f64;
                if direction_is_accessible(graph.raster(), x, theta, 0.25, eps) {
                    row.witness = Some(i);
                    row.witness_theta = Some(theta);
                    row.witness_point = Some(x);
                    break;
                }
            }
            row
        })
        .collect();
    let all_violated = rows.iter().all(|r| r.witness.is_some());
    Ok(ExceptionalDirectionReport {
        t,
        t_bar,
        gamma,
        level,
        grid: n,
        budget,
        raster_cells: graph.raster().len(),
        vacuous: false,
        all_violated,
        rows,
    })
}
