//! Configurations of point masses with direction distributions, their
//! line-space measure, the X-ray measure and its adjoint, bump smoothing,
//! and product-measure tube masses.
//!
//! Every rasterized quantity lives on a [`GridFunction`]; lines deposit mass
//! through one shared exact-arclength walker so the transform, the adjoint
//! and the support audits all see the same geometry.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dyadic::{dyadic_content, CubeSet, DeltaMeasure, DyadicCube, MAX_LEVEL};
use crate::fourier::fft2;
use crate::tubes::{line_for_direction, unit_vector, Tube};
use crate::{domain, precondition, FrostError, Result};

/// `x · (cos 2πθ, sin 2πθ)`.
pub fn project(theta: f64, x: (f64, f64)) -> f64 {
    let (c, s) = unit_vector(theta);
    x.0 * c + x.1 * s
}

/// Axis-aligned raster window with step `2^-resolution`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub x0: f64,
    pub y0: f64,
    pub nx: usize,
    pub ny: usize,
    pub resolution: u32,
}

impl Window {
    pub fn new(x0: f64, y0: f64, nx: usize, ny: usize, resolution: u32) -> Result<Window> {
        if resolution > MAX_LEVEL {
            return domain(format!("resolution {resolution} exceeds maximum {MAX_LEVEL}"));
        }
        if nx == 0 || ny == 0 || nx.saturating_mul(ny) > 1 << 24 {
            return domain(format!("window of {nx} x {ny} pixels is empty or too large"));
        }
        if !x0.is_finite() || !y0.is_finite() {
            return domain("window corner must be finite");
        }
        Ok(Window { x0, y0, nx, ny, resolution })
    }

    /// `[0,1]²` at the given resolution.
    pub fn unit(resolution: u32) -> Result<Window> {
        if resolution > 12 {
            return domain(format!("unit window at 2^-{resolution} would be huge"));
        }
        let n = 1usize << resolution;
        Window::new(0.0, 0.0, n, n, resolution)
    }

    pub fn step(&self) -> f64 {
        (0.5f64).powi(self.resolution as i32)
    }

    pub fn x1(&self) -> f64 {
        self.x0 + self.nx as f64 * self.step()
    }

    pub fn y1(&self) -> f64 {
        self.y0 + self.ny as f64 * self.step()
    }

    pub fn is_unit_square(&self) -> bool {
        self.x0 == 0.0 && self.y0 == 0.0 && self.nx == 1 << self.resolution && self.nx == self.ny
    }
}

/// A raster of 64-bit values over a window, x-major (`ix * ny + iy`).
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    window: Window,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(window: Window) -> GridFunction {
        GridFunction {
            window,
            values: vec![0.0; window.nx * window.ny],
        }
    }

    /// Samples `f` at pixel centers.
    pub fn from_fn(window: Window, f: impl Fn(f64, f64) -> f64) -> GridFunction {
        let step = window.step();
        let mut values = Vec::with_capacity(window.nx * window.ny);
        for ix in 0..window.nx {
            for iy in 0..window.ny {
                let x = window.x0 + (ix as f64 + 0.5) * step;
                let y = window.y0 + (iy as f64 + 0.5) * step;
                values.push(f(x, y));
            }
        }
        GridFunction { window, values }
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[ix * self.window.ny + iy]
    }

    pub fn set(&mut self, ix: usize, iy: usize, v: f64) {
        self.values[ix * self.window.ny + iy] = v;
    }

    pub fn add(&mut self, ix: usize, iy: usize, v: f64) {
        self.values[ix * self.window.ny + iy] += v;
    }

    /// Piecewise-constant evaluation; zero outside the window.
    pub fn value_at(&self, x: f64, y: f64) -> f64 {
        let step = self.window.step();
        let fx = (x - self.window.x0) / step;
        let fy = (y - self.window.y0) / step;
        if fx < 0.0 || fy < 0.0 {
            return 0.0;
        }
        let (ix, iy) = (fx as usize, fy as usize);
        if ix >= self.window.nx || iy >= self.window.ny {
            return 0.0;
        }
        self.get(ix, iy)
    }

    /// `step² Σ values`.
    pub fn integral(&self) -> f64 {
        let s = self.window.step();
        self.values.iter().sum::<f64>() * s * s
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0f64, f64::max)
    }

    fn add_grid(&mut self, other: &GridFunction) {
        debug_assert_eq!(self.window, other.window);
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
    }

    /// Flat binary of 64-bit little-endian floats behind a one-line text
    /// header; corners stored as bit patterns so round-trips are exact.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        writeln!(
            w,
            "frostlab-grid 1 {} {} {} {:016x} {:016x}",
            self.window.nx,
            self.window.ny,
            self.window.resolution,
            self.window.x0.to_bits(),
            self.window.y0.to_bits()
        )?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_binary(path: &Path) -> Result<GridFunction> {
        let mut r = BufReader::new(std::fs::File::open(path)?);
        let mut header = String::new();
        r.read_line(&mut header)?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 7 || parts[0] != "frostlab-grid" || parts[1] != "1" {
            return Err(FrostError::Parse(format!("bad grid header: {header:?}")));
        }
        let nx: usize = parts[2].parse().map_err(|e| FrostError::Parse(format!("{e}")))?;
        let ny: usize = parts[3].parse().map_err(|e| FrostError::Parse(format!("{e}")))?;
        let resolution: u32 = parts[4].parse().map_err(|e| FrostError::Parse(format!("{e}")))?;
        let x0 = f64::from_bits(
            u64::from_str_radix(parts[5], 16).map_err(|e| FrostError::Parse(format!("{e}")))?,
        );
        let y0 = f64::from_bits(
            u64::from_str_radix(parts[6], 16).map_err(|e| FrostError::Parse(format!("{e}")))?,
        );
        let window = Window::new(x0, y0, nx, ny, resolution)?;
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() != nx * ny * 8 {
            return Err(FrostError::Parse(format!(
                "grid payload holds {} bytes, expected {}",
                bytes.len(),
                nx * ny * 8
            )));
        }
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(GridFunction { window, values })
    }

    /// `x,y,value` rows at pixel centers.
    pub fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        writeln!(out, "x,y,value")?;
        let step = self.window.step();
        for ix in 0..self.window.nx {
            for iy in 0..self.window.ny {
                writeln!(
                    out,
                    "{},{},{}",
                    self.window.x0 + (ix as f64 + 0.5) * step,
                    self.window.y0 + (iy as f64 + 0.5) * step,
                    self.get(ix, iy)
                )?;
            }
        }
        Ok(())
    }
}

/// Parameter range where `origin + t·dir` stays inside the closed window.
fn clip_to_window(w: &Window, o: (f64, f64), d: (f64, f64)) -> Option<(f64, f64)> {
    let mut t0 = f64::NEG_INFINITY;
    let mut t1 = f64::INFINITY;
    for (oc, dc, lo, hi) in [
        (o.0, d.0, w.x0, w.x1()),
        (o.1, d.1, w.y0, w.y1()),
    ] {
        if dc.abs() < 1e-300 {
            if oc < lo || oc > hi {
                return None;
            }
        } else {
            let (a, b) = ((lo - oc) / dc, (hi - oc) / dc);
            let (a, b) = if a <= b { (a, b) } else { (b, a) };
            t0 = t0.max(a);
            t1 = t1.min(b);
        }
    }
    (t0 < t1).then_some((t0, t1))
}

/// Visits every pixel the line crosses with its exact arclength inside.
/// `dir` must be unit length so parameter increments are arclengths.
fn for_each_pixel_length(
    w: &Window,
    o: (f64, f64),
    d: (f64, f64),
    visit: &mut dyn FnMut(usize, usize, f64),
) {
    let Some((t0, t1)) = clip_to_window(w, o, d) else {
        return;
    };
    let step = w.step();
    let mut ts = vec![t0, t1];
    for (oc, dc, base) in [(o.0, d.0, w.x0), (o.1, d.1, w.y0)] {
        if dc.abs() < 1e-12 {
            continue;
        }
        let (p0, p1) = (oc + t0 * dc, oc + t1 * dc);
        let (lo, hi) = if p0 <= p1 { (p0, p1) } else { (p1, p0) };
        let k0 = ((lo - base) / step).ceil() as i64;
        let k1 = ((hi - base) / step).floor() as i64;
        for k in k0..=k1 {
            let t = (base + k as f64 * step - oc) / dc;
            if t > t0 && t < t1 {
                ts.push(t);
            }
        }
    }
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for pair in ts.windows(2) {
        let len = pair[1] - pair[0];
        if len <= 1e-15 {
            continue;
        }
        let tm = 0.5 * (pair[0] + pair[1]);
        let mx = o.0 + tm * d.0;
        let my = o.1 + tm * d.1;
        let ix = (((mx - w.x0) / step) as i64).clamp(0, w.nx as i64 - 1) as usize;
        let iy = (((my - w.y0) / step) as i64).clamp(0, w.ny as i64 - 1) as usize;
        visit(ix, iy, len);
    }
}

/// Line integral of `f` over `π_θ^{-1}{r}` by uniform arclength sampling at
/// half the raster step with trapezoidal weights. Zero when the line misses
/// the window.
pub fn xray_transform(f: &GridFunction, theta: f64, r: f64) -> f64 {
    let (c, s) = unit_vector(theta);
    let o = (r * c, r * s);
    let d = (-s, c);
    let Some((t0, t1)) = clip_to_window(f.window(), o, d) else {
        return 0.0;
    };
    let n = ((t1 - t0) / (f.window().step() / 2.0)).ceil().max(1.0) as usize;
    let h = (t1 - t0) / n as f64;
    let mut sum = 0.0;
    for k in 0..=n {
        let t = t0 + k as f64 * h;
        let v = f.value_at(o.0 + t * d.0, o.1 + t * d.1);
        sum += if k == 0 || k == n { 0.5 * v } else { v };
    }
    sum * h
}

/// A measure `μ` at scale `δ` together with a direction distribution per
/// support cell, constant on the cell. Each `σ_p` is a sub-probability on
/// the `θ`-grid of spacing `2^-theta_level ≤ δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    mu: DeltaMeasure,
    theta_level: u32,
    sigma: BTreeMap<(i64, i64), Vec<(u32, f64)>>,
}

impl Configuration {
    pub fn new(
        mu: DeltaMeasure,
        theta_level: u32,
        sigma: BTreeMap<(i64, i64), Vec<(u32, f64)>>,
    ) -> Result<Configuration> {
        if theta_level < mu.level() {
            return domain(format!(
                "theta grid spacing 2^-{theta_level} is coarser than delta = 2^-{}",
                mu.level()
            ));
        }
        if theta_level > 30 {
            return domain(format!("theta level {theta_level} too fine"));
        }
        let nodes = 1u64 << theta_level;
        for (cell, entries) in &sigma {
            if mu.mass_of(*cell) <= 0.0 {
                return domain(format!("sigma on cell {cell:?} outside the support of mu"));
            }
            let mut total = 0.0;
            let mut last: Option<u32> = None;
            for &(idx, w) in entries {
                if idx as u64 >= nodes {
                    return domain(format!("theta index {idx} outside the level-{theta_level} grid"));
                }
                if !(w >= 0.0 && w.is_finite()) {
                    return domain(format!("direction weight {w} invalid"));
                }
                if last.is_some_and(|p| p >= idx) {
                    return domain("direction entries must be sorted by index, no duplicates");
                }
                last = Some(idx);
                total += w;
            }
            if total > 1.0 + 1e-12 {
                return domain(format!("sigma total {total} on {cell:?} exceeds 1"));
            }
        }
        Ok(Configuration { mu, theta_level, sigma })
    }

    /// The same direction distribution on every support cell.
    pub fn constant(
        mu: DeltaMeasure,
        theta_level: u32,
        weights: Vec<(u32, f64)>,
    ) -> Result<Configuration> {
        let sigma = mu
            .atoms()
            .iter()
            .map(|&(cell, _)| (cell, weights.clone()))
            .collect();
        Configuration::new(mu, theta_level, sigma)
    }

    pub fn mu(&self) -> &DeltaMeasure {
        &self.mu
    }

    pub fn theta_level(&self) -> u32 {
        self.theta_level
    }

    pub fn theta(&self, idx: u32) -> f64 {
        idx as f64 * (0.5f64).powi(self.theta_level as i32)
    }

    pub fn sigma(&self, cell: (i64, i64)) -> &[(u32, f64)] {
        self.sigma.get(&cell).map_or(&[], |v| v.as_slice())
    }

    pub fn sigma_total(&self, cell: (i64, i64)) -> f64 {
        self.sigma(cell).iter().map(|&(_, w)| w).sum()
    }

    /// `Σ_p μ(p) σ_p(total)`, the mass the line-space measure must carry.
    pub fn total_line_mass(&self) -> f64 {
        self.mu
            .atoms()
            .iter()
            .map(|&(cell, m)| m * self.sigma_total(cell))
            .sum()
    }

    /// Restriction of `μ` to the cells `keep` accepts, directions kept as-is.
    pub fn restricted(&self, keep: impl Fn((i64, i64)) -> bool) -> Configuration {
        let mu = self.mu.restricted(|cell, _| keep(cell));
        let sigma = self
            .sigma
            .iter()
            .filter(|(cell, _)| keep(**cell) && mu.mass_of(**cell) > 0.0)
            .map(|(c, v)| (*c, v.clone()))
            .collect();
        Configuration {
            mu,
            theta_level: self.theta_level,
            sigma,
        }
    }

    fn cell_center(&self, cell: (i64, i64)) -> (f64, f64) {
        let d = self.mu.delta();
        ((cell.0 as f64 + 0.5) * d, (cell.1 as f64 + 0.5) * d)
    }
}

/// Sparse non-negative weights on a `(θ, r)` grid over `[0,1] × [-2,2]`:
/// `θ` nodes `i · 2^-theta_level`, `r` bins of width `2^-r_level`.
#[derive(Debug, Clone, PartialEq)]
pub struct LineMeasure {
    theta_level: u32,
    r_level: u32,
    cells: Vec<((u32, i64), f64)>,
}

impl LineMeasure {
    pub fn from_cells(
        theta_level: u32,
        r_level: u32,
        mut cells: Vec<((u32, i64), f64)>,
    ) -> Result<LineMeasure> {
        if theta_level > 30 || r_level > 40 {
            return domain(format!("line grid ({theta_level},{r_level}) too fine"));
        }
        let r_bins = 4i64 << r_level;
        for &((ti, rj), w) in &cells {
            if ti as u64 >= 1 << theta_level {
                return domain(format!("theta index {ti} outside the level-{theta_level} grid"));
            }
            if rj < 0 || rj >= r_bins {
                return domain(format!("r index {rj} outside [0,{r_bins})"));
            }
            if !(w >= 0.0 && w.is_finite()) {
                return domain(format!("line mass {w} invalid"));
            }
        }
        cells.sort_by_key(|&(k, _)| k);
        let mut merged: Vec<((u32, i64), f64)> = Vec::with_capacity(cells.len());
        for (k, w) in cells {
            match merged.last_mut() {
                Some((lk, lw)) if *lk == k => *lw += w,
                _ => merged.push((k, w)),
            }
        }
        Ok(LineMeasure {
            theta_level,
            r_level,
            cells: merged,
        })
    }

    pub fn theta_level(&self) -> u32 {
        self.theta_level
    }

    pub fn r_level(&self) -> u32 {
        self.r_level
    }

    pub fn cells(&self) -> &[((u32, i64), f64)] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.cells.iter().map(|&(_, w)| w).sum()
    }

    pub fn theta(&self, idx: u32) -> f64 {
        idx as f64 * (0.5f64).powi(self.theta_level as i32)
    }

    /// Center of the `r` bin `[-2 + j·w, -2 + (j+1)·w)`.
    pub fn r_center(&self, j: i64) -> f64 {
        -2.0 + (j as f64 + 0.5) * (0.5f64).powi(self.r_level as i32)
    }
}

/// Pushforward of the configuration onto `(θ, π_θ(center(p)))` bins.
/// Mass-preserving by construction; `r_level` picks the bin width, which
/// downstream rasterization wants well below its pixel size.
pub fn line_measure(c: &Configuration, r_level: u32) -> Result<LineMeasure> {
    if r_level > 40 {
        return domain(format!("r level {r_level} too fine"));
    }
    let w = (0.5f64).powi(r_level as i32);
    let mut bins: BTreeMap<(u32, i64), f64> = BTreeMap::new();
    for &(cell, mass) in c.mu().atoms() {
        let center = c.cell_center(cell);
        for &(ti, sw) in c.sigma(cell) {
            if sw == 0.0 {
                continue;
            }
            let r = project(c.theta(ti), center);
            let j = ((r + 2.0) / w).floor() as i64;
            *bins.entry((ti, j)).or_insert(0.0) += mass * sw;
        }
    }
    LineMeasure::from_cells(c.theta_level(), r_level, bins.into_iter().collect())
}

/// Deposits each line cell onto the raster: pixel value gains
/// `mass · arclength / step²`, so `⟨f, X*ν⟩ = ⟨Xf, ν⟩` up to rasterization.
///
/// Cells are processed in fixed chunks whose partial grids are merged in
/// chunk order, so the result is deterministic under any thread schedule.
pub fn adjoint_xray(nu: &LineMeasure, window: &Window) -> GridFunction {
    let cells = nu.cells();
    if cells.is_empty() {
        return GridFunction::zeros(*window);
    }
    let chunk = cells
        .len()
        .div_ceil(rayon::current_num_threads().max(1) * 2)
        .max(1);
    let inv_area = 1.0 / (window.step() * window.step());
    let partials: Vec<GridFunction> = cells
        .par_chunks(chunk)
        .map(|part| {
            let mut g = GridFunction::zeros(*window);
            let w = *window;
            for &((ti, rj), mass) in part {
                let (c, s) = unit_vector(nu.theta(ti));
                let r = nu.r_center(rj);
                let o = (r * c, r * s);
                let d = (-s, c);
                for_each_pixel_length(&w, o, d, &mut |ix, iy, len| {
                    g.add(ix, iy, mass * len * inv_area);
                });
            }
            g
        })
        .collect();
    let mut out = GridFunction::zeros(*window);
    for p in &partials {
        out.add_grid(p);
    }
    out
}

fn direct_lines(c: &Configuration) -> Vec<((f64, f64), f64, f64)> {
    // (center, theta, line mass) per configuration line with positive mass.
    let mut lines = Vec::new();
    for &(cell, mass) in c.mu().atoms() {
        let center = c.cell_center(cell);
        for &(ti, sw) in c.sigma(cell) {
            if mass * sw > 0.0 {
                lines.push((center, c.theta(ti), mass * sw));
            }
        }
    }
    lines
}

/// Rasterizes the configuration lines directly, with no line-space binning:
/// the independent comparison path for the composed X-ray measure.
pub fn xray_measure_direct(c: &Configuration, window: &Window) -> GridFunction {
    let mut g = GridFunction::zeros(*window);
    let inv_area = 1.0 / (window.step() * window.step());
    let w = *window;
    for (center, theta, mass) in direct_lines(c) {
        let (co, si) = unit_vector(theta);
        let r = center.0 * co + center.1 * si;
        let o = (r * co, r * si);
        let d = (-si, co);
        for_each_pixel_length(&w, o, d, &mut |ix, iy, len| {
            g.add(ix, iy, mass * len * inv_area);
        });
    }
    g
}

/// The X-ray measure as the adjoint of the line-space pushforward, binned
/// at 1/64 of a pixel so the quantization stays well under rasterization
/// error. Mass outside two pixels of the exact line union fails the
/// support audit.
pub fn xray_measure(c: &Configuration, window: &Window) -> Result<GridFunction> {
    let nu = line_measure(c, window.resolution + 6)?;
    let x = adjoint_xray(&nu, window);

    let mut on_line = vec![false; window.nx * window.ny];
    let w = *window;
    for (center, theta, _) in direct_lines(c) {
        let (co, si) = unit_vector(theta);
        let r = center.0 * co + center.1 * si;
        for_each_pixel_length(&w, (r * co, r * si), (-si, co), &mut |ix, iy, _| {
            on_line[ix * w.ny + iy] = true;
        });
    }
    for ix in 0..window.nx {
        for iy in 0..window.ny {
            if x.get(ix, iy) <= 0.0 {
                continue;
            }
            let mut near = false;
            'scan: for dx in -2i64..=2 {
                for dy in -2i64..=2 {
                    let (jx, jy) = (ix as i64 + dx, iy as i64 + dy);
                    if jx >= 0
                        && jy >= 0
                        && (jx as usize) < window.nx
                        && (jy as usize) < window.ny
                        && on_line[jx as usize * window.ny + jy as usize]
                    {
                        near = true;
                        break 'scan;
                    }
                }
            }
            if !near {
                return Err(FrostError::Certification(format!(
                    "X-ray mass {} at pixel ({ix},{iy}) outside the line support",
                    x.get(ix, iy)
                )));
            }
        }
    }
    Ok(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BumpMode {
    /// `∫φ = 1` with `1_{B(1/2)} ≤ φ·∫φ ≤ 1_{B(1)}` before normalization.
    UnitIntegral,
    /// `1_{B(100)} ≤ φ ≤ 1_{B(200)}` before rescaling; the `Δ`-rescale is
    /// the mollifier one, `φ_Δ = Δ^-2 φ(·/Δ)`.
    BandBounded,
}

/// Radially non-increasing cosine-taper profile at scale `Δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub mode: BumpMode,
    pub scale: f64,
}

impl Bump {
    pub fn new(mode: BumpMode, scale: f64) -> Result<Bump> {
        if !(scale > 0.0 && scale.is_finite()) {
            return domain(format!("bump scale {scale} invalid"));
        }
        Ok(Bump { mode, scale })
    }

    /// Profile before rescaling: 1 on the inner ball, cosine-squared taper
    /// to zero on the outer one.
    fn profile(&self, rho: f64) -> f64 {
        let (inner, outer) = match self.mode {
            BumpMode::UnitIntegral => (0.5, 1.0),
            BumpMode::BandBounded => (100.0, 200.0),
        };
        if rho <= inner {
            1.0
        } else if rho < outer {
            let u = (rho - inner) / (outer - inner) * std::f64::consts::FRAC_PI_2;
            u.cos().powi(2)
        } else {
            0.0
        }
    }
}

/// Discrete convolution with the rasterized bump. Unit-integral mode
/// normalizes the discrete kernel, so integrals are preserved exactly up to
/// rounding; band-bounded mode carries the mollifier amplitude `Δ^-2`.
/// Kernels wider than a small cutoff go through FFT.
pub fn convolve_bump(x: &GridFunction, b: &Bump) -> Result<GridFunction> {
    let w = *x.window();
    let step = w.step();
    if b.scale < 2.0 * step {
        return precondition(format!(
            "bump scale {} under-resolved at raster step {step}",
            b.scale
        ));
    }
    let outer = match b.mode {
        BumpMode::UnitIntegral => 1.0,
        BumpMode::BandBounded => 200.0,
    };
    let radius_px = ((outer * b.scale) / step).ceil() as i64;
    // Offsets beyond the grid extent never pair two window pixels.
    let r = radius_px.min(w.nx.max(w.ny) as i64 - 1);
    let side = (2 * r + 1) as usize;
    let mut kernel = vec![0.0f64; side * side];
    let mut raw_sum = 0.0;
    for di in -r..=r {
        for dj in -r..=r {
            let rho = ((di * di + dj * dj) as f64).sqrt() * step / b.scale;
            let v = b.profile(rho);
            kernel[(di + r) as usize * side + (dj + r) as usize] = v;
            raw_sum += v;
        }
    }
    let amplitude = match b.mode {
        // Discrete normalization: step² Σ kernel = 1.
        BumpMode::UnitIntegral => {
            if raw_sum <= 0.0 {
                return precondition("bump kernel vanished on the raster");
            }
            1.0 / (raw_sum * step * step)
        }
        BumpMode::BandBounded => 1.0 / (b.scale * b.scale),
    };
    // Fold the quadrature step² into the kernel once.
    let scale = amplitude * step * step;
    for v in &mut kernel {
        *v *= scale;
    }
    if side <= 33 {
        Ok(convolve_direct(x, &kernel, r))
    } else {
        Ok(convolve_fft(x, &kernel, r))
    }
}

fn convolve_direct(x: &GridFunction, kernel: &[f64], r: i64) -> GridFunction {
    let w = *x.window();
    let side = (2 * r + 1) as usize;
    let ny = w.ny as i64;
    let nx = w.nx as i64;
    let values: Vec<f64> = (0..nx)
        .into_par_iter()
        .flat_map_iter(|ix| {
            let x_ref = x;
            (0..ny).map(move |iy| {
                let mut acc = 0.0;
                let di0 = (-r).max(ix - (nx - 1));
                let di1 = r.min(ix);
                let dj0 = (-r).max(iy - (ny - 1));
                let dj1 = r.min(iy);
                for di in di0..=di1 {
                    let krow = (di + r) as usize * side;
                    let xrow = ((ix - di) * ny) as usize;
                    for dj in dj0..=dj1 {
                        acc += kernel[krow + (dj + r) as usize]
                            * x_ref.values()[xrow + (iy - dj) as usize];
                    }
                }
                acc
            })
        })
        .collect();
    GridFunction { window: w, values }
}

fn convolve_fft(x: &GridFunction, kernel: &[f64], r: i64) -> GridFunction {
    let w = *x.window();
    let side = (2 * r + 1) as usize;
    let px = (w.nx + side).next_power_of_two();
    let py = (w.ny + side).next_power_of_two();
    let mut a = vec![Complex64::default(); px * py];
    for ix in 0..w.nx {
        for iy in 0..w.ny {
            a[ix * py + iy] = Complex64::new(x.get(ix, iy), 0.0);
        }
    }
    let mut k = vec![Complex64::default(); px * py];
    for di in -r..=r {
        for dj in -r..=r {
            let v = kernel[(di + r) as usize * side + (dj + r) as usize];
            if v != 0.0 {
                let ix = di.rem_euclid(px as i64) as usize;
                let iy = dj.rem_euclid(py as i64) as usize;
                k[ix * py + iy] = Complex64::new(v, 0.0);
            }
        }
    }
    let mut planner = FftPlanner::new();
    fft2(&mut a, px, py, &mut planner, false);
    fft2(&mut k, px, py, &mut planner, false);
    for (av, kv) in a.iter_mut().zip(&k) {
        *av *= *kv;
    }
    fft2(&mut a, px, py, &mut planner, true);
    let norm = 1.0 / (px * py) as f64;
    let mut out = GridFunction::zeros(w);
    for ix in 0..w.nx {
        for iy in 0..w.ny {
            out.set(ix, iy, a[ix * py + iy].re * norm);
        }
    }
    out
}

/// `Σ_{p ⊂ Q} μ(p) · σ_p({θ : ℓ_{center(p),θ} ⊂ T})`, with line-in-tube
/// membership decided exactly through the dual square.
pub fn mu_times_sigma(c: &Configuration, q: &DyadicCube, t: &Tube) -> Result<f64> {
    if q.level > c.mu().level() {
        return domain(format!(
            "cube level {} finer than the configuration scale {}",
            q.level,
            c.mu().level()
        ));
    }
    let shift = c.mu().level() - q.level;
    let mut total = 0.0;
    for &(cell, mass) in c.mu().atoms() {
        if (cell.0 >> shift, cell.1 >> shift) != (q.x, q.y) {
            continue;
        }
        let center = c.cell_center(cell);
        let captured: f64 = c
            .sigma(cell)
            .iter()
            .filter(|&&(ti, _)| t.contains_line(&line_for_direction(center, c.theta(ti))))
            .map(|&(_, w)| w)
            .sum();
        total += mass * captured;
    }
    Ok(total)
}

/// Dyadic content at exponent `t` of the superlevel set `{X ≥ Δ^eps1}`
/// with the two-pixel dilation of the support mask removed.
pub fn superlevel_content(
    x: &GridFunction,
    delta: f64,
    eps1: f64,
    t: f64,
    spt_mask: &GridFunction,
) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return domain(format!("scale {delta} outside (0,1)"));
    }
    let w = x.window();
    if spt_mask.window() != w {
        return domain("mask and density windows differ");
    }
    if !w.is_unit_square() {
        return domain("superlevel content needs the unit-square window");
    }
    if x.values().iter().any(|&v| v < 0.0) {
        return precondition("superlevel content of a signed function");
    }
    let threshold = delta.powf(eps1);
    let (nx, ny) = (w.nx, w.ny);
    let mut mask = vec![false; nx * ny];
    for ix in 0..nx {
        for iy in 0..ny {
            if spt_mask.get(ix, iy) > 0.0 {
                mask[ix * ny + iy] = true;
            }
        }
    }
    let near_mask = |ix: usize, iy: usize| -> bool {
        for dx in -2i64..=2 {
            for dy in -2i64..=2 {
                let (jx, jy) = (ix as i64 + dx, iy as i64 + dy);
                if jx >= 0
                    && jy >= 0
                    && (jx as usize) < nx
                    && (jy as usize) < ny
                    && mask[jx as usize * ny + jy as usize]
                {
                    return true;
                }
            }
        }
        false
    };
    let mut cells = Vec::new();
    for ix in 0..nx {
        for iy in 0..ny {
            if x.get(ix, iy) >= threshold && !near_mask(ix, iy) {
                cells.push((ix as i64, iy as i64));
            }
        }
    }
    if cells.is_empty() {
        return Ok(0.0);
    }
    dyadic_content(&CubeSet::from_cells(w.resolution, cells)?, t)
}
