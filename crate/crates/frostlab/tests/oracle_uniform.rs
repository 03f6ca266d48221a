//! Frozen expected values for uniform-subset extraction, branching
//! functions, the good-scale selector and renormalization.

use frostlab::dyadic::{CubeSet, DeltaMeasure, DyadicCube};
use frostlab::uniform::{
    branching_function, check_superlinear, extract_uniform_subset, find_arithmetic_progression,
    good_scales, renormalize_cubes, renormalize_measure, select_scale_indices, PiecewiseLinear,
};

fn xorshift(state: &mut u64) -> u64 {
    *state ^= *state << 13;
    *state ^= *state >> 7;
    *state ^= *state << 17;
    *state
}

fn full_grid(level: u32) -> CubeSet {
    let n = 1i64 << level;
    let mut cells = Vec::new();
    for x in 0..n {
        for y in 0..n {
            cells.push((x, y));
        }
    }
    CubeSet::from_cells(level, cells).unwrap()
}

#[test]
fn full_grid_is_already_uniform() {
    let p = full_grid(4);
    let u = extract_uniform_subset(&p, 2, 2).unwrap();
    assert_eq!(u.cubes(), &p);
    assert_eq!(u.branching_counts(), &[16, 16]);
}

#[test]
fn non_dyadic_branching_survives_extraction() {
    // Three cells per parent at both levels: N_j = 3 is not a power of two,
    // yet the set is exactly uniform and must come back unchanged.
    let pattern = [(0i64, 0i64), (0, 1), (1, 0)];
    let mut cells = Vec::new();
    for &(px, py) in &pattern {
        for &(cx, cy) in &pattern {
            cells.push((2 * px + cx, 2 * py + cy));
        }
    }
    let p = CubeSet::from_cells(2, cells).unwrap();
    let u = extract_uniform_subset(&p, 1, 2).unwrap();
    assert_eq!(u.cubes(), &p);
    assert_eq!(u.branching_counts(), &[3, 3]);
}

#[test]
fn extraction_bound_and_uniformity_on_random_sets() {
    let mut state = 0x452821e638d01377u64;
    for _ in 0..50 {
        let mut cells = Vec::new();
        for x in 0..16i64 {
            for y in 0..16i64 {
                if xorshift(&mut state) % 2 == 0 {
                    cells.push((x, y));
                }
            }
        }
        if cells.is_empty() {
            continue;
        }
        let p = CubeSet::from_cells(4, cells).unwrap();
        let u = extract_uniform_subset(&p, 2, 2).unwrap();
        // The advertised cardinality bound, in exact integer arithmetic.
        assert!(u.cubes().len() as u128 * 16 >= p.len() as u128);
        // Independent uniformity recount.
        let counts = u.branching_counts();
        for (j, &nj) in counts.iter().enumerate() {
            let parent_level = 2 * j as u32;
            let child_level = parent_level + 2;
            let mut per_parent = std::collections::BTreeMap::new();
            let mut seen = std::collections::BTreeSet::new();
            for &(x, y) in u.cubes().cells() {
                let c = (x >> (4 - child_level), y >> (4 - child_level));
                let q = (x >> (4 - parent_level), y >> (4 - parent_level));
                if seen.insert(c) {
                    *per_parent.entry(q).or_insert(0u64) += 1;
                }
            }
            for (&q, &count) in &per_parent {
                assert_eq!(count, nj, "parent {q:?} at step {j}");
            }
        }
        // Idempotence.
        let again = extract_uniform_subset(u.cubes(), 2, 2).unwrap();
        assert_eq!(again.cubes(), u.cubes());
    }
}

#[test]
fn branching_values_match_hand_computations() {
    let grid = extract_uniform_subset(&full_grid(4), 1, 4).unwrap();
    let beta = branching_function(&grid).unwrap();
    assert_eq!(beta.values(), &[0.0, 2.0, 4.0, 6.0, 8.0]);

    let row = CubeSet::from_cells(3, (0..8).map(|x| (x, 0)).collect()).unwrap();
    let row_u = extract_uniform_subset(&row, 1, 3).unwrap();
    let row_beta = branching_function(&row_u).unwrap();
    assert_eq!(row_beta.values(), &[0.0, 1.0, 2.0, 3.0]);

    let single = CubeSet::from_cells(2, vec![(1, 2)]).unwrap();
    let single_u = extract_uniform_subset(&single, 1, 2).unwrap();
    let single_beta = branching_function(&single_u).unwrap();
    assert_eq!(single_beta.values(), &[0.0, 0.0, 0.0]);
}

#[test]
fn superlinearity_slack_measurements() {
    let grid = branching_function(&extract_uniform_subset(&full_grid(5), 1, 5).unwrap()).unwrap();
    let (passes, slack) = check_superlinear(&grid, 2.0, 0.1, 0).unwrap();
    assert!(passes);
    assert_eq!(slack, 0.0);

    let row = CubeSet::from_cells(5, (0..32).map(|x| (x, 0)).collect()).unwrap();
    let row_beta = branching_function(&extract_uniform_subset(&row, 1, 5).unwrap()).unwrap();
    let (fails, row_slack) = check_superlinear(&row_beta, 2.0, 0.5, 0).unwrap();
    assert!(!fails);
    assert_eq!(row_slack, 5.0);

    // Staircase with values [0,2,2,4]: worst slack 0.4 from the base, 1.2
    // from index 1.
    let stair = PiecewiseLinear::new(vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 2.0, 2.0, 4.0]).unwrap();
    let stair_beta = frostlab::uniform::BranchingFunction::from_values(vec![0.0, 2.0, 2.0, 4.0]).unwrap();
    assert_eq!(stair.eval(1.5), 2.0);
    let (_, s0) = check_superlinear(&stair_beta, 1.2, 0.0, 0).unwrap();
    assert!((s0 - 0.4).abs() < 1e-12);
    let (_, s1) = check_superlinear(&stair_beta, 1.2, 0.0, 1).unwrap();
    assert!((s1 - 1.2).abs() < 1e-12);
}

#[test]
fn good_scales_of_linear_growth_is_everything() {
    let f = PiecewiseLinear::new(vec![0.0, 1.0], vec![0.0, 1.5]).unwrap();
    let g = good_scales(&f, 1.5, 1.0, 0.5, 0.01).unwrap();
    assert!((g.measure - 0.5).abs() < 1e-12);
    assert_eq!(g.intervals.len(), 1);
    assert!((g.intervals[0].0 - 0.0).abs() < 1e-12);
    assert!((g.intervals[0].1 - 0.5).abs() < 1e-12);
}

#[test]
fn good_scales_excludes_a_plateau() {
    // Slope 2, flat on [0.2, 0.4], slope 2 again. With tau = 0.2 the good
    // set is [0, 8/45] ∪ [0.4, 1], measure 7/9.
    let f = PiecewiseLinear::new(
        vec![0.0, 0.2, 0.4, 1.0],
        vec![0.0, 0.4, 0.4, 1.6],
    )
    .unwrap();
    let g = good_scales(&f, 1.2, 0.2, 1.0, 0.1).unwrap();
    assert!((g.measure - 7.0 / 9.0).abs() < 1e-9, "{}", g.measure);

    // Pointwise oracle on a fine grid, away from interval endpoints.
    let tau = 0.2;
    let grid: Vec<f64> = (0..=10_000).map(|i| i as f64 / 10_000.0).collect();
    for &x in &grid {
        let gx = f.eval(x) - tau * x;
        let min_tail = grid
            .iter()
            .filter(|&&y| y >= x)
            .map(|&y| f.eval(y) - tau * y)
            .fold(f64::INFINITY, f64::min);
        let direct = gx <= min_tail + 1e-12;
        let inside = g
            .intervals
            .iter()
            .any(|&(a, b)| x >= a - 1e-12 && x <= b + 1e-12);
        let near_edge = g
            .intervals
            .iter()
            .any(|&(a, b)| (x - a).abs() < 2e-4 || (x - b).abs() < 2e-4);
        if !near_edge {
            assert_eq!(direct, inside, "disagreement at x = {x}");
        }
    }
}

#[test]
fn good_scales_rejects_bad_hypotheses() {
    // f(0) != 0.
    let shifted = PiecewiseLinear::new(vec![0.0, 1.0], vec![0.1, 1.5]).unwrap();
    assert!(good_scales(&shifted, 1.5, 1.0, 0.5, 0.01).is_err());
    // Not d-Lipschitz for d = 2.
    let steep = PiecewiseLinear::new(vec![0.0, 0.1, 1.0], vec![0.0, 0.5, 1.5]).unwrap();
    assert!(good_scales(&steep, 1.5, 1.0, 0.5, 0.01).is_err());
    // Growth deficit beyond eps.
    let flat = PiecewiseLinear::new(vec![0.0, 1.0], vec![0.0, 0.5]).unwrap();
    assert!(good_scales(&flat, 1.5, 1.0, 0.5, 0.01).is_err());
}

#[test]
fn full_grid_selects_every_scale_up_to_gamma() {
    let u = extract_uniform_subset(&full_grid(4), 1, 4).unwrap();
    let sel = select_scale_indices(&u, 2.0, 1.5, 0.5, 0.005).unwrap();
    assert_eq!(sel.good, vec![0, 1, 2]);
    for cert in &sel.certificates {
        assert!(cert.passed);
        assert!(cert.worst_constant <= sel.constant_cap);
    }
}

#[test]
fn product_set_yields_certified_scales() {
    // Full in x, two-digit Cantor in y: exactly (delta, 1.5)-dimensional.
    let mut cells = Vec::new();
    for x in 0..16i64 {
        for &y in &[0i64, 2, 8, 10] {
            cells.push((x, y));
        }
    }
    let p = CubeSet::from_cells(4, cells).unwrap();
    let u = extract_uniform_subset(&p, 1, 4).unwrap();
    assert_eq!(u.cubes(), &p);
    assert_eq!(u.branching_counts(), &[4, 2, 4, 2]);
    let sel = select_scale_indices(&u, 1.5, 1.2, 0.5, 0.002).unwrap();
    assert_eq!(sel.good, vec![0, 2]);
    for cert in &sel.certificates {
        assert!(cert.passed);
    }
}

#[test]
fn renormalization_round_trip() {
    let mut state = 0xbe5466cf34e90c6cu64;
    let mut cells = Vec::new();
    for x in 0..16i64 {
        for y in 0..16i64 {
            if xorshift(&mut state) % 3 == 0 {
                cells.push((x, y));
            }
        }
    }
    let p = CubeSet::from_cells(4, cells).unwrap();
    let q = DyadicCube::unit(1, 1, 0).unwrap();
    let r = renormalize_cubes(&p, &q).unwrap();
    assert_eq!(r.level(), 3);
    // Map back and compare against the trace.
    let mut back: Vec<(i64, i64)> = r.cells().iter().map(|&(x, y)| (x + 8, y)).collect();
    back.sort_unstable();
    let trace: Vec<(i64, i64)> = p
        .cells()
        .iter()
        .copied()
        .filter(|&(x, y)| (x >> 3, y >> 3) == (1, 0))
        .collect();
    assert_eq!(back, trace);

    // Identity renormalization.
    let unit = DyadicCube::unit(0, 0, 0).unwrap();
    assert_eq!(renormalize_cubes(&p, &unit).unwrap(), p);
}

#[test]
fn renormalized_measure_is_a_probability() {
    let m = DeltaMeasure::from_weights(
        3,
        vec![((0, 0), 0.25), ((1, 0), 0.5), ((5, 5), 0.75)],
    )
    .unwrap();
    let q = DyadicCube::unit(1, 0, 0).unwrap();
    let r = renormalize_measure(&m, &q).unwrap();
    assert!((r.total() - 1.0).abs() < 1e-12);
    assert_eq!(r.level(), 2);
    assert!((r.mass_of((0, 0)) - 1.0 / 3.0).abs() < 1e-12);
    assert!((r.mass_of((1, 0)) - 2.0 / 3.0).abs() < 1e-12);

    let empty_q = DyadicCube::unit(1, 0, 1).unwrap();
    assert!(renormalize_measure(&m, &empty_q).is_err());
}

#[test]
fn arithmetic_progressions_by_exhaustive_search() {
    let g: Vec<i64> = (0..10).collect();
    let ap = find_arithmetic_progression(&g, 5, 1).unwrap();
    assert_eq!((ap.start, ap.gap), (0, 1));
    assert_eq!(ap.terms(), vec![0, 1, 2, 3, 4]);

    let ap2 = find_arithmetic_progression(&[0, 2, 4, 8], 3, 1).unwrap();
    assert_eq!(ap2.terms(), vec![0, 2, 4]);

    assert!(find_arithmetic_progression(&[0, 1, 3, 7], 3, 1).is_none());
    // Gap floor forces skipping the dense head.
    let ap3 = find_arithmetic_progression(&(0..12).collect::<Vec<_>>(), 3, 4).unwrap();
    assert_eq!((ap3.start, ap3.gap), (0, 4));
}
