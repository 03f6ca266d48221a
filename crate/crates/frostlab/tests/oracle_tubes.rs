//! Frozen expected values for point-line duality, dyadic tubes and the
//! rescaled line-family covering.

use frostlab::dyadic::DyadicCube;
use frostlab::tubes::{
    dual_line, dual_of_point, line_for_direction, line_point_distance, rescale_line_family,
    slope_constant_comparison, tube_cube_incidence, unit_vector, check_tube_set, Tube, TubeSet,
};

#[test]
fn dual_of_origin_is_x_axis() {
    let l = dual_line(0.0, 0.0);
    assert!(!l.rotated);
    assert!(l.contains_point((0.5, 0.0)));
    assert!(!l.contains_point((0.5, 0.1)));
}

#[test]
fn dual_of_1_0_is_main_diagonal() {
    let l = dual_line(1.0, 0.0);
    assert!(l.contains_point((1.0, 1.0)));
    assert!(l.contains_point((0.25, 0.25)));
}

#[test]
fn steep_duals_use_the_rotated_chart() {
    let l = dual_line(2.0, 1.0);
    assert!(l.rotated);
    // y = 2x + 1 passes through (0,1) and (-0.5,0).
    assert!(l.contains_point((0.0, 1.0)));
    assert!(l.contains_point((-0.5, 0.0)));
}

#[test]
fn duality_preserves_incidences() {
    // p on the line of q  ⟺  q on the dual line of p.
    let q = (0.25, 0.5);
    let p = (0.5, 0.25 * 0.5 + 0.5);
    assert!(dual_line(q.0, q.1).contains_point(p));
    assert!(dual_of_point(p.0, p.1).contains_point(q));

    let off = (0.5, 0.7);
    assert!(!dual_line(q.0, q.1).contains_point(off));
    assert!(!dual_of_point(off.0, off.1).contains_point(q));
}

#[test]
fn flat_tube_meets_corner_cube_but_not_lifted_cube() {
    let t = Tube::new(3, 0, 0).unwrap();
    let low = DyadicCube::unit(3, 0, 0).unwrap();
    let high = DyadicCube::unit(3, 0, 4).unwrap();
    assert!(tube_cube_incidence(&t, &low));
    assert!(!tube_cube_incidence(&t, &high));
}

#[test]
fn incidence_matches_dense_dual_sampling() {
    // One-sided oracle: any sampled member line that meets the cube forces
    // the exact test to agree; and if the exact test says no line meets the
    // cube, no sample may contradict it.
    let mut state = 0x243f6a8885a308d3u64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        state
    };
    for _ in 0..200 {
        let level = 3 + (next() % 3) as u32;
        let n = 1i64 << level;
        let t = Tube::new(level, (next() % (2 * n) as u64) as i64 - n, (next() % (3 * n) as u64) as i64 - n)
            .unwrap();
        let q = DyadicCube::unit(level, (next() % n as u64) as i64, (next() % n as u64) as i64).unwrap();
        let exact = tube_cube_incidence(&t, &q);
        let (a0, _) = t.a_interval();
        let (b0, _) = t.b_interval();
        let step = t.delta() / 16.0;
        let (x0, y0) = q.corner();
        let (x1, y1) = (x0 + q.side(), y0 + q.side());
        let mut sampled = false;
        for i in 0..16 {
            for j in 0..16 {
                let a = a0 + (i as f64 + 0.5) * step;
                let b = b0 + (j as f64 + 0.5) * step;
                let lo = (a * x0).min(a * x1) + b;
                let hi = (a * x0).max(a * x1) + b;
                if lo <= y1 && hi >= y0 {
                    sampled = true;
                }
            }
        }
        assert!(!sampled || exact, "sampling found a line the exact test missed");
    }
}

#[test]
fn slope_set_collapses_shared_columns() {
    let ts = TubeSet::from_tubes(4, vec![(0, 0), (0, 3), (1, 5)]).unwrap();
    assert_eq!(ts.slope_set(), vec![0.0, 0.0625]);
    let empty = TubeSet::from_tubes(4, vec![]).unwrap();
    assert!(empty.slope_set().is_empty());
}

#[test]
fn single_tube_constant_is_inverse_delta_to_the_s() {
    let ts = TubeSet::from_tubes(4, vec![(3, 2)]).unwrap();
    let rel = check_tube_set(&ts, 1.0, None, false).unwrap();
    assert!((rel.minimal_constant - 16.0).abs() < 1e-9);
    let half = check_tube_set(&ts, 0.5, None, false).unwrap();
    assert!((half.minimal_constant - 4.0).abs() < 1e-9);
    let kt = check_tube_set(&ts, 1.0, None, true).unwrap();
    assert!((kt.minimal_constant - 1.0).abs() < 1e-9);
}

#[test]
fn stacked_column_is_one_dimensional_in_intercept() {
    let ts = TubeSet::from_tubes(4, (0..16).map(|b| (0, b)).collect()).unwrap();
    let rep = check_tube_set(&ts, 1.0, None, false).unwrap();
    assert!(rep.minimal_constant <= 4.0, "{}", rep.minimal_constant);
    assert!(rep.minimal_constant >= 1.0 - 1e-12);
}

#[test]
fn pencil_through_origin_cube_has_comparable_constants() {
    let level = 3u32;
    let ts = TubeSet::from_tubes(level, (-8..8).map(|a| (a, 0)).collect()).unwrap();
    let p = DyadicCube::unit(level, 0, 0).unwrap();
    let (c_tubes, c_slopes) = slope_constant_comparison(&ts, &p, 1.0).unwrap();
    assert!(c_tubes <= 4.0, "{c_tubes}");
    assert!(c_slopes <= 4.0, "{c_slopes}");
    let ratio = c_tubes / c_slopes;
    assert!(ratio <= 16.0 && ratio >= 1.0 / 16.0, "{ratio}");
}

#[test]
fn single_tube_comparison_is_exactly_balanced() {
    let level = 3u32;
    let ts = TubeSet::from_tubes(level, vec![(0, 0)]).unwrap();
    let p = DyadicCube::unit(level, 0, 0).unwrap();
    let (c_tubes, c_slopes) = slope_constant_comparison(&ts, &p, 1.0).unwrap();
    assert!((c_tubes - 8.0).abs() < 1e-9);
    assert!((c_slopes - 8.0).abs() < 1e-9);
}

#[test]
fn cantor_slope_pencil_constants_agree() {
    // Slope indices {0,1,4,5} form the second stage of a quarter-scale
    // Cantor set. The worst ball sits at index 1 and radius 1/4, catching
    // three of the four cells: 3/(r^½·4) = 1.5, for tubes and slopes alike.
    let level = 4u32;
    let ts = TubeSet::from_tubes(level, [0, 1, 4, 5].iter().map(|&a| (a, 0)).collect()).unwrap();
    let p = DyadicCube::unit(level, 0, 0).unwrap();
    let (c_tubes, c_slopes) = slope_constant_comparison(&ts, &p, 0.5).unwrap();
    assert!((c_tubes - 1.5).abs() < 1e-9, "{c_tubes}");
    assert!((c_slopes - 1.5).abs() < 1e-9, "{c_slopes}");
}

#[test]
fn comparison_requires_all_tubes_through_the_cube() {
    let level = 3u32;
    let ts = TubeSet::from_tubes(level, vec![(0, 0), (0, 100)]).unwrap();
    let p = DyadicCube::unit(level, 0, 0).unwrap();
    assert!(slope_constant_comparison(&ts, &p, 1.0).is_err());
}

#[test]
fn rescaling_by_the_unit_cube_returns_the_tube_itself() {
    let q = DyadicCube::unit(0, 0, 0).unwrap();
    let t = Tube::new(2, 0, 0).unwrap();
    let p = DyadicCube::unit(2, 0, 0).unwrap();
    let out = rescale_line_family(&p, &t, &q).unwrap();
    assert_eq!(out.tubes(), &[(0, 0)]);
}

#[test]
fn corner_cube_family_needs_two_tubes() {
    // Lines of the flat quarter-scale tube through the fine corner cube map
    // to intercepts [0, 1/4] under the corner renormalization; the closed
    // right endpoint forces a second covering cell.
    let q = DyadicCube::unit(2, 0, 0).unwrap();
    let t = Tube::new(2, 0, 0).unwrap();
    let p = DyadicCube::unit(4, 0, 0).unwrap();
    let out = rescale_line_family(&p, &t, &q).unwrap();
    assert_eq!(out.tubes(), &[(0, 0), (0, 1)]);
    for slope in out.slope_set() {
        assert!((slope - t.slope()).abs() <= 2.0 * t.delta() + 1e-12);
    }
}

#[test]
fn rescaling_rejects_mismatched_scales() {
    let q = DyadicCube::unit(2, 0, 0).unwrap();
    let t = Tube::new(2, 0, 0).unwrap();
    let p = DyadicCube::unit(3, 0, 0).unwrap();
    assert!(rescale_line_family(&p, &t, &q).is_err());
}

#[test]
fn rescaled_family_covers_sampled_lines() {
    let mut state = 0x9e3779b97f4a7c15u64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        state
    };
    let mut nonempty = 0;
    for _ in 0..40 {
        let ql = 2u32;
        let tl = 3u32;
        let pl = ql + tl;
        let q = DyadicCube::unit(ql, (next() % 4) as i64, (next() % 4) as i64).unwrap();
        // Pick p inside q.
        let sub = 1i64 << tl;
        let p = DyadicCube::unit(
            pl,
            q.x * sub + (next() % sub as u64) as i64,
            q.y * sub + (next() % sub as u64) as i64,
        )
        .unwrap();
        let n = 1i64 << tl;
        let t = Tube::new(tl, (next() % (2 * n) as u64) as i64 - n, (next() % (2 * n) as u64) as i64 - n / 2)
            .unwrap();
        let out = rescale_line_family(&p, &t, &q).unwrap();
        assert!(out.len() <= 4, "cover used {} tubes", out.len());
        for slope in out.slope_set() {
            assert!((slope - t.slope()).abs() <= 2.0 * t.delta() + 1e-12);
        }

        // Sampling oracle: every sampled member line, renormalized, must
        // land inside one of the covering dual cells.
        let (a0, _) = t.a_interval();
        let (b0, _) = t.b_interval();
        let dt = t.delta();
        let (px0, py0) = p.corner();
        let (px1, py1) = (px0 + p.side(), py0 + p.side());
        let (qx0, qy0) = q.corner();
        let ll = q.side();
        for i in 0..32 {
            for j in 0..32 {
                let a = a0 + (i as f64 + 0.5) / 32.0 * dt;
                let b = b0 + (j as f64 + 0.5) / 32.0 * dt;
                let lo = (a * px0).min(a * px1) + b;
                let hi = (a * px0).max(a * px1) + b;
                if lo <= py1 && hi >= py0 {
                    nonempty += 1;
                    let b_mapped = (a * qx0 + b - qy0) / ll;
                    let covered = out.iter().any(|ot| {
                        let (oa0, oa1) = ot.a_interval();
                        let (ob0, ob1) = ot.b_interval();
                        a >= oa0 && a < oa1 && b_mapped >= ob0 && b_mapped < ob1
                    });
                    assert!(covered, "sampled line (a={a}, b'={b_mapped}) escaped the cover");
                }
            }
        }
    }
    assert!(nonempty > 0, "oracle never exercised a member line");
}

#[test]
fn direction_helpers_agree_with_hand_values() {
    let e = unit_vector(0.25);
    assert!(e.0.abs() < 1e-12 && (e.1 - 1.0).abs() < 1e-12);
    // theta = 1/4 points straight up, so the perpendicular line through x is
    // horizontal: y = x_2.
    let l = line_for_direction((0.25, 0.75), 0.25);
    assert!(!l.rotated);
    assert!(l.a.abs() < 1e-9 && (l.b - 0.75).abs() < 1e-9);
    // theta = 0 gives a vertical line, which needs the rotated chart.
    let v = line_for_direction((0.25, 0.75), 0.0);
    assert!(v.rotated);
    assert!(v.a.abs() < 1e-9 && (v.b - 0.25).abs() < 1e-9);
    let d = line_point_distance((1.0, 1.0), (0.25, 0.75), 0.25);
    assert!((d - 0.25).abs() < 1e-12);
}
