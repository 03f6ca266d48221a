//! Frozen expected values for the dyadic grid layer, each derived by hand or
//! by an independent reference computation kept inside this file.

use frostlab::dyadic::{
    check_delta_set, check_frostman_measure, check_katz_tao, covering_number, dyadic_content,
    enumerate_cubes, extract_delta_subset, riesz_energy, CubeSet, DeltaMeasure,
};

fn diagonal(level: u32) -> CubeSet {
    let n = 1i64 << level;
    CubeSet::from_cells(level, (0..n).map(|i| (i, i)).collect()).unwrap()
}

#[test]
fn full_grid_enumeration_level_2_has_16_cells() {
    let s = enumerate_cubes(2, |_, _| true).unwrap();
    assert_eq!(s.len(), 16);
}

#[test]
fn single_point_enumeration_level_3_has_1_cell() {
    let s = enumerate_cubes(3, |x, y| x == 0.0 && y == 0.0).unwrap();
    assert_eq!(s.cells(), &[(0, 0)]);
}

#[test]
fn diagonal_enumeration_level_3_has_8_cells() {
    let s = enumerate_cubes(3, |x, y| x == y).unwrap();
    assert_eq!(s.len(), 8);
    assert_eq!(s, diagonal(3));
}

#[test]
fn enumeration_depth_is_capped() {
    assert!(enumerate_cubes(13, |_, _| true).is_err());
}

#[test]
fn covering_diagonal_by_quarter_cells_needs_4() {
    assert_eq!(covering_number(&diagonal(3), 2).unwrap(), 4);
}

#[test]
fn covering_at_own_level_is_cardinality() {
    let s = diagonal(4);
    assert_eq!(covering_number(&s, 4).unwrap(), s.len());
}

#[test]
fn content_of_two_opposite_corner_cells_at_t1_is_quarter() {
    // Leaves cost 1/8 each and no ancestor short-circuits below the root,
    // where min(1, 1/8 + 1/8) = 1/4.
    let s = CubeSet::from_cells(3, vec![(0, 0), (7, 7)]).unwrap();
    let c = dyadic_content(&s, 1.0).unwrap();
    assert!((c - 0.25).abs() < 1e-12, "content {c}");
}

#[test]
fn content_of_full_grid_at_t2_is_one() {
    let s = enumerate_cubes(3, |_, _| true).unwrap();
    let c = dyadic_content(&s, 2.0).unwrap();
    assert!((c - 1.0).abs() < 1e-12, "content {c}");
}

#[test]
fn content_of_row_at_t1_is_one() {
    let s = CubeSet::from_cells(4, (0..16).map(|i| (i, 0)).collect()).unwrap();
    let c = dyadic_content(&s, 1.0).unwrap();
    assert!((c - 1.0).abs() < 1e-12, "content {c}");
}

#[test]
fn content_never_exceeds_trivial_caps() {
    let s = diagonal(5);
    let t = 1.3;
    let c = dyadic_content(&s, t).unwrap();
    let leaf = (0.5f64).powi(5).powf(t);
    assert!(c <= s.len() as f64 * leaf + 1e-12);
    assert!(c <= 1.0 + 1e-12);
}

#[test]
fn singleton_minimal_delta_set_constant_is_inverse_delta() {
    // One cell: the worst ratio sits at r = delta where 1 <= C * delta * 1.
    let s = CubeSet::from_cells(4, vec![(3, 5)]).unwrap();
    let rep = check_delta_set(&s, 1.0, None).unwrap();
    assert!((rep.minimal_constant - 16.0).abs() < 1e-9, "{}", rep.minimal_constant);
    assert!((rep.witness_radius - 1.0 / 16.0).abs() < 1e-12);
}

#[test]
fn singleton_katz_tao_constant_is_one() {
    let s = CubeSet::from_cells(4, vec![(9, 2)]).unwrap();
    let rep = check_katz_tao(&s, 1.0, None).unwrap();
    assert!((rep.minimal_constant - 1.0).abs() < 1e-9, "{}", rep.minimal_constant);
}

#[test]
fn full_grid_is_a_2_dimensional_set_with_small_constant() {
    let s = enumerate_cubes(4, |_, _| true).unwrap();
    let rep = check_delta_set(&s, 2.0, Some(16.0)).unwrap();
    assert!(rep.passes, "minimal constant {}", rep.minimal_constant);
    assert!(rep.minimal_constant <= 4.0, "{}", rep.minimal_constant);
}

#[test]
fn separated_row_is_a_1_dimensional_set_with_small_constant() {
    let s = CubeSet::from_cells(4, (0..16).map(|i| (i, 0)).collect()).unwrap();
    let rep = check_delta_set(&s, 1.0, None).unwrap();
    assert!(rep.minimal_constant <= 4.0, "{}", rep.minimal_constant);
    assert!(rep.minimal_constant >= 1.0 - 1e-12);
}

#[test]
fn requested_constant_decides_pass_flag() {
    let s = CubeSet::from_cells(4, vec![(3, 5)]).unwrap();
    let fail = check_delta_set(&s, 1.0, Some(8.0)).unwrap();
    assert!(!fail.passes);
    let pass = check_delta_set(&s, 1.0, Some(16.0)).unwrap();
    assert!(pass.passes);
}

#[test]
fn unit_mass_frostman_constant_is_inverse_delta() {
    let m = DeltaMeasure::from_weights(4, vec![((7, 7), 1.0)]).unwrap();
    let rep = check_frostman_measure(&m, 1.0, None).unwrap();
    assert!((rep.minimal_constant - 16.0).abs() < 1e-9, "{}", rep.minimal_constant);
}

#[test]
fn lebesgue_weights_are_2_frostman_with_constant_at_most_4() {
    let level = 4u32;
    let w = (0.5f64).powi(2 * level as i32);
    let cells = (0..16)
        .flat_map(|x| (0..16).map(move |y| ((x, y), w)))
        .collect();
    let m = DeltaMeasure::from_weights(level, cells).unwrap();
    let rep = check_frostman_measure(&m, 2.0, Some(4.0)).unwrap();
    assert!(rep.passes, "minimal constant {}", rep.minimal_constant);
}

#[test]
fn riesz_energy_of_unit_mass_is_inverse_delta() {
    let m = DeltaMeasure::from_weights(4, vec![((0, 0), 1.0)]).unwrap();
    let e = riesz_energy(&m, 1.0).unwrap();
    assert!((e - 16.0).abs() < 1e-9, "{e}");
}

#[test]
fn riesz_offdiagonal_energy_of_two_half_masses_at_distance_one() {
    // Centers (1/16, 1/16) and (17/16, 1/16) are exactly distance 1 apart;
    // the cross terms contribute 2 * (1/2 * 1/2) / 1 = 1/2.
    let m = DeltaMeasure::from_weights(3, vec![((0, 0), 0.5), ((8, 0), 0.5)]).unwrap();
    let e = riesz_energy(&m, 1.0).unwrap();
    let self_part = 2.0 * 0.25 * 8.0;
    assert!((e - self_part - 0.5).abs() < 1e-9, "{e}");
}

#[test]
fn riesz_energy_rejects_exponents_of_2_and_beyond() {
    let m = DeltaMeasure::from_weights(3, vec![((0, 0), 1.0)]).unwrap();
    assert!(riesz_energy(&m, 2.0).is_err());
    assert!(riesz_energy(&m, 2.5).is_err());
}

#[test]
fn riesz_energy_matches_plain_double_loop() {
    // Independent reference: literal double loop over all ordered pairs.
    let level = 5u32;
    let mut cells = Vec::new();
    let mut seed = 0x9e3779b97f4a7c15u64;
    for x in 0..32i64 {
        for y in 0..32i64 {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            if seed >> 60 < 5 {
                cells.push(((x, y), ((seed >> 16) & 0xff) as f64 / 255.0 + 0.01));
            }
        }
    }
    let m = DeltaMeasure::from_weights(level, cells.clone()).unwrap();
    for &t in &[0.5, 1.0, 1.7] {
        let fast = riesz_energy(&m, t).unwrap();
        let delta = (0.5f64).powi(level as i32);
        let mut slow = 0.0;
        for &((x1, y1), w1) in &cells {
            for &((x2, y2), w2) in &cells {
                let dx = (x1 - x2) as f64 * delta;
                let dy = (y1 - y2) as f64 * delta;
                let d = (dx * dx + dy * dy).sqrt().max(delta);
                slow += w1 * w2 / d.powf(t);
            }
        }
        assert!(
            (fast - slow).abs() <= 1e-12 * slow.abs().max(1.0),
            "t={t}: {fast} vs {slow}"
        );
    }
}

#[test]
fn subset_extraction_keeps_full_grid_whole() {
    let s = enumerate_cubes(3, |_, _| true).unwrap();
    let out = extract_delta_subset(&s, 2.0, 0.5).unwrap();
    assert_eq!(out, s);
}

#[test]
fn subset_extraction_keeps_full_row_whole() {
    let s = CubeSet::from_cells(4, (0..16).map(|i| (i, 0)).collect()).unwrap();
    let out = extract_delta_subset(&s, 1.0, 0.5).unwrap();
    assert_eq!(out, s);
}

#[test]
fn subset_extraction_requires_content_above_kappa() {
    let s = CubeSet::from_cells(4, vec![(0, 0)]).unwrap();
    assert!(extract_delta_subset(&s, 1.0, 0.5).is_err());
}

#[test]
fn subset_extraction_is_certified_against_kappa() {
    let s = enumerate_cubes(5, |x, y| {
        let u = (x * 32.0) as i64;
        let v = (y * 32.0) as i64;
        (u ^ v) % 3 != 1
    })
    .unwrap();
    let kappa = 0.25;
    let out = extract_delta_subset(&s, 1.5, kappa).unwrap();
    assert!(!out.is_empty());
    assert!(out.cells().iter().all(|c| s.cells().contains(c)));
    let rep = check_delta_set(&out, 1.5, None).unwrap();
    assert!(
        rep.minimal_constant <= extract_subset_constant_bound(kappa),
        "constant {} vs bound {}",
        rep.minimal_constant,
        extract_subset_constant_bound(kappa)
    );
}

fn extract_subset_constant_bound(kappa: f64) -> f64 {
    frostlab::dyadic::EXTRACT_SUBSET_CONSTANT / kappa
}

#[test]
fn window_bound_dominates_exact_constant() {
    for (set, t) in [
        (diagonal(5), 1.0),
        (enumerate_cubes(4, |_, _| true).unwrap(), 2.0),
        (CubeSet::from_cells(4, (0..16).map(|i| (i, 0)).collect()).unwrap(), 1.0),
    ] {
        let exact = check_delta_set(&set, t, None).unwrap().minimal_constant;
        let window = frostlab::dyadic::window_constant_bound(&set, t).unwrap();
        assert!(window >= exact - 1e-12, "window {window} < exact {exact}");
    }
}
