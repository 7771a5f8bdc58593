use std::f64::consts::PI;
use std::str::FromStr;

use proptest::prelude::*;
use stokes_lbb::fespace::FECombo;
use stokes_lbb::infsup::{infsup_constant, local_nullspace, InfSupOptions};
use stokes_lbb::macroelement::{
    build_macroelements, classify_2d, predict_regularity, s_condition, MacroElement, Tolerances, ALIGNMENT_TOL,
};
use stokes_lbb::mesh::{gen_perturbed, gen_structured_tri, CellKind, Mesh, Rect};
use stokes_lbb::unstructure::{apply_algorithm1, unstructured_family, verify_uniform, Axis, UnstructureConfig};

fn star(polar: &[(f64, f64)], center: [f64; 2]) -> Mesh {
    let mut verts = vec![[center[0], center[1], 0.0]];
    for &(r, t) in polar {
        verts.push([center[0] + r * t.cos(), center[1] + r * t.sin(), 0.0]);
    }
    let n = polar.len();
    let cells = (0..n).map(|i| vec![0, 1 + i, 1 + (i + 1) % n]).collect();
    Mesh::new(CellKind::Triangle, verts, cells, vec![]).unwrap()
}

fn only_macro(mesh: &Mesh) -> MacroElement {
    build_macroelements(mesh).macros.into_iter().next().unwrap()
}

/// Ring angles in `[0, 2pi)` with gaps below `0.9 pi`; `aligned` ring points
/// are snapped onto the horizontal line through the center.
fn polar_star() -> impl Strategy<Value = Vec<(f64, f64)>> {
    (4usize..=8)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(1.0f64..3.0, n),
                prop::collection::vec(0.5f64..1.5, n),
                0.0f64..(2.0 * PI),
                0usize..3,
            )
        })
        .prop_map(|(w, radii, rot, aligned)| {
            let total: f64 = w.iter().sum();
            let mut t = rot;
            let mut angles = Vec::new();
            for wi in &w {
                angles.push(t.rem_euclid(2.0 * PI));
                t += 2.0 * PI * wi / total;
            }
            angles.sort_by(f64::total_cmp);
            let snap = |angles: &mut Vec<f64>, target: f64| {
                let k = (0..angles.len())
                    .min_by(|&a, &b| {
                        let da = (angles[a] - target).abs().min(2.0 * PI - (angles[a] - target).abs());
                        let db = (angles[b] - target).abs().min(2.0 * PI - (angles[b] - target).abs());
                        da.total_cmp(&db)
                    })
                    .unwrap();
                angles[k] = target;
            };
            if aligned >= 1 {
                snap(&mut angles, 0.0);
            }
            if aligned >= 2 {
                snap(&mut angles, PI);
            }
            angles.sort_by(f64::total_cmp);
            angles.into_iter().zip(radii).map(|(t, r)| (r, t)).collect::<Vec<_>>()
        })
        .prop_filter("star cells must stay convex and distinct", |p| {
            let n = p.len();
            (0..n).all(|i| {
                let gap = if i + 1 < n { p[i + 1].1 - p[i].1 } else { p[0].1 + 2.0 * PI - p[i].1 };
                gap > 0.15 && gap < 0.9 * PI
            })
        })
}

const COMBOS: [&str; 4] = ["p1b-p1:p1", "p1-p1b:p1", "p2-p1:p1", "p1-p2:p1"];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn verdict_invariant_under_translation_and_dilation(
        p in polar_star(), cx in -5.0f64..5.0, cy in -5.0f64..5.0, s in 0.01f64..100.0,
    ) {
        let a = star(&p, [0.0, 0.0]);
        let b = a.scaled(s, [cx, cy, 0.0]);
        let (ma, mb) = (only_macro(&a), only_macro(&b));
        for cs in COMBOS {
            let c = FECombo::from_str(cs).unwrap();
            let va = predict_regularity(&a, &ma, &c, Tolerances::default()).unwrap();
            let vb = predict_regularity(&b, &mb, &c, Tolerances::default()).unwrap();
            prop_assert_eq!(va.predicted, vb.predicted, "{}", cs);
        }
        // S is homogeneous of degree -2 in the length scale
        prop_assume!(classify_2d(&a, &ma, ALIGNMENT_TOL).aligned_count_y == 0);
        let (sa, sb) = (s_condition(&a, &ma).unwrap(), s_condition(&b, &mb).unwrap());
        let scale: f64 = ma.areas.iter().map(|x| 1.0 / x).sum();
        prop_assert!((sb * s * s - sa).abs() <= 1e-9 * scale + 1e-6 * sa.abs());
    }

    #[test]
    fn swapping_axes_swaps_combinations(p in polar_star()) {
        let a = star(&p, [0.0, 0.0]);
        let b = a.swapped_xy();
        let (ma, mb) = (only_macro(&a), only_macro(&b));
        let fa = classify_2d(&a, &ma, ALIGNMENT_TOL);
        let fb = classify_2d(&b, &mb, ALIGNMENT_TOL);
        prop_assert_eq!(fa.aligned_count_x, fb.aligned_count_y);
        prop_assert_eq!(fa.aligned_count_y, fb.aligned_count_x);
        for (x, y) in [("p1b-p1:p1", "p1-p1b:p1"), ("p2-p1:p1", "p1-p2:p1")] {
            let va = predict_regularity(&a, &ma, &FECombo::from_str(x).unwrap(), Tolerances::default()).unwrap();
            let vb = predict_regularity(&b, &mb, &FECombo::from_str(y).unwrap(), Tolerances::default()).unwrap();
            prop_assert_eq!(va.predicted, vb.predicted);
        }
    }

    #[test]
    fn mirror_image_keeps_s_magnitude(p in polar_star()) {
        // the alternating sign is only cyclically consistent for even rings
        prop_assume!(p.len() % 2 == 0);
        let a = star(&p, [0.0, 0.0]);
        let q: Vec<(f64, f64)> = p.iter().map(|&(r, t)| (r, (PI - t).rem_euclid(2.0 * PI))).collect();
        let b = star(&q, [0.0, 0.0]);
        let (ma, mb) = (only_macro(&a), only_macro(&b));
        prop_assume!(classify_2d(&a, &ma, ALIGNMENT_TOL).aligned_count_y == 0);
        let (sa, sb) = (s_condition(&a, &ma).unwrap(), s_condition(&b, &mb).unwrap());
        let scale: f64 = ma.areas.iter().map(|x| 1.0 / x).sum();
        prop_assert!((sa.abs() - sb.abs()).abs() <= 1e-9 * scale + 1e-9 * sa.abs());
    }

    #[test]
    fn star_areas_cover_the_star(p in polar_star()) {
        let a = star(&p, [0.0, 0.0]);
        let m = only_macro(&a);
        prop_assert_eq!(m.n_v(), p.len());
        prop_assert_eq!(m.cells.len(), p.len());
        let direct: f64 = (0..a.num_cells()).map(|c| a.cell_measure(c)).sum();
        prop_assert!((m.measure() - direct).abs() <= 1e-12 * direct);
        // ring triangles by the shoelace formula on the polar data
        let n = p.len();
        let shoelace: f64 = (0..n)
            .map(|i| {
                let (r0, t0) = p[i];
                let (r1, t1) = p[(i + 1) % n];
                0.5 * r0 * r1 * (t1 - t0).sin()
            })
            .sum();
        prop_assert!((m.measure() - shoelace).abs() <= 1e-12 * shoelace);
    }

    #[test]
    fn bubble_verdict_matches_local_nullspace(p in polar_star()) {
        let a = star(&p, [0.0, 0.0]);
        let m = only_macro(&a);
        for cs in ["p1b-p1:p1", "p1-p1b:p1"] {
            let c = FECombo::from_str(cs).unwrap();
            let v = predict_regularity(&a, &m, &c, Tolerances::default()).unwrap();
            let ns = local_nullspace(&a, &m, &c).unwrap();
            prop_assert_eq!(v.is_regular(), ns.dim == 0, "{} dim {}", cs, ns.dim);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn algorithm1_moves_are_bounded(n in 4usize..16, seed in 0u64..1000, r in 0.02f64..0.15, ax in 0usize..2) {
        let base = gen_structured_tri(n, n, Rect::UNIT).unwrap();
        let mesh = gen_perturbed(&base, 0.2 / n as f64, seed).unwrap();
        let axis = if ax == 0 { Axis::X } else { Axis::Y };
        let cfg = UnstructureConfig::new(r, axis).unwrap();
        let out = apply_algorithm1(&mesh, &cfg).unwrap();
        let fixed = UnstructureConfig { h: Some(out.h), ..cfg };
        prop_assert!(verify_uniform(&out.mesh, &fixed).pass);
        let hr = r * out.h;
        let other = 1 - axis.index();
        let boundary = mesh.boundary_vertex_mask();
        for (v, (a, b)) in mesh.vertices().iter().zip(out.mesh.vertices()).enumerate() {
            prop_assert_eq!(a[other], b[other]);
            if boundary[v] {
                prop_assert_eq!(a, b);
            }
            // each move places a ring vertex from inside the band onto its edge
            prop_assert!((a[axis.index()] - b[axis.index()]).abs() <= 2.0 * hr * out.passes as f64 + 1e-15);
        }
    }

    #[test]
    fn algorithm1_shape_growth_on_structured_meshes(n in 3usize..24, r in 0.02f64..0.2, ax in 0usize..2) {
        let mesh = gen_structured_tri(n, n, Rect::UNIT).unwrap();
        let axis = if ax == 0 { Axis::X } else { Axis::Y };
        let out = apply_algorithm1(&mesh, &UnstructureConfig::new(r, axis).unwrap()).unwrap();
        let before = mesh.metrics().shape_ratio;
        let after = out.mesh.metrics().shape_ratio;
        let bound = 1.0 / ((1.0 - 2.0 * r) * (1.0 - 2.0 * r));
        prop_assert!(after <= bound * before * (1.0 + 1e-12), "{} -> {}", before, after);
    }

    #[test]
    fn algorithm1_is_idempotent_and_deterministic(n in 4usize..12, seed in 0u64..1000) {
        let a = unstructured_family(n, seed).unwrap();
        let b = unstructured_family(n, seed).unwrap();
        prop_assert_eq!(&a, &b);
        let cfg = UnstructureConfig { h: None, ..UnstructureConfig::new(0.15, Axis::Y).unwrap() };
        let h = gen_perturbed(&gen_structured_tri(n, n, Rect::UNIT).unwrap(), 0.3 / n as f64, seed)
            .unwrap()
            .metrics()
            .h;
        let again = apply_algorithm1(&a, &UnstructureConfig { h: Some(h), ..cfg }).unwrap();
        prop_assert_eq!(again.moved, 0);
        prop_assert_eq!(&again.mesh, &a);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn beta_is_dilation_invariant(seed in 0u64..1000, s in 0.1f64..10.0, cs in 0usize..2) {
        let combo = FECombo::from_str(["p1b-p1:p1", "p2-p1:p1"][cs]).unwrap();
        let mesh = unstructured_family(5, seed).unwrap();
        let a = infsup_constant(&mesh, &combo, InfSupOptions::default()).unwrap();
        let b = infsup_constant(&mesh.scaled(s, [1.0, -2.0, 0.0]), &combo, InfSupOptions::default()).unwrap();
        prop_assert!(a.beta > 0.0);
        prop_assert!((a.beta - b.beta).abs() <= 1e-6 * a.beta, "{} vs {}", a.beta, b.beta);
        let c = infsup_constant(&mesh, &combo, InfSupOptions::default()).unwrap();
        prop_assert_eq!(a.beta, c.beta);
    }
}
