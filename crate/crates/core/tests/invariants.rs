use std::f64::consts::PI;

use guidespec_core::assembly::{assemble_cell_pair, assemble_strip_pair, canonical_angle, BlochMomentum};
use guidespec_core::eigensolve::{lowest_eigenpairs, EigenConfig};
use guidespec_core::geometry::{build_strip_mesh, rasterize_cell, CapBc, Shape, UnitCellGeometry, WaveguideSpec};
use guidespec_core::operator::{elasticity_symbol, scalar_symbol, CoefficientField, HoleBc};
use guidespec_core::weyl::{fit_slope, smoothstep};
use proptest::prelude::*;

fn disk_cell() -> UnitCellGeometry {
    UnitCellGeometry::new(vec![Shape::disk([0.5, 0.5], 0.3)], 0.05)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cell_pair_is_hermitian_and_2pi_periodic(
        e1 in 0.0..2.0 * PI,
        e2 in 0.0..2.0 * PI,
        k1 in -3i32..=3,
        k2 in -3i32..=3,
        elastic in any::<bool>(),
    ) {
        let mesh = rasterize_cell(&disk_cell(), 6).unwrap();
        let (sym, m) = if elastic { (elasticity_symbol(), 3) } else { (scalar_symbol(), 2) };
        let field = CoefficientField::homogeneous(m, 1.3, 0.8, HoleBc::Neumann);
        let at = |a: f64, b: f64| assemble_cell_pair(&mesh, &sym, &field, BlochMomentum::new(a, b)).unwrap();
        let base = at(e1, e2);
        let moved = at(e1 + 2.0 * PI * k1 as f64, e2 + 2.0 * PI * k2 as f64);
        prop_assert!(base.k.is_hermitian() && base.m.is_hermitian());
        prop_assert!(base.k == moved.k && base.m == moved.m);
        // -η is canonicalized to 2π - η, so this identity holds to round-off only.
        let mirrored = at(-e1, -e2).k.to_dense();
        let conj = base.k.conj().to_dense();
        let scale = base.k.norm_inf();
        prop_assert!(mirrored.iter().zip(&conj).all(|(a, b)| (a - b).norm() <= 1e-13 * scale));
    }

    #[test]
    fn strip_pair_is_2pi_periodic(zeta in 0.0..2.0 * PI, k in -3i32..=3, dirichlet in any::<bool>()) {
        let cap = if dirichlet { CapBc::Dirichlet } else { CapBc::Neumann };
        let mesh = build_strip_mesh(&disk_cell(), &WaveguideSpec::filled(1), 3, 4, cap).unwrap();
        let field = CoefficientField::homogeneous(2, 1.0, 1.0, HoleBc::Dirichlet);
        let a = assemble_strip_pair(&mesh, &scalar_symbol(), &field, zeta).unwrap();
        let b = assemble_strip_pair(&mesh, &scalar_symbol(), &field, zeta + 2.0 * PI * k as f64).unwrap();
        prop_assert!(a.k.is_hermitian());
        prop_assert!(a.k == b.k && a.m == b.m);
    }

    #[test]
    fn canonical_angle_is_periodic(x in -20.0..20.0f64, k in -5i32..=5) {
        let c = canonical_angle(x);
        prop_assert!((0.0..2.0 * PI).contains(&c));
        prop_assert_eq!(c, canonical_angle(x + 2.0 * PI * k as f64));
    }

    #[test]
    fn eigenvalues_are_ordered_and_nonnegative(e1 in 0.0..2.0 * PI, e2 in 0.0..2.0 * PI) {
        let mesh = rasterize_cell(&disk_cell(), 6).unwrap();
        let field = CoefficientField::homogeneous(2, 1.0, 1.0, HoleBc::Dirichlet);
        let pair = assemble_cell_pair(&mesh, &scalar_symbol(), &field, BlochMomentum::new(e1, e2)).unwrap();
        let lams = lowest_eigenpairs(&pair, 6, &EigenConfig::default()).unwrap().eigenvalues;
        prop_assert!(lams.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(lams[0] > 0.0);
    }

    #[test]
    fn smoothstep_is_a_monotone_ramp(a in -1.0..2.0f64, b in -1.0..2.0f64, d in 0.1..1.0f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (s_lo, s_hi) = (smoothstep(lo, d), smoothstep(hi, d));
        prop_assert!((0.0..=1.0).contains(&s_lo) && (0.0..=1.0).contains(&s_hi));
        prop_assert!(s_lo <= s_hi);
        let t = a.clamp(0.0, 1.0) * d;
        prop_assert!((smoothstep(t, d) + smoothstep(d - t, d) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn slope_fit_is_exact_on_lines(m in -3.0..3.0f64, c in -5.0..5.0f64) {
        let xs: Vec<f64> = (2..=6).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|x| m * x + c).collect();
        let fit = fit_slope(&xs, &ys).unwrap();
        prop_assert!((fit.slope - m).abs() < 1e-10 && (fit.intercept - c).abs() < 1e-9);
        prop_assert!(fit.ci_low <= fit.slope && fit.slope <= fit.ci_high);
    }
}
