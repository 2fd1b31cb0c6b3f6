//! Randomised invariants of the geometric, media and numerical building blocks.

use alr_core::experiments::{fit_points, three_sphere_exponent};
use alr_core::geometry::{region_of, GeometryConfig, Point2, RegionTag};
use alr_core::io::sci;
use alr_core::media::{compose, kelvin_map, MediumSpec, Sym2, TensorRule};
use alr_core::oracle::{bessel, BesselKind};
use alr_core::C64;
use proptest::prelude::*;

fn layout() -> GeometryConfig {
    GeometryConfig::circular(1.0, 2.0, 5.0, 7.0)
}

fn spd() -> impl Strategy<Value = Sym2> {
    (0.1f64..10.0, 0.1f64..10.0, -1.0f64..1.0).prop_map(|(a, b, t)| {
        let off = t * (a * b).sqrt() * 0.9;
        Sym2 { xx: a, xy: off, yy: b }
    })
}

proptest! {
    #[test]
    fn region_lookup_is_stable_away_from_interfaces(r in 0.01f64..6.9, theta in -3.1f64..3.1, jitter in -1e-9f64..1e-9) {
        let cfg = layout();
        let gap = [cfg.r1, cfg.r2, cfg.r3].iter().map(|c| (r - c).abs()).fold(f64::INFINITY, f64::min);
        prop_assume!(gap > 1e-6);
        let p = Point2::from_polar(r, theta);
        let q = Point2::from_polar(r + jitter, theta + jitter);
        prop_assert_eq!(region_of(p, &cfg), region_of(q, &cfg));
        let expect = if r < cfg.r1 {
            RegionTag::CoreR1
        } else if r < cfg.r2 {
            RegionTag::AnnulusR2R1
        } else if r < cfg.r3 {
            RegionTag::ShellR3R2
        } else {
            RegionTag::Exterior
        };
        prop_assert_eq!(region_of(p, &cfg), expect);
    }

    #[test]
    fn kelvin_map_is_a_conformal_involution(radius in 0.5f64..5.0, r in 0.2f64..10.0, theta in -3.1f64..3.1) {
        let f = kelvin_map(Point2::new(0.0, 0.0), radius).unwrap();
        let p = Point2::from_polar(r, theta);
        let q = f.forward(p).unwrap();
        prop_assert!((q.norm() * r - radius * radius).abs() < 1e-12 * radius * radius);
        let back = f.forward(q).unwrap();
        prop_assert!(back.dist(p) < 1e-12 * r.max(1.0));
        let inv = f.inverse(q).unwrap();
        prop_assert!(inv.dist(p) < 1e-12 * r.max(1.0));
        let j = f.jacobian(p).unwrap();
        let jtj = j.transpose().mul(&j);
        let scale = (radius / r).powi(4);
        prop_assert!((jtj.m[0][0] - scale).abs() < 1e-10 * scale);
        prop_assert!((jtj.m[1][1] - scale).abs() < 1e-10 * scale);
        prop_assert!(jtj.m[0][1].abs() < 1e-10 * scale);
        prop_assert!(j.det() < 0.0);
    }

    #[test]
    fn push_forward_is_functorial(a in spd(), r in 0.5f64..10.0, theta in -3.1f64..3.1) {
        let f = kelvin_map(Point2::new(0.0, 0.0), 2.0).unwrap();
        let g = kelvin_map(Point2::new(0.0, 0.0), 4.0).unwrap();
        let y = Point2::from_polar(r, theta);
        let step = TensorRule::push(&g, TensorRule::push(&f, TensorRule::Constant(a)));
        let once = TensorRule::push(&compose(g, f), TensorRule::Constant(a));
        let lhs = step.eval(y).unwrap();
        let rhs = once.eval(y).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-10 * a.max_abs());
        // composing two Kelvin maps gives a dilation, under which a constant tensor is invariant
        prop_assert!(rhs.max_abs_diff(&a) < 1e-10 * a.max_abs());
    }

    #[test]
    fn sign_factor_is_exact(delta in 0.0f64..1.0) {
        let med = MediumSpec::homogeneous(layout(), 0.0).with_negative(&[RegionTag::AnnulusR2R1]).with_delta(delta);
        prop_assert_eq!(med.s_delta(RegionTag::AnnulusR2R1), C64::new(-1.0, -delta));
        prop_assert_eq!(med.s0(RegionTag::AnnulusR2R1), -1.0);
        prop_assert_eq!(med.s_delta(RegionTag::ShellR3R2), C64::new(1.0, 0.0));
    }

    #[test]
    fn bessel_wronskian(n in 0usize..25, x in 0.05f64..60.0) {
        let j0 = bessel(BesselKind::J, n, x).unwrap().re;
        let j1 = bessel(BesselKind::J, n + 1, x).unwrap().re;
        let y0 = bessel(BesselKind::Y, n, x).unwrap().re;
        let y1 = bessel(BesselKind::Y, n + 1, x).unwrap().re;
        let w = j1 * y0 - j0 * y1;
        let expect = 2.0 / (std::f64::consts::PI * x);
        let size = (j1 * y0).abs().max((j0 * y1).abs()).max(expect);
        prop_assert!((w - expect).abs() <= 1e-10 * size, "n {} x {} w {} expect {}", n, x, w, expect);
    }

    #[test]
    fn three_sphere_exponent_is_a_weight(q in -6.0f64..6.0, a in 0.1f64..1.0, s in 1.1f64..3.0, t in 1.1f64..3.0) {
        let radii = [a, a * s, a * s * t];
        let alpha = three_sphere_exponent(q, radii);
        prop_assert!(alpha > 0.0 && alpha < 1.0);
        let near = three_sphere_exponent(1e-7, radii);
        prop_assert!((near - three_sphere_exponent(0.0, radii)).abs() < 1e-6);
        prop_assert!(three_sphere_exponent(q + 0.1, radii) <= alpha + 1e-12);
    }

    #[test]
    fn fit_recovers_power_law(rate in 0.1f64..2.0, scale in 1e-3f64..1e3, n in 3usize..9) {
        let data: Vec<(f64, f64, Option<f64>)> = (0..n)
            .map(|i| {
                let d = 10f64.powf(-0.5 * i as f64);
                (d, scale * d.powf(rate), None)
            })
            .collect();
        let fit = fit_points(&data).unwrap();
        prop_assert!((fit.slope - rate).abs() < 1e-9);
        prop_assert!((fit.intercept - scale.ln()).abs() < 1e-8);
        prop_assert_eq!(fit.indices.len(), n);
    }

    #[test]
    fn scientific_format_round_trips(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
        prop_assert_eq!(sci(x).parse::<f64>().unwrap(), x);
    }
}
