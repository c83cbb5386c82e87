use proptest::prelude::*;
use solitonlab::equivalence::{decide, VerdictKind};
use solitonlab::fields::{flat, flow, sharp, ClosednessOptions, PotentialOptions};
use solitonlab::io::{read_curve_csv, write_sampled_csv};
use solitonlab::ode::Termination;
use solitonlab::soliton::{integrate_soliton, SolitonOptions};
use solitonlab::weyl::SampledCurve;
use solitonlab::{CurveState, Domain, MetricChart, Point, VectorFieldSpec};

fn p2(a: f64, b: f64) -> Point {
    Point::from_vec(vec![a, b])
}

fn unit_box() -> Domain {
    Domain::cube(2, -1.0, 1.0)
}

fn opts(resolution: usize) -> PotentialOptions {
    PotentialOptions {
        closedness: ClosednessOptions { resolution, tol: 1e-6 },
        ..Default::default()
    }
}

fn linear_field(a: [f64; 4]) -> VectorFieldSpec {
    VectorFieldSpec::new("linear", 2, move |p| {
        Ok(p2(a[0] * p[0] + a[1] * p[1], a[2] * p[0] + a[3] * p[1]))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sharp_undoes_flat(a in prop::array::uniform4(-2.0..2.0f64), x in -1.5..1.5f64, y in -1.5..1.5f64) {
        let p = p2(x, y);
        for m in [MetricChart::sphere_stereographic(2), MetricChart::euclidean(2)] {
            let f = linear_field(a);
            let back = sharp(&m, &flat(&m, &f).unwrap()).unwrap();
            let (v, w) = (f.eval(&p).unwrap(), back.eval(&p).unwrap());
            prop_assert!((&v - &w).norm() <= 1e-12 * (1.0 + v.norm()));
        }
    }

    #[test]
    fn rotation_witness_is_twice_the_rate(eps in 1e-3..0.5f64) {
        let m = MetricChart::euclidean(2).with_domain(unit_box());
        let v = decide(&m, &VectorFieldSpec::rotation(2, eps), &opts(17)).unwrap();
        prop_assert_eq!(v.kind, VerdictKind::NotGradient);
        prop_assert!((v.witness.max_curl_residual - 2.0 * eps).abs() <= 1e-8);
    }

    #[test]
    fn verdict_survives_rescaling(c in prop::sample::select(vec![-3.0, -0.5, 0.25, 2.0, 7.0])) {
        let m = MetricChart::euclidean(2).with_domain(unit_box());
        let rot = decide(&m, &VectorFieldSpec::rotation(2, 1.0).scaled(c), &opts(9)).unwrap();
        prop_assert_eq!(rot.kind, VerdictKind::NotGradient);
        let rad = decide(&m, &VectorFieldSpec::radial(2, 1.0).scaled(c), &opts(9)).unwrap();
        prop_assert_eq!(rad.kind, VerdictKind::Gradient);
        // u recovered with u(0) = 0, so u = c |p|^2 / 2
        let u = rad.potential.unwrap();
        let q = p2(0.3, -0.4);
        prop_assert!((u.value(&q).unwrap() - c * 0.125).abs() <= 1e-8 * c.abs().max(1.0));
    }

    #[test]
    fn flow_is_a_group(x in -0.5..0.5f64, y in -0.5..0.5f64, s in -0.7..0.7f64, t in -0.7..0.7f64) {
        let f = VectorFieldSpec::new("spiral", 2, |p| Ok(p2(-p[1] + 0.1 * p[0], p[0] + 0.1 * p[1])));
        let d = Domain::cube(2, -5.0, 5.0);
        let p = p2(x, y);
        let two = flow(&f, &d, &flow(&f, &d, &p, s, 1e-12).unwrap(), t, 1e-12).unwrap();
        let one = flow(&f, &d, &p, s + t, 1e-12).unwrap();
        prop_assert!((&two - &one).norm() <= 1e-9);
    }

    #[test]
    fn reversed_curve_is_a_soliton(x in -0.6..0.6f64, y in -0.6..0.6f64, th in 0.0..std::f64::consts::TAU) {
        let m = MetricChart::sphere_stereographic(2);
        let f = VectorFieldSpec::rotation(2, 1.0);
        let o = SolitonOptions::default();
        let start = CurveState::new(p2(x, y), p2(th.cos(), th.sin()) * 0.5 * (1.0 + x * x + y * y));
        let fwd = integrate_soliton(&m, &f, &start, 1.5, &o).unwrap();
        let end = fwd.end_state();
        let back_start = CurveState::new(end.x.clone(), -&end.tangent);
        let back = integrate_soliton(&m, &f, &back_start, fwd.length(), &o).unwrap();
        let e = back.end_state();
        prop_assert!((&e.x - &start.x).norm() <= 1e-6, "{} vs {}", e.x, start.x);
        prop_assert!((&e.tangent + &start.tangent).norm() <= 1e-5);
    }

    #[test]
    fn tangent_stays_unit(x in -0.8..0.8f64, y in -0.8..0.8f64, th in 0.0..std::f64::consts::TAU) {
        let m = MetricChart::sphere_stereographic(2);
        let f = VectorFieldSpec::translation(p2(0.3, -1.0));
        let q = 1.0 + x * x + y * y;
        let start = CurveState::new(p2(x, y), p2(th.cos(), th.sin()) * 0.5 * q);
        let c = integrate_soliton(&m, &f, &start, 2.0, &SolitonOptions::default()).unwrap();
        for s in &c.samples {
            let (px, pt) = (Point::from_vec(s.x.clone()), Point::from_vec(s.tangent.clone()));
            prop_assert!((m.norm(&px, &pt).unwrap() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn csv_round_trip_is_exact(rows in prop::collection::vec(prop::array::uniform3(prop::num::f64::NORMAL), 1..40)) {
        let curve = SampledCurve {
            ts: rows.iter().map(|r| r[0]).collect(),
            xs: rows.iter().map(|r| p2(r[1], r[2])).collect(),
            termination: Termination::Boundary,
        };
        let mut buf = Vec::new();
        write_sampled_csv(&mut buf, &curve, "seed = 3").unwrap();
        let back = read_curve_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(&back.curve.ts, &curve.ts);
        prop_assert_eq!(&back.curve.xs, &curve.xs);
        prop_assert_eq!(back.curve.termination, Termination::Boundary);
    }
}
