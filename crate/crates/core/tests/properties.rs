use proptest::prelude::*;
use steady_vortex::diagnostics::support_metrics;
use steady_vortex::elliptic::{green_apply, GreenOperator};
use steady_vortex::io::{read_field, write_field};
use steady_vortex::variational::{
    bathtub_mass, maximize_in, multiplier_solve, penalty, Controls, Harmonic, ProblemSpec, QSource,
    Setup,
};
use steady_vortex::{Backend, Domain, DomainSpec, Profile, ScalarField, StrengthSchedule};

fn square(h: f64) -> Domain {
    Domain::build(DomainSpec::unit_square(), h).unwrap()
}

fn field(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn green_operator_is_symmetric_and_linear(a in field(49), b in field(49), c in -3.0f64..3.0) {
        let d = square(0.125);
        let g = GreenOperator::new(&d, Backend::Fd).unwrap();
        let (u, v) = (ScalarField::new(a), ScalarField::new(b));
        let gu = g.apply(&u).unwrap();
        let gv = g.apply(&v).unwrap();
        let h2 = d.cell_area();
        let lhs = gu.inner(&v, h2);
        let rhs = u.inner(&gv, h2);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        let combo = g.apply(&u.add(&v.scale(c))).unwrap();
        let expect = gu.add(&gv.scale(c));
        prop_assert!(combo.sup_distance(&expect) <= 1e-12 * (1.0 + expect.sup_norm()));
    }

    #[test]
    fn green_operator_is_positive(a in prop::collection::vec(0.0f64..1.0, 49)) {
        let d = square(0.125);
        let w = ScalarField::new(a);
        let psi = green_apply(&d, &w, Backend::Fd).unwrap();
        prop_assert!(psi.values().iter().all(|&v| v >= -1e-15));
        prop_assert!(w.inner(&psi, d.cell_area()) >= -1e-15);
    }

    #[test]
    fn disk_kernel_is_symmetric(a in field(49), b in field(49)) {
        let d = Domain::build(DomainSpec::UnitDisk, 0.25).unwrap();
        let n = d.len();
        let u = ScalarField::new(a[..n].to_vec());
        let v = ScalarField::new(b[..n].to_vec());
        let gu = green_apply(&d, &u, Backend::DiskKernel).unwrap();
        let gv = green_apply(&d, &v, Backend::DiskKernel).unwrap();
        let h2 = d.cell_area();
        let (l, r) = (gu.inner(&v, h2), u.inner(&gv, h2));
        prop_assert!((l - r).abs() <= 1e-12 * (1.0 + l.abs()));
    }

    #[test]
    fn multiplier_decreases_in_kappa(u in field(36), k in prop::collection::vec(0.01f64..0.7, 5)) {
        let u = ScalarField::new(u);
        let f = Profile::power(1.0).unwrap();
        let h2 = 1.0 / 49.0;
        let mut ks = k.clone();
        ks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ks.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
        let mus: Vec<f64> = ks.iter().map(|&k| multiplier_solve(&u, k, 1.0, &f, h2).unwrap()).collect();
        for w in mus.windows(2) {
            prop_assert!(w[1] < w[0]);
        }
        for (&k, &mu) in ks.iter().zip(&mus) {
            let nodes: Vec<usize> = (0..36).collect();
            let m = bathtub_mass(&u, &nodes, mu, 1.0, &f, h2);
            prop_assert!((m - k).abs() <= 1e-9 * k.max(1.0));
        }
    }

    #[test]
    fn penalty_is_convex(a in prop::collection::vec(0.0f64..2.0, 36), b in prop::collection::vec(0.0f64..2.0, 36), p in 0.5f64..3.0) {
        let f = Profile::power(p).unwrap();
        let (u, v) = (ScalarField::new(a), ScalarField::new(b));
        let mid = u.add(&v).scale(0.5);
        let h2 = 1.0 / 49.0;
        let pm = penalty(&mid, 2.0, &f, h2).unwrap();
        let avg = 0.5 * (penalty(&u, 2.0, &f, h2).unwrap() + penalty(&v, 2.0, &f, h2).unwrap());
        prop_assert!(pm <= avg + 1e-14);
    }

    #[test]
    fn support_metrics_ignore_positive_scaling(a in prop::collection::vec(0.0f64..1.0, 49), c in 1e-3f64..1e3) {
        let d = square(0.125);
        let w = ScalarField::new(a);
        let s = [[1.0, 0.5]];
        prop_assert_eq!(
            support_metrics(&d, &w, &s, 1e-6).unwrap(),
            support_metrics(&d, &w.scale(c), &s, 1e-6).unwrap()
        );
    }

    #[test]
    fn field_files_round_trip(a in prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 49)) {
        let d = square(0.125);
        let w = ScalarField::new(a);
        let mut buf = Vec::new();
        write_field(&mut buf, &d, &w).unwrap();
        let back = read_field(&buf[..]).unwrap();
        for (x, y) in back.values.values().iter().zip(w.values()) {
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn constant_shift_moves_only_the_multiplier(c in -10.0f64..10.0) {
        let p = ProblemSpec {
            domain: DomainSpec::unit_square(),
            h: 1.0 / 16.0,
            q: QSource::Analytic(Harmonic::X1SqMinusX2Sq),
            q_offset: 0.0,
            profile: Profile::power(1.5).unwrap(),
            schedule: StrengthSchedule::power(0.5, 0.3).unwrap(),
            kappa: 0.04,
            backend: Backend::Fd,
            controls: Controls::default(),
        };
        let mut shifted = p.clone();
        shifted.q_offset = c;
        let a = maximize_in(&Setup::for_problem(&p).unwrap(), &p, None).unwrap();
        let b = maximize_in(&Setup::for_problem(&shifted).unwrap(), &shifted, None).unwrap();
        prop_assert!(a.converged && b.converged);
        prop_assert!((b.mu() - a.mu() - c).abs() <= 1e-10 * (1.0 + c.abs()));
        prop_assert!(a.omega.sup_distance(&b.omega) <= 1e-10);
    }
}
