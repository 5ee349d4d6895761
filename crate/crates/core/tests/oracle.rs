use proptest::prelude::*;

use wavesweep::oracle::{error_norms, exact_riemann_euler_1d, ExactRiemann, Primitive1d};
use wavesweep::grid::{CellField, GridSpec};

const G: f64 = 1.4;

fn primitive() -> impl Strategy<Value = Primitive1d> {
    (0.1f64..10.0, -0.25f64..0.25, 0.1f64..10.0).prop_map(|(density, velocity, pressure)| Primitive1d {
        density,
        velocity,
        pressure,
    })
}

proptest! {
    #[test]
    fn equal_states_are_steady(s in primitive(), xi in -5.0f64..5.0) {
        let q = s.to_conserved(G);
        let out = exact_riemann_euler_1d(&q, &q, G, xi).unwrap();
        for k in 0..3 {
            prop_assert!((out[k] - q[k]).abs() <= 1e-12 * q[k].abs().max(1.0));
        }
    }

    #[test]
    fn mirrored_problem_mirrors_the_solution(l in primitive(), r in primitive(), xi in -3.0f64..3.0) {
        let mirror = |p: Primitive1d| Primitive1d { velocity: -p.velocity, ..p };
        let a = ExactRiemann::new(l, r, G).unwrap();
        let b = ExactRiemann::new(mirror(r), mirror(l), G).unwrap();
        prop_assert!((a.star_pressure() - b.star_pressure()).abs() <= 1e-10 * a.star_pressure());
        let (sa, sb) = (a.sample(xi), b.sample(-xi));
        prop_assert!((sa.density - sb.density).abs() <= 1e-9 * sa.density);
        prop_assert!((sa.velocity + sb.velocity).abs() <= 1e-9);
    }

    #[test]
    fn far_field_is_untouched(l in primitive(), r in primitive()) {
        let solver = ExactRiemann::new(l, r, G).unwrap();
        prop_assert_eq!(solver.sample(-100.0), l);
        prop_assert_eq!(solver.sample(100.0), r);
    }

    #[test]
    fn norms_are_homogeneous(eps in 1e-6f64..1.0, k in 1.0f64..10.0) {
        let spec = GridSpec::unit_square(8, 4, 1, 0).unwrap();
        let zero = CellField::zeros(spec, 1);
        let mut a = CellField::zeros(spec, 1);
        a.fill_interior(&[eps]);
        let mut b = CellField::zeros(spec, 1);
        b.fill_interior(&[k * eps]);
        let (na, nb) = (error_norms(&a, &zero, 0).unwrap(), error_norms(&b, &zero, 0).unwrap());
        prop_assert!((nb.l1 - k * na.l1).abs() <= 1e-12 * nb.l1);
        prop_assert!((nb.linf - k * na.linf).abs() <= 1e-12 * nb.linf);
    }
}
