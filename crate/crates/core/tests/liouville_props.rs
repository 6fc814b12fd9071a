use fraclab_core::{difference_field, Point, ScalarField};
use proptest::prelude::*;

proptest! {
    #[test]
    fn second_difference_of_quadratic_is_constant(
        c in prop::array::uniform6(-3.0f64..3.0),
        h in prop::array::uniform2(-2.0f64..2.0),
        k in prop::array::uniform2(-2.0f64..2.0),
        pts in prop::collection::vec(prop::array::uniform2(-10.0f64..10.0), 4),
    ) {
        let u = ScalarField::new(2, move |y| {
            let (a, b) = (y.get(0), y.get(1));
            c[0] * a * a + c[1] * a * b + c[2] * b * b + c[3] * a + c[4] * b + c[5]
        });
        let (h, k) = (Point::new(&h).unwrap(), Point::new(&k).unwrap());
        let dd = difference_field(&difference_field(&u, &h), &k);
        // Δ_k Δ_h u = 2 c0 h0 k0 + c1 (h0 k1 + h1 k0) + 2 c2 h1 k1
        let expect = 2.0 * c[0] * h.get(0) * k.get(0) + c[1] * (h.get(0) * k.get(1) + h.get(1) * k.get(0))
            + 2.0 * c[2] * h.get(1) * k.get(1);
        for y in &pts {
            // four evaluations of u, each of size up to ~|c| |y|², cancel
            let y = Point::new(y).unwrap();
            let size = 1.0 + 3.0 * (y.norm() + 4.0).powi(2);
            let v = dd.eval(&y);
            prop_assert!((v - expect).abs() < 64.0 * f64::EPSILON * size, "{v} vs {expect}");
        }
    }
}
