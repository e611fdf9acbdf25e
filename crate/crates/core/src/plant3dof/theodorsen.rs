/// Theodorsen geometric constants for elastic axis `a` and hinge `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheodorsenConstants {
    pub t1: f64,
    pub t3: f64,
    pub t4: f64,
    pub t5: f64,
    pub t7: f64,
    pub t8: f64,
    pub t9: f64,
    pub t10: f64,
    pub t11: f64,
    pub t12: f64,
    pub t13: f64,
}

impl TheodorsenConstants {
    pub fn new(a: f64, c: f64) -> Self {
        let f = (1.0 - c * c).sqrt();
        let ac = c.acos();
        let t1 = -(1.0 / 3.0) * f * (2.0 + c * c) + c * ac;
        let t3 = -(0.125 + c * c) * ac * ac + 0.25 * c * f * ac * (7.0 + 2.0 * c * c)
            - 0.125 * (1.0 - c * c) * (5.0 * c * c + 4.0);
        let t4 = -ac + c * f;
        let t5 = -(1.0 - c * c) - ac * ac + 2.0 * c * f * ac;
        let t7 = -(0.125 + c * c) * ac + 0.125 * c * f * (7.0 + 2.0 * c * c);
        let t8 = -(1.0 / 3.0) * f * (2.0 * c * c + 1.0) + c * ac;
        let t9 = 0.5 * (f * f * f / 3.0 + a * t4);
        let t10 = f + ac;
        let t11 = ac * (1.0 - 2.0 * c) + f * (2.0 - c);
        let t12 = f * (2.0 + c) - ac * (2.0 * c + 1.0);
        let t13 = 0.5 * (-t7 - (c - a) * t1);
        Self {
            t1,
            t3,
            t4,
            t5,
            t7,
            t8,
            t9,
            t10,
            t11,
            t12,
            t13,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn hinge_at_leading_edge_limits() {
        // c = -1: the flap is the whole chord, f = 0 and acos c = π.
        let t = TheodorsenConstants::new(-0.5, -1.0);
        assert!((t.t4 + PI).abs() < 1e-12);
        assert!((t.t10 - PI).abs() < 1e-12);
        assert!((t.t11 - 3.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn hinge_at_trailing_edge_vanishes() {
        let t = TheodorsenConstants::new(-0.5, 1.0);
        for v in [t.t1, t.t3, t.t4, t.t5, t.t7, t.t8, t.t10, t.t11, t.t12] {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn midchord_hinge_values() {
        let t = TheodorsenConstants::new(-0.5, 0.0);
        let h = PI / 2.0;
        assert!((t.t1 + 2.0 / 3.0).abs() < 1e-15);
        assert!((t.t4 + h).abs() < 1e-15);
        assert!((t.t10 - (1.0 + h)).abs() < 1e-15);
        assert!((t.t11 - (h + 2.0)).abs() < 1e-15);
        assert!((t.t12 - (2.0 - h)).abs() < 1e-15);
    }
}
