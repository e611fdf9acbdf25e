//! Pitch–plunge–flap typical section with Theodorsen noncirculatory terms,
//! Jones' two-lag Wagner approximation, two-lag Küssner gust states and cubic
//! hardening in pitch and plunge.
//!
//! Displacements are `q = [ξ, α, β]` with `ξ = h/b` positive down. The state
//! is `[q, q', zW₁, zW₂, zW₁ʰ, zW₂ʰ, gK₁, gK₂, gK₁ʰ, gK₂ʰ]` (14 entries); the
//! `ʰ` copies feed the hinge-moment row.

mod model;
mod nonlinear;
mod params;
mod theodorsen;

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix3, Vector3};

use crate::error::{Error, Result};

pub use model::FullOrderModel;
pub use nonlinear::{Monomial, PolynomialNonlinearity};
pub use params::{
    wagner_kussner_coeffs, AerofoilParams, AngleUnit, Control, Flow, Geometry, Inertia, LagConstants, Stiffness,
    PARAMS_SCHEMA_VERSION,
};
pub use theodorsen::TheodorsenConstants;

pub const FOM_STATES: usize = 14;

pub const STATE_LABELS: [&str; FOM_STATES] = [
    "xi",
    "alpha",
    "beta",
    "xi_dot",
    "alpha_dot",
    "beta_dot",
    "wagner_1",
    "wagner_2",
    "wagner_hinge_1",
    "wagner_hinge_2",
    "kussner_1",
    "kussner_2",
    "kussner_hinge_1",
    "kussner_hinge_2",
];

/// Physical outputs read off the state, in `C_out` row order.
pub const OUTPUT_LABELS: [&str; 3] = ["pitch", "plunge", "flap"];

/// Second-order matrices of the section: `M q'' + D q' + K q = forces`.
#[derive(Debug, Clone)]
pub struct SectionMatrices {
    pub structural_mass: Matrix3<f64>,
    pub structural_stiffness: Matrix3<f64>,
    pub mass: Matrix3<f64>,
    pub damping: Matrix3<f64>,
    pub stiffness: Matrix3<f64>,
    /// Circulatory force weights on `[ξ, α, β]` rows.
    pub circulation_weights: Vector3<f64>,
    /// Coefficients of the quasi-steady downwash on `[q; q']`.
    pub downwash: [f64; 6],
}

/// Nondimensional air density `1/(πμ)`.
pub fn air_density(p: &AerofoilParams) -> f64 {
    1.0 / (PI * p.flow.mass_ratio)
}

pub fn section_matrices(p: &AerofoilParams) -> SectionMatrices {
    let a = p.geometry.elastic_axis;
    let c = p.geometry.hinge;
    let t = TheodorsenConstants::new(a, c);
    let rho = air_density(p);
    let (xa, xb) = (p.inertia.x_alpha, p.inertia.x_beta);
    let (ra2, rb2) = (p.inertia.r_alpha_sq, p.inertia.r_beta_sq);
    let (wa, wh, wb) = (p.omega_alpha(), p.omega_xi(), p.omega_beta());
    let cross = rb2 + (c - a) * xb;

    let ms = Matrix3::new(1.0, xa, xb, xa, ra2, cross, xb, cross, rb2);
    let ks = Matrix3::from_diagonal(&Vector3::new(
        wh * wh * p.stiffness.k_xi_1,
        ra2 * wa * wa * p.stiffness.k_alpha_1,
        rb2 * wb * wb,
    ));
    let m_nc = Matrix3::new(
        PI,
        -PI * a,
        -t.t1,
        -PI * a,
        PI * (0.125 + a * a),
        -(t.t7 + (c - a) * t.t1),
        -t.t1,
        2.0 * t.t13,
        -t.t3 / PI,
    );
    let d_nc = Matrix3::new(
        0.0,
        PI,
        -t.t4,
        0.0,
        PI * (0.5 - a),
        t.t1 - t.t8 - (c - a) * t.t4 + 0.5 * t.t11,
        0.0,
        -2.0 * t.t9 - t.t1 + t.t4 * (a - 0.5),
        -t.t4 * t.t11 / (2.0 * PI),
    );
    let k_nc = Matrix3::new(
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        t.t4 + t.t10,
        0.0,
        0.0,
        (t.t5 - t.t4 * t.t10) / PI,
    );

    SectionMatrices {
        structural_mass: ms,
        structural_stiffness: ks,
        mass: ms + m_nc * rho,
        damping: d_nc * rho,
        stiffness: ks + k_nc * rho,
        circulation_weights: Vector3::new(-2.0 * PI * rho, 2.0 * PI * rho * (a + 0.5), -rho * t.t12),
        downwash: [0.0, 1.0, t.t10 / PI, 1.0, 0.5 - a, t.t11 / (2.0 * PI)],
    }
}

/// Cubic restoring coefficients `[k_ξ, k_α, 0]` so that the generalized
/// nonlinear stiffness force on DOF `i` is `kᵢ qᵢ³`.
pub fn cubic_coefficients(p: &AerofoilParams) -> Vector3<f64> {
    let (wa, wh) = (p.omega_alpha(), p.omega_xi());
    Vector3::new(
        wh * wh * p.stiffness.k_xi_3,
        p.inertia.r_alpha_sq * wa * wa * p.stiffness.k_alpha_3,
        0.0,
    )
}

/// Generalized cubic stiffness force on `[ξ, α, β]`, before mass scaling.
pub fn cubic_stiffness_force(p: &AerofoilParams, q: &Vector3<f64>) -> Vector3<f64> {
    cubic_coefficients(p).component_mul(&q.map(|v| v * v * v))
}

/// Quartic potential `Σ ¼ kᵢ qᵢ⁴` whose gradient is the cubic force.
pub fn cubic_potential(p: &AerofoilParams, q: &Vector3<f64>) -> f64 {
    cubic_coefficients(p).dot(&q.map(|v| 0.25 * v.powi(4)))
}

fn checked_inverse(m: &Matrix3<f64>, what: &str) -> Result<Matrix3<f64>> {
    let sv = m.singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    if !(smin > 1e-12 * smax) {
        return Err(Error::InvalidParameter(format!(
            "{what} is singular (smallest singular value {smin:e}, largest {smax:e})"
        )));
    }
    m.try_inverse()
        .ok_or_else(|| Error::InvalidParameter(format!("{what} is singular")))
}

/// Assembles the 14-state first-order model.
pub fn assemble_fom(p: &AerofoilParams) -> Result<FullOrderModel> {
    p.validate()?;
    let s = section_matrices(p);
    checked_inverse(&s.structural_mass, "structural mass matrix")?;
    let m_inv = checked_inverse(&s.mass, "aeroelastic mass matrix")?;
    let lag = &p.aero;
    let eps_w = lag.wagner_poles.map(|v| -v);
    let eps_k = lag.kussner_poles.map(|v| -v);
    let phi0 = 1.0 - lag.wagner_weights.iter().sum::<f64>();

    // Circulatory weights split between the main (lift, pitch) and hinge rows.
    let wc = s.circulation_weights;
    let w_main = Vector3::new(wc[0], wc[1], 0.0);
    let w_hinge = Vector3::new(0.0, 0.0, wc[2]);
    let w_all = w_main + w_hinge;

    let n = FOM_STATES;
    // Generalized force as a linear function of the state.
    let mut force = DMatrix::<f64>::zeros(3, n);
    for i in 0..3 {
        for j in 0..3 {
            force[(i, j)] = -s.stiffness[(i, j)];
            force[(i, 3 + j)] = -s.damping[(i, j)];
        }
        for j in 0..6 {
            force[(i, j)] += w_all[i] * phi0 * s.downwash[j];
        }
        for k in 0..2 {
            force[(i, 6 + k)] += w_main[i] * lag.wagner_weights[k];
            force[(i, 8 + k)] += w_hinge[i] * lag.wagner_weights[k];
            force[(i, 10 + k)] += w_main[i] * lag.kussner_weights[k] * eps_k[k];
            force[(i, 12 + k)] += w_hinge[i] * lag.kussner_weights[k] * eps_k[k];
        }
    }

    let m_inv_d = DMatrix::from_fn(3, 3, |i, j| m_inv[(i, j)]);
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..3 {
        a[(i, 3 + i)] = 1.0;
    }
    a.view_mut((3, 0), (3, n)).copy_from(&(&m_inv_d * &force));
    for k in 0..2 {
        for row in [6 + k, 8 + k] {
            for j in 0..6 {
                a[(row, j)] = eps_w[k] * s.downwash[j];
            }
            a[(row, row)] = -eps_w[k];
        }
        for row in [10 + k, 12 + k] {
            a[(row, row)] = -eps_k[k];
        }
    }

    let mut b_g = DMatrix::<f64>::zeros(n, 1);
    for row in 10..14 {
        b_g[(row, 0)] = 1.0;
    }

    let unit = match p.control.flap_command_units {
        AngleUnit::Rad => 1.0,
        AngleUnit::Deg => PI / 180.0,
    };
    let flap_spring = Vector3::new(0.0, 0.0, s.structural_stiffness[(2, 2)] * unit);
    let mut b_c = DMatrix::<f64>::zeros(n, 1);
    let bc = m_inv * flap_spring;
    for i in 0..3 {
        b_c[(3 + i, 0)] = bc[i];
    }

    let kc = cubic_coefficients(p);
    let mut cubic = Vec::new();
    for r in 0..3 {
        for dof in 0..2 {
            let coeff = -m_inv[(r, dof)] * kc[dof];
            if coeff != 0.0 {
                cubic.push(Monomial {
                    row: 3 + r,
                    coeff,
                    factors: vec![dof; 3],
                });
            }
        }
    }

    let mut c_out = DMatrix::<f64>::zeros(3, n);
    c_out[(0, 1)] = 1.0;
    c_out[(1, 0)] = 1.0;
    c_out[(2, 2)] = 1.0;

    FullOrderModel::new(
        a,
        b_c,
        b_g,
        c_out,
        PolynomialNonlinearity {
            dim: n,
            quadratic: Vec::new(),
            cubic,
        },
        STATE_LABELS.iter().map(|s| s.to_string()).collect(),
        OUTPUT_LABELS.iter().map(|s| s.to_string()).collect(),
        vec![true, false, true],
    )
}

/// Lowest reduced velocity in `(0, u_max]` at which the linear model loses
/// stability, located by a scan with step `du` and bisection to 1e-8.
pub fn flutter_onset(p: &AerofoilParams, u_max: f64, du: f64) -> Result<Option<f64>> {
    let abscissa = |u: f64| -> Result<f64> {
        let fom = assemble_fom(&p.with_reduced_velocity(u))?;
        Ok(crate::numerics::spectral_abscissa(&fom.a))
    };
    let mut lo = du;
    if abscissa(lo)? >= 0.0 {
        return Ok(Some(lo));
    }
    while lo < u_max {
        let hi = (lo + du).min(u_max);
        if abscissa(hi)? >= 0.0 {
            let (mut a, mut b) = (lo, hi);
            while b - a > 1e-8 {
                let mid = 0.5 * (a + b);
                if abscissa(mid)? >= 0.0 {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            return Ok(Some(0.5 * (a + b)));
        }
        lo = hi;
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::eigenvalues;
    use nalgebra::DVector;

    fn default_fom() -> FullOrderModel {
        assemble_fom(&AerofoilParams::default_section()).unwrap()
    }

    #[test]
    fn dimensions_and_labels() {
        let fom = default_fom();
        assert_eq!(fom.dim(), 14);
        assert_eq!(fom.b_c.ncols(), 1);
        assert_eq!(fom.b_g.ncols(), 1);
        assert_eq!(fom.state_labels.len(), 14);
    }

    #[test]
    fn stable_at_study_condition() {
        let fom = default_fom();
        for ev in eigenvalues(&fom.a) {
            assert!(ev.re < 0.0, "{ev}");
        }
    }

    #[test]
    fn two_real_eigenvalues_at_slow_kussner_pole() {
        let fom = default_fom();
        let hits = eigenvalues(&fom.a)
            .iter()
            .filter(|z| z.im.abs() < 1e-9 && (z.re + 0.1393).abs() < 1e-6)
            .count();
        assert_eq!(hits, 2);
    }

    #[test]
    fn jacobian_at_origin_matches_finite_differences() {
        let fom = default_fom();
        let h = 1e-6;
        let f = |w: &DVector<f64>| fom.rhs(w, &[0.0], &[0.0], true);
        for j in 0..14 {
            let mut wp = DVector::zeros(14);
            let mut wm = DVector::zeros(14);
            wp[j] = h;
            wm[j] = -h;
            let col = (f(&wp) - f(&wm)) / (2.0 * h);
            for i in 0..14 {
                assert!((col[i] - fom.a[(i, j)]).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn in_vacuo_limit_recovers_structural_frequencies() {
        let mut p = AerofoilParams::default_section();
        p.flow.mass_ratio = 1e12;
        let fom = assemble_fom(&p).unwrap();
        let s = section_matrices(&p);
        // Independent oracle: ω² are eigenvalues of M_s⁻¹ K_s.
        let dyn_mat = s.structural_mass.try_inverse().unwrap() * s.structural_stiffness;
        let mut want: Vec<f64> = dyn_mat.complex_eigenvalues().iter().map(|z| z.re.sqrt()).collect();
        want.sort_by(f64::total_cmp);
        let mut got: Vec<f64> = eigenvalues(&fom.a).iter().filter(|z| z.im > 1e-9).map(|z| z.im).collect();
        got.sort_by(f64::total_cmp);
        assert_eq!(got.len(), 3);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() <= 1e-6 * w, "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn pitch_plunge_flutter_with_locked_flap() {
        let mut p = AerofoilParams::default_section();
        p.stiffness.plunge_freq_ratio = 0.2;
        p.stiffness.flap_freq_ratio = 200.0;
        p.inertia.x_beta = 0.0;
        let u = flutter_onset(&p, 10.0, 0.25).unwrap().unwrap();
        assert!((u - 6.2851).abs() < 2e-3, "flutter at {u}");
    }

    #[test]
    fn default_flutter_is_above_study_speed() {
        let u = flutter_onset(&AerofoilParams::default_section(), 10.0, 0.25).unwrap().unwrap();
        assert!(u > 4.5, "{u}");
    }

    #[test]
    fn gust_enters_only_through_kussner_states() {
        let fom = default_fom();
        for i in 0..14 {
            let inside = (10..14).contains(&i);
            assert_eq!(fom.b_g[(i, 0)] != 0.0, inside, "row {i}");
        }
    }

    #[test]
    fn nonlinearity_is_pure_odd_cubic() {
        let fom = default_fom();
        assert!(fom.nonlinearity.quadratic.is_empty());
        let w = DVector::from_fn(14, |i, _| 0.05 * (i as f64 - 6.0));
        let f = fom.eval_nonlinear(&w);
        let g = fom.eval_nonlinear(&-&w);
        assert!((&f + g).amax() == 0.0);
        assert!(fom.eval_nonlinear(&DVector::zeros(14)).amax() == 0.0);
        for (i, v) in f.iter().enumerate() {
            if !(3..6).contains(&i) {
                assert_eq!(*v, 0.0);
            }
        }
    }

    #[test]
    fn pitch_cubic_force_scale() {
        let p = AerofoilParams::default_section();
        let f = cubic_stiffness_force(&p, &Vector3::new(0.0, 0.1, 0.0));
        let scale = p.inertia.r_alpha_sq * p.omega_alpha().powi(2);
        assert!((f[1] / scale - 3.0e-3).abs() < 1e-15);
        assert_eq!(f[0], 0.0);
        assert_eq!(f[2], 0.0);
    }

    #[test]
    fn cubic_force_is_gradient_of_quartic_potential() {
        let p = AerofoilParams::default_section();
        let q = Vector3::new(0.3, -0.2, 0.1);
        let f = cubic_stiffness_force(&p, &q);
        let h = 1e-5;
        for i in 0..3 {
            let mut qp = q;
            let mut qm = q;
            qp[i] += h;
            qm[i] -= h;
            let fd = (cubic_potential(&p, &qp) - cubic_potential(&p, &qm)) / (2.0 * h);
            assert!((fd - f[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn evaluator_matches_mass_scaled_force() {
        let p = AerofoilParams::default_section();
        let fom = assemble_fom(&p).unwrap();
        let q = Vector3::new(0.2, -0.1, 0.3);
        let mut w = DVector::zeros(14);
        w.rows_mut(0, 3).copy_from(&q);
        let m_inv = section_matrices(&p).mass.try_inverse().unwrap();
        let want = -(m_inv * cubic_stiffness_force(&p, &q));
        let got = fom.eval_nonlinear(&w);
        for i in 0..3 {
            assert!((got[3 + i] - want[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn singular_structural_mass_is_rejected() {
        let mut p = AerofoilParams::default_section();
        // det(M_s) is affine in r_α²; pick the root.
        let det_at = |r: f64| {
            let mut q = p.clone();
            q.inertia.r_alpha_sq = r;
            section_matrices(&q).structural_mass.determinant()
        };
        let (d0, d1) = (det_at(0.0), det_at(1.0));
        p.inertia.r_alpha_sq = -d0 / (d1 - d0);
        assert!(matches!(assemble_fom(&p), Err(Error::InvalidParameter(m)) if m.contains("structural mass")));
    }

    #[test]
    fn degree_units_scale_control_column() {
        let mut p = AerofoilParams::default_section();
        p.control.flap_command_units = AngleUnit::Rad;
        let rad = assemble_fom(&p).unwrap();
        let deg = default_fom();
        let ratio = deg.b_c[(5, 0)] / rad.b_c[(5, 0)];
        assert!((ratio - PI / 180.0).abs() < 1e-15);
    }
}
