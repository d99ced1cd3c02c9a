//! Real roots of a monic cubic polynomial.
//!
//! Solves `x^3 + a2 x^2 + a1 x + a0 = 0` through the depressed form
//! `t^3 + p t + q` with `x = t - a2/3`. The discriminant
//! `delta = (q/2)^2 + (p/3)^3` decides the root structure: one real root for
//! `delta > 0`, three real roots for `delta < 0`, repeated roots at zero.
//! Every root gets a Newton polish on the original cubic.

use crate::scalar::Real;

/// Real roots (ascending) plus the discriminant of the depressed form.
#[derive(Debug, Clone)]
pub struct CubicRoots<T> {
    pub roots: Vec<T>,
    /// `(q/2)^2 + (p/3)^3` of the depressed cubic.
    pub discriminant: T,
}

/// All real roots of `x^3 + a2 x^2 + a1 x + a0`.
pub fn solve_monic_cubic<T: Real>(a2: T, a1: T, a0: T) -> CubicRoots<T> {
    let third = T::one() / T::of(3.0);
    let shift = a2 * third;
    let p = a1 - a2 * a2 * third;
    let q = T::of(2.0) * shift * shift * shift - a2 * a1 * third + a0;

    let half_q = q * T::of(0.5);
    let p_third = p * third;
    let delta = half_q * half_q + p_third * p_third * p_third;

    // Repeated-root cutoff, relative to the scale of the two contributions.
    let scale = (half_q * half_q)
        .abs()
        .max((p_third * p_third * p_third).abs());
    let eps = T::of(1e-14);

    let mut roots: Vec<T> = if delta.abs() <= eps * scale.max(T::one() * T::of(1e-300)) {
        if p.abs() <= eps {
            vec![-shift] // triple root
        } else {
            let t1 = T::of(3.0) * q / p; // simple
            let t2 = -t1 * T::of(0.5); // double
            vec![t1 - shift, t2 - shift]
        }
    } else if delta > T::zero() {
        // One real root; pick the cube-root branch without cancellation,
        // then recover the partner from u*v = -p/3.
        let s = delta.sqrt();
        let u = if q <= T::zero() {
            (-half_q + s).cbrt()
        } else {
            (-half_q - s).cbrt()
        };
        let v = if u == T::zero() {
            T::zero()
        } else {
            -p_third / u
        };
        vec![u + v - shift]
    } else {
        // Three distinct real roots via the trigonometric form.
        let m = T::of(2.0) * (-p_third).sqrt();
        let arg = (T::of(3.0) * q / (p * m)).max(-T::one()).min(T::one());
        let theta = arg.acos() / T::of(3.0);
        let two_pi_third = T::of(2.0 * std::f64::consts::PI / 3.0);
        let mut r = vec![
            m * theta.cos() - shift,
            m * (theta - two_pi_third).cos() - shift,
            m * (theta + two_pi_third).cos() - shift,
        ];
        r.sort_by(|a, b| a.partial_cmp(b).unwrap());
        r
    };

    for r in roots.iter_mut() {
        *r = polish(*r, a2, a1, a0);
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    CubicRoots {
        roots,
        discriminant: delta,
    }
}

fn polish<T: Real>(mut x: T, a2: T, a1: T, a0: T) -> T {
    for _ in 0..2 {
        let f = ((x + a2) * x + a1) * x + a0;
        let df = (T::of(3.0) * x + T::of(2.0) * a2) * x + a1;
        if df.abs() <= T::of(1e-300) {
            break;
        }
        let step = f / df;
        if !step.is_finite() {
            break;
        }
        x = x - step;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn residual(x: f64, a2: f64, a1: f64, a0: f64) -> f64 {
        ((x + a2) * x + a1) * x + a0
    }

    #[test]
    fn single_real_root() {
        // x^3 - 8 = 0
        let r = solve_monic_cubic(0.0, 0.0, -8.0);
        assert_eq!(r.roots.len(), 1);
        assert_relative_eq!(r.roots[0], 2.0, max_relative = 1e-14);
        assert!(r.discriminant > 0.0);
    }

    #[test]
    fn three_real_roots() {
        // (x-1)(x-2)(x-3) = x^3 - 6x^2 + 11x - 6
        let r = solve_monic_cubic(-6.0, 11.0, -6.0);
        assert_eq!(r.roots.len(), 3);
        for (got, want) in r.roots.iter().zip([1.0, 2.0, 3.0]) {
            assert_relative_eq!(*got, want, max_relative = 1e-12);
        }
        assert!(r.discriminant < 0.0);
    }

    #[test]
    fn double_root() {
        // (x-1)^2 (x+2) = x^3 - 3x + 2
        let r = solve_monic_cubic(0.0, -3.0, 2.0);
        assert_eq!(r.roots.len(), 2);
        assert_relative_eq!(r.roots[0], -2.0, max_relative = 1e-10);
        assert_relative_eq!(r.roots[1], 1.0, max_relative = 1e-10);
    }

    #[test]
    fn triple_root() {
        // (x+1)^3 = x^3 + 3x^2 + 3x + 1
        let r = solve_monic_cubic(3.0, 3.0, 1.0);
        assert_eq!(r.roots.len(), 1);
        assert_relative_eq!(r.roots[0], -1.0, max_relative = 1e-6);
    }

    #[test]
    fn rain_flux_cubic_residuals() {
        // q^3 - (B/d) q^2 - c(c-a1)/(a2 d) with the reference coefficients
        for b in [0.0_f64, 0.0521, 0.137, 0.5, 1.1052] {
            let r = solve_monic_cubic(-b / 0.1, 0.0, -200.0);
            assert_eq!(r.roots.len(), 1, "Bq={b}");
            let res = residual(r.roots[0], -b / 0.1, 0.0, -200.0);
            assert!(res.abs() < 1e-10, "residual {res} at B={b}");
        }
    }

    #[test]
    fn works_in_f32() {
        let r = solve_monic_cubic(-6.0_f32, 11.0, -6.0);
        assert_eq!(r.roots.len(), 3);
        assert!((r.roots[1] - 2.0).abs() < 1e-5);
    }

    proptest::proptest! {
        #[test]
        fn reconstructed_roots_are_found(r1 in -50.0..50.0f64,
                                         r2 in -50.0..50.0f64,
                                         r3 in -50.0..50.0f64) {
            let a2 = -(r1 + r2 + r3);
            let a1 = r1 * r2 + r1 * r3 + r2 * r3;
            let a0 = -r1 * r2 * r3;
            let got = solve_monic_cubic(a2, a1, a0);
            let mut want = [r1, r2, r3];
            want.sort_by(|a, b| a.partial_cmp(b).unwrap());
            // Every constructed root must be matched by some solved root.
            for w in want {
                let ok = got.roots.iter().any(|g| (g - w).abs() <= 1e-6 * (1.0 + w.abs()));
                proptest::prop_assert!(ok, "missing root {} in {:?}", w, got.roots);
            }
        }
    }
}
