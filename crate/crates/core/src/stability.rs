//! Linear stability classification and the diffusion-driven instability
//! analysis: dispersion polynomial, unstable bands, discrete mode sets and
//! rain-flux thresholds.

use crate::error::{Error, Result};
use crate::model::{
    equilibrium_cubic_b, equilibrium_general_case, jacobian, CloudParams, DiffusionParams,
    Equilibrium, Jacobian2,
};
use crate::scalar::Real;
use crate::Dims;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

/// Periodic domain for mode counting: edge length `L` per dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec<T> {
    pub length: T,
    pub dims: Dims,
}

impl<T: Real> DomainSpec<T> {
    pub fn new(length: T, dims: Dims) -> Result<Self> {
        if !(length > T::zero()) || !length.is_finite() {
            return Err(Error::InvalidParameter {
                name: "length",
                reason: format!("must be positive and finite, got {length}"),
            });
        }
        Ok(Self { length, dims })
    }

    /// `(2 pi / L)^2`, the squared-wavenumber spacing factor.
    pub fn k2_unit(&self) -> T {
        let k = T::of(2.0 * std::f64::consts::PI) / self.length;
        k * k
    }
}

/// Trace/determinant classification of a reaction Jacobian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeStability<T> {
    pub trace: T,
    pub det: T,
    pub eigenvalues: [Complex<T>; 2],
    /// `trace < 0 && det > 0`, strict.
    pub stable: bool,
    /// Boundary case (`trace = 0` or `det = 0`): classified not stable.
    pub marginal: bool,
}

/// Classifies the homogeneous (no-diffusion) linearization.
pub fn classify<T: Real>(jac: &Jacobian2<T>) -> OdeStability<T> {
    let trace = jac.a11 + jac.a22;
    let det = jac.a11 * jac.a22 - jac.a12 * jac.a21;
    let half = T::of(0.5);
    let disc = trace * trace - T::of(4.0) * det;
    let eigenvalues = if disc >= T::zero() {
        let s = disc.sqrt();
        [
            Complex::new((trace + s) * half, T::zero()),
            Complex::new((trace - s) * half, T::zero()),
        ]
    } else {
        let s = (-disc).sqrt() * half;
        [
            Complex::new(trace * half, s),
            Complex::new(trace * half, -s),
        ]
    };
    OdeStability {
        trace,
        det,
        eigenvalues,
        stable: trace < T::zero() && det > T::zero(),
        marginal: trace == T::zero() || det == T::zero(),
    }
}

/// Determinant of the mode-`q` Jacobian as a quadratic polynomial in
/// `x = q^2`: `(a11 - D1 x)(a22 - D2 x) - a12 a21`. Negative values mark
/// unstable modes.
pub fn dispersion_p2<T: Real>(jac: &Jacobian2<T>, diff: &DiffusionParams<T>, x: T) -> T {
    (jac.a11 - diff.d1 * x) * (jac.a22 - diff.d2 * x) - jac.a12 * jac.a21
}

/// Larger-real-part eigenvalue of the mode-`q` Jacobian at `x = q^2`.
pub fn mode_growth_rate<T: Real>(jac: &Jacobian2<T>, diff: &DiffusionParams<T>, x: T) -> T {
    let tr = jac.a11 + jac.a22 - (diff.d1 + diff.d2) * x;
    let det = dispersion_p2(jac, diff, x);
    let disc = tr * tr - T::of(4.0) * det;
    if disc >= T::zero() {
        (tr + disc.sqrt()) * T::of(0.5)
    } else {
        tr * T::of(0.5)
    }
}

/// Location `q_m^2 = (D1 a22 + D2 a11) / (2 D1 D2)` of the dispersion
/// polynomial's minimum. Negative means no positive minimum exists and no
/// diffusion-driven instability is possible.
pub fn most_unstable_mode<T: Real>(jac: &Jacobian2<T>, diff: &DiffusionParams<T>) -> T {
    (diff.d1 * jac.a22 + diff.d2 * jac.a11) / (T::of(2.0) * diff.d1 * diff.d2)
}

/// Instability criterion `D1 a22 + D2 a11 > 2 sqrt(D1 D2 det)` with
/// `det > 0`. Meaningful for Jacobians that are stable without diffusion.
pub fn turing_criterion<T: Real>(jac: &Jacobian2<T>, diff: &DiffusionParams<T>) -> bool {
    let det = jac.a11 * jac.a22 - jac.a12 * jac.a21;
    det > T::zero()
        && diff.d1 * jac.a22 + diff.d2 * jac.a11 > T::of(2.0) * (diff.d1 * diff.d2 * det).sqrt()
}

/// Roots `(x-, x+)` of the dispersion polynomial in `q^2`, present when the
/// discriminant is positive and the vertex lies at positive `q^2`.
pub fn unstable_band<T: Real>(jac: &Jacobian2<T>, diff: &DiffusionParams<T>) -> Option<(T, T)> {
    let a = diff.d1 * diff.d2;
    let b = diff.d1 * jac.a22 + diff.d2 * jac.a11; // p2(x) = a x^2 - b x + det
    let det = jac.a11 * jac.a22 - jac.a12 * jac.a21;
    let disc = b * b - T::of(4.0) * a * det;
    if disc <= T::zero() || most_unstable_mode(jac, diff) <= T::zero() {
        return None;
    }
    let s = disc.sqrt();
    let two_a = T::of(2.0) * a;
    Some(((b - s) / two_a, (b + s) / two_a))
}

/// Discrete unstable modes on a cyclic domain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModeSet {
    /// Mode indices `n >= 1` with `x- < (2 pi n / L)^2 < x+`.
    One(Vec<u32>),
    /// Pairs `(n1, n2)`, `n1 <= n2`, not both zero, with
    /// `x- < (2 pi / L)^2 (n1^2 + n2^2) < x+`, reported up to symmetry.
    Two(Vec<(u32, u32)>),
}

impl ModeSet {
    pub fn is_empty(&self) -> bool {
        match self {
            ModeSet::One(v) => v.is_empty(),
            ModeSet::Two(v) => v.is_empty(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            ModeSet::One(v) => v.len(),
            ModeSet::Two(v) => v.len(),
        }
    }
}

/// Integer Fourier modes inside an unstable band.
pub fn discrete_unstable_modes<T: Real>(band: (T, T), dom: &DomainSpec<T>) -> ModeSet {
    let (lo, hi) = band;
    let unit = dom.k2_unit();
    let n_max = (hi / unit)
        .max(T::zero())
        .sqrt()
        .ceil()
        .to_u64()
        .unwrap_or(0) as u32;
    match dom.dims {
        Dims::One => {
            let mut out = Vec::new();
            for n in 1..=n_max {
                let x = unit * T::from_u32(n * n).unwrap();
                if lo < x && x < hi {
                    out.push(n);
                }
            }
            ModeSet::One(out)
        }
        Dims::Two => {
            let mut out = Vec::new();
            for n1 in 0..=n_max {
                for n2 in n1..=n_max {
                    if n1 == 0 && n2 == 0 {
                        continue;
                    }
                    let x = unit * T::from_u32(n1 * n1 + n2 * n2).unwrap();
                    if lo < x && x < hi {
                        out.push((n1, n2));
                    }
                }
            }
            ModeSet::Two(out)
        }
    }
}

/// Rain-flux value where the discriminant of the rain-flux cubic, as printed
/// in the source analysis, changes sign:
/// `B1 = (27/4 d^2 c (c - a1) / a2)^(1/3)`.
pub fn bifurcation_b1<T: Real>(p: &CloudParams<T>) -> Result<T> {
    let two = T::of(2.0);
    if p.gamma != T::one() || p.beta_c != two || p.beta_r != two || p.zeta != T::one() {
        return Err(Error::NotApplicable(
            "B1 needs gamma = 1, beta_c = beta_r = 2, zeta = 1".into(),
        ));
    }
    Ok((T::of(27.0 / 4.0) * p.d * p.d * p.c * (p.c - p.a1) / p.a2).cbrt())
}

/// Which predicate defines the pattern-suppressing rain-flux threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum B2Definition {
    /// Sign change of the Jacobian entry `a22(B)` at the admissible cubic
    /// equilibrium.
    A22Sign,
    /// The instability criterion stops holding.
    CriterionFail,
    /// The set of discrete unstable modes becomes empty.
    LastDiscreteMode,
}

/// Admissible cubic-branch equilibrium at rain flux `b`.
fn cubic_equilibrium_at<T: Real>(p: &CloudParams<T>, b: T) -> Result<Equilibrium<T>> {
    let mut pb = *p;
    pb.b = b;
    let mut roots = equilibrium_cubic_b(&pb)?;
    roots.retain(|e| e.admissible);
    roots.pop().ok_or_else(|| {
        Error::NoAdmissibleEquilibrium(format!("no admissible cubic root at B = {}", b.as_f64()))
    })
}

/// Bisection for the rain-flux threshold above which the selected
/// pattern-capability predicate fails, bracketed on `[0, B1]`.
///
/// Absolute tolerance `1e-6` in `B`, 200-iteration cap.
pub fn threshold_b2<T: Real>(
    p: &CloudParams<T>,
    diff: &DiffusionParams<T>,
    dom: &DomainSpec<T>,
    definition: B2Definition,
) -> Result<T> {
    let b1 = bifurcation_b1(p)?;
    if !(b1 > T::zero()) {
        return Err(Error::NoSignChange {
            lo: 0.0,
            hi: b1.as_f64(),
        });
    }
    let capable = |b: T| -> Result<bool> {
        let eq = cubic_equilibrium_at(p, b)?;
        let mut pb = *p;
        pb.b = b;
        let jac = jacobian(&pb, &eq.state)?;
        Ok(match definition {
            B2Definition::A22Sign => jac.a22 > T::zero(),
            B2Definition::CriterionFail => turing_criterion(&jac, diff),
            B2Definition::LastDiscreteMode => match unstable_band(&jac, diff) {
                Some(band) => !discrete_unstable_modes(band, dom).is_empty(),
                None => false,
            },
        })
    };
    let mut lo = T::zero();
    let mut hi = b1;
    let at_lo = capable(lo)?;
    if capable(hi)? == at_lo {
        return Err(Error::NoSignChange {
            lo: 0.0,
            hi: b1.as_f64(),
        });
    }
    let tol = T::of(1e-6);
    for _ in 0..200 {
        let mid = (lo + hi) * T::of(0.5);
        if capable(mid)? == at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= tol {
            break;
        }
    }
    Ok((lo + hi) * T::of(0.5))
}

/// Certificate that the `gamma = beta_c = 1` class cannot produce
/// diffusion-driven instabilities: at its non-trivial equilibrium `a11 = 0`,
/// so the criterion would need `D1 a22 > 2 sqrt(-D1 D2 a12 a21) >= 0` while
/// stability forces `a22 < 0`.
pub fn impossibility_general_case<T: Real>(p: &CloudParams<T>) -> Result<bool> {
    if p.gamma != T::one() || p.beta_c != T::one() {
        return Err(Error::NotApplicable(
            "impossibility certificate needs gamma = beta_c = 1".into(),
        ));
    }
    let eq = equilibrium_general_case(p)?;
    if !eq.admissible {
        return Err(Error::NoAdmissibleEquilibrium(
            "certificate requires the closed-form equilibrium to exist".into(),
        ));
    }
    let jac = jacobian(p, &eq.state)?;
    let scale = jac.a21.abs().max(T::one());
    if jac.a11.abs() > T::of(1e-10) * scale {
        return Err(Error::NoConvergence(format!(
            "a11 = {} does not vanish at the closed-form equilibrium",
            jac.a11.as_f64()
        )));
    }
    if !(jac.a12 < T::zero()) || !(jac.a21 > T::zero()) {
        return Err(Error::NoConvergence(
            "off-diagonal signs violate the class structure".into(),
        ));
    }
    Ok(true)
}

/// Everything the analysis of one Jacobian yields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport<T> {
    pub jac: Jacobian2<T>,
    pub trace: T,
    pub det: T,
    pub eigenvalues: [Complex<T>; 2],
    pub ode_stable: bool,
    pub marginal: bool,
    /// `ode_stable` and the instability criterion holds.
    pub turing_possible: bool,
    pub qm_squared: T,
    pub band: Option<(T, T)>,
    pub discrete_modes: ModeSet,
}

/// Full per-Jacobian report: classification, criterion, band and the
/// discrete modes of `dom`.
pub fn report<T: Real>(
    jac: &Jacobian2<T>,
    diff: &DiffusionParams<T>,
    dom: &DomainSpec<T>,
) -> StabilityReport<T> {
    let ode = classify(jac);
    let criterion = turing_criterion(jac, diff);
    let band = unstable_band(jac, diff);
    let discrete_modes = match band {
        Some(b) => discrete_unstable_modes(b, dom),
        None => match dom.dims {
            Dims::One => ModeSet::One(Vec::new()),
            Dims::Two => ModeSet::Two(Vec::new()),
        },
    };
    StabilityReport {
        jac: *jac,
        trace: ode.trace,
        det: ode.det,
        eigenvalues: ode.eigenvalues,
        ode_stable: ode.stable,
        marginal: ode.marginal,
        turing_possible: ode.stable && criterion,
        qm_squared: most_unstable_mode(jac, diff),
        band,
        discrete_modes,
    }
}
