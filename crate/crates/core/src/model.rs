//! The generic two-species cloud scheme: parameters, reaction right-hand
//! sides, Jacobians, and every equilibrium branch.
//!
//! The reaction terms are
//!
//! ```text
//! dqc/dt = c qc - a1 qc^gamma - a2 qc^beta_c qr^beta_r
//! dqr/dt =        a1 qc^gamma + a2 qc^beta_c qr^beta_r + B - d qr^zeta
//! ```
//!
//! with condensation `c qc`, autoconversion `a1 qc^gamma`, accretion
//! `a2 qc^beta_c qr^beta_r` and sedimentation `B - d qr^zeta`. The model is
//! physical on the nonnegative orthant only; any negative base under a
//! fractional exponent is an error, never a silent NaN.

use crate::cubic::solve_monic_cubic;
use crate::error::{Error, Result};
use crate::scalar::{integer_exponent, Real};
use serde::{Deserialize, Serialize};

/// Relative residual bound below which a computed steady state counts as an
/// equilibrium.
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-10;

/// Reaction coefficients and exponents, plus the rain influx `b` from the
/// layer above.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloudParams<T> {
    /// Condensation rate (the product of the rate constant and the fixed
    /// supersaturation).
    pub c: T,
    /// Autoconversion prefactor.
    pub a1: T,
    /// Accretion prefactor.
    pub a2: T,
    /// Autoconversion exponent, `>= 1`.
    pub gamma: T,
    /// Accretion exponent on cloud water, `>= 1`.
    pub beta_c: T,
    /// Accretion exponent on rain water, `> 0`.
    pub beta_r: T,
    /// Sedimentation exponent, `> 0`.
    pub zeta: T,
    /// Sedimentation prefactor.
    pub d: T,
    /// Rain influx from above, `>= 0`.
    pub b: T,
}

impl<T: Real> CloudParams<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        c: T,
        a1: T,
        a2: T,
        gamma: T,
        beta_c: T,
        beta_r: T,
        zeta: T,
        d: T,
        b: T,
    ) -> Result<Self> {
        let p = Self {
            c,
            a1,
            a2,
            gamma,
            beta_c,
            beta_r,
            zeta,
            d,
            b,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |name: &'static str, v: T| -> Result<()> {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be positive and finite, got {v}"),
                });
            }
            Ok(())
        };
        pos("c", self.c)?;
        pos("a1", self.a1)?;
        pos("a2", self.a2)?;
        pos("d", self.d)?;
        pos("beta_r", self.beta_r)?;
        pos("zeta", self.zeta)?;
        if !(self.b >= T::zero()) || !self.b.is_finite() {
            return Err(Error::InvalidParameter {
                name: "b",
                reason: format!("must be nonnegative and finite, got {}", self.b),
            });
        }
        // Exponents below one make the right-hand side non-Lipschitz at
        // qc = 0 (the partial derivatives do not exist there).
        if !(self.gamma >= T::one()) {
            return Err(Error::InvalidParameter {
                name: "gamma",
                reason: format!("must be >= 1, got {}", self.gamma),
            });
        }
        if !(self.beta_c >= T::one()) {
            return Err(Error::InvalidParameter {
                name: "beta_c",
                reason: format!("must be >= 1, got {}", self.beta_c),
            });
        }
        Ok(())
    }
}

/// Diffusion coefficients of the spatially extended scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionParams<T> {
    /// Cloud-water diffusion coefficient.
    pub d1: T,
    /// Rain-water diffusion coefficient. No ordering against `d1` is
    /// enforced.
    pub d2: T,
}

impl<T: Real> DiffusionParams<T> {
    pub fn new(d1: T, d2: T) -> Result<Self> {
        for (name, v) in [("d1", d1), ("d2", d2)] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name: if name == "d1" { "d1" } else { "d2" },
                    reason: format!("must be positive and finite, got {v}"),
                });
            }
        }
        Ok(Self { d1, d2 })
    }
}

/// Mass concentrations of the two species.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State<T> {
    pub qc: T,
    pub qr: T,
}

impl<T: Real> State<T> {
    pub fn new(qc: T, qr: T) -> Self {
        Self { qc, qr }
    }

    pub fn norm_inf(&self) -> T {
        self.qc.abs().max(self.qr.abs())
    }
}

/// Which closed form (or solver) produced an equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// No cloud, rain balancing the influx: `(0, (B/d)^(1/zeta))`.
    Trivial,
    /// `gamma = beta_c = 1` closed form.
    GeneralCaseLinear,
    /// `beta_c = beta_r = beta > 1`, `zeta = 1`, `B = 0` closed form.
    BetaClass,
    /// Real cubic roots for `beta = 2`, `zeta = 1`, `B >= 0`.
    CubicB,
    /// Damped-Newton numeric root outside the closed-form classes.
    Numeric,
}

/// A steady state with its provenance and admissibility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium<T> {
    pub state: State<T>,
    pub branch: Branch,
    /// Both components real and nonnegative, and the reaction residual below
    /// tolerance.
    pub admissible: bool,
    /// `max(|dqc/dt|, |dqr/dt|)` at `state`.
    pub residual: T,
}

impl<T: Real> Equilibrium<T> {
    /// Wraps a candidate state, evaluating the residual-based admissibility.
    pub fn checked(
        p: &CloudParams<T>,
        state: State<T>,
        branch: Branch,
        conditions_hold: bool,
    ) -> Self {
        let nonneg = state.qc >= T::zero()
            && state.qr >= T::zero()
            && state.qc.is_finite()
            && state.qr.is_finite();
        let residual = if nonneg {
            match reaction_rhs(p, &state) {
                Ok((f, g)) => f.abs().max(g.abs()),
                Err(_) => T::infinity(),
            }
        } else {
            T::infinity()
        };
        let tol = T::of(DEFAULT_RESIDUAL_TOL) * T::one().max(state.norm_inf());
        Self {
            state,
            branch,
            admissible: conditions_hold && nonneg && residual < tol,
            residual,
        }
    }
}

/// Entries of the 2x2 reaction Jacobian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jacobian2<T> {
    pub a11: T,
    pub a12: T,
    pub a21: T,
    pub a22: T,
}

/// Four-way case split of the trivial-state Jacobian on
/// (`gamma` = 1 vs. > 1) x (`beta_c` = 1 vs. > 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrivialCase {
    /// `gamma = 1`, `beta_c = 1`: both collision processes enter linearly.
    BothLinear,
    /// `gamma = 1`, `beta_c > 1`: only autoconversion is linear.
    AutoconversionLinear,
    /// `gamma > 1`, `beta_c = 1`: only accretion is linear in cloud water.
    AccretionLinear,
    /// `gamma > 1`, `beta_c > 1`: `a11 = c > 0`, always unstable.
    UnstableAlways,
}

/// `base^exp` on the model's domain: integer exponents evaluate sign-exactly,
/// fractional exponents require a nonnegative base.
pub(crate) fn pow_model<T: Real>(base: T, exp: T) -> Result<T> {
    if let Some(k) = integer_exponent(exp) {
        if base == T::zero() && k < 0 {
            return Err(Error::NonLipschitz(format!(
                "0^{k} while differentiating a power-law term"
            )));
        }
        return Ok(base.powi(k));
    }
    if base < T::zero() {
        return Err(Error::NegativePower {
            base: base.as_f64(),
            exponent: exp.as_f64(),
        });
    }
    if base == T::zero() && exp < T::zero() {
        return Err(Error::NonLipschitz(format!(
            "0^{exp} while differentiating a power-law term"
        )));
    }
    Ok(base.powf(exp))
}

/// Reaction right-hand side `(dqc/dt, dqr/dt)`.
///
/// The collision terms cancel in the sum, so
/// `dqc/dt + dqr/dt = c qc + B - d qr^zeta` exactly.
pub fn reaction_rhs<T: Real>(p: &CloudParams<T>, s: &State<T>) -> Result<(T, T)> {
    let auto = p.a1 * pow_model(s.qc, p.gamma)?;
    let accr = p.a2 * pow_model(s.qc, p.beta_c)? * pow_model(s.qr, p.beta_r)?;
    let sed = p.b - p.d * pow_model(s.qr, p.zeta)?;
    Ok((p.c * s.qc - auto - accr, auto + accr + sed))
}

/// Reaction Jacobian at `s`.
///
/// At `qc = 0` the entries follow the exact case split on the exponents;
/// exponents in `(0, 1)` would make the derivative blow up there, which is
/// reported as a non-Lipschitz domain error.
pub fn jacobian<T: Real>(p: &CloudParams<T>, s: &State<T>) -> Result<Jacobian2<T>> {
    let qc_g1 = pow_model(s.qc, p.gamma - T::one())?;
    let qc_b1 = pow_model(s.qc, p.beta_c - T::one())?;
    let qc_b = pow_model(s.qc, p.beta_c)?;
    let qr_b = pow_model(s.qr, p.beta_r)?;
    let qr_z1 = pow_model(s.qr, p.zeta - T::one())?;

    let auto_d = p.gamma * p.a1 * qc_g1;
    let accr_dc = p.a2 * p.beta_c * qc_b1 * qr_b;
    // The accretion term is identically zero in qr wherever qc^beta_c
    // vanishes, so its qr-derivative is zero there without touching the
    // possibly singular qr^(beta_r - 1).
    let accr_dr = if qc_b == T::zero() {
        T::zero()
    } else {
        p.a2 * p.beta_r * qc_b * pow_model(s.qr, p.beta_r - T::one())?
    };

    let j = Jacobian2 {
        a11: p.c - auto_d - accr_dc,
        a12: -accr_dr,
        a21: auto_d + accr_dc,
        a22: accr_dr - p.d * p.zeta * qr_z1,
    };
    for v in [j.a11, j.a12, j.a21, j.a22] {
        if !v.is_finite() {
            return Err(Error::NonLipschitz(format!(
                "non-finite Jacobian entry at state ({}, {})",
                s.qc, s.qr
            )));
        }
    }
    Ok(j)
}

/// The no-cloud steady state `(0, (B/d)^(1/zeta))`. Always admissible.
pub fn trivial_equilibrium<T: Real>(p: &CloudParams<T>) -> Equilibrium<T> {
    let qr = (p.b / p.d).powf(T::one() / p.zeta);
    Equilibrium::checked(p, State::new(T::zero(), qr), Branch::Trivial, true)
}

/// `a11`, `a21` of the trivial-state Jacobian under the exact four-way case
/// split on the exponents, plus the case label.
pub fn trivial_stability_case<T: Real>(p: &CloudParams<T>) -> (T, T, TrivialCase) {
    let lin_accretion = p.a2 * (p.b / p.d).powf(p.beta_r / p.zeta);
    let gamma_one = p.gamma == T::one();
    let beta_one = p.beta_c == T::one();
    match (gamma_one, beta_one) {
        (true, true) => (
            p.c - p.a1 - lin_accretion,
            p.a1 + lin_accretion,
            TrivialCase::BothLinear,
        ),
        (true, false) => (p.c - p.a1, p.a1, TrivialCase::AutoconversionLinear),
        (false, true) => (
            p.c - lin_accretion,
            lin_accretion,
            TrivialCase::AccretionLinear,
        ),
        (false, false) => (p.c, T::zero(), TrivialCase::UnstableAlways),
    }
}

/// Non-trivial equilibrium of the `gamma = beta_c = 1` class:
/// `qre = ((c-a1)/a2)^(1/beta_r)`, `qce = (d/c) qre^zeta - B/c`.
///
/// Admissible iff `c > a1` and `d ((c-a1)/a2)^(zeta/beta_r) > B`.
pub fn equilibrium_general_case<T: Real>(p: &CloudParams<T>) -> Result<Equilibrium<T>> {
    if p.gamma != T::one() || p.beta_c != T::one() {
        return Err(Error::NotApplicable(format!(
            "closed form needs gamma = beta_c = 1, got gamma = {}, beta_c = {}",
            p.gamma, p.beta_c
        )));
    }
    let excess = (p.c - p.a1) / p.a2;
    if excess <= T::zero() {
        // No real positive root; conditions for existence already fail.
        return Ok(Equilibrium {
            state: State::new(T::zero(), T::zero()),
            branch: Branch::GeneralCaseLinear,
            admissible: false,
            residual: T::infinity(),
        });
    }
    let qre = excess.powf(T::one() / p.beta_r);
    let qce = p.d / p.c * qre.powf(p.zeta) - p.b / p.c;
    let conditions = p.d * excess.powf(p.zeta / p.beta_r) > p.b;
    Ok(Equilibrium::checked(
        p,
        State::new(qce, qre),
        Branch::GeneralCaseLinear,
        conditions,
    ))
}

/// Non-trivial equilibrium for `gamma = 1`, `beta_c = beta_r = beta > 1`,
/// `zeta = 1`, `B = 0`:
/// `qce = ((d/c)^beta (c-a1)/a2)^(1/(2 beta - 1))`, `qre = (c/d) qce`.
///
/// Admissible iff `c > a1`.
pub fn equilibrium_beta_class<T: Real>(p: &CloudParams<T>) -> Result<Equilibrium<T>> {
    let beta = p.beta_c;
    if p.gamma != T::one()
        || p.beta_r != beta
        || beta <= T::one()
        || p.zeta != T::one()
        || p.b != T::zero()
    {
        return Err(Error::NotApplicable(
            "closed form needs gamma = 1, beta_c = beta_r > 1, zeta = 1, B = 0".into(),
        ));
    }
    let excess = (p.c - p.a1) / p.a2;
    if excess < T::zero() {
        return Ok(Equilibrium {
            state: State::new(T::zero(), T::zero()),
            branch: Branch::BetaClass,
            admissible: false,
            residual: T::infinity(),
        });
    }
    let ratio = (p.d / p.c).powf(beta);
    let qce = (ratio * excess).powf(T::one() / (T::of(2.0) * beta - T::one()));
    let qre = p.c / p.d * qce;
    Ok(Equilibrium::checked(
        p,
        State::new(qce, qre),
        Branch::BetaClass,
        excess > T::zero(),
    ))
}

/// All real roots of the rain-flux cubic for `gamma = 1`,
/// `beta_c = beta_r = 2`, `zeta = 1`, `B >= 0`.
///
/// Stationarity reduces to `d qre^3 - B qre^2 - c (c-a1)/a2 = 0` with
/// `qce = (d qre - B)/c`; each real root is returned, admissible iff
/// `qre > 0` and `qce >= 0`.
pub fn equilibrium_cubic_b<T: Real>(p: &CloudParams<T>) -> Result<Vec<Equilibrium<T>>> {
    let two = T::of(2.0);
    if p.gamma != T::one() || p.beta_c != two || p.beta_r != two || p.zeta != T::one() {
        return Err(Error::NotApplicable(
            "rain-flux cubic needs gamma = 1, beta_c = beta_r = 2, zeta = 1".into(),
        ));
    }
    if p.d == T::zero() {
        return Err(Error::DegenerateCubic);
    }
    // Monic form: q^3 - (B/d) q^2 - c (c - a1) / (a2 d) = 0.
    let roots = solve_monic_cubic(-p.b / p.d, T::zero(), -p.c * (p.c - p.a1) / (p.a2 * p.d));
    let mut out = Vec::with_capacity(roots.roots.len());
    for qre in roots.roots {
        let qce = (p.d * qre - p.b) / p.c;
        let conditions = qre > T::zero() && qce >= T::zero();
        out.push(Equilibrium::checked(
            p,
            State::new(qce, qre),
            Branch::CubicB,
            conditions,
        ));
    }
    Ok(out)
}

/// Discriminant of the depressed form of the rain-flux cubic, recomputed from
/// the monic coefficients (positive means a single real root).
pub fn cubic_b_discriminant<T: Real>(p: &CloudParams<T>) -> Result<T> {
    let two = T::of(2.0);
    if p.gamma != T::one() || p.beta_c != two || p.beta_r != two || p.zeta != T::one() {
        return Err(Error::NotApplicable(
            "rain-flux cubic needs gamma = 1, beta = 2, zeta = 1".into(),
        ));
    }
    Ok(solve_monic_cubic(-p.b / p.d, T::zero(), -p.c * (p.c - p.a1) / (p.a2 * p.d)).discriminant)
}

/// Equilibrium identity `qce^(beta_c - gamma) * qre^(beta_r)`, which equals
/// `(c - a1)/a2` at every admissible non-trivial steady state of the class
/// where condensation and autoconversion share the exponent `gamma`.
pub fn conserved_quantity<T: Real>(p: &CloudParams<T>, e: &Equilibrium<T>) -> Result<T> {
    if e.state.qc == T::zero() {
        return Err(Error::NotApplicable(
            "conserved quantity is undefined at qc = 0".into(),
        ));
    }
    Ok(pow_model(e.state.qc, p.beta_c - p.gamma)? * pow_model(e.state.qr, p.beta_r)?)
}

/// Damped-Newton root of the reaction terms for parameter sets outside the
/// closed-form branches, seeded from the nearest closed form.
pub fn equilibrium_numeric<T: Real>(
    p: &CloudParams<T>,
    seed: Option<State<T>>,
) -> Result<Equilibrium<T>> {
    let mut s = seed.unwrap_or_else(|| numeric_seed(p));
    let tiny = T::of(1e-12);
    if s.qc <= T::zero() {
        s.qc = T::of(0.1);
    }
    if s.qr <= T::zero() {
        s.qr = T::one();
    }
    let norm = |f: (T, T)| f.0.abs().max(f.1.abs());
    let mut f = reaction_rhs(p, &s)?;
    for _ in 0..200 {
        let res = norm(f);
        if res < tiny * T::one().max(s.norm_inf()) {
            return Ok(Equilibrium::checked(p, s, Branch::Numeric, true));
        }
        let j = jacobian(p, &s)?;
        let det = j.a11 * j.a22 - j.a12 * j.a21;
        if det.abs() <= T::of(1e-300) {
            return Err(Error::NoConvergence(
                "singular Jacobian in Newton iteration".into(),
            ));
        }
        let dqc = (f.0 * j.a22 - f.1 * j.a12) / det;
        let dqr = (j.a11 * f.1 - j.a21 * f.0) / det;
        // Backtrack until the residual decreases and the iterate stays in the
        // positive quadrant.
        let mut lambda = T::one();
        let mut accepted = false;
        for _ in 0..40 {
            let cand = State::new(s.qc - lambda * dqc, s.qr - lambda * dqr);
            if cand.qc > T::zero() && cand.qr > T::zero() {
                if let Ok(fc) = reaction_rhs(p, &cand) {
                    if norm(fc) < res {
                        s = cand;
                        f = fc;
                        accepted = true;
                        break;
                    }
                }
            }
            lambda = lambda * T::of(0.5);
        }
        if !accepted {
            return Err(Error::NoConvergence(format!(
                "Newton stalled at residual {}",
                res.as_f64()
            )));
        }
    }
    Err(Error::NoConvergence("Newton iteration cap reached".into()))
}

fn numeric_seed<T: Real>(p: &CloudParams<T>) -> State<T> {
    // Beta-class shape with the cloud exponent, ignoring B; crude but inside
    // the basin for moderate parameters.
    let beta = p.beta_c.max(p.beta_r);
    let excess = ((p.c - p.a1) / p.a2).max(T::of(1e-3));
    let qce = ((p.d / p.c).powf(beta) * excess).powf(T::one() / (T::of(2.0) * beta - T::one()));
    State::new(qce, p.c / p.d * qce)
}

/// The non-trivial equilibrium a simulation perturbs around, chosen from the
/// applicable branch.
pub fn nontrivial_equilibrium<T: Real>(p: &CloudParams<T>) -> Result<Equilibrium<T>> {
    let two = T::of(2.0);
    let e = if p.gamma == T::one() && p.beta_c == T::one() {
        equilibrium_general_case(p)?
    } else if p.gamma == T::one()
        && p.beta_c == p.beta_r
        && p.beta_c > T::one()
        && p.zeta == T::one()
        && p.b == T::zero()
    {
        equilibrium_beta_class(p)?
    } else if p.gamma == T::one() && p.beta_c == two && p.beta_r == two && p.zeta == T::one() {
        let mut roots = equilibrium_cubic_b(p)?;
        roots.retain(|e| e.admissible);
        roots.pop().ok_or_else(|| {
            Error::NoAdmissibleEquilibrium("rain-flux cubic has no admissible root".into())
        })?
    } else {
        equilibrium_numeric(p, None)?
    };
    if !e.admissible {
        let reason = if p.c <= p.a1 {
            "requires condensation to dominate autoconversion (c > a1)".to_string()
        } else {
            format!(
                "branch {:?} conditions fail (rain influx too strong or residual too large)",
                e.branch
            )
        };
        return Err(Error::NoAdmissibleEquilibrium(reason));
    }
    Ok(e)
}
