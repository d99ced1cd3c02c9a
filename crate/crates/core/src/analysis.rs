//! Assembled per-configuration analysis: all equilibrium branches, the
//! trivial-state classification, the stability report at the selected
//! equilibrium and the rain-flux thresholds.

use crate::error::{Error, Result};
use crate::model::{self, CloudParams, DiffusionParams, Equilibrium, Jacobian2, TrivialCase};
use crate::scalar::Real;
use crate::stability::{self, B2Definition, DomainSpec, StabilityReport};
use serde::{Deserialize, Serialize};

/// Rain-flux transition reported in the literature for the quadratic-
/// accretion reference parameters (`c = 5`, `a1 = a2 = 1`, `d = 0.1`).
pub const LITERATURE_B2: f64 = 0.137;

/// Unstable 1D mode range reported in the literature for the reference
/// parameters on a length-50 domain.
pub const LITERATURE_MODES_1D: (u32, u32) = (2, 7);

/// Literature value of the rain-flux bifurcation point for the reference
/// parameters.
pub const LITERATURE_B1: f64 = 1.10521;

/// The trivial (no-cloud) state and its classification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrivialInfo<T> {
    pub equilibrium: Equilibrium<T>,
    pub a11: T,
    pub a21: T,
    pub case: TrivialCase,
    /// Jacobian when it exists (sedimentation exponents below one can make
    /// it singular at `qr = 0`).
    pub jacobian: Option<Jacobian2<T>>,
    pub ode_stable: Option<bool>,
}

/// The three pattern-suppression threshold candidates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct B2Candidates<T> {
    pub a22_sign: Option<T>,
    pub criterion_fail: Option<T>,
    pub last_discrete_mode: Option<T>,
}

/// Full analysis of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport<T> {
    pub params: CloudParams<T>,
    pub diff: DiffusionParams<T>,
    pub domain: DomainSpec<T>,
    pub trivial: TrivialInfo<T>,
    /// Every closed-form branch that applies, admissible or not.
    pub equilibria: Vec<Equilibrium<T>>,
    /// The equilibrium simulations perturb around.
    pub selected: Equilibrium<T>,
    pub jacobian: Jacobian2<T>,
    pub stability: StabilityReport<T>,
    /// Certificate that the linear-collision class admits no
    /// diffusion-driven instability (present only in that class).
    pub impossibility_certificate: Option<bool>,
    pub b1: Option<T>,
    pub b2: Option<B2Candidates<T>>,
    /// Conserved-quantity check `qce^(beta_c - gamma) qre^(beta_r)` against
    /// `(c - a1)/a2` at the selected equilibrium.
    pub conserved_quantity: Option<T>,
}

/// Analyzes a configuration end to end.
///
/// Fails with `NoAdmissibleEquilibrium` when no non-trivial branch yields an
/// admissible steady state (for example `c <= a1`).
pub fn analyze<T: Real>(
    params: &CloudParams<T>,
    diff: &DiffusionParams<T>,
    domain: &DomainSpec<T>,
) -> Result<AnalysisReport<T>> {
    params.validate()?;

    let trivial_eq = model::trivial_equilibrium(params);
    let (a11, a21, case) = model::trivial_stability_case(params);
    let trivial_jac = model::jacobian(params, &trivial_eq.state).ok();
    let trivial = TrivialInfo {
        equilibrium: trivial_eq,
        a11,
        a21,
        case,
        jacobian: trivial_jac,
        ode_stable: trivial_jac.map(|j| stability::classify(&j).stable),
    };

    let mut equilibria = Vec::new();
    if let Ok(e) = model::equilibrium_general_case(params) {
        equilibria.push(e);
    }
    if let Ok(e) = model::equilibrium_beta_class(params) {
        equilibria.push(e);
    }
    if let Ok(roots) = model::equilibrium_cubic_b(params) {
        for e in roots {
            if equilibria
                .iter()
                .all(|have: &Equilibrium<T>| have.branch != e.branch || have.state != e.state)
            {
                equilibria.push(e);
            }
        }
    }

    let selected = model::nontrivial_equilibrium(params)?;
    if equilibria.iter().all(|e| e.branch != selected.branch) {
        equilibria.push(selected);
    }
    let jacobian = model::jacobian(params, &selected.state)?;
    let stability_report = stability::report(&jacobian, diff, domain);

    let impossibility_certificate = match stability::impossibility_general_case(params) {
        Ok(v) => Some(v),
        Err(Error::NotApplicable(_)) => None,
        Err(e) => return Err(e),
    };

    let b1 = stability::bifurcation_b1(params).ok();
    let b2 = if b1.is_some() {
        Some(B2Candidates {
            a22_sign: stability::threshold_b2(params, diff, domain, B2Definition::A22Sign).ok(),
            criterion_fail: stability::threshold_b2(
                params,
                diff,
                domain,
                B2Definition::CriterionFail,
            )
            .ok(),
            last_discrete_mode: stability::threshold_b2(
                params,
                diff,
                domain,
                B2Definition::LastDiscreteMode,
            )
            .ok(),
        })
    } else {
        None
    };

    let conserved_quantity = model::conserved_quantity(params, &selected).ok();

    Ok(AnalysisReport {
        params: *params,
        diff: *diff,
        domain: *domain,
        trivial,
        equilibria,
        selected,
        jacobian,
        stability: stability_report,
        impossibility_certificate,
        b1,
        b2,
        conserved_quantity,
    })
}

/// One row of the per-mode table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeRow<T> {
    /// Mode label: `n` in 1D, the radius class `n1^2 + n2^2` in 2D.
    pub label: (u32, u32),
    pub q: T,
    pub q_squared: T,
    pub p2: T,
    pub growth_rate: T,
    pub unstable: bool,
}

/// Brute-force per-integer-mode table: evaluates the dispersion polynomial at
/// every discrete wavenumber up to `max_index`.
pub fn mode_table<T: Real>(
    jac: &Jacobian2<T>,
    diff: &DiffusionParams<T>,
    domain: &DomainSpec<T>,
    max_index: u32,
) -> Vec<ModeRow<T>> {
    let unit = domain.k2_unit();
    let mut rows = Vec::new();
    match domain.dims {
        crate::Dims::One => {
            for n in 1..=max_index {
                let x = unit * T::from_u32(n * n).unwrap();
                let p2 = stability::dispersion_p2(jac, diff, x);
                rows.push(ModeRow {
                    label: (n, 0),
                    q: x.sqrt(),
                    q_squared: x,
                    p2,
                    growth_rate: stability::mode_growth_rate(jac, diff, x),
                    unstable: p2 < T::zero(),
                });
            }
        }
        crate::Dims::Two => {
            for n1 in 0..=max_index {
                for n2 in n1..=max_index {
                    if n1 == 0 && n2 == 0 {
                        continue;
                    }
                    let x = unit * T::from_u32(n1 * n1 + n2 * n2).unwrap();
                    let p2 = stability::dispersion_p2(jac, diff, x);
                    rows.push(ModeRow {
                        label: (n1, n2),
                        q: x.sqrt(),
                        q_squared: x,
                        p2,
                        growth_rate: stability::mode_growth_rate(jac, diff, x),
                        unstable: p2 < T::zero(),
                    });
                }
            }
            rows.sort_by(|a, b| a.q_squared.partial_cmp(&b.q_squared).unwrap());
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use crate::Dims;
    use approx::assert_relative_eq;

    #[test]
    fn analyze_reference_1d() {
        let (params, diff) = presets::pattern_1d::<f64>();
        let dom = DomainSpec::new(50.0, Dims::One).unwrap();
        let rep = analyze(&params, &diff, &dom).unwrap();
        assert!(rep.stability.turing_possible);
        assert_relative_eq!(rep.selected.state.qr, 5.84803547642573, max_relative = 1e-9);
        assert_relative_eq!(rep.b1.unwrap(), 1.35_f64.cbrt(), max_relative = 1e-12);
        let b2 = rep.b2.unwrap();
        assert!(b2.last_discrete_mode.is_some());
        assert_relative_eq!(rep.conserved_quantity.unwrap(), 4.0, max_relative = 1e-9);
        assert!(rep.impossibility_certificate.is_none());
    }

    #[test]
    fn analyze_linear_collision_class() {
        let (params, diff) = presets::linear_collision::<f64>();
        let dom = DomainSpec::new(50.0, Dims::One).unwrap();
        let rep = analyze(&params, &diff, &dom).unwrap();
        assert_eq!(rep.impossibility_certificate, Some(true));
        assert!(!rep.stability.turing_possible);
        assert!(rep.b1.is_none());
    }

    #[test]
    fn analyze_rejects_weak_condensation() {
        let (mut params, diff) = presets::pattern_1d::<f64>();
        params.c = 0.5;
        let dom = DomainSpec::new(50.0, Dims::One).unwrap();
        assert!(matches!(
            analyze(&params, &diff, &dom),
            Err(Error::NoAdmissibleEquilibrium(_))
        ));
    }

    #[test]
    fn mode_table_matches_reference_band() {
        let (params, diff) = presets::pattern_1d::<f64>();
        let dom = DomainSpec::new(50.0, Dims::One).unwrap();
        let eq = model::nontrivial_equilibrium(&params).unwrap();
        let jac = model::jacobian(&params, &eq.state).unwrap();
        let rows = mode_table(&jac, &diff, &dom, 10);
        let unstable: Vec<u32> = rows
            .iter()
            .filter(|r| r.unstable)
            .map(|r| r.label.0)
            .collect();
        assert_eq!(unstable, vec![2, 3, 4, 5, 6]);
    }
}
