//! Exponential time differencing steppers (first and second order) for
//! diagonal linear operators with an explicit nonlinear remainder.
//!
//! Per mode with `z = h l`:
//!
//! - ETD1: `u+ = e^z u + h phi1(z) N(u)`
//! - ETD2 (two-step): `u+ = e^z u + h (phi1(z) + phi2(z)) N_n - h phi2(z) N_{n-1}`
//!
//! with `phi1(z) = (e^z - 1)/z`, `phi2(z) = (e^z - 1 - z)/z^2`. The ETD2
//! form above is algebraically the classical coefficient pair
//! `((1+z)e^z - 1 - 2z)/z^2` and `(-e^z + 1 + z)/z^2` (both times `h`);
//! the tests pin that identity. Step zero is bootstrapped with ETD1.

use crate::error::{Error, Result};
use crate::model::CloudParams;
use crate::scalar::Real;
use crate::spectral::{
    dealias, nonlinear_term_with_policy, symmetrize, ClampPolicy, DealiasRule, GridSpec,
    SpectralTransform, SpectrumPair, SymbolTable,
};
use num_complex::Complex;
use rustfft::FftNum;

/// Series/direct crossover for the phi functions.
const PHI_SERIES_CUTOFF: f64 = 1e-2;

/// `(e^z - 1) / z`, `phi1(0) = 1`.
pub fn phi1<T: Real>(z: T) -> T {
    if z.abs() < T::of(PHI_SERIES_CUTOFF) {
        // 1 + z/2! + z^2/3! + ... , eight terms by Horner.
        let mut acc = T::of(1.0 / factorial(9));
        for k in (2..=8u32).rev() {
            acc = acc * z + T::of(1.0 / factorial(k));
        }
        acc * z + T::one()
    } else {
        z.exp_m1() / z
    }
}

/// `(e^z - 1 - z) / z^2`, `phi2(0) = 1/2`.
pub fn phi2<T: Real>(z: T) -> T {
    if z.abs() < T::of(PHI_SERIES_CUTOFF) {
        // 1/2! + z/3! + z^2/4! + ... , eight terms by Horner.
        let mut acc = T::of(1.0 / factorial(10));
        for k in (3..=9u32).rev() {
            acc = acc * z + T::of(1.0 / factorial(k));
        }
        acc * z + T::of(0.5)
    } else {
        (z.exp_m1() - z) / (z * z)
    }
}

fn factorial(k: u32) -> f64 {
    (2..=k as u64).product::<u64>() as f64
}

/// One ETD1 update for a single mode.
#[inline]
pub fn etd1_update<T: Real>(u: Complex<T>, n: Complex<T>, e_z: T, h_phi1: T) -> Complex<T> {
    u * e_z + n * h_phi1
}

/// One ETD2 update for a single mode.
#[inline]
pub fn etd2_update<T: Real>(
    u: Complex<T>,
    n_cur: Complex<T>,
    n_prev: Complex<T>,
    e_z: T,
    h_phi12: T,
    h_phi2: T,
) -> Complex<T> {
    u * e_z + n_cur * h_phi12 - n_prev * h_phi2
}

/// Precomputed per-mode factors for one species.
#[derive(Debug, Clone)]
pub struct SpeciesTables<T> {
    pub e_z: Vec<T>,
    pub h_phi1: Vec<T>,
    /// `h (phi1 + phi2)`.
    pub h_phi12: Vec<T>,
    pub h_phi2: Vec<T>,
}

/// ETD factor tables for both species at a fixed step size.
#[derive(Debug, Clone)]
pub struct EtdTables<T> {
    pub qc: SpeciesTables<T>,
    pub qr: SpeciesTables<T>,
    pub h: T,
}

/// Builds the factor tables from the per-mode linear symbols.
///
/// Fails when `e^{h l}` overflows for some growing mode, which means the
/// step is too large for the unstable linear part.
pub fn build_tables<T: Real>(symbols: &SymbolTable<T>, h: T) -> Result<EtdTables<T>> {
    if !(h > T::zero()) {
        return Err(Error::InvalidParameter {
            name: "h",
            reason: format!("step must be positive, got {h}"),
        });
    }
    Ok(EtdTables {
        qc: species_tables(&symbols.lin_qc, h)?,
        qr: species_tables(&symbols.lin_qr, h)?,
        h,
    })
}

fn species_tables<T: Real>(lin: &[T], h: T) -> Result<SpeciesTables<T>> {
    let mut t = SpeciesTables {
        e_z: Vec::with_capacity(lin.len()),
        h_phi1: Vec::with_capacity(lin.len()),
        h_phi12: Vec::with_capacity(lin.len()),
        h_phi2: Vec::with_capacity(lin.len()),
    };
    for (mode, &l) in lin.iter().enumerate() {
        let z = h * l;
        let e = z.exp();
        if !e.is_finite() {
            return Err(Error::StepTooLarge {
                mode,
                z: z.as_f64(),
            });
        }
        let p1 = phi1(z);
        let p2 = phi2(z);
        t.e_z.push(e);
        t.h_phi1.push(h * p1);
        t.h_phi12.push(h * (p1 + p2));
        t.h_phi2.push(h * p2);
    }
    Ok(t)
}

/// Spectral state advanced by the steppers.
#[derive(Debug, Clone)]
pub struct StepState<T> {
    pub spectrum: SpectrumPair<T>,
    /// Nonlinear spectrum of the previous step; present from step 1 on.
    pub prev_nonlinear: Option<SpectrumPair<T>>,
    pub step: u64,
    pub time: T,
}

impl<T: Real> StepState<T> {
    pub fn new(spectrum: SpectrumPair<T>) -> Self {
        Self {
            spectrum,
            prev_nonlinear: None,
            step: 0,
            time: T::zero(),
        }
    }
}

/// Owns everything one trajectory needs: plans, tables, model parameters and
/// the clamp counter.
pub struct Stepper<T: Real + FftNum> {
    params: CloudParams<T>,
    grid: GridSpec<T>,
    transform: SpectralTransform<T>,
    tables: EtdTables<T>,
    dealias_rule: DealiasRule,
    clamp_policy: ClampPolicy,
    clamp_count: u64,
}

impl<T: Real + FftNum> Stepper<T> {
    pub fn new(
        params: CloudParams<T>,
        grid: GridSpec<T>,
        symbols: &SymbolTable<T>,
        h: T,
        dealias_rule: DealiasRule,
        clamp_policy: ClampPolicy,
    ) -> Result<Self> {
        Ok(Self {
            params,
            grid,
            transform: SpectralTransform::new(&grid),
            tables: build_tables(symbols, h)?,
            dealias_rule,
            clamp_policy,
            clamp_count: 0,
        })
    }

    pub fn transform(&self) -> &SpectralTransform<T> {
        &self.transform
    }

    pub fn h(&self) -> T {
        self.tables.h
    }

    /// Samples clamped by the nonlinear evaluation so far.
    pub fn clamp_count(&self) -> u64 {
        self.clamp_count
    }

    /// Pseudo-spectral nonlinear term: inverse transform, pointwise
    /// evaluation, forward transform, dealias.
    fn nonlinear_spectrum(&mut self, s: &SpectrumPair<T>) -> Result<SpectrumPair<T>> {
        let fields = self.transform.inverse(s)?;
        let (nl, clamped) = nonlinear_term_with_policy(&self.params, &fields, self.clamp_policy)?;
        self.clamp_count += clamped;
        let mut n_hat = self.transform.forward(&nl)?;
        dealias(&mut n_hat, &self.grid, self.dealias_rule);
        Ok(n_hat)
    }

    /// Advances one step: ETD1 on the first step, ETD2 afterwards.
    pub fn step(&mut self, state: StepState<T>) -> Result<StepState<T>> {
        if state.prev_nonlinear.is_none() {
            self.etd1_step(state)
        } else {
            self.etd2_step(state)
        }
    }

    /// First-order exponential step.
    pub fn etd1_step(&mut self, state: StepState<T>) -> Result<StepState<T>> {
        let n_hat = self.nonlinear_spectrum(&state.spectrum)?;
        let mut spectrum = state.spectrum;
        for i in 0..spectrum.qc.len() {
            spectrum.qc[i] = etd1_update(
                spectrum.qc[i],
                n_hat.qc[i],
                self.tables.qc.e_z[i],
                self.tables.qc.h_phi1[i],
            );
            spectrum.qr[i] = etd1_update(
                spectrum.qr[i],
                n_hat.qr[i],
                self.tables.qr.e_z[i],
                self.tables.qr.h_phi1[i],
            );
        }
        self.finish(state.step, state.time, spectrum, n_hat)
    }

    /// Second-order two-step exponential step; needs the previous nonlinear
    /// spectrum.
    pub fn etd2_step(&mut self, state: StepState<T>) -> Result<StepState<T>> {
        let prev = state.prev_nonlinear.as_ref().ok_or(Error::MissingHistory)?;
        let n_hat = self.nonlinear_spectrum(&state.spectrum)?;
        let mut spectrum = state.spectrum.clone();
        for i in 0..spectrum.qc.len() {
            spectrum.qc[i] = etd2_update(
                spectrum.qc[i],
                n_hat.qc[i],
                prev.qc[i],
                self.tables.qc.e_z[i],
                self.tables.qc.h_phi12[i],
                self.tables.qc.h_phi2[i],
            );
            spectrum.qr[i] = etd2_update(
                spectrum.qr[i],
                n_hat.qr[i],
                prev.qr[i],
                self.tables.qr.e_z[i],
                self.tables.qr.h_phi12[i],
                self.tables.qr.h_phi2[i],
            );
        }
        self.finish(state.step, state.time, spectrum, n_hat)
    }

    fn finish(
        &self,
        step: u64,
        time: T,
        mut spectrum: SpectrumPair<T>,
        n_hat: SpectrumPair<T>,
    ) -> Result<StepState<T>> {
        symmetrize(&mut spectrum, &self.grid);
        let next_time = time + self.tables.h;
        for (i, z) in spectrum.qc.iter().chain(spectrum.qr.iter()).enumerate() {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::BlowUp {
                    time: next_time.as_f64(),
                    mode: i % self.grid.len(),
                });
            }
        }
        Ok(StepState {
            spectrum,
            prev_nonlinear: Some(n_hat),
            step: step + 1,
            time: next_time,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DiffusionParams;
    use crate::spectral::FieldPair;
    use crate::Dims;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn phi_values_at_zero_and_reference_points() {
        assert_relative_eq!(phi1(0.0), 1.0);
        assert_relative_eq!(phi2(0.0), 0.5);
        assert_relative_eq!(phi1(-10.0), 0.0999954600070238, max_relative = 1e-13);
        // phi2(-10) = (e^-10 - 1 + 10) / 100
        assert_relative_eq!(
            phi2(-10.0),
            ((-10.0f64).exp() - 1.0 + 10.0) / 100.0,
            max_relative = 1e-13
        );
    }

    #[test]
    fn phi_series_matches_direct_across_cutoff() {
        // Continuity across the series/direct boundary.
        for &z in &[0.9e-2, 1.1e-2, -0.9e-2, -1.1e-2] {
            let direct1 = (f64::exp_m1(z)) / z;
            let direct2 = (f64::exp_m1(z) - z) / (z * z);
            assert_relative_eq!(phi1(z), direct1, max_relative = 1e-11);
            assert_relative_eq!(phi2(z), direct2, max_relative = 1e-11);
        }
        // Tiny arguments keep full precision.
        let z = 1e-6;
        assert_relative_eq!(phi1(z), 1.0 + z / 2.0 + z * z / 6.0, max_relative = 1e-12);
        assert_relative_eq!(phi2(z), 0.5 + z / 6.0 + z * z / 24.0, max_relative = 1e-12);
    }

    #[test]
    fn etd2_form_matches_classical_coefficients() {
        let h = 0.37;
        for &l in &[-3.0, -0.4, 0.2, 1.5] {
            let z: f64 = h * l;
            let h_phi12 = h * (phi1(z) + phi2(z));
            let h_phi2 = h * phi2(z);
            let classical_a = ((1.0 + z) * z.exp() - 1.0 - 2.0 * z) / (l * l * h);
            let classical_b = (-z.exp() + 1.0 + z) / (l * l * h);
            assert_relative_eq!(h_phi12, classical_a, max_relative = 1e-11);
            assert_relative_eq!(-h_phi2, classical_b, max_relative = 1e-11);
        }
    }

    #[test]
    fn etd2_reduces_to_adams_bashforth_at_zero_symbol() {
        let h = 0.25f64;
        let z = 0.0;
        let h_phi12 = h * (phi1(z) + phi2(z));
        let h_phi2 = h * phi2(z);
        assert_relative_eq!(h_phi12, 1.5 * h);
        assert_relative_eq!(h_phi2, 0.5 * h);
    }

    #[test]
    fn etd1_pure_linear_decay() {
        let u = Complex::new(1.0f64, 0.0);
        let z: f64 = -0.1;
        let got = etd1_update(u, Complex::new(0.0, 0.0), z.exp(), 0.1 * phi1(z));
        assert_relative_eq!(got.re, 0.90483741803596, max_relative = 1e-13);
    }

    #[test]
    fn etd1_forward_euler_limit() {
        // l = 0, constant N: u+ = u + h n0.
        let got = etd1_update(
            Complex::new(2.0f64, 0.0),
            Complex::new(3.0, 0.0),
            1.0,
            0.05 * phi1(0.0),
        );
        assert_relative_eq!(got.re, 2.0 + 0.05 * 3.0);
    }

    #[test]
    fn etd1_exact_for_constant_nonlinearity() {
        // u' = -u + 1, u0 = 0: one step gives exactly 1 - e^{-h} because N
        // is constant along the step.
        let h = 0.3f64;
        let z = -h;
        let got = etd1_update(
            Complex::new(0.0, 0.0),
            Complex::new(1.0, 0.0),
            z.exp(),
            h * phi1(z),
        );
        assert_relative_eq!(got.re, 1.0 - (-h).exp(), max_relative = 1e-13);
    }

    #[test]
    fn build_tables_overflow_guard() {
        let grid = GridSpec::new(Dims::One, 8, 1.0).unwrap();
        let symbols = SymbolTable::new(&grid, 10.0, 1e-9, 1e-9);
        assert!(matches!(
            build_tables(&symbols, 100.0),
            Err(Error::StepTooLarge { .. })
        ));
    }

    fn scalar_run(order2: bool, h: f64, t_end: f64, lambda: f64) -> f64 {
        // u' = lambda u + cos(t), u(0) = 1, via the same update kernels.
        let z = h * lambda;
        let e_z = z.exp();
        let h_phi1 = h * phi1(z);
        let h_phi12 = h * (phi1(z) + phi2(z));
        let h_phi2 = h * phi2(z);
        let steps = (t_end / h).round() as u64;
        let mut u = Complex::new(1.0f64, 0.0);
        let mut n_prev = Complex::new(1.0, 0.0); // cos(0)
        for i in 0..steps {
            let t = i as f64 * h;
            let n_cur = Complex::new(t.cos(), 0.0);
            u = if order2 && i > 0 {
                etd2_update(u, n_cur, n_prev, e_z, h_phi12, h_phi2)
            } else {
                etd1_update(u, n_cur, e_z, h_phi1)
            };
            n_prev = n_cur;
        }
        u.re
    }

    #[test]
    fn observed_orders_on_scalar_problem() {
        let lambda = -2.0;
        let exact = |t: f64| {
            // Closed form as a cross-check on the fine-step reference.
            let part = (lambda * lambda / (1.0 + lambda * lambda)) * ((-t / lambda).cos() * 0.0);
            let _ = part;
            let a = -lambda / (1.0 + lambda * lambda);
            let b = 1.0 / (1.0 + lambda * lambda);
            let c = 1.0 - a;
            c * (lambda * t).exp() + a * t.cos() + b * t.sin()
        };
        let reference = scalar_run(true, 1e-5, 1.0, lambda);
        assert_abs_diff_eq!(reference, exact(1.0), epsilon = 1e-8);

        let mut orders = Vec::new();
        for order2 in [false, true] {
            let errs: Vec<f64> = [0.1, 0.05, 0.025]
                .iter()
                .map(|&h| (scalar_run(order2, h, 1.0, lambda) - reference).abs())
                .collect();
            let o1 = (errs[0] / errs[1]).log2();
            let o2 = (errs[1] / errs[2]).log2();
            orders.push(0.5 * (o1 + o2));
        }
        assert!(
            (orders[0] - 1.0).abs() <= 0.2,
            "ETD1 observed order {}",
            orders[0]
        );
        assert!(
            (orders[1] - 2.0).abs() <= 0.2,
            "ETD2 observed order {}",
            orders[1]
        );
    }

    #[test]
    fn steppers_are_exact_for_pure_linear_flow() {
        // N = 0 (all reaction prefactors ~ 0 won't give exactly zero, so use
        // a manual spectrum with the stepper's tables instead).
        let grid = GridSpec::new(Dims::One, 8, 50.0).unwrap();
        let diff = DiffusionParams::new(2.0, 0.5).unwrap();
        let symbols = SymbolTable::new(&grid, 0.7, diff.d1, diff.d2);
        for &h in &[0.05, 0.5, 2.0] {
            let tables = build_tables(&symbols, h).unwrap();
            for i in 0..grid.len() {
                let u = Complex::new(1.3f64, -0.2);
                let got = etd1_update(
                    u,
                    Complex::new(0.0, 0.0),
                    tables.qc.e_z[i],
                    tables.qc.h_phi1[i],
                );
                let exact = u * (h * symbols.lin_qc[i]).exp();
                assert_relative_eq!(got.re, exact.re, max_relative = 1e-12);
                let got2 = etd2_update(
                    u,
                    Complex::new(0.0, 0.0),
                    Complex::new(0.0, 0.0),
                    tables.qc.e_z[i],
                    tables.qc.h_phi12[i],
                    tables.qc.h_phi2[i],
                );
                assert_relative_eq!(got2.re, exact.re, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn etd2_requires_history() {
        let params = CloudParams::new(5.0, 1.0, 1.0, 1.0, 2.0, 2.0, 1.0, 0.1, 0.0).unwrap();
        let grid = GridSpec::new(Dims::One, 8, 50.0).unwrap();
        let symbols = SymbolTable::new(&grid, params.c, 1000.0, 0.1);
        let mut stepper = Stepper::new(
            params,
            grid,
            &symbols,
            0.01,
            DealiasRule::None,
            ClampPolicy::Clamp,
        )
        .unwrap();
        let f = FieldPair::constant(&grid, 0.1, 5.0);
        let state = StepState::new(stepper.transform().forward(&f).unwrap());
        assert!(matches!(
            stepper.etd2_step(state),
            Err(Error::MissingHistory)
        ));
    }
}
