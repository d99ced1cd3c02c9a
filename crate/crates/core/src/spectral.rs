//! Periodic grids, Fourier transforms, Laplacian symbol tables and pointwise
//! nonlinear evaluation for the pseudo-spectral method.
//!
//! Spectra use the full complex layout (one coefficient per grid sample,
//! signed mode `m(i) = i` for `i <= n/2`, else `i - n`). Fields are real, so
//! valid spectra are conjugate-symmetric; [`symmetrize`] projects onto that
//! subspace exactly. Convention: the forward transform is unnormalized, the
//! inverse carries `1/n` per dimension.

use crate::error::{Error, Result};
use crate::model::CloudParams;
use crate::scalar::{integer_exponent, Real};
use crate::Dims;
use num_complex::Complex;
use rustfft::{Fft, FftNum, FftPlanner};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Periodic grid: `n` points per dimension (power of two), edge length
/// `length`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec<T> {
    pub dims: Dims,
    pub n: usize,
    pub length: T,
}

impl<T: Real> GridSpec<T> {
    pub fn new(dims: Dims, n: usize, length: T) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidParameter {
                name: "n",
                reason: format!("grid points per dimension must be a power of two >= 8, got {n}"),
            });
        }
        if !(length > T::zero()) || !length.is_finite() {
            return Err(Error::InvalidParameter {
                name: "length",
                reason: format!("must be positive and finite, got {length}"),
            });
        }
        Ok(Self { dims, n, length })
    }

    /// Total number of samples.
    pub fn len(&self) -> usize {
        match self.dims {
            Dims::One => self.n,
            Dims::Two => self.n * self.n,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid spacing.
    pub fn dx(&self) -> T {
        self.length / T::from_usize(self.n).unwrap()
    }

    /// Signed mode index for array position `i` along one axis.
    pub fn signed_mode(&self, i: usize) -> i64 {
        if i <= self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Squared wavenumber `(2 pi / L)^2 (m1^2 + m2^2)` at a flat spectrum
    /// index.
    pub fn k_squared(&self, idx: usize) -> T {
        let unit = T::of(2.0 * std::f64::consts::PI) / self.length;
        let m2: i64 = match self.dims {
            Dims::One => {
                let m = self.signed_mode(idx);
                m * m
            }
            Dims::Two => {
                let (r, c) = (idx / self.n, idx % self.n);
                let mr = self.signed_mode(r);
                let mc = self.signed_mode(c);
                mr * mr + mc * mc
            }
        };
        unit * unit * T::from_i64(m2).unwrap()
    }
}

/// Real-valued cloud and rain fields on a grid, row-major in 2D.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldPair<T> {
    pub qc: Vec<T>,
    pub qr: Vec<T>,
}

impl<T: Real> FieldPair<T> {
    pub fn constant(grid: &GridSpec<T>, qc: T, qr: T) -> Self {
        Self {
            qc: vec![qc; grid.len()],
            qr: vec![qr; grid.len()],
        }
    }
}

/// Complex Fourier coefficients of a [`FieldPair`], same layout and length.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumPair<T> {
    pub qc: Vec<Complex<T>>,
    pub qr: Vec<Complex<T>>,
}

/// Per-mode diagonal symbols: the Laplacian and the linear part of each
/// species (`c - D1 q^2` for cloud water, `-D2 q^2` for rain water).
#[derive(Debug, Clone)]
pub struct SymbolTable<T> {
    pub lap: Vec<T>,
    pub lin_qc: Vec<T>,
    pub lin_qr: Vec<T>,
}

impl<T: Real> SymbolTable<T> {
    pub fn new(grid: &GridSpec<T>, c: T, d1: T, d2: T) -> Self {
        let lap = laplacian_symbol(grid);
        let lin_qc = lap.iter().map(|&l| c + d1 * l).collect();
        let lin_qr = lap.iter().map(|&l| d2 * l).collect();
        Self {
            lap,
            lin_qc,
            lin_qr,
        }
    }
}

/// Per-mode Laplacian symbol `-(k1^2 + ... + kd^2)`; zero only at the zero
/// mode.
pub fn laplacian_symbol<T: Real>(grid: &GridSpec<T>) -> Vec<T> {
    (0..grid.len()).map(|i| -grid.k_squared(i)).collect()
}

/// FFT plans for one grid. Plans are immutable and shareable across threads.
pub struct SpectralTransform<T: FftNum> {
    grid: GridSpec<T>,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
}

impl<T: Real + FftNum> SpectralTransform<T> {
    pub fn new(grid: &GridSpec<T>) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            grid: *grid,
            fwd: planner.plan_fft_forward(grid.n),
            inv: planner.plan_fft_inverse(grid.n),
        }
    }

    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got != self.grid.len() {
            return Err(Error::ShapeMismatch {
                got,
                expected: self.grid.len(),
            });
        }
        Ok(())
    }

    /// Unnormalized forward transform of both species.
    pub fn forward(&self, f: &FieldPair<T>) -> Result<SpectrumPair<T>> {
        self.check_len(f.qc.len())?;
        self.check_len(f.qr.len())?;
        Ok(SpectrumPair {
            qc: self.forward_one(&f.qc),
            qr: self.forward_one(&f.qr),
        })
    }

    /// Normalized inverse transform; enforces real output.
    pub fn inverse(&self, s: &SpectrumPair<T>) -> Result<FieldPair<T>> {
        Ok(self.inverse_with_residual(s)?.0)
    }

    /// Inverse transform plus the largest imaginary residue encountered
    /// (nonzero input asymmetry shows up here).
    pub fn inverse_with_residual(&self, s: &SpectrumPair<T>) -> Result<(FieldPair<T>, T)> {
        self.check_len(s.qc.len())?;
        self.check_len(s.qr.len())?;
        let (qc, r1) = self.inverse_one(&s.qc);
        let (qr, r2) = self.inverse_one(&s.qr);
        Ok((FieldPair { qc, qr }, r1.max(r2)))
    }

    fn forward_one(&self, field: &[T]) -> Vec<Complex<T>> {
        let mut buf: Vec<Complex<T>> = field.iter().map(|&x| Complex::new(x, T::zero())).collect();
        self.transform_all(&mut buf, &self.fwd);
        buf
    }

    fn inverse_one(&self, spec: &[Complex<T>]) -> (Vec<T>, T) {
        let mut buf = spec.to_vec();
        self.transform_all(&mut buf, &self.inv);
        let scale = T::one() / T::from_usize(self.grid.len()).unwrap();
        let mut max_imag = T::zero();
        let out = buf
            .iter()
            .map(|z| {
                max_imag = max_imag.max(z.im.abs() * scale);
                z.re * scale
            })
            .collect();
        (out, max_imag)
    }

    /// Runs the planned 1D FFT over the buffer; in 2D over rows, then over
    /// columns via transposes.
    fn transform_all(&self, buf: &mut [Complex<T>], plan: &Arc<dyn Fft<T>>) {
        let n = self.grid.n;
        let mut scratch = vec![Complex::new(T::zero(), T::zero()); plan.get_inplace_scratch_len()];
        match self.grid.dims {
            Dims::One => plan.process_with_scratch(buf, &mut scratch),
            Dims::Two => {
                plan.process_with_scratch(buf, &mut scratch);
                transpose_square(buf, n);
                plan.process_with_scratch(buf, &mut scratch);
                transpose_square(buf, n);
            }
        }
    }
}

fn transpose_square<T: Copy>(buf: &mut [T], n: usize) {
    for r in 0..n {
        for c in (r + 1)..n {
            buf.swap(r * n + c, c * n + r);
        }
    }
}

/// Flat index of the conjugate partner `-k` of the mode at `idx`.
fn mirror_index(grid_n: usize, dims: Dims, idx: usize) -> usize {
    match dims {
        Dims::One => (grid_n - idx) % grid_n,
        Dims::Two => {
            let (r, c) = (idx / grid_n, idx % grid_n);
            ((grid_n - r) % grid_n) * grid_n + (grid_n - c) % grid_n
        }
    }
}

/// Projects a spectrum onto the conjugate-symmetric subspace, the exact
/// invariant of transforms of real fields. On valid spectra this is the
/// identity; in a time loop it removes the asymmetric roundoff component,
/// which otherwise grows unchecked under modes with positive linear symbol
/// (it is invisible to the real-valued nonlinear feedback).
pub fn symmetrize<T: Real>(s: &mut SpectrumPair<T>, grid: &GridSpec<T>) {
    symmetrize_one(&mut s.qc, grid);
    symmetrize_one(&mut s.qr, grid);
}

fn symmetrize_one<T: Real>(spec: &mut [Complex<T>], grid: &GridSpec<T>) {
    let half = T::of(0.5);
    for idx in 0..spec.len() {
        let m = mirror_index(grid.n, grid.dims, idx);
        if idx < m {
            let a = spec[idx];
            let b = spec[m];
            let sym = Complex::new((a.re + b.re) * half, (a.im - b.im) * half);
            spec[idx] = sym;
            spec[m] = sym.conj();
        } else if idx == m {
            spec[idx] = Complex::new(spec[idx].re, T::zero());
        }
    }
}

/// How negative samples are treated under fractional exponents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClampPolicy {
    /// Clamp at zero before the power (integer exponents never clamp).
    Clamp,
    /// Refuse: a negative sample under a fractional exponent is an error.
    Error,
}

/// How the spectrum is truncated after nonlinear products.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DealiasRule {
    None,
    /// Zero every coefficient with any `|m_i| > n/3`.
    TwoThirds,
}

enum PowKind<T> {
    Int(i32),
    Frac(T),
}

impl<T: Real> PowKind<T> {
    fn of(e: T) -> Self {
        match integer_exponent(e) {
            Some(k) => PowKind::Int(k),
            None => PowKind::Frac(e),
        }
    }

    /// Returns the power and whether the sample was clamped.
    fn eval(&self, x: T, policy: ClampPolicy) -> Result<(T, bool)> {
        match self {
            PowKind::Int(k) => Ok((x.powi(*k), false)),
            PowKind::Frac(e) => {
                if x >= T::zero() {
                    Ok((x.powf(*e), false))
                } else {
                    match policy {
                        ClampPolicy::Clamp => Ok((T::zero(), true)),
                        ClampPolicy::Error => Err(Error::NegativePower {
                            base: x.as_f64(),
                            exponent: e.as_f64(),
                        }),
                    }
                }
            }
        }
    }
}

/// Pointwise nonlinear remainder of the reaction terms: everything except
/// the condensation term `c qc`, which lives in the linear operator. The
/// rain influx `B` sits in the rain component.
pub fn nonlinear_term<T: Real>(p: &CloudParams<T>, f: &FieldPair<T>) -> Result<FieldPair<T>> {
    nonlinear_term_with_policy(p, f, ClampPolicy::Clamp).map(|(f, _)| f)
}

/// As [`nonlinear_term`], returning the number of clamped samples.
pub fn nonlinear_term_with_policy<T: Real>(
    p: &CloudParams<T>,
    f: &FieldPair<T>,
    policy: ClampPolicy,
) -> Result<(FieldPair<T>, u64)> {
    if f.qc.len() != f.qr.len() {
        return Err(Error::ShapeMismatch {
            got: f.qc.len(),
            expected: f.qr.len(),
        });
    }
    let gamma = PowKind::of(p.gamma);
    let beta_c = PowKind::of(p.beta_c);
    let beta_r = PowKind::of(p.beta_r);
    let zeta = PowKind::of(p.zeta);
    let mut out = FieldPair {
        qc: Vec::with_capacity(f.qc.len()),
        qr: Vec::with_capacity(f.qr.len()),
    };
    let mut clamped = 0u64;
    for (&qc, &qr) in f.qc.iter().zip(&f.qr) {
        let (qc_g, c1) = gamma.eval(qc, policy)?;
        let (qc_b, c2) = beta_c.eval(qc, policy)?;
        let (qr_b, c3) = beta_r.eval(qr, policy)?;
        let (qr_z, c4) = zeta.eval(qr, policy)?;
        clamped += [c1, c2, c3, c4].iter().filter(|&&c| c).count() as u64;
        let auto = p.a1 * qc_g;
        let accr = p.a2 * qc_b * qr_b;
        out.qc.push(-auto - accr);
        out.qr.push(auto + accr + p.b - p.d * qr_z);
    }
    Ok((out, clamped))
}

/// Truncates a spectrum in place according to `rule`.
pub fn dealias<T: Real>(s: &mut SpectrumPair<T>, grid: &GridSpec<T>, rule: DealiasRule) {
    if rule == DealiasRule::None {
        return;
    }
    let n = grid.n as i64;
    let keep = |m: i64| 3 * m.abs() <= n;
    let zero = Complex::new(T::zero(), T::zero());
    for idx in 0..grid.len() {
        let keep_idx = match grid.dims {
            Dims::One => keep(grid.signed_mode(idx)),
            Dims::Two => {
                keep(grid.signed_mode(idx / grid.n)) && keep(grid.signed_mode(idx % grid.n))
            }
        };
        if !keep_idx {
            s.qc[idx] = zero;
            s.qr[idx] = zero;
        }
    }
}
