//! Experiment driver: seeded initial conditions, trajectory integration,
//! summary diagnostics and the rain-flux sweep.

use crate::error::{Error, Result};
use crate::integrator::{StepState, Stepper};
use crate::model::{nontrivial_equilibrium, CloudParams, DiffusionParams, Equilibrium};
use crate::scalar::Real;
use crate::spectral::{
    dealias, symmetrize, ClampPolicy, DealiasRule, FieldPair, GridSpec, SpectrumPair, SymbolTable,
};
use crate::stability::ModeSet;
use crate::Dims;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Name of the noise generator, recorded in run metadata for
/// reproducibility.
pub const RNG_DESCRIPTION: &str = "ChaCha8 (rand_chacha 0.3) + rand_distr Normal (ziggurat)";

/// Everything a single run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig<T> {
    pub params: CloudParams<T>,
    pub diff: DiffusionParams<T>,
    pub grid: GridSpec<T>,
    /// Time step.
    pub h: T,
    pub t_end: T,
    /// Times at which full fields are kept; the final time is always added.
    pub snapshot_times: Vec<T>,
    /// Standard deviation of the initial Gaussian perturbation.
    pub noise_amplitude: T,
    pub seed: u64,
    pub dealias: DealiasRule,
    pub clamp: ClampPolicy,
    /// Cadence (in time units) of the summary series.
    pub summary_every: T,
}

impl<T: Real> SimConfig<T> {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.h > T::zero()) || !self.h.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "h must be positive, got {}",
                self.h
            )));
        }
        if !(self.t_end > T::zero()) || !self.t_end.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "t_end must be positive, got {}",
                self.t_end
            )));
        }
        if !(self.noise_amplitude >= T::zero()) {
            return Err(Error::InvalidConfig(
                "noise amplitude must be nonnegative".into(),
            ));
        }
        if !(self.summary_every > T::zero()) {
            return Err(Error::InvalidConfig(
                "summary_every must be positive".into(),
            ));
        }
        let mut prev = T::neg_infinity();
        for &t in &self.snapshot_times {
            if !(t >= T::zero()) || t > self.t_end {
                return Err(Error::InvalidConfig(format!(
                    "snapshot time {t} outside [0, t_end]"
                )));
            }
            if t <= prev {
                return Err(Error::InvalidConfig(
                    "snapshot times must be strictly increasing".into(),
                ));
            }
            prev = t;
        }
        Ok(())
    }

    fn steps(&self) -> u64 {
        (self.t_end / self.h).round().to_u64().unwrap_or(0).max(1)
    }
}

/// Dominant Fourier mode label, up to conjugation/reflection symmetry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModeIndex {
    One(u32),
    Two(u32, u32),
}

impl ModeIndex {
    /// Membership in an analytically computed unstable mode set.
    pub fn in_set(&self, set: &ModeSet) -> bool {
        match (self, set) {
            (ModeIndex::One(n), ModeSet::One(v)) => v.contains(n),
            (ModeIndex::Two(n1, n2), ModeSet::Two(v)) => v.contains(&(*n1, *n2)),
            _ => false,
        }
    }
}

/// Per-species spatial and spectral statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeciesSummary<T> {
    pub min: T,
    pub max: T,
    pub mean: T,
    pub variance: T,
    pub dominant_mode: ModeIndex,
    /// Physical amplitude `2 |c_m| / N` of the dominant nonzero mode.
    pub dominant_amplitude: T,
    /// Median amplitude over all nonzero modes (up to symmetry).
    pub median_amplitude: T,
}

/// Summary of both species at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairSummary<T> {
    pub time: T,
    pub qc: SpeciesSummary<T>,
    pub qr: SpeciesSummary<T>,
}

/// A kept state: requested time, exact step time, fields and summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot<T> {
    pub time: T,
    pub actual_time: T,
    pub fields: FieldPair<T>,
    pub summary: PairSummary<T>,
}

/// Reproducibility record of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata<T> {
    pub dims: Dims,
    pub n: usize,
    pub length: T,
    pub h: T,
    pub t_end: T,
    pub steps: u64,
    pub seed: u64,
    pub noise_amplitude: T,
    pub dealias: DealiasRule,
    pub clamp: ClampPolicy,
    pub clamp_count: u64,
    pub rng: String,
    pub equilibrium: Equilibrium<T>,
    /// Set when the run ended in a blow-up; partial outputs are kept.
    pub blow_up: Option<(f64, usize)>,
}

/// All artifacts of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult<T> {
    pub snapshots: Vec<Snapshot<T>>,
    pub series: Vec<PairSummary<T>>,
    pub equilibrium: Equilibrium<T>,
    pub metadata: RunMetadata<T>,
}

/// Equilibrium plus seeded Gaussian noise, clamped at zero.
pub fn initial_condition<T>(cfg: &SimConfig<T>) -> Result<FieldPair<T>>
where
    T: Real,
    StandardNormal: Distribution<T>,
{
    let eq = nontrivial_equilibrium(&cfg.params)?;
    initial_condition_around(cfg, &eq)
}

fn initial_condition_around<T>(cfg: &SimConfig<T>, eq: &Equilibrium<T>) -> Result<FieldPair<T>>
where
    T: Real,
    StandardNormal: Distribution<T>,
{
    let len = cfg.grid.len();
    if cfg.noise_amplitude == T::zero() {
        return Ok(FieldPair::constant(&cfg.grid, eq.state.qc, eq.state.qr));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let normal = Normal::new(T::zero(), cfg.noise_amplitude)
        .map_err(|e| Error::InvalidConfig(format!("noise amplitude: {e}")))?;
    let mut sample = |base: T| -> Vec<T> {
        (0..len)
            .map(|_| (base + normal.sample(&mut rng)).max(T::zero()))
            .collect()
    };
    let qc = sample(eq.state.qc);
    let qr = sample(eq.state.qr);
    Ok(FieldPair { qc, qr })
}

fn summarize_species<T: Real>(
    field: &[T],
    spectrum: &[num_complex::Complex<T>],
    grid: &GridSpec<T>,
) -> SpeciesSummary<T> {
    let len = T::from_usize(field.len()).unwrap();
    let mut min = T::infinity();
    let mut max = T::neg_infinity();
    let mut sum = T::zero();
    for &x in field {
        min = min.min(x);
        max = max.max(x);
        sum += x;
    }
    let mean = sum / len;
    let mut var = T::zero();
    for &x in field {
        let d = x - mean;
        var += d * d;
    }
    var = var / len;

    // Unique nonzero modes: one representative per conjugate pair.
    let norm = T::of(2.0) / len;
    let mut amps: Vec<(T, ModeIndex)> = Vec::new();
    match grid.dims {
        Dims::One => {
            for m in 1..=grid.n / 2 {
                amps.push((spectrum[m].norm() * norm, ModeIndex::One(m as u32)));
            }
        }
        Dims::Two => {
            for idx in 1..grid.len() {
                let (r, c) = (idx / grid.n, idx % grid.n);
                let mirror = ((grid.n - r) % grid.n) * grid.n + (grid.n - c) % grid.n;
                if idx > mirror {
                    continue;
                }
                let mr = grid.signed_mode(r).unsigned_abs() as u32;
                let mc = grid.signed_mode(c).unsigned_abs() as u32;
                let (lo, hi) = if mr <= mc { (mr, mc) } else { (mc, mr) };
                amps.push((spectrum[idx].norm() * norm, ModeIndex::Two(lo, hi)));
            }
        }
    }
    let mut dominant = (T::zero(), ModeIndex::One(0));
    for &(a, m) in &amps {
        if a > dominant.0 {
            dominant = (a, m);
        }
    }
    let mut mags: Vec<T> = amps.iter().map(|&(a, _)| a).collect();
    mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = if mags.is_empty() {
        T::zero()
    } else {
        mags[mags.len() / 2]
    };

    SpeciesSummary {
        min,
        max,
        mean,
        variance: var,
        dominant_mode: dominant.1,
        dominant_amplitude: dominant.0,
        median_amplitude: median,
    }
}

/// Statistics of both species at one time, from fields and their spectra.
pub fn summarize<T: Real>(
    fields: &FieldPair<T>,
    spectrum: &SpectrumPair<T>,
    grid: &GridSpec<T>,
    time: T,
) -> PairSummary<T> {
    PairSummary {
        time,
        qc: summarize_species(&fields.qc, &spectrum.qc, grid),
        qr: summarize_species(&fields.qr, &spectrum.qr, grid),
    }
}

/// Outcome of a run that may have ended early: partial artifacts plus the
/// error that stopped it.
pub struct RunOutcome<T> {
    pub result: RunResult<T>,
    pub error: Option<Error>,
}

/// Integrates the configured trajectory; fails on the first non-finite
/// state.
pub fn run<T>(cfg: &SimConfig<T>) -> Result<RunResult<T>>
where
    T: Real + rustfft::FftNum,
    StandardNormal: Distribution<T>,
{
    let outcome = run_with_partials(cfg);
    match outcome.error {
        Some(e) => Err(e),
        None => Ok(outcome.result),
    }
}

/// As [`run`], but on blow-up the snapshots and series collected so far are
/// returned alongside the error.
pub fn run_with_partials<T>(cfg: &SimConfig<T>) -> RunOutcome<T>
where
    T: Real + rustfft::FftNum,
    StandardNormal: Distribution<T>,
{
    match run_inner(cfg) {
        Ok(r) => RunOutcome {
            result: r,
            error: None,
        },
        Err(RunStop::Setup(e)) => RunOutcome {
            result: RunResult {
                snapshots: Vec::new(),
                series: Vec::new(),
                equilibrium: Equilibrium {
                    state: crate::model::State::new(T::zero(), T::zero()),
                    branch: crate::model::Branch::Trivial,
                    admissible: false,
                    residual: T::infinity(),
                },
                metadata: empty_metadata(cfg),
            },
            error: Some(e),
        },
        Err(RunStop::Mid { partial, error }) => RunOutcome {
            result: *partial,
            error: Some(error),
        },
    }
}

enum RunStop<T> {
    Setup(Error),
    Mid {
        partial: Box<RunResult<T>>,
        error: Error,
    },
}

fn empty_metadata<T: Real>(cfg: &SimConfig<T>) -> RunMetadata<T> {
    RunMetadata {
        dims: cfg.grid.dims,
        n: cfg.grid.n,
        length: cfg.grid.length,
        h: cfg.h,
        t_end: cfg.t_end,
        steps: 0,
        seed: cfg.seed,
        noise_amplitude: cfg.noise_amplitude,
        dealias: cfg.dealias,
        clamp: cfg.clamp,
        clamp_count: 0,
        rng: RNG_DESCRIPTION.into(),
        equilibrium: Equilibrium {
            state: crate::model::State::new(T::zero(), T::zero()),
            branch: crate::model::Branch::Trivial,
            admissible: false,
            residual: T::infinity(),
        },
        blow_up: None,
    }
}

fn run_inner<T>(cfg: &SimConfig<T>) -> std::result::Result<RunResult<T>, RunStop<T>>
where
    T: Real + rustfft::FftNum,
    StandardNormal: Distribution<T>,
{
    cfg.validate().map_err(RunStop::Setup)?;
    let eq = nontrivial_equilibrium(&cfg.params).map_err(RunStop::Setup)?;
    let ic = initial_condition_around(cfg, &eq).map_err(RunStop::Setup)?;

    let symbols = SymbolTable::new(&cfg.grid, cfg.params.c, cfg.diff.d1, cfg.diff.d2);
    let mut stepper = Stepper::new(
        cfg.params,
        cfg.grid,
        &symbols,
        cfg.h,
        cfg.dealias,
        cfg.clamp,
    )
    .map_err(RunStop::Setup)?;

    let steps = cfg.steps();
    let stride = (cfg.summary_every / cfg.h)
        .round()
        .to_u64()
        .unwrap_or(1)
        .max(1);

    // Map step index -> nominal snapshot time; the final step is always kept.
    let mut snap_steps: BTreeMap<u64, T> = BTreeMap::new();
    for &t in &cfg.snapshot_times {
        let s = (t / cfg.h).round().to_u64().unwrap_or(0).min(steps);
        snap_steps.entry(s).or_insert(t);
    }
    snap_steps.entry(steps).or_insert(cfg.t_end);

    let mut spectrum = stepper.transform().forward(&ic).map_err(RunStop::Setup)?;
    symmetrize(&mut spectrum, &cfg.grid);
    dealias(&mut spectrum, &cfg.grid, cfg.dealias);
    let mut state = StepState::new(spectrum);

    let mut snapshots = Vec::with_capacity(snap_steps.len());
    let mut series = Vec::new();
    let mut stop: Option<Error> = None;

    for i in 0..=steps {
        let want_summary = i % stride == 0 || i == steps;
        let want_snap = snap_steps.contains_key(&i);
        if want_summary || want_snap {
            match stepper.transform().inverse(&state.spectrum) {
                Ok(fields) => {
                    let summary = summarize(&fields, &state.spectrum, &cfg.grid, state.time);
                    if want_summary {
                        series.push(summary);
                    }
                    if want_snap {
                        snapshots.push(Snapshot {
                            time: snap_steps[&i],
                            actual_time: state.time,
                            fields,
                            summary,
                        });
                    }
                }
                Err(e) => {
                    stop = Some(e);
                    break;
                }
            }
        }
        if i == steps {
            break;
        }
        match stepper.step(state) {
            Ok(next) => state = next,
            Err(e) => {
                stop = Some(e);
                break;
            }
        }
    }

    let blow_up = stop.as_ref().and_then(|e| match e {
        Error::BlowUp { time, mode } => Some((*time, *mode)),
        _ => None,
    });
    let metadata = RunMetadata {
        dims: cfg.grid.dims,
        n: cfg.grid.n,
        length: cfg.grid.length,
        h: cfg.h,
        t_end: cfg.t_end,
        steps,
        seed: cfg.seed,
        noise_amplitude: cfg.noise_amplitude,
        dealias: cfg.dealias,
        clamp: cfg.clamp,
        clamp_count: stepper.clamp_count(),
        rng: RNG_DESCRIPTION.into(),
        equilibrium: eq,
        blow_up,
    };
    let result = RunResult {
        snapshots,
        series,
        equilibrium: eq,
        metadata,
    };
    match stop {
        None => Ok(result),
        Some(error) => Err(RunStop::Mid {
            partial: Box::new(result),
            error,
        }),
    }
}

/// Default detector thresholds: the rain field's spatial standard deviation
/// must exceed `10x` the initial noise amplitude and the dominant nonzero
/// mode must exceed `100x` the median nonzero-mode amplitude.
pub const DETECTOR_STD_FACTOR: f64 = 10.0;
pub const DETECTOR_DOMINANCE_FACTOR: f64 = 100.0;

/// True when a snapshot shows a developed spatial pattern.
pub fn pattern_detector<T: Real>(snap: &Snapshot<T>, noise_amplitude: T) -> bool {
    pattern_detector_with(
        snap,
        noise_amplitude,
        T::of(DETECTOR_STD_FACTOR),
        T::of(DETECTOR_DOMINANCE_FACTOR),
    )
}

/// Detector with explicit thresholds.
pub fn pattern_detector_with<T: Real>(
    snap: &Snapshot<T>,
    noise_amplitude: T,
    std_factor: T,
    dominance_factor: T,
) -> bool {
    let s = &snap.summary.qr;
    let std = s.variance.sqrt();
    std > std_factor * noise_amplitude
        && s.dominant_amplitude > dominance_factor * s.median_amplitude
}

/// One rain-flux value of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry<T> {
    pub b: T,
    pub patterned: Option<bool>,
    pub final_summary: Option<PairSummary<T>>,
    pub error: Option<String>,
}

/// Sweep outcome: per-entry results and the empirical transition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult<T> {
    pub entries: Vec<SweepEntry<T>>,
    /// Midpoint of the single patterned -> homogeneous transition, when
    /// exactly one exists.
    pub transition: Option<T>,
    pub transition_count: usize,
}

/// Runs the base configuration at each rain-flux value (ascending, same
/// seed). Per-entry failures are recorded without aborting the sweep.
pub fn sweep_b<T>(base: &SimConfig<T>, b_values: &[T]) -> Result<SweepResult<T>>
where
    T: Real + rustfft::FftNum,
    StandardNormal: Distribution<T>,
{
    if b_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig(
            "sweep values must be strictly ascending".into(),
        ));
    }
    let entries: Vec<SweepEntry<T>> = b_values
        .par_iter()
        .map(|&b| {
            let mut cfg = base.clone();
            cfg.params.b = b;
            match run(&cfg) {
                Ok(res) => {
                    let last = res.snapshots.last().expect("final snapshot always present");
                    SweepEntry {
                        b,
                        patterned: Some(pattern_detector(last, cfg.noise_amplitude)),
                        final_summary: Some(last.summary),
                        error: None,
                    }
                }
                Err(e) => SweepEntry {
                    b,
                    patterned: None,
                    final_summary: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    let flags: Vec<(T, bool)> = entries
        .iter()
        .filter_map(|e| e.patterned.map(|p| (e.b, p)))
        .collect();
    let mut transitions = Vec::new();
    for w in flags.windows(2) {
        if w[0].1 && !w[1].1 {
            transitions.push((w[0].0 + w[1].0) * T::of(0.5));
        }
    }
    Ok(SweepResult {
        transition: if transitions.len() == 1 {
            Some(transitions[0])
        } else {
            None
        },
        transition_count: transitions.len(),
        entries,
    })
}

/// Growth diagnostics over a summary series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport<T> {
    pub times: Vec<T>,
    pub variance_qc: Vec<T>,
    pub variance_qr: Vec<T>,
    pub dominant_qc: Vec<ModeIndex>,
    pub dominant_qr: Vec<ModeIndex>,
    /// First time the rain variance reaches `100x` its initial value.
    pub onset_time: Option<T>,
    /// Rain variance varies by less than 1% over the last tenth of the run.
    pub stationary: bool,
}

/// Derives the growth report from a summary series (at least two points).
pub fn diagnostics_series<T: Real>(series: &[PairSummary<T>]) -> Result<GrowthReport<T>> {
    if series.len() < 2 {
        return Err(Error::InvalidConfig(
            "diagnostics need at least two summaries".into(),
        ));
    }
    let times: Vec<T> = series.iter().map(|s| s.time).collect();
    let variance_qc: Vec<T> = series.iter().map(|s| s.qc.variance).collect();
    let variance_qr: Vec<T> = series.iter().map(|s| s.qr.variance).collect();

    let var0 = variance_qr[0];
    let onset_time = if var0 > T::zero() {
        series
            .iter()
            .find(|s| s.qr.variance >= T::of(100.0) * var0)
            .map(|s| s.time)
    } else {
        None
    };

    let t_end = *times.last().unwrap();
    let cut = T::of(0.9) * t_end;
    let var_end = *variance_qr.last().unwrap();
    let stationary = series
        .iter()
        .filter(|s| s.time >= cut)
        .all(|s| (s.qr.variance - var_end).abs() <= T::of(0.01) * var_end);

    Ok(GrowthReport {
        times,
        variance_qc,
        variance_qr,
        dominant_qc: series.iter().map(|s| s.qc.dominant_mode).collect(),
        dominant_qr: series.iter().map(|s| s.qr.dominant_mode).collect(),
        onset_time,
        stationary,
    })
}

/// Pearson correlation of two equally long samples.
pub fn field_correlation<T: Real>(a: &[T], b: &[T]) -> T {
    let n = T::from_usize(a.len()).unwrap();
    let ma = a.iter().fold(T::zero(), |s, &x| s + x) / n;
    let mb = b.iter().fold(T::zero(), |s, &x| s + x) / n;
    let mut cov = T::zero();
    let mut va = T::zero();
    let mut vb = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        let dx = x - ma;
        let dy = y - mb;
        cov += dx * dy;
        va += dx * dx;
        vb += dy * dy;
    }
    cov / (va.sqrt() * vb.sqrt())
}
