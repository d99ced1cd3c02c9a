//! Output file writers: field dumps (text and binary), graymaps, CSV tables
//! and the human-readable analysis report.

use cumulus::analysis::{AnalysisReport, ModeRow, LITERATURE_B2};
use cumulus::sim::{ModeIndex, PairSummary, SweepResult};
use cumulus::spectral::GridSpec;
use cumulus::stability::ModeSet;
use cumulus::Dims;
use std::fmt::Write as _;

pub const BINARY_MAGIC: &[u8; 4] = b"CWF1";

/// Rounds to six significant digits for the human-readable reports.
pub fn sig6(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let exp = x.abs().log10().floor() as i32;
    let m = 10f64.powi(5 - exp);
    (x * m).round() / m
}

/// Compact time tag for filenames: `20`, `0.5`, ...
pub fn time_tag(t: f64) -> String {
    if t.fract() == 0.0 && t.abs() < 1e15 {
        format!("{}", t as i64)
    } else {
        format!("{t}")
    }
}

/// Text field dump: a header line, then one full-precision value per sample
/// in row-major order.
pub fn field_text(grid: &GridSpec<f64>, time: f64, species: &str, data: &[f64]) -> String {
    let mut out = String::with_capacity(data.len() * 20);
    let _ = writeln!(
        out,
        "n={} dims={} L={} time={} species={}",
        grid.n,
        grid.dims.count(),
        grid.length,
        time,
        species
    );
    for v in data {
        let _ = writeln!(out, "{v}");
    }
    out
}

/// Binary twin: magic, version, species, dims, reserved, n (u32 LE),
/// length (f64 LE), time (f64 LE), then row-major f64 LE samples.
pub fn field_binary(grid: &GridSpec<f64>, time: f64, species: u8, data: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(24 + 8 * data.len());
    out.extend_from_slice(BINARY_MAGIC);
    out.push(1); // version
    out.push(species);
    out.push(grid.dims.count() as u8);
    out.push(0); // reserved
    out.extend_from_slice(&(grid.n as u32).to_le_bytes());
    out.extend_from_slice(&grid.length.to_le_bytes());
    out.extend_from_slice(&time.to_le_bytes());
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// 8-bit binary portable graymap, min/max normalized. Returns the bytes and
/// the normalization bounds.
pub fn field_pgm(grid: &GridSpec<f64>, data: &[f64]) -> (Vec<u8>, f64, f64) {
    let lo = data.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut out = format!("P5\n{} {}\n255\n", grid.n, grid.n).into_bytes();
    out.extend(
        data.iter()
            .map(|&v| (255.0 * (v - lo) / span).round().clamp(0.0, 255.0) as u8),
    );
    (out, lo, hi)
}

fn mode_label(m: &ModeIndex) -> String {
    match m {
        ModeIndex::One(n) => n.to_string(),
        ModeIndex::Two(a, b) => format!("{a}:{b}"),
    }
}

/// Diagnostics time series as CSV (full precision).
pub fn diagnostics_csv(series: &[PairSummary<f64>]) -> String {
    let mut out = String::from(
        "time,qc_mean,qc_var,qc_min,qc_max,qc_dom_mode,qc_dom_amp,qr_mean,qr_var,qr_min,qr_max,qr_dom_mode,qr_dom_amp\n",
    );
    for s in series {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            s.time,
            s.qc.mean,
            s.qc.variance,
            s.qc.min,
            s.qc.max,
            mode_label(&s.qc.dominant_mode),
            s.qc.dominant_amplitude,
            s.qr.mean,
            s.qr.variance,
            s.qr.min,
            s.qr.max,
            mode_label(&s.qr.dominant_mode),
            s.qr.dominant_amplitude,
        );
    }
    out
}

/// Sweep table as CSV.
pub fn sweep_csv(sweep: &SweepResult<f64>) -> String {
    let mut out = String::from("b,patterned,qc_mean,qc_var,qr_mean,qr_var,qr_dom_mode,error\n");
    for e in &sweep.entries {
        let (patterned, summary) = (
            e.patterned.map(|p| p.to_string()).unwrap_or_default(),
            e.final_summary.as_ref(),
        );
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            e.b,
            patterned,
            summary.map(|s| s.qc.mean.to_string()).unwrap_or_default(),
            summary
                .map(|s| s.qc.variance.to_string())
                .unwrap_or_default(),
            summary.map(|s| s.qr.mean.to_string()).unwrap_or_default(),
            summary
                .map(|s| s.qr.variance.to_string())
                .unwrap_or_default(),
            summary
                .map(|s| mode_label(&s.qr.dominant_mode))
                .unwrap_or_default(),
            e.error.clone().unwrap_or_default(),
        );
    }
    out
}

fn mode_set_string(set: &ModeSet) -> String {
    match set {
        ModeSet::One(v) => format!("{v:?}"),
        ModeSet::Two(v) => format!("{v:?}"),
    }
}

/// Human-readable analysis report, rounded to six significant digits.
pub fn analysis_text(rep: &AnalysisReport<f64>) -> String {
    let p = &rep.params;
    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "cloud model analysis");
    let _ = writeln!(w, "====================");
    let _ = writeln!(
        w,
        "parameters: c={} a1={} a2={} gamma={} beta_c={} beta_r={} zeta={} d={} B={}",
        sig6(p.c),
        sig6(p.a1),
        sig6(p.a2),
        sig6(p.gamma),
        sig6(p.beta_c),
        sig6(p.beta_r),
        sig6(p.zeta),
        sig6(p.d),
        sig6(p.b)
    );
    let _ = writeln!(
        w,
        "diffusion:  D1={} D2={}",
        sig6(rep.diff.d1),
        sig6(rep.diff.d2)
    );
    let _ = writeln!(
        w,
        "domain:     L={} dims={}",
        sig6(rep.domain.length),
        rep.domain.dims.count()
    );
    let _ = writeln!(w);

    let t = &rep.trivial;
    let _ = writeln!(
        w,
        "trivial state: (0, {}), case {:?}, a11={} a21={} ode_stable={}",
        sig6(t.equilibrium.state.qr),
        t.case,
        sig6(t.a11),
        sig6(t.a21),
        t.ode_stable
            .map(|s| s.to_string())
            .unwrap_or_else(|| "n/a".into())
    );
    let _ = writeln!(w);

    let _ = writeln!(w, "equilibria:");
    for e in &rep.equilibria {
        let _ = writeln!(
            w,
            "  {:?}: qc={} qr={} admissible={} residual={:e}",
            e.branch,
            sig6(e.state.qc),
            sig6(e.state.qr),
            e.admissible,
            sig6(e.residual)
        );
    }
    let _ = writeln!(w);

    let s = &rep.stability;
    let _ = writeln!(
        w,
        "selected equilibrium: {:?} (qc={}, qr={})",
        rep.selected.branch,
        sig6(rep.selected.state.qc),
        sig6(rep.selected.state.qr)
    );
    let _ = writeln!(
        w,
        "jacobian: a11={} a12={} a21={} a22={}",
        sig6(rep.jacobian.a11),
        sig6(rep.jacobian.a12),
        sig6(rep.jacobian.a21),
        sig6(rep.jacobian.a22)
    );
    let _ = writeln!(
        w,
        "trace={} det={} eigenvalues=({}, {}) / ({}, {})",
        sig6(s.trace),
        sig6(s.det),
        sig6(s.eigenvalues[0].re),
        sig6(s.eigenvalues[0].im),
        sig6(s.eigenvalues[1].re),
        sig6(s.eigenvalues[1].im)
    );
    let _ = writeln!(
        w,
        "ode_stable={} marginal={} turing_possible={}",
        s.ode_stable, s.marginal, s.turing_possible
    );
    let _ = writeln!(w, "most unstable q^2 = {}", sig6(s.qm_squared));
    match s.band {
        Some((lo, hi)) => {
            let _ = writeln!(w, "unstable band in q^2: ({}, {})", sig6(lo), sig6(hi));
        }
        None => {
            let _ = writeln!(w, "unstable band in q^2: none");
        }
    }
    let _ = writeln!(
        w,
        "discrete unstable modes: {}",
        mode_set_string(&s.discrete_modes)
    );
    if let Some(cert) = rep.impossibility_certificate {
        let _ = writeln!(
            w,
            "linear-collision class certificate: no diffusion pair can destabilize this equilibrium ({cert})"
        );
    }
    if let Some(q) = rep.conserved_quantity {
        let _ = writeln!(
            w,
            "conserved quantity qce^(bc-g) qre^br = {} (expected {})",
            sig6(q),
            sig6((p.c - p.a1) / p.a2)
        );
    }
    if let Some(b1) = rep.b1 {
        let _ = writeln!(w);
        let _ = writeln!(w, "rain-flux thresholds:");
        let _ = writeln!(w, "  B1 (cubic root structure) = {}", sig6(b1));
        if let Some(b2) = rep.b2 {
            let fmt = |v: Option<f64>| {
                v.map(|x| sig6(x).to_string())
                    .unwrap_or_else(|| "n/a".into())
            };
            let _ = writeln!(w, "  B2 candidates: a22-sign = {}", fmt(b2.a22_sign));
            let _ = writeln!(
                w,
                "                 criterion-fail = {}",
                fmt(b2.criterion_fail)
            );
            let _ = writeln!(
                w,
                "                 last-discrete-mode = {}",
                fmt(b2.last_discrete_mode)
            );
            let _ = writeln!(
                w,
                "  literature value for the reference setup: B2 = {LITERATURE_B2}"
            );
        }
    }
    out
}

/// Per-mode table for the `modes` command.
pub fn modes_text(rows: &[ModeRow<f64>], dims: Dims, literature_note: Option<&str>) -> String {
    let mut out = String::new();
    let w = &mut out;
    match dims {
        Dims::One => {
            let _ = writeln!(
                w,
                "{:>4}  {:>12}  {:>12}  {:>13}  {:>13}  flag",
                "n", "q", "q^2", "p2(q^2)", "sigma1"
            );
            for r in rows {
                let _ = writeln!(
                    w,
                    "{:>4}  {:>12}  {:>12}  {:>13}  {:>13}  {}",
                    r.label.0,
                    sig6(r.q),
                    sig6(r.q_squared),
                    sig6(r.p2),
                    sig6(r.growth_rate),
                    if r.unstable { "UNSTABLE" } else { "stable" }
                );
            }
        }
        Dims::Two => {
            let _ = writeln!(
                w,
                "{:>8}  {:>12}  {:>12}  {:>13}  {:>13}  flag",
                "(n1,n2)", "q", "q^2", "p2(q^2)", "sigma1"
            );
            for r in rows {
                let _ = writeln!(
                    w,
                    "({:>2},{:>2})  {:>12}  {:>12}  {:>13}  {:>13}  {}",
                    r.label.0,
                    r.label.1,
                    sig6(r.q),
                    sig6(r.q_squared),
                    sig6(r.p2),
                    sig6(r.growth_rate),
                    if r.unstable { "UNSTABLE" } else { "stable" }
                );
            }
        }
    }
    let unstable: Vec<String> = rows
        .iter()
        .filter(|r| r.unstable)
        .map(|r| match dims {
            Dims::One => r.label.0.to_string(),
            Dims::Two => format!("({},{})", r.label.0, r.label.1),
        })
        .collect();
    let _ = writeln!(w, "unstable modes: [{}]", unstable.join(", "));
    if let Some(note) = literature_note {
        let _ = writeln!(w, "note: {note}");
    }
    out
}
