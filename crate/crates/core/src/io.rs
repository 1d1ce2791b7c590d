//! CSV and JSON writers. Floats in CSV use `{:.16e}` (17 significant
//! digits), so files are byte-identical across runs with the same input.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Error;
use crate::evolution::PositionDistribution;
use crate::pipeline::{CompareRun, DensityRun, SimulationRun, SpectrumChannel};
use crate::scattering::{ChannelSide, MomentumWeights};
use crate::spectral::DispersionData;
use crate::stats::ConvergenceReport;

fn e(x: f64) -> String {
    format!("{x:.16e}")
}

struct Csv {
    out: BufWriter<File>,
}

impl Csv {
    fn create(path: &Path, header: &[&str]) -> Result<Self, Error> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{}", header.join(","))?;
        Ok(Self { out })
    }

    fn row(&mut self, fields: &[String]) -> Result<(), Error> {
        writeln!(self.out, "{}", fields.join(","))?;
        Ok(())
    }

    fn finish(mut self) -> Result<(), Error> {
        self.out.flush()?;
        Ok(())
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    let mut s = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

fn suffixed(dir: &Path, stem: &str, side: ChannelSide, ext: &str) -> PathBuf {
    match side {
        ChannelSide::Whole => dir.join(format!("{stem}.{ext}")),
        other => dir.join(format!("{stem}_{}.{ext}", other.name())),
    }
}

/// Rows from the first to the last site with nonzero probability.
fn trimmed(dist: &PositionDistribution) -> impl Iterator<Item = (i64, f64)> + '_ {
    let first = dist.probs.iter().position(|&p| p > 0.0).unwrap_or(dist.probs.len());
    let last = dist.probs.iter().rposition(|&p| p > 0.0).map_or(0, |i| i + 1);
    dist.iter().skip(first).take(last.saturating_sub(first))
}

#[derive(Serialize)]
struct TimeSummary {
    t: usize,
    norm: f64,
    /// `E[(X_t/t)^m]` for m = 1, 2, 4; absent at t = 0
    moments: Option<Moments>,
}

#[derive(Serialize)]
struct Moments {
    m1: f64,
    m2: f64,
    m4: f64,
}

impl Moments {
    fn new(m: [f64; 3]) -> Self {
        Self {
            m1: m[0],
            m2: m[1],
            m4: m[2],
        }
    }
}

/// `distribution.csv` (t, x, prob), `simulate_summary.json` and, when
/// amplitudes were kept, `trajectory.csv`.
pub fn write_simulation(dir: &Path, run: &SimulationRun) -> Result<Vec<PathBuf>, Error> {
    let mut files = Vec::new();
    let path = dir.join("distribution.csv");
    let mut csv = Csv::create(&path, &["t", "x", "prob"])?;
    for (t, dist) in &run.distributions {
        for (x, p) in trimmed(dist) {
            csv.row(&[t.to_string(), x.to_string(), e(p)])?;
        }
    }
    csv.finish()?;
    files.push(path);

    if !run.states.is_empty() {
        let path = dir.join("trajectory.csv");
        let mut csv = Csv::create(&path, &["t", "x", "up_re", "up_im", "down_re", "down_im"])?;
        for (t, state) in &run.states {
            if let Some((lo, hi)) = state.support() {
                for x in lo..=hi {
                    let [u, d] = state.amplitude(x);
                    csv.row(&[t.to_string(), x.to_string(), e(u.re), e(u.im), e(d.re), e(d.im)])?;
                }
            }
        }
        csv.finish()?;
        files.push(path);
    }

    let summary: Vec<TimeSummary> = run
        .distributions
        .iter()
        .zip(&run.norms)
        .map(|((t, dist), (_, norm))| TimeSummary {
            t: *t,
            norm: *norm,
            moments: (*t > 0).then(|| {
                let m = dist.rescaled_moments(*t, &crate::stats::MOMENT_ORDERS);
                Moments::new([m[0], m[1], m[2]])
            }),
        })
        .collect();
    let path = dir.join("simulate_summary.json");
    write_json(&path, &summary)?;
    files.push(path);
    Ok(files)
}

pub const DISPERSION_HEADER: [&str; 16] = [
    "k",
    "tau",
    "lambda1_re",
    "lambda1_im",
    "lambda2_re",
    "lambda2_im",
    "e1_up_re",
    "e1_up_im",
    "e1_down_re",
    "e1_down_im",
    "e2_up_re",
    "e2_up_im",
    "e2_down_re",
    "e2_down_im",
    "v1",
    "v2",
];

pub fn write_dispersion(path: &Path, d: &DispersionData) -> Result<(), Error> {
    let mut csv = Csv::create(path, &DISPERSION_HEADER)?;
    for j in 0..d.len() {
        let [l1, l2] = d.lambda[j];
        let [e1, e2] = d.vectors[j];
        let [v1, v2] = d.velocity[j];
        let row = [
            d.k[j], d.tau[j], l1.re, l1.im, l2.re, l2.im, e1[0].re, e1[0].im, e1[1].re, e1[1].im, e2[0].re, e2[0].im,
            e2[1].re, e2[1].im, v1, v2,
        ];
        csv.row(&row.map(e))?;
    }
    csv.finish()
}

/// `dispersion.csv`, or one file per side for two-sided coin fields.
pub fn write_spectrum(dir: &Path, channels: &[SpectrumChannel]) -> Result<Vec<PathBuf>, Error> {
    channels
        .iter()
        .map(|c| {
            let path = suffixed(dir, "dispersion", c.side, "csv");
            write_dispersion(&path, &c.data)?;
            Ok(path)
        })
        .collect()
}

pub fn write_weights(path: &Path, w: &MomentumWeights) -> Result<(), Error> {
    let mut csv = Csv::create(path, &["k", "w1", "w2"])?;
    for j in 0..w.len() {
        csv.row(&[e(w.k[j]), e(w.w1[j]), e(w.w2[j])])?;
    }
    csv.finish()
}

#[derive(Serialize)]
struct Residual {
    t: usize,
    residual: f64,
}

#[derive(Serialize)]
struct GapEigenvalue {
    re: f64,
    im: f64,
    phase: f64,
    overlap_sqr: f64,
    inner_mass: f64,
}

#[derive(Serialize)]
struct ChannelMass {
    side: ChannelSide,
    mass: f64,
}

#[derive(Serialize)]
struct ScatteringSummary {
    t_used: usize,
    tol: f64,
    converged: bool,
    monotone: bool,
    residuals: Vec<Residual>,
    w0: f64,
    w0_half_window: Option<f64>,
    bound_sites: usize,
    gap_eigenvalues: Vec<GapEigenvalue>,
    channels: Vec<ChannelMass>,
}

#[derive(Serialize)]
struct DensitySummary {
    w0: f64,
    mass: f64,
    continuous_mass: f64,
    quadrature_error: f64,
    support_edge: f64,
    moments: Moments,
}

/// `density.csv`, `density_summary.json`, `weights*.csv` and
/// `scattering.json`.
pub fn write_density(dir: &Path, run: &DensityRun) -> Result<Vec<PathBuf>, Error> {
    let mut files = Vec::new();
    let path = dir.join("density.csv");
    let mut csv = Csv::create(&path, &["v", "f_plus", "f_minus", "w_plus", "w_minus", "density"])?;
    for p in &run.points {
        csv.row(&[p.v, p.f_plus, p.f_minus, p.w_plus, p.w_minus, p.density].map(e))?;
    }
    csv.finish()?;
    files.push(path);

    let path = dir.join("density_summary.json");
    write_json(
        &path,
        &DensitySummary {
            w0: run.density.w0,
            mass: run.mass(),
            continuous_mass: run.continuous_mass.value,
            quadrature_error: run.continuous_mass.error_estimate,
            support_edge: run.density.support_edge(),
            moments: Moments::new(run.moments),
        },
    )?;
    files.push(path);

    for cw in &run.weights {
        let path = suffixed(dir, "weights", cw.side, "csv");
        write_weights(&path, &cw.weights)?;
        files.push(path);
    }

    let sc = &run.scattering;
    let summary = ScatteringSummary {
        t_used: sc.t_used,
        tol: sc.tol,
        converged: sc.converged,
        monotone: sc.monotone,
        residuals: sc.residuals.iter().map(|&(t, residual)| Residual { t, residual }).collect(),
        w0: sc.w0,
        w0_half_window: sc.bound.w0_half_window,
        bound_sites: sc.bound.sites,
        gap_eigenvalues: sc
            .bound
            .states
            .iter()
            .map(|b| GapEigenvalue {
                re: b.eigenvalue.re,
                im: b.eigenvalue.im,
                phase: b.phase,
                overlap_sqr: b.overlap.norm_sqr(),
                inner_mass: b.inner_mass,
            })
            .collect(),
        channels: sc
            .channels
            .iter()
            .map(|c| ChannelMass {
                side: c.side,
                mass: c.state.norm_sqr(),
            })
            .collect(),
    };
    let path = dir.join("scattering.json");
    write_json(&path, &summary)?;
    files.push(path);
    Ok(files)
}

#[derive(Serialize)]
struct ConvergenceSummary {
    times: Vec<usize>,
    ks: Vec<f64>,
    ks_strictly_decreasing: bool,
    theoretical_moments: Moments,
    w0: f64,
    mass: f64,
}

#[derive(Serialize)]
struct Timing {
    runtime_seconds: f64,
    threads: usize,
}

pub fn write_convergence(dir: &Path, report: &ConvergenceReport) -> Result<Vec<PathBuf>, Error> {
    let path = dir.join("convergence.csv");
    let mut csv = Csv::create(&path, &["t", "ks", "gap_m1", "gap_m2", "gap_m4", "m1", "m2", "m4"])?;
    for r in &report.records {
        let [g1, g2, g4] = r.moment_gaps;
        let [m1, m2, m4] = r.empirical_moments;
        csv.row(&[r.t.to_string(), e(r.ks), e(g1), e(g2), e(g4), e(m1), e(m2), e(m4)])?;
    }
    csv.finish()?;
    let summary_path = dir.join("convergence_summary.json");
    write_json(
        &summary_path,
        &ConvergenceSummary {
            times: report.records.iter().map(|r| r.t).collect(),
            ks: report.records.iter().map(|r| r.ks).collect(),
            ks_strictly_decreasing: report.ks_strictly_decreasing(),
            theoretical_moments: Moments::new(report.theoretical_moments),
            w0: report.w0,
            mass: report.mass,
        },
    )?;
    // wall-clock data lives apart so the other files stay reproducible
    let timing_path = dir.join("timing.json");
    write_json(
        &timing_path,
        &Timing {
            runtime_seconds: report.runtime_seconds,
            threads: report.threads,
        },
    )?;
    Ok(vec![path, summary_path, timing_path])
}

pub fn write_compare(dir: &Path, run: &CompareRun) -> Result<Vec<PathBuf>, Error> {
    let mut files = write_density(dir, &run.density)?;
    files.extend(write_convergence(dir, &run.report)?);
    Ok(files)
}
