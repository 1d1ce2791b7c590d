//! Comparison of the exact law of `X_t/t` with the limit law.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::coin::ShiftParams;
use crate::error::{Error, EvolutionError, LimitLawError};
use crate::evolution::{position_distribution, Direction, LocalTransfer, PositionDistribution, WalkerState, Window};
use crate::field::CoinField;
use crate::limit_law::LimitDensity;

/// A distribution on the real line, seen through its CDF.
pub trait Cdf {
    /// Right-continuous CDF at ascending points.
    fn cdf_sorted(&self, vs: &[f64]) -> Result<Vec<f64>, LimitLawError>;
    /// Atoms `(location, mass)`, ascending.
    fn atoms(&self) -> Vec<(f64, f64)>;
}

impl Cdf for LimitDensity {
    fn cdf_sorted(&self, vs: &[f64]) -> Result<Vec<f64>, LimitLawError> {
        LimitDensity::cdf_sorted(self, vs)
    }

    fn atoms(&self) -> Vec<(f64, f64)> {
        if self.w0 > 0.0 {
            vec![(0.0, self.w0)]
        } else {
            Vec::new()
        }
    }
}

/// Step CDF of `X_t/t` from an exact probability table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalCdf {
    pub points: Vec<f64>,
    pub masses: Vec<f64>,
    cumulative: Vec<f64>,
}

impl EmpiricalCdf {
    /// Steps at `x/t` for every site with positive probability.
    pub fn from_distribution(dist: &PositionDistribution, t: usize) -> Self {
        let scale = if t == 0 { 1.0 } else { 1.0 / t as f64 };
        let (points, masses): (Vec<f64>, Vec<f64>) = dist
            .iter()
            .filter(|&(_, p)| p > 0.0)
            .map(|(x, p)| (x as f64 * scale, p))
            .unzip();
        Self::from_atoms(points, masses)
    }

    /// `points` must be strictly ascending.
    pub fn from_atoms(points: Vec<f64>, masses: Vec<f64>) -> Self {
        let cumulative = masses
            .iter()
            .scan(0.0, |acc, &m| {
                *acc += m;
                Some(*acc)
            })
            .collect();
        Self {
            points,
            masses,
            cumulative,
        }
    }

    pub fn eval(&self, v: f64) -> f64 {
        let n = self.points.partition_point(|&p| p <= v);
        if n == 0 {
            0.0
        } else {
            self.cumulative[n - 1]
        }
    }

    pub fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }
}

impl Cdf for EmpiricalCdf {
    fn cdf_sorted(&self, vs: &[f64]) -> Result<Vec<f64>, LimitLawError> {
        Ok(vs.iter().map(|&v| self.eval(v)).collect())
    }

    fn atoms(&self) -> Vec<(f64, f64)> {
        self.points.iter().copied().zip(self.masses.iter().copied()).collect()
    }
}

fn atom_mass(atoms: &[(f64, f64)], v: f64) -> f64 {
    let i = atoms.partition_point(|a| a.0 < v);
    match atoms.get(i) {
        Some(&(x, m)) if x == v => m,
        _ => 0.0,
    }
}

/// `sup |F_a − F_b|` over the grid and both sets of jump points, comparing
/// values and left limits. Points inside the open interval `exclude` are
/// skipped.
pub fn ks_distance(a: &dyn Cdf, b: &dyn Cdf, grid: &[f64], exclude: Option<(f64, f64)>) -> Result<f64, LimitLawError> {
    let atoms_a = a.atoms();
    let atoms_b = b.atoms();
    let mut pts: Vec<f64> = grid
        .iter()
        .copied()
        .chain(atoms_a.iter().map(|x| x.0))
        .chain(atoms_b.iter().map(|x| x.0))
        .filter(|v| v.is_finite())
        .filter(|&v| exclude.is_none_or(|(lo, hi)| v <= lo || v >= hi))
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let fa = a.cdf_sorted(&pts)?;
    let fb = b.cdf_sorted(&pts)?;
    let mut worst = 0.0f64;
    for ((&v, &x), &y) in pts.iter().zip(&fa).zip(&fb) {
        worst = worst.max((x - y).abs());
        let lx = x - atom_mass(&atoms_a, v);
        let ly = y - atom_mass(&atoms_b, v);
        worst = worst.max((lx - ly).abs());
    }
    Ok(worst.min(1.0))
}

/// Half-width of the neighborhood of the atom at 0 left out of the KS
/// comparison at time `t`.
pub fn atom_exclusion(w0: f64, t: usize) -> Option<(f64, f64)> {
    (w0 > 0.0 && t > 0).then(|| {
        let d = 1.0 / (t as f64).sqrt();
        (-d, d)
    })
}

pub const MOMENT_ORDERS: [u32; 3] = [1, 2, 4];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRecord {
    pub t: usize,
    pub ks: f64,
    /// `|E[(X_t/t)^m] − ∫v^m dμ_V|` for `m = 1, 2, 4`
    pub moment_gaps: [f64; 3],
    pub empirical_moments: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub records: Vec<ConvergenceRecord>,
    pub theoretical_moments: [f64; 3],
    pub w0: f64,
    pub mass: f64,
    pub runtime_seconds: f64,
    pub threads: usize,
}

impl ConvergenceReport {
    pub fn ks_strictly_decreasing(&self) -> bool {
        self.records.windows(2).all(|w| w[1].ks < w[0].ks)
    }
}

/// Exact position distributions at each requested time, from one forward run.
pub fn distributions_at(
    shift: &ShiftParams,
    field: &CoinField,
    psi0: &WalkerState,
    times: &[usize],
) -> Result<Vec<(usize, PositionDistribution)>, EvolutionError> {
    let mut ts = times.to_vec();
    ts.sort_unstable();
    ts.dedup();
    let t_max = ts.last().copied().unwrap_or(0);
    let (lo, hi) = psi0.support().unwrap_or((0, 0));
    let window = Window::for_evolution(lo, hi, t_max);
    let transfer = LocalTransfer::build(shift, field, window);
    let mut state = psi0.embed(window);
    let mut out = Vec::with_capacity(ts.len());
    let mut next = 0;
    transfer.evolve_with(&mut state, t_max, Direction::Forward, |t, s| {
        if next < ts.len() && ts[next] == t {
            out.push((t, position_distribution(s)));
            next += 1;
        }
    })?;
    Ok(out)
}

/// Evolves to every `t` and compares with `density`: KS distance on
/// `grid ∪ jump points` (excluding the atom neighborhood when `w₀ > 0`)
/// and gaps of the moments of order 1, 2, 4.
pub fn convergence_sweep(
    shift: &ShiftParams,
    field: &CoinField,
    psi0: &WalkerState,
    density: &LimitDensity,
    times: &[usize],
    grid: &[f64],
) -> Result<ConvergenceReport, Error> {
    if times.is_empty() {
        return Err(Error::Usage("convergence sweep needs at least one time".into()));
    }
    if times.contains(&0) {
        return Err(Error::Usage("convergence sweep times must be positive".into()));
    }
    let start = Instant::now();
    let theory = density.moments(&MOMENT_ORDERS)?;
    let theoretical_moments = [theory[0], theory[1], theory[2]];
    let mass = density.mass()?;
    let dists = distributions_at(shift, field, psi0, times)?;
    let records = dists
        .par_iter()
        .map(|(t, dist)| {
            let emp = EmpiricalCdf::from_distribution(dist, *t);
            let ks = ks_distance(&emp, density, grid, atom_exclusion(density.w0, *t))?;
            let m = dist.rescaled_moments(*t, &MOMENT_ORDERS);
            let empirical_moments = [m[0], m[1], m[2]];
            let moment_gaps = [0, 1, 2].map(|i| (empirical_moments[i] - theoretical_moments[i]).abs());
            Ok(ConvergenceRecord {
                t: *t,
                ks,
                moment_gaps,
                empirical_moments,
            })
        })
        .collect::<Result<Vec<_>, LimitLawError>>()?;
    Ok(ConvergenceReport {
        records,
        theoretical_moments,
        w0: density.w0,
        mass,
        runtime_seconds: start.elapsed().as_secs_f64(),
        threads: rayon::current_num_threads(),
    })
}
