//! End-to-end runs behind the CLI subcommands.

use std::time::Instant;

use num_complex::Complex64;

use crate::config::{InitialState, RunConfig};
use crate::error::{Error, ScatterError};
use crate::evolution::{position_distribution, Direction, LocalTransfer, PositionDistribution, WalkerState, Window};
use crate::limit_law::{DensityComponent, DensityPoint, LimitDensity, Quadrature};
use crate::scattering::{approximate_wave_operator, channel_layout, momentum_weights, ChannelSide, MomentumWeights, ScatteringResult};
use crate::spectral::{BandModel, DispersionData};
use crate::stats::{convergence_sweep, ConvergenceReport, MOMENT_ORDERS};
use crate::bound_states::detect_bound_states;

/// Mass a trimmed bound state may lose to its tails.
const TRIM_TOL: f64 = 1e-15;

/// Smallest contiguous piece of `state` holding all but `TRIM_TOL` of its mass,
/// renormalized.
fn trim(state: &WalkerState) -> WalkerState {
    let total = state.norm_sqr();
    let mass: Vec<f64> = state.amplitudes().iter().map(|s| s[0].norm_sqr() + s[1].norm_sqr()).collect();
    let (mut lo, mut hi) = (0, mass.len() - 1);
    let mut dropped = 0.0;
    while lo < hi {
        let next = if mass[lo] <= mass[hi] { mass[lo] } else { mass[hi] };
        if dropped + next > TRIM_TOL * total {
            break;
        }
        dropped += next;
        if mass[lo] <= mass[hi] {
            lo += 1;
        } else {
            hi -= 1;
        }
    }
    let x0 = state.x_min();
    let window = Window::new(x0 + lo as i64, hi - lo + 1);
    let mut out = state.embed(window);
    out.scale(Complex64::new(1.0 / out.norm(), 0.0));
    out
}

/// The configured `Ψ₀`, diagonalizing the walk when a bound state is asked for.
pub fn initial_state(cfg: &RunConfig) -> Result<WalkerState, Error> {
    match &cfg.initial {
        InitialState::State(s) => Ok(s.clone()),
        &InitialState::BoundState { index } => {
            let probe = WalkerState::from_sites(Window::new(0, 1), &[(0, [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)])]);
            let report = detect_bound_states(&cfg.shift, &cfg.field, &probe, &cfg.scattering.bound)?;
            let found = report.states.len();
            let b = report.states.get(index).ok_or_else(|| {
                Error::Usage(format!("initial bound state {index} requested but the walk has {found}"))
            })?;
            Ok(trim(&b.state))
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulationRun {
    pub distributions: Vec<(usize, PositionDistribution)>,
    /// amplitudes at each time, when trajectories were requested
    pub states: Vec<(usize, WalkerState)>,
    pub norms: Vec<(usize, f64)>,
}

pub fn simulate(cfg: &RunConfig, psi0: &WalkerState) -> Result<SimulationRun, Error> {
    let mut times = cfg.simulate.times.clone();
    times.sort_unstable();
    times.dedup();
    let t_max = times.last().copied().unwrap_or(0);
    let (lo, hi) = psi0.support().unwrap_or((0, 0));
    let window = Window::for_evolution(lo, hi, t_max);
    let transfer = LocalTransfer::build(&cfg.shift, &cfg.field, window);
    let mut state = psi0.embed(window);
    let mut run = SimulationRun {
        distributions: Vec::new(),
        states: Vec::new(),
        norms: Vec::new(),
    };
    let mut next = 0;
    let keep = cfg.simulate.trajectory;
    transfer.evolve_with(&mut state, t_max, Direction::Forward, |t, s| {
        if next < times.len() && times[next] == t {
            run.distributions.push((t, position_distribution(s)));
            run.norms.push((t, s.norm()));
            if keep {
                run.states.push((t, s.clone()));
            }
            next += 1;
        }
    })?;
    Ok(run)
}

#[derive(Debug, Clone)]
pub struct SpectrumChannel {
    pub side: ChannelSide,
    pub model: BandModel,
    pub data: DispersionData,
}

/// Dispersion of each reference dynamics on `spectrum.k_points` momenta.
pub fn spectrum(cfg: &RunConfig) -> Result<Vec<SpectrumChannel>, Error> {
    channel_layout(cfg.field.asymptotics())
        .into_iter()
        .map(|(side, coin)| {
            let model = BandModel::new(&cfg.shift, &coin)?;
            let data = model.dispersion(cfg.spectrum.k_points)?;
            Ok(SpectrumChannel { side, model, data })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct ChannelWeights {
    pub side: ChannelSide,
    pub weights: MomentumWeights,
}

#[derive(Debug, Clone)]
pub struct DensityRun {
    pub scattering: ScatteringResult,
    pub weights: Vec<ChannelWeights>,
    pub density: LimitDensity,
    pub continuous_mass: Quadrature,
    /// `∫v^m dμ_V` for `m = 1, 2, 4`
    pub moments: [f64; 3],
    pub points: Vec<DensityPoint>,
}

impl DensityRun {
    pub fn mass(&self) -> f64 {
        self.density.w0 + self.continuous_mass.value
    }
}

/// `n` cell midpoints of `(−r, r)`.
pub fn velocity_grid(r: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| -r + 2.0 * r * (i as f64 + 0.5) / n as f64).collect()
}

/// `n` equispaced points of `[−1, 1]` including both ends.
pub fn ks_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect()
}

pub fn density(cfg: &RunConfig, psi0: &WalkerState) -> Result<DensityRun, Error> {
    // reject non limit-law shifts and coins before the expensive part
    let models = channel_layout(cfg.field.asymptotics())
        .into_iter()
        .map(|(side, coin)| Ok((side, BandModel::new(&cfg.shift, &coin)?)))
        .collect::<Result<Vec<_>, Error>>()?;
    let scattering = approximate_wave_operator(&cfg.shift, &cfg.field, psi0, &cfg.scattering)?;
    if cfg.require_convergence {
        scattering.require_converged()?;
    }
    let mut weights = Vec::new();
    let mut components = Vec::new();
    for ((side, model), channel) in models.into_iter().zip(&scattering.channels) {
        debug_assert_eq!(side, channel.side);
        let data = model.dispersion(cfg.density.k_points)?;
        let w = momentum_weights(&channel.state, &data);
        weights.push(ChannelWeights {
            side,
            weights: w.clone(),
        });
        components.push(DensityComponent { model, weights: w });
    }
    let density = LimitDensity::new(scattering.w0, components);
    let continuous_mass = density.integrate(-1.0, 1.0, |_| 1.0)?;
    let m = density.moments(&MOMENT_ORDERS)?;
    let points = velocity_grid(density.support_edge(), cfg.density.v_points)
        .into_iter()
        .map(|v| density.point(v))
        .collect();
    Ok(DensityRun {
        scattering,
        weights,
        density,
        continuous_mass,
        moments: [m[0], m[1], m[2]],
        points,
    })
}

#[derive(Debug, Clone)]
pub struct CompareRun {
    pub density: DensityRun,
    pub report: ConvergenceReport,
}

pub fn compare(cfg: &RunConfig, psi0: &WalkerState) -> Result<CompareRun, Error> {
    if cfg.compare.times.is_empty() {
        return Err(Error::Usage("compare needs at least one time in compare.times".into()));
    }
    let start = Instant::now();
    let density = density(cfg, psi0)?;
    let mut report = convergence_sweep(
        &cfg.shift,
        &cfg.field,
        psi0,
        &density.density,
        &cfg.compare.times,
        &ks_grid(cfg.compare.grid_points),
    )?;
    report.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(CompareRun { density, report })
}

/// Process exit status for an error: 2 for configuration and usage problems,
/// 3 when a wavefront reaches the window edge, 4 for a wave operator that
/// did not converge, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    use crate::error::{EvolutionError, SpectralError};
    match err {
        Error::Config(_) | Error::Usage(_) | Error::Spectral(SpectralError::NotLimitLawForm(_)) | Error::Coin(_) => 2,
        Error::Evolution(EvolutionError::BoundaryTouch { .. })
        | Error::Scatter(ScatterError::Evolution(EvolutionError::BoundaryTouch { .. })) => 3,
        Error::Scatter(ScatterError::NonConvergence { .. }) => 4,
        _ => 1,
    }
}
