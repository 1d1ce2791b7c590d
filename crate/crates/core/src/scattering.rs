//! Wave operator `W* = s-lim U₀^{−t} U^t Π_ac(U)`, bound-state mass and
//! momentum weights.
//!
//! Fields with different limits on the two half-lines scatter into two
//! channels: `Φ^± = U_±^{−T} 1_± U^T Ψ_ac`, one per reference dynamics.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::bound_states::{detect_bound_states, BoundStateOptions, BoundStateReport};
use crate::coin::{CoinMatrix, ShiftParams, Spinor};
use crate::error::ScatterError;
use crate::evolution::{Direction, LocalTransfer, WalkerState, Window};
use crate::field::{Asymptotics, CoinField};
use crate::spectral::{momentum_grid, wrap_momentum, DispersionData};

pub const DEFAULT_SCHEDULE: [usize; 6] = [25, 50, 100, 200, 400, 800];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatteringOptions {
    pub schedule: Vec<usize>,
    pub tol: f64,
    pub bound: BoundStateOptions,
}

impl Default for ScatteringOptions {
    fn default() -> Self {
        Self {
            schedule: DEFAULT_SCHEDULE.to_vec(),
            tol: 1e-4,
            bound: BoundStateOptions::default(),
        }
    }
}

/// Which half-line a channel collects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelSide {
    Whole,
    Right,
    Left,
}

impl ChannelSide {
    pub fn name(self) -> &'static str {
        match self {
            ChannelSide::Whole => "whole",
            ChannelSide::Right => "right",
            ChannelSide::Left => "left",
        }
    }

    pub fn keeps(self, x: i64) -> bool {
        match self {
            ChannelSide::Whole => true,
            ChannelSide::Right => x >= 0,
            ChannelSide::Left => x < 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Channel {
    pub side: ChannelSide,
    /// reference coin `C₀` (or `C_±`)
    pub coin: CoinMatrix,
    /// `Φ ≈ W*Ψ₀` restricted to this channel
    pub state: WalkerState,
}

#[derive(Debug, Clone)]
pub struct ScatteringResult {
    pub channels: Vec<Channel>,
    pub bound: BoundStateReport,
    pub w0: f64,
    /// last T evaluated (0 when no iteration was needed)
    pub t_used: usize,
    /// `(T, ‖Φ_T − Φ_{T_prev}‖)` for consecutive schedule points
    pub residuals: Vec<(usize, f64)>,
    pub converged: bool,
    /// residuals never increased along the schedule
    pub monotone: bool,
    pub tol: f64,
}

impl ScatteringResult {
    pub fn require_converged(&self) -> Result<(), ScatterError> {
        if self.converged {
            return Ok(());
        }
        Err(ScatterError::NonConvergence {
            t_used: self.t_used,
            residual: self.residuals.last().map_or(f64::NAN, |r| r.1),
            tol: self.tol,
        })
    }

    /// `Σ ‖Φ^c‖²`
    pub fn scattered_mass(&self) -> f64 {
        self.channels.iter().map(|c| c.state.norm_sqr()).sum()
    }
}

/// `(FΨ)(k) = Σ_x e^{−ikx} Ψ(x)` on the given momenta.
pub fn fourier(state: &WalkerState, ks: &[f64]) -> Vec<Spinor> {
    let zero = Complex64::new(0.0, 0.0);
    let Some((lo, hi)) = state.support() else {
        return vec![[zero, zero]; ks.len()];
    };
    ks.par_iter()
        .map(|&k| {
            let step = Complex64::from_polar(1.0, -k);
            let mut phase = Complex64::from_polar(1.0, -k * lo as f64);
            let mut acc = [zero, zero];
            for x in lo..=hi {
                // refresh to keep the recurrence from drifting
                if (x - lo) % 256 == 0 {
                    phase = Complex64::from_polar(1.0, -k * x as f64);
                }
                let v = state.amplitude(x);
                acc[0] += phase * v[0];
                acc[1] += phase * v[1];
                phase *= step;
            }
            acc
        })
        .collect()
}

/// `w_j(k)` sampled on a uniform offset grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentumWeights {
    pub k: Vec<f64>,
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
}

impl MomentumWeights {
    /// Constant weights on an `m`-point grid.
    pub fn uniform(m: usize, value: f64) -> Self {
        Self {
            k: momentum_grid(m),
            w1: vec![value; m],
            w2: vec![value; m],
        }
    }

    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }

    /// Periodic linear interpolation of `w_j` (j = 1, 2) at `k`.
    pub fn eval(&self, j: usize, k: f64) -> f64 {
        let w = if j == 1 { &self.w1 } else { &self.w2 };
        let m = w.len();
        if m == 0 {
            return 0.0;
        }
        let s = wrap_momentum(k) * m as f64 / TAU - 0.5;
        let base = s.floor();
        let frac = s - base;
        let i0 = (base as i64).rem_euclid(m as i64) as usize;
        let i1 = (i0 + 1) % m;
        (1.0 - frac) * w[i0] + frac * w[i1]
    }

    /// `(1/2π) ∫ (w₁ + w₂) dk` by the periodic trapezoid rule.
    pub fn total(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.w1.iter().zip(&self.w2).map(|(a, b)| a + b).sum::<f64>() / self.len() as f64
    }
}

/// `w_j(k) = |⟨u_j(k), (FΦ)(k)⟩|²` on the dispersion grid.
pub fn momentum_weights(phi: &WalkerState, dispersion: &DispersionData) -> MomentumWeights {
    let f = fourier(phi, &dispersion.k);
    let proj = |u: &Spinor, v: &Spinor| (u[0].conj() * v[0] + u[1].conj() * v[1]).norm_sqr();
    let (w1, w2) = f
        .iter()
        .zip(&dispersion.vectors)
        .map(|(v, u)| (proj(&u[0], v), proj(&u[1], v)))
        .unzip();
    MomentumWeights {
        k: dispersion.k.clone(),
        w1,
        w2,
    }
}

/// Reference coins and the half-lines they collect.
pub fn channel_layout(asymptotics: &Asymptotics) -> Vec<(ChannelSide, CoinMatrix)> {
    match asymptotics {
        Asymptotics::Single(c0) => vec![(ChannelSide::Whole, *c0)],
        Asymptotics::TwoSided { left, right } => {
            vec![(ChannelSide::Left, *left), (ChannelSide::Right, *right)]
        }
    }
}

/// Approximates `W*Ψ₀` along `opts.schedule`, stopping at the first `T`
/// whose Cauchy residual is within `opts.tol`. Not reaching the tolerance is
/// reported through `converged`, see [`ScatteringResult::require_converged`].
pub fn approximate_wave_operator(
    shift: &ShiftParams,
    field: &CoinField,
    psi0: &WalkerState,
    opts: &ScatteringOptions,
) -> Result<ScatteringResult, ScatterError> {
    let mut schedule = opts.schedule.clone();
    schedule.sort_unstable();
    schedule.dedup();
    let t_max = *schedule.last().ok_or(ScatterError::EmptySchedule)?;
    let layout = channel_layout(field.asymptotics());

    let (lo, hi) = psi0.support().unwrap_or((0, 0));
    let diag_window = Window::centered(2 * opts.bound.sites);
    let lo = lo.min(diag_window.x_min);
    let hi = hi.max(diag_window.x_max());

    if let [(ChannelSide::Whole, c0)] = layout[..] {
        let reach = t_max as i64 + 2;
        if field.is_homogeneous_on(lo - reach..=hi + reach) {
            return Ok(ScatteringResult {
                channels: vec![Channel {
                    side: ChannelSide::Whole,
                    coin: c0,
                    state: psi0.clone(),
                }],
                bound: BoundStateReport::empty(0),
                w0: 0.0,
                t_used: 0,
                residuals: Vec::new(),
                converged: true,
                monotone: true,
                tol: opts.tol,
            });
        }
    }

    let bound = detect_bound_states(shift, field, psi0, &opts.bound)?;
    let window = Window::for_evolution(lo, hi, 2 * t_max + 1);
    let mut psi_ac = psi0.embed(window);
    psi_ac.axpy(Complex64::new(-1.0, 0.0), &bound.point_component(window));

    let transfer = LocalTransfer::build(shift, field, window);
    let references: Vec<(ChannelSide, CoinMatrix, LocalTransfer)> = layout
        .iter()
        .map(|&(side, coin)| {
            let reference = CoinField::homogeneous(coin).expect("limit coins are validated unitary");
            (side, coin, LocalTransfer::build(shift, &reference, window))
        })
        .collect();

    let mut previous: Option<Vec<WalkerState>> = None;
    let mut residuals = Vec::new();
    let mut converged = false;
    let mut t_used = 0;
    let mut current = psi_ac;
    let mut t_now = 0;
    for &t in &schedule {
        current = transfer
            .evolve(&current, t - t_now, Direction::Forward)?;
        t_now = t;
        let phis = references
            .par_iter()
            .map(|(side, _, reference)| {
                let part = current.restrict(|x| side.keeps(x));
                reference.evolve(&part, t, Direction::Inverse)
            })
            .collect::<Result<Vec<_>, _>>()?;
        t_used = t;
        if let Some(prev) = &previous {
            let r = phis
                .iter()
                .zip(prev)
                .map(|(a, b)| a.distance(b).powi(2))
                .sum::<f64>()
                .sqrt();
            residuals.push((t, r));
            if r <= opts.tol {
                converged = true;
                previous = Some(phis);
                break;
            }
        }
        previous = Some(phis);
    }
    let monotone = residuals.windows(2).all(|w| w[1].1 <= w[0].1);
    let channels = references
        .iter()
        .zip(previous.expect("schedule is non-empty"))
        .map(|((side, coin, _), state)| Channel {
            side: *side,
            coin: *coin,
            state,
        })
        .collect();
    Ok(ScatteringResult {
        channels,
        w0: bound.w0,
        bound,
        t_used,
        residuals,
        converged,
        monotone,
        tol: opts.tol,
    })
}
