//! The limit law `μ_V = w₀δ₀ + (w₊f₊ + w₋f₋)dv` of `X_t/t`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::Serialize;

use crate::error::LimitLawError;
use crate::scattering::MomentumWeights;
use crate::spectral::BandModel;

/// Absolute error target for every quadrature below.
pub const QUADRATURE_TARGET: f64 = 1e-6;

/// Panels per half of the substituted interval `θ ∈ (−π/2, π/2)`.
const PANELS_PER_HALF: usize = 8;

const MAX_BISECTIONS: u32 = 16;

/// Konno's function `√(1−r²)/(π(1−v²)√(r²−v²))` on `|v| < r`, else 0.
/// At `|v| = r` the value is `+∞` for `r < 1`; quadrature never samples there.
pub fn konno_f(v: f64, r: f64) -> f64 {
    if v.abs() >= r {
        if v.abs() == r && r < 1.0 {
            return f64::INFINITY;
        }
        return 0.0;
    }
    (1.0 - r * r).max(0.0).sqrt() / (PI * (1.0 - v * v) * (r * r - v * v).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

fn g_raw(v: f64, branch: Branch, m: &BandModel) -> f64 {
    let (p, q, a, b) = (m.p, m.q, m.a, m.b);
    let v2 = v * v;
    let root = ((q * q - v2) * (b * b - v2)).max(0.0).sqrt();
    (p * a * v2 + branch.sign() * root) / (q * b * (1.0 - v2))
}

/// `g±(v) = (pav² ± √((q²−v²)(b²−v²)))/(qb(1−v²))` for `|v| ≤ min(q, b)`,
/// clamped into `[−1, 1]` when it overshoots by at most `1e-9`.
pub fn g_pm(v: f64, branch: Branch, model: &BandModel) -> Result<f64, LimitLawError> {
    let g = g_raw(v, branch, model);
    if g.abs() > 1.0 + 1e-9 || g.is_nan() {
        return Err(LimitLawError::OutsideArccosDomain { v, value: g });
    }
    Ok(g.clamp(-1.0, 1.0))
}

fn arccos_g(v: f64, branch: Branch, model: &BandModel) -> f64 {
    g_raw(v, branch, model).clamp(-1.0, 1.0).acos()
}

/// `f±(v) = |f_K(v;q) ∓ f_K(v;b)|/2` on `(−q, q)∩(−b, b)`. When `q` and `b`
/// agree to `1e-12` the model is treated as exactly degenerate: `f₊ = 0`.
pub fn f_pm(v: f64, branch: Branch, model: &BandModel) -> f64 {
    let r = model.velocity_edge();
    if v.abs() >= r {
        return 0.0;
    }
    if model.is_degenerate() {
        return match branch {
            Branch::Plus => 0.0,
            Branch::Minus => konno_f(v, r),
        };
    }
    let fq = konno_f(v, model.q);
    let fb = konno_f(v, model.b);
    match branch {
        Branch::Plus => 0.5 * (fq - fb).abs(),
        Branch::Minus => 0.5 * (fq + fb),
    }
}

/// `w±(v)`: `w₁(2π − arccos g±) + w₂(arccos g±)` for `v ≥ 0`, and
/// `w₁(arccos g±) + w₂(2π − arccos g±)` for `v < 0`.
pub fn w_pm(v: f64, branch: Branch, model: &BandModel, weights: &MomentumWeights) -> f64 {
    let k = arccos_g(v, branch, model);
    if v >= 0.0 {
        weights.eval(1, TAU - k) + weights.eval(2, k)
    } else {
        weights.eval(1, k) + weights.eval(2, TAU - k)
    }
}

/// `|d/dv arccos g±(v) − (±2π sgn(v) f±(v))|` by central differences. The
/// step is `rel_step` times the distance from `v` to the nearest singular
/// point (0 or a support edge).
pub fn jacobian_residual(model: &BandModel, v: f64, branch: Branch, rel_step: f64) -> f64 {
    let dist = v.abs().min(model.velocity_edge() - v.abs());
    let h = rel_step * dist.max(f64::MIN_POSITIVE);
    let d = (arccos_g(v + h, branch, model) - arccos_g(v - h, branch, model)) / (2.0 * h);
    let expected = branch.sign() * TAU * v.signum() * f_pm(v, branch, model);
    (d - expected).abs()
}

/// Max Jacobian residual over `vs` (which should avoid 0 and the edges).
pub fn jacobian_identity_check(model: &BandModel, vs: &[f64], branch: Branch) -> f64 {
    vs.iter()
        .map(|&v| jacobian_residual(model, v, branch, 1e-4))
        .fold(0.0, f64::max)
}

/// Inverts `k ↦ v₁(k)` through the arccos branches: `g₊` near `k = 0, 2π`,
/// `g₋` near `k = π`, switching at the turning momentum.
pub fn recover_momentum(model: &BandModel, k: f64) -> f64 {
    let v = model.dtau(k) / (1.0 - model.tau(k).powi(2)).sqrt();
    let kstar = model.turning_momentum();
    let (folded, upper) = if k <= PI { (k, false) } else { (TAU - k, true) };
    let branch = if folded <= kstar { Branch::Plus } else { Branch::Minus };
    let base = arccos_g(v, branch, model);
    if upper {
        TAU - base
    } else {
        base
    }
}

/// Max `|recover_momentum(k) − k|` over `ks`, skipping points within
/// `margin` of `0`, `π`, `2π` and the two turning momenta, and points where
/// `1 − τ² < margin`.
pub fn branch_consistency_check(model: &BandModel, ks: &[f64], margin: f64) -> f64 {
    let kstar = model.turning_momentum();
    let avoid = [0.0, PI, TAU, kstar, TAU - kstar];
    ks.iter()
        .filter(|&&k| avoid.iter().all(|&s| (k - s).abs() > margin))
        .filter(|&&k| 1.0 - model.tau(k).powi(2) >= margin)
        .map(|&k| (recover_momentum(model, k) - k).abs())
        .fold(0.0, f64::max)
}

/// One reference dynamics with its momentum weights.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityComponent {
    pub model: BandModel,
    pub weights: MomentumWeights,
}

impl DensityComponent {
    pub fn density(&self, v: f64) -> f64 {
        let m = &self.model;
        if v.abs() >= m.velocity_edge() {
            return 0.0;
        }
        let mut rho = 0.0;
        for branch in [Branch::Plus, Branch::Minus] {
            let f = f_pm(v, branch, m);
            if f != 0.0 {
                rho += w_pm(v, branch, m, &self.weights) * f;
            }
        }
        rho
    }
}

/// Pointwise columns of the density dump. With several components `f±` are
/// summed and `w±` is the `f`-weighted mean, so `density = w₊f₊ + w₋f₋`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityPoint {
    pub v: f64,
    pub f_plus: f64,
    pub f_minus: f64,
    pub w_plus: f64,
    pub w_minus: f64,
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitDensity {
    pub w0: f64,
    pub components: Vec<DensityComponent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quadrature {
    pub value: f64,
    pub error_estimate: f64,
}

impl LimitDensity {
    pub fn new(w0: f64, components: Vec<DensityComponent>) -> Self {
        Self { w0, components }
    }

    /// Largest support edge over the components.
    pub fn support_edge(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.model.velocity_edge())
            .fold(0.0, f64::max)
    }

    pub fn density(&self, v: f64) -> f64 {
        self.components.iter().map(|c| c.density(v)).sum()
    }

    pub fn point(&self, v: f64) -> DensityPoint {
        let (mut fp, mut fm, mut wfp, mut wfm) = (0.0, 0.0, 0.0, 0.0);
        for c in &self.components {
            let m = &c.model;
            if v.abs() >= m.velocity_edge() {
                continue;
            }
            let a = f_pm(v, Branch::Plus, m);
            let b = f_pm(v, Branch::Minus, m);
            fp += a;
            fm += b;
            if a != 0.0 {
                wfp += w_pm(v, Branch::Plus, m, &c.weights) * a;
            }
            if b != 0.0 {
                wfm += w_pm(v, Branch::Minus, m, &c.weights) * b;
            }
        }
        let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { 0.0 };
        DensityPoint {
            v,
            f_plus: fp,
            f_minus: fm,
            w_plus: ratio(wfp, fp),
            w_minus: ratio(wfm, fm),
            density: wfp + wfm,
        }
    }

    /// `∫_lo^hi h(v) ρ(v) dv` over the continuous part, with `v = r sin θ`
    /// per component so the edge singularities become bounded integrands.
    pub fn integrate<H>(&self, lo: f64, hi: f64, h: H) -> Result<Quadrature, LimitLawError>
    where
        H: Fn(f64) -> f64,
    {
        let mut total = Quadrature {
            value: 0.0,
            error_estimate: 0.0,
        };
        for c in &self.components {
            let q = integrate_component(c, lo, hi, &h);
            total.value += q.value;
            total.error_estimate += q.error_estimate;
        }
        if total.error_estimate > QUADRATURE_TARGET {
            return Err(LimitLawError::Quadrature {
                target: QUADRATURE_TARGET,
                achieved: total.error_estimate,
            });
        }
        Ok(total)
    }

    pub fn continuous_mass(&self) -> Result<f64, LimitLawError> {
        Ok(self.integrate(-1.0, 1.0, |_| 1.0)?.value)
    }

    /// `w₀ + ∫ρ dv`
    pub fn mass(&self) -> Result<f64, LimitLawError> {
        Ok(self.w0 + self.continuous_mass()?)
    }

    /// `∫ v^m dμ_V` for each order.
    pub fn moments(&self, orders: &[u32]) -> Result<Vec<f64>, LimitLawError> {
        orders
            .iter()
            .map(|&m| {
                let atom = if m == 0 { self.w0 } else { 0.0 };
                Ok(atom + self.integrate(-1.0, 1.0, |v| v.powi(m as i32))?.value)
            })
            .collect()
    }

    /// Right-continuous CDF, including the jump `w₀` at 0.
    pub fn cdf(&self, v: f64) -> Result<f64, LimitLawError> {
        let atom = if v >= 0.0 { self.w0 } else { 0.0 };
        Ok(atom + self.integrate(-1.0, v, |_| 1.0)?.value)
    }

    /// CDF at ascending points by accumulating integrals between neighbors.
    pub fn cdf_sorted(&self, vs: &[f64]) -> Result<Vec<f64>, LimitLawError> {
        debug_assert!(vs.windows(2).all(|w| w[0] <= w[1]));
        let edge = self.support_edge();
        let mut out = Vec::with_capacity(vs.len());
        let mut acc = 0.0;
        let mut prev = -edge;
        for &v in vs {
            let to = v.clamp(-edge, edge);
            if to > prev {
                acc += self.integrate(prev, to, |_| 1.0)?.value;
                prev = to;
            }
            let atom = if v >= 0.0 { self.w0 } else { 0.0 };
            out.push((acc + atom).min(1.0 + 1e-9));
        }
        Ok(out)
    }
}

fn integrate_component<H>(c: &DensityComponent, lo: f64, hi: f64, h: &H) -> Quadrature
where
    H: Fn(f64) -> f64,
{
    let r = c.model.velocity_edge();
    let lo = lo.max(-r);
    let hi = hi.min(r);
    let mut out = Quadrature {
        value: 0.0,
        error_estimate: 0.0,
    };
    if hi <= lo {
        return out;
    }
    let theta_lo = (lo / r).clamp(-1.0, 1.0).asin();
    let theta_hi = (hi / r).clamp(-1.0, 1.0).asin();
    let integrand = |theta: f64| {
        let v = r * theta.sin();
        h(v) * c.density(v) * r * theta.cos()
    };
    // panel breakpoints: 0 (sgn switch) and a uniform partition of each half
    let width = FRAC_PI_2 / PANELS_PER_HALF as f64;
    let mut cuts: Vec<f64> = (-(PANELS_PER_HALF as i64)..=PANELS_PER_HALF as i64)
        .map(|i| i as f64 * width)
        .filter(|&x| x > theta_lo && x < theta_hi)
        .collect();
    cuts.insert(0, theta_lo);
    cuts.push(theta_hi);
    let target = QUADRATURE_TARGET / (4 * PANELS_PER_HALF) as f64;
    for w in cuts.windows(2) {
        let q = adaptive(&integrand, w[0], w[1], target, 0);
        out.value += q.value;
        out.error_estimate += q.error_estimate;
    }
    out
}

/// Double-exponential rule with bisection wherever the error estimate
/// misses the (halved) target.
fn adaptive<F>(f: &F, a: f64, b: f64, target: f64, depth: u32) -> Quadrature
where
    F: Fn(f64) -> f64,
{
    let q = quadrature::integrate(f, a, b, target);
    if q.error_estimate <= target || depth >= MAX_BISECTIONS {
        return Quadrature {
            value: q.integral,
            error_estimate: q.error_estimate,
        };
    }
    let mid = 0.5 * (a + b);
    let l = adaptive(f, a, mid, 0.5 * target, depth + 1);
    let r = adaptive(f, mid, b, 0.5 * target, depth + 1);
    Quadrature {
        value: l.value + r.value,
        error_estimate: l.error_estimate + r.error_estimate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coin::{CoinMatrix, ShiftParams};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn model(p: f64, q: f64, a: f64, b: f64) -> BandModel {
        BandModel::new(&ShiftParams::real(p, q).unwrap(), &CoinMatrix::reflection(a, b).unwrap()).unwrap()
    }

    #[test]
    fn konno_values() {
        assert_abs_diff_eq!(konno_f(0.0, 0.8), 0.6 / (0.8 * PI), epsilon = 1e-15);
        assert_abs_diff_eq!(konno_f(0.0, 0.8), 0.238_732_4, epsilon = 1e-7);
        assert_eq!(konno_f(0.9, 0.8), 0.0);
        assert_eq!(konno_f(0.3, 1.0), 0.0);
    }

    #[test]
    fn g_values() {
        let m = model(0.6, 0.8, 0.8, 0.6);
        assert_eq!(g_pm(0.0, Branch::Plus, &m).unwrap(), 1.0);
        assert_eq!(g_pm(0.0, Branch::Minus, &m).unwrap(), -1.0);
        let expect = (0.0432 + (0.55f64 * 0.27).sqrt()) / (0.48 * 0.91);
        assert_abs_diff_eq!(g_pm(0.3, Branch::Plus, &m).unwrap(), expect, epsilon = 1e-14);
        assert_abs_diff_eq!(expect, 0.981_128_6, epsilon = 1e-7);
        // both branches meet at the edge
        let edge = m.velocity_edge();
        let gap = g_pm(edge * (1.0 - 1e-12), Branch::Plus, &m).unwrap() - g_pm(edge * (1.0 - 1e-12), Branch::Minus, &m).unwrap();
        assert!(gap.abs() < 1e-5);
    }

    #[test]
    fn f_values() {
        let m = model(0.6, 0.8, 0.8, 0.6);
        let fq = 0.6 / (0.8 * PI);
        let fb = 0.8 / (0.6 * PI);
        assert_abs_diff_eq!(f_pm(0.0, Branch::Plus, &m), 0.5 * (fb - fq), epsilon = 1e-15);
        assert_abs_diff_eq!(f_pm(0.0, Branch::Plus, &m), 0.092_840_4, epsilon = 1e-7);
        assert_abs_diff_eq!(f_pm(0.0, Branch::Minus, &m), 0.331_572_8, epsilon = 1e-7);
        assert_eq!(f_pm(0.7, Branch::Minus, &m), 0.0);
    }

    #[test]
    fn degenerate_and_classical_shapes() {
        let m = model(0.6, 0.8, 0.6, 0.8);
        for &v in &[0.0, 0.3, -0.7] {
            assert_eq!(f_pm(v, Branch::Plus, &m), 0.0);
            assert_eq!(f_pm(v, Branch::Minus, &m), konno_f(v, 0.8));
        }
        let m = model(0.0, 1.0, FRAC_1_SQRT_2, FRAC_1_SQRT_2);
        for &v in &[0.0, 0.3, -0.6] {
            assert_abs_diff_eq!(f_pm(v, Branch::Plus, &m), 0.5 * konno_f(v, FRAC_1_SQRT_2), epsilon = 1e-15);
            assert_abs_diff_eq!(f_pm(v, Branch::Minus, &m), 0.5 * konno_f(v, FRAC_1_SQRT_2), epsilon = 1e-15);
        }
    }

    #[test]
    fn uniform_weights_give_unit_w() {
        let m = model(0.6, 0.8, 0.8, 0.6);
        let w = MomentumWeights::uniform(512, 0.5);
        for &v in &[-0.5, -0.1, 0.0, 0.2, 0.55] {
            for b in [Branch::Plus, Branch::Minus] {
                assert_abs_diff_eq!(w_pm(v, b, &m, &w), 1.0, epsilon = 1e-14);
            }
        }
        assert_abs_diff_eq!(arccos_g(0.0, Branch::Plus, &m), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(arccos_g(0.0, Branch::Minus, &m), PI, epsilon = 1e-15);
    }

    #[test]
    fn jacobian_at_sample_points() {
        let m = model(0.6, 0.8, 0.8, 0.6);
        for b in [Branch::Plus, Branch::Minus] {
            assert!(jacobian_residual(&m, 0.3, b, 1e-4) <= 1e-6);
            assert!(jacobian_residual(&m, -0.3, b, 1e-4) <= 1e-6);
            assert!(jacobian_residual(&m, 0.99 * m.velocity_edge(), b, 1e-4) <= 1e-4);
        }
    }

    #[test]
    fn classical_second_moment() {
        let m = model(0.0, 1.0, FRAC_1_SQRT_2, FRAC_1_SQRT_2);
        let d = LimitDensity::new(
            0.0,
            vec![DensityComponent {
                model: m,
                weights: MomentumWeights::uniform(1024, 0.5),
            }],
        );
        let mo = d.moments(&[0, 1, 2]).unwrap();
        assert_abs_diff_eq!(mo[0], 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(mo[1], 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(mo[2], 1.0 - FRAC_1_SQRT_2, epsilon = 1e-6);
    }

    #[test]
    fn cdf_has_atom_and_reaches_one() {
        let m = model(0.6, 0.8, 0.8, 0.6);
        let d = LimitDensity::new(
            0.25,
            vec![DensityComponent {
                model: m,
                weights: MomentumWeights::uniform(256, 0.375),
            }],
        );
        let pts = [-2.0, -0.3, -1e-12, 0.0, 0.3, 2.0];
        let cdf = d.cdf_sorted(&pts).unwrap();
        assert_eq!(cdf[0], 0.0);
        assert_abs_diff_eq!(cdf[3] - cdf[2], 0.25, epsilon = 1e-9);
        assert_abs_diff_eq!(cdf[5], 1.0, epsilon = 1e-6);
        for (&v, &c) in pts.iter().zip(&cdf) {
            assert_abs_diff_eq!(d.cdf(v).unwrap(), c, epsilon = 1e-8);
        }
    }

    #[test]
    fn branches_invert_velocity() {
        for m in [model(0.6, 0.8, 0.8, 0.6), model(0.8, 0.6, 0.6, 0.8), model(0.6, 0.8, 0.6, 0.8)] {
            let ks: Vec<f64> = (0..4096).map(|i| TAU * (i as f64 + 0.5) / 4096.0).collect();
            let err = branch_consistency_check(&m, &ks, 1e-3);
            assert!(err < 1e-8, "{m:?}: {err:e}");
        }
    }
}
