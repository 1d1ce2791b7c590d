//! Position-dependent coin fields `x ↦ C(x)`.
//!
//! A field is immutable after construction and cheap to clone; the
//! evaluator sits behind an `Arc<dyn CoinProfile>`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::RangeInclusive;
use std::sync::Arc;

use serde::Serialize;

use crate::coin::CoinMatrix;
use crate::error::CoinError;

/// Half-width of the lattice window on which decay and unitarity are
/// sampled when a field is built.
pub const DEFAULT_VALIDATION_RADIUS: i64 = 10_000;

/// Something that can evaluate a coin at every lattice site.
pub trait CoinProfile: Send + Sync + fmt::Debug {
    fn coin(&self, x: i64) -> CoinMatrix;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelTag {
    Homogeneous,
    OneDefect,
    TwoPhase,
    ShortRange,
    Anisotropic,
    Custom,
}

impl ModelTag {
    pub fn name(self) -> &'static str {
        match self {
            ModelTag::Homogeneous => "homogeneous",
            ModelTag::OneDefect => "one_defect",
            ModelTag::TwoPhase => "two_phase",
            ModelTag::ShortRange => "short_range",
            ModelTag::Anisotropic => "anisotropic",
            ModelTag::Custom => "custom",
        }
    }
}

/// Behaviour of `C(x)` at spatial infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Asymptotics {
    /// One limit `C₀` in both directions.
    Single(CoinMatrix),
    /// Limits `C₋` as x → −∞ and `C₊` as x → +∞.
    TwoSided {
        left: CoinMatrix,
        right: CoinMatrix,
    },
}

impl Asymptotics {
    /// The limit coin governing site `x` (`C₊` is used at the origin).
    pub fn limit_at(&self, x: i64) -> CoinMatrix {
        match *self {
            Asymptotics::Single(c0) => c0,
            Asymptotics::TwoSided { left, right } => {
                if x < 0 {
                    left
                } else {
                    right
                }
            }
        }
    }

    pub fn coins(&self) -> Vec<CoinMatrix> {
        match *self {
            Asymptotics::Single(c0) => vec![c0],
            Asymptotics::TwoSided { left, right } => vec![left, right],
        }
    }
}

/// Decay constants of the short-range bound `‖C(x) − C₀‖ ≤ κ|x|^(−1−ε)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Decay {
    pub kappa: f64,
    pub epsilon: f64,
}

impl Decay {
    pub fn new(kappa: f64, epsilon: f64) -> Result<Self, CoinError> {
        if kappa > 0.0 && epsilon > 0.0 && kappa.is_finite() && epsilon.is_finite() {
            Ok(Self { kappa, epsilon })
        } else {
            Err(CoinError::InvalidDecay { kappa, epsilon })
        }
    }

    pub fn bound(&self, x: i64) -> f64 {
        self.kappa * (x.unsigned_abs() as f64).powf(-1.0 - self.epsilon)
    }
}

impl Default for Decay {
    fn default() -> Self {
        Self {
            kappa: 1.0,
            epsilon: 1.0,
        }
    }
}

#[derive(Clone)]
pub struct CoinField {
    tag: ModelTag,
    profile: Arc<dyn CoinProfile>,
    asymptotics: Asymptotics,
    decay: Decay,
}

impl fmt::Debug for CoinField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoinField")
            .field("tag", &self.tag)
            .field("asymptotics", &self.asymptotics)
            .field("decay", &self.decay)
            .finish_non_exhaustive()
    }
}

impl CoinField {
    /// Wraps an arbitrary profile. Unitarity and the decay bound are checked
    /// on `[−radius, radius]`.
    pub fn from_profile(
        tag: ModelTag,
        profile: Arc<dyn CoinProfile>,
        asymptotics: Asymptotics,
        decay: Decay,
        radius: i64,
    ) -> Result<Self, CoinError> {
        for c in asymptotics.coins() {
            c.ensure_unitary()?;
        }
        let field = Self {
            tag,
            profile,
            asymptotics,
            decay,
        };
        field.validate_unitary(-radius..=radius)?;
        field.validate_short_range(-radius..=radius)?;
        Ok(field)
    }

    pub fn homogeneous(c0: CoinMatrix) -> Result<Self, CoinError> {
        let c0 = c0.ensure_unitary()?;
        Ok(Self {
            tag: ModelTag::Homogeneous,
            profile: Arc::new(Homogeneous { c0 }),
            asymptotics: Asymptotics::Single(c0),
            decay: Decay::default(),
        })
    }

    /// `C(0) = origin`, `C(x) = bulk` elsewhere.
    pub fn one_defect(bulk: CoinMatrix, origin: CoinMatrix) -> Result<Self, CoinError> {
        let bulk = bulk.ensure_unitary()?;
        let origin = origin.ensure_unitary()?;
        Ok(Self {
            tag: ModelTag::OneDefect,
            profile: Arc::new(OneDefect { bulk, origin }),
            asymptotics: Asymptotics::Single(bulk),
            decay: Decay::default(),
        })
    }

    /// `C(x) = right` for x > 0, `left` for x < 0, `origin` at x = 0.
    pub fn two_phase(
        left: CoinMatrix,
        right: CoinMatrix,
        origin: CoinMatrix,
    ) -> Result<Self, CoinError> {
        let left = left.ensure_unitary()?;
        let right = right.ensure_unitary()?;
        let origin = origin.ensure_unitary()?;
        Ok(Self {
            tag: ModelTag::TwoPhase,
            profile: Arc::new(TwoPhase {
                left,
                right,
                origin,
            }),
            asymptotics: Asymptotics::TwoSided { left, right },
            decay: Decay::default(),
        })
    }

    /// `C(x) = V(x)·C₀` with a caller-supplied perturbation `V`. Fails if the
    /// decay bound is violated anywhere in `[−radius, radius]`.
    pub fn short_range<F>(
        c0: CoinMatrix,
        decay: Decay,
        perturbation: F,
        radius: i64,
    ) -> Result<Self, CoinError>
    where
        F: Fn(i64) -> CoinMatrix + Send + Sync + 'static,
    {
        let c0 = c0.ensure_unitary()?;
        Self::from_profile(
            ModelTag::ShortRange,
            Arc::new(Perturbed {
                c0,
                perturbation: Box::new(perturbation),
            }),
            Asymptotics::Single(c0),
            decay,
            radius,
        )
    }

    /// Built-in short-range family: `C(x) = R(θ(x))·C₀` with
    /// `θ(x) = θ₀(1 + |x|)^(−1−ε)`. Since `‖R(θ) − I‖ = 2|sin(θ/2)| ≤ |θ|`,
    /// the bound holds with `κ = |θ₀|`.
    pub fn short_range_rotation(c0: CoinMatrix, theta0: f64, epsilon: f64) -> Result<Self, CoinError> {
        let c0 = c0.ensure_unitary()?;
        let decay = Decay::new(theta0.abs().max(f64::MIN_POSITIVE), epsilon)?;
        Self::from_profile(
            ModelTag::ShortRange,
            Arc::new(RotationTail {
                left: c0,
                right: c0,
                theta0,
                epsilon,
            }),
            Asymptotics::Single(c0),
            decay,
            DEFAULT_VALIDATION_RADIUS,
        )
    }

    /// Rotation tails decaying towards `C₋` on the left and `C₊` on the
    /// right; the origin carries the right-hand family.
    pub fn anisotropic(
        left: CoinMatrix,
        right: CoinMatrix,
        theta0: f64,
        epsilon: f64,
    ) -> Result<Self, CoinError> {
        let left = left.ensure_unitary()?;
        let right = right.ensure_unitary()?;
        let decay = Decay::new(theta0.abs().max(f64::MIN_POSITIVE), epsilon)?;
        Self::from_profile(
            ModelTag::Anisotropic,
            Arc::new(RotationTail {
                left,
                right,
                theta0,
                epsilon,
            }),
            Asymptotics::TwoSided { left, right },
            decay,
            DEFAULT_VALIDATION_RADIUS,
        )
    }

    /// `C₀` everywhere except at the listed sites.
    pub fn custom(
        limit: CoinMatrix,
        overrides: BTreeMap<i64, CoinMatrix>,
        decay: Decay,
    ) -> Result<Self, CoinError> {
        let limit = limit.ensure_unitary()?;
        for (&x, c) in &overrides {
            let defect = c.unitarity_defect();
            if !(defect <= crate::coin::UNITARITY_TOL) {
                return Err(CoinError::SiteNotUnitary { x, defect });
            }
        }
        let radius = overrides
            .keys()
            .map(|x| x.abs())
            .max()
            .unwrap_or(0)
            .max(1);
        Self::from_profile(
            ModelTag::Custom,
            Arc::new(Custom { limit, overrides }),
            Asymptotics::Single(limit),
            decay,
            radius,
        )
    }

    #[inline]
    pub fn coin(&self, x: i64) -> CoinMatrix {
        self.profile.coin(x)
    }

    pub fn tag(&self) -> ModelTag {
        self.tag
    }

    pub fn asymptotics(&self) -> &Asymptotics {
        &self.asymptotics
    }

    pub fn decay(&self) -> Decay {
        self.decay
    }

    pub fn limit_at(&self, x: i64) -> CoinMatrix {
        self.asymptotics.limit_at(x)
    }

    /// Sampled check of `‖C(x) − C_lim(x)‖ ≤ κ|x|^(−1−ε)` for x ≠ 0.
    pub fn validate_short_range(&self, xs: RangeInclusive<i64>) -> Result<(), CoinError> {
        for x in xs.filter(|&x| x != 0) {
            let deviation = (self.coin(x) - self.limit_at(x)).op_norm();
            let bound = self.decay.bound(x);
            if !(deviation <= bound) {
                return Err(CoinError::DecayViolation {
                    x,
                    deviation,
                    bound,
                });
            }
        }
        Ok(())
    }

    pub fn validate_unitary(&self, xs: RangeInclusive<i64>) -> Result<(), CoinError> {
        for x in xs {
            let defect = self.coin(x).unitarity_defect();
            if !(defect <= crate::coin::UNITARITY_TOL) {
                return Err(CoinError::SiteNotUnitary { x, defect });
            }
        }
        Ok(())
    }

    /// True when `C(x)` equals its limit at every site of `xs`.
    pub fn is_asymptotic_on(&self, xs: RangeInclusive<i64>) -> bool {
        xs.into_iter().all(|x| self.coin(x) == self.limit_at(x))
    }

    /// True when the dynamics is translation invariant: a single limit that
    /// is attained at every site of `xs`.
    pub fn is_homogeneous_on(&self, xs: RangeInclusive<i64>) -> bool {
        matches!(self.asymptotics, Asymptotics::Single(_)) && self.is_asymptotic_on(xs)
    }
}

#[derive(Debug)]
struct Homogeneous {
    c0: CoinMatrix,
}

impl CoinProfile for Homogeneous {
    fn coin(&self, _x: i64) -> CoinMatrix {
        self.c0
    }
}

#[derive(Debug)]
struct OneDefect {
    bulk: CoinMatrix,
    origin: CoinMatrix,
}

impl CoinProfile for OneDefect {
    fn coin(&self, x: i64) -> CoinMatrix {
        if x == 0 {
            self.origin
        } else {
            self.bulk
        }
    }
}

#[derive(Debug)]
struct TwoPhase {
    left: CoinMatrix,
    right: CoinMatrix,
    origin: CoinMatrix,
}

impl CoinProfile for TwoPhase {
    fn coin(&self, x: i64) -> CoinMatrix {
        match x.signum() {
            -1 => self.left,
            1 => self.right,
            _ => self.origin,
        }
    }
}

struct Perturbed {
    c0: CoinMatrix,
    perturbation: Box<dyn Fn(i64) -> CoinMatrix + Send + Sync>,
}

impl fmt::Debug for Perturbed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Perturbed").field("c0", &self.c0).finish_non_exhaustive()
    }
}

impl CoinProfile for Perturbed {
    fn coin(&self, x: i64) -> CoinMatrix {
        (self.perturbation)(x) * self.c0
    }
}

#[derive(Debug)]
struct RotationTail {
    left: CoinMatrix,
    right: CoinMatrix,
    theta0: f64,
    epsilon: f64,
}

impl CoinProfile for RotationTail {
    fn coin(&self, x: i64) -> CoinMatrix {
        let base = if x < 0 { self.left } else { self.right };
        let theta = self.theta0 * (1.0 + x.unsigned_abs() as f64).powf(-1.0 - self.epsilon);
        if theta == 0.0 {
            // keeps the zero-perturbation field bitwise equal to the homogeneous one
            base
        } else {
            CoinMatrix::rotation(theta) * base
        }
    }
}

#[derive(Debug)]
struct Custom {
    limit: CoinMatrix,
    overrides: BTreeMap<i64, CoinMatrix>,
}

impl CoinProfile for Custom {
    fn coin(&self, x: i64) -> CoinMatrix {
        self.overrides.get(&x).copied().unwrap_or(self.limit)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hadamard_like() -> CoinMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        CoinMatrix::reflection(s, s).unwrap()
    }

    #[test]
    fn defect_equal_to_bulk_is_homogeneous() {
        let c = hadamard_like();
        let field = CoinField::one_defect(c, c).unwrap();
        assert!(field.is_homogeneous_on(-50..=50));
    }

    #[test]
    fn defect_differs_only_at_origin() {
        let field = CoinField::one_defect(hadamard_like(), CoinMatrix::identity()).unwrap();
        assert_eq!(field.coin(0), CoinMatrix::identity());
        for x in [-3, -1, 1, 2, 1000] {
            assert_eq!(field.coin(x), hadamard_like());
        }
        assert!(field.validate_short_range(-10_000..=10_000).is_ok());
        let tiny = CoinField {
            decay: Decay::new(1e-9, 3.0).unwrap(),
            ..field
        };
        assert!(tiny.validate_short_range(-10_000..=10_000).is_ok());
    }

    #[test]
    fn zero_perturbation_matches_homogeneous_bitwise() {
        let c = hadamard_like();
        let hom = CoinField::homogeneous(c).unwrap();
        let sr = CoinField::short_range_rotation(c, 0.0, 1.0).unwrap();
        let od = CoinField::one_defect(c, c).unwrap();
        for x in -200..=200 {
            assert_eq!(hom.coin(x).0, sr.coin(x).0);
            assert_eq!(hom.coin(x).0, od.coin(x).0);
            assert!((sr.coin(x) - c).op_norm() == 0.0);
        }
    }

    #[test]
    fn rotation_family_obeys_its_bound() {
        let field = CoinField::short_range_rotation(hadamard_like(), 0.3, 1.0).unwrap();
        assert_eq!(field.decay().kappa, 0.3);
        for x in (-10_000i64..=10_000).filter(|&x| x != 0) {
            let theta = 0.3 * (1.0 + x.abs() as f64).powi(-2);
            let dev = (field.coin(x) - hadamard_like()).op_norm();
            assert!(dev <= 2.0 * (0.5 * theta).sin().abs() + 1e-15);
            assert!(dev <= theta + 1e-15);
            assert!(dev <= 0.3 * (x.abs() as f64).powi(-2));
        }
    }

    #[test]
    fn constant_offset_violates_decay() {
        let err = CoinField::short_range(
            hadamard_like(),
            Decay::new(1.0, 1.0).unwrap(),
            |_| CoinMatrix::rotation(0.1),
            DEFAULT_VALIDATION_RADIUS,
        )
        .unwrap_err();
        assert!(matches!(err, CoinError::DecayViolation { .. }));
    }

    #[test]
    fn non_unitary_inputs_are_rejected() {
        let bad = CoinMatrix::from_real([[1.0, 1.0], [0.0, 1.0]]);
        assert!(CoinField::one_defect(bad, CoinMatrix::identity()).is_err());
        assert!(CoinField::one_defect(CoinMatrix::identity(), bad).is_err());
        assert!(CoinField::homogeneous(bad).is_err());
    }

    #[test]
    fn two_phase_uses_sided_limits() {
        let l = CoinMatrix::reflection(0.6, 0.8).unwrap();
        let r = CoinMatrix::reflection(0.8, 0.6).unwrap();
        let f = CoinField::two_phase(l, r, r).unwrap();
        assert_eq!(f.coin(-5), l);
        assert_eq!(f.coin(5), r);
        assert!(f.validate_short_range(-100..=100).is_ok());
        assert!(!f.is_homogeneous_on(-1..=1));
    }

    #[test]
    fn anisotropic_decays_to_each_side() {
        let l = CoinMatrix::reflection(0.6, 0.8).unwrap();
        let r = CoinMatrix::reflection(0.8, 0.6).unwrap();
        let f = CoinField::anisotropic(l, r, 0.4, 0.5).unwrap();
        assert!((f.coin(-4000) - l).op_norm() < 1e-4);
        assert!((f.coin(4000) - r).op_norm() < 1e-4);
    }
}
