//! Bounded drifts `b: R^d -> R^d` with declared regularity.

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Octaves `2^k` of the Weierstrass-type drift, `k` in `LOWEST_OCTAVE..LOWEST_OCTAVE + OCTAVES`.
const LOWEST_OCTAVE: i32 = -6;
const OCTAVES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DriftKind {
    Zero,
    /// `b(x) = (c, ..., c)`.
    Constant { value: f64 },
    /// `b(x)_i = sin(x_i)`.
    Sin,
    /// `b(x)_i = sign(x_i) min(|x_i|^beta, 1) phi(|x_i|)`, with `phi` a smooth
    /// cutoff equal to one on `[0, 2]` and zero beyond `3`.
    Holder { beta: f64 },
    /// `b(x)_i = Z^(-1) sum_k 2^(-k beta) sin(2^k x_i + phase_k)` over 20 octaves `k = -6..13`,
    /// with phases drawn uniformly from a fixed-seed stream, a lacunary
    /// series that is exactly `beta`-Hölder at every point, with `|b_i| <= 1`.
    Weierstrass { beta: f64 },
    /// `b(x) = (-x_2, x_1) / (1 + |x|)` in two dimensions.
    Rotation,
}

/// A named drift together with its sup-norm and Hölder exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftSpec {
    pub name: String,
    pub kind: DriftKind,
    pub dim: usize,
    pub sup_norm: f64,
    pub beta: Option<f64>,
    pub metadata: String,
}

fn smooth_cutoff(r: f64) -> f64 {
    if r <= 2.0 {
        1.0
    } else if r >= 3.0 {
        0.0
    } else {
        let s = r - 2.0;
        1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
    }
}

fn holder_1d(beta: f64, x: f64) -> f64 {
    let r = x.abs();
    x.signum() * r.powf(beta).min(1.0) * smooth_cutoff(r)
}

fn weierstrass_phases() -> &'static [(f64, f64); OCTAVES] {
    static PHASES: OnceLock<[(f64, f64); OCTAVES]> = OnceLock::new();
    PHASES.get_or_init(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        std::array::from_fn(|_| (rng.random::<f64>() * std::f64::consts::TAU).sin_cos())
    })
}

fn weierstrass_1d(beta: f64, x: f64) -> f64 {
    let (mut s, mut c) = (x * 2f64.powi(LOWEST_OCTAVE)).sin_cos();
    let ratio = 2f64.powf(-beta);
    let mut weight = 1.0;
    let mut total = 0.0;
    let mut norm = 0.0;
    for &(ps, pc) in weierstrass_phases() {
        total += weight * (s * pc + c * ps);
        norm += weight;
        weight *= ratio;
        (s, c) = (2.0 * s * c, c * c - s * s);
    }
    total / norm
}

impl DriftSpec {
    pub fn zero(dim: usize) -> Self {
        Self::build(DriftKind::Zero, dim)
    }

    pub fn constant(value: f64, dim: usize) -> Self {
        Self::build(DriftKind::Constant { value }, dim)
    }

    pub fn sin(dim: usize) -> Self {
        Self::build(DriftKind::Sin, dim)
    }

    pub fn holder(beta: f64, dim: usize) -> Result<Self> {
        check_beta(beta)?;
        Ok(Self::build(DriftKind::Holder { beta }, dim))
    }

    pub fn weierstrass(beta: f64, dim: usize) -> Result<Self> {
        check_beta(beta)?;
        Ok(Self::build(DriftKind::Weierstrass { beta }, dim))
    }

    pub fn rotation() -> Self {
        Self::build(DriftKind::Rotation, 2)
    }

    fn build(kind: DriftKind, dim: usize) -> Self {
        let root_d = (dim as f64).sqrt();
        let (name, sup_norm, beta, metadata) = match kind {
            DriftKind::Zero => ("zero".to_string(), 0.0, Some(1.0), "b = 0"),
            DriftKind::Constant { value } => (
                format!("const:{value}"),
                value.abs() * root_d,
                Some(1.0),
                "constant vector",
            ),
            DriftKind::Sin => ("sin".to_string(), root_d, Some(1.0), "componentwise sin, Lipschitz 1"),
            DriftKind::Holder { beta } => (
                format!("holder:{beta}"),
                root_d,
                Some(beta),
                "sign(x)|x|^beta clipped at 1, cut off smoothly on [2,3]; singular only at 0",
            ),
            DriftKind::Weierstrass { beta } => (
                format!("weierstrass:{beta}"),
                root_d,
                Some(beta),
                "lacunary series over octaves 2^-6..2^13, beta-Holder at every point",
            ),
            DriftKind::Rotation => (
                "rotation".to_string(),
                1.0,
                Some(1.0),
                "(-x2, x1)/(1+|x|), d = 2",
            ),
        };
        Self {
            name,
            kind,
            dim,
            sup_norm,
            beta,
            metadata: metadata.to_string(),
        }
    }

    /// Parses `zero`, `const:c`, `sin`, `holder:beta`, `weierstrass:beta`, `rotation`.
    pub fn parse(spec: &str, dim: usize) -> Result<Self> {
        if dim == 0 {
            return invalid("dimension must be at least 1");
        }
        let (head, arg) = match spec.split_once(':') {
            Some((h, a)) => (h.trim(), Some(a.trim())),
            None => (spec.trim(), None),
        };
        let number = |what: &str| -> Result<f64> {
            match arg.map(str::parse::<f64>) {
                Some(Ok(v)) if v.is_finite() => Ok(v),
                _ => invalid(format!("drift {what:?} needs a numeric argument, got {spec:?}")),
            }
        };
        match head {
            "zero" => Ok(Self::zero(dim)),
            "const" | "constant" => Ok(Self::constant(number(head)?, dim)),
            "sin" => Ok(Self::sin(dim)),
            "holder" => Self::holder(number(head)?, dim),
            "weierstrass" => Self::weierstrass(number(head)?, dim),
            "rotation" if dim == 2 => Ok(Self::rotation()),
            "rotation" => invalid("the rotation drift is two-dimensional"),
            _ => invalid(format!("unknown drift {spec:?}")),
        }
    }

    /// Writes `b(x)` into `out`.
    #[inline]
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        match self.kind {
            DriftKind::Zero => out.fill(0.0),
            DriftKind::Constant { value } => out.fill(value),
            DriftKind::Sin => {
                for (o, v) in out.iter_mut().zip(x) {
                    *o = v.sin();
                }
            }
            DriftKind::Holder { beta } => {
                for (o, v) in out.iter_mut().zip(x) {
                    *o = holder_1d(beta, *v);
                }
            }
            DriftKind::Weierstrass { beta } => {
                for (o, v) in out.iter_mut().zip(x) {
                    *o = weierstrass_1d(beta, *v);
                }
            }
            DriftKind::Rotation => {
                let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                out[0] = -x[1] / (1.0 + r);
                out[1] = x[0] / (1.0 + r);
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(x, &mut out);
        out
    }

    /// Scalar drift for one-dimensional computations.
    #[inline]
    pub fn eval_1d(&self, x: f64) -> f64 {
        let mut out = [0.0];
        self.eval_into(&[x], &mut out);
        out[0]
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, DriftKind::Zero | DriftKind::Constant { .. })
    }

    pub fn require_beta(&self) -> Result<f64> {
        match self.beta {
            Some(b) => Ok(b),
            None => invalid(format!("drift {} does not declare a Holder exponent", self.name)),
        }
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta <= 1.0 {
        Ok(())
    } else {
        invalid(format!("Holder exponent must lie in (0, 1], got {beta}"))
    }
}

/// The drifts shipped with the crate for dimension `dim`.
pub fn builtin_drifts(dim: usize) -> Vec<DriftSpec> {
    let mut v = vec![
        DriftSpec::zero(dim),
        DriftSpec::constant(0.5, dim),
        DriftSpec::sin(dim),
        DriftSpec::build(DriftKind::Holder { beta: 0.4 }, dim),
        DriftSpec::build(DriftKind::Weierstrass { beta: 0.4 }, dim),
    ];
    if dim == 2 {
        v.push(DriftSpec::rotation());
    }
    v
}
