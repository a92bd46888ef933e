use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Tolerance used when inverting a generic map by bisection.
pub const BISECTION_TOL: f64 = 1e-13;

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A map supplied as a closure together with a Lipschitz constant the caller vouches for.
#[derive(Clone)]
pub struct GenericMap {
    label: String,
    forward: RealFn,
    inverse: Option<RealFn>,
    lipschitz: f64,
}

impl GenericMap {
    pub fn new<F>(label: impl Into<String>, forward: F, lipschitz: f64) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            label: label.into(),
            forward: Arc::new(forward),
            inverse: None,
            lipschitz,
        }
    }

    pub fn with_inverse<G>(mut self, inverse: G) -> Self
    where
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.inverse = Some(Arc::new(inverse));
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl fmt::Debug for GenericMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GenericMap")
            .field("label", &self.label)
            .field("lipschitz", &self.lipschitz)
            .field("has_inverse", &self.inverse.is_some())
            .finish()
    }
}

/// One increasing branch map of `[0, 1]` into itself.
#[derive(Debug, Clone)]
pub enum Contraction {
    /// `x ↦ a·x + b`
    Affine { a: f64, b: f64 },
    /// `x ↦ α·x² + β·x + γ`
    Quadratic { alpha: f64, beta: f64, gamma: f64 },
    /// `x ↦ s·log_base(x + 1) + t`
    LogExp { s: f64, base: f64, t: f64 },
    Generic(GenericMap),
}

impl PartialEq for Contraction {
    fn eq(&self, other: &Self) -> bool {
        use Contraction::*;
        match (self, other) {
            (Affine { a, b }, Affine { a: a2, b: b2 }) => a == a2 && b == b2,
            (
                Quadratic { alpha, beta, gamma },
                Quadratic {
                    alpha: a2,
                    beta: b2,
                    gamma: g2,
                },
            ) => alpha == a2 && beta == b2 && gamma == g2,
            (LogExp { s, base, t }, LogExp { s: s2, base: b2, t: t2 }) => {
                s == s2 && base == b2 && t == t2
            }
            (Generic(g1), Generic(g2)) => Arc::ptr_eq(&g1.forward, &g2.forward),
            _ => false,
        }
    }
}

impl Contraction {
    pub fn affine(a: f64, b: f64) -> Self {
        Contraction::Affine { a, b }
    }

    /// `ρ_{j,N}: x ↦ (x + j) / N`.
    pub fn rho(j: usize, n: usize) -> Self {
        let n = n as f64;
        Contraction::Affine {
            a: 1.0 / n,
            b: j as f64 / n,
        }
    }

    pub fn quadratic(alpha: f64, beta: f64, gamma: f64) -> Self {
        Contraction::Quadratic { alpha, beta, gamma }
    }

    pub fn log_exp(s: f64, base: f64, t: f64) -> Self {
        Contraction::LogExp { s, base, t }
    }

    pub fn generic(map: GenericMap) -> Self {
        Contraction::Generic(map)
    }

    pub fn family(&self) -> &'static str {
        match self {
            Contraction::Affine { .. } => "affine",
            Contraction::Quadratic { .. } => "quadratic",
            Contraction::LogExp { .. } => "logexp",
            Contraction::Generic(_) => "generic",
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Contraction::Affine { a, b } => a * x + b,
            Contraction::Quadratic { alpha, beta, gamma } => (alpha * x + beta) * x + gamma,
            Contraction::LogExp { s, base, t } => s * (x + 1.0).ln() / base.ln() + t,
            Contraction::Generic(g) => (g.forward)(x),
        }
    }

    /// Inverse on the image of `[0, 1]`.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        match self {
            Contraction::Affine { a, b } => Ok((y - b) / a),
            Contraction::Quadratic { alpha, beta, gamma } => {
                // Root of αx² + βx − c with β > 0, in the cancellation-free form.
                let c = y - gamma;
                if *alpha == 0.0 {
                    return Ok(c / beta);
                }
                let disc = (beta * beta + 4.0 * alpha * c).max(0.0);
                let denom = beta + disc.sqrt();
                if denom == 0.0 {
                    return Err(Error::NumericInverse(format!(
                        "quadratic inverse undefined at y = {y}"
                    )));
                }
                Ok(2.0 * c / denom)
            }
            Contraction::LogExp { s, base, t } => Ok(base.powf((y - t) / s) - 1.0),
            Contraction::Generic(g) => match &g.inverse {
                Some(inv) => Ok(inv(y)),
                None => bisect_inverse(&*g.forward, y),
            },
        }
    }

    /// Lipschitz constant on `[0, 1]` in closed form; the supplied value for generic maps.
    pub fn lipschitz(&self) -> f64 {
        match self {
            Contraction::Affine { a, .. } => a.abs(),
            Contraction::Quadratic { alpha, beta, .. } => beta.abs().max((2.0 * alpha + beta).abs()),
            Contraction::LogExp { s, base, .. } => (s / base.ln()).abs(),
            Contraction::Generic(g) => g.lipschitz,
        }
    }

    pub fn is_increasing(&self) -> bool {
        match self {
            Contraction::Affine { a, .. } => *a > 0.0,
            // the derivative is affine, so positivity at both endpoints suffices
            Contraction::Quadratic { alpha, beta, .. } => *beta > 0.0 && 2.0 * alpha + beta > 0.0,
            Contraction::LogExp { s, base, .. } => *s > 0.0 && *base > 1.0,
            Contraction::Generic(g) => {
                let samples = 256;
                (0..samples).all(|i| {
                    let x0 = i as f64 / samples as f64;
                    let x1 = (i + 1) as f64 / samples as f64;
                    (g.forward)(x1) > (g.forward)(x0)
                })
            }
        }
    }

    /// `(τ(0), τ(1))`.
    pub fn image(&self) -> (f64, f64) {
        (self.eval(0.0), self.eval(1.0))
    }

    /// Attracting fixed point, found by iteration from 0.
    pub fn fixed_point(&self) -> f64 {
        let mut x = 0.0;
        for _ in 0..100_000 {
            let next = self.eval(x);
            if (next - x).abs() < 1e-14 {
                return next;
            }
            x = next;
        }
        x
    }
}

fn bisect_inverse(f: &(dyn Fn(f64) -> f64 + Send + Sync), y: f64) -> Result<f64> {
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let (flo, fhi) = (f(lo), f(hi));
    let slack = 1e-12;
    if !(y >= flo - slack && y <= fhi + slack) {
        return Err(Error::NumericInverse(format!(
            "value {y} not bracketed by [{flo}, {fhi}]"
        )));
    }
    if y <= flo {
        return Ok(0.0);
    }
    if y >= fhi {
        return Ok(1.0);
    }
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if f(mid) <= y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
