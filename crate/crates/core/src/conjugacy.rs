//! The order-preserving homeomorphism `φ` of `[0, 1]` with `φ ∘ τ̃_i = τ_i ∘ φ`.
//!
//! `φ` is evaluated by digit recursion: `x = τ̃_{d_1} ∘ … ∘ τ̃_{d_K}(·)` in the source
//! system gives `φ(x) ≈ τ_{d_1} ∘ … ∘ τ_{d_K}(0)` in the target, with error at most
//! `c_target^K`. The grid iteration of the defining operator is kept as an independent
//! oracle.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ifs::{IFSystem, Membership, Word};

/// A value together with a bound on its truncation error. Rounding in the digit
/// extraction is not included; near points with long runs of expanding branches it
/// can dominate, since `φ` is only Hölder continuous.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bounded {
    pub value: f64,
    pub error_bound: f64,
}

#[derive(Debug, Clone)]
pub struct Conjugacy {
    source: IFSystem,
    target: IFSystem,
}

impl Conjugacy {
    /// Both systems must pass validation and have the same number of branches.
    pub fn new(source: IFSystem, target: IFSystem) -> Result<Self> {
        if source.n() != target.n() {
            return Err(Error::BranchCountMismatch {
                source_n: source.n(),
                target_n: target.n(),
            });
        }
        for system in [&source, &target] {
            let report = system.validate();
            if !report.passed() {
                return Err(Error::InvalidSystem(format!(
                    "{}: {}",
                    system.name(),
                    report.messages().join("; ")
                )));
            }
        }
        Ok(Self { source, target })
    }

    pub fn source(&self) -> &IFSystem {
        &self.source
    }

    pub fn target(&self) -> &IFSystem {
        &self.target
    }

    pub fn n(&self) -> usize {
        self.source.n()
    }

    /// `φ(x)` for `x ∈ [0, 1]`; `φ(0) = 0` and `φ(1) = 1` exactly.
    pub fn phi(&self, x: f64, depth: usize) -> Result<Bounded> {
        transport(&self.source, &self.target, x, depth)
    }

    /// `φ⁻¹(x)`, with error at most `c_source^K`.
    pub fn phi_inverse(&self, x: f64, depth: usize) -> Result<Bounded> {
        transport(&self.target, &self.source, x, depth)
    }

    /// `φ̃(x) = φ({x}) + ⌊x⌋`.
    pub fn phi_extended(&self, x: f64, depth: usize) -> Result<Bounded> {
        let k = x.floor();
        let b = self.phi(x - k, depth)?;
        Ok(Bounded {
            value: b.value + k,
            error_bound: b.error_bound,
        })
    }

    /// `φ̃⁻¹(x) = φ⁻¹({x}) + ⌊x⌋`.
    pub fn phi_inverse_extended(&self, x: f64, depth: usize) -> Result<Bounded> {
        let k = x.floor();
        let b = self.phi_inverse(x - k, depth)?;
        Ok(Bounded {
            value: b.value + k,
            error_bound: b.error_bound,
        })
    }

    /// `x ♯ y = φ̃(φ̃⁻¹(x) + φ̃⁻¹(y))`. The bound propagates the inverse errors only
    /// as a heuristic, since `φ` is merely Hölder continuous.
    pub fn sharp_add(&self, x: f64, y: f64, depth: usize) -> Result<Bounded> {
        let u = self.phi_inverse_extended(x, depth)?;
        let v = self.phi_inverse_extended(y, depth)?;
        let w = self.phi_extended(u.value + v.value, depth)?;
        Ok(Bounded {
            value: w.value,
            error_bound: w.error_bound + u.error_bound + v.error_bound,
        })
    }

    /// `φ(x)` together with certified membership of `x` in the source limit set.
    pub fn phi_on_core(&self, x: f64, depth: usize) -> Result<(Bounded, Membership)> {
        let membership = self.source.in_limit_set(x, depth)?;
        Ok((self.phi(x, depth)?, membership))
    }

    /// `(x, φ(x))` at `samples` uniform points of `[lo, hi]` using `φ̃`.
    pub fn plot_data(&self, lo: f64, hi: f64, samples: usize, depth: usize) -> Result<Vec<(f64, f64)>> {
        if samples < 2 || !(hi > lo) {
            return Err(Error::InvalidArgument(
                "plot needs at least two samples on a nonempty range".into(),
            ));
        }
        (0..samples)
            .map(|i| {
                let x = lo + (hi - lo) * i as f64 / (samples - 1) as f64;
                Ok((x, self.phi_extended(x, depth)?.value))
            })
            .collect()
    }

    /// `J` iterations of `(F f)(x) = τ_i(f(τ̃_i⁻¹(x)))` on `x ∈ [τ̃_i(0), τ̃_i(1))`,
    /// `(F f)(1) = 1`, starting from the identity on `M + 1` uniform nodes and reading
    /// off-grid values by linear interpolation.
    pub fn fixed_point_iterate(&self, grid: usize, iterations: usize) -> Result<GridApproximation> {
        if grid < 2 {
            return Err(Error::InvalidArgument("grid needs at least 2 intervals".into()));
        }
        let nodes: Vec<f64> = (0..=grid).map(|i| i as f64 / grid as f64).collect();
        // the branch and pre-image of each node do not change between iterations
        let pulls = nodes
            .iter()
            .map(|&x| {
                if x >= 1.0 {
                    return Ok(None);
                }
                let b = self.source.branch_of(x);
                Ok(Some((b, self.source.map(b).inverse(x)?.clamp(0.0, 1.0))))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut values = nodes.clone();
        for _ in 0..iterations {
            let current = GridApproximation {
                values: values.clone(),
                grid_modulus: 0.0,
                iterations: 0,
            };
            values = pulls
                .iter()
                .map(|pull| match *pull {
                    None => 1.0,
                    Some((b, u)) => self.target.map(b).eval(current.eval(u)),
                })
                .collect();
        }
        let grid_modulus = values.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        Ok(GridApproximation {
            values,
            grid_modulus,
            iterations,
        })
    }

    /// `max_i |φ(τ̃_i(x)) − τ_i(φ(x))|` over the given points.
    pub fn conjugation_defect(&self, points: &[f64], depth: usize) -> Result<f64> {
        let mut worst = 0.0_f64;
        for &x in points {
            let fx = self.phi(x, depth)?.value;
            for i in 0..self.n() {
                let lhs = self.phi(self.source.map(i).eval(x), depth)?.value;
                let rhs = self.target.map(i).eval(fx);
                worst = worst.max((lhs - rhs).abs());
            }
        }
        Ok(worst)
    }
}

/// Digit-codes `x` in `from` and rebuilds it in `to`.
fn transport(from: &IFSystem, to: &IFSystem, x: f64, depth: usize) -> Result<Bounded> {
    if depth == 0 {
        return Err(Error::InvalidArgument("depth must be positive".into()));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidArgument(format!(
            "conjugacy is defined on [0,1], got {x}"
        )));
    }
    let error_bound = to.c_max().powi(depth as i32);
    if x == 1.0 {
        return Ok(Bounded {
            value: 1.0,
            error_bound: 0.0,
        });
    }
    let digits = from.digit_code(x, depth)?;
    let value = to.word_apply(&Word::from_digits(&digits), 0.0)?;
    Ok(Bounded { value, error_bound })
}

/// Node values of the grid iteration on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridApproximation {
    pub values: Vec<f64>,
    /// Largest jump between neighbouring node values.
    pub grid_modulus: f64,
    pub iterations: usize,
}

impl GridApproximation {
    pub fn grid(&self) -> usize {
        self.values.len() - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        let m = self.grid();
        let t = x.clamp(0.0, 1.0) * m as f64;
        let i = (t.floor() as usize).min(m - 1);
        let w = t - i as f64;
        if w == 0.0 {
            return self.values[i];
        }
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }
}
