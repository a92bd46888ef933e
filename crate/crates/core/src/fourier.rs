//! Spectra of the homogeneous Cantor measures `μ̃` with digits `A` and base `N`, and
//! their transport through a conjugacy.
//!
//! `μ̂(t) = ∫ e^{2πitx} dμ̃(x) = Π_{k≥0} κ_A(t/N^k)` with `κ_A(t) = p^{−1} Σ_a e^{2πita/N}`.
//! Gram entries follow `⟨f|g⟩ = ∫ f·conj(g)`, so `⟨e_λ|e_λ'⟩ = μ̂(λ − λ')`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::{BigRational, Rational64};
use num_traits::{CheckedAdd, CheckedMul, One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::budget::Budget;
use crate::cell::quadrature_nodes;
use crate::conjugacy::Conjugacy;
use crate::error::{Error, Result};
use crate::ifs::Contraction;
use crate::numeric::{cis_turns, CompensatedSum};

/// Threshold on `‖H*H − I‖_max` for calling `H_AL` unitary.
pub const UNITARY_TOL: f64 = 1e-10;

/// Hard cap on the number of factors taken in the product for `μ̂`.
pub const MAX_PRODUCT_TERMS: usize = 4096;

fn rational_to_f64(r: &Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn big(r: &Rational64) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

fn fmt_big(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `"3"`, `"-2/3"` or `"0.75"` as an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational64> {
    let text = text.trim();
    let bad = || Error::InvalidArgument(format!("not a rational number: {text:?}"));
    if let Some((n, d)) = text.split_once('/') {
        let n: i64 = n.trim().parse().map_err(|_| bad())?;
        let d: i64 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        return Ok(Rational64::new(n, d));
    }
    if let Some((int, frac)) = text.split_once('.') {
        if frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) || frac.len() > 15 {
            return Err(bad());
        }
        let negative = int.trim().starts_with('-');
        let int: i64 = if int.is_empty() || int == "-" {
            0
        } else {
            int.parse().map_err(|_| bad())?
        };
        let scale = 10i64.pow(frac.len() as u32);
        let frac: i64 = frac.parse().map_err(|_| bad())?;
        let magnitude = int.abs().checked_mul(scale).and_then(|v| v.checked_add(frac)).ok_or_else(bad)?;
        let signed = if negative { -magnitude } else { magnitude };
        return Ok(Rational64::new(signed, scale));
    }
    text.parse::<i64>().map(Rational64::from_integer).map_err(|_| bad())
}

/// Digit set `A ⊂ ℤ`, base `N` and candidate dual set `L ⊂ ℚ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpectralPair {
    n: i64,
    a: Vec<i64>,
    l: Vec<Rational64>,
}

impl SpectralPair {
    /// `A` and `L` are sorted and deduplicated; both must contain 0 and have equal size.
    pub fn new(n: i64, a: Vec<i64>, l: Vec<Rational64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("base N must be at least 2, got {n}")));
        }
        let a: Vec<i64> = a.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let l: Vec<Rational64> = l.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        if !a.contains(&0) {
            return Err(Error::InvalidArgument("A must contain 0".into()));
        }
        if !l.contains(&Rational64::zero()) {
            return Err(Error::InvalidArgument("L must contain 0".into()));
        }
        if a.len() != l.len() {
            return Err(Error::InvalidArgument(format!(
                "|A| = {} differs from |L| = {}",
                a.len(),
                l.len()
            )));
        }
        if a.iter().any(|x| x.abs() > 1 << 40) || l.iter().any(|x| x.numer().abs() > 1 << 40 || *x.denom() > 1 << 40) {
            return Err(Error::InvalidArgument("digit magnitudes above 2^40 are not supported".into()));
        }
        Ok(Self { n, a, l })
    }

    pub fn integral(n: i64, a: Vec<i64>, l: Vec<i64>) -> Result<Self> {
        Self::new(n, a, l.into_iter().map(Rational64::from_integer).collect())
    }

    pub fn n(&self) -> i64 {
        self.n
    }

    pub fn a(&self) -> &[i64] {
        &self.a
    }

    pub fn l(&self) -> &[Rational64] {
        &self.l
    }

    pub fn p(&self) -> usize {
        self.a.len()
    }

    /// Whether every element of `L` is an integer.
    pub fn is_integral(&self) -> bool {
        self.l.iter().all(|x| x.is_integer())
    }

    /// `κ_A(t) = p^{−1} Σ_a e^{2πi t a / N}`.
    pub fn kappa(&self, t: f64) -> Complex64 {
        kappa(&self.a, self.n, t)
    }

    /// `m_0(t) = p^{−1/2} Σ_a e^{2πi t a}`.
    pub fn m0(&self, t: f64) -> Complex64 {
        let s: Complex64 = self.a.iter().map(|&a| cis_turns(t * a as f64)).sum();
        s / (self.p() as f64).sqrt()
    }

    /// `μ̂(t)`, truncated once the certified tail bound falls below `tol`.
    pub fn mu_hat(&self, t: f64, tol: f64) -> MuHat {
        mu_hat(&self.a, self.n, t, tol)
    }

    /// `H_AL = p^{−1/2} (e^{2πi a l / N})_{a,l}`.
    pub fn h_matrix(&self) -> Vec<Vec<Complex64>> {
        let s = 1.0 / (self.p() as f64).sqrt();
        self.a
            .iter()
            .map(|&a| {
                self.l
                    .iter()
                    .map(|l| cis_turns(rational_to_f64(&(l * a / self.n))) * s)
                    .collect()
            })
            .collect()
    }

    pub fn check_dual_set(&self) -> DualCheck {
        let h = self.h_matrix();
        let p = self.p();
        let mut deviation = 0.0_f64;
        for r in 0..p {
            for c in 0..p {
                let e: Complex64 = (0..p).map(|j| h[j][r].conj() * h[j][c]).sum();
                let target = if r == c { 1.0 } else { 0.0 };
                deviation = deviation.max((e - target).norm());
            }
        }
        DualCheck {
            unitary: deviation < UNITARY_TOL,
            deviation,
        }
    }

    /// `Λ_k = {l_0 + N l_1 + … + N^k l_k}`, with the order at which each element first
    /// appears.
    pub fn lambda_set(&self, k_max: usize, budget: Budget) -> Result<Spectrum> {
        budget.check_power(self.p() as u64, k_max as u32 + 1)?;
        let mut first_order: BTreeMap<Rational64, usize> = BTreeMap::new();
        let mut level: Vec<Rational64> = vec![Rational64::zero()];
        let mut power = Rational64::one();
        for order in 0..=k_max {
            let mut next = Vec::with_capacity(level.len() * self.p());
            for base in &level {
                for l in &self.l {
                    let v = base
                        .checked_add(&l.checked_mul(&power).ok_or_else(overflow)?)
                        .ok_or_else(overflow)?;
                    first_order.entry(v).or_insert(order);
                    next.push(v);
                }
            }
            level = next;
            power = power.checked_mul(&Rational64::from_integer(self.n)).ok_or_else(overflow)?;
        }
        Ok(Spectrum {
            k_max,
            elements: first_order,
        })
    }

    /// Gram matrix `(μ̂(λ_r − λ_c))` over the given frequencies.
    pub fn fourier_gram(&self, lambdas: &[Rational64], tol: f64) -> FourierGram {
        let matrix: Vec<Vec<Complex64>> = lambdas
            .par_iter()
            .map(|lr| {
                lambdas
                    .iter()
                    .map(|lc| {
                        if lr == lc {
                            Complex64::new(1.0, 0.0)
                        } else {
                            self.mu_hat(rational_to_f64(&(lr - lc)), tol).value
                        }
                    })
                    .collect()
            })
            .collect();
        FourierGram::new(lambdas, matrix)
    }

    /// Partial sums of `Q(t) = Σ_{λ∈Λ} |μ̂(t − λ)|²` over `Λ_0 ⊂ … ⊂ Λ_{k_max}`.
    pub fn q_function(&self, t: f64, k_max: usize, tol: f64, budget: Budget) -> Result<QValue> {
        let spectrum = self.lambda_set(k_max, budget)?;
        Ok(self.q_from_spectrum(&spectrum, t, tol))
    }

    pub fn q_from_spectrum(&self, spectrum: &Spectrum, t: f64, tol: f64) -> QValue {
        let mut by_order = vec![CompensatedSum::new(); spectrum.k_max + 1];
        for (lambda, &order) in &spectrum.elements {
            let v = self.mu_hat(t - rational_to_f64(lambda), tol).value.norm_sqr();
            by_order[order].add(Complex64::new(v, 0.0));
        }
        let mut partial_sums = Vec::with_capacity(by_order.len());
        let mut running = 0.0;
        let mut last_increment = 0.0;
        for s in &by_order {
            last_increment = s.value().re;
            running += last_increment;
            partial_sums.push(running);
        }
        QValue {
            t,
            k_max: spectrum.k_max,
            value: running,
            last_increment,
            partial_sums,
        }
    }

    /// `(R_L f)(x) = p^{−1} Σ_{l∈L} |m_0((x − l)/N)|² f((x − l)/N)`.
    pub fn ruelle_apply<F: Fn(f64) -> f64>(&self, f: F, x: f64) -> f64 {
        let n = self.n as f64;
        let s: f64 = self
            .l
            .iter()
            .map(|l| {
                let y = (x - rational_to_f64(l)) / n;
                self.m0(y).norm_sqr() * f(y)
            })
            .sum();
        s / self.p() as f64
    }

    /// `gcd` of the pairwise differences of `A`; `ξ` is extremal (`|m_0(ξ)|² = p`)
    /// exactly when `ξ·d ∈ ℤ`.
    pub fn extremal_denominator(&self) -> i64 {
        self.a.iter().fold(0i64, |g, &a| g.gcd(&a))
    }

    /// Finds `L`-cycles of `σ_b(x) = (x − b)/N` whose points are extremal for `m_0`.
    pub fn l_cycle_search(&self, mode: CycleMode, k_max: usize, budget: Budget) -> Result<Vec<Cycle>> {
        if k_max == 0 {
            return Err(Error::InvalidArgument("cycle length bound must be positive".into()));
        }
        let d = self.extremal_denominator();
        let mut cycles = vec![Cycle::trivial(mode)];
        if d == 0 {
            // A = {0}: every point is extremal and only the trivial cycle is meaningful
            return Ok(cycles);
        }
        let labels: Vec<BigRational> = self.l.iter().map(big).collect();
        let n = BigRational::from_integer(BigInt::from(self.n));
        let d_big = BigRational::from_integer(BigInt::from(d));
        let extremal = |x: &BigRational| (x * &d_big).is_integer();
        match mode {
            CycleMode::Mod1 => {
                let nodes: Vec<BigRational> = (0..d)
                    .map(|j| BigRational::new(BigInt::from(j), BigInt::from(d)))
                    .collect();
                // edges ξ' → ξ labelled b with ξ ≡ (ξ' − b)/N (mod 1)
                let mut edges: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nodes.len()];
                for (from, xi) in nodes.iter().enumerate() {
                    for (li, b) in labels.iter().enumerate() {
                        let image = frac(&((xi - b) / &n));
                        if extremal(&image) {
                            let to = (&image * &d_big).to_integer().to_usize().expect("node index");
                            edges[from].push((to, li));
                        }
                    }
                }
                budget.check(nodes.len() as u128 * labels.len() as u128)?;
                let mut found = Vec::new();
                for start in 0..nodes.len() {
                    let mut path = vec![start];
                    let mut pairing = Vec::new();
                    simple_cycles(&edges, start, k_max, &mut path, &mut pairing, &mut found);
                }
                for (path, pairing) in found {
                    let is_trivial = path == [0] && pairing.iter().all(|&li| labels[li].is_zero());
                    if is_trivial {
                        continue;
                    }
                    cycles.push(Cycle {
                        points: path.iter().map(|&i| nodes[i].clone()).collect(),
                        pairing: pairing.iter().map(|&li| labels[li].clone()).collect(),
                        mode,
                    });
                }
            }
            CycleMode::RealFixedPoint => {
                budget.check_power(labels.len() as u64, k_max as u32)?;
                for len in 1..=k_max {
                    for seq in sequences(labels.len(), len) {
                        if !is_canonical_primitive(&seq) {
                            continue;
                        }
                        // ξ_{j+1} = σ_{b_j}(ξ_j); the composition of all k maps is
                        // x ↦ x/N^k + y with y its value at 0
                        let mut y = BigRational::zero();
                        let mut scale = BigRational::one();
                        for &li in &seq {
                            y = (y - &labels[li]) / &n;
                            scale /= &n;
                        }
                        let mut cur = y / (BigRational::one() - &scale);
                        let mut points = Vec::with_capacity(len);
                        for &li in &seq {
                            points.push(cur.clone());
                            cur = (cur - &labels[li]) / &n;
                        }
                        if points.iter().all(extremal) {
                            let trivial = seq.iter().all(|&li| labels[li].is_zero());
                            if trivial {
                                continue;
                            }
                            cycles.push(Cycle {
                                points,
                                pairing: seq.iter().map(|&li| labels[li].clone()).collect(),
                                mode,
                            });
                        }
                    }
                }
            }
        }
        Ok(cycles)
    }

    /// Whether the digits of the linear system `ρ_{a,N}` are exactly the core maps of
    /// `system`.
    pub fn matches_core_maps(&self, system: &crate::ifs::IFSystem) -> bool {
        let core = system.core_maps();
        core.len() == self.p()
            && core.iter().zip(&self.a).all(|(m, &a)| match m {
                Contraction::Affine { a: slope, b } => {
                    (slope - 1.0 / self.n as f64).abs() < 1e-15
                        && (b - a as f64 / self.n as f64).abs() < 1e-15
                }
                _ => false,
            })
    }
}

fn overflow() -> Error {
    Error::InvalidArgument("spectrum element overflows 64-bit rationals".into())
}

fn frac(x: &BigRational) -> BigRational {
    x - x.floor()
}

/// Depth-first search for simple cycles through `start` using only nodes `≥ start`.
fn simple_cycles(
    edges: &[Vec<(usize, usize)>],
    start: usize,
    k_max: usize,
    path: &mut Vec<usize>,
    pairing: &mut Vec<usize>,
    found: &mut Vec<(Vec<usize>, Vec<usize>)>,
) {
    let here = *path.last().expect("nonempty path");
    for &(to, label) in &edges[here] {
        if to == start {
            let mut p = pairing.clone();
            p.push(label);
            found.push((path.clone(), p));
        } else if to > start && !path.contains(&to) && path.len() < k_max {
            path.push(to);
            pairing.push(label);
            simple_cycles(edges, start, k_max, path, pairing, found);
            path.pop();
            pairing.pop();
        }
    }
}

/// All sequences of length `len` over `0..base`.
fn sequences(base: usize, len: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = base.pow(len as u32);
    (0..total).map(move |mut code| {
        let mut seq = vec![0; len];
        for slot in seq.iter_mut().rev() {
            *slot = code % base;
            code /= base;
        }
        seq
    })
}

/// Lexicographically least among its rotations and not a power of a shorter word.
fn is_canonical_primitive(seq: &[usize]) -> bool {
    let k = seq.len();
    (1..k).all(|r| {
        let rotated: Vec<usize> = seq[r..].iter().chain(&seq[..r]).copied().collect();
        rotated.as_slice() > seq
    })
}

/// `κ_A(t)` for digits `a` and base `n`.
pub fn kappa(a: &[i64], n: i64, t: f64) -> Complex64 {
    let s: Complex64 = a.iter().map(|&d| cis_turns(t * d as f64 / n as f64)).sum();
    s / a.len() as f64
}

/// `μ̂(t)` for digits `a` and base `n`; see [`SpectralPair::mu_hat`].
pub fn mu_hat(a: &[i64], n: i64, t: f64, tol: f64) -> MuHat {
    let amax = a.iter().map(|x| x.abs()).max().unwrap_or(0) as f64;
    let nf = n as f64;
    // Σ_{k≥K} |κ(t/N^k) − 1| ≤ 2π|t|·max|a| / (N^K (N − 1)), and |κ| ≤ 1
    let tail = |k: usize| 2.0 * std::f64::consts::PI * t.abs() * amax / (nf.powi(k as i32) * (nf - 1.0));
    let mut value = Complex64::new(1.0, 0.0);
    let mut k = 0;
    while tail(k) >= tol && k < MAX_PRODUCT_TERMS {
        value *= kappa(a, n, t / nf.powi(k as i32));
        k += 1;
        if value == Complex64::new(0.0, 0.0) {
            return MuHat {
                value,
                terms: k,
                tail_bound: 0.0,
            };
        }
    }
    MuHat {
        value,
        terms: k,
        tail_bound: tail(k),
    }
}

/// Every `L ⊂ {0, …, N−1}` with `0 ∈ L`, `|L| = |A|` and `H_AL` unitary.
pub fn find_dual_sets(a: &[i64], n: i64, budget: Budget) -> Result<Vec<Vec<i64>>> {
    let a: Vec<i64> = a.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let p = a.len();
    if p == 0 || n < 2 || p as i64 > n {
        return Ok(Vec::new());
    }
    let mut count: u128 = 1;
    for i in 0..(p as u128 - 1) {
        count = count * (n as u128 - 1 - i) / (i + 1);
    }
    budget.check(count)?;
    let mut out = Vec::new();
    let rest: Vec<i64> = (1..n).collect();
    let mut choice = Vec::with_capacity(p);
    choose(&rest, p - 1, 0, &mut choice, &mut |c| {
        let mut l = vec![0];
        l.extend_from_slice(c);
        if let Ok(pair) = SpectralPair::integral(n, a.clone(), l.clone()) {
            if pair.check_dual_set().unitary {
                out.push(l);
            }
        }
    });
    Ok(out)
}

fn choose(items: &[i64], k: usize, from: usize, acc: &mut Vec<i64>, f: &mut dyn FnMut(&[i64])) {
    if acc.len() == k {
        f(acc);
        return;
    }
    for i in from..items.len() {
        acc.push(items[i]);
        choose(items, k, i + 1, acc, f);
        acc.pop();
    }
}

/// Truncated infinite product with its certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MuHat {
    pub value: Complex64,
    /// Number of factors multiplied.
    pub terms: usize,
    /// Bound on `|μ̂(t) − value|`.
    pub tail_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualCheck {
    pub unitary: bool,
    pub deviation: f64,
}

/// A truncation of `Λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub k_max: usize,
    /// Element to the least order at which it appears.
    pub elements: BTreeMap<Rational64, usize>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn sorted(&self) -> Vec<Rational64> {
        self.elements.keys().copied().collect()
    }

    /// The `count` elements of least magnitude, ties broken by value.
    pub fn smallest(&self, count: usize) -> Vec<Rational64> {
        let mut v = self.sorted();
        v.sort_by(|x, y| x.abs().cmp(&y.abs()).then(x.cmp(y)));
        v.truncate(count);
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FourierGram {
    pub lambdas: Vec<Rational64>,
    pub matrix: Vec<Vec<Complex64>>,
    pub max_offdiag: f64,
    /// Entry attaining `max_offdiag`.
    pub witness: Option<Witness>,
}

impl FourierGram {
    fn new(lambdas: &[Rational64], matrix: Vec<Vec<Complex64>>) -> Self {
        let mut max_offdiag = 0.0;
        let mut witness = None;
        for (r, row) in matrix.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                if r != c && v.norm() > max_offdiag {
                    max_offdiag = v.norm();
                    witness = Some(Witness {
                        lambda: RationalText(lambdas[r]),
                        lambda_prime: RationalText(lambdas[c]),
                        modulus: max_offdiag,
                    });
                }
            }
        }
        FourierGram {
            lambdas: lambdas.to_vec(),
            matrix,
            max_offdiag,
            witness,
        }
    }
}

/// A rational printed as `"p/q"` in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct RationalText(pub Rational64);

impl fmt::Display for RationalText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl Serialize for RationalText {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// The largest off-diagonal Gram entry `|⟨e_λ|e_λ'⟩|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Witness {
    pub lambda: RationalText,
    pub lambda_prime: RationalText,
    pub modulus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QValue {
    pub t: f64,
    pub k_max: usize,
    pub value: f64,
    /// Contribution of the elements first appearing at order `k_max`.
    pub last_increment: f64,
    /// Partial sums for orders `0..=k_max`.
    pub partial_sums: Vec<f64>,
}

impl QValue {
    pub fn is_monotone(&self) -> bool {
        self.partial_sums.windows(2).all(|w| w[0] <= w[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CycleMode {
    /// Cycle points are taken in `[0, 1)` and the maps are read modulo 1.
    Mod1,
    /// Cycle points are genuine real fixed points of compositions.
    RealFixedPoint,
}

/// Points `ξ_0, …, ξ_{k−1}` and labels `b_0, …, b_{k−1}` with `ξ_{j+1} = σ_{b_j}(ξ_j)`,
/// indices mod `k`; in [`CycleMode::Mod1`] the equation holds modulo 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Cycle {
    pub points: Vec<BigRational>,
    pub pairing: Vec<BigRational>,
    pub mode: CycleMode,
}

impl Cycle {
    fn trivial(mode: CycleMode) -> Self {
        Cycle {
            points: vec![BigRational::zero()],
            pairing: vec![BigRational::zero()],
            mode,
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.points.iter().all(Zero::is_zero) && self.pairing.iter().all(Zero::is_zero)
    }
}

impl Serialize for Cycle {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Cycle", 4)?;
        st.serialize_field("points", &self.points.iter().map(fmt_big).collect::<Vec<_>>())?;
        st.serialize_field("pairing", &self.pairing.iter().map(fmt_big).collect::<Vec<_>>())?;
        st.serialize_field("mode", &self.mode)?;
        st.serialize_field("trivial", &self.is_trivial())?;
        st.end()
    }
}

/// The two evaluations of `⟨e_λ ∘ φ⁻¹ | e_λ' ∘ φ⁻¹⟩_μ`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedGram {
    /// Via `μ = μ̃ ∘ φ⁻¹`: the entries `μ̂(λ − λ')`.
    pub change_of_variables: Vec<Vec<Complex64>>,
    /// Direct quadrature against `μ` with `φ⁻¹` evaluated by digit recursion.
    pub quadrature: Vec<Vec<Complex64>>,
    pub max_discrepancy: f64,
    /// `max |quadrature − I|`.
    pub quadrature_deviation: f64,
}

/// Builds both Gram matrices for `{e_λ ∘ φ⁻¹}` over the target measure of `conj`.
pub fn generalized_fourier_gram(
    pair: &SpectralPair,
    conj: &Conjugacy,
    lambdas: &[Rational64],
    depth: usize,
    tol: f64,
    budget: Budget,
) -> Result<GeneralizedGram> {
    if !pair.matches_core_maps(conj.source()) {
        return Err(Error::InvalidArgument(
            "conjugacy source core maps are not the linear system of the spectral pair".into(),
        ));
    }
    budget.check((lambdas.len() as u128).pow(2))?;
    let change_of_variables = pair.fourier_gram(lambdas, tol).matrix;

    let inverse_depth = 64;
    let nodes: Vec<f64> = quadrature_nodes(conj.target(), depth, budget)?
        .into_par_iter()
        .map(|y| conj.phi_inverse(y, inverse_depth).map(|b| b.value))
        .collect::<Result<Vec<_>>>()?;
    let weight = 1.0 / nodes.len() as f64;
    let mut by_difference: BTreeMap<Rational64, Complex64> = BTreeMap::new();
    for lr in lambdas {
        for lc in lambdas {
            let d = lr - lc;
            by_difference.entry(d).or_insert_with(|| {
                let t = rational_to_f64(&d);
                let mut s = CompensatedSum::new();
                for &x in &nodes {
                    s.add(cis_turns(t * x));
                }
                s.value() * weight
            });
        }
    }
    let quadrature: Vec<Vec<Complex64>> = lambdas
        .iter()
        .map(|lr| lambdas.iter().map(|lc| by_difference[&(lr - lc)]).collect())
        .collect();

    let mut max_discrepancy = 0.0_f64;
    let mut quadrature_deviation = 0.0_f64;
    for r in 0..lambdas.len() {
        for c in 0..lambdas.len() {
            max_discrepancy = max_discrepancy.max((change_of_variables[r][c] - quadrature[r][c]).norm());
            let target = if r == c { 1.0 } else { 0.0 };
            quadrature_deviation = quadrature_deviation.max((quadrature[r][c] - target).norm());
        }
    }
    Ok(GeneralizedGram {
        change_of_variables,
        quadrature,
        max_discrepancy,
        quadrature_deviation,
    })
}

/// Settings for [`fourier_report`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierSettings {
    pub k_max: usize,
    pub tol: f64,
    pub gram_size: usize,
    pub q_points: usize,
    pub cycle_length: usize,
}

impl Default for FourierSettings {
    fn default() -> Self {
        Self {
            k_max: 12,
            tol: 1e-12,
            gram_size: 64,
            q_points: 21,
            cycle_length: 4,
        }
    }
}

/// Off-diagonal Gram threshold above which orthonormality is taken to fail.
pub const GRAM_FAIL: f64 = 1e-6;
/// Slack over 1 allowed in `Q` before Bessel's inequality counts as violated.
pub const BESSEL_SLACK: f64 = 1e-9;
/// Smallest `Q` partial sum accepted as evidence of completeness.
pub const Q_FLOOR: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "ONB-consistent")]
    OnbConsistent,
    #[serde(rename = "orthonormality-fails")]
    OrthonormalityFails,
    #[serde(rename = "inconclusive")]
    Inconclusive,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::OnbConsistent => 0,
            Verdict::OrthonormalityFails => 1,
            Verdict::Inconclusive => 2,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct QSample {
    pub t: f64,
    pub value: f64,
    pub k_max: usize,
    pub last_increment: f64,
    pub partial_sums: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FourierReport {
    #[serde(rename = "N")]
    pub n: i64,
    #[serde(rename = "A")]
    pub a: Vec<i64>,
    /// `null` when no dual set was available.
    #[serde(rename = "L")]
    pub l: Option<Vec<RationalText>>,
    pub l_integral: Option<bool>,
    pub unitary: bool,
    pub unitarity_dev: Option<f64>,
    #[serde(rename = "dual_sets_mod_N")]
    pub dual_sets_mod_n: Vec<Vec<i64>>,
    pub cycles: Vec<Cycle>,
    pub nontrivial_cycles: usize,
    pub gram_size: usize,
    pub gram_max_offdiag: Option<f64>,
    pub gram_witness: Option<Witness>,
    #[serde(rename = "Q_samples")]
    pub q_samples: Vec<QSample>,
    pub q_monotone: bool,
    pub q_min: Option<f64>,
    pub q_max: Option<f64>,
    pub ruelle_max_dev: Option<f64>,
    pub verdict: Verdict,
    pub verdict_reason: String,
}

/// Runs the spectral checks for `A`, base `N`, and either a given `L` or the first
/// dual set found. The verdict rests on Gram and `Q` numerics; cycles and the Ruelle
/// operator are reported alongside.
pub fn fourier_report(
    n: i64,
    a: Vec<i64>,
    l: Option<Vec<Rational64>>,
    settings: FourierSettings,
    budget: Budget,
) -> Result<FourierReport> {
    if settings.tol <= 0.0 || settings.q_points == 0 || settings.gram_size == 0 {
        return Err(Error::InvalidArgument("tolerances and sample counts must be positive".into()));
    }
    let dual_sets = find_dual_sets(&a, n, budget)?;
    let l = match l {
        Some(l) => Some(l),
        None => dual_sets
            .first()
            .map(|l| l.iter().map(|&x| Rational64::from_integer(x)).collect()),
    };
    let Some(l) = l else {
        let a_sorted: Vec<i64> = a.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
        // validate A on its own with a placeholder L
        if !a_sorted.contains(&0) || n < 2 {
            return Err(Error::InvalidArgument("A must contain 0 and N must be at least 2".into()));
        }
        return Ok(FourierReport {
            n,
            a: a_sorted,
            l: None,
            l_integral: None,
            unitary: false,
            unitarity_dev: None,
            dual_sets_mod_n: dual_sets,
            cycles: Vec::new(),
            nontrivial_cycles: 0,
            gram_size: 0,
            gram_max_offdiag: None,
            gram_witness: None,
            q_samples: Vec::new(),
            q_monotone: true,
            q_min: None,
            q_max: None,
            ruelle_max_dev: None,
            verdict: Verdict::Inconclusive,
            verdict_reason: "no integer dual set exists modulo N and none was supplied".into(),
        });
    };
    let pair = SpectralPair::new(n, a, l)?;
    let dual = pair.check_dual_set();

    // the smallest elements of Λ come from the lowest orders
    let mut gram_order = 0;
    while pair.p().pow(gram_order as u32 + 1) < settings.gram_size && gram_order < settings.k_max {
        gram_order += 1;
    }
    let gram_spectrum = pair.lambda_set(gram_order + 1, budget)?;
    let lambdas = gram_spectrum.smallest(settings.gram_size);
    let gram = pair.fourier_gram(&lambdas, settings.tol);

    let spectrum = pair.lambda_set(settings.k_max, budget)?;
    let q_samples: Vec<QSample> = (0..settings.q_points)
        .into_par_iter()
        .map(|j| {
            let t = j as f64 / settings.q_points as f64;
            let q = pair.q_from_spectrum(&spectrum, t, settings.tol);
            QSample {
                t,
                value: q.value,
                k_max: q.k_max,
                last_increment: q.last_increment,
                partial_sums: q.partial_sums,
            }
        })
        .collect();
    let q_monotone = q_samples
        .iter()
        .all(|s| s.partial_sums.windows(2).all(|w| w[0] <= w[1]));
    let q_min = q_samples.iter().map(|s| s.value).fold(f64::INFINITY, f64::min);
    let q_max = q_samples.iter().map(|s| s.value).fold(f64::NEG_INFINITY, f64::max);

    let ruelle_max_dev = (0..100)
        .map(|i| {
            let x = -3.0 + 6.0 * i as f64 / 99.0;
            (pair.ruelle_apply(|_| 1.0, x) - 1.0).abs()
        })
        .fold(0.0, f64::max);

    let mut cycles = Vec::new();
    if pair.l.iter().all(|x| *x.denom() <= 1 << 20) {
        cycles.extend(pair.l_cycle_search(CycleMode::Mod1, settings.cycle_length, budget)?);
        cycles.extend(pair.l_cycle_search(CycleMode::RealFixedPoint, settings.cycle_length, budget)?);
    }
    let nontrivial_cycles = cycles.iter().filter(|c| !c.is_trivial()).count();

    let (verdict, reason) = if gram.max_offdiag >= GRAM_FAIL {
        (
            Verdict::OrthonormalityFails,
            format!("Gram off-diagonal {:.6e} >= {GRAM_FAIL:e}", gram.max_offdiag),
        )
    } else if q_max > 1.0 + BESSEL_SLACK {
        (
            Verdict::OrthonormalityFails,
            format!("Q = {q_max:.12} exceeds the Bessel bound"),
        )
    } else if !dual.unitary {
        (
            Verdict::Inconclusive,
            "H_AL is not unitary although the sampled Gram is diagonal".into(),
        )
    } else if q_min >= Q_FLOOR {
        (
            Verdict::OnbConsistent,
            format!("orthonormal window and min Q = {q_min:.6} >= {Q_FLOOR}"),
        )
    } else {
        (
            Verdict::Inconclusive,
            format!("orthonormal window but min Q = {q_min:.6} < {Q_FLOOR} at k_max = {}", settings.k_max),
        )
    };

    Ok(FourierReport {
        n,
        a: pair.a.clone(),
        l: Some(pair.l.iter().copied().map(RationalText).collect()),
        l_integral: Some(pair.is_integral()),
        unitary: dual.unitary,
        unitarity_dev: Some(dual.deviation),
        dual_sets_mod_n: dual_sets,
        cycles,
        nontrivial_cycles,
        gram_size: lambdas.len(),
        gram_max_offdiag: Some(gram.max_offdiag),
        gram_witness: gram.witness,
        q_samples,
        q_monotone,
        q_min: Some(q_min),
        q_max: Some(q_max),
        ruelle_max_dev: Some(ruelle_max_dev),
        verdict,
        verdict_reason: reason,
    })
}
