//! Exact measure algebra of cells `τ_ω(C) + m`.
//!
//! The measure `H` on ℝ gives every cell the mass `p^{−|ω|}` regardless of the shift
//! `m`. This is the `p^{−k}` property usually stated for `μ`, read as a property of
//! `ν` and its translates `H`: `μ` itself only charges subsets of `C`. Two cells meet
//! in positive measure only when one is nested in the other through core letters;
//! shared branch endpoints are `H`-null. All measures are exact rationals.
//!
//! A [`CellFunction`] is a finite complex combination of cell indicators carrying a
//! global factor `p^{scale/2}`. The operator `U` multiplies every coefficient by the
//! same power of `√p`, so keeping that power symbolic makes `U` and `U⁻¹` exact.

use std::collections::BTreeMap;
use std::ops::Bound;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::ifs::{Alphabet, IFSystem, Word};
use crate::numeric::{sqrt_power, CompensatedSum};

/// The set `τ_ω(C) + shift`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub shift: i64,
    pub word: Word,
}

impl Cell {
    pub fn new(word: impl Into<Word>, shift: i64) -> Self {
        Cell {
            shift,
            word: word.into(),
        }
    }

    /// `C + shift`.
    pub fn base(shift: i64) -> Self {
        Cell {
            shift,
            word: Word::empty(),
        }
    }

    pub fn depth(&self) -> usize {
        self.word.len()
    }

    pub fn shifted(&self, k: i64) -> Cell {
        Cell {
            shift: self.shift + k,
            word: self.word.clone(),
        }
    }

    /// Whether `fine ⊂ self` up to an `H`-null set: same shift, and `fine`'s word
    /// is `self`'s word with extra inner letters that all lie in `A`.
    pub fn contains(&self, alphabet: &Alphabet, fine: &Cell) -> bool {
        self.shift == fine.shift
            && fine
                .word
                .inner_excess(&self.word)
                .is_some_and(|extra| extra.iter().all(|&l| alphabet.contains(l)))
    }

    /// The `p` children `τ_ω(τ_a(C)) + m`, `a ∈ A`, that tile this cell.
    pub fn children(&self, alphabet: &Alphabet) -> Vec<Cell> {
        alphabet
            .core()
            .iter()
            .map(|&a| Cell {
                shift: self.shift,
                word: self.word.with_inner(a),
            })
            .collect()
    }
}

fn inverse_power(p: usize, k: usize) -> BigRational {
    let denom = num_traits::pow(BigInt::from(p), k);
    BigRational::new(BigInt::one(), denom)
}

/// `H(cell) = p^{−|ω|}`.
pub fn cell_measure(alphabet: &Alphabet, cell: &Cell) -> BigRational {
    inverse_power(alphabet.p(), cell.depth())
}

/// `H(c1 ∩ c2)`: the measure of the finer cell when one contains the other, else 0.
pub fn cell_intersection_measure(alphabet: &Alphabet, c1: &Cell, c2: &Cell) -> BigRational {
    if c1.contains(alphabet, c2) {
        cell_measure(alphabet, c2)
    } else if c2.contains(alphabet, c1) {
        cell_measure(alphabet, c1)
    } else {
        BigRational::zero()
    }
}

/// `σ(cell)` as disjoint cells. A nonempty word loses its outer letter `i_k`, which
/// moves into the shift as `i_k + N·m`; the base cell `C + m` spreads over the `p`
/// translates `C + a + N·m`.
pub fn sigma_image(alphabet: &Alphabet, cell: &Cell) -> Vec<Cell> {
    let n = alphabet.n() as i64;
    match cell.word.outer() {
        Some(outer) => vec![Cell {
            shift: outer as i64 + n * cell.shift,
            word: cell.word.without_outer(),
        }],
        None => alphabet
            .core()
            .iter()
            .map(|&a| Cell::base(a as i64 + n * cell.shift))
            .collect(),
    }
}

/// `σ⁻¹(cell)`: with `m = N·q + r`, the residue `r` becomes the new outer letter.
pub fn sigma_preimage(alphabet: &Alphabet, cell: &Cell) -> Cell {
    let n = alphabet.n() as i64;
    let q = cell.shift.div_euclid(n);
    let r = cell.shift.rem_euclid(n) as usize;
    Cell {
        shift: q,
        word: cell.word.with_outer(r),
    }
}

/// An exact inner product value: `(re + i·im)·p^{half_power/2}` with rational parts.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactInner {
    pub re: BigRational,
    pub im: BigRational,
    pub half_power: i32,
    pub p: usize,
}

impl ExactInner {
    fn rational_scale(&self, half_power: i32) -> BigRational {
        let base = BigRational::from_integer(BigInt::from(self.p));
        let k = half_power / 2;
        if k >= 0 {
            num_traits::pow(base, k as usize)
        } else {
            num_traits::pow(base.recip(), (-k) as usize)
        }
    }

    pub fn to_complex(&self) -> Complex64 {
        let even = self.half_power - self.half_power.rem_euclid(2);
        let s = self.rational_scale(even);
        let re = (&self.re * &s).to_f64().unwrap_or(f64::NAN);
        let im = (&self.im * &s).to_f64().unwrap_or(f64::NAN);
        let z = Complex64::new(re, im);
        if self.half_power.rem_euclid(2) == 1 {
            z * (self.p as f64).sqrt()
        } else {
            z
        }
    }

    /// `|value|²` as an exact rational.
    pub fn modulus_squared(&self) -> BigRational {
        let base = &self.re * &self.re + &self.im * &self.im;
        let s = self.rational_scale(2 * self.half_power);
        base * s
    }

    /// The real part when it is an exact rational (even `half_power`).
    pub fn exact_real(&self) -> Option<BigRational> {
        (self.half_power % 2 == 0).then(|| &self.re * self.rational_scale(self.half_power))
    }
}

/// Finite combination `p^{scale/2} · Σ c_j χ_{cell_j}`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CellFunction {
    scale: i32,
    terms: BTreeMap<Cell, Complex64>,
}

impl CellFunction {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn indicator(cell: Cell) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(cell, Complex64::new(1.0, 0.0));
        Self { scale: 0, terms }
    }

    /// Builds from `(cell, coefficient)` pairs; repeated cells are summed and zero
    /// coefficients dropped.
    pub fn from_terms(scale: i32, terms: impl IntoIterator<Item = (Cell, Complex64)>) -> Self {
        let mut f = Self {
            scale,
            terms: BTreeMap::new(),
        };
        for (cell, c) in terms {
            f.add_term(cell, c);
        }
        f
    }

    pub fn scale(&self) -> i32 {
        self.scale
    }

    /// Raw coefficients, still to be multiplied by `p^{scale/2}`.
    pub fn terms(&self) -> &BTreeMap<Cell, Complex64> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, cell: &Cell) -> Option<Complex64> {
        self.terms.get(cell).copied()
    }

    /// Coefficient including the `p^{scale/2}` factor.
    pub fn value_on(&self, p: usize, cell: &Cell) -> Complex64 {
        self.terms
            .get(cell)
            .map_or(Complex64::new(0.0, 0.0), |c| c * sqrt_power(p, self.scale))
    }

    pub fn add_term(&mut self, cell: Cell, c: Complex64) {
        if c == Complex64::new(0.0, 0.0) {
            return;
        }
        let entry = self.terms.entry(cell);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = *o.get() + c;
                if sum == Complex64::new(0.0, 0.0) {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    /// Same function written with a different symbolic scale.
    pub fn rescaled(&self, p: usize, scale: i32) -> Self {
        if scale == self.scale {
            return self.clone();
        }
        let factor = sqrt_power(p, self.scale - scale);
        Self {
            scale,
            terms: self.terms.iter().map(|(k, c)| (k.clone(), c * factor)).collect(),
        }
    }

    /// Multiplies the symbolic factor by `p^{delta/2}`.
    pub fn with_scale_shift(mut self, delta: i32) -> Self {
        self.scale += delta;
        self
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self::from_terms(
            self.scale,
            self.terms.iter().map(|(k, c)| (k.clone(), c * factor)),
        )
    }

    /// `self + other`; if the scales differ the result uses the smaller one.
    pub fn add(&self, p: usize, other: &CellFunction) -> Self {
        let scale = self.scale.min(other.scale);
        let mut out = self.rescaled(p, scale);
        for (cell, c) in other.rescaled(p, scale).terms {
            out.add_term(cell, c);
        }
        out
    }

    pub fn sub(&self, p: usize, other: &CellFunction) -> Self {
        self.add(p, &other.scaled(Complex64::new(-1.0, 0.0)))
    }

    pub fn map_cells(&self, f: impl Fn(&Cell) -> Vec<Cell>, scale_delta: i32) -> Self {
        let mut out = Self {
            scale: self.scale + scale_delta,
            terms: BTreeMap::new(),
        };
        for (cell, c) in &self.terms {
            for image in f(cell) {
                out.add_term(image, *c);
            }
        }
        out
    }

    /// Whether no two stored cells are nested.
    pub fn is_normalized(&self, alphabet: &Alphabet) -> bool {
        self.coarse_cells(alphabet).is_empty()
    }

    fn coarse_cells(&self, alphabet: &Alphabet) -> Vec<Cell> {
        let mut out = Vec::new();
        for cell in self.terms.keys() {
            let same_shift = self.terms.range((
                Bound::Included(Cell::base(cell.shift)),
                Bound::Excluded(Cell::base(cell.shift + 1)),
            ));
            if same_shift
                .into_iter()
                .any(|(other, _)| other != cell && cell.contains(alphabet, other))
            {
                out.push(cell.clone());
            }
        }
        out
    }

    /// Splits coarser cells into their children until no two stored cells are
    /// nested, merging coefficients on equal cells and dropping zeros.
    pub fn normalize(&self, alphabet: &Alphabet) -> Self {
        let mut f = self.clone();
        loop {
            let coarse = f.coarse_cells(alphabet);
            if coarse.is_empty() {
                return f;
            }
            for cell in coarse {
                if let Some(c) = f.terms.remove(&cell) {
                    for child in cell.children(alphabet) {
                        f.add_term(child, c);
                    }
                }
            }
        }
    }

    /// Normal form that is unique for a given function: [`normalize`](Self::normalize),
    /// then merge every complete family of children carrying equal coefficients back
    /// into the parent, bottom-up.
    pub fn canonical(&self, alphabet: &Alphabet) -> Self {
        let mut f = self.normalize(alphabet);
        loop {
            let mut families: BTreeMap<Cell, Vec<(Cell, Complex64)>> = BTreeMap::new();
            for (cell, c) in &f.terms {
                let letters = cell.word.letters();
                if let Some((&inner, rest)) = letters.split_first() {
                    if alphabet.contains(inner) {
                        let parent = Cell::new(rest.to_vec(), cell.shift);
                        families.entry(parent).or_default().push((cell.clone(), *c));
                    }
                }
            }
            let mut changed = false;
            for (parent, kids) in families {
                if kids.len() == alphabet.p() && kids.iter().all(|(_, c)| *c == kids[0].1) {
                    for (kid, _) in &kids {
                        f.terms.remove(kid);
                    }
                    f.terms.insert(parent, kids[0].1);
                    changed = true;
                }
            }
            if !changed {
                return f;
            }
        }
    }

    /// Serialises as a list of `{"word", "shift", "re", "im"}` with the scale folded in.
    pub fn to_json_terms(&self, p: usize) -> Vec<CellTerm> {
        let factor = sqrt_power(p, self.scale);
        self.terms
            .iter()
            .map(|(cell, c)| CellTerm {
                word: cell.word.letters().to_vec(),
                shift: cell.shift,
                re: c.re * factor,
                im: c.im * factor,
            })
            .collect()
    }

    pub fn from_json_terms(terms: &[CellTerm]) -> Self {
        Self::from_terms(
            0,
            terms.iter().map(|t| {
                (
                    Cell::new(t.word.clone(), t.shift),
                    Complex64::new(t.re, t.im),
                )
            }),
        )
    }

    pub fn to_json(&self, p: usize) -> Result<String> {
        Ok(serde_json::to_string(&self.to_json_terms(p))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let terms: Vec<CellTerm> = serde_json::from_str(text)?;
        Ok(Self::from_json_terms(&terms))
    }
}

/// JSON form of one term of a [`CellFunction`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellTerm {
    pub word: Vec<usize>,
    pub shift: i64,
    pub re: f64,
    pub im: f64,
}

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite coefficient")
}

/// `⟨f | g⟩ = ∫ f · conj(g) dH`, summed exactly over pairs of nested cells.
pub fn inner_product_exact(alphabet: &Alphabet, f: &CellFunction, g: &CellFunction) -> ExactInner {
    let p = alphabet.p();
    let mut re = BigRational::zero();
    let mut im = BigRational::zero();
    // group measures by depth so the sums stay over a common denominator per depth
    let mut by_depth: BTreeMap<usize, (BigRational, BigRational)> = BTreeMap::new();
    for (cf, a) in &f.terms {
        let lo = Bound::Included(Cell::base(cf.shift));
        let hi = Bound::Excluded(Cell::base(cf.shift + 1));
        for (cg, b) in g.terms.range((lo, hi)) {
            let depth = if cf.contains(alphabet, cg) {
                cg.depth()
            } else if cg.contains(alphabet, cf) {
                cf.depth()
            } else {
                continue;
            };
            // a · conj(b)
            let (ar, ai, br, bi) = (exact(a.re), exact(a.im), exact(b.re), exact(b.im));
            let pr = &ar * &br + &ai * &bi;
            let pi = &ai * &br - &ar * &bi;
            let slot = by_depth
                .entry(depth)
                .or_insert_with(|| (BigRational::zero(), BigRational::zero()));
            slot.0 += pr;
            slot.1 += pi;
        }
    }
    for (depth, (r, i)) in by_depth {
        let m = inverse_power(p, depth);
        re += r * &m;
        im += i * &m;
    }
    ExactInner {
        re,
        im,
        half_power: f.scale + g.scale,
        p,
    }
}

pub fn inner_product(alphabet: &Alphabet, f: &CellFunction, g: &CellFunction) -> Complex64 {
    if f.is_empty() || g.is_empty() {
        return Complex64::new(0.0, 0.0);
    }
    inner_product_exact(alphabet, f, g).to_complex()
}

/// `‖f‖²` as an exact rational when the scale is even, as a float otherwise.
pub fn norm_squared(alphabet: &Alphabet, f: &CellFunction) -> f64 {
    inner_product(alphabet, f, f).re
}

/// Result of [`quadrature_mu`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: Complex64,
    pub depth: usize,
    /// `Lip(f)·c^depth` when a Lipschitz bound was supplied, otherwise the change
    /// from depth `depth − 1`.
    pub error_bound: f64,
    pub certified: bool,
}

/// `∫ f dμ ≈ p^{−k} Σ_{ω ∈ A^k} f(τ_ω(x₀))`, where `x₀` is the fixed point of the first
/// core map and `μ` the equal-weight self-similar measure on `C`.
pub fn quadrature_mu<F>(
    system: &IFSystem,
    f: F,
    depth: usize,
    lipschitz: Option<f64>,
    budget: Budget,
) -> Result<Quadrature>
where
    F: Fn(f64) -> Complex64,
{
    if depth == 0 {
        return Err(Error::InvalidArgument("quadrature depth must be positive".into()));
    }
    budget.check_power(system.p() as u64, depth as u32)?;
    let core: Vec<_> = system.core_maps();
    let anchor = core[0].fixed_point();
    let p = system.p() as f64;

    let mut sum = CompensatedSum::new();
    let mut coarse = CompensatedSum::new();
    let mut stack = vec![(anchor, 0usize)];
    while let Some((x, level)) = stack.pop() {
        if level == depth {
            sum.add(f(x));
            continue;
        }
        if lipschitz.is_none() && level == depth - 1 {
            coarse.add(f(x));
        }
        for map in &core {
            stack.push((map.eval(x), level + 1));
        }
    }
    let value = sum.value() / p.powi(depth as i32);
    let (error_bound, certified) = match lipschitz {
        Some(l) => (l * system.c_core().powi(depth as i32), true),
        None => {
            let prev = coarse.value() / p.powi(depth as i32 - 1);
            ((value - prev).norm(), false)
        }
    };
    Ok(Quadrature {
        value,
        depth,
        error_bound,
        certified,
    })
}

/// The `p^k` nodes `τ_ω(x₀)`, `ω ∈ A^k`, used by [`quadrature_mu`], in depth-first order.
pub fn quadrature_nodes(system: &IFSystem, depth: usize, budget: Budget) -> Result<Vec<f64>> {
    budget.check_power(system.p() as u64, depth as u32)?;
    let core = system.core_maps();
    let mut nodes = vec![core[0].fixed_point()];
    for _ in 0..depth {
        nodes = nodes
            .iter()
            .flat_map(|&x| core.iter().map(move |m| m.eval(x)))
            .collect();
    }
    Ok(nodes)
}

/// Parameters for [`random_cell_function`].
#[derive(Debug, Clone, Copy)]
pub struct RandomCellParams {
    pub max_terms: usize,
    pub max_depth: usize,
    pub shift_range: i64,
    /// Coefficients are `k / 2^j` with `|k| ≤ numerator_range`, `j ≤ 3`, so they are
    /// exact binary fractions.
    pub numerator_range: i64,
    pub complex: bool,
}

impl Default for RandomCellParams {
    fn default() -> Self {
        Self {
            max_terms: 5,
            max_depth: 3,
            shift_range: 3,
            numerator_range: 8,
            complex: true,
        }
    }
}

pub fn random_cell<R: Rng + ?Sized>(alphabet: &Alphabet, rng: &mut R, max_depth: usize, shift_range: i64) -> Cell {
    let depth = rng.random_range(0..=max_depth);
    let letters = (0..depth).map(|_| rng.random_range(0..alphabet.n())).collect::<Vec<_>>();
    Cell::new(letters, rng.random_range(-shift_range..=shift_range))
}

fn random_dyadic<R: Rng + ?Sized>(rng: &mut R, range: i64) -> f64 {
    let k = rng.random_range(-range..=range);
    let j = rng.random_range(0..=3);
    k as f64 / (1u32 << j) as f64
}

/// A random finite combination with dyadic-rational coefficients.
pub fn random_cell_function<R: Rng + ?Sized>(
    alphabet: &Alphabet,
    rng: &mut R,
    params: RandomCellParams,
) -> CellFunction {
    let count = rng.random_range(1..=params.max_terms.max(1));
    let terms = (0..count)
        .map(|_| {
            let cell = random_cell(alphabet, rng, params.max_depth, params.shift_range);
            let re = random_dyadic(rng, params.numerator_range);
            let im = if params.complex {
                random_dyadic(rng, params.numerator_range)
            } else {
                0.0
            };
            (cell, Complex64::new(re, im))
        })
        .collect::<Vec<_>>();
    CellFunction::from_terms(0, terms)
}

/// Checks `Σ H(σ(cell)) = p·H(cell)` exactly.
pub fn sigma_scales_measure(alphabet: &Alphabet, cell: &Cell) -> bool {
    let image: BigRational = sigma_image(alphabet, cell)
        .iter()
        .map(|c| cell_measure(alphabet, c))
        .sum();
    image == cell_measure(alphabet, cell) * BigRational::from_integer(BigInt::from(alphabet.p()))
}

/// Exact nonnegativity helper used by tests and reports.
pub fn is_nonnegative(x: &BigRational) -> bool {
    !x.is_negative()
}
