//! Contractions, gap-filled iterated function systems and the scaling map.
//!
//! An [`IFSystem`] is always the gap-filled list `τ_0, …, τ_{N−1}` whose images tile
//! `[0, 1]` end to end; the original contractions sit at the positions listed in the
//! core index set `A`.

mod contraction;
mod spec;

pub use contraction::{Contraction, GenericMap, BISECTION_TOL};
pub use spec::{MapSpec, SystemSpec};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Endpoint and chaining checks are done to this tolerance.
pub const ENDPOINT_TOL: f64 = 1e-12;

/// Gaps shorter than this are treated as empty when filling.
pub const ZERO_GAP: f64 = 1e-14;

/// Distance from a branch knot below which a gap digit is not taken as proof of exclusion.
pub const KNOT_MARGIN: f64 = 1e-9;

/// A finite word `(i_1, …, i_k)`; `τ_ω = τ_{i_k} ∘ … ∘ τ_{i_1}`, so the last letter is
/// the outermost one.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word(Vec<usize>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn new(letters: Vec<usize>) -> Self {
        Word(letters)
    }

    pub fn letters(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The outermost letter `i_k`.
    pub fn outer(&self) -> Option<usize> {
        self.0.last().copied()
    }

    /// Appends a new outermost letter.
    pub fn with_outer(&self, letter: usize) -> Word {
        let mut v = self.0.clone();
        v.push(letter);
        Word(v)
    }

    /// Drops the outermost letter.
    pub fn without_outer(&self) -> Word {
        let mut v = self.0.clone();
        v.pop();
        Word(v)
    }

    /// Prepends a new innermost letter.
    pub fn with_inner(&self, letter: usize) -> Word {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.push(letter);
        v.extend_from_slice(&self.0);
        Word(v)
    }

    /// If `self` ends with `coarse`, the extra inner letters.
    pub fn inner_excess<'a>(&'a self, coarse: &Word) -> Option<&'a [usize]> {
        if self.0.len() >= coarse.0.len() && self.0.ends_with(&coarse.0) {
            Some(&self.0[..self.0.len() - coarse.0.len()])
        } else {
            None
        }
    }

    /// Word whose letters are `digits` read innermost-last, i.e. `digits` reversed.
    pub fn from_digits(digits: &[usize]) -> Word {
        Word(digits.iter().rev().copied().collect())
    }
}

impl From<Vec<usize>> for Word {
    fn from(v: Vec<usize>) -> Self {
        Word(v)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, ")")
    }
}

/// The combinatorial skeleton of a system: the branch count `N` and core set `A`.
///
/// Every exact cell computation depends only on this, never on the maps themselves.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Alphabet {
    n: usize,
    core: Vec<usize>,
    in_core: Vec<bool>,
}

impl Alphabet {
    pub fn new(n: usize, core: Vec<usize>) -> Result<Self> {
        if core.is_empty() {
            return Err(Error::InvalidSystem("core index set is empty".into()));
        }
        if core.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSystem(
                "core indices must be strictly increasing".into(),
            ));
        }
        if let Some(&bad) = core.iter().find(|&&a| a >= n) {
            return Err(Error::LetterOutOfRange { letter: bad, n });
        }
        let mut in_core = vec![false; n];
        for &a in &core {
            in_core[a] = true;
        }
        Ok(Self { n, core, in_core })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.core.len()
    }

    pub fn core(&self) -> &[usize] {
        &self.core
    }

    /// Letters outside `A`, ascending.
    pub fn gaps(&self) -> Vec<usize> {
        (0..self.n).filter(|&i| !self.in_core[i]).collect()
    }

    pub fn contains(&self, letter: usize) -> bool {
        letter < self.n && self.in_core[letter]
    }

    pub fn check_word(&self, word: &Word) -> Result<()> {
        match word.letters().iter().find(|&&l| l >= self.n) {
            Some(&letter) => Err(Error::LetterOutOfRange { letter, n: self.n }),
            None => Ok(()),
        }
    }
}

/// Three-valued membership at finite digit depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    Yes,
    No,
    /// Not decided by the digits computed up to this depth.
    Unknown(usize),
}

/// A structural condition a system fails.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NotIncreasing { index: usize },
    NotContracting { index: usize, lipschitz: f64 },
    OutsideUnitInterval { index: usize, image: (f64, f64) },
    LeftEndpoint { value: f64 },
    RightEndpoint { value: f64 },
    Chaining { index: usize, right: f64, next_left: f64 },
    CoreOrder { first: usize, second: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NotIncreasing { index } => write!(f, "map {index} is not increasing"),
            Violation::NotContracting { index, lipschitz } => {
                write!(f, "map {index} has Lipschitz constant {lipschitz} >= 1")
            }
            Violation::OutsideUnitInterval { index, image } => write!(
                f,
                "map {index} sends [0,1] to [{}, {}], outside [0,1]",
                image.0, image.1
            ),
            Violation::LeftEndpoint { value } => write!(f, "tau_0(0) = {value}, expected 0"),
            Violation::RightEndpoint { value } => write!(f, "tau_(N-1)(1) = {value}, expected 1"),
            Violation::Chaining {
                index,
                right,
                next_left,
            } => write!(
                f,
                "tau_{index}(1) = {right} differs from tau_{}(0) = {next_left}",
                index + 1
            ),
            Violation::CoreOrder { first, second } => {
                write!(f, "core maps {first} and {second} overlap or are out of order")
            }
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn messages(&self) -> Vec<String> {
        self.violations.iter().map(|v| v.to_string()).collect()
    }
}

/// Per-map checks shared by [`IFSystem::validate`] and [`IFSystem::gap_fill`].
fn map_violations(maps: &[Contraction]) -> Vec<Violation> {
    let mut out = Vec::new();
    for (index, map) in maps.iter().enumerate() {
        if !map.is_increasing() {
            out.push(Violation::NotIncreasing { index });
            continue;
        }
        let lipschitz = map.lipschitz();
        if !(lipschitz < 1.0) {
            out.push(Violation::NotContracting { index, lipschitz });
        }
        let image = map.image();
        if image.0 < -ENDPOINT_TOL || image.1 > 1.0 + ENDPOINT_TOL {
            out.push(Violation::OutsideUnitInterval { index, image });
        }
    }
    out
}

/// A gap-filled system `𝒯 = (τ_0, …, τ_{N−1})` with core set `A`.
#[derive(Debug, Clone)]
pub struct IFSystem {
    name: String,
    maps: Vec<Contraction>,
    alphabet: Alphabet,
    left_ends: Vec<f64>,
    c_max: f64,
}

impl IFSystem {
    /// Builds a system from an already gap-filled list. Only index bookkeeping is
    /// checked here; see [`IFSystem::validate`] for the structural conditions.
    pub fn new(name: impl Into<String>, maps: Vec<Contraction>, core: Vec<usize>) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::InvalidSystem("no maps".into()));
        }
        let alphabet = Alphabet::new(maps.len(), core)?;
        let left_ends = maps.iter().map(|m| m.eval(0.0)).collect();
        let c_max = maps.iter().map(Contraction::lipschitz).fold(0.0, f64::max);
        Ok(Self {
            name: name.into(),
            maps,
            alphabet,
            left_ends,
            c_max,
        })
    }

    /// The homogeneous linear system `(ρ_{0,N}, …, ρ_{N−1,N})` with core `A`.
    pub fn homogeneous(name: impl Into<String>, n: usize, core: Vec<usize>) -> Result<Self> {
        let maps = (0..n).map(|j| Contraction::rho(j, n)).collect();
        Self::new(name, maps, core)
    }

    /// Extends ascending core maps by affine fillers so that the images tile `[0, 1]`.
    ///
    /// `subdivisions` gives the number of fillers per gap slot; the slots are the
    /// `p + 1` intervals before, between and after the core images. An empty slice
    /// means one filler per gap. Zero-length gaps get no filler.
    pub fn gap_fill(
        name: impl Into<String>,
        core_maps: Vec<Contraction>,
        subdivisions: &[usize],
    ) -> Result<Self> {
        if core_maps.is_empty() {
            return Err(Error::InvalidSystem("no core maps".into()));
        }
        let p = core_maps.len();
        if !subdivisions.is_empty() && subdivisions.len() != p + 1 {
            return Err(Error::InvalidArgument(format!(
                "expected {} subdivision counts, got {}",
                p + 1,
                subdivisions.len()
            )));
        }
        if subdivisions.contains(&0) {
            return Err(Error::InvalidArgument("subdivision counts must be positive".into()));
        }
        let mut problems = map_violations(&core_maps);
        for i in 0..p.saturating_sub(1) {
            if core_maps[i].eval(1.0) > core_maps[i + 1].eval(0.0) + ENDPOINT_TOL {
                problems.push(Violation::CoreOrder {
                    first: i,
                    second: i + 1,
                });
            }
        }
        if !problems.is_empty() {
            let msg: Vec<String> = problems.iter().map(ToString::to_string).collect();
            return Err(Error::InvalidSystem(msg.join("; ")));
        }

        let pieces = |slot: usize| subdivisions.get(slot).copied().unwrap_or(1);
        let mut maps = Vec::new();
        let mut core = Vec::with_capacity(p);
        let mut cursor = 0.0;
        for (slot, map) in core_maps.into_iter().enumerate() {
            let (left, right) = map.image();
            push_fillers(&mut maps, cursor, left, pieces(slot))?;
            core.push(maps.len());
            maps.push(map);
            cursor = right;
        }
        push_fillers(&mut maps, cursor, 1.0, pieces(p))?;
        Self::new(name, maps, core)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn maps(&self) -> &[Contraction] {
        &self.maps
    }

    pub fn map(&self, i: usize) -> &Contraction {
        &self.maps[i]
    }

    pub fn core(&self) -> &[usize] {
        self.alphabet.core()
    }

    /// The original (non-filler) maps in ascending order.
    pub fn core_maps(&self) -> Vec<&Contraction> {
        self.core().iter().map(|&i| &self.maps[i]).collect()
    }

    pub fn n(&self) -> usize {
        self.maps.len()
    }

    pub fn p(&self) -> usize {
        self.alphabet.p()
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    /// Maximum Lipschitz constant over all `N` maps.
    pub fn c_max(&self) -> f64 {
        self.c_max
    }

    /// Maximum Lipschitz constant over the core maps only.
    pub fn c_core(&self) -> f64 {
        self.core()
            .iter()
            .map(|&i| self.maps[i].lipschitz())
            .fold(0.0, f64::max)
    }

    /// `log p / log N` when every map is `ρ_{j,N}`; `None` otherwise.
    pub fn hausdorff_dimension(&self) -> Option<f64> {
        let n = self.n();
        let homogeneous = self.maps.iter().enumerate().all(|(j, m)| match m {
            Contraction::Affine { a, b } => {
                (a - 1.0 / n as f64).abs() < 1e-15 && (b - j as f64 / n as f64).abs() < 1e-15
            }
            _ => false,
        });
        homogeneous.then(|| (self.p() as f64).ln() / (n as f64).ln())
    }

    pub fn validate(&self) -> ValidationReport {
        let mut violations = map_violations(&self.maps);
        let n = self.n();
        let first = self.maps[0].eval(0.0);
        if first.abs() > ENDPOINT_TOL {
            violations.push(Violation::LeftEndpoint { value: first });
        }
        let last = self.maps[n - 1].eval(1.0);
        if (last - 1.0).abs() > ENDPOINT_TOL {
            violations.push(Violation::RightEndpoint { value: last });
        }
        for index in 0..n - 1 {
            let right = self.maps[index].eval(1.0);
            let next_left = self.maps[index + 1].eval(0.0);
            if (right - next_left).abs() > ENDPOINT_TOL {
                violations.push(Violation::Chaining {
                    index,
                    right,
                    next_left,
                });
            }
        }
        ValidationReport { violations }
    }

    /// `τ_ω(x) = τ_{i_k}(… τ_{i_1}(x) …)`.
    pub fn word_apply(&self, word: &Word, x: f64) -> Result<f64> {
        self.alphabet.check_word(word)?;
        Ok(word
            .letters()
            .iter()
            .fold(x, |acc, &letter| self.maps[letter].eval(acc)))
    }

    /// Branch index of `y ∈ [0, 1]` under the half-open partition `[τ_i(0), τ_i(1))`;
    /// `y = 1` belongs to the last branch.
    pub fn branch_of(&self, y: f64) -> usize {
        if y >= 1.0 {
            return self.n() - 1;
        }
        // left_ends is ascending with left_ends[0] = 0
        self.left_ends.partition_point(|&l| l <= y).saturating_sub(1)
    }

    /// The scaling function `σ`, defined on all of ℝ with `σ(x + m) = σ(x) + N·m`.
    pub fn scaling_eval(&self, x: f64) -> Result<f64> {
        let k = x.floor();
        let y = x - k;
        let i = self.branch_of(y);
        let inner = self.maps[i].inverse(y)?;
        Ok(inner + i as f64 + self.n() as f64 * k)
    }

    /// `σ⁻¹(x) = τ_i(x − i − N·k) + k` with `k = ⌊x / N⌋` and `i = ⌊x − N·k⌋`.
    pub fn scaling_inverse_eval(&self, x: f64) -> f64 {
        let n = self.n() as f64;
        let k = (x / n).floor();
        let r = x - n * k;
        let i = (r.floor().max(0.0) as usize).min(self.n() - 1);
        self.maps[i].eval(r - i as f64) + k
    }

    /// Greedy digits of `x ∈ [0, 1]`: the first digit is the branch of `x`, then the
    /// expansion continues on `τ_{d_1}⁻¹(x)`. For `ρ_{j,N}` systems these are base-`N`
    /// digits.
    pub fn digit_code(&self, x: f64, depth: usize) -> Result<Vec<usize>> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::InvalidArgument(format!(
                "digit coding needs x in [0,1], got {x}"
            )));
        }
        let mut digits = Vec::with_capacity(depth);
        let mut y = x;
        while digits.len() < depth {
            if y >= 1.0 {
                digits.resize(depth, self.n() - 1);
                break;
            }
            let d = self.branch_of(y);
            digits.push(d);
            y = self.maps[d].inverse(y)?.clamp(0.0, 1.0);
        }
        Ok(digits)
    }

    /// Membership of `x` in the enlarged fractal `R = R_{[0,1]} + ℤ`.
    ///
    /// `Yes` means the digit stream of `{x}` ends, within `depth` digits, in a
    /// nonempty run of core letters: the depth-`depth` cylinder of `x` then lies in
    /// the hull of a copy `τ_ω(C)` entered before the last digit, so `x` is within
    /// `c_max^depth` of `R`. Membership in `R` is a tail property of the digits, so a
    /// stream ending in a gap letter stays `Unknown`. `No` is only returned for
    /// non-finite input.
    pub fn in_enlarged_fractal(&self, x: f64, depth: usize) -> Result<Membership> {
        if !x.is_finite() {
            return Ok(Membership::No);
        }
        if depth == 0 {
            return Err(Error::InvalidArgument("depth must be positive".into()));
        }
        let y = x - x.floor();
        let digits = self.digit_code(y, depth)?;
        let tail = digits
            .iter()
            .rev()
            .take_while(|&&d| self.alphabet.contains(d))
            .count();
        Ok(if tail >= 1 {
            Membership::Yes
        } else {
            Membership::Unknown(depth)
        })
    }

    /// Membership of `x` in the limit set `C`, i.e. the value of `φ = χ_C` at `x`.
    ///
    /// Digits are read until `depth` is reached or the rounding error, amplified by the
    /// inverse branches, exceeds [`KNOT_MARGIN`]. `Yes` when every digit read is a core
    /// letter; `No` when a gap digit appears away from a branch knot, or `x ∉ [0, 1]`;
    /// `Unknown` when the first gap digit sits on a knot.
    pub fn in_limit_set(&self, x: f64, depth: usize) -> Result<Membership> {
        Ok(self.limit_set_digits(x, depth)?.0)
    }

    /// [`in_limit_set`](Self::in_limit_set) together with the number of digits read.
    pub fn limit_set_digits(&self, x: f64, depth: usize) -> Result<(Membership, usize)> {
        if !x.is_finite() || !(0.0..=1.0).contains(&x) {
            return Ok((Membership::No, 0));
        }
        let mut y = x;
        let mut err = f64::EPSILON;
        for read in 0..depth {
            if err > KNOT_MARGIN {
                return Ok((Membership::Yes, read));
            }
            if y >= 1.0 {
                let last = self.n() - 1;
                let m = if self.alphabet.contains(last) {
                    Membership::Yes
                } else {
                    Membership::No
                };
                return Ok((m, read + 1));
            }
            let d = self.branch_of(y);
            if !self.alphabet.contains(d) {
                let (lo, hi) = self.maps[d].image();
                let margin = KNOT_MARGIN + err;
                let near_knot = (y - lo).abs() < margin || (hi - y).abs() < margin;
                let m = if near_knot {
                    Membership::Unknown(depth)
                } else {
                    Membership::No
                };
                return Ok((m, read + 1));
            }
            let map = &self.maps[d];
            let z = map.inverse(y)?.clamp(0.0, 1.0);
            err = err / local_slope(map, z) + f64::EPSILON;
            y = z;
        }
        Ok((Membership::Yes, depth))
    }
}

/// Central-difference estimate of `|f'(z)|`, kept away from zero.
fn local_slope(map: &Contraction, z: f64) -> f64 {
    let h = 1e-6;
    let (a, b) = ((z - h).max(0.0), (z + h).min(1.0));
    ((map.eval(b) - map.eval(a)) / (b - a)).abs().max(1e-12)
}

fn push_fillers(maps: &mut Vec<Contraction>, left: f64, right: f64, pieces: usize) -> Result<()> {
    let len = right - left;
    if len <= ZERO_GAP {
        return Ok(());
    }
    let width = len / pieces as f64;
    if width >= 1.0 {
        return Err(Error::InvalidSystem(format!(
            "gap filler on [{left}, {right}] would not be a contraction"
        )));
    }
    for j in 0..pieces {
        maps.push(Contraction::affine(width, left + j as f64 * width));
    }
    Ok(())
}

#[cfg(test)]
mod tests;
