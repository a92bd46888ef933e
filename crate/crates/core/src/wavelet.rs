//! Filters, the operators `T` and `U`, father and mother wavelets, and the exact
//! orthonormality checks built on them.
//!
//! Conventions: `(T g)(x) = g(x − 1)` and `(U g)(x) = p^{−1/2} g(σ⁻¹(x))`. The level
//! spaces are `V_j = span{U^j T^k φ}`, so larger `j` is coarser and
//! `V_{j−1} = V_j ⊕ W_j` with `W_j = span{U^j T^k ψ_i}`.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::budget::Budget;
use crate::cell::{
    inner_product, inner_product_exact, random_cell, random_cell_function, sigma_image,
    sigma_preimage, sigma_scales_measure, Cell, CellFunction, RandomCellParams,
};
use crate::error::{Error, Result};
use crate::ifs::{Alphabet, IFSystem, Membership};
use crate::numeric::{root_of_unity, sqrt_power};

/// `m(z) = p^{half_power/2} Σ_d c_d z^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Filter {
    pub p: usize,
    pub half_power: i32,
    pub coeffs: BTreeMap<i64, Complex64>,
}

impl Filter {
    pub fn monomial(p: usize, d: i64) -> Self {
        Filter {
            p,
            half_power: 0,
            coeffs: BTreeMap::from([(d, Complex64::new(1.0, 0.0))]),
        }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let s: Complex64 = self.coeffs.iter().map(|(&d, c)| c * z.powi(d as i32)).sum();
        s * sqrt_power(self.p, self.half_power)
    }

    /// Coefficients with the scale factor folded in.
    pub fn materialized(&self) -> BTreeMap<i64, Complex64> {
        let s = sqrt_power(self.p, self.half_power);
        self.coeffs.iter().map(|(&d, c)| (d, c * s)).collect()
    }
}

/// The `N` filters: the low-pass `m_0`, then `z^d` for each gap letter `d` ascending,
/// then `p^{−1/2} Σ_j η^{kj} z^{a_j}` for `k = 1..p−1` with `η = e^{2πi/p}`.
pub fn build_filters(alphabet: &Alphabet) -> Vec<Filter> {
    let p = alphabet.p();
    let core = alphabet.core();
    let mut filters = Vec::with_capacity(alphabet.n());
    for k in 0..p {
        let coeffs = core
            .iter()
            .enumerate()
            .map(|(j, &a)| (a as i64, root_of_unity((k * j) as i64, p as i64)))
            .collect();
        let filter = Filter {
            p,
            half_power: -1,
            coeffs,
        };
        if k == 0 {
            filters.push(filter);
            for d in alphabet.gaps() {
                filters.push(Filter::monomial(p, d as i64));
            }
        } else {
            filters.push(filter);
        }
    }
    filters
}

/// `max_z ‖M(z)* M(z) − I‖_max` for `M(z) = N^{−1/2} (m_j(ρ^l z))_{j,l}`, `ρ = e^{2πi/N}`.
pub fn filter_matrix_unitary_check(filters: &[Filter], z_samples: &[Complex64]) -> f64 {
    let n = filters.len();
    let scale = 1.0 / (n as f64).sqrt();
    let mut worst = 0.0_f64;
    for &z in z_samples {
        let m: Vec<Vec<Complex64>> = filters
            .iter()
            .map(|f| {
                (0..n)
                    .map(|l| f.eval(root_of_unity(l as i64, n as i64) * z) * scale)
                    .collect()
            })
            .collect();
        for r in 0..n {
            for c in 0..n {
                let entry: Complex64 = (0..n).map(|j| m[j][r].conj() * m[j][c]).sum();
                let target = if r == c { 1.0 } else { 0.0 };
                worst = worst.max((entry - target).norm());
            }
        }
    }
    worst
}

/// `T^k f`.
pub fn apply_t(f: &CellFunction, k: i64) -> CellFunction {
    f.map_cells(|c| vec![c.shifted(k)], 0)
}

/// `U^n f`; each step of `U` maps cells through `σ` and contributes `p^{−1/2}`.
pub fn apply_u(alphabet: &Alphabet, f: &CellFunction, n: i64) -> CellFunction {
    let mut out = f.clone();
    if n >= 0 {
        for _ in 0..n {
            out = out.map_cells(|c| sigma_image(alphabet, c), -1);
        }
    } else {
        for _ in 0..(-n) {
            out = out.map_cells(|c| vec![sigma_preimage(alphabet, c)], 1);
        }
    }
    out
}

/// `m(T) f`.
pub fn filter_action(filter: &Filter, f: &CellFunction) -> CellFunction {
    let mut out = CellFunction::from_terms(f.scale() + filter.half_power, std::iter::empty());
    for (&d, c) in &filter.coeffs {
        for (cell, v) in f.terms() {
            out.add_term(cell.shifted(d), c * v);
        }
    }
    out
}

/// The father wavelet `φ = χ_C`.
pub fn father() -> CellFunction {
    CellFunction::indicator(Cell::base(0))
}

/// Closed form of `ψ_i = U^{−1} m_i(T) φ`.
fn closed_form_mother(alphabet: &Alphabet, filter: &Filter) -> CellFunction {
    // U^{−1} T^d φ = √p χ_{σ⁻¹(C + d)}
    CellFunction::from_terms(
        filter.half_power + 1,
        filter
            .coeffs
            .iter()
            .map(|(&d, &c)| (sigma_preimage(alphabet, &Cell::base(d)), c)),
    )
}

/// Wavelet data attached to a gap-filled system.
#[derive(Debug, Clone)]
pub struct WaveletSystem {
    system: IFSystem,
    filters: Vec<Filter>,
    mothers: Vec<CellFunction>,
}

/// Index of a basis element `U^n T^k ψ_i`; `i = 0` denotes `φ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct BasisIndex {
    pub n: i64,
    pub k: i64,
    pub i: usize,
}

impl WaveletSystem {
    pub fn new(system: IFSystem) -> Self {
        let filters = build_filters(system.alphabet());
        let mothers = filters[1..]
            .iter()
            .map(|f| closed_form_mother(system.alphabet(), f))
            .collect();
        Self {
            system,
            filters,
            mothers,
        }
    }

    pub fn system(&self) -> &IFSystem {
        &self.system
    }

    pub fn alphabet(&self) -> &Alphabet {
        self.system.alphabet()
    }

    pub fn filters(&self) -> &[Filter] {
        &self.filters
    }

    /// `ψ_1, …, ψ_{N−1}`.
    pub fn mothers(&self) -> &[CellFunction] {
        &self.mothers
    }

    /// `ψ_i` recomputed as `U^{−1}(m_i(T) φ)` through the operators.
    pub fn mother_via_operators(&self, i: usize) -> CellFunction {
        apply_u(self.alphabet(), &filter_action(&self.filters[i], &father()), -1)
    }

    /// `U^n T^k ψ_i`, or `U^n T^k φ` for `i = 0`.
    pub fn basis_function(&self, index: BasisIndex) -> Result<CellFunction> {
        let seed = match index.i {
            0 => father(),
            i if i < self.system.n() => self.mothers[i - 1].clone(),
            i => {
                return Err(Error::InvalidArgument(format!(
                    "basis index {i} out of range 0..{}",
                    self.system.n()
                )))
            }
        };
        Ok(apply_u(self.alphabet(), &apply_t(&seed, index.k), index.n))
    }

    /// Mother indices `|n| ≤ levels`, `|k| ≤ shifts`, `i = 1..N−1`.
    pub fn mother_window(&self, levels: i64, shifts: i64) -> Vec<BasisIndex> {
        let mut out = Vec::new();
        for n in -levels..=levels {
            for k in -shifts..=shifts {
                for i in 1..self.system.n() {
                    out.push(BasisIndex { n, k, i });
                }
            }
        }
        out
    }

    pub fn basis_functions(&self, window: &[BasisIndex]) -> Result<Vec<CellFunction>> {
        window.iter().map(|&ix| self.basis_function(ix)).collect()
    }

    /// `Σ_{a∈A} φ(σ(x) − a)` against `φ(x)` at each point, using digit membership in `C`.
    /// Points where two terms of the sum are nonzero are counted as undecided.
    pub fn scaling_equation_check(&self, points: &[f64], depth: usize) -> Result<ScalingCheck> {
        let mut check = ScalingCheck::default();
        for &x in points {
            // the right side reads the same digit string shifted by one
            let (lhs, read) = self.system.limit_set_digits(x, depth)?;
            let y = self.system.scaling_eval(x)?;
            let mut rhs = Some(0usize);
            for &a in self.system.core() {
                match self.system.in_limit_set(y - a as f64, read.saturating_sub(1))? {
                    Membership::Yes => rhs = rhs.map(|r| r + 1),
                    Membership::No => {}
                    Membership::Unknown(_) => rhs = None,
                }
            }
            let lhs = match lhs {
                Membership::Yes => Some(1),
                Membership::No => Some(0),
                Membership::Unknown(_) => None,
            };
            match (lhs, rhs) {
                // a shared endpoint of adjacent core images; the identity holds a.e.
                (_, Some(r)) if r > 1 => check.undecided += 1,
                (Some(l), Some(r)) => {
                    check.decided += 1;
                    if l != r {
                        check.violations += 1;
                        check.violating_points.push(x);
                    }
                }
                _ => check.undecided += 1,
            }
        }
        Ok(check)
    }

    /// `U^j T^k φ − p^{−1/2} Σ_a U^{j−1} T^{Nk+a} φ`, normalized; empty when `V_j ⊂ V_{j−1}`
    /// holds exactly for this element.
    pub fn nesting_residual(&self, j: i64, k: i64) -> CellFunction {
        let a = self.alphabet();
        let n = self.system.n() as i64;
        let lhs = apply_u(a, &apply_t(&father(), k), j);
        let mut rhs = CellFunction::zero();
        for &d in a.core() {
            let term = apply_u(a, &apply_t(&father(), n * k + d as i64), j - 1).with_scale_shift(-1);
            rhs = rhs.add(a.p(), &term);
        }
        lhs.sub(a.p(), &rhs).normalize(a)
    }

    /// Detail and coarse coefficients of `f` over levels `n_min..=n_max`.
    ///
    /// The energy identity and exact reconstruction hold when `f ∈ V_{n_min − 1}`, i.e.
    /// when no cell of `f` is deeper than `1 − n_min`.
    pub fn parseval_decompose(&self, f: &CellFunction, n_min: i64, n_max: i64) -> Result<ParsevalReport> {
        if n_min > n_max {
            return Err(Error::InvalidArgument(format!(
                "finest level {n_min} exceeds coarsest level {n_max}"
            )));
        }
        let a = self.alphabet();
        let mut details = Vec::new();
        let mut coefficient_energy = BigRational::zero();
        let mut energy_exact = true;
        let mut record = |index: BasisIndex,
                          exact: crate::cell::ExactInner,
                          out: &mut Vec<Coefficient>| {
            if exact.re.is_zero() && exact.im.is_zero() {
                return;
            }
            coefficient_energy += exact.modulus_squared();
            out.push(Coefficient {
                index,
                value: exact.to_complex(),
            });
        };

        for n in n_min..=n_max {
            // ⟨f | U^n T^k ψ_i⟩ = ⟨U^{−n} f | T^k ψ_i⟩
            let g = apply_u(a, f, -n);
            let shifts: BTreeSet<i64> = g.terms().keys().map(|c| c.shift).collect();
            for &k in &shifts {
                for (i, psi) in self.mothers.iter().enumerate() {
                    let basis = apply_t(psi, k);
                    energy_exact &= coefficients_are_dyadic(psi);
                    let exact = inner_product_exact(a, &g, &basis);
                    record(BasisIndex { n, k, i: i + 1 }, exact, &mut details);
                }
            }
        }
        let mut coarse = Vec::new();
        let g = apply_u(a, f, -n_max);
        let shifts: BTreeSet<i64> = g.terms().keys().map(|c| c.shift).collect();
        for &k in &shifts {
            let exact = inner_product_exact(a, &g, &apply_t(&father(), k));
            record(BasisIndex { n: n_max, k, i: 0 }, exact, &mut coarse);
        }

        // the half power of ⟨f|f⟩ is 2·scale, so its value is an exact rational
        let f_energy = inner_product_exact(a, f, f)
            .exact_real()
            .expect("even half power");
        let defect = (&f_energy - &coefficient_energy).to_f64().unwrap_or(f64::NAN);

        let mut recon = CellFunction::zero();
        for c in details.iter().chain(coarse.iter()) {
            let b = self.basis_function(c.index)?;
            recon = recon.add(a.p(), &b.scaled(c.value));
        }
        let residual = f.sub(a.p(), &recon).normalize(a);
        let residual_norm = inner_product(a, &residual, &residual).re.max(0.0).sqrt();

        Ok(ParsevalReport {
            n_min,
            n_max,
            details,
            coarse,
            f_energy: f_energy.to_f64().unwrap_or(f64::NAN),
            coefficient_energy: coefficient_energy.to_f64().unwrap_or(f64::NAN),
            energy_defect: defect,
            energy_defect_exact: energy_exact.then(|| f_energy - coefficient_energy),
            reconstruction_residual: residual_norm,
        })
    }

    /// Runs the orthonormality and operator suites over a window.
    pub fn report(&self, levels: i64, shifts: i64, seed: u64, budget: Budget) -> Result<WaveletReport> {
        let window = self.mother_window(levels, shifts);
        let functions = self.basis_functions(&window)?;
        let gram = gram_matrix(self.alphabet(), &functions, budget)?;
        let gram_report = GramReport::from_matrix(&gram);

        let mut father_window = vec![father()];
        father_window.extend(self.mothers.iter().cloned());
        let mixed = GramReport::from_matrix(&gram_matrix(self.alphabet(), &father_window, budget)?);

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z_samples: Vec<Complex64> = (0..100)
            .map(|_| crate::numeric::cis_turns(rand::Rng::random::<f64>(&mut rng)))
            .chain(std::iter::once(Complex64::new(1.0, 0.0)))
            .collect();
        let filter_dev = filter_matrix_unitary_check(&self.filters, &z_samples);
        let operators = operator_suite(self.alphabet(), 100, seed);

        let mothers_match = (1..self.system.n()).all(|i| {
            self.mother_via_operators(i).canonical(self.alphabet())
                == self.mothers[i - 1].canonical(self.alphabet())
        });
        let nesting_failures = (-levels..=levels)
            .flat_map(|j| (-shifts..=shifts).map(move |k| (j, k)))
            .filter(|&(j, k)| !self.nesting_residual(j, k).is_empty())
            .count();

        let points: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
        let scaling = self.scaling_equation_check(&points, 30)?;

        Ok(WaveletReport {
            system: self.system.name().to_string(),
            n: self.system.n(),
            core: self.system.core().to_vec(),
            levels,
            shifts,
            gram: gram_report,
            father_mother_gram: mixed,
            filter_unitarity_dev: filter_dev,
            mothers_match_operator_form: mothers_match,
            nesting_failures,
            operators,
            scaling_equation: scaling,
            gram_matrix: gram,
        })
    }
}

fn coefficients_are_dyadic(f: &CellFunction) -> bool {
    f.terms().values().all(|c| {
        let ok = |x: f64| (x * 1024.0).fract() == 0.0;
        ok(c.re) && ok(c.im)
    })
}

/// One coefficient of [`ParsevalReport`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coefficient {
    pub index: BasisIndex,
    pub value: Complex64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParsevalReport {
    pub n_min: i64,
    pub n_max: i64,
    pub details: Vec<Coefficient>,
    pub coarse: Vec<Coefficient>,
    pub f_energy: f64,
    pub coefficient_energy: f64,
    /// `‖f‖² − Σ|c|²`, computed from exact rationals.
    pub energy_defect: f64,
    /// The same defect as an exact rational when every basis coefficient is exact.
    #[serde(skip)]
    pub energy_defect_exact: Option<BigRational>,
    /// `‖f − Σ c·b‖`.
    pub reconstruction_residual: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ScalingCheck {
    pub decided: usize,
    pub undecided: usize,
    pub violations: usize,
    pub violating_points: Vec<f64>,
}

/// Pairwise inner products, computed in parallel.
pub fn gram_matrix(
    alphabet: &Alphabet,
    functions: &[CellFunction],
    budget: Budget,
) -> Result<Vec<Vec<Complex64>>> {
    let n = functions.len() as u128;
    budget.check(n * n)?;
    Ok(functions
        .par_iter()
        .map(|f| functions.iter().map(|g| inner_product(alphabet, f, g)).collect())
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GramReport {
    pub max_offdiag: f64,
    pub max_diag_dev: f64,
    pub dims: usize,
}

impl GramReport {
    pub fn from_matrix(gram: &[Vec<Complex64>]) -> Self {
        let mut max_offdiag = 0.0_f64;
        let mut max_diag_dev = 0.0_f64;
        for (r, row) in gram.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                if r == c {
                    max_diag_dev = max_diag_dev.max((v - 1.0).norm());
                } else {
                    max_offdiag = max_offdiag.max(v.norm());
                }
            }
        }
        GramReport {
            max_offdiag,
            max_diag_dev,
            dims: gram.len(),
        }
    }

    pub fn max_deviation(&self) -> f64 {
        self.max_offdiag.max(self.max_diag_dev)
    }
}

/// Outcome of the seeded operator-identity suite.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct OperatorSuite {
    pub samples: usize,
    pub u_unitary_failures: usize,
    pub t_unitary_failures: usize,
    pub commutation_failures: usize,
    pub u_inverse_failures: usize,
    pub measure_scaling_failures: usize,
    pub low_pass_identity: bool,
}

impl OperatorSuite {
    pub fn passed(&self) -> bool {
        self.u_unitary_failures == 0
            && self.t_unitary_failures == 0
            && self.commutation_failures == 0
            && self.u_inverse_failures == 0
            && self.measure_scaling_failures == 0
            && self.low_pass_identity
    }
}

/// Checks on `samples` seeded random functions and cells:
/// `⟨Uf|Ug⟩ = ⟨f|g⟩`, `⟨Tf|Tg⟩ = ⟨f|g⟩`, `U T U⁻¹ f = T^N f`, `U⁻¹ U f = f` and
/// `H(σ(c)) = p H(c)`, all exact; plus `Uφ = m_0(T) φ`.
pub fn operator_suite(alphabet: &Alphabet, samples: usize, seed: u64) -> OperatorSuite {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = RandomCellParams::default();
    let p = alphabet.p();
    let n = alphabet.n() as i64;
    let mut suite = OperatorSuite {
        samples,
        ..Default::default()
    };
    for _ in 0..samples {
        let f = random_cell_function(alphabet, &mut rng, params);
        let g = random_cell_function(alphabet, &mut rng, params);
        let base = inner_product_exact(alphabet, &f, &g);
        let uf = apply_u(alphabet, &f, 1);
        let ug = apply_u(alphabet, &g, 1);
        if !same_value(&inner_product_exact(alphabet, &uf, &ug), &base) {
            suite.u_unitary_failures += 1;
        }
        let k = rand::Rng::random_range(&mut rng, -5..=5);
        if inner_product_exact(alphabet, &apply_t(&f, k), &apply_t(&g, k)) != base {
            suite.t_unitary_failures += 1;
        }
        let lhs = apply_u(alphabet, &apply_t(&apply_u(alphabet, &f, -1), 1), 1).canonical(alphabet);
        let rhs = apply_t(&f, n).canonical(alphabet);
        if lhs.rescaled(p, 0) != rhs.rescaled(p, 0) {
            suite.commutation_failures += 1;
        }
        if apply_u(alphabet, &uf, -1).canonical(alphabet) != f.canonical(alphabet) {
            suite.u_inverse_failures += 1;
        }
        let cell = random_cell(alphabet, &mut rng, 4, 6);
        if !sigma_scales_measure(alphabet, &cell) {
            suite.measure_scaling_failures += 1;
        }
    }
    let filters = build_filters(alphabet);
    suite.low_pass_identity = apply_u(alphabet, &father(), 1) == filter_action(&filters[0], &father());
    suite
}

/// Equality of exact inner products as numbers (the symbolic scale may differ).
fn same_value(x: &crate::cell::ExactInner, y: &crate::cell::ExactInner) -> bool {
    let d = x.half_power - y.half_power;
    if d % 2 != 0 {
        return false;
    }
    let base = BigRational::from_integer(x.p.into());
    let factor = if d >= 0 {
        num_traits::pow(base, (d / 2) as usize)
    } else {
        num_traits::pow(base.recip(), (-d / 2) as usize)
    };
    x.re.clone() * &factor == y.re && x.im.clone() * factor == y.im
}

/// Result of [`WaveletSystem::report`].
#[derive(Debug, Clone, Serialize)]
pub struct WaveletReport {
    pub system: String,
    pub n: usize,
    pub core: Vec<usize>,
    pub levels: i64,
    pub shifts: i64,
    pub gram: GramReport,
    pub father_mother_gram: GramReport,
    pub filter_unitarity_dev: f64,
    pub mothers_match_operator_form: bool,
    pub nesting_failures: usize,
    pub operators: OperatorSuite,
    pub scaling_equation: ScalingCheck,
    /// The window Gram matrix, in [`WaveletSystem::mother_window`] order.
    #[serde(skip)]
    pub gram_matrix: Vec<Vec<Complex64>>,
}

impl WaveletReport {
    /// Whether every check passes, with numeric deviations below `tol`.
    pub fn passed(&self, tol: f64) -> bool {
        self.gram.max_deviation() < tol
            && self.father_mother_gram.max_deviation() < tol
            && self.filter_unitarity_dev < tol
            && self.mothers_match_operator_form
            && self.nesting_failures == 0
            && self.operators.passed()
            && self.scaling_equation.violations == 0
    }
}

#[cfg(test)]
mod tests;
