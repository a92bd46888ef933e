use std::collections::BTreeMap;

use num_rational::Rational64;
use serde::Serialize;

use fractal_mra::budget::Budget;
use fractal_mra::conjugacy::Bounded;
use fractal_mra::ifs::MapSpec;
use fractal_mra::fourier::{
    self, find_dual_sets, generalized_fourier_gram, parse_rational, FourierSettings, RationalText,
};
use fractal_mra::{Conjugacy, Contraction, IFSystem, Membership, SpectralPair, WaveletSystem, VERSION};

use crate::output::{
    load_system, matrix_digest, read_spec, sha256_hex, write_csv, write_json, CliResult, Envelope,
    Failure, EXIT_NUMERIC, EXIT_OK, EXIT_PROPERTY,
};
use crate::{
    ConjugacyEvalArgs, ConjugacyGramArgs, ConjugacyPlotArgs, FourierArgs, Pair, ScalingPlotArgs,
    ValidateArgs, WaveletArgs,
};

struct EnvelopeBuilder {
    command: &'static str,
    inputs: BTreeMap<String, String>,
    seed: u64,
    tolerances: BTreeMap<String, f64>,
    budget: Budget,
}

impl EnvelopeBuilder {
    fn new(command: &'static str, budget: Budget) -> Self {
        Self {
            command,
            inputs: BTreeMap::new(),
            seed: 0,
            tolerances: BTreeMap::new(),
            budget,
        }
    }

    fn input(mut self, label: &str, sha256: String) -> Self {
        self.inputs.insert(label.to_string(), sha256);
        self
    }

    fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn tolerance(mut self, label: &str, value: f64) -> Self {
        self.tolerances.insert(label.to_string(), value);
        self
    }

    fn finish<T: Serialize>(self, exit_code: u8, result: T) -> Envelope<T> {
        Envelope {
            command: self.command.to_string(),
            version: VERSION,
            inputs: self.inputs,
            seed: self.seed,
            tolerances: self.tolerances,
            budget: self.budget.limit(),
            exit_code,
            result,
        }
    }
}

#[derive(Serialize)]
struct ValidateResult {
    name: String,
    auto_filled: bool,
    #[serde(rename = "N")]
    n: Option<usize>,
    #[serde(rename = "A")]
    a: Option<Vec<usize>>,
    maps: Vec<MapSpec>,
    c_max: Option<f64>,
    hausdorff_dimension: Option<f64>,
    passed: bool,
    violations: Vec<String>,
}

pub fn validate(args: &ValidateArgs) -> CliResult<u8> {
    let loaded = read_spec(&args.spec)?;
    let envelope = EnvelopeBuilder::new("validate", Budget::from_env()).input("spec", loaded.sha256);
    let auto_filled = loaded.spec.auto_fill == Some(true);
    let result = match loaded.spec.build() {
        Ok(system) => {
            let report = system.validate();
            ValidateResult {
                name: system.name().to_string(),
                auto_filled,
                n: Some(system.n()),
                a: Some(system.core().to_vec()),
                maps: system.maps().iter().filter_map(|m| MapSpec::try_from(m).ok()).collect(),
                c_max: Some(system.c_max()),
                hausdorff_dimension: system.hausdorff_dimension(),
                passed: report.passed(),
                violations: report.messages(),
            }
        }
        // gap filling rejects core maps that break the structural conditions
        Err(fractal_mra::Error::InvalidSystem(msg)) => ValidateResult {
            name: loaded.spec.name.clone(),
            auto_filled,
            n: None,
            a: None,
            maps: Vec::new(),
            c_max: None,
            hausdorff_dimension: None,
            passed: false,
            violations: msg.split("; ").map(String::from).collect(),
        },
        Err(e) => return Err(Failure::input(format!("{}: {e}", args.spec.display()))),
    };
    for v in &result.violations {
        eprintln!("violation: {v}");
    }
    let code = if result.passed { EXIT_OK } else { EXIT_PROPERTY };
    write_json(args.output.out.as_ref(), &envelope.finish(code, result))?;
    Ok(code)
}

fn sample_points(range: (f64, f64), samples: usize) -> CliResult<Vec<f64>> {
    if samples < 2 {
        return Err(Failure::input("at least two samples are needed"));
    }
    let (lo, hi) = range;
    let last = (samples - 1) as f64;
    Ok((0..samples).map(|i| lo + (hi - lo) * i as f64 / last).collect())
}

pub fn scaling_plot(args: &ScalingPlotArgs) -> CliResult<u8> {
    let (system, _) = load_system(&args.spec)?;
    let rows = sample_points(args.range, args.samples)?
        .into_iter()
        .map(|x| {
            let y = system
                .scaling_eval(x)
                .map_err(|e| Failure::numeric(format!("sigma({x}): {e}")))?;
            if y.is_finite() {
                Ok((x, y))
            } else {
                Err(Failure::numeric(format!("sigma({x}) is not finite")))
            }
        })
        .collect::<CliResult<Vec<_>>>()?;
    write_csv(args.output.out.as_ref(), "x,sigma", &rows)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct WaveletResult {
    #[serde(flatten)]
    report: fractal_mra::wavelet::WaveletReport,
    gram_sha256: String,
    max_deviation: f64,
    exact_checks_passed: bool,
    passed: bool,
}

pub fn wavelet_report(args: &WaveletArgs) -> CliResult<u8> {
    let (system, sha) = load_system(&args.spec)?;
    let budget = Budget::from_env();
    let ws = WaveletSystem::new(system);
    let report = ws.report(args.levels as i64, args.shifts as i64, args.seed, budget)?;
    let max_deviation = report
        .gram
        .max_deviation()
        .max(report.father_mother_gram.max_deviation())
        .max(report.filter_unitarity_dev);
    let exact = report.mothers_match_operator_form
        && report.nesting_failures == 0
        && report.operators.passed()
        && report.scaling_equation.violations == 0;
    let passed = report.passed(args.tol);
    let code = if !exact {
        EXIT_PROPERTY
    } else if !passed {
        EXIT_NUMERIC
    } else {
        EXIT_OK
    };
    let result = WaveletResult {
        gram_sha256: matrix_digest(&report.gram_matrix),
        report,
        max_deviation,
        exact_checks_passed: exact,
        passed,
    };
    let envelope = EnvelopeBuilder::new("wavelet report", budget)
        .input("spec", sha)
        .seed(args.seed)
        .tolerance("gram", args.tol);
    write_json(args.output.out.as_ref(), &envelope.finish(code, result))?;
    Ok(code)
}

fn parse_dual_set(text: &str) -> CliResult<Option<Vec<Rational64>>> {
    if text.trim().eq_ignore_ascii_case("auto") {
        return Ok(None);
    }
    text.split(',')
        .map(|t| parse_rational(t).map_err(Failure::from))
        .collect::<CliResult<Vec<_>>>()
        .map(Some)
}

pub fn fourier_report(args: &FourierArgs) -> CliResult<u8> {
    let budget = Budget::from_env();
    let l = parse_dual_set(&args.l)?;
    let settings = FourierSettings {
        k_max: args.kmax,
        tol: args.tol,
        gram_size: args.gram_size,
        q_points: args.q_points,
        cycle_length: args.cycle_length,
    };
    let report = fourier::fourier_report(args.n, args.a.clone(), l, settings, budget)?;
    let code = report.verdict.exit_code() as u8;
    let description = format!(
        "N={};A={};L={}",
        args.n,
        args.a.iter().map(i64::to_string).collect::<Vec<_>>().join(","),
        args.l.trim()
    );
    let envelope = EnvelopeBuilder::new("fourier report", budget)
        .input("arguments", sha256_hex(description.as_bytes()))
        .tolerance("mu_hat_truncation", args.tol)
        .tolerance("unitarity", fourier::UNITARY_TOL)
        .tolerance("gram_offdiag_fail", fourier::GRAM_FAIL)
        .tolerance("bessel_slack", fourier::BESSEL_SLACK)
        .tolerance("q_floor", fourier::Q_FLOOR);
    write_json(args.output.out.as_ref(), &envelope.finish(code, report))?;
    Ok(code)
}

fn load_pair(pair: &Pair) -> CliResult<(Conjugacy, String, String)> {
    let (source, source_sha) = load_system(&pair.source)?;
    let (target, target_sha) = load_system(&pair.target)?;
    Ok((Conjugacy::new(source, target)?, source_sha, target_sha))
}

fn parse_point(text: &str) -> CliResult<f64> {
    let t = text.trim();
    let x = if t.contains('/') {
        let r = parse_rational(t)?;
        *r.numer() as f64 / *r.denom() as f64
    } else {
        t.parse::<f64>()
            .map_err(|e| Failure::input(format!("point {t:?}: {e}")))?
    };
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Failure::input(format!("point {t:?} is not finite")))
    }
}

#[derive(Serialize)]
struct EvalRow {
    x: f64,
    phi: Bounded,
    phi_inverse: Bounded,
    in_source_limit_set: Membership,
}

pub fn conjugacy_eval(args: &ConjugacyEvalArgs) -> CliResult<u8> {
    let (conj, source_sha, target_sha) = load_pair(&args.pair)?;
    let mut rows = Vec::with_capacity(args.x.len());
    for text in &args.x {
        let x = parse_point(text)?;
        let phi = conj.phi_extended(x, args.depth)?;
        let phi_inverse = conj.phi_inverse_extended(x, args.depth)?;
        let k = x.floor();
        let in_source_limit_set = conj.source().in_limit_set(x - k, args.depth)?;
        if !(phi.value.is_finite() && phi_inverse.value.is_finite()) {
            return Err(Failure::numeric(format!("non-finite value at {x}")));
        }
        rows.push(EvalRow {
            x,
            phi,
            phi_inverse,
            in_source_limit_set,
        });
    }
    let envelope = EnvelopeBuilder::new("conjugacy eval", Budget::from_env())
        .input("source", source_sha)
        .input("target", target_sha);
    write_json(args.output.out.as_ref(), &envelope.finish(EXIT_OK, rows))?;
    Ok(EXIT_OK)
}

pub fn conjugacy_plot(args: &ConjugacyPlotArgs) -> CliResult<u8> {
    let (conj, _, _) = load_pair(&args.pair)?;
    if args.samples < 2 {
        return Err(Failure::input("at least two samples are needed"));
    }
    let rows = conj.plot_data(args.range.0, args.range.1, args.samples, args.depth)?;
    if rows.iter().any(|(_, y)| !y.is_finite()) {
        return Err(Failure::numeric("non-finite value in plot data"));
    }
    write_csv(args.output.out.as_ref(), "x,phi", &rows)?;
    Ok(EXIT_OK)
}

/// `N` and `A` of a source whose core maps are `x ↦ (x + a)/N`.
fn linear_core(system: &IFSystem) -> CliResult<(i64, Vec<i64>)> {
    let mut n = None;
    let mut a = Vec::new();
    for map in system.core_maps() {
        let Contraction::Affine { a: slope, b } = *map else {
            return Err(Failure::input("source core maps are not affine"));
        };
        let inv = (1.0 / slope).round();
        if inv < 2.0 || (inv * slope - 1.0).abs() > 1e-12 {
            return Err(Failure::input("source core maps do not have slope 1/N"));
        }
        if n.is_some_and(|m| m != inv as i64) {
            return Err(Failure::input("source core maps have different slopes"));
        }
        n = Some(inv as i64);
        a.push((b * inv).round() as i64);
    }
    Ok((n.ok_or_else(|| Failure::input("source has no core maps"))?, a))
}

#[derive(Serialize)]
struct GramResult {
    #[serde(rename = "N")]
    n: i64,
    #[serde(rename = "A")]
    a: Vec<i64>,
    #[serde(rename = "L")]
    l: Vec<RationalText>,
    lambdas: Vec<RationalText>,
    quadrature_depth: usize,
    quadrature_deviation: f64,
    change_of_variables_deviation: f64,
    max_discrepancy: f64,
    quadrature_sha256: String,
    passed: bool,
}

pub fn conjugacy_gram(args: &ConjugacyGramArgs) -> CliResult<u8> {
    let budget = Budget::from_env();
    let (conj, source_sha, target_sha) = load_pair(&args.pair)?;
    let (n, a) = match (args.n, &args.a) {
        (Some(n), Some(a)) => (n, a.clone()),
        (None, None) => linear_core(conj.source())?,
        _ => return Err(Failure::input("give both -N and -A or neither")),
    };
    let l = match parse_dual_set(&args.l)? {
        Some(l) => l,
        None => find_dual_sets(&a, n, budget)?
            .first()
            .map(|l| l.iter().map(|&x| Rational64::from_integer(x)).collect())
            .ok_or_else(|| Failure::property(format!("no integer dual set for A={a:?}, N={n}")))?,
    };
    let pair = SpectralPair::new(n, a.clone(), l.clone())?;
    if args.count == 0 {
        return Err(Failure::input("--count must be positive"));
    }
    let mut order = 1;
    while pair.p().pow(order as u32) < args.count {
        order += 1;
    }
    let lambdas = pair.lambda_set(order, budget)?.smallest(args.count);
    let tol = fourier::FourierSettings::default().tol;
    let g = generalized_fourier_gram(&pair, &conj, &lambdas, args.depth, tol, budget)?;
    let cov_dev = deviation_from_identity(&g.change_of_variables);
    let passed = g.quadrature_deviation < args.tol;
    let code = if passed { EXIT_OK } else { EXIT_NUMERIC };
    let result = GramResult {
        n,
        a,
        l: l.into_iter().map(RationalText).collect(),
        lambdas: lambdas.iter().copied().map(RationalText).collect(),
        quadrature_depth: args.depth,
        quadrature_deviation: g.quadrature_deviation,
        change_of_variables_deviation: cov_dev,
        max_discrepancy: g.max_discrepancy,
        quadrature_sha256: matrix_digest(&g.quadrature),
        passed,
    };
    let envelope = EnvelopeBuilder::new("conjugacy gram", budget)
        .input("source", source_sha)
        .input("target", target_sha)
        .tolerance("gram", args.tol)
        .tolerance("mu_hat_truncation", tol);
    write_json(args.output.out.as_ref(), &envelope.finish(code, result))?;
    Ok(code)
}

fn deviation_from_identity(m: &[Vec<num_complex::Complex64>]) -> f64 {
    let mut dev = 0.0_f64;
    for (r, row) in m.iter().enumerate() {
        for (c, z) in row.iter().enumerate() {
            let t = if r == c { 1.0 } else { 0.0 };
            dev = dev.max((z - t).norm());
        }
    }
    dev
}
