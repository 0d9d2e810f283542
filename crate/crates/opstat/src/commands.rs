//! The workflows behind each subcommand. Every function returns a
//! [`Report`]; rendering and writing are left to the caller.

use std::path::{Path, PathBuf};

use opstat_core::entropy::ApproxOrder;
use opstat_core::montecarlo::multinomial_counts;
use opstat_core::{
    asymptotic_variance_plugin, basharin_moments, compare_entropies_with, corrected_model,
    entropy_ci, entropy_of_counts, exact_mean, exact_variance, histogram,
    hutcheson_approx_moments, sample_size_warning, symbolize, tied_windows, PatternHistogram,
    PrecisionConfig, ProbabilityVector, Scenario, TestOptions, TestResult, TiePolicy,
};

use crate::config::{GridConfig, McConfig};
use crate::error::{CliError, Stage};
use crate::input::{load_series, read_histogram, InputFormat, LoadedSeries, MissingPolicy, SeriesFile};
use crate::parallel::{accuracy_grid_par, pool, replicate_entropy_par};
use crate::report::{Cell, Report, ReportSpec, Table};

/// How series files are read.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SeriesOptions {
    pub format: InputFormat,
    pub value_column: Option<String>,
    pub date_column: Option<String>,
    pub missing: MissingPolicy,
}

impl SeriesOptions {
    pub fn file(&self, path: &Path) -> SeriesFile {
        SeriesFile {
            path: path.to_path_buf(),
            format: self.format,
            value_column: self.value_column.clone(),
            date_column: self.date_column.clone(),
            missing: self.missing,
        }
    }
}

/// A series after loading, symbolization and counting.
pub struct Symbolized {
    pub loaded: LoadedSeries,
    pub patterns: Vec<u32>,
    pub histogram: PatternHistogram,
    pub tied_windows: usize,
}

pub fn load_symbolized(
    path: &Path,
    opts: &SeriesOptions,
    dimension: usize,
    ties: TiePolicy,
) -> Result<Symbolized, CliError> {
    let loaded = load_series(&opts.file(path))?;
    let seq = symbolize(&loaded.series, dimension, ties).stage("symbolize")?;
    let histogram = histogram(&seq).stage("histogram")?;
    Ok(Symbolized {
        tied_windows: tied_windows(&loaded.series, dimension),
        patterns: seq.indices().to_vec(),
        histogram,
        loaded,
    })
}

fn normalized_entropy(h: f64, k: usize) -> f64 {
    h / (k as f64).ln()
}

fn label(path: &Path) -> String {
    path.display().to_string()
}

fn input_notices(report: &mut Report, path: &Path, s: &Symbolized, ties: TiePolicy) {
    if s.tied_windows > 0 && ties == TiePolicy::StableOrder {
        report.notice(format!(
            "{} D={}: {} of {} windows contain ties, ranked by order of occurrence (--ties stable)",
            label(path),
            s.histogram.dimension().unwrap_or(0),
            s.tied_windows,
            s.patterns.len()
        ));
    }
    if s.loaded.dropped > 0 || !s.loaded.gaps.is_empty() {
        report.notice(format!(
            "{}: {} rows dropped, {} gaps; patterns are formed across gaps",
            label(path),
            s.loaded.dropped,
            s.loaded.gaps.len()
        ));
    }
    let what = format!("{} D={}", label(path), s.histogram.dimension().unwrap_or(0));
    advisory(report, &what, &s.histogram);
}

fn advisory(report: &mut Report, what: &str, h: &PatternHistogram) {
    if let Some(a) = sample_size_warning(h.n(), h.k() as u64) {
        report.notice(format!("{what}: {a}"));
    }
}

pub fn cmd_symbolize(
    path: &Path,
    opts: &SeriesOptions,
    dimension: usize,
    ties: TiePolicy,
    with_sequence: bool,
) -> Result<Report, CliError> {
    let s = load_symbolized(path, opts, dimension, ties)?;
    let mut r = Report::new("symbolize");
    r.meta("file", label(path))
        .meta("dimension", dimension)
        .meta("k", s.histogram.k())
        .meta("n", s.histogram.n())
        .meta("tie_policy", ties.to_string())
        .meta("rows_dropped", s.loaded.dropped)
        .meta("gaps", s.loaded.gaps.len());
    input_notices(&mut r, path, &s, ties);
    let mut t = Table::new("histogram", &["pattern", "count"]);
    for (i, &c) in s.histogram.counts().iter().enumerate() {
        t.push(vec![i.into(), c.into()]);
    }
    r.table(t);
    if with_sequence {
        let mut t = Table::new("sequence", &["position", "pattern"]);
        for (j, &p) in s.patterns.iter().enumerate() {
            t.push(vec![j.into(), (p as u64).into()]);
        }
        r.table(t);
    }
    Ok(r)
}

pub fn cmd_entropy(
    paths: &[PathBuf],
    opts: &SeriesOptions,
    dimensions: &[usize],
    ties: TiePolicy,
) -> Result<Report, CliError> {
    let mut r = Report::new("entropy");
    r.meta("tie_policy", ties.to_string());
    let mut t = Table::new(
        "entropy",
        &["file", "D", "k", "n", "H_nats", "H_bits", "H_normalized", "zero_bins", "tied_windows", "rows_dropped", "gaps"],
    );
    for path in paths {
        for &d in dimensions {
            let s = load_symbolized(path, opts, d, ties)?;
            input_notices(&mut r, path, &s, ties);
            let h = &s.histogram;
            let nats = entropy_of_counts(h.counts(), h.n());
            t.push(vec![
                label(path).into(),
                d.into(),
                h.k().into(),
                h.n().into(),
                nats.into(),
                (nats / std::f64::consts::LN_2).into(),
                normalized_entropy(nats, h.k()).into(),
                h.zero_bins().into(),
                s.tied_windows.into(),
                s.loaded.dropped.into(),
                s.loaded.gaps.len().into(),
            ]);
        }
    }
    r.table(t);
    Ok(r)
}

/// What the moments are computed for.
pub enum MomentSource {
    /// Plug-in proportions of an observed histogram (`n` = its size).
    Histogram { label: String, histogram: PatternHistogram },
    /// A known law and sample size.
    Law { label: String, p: ProbabilityVector, n: u64 },
}

pub fn cmd_moments(
    source: &MomentSource,
    normalized: bool,
    precision: PrecisionConfig,
    exact: bool,
) -> Result<Report, CliError> {
    let (what, p, n, plug_in) = match source {
        MomentSource::Histogram { label, histogram } => {
            (label.clone(), ProbabilityVector::from_histogram(histogram), histogram.n(), true)
        }
        MomentSource::Law { label, p, n } => (label.clone(), p.clone(), *n, false),
    };
    let k = p.k();
    let mut r = Report::new("moments");
    r.meta("source", what.as_str())
        .meta("k", k)
        .meta("n", n)
        .meta("plug_in", plug_in)
        .meta("normalized", normalized)
        .meta("units", if normalized { "entropy / ln k" } else { "nats" });
    if exact {
        r.meta("precision_bits", precision.significand_bits).meta("max_n", precision.max_n);
    }
    if let MomentSource::Histogram { histogram, .. } = source {
        advisory(&mut r, &what, histogram);
    }

    let lk = (k as f64).ln();
    let scale = |mean: f64, var: f64| {
        if normalized {
            (mean / lk, var / (lk * lk))
        } else {
            (mean, var)
        }
    };
    let mut t = Table::new("moments", &["method", "mean", "variance", "sd", "error_bound"]);
    let row = |t: &mut Table, method: &str, mean: f64, var: f64, bound: Option<f64>| {
        let (m, v) = scale(mean, var);
        let b = bound.map(|b| if normalized { b / lk } else { b });
        t.push(vec![method.into(), m.into(), v.into(), v.sqrt().into(), b.into()]);
    };

    let h = opstat_core::shannon_entropy(&p);
    let first = basharin_moments(&p, n).stage("moments")?;
    row(&mut t, "first-order", first.mean, first.variance, None);
    if p.strictly_positive() {
        for order in [ApproxOrder::Second, ApproxOrder::Third] {
            let m = hutcheson_approx_moments(&p, n, order).stage("moments")?;
            row(&mut t, m.method.name(), m.mean, m.variance, None);
        }
        let asym = asymptotic_variance_plugin(&p, n).stage("moments")?;
        row(&mut t, "asymptotic", h, asym, None);
        let c = corrected_model(&p, n, false).stage("moments")?;
        row(&mut t, "corrected", c.mu, c.sigma2, None);
        if c.is_degenerate() {
            r.notice("the asymptotic variance is zero (uniform law); the Normal approximation is degenerate");
        }
    } else {
        let asym = asymptotic_variance_plugin(&p, n).stage("moments")?;
        row(&mut t, "asymptotic", h, asym, None);
        r.notice("empty bins: higher-order expansions need strictly positive probabilities and are omitted");
    }
    if exact {
        let m = exact_mean(&p, n, &precision).stage("exact mean")?;
        let v = if n >= 2 {
            Some(exact_variance(&p, n, &precision).stage("exact variance")?)
        } else {
            None
        };
        let (mv, vv) = (m.value, v.map_or(0.0, |v| v.value));
        let (sm, sv) = scale(mv, vv);
        let bound = m.error_bound.max(v.map_or(0.0, |v| v.error_bound));
        t.push(vec![
            "exact".into(),
            sm.into(),
            sv.into(),
            sv.sqrt().into(),
            (if normalized { bound / lk } else { bound }).into(),
        ]);
    }
    r.table(t);
    Ok(r)
}

/// One side of a test: a series file or a histogram file.
#[derive(Debug, Clone)]
pub enum TestInput {
    Series(PathBuf),
    Histogram(PathBuf),
}

impl TestInput {
    fn path(&self) -> &Path {
        match self {
            TestInput::Series(p) | TestInput::Histogram(p) => p,
        }
    }
}

fn test_side(
    input: &TestInput,
    opts: &SeriesOptions,
    dimension: Option<usize>,
    ties: TiePolicy,
    r: &mut Report,
) -> Result<PatternHistogram, CliError> {
    match input {
        TestInput::Histogram(path) => {
            let h = read_histogram(path, dimension)?;
            advisory(r, &label(path), &h);
            Ok(h)
        }
        TestInput::Series(path) => {
            let d = dimension.ok_or_else(|| CliError::Usage("an embedding dimension is required for series input".into()))?;
            let s = load_symbolized(path, opts, d, ties)?;
            input_notices(r, path, &s, ties);
            Ok(s.histogram)
        }
    }
}

const TEST_COLUMNS: &[&str] = &[
    "x", "y", "D_x", "D_y", "n_x", "n_y", "k_x", "k_y", "H_x", "H_y", "W", "sigma_W", "epsilon",
    "p_bilateral", "p_left", "p_right", "p_adjusted", "reject", "degenerate",
];

fn test_row(x: &TestInput, y: &TestInput, hx: &PatternHistogram, hy: &PatternHistogram, t: &TestResult, alpha: f64) -> Vec<Cell> {
    let adjusted = t.adjusted_p();
    vec![
        label(x.path()).into(),
        label(y.path()).into(),
        hx.dimension().into(),
        hy.dimension().into(),
        hx.n().into(),
        hy.n().into(),
        hx.k().into(),
        hy.k().into(),
        t.h_x.into(),
        t.h_y.into(),
        t.w.into(),
        t.sigma_w.into(),
        t.epsilon.into(),
        t.p_bilateral.into(),
        t.p_left.into(),
        t.p_right.into(),
        adjusted.into(),
        (adjusted < alpha).into(),
        t.degenerate.into(),
    ]
}

fn test_meta(r: &mut Report, spec: &ReportSpec, ties: TiePolicy) {
    r.meta("alpha", spec.alpha)
        .meta("bonferroni_m", spec.bonferroni)
        .meta("normalized", spec.normalized)
        .meta("units", if spec.normalized { "entropy / ln k" } else { "nats" })
        .meta("tie_policy", ties.to_string());
}

fn run_test(hx: &PatternHistogram, hy: &PatternHistogram, spec: &ReportSpec) -> Result<TestResult, CliError> {
    let opts = TestOptions {
        normalized: spec.normalized,
        ..Default::default()
    };
    let t = compare_entropies_with(hx, hy, &opts).stage("test")?;
    match spec.bonferroni {
        Some(m) => t.with_bonferroni(m).stage("test"),
        None => Ok(t),
    }
}

/// Tests `H(x) = H(y)` for one pair of inputs.
pub fn cmd_test(
    x: &TestInput,
    dx: Option<usize>,
    y: &TestInput,
    dy: Option<usize>,
    opts: &SeriesOptions,
    ties: TiePolicy,
    spec: &ReportSpec,
) -> Result<(Report, TestResult), CliError> {
    spec.validate()?;
    let mut r = Report::new("test");
    test_meta(&mut r, spec, ties);
    let hx = test_side(x, opts, dx, ties, &mut r)?;
    let hy = test_side(y, opts, dy, ties, &mut r)?;
    let result = run_test(&hx, &hy, spec)?;
    if result.degenerate {
        r.notice("sigma_W is zero: the test is degenerate (p = 1 when W = 0, else 0)");
    }
    let mut t = Table::new("tests", TEST_COLUMNS);
    t.push(test_row(x, y, &hx, &hy, &result, spec.alpha));
    r.table(t);
    Ok((r, result))
}

/// Every `(D_x, D_y)` pair from `dimensions` for two series files.
pub fn cmd_test_matrix(
    x: &Path,
    y: &Path,
    dimensions: &[usize],
    opts: &SeriesOptions,
    ties: TiePolicy,
    spec: &ReportSpec,
) -> Result<Report, CliError> {
    spec.validate()?;
    let mut r = Report::new("test");
    test_meta(&mut r, spec, ties);
    r.meta("matrix_dimensions", dimensions.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(","));
    let (ix, iy) = (TestInput::Series(x.to_path_buf()), TestInput::Series(y.to_path_buf()));
    let mut hxs = Vec::new();
    let mut hys = Vec::new();
    for &d in dimensions {
        hxs.push(test_side(&ix, opts, Some(d), ties, &mut r)?);
        hys.push(test_side(&iy, opts, Some(d), ties, &mut r)?);
    }
    let mut long = Table::new("tests", TEST_COLUMNS);
    let mut columns = vec!["D_x\\D_y".to_string()];
    columns.extend(dimensions.iter().map(|d| format!("D={d}")));
    let mut matrix = Table {
        name: "p_matrix".into(),
        columns,
        rows: Vec::new(),
    };
    for (hx, &dx) in hxs.iter().zip(dimensions) {
        let mut mrow: Vec<Cell> = vec![dx.into()];
        for hy in &hys {
            let t = run_test(hx, hy, spec)?;
            mrow.push(t.adjusted_p().into());
            long.push(test_row(&ix, &iy, hx, hy, &t, spec.alpha));
        }
        matrix.push(mrow);
    }
    r.table(matrix);
    r.table(long);
    Ok(r)
}

/// Result of a Monte Carlo run: the report and the raw replicate stream.
pub struct McOutcome {
    pub report: Report,
    pub samples: Vec<f64>,
}

fn scenario_meta(r: &mut Report, scenario: Scenario, k: usize) {
    r.meta("scenario", scenario.name()).meta("k", k).meta("epsilon", scenario.epsilon(k));
}

pub fn cmd_mc(cfg: &McConfig, threads: Option<usize>) -> Result<McOutcome, CliError> {
    cfg.validate()?;
    let p = cfg.scenario.probabilities(cfg.k).stage("scenario")?;
    let reps = pool(threads)?
        .install(|| replicate_entropy_par(&p, cfg.n, cfg.replicates, cfg.seed, cfg.normalized))
        .stage("replicates")?;
    let model = corrected_model(&p, cfg.n, cfg.normalized).stage("model")?;
    let s = &reps.summary;
    let mut r = Report::new("mc");
    r.meta("seed", cfg.seed);
    scenario_meta(&mut r, cfg.scenario, cfg.k);
    r.meta("n", cfg.n)
        .meta("replicates", cfg.replicates)
        .meta("normalized", cfg.normalized)
        .meta("rng", "chacha8, stream = replicate index");
    let mut t = Table::new(
        "summary",
        &[
            "scenario", "epsilon", "k", "n", "replicates", "mean", "mean_ci", "median", "median_ci",
            "sd", "sd_ci", "skewness", "skewness_ci", "excess_kurtosis", "excess_kurtosis_ci",
            "model_mean", "model_sd",
        ],
    );
    t.push(vec![
        cfg.scenario.name().into(),
        cfg.scenario.epsilon(cfg.k).into(),
        cfg.k.into(),
        cfg.n.into(),
        cfg.replicates.into(),
        s.mean.into(),
        s.ci_halfwidths.mean.into(),
        s.median.into(),
        s.ci_halfwidths.median.into(),
        s.sd.into(),
        s.ci_halfwidths.sd.into(),
        s.skewness.into(),
        s.ci_halfwidths.skewness.into(),
        s.excess_kurtosis.into(),
        s.ci_halfwidths.excess_kurtosis.into(),
        model.mu.into(),
        model.sigma().into(),
    ]);
    r.table(t);
    Ok(McOutcome {
        report: r,
        samples: reps.samples,
    })
}

/// One multinomial histogram (the stream of replicate 0 under `seed`).
pub fn cmd_sample_histogram(scenario: Scenario, k: usize, n: u64, seed: u64) -> Result<Report, CliError> {
    if n == 0 {
        return Err(CliError::config("n", "must be at least 1"));
    }
    let p = scenario.probabilities(k).stage("scenario")?;
    let counts = multinomial_counts(&p, n, &mut opstat_core::montecarlo::replicate_rng(seed, 0));
    let mut r = Report::new("mc");
    r.meta("seed", seed);
    scenario_meta(&mut r, scenario, k);
    r.meta("n", n).meta("output", "histogram");
    let mut t = Table::new("histogram", &["pattern", "count"]);
    for (i, c) in counts.into_iter().enumerate() {
        t.push(vec![i.into(), c.into()]);
    }
    r.table(t);
    Ok(r)
}

pub fn cmd_grid(cfg: &GridConfig, threads: Option<usize>) -> Result<Report, CliError> {
    cfg.validate()?;
    let spec = &cfg.spec;
    let cells = pool(threads)?.install(|| accuracy_grid_par(spec)).stage("grid")?;
    let mut r = Report::new("grid");
    r.meta("precision_bits", spec.precision.significand_bits)
        .meta("max_n", spec.precision.max_n)
        .meta("fallback_replicates", spec.fallback.map(|f| f.replicates))
        .meta("fallback_seed", spec.fallback.map(|f| f.seed));
    let mut t = Table::new(
        "grid",
        &["scenario", "epsilon", "k", "n", "method", "certified_source", "certified", "approximation", "re", "lre", "lre_digits"],
    );
    for c in &cells {
        if c.certified.is_none() {
            r.notice(format!("{} k={} n={}: no certified value available", c.scenario.name(), c.k, c.n));
        }
        t.push(vec![
            c.scenario.name().into(),
            c.epsilon.into(),
            c.k.into(),
            c.n.into(),
            c.method.name().into(),
            c.source.name().into(),
            c.certified.into(),
            c.approximation.into(),
            c.re.into(),
            c.lre.into(),
            c.lre_digits().into(),
        ]);
    }
    r.table(t);
    Ok(r)
}

/// Normalized entropy and confidence interval per `(file, D)`.
pub fn cmd_report_hc(
    paths: &[PathBuf],
    opts: &SeriesOptions,
    dimensions: &[usize],
    level: f64,
    ties: TiePolicy,
) -> Result<Report, CliError> {
    if !(level > 0.0 && level < 1.0) {
        return Err(CliError::config("level", format!("{level} is outside (0, 1)")));
    }
    let mut r = Report::new("report-hc");
    r.meta("level", level)
        .meta("normalized", true)
        .meta("tie_policy", ties.to_string());
    let mut t = Table::new(
        "ci",
        &["file", "D", "k", "n", "H_normalized", "center", "lo", "hi", "sigma", "center_method", "degenerate"],
    );
    for path in paths {
        for &d in dimensions {
            let s = load_symbolized(path, opts, d, ties)?;
            input_notices(&mut r, path, &s, ties);
            let h = &s.histogram;
            let ci = entropy_ci(h, level, true).stage("confidence interval")?;
            if ci.fell_back() {
                r.notice(format!(
                    "{} D={d}: empty bins, interval centred on the first-order mean",
                    label(path)
                ));
            }
            if ci.degenerate {
                r.notice(format!("{} D={d}: zero variance, point interval", label(path)));
            }
            t.push(vec![
                label(path).into(),
                d.into(),
                h.k().into(),
                h.n().into(),
                normalized_entropy(entropy_of_counts(h.counts(), h.n()), h.k()).into(),
                ci.center.into(),
                ci.lo.into(),
                ci.hi.into(),
                ci.sigma.into(),
                ci.center_method.name().into(),
                ci.degenerate.into(),
            ]);
        }
    }
    r.table(t);
    Ok(r)
}
