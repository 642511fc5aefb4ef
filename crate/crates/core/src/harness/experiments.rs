use rand::Rng as _;
use serde_json::{json, Map, Value};

use super::config::{ExperimentConfig, Kind, Param, COMMON, TRIALS};
use super::report::{Assertion, Report, Row};
use crate::decoupling::{
    critical_p_bound, criticality_rows, criticality_summary, flat_decoupling_check, lp_moments, pigeonhole_analysis,
    planted_fixture, plank_height_check, random_ensemble, sigma_pd, standard_fixtures, CriticalityRow, Domain,
    ExpSum, MomentOptions, Sampler, RANDOM_SLOPE_CAP, SLOPE_GAP_MIN,
};
use crate::geometry::{dual_box, frenet_frame, make_box, Interval, Role, Scale, ShearMap};
use crate::incidence::{
    brute_force_rich_cubes, count_rich_cubes, default_density, fit_envelope, generate_family, l4_plank_sum,
    origin_family, triple_volume_law, verify_plank_incidence, verify_plate_kakeya, verify_tube_incidence,
    verify_union_lemmas, Caps, FamilyOptions, IncidenceReport, L4Method, Mode, PlateBound, SLACK_EXPONENT,
    VOLUME_BAND,
};
use crate::partition::verify_partition_lemmas_with;
use crate::{rng, Error, Mat3, Result, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Module {
    Geometry,
    Partition,
    Incidence,
    Decoupling,
}

impl Module {
    pub fn name(self) -> &'static str {
        match self {
            Module::Geometry => "geometry",
            Module::Partition => "partition",
            Module::Incidence => "incidence",
            Module::Decoupling => "decoupling",
        }
    }
}

type Summary = (Map<String, Value>, Vec<Assertion>);

/// A registered verifier: its parameters, output columns and the functions
/// producing rows and recomputing the summary from rows.
pub struct Experiment {
    pub id: &'static str,
    pub module: Module,
    pub description: &'static str,
    pub params: &'static [Param],
    /// Default trial count, for experiments that repeat over trials.
    pub trials: Option<&'static str>,
    pub columns: &'static [&'static str],
    rows: fn(&ExperimentConfig) -> Result<Vec<Row>>,
    summarize: fn(&ExperimentConfig, &[Row]) -> Result<Summary>,
}

impl Experiment {
    /// Every accepted key, common ones first.
    pub fn schema(&self) -> Vec<Param> {
        let mut out = COMMON.to_vec();
        if let Some(default) = self.trials {
            out.extend(TRIALS.iter().map(|p| if p.key == "trials" { Param { default, ..*p } } else { *p }));
        }
        out.extend_from_slice(self.params);
        out
    }

    pub fn run(&self, config: &ExperimentConfig) -> Result<Report> {
        let start = std::time::Instant::now();
        let rows = if config.threads > 0 {
            rayon::ThreadPoolBuilder::new()
                .num_threads(config.threads)
                .build()
                .map_err(|e| Error::config("threads", e.to_string()))?
                .install(|| (self.rows)(config))?
        } else {
            (self.rows)(config)?
        };
        self.assemble(config, rows, start.elapsed().as_secs_f64())
    }

    pub(crate) fn assemble(&self, config: &ExperimentConfig, rows: Vec<Row>, wall_clock_s: f64) -> Result<Report> {
        for (i, row) in rows.iter().enumerate() {
            if !row.keys().map(String::as_str).eq(self.columns.iter().copied()) {
                return Err(Error::domain(format!("row {i} of `{}` does not match its columns", self.id)));
            }
        }
        let (summary, assertions) = (self.summarize)(config, &rows)?;
        Ok(Report {
            experiment: self.id.into(),
            module: self.module.name().into(),
            config: config.params.clone(),
            columns: self.columns.iter().map(|c| c.to_string()).collect(),
            rows,
            summary,
            pass: assertions.iter().all(|a| a.pass),
            assertions,
            wall_clock_s,
        })
    }
}

macro_rules! row {
    ($($k:literal => $v:expr),* $(,)?) => {{
        let mut m = Row::new();
        $( m.insert($k.to_string(), json!($v)); )*
        m
    }};
}

fn num(row: &Row, key: &str) -> f64 {
    row.get(key).and_then(Value::as_f64).unwrap_or(f64::NAN)
}

fn int(row: &Row, key: &str) -> u64 {
    row.get(key).and_then(Value::as_u64).unwrap_or(0)
}

fn text<'a>(row: &'a Row, key: &str) -> &'a str {
    row.get(key).and_then(Value::as_str).unwrap_or("")
}

fn flag(row: &Row, key: &str) -> bool {
    row.get(key).and_then(Value::as_bool).unwrap_or(false)
}

fn trials(c: &ExperimentConfig) -> std::ops::Range<usize> {
    c.trial_range().unwrap_or(0..1)
}

fn max_of(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(f64::NEG_INFINITY, f64::max)
}

fn min_of(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(f64::INFINITY, f64::min)
}

fn map(pairs: Vec<(&str, Value)>) -> Map<String, Value> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn nonempty(rows: &[Row]) -> Assertion {
    Assertion::new("rows", !rows.is_empty(), format!("{} rows", rows.len()))
}

// ---------------------------------------------------------------- geometry

const RECT_ROLES: [Role; 9] = [
    Role::FreqPlank,
    Role::SpatialPlank,
    Role::Tube,
    Role::FatPlate,
    Role::BoxB,
    Role::BoxSigma,
    Role::BoxTau,
    Role::BoxLambda,
    Role::Plate,
];

/// Largest errors of the dual-length products, the shear pairing and the
/// frame orthonormality over `cases` random inputs each.
pub fn exactness_errors(cases: usize, seed: u64) -> Result<[f64; 3]> {
    let mut g = rng::stream(seed, 0);
    let mut dual = 0.0f64;
    for _ in 0..cases {
        let role = RECT_ROLES[g.gen_range(0..RECT_ROLES.len())];
        let scale = if role == Role::Plate {
            Scale::Delta(2f64.powi(-g.gen_range(1..=12)))
        } else {
            Scale::R(2f64.powi(g.gen_range(3..=36)))
        };
        let c = g.gen_range(0.0..1.0);
        let center = Vec3::from_fn(|_, _| g.gen_range(-1e3..1e3));
        let b = make_box(role, Some(Interval::new(c, c)?), scale, center)?;
        let d = dual_box(&b)?;
        for i in 0..3 {
            dual = dual.max((b.lengths[i] * d.lengths[i] - 1.0).abs());
        }
    }
    let mut pairing = 0.0f64;
    for _ in 0..cases {
        let m = ShearMap::new(2f64.powi(-g.gen_range(0..=6)), g.gen_range(0.0..1.0))?;
        let w = Vec3::from_fn(|_, _| g.gen_range(-1.0..1.0));
        let x = Vec3::from_fn(|_, _| g.gen_range(-1.0..1.0));
        let (tw, ax) = (m.apply(&w), m.apply_dual(&x));
        pairing = pairing.max((tw.dot(&ax) - w.dot(&x)).abs() / (tw.norm() * ax.norm()));
    }
    let mut ortho = 0.0f64;
    for _ in 0..cases {
        let f = frenet_frame(g.gen_range(0.0..=1.0))?;
        let a = f.axes();
        let m = Mat3::from_columns(&a);
        ortho = ortho.max((m.transpose() * m - Mat3::identity()).amax());
    }
    Ok([dual, pairing, ortho])
}

const EXACTNESS_CHECKS: [(&str, f64); 3] =
    [("dual-product", 1e-12), ("shear-pairing", 1e-10), ("frame-orthonormality", 1e-12)];

fn geometry_rows(c: &ExperimentConfig) -> Result<Vec<Row>> {
    let (seed, cases) = (c.seed(), c.usize("cases")?);
    let mut rows = Vec::new();
    for t in trials(c) {
        let ts = rng::derive(seed, t as u64);
        let errs = exactness_errors(cases, ts)?;
        for ((check, tol), err) in EXACTNESS_CHECKS.iter().zip(errs) {
            rows.push(row! {
                "seed" => seed, "trial" => t, "trial_seed" => ts, "check" => check, "cases" => cases,
                "max_error" => err, "tolerance" => tol, "pass" => err <= *tol,
            });
        }
    }
    Ok(rows)
}

fn geometry_summary(_: &ExperimentConfig, rows: &[Row]) -> Result<Summary> {
    let mut summary = Map::new();
    let mut asserts = vec![nonempty(rows)];
    for (check, tol) in EXACTNESS_CHECKS {
        let mine: Vec<&Row> = rows.iter().filter(|r| text(r, "check") == check).collect();
        let worst = max_of(mine.iter().map(|r| num(r, "max_error")));
        let cases: u64 = mine.iter().map(|r| int(r, "cases")).sum();
        summary.insert(check.into(), json!({"max_error": worst, "cases": cases}));
        asserts.push(Assertion::new(check, mine.iter().all(|r| flag(r, "pass")), format!("max error {worst:e} (tolerance {tol:e})")));
    }
    Ok((summary, asserts))
}

// --------------------------------------------------------------- partition

fn partition_rows(c: &ExperimentConfig) -> Result<Vec<Row>> {
    let seed = c.seed();
    let (samples, factor, layer_factor) = (c.usize("samples")?, c.float("factor")?, c.float("layer_factor")?);
    let mut rows = Vec::new();
    for r in c.floats("R")? {
        let rep = verify_partition_lemmas_with(r, samples, seed, factor, layer_factor)?;
        let layers: Vec<String> = rep.sigma_layers.iter().map(|l| format!("{}:{}", l.sigma, l.count)).collect();
        rows.push(row! {
            "seed" => seed, "R" => r, "samples" => samples, "factor" => factor, "layer_factor" => layer_factor,
            "violations" => rep.violations, "nesting_violations" => rep.nesting_violations,
            "max_multiplicity" => rep.max_multiplicity, "coverage" => rep.coverage,
            "needed_factor" => rep.needed_factor, "layers" => layers.join(";"),
        });
    }
    Ok(rows)
}

fn partition_summary(_: &ExperimentConfig, rows: &[Row]) -> Result<Summary> {
    let violations: u64 = rows.iter().map(|r| int(r, "violations")).sum();
    let mut by_r: Vec<(f64, u64)> = rows.iter().map(|r| (num(r, "R"), int(r, "max_multiplicity"))).collect();
    by_r.sort_by(|a, b| a.0.total_cmp(&b.0));
    let summary = map(vec![
        ("violations", json!(violations)),
        ("max_multiplicity", json!(by_r.iter().map(|(r, m)| json!({"R": r, "max_multiplicity": m})).collect::<Vec<_>>())),
        ("needed_factor", json!(max_of(rows.iter().map(|r| num(r, "needed_factor"))))),
    ]);
    let mut asserts = vec![nonempty(rows), Assertion::new("containment", violations == 0, format!("{violations} violations"))];
    if let (Some(lo), Some(hi)) = (by_r.first(), by_r.last()) {
        if by_r.len() > 1 {
            asserts.push(Assertion::new(
                "multiplicity-growth",
                hi.1 <= lo.1 + 1,
                format!("max multiplicity {} at R = {} vs {} at R = {}", hi.1, hi.0, lo.1, lo.0),
            ));
        }
    }
    Ok((summary, asserts))
}

// ------------------------------------------------------- incidence: volumes

fn union_rows(c: &ExperimentConfig) -> Result<Vec<Row>> {
    let seed = c.seed();
    let mut rows = Vec::new();
    for r in c.floats("R")? {
        let rep = verify_union_lemmas(r, None)?;
        for u in rep.rows {
            rows.push(row! {
                "seed" => seed, "R" => r, "delta" => rep.delta, "statement" => u.lemma, "part" => u.part,
                "sigma" => u.sigma, "j_lo" => u.j_lo, "j_hi" => u.j_hi, "value" => u.value, "pass" => u.pass,
            });
        }
    }
    Ok(rows)
}

fn union_summary(_: &ExperimentConfig, rows: &[Row]) -> Result<Summary> {
    let worst_slack = max_of(rows.iter().filter(|r| text(r, "part") == "union").map(|r| num(r, "value")));
    let worst_band = max_of(
        rows.iter().filter(|r| text(r, "part") == "intersection").map(|r| num(r, "value").max(1.0 / num(r, "value"))),
    );
    let failed = rows.iter().filter(|r| !flag(r, "pass")).count();
    Ok((
        map(vec![("worst_slack", json!(worst_slack)), ("worst_band", json!(worst_band)), ("failed", json!(failed))]),
        vec![nonempty(rows), Assertion::new("statements", failed == 0, format!("{failed} of {} rows fail", rows.len()))],
    ))
}

fn triple_rows(c: &ExperimentConfig) -> Result<Vec<Row>> {
    let seed = c.seed();
    let mut rows = Vec::new();
    for delta in c.floats("delta")? {
        for t in triple_volume_law(delta)? {
            rows.push(row! {
                "seed" => seed, "delta" => t.delta, "d2" => t.d2, "d3" => t.d3,
                "volume" => t.volume, "formula" => t.formula, "ratio" => t.ratio,
            });
        }
    }
    Ok(rows)
}

fn triple_summary(_: &ExperimentConfig, rows: &[Row]) -> Result<Summary> {
    let lo = min_of(rows.iter().map(|r| num(r, "ratio")));
    let hi = max_of(rows.iter().map(|r| num(r, "ratio")));
    let ok = rows.iter().all(|r| {
        let v = num(r, "ratio");
        (1.0 / VOLUME_BAND..=VOLUME_BAND).contains(&v)
    });
    Ok((
        map(vec![("min_ratio", json!(lo)), ("max_ratio", json!(hi)), ("cases", json!(rows.len()))]),
        vec![nonempty(rows), Assertion::new("volume-band", ok, format!("ratios in [{lo:.4}, {hi:.4}], band [1/{VOLUME_BAND}, {VOLUME_BAND}]"))],
    ))
}

fn l4_rows(c: &ExperimentConfig) -> Result<Vec<Row>> {
    let seed = c.seed();
    let method_name = c.text("method")?.to_string();
    let method = match method_name.as_str() {
        "exact" => L4Method::Exact,
        _ => L4Method::MonteCarlo { samples: c.usize("samples")?, seed },
    };
    let mut rows = Vec::new();
    for delta in c.floats("delta")? {
        let s = l4_plank_sum(&origin_family(delta)?, method)?;
        let log = (1.0 / delta).ln();
        rows.push(row! {
            "seed" => seed, "delta" => delta, "method" => method_name, "l4" => s.l4, "l1" => s.l1,
            "stderr" => s.stderr, "work" => s.work, "ratio" => s.ratio(), "normalized" => s.ratio() / (log * log),
        });
    }
    Ok(rows)
}

fn l4_summary(_: &ExperimentConfig, rows: &[Row]) -> Result<Summary> {
    let base = rows.iter().max_by(|a, b| num(a, "delta").total_cmp(&num(b, "delta")));
    let c0 = base.map(|r| num(r, "normalized")).unwrap_or(f64::NAN);
    let worst = max_of(rows.iter().map(|r| num(r, "normalized") / c0));
    Ok((
        map(vec![("c0", json!(c0)), ("max_growth", json!(worst))]),
        vec![nonempty(rows), Assertion::new("normalized-growth", worst <= 2.0, format!("largest normalized ratio is {worst:.4} C0"))],
    ))
}

// ----------------------------------------------------- incidence: counting

fn r_grid(c: &ExperimentConfig) -> Result<Vec<u32>> {
    Ok(crate::incidence::dyadic_r_grid(c.int("r_max")? as u32))
}

fn family_opts(c: &ExperimentConfig) -> Result<FamilyOptions> {
    let density = c.float("density")?;
    Ok(FamilyOptions {
        density: (density > 0.0).then_some(density),
        mode: c.text("mode")?.parse()?,
        first_trial: trials(c).start,
    })
}

fn incidence_to_rows(seed: u64, rep: IncidenceReport) -> Vec<Row> {
    rep.rows
        .into_iter()
        .map(|r| {
            row! {
                "theorem" => r.theorem, "R_or_delta" => r.r_or_delta, "caps" => r.caps, "r" => r.r,
                "count" => r.count, "bound" => r.bound, "ratio" => r.ratio, "trials" => r.trials, "seed" => seed,
            }
        })
        .collect()
}

fn tube_rows(c: &ExperimentConfig) -> Result<Vec<Row>> {
    let n1 = c.usize("N1")?;
    let caps = Caps { n: Some(c.usize("N")?), n1: (n1 > 0).then_some(n1), ..Default::default() };
    let t = trials(c);
    let rep = verify_tube_incidence(c.float("R")?, caps, &r_grid(c)?, t.len(), c.seed(), family_opts(c)?)?;
    Ok(incidence_to_rows(c.seed(), rep))
}

fn plate_rows(c: &ExperimentConfig) -> Result<Vec<Row>> {
    let which = match c.text("bound")? {
        "l2" => PlateBound::L2,
        "l4" => PlateBound::L4,
        _ => PlateBound::Both,
    };
    let t = trials(c);
    let rep = verify_plate_kakeya(c.float("delta")?, c.usize("N")?, &r_grid(c)?, t.len(), which, c.seed(), family_opts(c)?)?;
    Ok(incidence_to_rows(c.seed(), rep))
}

fn plank_rows(c: &ExperimentConfig) -> Result<Vec<Row>> {
    let t = trials(c);
    let rep =
        verify_plank_incidence(c.float("R")?, c.usize("N")?, c.usize("Z1")?, &r_grid(c)?, t.len(), c.seed(), family_opts(c)?)?;
    Ok(incidence_to_rows(c.seed(), rep))
}

/// Per-bound maxima, `(C, gamma)` envelopes and the polylog-slack test.
fn incidence_summary(rows: &[Row], log_scale: f64) -> Summary {
    let slack = log_scale.powi(SLACK_EXPONENT);
    let mut names: Vec<&str> = rows.iter().map(|r| text(r, "theorem")).collect();
    names.dedup();
    names.sort();
    names.dedup();
    let mut summary = Map::new();
    let mut asserts = vec![nonempty(rows)];
    for name in names {
        let mine: Vec<&Row> = rows.iter().filter(|r| text(r, "theorem") == name).collect();
        let max_ratio = max_of(mine.iter().map(|r| num(r, "ratio"))).max(0.0);
        let env = fit_envelope(max_ratio, log_scale);
        let within = mine.iter().all(|r| num(r, "count") <= num(r, "bound") * slack);
        summary.insert(
            name.into(),
            json!({"max_ratio": max_ratio, "envelope": {"C": env.c, "gamma": env.gamma}, "slack": slack, "within_slack": within}),
        );
        asserts.push(Assertion::new(name, within, format!("max ratio {max_ratio:.4} against slack {slack:.1}")));
    }
    // |Q_r| is nonincreasing in r within each trial
    let mut monotone = true;
    for w in rows.windows(2) {
        if text(&w[0], "theorem") == text(&w[1], "theorem") && int(&w[0], "trials") == int(&w[1], "trials") && int(&w[1], "r") > int(&w[0], "r") {
            monotone &= int(&w[1], "count") <= int(&w[0], "count");
        }
    }
    asserts.push(Assertion::new("monotone-counts", monotone, "rich-cube counts nonincreasing in r"));
    (summary, asserts)
}

fn tube_summary(c: &ExperimentConfig, rows: &[Row]) -> Result<Summary> {
    Ok(incidence_summary(rows, c.float("R")?.ln()))
}

fn plank_summary(c: &ExperimentConfig, rows: &[Row]) -> Result<Summary> {
    Ok(incidence_summary(rows, c.float("R")?.ln()))
}

fn plate_summary(c: &ExperimentConfig, rows: &[Row]) -> Result<Summary> {
    let delta = c.float("delta")?;
    let n = c.int("N")? as f64;
    let (mut summary, mut asserts) = incidence_summary(rows, (1.0 / delta).ln());
    let crossover = (n / delta).sqrt();
    // the L4 bound over the L2 bound is N delta^-1 / r^2
    let beats = r_grid(c)?
        .iter()
        .map(|&r| r as f64)
        .filter(|&r| r >= 2.0 * crossover)
        .all(|r| n * n * delta.powi(-3) / r.powi(4) < n * delta.powi(-2) / (r * r));
    summary.insert("crossover".into(), json!(crossover));
    asserts.push(Assertion::new("l4-beats-l2", beats, format!("every tested r >= {:.2}", 2.0 * crossover)));
    Ok((summary, asserts))
}

fn counting_rows(c: &ExperimentConfig) -> Result<Vec<Row>> {
    let (seed, big_r) = (c.seed(), c.float("R")?);
    let caps = Caps { n: Some(c.usize("N")?), ..Default::default() };
    let density = default_density(Role::Tube, Scale::R(big_r), caps)?;
    let grid = r_grid(c)?;
    let mut rows = Vec::new();
    for t in trials(c) {
        let ts = rng::derive(seed, t as u64);
        let fam = generate_family(Role::Tube, Scale::R(big_r), caps, density, Mode::Uniform, ts)?;
        let side = fam.cube_side();
        for &r in &grid {
            let fast = count_rich_cubes(&fam, side, r)?;
            let brute = brute_force_rich_cubes(&fam, side, r)?;
            rows.push(row! {
                "seed" => seed, "trial" => t, "trial_seed" => ts, "family_size" => fam.len(), "r" => r,
                "fast" => fast.len(), "brute" => brute.len(), "match" => fast == brute,
            });
        }
    }
    Ok(rows)
}

fn counting_summary(_: &ExperimentConfig, rows: &[Row]) -> Result<Summary> {
    let mismatches = rows.iter().filter(|r| !flag(r, "match")).count();
    let mut trials: Vec<u64> = rows.iter().map(|r| int(r, "trial")).collect();
    trials.dedup();
    Ok((
        map(vec![("families", json!(trials.len())), ("mismatches", json!(mismatches))]),
        vec![nonempty(rows), Assertion::new("exact-match", mismatches == 0, format!("{mismatches} mismatching (family, r) cells"))],
    ))
}

// -------------------------------------------------------------- decoupling

fn moment_options(c: &ExperimentConfig) -> Result<MomentOptions> {
    Ok(MomentOptions {
        sampler: c.text("sampler")?.parse::<Sampler>()?,
        domain: c.text("domain")?.parse::<Domain>()?,
        samples: c.usize("samples")?,
        seed: c.seed(),
        ..MomentOptions::default()
    })
}

fn make_sum(c: &ExperimentConfig, r: f64) -> Result<ExpSum> {
    let alpha = c.float("alpha")?;
    match c.text("coefficients")? {
        "random" => ExpSum::random_phases(r, alpha, c.seed()),
        _ => ExpSum::constant(r, alpha),
    }
}

fn moment_rows(c: &ExperimentConfig) -> Result<Vec<Row>> {
    let opts = moment_options(c)?;
    let ps = c.floats("p")?;
    let mut rows = Vec::new();
    for r in c.floats("R")? {
        for m in lp_moments(&make_sum(c, r)?, &ps, r, &opts)? {
            rows.push(row! {
                "p" => m.p, "R" => m.r, "alpha" => m.alpha, "estimate" => m.estimate,
                "stderr" => m.stderr, "samples" => m.samples, "seed" => m.seed,
            });
        }
    }
    Ok(rows)
}

fn moment_summary(_: &ExperimentConfig, rows: &[Row]) -> Result<Summary> {
    let finite = rows.iter().all(|r| num(r, "estimate").is_finite() && num(r, "stderr").is_finite());
    let rel = max_of(rows.iter().map(|r| num(r, "stderr") / num(r, "estimate")));
    Ok((
        map(vec![("max_relative_stderr", json!(rel))]),
        vec![nonempty(rows), Assertion::new("finite", finite, "every estimate and standard error is finite")],
    ))
}

fn criticality_table(c: &ExperimentConfig) -> Result<Vec<Row>> {
    let opts = MomentOptions { samples: c.usize("samples")?, seed: c.seed(), ..MomentOptions::default() };
    let rs = c.floats("R")?;
    let mut rows = Vec::new();
    for t in trials(c) {
        for x in criticality_rows(&rs, t..t + 1, &opts)? {
            rows.push(row! {
                "seed" => c.seed(), "R" => x.r, "coefficients" => x.coefficients, "p" => x.p, "trial" => x.trial,
                "trial_seed" => x.seed, "ratio" => x.ratio, "stderr" => x.stderr,
            });
        }
    }
    Ok(rows)
}

fn criticality_report_summary(_: &ExperimentConfig, rows: &[Row]) -> Result<Summary> {
    let typed: Vec<CriticalityRow> = rows
        .iter()
        .map(|r| CriticalityRow {
            r: num(r, "R"),
            coefficients: text(r, "coefficients").into(),
            p: num(r, "p"),
            trial: int(r, "trial") as usize,
            ratio: num(r, "ratio"),
            stderr: num(r, "stderr"),
            seed: int(r, "trial_seed"),
        })
        .collect();
    let rep = criticality_summary(typed)?;
    Ok((
        map(vec![
            ("slope_random_p10", json!(rep.slope_random_p10)),
            ("slope_constant_p10", json!(rep.slope_constant_p10)),
            ("slope_constant_p14", json!(rep.slope_constant_p14)),
            ("slope_gap", json!(rep.slope_gap)),
        ]),
        vec![
            Assertion::new(
                "random-phase-slope",
                rep.slope_random_p10 <= RANDOM_SLOPE_CAP,
                format!("slope {:.4} (cap {RANDOM_SLOPE_CAP})", rep.slope_random_p10),
            ),
            Assertion::new("supercritical-gap", rep.slope_gap >= SLOPE_GAP_MIN, format!("gap {:.4} (min {SLOPE_GAP_MIN})", rep.slope_gap)),
        ],
    ))
}

fn flat_rows(c: &ExperimentConfig) -> Result<Vec<Row>> {
    let (seed, p, block_len) = (c.seed(), c.float("p")?, c.usize("block_len")?);
    let t = trials(c);
    let reports = c
        .floats("blocks")?
        .into_iter()
        .map(|b| flat_decoupling_check(b as usize, p, t.end, block_len, seed))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for trial in t {
        for rep in &reports {
            rows.push(row! {
                "seed" => seed, "blocks" => rep.blocks, "p" => p, "block_len" => block_len, "trial" => trial,
                "ratio" => rep.ratios[trial],
            });
        }
    }
    Ok(rows)
}

fn flat_summary(c: &ExperimentConfig, rows: &[Row]) -> Result<Summary> {
    let cap = c.float("constant_cap")?;
    let mut per: Vec<(u64, f64)> = Vec::new();
    for r in rows {
        let b = int(r, "blocks");
        match per.iter_mut().find(|(k, _)| *k == b) {
            Some(e) => e.1 = e.1.max(num(r, "ratio")),
            None => per.push((b, num(r, "ratio"))),
        }
    }
    let fitted = max_of(per.iter().map(|e| e.1));
    let single = per.iter().find(|e| e.0 == 1).map(|e| e.1);
    let mut asserts = vec![
        nonempty(rows),
        Assertion::new("bounded", fitted <= cap, format!("fitted constant {fitted:.4} (cap {cap})")),
    ];
    if let Some(s) = single {
        asserts.push(Assertion::new("single-block", s <= 1.0 + 1e-9, format!("ratio {s:.12} with one block")));
    }
    Ok((
        map(vec![
            ("max_ratio", json!(per.iter().map(|(b, m)| json!({"blocks": b, "max_ratio": m})).collect::<Vec<_>>())),
            ("fitted_constant", json!(fitted)),
        ]),
        asserts,
    ))
}

fn exponent_rows(c: &ExperimentConfig) -> Result<Vec<Row>> {
    let seed = c.seed();
    let mut rows = Vec::new();
    for d in c.floats("d")? {
        for p in c.floats("p")? {
            rows.push(row! { "seed" => seed, "quantity" => "sigma", "p" => p, "d" => d, "value" => sigma_pd(p, d as usize)? });
        }
    }
    for d in c.floats("bound_d")? {
        rows.push(row! { "seed" => seed, "quantity" => "critical-p-bound", "p" => Value::Null, "d" => d, "value" => critical_p_bound(d as usize)? });
    }
    Ok(rows)
}

fn exponent_summary(_: &ExperimentConfig, rows: &[Row]) -> Result<Summary> {
    let find = |q: &str, p: Option<f64>, d: f64| {
        rows.iter()
            .find(|r| text(r, "quantity") == q && num(r, "d") == d && p.is_none_or(|p| num(r, "p") == p))
            .map(|r| num(r, "value"))
    };
    let mut asserts = vec![nonempty(rows)];
    if let Some(v) = find("sigma", Some(10.0), 3.0) {
        asserts.push(Assertion::new("sigma-10-3", (v - 0.4).abs() <= 1e-12, format!("{v}")));
    }
    if let Some(v) = find("critical-p-bound", None, 7.0) {
        asserts.push(Assertion::new("critical-bound-7", v == 22.0, format!("{v}")));
    }
    // the bound is nonincreasing in d
    let mut bounds: Vec<(f64, f64)> =
        rows.iter().filter(|r| text(r, "quantity") == "critical-p-bound").map(|r| (num(r, "d"), num(r, "value"))).collect();
    bounds.sort_by(|a, b| a.0.total_cmp(&b.0));
    asserts.push(Assertion::new("bound-monotone", bounds.windows(2).all(|w| w[1].1 <= w[0].1), "nonincreasing in d"));
    Ok((Map::new(), asserts))
}

const PLANTED_KEYS: [&str; 8] = ["n", "X", "m", "l", "Y", "N", "Z1", "Z2"];

fn pigeonhole_rows(c: &ExperimentConfig) -> Result<Vec<Row>> {
    let (seed, r, cap) = (c.seed(), c.float("R")?, c.float("constant_cap")?);
    let mut rows = Vec::new();
    let mut push = |kind: &str, index: usize, planted: Option<[usize; 8]>, ens| -> Result<()> {
        let out = pigeonhole_analysis(&ens)?;
        let f = out.params.first.as_ref().ok_or_else(|| Error::domain("analyzer returned no first sequence"))?;
        let s = out.params.second.as_ref().ok_or_else(|| Error::domain("analyzer returned no second sequence"))?;
        let got = [f.n, f.x, f.m, f.l, f.y, s.n, s.z1, s.z2];
        let check = plank_height_check(&out, cap)?;
        let fmt = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        let planted_f = planted.map(|p| p.map(|v| v as f64));
        rows.push(row! {
            "seed" => seed, "kind" => kind, "index" => index,
            "planted" => planted_f.map(|p| fmt(&p)), "recovered" => fmt(&got),
            "exact" => planted_f.map(|p| p == got), "ly_le_mx" => f.l * f.y <= f.m * f.x,
            "binding" => check.binding, "constant" => check.constant,
        });
        Ok(())
    };
    // the first trials are the planted fixtures, the rest random ensembles
    let fixtures = standard_fixtures();
    for t in trials(c) {
        let ts = rng::derive(seed, t as u64);
        match fixtures.get(t) {
            Some(p) => {
                let planted = [p.n, p.x, p.m, p.l, p.y, p.big_n, p.z1, p.z2];
                push("fixture", t, Some(planted), planted_fixture(r, p, ts)?)?;
            }
            None => push("random", t - fixtures.len(), None, random_ensemble(r, ts)?)?,
        }
    }
    Ok(rows)
}

fn pigeonhole_summary(c: &ExperimentConfig, rows: &[Row]) -> Result<Summary> {
    let cap = c.float("constant_cap")?;
    let fixtures: Vec<&Row> = rows.iter().filter(|r| text(r, "kind") == "fixture").collect();
    let random: Vec<&Row> = rows.iter().filter(|r| text(r, "kind") == "random").collect();
    let exact = fixtures.iter().filter(|r| flag(r, "exact")).count();
    let simple = rows.iter().filter(|r| flag(r, "ly_le_mx")).count();
    let fitted = max_of(fixtures.iter().map(|r| num(r, "constant")));
    let random_max = max_of(random.iter().map(|r| num(r, "constant")));
    Ok((
        map(vec![
            ("parameter_order", json!(PLANTED_KEYS)),
            ("fitted_constant", json!(fitted)),
            ("random_max_constant", json!(random_max)),
        ]),
        vec![
            nonempty(rows),
            Assertion::new("fixtures-recovered", exact == fixtures.len(), format!("{exact} of {} fixtures", fixtures.len())),
            Assertion::new("ly-le-mx", simple == rows.len(), format!("{simple} of {} ensembles", rows.len())),
            Assertion::new("single-constant", fitted <= cap, format!("fitted constant {fitted:.4} (cap {cap})")),
        ],
    ))
}

// ---------------------------------------------------------------- registry

const MODES: &[&str] = &["uniform", "bush", "plany", "grid"];

pub static EXPERIMENTS: &[Experiment] = &[
    Experiment {
        id: "geometry-exactness",
        module: Module::Geometry,
        description: "dual-box length products, shear duality pairing and Frenet orthonormality on random inputs",
        params: &[Param::new("cases", Kind::Int, "1000", "random cases per check and trial")],
        trials: Some("1"),
        columns: &["seed", "trial", "trial_seed", "check", "cases", "max_error", "tolerance", "pass"],
        rows: geometry_rows,
        summarize: geometry_summary,
    },
    Experiment {
        id: "partition-lemmas",
        module: Module::Partition,
        description: "layer containment in enlarged small planks and the overlap multiplicity of the layer decomposition",
        params: &[
            Param::new("R", Kind::DyadicList, "2^9", "scales; R^(1/3) must be a power of two"),
            Param::new("samples", Kind::Int, "100000", "sampled points per scale"),
            Param::new("factor", Kind::Float, "49", "enlargement for containment and multiplicity"),
            Param::new("layer_factor", Kind::Float, "1", "enlargement deciding layer membership"),
        ],
        trials: None,
        columns: &[
            "seed", "R", "samples", "factor", "layer_factor", "violations", "nesting_violations",
            "max_multiplicity", "coverage", "needed_factor", "layers",
        ],
        rows: partition_rows,
        summarize: partition_summary,
    },
    Experiment {
        id: "union-lemmas",
        module: Module::Incidence,
        description: "containment of tube, plank and plate unions in their covering boxes, with intersection volumes",
        params: &[Param::new("R", Kind::DyadicList, "2^12", "scales")],
        trials: None,
        columns: &["seed", "R", "delta", "statement", "part", "sigma", "j_lo", "j_hi", "value", "pass"],
        rows: union_rows,
        summarize: union_summary,
    },
    Experiment {
        id: "triple-volume",
        module: Module::Incidence,
        description: "exact volume of three origin-centred planks against the separation formula",
        params: &[Param::new("delta", Kind::DyadicList, "1/8,1/16,1/32", "plank scales")],
        trials: None,
        columns: &["seed", "delta", "d2", "d3", "volume", "formula", "ratio"],
        rows: triple_rows,
        summarize: triple_summary,
    },
    Experiment {
        id: "l4-planks",
        module: Module::Incidence,
        description: "L4 norm of a sum of plank indicators over its L1 norm, normalised by log^2",
        params: &[
            Param::new("delta", Kind::DyadicList, "1/8,1/16", "plank scales"),
            Param::new("method", Kind::Text(&["exact", "monte-carlo"]), "exact", "integration method"),
            Param::new("samples", Kind::Int, "100000", "Monte Carlo samples"),
        ],
        trials: None,
        columns: &["seed", "delta", "method", "l4", "l1", "stderr", "work", "ratio", "normalized"],
        rows: l4_rows,
        summarize: l4_summary,
    },
    Experiment {
        id: "tube-incidence",
        module: Module::Incidence,
        description: "rich-cube counts of well-spaced tube families against the count, refined and bilinear bounds",
        params: &[
            Param::new("R", Kind::Dyadic, "2^12", "scale"),
            Param::new("N", Kind::Int, "4", "tubes per fat plate"),
            Param::new("N1", Kind::Int, "2", "tubes per B box; 0 leaves it free"),
            Param::new("r_max", Kind::Int, "16", "largest richness"),
            Param::new("density", Kind::Float, "0", "slot density; 0 picks the default"),
            Param::new("mode", Kind::Text(MODES), "uniform", "family layout"),
        ],
        trials: Some("20"),
        columns: &["theorem", "R_or_delta", "caps", "r", "count", "bound", "ratio", "trials", "seed"],
        rows: tube_rows,
        summarize: tube_summary,
    },
    Experiment {
        id: "plate-incidence",
        module: Module::Incidence,
        description: "rich-cube counts of plate families against the L2 and L4 Kakeya-type bounds",
        params: &[
            Param::new("delta", Kind::Dyadic, "1/16", "plate scale"),
            Param::new("N", Kind::Int, "2", "plates per direction"),
            Param::new("bound", Kind::Text(&["both", "l2", "l4"]), "both", "bounds to test"),
            Param::new("r_max", Kind::Int, "64", "largest richness"),
            Param::new("density", Kind::Float, "0", "slot density; 0 picks the default"),
            Param::new("mode", Kind::Text(MODES), "uniform", "family layout"),
        ],
        trials: Some("20"),
        columns: &["theorem", "R_or_delta", "caps", "r", "count", "bound", "ratio", "trials", "seed"],
        rows: plate_rows,
        summarize: plate_summary,
    },
    Experiment {
        id: "plank-incidence",
        module: Module::Incidence,
        description: "rich-cube counts of structured plank families against the plank incidence bound",
        params: &[
            Param::new("R", Kind::Dyadic, "2^12", "scale"),
            Param::new("N", Kind::Int, "2", "planks per heavy tau box"),
            Param::new("Z1", Kind::Int, "2", "heavy tau boxes per nonempty Sigma box"),
            Param::new("r_max", Kind::Int, "64", "largest richness"),
            Param::new("density", Kind::Float, "0", "share of eligible Sigma boxes; 0 picks the default"),
            Param::new("mode", Kind::Text(MODES), "uniform", "family layout"),
        ],
        trials: Some("20"),
        columns: &["theorem", "R_or_delta", "caps", "r", "count", "bound", "ratio", "trials", "seed"],
        rows: plank_rows,
        summarize: plank_summary,
    },
    Experiment {
        id: "counting-oracle",
        module: Module::Incidence,
        description: "grid-walk rich-cube counting against a brute-force scan of every cube",
        params: &[
            Param::new("R", Kind::Dyadic, "2^6", "scale"),
            Param::new("N", Kind::Int, "4", "tubes per fat plate"),
            Param::new("r_max", Kind::Int, "16", "largest richness"),
        ],
        trials: Some("50"),
        columns: &["seed", "trial", "trial_seed", "family_size", "r", "fast", "brute", "match"],
        rows: counting_rows,
        summarize: counting_summary,
    },
    Experiment {
        id: "moments",
        module: Module::Decoupling,
        description: "L^p moments of exponential sums on the curve",
        params: &[
            Param::new("R", Kind::DyadicList, "2^8", "scales"),
            Param::new("alpha", Kind::Float, "0.5", "interval length exponent"),
            Param::new("p", Kind::FloatList, "2,4,6,10", "exponents"),
            Param::new("coefficients", Kind::Text(&["constant", "random"]), "constant", "coefficient model"),
            Param::new("sampler", Kind::Text(&["monte-carlo", "lattice"]), "monte-carlo", "estimator"),
            Param::new("domain", Kind::Text(&["cube", "weighted"]), "cube", "averaging domain"),
            Param::new("samples", Kind::Int, "100000", "Monte Carlo samples"),
        ],
        trials: None,
        columns: &["p", "R", "alpha", "estimate", "stderr", "samples", "seed"],
        rows: moment_rows,
        summarize: moment_summary,
    },
    Experiment {
        id: "criticality",
        module: Module::Decoupling,
        description: "growth of the decoupling ratio in R at the critical and a supercritical exponent",
        params: &[
            Param::new("R", Kind::DyadicList, "2^8,2^10,2^12,2^14,2^16", "scales; at least two"),
            Param::new("samples", Kind::Int, "1000000", "Monte Carlo samples per scale and trial"),
        ],
        trials: Some("20"),
        columns: &["seed", "R", "coefficients", "p", "trial", "trial_seed", "ratio", "stderr"],
        rows: criticality_table,
        summarize: criticality_report_summary,
    },
    Experiment {
        id: "flat-decoupling",
        module: Module::Decoupling,
        description: "flat decoupling over congruent frequency blocks on the circle",
        params: &[
            Param::new("blocks", Kind::DyadicList, "1,2,4,8,16", "numbers of blocks"),
            Param::new("p", Kind::Float, "10", "exponent"),
            Param::new("block_len", Kind::Int, "4", "frequencies per block"),
            Param::new("constant_cap", Kind::Float, "4", "largest accepted constant"),
        ],
        trials: Some("50"),
        columns: &["seed", "blocks", "p", "block_len", "trial", "ratio"],
        rows: flat_rows,
        summarize: flat_summary,
    },
    Experiment {
        id: "exponents",
        module: Module::Decoupling,
        description: "sharpness exponents of the moment curve and the critical exponent bound",
        params: &[
            Param::new("p", Kind::FloatList, "10", "exponents"),
            Param::new("d", Kind::FloatList, "3", "dimensions for the sharpness exponent"),
            Param::new("bound_d", Kind::FloatList, "5,6,7", "dimensions for the critical exponent bound"),
        ],
        trials: None,
        columns: &["seed", "quantity", "p", "d", "value"],
        rows: exponent_rows,
        summarize: exponent_summary,
    },
    Experiment {
        id: "pigeonhole",
        module: Module::Decoupling,
        description: "dyadic pigeonholing of wave-packet ensembles: planted fixtures, random ensembles and the height bound",
        params: &[
            Param::new("R", Kind::Dyadic, "2^12", "scale; must be a power of 64"),
            Param::new("constant_cap", Kind::Float, "16", "largest accepted height constant"),
        ],
        trials: Some("110"),
        columns: &["seed", "kind", "index", "planted", "recovered", "exact", "ly_le_mx", "binding", "constant"],
        rows: pigeonhole_rows,
        summarize: pigeonhole_summary,
    },
];
