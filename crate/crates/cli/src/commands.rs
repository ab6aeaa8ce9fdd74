//! One function per subcommand; each returns a [`Report`].

use pairent::convexroof::{self, RoofObjective, RoofOptions};
use pairent::locc::{self, CampaignConfig};
use pairent::measure::{self, MeasureResult};
use pairent::probes;
use pairent::qstate::{self, DensityMatrix, State, StateFile, StateVector};
use pairent::{Error, ProbeKind, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::report::{to_value, Report, Verdict};

/// Where a state comes from, kept for config echo and error diagnostics.
#[derive(Debug, Clone)]
pub enum StateSource {
    Spec { text: String, local_dim: Option<usize> },
    File(std::path::PathBuf),
}

impl StateSource {
    /// The ket text, if the state was given as one; used to point at parse errors.
    pub fn ket_text(&self) -> Option<&str> {
        match self {
            StateSource::Spec { text, .. } if text.contains('|') => Some(text),
            _ => None,
        }
    }

    fn echo(&self, config: &mut Map<String, Value>) {
        match self {
            StateSource::Spec { text, local_dim } => {
                config.insert("state".into(), json!(text));
                if let Some(d) = local_dim {
                    config.insert("local_dim".into(), json!(d));
                }
            }
            StateSource::File(path) => {
                config.insert("state_file".into(), json!(path.display().to_string()));
            }
        }
    }

    /// Library names first, then ket expressions.
    fn load(&self) -> Result<(State, Vec<String>)> {
        match self {
            StateSource::Spec { text, local_dim } => {
                if text.contains('|') {
                    let parsed = qstate::parse_ket(text, *local_dim)?;
                    let mut notes = Vec::new();
                    if parsed.normalization_warning {
                        notes.push(format!(
                            "input norm {} renormalized to 1",
                            crate::report::round_sig(parsed.input_norm)
                        ));
                    }
                    Ok((State::Pure(parsed.state), notes))
                } else {
                    Ok((qstate::named_state(text)?, Vec::new()))
                }
            }
            StateSource::File(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::usage(format!("cannot read {}: {e}", path.display())))?;
                Ok((StateFile::parse(&text)?, Vec::new()))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ProbeChoice {
    Qc,
    Fr,
    Both,
}

impl ProbeChoice {
    /// Probes to run on a register of local dimension `d`. `both` skips
    /// Q_C on qudits; asking for `qc` alone there is an error.
    fn kinds(self, d: usize) -> Result<(Vec<ProbeKind>, Vec<ProbeKind>)> {
        match self {
            ProbeChoice::Qc => {
                ProbeKind::QuasiConcurrence.check_local_dim(d)?;
                Ok((vec![ProbeKind::QuasiConcurrence], vec![]))
            }
            ProbeChoice::Fr => Ok((vec![ProbeKind::MutualInformation], vec![])),
            ProbeChoice::Both => Ok(ProbeKind::ALL.into_iter().partition(|k| k.check_local_dim(d).is_ok())),
        }
    }

    fn name(self) -> &'static str {
        match self {
            ProbeChoice::Qc => "qc",
            ProbeChoice::Fr => "fr",
            ProbeChoice::Both => "both",
        }
    }
}

fn config(seed: u64) -> Map<String, Value> {
    let mut c = Map::new();
    c.insert("seed".into(), json!(seed));
    c
}

fn state_summary(state: &State) -> Value {
    json!({
        "kind": match state { State::Pure(_) => "pure", State::Mixed(_) => "mixed" },
        "num_sites": state.num_sites(),
        "local_dim": state.local_dim(),
    })
}

fn profile_rows(report: &mut Report, kind: ProbeKind, result: &MeasureResult, m_label: &str) {
    for e in &result.profile.entries {
        report.row(vec![
            json!(kind.short_name()),
            json!("pair"),
            json!(e.label()),
            json!(e.i),
            json!(e.j),
            json!(e.value),
        ]);
    }
    for (quantity, value) in [(m_label, result.m_value), ("MT", result.mt_value)] {
        report.row(vec![
            json!(kind.short_name()),
            json!(quantity),
            Value::Null,
            Value::Null,
            Value::Null,
            json!(value),
        ]);
    }
}

fn measure_json(result: &MeasureResult) -> Value {
    json!({
        "pairs": result.profile.entries.iter().map(|e| json!({
            "i": e.i, "j": e.j, "label": e.label(), "value": e.value,
        })).collect::<Vec<_>>(),
        "m": result.m_value,
        "mt": result.mt_value,
        "factor": result.factor,
        "classification": to_value(&result.classification),
        "genuine_global": result.genuine_global,
    })
}

const PROFILE_COLUMNS: [&str; 6] = ["probe", "quantity", "pair", "site_i", "site_j", "value"];

pub struct MeasureArgs {
    pub source: StateSource,
    pub probe: ProbeChoice,
    pub tolerance: f64,
    pub restarts: usize,
    pub seed: u64,
}

/// Pair profile, `M`, `M^T` and classification; mixed states go through
/// the convex roof and report `M` as an upper bound.
pub fn measure(args: &MeasureArgs) -> Result<Report> {
    let (state, notes) = args.source.load()?;
    let mut cfg = config(args.seed);
    args.source.echo(&mut cfg);
    cfg.insert("probe".into(), json!(args.probe.name()));
    cfg.insert("tolerance".into(), json!(args.tolerance));
    let (kinds, skipped) = args.probe.kinds(state.local_dim())?;
    let mut report = Report::new("measure", cfg, PROFILE_COLUMNS.to_vec());
    let mut per_probe = Map::new();
    match &state {
        State::Pure(psi) => {
            for &kind in &kinds {
                let result = measure::result_from_profile(measure::pure_profile(psi, kind)?, args.tolerance);
                profile_rows(&mut report, kind, &result, "M");
                report.summarize(format!("M_{kind}"), json!(result.m_value));
                report.summarize(format!("MT_{kind}"), json!(result.mt_value));
                report.summarize(format!("classification_{kind}"), to_value(&result.classification));
                report.summarize(format!("genuine_global_{kind}"), json!(result.genuine_global));
                per_probe.insert(kind.short_name().into(), measure_json(&result));
            }
        }
        State::Mixed(rho) => {
            report.config.insert("restarts".into(), json!(args.restarts));
            let options = RoofOptions {
                restarts: args.restarts,
                seed: args.seed,
                ..Default::default()
            };
            for &kind in &kinds {
                let roof = convexroof::convex_roof(rho, RoofObjective::Measure(kind), &options)?;
                report.row(vec![
                    json!(kind.short_name()),
                    json!("M_upper_bound"),
                    Value::Null,
                    Value::Null,
                    Value::Null,
                    json!(roof.best_value),
                ]);
                report.summarize(format!("M_{kind} (upper bound)"), json!(roof.best_value));
                report.summarize(format!("converged_{kind}"), json!(roof.converged));
                per_probe.insert(
                    kind.short_name().into(),
                    json!({
                        "m_upper_bound": roof.best_value,
                        "eigen_decomposition_value": roof.eigen_value,
                        "restarts_used": roof.restarts_used,
                        "converged": roof.converged,
                        "members": roof.best.len(),
                    }),
                );
            }
        }
    }
    for n in &notes {
        report.summarize("note", json!(n));
    }
    report.results = json!({
        "state": state_summary(&state),
        "probes": per_probe,
        "skipped_probes": skipped.iter().map(|k| k.short_name()).collect::<Vec<_>>(),
        "notes": notes,
    });
    Ok(report)
}

/// Direct probe evaluation on the reduced pair states, without any roof.
pub fn profile(args: &MeasureArgs, direct: bool) -> Result<Report> {
    let (state, notes) = args.source.load()?;
    if matches!(state, State::Mixed(_)) && !direct {
        return Err(Error::usage(
            "mixed states: the measure is a convex roof (use `measure`); pass --direct to evaluate probes on the mixed pair states",
        ));
    }
    let mut cfg = config(args.seed);
    args.source.echo(&mut cfg);
    cfg.insert("probe".into(), json!(args.probe.name()));
    cfg.insert("direct".into(), json!(direct));
    cfg.insert("tolerance".into(), json!(args.tolerance));
    let (kinds, skipped) = args.probe.kinds(state.local_dim())?;
    let mut report = Report::new("profile", cfg, PROFILE_COLUMNS.to_vec());
    let mut per_probe = Map::new();
    for &kind in &kinds {
        let result = measure::result_from_profile(measure::pair_profile(&state, kind)?, args.tolerance);
        let label = if matches!(state, State::Mixed(_)) {
            "M_direct"
        } else {
            "M"
        };
        profile_rows(&mut report, kind, &result, label);
        report.summarize(format!("{label}_{kind}"), json!(result.m_value));
        report.summarize(format!("classification_{kind}"), to_value(&result.classification));
        per_probe.insert(kind.short_name().into(), measure_json(&result));
    }
    report.results = json!({
        "state": state_summary(&state),
        "probes": per_probe,
        "skipped_probes": skipped.iter().map(|k| k.short_name()).collect::<Vec<_>>(),
        "notes": notes,
    });
    Ok(report)
}

/// Expected pair values (0-based sites) and `M` for the reference states.
struct TableRow {
    name: &'static str,
    state: fn() -> StateVector,
    qc_pairs: [((usize, usize), f64); 2],
    fr_pairs: [((usize, usize), f64); 2],
    m_qc: f64,
    m_fr: f64,
}

const TABLE: [TableRow; 3] = [
    TableRow {
        name: "psi4",
        state: qstate::psi4,
        qc_pairs: [((0, 3), 1.0), ((1, 2), 1.0)],
        fr_pairs: [((0, 3), 1.0), ((1, 2), 1.0)],
        m_qc: 1.0 / 3.0,
        m_fr: 2.0 / 3.0,
    },
    TableRow {
        name: "chi4",
        state: qstate::chi4,
        qc_pairs: [((0, 3), 1.0), ((1, 2), 1.0)],
        fr_pairs: [((0, 3), 0.5), ((1, 2), 0.5)],
        m_qc: 1.0 / 3.0,
        m_fr: 1.0 / 3.0,
    },
    TableRow {
        name: "cluster4",
        state: qstate::cluster4,
        qc_pairs: [((0, 3), 1.0), ((1, 2), 1.0)],
        fr_pairs: [((0, 3), 0.5), ((1, 2), 0.5)],
        m_qc: 1.0 / 3.0,
        m_fr: 1.0 / 3.0,
    },
];

/// Reference table: computed against expected values for the three
/// four-qubit states.
pub fn table(seed: u64, tolerance: f64) -> Result<Report> {
    let mut cfg = config(seed);
    cfg.insert("tolerance".into(), json!(tolerance));
    let mut report = Report::new(
        "table",
        cfg,
        vec![
            "state",
            "probe",
            "quantity",
            "expected",
            "computed",
            "abs_error",
            "pass",
        ],
    );
    let mut entries = Vec::new();
    let mut failures = 0;
    for row in &TABLE {
        let psi = (row.state)();
        for (kind, pairs, m) in [
            (ProbeKind::QuasiConcurrence, &row.qc_pairs, row.m_qc),
            (ProbeKind::MutualInformation, &row.fr_pairs, row.m_fr),
        ] {
            let result = measure::measure_m(&psi, kind)?;
            let mut check = |quantity: String, expected: f64, computed: f64| {
                let error = (computed - expected).abs();
                let pass = error <= tolerance;
                failures += usize::from(!pass);
                report.row(vec![
                    json!(row.name),
                    json!(kind.short_name()),
                    json!(quantity),
                    json!(expected),
                    json!(computed),
                    json!(error),
                    json!(pass),
                ]);
                entries.push(json!({
                    "state": row.name, "probe": kind.short_name(), "quantity": quantity,
                    "expected": expected, "computed": computed, "abs_error": error, "pass": pass,
                }));
            };
            for e in &result.profile.entries {
                let expected = pairs.iter().find(|(p, _)| *p == (e.i, e.j)).map_or(0.0, |(_, v)| *v);
                check(e.label(), expected, e.value);
            }
            check("M".into(), m, result.m_value);
        }
    }
    report.summarize("checks", json!(entries.len()));
    report.summarize("failures", json!(failures));
    if failures > 0 {
        report.verdict = Verdict::Violation;
    }
    report.results = json!({ "entries": entries, "failures": failures });
    Ok(report)
}

/// Points of an `a:b:steps` grid (`steps` points, both ends included).
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || Error::usage(format!("grid `{text}` is not of the form a:b:steps"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let steps: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if !a.is_finite() || !b.is_finite() || steps == 0 {
        return Err(bad());
    }
    if steps == 1 {
        return Ok(vec![a]);
    }
    Ok((0..steps)
        .map(|k| {
            if k + 1 == steps {
                b
            } else {
                a + (b - a) * k as f64 / (steps - 1) as f64
            }
        })
        .collect())
}

/// MEMS family: Fr of the two-qubit mixed state and the full profile of
/// its four-qubit purification, compared with GHZ.
pub fn sweep_mems(seed: u64, grid_text: &str) -> Result<Report> {
    let grid = parse_grid(grid_text)?;
    if let Some(x) = grid.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::usage(format!("grid point {x} outside [0, 1]")));
    }
    let mut cfg = config(seed);
    cfg.insert("grid".into(), json!(grid_text));
    let ghz = qstate::ghz(4)?;
    let ghz_fr = measure::pure_m(&ghz, ProbeKind::MutualInformation)?;
    let ghz_qc = measure::pure_m(&ghz, ProbeKind::QuasiConcurrence)?;
    let ghz_pair_fr = measure::pure_profile(&ghz, ProbeKind::MutualInformation)?.entries[0].value;
    let mut report = Report::new(
        "sweep-mems",
        cfg,
        vec![
            "x",
            "fr_mems",
            "fr_12",
            "fr_13",
            "fr_14",
            "fr_23",
            "fr_24",
            "fr_34",
            "m_fr",
            "m_qc",
            "fr_12_above_ghz_pair",
            "m_fr_below_ghz",
        ],
    );
    let points: Vec<Value> = grid
        .par_iter()
        .map(|&x| -> Result<(Vec<Value>, Value)> {
            let fr_mems = probes::mutual_information_fr(&qstate::mems(x)?)?;
            let pure = qstate::pure_mems(x)?;
            let fr = measure::measure_m(&pure, ProbeKind::MutualInformation)?;
            let qc = measure::measure_m(&pure, ProbeKind::QuasiConcurrence)?;
            let pair_values: Vec<f64> = fr.profile.values().collect();
            let above = pair_values[0] > ghz_pair_fr;
            let below = fr.m_value < ghz_fr;
            let mut row = vec![json!(x), json!(fr_mems)];
            row.extend(pair_values.iter().map(|v| json!(v)));
            row.extend([json!(fr.m_value), json!(qc.m_value), json!(above), json!(below)]);
            let detail = json!({
                "x": x,
                "fr_mems": fr_mems,
                "puremems_fr_pairs": measure_json(&fr)["pairs"],
                "m_fr": fr.m_value,
                "m_qc": qc.m_value,
                "fr_12_above_ghz_pair": above,
                "m_fr_below_ghz": below,
            });
            Ok((row, detail))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .map(|(row, detail)| {
            report.row(row);
            detail
        })
        .collect();
    report.summarize("ghz4 pair Fr", json!(ghz_pair_fr));
    report.summarize("ghz4 M_fr", json!(ghz_fr));
    report.summarize("ghz4 M_qc", json!(ghz_qc));
    report.results = json!({
        "ghz4": { "pair_fr": ghz_pair_fr, "m_fr": ghz_fr, "m_qc": ghz_qc },
        "points": points,
    });
    Ok(report)
}

pub struct LoccArgs {
    pub site_counts: Vec<usize>,
    pub trials: usize,
    pub rounds: usize,
    pub probe: ProbeChoice,
    pub seed: u64,
}

/// Random local-instrument campaign testing that `M` does not increase
/// on average.
pub fn locc(args: &LoccArgs) -> Result<Report> {
    let (kinds, _) = args.probe.kinds(2)?;
    let campaign = CampaignConfig {
        trials: args.trials,
        site_counts: args.site_counts.clone(),
        kinds,
        rounds: args.rounds,
        seed: args.seed,
    };
    let mut cfg = config(args.seed);
    cfg.insert("probe".into(), json!(args.probe.name()));
    cfg.insert("n".into(), json!(args.site_counts));
    cfg.insert("trials".into(), json!(args.trials));
    cfg.insert("rounds".into(), json!(args.rounds));
    let outcome = locc::run_campaign(&campaign)?;
    let mut report = Report::new("locc", cfg, vec!["trial", "seed", "num_sites", "probe", "margin"]);
    for v in &outcome.violations {
        report.row(vec![
            json!(v.trial),
            json!(v.seed),
            json!(v.num_sites),
            json!(v.kind.short_name()),
            json!(v.margin),
        ]);
    }
    report.summarize("trials", json!(outcome.trials));
    report.summarize("violations", json!(outcome.violations.len()));
    report.summarize("worst_margin", json!(outcome.worst_margin));
    report.summarize("violation_threshold", json!(locc::VIOLATION_THRESHOLD));
    if !outcome.violations.is_empty() {
        report.verdict = Verdict::Violation;
    }
    report.results = json!({
        "trials": outcome.trials,
        "violation_count": outcome.violations.len(),
        "worst_margin": outcome.worst_margin,
        "violation_threshold": locc::VIOLATION_THRESHOLD,
        "violations": to_value(&outcome.violations),
    });
    Ok(report)
}

pub struct RoofArgs {
    pub source: StateSource,
    pub probe: ProbeChoice,
    pub restarts: usize,
    pub member_cap: Option<usize>,
    pub tolerance: f64,
    pub seed: u64,
}

/// Convex-roof search; values are upper bounds on the roof.
pub fn roof(args: &RoofArgs) -> Result<Report> {
    let (state, notes) = args.source.load()?;
    let rho: DensityMatrix = state.density();
    let mut cfg = config(args.seed);
    args.source.echo(&mut cfg);
    cfg.insert("probe".into(), json!(args.probe.name()));
    cfg.insert("restarts".into(), json!(args.restarts));
    cfg.insert("member_cap".into(), json!(args.member_cap));
    cfg.insert("tolerance".into(), json!(args.tolerance));
    let (kinds, skipped) = args.probe.kinds(rho.local_dim())?;
    let options = RoofOptions {
        restarts: args.restarts,
        member_cap: args.member_cap,
        seed: args.seed,
        tolerance: args.tolerance,
    };
    let closed_form = if rho.num_sites() == 2 && rho.local_dim() == 2 {
        Some(probes::concurrence(&rho)?)
    } else {
        None
    };
    let mut report = Report::new(
        "roof",
        cfg,
        vec![
            "probe",
            "upper_bound",
            "eigen_decomposition_value",
            "members",
            "restarts_used",
            "converged",
        ],
    );
    let mut per_probe = Map::new();
    for &kind in &kinds {
        let r = convexroof::convex_roof(&rho, RoofObjective::Measure(kind), &options)?;
        report.row(vec![
            json!(kind.short_name()),
            json!(r.best_value),
            json!(r.eigen_value),
            json!(r.best.len()),
            json!(r.restarts_used),
            json!(r.converged),
        ]);
        report.summarize(format!("{kind} upper bound"), json!(r.best_value));
        report.summarize(format!("{kind} converged"), json!(r.converged));
        per_probe.insert(
            kind.short_name().into(),
            json!({
                "upper_bound": r.best_value,
                "eigen_decomposition_value": r.eigen_value,
                "restarts_used": r.restarts_used,
                "converged": r.converged,
                "weights": r.best.weights,
                "trace": to_value(&r.trace),
            }),
        );
    }
    if let Some(c) = closed_form {
        report.summarize("two-qubit concurrence (closed form)", json!(c));
    }
    report.results = json!({
        "state": state_summary(&state),
        "probes": per_probe,
        "two_qubit_concurrence": closed_form,
        "skipped_probes": skipped.iter().map(|k| k.short_name()).collect::<Vec<_>>(),
        "notes": notes,
    });
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Normalization,
    Lu,
    Product,
    QcGeC,
    Additivity,
    All,
}

impl Suite {
    const EACH: [Suite; 5] = [
        Suite::Normalization,
        Suite::Lu,
        Suite::Product,
        Suite::QcGeC,
        Suite::Additivity,
    ];

    fn name(self) -> &'static str {
        match self {
            Suite::Normalization => "normalization",
            Suite::Lu => "lu",
            Suite::Product => "product",
            Suite::QcGeC => "qc-ge-c",
            Suite::Additivity => "additivity",
            Suite::All => "all",
        }
    }
}

pub struct RandcheckArgs {
    pub suite: Suite,
    pub num_sites: Option<usize>,
    pub local_dim: usize,
    pub trials: usize,
    pub tolerance: f64,
    pub seed: u64,
}

/// One random trial: the margin (pass iff ≥ −tolerance), the statistic the
/// suite tracks, and the state to archive on failure.
#[derive(Debug, Clone, Serialize)]
struct TrialOutcome {
    margin: f64,
    statistic: f64,
    #[serde(skip)]
    state: Value,
}

fn archive(state: &State) -> Value {
    to_value(&StateFile::from_state(state))
}

fn all_kinds(d: usize) -> Vec<ProbeKind> {
    ProbeKind::ALL
        .into_iter()
        .filter(|k| k.check_local_dim(d).is_ok())
        .collect()
}

fn run_trial(suite: Suite, n: usize, d: usize, trial: usize, seed: u64) -> Result<TrialOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match suite {
        Suite::Normalization => {
            let psi = qstate::random_pure_with(&mut rng, n, d)?;
            let m_fr = measure::pure_m(&psi, ProbeKind::MutualInformation)?;
            let mut margin = (d as f64).log2() - m_fr;
            if d == 2 {
                margin = margin.min(1.0 - measure::pure_m(&psi, ProbeKind::QuasiConcurrence)?);
            }
            Ok(TrialOutcome {
                margin,
                statistic: m_fr,
                state: archive(&State::Pure(psi)),
            })
        }
        Suite::Lu => {
            let psi = qstate::random_pure_with(&mut rng, n, d)?;
            let mut moved = psi.clone();
            for site in 0..n {
                moved = moved.apply_local(site, &qstate::random_unitary(&mut rng, d))?;
            }
            let mut drift: f64 = 0.0;
            for kind in all_kinds(d) {
                drift = drift.max((measure::pure_m(&psi, kind)? - measure::pure_m(&moved, kind)?).abs());
            }
            Ok(TrialOutcome {
                margin: -drift,
                statistic: drift,
                state: archive(&State::Pure(psi)),
            })
        }
        Suite::Product => {
            let psi = qstate::random_product_with(&mut rng, n, d)?;
            let mut largest: f64 = 0.0;
            for kind in all_kinds(d) {
                largest = largest.max(measure::pure_profile(&psi, kind)?.values().fold(0.0, f64::max));
            }
            Ok(TrialOutcome {
                margin: -largest,
                statistic: largest,
                state: archive(&State::Pure(psi)),
            })
        }
        Suite::QcGeC => {
            let rank = 1 + trial % 4;
            let rho = qstate::random_mixed_with(&mut rng, 2, 2, rank)?;
            let margin = probes::quasi_concurrence(&rho)? - probes::concurrence(&rho)?;
            Ok(TrialOutcome {
                margin,
                statistic: margin,
                state: archive(&State::Mixed(rho)),
            })
        }
        Suite::Additivity => {
            let sigma = qstate::random_pure_with(&mut rng, 2, 2)?;
            let eta = qstate::random_pure_with(&mut rng, 2 + trial % 2, 2)?;
            let mut gap: f64 = 0.0;
            for kind in ProbeKind::ALL {
                let r = measure::additivity_check(&sigma, &eta, kind)?;
                gap = gap.max(r.m_form.gap.abs()).max(r.mt_form.gap.abs());
            }
            let joint = sigma.tensor(&eta)?;
            Ok(TrialOutcome {
                margin: -gap,
                statistic: gap,
                state: archive(&State::Pure(joint)),
            })
        }
        Suite::All => unreachable!("expanded by the caller"),
    }
}

/// Random-state suites: normalization bound, local-unitary invariance,
/// product zeros, Q_C ≥ C and traditional additivity.
pub fn randcheck(args: &RandcheckArgs) -> Result<Report> {
    if args.local_dim < 2 {
        return Err(Error::usage("local dimension must be at least 2"));
    }
    let suites: Vec<Suite> = if args.suite == Suite::All {
        Suite::EACH.to_vec()
    } else {
        vec![args.suite]
    };
    let mut cfg = config(args.seed);
    cfg.insert("suite".into(), json!(args.suite.name()));
    cfg.insert("n".into(), json!(args.num_sites));
    cfg.insert("local_dim".into(), json!(args.local_dim));
    cfg.insert("trials".into(), json!(args.trials));
    cfg.insert("tolerance".into(), json!(args.tolerance));
    let mut report = Report::new(
        "randcheck",
        cfg,
        vec![
            "suite",
            "num_sites",
            "local_dim",
            "trials",
            "passed",
            "worst_margin",
            "max_statistic",
        ],
    );
    let mut results = Vec::new();
    for suite in suites {
        // Q_C ≥ C and additivity fix their own registers.
        let (n, d) = match suite {
            Suite::QcGeC => (2, 2),
            Suite::Additivity => (args.num_sites.unwrap_or(4), 2),
            _ => (args.num_sites.unwrap_or(4), args.local_dim),
        };
        if n < 2 {
            return Err(Error::usage("suites need at least two sites"));
        }
        let outcomes: Vec<TrialOutcome> = (0..args.trials)
            .into_par_iter()
            .map(|i| run_trial(suite, n, d, i, locc::trial_seed(args.seed, i)))
            .collect::<Result<_>>()?;
        let failures: Vec<Value> = outcomes
            .iter()
            .enumerate()
            .filter(|(_, o)| o.margin < -args.tolerance)
            .map(|(i, o)| {
                json!({ "trial": i, "seed": locc::trial_seed(args.seed, i), "margin": o.margin, "state": o.state })
            })
            .collect();
        let passed = outcomes.len() - failures.len();
        let worst = outcomes.iter().map(|o| o.margin).reduce(f64::min);
        let max_stat = outcomes.iter().map(|o| o.statistic).reduce(f64::max);
        let register = if suite == Suite::Additivity {
            Value::Null
        } else {
            json!(n)
        };
        report.row(vec![
            json!(suite.name()),
            register.clone(),
            json!(d),
            json!(outcomes.len()),
            json!(passed),
            json!(worst),
            json!(max_stat),
        ]);
        report.summarize(
            format!("{} passed", suite.name()),
            json!(format!("{passed}/{}", outcomes.len())),
        );
        if !failures.is_empty() {
            report.verdict = Verdict::Violation;
        }
        results.push(json!({
            "suite": suite.name(),
            "num_sites": register,
            "local_dim": d,
            "trials": outcomes.len(),
            "passed": passed,
            "worst_margin": worst,
            "max_statistic": max_stat,
            "failures": failures,
        }));
    }
    report.results = json!({ "suites": results });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_points() {
        let g = parse_grid("0:1:11").unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g[3], 0.3);
        assert_eq!(g[10], 1.0);
        assert_eq!(parse_grid("0.5:0.5:1").unwrap(), vec![0.5]);
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("0:1:0").is_err());
    }
}
