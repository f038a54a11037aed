//! Executes the configured verification suites and assembles the report.

use crate::config::{EnvelopeChoice, ResolvedConfig, RunMode, StepChoice};
use crate::report::{report_detail, ExactRow, Report, Section, Tables, SCHEMA_VERSION};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde_json::json;
use tracebound::bounds::{
    azuma_classical_report, azuma_nc_bound, khan_bounds, khan_envelope, lemma_gap, ncbr_bound,
    theorem2_bound_a, theorem2_bound_b, verify_inequality, BoundMode, BoundReport,
};
use tracebound::chains::{extremal_step_values, step_chain, StepKind};
use tracebound::lattice::{tail_meet_trace, ThresholdSpec};
use tracebound::martingale::{log_spaced_grid, AdaptedSequence, EnvelopeKind, MgfEnvelope};
use tracebound::mcsim::{
    compare_bound, enumerate_exact_capped, simulate_crossing, BoundVerdict, CrossingResult,
    StepDistribution,
};
use tracebound::operator::{func_calculus, gt_gap, is_psd, trace_state};
use tracebound::sample::random_hermitian;
use tracebound::space::{Filtration, TensorSpace};
use tracebound::Error;

/// Total dimension cap for chains sized automatically; explicit `space`
/// settings may go past this up to the library limit.
const DEFAULT_CHAIN_DIM: usize = 256;

struct Outcome {
    sections: Vec<Section>,
    violations: Vec<String>,
    failures: Vec<String>,
    tables: Tables,
}

impl Outcome {
    fn new() -> Self {
        Self {
            sections: Vec::new(),
            violations: Vec::new(),
            failures: Vec::new(),
            tables: Tables::default(),
        }
    }

    fn violation(&mut self, msg: impl Into<String>) {
        self.violations.push(msg.into());
    }

    fn failure(&mut self, msg: impl Into<String>) {
        self.failures.push(msg.into());
    }
}

/// Runs the configured suite(s). Domain errors never panic; they are
/// recorded as numerical failures and reflected in the exit code.
pub fn run(cfg: &ResolvedConfig) -> (Report, Tables) {
    let mut out = Outcome::new();
    let suites: Vec<RunMode> = match cfg.mode {
        RunMode::All => vec![
            RunMode::GtCheck,
            RunMode::LemmaCheck,
            RunMode::SpaceVerify,
            RunMode::Bounds,
            RunMode::NcVerify,
            RunMode::McRun,
        ],
        single => vec![single],
    };
    for suite in suites {
        match suite {
            RunMode::GtCheck => gt_check(cfg, &mut out),
            RunMode::LemmaCheck => lemma_check(&mut out),
            RunMode::SpaceVerify => space_verify(cfg, &mut out),
            RunMode::Bounds => bounds_suite(cfg, &mut out),
            RunMode::NcVerify => nc_verify(cfg, &mut out),
            RunMode::McRun => mc_run(cfg, &mut out),
            RunMode::All => unreachable!("expanded above"),
        }
    }
    let exit_code = if !out.failures.is_empty() {
        3
    } else if !out.violations.is_empty() {
        1
    } else {
        0
    };
    let generated_at_unix = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let report = Report {
        schema_version: SCHEMA_VERSION,
        generated_at_unix,
        mode: cfg.mode,
        seed: cfg.seed,
        config: cfg.clone(),
        sections: out.sections,
        violations: out.violations,
        numerical_failures: out.failures,
        exit_code,
    };
    (report, out.tables)
}

/// Trace inequality sweep over seeded Hermitian pairs, plus commuting
/// pairs where the gap must vanish.
fn gt_check(cfg: &ResolvedConfig, out: &mut Outcome) {
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed ^ 0x6774);
    let dims = [2usize, 4, 8, 16];
    let mut rows = Vec::new();
    let mut pass = true;
    for &d in &dims {
        let mut worst_rel = f64::INFINITY;
        for _ in 0..cfg.gt_pairs {
            let x = random_hermitian(d, 0.7, &mut rng);
            let y = random_hermitian(d, 0.7, &mut rng);
            let scale = (x.op_norm() + y.op_norm()).exp();
            let gap = match gt_gap(&x, &y) {
                Ok(g) => g,
                Err(e) => {
                    out.failure(format!("trace-inequality pair at dim {d}: {e}"));
                    continue;
                }
            };
            worst_rel = worst_rel.min(gap / scale);
            if gap < -1e-9 * scale {
                pass = false;
                out.violation(format!("trace inequality violated at dim {d}: gap {gap}"));
            }
        }
        let commuting = (cfg.gt_pairs / 10).max(1);
        let mut commuting_worst = 0.0f64;
        for _ in 0..commuting {
            let x = random_hermitian(d, 0.7, &mut rng);
            let y1 = func_calculus(&x, f64::sin).expect("sin stays finite");
            let y2 = func_calculus(&x, |l| 0.4 * l + l.cos()).expect("bounded map");
            let scale = (y1.op_norm() + y2.op_norm()).exp();
            let gap = gt_gap(&y1, &y2).expect("bounded exponents");
            commuting_worst = commuting_worst.max(gap.abs() / scale);
            if gap.abs() > 1e-9 * scale {
                pass = false;
                out.violation(format!("commuting pair at dim {d} has nonzero gap {gap}"));
            }
        }
        rows.push(json!({
            "tag": "gt",
            "dim": d,
            "pairs": cfg.gt_pairs,
            "commuting_pairs": commuting,
            "worst_gap_over_scale": worst_rel,
            "commuting_worst_abs_over_scale": commuting_worst,
        }));
    }
    out.sections.push(Section {
        name: "gt_check".into(),
        tags: vec!["gt".into()],
        pass,
        detail: json!({ "rows": rows }),
    });
}

/// Scalar two-point inequality on the canonical grid.
fn lemma_check(out: &mut Outcome) {
    let mut min_gap = f64::INFINITY;
    let mut argmin = (0.0, 0.0);
    let mut points = 0u64;
    for li in 0..=100u32 {
        let lambda = li as f64 / 100.0;
        for xi in -500..=500i32 {
            let x = xi as f64 / 10.0;
            let gap = lemma_gap(lambda, x);
            points += 1;
            if gap < min_gap {
                min_gap = gap;
                argmin = (lambda, x);
            }
        }
    }
    let pass = min_gap >= -1e-12;
    if !pass {
        out.violation(format!(
            "scalar envelope inequality violated: gap {min_gap} at (lambda, x) = {argmin:?}"
        ));
    }
    out.sections.push(Section {
        name: "lemma_check".into(),
        tags: vec!["lemma".into()],
        pass,
        detail: json!({
            "tag": "lemma",
            "points": points,
            "min_gap": min_gap,
            "argmin_lambda": argmin.0,
            "argmin_x": argmin.1,
        }),
    });
}

/// Conditional-expectation axioms on small tensor spaces.
fn space_verify(cfg: &ResolvedConfig, out: &mut Outcome) {
    let spaces: Vec<Vec<usize>> = if cfg.space.is_empty() {
        vec![vec![2, 2, 2], vec![3, 2, 2]]
    } else {
        vec![cfg.space.clone()]
    };
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed ^ 0x5ace);
    let mut rows = Vec::new();
    let mut pass = true;
    for dims in spaces {
        let space = match TensorSpace::new(dims.clone()) {
            Ok(s) => s,
            Err(e) => {
                out.failure(format!("space {dims:?}: {e}"));
                continue;
            }
        };
        let filt = Filtration::new(space.clone());
        let d = space.total_dim();
        let levels = filt.level_count();
        let (mut contraction, mut trace_resid, mut tower_resid, mut module_resid) =
            (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        let mut positivity_ok = true;
        for s in 0..cfg.axiom_samples {
            let x = random_hermitian(d, 1.0, &mut rng);
            let scale = 1.0 + x.op_norm();
            let psd = func_calculus(&x, f64::abs).expect("abs stays finite");
            for j in 0..levels {
                let ex = filt.cond_exp(j, &x).expect("level in range");
                contraction = contraction.max((ex.op_norm() - x.op_norm()) / scale);
                trace_resid =
                    trace_resid.max((trace_state(&ex) - trace_state(&x)).abs() / scale);
                let ep = filt.cond_exp(j, &psd).expect("level in range");
                if !is_psd(&ep, 1e-9) {
                    positivity_ok = false;
                    pass = false;
                    out.violation(format!(
                        "conditional expectation broke positivity at level {j} on {dims:?}"
                    ));
                }
                let a = filt
                    .cond_exp(j, &random_hermitian(d, 1.0, &mut rng))
                    .expect("level in range");
                let b = filt
                    .cond_exp(j, &random_hermitian(d, 1.0, &mut rng))
                    .expect("level in range");
                let resid = filt
                    .verify_module_property(j, &a, &x, &b)
                    .expect("dims match");
                let mscale = scale * (1.0 + a.op_norm()) * (1.0 + b.op_norm());
                module_resid = module_resid.max(resid / mscale);
                if resid > 1e-9 * mscale {
                    pass = false;
                    out.violation(format!(
                        "module property residual {resid} at level {j} on {dims:?}"
                    ));
                }
            }
            if s % 10 == 0 {
                for i in 0..=levels {
                    for j in 0..=levels {
                        let resid = filt.verify_tower(i, j, &x).expect("levels in range");
                        tower_resid = tower_resid.max(resid / scale);
                        if resid > 1e-9 * scale {
                            pass = false;
                            out.violation(format!(
                                "tower residual {resid} at levels ({i},{j}) on {dims:?}"
                            ));
                        }
                    }
                }
            }
        }
        if contraction > 1e-9 {
            pass = false;
            out.violation(format!(
                "conditional expectation expanded the norm by {contraction} on {dims:?}"
            ));
        }
        if trace_resid > 1e-10 {
            pass = false;
            out.violation(format!(
                "trace preservation residual {trace_resid} on {dims:?}"
            ));
        }
        rows.push(json!({
            "tag": "tower",
            "space": dims,
            "samples": cfg.axiom_samples,
            "worst_contraction_excess": contraction,
            "worst_trace_residual": trace_resid,
            "worst_tower_residual": tower_resid,
            "worst_module_residual": module_resid,
            "positivity_preserved": positivity_ok,
        }));
    }
    out.sections.push(Section {
        name: "space_verify".into(),
        tags: vec!["tower".into()],
        pass,
        detail: json!({ "rows": rows }),
    });
}

fn build_envelope(cfg: &ResolvedConfig) -> Result<MgfEnvelope, Error> {
    let p = &cfg.params;
    match cfg.envelope {
        EnvelopeChoice::Khan => khan_envelope(p.alpha, p.beta, p.gamma),
        EnvelopeChoice::Saturated => MgfEnvelope::saturated(p.gamma, p.lambda),
        EnvelopeChoice::ExplicitGrid => {
            let base = khan_envelope(p.alpha, p.beta, p.gamma)?;
            let ts = log_spaced_grid(cfg.t_grid.lo, cfg.t_grid.hi, cfg.t_grid.points);
            let log_fs = ts.iter().map(|&t| base.ln_f(t)).collect();
            MgfEnvelope::new(EnvelopeKind::Table { ts, log_fs }, p.gamma, p.lambda)
        }
    }
}

/// Closed-form evaluation of every bound family, no sequence involved.
fn bounds_suite(cfg: &ResolvedConfig, out: &mut Outcome) {
    let params = cfg.params;
    let env = match build_envelope(cfg) {
        Ok(e) => e,
        Err(e) => {
            out.failure(format!("envelope construction: {e}"));
            return;
        }
    };
    let mut reports: Vec<BoundReport> = Vec::new();
    let mut notes = Vec::new();
    fn record(
        result: Result<BoundReport, Error>,
        label: &str,
        reports: &mut Vec<BoundReport>,
        out: &mut Outcome,
    ) {
        match result {
            Ok(r) => reports.push(r),
            Err(e) => out.failure(format!("{label}: {e}")),
        }
    }
    record(theorem2_bound_a(&params, &env), "eq32", &mut reports, out);
    record(theorem2_bound_b(&params, &env), "eq33", &mut reports, out);
    match khan_bounds(&params) {
        Ok((a, b)) => {
            reports.push(a);
            reports.push(b);
        }
        Err(e) => out.failure(format!("cor_khan: {e}")),
    }
    record(ncbr_bound(&params), "cor_ncbr", &mut reports, out);
    record(azuma_nc_bound(&params), "cor_azuma_nc", &mut reports, out);
    if (params.alpha - params.beta).abs() <= 1e-12 * (1.0 + params.alpha) {
        record(
            azuma_classical_report(&params),
            "cor_azuma_classical",
            &mut reports,
            out,
        );
    } else {
        notes.push("classical mode skipped: needs beta = alpha".to_string());
    }
    for r in &reports {
        out.tables.push_bound_report(r);
    }
    let tags = reports.iter().map(|r| r.tag().to_string()).collect();
    out.sections.push(Section {
        name: "bounds".into(),
        tags,
        pass: true,
        detail: json!({
            "reports": report_detail(&reports.iter().collect::<Vec<_>>()),
            "notes": notes,
        }),
    });
}

/// Number of tensor factors that keeps the total dimension within `cap`.
fn max_factors(local_dim: usize, cap: usize) -> usize {
    let mut k = 0;
    let mut product = 1usize;
    while product * local_dim <= cap {
        product *= local_dim;
        k += 1;
    }
    k
}

fn build_chain(cfg: &ResolvedConfig, out: &mut Outcome) -> Option<(AdaptedSequence, usize)> {
    let p = &cfg.params;
    let values = match extremal_step_values(p.alpha, p.beta, p.gamma) {
        Ok(v) => v,
        Err(e) => {
            out.failure(format!("step construction: {e}"));
            return None;
        }
    };
    let local = values.len();
    let k = if cfg.space.is_empty() {
        cfg.horizon
            .min(max_factors(local, DEFAULT_CHAIN_DIM))
            .max(1)
    } else {
        if cfg.space.iter().any(|&d| d != local) {
            out.failure(format!(
                "configured space factors {:?} do not match the step support size {local}",
                cfg.space
            ));
            return None;
        }
        cfg.space.len().min(cfg.horizon)
    };
    let space = match TensorSpace::uniform(k, local) {
        Ok(s) => s,
        Err(e) => {
            out.failure(format!("chain space: {e}"));
            return None;
        }
    };
    let kind = match cfg.step_kind {
        StepChoice::Diagonal => StepKind::Diagonal,
        StepChoice::Conjugated => StepKind::Conjugated,
    };
    match step_chain(&space, &values, kind, cfg.seed) {
        Ok(seq) => Some((seq, k)),
        Err(e) => {
            out.failure(format!("chain construction: {e}"));
            None
        }
    }
}

/// Operator-chain verification of the bound families against tail-event
/// traces, plus the vanishing-tail diagnostic.
fn nc_verify(cfg: &ResolvedConfig, out: &mut Outcome) {
    let params = cfg.params;
    let env = match build_envelope(cfg) {
        Ok(e) => e,
        Err(e) => {
            out.failure(format!("envelope construction: {e}"));
            return;
        }
    };
    let Some((seq, horizon)) = build_chain(cfg, out) else {
        return;
    };
    let modes: &[BoundMode] = if params.gamma == 0.0 {
        &[
            BoundMode::Theorem2A,
            BoundMode::Theorem2B,
            BoundMode::Ncbr,
            BoundMode::AzumaNc,
        ]
    } else {
        &[
            BoundMode::Theorem2A,
            BoundMode::Theorem2B,
            BoundMode::KhanA,
            BoundMode::KhanB,
        ]
    };

    // One envelope sweep over the configured grid, shared across modes.
    let grid = log_spaced_grid(cfg.t_grid.lo, cfg.t_grid.hi, cfg.t_grid.points.min(24));
    let mgf_worst = match seq.check_mgf_condition(&env, &grid) {
        Ok(w) => w,
        Err(e) => {
            out.failure(format!("envelope sweep: {e}"));
            return;
        }
    };
    let mut pass = true;
    if mgf_worst < -1e-8 {
        pass = false;
        out.violation(format!("envelope condition violated by {mgf_worst}"));
    }

    let mut reports = Vec::new();
    for &mode in modes {
        match verify_inequality(&seq, &params, &env, mode, horizon) {
            Ok(r) => {
                if r.pass() != Some(true) {
                    pass = false;
                    out.violation(format!(
                        "negative margin for {} at horizon {horizon}",
                        mode.as_str()
                    ));
                }
                reports.push(r);
            }
            Err(e) => out.failure(format!("{}: {e}", mode.as_str())),
        }
    }
    for r in &reports {
        out.tables.push_bound_report(r);
    }

    // Vanishing tails: traces of the linear-threshold joins started at m
    // must be non-increasing, and for diagonal chains must sit below the
    // per-epoch geometric factor of the sup-threshold bound.
    let spec = ThresholdSpec::new(0.0, params.b);
    let m_list: Vec<usize> = (1..=horizon).collect();
    let mut tail_rows = Vec::new();
    match tail_meet_trace(&seq, spec, &m_list, horizon) {
        Ok(traces) => {
            let per_epoch = reports
                .iter()
                .find(|r| matches!(r.mode(), BoundMode::Theorem2B | BoundMode::KhanB))
                .map(|r| r.log_rhs_by_m()[&1]);
            let mut last = f64::INFINITY;
            for &(m, trace) in &traces {
                if trace > last + 1e-12 {
                    pass = false;
                    out.violation(format!("tail trace increased at m = {m}"));
                }
                last = trace;
                let envelope = per_epoch.map(|lr| (m as f64 * lr).exp());
                if cfg.step_kind == StepChoice::Diagonal {
                    if let Some(rhs) = envelope {
                        if trace > rhs + 1e-12 {
                            pass = false;
                            out.violation(format!(
                                "diagonal tail trace {trace} above geometric envelope {rhs} at m = {m}"
                            ));
                        }
                    }
                }
                tail_rows.push(json!({
                    "tag": "eq33",
                    "m": m,
                    "trace": trace,
                    "geometric_envelope": envelope,
                }));
            }
        }
        Err(e) => out.failure(format!("tail sweep: {e}")),
    }

    let mut tags: Vec<String> = reports.iter().map(|r| r.tag().to_string()).collect();
    if !tags.iter().any(|t| t == "eq33") {
        tags.push("eq33".into());
    }
    out.sections.push(Section {
        name: "nc_verify".into(),
        tags,
        pass,
        detail: json!({
            "horizon": horizon,
            "kind": format!("{:?}", seq.kind()),
            "mgf_worst_margin": mgf_worst,
            "reports": report_detail(&reports.iter().collect::<Vec<_>>()),
            "tail_traces": tail_rows,
        }),
    });
}

/// Monte Carlo crossing estimates against the affine-threshold bound,
/// with the exact enumeration oracle where the walk is small enough.
fn mc_run(cfg: &ResolvedConfig, out: &mut Outcome) {
    let params = cfg.params;
    let dist = match StepDistribution::two_point(params.alpha, params.beta, params.gamma) {
        Ok(d) => d,
        Err(e) => {
            out.failure(format!("step distribution: {e}"));
            return;
        }
    };
    let report = if params.gamma == 0.0 {
        ncbr_bound(&params)
    } else {
        khan_bounds(&params).map(|(a, _)| a)
    };
    let report = match report {
        Ok(r) => r,
        Err(e) => {
            out.failure(format!("affine bound: {e}"));
            return;
        }
    };
    let i = report.minimal_index().expect("affine reports carry an index");
    let mut pass = true;
    let mut notes = Vec::new();
    for m in 1..=params.m {
        let start = m as usize + i as usize;
        if start > cfg.horizon {
            notes.push(format!(
                "m = {m}: window [{start}, {}] is empty, crossing probability 0",
                cfg.horizon
            ));
            continue;
        }
        let est = match simulate_crossing(
            &dist,
            params.a,
            params.b,
            m,
            i,
            cfg.horizon,
            cfg.n_paths,
            cfg.seed.wrapping_add(m as u64),
        ) {
            Ok(e) => e,
            Err(e) => {
                out.failure(format!("simulation at m = {m}: {e}"));
                continue;
            }
        };
        let verdict = match compare_bound(&CrossingResult::Estimate(est), &report, m) {
            Ok(v) => v,
            Err(e) => {
                out.failure(format!("estimate comparison at m = {m}: {e}"));
                continue;
            }
        };
        if verdict == BoundVerdict::Fail {
            pass = false;
            out.violation(format!(
                "estimated crossing probability exceeds the bound at m = {m}"
            ));
        }
        let rhs = report.rhs_by_m()[&m];
        out.tables
            .push_mc(report.tag(), &est, params.a, params.b, m, i, rhs, verdict);

        match enumerate_exact_capped(&dist, params.a, params.b, m, i, cfg.horizon, 24) {
            Ok(exact_p) => {
                let margin = rhs - exact_p;
                if margin < -1e-12 {
                    pass = false;
                    out.violation(format!(
                        "exact crossing probability exceeds the bound at m = {m}: margin {margin}"
                    ));
                }
                out.tables.exact.push(ExactRow {
                    tag: report.tag(),
                    a: params.a,
                    b: params.b,
                    m,
                    i,
                    horizon: cfg.horizon,
                    exact_p,
                    rhs,
                    margin,
                });
            }
            Err(e) => out.failure(format!("exact oracle at m = {m}: {e}")),
        }
    }
    out.sections.push(Section {
        name: "mc_run".into(),
        tags: vec![report.tag().to_string()],
        pass,
        detail: json!({
            "tag": report.tag(),
            "n_paths": cfg.n_paths,
            "horizon": cfg.horizon,
            "minimal_index": i,
            "notes": notes,
        }),
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{resolve, FileConfig, Overrides};

    fn cfg_from(text: &str) -> ResolvedConfig {
        let file: FileConfig = toml::from_str(text).unwrap();
        resolve(file, Overrides::default()).unwrap()
    }

    #[test]
    fn lemma_suite_passes() {
        let mut out = Outcome::new();
        lemma_check(&mut out);
        assert!(out.sections[0].pass);
        assert!(out.violations.is_empty());
    }

    #[test]
    fn bounds_suite_emits_all_families_for_symmetric_presets() {
        let cfg = cfg_from("mode = \"bounds\"\npreset = \"hoeffding\"");
        let mut out = Outcome::new();
        bounds_suite(&cfg, &mut out);
        let tags = &out.sections[0].tags;
        for tag in [
            "eq32",
            "eq33",
            "cor_khan_a",
            "cor_khan_b",
            "cor_ncbr",
            "cor_azuma_nc",
            "cor_azuma_classical",
        ] {
            assert!(tags.iter().any(|t| t == tag), "missing {tag}");
        }
        assert!(out.failures.is_empty(), "{:?}", out.failures);
        assert_eq!(out.tables.bounds.len(), 7 * 3);
    }

    #[test]
    fn saturated_envelope_is_a_numerical_failure() {
        let cfg = cfg_from("mode = \"bounds\"\nenvelope = \"saturated\"");
        let mut out = Outcome::new();
        bounds_suite(&cfg, &mut out);
        assert!(!out.failures.is_empty());
    }

    #[test]
    fn full_run_exits_clean_on_the_symmetric_preset() {
        let cfg = cfg_from(
            "mode = \"all\"\nseed = 42\nhorizon = 6\nn_paths = 20000\ngt_pairs = 60\naxiom_samples = 12",
        );
        let (report, tables) = run(&cfg);
        assert_eq!(
            report.exit_code, 0,
            "violations: {:?}, failures: {:?}",
            report.violations, report.numerical_failures
        );
        assert_eq!(report.sections.len(), 6);
        assert!(!tables.bounds.is_empty());
        assert!(!tables.mc.is_empty());
        assert!(!tables.exact.is_empty());
    }

    #[test]
    fn drifted_preset_routes_to_one_sided_modes() {
        let cfg = cfg_from("mode = \"nc-verify\"\npreset = \"khan-drift\"\nseed = 7\nhorizon = 5");
        let (report, tables) = run(&cfg);
        assert_eq!(report.exit_code, 0, "{:?}", report.violations);
        assert!(tables.bounds.iter().any(|r| r.tag == "cor_khan_a"));
        assert!(tables.bounds.iter().all(|r| r.tag != "cor_ncbr"));
    }
}
