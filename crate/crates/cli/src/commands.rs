//! Campaign commands. Each returns the JSON records and CSV tables it produced.

use fracball_core::acceptance::{run_selected, AcceptanceSettings, CriterionOutcome};
use fracball_core::morse::{
    morse_index_auto, test_function_checks, MorseReport, TestFunctionReport,
};
use fracball_core::quadrature::{Estimate, QuadratureRule};
use fracball_core::radial::radial_eigenvalues;
use fracball_core::semilinear::{
    boundary_ratio, check_subcriticality, energy, pohozaev_residual, solve_radial_sign_changing,
    RadialSolution, SolveOptions,
};
use fracball_core::spectrum::{
    assemble_full_spectrum, verify_conjecture, ConjectureReport, SpectrumLabeled, Verdict,
};
use fracball_core::{NonlinearitySpec, ProblemParams, Result};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{CampaignConfig, NonlinearityDescriptor};
use crate::report::{sig17, RecordKind, Report};

/// Points at which solution profiles are tabulated for plotting.
pub const PROFILE_POINTS: usize = 101;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &'static str, header: &[&'static str]) -> Self {
        Self {
            name,
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone)]
pub struct CampaignOutput {
    pub report: Report,
    pub tables: Vec<Table>,
    /// Human-readable summary lines.
    pub summary: Vec<String>,
    /// Rows whose computation returned an error.
    pub failed_rows: usize,
    /// `Some(all passed)` when the acceptance suite ran.
    pub acceptance_passed: Option<bool>,
}

impl CampaignOutput {
    fn new(cfg: &CampaignConfig) -> Self {
        Self {
            report: Report::new(cfg.hash()),
            tables: Vec::new(),
            summary: Vec::new(),
            failed_rows: 0,
            acceptance_passed: None,
        }
    }

    fn table(&mut self, name: &'static str, header: &[&'static str]) -> &mut Table {
        if let Some(i) = self.tables.iter().position(|t| t.name == name) {
            return &mut self.tables[i];
        }
        self.tables.push(Table::new(name, header));
        self.tables.last_mut().unwrap()
    }

    fn push_error(&mut self, kind: RecordKind, inputs: Value, err: &fracball_core::Error) {
        self.failed_rows += 1;
        self.report
            .push(kind, inputs, json!({ "error": err.to_string() }));
    }
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("core types serialize to JSON")
}

fn fmt_s(s: f64) -> String {
    format!("{s:?}")
}

fn status(res: std::result::Result<(), &fracball_core::Error>) -> String {
    match res {
        Ok(()) => "ok".into(),
        Err(e) => e.to_string(),
    }
}

// ---------------------------------------------------------------------------
// eigs

struct EigsRow {
    n: usize,
    s: f64,
    result: Result<SpectrumLabeled>,
}

fn spectral_gap(spec: &SpectrumLabeled) -> Option<Estimate> {
    let second = *spec.block(0).get(1)?;
    let shifted = *spec.block(1).first()?;
    Some(Estimate::new(
        second.lambda - shifted.lambda,
        second.err + shifted.err,
    ))
}

pub fn cmd_eigs(cfg: &CampaignConfig) -> CampaignOutput {
    let mut out = CampaignOutput::new(cfg);
    eigs_into(cfg, &mut out);
    out
}

fn eigs_into(cfg: &CampaignConfig, out: &mut CampaignOutput) {
    let rows: Vec<EigsRow> = cfg
        .points()
        .into_par_iter()
        .map(|(n, s)| EigsRow {
            n,
            s,
            result: ProblemParams::new(n, s)
                .and_then(|p| assemble_full_spectrum(&p, cfg.ell_max, cfg.n_max, cfg.k)),
        })
        .collect();
    let mut safe = 0;
    for row in rows {
        let inputs =
            json!({"N": row.n, "s": row.s, "K": cfg.k, "ell_max": cfg.ell_max, "n_max": cfg.n_max});
        let spec = match row.result {
            Ok(spec) => spec,
            Err(e) => {
                out.table("spectrum_summary", SUMMARY_HEADER).push(vec![
                    row.n.to_string(),
                    fmt_s(row.s),
                    cfg.k.to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    status(Err(&e)),
                ]);
                out.push_error(RecordKind::Spectrum, inputs, &e);
                continue;
            }
        };
        let gap = spectral_gap(&spec);
        safe += spec.truncation_safe as usize;
        for e in &spec.entries {
            out.table(
                "spectrum",
                &[
                    "N",
                    "s",
                    "K",
                    "ell",
                    "n",
                    "lambda",
                    "err",
                    "multiplicity",
                    "coincident",
                ],
            )
            .push(vec![
                row.n.to_string(),
                fmt_s(row.s),
                cfg.k.to_string(),
                e.ell.to_string(),
                e.n.to_string(),
                sig17(e.lambda),
                sig17(e.err),
                e.multiplicity.to_string(),
                e.coincident.to_string(),
            ]);
        }
        out.table("spectrum_summary", SUMMARY_HEADER).push(vec![
            row.n.to_string(),
            fmt_s(row.s),
            cfg.k.to_string(),
            spec.ell_max.to_string(),
            spec.truncation_safe.to_string(),
            gap.map(|g| sig17(g.value)).unwrap_or_default(),
            gap.map(|g| sig17(g.err)).unwrap_or_default(),
            "ok".into(),
        ]);
        let mut payload = to_value(&spec);
        payload["gap"] = gap.map(|g| to_value(&g)).unwrap_or(Value::Null);
        out.report.push(RecordKind::Spectrum, inputs, payload);
    }
    out.summary.push(format!(
        "eigs: {} grid points, {} truncation-safe, {} failed",
        cfg.points().len(),
        safe,
        out.failed_rows
    ));
}

const SUMMARY_HEADER: &[&str] = &[
    "N",
    "s",
    "K",
    "ell_max",
    "truncation_safe",
    "gap",
    "gap_err",
    "status",
];

// ---------------------------------------------------------------------------
// conjecture

pub fn cmd_conjecture(cfg: &CampaignConfig) -> CampaignOutput {
    let mut out = CampaignOutput::new(cfg);
    conjecture_into(cfg, &mut out);
    out
}

const CONJECTURE_HEADER: &[&str] = &[
    "N",
    "s",
    "K",
    "lambda_shifted_ground",
    "lambda_shifted_ground_err",
    "lambda_radial_second",
    "lambda_radial_second_err",
    "gap",
    "gap_err",
    "margin_ratio",
    "verdict",
    "antisymmetric",
    "status",
];

fn conjecture_into(cfg: &CampaignConfig, out: &mut CampaignOutput) {
    let rows: Vec<(usize, f64, Result<ConjectureReport>)> = cfg
        .points()
        .into_par_iter()
        .map(|(n, s)| {
            (
                n,
                s,
                ProblemParams::new(n, s).and_then(|p| verify_conjecture(&p, cfg.k, cfg.ell_max)),
            )
        })
        .collect();
    let (mut yes, mut no, mut inconclusive, mut failed) = (0, 0, 0, 0);
    for (n, s, res) in rows {
        let inputs = json!({"N": n, "s": s, "K": cfg.k, "ell_max": cfg.ell_max});
        match res {
            Ok(r) => {
                match r.verdict {
                    Verdict::Yes => yes += 1,
                    Verdict::No => no += 1,
                    Verdict::Inconclusive => inconclusive += 1,
                }
                out.table("conjecture", CONJECTURE_HEADER).push(vec![
                    n.to_string(),
                    fmt_s(s),
                    cfg.k.to_string(),
                    sig17(r.lambda_shifted_ground.value),
                    sig17(r.lambda_shifted_ground.err),
                    sig17(r.lambda_radial_second.value),
                    sig17(r.lambda_radial_second.err),
                    sig17(r.gap.value),
                    sig17(r.gap.err),
                    sig17(r.margin_ratio),
                    format!("{:?}", r.verdict).to_lowercase(),
                    r.antisymmetric.to_string(),
                    "ok".into(),
                ]);
                out.report
                    .push(RecordKind::Conjecture, inputs, to_value(&r));
            }
            Err(e) => {
                failed += 1;
                let mut row = vec![n.to_string(), fmt_s(s), cfg.k.to_string()];
                row.extend(std::iter::repeat_n(
                    String::new(),
                    CONJECTURE_HEADER.len() - 4,
                ));
                row.push(status(Err(&e)));
                out.table("conjecture", CONJECTURE_HEADER).push(row);
                out.push_error(RecordKind::Conjecture, inputs, &e);
            }
        }
    }
    out.report.push(
        RecordKind::Conjecture,
        json!({"summary": true, "K": cfg.k, "ell_max": cfg.ell_max}),
        json!({"yes": yes, "no": no, "inconclusive": inconclusive, "failed": failed}),
    );
    out.summary.push(format!(
        "conjecture: {yes} yes / {no} no / {inconclusive} inconclusive / {failed} failed"
    ));
}

// ---------------------------------------------------------------------------
// solve and morse

struct SolveRow {
    row: usize,
    n: usize,
    s: f64,
    descriptor: NonlinearityDescriptor,
    spec: Option<NonlinearitySpec>,
    params: Option<ProblemParams>,
    solution: Result<RadialSolution>,
}

impl SolveRow {
    fn inputs(&self, cfg: &CampaignConfig) -> Value {
        json!({
            "N": self.n,
            "s": self.s,
            "nonlinearity": self.descriptor.to_string(),
            "resolved": self.spec.map(|s| to_value(&s)),
            "K": cfg.k,
            "nodes": cfg.nodes,
            "newton_tol": cfg.newton_tol,
        })
    }
}

fn solve_rows(cfg: &CampaignConfig) -> Vec<SolveRow> {
    cfg.nonlinear_points()
        .into_par_iter()
        .enumerate()
        .map(|(row, (n, s, descriptor))| {
            let params = ProblemParams::new(n, s);
            let spec = params.as_ref().map_err(Clone::clone).and_then(|_| {
                descriptor.resolve(|| Ok(radial_eigenvalues(n, s, cfg.k)?.eigenvalues[cfg.nodes]))
            });
            let solution = match (&params, &spec) {
                (Ok(p), Ok(f)) => {
                    let mut opts = SolveOptions::new(cfg.nodes, cfg.k);
                    opts.newton_tol = cfg.newton_tol;
                    solve_radial_sign_changing(p, f, &opts)
                }
                (Err(e), _) | (_, Err(e)) => Err(e.clone()),
            };
            SolveRow {
                row,
                n,
                s,
                descriptor,
                spec: spec.ok(),
                params: params.ok(),
                solution,
            }
        })
        .collect()
}

const SOLUTION_HEADER: &[&str] = &[
    "N",
    "s",
    "nonlinearity",
    "K",
    "converged",
    "residual",
    "nodal_count",
    "psi0_at_1",
    "pohozaev_relative",
    "energy",
    "subcritical",
    "status",
];

fn solutions_into(cfg: &CampaignConfig, rows: &[SolveRow], out: &mut CampaignOutput) {
    let mut converged = 0;
    for row in rows {
        let inputs = row.inputs(cfg);
        let head = vec![
            row.n.to_string(),
            fmt_s(row.s),
            row.descriptor.to_string(),
            cfg.k.to_string(),
        ];
        let sol = match &row.solution {
            Ok(sol) => sol,
            Err(e) => {
                let mut cells = head;
                cells.extend(std::iter::repeat_n(
                    String::new(),
                    SOLUTION_HEADER.len() - 5,
                ));
                cells.push(status(Err(e)));
                out.table("solutions", SOLUTION_HEADER).push(cells);
                out.push_error(RecordKind::Solution, inputs, e);
                continue;
            }
        };
        converged += sol.is_converged() as usize;
        let pohozaev = pohozaev_residual(sol, 4 * sol.basis.k);
        let j = energy(sol);
        let sub = check_subcriticality(&sol.spec, &sol.params);
        let ratio = boundary_ratio(sol);
        let mut cells = head;
        cells.extend([
            sol.is_converged().to_string(),
            sig17(sol.residual),
            sol.nodal_count.to_string(),
            sig17(sol.psi0_at_1),
            pohozaev
                .as_ref()
                .map(|p| sig17(p.relative_residual))
                .unwrap_or_default(),
            j.as_ref().map(|&v| sig17(v)).unwrap_or_default(),
            sub.subcritical.to_string(),
            "ok".into(),
        ]);
        out.table("solutions", SOLUTION_HEADER).push(cells);
        for i in 0..PROFILE_POINTS {
            let r = i as f64 / (PROFILE_POINTS - 1) as f64;
            out.table("solution_profiles", &["N", "s", "nonlinearity", "r", "u"])
                .push(vec![
                    row.n.to_string(),
                    fmt_s(row.s),
                    row.descriptor.to_string(),
                    sig17(r),
                    sig17(sol.eval(r)),
                ]);
        }
        let err_or = |r: Result<Value>| r.unwrap_or_else(|e| json!({"error": e.to_string()}));
        out.report.push(
            RecordKind::Solution,
            inputs,
            json!({
                "solution": to_value(sol),
                "pohozaev": err_or(pohozaev.map(|p| to_value(&p))),
                "energy": err_or(j.map(|v| json!(v))),
                "boundary_ratio": to_value(&ratio),
                "subcriticality": to_value(&sub),
            }),
        );
    }
    out.summary
        .push(format!("solve: {} rows, {converged} converged", rows.len()));
}

pub fn cmd_solve(cfg: &CampaignConfig) -> CampaignOutput {
    let mut out = CampaignOutput::new(cfg);
    let rows = solve_rows(cfg);
    solutions_into(cfg, &rows, &mut out);
    out
}

const MORSE_HEADER: &[&str] = &[
    "N",
    "s",
    "nonlinearity",
    "K",
    "ell_max",
    "total_index",
    "marginal_total",
    "lambda1_l",
    "lambda1_l_err",
    "theorem_check",
    "status",
];

struct MorseRow {
    morse: Result<MorseReport>,
    testfn: Option<(String, Result<TestFunctionReport>)>,
}

fn morse_rows(cfg: &CampaignConfig, rows: &[SolveRow]) -> Vec<MorseRow> {
    rows.par_iter()
        .map(|row| {
            let (Some(params), Ok(sol)) = (&row.params, &row.solution) else {
                let err = row.solution.as_ref().err().cloned().unwrap_or_else(|| {
                    fracball_core::Error::InvalidParams("grid point rejected".into())
                });
                return MorseRow {
                    morse: Err(err),
                    testfn: None,
                };
            };
            let morse = morse_index_auto(params, sol, cfg.k);
            let testfn = (cfg.test_functions && row.n <= 2).then(|| {
                let (name, rule) = if row.n == 1 {
                    ("tensor", QuadratureRule::tensor(cfg.oracle_level))
                } else {
                    (
                        "monte-carlo",
                        QuadratureRule::monte_carlo(cfg.mc_samples, cfg.row_seed(row.row)),
                    )
                };
                (name.to_string(), test_function_checks(params, sol, &rule))
            });
            MorseRow { morse, testfn }
        })
        .collect()
}

fn estimate_row(row: &SolveRow, quantity: String, e: Estimate) -> Vec<String> {
    vec![
        row.n.to_string(),
        fmt_s(row.s),
        row.descriptor.to_string(),
        quantity,
        sig17(e.value),
        sig17(e.err),
    ]
}

fn morse_into(cfg: &CampaignConfig, rows: &[SolveRow], out: &mut CampaignOutput) {
    let results = morse_rows(cfg, rows);
    let mut passes = 0;
    for (row, res) in rows.iter().zip(results) {
        let inputs = row.inputs(cfg);
        let head = vec![
            row.n.to_string(),
            fmt_s(row.s),
            row.descriptor.to_string(),
            cfg.k.to_string(),
        ];
        match &res.morse {
            Ok(m) => {
                passes += (m.theorem_check == fracball_core::morse::TheoremCheck::Passes) as usize;
                let mut cells = head;
                cells.extend([
                    m.ell_max.to_string(),
                    m.total_index.to_string(),
                    m.marginal_total.to_string(),
                    sig17(m.lambda1_l),
                    sig17(m.lambda1_l_err),
                    to_value(&m.theorem_check)
                        .as_str()
                        .unwrap_or_default()
                        .to_string(),
                    "ok".into(),
                ]);
                out.table("morse", MORSE_HEADER).push(cells);
                for b in &m.blocks {
                    out.table(
                        "morse_blocks",
                        &[
                            "N",
                            "s",
                            "nonlinearity",
                            "ell",
                            "multiplicity",
                            "negative",
                            "marginal",
                            "smallest",
                            "smallest_err",
                        ],
                    )
                    .push(vec![
                        row.n.to_string(),
                        fmt_s(row.s),
                        row.descriptor.to_string(),
                        b.ell.to_string(),
                        b.multiplicity.to_string(),
                        b.negative_count.to_string(),
                        b.marginal_count.to_string(),
                        sig17(b.smallest_eigenvalue),
                        sig17(b.smallest_err),
                    ]);
                }
                out.report
                    .push(RecordKind::Morse, inputs.clone(), to_value(m));
            }
            Err(e) => {
                let mut cells = head;
                cells.extend(std::iter::repeat_n(String::new(), MORSE_HEADER.len() - 5));
                cells.push(status(Err(e)));
                out.table("morse", MORSE_HEADER).push(cells);
                out.push_error(RecordKind::Morse, inputs.clone(), e);
            }
        }
        let Some((scheme, tf)) = res.testfn else {
            continue;
        };
        let mut tf_inputs = inputs;
        tf_inputs["scheme"] = json!(scheme);
        tf_inputs["mc_samples"] = json!(cfg.mc_samples);
        tf_inputs["seed"] = json!(cfg.row_seed(row.row));
        tf_inputs["oracle_level"] = json!(cfg.oracle_level);
        match tf {
            Ok(t) => {
                let header = &["N", "s", "nonlinearity", "quantity", "value", "err"];
                let mut cells = Vec::new();
                for (j, e) in t.self_forms.iter().enumerate() {
                    cells.push(estimate_row(row, format!("E(d{0},d{0})", j + 1), *e));
                }
                for (j, k, e) in &t.cross_forms {
                    cells.push(estimate_row(row, format!("E(d{j},d{k})"), *e));
                }
                for (j, e) in t.phi_forms.iter().enumerate() {
                    cells.push(estimate_row(row, format!("E(d{},phi)", j + 1), *e));
                }
                for (j, k, e) in &t.weak_identity_defects {
                    cells.push(estimate_row(row, format!("defect(v{j},d{k})"), *e));
                }
                cells.push(estimate_row(row, "rayleigh_bound".into(), t.rayleigh_bound));
                for c in cells {
                    out.table("testfn", header).push(c);
                }
                out.report.push(RecordKind::Testfn, tf_inputs, to_value(&t));
            }
            Err(e) => out.push_error(RecordKind::Testfn, tf_inputs, &e),
        }
    }
    out.summary.push(format!(
        "morse: {} rows, theorem-check passes on {passes}",
        rows.len()
    ));
}

pub fn cmd_morse(cfg: &CampaignConfig) -> CampaignOutput {
    let mut out = CampaignOutput::new(cfg);
    let rows = solve_rows(cfg);
    morse_into(cfg, &rows, &mut out);
    out
}

// ---------------------------------------------------------------------------
// verify-all

pub fn acceptance_settings(cfg: &CampaignConfig) -> AcceptanceSettings {
    AcceptanceSettings {
        k: cfg.k,
        oracle_level: cfg.oracle_level,
        mc_samples: cfg.mc_samples,
        seed: cfg.seed,
    }
}

fn acceptance_into(cfg: &CampaignConfig, outcomes: &[CriterionOutcome], out: &mut CampaignOutput) {
    let settings = acceptance_settings(cfg);
    for o in outcomes {
        for c in &o.checks {
            out.table("acceptance", &["criterion", "check", "passed", "detail"])
                .push(vec![
                    o.id.to_string(),
                    c.label.clone(),
                    c.passed.to_string(),
                    c.detail.clone(),
                ]);
        }
        out.report.push(
            RecordKind::Acceptance,
            json!({"criterion": o.id, "settings": to_value(&settings)}),
            to_value(o),
        );
        out.summary.push(format!(
            "criterion {}: {} ({}; {}/{} checks)",
            o.id,
            if o.passed { "PASS" } else { "FAIL" },
            o.title,
            o.checks.iter().filter(|c| c.passed).count(),
            o.checks.len()
        ));
    }
    out.acceptance_passed = Some(outcomes.iter().all(|o| o.passed));
}

/// Spectrum, conjecture, solve and Morse campaigns over the grid, then the acceptance suite.
pub fn cmd_verify_all(cfg: &CampaignConfig) -> CampaignOutput {
    let mut out = CampaignOutput::new(cfg);
    eigs_into(cfg, &mut out);
    conjecture_into(cfg, &mut out);
    let rows = solve_rows(cfg);
    solutions_into(cfg, &rows, &mut out);
    morse_into(cfg, &rows, &mut out);
    let outcomes = run_selected(&acceptance_settings(cfg), &cfg.criteria);
    acceptance_into(cfg, &outcomes, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> CampaignConfig {
        CampaignConfig::parse("grid.N = [1, 2]\ngrid.s = [0.5]\ntrunc.K = 12\ntrunc.ell_max = 2\n")
            .unwrap()
    }

    #[test]
    fn eigs_records_start_at_the_radial_ground_state() {
        let cfg = CampaignConfig::parse("grid.N = [1,2,3]\ngrid.s = [0.5]\ntrunc.K = 12").unwrap();
        let out = cmd_eigs(&cfg);
        assert_eq!(out.report.records.len(), 3);
        for r in &out.report.records {
            assert_eq!(r.payload["entries"][0]["ell"], 0);
            assert_eq!(r.payload["entries"][0]["n"], 0);
            assert!(r.payload["gap"]["value"].as_f64().unwrap() > 0.0);
        }
        assert_eq!(out.failed_rows, 0);
    }

    #[test]
    fn tiny_truncation_gives_only_inconclusive_or_failed_rows() {
        let cfg =
            CampaignConfig::parse("grid.N = [1, 2]\ngrid.s = [0.1]\ntrunc.K = 4\ntrunc.n_max = 1")
                .unwrap();
        let out = cmd_conjecture(&cfg);
        let summary = &out.report.records.last().unwrap().payload;
        assert_eq!(summary["no"], 0);
        assert!(out.summary[0].contains("0 no"));
    }

    #[test]
    fn per_point_failures_do_not_stop_the_campaign() {
        let cfg = CampaignConfig::parse(
            "grid.N = [2]\ngrid.s = [0.5]\ngrid.nonlinearity = [\"power(1, 3)\", \"power(-1, 3)\"]\ntrunc.K = 12\nmorse.test_functions = false",
        )
        .unwrap();
        let out = cmd_morse(&cfg);
        assert_eq!(out.report.records.len(), 2);
        assert!(!out.report.records[0].is_error());
        assert!(out.report.records[1].is_error());
        assert_eq!(out.failed_rows, 1);
    }

    #[test]
    fn solve_tables_have_profiles() {
        let out = cmd_solve(&small());
        let profiles = out
            .tables
            .iter()
            .find(|t| t.name == "solution_profiles")
            .unwrap();
        assert_eq!(profiles.rows.len(), 2 * PROFILE_POINTS);
        let solutions = out.tables.iter().find(|t| t.name == "solutions").unwrap();
        assert!(solutions.rows.iter().all(|r| r.last().unwrap() == "ok"));
    }

    #[test]
    fn repeated_runs_are_identical() {
        let cfg = small();
        assert_eq!(
            cmd_eigs(&cfg).report.encode(),
            cmd_eigs(&cfg).report.encode()
        );
    }
}
