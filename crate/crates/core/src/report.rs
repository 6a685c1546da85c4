//! Deterministic text and `key=value` rendering of solver, audit and oracle results.

use std::fmt::Write as _;

use nalgebra::DVector;

use crate::audit::{AuditReport, OracleResult};
use crate::dual::MembershipVerdict;
use crate::problem::{IndexSet, Problem};
use crate::solver::{problem_label, Certificate, CriticalPoint, PerfectDualityReport, SearchDiagnostics, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Text,
    Structured,
}

/// Fixed-width rendering with `-0` folded to `0`.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let v = if v == 0.0 { 0.0 } else { v };
    if v != 0.0 && (v.abs() >= 1e9 || v.abs() < 1e-6) {
        format!("{v:.9e}")
    } else {
        format!("{v:.10}")
    }
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map_or_else(|| "none".into(), num)
}

pub fn vec_text(v: &DVector<f64>) -> String {
    let parts: Vec<String> = v.iter().map(|c| num(*c)).collect();
    format!("({})", parts.join(", "))
}

/// Shortest round-trip rendering, used in structured output.
pub fn exact(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:?}")
}

fn vec_structured(v: &DVector<f64>) -> String {
    let parts: Vec<String> = v.iter().map(|c| exact(*c)).collect();
    parts.join(",")
}

/// One critical point together with what was concluded about it.
#[derive(Debug, Clone)]
pub struct PointRecord {
    pub point: CriticalPoint,
    pub certificate: Certificate,
    pub duality: Option<PerfectDualityReport>,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub name: String,
    pub j: IndexSet,
    pub m: usize,
    pub diagnostics: SearchDiagnostics,
    pub records: Vec<PointRecord>,
}

impl SolveReport {
    /// First certified point, in canonical order.
    pub fn certified(&self) -> Option<&PointRecord> {
        self.records.iter().find(|r| r.certificate.is_certified())
    }

    pub fn summary_line(&self) -> String {
        match self.certified() {
            Some(r) => format!("certified: {} at x={}", r.certificate.verdict, vec_text(&r.point.point.x)),
            None => format!("certified: {} at x=none", Verdict::NoCertificate),
        }
    }
}

fn flag(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn opt_flag(b: Option<bool>) -> &'static str {
    match b {
        Some(true) => "yes",
        Some(false) => "no",
        None => "n/a",
    }
}

fn membership_lines(mv: &MembershipVerdict, num: fn(f64) -> String) -> Vec<(&'static str, String)> {
    let h = &mv.historical;
    vec![
        ("sigma_in_conj_dom", flag(mv.sigma_in_conj_dom).into()),
        ("T", flag(mv.in_t).into()),
        ("T_col", flag(mv.in_t_col).into()),
        ("sigma_Q_zero", flag(mv.sigma_q_zero).into()),
        ("Gamma_J", flag(mv.in_gamma_j).into()),
        ("Gamma_JQ", flag(mv.in_gamma_jq).into()),
        ("lambda_nonneg", flag(mv.lambda_nonneg).into()),
        ("G_psd", flag(mv.g_psd).into()),
        ("G_pd", flag(mv.g_pd).into()),
        ("min_eig", num(mv.min_eig)),
        ("T_Q", flag(mv.in_t_q).into()),
        ("T_Q_col", flag(mv.in_t_q_col).into()),
        ("T_Q_J_plus", flag(mv.in_t_q_j_plus).into()),
        ("T_Q_col_J_plus", flag(mv.in_t_q_col_j_plus).into()),
        ("T_plus", flag(mv.in_t_plus).into()),
        ("T_col_plus", flag(mv.in_t_col_plus).into()),
        ("LatGao_Sa_plus", flag(h.latgao_sa_plus).into()),
        ("RuaGao_Sa_plus", flag(h.ruagao_sa_plus).into()),
        ("MorGao17_Sa", opt_flag(h.morgao17_sa).into()),
        ("MorGao17_Sa_plus", opt_flag(h.morgao17_sa_plus).into()),
        ("MorGao16_Sa", opt_flag(h.morgao16_sa).into()),
        ("MorGao16_Sc_plus", opt_flag(h.morgao16_sc_plus).into()),
    ]
}

fn point_fields(r: &PointRecord, m: usize, num: fn(f64) -> String) -> Vec<(&'static str, String)> {
    let opt_num = |v: Option<f64>| v.map_or_else(|| "none".to_string(), num);
    let cp = &r.point;
    let c = &r.certificate;
    let mut out: Vec<(&'static str, String)> = vec![
        ("x", vec_structured(&cp.point.x)),
        ("lambda", vec_structured(&cp.point.lambda)),
        ("sigma", vec_structured(&cp.point.sigma)),
        ("f", opt_num(cp.objective)),
    ];
    match &cp.residuals {
        Some(res) => {
            out.push(("res_x", num(res.grad_x)));
            out.push(("res_sigma", opt_num(res.grad_sigma)));
            out.push(("res_lambda", num(res.grad_lambda_max)));
            out.push(("res_compl", num(res.complementarity)));
        }
        None => out.push(("residuals", "none".into())),
    }
    out.extend([
        ("critical", flag(cp.is_critical).to_string()),
        ("kkt", flag(cp.is_kkt).into()),
        ("j_lkkt", flag(cp.is_j_lkkt).into()),
        ("L_critical", flag(cp.l_is_critical).into()),
        ("L_j_lkkt", flag(cp.l_is_j_lkkt).into()),
        ("L_consequences", opt_flag(cp.l_consequences_hold).into()),
        ("D_j_lkkt", opt_flag(cp.dual_j_lkkt).into()),
        ("feasible", flag(cp.feasibility.feasible).into()),
        ("in_X_e", flag(cp.feasibility.in_x_e).into()),
        ("in_X_i", flag(cp.feasibility.in_x_i).into()),
    ]);
    if let Some(reason) = &cp.not_classifiable {
        out.push(("not_classifiable", reason.clone()));
    }
    out.extend(membership_lines(&cp.membership, num));
    out.push(("verdict", c.verdict.to_string()));
    if c.is_certified() {
        out.push(("solves", problem_label(&c.solved, m)));
        out.push(("attained_in", format!("X_{}", c.attained_in)));
    }
    out.push(("value", opt_num(c.value)));
    let failed: Vec<String> = c.failed.iter().map(|f| f.to_string()).collect();
    out.push(("failed", if failed.is_empty() { "none".into() } else { failed.join(";") }));
    let wrong: Vec<String> = c.wrongly_accepted_by.iter().map(|t| t.to_string()).collect();
    out.push((
        "wrongly_accepted_by",
        if wrong.is_empty() { "none".into() } else { wrong.join(";") },
    ));
    match &r.duality {
        Some(d) => {
            out.push(("pd_f", num(d.f)));
            out.push(("pd_xi", num(d.xi)));
            out.push(("pd_d", num(d.d)));
            out.push(("pd_gap", num(d.max_gap)));
            out.push(("pd_pass", flag(d.pass).into()));
        }
        None => out.push(("pd", "n/a".into())),
    }
    out
}

fn record_line(kind: &str, fields: &[(&str, String)]) -> String {
    let mut line = format!("record={kind}");
    for (k, v) in fields {
        // values never contain spaces in structured mode
        let v = v.replace(' ', "_");
        let _ = write!(line, " {k}={v}");
    }
    line
}

pub fn render_solve(report: &SolveReport, format: Format) -> String {
    let d = &report.diagnostics;
    let mut out = String::new();
    match format {
        Format::Structured => {
            let head = [
                ("problem", report.name.clone()),
                ("J", report.j.to_string()),
                ("branches", d.branches.to_string()),
                ("starts_per_branch", d.starts_per_branch.to_string()),
                ("converged", d.converged.to_string()),
                ("no_convergence", d.no_convergence.to_string()),
                ("screened", d.screened.to_string()),
                ("points", report.records.len().to_string()),
            ];
            out.push_str(&record_line("search", &head));
            out.push('\n');
            for (i, r) in report.records.iter().enumerate() {
                let mut fields = vec![("index", (i + 1).to_string())];
                fields.extend(point_fields(r, report.m, exact));
                out.push_str(&record_line("point", &fields));
                out.push('\n');
            }
            let s = match report.certified() {
                Some(r) => vec![
                    ("verdict", r.certificate.verdict.to_string()),
                    ("x", vec_structured(&r.point.point.x)),
                ],
                None => vec![("verdict", Verdict::NoCertificate.to_string()), ("x", "none".into())],
            };
            out.push_str(&record_line("summary", &s));
            out.push('\n');
        }
        Format::Text => {
            let _ = writeln!(out, "problem {}  J = {}", report.name, report.j);
            let _ = writeln!(
                out,
                "search: {} branches x {} starts, {} converged, {} without convergence, {} screened, {} distinct points",
                d.branches, d.starts_per_branch, d.converged, d.no_convergence, d.screened, report.records.len()
            );
            for (i, r) in report.records.iter().enumerate() {
                let cp = &r.point;
                let _ = writeln!(out);
                let _ = writeln!(
                    out,
                    "point {}: x = {}  λ = {}  σ = {}",
                    i + 1,
                    vec_text(&cp.point.x),
                    vec_text(&cp.point.lambda),
                    vec_text(&cp.point.sigma)
                );
                for (k, v) in point_fields(r, report.m, num).into_iter().skip(3) {
                    let _ = writeln!(out, "  {k:<22} {v}");
                }
            }
            let _ = writeln!(out);
            let _ = writeln!(out, "{}", report.summary_line());
        }
    }
    out
}

pub fn render_audit(report: &AuditReport, format: Format) -> String {
    let mut out = String::new();
    match format {
        Format::Structured => {
            for item in &report.items {
                let fields = [
                    ("audit", report.name.clone()),
                    ("id", item.id.clone()),
                    ("provenance", item.provenance.to_string()),
                    ("status", if item.pass { "PASS" } else { "FAIL" }.to_string()),
                    ("detail", item.detail.clone()),
                ];
                out.push_str(&record_line("check", &fields));
                out.push('\n');
            }
            let passed = report.items.iter().filter(|i| i.pass).count();
            let fields = [
                ("audit", report.name.clone()),
                ("passed", passed.to_string()),
                ("total", report.items.len().to_string()),
                ("status", if report.all_pass() { "PASS" } else { "FAIL" }.to_string()),
            ];
            out.push_str(&record_line("summary", &fields));
            out.push('\n');
        }
        Format::Text => {
            let _ = writeln!(out, "audit {}", report.name);
            for item in &report.items {
                let _ = writeln!(
                    out,
                    "[{}] {} {} {}",
                    if item.pass { "PASS" } else { "FAIL" },
                    item.provenance,
                    item.id,
                    item.description
                );
                let _ = writeln!(out, "       {}", item.detail);
            }
            let passed = report.items.iter().filter(|i| i.pass).count();
            let _ = writeln!(out, "{passed}/{} checks passed", report.items.len());
            if let Some(f) = report.first_failure() {
                let _ = writeln!(out, "first failure: {}", f.id);
            }
        }
    }
    out
}

pub fn render_oracle(name: &str, j: &IndexSet, problem: &Problem, o: &OracleResult, format: Format) -> String {
    let band = opt_num(o.eq_band);
    match format {
        Format::Structured => {
            let num = exact;
            let fields = [
                ("problem", name.to_string()),
                ("J", j.to_string()),
                ("n", problem.n().to_string()),
                ("lo", num(o.grid.lo)),
                ("hi", num(o.grid.hi)),
                ("steps", o.grid.steps.to_string()),
                ("eq_band", if o.eq_band.is_some() { band } else { "adaptive".into() }),
                ("feasible_nodes", o.feasible_nodes.to_string()),
                ("grid_argmin", vec_structured(&o.grid_argmin)),
                ("grid_min", num(o.grid_minvalue)),
                ("argmin", vec_structured(&o.argmin)),
                ("min", num(o.minvalue)),
            ];
            let mut s = record_line("oracle", &fields);
            s.push('\n');
            s
        }
        Format::Text => {
            let mut out = String::new();
            let _ = writeln!(out, "oracle {name}  J = {j}");
            let _ = writeln!(
                out,
                "grid [{}, {}]^{} with {} steps, equality band {}, {} feasible nodes",
                num(o.grid.lo),
                num(o.grid.hi),
                problem.n(),
                o.grid.steps,
                if o.eq_band.is_some() { band } else { "adaptive".into() },
                o.feasible_nodes
            );
            let _ = writeln!(out, "grid minimum {} at x = {}", num(o.grid_minvalue), vec_text(&o.grid_argmin));
            let _ = writeln!(out, "min = {} at x = {}", num(o.minvalue), vec_text(&o.argmin));
            out
        }
    }
}
