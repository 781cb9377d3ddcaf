//! `solve`, `recover`, `verify` and `list-examples`.

use std::f64::consts::PI;

use rhcan::canonical::{asymptotic_coefficients, monodromy_residual};
use rhcan::examples::{resolvent_relations, ExampleId};
use rhcan::intop::{build_nystrom, commutator_identity_residual, inverse_operator_matrix, NystromPath, Resolvent};
use rhcan::linalg::{identity, max_norm};
use rhcan::scalar::cis;
use rhcan::{CanonicalData, Complex64, Example, KernelSpec, Matrix, RhSolution, Tolerances};
use serde_json::{Map, Value};

use crate::custom::{self, JumpFn};
use crate::report::{self, Check};
use crate::{Failure, Format, RunConfig, Source};

/// Residual limits for the command checks, before `--tol-scale`.
#[derive(Debug, Clone, Copy)]
pub struct Limits {
    pub jump: f64,
    pub f2_exact: f64,
    pub j_symmetry: f64,
    pub j_positivity: f64,
    pub normalization: f64,
    pub monodromy: f64,
    pub m1: f64,
    pub asymptotic: f64,
    pub monotone: f64,
    pub nilpotency: f64,
    pub structure: f64,
    pub inverse: f64,
    pub operator_identity: f64,
    pub relations: f64,
    pub gauge: f64,
}

impl Limits {
    pub fn scaled(s: f64) -> Self {
        let t = Tolerances::default();
        Self {
            jump: 1e-4 * s,
            f2_exact: 1e-6 * s,
            j_symmetry: 1e-6 * s,
            j_positivity: 1e-6 * s,
            normalization: 1e-5 * s,
            monodromy: 1e-3 * s,
            m1: 1e-6 * s,
            asymptotic: 1e-5 * s,
            monotone: t.monotone * s,
            nilpotency: 1e-6 * s,
            structure: 1e-5 * s,
            inverse: 1e-6 * s,
            operator_identity: 1e-10 * s,
            relations: 1e-8 * s,
            gauge: 1e-12 * s,
        }
    }

    fn to_json(self, tol_scale: f64) -> Value {
        let pairs = [
            ("tol_scale", tol_scale),
            ("jump", self.jump),
            ("f2_exact", self.f2_exact),
            ("j_symmetry", self.j_symmetry),
            ("j_positivity", self.j_positivity),
            ("normalization", self.normalization),
            ("monodromy", self.monodromy),
            ("m1", self.m1),
            ("asymptotic", self.asymptotic),
            ("monotone", self.monotone),
            ("nilpotency", self.nilpotency),
            ("structure", self.structure),
            ("inverse", self.inverse),
            ("operator_identity", self.operator_identity),
            ("relations", self.relations),
            ("gauge", self.gauge),
        ];
        Value::Object(
            pairs
                .into_iter()
                .map(|(k, v)| (k.to_string(), report::num(v)))
                .collect(),
        )
    }
}

/// What a command produced, ready to be written.
pub struct Outcome {
    pub json: Value,
    pub csv: Option<String>,
    pub table: Option<String>,
    pub checks: Vec<Check>,
    pub fail_code: i32,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::pass)
    }

    pub fn render(&self, format: Format) -> String {
        match (format, &self.csv) {
            (Format::Csv, Some(csv)) => csv.clone(),
            (Format::Csv, None) => {
                let mut s = String::from("name,value,limit,bound,pass\n");
                for c in &self.checks {
                    s.push_str(&format!(
                        "{},{:.16e},{:.16e},{},{}\n",
                        c.name,
                        c.value,
                        c.limit,
                        if c.upper { "max" } else { "min" },
                        c.pass()
                    ));
                }
                s
            }
            (Format::Json, _) => {
                let mut s = serde_json::to_string_pretty(&self.json).expect("JSON values always serialize");
                s.push('\n');
                s
            }
        }
    }
}

/// The kernel a command runs on.
struct Problem {
    label: String,
    example: Option<Example>,
    spec: KernelSpec,
    r_squared: Option<JumpFn>,
}

fn problem(cfg: &RunConfig) -> Result<Problem, Failure> {
    let tol = Tolerances::default().scaled(cfg.tol_scale);
    match &cfg.source {
        Source::Example(id, params) => {
            let ex = Example::build(*id, *params)?.with_tolerances(tol);
            let for_jump = ex.clone();
            Ok(Problem {
                label: id.tag().to_string(),
                spec: ex.spec().clone(),
                example: Some(ex),
                r_squared: Some(std::sync::Arc::new(move |x| for_jump.r_squared(x))),
            })
        }
        Source::Custom(path) => {
            let k = custom::load(path, tol)?;
            Ok(Problem {
                label: format!("custom:{} ({})", path.display(), k.source),
                example: None,
                spec: k.spec,
                r_squared: k.r_squared,
            })
        }
    }
}

fn meta(cfg: &RunConfig, command: &str, p: &Problem, limits: Limits) -> Value {
    let mut m = Map::new();
    m.insert("command".into(), Value::String(command.into()));
    m.insert("example".into(), Value::String(p.label.clone()));
    if let Some(ex) = &p.example {
        let params = ex.params();
        let mut o = Map::new();
        for &name in ex.id().parameters() {
            let v = match name {
                "u" => report::num(params.u),
                "gamma" => report::num(params.gamma),
                "alpha" => report::num(params.alpha),
                "m" => Value::from(params.m),
                _ => report::num(params.r),
            };
            o.insert(name.into(), v);
        }
        m.insert("params".into(), Value::Object(o));
    }
    let iv = p.spec.interval();
    m.insert(
        "interval".into(),
        Value::Array(vec![report::num(iv.a()), report::num(iv.b())]),
    );
    m.insert("n".into(), Value::from(cfg.n));
    m.insert("xi_points".into(), Value::from(cfg.xi_points));
    m.insert(
        "z_samples".into(),
        Value::Array(cfg.z.iter().map(|&z| report::complex(z)).collect()),
    );
    m.insert("tolerances".into(), limits.to_json(cfg.tol_scale));
    Value::Object(m)
}

fn document(meta: Value, results: Map<String, Value>, checks: &[Check]) -> Value {
    let mut top = Map::new();
    top.insert("meta".into(), meta);
    top.insert("results".into(), Value::Object(results));
    top.insert("residuals".into(), report::checks_json(checks));
    Value::Object(top)
}

fn interior_samples(spec: &KernelSpec) -> Vec<f64> {
    let iv = spec.interval();
    [0.25, 0.5, 0.75].iter().map(|s| iv.a() + s * iv.length()).collect()
}

fn j_checks(sol: &RhSolution, zs: &[Complex64], limits: Limits) -> Result<Vec<Check>, Failure> {
    let (mut sym, mut pos) = (0.0f64, 0.0f64);
    for &z in zs {
        if z.im == 0.0 {
            // the form (W*JW - J)/(z - z̄) needs z off the real axis
            continue;
        }
        let (s, p) = sol.j_property_residuals(z)?;
        sym = sym.max(s);
        pos = pos.max(p);
    }
    let mut norm = 0.0f64;
    for theta in [PI / 4.0, 3.0 * PI / 4.0] {
        let w = sol.cauchy_eval(cis(theta) * 1e6)?;
        norm = norm.max(max_norm(&(w - identity::<f64>(sol.m()))));
    }
    Ok(vec![
        Check::at_most("j_symmetry", sym, limits.j_symmetry),
        Check::at_most("j_positivity", pos, limits.j_positivity),
        Check::at_most("normalization", norm, limits.normalization),
    ])
}

fn rank_one_f2_error(p: &Problem, sol: &RhSolution) -> Option<f64> {
    let ex = p.example.as_ref()?;
    let mut worst = 0.0f64;
    for (x, v) in sol.f2().iter() {
        worst = worst.max(max_norm(&(v - ex.exact_f2(x)?)));
    }
    Some(worst)
}

pub fn solve(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let limits = Limits::scaled(cfg.tol_scale);
    let p = problem(cfg)?;
    let sol = RhSolution::solve(&p.spec, cfg.n)?;

    let mut results = Map::new();
    results.insert("F2".into(), report::table("x", sol.f2().iter()));
    let mut ws = Vec::with_capacity(cfg.z.len());
    for &z in &cfg.z {
        let mut o = Map::new();
        o.insert("z".into(), report::complex(z));
        o.insert("value".into(), report::matrix(&sol.cauchy_eval(z)?));
        ws.push(Value::Object(o));
    }
    results.insert("W".into(), Value::Array(ws));

    let mut checks = Vec::new();
    if let Some(r2) = &p.r_squared {
        let r2 = r2.clone();
        let jump = sol.jump_residual(move |x| r2(x), &interior_samples(&p.spec))?;
        checks.push(Check::at_most("jump", jump, limits.jump));
    }
    checks.extend(j_checks(&sol, &cfg.z, limits)?);
    if let Some(e) = rank_one_f2_error(&p, &sol) {
        checks.push(Check::at_most("f2_exact", e, limits.f2_exact));
    }

    let f2_rows: Vec<(f64, &Matrix)> = sol.f2().iter().collect();
    let csv = report::csv("x", &[("F2", f2_rows)]);
    Ok(Outcome {
        json: document(meta(cfg, "solve", &p, limits), results, &checks),
        csv: Some(csv),
        table: None,
        checks,
        fail_code: 4,
    })
}

pub fn recover(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let limits = Limits::scaled(cfg.tol_scale);
    let p = problem(cfg)?;
    let canon = CanonicalData::recover(&p.spec, cfg.xi_points, cfg.n)?;
    let sol = RhSolution::solve(&p.spec, cfg.n)?;
    let mono = monodromy_residual(&canon, &sol, &cfg.z)?;

    let mut results = Map::new();
    results.insert(
        "B".into(),
        report::table("xi", canon.xi_grid().iter().copied().zip(canon.b())),
    );
    results.insert(
        "H".into(),
        report::table("x", canon.xi_grid().iter().copied().zip(canon.h())),
    );
    results.insert("M1".into(), report::matrix(canon.m1()));
    let mut diag = Map::new();
    let d = canon.diagnostics();
    diag.insert("b_asymmetry".into(), report::num(d.b_asymmetry));
    diag.insert("h_min_eigenvalue".into(), report::num(d.h_min_eigenvalue));
    diag.insert("fd_consistency".into(), report::num(d.fd_consistency));
    diag.insert(
        "m1_vs_moment".into(),
        report::num(max_norm(&(canon.m1() - sol.moment(1)))),
    );
    diag.insert("nilpotency".into(), report::num(canon.nilpotency_residual()));
    if let Some(s) = canon.structure_residual() {
        diag.insert("structure".into(), report::num(s));
    }
    results.insert("diagnostics".into(), Value::Object(diag));

    let checks = vec![
        Check::at_most("monodromy", mono, limits.monodromy),
        Check::above("b_monotonicity", canon.monotonicity(), -limits.monotone),
    ];
    let b_rows: Vec<(f64, &Matrix)> = canon.xi_grid().iter().copied().zip(canon.b()).collect();
    let h_rows: Vec<(f64, &Matrix)> = canon.xi_grid().iter().copied().zip(canon.h()).collect();
    let csv = report::csv("xi", &[("B", b_rows), ("H", h_rows)]);
    Ok(Outcome {
        json: document(meta(cfg, "recover", &p, limits), results, &checks),
        csv: Some(csv),
        table: None,
        checks,
        fail_code: 4,
    })
}

pub fn verify(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let limits = Limits::scaled(cfg.tol_scale);
    let p = problem(cfg)?;
    let spec = &p.spec;
    let b = spec.interval().b();
    let mut checks = Vec::new();

    let mut lo = f64::INFINITY;
    for n in [16, 64, cfg.n] {
        lo = lo.min(build_nystrom(spec, b, n)?.min_eigenvalue());
    }
    checks.push(Check::above("operator_positivity", lo, 0.0));

    let op = build_nystrom(spec, b, cfg.n)?;
    checks.push(Check::at_most(
        "operator_identity",
        commutator_identity_residual(&op, spec),
        limits.operator_identity,
    ));
    let res = Resolvent::from_operator(spec, op)?;
    if res.operator().path() == NystromPath::Smooth {
        let t = inverse_operator_matrix(&res)?;
        let ts = t * res.operator().matrix();
        let dev = max_norm(&(&ts - Matrix::identity(ts.nrows(), ts.ncols())));
        checks.push(Check::at_most("inverse_identity", dev, limits.inverse));
    }

    let sol = RhSolution::from_resolvent(res)?;
    if let Some(r2) = &p.r_squared {
        let r2 = r2.clone();
        let jump = sol.jump_residual(move |x| r2(x), &interior_samples(spec))?;
        checks.push(Check::at_most("jump", jump, limits.jump));
    }
    checks.extend(j_checks(&sol, &cfg.z, limits)?);
    let asy = asymptotic_coefficients(&sol, 3)?;
    checks.push(Check::at_most(
        "asymptotic_moments",
        asy.max_disagreement(),
        limits.asymptotic,
    ));

    let canon = CanonicalData::recover(spec, cfg.xi_points, cfg.n)?;
    checks.push(Check::at_most(
        "m1_consistency",
        max_norm(&(canon.m1() - sol.moment(1))),
        limits.m1,
    ));
    checks.push(Check::at_most(
        "monodromy",
        monodromy_residual(&canon, &sol, &cfg.z)?,
        limits.monodromy,
    ));
    checks.push(Check::above("b_monotonicity", canon.monotonicity(), -limits.monotone));

    if let Some(ex) = &p.example {
        if ex.is_scalar_class() {
            checks.push(Check::at_most(
                "nilpotency",
                canon.nilpotency_residual(),
                limits.nilpotency,
            ));
            if let Some(s) = canon.structure_residual() {
                checks.push(Check::at_most("structure", s, limits.structure));
            }
        }
        if ex.id() != ExampleId::RankOne {
            let rel = resolvent_relations(ex, b, cfg.n)?;
            checks.push(Check::at_most("resolvent_balance", rel.block_balance, limits.relations));
            if let Some(c) = rel.conjugation {
                checks.push(Check::at_most("resolvent_conjugation", c, limits.relations));
            }
        }
        if let Some(gap) = ex.unimodular_gauge_gap(b, cfg.n) {
            checks.push(Check::at_most("gauge_equivalence", gap?, limits.gauge));
        }
        if let Some(e) = rank_one_f2_error(&p, &sol) {
            checks.push(Check::at_most("f2_exact", e, limits.f2_exact));
        }
    }

    let mut table = format!("verify {} (n = {}, xi points = {})\n", p.label, cfg.n, cfg.xi_points);
    for c in &checks {
        table.push_str(&c.row());
        table.push('\n');
    }
    let passed = checks.iter().filter(|c| c.pass()).count();
    table.push_str(&format!("{passed}/{} passed\n", checks.len()));

    Ok(Outcome {
        json: document(meta(cfg, "verify", &p, limits), Map::new(), &checks),
        csv: None,
        table: Some(table),
        checks,
        fail_code: 4,
    })
}

pub fn list_examples() -> String {
    let mut s = String::new();
    for id in ExampleId::ALL {
        let params = id.parameters();
        let params = if params.is_empty() {
            "none".to_string()
        } else {
            params.iter().map(|p| format!("--{p}")).collect::<Vec<_>>().join(" ")
        };
        s.push_str(&format!("{} ({})  parameters: {}\n", id.tag(), id.anchor(), params));
    }
    s
}
