//! Executes a task file into a [`Report`].

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;

use crate::arcs::{count_arcs, count_set, scale_count, xtilde, ArcTask};
use crate::error::{Error, Result};
use crate::expr::Value;
use crate::gamma::{a_m_sum, euler_char, graded_a_m_sum};
use crate::identity::{check_identity, check_termwise, Equality, FitOutcome, Rhs, TermwiseRow};
use crate::nearby::{motivic_volume, nearby_cycles, standard_volume, volume_series};
use crate::report::{Report, Status, TaskReport, Val};
use crate::series::{fit_specialized, RationalSeries};
use crate::taskfile::{gens_text, task_lines, Expect, Payload, Task, TaskFile, ZetaTask};

/// Tasks run concurrently; the report keeps declaration order.
pub fn run(tf: &TaskFile) -> Report {
    let tasks = std::thread::scope(|s| {
        let handles: Vec<_> = tf
            .tasks
            .iter()
            .map(|t| s.spawn(move || run_task(t, tf.seed, tf.budget)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("task thread panicked")).collect()
    });
    Report { version: tf.version, seed: tf.seed, budget: tf.budget, tasks }
}

/// Values of a finished task, the one `expect` compares against, and
/// whether its own checks passed.
struct Outcome {
    values: Vec<(String, Val)>,
    primary: Option<Val>,
    passed: bool,
}

impl Outcome {
    fn value(primary: Val, mut rest: Vec<(String, Val)>) -> Self {
        rest.insert(0, ("value".into(), primary.clone()));
        Self { values: rest, primary: Some(primary), passed: true }
    }

    fn checks(values: Vec<(String, Val)>, passed: bool) -> Self {
        Self { values, primary: None, passed }
    }
}

pub fn run_task(task: &Task, seed: u64, budget: u64) -> TaskReport {
    let mut report = TaskReport {
        name: task.name.clone(),
        kind: task.payload.kind().into(),
        status: Status::Ok,
        message: None,
        input: task_lines(task),
        values: Vec::new(),
    };
    match execute(&task.payload, seed, budget) {
        Err(e) => {
            report.status = Status::Error(e.code().into());
            report.message = Some(e.to_string());
        }
        Ok(out) => {
            report.values = out.values;
            if !out.passed {
                report.status = Status::Failed;
                report.message = Some("a check did not hold".into());
            }
            if let Some(expect) = &task.expect {
                let hit = out.primary.as_ref().is_some_and(|p| matches(expect, p));
                if !hit {
                    report.status = Status::Failed;
                    report.message = Some(format!("expected {expect}"));
                }
                report.values.push(("expected".into(), Val::text(expect.to_string())));
            }
        }
    }
    report
}

fn constant_of(v: &Val) -> Option<BigRational> {
    let m = match v {
        Val::Int(n) => return Some(BigRational::from_integer(n.clone())),
        Val::Rat(r) => return Some(r.clone()),
        Val::Motive(m) => m.clone(),
        Val::Series(s) => s.as_constant()?,
        _ => return None,
    };
    if !m.denominator().is_empty() {
        return None;
    }
    let c = m.numerator().as_constant().or_else(|| m.is_zero().then(|| BigInt::from(0)))?;
    Some(BigRational::from_integer(c))
}

fn matches(expect: &Expect, v: &Val) -> bool {
    match (expect, v) {
        (Expect::Value(Value::Motive(e)), Val::Motive(m)) => e == m,
        (Expect::Value(Value::Series(e)), Val::Series(s)) => e == s,
        (Expect::Value(Value::Series(_)), _) => false,
        (Expect::Value(Value::Motive(e)), v) => {
            constant_of(&Val::Motive(e.clone())).is_some_and(|c| constant_of(v) == Some(c))
        }
        (Expect::Rational(r), v) => constant_of(v).as_ref() == Some(r),
    }
}

fn uint(n: &BigUint) -> Val {
    Val::Int(BigInt::from(n.clone()))
}

fn pairs<K: Into<String>>(xs: impl IntoIterator<Item = (K, Val)>) -> Vec<(String, Val)> {
    xs.into_iter().map(|(k, v)| (k.into(), v)).collect()
}

fn coefficients(s: &RationalSeries, n: u32) -> Vec<(String, Val)> {
    if n == 0 {
        return Vec::new();
    }
    let cs = (1..=n).map(|m| Val::Motive(s.coefficient(m))).collect();
    vec![("coefficients".into(), Val::List(cs))]
}

fn execute(payload: &Payload, seed: u64, budget: u64) -> Result<Outcome> {
    Ok(match payload {
        Payload::Limit(s) => Outcome::value(Val::Motive(s.limit()?), Vec::new()),
        Payload::Hadamard { a, b, coefficients: n } => {
            let h = a.hadamard(b)?;
            let mut rest = coefficients(&h, *n);
            if let Ok(l) = h.limit() {
                rest.push(("limit".into(), Val::Motive(l)));
            }
            Outcome::value(Val::Series(h), rest)
        }
        Payload::Nearby(res) => {
            let vol = motivic_volume(res)?;
            Outcome::value(Val::Motive(nearby_cycles(res)), pairs([("motivic_volume", Val::Motive(vol))]))
        }
        Payload::VolumeSeries { datum, coefficients: n } => {
            let s = volume_series(datum);
            let mut rest = pairs([("motivic_volume", Val::Motive(motivic_volume(datum)?))]);
            rest.extend(coefficients(&s, *n));
            Outcome::value(Val::Series(s), rest)
        }
        Payload::AmSum { polyhedron, m, weight } => {
            let v = match weight {
                Some(w) => graded_a_m_sum(polyhedron, w, *m)?,
                None => a_m_sum(polyhedron, *m)?,
            };
            Outcome::value(Val::Motive(v), Vec::new())
        }
        Payload::Euler(p) => Outcome::value(Val::int(euler_char(p)?), Vec::new()),
        Payload::StandardVolume(fs) => Outcome::value(Val::Motive(standard_volume(fs)?), Vec::new()),
        Payload::ArcCount(task) => {
            let count = count_arcs(task, budget)?;
            let n = task.n_active() as i64;
            let xt = scale_count(&count, task.qf, n - task.trunc as i64 * n);
            let vol = scale_count(&count, task.qf, -(task.trunc as i64) * n);
            Outcome::value(uint(&count), pairs([("xtilde", Val::Rat(xt)), ("volume", Val::Rat(vol))]))
        }
        Payload::CountSet(spec) => {
            let count = count_set(spec, budget)?;
            Outcome::value(uint(&count), pairs([("xtilde", Val::Rat(xtilde(spec, budget)?))]))
        }
        Payload::Zeta(z) => zeta(z, budget)?,
        Payload::CheckTermwise(inst) => {
            let rows = check_termwise(inst, budget)?;
            let passed = rows.iter().all(TermwiseRow::passed);
            Outcome::checks(pairs([("rows", Val::List(rows.iter().map(row_val).collect()))]), passed)
        }
        Payload::CheckIdentity(inst) => {
            let rep = check_identity(inst, budget)?;
            let fields = rep
                .fields
                .iter()
                .map(|f| {
                    Val::record([
                        ("q", Val::int(f.q)),
                        ("lhs", fit_val(&f.lhs)),
                        ("x1", fit_val(&f.x1)),
                        ("rhs", rhs_val(&f.rhs)),
                        ("lhs_value", opt_rat(f.lhs_value())),
                        ("rhs_value", opt_rat(f.rhs_value())),
                        ("x1_limit", opt_rat(f.x1_limit())),
                        ("sides_agree", Val::Bool(f.sides_agree())),
                        ("x1_vanishes", Val::Bool(f.x1_vanishes())),
                    ])
                })
                .collect();
            let values = pairs([
                ("termwise", Val::List(rep.termwise.iter().map(row_val).collect())),
                ("fields", Val::List(fields)),
            ]);
            Outcome::checks(values, rep.passed())
        }
        Payload::Property { property, cases } => {
            let rep = property.run(seed, *cases);
            let values = pairs([
                ("cases", Val::int(rep.cases as u64)),
                ("failures", Val::List(rep.failures.iter().map(Val::text).collect())),
            ]);
            Outcome::checks(values, rep.passed())
        }
    })
}

fn opt_rat(r: Option<BigRational>) -> Val {
    r.map(Val::Rat).unwrap_or_else(|| Val::text("none"))
}

fn equality(e: &Equality) -> Val {
    Val::record([("lhs", uint(&e.lhs)), ("rhs", uint(&e.rhs)), ("holds", Val::Bool(e.holds()))])
}

fn row_val(r: &TermwiseRow) -> Val {
    Val::record([
        ("m", Val::int(r.m)),
        ("q", Val::int(r.q)),
        ("count_x", uint(&r.x)),
        ("count_x0", uint(&r.x0)),
        ("count_x1", uint(&r.x1)),
        ("partition", equality(&r.partition)),
        ("factorization", equality(&r.factorization)),
        ("product", equality(&r.product)),
        ("homogeneity", Val::Bool(r.homogeneity)),
        ("tau", Val::int(r.tau)),
        ("passed", Val::Bool(r.passed())),
    ])
}

fn data_val(data: &[(u32, BigRational)]) -> Val {
    Val::List(
        data.iter()
            .map(|(m, v)| Val::record([("m", Val::int(*m)), ("value", Val::Rat(v.clone()))]))
            .collect(),
    )
}

fn fit_val(f: &FitOutcome) -> Val {
    let mut fields = pairs([
        ("data", data_val(&f.data)),
        ("basis", Val::List(f.basis.iter().map(|g| Val::text(gens_text(g))).collect())),
    ]);
    match &f.fit {
        Ok(fit) => {
            fields.push(("series".into(), Val::text(fit.to_string())));
            fields.push(("limit".into(), Val::Rat(fit.limit())));
        }
        Err(e) => fields.push(("error".into(), Val::text(format!("{}: {e}", e.code())))),
    }
    Val::Record(fields)
}

fn rhs_val(r: &Rhs) -> Val {
    match r {
        Rhs::Fitted { fit, value } => Val::record([
            ("route", Val::text("arc_counts")),
            ("fit", fit_val(fit)),
            ("value", opt_rat(value.clone())),
        ]),
        Rhs::Resolution { volume, value } => Val::record([
            ("route", Val::text("resolution")),
            ("motivic_volume", Val::Motive(volume.clone())),
            ("value", Val::Rat(value.clone())),
        ]),
        Rhs::Degenerate => Val::record([("route", Val::text("degenerate"))]),
    }
}

/// Normalized counts `count(X_m(f)) q^{-m d}` and, with a basis, the
/// specialized `-lim` of the fitted series.
fn zeta(z: &ZetaTask, budget: u64) -> Result<Outcome> {
    let d = z.base.iter().filter(|b| **b != crate::arcs::Base::Zero).count() as i64;
    let mut rows = Vec::new();
    let mut data = Vec::new();
    for &m in &z.levels {
        let task = ArcTask { base: z.base.clone(), ..ArcTask::exact(z.f.clone(), m, m + 1, z.qf) };
        let count = count_arcs(&task, budget)?;
        let c = scale_count(&count, z.qf, -(m as i64) * d);
        rows.push(Val::record([("m", Val::int(m)), ("count", uint(&count)), ("coefficient", Val::Rat(c.clone()))]));
        data.push((m, c));
    }
    let mut values = pairs([("levels", Val::List(rows))]);
    let Some(basis) = &z.basis else {
        return Ok(Outcome::checks(values, true));
    };
    let q = BigRational::from_integer(z.qf.into());
    let fit = fit_specialized(&data, basis, &q).map_err(|e| match e {
        Error::Underdetermined(m) => Error::Underdetermined(format!("{m}; add levels or shrink the basis")),
        e => e,
    })?;
    let neg = -fit.limit();
    values.push(("series".into(), Val::text(fit.to_string())));
    values.insert(0, ("value".into(), Val::Rat(neg.clone())));
    Ok(Outcome { values, primary: Some(Val::Rat(neg)), passed: true })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gring::LocalizedMotive;
    use crate::taskfile::parse_taskfile;

    fn run_text(text: &str) -> Report {
        run(&parse_taskfile(text).unwrap_or_else(|e| panic!("{e:?}")))
    }

    fn value<'a>(t: &'a TaskReport, key: &str) -> &'a Val {
        &t.values.iter().find(|(k, _)| k == key).unwrap_or_else(|| panic!("no {key}")).1
    }

    #[test]
    fn limit_of_a_generator() {
        let r = run_text("version = 1\n[task a]\nkind = limit\nseries = gen(0,1)\nexpect = -1\n");
        assert_eq!(r.tasks[0].status, Status::Ok);
        assert_eq!(value(&r.tasks[0], "value"), &Val::Motive(LocalizedMotive::from_int(-1)));
    }

    #[test]
    fn am_sum_of_the_unit_interval() {
        let r = run_text(
            "version = 1\n[task a]\nkind = am_sum\ndim = 1\nconstraint = [1] >= 0\nconstraint = [-1] >= -1\nm = 1\nexpect = (L - 1)*(1 + L^-1)\n",
        );
        assert_eq!(r.tasks[0].status, Status::Ok, "{:?}", r.tasks[0]);
    }

    #[test]
    fn termwise_counts_for_xy_plus_z2() {
        let r = run_text(
            "version = 1\n[task t]\nkind = check_termwise\nvars = x, y, z\nf = x*y + z^2\nblocks = 1, 1, 1\nlevels = 1\nfields = 3\n",
        );
        let t = &r.tasks[0];
        assert_eq!(t.status, Status::Ok);
        let Val::List(rows) = value(t, "rows") else { panic!() };
        let Val::Record(row) = &rows[0] else { panic!() };
        let get = |k: &str| row.iter().find(|(n, _)| n == k).unwrap().1.clone();
        assert_eq!((get("count_x"), get("count_x0"), get("count_x1")), (Val::int(18), Val::int(0), Val::int(18)));
    }

    #[test]
    fn statuses() {
        let r = run_text(
            "version = 1\n[task a]\nkind = limit\nseries = gen(0,1)\nexpect = 1\n[task b]\nkind = limit\nseries = T + gen(0,1)\n[task c]\nkind = euler\ndim = 1\nconstraint = [1] > 0\nexpect = -1\n",
        );
        assert_eq!(r.tasks[0].status, Status::Failed);
        assert_eq!(r.tasks[1].status, Status::Error("NonvanishingPolyPart".into()));
        assert_eq!(r.tasks[2].status, Status::Ok);
        assert!(!r.all_ok());
    }

    #[test]
    fn budget_is_enforced() {
        let mut tf = parse_taskfile(
            "version = 1\n[task a]\nkind = arc_count\nvars = x, y\nf = x*y\nm = 3\ntrunc = 4\nqf = 5\n",
        )
        .unwrap();
        tf.budget = 10;
        let r = run(&tf);
        assert_eq!(r.tasks[0].status, Status::Error("BudgetExceeded".into()));
    }

    #[test]
    fn zeta_fit_of_xy() {
        let r = run_text(
            "version = 1\n[task z]\nkind = zeta\nvars = x, y\nf = x*y\nqf = 3\nlevels = 1, 2, 3, 4\nbasis = gen(-1,1)\nbasis = gen(-1,1)*gen(-1,1)\n",
        );
        // count = (m + 1)(q - 1)q^m, so the series is (q - 1)(2 gen + gen^2)
        // and -lim = q - 1.
        let t = &r.tasks[0];
        assert_eq!(t.status, Status::Ok, "{t:?}");
        assert_eq!(value(t, "value"), &Val::Rat(BigRational::from_integer(2.into())));
    }
}
