//! Acceptance suite: one PASS/FAIL line per criterion, with its time budget.

use evbslice::eval::{equivalent, implies};
use evbslice::gen::{random_graph, random_model, random_observed, random_pred, random_strong_graph, random_subst, random_vars, rng};
use evbslice::models::{electrical, ELECTRICAL_BAT, TP_ELECTRICAL};
use evbslice::normalize::{to_cf, to_primitive};
use evbslice::parser::parse_pred;
use evbslice::postman::{brute_force_tour_length, chinese_postman};
use evbslice::print::{pred_to_string, pretty_print};
use evbslice::semantics::{build_lts, check_bisimulation, check_simulation, exec, trace_relation, TraceRelation};
use evbslice::testgen::{parse_purposes, run_pipeline};
use evbslice::transform::{abstract_system, t_pred, t_subst};
use evbslice::varselect::{select_dataflow, select_dataflow_controlflow};
use evbslice::wp::{mod_defined, mod_pred_init, mod_inductive, wp};
use evbslice::{EventSystem, Pred, Subst, Valuation};
use std::collections::BTreeSet;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

/// Parsed once, outside the timed region.
fn model() -> &'static EventSystem {
    static MODEL: OnceLock<EventSystem> = OnceLock::new();
    MODEL.get_or_init(electrical)
}

fn set(xs: &[&str]) -> BTreeSet<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn c1_golden_predicate() -> Outcome {
    let m = model();
    let cf = to_cf(&m.invariant).map_err(|e| e.to_string())?;
    let t = t_pred(&cf, &set(&["Bat"])).map_err(|e| e.to_string())?;
    let expected = parse_pred("Bat : 1..3 --> {ok, ko}", m).map_err(|e| e.to_string())?;
    ensure(t == expected, || format!("got `{}`", pred_to_string(&t)))?;
    Ok("structural match".into())
}

fn c2_golden_system() -> Outcome {
    let a = abstract_system(model(), &["Bat".into()]).map_err(|e| e.to_string())?;
    let text = pretty_print(&a);
    ensure(text == ELECTRICAL_BAT, || format!("rendering differs:\n{text}"))?;
    Ok(format!("{} bytes equal", text.len()))
}

fn c3_mod_table() -> Outcome {
    let m = model();
    let x = set(&["Bat"]);
    let golden = |src: &str| parse_pred(src, m).map_err(|e| format!("{src}: {e}"));
    let init = golden("Bat' = {1 |-> ok, 2 |-> ok, 3 |-> ok}")?;
    let got = mod_pred_init(&m.init, &x);
    ensure(equivalent(&m.vars, &got, &init).map_err(|e| e.to_string())?.is_none(), || "Init".into())?;
    let table = [
        ("Tic", "false"),
        ("Com", "false"),
        (
            "Fail",
            "card(Bat |> {ok}) > 1 & #nb : 1..3 . (nb : 1..3 & nb : dom(Bat |> {ok}) & Bat' = Bat <+ {nb |-> ko})",
        ),
        ("Rep", "#nb : 1..3 . (nb : 1..3 & nb : dom(Bat |> {ko}) & Bat' = Bat <+ {nb |-> ok})"),
    ];
    for (e, src) in table {
        let expected = golden(src)?;
        let s = to_primitive(&m.events[e]);
        for (route, got) in [("definition", mod_defined(&s, &x)), ("induction", mod_inductive(&s, &x))] {
            let w = equivalent(&m.vars, &got, &expected).map_err(|e| e.to_string())?;
            ensure(w.is_none(), || format!("{e} by {route}: counterexample {w:?}"))?;
        }
    }
    Ok("Init, Tic, Com, Fail, Rep equivalent".into())
}

fn c4_varselect() -> Outcome {
    let m = model();
    let obs = |v: &str| vec![v.to_string()];
    let df = select_dataflow(m, &obs("Bat")).map_err(|e| e.to_string())?;
    let dcf_h = select_dataflow_controlflow(m, &obs("H")).map_err(|e| e.to_string())?;
    let dcf_bat = select_dataflow_controlflow(m, &obs("Bat")).map_err(|e| e.to_string())?;
    ensure(df.set() == set(&["Bat"]), || format!("dataflow {{Bat}} gave {:?}", df.names))?;
    ensure(dcf_h.set() == set(&["Bat", "H"]), || format!("control flow {{H}} gave {:?}", dcf_h.names))?;
    ensure(dcf_bat.set() == set(&["Bat"]), || format!("control flow {{Bat}} gave {:?}", dcf_bat.names))?;
    Ok("{Bat}, {Bat, H}, {Bat}".into())
}

fn random_cases() -> impl Iterator<Item = (u64, EventSystem, Vec<String>)> {
    (0..200u64).map(|seed| {
        let mut r = rng(1000 + seed);
        let m = random_model(&mut r);
        let obs = random_observed(&mut r, &m);
        (seed, m, obs)
    })
}

fn c5_simulation() -> Outcome {
    for (seed, m, obs) in random_cases() {
        let x = select_dataflow(&m, &obs).map_err(|e| format!("seed {seed}: {e}"))?;
        let a = abstract_system(&m, &x.names).map_err(|e| format!("seed {seed}: {e}"))?;
        let (lc, la) = (build_lts(&m).map_err(|e| e.to_string())?, build_lts(&a).map_err(|e| e.to_string())?);
        let v = check_simulation(&lc, &la);
        ensure(v.holds, || format!("seed {seed}: {:?} / {:?}", v.reason, v.trace))?;
    }
    Ok("200 models".into())
}

fn c6_bisimulation() -> Outcome {
    for (seed, m, obs) in random_cases() {
        let x = select_dataflow_controlflow(&m, &obs).map_err(|e| format!("seed {seed}: {e}"))?;
        let a = abstract_system(&m, &x.names).map_err(|e| format!("seed {seed}: {e}"))?;
        let (lc, la) = (build_lts(&m).map_err(|e| e.to_string())?, build_lts(&a).map_err(|e| e.to_string())?);
        let v = check_bisimulation(&lc, &la);
        ensure(v.holds, || format!("seed {seed}: {:?} / {:?}", v.reason, v.trace))?;
        let xs = x.set();
        for (e, s) in &m.events {
            let s = to_primitive(s);
            let t = t_subst(&s, &xs).map_err(|e| e.to_string())?;
            let w = equivalent(&m.vars, &mod_defined(&s, &xs), &mod_defined(&t, &xs)).map_err(|e| e.to_string())?;
            ensure(w.is_none(), || format!("seed {seed} event {e}: {w:?}"))?;
        }
    }
    Ok("200 models".into())
}

fn c7_traces() -> Outcome {
    let m = model();
    let x = select_dataflow_controlflow(m, &["Bat".into()]).map_err(|e| e.to_string())?;
    let a = abstract_system(m, &x.names).map_err(|e| e.to_string())?;
    let rel = trace_relation(&build_lts(m).map_err(|e| e.to_string())?, &build_lts(&a).map_err(|e| e.to_string())?);
    ensure(rel == TraceRelation::Equal, || format!("{rel:?}"))?;
    Ok("Equal".into())
}

fn wp_oracle(m: &EventSystem, s: &Subst, p: &Pred) -> Result<(), String> {
    let names: Vec<(String, Vec<evbslice::Value>)> = m.vars.iter().map(|(k, d)| (k.clone(), d.values())).collect();
    let w = wp(s, p);
    let mut err = None;
    evbslice::value::for_each_valuation(&names, |v: &Valuation| {
        let lhs = evbslice::eval::holds(&w, v);
        let rhs = exec(m, s, v).map_err(|e| e.to_string()).and_then(|succ| {
            succ.iter().try_fold(true, |acc, u| Ok(acc && evbslice::eval::holds(p, u).map_err(|e| e.to_string())?))
        });
        match (lhs, rhs) {
            (Ok(a), Ok(b)) if a == b => true,
            (a, b) => {
                err = Some(format!("state {v:?}: wp {a:?}, executions {b:?}"));
                false
            }
        }
    });
    err.map_or(Ok(()), Err)
}

fn c8_wp_laws() -> Outcome {
    let mut r = rng(8);
    for case in 0..500 {
        let vars = random_vars(&mut r);
        let s = random_subst(&mut r, &vars, 3);
        let p = random_pred(&mut r, &vars, 2);
        let q = random_pred(&mut r, &vars, 2);
        let m = EventSystem { vars: vars.clone(), invariant: Pred::True, init: Subst::Skip, events: Default::default() };
        let ctx = |what: &str| format!("case {case} ({what})");
        let conj = equivalent(&vars, &wp(&s, &Pred::and(p.clone(), q.clone())), &Pred::and(wp(&s, &p), wp(&s, &q)));
        ensure(conj.map_err(|e| e.to_string())?.is_none(), || ctx("conjunction"))?;
        let disj = implies(&vars, &Pred::or(wp(&s, &p), wp(&s, &q)), &wp(&s, &Pred::or(p.clone(), q.clone())));
        ensure(disj.map_err(|e| e.to_string())?.is_none(), || ctx("disjunction"))?;
        let top = evbslice::eval::valid(&vars, &wp(&s, &Pred::True)).map_err(|e| e.to_string())?;
        ensure(top.is_none(), || ctx("wp of true"))?;
        if implies(&vars, &p, &q).map_err(|e| e.to_string())?.is_none() {
            let mono = implies(&vars, &wp(&s, &p), &wp(&s, &q)).map_err(|e| e.to_string())?;
            ensure(mono.is_none(), || ctx("monotonicity"))?;
        }
        wp_oracle(&m, &s, &p).map_err(|e| format!("{}: {e}", ctx("executions")))?;
    }
    Ok("500 pairs".into())
}

fn c9_mod_routes() -> Outcome {
    let mut r = rng(9);
    for case in 0..500 {
        let vars = random_vars(&mut r);
        let s = random_subst(&mut r, &vars, 3);
        let m = EventSystem { vars: vars.clone(), invariant: Pred::True, init: Subst::Skip, events: Default::default() };
        let xs: BTreeSet<String> = random_observed(&mut r, &m).into_iter().collect();
        let w = equivalent(&vars, &mod_defined(&s, &xs), &mod_inductive(&s, &xs)).map_err(|e| e.to_string())?;
        ensure(w.is_none(), || format!("case {case}: {w:?}"))?;
    }
    Ok("500 substitutions".into())
}

fn c10_pipeline() -> Outcome {
    let m = model();
    let x = select_dataflow_controlflow(m, &["Bat".into()]).map_err(|e| e.to_string())?;
    let a = abstract_system(m, &x.names).map_err(|e| e.to_string())?;
    let purposes = parse_purposes(TP_ELECTRICAL, &a).map_err(|e| e.to_string())?;
    ensure(purposes.len() == 2, || "two bundled purposes".into())?;
    let runs = run_pipeline(m, &a, &purposes, 16).map_err(|e| e.to_string())?;
    let mut summary = Vec::new();
    for run in &runs {
        let r = &run.report;
        ensure(!r.empty_product && r.tests > 0, || format!("{}: no tests", r.purpose))?;
        ensure(r.covered == r.coverable, || format!("{}: covered {}/{}", r.purpose, r.covered, r.coverable))?;
        ensure(r.ratio == Some(1.0), || format!("{}: instantiated {}/{}", r.purpose, r.instantiated, r.tests))?;
        summary.push(format!("{}/{}", r.instantiated, r.tests));
    }
    Ok(format!("instantiated {}", summary.join(", ")))
}

fn c11_postman() -> Outcome {
    let mut r = rng(11);
    let mut with_tour = 0;
    for case in 0..100 {
        let (n, edges) = if case % 2 == 0 { random_strong_graph(&mut r, 4, 8) } else { random_graph(&mut r, 4, 8) };
        let fast = chinese_postman(n, &edges).map(|t| t.len());
        let slow = brute_force_tour_length(n, &edges);
        ensure(fast == slow, || format!("case {case} {edges:?}: {fast:?} vs {slow:?}"))?;
        with_tour += usize::from(fast.is_some());
    }
    Ok(format!("100 graphs, {with_tour} with a tour"))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("golden predicate transformation", Duration::from_millis(1), c1_golden_predicate),
        ("golden system abstraction", Duration::from_millis(10), c2_golden_system),
        ("modification predicates", Duration::from_secs(1), c3_mod_table),
        ("variable selection", Duration::from_secs(1), c4_varselect),
        ("simulation on random models", Duration::from_secs(60), c5_simulation),
        ("bisimulation on random models", Duration::from_secs(120), c6_bisimulation),
        ("electrical trace equality", Duration::from_secs(5), c7_traces),
        ("wp laws", Duration::from_secs(30), c8_wp_laws),
        ("inductive vs defined Mod", Duration::from_secs(60), c9_mod_routes),
        ("test pipeline", Duration::from_secs(10), c10_pipeline),
        ("postman optimality", Duration::from_secs(60), c11_postman),
    ];
    model();
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if took <= *budget => (true, d),
            Ok(d) => (false, format!("{d}; over budget")),
            Err(e) => (false, e),
        };
        failed += usize::from(!ok);
        println!(
            "{} {:>2} {name}: {detail} [{:.3?} / {:?}]",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            took,
            budget
        );
    }
    if failed > 0 {
        eprintln!("{failed} criteria failed");
        std::process::exit(1);
    }
}
