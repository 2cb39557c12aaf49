use std::path::PathBuf;

use motzeta::report::{from_json, render, to_json, Format};
use motzeta::run::run;
use motzeta::taskfile::{parse_taskfile, to_text, TaskFile};

fn fixtures() -> Vec<(String, TaskFile)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "task"))
        .collect();
    paths.sort();
    assert!(paths.len() >= 8);
    paths
        .into_iter()
        .map(|p| {
            let text = std::fs::read_to_string(&p).unwrap();
            let tf = parse_taskfile(&text).unwrap_or_else(|e| panic!("{}: {e:?}", p.display()));
            (p.file_name().unwrap().to_string_lossy().into_owned(), tf)
        })
        .collect()
}

#[test]
fn canonical_text_round_trips() {
    for (name, tf) in fixtures() {
        let text = to_text(&tf);
        assert_eq!(parse_taskfile(&text).unwrap(), tf, "{name}");
    }
}

/// Small fixtures only; the heavy ones are covered by the acceptance target.
fn light(name: &str) -> bool {
    !matches!(name, "identity.task" | "termwise.task" | "xk.task")
}

#[test]
fn report_input_echo_reparses_to_the_task_file() {
    for (name, tf) in fixtures().into_iter().filter(|(n, _)| light(n)) {
        let report = run(&tf);
        let mut text = format!("version = {}\nseed = {}\n", report.version, report.seed);
        for t in &report.tasks {
            text.push_str(&format!("[task {}]\n", t.name));
            for (k, v) in &t.input {
                text.push_str(&format!("{k} = {v}\n"));
            }
        }
        assert_eq!(parse_taskfile(&text).unwrap(), tf, "{name}");
        let json: serde_json::Value = serde_json::from_str(&render(&report, Format::Structured)).unwrap();
        assert_eq!(json, to_json(&report));
        assert_eq!(from_json(&json), Some(report), "{name}");
    }
}

#[test]
fn runs_are_deterministic() {
    for (name, tf) in fixtures().into_iter().filter(|(n, _)| light(n)) {
        let (a, b) = (run(&tf), run(&tf));
        for format in [Format::Text, Format::Structured] {
            assert_eq!(render(&a, format), render(&b, format), "{name}");
        }
    }
}

#[test]
fn shipped_fixtures_pass_except_the_failure_demo() {
    for (name, tf) in fixtures().into_iter().filter(|(n, _)| light(n)) {
        let report = run(&tf);
        if name == "expected_failures.task" {
            let ok: Vec<bool> = report.tasks.iter().map(|t| t.status.is_ok()).collect();
            assert_eq!(ok, [false, false, false, true]);
        } else {
            for t in &report.tasks {
                assert!(t.status.is_ok(), "{name}/{}: {:?} {:?}", t.name, t.status, t.message);
            }
        }
    }
}
