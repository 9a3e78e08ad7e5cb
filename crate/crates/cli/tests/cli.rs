use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;
use toroidal_core::blowup::{parse_substitution, transform_germ, Side};
use toroidal_core::germ::Germ;
use toroidal_core::lattice::ExpVec;
use toroidal_core::tree::{parse_dot, DotItem};

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name).display().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_toroidal")).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json report")
}

#[test]
fn classify_identity() {
    let v = json(&["classify", "--germ", &fixture("identity.json")]);
    assert_eq!(v["form"], "Toroidal6");
    assert_eq!(v["provenance"]["trunc_degree"], 8);
    assert_eq!(v["provenance"]["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn tau_fixture_has_order_two() {
    let v = json(&["tau", "--germ", &fixture("tau_order2.json")]);
    assert_eq!(v["tau"], 2);
    assert_eq!(v["invariant_factors"], serde_json::json!([2]));
}

#[test]
fn lambda_reports() {
    let v = json(&["lambda", "--germ", &fixture("form319.json")]);
    assert_eq!(v["components"][0]["lambda"], -1);
    assert_eq!(v["verdict"], "lambda_not_one");
    let v = json(&["lambda", "--germ", &fixture("toroidal3.json")]);
    assert_eq!(v["components"][0]["ord_jac"], 5);
    assert_eq!(v["classification"]["form"], "Toroidal3");
}

#[test]
fn principalize_fixture() {
    for (file, strategy) in [("fan_octant.json", "pair"), ("fan_three.json", "pair"), ("fan_three.json", "mixed")] {
        let v = json(&["principalize", "--fan", &fixture(file), "--strategy", strategy]);
        assert_eq!(v["locally_principal"], true, "{file} {strategy}");
        let history = v["history"].as_array().unwrap();
        assert!(!history.is_empty());
        for r in history {
            assert!(r["centers"].as_array().is_some_and(|c| !c.is_empty()));
        }
    }
    let v = json(&["principalize", "--fan", &fixture("fan_octant.json")]);
    let omegas: Vec<(i64, i64)> = v["history"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| (r["omega_bar"][0].as_i64().unwrap(), r["omega_bar"][1].as_i64().unwrap()))
        .collect();
    assert_eq!(omegas[0], (3, 2));
    assert!(omegas.windows(2).all(|w| w[1] < w[0]));
}

fn exps_of(comment: &str) -> [i64; 3] {
    let data = comment.split("data=(").nth(1).expect("pre-relation data");
    let inner = data.split(')').next().unwrap();
    let v: Vec<i64> = inner.split(',').map(|x| x.trim().parse().unwrap()).collect();
    [v[0], v[1], v[2]]
}

fn comments(items: &[DotItem]) -> std::collections::BTreeMap<usize, String> {
    items
        .iter()
        .filter_map(|i| match i {
            DotItem::Node { id, comment, .. } => Some((*id, comment.clone())),
            _ => None,
        })
        .collect()
}

#[test]
fn resolve3_dot_replays() {
    let out = run(&["resolve3", "--a", "1", "--b", "1", "--c", "-3", "--lambda", "1", "--format", "dot"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let items = parse_dot(&text).unwrap();
    let nodes = comments(&items);
    let edges: Vec<_> = items.iter().filter(|i| matches!(i, DotItem::Edge { .. })).collect();
    assert_eq!(edges.len() + 1, nodes.len());
    for item in &items {
        if let DotItem::Edge { from, to, label } = item {
            let m = parse_substitution(label, Side::Target).unwrap().as_monomial().unwrap();
            let parent = ExpVec::from(exps_of(&nodes[from]));
            assert_eq!(parent.apply_sub(&m), ExpVec::from(exps_of(&nodes[to])), "edge {from}->{to}");
        }
    }
    let parents: std::collections::BTreeSet<usize> = items
        .iter()
        .filter_map(|i| match i {
            DotItem::Edge { from, .. } => Some(*from),
            _ => None,
        })
        .collect();
    for (id, c) in &nodes {
        if !parents.contains(id) {
            assert!(c.contains("status=exited") || c.contains("status=resolved"), "open leaf n{id}: {c}");
        }
    }
}

#[test]
fn blowup_dot_replays() {
    for (germ, center, constants) in [
        ("monomial3.json", "2curve:x,y", None),
        ("monomial3.json", "point", None),
        ("toroidal3.json", "curve:x,y", Some("2")),
    ] {
        let path = fixture(germ);
        let mut args = vec!["blowup", "--germ", &path, "--center", center, "--format", "dot"];
        if let Some(c) = constants {
            args.extend(["--constants", c]);
        }
        let out = run(&args);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let items = parse_dot(&String::from_utf8(out.stdout).unwrap()).unwrap();
        let nodes = comments(&items);
        let germ_of = |id: usize| Germ::from_json(nodes[&id].split("data=").nth(1).unwrap()).unwrap();
        let mut edges = 0;
        for item in &items {
            if let DotItem::Edge { from, to, label } = item {
                edges += 1;
                let sub = parse_substitution(label, Side::Domain).unwrap();
                let child = germ_of(*to);
                let again = transform_germ(&germ_of(*from), &sub, child.domain_kind, 8).unwrap();
                assert_eq!(again.jets(), child.jets(), "{germ} {center}: edge {from}->{to}");
            }
        }
        assert!(edges >= 2);
    }
}

#[test]
fn reports_are_deterministic() {
    let args = ["suite", "--seed", "3", "--only", "principalization,lattice_oracles"];
    let (a, b) = (run(&args), run(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let args = ["resolve3", "--a", "5", "--b", "-2", "--c", "3", "--lambda", "2/3"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
}

#[test]
fn exit_codes() {
    let out = run(&["classify", "--germ", &fixture("malformed.json")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ParseError"));
    let out = run(&["tau", "--germ", &fixture("identity.json")]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("MalformedGerm"));
    let out = run(&["suite"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["resolve3", "--a", "1", "--b", "2", "--c", "3"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("InvalidPreRelation"));
    let out = run(&["resolve3", "--a", "1", "--b", "1", "--c", "-3", "--max-steps", "2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("StepBudgetExceeded"));
    let out = run(&["tau", "--germ", "/nonexistent/germ.json"]);
    assert_eq!(out.status.code(), Some(2));
}
