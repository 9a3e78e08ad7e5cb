//! One PASS/FAIL line per acceptance criterion. Built without the libtest harness so the lines always print.

use std::process::{Command, Output};
use std::thread;

use serde_json::Value;

const CRITERIA: [(&str, &str); 7] = [
    ("tau_invariance", "tau is invariant under chart chains, u<->v swap and axis permutations"),
    ("tau_blowups", "tau is preserved by domain and target blow-up charts"),
    ("resolver_sweep", "resolve3 closes every pre-relation with |a|,|b|,|c| <= 12 and a descending certificate"),
    ("principalization", "omega-bar strictly decreases and the final fan is smooth and locally principal"),
    ("jacobian_characterization", "lambda = 1 on toroidal forms 1-6, some lambda != 1 on the excluded prepared forms F324, F326, F328, F330"),
    ("lattice_oracles", "SNF and lattice_index agree with minor and coset oracles"),
    ("a_descent", "A(C) descent terminates within A(initial) rounds with invertible leaf ideals"),
];

fn seed() -> String {
    std::env::var("TOROIDAL_ACCEPTANCE_SEED").unwrap_or_else(|_| "7".into())
}

fn suite(seed: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_toroidal"))
        .args(["suite", "--seed", seed])
        .output()
        .expect("toroidal binary runs")
}

fn main() {
    let seed = seed();
    let (first, second) = thread::scope(|s| {
        let a = s.spawn(|| suite(&seed));
        let b = s.spawn(|| suite(&seed));
        (a.join().unwrap(), b.join().unwrap())
    });
    let report: Value = serde_json::from_slice(&first.stdout).unwrap_or_else(|e| {
        panic!("suite output is not JSON ({e}); stderr:\n{}", String::from_utf8_lossy(&first.stderr))
    });
    let criteria = report["criteria"].as_array().cloned().unwrap_or_default();

    let mut failed = vec![];
    println!("acceptance (seed {seed})");
    for (id, what) in CRITERIA {
        let entry = criteria.iter().find(|c| c["id"] == id);
        let passed = entry.is_some_and(|c| c["passed"] == true);
        let cases = entry.and_then(|c| c["cases"].as_u64()).unwrap_or(0);
        println!("{} {id}: {what} ({cases} cases)", if passed { "PASS" } else { "FAIL" });
        if !passed {
            let detail = entry.map(|c| c["failures"].to_string()).unwrap_or_else(|| "missing from report".into());
            failed.push(format!("{id}: {detail}"));
        }
    }
    let identical = first.status.success() == second.status.success() && first.stdout == second.stdout;
    println!(
        "{} determinism: two suite runs with seed {seed} give byte-identical reports",
        if identical { "PASS" } else { "FAIL" }
    );
    if !identical {
        failed.push("determinism: reports differ".into());
    }
    if failed.is_empty() && !first.status.success() {
        failed.push("suite exited nonzero with every criterion passing".into());
    }
    if !failed.is_empty() {
        eprintln!("failed criteria:\n{}", failed.join("\n"));
        std::process::exit(1);
    }
}
