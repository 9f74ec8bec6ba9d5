//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//! `cargo test --test acceptance -- 9` runs a single criterion.

use levelcross::acceptance::{run, CRITERIA};

fn main() {
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    let mut total = 0;
    for (id, _) in CRITERIA {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let outcome = run(id);
        println!("{outcome}");
        total += 1;
        if !outcome.passed {
            failed += 1;
        }
    }
    println!("acceptance: {} of {total} criteria passed", total - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
