//! One line per acceptance criterion; exits non-zero if any fails.
//! `cargo test -p vizketch-verify --test acceptance -- <suite>` runs one.

fn main() {
    let suite = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let outcomes = vizketch_verify::run(vizketch_verify::ACCEPTANCE_SEED, suite.as_deref(), None, |o| println!("{o}"));
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!("acceptance: {} passed, {failed} failed", outcomes.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
