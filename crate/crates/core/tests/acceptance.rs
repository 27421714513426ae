use msgabor::suite::{run_acceptance, DEFAULT_SEED};

fn main() {
    let rows = run_acceptance(&[], DEFAULT_SEED);
    for row in &rows {
        println!("{}", row.line());
    }
    let failed = rows.iter().filter(|r| !r.passed).count();
    println!("acceptance: {} passed, {failed} failed", rows.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
