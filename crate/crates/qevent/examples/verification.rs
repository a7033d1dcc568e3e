//! The self-check battery, straight from the library.
//!
//! Each check pits a production implementation against an independent
//! oracle: the game solver against plain value iteration, the switch-count
//! bound against a brute-force search, the integrator against a flow known
//! in closed form. `qevent verify` runs exactly this; here the battery is
//! driven as a library so the reports can feed a CI job or a notebook.
//!
//! A nonzero seed shifts the random fixtures to a fresh range, which is a
//! cheap way to widen the net beyond the reference battery.

use qevent::checks::run_all;

fn main() {
    let seed = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("seed must be an unsigned integer"))
        .unwrap_or(0);
    let reports = run_all(seed);
    for report in &reports {
        println!("{report}");
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        eprintln!("{failed} checks failed");
        std::process::exit(3);
    }
}
