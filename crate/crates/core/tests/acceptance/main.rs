//! Acceptance suite: one PASS/FAIL line per criterion, each under its time
//! budget.

mod cv;
mod dedup;
mod end_to_end;
mod forecast;
mod lda;
mod parser;
mod qstat;
mod regression;
mod stages;
mod trees;

use std::process::ExitCode;
use std::time::{Duration, Instant};

type Check = Result<String, String>;

/// Fails the enclosing check with a formatted message.
#[macro_export]
macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

struct Criterion {
    id: u8,
    name: &'static str,
    budget: Duration,
    run: fn() -> Check,
}

const CRITERIA: [Criterion; 10] = [
    Criterion { id: 1, name: "parser golden suite", budget: Duration::from_secs(1), run: parser::check },
    Criterion { id: 2, name: "dedup oracle", budget: Duration::from_secs(5), run: dedup::check },
    Criterion { id: 3, name: "LDA recovery", budget: Duration::from_secs(60), run: lda::check },
    Criterion { id: 4, name: "stage classifier and decay patterns", budget: Duration::from_secs(1), run: stages::check },
    Criterion { id: 5, name: "tree conservation", budget: Duration::from_secs(5), run: trees::check },
    Criterion { id: 6, name: "regression oracles", budget: Duration::from_secs(30), run: regression::check },
    Criterion { id: 7, name: "CV determinism and correctness", budget: Duration::from_secs(30), run: cv::check },
    Criterion { id: 8, name: "forecast monotonicity", budget: Duration::from_secs(1), run: forecast::check },
    Criterion { id: 9, name: "q-statistic", budget: Duration::from_secs(10), run: qstat::check },
    Criterion { id: 10, name: "end-to-end run", budget: Duration::from_secs(120), run: end_to_end::check },
];

fn main() -> ExitCode {
    let filter: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for c in CRITERIA.iter().filter(|c| filter.is_empty() || filter.contains(&c.id)) {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(c.run).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > c.budget => Err(format!("{detail}; over budget {:?}", c.budget)),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS {:>2} {} ({:.2?}): {detail}", c.id, c.name, elapsed),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {} ({:.2?}): {why}", c.id, c.name, elapsed);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
