//! Acceptance run: the ten headline properties at full size, one PASS/FAIL
//! line each with its wall-clock time against its budget. A line fails when
//! any of its checks fails or when it runs over budget.
//!
//! This target has no test harness so that the lines always print. Pass
//! names as arguments to run a subset, e.g.
//! `cargo test --test acceptance -- farey-ground-truth`.

use std::time::{Duration, Instant};

use freesplit::growth::CalibrationConstants;
use freesplit::io::suites::{self, Check};
use freesplit::io::{ExperimentSpec, Suite};
use freesplit::Result;

struct Criterion {
    name: &'static str,
    budget: Option<Duration>,
    run: fn() -> Result<Vec<Check>>,
}

fn spec(suite: Suite) -> ExperimentSpec {
    ExperimentSpec::new(suite)
}

const fn min(m: u64) -> Option<Duration> {
    Some(Duration::from_secs(60 * m))
}

const CRITERIA: [Criterion; 10] = [
    Criterion {
        name: "farey-ground-truth",
        budget: min(1),
        run: || Ok(vec![suites::farey_adjacency(&spec(Suite::Farey))?, suites::farey_distance(&spec(Suite::Farey))?]),
    },
    Criterion {
        name: "rank-two-model-cross-validation",
        budget: min(5),
        run: || Ok(vec![suites::model_cross_validation(&spec(Suite::Farey))?]),
    },
    Criterion {
        name: "intersection-bracket",
        budget: min(2),
        run: || Ok(vec![suites::twist_bracket(&spec(Suite::Growth))?, suites::path_bound(&spec(Suite::Growth))?]),
    },
    Criterion {
        name: "exponential-descents-and-retraction",
        budget: None,
        run: || {
            let (a, b) = suites::exponential_descents(&spec(Suite::Growth), &mut CalibrationConstants::default())?;
            Ok(vec![a, b])
        },
    },
    Criterion {
        name: "growth-against-quasigeodesic",
        budget: None,
        run: || Ok(vec![suites::growth_against_quasigeodesic(&spec(Suite::Growth))?]),
    },
    Criterion {
        name: "rank-two-distance-bound",
        budget: min(2),
        run: || Ok(vec![suites::sphere_distance_bound(&spec(Suite::Growth))?]),
    },
    Criterion {
        name: "fibonacci-twist-family",
        budget: None,
        run: || Ok(suites::fibonacci_suite(&spec(Suite::Example43))?.checks),
    },
    Criterion { name: "projection-properties", budget: min(10), run: || Ok(suites::bgi_suite(&spec(Suite::Bgi))?.checks) },
    Criterion {
        name: "projection-complex-axioms",
        budget: None,
        run: || Ok(suites::axioms_suite(&spec(Suite::Axioms))?.checks),
    },
    Criterion {
        name: "pair-graph-and-electrification",
        budget: min(10),
        run: || {
            let mut c = suites::pairgraph_suite(&spec(Suite::Pairgraph))?.checks;
            c.extend(suites::delta_suite(&spec(Suite::Delta))?.checks);
            Ok(c)
        },
    },
];

fn main() {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (i, c) in CRITERIA.iter().enumerate() {
        if !filters.is_empty() && !filters.iter().any(|f| c.name.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        let t = Instant::now();
        let result = (c.run)();
        let elapsed = t.elapsed();
        let in_budget = c.budget.map_or(true, |b| elapsed <= b);
        let budget = c.budget.map_or("no budget".to_string(), |b| format!("budget {}s", b.as_secs()));
        match result {
            Ok(checks) => {
                let pass = in_budget && checks.iter().all(|x| x.pass);
                failed += usize::from(!pass);
                println!("{} {:2} {} ({:.1}s, {})", if pass { "PASS" } else { "FAIL" }, i + 1, c.name, elapsed.as_secs_f64(), budget);
                for x in &checks {
                    println!("       {} {}: {}", if x.pass { "ok  " } else { "FAIL" }, x.name, x.summary);
                }
            }
            Err(e) => {
                failed += 1;
                println!("FAIL {:2} {} ({:.1}s, {}): error {}", i + 1, c.name, elapsed.as_secs_f64(), budget, e);
            }
        }
    }
    println!("acceptance: {} of {} passed", ran - failed, ran);
    if failed > 0 {
        std::process::exit(1);
    }
}
