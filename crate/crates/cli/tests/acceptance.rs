//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use freeutil::verify::{run_suite, Suite, SuiteReport, VerifyOptions};

struct Criterion {
    number: u32,
    title: &'static str,
    suites: &'static [Suite],
}

const CRITERIA: [Criterion; 9] = [
    Criterion { number: 1, title: "conjugation round trip", suites: &[Suite::ConjugacyRoundTrip] },
    Criterion { number: 2, title: "variational principle", suites: &[Suite::VariationalPrinciple] },
    Criterion { number: 3, title: "control closed form", suites: &[Suite::ControlClosedForm] },
    Criterion {
        number: 4,
        title: "intervention semantics",
        suites: &[Suite::InterventionInvariance, Suite::InterventionRegression],
    },
    Criterion { number: 5, title: "gvp oracle equivalence", suites: &[Suite::GvpOracle] },
    Criterion { number: 6, title: "dp limit", suites: &[Suite::DpLimit] },
    Criterion { number: 7, title: "temperature limits", suites: &[Suite::TemperatureLimits] },
    Criterion {
        number: 8,
        title: "adaptive estimation",
        suites: &[Suite::PredictiveBatch, Suite::PosteriorMartingale],
    },
    Criterion {
        number: 9,
        title: "bayesian control rule",
        suites: &[Suite::BcrConcentration, Suite::BcrRegret],
    },
];

fn describe(r: &SuiteReport) -> String {
    let cmp = if r.suite.strict() { "<" } else { "<=" };
    format!(
        "{} {:.3e} {cmp} {:.1e} ({:.0} ms)",
        r.suite.name(),
        r.max_violation,
        r.tolerance,
        r.runtime.as_secs_f64() * 1e3
    )
}

fn reproducibility() -> Result<String, String> {
    let bin = env!("CARGO_BIN_EXE_freeutil");
    let start = Instant::now();
    let verify = Command::new(bin).arg("verify").output().map_err(|e| e.to_string())?;
    if verify.status.code() != Some(0) {
        return Err(format!(
            "verify exited with {:?}: {}",
            verify.status.code(),
            String::from_utf8_lossy(&verify.stderr)
        ));
    }
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut checked = Vec::new();
    for (sub, name) in [
        ("solve-control", "control_sweep"),
        ("estimate", "estimate"),
        ("bcr", "bandit_bcr"),
        ("bcr", "mdp_bcr"),
        ("gvp", "gvp_latent"),
    ] {
        let path = configs.join(format!("{name}.toml"));
        let once = || Command::new(bin).args([sub, "--config"]).arg(&path).output().map_err(|e| e.to_string());
        let (a, b) = (once()?, once()?);
        if !a.status.success() || !b.status.success() {
            return Err(format!("{name}: {}", String::from_utf8_lossy(&a.stderr)));
        }
        if a.stdout.is_empty() || a.stdout != b.stdout {
            return Err(format!("{name}: CSV differs between runs"));
        }
        checked.push(name);
    }
    Ok(format!(
        "verify exit 0; identical CSV on rerun of {} ({:.0} ms)",
        checked.join(", "),
        start.elapsed().as_secs_f64() * 1e3
    ))
}

fn main() -> ExitCode {
    let options = VerifyOptions::default();
    let mut failures = 0;
    for c in &CRITERIA {
        let reports: Result<Vec<SuiteReport>, _> = c.suites.iter().map(|&s| run_suite(s, &options)).collect();
        let (ok, detail) = match reports {
            Ok(rs) => (rs.iter().all(SuiteReport::passed), rs.iter().map(describe).collect::<Vec<_>>().join("; ")),
            Err(e) => (false, format!("error: {e}")),
        };
        failures += usize::from(!ok);
        println!("criterion {}: {} {}: {detail}", c.number, if ok { "PASS" } else { "FAIL" }, c.title);
    }
    let (ok, detail) = match reproducibility() {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    failures += usize::from(!ok);
    println!("criterion 10: {} reproducibility: {detail}", if ok { "PASS" } else { "FAIL" });
    println!("acceptance: {} of 10 criteria passed", 10 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
