//! Drive a scenario from config text, then re-check the written run directory.
//!
//! ```text
//! cargo run --example run_config
//! ```

use semiwave::driver::config::RawConfig;
use semiwave::driver::{check_run_dir, run_scenario, Scenario};

const CONFIG: &str = "\
[scenario]
name = example
d_hat0 = -0.3

[physical]
dr = 2e-3
probes = 5
";

fn main() -> semiwave::Result<()> {
    let scn = Scenario::from_raw(&RawConfig::parse(CONFIG)?)?;
    let out = std::env::temp_dir().join("semiwave-example");
    let m = run_scenario(&scn, &out)?;
    for c in &m.checks {
        println!("{:<24} {:<5} {:.4e}  ({})", c.name, if c.pass { "pass" } else { "FAIL" }, c.value, c.limit);
    }
    println!("outputs in {}: {:?}", out.display(), m.outputs);
    let rep = check_run_dir(&out)?;
    println!("re-check from CSV: {}", if rep.pass { "pass" } else { "fail" });
    Ok(())
}
