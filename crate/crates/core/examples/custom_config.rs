//! Drives an experiment from TOML text, as the binary does with `--config`.

use grovermin::cli::{run, Report, RunConfig};

const CONFIG: &str = r#"
experiment = "gp"
objective = "goldstein-price"
seed = 5
runs = 3

[[layout]]
name = "x1"
qubits = 4
lo = -2.0
hi = 2.0

[[layout]]
name = "x2"
qubits = 4
lo = -2.0
hi = 2.0

[search]
schedule = "baritompa"
marking = "below"
stall_window = 12
"#;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let config = RunConfig::parse(CONFIG)?;
    let output = run(&config)?;
    print!("{}", output.stdout);
    if let Report::Search(runs) = &output.report {
        for (i, r) in runs.iter().enumerate() {
            println!(
                "run {i}: {} in {} rounds ({:?})",
                r.best_value,
                r.trace.num_rounds(),
                r.stop_reason
            );
        }
    }
    // A typo is reported with its line.
    let err = RunConfig::parse(&CONFIG.replace("stall_window", "stall_windw")).unwrap_err();
    println!("{err}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
