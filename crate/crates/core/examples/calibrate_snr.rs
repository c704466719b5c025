//! Sweeps the signal-to-noise weight of one event-related potential task and prints
//! one cross-validated accuracy per method and weight.
//!
//! cargo run --release --example calibrate_snr -- classical_fixed 1.5,2.2,3 2500 hybrid,time

use cxnet::harness::{generate_task, run_method, CvPlan, Method, RunSettings, SimSettings, Task};
use std::time::Instant;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.len() < 2 {
        eprintln!("usage: calibrate_snr <task> <snr,...> [per_class=2500] [methods=hybrid,time] [patience=10]");
        std::process::exit(2);
    }
    let task: Task = args[0].parse()?;
    let weights = args[1].split(',').map(str::parse).collect::<Result<Vec<f64>, _>>()?;
    let per_class = args.get(2).map_or(Ok(2500), |s| s.parse())?;
    let methods = args
        .get(3)
        .map_or("hybrid,time", String::as_str)
        .split(',')
        .map(str::parse)
        .collect::<Result<Vec<Method>, _>>()?;
    let patience = args.get(4).map_or("10", String::as_str);
    let settings = RunSettings {
        plan: CvPlan { k: 5, repeats: 1, seed: 3 },
        model_overrides: vec![("patience".into(), patience.into())],
        ..RunSettings::default()
    };
    println!("task,snr,method,mean,std,seconds");
    for snr in weights {
        let sim = SimSettings {
            per_class: Some(per_class),
            snr: Some(snr),
            ..SimSettings::default()
        };
        let data = generate_task(task, &sim, 1)?;
        for &method in &methods {
            let start = Instant::now();
            let r = run_method(task.name(), &data, method, &settings)?;
            println!("{task},{snr},{method},{:.4},{:.4},{:.1}", r.mean, r.std, start.elapsed().as_secs_f64());
        }
    }
    Ok(())
}
