use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use boardsense_core::metering::{
    read_measurements_file, run_benchmark, time_call, write_measurements,
    write_measurements_file, BenchmarkPlan, EnergyMeter, Measurement,
};
use boardsense_core::pipeline::Pipeline;
use boardsense_core::recognizers::{recognize, RecognizerConfig};
use boardsense_core::report::{render_report, ReportTable};
use boardsense_core::simulation::{
    generate_dataset, generate_samples, read_dataset, write_dataset, GameGenConfig, GameRecord,
};
use boardsense_core::stats::median;
use boardsense_core::tracking::{RunStatus, Store};

use crate::{
    analysis, server, BenchArgs, Command, GenArgs, IngestArgs, MonitorArgs, ReportArgs, SimArgs,
    StatsArgs, EXIT_ALERT, EXIT_OK,
};

pub fn run(command: Command) -> Result<u8> {
    match command {
        Command::Gen(args) => gen(args),
        Command::Bench(args) => bench(args),
        Command::Stats(args) => stats(args),
        Command::Report(args) => report(args),
        Command::Ingest(args) => ingest(args),
        Command::Monitor(args) => monitor(args),
        Command::Serve(args) => server::serve(args),
    }
}

fn game_config(sim: &SimArgs) -> GameGenConfig {
    GameGenConfig {
        max_plies: sim.max_plies,
        capture_weight: sim.capture_weight,
        castle_weight: sim.castle_weight,
        seed: sim.seed,
    }
}

fn gen(args: GenArgs) -> Result<u8> {
    let games = generate_dataset(
        &game_config(&args.sim),
        &args.sim.noise.model(args.sim.seed),
        args.games,
    )?;
    write_dataset(&args.out, &games)
        .with_context(|| format!("writing {}", args.out.display()))?;
    let plies: usize = games.iter().map(|g| g.plies.len()).sum();
    println!("wrote {} games ({plies} plies) to {}", games.len(), args.out.display());
    Ok(EXIT_OK)
}

fn parse_meter(text: &str) -> Result<EnergyMeter> {
    let (kind, arg) = text.split_once(':').unwrap_or((text, ""));
    Ok(match kind {
        "synthetic" => {
            let watts: f64 = arg
                .parse()
                .with_context(|| format!("synthetic meter needs watts, got {arg:?}"))?;
            EnergyMeter::SyntheticConstant(watts)
        }
        "trace" if !arg.is_empty() => EnergyMeter::TraceFile(PathBuf::from(arg)),
        "rapl" if arg.is_empty() => {
            EnergyMeter::RaplFile(PathBuf::from("/sys/class/powercap/intel-rapl:0/energy_uj"))
        }
        "rapl" => EnergyMeter::RaplFile(PathBuf::from(arg)),
        _ => bail!("unknown meter {text:?}; use synthetic:<watts>, trace:<path> or rapl[:<path>]"),
    })
}

fn load_games(data: Option<&Path>, sim: &SimArgs, plies: usize) -> Result<Vec<GameRecord>> {
    match data {
        Some(dir) => read_dataset(dir).with_context(|| format!("reading {}", dir.display())),
        None => Ok(generate_samples(
            &game_config(sim),
            &sim.noise.model(sim.seed),
            plies,
        )?),
    }
}

fn bench(args: BenchArgs) -> Result<u8> {
    let meter = parse_meter(&args.meter)?;
    let games = load_games(args.data.as_deref(), &args.sim, args.samples)?;
    let configs: Vec<RecognizerConfig> = args
        .algorithms
        .iter()
        .map(|&a| RecognizerConfig::new(a).with_work(args.work))
        .collect();
    let plan = BenchmarkPlan {
        warmup_s: args.warmup,
        batch_s: args.batch,
        cooldown_s: args.cooldown,
        samples_target: args.samples,
        seed: args.sim.seed,
    };
    let store = Store::open(&args.store)?;
    let outcome = run_benchmark(&plan, &configs, &games, &meter, None)?;
    write_measurements_file(&args.out, &outcome.measurements)
        .with_context(|| format!("writing {}", args.out.display()))?;

    let status = if outcome.is_complete() {
        RunStatus::Finished
    } else {
        RunStatus::Failed
    };
    for alg in &args.algorithms {
        let rows: Vec<Measurement> = outcome
            .measurements
            .iter()
            .filter(|m| m.algorithm == *alg)
            .cloned()
            .collect();
        let mut params = BTreeMap::new();
        params.insert("algorithm".to_string(), alg.to_string());
        params.insert("samples".to_string(), args.samples.to_string());
        params.insert("seed".to_string(), args.sim.seed.to_string());
        params.insert("meter".to_string(), args.meter.clone());
        params.insert("work".to_string(), args.work.to_string());
        let noise = &args.sim.noise;
        params.insert("noise.bias".to_string(), noise.bias.to_string());
        params.insert("noise.spread".to_string(), noise.spread.to_string());
        params.insert("noise.clamp".to_string(), noise.clamp.to_string());
        params.insert("noise.concentration".to_string(), noise.concentration.to_string());
        if let Some(dir) = &args.data {
            params.insert("data".to_string(), dir.display().to_string());
        }
        let mut tags = BTreeMap::new();
        tags.insert("command".to_string(), "bench".to_string());
        let run = store.create_run(params, tags)?;
        if !rows.is_empty() {
            let med = |f: fn(&Measurement) -> f64| {
                median(&rows.iter().map(f).collect::<Vec<_>>()).unwrap_or(f64::NAN)
            };
            let accuracy = rows.iter().filter(|m| m.correct).count() as f64 / rows.len() as f64;
            let metrics = [
                ("accuracy", accuracy),
                ("median_square_accuracy", med(|m| m.square_accuracy)),
                ("median_latency_s", med(|m| m.latency_s)),
                ("median_energy_j", med(|m| m.energy_j)),
                ("median_invocations", med(|m| f64::from(m.invocations.total()))),
            ];
            for (key, value) in metrics {
                if value.is_finite() {
                    store.log_metric(&run.run_id, key, value, 0)?;
                }
            }
            let mut csv = Vec::new();
            write_measurements(&mut csv, &rows)?;
            store.log_artifact(&run.run_id, "measurements.csv", &csv)?;
        }
        store.finish_run(&run.run_id, status)?;
        println!("{alg}: {} measurements, run {}", rows.len(), run.run_id);
    }
    println!(
        "wrote {} measurements to {}",
        outcome.measurements.len(),
        args.out.display()
    );
    if let Some(reason) = outcome.aborted {
        bail!("benchmark aborted: {reason}; partial results kept");
    }
    Ok(EXIT_OK)
}

fn stats(args: StatsArgs) -> Result<u8> {
    let measurements = read_measurements_file(&args.measurements)
        .with_context(|| format!("reading {}", args.measurements.display()))?;
    if measurements.is_empty() {
        bail!("{} holds no measurements", args.measurements.display());
    }
    let report = analysis::analyze(&measurements, args.adjust);
    let json = serde_json::to_string_pretty(&report)?;
    match args.out {
        Some(path) => fs::write(&path, json + "\n")
            .with_context(|| format!("writing {}", path.display()))?,
        None => println!("{json}"),
    }
    Ok(EXIT_OK)
}

fn report(args: ReportArgs) -> Result<u8> {
    let measurements = read_measurements_file(&args.measurements)
        .with_context(|| format!("reading {}", args.measurements.display()))?;
    let table: ReportTable = render_report(&measurements, args.algorithms.as_deref())?;
    print!("{}", table.to_text());
    if let Some(path) = args.out {
        let file = fs::File::create(&path).with_context(|| format!("writing {}", path.display()))?;
        table.write_csv(file)?;
    }
    Ok(EXIT_OK)
}

fn ingest(args: IngestArgs) -> Result<u8> {
    let games = read_dataset(&args.data).with_context(|| format!("reading {}", args.data.display()))?;
    let mut pipeline = Pipeline::open(&args.pipeline)?;
    let config = RecognizerConfig::new(args.algorithm);
    let limit = args.samples.unwrap_or(usize::MAX);
    let mut recorded = 0;
    'games: for game in &games {
        if !pipeline.is_registered(&game.game_id) {
            pipeline.register_game(&game.game_id)?;
        }
        for s in game.samples() {
            if recorded == limit {
                break 'games;
            }
            let (prediction, latency) = time_call(|| recognize(&config, s.prev, s.observation));
            let mut prediction = prediction?;
            prediction.latency_s = latency;
            pipeline.record_inference(s.game_id, s.ply, &prediction, s.observation)?;
            recorded += 1;
        }
    }
    println!(
        "queued {recorded} predictions by {} in {}",
        args.algorithm,
        args.pipeline.display()
    );
    Ok(EXIT_OK)
}

fn monitor(args: MonitorArgs) -> Result<u8> {
    let pipeline = Pipeline::open(&args.pipeline)?;
    let status = pipeline.monitor_status(&args.monitor.config())?;
    println!("{}", serde_json::to_string_pretty(&status)?);
    Ok(if status.alert { EXIT_ALERT } else { EXIT_OK })
}
