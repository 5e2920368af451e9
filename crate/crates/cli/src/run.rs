use std::fmt;
use std::fs;
use std::io::Write;
use std::str::FromStr;

use anyhow::{anyhow, Context};
use sha2::{Digest, Sha256};

use reccoord::billing::{individual_benefits, summarize, ModeResult};
use reccoord::decentral::{run_ecflexit, EcflexitOptions, Variant};
use reccoord::devices::reference_violations;
use reccoord::lp::Backend;
use reccoord::planner::{solve_centralized_from, DayStart, ModelOptions, PlanOptions, PlannerMode};
use reccoord::reporting::{format_number, write_report, TraceRecord};
use reccoord::scenario::{generate_synthetic, load_scenario, Scenario, SyntheticConfig};

use crate::checkpoint::{self, Checkpoint};
use crate::{GenerateArgs, RunArgs};

pub enum RunError {
    /// Bad input, reported before anything is solved.
    Config(String),
    Failed(anyhow::Error),
}

impl From<anyhow::Error> for RunError {
    fn from(e: anyhow::Error) -> Self {
        RunError::Failed(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Central(PlannerMode),
    Iterative(Variant),
}

impl RunMode {
    pub fn name(self) -> &'static str {
        match self {
            RunMode::Central(m) => m.name(),
            RunMode::Iterative(v) => v.mode_name(),
        }
    }
}

impl fmt::Display for RunMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RunMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ecflexit" => Ok(RunMode::Iterative(Variant::Plain)),
            "ecflexitprimed" | "ecflexit'" => Ok(RunMode::Iterative(Variant::Primed)),
            other => other.parse().map(RunMode::Central).map_err(|_| {
                format!("unknown mode `{other}` (expected solofix, soloflex, ecfix, ecflex, ecflexit or ecflexitprimed)")
            }),
        }
    }
}

fn steps_for_dt(dt: f64) -> Result<usize, RunError> {
    let steps = (24.0 / dt).round();
    if !(dt > 0.0) || steps < 1.0 || (steps * dt - 24.0).abs() > 1e-9 {
        return Err(RunError::Config(format!("--dt {dt} does not divide a day into whole steps")));
    }
    Ok(steps as usize)
}

fn generator_config(overrides: &str, days: Option<usize>, dt: Option<f64>) -> Result<SyntheticConfig, RunError> {
    let mut cfg = SyntheticConfig::default();
    cfg.apply_overrides(overrides).map_err(|e| RunError::Config(e.to_string()))?;
    if let Some(d) = days {
        cfg.num_days = d;
    }
    if let Some(dt) = dt {
        cfg.steps_per_day = steps_for_dt(dt)?;
    }
    Ok(cfg)
}

fn load_input(args: &RunArgs) -> Result<Scenario, RunError> {
    let s = match (&args.scenario, &args.generate) {
        (Some(path), _) => {
            let bytes = fs::read(path).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
            let s = load_scenario(&bytes).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
            if let Some(dt) = args.dt {
                if (dt - s.horizon.dt_hours).abs() > 1e-9 {
                    return Err(RunError::Config(format!(
                        "--dt {dt} differs from the scenario timestep {}",
                        s.horizon.dt_hours
                    )));
                }
            }
            match args.days {
                Some(d) => s.first_days(d).map_err(|e| RunError::Config(e.to_string()))?,
                None => s,
            }
        }
        (None, Some(overrides)) => {
            let cfg = generator_config(overrides, args.days, args.dt)?;
            generate_synthetic(&cfg, args.seed).map_err(|e| RunError::Config(e.to_string()))?
        }
        (None, None) => return Err(RunError::Config("one of --scenario or --generate is required".into())),
    };
    let bad = reference_violations(&s);
    if let Some(v) = bad.first() {
        return Err(RunError::Config(format!("reference profiles are infeasible: {v} ({} issue(s))", bad.len())));
    }
    Ok(s)
}

fn fingerprint(s: &Scenario, mode: RunMode, args: &RunArgs, backend: Backend) -> String {
    let mut h = Sha256::new();
    h.update(s.to_json().as_bytes());
    h.update(
        format!(
            "|{mode}|{:?}|{}|{}|{}",
            args.key.map(|k| k.name()),
            args.allow_curtailment,
            args.max_iters,
            backend.name()
        )
        .as_bytes(),
    );
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

struct ModeOutput {
    result: ModeResult,
    traces: Vec<TraceRecord>,
}

fn run_mode(s: &Scenario, mode: RunMode, args: &RunArgs, opts: PlanOptions) -> anyhow::Result<ModeOutput> {
    let path = checkpoint::path(&args.out, mode.name());
    let print = fingerprint(s, mode, args, opts.backend);
    let mut state = match (args.fresh, checkpoint::load(&path, &print)) {
        (false, Some(c)) => {
            log::info!("{mode}: resuming after {} day(s)", c.days.len());
            c
        }
        _ => Checkpoint { fingerprint: print, days: Vec::new(), traces: Vec::new(), next_start: DayStart::initial(s) },
    };
    let iter_opts = EcflexitOptions { max_iters: args.max_iters, member_order: None, plan: opts };

    for day in state.days.len()..s.horizon.num_days {
        let start = state.next_start.clone();
        let sched = match mode {
            RunMode::Central(m) => solve_centralized_from(s, day, m, &start, opts)?,
            RunMode::Iterative(v) => {
                let key = args.key.ok_or_else(|| anyhow!("{mode} needs --key"))?;
                let (sched, traces) = run_ecflexit(s, day, key, v, &start, &iter_opts)?;
                log::info!("{mode} day {day}: {} iteration(s)", traces.len());
                state.traces.extend(traces);
                sched
            }
        };
        log::info!("{mode} day {day}: objective {}", format_number(sched.objective));
        state.next_start = sched.end_state(&start);
        state.days.push(sched);
        checkpoint::save(&path, &state)?;
    }

    let traces = state.traces.into_iter().map(|trace| TraceRecord { mode: mode.name().to_string(), trace }).collect();
    Ok(ModeOutput { result: ModeResult { mode: mode.name().to_string(), days: state.days }, traces })
}

pub fn run(args: &RunArgs) -> Result<(), RunError> {
    let mut modes: Vec<RunMode> = Vec::new();
    for m in &args.modes {
        if !modes.contains(m) {
            modes.push(*m);
        }
    }
    if args.key.is_none() && modes.iter().any(|m| matches!(m, RunMode::Iterative(_))) {
        return Err(RunError::Config("the iterative modes require --key (equal, prorate or cascade)".into()));
    }
    if args.max_iters == 0 {
        return Err(RunError::Config("--max-iters must be positive".into()));
    }
    let backend = Backend::from_env().map_err(RunError::Config)?;
    let s = load_input(args)?;
    let opts = PlanOptions { model: ModelOptions { allow_curtailment: args.allow_curtailment }, backend };

    // Modes are independent; days within a mode run in order.
    let outputs: Vec<anyhow::Result<ModeOutput>> = std::thread::scope(|scope| {
        let s = &s;
        let handles: Vec<_> = modes.iter().map(|&m| scope.spawn(move || run_mode(s, m, args, opts))).collect();
        handles.into_iter().map(|h| h.join().unwrap_or_else(|_| Err(anyhow!("worker thread panicked")))).collect()
    });
    let mut results = Vec::with_capacity(outputs.len());
    let mut traces = Vec::new();
    for (mode, out) in modes.iter().zip(outputs) {
        let out = out.with_context(|| format!("mode {mode}"))?;
        results.push(out.result);
        traces.extend(out.traces);
    }

    let report = summarize(&results);
    let baseline = if modes.contains(&RunMode::Central(PlannerMode::SoloFix)) { "SoloFix" } else { modes[0].name() };
    let benefits = individual_benefits(&results, baseline).map_err(|e| RunError::Failed(e.into()))?;
    if !args.trace {
        traces.clear();
    }
    let files = write_report(&report, &benefits, &results, &traces, &args.out).map_err(|e| RunError::Failed(e.into()))?;

    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let summary = fs::read_to_string(&files.summary).with_context(|| files.summary.display().to_string())?;
    out.write_all(summary.as_bytes()).context("writing to stdout")?;
    writeln!(out, "report written to {}", args.out.display()).context("writing to stdout")?;
    Ok(())
}

pub fn generate(args: &GenerateArgs) -> Result<(), RunError> {
    let cfg = generator_config(&args.generate, args.days, args.dt)?;
    let s = generate_synthetic(&cfg, args.seed).map_err(|e| RunError::Config(e.to_string()))?;
    let mut json = if args.compact { serde_json::to_string(&s).context("serializing scenario")? } else { s.to_json() };
    json.push('\n');
    if args.out.as_os_str() == "-" {
        std::io::stdout().write_all(json.as_bytes()).context("writing to stdout")?;
    } else {
        fs::write(&args.out, json).with_context(|| format!("writing {}", args.out.display()))?;
    }
    Ok(())
}
