use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use preypred::analysis::canard::{find_canard_m, CanardSearch};
use preypred::analysis::compare::{compare_processes, CompareConfig};
use preypred::analysis::cycle::CycleSearch;
use preypred::analysis::extinction::{ensemble_extinction, EnsembleConfig};
use preypred::analysis::funnel::{funnel_width, FunnelSearch};
use preypred::analysis::report::{comparison_csv, extinction_csv, funnel_csv, json_line, FunnelRow};
use preypred::diffusion::{simulate_diffusion, simulate_hybrid, DiffusionConfig};
use preypred::jump::{simulate_jump, JumpConfig};
use preypred::ode::simulate_ode;
use preypred::rng::member_seed;
use preypred::{Error, ModelParams, MortalitySchedule, RngStream, State, Trajectory};
use serde_json::json;

use crate::config::{Header, Integrator, Settings};
use crate::error::CliError;

pub const DEFAULT_HYBRID_THRESHOLD: u64 = 1000;

pub fn write_output(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display()))),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(format!("cannot write to standard output: {e}"))),
    }
}

/// `t,x,y,xi` rows; `xi` is empty once the prey is gone.
fn trajectory_rows(out: &mut String, params: &ModelParams, traj: &Trajectory, prefix: &str) {
    for s in &traj.samples {
        let xi = if s.x > 0.0 {
            (params.eps * s.x.ln()).to_string()
        } else {
            String::new()
        };
        let _ = writeln!(out, "{prefix}{},{},{},{xi}", s.t, s.x, s.y);
    }
}

fn footer(traj: &Trajectory) -> serde_json::Value {
    let end = traj.final_state();
    json!({
        "termination": traj.termination.as_str(),
        "t_end": end.t,
        "absorption": traj.absorption,
        "diagnostics": traj.diagnostics,
    })
}

/// Comment line holding a JSON record, so CSV readers skip it.
fn comment_record(value: &serde_json::Value) -> String {
    format!("# {}", json_line(value))
}

fn run_trajectory(
    params: &ModelParams,
    integrator: Integrator,
    cfg: &DiffusionConfig,
    init: State,
    horizon: f64,
    stride: f64,
    seed: u64,
) -> Result<Trajectory, CliError> {
    let mut rng = RngStream::member(seed, 0);
    let traj = match integrator {
        Integrator::Ode => simulate_ode(params, init, horizon, cfg.dt, stride)?,
        Integrator::Diffusion => simulate_diffusion(params, cfg, init, horizon, stride, &mut rng)?,
        Integrator::Hybrid => simulate_hybrid(params, cfg, init, horizon, stride, &mut rng)?,
        Integrator::Jump => simulate_jump(params, &cfg.jump, init, horizon, stride, &mut rng)?,
    };
    Ok(traj)
}

fn diffusion_config(s: &Settings, integrator: Integrator) -> Result<DiffusionConfig, CliError> {
    let dt = s.positive_or("dt", preypred::diffusion::DEFAULT_DT)?;
    let threshold = match integrator {
        Integrator::Hybrid => Some(s.u64_opt("hybrid_threshold")?.unwrap_or(DEFAULT_HYBRID_THRESHOLD)),
        _ => None,
    };
    let cfg = DiffusionConfig {
        dt,
        hybrid_threshold: threshold,
        noiseless: false,
        jump: JumpConfig::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn simulate(s: &Settings) -> Result<String, CliError> {
    let params = s.params()?;
    let integrator = s.integrator_or(Integrator::Diffusion)?;
    let cfg = diffusion_config(s, integrator)?;
    let horizon = s.nonnegative_or("horizon", 100.0)?;
    let stride = s.positive_or("sample_stride", 0.01)?;
    let seed = s.u64_or("seed", 0)?;
    let init = s.init_or(2.0, 0.5)?;

    let mut h = Header::new("simulate", &params);
    h.push("integrator", integrator.name())
        .push("dt", cfg.dt)
        .push("horizon", horizon)
        .push("sample_stride", stride)
        .push("x0", init.x)
        .push("y0", init.y)
        .push("seed", seed)
        .push("run_seed", member_seed(seed, 0));
    if let Some(t) = cfg.hybrid_threshold {
        h.push("hybrid_threshold", t);
    }
    let traj = run_trajectory(&params, integrator, &cfg, init, horizon, stride, seed)?;
    let mut out = h.comment_line();
    out.push_str("t,x,y,xi\n");
    trajectory_rows(&mut out, &params, &traj, "");
    out.push_str(&comment_record(&footer(&traj)));
    Ok(out)
}

pub fn table1(s: &Settings) -> Result<String, CliError> {
    let params = s.params()?;
    let integrator = s.integrator_or(Integrator::Diffusion)?;
    if matches!(integrator, Integrator::Jump | Integrator::Ode) {
        return Err(CliError::Validation(
            "extinction tables use the diffusion or hybrid integrator".into(),
        ));
    }
    let cfg = EnsembleConfig {
        init: s.init_or(2.0, 0.5)?,
        horizon: s.nonnegative_or("horizon", 1000.0)?,
        diffusion: diffusion_config(s, integrator)?,
    };
    let omegas = s.list_or("omegas", &[1e5, 1e6, 1e7, 2e7])?;
    let n_runs = s.u64_or("n_runs", 200)?;
    if n_runs == 0 {
        return Err(CliError::Validation("`n_runs` must be at least 1".into()));
    }
    let seed = s.u64_or("seed", 0)?;

    let mut h = Header::new("table1", &params);
    h.push_list("omegas", &omegas)
        .push("n_runs", n_runs)
        .push("integrator", integrator.name())
        .push("dt", cfg.diffusion.dt)
        .push("horizon", cfg.horizon)
        .push("x0", cfg.init.x)
        .push("y0", cfg.init.y)
        .push("seed", seed)
        .push("run_seed", "seed^splitmix64(run)");
    if let Some(t) = cfg.diffusion.hybrid_threshold {
        h.push("hybrid_threshold", t);
    }
    let rows = omegas
        .iter()
        .map(|&w| ensemble_extinction(&params.with_omega(w), &cfg, n_runs, seed))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(h.comment_line() + &extinction_csv(&rows))
}

pub fn table2(s: &Settings) -> Result<String, CliError> {
    let params = s.params()?;
    let omegas = s.list_or("omegas", &[1e9, 1e8, 1e7, 1e6])?;
    let mut opts = FunnelSearch::default();
    let dt = s.positive_or("dt", opts.cycle.dt)?;
    opts.cycle.dt = dt;
    opts.safety.min_prey.dt = dt;

    let mut h = Header::new("table2", &params);
    h.push_list("omegas", &omegas)
        .push("dt", dt)
        .push("safety_individuals", preypred::analysis::funnel::SAFETY_INDIVIDUALS);
    let mut rows: Vec<FunnelRow> = Vec::new();
    for &w in &omegas {
        match funnel_width(&params, w, &opts) {
            Ok(r) => rows.push((w, Ok(r))),
            Err(Error::Domain(msg)) => {
                eprintln!("warning: omega = {w}: {msg}");
                rows.push((w, Err(msg)));
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(h.comment_line() + &funnel_csv(&rows))
}

pub fn canard(s: &Settings) -> Result<String, CliError> {
    let params = s.params()?;
    let lo = s.f64_or("m_lo", 0.6644)?;
    let hi = s.f64_or("m_hi", 0.6645)?;
    let dt = s.positive_or("dt", CycleSearch::default().dt)?;
    let opts = CanardSearch {
        cycle: CycleSearch { dt, ..Default::default() },
        ..Default::default()
    };
    let mut h = Header::new("canard", &params);
    h.push("m_lo", lo).push("m_hi", hi).push("dt", dt).push("width", opts.width);
    let c = find_canard_m(&params, (lo, hi), &opts)?;
    let mut out = json_line(&h.json());
    for (i, step) in c.history.iter().enumerate() {
        out.push_str(&json_line(&json!({ "step": i + 1, "bracket": step })));
    }
    out.push_str(&json_line(&json!({ "m_star": c.m_star, "lo": c.lo, "hi": c.hi })));
    Ok(out)
}

pub fn compare(s: &Settings) -> Result<String, CliError> {
    let params = s.params()?;
    let omegas = s.list_or("omegas", &[1e4, 1e5])?;
    let cfg = CompareConfig {
        init: s.init_or(0.2, 0.6)?,
        horizon: s.nonnegative_or("horizon", 20.0)?,
        checkpoints: s.list_or("checkpoints", &[1.0, 5.0, 10.0])?,
        diffusion: diffusion_config(s, Integrator::Diffusion)?,
    };
    let n_runs = s.u64_or("n_runs", 10)?;
    let seed = s.u64_or("seed", 0)?;
    let mut h = Header::new("compare", &params);
    h.push_list("omegas", &omegas)
        .push("n_runs", n_runs)
        .push("dt", cfg.diffusion.dt)
        .push("horizon", cfg.horizon)
        .push_list("checkpoints", &cfg.checkpoints)
        .push("x0", cfg.init.x)
        .push("y0", cfg.init.y)
        .push("seed", seed);
    let list: Vec<ModelParams> = omegas.iter().map(|&w| params.with_omega(w)).collect();
    let rows = compare_processes(&list, n_runs, &cfg, seed)?;
    Ok(h.comment_line() + &comparison_csv(&rows))
}

/// Seasonal mortality used when the config does not set one.
pub fn default_seasonal() -> MortalitySchedule {
    MortalitySchedule::seasonal(0.6645, 0.047, 0.1)
}

pub fn seasonal(s: &Settings) -> Result<String, CliError> {
    let mut params = s.params()?;
    if !["m", "m_a0", "m_b0", "m_rate"].iter().any(|k| s.has(k)) {
        params = params.with_mortality(default_seasonal());
    }
    let omegas = s.list_or("omegas", &[1e12, 1e9, 1e8, 1e7])?;
    let cfg = diffusion_config(s, Integrator::Diffusion)?;
    let horizon = s.nonnegative_or("horizon", 200.0)?;
    let stride = s.positive_or("sample_stride", 0.1)?;
    let init = s.init_or(2.0, 0.5)?;
    let seed = s.u64_or("seed", 0)?;

    let mut h = Header::new("seasonal", &params);
    h.push_list("omegas", &omegas)
        .push("dt", cfg.dt)
        .push("horizon", horizon)
        .push("sample_stride", stride)
        .push("x0", init.x)
        .push("y0", init.y)
        .push("seed", seed)
        .push("run_seed", "seed^splitmix64(omega_index)");

    let mut out = h.comment_line();
    out.push_str("omega,integrator,t,x,y,xi\n");
    let mut footers = String::new();
    for (j, &w) in omegas.iter().enumerate() {
        let p = params.with_omega(w);
        p.validate()?;
        let ode = simulate_ode(&p, init, horizon, cfg.dt, stride)?;
        let mut rng = RngStream::member(seed, j as u64);
        let diff = simulate_diffusion(&p, &cfg, init, horizon, stride, &mut rng)?;
        trajectory_rows(&mut out, &p, &ode, &format!("{w},ode,"));
        trajectory_rows(&mut out, &p, &diff, &format!("{w},diffusion,"));
        let gap = ode
            .samples
            .iter()
            .zip(&diff.samples)
            .take_while(|(a, b)| a.t == b.t)
            .map(|(a, b)| (a.x - b.x).abs().max((a.y - b.y).abs()))
            .fold(0.0, f64::max);
        let mut record = footer(&diff);
        record["omega"] = json!(w);
        record["sup_gap_to_ode"] = json!(gap);
        footers.push_str(&comment_record(&record));
    }
    out.push_str(&footers);
    Ok(out)
}
