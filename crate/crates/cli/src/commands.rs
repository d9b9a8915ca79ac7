//! The four subcommands.
//!
//! Random streams are derived from the seed so that every table is a pure
//! function of the configuration: stream 0 draws data (or prior
//! realizations), stream `1 + k` drives chain `k`, and stream
//! `WEIGHT_STREAM + k` draws the posterior weights of chain `k`. Because the
//! weight streams are separate, `summarize` on the fit grid reproduces the
//! fit tables exactly.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use erlmix::ddp::{run_chain_ddp, DdpDraw};
use erlmix::diagnostics::{effective_sample_size, mean, quantile};
use erlmix::dp::{run_chain, DpDraw};
use erlmix::io::{load_csv, save_csv};
use erlmix::mcmc::MoveStats;
use erlmix::model::{Group, SurvivalDataset, WeightVector};
use erlmix::posterior::{
    ddp_weight_draws, default_grid, density_l1_distance, dp_weight_draws, effective_components,
    evaluate_curves_many, linear_grid, prior_realizations, summarize_curves,
    Curves, FunctionalKind, FunctionalSummary, GroupWeightPair,
};
use erlmix::presets::{prior_study, ModelPriors};
use erlmix::sim::{generate_instrumented, GeneratorSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{DataSource, RunConfig};
use crate::error::CliError;
use crate::output::{num, sha256_hex, write_json, write_manifest, Provenance, Table};

const WEIGHT_STREAM: u64 = 1 << 32;
const EFFECTIVE_THRESHOLD: f64 = 0.01;
const PRIOR_GRID_MAX: f64 = 20.0;

pub const SUMMARY_HEADER: [&str; 11] = [
    "group",
    "time",
    "density_mean",
    "density_lower",
    "density_upper",
    "survival_mean",
    "survival_lower",
    "survival_upper",
    "hazard_mean",
    "hazard_lower",
    "hazard_upper",
];

pub const CONTRAST_HEADER: [&str; 7] = [
    "time",
    "survival_diff_mean",
    "survival_diff_lower",
    "survival_diff_upper",
    "hazard_diff_mean",
    "hazard_diff_lower",
    "hazard_diff_upper",
];

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Output(format!("cannot create {}: {e}", dir.display())))
}

struct Simulated {
    data: SurvivalDataset,
    /// Per generator: realized kappa and censored fraction.
    kappas: Vec<Option<f64>>,
    censored: Vec<f64>,
}

fn simulate_data(specs: &[GeneratorSpec], seed: u64) -> Result<Simulated, CliError> {
    if specs.len() > 1 && specs.iter().any(|s| s.group.is_none()) {
        return Err(CliError::Config("multi-group generation needs group labels".into()));
    }
    let mut rng = stream_rng(seed, 0);
    let mut records = Vec::new();
    let mut kappas = Vec::new();
    let mut censored = Vec::new();
    for spec in specs {
        let g = generate_instrumented(spec, &mut rng)?;
        kappas.push(g.kappa);
        censored.push(g.data.censored_fraction());
        records.extend_from_slice(g.data.records());
    }
    Ok(Simulated {
        data: SurvivalDataset::new(records)?,
        kappas,
        censored,
    })
}

fn load_data(cfg: &RunConfig) -> Result<SurvivalDataset, CliError> {
    match cfg.data_source()? {
        DataSource::Csv(path) => load_csv(path).map_err(|e| match e {
            erlmix::Error::Io(io) => CliError::Data(format!("cannot read {}: {io}", path.display())),
            other => other.into(),
        }),
        DataSource::Generate(specs) => Ok(simulate_data(specs, cfg.seed)?.data),
    }
}

fn build_grid(cfg: &RunConfig, data: &SurvivalDataset) -> Result<Vec<f64>, CliError> {
    match cfg.grid.max {
        Some(max) => Ok(linear_grid(max, cfg.grid.points)),
        None => Ok(default_grid(data, cfg.grid.points)?),
    }
}

fn group_label(g: Option<Group>) -> &'static str {
    g.map_or("all", Group::label)
}

/// `simulate`: draw a dataset and write it with the generating curves.
pub fn simulate(cfg: &RunConfig) -> Result<(), CliError> {
    let DataSource::Generate(specs) = cfg.data_source()? else {
        return Err(CliError::Config("simulate needs a generator, not a CSV file".into()));
    };
    let sim = simulate_data(specs, cfg.seed)?;
    prepare_dir(&cfg.out)?;
    save_csv(&sim.data, cfg.out.join("data.csv"))?;

    let mut gen = Table::create(
        &cfg.out.join("generation.csv"),
        &["group", "n", "censoring_target", "kappa", "censored_fraction"],
    )?;
    for (i, s) in specs.iter().enumerate() {
        gen.row([
            group_label(s.group).to_string(),
            s.n.to_string(),
            s.censoring_target.map_or(String::new(), num),
            sim.kappas[i].map_or(String::new(), num),
            num(sim.censored[i]),
        ])?;
    }
    gen.finish()?;

    let grid = build_grid(cfg, &sim.data)?;
    let mut truth = Table::create(
        &cfg.out.join("truth.csv"),
        &["group", "time", "density", "survival", "hazard"],
    )?;
    for s in specs {
        for &t in &grid {
            truth.row([
                group_label(s.group).to_string(),
                num(t),
                num(s.mixture.pdf(t)),
                num(s.mixture.sf(t)),
                num(s.mixture.hazard(t)),
            ])?;
        }
    }
    truth.finish()?;

    let bytes = fs::read(cfg.out.join("data.csv"))?;
    write_manifest(
        &cfg.out,
        "simulate",
        cfg,
        Provenance {
            data_sha256: Some(&sha256_hex(&bytes)),
            ..Default::default()
        },
    )
}

/// Retained draws of one chain.
enum ChainDraws {
    Dp(Vec<DpDraw>),
    Ddp(Vec<DdpDraw>),
}

#[derive(Debug, Serialize, Deserialize)]
struct DrawLine<D> {
    chain: usize,
    draw: D,
}

/// Posterior weight draws of one chain, one list per group slot.
struct ChainWeights {
    slots: Vec<(Option<Group>, Vec<WeightVector>)>,
    pairs: Option<Vec<GroupWeightPair>>,
}

fn chain_weights(
    draws: &ChainDraws,
    priors: &ModelPriors,
    seed: u64,
    chain: usize,
) -> Result<ChainWeights, CliError> {
    let mut rng = stream_rng(seed, WEIGHT_STREAM + chain as u64);
    match (draws, priors) {
        (ChainDraws::Dp(d), ModelPriors::Dp(_)) => Ok(ChainWeights {
            slots: vec![(None, dp_weight_draws(d, &mut rng)?)],
            pairs: None,
        }),
        (ChainDraws::Ddp(d), ModelPriors::Ddp(hp)) => {
            let pairs = ddp_weight_draws(d, &hp.sigma, &mut rng)?;
            let slots = Group::BOTH
                .iter()
                .map(|&g| (Some(g), pairs.iter().map(|p| p.get(g).clone()).collect()))
                .collect();
            Ok(ChainWeights {
                slots,
                pairs: Some(pairs),
            })
        }
        _ => Err(CliError::Config("stored draws do not match the model in the manifest".into())),
    }
}

fn slot_curves(w: &ChainWeights, grid: &[f64]) -> Vec<Vec<Curves>> {
    w.slots
        .iter()
        .map(|(_, ws)| {
            let refs: Vec<&WeightVector> = ws.iter().collect();
            evaluate_curves_many(&refs, grid)
        })
        .collect()
}

fn summarize_slot(grid: &[f64], curves: &[Curves], level: f64) -> Result<Vec<FunctionalSummary>, CliError> {
    FunctionalKind::ALL
        .iter()
        .map(|&k| Ok(summarize_curves(grid, curves, k, level)?))
        .collect()
}

fn write_summary(
    path: &Path,
    slots: &[(Option<Group>, Vec<FunctionalSummary>)],
) -> Result<(), CliError> {
    let mut t = Table::create(path, &SUMMARY_HEADER)?;
    for (g, sums) in slots {
        for k in 0..sums[0].grid.len() {
            let mut row = vec![group_label(*g).to_string(), num(sums[0].grid[k])];
            for s in sums {
                row.extend([num(s.mean[k]), num(s.lower[k]), num(s.upper[k])]);
            }
            t.row(row)?;
        }
    }
    t.finish()
}

fn interval(values: &[f64], level: f64) -> (f64, f64, f64) {
    if values.iter().any(|v| v.is_nan()) {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let m = mean(values);
    if level == 0.0 {
        return (m, m, m);
    }
    (m, quantile(values, 0.5 - level / 2.0), quantile(values, 0.5 + level / 2.0))
}

fn write_contrasts(
    path: &Path,
    pairs: &[&GroupWeightPair],
    times: &[f64],
    level: f64,
) -> Result<(), CliError> {
    let evaluate = |g: Group| -> Vec<Curves> {
        let refs: Vec<&WeightVector> = pairs.iter().map(|p| p.get(g)).collect();
        evaluate_curves_many(&refs, times)
    };
    let (c, t) = (evaluate(Group::Control), evaluate(Group::Treatment));
    let mut out = Table::create(path, &CONTRAST_HEADER)?;
    for (k, &time) in times.iter().enumerate() {
        let sd: Vec<f64> = c.iter().zip(&t).map(|(c, t)| t.survival[k] - c.survival[k]).collect();
        let hd: Vec<f64> = c.iter().zip(&t).map(|(c, t)| t.hazard[k] - c.hazard[k]).collect();
        let (sm, sl, su) = interval(&sd, level);
        let (hm, hl, hu) = interval(&hd, level);
        out.row([num(time), num(sm), num(sl), num(su), num(hm), num(hl), num(hu)])?;
    }
    out.finish()
}

/// Writes the pooled summary (and per-chain summaries when there are
/// several chains) and returns the posterior-mean effective component
/// count per group slot and chain.
fn write_posterior_tables(
    dir: &Path,
    cfg: &RunConfig,
    grid: &[f64],
    weights: &[&ChainWeights],
    curves: Vec<Vec<Vec<Curves>>>,
) -> Result<Vec<Vec<f64>>, CliError> {
    let n_slots = weights[0].slots.len();
    if weights.len() > 1 {
        for (k, c) in curves.iter().enumerate() {
            let chain_dir = dir.join(format!("chain_{k}"));
            prepare_dir(&chain_dir)?;
            let slots = (0..n_slots)
                .map(|s| Ok((weights[k].slots[s].0, summarize_slot(grid, &c[s], cfg.level)?)))
                .collect::<Result<Vec<_>, CliError>>()?;
            write_summary(&chain_dir.join("summary.csv"), &slots)?;
        }
    }

    let mut pooled: Vec<Vec<Curves>> = vec![Vec::new(); n_slots];
    for chain in curves {
        for (s, c) in chain.into_iter().enumerate() {
            pooled[s].extend(c);
        }
    }
    let slots = (0..n_slots)
        .map(|s| Ok((weights[0].slots[s].0, summarize_slot(grid, &pooled[s], cfg.level)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    write_summary(&dir.join("summary.csv"), &slots)?;

    if let Some(first) = &weights[0].pairs {
        let mut all: Vec<&GroupWeightPair> = first.iter().collect();
        for w in &weights[1..] {
            all.extend(w.pairs.as_deref().unwrap_or_default());
        }
        let times = if cfg.contrast_times.is_empty() {
            grid
        } else {
            &cfg.contrast_times[..]
        };
        write_contrasts(&dir.join("contrasts.csv"), &all, times, cfg.level)?;
    }

    Ok(weights
        .iter()
        .map(|w| {
            w.slots
                .iter()
                .map(|(_, ws)| {
                    let counts: Vec<f64> = ws
                        .iter()
                        .map(|w| effective_components(w, EFFECTIVE_THRESHOLD) as f64)
                        .collect();
                    mean(&counts)
                })
                .collect()
        })
        .collect())
}

struct ChainOutput {
    draws: ChainDraws,
    moves: Vec<(&'static str, MoveStats)>,
    weights: ChainWeights,
    curves: Vec<Vec<Curves>>,
    seconds: f64,
}

fn run_one_chain(
    data: &SurvivalDataset,
    cfg: &RunConfig,
    priors: &ModelPriors,
    grid: &[f64],
    chain: usize,
) -> Result<ChainOutput, CliError> {
    let start = Instant::now();
    let mut rng = stream_rng(cfg.seed, 1 + chain as u64);
    let (draws, moves) = match priors {
        ModelPriors::Dp(hp) => {
            let run = run_chain(data, hp, &cfg.schedule, &mut rng)?;
            (
                ChainDraws::Dp(run.draws),
                vec![("theta", run.stats.theta), ("joint", run.stats.joint)],
            )
        }
        ModelPriors::Ddp(hp) => {
            let run = run_chain_ddp(data, hp, &cfg.schedule, &mut rng)?;
            (ChainDraws::Ddp(run.draws), vec![("theta_pair", run.stats.theta)])
        }
    };
    let weights = chain_weights(&draws, priors, cfg.seed, chain)?;
    let curves = slot_curves(&weights, grid);
    log::info!("chain {chain} finished in {:.1} s", start.elapsed().as_secs_f64());
    Ok(ChainOutput {
        draws,
        moves,
        weights,
        curves,
        seconds: start.elapsed().as_secs_f64(),
    })
}

fn write_traces(path: &Path, chains: &[ChainOutput]) -> Result<(), CliError> {
    let header: &[&str] = match chains[0].draws {
        ChainDraws::Dp(_) => &["chain", "iteration", "theta", "m", "alpha", "zeta", "clusters"],
        ChainDraws::Ddp(_) => &[
            "chain", "iteration", "theta_C", "theta_T", "m_C", "m_T", "alpha", "mu_C", "mu_T",
            "clusters",
        ],
    };
    let mut t = Table::create(path, header)?;
    for (k, c) in chains.iter().enumerate() {
        match &c.draws {
            ChainDraws::Dp(ds) => {
                for d in ds {
                    t.row([
                        k.to_string(),
                        d.iteration.to_string(),
                        num(d.theta),
                        d.m.to_string(),
                        num(d.alpha),
                        num(d.zeta),
                        d.clusters.atoms.len().to_string(),
                    ])?;
                }
            }
            ChainDraws::Ddp(ds) => {
                for d in ds {
                    t.row([
                        k.to_string(),
                        d.iteration.to_string(),
                        num(d.theta[0]),
                        num(d.theta[1]),
                        d.m[0].to_string(),
                        d.m[1].to_string(),
                        num(d.alpha),
                        num(d.mu[0]),
                        num(d.mu[1]),
                        d.clusters.atoms.len().to_string(),
                    ])?;
                }
            }
        }
    }
    t.finish()
}

fn write_draws(path: &Path, chains: &[ChainOutput]) -> Result<(), CliError> {
    let mut f = BufWriter::new(fs::File::create(path)?);
    for (k, c) in chains.iter().enumerate() {
        match &c.draws {
            ChainDraws::Dp(ds) => {
                for d in ds {
                    serde_json::to_writer(&mut f, &DrawLine { chain: k, draw: d })?;
                    writeln!(f)?;
                }
            }
            ChainDraws::Ddp(ds) => {
                for d in ds {
                    serde_json::to_writer(&mut f, &DrawLine { chain: k, draw: d })?;
                    writeln!(f)?;
                }
            }
        }
    }
    f.flush()?;
    Ok(())
}

/// Theta series per group slot of one chain.
fn theta_series(draws: &ChainDraws) -> Vec<(Option<Group>, Vec<f64>)> {
    match draws {
        ChainDraws::Dp(ds) => vec![(None, ds.iter().map(|d| d.theta).collect())],
        ChainDraws::Ddp(ds) => Group::BOTH
            .iter()
            .map(|&g| (Some(g), ds.iter().map(|d| d.theta[g.index()]).collect()))
            .collect(),
    }
}

fn slot_suffix(g: Option<Group>) -> String {
    g.map_or(String::new(), |g| format!("_{}", g.label()))
}

fn write_diagnostics(
    path: &Path,
    chains: &[ChainOutput],
    effective: &[Vec<f64>],
) -> Result<(), CliError> {
    let mut t = Table::create(path, &["chain", "metric", "value"])?;
    let mut pooled_moves: Vec<(&str, MoveStats)> =
        chains[0].moves.iter().map(|(n, _)| (*n, MoveStats::default())).collect();
    let mut pooled_ess: Vec<f64> = vec![0.0; effective[0].len()];
    let mut pooled_theta: Vec<Vec<f64>> = vec![Vec::new(); effective[0].len()];
    let mut retained = 0usize;

    for (k, c) in chains.iter().enumerate() {
        let chain = k.to_string();
        for (i, (name, s)) in c.moves.iter().enumerate() {
            t.row([chain.clone(), format!("acceptance_{name}"), num(s.rate())])?;
            pooled_moves[i].1.proposed += s.proposed;
            pooled_moves[i].1.accepted += s.accepted;
        }
        for (i, (g, series)) in theta_series(&c.draws).into_iter().enumerate() {
            let sfx = slot_suffix(g);
            let ess = effective_sample_size(&series);
            t.row([chain.clone(), format!("ess_theta{sfx}"), num(ess)])?;
            t.row([chain.clone(), format!("posterior_mean_theta{sfx}"), num(mean(&series))])?;
            t.row([
                chain.clone(),
                format!("effective_components_mean{sfx}"),
                num(effective[k][i]),
            ])?;
            pooled_ess[i] += ess;
            pooled_theta[i].extend(series);
        }
        let n = c.weights.slots[0].1.len();
        retained += n;
        t.row([chain, "retained_draws".into(), n.to_string()])?;
    }

    for (name, s) in &pooled_moves {
        t.row(["pooled".into(), format!("acceptance_{name}"), num(s.rate())])?;
    }
    for (i, (g, _)) in chains[0].weights.slots.iter().enumerate() {
        let sfx = slot_suffix(*g);
        let eff: Vec<f64> = effective.iter().map(|e| e[i]).collect();
        t.row(["pooled".into(), format!("ess_theta{sfx}"), num(pooled_ess[i])])?;
        t.row(["pooled".into(), format!("posterior_mean_theta{sfx}"), num(mean(&pooled_theta[i]))])?;
        // Chains retain equal numbers of draws, so the pooled mean is the
        // mean of chain means.
        t.row(["pooled".into(), format!("effective_components_mean{sfx}"), num(mean(&eff))])?;
    }
    t.row(["pooled".into(), "retained_draws".into(), retained.to_string()])?;
    t.finish()
}

#[derive(Serialize)]
struct Timing {
    chain_seconds: Vec<f64>,
    total_seconds: f64,
}

/// `fit`: run the chains and write traces, summaries, contrasts and
/// diagnostics.
pub fn fit(cfg: &RunConfig) -> Result<(), CliError> {
    let start = Instant::now();
    let priors = cfg.priors()?;
    if let (ModelPriors::Dp(_), false) = (&priors, cfg.contrast_times.is_empty()) {
        return Err(CliError::Config("contrast times apply to the two-group model only".into()));
    }
    let data = load_data(cfg)?;
    let grid = build_grid(cfg, &data)?;
    prepare_dir(&cfg.out)?;
    save_csv(&data, cfg.out.join("data.csv"))?;

    let results: Vec<Result<ChainOutput, CliError>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..cfg.chains)
            .map(|k| {
                let (data, grid, priors) = (&data, &grid, &priors);
                s.spawn(move || run_one_chain(data, cfg, priors, grid, k))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("chain thread panicked"))
            .collect()
    });
    let mut chains = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    write_traces(&cfg.out.join("traces.csv"), &chains)?;
    write_draws(&cfg.out.join("draws.jsonl"), &chains)?;
    let curves = chains.iter_mut().map(|c| std::mem::take(&mut c.curves)).collect();
    let weights: Vec<&ChainWeights> = chains.iter().map(|c| &c.weights).collect();
    let effective = write_posterior_tables(&cfg.out, cfg, &grid, &weights, curves)?;
    write_diagnostics(&cfg.out.join("diagnostics.csv"), &chains, &effective)?;

    write_json(
        &cfg.out.join("timing.json"),
        &Timing {
            chain_seconds: chains.iter().map(|c| c.seconds).collect(),
            total_seconds: start.elapsed().as_secs_f64(),
        },
    )?;
    let bytes = fs::read(cfg.out.join("data.csv"))?;
    write_manifest(
        &cfg.out,
        "fit",
        cfg,
        Provenance {
            data_sha256: Some(&sha256_hex(&bytes)),
            ..Default::default()
        },
    )
}

#[derive(Deserialize)]
struct StoredManifest {
    config: RunConfig,
}

fn read_draws<D: for<'de> Deserialize<'de>>(path: &Path, chains: usize) -> Result<Vec<Vec<D>>, CliError> {
    let file = fs::File::open(path)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))?;
    let mut out: Vec<Vec<D>> = (0..chains).map(|_| Vec::new()).collect();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CliError::Data(e.to_string()))?;
        let d: DrawLine<D> = serde_json::from_str(&line)
            .map_err(|e| CliError::Data(format!("{} line {}: {e}", path.display(), i + 1)))?;
        out.get_mut(d.chain)
            .ok_or_else(|| CliError::Data(format!("draw for unknown chain {}", d.chain)))?
            .push(d.draw);
    }
    Ok(out)
}

/// What `summarize` may change relative to the stored fit.
#[derive(Debug, Clone, Default)]
pub struct SummarizeOverrides {
    pub seed: Option<u64>,
    pub grid_max: Option<f64>,
    pub grid_points: Option<usize>,
    pub level: Option<f64>,
    pub out: Option<std::path::PathBuf>,
}

/// `summarize`: recompute summary and contrast tables from stored draws.
pub fn summarize(from: &Path, ov: SummarizeOverrides) -> Result<(), CliError> {
    let manifest_bytes = fs::read(from.join("manifest.json"))
        .map_err(|e| CliError::Data(format!("cannot read manifest in {}: {e}", from.display())))?;
    let stored: StoredManifest = serde_json::from_slice(&manifest_bytes)
        .map_err(|e| CliError::Data(format!("invalid manifest: {e}")))?;
    let mut cfg = stored.config;
    if let Some(s) = ov.seed {
        cfg.seed = s;
    }
    if ov.grid_max.is_some() {
        cfg.grid.max = ov.grid_max;
    }
    if let Some(p) = ov.grid_points {
        cfg.grid.points = p;
    }
    if let Some(l) = ov.level {
        cfg.level = l;
    }
    cfg.out = ov.out.unwrap_or_else(|| from.join("summary"));
    if cfg.grid.points == 0 || !(0.0..1.0).contains(&cfg.level) {
        return Err(CliError::Config("invalid grid or credible level".into()));
    }
    let priors = cfg.priors()?;
    let data = load_csv(from.join("data.csv"))?;
    let grid = build_grid(&cfg, &data)?;

    let draws: Vec<ChainDraws> = match priors {
        ModelPriors::Dp(_) => read_draws::<DpDraw>(&from.join("draws.jsonl"), cfg.chains)?
            .into_iter()
            .map(ChainDraws::Dp)
            .collect(),
        ModelPriors::Ddp(_) => read_draws::<DdpDraw>(&from.join("draws.jsonl"), cfg.chains)?
            .into_iter()
            .map(ChainDraws::Ddp)
            .collect(),
    };
    if draws.iter().any(|d| match d {
        ChainDraws::Dp(v) => v.is_empty(),
        ChainDraws::Ddp(v) => v.is_empty(),
    }) {
        return Err(CliError::Data("stored draws are missing a chain".into()));
    }
    let weights = draws
        .iter()
        .enumerate()
        .map(|(k, d)| chain_weights(d, &priors, cfg.seed, k))
        .collect::<Result<Vec<_>, _>>()?;
    let curves = weights.iter().map(|w| slot_curves(w, &grid)).collect();
    let weights: Vec<&ChainWeights> = weights.iter().collect();
    prepare_dir(&cfg.out)?;
    write_posterior_tables(&cfg.out, &cfg, &grid, &weights, curves)?;
    write_manifest(
        &cfg.out,
        "summarize",
        &cfg,
        Provenance {
            source_manifest_sha256: Some(&sha256_hex(&manifest_bytes)),
            ..Default::default()
        },
    )
}

/// `prior-sim`: prior realizations of the weights and density at the
/// settings of a named study.
pub fn prior_sim(cfg: &RunConfig) -> Result<(), CliError> {
    let settings = prior_study(&cfg.prior_study)?;
    let grid = linear_grid(cfg.grid.max.unwrap_or(PRIOR_GRID_MAX), cfg.grid.points);
    let mut rng = stream_rng(cfg.seed, 0);
    prepare_dir(&cfg.out)?;

    let mut weights = Table::create(
        &cfg.out.join("prior_weights.csv"),
        &["setting", "realization", "component", "weight"],
    )?;
    let mut density = Table::create(
        &cfg.out.join("prior_density.csv"),
        &["setting", "realization", "time", "density", "base_density"],
    )?;
    let mut l1 = Table::create(
        &cfg.out.join("prior_l1.csv"),
        &["setting", "alpha", "zeta", "m", "theta", "mean_l1"],
    )?;
    for (s, set) in settings.iter().enumerate() {
        let base = |t: f64| (-t / set.zeta).exp() / set.zeta;
        let reals = prior_realizations(
            set.alpha,
            set.zeta,
            set.m,
            set.theta,
            cfg.realizations,
            &grid,
            &mut rng,
        )?;
        let upper = 12.0 * set.zeta + 2.0 * set.m as f64 * set.theta;
        let mut distances = Vec::with_capacity(reals.len());
        for (r, real) in reals.iter().enumerate() {
            for (j, w) in real.weights.omega().iter().enumerate() {
                weights.row([s.to_string(), r.to_string(), (j + 1).to_string(), num(*w)])?;
            }
            for (k, &t) in grid.iter().enumerate() {
                density.row([
                    s.to_string(),
                    r.to_string(),
                    num(t),
                    num(real.density[k]),
                    num(base(t)),
                ])?;
            }
            distances.push(density_l1_distance(&real.weights, base, upper));
        }
        l1.row([
            s.to_string(),
            num(set.alpha),
            num(set.zeta),
            set.m.to_string(),
            num(set.theta),
            num(mean(&distances)),
        ])?;
    }
    weights.finish()?;
    density.finish()?;
    l1.finish()?;
    write_manifest(&cfg.out, "prior-sim", cfg, Provenance::default())
}
