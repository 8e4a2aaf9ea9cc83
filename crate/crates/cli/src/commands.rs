use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context};
use serde::Serialize;
use stochpack::engine::{theory_params, Momentum};
use stochpack::model::io::GeneratorSpec;
use stochpack::model::{ExplicitScenarioTree, Instance};
use stochpack::oracle::{
    eval_policy_mc, solve_lp_explicit, solve_pack_dp, solve_pen_lp, trace_episode, AuditMode, EvalReport, McOptions,
    PolicyFactory,
};
use stochpack::policies::{IsPolicy, LpPolicy, MmoGreedyPolicy, NrmPolicy, PenSource, Policy};

use crate::config::{check_compatible, read_json, ExperimentConfig, GenConfig, LoadedInstance, PolicyName, CONFIG_SCHEMA_VERSION};
use crate::Failure;

pub const CSV_HEADER: [&str; 9] =
    ["instance", "policy", "group", "episodes", "mean_reward", "std_error", "violations", "fractional_outputs", "sim_calls"];

/// Where results go: a file, or stdout when no path is set.
fn sink(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(std::io::stdout().lock()),
    })
}

pub fn gen(config: &Path, seed: Option<u64>, out: Option<&Path>) -> anyhow::Result<()> {
    let mut c: GenConfig = read_json(config)?;
    if c.schema_version != CONFIG_SCHEMA_VERSION {
        bail!("unsupported config schema_version {}", c.schema_version);
    }
    if let Some(s) = seed {
        match &mut c.generator {
            GeneratorSpec::Nrm(p) => p.seed = s,
            GeneratorSpec::RandomTree(p) => p.seed = s,
            _ => bail!("--seed only applies to the nrm and random_tree generators"),
        }
    }
    let inst = Instance::from_generator(&c.generator, c.explicit)?.with_structure(c.structure);
    let file = inst.to_file(Some(&c.generator))?;
    let out = out.map(Path::to_path_buf).or(c.output.map(|o| config.parent().unwrap_or(Path::new(".")).join(o)));
    let mut w = sink(out.as_deref())?;
    writeln!(w, "{}", serde_json::to_string_pretty(&file)?)?;
    Ok(())
}

#[derive(Serialize)]
struct ParamsRow {
    momentum: &'static str,
    epsilon: f64,
    #[serde(rename = "L")]
    l: usize,
    iota: f64,
    #[serde(rename = "T")]
    horizon: usize,
    theta: f64,
    #[serde(rename = "U")]
    u: usize,
    #[serde(rename = "W")]
    w: usize,
    alpha: f64,
    alpha_exact: String,
    #[serde(rename = "K")]
    k: u64,
    eta1: u64,
    eta2: u64,
}

#[allow(clippy::too_many_arguments)]
pub fn params(
    momentum: Option<Momentum>,
    epsilon: f64,
    l: usize,
    iota: f64,
    horizon: usize,
    theta: Option<f64>,
    u: usize,
    w: usize,
    out: Option<&Path>,
) -> anyhow::Result<()> {
    let theta = theta.unwrap_or(horizon as f64);
    let modes = match momentum {
        Some(m) => vec![m],
        None => vec![Momentum::Unaccelerated, Momentum::Accelerated],
    };
    let mut csv = csv::Writer::from_writer(sink(out)?);
    for mode in modes {
        let p = theory_params(mode, epsilon, l, iota, theta, horizon, u, w)?;
        csv.serialize(ParamsRow {
            momentum: match mode {
                Momentum::Unaccelerated => "unaccelerated",
                Momentum::Accelerated => "accelerated",
            },
            epsilon,
            l,
            iota,
            horizon,
            theta,
            u,
            w,
            alpha: p.alpha,
            alpha_exact: p.alpha_exact,
            k: p.k,
            eta1: p.eta1,
            eta2: p.eta2,
        })?;
    }
    csv.flush()?;
    Ok(())
}

fn factory<'a>(
    policy: PolicyName,
    li: &'a LoadedInstance,
    c: &'a ExperimentConfig,
) -> anyhow::Result<Box<PolicyFactory<'a>>> {
    check_compatible(policy, li, c.delta)?;
    let base = c.solver.build(&li.inst, 0)?;
    let spec = li.inst.spec.clone();
    let delta = c.delta.or(li.delta()).unwrap_or(1);
    Ok(match policy {
        PolicyName::Lp => Box::new(move |s| Ok(Box::new(LpPolicy::new(PenSource::new(base.with_seed(s)))) as Box<dyn Policy>)),
        PolicyName::Nrm => Box::new(move |s| Ok(Box::new(NrmPolicy::new(PenSource::new(base.with_seed(s)))) as Box<dyn Policy>)),
        PolicyName::Is => {
            let sides = li.inst.sides.clone().unwrap_or_default();
            Box::new(move |s| Ok(Box::new(IsPolicy::new(PenSource::new(base.with_seed(s)), sides.clone())) as Box<dyn Policy>))
        }
        PolicyName::Mwmlp => {
            Box::new(move |s| Ok(Box::new(LpPolicy::matching(&base.with_seed(s), delta, &spec)?) as Box<dyn Policy>))
        }
        PolicyName::MmoGreedy => Box::new(move |s| {
            Ok(Box::new(MmoGreedyPolicy::new(PenSource::for_matching(&base.with_seed(s), delta, &spec)?)) as Box<dyn Policy>)
        }),
    })
}

/// Format a float so that equal values always print identically.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn csv_rows(name: &str, policy: PolicyName, r: &EvalReport) -> Vec<[String; 9]> {
    let mut rows: Vec<[String; 9]> = r
        .group_summaries
        .iter()
        .map(|g| {
            [
                name.to_string(),
                policy.as_str().to_string(),
                g.group.to_string(),
                g.episodes.to_string(),
                num(g.mean_reward),
                num(g.std_error),
                g.violation_count.to_string(),
                g.fractional_outputs.to_string(),
                g.sim_calls.to_string(),
            ]
        })
        .collect();
    rows.push([
        name.to_string(),
        policy.as_str().to_string(),
        "all".to_string(),
        r.episodes.to_string(),
        num(r.mean_reward),
        num(r.std_error),
        r.violation_count.to_string(),
        r.fractional_outputs.to_string(),
        r.solver.sim_calls.to_string(),
    ]);
    rows
}

/// Traces of the first episode of every replicate group, as JSON lines.
fn write_traces(
    w: &mut dyn Write,
    li: &LoadedInstance,
    policy: PolicyName,
    f: &PolicyFactory<'_>,
    c: &ExperimentConfig,
) -> anyhow::Result<()> {
    for j in (0..c.episodes).step_by(c.group_size) {
        for rec in trace_episode(li.inst.sim.as_ref(), f, c.seed, j, c.group_size)? {
            let mut v = serde_json::to_value(&rec)?;
            if let serde_json::Value::Object(o) = &mut v {
                o.insert("instance".into(), li.name.clone().into());
                o.insert("policy".into(), policy.as_str().into());
                o.insert("episode".into(), j.into());
            }
            writeln!(w, "{v}")?;
        }
    }
    Ok(())
}

fn load_config(path: &Path, seed: Option<u64>, episodes: Option<usize>) -> anyhow::Result<ExperimentConfig> {
    let mut c = ExperimentConfig::read(path)?;
    if let Some(s) = seed {
        c.seed = s;
    }
    if let Some(n) = episodes {
        if n == 0 {
            bail!("--episodes must be positive");
        }
        c.episodes = n;
    }
    Ok(c)
}

pub fn run(
    config: &Path,
    seed: Option<u64>,
    episodes: Option<usize>,
    out: Option<&Path>,
    trace: Option<&Path>,
) -> Result<(), Failure> {
    let c = load_config(config, seed, episodes)?;
    let instances = c.load_instances()?;
    // Validate every pair before spending time on any of them.
    let mut jobs = Vec::new();
    for li in &instances {
        for &p in &c.policies {
            jobs.push((li, p, factory(p, li, &c)?));
        }
    }
    let opts = McOptions { group_size: c.group_size, audit: AuditMode::Count };
    let out = out.map(Path::to_path_buf).or(c.output.clone());
    let mut csv = csv::Writer::from_writer(sink(out.as_deref())?);
    csv.write_record(CSV_HEADER).map_err(anyhow::Error::from)?;
    let mut traces = match trace {
        Some(p) => Some(std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => None,
    };
    let mut violating = Vec::new();
    for (li, p, f) in &jobs {
        let r = eval_policy_mc(li.inst.sim.as_ref(), f.as_ref(), c.episodes, c.seed, &opts)
            .with_context(|| format!("{} on {}", p.as_str(), li.name))?;
        for row in csv_rows(&li.name, *p, &r) {
            csv.write_record(&row).map_err(anyhow::Error::from)?;
        }
        if let Some(w) = traces.as_mut() {
            write_traces(w, li, *p, f.as_ref(), &c)?;
        }
        if r.violation_count > 0 {
            violating.push(format!("{} on {}: {} episodes", p.as_str(), li.name, r.violation_count));
        }
    }
    csv.flush().map_err(anyhow::Error::from)?;
    if !violating.is_empty() {
        return Err(Failure::Audit(format!("budget violations: {}", violating.join("; "))));
    }
    Ok(())
}

#[derive(Serialize)]
struct VerifyReport {
    instance: String,
    policy: &'static str,
    opt_pack: f64,
    opt_pack_approximate: bool,
    opt_lp: f64,
    opt_pen: f64,
    /// The value the guarantee is stated against.
    benchmark: &'static str,
    mean_reward: f64,
    std_error: f64,
    ci95: [f64; 2],
    gap: f64,
    /// `εT` (`εn` for the graph policies).
    gap_budget: f64,
    gap_ok: bool,
    episodes: usize,
    violation_count: usize,
    max_violation: Vec<f64>,
    audit_ok: bool,
}

fn explicit_tree(li: &LoadedInstance) -> anyhow::Result<std::sync::Arc<ExplicitScenarioTree>> {
    if let Some(t) = &li.inst.tree {
        return Ok(t.clone());
    }
    let Some(g) = &li.generator else { bail!("verify needs an explicit instance") };
    let inst = Instance::from_generator(g, true).with_context(|| format!("enumerating {}", li.name))?;
    Ok(inst.tree.expect("enumerated instance has a tree"))
}

pub fn verify(
    config: &Path,
    seed: Option<u64>,
    episodes: Option<usize>,
    out: Option<&Path>,
    trace: Option<&Path>,
) -> Result<(), Failure> {
    let c = load_config(config, seed, episodes)?;
    if c.policies.contains(&PolicyName::MmoGreedy) {
        return Err(anyhow::anyhow!("mmo-greedy is a baseline without a gap guarantee; verify does not support it").into());
    }
    let instances = c.load_instances()?;
    let opts = McOptions { group_size: c.group_size, audit: AuditMode::Count };
    let mut reports = Vec::new();
    let mut traces = match trace {
        Some(p) => Some(std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => None,
    };
    for li in &instances {
        let tree = explicit_tree(li)?;
        let pack = solve_pack_dp(&tree).context("OPT_pack")?;
        let lp = solve_lp_explicit(&tree).context("OPT_lp")?;
        let pen = solve_pen_lp(&tree).context("OPT_pen")?;
        for &p in &c.policies {
            let f = factory(p, li, &c)?;
            let r = eval_policy_mc(li.inst.sim.as_ref(), f.as_ref(), c.episodes, c.seed, &opts)
                .with_context(|| format!("{} on {}", p.as_str(), li.name))?;
            if let Some(w) = traces.as_mut() {
                write_traces(w, li, p, f.as_ref(), &c)?;
            }
            let eps = c.solver.epsilon();
            let (benchmark, bench) = match p {
                PolicyName::Nrm if !pack.approximate => ("OPT_pack", pack.value),
                _ => ("OPT_lp", lp.value),
            };
            let scale = match p {
                PolicyName::Is | PolicyName::Mwmlp => li.graph_size().unwrap_or(li.inst.spec.horizon),
                _ => li.inst.spec.horizon,
            };
            let gap = bench - r.mean_reward;
            let gap_budget = eps * scale as f64;
            reports.push(VerifyReport {
                instance: li.name.clone(),
                policy: p.as_str(),
                opt_pack: pack.value,
                opt_pack_approximate: pack.approximate,
                opt_lp: lp.value,
                opt_pen: pen.value,
                benchmark,
                mean_reward: r.mean_reward,
                std_error: r.std_error,
                ci95: [r.mean_reward - 1.96 * r.std_error, r.mean_reward + 1.96 * r.std_error],
                gap,
                gap_budget,
                gap_ok: gap <= gap_budget + 3.0 * r.std_error,
                episodes: r.episodes,
                violation_count: r.violation_count,
                max_violation: r.max_violation.clone(),
                audit_ok: r.violation_count == 0,
            });
        }
    }
    let mut w = sink(out)?;
    for r in &reports {
        writeln!(w, "{}", serde_json::to_string(r).map_err(anyhow::Error::from)?)?;
    }
    w.flush()?;
    let failed = |ok: fn(&VerifyReport) -> bool| {
        reports.iter().filter(|r| !ok(r)).map(|r| format!("{} on {}", r.policy, r.instance)).collect::<Vec<_>>()
    };
    let audit = failed(|r| r.audit_ok);
    if !audit.is_empty() {
        return Err(Failure::Audit(format!("feasibility audit failed: {}", audit.join(", "))));
    }
    let gap = failed(|r| r.gap_ok);
    if !gap.is_empty() {
        return Err(Failure::Gap(format!("gap above εT + 3·se: {}", gap.join(", "))));
    }
    Ok(())
}
