use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use topnav_bench::config::Config;
use topnav_bench::driver::{run_matrix, MatrixSpec};
use topnav_bench::episode::{make_episodes, Category};
use topnav_bench::plot::render_svg;
use topnav_bench::run::{prepare_regime, run_episode, ControllerKind, Regime};
use topnav_bench::trace::{read_trace, write_trace, TraceHeader, TRACE_SCHEMA};

#[derive(Parser)]
#[command(
    name = "topnav",
    about = "Topometric navigation testbed: worlds, maps, episodes, benchmarks, plots"
)]
struct Cli {
    /// Path to the TOML config; builtin defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the bench seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: CommandKind,
}

#[derive(Subcommand)]
enum CommandKind {
    /// Generate worlds and write their text encodings.
    GenWorlds(GenWorldsArgs),
    /// Build the teach-run topological map for one episode.
    Map(MapArgs),
    /// Run a single episode and write its trace (and optionally a plot).
    Run(RunArgs),
    /// Run the full benchmark matrix and write summaries.
    Bench(BenchArgs),
    /// Render an SVG plot from a previously written trace.
    Plot(PlotArgs),
}

#[derive(Args)]
struct GenWorldsArgs {
    /// Output directory.
    #[arg(long, default_value = "out/worlds")]
    out: PathBuf,
    /// How many worlds; defaults to the config's bench.worlds.
    #[arg(long)]
    count: Option<usize>,
}

#[derive(Args)]
struct MapArgs {
    /// Episode index in the deterministic episode list.
    #[arg(long)]
    episode: usize,
    /// Regime whose association model builds the map.
    #[arg(long, default_value = "gt-topological")]
    regime: String,
    #[arg(long, default_value = "out/map.txt")]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    episode: usize,
    #[arg(long, default_value = "gt-metric")]
    regime: String,
    #[arg(long, default_value = "topometric")]
    controller: String,
    /// Disable the fallback auto-switch (metric-only; holds on failure).
    #[arg(long)]
    no_switch: bool,
    /// Step budget; defaults to the config's bench.budget.
    #[arg(long)]
    budget: Option<u32>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Also write an SVG plot of the executed trajectory.
    #[arg(long)]
    plot: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value = "out/bench")]
    out: PathBuf,
    /// Comma-separated regimes.
    #[arg(long, default_value = "gt-metric,gt-topological,noisy")]
    regimes: String,
    /// Comma-separated controllers.
    #[arg(long, default_value = "topometric")]
    controllers: String,
    /// Comma-separated categories; defaults to the config's list.
    #[arg(long)]
    categories: Option<String>,
    #[arg(long)]
    budget: Option<u32>,
    /// Disable the fallback auto-switch.
    #[arg(long)]
    no_switch: bool,
    /// Write one trace file per episode run.
    #[arg(long)]
    traces: bool,
}

#[derive(Args)]
struct PlotArgs {
    /// Trace file written by `run` or `bench --traces`.
    #[arg(long)]
    trace: PathBuf,
    #[arg(long, default_value = "out/plot.svg")]
    out: PathBuf,
}

fn load_config(cli: &Cli) -> Result<Config> {
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.bench.seed = seed;
    }
    Ok(cfg)
}

fn parse_regime(s: &str) -> Result<Regime> {
    Regime::parse(s).with_context(|| format!("unknown regime `{s}` (gt-metric, gt-topological, noisy)"))
}

fn parse_controller(s: &str) -> Result<ControllerKind> {
    ControllerKind::parse(s)
        .with_context(|| format!("unknown controller `{s}` (topometric, servo-only)"))
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, content).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let cfg = load_config(&cli)?;
    match &cli.command {
        CommandKind::GenWorlds(args) => gen_worlds(&cfg, args),
        CommandKind::Map(args) => map_cmd(&cfg, args),
        CommandKind::Run(args) => run_cmd(&cfg, args),
        CommandKind::Bench(args) => bench_cmd(&cfg, args),
        CommandKind::Plot(args) => plot_cmd(&cfg, args),
    }
}

fn gen_worlds(cfg: &Config, args: &GenWorldsArgs) -> Result<()> {
    let count = args.count.unwrap_or(cfg.bench.worlds);
    let params = cfg.world_params();
    for w in 0..count {
        let seed = topnav_bench::episode::world_seed_for(cfg.bench.seed, w);
        let world = topnav_core::worldgen::generate_world(seed, &params)?;
        let path = args.out.join(format!("world_{w:03}_{seed:016x}.txt"));
        write_file(&path, &world.to_text())?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn map_cmd(cfg: &Config, args: &MapArgs) -> Result<()> {
    let regime = parse_regime(&args.regime)?;
    if regime.uses_metric_costs() {
        bail!("the gt-metric regime does not build a topological map");
    }
    let set = make_episodes(cfg)?;
    for w in &set.warnings {
        eprintln!("warning: {w}");
    }
    let Some(episode) = set.episodes.get(args.episode) else {
        bail!("episode {} out of range ({} available)", args.episode, set.episodes.len());
    };
    let setup = prepare_regime(&set.worlds[episode.world_index], cfg, episode, regime);
    let map = setup.map.expect("topological regime builds a map");
    write_file(&args.out, &map.to_text())?;
    println!(
        "episode {}: {} nodes, {} edges, goal node {:?} -> {}",
        episode.index,
        map.nodes.len(),
        map.edges.len(),
        map.goal_node,
        args.out.display()
    );
    Ok(())
}

fn run_cmd(cfg: &Config, args: &RunArgs) -> Result<()> {
    let regime = parse_regime(&args.regime)?;
    let controller = parse_controller(&args.controller)?;
    let budget = args.budget.unwrap_or(cfg.bench.budget);
    let set = make_episodes(cfg)?;
    for w in &set.warnings {
        eprintln!("warning: {w}");
    }
    let Some(episode) = set.episodes.get(args.episode) else {
        bail!("episode {} out of range ({} available)", args.episode, set.episodes.len());
    };
    let world = &set.worlds[episode.world_index];
    let setup = prepare_regime(world, cfg, episode, regime);
    let result = run_episode(world, cfg, episode, &setup, controller, !args.no_switch, budget);

    let header = TraceHeader {
        schema: TRACE_SCHEMA.into(),
        episode: episode.index,
        world_seed: episode.world_seed,
        category: episode.category.as_str().into(),
        regime: regime.as_str().into(),
        controller: controller.as_str().into(),
        switch_enabled: !args.no_switch,
        budget,
        goal_instance: episode.goal_instance,
        alt_goal: false,
    };
    let trace_path = args.out.join(format!("ep{:03}_trace.jsonl", episode.index));
    write_file(&trace_path, &write_trace(&header, &result))?;
    println!(
        "episode {}: success={} steps={} final_distance={:.2}m switches={} -> {}",
        episode.index,
        result.success,
        result.steps,
        result.final_distance,
        result.switch_count,
        trace_path.display()
    );
    if args.plot {
        let svg = render_svg(world, &episode.teach_path, &result, episode.goal_instance, episode.start);
        let plot_path = args.out.join(format!("ep{:03}_plot.svg", episode.index));
        write_file(&plot_path, &svg)?;
        println!("wrote {}", plot_path.display());
    }
    Ok(())
}

fn bench_cmd(cfg: &Config, args: &BenchArgs) -> Result<()> {
    let regimes: Vec<Regime> =
        args.regimes.split(',').map(parse_regime).collect::<Result<_>>()?;
    let controllers: Vec<ControllerKind> =
        args.controllers.split(',').map(parse_controller).collect::<Result<_>>()?;
    let mut cfg = cfg.clone();
    if let Some(cats) = &args.categories {
        cfg.bench.categories = cats.split(',').map(str::to_string).collect();
        cfg.validate()?;
    }
    let budget = args.budget.unwrap_or(cfg.bench.budget);

    let set = make_episodes(&cfg)?;
    for w in &set.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "{} worlds, {} episodes; regimes [{}] controllers [{}] budget {}",
        set.worlds.len(),
        set.episodes.len(),
        args.regimes,
        args.controllers,
        budget
    );

    let spec = MatrixSpec {
        regimes: &regimes,
        controllers: &controllers,
        budget,
        switch_enabled: !args.no_switch,
        collect_traces: args.traces,
        ..Default::default()
    };
    let out = run_matrix(&cfg, &set, &spec);

    // requested combinations with no completed episodes get a warning
    for &regime in &regimes {
        for &controller in &controllers {
            for cat in &cfg.bench.categories {
                let category = Category::parse(cat).expect("validated");
                let key = topnav_bench::aggregate::GroupKey { regime, controller, category };
                if !out.rows.iter().any(|r| r.key == key) {
                    eprintln!(
                        "warning: empty group {}/{}/{} omitted",
                        regime.as_str(),
                        controller.as_str(),
                        category.as_str()
                    );
                }
            }
        }
    }

    let table = out.summary_table();
    print!("{table}");
    write_file(&args.out.join("summary.txt"), &table)?;
    write_file(&args.out.join("summary.json"), &out.summary_json())?;
    for (name, content) in &out.traces {
        write_file(&args.out.join("traces").join(name), content)?;
    }
    println!("wrote {}", args.out.join("summary.txt").display());
    Ok(())
}

fn plot_cmd(cfg: &Config, args: &PlotArgs) -> Result<()> {
    let text = fs::read_to_string(&args.trace)
        .with_context(|| format!("reading {}", args.trace.display()))?;
    let (header, records, footer) = read_trace(&text)?;

    // rebuild the episode context from the deterministic episode list
    let set = make_episodes(cfg)?;
    let Some(episode) = set.episodes.get(header.episode) else {
        bail!("trace references episode {} not in this config", header.episode);
    };
    if episode.world_seed != header.world_seed {
        bail!(
            "trace world seed {:#x} does not match config ({:#x}); wrong config file?",
            header.world_seed,
            episode.world_seed
        );
    }
    let world = &set.worlds[episode.world_index];

    // re-inflate a result good enough for plotting
    let result = topnav_bench::run::EpisodeResult {
        success: footer.success,
        steps: footer.steps,
        final_distance: footer.final_distance,
        switch_count: footer.switch_count,
        collision_count: footer.collision_count,
        trace: records
            .iter()
            .map(|r| topnav_bench::run::StepRecord {
                step: r.step,
                x: r.x,
                y: r.y,
                theta: r.theta,
                mode: if r.mode == "metric" { "metric" } else { "fallback" },
                reason: "ok",
                v: r.v,
                w: r.w,
                ref_index: r.ref_index,
                best_raw: r.best_raw,
                best_norm: r.best_norm,
                mask_entries: r.mask_entries,
                collided: r.collided,
                goal_dist: r.goal_dist,
            })
            .collect(),
    };
    let svg = render_svg(world, &episode.teach_path, &result, header.goal_instance, episode.start);
    write_file(&args.out, &svg)?;
    println!("wrote {}", args.out.display());
    Ok(())
}
