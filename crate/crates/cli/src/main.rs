//! `kcond` — command-line surface over the condensation-transition toolkit.
//!
//! Scalar results are emitted as JSON (stamped with version, the parsed
//! config, and the master seed), curves as CSV with a stamped header.
//! Every run is reproducible bit-for-bit from its stamp.

mod selftest;

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use kcond_core::dtree::{read_tree, write_tree, DecoratedTree};
use kcond_core::graph::{read_coloring, read_graph, write_coloring, write_graph, Coloring};
use kcond_core::gw::{self, TypeCompat};
use kcond_core::wp::{ReduceMode, WpVariant};

#[derive(Parser)]
#[command(name = "kcond", version, about = "Numerics for the condensation transition in random graph k-coloring")]
struct Cli {
    /// Worker threads (default: available cores). Results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output format for commands that support both
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Output path (default: stdout)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Generate random graphs and planted instances
    Gen(GenArgs),
    /// Sigma-core of a colored graph
    Core {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        coloring: PathBuf,
        #[arg(long, default_value_t = 100)]
        threshold: u32,
        #[arg(long, default_value_t = default_seed())]
        seed: u64,
    },
    /// Warning Propagation
    Wp {
        #[command(subcommand)]
        cmd: WpCmd,
    },
    /// Branching-process sampling and subcriticality
    Gw {
        #[command(subcommand)]
        cmd: GwCmd,
    },
    /// Scalar fixed point of q -> (1-exp(-dq/(k-1)))^(k-1)
    Fixpoint {
        #[command(subcommand)]
        cmd: FixpointCmd,
    },
    /// Sigma_k on a d-grid (CSV)
    Sigma {
        #[command(subcommand)]
        cmd: SigmaCmd,
    },
    /// Bisection for the zero of Sigma_k on the theorem interval
    Dcond {
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 0.01)]
        tol: f64,
        #[arg(long, default_value_t = default_seed())]
        seed: u64,
    },
    /// Brute-force cluster enumeration
    Cluster {
        #[command(subcommand)]
        cmd: ClusterCmd,
    },
    /// Empirical tree statistics of the reduced planted graph
    Stats {
        #[command(subcommand)]
        cmd: StatsCmd,
    },
    /// Fast deterministic self-checks; nonzero exit on failure
    Selftest {
        #[arg(long, default_value_t = default_seed())]
        seed: u64,
    },
}

#[derive(Args)]
struct GenArgs {
    #[command(subcommand)]
    cmd: GenCmd,
}

#[derive(Subcommand)]
enum GenCmd {
    /// G(n,p)
    Gnp {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = default_seed())]
        seed: u64,
        /// k recorded in the graph header
        #[arg(long, default_value_t = 3)]
        k: usize,
    },
    /// G(n,m)
    Gnm {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = default_seed())]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        k: usize,
    },
    /// Planted model G(n,p',sigma) with uniform sigma
    Planted {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        d: f64,
        #[arg(long, default_value_t = default_seed())]
        seed: u64,
        /// coloring output path (graph goes to --out)
        #[arg(long)]
        out_coloring: PathBuf,
    },
    /// Planted model with exactly m edges over a stored coloring
    PlantedM {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        coloring: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = default_seed())]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum WpCmd {
    Run {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        coloring: PathBuf,
        #[arg(long, value_enum)]
        variant: WpVariantArg,
        #[arg(long, default_value_t = 100)]
        threshold: u32,
        #[arg(long, value_enum, default_value_t = WpEmit::Lists)]
        emit: WpEmit,
        #[arg(long, value_enum, default_value_t = ModeArg::Limit)]
        mode: ModeArg,
        #[arg(long, default_value_t = default_seed())]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
enum WpVariantArg {
    Planted,
    Core,
}

#[derive(Clone, Copy, ValueEnum, Serialize, Debug)]
enum WpEmit {
    Lists,
    Reduced,
    Logz,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Limit,
    Round,
}

#[derive(Subcommand)]
enum GwCmd {
    Sample {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        d: f64,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = default_seed())]
        seed: u64,
        #[arg(long, value_enum, default_value_t = GwEmit::Stats)]
        emit: GwEmit,
    },
    Subcrit {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        d: f64,
        #[arg(long, default_value_t = default_seed())]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GwEmit {
    Stats,
    Trees,
}

#[derive(Subcommand)]
enum FixpointCmd {
    Scalar {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        d: f64,
        #[arg(long, default_value_t = default_seed())]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum SigmaCmd {
    Curve {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        dmin: f64,
        #[arg(long)]
        dmax: f64,
        #[arg(long, default_value_t = 21)]
        steps: usize,
        #[arg(long, default_value_t = 200_000)]
        samples: usize,
        #[arg(long, default_value_t = default_seed())]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum ClusterCmd {
    Brute {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        coloring: PathBuf,
        #[arg(long, default_value_t = default_seed())]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum StatsCmd {
    Trees {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        d: f64,
        #[arg(long, default_value_t = default_seed())]
        seed: u64,
        /// file of query classes: decorated trees in the tree text format,
        /// concatenated
        #[arg(long)]
        classes: PathBuf,
    },
}

fn default_seed() -> u64 {
    std::env::var("KCOND_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(0)
}

fn main() {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().ok();
    }
    let code = match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            let msg = json!({ "error": e.to_string() });
            eprintln!("{msg}");
            1
        }
    };
    std::process::exit(code);
}

fn out_writer(cli: &Cli) -> std::io::Result<Box<dyn Write>> {
    Ok(match &cli.out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

/// JSON stamp around a result: version + reconstructed config + seed.
fn emit_json<T: Serialize>(
    cli: &Cli,
    config: serde_json::Value,
    seed: u64,
    result: T,
) -> kcond_core::Result<()> {
    let doc = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "seed": seed,
        "result": result,
    });
    let mut w = out_writer(cli)?;
    let text = serde_json::to_string_pretty(&doc)
        .map_err(|e| kcond_core::Error::Parse(e.to_string()))?;
    writeln!(w, "{text}")?;
    Ok(())
}

fn load_graph(path: &PathBuf) -> kcond_core::Result<(kcond_core::Graph, usize)> {
    let mut r = BufReader::new(File::open(path)?);
    read_graph(&mut r)
}

fn load_coloring(path: &PathBuf, k: usize) -> kcond_core::Result<Coloring> {
    let mut r = BufReader::new(File::open(path)?);
    read_coloring(&mut r, k)
}

fn run(cli: &Cli) -> kcond_core::Result<()> {
    match &cli.command {
        Command::Gen(args) => run_gen(cli, args),
        Command::Core { graph, coloring, threshold, seed } => {
            let (g, k) = load_graph(graph)?;
            let sigma = load_coloring(coloring, k)?;
            let res = kcond_core::core(&g, &sigma, *threshold)?;
            emit_json(
                cli,
                json!({"cmd": "core", "graph": graph, "coloring": coloring, "threshold": threshold}),
                *seed,
                json!({"size": res.size(), "members": res.member_ids(), "threshold": res.threshold}),
            )
        }
        Command::Wp { cmd } => run_wp(cli, cmd),
        Command::Gw { cmd } => run_gw(cli, cmd),
        Command::Fixpoint { cmd } => match cmd {
            FixpointCmd::Scalar { k, d, seed } => {
                let fp = kcond_core::scalar_fixed_point(*k, *d)?;
                emit_json(cli, json!({"cmd": "fixpoint scalar", "k": k, "d": d}), *seed, fp)
            }
        },
        Command::Sigma { cmd } => run_sigma(cli, cmd),
        Command::Dcond { k, samples, tol, seed } => {
            let r = kcond_core::find_dcond(*k, *samples, *tol, *seed)?;
            let interval_check = r.ci_lo >= r.interval_lo && r.ci_hi <= r.interval_hi;
            emit_json(
                cli,
                json!({"cmd": "dcond", "k": k, "samples": samples, "tol": tol}),
                *seed,
                json!({
                    "d_cond": r.d_cond, "ci_lo": r.ci_lo, "ci_hi": r.ci_hi,
                    "interval_lo": r.interval_lo, "interval_hi": r.interval_hi,
                    "interval_check": interval_check,
                    "evaluations": r.evaluations,
                    "stopped_by_noise": r.stopped_by_noise,
                }),
            )
        }
        Command::Cluster { cmd } => match cmd {
            ClusterCmd::Brute { graph, coloring, seed } => {
                let (g, k) = load_graph(graph)?;
                let sigma = load_coloring(coloring, k)?;
                let res = kcond_core::cluster_brute(&g, &sigma, None)?;
                emit_json(
                    cli,
                    json!({"cmd": "cluster brute", "graph": graph, "coloring": coloring}),
                    *seed,
                    res,
                )
            }
        },
        Command::Stats { cmd } => match cmd {
            StatsCmd::Trees { n, k, d, seed, classes } => {
                let class_trees = read_classes(classes)?;
                let rep = kcond_core::compare_tree_stats(*n, *k, *d, &class_trees, *seed)?;
                emit_json(
                    cli,
                    json!({"cmd": "stats trees", "n": n, "k": k, "d": d, "classes": classes}),
                    *seed,
                    rep,
                )
            }
        },
        Command::Selftest { seed } => {
            let report = selftest::run(*seed);
            let ok = report.iter().all(|c| c.pass);
            for c in &report {
                println!("{} {} — {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if ok {
                Ok(())
            } else {
                Err(kcond_core::Error::InvalidInput(format!(
                    "selftest failed: {}",
                    report
                        .iter()
                        .filter(|c| !c.pass)
                        .map(|c| c.name.as_str())
                        .collect::<Vec<_>>()
                        .join(", ")
                )))
            }
        }
    }
}

fn run_gen(cli: &Cli, args: &GenArgs) -> kcond_core::Result<()> {
    match &args.cmd {
        GenCmd::Gnp { n, p, seed, k } => {
            let g = kcond_core::gen_gnp(*n, *p, *seed)?;
            let mut w = out_writer(cli)?;
            write_graph(&mut w, &g, *k)
        }
        GenCmd::Gnm { n, m, seed, k } => {
            let g = kcond_core::gen_gnm(*n, *m, *seed)?;
            let mut w = out_writer(cli)?;
            write_graph(&mut w, &g, *k)
        }
        GenCmd::Planted { n, k, d, seed, out_coloring } => {
            let (sigma, g) = kcond_core::gen_planted_p(*n, *k, *d, *seed)?;
            let mut cw = BufWriter::new(File::create(out_coloring)?);
            write_coloring(&mut cw, &sigma)?;
            let mut w = out_writer(cli)?;
            write_graph(&mut w, &g, *k)
        }
        GenCmd::PlantedM { n, m, coloring, k, seed } => {
            let sigma = load_coloring(coloring, *k)?;
            let g = kcond_core::gen_planted_m(*n, *m, &sigma, *seed)?;
            let mut w = out_writer(cli)?;
            write_graph(&mut w, &g, *k)
        }
    }
}

fn run_wp(cli: &Cli, cmd: &WpCmd) -> kcond_core::Result<()> {
    let WpCmd::Run { graph, coloring, variant, threshold, emit, mode, seed } = cmd;
    let (g, k) = load_graph(graph)?;
    let sigma = load_coloring(coloring, k)?;
    let v = match variant {
        WpVariantArg::Planted => WpVariant::Planted,
        WpVariantArg::Core => WpVariant::Core { threshold: *threshold },
    };
    let (state, lists) = kcond_core::wp_run(&g, &sigma, v)?;
    let config = json!({
        "cmd": "wp run", "graph": graph, "coloring": coloring,
        "variant": v, "emit": format!("{emit:?}"),
    });
    let rmode = match mode {
        ModeArg::Limit => ReduceMode::Limit,
        ModeArg::Round => ReduceMode::Round,
    };
    match emit {
        WpEmit::Lists => emit_json(
            cli,
            config,
            *seed,
            json!({
                "rounds": state.rounds,
                "lists": lists.lists,
                "frozen": lists.frozen_count(),
            }),
        ),
        WpEmit::Reduced => {
            let r = kcond_core::reduced_graph(&g, &sigma, &lists, rmode)?;
            emit_json(
                cli,
                config,
                *seed,
                json!({
                    "rounds": state.rounds,
                    "edges_kept": r.graph.m(),
                    "edges_original": g.m(),
                    "components": r.n_components,
                }),
            )
        }
        WpEmit::Logz => {
            let r = kcond_core::reduced_graph(&g, &sigma, &lists, rmode)?;
            let lz = kcond_core::log_legal_colorings_reduced(&r, None)?;
            emit_json(cli, config, *seed, json!({"rounds": state.rounds, "log_legal": lz}))
        }
    }
}

fn run_gw(cli: &Cli, cmd: &GwCmd) -> kcond_core::Result<()> {
    match cmd {
        GwCmd::Sample { k, d, n, seed, emit } => {
            let params = gw::params_at_fixed_point(
                *d,
                *k,
                gw::default_ell_cap(*k),
                TypeCompat::RestrictParentColor,
            )?;
            match emit {
                GwEmit::Stats => {
                    let est = gw::estimate_free_entropy(&params, *n, *seed)?;
                    emit_json(
                        cli,
                        json!({"cmd": "gw sample", "k": k, "d": d, "n": n, "emit": "stats"}),
                        *seed,
                        json!({
                            "q_star": params.q_star,
                            "free_entropy_mean": est.mean,
                            "free_entropy_stderr": est.stderr,
                            "mean_tree_size": est.mean_tree_size,
                            "max_tree_size": est.max_tree_size,
                            "tail_mass": params.tail_mass,
                        }),
                    )
                }
                GwEmit::Trees => {
                    let mut w = out_writer(cli)?;
                    for i in 0..*n {
                        let mut rng =
                            kcond_core::rng::stream(*seed, kcond_core::rng::tag::GW_SAMPLE, i as u64);
                        let t = gw::sample_tree(&params, &mut rng)?;
                        write_tree(&mut w, &t)?;
                    }
                    Ok(())
                }
            }
        }
        GwCmd::Subcrit { k, d, seed } => {
            let params = gw::params_at_fixed_point(
                *d,
                *k,
                gw::default_ell_cap(*k),
                TypeCompat::RestrictParentColor,
            )?;
            let m = gw::mean_matrix(&params);
            emit_json(
                cli,
                json!({"cmd": "gw subcrit", "k": k, "d": d}),
                *seed,
                json!({
                    "spectral_radius": m.spectral_radius,
                    "subcritical": m.spectral_radius < 1.0,
                    "sizes": m.sizes,
                    "matrix": m.entries,
                }),
            )
        }
    }
}

fn run_sigma(cli: &Cli, cmd: &SigmaCmd) -> kcond_core::Result<()> {
    let SigmaCmd::Curve { k, dmin, dmax, steps, samples, seed } = cmd;
    let curve = kcond_core::sigma_curve(*k, *dmin, *dmax, *steps, *samples, *seed)?;
    match cli.format {
        Format::Csv => {
            let mut w = out_writer(cli)?;
            writeln!(
                w,
                "# kcond {} sigma curve k={} dmin={:.16e} dmax={:.16e} steps={} samples={} seed={}",
                env!("CARGO_PKG_VERSION"),
                k,
                dmin,
                dmax,
                steps,
                samples,
                seed
            )?;
            writeln!(w, "d,sigma,stderr,n_samples")?;
            for r in &curve.rows {
                writeln!(w, "{:.16e},{:.16e},{:.16e},{}", r.d, r.value, r.stderr, r.n_samples)?;
            }
            Ok(())
        }
        Format::Json => emit_json(
            cli,
            json!({"cmd": "sigma curve", "k": k, "dmin": dmin, "dmax": dmax, "steps": steps, "samples": samples}),
            *seed,
            curve,
        ),
    }
}

fn read_classes(path: &PathBuf) -> kcond_core::Result<Vec<DecoratedTree>> {
    let mut content = String::new();
    File::open(path)?.read_to_string(&mut content)?;
    let mut trees = Vec::new();
    let mut rest = content.as_str();
    while !rest.trim().is_empty() {
        let header_end = rest
            .find('\n')
            .ok_or_else(|| kcond_core::Error::Parse("classes file: truncated header".into()))?;
        let header = &rest[..header_end];
        let n: usize = header
            .split_whitespace()
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| kcond_core::Error::Parse("classes file: bad n".into()))?;
        let mut end = header_end + 1;
        for _ in 0..n {
            end += rest[end..].find('\n').map(|i| i + 1).unwrap_or(rest.len() - end);
        }
        let block = &rest[..end];
        let mut r = BufReader::new(block.as_bytes());
        trees.push(read_tree(&mut r)?);
        rest = &rest[end..];
    }
    Ok(trees)
}
