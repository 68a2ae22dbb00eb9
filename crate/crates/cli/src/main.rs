use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use dyndfs::bench::gen::{gen_adversary_edge, gen_pseudo_root, gen_random_stream};
use dyndfs::bench::io::{parse_graph, parse_stream, write_graph, write_stream, ParseError, StreamOp};
use dyndfs::bench::{run_stream, write_csv, RunError, RunOptions};
use dyndfs::{Config, Mode, Schedule};

#[derive(Parser)]
#[command(name = "dyndfs", version, about = "Replay update streams against a dynamic DFS tree")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Full,
    Incr,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScheduleArg {
    Amortized,
    Deamortized,
}

#[derive(clap::Args)]
struct ReplayArgs {
    /// Graph file: `n m` header, then one `u v` line per edge.
    graph: PathBuf,
    /// Stream file: one `IE`, `DE`, `IV`, `DV`, `QC`, `QB` or `Q2` line per operation.
    stream: PathBuf,
    #[arg(long, value_enum, default_value = "full")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "deamortized")]
    schedule: ScheduleArg,
    /// Fixed epoch length instead of the size-dependent default.
    #[arg(long)]
    epoch: Option<usize>,
    /// Write one metrics row per update to this file.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write the reproduction of an oracle mismatch to this file.
    #[arg(long)]
    dump: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Replay a stream, printing one `0`/`1` line per query.
    Run {
        #[command(flatten)]
        args: ReplayArgs,
        /// Check every tree and answer against brute force.
        #[arg(long)]
        audit: bool,
    },
    /// Replay a stream with auditing on and report the outcome.
    Verify {
        #[command(flatten)]
        args: ReplayArgs,
    },
    /// Write the edge-update lower bound instance.
    GenAdversary {
        #[arg(long)]
        n: usize,
        /// Number of insert/delete pairs.
        #[arg(long, default_value_t = 1)]
        pairs: usize,
        #[arg(long)]
        graph_out: PathBuf,
        #[arg(long)]
        stream_out: PathBuf,
    },
    /// Add a vertex adjacent to every vertex of a graph.
    GenPseudoRoot {
        graph: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a random graph and a random operation stream.
    GenRandom {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        length: usize,
        /// Comma-separated weights over IE,DE,IV,DV,QC,QB,Q2; five weights
        /// split the last one over the three queries.
        #[arg(long, default_value = "0.3,0.3,0.1,0.1,0.2")]
        weights: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        graph_out: PathBuf,
        #[arg(long)]
        stream_out: PathBuf,
    },
}

enum Failure {
    Mismatch,
    Other(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Mismatch) => ExitCode::from(2),
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn parsed<T>(path: &Path, r: Result<T, ParseError>) -> Result<T> {
    r.map_err(|e| anyhow!("{}: {e}", path.display()))
}

fn dispatch(cmd: Cmd) -> Result<(), Failure> {
    match cmd {
        Cmd::Run { args, audit } => replay(&args, audit, false),
        Cmd::Verify { args } => replay(&args, true, true),
        Cmd::GenAdversary { n, pairs, graph_out, stream_out } => {
            let inst = gen_adversary_edge(n, pairs).map_err(anyhow::Error::from)?;
            let ops: Vec<StreamOp> = inst.updates.into_iter().map(StreamOp::Update).collect();
            write(&graph_out, &write_graph(&inst.graph))?;
            write(&stream_out, &write_stream(&ops))?;
            Ok(())
        }
        Cmd::GenPseudoRoot { graph, out } => {
            let g = parsed(&graph, parse_graph(&read(&graph)?))?;
            let (h, p) = gen_pseudo_root(&g);
            write(&out, &write_graph(&h))?;
            println!("{p}");
            Ok(())
        }
        Cmd::GenRandom { n, m, length, weights, seed, graph_out, stream_out } => {
            let w = weights
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| anyhow!("bad weights `{weights}`: {e}"))?;
            let (g, ops) = gen_random_stream(n, m, length, &w, seed).map_err(anyhow::Error::from)?;
            write(&graph_out, &write_graph(&g))?;
            write(&stream_out, &write_stream(&ops))?;
            Ok(())
        }
    }
}

fn replay(args: &ReplayArgs, audit: bool, summary: bool) -> Result<(), Failure> {
    let g = parsed(&args.graph, parse_graph(&read(&args.graph)?))?;
    let ops = parsed(&args.stream, parse_stream(&read(&args.stream)?))?;
    let config = Config {
        mode: match args.mode {
            ModeArg::Full => Mode::Full,
            ModeArg::Incr => Mode::Incremental,
        },
        schedule: match args.schedule {
            ScheduleArg::Amortized => Schedule::Amortized,
            ScheduleArg::Deamortized => Schedule::Deamortized,
        },
        c0: args.epoch,
        ..Config::default()
    };
    match run_stream(&g, &ops, RunOptions { config, audit }) {
        Ok(out) => {
            if let Some(path) = &args.csv {
                write(path, &write_csv(&out.rows))?;
            }
            if summary {
                println!("ok: {} updates, {} queries", out.rows.len(), out.answers.len());
            } else {
                for a in &out.answers {
                    println!("{}", u8::from(a.value));
                }
            }
            Ok(())
        }
        Err(RunError::Mismatch(mm)) => {
            let dump = mm.dump();
            match &args.dump {
                Some(path) => write(path, &dump)?,
                None => eprint!("{dump}"),
            }
            eprintln!("oracle mismatch at operation {}: {}", mm.index, mm.what);
            Err(Failure::Mismatch)
        }
        Err(e @ RunError::Op { .. }) => Err(Failure::Other(e.into())),
    }
}
