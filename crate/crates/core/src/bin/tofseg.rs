//! Pipeline command line: scenario synthesis, one-shot segmentation,
//! sequence tracking, evaluation, and benchmarking.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tofseg::cluster::{cluster, ClipRange, Measure};
use tofseg::config::Config;
use tofseg::eval::{bench, segmentation_iou, tracking_metrics};
use tofseg::frame::{load_sequence, store_sequence};
use tofseg::synth::{make_scenario_with, read_ground_truth, scenario_names, write_ground_truth};
use tofseg::tracker::{self, RunOptions, TrackLog};

#[derive(Parser)]
#[command(name = "tofseg", about = "Range-intensity hand segmentation and tracking pipeline", disable_help_subcommand = true)]
struct Cli {
    /// Configuration file (key=value lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Cluster-engine worker threads.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Homogeneity measure variant.
    #[arg(long, global = true, value_parser = ["fused", "baseline"])]
    measure: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a named scenario to a sequence file plus ground truth.
    Synth {
        /// Scenario name; see `synth list`.
        name: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output directory (seq.ris, gt.csv, gt_*.pgm).
        #[arg(long)]
        out: PathBuf,
    },
    /// Cluster one frame of a sequence into regions.
    Segment {
        seq: PathBuf,
        /// Frame index within the sequence.
        #[arg(long, default_value_t = 0)]
        frame: usize,
        /// Output directory (labels.pgm, regions.csv).
        #[arg(long)]
        out: PathBuf,
    },
    /// Track two hands through a sequence and write the log.
    Track {
        seq: PathBuf,
        /// Output log file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a track log against scenario ground truth.
    Eval {
        log: PathBuf,
        /// Directory holding gt.csv and gt_*.pgm.
        gt: PathBuf,
        /// Optionally also segment one frame of this sequence and report
        /// per-object overlap.
        #[arg(long)]
        seq: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        frame: usize,
    },
    /// Time the cluster engine phase by phase across worker counts.
    Bench {
        seq: PathBuf,
        #[arg(long, default_value_t = 0)]
        frame: usize,
        /// Comma-separated worker counts.
        #[arg(long = "worker-list", default_value = "1,2,4", value_delimiter = ',')]
        worker_list: Vec<usize>,
    },
}

fn load_config(cli: &Cli) -> tofseg::Result<Config> {
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    if let Some(m) = &cli.measure {
        cfg.measure = match m.as_str() {
            "baseline" => Measure::Baseline,
            _ => Measure::Fused,
        };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn pick_frame(seq: &PathBuf, index: usize) -> tofseg::Result<tofseg::frame::Frame> {
    let frames = load_sequence(seq)?;
    frames.into_iter().nth(index).ok_or_else(|| {
        tofseg::Error::InvalidInput(format!("frame index {index} out of range"))
    })
}

fn run(cli: Cli) -> tofseg::Result<ExitCode> {
    let cfg = load_config(&cli)?;
    match cli.command {
        Command::Synth { name, seed, out } => {
            if name == "list" {
                for n in scenario_names() {
                    println!("{n}");
                }
                return Ok(ExitCode::SUCCESS);
            }
            let (frames, gts) = make_scenario_with(&name, seed, &cfg.noise)?;
            std::fs::create_dir_all(&out)?;
            store_sequence(&frames, out.join("seq.ris"))?;
            let k = frames[0].intrinsics;
            write_ground_truth(&out, k.width as usize, k.height as usize, &gts)?;
            println!("wrote {} frames to {}", frames.len(), out.display());
        }
        Command::Segment { seq, frame, out } => {
            let f = pick_frame(&seq, frame)?;
            let seg = cluster(&f, &ClipRange::unbounded(), &cfg.merge, cfg.measure, cfg.weighting, cfg.workers)?;
            std::fs::create_dir_all(&out)?;
            seg.write_pgm(out.join("labels.pgm"))?;
            seg.write_region_csv(out.join("regions.csv"))?;
            let above = seg.regions.iter().filter(|r| r.pixel_count >= cfg.tracker.size_min).count();
            println!("regions={} above_size_min={}", seg.regions.len(), above);
        }
        Command::Track { seq, out } => {
            let frames = load_sequence(&seq)?;
            let opts = RunOptions {
                measure: cfg.measure,
                weighting: cfg.weighting,
                workers: cfg.workers,
                behind_literal: cfg.behind_literal,
            };
            let log = tracker::run(&frames, &cfg.merge, &cfg.tracker, &opts)?;
            log.save(&out)?;
            let ok = log.init_succeeded();
            println!("records={} init_success={}", log.records.len(), ok as u32);
            if !ok {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Eval { log, gt, seq, frame } => {
            let log = TrackLog::load(&log)?;
            let gts = read_ground_truth(&gt)?;
            let score = tracking_metrics(&log, &gts, cfg.tracker.size_min)?;
            print!("{score}");
            if let Some(seq) = seq {
                let f = pick_frame(&seq, frame)?;
                let seg = cluster(&f, &ClipRange::unbounded(), &cfg.merge, cfg.measure, cfg.weighting, cfg.workers)?;
                let gt_frame = gts.get(frame).ok_or_else(|| {
                    tofseg::Error::InvalidInput(format!("ground truth has no frame {frame}"))
                })?;
                print!("{}", segmentation_iou(&seg, gt_frame, cfg.tracker.size_min)?);
            }
        }
        Command::Bench { seq, frame, worker_list } => {
            let f = pick_frame(&seq, frame)?;
            let reports = bench(
                &f,
                &ClipRange::unbounded(),
                &cfg.merge,
                cfg.measure,
                cfg.weighting,
                &worker_list,
                Some(&cfg.tracker),
            )?;
            for r in reports {
                print!("{r}\n");
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are not usage errors
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
