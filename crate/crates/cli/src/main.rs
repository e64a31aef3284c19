//! `clickmask` command-line entry point.
//!
//! Exit codes: 0 on success, 1 for bad input (flags, files, datasets),
//! 2 when an engine or solver fails at run time.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "clickmask", version, about = "Click-driven image annotation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the click simulator over a dataset and write NoC / mIoU CSVs.
    Eval {
        /// Folder with `images/` and `masks/` subfolders.
        #[arg(long)]
        dataset: PathBuf,
        /// graphcut, randomwalker, geodesic or oracle.
        #[arg(long)]
        engine: String,
        #[arg(long, default_value_t = 20)]
        max_clicks: usize,
        /// Comma-separated IoU thresholds.
        #[arg(long, default_value = "0.85,0.90")]
        thresholds: String,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        seed_radius: Option<u32>,
        /// Per-instance CSV; the mIoU curve goes next to it as `<stem>_miou.csv`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Segment one image from a fixed click list.
    Segment {
        #[arg(long)]
        image: PathBuf,
        /// Semicolon-separated `x,y,+` / `x,y,-` triples, e.g. "12,40,+;80,40,-".
        /// The first click must be positive.
        #[arg(long, allow_hyphen_values = true)]
        clicks: String,
        #[arg(long, default_value = "graphcut")]
        engine: String,
        #[arg(long)]
        seed_radius: Option<u32>,
        /// Greyscale mask PNG (foreground 255).
        #[arg(long)]
        out: PathBuf,
    },
    /// Propagate reference masks through a folder of frames.
    Propagate {
        #[arg(long)]
        frames: PathBuf,
        /// Comma-separated `frame:mask.png` pairs, e.g. "0:first.png,12:later.png".
        #[arg(long)]
        refs: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        tau: Option<f64>,
        /// Clean each propagated mask with a graph cut (binary masks only).
        #[arg(long)]
        refine: bool,
    },
    /// Format conversions.
    Convert {
        #[command(subcommand)]
        kind: Convert,
    },
    /// Start the HTTP annotation service.
    Serve {
        /// 0 picks a free port; the bound address is printed either way.
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value = "graphcut")]
        engine: String,
        #[arg(long)]
        save_dir: Option<PathBuf>,
        /// Concurrent propagation jobs.
        #[arg(long, default_value_t = 2)]
        workers: usize,
    },
}

#[derive(Debug, Subcommand)]
enum Convert {
    /// Slice a volume (header file or PNG slice folder) into 16-bit frames.
    Volume2frames {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 2)]
        axis: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Stack a folder of single-channel frames into a volume header + raw file.
    Frames2volume {
        #[arg(long)]
        frames: PathBuf,
        #[arg(long, default_value_t = 2)]
        axis: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Trace label masks into a COCO annotation file.
    Mask2coco {
        /// Folder of label mask PNGs; pixel values are category ids.
        #[arg(long)]
        masks: PathBuf,
        #[arg(long, default_value_t = clickmask::geometry::DEFAULT_EPSILON)]
        epsilon: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Eval {
            dataset,
            engine,
            max_clicks,
            thresholds,
            workers,
            seed_radius,
            out,
        } => commands::eval(&dataset, &engine, max_clicks, &thresholds, workers, seed_radius, &out),
        Command::Segment {
            image,
            clicks,
            engine,
            seed_radius,
            out,
        } => commands::segment(&image, &clicks, &engine, seed_radius, &out),
        Command::Propagate {
            frames,
            refs,
            out,
            tau,
            refine,
        } => commands::propagate(&frames, &refs, &out, tau, refine),
        Command::Convert { kind } => match kind {
            Convert::Volume2frames { input, axis, out } => commands::volume_to_frames(&input, axis, &out),
            Convert::Frames2volume { frames, axis, out } => commands::frames_to_volume(&frames, axis, &out),
            Convert::Mask2coco { masks, epsilon, out } => commands::mask_to_coco(&masks, epsilon, &out),
        },
        Command::Serve {
            port,
            host,
            engine,
            save_dir,
            workers,
        } => commands::serve(&host, port, &engine, save_dir, workers),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
