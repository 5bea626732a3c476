use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sagnac_core::detection::{accidentals, correlate_window, generate_timetags, ttag, Channel};
use sagnac_core::metrics::{concurrence_bound, fidelity_bound, rate_metrics};
use sagnac_core::pipeline::{self, metrics_table, write_histogram_csv, RunConfig};
use sagnac_core::Error;

#[derive(Parser)]
#[command(name = "sagnac", version, about = "Crossed-crystal Sagnac entangled-pair source simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    #[arg(long = "duration-s", value_name = "X")]
    duration_s: Option<f64>,
    #[arg(long = "window-ns", value_name = "X")]
    window_ns: Option<f64>,
    #[arg(long = "bandwidth-nm", value_name = "X")]
    bandwidth_nm: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Source state and exact H/V and A/D fringe scans.
    Simulate(Common),
    /// Synthesise a detector time-tag file.
    Timetags(Common),
    /// Count coincidences in a time-tag file.
    Correlate {
        #[command(flatten)]
        common: Common,
        /// TTAG file to read.
        #[arg(long, value_name = "PATH")]
        input: PathBuf,
    },
    /// Brightness and entanglement bounds from rates and visibilities.
    Metrics {
        #[command(flatten)]
        common: Common,
        /// Read rates from a TTAG file instead of the rate flags.
        #[arg(long, value_name = "PATH")]
        input: Option<PathBuf>,
        #[arg(long = "pair-rate-cps", default_value_t = 16_000.0)]
        pair_rate_cps: f64,
        #[arg(long = "signal-rate-cps", default_value_t = 86_000.0)]
        signal_rate_cps: f64,
        #[arg(long = "idler-rate-cps", default_value_t = 86_000.0)]
        idler_rate_cps: f64,
        #[arg(long = "pump-power-mw", default_value_t = 0.1)]
        pump_power_mw: f64,
        #[arg(long = "v-hv")]
        v_hv: Option<f64>,
        #[arg(long = "v-ad")]
        v_ad: Option<f64>,
    },
    /// Full calibrated reproduction run with all output files.
    ReproducePaper(Common),
    /// Search the quadratic dispersion coefficient for a target A/D visibility.
    Calibrate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "V")]
        target: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load(common: &Common) -> Result<RunConfig, Error> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(d) = common.duration_s {
        cfg.detection.duration_s = d;
    }
    if let Some(w) = common.window_ns {
        cfg.detection.coincidence_window_ns = w;
    }
    if let Some(out) = &common.out {
        cfg.outputs.dir = out.to_string_lossy().into_owned();
    }
    cfg.check()?;
    Ok(cfg)
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf, Error> {
    let dir = PathBuf::from(&cfg.outputs.dir);
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Simulate(common) => {
            let mut cfg = load(&common)?;
            if let Some(bw) = common.bandwidth_nm {
                cfg.source.filter_nm = Some(bw);
            }
            let sim = pipeline::simulate(&cfg)?;
            let files = pipeline::write_simulation(&out_dir(&cfg)?, &sim)?;
            println!("post_selection_weight {:.6}", sim.weight);
            println!("v_hv {:.6}", sim.v_hv);
            println!("v_ad {:.6}", sim.v_ad);
            println!("fidelity_bound {:.6}", sim.bounds.fidelity);
            println!("concurrence_bound {:.6}", sim.bounds.concurrence);
            for f in files {
                println!("wrote {}", f.display());
            }
        }
        Command::Timetags(common) => {
            let cfg = load(&common)?;
            let stream = generate_timetags(&cfg.detection_config())?;
            let path = out_dir(&cfg)?.join("tags.ttag");
            ttag::write_file(&path, &stream)?;
            println!(
                "{} tags ({} signal, {} idler) over {} s",
                stream.len(),
                stream.count(Channel::Signal),
                stream.count(Channel::Idler),
                stream.duration_s
            );
            println!("wrote {}", path.display());
        }
        Command::Correlate { common, input } => {
            let cfg = load(&common)?;
            let window = cfg.detection.coincidence_window_ns;
            let stream = ttag::read_file(&input)?;
            let corr = correlate_window(&stream, window)?;
            let duration = common.duration_s.unwrap_or(stream.duration_s);
            let (rs, ri) = rates(stream.count(Channel::Signal), stream.count(Channel::Idler), duration);
            let acc = accidentals(rs, ri, window);
            println!("coincidences {}", corr.coincidences);
            println!("duration_s {duration}");
            if duration > 0.0 {
                println!("coincidence_rate_cps {:.3}", corr.coincidences as f64 / duration);
            }
            println!("signal_rate_cps {rs:.3}");
            println!("idler_rate_cps {ri:.3}");
            println!("accidental_rate_cps {acc:.3}");
            if common.out.is_some() {
                let path = out_dir(&cfg)?.join("histogram.csv");
                write_histogram_csv(&path, &corr.histogram)?;
                println!("wrote {}", path.display());
            }
        }
        Command::Metrics { common, input, pair_rate_cps, signal_rate_cps, idler_rate_cps, pump_power_mw, v_hv, v_ad } => {
            let bandwidth = common.bandwidth_nm.unwrap_or(3.0);
            let (rc, rs, ri) = match &input {
                Some(path) => rates_from_file(path, &common)?,
                None => (pair_rate_cps, signal_rate_cps, idler_rate_cps),
            };
            let r = rate_metrics(rc, rs, ri, pump_power_mw, bandwidth)?;
            println!("pair_rate_norm_cps_per_mw {:.3}", r.pair_rate_norm);
            println!("spectral_brightness_cps_per_mw_nm {:.3}", r.spectral_brightness);
            println!("heralding {:.6}", r.heralding);
            println!("heralding_symmetric {:.6}", r.heralding_symmetric);
            if let (Some(h), Some(a)) = (v_hv, v_ad) {
                let f = fidelity_bound(h, a)?;
                println!("fidelity_bound {f:.6}");
                println!("concurrence_bound {:.6}", concurrence_bound(f)?);
            }
        }
        Command::ReproducePaper(common) => {
            let mut cfg = load(&common)?;
            if let Some(bw) = common.bandwidth_nm {
                cfg.reproduce.narrow_filter_nm = bw;
            }
            let report = pipeline::run_experiment(&cfg)?;
            print!("{}", metrics_table(&report));
            println!("wrote {} files and manifest.toml to {}", report.files.len(), report.out_dir.display());
        }
        Command::Calibrate { common, target } => {
            let cfg = load(&common)?;
            let target = target.unwrap_or(cfg.reproduce.target_v_ad);
            let base = cfg.source_config()?;
            let cal = pipeline::calibrate_dispersion(target, &base, cfg.scan.steps)?;
            println!("c2_rad_per_nm2 {}", cal.c2);
            println!("v_ad {:.6}", cal.v_ad);
            println!("evaluations {}", cal.evaluations);
        }
    }
    Ok(())
}

fn rates(signal: usize, idler: usize, duration_s: f64) -> (f64, f64) {
    if duration_s > 0.0 {
        (signal as f64 / duration_s, idler as f64 / duration_s)
    } else {
        (0.0, 0.0)
    }
}

/// Accidental-subtracted pair rate and singles rates of a tag file.
fn rates_from_file(path: &Path, common: &Common) -> Result<(f64, f64, f64), Error> {
    let window = common.window_ns.unwrap_or(3.0);
    let stream = ttag::read_file(path)?;
    let duration = common.duration_s.unwrap_or(stream.duration_s);
    let corr = correlate_window(&stream, window)?;
    let (rs, ri) = rates(stream.count(Channel::Signal), stream.count(Channel::Idler), duration);
    let rc = if duration > 0.0 { corr.coincidences as f64 / duration } else { 0.0 };
    Ok(((rc - accidentals(rs, ri, window)).max(0.0), rs, ri))
}
