//! Command-line front end. Exit codes: 0 success, 1 usage or I/O error,
//! 2 numeric-domain error.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::json;

use crate::analysis::{c0_lower_bound, figure_scale_check, scaling_convergence};
use crate::discreteness::{bq_search, markov_third_trace, OracleBudget, TraceTriple};
use crate::error::{Error, Result};
use crate::groups::{cfn_generators, earle_generators, trace_w21, CfnParams, EarleParam};
use crate::moebius::MoebiusMatrix;
use crate::output;
use crate::presets::preset_group;
use crate::raster::{dehn_twist_spot_check, flood_components, render, RootPolicy, SliceSpec};
use crate::words::{evaluate_word, special_word, FareySlope};

fn parse_complex(s: &str) -> std::result::Result<Complex64, String> {
    let (re, im) = match s.split_once(',') {
        Some((re, im)) => (re.trim(), im.trim()),
        None => (s.trim(), "0"),
    };
    let re: f64 = re.parse().map_err(|_| format!("bad real part in {s:?}"))?;
    let im: f64 = im.parse().map_err(|_| format!("bad imaginary part in {s:?}"))?;
    Ok(Complex64::new(re, im))
}

#[derive(Parser, Debug)]
#[command(
    name = "qfslice",
    version,
    about = "Linear slices of the quasifuchsian space of once-punctured tori"
)]
struct Cli {
    /// flat key=value file supplying defaults for any flag
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct TraceArg {
    /// fixed trace of the first generator (>= 2)
    #[arg(long = "trA")]
    tr_a: Option<f64>,

    /// geodesic length c; sets trA = 2 cosh(c/2)
    #[arg(long)]
    length: Option<f64>,
}

#[derive(Args, Debug, Clone)]
struct WindowArgs {
    #[command(flatten)]
    trace: TraceArg,

    /// window center "re,im" (default: the tau = 0 point on the real axis)
    #[arg(long, value_parser = parse_complex)]
    center: Option<Complex64>,

    /// window width
    #[arg(long)]
    width: Option<f64>,

    /// pixels per side
    #[arg(long)]
    res: Option<u32>,

    /// which Markov root(s) to test: plus | minus | both
    #[arg(long)]
    root: Option<String>,
}

#[derive(Args, Debug, Clone)]
struct BudgetArgs {
    /// tree depth limit
    #[arg(long)]
    depth: Option<u32>,

    /// growth threshold for pruning (> 2)
    #[arg(long)]
    grow: Option<f64>,

    /// hard stop magnitude
    #[arg(long)]
    stop: Option<f64>,

    /// tolerance for real/parabolic tests
    #[arg(long)]
    eps: Option<f64>,

    /// cap on tree nodes per point
    #[arg(long)]
    nodes: Option<u64>,
}

#[derive(Args, Debug, Clone)]
struct OutArgs {
    /// output directory
    #[arg(long)]
    out: Option<PathBuf>,

    /// image format: pgm | png
    #[arg(long)]
    format: Option<String>,

    /// print machine-readable JSON summaries
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render a slice window and write the image plus metadata sidecar
    Render {
        #[command(flatten)]
        window: WindowArgs,
        #[command(flatten)]
        budget: BudgetArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Render, label connected components, and write reports
    Components {
        #[command(flatten)]
        window: WindowArgs,
        #[command(flatten)]
        budget: BudgetArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run the discreteness oracle at a single point
    Probe {
        #[command(flatten)]
        trace: TraceArg,
        /// TrB as "re,im"
        #[arg(long = "trB", value_parser = parse_complex)]
        tr_b: Option<Complex64>,
        #[command(flatten)]
        budget: BudgetArgs,
        /// root policy: plus | minus | both
        #[arg(long)]
        root: Option<String>,
    },
    /// Print the canonical word of a slope, and its trace at given group
    /// parameters
    #[command(name = "farey-word")]
    FareyWord {
        /// slope p/q
        slope: String,
        /// complex length "re,im" of the first generator
        #[arg(long, value_parser = parse_complex)]
        lambda: Option<Complex64>,
        /// complex twist "re,im"
        #[arg(long, value_parser = parse_complex)]
        tau: Option<Complex64>,
    },
    /// Emit the Fenchel-Nielsen generator matrices as JSON
    Gens {
        #[arg(long, value_parser = parse_complex)]
        lambda: Option<Complex64>,
        #[arg(long, value_parser = parse_complex)]
        tau: Option<Complex64>,
    },
    /// Emit the symmetric-slice generator matrices as JSON
    Earle {
        /// slice parameter "re,im"
        #[arg(long, value_parser = parse_complex)]
        d: Option<Complex64>,
    },
    /// Print the closed-form constants as JSON
    Constants {
        /// comma-separated trA list for scaling constants
        #[arg(long = "trA", value_delimiter = ',')]
        tr_a: Vec<f64>,
    },
    /// Print the trace-ratio table of the twist orbit as CSV
    Scaling {
        #[arg(long = "trA")]
        tr_a: Option<f64>,
        #[arg(long = "trB", value_parser = parse_complex)]
        tr_b: Option<Complex64>,
        /// number of ratios
        #[arg(long)]
        n: Option<u32>,
    },
    /// Render and spot-check twist invariance of the accepted region
    #[command(name = "twist-check")]
    TwistCheck {
        #[command(flatten)]
        window: WindowArgs,
        #[command(flatten)]
        budget: BudgetArgs,
        /// number of sampled pixels
        #[arg(long)]
        samples: Option<u32>,
        /// twist power n
        #[arg(long)]
        twist: Option<i32>,
        #[arg(long)]
        json: bool,
    },
    /// Batch-render the preset slice views
    Figures {
        /// maskit | trace2.5 | trace8 | trace100 | all
        #[arg(long)]
        which: String,
        /// override preset resolution
        #[arg(long)]
        res: Option<u32>,
        #[command(flatten)]
        budget: BudgetArgs,
        #[command(flatten)]
        out: OutArgs,
    },
}

/// Defaults from a flat key=value file; command-line flags win.
#[derive(Default)]
struct Config(HashMap<String, String>);

impl Config {
    fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Config::default());
        };
        let text = fs::read_to_string(path)?;
        let mut map = HashMap::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::invalid(format!("config line without '=': {line:?}")));
            };
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Config(map))
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| Error::invalid(format!("config {key}={v:?} does not parse"))),
        }
    }

    fn get_complex(&self, key: &str) -> Result<Option<Complex64>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => parse_complex(v).map(Some).map_err(Error::InvalidInput),
        }
    }
}

/// Explicit flag wins, otherwise the config value.
fn flag_or<T: std::str::FromStr>(flag: Option<T>, cfg: &Config, key: &str) -> Result<Option<T>> {
    match flag {
        Some(v) => Ok(Some(v)),
        None => cfg.get(key),
    }
}

fn resolve_trace(arg: &TraceArg, cfg: &Config) -> Result<(f64, serde_json::Value)> {
    let tr_a = flag_or(arg.tr_a, cfg, "trA")?;
    let length = flag_or(arg.length, cfg, "length")?;
    match (tr_a, length) {
        (Some(t), _) => Ok((t, json!({"trA": t, "length": length}))),
        (None, Some(c)) => {
            let t = 2.0 * (c / 2.0).cosh();
            Ok((t, json!({"trA": t, "length": c})))
        }
        (None, None) => Err(Error::invalid("one of --trA or --length is required")),
    }
}

fn resolve_budget(args: &BudgetArgs, cfg: &Config) -> Result<OracleBudget> {
    let d = OracleBudget::default();
    let budget = OracleBudget {
        max_depth: flag_or(args.depth, cfg, "depth")?.unwrap_or(d.max_depth),
        grow_threshold: flag_or(args.grow, cfg, "grow")?.unwrap_or(d.grow_threshold),
        stop_magnitude: flag_or(args.stop, cfg, "stop")?.unwrap_or(d.stop_magnitude),
        eps_real: flag_or(args.eps, cfg, "eps")?.unwrap_or(d.eps_real),
        max_nodes: flag_or(args.nodes, cfg, "nodes")?.unwrap_or(d.max_nodes),
    };
    budget.validate()?;
    Ok(budget)
}

fn resolve_root(flag: &Option<String>, cfg: &Config) -> Result<RootPolicy> {
    match flag_or(flag.clone(), cfg, "root")? {
        Some(s) => s.parse(),
        None => Ok(RootPolicy::Plus),
    }
}

fn default_center(tr_a: f64) -> Complex64 {
    if tr_a > 2.0 {
        Complex64::new(2.0 * tr_a / (tr_a * tr_a - 4.0).sqrt(), 0.0)
    } else {
        Complex64::new(2.0, 0.0)
    }
}

fn resolve_window(
    window: &WindowArgs,
    budget: &BudgetArgs,
    cfg: &Config,
) -> Result<(SliceSpec, serde_json::Value)> {
    let (tr_a, trace_inputs) = resolve_trace(&window.trace, cfg)?;
    let center = match window.center {
        Some(c) => c,
        None => cfg.get_complex("center")?.unwrap_or_else(|| default_center(tr_a)),
    };
    let width = flag_or(window.width, cfg, "width")?
        .ok_or_else(|| Error::invalid("--width is required"))?;
    let res = flag_or(window.res, cfg, "res")?.unwrap_or(512);
    let budget = resolve_budget(budget, cfg)?;
    let root = resolve_root(&window.root, cfg)?;
    let spec = SliceSpec::new(tr_a, center, width, res, budget, root)?;
    let inputs = json!({
        "trace": trace_inputs,
        "center": [center.re, center.im],
        "width": width,
        "res": res,
    });
    Ok((spec, inputs))
}

fn out_dir(out: &Option<PathBuf>, cfg: &Config) -> Result<PathBuf> {
    let dir = match out {
        Some(d) => d.clone(),
        None => cfg.get::<PathBuf>("out")?.unwrap_or_else(|| PathBuf::from(".")),
    };
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn image_format(out: &OutArgs, cfg: &Config) -> Result<String> {
    let f = match &out.format {
        Some(f) => f.clone(),
        None => cfg.get("format")?.unwrap_or_else(|| "pgm".to_string()),
    };
    if f != "pgm" && f != "png" {
        return Err(Error::invalid(format!("unknown format {f:?}")));
    }
    Ok(f)
}

fn matrix_json(m: &MoebiusMatrix) -> serde_json::Value {
    json!([[m.a, m.b], [m.c, m.d]])
}

fn slice_stem(spec: &SliceSpec) -> String {
    format!("slice-trA{}-w{}-r{}", spec.tr_a, spec.width, spec.resolution)
}

fn write_images(
    spec: &SliceSpec,
    grid: &crate::raster::PixelGrid,
    inputs: &serde_json::Value,
    dir: &Path,
    format: &str,
    stem: &str,
) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let img_path = dir.join(format!("{stem}.{format}"));
    match format {
        "png" => output::write_png(grid, &img_path)?,
        _ => output::write_pgm(grid, &img_path)?,
    }
    written.push(img_path);
    let meta_path = dir.join(format!("{stem}.json"));
    output::write_json(&output::sidecar_json(grid, inputs.clone()), &meta_path)?;
    written.push(meta_path);
    let _ = spec;
    Ok(written)
}

fn state_counts(grid: &crate::raster::PixelGrid) -> serde_json::Value {
    use crate::raster::CellState::*;
    let mut counts = [0u64; 4];
    for &c in grid.cells() {
        let i = match c {
            DiscreteLikely => 0,
            Indiscrete => 1,
            Indeterminate => 2,
            OutOfDomain => 3,
        };
        counts[i] += 1;
    }
    json!({
        "discrete_likely": counts[0],
        "indiscrete": counts[1],
        "indeterminate": counts[2],
        "out_of_domain": counts[3],
    })
}

fn init_worker_pool() {
    if let Ok(v) = std::env::var("QFSLICE_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

/// Parses argv, dispatches, and maps errors to exit codes.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    init_worker_pool();
    match dispatch(cli) {
        Ok(()) => 0,
        Err(Error::Domain(msg)) => {
            eprintln!("error: out of domain: {msg}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let cfg = Config::load(cli.config.as_deref())?;
    match cli.command {
        Command::Render { window, budget, out } => {
            let (spec, inputs) = resolve_window(&window, &budget, &cfg)?;
            let dir = out_dir(&out.out, &cfg)?;
            let format = image_format(&out, &cfg)?;
            let grid = render(&spec);
            let stem = slice_stem(&spec);
            let written = write_images(&spec, &grid, &inputs, &dir, &format, &stem)?;
            let summary = json!({
                "written": written,
                "counts": state_counts(&grid),
            });
            if out.json {
                println!("{}", serde_json::to_string_pretty(&summary).expect("json"));
            } else {
                for p in &written {
                    println!("wrote {}", p.display());
                }
                println!("counts: {}", state_counts(&grid));
            }
            Ok(())
        }
        Command::Components { window, budget, out } => {
            let (spec, inputs) = resolve_window(&window, &budget, &cfg)?;
            let dir = out_dir(&out.out, &cfg)?;
            let format = image_format(&out, &cfg)?;
            let mut grid = render(&spec);
            let reports = flood_components(&mut grid);
            let stem = slice_stem(&spec);
            let mut written = write_images(&spec, &grid, &inputs, &dir, &format, &stem)?;
            let json_path = dir.join(format!("{stem}-components.json"));
            output::write_json(&output::components_json(&reports), &json_path)?;
            written.push(json_path);
            let csv_path = dir.join(format!("{stem}-components.csv"));
            fs::write(&csv_path, output::components_csv(&reports))?;
            written.push(csv_path);
            if out.json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&json!({
                        "written": written,
                        "components": output::components_json(&reports),
                    }))
                    .expect("json")
                );
            } else {
                for p in &written {
                    println!("wrote {}", p.display());
                }
                println!("{} component(s)", reports.len());
                for r in &reports {
                    println!(
                        "  label {} pixels {} centroid ({:.4}, {:.4}) euler {}{}",
                        r.label,
                        r.pixels,
                        r.centroid_re,
                        r.centroid_im,
                        r.euler_characteristic,
                        if r.standard { " standard" } else { "" }
                    );
                }
            }
            Ok(())
        }
        Command::Probe { trace, tr_b, budget, root } => {
            let (tr_a, _) = resolve_trace(&trace, &cfg)?;
            let tr_b = match tr_b {
                Some(w) => w,
                None => cfg
                    .get_complex("trB")?
                    .ok_or_else(|| Error::invalid("--trB is required"))?,
            };
            let budget = resolve_budget(&budget, &cfg)?;
            let policy = resolve_root(&root, &cfg)?;
            let x = Complex64::new(tr_a, 0.0);
            let (zp, zm) = markov_third_trace(x, tr_b);
            let probe_root = |z: Complex64| -> Result<serde_json::Value> {
                let t = TraceTriple::new(x, tr_b, z)?;
                let v = bq_search(&t, &budget)?;
                Ok(json!({"trAB": z, "verdict": v}))
            };
            let state = crate::raster::classify_point(tr_a, tr_b, &budget, policy);
            let report = json!({
                "trA": tr_a,
                "trB": tr_b,
                "policy": policy,
                "classification": state,
                "plus": probe_root(zp)?,
                "minus": probe_root(zm)?,
            });
            println!("{}", serde_json::to_string_pretty(&report).expect("json"));
            Ok(())
        }
        Command::FareyWord { slope, lambda, tau } => {
            let slope: FareySlope = slope.parse()?;
            let word = special_word(slope)?;
            println!("W({slope}) = {word}  (length {})", word.len());
            let lambda = lambda.map(Ok).unwrap_or_else(|| cfg.get_complex("lambda").map(|o| o.unwrap_or_default()))?;
            if lambda != Complex64::default() {
                let tau = tau.or(cfg.get_complex("tau")?).unwrap_or_default();
                let pair = cfn_generators(&CfnParams::new(lambda, tau)?);
                let tr = evaluate_word(&word, &pair.a, &pair.b).trace();
                println!("trace at (lambda={lambda}, tau={tau}): {tr}");
            }
            Ok(())
        }
        Command::Gens { lambda, tau } => {
            let lambda = match lambda {
                Some(l) => l,
                None => cfg
                    .get_complex("lambda")?
                    .ok_or_else(|| Error::invalid("--lambda is required"))?,
            };
            let tau = tau.or(cfg.get_complex("tau")?).unwrap_or_default();
            let pair = cfn_generators(&CfnParams::new(lambda, tau)?);
            let (x, y, z) = pair.trace_triple();
            let k = pair.a.commutator(&pair.b);
            let report = json!({
                "lambda": lambda,
                "tau": tau,
                "A": matrix_json(&pair.a),
                "B": matrix_json(&pair.b),
                "traces": {"trA": x, "trB": y, "trAB": z, "commutator": k.trace()},
            });
            println!("{}", serde_json::to_string_pretty(&report).expect("json"));
            Ok(())
        }
        Command::Earle { d } => {
            let d = match d {
                Some(d) => d,
                None => cfg
                    .get_complex("d")?
                    .ok_or_else(|| Error::invalid("--d is required"))?,
            };
            let param = EarleParam::new(d)?;
            let pair = earle_generators(&param);
            let (x, y, z) = pair.trace_triple();
            let report = json!({
                "d": d,
                "A": matrix_json(&pair.a),
                "B": matrix_json(&pair.b),
                "traces": {"trA": x, "trB": y, "trAB": z},
                "trace_W21": trace_w21(&param),
            });
            println!("{}", serde_json::to_string_pretty(&report).expect("json"));
            Ok(())
        }
        Command::Constants { tr_a } => {
            let list = if tr_a.is_empty() { vec![8.0, 100.0] } else { tr_a };
            let mut scaling = Vec::new();
            for t in list {
                scaling.push(figure_scale_check(t)?);
            }
            let report = json!({
                "c0_lower_bound": c0_lower_bound(),
                "scaling": scaling,
            });
            println!("{}", serde_json::to_string_pretty(&report).expect("json"));
            Ok(())
        }
        Command::Scaling { tr_a, tr_b, n } => {
            let tr_a = flag_or(tr_a, &cfg, "trA")?
                .ok_or_else(|| Error::invalid("--trA is required"))?;
            let tr_b = match tr_b {
                Some(w) => w,
                None => cfg
                    .get_complex("trB")?
                    .ok_or_else(|| Error::invalid("--trB is required"))?,
            };
            let n = flag_or(n, &cfg, "n")?.unwrap_or(60);
            let rep = scaling_convergence(tr_a, tr_b, n)?;
            println!("n,ratio_re,ratio_im,abs_err");
            for (i, r) in rep.ratios.iter().enumerate() {
                println!("{},{},{},{}", i + 1, r.re, r.im, (r - rep.limit).norm());
            }
            eprintln!(
                "limit = {}, converged_at = {:?}, degenerate = {}",
                rep.limit.re, rep.converged_at, rep.degenerate
            );
            Ok(())
        }
        Command::TwistCheck { window, budget, samples, twist, json: as_json } => {
            let (spec, _) = resolve_window(&window, &budget, &cfg)?;
            let samples = flag_or(samples, &cfg, "samples")?.unwrap_or(100);
            let twist = flag_or(twist, &cfg, "twist")?.unwrap_or(1);
            let grid = render(&spec);
            let rep = dehn_twist_spot_check(&grid, samples, twist, 0x5eed);
            if as_json {
                println!("{}", serde_json::to_string_pretty(&rep).expect("json"));
            } else {
                println!(
                    "twist n = {}: {} / {} twisted samples stayed accepted (discrepancy rate {:.4})",
                    rep.twist_power, rep.agreements, rep.samples_used, rep.rate
                );
            }
            Ok(())
        }
        Command::Figures { which, res, budget, out } => {
            let budget = resolve_budget(&budget, &cfg)?;
            let dir = out_dir(&out.out, &cfg)?;
            let format = image_format(&out, &cfg)?;
            let mut written = Vec::new();
            for preset in preset_group(&which)? {
                let spec = preset.spec(budget, res)?;
                let grid = render(&spec);
                let stem = format!("{}-w{}", preset.name, spec.width);
                let inputs = json!({
                    "preset": preset.name,
                    "trA": spec.tr_a,
                    "center": [spec.center.re, spec.center.im],
                    "width": spec.width,
                    "res": spec.resolution,
                });
                written.extend(write_images(&spec, &grid, &inputs, &dir, &format, &stem)?);
            }
            if out.json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&json!({"written": written})).expect("json")
                );
            } else {
                for p in &written {
                    println!("wrote {}", p.display());
                }
            }
            Ok(())
        }
    }
}
