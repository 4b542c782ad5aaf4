use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use hofbutter::butterfly::{
    build_diagram, detect_coloring_errors, encode_ppm, labelled_spectrum, parse_angle, read_jsonl, render,
    write_jsonl, ButterflyConfig, ButterflyDiagram, ConfigFile,
};
use hofbutter::chern::{gap_chern, gap_cherns_fhs, ChernMethod, DEFAULT_GRID};
use hofbutter::diophantine::{assign_by_rule, solve_residue, Strategy};
use hofbutter::magnetic_algebra::{Flux, HofstadterModel};
use hofbutter::spectrum::GapRecord;
use hofbutter::verify::{self, Suite};

#[derive(Parser)]
#[command(name = "hofbutter", version, about = "Hofstadter butterfly on the triangular lattice")]
struct Cli {
    /// TOML file whose keys are the long flag names; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bands and gaps at one flux.
    Spectrum(SpectrumArgs),
    /// Chern number of one gap, or of every open gap.
    Chern(ChernArgs),
    /// Diophantine candidates and the resolved Chern number per gap.
    Dioph(DiophArgs),
    /// Sweep all fluxes up to a denominator and write or render the diagram.
    Butterfly(ButterflyArgs),
    /// Run invariant suites; exits nonzero on any failure.
    Verify(VerifyArgs),
}

#[derive(Args, Clone)]
struct ModelArgs {
    #[arg(long)]
    p: Option<u64>,
    #[arg(long)]
    q: Option<u64>,
    /// Radians, or a multiple of pi such as `pi/2`.
    #[arg(long, allow_hyphen_values = true)]
    phi_d: Option<String>,
    #[arg(long)]
    t1: Option<f64>,
    #[arg(long)]
    t2: Option<f64>,
    #[arg(long)]
    t3: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Ppm,
}

impl std::str::FromStr for Format {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        <Format as ValueEnum>::from_str(s, false).map_err(|e| anyhow::anyhow!("bad format {s:?}: {e}"))
    }
}

#[derive(Args)]
struct SpectrumArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    resolver: Option<String>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    eps_gap: Option<f64>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ChernArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Gap index; every open interior gap when omitted.
    #[arg(long)]
    gap: Option<usize>,
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    grid: Option<usize>,
    /// Print JSON lines instead of a table.
    #[arg(long)]
    json: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DiophArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Gap index; every gap when omitted.
    #[arg(long)]
    j: Option<u64>,
    #[arg(long, alias = "resolver")]
    strategy: Option<String>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ButterflyArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    qmax: Option<u64>,
    #[arg(long)]
    resolver: Option<String>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    mu_bins: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    #[arg(long)]
    computed_threshold: Option<u64>,
    /// flux, value or none.
    #[arg(long)]
    exclusions: Option<String>,
    #[arg(long)]
    eps_gap: Option<f64>,
    #[arg(long)]
    row_scale: Option<f64>,
    #[arg(long)]
    e_max: Option<f64>,
    #[arg(long)]
    palette_period: Option<u64>,
    /// Worker threads; all cores when 0 or omitted.
    #[arg(long)]
    jobs: Option<usize>,
    /// `json` writes JSON lines, `ppm` renders the image.
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also render the diagram to this PPM file.
    #[arg(long)]
    render: Option<PathBuf>,
    /// Read the diagram from a JSON-lines file instead of computing it.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Run the Streda cross-check and print the suspect pairs to stderr.
    #[arg(long)]
    check: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path).with_context(|| format!("reading {}", path.display()))?,
        None => ConfigFile::default(),
    };
    match cli.command {
        Command::Spectrum(a) => spectrum(&file, a),
        Command::Chern(a) => chern(&file, a),
        Command::Dioph(a) => dioph(&file, a),
        Command::Butterfly(a) => butterfly(&file, a),
        Command::Verify(a) => verify_cmd(a),
    }
}

/// File values with command line overrides, as a sweep config.
fn base_config(file: &ConfigFile, m: &ModelArgs) -> Result<ButterflyConfig> {
    let mut config = ButterflyConfig::default();
    file.apply(&mut config)?;
    if let Some(v) = &m.phi_d {
        config.phi_d = parse_angle(v)?;
    }
    for (slot, v) in config.t.iter_mut().zip([m.t1, m.t2, m.t3]) {
        if let Some(v) = v {
            *slot = v;
        }
    }
    Ok(config)
}

fn flux_of(file: &ConfigFile, m: &ModelArgs) -> Result<Flux> {
    let p = m.p.or(file.p).context("--p is required")?;
    let q = m.q.or(file.q).context("--q is required")?;
    Ok(Flux::new(p, q)?)
}

fn output(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) if p != Path::new("-") => {
            Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?))
        }
        _ => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn format_of(cli: Option<Format>, file: &ConfigFile, default: Format) -> Result<Format> {
    match (cli, &file.format) {
        (Some(f), _) => Ok(f),
        (None, Some(s)) => s.parse(),
        (None, None) => Ok(default),
    }
}

#[derive(Serialize)]
struct SpectrumExport<'a> {
    p: u64,
    q: u64,
    phi_d: f64,
    t: [f64; 3],
    bands: &'a [[f64; 2]],
    gaps: &'a [GapRecord],
}

fn spectrum(file: &ConfigFile, a: SpectrumArgs) -> Result<ExitCode> {
    let mut config = base_config(file, &a.model)?;
    if let Some(v) = &a.resolver {
        config.resolver = v.parse()?;
    }
    if let Some(v) = a.grid {
        config.grid = v;
    }
    if let Some(v) = a.eps_gap {
        config.eps_gap = v;
    }
    config.validate()?;
    let flux = flux_of(file, &a.model)?;
    let (spec, gaps, message) = labelled_spectrum(&config, flux)?;
    if let Some(m) = message {
        eprintln!("warning: {m}");
    }
    let mut out = output(a.out.as_ref().or(file.out.as_ref()))?;
    match format_of(a.format, file, Format::Json)? {
        Format::Json => {
            let export = SpectrumExport {
                p: flux.p(),
                q: flux.q(),
                phi_d: config.phi_d,
                t: config.t,
                bands: &spec.bands,
                gaps: &gaps,
            };
            serde_json::to_writer(&mut out, &export)?;
            writeln!(out)?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["p", "q", "j", "lo", "hi", "width", "closed", "chern", "source"])?;
            for g in &gaps {
                w.write_record([
                    g.p.to_string(),
                    g.q.to_string(),
                    g.j.to_string(),
                    finite(g.lo),
                    finite(g.hi),
                    finite(g.width),
                    g.closed.to_string(),
                    g.chern.map(|c| c.to_string()).unwrap_or_default(),
                    g.source.as_str().to_string(),
                ])?;
            }
            w.flush()?;
            return Ok(ExitCode::SUCCESS);
        }
        Format::Ppm => bail!("spectrum supports json and csv"),
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

/// Infinite interval ends are left empty.
fn finite(v: f64) -> String {
    if v.is_finite() {
        v.to_string()
    } else {
        String::new()
    }
}

#[derive(Serialize)]
struct ChernLine {
    j: usize,
    chern: i64,
    method: ChernMethod,
    grid: usize,
    residual: f64,
}

fn chern(file: &ConfigFile, a: ChernArgs) -> Result<ExitCode> {
    let config = base_config(file, &a.model)?;
    let flux = flux_of(file, &a.model)?;
    let model = HofstadterModel::new(flux, config.phi_d, config.t)?;
    let method: ChernMethod = a.method.as_ref().or(file.method.as_ref()).map_or(Ok(ChernMethod::Fhs), |m| m.parse())?;
    let grid = a.grid.or(file.grid).unwrap_or(DEFAULT_GRID);
    let gaps: Vec<usize> = match a.gap {
        Some(j) => vec![j],
        None => {
            let (_, gaps, _) = labelled_spectrum(&ButterflyConfig { resolver: Strategy::Square, computed_threshold: 0, ..config.clone() }, flux)?;
            gaps.iter().filter(|g| !g.closed && !g.is_semi_infinite()).map(|g| g.j as usize).collect()
        }
    };
    let mut out = output(a.out.as_ref().or(file.out.as_ref()))?;
    if !a.json {
        writeln!(out, "{:>4} {:>6} {:>10} {:>6} {:>10}", "j", "chern", "method", "grid", "residual")?;
    }
    let results = match method {
        ChernMethod::Fhs if a.gap.is_none() => gap_cherns_fhs(&model, &gaps, grid)?,
        _ => gaps.iter().map(|&j| gap_chern(&model, j, method, grid)).collect::<hofbutter::Result<_>>()?,
    };
    for (j, r) in gaps.into_iter().zip(results) {
        let line = ChernLine { j, chern: r.value, method, grid: r.grid, residual: r.residual };
        if a.json {
            serde_json::to_writer(&mut out, &line)?;
            writeln!(out)?;
        } else {
            let m = if method == ChernMethod::Fhs { "fhs" } else { "transport" };
            writeln!(out, "{:>4} {:>6} {:>10} {:>6} {:>10.2e}", j, r.value, m, r.grid, r.residual)?;
        }
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct DiophLine {
    p: u64,
    q: u64,
    j: u64,
    /// `sigma = s j mod q`.
    residue: u64,
    strategy: Strategy,
    sigma: Option<i64>,
    closed: bool,
}

fn dioph(file: &ConfigFile, a: DiophArgs) -> Result<ExitCode> {
    let mut config = base_config(file, &a.model)?;
    let flux = flux_of(file, &a.model)?;
    let strategy: Strategy = a.strategy.as_ref().or(file.resolver.as_ref()).map_or(Ok(Strategy::Triangular), |s| s.parse())?;
    config.resolver = strategy;
    config.computed_threshold = 0;
    config.exclusions = hofbutter::butterfly::ExclusionReading::None;
    if let Some(g) = a.grid {
        config.grid = g;
    }
    let (_, gaps, message) = labelled_spectrum(&config, flux)?;
    if let Some(m) = message {
        eprintln!("warning: {m}");
    }
    let selected: Vec<&GapRecord> = match a.j {
        Some(j) if j > flux.q() => bail!("gap index {j} exceeds q = {}", flux.q()),
        Some(j) => vec![&gaps[j as usize]],
        None => gaps.iter().collect(),
    };
    let mut out = output(a.out.as_ref().or(file.out.as_ref()))?;
    for g in selected {
        let sigma = match strategy {
            Strategy::Computed => g.chern,
            _ => assign_by_rule(strategy, flux, g.j)?,
        };
        let line = DiophLine {
            p: flux.p(),
            q: flux.q(),
            j: g.j,
            residue: solve_residue(g.j, flux)?.r(),
            strategy,
            sigma,
            closed: g.closed,
        };
        serde_json::to_writer(&mut out, &line)?;
        writeln!(out)?;
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn butterfly_config(file: &ConfigFile, a: &ButterflyArgs) -> Result<ButterflyConfig> {
    let mut c = base_config(file, &a.model)?;
    if let Some(v) = a.qmax {
        c.q_max = v;
    }
    if let Some(v) = &a.resolver {
        c.resolver = v.parse()?;
    }
    if let Some(v) = a.grid {
        c.grid = v;
    }
    if let Some(v) = a.mu_bins {
        c.mu_bins = v;
    }
    if let Some(v) = a.height {
        c.height = v;
    }
    if let Some(v) = a.computed_threshold {
        c.computed_threshold = v;
    }
    if let Some(v) = &a.exclusions {
        c.exclusions = v.parse()?;
    }
    if let Some(v) = a.eps_gap {
        c.eps_gap = v;
    }
    if let Some(v) = a.row_scale {
        c.row_scale = v;
    }
    if a.e_max.is_some() {
        c.e_max = a.e_max;
    }
    if a.palette_period.is_some() {
        c.palette_period = a.palette_period;
    }
    if let Some(v) = a.jobs {
        c.jobs = v;
    }
    c.validate()?;
    Ok(c)
}

fn write_ppm(diagram: &ButterflyDiagram, path: Option<&PathBuf>) -> Result<()> {
    let bytes = encode_ppm(&render(diagram))?;
    let mut out = output(path)?;
    out.write_all(&bytes)?;
    out.flush()?;
    Ok(())
}

fn butterfly(file: &ConfigFile, a: ButterflyArgs) -> Result<ExitCode> {
    let config = butterfly_config(file, &a)?;
    let diagram = match &a.input {
        Some(path) => {
            let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            let mut d = read_jsonl(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))?;
            // rendering options may differ from the stored run
            d.config.mu_bins = config.mu_bins;
            d.config.height = config.height;
            d.config.row_scale = config.row_scale;
            d.config.e_max = config.e_max;
            d.config.palette_period = config.palette_period;
            d
        }
        None => build_diagram(&config)?,
    };
    for e in diagram.entries.iter().filter(|e| e.error.is_some()) {
        eprintln!("warning: {}/{}: {}", e.p, e.q, e.error.as_deref().unwrap_or_default());
    }
    let out_path = a.out.as_ref().or(file.out.as_ref());
    match format_of(a.format, file, Format::Json)? {
        Format::Json => {
            let mut out = output(out_path)?;
            write_jsonl(&diagram, &mut out)?;
            out.flush()?;
        }
        Format::Ppm => write_ppm(&diagram, out_path)?,
        Format::Csv => bail!("butterfly supports json and ppm"),
    }
    if let Some(path) = &a.render {
        write_ppm(&diagram, Some(path))?;
    }
    if a.check {
        let report = detect_coloring_errors(&diagram);
        eprintln!(
            "streda check: {} flux pairs, {} overlapping gap pairs, {} inconsistent",
            report.flux_pairs,
            report.gap_pairs,
            report.inconsistent.len()
        );
        for pair in &report.inconsistent {
            let show = |g: &GapRecord| format!("{}/{} j={} sigma={:?}", g.p, g.q, g.j, g.chern);
            eprintln!("  {} <-> {}", show(&pair.a), show(&pair.b));
        }
        if !report.is_clean() {
            return Ok(ExitCode::from(1));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn verify_cmd(a: VerifyArgs) -> Result<ExitCode> {
    let suite: Suite = a.suite.parse()?;
    let checks = verify::run(suite);
    let mut out = io::stdout().lock();
    for c in &checks {
        if a.json {
            serde_json::to_writer(&mut out, c)?;
            writeln!(out)?;
        } else {
            let status = if c.passed { "PASS" } else { "FAIL" };
            writeln!(out, "{status} [{}] {}: {}", serde_json::to_value(c.suite)?.as_str().unwrap_or(""), c.name, c.detail)?;
        }
    }
    Ok(if checks.iter().all(|c| c.passed) { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
