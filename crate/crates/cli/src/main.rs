use clap::{Args, Parser, Subcommand};
use dhopf::model::{load_model, model_from_doc, Model, ModelDoc, ModelError, Param};
use dhopf::normalform::{assemble, NormalFormConfig, NormalFormError};
use dhopf::simulator::{self as sim, AttractorConfig, CosineInit, Grid, SimError, SimSpec};
use dhopf::spectrum::{
    find_double_hopf, hopf_curve, sweep_param, write_branch_csv, BranchId, DoubleHopfPoint, NondegeneracyConfig,
    SpectrumError, Sweep,
};
use dhopf::unfolding::{gnuplot_script, region_of, unfold, write_lines_csv, UnfoldingError};
use serde_json::json;
use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_HYPOTHESIS: u8 = 3;
const EXIT_DEGENERATE: u8 = 4;

#[derive(Parser)]
#[command(name = "dhopf", version, about = "Double Hopf analysis of delayed reaction-diffusion systems")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Trace Hopf branches (critical delay against the other parameter).
    Hopf(HopfArgs),
    /// Locate intersections of two Hopf branches and check the hypotheses.
    Doublehopf(DoubleHopfArgs),
    /// Normal form, unfolding class and bifurcation set at a double Hopf point.
    Normalform(NormalFormArgs),
    /// Integrate the delayed PDE and classify the attractor.
    Simulate(SimulateArgs),
}

#[derive(Args, Clone)]
struct Common {
    /// `epidemic`, `predprey`, or a JSON model document.
    #[arg(long)]
    model: String,
    /// Built-in overrides, `name=value,...`.
    #[arg(long)]
    params: Option<String>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[command(flatten)]
    tol: Tolerances,
}

#[derive(Args, Clone, Copy, serde::Serialize)]
struct Tolerances {
    /// Weak-resonance margin for the hypothesis check and normal-form denominators.
    #[arg(long = "tol.eps-res", default_value_t = 1e-3)]
    eps_res: f64,
    /// Half-width of the root-counting strip around the imaginary axis.
    #[arg(long = "tol.delta", default_value_t = 1e-2)]
    delta: f64,
    /// Quadrature nodes per contour side.
    #[arg(long = "tol.nodes", default_value_t = 4000)]
    nodes: usize,
    /// Largest accepted condition number of a resolvent solve.
    #[arg(long = "tol.condition", default_value_t = 1e12)]
    condition: f64,
    /// Relative step of parameter derivatives without a closed form.
    #[arg(long = "tol.fd-step", default_value_t = 1e-6)]
    fd_step: f64,
    /// Fraction of the run discarded before classification.
    #[arg(long = "tol.transient", default_value_t = 0.5)]
    transient: f64,
    /// Poincaré diameter below which an orbit is periodic.
    #[arg(long = "tol.diameter", default_value_t = 1e-3)]
    diameter: f64,
    /// Chain gap factor for the torus test.
    #[arg(long = "tol.gap-factor", default_value_t = 5.0)]
    gap_factor: f64,
    /// State variance below which a run is at equilibrium.
    #[arg(long = "tol.variance", default_value_t = 1e-10)]
    variance: f64,
}

impl Tolerances {
    fn nondegeneracy(&self) -> NondegeneracyConfig {
        NondegeneracyConfig { eps_res: self.eps_res, delta: self.delta, nodes: self.nodes, ..Default::default() }
    }

    fn normal_form(&self) -> NormalFormConfig {
        NormalFormConfig { eps_res: self.eps_res, max_condition: self.condition, fd_step: self.fd_step }
    }

    fn attractor(&self) -> AttractorConfig {
        AttractorConfig {
            transient: self.transient,
            variance_tol: self.variance,
            diameter_tol: self.diameter,
            gap_factor: self.gap_factor,
            ..Default::default()
        }
    }
}

#[derive(Args)]
struct HopfArgs {
    #[command(flatten)]
    common: Common,
    /// `name:lo:hi:steps` over the non-delay parameter.
    #[arg(long)]
    sweep: String,
    /// Wave numbers `lo:hi`.
    #[arg(long, default_value = "0:4")]
    waves: String,
    /// Largest delay index j.
    #[arg(long, default_value_t = 1)]
    branches: u32,
}

#[derive(Args)]
struct DoubleHopfArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    sweep: String,
    /// Two branches `n:rank:j,n:rank:j`.
    #[arg(long)]
    pair: String,
    /// Skip the root-counting hypothesis check.
    #[arg(long)]
    no_check: bool,
}

#[derive(Args)]
struct NormalFormArgs {
    #[command(flatten)]
    common: Common,
    /// Two branches `n:rank:j,n:rank:j`.
    #[arg(long)]
    pair: String,
    /// Search window; defaults to a narrow window around --point.
    #[arg(long)]
    sweep: Option<String>,
    /// Approximate double Hopf point `mu1,mu2`; the nearest located point is used.
    #[arg(long)]
    point: Option<String>,
    /// Parameter offset `a1,a2` whose unfolding region is reported.
    #[arg(long)]
    offset: Option<String>,
    /// Half-width of the bifurcation-set plot in the parameter plane.
    #[arg(long, default_value_t = 0.05)]
    extent: f64,
    /// Continue past failed hypotheses; the exit status still reports them.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// Parameter point `mu1,mu2`.
    #[arg(long)]
    point: String,
    /// Added to --point.
    #[arg(long)]
    offset: Option<String>,
    /// `n=K;base=b1,b2,..;amp=a1,a2,..` or a JSON file; repeat for concurrent runs.
    #[arg(long)]
    init: Vec<String>,
    /// Grid nodes.
    #[arg(long, default_value_t = 40)]
    grid: usize,
    /// Time step; defaults to half the stability bound.
    #[arg(long)]
    dt: Option<f64>,
    /// End time.
    #[arg(long, default_value_t = 2000.0)]
    horizon: f64,
    /// Approximate sampling interval of the saved trajectory.
    #[arg(long, default_value_t = 0.5)]
    sample: f64,
    /// Highest wave number in the mode projections.
    #[arg(long, default_value_t = 6)]
    modes: u32,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Hypothesis(String),
    Degenerate(String),
    Other(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(s) => write!(f, "usage: {s}"),
            CliError::Hypothesis(s) => write!(f, "hypothesis failure: {s}"),
            CliError::Degenerate(s) => write!(f, "numerical degeneracy: {s}"),
            CliError::Other(s) => write!(f, "{s}"),
        }
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Hypothesis(_) => EXIT_HYPOTHESIS,
            CliError::Degenerate(_) => EXIT_DEGENERATE,
            CliError::Other(_) => EXIT_FAILURE,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(format!("io: {e}"))
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Usage(format!("model: {e}"))
    }
}

impl From<SpectrumError> for CliError {
    fn from(e: SpectrumError) -> Self {
        let msg = format!("spectrum: {e}");
        match e {
            SpectrumError::NoDelayParam => CliError::Usage(msg),
            SpectrumError::NoBracket => CliError::Hypothesis(msg),
            SpectrumError::Export(_) => CliError::Other(msg),
            _ => CliError::Degenerate(msg),
        }
    }
}

impl From<NormalFormError> for CliError {
    fn from(e: NormalFormError) -> Self {
        let msg = format!("normal form: {e}");
        match e {
            NormalFormError::NoDelayParam => CliError::Usage(msg),
            NormalFormError::Eigen(dhopf::eigenbasis::EigenError::NotSimple { .. }) => CliError::Hypothesis(msg),
            _ => CliError::Degenerate(msg),
        }
    }
}

impl From<UnfoldingError> for CliError {
    fn from(e: UnfoldingError) -> Self {
        let msg = format!("unfolding: {e}");
        match e {
            UnfoldingError::Csv(_) => CliError::Other(msg),
            UnfoldingError::OnLine(_) => CliError::Usage(msg),
            _ => CliError::Degenerate(msg),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        let msg = format!("simulation: {e}");
        match e {
            SimError::StepTooLarge { .. } | SimError::Grid(_) => CliError::Usage(msg),
            SimError::BlowUp { .. } => CliError::Degenerate(msg),
            _ => CliError::Other(msg),
        }
    }
}

type Res<T> = Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> Res<T> {
    Err(CliError::Usage(msg.into()))
}

fn parse_f64(s: &str, what: &str) -> Res<f64> {
    s.trim().parse().map_err(|_| CliError::Usage(format!("{what}: `{s}` is not a number")))
}

fn parse_list(s: &str, what: &str) -> Res<Vec<f64>> {
    s.split(',').map(|v| parse_f64(v, what)).collect()
}

fn parse_pair_f64(s: &str, what: &str) -> Res<Param> {
    match parse_list(s, what)?.as_slice() {
        [a, b] => Ok([*a, *b]),
        _ => usage(format!("{what}: expected two comma-separated numbers")),
    }
}

fn parse_sweep(s: &str) -> Res<(String, Sweep)> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 4 {
        return usage("--sweep expects name:lo:hi:steps");
    }
    let steps: usize = parts[3].parse().map_err(|_| CliError::Usage("--sweep steps must be an integer".into()))?;
    let sweep = Sweep { lo: parse_f64(parts[1], "--sweep")?, hi: parse_f64(parts[2], "--sweep")?, steps };
    if steps == 0 || !(sweep.hi > sweep.lo) {
        return usage("--sweep is empty");
    }
    Ok((parts[0].to_string(), sweep))
}

fn parse_branch(s: &str) -> Res<BranchId> {
    let p: Vec<&str> = s.split(':').collect();
    let int = |v: &str| v.trim().parse::<u32>().map_err(|_| CliError::Usage(format!("branch `{s}`: expected n:rank:j")));
    match p.as_slice() {
        [n, r, j] => Ok(BranchId { n: int(n)?, rank: int(r)? as usize, j: int(j)? }),
        _ => usage(format!("branch `{s}`: expected n:rank:j")),
    }
}

fn parse_branches(s: &str) -> Res<[BranchId; 2]> {
    match s.split(',').collect::<Vec<_>>().as_slice() {
        [a, b] => Ok([parse_branch(a)?, parse_branch(b)?]),
        _ => usage("--pair expects n:rank:j,n:rank:j"),
    }
}

fn parse_range(s: &str) -> Res<(u32, u32)> {
    let p: Vec<&str> = s.split(':').collect();
    let int = |v: &str| v.trim().parse::<u32>().map_err(|_| CliError::Usage(format!("range `{s}`: expected lo:hi")));
    match p.as_slice() {
        [a, b] if int(a)? <= int(b)? => Ok((int(a)?, int(b)?)),
        _ => usage(format!("range `{s}`: expected lo:hi with lo <= hi")),
    }
}

fn load(common: &Common) -> Res<Box<dyn Model>> {
    let mut params = BTreeMap::new();
    if let Some(p) = &common.params {
        for kv in p.split(',').filter(|s| !s.is_empty()) {
            let (k, v) = kv.split_once('=').ok_or_else(|| CliError::Usage(format!("--params entry `{kv}`")))?;
            params.insert(k.trim().to_string(), parse_f64(v, "--params")?);
        }
    }
    match common.model.as_str() {
        "epidemic" | "predprey" => Ok(model_from_doc(ModelDoc::Builtin { builtin: common.model.clone(), params })?),
        path => {
            if !params.is_empty() {
                return usage("--params applies to built-in models only");
            }
            Ok(load_model(Path::new(path))?)
        }
    }
}

fn check_sweep_name(model: &dyn Model, name: &str) -> Res<()> {
    let idx = sweep_param(model)?;
    let expect = &model.param_names()[idx];
    if name != expect {
        return usage(format!("--sweep must run over `{expect}`, got `{name}`"));
    }
    Ok(())
}

fn out_dir(common: &Common) -> Res<&Path> {
    fs::create_dir_all(&common.out)?;
    Ok(&common.out)
}

fn write_text(path: &Path, text: &str) -> Res<()> {
    fs::write(path, text)?;
    Ok(())
}

fn write_json(path: &Path, v: &serde_json::Value) -> Res<()> {
    write_text(path, &(serde_json::to_string_pretty(v).expect("json value serializes") + "\n"))
}

fn create(path: &Path) -> Res<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn cmd_hopf(a: &HopfArgs) -> Res<()> {
    let model = load(&a.common)?;
    let (name, sweep) = parse_sweep(&a.sweep)?;
    check_sweep_name(model.as_ref(), &name)?;
    let (lo, hi) = parse_range(&a.waves)?;
    let out = out_dir(&a.common)?;
    let ids: Vec<BranchId> = (lo..=hi)
        .flat_map(|n| (0..4).flat_map(move |rank| (0..=a.branches).map(move |j| BranchId { n, rank, j })))
        .collect();
    let model = model.as_ref();
    let curves = std::thread::scope(|s| {
        let handles: Vec<_> = ids.iter().map(|id| s.spawn(move || hopf_curve(model, *id, sweep))).collect();
        handles.into_iter().map(|h| h.join().expect("branch worker panicked")).collect::<Vec<_>>()
    });
    let mut files = Vec::new();
    for c in curves {
        let c = c?;
        if c.samples.is_empty() {
            continue;
        }
        let file = format!("hopf_n{}_r{}_j{}.csv", c.id.n, c.id.rank, c.id.j);
        write_branch_csv(&c, create(&out.join(&file))?)?;
        files.push(json!({ "file": file, "branch": c.id, "samples": c.samples.len(), "end": c.end }));
    }
    if files.is_empty() {
        eprintln!("warning: no imaginary roots on any branch over the sweep");
        write_text(&out.join("hopf_empty.csv"), "sweep,critical_delay,frequency,transversality_sign,residual\n")?;
    }
    let names = model.param_names();
    let dp = 1 - sweep_param(model)?;
    let list: Vec<String> = files.iter().map(|f| f["file"].as_str().unwrap().to_string()).collect();
    let plot = format!(
        "set datafile separator ','\nset xlabel '{}'\nset ylabel '{}'\nplot for [f in '{}'] f every ::1 using 1:2 with lines title f\n",
        name,
        names[dp],
        list.join(" ")
    );
    write_text(&out.join("hopf.gp"), &plot)?;
    write_json(
        &out.join("hopf.json"),
        &json!({ "model": model.name(), "sweep": { "name": name, "lo": sweep.lo, "hi": sweep.hi, "steps": sweep.steps }, "branches": files }),
    )?;
    println!("{} branches written to {}", files.len(), out.display());
    Ok(())
}

fn hypotheses_hold(pt: &DoubleHopfPoint) -> bool {
    pt.hypotheses.as_ref().is_none_or(|h| h.h1 && h.h2 && h.h3)
}

fn cmd_doublehopf(a: &DoubleHopfArgs) -> Res<()> {
    let model = load(&a.common)?;
    let (name, sweep) = parse_sweep(&a.sweep)?;
    check_sweep_name(model.as_ref(), &name)?;
    let [b1, b2] = parse_branches(&a.pair)?;
    let cfg = a.common.tol.nondegeneracy();
    let check = if a.no_check { None } else { Some(&cfg) };
    let points = match find_double_hopf(model.as_ref(), b1, b2, sweep, check) {
        Ok(p) => p,
        Err(SpectrumError::NoBracket) => Vec::new(),
        Err(e) => return Err(e.into()),
    };
    let out = out_dir(&a.common)?;
    write_json(&out.join("doublehopf.json"), &json!({ "model": model.name(), "points": points }))?;
    println!("{} double Hopf point(s)", points.len());
    for p in &points {
        println!("  mu0 = ({:.10}, {:.10}), frequencies ({:.8}, {:.8})", p.mu0[0], p.mu0[1], p.modes[0].freq, p.modes[1].freq);
    }
    if let Some(bad) = points.iter().find(|p| !hypotheses_hold(p)) {
        let h = bad.hypotheses.as_ref().unwrap();
        return Err(CliError::Hypothesis(format!(
            "point ({}, {}): H1 {} H2 {} H3 {} {:?}",
            bad.mu0[0], bad.mu0[1], h.h1, h.h2, h.h3, h.notes
        )));
    }
    Ok(())
}

fn locate(model: &dyn Model, pair: [BranchId; 2], sweep: Option<&str>, point: Option<Param>, cfg: &NondegeneracyConfig) -> Res<DoubleHopfPoint> {
    let idx = sweep_param(model)?;
    let sweep = match (sweep, point) {
        (Some(s), _) => {
            let (name, sw) = parse_sweep(s)?;
            check_sweep_name(model, &name)?;
            sw
        }
        (None, Some(p)) => {
            let w = 1e-2 * (1.0 + p[idx].abs());
            Sweep { lo: p[idx] - w, hi: p[idx] + w, steps: 8 }
        }
        (None, None) => return usage("normalform needs --sweep or --point"),
    };
    let pts = find_double_hopf(model, pair[0], pair[1], sweep, Some(cfg))?;
    let pt = match point {
        Some(p) => pts
            .into_iter()
            .min_by(|a, b| {
                let d = |q: &DoubleHopfPoint| (q.mu0[0] - p[0]).hypot(q.mu0[1] - p[1]);
                d(a).partial_cmp(&d(b)).unwrap()
            })
            .unwrap(),
        None => pts.into_iter().next().unwrap(),
    };
    Ok(pt)
}

fn cmd_normalform(a: &NormalFormArgs) -> Res<()> {
    let model = load(&a.common)?;
    let pair = parse_branches(&a.pair)?;
    let point = a.point.as_deref().map(|p| parse_pair_f64(p, "--point")).transpose()?;
    let offset = a.offset.as_deref().map(|p| parse_pair_f64(p, "--offset")).transpose()?;
    let tol = a.common.tol;
    let pt = locate(model.as_ref(), pair, a.sweep.as_deref(), point, &tol.nondegeneracy())?;
    let out = out_dir(&a.common)?;
    write_json(&out.join("point.json"), &json!(pt))?;
    let failed = (!hypotheses_hold(&pt)).then(|| {
        let h = pt.hypotheses.as_ref().unwrap();
        format!("H1 {} H2 {} H3 {} {:?}", h.h1, h.h2, h.h3, h.notes)
    });
    if let Some(msg) = failed.clone().filter(|_| !a.force) {
        return Err(CliError::Hypothesis(msg));
    }
    let report = assemble(model.as_ref(), &pt, &tol.normal_form())?;
    write_text(&out.join("normalform.json"), &(report.to_json() + "\n"))?;
    let cls = unfold(&report.coeffs, pt.mu0)?;
    write_text(&out.join("unfolding.json"), &(cls.to_json() + "\n"))?;
    write_lines_csv(&cls, a.extent, create(&out.join("bifurcation_set.csv"))?)?;
    write_text(&out.join("bifurcation_set.gp"), &gnuplot_script("bifurcation_set.csv", &model.param_names(), pt.mu0))?;
    let amp = &cls.amplitude;
    println!("double Hopf at ({:.10}, {:.10}), case {:?}", pt.mu0[0], pt.mu0[1], cls.label);
    println!("  b0 = {:.6}, c0 = {:.6}, d0 = {}, d0 - b0 c0 = {:.6}", amp.b0, amp.c0, amp.d0, amp.disc);
    if let Some(off) = offset {
        let r = region_of(&cls, off)?;
        println!("  offset ({}, {}) -> {}: {}", off[0], off[1], r.label, r.prediction.as_deref().unwrap_or("-"));
        write_json(&out.join("region.json"), &json!(r))?;
    }
    failed.map_or(Ok(()), |msg| Err(CliError::Hypothesis(msg)))
}

fn parse_init(s: &str, eq: &[f64]) -> Res<CosineInit> {
    if s.ends_with(".json") {
        let text = fs::read_to_string(s)?;
        return serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("--init {s}: {e}")));
    }
    let mut init = CosineInit { base: eq.to_vec(), amp: vec![0.01; eq.len()], n: 1 };
    for part in s.split(';').filter(|p| !p.is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| CliError::Usage(format!("--init entry `{part}`")))?;
        match k.trim() {
            "n" => init.n = v.trim().parse().map_err(|_| CliError::Usage(format!("--init n=`{v}`")))?,
            "base" => init.base = parse_list(v, "--init base")?,
            "amp" => init.amp = parse_list(v, "--init amp")?,
            other => return usage(format!("--init key `{other}`")),
        }
    }
    if init.base.len() != eq.len() || init.amp.len() != eq.len() {
        return usage(format!("--init needs {} values for base and amp", eq.len()));
    }
    Ok(init)
}

fn cmd_simulate(a: &SimulateArgs) -> Res<()> {
    let model = load(&a.common)?;
    let model = model.as_ref();
    let mut mu = parse_pair_f64(&a.point, "--point")?;
    if let Some(off) = &a.offset {
        let o = parse_pair_f64(off, "--offset")?;
        mu = [mu[0] + o[0], mu[1] + o[1]];
    }
    let grid = Grid::new(a.grid, model.scale())?;
    let dt = a.dt.unwrap_or_else(|| sim::default_step(model, mu, &grid));
    if !(a.horizon > 0.0) {
        return usage("--horizon must be positive");
    }
    let eq = model.equilibrium(mu);
    let inits = if a.init.is_empty() { vec![String::new()] } else { a.init.clone() };
    let inits: Vec<CosineInit> = inits.iter().map(|s| parse_init(s, &eq)).collect::<Res<_>>()?;
    let spec = SimSpec {
        mu,
        grid,
        dt,
        t_end: a.horizon,
        stride: ((a.sample / dt).round() as usize).max(1),
        probe: 0,
        linear_only: false,
    };
    let runs = std::thread::scope(|s| {
        let handles: Vec<_> = inits
            .iter()
            .map(|init| {
                let spec = &spec;
                s.spawn(move || sim::integrate(model, spec, &|_, x| init.eval(model.scale(), x)))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("simulation worker panicked")).collect::<Vec<_>>()
    });
    let out = out_dir(&a.common)?;
    let cfg = a.common.tol.attractor();
    let modes: Vec<u32> = (0..=a.modes).collect();
    let mut reports = Vec::new();
    let mut profiles = Vec::new();
    for (k, (run, init)) in runs.into_iter().zip(&inits).enumerate() {
        let run = run?;
        let tag = if inits.len() == 1 { String::new() } else { format!("_{k}") };
        let from = cfg.transient * run.t_end();
        sim::write_trajectory_csv(&run, create(&out.join(format!("trajectory{tag}.csv")))?)?;
        let ms = sim::mode_amplitudes(&run, &modes);
        sim::write_modes_csv(&ms, create(&out.join(format!("modes{tag}.csv")))?)?;
        let sec = sim::Section::default_for(&run);
        let crossings = sim::poincare(&run, &sec, from, 0)?;
        sim::write_crossings_csv(&crossings, create(&out.join(format!("crossings{tag}.csv")))?)?;
        write_text(&out.join(format!("heatmap{tag}.gp")), &sim::gnuplot_heatmap(&format!("trajectory{tag}.csv"), &run, 0))?;
        write_text(&out.join(format!("section{tag}.gp")), &sim::gnuplot_section(&format!("crossings{tag}.csv")))?;
        let rep = sim::classify_attractor(&run, &sec, &cfg);
        let (dominant, ratio) = ms.dominant(from);
        println!("run {k}: {:?}, dominant mode {dominant} (ratio {ratio:.3}), {} crossings", rep.kind, rep.crossings);
        profiles.push(run.rms_profile(from));
        reports.push(json!({
            "init": init,
            "attractor": rep,
            "dominant_mode": dominant,
            "dominance_ratio": ratio,
            "mode_rms": ms.rms(from),
        }));
    }
    let mut distances = Vec::new();
    for i in 0..profiles.len() {
        for j in i + 1..profiles.len() {
            distances.push(json!({ "runs": [i, j], "l2": sim::profile_distance(&grid, &profiles[i], &profiles[j]) }));
        }
    }
    write_json(
        &out.join("simulation.json"),
        &json!({
            "model": model.name(),
            "mu": mu,
            "grid": grid,
            "dt": dt,
            "horizon": a.horizon,
            "tolerances": a.common.tol,
            "runs": reports,
            "profile_distances": distances,
        }),
    )?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.cmd {
        Cmd::Hopf(a) => cmd_hopf(a),
        Cmd::Doublehopf(a) => cmd_doublehopf(a),
        Cmd::Normalform(a) => cmd_normalform(a),
        Cmd::Simulate(a) => cmd_simulate(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
