//! Command-line driver: configuration merging, thread pool setup and file output.
//!
//! Settings come from three layers: built-in defaults, an optional sectioned
//! config file (`--config`), and flags, with flags winning. The resolved
//! settings can be written back with `--write-config`, and feeding that file
//! back in reproduces the same run.

use std::ffi::OsString;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, CommandFactory, Parser, Subcommand};

use crate::eikonal::{
    eikonal_residual, log_bump, phase_value, sigma_grid, tail_exponent, transport_hierarchy, LimitPhase, PhaseKind,
    TransportParams, SIGMA_MAX, SIGMA_MIN, SIGMA_POINTS,
};
use crate::error::{Error, Result};
use crate::frobenius::{friedlander_closed_form, solve_spectral};
use crate::io::{csv_string, Config, GridFile};
use crate::model::{glancing_coordinates, indicial_roots, Covector, Mode, ModelParams, DEFAULT_LAMBDA, DEFAULT_N};
use crate::normal_ops::{mellin_solve, HalfLineFunction};
use crate::rays::{
    characteristic_starts, diffractive_check, flow, nontrapping_escape, symbol_l, PhaseSpacePoint, Profile, Sign,
};
use crate::resolvent_probe::{resolvent_norm_scan, GridSpec};
use crate::specfun::macdonald;
use crate::synthesis::{
    default_epsilon, shadow_exponent_fit, sigma_point, synthesize_field, BandSpec, Field2D, RunSpec, ThetaGrid,
    WindowSpec, YGrid,
};
use crate::C64;

#[derive(Parser, Debug)]
#[command(name = "glance", version, about = "Glancing diffraction laboratory")]
struct Cli {
    /// Sectioned `key = value` settings file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (0 = all logical cores). Falls back to GLANCE_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Spectral family: ads or friedlander.
    #[arg(long, global = true)]
    mode: Option<String>,
    /// Boundary dimension.
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Spectral parameter λ.
    #[arg(long, global = true)]
    lambda: Option<f64>,
    /// Write the resolved settings to this file.
    #[arg(long, global = true)]
    write_config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct SynthArgs {
    /// Samples per frequency axis.
    #[arg(long)]
    points: Option<usize>,
    /// Half-width of the frequency box.
    #[arg(long)]
    theta_max: Option<f64>,
    /// Gaussian taper parameter (default 3/theta_max).
    #[arg(long)]
    epsilon: Option<f64>,
    /// Comma-separated x rows.
    #[arg(long)]
    rows: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the spectral ODE for one covector.
    Spectral {
        /// `theta_prime,theta_n`.
        #[arg(long)]
        theta: Option<String>,
        #[arg(long)]
        xmax: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Synthesize the physical field on a grid of x rows.
    Synthesize(SynthArgs),
    /// Synthesize and classify local Fourier decay.
    Wavefront {
        #[command(flatten)]
        synth: SynthArgs,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        bands: Option<usize>,
        #[arg(long)]
        top_fraction: Option<f64>,
    },
    /// Fit the boundary exponent of the field in the shadow.
    ShadowFit {
        #[command(flatten)]
        synth: SynthArgs,
        /// Only cells with y_n above this enter the fit.
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Trace a bicharacteristic, or test escape on an extended profile.
    Flow {
        /// `x,xi,theta_prime,theta_n`.
        #[arg(long)]
        start: Option<String>,
        #[arg(long)]
        time: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        /// none, plus or minus.
        #[arg(long)]
        profile: Option<String>,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        t_max: Option<f64>,
    },
    /// Weighted resolvent norms against h.
    ResolventScan {
        #[arg(long)]
        sign: Option<String>,
        /// Comma-separated geometric h list.
        #[arg(long)]
        h: Option<String>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Transport hierarchy and its tail exponents.
    Transport {
        #[arg(long)]
        orders: Option<usize>,
        #[arg(long)]
        center: Option<f64>,
        #[arg(long)]
        width: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Run the closed-form example suite.
    Selftest,
}

/// Parses `argv` (program name first), runs the command, returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            eprintln!("{}", e.render());
            eprintln!("{}", Cli::command().render_long_help());
            return 3;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Merged settings; every lookup records the resolved value.
struct Settings {
    cfg: Config,
}

impl Settings {
    fn put<V: Display>(&mut self, section: &str, key: &str, v: Option<V>) {
        if let Some(v) = v {
            self.cfg.set(section, key, v.to_string());
        }
    }

    fn take<T: FromStr + Display>(&mut self, section: &str, key: &str, default: T) -> Result<T> {
        let v = self.cfg.get_parsed(section, key)?.unwrap_or(default);
        self.cfg.set(section, key, v.to_string());
        Ok(v)
    }

    fn positive(&mut self, section: &str, key: &str, default: f64) -> Result<f64> {
        let v = self.take(section, key, default)?;
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Config(format!("[{section}] {key} must be positive")));
        }
        Ok(v)
    }

    fn list(&mut self, section: &str, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        let text = match self.cfg.get(section, key) {
            Some(t) => t.to_string(),
            None => default.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","),
        };
        let vals = parse_list(&text).map_err(|_| Error::Config(format!("[{section}] {key} = '{text}' is not a number list")))?;
        if vals.is_empty() {
            return Err(Error::Config(format!("[{section}] {key} is empty")));
        }
        self.cfg.set(section, key, text);
        Ok(vals)
    }
}

fn parse_list(text: &str) -> std::result::Result<Vec<f64>, std::num::ParseFloatError> {
    text.split(',').filter(|s| !s.trim().is_empty()).map(|s| s.trim().parse::<f64>()).collect()
}

fn thread_count(flag: Option<usize>, cfg: &Config) -> Result<usize> {
    if let Some(t) = flag {
        return Ok(t);
    }
    if let Some(t) = cfg.get_parsed::<usize>("run", "threads")? {
        return Ok(t);
    }
    match std::env::var("GLANCE_THREADS") {
        Ok(v) => v.trim().parse().map_err(|_| Error::Config(format!("GLANCE_THREADS = '{v}' is not a count"))),
        Err(_) => Ok(0),
    }
}

fn execute(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(p) => Config::parse(&fs::read_to_string(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?)?,
        None => Config::default(),
    };
    let threads = thread_count(cli.threads, &cfg)?;
    let mut s = Settings { cfg };
    s.put("model", "mode", cli.mode.clone());
    s.put("model", "n", cli.n);
    s.put("model", "lambda", cli.lambda);
    s.put("run", "out", cli.out.as_ref().map(|p| p.display().to_string()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let write_config = cli.write_config.clone();
    pool.install(move || {
        let mode: Mode = s.take("model", "mode", Mode::Ads.as_str().to_string())?.parse()?;
        let n = s.take("model", "n", DEFAULT_N)?;
        let lambda = s.take("model", "lambda", DEFAULT_LAMBDA)?;
        let out = PathBuf::from(s.take("run", "out", "out".to_string())?);
        let params = ModelParams::new(n, lambda, mode)?;
        let result = dispatch(cli.command, &mut s, &params, &out);
        if let Some(path) = write_config {
            fs::write(&path, s.cfg.serialize()).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        }
        result
    })
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let p = dir.join(name);
    fs::write(&p, bytes).map_err(|e| Error::Io(format!("{}: {e}", p.display())))
}

fn dispatch(cmd: Command, s: &mut Settings, params: &ModelParams, out: &Path) -> Result<()> {
    match cmd {
        Command::Spectral { theta, xmax, tol } => {
            s.put("spectral", "theta", theta);
            s.put("spectral", "xmax", xmax);
            s.put("spectral", "tol", tol);
            spectral(s, params, out)
        }
        Command::Synthesize(a) => {
            let field = synthesize(s, &a, params)?;
            write_field(&field, out)
        }
        Command::Wavefront { synth, radius, bands, top_fraction } => {
            s.put("wavefront", "radius", radius);
            s.put("wavefront", "bands", bands);
            s.put("wavefront", "top_fraction", top_fraction);
            wavefront(s, &synth, params, out)
        }
        Command::ShadowFit { synth, beta } => {
            s.put("shadow", "beta", beta);
            shadow(s, &synth, params, out)
        }
        Command::Flow { start, time, dt, profile, count, radius, t_max } => {
            s.put("flow", "start", start);
            s.put("flow", "time", time);
            s.put("flow", "dt", dt);
            s.put("flow", "profile", profile);
            s.put("flow", "count", count);
            s.put("flow", "radius", radius);
            s.put("flow", "t_max", t_max);
            flow_cmd(s, out)
        }
        Command::ResolventScan { sign, h, epsilon, points } => {
            s.put("resolvent", "sign", sign);
            s.put("resolvent", "h", h);
            s.put("resolvent", "epsilon", epsilon);
            s.put("resolvent", "points", points);
            resolvent(s, out)
        }
        Command::Transport { orders, center, width, points } => {
            s.put("transport", "orders", orders);
            s.put("transport", "center", center);
            s.put("transport", "width", width);
            s.put("transport", "points", points);
            transport(s, params, out)
        }
        Command::Selftest => selftest(),
    }
}

fn spectral(s: &mut Settings, params: &ModelParams, out: &Path) -> Result<()> {
    let theta = s.list("spectral", "theta", &[0.5, 10.0])?;
    if theta.len() != 2 {
        return Err(Error::Config("theta takes two values: theta_prime,theta_n".into()));
    }
    let xmax = s.positive("spectral", "xmax", 3.0)?;
    let tol = s.positive("spectral", "tol", 1e-10)?;
    let cov = Covector::planar(theta[0], theta[1])?;
    let sol = solve_spectral(params, &cov, xmax, tol)?;
    let nx = sol.x_grid.len();
    let dx = (sol.x_grid[nx - 1] - sol.x_grid[0]) / (nx - 1) as f64;
    let data = sol.values.iter().flat_map(|v| [v.re, v.im]).collect();
    let grid = GridFile { nx, ny: 1, x0: sol.x_grid[0], dx, y0: 0.0, dy: 1.0, complex: true, data };
    write_file(out, "spectral.glnc", &grid.to_bytes()?)?;
    let rows: Vec<Vec<f64>> = (0..nx)
        .map(|i| vec![sol.x_grid[i], sol.values[i].re, sol.values[i].im, sol.derivs[i].re, sol.derivs[i].im])
        .collect();
    write_file(out, "spectral.csv", csv_string(&["x", "re", "im", "d_re", "d_im"], &rows).as_bytes())?;
    println!("mode={}", params.mode.as_str());
    println!("points={nx}");
    println!("closure={:?}", sol.closure);
    println!("s_plus_coeff={},{}", sol.s_plus_coeff.re, sol.s_plus_coeff.im);
    Ok(())
}

fn synthesize(s: &mut Settings, a: &SynthArgs, params: &ModelParams) -> Result<Field2D> {
    s.put("synthesize", "points", a.points);
    s.put("synthesize", "theta_max", a.theta_max);
    s.put("synthesize", "epsilon", a.epsilon);
    s.put("synthesize", "rows", a.rows.clone());
    let def = RunSpec::default();
    let points = s.take("synthesize", "points", def.theta.points)?;
    let theta_max = s.positive("synthesize", "theta_max", def.theta.theta_max)?;
    let theta = ThetaGrid { points, theta_max };
    let epsilon = s.take("synthesize", "epsilon", default_epsilon(&theta))?;
    if !(epsilon >= 0.0) {
        return Err(Error::Config("epsilon must be non-negative".into()));
    }
    let rows = s.list("synthesize", "rows", &def.x_rows)?;
    let field = synthesize_field(params, &theta, epsilon, &YGrid::dual(&theta), &rows)?;
    println!("rows={} points={} infilled_columns={}", rows.len(), points, field.infilled);
    Ok(field)
}

fn write_field(field: &Field2D, out: &Path) -> Result<()> {
    write_file(out, "field.csv", field.to_csv().as_bytes())?;
    for i in 0..field.x.len() {
        write_file(out, &format!("field_row{i}.glnc"), &field.row_grid(i).to_bytes()?)?;
    }
    Ok(())
}

fn wavefront(s: &mut Settings, a: &SynthArgs, params: &ModelParams, out: &Path) -> Result<()> {
    let field = synthesize(s, a, params)?;
    let dw = WindowSpec::default();
    let db = BandSpec::default();
    let window = WindowSpec { radius: s.positive("wavefront", "radius", dw.radius)? };
    let bands = BandSpec {
        bands: s.take("wavefront", "bands", db.bands)?,
        top_fraction: s.positive("wavefront", "top_fraction", db.top_fraction)?,
        ..db
    };
    let report = crate::synthesis::wavefront_scan(&field, &window, &bands)?;
    write_file(out, "wavefront.csv", report.to_csv().as_bytes())?;
    for i in 0..report.rows.len() {
        write_file(out, &format!("wavefront_row{i}.svg"), report.to_svg(i).as_bytes())?;
    }
    println!("singular_cells={}", report.singular_cells);
    println!("shadow_violations={}", report.shadow_violations);
    let fmt = |d: Option<f64>| d.map(|v| format!("{v:.3}")).unwrap_or_else(|| "none".into());
    println!("max_match_distance_cells={}", fmt(report.max_match_distance));
    println!("mean_match_distance_cells={}", fmt(report.mean_match_distance));
    if report.shadow_violations > 0 {
        return Err(Error::Property(format!("{} deep-shadow cells classify singular", report.shadow_violations)));
    }
    Ok(())
}

fn shadow(s: &mut Settings, a: &SynthArgs, params: &ModelParams, out: &Path) -> Result<()> {
    let beta = s.positive("shadow", "beta", 1.0)?;
    let field = synthesize(s, a, params)?;
    let fit = shadow_exponent_fit(&field, beta)?;
    let rows: Vec<Vec<f64>> = fit.column_slopes.iter().enumerate().map(|(k, v)| vec![k as f64, *v]).collect();
    write_file(out, "shadow_fit.csv", csv_string(&["column", "slope"], &rows).as_bytes())?;
    println!("exponent={} s_plus={} rows_used={} excluded={}", fit.exponent, params.s_plus, fit.rows_used, fit.excluded);
    if (fit.exponent - params.s_plus).abs() <= 0.1 {
        println!("s_plus_fit={:.1}±0.1", fit.exponent);
        Ok(())
    } else {
        println!("s_plus_fit={:.3} outside {}±0.1", fit.exponent, params.s_plus);
        Err(Error::Property(format!("boundary exponent {} misses s_plus = {}", fit.exponent, params.s_plus)))
    }
}

fn flow_cmd(s: &mut Settings, out: &Path) -> Result<()> {
    let profile = s.take("flow", "profile", "none".to_string())?;
    if profile == "none" {
        let st = s.list("flow", "start", &[0.0, 0.0, 1.0, 1.0])?;
        if st.len() < 4 {
            return Err(Error::Config("start takes x,xi,theta_prime...,theta_n".into()));
        }
        let time = s.take("flow", "time", 10.0)?;
        let dt = s.positive("flow", "dt", 0.01)?;
        let tn = st[st.len() - 1];
        let p0 = PhaseSpacePoint::at_origin(st[0], st[1], st[2..st.len() - 1].to_vec(), tn);
        let tr = flow(&p0, time, dt)?;
        write_file(out, "trajectory.csv", tr.to_csv().as_bytes())?;
        println!("steps={} max_drift={:e}", tr.times.len() - 1, tr.max_drift());
        return Ok(());
    }
    let sign: Sign = profile.parse()?;
    let count = s.take("flow", "count", 64usize)?;
    if count == 0 {
        return Err(Error::Config("count must be positive".into()));
    }
    let r = s.positive("flow", "radius", 10.0)?;
    let t_max = s.positive("flow", "t_max", 100.0)?;
    let p = Profile::new(sign);
    let starts = characteristic_starts(&p, count, r);
    let rep = nontrapping_escape(&p, &starts, r, t_max)?;
    let rows: Vec<Vec<f64>> = starts.iter().zip(&rep.times).map(|(st, t)| vec![st.sigma, st.xi, *t]).collect();
    write_file(out, &format!("escape_{profile}.csv"), csv_string(&["sigma", "xi", "time"], &rows).as_bytes())?;
    let longest = rep.times.iter().cloned().fold(0.0, f64::max);
    println!("escaped={}/{} longest_time={longest} max_energy_drift={:e}", rep.times.len(), count, rep.max_energy_drift);
    Ok(())
}

fn resolvent(s: &mut Settings, out: &Path) -> Result<()> {
    let sign_text = s.take("resolvent", "sign", "plus".to_string())?;
    let sign: Sign = sign_text.parse()?;
    let h = s.list("resolvent", "h", &[0.125, 0.0625, 0.03125, 0.015625])?;
    let epsilon = s.positive("resolvent", "epsilon", 0.5)?;
    let def = GridSpec::default();
    let grid = GridSpec { points: s.take("resolvent", "points", def.points)?, ..def };
    let r = resolvent_norm_scan(sign, &h, epsilon, &grid)?;
    let tag = if sign == Sign::Plus { "plus" } else { "minus" };
    write_file(out, &format!("resolvent_{tag}.csv"), r.to_csv().as_bytes())?;
    println!("exponent={} r2={}", r.exponent, r.r2);
    Ok(())
}

fn transport(s: &mut Settings, params: &ModelParams, out: &Path) -> Result<()> {
    let orders = s.take("transport", "orders", 3usize)?;
    if orders == 0 {
        return Err(Error::Config("orders must be positive".into()));
    }
    let center = s.positive("transport", "center", 1.0)?;
    let width = s.positive("transport", "width", 0.5)?;
    let points = s.take("transport", "points", SIGMA_POINTS)?;
    let sigma = sigma_grid(SIGMA_MIN, SIGMA_MAX, points);
    let bump = log_bump(&sigma, center, width);
    let tp = TransportParams::from_model(params);
    let terms = transport_hierarchy(orders, &sigma, &bump, &tp)?;
    let mut header = vec!["sigma".to_string()];
    header.extend((0..orders).map(|j| format!("abs_u{j}")));
    let header: Vec<&str> = header.iter().map(|h| h.as_str()).collect();
    let rows: Vec<Vec<f64>> = (0..sigma.len())
        .map(|i| std::iter::once(sigma[i]).chain(terms.iter().map(|t| t.u[i].norm())).collect())
        .collect();
    write_file(out, "transport.csv", csv_string(&header, &rows).as_bytes())?;
    for t in &terms {
        let e = tail_exponent(t, SIGMA_MAX / 10.0, SIGMA_MAX)?;
        println!("order={} tail_exponent={e} expected={}", t.order, -0.5 * tp.b - t.order as f64);
    }
    Ok(())
}

// ---------------------------------------------------------------- selftest

type Check = (&'static str, Box<dyn Fn() -> Result<bool>>);

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

fn checks() -> Vec<Check> {
    vec![
        ("indicial roots", Box::new(|| {
            let cases = [(2, 0.84, 0.6, 1.4), (2, 0.0, 0.0, 2.0), (4, 3.0, 1.0, 3.0)];
            Ok(cases.iter().all(|&(n, l, a, b)| match indicial_roots(n, l) {
                Ok((sm, sp, _)) => close(sm, a, 1e-12) && close(sp, b, 1e-12),
                Err(_) => false,
            }))
        })),
        ("glancing frame", Box::new(|| {
            let p = ModelParams::default();
            let f = glancing_coordinates(0.0, &Covector::planar(0.0, 8.0)?, &p);
            let g = glancing_coordinates(0.0, &Covector::planar(8.0 * 0.5f64.sqrt(), 8.0)?, &p);
            let c = glancing_coordinates(0.0, &Covector::planar(3.0, 3.0)?, &p);
            Ok(close(f.Z0, 4.0, 1e-12)
                && close(f.Z, 4.0, 1e-12)
                && close(g.Z0, 2.0, 1e-12)
                && close(g.h, 2f64.powf(-1.5), 1e-12)
                && c.Z0.abs() < 1e-12)
        })),
        ("phase values", Box::new(|| {
            Ok(phase_value(PhaseKind::In, 2.0, 2.0, 0.5)?.abs() < 1e-14
                && phase_value(PhaseKind::Out, 0.0, 0.0, 0.5)?.abs() < 1e-14
                && close(phase_value(PhaseKind::In, 3.0, 0.0, 1.0)?, 14.0 / 3.0, 1e-14))
        })),
        ("eikonal identity", Box::new(|| {
            let (a, b) = (LimitPhase { sign: 1.0 }, LimitPhase { sign: -1.0 });
            Ok([0.1, 1.0, 7.0, 40.0].iter().all(|&z| eikonal_residual(&a, z).abs() < 1e-12 && eikonal_residual(&b, z).abs() < 1e-12))
        })),
        ("zero transport source", Box::new(|| {
            let sig = sigma_grid(SIGMA_MIN, SIGMA_MAX, 256);
            let zero = vec![C64::new(0.0, 0.0); sig.len()];
            let t = transport_hierarchy(1, &sig, &zero, &TransportParams::from_model(&ModelParams::default()))?;
            Ok(t[0].u.iter().all(|v| v.norm() == 0.0))
        })),
        ("half-order Macdonald", Box::new(|| {
            let pi = std::f64::consts::PI;
            let mut ok = true;
            for t in [0.1, 1.0, 5.0] {
                ok &= close(macdonald(0.5, t)?, (pi / (2.0 * t)).sqrt() * (-t).exp(), 1e-12);
            }
            Ok(ok)
        })),
        ("zero Mellin source", Box::new(|| {
            let f = HalfLineFunction::sample(1e-4, 1e4, 513, |_| C64::new(0.0, 0.0))?;
            Ok(mellin_solve(&f, 0.5)?.values.iter().all(|v| v.norm() == 0.0))
        })),
        ("Airy boundary value", Box::new(|| {
            let mut ok = true;
            for (tp, tn) in [(0.5, 10.0), (0.0, 3.0), (2.0, 2.5)] {
                ok &= (friedlander_closed_form(0.0, &Covector::planar(tp, tn)?)? - C64::new(1.0, 0.0)).norm() < 1e-12;
            }
            Ok(ok)
        })),
        ("symbol and diffractive identities", Box::new(|| {
            let pt = |x, xi, tp, tn| PhaseSpacePoint::at_origin(x, xi, vec![tp], tn);
            Ok(symbol_l(&pt(0.0, 0.0, 1.0, 1.0)) == 0.0
                && symbol_l(&pt(0.0, 1.0, 0.0, 1.0)) == 0.0
                && symbol_l(&pt(1.0, 0.0, 0.0, 1.0)) == 2.0
                && diffractive_check(&pt(0.2, 1.0, 0.3, 0.5)).0 == -2.0
                && diffractive_check(&pt(0.2, 0.4, 0.3, 0.0)).1 == 0.0)
        })),
        ("glancing ray departs quadratically", Box::new(|| {
            let tr = flow(&PhaseSpacePoint::at_origin(0.0, 0.0, vec![1.0], 1.0), 2.0, 0.01)?;
            Ok(tr.times.iter().zip(&tr.points).all(|(s, p)| (p.x - s * s).abs() <= 1e-12 * (1.0 + s * s) && (p.xi + s).abs() <= 1e-12 * (1.0 + s)))
        })),
        ("Sigma starts at the origin", Box::new(|| {
            let (a, b) = sigma_point(0.0, 0.0);
            Ok(a == 0.0 && b == 0.0)
        })),
        ("unit symbol has unit mass", Box::new(|| {
            let theta = ThetaGrid { points: 64, theta_max: 16.0 };
            let eps = default_epsilon(&theta);
            let f = crate::synthesis::synthesize_with(&theta, eps, &[0.5], &|_, _| Ok(Some(vec![C64::new(1.0, 0.0)])))?;
            let dy = f.y.step;
            let mass: C64 = f.row(0).iter().sum::<C64>() * dy * dy;
            Ok((mass - C64::new(1.0, 0.0)).norm() < 1e-12)
        })),
    ]
}

fn selftest() -> Result<()> {
    let mut failed = 0;
    for (name, check) in checks() {
        let ok = matches!(check(), Ok(true));
        println!("{} {name}", if ok { "PASS" } else { "FAIL" });
        failed += usize::from(!ok);
    }
    if failed > 0 {
        return Err(Error::Property(format!("{failed} self-test example(s) failed")));
    }
    Ok(())
}
