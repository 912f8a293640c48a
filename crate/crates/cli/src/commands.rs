//! Subcommand implementations.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use resopack::catalog::{from_csv, to_csv, StoredCatalog};
use resopack::evolution::{eta, free_packet, system_lifetime, GaussianPacket, TransmittedPacket};
use resopack::oracle::{psi_many, QuadratureConfig};
use resopack::poles::{fingerprint, sweep_poles};
use resopack::resonances::{residues, Expansion};
use resopack::validation::{run_preset, special_functions, PresetRun, ORACLE_SAMPLES};
use resopack::{Complex64, Error};

use crate::config::{parse_distance, RunConfig};
use crate::output::{number, Table};
use crate::Failure;

/// `println!` that ignores a closed stdout.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

type Outcome<T> = std::result::Result<T, Failure>;

/// Maps library errors to exit classes: bad input is a usage error, the rest numerical.
pub fn classify(e: Error) -> Failure {
    match e {
        Error::InvalidArgument(_)
        | Error::InvalidProfile(_)
        | Error::NegativeEnergy(_)
        | Error::IndexTooSmall(_)
        | Error::TruncationTooLarge { .. }
        | Error::UnreliableRegime(_) => Failure::Usage(e.into()),
        other => Failure::Numerical(other.into()),
    }
}

fn io(e: anyhow::Error) -> Failure {
    Failure::Usage(e)
}

/// Catalog with residues, from the fingerprint-named cache when it matches.
pub struct Loaded {
    pub stored: StoredCatalog,
    pub path: PathBuf,
    pub cached: bool,
}

fn cache_path(cfg: &RunConfig, fp: &str) -> PathBuf {
    cfg.out.join(format!("catalog-{}-{}.csv", cfg.name, &fp[..16]))
}

pub fn load_or_build(cfg: &RunConfig) -> Outcome<Loaded> {
    let fp = fingerprint(&cfg.profile, &cfg.poles);
    let path = cache_path(cfg, &fp);
    if let Ok(text) = fs::read_to_string(&path) {
        match from_csv(&text) {
            Ok(stored) if stored.catalog.fingerprint == fp => {
                return Ok(Loaded { stored, path, cached: true });
            }
            Ok(_) => eprintln!("warning: stale catalog {}, rebuilding", path.display()),
            Err(e) => eprintln!("warning: unreadable catalog {} ({e}), rebuilding", path.display()),
        }
    }
    let catalog = sweep_poles(&cfg.profile, &cfg.poles).map_err(classify)?;
    let residues = residues(&cfg.profile, &catalog).map_err(classify)?;
    let stored = StoredCatalog { catalog, residues, metadata: cfg.echo() };
    fs::create_dir_all(&cfg.out)
        .with_context(|| format!("creating {}", cfg.out.display()))
        .map_err(io)?;
    let text = to_csv(&stored).map_err(classify)?;
    fs::write(&path, text).with_context(|| format!("writing {}", path.display())).map_err(io)?;
    Ok(Loaded { stored, path, cached: false })
}

fn header(cfg: &RunConfig, stored: &StoredCatalog, extra: &[(&str, String)]) -> Vec<(String, String)> {
    let mut h = vec![("fingerprint".to_string(), stored.catalog.fingerprint.clone())];
    h.extend(cfg.echo());
    h.extend(extra.iter().map(|(k, v)| (k.to_string(), v.clone())));
    h
}

fn output_path(cfg: &RunConfig, kind: &str) -> PathBuf {
    cfg.out.join(format!("{kind}-{}.csv", cfg.name))
}

fn packet(cfg: &RunConfig, stored: &StoredCatalog) -> Outcome<GaussianPacket> {
    let energy = cfg
        .packet_energy(&stored.catalog.energies(&cfg.profile))
        .map_err(Failure::Usage)?;
    GaussianPacket::with_energy(cfg.x_c, cfg.sigma, energy, cfg.profile.units()).map_err(classify)
}

fn tau_sys(cfg: &RunConfig, stored: &StoredCatalog) -> Outcome<f64> {
    system_lifetime(&cfg.profile, &stored.catalog).ok_or_else(|| Failure::Numerical(anyhow!("empty pole catalog")))
}

fn report(path: &Path, cached: bool) {
    let how = if cached { "reused" } else { "built" };
    eprintln!("catalog {how}: {}", path.display());
}

pub fn poles(cfg: &RunConfig) -> Outcome<()> {
    let loaded = load_or_build(cfg)?;
    report(&loaded.path, loaded.cached);
    let cat = &loaded.stored.catalog;
    let energies = cat.energies(&cfg.profile);
    let cols = ["n", "re_kappa", "im_kappa", "energy_ev", "width_ev", "residual"].map(String::from);
    let mut table = Table::new(&header(cfg, &loaded.stored, &[]), &cols);
    for (i, (&k, &(e, g))) in cat.poles.iter().zip(&energies).enumerate() {
        table.row(&[Some((i + 1) as f64), Some(k.re), Some(k.im), Some(e), Some(g), Some(cat.residuals[i])]);
    }
    let path = output_path(cfg, "poles");
    table.write(&path).map_err(io)?;

    say!("{} poles for {}", cat.len(), cfg.name);
    say!("{:>4}  {:>14}  {:>14}", "n", "E_n (eV)", "Gamma_n (eV)");
    for (i, (e, g)) in energies.iter().take(10).enumerate() {
        say!("{:>4}  {:>14.6e}  {:>14.6e}", i + 1, e, g);
    }
    say!("wrote {}", path.display());
    Ok(())
}

pub const SPECTRUM_POINTS: usize = 2000;

pub fn spectrum(cfg: &RunConfig, truncations: &[usize]) -> Outcome<()> {
    let loaded = load_or_build(cfg)?;
    report(&loaded.path, loaded.cached);
    let StoredCatalog { catalog, residues, .. } = &loaded.stored;
    let ns: Vec<usize> = if truncations.is_empty() { vec![catalog.len()] } else { truncations.to_vec() };
    let expansions = ns
        .iter()
        .map(|&n| Expansion::new(catalog, residues, n))
        .collect::<resopack::Result<Vec<_>>>()
        .map_err(classify)?;

    let mut cols: Vec<String> = ["e_over_v", "energy_ev", "t_exact", "re_t_exact", "im_t_exact"].map(String::from).into();
    for n in &ns {
        cols.extend([format!("t_n{n}"), format!("re_t_n{n}"), format!("im_t_n{n}")]);
    }
    let v = cfg.profile.max_height();
    let listed: Vec<String> = ns.iter().map(|n| n.to_string()).collect();
    let mut table = Table::new(
        &header(cfg, &loaded.stored, &[("barrier_ev", number(v)), ("truncations", listed.join(" "))]),
        &cols,
    );
    let units = cfg.profile.units();
    for i in 1..=SPECTRUM_POINTS {
        let ratio = 5.0 * i as f64 / SPECTRUM_POINTS as f64;
        let e = ratio * v;
        let k = Complex64::new(units.wavenumber_of_energy(e).map_err(classify)?, 0.0);
        let exact = cfg.profile.transmission_amplitude(k).map_err(classify)?;
        let mut row = vec![Some(ratio), Some(e), Some(exact.norm_sqr().min(1.0)), Some(exact.re), Some(exact.im)];
        for exp in &expansions {
            match exp.eval(k) {
                Ok(t) => row.extend([Some(t.norm_sqr()), Some(t.re), Some(t.im)]),
                Err(_) => row.extend([None, None, None]),
            }
        }
        table.row(&row);
    }
    let path = output_path(cfg, "spectrum");
    table.write(&path).map_err(io)?;
    say!("wrote {}", path.display());
    Ok(())
}

pub struct EvolveArgs {
    pub x_d: String,
    pub t_max: Option<f64>,
    pub samples: usize,
    pub oracle: bool,
    pub truncation: Option<usize>,
}

pub fn evolve(cfg: &RunConfig, args: &EvolveArgs) -> Outcome<()> {
    if args.samples < 2 {
        return Err(Failure::Usage(anyhow!("--samples must be at least 2")));
    }
    let length = cfg.profile.total_length();
    let x_d = parse_distance(&args.x_d, length).map_err(Failure::Usage)?;
    if x_d < length {
        return Err(Failure::Usage(anyhow!("the detector must sit at or beyond L = {length} nm")));
    }
    let loaded = load_or_build(cfg)?;
    report(&loaded.path, loaded.cached);
    let StoredCatalog { catalog, residues, .. } = &loaded.stored;
    let pk = packet(cfg, &loaded.stored)?;
    let tau_sys = tau_sys(cfg, &loaded.stored)?;
    let n = args.truncation.unwrap_or(catalog.len());
    let tp = TransmittedPacket::new(&pk, &cfg.profile, catalog, residues, n).map_err(classify)?;
    let default_span = if cfg.name == "sb" { 20.0 } else { 10.0 };
    let t_hi = args.t_max.unwrap_or(default_span) * tau_sys;
    let t_lo = 1e-3 * pk.tau();
    if !(t_hi > t_lo) {
        return Err(Failure::Usage(anyhow!("--tmax must exceed the first sample time")));
    }
    let times: Vec<f64> = (0..args.samples)
        .map(|i| t_lo + (t_hi - t_lo) * i as f64 / (args.samples - 1) as f64)
        .collect();

    let oracle = if args.oracle {
        let points: Vec<(f64, f64)> = times.iter().map(|&t| (x_d, t)).collect();
        match psi_many(&pk, Some(&cfg.profile), &points, &QuadratureConfig::default()) {
            Ok(v) => Some(v),
            Err(e @ Error::NodeBudgetExceeded { .. }) => {
                eprintln!("warning: oracle column left blank: {e}");
                None
            }
            Err(e) => return Err(classify(e)),
        }
    } else {
        None
    };

    let mut cols: Vec<String> = ["t_fs", "t_over_tau_sys", "rho_analytic", "rho_free"].map(String::from).into();
    if args.oracle {
        cols.push("rho_oracle".into());
    }
    cols.push("truncation_ratio".into());
    let mut table = Table::new(
        &header(
            cfg,
            &loaded.stored,
            &[
                ("x_d_nm", number(x_d)),
                ("tau_sys_fs", number(tau_sys)),
                ("packet_energy_ev", number(cfg.profile.units().energy_of_wavenumber(pk.k0))),
                ("pole_pairs", n.to_string()),
            ],
        ),
        &cols,
    );
    let mut warnings = 0;
    for (i, &t) in times.iter().enumerate() {
        let v = tp.evaluate(x_d, t).map_err(classify)?;
        warnings += usize::from(v.truncation_warning());
        let mut row = vec![
            Some(t),
            Some(t / tau_sys),
            Some(pk.sigma * v.psi.norm_sqr()),
            Some(pk.sigma * free_packet(&pk, x_d, t).norm_sqr()),
        ];
        if args.oracle {
            row.push(oracle.as_ref().map(|o| pk.sigma * o[i].norm_sqr()));
        }
        row.push(Some(v.truncation_ratio));
        table.row(&row);
    }
    if warnings > 0 {
        eprintln!("warning: {warnings} of {} samples have a last pole pair above 1e-8 of the sum", times.len());
    }
    let path = output_path(cfg, "evolve");
    table.write(&path).map_err(io)?;
    say!("wrote {}", path.display());
    Ok(())
}

pub const RECONSTRUCT_POINTS: usize = 501;

pub fn reconstruct(cfg: &RunConfig, distances: &[String]) -> Outcome<()> {
    let length = cfg.profile.total_length();
    let labels: Vec<String> = if distances.is_empty() {
        ["2e3L", "2e4L", "2e5L"].map(String::from).into()
    } else {
        distances.to_vec()
    };
    let x0s = labels
        .iter()
        .map(|d| parse_distance(d, length))
        .collect::<anyhow::Result<Vec<f64>>>()
        .map_err(Failure::Usage)?;
    if x0s.iter().any(|&x| x <= length) {
        return Err(Failure::Usage(anyhow!("reconstruction distances must exceed L")));
    }
    let loaded = load_or_build(cfg)?;
    report(&loaded.path, loaded.cached);
    let StoredCatalog { catalog, residues, .. } = &loaded.stored;
    let pk = packet(cfg, &loaded.stored)?;
    let tp = TransmittedPacket::new(&pk, &cfg.profile, catalog, residues, catalog.len()).map_err(classify)?;
    let e0 = cfg.profile.units().energy_of_wavenumber(pk.k0);
    let t0s: Vec<f64> = x0s.iter().map(|&x0| (x0 - length) / pk.velocity()).collect();

    let mut cols: Vec<String> = ["eta", "energy_ev", "t_exact"].map(String::from).into();
    cols.extend(x0s.iter().map(|x0| format!("zeta_x0_{}", number(*x0))));
    let t0_list: Vec<String> = t0s.iter().map(|t| number(*t)).collect();
    let x0_list: Vec<String> = x0s.iter().map(|x| number(*x)).collect();
    let mut table = Table::new(
        &header(
            cfg,
            &loaded.stored,
            &[("packet_energy_ev", number(e0)), ("x0_nm", x0_list.join(" ")), ("t0_fs", t0_list.join(" "))],
        ),
        &cols,
    );
    for i in 0..RECONSTRUCT_POINTS {
        let e = 0.2 + 2.8 * i as f64 / (RECONSTRUCT_POINTS - 1) as f64;
        let mut row = vec![Some(e), Some(e * e0), Some(cfg.profile.transmission_coefficient(e * e0).map_err(classify)?)];
        for (&x0, &t0) in x0s.iter().zip(&t0s) {
            let x = length + e.sqrt() * (x0 - length);
            debug_assert!((eta(x, x0, length) - e).abs() < 1e-12);
            row.push(match tp.zeta(x, t0) {
                Ok(z) => Some(z),
                Err(Error::FreeDensityUnderflow(_)) => None,
                Err(err) => return Err(classify(err)),
            });
        }
        table.row(&row);
    }
    let path = output_path(cfg, "reconstruct");
    table.write(&path).map_err(io)?;
    say!("wrote {}", path.display());
    Ok(())
}

fn quoted(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

/// Runs every acceptance check; `Ok(false)` when any fails.
pub fn validate(cfg: &RunConfig) -> Outcome<bool> {
    let preset = cfg
        .preset
        .ok_or_else(|| Failure::Usage(anyhow!("validate needs one of the presets sb, db, qb")))?;
    let loaded = load_or_build(cfg)?;
    report(&loaded.path, loaded.cached);
    let StoredCatalog { catalog, residues, .. } = loaded.stored.clone();
    let run = PresetRun::from_catalog(preset, cfg.poles.clone(), catalog, residues).map_err(classify)?;
    let mut checks = special_functions();
    checks.extend(run_preset(&run, ORACLE_SAMPLES));

    let mut text = format!("# tool: resopack {}\n", env!("CARGO_PKG_VERSION"));
    for (k, v) in header(cfg, &loaded.stored, &[]) {
        text.push_str(&format!("# {k}: {v}\n"));
    }
    text.push_str("criterion,preset,check,measured,expected,passed\n");
    for c in &checks {
        say!("{c}");
        text.push_str(&format!(
            "{},{},{},{},{},{}\n",
            c.criterion,
            c.preset.map_or("all", |p| p.name()),
            quoted(&c.name),
            number(c.measured),
            quoted(&c.expected),
            c.passed
        ));
    }
    let path = output_path(cfg, "validate");
    fs::write(&path, text).with_context(|| format!("writing {}", path.display())).map_err(io)?;
    let failed = checks.iter().filter(|c| !c.passed).count();
    say!("{} checks, {failed} failed; wrote {}", checks.len(), path.display());
    Ok(failed == 0)
}
