use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Args;
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::{json, Value};

use microchi::microstates::{
    estimate_chi, estimate_chi_relative, ChiEstimate, MicrostateParams, Sampler, TracialSpec, WordChecker,
    DEFAULT_POOL, MIN_SAMPLES,
};
use microchi::ncalg::{dquotient, parse_poly};
use microchi::spectra::{
    chi_from_energy, chi_single as chi_of, cov_correction, log_energy, log_energy_closed_form, pushforward,
    ScalarField, SpectralMeasure, DEFAULT_CELLS,
};
use microchi::theorems::{self, fmt_num, num, CheckConfig, CheckId, Tier};

use crate::fail::Failure;
use crate::{Format, Global};

type Outcome = Result<ExitCode, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn emit(g: &Global, text: &str) -> Result<(), Failure> {
    match &g.out {
        Some(p) => write_file(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_file(p: &Path, text: &str) -> Result<(), Failure> {
    fs::write(p, text).map_err(|e| Failure::Compute(format!("cannot write {}: {e}", p.display())))
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

/// Comma list, or an inclusive range `a..b`.
fn parse_list<T>(s: &str, what: &str) -> Result<Vec<T>, Failure>
where
    T: std::str::FromStr + Copy + PartialOrd + std::ops::AddAssign + From<u8>,
{
    let bad = || Failure::Usage(format!("bad {what} list '{s}' (use a,b,c or a..b)"));
    if let Some((a, b)) = s.split_once("..") {
        let (mut a, b): (T, T) = (
            a.trim().parse().map_err(|_| bad())?,
            b.trim().parse().map_err(|_| bad())?,
        );
        let mut v = Vec::new();
        while a <= b {
            v.push(a);
            a += T::from(1);
        }
        return if v.is_empty() { Err(bad()) } else { Ok(v) };
    }
    s.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect()
}

fn parse_floats(s: &str, what: &str) -> Result<Vec<f64>, Failure> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| Failure::Usage(format!("bad {what} list '{s}'")))
        })
        .collect()
}

// ---------------------------------------------------------------- chi-single

#[derive(Args, Debug)]
pub struct SingleArgs {
    /// Spectral measure document (JSON).
    #[arg(long, alias = "measure")]
    spec: PathBuf,
    /// Also report the change of variables for this map
    /// (`identity`, `affine:a,b`, `poly:c0,c1,...`, `arctan:s`).
    #[arg(long)]
    map: Option<String>,
}

pub fn chi_single(g: &Global, a: &SingleArgs) -> Outcome {
    let mu = SpectralMeasure::from_json(&read(&a.spec)?)?;
    let map = a.map.as_deref().map(ScalarField::parse).transpose()?;

    let i = log_energy(&mu)?;
    let chi = chi_from_energy(i);
    let mut vals = vec![("log_energy", i), ("chi", chi)];
    let note = if !i.is_finite() {
        "atomic measure: the log energy diverges".to_string()
    } else if let Some(ic) = log_energy_closed_form(&mu) {
        vals.push(("log_energy_closed_form", ic));
        vals.push(("chi_closed_form", chi_from_energy(ic)));
        format!(
            "quadrature on {DEFAULT_CELLS} cells; differs from the closed form by {:.3e}",
            (i - ic).abs()
        )
    } else {
        format!("quadrature on {DEFAULT_CELLS} cells")
    };
    if let Some(f) = &map {
        let corr = cov_correction(&mu, f)?;
        let pushed = chi_of(&pushforward(&mu, f)?)?;
        vals.push(("cov_correction", corr));
        vals.push(("chi_pushforward", pushed));
        vals.push(("cov_residual", pushed - chi - corr));
    }

    let out = match g.format {
        Format::Json => {
            let mut m: serde_json::Map<String, Value> = vals.iter().map(|(k, v)| (k.to_string(), num(*v))).collect();
            m.insert("map".into(), map.as_ref().map_or(Value::Null, |f| f.name().into()));
            m.insert("note".into(), note.into());
            pretty(&Value::Object(m))
        }
        Format::Csv => {
            let mut s = String::from("quantity,value\n");
            for (k, v) in &vals {
                let _ = writeln!(s, "{k},{v}");
            }
            s
        }
        Format::Text => {
            let mut s = String::new();
            for (k, v) in &vals {
                let _ = writeln!(s, "{k} = {}", fmt_num(*v));
            }
            if let Some(f) = &map {
                let _ = writeln!(s, "map: {}", f.name());
            }
            let _ = writeln!(s, "note: {note}");
            s
        }
    };
    emit(g, &out)?;
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------- chi-mc

#[derive(Args, Debug)]
pub struct McArgs {
    /// Tracial spec document (JSON).
    #[arg(long)]
    spec: Option<PathBuf>,
    /// JSON file with defaults for any of the flags below; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Matrix sizes, `2,3,4` or `2..8`.
    #[arg(long)]
    k: Option<String>,
    /// Word lengths.
    #[arg(long)]
    l: Option<String>,
    /// Tolerances.
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    radius: Option<f64>,
    /// Samples per point.
    #[arg(long)]
    samples: Option<usize>,
    /// Candidate `y`-microstates per size for relative runs.
    #[arg(long)]
    y_pool: Option<usize>,
    /// `ball`, `gaussian` or `auto`.
    #[arg(long)]
    sampler: Option<String>,
    /// Also write the JSON summary here.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Deserialize, Default, Debug)]
#[serde(default, deny_unknown_fields)]
struct McFile {
    spec: Option<PathBuf>,
    k: Option<Vec<usize>>,
    l: Option<Vec<usize>>,
    eps: Option<Vec<f64>>,
    radius: Option<f64>,
    samples: Option<usize>,
    seed: Option<u64>,
    y_pool: Option<usize>,
    sampler: Option<String>,
}

struct McRun {
    spec: TracialSpec,
    ks: Vec<usize>,
    combos: Vec<MicrostateParams>,
    samples: usize,
    seed: u64,
    pool: usize,
    sampler: Sampler,
}

const MC_SAMPLES: usize = 1_000_000;

fn mc_config(g: &Global, a: &McArgs) -> Result<McRun, Failure> {
    let file: McFile = match &a.config {
        Some(p) => serde_json::from_str(&read(p)?).map_err(|e| {
            Failure::Usage(format!(
                "{}: line {}, column {}: {e}",
                p.display(),
                e.line(),
                e.column()
            ))
        })?,
        None => McFile::default(),
    };
    let path = a
        .spec
        .clone()
        .or(file.spec)
        .ok_or_else(|| Failure::Usage("--spec is required".into()))?;
    let spec = TracialSpec::from_json(&read(&path)?)?;

    let ks = match &a.k {
        Some(s) => parse_list(s, "k")?,
        None => file.k.unwrap_or_else(|| (2..=8).collect()),
    };
    let ls = match &a.l {
        Some(s) => parse_list(s, "l")?,
        None => file.l.unwrap_or_else(|| vec![2, 3, 4]),
    };
    let eps = match &a.eps {
        Some(s) => parse_floats(s, "eps")?,
        None => file.eps.unwrap_or_else(|| vec![0.5, 0.35, 0.2]),
    };
    let samples = a.samples.or(file.samples).unwrap_or(MC_SAMPLES);
    let pool = a.y_pool.or(file.y_pool).unwrap_or(DEFAULT_POOL);
    let sampler: Sampler = a
        .sampler
        .clone()
        .or(file.sampler)
        .unwrap_or_else(|| "auto".into())
        .parse()?;
    let radius = match a.radius.or(file.radius) {
        Some(r) => r,
        None => spec.default_radius()?,
    };

    if ks.is_empty() || ks.contains(&0) || ks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Failure::Usage(format!("k list must be positive and ascending: {ks:?}")));
    }
    if ls.is_empty() || eps.is_empty() {
        return Err(Failure::Usage("l and eps lists must be nonempty".into()));
    }
    if samples < MIN_SAMPLES {
        return Err(Failure::Usage(format!("--samples must be at least {MIN_SAMPLES}")));
    }
    if pool == 0 {
        return Err(Failure::Usage("--y-pool must be positive".into()));
    }
    let mut combos = Vec::new();
    for &l in &ls {
        for &e in &eps {
            let p = MicrostateParams::new(ks[0], l, e, radius)?;
            p.check_spec(&spec)?;
            WordChecker::new(&spec, &p)?;
            combos.push(p);
        }
    }
    Ok(McRun {
        spec,
        ks,
        combos,
        samples,
        seed: g.seed.or(file.seed).unwrap_or(1),
        pool,
        sampler,
    })
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn mc_summary(run: &McRun, ests: &[ChiEstimate]) -> Value {
    // χ is an infimum over (l, ε); ties keep the first.
    let mut best = 0;
    for (i, e) in ests.iter().enumerate() {
        if e.extrapolated < ests[best].extrapolated {
            best = i;
        }
    }
    let runs: Vec<Value> = run
        .combos
        .iter()
        .zip(ests)
        .map(|(p, e)| {
            json!({
                "l": p.l,
                "eps": p.eps,
                "extrapolated": num(e.extrapolated),
                "stderr": num(e.extrapolated_stderr()),
                "upper_bound": e.upper_bound().map(num),
                "y_used": e.y_used,
                "diagnostic": e.diagnostic,
            })
        })
        .collect();
    let b = &ests[best];
    json!({
        "n": run.spec.n(),
        "m": run.spec.m(),
        "relative": run.spec.m() > 0,
        "seed": run.seed,
        "samples": run.samples,
        "sampler": run.sampler.tag(),
        "radius": run.combos[0].radius,
        "k": run.ks,
        "y_pool": if run.spec.m() > 0 { Some(run.pool) } else { None },
        "extrapolated": num(b.extrapolated),
        "stderr": num(b.extrapolated_stderr()),
        "at": {"l": run.combos[best].l, "eps": run.combos[best].eps},
        "diagnostic": b.diagnostic,
        "runs": runs,
    })
}

pub fn chi_mc(g: &Global, a: &McArgs) -> Outcome {
    let run = mc_config(g, a)?;
    let ests = run
        .combos
        .par_iter()
        .map(|p| {
            if run.spec.m() > 0 {
                estimate_chi_relative(&run.spec, p, &run.ks, run.sampler, run.pool, run.samples, run.seed)
            } else {
                estimate_chi(&run.spec, p, &run.ks, run.sampler, run.samples, run.seed)
            }
        })
        .collect::<microchi::Result<Vec<_>>>()?;
    let summary = mc_summary(&run, &ests);
    let rows = ests.iter().flat_map(|e| &e.per_k);

    let out = match g.format {
        Format::Csv => {
            let mut s = String::from("k,l,eps,R,N,log_volume,stderr,normalized_chi,y_id\n");
            for r in rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{}",
                    r.k,
                    r.l,
                    r.eps,
                    r.radius,
                    r.samples,
                    r.log_volume,
                    r.stderr_log,
                    r.normalized,
                    csv_field(r.y_id.as_deref().unwrap_or(""))
                );
            }
            s
        }
        Format::Json => {
            let rows: Vec<Value> = rows
                .map(|r| {
                    json!({
                        "k": r.k, "l": r.l, "eps": r.eps, "R": r.radius, "N": r.samples,
                        "log_volume": num(r.log_volume), "stderr": num(r.stderr_log),
                        "normalized_chi": num(r.normalized), "y_id": r.y_id,
                    })
                })
                .collect();
            pretty(&json!({"summary": summary, "rows": rows}))
        }
        Format::Text => {
            let mut s = String::from("k\tl\teps\tR\tN\tlog_volume\tstderr\tnormalized_chi\ty_id\n");
            for r in rows {
                let _ = writeln!(
                    s,
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    r.k,
                    r.l,
                    r.eps,
                    r.radius,
                    r.samples,
                    fmt_num(r.log_volume),
                    fmt_num(r.stderr_log),
                    fmt_num(r.normalized),
                    r.y_id.as_deref().unwrap_or("-")
                );
            }
            let b = &summary["at"];
            let _ = writeln!(
                s,
                "extrapolated = {} (stderr {}) at l = {}, eps = {}",
                text_of(&summary["extrapolated"]),
                text_of(&summary["stderr"]),
                b["l"],
                b["eps"]
            );
            if let Some(d) = summary["diagnostic"].as_str() {
                let _ = writeln!(s, "diagnostic: {d}");
            }
            s
        }
    };
    emit(g, &out)?;
    if let Some(p) = &a.summary {
        write_file(p, &pretty(&summary))?;
    } else if g.format == Format::Csv {
        eprintln!(
            "summary: {}",
            serde_json::to_string(&summary).expect("JSON values serialize")
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn text_of(v: &Value) -> String {
    match v {
        Value::Number(n) => fmt_num(n.as_f64().unwrap_or(f64::NAN)),
        Value::String(s) => s.clone(),
        v => v.to_string(),
    }
}

// ---------------------------------------------------------------- dq

#[derive(Args, Debug)]
pub struct DqArgs {
    /// Polynomial, e.g. `b0 t1 b1 t2 b2`.
    poly: String,
    /// Variable index, from 1.
    #[arg(long)]
    var: usize,
}

pub fn dq(g: &Global, a: &DqArgs) -> Outcome {
    if a.var == 0 {
        return Err(Failure::Usage("--var is numbered from 1".into()));
    }
    let p = parse_poly::<f64>(&a.poly)?;
    let d = if a.var > p.arity() {
        "0".to_string()
    } else {
        dquotient(&p, a.var - 1)?.to_string()
    };
    let out = match g.format {
        Format::Text => format!("{d}\n"),
        Format::Csv => format!("poly,var,dq\n{},{},{}\n", csv_field(&a.poly), a.var, csv_field(&d)),
        Format::Json => pretty(&json!({"poly": p.to_string(), "var": a.var, "dq": d})),
    };
    emit(g, &out)?;
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------- check

#[derive(Args, Debug)]
pub struct CheckArgs {
    /// Check ids, or `all`, `deterministic`, `statistical`.
    #[arg(required = true)]
    ids: Vec<String>,
    /// JSON config; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    l: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    y_pool: Option<usize>,
    #[arg(long)]
    sampler: Option<String>,
    /// Also write the JSON report here.
    #[arg(long)]
    json: Option<PathBuf>,
}

fn check_ids(names: &[String]) -> Result<Vec<CheckId>, Failure> {
    let mut ids = Vec::new();
    for n in names {
        let group: Vec<CheckId> = match n.to_ascii_lowercase().as_str() {
            "all" => CheckId::ALL.to_vec(),
            "deterministic" => CheckId::ALL
                .into_iter()
                .filter(|c| c.tier() == Tier::Deterministic)
                .collect(),
            "statistical" => CheckId::ALL
                .into_iter()
                .filter(|c| c.tier() == Tier::Statistical)
                .collect(),
            _ => vec![n.parse::<CheckId>()?],
        };
        for id in group {
            if !ids.contains(&id) {
                ids.push(id);
            }
        }
    }
    Ok(ids)
}

fn check_config(g: &Global, a: &CheckArgs) -> Result<CheckConfig, Failure> {
    let mut c = match &a.config {
        Some(p) => CheckConfig::from_json(&read(p)?)?,
        None => CheckConfig::default(),
    };
    if let Some(s) = g.seed {
        c.seed = s;
    }
    if let Some(k) = &a.k {
        c.k_list = parse_list(k, "k")?;
    }
    c.l = a.l.or(c.l);
    c.eps = a.eps.or(c.eps);
    c.radius = a.radius.or(c.radius);
    c.samples = a.samples.unwrap_or(c.samples);
    c.pool = a.y_pool.unwrap_or(c.pool);
    if let Some(s) = &a.sampler {
        c.sampler = s.clone();
    }
    c.sampler.parse::<Sampler>()?;
    if c.samples < MIN_SAMPLES {
        return Err(Failure::Usage(format!("samples must be at least {MIN_SAMPLES}")));
    }
    if c.pool == 0 {
        return Err(Failure::Usage("y pool must be positive".into()));
    }
    if c.k_list.is_empty() || c.k_list.contains(&0) || c.k_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Failure::Usage(format!(
            "k list must be positive and ascending: {:?}",
            c.k_list
        )));
    }
    Ok(c)
}

pub fn check(g: &Global, a: &CheckArgs) -> Outcome {
    let ids = check_ids(&a.ids)?;
    let cfg = check_config(g, a)?;
    let reports = theorems::check_all(&ids, &cfg)?;

    let det_fail = reports.iter().any(|r| r.tier == Tier::Deterministic && !r.pass);
    let passed = reports.iter().filter(|r| r.pass).count();
    let json_doc = pretty(&json!({
        "reports": reports.iter().map(|r| r.to_json()).collect::<Vec<_>>(),
        "passed": passed,
        "total": reports.len(),
        "deterministic_pass": !det_fail,
    }));
    let out = match g.format {
        Format::Json => json_doc.clone(),
        Format::Csv => {
            let mut s = String::from("id,tier,lhs,relation,rhs,tolerance,sigma,pass,seed\n");
            for r in &reports {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{}",
                    r.id,
                    r.tier.tag(),
                    r.lhs,
                    r.relation.symbol(),
                    r.rhs,
                    r.tolerance,
                    r.sigma,
                    r.pass,
                    r.seed
                );
            }
            s
        }
        Format::Text => {
            let mut s: String = reports.iter().map(|r| r.to_text()).collect();
            let _ = writeln!(
                s,
                "{passed}/{} passed; deterministic gate {}",
                reports.len(),
                if det_fail { "FAILED" } else { "passed" }
            );
            s
        }
    };
    emit(g, &out)?;
    if let Some(p) = &a.json {
        write_file(p, &json_doc)?;
    }
    Ok(if det_fail { ExitCode::from(3) } else { ExitCode::SUCCESS })
}
