// SPDX-License-Identifier: Apache-2.0

mod args;
mod output;

use std::process::ExitCode;

use clap::Parser;
use rayon::prelude::*;
use serde::Serialize;

use modgeo::bqf::Discriminant;
use modgeo::cache::Cache;
use modgeo::collections::{
    subcollection, GeodesicCollection, SubcollectionRule, SubcollectionSpec,
};
use modgeo::harness::{
    adversarial_experiment, chain_check, default_window, discrepancy, duke_sweep, ergodic_variance,
    fundamental_log_spaced, mixing_correlation, n2plus4_family, shadowing_experiment,
    subcollection_bound_experiment, AdversarialConfig, DiscrepancyReport, MixingReport, QSchedule,
    CSV_COLUMNS,
};
use modgeo::observables::{
    catalog, haar_integral, haar_monte_carlo, parse_function, principal_geodesic,
    smoothness_estimate, TestFunction,
};
use modgeo::rng;

use args::{
    Cli, Command, Common, EquidistArgs, MixingArgs, ObservablesAction, Select, ShadowingArgs,
};
use output::{num, opt, Output};

/// An error with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<modgeo::Error> for CliError {
    fn from(e: modgeo::Error) -> Self {
        use modgeo::Error::*;
        let code = match e {
            NumericalDegeneracy(_) | DegenerateFit(_) => 3,
            Io(_) | Json(_) => 1,
            _ => 2,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError {
            code: 1,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let c = &cli.common;
    if !(c.step > 0.0 && c.step.is_finite()) {
        return Err(CliError::usage(format!(
            "--step must be positive, got {}",
            c.step
        )));
    }
    let out = match &cli.command {
        Command::Classgroup { d } => classgroup(c, parse_d(d)?)?,
        Command::Geodesics { d, select } => geodesics(c, parse_d(d)?, select)?,
        Command::Equidist(a) => equidist(c, a)?,
        Command::Mixing(a) => mixing(c, a)?,
        Command::Observables { action } => observables(c, action)?,
        Command::Shadowing(a) => shadowing(c, a)?,
    };
    out.write(c.format, c.out.as_deref())
}

fn require_samples(c: &Common) -> Result<(), CliError> {
    if c.samples < 1000 {
        return Err(CliError::usage(format!(
            "--samples must be at least 1000 for Monte-Carlo commands, got {}",
            c.samples
        )));
    }
    Ok(())
}

/// Integer discriminant, accepting `1e4`-style notation for exact integers.
fn parse_d(s: &str) -> Result<i128, CliError> {
    if let Ok(d) = s.parse::<i128>() {
        return Ok(d);
    }
    match s.parse::<f64>() {
        Ok(x) if x.fract() == 0.0 && x.abs() < 1e30 => Ok(x as i128),
        _ => Err(CliError::usage(format!("{s:?} is not an integer"))),
    }
}

fn parse_f64(s: &str) -> Result<f64, CliError> {
    s.parse()
        .map_err(|_| CliError::usage(format!("{s:?} is not a number")))
}

fn function(spec: &str) -> Result<TestFunction, CliError> {
    Ok(parse_function(spec)?)
}

fn mu_x(c: &Common, f: &TestFunction) -> Result<f64, CliError> {
    if f.exact_integral.is_none() {
        require_samples(c)?;
    }
    let seed = rng::derive(c.seed, &[rng::label("mu_x")]);
    Ok(haar_integral(f, c.samples, seed).value)
}

fn collections(cache: &Cache, ds: &[i128]) -> Result<Vec<GeodesicCollection>, CliError> {
    let mut fulls = ds
        .par_iter()
        .map(|&d| cache.collection(d))
        .collect::<modgeo::Result<Vec<_>>>()?;
    fulls.sort_by_key(|g| g.d.value());
    Ok(fulls)
}

/// `P<d>:r`.
fn parse_tube(s: &str) -> Result<(i128, f64), CliError> {
    let bad = || CliError::usage(format!("tube spec {s:?} is not of the form P<d>:r"));
    let (p, r) = s.split_once(':').ok_or_else(bad)?;
    let d = p.strip_prefix('P').ok_or_else(bad)?;
    Ok((parse_d(d)?, parse_f64(r)?))
}

fn rule(select: &Select) -> Result<Option<SubcollectionRule>, CliError> {
    Ok(if let Some(q) = select.q {
        Some(SubcollectionRule::RandomFraction { q })
    } else if let Some(t) = &select.tube {
        let (orbit_d, r) = parse_tube(t)?;
        Some(SubcollectionRule::Tube { orbit_d, r })
    } else {
        select
            .classes
            .as_ref()
            .map(|indices| SubcollectionRule::Explicit {
                indices: indices.clone(),
            })
    })
}

fn select(
    c: &Common,
    full: &GeodesicCollection,
    rule: &Option<SubcollectionRule>,
) -> Result<GeodesicCollection, CliError> {
    match rule {
        None => Ok(full.clone()),
        Some(rule) => {
            let spec = SubcollectionSpec {
                rule: rule.clone(),
                seed: rng::derive(c.seed, &[rng::label("select"), full.d.value() as u64]),
            };
            Ok(subcollection(full, &spec)?)
        }
    }
}

#[derive(Serialize)]
struct ClassGroupOut {
    d: i128,
    is_fundamental: bool,
    conductor: i128,
    class_number: usize,
    regulator: f64,
    period: f64,
    pell: modgeo::units::PellSolution,
    has_norm_minus_one_unit: bool,
    cycles: Vec<Vec<modgeo::bqf::QuadForm>>,
    composition_table: Vec<Vec<usize>>,
}

fn classgroup(c: &Common, d: i128) -> Result<Output, CliError> {
    let disc = Discriminant::new(d)?;
    let e = Cache::new(c.cache_dir.clone()).entry(d)?;
    let rows = e
        .cycles
        .iter()
        .enumerate()
        .map(|(i, cyc)| {
            let forms: Vec<String> = cyc
                .iter()
                .map(|f| format!("({},{},{})", f.a, f.b, f.c))
                .collect();
            vec![
                d.to_string(),
                i.to_string(),
                cyc.len().to_string(),
                num(e.regulator),
                num(e.period),
                forms.join(" "),
            ]
        })
        .collect();
    let value = ClassGroupOut {
        d,
        is_fundamental: disc.is_fundamental(),
        conductor: disc.conductor(),
        class_number: e.class_number(),
        regulator: e.regulator,
        period: e.period,
        pell: e.pell.clone(),
        has_norm_minus_one_unit: e.has_norm_minus_one_unit,
        cycles: e.cycles.clone(),
        composition_table: e.table.clone(),
    };
    Output::new(
        &value,
        &[
            "d",
            "class_index",
            "cycle_length",
            "regulator",
            "period",
            "forms",
        ],
        rows,
    )
}

#[derive(Serialize)]
struct MemberOut {
    class_index: usize,
    cycle_length: usize,
    first_form: modgeo::bqf::QuadForm,
    /// Endpoints of the lifted axis in the upper half plane.
    w: f64,
    w_conj: f64,
    period: f64,
}

#[derive(Serialize)]
struct GeodesicsOut {
    collection: modgeo::collections::CollectionSummary,
    members: Vec<MemberOut>,
}

fn geodesics(c: &Common, d: i128, sel: &Select) -> Result<Output, CliError> {
    let full = Cache::new(c.cache_dir.clone()).collection(d)?;
    let sub = select(c, &full, &rule(sel)?)?;
    let members: Vec<MemberOut> = sub
        .members
        .iter()
        .map(|m| MemberOut {
            class_index: m.class_index,
            cycle_length: m.cycle.len(),
            first_form: *m.cycle.first(),
            w: m.w,
            w_conj: m.w_conj,
            period: m.period,
        })
        .collect();
    let rows = members
        .iter()
        .map(|m| {
            vec![
                d.to_string(),
                m.class_index.to_string(),
                m.cycle_length.to_string(),
                format!("({},{},{})", m.first_form.a, m.first_form.b, m.first_form.c),
                num(m.w),
                num(m.w_conj),
                num(m.period),
            ]
        })
        .collect();
    Output::new(
        &GeodesicsOut {
            collection: sub.summary(),
            members,
        },
        &[
            "d",
            "class_index",
            "cycle_length",
            "first_form",
            "w",
            "w_conj",
            "period",
        ],
        rows,
    )
}

fn report_rows(reports: &[DiscrepancyReport]) -> Vec<Vec<String>> {
    reports.iter().map(|r| r.csv_record()).collect()
}

/// `lo:hi:logN`.
fn parse_d_range(s: &str) -> Result<Vec<i128>, CliError> {
    let bad = || CliError::usage(format!("range {s:?} is not of the form lo:hi:logN"));
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, n] = parts.as_slice() else {
        return Err(bad());
    };
    let n: usize = n
        .strip_prefix("log")
        .and_then(|n| n.parse().ok())
        .ok_or_else(bad)?;
    Ok(fundamental_log_spaced(parse_d(lo)?, parse_d(hi)?, n)?)
}

/// `lo:hi:odd`.
fn parse_n_range(s: &str) -> Result<Vec<u64>, CliError> {
    let bad = || CliError::usage(format!("range {s:?} is not of the form lo:hi:odd"));
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, "odd"] = parts.as_slice() else {
        return Err(bad());
    };
    let lo: u64 = lo.parse().map_err(|_| bad())?;
    let hi: u64 = hi.parse().map_err(|_| bad())?;
    if lo > hi {
        return Err(bad());
    }
    Ok(n2plus4_family(lo, hi))
}

fn parse_schedule(s: &str) -> Result<QSchedule, CliError> {
    let bad = || {
        CliError::usage(format!(
            "schedule {s:?} is not log:scale:exponent or const:q"
        ))
    };
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        ["log", scale, exponent] => Ok(QSchedule::LogPower {
            scale: parse_f64(scale)?,
            exponent: parse_f64(exponent)?,
        }),
        ["const", q] => Ok(QSchedule::Constant { q: parse_f64(q)? }),
        _ => Err(bad()),
    }
}

fn equidist(c: &Common, a: &EquidistArgs) -> Result<Output, CliError> {
    if let Some(family) = &a.family {
        return adversarial(c, a, family);
    }
    if a.probe.is_some() {
        return Err(CliError::usage("--probe needs --family"));
    }
    let ds = match (&a.d, &a.d_range) {
        (Some(list), None) => list
            .iter()
            .map(|s| parse_d(s))
            .collect::<Result<Vec<_>, _>>()?,
        (None, Some(range)) => parse_d_range(range)?,
        _ => return Err(CliError::usage("give one of --d, --d-range or --family")),
    };
    let cache = Cache::new(c.cache_dir.clone());
    let fulls = collections(&cache, &ds)?;
    let f = function(&a.f)?;
    let mu = mu_x(c, &f)?;
    let rule = rule(&a.select)?;

    if a.fit {
        let sweep = duke_sweep(&fulls, &f, mu, c.step, c.seed)?;
        let rows = report_rows(&sweep.reports);
        return Output::new(&sweep, &CSV_COLUMNS, rows);
    }
    if a.bound {
        if rule.is_some() {
            return Err(CliError::usage(
                "--bound chooses its own random subcollections",
            ));
        }
        let sched = parse_schedule(&a.schedule)?;
        let rep = subcollection_bound_experiment(&fulls, sched, &f, mu, c.step, c.seed)?;
        let rows = report_rows(&rep.reports);
        return Output::new(&rep, &CSV_COLUMNS, rows);
    }
    if a.chain {
        let reports = fulls
            .iter()
            .map(|g| {
                let i = select(c, g, &rule)?;
                let t = a
                    .window
                    .unwrap_or_else(|| default_window(g.d.value(), a.eta));
                Ok(chain_check(&i, g, &f, mu, t, c.step)?)
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let rows = reports
            .iter()
            .map(|r| {
                vec![
                    r.d.to_string(),
                    r.f_id.clone(),
                    num(r.t_window),
                    num(r.length_ratio),
                    num(r.lhs_i),
                    num(r.rhs_i),
                    r.holds_i.to_string(),
                    num(r.lhs_ii),
                    num(r.rhs_ii),
                    r.holds_ii.to_string(),
                ]
            })
            .collect();
        return Output::new(
            &reports,
            &[
                "d",
                "f_id",
                "T_window",
                "length_ratio",
                "lhs_i",
                "rhs_i",
                "holds_i",
                "lhs_ii",
                "rhs_ii",
                "holds_ii",
            ],
            rows,
        );
    }
    let reports = fulls
        .iter()
        .map(|g| {
            let i = select(c, g, &rule)?;
            Ok(discrepancy(&i, g, &f, mu, c.step, c.seed)?)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let rows = report_rows(&reports);
    Output::new(&reports, &CSV_COLUMNS, rows)
}

fn adversarial(c: &Common, a: &EquidistArgs, family: &str) -> Result<Output, CliError> {
    if family != "n2plus4" {
        return Err(CliError::usage(format!("unknown family {family:?}")));
    }
    let ns = parse_n_range(a.n.as_deref().unwrap_or_default())?;
    let Some(tube) = &a.select.tube else {
        return Err(CliError::usage("--family needs --tube P<d>:r"));
    };
    let (orbit_d, r) = parse_tube(tube)?;
    require_samples(c)?;
    let defaults = AdversarialConfig::default();
    let cfg = AdversarialConfig {
        r,
        probe_r0: a.probe.unwrap_or(defaults.probe_r0),
        step: c.step,
        n_samples: c.samples,
        seed: c.seed,
        ..defaults
    };
    let orbit = principal_geodesic(orbit_d)?;
    let rep = adversarial_experiment(&ns, &orbit, &cfg)?;
    let rows = report_rows(&rep.reports());
    Output::new(&rep, &CSV_COLUMNS, rows)
}

fn mixing_rows(rep: &MixingReport) -> Vec<Vec<String>> {
    rep.estimates
        .iter()
        .map(|e| {
            vec![
                e.f_id.clone(),
                format!("{:?}", e.quantity).to_lowercase(),
                num(e.time),
                num(e.value),
                num(e.std_error),
                e.n_samples.to_string(),
                opt(rep.fit.as_ref().map(|f| f.slope)),
            ]
        })
        .collect()
}

fn mixing(c: &Common, a: &MixingArgs) -> Result<Output, CliError> {
    require_samples(c)?;
    let f = function(&a.f)?;
    let mu = mu_x(c, &f)?;
    let rep = if a.corr {
        mixing_correlation(&f, &a.t, c.samples, mu, c.seed)?
    } else {
        ergodic_variance(&f, &a.windows, c.samples, c.step, mu, c.seed)?
    };
    let rows = mixing_rows(&rep);
    Output::new(
        &rep,
        &[
            "f_id",
            "quantity",
            "time",
            "value",
            "std_error",
            "n_samples",
            "fit_slope",
        ],
        rows,
    )
}

#[derive(Serialize)]
struct Integral {
    f_id: String,
    #[serde(flatten)]
    estimate: modgeo::observables::HaarEstimate,
}

#[derive(Serialize)]
struct Smoothness {
    f_id: String,
    n_points: usize,
    smoothness: f64,
}

fn observables(c: &Common, action: &ObservablesAction) -> Result<Output, CliError> {
    match action {
        ObservablesAction::List => {
            let cat = catalog();
            let rows = cat
                .iter()
                .map(|e| {
                    vec![
                        e.id.clone(),
                        e.description.to_string(),
                        e.parameters.to_string(),
                        opt(e.exact_integral),
                    ]
                })
                .collect();
            Output::new(
                &cat,
                &["id", "description", "parameters", "exact_integral"],
                rows,
            )
        }
        ObservablesAction::Integrate { f, monte_carlo } => {
            let f = function(f)?;
            let seed = rng::derive(c.seed, &[rng::label("integrate")]);
            let estimate = if *monte_carlo || f.exact_integral.is_none() {
                require_samples(c)?;
                haar_monte_carlo(&f, c.samples, seed)
            } else {
                haar_integral(&f, c.samples, seed)
            };
            let row = vec![
                f.id.clone(),
                num(estimate.value),
                num(estimate.std_error),
                estimate.n_samples.to_string(),
                estimate.exact.to_string(),
            ];
            Output::new(
                &Integral {
                    f_id: f.id.clone(),
                    estimate,
                },
                &["f_id", "value", "std_error", "n_samples", "exact"],
                vec![row],
            )
        }
        ObservablesAction::Smoothness { f, points } => {
            let f = function(f)?;
            let s = smoothness_estimate(&f, *points, c.seed)?;
            let row = vec![f.id.clone(), points.to_string(), num(s)];
            Output::new(
                &Smoothness {
                    f_id: f.id.clone(),
                    n_points: *points,
                    smoothness: s,
                },
                &["f_id", "n_points", "smoothness"],
                vec![row],
            )
        }
    }
}

fn shadowing(c: &Common, a: &ShadowingArgs) -> Result<Output, CliError> {
    let d = a
        .orbit
        .strip_prefix('P')
        .ok_or_else(|| CliError::usage(format!("orbit {:?} is not of the form P<d>", a.orbit)))?;
    let orbit = principal_geodesic(parse_d(d)?)?;
    let rep = shadowing_experiment(&orbit, &a.r, a.starts, a.dt, c.seed)?;
    let rows = rep
        .rows
        .iter()
        .map(|r| {
            vec![
                num(r.r),
                num(r.outer),
                num(-r.r.ln()),
                num(r.mean_dwell),
                r.dwell_times.len().to_string(),
            ]
        })
        .collect();
    Output::new(
        &rep,
        &["r", "outer", "minus_log_r", "mean_dwell", "n_starts"],
        rows,
    )
}
