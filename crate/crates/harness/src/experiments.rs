use crate::config::{BetaSpec, Experiment, RunConfig, SymSchedule, XySchedule};
use crate::output::{mass_chart, num, Series, Table};
use crate::HarnessError;
use gibbs_core::circle_xy::{
    build_u, calibrate_desk, default_desk_halfwidths, interval_mass, laplace_limit, m_set_inclusion_holds,
    marginal_density_with, verify_xy_statement, CircleInterval, Schedule, Sign, SignSequence,
    TrigPolynomial, DEFAULT_TOLERANCE,
};
use gibbs_core::proof_checker::{check_case, reports_to_csv, ExactSchedule};
use gibbs_core::symbolic::{
    build_phi, calibrate, clopen_mass, entropy_ladder, equilibrium_state, fixed_point_ladder, log_grid,
    marginal_entropy_argmax, maximizing_orbit_check, truncate_depth, truncation_budget, u_minus, u_plus,
    verify_symbolic_statement, CalibrationOptions, DeltaProfile, EpsilonBetaSchedule, Ladder, LadderSpec,
};
use rayon::prelude::*;
use serde_json::json;
use std::collections::BTreeMap;

/// Output files of one run, by file name, plus a JSON summary.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifacts {
    pub files: BTreeMap<String, Vec<u8>>,
}

impl Artifacts {
    fn new() -> Self {
        Artifacts { files: BTreeMap::new() }
    }

    fn add(&mut self, name: &str, body: impl Into<Vec<u8>>) {
        self.files.insert(name.to_string(), body.into());
    }

    fn add_summary(&mut self, v: serde_json::Value) {
        let mut text = serde_json::to_string_pretty(&v).expect("summary serializes");
        text.push('\n');
        self.add("summary.json", text);
    }

    pub fn summary(&self) -> serde_json::Value {
        self.files
            .get("summary.json")
            .and_then(|b| serde_json::from_slice(b).ok())
            .unwrap_or(serde_json::Value::Null)
    }
}

/// CSV file holding one row per β for the kinds that sweep β, and the β list.
pub fn sweep_cells(cfg: &RunConfig) -> Option<(&'static str, &BetaSpec)> {
    match &cfg.experiment {
        Experiment::XySweep { beta, .. } => Some(("sweep.csv", beta)),
        Experiment::XyVerify { beta, .. } => Some(("verify.csv", beta)),
        Experiment::SymSweep { beta, .. } => Some(("sweep.csv", beta)),
        _ => None,
    }
}

/// The same run restricted to the `i`-th β of a sweep.
pub fn cell_config(cfg: &RunConfig, i: usize) -> Result<Option<RunConfig>, HarnessError> {
    let Some((_, spec)) = sweep_cells(cfg) else {
        return Ok(None);
    };
    let betas = spec.values()?;
    let b = *betas
        .get(i)
        .ok_or_else(|| HarnessError::validation(format!("cell {i} outside {} betas", betas.len())))?;
    let mut out = cfg.clone();
    match &mut out.experiment {
        Experiment::XySweep { beta, .. } | Experiment::XyVerify { beta, .. } | Experiment::SymSweep { beta, .. } => {
            *beta = BetaSpec::Values(vec![b])
        }
        _ => unreachable!(),
    }
    Ok(Some(out))
}

fn signs(text: &str) -> Result<SignSequence, HarnessError> {
    SignSequence::parse(text).map_err(|e| HarnessError::validation(format!("signs: {e}")))
}

fn xy_schedule(s: &XySchedule) -> Result<Schedule, HarnessError> {
    Ok(match s {
        XySchedule::Calibrated { m_max, slack } => calibrate_desk(&default_desk_halfwidths(*m_max), *slack)?,
        XySchedule::Explicit { halfwidths, levels } => Schedule::desk(halfwidths, levels)?,
    })
}

fn sym_schedule(s: &SymSchedule, ladder: &Ladder, m_max: usize) -> Result<(EpsilonBetaSchedule, Option<DeltaProfile>), HarnessError> {
    Ok(match s {
        SymSchedule::Calibrated { profile, options } => {
            let opts = options.clone().unwrap_or_default();
            (calibrate(ladder, m_max, *profile, &opts)?.schedule, Some(*profile))
        }
        SymSchedule::Explicit { eps, beta } => {
            let s = EpsilonBetaSchedule::new(eps.clone(), beta.clone())?;
            if s.levels() != m_max {
                return Err(HarnessError::validation(format!("schedule has {} levels, m_max is {m_max}", s.levels())));
            }
            (s, None)
        }
    })
}

fn sym_ladder(spec: &LadderSpec, m_max: usize) -> Result<Ladder, HarnessError> {
    if m_max == 0 {
        return Err(HarnessError::validation("m_max must be at least 1"));
    }
    Ok(entropy_ladder(spec, m_max)?)
}

fn bool_cell(b: bool) -> String {
    b.to_string()
}

fn word_text(w: &[u8]) -> String {
    w.iter().map(|d| char::from(b'0' + d)).collect()
}

pub fn run_experiment(cfg: &RunConfig) -> Result<Artifacts, HarnessError> {
    let tol = cfg.tolerances.quadrature.unwrap_or(DEFAULT_TOLERANCE);
    if !(tol > 0.0 && tol < 1.0) {
        return Err(HarnessError::validation("quadrature tolerance must be in (0, 1)"));
    }
    let mut art = Artifacts::new();
    match &cfg.experiment {
        Experiment::XySweep {
            schedule,
            signs: sig,
            beta,
            window_level,
        } => {
            let betas = beta.values()?;
            let sig = signs(sig)?;
            let sched = xy_schedule(schedule)?;
            if *window_level > sched.m_max() {
                return Err(HarnessError::validation("window_level above m_max"));
            }
            let u = build_u(&sig, &sched, sched.m_max())?;
            let (wp, wm) = (sched.window(*window_level, Sign::Plus)?, sched.window(*window_level, Sign::Minus)?);
            let rows = betas
                .par_iter()
                .map(|&b| {
                    let d = marginal_density_with(u.clone(), b, tol)?;
                    Ok((b, interval_mass(&d, &wp)?, interval_mass(&d, &wm)?, d.log_z.ln()))
                })
                .collect::<gibbs_core::Result<Vec<_>>>()?;
            let mut t = Table::new(&[
                ("beta", "dimensionless"),
                ("mass_plus_window", "probability"),
                ("mass_minus_window", "probability"),
                ("log_z", "nats"),
            ]);
            for &(b, p, m, z) in &rows {
                t.push(vec![num(b), num(p), num(m), num(z)]);
            }
            art.add("sweep.csv", t.render());
            art.add(
                "sweep.svg",
                mass_chart(
                    &format!("window masses, signs {sig}"),
                    &[
                        Series {
                            name: "plus window",
                            points: rows.iter().map(|r| (r.0, r.1)).collect(),
                        },
                        Series {
                            name: "minus window",
                            points: rows.iter().map(|r| (r.0, r.2)).collect(),
                        },
                    ],
                ),
            );
            art.add_summary(json!({ "rows": rows.len(), "levels": sched.levels() }));
        }
        Experiment::XyVerify {
            schedule,
            signs: sig,
            m,
            m_hat,
            beta,
        } => {
            let betas = beta.values()?;
            let sig = signs(sig)?;
            let sched = xy_schedule(schedule)?;
            let verdicts = betas
                .par_iter()
                .map(|&b| verify_xy_statement(&sig, *m, *m_hat, b, &sched))
                .collect::<gibbs_core::Result<Vec<_>>>()?;
            let mut t = Table::new(&[
                ("beta", "dimensionless"),
                ("achieved", "probability"),
                ("required", "probability"),
                ("holds", "bool"),
            ]);
            for (b, v) in betas.iter().zip(&verdicts) {
                t.push(vec![num(*b), num(v.achieved), num(v.required), bool_cell(v.holds)]);
            }
            art.add("verify.csv", t.render());
            art.add_summary(json!({
                "rows": verdicts.len(),
                "all_hold": verdicts.iter().all(|v| v.holds),
                "worst_margin": verdicts.iter().map(|v| v.achieved - v.required).fold(f64::INFINITY, f64::min),
            }));
        }
        Experiment::XySchedule { schedule } => {
            let sched = xy_schedule(schedule)?;
            let mut t = Table::new(&[
                ("m", "index"),
                ("halfwidth", "turns"),
                ("level", "dimensionless"),
                ("m_set_inclusion", "bool"),
            ]);
            for m in 0..=sched.m_max() {
                let inc = if m == 0 { String::new() } else { bool_cell(m_set_inclusion_holds(m, &sched)?) };
                t.push(vec![m.to_string(), num(sched.halfwidth(m)), num(sched.level(m)), inc]);
            }
            art.add("schedule.csv", t.render());
            art.add_summary(json!({ "m_max": sched.m_max(), "levels": sched.levels() }));
        }
        Experiment::Laplace { polynomial, beta, window } => {
            let p = TrigPolynomial::new(polynomial.constant, polynomial.cos.clone(), polynomial.sin.clone());
            let atoms = laplace_limit(&p)?;
            let density = match (beta, window) {
                (Some(b), Some(w)) => Some((marginal_density_with(p.clone(), *b, tol)?, *w)),
                (None, None) => None,
                _ => return Err(HarnessError::validation("beta and window go together")),
            };
            let mut t = Table::new(&[
                ("atom", "turns"),
                ("weight", "probability"),
                ("order", "derivative order"),
                ("omega", "dimensionless"),
                ("window_mass", "probability"),
            ]);
            let mut masses = Vec::new();
            for a in &atoms {
                let wm = match &density {
                    Some((d, w)) => {
                        let x = interval_mass(d, &CircleInterval::new(a.atom, *w)?)?;
                        masses.push(x);
                        num(x)
                    }
                    None => String::new(),
                };
                t.push(vec![num(a.atom), num(a.weight), a.order.to_string(), num(a.omega), wm]);
            }
            art.add("atoms.csv", t.render());
            art.add_summary(json!({ "atoms": atoms.len(), "window_masses": masses }));
        }
        Experiment::ProofReplay { max_m0, power } => {
            if *max_m0 < 1 {
                return Err(HarnessError::validation("max_m0 must be at least 1"));
            }
            let s = if *power == 3 {
                ExactSchedule::standard()
            } else {
                ExactSchedule::with_power(*power)
            };
            let mut reports = Vec::new();
            for m0 in 1..=*max_m0 {
                reports.extend(check_case(m0, &s)?);
            }
            let first = reports.iter().find(|r| !r.holds).map(|r| r.csv_row());
            art.add("steps.csv", reports_to_csv(&reports));
            art.add_summary(json!({
                "steps": reports.len(),
                "holding": reports.iter().filter(|r| r.holds).count(),
                "first_failure": first,
            }));
        }
        Experiment::SymCalibrate {
            m_max,
            ladder,
            profile,
            options,
        } => {
            let l = sym_ladder(ladder, *m_max)?;
            let opts: CalibrationOptions = options.clone().unwrap_or_default();
            let c = calibrate(&l, *m_max, *profile, &opts)?;
            let mut t = Table::new(&[
                ("m", "index"),
                ("beta", "dimensionless"),
                ("eps", "dimensionless"),
                ("min_mass", "probability"),
                ("target", "probability"),
                ("doublings", "count"),
                ("halvings", "count"),
                ("worst_shift", "probability"),
            ]);
            for (lv, eps) in c.levels.iter().zip(&c.schedule.eps) {
                t.push(vec![
                    lv.m.to_string(),
                    num(lv.beta),
                    num(*eps),
                    num(lv.min_mass),
                    num(lv.target),
                    lv.doublings.to_string(),
                    lv.halvings.to_string(),
                    lv.worst_shift.map(num).unwrap_or_default(),
                ]);
            }
            art.add("calibration.csv", t.render());
            let mut js = serde_json::to_string_pretty(&c).expect("calibration serializes");
            js.push('\n');
            art.add("calibration.json", js);
            art.add_summary(json!({ "eps": c.schedule.eps, "beta": c.schedule.beta, "validation": c.validation }));
        }
        Experiment::SymSweep {
            m_max,
            ladder,
            schedule,
            signs: sig,
            beta,
            depth,
        } => {
            let betas = beta.values()?;
            let sig = signs(sig)?;
            let l = sym_ladder(ladder, *m_max)?;
            let (s, _) = sym_schedule(schedule, &l, *m_max)?;
            let phi = build_phi(&sig, &s.eps, &l, *m_max)?;
            let table = truncate_depth(&phi, *depth)?;
            let lip = phi.lip_bound();
            let rows = betas
                .par_iter()
                .map(|&b| {
                    let mu = equilibrium_state(&table, b)?;
                    Ok((b, clopen_mass(&mu, &u_plus())?, clopen_mass(&mu, &u_minus())?, mu.pressure))
                })
                .collect::<gibbs_core::Result<Vec<_>>>()?;
            let mut t = Table::new(&[
                ("beta", "dimensionless"),
                ("mass_plus", "probability"),
                ("mass_minus", "probability"),
                ("pressure", "nats"),
                ("truncation_budget", "nats"),
            ]);
            for &(b, p, m, pr) in &rows {
                t.push(vec![num(b), num(p), num(m), num(pr), num(truncation_budget(b, lip, *depth))]);
            }
            art.add("sweep.csv", t.render());
            art.add(
                "sweep.svg",
                mass_chart(
                    &format!("clopen masses, signs {sig}"),
                    &[
                        Series {
                            name: "U plus",
                            points: rows.iter().map(|r| (r.0, r.1)).collect(),
                        },
                        Series {
                            name: "U minus",
                            points: rows.iter().map(|r| (r.0, r.2)).collect(),
                        },
                    ],
                ),
            );
            art.add_summary(json!({ "rows": rows.len(), "eps": s.eps, "beta": s.beta }));
        }
        Experiment::SymVerify {
            m_max,
            ladder,
            schedule,
            signs: sig,
            m,
            m_hat,
            grid_points,
            depth,
            resolution,
        } => {
            let sig = signs(sig)?;
            let l = sym_ladder(ladder, *m_max)?;
            let (s, profile) = sym_schedule(schedule, &l, *m_max)?;
            let profile = profile.unwrap_or(DeltaProfile::Full);
            if *m == 0 || *m_hat > s.levels() || m > m_hat {
                return Err(HarnessError::validation("need 1 <= m <= m_hat <= m_max"));
            }
            let grid = log_grid(s.beta[m - 1], s.beta[m_hat - 1], *grid_points);
            let margins = verify_symbolic_statement(&sig, *m, *m_hat, &grid, &s, &l, profile, *depth, *resolution)?;
            let mut t = Table::new(&[
                ("beta", "dimensionless"),
                ("mass", "probability"),
                ("required", "probability"),
                ("margin", "probability"),
                ("truncation_budget", "nats"),
                ("holds", "bool"),
            ]);
            for r in &margins {
                t.push(vec![
                    num(r.beta),
                    num(r.mass),
                    num(r.required),
                    num(r.margin),
                    num(r.truncation_budget),
                    bool_cell(r.holds),
                ]);
            }
            art.add("verify.csv", t.render());
            art.add_summary(json!({
                "all_hold": margins.iter().all(|r| r.holds),
                "worst_margin": margins.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min),
                "eps": s.eps,
                "beta": s.beta,
                "validation": "grid-validated",
            }));
        }
        Experiment::Ladder { spec, m_max } => {
            let l = entropy_ladder(spec, *m_max)?;
            let mut t = Table::new(&[
                ("m", "index"),
                ("entropy_plus", "nats"),
                ("entropy_minus", "nats"),
                ("order", "symbols"),
                ("forbidden_plus", "words"),
            ]);
            for m in 0..=*m_max {
                let words: Vec<String> = l.plus[m].forbidden().iter().map(|w| word_text(w)).collect();
                t.push(vec![
                    m.to_string(),
                    num(l.entropy_plus[m]),
                    num(l.entropy_minus[m]),
                    l.plus[m].order().to_string(),
                    words.join(" "),
                ]);
            }
            art.add("ladder.csv", t.render());
            let mut js = serde_json::to_string_pretty(&l).expect("ladders serialize");
            js.push('\n');
            art.add("ladder.json", js);
            art.add_summary(json!({ "levels": m_max + 1 }));
        }
        Experiment::OrbitChecks { max_period, n, levels } => {
            if *levels == 0 {
                return Err(HarnessError::validation("levels must be at least 1"));
            }
            let me = marginal_entropy_argmax(*n)?;
            let l = fixed_point_ladder(*levels)?;
            let eps: Vec<f64> = (0..*levels).map(|i| 0.5f64.powi(i as i32)).collect();
            let phi = build_phi(&SignSequence::alternating(Sign::Plus, *levels), &eps, &l, *levels)?;
            let report = maximizing_orbit_check(&phi, *max_period)?;
            let mut t = Table::new(&[
                ("word", "symbols"),
                ("period", "sites"),
                ("average", "dimensionless"),
                ("maximizer", "bool"),
            ]);
            for (w, avg) in &report.orbits {
                t.push(vec![word_text(w), w.len().to_string(), num(*avg), bool_cell(report.maximizers.contains(w))]);
            }
            art.add("orbits.csv", t.render());
            let mut m = Table::new(&[("n", "sites"), ("alpha", "probability"), ("entropy", "nats")]);
            m.push(vec![n.to_string(), num(me.alpha), num(me.entropy)]);
            art.add("marginal_entropy.csv", m.render());
            art.add_summary(json!({
                "alpha": me.alpha,
                "entropy": me.entropy,
                "maximizers": report.maximizers.iter().map(|w| word_text(w)).collect::<Vec<_>>(),
                "max_value": report.max_value,
            }));
        }
    }
    Ok(art)
}
