use anyhow::Result;
use dqlab_core::dressed::build_frame_n1;
use dqlab_core::hamiltonians::build_total;
use dqlab_core::leakage::{
    anticommutation_defect, bangbang_evolve, constrained_c1_check, dipolar_report, free_leak, leakage_elimination_op,
    leo_exponential, leo_spectral, overhauser_report, perturbed_profile, power_law_fit, split_leakage,
    BangBangSchedule, CoefficientCheck,
};
use dqlab_core::spin::{SpinBathSpec, Zeeman};
use dqlab_core::C64;
use nalgebra::DMatrix;
use serde::Deserialize;
use serde_json::{json, Value};

use super::{fmax, random_spec};
use crate::config::DipolarSource;
use crate::output::{num, Table};
use crate::rng::point_stream;
use crate::{row, Context, Outcome};

fn check_json(c: &CoefficientCheck<f64>) -> Value {
    json!({ "name": c.name, "oracle": num(c.oracle), "quoted": num(c.quoted), "status": c.status() })
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct LeakageParams {
    k_sweep: Vec<usize>,
    two_is: Vec<u8>,
    eps: f64,
    extrapolate_k: f64,
}

impl Default for LeakageParams {
    fn default() -> Self {
        Self {
            k_sweep: (4..=12).collect(),
            two_is: vec![1, 2],
            eps: 0.3,
            extrapolate_k: 1e5,
        }
    }
}

pub fn leakage_report(ctx: &Context) -> Result<Outcome> {
    let p: LeakageParams = ctx.params()?;
    let spec = &ctx.spec;
    let frame = build_frame_n1(spec)?;
    let over = overhauser_report(spec, &frame)?;
    let dip = dipolar_report(spec, &frame)?;
    let mut checks: Vec<Value> = over.checks.iter().chain(&dip.checks).map(check_json).collect();
    if let DipolarSource::Constrained { b_bar } = ctx.loaded.config.spec.dipolar {
        checks.push(check_json(&constrained_c1_check(spec, &frame, b_bar)?));
    }
    let points: Vec<(u8, usize)> = p
        .two_is
        .iter()
        .flat_map(|&t| p.k_sweep.iter().map(move |&k| (t, k)))
        .collect();
    let rows = ctx.sweep(points.len(), |i| {
        let (two_i, k) = points[i];
        let s = SpinBathSpec::new(
            two_i,
            perturbed_profile(k, p.eps),
            1.0,
            Zeeman::zero(),
            DMatrix::zeros(k, k),
        )?;
        let r = overhauser_report(&s, &build_frame_n1(&s)?)?;
        Ok((r.ratio, r.estimate))
    })?;
    let mut table = Table::new(&["two_i", "k", "ratio", "estimate"]);
    for ((two_i, k), (ratio, est)) in points.iter().zip(&rows) {
        table.push(row![*two_i, *k, *ratio, *est]);
    }
    let mut fits = Vec::new();
    for &two_i in &p.two_is {
        let (ks, rs): (Vec<f64>, Vec<f64>) = points
            .iter()
            .zip(&rows)
            .filter(|((t, _), _)| *t == two_i)
            .map(|((_, k), (r, _))| (*k as f64, *r))
            .unzip();
        let exponent = if ks.len() >= 2 {
            power_law_fit(&ks, &rs)?.0
        } else {
            f64::NAN
        };
        // uniform profile: 1 / (sqrt(K) I sum alpha) = 1 / (K I)
        let extrapolated = 2.0 / (p.extrapolate_k * two_i as f64);
        fits.push(json!({ "two_i": two_i, "exponent": num(exponent), "extrapolated_k": num(p.extrapolate_k), "extrapolated_estimate": num(extrapolated) }));
    }
    let report = json!({
        "overhauser": {
            "ket0_coeff": num(over.ket0_coeff),
            "ket0_leak": num(over.ket0_leak),
            "diag_coeff": num(over.diag_coeff),
            "leak_norm": num(over.leak_norm),
            "ratio": num(over.ratio),
            "estimate": num(over.estimate),
        },
        "dipolar": {
            "ket0_coeff": num(dip.ket0_coeff),
            "ket0_leak": num(dip.ket0_leak),
            "diag_coeff": num(dip.diag_coeff),
            "leak_norm": num(dip.leak_norm),
        },
        "checks": checks,
        "scaling": fits,
    });
    let summary = checks
        .iter()
        .map(|c| {
            format!(
                "{}: {}",
                c["name"].as_str().unwrap_or(""),
                c["status"].as_str().unwrap_or("")
            )
        })
        .collect();
    Ok(Outcome {
        report,
        tables: vec![("scaling".into(), table)],
        summary,
    })
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct BangBangParams {
    total_time: f64,
    first_cycles: usize,
    octaves: usize,
    c0: [f64; 2],
    c1: [f64; 2],
}

impl Default for BangBangParams {
    fn default() -> Self {
        Self {
            total_time: 2.0,
            first_cycles: 8,
            octaves: 6,
            c0: [0.6, 0.0],
            c1: [0.0, 0.8],
        }
    }
}

pub fn bangbang_sweep(ctx: &Context) -> Result<Outcome> {
    let p: BangBangParams = ctx.params()?;
    let spec = &ctx.spec;
    let frame = build_frame_n1(spec)?;
    let h = build_total(spec, frame.basis())?;
    let psi = frame
        .logical(C64::new(p.c0[0], p.c0[1]), C64::new(p.c1[0], p.c1[1]))
        .normalized()?;
    let rows = ctx.sweep(p.octaves, |i| {
        let sched = BangBangSchedule::covering(p.total_time, p.first_cycles << i)?;
        let (_, trace) = bangbang_evolve(&h, &frame, &sched, &psi)?;
        Ok((sched.tau(), sched.cycles(), trace.last().copied().unwrap_or(0.0)))
    })?;
    let free = free_leak(&h, &frame, p.total_time, &psi)?;
    let mut table = Table::new(&["tau", "cycles", "leak"]);
    for (tau, cycles, leak) in &rows {
        table.push(row![*tau, *cycles, *leak]);
    }
    let taus: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let leaks: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let slope = if rows.len() >= 2 {
        power_law_fit(&taus, &leaks)?.0
    } else {
        f64::NAN
    };
    let smallest = leaks.last().copied().unwrap_or(f64::NAN);
    let report = json!({
        "total_time": num(p.total_time),
        "slope": num(slope),
        "free_leak": num(free),
        "smallest_tau_leak": num(smallest),
        "suppression": num(free / smallest),
    });
    Ok(Outcome {
        report,
        tables: vec![("sweep".into(), table)],
        summary: vec![format!("slope {slope:.3}, free {free:.3e}, suppressed {smallest:.3e}")],
    })
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct LeoParams {
    specs: usize,
    k_max: usize,
    dipolar: f64,
}

impl Default for LeoParams {
    fn default() -> Self {
        Self {
            specs: 20,
            k_max: 6,
            dipolar: 0.01,
        }
    }
}

pub fn leo_verify(ctx: &Context) -> Result<Outcome> {
    let p: LeoParams = ctx.params()?;
    let rows = ctx.sweep(p.specs, |i| {
        let s = random_spec(&mut point_stream(ctx.seed, i), 2, p.k_max, &[1, 2], p.dipolar)?;
        let frame = build_frame_n1(&s)?;
        let diff = fmax(
            (leo_exponential(&s, &frame)? - leo_spectral(&frame))
                .iter()
                .map(|z| z.norm()),
        );
        let r = leakage_elimination_op(&s, &frame)?;
        let h = build_total(&s, frame.basis())?;
        let (_, h_l) = split_leakage(&h, &frame)?;
        Ok((
            s.k(),
            s.two_i(),
            frame.basis().dim(),
            diff,
            anticommutation_defect(&r, &h_l)?,
            h_l.max_abs(),
        ))
    })?;
    let mut table = Table::new(&[
        "index",
        "k",
        "two_i",
        "dim",
        "construction_diff",
        "anticommutation",
        "h_l_max",
    ]);
    for (i, r) in rows.iter().enumerate() {
        table.push(row![i, r.0, r.1, r.2, r.3, r.4, r.5]);
    }
    let report = json!({
        "specs": rows.len(),
        "max_construction_diff": num(fmax(rows.iter().map(|r| r.3))),
        "max_anticommutation": num(fmax(rows.iter().map(|r| r.4))),
        "min_h_l_max": num(rows.iter().map(|r| r.5).fold(f64::INFINITY, f64::min)),
    });
    Ok(Outcome {
        report,
        tables: vec![("specs".into(), table)],
        summary: Vec::new(),
    })
}
