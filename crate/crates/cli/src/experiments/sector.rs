use anyhow::{bail, Result};
use dqlab_core::hamiltonians::build_total;
use dqlab_core::spin::basis::{binomial, sector_dimension};
use dqlab_core::spin::{Basis, KetState, Propagator, SpinBathSpec};
use dqlab_core::C64;
use nalgebra::DVector;
use rand::Rng;
use serde::Deserialize;
use serde_json::json;

use crate::output::{num, Table};
use crate::rng::stream;
use crate::{row, Context, Outcome};

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SectorParams {
    n: usize,
    time: f64,
    full_k_max: usize,
    dims_k_max: usize,
}

impl Default for SectorParams {
    fn default() -> Self {
        Self {
            n: 1,
            time: 1.0,
            full_k_max: 8,
            dims_k_max: 10,
        }
    }
}

pub fn sector_crosscheck(ctx: &Context) -> Result<Outcome> {
    let p: SectorParams = ctx.params()?;
    let spec = &ctx.spec;
    if spec.k() > p.full_k_max {
        bail!(
            "K = {} exceeds full_k_max = {} for the full-space evolution",
            spec.k(),
            p.full_k_max
        );
    }
    let sector = Basis::sector(spec, p.n)?;
    let mut rng = stream(ctx.seed, 1);
    let amps = DVector::from_fn(sector.dim(), |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let psi = KetState::new(sector.clone(), amps)?.normalized()?;
    let h_sector = build_total(spec, &sector)?;
    let out_sector = Propagator::new(&h_sector)?.evolve(&psi, p.time)?;
    let full = Basis::full(spec);
    let h_full = build_total(spec, &full)?;
    let out_full = Propagator::new(&h_full)?.evolve(&psi.embed(&full)?, p.time)?;
    let back = out_full.project(&sector)?;
    let fidelity = back.fidelity(&out_sector)?;
    let outside = (1.0 - back.norm().powi(2)).max(0.0);
    let points: Vec<(usize, usize)> = (2..=p.dims_k_max)
        .flat_map(|k| (0..=k + 1).map(move |n| (k, n)))
        .collect();
    let dims = ctx.sweep(points.len(), |i| {
        let (k, n) = points[i];
        let s = SpinBathSpec::<f64>::uniform(k, 1)?;
        Ok(Basis::sector(&s, n)?.dim())
    })?;
    let mut table = Table::new(&["k", "n", "dim", "binomial", "omega"]);
    let mut mismatches = 0usize;
    for (&(k, n), &d) in points.iter().zip(&dims) {
        let c = binomial(k as u64 + 1, n as u64);
        if d as u128 != c {
            mismatches += 1;
        }
        table.push(row![k, n, d, c as usize, sector_dimension(k, 1, n) as usize]);
    }
    let report = json!({
        "k": spec.k(),
        "two_i": spec.two_i(),
        "n": p.n,
        "sector_dim": sector.dim(),
        "full_dim": full.dim(),
        "time": num(p.time),
        "fidelity": num(fidelity),
        "infidelity": num(1.0 - fidelity),
        "outside_sector": num(outside),
        "dimension_mismatches": mismatches,
        "dimension_cases": points.len(),
    });
    Ok(Outcome {
        report,
        tables: vec![("dims".into(), table)],
        summary: vec![format!("fidelity {fidelity:.15}, {mismatches} dimension mismatches")],
    })
}
