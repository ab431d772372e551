use anyhow::Result;
use dqlab_core::dressed::{
    build_frame_general, build_frame_n1, closure_norm, compile_gate, compose, gate_infidelity, matrix_rep, pauli,
    pulse_unitary, two_qubit_phase_check, u_phi_theta, y_conjugated, DressedFrame, Mat2, PulseSegment, Selector,
};
use dqlab_core::hamiltonians::{build_dominant, flipflop_expr};
use dqlab_core::spin::ops::{spin_expr, ELECTRON};
use dqlab_core::spin::{Component, LinearOp, SpinBathSpec};
use dqlab_core::C64;
use nalgebra::Matrix2;
use rand::Rng;
use serde::Deserialize;
use serde_json::{json, Value};

use super::{fmax, random_spec};
use crate::output::{num, Table};
use crate::rng::point_stream;
use crate::{row, Context, Outcome};

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FrameParams {
    n: usize,
    f: f64,
    selector: String,
    random_specs: usize,
    k_max: usize,
    n_max: usize,
}

impl Default for FrameParams {
    fn default() -> Self {
        Self {
            n: 1,
            f: 1.0,
            selector: "max-h".into(),
            random_specs: 0,
            k_max: 8,
            n_max: 2,
        }
    }
}

struct FrameStats {
    dim: usize,
    h_m: f64,
    ortho: f64,
    closure: f64,
    rep_vf: Option<f64>,
    rep_sz: Option<f64>,
}

fn max_dev(a: &Mat2<f64>, b: &Mat2<f64>) -> f64 {
    fmax((a - b).iter().map(|z| z.norm()))
}

fn frame_stats(spec: &SpinBathSpec<f64>, frame: &DressedFrame<f64>, f: f64) -> Result<FrameStats> {
    let basis = frame.basis();
    let hd = build_dominant(spec, f, basis)?;
    let closure = closure_norm(frame, &hd)?;
    let (rep_vf, rep_sz) = if frame.n() == 1 {
        let vf = LinearOp::hermitian_from_expr(&flipflop_expr(spec), basis)?;
        let sz = LinearOp::hermitian_from_expr(&spin_expr(ELECTRON, Component::Z), basis)?;
        let half = C64::new(0.5, 0.0);
        (
            Some(max_dev(&matrix_rep(&vf, frame)?, &(pauli('X') * half))),
            Some(max_dev(&matrix_rep(&sz, frame)?, &(pauli('Z') * half))),
        )
    } else {
        (None, None)
    };
    Ok(FrameStats {
        dim: basis.dim(),
        h_m: frame.h_m(),
        ortho: frame.orthonormality_defect(),
        closure,
        rep_vf,
        rep_sz,
    })
}

fn opt(x: Option<f64>) -> Value {
    x.map(num).unwrap_or(Value::Null)
}

pub fn frame_check(ctx: &Context) -> Result<Outcome> {
    let p: FrameParams = ctx.params()?;
    let selector = match p.selector.as_str() {
        "max-h" => Selector::MaxH,
        "min-h" => Selector::MinH,
        other => anyhow::bail!("selector `{other}` is not max-h or min-h"),
    };
    let spec = &ctx.spec;
    let frame = if p.n == 1 {
        build_frame_n1(spec)?
    } else {
        build_frame_general(spec, p.n, selector)?
    };
    let own = frame_stats(spec, &frame, p.f)?;
    let mut table = Table::new(&[
        "index",
        "k",
        "two_i",
        "n",
        "dim",
        "h_m",
        "closure",
        "orthonormality",
        "rep_vf",
        "rep_sz",
    ]);
    let rows = ctx.sweep(p.random_specs, |i| {
        let mut rng = point_stream(ctx.seed, i);
        let s = random_spec(&mut rng, 2, p.k_max, &[1, 2], 0.01)?;
        let n = rng.random_range(1..=p.n_max.min(s.max_pairs() - 1).max(1));
        let f = rng.random_range(0.2..2.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let fr = if n == 1 {
            build_frame_n1(&s)?
        } else {
            build_frame_general(&s, n, Selector::MaxH)?
        };
        Ok((s.k(), s.two_i(), n, frame_stats(&s, &fr, f)?))
    })?;
    for (i, (k, two_i, n, st)) in rows.iter().enumerate() {
        table.push(row![
            i,
            *k,
            *two_i,
            *n,
            st.dim,
            st.h_m,
            st.closure,
            st.ortho,
            st.rep_vf.unwrap_or(f64::NAN),
            st.rep_sz.unwrap_or(f64::NAN)
        ]);
    }
    let n1: Vec<&FrameStats> = rows.iter().filter(|r| r.2 == 1).map(|r| &r.3).collect();
    let sweep = json!({
        "count": rows.len(),
        "n1_count": n1.len(),
        "max_closure": num(fmax(rows.iter().map(|r| r.3.closure))),
        "max_orthonormality": num(fmax(rows.iter().map(|r| r.3.ortho))),
        "max_rep_vf_error": num(fmax(n1.iter().filter_map(|s| s.rep_vf))),
        "max_rep_sz_error": num(fmax(n1.iter().filter_map(|s| s.rep_sz))),
        "max_h_m_error_n1": num(fmax(n1.iter().map(|s| (s.h_m - 1.0).abs()))),
    });
    let report = json!({
        "k": spec.k(),
        "two_i": spec.two_i(),
        "n": p.n,
        "dim": own.dim,
        "h_m": num(own.h_m),
        "orthonormality": num(own.ortho),
        "closure_norm": num(own.closure),
        "raising_defect": num(frame.raising_defect()?),
        "leak_modes": frame.leak_modes().len(),
        "rep_vf_error": opt(own.rep_vf),
        "rep_sz_error": opt(own.rep_sz),
        "sweep": sweep,
    });
    let summary = vec![format!("h_m = {:.12}, closure = {:.3e}", own.h_m, own.closure)];
    Ok(Outcome {
        report,
        tables: vec![("sweep".into(), table)],
        summary,
    })
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct GateParams {
    grid: usize,
    targets: usize,
}

impl Default for GateParams {
    fn default() -> Self {
        Self { grid: 20, targets: 100 }
    }
}

/// Haar-random SU(2) times a random phase.
fn random_unitary(rng: &mut impl Rng) -> Mat2<f64> {
    let q = loop {
        let q: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let n2: f64 = q.iter().map(|x| x * x).sum();
        if n2 > 1e-6 && n2 <= 1.0 {
            let n = n2.sqrt();
            break q.map(|x| x / n);
        }
    };
    let i = C64::new(0.0, 1.0);
    let su = Matrix2::identity() * C64::new(q[0], 0.0)
        - (pauli::<f64>('X') * C64::from(q[1]) + pauli('Y') * C64::from(q[2]) + pauli('Z') * C64::from(q[3])) * i;
    su * C64::from_polar(1.0, rng.random_range(-3.2..3.2))
}

pub fn gate_compile(ctx: &Context) -> Result<Outcome> {
    let p: GateParams = ctx.params()?;
    let amp = ctx.spec.flip_amplitude();
    let mut grid_err = 0.0f64;
    let mut pulse_err = 0.0f64;
    let g = p.grid.max(2);
    for i in 0..g {
        for j in 0..g {
            let phi = -3.0 + 6.0 * i as f64 / (g - 1) as f64;
            let theta = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * j as f64 / (g - 1) as f64;
            grid_err = grid_err.max(max_dev(&u_phi_theta(phi, theta), &y_conjugated(phi, theta)));
            if phi >= 0.0 && theta.sin() * amp > 0.0 {
                let seg = PulseSegment::from_angles(phi, theta, amp)?;
                pulse_err = pulse_err.max(max_dev(&pulse_unitary(&seg), &u_phi_theta(phi, theta)));
            }
        }
    }
    let mut table = Table::new(&["index", "segments", "total_time", "infidelity"]);
    let rows = ctx.sweep(p.targets, |i| {
        let target = random_unitary(&mut point_stream(ctx.seed, i));
        let segs = compile_gate(&target, &ctx.spec)?;
        let t: f64 = segs.iter().map(|s| s.duration).sum();
        Ok((segs.len(), t, gate_infidelity(&compose(&segs), &target)))
    })?;
    for (i, (n, t, inf)) in rows.iter().enumerate() {
        table.push(row![i, *n, *t, *inf]);
    }
    let worst = fmax(rows.iter().map(|r| r.2));
    let report = json!({
        "amplitude": num(amp),
        "grid": g,
        "three_factor_max_error": num(grid_err),
        "pulse_max_error": num(pulse_err),
        "targets": rows.len(),
        "max_infidelity": num(worst),
        "max_segments": rows.iter().map(|r| r.0).max().unwrap_or(0),
    });
    Ok(Outcome {
        report,
        tables: vec![("targets".into(), table)],
        summary: vec![format!(
            "three-factor error {grid_err:.2e}, worst infidelity {worst:.2e}"
        )],
    })
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TwoQubitParams {
    j: f64,
}

impl Default for TwoQubitParams {
    fn default() -> Self {
        Self { j: 0.1 }
    }
}

pub fn two_qubit_check(ctx: &Context) -> Result<Outcome> {
    let p: TwoQubitParams = ctx.params()?;
    let r = two_qubit_phase_check(&ctx.spec, &ctx.spec, p.j)?;
    let mut table = Table::new(&["row", "col", "re", "im"]);
    for a in 0..4 {
        for b in 0..4 {
            let z = r.gate[(a, b)];
            table.push(row![a, b, z.re, z.im]);
        }
    }
    let report = json!({
        "coupling": num(r.coupling),
        "time": num(r.time),
        "rep_error": num(r.rep_error),
        "leak_residual": num(r.leak_residual),
        "unitarity_defect": num(r.unitarity_defect),
        "g1": [num(r.g1.re), num(r.g1.im)],
        "g2": [num(r.g2.re), num(r.g2.im)],
        "cz_distance": num(r.cz_distance),
    });
    Ok(Outcome {
        report,
        tables: vec![("gate".into(), table)],
        summary: vec![format!("CZ distance {:.3e}", r.cz_distance)],
    })
}
