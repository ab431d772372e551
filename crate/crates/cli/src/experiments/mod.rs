mod frame;
mod leakage;
mod pairing;
mod sector;

use anyhow::Result;
use dqlab_core::hamiltonians::{dipolar_from_geometry, DotGeometry};
use dqlab_core::spin::spec::normalize_profile;
use dqlab_core::spin::{SpinBathSpec, Zeeman};
use nalgebra::DMatrix;
use rand::Rng;

use crate::{Context, Outcome};

pub type Experiment = fn(&Context) -> Result<Outcome>;

/// Static registry in listing order.
pub const EXPERIMENTS: [(&str, &str, Experiment); 11] = [
    (
        "frame-check",
        "dressed frame: h_m, orthonormality, closure, matrix reps",
        frame::frame_check,
    ),
    (
        "gate-compile",
        "pulse algebra identities and compiled single-qubit gates",
        frame::gate_compile,
    ),
    (
        "leakage-report",
        "leakage coefficients by oracle and the K scaling of the leak ratio",
        leakage::leakage_report,
    ),
    (
        "bangbang-sweep",
        "leak probability vs bang-bang period at fixed total time",
        leakage::bangbang_sweep,
    ),
    (
        "leo-verify",
        "leakage-elimination operator constructions and sign flip",
        leakage::leo_verify,
    ),
    (
        "froehlich-check",
        "effective pairing interaction vs exact diagonalization",
        pairing::froehlich_check,
    ),
    (
        "bcs-uniform",
        "uniform BCS solutions against the closed form",
        pairing::bcs_uniform,
    ),
    (
        "bcs-random",
        "BCS solution for the configured bath",
        pairing::bcs_random,
    ),
    (
        "gap-vs-filling",
        "uniform gap over filling with exact excitation gaps",
        pairing::gap_vs_filling,
    ),
    (
        "two-qubit-check",
        "dressed two-qubit phase gate from S_z S_z coupling",
        frame::two_qubit_check,
    ),
    (
        "sector-crosscheck",
        "sector vs full-space evolution and sector dimensions",
        sector::sector_crosscheck,
    ),
];

pub fn lookup(name: &str) -> Option<Experiment> {
    EXPERIMENTS.iter().find(|(n, _, _)| *n == name).map(|(_, _, f)| *f)
}

/// Random bath for sweeps: `K` in `1..=k_max`, `2I` from `two_is`, profile
/// in `[0.2, 1)`, optional random-geometry dipolar couplings.
pub(crate) fn random_spec(
    rng: &mut impl Rng,
    k_min: usize,
    k_max: usize,
    two_is: &[u8],
    dipolar: f64,
) -> Result<SpinBathSpec<f64>> {
    let k = rng.random_range(k_min..=k_max);
    let two_i = two_is[rng.random_range(0..two_is.len())];
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..1.0)).collect();
    let a_hf = rng.random_range(0.5..1.5);
    let zeeman = Zeeman {
        g_star: 1.0,
        mu_b: 1.0,
        g_n: rng.random_range(0.0..0.1),
        mu_n: 0.1,
        b: rng.random_range(0.1..1.0),
    };
    let b = if dipolar > 0.0 {
        let positions = (0..k)
            .map(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0)))
            .collect();
        dipolar_from_geometry(&DotGeometry {
            positions,
            prefactor: dipolar,
        })?
    } else {
        DMatrix::zeros(k, k)
    };
    Ok(SpinBathSpec::new(two_i, normalize_profile(&raw)?, a_hf, zeeman, b)?)
}

pub(crate) fn fmax(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(0.0, f64::max)
}
