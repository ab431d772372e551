//! Conserved-sector bases.
//!
//! A configuration stores one excitation count `q` per slot: slot 0 is the
//! electron (`q = n_0 = m_s + 1/2`), slots `1..=K` are the nuclei
//! (`q = n_i = m_i + I`). The pair number of a configuration is `sum q`,
//! the eigenvalue of `N = n + n_0`, and `J_z = N - K I - 1/2`.
//!
//! Configurations are ordered lexicographically over `(m_s, m_1, ..., m_K)`,
//! electron slot first.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{range, Error, Result};
use crate::scalar::Real;
use crate::spin::spec::SpinBathSpec;

pub type Config = Box<[u8]>;

/// Largest sector that [`Basis::sector`] and [`Basis::nuclear_sector`] will enumerate.
pub const SECTOR_DIM_LIMIT: usize = 1 << 20;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BasisKind {
    Full,
    /// Fixed total pair number `N`.
    Sector(usize),
    /// Electron slot frozen out; fixed nuclear pair number `n` when `Some`.
    Nuclear(Option<usize>),
    /// Bare electron spin.
    Electron,
}

#[derive(Clone, Debug)]
pub struct Basis {
    two_s: Vec<u8>,
    kind: BasisKind,
    configs: Vec<Config>,
    index: HashMap<Config, usize>,
}

impl PartialEq for Basis {
    fn eq(&self, other: &Self) -> bool {
        self.two_s == other.two_s && self.kind == other.kind && self.configs == other.configs
    }
}

fn enumerate(two_s: &[u8], total: Option<usize>) -> Vec<Config> {
    // suffix capacity for pruning
    let mut cap = vec![0usize; two_s.len() + 1];
    for s in (0..two_s.len()).rev() {
        cap[s] = cap[s + 1] + two_s[s] as usize;
    }
    let mut out = Vec::new();
    let mut cur = vec![0u8; two_s.len()];
    fn rec(
        slot: usize,
        used: usize,
        two_s: &[u8],
        cap: &[usize],
        total: Option<usize>,
        cur: &mut Vec<u8>,
        out: &mut Vec<Config>,
    ) {
        if slot == two_s.len() {
            if total.is_none_or(|t| t == used) {
                out.push(cur.clone().into_boxed_slice());
            }
            return;
        }
        for q in 0..=two_s[slot] {
            let u = used + q as usize;
            if let Some(t) = total {
                if u > t || u + cap[slot + 1] < t {
                    continue;
                }
            }
            cur[slot] = q;
            rec(slot + 1, u, two_s, cap, total, cur, out);
        }
        cur[slot] = 0;
    }
    rec(0, 0, two_s, &cap, total, &mut cur, &mut out);
    out
}

impl Basis {
    fn build(two_s: Vec<u8>, kind: BasisKind, total: Option<usize>) -> Self {
        let configs = enumerate(&two_s, total);
        let index = configs.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect();
        Self {
            two_s,
            kind,
            configs,
            index,
        }
    }

    fn layout<T: Real>(spec: &SpinBathSpec<T>, electron: bool) -> Vec<u8> {
        let mut v = vec![u8::from(electron)];
        v.extend(std::iter::repeat_n(spec.two_i(), spec.k()));
        v
    }

    /// The whole electron + bath space, dimension `2 (2I+1)^K`.
    pub fn full<T: Real>(spec: &SpinBathSpec<T>) -> Arc<Self> {
        Arc::new(Self::build(Self::layout(spec, true), BasisKind::Full, None))
    }

    /// Sector of fixed total pair number `N`, `0 <= N <= 2KI + 1`.
    pub fn sector<T: Real>(spec: &SpinBathSpec<T>, n: usize) -> Result<Arc<Self>> {
        if n > spec.max_pairs() {
            return Err(range(
                "pair number",
                format!("N = {n} not in [0, {}]", spec.max_pairs()),
            ));
        }
        let layout = Self::layout(spec, true);
        check_dim(&layout, n)?;
        Ok(Arc::new(Self::build(layout, BasisKind::Sector(n), Some(n))))
    }

    /// Bath-only space (the electron slot carries a single state).
    pub fn nuclear_full<T: Real>(spec: &SpinBathSpec<T>) -> Arc<Self> {
        Arc::new(Self::build(Self::layout(spec, false), BasisKind::Nuclear(None), None))
    }

    /// Bath-only space at fixed nuclear pair number `n`, `0 <= n <= 2KI`.
    pub fn nuclear_sector<T: Real>(spec: &SpinBathSpec<T>, n: usize) -> Result<Arc<Self>> {
        let max = spec.k() * spec.two_i() as usize;
        if n > max {
            return Err(range("nuclear pair number", format!("n = {n} not in [0, {max}]")));
        }
        let layout = Self::layout(spec, false);
        check_dim(&layout, n)?;
        Ok(Arc::new(Self::build(layout, BasisKind::Nuclear(Some(n)), Some(n))))
    }

    /// The bare electron spin, `{|down>, |up>}`.
    pub fn electron() -> Arc<Self> {
        Arc::new(Self::build(vec![1], BasisKind::Electron, None))
    }

    pub fn dim(&self) -> usize {
        self.configs.len()
    }

    pub fn kind(&self) -> &BasisKind {
        &self.kind
    }

    /// Total pair number if this basis is a fixed-`N` sector.
    pub fn sector_n(&self) -> Option<usize> {
        match self.kind {
            BasisKind::Sector(n) => Some(n),
            BasisKind::Nuclear(n) => n,
            _ => None,
        }
    }

    pub fn two_s(&self) -> &[u8] {
        &self.two_s
    }

    pub fn slots(&self) -> usize {
        self.two_s.len()
    }

    pub fn has_electron(&self) -> bool {
        self.two_s[0] == 1
    }

    pub fn configs(&self) -> &[Config] {
        &self.configs
    }

    pub fn config(&self, i: usize) -> &[u8] {
        &self.configs[i]
    }

    pub fn index_of(&self, config: &[u8]) -> Option<usize> {
        self.index.get(config).copied()
    }

    /// Same slot structure (so operators built for one act on the other).
    pub fn same_layout(&self, other: &Basis) -> bool {
        self.two_s == other.two_s
    }

    pub fn check_same(&self, other: &Basis) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::BasisMismatch(format!(
                "{:?} (dim {}) vs {:?} (dim {})",
                self.kind,
                self.dim(),
                other.kind,
                other.dim()
            )))
        }
    }

    /// Human-readable label, e.g. `u|0,1,0` (electron up, nucleus 2 raised once).
    pub fn label(&self, i: usize) -> String {
        config_label(&self.two_s, &self.configs[i])
    }

    pub fn parse_label(&self, label: &str) -> Result<usize> {
        let (e, rest) = label
            .split_once('|')
            .ok_or_else(|| Error::Parse(format!("bad config label {label:?}")))?;
        let mut cfg = vec![match e {
            "u" => 1u8,
            "d" | "-" => 0u8,
            _ => return Err(Error::Parse(format!("bad electron label {e:?}"))),
        }];
        if !rest.is_empty() {
            for tok in rest.split(',') {
                cfg.push(
                    tok.parse::<u8>()
                        .map_err(|_| Error::Parse(format!("bad occupation {tok:?}")))?,
                );
            }
        }
        self.index_of(&cfg)
            .ok_or_else(|| Error::Parse(format!("label {label:?} not in basis")))
    }
}

pub fn config_label(two_s: &[u8], cfg: &[u8]) -> String {
    let e = if two_s[0] == 0 {
        "-"
    } else if cfg[0] == 1 {
        "u"
    } else {
        "d"
    };
    let nuc: Vec<String> = cfg[1..].iter().map(|q| q.to_string()).collect();
    format!("{e}|{}", nuc.join(","))
}

/// Pair number of a configuration.
pub fn pairs(cfg: &[u8]) -> usize {
    cfg.iter().map(|&q| q as usize).sum()
}

/// `Omega(I, N)`: number of electron + bath configurations with total pair
/// number `N`, by dynamic programming over sites (no closed form is assumed
/// for `I > 1/2`).
pub fn sector_dimension(k: usize, two_i: u8, n: usize) -> u128 {
    let mut slots = vec![1u8];
    slots.extend(std::iter::repeat_n(two_i, k));
    count_configs(&slots, n)
}

fn count_configs(slots: &[u8], n: usize) -> u128 {
    let mut ways = vec![0u128; n + 1];
    ways[0] = 1;
    for &s in slots {
        let mut next = vec![0u128; n + 1];
        for (tot, &w) in ways.iter().enumerate() {
            if w == 0 {
                continue;
            }
            for q in 0..=s as usize {
                if tot + q <= n {
                    next[tot + q] = next[tot + q].saturating_add(w);
                }
            }
        }
        ways = next;
    }
    ways[n]
}

fn check_dim(slots: &[u8], n: usize) -> Result<()> {
    let dim = count_configs(slots, n);
    if dim > SECTOR_DIM_LIMIT as u128 {
        return Err(Error::DimensionOverflow {
            dim: usize::try_from(dim).unwrap_or(usize::MAX),
            limit: SECTOR_DIM_LIMIT,
        });
    }
    Ok(())
}

pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}
