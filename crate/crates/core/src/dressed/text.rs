//! Plain-text frame format.
//!
//! ```text
//! dressed-frame 1
//! k 3
//! two_i 1
//! n 1
//! h_m 1.0000000000000000e0
//! alpha 5.7735026918962573e-1 5.7735026918962573e-1 5.7735026918962573e-1
//! [m]
//! -|0,0,0 1.0000000000000000e0 0.0000000000000000e0
//! [ket0]
//! u|0,0,0 1.0000000000000000e0 0.0000000000000000e0
//! [ket1]
//! d|1,0,0 5.7735026918962573e-1 0.0000000000000000e0
//! ...
//! ```
//!
//! Each amplitude line is `label re im` with 17 significant digits; zero
//! amplitudes are omitted. Leak modes are rebuilt on load.

use std::fmt::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::{Real, C};
use crate::spin::{Basis, KetState, SpinBathSpec};

use super::frame::DressedFrame;

const MAGIC: &str = "dressed-frame 1";

fn num<T: Real>(x: T) -> String {
    format!("{:.16e}", x.to_f64_lossy())
}

fn write_ket<T: Real>(out: &mut String, name: &str, ket: &KetState<T>) {
    let _ = writeln!(out, "[{name}]");
    for (i, a) in ket.amps().iter().enumerate() {
        if *a != C::default() {
            let _ = writeln!(out, "{} {} {}", ket.basis().label(i), num(a.re), num(a.im));
        }
    }
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|_| Error::Parse(format!("line {line}: bad number {tok:?}")))
}

impl<T: Real> DressedFrame<T> {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC}");
        let _ = writeln!(out, "k {}", self.spec().k());
        let _ = writeln!(out, "two_i {}", self.spec().two_i());
        let _ = writeln!(out, "n {}", self.n());
        let _ = writeln!(out, "h_m {}", num(self.h_m()));
        let alpha: Vec<String> = self.spec().alpha().iter().map(|&a| num(a)).collect();
        let _ = writeln!(out, "alpha {}", alpha.join(" "));
        write_ket(&mut out, "m", self.m_state());
        write_ket(&mut out, "ket0", self.ket0());
        write_ket(&mut out, "ket1", self.ket1());
        out
    }

    /// Inverse of [`DressedFrame::to_text`]; `spec` must describe the same
    /// bath (size, spin and profile).
    pub fn from_text(text: &str, spec: &SpinBathSpec<T>) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        match lines.next() {
            Some((_, l)) if l == MAGIC => {}
            _ => return Err(Error::Parse(format!("missing header {MAGIC:?}"))),
        }
        let mut header = |key: &str| -> Result<(usize, String)> {
            let (ln, l) = lines.next().ok_or_else(|| Error::Parse(format!("missing {key}")))?;
            let rest = l
                .strip_prefix(key)
                .and_then(|r| r.strip_prefix(' '))
                .ok_or_else(|| Error::Parse(format!("line {ln}: expected {key}")))?;
            Ok((ln, rest.to_string()))
        };
        let (ln, k) = header("k")?;
        let k: usize = k.parse().map_err(|_| Error::Parse(format!("line {ln}: bad k")))?;
        let (ln, two_i) = header("two_i")?;
        let two_i: u8 = two_i
            .parse()
            .map_err(|_| Error::Parse(format!("line {ln}: bad two_i")))?;
        let (ln, n) = header("n")?;
        let n: usize = n.parse().map_err(|_| Error::Parse(format!("line {ln}: bad n")))?;
        let (ln, h_m) = header("h_m")?;
        let h_m = T::lit(parse_f64(&h_m, ln)?);
        let (ln, alpha) = header("alpha")?;
        let alpha: Vec<f64> = alpha
            .split_whitespace()
            .map(|t| parse_f64(t, ln))
            .collect::<Result<_>>()?;
        if k != spec.k() || two_i != spec.two_i() || alpha.len() != k {
            return Err(Error::InvalidSpec("frame file describes a different bath".into()));
        }
        if alpha
            .iter()
            .zip(spec.alpha())
            .any(|(&a, &b)| (T::lit(a) - b).abs() > T::tol(1e-12))
        {
            return Err(Error::InvalidSpec(
                "frame file has a different hyperfine profile".into(),
            ));
        }
        let nuc = Basis::nuclear_sector(spec, n.checked_sub(1).ok_or_else(|| Error::Parse("n = 0".into()))?)?;
        let sector = Basis::sector(spec, n)?;
        let mut kets: Vec<KetState<T>> = Vec::new();
        let mut current: Option<KetState<T>> = None;
        let expected = ["m", "ket0", "ket1"];
        for (ln, l) in lines {
            if l.is_empty() {
                continue;
            }
            if let Some(name) = l.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
                if let Some(k) = current.take() {
                    kets.push(k);
                }
                if expected.get(kets.len()) != Some(&name) {
                    return Err(Error::Parse(format!("line {ln}: unexpected section [{name}]")));
                }
                let b: &Arc<Basis> = if name == "m" { &nuc } else { &sector };
                current = Some(KetState::zero(b.clone()));
                continue;
            }
            let ket = current
                .as_mut()
                .ok_or_else(|| Error::Parse(format!("line {ln}: amplitude outside a section")))?;
            let toks: Vec<&str> = l.split_whitespace().collect();
            if toks.len() != 3 {
                return Err(Error::Parse(format!("line {ln}: expected `label re im`")));
            }
            let idx = ket
                .basis()
                .parse_label(toks[0])
                .map_err(|e| Error::Parse(format!("line {ln}: {e}")))?;
            ket.amps_mut()[idx] = C::new(T::lit(parse_f64(toks[1], ln)?), T::lit(parse_f64(toks[2], ln)?));
        }
        if let Some(k) = current.take() {
            kets.push(k);
        }
        let [m, ket0, ket1]: [KetState<T>; 3] = kets
            .try_into()
            .map_err(|_| Error::Parse("expected sections [m], [ket0], [ket1]".into()))?;
        DressedFrame::from_parts(spec.clone(), n, m, h_m, ket0, ket1)
    }
}

#[cfg(test)]
mod tests {
    use crate::dressed::{build_frame_general, build_frame_n1, Selector};
    use crate::spin::spec::normalize_profile;
    use crate::spin::{SpinBathSpec, Zeeman};
    use crate::DressedFrame64;
    use nalgebra::DMatrix;

    #[test]
    fn round_trip_is_exact() {
        let s = SpinBathSpec::new(
            2,
            normalize_profile(&[0.3, 1.0, 0.7]).unwrap(),
            1.0,
            Zeeman::zero(),
            DMatrix::zeros(3, 3),
        )
        .unwrap();
        for f in [
            build_frame_n1(&s).unwrap(),
            build_frame_general(&s, 3, Selector::MaxH).unwrap(),
        ] {
            let text = f.to_text();
            let g = DressedFrame64::from_text(&text, &s).unwrap();
            assert_eq!(g.ket0().amps(), f.ket0().amps());
            assert_eq!(g.ket1().amps(), f.ket1().amps());
            assert_eq!(g.m_state().amps(), f.m_state().amps());
            assert_eq!(g.h_m(), f.h_m());
            assert_eq!(g.to_text(), text);
        }
    }

    #[test]
    fn rejects_mismatched_bath_and_garbage() {
        let s = SpinBathSpec::<f64>::uniform(3, 1).unwrap();
        let text = build_frame_n1(&s).unwrap().to_text();
        let other = SpinBathSpec::<f64>::uniform(4, 1).unwrap();
        assert!(DressedFrame64::from_text(&text, &other).is_err());
        assert!(DressedFrame64::from_text("hello", &s).is_err());
        let broken = text.replace("[ket1]", "[ket2]");
        assert!(DressedFrame64::from_text(&broken, &s).is_err());
    }
}
