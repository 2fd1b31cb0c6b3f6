//! Bessel functions of the first and second kind and Hankel functions of the
//! first kind, integer order.
//!
//! `J_n` comes from Miller's backward recurrence normalised by
//! `J_0 + 2 Σ J_2k = 1`; `Y_0` and `Y_1` from the Neumann series over the same
//! sequence, and higher `Y_n` from forward recurrence. Arguments may be
//! complex with a small imaginary part, which the lossy layers require.

use std::f64::consts::PI;

use super::OracleError;
use crate::C64;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const RESCALE_AT: f64 = 1e200;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BesselKind {
    J,
    Y,
    H1,
}

/// `J_0 ..= J_{nmax+1}` and `Y_0 ..= Y_{nmax+1}` at one argument.
#[derive(Clone, Debug)]
pub struct BesselTable {
    pub z: C64,
    pub j: Vec<C64>,
    pub y: Vec<C64>,
}

/// Value of `J_n`, `Y_n` or `H_n^(1)` at a real argument.
pub fn bessel(kind: BesselKind, n: usize, x: f64) -> Result<C64, OracleError> {
    if !x.is_finite() || x < 0.0 || (x == 0.0 && kind != BesselKind::J) {
        return Err(OracleError::BesselDomain { kind, n, x });
    }
    if x == 0.0 {
        return Ok(C64::new(if n == 0 { 1.0 } else { 0.0 }, 0.0));
    }
    let t = BesselTable::new(n, C64::new(x, 0.0))?;
    Ok(match kind {
        BesselKind::J => C64::new(t.j[n].re, 0.0),
        BesselKind::Y => C64::new(t.y[n].re, 0.0),
        BesselKind::H1 => C64::new(t.j[n].re, t.y[n].re),
    })
}

fn start_index(nmax: usize, az: f64) -> usize {
    let m = (nmax as f64).max(az.ceil());
    let s = m as usize + 30 + (60.0 * m).sqrt() as usize;
    s + s % 2
}

/// `J_0 ..= J_len-1` by backward recurrence.
fn j_sequence(len: usize, z: C64) -> Vec<C64> {
    let top = start_index(len, z.norm()).max(len + 2);
    let mut v = vec![C64::new(0.0, 0.0); top + 2];
    v[top] = C64::new(1e-30, 0.0);
    for k in (1..=top).rev() {
        v[k - 1] = v[k] * (2.0 * k as f64) / z - v[k + 1];
        if v[k - 1].norm() > RESCALE_AT {
            for w in &mut v[k - 1..] {
                *w /= RESCALE_AT;
            }
        }
    }
    let mut norm = v[0];
    for k in (2..=top).step_by(2) {
        norm += 2.0 * v[k];
    }
    // complex division squares the divisor, so bring it to unit size first
    let mag = norm.norm();
    let unit = norm / mag;
    for w in &mut v {
        *w = (*w / mag) / unit;
    }
    v
}

impl BesselTable {
    /// Tabulate orders `0 ..= nmax + 1` at `z` (`Re z > 0`).
    pub fn new(nmax: usize, z: C64) -> Result<Self, OracleError> {
        if !(z.re > 0.0) || !z.im.is_finite() || z.im.abs() > 0.5 * z.re.max(1.0) {
            return Err(OracleError::BesselDomain { kind: BesselKind::H1, n: nmax, x: z.re });
        }
        let len = nmax + 2;
        let seq = j_sequence(len, z);
        let lg = (z / 2.0).ln() + EULER_GAMMA;
        let mut s0 = C64::new(0.0, 0.0);
        let mut s1 = C64::new(0.0, 0.0);
        let mut sign = -1.0;
        for k in 1..(seq.len() - 1) / 2 {
            s0 += sign * seq[2 * k] / k as f64;
            s1 += sign * (seq[2 * k - 1] - seq[2 * k + 1]) / k as f64;
            sign = -sign;
        }
        let y0 = (2.0 / PI) * lg * seq[0] - (4.0 / PI) * s0;
        let y1 = -(2.0 / PI) * seq[0] / z + (2.0 / PI) * lg * seq[1] + (2.0 / PI) * s1;
        let mut y = Vec::with_capacity(len);
        y.push(y0);
        y.push(y1);
        for n in 1..len - 1 {
            let next = y[n] * (2.0 * n as f64) / z - y[n - 1];
            y.push(next);
        }
        let j = seq[..len].to_vec();
        if j.iter().chain(&y).any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(OracleError::BesselDomain { kind: BesselKind::Y, n: nmax, x: z.re });
        }
        Ok(Self { z, j, y })
    }

    pub fn h1(&self, n: usize) -> C64 {
        self.j[n] + C64::i() * self.y[n]
    }

    fn derivative(&self, v: &[C64], n: usize) -> C64 {
        if n == 0 {
            -v[1]
        } else {
            v[n - 1] - v[n] * (n as f64) / self.z
        }
    }

    pub fn dj(&self, n: usize) -> C64 {
        self.derivative(&self.j, n)
    }

    pub fn dy(&self, n: usize) -> C64 {
        self.derivative(&self.y, n)
    }

    pub fn dh1(&self, n: usize) -> C64 {
        self.dj(n) + C64::i() * self.dy(n)
    }
}
