//! Independent reference implementation: explicit 4x4 density matrices and
//! projector contractions, plus a compass-search maximizer. Shares no code
//! path with the crate's closed forms or its simplex search.

#![allow(dead_code)]

use num_complex::Complex64 as C;

pub type Matrix4 = [[C; 4]; 4];

/// Basis order |HH>, |HV>, |VH>, |VV>.
pub fn density_matrix(f: f64, phi: f64, v: f64) -> Matrix4 {
    let norm = (1.0 + f * f).sqrt();
    let psi = [
        C::new(1.0 / norm, 0.0),
        C::new(0.0, 0.0),
        C::new(0.0, 0.0),
        C::from_polar(f / norm, phi),
    ];
    let mut rho = [[C::new(0.0, 0.0); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            rho[i][j] = psi[i] * psi[j].conj() * v;
        }
        rho[i][i] += (1.0 - v) / 4.0;
    }
    rho
}

/// Single-photon operator: projector for a polarizer at `deg`, identity when
/// `None`.
pub fn analyzer(deg: Option<f64>) -> [[f64; 2]; 2] {
    match deg {
        Some(d) => {
            let (s, c) = d.to_radians().sin_cos();
            [[c * c, c * s], [c * s, s * s]]
        }
        None => [[1.0, 0.0], [0.0, 1.0]],
    }
}

fn kron(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 4]; 4] {
    let mut out = [[0.0; 4]; 4];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[2 * i + k][2 * j + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

/// `Tr(ρ (A1 ⊗ A2))`
pub fn expectation(rho: &Matrix4, a1: Option<f64>, a2: Option<f64>) -> f64 {
    let op = kron(&analyzer(a1), &analyzer(a2));
    let mut tr = C::new(0.0, 0.0);
    for i in 0..4 {
        for k in 0..4 {
            tr += rho[i][k] * op[k][i];
        }
    }
    tr.re
}

pub fn coincidence(f: f64, phi: f64, v: f64, a1: Option<f64>, a2: Option<f64>) -> f64 {
    expectation(&density_matrix(f, phi, v), a1, a2)
}

/// The six CH probabilities for `[θ1, θ1', θ2, θ2']` (degrees).
pub fn ch_terms(f: f64, phi: f64, v: f64, q: [f64; 4]) -> [f64; 6] {
    let rho = density_matrix(f, phi, v);
    let [a, ap, b, bp] = q;
    [
        expectation(&rho, Some(a), Some(b)),
        expectation(&rho, Some(a), Some(bp)),
        expectation(&rho, Some(ap), Some(b)),
        expectation(&rho, Some(ap), Some(bp)),
        expectation(&rho, Some(ap), None),
        expectation(&rho, None, Some(b)),
    ]
}

pub fn ch(f: f64, phi: f64, v: f64, q: [f64; 4]) -> f64 {
    let t = ch_terms(f, phi, v, q);
    t[0] - t[1] + t[2] + t[3] - t[4] - t[5]
}

pub fn ch_eta(f: f64, q: [f64; 4], eta: f64) -> f64 {
    let t = ch_terms(f, 0.0, 1.0, q);
    eta * eta * (t[0] - t[1] + t[2] + t[3]) - eta * (t[4] + t[5])
}

/// `(P1 + P2) / S_c`, infinite where `S_c <= 0`.
pub fn threshold_ratio(f: f64, q: [f64; 4]) -> f64 {
    let t = ch_terms(f, 0.0, 1.0, q);
    let sc = t[0] - t[1] + t[2] + t[3];
    if sc <= 1e-12 {
        f64::INFINITY
    } else {
        (t[4] + t[5]) / sc
    }
}

/// Minimize `g` over four angles (degrees): exhaustive grid at `grid_step`,
/// then compass search from the best `starts` grid points.
pub fn grid_refine_min(g: impl Fn([f64; 4]) -> f64, grid_step: f64, starts: usize) -> (f64, [f64; 4]) {
    let n = (180.0 / grid_step).round() as usize;
    let mut pts: Vec<(f64, [f64; 4])> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let q = [i, j, k, l].map(|x| x as f64 * grid_step);
                    pts.push((g(q), q));
                }
            }
        }
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = (f64::INFINITY, [0.0; 4]);
    for &(v0, q0) in pts.iter().take(starts) {
        let (v, q) = compass(&g, q0, v0, grid_step / 2.0);
        if v < best.0 {
            best = (v, q);
        }
    }
    best
}

fn compass(g: &impl Fn([f64; 4]) -> f64, mut q: [f64; 4], mut v: f64, mut step: f64) -> (f64, [f64; 4]) {
    while step > 1e-9 {
        let mut moved = false;
        for k in 0..4 {
            for sign in [1.0, -1.0] {
                let mut t = q;
                t[k] += sign * step;
                let vt = g(t);
                if vt < v {
                    v = vt;
                    q = t;
                    moved = true;
                }
            }
        }
        if !moved {
            step /= 2.0;
        }
    }
    (v, q)
}
