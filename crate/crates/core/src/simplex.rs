//! Nelder-Mead downhill simplex on fixed-size points.

use alloc::vec::Vec;

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

#[derive(Debug, Clone, Copy)]
pub(crate) struct SimplexOptions {
    /// Initial edge length along each axis.
    pub step: f64,
    /// Converged when the spread of simplex values falls below this.
    pub value_tolerance: f64,
    /// ... and every vertex lies this close to the best one (per coordinate).
    pub point_tolerance: f64,
    pub max_evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct SimplexResult<const N: usize> {
    pub point: [f64; N],
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Minimize `objective` from `start`. Non-finite values are treated as worse
/// than any finite value.
pub(crate) fn minimize<const N: usize, F>(
    objective: F,
    start: [f64; N],
    options: &SimplexOptions,
) -> SimplexResult<N>
where
    F: Fn(&[f64; N]) -> f64,
{
    let evaluations = core::cell::Cell::new(0usize);
    let eval = |x: &[f64; N]| {
        evaluations.set(evaluations.get() + 1);
        let v = objective(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut vertices: Vec<[f64; N]> = alloc::vec![start; N + 1];
    for (i, v) in vertices.iter_mut().skip(1).enumerate() {
        v[i] += options.step;
    }
    let mut values: Vec<f64> = vertices.iter().map(&eval).collect();

    let mut iterations = 0usize;
    let mut converged = false;
    loop {
        order(&mut vertices, &mut values);
        if has_converged(&vertices, &values, options) {
            converged = true;
            break;
        }
        if evaluations.get() >= options.max_evaluations {
            break;
        }
        iterations += 1;

        let centroid = centroid(&vertices[..N]);
        let worst = vertices[N];
        let reflected = along(&centroid, &worst, -REFLECT);
        let f_reflected = eval(&reflected);

        if f_reflected < values[0] {
            let expanded = along(&centroid, &worst, -REFLECT * EXPAND);
            let f_expanded = eval(&expanded);
            if f_expanded < f_reflected {
                vertices[N] = expanded;
                values[N] = f_expanded;
            } else {
                vertices[N] = reflected;
                values[N] = f_reflected;
            }
        } else if f_reflected < values[N - 1] {
            vertices[N] = reflected;
            values[N] = f_reflected;
        } else {
            // outside contraction if the reflection beat the worst point,
            // inside contraction otherwise
            let (candidate, reference) = if f_reflected < values[N] {
                (along(&centroid, &worst, -REFLECT * CONTRACT), f_reflected)
            } else {
                (along(&centroid, &worst, CONTRACT), values[N])
            };
            let f_candidate = eval(&candidate);
            if f_candidate < reference {
                vertices[N] = candidate;
                values[N] = f_candidate;
            } else {
                let best = vertices[0];
                for i in 1..=N {
                    for k in 0..N {
                        vertices[i][k] = best[k] + SHRINK * (vertices[i][k] - best[k]);
                    }
                    values[i] = eval(&vertices[i]);
                }
            }
        }
    }

    SimplexResult {
        point: vertices[0],
        value: values[0],
        iterations,
        evaluations: evaluations.get(),
        converged,
    }
}

/// Stable sort of the simplex by value, best first.
fn order<const N: usize>(vertices: &mut [[f64; N]], values: &mut [f64]) {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let (v0, f0) = (vertices.to_vec(), values.to_vec());
    for (slot, &i) in idx.iter().enumerate() {
        vertices[slot] = v0[i];
        values[slot] = f0[i];
    }
}

fn has_converged<const N: usize>(vertices: &[[f64; N]], values: &[f64], options: &SimplexOptions) -> bool {
    if !values[N].is_finite() {
        return false;
    }
    if values[N] - values[0] >= options.value_tolerance {
        return false;
    }
    vertices[1..].iter().all(|v| {
        v.iter()
            .zip(vertices[0].iter())
            .all(|(a, b)| libm::fabs(a - b) < options.point_tolerance)
    })
}

fn centroid<const N: usize>(points: &[[f64; N]]) -> [f64; N] {
    let mut c = [0.0; N];
    for p in points {
        for k in 0..N {
            c[k] += p[k];
        }
    }
    let n = points.len() as f64;
    c.map(|x| x / n)
}

/// `centroid + t (point - centroid)`
fn along<const N: usize>(centroid: &[f64; N], point: &[f64; N], t: f64) -> [f64; N] {
    let mut out = [0.0; N];
    for k in 0..N {
        out[k] = centroid[k] + t * (point[k] - centroid[k]);
    }
    out
}
