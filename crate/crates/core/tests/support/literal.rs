//! The losses written out term by term from their definitions, over plain
//! `f64` and over tape variables.

use super::tape::{sum, Tape, Var};

pub fn cosine(u: &[f64], v: &[f64]) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    dot / (nu * nv)
}

/// `(1/n) Σ_i [ −s(u_i,v_i)/τ + log Σ_{j≠i} (e^{s(u_i,u_j)/τ} + e^{s(u_i,v_j)/τ}) ]`
/// with `u`, `v` given as lists of columns.
pub fn contrastive(u: &[Vec<f64>], v: &[Vec<f64>], tau: f64) -> f64 {
    let n = u.len();
    let mut total = 0.0;
    for i in 0..n {
        let mut xi = 0.0;
        for j in 0..n {
            if j != i {
                xi += (cosine(&u[i], &u[j]) / tau).exp() + (cosine(&u[i], &v[j]) / tau).exp();
            }
        }
        total += -cosine(&u[i], &v[i]) / tau + xi.ln();
    }
    total / n as f64
}

/// Entropy of the column L1 masses of a matrix given as columns.
pub fn entropy(cols: &[Vec<f64>]) -> f64 {
    let masses: Vec<f64> = cols.iter().map(|c| c.iter().map(|x| x.abs()).sum()).collect();
    let total: f64 = masses.iter().sum();
    masses
        .iter()
        .filter(|&&m| m > 0.0)
        .map(|&m| -(m / total) * (m / total).ln())
        .sum()
}

pub fn tcosine<'t>(t: &'t Tape, u: &[Var<'t>], v: &[Var<'t>]) -> Var<'t> {
    let dot = sum(t, u.iter().zip(v).map(|(&a, &b)| a * b));
    let nu = sum(t, u.iter().map(|&a| a * a)).sqrt();
    let nv = sum(t, v.iter().map(|&a| a * a)).sqrt();
    dot / (nu * nv)
}

pub fn tcontrastive<'t>(t: &'t Tape, u: &[Vec<Var<'t>>], v: &[Vec<Var<'t>>], tau: f64) -> Var<'t> {
    let n = u.len();
    let mut terms = Vec::with_capacity(n);
    for i in 0..n {
        let mut parts = Vec::new();
        for j in 0..n {
            if j != i {
                parts.push(tcosine(t, &u[i], &u[j]).scale(1.0 / tau).exp());
                parts.push(tcosine(t, &u[i], &v[j]).scale(1.0 / tau).exp());
            }
        }
        let xi = sum(t, parts);
        terms.push(-tcosine(t, &u[i], &v[i]).scale(1.0 / tau) + xi.ln());
    }
    sum(t, terms).scale(1.0 / n as f64)
}

pub fn tentropy<'t>(t: &'t Tape, cols: &[Vec<Var<'t>>]) -> Var<'t> {
    let masses: Vec<Var<'t>> = cols.iter().map(|c| sum(t, c.iter().map(|x| x.abs()))).collect();
    let total = sum(t, masses.iter().copied());
    -sum(
        t,
        masses.iter().map(|&m| {
            let p = m / total;
            p * p.ln()
        }),
    )
}

/// Columns of the matrix whose rows are `rows`.
pub fn transpose<X: Copy>(rows: &[Vec<X>]) -> Vec<Vec<X>> {
    let d = rows.first().map_or(0, Vec::len);
    (0..d).map(|j| rows.iter().map(|r| r[j]).collect()).collect()
}
