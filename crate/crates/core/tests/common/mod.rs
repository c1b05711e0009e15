//! Independent oracles computed directly from channel rows and group
//! orders, without going through the library's measure machinery.
#![allow(dead_code)]

use polarlab::BlackwellMeasure;

/// Mixed-radix digits of `x`, first factor most significant.
pub fn digits(orders: &[usize], mut x: usize) -> Vec<usize> {
    let mut d = vec![0; orders.len()];
    for i in (0..orders.len()).rev() {
        d[i] = x % orders[i];
        x /= orders[i];
    }
    d
}

pub fn undigits(orders: &[usize], d: &[usize]) -> usize {
    d.iter().zip(orders).fold(0, |acc, (&v, &o)| acc * o + v)
}

pub fn add(orders: &[usize], a: usize, b: usize) -> usize {
    let (da, db) = (digits(orders, a), digits(orders, b));
    let s: Vec<usize> = da.iter().zip(&db).zip(orders).map(|((x, y), o)| (x + y) % o).collect();
    undigits(orders, &s)
}

/// All subgroups by brute force over every subset containing 0.
pub fn brute_subgroups(orders: &[usize]) -> Vec<Vec<usize>> {
    let n: usize = orders.iter().product();
    assert!(n <= 12, "brute force is for small groups");
    let mut out = Vec::new();
    for mask in 0u32..(1 << n) {
        if mask & 1 == 0 {
            continue;
        }
        let members: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        let closed = members.iter().all(|&a| members.iter().all(|&b| mask >> add(orders, a, b) & 1 == 1));
        if closed {
            out.push(members);
        }
    }
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

/// Coset label of `x` in `x + H`: the smallest member of the coset.
pub fn coset_label(orders: &[usize], h: &[usize], x: usize) -> usize {
    h.iter().map(|&m| add(orders, x, m)).min().unwrap()
}

/// Rows of the deterministic channel `x -> x + H`.
pub fn dh_rows(orders: &[usize], h: &[usize]) -> Vec<Vec<f64>> {
    let n: usize = orders.iter().product();
    let mut labels: Vec<usize> = (0..n).map(|x| coset_label(orders, h, x)).collect();
    labels.sort_unstable();
    labels.dedup();
    (0..n)
        .map(|x| {
            let l = coset_label(orders, h, x);
            labels.iter().map(|&c| if c == l { 1.0 } else { 0.0 }).collect()
        })
        .collect()
}

/// Mutual information in bits under a uniform input.
pub fn mutual_information(rows: &[Vec<f64>]) -> f64 {
    let n = rows.len() as f64;
    let outputs = rows[0].len();
    let mut total = 0.0;
    for y in 0..outputs {
        let q: f64 = rows.iter().map(|r| r[y]).sum::<f64>() / n;
        for r in rows {
            if r[y] > 0.0 {
                total += r[y] / n * (r[y] / q).log2();
            }
        }
    }
    total
}

/// `W⁻(y1, y2 | u1) = (1/n) Σ_{u2} W(y1 | u1 + u2) W(y2 | u2)`.
pub fn raw_minus(orders: &[usize], rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len();
    let k = rows[0].len();
    (0..n)
        .map(|u1| {
            let mut out = vec![0.0; k * k];
            for u2 in 0..n {
                let r1 = &rows[add(orders, u1, u2)];
                for y1 in 0..k {
                    for y2 in 0..k {
                        out[y1 * k + y2] += r1[y1] * rows[u2][y2] / n as f64;
                    }
                }
            }
            out
        })
        .collect()
}

/// `W⁺(y1, y2, u1 | u2) = (1/n) W(y1 | u1 + u2) W(y2 | u2)`.
pub fn raw_plus(orders: &[usize], rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len();
    let k = rows[0].len();
    (0..n)
        .map(|u2| {
            let mut out = vec![0.0; k * k * n];
            for u1 in 0..n {
                let r1 = &rows[add(orders, u1, u2)];
                for y1 in 0..k {
                    for y2 in 0..k {
                        out[(y1 * k + y2) * n + u1] = r1[y1] * rows[u2][y2] / n as f64;
                    }
                }
            }
            out
        })
        .collect()
}

/// Erasure probability of BEC(`eps`) along a path of `-`/`+` characters.
pub fn erasure(eps: f64, path: &str) -> f64 {
    path.chars().fold(eps, |z, c| if c == '-' { 2.0 * z - z * z } else { z * z })
}

/// Bijective matching of atoms: posteriors within `post_tol` in L∞ and
/// weights within `weight_tol`.
pub fn atoms_match(a: &BlackwellMeasure, b: &BlackwellMeasure, post_tol: f64, weight_tol: f64) -> bool {
    if a.atoms().len() != b.atoms().len() {
        return false;
    }
    let mut used = vec![false; b.atoms().len()];
    a.atoms().iter().all(|x| {
        let hit = b.atoms().iter().enumerate().position(|(j, y)| {
            !used[j]
                && (x.w - y.w).abs() <= weight_tol
                && x.q.probs().iter().zip(y.q.probs()).all(|(p, q)| (p - q).abs() <= post_tol)
        });
        match hit {
            Some(j) => {
                used[j] = true;
                true
            }
            None => false,
        }
    })
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}
