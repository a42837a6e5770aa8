//! Row-oriented sparse matrices and the linear solvers behind the
//! steady-state systems.
//!
//! Every system solved here has the form `[L + diag(p_A + p_B)] x = b` where
//! `L` is a signed Laplacian. The diagonal weakly dominates each row, so
//! Jacobi-preconditioned Krylov iterations converge quickly and can be
//! warm-started across the small diagonal updates performed by the
//! optimizers. A dense LU fallback covers near-degenerate systems; the
//! returned residual is always recomputed from scratch so callers can trust
//! the reported accuracy.

use crate::error::{Error, Result};

/// Compressed sparse row matrix. Column indices within a row are sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    n: usize,
    offsets: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl Csr {
    /// Builds an `n` x `n` matrix from (row, col, value) triplets.
    /// Duplicate coordinates are summed.
    pub fn from_triplets(n: usize, triplets: &[(u32, u32, f64)]) -> Csr {
        let mut entries: Vec<(u32, u32, f64)> = triplets.to_vec();
        entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(u32, u32, f64)> = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        let mut offsets = vec![0usize; n + 1];
        for &(r, _, _) in &merged {
            offsets[r as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        Csr {
            n,
            offsets,
            cols: merged.iter().map(|e| e.1).collect(),
            vals: merged.iter().map(|e| e.2).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.offsets[i];
        let hi = self.offsets[i + 1];
        self.cols[lo..hi]
            .iter()
            .zip(&self.vals[lo..hi])
            .map(|(&c, &v)| (c as usize, v))
    }

    /// y += A x
    pub fn matvec_add(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let lo = self.offsets[i];
            let hi = self.offsets[i + 1];
            let mut acc = 0.0;
            for k in lo..hi {
                acc += self.vals[k] * x[self.cols[k] as usize];
            }
            y[i] += acc;
        }
    }

    /// Transposed copy with sorted rows.
    pub fn transpose(&self) -> Csr {
        let mut triplets = Vec::with_capacity(self.nnz());
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                triplets.push((j as u32, i as u32, v));
            }
        }
        Csr::from_triplets(self.n, &triplets)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n]; self.n];
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                out[i][j] += v;
            }
        }
        out
    }
}

/// The operator `diag(d) + O` where `O` holds the off-diagonal entries.
/// `off_t` must be the transpose of `off`; it makes adjoint solves as cheap
/// as forward ones.
pub struct SystemOp<'a> {
    pub off: &'a Csr,
    pub off_t: &'a Csr,
    pub diag: &'a [f64],
}

impl<'a> SystemOp<'a> {
    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.diag.len() {
            y[i] = self.diag[i] * x[i];
        }
        self.off.matvec_add(x, y);
    }

    pub fn apply_t(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.diag.len() {
            y[i] = self.diag[i] * x[i];
        }
        self.off_t.matvec_add(x, y);
    }

    fn to_dense(&self, transposed: bool) -> Vec<f64> {
        let n = self.n();
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            m[i * n + i] = self.diag[i];
        }
        let off = if transposed { self.off_t } else { self.off };
        for i in 0..n {
            for (j, v) in off.row(i) {
                m[i * n + j] += v;
            }
        }
        m
    }
}

/// Result of a linear solve. `residual` is `max_i |Ax - b|_i / max(1, |b|_inf)`,
/// recomputed after the iteration finished.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub residual: f64,
    pub iterations: usize,
}

const REL_TOL: f64 = 1e-13;
const RESIDUAL_ACCEPT: f64 = 1e-10;
const DENSE_FALLBACK_MAX_N: usize = 5000;

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
}

fn true_residual(op: &SystemOp, transposed: bool, x: &[f64], b: &[f64], scratch: &mut [f64]) -> f64 {
    if transposed {
        op.apply_t(x, scratch);
    } else {
        op.apply(x, scratch);
    }
    let mut worst = 0.0f64;
    for i in 0..b.len() {
        worst = worst.max((scratch[i] - b[i]).abs());
    }
    worst / inf_norm(b).max(1.0)
}

/// Scratch buffers reused across solves so the optimizer's inner loop does
/// not allocate.
#[derive(Default)]
pub struct Workspace {
    bufs: Vec<Vec<f64>>,
}

impl Workspace {
    fn take(&mut self, n: usize, count: usize) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let mut b = self.bufs.pop().unwrap_or_default();
            b.clear();
            b.resize(n, 0.0);
            out.push(b);
        }
        out
    }

    fn give(&mut self, bufs: Vec<Vec<f64>>) {
        self.bufs.extend(bufs);
    }
}

/// Solves `A x = b` (or `A^T x = b`), reusing `x` as the warm start.
/// `symmetric` selects conjugate gradients; otherwise BiCGSTAB is used.
/// Falls back to dense LU when the Krylov iteration stalls and the system is
/// small enough. Errors if no method reaches the acceptance residual.
pub fn solve_system(
    op: &SystemOp,
    transposed: bool,
    b: &[f64],
    x: &mut Vec<f64>,
    symmetric: bool,
    ws: &mut Workspace,
) -> Result<SolveReport> {
    let n = op.n();
    if b.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "rhs has {} entries for a {n}-node system",
            b.len()
        )));
    }
    if x.len() != n {
        x.clear();
        x.resize(n, 0.0);
    }
    let iters = if symmetric {
        pcg(op, transposed, b, x, ws)
    } else {
        bicgstab(op, transposed, b, x, ws)
    };
    let mut scratch = ws.take(n, 1);
    let mut res = true_residual(op, transposed, x, b, &mut scratch[0]);
    ws.give(scratch);
    if res > RESIDUAL_ACCEPT && n <= DENSE_FALLBACK_MAX_N {
        dense_lu_solve(op, transposed, b, x)?;
        let mut scratch = ws.take(n, 1);
        res = true_residual(op, transposed, x, b, &mut scratch[0]);
        ws.give(scratch);
    }
    if res > RESIDUAL_ACCEPT || !res.is_finite() {
        return Err(Error::SolverStalled {
            residual: res,
            iterations: iters,
        });
    }
    Ok(SolveReport {
        residual: res,
        iterations: iters,
    })
}

/// Jacobi-preconditioned conjugate gradients with periodic true-residual
/// refresh. Returns iterations used; convergence is judged by the caller via
/// the recomputed residual.
fn pcg(op: &SystemOp, transposed: bool, b: &[f64], x: &mut [f64], ws: &mut Workspace) -> usize {
    let n = op.n();
    let max_iters = 40 * n + 200;
    let stop = REL_TOL * inf_norm(b).max(1.0);
    let mut bufs = ws.take(n, 4);
    let (mut r, mut z, mut p, mut ap) = {
        let mut it = bufs.drain(..);
        (
            it.next().unwrap(),
            it.next().unwrap(),
            it.next().unwrap(),
            it.next().unwrap(),
        )
    };
    let inv_d: Vec<f64> = op
        .diag
        .iter()
        .map(|&d| if d.abs() > 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    if transposed {
        op.apply_t(x, &mut r);
    } else {
        op.apply(x, &mut r);
    }
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    for i in 0..n {
        z[i] = r[i] * inv_d[i];
        p[i] = z[i];
    }
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut used = 0;
    for it in 0..max_iters {
        used = it + 1;
        if inf_norm(&r) <= stop {
            break;
        }
        if transposed {
            op.apply_t(&p, &mut ap);
        } else {
            op.apply(&p, &mut ap);
        }
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if !pap.is_finite() || pap.abs() < f64::MIN_POSITIVE {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if (it + 1) % 64 == 0 {
            // refresh recursive residual to avoid drift
            if transposed {
                op.apply_t(x, &mut r);
            } else {
                op.apply(x, &mut r);
            }
            for i in 0..n {
                r[i] = b[i] - r[i];
            }
        }
        for i in 0..n {
            z[i] = r[i] * inv_d[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        if !rz_new.is_finite() {
            break;
        }
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    ws.give(vec![r, z, p, ap]);
    used
}

/// Jacobi-preconditioned BiCGSTAB for the directed (unsymmetric) systems.
fn bicgstab(op: &SystemOp, transposed: bool, b: &[f64], x: &mut [f64], ws: &mut Workspace) -> usize {
    let n = op.n();
    let max_iters = 40 * n + 200;
    let stop = REL_TOL * inf_norm(b).max(1.0);
    let inv_d: Vec<f64> = op
        .diag
        .iter()
        .map(|&d| if d.abs() > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let apply = |v: &[f64], out: &mut [f64]| {
        if transposed {
            op.apply_t(v, out)
        } else {
            op.apply(v, out)
        }
    };

    let mut bufs = ws.take(n, 7);
    let (mut r, mut r0, mut p, mut v, mut s, mut t, mut tmp) = {
        let mut it = bufs.drain(..);
        (
            it.next().unwrap(),
            it.next().unwrap(),
            it.next().unwrap(),
            it.next().unwrap(),
            it.next().unwrap(),
            it.next().unwrap(),
            it.next().unwrap(),
        )
    };

    apply(x, &mut tmp);
    for i in 0..n {
        r[i] = b[i] - tmp[i];
    }
    r0.copy_from_slice(&r);
    let mut rho = 1.0f64;
    let mut alpha = 1.0f64;
    let mut omega = 1.0f64;
    for i in 0..n {
        p[i] = 0.0;
        v[i] = 0.0;
    }
    let mut used = 0;
    let mut restarts = 0;
    for it in 0..max_iters {
        used = it + 1;
        if inf_norm(&r) <= stop {
            break;
        }
        let rho_new: f64 = r0.iter().zip(&r).map(|(a, b)| a * b).sum();
        if rho_new.abs() < 1e-300 || !rho_new.is_finite() {
            // breakdown: restart with the current residual as shadow vector
            restarts += 1;
            if restarts > 4 {
                break;
            }
            apply(x, &mut tmp);
            for i in 0..n {
                r[i] = b[i] - tmp[i];
            }
            r0.copy_from_slice(&r);
            rho = 1.0;
            alpha = 1.0;
            omega = 1.0;
            for i in 0..n {
                p[i] = 0.0;
                v[i] = 0.0;
            }
            continue;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        // preconditioned direction
        for i in 0..n {
            tmp[i] = p[i] * inv_d[i];
        }
        apply(&tmp, &mut v);
        let r0v: f64 = r0.iter().zip(&v).map(|(a, b)| a * b).sum();
        if r0v.abs() < 1e-300 || !r0v.is_finite() {
            break;
        }
        alpha = rho / r0v;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        let phat: Vec<f64> = tmp.clone();
        if inf_norm(&s) <= stop {
            for i in 0..n {
                x[i] += alpha * phat[i];
            }
            apply(x, &mut tmp);
            for i in 0..n {
                r[i] = b[i] - tmp[i];
            }
            continue;
        }
        for i in 0..n {
            tmp[i] = s[i] * inv_d[i];
        }
        let shat: Vec<f64> = tmp.clone();
        apply(&shat, &mut t);
        let tt: f64 = t.iter().map(|a| a * a).sum();
        if tt < 1e-300 || !tt.is_finite() {
            break;
        }
        omega = t.iter().zip(&s).map(|(a, b)| a * b).sum::<f64>() / tt;
        if omega.abs() < 1e-300 {
            break;
        }
        for i in 0..n {
            x[i] += alpha * phat[i] + omega * shat[i];
            r[i] = s[i] - omega * t[i];
        }
        if (it + 1) % 64 == 0 {
            apply(x, &mut tmp);
            for i in 0..n {
                r[i] = b[i] - tmp[i];
            }
        }
    }
    ws.give(vec![r, r0, p, v, s, t, tmp]);
    used
}

/// Dense LU with partial pivoting; fallback path for stubborn systems.
fn dense_lu_solve(op: &SystemOp, transposed: bool, b: &[f64], x: &mut [f64]) -> Result<()> {
    let n = op.n();
    let mut m = op.to_dense(transposed);
    let mut perm: Vec<usize> = (0..n).collect();
    for col in 0..n {
        let mut piv = col;
        let mut best = m[perm[col] * n + col].abs();
        for row in col + 1..n {
            let cand = m[perm[row] * n + col].abs();
            if cand > best {
                best = cand;
                piv = row;
            }
        }
        if best < 1e-300 {
            return Err(Error::SolverStalled {
                residual: f64::INFINITY,
                iterations: 0,
            });
        }
        perm.swap(col, piv);
        let prow = perm[col];
        let pivot = m[prow * n + col];
        for row in col + 1..n {
            let r = perm[row];
            let factor = m[r * n + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            m[r * n + col] = factor;
            for k in col + 1..n {
                m[r * n + k] -= factor * m[prow * n + k];
            }
        }
    }
    // forward substitution (L has unit diagonal, stored below pivots)
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut acc = b[perm[i]];
        for k in 0..i {
            acc -= m[perm[i] * n + k] * y[k];
        }
        y[i] = acc;
    }
    // back substitution
    for i in (0..n).rev() {
        let mut acc = y[i];
        for k in i + 1..n {
            acc -= m[perm[i] * n + k] * x[k];
        }
        x[i] = acc / m[perm[i] * n + i];
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_pcg::Pcg64;

    fn random_system(n: usize, symmetric: bool, seed: u64) -> (Csr, Csr, Vec<f64>) {
        let mut rng = Pcg64::seed_from_u64(seed);
        let mut triplets = Vec::new();
        let mut row_abs = vec![0.0f64; n];
        for i in 0..n as u32 {
            for j in 0..n as u32 {
                if i == j {
                    continue;
                }
                if symmetric && j < i {
                    continue;
                }
                if rng.gen::<f64>() < 3.0 / n as f64 {
                    let w: f64 = rng.gen_range(-2.0..2.0);
                    if w == 0.0 {
                        continue;
                    }
                    triplets.push((i, j, w));
                    row_abs[i as usize] += w.abs();
                    if symmetric {
                        triplets.push((j, i, w));
                        row_abs[j as usize] += w.abs();
                    }
                }
            }
        }
        let off = Csr::from_triplets(n, &triplets);
        let off_t = off.transpose();
        let diag: Vec<f64> = row_abs.iter().map(|&s| s + 0.5 + 1e-3).collect();
        (off, off_t, diag)
    }

    fn check_solution(off: &Csr, off_t: &Csr, diag: &[f64], symmetric: bool, seed: u64) {
        let n = diag.len();
        let op = SystemOp {
            off,
            off_t,
            diag,
        };
        let mut rng = Pcg64::seed_from_u64(seed ^ 0x5eed);
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for &transposed in &[false, true] {
            let mut ws = Workspace::default();
            let mut x = vec![0.0; n];
            let report = solve_system(&op, transposed, &b, &mut x, symmetric, &mut ws).unwrap();
            assert!(report.residual < 1e-10, "residual {}", report.residual);
        }
    }

    #[test]
    fn solves_random_unsymmetric_systems() {
        for seed in 0..5 {
            let (off, off_t, diag) = random_system(60, false, seed);
            check_solution(&off, &off_t, &diag, false, seed);
        }
    }

    #[test]
    fn solves_random_symmetric_systems() {
        for seed in 0..5 {
            let (off, off_t, diag) = random_system(60, true, seed);
            check_solution(&off, &off_t, &diag, true, seed);
        }
    }

    #[test]
    fn warm_start_still_converges() {
        let (off, off_t, diag) = random_system(80, false, 9);
        let op = SystemOp {
            off: &off,
            off_t: &off_t,
            diag: &diag,
        };
        let b = vec![1.0; 80];
        let mut ws = Workspace::default();
        let mut x = vec![0.0; 80];
        solve_system(&op, false, &b, &mut x, false, &mut ws).unwrap();
        let first = x.clone();
        // perturbed rhs, warm-started from the previous solution
        let b2: Vec<f64> = b.iter().map(|v| v * 1.01).collect();
        let report = solve_system(&op, false, &b2, &mut x, false, &mut ws).unwrap();
        assert!(report.residual < 1e-10);
        for i in 0..80 {
            assert!((x[i] - first[i] * 1.01).abs() < 1e-8);
        }
    }

    #[test]
    fn matches_dense_elimination() {
        let (off, off_t, diag) = random_system(25, false, 3);
        let op = SystemOp {
            off: &off,
            off_t: &off_t,
            diag: &diag,
        };
        let b: Vec<f64> = (0..25).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut ws = Workspace::default();
        let mut x = vec![0.0; 25];
        solve_system(&op, false, &b, &mut x, false, &mut ws).unwrap();
        // independent naive Gaussian elimination
        let mut m = op.to_dense(false);
        let n = 25usize;
        let mut rhs = b.clone();
        for col in 0..n {
            let mut piv = col;
            for r in col + 1..n {
                if m[r * n + col].abs() > m[piv * n + col].abs() {
                    piv = r;
                }
            }
            for k in 0..n {
                let t = m[col * n + k];
                m[col * n + k] = m[piv * n + k];
                m[piv * n + k] = t;
            }
            rhs.swap(col, piv);
            for r in col + 1..n {
                let f = m[r * n + col] / m[col * n + col];
                for k in col..n {
                    m[r * n + k] -= f * m[col * n + k];
                }
                rhs[r] -= f * rhs[col];
            }
        }
        let mut xd = vec![0.0; n];
        for i in (0..n).rev() {
            let mut acc = rhs[i];
            for k in i + 1..n {
                acc -= m[i * n + k] * xd[k];
            }
            xd[i] = acc / m[i * n + i];
        }
        for i in 0..n {
            assert!((x[i] - xd[i]).abs() < 1e-8, "entry {i}: {} vs {}", x[i], xd[i]);
        }
    }
}
