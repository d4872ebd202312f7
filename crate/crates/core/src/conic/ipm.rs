//! Primal-dual interior-point method for the block SDPs built in
//! [`super::program`].
//!
//! Standard form after adding one slack per row:
//!
//! ```text
//! min  sum_b c_b tr(X_b)
//! s.t. sum_b <A_ib, X_b> + s_i = b_i,   X_b >= 0 (PSD),  s >= 0
//! ```
//!
//! Infeasible-start HKM direction with a Mehrotra predictor-corrector. The
//! constraint matrices arrive as sums of weighted rank-one terms
//! `A_ib = sum_p w_p u_p u_p^T`, so the Schur complement entries
//! `<A_i, X A_j Z^-1>` reduce to products of the small Gram matrices
//! `U^T X U` and `U^T Z^-1 U`. Its size is the number of rows, not the
//! number of matrix entries.

use nalgebra::{DMatrix, DVector};

use super::program::ConicProgram;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum IpmStatus {
    Optimal,
    Infeasible,
    Failed,
}

#[derive(Debug, Clone)]
pub(crate) struct IpmOutcome {
    pub status: IpmStatus,
    /// One real block per program block (empty for zero-size blocks).
    pub x: Vec<DMatrix<f64>>,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub relative_gap: f64,
    pub dual_objective: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct IpmSettings {
    pub max_iterations: usize,
    /// Target for relative gap and normalized residuals.
    pub tolerance: f64,
    /// Accepted quality of a Farkas certificate.
    pub infeasibility_tolerance: f64,
    /// Residual level still reported as optimal when the method stalls.
    pub acceptable_tolerance: f64,
}

impl Default for IpmSettings {
    fn default() -> Self {
        IpmSettings {
            max_iterations: 150,
            tolerance: 1e-9,
            infeasibility_tolerance: 1e-9,
            acceptable_tolerance: 1e-7,
        }
    }
}

struct Block {
    program_index: usize,
    n: usize,
    /// Diagonal of the objective matrix.
    cost: DVector<f64>,
    /// Congruence scaling of this block.
    d: DVector<f64>,
    u: DMatrix<f64>,
    w: Vec<f64>,
    row: Vec<usize>,
    /// Factors that are multiples of a unit vector, kept as `(coord, weight, row)`.
    diag: Vec<(usize, f64, usize)>,
}

struct Problem {
    blocks: Vec<Block>,
    b: DVector<f64>,
    /// Original row index of each retained row.
    kept_rows: usize,
}

enum Presolve {
    Ready(Problem),
    Infeasible,
}

fn frobenius_of_factors(u: &[&Vec<f64>], w: &[f64]) -> f64 {
    let mut s = 0.0;
    for p in 0..u.len() {
        for q in 0..u.len() {
            let d: f64 = u[p].iter().zip(u[q]).map(|(a, b)| a * b).sum();
            s += w[p] * w[q] * d * d;
        }
    }
    s.max(0.0).sqrt()
}

fn presolve(program: &ConicProgram) -> Presolve {
    let mut kept = Vec::new();
    for row in program.rows.iter() {
        let has_terms = row.terms.iter().any(|t| !t.factors.is_empty());
        let all_nonneg = row.terms.iter().flat_map(|t| &t.factors).all(|f| f.weight >= 0.0);
        if all_nonneg && row.rhs < 0.0 {
            // lhs >= 0 on the PSD cone can never reach a negative bound
            return Presolve::Infeasible;
        }
        if !has_terms {
            continue;
        }
        kept.push(row);
    }

    // congruence scaling X = D Xs D from the program's magnitude hints
    let dscale: Vec<Vec<f64>> = (0..program.blocks.len())
        .map(|bi| {
            let d = program.block_complex_dim(bi);
            let hint = program.scaling.as_ref().map(|s| &s[bi]);
            (0..2 * d)
                .map(|i| hint.map_or(1.0, |h| h[i % d].max(f64::MIN_POSITIVE).sqrt()))
                .collect()
        })
        .collect();
    let scaled = |bi: usize, v: &[f64]| -> Vec<f64> { v.iter().zip(&dscale[bi]).map(|(a, d)| a * d).collect() };

    // row equilibration by the Frobenius norm of the (scaled) row data
    let scales: Vec<f64> = kept
        .iter()
        .map(|row| {
            let mut sq = 0.0;
            for t in &row.terms {
                let vs: Vec<Vec<f64>> = t.factors.iter().map(|f| scaled(t.block, &f.vector)).collect();
                let refs: Vec<&Vec<f64>> = vs.iter().collect();
                let ws: Vec<f64> = t.factors.iter().map(|f| f.weight).collect();
                sq += frobenius_of_factors(&refs, &ws).powi(2);
            }
            let norm = sq.sqrt();
            if norm > 0.0 {
                1.0 / norm
            } else {
                1.0
            }
        })
        .collect();

    let mut blocks = Vec::new();
    for (bi, blk) in program.blocks.iter().enumerate() {
        let n = program.block_real_dim(bi);
        if n == 0 {
            continue;
        }
        let mut vecs = Vec::new();
        let mut w = Vec::new();
        let mut rowidx = Vec::new();
        let mut diag = Vec::new();
        for (ri, row) in kept.iter().enumerate() {
            for t in row.terms.iter().filter(|t| t.block == bi) {
                for f in &t.factors {
                    let v = scaled(bi, &f.vector);
                    let mut nz = v.iter().enumerate().filter(|(_, x)| **x != 0.0);
                    match (nz.next(), nz.next()) {
                        (None, _) => {}
                        (Some((c, x)), None) => diag.push((c, f.weight * scales[ri] * x * x, ri)),
                        _ => {
                            vecs.push(v);
                            w.push(f.weight * scales[ri]);
                            rowidx.push(ri);
                        }
                    }
                }
            }
        }
        let r = vecs.len();
        let u = DMatrix::from_fn(n, r, |i, p| vecs[p][i]);
        let d = DVector::from_column_slice(&dscale[bi]);
        let cost = d.map(|x| blk.trace_cost * x * x);
        blocks.push(Block { program_index: bi, n, cost, d, u, w, row: rowidx, diag });
    }
    let b = DVector::from_iterator(kept.len(), kept.iter().zip(&scales).map(|(r, s)| r.rhs * s));
    Presolve::Ready(Problem { blocks, b, kept_rows: kept.len() })
}

impl Problem {
    fn m(&self) -> usize {
        self.kept_rows
    }

    /// `out_i += <A_ib, Y>` for every block (Y need not be symmetric).
    fn apply(&self, ys: &[DMatrix<f64>], out: &mut DVector<f64>) {
        for (blk, y) in self.blocks.iter().zip(ys) {
            for &(c, w, r) in &blk.diag {
                out[r] += w * y[(c, c)];
            }
            if blk.u.ncols() == 0 {
                continue;
            }
            let yu = y * &blk.u;
            for p in 0..blk.u.ncols() {
                let v = blk.u.column(p).dot(&yu.column(p));
                out[blk.row[p]] += blk.w[p] * v;
            }
        }
    }

    /// `sum_i y_i A_ib` for every block.
    fn adjoint(&self, y: &DVector<f64>) -> Vec<DMatrix<f64>> {
        self.blocks
            .iter()
            .map(|blk| {
                let mut scaled = blk.u.clone();
                for p in 0..blk.u.ncols() {
                    let c = y[blk.row[p]] * blk.w[p];
                    scaled.column_mut(p).scale_mut(c);
                }
                let mut a = &scaled * blk.u.transpose();
                for &(c, w, r) in &blk.diag {
                    a[(c, c)] += y[r] * w;
                }
                a
            })
            .collect()
    }
}

fn symmetrize(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

fn inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Largest `alpha` with `X + alpha dX` PSD (infinite when dX is PSD), given
/// the Cholesky factor of `X`.
fn max_step_psd(lx: &DMatrix<f64>, dx: &DMatrix<f64>) -> f64 {
    let Some(t) = lx.solve_lower_triangular(dx) else {
        return 0.0;
    };
    let Some(mut s) = lx.solve_lower_triangular(&t.transpose()) else {
        return 0.0;
    };
    symmetrize(&mut s);
    let lmin = s.symmetric_eigenvalues().min();
    if !lmin.is_finite() {
        0.0
    } else if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

fn is_pd_after(x: &DMatrix<f64>, dx: &DMatrix<f64>, alpha: f64) -> bool {
    (x + dx * alpha).cholesky().is_some()
}

fn max_step_lp(x: &DVector<f64>, dx: &DVector<f64>) -> f64 {
    x.iter()
        .zip(dx.iter())
        .filter(|(_, d)| **d < 0.0)
        .map(|(v, d)| -v / d)
        .fold(f64::INFINITY, f64::min)
}

fn spd_inverse(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let mut inv = a.clone().cholesky()?.inverse();
    symmetrize(&mut inv);
    Some(inv)
}

fn solve_schur(m: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(ch) = m.clone().cholesky() {
        return Some(ch.solve(rhs));
    }
    let scale = m.diagonal().amax().max(1e-300);
    for k in [1e-14, 1e-12, 1e-10] {
        let reg = m + DMatrix::identity(m.nrows(), m.ncols()) * (k * scale);
        if let Some(ch) = reg.cholesky() {
            return Some(ch.solve(rhs));
        }
    }
    m.clone().lu().solve(rhs)
}

struct Direction {
    dx: Vec<DMatrix<f64>>,
    dz: Vec<DMatrix<f64>>,
    dxs: DVector<f64>,
    dzs: DVector<f64>,
}

pub(crate) fn solve(program: &ConicProgram, settings: &IpmSettings) -> IpmOutcome {
    let empty_blocks = || {
        (0..program.blocks.len())
            .map(|b| DMatrix::zeros(program.block_real_dim(b), program.block_real_dim(b)))
            .collect::<Vec<_>>()
    };
    let prob = match presolve(program) {
        Presolve::Infeasible => {
            return IpmOutcome {
                status: IpmStatus::Infeasible,
                x: empty_blocks(),
                iterations: 0,
                primal_residual: f64::INFINITY,
                dual_residual: 0.0,
                relative_gap: f64::NAN,
                dual_objective: f64::INFINITY,
            }
        }
        Presolve::Ready(p) => p,
    };
    let m = prob.m();
    let nb = prob.blocks.len();
    let b = &prob.b;
    let bnorm = b.norm();
    let cnorm = prob
        .blocks
        .iter()
        .map(|blk| blk.cost.norm_squared())
        .sum::<f64>()
        .sqrt();

    // starting point
    let mut xs_blocks = Vec::with_capacity(nb);
    let mut zs_blocks = Vec::with_capacity(nb);
    for blk in &prob.blocks {
        let n = blk.n as f64;
        let mut a_norm = vec![0.0f64; m];
        for p in 0..blk.u.ncols() {
            a_norm[blk.row[p]] += blk.w[p].abs() * blk.u.column(p).norm_squared();
        }
        for &(_, w, r) in &blk.diag {
            a_norm[r] += w.abs();
        }
        let xi = (0..m)
            .map(|i| n * (1.0 + b[i].abs()) / (1.0 + a_norm[i]))
            .fold(10f64.max(n.sqrt()), f64::max);
        let eta = a_norm.iter().copied().fold(10f64.max(n.sqrt()).max(blk.cost.norm()), f64::max);
        xs_blocks.push(DMatrix::identity(blk.n, blk.n) * xi);
        zs_blocks.push(DMatrix::identity(blk.n, blk.n) * eta);
    }
    let mut x = xs_blocks;
    let mut z = zs_blocks;
    let lp_start = 10f64.max(b.amax() * 2.0);
    let mut xs = DVector::from_element(m, lp_start);
    let mut zs = DVector::from_element(m, lp_start);
    let mut y = DVector::zeros(m);
    let total_dim: f64 = prob.blocks.iter().map(|b| b.n as f64).sum::<f64>() + m as f64;

    let mut status = IpmStatus::Failed;
    let mut iterations = 0;
    let mut pinf = f64::INFINITY;
    let mut dinf = f64::INFINITY;
    let mut relgap = f64::INFINITY;
    let mut dobj = f64::NAN;
    let mut stalls = 0;
    let mut best_mu = f64::INFINITY;
    let mut since_progress = 0;

    for it in 0..=settings.max_iterations {
        iterations = it;
        // residuals
        let mut ax = xs.clone();
        prob.apply(&x, &mut ax);
        let rp = b - &ax;
        let aty = prob.adjoint(&y);
        let rd: Vec<DMatrix<f64>> = prob
            .blocks
            .iter()
            .enumerate()
            .map(|(i, blk)| DMatrix::from_diagonal(&blk.cost) - &z[i] - &aty[i])
            .collect();
        let rd_lp = -&zs - &y;
        let pobj: f64 = prob.blocks.iter().zip(&x).map(|(blk, xb)| blk.cost.dot(&xb.diagonal())).sum();
        dobj = b.dot(&y);
        let xz: f64 = x.iter().zip(&z).map(|(a, c)| inner(a, c)).sum::<f64>() + xs.dot(&zs);
        let mu = xz / total_dim;
        pinf = rp.norm() / (1.0 + bnorm);
        dinf = (rd.iter().map(|r| r.norm_squared()).sum::<f64>() + rd_lp.norm_squared()).sqrt() / (1.0 + cnorm);
        relgap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());

        if pinf <= settings.tolerance && dinf <= settings.tolerance && relgap <= settings.tolerance {
            status = IpmStatus::Optimal;
            break;
        }

        // Farkas certificate: b^T yh = 1, -A^T yh PSD, yh <= 0
        if dobj > 0.0 && pinf > settings.tolerance {
            let yh = &y / dobj;
            let eps = settings.infeasibility_tolerance;
            if yh.iter().all(|&v| v <= eps) {
                let cert = prob.adjoint(&yh);
                let ok = cert.iter().all(|c| {
                    let mut s = -c;
                    symmetrize(&mut s);
                    s.nrows() == 0 || s.symmetric_eigenvalues().min() >= -eps
                });
                if ok {
                    status = IpmStatus::Infeasible;
                    break;
                }
            }
        }

        if it == settings.max_iterations {
            break;
        }
        // no progress in complementarity for a while: numerical floor
        if mu < 0.9 * best_mu {
            best_mu = mu;
            since_progress = 0;
        } else {
            since_progress += 1;
            let acceptable = pinf <= settings.acceptable_tolerance
                && dinf <= settings.acceptable_tolerance
                && relgap <= settings.acceptable_tolerance;
            if since_progress >= 5 && acceptable {
                break;
            }
        }

        let zinv: Vec<DMatrix<f64>> = match z.iter().map(spd_inverse).collect::<Option<Vec<_>>>() {
            Some(v) => v,
            None => break,
        };
        let chol_l = |m: &DMatrix<f64>| m.clone().cholesky().map(|c| c.l());
        let lx: Vec<DMatrix<f64>> = match x.iter().map(chol_l).collect::<Option<Vec<_>>>() {
            Some(v) => v,
            None => break,
        };
        let lz: Vec<DMatrix<f64>> = match z.iter().map(chol_l).collect::<Option<Vec<_>>>() {
            Some(v) => v,
            None => break,
        };

        // Schur complement
        let mut schur = DMatrix::<f64>::zeros(m, m);
        for (i, blk) in prob.blocks.iter().enumerate() {
            let r = blk.u.ncols();
            let xu = &x[i] * &blk.u;
            let zu = &zinv[i] * &blk.u;
            if r > 0 {
                let g = blk.u.transpose() * &xu;
                let h = blk.u.transpose() * &zu;
                for p in 0..r {
                    for q in 0..r {
                        schur[(blk.row[p], blk.row[q])] += blk.w[p] * blk.w[q] * g[(p, q)] * h[(p, q)];
                    }
                }
            }
            for &(c, wc, rc) in &blk.diag {
                for p in 0..r {
                    let v = blk.w[p] * wc * xu[(c, p)] * zu[(c, p)];
                    schur[(blk.row[p], rc)] += v;
                    schur[(rc, blk.row[p])] += v;
                }
                for &(c2, w2, r2) in &blk.diag {
                    schur[(rc, r2)] += wc * w2 * x[i][(c, c2)] * zinv[i][(c2, c)];
                }
            }
        }
        for i in 0..m {
            schur[(i, i)] += xs[i] / zs[i];
        }

        // X Rd Z^-1, shared by predictor and corrector
        let x_rd_zinv: Vec<DMatrix<f64>> = (0..nb).map(|i| &x[i] * &rd[i] * &zinv[i]).collect();
        let xs_rd_zs = xs.component_mul(&rd_lp).component_div(&zs);

        let direction = |sigma_mu: f64, corr: Option<(&[DMatrix<f64>], &DVector<f64>)>| -> Option<Direction> {
            let mut rhs = b.clone();
            let mut tmp = DVector::zeros(m);
            let mut comp: Vec<DMatrix<f64>> = (0..nb).map(|i| &zinv[i] * sigma_mu - &x_rd_zinv[i]).collect();
            let mut comp_lp = zs.map(|v| sigma_mu / v) - &xs_rd_zs;
            if let Some((c, c_lp)) = corr {
                for i in 0..nb {
                    comp[i] -= &c[i];
                }
                comp_lp -= c_lp;
            }
            prob.apply(&comp, &mut tmp);
            tmp += &comp_lp;
            rhs -= &tmp;
            let dy = solve_schur(&schur, &rhs)?;
            if dy.iter().any(|v| !v.is_finite()) {
                return None;
            }
            let atdy = prob.adjoint(&dy);
            let mut dz: Vec<DMatrix<f64>> = (0..nb).map(|i| &rd[i] - &atdy[i]).collect();
            let mut dzs = &rd_lp - &dy;
            let mut dx = Vec::with_capacity(nb);
            for i in 0..nb {
                let mut d = &zinv[i] * sigma_mu - &x[i] - &x[i] * &dz[i] * &zinv[i];
                if let Some((c, _)) = corr {
                    d -= &c[i];
                }
                symmetrize(&mut d);
                dx.push(d);
            }
            let mut dxs = zs.map(|v| sigma_mu / v) - &xs - xs.component_mul(&dzs).component_div(&zs);
            if let Some((_, c_lp)) = corr {
                dxs -= c_lp;
            }
            // iterative refinement on the primal equation A(dX) + dxs = rp
            for _ in 0..2 {
                let mut r = &rp - &dxs;
                let mut adx = DVector::zeros(m);
                prob.apply(&dx, &mut adx);
                r -= adx;
                if r.norm() <= (1e-12 * (1.0 + bnorm)).max(1e-6 * rp.norm()) {
                    break;
                }
                let ddy = solve_schur(&schur, &r)?;
                if ddy.iter().any(|v| !v.is_finite()) {
                    break;
                }
                let at = prob.adjoint(&ddy);
                for i in 0..nb {
                    dz[i] -= &at[i];
                    let mut c = &x[i] * &at[i] * &zinv[i];
                    symmetrize(&mut c);
                    dx[i] += c;
                }
                dzs -= &ddy;
                dxs += xs.component_mul(&ddy).component_div(&zs);
            }
            Some(Direction { dx, dz, dxs, dzs })
        };

        let steps = |d: &Direction| -> (f64, f64) {
            let mut ap = max_step_lp(&xs, &d.dxs);
            let mut ad = max_step_lp(&zs, &d.dzs);
            for i in 0..nb {
                ap = ap.min(max_step_psd(&lx[i], &d.dx[i]));
                ad = ad.min(max_step_psd(&lz[i], &d.dz[i]));
            }
            (ap, ad)
        };

        // predictor
        let Some(pred) = direction(0.0, None) else { break };
        let (ap, ad) = steps(&pred);
        let (ap1, ad1) = (ap.min(1.0), ad.min(1.0));
        let mut xz_aff = 0.0;
        for i in 0..nb {
            let xa = &x[i] + &pred.dx[i] * ap1;
            let za = &z[i] + &pred.dz[i] * ad1;
            xz_aff += inner(&xa, &za);
        }
        xz_aff += (&xs + &pred.dxs * ap1).dot(&(&zs + &pred.dzs * ad1));
        let mu_aff = xz_aff / total_dim;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // corrector
        let corr: Vec<DMatrix<f64>> = (0..nb).map(|i| &pred.dx[i] * &pred.dz[i] * &zinv[i]).collect();
        let corr_lp = pred.dxs.component_mul(&pred.dzs).component_div(&zs);
        let Some(dir) = direction(sigma * mu, Some((&corr, &corr_lp))) else { break };
        let (ap, ad) = steps(&dir);
        let gamma = 0.98;
        let mut ap = (gamma * ap).min(1.0);
        let mut ad = (gamma * ad).min(1.0);
        // guard against an underestimated eigenvalue
        for _ in 0..30 {
            if (0..nb).all(|i| is_pd_after(&x[i], &dir.dx[i], ap)) {
                break;
            }
            ap *= 0.8;
        }
        for _ in 0..30 {
            if (0..nb).all(|i| is_pd_after(&z[i], &dir.dz[i], ad)) {
                break;
            }
            ad *= 0.8;
        }
        if ap < 1e-10 && ad < 1e-10 {
            stalls += 1;
            if stalls >= 3 {
                break;
            }
        } else {
            stalls = 0;
        }
        for i in 0..nb {
            x[i] += &dir.dx[i] * ap;
            z[i] += &dir.dz[i] * ad;
            symmetrize(&mut x[i]);
            symmetrize(&mut z[i]);
        }
        xs += &dir.dxs * ap;
        zs += &dir.dzs * ad;
        // y moves with the dual step
        let dy = {
            // recover dy from dzs = rd_lp - dy
            &rd_lp - &dir.dzs
        };
        y += dy * ad;
    }

    if status == IpmStatus::Failed
        && pinf <= settings.acceptable_tolerance
        && dinf <= settings.acceptable_tolerance
        && relgap <= settings.acceptable_tolerance
    {
        status = IpmStatus::Optimal;
    }

    let mut out = empty_blocks();
    for (blk, xb) in prob.blocks.iter().zip(x) {
        let mut xs = xb;
        for i in 0..blk.n {
            for j in 0..blk.n {
                xs[(i, j)] *= blk.d[i] * blk.d[j];
            }
        }
        out[blk.program_index] = xs;
    }
    IpmOutcome {
        status,
        x: out,
        iterations,
        primal_residual: pinf,
        dual_residual: dinf,
        relative_gap: relgap,
        dual_objective: dobj,
    }
}
