//! Homogeneous self-dual embedding, Mehrotra predictor-corrector.
//!
//! Works on `min c^T x  s.t.  A x + s = b, s in K` with residuals
//! `r_x = A^T z + c tau`, `r_z = A x + s - b tau`, `r_tau = c^T x + b^T z + kappa`.

mod cones;
mod data;
mod kkt;
mod normal;

use crate::solver::{Settings, Solution, Status};
use crate::ConicProblem;
use cones::{dot, norm, Cone, Scaling};
use data::Data;
use kkt::Kkt;
use normal::NormalSystem;

const STEP_FRACTION: f64 = 0.99;

fn for_ineq(data: &Data, mut f: impl FnMut(usize, Cone, std::ops::Range<usize>)) {
    for (k, &cone) in data.cones.iter().enumerate() {
        if !cone.is_zero() {
            f(k, cone, data.range(k));
        }
    }
}

/// Shifts `u` into the cone interior if needed.
fn push_inside(data: &Data, u: &mut [f64]) {
    let mut worst = f64::NEG_INFINITY;
    let mut scale = 1.0f64;
    for_ineq(data, |_, cone, r| {
        worst = worst.max(-cone.min_eig(&u[r.clone()]));
        scale = scale.max(norm(&u[r]));
    });
    if worst >= -1e-8 * scale {
        let mut e = vec![0.0; u.len()];
        for_ineq(data, |_, cone, r| cone.unit(&mut e[r]));
        for i in 0..u.len() {
            u[i] += (1.0 + worst) * e[i];
        }
    }
}

fn failure(n: usize, iterations: usize) -> Solution {
    Solution {
        status: Status::NumericalFailure,
        primal: vec![0.0; n],
        objective: f64::NAN,
        iterations,
        certificate: None,
        primal_residual: f64::NAN,
        dual_residual: f64::NAN,
        gap: f64::NAN,
    }
}

pub(crate) fn solve(problem: &ConicProblem, settings: &Settings) -> Solution {
    let data = Data::from_problem(problem);
    let (n, m) = (data.n, data.m);
    let mk = |status, primal: Vec<f64>, it, cert, pres, dres, gap| {
        let objective = if status == Status::Optimal { problem.objective_value(&primal) } else { f64::NAN };
        Solution { status, primal, objective, iterations: it, certificate: cert, primal_residual: pres, dual_residual: dres, gap }
    };
    if m == 0 {
        return if data.c.iter().all(|&c| c == 0.0) {
            mk(Status::Optimal, vec![0.0; n], 0, None, 0.0, 0.0, 0.0)
        } else {
            mk(Status::Unbounded, vec![0.0; n], 0, Some(data.c.iter().map(|c| -c).collect()), 0.0, 0.0, 0.0)
        };
    }
    let ns = NormalSystem::new(&data);
    if settings.verbose {
        eprintln!("{n} variables ({} eliminated), {m} rows, {} cones", ns.eliminated, data.cones.len());
    }
    let mut kkt = Kkt { data: &data, ns, scal: Vec::new() };
    let ident: Vec<Scaling> = data.cones.iter().map(|&c| Scaling::identity(c)).collect();
    if !kkt.factor(ident) {
        return failure(n, 0);
    }

    let nu = data.degree() as f64;
    let bnorm = norm(&data.b).max(1.0);
    let cnorm = norm(&data.c).max(1.0);

    // Starting point: least-norm primal and dual solutions, pushed inside the cone.
    let mut x = vec![0.0; n];
    let mut s = vec![0.0; m];
    let mut z = vec![0.0; m];
    {
        let zero_n = vec![0.0; n];
        let zero_m = vec![0.0; m];
        let mut tmp = vec![0.0; m];
        kkt.solve(&zero_n, &data.b, &mut x, &mut tmp);
        for i in 0..m {
            s[i] = -tmp[i];
        }
        for &r in &kkt.ns.eq_rows {
            s[r] = 0.0;
        }
        let negc: Vec<f64> = data.c.iter().map(|c| -c).collect();
        let mut tx = vec![0.0; n];
        kkt.solve(&negc, &zero_m, &mut tx, &mut z);
        push_inside(&data, &mut s);
        push_inside(&data, &mut z);
    }
    let mut tau = 1.0;
    let mut kappa = 1.0;

    let mut rx = vec![0.0; n];
    let mut rz = vec![0.0; m];
    let mut x1 = vec![0.0; n];
    let mut z1 = vec![0.0; m];
    let mut x2 = vec![0.0; n];
    let mut z2 = vec![0.0; m];
    let mut lambda = vec![0.0; m];
    let mut tiny_steps = 0;
    let mut best: Option<(f64, Vec<f64>, f64, f64, f64)> = None;

    for it in 0..settings.max_iter {
        // Residuals.
        data.at.mul(&z, &mut rx);
        for j in 0..n {
            rx[j] += data.c[j] * tau;
        }
        data.a.mul(&x, &mut rz);
        for i in 0..m {
            rz[i] += s[i] - data.b[i] * tau;
        }
        let cx = dot(&data.c, &x);
        let bz = dot(&data.b, &z);
        let rtau = cx + bz + kappa;
        let mut sz = 0.0;
        for_ineq(&data, |_, _, r| sz += dot(&s[r.clone()], &z[r]));
        let mu = (sz + tau * kappa) / (nu + 1.0);

        let pres = norm(&rz) / tau / bnorm;
        let dres = norm(&rx) / tau / cnorm;
        let pcost = cx / tau;
        let dcost = -bz / tau;
        let gap = (pcost - dcost).abs();
        let rgap = gap / pcost.abs().max(dcost.abs()).max(1.0);
        if settings.verbose {
            eprintln!(
                "{it:3} pcost {pcost:+.8e} dcost {dcost:+.8e} pres {pres:.2e} dres {dres:.2e} gap {rgap:.2e} tau {tau:.2e} kap {kappa:.2e}"
            );
        }
        let xs: Vec<f64> = x.iter().map(|v| v / tau).collect();
        if pres <= settings.feas_tol && dres <= settings.feas_tol && rgap <= settings.gap_tol {
            return mk(Status::Optimal, xs, it, None, pres, dres, rgap);
        }
        let merit = pres.max(dres).max(rgap);
        if best.as_ref().is_none_or(|b| merit < b.0) {
            best = Some((merit, xs, pres, dres, rgap));
        }
        if kappa > tau {
            let mut atz = vec![0.0; n];
            data.at.mul(&z, &mut atz);
            if bz < 0.0 && norm(&atz) / -bz <= settings.feas_tol {
                let cert = z.iter().map(|v| v / -bz).collect();
                return mk(Status::Infeasible, vec![0.0; n], it, Some(cert), pres, dres, rgap);
            }
            let mut axs = vec![0.0; m];
            data.a.mul(&x, &mut axs);
            for i in 0..m {
                axs[i] += s[i];
            }
            if cx < 0.0 && norm(&axs) / -cx <= settings.feas_tol {
                let cert = x.iter().map(|v| v / -cx).collect();
                return mk(Status::Unbounded, vec![0.0; n], it, Some(cert), pres, dres, rgap);
            }
        }

        // Scaling at the current point.
        let mut scal = Vec::with_capacity(data.cones.len());
        for (k, &cone) in data.cones.iter().enumerate() {
            let r = data.range(k);
            match Scaling::nt(cone, &s[r.clone()], &z[r]) {
                Some(w) => scal.push(w),
                None => return stalled(best, n, it, &mk),
            }
        }
        for_ineq(&data, |k, _, r| scal[k].w(&z[r.clone()], &mut lambda[r]));
        if !kkt.factor(scal) {
            return stalled(best, n, it, &mk);
        }

        let negc: Vec<f64> = data.c.iter().map(|c| -c).collect();
        kkt.solve(&negc, &data.b, &mut x1, &mut z1);
        let denom_base = dot(&data.c, &x1) + dot(&data.b, &z1) - kappa / tau;

        // Predictor then corrector.
        let mut ds_aff_scaled = vec![0.0; m];
        let mut dz_aff_scaled = vec![0.0; m];
        let mut dtau_aff = 0.0;
        let mut dkappa_aff = 0.0;
        let mut sigma = 0.0;
        let mut step = None;
        for phase in 0..2 {
            let corrector = phase == 1;
            let eta = if corrector { 1.0 - sigma } else { 1.0 };
            // d_s and q = lambda \ d_s per cone.
            let mut q = vec![0.0; m];
            let dkappa_t;
            if corrector {
                let mut dsv = vec![0.0; m];
                for_ineq(&data, |_, cone, r| {
                    let mut ll = vec![0.0; r.len()];
                    cone.jordan(&lambda[r.clone()], &lambda[r.clone()], &mut ll);
                    let mut cross = vec![0.0; r.len()];
                    cone.jordan(&ds_aff_scaled[r.clone()], &dz_aff_scaled[r.clone()], &mut cross);
                    let mut e = vec![0.0; r.len()];
                    cone.unit(&mut e);
                    for i in 0..r.len() {
                        dsv[r.start + i] = ll[i] + cross[i] - sigma * mu * e[i];
                    }
                    cone.jordan_div(&lambda[r.clone()], &dsv[r.clone()], &mut q[r]);
                });
                dkappa_t = tau * kappa + dtau_aff * dkappa_aff - sigma * mu;
            } else {
                q.copy_from_slice(&lambda);
                dkappa_t = tau * kappa;
            }
            let mut rhs_z = vec![0.0; m];
            for i in 0..m {
                rhs_z[i] = -eta * rz[i];
            }
            for_ineq(&data, |k, _, r| {
                let mut wq = vec![0.0; r.len()];
                kkt.scal[k].wt(&q[r.clone()], &mut wq);
                for i in 0..r.len() {
                    rhs_z[r.start + i] += wq[i];
                }
            });
            let rhs_x: Vec<f64> = rx.iter().map(|v| -eta * v).collect();
            kkt.solve(&rhs_x, &rhs_z, &mut x2, &mut z2);
            let dtau = (-eta * rtau - dot(&data.c, &x2) - dot(&data.b, &z2) + dkappa_t / tau) / denom_base;
            let dx: Vec<f64> = (0..n).map(|j| x2[j] + dtau * x1[j]).collect();
            let dz: Vec<f64> = (0..m).map(|i| z2[i] + dtau * z1[i]).collect();
            let dkappa = -(dkappa_t + kappa * dtau) / tau;
            // Scaled directions: W dz and W^{-T} ds = -(q + W dz).
            let mut wdz = vec![0.0; m];
            let mut wds = vec![0.0; m];
            let mut alpha = f64::INFINITY;
            for_ineq(&data, |k, cone, r| {
                kkt.scal[k].w(&dz[r.clone()], &mut wdz[r.clone()]);
                for i in r.clone() {
                    wds[i] = -(q[i] + wdz[i]);
                }
                alpha = alpha
                    .min(cone.max_step_scaled(&lambda[r.clone()], &wds[r.clone()]))
                    .min(cone.max_step_scaled(&lambda[r.clone()], &wdz[r]));
            });
            if dtau < 0.0 {
                alpha = alpha.min(-tau / dtau);
            }
            if dkappa < 0.0 {
                alpha = alpha.min(-kappa / dkappa);
            }
            if corrector {
                step = Some((dx, dz, wds, dtau, dkappa, (STEP_FRACTION * alpha).min(1.0)));
            } else {
                let a = alpha.min(1.0);
                sigma = (1.0 - a).powi(3);
                ds_aff_scaled = wds;
                dz_aff_scaled = wdz;
                dtau_aff = dtau;
                dkappa_aff = dkappa;
            }
        }
        let (dx, dz, wds, dtau, dkappa, alpha) = step.unwrap();
        if !(alpha > 0.0) || !alpha.is_finite() {
            return stalled(best, n, it, &mk);
        }
        if alpha < 1e-8 {
            tiny_steps += 1;
            if tiny_steps >= 3 {
                return stalled(best, n, it, &mk);
            }
        }
        for j in 0..n {
            x[j] += alpha * dx[j];
        }
        for_ineq(&data, |k, _, r| {
            let mut ds = vec![0.0; r.len()];
            kkt.scal[k].wt(&wds[r.clone()], &mut ds);
            for i in 0..r.len() {
                s[r.start + i] += alpha * ds[i];
            }
        });
        for i in 0..m {
            z[i] += alpha * dz[i];
        }
        tau += alpha * dtau;
        kappa += alpha * dkappa;
        if !x.iter().chain(&z).chain(&s).all(|v| v.is_finite()) {
            return failure(n, it);
        }
    }
    stalled(best, n, settings.max_iter, &mk)
}

fn stalled<F>(best: Option<(f64, Vec<f64>, f64, f64, f64)>, n: usize, it: usize, mk: &F) -> Solution
where
    F: Fn(Status, Vec<f64>, usize, Option<Vec<f64>>, f64, f64, f64) -> Solution,
{
    match best {
        Some((_, xs, p, d, g)) => {
            let mut sol = mk(Status::NumericalFailure, xs, it, None, p, d, g);
            sol.objective = f64::NAN;
            sol
        }
        None => failure(n, it),
    }
}
