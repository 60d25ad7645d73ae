//! Multinomial No-U-Turn transitions with a diagonal Euclidean metric.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::adapt::{DualAveraging, WindowSchedule, Welford};
use super::{ChainRun, IterStats, LogDensity, SamplerConfig};
use crate::error::{Error, Result};
use crate::special::log_add_exp;

const MAX_DELTA_H: f64 = 1000.0;
const INIT_ATTEMPTS: usize = 100;

#[derive(Clone, Debug)]
struct Point {
    q: Vec<f64>,
    p: Vec<f64>,
    grad: Vec<f64>,
    lp: f64,
}

/// One leapfrog step of size `eps` under inverse metric `inv_metric`.
/// Updates `q`, `p` and `grad` in place and returns the new log density.
pub fn leapfrog<T: LogDensity + ?Sized>(
    target: &T,
    q: &mut [f64],
    p: &mut [f64],
    grad: &mut [f64],
    eps: f64,
    inv_metric: &[f64],
) -> f64 {
    for (pi, gi) in p.iter_mut().zip(grad.iter()) {
        *pi += 0.5 * eps * gi;
    }
    for ((qi, pi), mi) in q.iter_mut().zip(p.iter()).zip(inv_metric) {
        *qi += eps * mi * pi;
    }
    let lp = target.log_density_grad(q, grad);
    for (pi, gi) in p.iter_mut().zip(grad.iter()) {
        *pi += 0.5 * eps * gi;
    }
    lp
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn add_into(acc: &mut [f64], x: &[f64]) {
    for (a, v) in acc.iter_mut().zip(x) {
        *a += v;
    }
}

fn sum(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn criterion(p_sharp_minus: &[f64], p_sharp_plus: &[f64], rho: &[f64]) -> bool {
    dot(p_sharp_plus, rho) > 0.0 && dot(p_sharp_minus, rho) > 0.0
}

struct Sampler<'a, T: ?Sized> {
    target: &'a T,
    inv_metric: Vec<f64>,
    eps: f64,
    max_depth: usize,
    rng: &'a mut ChaCha8Rng,
    // per-transition accumulators
    n_leapfrog: usize,
    sum_metro_prob: f64,
    divergent: bool,
}

impl<T: LogDensity + ?Sized> Sampler<'_, T> {
    fn kinetic(&self, p: &[f64]) -> f64 {
        0.5 * p
            .iter()
            .zip(&self.inv_metric)
            .map(|(pi, mi)| pi * pi * mi)
            .sum::<f64>()
    }

    fn hamiltonian(&self, z: &Point) -> f64 {
        let h = -z.lp + self.kinetic(&z.p);
        if h.is_nan() {
            f64::INFINITY
        } else {
            h
        }
    }

    fn p_sharp(&self, p: &[f64]) -> Vec<f64> {
        p.iter().zip(&self.inv_metric).map(|(pi, mi)| pi * mi).collect()
    }

    fn sample_momentum(&mut self, z: &mut Point) {
        for (pi, mi) in z.p.iter_mut().zip(&self.inv_metric) {
            let n: f64 = self.rng.sample(StandardNormal);
            *pi = n / mi.sqrt();
        }
    }

    fn evolve(&self, z: &mut Point, eps: f64) {
        z.lp = leapfrog(self.target, &mut z.q, &mut z.p, &mut z.grad, eps, &self.inv_metric);
        if !z.lp.is_finite() {
            z.lp = f64::NEG_INFINITY;
        }
    }

    /// Heuristic from the reference sampler: double or halve the step until
    /// the acceptance of a single step crosses 0.8.
    fn init_step_size(&mut self, z: &Point) -> Result<()> {
        if self.eps == 0.0 || self.eps > 1e7 {
            return Ok(());
        }
        let mut w = z.clone();
        self.sample_momentum(&mut w);
        let h0 = self.hamiltonian(&w);
        self.evolve(&mut w, self.eps);
        let delta_h = h0 - self.hamiltonian(&w);
        let direction = if delta_h > 0.8f64.ln() { 1 } else { -1 };
        loop {
            let mut w = z.clone();
            self.sample_momentum(&mut w);
            let h0 = self.hamiltonian(&w);
            self.evolve(&mut w, self.eps);
            let delta_h = h0 - self.hamiltonian(&w);
            let crossed = if direction == 1 { !(delta_h > 0.8f64.ln()) } else { !(delta_h < 0.8f64.ln()) };
            if crossed {
                break;
            }
            self.eps = if direction == 1 { 2.0 * self.eps } else { 0.5 * self.eps };
            if self.eps > 1e7 {
                return Err(Error::invalid(
                    "step size search diverged upwards; the posterior may be improper",
                ));
            }
            if self.eps == 0.0 {
                return Err(Error::invalid(
                    "step size search collapsed to zero; the gradient may be wrong",
                ));
            }
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn build_tree(
        &mut self,
        depth: usize,
        z: &mut Point,
        z_propose: &mut Point,
        p_sharp_beg: &mut Vec<f64>,
        p_sharp_end: &mut Vec<f64>,
        rho: &mut [f64],
        p_beg: &mut Vec<f64>,
        p_end: &mut Vec<f64>,
        h0: f64,
        sign: f64,
        log_sum_weight: &mut f64,
    ) -> bool {
        if depth == 0 {
            self.evolve(z, sign * self.eps);
            self.n_leapfrog += 1;
            let h = self.hamiltonian(z);
            if h - h0 > MAX_DELTA_H {
                self.divergent = true;
            }
            *log_sum_weight = log_add_exp(*log_sum_weight, h0 - h);
            self.sum_metro_prob += if h0 - h > 0.0 { 1.0 } else { (h0 - h).exp() };
            z_propose.clone_from(z);
            *p_sharp_beg = self.p_sharp(&z.p);
            p_sharp_end.clone_from(p_sharp_beg);
            add_into(rho, &z.p);
            p_beg.clone_from(&z.p);
            p_end.clone_from(&z.p);
            return !self.divergent;
        }

        let dim = z.q.len();
        let mut lsw_init = f64::NEG_INFINITY;
        let mut p_init_end = vec![0.0; dim];
        let mut p_sharp_init_end = vec![0.0; dim];
        let mut rho_init = vec![0.0; dim];
        if !self.build_tree(
            depth - 1,
            z,
            z_propose,
            p_sharp_beg,
            &mut p_sharp_init_end,
            &mut rho_init,
            p_beg,
            &mut p_init_end,
            h0,
            sign,
            &mut lsw_init,
        ) {
            return false;
        }

        let mut z_propose_final = z.clone();
        let mut lsw_final = f64::NEG_INFINITY;
        let mut p_final_beg = vec![0.0; dim];
        let mut p_sharp_final_beg = vec![0.0; dim];
        let mut rho_final = vec![0.0; dim];
        if !self.build_tree(
            depth - 1,
            z,
            &mut z_propose_final,
            &mut p_sharp_final_beg,
            p_sharp_end,
            &mut rho_final,
            &mut p_final_beg,
            p_end,
            h0,
            sign,
            &mut lsw_final,
        ) {
            return false;
        }

        let lsw_subtree = log_add_exp(lsw_init, lsw_final);
        *log_sum_weight = log_add_exp(*log_sum_weight, lsw_subtree);
        if lsw_final > lsw_subtree {
            *z_propose = z_propose_final;
        } else {
            let accept = (lsw_final - lsw_subtree).exp();
            if self.rng.random::<f64>() < accept {
                *z_propose = z_propose_final;
            }
        }

        let rho_subtree = sum(&rho_init, &rho_final);
        add_into(rho, &rho_subtree);

        let mut persist = criterion(p_sharp_beg, p_sharp_end, &rho_subtree);
        let rho_ext = sum(&rho_init, &p_final_beg);
        persist &= criterion(p_sharp_beg, &p_sharp_final_beg, &rho_ext);
        let rho_ext = sum(&rho_final, &p_init_end);
        persist &= criterion(&p_sharp_init_end, p_sharp_end, &rho_ext);
        persist
    }

    fn transition(&mut self, z0: &mut Point) -> IterStats {
        self.sample_momentum(z0);
        let dim = z0.q.len();
        let mut z_fwd = z0.clone();
        let mut z_bck = z0.clone();
        let mut z_sample = z0.clone();
        let mut z_propose = z0.clone();

        let p0_sharp = self.p_sharp(&z0.p);
        let (mut p_sharp_fwd_bck, mut p_sharp_fwd_fwd) = (p0_sharp.clone(), p0_sharp.clone());
        let (mut p_sharp_bck_fwd, mut p_sharp_bck_bck) = (p0_sharp.clone(), p0_sharp);
        let (mut p_fwd_bck, mut p_fwd_fwd) = (z0.p.clone(), z0.p.clone());
        let (mut p_bck_fwd, mut p_bck_bck) = (z0.p.clone(), z0.p.clone());
        let mut rho = z0.p.clone();

        let mut log_sum_weight = 0.0;
        let h0 = self.hamiltonian(z0);
        self.n_leapfrog = 0;
        self.sum_metro_prob = 0.0;
        self.divergent = false;
        let mut depth = 0;

        while depth < self.max_depth {
            let mut rho_fwd = vec![0.0; dim];
            let mut rho_bck = vec![0.0; dim];
            let mut lsw_subtree = f64::NEG_INFINITY;
            let valid = if self.rng.random::<f64>() > 0.5 {
                rho_bck.clone_from(&rho);
                p_bck_fwd.clone_from(&p_fwd_bck);
                p_sharp_bck_fwd.clone_from(&p_sharp_fwd_bck);
                let mut z = z_fwd.clone();
                let ok = self.build_tree(
                    depth,
                    &mut z,
                    &mut z_propose,
                    &mut p_sharp_fwd_bck,
                    &mut p_sharp_fwd_fwd,
                    &mut rho_fwd,
                    &mut p_fwd_bck,
                    &mut p_fwd_fwd,
                    h0,
                    1.0,
                    &mut lsw_subtree,
                );
                z_fwd = z;
                ok
            } else {
                rho_fwd.clone_from(&rho);
                p_fwd_bck.clone_from(&p_bck_fwd);
                p_sharp_fwd_bck.clone_from(&p_sharp_bck_fwd);
                let mut z = z_bck.clone();
                let ok = self.build_tree(
                    depth,
                    &mut z,
                    &mut z_propose,
                    &mut p_sharp_bck_fwd,
                    &mut p_sharp_bck_bck,
                    &mut rho_bck,
                    &mut p_bck_fwd,
                    &mut p_bck_bck,
                    h0,
                    -1.0,
                    &mut lsw_subtree,
                );
                z_bck = z;
                ok
            };
            if !valid {
                break;
            }
            depth += 1;

            if lsw_subtree > log_sum_weight {
                z_sample.clone_from(&z_propose);
            } else {
                let accept = (lsw_subtree - log_sum_weight).exp();
                if self.rng.random::<f64>() < accept {
                    z_sample.clone_from(&z_propose);
                }
            }
            log_sum_weight = log_add_exp(log_sum_weight, lsw_subtree);

            rho = sum(&rho_bck, &rho_fwd);
            let mut persist = criterion(&p_sharp_bck_bck, &p_sharp_fwd_fwd, &rho);
            let rho_ext = sum(&rho_bck, &p_fwd_bck);
            persist &= criterion(&p_sharp_bck_bck, &p_sharp_fwd_bck, &rho_ext);
            let rho_ext = sum(&rho_fwd, &p_bck_fwd);
            persist &= criterion(&p_sharp_bck_fwd, &p_sharp_fwd_fwd, &rho_ext);
            if !persist {
                break;
            }
        }

        let h = self.hamiltonian(&z_sample);
        *z0 = z_sample;
        IterStats {
            accept_stat: self.sum_metro_prob / self.n_leapfrog.max(1) as f64,
            step_size: self.eps,
            tree_depth: depth,
            n_leapfrog: self.n_leapfrog,
            divergent: self.divergent,
            energy: h,
            lp: z0.lp,
        }
    }
}

fn initial_point<T: LogDensity + ?Sized>(
    target: &T,
    radius: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Point> {
    let dim = target.dim();
    let mut grad = vec![0.0; dim];
    for _ in 0..INIT_ATTEMPTS {
        let q: Vec<f64> = (0..dim)
            .map(|_| if radius > 0.0 { rng.random_range(-radius..radius) } else { 0.0 })
            .collect();
        let lp = target.log_density_grad(&q, &mut grad);
        if lp.is_finite() && grad.iter().all(|g| g.is_finite()) {
            return Ok(Point {
                q,
                p: vec![0.0; dim],
                grad,
                lp,
            });
        }
    }
    Err(Error::InitializationFailed(INIT_ATTEMPTS))
}

pub(crate) fn run_chain<T: LogDensity + ?Sized>(
    target: &T,
    cfg: &SamplerConfig,
    rng: &mut ChaCha8Rng,
    n_out: usize,
) -> Result<ChainRun> {
    let dim = target.dim();
    let mut z = initial_point(target, cfg.init_radius, rng)?;
    let mut s = Sampler {
        target,
        inv_metric: vec![1.0; dim],
        eps: 1.0,
        max_depth: cfg.max_tree_depth,
        rng,
        n_leapfrog: 0,
        sum_metro_prob: 0.0,
        divergent: false,
    };
    s.init_step_size(&z)?;

    let mut da = DualAveraging::new(cfg.target_accept);
    da.set_mu((10.0 * s.eps).ln());
    let mut windows = WindowSchedule::new(cfg.warmup_iters);
    let mut welford = Welford::new(dim);

    for _ in 0..cfg.warmup_iters {
        let st = s.transition(&mut z);
        s.eps = da.learn(st.accept_stat);
        if let Some(var) = windows.learn(&mut welford, &z.q) {
            s.inv_metric = var;
            s.init_step_size(&z)?;
            da.set_mu((10.0 * s.eps).ln());
            da.restart();
        }
    }
    if cfg.warmup_iters > 0 {
        s.eps = da.final_step_size();
    }

    let mut values = Vec::with_capacity(cfg.sampling_iters * n_out);
    let mut stats = Vec::with_capacity(cfg.sampling_iters);
    let mut buf = Vec::with_capacity(n_out);
    for _ in 0..cfg.sampling_iters {
        let st = s.transition(&mut z);
        target.constrain(&z.q, &mut buf);
        debug_assert_eq!(buf.len(), n_out);
        values.extend_from_slice(&buf);
        stats.push(st);
    }
    Ok(ChainRun { values, stats })
}
