//! Warmup adaptation: dual averaging for the step size and windowed
//! variance estimates for the diagonal metric.

pub(crate) struct DualAveraging {
    mu: f64,
    delta: f64,
    gamma: f64,
    kappa: f64,
    t0: f64,
    counter: f64,
    s_bar: f64,
    x_bar: f64,
}

impl DualAveraging {
    pub fn new(delta: f64) -> Self {
        DualAveraging {
            mu: (10.0f64).ln(),
            delta,
            gamma: 0.05,
            kappa: 0.75,
            t0: 10.0,
            counter: 0.0,
            s_bar: 0.0,
            x_bar: 0.0,
        }
    }

    pub fn set_mu(&mut self, mu: f64) {
        self.mu = mu;
    }

    pub fn restart(&mut self) {
        self.counter = 0.0;
        self.s_bar = 0.0;
        self.x_bar = 0.0;
    }

    /// Updates from one transition's acceptance statistic; returns the new step size.
    pub fn learn(&mut self, accept_stat: f64) -> f64 {
        self.counter += 1.0;
        let a = accept_stat.min(1.0);
        let eta = 1.0 / (self.counter + self.t0);
        self.s_bar = (1.0 - eta) * self.s_bar + eta * (self.delta - a);
        let x = self.mu - self.s_bar * self.counter.sqrt() / self.gamma;
        let x_eta = self.counter.powf(-self.kappa);
        self.x_bar = (1.0 - x_eta) * self.x_bar + x_eta * x;
        x.exp()
    }

    pub fn final_step_size(&self) -> f64 {
        self.x_bar.exp()
    }
}

/// Welford accumulator for per-coordinate variances.
pub(crate) struct Welford {
    n: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Welford {
    pub fn new(dim: usize) -> Self {
        Welford {
            n: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    pub fn restart(&mut self) {
        self.n = 0;
        self.mean.iter_mut().for_each(|v| *v = 0.0);
        self.m2.iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn add(&mut self, q: &[f64]) {
        self.n += 1;
        let n = self.n as f64;
        for ((m, s), &x) in self.mean.iter_mut().zip(&mut self.m2).zip(q) {
            let d = x - *m;
            *m += d / n;
            *s += d * (x - *m);
        }
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn variance(&self) -> Vec<f64> {
        let denom = (self.n.max(2) - 1) as f64;
        self.m2.iter().map(|s| s / denom).collect()
    }
}

/// Expanding-window schedule: an initial fast buffer, doubling slow windows,
/// and a terminal fast buffer.
pub(crate) struct WindowSchedule {
    num_warmup: usize,
    init_buffer: usize,
    term_buffer: usize,
    window_size: usize,
    next_window: usize,
    counter: usize,
    enabled: bool,
}

impl WindowSchedule {
    pub fn new(num_warmup: usize) -> Self {
        let (mut init_buffer, mut term_buffer, mut base_window) = (75usize, 50usize, 25usize);
        let enabled = num_warmup >= 20;
        if enabled && init_buffer + base_window + term_buffer > num_warmup {
            init_buffer = (0.15 * num_warmup as f64) as usize;
            term_buffer = (0.1 * num_warmup as f64) as usize;
            base_window = num_warmup - (init_buffer + term_buffer);
        }
        WindowSchedule {
            num_warmup,
            init_buffer,
            term_buffer,
            window_size: base_window,
            next_window: init_buffer + base_window - 1,
            counter: 0,
            enabled,
        }
    }

    fn in_window(&self) -> bool {
        self.counter >= self.init_buffer
            && self.counter < self.num_warmup - self.term_buffer
            && self.counter != self.num_warmup
    }

    fn window_end(&self) -> bool {
        self.counter == self.next_window && self.counter != self.num_warmup
    }

    fn advance_window(&mut self) {
        let last = self.num_warmup - self.term_buffer - 1;
        if self.next_window == last {
            return;
        }
        self.window_size *= 2;
        self.next_window = self.counter + self.window_size;
        if self.next_window != last {
            let boundary = self.next_window + 2 * self.window_size;
            if boundary >= self.num_warmup - self.term_buffer {
                self.next_window = last;
            }
        }
    }

    /// Feeds one warmup position. Returns a new inverse metric when a slow
    /// window closes.
    pub fn learn(&mut self, est: &mut Welford, q: &[f64]) -> Option<Vec<f64>> {
        if !self.enabled {
            return None;
        }
        if self.in_window() {
            est.add(q);
        }
        if self.window_end() {
            self.advance_window();
            let n = est.count() as f64;
            let var = est
                .variance()
                .into_iter()
                .map(|v| (n / (n + 5.0)) * v + 1e-3 * (5.0 / (n + 5.0)))
                .collect();
            est.restart();
            self.counter += 1;
            return Some(var);
        }
        self.counter += 1;
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window_ends(num_warmup: usize) -> Vec<usize> {
        let mut s = WindowSchedule::new(num_warmup);
        let mut est = Welford::new(1);
        (0..num_warmup)
            .filter(|&i| s.learn(&mut est, &[i as f64]).is_some())
            .collect()
    }

    #[test]
    fn default_schedule_windows() {
        // 75 + 25, 50, 100, 200, then the rest up to the terminal buffer
        assert_eq!(window_ends(1000), vec![99, 149, 249, 449, 949]);
    }

    #[test]
    fn short_warmup_uses_proportional_buffers() {
        let ends = window_ends(100);
        assert_eq!(ends, vec![89]);
    }

    #[test]
    fn welford_matches_two_pass() {
        let xs = [1.0, 4.0, 2.0, 8.0, 5.0];
        let mut w = Welford::new(1);
        for x in xs {
            w.add(&[x]);
        }
        let m = xs.iter().sum::<f64>() / 5.0;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 4.0;
        assert!((w.variance()[0] - v).abs() < 1e-12);
    }

    #[test]
    fn dual_averaging_shrinks_step_on_low_acceptance() {
        let mut da = DualAveraging::new(0.8);
        let mut eps = 1.0;
        for _ in 0..50 {
            eps = da.learn(0.1);
        }
        assert!(eps < 1.0);
        let mut da = DualAveraging::new(0.8);
        for _ in 0..50 {
            eps = da.learn(1.0);
        }
        assert!(eps > 1.0);
    }
}
