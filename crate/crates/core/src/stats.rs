//! Empirical distribution tools: ECDFs, DKW bands, two-sample tests and
//! order statistics used by the Monte Carlo checks.

/// Empirical CDF over a sample where some observations may be right-censored.
///
/// Censored observations count in the denominator but never in the numerator,
/// which is exact for evaluation points below the censoring cap.
#[derive(Debug, Clone)]
pub struct Ecdf {
    sorted: Vec<f64>,
    total: usize,
}

impl Ecdf {
    pub fn new(samples: &[f64]) -> Self {
        Self::with_censored(samples.to_vec(), samples.len())
    }

    /// `observed` are the uncensored values; `total` includes censored ones.
    pub fn with_censored(mut observed: Vec<f64>, total: usize) -> Self {
        assert!(observed.len() <= total);
        observed.sort_by(f64::total_cmp);
        Ecdf {
            sorted: observed,
            total,
        }
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Fraction of observations `<= x`.
    pub fn eval(&self, x: f64) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let count = self.sorted.partition_point(|&v| v <= x);
        count as f64 / self.total as f64
    }

    /// Largest `|ecdf(t) - cdf(t)|` over the supplied evaluation points.
    pub fn sup_distance_on<F: Fn(f64) -> f64>(&self, points: &[f64], cdf: F) -> f64 {
        points
            .iter()
            .map(|&t| (self.eval(t) - cdf(t)).abs())
            .fold(0.0, f64::max)
    }
}

/// Half-width of the Dvoretzky–Kiefer–Wolfowitz band at confidence `1 - alpha`.
pub fn dkw_epsilon(n: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt()
}

/// Two-sample Kolmogorov–Smirnov statistic `sup |F_a - F_b|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        let x = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= x {
            i += 1;
        }
        while j < ys.len() && ys[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Asymptotic critical value of the two-sample KS statistic at level `alpha`.
pub fn ks_critical_value(n: usize, m: usize, alpha: f64) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Linearly interpolated sample quantile (Hyndman–Fan type 7).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Median and interquartile range of a sample.
pub fn median_iqr(values: &[f64]) -> (f64, f64) {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    (quantile(&v, 0.5), quantile(&v, 0.75) - quantile(&v, 0.25))
}

/// Pooled two-proportion z statistic.
pub fn two_proportion_z(x1: u64, n1: u64, x2: u64, n2: u64) -> f64 {
    let p1 = x1 as f64 / n1 as f64;
    let p2 = x2 as f64 / n2 as f64;
    let pooled = (x1 + x2) as f64 / (n1 + n2) as f64;
    let se = (pooled * (1.0 - pooled) * (1.0 / n1 as f64 + 1.0 / n2 as f64)).sqrt();
    if se == 0.0 {
        return 0.0;
    }
    (p1 - p2) / se
}

/// Two-sided standard normal critical value at the 1% level.
pub const Z_CRITICAL_1PCT: f64 = 2.575_829_303_548_901;
