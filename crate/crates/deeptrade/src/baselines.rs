//! ARIMA(p,d,q) fitting by conditional-sum-of-squares maximum likelihood,
//! AIC/BIC order search with a coefficient-significance screen, and rolling
//! one-step forecasts emitted as ordinary prediction records.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::market_data::{DateRange, PriceSeries};
use crate::predictor::PredictionRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArimaOrders {
    pub p: usize,
    pub d: usize,
    pub q: usize,
}

impl std::fmt::Display for ArimaOrders {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{})", self.p, self.d, self.q)
    }
}

/// A fitted model. Coefficient standard errors are ordered
/// `[intercept, ar..., ma...]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArimaModel {
    pub orders: ArimaOrders,
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub intercept: f64,
    /// Innovation variance (conditional ML estimate).
    pub sigma2: f64,
    pub log_likelihood: f64,
    pub aic: f64,
    pub bic: f64,
    pub coef_std_errors: Vec<f64>,
    /// Observations entering the conditional likelihood.
    pub n_effective: usize,
    pub stationary: bool,
    pub invertible: bool,
}

impl ArimaModel {
    /// z-statistics for `[intercept, ar..., ma...]`.
    pub fn z_statistics(&self) -> Vec<f64> {
        std::iter::once(self.intercept)
            .chain(self.ar.iter().copied())
            .chain(self.ma.iter().copied())
            .zip(self.coef_std_errors.iter())
            .map(|(c, se)| if *se > 0.0 { c / se } else { f64::NAN })
            .collect()
    }

    /// Whether every AR/MA coefficient is significant at the given level
    /// (the intercept is not screened). Models with no AR/MA terms pass.
    pub fn coefficients_significant(&self, level: f64) -> bool {
        let z_crit = Normal::new(0.0, 1.0)
            .expect("valid normal")
            .inverse_cdf(1.0 - level / 2.0);
        self.z_statistics()
            .iter()
            .skip(1)
            .all(|z| z.is_finite() && z.abs() > z_crit)
    }

    /// One-step forecast of the next level given the history `y`.
    pub fn forecast_next(&self, y: &[f64]) -> Result<f64> {
        let ArimaOrders { p, d, q } = self.orders;
        if y.len() < d + p + 1 {
            return Err(Error::InsufficientData(format!(
                "{} observations cannot support a {} forecast",
                y.len(),
                self.orders
            )));
        }
        let stages = difference_stages(y, d);
        let w = &stages[d];
        let e = css_residuals(w, p, self.intercept, &self.ar, &self.ma);
        let n = w.len();
        let mut w_next = self.intercept;
        for (i, phi) in self.ar.iter().enumerate() {
            w_next += phi * w[n - 1 - i];
        }
        for (j, theta) in self.ma.iter().enumerate() {
            if n >= j + 1 {
                w_next += theta * e[n - 1 - j];
            }
        }
        // Undo the differencing one stage at a time.
        let mut forecast = w_next;
        for stage in (0..d).rev() {
            forecast += stages[stage].last().expect("non-empty stage");
        }
        Ok(forecast)
    }
}

/// `d` successive differences; element 0 is the original series.
fn difference_stages(y: &[f64], d: usize) -> Vec<Vec<f64>> {
    let mut stages = vec![y.to_vec()];
    for _ in 0..d {
        let prev = stages.last().expect("at least the original");
        stages.push(prev.windows(2).map(|w| w[1] - w[0]).collect());
    }
    stages
}

/// The d-th difference of a series.
pub fn difference(y: &[f64], d: usize) -> Vec<f64> {
    difference_stages(y, d).pop().expect("stage d exists")
}

/// Conditional residuals: the first `p` observations condition the
/// recursion and pre-sample innovations are zero.
fn css_residuals(w: &[f64], p: usize, c: f64, ar: &[f64], ma: &[f64]) -> Vec<f64> {
    let n = w.len();
    let mut e = vec![0.0; n];
    for t in p..n {
        let mut pred = c;
        for (i, phi) in ar.iter().enumerate() {
            pred += phi * w[t - 1 - i];
        }
        for (j, theta) in ma.iter().enumerate() {
            if t >= p + j + 1 {
                pred += theta * e[t - 1 - j];
            }
        }
        e[t] = w[t] - pred;
    }
    e
}

fn css_sse(w: &[f64], p: usize, q: usize, params: &[f64]) -> f64 {
    let c = params[0];
    let ar = &params[1..1 + p];
    let ma = &params[1 + p..1 + p + q];
    let e = css_residuals(w, p, c, ar, ma);
    let sse: f64 = e[p..].iter().map(|v| v * v).sum();
    if sse.is_finite() {
        sse
    } else {
        f64::MAX
    }
}

/// Solves a small dense linear system by Gauss-Jordan with partial
/// pivoting. Returns None when singular.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[i][col]
                .abs()
                .partial_cmp(&a[j][col].abs())
                .expect("finite")
        })?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let diag = a[col][col];
        for j in col..n {
            a[col][j] /= diag;
        }
        b[col] /= diag;
        for row in 0..n {
            if row != col && a[row][col] != 0.0 {
                let factor = a[row][col];
                for j in col..n {
                    a[row][j] -= factor * a[col][j];
                }
                b[row] -= factor * b[col];
            }
        }
    }
    Some(b)
}

/// Inverse of a small symmetric positive-definite matrix via column solves.
fn invert_matrix(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut inv = vec![vec![0.0; n]; n];
    for col in 0..n {
        let mut unit = vec![0.0; n];
        unit[col] = 1.0;
        let x = solve_linear(a.to_vec(), unit)?;
        for row in 0..n {
            inv[row][col] = x[row];
        }
    }
    Some(inv)
}

/// Nelder-Mead simplex minimization (reflection 1, expansion 2,
/// contraction 0.5, shrink 0.5).
fn nelder_mead<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], max_evals: usize) -> (Vec<f64>, f64) {
    let m = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(m + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..m {
        let mut x = x0.to_vec();
        let step = 0.1 * x[i].abs().max(0.1);
        x[i] += step;
        let fx = f(&x);
        simplex.push((x, fx));
    }
    let mut evals = m + 1;

    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite objective"));
        let best = simplex[0].1;
        let worst = simplex[m].1;
        if (worst - best).abs() <= 1e-12 * (1.0 + best.abs()) {
            break;
        }

        let centroid: Vec<f64> = (0..m)
            .map(|j| simplex[..m].iter().map(|(x, _)| x[j]).sum::<f64>() / m as f64)
            .collect();
        let reflect: Vec<f64> = (0..m)
            .map(|j| centroid[j] + (centroid[j] - simplex[m].0[j]))
            .collect();
        let f_reflect = f(&reflect);
        evals += 1;

        if f_reflect < simplex[0].1 {
            let expand: Vec<f64> = (0..m)
                .map(|j| centroid[j] + 2.0 * (centroid[j] - simplex[m].0[j]))
                .collect();
            let f_expand = f(&expand);
            evals += 1;
            simplex[m] = if f_expand < f_reflect {
                (expand, f_expand)
            } else {
                (reflect, f_reflect)
            };
        } else if f_reflect < simplex[m - 1].1 {
            simplex[m] = (reflect, f_reflect);
        } else {
            let contract: Vec<f64> = (0..m)
                .map(|j| centroid[j] + 0.5 * (simplex[m].0[j] - centroid[j]))
                .collect();
            let f_contract = f(&contract);
            evals += 1;
            if f_contract < simplex[m].1 {
                simplex[m] = (contract, f_contract);
            } else {
                // shrink towards the best vertex
                let best_x = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    for j in 0..m {
                        vertex.0[j] = best_x[j] + 0.5 * (vertex.0[j] - best_x[j]);
                    }
                    vertex.1 = f(&vertex.0);
                    evals += 1;
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite objective"));
    simplex.swap_remove(0)
}

/// OLS of w_t on `[1, w_{t-1}..w_{t-p}]` for the starting point.
fn ols_ar_init(w: &[f64], p: usize) -> Vec<f64> {
    let n = w.len();
    let mean = w.iter().sum::<f64>() / n as f64;
    if p == 0 || n <= p + 2 {
        return vec![mean];
    }
    let m = p + 1;
    let mut xtx = vec![vec![0.0; m]; m];
    let mut xty = vec![0.0; m];
    for t in p..n {
        let mut row = Vec::with_capacity(m);
        row.push(1.0);
        for i in 0..p {
            row.push(w[t - 1 - i]);
        }
        for a in 0..m {
            for b in 0..m {
                xtx[a][b] += row[a] * row[b];
            }
            xty[a] += row[a] * w[t];
        }
    }
    solve_linear(xtx, xty).unwrap_or_else(|| {
        let mut fallback = vec![0.0; m];
        fallback[0] = mean;
        fallback
    })
}

/// Stationarity of an AR polynomial `1 - a_1 z - ... - a_p z^p` via the
/// inverse Levinson-Durbin recursion: stable exactly when every implied
/// partial autocorrelation has magnitude below one.
fn ar_coefficients_stationary(ar: &[f64]) -> bool {
    let mut a = ar.to_vec();
    while let Some(&kappa) = a.last() {
        if kappa.abs() >= 1.0 {
            return false;
        }
        let k = a.len();
        if k == 1 {
            break;
        }
        let denom = 1.0 - kappa * kappa;
        let prev: Vec<f64> = (0..k - 1)
            .map(|i| (a[i] + kappa * a[k - 2 - i]) / denom)
            .collect();
        a = prev;
    }
    true
}

/// Estimates ARMA(p,q) on the d-th difference by conditional sum of
/// squares, with coefficient standard errors from the numerical residual
/// Jacobian at the optimum.
pub fn fit_arima(y: &[f64], orders: ArimaOrders) -> Result<ArimaModel> {
    let ArimaOrders { p, d, q } = orders;
    if y.len() <= d {
        return Err(Error::InsufficientData(format!(
            "{} observations cannot be differenced {} times",
            y.len(),
            d
        )));
    }
    let w = difference(y, d);
    let n = w.len();
    let m = 1 + p + q;
    if n < p + 20 + 2 * m {
        return Err(Error::InsufficientData(format!(
            "{n} differenced observations are too few for ARIMA{orders}"
        )));
    }
    let n_eff = n - p;

    let mut init = ols_ar_init(&w, p);
    init.resize(m, 0.0);
    let objective = |x: &[f64]| css_sse(&w, p, q, x);
    let (params, sse) = if q == 0 && p == 0 {
        // intercept-only: closed form
        let c = w.iter().sum::<f64>() / n as f64;
        let sse = w.iter().map(|v| (v - c) * (v - c)).sum();
        (vec![c], sse)
    } else {
        nelder_mead(objective, &init, 800 * m)
    };
    if !sse.is_finite() || sse == f64::MAX {
        return Err(Error::Estimation(format!(
            "ARIMA{orders} conditional sum of squares did not converge"
        )));
    }

    let intercept = params[0];
    let ar = params[1..1 + p].to_vec();
    let ma = params[1 + p..1 + p + q].to_vec();
    let sigma2 = sse / n_eff as f64;
    if sigma2 <= 0.0 || !sigma2.is_finite() {
        return Err(Error::Estimation(format!(
            "ARIMA{orders} produced a degenerate innovation variance"
        )));
    }
    let log_likelihood =
        -0.5 * n_eff as f64 * ((2.0 * std::f64::consts::PI * sigma2).ln() + 1.0);
    // parameter count includes the variance
    let k = (m + 1) as f64;
    let aic = 2.0 * k - 2.0 * log_likelihood;
    let bic = k * (n_eff as f64).ln() - 2.0 * log_likelihood;

    // Standard errors: sigma2 * (J'J)^-1 with J the residual Jacobian.
    let coef_std_errors = {
        let h = 1e-6;
        let mut jacobian: Vec<Vec<f64>> = Vec::with_capacity(m); // column-major
        for idx in 0..m {
            let mut plus = params.clone();
            plus[idx] += h;
            let mut minus = params.clone();
            minus[idx] -= h;
            let e_plus = css_residuals(&w, p, plus[0], &plus[1..1 + p], &plus[1 + p..]);
            let e_minus = css_residuals(&w, p, minus[0], &minus[1..1 + p], &minus[1 + p..]);
            jacobian.push(
                e_plus[p..]
                    .iter()
                    .zip(e_minus[p..].iter())
                    .map(|(a, b)| (a - b) / (2.0 * h))
                    .collect(),
            );
        }
        let mut jtj = vec![vec![0.0; m]; m];
        for a in 0..m {
            for b in 0..m {
                jtj[a][b] = jacobian[a]
                    .iter()
                    .zip(jacobian[b].iter())
                    .map(|(x, y)| x * y)
                    .sum();
            }
        }
        match invert_matrix(&jtj) {
            Some(inv) => (0..m)
                .map(|i| {
                    let v = sigma2 * inv[i][i];
                    if v > 0.0 {
                        v.sqrt()
                    } else {
                        f64::INFINITY
                    }
                })
                .collect(),
            None => vec![f64::INFINITY; m],
        }
    };

    Ok(ArimaModel {
        orders,
        stationary: ar_coefficients_stationary(&ar),
        invertible: ar_coefficients_stationary(&ma.iter().map(|t| -t).collect::<Vec<_>>()),
        ar,
        ma,
        intercept,
        sigma2,
        log_likelihood,
        aic,
        bic,
        coef_std_errors,
        n_effective: n_eff,
    })
}

/// Order selection result.
#[derive(Debug, Clone)]
pub struct SelectedModel {
    pub model: ArimaModel,
    /// True when no candidate passed the 5% significance screen and the
    /// lowest-AIC model was returned instead.
    pub fallback_non_significant: bool,
}

/// Grid search over `0..=max_order` for each of p, d, q: candidates are
/// ranked by AIC (BIC breaking ties), and those whose AR/MA coefficients
/// are not all significant at 5% are discarded.
pub fn select_order(y: &[f64], max_order: usize) -> Result<SelectedModel> {
    let grid: Vec<ArimaOrders> = (0..=max_order)
        .flat_map(|p| {
            (0..=max_order).flat_map(move |d| {
                (0..=max_order).map(move |q| ArimaOrders { p, d, q })
            })
        })
        .collect();
    let mut fits: Vec<ArimaModel> = grid
        .par_iter()
        .filter_map(|&orders| fit_arima(y, orders).ok())
        .collect();
    if fits.is_empty() {
        return Err(Error::Estimation(
            "no ARIMA candidate could be estimated".into(),
        ));
    }
    fits.sort_by(|a, b| {
        a.aic
            .partial_cmp(&b.aic)
            .expect("finite aic")
            .then(a.bic.partial_cmp(&b.bic).expect("finite bic"))
            .then_with(|| {
                (a.orders.p + a.orders.q + a.orders.d)
                    .cmp(&(b.orders.p + b.orders.q + b.orders.d))
            })
            .then_with(|| {
                (a.orders.p, a.orders.d, a.orders.q).cmp(&(b.orders.p, b.orders.d, b.orders.q))
            })
    });
    match fits.iter().find(|m| m.coefficients_significant(0.05)) {
        Some(best) => Ok(SelectedModel {
            model: best.clone(),
            fallback_non_significant: false,
        }),
        None => Ok(SelectedModel {
            model: fits[0].clone(),
            fallback_non_significant: true,
        }),
    }
}

/// Rolling one-step forecasts over `range` with orders fixed in advance.
///
/// With `reestimate` the coefficients are re-fit each day on the growing
/// window back to the series start (mirroring the network's daily
/// updates); otherwise they are fit once on the data before the range. A
/// failed re-estimation carries the previous day's coefficients and is
/// reported in the returned warnings.
pub fn rolling_forecast(
    orders: ArimaOrders,
    series: &PriceSeries,
    range: &DateRange,
    reestimate: bool,
) -> Result<(Vec<PredictionRecord>, Vec<String>)> {
    let indices = series.indices_in(range);
    if indices.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no trading days in {} .. {}",
            range.start, range.end
        )));
    }
    let closes: Vec<f64> = series.bars.iter().map(|b| b.adj_close).collect();

    let mut warnings = Vec::new();
    let mut current = fit_arima(&closes[..indices[0]], orders)?;
    let mut records = Vec::with_capacity(indices.len());
    for &i in &indices {
        let history = &closes[..=i];
        if reestimate {
            match fit_arima(history, orders) {
                Ok(model) => current = model,
                Err(e) => warnings.push(format!(
                    "{}: re-estimation failed ({e}); carrying previous coefficients",
                    series.bars[i].date
                )),
            }
        }
        let y_hat_next = current.forecast_next(history)?;
        let bar = &series.bars[i];
        records.push(PredictionRecord {
            date: bar.date,
            y_t: bar.adj_close,
            y_hat_next,
            y_next: series.bars.get(i + 1).map(|b| b.adj_close),
            r_hat: y_hat_next / bar.adj_close - 1.0,
        });
    }
    Ok((records, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
        // Box-Muller
        let u1: f64 = rng.random::<f64>().max(1e-12);
        let u2: f64 = rng.random();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    fn simulate_arma(
        rng: &mut ChaCha8Rng,
        n: usize,
        c: f64,
        ar: &[f64],
        ma: &[f64],
        sigma: f64,
    ) -> Vec<f64> {
        let burn = 200;
        let mut w = Vec::with_capacity(n + burn);
        let mut eps: Vec<f64> = Vec::with_capacity(n + burn);
        for t in 0..n + burn {
            let e = sigma * gaussian(rng);
            let mut v = c + e;
            for (i, phi) in ar.iter().enumerate() {
                if t > i {
                    v += phi * w[t - 1 - i];
                }
            }
            for (j, theta) in ma.iter().enumerate() {
                if t > j {
                    v += theta * eps[t - 1 - j];
                }
            }
            w.push(v);
            eps.push(e);
        }
        w.split_off(burn)
    }

    #[test]
    fn white_noise_intercept_only_fit() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w: Vec<f64> = (0..1000).map(|_| 5.0 + gaussian(&mut rng)).collect();
        let model = fit_arima(&w, ArimaOrders { p: 0, d: 0, q: 0 }).unwrap();
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        let var = w.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / w.len() as f64;
        assert_relative_eq!(model.intercept, mean, max_relative = 1e-9);
        assert_relative_eq!(model.sigma2, var, max_relative = 1e-9);
    }

    #[test]
    fn ar2_coefficients_recovered_within_three_se() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let y = simulate_arma(&mut rng, 2000, 0.0, &[0.5, -0.3], &[], 1.0);
        let model = fit_arima(&y, ArimaOrders { p: 2, d: 0, q: 0 }).unwrap();
        for (idx, truth) in [0.5, -0.3].iter().enumerate() {
            let est = model.ar[idx];
            let se = model.coef_std_errors[1 + idx];
            assert!(
                (est - truth).abs() < 3.0 * se,
                "ar[{idx}] = {est} vs {truth} (se {se})"
            );
        }
        assert!(model.stationary);
    }

    #[test]
    fn ma1_coefficient_recovered_within_three_se() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let y = simulate_arma(&mut rng, 2000, 0.0, &[], &[0.4], 1.0);
        let model = fit_arima(&y, ArimaOrders { p: 0, d: 0, q: 1 }).unwrap();
        let est = model.ma[0];
        let se = model.coef_std_errors[1];
        assert!((est - 0.4).abs() < 3.0 * se, "ma = {est} (se {se})");
        assert!(model.invertible);
    }

    #[test]
    fn aic_bic_consistent_with_log_likelihood() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let y = simulate_arma(&mut rng, 400, 0.1, &[0.4], &[], 1.0);
        let model = fit_arima(&y, ArimaOrders { p: 1, d: 0, q: 0 }).unwrap();
        // k counts intercept, AR/MA terms and the variance
        let k = (1 + 1 + 1) as f64;
        assert_relative_eq!(model.aic, 2.0 * k - 2.0 * model.log_likelihood, max_relative = 1e-12);
        assert_relative_eq!(
            model.bic,
            k * (model.n_effective as f64).ln() - 2.0 * model.log_likelihood,
            max_relative = 1e-12
        );
    }

    #[test]
    fn differencing_round_trip_identity() {
        let y: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin() * 10.0 + 100.0).collect();
        for d in 0..=3usize {
            let w = difference(&y, d);
            assert_eq!(w.len(), y.len() - d);
            // cumulative-summing from the retained prefix reconstructs y
            let mut rebuilt = y[..d].to_vec();
            for (t, &dv) in w.iter().enumerate() {
                if d == 0 {
                    rebuilt.push(dv);
                    continue;
                }
                // undo d differences using the last d rebuilt values
                let mut v = dv;
                let stages = difference_stages(&rebuilt, d);
                for stage in (0..d).rev() {
                    v += stages[stage].last().unwrap();
                }
                let _ = t;
                rebuilt.push(v);
            }
            for (a, b) in y.iter().zip(rebuilt.iter()) {
                assert_relative_eq!(a, b, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn random_walk_forecast_identities() {
        let y: Vec<f64> = (0..60).map(|i| 100.0 + (i as f64 * 1.7).sin() * 4.0).collect();
        // (0,1,0) with zero intercept: naive persistence
        let naive = ArimaModel {
            orders: ArimaOrders { p: 0, d: 1, q: 0 },
            ar: vec![],
            ma: vec![],
            intercept: 0.0,
            sigma2: 1.0,
            log_likelihood: 0.0,
            aic: 0.0,
            bic: 0.0,
            coef_std_errors: vec![0.0],
            n_effective: 59,
            stationary: true,
            invertible: true,
        };
        assert_eq!(naive.forecast_next(&y).unwrap(), *y.last().unwrap());

        // (0,1,0) with drift mu: y_t + mu
        let drift = ArimaModel {
            intercept: 0.25,
            ..naive.clone()
        };
        assert_relative_eq!(
            drift.forecast_next(&y).unwrap(),
            y.last().unwrap() + 0.25,
            max_relative = 1e-12
        );
    }

    #[test]
    fn ar1_forecast_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let y = simulate_arma(&mut rng, 500, 0.3, &[0.6], &[], 1.0);
        let model = fit_arima(&y, ArimaOrders { p: 1, d: 0, q: 0 }).unwrap();
        let expected = model.intercept + model.ar[0] * y.last().unwrap();
        assert_relative_eq!(model.forecast_next(&y).unwrap(), expected, epsilon = 1e-10);
    }

    #[test]
    fn select_order_finds_differencing_on_integrated_data() {
        // Selection should recognize integration (d >= 1) and an AR term in
        // a clear majority of simulated ARIMA(1,1,0) paths.
        let mut hits = 0;
        for seed in 0..25 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let diffs = simulate_arma(&mut rng, 250, 0.05, &[0.6], &[], 1.0);
            let mut y = vec![100.0];
            for d in &diffs {
                y.push(y.last().unwrap() + d);
            }
            let selected = select_order(&y, 2).unwrap();
            if selected.model.orders.d >= 1 && selected.model.orders.p >= 1 {
                hits += 1;
            }
        }
        assert!(hits >= 20, "only {hits}/25 runs selected d>=1 and p>=1");
    }

    #[test]
    fn white_noise_selection_stays_near_trivial_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let y: Vec<f64> = (0..600).map(|_| gaussian(&mut rng)).collect();
        let trivial = fit_arima(&y, ArimaOrders { p: 0, d: 0, q: 0 }).unwrap();
        let selected = select_order(&y, 2).unwrap();
        assert!(
            trivial.aic - selected.model.aic <= 2.0,
            "selected {} AIC {} vs trivial AIC {}",
            selected.model.orders,
            selected.model.aic,
            trivial.aic
        );
    }

    #[test]
    fn rolling_forecast_emits_prediction_records() {
        use crate::market_data::Bar;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let diffs = simulate_arma(&mut rng, 160, 0.1, &[0.3], &[], 0.5);
        let mut prices = vec![100.0];
        for d in &diffs {
            prices.push((prices.last().unwrap() + d).max(1.0));
        }
        let bars: Vec<Bar> = prices
            .iter()
            .enumerate()
            .map(|(i, &p)| Bar {
                date: chrono::NaiveDate::from_ymd_opt(2019, 1, 1).unwrap()
                    + chrono::Days::new(i as u64),
                open: p,
                high: p,
                low: p,
                close: p,
                adj_close: p,
                volume: 0,
            })
            .collect();
        let series = PriceSeries::new(bars).unwrap();
        let range = DateRange::new(series.bars[120].date, series.bars[150].date).unwrap();
        let (records, warnings) = rolling_forecast(
            ArimaOrders { p: 1, d: 1, q: 0 },
            &series,
            &range,
            true,
        )
        .unwrap();
        assert_eq!(records.len(), 31);
        assert!(warnings.is_empty());
        // schema-compatible with the analytics suite
        let metrics = crate::analytics::error_metrics(&records).unwrap();
        assert!(metrics.mape_pct < 5.0);
        for r in &records {
            assert_relative_eq!(r.r_hat, r.y_hat_next / r.y_t - 1.0, max_relative = 1e-12);
        }
    }
}
