//! Density evolution over the T-MPR channel and sum-rate bounds.
//!
//! In the large-frame limit, the probability p that an edge of the user/slot
//! graph hangs off an unresolved slot evolves as
//!
//! ```text
//! p' = 1 - exp(-G Λ'(p)) Σ_{k=0}^{T-1} (G Λ'(p))^k / k!
//! ```
//!
//! i.e. p' = Pr(Poisson(G Λ'(p)) >= T). The load threshold G* is the largest
//! load at which the iteration driven from p = 1 converges to zero. The
//! achievability bound ties G* to the sum rate through the codebook exponent
//! ε (slot size m = (1/ε) log2 K), and the converse bounds come from a
//! counting argument on the number of usable equations per slot.

use crate::encoding::IrsaDistribution;
use crate::{Error, Result};

/// Above this Poisson mean the tail sum is accumulated in log space.
const POISSON_LOG_SPACE_CUTOFF: f64 = 30.0;

/// Density-evolution instance: distribution, MPR capability and load, plus
/// the convergence policy that makes the asymptotic definition computable.
#[derive(Debug, Clone)]
pub struct DeConfig {
    pub dist: IrsaDistribution,
    pub t: usize,
    pub g: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl DeConfig {
    pub const DEFAULT_MAX_ITER: usize = 100_000;
    pub const DEFAULT_TOL: f64 = 1e-8;

    pub fn new(dist: IrsaDistribution, t: usize, g: f64) -> Result<DeConfig> {
        if t == 0 {
            return Err(Error::InvalidParameter("T must be at least 1".into()));
        }
        if g.is_nan() || g <= 0.0 || !g.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "load G={g} must be positive"
            )));
        }
        Ok(DeConfig {
            dist,
            t,
            g,
            max_iter: Self::DEFAULT_MAX_ITER,
            tol: Self::DEFAULT_TOL,
        })
    }
}

/// Result of running the recursion to convergence or exhaustion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeOutcome {
    pub p_final: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Pr(Poisson(x) < t), accumulated in log space for large x.
fn poisson_cdf_below(t: usize, x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    if x <= POISSON_LOG_SPACE_CUTOFF {
        let mut term = (-x).exp();
        let mut sum = 0.0;
        for k in 0..t {
            if k > 0 {
                term *= x / k as f64;
            }
            sum += term;
        }
        sum.min(1.0)
    } else {
        let ln_x = x.ln();
        let mut ln_fact = 0.0;
        let mut max_log = f64::NEG_INFINITY;
        let mut logs = Vec::with_capacity(t);
        for k in 0..t {
            if k > 0 {
                ln_fact += (k as f64).ln();
            }
            let l = -x + k as f64 * ln_x - ln_fact;
            max_log = max_log.max(l);
            logs.push(l);
        }
        if max_log == f64::NEG_INFINITY {
            return 0.0;
        }
        let sum: f64 = logs.iter().map(|&l| (l - max_log).exp()).sum();
        (max_log + sum.ln()).exp().min(1.0)
    }
}

/// One density-evolution update, clamped to [0, 1] against rounding.
pub fn de_step(p: f64, cfg: &DeConfig) -> f64 {
    let x = cfg.g * cfg.dist.derivative_at(p);
    (1.0 - poisson_cdf_below(cfg.t, x)).clamp(0.0, 1.0)
}

/// Iterate from p = 1 until p drops below `tol` (converged), the update
/// stalls at a positive value, or `max_iter` is exhausted.
pub fn de_run(cfg: &DeConfig) -> DeOutcome {
    let stall_tol = cfg.tol * 1e-3;
    let mut p = 1.0f64;
    for iteration in 1..=cfg.max_iter {
        let next = de_step(p, cfg);
        if next < cfg.tol {
            return DeOutcome {
                p_final: next,
                converged: true,
                iterations: iteration,
            };
        }
        if (p - next).abs() < stall_tol {
            return DeOutcome {
                p_final: next,
                converged: false,
                iterations: iteration,
            };
        }
        p = next;
    }
    DeOutcome {
        p_final: p,
        converged: false,
        iterations: cfg.max_iter,
    }
}

/// Load threshold G*(Λ, T): bisection over (0, T] on the convergence
/// predicate, to bracket width `tol_g` (at most 60 halvings).
pub fn load_threshold(dist: &IrsaDistribution, t: usize, tol_g: f64) -> Result<f64> {
    if tol_g.is_nan() || tol_g <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "tol_g={tol_g} must be positive"
        )));
    }
    let converges = |g: f64| {
        let cfg = DeConfig::new(dist.clone(), t, g).expect("positive load");
        de_run(&cfg).converged
    };
    // Counting arguments cap the threshold at T; monotonicity in G is a
    // runtime-checked assumption, probed here at a near-zero load.
    let mut hi = t as f64;
    if converges(hi) {
        return Ok(hi);
    }
    let mut lo = hi * 1e-9;
    if !converges(lo) {
        return Err(Error::Numerical(
            "density evolution does not converge at near-zero load; bracket inverted".into(),
        ));
    }
    for _ in 0..60 {
        if hi - lo <= tol_g {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if converges(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Asymptotic packet loss rate Σ_d Λ_d p^d at the fixed point reached from
/// load G (a user with d replicas is lost with probability p^d).
pub fn asymptotic_plr(dist: &IrsaDistribution, t: usize, g: f64) -> Result<f64> {
    let cfg = DeConfig::new(dist.clone(), t, g)?;
    let outcome = de_run(&cfg);
    Ok(dist.pgf_at(outcome.p_final))
}

/// BPR encoder rate with the extra symbol: r = log2(M/K) / (1 + mT).
pub fn bpr_rate(m: usize, t: usize, m_cols: usize, k: usize) -> f64 {
    ((m_cols as f64) / (k as f64)).log2() / (1.0 + (m * t) as f64)
}

/// Exact finite-K average sum rate at load G for codebook exponent ε:
/// R_sum = G / (1 + (T/ε) log2 K) · log2((K^(1/ε) - 1) / K).
pub fn avg_sum_rate(g: f64, k: u64, eps: f64, t: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("K={k} must be at least 2")));
    }
    check_eps(eps)?;
    let log2_k = (k as f64).log2();
    let a = log2_k / eps; // log2 of K^(1/ε)
                          // For large a, log2(2^a - 1) = a to double precision.
    let log2_num = if a > 100.0 {
        a
    } else {
        (a.exp2() - 1.0).log2()
    };
    Ok(g / (1.0 + (t as f64 / eps) * log2_k) * (log2_num - log2_k))
}

/// Achievable sum rate of IRSA-BPR: (1 - ε)/T · G*(Λ, T).
pub fn achievable_sum_rate(dist: &IrsaDistribution, t: usize, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    let g_star = load_threshold(dist, t, 1e-6)?;
    Ok((1.0 - eps) / t as f64 * g_star)
}

/// Access schemes covered by the converse bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Receiver-scheduled: one codeword block per contending user, placed to
    /// maximize the sum rate.
    Coordinated,
    /// Everyone uses IRSA-BPR.
    Irsa,
    /// A fraction ν of users served coordinated in γ·N_s reserved slots, the
    /// rest via IRSA-BPR.
    Mixed,
}

impl Scheme {
    pub fn parse(s: &str) -> Result<Scheme> {
        match s.to_ascii_lowercase().as_str() {
            "coordinated" => Ok(Scheme::Coordinated),
            "irsa" => Ok(Scheme::Irsa),
            "mixed" => Ok(Scheme::Mixed),
            other => Err(Error::InvalidParameter(format!(
                "unknown scheme '{other}', expected coordinated|irsa|mixed"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Coordinated => "coordinated",
            Scheme::Irsa => "irsa",
            Scheme::Mixed => "mixed",
        }
    }
}

/// Parameters of the converse computation.
#[derive(Debug, Clone, Copy)]
pub struct BoundConfig {
    pub eps: f64,
    pub t: usize,
    pub eta: f64,
    pub nu: f64,
    pub gamma: f64,
}

impl BoundConfig {
    pub fn new(eps: f64, t: usize, eta: f64, nu: f64, gamma: f64) -> Result<BoundConfig> {
        check_eps(eps)?;
        if t == 0 {
            return Err(Error::InvalidParameter("T must be at least 1".into()));
        }
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "efficiency eta={eta} not in (0, 1]"
            )));
        }
        for (name, v) in [("nu", nu), ("gamma", gamma)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!("{name}={v} not in [0, 1]")));
            }
        }
        Ok(BoundConfig {
            eps,
            t,
            eta,
            nu,
            gamma,
        })
    }
}

/// Converse load limit with a count of the sign changes seen on the scan
/// (more than one means the self-consistency region is not an interval and
/// the largest crossing was used).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConverseOutcome {
    pub g: f64,
    pub sign_changes: usize,
}

/// Right-hand side of the self-consistency inequality
/// G <= T - (1-β) e^(-x) Σ_{t<T} ((T-t)/t!) x^t with x = G(1-ν)/(η(1-β))
/// and β = min{νG/T, γ}; terms are evaluated in log space.
fn converse_rhs(g: f64, t: usize, eta: f64, nu: f64, gamma: f64) -> f64 {
    let t_f = t as f64;
    let beta = (nu * g / t_f).min(gamma);
    let one_minus_beta = 1.0 - beta;
    if one_minus_beta <= 0.0 {
        return t_f;
    }
    let x = g * (1.0 - nu) / (eta * one_minus_beta);
    let mut correction = 0.0;
    if x <= POISSON_LOG_SPACE_CUTOFF {
        let mut poisson = (-x).exp();
        for k in 0..t {
            if k > 0 {
                poisson *= x / k as f64;
            }
            correction += (t - k) as f64 * poisson;
        }
    } else {
        let ln_x = x.ln();
        let mut ln_fact = 0.0;
        for k in 0..t {
            if k > 0 {
                ln_fact += (k as f64).ln();
            }
            let ln_term = ((t - k) as f64).ln() - x + k as f64 * ln_x - ln_fact;
            correction += ln_term.exp();
        }
    }
    t_f - one_minus_beta * correction
}

/// Converse load 𝔾 for the given scheme. Coordinated access attains T
/// exactly; the other schemes bisect on the largest sign change of
/// RHS(G) - G over a 10^4-point scan of (0, T].
pub fn converse_g(
    scheme: Scheme,
    eta: f64,
    t: usize,
    nu: f64,
    gamma: f64,
    tol: f64,
) -> Result<ConverseOutcome> {
    if t == 0 {
        return Err(Error::InvalidParameter("T must be at least 1".into()));
    }
    let (nu, gamma) = match scheme {
        Scheme::Coordinated => {
            return Ok(ConverseOutcome {
                g: t as f64,
                sign_changes: 0,
            })
        }
        Scheme::Irsa => (0.0, 0.0),
        Scheme::Mixed => (nu, gamma),
    };
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "efficiency eta={eta} not in (0, 1]"
        )));
    }
    let f = |g: f64| converse_rhs(g, t, eta, nu, gamma) - g;
    const SCAN_POINTS: usize = 10_000;
    let t_f = t as f64;
    let step = t_f / SCAN_POINTS as f64;
    let mut sign_changes = 0usize;
    let mut bracket: Option<(f64, f64)> = None;
    let mut prev_g = step;
    let mut prev_f = f(prev_g);
    for i in 2..=SCAN_POINTS {
        let g = step * i as f64;
        let fg = f(g);
        if (prev_f > 0.0) != (fg > 0.0) {
            sign_changes += 1;
            bracket = Some((prev_g, g));
        }
        prev_g = g;
        prev_f = fg;
    }
    let (mut lo, mut hi) = bracket.ok_or_else(|| {
        Error::Numerical(format!(
            "no sign change of the self-consistency gap on (0, {t_f}]"
        ))
    })?;
    let lo_positive = f(lo) > 0.0;
    for _ in 0..60 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ConverseOutcome {
        g: 0.5 * (lo + hi),
        sign_changes,
    })
}

/// Converse sum-rate bound: R_sum <= (1 - ε)/T · 𝔾.
pub fn converse_sum_rate(g_converse: f64, eps: f64, t: usize) -> f64 {
    (1.0 - eps) / t as f64 * g_converse
}

/// Smallest integer slot exponent m with m >= (1/ε) log2 K, together with
/// the exponent ε' = log2(K)/m it actually realizes.
pub fn codebook_exponent(k: usize, eps: f64) -> Result<(usize, f64)> {
    check_eps(eps)?;
    if k < 2 {
        return Err(Error::InvalidParameter(format!("K={k} must be at least 2")));
    }
    let log2_k = (k as f64).log2();
    let m = (log2_k / eps).ceil() as usize;
    Ok((m, log2_k / m as f64))
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps={eps} not in (0, 1)")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x2() -> IrsaDistribution {
        IrsaDistribution::single(2).unwrap()
    }

    fn x3() -> IrsaDistribution {
        IrsaDistribution::single(3).unwrap()
    }

    #[test]
    fn de_step_fixed_point_at_zero() {
        let cfg = DeConfig::new(x2(), 1, 0.7).unwrap();
        assert_eq!(de_step(0.0, &cfg), 0.0);
    }

    #[test]
    fn de_step_from_one_matches_starting_point_formula() {
        let dist = IrsaDistribution::new(&[(2, 0.5), (3, 0.5)]).unwrap();
        for (t, g) in [(1usize, 0.6f64), (2, 0.9), (4, 2.5)] {
            let cfg = DeConfig::new(dist.clone(), t, g).unwrap();
            let x = g / dist.efficiency();
            let mut tail = 0.0;
            let mut term = (-x).exp();
            for k in 0..t {
                if k > 0 {
                    term *= x / k as f64;
                }
                tail += term;
            }
            assert!((de_step(1.0, &cfg) - (1.0 - tail)).abs() < 1e-14);
        }
    }

    #[test]
    fn de_step_direct_value() {
        let cfg = DeConfig::new(x2(), 1, 0.4).unwrap();
        let expected = 1.0 - (-0.4f64).exp();
        assert!((de_step(0.5, &cfg) - expected).abs() < 1e-14);
        assert!((expected - 0.3297).abs() < 1e-4);
    }

    #[test]
    fn de_run_convergence_split() {
        let below = DeConfig::new(x2(), 1, 0.4).unwrap();
        let run = de_run(&below);
        assert!(run.converged);
        assert!(run.p_final < below.tol);

        let above = DeConfig::new(x2(), 1, 0.6).unwrap();
        let run = de_run(&above);
        assert!(!run.converged);
        assert!(run.p_final > 0.25);

        let tiny = DeConfig::new(x2(), 1, 1e-9).unwrap();
        let run = de_run(&tiny);
        assert!(run.converged);
        assert!(run.iterations <= 2);
    }

    #[test]
    fn threshold_degree_two_is_half() {
        let g_star = load_threshold(&x2(), 1, 1e-4).unwrap();
        assert!((g_star - 0.5).abs() < 1e-3, "G* = {g_star}");
    }

    #[test]
    fn threshold_degree_three() {
        let g_star = load_threshold(&x3(), 1, 1e-4).unwrap();
        assert!((g_star - 0.818).abs() < 5e-3, "G* = {g_star}");
    }

    #[test]
    fn threshold_capped_by_t() {
        for t in 1..=4 {
            for dist in [x2(), x3()] {
                let g_star = load_threshold(&dist, t, 1e-3).unwrap();
                assert!(g_star <= t as f64 + 1e-12);
            }
        }
    }

    #[test]
    fn de_step_monotone_in_p_and_g() {
        let dist = IrsaDistribution::new(&[(2, 0.25), (3, 0.25), (8, 0.5)]).unwrap();
        for t in [1usize, 3] {
            for gi in 1..=8 {
                let g = 0.35 * gi as f64;
                let cfg = DeConfig::new(dist.clone(), t, g).unwrap();
                let mut prev = -1.0;
                for pi in 0..=40 {
                    let p = pi as f64 / 40.0;
                    let v = de_step(p, &cfg);
                    assert!(v >= prev - 1e-12, "not monotone in p at G={g}, p={p}");
                    prev = v;
                }
            }
            for pi in 1..=10 {
                let p = pi as f64 / 10.0;
                let mut prev = -1.0;
                for gi in 1..=30 {
                    let cfg = DeConfig::new(dist.clone(), t, 0.1 * gi as f64).unwrap();
                    let v = de_step(p, &cfg);
                    assert!(v >= prev - 1e-12, "not monotone in G at p={p}");
                    prev = v;
                }
            }
        }
    }

    #[test]
    fn plr_below_threshold_vanishes() {
        let plr = asymptotic_plr(&x3(), 1, 0.6).unwrap();
        assert!(plr < 1e-12);
        let plr = asymptotic_plr(&x3(), 1, 1.0).unwrap();
        assert!(plr > 0.5);
    }

    #[test]
    fn pgf_examples() {
        assert!((x2().pgf_at(0.5) - 0.25).abs() < 1e-15);
        let dist = IrsaDistribution::new(&[(2, 0.5), (3, 0.5)]).unwrap();
        assert!((dist.pgf_at(0.1) - 0.0055).abs() < 1e-15);
    }

    #[test]
    fn bpr_rate_cases() {
        assert!((bpr_rate(4, 2, 15, 5) - 3f64.log2() / 9.0).abs() < 1e-15);
        assert!((bpr_rate(4, 2, 15, 5) - 0.1761).abs() < 1e-4);
        assert!((bpr_rate(1, 1, 4, 2) - 0.5).abs() < 1e-15);
        assert_eq!(bpr_rate(4, 2, 5, 5), 0.0);
    }

    #[test]
    fn avg_sum_rate_values() {
        let r = avg_sum_rate(1.0, 1 << 10, 0.5, 1).unwrap();
        assert!((r - 0.4762).abs() < 1e-4, "R = {r}");
        assert_eq!(avg_sum_rate(0.0, 1 << 10, 0.5, 1).unwrap(), 0.0);
        // The normalized rate climbs toward (1-ε)/T as K grows.
        let limit = 0.5;
        let mut prev_gap = f64::INFINITY;
        for exp in [10u32, 15, 20] {
            let r = avg_sum_rate(1.0, 1u64 << exp, 0.5, 1).unwrap();
            let gap = (limit - r) / limit;
            assert!(gap > 0.0 && gap < prev_gap);
            prev_gap = gap;
        }
        assert!(avg_sum_rate(1.0, 1, 0.5, 1).is_err());
        assert!(avg_sum_rate(1.0, 16, 1.0, 1).is_err());
    }

    #[test]
    fn achievable_bound_values() {
        let near_one = achievable_sum_rate(&x3(), 1, 0.999999).unwrap();
        assert!(near_one < 1e-5);
        let r = achievable_sum_rate(&x3(), 1, 0.5).unwrap();
        assert!((r - 0.409).abs() < 3e-3, "bound = {r}");
        let r25 = achievable_sum_rate(&x3(), 1, 0.75).unwrap();
        assert!((r25 * 2.0 - r).abs() < 1e-6);
    }

    #[test]
    fn converse_coordinated_is_t() {
        for t in 1..=16 {
            let out = converse_g(Scheme::Coordinated, 0.5, t, 0.0, 0.0, 1e-9).unwrap();
            assert_eq!(out.g, t as f64);
            assert!((converse_sum_rate(out.g, 0.99, t) - 0.01).abs() < 1e-12);
        }
    }

    #[test]
    fn converse_irsa_half_efficiency() {
        let out = converse_g(Scheme::Irsa, 0.5, 1, 0.0, 0.0, 1e-6).unwrap();
        assert!((out.g - 0.797).abs() < 1e-3, "G = {}", out.g);
        assert_eq!(out.sign_changes, 1);
        let bound = converse_sum_rate(out.g, 0.99, 1);
        assert!((bound - 0.00797).abs() < 5e-5);
    }

    #[test]
    fn converse_mixed_reduces_to_irsa() {
        for t in [1usize, 3, 7] {
            for eta in [0.5, 1.0 / 3.0] {
                let irsa = converse_g(Scheme::Irsa, eta, t, 0.0, 0.0, 1e-9).unwrap();
                let mixed = converse_g(Scheme::Mixed, eta, t, 0.0, 0.0, 1e-9).unwrap();
                assert!((irsa.g - mixed.g).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn achievability_below_converse_matched_eta() {
        for (dist, t) in [(x2(), 1usize), (x3(), 1), (x3(), 2)] {
            let g_star = load_threshold(&dist, t, 1e-5).unwrap();
            let conv = converse_g(Scheme::Irsa, dist.efficiency(), t, 0.0, 0.0, 1e-9).unwrap();
            assert!(
                g_star <= conv.g + 1e-4,
                "G* = {g_star} exceeds converse {} for T={t}",
                conv.g
            );
        }
    }

    #[test]
    fn converse_sum_rate_monotone_in_eps() {
        let g = 0.8;
        let mut prev = f64::INFINITY;
        for eps in [0.1, 0.5, 0.9, 0.99] {
            let b = converse_sum_rate(g, eps, 2);
            assert!(b <= prev);
            prev = b;
        }
    }

    #[test]
    fn codebook_exponent_rounds_up() {
        let (m, realized) = codebook_exponent(51, 0.75).unwrap();
        // log2(51) = 5.672...: m = ceil(5.672/0.75) = 8, ε' = 5.672/8.
        assert_eq!(m, 8);
        assert!((realized - 51f64.log2() / 8.0).abs() < 1e-15);
        assert!(realized <= 0.75);
    }
}
