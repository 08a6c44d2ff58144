//! Bessel functions J_a, Y_a of real order.
//!
//! Two independent evaluators live here on purpose. `bessel_jy` is the working
//! evaluator (power series for small argument, Hankel asymptotics for large);
//! `bessel_jy_integral` evaluates the classical integral representations by
//! quadrature and exists so tests can cross-check the working evaluator against
//! arithmetic that shares nothing with it.
//!
//! Intended range: order |a| <= 5, argument 0 < x <= ~1e4, target accuracy
//! ~1e-10 relative (series/asymptotics) away from zeros of the functions.

use statrs::function::gamma::ln_gamma;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// J_a(x) and Y_a(x) for real order `a > -2` and `x > 0`.
pub fn bessel_jy(a: f64, x: f64) -> (f64, f64) {
    assert!(x > 0.0, "bessel_jy needs x > 0, got {x}");
    assert!(a > -2.0 && a.abs() <= 6.0, "order {a} outside supported range");
    let cutoff = 14.0 + 2.0 * (a.abs() - 3.0).max(0.0);
    if x >= cutoff {
        return hankel_asymptotic(a, x);
    }
    let n = a.round();
    if (a - n).abs() < 1e-9 {
        let n = n as i64;
        return integer_jy_series(n, x);
    }
    let ja = j_series(a, x);
    let jma = j_series(-a, x);
    let (s, c) = (a * std::f64::consts::PI).sin_cos();
    let ya = (ja * c - jma) / s;
    (ja, ya)
}

/// J, Y and their x-derivatives, via `C_a' = C_{a-1} - (a/x) C_a`.
pub fn bessel_jy_with_deriv(a: f64, x: f64) -> (f64, f64, f64, f64) {
    let (j, y) = bessel_jy(a, x);
    let (jm, ym) = bessel_jy(a - 1.0, x);
    (j, y, jm - a / x * j, ym - a / x * y)
}

/// Power series for J_a, valid for any real non-integer order > -2 (and any
/// non-negative integer order).
fn j_series(a: f64, x: f64) -> f64 {
    let half = 0.5 * x;
    // First term (x/2)^a / Gamma(a+1); reflection handles a+1 <= 0.
    let term0 = if a + 1.0 > 0.0 {
        (a * half.ln() - ln_gamma(a + 1.0)).exp()
    } else {
        // 1/Gamma(a+1) = Gamma(-a) sin(pi (a+1)) / pi for non-integer a.
        let g = ln_gamma(-a).exp();
        (a * half.ln()).exp() * g * (std::f64::consts::PI * (a + 1.0)).sin()
            / std::f64::consts::PI
    };
    let q = half * half;
    let mut term = term0;
    let mut sum = term0;
    for k in 0..400 {
        let kf = k as f64;
        term *= -q / ((kf + 1.0) * (a + kf + 1.0));
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-290) {
            break;
        }
    }
    sum
}

/// J_n and Y_n for integer order by series (A&S 9.1.10 / 9.1.11 shape).
fn integer_jy_series(n: i64, x: f64) -> (f64, f64) {
    if n < 0 {
        let (j, y) = integer_jy_series(-n, x);
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        return (sign * j, sign * y);
    }
    let n_us = n as usize;
    let j = j_series(n as f64, x);
    let half = 0.5 * x;
    let q = half * half;
    let pi = std::f64::consts::PI;

    // Finite part: - (1/pi) (x/2)^{-n} sum_{k<n} (n-k-1)!/k! q^k.
    let mut finite = 0.0;
    if n_us > 0 {
        let mut term = factorial(n_us - 1); // k = 0
        let mut qk = 1.0;
        for k in 0..n_us {
            if k > 0 {
                // (n-k-1)!/k! from (n-k)!/ (k-1)!: divide by (n-k) and k.
                term /= (n_us - k) as f64 * k as f64;
                qk *= q;
            }
            finite += term * qk;
        }
        finite *= -half.powi(-(n as i32)) / pi;
    }

    // Log part plus the psi series.
    let log_part = 2.0 / pi * half.ln() * j;
    let mut psi_k = -EULER_GAMMA; // psi(1)
    let mut psi_nk = harmonic(n_us) - EULER_GAMMA; // psi(n+1)
    let mut coeff = (-(ln_gamma(n as f64 + 1.0))).exp(); // 1/(0! n!)
    let mut qk = 1.0;
    let mut series = 0.0;
    let mut sign = 1.0;
    for k in 0..400 {
        let term = sign * (psi_k + psi_nk) * coeff * qk;
        series += term;
        if k > 2 && term.abs() < 1e-17 * series.abs().max(1e-290) {
            break;
        }
        let kf = (k + 1) as f64;
        psi_k += 1.0 / kf;
        psi_nk += 1.0 / (n as f64 + kf);
        coeff /= kf * (n as f64 + kf);
        qk *= q;
        sign = -sign;
    }
    let psi_part = -half.powi(n as i32) / pi * series;
    (j, finite + log_part + psi_part)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn harmonic(n: usize) -> f64 {
    (1..=n).map(|k| 1.0 / k as f64).sum()
}

/// Hankel large-argument expansion, truncated at the smallest term.
fn hankel_asymptotic(a: f64, x: f64) -> (f64, f64) {
    let mu = 4.0 * a * a;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..24 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        term *= (mu - odd * odd) / (kf * 8.0 * x);
        if term.abs() >= prev {
            break; // asymptotic series started diverging
        }
        prev = term.abs();
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
    }
    let omega = x - (0.5 * a + 0.25) * std::f64::consts::PI;
    let (s, c) = omega.sin_cos();
    let amp = (2.0 / (std::f64::consts::PI * x)).sqrt();
    (amp * (p * c - q * s), amp * (p * s + q * c))
}

/// Independent evaluator: classical integral representations by Simpson
/// quadrature. Slow but shares no arithmetic with `bessel_jy`. Accuracy is
/// ~1e-9 absolute for 0.5 <= x <= 300, |a| <= 3.
pub fn bessel_jy_integral(a: f64, x: f64) -> (f64, f64) {
    assert!(x > 0.0);
    let pi = std::f64::consts::PI;

    // Oscillatory parts over [0, pi].
    let n_osc = 40_000;
    let j_osc = simpson(0.0, pi, n_osc, |th| (x * th.sin() - a * th).cos()) / pi;
    let y_osc = simpson(0.0, pi, n_osc, |th| (x * th.sin() - a * th).sin()) / pi;

    // Monotone tails over [0, U] with x sinh U ~ 46 (+ order growth slack).
    let u_max = ((46.0 + 5.0 * a.abs()) / x).asinh();
    let n_tail = 8_000;
    let j_tail = simpson(0.0, u_max, n_tail, |u| (-x * u.sinh() - a * u).exp()) / pi;
    let y_tail = simpson(0.0, u_max, n_tail, |u| {
        ((a * u).exp() + (-a * u).exp() * (a * pi).cos()) * (-x * u.sinh()).exp()
    }) / pi;

    ((a * pi).sin().mul_add(-j_tail, j_osc), y_osc - y_tail)
}

fn simpson(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    debug_assert!(n % 2 == 0);
    let h = (hi - lo) / n as f64;
    let mut sum = f(lo) + f(hi);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(lo + k as f64 * h);
    }
    sum * h / 3.0
}
