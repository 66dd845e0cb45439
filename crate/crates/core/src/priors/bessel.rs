//! Modified Bessel functions of the first kind, orders 0 and 1.
//!
//! Power series below `ASYMPTOTIC_FROM`, the Hankel asymptotic expansion
//! above it. Both branches target ~1e-12 relative accuracy.

use std::f64::consts::PI;

const ASYMPTOTIC_FROM: f64 = 15.0;

fn series(x: f64, order: u32) -> f64 {
    let q = 0.25 * x * x;
    // k = 0 term: (x/2)^order / order!
    let mut term = if order == 0 { 1.0 } else { 0.5 * x };
    let mut sum = term;
    let mut k = 0.0_f64;
    loop {
        k += 1.0;
        term *= q / (k * (k + order as f64));
        sum += term;
        if term <= sum * 1e-17 {
            break;
        }
    }
    sum
}

/// `I_order(x) * sqrt(2πx) * e^{-x}`, from the large-argument expansion.
fn asymptotic_scaled(x: f64, order: u32) -> f64 {
    let mu = 4.0 * (order * order) as f64;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        let next = -term * (mu - odd * odd) / (k as f64 * 8.0 * x);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

pub fn bessel_i0(x: f64) -> f64 {
    let x = x.abs();
    if x < ASYMPTOTIC_FROM {
        series(x, 0)
    } else {
        x.exp() / (2.0 * PI * x).sqrt() * asymptotic_scaled(x, 0)
    }
}

pub fn bessel_i1(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax < ASYMPTOTIC_FROM {
        series(ax, 1)
    } else {
        ax.exp() / (2.0 * PI * ax).sqrt() * asymptotic_scaled(ax, 1)
    };
    v.copysign(x)
}

/// `ln I0(x)`, finite for arguments where `I0` itself overflows.
pub fn ln_bessel_i0(x: f64) -> f64 {
    let x = x.abs();
    if x < ASYMPTOTIC_FROM {
        series(x, 0).ln()
    } else {
        x - 0.5 * (2.0 * PI * x).ln() + asymptotic_scaled(x, 0).ln()
    }
}
