//! Special functions for the antenna model.
//!
//! The beam pattern needs the Bessel function of the first kind J1 over
//! roughly |x| <= k*a (about 63 for the default aperture, more for larger
//! dishes). Two classical schemes cover the range at double precision:
//! the ascending power series below the crossover, and Miller's downward
//! recurrence with the even-order normalization identity above it.
//! Absolute accuracy is better than 1e-12 on the whole range exercised by
//! the simulator (tolerance required: 1e-10).

/// First positive root of J1; the beam pattern's first null sits here.
pub const J1_FIRST_ROOT: f64 = 3.831_705_970_207_512_3;

/// Arguments at or below this go through the power series.
const SERIES_CUTOFF: f64 = 12.0;

/// Bessel function of the first kind, order one.
pub fn bessel_j1(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let ax = x.abs();
    let val = if ax <= SERIES_CUTOFF {
        j1_series(ax)
    } else {
        j1_miller(ax)
    };
    if x < 0.0 {
        -val
    } else {
        val
    }
}

/// Ascending series: J1(x) = (x/2) * sum_j (-x^2/4)^j / (j! (j+1)!).
/// Worst-case cancellation at the crossover still leaves ~1e-12 absolute.
fn j1_series(x: f64) -> f64 {
    let q = -x * x / 4.0;
    let mut term = x / 2.0;
    let mut sum = term;
    for j in 1..200 {
        term *= q / (j as f64 * (j as f64 + 1.0));
        sum += term;
        if term.abs() < sum.abs() * 1e-18 + 1e-300 {
            break;
        }
    }
    sum
}

/// Miller's algorithm: run the three-term recurrence downward from an
/// order high enough that J_m(x) is negligible, then normalize with
/// J0(x) + 2 * sum_k J_{2k}(x) = 1.
fn j1_miller(x: f64) -> f64 {
    let mut m = (x + (160.0 * x).sqrt()).ceil() as u64;
    if m % 2 == 1 {
        m += 1;
    }
    let mut j_up = 0.0_f64; // J_{k+1}, unnormalized
    let mut j_k = 1e-30_f64; // J_k, starting at k = m
    let mut j1 = 0.0_f64;
    let mut norm = 2.0 * j_k; // J_m contributes (m is even, m >= 2)
    let mut k = m;
    while k >= 1 {
        // J_{k-1} = (2k/x) J_k - J_{k+1}
        let j_down = (2.0 * k as f64 / x) * j_k - j_up;
        j_up = j_k;
        j_k = j_down;
        k -= 1;
        if k == 1 {
            j1 = j_k;
        }
        if k == 0 {
            norm += j_k;
        } else if k % 2 == 0 {
            norm += 2.0 * j_k;
        }
        if j_k.abs() > 1e250 {
            j_up /= 1e250;
            j_k /= 1e250;
            j1 /= 1e250;
            norm /= 1e250;
        }
    }
    j1 / norm
}
