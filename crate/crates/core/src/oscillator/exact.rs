//! Closed-form density-overlap ratios in exact rational arithmetic.
//!
//! With `ψ_n ∝ H_n(x) e^{-x²/2}`, every overlap `∫ψ_ν²ψ_μ² dx` reduces to
//! Gaussian moments `∫x^{2k} e^{-2x²} dx = √(π/2) (2k-1)!!/4^k`, so the ratio
//! to the ground-state overlap is rational.

use num_rational::Ratio;

pub type Rational = Ratio<i128>;

/// Integer coefficients of the physicists' Hermite polynomial `H_n`,
/// lowest power first.
pub fn hermite_coefficients(n: usize) -> Vec<i128> {
    let mut prev = vec![1i128];
    if n == 0 {
        return prev;
    }
    let mut cur = vec![0i128, 2];
    for k in 1..n {
        let mut next = vec![0i128; k + 2];
        for (i, &c) in cur.iter().enumerate() {
            next[i + 1] += 2 * c;
        }
        for (i, &c) in prev.iter().enumerate() {
            next[i] -= 2 * k as i128 * c;
        }
        prev = cur;
        cur = next;
    }
    cur
}

fn poly_mul(a: &[i128], b: &[i128]) -> Vec<i128> {
    let mut out = vec![0i128; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn factorial(n: usize) -> i128 {
    (1..=n as i128).product()
}

fn double_factorial_odd(k: usize) -> i128 {
    // (2k-1)!!
    (1..=k as i128).map(|i| 2 * i - 1).product()
}

/// `∫ψ_ν²ψ_μ² dx / ∫ψ_0⁴ dx`, without the exchange prefactor.
pub fn overlap_ratio(nu: usize, mu: usize) -> Rational {
    let hn = hermite_coefficients(nu);
    let hm = hermite_coefficients(mu);
    let p = poly_mul(&poly_mul(&hn, &hn), &poly_mul(&hm, &hm));
    let mut acc = Rational::from_integer(0);
    for (power, &c) in p.iter().enumerate() {
        if power % 2 == 1 || c == 0 {
            continue;
        }
        let k = power / 2;
        acc += Rational::new(c * double_factorial_odd(k), 4i128.pow(k as u32));
    }
    let norm = 2i128.pow((nu + mu) as u32) * factorial(nu) * factorial(mu);
    acc / Rational::from_integer(norm)
}

/// Exact `U_νμ / U_00` including the `(2 - δ_νμ)` exchange factor.
pub fn relative_interaction_exact(nu: usize, mu: usize) -> Rational {
    let exchange = if nu == mu { 1 } else { 2 };
    overlap_ratio(nu, mu) * Rational::from_integer(exchange)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_low_orders() {
        assert_eq!(hermite_coefficients(0), vec![1]);
        assert_eq!(hermite_coefficients(1), vec![0, 2]);
        assert_eq!(hermite_coefficients(2), vec![-2, 0, 4]);
        assert_eq!(hermite_coefficients(3), vec![0, -12, 0, 8]);
        assert_eq!(hermite_coefficients(4), vec![12, 0, -48, 0, 16]);
    }

    #[test]
    fn known_ratios() {
        let r = |n, d| Rational::new(n, d);
        assert_eq!(relative_interaction_exact(0, 0), r(1, 1));
        assert_eq!(relative_interaction_exact(0, 1), r(1, 1));
        assert_eq!(relative_interaction_exact(1, 1), r(3, 4));
        assert_eq!(relative_interaction_exact(0, 2), r(3, 4));
        assert_eq!(relative_interaction_exact(1, 2), r(7, 8));
        assert_eq!(relative_interaction_exact(2, 2), r(41, 64));
    }

    #[test]
    fn symmetric() {
        for nu in 0..=4 {
            for mu in 0..=4 {
                assert_eq!(relative_interaction_exact(nu, mu), relative_interaction_exact(mu, nu));
            }
        }
    }
}
