//! Symmetric quadrature on the reference triangle `(0,0), (1,0), (0,1)`.

use crate::error::{Error, Result};

/// Point in barycentric coordinates with its weight (weights sum to 1/2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadPoint {
    pub bary: [f64; 3],
    pub weight: f64,
}

const fn qp(a: f64, b: f64, c: f64, weight: f64) -> QuadPoint {
    QuadPoint {
        bary: [a, b, c],
        weight: 0.5 * weight,
    }
}

static ORDER1: [QuadPoint; 1] = [qp(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 1.0)];

static ORDER2: [QuadPoint; 3] = [
    qp(2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 3.0),
    qp(1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0, 1.0 / 3.0),
    qp(1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0, 1.0 / 3.0),
];

// Dunavant degree 4, six points, positive weights.
const D4_A: f64 = 0.108_103_018_168_070_23;
const D4_B: f64 = 0.445_948_490_915_964_9;
const D4_WA: f64 = 0.223_381_589_678_011_5;
const D4_C: f64 = 0.816_847_572_980_458_5;
const D4_D: f64 = 0.091_576_213_509_770_74;
const D4_WC: f64 = 0.109_951_743_655_321_9;

static ORDER4: [QuadPoint; 6] = [
    qp(D4_A, D4_B, D4_B, D4_WA),
    qp(D4_B, D4_A, D4_B, D4_WA),
    qp(D4_B, D4_B, D4_A, D4_WA),
    qp(D4_C, D4_D, D4_D, D4_WC),
    qp(D4_D, D4_C, D4_D, D4_WC),
    qp(D4_D, D4_D, D4_C, D4_WC),
];

/// Rule exact for polynomials of total degree `order` (1..=4). Order 3 uses
/// the degree-4 rule, which keeps every weight positive.
pub fn quadrature(order: usize) -> Result<&'static [QuadPoint]> {
    match order {
        1 => Ok(&ORDER1),
        2 => Ok(&ORDER2),
        3 | 4 => Ok(&ORDER4),
        _ => Err(Error::UnsupportedQuadrature(order)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// ∫ x^a y^b over the reference triangle = a! b! / (a + b + 2)!
    fn monomial_integral(a: u32, b: u32) -> f64 {
        let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
        fact(a) * fact(b) / fact(a + b + 2)
    }

    #[test]
    fn centroid_rule() {
        let q = quadrature(1).unwrap();
        assert_eq!(q.len(), 1);
        assert_eq!(q[0].weight, 0.5);
    }

    #[test]
    fn second_order_integrates_x2_plus_y2() {
        let q = quadrature(2).unwrap();
        let s: f64 = q
            .iter()
            .map(|p| {
                let (x, y) = (p.bary[1], p.bary[2]);
                p.weight * (x * x + y * y)
            })
            .sum();
        assert!((s - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn exactness_and_weights() {
        for order in 1..=4 {
            let q = quadrature(order).unwrap();
            let wsum: f64 = q.iter().map(|p| p.weight).sum();
            assert!((wsum - 0.5).abs() < 1e-14);
            assert!(q.iter().all(|p| p.weight > 0.0));
            for deg in 0..=order as u32 {
                for a in 0..=deg {
                    let b = deg - a;
                    let s: f64 = q
                        .iter()
                        .map(|p| p.weight * p.bary[1].powi(a as i32) * p.bary[2].powi(b as i32))
                        .sum();
                    assert!(
                        (s - monomial_integral(a, b)).abs() < 1e-14,
                        "order {order} x^{a} y^{b}"
                    );
                }
            }
        }
    }

    #[test]
    fn unsupported_orders() {
        assert_eq!(quadrature(0), Err(Error::UnsupportedQuadrature(0)));
        assert!(quadrature(5).is_err());
    }
}
