//! Error function and complement, double precision.
//!
//! Rational-approximation port of Boost.Math's 53-bit erf/erfc kernels: a
//! small-argument fit in z² for erf, then four erfc segments (rationals in
//! a shifted argument, the outermost in 1/z) scaled by a compensated
//! exp(−z²) that corrects the rounding error of squaring z before it gets
//! amplified by the exponential. Accuracy is a couple of ulps across the
//! whole range, comfortably inside the 1e-12 relative bound the normal
//! tail computation promises within ±8σ. Pinned in the tests below against
//! an independently computed 60-digit reference table.

/// Evaluates a polynomial at `z` with `coeff` in ascending-power order
/// (Horner's rule). Returns 0 for an empty coefficient slice.
pub fn polynomial(z: f64, coeff: &[f64]) -> f64 {
    let n = coeff.len();
    if n == 0 {
        return 0.0;
    }
    let mut sum = coeff[n - 1];
    for &c in coeff[..n - 1].iter().rev() {
        sum = sum * z + c;
    }
    sum
}

/// The error function erf(x).
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        f64::NAN
    } else if x == f64::INFINITY {
        1.0
    } else if x == f64::NEG_INFINITY {
        -1.0
    } else if x == 0.0 {
        0.0
    } else {
        erf_impl(x, false)
    }
}

/// The complementary error function erfc(x) = 1 − erf(x), computed without
/// the cancellation that `1.0 - erf(x)` would suffer for large `x`.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        f64::NAN
    } else if x == f64::INFINITY {
        0.0
    } else if x == f64::NEG_INFINITY {
        2.0
    } else {
        erf_impl(x, true)
    }
}

/// erf on [1e-10, 0.5): erf(z) = z·(Y + P(z²)/Q(z²)).
const ERF_SMALL_Y: f64 = 1.044948577880859375;
const ERF_SMALL_P: &[f64] = &[
    0.0834305892146531832907,
    -0.338165134459360935041,
    -0.0509990735146777432841,
    -0.00772758345802133288487,
    -0.000322780120964605683831,
];
const ERF_SMALL_Q: &[f64] = &[
    1.0,
    0.455004033050794024546,
    0.0875222600142252549554,
    0.00858571925074406212772,
    0.000370900071787748000569,
];

/// erfc on [0.5, 1.5): erfc(z) = (Y + P(z−0.5)/Q(z−0.5))·exp(−z²)/z.
const ERFC_A_Y: f64 = 0.405935764312744140625;
const ERFC_A_P: &[f64] = &[
    -0.098090592216281240205,
    0.178114665841120341155,
    0.191003695796775433986,
    0.0888900368967884466578,
    0.0195049001251218801359,
    0.00180424538297014223957,
];
const ERFC_A_Q: &[f64] = &[
    1.0,
    1.84759070983002217845,
    1.42628004845511324508,
    0.578052804889902404909,
    0.12385097467900864233,
    0.0113385233577001411017,
    0.337511472483094676155e-5,
];

/// erfc on [1.5, 2.5): rational in z − 1.5.
const ERFC_B_Y: f64 = 0.50672817230224609375;
const ERFC_B_P: &[f64] = &[
    -0.0243500476207698441272,
    0.0386540375035707201728,
    0.04394818964209516296,
    0.0175679436311802092299,
    0.00323962406290842133584,
    0.000235839115596880717416,
];
const ERFC_B_Q: &[f64] = &[
    1.0,
    1.53991494948552447182,
    0.982403709157920235114,
    0.325732924782444448493,
    0.0563921837420478160373,
    0.00410369723978904575884,
];

/// erfc on [2.5, 4.5): rational in z − 3.5.
const ERFC_C_Y: f64 = 0.5405750274658203125;
const ERFC_C_P: &[f64] = &[
    0.00295276716530971662634,
    0.0137384425896355332126,
    0.00840807615555585383007,
    0.00212825620914618649141,
    0.000250269961544794627958,
    0.113212406648847561139e-4,
];
const ERFC_C_Q: &[f64] = &[
    1.0,
    1.04217814166938418171,
    0.442597659481563127003,
    0.0958492726301061423444,
    0.0105982906484876531489,
    0.000479411269521714493907,
];

/// erfc on [4.5, 28): rational in 1/z.
const ERFC_D_Y: f64 = 0.5579090118408203125;
const ERFC_D_P: &[f64] = &[
    0.00628057170626964891937,
    0.0175389834052493308818,
    -0.212652252872804219852,
    -0.687717681153649930619,
    -2.5518551727311523996,
    -3.22729451764143718517,
    -2.8175401114513378771,
];
const ERFC_D_Q: &[f64] = &[
    1.0,
    2.79257750980575282228,
    11.0567237927800161565,
    15.930646027911794143,
    22.9367376522880577224,
    13.5064170191802889145,
    5.48409182238641741584,
];

/// exp(−z²) with the rounding error of the square compensated: z is split
/// into a 26-bit head and a tail so the round-off of `z*z` can be
/// exponentiated separately instead of being amplified by exp.
fn exp_neg_square(z: f64) -> f64 {
    let hi = f64::from_bits(z.to_bits() & 0xFFFF_FFFF_F800_0000);
    let lo = z - hi;
    let sq = z * z;
    let err_sqr = ((hi * hi - sq) + 2.0 * hi * lo) + lo * lo;
    (-sq).exp() * (-err_sqr).exp()
}

/// Shared erf/erfc kernel; `invert` selects the complement.
fn erf_impl(z: f64, mut invert: bool) -> f64 {
    if z < 0.0 {
        if !invert {
            return -erf_impl(-z, false);
        }
        if z < -0.5 {
            return 2.0 - erf_impl(-z, true);
        }
        return 1.0 + erf_impl(-z, false);
    }

    let result = if z < 0.5 {
        // Compute erf directly.
        if z < 1e-10 {
            z * 1.125 + z * 0.003379167095512573896158903121545171688
        } else {
            let zz = z * z;
            z * (ERF_SMALL_Y + polynomial(zz, ERF_SMALL_P) / polynomial(zz, ERF_SMALL_Q))
        }
    } else if if invert { z < 28.0 } else { z < 5.8 } {
        // Compute erfc and flip; past 5.8 erf rounds to 1 anyway.
        invert = !invert;
        if z < 1.5 {
            let r = ERFC_A_Y + polynomial(z - 0.5, ERFC_A_P) / polynomial(z - 0.5, ERFC_A_Q);
            r * ((-z * z).exp() / z)
        } else {
            let r = if z < 2.5 {
                ERFC_B_Y + polynomial(z - 1.5, ERFC_B_P) / polynomial(z - 1.5, ERFC_B_Q)
            } else if z < 4.5 {
                ERFC_C_Y + polynomial(z - 3.5, ERFC_C_P) / polynomial(z - 3.5, ERFC_C_Q)
            } else {
                ERFC_D_Y + polynomial(1.0 / z, ERFC_D_P) / polynomial(1.0 / z, ERFC_D_Q)
            };
            r * (exp_neg_square(z) / z)
        }
    } else {
        // erfc underflows to zero for z ≥ 28.
        invert = !invert;
        0.0
    };

    if invert {
        1.0 - result
    } else {
        result
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_rel(got: f64, want: f64, tol: f64) {
        let err = (got - want).abs() / want.abs().max(f64::MIN_POSITIVE);
        assert!(err <= tol, "got {got:e}, want {want:e}, rel err {err:e}");
    }

    #[test]
    fn polynomial_horner() {
        assert_eq!(polynomial(2.0, &[]), 0.0);
        assert_eq!(polynomial(2.0, &[1.0, 0.0, 5.0]), 21.0);
        assert_eq!(polynomial(-2.0, &[-5.0, -2.0, 3.0]), 11.0);
    }

    #[test]
    fn erf_special_points() {
        assert!(erf(f64::NAN).is_nan());
        assert_eq!(erf(0.0), 0.0);
        assert_eq!(erf(f64::INFINITY), 1.0);
        assert_eq!(erf(f64::NEG_INFINITY), -1.0);
        assert!(erfc(f64::NAN).is_nan());
        assert_eq!(erfc(0.0), 1.0);
        assert_eq!(erfc(f64::INFINITY), 0.0);
        assert_eq!(erfc(f64::NEG_INFINITY), 2.0);
        assert_eq!(erfc(150.0), 0.0); // past the rational segments
        assert_eq!(erf(7.0), 1.0); // rounds to one well before the cutoff
    }

    // Reference values computed at 60-digit precision, quoted to 22
    // significant digits.
    #[test]
    fn erf_reference_table() {
        let table = [
            (0.1, 0.1124629160182848984047),
            (0.5, 0.5204998778130465376827),
            (1.0, 0.8427007929497148693412),
            (3.0, 0.9999779095030014145586),
        ];
        for (x, want) in table {
            assert_rel(erf(x), want, 1e-14);
            assert_rel(erf(-x), -want, 1e-14);
        }
    }

    #[test]
    fn erfc_reference_table() {
        let table = [
            (0.1, 0.8875370839817151015953),
            (0.5, 0.4795001221869534623173),
            (1.0, 0.1572992070502851306588),
            (2.0, 0.004677734981047265837931),
            (3.0, 0.00002209049699858544137278),
            (5.0, 1.537459794428034850188e-12),
            (-1.0, 1.842700792949714869341),
            (-2.5, 1.99959304798255504106),
            (10.0, 2.088487583762544757001e-45),
            (26.5, 2.210907664263734275929e-307),
        ];
        for (x, want) in table {
            assert_rel(erfc(x), want, 1e-13);
        }
    }

    #[test]
    fn erf_erfc_complement() {
        for x in [0.0, 0.3, 0.9, 1.7, 2.4, 4.0, -0.4, -2.0] {
            let sum = erf(x) + erfc(x);
            assert!((sum - 1.0).abs() < 1e-15, "erf+erfc at {x} gave {sum}");
        }
    }
}
