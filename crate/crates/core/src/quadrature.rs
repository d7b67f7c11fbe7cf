//! Symmetric quadrature on triangles and Gauss rules on segments.
//!
//! Triangle rules are given in barycentric coordinates with weights
//! normalized to sum to one; multiply by the triangle area.

use nalgebra::Point2;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadPoint {
    pub bary: [f64; 3],
    pub weight: f64,
}

impl QuadPoint {
    pub fn map(&self, p: &[Point2<f64>; 3]) -> Point2<f64> {
        let [a, b, c] = self.bary;
        Point2::from(p[0].coords * a + p[1].coords * b + p[2].coords * c)
    }
}

const CENTROID: [QuadPoint; 1] = [QuadPoint {
    bary: [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
    weight: 1.0,
}];

const EDGE_MIDPOINTS: [QuadPoint; 3] = [
    QuadPoint { bary: [0.0, 0.5, 0.5], weight: 1.0 / 3.0 },
    QuadPoint { bary: [0.5, 0.0, 0.5], weight: 1.0 / 3.0 },
    QuadPoint { bary: [0.5, 0.5, 0.0], weight: 1.0 / 3.0 },
];

// Dunavant degree 4, 6 points.
const D4_A: f64 = 0.108_103_018_168_070;
const D4_B: f64 = 0.445_948_490_915_965;
const D4_WA: f64 = 0.223_381_589_678_011;
const D4_C: f64 = 0.816_847_572_980_459;
const D4_D: f64 = 0.091_576_213_509_771;
const D4_WC: f64 = 0.109_951_743_655_322;

const DUNAVANT_4: [QuadPoint; 6] = [
    QuadPoint { bary: [D4_A, D4_B, D4_B], weight: D4_WA },
    QuadPoint { bary: [D4_B, D4_A, D4_B], weight: D4_WA },
    QuadPoint { bary: [D4_B, D4_B, D4_A], weight: D4_WA },
    QuadPoint { bary: [D4_C, D4_D, D4_D], weight: D4_WC },
    QuadPoint { bary: [D4_D, D4_C, D4_D], weight: D4_WC },
    QuadPoint { bary: [D4_D, D4_D, D4_C], weight: D4_WC },
];

// Dunavant degree 5, 7 points.
const D5_A: f64 = 0.059_715_871_789_770;
const D5_B: f64 = 0.470_142_064_105_115;
const D5_WA: f64 = 0.132_394_152_788_506;
const D5_C: f64 = 0.797_426_985_353_087;
const D5_D: f64 = 0.101_286_507_323_456;
const D5_WC: f64 = 0.125_939_180_544_827;

const DUNAVANT_5: [QuadPoint; 7] = [
    QuadPoint { bary: [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], weight: 0.225 },
    QuadPoint { bary: [D5_A, D5_B, D5_B], weight: D5_WA },
    QuadPoint { bary: [D5_B, D5_A, D5_B], weight: D5_WA },
    QuadPoint { bary: [D5_B, D5_B, D5_A], weight: D5_WA },
    QuadPoint { bary: [D5_C, D5_D, D5_D], weight: D5_WC },
    QuadPoint { bary: [D5_D, D5_C, D5_D], weight: D5_WC },
    QuadPoint { bary: [D5_D, D5_D, D5_C], weight: D5_WC },
];

// Dunavant degree 6, 12 points.
const D6_A: f64 = 0.501_426_509_658_179;
const D6_B: f64 = 0.249_286_745_170_910;
const D6_WA: f64 = 0.116_786_275_726_379;
const D6_C: f64 = 0.873_821_971_016_996;
const D6_D: f64 = 0.063_089_014_491_502;
const D6_WC: f64 = 0.050_844_906_370_207;
const D6_E: f64 = 0.053_145_049_844_817;
const D6_F: f64 = 0.310_352_451_033_784;
const D6_G: f64 = 0.636_502_499_121_399;
const D6_WE: f64 = 0.082_851_075_618_374;

const DUNAVANT_6: [QuadPoint; 12] = [
    QuadPoint { bary: [D6_A, D6_B, D6_B], weight: D6_WA },
    QuadPoint { bary: [D6_B, D6_A, D6_B], weight: D6_WA },
    QuadPoint { bary: [D6_B, D6_B, D6_A], weight: D6_WA },
    QuadPoint { bary: [D6_C, D6_D, D6_D], weight: D6_WC },
    QuadPoint { bary: [D6_D, D6_C, D6_D], weight: D6_WC },
    QuadPoint { bary: [D6_D, D6_D, D6_C], weight: D6_WC },
    QuadPoint { bary: [D6_E, D6_F, D6_G], weight: D6_WE },
    QuadPoint { bary: [D6_E, D6_G, D6_F], weight: D6_WE },
    QuadPoint { bary: [D6_F, D6_E, D6_G], weight: D6_WE },
    QuadPoint { bary: [D6_F, D6_G, D6_E], weight: D6_WE },
    QuadPoint { bary: [D6_G, D6_E, D6_F], weight: D6_WE },
    QuadPoint { bary: [D6_G, D6_F, D6_E], weight: D6_WE },
];

/// Symmetric triangle rule exact for polynomials of total degree `degree`.
///
/// Degree 3 reuses the 6-point degree-4 rule, which has positive weights.
pub fn quad_rule(degree: usize) -> Result<&'static [QuadPoint]> {
    match degree {
        1 => Ok(&CENTROID),
        2 => Ok(&EDGE_MIDPOINTS),
        3 | 4 => Ok(&DUNAVANT_4),
        5 => Ok(&DUNAVANT_5),
        6 => Ok(&DUNAVANT_6),
        d => Err(Error::UnsupportedDegree(d)),
    }
}

/// Two-point Gauss-Legendre rule on `[0, 1]` as (parameter, weight) pairs.
pub const GAUSS_2: [(f64, f64); 2] = [
    (0.5 - 0.288_675_134_594_812_9, 0.5),
    (0.5 + 0.288_675_134_594_812_9, 0.5),
];
