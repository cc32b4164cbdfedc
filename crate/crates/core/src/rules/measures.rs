use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::Contingency;
use crate::error::Error;

/// Reference measure families G1a to G6.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Group {
    G1a,
    G1b,
    G2,
    G3,
    G4,
    G5,
    G6,
}

impl Group {
    pub const ALL: [Group; 7] = [
        Group::G1a,
        Group::G1b,
        Group::G2,
        Group::G3,
        Group::G4,
        Group::G5,
        Group::G6,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Group::G1a => "G1a",
            Group::G1b => "G1b",
            Group::G2 => "G2",
            Group::G3 => "G3",
            Group::G4 => "G4",
            Group::G5 => "G5",
            Group::G6 => "G6",
        }
    }

    /// Reference representative of the family.
    pub fn representative(self) -> Measure {
        match self {
            Group::G1a => Measure::Lift,
            Group::G1b => Measure::AddedValue,
            Group::G2 => Measure::Accuracy,
            Group::G3 => Measure::FisherExactTest,
            Group::G4 => Measure::Cosine,
            Group::G5 => Measure::PiatetskyShapiro,
            Group::G6 => Measure::CollectiveStrength,
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Marks for measures known to produce identical rankings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Equivalence {
    /// ◇ Yule's Q, Yule's Y, Odds Ratio.
    Diamond,
    /// † Loevinger, Conviction.
    Dagger,
    /// ⊖ Information Gain, Lift.
    Ominus,
    /// ⊗ Confidence, Laplace Correction.
    Otimes,
    /// ∗ identical rankings when all rules share one consequent.
    Ast,
    /// ▷ identical rankings when all rules share one consequent.
    Triangle,
}

impl Equivalence {
    pub const ALL: [Equivalence; 6] = [
        Equivalence::Diamond,
        Equivalence::Dagger,
        Equivalence::Ominus,
        Equivalence::Otimes,
        Equivalence::Ast,
        Equivalence::Triangle,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Equivalence::Diamond => "◇",
            Equivalence::Dagger => "†",
            Equivalence::Ominus => "⊖",
            Equivalence::Otimes => "⊗",
            Equivalence::Ast => "∗",
            Equivalence::Triangle => "▷",
        }
    }

    /// False for the marks that only hold under a single target.
    pub fn holds_across_targets(self) -> bool {
        !matches!(self, Equivalence::Ast | Equivalence::Triangle)
    }

    pub fn members(self) -> Vec<Measure> {
        Measure::ALL
            .iter()
            .copied()
            .filter(|m| m.equivalences().contains(&self))
            .collect()
    }
}

macro_rules! measures {
    ($( $variant:ident => $name:literal, $group:ident, [$($eq:ident),*]; )*) => {
        /// The 34 interestingness measures, in catalog order.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum Measure { $($variant),* }

        impl Measure {
            pub const ALL: [Measure; 34] = [$(Measure::$variant),*];

            pub fn name(self) -> &'static str {
                match self { $(Measure::$variant => $name),* }
            }

            pub fn group(self) -> Group {
                match self { $(Measure::$variant => Group::$group),* }
            }

            pub fn equivalences(self) -> &'static [Equivalence] {
                match self { $(Measure::$variant => &[$(Equivalence::$eq),*]),* }
            }
        }
    };
}

measures! {
    OneWaySupport => "One-Way Support", G1a, [];
    RelativeRisk => "Relative Risk", G1a, [];
    OddMultiplier => "Odd Multiplier", G1a, [];
    Zhang => "Zhang", G1a, [];
    YulesQ => "Yule's Q", G1a, [Diamond];
    YulesY => "Yule's Y", G1a, [Diamond];
    OddsRatio => "Odds Ratio", G1a, [Diamond];
    InformationGain => "Information Gain", G1a, [Ast, Ominus];
    Lift => "Lift", G1a, [Ast, Ominus];
    AddedValue => "Added Value", G1b, [Ast];
    CertaintyFactor => "Certainty Factor", G1b, [Ast];
    Confidence => "Confidence", G1b, [Ast, Otimes];
    LaplaceCorrection => "Laplace Correction", G1b, [Ast, Otimes];
    Loevinger => "Loevinger", G1b, [Dagger];
    Conviction => "Conviction", G1b, [Dagger];
    ExampleCounterexampleRate => "Example and Counter-example Rate", G1b, [];
    SebagSchoenauer => "Sebag-Schoenauer", G1b, [];
    Leverage => "Leverage", G1b, [];
    LeastContradiction => "Least Contradiction", G2, [];
    Accuracy => "Accuracy", G2, [];
    PearsonChiSquare => "Pearson's Chi-Square", G3, [Triangle];
    GiniIndex => "Gini Index", G3, [Triangle];
    JMeasure => "J-measure", G3, [];
    PhiCoefficient => "Phi Coefficient", G3, [];
    TwoWaySupportVariation => "Two-Way Support Variation", G3, [];
    FisherExactTest => "Fisher's Exact Test", G3, [];
    Jaccard => "Jaccard", G3, [];
    Cosine => "Cosine", G4, [];
    TwoWaySupport => "Two-Way Support", G4, [];
    PiatetskyShapiro => "Piatetsky-Shapiro", G5, [];
    Klosgen => "Klosgen", G5, [];
    Specificity => "Specificity", G5, [];
    Recall => "Recall", G6, [];
    CollectiveStrength => "Collective Strength", G6, [];
}

/// The six measures offered in blinded review, one per single-target family.
pub const REVIEW_MEASURES: [Measure; 6] = [
    Measure::Lift,
    Measure::Accuracy,
    Measure::FisherExactTest,
    Measure::Cosine,
    Measure::PiatetskyShapiro,
    Measure::CollectiveStrength,
];

fn slug(s: &str) -> String {
    s.chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

impl Measure {
    pub fn index(self) -> usize {
        self as usize
    }

    /// Case- and punctuation-insensitive lookup ("yules-q" finds Yule's Q).
    pub fn from_name(name: &str) -> Option<Measure> {
        let wanted = slug(name);
        Measure::ALL.iter().copied().find(|m| slug(m.name()) == wanted)
    }

    pub fn names() -> Vec<&'static str> {
        Measure::ALL.iter().map(|m| m.name()).collect()
    }

    /// Score of a rule. Larger is always more interesting; the value is
    /// never NaN but may be ±∞.
    pub fn evaluate(self, ct: &Contingency) -> f64 {
        let v = self.raw(ct);
        debug_assert!(!v.is_nan(), "{} produced NaN for {ct:?}", self.name());
        v
    }

    fn raw(self, ct: &Contingency) -> f64 {
        let Contingency {
            p_a: pa,
            p_b: pb,
            p_ab: pab,
            p_anb: panb,
            p_nab: pnab,
            p_nanb: pnanb,
            ..
        } = *ct;
        let pna = 1.0 - pa;
        let pnb = 1.0 - pb;
        let n = ct.n as f64;
        // Integer counts of the four cells and the margins.
        let (ab, a, b, nn) = (
            ct.support_ab as u128,
            ct.support_a as u128,
            ct.support_b as u128,
            ct.n as u128,
        );
        let (anb, nab) = (a - ab, b - ab);
        let nanb = nn + ab - a - b;
        let (na, nb) = (nn - a, nn - b);
        // Measures that rank alike are derived from one exactly rounded
        // ratio, so equal rationals give equal floats for every member.
        let conf = ratio(ab as i128, a);
        let lift = ratio((ab * nn) as i128, a * b);
        let odds = ratio((ab * nanb) as i128, anb * nab);
        let conviction = ratio((a * nb) as i128, nn * anb);
        let dev = (ab * nn) as i128 - (a * b) as i128;
        let dev_sq_over_a = ratio(dev * dev, a * na);
        let spec = div(pnanb, pna);
        match self {
            Measure::OneWaySupport => conf * lift.log2(),
            Measure::RelativeRisk => div(conf, div(pnab, pna)),
            Measure::OddMultiplier => div(pab * pnb, pb * panb),
            Measure::Zhang => div(pab - pa * pb, (pab * pnb).max(pb * panb)),
            Measure::YulesQ => {
                let (x, y) = ((ab * nanb) as i128, (anb * nab) as i128);
                ratio(x - y, (x + y) as u128)
            }
            // (sqrt(OR) - 1) / (sqrt(OR) + 1), in a form monotone in OR.
            Measure::YulesY => 1.0 - 2.0 / (odds.sqrt() + 1.0),
            Measure::OddsRatio => odds,
            Measure::InformationGain => ln(lift),
            Measure::Lift => lift,
            Measure::AddedValue => conf - pb,
            Measure::CertaintyFactor => div(conf - pb, pnb),
            Measure::Confidence => conf,
            Measure::LaplaceCorrection => {
                (ct.support_ab as f64 + 1.0) / (ct.support_a as f64 + 2.0)
            }
            Measure::Loevinger => ratio((a * nb) as i128 - (nn * anb) as i128, a * nb),
            Measure::Conviction => conviction,
            Measure::ExampleCounterexampleRate => 1.0 - div(panb, pab),
            Measure::SebagSchoenauer => div(pab, panb),
            Measure::Leverage => conf - pa * pb,
            Measure::LeastContradiction => div(pab - panb, pb),
            Measure::Accuracy => pab + pnanb,
            // Closed forms of the 2x2 statistics: with d = n|AB| - |A||B|,
            // chi2 = n d^2 / (|A||¬A||B||¬B|) and gini = 2 d^2 / (n^2 |A||¬A|).
            Measure::PearsonChiSquare if dev == 0 => 0.0,
            Measure::PearsonChiSquare => dev_sq_over_a * div(n, (b * nb) as f64),
            Measure::GiniIndex => dev_sq_over_a * (2.0 / (n * n)),
            Measure::JMeasure => {
                xlog(pab, div(conf, pb), f64::ln)
                    + xlog(panb, div(div(panb, pa), pnb), f64::ln)
            }
            Measure::PhiCoefficient => div(pab - pa * pb, (pa * pb * pna * pnb).sqrt()),
            Measure::TwoWaySupportVariation => {
                xlog(pab, div(pab, pa * pb), f64::log2)
                    + xlog(panb, div(panb, pa * pnb), f64::log2)
                    + xlog(pnab, div(pnab, pna * pb), f64::log2)
                    + xlog(pnanb, div(pnanb, pna * pnb), f64::log2)
            }
            Measure::FisherExactTest => fisher_score(ct),
            Measure::Jaccard => div(pab, pa + pb - pab),
            Measure::Cosine => div(pab, (pa * pb).sqrt()),
            Measure::TwoWaySupport => pab * lift.log2(),
            Measure::PiatetskyShapiro => pab - pa * pb,
            Measure::Klosgen => pab.sqrt() * (conf - pb).max(div(pab, pb) - pa),
            Measure::Specificity => spec,
            Measure::Recall => ratio(ab as i128, b),
            Measure::CollectiveStrength => {
                let agree = pa * pb + pna * pnb;
                div(pab + spec, agree) * div(1.0 - agree, 1.0 - pab - spec)
            }
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Measure::from_name(s).ok_or_else(|| Error::UnknownMeasure(s.to_string()))
    }
}

/// `num / den` with the division done once in floating point.
fn ratio(num: i128, den: u128) -> f64 {
    div(num as f64, den as f64)
}

/// Division under the extended-real conventions: x/0 is ±∞ by the sign of
/// x, and 0/0 is 0.
pub(crate) fn div(x: f64, y: f64) -> f64 {
    if y == 0.0 {
        if x > 0.0 {
            f64::INFINITY
        } else if x < 0.0 {
            f64::NEG_INFINITY
        } else {
            0.0
        }
    } else {
        x / y
    }
}

/// Natural log with log 0 = −∞.
pub(crate) fn ln(x: f64) -> f64 {
    if x == 0.0 {
        f64::NEG_INFINITY
    } else {
        x.ln()
    }
}

/// x·log(ratio) with 0·log(anything) = 0.
fn xlog(x: f64, ratio: f64, log: fn(f64) -> f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if ratio == 0.0 {
        f64::NEG_INFINITY
    } else {
        x * log(ratio)
    }
}

pub(crate) fn ln_binomial(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// −ln of the hypergeometric probability C(|B|, |AB|)·C(|¬B|, |A¬B|) / C(n, |A|).
fn fisher_score(ct: &Contingency) -> f64 {
    let (a, b, ab, n) = (ct.support_a, ct.support_b, ct.support_ab, ct.n);
    let ln_p = ln_binomial(b, ab) + ln_binomial(n - b, a - ab) - ln_binomial(n, a);
    (-ln_p).max(0.0)
}
