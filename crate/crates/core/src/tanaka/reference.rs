//! Model symbol algebras `m₀, m₁, m₂` for each type, and comparison by fingerprint.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::{GradedSymbol, SymbolFingerprint, TanakaError};
use crate::contact::Rank4Kind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Reference {
    pub kind: Rank4Kind,
    /// stratum index 0, 1 or 2
    pub stratum: usize,
}

impl fmt::Display for Reference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = match self.kind {
            Rank4Kind::HyperbolicType => "hyp",
            Rank4Kind::ParabolicType => "par",
            Rank4Kind::EllipticType => "ell",
            Rank4Kind::Degenerate => "deg",
        };
        write!(f, "{k}-m{}", self.stratum)
    }
}

impl FromStr for Reference {
    type Err = String;

    fn from_str(s: &str) -> Result<Reference, String> {
        let (k, m) = s.split_once("-m").ok_or_else(|| format!("bad reference {s:?}"))?;
        let kind = match k {
            "hyp" | "hyperbolic" => Rank4Kind::HyperbolicType,
            "par" | "parabolic" => Rank4Kind::ParabolicType,
            "ell" | "elliptic" => Rank4Kind::EllipticType,
            _ => return Err(format!("bad reference {s:?}")),
        };
        let stratum = m.parse::<usize>().map_err(|_| format!("bad reference {s:?}"))?;
        let r = Reference { kind, stratum };
        reference_symbol(r).map(|_| r).ok_or_else(|| format!("no table for {s}"))
    }
}

struct Table {
    g1: [&'static str; 4],
    g2: [&'static str; 2],
    brackets: &'static [(&'static str, &'static str, f64, &'static str)],
}

const G3: [&str; 2] = ["X1", "X2"];

const HYP_M0: Table = Table {
    g1: ["w1", "w2", "p11", "p22"],
    g2: ["pi11", "pi22"],
    brackets: &[
        ("p11", "w1", 1.0, "pi11"),
        ("p22", "w2", 1.0, "pi22"),
        ("pi11", "w1", 1.0, "X1"),
        ("pi22", "w2", 1.0, "X2"),
        ("X1", "w1", 1.0, "X0"),
        ("X2", "w2", 1.0, "X0"),
    ],
};

const HYP_M1: Table = Table {
    g1: ["w1", "pi22", "p12", "p21"],
    g2: ["w2", "pi11"],
    brackets: &[
        ("p12", "pi22", 1.0, "w2"),
        ("p21", "w1", 1.0, "pi11"),
        ("pi11", "w1", 1.0, "X1"),
        ("pi22", "w2", 1.0, "X2"),
        ("X1", "w1", 1.0, "X0"),
    ],
};

const HYP_M2: Table = Table {
    g1: ["pi11", "pi22", "p11", "p22"],
    g2: ["w1", "w2"],
    brackets: &[
        ("p11", "pi11", 1.0, "w1"),
        ("p22", "pi22", 1.0, "w2"),
        ("pi11", "w1", 1.0, "X1"),
        ("pi22", "w2", 1.0, "X2"),
    ],
};

const PAR_M0: Table = Table {
    g1: ["w1", "w2", "p12", "p22"],
    g2: ["pi12", "pi22"],
    brackets: &[
        ("p12", "w2", 1.0, "pi12"),
        ("p12", "w1", 1.0, "pi22"),
        ("p22", "w2", 1.0, "pi22"),
        ("pi12", "w2", 1.0, "X1"),
        ("pi12", "w1", 1.0, "X2"),
        ("pi22", "w2", 1.0, "X2"),
        ("X1", "w1", 1.0, "X0"),
        ("X2", "w2", 1.0, "X0"),
    ],
};

const PAR_M1: Table = Table {
    g1: ["pi12", "pi22", "p11", "p12"],
    g2: ["w1", "w2"],
    brackets: &[
        ("p11", "pi12", 1.0, "w1"),
        ("p12", "pi22", 1.0, "w1"),
        ("p12", "pi12", 1.0, "w2"),
        ("pi12", "w2", 1.0, "X1"),
        ("pi12", "w1", 1.0, "X2"),
        ("pi22", "w2", 1.0, "X2"),
        ("X1", "pi12", 1.0, "X0"),
    ],
};

const PAR_M2: Table = Table {
    g1: ["pi12", "pi22", "p11", "p12"],
    g2: ["w1", "w2"],
    brackets: &[
        ("p11", "pi12", 1.0, "w1"),
        ("p12", "pi22", 1.0, "w1"),
        ("p12", "pi12", 1.0, "w2"),
        ("pi12", "w2", 1.0, "X1"),
        ("pi12", "w1", 1.0, "X2"),
        ("pi22", "w2", 1.0, "X2"),
    ],
};

const ELL_M0: Table = Table {
    g1: ["w1", "w2", "p11", "p12"],
    g2: ["pi11", "pi12"],
    brackets: &[
        ("p11", "w1", 1.0, "pi11"),
        ("p12", "w2", 1.0, "pi11"),
        ("p12", "w1", 1.0, "pi12"),
        ("w2", "p11", 1.0, "pi12"),
        ("pi11", "w1", 1.0, "X1"),
        ("pi12", "w2", 1.0, "X1"),
        ("pi12", "w1", 1.0, "X2"),
        ("w2", "pi11", 1.0, "X2"),
        ("X1", "w1", 1.0, "X0"),
        ("X2", "w2", 1.0, "X0"),
    ],
};

const ELL_M2: Table = Table {
    g1: ["pi11", "pi12", "p11", "p12"],
    g2: ["w1", "w2"],
    brackets: &[
        ("p11", "pi11", 1.0, "w1"),
        ("p12", "pi12", 1.0, "w1"),
        ("p12", "pi11", 1.0, "w2"),
        ("pi12", "p11", 1.0, "w2"),
        ("pi11", "w1", 1.0, "X1"),
        ("pi12", "w2", 1.0, "X1"),
        ("pi12", "w1", 1.0, "X2"),
        ("w2", "pi11", 1.0, "X2"),
    ],
};

fn build(t: &Table) -> GradedSymbol {
    let mut labels: Vec<String> = Vec::new();
    let mut degrees = Vec::new();
    for (names, g) in [(&t.g1[..], -1), (&t.g2[..], -2), (&G3[..], -3), (&["X0"][..], -4)] {
        for n in names {
            labels.push(n.to_string());
            degrees.push(g);
        }
    }
    let n = labels.len();
    let idx = |s: &str| labels.iter().position(|l| l == s).expect("label in table");
    let mut c = vec![vec![vec![0.0; n]; n]; n];
    for &(a, b, v, e) in t.brackets {
        let (a, b, e) = (idx(a), idx(b), idx(e));
        c[a][b][e] += v;
        c[b][a][e] -= v;
    }
    GradedSymbol { labels, degrees, constants: c, grading_residual: 0.0 }
}

/// The model algebra; `None` for a stratum the type does not have.
pub fn reference_symbol(r: Reference) -> Option<GradedSymbol> {
    let t = match (r.kind, r.stratum) {
        (Rank4Kind::HyperbolicType, 0) => &HYP_M0,
        (Rank4Kind::HyperbolicType, 1) => &HYP_M1,
        (Rank4Kind::HyperbolicType, 2) => &HYP_M2,
        (Rank4Kind::ParabolicType, 0) => &PAR_M0,
        (Rank4Kind::ParabolicType, 1) => &PAR_M1,
        (Rank4Kind::ParabolicType, 2) => &PAR_M2,
        (Rank4Kind::EllipticType, 0) => &ELL_M0,
        (Rank4Kind::EllipticType, 2) => &ELL_M2,
        _ => return None,
    };
    Some(build(t))
}

#[derive(Clone, Debug, Serialize)]
pub struct SymbolComparison {
    pub reference: String,
    pub computed: SymbolFingerprint,
    pub expected: SymbolFingerprint,
    /// `(check name, passed)`
    pub checks: Vec<(String, bool)>,
    pub matched: bool,
}

pub fn compare_symbol(gs: &GradedSymbol, r: Reference) -> Result<SymbolComparison, TanakaError> {
    let reference = reference_symbol(r).ok_or(TanakaError::Dimension { got: Vec::new(), want: Vec::new() })?;
    let computed = gs.fingerprint();
    let expected = reference.fingerprint();
    if computed.graded_dims != expected.graded_dims {
        return Err(TanakaError::Dimension { got: computed.graded_dims.to_vec(), want: expected.graded_dims.to_vec() });
    }
    let mut checks = vec![("graded_dims".to_string(), true)];
    for (a, b) in computed.bracket_image_dims.iter().zip(&expected.bracket_image_dims) {
        checks.push((format!("image[{},{}]", a.0 .0, a.0 .1), a.1 == b.1));
    }
    for (i, p) in [-2, -3, -4].iter().enumerate() {
        checks.push((format!("generating[{p}]"), computed.generating_condition[i] == expected.generating_condition[i]));
    }
    for (i, q) in [-1, -2, -3].iter().enumerate() {
        checks.push((format!("centralizer[{q}]"), computed.centralizer_dims[i] == expected.centralizer_dims[i]));
    }
    let matched = checks.iter().all(|c| c.1);
    Ok(SymbolComparison { reference: r.to_string(), computed, expected, checks, matched })
}
