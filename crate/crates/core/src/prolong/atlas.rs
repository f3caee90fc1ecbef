//! Coordinates on the rank-2 prolongation of `J²` and the model equations inside it.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;

use super::ProlongError;
use crate::contact::PdeSurface;
use crate::expr::{parse_expr, Chart, Expr};
use crate::forms::Form;
use crate::system::PfaffianSystem;

const BASE: [&str; 8] = ["x", "y", "z", "p", "q", "r", "s", "t"];
const CONTACT: [(&str, &str); 3] = [("w0", "dz - p*dx - q*dy"), ("w1", "dp - r*dx - s*dy"), ("w2", "dq - s*dx - t*dy")];

/// One of the six open sets `V_ab` of `Σ(J²)`.
#[derive(Clone, Debug)]
pub struct SigmaJ2Chart {
    pub id: char,
    pub label: &'static str,
    /// the two base coordinates whose differentials stay independent on the plane
    pub independent: [&'static str; 2],
    pub fiber: [&'static str; 4],
    pub chart: Arc<Chart>,
    pub generators: Vec<Form>,
    pub generator_labels: Vec<String>,
}

struct Spec {
    id: char,
    label: &'static str,
    independent: [&'static str; 2],
    fiber: [&'static str; 4],
    forms: [(&'static str, &'static str); 3],
}

const SPECS: [Spec; 6] = [
    Spec {
        id: 'A',
        label: "V_xy",
        independent: ["x", "y"],
        fiber: ["p111", "p112", "p122", "p222"],
        forms: [
            ("w_r", "dr - p111*dx - p112*dy"),
            ("w_s", "ds - p112*dx - p122*dy"),
            ("w_t", "dt - p122*dx - p222*dy"),
        ],
    },
    Spec {
        id: 'B',
        label: "V_xt",
        independent: ["x", "t"],
        fiber: ["a", "B", "c", "e"],
        forms: [
            ("w_y", "dy - a*dx - B*dt"),
            ("w_r", "dr - c*dx - (a^2 + e*B)*dt"),
            ("w_s", "ds - e*dx + a*dt"),
        ],
    },
    Spec {
        id: 'C',
        label: "V_yr",
        independent: ["y", "r"],
        fiber: ["a", "B", "c", "e"],
        forms: [
            ("w_x", "dx - a*dy - B*dr"),
            ("w_s", "ds - c*dy + a*dr"),
            ("w_t", "dt - e*dy - (a^2 + B*c)*dr"),
        ],
    },
    Spec {
        id: 'D',
        label: "V_rs",
        independent: ["r", "s"],
        fiber: ["B", "D", "E", "F"],
        forms: [
            ("w_x", "dx - (D*E - B*F)*dr - B*ds"),
            ("w_y", "dy - B*dr - D*ds"),
            ("w_t", "dt - E*dr - F*ds"),
        ],
    },
    Spec {
        id: 'E',
        label: "V_rt",
        independent: ["r", "t"],
        fiber: ["A", "D", "E", "F"],
        forms: [
            ("w_x", "dx - A*dr + ((E*D + F^2*A)/(1 - E*F))*dt"),
            ("w_y", "dy + ((E^2*D + F*A)/(1 - E*F))*dr - D*dt"),
            ("w_s", "ds - E*dr - F*dt"),
        ],
    },
    Spec {
        id: 'F',
        label: "V_st",
        independent: ["s", "t"],
        fiber: ["A", "B", "E", "F"],
        forms: [
            ("w_x", "dx - A*ds - B*dt"),
            ("w_y", "dy - B*ds + (B*E - A*F)*dt"),
            ("w_r", "dr - E*ds - F*dt"),
        ],
    },
];

fn build(spec: &Spec) -> SigmaJ2Chart {
    let mut names: Vec<&str> = BASE.to_vec();
    names.extend(spec.fiber);
    let chart = Arc::new(Chart::new(&names).unwrap());
    let mut generators = Vec::new();
    let mut generator_labels = Vec::new();
    for (label, text) in CONTACT.iter().chain(spec.forms.iter()) {
        generators.push(Form::parse_one_form(text, &chart).expect("atlas forms parse"));
        generator_labels.push(label.to_string());
    }
    SigmaJ2Chart {
        id: spec.id,
        label: spec.label,
        independent: spec.independent,
        fiber: spec.fiber,
        chart,
        generators,
        generator_labels,
    }
}

/// The six charts `A = V_xy (≅ J³)`, `B = V_xt`, `C = V_yr`, `D = V_rs`, `E = V_rt`, `F = V_st`.
pub fn sigma_j2_atlas() -> Vec<SigmaJ2Chart> {
    SPECS.iter().map(build).collect()
}

pub fn atlas_chart(id: &str) -> Result<SigmaJ2Chart, ProlongError> {
    SPECS
        .iter()
        .find(|s| s.id.to_string() == id || s.label == id || s.label.trim_start_matches("V_") == id)
        .map(build)
        .ok_or_else(|| ProlongError::UnknownChart(id.to_string()))
}

impl SigmaJ2Chart {
    /// The canonical system as a Pfaffian system; the complement is the two
    /// independent differentials followed by the fiber differentials.
    pub fn system(&self) -> PfaffianSystem {
        let mut complement_labels: Vec<String> = self.independent.iter().map(|n| format!("d{n}")).collect();
        complement_labels.extend(self.fiber.iter().map(|n| format!("d{n}")));
        let complement = self.independent.iter().chain(self.fiber.iter()).map(|n| Form::d_coord(&self.chart, n)).collect();
        PfaffianSystem {
            name: format!("Sigma(J2) {}", self.label),
            chart: self.chart.clone(),
            level_sets: Vec::new(),
            generators: self.generators.clone(),
            generator_labels: self.generator_labels.clone(),
            complement,
            complement_labels,
        }
    }

    pub fn generator(&self, label: &str) -> Option<&Form> {
        self.generator_labels.iter().position(|l| l == label).map(|i| &self.generators[i])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Wave,
    Parabolic,
    Laplace,
}

impl Model {
    pub const ALL: [Model; 3] = [Model::Wave, Model::Parabolic, Model::Laplace];

    /// The defining function `F` with `R = {F = 0}`.
    pub fn equation(self) -> &'static str {
        match self {
            Model::Wave => "s",
            Model::Parabolic => "r",
            Model::Laplace => "r + t",
        }
    }

    pub fn surface(self) -> PdeSurface {
        PdeSurface::parse(self.equation()).unwrap().named(&self.to_string())
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Wave => "wave",
            Model::Parabolic => "parabolic",
            Model::Laplace => "laplace",
        })
    }
}

impl FromStr for Model {
    type Err = ProlongError;

    fn from_str(s: &str) -> Result<Model, ProlongError> {
        match s {
            "wave" => Ok(Model::Wave),
            "parabolic" | "heat" => Ok(Model::Parabolic),
            "laplace" => Ok(Model::Laplace),
            _ => Err(ProlongError::UnlistedEmbedding { model: s.into(), chart: String::new() }),
        }
    }
}

/// A model's prolongation realized as a submanifold of one atlas chart.
#[derive(Clone, Debug)]
pub struct Embedding {
    pub model: Model,
    pub atlas: SigmaJ2Chart,
    /// eliminated coordinates and their values
    pub cut: Vec<(String, Expr)>,
    /// chart of the submanifold (atlas coordinates minus the eliminated ones)
    pub chart: Arc<Chart>,
    /// induced generators on the submanifold
    pub generators: Vec<Form>,
    pub generator_labels: Vec<String>,
}

struct EmbedSpec {
    model: Model,
    chart: char,
    cut: [(&'static str, &'static str); 3],
    keep: [&'static str; 5],
}

const EMBEDDINGS: [EmbedSpec; 7] = [
    EmbedSpec { model: Model::Wave, chart: 'A', cut: [("s", "0"), ("p112", "0"), ("p122", "0")], keep: ["w0", "w1", "w2", "w_r", "w_t"] },
    EmbedSpec { model: Model::Wave, chart: 'B', cut: [("s", "0"), ("a", "0"), ("e", "0")], keep: ["w0", "w1", "w2", "w_y", "w_r"] },
    EmbedSpec { model: Model::Wave, chart: 'E', cut: [("s", "0"), ("E", "0"), ("F", "0")], keep: ["w0", "w1", "w2", "w_x", "w_y"] },
    EmbedSpec { model: Model::Parabolic, chart: 'A', cut: [("r", "0"), ("p111", "0"), ("p112", "0")], keep: ["w0", "w1", "w2", "w_s", "w_t"] },
    EmbedSpec { model: Model::Parabolic, chart: 'F', cut: [("r", "0"), ("E", "0"), ("F", "0")], keep: ["w0", "w1", "w2", "w_x", "w_y"] },
    EmbedSpec { model: Model::Laplace, chart: 'A', cut: [("t", "-r"), ("p122", "-p111"), ("p222", "-p112")], keep: ["w0", "w1", "w2", "w_r", "w_s"] },
    EmbedSpec { model: Model::Laplace, chart: 'D', cut: [("t", "-r"), ("E", "-1"), ("F", "0")], keep: ["w0", "w1", "w2", "w_x", "w_y"] },
];

/// Listed `(model, chart)` pairs.
pub fn embedding_pairs() -> Vec<(Model, char)> {
    EMBEDDINGS.iter().map(|e| (e.model, e.chart)).collect()
}

pub fn embed_model(model: Model, chart: &str) -> Result<Embedding, ProlongError> {
    let atlas = atlas_chart(chart)?;
    let spec = EMBEDDINGS
        .iter()
        .find(|e| e.model == model && e.chart == atlas.id)
        .ok_or_else(|| ProlongError::UnlistedEmbedding { model: model.to_string(), chart: atlas.label.to_string() })?;
    let cut: Vec<(String, Expr)> =
        spec.cut.iter().map(|(n, v)| (n.to_string(), parse_expr(v, &atlas.chart).unwrap())).collect();
    let kept: Vec<&str> =
        atlas.chart.names().iter().map(|n| &**n).filter(|n| !cut.iter().any(|(c, _)| c == n)).collect();
    let sub = Arc::new(Chart::new(&kept).unwrap());
    let map: Vec<Expr> = atlas
        .chart
        .names()
        .iter()
        .map(|n| cut.iter().find(|(c, _)| **c == **n).map(|(_, v)| v.clone()).unwrap_or_else(|| Expr::var(n)))
        .collect();
    let mut generators = Vec::new();
    for label in spec.keep {
        let form = atlas.generator(label).expect("listed generator");
        generators.push(form.pullback(&sub, &map)?);
    }
    Ok(Embedding {
        model,
        cut,
        chart: sub,
        generators,
        generator_labels: spec.keep.iter().map(|s| s.to_string()).collect(),
        atlas,
    })
}

impl Embedding {
    /// Defining equations `coordinate − value = 0` of the submanifold.
    pub fn cut_equations(&self) -> Vec<Expr> {
        self.cut.iter().map(|(n, v)| Expr::var(n).sub(v)).collect()
    }

    /// Pullbacks of every atlas generator to the submanifold.
    pub fn all_pullbacks(&self) -> Result<Vec<(String, Form)>, ProlongError> {
        let map: Vec<Expr> = self
            .atlas
            .chart
            .names()
            .iter()
            .map(|n| self.cut.iter().find(|(c, _)| **c == **n).map(|(_, v)| v.clone()).unwrap_or_else(|| Expr::var(n)))
            .collect();
        let mut out = Vec::new();
        for (l, f) in self.atlas.generator_labels.iter().zip(&self.atlas.generators) {
            out.push((l.clone(), f.pullback(&self.chart, &map)?));
        }
        Ok(out)
    }

    pub fn generator(&self, label: &str) -> Option<&Form> {
        self.generator_labels.iter().position(|l| l == label).map(|i| &self.generators[i])
    }
}
