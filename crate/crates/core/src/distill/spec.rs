use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cyclic::{CyclicDescriptor, GranularityKind};
use crate::harmony::{PairClassification, Verdict};

use super::{CellSummaries, DistillError, LetterValue, SMALL_CELL};

pub const PLOT_SPEC_FORMAT: &str = "tempogran-plot-spec/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Geometry {
    QuantileArea,
    Box,
    ViolinLikeDensity,
    LetterValueCounts,
}

impl Geometry {
    pub const ALL: [Geometry; 4] =
        [Geometry::QuantileArea, Geometry::Box, Geometry::ViolinLikeDensity, Geometry::LetterValueCounts];

    pub fn as_str(self) -> &'static str {
        match self {
            Geometry::QuantileArea => "quantile-area",
            Geometry::Box => "box",
            Geometry::ViolinLikeDensity => "violin-like-density",
            Geometry::LetterValueCounts => "letter-value-counts",
        }
    }
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Geometry {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Geometry::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| format!("unknown geometry `{s}`; expected one of quantile-area, box, violin-like-density, letter-value-counts"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataReference {
    pub source: Option<String>,
    pub response: String,
    /// Non-missing observations summarized.
    pub observations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mapping {
    pub granularity: String,
    pub kind: GranularityKind,
    pub levels: Vec<String>,
}

impl Mapping {
    fn of(d: &CyclicDescriptor) -> Self {
        Mapping { granularity: d.name().to_string(), kind: d.kind(), levels: d.level_labels() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayerKind {
    Band,
    Line,
    Box,
    LetterValues,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub kind: LayerKind,
    /// Probabilities bounding a band or box, or the single line probability.
    pub probs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSeries {
    pub facet: String,
    pub x: String,
    pub n: u64,
    /// Values aligned with the document's probabilities; empty when `n = 0`.
    pub quantiles: Vec<f64>,
    pub mean: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub letter_values: Vec<LetterValue>,
}

/// Self-contained declarative display document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotSpec {
    pub format: String,
    pub data: DataReference,
    pub x: Mapping,
    pub facet: Mapping,
    pub geometry: Geometry,
    pub probabilities: Vec<f64>,
    pub layers: Vec<Layer>,
    /// Facet-major, then x.
    pub cells: Vec<CellSeries>,
    pub warnings: Vec<String>,
}

impl PlotSpec {
    pub fn to_json(&self) -> Result<String, DistillError> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self, DistillError> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Optional context for [`emit_plot_spec`].
#[derive(Debug, Clone, Default)]
pub struct PlotOptions<'a> {
    pub source: Option<String>,
    /// Classification of the pair with `facet` as rows and `x` as columns.
    pub classification: Option<&'a PairClassification>,
    /// Emit even when the pair clashes.
    pub force: bool,
}

fn layers_for(geometry: Geometry, probs: &[f64]) -> Result<Vec<Layer>, DistillError> {
    let unsupported = |reason: &str| DistillError::UnsupportedGeometry { geometry, reason: reason.to_string() };
    let has = |p: f64| probs.iter().any(|q| (q - p).abs() < 1e-12);
    match geometry {
        Geometry::ViolinLikeDensity => Err(unsupported("density estimates are not computed; use quantile-area or box")),
        Geometry::Box => {
            if has(0.25) && has(0.5) && has(0.75) {
                Ok(vec![Layer { kind: LayerKind::Box, probs: vec![0.25, 0.5, 0.75] }])
            } else {
                Err(unsupported("needs the 0.25, 0.5 and 0.75 quantiles"))
            }
        }
        Geometry::QuantileArea => {
            let mut layers: Vec<Layer> = probs
                .iter()
                .filter(|&&p| p < 0.5 && has(1.0 - p))
                .map(|&p| Layer { kind: LayerKind::Band, probs: vec![p, 1.0 - p] })
                .collect();
            if has(0.5) {
                layers.push(Layer { kind: LayerKind::Line, probs: vec![0.5] });
            }
            if layers.is_empty() {
                return Err(unsupported("needs the median or a symmetric pair of quantiles"));
            }
            Ok(layers)
        }
        Geometry::LetterValueCounts => Ok(vec![Layer { kind: LayerKind::LetterValues, probs: Vec::new() }]),
    }
}

/// Build the display document for `summaries` with `x` on the horizontal axis
/// and one panel per `facet` level.
pub fn emit_plot_spec(
    summaries: &CellSummaries,
    x: &CyclicDescriptor,
    facet: &CyclicDescriptor,
    v: &str,
    geometry: Geometry,
    opts: &PlotOptions<'_>,
) -> Result<PlotSpec, DistillError> {
    if summaries.cells.is_empty() {
        return Err(DistillError::EmptySummaries);
    }
    for (expected, found) in [(x.name(), &summaries.x), (facet.name(), &summaries.facet), (v, &summaries.response)] {
        if expected != found {
            return Err(DistillError::DescriptorMismatch { expected: expected.to_string(), found: found.clone() });
        }
    }
    let (k, l) = (facet.level_count(), x.level_count());
    if summaries.cells.len() as u64 != k * l {
        return Err(DistillError::DescriptorMismatch {
            expected: format!("{k} x {l} cells"),
            found: format!("{} cells", summaries.cells.len()),
        });
    }
    let layers = layers_for(geometry, &summaries.probs)?;
    if geometry == Geometry::LetterValueCounts && summaries.cells.iter().all(|c| c.letter_values.is_empty()) {
        return Err(DistillError::UnsupportedGeometry {
            geometry,
            reason: "no cell holds enough observations for letter values".into(),
        });
    }

    let empty = summaries.cells.iter().filter(|c| c.n == 0).count();
    let mut warnings = Vec::new();
    let clash = match opts.classification {
        Some(c) => c.verdict == Verdict::Clash,
        None => empty > 0,
    };
    if clash {
        if !opts.force {
            return Err(DistillError::ClashRefused { facet: facet.name().to_string(), x: x.name().to_string(), empty });
        }
        warnings.push(format!("forced: `{}` and `{}` clash; {empty} cells are empty", facet.name(), x.name()));
    }
    if let Some(c) = opts.classification.filter(|c| c.verdict == Verdict::NearClash) {
        let f = facet.level_labels();
        let xl = x.level_labels();
        let cited: Vec<String> = c.evidence.iter().map(|e| format!("({}, {})", f[e.k], xl[e.l])).collect();
        warnings.push(format!("near-clash: rare level combinations {}", cited.join(", ")));
    }
    let small: Vec<String> = summaries
        .cells
        .iter()
        .filter(|c| c.n > 0 && c.n < SMALL_CELL)
        .map(|c| format!("({}, {}): n={}", c.facet_label, c.x_label, c.n))
        .collect();
    if !small.is_empty() {
        let shown = small.iter().take(5).cloned().collect::<Vec<_>>().join(", ");
        warnings.push(format!("{} cells have fewer than {SMALL_CELL} observations, e.g. {shown}", small.len()));
    }

    let cells = summaries
        .cells
        .iter()
        .map(|c| CellSeries {
            facet: c.facet_label.clone(),
            x: c.x_label.clone(),
            n: c.n,
            quantiles: c.quantiles.iter().map(|(_, q)| *q).collect(),
            mean: c.mean,
            min: c.min,
            max: c.max,
            letter_values: if geometry == Geometry::LetterValueCounts { c.letter_values.clone() } else { Vec::new() },
        })
        .collect();
    Ok(PlotSpec {
        format: PLOT_SPEC_FORMAT.to_string(),
        data: DataReference {
            source: opts.source.clone(),
            response: v.to_string(),
            observations: summaries.cells.iter().map(|c| c.n).sum(),
        },
        x: Mapping::of(x),
        facet: Mapping::of(facet),
        geometry,
        probabilities: summaries.probs.clone(),
        layers,
        cells,
        warnings,
    })
}
