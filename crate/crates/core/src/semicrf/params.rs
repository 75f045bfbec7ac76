use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::corpus::LabelSet;
use crate::error::{Error, Result};
use crate::spanrep::{ContextConfig, SpanFeatureVariant};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Learnable parameters of the span scorer and the label transition model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// `|Y| × D_span` span-scoring weights.
    pub weights: Array2<f64>,
    /// Per-label span bias.
    pub bias: Array1<f64>,
    /// `transitions[[prev, next]]` scores adjacent span labels, including `prev == next`.
    pub transitions: Array2<f64>,
    /// Score of the first span's label.
    pub start: Array1<f64>,
    pub variant: SpanFeatureVariant,
    pub lmax: usize,
    pub context: ContextConfig,
    pub labels: LabelSet,
    /// Input sentence embedding dimension.
    pub dim: usize,
}

impl ModelParams {
    pub fn zeros(
        labels: LabelSet,
        dim: usize,
        variant: SpanFeatureVariant,
        lmax: usize,
        context: ContextConfig,
    ) -> Self {
        assert!(lmax >= 1, "maximum span length must be positive");
        let y = labels.len();
        let span_dim = variant.feature_dim(context.output_dim(dim));
        ModelParams {
            weights: Array2::zeros((y, span_dim)),
            bias: Array1::zeros(y),
            transitions: Array2::zeros((y, y)),
            start: Array1::zeros(y),
            variant,
            lmax,
            context,
            labels,
            dim,
        }
    }

    /// Weights, transitions and start scores uniform in (-0.1, 0.1); bias zero.
    pub fn init<R: Rng + ?Sized>(
        labels: LabelSet,
        dim: usize,
        variant: SpanFeatureVariant,
        lmax: usize,
        context: ContextConfig,
        rng: &mut R,
    ) -> Self {
        let mut params = Self::zeros(labels, dim, variant, lmax, context);
        let dist = Uniform::new(-0.1, 0.1).expect("valid range");
        params.weights.iter_mut().for_each(|w| *w = dist.sample(rng));
        params.transitions.iter_mut().for_each(|w| *w = dist.sample(rng));
        params.start.iter_mut().for_each(|w| *w = dist.sample(rng));
        params
    }

    pub fn num_labels(&self) -> usize {
        self.labels.len()
    }

    /// Contextualized row dimension.
    pub fn row_dim(&self) -> usize {
        self.context.output_dim(self.dim)
    }

    pub fn span_dim(&self) -> usize {
        self.variant.feature_dim(self.row_dim())
    }

    pub fn validate(&self) -> Result<()> {
        let y = self.num_labels();
        let check = |context: &str, expected: usize, found: usize| {
            if expected == found {
                Ok(())
            } else {
                Err(Error::DimensionMismatch {
                    context: context.into(),
                    expected,
                    found,
                })
            }
        };
        check("weight rows", y, self.weights.nrows())?;
        check("weight columns", self.span_dim(), self.weights.ncols())?;
        check("bias", y, self.bias.len())?;
        check("transition rows", y, self.transitions.nrows())?;
        check("transition columns", y, self.transitions.ncols())?;
        check("start", y, self.start.len())?;
        if self.lmax == 0 {
            return Err(Error::InvalidConfig("lmax must be positive".into()));
        }
        if self.dim == 0 {
            return Err(Error::InvalidConfig(
                "embedding dimension must be positive".into(),
            ));
        }
        let finite = self.weights.iter().all(|v| v.is_finite())
            && self.bias.iter().all(|v| v.is_finite())
            && self.transitions.iter().all(|v| v.is_finite())
            && self.start.iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite("model parameters".into()));
        }
        Ok(())
    }

    /// Relabels the model: old label `i` becomes new label `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let y = self.num_labels();
        let mut seen = vec![false; y];
        if perm.len() != y
            || perm
                .iter()
                .any(|&p| p >= y || std::mem::replace(&mut seen[p], true))
        {
            return Err(Error::InvalidConfig(
                "not a permutation of the label indices".into(),
            ));
        }
        let mut out = self.clone();
        let mut names = vec![String::new(); y];
        for old in 0..y {
            let new = perm[old];
            names[new] = self.labels.name(old).to_string();
            out.weights.row_mut(new).assign(&self.weights.row(old));
            out.bias[new] = self.bias[old];
            out.start[new] = self.start[old];
            for (old2, &new2) in perm.iter().enumerate() {
                out.transitions[[new, new2]] = self.transitions[[old, old2]];
            }
        }
        out.labels = LabelSet::new(names)?;
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&ModelFile::from(self)).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))?;
        file.try_into()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// On-disk model layout.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    version: u32,
    d: usize,
    labels: LabelSet,
    variant: SpanFeatureVariant,
    lmax: usize,
    context_radius: usize,
    #[serde(rename = "W")]
    w: Vec<Vec<f64>>,
    b: Vec<f64>,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    start: Vec<f64>,
}

fn rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn matrix(rows: Vec<Vec<f64>>, ncols: usize, what: &str) -> Result<Array2<f64>> {
    let nrows = rows.len();
    if let Some(bad) = rows.iter().find(|r| r.len() != ncols) {
        return Err(Error::ModelFormat(format!(
            "{what}: ragged row of length {} (expected {ncols})",
            bad.len()
        )));
    }
    Ok(Array2::from_shape_vec((nrows, ncols), rows.into_iter().flatten().collect()).expect("checked shape"))
}

impl From<&ModelParams> for ModelFile {
    fn from(p: &ModelParams) -> Self {
        ModelFile {
            version: MODEL_FORMAT_VERSION,
            d: p.dim,
            labels: p.labels.clone(),
            variant: p.variant,
            lmax: p.lmax,
            context_radius: p.context.radius,
            w: rows(&p.weights),
            b: p.bias.to_vec(),
            a: rows(&p.transitions),
            start: p.start.to_vec(),
        }
    }
}

impl TryFrom<ModelFile> for ModelParams {
    type Error = Error;

    fn try_from(f: ModelFile) -> Result<Self> {
        if f.version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelFormat(format!("unsupported version {}", f.version)));
        }
        let y = f.labels.len();
        let context = ContextConfig::new(f.context_radius);
        let span_dim = f.variant.feature_dim(context.output_dim(f.d));
        let params = ModelParams {
            weights: matrix(f.w, span_dim, "W")?,
            bias: Array1::from(f.b),
            transitions: matrix(f.a, y, "A")?,
            start: Array1::from(f.start),
            variant: f.variant,
            lmax: f.lmax,
            context,
            labels: f.labels,
            dim: f.d,
        };
        params.validate()?;
        Ok(params)
    }
}
