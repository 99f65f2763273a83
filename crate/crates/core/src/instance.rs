//! Instance files: one ambient phi-module with its parameters and search
//! limits, plus the hash that ties artifacts to it.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::algebra::{FieldCtx, Series, SeriesRecord};
use crate::error::{Error, Result};
use crate::moduli::SearchBounds;
use crate::phimod::{
    pm_ambient_irreducible, pm_ambient_reducible, Ambient, InstanceParams, MatrixTuple, MatrixTupleRecord,
};

/// Upper limit for automatic precision doubling.
pub const MAX_PRECISION: i64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AmbientSpec {
    /// Units `alphas` given as residue lists.
    Irreducible {
        s: u64,
        alphas: Vec<Vec<u32>>,
    },
    Reducible {
        a: Vec<SeriesRecord>,
        b: Vec<SeriesRecord>,
        c: Vec<SeriesRecord>,
    },
    Raw {
        blocks: MatrixTupleRecord,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub p: u32,
    pub n: usize,
    pub e: i64,
    /// Monic modulus of `F` over `F_p`, lowest coefficient first.
    pub modulus: Vec<u32>,
    pub ambient: AmbientSpec,
    #[serde(default)]
    pub bounds: SearchBounds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<i64>,
}

/// A validated instance.
#[derive(Debug, Clone)]
pub struct Instance {
    pub file: InstanceFile,
    pub params: InstanceParams,
    pub ambient: Ambient,
    pub hash: String,
}

#[derive(Serialize)]
struct HashedPart<'a> {
    p: u32,
    n: usize,
    e: i64,
    modulus: &'a [u32],
    ambient: &'a AmbientSpec,
}

fn series_list(ctx: &Arc<FieldCtx>, xs: &[SeriesRecord]) -> Result<Vec<Series>> {
    xs.iter().map(|r| Series::from_record(ctx, r)).collect()
}

impl InstanceFile {
    /// Irreducible normal form over the degree-`2n` field with the default
    /// modulus and all units equal to one.
    pub fn irreducible(p: u32, n: usize, e: i64, s: u64) -> InstanceFile {
        InstanceFile {
            p,
            n,
            e,
            modulus: default_modulus(p, 2 * n),
            ambient: AmbientSpec::Irreducible { s, alphas: vec![vec![1]; n] },
            bounds: SearchBounds::default(),
            precision: None,
        }
    }

    /// Upper triangular ambient over the field of `ctx`.
    pub fn reducible(ctx: &Arc<FieldCtx>, e: i64, a: &[Series], b: &[Series], c: &[Series]) -> InstanceFile {
        let rec = |xs: &[Series]| xs.iter().map(Series::to_record).collect();
        InstanceFile {
            p: ctx.p(),
            n: a.len(),
            e,
            modulus: ctx.modulus().to_vec(),
            ambient: AmbientSpec::Reducible { a: rec(a), b: rec(b), c: rec(c) },
            bounds: SearchBounds::default(),
            precision: None,
        }
    }

    /// Digest of the mathematical content. Search limits and the precision
    /// override do not change the instance, so they are left out.
    pub fn hash(&self) -> String {
        let part = HashedPart { p: self.p, n: self.n, e: self.e, modulus: &self.modulus, ambient: &self.ambient };
        let bytes = serde_json::to_vec(&part).expect("instance serializes");
        hex::encode(Sha256::digest(bytes))
    }

    pub fn build(&self) -> Result<Instance> {
        if self.n == 0 {
            return Err(Error::InvalidInstance("n must be positive".into()));
        }
        let ctx = FieldCtx::new(self.p, &self.modulus)?;
        let params = InstanceParams::new(ctx.clone(), self.n, self.e)?;
        let ambient = match &self.ambient {
            AmbientSpec::Irreducible { s, alphas } => {
                let codes = alphas.iter().map(|c| ctx.code_from_coeffs(c)).collect::<Result<Vec<_>>>()?;
                pm_ambient_irreducible(&params, *s, &codes)?
            }
            AmbientSpec::Reducible { a, b, c } => {
                pm_ambient_reducible(&params, &series_list(&ctx, a)?, &series_list(&ctx, b)?, &series_list(&ctx, c)?)?
            }
            AmbientSpec::Raw { blocks } => {
                let t = MatrixTuple::from_record(&ctx, blocks)?;
                if t.len() != self.n {
                    return Err(Error::InvalidInstance(format!("expected {} blocks, got {}", self.n, t.len())));
                }
                Ambient::raw(t)?
            }
        };
        let params = match self.precision {
            Some(p) if p <= 0 => return Err(Error::InvalidInstance("precision must be positive".into())),
            Some(p) => params.with_precision(p),
            None => params.with_default_precision(ambient.exponent_bound()),
        };
        Ok(Instance { file: self.clone(), params, ambient, hash: self.hash() })
    }
}

impl Instance {
    pub fn from_json(s: &str) -> Result<Instance> {
        let file: InstanceFile =
            serde_json::from_str(s).map_err(|e| Error::InvalidInstance(format!("instance file: {e}")))?;
        file.build()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.file).expect("instance serializes")
    }

    pub fn tuple(&self) -> &MatrixTuple {
        &self.ambient.tuple
    }

    pub fn ctx(&self) -> &Arc<FieldCtx> {
        &self.params.field
    }

    pub fn with_precision(&self, precision: i64) -> Instance {
        Instance { params: self.params.clone().with_precision(precision), ..self.clone() }
    }

    /// Run `f`, doubling the working precision while it reports
    /// `PrecisionExhausted`, up to [`MAX_PRECISION`].
    pub fn with_retry<T>(&self, mut f: impl FnMut(&Instance) -> Result<T>) -> Result<T> {
        let mut inst = self.clone();
        loop {
            match f(&inst) {
                Err(Error::PrecisionExhausted(_)) if inst.params.precision * 2 <= MAX_PRECISION => {
                    inst = inst.with_precision(inst.params.precision * 2);
                }
                other => return other,
            }
        }
    }
}

/// Lexicographically first monic irreducible polynomial of degree `m` over
/// `F_p`, lowest coefficient first.
pub fn default_modulus(p: u32, m: usize) -> Vec<u32> {
    if m == 1 {
        return vec![0, 1];
    }
    let total = (p as u64).pow(m as u32);
    for idx in 0..total {
        let mut f = Vec::with_capacity(m + 1);
        let mut x = idx;
        for _ in 0..m {
            f.push((x % p as u64) as u32);
            x /= p as u64;
        }
        f.push(1);
        if crate::algebra::field::is_irreducible(&f, p) {
            return f;
        }
    }
    unreachable!("irreducible polynomials exist in every degree")
}
