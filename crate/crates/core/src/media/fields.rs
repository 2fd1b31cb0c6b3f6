//! Per-region coefficient rules.

use std::sync::Arc;

use super::maps::Diffeomorphism;
use super::tensor::Sym2;
use super::MediaError;
use crate::geometry::{Point2, RegionTag};

/// Rule producing a symmetric tensor at a point.
#[derive(Clone, Debug, PartialEq)]
pub enum TensorRule {
    Constant(Sym2),
    /// `T_*a(y) = DT a DTᵀ / |det DT|` evaluated at `x = T⁻¹(y)`.
    PushForward { map: Arc<Diffeomorphism>, inner: Arc<TensorRule> },
}

/// Rule producing a real scalar at a point.
#[derive(Clone, Debug, PartialEq)]
pub enum ScalarRule {
    Constant(f64),
    /// `radius⁴ / |x|⁴`.
    InverseFourth { radius: f64 },
    /// `T_*σ(y) = σ / |det DT|` evaluated at `x = T⁻¹(y)`.
    PushForward { map: Arc<Diffeomorphism>, inner: Arc<ScalarRule> },
}

impl TensorRule {
    pub fn push(map: &Diffeomorphism, inner: TensorRule) -> TensorRule {
        TensorRule::PushForward { map: Arc::new(map.clone()), inner: Arc::new(inner) }
    }

    pub fn eval(&self, p: Point2) -> Result<Sym2, MediaError> {
        match self {
            TensorRule::Constant(a) => Ok(*a),
            TensorRule::PushForward { map, inner } => {
                let x = map.inverse(p)?;
                let d = map.jacobian(x)?;
                let a = inner.eval(x)?;
                Ok(d.congruence(&a).scale(1.0 / d.det().abs()))
            }
        }
    }
}

impl ScalarRule {
    pub fn push(map: &Diffeomorphism, inner: ScalarRule) -> ScalarRule {
        ScalarRule::PushForward { map: Arc::new(map.clone()), inner: Arc::new(inner) }
    }

    pub fn eval(&self, p: Point2) -> Result<f64, MediaError> {
        match self {
            ScalarRule::Constant(c) => Ok(*c),
            ScalarRule::InverseFourth { radius } => {
                let r2 = p.norm_sq();
                if !(r2 > 0.0) {
                    return Err(MediaError::NonFinite("inverse-fourth profile at the origin".into()));
                }
                Ok(radius.powi(4) / (r2 * r2))
            }
            ScalarRule::PushForward { map, inner } => {
                let x = map.inverse(p)?;
                let d = map.jacobian(x)?;
                Ok(inner.eval(x)? / d.det().abs())
            }
        }
    }
}

/// Rules indexed by region tag.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionRules<R> {
    rules: Vec<Option<R>>,
}

pub type TensorField = RegionRules<TensorRule>;
pub type ScalarField = RegionRules<ScalarRule>;

impl<R: Clone> RegionRules<R> {
    pub fn uniform(rule: R) -> Self {
        Self { rules: vec![Some(rule); RegionTag::ALL.len()] }
    }

    pub fn empty() -> Self {
        Self { rules: vec![None; RegionTag::ALL.len()] }
    }

    pub fn set(&mut self, tag: RegionTag, rule: R) -> &mut Self {
        self.rules[tag.code() as usize] = Some(rule);
        self
    }

    pub fn with(mut self, tag: RegionTag, rule: R) -> Self {
        self.set(tag, rule);
        self
    }

    pub fn get(&self, tag: RegionTag) -> Result<&R, MediaError> {
        self.rules[tag.code() as usize].as_ref().ok_or(MediaError::MissingRegion(tag))
    }
}

impl TensorField {
    pub fn eval(&self, tag: RegionTag, p: Point2) -> Result<Sym2, MediaError> {
        let a = self.get(tag)?.eval(p)?;
        if !a.is_finite() {
            return Err(MediaError::NonFinite(format!("tensor in {tag} at ({}, {})", p.x, p.y)));
        }
        Ok(a)
    }
}

impl ScalarField {
    pub fn eval(&self, tag: RegionTag, p: Point2) -> Result<f64, MediaError> {
        let s = self.get(tag)?.eval(p)?;
        if !s.is_finite() {
            return Err(MediaError::NonFinite(format!("scalar in {tag} at ({}, {})", p.x, p.y)));
        }
        Ok(s)
    }
}
