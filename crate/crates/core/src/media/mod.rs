//! Coefficient layouts, planar maps, push-forwards and complementary media.
//!
//! A [`MediumSpec`] keeps the material tensor `A`, the scalar `Σ` and the set
//! of regions carrying the sign factor `−1 − iδ` separately; the loss enters
//! only through [`MediumSpec::s_delta`].

mod complementary;
mod fields;
mod maps;
mod tensor;

use std::fmt;

use thiserror::Error;

use crate::geometry::{GeometryConfig, GeometryError, Inclusion, Point2, RegionTag, SlabGeometry, WedgeBoundary};
use crate::C64;

pub use complementary::{build_doubly_complementary, verify_doubly_complementary, IdentityCheck, VerificationReport, VERIFY_TOL};
pub use fields::{RegionRules, ScalarField, ScalarRule, TensorField, TensorRule};
pub use maps::{compose, kelvin_map, power_map, power_value, Diffeomorphism, LogRadialReflection};
pub use tensor::{Mat2, Sym2};

/// Default ellipticity bound for objects and layouts.
pub const DEFAULT_LAMBDA: f64 = 1.0e3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MediaError {
    #[error("point ({x}, {y}) is outside the domain of {map}")]
    Domain { map: String, x: f64, y: f64 },
    #[error("no coefficient rule for region {0}")]
    MissingRegion(RegionTag),
    #[error("non-finite coefficient: {0}")]
    NonFinite(String),
    #[error("object violates ellipticity bounds: {0}")]
    Ellipticity(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Material of the object to be cloaked (or imaged).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObjectSpec {
    pub a: Sym2,
    pub sigma: f64,
}

impl ObjectSpec {
    /// Isotropic object `(c·I, c)`.
    pub fn contrast(c: f64) -> Self {
        Self { a: Sym2::scalar(c), sigma: c }
    }

    pub fn validate(&self, lambda: f64) -> Result<(), MediaError> {
        if !self.a.is_finite() || !self.sigma.is_finite() {
            return Err(MediaError::Ellipticity("non-finite object coefficients".into()));
        }
        let (lo, hi) = self.a.eigenvalues();
        if lo < 1.0 / lambda || hi > lambda {
            return Err(MediaError::Ellipticity(format!("eigenvalues [{lo}, {hi}] outside [1/{lambda}, {lambda}]")));
        }
        if self.sigma < 1.0 / lambda || self.sigma > lambda {
            return Err(MediaError::Ellipticity(format!("sigma = {} outside [1/{lambda}, {lambda}]", self.sigma)));
        }
        Ok(())
    }
}

/// Scenario layouts reproduced by the harness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScenarioKind {
    QuasistaticCloak,
    FreqCloak,
    SuperlensFull,
    SuperlensNoInnerLayer,
    CmCloakModified,
    CmCloakUnmodified,
    SlabDc,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 7] = [
        ScenarioKind::QuasistaticCloak,
        ScenarioKind::FreqCloak,
        ScenarioKind::SuperlensFull,
        ScenarioKind::SuperlensNoInnerLayer,
        ScenarioKind::CmCloakModified,
        ScenarioKind::CmCloakUnmodified,
        ScenarioKind::SlabDc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::QuasistaticCloak => "QUASISTATIC_CLOAK",
            ScenarioKind::FreqCloak => "FREQ_CLOAK",
            ScenarioKind::SuperlensFull => "SUPERLENS_FULL",
            ScenarioKind::SuperlensNoInnerLayer => "SUPERLENS_NO_INNER_LAYER",
            ScenarioKind::CmCloakModified => "CM_CLOAK_MODIFIED",
            ScenarioKind::CmCloakUnmodified => "CM_CLOAK_UNMODIFIED",
            ScenarioKind::SlabDc => "SLAB_DC",
        }
    }

    /// Command-line spelling, e.g. `quasistatic-cloak`.
    pub fn slug(self) -> String {
        self.name().to_ascii_lowercase().replace('_', "-")
    }

    /// Accepts either `QUASISTATIC_CLOAK` or `quasistatic-cloak`.
    pub fn from_name(s: &str) -> Option<ScenarioKind> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        Self::ALL.into_iter().find(|k| k.name() == norm)
    }

    /// Whether the scenario's δ → 0 limit is expected to hide the object.
    pub fn expects_cloaking(self) -> bool {
        !matches!(self, ScenarioKind::SuperlensFull | ScenarioKind::CmCloakUnmodified)
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which positive-coefficient problem a reference field solves.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReferenceKind {
    /// The field predicted as the δ → 0 limit outside the device.
    Predicted,
    /// The competing hypothesis used to show separation.
    Alternative,
}

/// Complete coefficient layout of one problem.
#[derive(Clone, Debug, PartialEq)]
pub struct MediumSpec {
    pub scenario: Option<ScenarioKind>,
    pub geometry: GeometryConfig,
    pub a: TensorField,
    pub sigma: ScalarField,
    /// Regions where `s_δ = −1 − iδ`.
    pub negative: Vec<RegionTag>,
    pub delta: f64,
    pub k: f64,
    pub lambda: f64,
}

impl MediumSpec {
    /// Homogeneous `(I, 1)` medium without sign change.
    pub fn homogeneous(geometry: GeometryConfig, k: f64) -> Self {
        Self {
            scenario: None,
            geometry,
            a: TensorField::uniform(TensorRule::Constant(Sym2::IDENTITY)),
            sigma: ScalarField::uniform(ScalarRule::Constant(1.0)),
            negative: Vec::new(),
            delta: 0.0,
            k,
            lambda: DEFAULT_LAMBDA,
        }
    }

    pub fn is_negative(&self, tag: RegionTag) -> bool {
        self.negative.contains(&tag)
    }

    /// Sign factor `s_δ` of region `tag`.
    pub fn s_delta(&self, tag: RegionTag) -> C64 {
        if self.is_negative(tag) {
            C64::new(-1.0, -self.delta)
        } else {
            C64::new(1.0, 0.0)
        }
    }

    /// Lossless sign `s_0` of region `tag`.
    pub fn s0(&self, tag: RegionTag) -> f64 {
        if self.is_negative(tag) {
            -1.0
        } else {
            1.0
        }
    }

    pub fn tensor(&self, tag: RegionTag, p: Point2) -> Result<Sym2, MediaError> {
        self.a.eval(tag, p)
    }

    pub fn scalar(&self, tag: RegionTag, p: Point2) -> Result<f64, MediaError> {
        self.sigma.eval(tag, p)
    }

    pub fn with_delta(&self, delta: f64) -> Self {
        let mut m = self.clone();
        m.delta = delta;
        m
    }

    pub fn with_negative(mut self, tags: &[RegionTag]) -> Self {
        self.negative = tags.to_vec();
        self
    }
}

/// Kelvin-image disk of `(center, radius)` in the circle of radius `big_r`.
pub fn kelvin_image_disk(center: Point2, radius: f64, big_r: f64) -> Result<(Point2, f64), MediaError> {
    let d2 = center.norm_sq() - radius * radius;
    if d2 <= 0.0 {
        return Err(MediaError::Precondition("disk contains the inversion centre".into()));
    }
    let s = big_r * big_r / d2;
    Ok((center * s, radius * s))
}

fn unit(p: Point2) -> Point2 {
    p * (1.0 / p.norm())
}

/// Place the scenario's inclusion disks on a base geometry (no inclusions).
///
/// `r0` is the object radius; it is ignored by the full-lens layout, whose
/// object and image sizes follow from the magnification.
pub fn scenario_geometry(kind: ScenarioKind, base: &GeometryConfig, r0: f64) -> Result<GeometryConfig, MediaError> {
    let mut cfg = base.clone();
    cfg.inclusions.clear();
    cfg.r0 = 0.0;
    let obj = |cfg: &mut GeometryConfig, tag, center, radius, host| {
        cfg.inclusions.push(Inclusion { tag, center, radius, host });
    };
    match kind {
        ScenarioKind::QuasistaticCloak | ScenarioKind::FreqCloak => {
            if r0 > 0.0 {
                cfg.r0 = r0;
                obj(&mut cfg, RegionTag::InclusionA, base.x1, r0, RegionTag::CoreR1);
                obj(&mut cfg, RegionTag::InclusionB, base.x2, r0, RegionTag::ShellR3R2);
            }
        }
        ScenarioKind::SuperlensNoInnerLayer => {
            if r0 > 0.0 {
                cfg.r0 = r0;
                obj(&mut cfg, RegionTag::InclusionA, base.x1, r0, RegionTag::CoreR1);
            }
        }
        ScenarioKind::SuperlensFull => {
            let (m, tau0) = lens_parameters(base);
            let dir = unit(base.x1);
            let (c, rho) = (dir * (0.3 * tau0), 0.1 * tau0);
            let (ci, ri) = (c * m, rho * m);
            if ci.norm() + ri >= base.r1 {
                return Err(MediaError::Precondition("magnified object must lie inside the core".into()));
            }
            cfg.r0 = rho;
            obj(&mut cfg, RegionTag::InclusionA, c, rho, RegionTag::CoreR1);
            obj(&mut cfg, RegionTag::InclusionB, ci, ri, RegionTag::CoreR1);
        }
        ScenarioKind::CmCloakUnmodified | ScenarioKind::CmCloakModified => {
            if r0 > 0.0 {
                let center = match kind {
                    ScenarioKind::CmCloakUnmodified => base.x3,
                    _ => unit(base.x3) * (0.5 * (base.r2 + base.r3)),
                };
                let (ci, ri) = kelvin_image_disk(center, r0, base.r2)?;
                cfg.r0 = r0;
                obj(&mut cfg, RegionTag::InclusionA, center, r0, RegionTag::ShellR3R2);
                obj(&mut cfg, RegionTag::InclusionB, ci, ri, RegionTag::AnnulusR2R1);
            }
        }
        ScenarioKind::SlabDc => {
            if cfg.slab.is_none() {
                return Err(MediaError::Precondition("slab scenario requires slab geometry".into()));
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Magnification `M = r3/r1` and imaged radius `τ0 = r2/M`.
pub fn lens_parameters(cfg: &GeometryConfig) -> (f64, f64) {
    let m = cfg.r3 / cfg.r1;
    (m, cfg.r2 / m)
}

/// Notched slab geometry with plasmonic region `B_{r2}` minus a smooth notch
/// around the positive y-axis and a rectangular object `|x| < s`,
/// `2 r1 <= y < 3 r1`.
pub fn slab_geometry(r1: f64, half_width: f64, r2: f64, r3: f64, source_outer: f64, r_out: f64) -> Result<GeometryConfig, MediaError> {
    let wedge = WedgeBoundary {
        outer: r2,
        notch: 1.8 * r1,
        center_angle: std::f64::consts::FRAC_PI_2,
        flat_half_angle: 0.15,
        blend_half_angle: 0.45,
    };
    let mut cfg = GeometryConfig::circular(r1, r2, source_outer, r_out);
    cfg.r3 = r3;
    cfg.x1 = Point2::new(0.0, r1);
    cfg.x2 = Point2::new(0.0, r2);
    cfg.x3 = Point2::new(0.0, r3);
    cfg.slab = Some(SlabGeometry { half_width, y_lo: 2.0 * r1, y_hi: 3.0 * r1, wedge });
    cfg.validate()?;
    Ok(cfg)
}

/// Reflecting map `F` and outer map `G` of a layout.
pub fn scenario_maps(cfg: &GeometryConfig) -> Result<(Diffeomorphism, Diffeomorphism), MediaError> {
    let g = kelvin_map(Point2::ORIGIN, cfg.r3)?;
    let f = match &cfg.slab {
        Some(s) => Diffeomorphism::LogRadial(LogRadialReflection { boundary: s.wedge, r_inner: cfg.r1, r_outer: cfg.r3 }),
        None => kelvin_map(Point2::ORIGIN, cfg.r2)?,
    };
    Ok((f, g))
}

fn constant(a: Sym2) -> TensorRule {
    TensorRule::Constant(a)
}

fn scalar(c: f64) -> ScalarRule {
    ScalarRule::Constant(c)
}

/// Coefficient layout of the lossy problem solved for `u_δ`.
pub fn build_medium(kind: ScenarioKind, cfg: &GeometryConfig, object: ObjectSpec, delta: f64, k: f64) -> Result<MediumSpec, MediaError> {
    object.validate(DEFAULT_LAMBDA)?;
    if !(delta >= 0.0 && delta.is_finite()) || !(k >= 0.0 && k.is_finite()) {
        return Err(MediaError::Precondition("delta >= 0 and k >= 0".into()));
    }
    cfg.validate()?;
    let mut m = MediumSpec::homogeneous(cfg.clone(), k);
    m.scenario = Some(kind);
    m.delta = delta;
    m.negative = vec![RegionTag::AnnulusR2R1];
    let core_sigma = (cfg.r3 / cfg.r1).powi(2);
    let obj_a = constant(object.a);
    let obj_s = scalar(object.sigma);
    match kind {
        ScenarioKind::QuasistaticCloak => {
            m.a.set(RegionTag::InclusionA, obj_a.clone()).set(RegionTag::InclusionB, obj_a);
            m.sigma.set(RegionTag::InclusionA, obj_s.clone()).set(RegionTag::InclusionB, obj_s);
        }
        ScenarioKind::FreqCloak => {
            m.a.set(RegionTag::InclusionA, obj_a.clone()).set(RegionTag::InclusionB, obj_a);
            m.sigma
                .set(RegionTag::AnnulusR2R1, ScalarRule::InverseFourth { radius: cfg.r2 })
                .set(RegionTag::CoreR1, scalar(core_sigma))
                .set(RegionTag::InclusionA, obj_s.clone())
                .set(RegionTag::InclusionB, obj_s);
        }
        ScenarioKind::SuperlensNoInnerLayer => {
            m.a.set(RegionTag::InclusionA, obj_a);
            m.sigma.set(RegionTag::InclusionA, obj_s);
        }
        ScenarioKind::SuperlensFull => {
            // the image disk is only a mesh feature here
            m.a.set(RegionTag::InclusionA, obj_a);
            m.sigma.set(RegionTag::InclusionA, obj_s);
        }
        ScenarioKind::CmCloakUnmodified | ScenarioKind::CmCloakModified => {
            let (f, _) = scenario_maps(cfg)?;
            let finv = f.inverted();
            m.a.set(RegionTag::InclusionA, obj_a.clone())
                .set(RegionTag::InclusionB, TensorRule::push(&finv, obj_a));
            m.sigma
                .set(RegionTag::AnnulusR2R1, ScalarRule::InverseFourth { radius: cfg.r2 })
                .set(RegionTag::CoreR1, scalar(core_sigma))
                .set(RegionTag::InclusionA, obj_s.clone())
                .set(RegionTag::InclusionB, ScalarRule::push(&finv, obj_s));
            m.negative = vec![RegionTag::AnnulusR2R1, RegionTag::InclusionB];
        }
        ScenarioKind::SlabDc => {
            let (f, g) = scenario_maps(cfg)?;
            let finv = f.clone().inverted();
            let gf_inv = compose(g, f).inverted();
            let id = constant(Sym2::IDENTITY);
            m.a.set(RegionTag::AnnulusR2R1, TensorRule::push(&finv, id.clone()))
                .set(RegionTag::CoreR1, TensorRule::push(&gf_inv, id))
                .set(RegionTag::Slab, obj_a);
            m.sigma
                .set(RegionTag::AnnulusR2R1, ScalarRule::push(&finv, scalar(1.0)))
                .set(RegionTag::CoreR1, ScalarRule::push(&gf_inv, scalar(1.0)))
                .set(RegionTag::Slab, obj_s);
        }
    }
    Ok(m)
}

/// Positive-coefficient layout of a reference field.
pub fn build_reference_medium(kind: ScenarioKind, cfg: &GeometryConfig, object: ObjectSpec, k: f64, which: ReferenceKind) -> Result<MediumSpec, MediaError> {
    object.validate(DEFAULT_LAMBDA)?;
    let mut m = MediumSpec::homogeneous(cfg.clone(), k);
    m.scenario = Some(kind);
    let obj_a = constant(object.a);
    let obj_s = scalar(object.sigma);
    let hides = kind.expects_cloaking();
    let with_object = match which {
        ReferenceKind::Predicted => !hides,
        ReferenceKind::Alternative => hides,
    };
    if !with_object {
        return Ok(m);
    }
    let tags: &[RegionTag] = match kind {
        ScenarioKind::QuasistaticCloak | ScenarioKind::FreqCloak => &[RegionTag::InclusionA, RegionTag::InclusionB],
        ScenarioKind::SuperlensNoInnerLayer | ScenarioKind::CmCloakModified | ScenarioKind::CmCloakUnmodified => &[RegionTag::InclusionA],
        // magnified image `a(x/M)` of a constant object
        ScenarioKind::SuperlensFull => &[RegionTag::InclusionB],
        ScenarioKind::SlabDc => &[RegionTag::Slab],
    };
    for &t in tags {
        m.a.set(t, obj_a.clone());
        m.sigma.set(t, obj_s.clone());
    }
    Ok(m)
}
