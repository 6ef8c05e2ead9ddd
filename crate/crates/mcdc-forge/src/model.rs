//! Class-model and object-configuration data model plus JSON ingestion.
//!
//! A [`ClassModel`] is the universe test data instantiates: classes with
//! typed attributes and named constants, connected by associations. An
//! [`ObjectConfiguration`] is one candidate (or final) piece of test data:
//! objects with attribute values, links between them, and values for any
//! operation parameters. Types are immutable after construction and safe to
//! share across threads.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

/// Default search domain for Integer and Real attributes.
pub const DEFAULT_DOMAIN: (f64, f64) = (-10000.0, 10000.0);

/// Default decimal precision for Real attributes.
pub const DEFAULT_REAL_PRECISION: f64 = 0.01;

/// Default cap on collection sizes during instantiation and search.
pub const DEFAULT_COLLECTION_CAP: usize = 5;

/// Attribute type of a class-model attribute.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AttrType {
    Integer,
    Real,
    Boolean,
    Enumeration(Vec<String>),
    Str,
}

impl AttrType {
    pub fn is_numeric(&self) -> bool {
        matches!(self, AttrType::Integer | AttrType::Real)
    }
}

impl fmt::Display for AttrType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrType::Integer => write!(f, "Integer"),
            AttrType::Real => write!(f, "Real"),
            AttrType::Boolean => write!(f, "Boolean"),
            AttrType::Enumeration(lits) => write!(f, "Enumeration({})", lits.join(",")),
            AttrType::Str => write!(f, "String"),
        }
    }
}

/// A runtime attribute or parameter value.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Real(f64),
    Bool(bool),
    Enum(String),
    Str(String),
}

impl Value {
    pub fn as_number(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Real(r) => Some(*r),
            _ => None,
        }
    }

    /// Default value for an attribute type: zero, false, or first literal.
    pub fn default_for(ty: &AttrType) -> Value {
        match ty {
            AttrType::Integer => Value::Int(0),
            AttrType::Real => Value::Real(0.0),
            AttrType::Boolean => Value::Bool(false),
            AttrType::Enumeration(lits) => Value::Enum(lits[0].clone()),
            AttrType::Str => Value::Str(String::new()),
        }
    }

    fn conforms(&self, ty: &AttrType) -> bool {
        match (self, ty) {
            (Value::Int(_), AttrType::Integer) => true,
            (Value::Real(_), AttrType::Real) => true,
            (Value::Bool(_), AttrType::Boolean) => true,
            (Value::Enum(lit), AttrType::Enumeration(lits)) => lits.iter().any(|l| l == lit),
            (Value::Str(_), AttrType::Str) => true,
            _ => false,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Real(r) => write!(f, "{r}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Enum(s) | Value::Str(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassDef {
    pub name: String,
    pub attributes: Vec<(String, AttrType)>,
    pub constants: Vec<(String, Value)>,
}

impl ClassDef {
    pub fn attribute(&self, name: &str) -> Option<&AttrType> {
        self.attributes
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
    }

    pub fn constant(&self, name: &str) -> Option<&Value> {
        self.constants
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v)
    }
}

/// One directed association end: `source` navigates to `target` via `role`.
#[derive(Debug, Clone, PartialEq)]
pub struct AssociationDef {
    pub source: String,
    pub target: String,
    pub role: String,
    pub lower: u32,
    /// `None` means unbounded (`"*"` in the model file).
    pub upper: Option<u32>,
}

impl AssociationDef {
    pub fn is_single(&self) -> bool {
        self.upper == Some(1)
    }

    pub fn is_collection(&self) -> bool {
        self.upper.is_none_or(|u| u > 1)
    }

    pub fn is_mandatory(&self) -> bool {
        self.lower >= 1
    }
}

/// A validated class model.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassModel {
    pub classes: Vec<ClassDef>,
    pub associations: Vec<AssociationDef>,
}

impl ClassModel {
    pub fn class(&self, name: &str) -> Option<&ClassDef> {
        self.classes.iter().find(|c| c.name == name)
    }

    /// The association reachable from `class` under `role`.
    pub fn association(&self, class: &str, role: &str) -> Option<&AssociationDef> {
        self.associations
            .iter()
            .find(|a| a.source == class && a.role == role)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let mut names = BTreeSet::new();
        for class in &self.classes {
            if !names.insert(class.name.clone()) {
                return Err(ModelError::Semantic {
                    entity: class.name.clone(),
                    message: "duplicate class name".into(),
                });
            }
            let mut attrs = BTreeSet::new();
            for (attr, _) in &class.attributes {
                if !attrs.insert(attr.clone()) {
                    return Err(ModelError::Semantic {
                        entity: format!("{}.{attr}", class.name),
                        message: "duplicate attribute name".into(),
                    });
                }
            }
            for (name, ty) in &class.attributes {
                if let AttrType::Enumeration(lits) = ty {
                    if lits.is_empty() {
                        return Err(ModelError::Semantic {
                            entity: format!("{}.{name}", class.name),
                            message: "enumeration with no literals".into(),
                        });
                    }
                }
            }
        }
        for assoc in &self.associations {
            for end in [&assoc.source, &assoc.target] {
                if !names.contains(end) {
                    return Err(ModelError::Semantic {
                        entity: end.clone(),
                        message: format!(
                            "association role '{}' references unknown class",
                            assoc.role
                        ),
                    });
                }
            }
            if let Some(upper) = assoc.upper {
                if assoc.lower > upper {
                    return Err(ModelError::Semantic {
                        entity: assoc.role.clone(),
                        message: format!("lower bound {} exceeds upper bound {upper}", assoc.lower),
                    });
                }
            }
        }
        Ok(())
    }
}

/// One object of an [`ObjectConfiguration`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObjectInstance {
    pub id: String,
    pub class: String,
    pub attrs: BTreeMap<String, Value>,
}

/// One link instance; `to: None` encodes an explicitly undefined navigation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Link {
    pub role: String,
    pub from: String,
    pub to: Option<String>,
}

/// Candidate or final test data: an instantiation of the class model.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ObjectConfiguration {
    pub objects: Vec<ObjectInstance>,
    pub links: Vec<Link>,
    /// Values for operation parameters of precondition constraints.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, Value>,
}

impl ObjectConfiguration {
    pub fn object(&self, id: &str) -> Option<&ObjectInstance> {
        self.objects.iter().find(|o| o.id == id)
    }

    /// First object of the given class, in creation order.
    pub fn object_of_class(&self, class: &str) -> Option<&ObjectInstance> {
        self.objects.iter().find(|o| o.class == class)
    }

    /// Single-valued navigation: the target of `role` from `from`, if defined.
    pub fn nav_single(&self, from: &str, role: &str) -> Option<&str> {
        self.links
            .iter()
            .find(|l| l.from == from && l.role == role)
            .and_then(|l| l.to.as_deref())
    }

    /// Collection navigation: all defined targets of `role` from `from`.
    pub fn nav_many(&self, from: &str, role: &str) -> Vec<&str> {
        self.links
            .iter()
            .filter(|l| l.from == from && l.role == role)
            .filter_map(|l| l.to.as_deref())
            .collect()
    }

    pub fn validate(&self, model: &ClassModel) -> Result<(), ModelError> {
        let mut ids = BTreeSet::new();
        for obj in &self.objects {
            if !ids.insert(obj.id.clone()) {
                return Err(ModelError::Semantic {
                    entity: obj.id.clone(),
                    message: "duplicate object id".into(),
                });
            }
            let class = model
                .class(&obj.class)
                .ok_or_else(|| ModelError::Semantic {
                    entity: obj.id.clone(),
                    message: format!("object of unknown class '{}'", obj.class),
                })?;
            for (attr, value) in &obj.attrs {
                let ty = class.attribute(attr).ok_or_else(|| ModelError::Semantic {
                    entity: format!("{}.{attr}", obj.id),
                    message: format!("unknown attribute on class '{}'", obj.class),
                })?;
                if !value.conforms(ty) {
                    return Err(ModelError::Semantic {
                        entity: format!("{}.{attr}", obj.id),
                        message: format!("value {value} does not match type {ty}"),
                    });
                }
            }
        }
        for link in &self.links {
            let from = self
                .object(&link.from)
                .ok_or_else(|| ModelError::Semantic {
                    entity: link.from.clone(),
                    message: format!("link role '{}' from unknown object", link.role),
                })?;
            let assoc =
                model
                    .association(&from.class, &link.role)
                    .ok_or_else(|| ModelError::Semantic {
                        entity: link.role.clone(),
                        message: format!(
                            "no association role '{}' on class '{}'",
                            link.role, from.class
                        ),
                    })?;
            if let Some(to) = &link.to {
                let target = self.object(to).ok_or_else(|| ModelError::Semantic {
                    entity: to.clone(),
                    message: format!("link role '{}' to unknown object", link.role),
                })?;
                if target.class != assoc.target {
                    return Err(ModelError::Semantic {
                        entity: link.role.clone(),
                        message: format!(
                            "link target '{}' has class '{}', expected '{}'",
                            to, target.class, assoc.target
                        ),
                    });
                }
            }
        }
        // Multiplicity: count defined targets per (object, role).
        for obj in &self.objects {
            for assoc in model.associations.iter().filter(|a| a.source == obj.class) {
                let count = self.nav_many(&obj.id, &assoc.role).len() as u32;
                if let Some(upper) = assoc.upper {
                    if count > upper {
                        return Err(ModelError::Semantic {
                            entity: format!("{}.{}", obj.id, assoc.role),
                            message: format!("multiplicity upper bound {upper} exceeded ({count})"),
                        });
                    }
                }
                if count < assoc.lower {
                    return Err(ModelError::Semantic {
                        entity: format!("{}.{}", obj.id, assoc.role),
                        message: format!(
                            "multiplicity lower bound {} unmet ({count})",
                            assoc.lower
                        ),
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug)]
pub enum ModelError {
    Io {
        path: String,
        source: std::io::Error,
    },
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    Semantic {
        entity: String,
        message: String,
    },
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::Io { path, source } => write!(f, "{path}: {source}"),
            ModelError::Parse {
                line,
                column,
                message,
            } => {
                write!(f, "parse error at line {line}, column {column}: {message}")
            }
            ModelError::Semantic { entity, message } => write!(f, "'{entity}': {message}"),
        }
    }
}

impl std::error::Error for ModelError {}

// ── Model file schema ─────────────────────────────────────────────────

#[derive(Deserialize)]
struct RawModel {
    #[serde(default)]
    classes: Vec<RawClass>,
    #[serde(default)]
    associations: Vec<RawAssociation>,
}

#[derive(Deserialize)]
struct RawClass {
    name: String,
    #[serde(default)]
    attributes: Vec<RawAttribute>,
    #[serde(default)]
    constants: Vec<RawConstant>,
}

#[derive(Deserialize)]
struct RawAttribute {
    name: String,
    #[serde(rename = "type")]
    ty: RawAttrType,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawAttrType {
    Named(String),
    Enum {
        #[serde(rename = "enum")]
        literals: Vec<String>,
    },
}

#[derive(Deserialize)]
struct RawConstant {
    name: String,
    value: serde_json::Value,
}

#[derive(Deserialize)]
struct RawAssociation {
    source: String,
    target: String,
    role: String,
    lower: u32,
    upper: RawUpper,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawUpper {
    Bounded(u32),
    Unbounded(String),
}

fn number_value(raw: &serde_json::Value) -> Option<Value> {
    if let Some(i) = raw.as_i64() {
        Some(Value::Int(i))
    } else {
        raw.as_f64().map(Value::Real)
    }
}

fn parse_error(err: &serde_json::Error) -> ModelError {
    ModelError::Parse {
        line: err.line(),
        column: err.column(),
        message: err.to_string(),
    }
}

/// Load and validate a class model from a JSON file.
pub fn load_model(path: impl AsRef<Path>) -> Result<ClassModel, ModelError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_model_str(&text)
}

pub fn load_model_str(text: &str) -> Result<ClassModel, ModelError> {
    let raw: RawModel = serde_json::from_str(text).map_err(|e| parse_error(&e))?;
    let classes = raw
        .classes
        .into_iter()
        .map(|c| {
            let attributes = c
                .attributes
                .into_iter()
                .map(|a| {
                    let ty = match a.ty {
                        RawAttrType::Named(name) => match name.as_str() {
                            "Integer" => AttrType::Integer,
                            "Real" => AttrType::Real,
                            "Boolean" => AttrType::Boolean,
                            "String" => AttrType::Str,
                            other => {
                                return Err(ModelError::Semantic {
                                    entity: format!("{}.{}", c.name, a.name),
                                    message: format!("unknown attribute type '{other}'"),
                                })
                            }
                        },
                        RawAttrType::Enum { literals } => AttrType::Enumeration(literals),
                    };
                    Ok((a.name, ty))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let constants = c
                .constants
                .into_iter()
                .map(|k| {
                    number_value(&k.value)
                        .map(|v| (k.name.clone(), v))
                        .ok_or_else(|| ModelError::Semantic {
                            entity: format!("{}.{}", c.name, k.name),
                            message: "constant value must be a number".into(),
                        })
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(ClassDef {
                name: c.name,
                attributes,
                constants,
            })
        })
        .collect::<Result<Vec<_>, ModelError>>()?;
    let associations = raw
        .associations
        .into_iter()
        .map(|a| {
            let upper = match a.upper {
                RawUpper::Bounded(u) => Some(u),
                RawUpper::Unbounded(s) if s == "*" => None,
                RawUpper::Unbounded(s) => {
                    return Err(ModelError::Semantic {
                        entity: a.role.clone(),
                        message: format!("upper bound must be an integer or \"*\", got '{s}'"),
                    })
                }
            };
            Ok(AssociationDef {
                source: a.source,
                target: a.target,
                role: a.role,
                lower: a.lower,
                upper,
            })
        })
        .collect::<Result<Vec<_>, ModelError>>()?;
    let model = ClassModel {
        classes,
        associations,
    };
    model.validate()?;
    Ok(model)
}

// ── Configuration file schema ─────────────────────────────────────────

#[derive(Deserialize)]
struct RawConfig {
    #[serde(default)]
    objects: Vec<RawObject>,
    #[serde(default)]
    links: Vec<RawLink>,
    #[serde(default)]
    params: BTreeMap<String, serde_json::Value>,
}

#[derive(Deserialize)]
struct RawObject {
    id: String,
    class: String,
    #[serde(default)]
    attrs: BTreeMap<String, serde_json::Value>,
}

#[derive(Deserialize)]
struct RawLink {
    role: String,
    from: String,
    to: Option<String>,
}

fn coerce(raw: &serde_json::Value, ty: &AttrType, entity: &str) -> Result<Value, ModelError> {
    let value = match (raw, ty) {
        (serde_json::Value::Number(n), AttrType::Integer) => n.as_i64().map(Value::Int),
        (serde_json::Value::Number(n), AttrType::Real) => n.as_f64().map(Value::Real),
        (serde_json::Value::Bool(b), AttrType::Boolean) => Some(Value::Bool(*b)),
        (serde_json::Value::String(s), AttrType::Enumeration(_)) => Some(Value::Enum(s.clone())),
        (serde_json::Value::String(s), AttrType::Str) => Some(Value::Str(s.clone())),
        _ => None,
    };
    let value = value.ok_or_else(|| ModelError::Semantic {
        entity: entity.to_string(),
        message: format!("value {raw} does not match type {ty}"),
    })?;
    if !value.conforms(ty) {
        return Err(ModelError::Semantic {
            entity: entity.to_string(),
            message: format!("value {value} does not match type {ty}"),
        });
    }
    Ok(value)
}

/// Load a configuration from JSON, typing attribute values against `model`.
pub fn load_configuration(
    model: &ClassModel,
    path: impl AsRef<Path>,
) -> Result<ObjectConfiguration, ModelError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_configuration_str(model, &text)
}

pub fn load_configuration_str(
    model: &ClassModel,
    text: &str,
) -> Result<ObjectConfiguration, ModelError> {
    let raw: RawConfig = serde_json::from_str(text).map_err(|e| parse_error(&e))?;
    let mut objects = Vec::new();
    for obj in raw.objects {
        let class = model
            .class(&obj.class)
            .ok_or_else(|| ModelError::Semantic {
                entity: obj.id.clone(),
                message: format!("object of unknown class '{}'", obj.class),
            })?;
        let mut attrs = BTreeMap::new();
        for (name, value) in obj.attrs {
            let entity = format!("{}.{name}", obj.id);
            let ty = class.attribute(&name).ok_or_else(|| ModelError::Semantic {
                entity: entity.clone(),
                message: format!("unknown attribute on class '{}'", obj.class),
            })?;
            attrs.insert(name, coerce(&value, ty, &entity)?);
        }
        objects.push(ObjectInstance {
            id: obj.id,
            class: obj.class,
            attrs,
        });
    }
    let links = raw
        .links
        .into_iter()
        .map(|l| Link {
            role: l.role,
            from: l.from,
            to: l.to,
        })
        .collect();
    let mut params = BTreeMap::new();
    for (name, value) in raw.params {
        let typed = match &value {
            serde_json::Value::Bool(b) => Some(Value::Bool(*b)),
            serde_json::Value::Number(_) => number_value(&value),
            _ => None,
        };
        let typed = typed.ok_or_else(|| ModelError::Semantic {
            entity: name.clone(),
            message: "parameter value must be a number or boolean".into(),
        })?;
        params.insert(name, typed);
    }
    let cfg = ObjectConfiguration {
        objects,
        links,
        params,
    };
    cfg.validate(model)?;
    Ok(cfg)
}

/// Write a configuration as pretty JSON. The result round-trips through
/// [`load_configuration`] to a structurally equal configuration.
pub fn save_configuration(
    cfg: &ObjectConfiguration,
    path: impl AsRef<Path>,
) -> Result<(), ModelError> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(cfg).expect("configuration serializes");
    std::fs::write(path, text).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Build the minimal default configuration for a context class: one object of
/// `ctx` plus one object per mandatory single-valued navigation reachable from
/// it. Numeric attributes start at zero, booleans false, enumerations at their
/// first literal; optional links are recorded as null.
pub fn instantiate_default(
    model: &ClassModel,
    ctx: &str,
) -> Result<ObjectConfiguration, ModelError> {
    let class = model.class(ctx).ok_or_else(|| ModelError::Semantic {
        entity: ctx.to_string(),
        message: "unknown context class".into(),
    })?;
    let mut cfg = ObjectConfiguration::default();
    let root = fresh_id(&cfg, &class.name.to_lowercase());
    spawn_object(
        model,
        &mut cfg,
        root.clone(),
        ctx,
        &mut vec![ctx.to_string()],
    );
    Ok(cfg)
}

pub(crate) fn fresh_id(cfg: &ObjectConfiguration, base: &str) -> String {
    if cfg.object(base).is_none() {
        return base.to_string();
    }
    let mut n = 2;
    loop {
        let candidate = format!("{base}{n}");
        if cfg.object(&candidate).is_none() {
            return candidate;
        }
        n += 1;
    }
}

/// Create `id : class` with default attributes and recurse into mandatory
/// single navigations. `visiting` guards against association cycles.
pub(crate) fn spawn_object(
    model: &ClassModel,
    cfg: &mut ObjectConfiguration,
    id: String,
    class_name: &str,
    visiting: &mut Vec<String>,
) {
    let class = model.class(class_name).expect("class resolved by caller");
    let attrs = class
        .attributes
        .iter()
        .map(|(name, ty)| (name.clone(), Value::default_for(ty)))
        .collect();
    cfg.objects.push(ObjectInstance {
        id: id.clone(),
        class: class_name.to_string(),
        attrs,
    });
    let assocs: Vec<AssociationDef> = model
        .associations
        .iter()
        .filter(|a| a.source == class_name)
        .cloned()
        .collect();
    for assoc in assocs {
        if assoc.is_mandatory() && assoc.is_single() && !visiting.contains(&assoc.target) {
            visiting.push(assoc.target.clone());
            let target_id = fresh_id(cfg, &assoc.role);
            cfg.links.push(Link {
                role: assoc.role.clone(),
                from: id.clone(),
                to: Some(target_id.clone()),
            });
            spawn_object(model, cfg, target_id, &assoc.target, visiting);
            visiting.pop();
        } else if assoc.is_single() {
            cfg.links.push(Link {
                role: assoc.role.clone(),
                from: id.clone(),
                to: None,
            });
        }
        // Collection ends start empty; the search grows them on demand.
    }
}
