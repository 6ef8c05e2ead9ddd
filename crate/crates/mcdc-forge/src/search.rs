//! Alternating-variable and random search over object configurations.
//!
//! Every attribute, parameter, optional link, and collection end that a
//! variant mentions becomes one gene, in left-to-right appearance order.
//! The alternating-variable loop takes one gene at a time: exploratory
//! moves of +-1 (or a toggle for categorical genes), then accelerating
//! pattern moves in the improving direction. A full pass without
//! improvement triggers a random restart; restarts never reset the
//! evaluation budget. Real-valued genes get one refinement pass at the
//! configured precision once unit steps stop helping.
//!
//! One fitness evaluation is one iteration tick, and runs are fully
//! deterministic for a given rng seed.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::fitness::{evaluate, EvalCtx};
use crate::mcdc::McdcVariant;
use crate::model::{
    fresh_id, instantiate_default, spawn_object, AttrType, ClassModel, Link, ObjectConfiguration,
    Value, DEFAULT_COLLECTION_CAP, DEFAULT_DOMAIN, DEFAULT_REAL_PRECISION,
};
use crate::ocl::{CollOp, Nav, NavScope, NavTarget, OclExpr};
use crate::ranges::RangeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchStatus {
    Solved,
    BudgetExhausted,
    ConflictSuspected,
}

impl SearchStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SearchStatus::Solved => "solved",
            SearchStatus::BudgetExhausted => "budget_exhausted",
            SearchStatus::ConflictSuspected => "conflict_suspected",
        }
    }
}

impl std::fmt::Display for SearchStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub status: SearchStatus,
    pub cfg: ObjectConfiguration,
    pub iterations: u64,
    pub elapsed: Duration,
    pub trace: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct SearchOptions {
    pub budget: u64,
    pub rng_seed: u64,
    /// Sampling bounds for initial solutions and restarts.
    pub ranges: Option<RangeMap>,
    pub trace: bool,
    pub real_precision: f64,
    pub collection_cap: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            budget: 2000,
            rng_seed: 0,
            ranges: None,
            trace: false,
            real_precision: DEFAULT_REAL_PRECISION,
            collection_cap: DEFAULT_COLLECTION_CAP,
        }
    }
}

// ── Genes ─────────────────────────────────────────────────────────────

#[derive(Debug, Clone)]
enum GeneKind {
    Int { lo: i64, hi: i64 },
    Real { lo: f64, hi: f64 },
    Flag,
    Choice { literals: usize },
    Presence,
    Size { lo: usize, hi: usize },
}

#[derive(Debug, Clone)]
enum Site {
    Attr { path: Vec<String> },
    Param { name: String },
    Link { path: Vec<String> },
    Collection { path: Vec<String> },
}

#[derive(Debug, Clone)]
struct Gene {
    id: String,
    kind: GeneKind,
    site: Site,
}

#[derive(Debug, Clone, PartialEq)]
enum GeneValue {
    Int(i64),
    Real(f64),
    Flag(bool),
    Choice(usize),
    Present(bool),
    Size(usize),
}

/// Gene values plus per-collection element attribute values.
#[derive(Debug, Clone, PartialEq)]
pub struct Genome {
    values: Vec<GeneValue>,
    elements: BTreeMap<String, Vec<BTreeMap<String, GeneValue>>>,
}

#[derive(Debug, Clone)]
enum Handle {
    Static(usize),
    Element {
        key: String,
        index: usize,
        attr: String,
        ty: AttrType,
    },
}

/// A variant plus everything needed to move between genomes and
/// configurations.
pub struct SearchProblem<'a> {
    model: &'a ClassModel,
    pub variant: &'a McdcVariant,
    scaffold: ObjectConfiguration,
    genes: Vec<Gene>,
    element_attrs: BTreeMap<String, Vec<(String, AttrType)>>,
    real_precision: f64,
}

impl<'a> SearchProblem<'a> {
    pub fn new(
        model: &'a ClassModel,
        variant: &'a McdcVariant,
        opts: &SearchOptions,
    ) -> SearchProblem<'a> {
        let scaffold = instantiate_default(model, &variant.context)
            .expect("variant context verified at parse time");
        let mut collector = GeneCollector {
            model,
            variant,
            genes: Vec::new(),
            seen: BTreeSet::new(),
            element_attrs: BTreeMap::new(),
            collection_cap: opts.collection_cap,
        };
        collector.collect_expr(&variant.expr, None);
        SearchProblem {
            model,
            variant,
            scaffold,
            genes: collector.genes,
            element_attrs: collector.element_attrs,
            real_precision: opts.real_precision,
        }
    }

    pub fn gene_ids(&self) -> Vec<&str> {
        self.genes.iter().map(|g| g.id.as_str()).collect()
    }

    fn default_value(&self, gene: &Gene) -> GeneValue {
        match &gene.kind {
            GeneKind::Int { .. } => GeneValue::Int(0),
            GeneKind::Real { .. } => GeneValue::Real(0.0),
            GeneKind::Flag => GeneValue::Flag(false),
            GeneKind::Choice { .. } => GeneValue::Choice(0),
            GeneKind::Presence => GeneValue::Present(false),
            GeneKind::Size { lo, .. } => GeneValue::Size(*lo),
        }
    }

    fn element_default(ty: &AttrType) -> GeneValue {
        match ty {
            AttrType::Integer => GeneValue::Int(0),
            AttrType::Real => GeneValue::Real(0.0),
            AttrType::Boolean => GeneValue::Flag(false),
            AttrType::Enumeration(_) => GeneValue::Choice(0),
            AttrType::Str => GeneValue::Flag(false),
        }
    }

    fn sync_elements(&self, genome: &mut Genome) {
        for (gi, gene) in self.genes.iter().enumerate() {
            if let (GeneKind::Size { .. }, GeneValue::Size(count)) =
                (&gene.kind, &genome.values[gi])
            {
                let attrs = self
                    .element_attrs
                    .get(&gene.id)
                    .cloned()
                    .unwrap_or_default();
                let rows = genome.elements.entry(gene.id.clone()).or_default();
                while rows.len() < *count {
                    rows.push(
                        attrs
                            .iter()
                            .map(|(name, ty)| (name.clone(), Self::element_default(ty)))
                            .collect(),
                    );
                }
                rows.truncate(*count);
            }
        }
    }

    /// All mutable positions for the current genome, in gene order with
    /// element genes right after their collection's size gene.
    fn handles(&self, genome: &Genome) -> Vec<Handle> {
        let mut out = Vec::new();
        for (gi, gene) in self.genes.iter().enumerate() {
            out.push(Handle::Static(gi));
            if let (GeneKind::Size { .. }, GeneValue::Size(count)) =
                (&gene.kind, &genome.values[gi])
            {
                for index in 0..*count {
                    for (attr, ty) in self.element_attrs.get(&gene.id).into_iter().flatten() {
                        out.push(Handle::Element {
                            key: gene.id.clone(),
                            index,
                            attr: attr.clone(),
                            ty: ty.clone(),
                        });
                    }
                }
            }
        }
        out
    }

    fn get(&self, genome: &Genome, handle: &Handle) -> Option<GeneValue> {
        match handle {
            Handle::Static(gi) => Some(genome.values[*gi].clone()),
            Handle::Element {
                key, index, attr, ..
            } => genome.elements.get(key)?.get(*index)?.get(attr).cloned(),
        }
    }

    fn set(&self, genome: &mut Genome, handle: &Handle, value: GeneValue) {
        match handle {
            Handle::Static(gi) => {
                genome.values[*gi] = value;
                if matches!(self.genes[*gi].kind, GeneKind::Size { .. }) {
                    self.sync_elements(genome);
                }
            }
            Handle::Element {
                key, index, attr, ..
            } => {
                if let Some(row) = genome.elements.get_mut(key).and_then(|r| r.get_mut(*index)) {
                    row.insert(attr.clone(), value);
                }
            }
        }
    }

    fn quantize(&self, v: f64) -> f64 {
        (v / self.real_precision).round() * self.real_precision
    }

    // ── Genome <-> configuration ─────────────────────────────────────

    pub fn materialize(&self, genome: &Genome) -> ObjectConfiguration {
        let mut cfg = self.scaffold.clone();
        // Presence genes first: they create or remove the objects the
        // attribute genes write into.
        for (gene, value) in self.genes.iter().zip(&genome.values) {
            if let (Site::Link { path }, GeneValue::Present(present)) = (&gene.site, value) {
                if *present {
                    self.ensure_chain(&mut cfg, path);
                } else {
                    self.null_link(&mut cfg, path);
                }
            }
        }
        for (gene, value) in self.genes.iter().zip(&genome.values) {
            match (&gene.site, value) {
                (Site::Attr { path }, _) => {
                    let (hops, attr) = path.split_at(path.len() - 1);
                    if let Some(owner) = self.walk_cfg(&cfg, hops) {
                        let class = self
                            .model
                            .class(&cfg.object(&owner).unwrap().class)
                            .unwrap();
                        if let Some(ty) = class.attribute(&attr[0]) {
                            let typed = self.to_value(value, ty);
                            cfg.objects
                                .iter_mut()
                                .find(|o| o.id == owner)
                                .unwrap()
                                .attrs
                                .insert(attr[0].clone(), typed);
                        }
                    }
                }
                (Site::Param { name }, _) => {
                    let ty = self
                        .variant
                        .params()
                        .iter()
                        .find(|(p, _)| p == name)
                        .map(|(_, t)| t.clone())
                        .unwrap_or(AttrType::Integer);
                    cfg.params.insert(name.clone(), self.to_value(value, &ty));
                }
                (Site::Collection { path }, GeneValue::Size(count)) => {
                    let (hops, role) = path.split_at(path.len() - 1);
                    let Some(owner) = self.walk_cfg(&cfg, hops) else {
                        continue;
                    };
                    self.sync_collection(&mut cfg, &owner, &role[0], *count);
                    let attrs = self
                        .element_attrs
                        .get(&gene.id)
                        .cloned()
                        .unwrap_or_default();
                    let rows = genome.elements.get(&gene.id);
                    let members: Vec<String> = cfg
                        .nav_many(&owner, &role[0])
                        .iter()
                        .map(|s| s.to_string())
                        .collect();
                    for (index, member) in members.iter().enumerate() {
                        let Some(row) = rows.and_then(|r| r.get(index)) else {
                            continue;
                        };
                        for (attr, ty) in &attrs {
                            if let Some(v) = row.get(attr) {
                                let typed = self.to_value(v, ty);
                                cfg.objects
                                    .iter_mut()
                                    .find(|o| &o.id == member)
                                    .unwrap()
                                    .attrs
                                    .insert(attr.clone(), typed);
                            }
                        }
                    }
                }
                _ => {}
            }
        }
        cfg
    }

    fn to_value(&self, v: &GeneValue, ty: &AttrType) -> Value {
        match (v, ty) {
            (GeneValue::Int(i), AttrType::Integer) => Value::Int(*i),
            (GeneValue::Int(i), AttrType::Real) => Value::Real(*i as f64),
            (GeneValue::Real(r), AttrType::Real) => Value::Real(*r),
            (GeneValue::Real(r), AttrType::Integer) => Value::Int(*r as i64),
            (GeneValue::Flag(b), AttrType::Boolean) => Value::Bool(*b),
            (GeneValue::Choice(i), AttrType::Enumeration(lits)) => {
                Value::Enum(lits[(*i).min(lits.len() - 1)].clone())
            }
            _ => Value::default_for(ty),
        }
    }

    fn walk_cfg(&self, cfg: &ObjectConfiguration, hops: &[String]) -> Option<String> {
        let mut cur = cfg.object_of_class(&self.variant.context)?.id.to_string();
        for hop in hops {
            cur = cfg.nav_single(&cur, hop)?.to_string();
        }
        Some(cur)
    }

    fn ensure_chain(&self, cfg: &mut ObjectConfiguration, path: &[String]) {
        let Some(mut cur) = cfg
            .object_of_class(&self.variant.context)
            .map(|o| o.id.clone())
        else {
            return;
        };
        for hop in path {
            if let Some(next) = cfg.nav_single(&cur, hop) {
                cur = next.to_string();
                continue;
            }
            let class = cfg.object(&cur).unwrap().class.clone();
            let Some(assoc) = self.model.association(&class, hop) else {
                return;
            };
            let target_class = assoc.target.clone();
            let id = fresh_id(cfg, hop);
            if let Some(link) = cfg
                .links
                .iter_mut()
                .find(|l| l.from == cur && &l.role == hop)
            {
                link.to = Some(id.clone());
            } else {
                cfg.links.push(Link {
                    role: hop.clone(),
                    from: cur.clone(),
                    to: Some(id.clone()),
                });
            }
            let mut visiting = vec![target_class.clone()];
            spawn_object(self.model, cfg, id.clone(), &target_class, &mut visiting);
            cur = id;
        }
    }

    fn null_link(&self, cfg: &mut ObjectConfiguration, path: &[String]) {
        let (hops, last) = path.split_at(path.len() - 1);
        let Some(owner) = self.walk_cfg(cfg, hops) else {
            return;
        };
        let Some(target) = cfg.nav_single(&owner, &last[0]).map(str::to_string) else {
            return;
        };
        if let Some(link) = cfg
            .links
            .iter_mut()
            .find(|l| l.from == owner && l.role == last[0])
        {
            link.to = None;
        }
        remove_subtree(cfg, &target);
    }

    fn sync_collection(
        &self,
        cfg: &mut ObjectConfiguration,
        owner: &str,
        role: &str,
        count: usize,
    ) {
        let class = cfg.object(owner).unwrap().class.clone();
        let Some(assoc) = self.model.association(&class, role) else {
            return;
        };
        let target_class = assoc.target.clone();
        loop {
            let members: Vec<String> = cfg
                .nav_many(owner, role)
                .iter()
                .map(|s| s.to_string())
                .collect();
            if members.len() == count {
                return;
            }
            if members.len() < count {
                let id = fresh_id(cfg, role);
                cfg.links.push(Link {
                    role: role.to_string(),
                    from: owner.to_string(),
                    to: Some(id.clone()),
                });
                let mut visiting = vec![target_class.clone()];
                spawn_object(self.model, cfg, id, &target_class, &mut visiting);
            } else {
                // Drop the most recently added member.
                let last = members.last().unwrap().clone();
                if let Some(pos) = cfg.links.iter().position(|l| {
                    l.from == owner && l.role == role && l.to.as_deref() == Some(&last)
                }) {
                    cfg.links.remove(pos);
                }
                remove_subtree(cfg, &last);
            }
        }
    }

    /// Read gene values out of an arbitrary configuration; anything the
    /// configuration does not define falls back to the gene default.
    pub fn encode(&self, cfg: &ObjectConfiguration) -> Genome {
        let mut values = Vec::with_capacity(self.genes.len());
        for gene in &self.genes {
            let value = match &gene.site {
                Site::Attr { path } => {
                    let (hops, attr) = path.split_at(path.len() - 1);
                    self.walk_cfg(cfg, hops)
                        .and_then(|owner| cfg.object(&owner))
                        .and_then(|o| o.attrs.get(&attr[0]))
                        .and_then(|v| self.gene_value_of(gene, v))
                }
                Site::Param { name } => cfg.params.get(name).and_then(|v| self.gene_value_of(gene, v)),
                Site::Link { path } => Some(GeneValue::Present(self.walk_cfg(cfg, path).is_some())),
                Site::Collection { path } => {
                    let (hops, role) = path.split_at(path.len() - 1);
                    self.walk_cfg(cfg, hops).map(|owner| {
                        let n = cfg.nav_many(&owner, &role[0]).len();
                        let hi = match gene.kind {
                            GeneKind::Size { hi, .. } => hi,
                            _ => n,
                        };
                        GeneValue::Size(n.min(hi))
                    })
                }
            };
            values.push(value.unwrap_or_else(|| self.default_value(gene)));
        }
        let mut genome = Genome {
            values,
            elements: BTreeMap::new(),
        };
        self.sync_elements(&mut genome);
        // Pull element attribute values for collections the cfg defines.
        for (gi, gene) in self.genes.iter().enumerate() {
            let (Site::Collection { path }, GeneValue::Size(count)) =
                (&gene.site, &genome.values[gi])
            else {
                continue;
            };
            let (hops, role) = path.split_at(path.len() - 1);
            let Some(owner) = self.walk_cfg(cfg, hops) else {
                continue;
            };
            let members: Vec<String> = cfg
                .nav_many(&owner, &role[0])
                .iter()
                .map(|s| s.to_string())
                .collect();
            let attrs = self
                .element_attrs
                .get(&gene.id)
                .cloned()
                .unwrap_or_default();
            for index in 0..*count {
                let Some(member) = members.get(index) else {
                    break;
                };
                for (attr, ty) in &attrs {
                    if let Some(value) = cfg.object(member).and_then(|o| o.attrs.get(attr)) {
                        let gv = match (value, ty) {
                            (Value::Int(i), AttrType::Integer) => Some(GeneValue::Int(*i)),
                            (Value::Real(r), AttrType::Real) => Some(GeneValue::Real(*r)),
                            (Value::Bool(b), AttrType::Boolean) => Some(GeneValue::Flag(*b)),
                            (Value::Enum(lit), AttrType::Enumeration(lits)) => Some(
                                GeneValue::Choice(lits.iter().position(|l| l == lit).unwrap_or(0)),
                            ),
                            _ => None,
                        };
                        if let Some(gv) = gv {
                            genome.elements.get_mut(&gene.id).unwrap()[index]
                                .insert(attr.clone(), gv);
                        }
                    }
                }
            }
        }
        genome
    }

    fn gene_value_of(&self, gene: &Gene, value: &Value) -> Option<GeneValue> {
        match (&gene.kind, value) {
            (GeneKind::Int { lo, hi }, Value::Int(i)) => Some(GeneValue::Int(*i.min(hi).max(lo))),
            (GeneKind::Int { lo, hi }, Value::Real(r)) => {
                Some(GeneValue::Int((*r as i64).min(*hi).max(*lo)))
            }
            (GeneKind::Real { lo, hi }, Value::Real(r)) => {
                Some(GeneValue::Real(r.min(*hi).max(*lo)))
            }
            (GeneKind::Real { lo, hi }, Value::Int(i)) => {
                Some(GeneValue::Real((*i as f64).min(*hi).max(*lo)))
            }
            (GeneKind::Flag, Value::Bool(b)) => Some(GeneValue::Flag(*b)),
            (GeneKind::Choice { literals }, Value::Enum(lit)) => {
                let gene_lits = match &gene.site {
                    Site::Attr { path } => self.enum_literals(path),
                    _ => None,
                };
                let index = gene_lits
                    .and_then(|lits| lits.iter().position(|l| l == lit))
                    .unwrap_or(0);
                Some(GeneValue::Choice(index.min(literals.saturating_sub(1))))
            }
            _ => None,
        }
    }

    fn enum_literals(&self, path: &[String]) -> Option<Vec<String>> {
        let mut class = self.model.class(&self.variant.context)?;
        for hop in &path[..path.len() - 1] {
            let assoc = self.model.association(&class.name, hop)?;
            class = self.model.class(&assoc.target)?;
        }
        match class.attribute(&path[path.len() - 1])? {
            AttrType::Enumeration(lits) => Some(lits.clone()),
            _ => None,
        }
    }

    /// Uniform sample of the whole genome; numeric genes draw inside the
    /// reduced ranges when present.
    pub fn random_genome(&self, rng: &mut ChaCha8Rng, ranges: Option<&RangeMap>) -> Genome {
        let values = self
            .genes
            .iter()
            .map(|gene| {
                let bounds = ranges.and_then(|r| r.bounds(&gene.id));
                match &gene.kind {
                    GeneKind::Int { lo, hi } => {
                        let (lo, hi) = match bounds {
                            Some((a, b)) => {
                                ((a.ceil() as i64).max(*lo), (b.floor() as i64).min(*hi))
                            }
                            None => (*lo, *hi),
                        };
                        GeneValue::Int(rng.gen_range(lo..=hi.max(lo)))
                    }
                    GeneKind::Real { lo, hi } => {
                        let (lo, hi) = match bounds {
                            Some((a, b)) => (a.max(*lo), b.min(*hi)),
                            None => (*lo, *hi),
                        };
                        let v = if lo == hi { lo } else { rng.gen_range(lo..=hi) };
                        GeneValue::Real(self.quantize(v))
                    }
                    GeneKind::Flag => GeneValue::Flag(rng.gen_bool(0.5)),
                    GeneKind::Choice { literals } => GeneValue::Choice(rng.gen_range(0..*literals)),
                    GeneKind::Presence => GeneValue::Present(rng.gen_bool(0.5)),
                    GeneKind::Size { lo, hi } => GeneValue::Size(rng.gen_range(*lo..=*hi)),
                }
            })
            .collect();
        let mut genome = Genome {
            values,
            elements: BTreeMap::new(),
        };
        self.sync_elements(&mut genome);
        let element_attrs = &self.element_attrs;
        for (key, rows) in genome.elements.iter_mut() {
            let attrs = element_attrs.get(key).cloned().unwrap_or_default();
            for row in rows.iter_mut() {
                for (attr, ty) in &attrs {
                    let v = match ty {
                        AttrType::Integer => GeneValue::Int(
                            rng.gen_range(DEFAULT_DOMAIN.0 as i64..=DEFAULT_DOMAIN.1 as i64),
                        ),
                        AttrType::Real => GeneValue::Real(
                            self.quantize(rng.gen_range(DEFAULT_DOMAIN.0..=DEFAULT_DOMAIN.1)),
                        ),
                        AttrType::Boolean => GeneValue::Flag(rng.gen_bool(0.5)),
                        AttrType::Enumeration(lits) => {
                            GeneValue::Choice(rng.gen_range(0..lits.len()))
                        }
                        AttrType::Str => GeneValue::Flag(false),
                    };
                    row.insert(attr.clone(), v);
                }
            }
        }
        genome
    }

    pub fn fitness_of(&self, genome: &Genome) -> f64 {
        let cfg = self.materialize(genome);
        let ctx = EvalCtx::new(self.model, &self.variant.context, &cfg);
        evaluate(&self.variant.expr, &ctx).value
    }
}

fn remove_subtree(cfg: &mut ObjectConfiguration, root: &str) {
    let mut stack = vec![root.to_string()];
    let mut doomed = BTreeSet::new();
    while let Some(id) = stack.pop() {
        if !doomed.insert(id.clone()) {
            continue;
        }
        for link in cfg.links.iter().filter(|l| l.from == id) {
            if let Some(to) = &link.to {
                stack.push(to.clone());
            }
        }
    }
    cfg.objects.retain(|o| !doomed.contains(&o.id));
    cfg.links.retain(|l| !doomed.contains(&l.from));
}

// ── Gene discovery ────────────────────────────────────────────────────

struct GeneCollector<'a> {
    model: &'a ClassModel,
    variant: &'a McdcVariant,
    genes: Vec<Gene>,
    seen: BTreeSet<String>,
    element_attrs: BTreeMap<String, Vec<(String, AttrType)>>,
    collection_cap: usize,
}

impl<'a> GeneCollector<'a> {
    fn push(&mut self, gene: Gene) {
        if self.seen.insert(gene.id.clone()) {
            self.genes.push(gene);
        }
    }

    fn collect_expr(&mut self, expr: &OclExpr, collection: Option<&str>) {
        match expr {
            OclExpr::And(l, r)
            | OclExpr::Or(l, r)
            | OclExpr::Xor(l, r)
            | OclExpr::Implies(l, r)
            | OclExpr::Rel(_, l, r)
            | OclExpr::Arith(_, l, r) => {
                self.collect_expr(l, collection);
                self.collect_expr(r, collection);
            }
            OclExpr::Not(inner) => self.collect_expr(inner, collection),
            OclExpr::Lit(_) | OclExpr::EnumLit { .. } => {}
            OclExpr::Var(name) => {
                let ty = self
                    .variant
                    .params()
                    .iter()
                    .find(|(p, _)| p == name)
                    .map(|(_, t)| t.clone())
                    .unwrap_or(AttrType::Integer);
                let kind = match ty {
                    AttrType::Real => GeneKind::Real {
                        lo: DEFAULT_DOMAIN.0,
                        hi: DEFAULT_DOMAIN.1,
                    },
                    AttrType::Boolean => GeneKind::Flag,
                    _ => GeneKind::Int {
                        lo: DEFAULT_DOMAIN.0 as i64,
                        hi: DEFAULT_DOMAIN.1 as i64,
                    },
                };
                self.push(Gene {
                    id: name.clone(),
                    kind,
                    site: Site::Param { name: name.clone() },
                });
            }
            OclExpr::Nav(nav) => self.collect_nav(nav, collection),
            OclExpr::Call(call) => {
                self.collect_receiver(&call.receiver, matches!(call.op, CollOp::IsUndefined));
                let key = call.receiver.key();
                for filter in &call.filters {
                    self.collect_expr(&filter.body, Some(&key));
                }
                match &call.op {
                    CollOp::ForAll(body) | CollOp::Exists(body) | CollOp::One(body) => {
                        self.collect_expr(body, Some(&key));
                    }
                    CollOp::Includes(nav) | CollOp::Excludes(nav) => {
                        // The argument object must be definable by the search.
                        self.presence_chain(&nav.path, nav.path.len());
                    }
                    _ => {}
                }
            }
        }
    }

    fn collect_nav(&mut self, nav: &Nav, collection: Option<&str>) {
        match nav.scope {
            NavScope::Element => {
                if let (Some(key), NavTarget::Attribute(ty)) = (collection, &nav.target) {
                    let attrs = self.element_attrs.entry(key.to_string()).or_default();
                    let name = nav.path[0].clone();
                    if !attrs.iter().any(|(a, _)| a == &name) {
                        attrs.push((name, ty.clone()));
                    }
                }
            }
            NavScope::SelfObject => match &nav.target {
                NavTarget::Constant(_) => {}
                NavTarget::Attribute(ty) => {
                    self.presence_chain(&nav.path, nav.path.len() - 1);
                    let id = nav.key();
                    let kind = match ty {
                        AttrType::Integer => GeneKind::Int {
                            lo: DEFAULT_DOMAIN.0 as i64,
                            hi: DEFAULT_DOMAIN.1 as i64,
                        },
                        AttrType::Real => GeneKind::Real {
                            lo: DEFAULT_DOMAIN.0,
                            hi: DEFAULT_DOMAIN.1,
                        },
                        AttrType::Boolean => GeneKind::Flag,
                        AttrType::Enumeration(lits) => GeneKind::Choice {
                            literals: lits.len(),
                        },
                        AttrType::Str => return,
                    };
                    self.push(Gene {
                        id,
                        kind,
                        site: Site::Attr {
                            path: nav.path.clone(),
                        },
                    });
                }
                NavTarget::Object { .. } => self.presence_chain(&nav.path, nav.path.len()),
                NavTarget::Collection { .. } => self.collect_receiver(nav, false),
            },
        }
    }

    fn collect_receiver(&mut self, nav: &Nav, undefined_guard: bool) {
        if undefined_guard || matches!(nav.target, NavTarget::Object { .. }) {
            self.presence_chain(&nav.path, nav.path.len());
            return;
        }
        self.presence_chain(&nav.path, nav.path.len() - 1);
        if let NavTarget::Collection { .. } = &nav.target {
            let mut class = self.variant.context.clone();
            for hop in &nav.path[..nav.path.len() - 1] {
                class = self
                    .model
                    .association(&class, hop)
                    .map(|a| a.target.clone())
                    .unwrap_or(class);
            }
            if let Some(assoc) = self
                .model
                .association(&class, &nav.path[nav.path.len() - 1])
            {
                let hi = assoc
                    .upper
                    .map(|u| (u as usize).min(self.collection_cap))
                    .unwrap_or(self.collection_cap);
                self.push(Gene {
                    id: nav.key(),
                    kind: GeneKind::Size {
                        lo: assoc.lower as usize,
                        hi,
                    },
                    site: Site::Collection {
                        path: nav.path.clone(),
                    },
                });
            }
        }
    }

    /// One presence gene per optional single-valued hop in `path[..len]`.
    fn presence_chain(&mut self, path: &[String], len: usize) {
        let mut class = self.variant.context.clone();
        for (i, hop) in path[..len].iter().enumerate() {
            let Some(assoc) = self.model.association(&class, hop) else {
                return;
            };
            if assoc.is_single() && !assoc.is_mandatory() {
                self.push(Gene {
                    id: path[..=i].join("."),
                    kind: GeneKind::Presence,
                    site: Site::Link {
                        path: path[..=i].to_vec(),
                    },
                });
            }
            class = assoc.target.clone();
        }
    }
}

// ── Engines ───────────────────────────────────────────────────────────

struct Run<'p, 'a> {
    problem: &'p SearchProblem<'a>,
    budget: u64,
    watchdog: bool,
    evals: u64,
    best: f64,
    best_genome: Option<Genome>,
    since_improve: u64,
    trace: Option<Vec<f64>>,
}

impl<'p, 'a> Run<'p, 'a> {
    fn new(problem: &'p SearchProblem<'a>, opts: &SearchOptions, watchdog: bool) -> Self {
        Run {
            problem,
            budget: opts.budget.max(1),
            watchdog: watchdog && problem.variant.has_dependent_group(),
            evals: 0,
            best: f64::INFINITY,
            best_genome: None,
            since_improve: 0,
            trace: opts.trace.then(Vec::new),
        }
    }

    /// One fitness evaluation = one iteration tick.
    fn eval(&mut self, genome: &Genome) -> (f64, Option<SearchStatus>) {
        let fit = self.problem.fitness_of(genome);
        self.evals += 1;
        if let Some(trace) = &mut self.trace {
            trace.push(fit);
        }
        if fit < self.best {
            self.best = fit;
            self.best_genome = Some(genome.clone());
            self.since_improve = 0;
        } else {
            self.since_improve += 1;
        }
        if self.best_genome.is_none() {
            self.best_genome = Some(genome.clone());
        }
        let stop = if self.best == 0.0 {
            Some(SearchStatus::Solved)
        } else if self.watchdog && self.since_improve >= self.budget / 2 {
            Some(SearchStatus::ConflictSuspected)
        } else if self.evals >= self.budget {
            Some(SearchStatus::BudgetExhausted)
        } else {
            None
        };
        (fit, stop)
    }

    fn finish(self, status: SearchStatus, started: Instant) -> SearchResult {
        let genome = self.best_genome.expect("at least one evaluation ran");
        SearchResult {
            status,
            cfg: self.problem.materialize(&genome),
            iterations: self.evals,
            elapsed: started.elapsed(),
            trace: self.trace,
        }
    }
}

/// Alternating-variable search from an explicit seed configuration.
pub fn avm_solve(
    model: &ClassModel,
    variant: &McdcVariant,
    seed_cfg: &ObjectConfiguration,
    opts: &SearchOptions,
) -> SearchResult {
    let problem = SearchProblem::new(model, variant, opts);
    let genome = problem.encode(seed_cfg);
    avm_from_genome(&problem, genome, opts)
}

pub fn avm_from_genome(
    problem: &SearchProblem,
    start: Genome,
    opts: &SearchOptions,
) -> SearchResult {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.rng_seed);
    let mut run = Run::new(problem, opts, true);
    let mut current = start;
    let (mut current_fit, stop) = run.eval(&current);
    if let Some(status) = stop {
        return run.finish(status, started);
    }

    loop {
        let mut improved_cycle = false;
        for pass in 0..2 {
            let refinement = pass == 1;
            if refinement && (improved_cycle || opts.real_precision >= 1.0) {
                break;
            }
            let handles = problem.handles(&current);
            for handle in &handles {
                let outcome = step_gene(
                    problem,
                    &mut run,
                    &mut current,
                    &mut current_fit,
                    handle,
                    refinement,
                );
                match outcome {
                    StepOutcome::Stopped(status) => return run.finish(status, started),
                    StepOutcome::Improved => improved_cycle = true,
                    StepOutcome::NoChange => {}
                }
            }
        }
        if !improved_cycle {
            // Random restart; the evaluation budget keeps counting.
            current = problem.random_genome(&mut rng, opts.ranges.as_ref());
            let (fit, stop) = run.eval(&current);
            current_fit = fit;
            if let Some(status) = stop {
                return run.finish(status, started);
            }
        }
    }
}

enum StepOutcome {
    Improved,
    NoChange,
    Stopped(SearchStatus),
}

fn step_gene(
    problem: &SearchProblem,
    run: &mut Run,
    current: &mut Genome,
    current_fit: &mut f64,
    handle: &Handle,
    refinement: bool,
) -> StepOutcome {
    let Some(value) = problem.get(current, handle) else {
        return StepOutcome::NoChange;
    };
    enum Move {
        Numeric { lo: f64, hi: f64, int: bool },
        Toggle,
        Cycle(usize),
        Resize { lo: usize, hi: usize },
    }
    let mv = match handle {
        Handle::Static(gi) => match &problem.genes[*gi].kind {
            GeneKind::Int { lo, hi } => Move::Numeric {
                lo: *lo as f64,
                hi: *hi as f64,
                int: true,
            },
            GeneKind::Real { lo, hi } => Move::Numeric {
                lo: *lo,
                hi: *hi,
                int: false,
            },
            GeneKind::Flag | GeneKind::Presence => Move::Toggle,
            GeneKind::Choice { literals } => Move::Cycle(*literals),
            GeneKind::Size { lo, hi } => Move::Resize { lo: *lo, hi: *hi },
        },
        Handle::Element { ty, .. } => match ty {
            AttrType::Integer => Move::Numeric {
                lo: DEFAULT_DOMAIN.0,
                hi: DEFAULT_DOMAIN.1,
                int: true,
            },
            AttrType::Real => Move::Numeric {
                lo: DEFAULT_DOMAIN.0,
                hi: DEFAULT_DOMAIN.1,
                int: false,
            },
            AttrType::Boolean | AttrType::Str => Move::Toggle,
            AttrType::Enumeration(lits) => Move::Cycle(lits.len()),
        },
    };

    match mv {
        Move::Numeric { lo, hi, int } => {
            if int && refinement {
                return StepOutcome::NoChange;
            }
            let base_step = if refinement {
                problem.real_precision
            } else {
                1.0
            };
            let as_f = |v: &GeneValue| match v {
                GeneValue::Int(i) => *i as f64,
                GeneValue::Real(r) => *r,
                _ => 0.0,
            };
            let make = |problem: &SearchProblem, v: f64| {
                let v = v.clamp(lo, hi);
                if int {
                    GeneValue::Int(v.round() as i64)
                } else {
                    GeneValue::Real(problem.quantize(v))
                }
            };
            let origin = as_f(&value);
            let mut improved = false;
            for dir in [1.0, -1.0] {
                let candidate = make(problem, origin + dir * base_step);
                if candidate == value {
                    continue;
                }
                problem.set(current, handle, candidate.clone());
                let (fit, stop) = run.eval(current);
                if let Some(status) = stop {
                    return StepOutcome::Stopped(status);
                }
                if fit < *current_fit {
                    *current_fit = fit;
                    improved = true;
                    // Pattern moves: accelerate in the improving direction.
                    let mut step = base_step * 2.0;
                    loop {
                        let here = as_f(&problem.get(current, handle).unwrap());
                        let next = make(problem, here + dir * step);
                        if next == problem.get(current, handle).unwrap() {
                            break;
                        }
                        let before = problem.get(current, handle).unwrap();
                        problem.set(current, handle, next);
                        let (fit, stop) = run.eval(current);
                        if let Some(status) = stop {
                            return StepOutcome::Stopped(status);
                        }
                        if fit < *current_fit {
                            *current_fit = fit;
                            step *= 2.0;
                        } else {
                            problem.set(current, handle, before);
                            break;
                        }
                    }
                    break;
                }
                problem.set(current, handle, value.clone());
            }
            if improved {
                StepOutcome::Improved
            } else {
                StepOutcome::NoChange
            }
        }
        Move::Toggle => {
            if refinement {
                return StepOutcome::NoChange;
            }
            let flipped = match &value {
                GeneValue::Flag(b) => GeneValue::Flag(!b),
                GeneValue::Present(b) => GeneValue::Present(!b),
                other => other.clone(),
            };
            try_categorical(problem, run, current, current_fit, handle, value, flipped)
        }
        Move::Cycle(len) => {
            if refinement || len < 2 {
                return StepOutcome::NoChange;
            }
            let next = match &value {
                GeneValue::Choice(i) => GeneValue::Choice((i + 1) % len),
                other => other.clone(),
            };
            try_categorical(problem, run, current, current_fit, handle, value, next)
        }
        Move::Resize { lo, hi } => {
            if refinement {
                return StepOutcome::NoChange;
            }
            let GeneValue::Size(n) = value else {
                return StepOutcome::NoChange;
            };
            let mut improved = false;
            for candidate in [n + 1, n.wrapping_sub(1)] {
                if candidate < lo || candidate > hi || candidate == n {
                    continue;
                }
                let outcome = try_categorical(
                    problem,
                    run,
                    current,
                    current_fit,
                    handle,
                    GeneValue::Size(n),
                    GeneValue::Size(candidate),
                );
                match outcome {
                    StepOutcome::Stopped(s) => return StepOutcome::Stopped(s),
                    StepOutcome::Improved => {
                        improved = true;
                        break;
                    }
                    StepOutcome::NoChange => {}
                }
            }
            if improved {
                StepOutcome::Improved
            } else {
                StepOutcome::NoChange
            }
        }
    }
}

fn try_categorical(
    problem: &SearchProblem,
    run: &mut Run,
    current: &mut Genome,
    current_fit: &mut f64,
    handle: &Handle,
    old: GeneValue,
    new: GeneValue,
) -> StepOutcome {
    if old == new {
        return StepOutcome::NoChange;
    }
    problem.set(current, handle, new);
    let (fit, stop) = run.eval(current);
    if let Some(status) = stop {
        return StepOutcome::Stopped(status);
    }
    if fit < *current_fit {
        *current_fit = fit;
        StepOutcome::Improved
    } else {
        problem.set(current, handle, old);
        StepOutcome::NoChange
    }
}

/// Uniform random sampling baseline.
pub fn random_solve(
    model: &ClassModel,
    variant: &McdcVariant,
    opts: &SearchOptions,
) -> SearchResult {
    let started = Instant::now();
    let problem = SearchProblem::new(model, variant, opts);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.rng_seed);
    let mut run = Run::new(&problem, opts, false);
    loop {
        let genome = problem.random_genome(&mut rng, opts.ranges.as_ref());
        let (_, stop) = run.eval(&genome);
        if let Some(status) = stop {
            return run.finish(status, started);
        }
    }
}

/// Sample one configuration uniformly (within reduced ranges when given).
pub fn sample_configuration(
    model: &ClassModel,
    variant: &McdcVariant,
    ranges: Option<&RangeMap>,
    rng_seed: u64,
    opts: &SearchOptions,
) -> ObjectConfiguration {
    let problem = SearchProblem::new(model, variant, opts);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let genome = problem.random_genome(&mut rng, ranges);
    problem.materialize(&genome)
}

/// True when some dependent clause group has stopped improving for half the
/// budget: the fitness series' running best last moved at least budget/2
/// evaluations ago.
pub fn conflict_watchdog(trace: &[f64], budget: u64, groups: &[Vec<usize>]) -> bool {
    if trace.is_empty() || !groups.iter().any(|g| g.len() >= 2) {
        return false;
    }
    let mut best = trace[0];
    let mut stale = 1u64;
    for &fit in &trace[1..] {
        if fit < best {
            best = fit;
            stale = 0;
        }
        stale += 1;
    }
    stale >= budget / 2
}
