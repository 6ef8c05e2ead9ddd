//! Constraint-driven reduction of numeric search domains.
//!
//! Before search starts, the constants that appear next to an Integer/Real
//! attribute or variable are turned into a per-symbol sampling range. With a
//! single constant c and scaling factor s_f the range is [0, 2*c*s_f] for
//! c > 0, [2*c*s_f, 0] for c < 0, and [-s_f, s_f] for c = 0. When one
//! attribute collects constants from several clauses the formulas take the
//! collection's minimum/maximum instead. Clauses that relate attributes or
//! variables to each other without a usable constant fall back to a randomly
//! drawn constant in [1, 100]. Boolean and enumeration genes are untouched;
//! their domains are already small.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::hash::fnv1a64;
use crate::mcdc::McdcVariant;
use crate::model::{AttrType, Value, DEFAULT_DOMAIN};
use crate::ocl::{ArithOp, NavTarget, OclExpr};

/// Which reduction rule produced a gene's bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RangeCase {
    SingleConstant,
    FoldedConstant,
    MinOfConstants,
    NoConstantRandom,
    MultiClauseConstants,
    DependentRandom,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneRange {
    pub lo: f64,
    pub hi: f64,
    pub case: RangeCase,
}

/// Reduced sampling bounds per symbol (attribute path or variable name).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RangeMap {
    pub sf: u32,
    pub ranges: BTreeMap<String, GeneRange>,
}

impl RangeMap {
    pub fn empty(sf: u32) -> Self {
        RangeMap {
            sf,
            ranges: BTreeMap::new(),
        }
    }

    pub fn bounds(&self, symbol: &str) -> Option<(f64, f64)> {
        self.ranges.get(symbol).map(|r| (r.lo, r.hi))
    }
}

/// Sample one configuration for a variant with its numeric genes drawn
/// uniformly inside the reduced bounds; categorical genes sample their
/// full (small) domains.
pub fn sample_within(
    model: &crate::model::ClassModel,
    variant: &McdcVariant,
    ranges: &RangeMap,
    rng_seed: u64,
    opts: &crate::search::SearchOptions,
) -> crate::model::ObjectConfiguration {
    crate::search::sample_configuration(model, variant, Some(ranges), rng_seed, opts)
}

#[derive(Debug)]
pub enum RangeError {
    DivisionByZeroConstant,
}

impl fmt::Display for RangeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RangeError::DivisionByZeroConstant => {
                write!(f, "constant expression divides by zero")
            }
        }
    }
}

impl std::error::Error for RangeError {}

/// Compute reduced ranges for every numeric symbol of a variant.
pub fn reduce(variant: &McdcVariant, sf: u32, rng_seed: u64) -> Result<RangeMap, RangeError> {
    reduce_clauses(&variant.clauses, variant.params(), sf, rng_seed)
}

/// Same, over an explicit clause list (`params` types the free variables).
pub fn reduce_clauses(
    clauses: &[OclExpr],
    params: &[(String, AttrType)],
    sf: u32,
    rng_seed: u64,
) -> Result<RangeMap, RangeError> {
    let infos: Vec<ClauseInfo> = clauses
        .iter()
        .map(|c| analyze_clause(c, params))
        .collect::<Result<_, _>>()?;
    let mut map = RangeMap::empty(sf);
    let sf = sf as f64;

    for group in group_by_shared_symbols(&infos) {
        let symbols: BTreeSet<&String> = group
            .iter()
            .flat_map(|&i| infos[i].symbols.iter())
            .collect();
        if symbols.is_empty() {
            continue;
        }
        if group.len() == 1 {
            let info = &infos[group[0]];
            let (c, case) = match info.constants.len() {
                0 => (
                    random_constant(rng_seed, "clause", &group[0].to_string()),
                    RangeCase::NoConstantRandom,
                ),
                1 => {
                    let (value, folded) = info.constants[0];
                    (
                        value,
                        if folded {
                            RangeCase::FoldedConstant
                        } else {
                            RangeCase::SingleConstant
                        },
                    )
                }
                _ => {
                    let min = info
                        .constants
                        .iter()
                        .map(|(v, _)| *v)
                        .fold(f64::INFINITY, f64::min);
                    (min, RangeCase::MinOfConstants)
                }
            };
            let (lo, hi) = single_constant_bounds(c, sf);
            for symbol in symbols {
                insert(&mut map, symbol, lo, hi, case);
            }
        } else if group.iter().any(|&i| infos[i].symbols.len() >= 2) {
            // Dependent clauses relating attributes/variables to each other:
            // every symbol in the group draws its own constant.
            for symbol in symbols {
                let c = random_constant(rng_seed, "symbol", symbol);
                let (lo, hi) = single_constant_bounds(c, sf);
                insert(&mut map, symbol, lo, hi, RangeCase::DependentRandom);
            }
        } else {
            // One attribute constrained against constants in several clauses.
            for symbol in symbols {
                let cs: Vec<f64> = group
                    .iter()
                    .filter(|&&i| infos[i].symbols.contains(symbol))
                    .filter_map(|&i| {
                        let consts = &infos[i].constants;
                        (!consts.is_empty())
                            .then(|| consts.iter().map(|(v, _)| *v).fold(f64::INFINITY, f64::min))
                    })
                    .collect();
                if cs.is_empty() {
                    let c = random_constant(rng_seed, "symbol", symbol);
                    let (lo, hi) = single_constant_bounds(c, sf);
                    insert(&mut map, symbol, lo, hi, RangeCase::DependentRandom);
                } else {
                    let (lo, hi) = collected_constant_bounds(&cs, sf);
                    insert(&mut map, symbol, lo, hi, RangeCase::MultiClauseConstants);
                }
            }
        }
    }
    Ok(map)
}

fn insert(map: &mut RangeMap, symbol: &str, lo: f64, hi: f64, case: RangeCase) {
    let lo = lo.max(DEFAULT_DOMAIN.0);
    let hi = hi.min(DEFAULT_DOMAIN.1).max(lo);
    map.ranges
        .insert(symbol.to_string(), GeneRange { lo, hi, case });
}

fn single_constant_bounds(c: f64, sf: f64) -> (f64, f64) {
    if c > 0.0 {
        (0.0, 2.0 * c * sf)
    } else if c < 0.0 {
        (2.0 * c * sf, 0.0)
    } else {
        (-sf, sf)
    }
}

fn collected_constant_bounds(cs: &[f64], sf: f64) -> (f64, f64) {
    let min = cs.iter().copied().fold(f64::INFINITY, f64::min);
    let max = cs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if min > 0.0 {
        (0.0, 2.0 * max * sf)
    } else if max < 0.0 {
        (2.0 * min * sf, 0.0)
    } else if min == 0.0 && max == 0.0 {
        (-sf, sf)
    } else {
        (2.0 * min * sf, 2.0 * max * sf)
    }
}

/// Deterministic per-key draw from [1, 100]. Keyed (not sequential) so the
/// same seed yields the same constant per symbol regardless of clause order.
fn random_constant(rng_seed: u64, kind: &str, key: &str) -> f64 {
    let seed = fnv1a64(&[&rng_seed.to_le_bytes(), kind.as_bytes(), key.as_bytes()]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.gen_range(1..=100) as f64
}

struct ClauseInfo {
    symbols: BTreeSet<String>,
    /// Folded maximal constant subexpressions: (value, involved arithmetic).
    constants: Vec<(f64, bool)>,
}

fn analyze_clause(
    clause: &OclExpr,
    params: &[(String, AttrType)],
) -> Result<ClauseInfo, RangeError> {
    let mut info = ClauseInfo {
        symbols: BTreeSet::new(),
        constants: Vec::new(),
    };
    if let OclExpr::Rel(_, l, r) = clause {
        analyze_side(l, params, &mut info)?;
        analyze_side(r, params, &mut info)?;
    }
    Ok(info)
}

fn analyze_side(
    expr: &OclExpr,
    params: &[(String, AttrType)],
    info: &mut ClauseInfo,
) -> Result<(), RangeError> {
    if let Some(folded) = fold_constant(expr)? {
        info.constants.push(folded);
        return Ok(());
    }
    match expr {
        OclExpr::Arith(_, l, r) => {
            analyze_side(l, params, info)?;
            analyze_side(r, params, info)?;
        }
        OclExpr::Nav(nav) => {
            if matches!(
                nav.target,
                NavTarget::Attribute(AttrType::Integer) | NavTarget::Attribute(AttrType::Real)
            ) {
                info.symbols.insert(nav.key());
            }
        }
        OclExpr::Var(name) => {
            let numeric = params
                .iter()
                .find(|(p, _)| p == name)
                .is_none_or(|(_, ty)| ty.is_numeric());
            if numeric {
                info.symbols.insert(name.clone());
            }
        }
        _ => {}
    }
    Ok(())
}

/// Fold an all-constant subexpression; `Some((value, used_arithmetic))`.
fn fold_constant(expr: &OclExpr) -> Result<Option<(f64, bool)>, RangeError> {
    match expr {
        OclExpr::Lit(Value::Int(i)) => Ok(Some((*i as f64, false))),
        OclExpr::Lit(Value::Real(r)) => Ok(Some((*r, false))),
        OclExpr::Nav(nav) => match &nav.target {
            NavTarget::Constant(v) => Ok(v.as_number().map(|n| (n, false))),
            _ => Ok(None),
        },
        OclExpr::Arith(op, l, r) => {
            let (Some((a, _)), Some((b, _))) = (fold_constant(l)?, fold_constant(r)?) else {
                return Ok(None);
            };
            if *op == ArithOp::Div && b == 0.0 {
                return Err(RangeError::DivisionByZeroConstant);
            }
            Ok(Some((op.apply(a, b), true)))
        }
        _ => Ok(None),
    }
}

fn group_by_shared_symbols(infos: &[ClauseInfo]) -> Vec<Vec<usize>> {
    let n = infos.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let root = find(parent, parent[x]);
            parent[x] = root;
        }
        parent[x]
    }
    for i in 0..n {
        for j in i + 1..n {
            if !infos[i].symbols.is_disjoint(&infos[j].symbols) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let root = find(&mut parent, i);
        match slot[root] {
            Some(g) => groups[g].push(i),
            None => {
                slot[root] = Some(groups.len());
                groups.push(vec![i]);
            }
        }
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcdc::reformulate;
    use crate::model::{load_model_str, ClassModel};
    use crate::ocl::{parse, parse_expr_str, OclConstraint};

    fn gcs() -> ClassModel {
        load_model_str(include_str!("../tests/data/gcs.model.json")).unwrap()
    }

    fn corpus(model: &ClassModel) -> Vec<OclConstraint> {
        parse(include_str!("../tests/data/gcs.ocl"), model).unwrap()
    }

    fn first_variant(model: &ClassModel, id: &str) -> McdcVariant {
        let constraints = corpus(model);
        let c = constraints.iter().find(|c| c.id == id).unwrap();
        reformulate(c).unwrap().remove(0)
    }

    #[test]
    fn single_clause_constant_scales_with_sf() {
        let model = gcs();
        let variant = first_variant(&model, "C2");
        // MIN_WP_LIMIT = 10 in the bundled model.
        let r1 = reduce(&variant, 1, 7).unwrap();
        assert_eq!(r1.bounds("mission.waypoints"), Some((0.0, 20.0)));
        assert_eq!(
            r1.ranges["mission.waypoints"].case,
            RangeCase::SingleConstant
        );
        let r2 = reduce(&variant, 2, 7).unwrap();
        assert_eq!(r2.bounds("mission.waypoints"), Some((0.0, 40.0)));
    }

    #[test]
    fn negated_variant_reduces_to_the_same_range() {
        let model = gcs();
        let constraints = corpus(&model);
        let c2 = constraints.iter().find(|c| c.id == "C2").unwrap();
        let negated = &reformulate(c2).unwrap()[1];
        let r = reduce(negated, 1, 7).unwrap();
        assert_eq!(r.bounds("mission.waypoints"), Some((0.0, 20.0)));
    }

    #[test]
    fn folded_constant_expression_drives_the_range() {
        // A model whose waypoint floor is 20 makes the folded constant 120.
        let text = r#"{
            "classes": [
                {"name": "GCS", "attributes": [], "constants": []},
                {"name": "Mission",
                 "attributes": [{"name": "waypoints", "type": "Integer"}],
                 "constants": [{"name": "MIN_WP_LIMIT", "value": 20}]}
            ],
            "associations": [
                {"source": "GCS", "target": "Mission", "role": "mission", "lower": 0, "upper": 1}
            ]
        }"#;
        let model = load_model_str(text).unwrap();
        let constraints = parse(
            "C3: context GCS inv: self.mission.waypoints>self.mission.MIN_WP_LIMIT+100",
            &model,
        )
        .unwrap();
        let variant = reformulate(&constraints[0]).unwrap().remove(0);
        let r1 = reduce(&variant, 1, 7).unwrap();
        assert_eq!(r1.bounds("mission.waypoints"), Some((0.0, 240.0)));
        assert_eq!(
            r1.ranges["mission.waypoints"].case,
            RangeCase::FoldedConstant
        );
        let r2 = reduce(&variant, 2, 7).unwrap();
        assert_eq!(r2.bounds("mission.waypoints"), Some((0.0, 480.0)));
    }

    #[test]
    fn attribute_with_variable_and_constant_uses_the_constant() {
        let model = gcs();
        let variant = first_variant(&model, "C5");
        let r1 = reduce(&variant, 1, 7).unwrap();
        assert_eq!(r1.bounds("distance"), Some((0.0, 2000.0)));
        assert_eq!(r1.bounds("minDist"), Some((0.0, 2000.0)));
        let r2 = reduce(&variant, 2, 7).unwrap();
        assert_eq!(r2.bounds("distance"), Some((0.0, 4000.0)));
    }

    #[test]
    fn multiple_variables_with_constant_share_its_range() {
        let model = gcs();
        let variant = first_variant(&model, "C6");
        let r1 = reduce(&variant, 1, 7).unwrap();
        assert_eq!(r1.bounds("distance"), Some((0.0, 3000.0)));
        let r2 = reduce(&variant, 2, 7).unwrap();
        assert_eq!(r2.bounds("distance"), Some((0.0, 6000.0)));
    }

    #[test]
    fn multi_clause_constants_use_min_and_max() {
        let model = gcs();
        let c7 = first_variant(&model, "C7");
        let r = reduce(&c7, 1, 7).unwrap();
        assert_eq!(r.bounds("mission.flightDistance"), Some((0.0, 10000.0)));
        assert_eq!(
            r.ranges["mission.flightDistance"].case,
            RangeCase::MultiClauseConstants
        );
        // C8 folds MIN_RANGE+100 and MAX_RANGE-100 to {120, 900} first.
        let c8 = first_variant(&model, "C8");
        let r = reduce(&c8, 1, 7).unwrap();
        assert_eq!(r.bounds("mission.flightDistance"), Some((0.0, 1800.0)));
    }

    #[test]
    fn variable_only_clause_draws_one_shared_constant() {
        let model = gcs();
        let variant = first_variant(&model, "C4");
        let r = reduce(&variant, 1, 42).unwrap();
        let d = r.bounds("distance").unwrap();
        assert_eq!(d, r.bounds("minDist").unwrap());
        assert_eq!(d.0, 0.0);
        assert!(d.1 >= 2.0 && d.1 <= 200.0);
        assert_eq!(r.ranges["distance"].case, RangeCase::NoConstantRandom);
        // Deterministic under the same seed.
        assert_eq!(r, reduce(&variant, 1, 42).unwrap());
    }

    #[test]
    fn independent_clauses_reduce_individually() {
        let model = gcs();
        let variant = first_variant(&model, "C9");
        let r = reduce(&variant, 1, 42).unwrap();
        // Route.MAX_RANGE = 10 in the bundled model.
        assert_eq!(r.bounds("distance"), Some((0.0, 20.0)));
        assert_eq!(r.bounds("minDist"), r.bounds("maxDist"));
        assert_eq!(r.ranges["minDist"].case, RangeCase::NoConstantRandom);
    }

    #[test]
    fn dependent_group_samples_per_symbol() {
        let model = gcs();
        let variant = first_variant(&model, "C10");
        let r = reduce(&variant, 1, 42).unwrap();
        // Every symbol of the dependent group draws its own constant; the
        // clause constant 1500 is not used.
        for symbol in ["distance", "minDist", "maxDist"] {
            let range = &r.ranges[symbol];
            assert_eq!(range.case, RangeCase::DependentRandom);
            assert_eq!(range.lo, 0.0);
            assert!(range.hi >= 2.0 && range.hi <= 200.0, "{symbol}: {range:?}");
        }
        assert_ne!(r.bounds("distance"), Some((0.0, 3000.0)));
    }

    #[test]
    fn mixed_sign_constants_take_the_envelope() {
        let model = load_model_str(
            r#"{"classes": [{"name": "T", "attributes": [{"name": "x", "type": "Integer"}],
                "constants": []}], "associations": []}"#,
        )
        .unwrap();
        let clauses = [
            parse_expr_str("self.x>-5", &model, "T", &[]).unwrap(),
            parse_expr_str("self.x<10", &model, "T", &[]).unwrap(),
        ];
        let r = reduce_clauses(&clauses, &[], 1, 7).unwrap();
        assert_eq!(r.bounds("x"), Some((-10.0, 20.0)));

        let zero = [parse_expr_str("self.x>0", &model, "T", &[]).unwrap()];
        let r = reduce_clauses(&zero, &[], 3, 7).unwrap();
        assert_eq!(r.bounds("x"), Some((-3.0, 3.0)));

        let negative = [parse_expr_str("self.x<-5", &model, "T", &[]).unwrap()];
        let r = reduce_clauses(&negative, &[], 1, 7).unwrap();
        assert_eq!(r.bounds("x"), Some((-10.0, 0.0)));
    }

    #[test]
    fn division_by_zero_constant_is_an_error() {
        let model = load_model_str(
            r#"{"classes": [{"name": "T", "attributes": [{"name": "x", "type": "Integer"}],
                "constants": []}], "associations": []}"#,
        )
        .unwrap();
        let clauses = [parse_expr_str("self.x>10/0", &model, "T", &[]).unwrap()];
        assert!(matches!(
            reduce_clauses(&clauses, &[], 1, 7),
            Err(RangeError::DivisionByZeroConstant)
        ));
    }

    #[test]
    fn scaling_factor_growth_never_shrinks_ranges() {
        let model = gcs();
        let constraints = corpus(&model);
        let mut checked = 0;
        for seed in 0..100u64 {
            for c in &constraints {
                for variant in reformulate(c).unwrap() {
                    let small = reduce(&variant, 1, seed).unwrap();
                    for sf in [2u32, 3, 5] {
                        let big = reduce(&variant, sf, seed).unwrap();
                        for (symbol, range) in &small.ranges {
                            let (lo, hi) = big.bounds(symbol).unwrap();
                            assert!(lo <= range.lo && hi >= range.hi, "{symbol} sf={sf}");
                            checked += 1;
                        }
                    }
                }
            }
        }
        assert!(checked >= 1000, "exercised {checked} range comparisons");
    }
}
