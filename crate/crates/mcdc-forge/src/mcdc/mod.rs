//! MC/DC constraint reformulation.
//!
//! For a constraint with n clauses, the pair table enumerates all 2^n clause
//! truth vectors and records, per clause, the row pairs that demonstrate the
//! clause independently affects the outcome. A minimal covering subset of
//! rows gives the MC/DC combinations; each combination is then rewritten
//! into a standalone constraint whose solutions force exactly that
//! combination of the original clauses.

mod negate;

use std::collections::BTreeSet;
use std::fmt;

use crate::model::AttrType;
use crate::ocl::{
    clause_symbols, decompose, render_constraint, Clause, ConstraintKind, OclConstraint, OclExpr,
    Skeleton,
};

pub use negate::{negate_clause, negate_predicate};

/// Guard on pair-table size (2^n rows).
pub const MAX_CLAUSES: usize = 12;

#[derive(Debug)]
pub enum McdcError {
    TooManyClauses(usize),
    NoPairForClause(usize),
    UnsupportedClauseShape(String),
}

impl fmt::Display for McdcError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            McdcError::TooManyClauses(n) => {
                write!(
                    f,
                    "predicate has {n} clauses, more than the supported {MAX_CLAUSES}"
                )
            }
            McdcError::NoPairForClause(k) => write!(
                f,
                "clause {k} cannot independently affect the outcome (no pair rows)"
            ),
            McdcError::UnsupportedClauseShape(what) => {
                write!(f, "clause shape not supported for negation: {what}")
            }
        }
    }
}

impl std::error::Error for McdcError {}

#[derive(Debug, Clone, PartialEq)]
pub struct PairRow {
    pub truth: Vec<bool>,
    pub outcome: bool,
}

/// Pair table over all clause truth vectors. Rows are ordered all-true
/// first, all-false last; row indices here are zero-based.
#[derive(Debug, Clone, PartialEq)]
pub struct PairTable {
    pub clause_count: usize,
    pub rows: Vec<PairRow>,
    /// Per clause, the row pairs (i, j) with i < j that differ only in that
    /// clause and produce opposite outcomes.
    pub pairs: Vec<Vec<(usize, usize)>>,
}

/// Build the pair table for a normalized predicate.
pub fn build_pair_table(predicate: &OclExpr) -> Result<PairTable, McdcError> {
    let (skeleton, clauses) = decompose(predicate);
    pair_table_of(&skeleton, clauses.len())
}

pub(crate) fn pair_table_of(skeleton: &Skeleton, n: usize) -> Result<PairTable, McdcError> {
    if n > MAX_CLAUSES {
        return Err(McdcError::TooManyClauses(n));
    }
    let total = 1usize << n;
    let rows: Vec<PairRow> = (0..total)
        .map(|i| {
            let truth: Vec<bool> = (0..n).map(|k| (i >> (n - 1 - k)) & 1 == 0).collect();
            let outcome = skeleton.eval(&truth);
            PairRow { truth, outcome }
        })
        .collect();
    let pairs = (0..n)
        .map(|k| {
            let bit = 1usize << (n - 1 - k);
            (0..total)
                .filter_map(|i| {
                    let j = i ^ bit;
                    (j > i && rows[i].outcome != rows[j].outcome).then_some((i, j))
                })
                .collect()
        })
        .collect();
    Ok(PairTable {
        clause_count: n,
        rows,
        pairs,
    })
}

/// Select a covering set of truth vectors from the pair table: clauses with
/// the fewest pairs are pinned first, later clauses prefer pairs overlapping
/// rows already selected, and ties go to the lexicographically smallest pair.
pub fn select_combinations(table: &PairTable) -> Result<Vec<Vec<bool>>, McdcError> {
    let mut order: Vec<usize> = (0..table.clause_count).collect();
    order.sort_by_key(|&k| (table.pairs[k].len(), k));
    let mut selected: BTreeSet<usize> = BTreeSet::new();
    for k in order {
        if table.pairs[k].is_empty() {
            return Err(McdcError::NoPairForClause(k));
        }
        let (i, j) = *table.pairs[k]
            .iter()
            .max_by_key(|(i, j)| {
                let overlap = usize::from(selected.contains(i)) + usize::from(selected.contains(j));
                (overlap, std::cmp::Reverse((*i, *j)))
            })
            .expect("pair list checked non-empty");
        selected.insert(i);
        selected.insert(j);
    }
    Ok(selected
        .into_iter()
        .map(|i| table.rows[i].truth.clone())
        .collect())
}

/// One reformulated constraint that forces one MC/DC truth combination.
#[derive(Debug, Clone, PartialEq)]
pub struct McdcVariant {
    pub origin: String,
    pub context: String,
    pub kind: ConstraintKind,
    pub combination: Vec<bool>,
    /// The reformulated body: the original tree with every disjunction
    /// turned into a conjunction and each clause in its combination polarity.
    pub expr: OclExpr,
    /// Polarity-adjusted clauses in index order (the variant's predicate).
    pub clauses: Vec<OclExpr>,
    pub dependent_groups: Vec<Vec<usize>>,
}

impl McdcVariant {
    pub fn combo_label(&self) -> String {
        self.combination
            .iter()
            .map(|&b| if b { 'T' } else { 'F' })
            .collect()
    }

    pub fn id(&self) -> String {
        format!("{}:{}", self.origin, self.combo_label())
    }

    pub fn params(&self) -> &[(String, AttrType)] {
        match &self.kind {
            ConstraintKind::Invariant => &[],
            ConstraintKind::Precondition { params, .. } => params,
        }
    }

    pub fn render(&self) -> String {
        render_constraint(&self.context, &self.kind, &self.expr)
    }

    pub fn has_dependent_group(&self) -> bool {
        self.dependent_groups.iter().any(|g| g.len() >= 2)
    }
}

/// Reformulate a constraint into one variant per selected MC/DC combination.
pub fn reformulate(constraint: &OclConstraint) -> Result<Vec<McdcVariant>, McdcError> {
    let (skeleton, clauses) = decompose(&constraint.body);
    let table = pair_table_of(&skeleton, clauses.len())?;
    let combinations = select_combinations(&table)?;
    combinations
        .into_iter()
        .map(|combination| {
            let polarity: Vec<OclExpr> = clauses
                .iter()
                .zip(&combination)
                .map(|(clause, &keep)| {
                    if keep {
                        Ok(clause.expr.clone())
                    } else {
                        negate_clause(&clause.expr)
                    }
                })
                .collect::<Result<_, _>>()?;
            let expr = conjunction_of(&skeleton, &polarity);
            let dependent_groups = clause_groups(&polarity);
            Ok(McdcVariant {
                origin: constraint.id.clone(),
                context: constraint.context.clone(),
                kind: constraint.kind.clone(),
                combination,
                expr,
                clauses: polarity,
                dependent_groups,
            })
        })
        .collect()
}

/// Pinning every clause to a polarity makes the boolean structure a pure
/// conjunction, so `or` nodes become `and` while the tree shape is kept.
fn conjunction_of(skeleton: &Skeleton, polarity: &[OclExpr]) -> OclExpr {
    match skeleton {
        Skeleton::And(l, r) | Skeleton::Or(l, r) => {
            OclExpr::and(conjunction_of(l, polarity), conjunction_of(r, polarity))
        }
        Skeleton::Leaf { clause, .. } => polarity[*clause].clone(),
    }
}

/// Partition clause indices: clauses sharing any attribute or variable are
/// grouped, transitively.
pub fn dependency_groups(clauses: &[Clause]) -> Vec<Vec<usize>> {
    clause_groups_from_symbols(clauses.iter().map(|c| c.attrs.clone()).collect())
}

/// Same partition, recomputed from a variant's polarity-adjusted clauses.
pub fn static_dependency_groups(variant: &McdcVariant) -> Vec<Vec<usize>> {
    clause_groups(&variant.clauses)
}

fn clause_groups(clauses: &[OclExpr]) -> Vec<Vec<usize>> {
    clause_groups_from_symbols(clauses.iter().map(clause_symbols).collect())
}

fn clause_groups_from_symbols(symbols: Vec<BTreeSet<String>>) -> Vec<Vec<usize>> {
    let n = symbols.len();
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
            if !symbols[i].is_disjoint(&symbols[j]) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_of: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let root = find(&mut parent, i);
        match root_of[root] {
            Some(g) => groups[g].push(i),
            None => {
                root_of[root] = Some(groups.len());
                groups.push(vec![i]);
            }
        }
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{load_model_str, ClassModel};
    use crate::ocl::{parse, parse_expr_str, render_expr};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn gcs() -> ClassModel {
        load_model_str(include_str!("../../tests/data/gcs.model.json")).unwrap()
    }

    fn corpus() -> Vec<OclConstraint> {
        parse(include_str!("../../tests/data/gcs.ocl"), &gcs()).unwrap()
    }

    #[test]
    fn c1_pair_table_matches_worked_rows() {
        let constraints = corpus();
        let table = build_pair_table(&constraints[0].body).unwrap();
        assert_eq!(table.clause_count, 3);
        assert_eq!(table.rows[1].truth, [true, true, false]);
        assert!(table.rows[1].outcome);
        assert!(!table.rows[3].outcome);
        // Zero-based rows; the one-based table reads (1,5),(2,6),(3,7) / (2,4) / (3,4).
        assert_eq!(table.pairs[0], [(0, 4), (1, 5), (2, 6)]);
        assert_eq!(table.pairs[1], [(1, 3)]);
        assert_eq!(table.pairs[2], [(2, 3)]);
    }

    #[test]
    fn single_clause_pairs_true_against_false() {
        let constraints = corpus();
        let table = build_pair_table(&constraints[1].body).unwrap();
        assert_eq!(table.pairs, vec![vec![(0, 1)]]);
        let combos = select_combinations(&table).unwrap();
        assert_eq!(combos, [[true], [false]]);
    }

    #[test]
    fn c1_combinations_match_minimal_pair_subsets() {
        let constraints = corpus();
        let table = build_pair_table(&constraints[0].body).unwrap();
        let combos = select_combinations(&table).unwrap();
        let labels: Vec<String> = combos
            .iter()
            .map(|c| c.iter().map(|&b| if b { 'T' } else { 'F' }).collect())
            .collect();
        assert_eq!(labels, ["TTF", "TFT", "TFF", "FTF"]);
    }

    #[test]
    fn conjunction_combinations_cover_both_polarities() {
        let model = gcs();
        let body = parse_expr_str(
            "self.mission.flightDistance>100 and self.mission.waypoints>10",
            &model,
            "GCS",
            &[],
        )
        .unwrap();
        let table = build_pair_table(&body).unwrap();
        let combos = select_combinations(&table).unwrap();
        assert_eq!(combos, [[true, true], [true, false], [false, true]]);
    }

    /// Brute-force MC/DC check: inside the selected set, every clause has a
    /// row pair differing only in that clause with opposite outcomes.
    fn satisfies_mcdc(skeleton: &Skeleton, n: usize, combos: &[Vec<bool>]) -> bool {
        (0..n).all(|k| {
            combos.iter().enumerate().any(|(a, ra)| {
                combos.iter().skip(a + 1).any(|rb| {
                    ra.iter()
                        .zip(rb)
                        .enumerate()
                        .all(|(i, (x, y))| (x == y) != (i == k))
                        && skeleton.eval(ra) != skeleton.eval(rb)
                })
            })
        })
    }

    fn random_skeleton(rng: &mut StdRng, next: &mut usize, depth: usize) -> Skeleton {
        if depth == 0 || (*next > 0 && rng.gen_bool(0.3)) {
            let leaf = Skeleton::Leaf {
                clause: *next,
                negated: rng.gen_bool(0.3),
            };
            *next += 1;
            leaf
        } else {
            let l = Box::new(random_skeleton(rng, next, depth - 1));
            let r = Box::new(random_skeleton(rng, next, depth - 1));
            if rng.gen_bool(0.5) {
                Skeleton::And(l, r)
            } else {
                Skeleton::Or(l, r)
            }
        }
    }

    #[test]
    fn selected_combinations_pass_brute_force_checker() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..200 {
            let mut next = 0;
            let skeleton = random_skeleton(&mut rng, &mut next, 3);
            let n = next.min(6);
            if next > 6 {
                continue;
            }
            let table = pair_table_of(&skeleton, n).unwrap();
            let combos = select_combinations(&table).unwrap();
            assert!(
                satisfies_mcdc(&skeleton, n, &combos),
                "skeleton {skeleton:?}"
            );
        }
    }

    #[test]
    fn pair_table_pairs_recheck_soundly() {
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..100 {
            let mut next = 0;
            let skeleton = random_skeleton(&mut rng, &mut next, 3);
            if next > 6 {
                continue;
            }
            let table = pair_table_of(&skeleton, next).unwrap();
            for (k, pairs) in table.pairs.iter().enumerate() {
                for &(i, j) in pairs {
                    let (a, b) = (&table.rows[i], &table.rows[j]);
                    assert_ne!(a.outcome, b.outcome);
                    for c in 0..next {
                        assert_eq!(a.truth[c] == b.truth[c], c != k);
                    }
                }
            }
        }
    }

    #[test]
    fn disjunction_pairs_match_brute_force() {
        let model = gcs();
        let body = parse_expr_str(
            "self.mission.flightDistance>100 or self.mission.waypoints>10",
            &model,
            "GCS",
            &[],
        )
        .unwrap();
        let table = build_pair_table(&body).unwrap();
        // p or q: outcomes T,T,T,F; flipping either clause matters only
        // against the all-false row.
        assert_eq!(table.pairs[0], [(1, 3)]);
        assert_eq!(table.pairs[1], [(2, 3)]);
        let combos = select_combinations(&table).unwrap();
        assert_eq!(combos, [[true, false], [false, true], [false, false]]);
    }

    #[test]
    fn relational_negation_inverts_operator() {
        let model = gcs();
        let clause = parse_expr_str("self.mission.waypoints>15", &model, "GCS", &[]).unwrap();
        let negated = negate_clause(&clause).unwrap();
        assert_eq!(render_expr(&negated), "self.mission.waypoints<=15");
    }

    #[test]
    fn undefined_guard_negation_flips_literal() {
        let model = gcs();
        let clause =
            parse_expr_str("self.mission.oclIsUndefined()=false", &model, "GCS", &[]).unwrap();
        let negated = negate_clause(&clause).unwrap();
        assert_eq!(render_expr(&negated), "self.mission.oclIsUndefined()=true");
    }

    #[test]
    fn collection_negations_follow_rewrite_table() {
        let model = gcs();
        let cases = [
            (
                "self.mission.wps->forAll(alt>100)",
                "self.mission.wps->exists(alt<=100)",
            ),
            (
                "self.mission.wps->exists(alt>100)",
                "self.mission.wps->forAll(alt<=100)",
            ),
            (
                "self.mission.wps->one(alt>100)",
                "self.mission.wps->select(alt>100)->size()<>1",
            ),
            (
                "self.mission.wps->isEmpty()",
                "self.mission.wps->notEmpty()",
            ),
            (
                "self.mission.wps->notEmpty()",
                "self.mission.wps->isEmpty()",
            ),
            (
                "self.mission.wps->select(alt>100)->isEmpty()",
                "self.mission.wps->select(alt>100)->notEmpty()",
            ),
            (
                "self.mission.wps->reject(alt>100)->isEmpty()",
                "self.mission.wps->reject(alt>100)->notEmpty()",
            ),
            (
                "self.mission.wps->select(alt>100)->size()=2",
                "self.mission.wps->select(alt>100)->size()<>2",
            ),
            (
                "self.mission.wps->select(alt>100)->size()<2",
                "self.mission.wps->select(alt>100)->size()>=2",
            ),
            (
                "self.mission.wps->select(alt>100)->size()>2",
                "self.mission.wps->select(alt>100)->size()<=2",
            ),
        ];
        for (input, expected) in cases {
            let clause = parse_expr_str(input, &model, "GCS", &[]).unwrap();
            let negated = negate_clause(&clause).unwrap();
            assert_eq!(render_expr(&negated), expected, "negating {input}");
            // Negation parses back within the supported subset.
            parse_expr_str(&render_expr(&negated), &model, "GCS", &[]).unwrap();
        }
    }

    #[test]
    fn double_negation_restores_relational_clause() {
        let model = gcs();
        let clause = parse_expr_str("self.mission.waypoints>15", &model, "GCS", &[]).unwrap();
        let back = negate_clause(&negate_clause(&clause).unwrap()).unwrap();
        assert_eq!(back, clause);
    }

    #[test]
    fn c1_reformulates_into_four_conjunctive_variants() {
        let constraints = corpus();
        let variants = reformulate(&constraints[0]).unwrap();
        let labels: Vec<String> = variants.iter().map(|v| v.combo_label()).collect();
        assert_eq!(labels, ["TTF", "TFT", "TFF", "FTF"]);
        let model = gcs();
        let expected = [
            "context GCS inv: self.mission.oclIsUndefined()=false and \
             (self.mission.flightTime<self.uav.MAX_TIME and \
             self.mission.flightDistance>=self.uav.MAX_RANGE)",
            "context GCS inv: self.mission.oclIsUndefined()=false and \
             (self.mission.flightTime>=self.uav.MAX_TIME and \
             self.mission.flightDistance<self.uav.MAX_RANGE)",
            "context GCS inv: self.mission.oclIsUndefined()=false and \
             (self.mission.flightTime>=self.uav.MAX_TIME and \
             self.mission.flightDistance>=self.uav.MAX_RANGE)",
            "context GCS inv: self.mission.oclIsUndefined()=true and \
             (self.mission.flightTime<self.uav.MAX_TIME and \
             self.mission.flightDistance>=self.uav.MAX_RANGE)",
        ];
        for (variant, expected_text) in variants.iter().zip(expected) {
            let got = parse(&variant.render(), &model).unwrap();
            let want = parse(expected_text, &model).unwrap();
            assert_eq!(got[0].body, want[0].body, "variant {}", variant.id());
        }
    }

    #[test]
    fn variants_contain_no_disjunction() {
        for constraint in corpus() {
            for variant in reformulate(&constraint).unwrap() {
                fn no_or(e: &OclExpr) -> bool {
                    match e {
                        OclExpr::Or(..) => false,
                        OclExpr::And(l, r) => no_or(l) && no_or(r),
                        _ => true,
                    }
                }
                assert!(no_or(&variant.expr), "{}", variant.id());
            }
        }
    }

    #[test]
    fn single_clause_yields_original_and_negated() {
        let constraints = corpus();
        let variants = reformulate(&constraints[1]).unwrap();
        assert_eq!(variants.len(), 2);
        assert_eq!(variants[0].expr, constraints[1].body);
        assert_eq!(
            render_expr(&variants[1].expr),
            "self.mission.waypoints<=self.mission.MIN_WP_LIMIT"
        );
    }

    #[test]
    fn shared_attribute_clauses_form_one_group() {
        let constraints = corpus();
        let variants = reformulate(&constraints[6]).unwrap();
        assert_eq!(variants[0].dependent_groups, vec![vec![0, 1]]);
        assert_eq!(static_dependency_groups(&variants[0]), vec![vec![0, 1]]);
    }

    #[test]
    fn c1_groups_are_singletons() {
        let constraints = corpus();
        let variants = reformulate(&constraints[0]).unwrap();
        assert_eq!(
            variants[0].dependent_groups,
            vec![vec![0], vec![1], vec![2]]
        );
        assert!(!variants[0].has_dependent_group());
    }

    #[test]
    fn too_many_clauses_is_guarded() {
        let mut skeleton = Skeleton::Leaf {
            clause: 0,
            negated: false,
        };
        for i in 1..=MAX_CLAUSES {
            skeleton = Skeleton::And(
                Box::new(skeleton),
                Box::new(Skeleton::Leaf {
                    clause: i,
                    negated: false,
                }),
            );
        }
        let err = pair_table_of(&skeleton, MAX_CLAUSES + 1).unwrap_err();
        assert!(matches!(err, McdcError::TooManyClauses(_)));
    }

    #[test]
    fn variant_count_for_corpus() {
        let total: usize = corpus().iter().map(|c| reformulate(c).unwrap().len()).sum();
        // C1: 4, C2..C6: 2 each, C7..C10: 3 each.
        assert_eq!(total, 26);
    }
}
