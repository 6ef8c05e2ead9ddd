//! Property tests: expression render/parse round-trips on generated
//! syntax trees, configuration save/load round-trips, and variant
//! fidelity (every solution of a reformulated variant induces exactly
//! the variant's truth combination on the original clauses).

use proptest::prelude::*;

use mcdc_forge::fitness::{clause_truth_vector, evaluate, truth, EvalCtx};
use mcdc_forge::mcdc::reformulate;
use mcdc_forge::model::{
    instantiate_default, load_configuration, load_model_str, save_configuration, ClassModel, Link,
    ObjectConfiguration, ObjectInstance, Value,
};
use mcdc_forge::ocl::{
    extract_clauses, parse, render_expr, Call, CollOp, Nav, NavScope, NavTarget, OclExpr, RelOp,
};

const PROP_MODEL: &str = r#"{
  "classes": [
    {
      "name": "Ctx",
      "attributes": [
        {"name": "count", "type": "Integer"},
        {"name": "ratio", "type": "Real"},
        {"name": "active", "type": "Boolean"},
        {"name": "mode", "type": {"enum": ["off", "slow", "fast"]}}
      ],
      "constants": [{"name": "LIMIT", "value": 25}]
    },
    {
      "name": "Part",
      "attributes": [{"name": "weight", "type": "Integer"}],
      "constants": []
    }
  ],
  "associations": [
    {"source": "Ctx", "target": "Part", "role": "part", "lower": 0, "upper": 1},
    {"source": "Ctx", "target": "Part", "role": "parts", "lower": 0, "upper": 4}
  ]
}"#;

fn prop_model() -> ClassModel {
    load_model_str(PROP_MODEL).unwrap()
}

fn self_nav(path: &[&str], target: NavTarget) -> OclExpr {
    OclExpr::Nav(Nav {
        scope: NavScope::SelfObject,
        path: path.iter().map(|s| s.to_string()).collect(),
        target,
    })
}

fn element_nav(attr: &str, target: NavTarget) -> OclExpr {
    OclExpr::Nav(Nav {
        scope: NavScope::Element,
        path: vec![attr.to_string()],
        target,
    })
}

fn int_attr() -> NavTarget {
    NavTarget::Attribute(mcdc_forge::AttrType::Integer)
}

// ── Expression round-trip ──────────────────────────────────────────────

fn arb_numeric() -> impl Strategy<Value = OclExpr> {
    let leaf = prop_oneof![
        Just(self_nav(&["count"], int_attr())),
        Just(self_nav(
            &["ratio"],
            NavTarget::Attribute(mcdc_forge::AttrType::Real)
        )),
        Just(self_nav(&["part", "weight"], int_attr())),
        Just(self_nav(&["LIMIT"], NavTarget::Constant(Value::Int(25)))),
        (-99i64..200).prop_map(|i| OclExpr::Lit(Value::Int(i))),
        (-60i64..60).prop_map(|q| OclExpr::Lit(Value::Real(q as f64 / 4.0))),
    ];
    leaf.prop_recursive(2, 8, 2, |inner| {
        (any::<u8>(), inner.clone(), inner).prop_map(|(op, l, r)| {
            use mcdc_forge::ocl::ArithOp::*;
            let op = [Add, Sub, Mul, Div][op as usize % 4];
            OclExpr::Arith(op, Box::new(l), Box::new(r))
        })
    })
}

fn arb_relop() -> impl Strategy<Value = RelOp> {
    prop_oneof![
        Just(RelOp::Lt),
        Just(RelOp::Le),
        Just(RelOp::Gt),
        Just(RelOp::Ge),
        Just(RelOp::Eq),
        Just(RelOp::Ne),
    ]
}

fn arb_clause() -> impl Strategy<Value = OclExpr> {
    let undefined_guard = any::<bool>().prop_map(|b| {
        OclExpr::rel(
            RelOp::Eq,
            OclExpr::Call(Box::new(Call {
                receiver: Nav {
                    scope: NavScope::SelfObject,
                    path: vec!["part".into()],
                    target: NavTarget::Object {
                        class: "Part".into(),
                        optional: true,
                    },
                },
                filters: Vec::new(),
                op: CollOp::IsUndefined,
            })),
            OclExpr::Lit(Value::Bool(b)),
        )
    });
    let collection = (-3i64..4, any::<bool>()).prop_map(|(c, for_all)| {
        let body = OclExpr::rel(
            RelOp::Gt,
            element_nav("weight", int_attr()),
            OclExpr::Lit(Value::Int(c)),
        );
        let op = if for_all {
            CollOp::ForAll(body)
        } else {
            CollOp::Exists(body)
        };
        OclExpr::Call(Box::new(Call {
            receiver: Nav {
                scope: NavScope::SelfObject,
                path: vec!["parts".into()],
                target: NavTarget::Collection {
                    class: "Part".into(),
                },
            },
            filters: Vec::new(),
            op,
        }))
    });
    prop_oneof![
        6 => (arb_relop(), arb_numeric(), arb_numeric())
            .prop_map(|(op, l, r)| OclExpr::rel(op, l, r)),
        1 => Just(self_nav(&["active"], NavTarget::Attribute(mcdc_forge::AttrType::Boolean))),
        1 => Just(OclExpr::negation(self_nav(
            &["active"],
            NavTarget::Attribute(mcdc_forge::AttrType::Boolean),
        ))),
        1 => any::<bool>().prop_map(|eq| {
            let lhs = self_nav(
                &["mode"],
                NavTarget::Attribute(mcdc_forge::AttrType::Enumeration(vec![
                    "off".into(), "slow".into(), "fast".into(),
                ])),
            );
            let lit = OclExpr::EnumLit { enum_name: "Mode".into(), literal: "slow".into() };
            OclExpr::rel(if eq { RelOp::Eq } else { RelOp::Ne }, lhs, lit)
        }),
        1 => undefined_guard,
        1 => collection,
    ]
}

fn arb_body() -> impl Strategy<Value = OclExpr> {
    arb_clause().prop_recursive(4, 24, 2, |inner| {
        (any::<bool>(), inner.clone(), inner).prop_map(|(and, l, r)| {
            if and {
                OclExpr::and(l, r)
            } else {
                OclExpr::or(l, r)
            }
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, ..ProptestConfig::default() })]

    #[test]
    fn rendered_expressions_parse_back_structurally_equal(body in arb_body()) {
        let model = prop_model();
        let text = format!("context Ctx inv: {}", render_expr(&body));
        let parsed = parse(&text, &model).unwrap();
        prop_assert_eq!(&parsed[0].body, &body, "{}", text);
    }
}

// ── Configuration round-trip ───────────────────────────────────────────

#[derive(Debug, Clone)]
struct CfgShape {
    count: i64,
    ratio_quarters: i64,
    active: bool,
    mode: usize,
    part: Option<i64>,
    parts: Vec<i64>,
}

fn arb_cfg() -> impl Strategy<Value = CfgShape> {
    (
        -500i64..500,
        -40i64..40,
        any::<bool>(),
        0usize..3,
        proptest::option::of(-99i64..99),
        proptest::collection::vec(-99i64..99, 0..4),
    )
        .prop_map(
            |(count, ratio_quarters, active, mode, part, parts)| CfgShape {
                count,
                ratio_quarters,
                active,
                mode,
                part,
                parts,
            },
        )
}

fn build_cfg(model: &ClassModel, shape: &CfgShape) -> ObjectConfiguration {
    let mut cfg = instantiate_default(model, "Ctx").unwrap();
    let modes = ["off", "slow", "fast"];
    let attrs = &mut cfg.objects[0].attrs;
    attrs.insert("count".into(), Value::Int(shape.count));
    attrs.insert(
        "ratio".into(),
        Value::Real(shape.ratio_quarters as f64 / 4.0),
    );
    attrs.insert("active".into(), Value::Bool(shape.active));
    attrs.insert("mode".into(), Value::Enum(modes[shape.mode].into()));
    let spawn = |cfg: &mut ObjectConfiguration, id: String, weight: i64| {
        cfg.objects.push(ObjectInstance {
            id,
            class: "Part".into(),
            attrs: [("weight".to_string(), Value::Int(weight))].into(),
        });
    };
    if let Some(weight) = shape.part {
        spawn(&mut cfg, "part".into(), weight);
        for link in cfg.links.iter_mut() {
            if link.role == "part" {
                link.to = Some("part".into());
            }
        }
    }
    for (i, weight) in shape.parts.iter().enumerate() {
        let id = format!("parts{}", i + 1);
        spawn(&mut cfg, id.clone(), *weight);
        cfg.links.push(Link {
            role: "parts".into(),
            from: "ctx".into(),
            to: Some(id),
        });
    }
    cfg.params
        .insert("minDist".into(), Value::Int(shape.count / 2));
    cfg
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn configurations_round_trip_through_json(shape in arb_cfg()) {
        let model = prop_model();
        let cfg = build_cfg(&model, &shape);
        cfg.validate(&model).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        save_configuration(&cfg, &path).unwrap();
        let loaded = load_configuration(&model, &path).unwrap();
        prop_assert_eq!(loaded, cfg);
    }
}

// ── Variant fidelity over a tiny exhaustive domain ─────────────────────

fn fidelity_model() -> ClassModel {
    load_model_str(
        r#"{"classes": [{"name": "P", "attributes": [
            {"name": "x", "type": "Integer"}, {"name": "y", "type": "Integer"}],
            "constants": []}], "associations": []}"#,
    )
    .unwrap()
}

fn random_fidelity_predicate(rng: &mut rand::rngs::StdRng) -> String {
    use rand::Rng;
    fn clause(rng: &mut rand::rngs::StdRng) -> String {
        let attr = if rng.gen_bool(0.5) {
            "self.x"
        } else {
            "self.y"
        };
        let op = ["<", "<=", ">", ">=", "=", "<>"][rng.gen_range(0..6)];
        format!("{attr}{op}{}", rng.gen_range(-2..=2))
    }
    let a = clause(rng);
    let b = clause(rng);
    let c = clause(rng);
    match rand::Rng::gen_range(rng, 0..6) {
        0 => format!("{a} and ({b} or {c})"),
        1 => format!("({a} or {b}) and {c}"),
        2 => format!("{a} implies {b}"),
        3 => format!("{a} xor {b}"),
        4 => format!("{a} or ({b} and {c})"),
        _ => format!("not ({a}) or {b}"),
    }
}

#[test]
fn variant_solutions_induce_exactly_their_combination() {
    use rand::SeedableRng;
    let model = fidelity_model();
    let mut rng = rand::rngs::StdRng::seed_from_u64(99);
    let mut exercised = 0u64;
    for round in 0..300 {
        let text = format!(
            "F{round}: context P inv: {}",
            random_fidelity_predicate(&mut rng)
        );
        let constraints = parse(&text, &model).unwrap();
        let clauses = extract_clauses(&constraints[0]);
        let variants = match reformulate(&constraints[0]) {
            Ok(v) => v,
            // A clause that cannot independently affect the outcome (for
            // instance two copies of the same comparison) is reported, not
            // reformulated.
            Err(mcdc_forge::mcdc::McdcError::NoPairForClause(_)) => continue,
            Err(other) => panic!("{other}"),
        };
        let mut base = instantiate_default(&model, "P").unwrap();
        for x in -3..=3i64 {
            for y in -3..=3i64 {
                base.objects[0].attrs.insert("x".into(), Value::Int(x));
                base.objects[0].attrs.insert("y".into(), Value::Int(y));
                let ctx = EvalCtx::new(&model, "P", &base);
                for variant in &variants {
                    let solved = truth(&variant.expr, &ctx);
                    assert_eq!(evaluate(&variant.expr, &ctx).solved, solved, "{text}");
                    if solved {
                        let vector = clause_truth_vector(&clauses, &ctx);
                        assert_eq!(
                            vector,
                            variant.combination,
                            "{text} at x={x}, y={y}, variant {}",
                            variant.id()
                        );
                        exercised += 1;
                    }
                }
            }
        }
    }
    assert!(
        exercised > 5000,
        "only {exercised} satisfied variant points"
    );
}
