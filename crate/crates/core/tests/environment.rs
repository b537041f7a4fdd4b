mod common;

use masrest::environment::{ArtifactTemplate, Caller, Environment, TemplateDoc};
use masrest::term::{parse_term, Term};
use masrest::MasError;
use proptest::prelude::*;

fn world() -> Environment {
    let doc: TemplateDoc = serde_json::from_value(common::criteria::counter_template()).unwrap();
    let mut env = Environment::new();
    env.register_template(ArtifactTemplate::from_doc(doc).unwrap());
    env.create_workspace("w").unwrap();
    env.instantiate("w", "c", "counter").unwrap();
    env.join("agent", "w").unwrap();
    env.focus("agent", "w", "c").unwrap();
    env
}

fn op() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("inc".to_string()),
        (-3i32..4).prop_map(|k| format!("add({k})")),
        Just("add(X)".to_string()),
        Just("add(1, 2)".to_string()),
        Just("missing".to_string()),
    ]
}

fn props(env: &Environment) -> Vec<String> {
    env.artifact_view("w", "c").unwrap().properties
}

proptest! {
    /// Failed operations change nothing; successful ones keep properties
    /// ground; the same sequence gives the same state on a second world.
    #[test]
    fn operations_are_atomic_ground_and_deterministic(ops in prop::collection::vec(op(), 0..30)) {
        let (mut a, mut b) = (world(), world());
        let mut expected = 0i64;
        for o in &ops {
            let t: Term = parse_term(o).unwrap();
            let before = props(&a);
            let ra = a.invoke(&Caller::Agent("agent".into()), "w", "c", &t);
            let rb = b.invoke(&Caller::Management, "w", "c", &t);
            prop_assert_eq!(ra.is_ok(), rb.is_ok());
            match ra {
                Ok(percepts) => {
                    expected += match o.as_str() {
                        "inc" => 1,
                        _ => o[4..o.len() - 1].parse::<i64>().unwrap(),
                    };
                    prop_assert!(percepts.iter().all(|p| p.agent == "agent" && p.literal.is_ground()));
                }
                Err(e) => {
                    prop_assert!(matches!(e, MasError::OpFailure(_) | MasError::NotFound { .. }), "{}", e);
                    prop_assert_eq!(&props(&a), &before);
                }
            }
            prop_assert!(props(&a).iter().all(|p| parse_term(p).unwrap().is_ground()));
        }
        prop_assert_eq!(props(&a), vec![format!("count({expected})")]);
        prop_assert_eq!(a.workspace_view("w").unwrap().artifacts, b.workspace_view("w").unwrap().artifacts);
    }
}

#[test]
fn non_members_are_refused() {
    let mut env = world();
    let err = env.invoke(&Caller::Agent("stranger".into()), "w", "c", &Term::atom("inc")).unwrap_err();
    assert!(matches!(err, MasError::Precondition(_)));
    assert_eq!(props(&env), ["count(0)"]);
}

#[test]
fn focus_delivers_current_properties_and_changes_go_to_observers() {
    let mut env = world();
    env.join("late", "w").unwrap();
    let initial = env.focus("late", "w", "c").unwrap();
    assert_eq!(initial.len(), 1);
    assert!(initial[0].add && initial[0].literal.to_string() == "count(0)");
    let deltas = env.invoke(&Caller::Management, "w", "c", &Term::atom("inc")).unwrap();
    let mut seen: Vec<(String, bool, String)> = deltas.iter().map(|d| (d.agent.clone(), d.add, d.literal.to_string())).collect();
    seen.sort();
    assert_eq!(
        seen,
        [
            ("agent".to_string(), false, "count(0)".to_string()),
            ("agent".to_string(), true, "count(1)".to_string()),
            ("late".to_string(), false, "count(0)".to_string()),
            ("late".to_string(), true, "count(1)".to_string()),
        ]
    );
}
