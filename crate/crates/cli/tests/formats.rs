use std::path::Path;

use npc_cli::formats::{bundle, circuit, dataset, model, rules, world};
use npc_cli::CliError;
use npc_core::attribute::{sample_attribute_values, AttributeModel};
use npc_core::circuit::{random_circuit, LeafAssignment};
use npc_core::construction::compile_rules;
use npc_core::npc::NpcModel;
use npc_core::synth::{generate_synthetic, SyntheticSpec};
use npc_core::AttributeSchema;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn three_rule_path() -> &'static Path {
    Path::new(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/data/three_rule.rules"
    ))
}

#[test]
fn circuit_round_trip_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let p = Path::new("mem.circuit");
    for _ in 0..30 {
        let schema = AttributeSchema::with_cardinalities(&[3, 2, 4], 3).unwrap();
        let c = random_circuit(&mut rng, &schema, 4, true).unwrap();
        let back = circuit::from_text(p, &circuit::to_text(&c)).unwrap();
        assert_eq!(back, c);
        for _ in 0..10 {
            let a = [
                rng.random_range(0..3),
                rng.random_range(0..2),
                rng.random_range(0..4),
                rng.random_range(0..3),
            ];
            let ev = LeafAssignment::observed(&a);
            assert_eq!(
                c.evaluate(&ev).unwrap().to_bits(),
                back.evaluate(&ev).unwrap().to_bits()
            );
        }
    }
}

#[test]
fn three_rule_set_round_trip() {
    let rs = rules::read(three_rule_path()).unwrap();
    assert_eq!(rs.len(), 3);
    let c = compile_rules(&rs).unwrap();
    let text = circuit::to_text(&c);
    let back = circuit::from_text(Path::new("f2"), &text).unwrap();
    assert!(back.validate().is_valid());
    assert_eq!(back, c);
    assert_eq!(
        rules::from_text(Path::new("r"), &rules::to_text(&rs)).unwrap(),
        rs
    );
}

fn parse_err(text: &str) -> String {
    match circuit::from_text(Path::new("bad"), text) {
        Err(e) => e.to_string(),
        Ok(_) => panic!("accepted:\n{text}"),
    }
}

const HEAD: &str = "npc-circuit 1\nattribute A 0 1\nclass Y 0 1\n";

#[test]
fn malformed_circuits_are_rejected() {
    let arity = format!(
        "{HEAD}nodes 4\n0 leaf A 0\n1 leaf A 1\n2 leaf A 1\n3 sum 0 1 2 ; 0.5 0.5\nroot 3\n"
    );
    assert!(parse_err(&arity).contains("node 3: sum has 3 children but 2 weights"));
    let cycle = format!("{HEAD}nodes 2\n0 product 1\n1 product 0\nroot 0\n");
    assert!(matches!(
        circuit::from_text(Path::new("bad"), &cycle),
        Err(CliError::Model {
            source: npc_core::Error::CycleDetected(_),
            ..
        })
    ));
    let dangling = format!("{HEAD}nodes 2\n0 leaf A 0\n1 product 0 7\nroot 1\n");
    assert!(parse_err(&dangling).contains("child 7 does not exist"));
    let kind = format!("{HEAD}nodes 1\n0 max 0\nroot 0\n");
    assert!(parse_err(&kind).contains("unknown node kind"));
    assert!(parse_err("npc-circuit 2\n").contains("unsupported"));
    // Well-formed but not smooth: an invariant violation, exit code 3.
    let rough = format!(
        "{HEAD}nodes 5\n0 leaf A 0\n1 leaf Y 0\n2 leaf Y 1\n3 product 0 1\n4 sum 3 2 ; 0.5 0.5\nroot 4\n"
    );
    let e = circuit::from_text(Path::new("bad"), &rough).unwrap_err();
    assert_eq!(e.exit_code(), 3);
}

#[test]
fn malformed_rules_are_rejected() {
    let head = "npc-rules 1\nattribute A 0 1\nclass Y 0 1\n";
    for body in [
        "rule 1 2 => 0\n",
        "rule x 0 => 0\n",
        "rule 1 0 0\n",
        "rule -1 0 => 1\n",
    ] {
        let e = rules::from_text(Path::new("r"), &format!("{head}{body}")).unwrap_err();
        assert_eq!(e.exit_code(), 2, "{body}: {e}");
    }
}

#[test]
fn datasets_and_models_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate_synthetic(&SyntheticSpec::mnist_addition(60, 0.2, 3)).unwrap();
    let p = dir.path().join("train.jsonl");
    dataset::write(&p, &data.train).unwrap();
    assert_eq!(dataset::read(&p).unwrap(), data.train);

    let sampled = sample_attribute_values(&data.train, 4).unwrap();
    let sp = dir.path().join("sampled.jsonl");
    dataset::write_sampled(&sp, &sampled).unwrap();
    let back = dataset::read_sampled(&sp).unwrap();
    assert_eq!(back.rows, sampled.rows);
    assert!(dataset::read(&sp).is_err());

    let mut m = AttributeModel::zeros(data.schema.clone(), data.train.feature_dim);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let params: Vec<f64> = (0..m.num_parameters())
        .map(|_| rng.random_range(-1.0..1.0) / 3.0)
        .collect();
    m.set_parameters(&params).unwrap();
    let mp = dir.path().join("m.json");
    model::write(&mp, &m).unwrap();
    assert_eq!(model::read(&mp).unwrap(), m);

    let npc = NpcModel::new(m, compile_rules(&data.rule_set().unwrap()).unwrap()).unwrap();
    let bp = dir.path().join("bundle");
    bundle::write(&bp, &npc).unwrap();
    let loaded = bundle::read(&bp).unwrap();
    assert_eq!(loaded.attribute_model(), npc.attribute_model());
    assert_eq!(loaded.circuit(), npc.circuit());

    let wp = dir.path().join("world.json");
    let w = world::World::from_synthetic(&data);
    world::write(&wp, &w).unwrap();
    assert_eq!(world::read(&wp).unwrap(), w);
}

#[test]
fn missing_bundle_is_a_missing_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let e = bundle::read(&dir.path().join("nope")).unwrap_err();
    assert!(matches!(e, CliError::MissingArtifact(_)));
    assert_eq!(e.exit_code(), 2);
}
