use cakecut::io::{InstanceFile, SolverResult};
use cakecut::Scalar;
use cakecut_web::{labeling_svg_string, oracle_json, random_instance_json, solve_json};

fn result(text: &str) -> SolverResult {
    serde_json::from_str(text).unwrap()
}

#[test]
fn generated_instances_parse() {
    for (kind, agents) in [("grid", 4), ("density", 4), ("grid", 3)] {
        let text = random_instance_json(kind, agents, 5).unwrap();
        let inst = InstanceFile::parse(&text).unwrap();
        assert_eq!(inst.agents.len(), agents);
        assert_eq!(inst.seed, Some(5));
    }
    assert_eq!(random_instance_json("grid", 4, 9).unwrap(), random_instance_json("grid", 4, 9).unwrap());
}

#[test]
fn solve_meets_epsilon() {
    let eps: Scalar = "1/64".parse().unwrap();
    for (kind, agents, rw) in [("grid", 4, false), ("grid", 3, false), ("grid", 2, false), ("density", 4, true)] {
        let inst = random_instance_json(kind, agents, 2).unwrap();
        let r = result(&solve_json(&inst, "1/64", rw).unwrap());
        assert_eq!(r.assignment.len(), agents);
        assert!(r.max_envy <= eps, "{kind} {agents}: {}", r.max_envy);
    }
}

#[test]
fn oracle_reports_grid() {
    let inst = random_instance_json("density", 4, 1).unwrap();
    let r = result(&oracle_json(&inst, "1/16").unwrap());
    assert_eq!(r.grid_step, Some("1/16".parse().unwrap()));
    assert_eq!(r.division.len(), 3);
}

#[test]
fn errors_are_json() {
    let e = solve_json("{", "1/64", false).unwrap_err();
    let v: serde_json::Value = serde_json::from_str(&e).unwrap();
    assert_eq!(v["error"], "ParseError");
    let e = random_instance_json("cone", 4, 0).unwrap_err();
    assert!(e.contains("DomainError"));
}

#[test]
fn labeling_svg_window() {
    let svg = labeling_svg_string(2, "1,2", 0, 40, 0, 40).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(labeling_svg_string(2, "1,2", 0, 1000, 0, 10).is_err());
    assert!(labeling_svg_string(2, "1,x", 0, 10, 0, 10).is_err());
}
