//! The LP engine against an independent tableau simplex.

mod common;

use common::{random_lp, rng, tableau_lp, OracleLp};
use gridcomm_core::milp::{solve_lp, MilpModel, Relation, Status};

fn agree(model: &MilpModel) -> Result<(), String> {
    let got = solve_lp(model, true).map_err(|e| e.to_string())?;
    match (tableau_lp(model), got.status) {
        (OracleLp::Optimal(want), Status::Optimal) => {
            if (want - got.objective).abs() <= 1e-6 * want.abs().max(1.0) {
                Ok(())
            } else {
                Err(format!("objective {} vs oracle {want}", got.objective))
            }
        }
        (OracleLp::Infeasible, Status::Infeasible) | (OracleLp::Unbounded, Status::Unbounded) => Ok(()),
        (want, got) => Err(format!("status {got:?} vs oracle {want:?}")),
    }
}

#[test]
fn oracle_handles_textbook_cases() {
    let mut m = MilpModel::new();
    let x = m.add_var("x", 0.0, 1.0).unwrap();
    m.set_objective([(x, -1.0)]).unwrap();
    assert_eq!(tableau_lp(&m), OracleLp::Optimal(-1.0));

    let mut m = MilpModel::new();
    let x = m.add_var("x", 0.0, f64::INFINITY).unwrap();
    m.add_constraint("a", [(x, 1.0)], Relation::Ge, 2.0).unwrap();
    m.add_constraint("b", [(x, 1.0)], Relation::Le, 1.0).unwrap();
    assert_eq!(tableau_lp(&m), OracleLp::Infeasible);

    let mut m = MilpModel::new();
    let x = m.add_var("x", 0.0, f64::INFINITY).unwrap();
    m.set_objective([(x, -1.0)]).unwrap();
    assert_eq!(tableau_lp(&m), OracleLp::Unbounded);
}

#[test]
fn two_hundred_random_lps_match_the_oracle() {
    let mut failures = Vec::new();
    let mut optimal = 0;
    for seed in 0..200u64 {
        let model = random_lp(&mut rng(seed), 12, 8);
        if let OracleLp::Optimal(_) = tableau_lp(&model) {
            optimal += 1;
        }
        if let Err(e) = agree(&model) {
            failures.push(format!("seed {seed}: {e}"));
        }
    }
    assert!(failures.is_empty(), "{failures:#?}");
    // the generator should not produce only degenerate outcomes
    assert!(optimal >= 60, "only {optimal} optimal instances");
}
