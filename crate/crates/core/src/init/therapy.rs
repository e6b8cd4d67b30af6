/// Weight-based starting therapy for type 2 subjects:
/// `(TDD U/day, basal U/day, ICR g/U, CF (mg/dL)/U)`.
///
/// TDD is 0.5 U/kg split half basal; ICR and CF follow the 500 and 1800 rules.
pub fn t2d_initial_therapy(weight_kg: f64) -> (f64, f64, f64, f64) {
    assert!(weight_kg > 0.0, "weight must be positive");
    let tdd = 0.5 * weight_kg;
    (tdd, 0.5 * tdd, 500.0 / tdd, 1800.0 / tdd)
}
