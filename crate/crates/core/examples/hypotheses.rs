//! Standing-hypothesis checks for the three presets.

use vecgas::domain::{validate_hypotheses, CompactSetTuple, InteractionMatrix};

fn main() -> vecgas::Result<()> {
    let cases = [
        ("Angelesco, touching intervals", InteractionMatrix::angelesco(2), [(-1.0, 0.0), (0.0, 1.0)]),
        ("Nikishin, disjoint intervals", InteractionMatrix::nikishin(2), [(0.0, 1.0), (-2.0, -1.0)]),
        ("Nikishin, overlapping intervals", InteractionMatrix::nikishin(2), [(-1.0, 1.0), (0.0, 2.0)]),
    ];
    for (name, c, sets) in cases {
        let k = CompactSetTuple::intervals(&sets, 50)?;
        let report = validate_hypotheses(&c, &k)?;
        if report.passed() {
            println!("{name}: ok");
        } else {
            println!("{name}: fails {:?}", report.failures());
        }
    }
    Ok(())
}
